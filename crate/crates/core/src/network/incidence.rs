use nalgebra::{DMatrix, DVector};

use super::TreeOrientation;
use crate::error::Result;

/// Signed edge-to-node incidence matrix and its positive/negative parts.
///
/// Row `e` holds `+1` at the sending bus and `-1` at the receiving bus of
/// line `e`. `pi` lists the bus indices kept after dropping the substation
/// row, i.e. `1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceDecomposition {
    pub b: DMatrix<f64>,
    pub b_plus: DMatrix<f64>,
    pub b_minus: DMatrix<f64>,
    pub pi: Vec<usize>,
}

/// Incidence matrix of `n` buses joined by 1-based `(from, to)` pairs, in the
/// orientation given. Fails unless the pairs form a spanning tree.
pub fn build_incidence(n: usize, edges: &[(usize, usize)]) -> Result<IncidenceDecomposition> {
    TreeOrientation::from_edges(n, edges)?;
    let m = edges.len();
    let mut b_plus = DMatrix::zeros(m, n);
    let mut b_minus = DMatrix::zeros(m, n);
    for (e, &(from, to)) in edges.iter().enumerate() {
        b_plus[(e, from - 1)] = 1.0;
        b_minus[(e, to - 1)] = 1.0;
    }
    Ok(IncidenceDecomposition {
        b: &b_plus - &b_minus,
        b_plus,
        b_minus,
        pi: (1..n).collect(),
    })
}

impl IncidenceDecomposition {
    pub fn buses(&self) -> usize {
        self.b.ncols()
    }

    /// Drop the substation entry of a per-bus vector.
    pub fn project(&self, v: &DVector<f64>) -> Vec<f64> {
        self.pi.iter().map(|&i| v[i]).collect()
    }

    /// `pi[B+^T F - B-^T (F - Z .* L)]`: net flow leaving each non-substation
    /// bus for line flows `flow`, series coefficient `z` and squared currents `l`.
    pub fn balance(&self, flow: &[f64], z: &[f64], l: &[f64]) -> Vec<f64> {
        let f = DVector::from_column_slice(flow);
        let recv = DVector::from_iterator(flow.len(), (0..flow.len()).map(|e| flow[e] - z[e] * l[e]));
        let node = self.b_plus.transpose() * f - self.b_minus.transpose() * recv;
        self.project(&node)
    }

    /// `B W` per line.
    pub fn voltage_difference(&self, w: &[f64]) -> Vec<f64> {
        (&self.b * DVector::from_column_slice(w)).iter().copied().collect()
    }

    /// `B+ W`, the sending-end squared voltage per line.
    pub fn sending_voltage(&self, w: &[f64]) -> Vec<f64> {
        (&self.b_plus * DVector::from_column_slice(w)).iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn two_bus_and_path() {
        let inc = build_incidence(2, &[(1, 2)]).unwrap();
        assert_eq!(inc.b, DMatrix::from_row_slice(1, 2, &[1.0, -1.0]));

        let inc = build_incidence(3, &[(1, 2), (2, 3)]).unwrap();
        assert_eq!(
            inc.b,
            DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0])
        );
        assert_eq!(inc.b, &inc.b_plus - &inc.b_minus);
        assert_eq!(inc.pi, vec![1, 2]);
    }

    #[test]
    fn cycle_is_rejected() {
        let err = build_incidence(3, &[(1, 2), (1, 3), (2, 3)]).unwrap_err();
        assert!(matches!(err, Error::GraphNotTree(_)));
        let err = build_incidence(4, &[(1, 2), (2, 1), (3, 4)]).unwrap_err();
        assert!(matches!(err, Error::GraphNotTree(_)));
    }

    #[test]
    fn rows_sum_to_zero_and_balance_shape() {
        let inc = build_incidence(5, &[(1, 2), (2, 3), (2, 4), (4, 5)]).unwrap();
        for row in inc.b.row_iter() {
            assert_eq!(row.sum(), 0.0);
            assert_eq!(row.iter().filter(|v| **v == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|v| **v == -1.0).count(), 1);
        }
        let bal = inc.balance(&[1.0, 0.5, 0.25, 0.1], &[0.0; 4], &[0.0; 4]);
        assert_eq!(bal.len(), 4);
        // bus 2 receives 1.0 and sends 0.5 + 0.25
        assert!((bal[0] - (0.75 - 1.0)).abs() < 1e-15);
    }
}
