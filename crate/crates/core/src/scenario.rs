//! Scenario data: per-bus irradiance coefficients and demands.
//!
//! CSV layout, one scenario per row, `3 (n - 1)` columns:
//! `alpha_2..alpha_n, p_d_2..p_d_n, q_d_2..q_d_n`. A header row is optional and
//! detected by a non-numeric first row.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// `K` equally weighted scenarios over `m = n - 1` non-substation buses.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    m: usize,
    alpha: Vec<f64>,
    p_d: Vec<f64>,
    q_d: Vec<f64>,
}

impl ScenarioSet {
    /// Build from row-major `K x m` matrices.
    pub fn new(m: usize, alpha: Vec<f64>, p_d: Vec<f64>, q_d: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::dims("scenario width must be positive"));
        }
        if alpha.is_empty() {
            return Err(Error::EmptyFile);
        }
        if alpha.len() % m != 0 || p_d.len() != alpha.len() || q_d.len() != alpha.len() {
            return Err(Error::dims(format!(
                "matrices of sizes {}/{}/{} are not K x {m}",
                alpha.len(),
                p_d.len(),
                q_d.len()
            )));
        }
        if let Some(i) = alpha.iter().position(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::parse(
                None,
                format!("irradiance coefficient {} in scenario {} is not a finite nonnegative number", alpha[i], i / m + 1),
            ));
        }
        if p_d.iter().chain(&q_d).any(|v| !v.is_finite()) {
            return Err(Error::parse(None, "demand values must be finite"));
        }
        Ok(ScenarioSet { m, alpha, p_d, q_d })
    }

    /// Build from per-scenario rows of `(alpha, p_d, q_d)`.
    pub fn from_rows(rows: &[(Vec<f64>, Vec<f64>, Vec<f64>)]) -> Result<Self> {
        let m = rows.first().map(|r| r.0.len()).ok_or(Error::EmptyFile)?;
        let mut alpha = Vec::with_capacity(rows.len() * m);
        let mut p_d = Vec::with_capacity(rows.len() * m);
        let mut q_d = Vec::with_capacity(rows.len() * m);
        for (a, p, q) in rows {
            if a.len() != m || p.len() != m || q.len() != m {
                return Err(Error::dims("scenario rows have inconsistent widths"));
            }
            alpha.extend_from_slice(a);
            p_d.extend_from_slice(p);
            q_d.extend_from_slice(q);
        }
        ScenarioSet::new(m, alpha, p_d, q_d)
    }

    /// Number of scenarios `K`.
    pub fn len(&self) -> usize {
        self.alpha.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Number of non-substation buses covered by each scenario.
    pub fn width(&self) -> usize {
        self.m
    }

    pub fn alpha(&self, k: usize) -> &[f64] {
        &self.alpha[k * self.m..(k + 1) * self.m]
    }

    pub fn p_d(&self, k: usize) -> &[f64] {
        &self.p_d[k * self.m..(k + 1) * self.m]
    }

    pub fn q_d(&self, k: usize) -> &[f64] {
        &self.q_d[k * self.m..(k + 1) * self.m]
    }

    /// Keep only the scenarios at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut alpha = Vec::with_capacity(indices.len() * self.m);
        let mut p_d = Vec::with_capacity(indices.len() * self.m);
        let mut q_d = Vec::with_capacity(indices.len() * self.m);
        for &k in indices {
            if k >= self.len() {
                return Err(Error::BadCount {
                    requested: k + 1,
                    available: self.len(),
                });
            }
            alpha.extend_from_slice(self.alpha(k));
            p_d.extend_from_slice(self.p_d(k));
            q_d.extend_from_slice(self.q_d(k));
        }
        ScenarioSet::new(self.m, alpha, p_d, q_d)
    }

    /// `m` scenarios drawn uniformly without replacement, kept in file order.
    pub fn subsample(&self, m: usize, seed: u64) -> Result<Self> {
        subsample(self, m, seed)
    }

    /// SHA-256 over the dimensions and the bit patterns of every value.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"hostcap-scenarios-v1");
        h.update((self.m as u64).to_le_bytes());
        h.update((self.len() as u64).to_le_bytes());
        for v in self.alpha.iter().chain(&self.p_d).chain(&self.q_d) {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let m = self.m;
        let header: Vec<String> = (2..=m + 1)
            .map(|b| format!("alpha_{b}"))
            .chain((2..=m + 1).map(|b| format!("p_d_{b}")))
            .chain((2..=m + 1).map(|b| format!("q_d_{b}")))
            .collect();
        w.write_record(&header).map_err(csv_err)?;
        for k in 0..self.len() {
            let row: Vec<String> = self
                .alpha(k)
                .iter()
                .chain(self.p_d(k))
                .chain(self.q_d(k))
                .map(|v| format!("{v}"))
                .collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::parse(None, e.to_string()))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize);
    Error::parse(line, e.to_string())
}

/// Parse scenarios for an `n`-bus network from CSV text.
pub fn read_scenarios<R: Read>(input: R, n: usize) -> Result<ScenarioSet> {
    if n < 2 {
        return Err(Error::dims("network needs at least two buses"));
    }
    let m = n - 1;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut alpha = Vec::new();
    let mut p_d = Vec::new();
    let mut q_d = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if first => {
                first = false;
                continue;
            }
            Err(e) => return Err(Error::parse(line, format!("non-numeric field: {e}"))),
        };
        first = false;
        if values.len() != 3 * m {
            return Err(Error::dims(format!(
                "line {} has {} columns, expected 3(n-1) = {}",
                line.unwrap_or(0),
                values.len(),
                3 * m
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::parse(line, format!("non-finite value {v}")));
        }
        if let Some(a) = values[..m].iter().find(|a| **a < 0.0) {
            return Err(Error::parse(line, format!("negative irradiance coefficient {a}")));
        }
        alpha.extend_from_slice(&values[..m]);
        p_d.extend_from_slice(&values[m..2 * m]);
        q_d.extend_from_slice(&values[2 * m..]);
    }
    if alpha.is_empty() {
        return Err(Error::EmptyFile);
    }
    ScenarioSet::new(m, alpha, p_d, q_d)
}

/// Load a scenario CSV for an `n`-bus network.
pub fn load_scenarios(path: impl AsRef<Path>, n: usize) -> Result<ScenarioSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_scenarios(std::io::BufReader::new(file), n)
}

/// `m` rows of `s` drawn uniformly without replacement.
pub fn subsample(s: &ScenarioSet, m: usize, seed: u64) -> Result<ScenarioSet> {
    let k = s.len();
    if m < 1 || m > k {
        return Err(Error::BadCount {
            requested: m,
            available: k,
        });
    }
    let idx = SeededRng::new(seed).sample_indices(k, m);
    s.select(&idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_file() {
        let s = read_scenarios("0.8,1.0,0.5\n".as_bytes(), 2).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.alpha(0), &[0.8]);
        assert_eq!(s.p_d(0), &[1.0]);
        assert_eq!(s.q_d(0), &[0.5]);
    }

    #[test]
    fn header_and_scientific_notation() {
        let text = "a,p,q\n8e-1, 1.0E0 ,5e-1\n0,0,0\n";
        let s = read_scenarios(text.as_bytes(), 2).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.alpha(0), &[0.8]);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(
            read_scenarios("-0.1,1,0.5\n".as_bytes(), 2),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            read_scenarios("0.1,1\n".as_bytes(), 2),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            read_scenarios("0.1,1,1\n0.2,x,1\n".as_bytes(), 2),
            Err(Error::Parse { line: Some(2), .. })
        ));
        assert!(matches!(
            read_scenarios("a,b,c\n".as_bytes(), 2),
            Err(Error::EmptyFile)
        ));
        assert!(matches!(read_scenarios("".as_bytes(), 2), Err(Error::EmptyFile)));
        assert!(matches!(
            read_scenarios("nan,1,1\n0.1,1,1\n".as_bytes(), 2),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = ScenarioSet::from_rows(&[
            (vec![0.1 + 0.2, 1.0 / 3.0], vec![1e-300, -0.0], vec![2.5e10, 7.0]),
            (vec![0.0, 5e-324], vec![0.3, 0.7], vec![0.1, 0.2]),
        ])
        .unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = read_scenarios(buf.as_slice(), 3).unwrap();
        assert_eq!(s.digest(), back.digest());
    }

    #[test]
    fn subsample_contract() {
        let s = ScenarioSet::from_rows(&[
            (vec![0.1], vec![1.0], vec![0.1]),
            (vec![0.2], vec![2.0], vec![0.2]),
            (vec![0.3], vec![3.0], vec![0.3]),
        ])
        .unwrap();
        assert_eq!(subsample(&s, 3, 99).unwrap(), s);
        let a = subsample(&s, 1, 5).unwrap();
        let b = subsample(&s, 1, 5).unwrap();
        assert_eq!(a, b);
        assert!(matches!(subsample(&s, 0, 1), Err(Error::BadCount { .. })));
        assert!(matches!(subsample(&s, 4, 1), Err(Error::BadCount { .. })));
    }
}
