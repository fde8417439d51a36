use std::sync::OnceLock;

use proptest::prelude::*;

use hostcap::accept::{make_cut, AcceptOptions, Cut};
use hostcap::assemble::{build_acceptability, RiskParams};
use hostcap::conic::{dual_objective, solve, Certificate, ConicProgram, SolveStatus, SolverOptions};
use hostcap::cvar::{cvar, cvar_objective, violation_fraction};
use hostcap::demo::three_bus_instance;
use hostcap::network::{solve_power_flow_oracle, NetworkSpec, OracleOptions, RadialNetwork};
use hostcap::scenario::{read_scenarios, ScenarioSet};

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, 1..60)
}

fn level() -> impl Strategy<Value = f64> {
    0.0..0.999f64
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + scale)
}

fn max_abs(z: &[f64]) -> f64 {
    z.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

proptest! {
    #[test]
    fn cvar_is_monotone_and_bounded(z in sample(), d1 in level(), d2 in level()) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let mean = cvar(&z, 0.0).unwrap();
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (a, b) = (cvar(&z, lo).unwrap(), cvar(&z, hi).unwrap());
        prop_assert!(a <= b);
        prop_assert!(mean <= a && b <= max);
    }

    #[test]
    fn cvar_is_translation_invariant(z in sample(), d in level(), c in -50.0..50.0f64) {
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        let lhs = cvar(&shifted, d).unwrap();
        let rhs = cvar(&z, d).unwrap() + c;
        prop_assert!(close(lhs, rhs, max_abs(&z) + c.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn cvar_is_positively_homogeneous(z in sample(), d in level(), a in 0.0..20.0f64) {
        let scaled: Vec<f64> = z.iter().map(|v| a * v).collect();
        let lhs = cvar(&scaled, d).unwrap();
        let rhs = a * cvar(&z, d).unwrap();
        prop_assert!(close(lhs, rhs, a * max_abs(&z)), "{lhs} vs {rhs}");
    }

    #[test]
    fn cvar_is_subadditive(pairs in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 1..60), d in level()) {
        let (z1, z2): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let sum: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a + b).collect();
        let lhs = cvar(&sum, d).unwrap();
        let rhs = cvar(&z1, d).unwrap() + cvar(&z2, d).unwrap();
        prop_assert!(lhs <= rhs + 1e-12 * (1.0 + max_abs(&z1) + max_abs(&z2)), "{lhs} > {rhs}");
    }

    #[test]
    fn nonpositive_cvar_limits_violations(z in sample(), d in level()) {
        if cvar(&z, d).unwrap() <= 0.0 {
            prop_assert!(violation_fraction(&z, 0.0) <= 1.0 - d);
        }
    }

    #[test]
    fn cvar_lower_bounds_the_variational_objective(z in sample(), d in level(), t in -120.0..120.0f64) {
        let c = cvar(&z, d).unwrap();
        let f = cvar_objective(&z, d, t).unwrap();
        prop_assert!(c <= f + 1e-12 * (1.0 + f.abs()), "cvar {c} above objective {f} at t={t}");
    }

    #[test]
    fn second_order_cone_is_self_dual(
        y in prop::collection::vec(-10.0..10.0f64, 1..8),
        extra_y in 0.0..5.0f64,
        dir in prop::collection::vec(-10.0..10.0f64, 1..8),
        extra_mu in 0.0..5.0f64,
    ) {
        let k = y.len().min(dir.len());
        let (y, mu1) = (&y[..k], &dir[..k]);
        let upsilon = y.iter().map(|v| v * v).sum::<f64>().sqrt() + extra_y;
        let mu2 = mu1.iter().map(|v| v * v).sum::<f64>().sqrt() + extra_mu;
        let inner = y.iter().zip(mu1).map(|(a, b)| a * b).sum::<f64>() + upsilon * mu2;
        prop_assert!(inner >= -1e-12 * (1.0 + upsilon * mu2));
    }
}

fn tree(parents: &[usize], lines: &[(f64, f64)]) -> RadialNetwork {
    let n = parents.len() + 1;
    let edges = parents
        .iter()
        .zip(lines)
        .enumerate()
        .map(|(i, (&p, &(r, x)))| (1 + p % (i + 1), i + 2, r, x, 5.0))
        .collect();
    RadialNetwork::new(NetworkSpec {
        buses: n,
        edges,
        w_min: vec![0.8; n],
        w_max: vec![1.2; n],
        psi_max: vec![1.0; n - 1],
        eta_g: vec![0.0; n - 1],
        w_substation: 1.0,
    })
    .unwrap()
}

fn tree_case() -> impl Strategy<Value = (RadialNetwork, Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|m| {
        (
            prop::collection::vec(0usize..100, m),
            prop::collection::vec((0.002..0.05f64, 0.002..0.05f64), m),
            prop::collection::vec(-0.6..0.6f64, m),
            prop::collection::vec(-0.3..0.3f64, m),
        )
            .prop_map(|(parents, lines, p, q)| (tree(&parents, &lines), p, q))
    })
}

proptest! {
    #[test]
    fn incidence_rows_sum_to_zero((net, _, _) in tree_case()) {
        let inc = net.incidence();
        for row in inc.b.row_iter() {
            prop_assert_eq!(row.iter().sum::<f64>(), 0.0);
            prop_assert_eq!(row.iter().filter(|v| **v == 1.0).count(), 1);
            prop_assert_eq!(row.iter().filter(|v| **v == -1.0).count(), 1);
        }
    }

    #[test]
    fn oracle_solutions_satisfy_branch_flow_and_are_tight((net, p, q) in tree_case()) {
        if let Ok(state) = solve_power_flow_oracle(&net, &p, &q, &OracleOptions::default()) {
            for r in net.flow_residuals(&p, &q, &state) {
                prop_assert!(r <= 1e-8, "residual {r}");
            }
            for (e, ln) in net.lines().iter().enumerate() {
                let gap = state.w[ln.from] * state.l[e] - state.p[e] * state.p[e] - state.q[e] * state.q[e];
                prop_assert!(gap.abs() <= 1e-8, "gap {gap}");
                prop_assert!(state.l[e] >= 0.0);
            }
            prop_assert!(state.w.iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn scenario_csv_round_trips_bit_exactly(
        rows in prop::collection::vec(prop::collection::vec((0.0..1.0f64, -2.0..2.0f64, -1e-3..1e3f64), 3), 1..20)
    ) {
        let mut alpha = Vec::new();
        let mut p_d = Vec::new();
        let mut q_d = Vec::new();
        for row in &rows {
            for &(a, p, q) in row {
                alpha.push(a);
                p_d.push(p);
                q_d.push(q);
            }
        }
        let s = ScenarioSet::new(3, alpha, p_d, q_d).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = read_scenarios(buf.as_slice(), 4).unwrap();
        prop_assert_eq!(back.digest(), s.digest());
        prop_assert_eq!(back, s);
    }

    #[test]
    fn subsamples_are_rows_of_the_input(k in 1usize..40, frac in 0.0..1.0f64, seed in any::<u64>()) {
        let (_, s) = three_bus_instance(k, 3).unwrap();
        let m = 1 + ((k - 1) as f64 * frac) as usize;
        let sub = s.subsample(m, seed).unwrap();
        prop_assert_eq!(sub.len(), m);
        for i in 0..m {
            let found = (0..k).any(|j| s.alpha(j) == sub.alpha(i) && s.p_d(j) == sub.p_d(i) && s.q_d(j) == sub.q_d(i));
            prop_assert!(found);
        }
    }
}

struct Infeasible {
    prog: ConicProgram,
    cert: Certificate,
    cut: Cut,
}

/// A certificate and cut from an unacceptable corner of the demo box.
fn infeasible_corner() -> &'static Infeasible {
    static CELL: OnceLock<Infeasible> = OnceLock::new();
    CELL.get_or_init(|| {
        let (net, scen) = three_bus_instance(20, 11).unwrap();
        let risk = RiskParams::uniform(0.8).unwrap();
        let psi = net.psi_max().to_vec();
        let prog = build_acceptability(&net, &scen, &risk, &psi).unwrap();
        let out = solve(&prog, &SolverOptions::default());
        assert_eq!(out.status, SolveStatus::Infeasible, "{}", out.message);
        let cert = out.certificate.unwrap().normalized();
        let cut = make_cut(&prog, &cert, &psi, &AcceptOptions::default()).unwrap();
        Infeasible { prog, cert, cut }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certificates_never_cut_off_acceptable_points(a in 0.0..4.0f64, b in 0.0..4.0f64) {
        let inf = infeasible_corner();
        let (net, scen) = three_bus_instance(20, 11).unwrap();
        let risk = RiskParams::uniform(0.8).unwrap();
        let psi = [a, b];
        let prog = build_acceptability(&net, &scen, &risk, &psi).unwrap();
        let out = solve(&prog, &SolverOptions::default());
        if out.status == SolveStatus::Optimal {
            let d = dual_objective(&inf.cert, &inf.prog.psi_terms(), &psi).unwrap();
            prop_assert!(d <= 1e-7, "dual objective {d} at acceptable {psi:?}");
            prop_assert!(inf.cut.value(&psi) <= 1e-8);
        }
    }

    #[test]
    fn dual_objective_is_affine_in_psi(a in prop::array::uniform2(-5.0..5.0f64), b in prop::array::uniform2(-5.0..5.0f64), t in 0.0..1.0f64) {
        let inf = infeasible_corner();
        let terms = inf.prog.psi_terms();
        let d = |p: &[f64]| dual_objective(&inf.cert, &terms, p).unwrap();
        let mid = [t * a[0] + (1.0 - t) * b[0], t * a[1] + (1.0 - t) * b[1]];
        let lhs = d(&mid);
        let rhs = t * d(&a) + (1.0 - t) * d(&b);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }
}
