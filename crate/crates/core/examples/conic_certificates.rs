//! A tiny parametric conic program: solve it, read off the infeasibility
//! certificate, and turn it into an affine cut in the parameter.

use hostcap::conic::{solve, write_dump, AffineRow, ConicProgram, EqualityRow, RowClass, SocBlock, SolverOptions};

fn main() -> hostcap::Result<()> {
    // ||(x, 1)|| <= 2 and x = psi: feasible exactly for |psi| <= sqrt(3)
    let mut p = ConicProgram::new();
    let x = p.add_generic_var(0.0);
    p.psi = vec![2.0];
    p.equalities.push(EqualityRow {
        coeffs: vec![(x, 1.0)],
        rhs: 0.0,
        psi_coeffs: vec![(0, 1.0)],
        class: RowClass::Generic,
    });
    p.add_cone(
        SocBlock {
            head: AffineRow::constant(2.0),
            tail: vec![AffineRow::var(x), AffineRow::constant(1.0)],
            class: RowClass::Generic,
        },
        RowClass::Generic,
    );
    let out = solve(&p, &SolverOptions::default());
    println!("status at psi = 2: {:?}", out.status);
    if let Some(cert) = &out.certificate {
        let (a, b) = p.psi_terms().affine_form(cert)?;
        println!("cut: {:.6} * psi <= {:.6}  (psi <= {:.6})", a[0], b, b / a[0]);
    }
    print!("{}", write_dump(&p));
    Ok(())
}
