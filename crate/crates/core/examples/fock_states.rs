//! Displacement operators, displaced Fock states and their overlaps.

use num_complex::Complex64;
use qcfd::fockspace::{build_field_state, displaced_fock_overlap, displacement_matrix, laguerre, FieldStateSpec};

fn main() -> qcfd::Result<()> {
    let beta = Complex64::new(1.2, -0.7);
    let d = displacement_matrix(beta, 60)?;
    println!("unitarity defect of D({beta}) at dim 60: {:.2e}", d.unitarity_defect());

    println!("\n  m  n   <m|D|n> analytic            matrix");
    for (m, n) in [(0, 0), (2, 0), (0, 3), (4, 4), (7, 2)] {
        let a = displaced_fock_overlap(m, n, beta)?;
        let b = d.matrix()[(m, n)];
        println!("{m:>3}{n:>3}   {:>15.12}{:+.12}i   {:.12}{:+.12}i", a.re, a.im, b.re, b.im);
    }

    println!("\nL_n(x) at x = 1: {:?}", (0..5).map(|n| laguerre(n, 0, 1.0)).collect::<Vec<_>>());

    let alpha = Complex64::new(10.0, 0.0);
    for n in [0, 1, 2, 10] {
        let v = build_field_state(&FieldStateSpec::displaced_fock(alpha, n), 240)?;
        println!(
            "|alpha=10, n={n:>2}>: <a^dag a> = {:.6}, truncation loss {:.1e}",
            v.mean_photon_number(),
            v.truncation_loss()
        );
    }

    let sup = FieldStateSpec::two_level_superposition(alpha, 0.0);
    let v = build_field_state(&sup, 240)?;
    println!("(|10,0> + |10,1>)/sqrt2: <a> = {:.6}", v.mean_annihilation());
    Ok(())
}
