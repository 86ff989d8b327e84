//! Quasienergies and Fourier coefficients of the semiclassical problem.

use qcfd::fbrwa::lambda_eff;
use qcfd::floquet::{floquet_solve, shirley_solve};
use qcfd::fullmodel::{Coupling, ModelParams};

fn main() -> qcfd::Result<()> {
    let alpha = 10.0;
    println!("coupling  lambda   epsilon   q+            lambda_eff    |numerical - extended|");
    for coupling in [Coupling::Jcm, Coupling::Rabi] {
        for lambda in [0.002, 0.005, 0.01, 0.02] {
            let p = ModelParams::resonant(coupling, lambda, alpha);
            let sol = floquet_solve(&p, 16, 256)?;
            let ext = shirley_solve(&p, 16)?;
            let le = lambda_eff(&sol, lambda);
            println!(
                "{:<9} {lambda:<8} {:<9.4} {:<13.9} {:<13.9} {:.1e}",
                format!("{coupling:?}"),
                p.epsilon().unwrap_or(0.0),
                sol.q_plus(),
                le,
                (le - lambda_eff(&ext, lambda)).abs()
            );
        }
    }

    let p = ModelParams::resonant(Coupling::Rabi, 0.02, alpha);
    let sol = floquet_solve(&p, 16, 256)?;
    println!("\nRabi, lambda = 0.02: leading coefficients");
    for n in -4..=4i64 {
        if n.rem_euclid(2) == 0 {
            println!("  A_{n:<3} = {:+.10}", sol.a(n));
        } else {
            println!("  B_{n:<3} = {:+.10}", sol.b(n));
        }
    }
    println!("gauge residual {:.1e}, parity leakage {:.1e}", sol.gauge_residual(), sol.parity_leakage());
    Ok(())
}
