//! The exact field equations in the Floquet basis follow the full model
//! through the revival, while their FBRWA truncation does not.

use num_complex::Complex64;
use qcfd::fbrwa::{lambda_eff, qcfd_fock_dim, qcfd_integrate, QcfdOptions};
use qcfd::floquet::FloquetSolution;
use qcfd::fockspace::{build_field_state, FieldStateSpec};
use qcfd::fullmodel::{build_hamiltonian, evolve_exact, excited_probability, Coupling, ModelParams, SpinFieldVector};

fn main() -> qcfd::Result<()> {
    let (lambda, amp) = (0.1, 4.0);
    let p = ModelParams::resonant(Coupling::Jcm, lambda, amp);
    let field = FieldStateSpec::coherent(Complex64::new(amp, 0.0));
    let up = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let times: Vec<f64> = (0..=50).map(|j| 5.0 * j as f64).collect();

    let sol = FloquetSolution::jcm_rotating_wave(&p)?;
    let le = lambda_eff(&sol, lambda);
    let dim = qcfd_fock_dim(&field, p.alpha(), le, 250.0)?;
    let full = qcfd_integrate(&sol, up, &field, &times, dim, QcfdOptions::default())?;
    // the truncated equations drift by 2 lambda_eff t without bound
    let drift = 2.0 * le * 250.0;
    let trunc_dim = (drift * drift + 8.0 * drift + 20.0).ceil() as usize;
    let trunc = qcfd_integrate(&sol, up, &field, &times, trunc_dim, QcfdOptions::fbrwa())?;

    let n = 80;
    let psi0 = SpinFieldVector::product(up, &build_field_state(&field, n)?);
    let exact = evolve_exact(&build_hamiltonian(&p, n)?, &psi0, &times)?;

    println!("     t     exact      qcfd       fbrwa");
    for (i, t) in times.iter().enumerate().step_by(2) {
        println!(
            "{t:>6.1}  {:.6}  {:.6}  {:.6}",
            excited_probability(&exact[i]),
            full[i].p_excited,
            trunc[i].p_excited
        );
    }
    let drift = full.iter().map(|s| (s.state.norm_sqr() - 1.0).abs()).fold(0.0, f64::max);
    println!("displaced-frame dim {dim}, max norm drift {drift:.1e}");
    Ok(())
}
