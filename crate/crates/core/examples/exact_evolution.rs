//! Exact spin-field evolution for the Jaynes-Cummings and Rabi models.

use num_complex::Complex64;
use qcfd::fockspace::{build_field_state, default_fock_dim, FieldStateSpec};
use qcfd::fullmodel::{build_hamiltonian, excited_probability, Coupling, ModelParams, SpectralPropagator, SpinFieldVector};

fn main() -> qcfd::Result<()> {
    let alpha = 5.0;
    let dim = default_fock_dim(alpha);
    let field = build_field_state(&FieldStateSpec::coherent(Complex64::new(alpha, 0.0)), dim)?;
    let up = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let psi0 = SpinFieldVector::product(up, &field);
    let times: Vec<f64> = (0..=40).map(|j| 5.0 * j as f64).collect();

    for coupling in [Coupling::Jcm, Coupling::Rabi] {
        let p = ModelParams::resonant(coupling, 0.05, alpha);
        let prop = SpectralPropagator::new(&build_hamiltonian(&p, dim)?)?;
        let states = prop.evolve(&psi0, &times)?;
        println!("{coupling:?}, lambda = 0.05, |alpha| = {alpha}, dim = {dim}");
        for (t, s) in times.iter().zip(&states).step_by(4) {
            println!(
                "  t = {t:>6.1}  P(+z) = {:.6}  norm-1 = {:+.1e}  <N_exc> = {:.6}",
                excited_probability(s),
                s.norm() - 1.0,
                s.excitation_number()
            );
        }
    }
    Ok(())
}
