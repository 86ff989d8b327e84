//! Quantum corrections attached to the semiclassical Floquet states.
//!
//! In the frame displaced by the reference amplitude `alpha` and rotating with
//! the free field, the joint state is written as
//! `|Phi(t)> = sum_± |Psi_±(t)> (x) |phi_±(t)>`, and the field components obey
//!
//! ```text
//! i d/dt |phi_i> = sum_j <Psi_i| H_q(t) |Psi_j> |phi_j>
//! ```
//!
//! which is exact. Keeping only the static part of the diagonal blocks gives
//! the Floquet-basis rotating-wave approximation (FBRWA), where each component
//! is displaced along a straight line, `|phi_±(t)> = D(eta_±(t)) |phi_±(0)>`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fockspace::{build_field_state, laguerre, FieldStateSpec};
use crate::floquet::FloquetSolution;
use crate::fullmodel::{Coupling, ModelParams};
use crate::ode::DormandPrince;

/// Boundary population above which a displaced-frame run is rejected.
pub const BOUNDARY_TOL: f64 = 1e-8;
/// Norm drift above which a displaced-frame run is rejected.
pub const NORM_DRIFT_TOL: f64 = 1e-6;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `lambda sum_k A_{2k} (B_{2k+1} + B_{2k-1})`.
pub fn lambda_eff(sol: &FloquetSolution, lambda: f64) -> f64 {
    let k = sol.harmonic_cutoff() as i64;
    let mut s = 0.0;
    for n in (-k..=k).filter(|n| n.rem_euclid(2) == 0) {
        s += sol.a(n) * (sol.b(n + 1) + sol.b(n - 1));
    }
    lambda * s
}

/// Initial data of an FBRWA evolution.
#[derive(Clone, Debug)]
pub struct FbrwaResult {
    pub lambda_eff: f64,
    /// `<Psi_+(0)|chi_0>`.
    pub proj_plus: Complex64,
    /// `<Psi_-(0)|chi_0>`.
    pub proj_minus: Complex64,
    /// Reference displacement of the frame.
    pub alpha: Complex64,
    /// Initial field state in the displaced frame, `D(alpha)^dag |phi_0>`.
    pub field_spec: FieldStateSpec,
}

impl FbrwaResult {
    /// `(eta_+(t), eta_-(t))` with `eta_± = ∓ i lambda_eff t e^{i arg alpha}`.
    pub fn eta(&self, t: f64) -> (Complex64, Complex64) {
        let dir = if self.alpha.norm() > 0.0 {
            self.alpha / self.alpha.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let e = Complex64::new(0.0, -self.lambda_eff * t) * dir;
        (e, -e)
    }
}

fn normalized_spin(spin: [Complex64; 2]) -> Result<[Complex64; 2]> {
    let n = (spin[0].norm_sqr() + spin[1].norm_sqr()).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument("initial spin state must be non-zero".into()));
    }
    Ok([spin[0] / n, spin[1] / n])
}

fn projections(sol: &FloquetSolution, spin: [Complex64; 2]) -> (Complex64, Complex64) {
    let s = sol.states_at(0.0);
    let p = s.plus[0].conj() * spin[0] + s.plus[1].conj() * spin[1];
    let m = s.minus[0].conj() * spin[0] + s.minus[1].conj() * spin[1];
    (p, m)
}

/// Collects the projections and displaced-frame field for an initial product state.
pub fn fbrwa_prepare(
    sol: &FloquetSolution,
    spin: [Complex64; 2],
    field: &FieldStateSpec,
) -> Result<FbrwaResult> {
    let spin = normalized_spin(spin)?;
    let (proj_plus, proj_minus) = projections(sol, spin);
    let alpha = sol.params().alpha();
    Ok(FbrwaResult {
        lambda_eff: lambda_eff(sol, sol.params().lambda),
        proj_plus,
        proj_minus,
        alpha,
        field_spec: field.displaced_by(alpha)?,
    })
}

/// `<phi_-(t)|phi_+(t)>` for unit-norm components.
pub fn fbrwa_field_overlap(result: &FbrwaResult, t: f64) -> Result<Complex64> {
    let (plus, minus) = result.eta(t);
    // D(eta_-)^dag D(eta_+) = D(2 eta_+) since the two are antiparallel
    result.field_spec.displacement_expectation(plus - minus)
}

/// Excited-state probability in the FBRWA.
pub fn p_excited_fbrwa(sol: &FloquetSolution, result: &FbrwaResult, t: f64) -> Result<f64> {
    let s = sol.states_at(t);
    let up = result.proj_plus * s.plus[0];
    let dn = result.proj_minus * s.minus[0];
    let overlap = fbrwa_field_overlap(result, t)?;
    let p = up.norm_sqr() + dn.norm_sqr() + 2.0 * (dn.conj() * up * overlap).re;
    Ok(p.clamp(0.0, 1.0))
}

/// Initial field states with a closed-form collapse law.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollapseKind {
    Coherent,
    DisplacedFock(usize),
    /// `(D(beta)|0> + D(beta)|1>)/sqrt(2)` with real `beta`.
    Superposition,
}

/// Closed-form FBRWA probability for the resonant JCM starting in `|+z>`.
///
/// `params.alpha_mod` is `|alpha|` (or `|beta|` for the superposition).
pub fn p_excited_closed_form(kind: CollapseKind, params: &ModelParams, t: f64) -> Result<f64> {
    params.validate()?;
    if params.coupling != Coupling::Jcm || !params.is_resonant() {
        return Err(Error::UnsupportedRegime(
            "closed forms hold only for the resonant JCM; use the fbrwa engine".into(),
        ));
    }
    let x = params.lambda * t;
    let env = (-0.5 * x * x).exp();
    let theta = 2.0 * params.lambda * params.alpha_mod * t;
    let p = match kind {
        CollapseKind::Coherent => 0.5 + 0.5 * env * theta.cos(),
        CollapseKind::DisplacedFock(n) => 0.5 + 0.5 * env * laguerre(n, 0, x * x) * theta.cos(),
        CollapseKind::Superposition => {
            0.5 + 0.5 * env * ((1.0 - 0.5 * x * x) * theta.cos() - x * theta.sin())
        }
    };
    Ok(p)
}

/// Coefficients of `a` and `a^dag` in `<Psi_i| H_q(t) |Psi_j>`, index 0 for `+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldCoefficients {
    pub a: [[Complex64; 2]; 2],
    pub adag: [[Complex64; 2]; 2],
}

impl FieldCoefficients {
    fn zeroed() -> Self {
        Self {
            a: [[zero(); 2]; 2],
            adag: [[zero(); 2]; 2],
        }
    }
}

/// The quantum interaction expressed in the Floquet basis.
#[derive(Clone, Debug)]
pub struct QcfdTables {
    sol: FloquetSolution,
}

pub fn qcfd_coefficient_tables(sol: &FloquetSolution) -> QcfdTables {
    QcfdTables { sol: sol.clone() }
}

impl QcfdTables {
    pub fn solution(&self) -> &FloquetSolution {
        &self.sol
    }

    /// `<Psi_i| sigma_+ |Psi_j>` at time `t`.
    pub fn sigma_plus(&self, t: f64) -> [[Complex64; 2]; 2] {
        let tau = t - self.sol.time_offset();
        let (a, b) = self.sol.mode_components(tau);
        let ph = Complex64::from_polar(1.0, 2.0 * self.sol.q_plus() * t);
        let d = a.conj() * b;
        [[d, -(ph * a.conj() * a.conj())], [ph.conj() * b * b, -d]]
    }

    /// Full time-dependent coefficients.
    pub fn at(&self, t: f64) -> FieldCoefficients {
        let p = self.sol.params();
        let s = self.sigma_plus(t);
        let r = match p.coupling {
            Coupling::Jcm => 0.0,
            Coupling::Rabi => 1.0,
        };
        let lo = Complex64::from_polar(p.lambda, -p.omega0 * t);
        let hi = Complex64::from_polar(p.lambda, p.omega0 * t);
        let mut c = FieldCoefficients::zeroed();
        for i in 0..2 {
            for j in 0..2 {
                let down = s[j][i].conj();
                c.a[i][j] = lo * (s[i][j] + down * r);
                c.adag[i][j] = hi * (s[i][j] * r + down);
            }
        }
        c
    }

    /// Time-averaged diagonal blocks; the off-diagonal blocks average to zero
    /// away from resonance.
    pub fn static_diagonal(&self) -> FieldCoefficients {
        let p = self.sol.params();
        let k = self.sol.harmonic_cutoff() as i64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for n in (-k..=k).filter(|n| n.rem_euclid(2) == 0) {
            s1 += self.sol.a(n) * self.sol.b(n + 1);
            s2 += self.sol.a(n) * self.sol.b(n - 1);
        }
        let r = match p.coupling {
            Coupling::Jcm => 0.0,
            Coupling::Rabi => 1.0,
        };
        let g = p.lambda * (s1 + r * s2);
        let u = Complex64::from_polar(g, -p.alpha_phase);
        let mut c = FieldCoefficients::zeroed();
        c.a[0][0] = u;
        c.a[1][1] = -u;
        c.adag[0][0] = u.conj();
        c.adag[1][1] = -u.conj();
        c
    }
}

/// Which diagonal terms drive the field components.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagonalTerms {
    Full,
    Static,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QcfdOptions {
    pub off_diagonal: bool,
    pub diagonal: DiagonalTerms,
    pub rtol: f64,
}

impl Default for QcfdOptions {
    fn default() -> Self {
        Self {
            off_diagonal: true,
            diagonal: DiagonalTerms::Full,
            rtol: 1e-10,
        }
    }
}

impl QcfdOptions {
    /// The FBRWA limit of the same equations.
    pub fn fbrwa() -> Self {
        Self {
            off_diagonal: false,
            diagonal: DiagonalTerms::Static,
            ..Self::default()
        }
    }
}

/// Displaced-frame amplitudes `c_±^n(t)`; only their joint norm is one.
#[derive(Clone, Debug)]
pub struct QcfdState {
    pub t: f64,
    pub c_plus: DVector<Complex64>,
    pub c_minus: DVector<Complex64>,
}

impl QcfdState {
    pub fn fock_dim(&self) -> usize {
        self.c_plus.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_plus.norm_squared() + self.c_minus.norm_squared()
    }

    pub fn boundary_population(&self) -> f64 {
        let n = self.fock_dim() - 1;
        self.c_plus[n].norm_sqr() + self.c_minus[n].norm_sqr()
    }
}

#[derive(Clone, Debug)]
pub struct QcfdSample {
    pub state: QcfdState,
    pub p_excited: f64,
}

/// Fock dimension for the displaced frame: the initial spread about `alpha`
/// plus the drift, which cannot exceed `2|alpha|`.
pub fn qcfd_fock_dim(field: &FieldStateSpec, alpha: Complex64, lambda_eff: f64, t_max: f64) -> Result<usize> {
    let spread = field
        .terms()?
        .iter()
        .map(|(d, _)| (d.alpha - alpha).norm())
        .fold(0.0, f64::max);
    let drift = (2.0 * alpha.norm()).min(2.0 * lambda_eff.abs() * t_max);
    let d = spread + drift;
    Ok((d * d + 8.0 * d + 20.0).ceil() as usize + 2 * field.max_fock_index())
}

fn apply_ladder(c: &[Complex64], ca: Complex64, cd: Complex64, out: &mut [Complex64], sqrt_n: &[f64]) {
    let n = c.len();
    for m in 0..n {
        let mut acc = zero();
        if m + 1 < n {
            acc += ca * c[m + 1] * sqrt_n[m + 1];
        }
        if m > 0 {
            acc += cd * c[m - 1] * sqrt_n[m];
        }
        out[m] += acc;
    }
}

/// Integrates the exact field equations attached to the Floquet states and
/// reports `P(+z)` at each of `times` (ascending, starting at or after 0).
pub fn qcfd_integrate(
    sol: &FloquetSolution,
    spin: [Complex64; 2],
    field: &FieldStateSpec,
    times: &[f64],
    fock_dim: usize,
    options: QcfdOptions,
) -> Result<Vec<QcfdSample>> {
    if fock_dim < 2 {
        return Err(Error::InvalidDimension("displaced-frame Fock dimension must be >= 2".into()));
    }
    crate::fullmodel::check_times(times)?;
    let spin = normalized_spin(spin)?;
    let (pp, pm) = projections(sol, spin);
    let alpha = sol.params().alpha();
    let phi0 = build_field_state(&field.displaced_by(alpha)?, fock_dim)?;
    let n = fock_dim;
    let mut y: Vec<Complex64> = phi0
        .amplitudes()
        .iter()
        .map(|c| c * pp)
        .chain(phi0.amplitudes().iter().map(|c| c * pm))
        .collect();
    let norm0: f64 = y.iter().map(|c| c.norm_sqr()).sum();

    let tables = qcfd_coefficient_tables(sol);
    let fixed = tables.static_diagonal();
    let sqrt_n: Vec<f64> = (0..n).map(|k| (k as f64).sqrt()).collect();
    let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let mut c = tables.at(t);
        if options.diagonal == DiagonalTerms::Static {
            c.a[0][0] = fixed.a[0][0];
            c.a[1][1] = fixed.a[1][1];
            c.adag[0][0] = fixed.adag[0][0];
            c.adag[1][1] = fixed.adag[1][1];
        }
        if !options.off_diagonal {
            c.a[0][1] = zero();
            c.a[1][0] = zero();
            c.adag[0][1] = zero();
            c.adag[1][0] = zero();
        }
        dy.iter_mut().for_each(|d| *d = zero());
        let (yp, ym) = y.split_at(n);
        let (dp, dm) = dy.split_at_mut(n);
        for (i, out) in [dp, dm].into_iter().enumerate() {
            for (j, src) in [yp, ym].into_iter().enumerate() {
                if c.a[i][j] != zero() || c.adag[i][j] != zero() {
                    apply_ladder(src, c.a[i][j], c.adag[i][j], out, &sqrt_n);
                }
            }
            for v in out.iter_mut() {
                *v = Complex64::new(v.im, -v.re);
            }
        }
    };

    let mut dp = DormandPrince::new(options.rtol, options.rtol * 1e-3);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &ti in times {
        dp.integrate(rhs, t, ti, &mut y)?;
        t = ti;
        let state = QcfdState {
            t,
            c_plus: DVector::from_column_slice(&y[..n]),
            c_minus: DVector::from_column_slice(&y[n..]),
        };
        let drift = (state.norm_sqr() - norm0).abs();
        if drift > NORM_DRIFT_TOL {
            return Err(Error::StepSize(format!(
                "norm drift {drift:.3e} at t = {t} exceeds {NORM_DRIFT_TOL:e}"
            )));
        }
        let boundary = state.boundary_population();
        if boundary > BOUNDARY_TOL {
            return Err(Error::FockOverflow {
                population: boundary,
                t,
            });
        }
        let s = sol.states_at(t);
        let p = (&state.c_plus * s.plus[0] + &state.c_minus * s.minus[0]).norm_squared();
        out.push(QcfdSample { state, p_excited: p });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::displacement_matrix;
    use crate::floquet::{floquet_solve, shirley_solve};
    use proptest::prelude::*;

    fn up() -> [Complex64; 2] {
        [Complex64::new(1.0, 0.0), zero()]
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn jcm(lambda: f64, alpha: f64) -> ModelParams {
        ModelParams::resonant(Coupling::Jcm, lambda, alpha)
    }

    #[test]
    fn lambda_eff_values() {
        let sol = floquet_solve(&jcm(0.05, 10.0), 16, 256).unwrap();
        assert!((lambda_eff(&sol, 0.05) - 0.025).abs() < 1e-9);
        let free = floquet_solve(&jcm(0.0, 10.0), 16, 256).unwrap();
        assert_eq!(lambda_eff(&free, 0.0), 0.0);
        let p = ModelParams::resonant(Coupling::Rabi, 0.02, 10.0);
        let num = floquet_solve(&p, 16, 256).unwrap();
        let ext = shirley_solve(&p, 12).unwrap();
        assert!((lambda_eff(&num, 0.02) - lambda_eff(&ext, 0.02)).abs() < 1e-7);
    }

    #[test]
    fn overlap_examples() {
        let sol = FloquetSolution::jcm_rotating_wave(&jcm(0.05, 10.0)).unwrap();
        let res = fbrwa_prepare(&sol, up(), &FieldStateSpec::coherent(c(10.0))).unwrap();
        assert!((fbrwa_field_overlap(&res, 0.0).unwrap() - c(1.0)).norm() < 1e-14);
        for t in [3.0, 17.0, 40.0] {
            let le = res.lambda_eff;
            let m = fbrwa_field_overlap(&res, t).unwrap().norm();
            assert!((m - (-2.0 * le * le * t * t).exp()).abs() < 1e-13);
        }
        let res = fbrwa_prepare(&sol, up(), &FieldStateSpec::displaced_fock(c(10.0), 1)).unwrap();
        let le = res.lambda_eff;
        for t in [5.0, 13.0, 29.0] {
            let x = 4.0 * le * le * t * t;
            let m = fbrwa_field_overlap(&res, t).unwrap().norm();
            assert!((m - (-0.5 * x).exp() * laguerre(1, 0, x).abs()).abs() < 1e-13);
        }
        let node = 1.0 / (2.0 * le);
        assert!(fbrwa_field_overlap(&res, node).unwrap().norm() < 1e-13);
    }

    #[test]
    fn overlap_matches_matrix_displacement() {
        let dim = 120;
        let p = ModelParams::new(1.0, 1.0, 0.05, Coupling::Jcm, 3.0, 0.6).unwrap();
        let sol = FloquetSolution::jcm_rotating_wave(&p).unwrap();
        let field = FieldStateSpec::two_level_superposition(Complex64::from_polar(3.2, 0.5), 0.3);
        let res = fbrwa_prepare(&sol, up(), &field).unwrap();
        let v = build_field_state(&res.field_spec, dim).unwrap();
        for t in [0.0, 4.0, 11.0, 30.0] {
            let (ep, em) = res.eta(t);
            let dp = displacement_matrix(ep, dim).unwrap();
            let dm = displacement_matrix(em, dim).unwrap();
            let vp = dp.matrix() * v.amplitudes();
            let vm = dm.matrix() * v.amplitudes();
            let brute = vm.dotc(&vp);
            let fast = fbrwa_field_overlap(&res, t).unwrap();
            assert!((brute - fast).norm() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn eta_drift() {
        let sol = FloquetSolution::jcm_rotating_wave(&jcm(0.05, 10.0)).unwrap();
        let res = fbrwa_prepare(&sol, up(), &FieldStateSpec::coherent(c(10.0))).unwrap();
        let (p, m) = res.eta(7.0);
        assert!((p.norm() - 0.025 * 7.0).abs() < 1e-15);
        assert!((m.norm() - 0.025 * 7.0).abs() < 1e-15);
        let s = res.proj_plus.norm_sqr() + res.proj_minus.norm_sqr();
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fbrwa_probability_examples() {
        let p = jcm(0.05, 10.0);
        let sol = floquet_solve(&p, 16, 256).unwrap();
        let res = fbrwa_prepare(&sol, up(), &FieldStateSpec::coherent(c(10.0))).unwrap();
        assert!((p_excited_fbrwa(&sol, &res, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let expect = 0.5 + 0.5 * (-0.5f64).exp() * 20f64.cos();
        assert!((expect - 0.623_757_141_084_284).abs() < 1e-14);
        assert!((p_excited_fbrwa(&sol, &res, 20.0).unwrap() - expect).abs() < 1e-6);
    }

    #[test]
    fn closed_form_examples() {
        let p = jcm(0.05, 10.0);
        for kind in [
            CollapseKind::Coherent,
            CollapseKind::DisplacedFock(3),
            CollapseKind::Superposition,
        ] {
            assert_eq!(p_excited_closed_form(kind, &p, 0.0).unwrap(), 1.0);
        }
        let v = p_excited_closed_form(CollapseKind::DisplacedFock(1), &p, 20.0).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let rabi = ModelParams::resonant(Coupling::Rabi, 0.05, 10.0);
        assert!(matches!(
            p_excited_closed_form(CollapseKind::Coherent, &rabi, 1.0),
            Err(Error::UnsupportedRegime(_))
        ));
        let off = ModelParams::new(1.0, 1.1, 0.05, Coupling::Jcm, 10.0, 0.0).unwrap();
        assert!(p_excited_closed_form(CollapseKind::Coherent, &off, 1.0).is_err());
    }

    #[test]
    fn closed_forms_equal_pipeline() {
        let p = jcm(0.05, 10.0);
        let sol = FloquetSolution::jcm_rotating_wave(&p).unwrap();
        let cases = [
            (CollapseKind::Coherent, FieldStateSpec::coherent(c(10.0))),
            (CollapseKind::DisplacedFock(2), FieldStateSpec::displaced_fock(c(10.0), 2)),
            (CollapseKind::DisplacedFock(10), FieldStateSpec::displaced_fock(c(10.0), 10)),
            (CollapseKind::Superposition, FieldStateSpec::two_level_superposition(c(10.0), 0.0)),
        ];
        for (kind, field) in cases {
            let res = fbrwa_prepare(&sol, up(), &field).unwrap();
            for j in 0..=1000 {
                let t = 0.1 * j as f64;
                let a = p_excited_closed_form(kind, &p, t).unwrap();
                let b = p_excited_fbrwa(&sol, &res, t).unwrap();
                assert!((a - b).abs() < 1e-12, "{kind:?} t={t}: {a} vs {b}");
            }
        }
    }

    /// The interaction blocks written as the double sums over Fourier coefficients.
    fn double_sum_tables(sol: &FloquetSolution, t: f64) -> FieldCoefficients {
        let p = sol.params();
        let w = p.omega0;
        let dq = 2.0 * sol.q_plus();
        let k = sol.harmonic_cutoff() as i64;
        let e = |x: f64| Complex64::from_polar(1.0, x);
        // a sigma_+ (with e^{-i w t}) and a^dag sigma_+ (with e^{i w t})
        let mut diag = [zero(); 2];
        let mut mp = [zero(); 2];
        let mut pm = [zero(); 2];
        for (slot, shift) in [(0usize, 0i64), (1, 1)] {
            for kk in -k..=k {
                for ll in -k..=k {
                    let a2k = sol.a(2 * kk);
                    let b2l = sol.b(2 * ll + 1);
                    diag[slot] += a2k * b2l * e((2 * (ll - kk + shift)) as f64 * w * t);
                    let bb = sol.b(2 * kk + 1) * b2l;
                    mp[slot] += bb * e(-dq * t + (2 * kk + 2 * ll + 1 + 2 * shift) as f64 * w * t);
                    let aa = a2k * sol.a(2 * ll);
                    pm[slot] -= aa * e(dq * t - (2 * kk + 2 * ll + 1 - 2 * shift) as f64 * w * t);
                }
            }
        }
        let lam = p.lambda;
        let mut c = FieldCoefficients::zeroed();
        // sigma_+ pieces: [i][j] = <Psi_i|.|Psi_j>; the sigma_- pieces are their adjoints
        c.a[0][0] = lam * diag[0];
        c.a[1][1] = -lam * diag[0];
        c.a[1][0] = lam * mp[0];
        c.a[0][1] = lam * pm[0];
        c.adag[0][0] = lam * diag[0].conj();
        c.adag[1][1] = -lam * diag[0].conj();
        c.adag[0][1] = lam * mp[0].conj();
        c.adag[1][0] = lam * pm[0].conj();
        if p.coupling == Coupling::Rabi {
            c.adag[0][0] += lam * diag[1];
            c.adag[1][1] -= lam * diag[1];
            c.adag[1][0] += lam * mp[1];
            c.adag[0][1] += lam * pm[1];
            c.a[0][0] += lam * diag[1].conj();
            c.a[1][1] -= lam * diag[1].conj();
            c.a[0][1] += lam * mp[1].conj();
            c.a[1][0] += lam * pm[1].conj();
        }
        c
    }

    fn max_diff(x: &FieldCoefficients, y: &FieldCoefficients) -> f64 {
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((x.a[i][j] - y.a[i][j]).norm());
                m = m.max((x.adag[i][j] - y.adag[i][j]).norm());
            }
        }
        m
    }

    #[test]
    fn tables_match_double_sums() {
        for coupling in [Coupling::Jcm, Coupling::Rabi] {
            let p = ModelParams::new(1.0, 1.0, 0.02, coupling, 10.0, 0.0).unwrap();
            let sol = floquet_solve(&p, 16, 256).unwrap();
            let tables = qcfd_coefficient_tables(&sol);
            for j in 0..25 {
                let t = 0.77 * j as f64;
                let d = max_diff(&tables.at(t), &double_sum_tables(&sol, t));
                assert!(d < 1e-12, "{coupling:?} t={t} diff {d}");
            }
        }
    }

    #[test]
    fn tables_vanish_without_coupling() {
        let sol = floquet_solve(&ModelParams::resonant(Coupling::Rabi, 0.0, 5.0), 16, 256).unwrap();
        let tables = qcfd_coefficient_tables(&sol);
        assert_eq!(max_diff(&tables.at(1.3), &FieldCoefficients::zeroed()), 0.0);
        assert_eq!(max_diff(&tables.static_diagonal(), &FieldCoefficients::zeroed()), 0.0);
    }

    #[test]
    fn static_tables_are_the_fbrwa_hamiltonian() {
        for coupling in [Coupling::Jcm, Coupling::Rabi] {
            let p = ModelParams::resonant(coupling, 0.02, 10.0);
            let sol = floquet_solve(&p, 16, 256).unwrap();
            let le = lambda_eff(&sol, p.lambda);
            let s = qcfd_coefficient_tables(&sol).static_diagonal();
            for (i, sign) in [(0usize, 1.0), (1, -1.0)] {
                assert!((s.a[i][i] - c(sign * le)).norm() < 1e-10);
                assert!((s.adag[i][i] - c(sign * le)).norm() < 1e-10);
            }
            // time average of the full tables over one period
            let tables = qcfd_coefficient_tables(&sol);
            let m = 512;
            let mut avg = zero();
            for j in 0..m {
                avg += tables.at(p.period() * j as f64 / m as f64).a[0][0];
            }
            assert!((avg / m as f64 - c(le)).norm() < 1e-12);
        }
    }

    #[test]
    fn tables_periodic_up_to_quasienergy_phase() {
        let p = ModelParams::new(1.0, 1.0, 0.02, Coupling::Rabi, 10.0, 0.8).unwrap();
        let sol = floquet_solve(&p, 16, 256).unwrap();
        let tables = qcfd_coefficient_tables(&sol);
        let period = p.period();
        let ph = Complex64::from_polar(1.0, 2.0 * sol.q_plus() * period);
        for j in 0..20 {
            let t = 0.41 * j as f64;
            let x = tables.at(t);
            let y = tables.at(t + period);
            for (i, jj) in [(0, 0), (1, 1)] {
                assert!((x.a[i][jj] - y.a[i][jj]).norm() < 1e-12);
            }
            assert!((x.a[0][1] * ph - y.a[0][1]).norm() < 1e-12);
            assert!((x.a[1][0] * ph.conj() - y.a[1][0]).norm() < 1e-12);
            assert!((x.adag[0][1] * ph - y.adag[0][1]).norm() < 1e-12);
        }
    }

    #[test]
    fn uncoupled_amplitudes_are_constant() {
        let p = ModelParams::resonant(Coupling::Rabi, 0.0, 4.0);
        let sol = floquet_solve(&p, 16, 256).unwrap();
        let field = FieldStateSpec::coherent(c(4.5));
        let out = qcfd_integrate(&sol, up(), &field, &[0.0, 5.0, 50.0], 60, QcfdOptions::default())
            .unwrap();
        for s in &out {
            assert!((&s.state.c_plus - &out[0].state.c_plus).norm() < 1e-14);
            assert!((s.p_excited - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fbrwa_limit_of_field_equations() {
        let p = jcm(0.05, 10.0);
        let sol = floquet_solve(&p, 16, 256).unwrap();
        let field = FieldStateSpec::coherent(c(10.0));
        let res = fbrwa_prepare(&sol, up(), &field).unwrap();
        let times: Vec<f64> = (0..=120).map(|j| 0.5 * j as f64).collect();
        let dim = qcfd_fock_dim(&field, p.alpha(), res.lambda_eff, 60.0).unwrap();
        let opts = QcfdOptions {
            off_diagonal: false,
            ..QcfdOptions::default()
        };
        let out = qcfd_integrate(&sol, up(), &field, &times, dim, opts).unwrap();
        for (s, &t) in out.iter().zip(&times) {
            let f = p_excited_fbrwa(&sol, &res, t).unwrap();
            assert!((s.p_excited - f).abs() < 1e-6, "t={t}");
            assert!((s.state.norm_sqr() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn exact_equations_match_full_model_short_window() {
        use crate::fullmodel::{build_hamiltonian, evolve_exact, excited_probability, SpinFieldVector};
        for coupling in [Coupling::Jcm, Coupling::Rabi] {
            let p = ModelParams::resonant(coupling, 0.1, 3.0);
            let sol = floquet_solve(&p, 16, 256).unwrap();
            let field = FieldStateSpec::coherent(c(3.0));
            let times: Vec<f64> = (0..=60).map(|j| 0.5 * j as f64).collect();
            let out = qcfd_integrate(&sol, up(), &field, &times, 60, QcfdOptions::default()).unwrap();
            let h = build_hamiltonian(&p, 60).unwrap();
            let psi0 = SpinFieldVector::product(up(), &build_field_state(&field, 60).unwrap());
            let exact = evolve_exact(&h, &psi0, &times).unwrap();
            for (s, e) in out.iter().zip(&exact) {
                assert!((s.p_excited - excited_probability(e)).abs() < 1e-6, "{coupling:?}");
                assert!((s.state.norm_sqr() - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        let p = jcm(0.1, 4.0);
        let sol = floquet_solve(&p, 16, 256).unwrap();
        let field = FieldStateSpec::coherent(c(4.0));
        let r = qcfd_integrate(&sol, up(), &field, &[0.0, 100.0], 12, QcfdOptions::default());
        assert!(matches!(r, Err(Error::FockOverflow { .. })), "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn fbrwa_probability_in_unit_interval(
            lam in 0.005f64..0.04,
            amp in 2.0f64..12.0,
            phase in 0.0..std::f64::consts::TAU,
            rabi in any::<bool>(),
            n in 0usize..4,
            theta in 0.0..std::f64::consts::PI,
            t in 0.0f64..300.0,
        ) {
            let coupling = if rabi { Coupling::Rabi } else { Coupling::Jcm };
            let p = ModelParams::new(1.0, 1.0, lam, coupling, amp, phase).unwrap();
            let sol = floquet_solve(&p, 16, 256).unwrap();
            let spin = [c((0.5 * theta).cos()), Complex64::from_polar((0.5 * theta).sin(), 0.3)];
            let field = FieldStateSpec::displaced_fock(p.alpha(), n);
            let res = fbrwa_prepare(&sol, spin, &field).unwrap();
            let s = res.proj_plus.norm_sqr() + res.proj_minus.norm_sqr();
            prop_assert!((s - 1.0).abs() < 1e-10);
            let v = p_excited_fbrwa(&sol, &res, t).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn coherent_overlap_decreases(lam in 0.001f64..0.1, amp in 0.5f64..20.0, t in 0.01f64..100.0) {
            let p = jcm(lam, amp);
            let sol = FloquetSolution::jcm_rotating_wave(&p).unwrap();
            let res = fbrwa_prepare(&sol, up(), &FieldStateSpec::coherent(c(amp))).unwrap();
            let a = fbrwa_field_overlap(&res, t).unwrap().norm();
            let b = fbrwa_field_overlap(&res, t * 1.01).unwrap().norm();
            prop_assert!(b < a || a == 0.0);
        }
    }
}
