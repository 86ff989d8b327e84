//! Floquet solutions of the periodically driven two-level problem that remains
//! when the field is replaced by its classical amplitude.
//!
//! The Floquet modes are stored as real Fourier coefficients,
//!
//! ```text
//! |Psi_+(t)> = e^{-i q t} ( A_+(t) |+z> + B_+(t) |-z> )
//! |Psi_-(t)> = e^{+i q t} ( B_-(t) |+z> - A_-(t) |-z> )
//! A_±(t) = sum_k A_{2k} e^{±2ik w0 t},   B_±(t) = sum_l B_{2l+1} e^{±(2l+1)i w0 t}
//! ```
//!
//! The `-` mode is the time-reversed partner `i sigma_y K |Psi_+>` of the `+`
//! mode, which fixes `q_- = -q_+`.
//!
//! Quasienergies come from the half-period map `sigma_z U(T/2, 0)`. Because
//! `H(t + T/2) = sigma_z H(t) sigma_z`, its eigenvectors are the Floquet modes
//! with definite harmonic parity, and its eigenvalue `e^{-i q pi / w0}` fixes
//! `q` modulo `2 w0`; the remaining branch is chosen by continuation in the
//! coupling from `lambda = 0`, where `q_+ = Omega / 2`.
//!
//! A drive phase `phi` only shifts the time origin by `phi / w0`, so every
//! solution is computed for `phi = 0` and evaluated at `t - phi / w0`.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fullmodel::{Coupling, ModelParams};
use crate::ode::DormandPrince;

pub const DEFAULT_HARMONIC_CUTOFF: usize = 16;
pub const DEFAULT_SAMPLES_PER_PERIOD: usize = 256;
/// Largest imaginary part tolerated when the gauge-fixed coefficients are made real.
pub const GAUGE_TOL: f64 = 1e-6;

const HOMOTOPY_STEPS: usize = 16;
const RESONANCE_GAP: f64 = 1e-6;
const RTOL: f64 = 1e-13;
const ATOL: f64 = 1e-15;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// The classical drive seen by the spin.
#[derive(Clone, Copy, Debug)]
pub struct SemiclassicalField {
    pub params: ModelParams,
}

impl SemiclassicalField {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn period(&self) -> f64 {
        self.params.period()
    }

    pub fn hamiltonian(&self, t: f64) -> Matrix2<Complex64> {
        semiclassical_hamiltonian(&self.params, t)
    }
}

/// `Omega/2 sigma_z + lambda [f(alpha e^{-i w0 t}, alpha^* e^{i w0 t}) sigma_+ + h.c.]`.
pub fn semiclassical_hamiltonian(params: &ModelParams, t: f64) -> Matrix2<Complex64> {
    let theta = params.omega0 * t - params.alpha_phase;
    let g = params.lambda * params.alpha_mod;
    let off = match params.coupling {
        Coupling::Jcm => Complex64::from_polar(g, -theta),
        Coupling::Rabi => Complex64::new(2.0 * g * theta.cos(), 0.0),
    };
    let h = 0.5 * params.omega_spin;
    Matrix2::new(Complex64::new(h, 0.0), off, off.conj(), Complex64::new(-h, 0.0))
}

fn rhs(params: &ModelParams) -> impl Fn(f64, &[Complex64], &mut [Complex64]) + '_ {
    move |t, y, dy| {
        let h = semiclassical_hamiltonian(params, t);
        let mi = Complex64::new(0.0, -1.0);
        for (col, out) in y.chunks(2).zip(dy.chunks_mut(2)) {
            out[0] = mi * (h[(0, 0)] * col[0] + h[(0, 1)] * col[1]);
            out[1] = mi * (h[(1, 0)] * col[0] + h[(1, 1)] * col[1]);
        }
    }
}

/// Time-ordered propagator `U(t1, t0)`.
pub fn propagator(params: &ModelParams, t0: f64, t1: f64) -> Result<Matrix2<Complex64>> {
    let mut y = [Complex64::new(1.0, 0.0), zero(), zero(), Complex64::new(1.0, 0.0)];
    let mut dp = DormandPrince::new(RTOL, ATOL);
    dp.integrate(rhs(params), t0, t1, &mut y)?;
    Ok(Matrix2::new(y[0], y[2], y[1], y[3]))
}

/// One-period propagator `U(T, 0)`, checked for unitarity.
pub fn monodromy(params: &ModelParams) -> Result<Matrix2<Complex64>> {
    params.validate()?;
    let u = propagator(params, 0.0, params.period())?;
    let defect = (u.adjoint() * u - Matrix2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > 1e-10 {
        return Err(Error::Numeric(format!(
            "monodromy unitarity defect {defect:.3e} exceeds 1e-10"
        )));
    }
    Ok(u)
}

fn half_period_map(params: &ModelParams) -> Result<Matrix2<Complex64>> {
    let u = propagator(params, 0.0, 0.5 * params.period())?;
    let sz = Matrix2::new(
        Complex64::new(1.0, 0.0),
        zero(),
        zero(),
        Complex64::new(-1.0, 0.0),
    );
    Ok(sz * u)
}

/// Eigenpairs of a normal 2×2 matrix.
fn eig2(m: &Matrix2<Complex64>) -> [(Complex64, Vector2<Complex64>); 2] {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr - 4.0 * det).sqrt();
    let mus = [(tr + disc) * 0.5, (tr - disc) * 0.5];
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let off = m[(0, 1)].norm().max(m[(1, 0)].norm());
    if off <= 1e-14 * scale {
        // diagonal: pair each eigenvalue with the nearest diagonal entry
        let e0 = Vector2::new(Complex64::new(1.0, 0.0), zero());
        let e1 = Vector2::new(zero(), Complex64::new(1.0, 0.0));
        let (a, b) = (m[(0, 0)], m[(1, 1)]);
        return [(a, e0), (b, e1)];
    }
    mus.map(|mu| {
        let v1 = Vector2::new(m[(0, 1)], mu - m[(0, 0)]);
        let v2 = Vector2::new(mu - m[(1, 1)], m[(1, 0)]);
        let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
        (mu, v / Complex64::new(v.norm(), 0.0))
    })
}

/// Nearest representative of `q0 + 2 w0 m` to `target`.
fn unwrap_near(q0: f64, target: f64, omega0: f64) -> f64 {
    let span = 2.0 * omega0;
    q0 + span * ((target - q0) / span).round()
}

enum Track {
    Done(f64, Vector2<Complex64>),
    Refine,
}

fn track_branch(params: &ModelParams, steps: usize) -> Result<Track> {
    let w0 = params.omega0;
    let mut q = 0.5 * params.omega_spin;
    let mut u = Vector2::new(Complex64::new(1.0, 0.0), zero());
    let start_gap = {
        // at lambda = 0 the map is diag(e^{-i Omega pi / 2 w0}, -e^{i Omega pi / 2 w0})
        let x = std::f64::consts::FRAC_PI_2 * params.omega_spin / w0;
        (Complex64::from_polar(1.0, -x) + Complex64::from_polar(1.0, x)).norm()
    };
    let degenerate_start = start_gap < RESONANCE_GAP;
    for j in 1..=steps {
        let p = params.with_lambda(params.lambda * j as f64 / steps as f64);
        let g = half_period_map(&p)?;
        let pairs = eig2(&g);
        let gap = (pairs[0].0 - pairs[1].0).norm();
        if gap < RESONANCE_GAP && !(j == 1 && degenerate_start) {
            if j == steps {
                return Err(Error::Resonance {
                    order: (2.0 * q / w0).round() as i64,
                    gap,
                });
            }
            // eigenvectors are undefined on a crossing; carry the previous ones
            continue;
        }
        let cands: Vec<(f64, f64, Vector2<Complex64>)> = pairs
            .iter()
            .map(|(mu, v)| {
                let q0 = -w0 / std::f64::consts::PI * mu.arg();
                (unwrap_near(q0, q, w0), v.dotc(&u).norm(), *v)
            })
            .collect();
        let pick = if j == 1 && degenerate_start {
            // both branches leave Omega/2; the upper one is q_+
            if cands[0].0 >= cands[1].0 {
                0
            } else {
                1
            }
        } else {
            let pick = if cands[0].1 >= cands[1].1 { 0 } else { 1 };
            if cands[pick].1 < 0.9 {
                return Ok(Track::Refine);
            }
            pick
        };
        q = cands[pick].0;
        u = cands[pick].2;
    }
    Ok(Track::Done(q, u))
}

/// A gauge-fixed Floquet solution.
#[derive(Clone, Debug)]
pub struct FloquetSolution {
    params: ModelParams,
    q_plus: f64,
    /// `A_n` for harmonics `n = -K..=K` (only even `n` populated).
    a: Vec<f64>,
    /// `B_n` for harmonics `n = -K..=K` (only odd `n` populated).
    b: Vec<f64>,
    harmonic_cutoff: usize,
    samples_per_period: usize,
    gauge_residual: f64,
    parity_leakage: f64,
}

/// `|Psi_+(t)>` and `|Psi_-(t)>` as `[<+z|.>, <-z|.>]`, quasienergy phases included.
#[derive(Clone, Copy, Debug)]
pub struct FloquetStates {
    pub plus: [Complex64; 2],
    pub minus: [Complex64; 2],
}

impl FloquetSolution {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn q_plus(&self) -> f64 {
        self.q_plus
    }

    pub fn q_minus(&self) -> f64 {
        -self.q_plus
    }

    pub fn harmonic_cutoff(&self) -> usize {
        self.harmonic_cutoff
    }

    pub fn samples_per_period(&self) -> usize {
        self.samples_per_period
    }

    pub fn gauge_residual(&self) -> f64 {
        self.gauge_residual
    }

    /// Largest coefficient found at the wrong harmonic parity.
    pub fn parity_leakage(&self) -> f64 {
        self.parity_leakage
    }

    /// Harmonic indices `-K..=K`.
    pub fn harmonics(&self) -> impl Iterator<Item = i64> + '_ {
        let k = self.harmonic_cutoff as i64;
        -k..=k
    }

    /// `A_n`; zero outside the stored range.
    pub fn a(&self, n: i64) -> f64 {
        self.coeff(&self.a, n)
    }

    /// `B_n`; zero outside the stored range.
    pub fn b(&self, n: i64) -> f64 {
        self.coeff(&self.b, n)
    }

    fn coeff(&self, v: &[f64], n: i64) -> f64 {
        let k = self.harmonic_cutoff as i64;
        if n.abs() > k {
            0.0
        } else {
            v[(n + k) as usize]
        }
    }

    /// `sum A^2 + sum B^2`, which is 1 for a normalized mode.
    pub fn parseval_norm(&self) -> f64 {
        self.a.iter().chain(&self.b).map(|x| x * x).sum()
    }

    /// Time shift induced by the drive phase.
    pub fn time_offset(&self) -> f64 {
        self.params.alpha_phase / self.params.omega0
    }

    /// `(A_+(tau), B_+(tau))` at shifted time `tau`.
    pub(crate) fn mode_components(&self, tau: f64) -> (Complex64, Complex64) {
        let w = self.params.omega0;
        let step = Complex64::from_polar(1.0, w * tau);
        let mut e = Complex64::from_polar(1.0, -(self.harmonic_cutoff as f64) * w * tau);
        let mut a = zero();
        let mut b = zero();
        for i in 0..self.a.len() {
            a += e * self.a[i];
            b += e * self.b[i];
            e *= step;
        }
        (a, b)
    }

    /// The pair of Floquet states at time `t`.
    pub fn states_at(&self, t: f64) -> FloquetStates {
        let tau = t - self.time_offset();
        let (a, b) = self.mode_components(tau);
        let ph = Complex64::from_polar(1.0, -self.q_plus * t);
        FloquetStates {
            plus: [ph * a, ph * b],
            minus: [ph.conj() * b.conj(), -(ph.conj() * a.conj())],
        }
    }

    /// Analytic rotating-wave solution (JCM only), any detuning.
    pub fn jcm_rotating_wave(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if params.coupling != Coupling::Jcm {
            return Err(Error::UnsupportedRegime(
                "the closed-form Floquet solution exists only for the JCM".into(),
            ));
        }
        let g = params.lambda * params.alpha_mod;
        let w0 = params.omega0;
        let detuning = params.omega_spin - w0;
        let root = (0.25 * detuning * detuning + g * g).sqrt();
        let q = if detuning >= 0.0 {
            0.5 * w0 + root
        } else {
            0.5 * w0 - root
        };
        // eigenvector of [[Omega/2, g], [g, w0 - Omega/2]] for q
        let (a0, b1) = if g == 0.0 {
            (1.0, 0.0)
        } else {
            let (x, y) = (g, q - 0.5 * params.omega_spin);
            let n = (x * x + y * y).sqrt();
            (x / n, y / n)
        };
        let k = 1usize;
        let mut a = vec![0.0; 2 * k + 1];
        let mut b = vec![0.0; 2 * k + 1];
        a[k] = a0;
        b[k + 1] = b1;
        Ok(Self {
            params: *params,
            q_plus: q,
            a,
            b,
            harmonic_cutoff: k,
            samples_per_period: 0,
            gauge_residual: 0.0,
            parity_leakage: 0.0,
        })
    }

    fn from_complex(
        params: &ModelParams,
        q_plus: f64,
        mut up: Vec<Complex64>,
        mut down: Vec<Complex64>,
        harmonic_cutoff: usize,
        samples_per_period: usize,
    ) -> Result<Self> {
        let k = harmonic_cutoff as i64;
        let mut leakage = 0.0f64;
        for (i, n) in (-k..=k).enumerate() {
            if n.rem_euclid(2) == 1 {
                leakage = leakage.max(up[i].norm());
                up[i] = zero();
            } else {
                leakage = leakage.max(down[i].norm());
                down[i] = zero();
            }
        }
        let (imax, _) = up
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
            .expect("non-empty");
        let gauge = if up[imax].norm() > 0.0 {
            up[imax].conj() / up[imax].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut residual = 0.0f64;
        let mut realify = |v: Vec<Complex64>| -> Vec<f64> {
            v.into_iter()
                .map(|z| {
                    let z = z * gauge;
                    residual = residual.max(z.im.abs());
                    z.re
                })
                .collect()
        };
        let a = realify(up);
        let b = realify(down);
        if residual >= GAUGE_TOL {
            return Err(Error::Numeric(format!(
                "Floquet coefficients are not real in any gauge (residual {residual:.3e})"
            )));
        }
        Ok(Self {
            params: *params,
            q_plus,
            a,
            b,
            harmonic_cutoff,
            samples_per_period,
            gauge_residual: residual,
            parity_leakage: leakage,
        })
    }
}

/// `|Psi_±(t)>` from a stored solution.
pub fn floquet_state_at(sol: &FloquetSolution, t: f64) -> FloquetStates {
    sol.states_at(t)
}

/// Numerical Floquet solution from the time-ordered propagator.
///
/// `samples_per_period` must be a power of two and at least `8 * harmonic_cutoff`.
pub fn floquet_solve(
    params: &ModelParams,
    harmonic_cutoff: usize,
    samples_per_period: usize,
) -> Result<FloquetSolution> {
    params.validate()?;
    if harmonic_cutoff == 0 {
        return Err(Error::InvalidArgument("harmonic cutoff must be >= 1".into()));
    }
    if !samples_per_period.is_power_of_two() || samples_per_period < 8 * harmonic_cutoff {
        return Err(Error::InvalidArgument(format!(
            "samples per period must be a power of two >= 8K = {}, got {samples_per_period}",
            8 * harmonic_cutoff
        )));
    }
    let base = ModelParams {
        alpha_phase: 0.0,
        ..*params
    };
    let k = harmonic_cutoff;
    if base.lambda == 0.0 || base.alpha_mod == 0.0 {
        let mut a = vec![0.0; 2 * k + 1];
        a[k] = 1.0;
        return Ok(FloquetSolution {
            params: *params,
            q_plus: 0.5 * base.omega_spin,
            a,
            b: vec![0.0; 2 * k + 1],
            harmonic_cutoff: k,
            samples_per_period,
            gauge_residual: 0.0,
            parity_leakage: 0.0,
        });
    }

    let mut steps = HOMOTOPY_STEPS;
    let (q, u) = loop {
        match track_branch(&base, steps)? {
            Track::Done(q, u) => break (q, u),
            Track::Refine if steps < 4096 => steps *= 2,
            Track::Refine => {
                return Err(Error::Numeric(
                    "quasienergy branch could not be followed from lambda = 0".into(),
                ))
            }
        }
    };

    let g = half_period_map(&base)?;
    let pairs = eig2(&g);
    let gap = (pairs[0].0 - pairs[1].0).norm();
    if gap < RESONANCE_GAP {
        return Err(Error::Resonance {
            order: (2.0 * q / base.omega0).round() as i64,
            gap,
        });
    }

    // periodic part on the sample grid
    let period = base.period();
    let m = samples_per_period;
    let mut psi = [u[0], u[1]];
    let mut samples = Vec::with_capacity(m);
    let mut dp = DormandPrince::new(RTOL, ATOL);
    let f = rhs(&base);
    let mut t = 0.0;
    for j in 0..m {
        let tj = period * j as f64 / m as f64;
        dp.integrate(&f, t, tj, &mut psi)?;
        t = tj;
        let ph = Complex64::from_polar(1.0, q * tj);
        samples.push([psi[0] * ph, psi[1] * ph]);
    }
    let mut up = Vec::with_capacity(2 * k + 1);
    let mut down = Vec::with_capacity(2 * k + 1);
    for n in -(k as i64)..=(k as i64) {
        let mut cu = zero();
        let mut cd = zero();
        for (j, s) in samples.iter().enumerate() {
            let e = Complex64::from_polar(1.0, -std::f64::consts::TAU * (n * j as i64) as f64 / m as f64);
            cu += s[0] * e;
            cd += s[1] * e;
        }
        up.push(cu / m as f64);
        down.push(cd / m as f64);
    }
    FloquetSolution::from_complex(params, q, up, down, k, m)
}

/// Floquet solution from the truncated extended-space (Shirley) matrix,
/// restricted to the sector with even harmonics on `|+z>`.
pub fn shirley_solve(params: &ModelParams, harmonic_cutoff: usize) -> Result<FloquetSolution> {
    params.validate()?;
    if harmonic_cutoff == 0 {
        return Err(Error::InvalidArgument("harmonic cutoff must be >= 1".into()));
    }
    let k = harmonic_cutoff as i64;
    let w0 = params.omega0;
    let g = params.lambda * params.alpha_mod;
    // basis: (+z, even n) then (-z, odd n)
    let ups: Vec<i64> = (-k..=k).filter(|n| n.rem_euclid(2) == 0).collect();
    let downs: Vec<i64> = (-k..=k).filter(|n| n.rem_euclid(2) == 1).collect();
    let dim = ups.len() + downs.len();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (i, &n) in ups.iter().enumerate() {
        h[(i, i)] = 0.5 * params.omega_spin + n as f64 * w0;
    }
    for (j, &n) in downs.iter().enumerate() {
        let jj = ups.len() + j;
        h[(jj, jj)] = -0.5 * params.omega_spin + n as f64 * w0;
    }
    for (i, &n) in ups.iter().enumerate() {
        for (j, &np) in downs.iter().enumerate() {
            // Fourier component n - n' of the +z/-z element
            let c = match (params.coupling, n - np) {
                (_, -1) => g,
                (Coupling::Rabi, 1) => g,
                _ => 0.0,
            };
            if c != 0.0 {
                h[(i, ups.len() + j)] = c;
                h[(ups.len() + j, i)] = c;
            }
        }
    }
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numeric("Shirley eigensolver did not converge".into()))?;
    let centre = ups.iter().position(|&n| n == 0).expect("zero harmonic");
    let weights: Vec<f64> = (0..dim).map(|c| eig.eigenvectors[(centre, c)].powi(2)).collect();
    let best = weights.iter().cloned().fold(0.0, f64::max);
    let pick = (0..dim)
        .filter(|&c| weights[c] > best - 1e-6)
        .max_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]))
        .expect("non-empty spectrum");
    let q = eig.eigenvalues[pick];
    let mut up = vec![zero(); 2 * k as usize + 1];
    let mut down = vec![zero(); 2 * k as usize + 1];
    for (i, &n) in ups.iter().enumerate() {
        up[(n + k) as usize] = eig.eigenvectors[(i, pick)].into();
    }
    for (j, &n) in downs.iter().enumerate() {
        down[(n + k) as usize] = eig.eigenvectors[(ups.len() + j, pick)].into();
    }
    FloquetSolution::from_complex(params, q, up, down, harmonic_cutoff, 0)
}
