//! Truncated bosonic Fock space: ladder and displacement operators, displaced
//! Fock states and the closed-form matrix elements `<m|D(beta)|n>`.
//!
//! Photon number `n` indexes the amplitude vector directly. Displacements use
//! `D(beta) = exp(beta a^dag - beta^* a)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest norm loss accepted when a physical state is materialized.
pub const TRUNCATION_TOL: f64 = 1e-6;

const HERMITIAN_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;

/// Suggested truncation for a scenario whose largest displacement is `alpha_max`.
pub fn default_fock_dim(alpha_max: f64) -> usize {
    let a = alpha_max.abs();
    (a * a + 8.0 * a + 20.0).ceil() as usize
}

/// Smallest dimension for which `displacement_matrix` is considered trustworthy.
pub fn min_displacement_dim(beta: Complex64) -> usize {
    let b = beta.norm();
    (b * b + 6.0 * b + 10.0).ceil() as usize
}

/// What a matrix claims to be; checked when it is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    General,
    Hermitian,
    Unitary,
}

/// Dense complex operator on a truncated space.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    data: DMatrix<Complex64>,
    kind: OperatorKind,
    /// Set when the truncation is smaller than recommended for this operator.
    truncation_shortfall: Option<usize>,
}

impl OperatorMatrix {
    pub fn general(data: DMatrix<Complex64>) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::InvalidDimension(format!(
                "operator must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self {
            data,
            kind: OperatorKind::General,
            truncation_shortfall: None,
        })
    }

    /// Wraps `data`, failing if `max |M - M^dag| >= 1e-12`.
    pub fn hermitian(data: DMatrix<Complex64>) -> Result<Self> {
        let mut op = Self::general(data)?;
        let defect = op.hermiticity_defect();
        if defect >= HERMITIAN_TOL {
            return Err(Error::Numeric(format!(
                "matrix flagged Hermitian has defect {defect:.3e}"
            )));
        }
        op.kind = OperatorKind::Hermitian;
        Ok(op)
    }

    /// Wraps `data`, failing if `max |M^dag M - I| >= 1e-10`.
    pub fn unitary(data: DMatrix<Complex64>) -> Result<Self> {
        let mut op = Self::general(data)?;
        let defect = op.unitarity_defect();
        if defect >= UNITARY_TOL {
            return Err(Error::Numeric(format!(
                "matrix flagged unitary has defect {defect:.3e}"
            )));
        }
        op.kind = OperatorKind::Unitary;
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn truncation_shortfall(&self) -> Option<usize> {
        self.truncation_shortfall
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.data.adjoint() * &self.data;
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - target).norm());
            }
        }
        worst
    }
}

/// Lowering operator `a` with `a[n-1, n] = sqrt(n)`.
pub fn annihilation_matrix(dim: usize) -> Result<OperatorMatrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension("Fock dimension must be >= 1".into()));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    OperatorMatrix::general(m)
}

/// Raising operator `a^dag`.
pub fn creation_matrix(dim: usize) -> Result<OperatorMatrix> {
    let a = annihilation_matrix(dim)?;
    OperatorMatrix::general(a.into_matrix().adjoint())
}

/// `D(beta)` as the matrix exponential of the truncated generator
/// `beta a^dag - beta^* a`. The result is exactly unitary on the truncated
/// space; entries near the top of the space are wrong when `dim` is too small,
/// which is recorded in [`OperatorMatrix::truncation_shortfall`].
pub fn displacement_matrix(beta: Complex64, dim: usize) -> Result<OperatorMatrix> {
    check_finite(beta)?;
    let a = annihilation_matrix(dim)?.into_matrix();
    let generator = a.adjoint() * beta - a * beta.conj();
    let mut op = OperatorMatrix::unitary(generator.exp())?;
    let needed = min_displacement_dim(beta);
    if dim < needed {
        op.truncation_shortfall = Some(needed);
    }
    Ok(op)
}

/// Associated Laguerre polynomial `L_n^{(k)}(x)` by upward recurrence in `n`.
pub fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    let kf = k as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + kf - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + kf + 1.0 - x) * cur - (jf + kf) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `ln(n!)` by direct summation; exact enough for the photon numbers used here.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}

/// Closed-form matrix element `<m|D(beta)|n>`.
pub fn displaced_fock_overlap(m: usize, n: usize, beta: Complex64) -> Result<Complex64> {
    check_finite(beta)?;
    Ok(overlap_unchecked(m, n, beta))
}

fn overlap_unchecked(m: usize, n: usize, beta: Complex64) -> Complex64 {
    let r = beta.norm();
    if r == 0.0 {
        return if m == n {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    // For m < n use <m|D(b)|n> = conj(<n|D(-b)|m>), i.e. the m >= n formula
    // with the roles swapped and b -> -b^*.
    let (hi, lo, base) = if m >= n {
        (m, n, beta)
    } else {
        (n, m, -beta.conj())
    };
    let k = hi - lo;
    let x = r * r;
    let lag = laguerre(lo, k, x);
    if lag == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let ln_mag = 0.5 * (ln_factorial(lo) - ln_factorial(hi)) + k as f64 * r.ln() - 0.5 * x
        + lag.abs().ln();
    let phase = k as f64 * base.arg();
    Complex64::from_polar(ln_mag.exp() * lag.signum(), phase)
}

/// `exp((a b^* - a^* b) / 2)`, the phase in `D(a) D(b) = D(a + b) * phase`.
pub(crate) fn bch_phase(a: Complex64, b: Complex64) -> Complex64 {
    let z = 0.5 * (a * b.conj() - a.conj() * b);
    Complex64::new(0.0, z.im).exp()
}

/// `<n_i| D(b_i)^dag D(x) D(b_j) |n_j>` in closed form.
pub fn displaced_matrix_element(
    bi: Complex64,
    ni: usize,
    x: Complex64,
    bj: Complex64,
    nj: usize,
) -> Complex64 {
    let phase = bch_phase(-bi, x) * bch_phase(x - bi, bj);
    phase * overlap_unchecked(ni, nj, x - bi + bj)
}

fn check_finite(beta: Complex64) -> Result<()> {
    if beta.re.is_finite() && beta.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "displacement must be finite, got {beta}"
        )))
    }
}

/// `D(alpha)|n>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisplacedFock {
    pub alpha: Complex64,
    pub n: usize,
}

/// Initial field states understood by every engine.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldStateSpec {
    Coherent(Complex64),
    DisplacedFock(DisplacedFock),
    /// Weighted sum of displaced Fock states; normalized on construction.
    Superposition(Vec<(DisplacedFock, Complex64)>),
}

impl FieldStateSpec {
    pub fn coherent(alpha: Complex64) -> Self {
        FieldStateSpec::Coherent(alpha)
    }

    pub fn displaced_fock(alpha: Complex64, n: usize) -> Self {
        FieldStateSpec::DisplacedFock(DisplacedFock { alpha, n })
    }

    /// `(D(beta)|0> + e^{-i xi} D(beta)|1>) / sqrt(2)`.
    pub fn two_level_superposition(beta: Complex64, xi: f64) -> Self {
        let w = std::f64::consts::FRAC_1_SQRT_2;
        FieldStateSpec::Superposition(vec![
            (DisplacedFock { alpha: beta, n: 0 }, Complex64::new(w, 0.0)),
            (
                DisplacedFock { alpha: beta, n: 1 },
                Complex64::from_polar(w, -xi),
            ),
        ])
    }

    /// Components with weights rescaled so that the state has unit norm.
    pub fn terms(&self) -> Result<Vec<(DisplacedFock, Complex64)>> {
        let raw = match self {
            FieldStateSpec::Coherent(a) => vec![(DisplacedFock { alpha: *a, n: 0 }, 1.0.into())],
            FieldStateSpec::DisplacedFock(d) => vec![(*d, 1.0.into())],
            FieldStateSpec::Superposition(v) => v.clone(),
        };
        if raw.is_empty() {
            return Err(Error::InvalidArgument("empty superposition".into()));
        }
        for (d, w) in &raw {
            check_finite(d.alpha)?;
            if !(w.re.is_finite() && w.im.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite weight {w}")));
            }
        }
        let norm2 = gram(&raw, Complex64::new(0.0, 0.0)).re;
        if !(norm2 > 0.0) {
            return Err(Error::InvalidArgument("superposition has zero norm".into()));
        }
        let s = 1.0 / norm2.sqrt();
        Ok(raw.into_iter().map(|(d, w)| (d, w * s)).collect())
    }

    /// `<phi|D(x)|phi>` in closed form.
    pub fn displacement_expectation(&self, x: Complex64) -> Result<Complex64> {
        Ok(gram(&self.terms()?, x))
    }

    /// `<phi|a|phi>`.
    pub fn mean_displacement(&self) -> Result<Complex64> {
        let terms = self.terms()?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (di, wi) in &terms {
            for (dj, wj) in &terms {
                // a D(b_j)|n_j> = D(b_j) (a + b_j)|n_j>
                let mut e = dj.alpha * displaced_matrix_element(di.alpha, di.n, 0.0.into(), dj.alpha, dj.n);
                if dj.n > 0 {
                    e += (dj.n as f64).sqrt()
                        * displaced_matrix_element(di.alpha, di.n, 0.0.into(), dj.alpha, dj.n - 1);
                }
                acc += wi.conj() * wj * e;
            }
        }
        Ok(acc)
    }

    /// Largest `|alpha|` among the components.
    pub fn max_displacement(&self) -> f64 {
        match self {
            FieldStateSpec::Coherent(a) => a.norm(),
            FieldStateSpec::DisplacedFock(d) => d.alpha.norm(),
            FieldStateSpec::Superposition(v) => {
                v.iter().map(|(d, _)| d.alpha.norm()).fold(0.0, f64::max)
            }
        }
    }

    /// Largest Fock index among the components.
    pub fn max_fock_index(&self) -> usize {
        match self {
            FieldStateSpec::Coherent(_) => 0,
            FieldStateSpec::DisplacedFock(d) => d.n,
            FieldStateSpec::Superposition(v) => v.iter().map(|(d, _)| d.n).max().unwrap_or(0),
        }
    }

    /// The same state expressed in a frame displaced by `-shift`, i.e. `D(shift)^dag |phi>`.
    pub fn displaced_by(&self, shift: Complex64) -> Result<FieldStateSpec> {
        let terms = self.terms()?;
        Ok(FieldStateSpec::Superposition(
            terms
                .into_iter()
                .map(|(d, w)| {
                    // D(-s) D(b) = D(b - s) * phase
                    let w = w * bch_phase(-shift, d.alpha);
                    (
                        DisplacedFock {
                            alpha: d.alpha - shift,
                            n: d.n,
                        },
                        w,
                    )
                })
                .collect(),
        ))
    }
}

fn gram(terms: &[(DisplacedFock, Complex64)], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (di, wi) in terms {
        for (dj, wj) in terms {
            acc += wi.conj() * wj * displaced_matrix_element(di.alpha, di.n, x, dj.alpha, dj.n);
        }
    }
    acc
}

/// Amplitudes of a field state in a truncated Fock basis.
#[derive(Clone, Debug)]
pub struct FockVector {
    amplitudes: DVector<Complex64>,
    /// `1 - ||v||^2` for the exact state cut at `dim`.
    truncation_loss: f64,
}

impl FockVector {
    pub fn from_amplitudes(amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension("Fock vector must have dim >= 1".into()));
        }
        Ok(Self {
            amplitudes,
            truncation_loss: 0.0,
        })
    }

    /// `|n>`.
    pub fn basis(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::InvalidDimension(format!("|{n}> does not fit in dim {dim}")));
        }
        let mut v = DVector::zeros(dim);
        v[n] = Complex64::new(1.0, 0.0);
        Self::from_amplitudes(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex64> {
        self.amplitudes
    }

    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<a^dag a>`.
    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }

    /// `<a>`.
    pub fn mean_annihilation(&self) -> Complex64 {
        (1..self.dim())
            .map(|n| self.amplitudes[n - 1].conj() * self.amplitudes[n] * (n as f64).sqrt())
            .sum()
    }
}

/// Materializes `spec` on `dim` Fock levels from the closed-form amplitudes.
///
/// Fails when more than [`TRUNCATION_TOL`] of the norm lies above the cut.
pub fn build_field_state(spec: &FieldStateSpec, dim: usize) -> Result<FockVector> {
    if dim == 0 {
        return Err(Error::InvalidDimension("Fock dimension must be >= 1".into()));
    }
    let terms = spec.terms()?;
    let mut v = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    for (d, w) in &terms {
        for m in 0..dim {
            v[m] += w * overlap_unchecked(m, d.n, d.alpha);
        }
    }
    let lost = (1.0 - v.norm_squared()).max(0.0);
    if lost > TRUNCATION_TOL {
        let suggested = default_fock_dim(spec.max_displacement()) + 2 * spec.max_fock_index();
        return Err(Error::TruncationInsufficient {
            lost,
            dim,
            suggested: suggested.max(dim + 1),
        });
    }
    Ok(FockVector {
        amplitudes: v,
        truncation_loss: lost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn annihilation_small_dims() {
        let a1 = annihilation_matrix(1).unwrap();
        assert_eq!(a1.matrix()[(0, 0)], c(0.0, 0.0));
        let a3 = annihilation_matrix(3).unwrap();
        let m = a3.matrix();
        assert_eq!(m[(0, 1)], c(1.0, 0.0));
        assert!((m[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        let nonzero = m.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2);
        assert!(matches!(annihilation_matrix(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn commutator_is_identity_off_boundary() {
        for dim in [10, 50, 200] {
            let a = annihilation_matrix(dim).unwrap().into_matrix();
            let ad = a.adjoint();
            let comm = &a * &ad - &ad * &a;
            for i in 0..dim - 1 {
                for j in 0..dim - 1 {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((comm[(i, j)] - target).norm() < 1e-12, "dim {dim} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn displacement_identity_and_vacuum_overlap() {
        let d0 = displacement_matrix(c(0.0, 0.0), 12).unwrap();
        assert!(d0.unitarity_defect() < 1e-14);
        for i in 0..12 {
            assert!((d0.matrix()[(i, i)] - 1.0).norm() < 1e-15);
        }
        // Oracle: <0|D(1)|0> = exp(-1/2), the exponential series summed to convergence.
        let mut term = 1.0f64;
        let mut series = 1.0f64;
        for k in 1..60 {
            term *= -0.5 / k as f64;
            series += term;
        }
        let d = displacement_matrix(c(1.0, 0.0), 40).unwrap();
        assert!((d.matrix()[(0, 0)].re - series).abs() < 1e-8);
        assert!((series - 0.606531).abs() < 1e-6);
    }

    #[test]
    fn displacement_inverse() {
        let beta = c(2.0, 1.0);
        let d = displacement_matrix(beta, 80).unwrap();
        let dm = displacement_matrix(-beta, 80).unwrap();
        let prod = d.matrix() * dm.matrix();
        for i in 0..80 {
            for j in 0..80 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - target).norm() < 1e-9);
            }
        }
        assert!(d.truncation_shortfall().is_none());
        assert!(displacement_matrix(beta, 10).unwrap().truncation_shortfall().is_some());
        assert!(displacement_matrix(c(f64::NAN, 0.0), 5).is_err());
    }

    #[test]
    fn laguerre_values() {
        for k in 0..4 {
            assert_eq!(laguerre(0, k, 3.7), 1.0);
        }
        assert_eq!(laguerre(1, 0, 1.0), 0.0);
        // Explicit series sum_j (-1)^j C(n+k, n-j) x^j / j!
        fn series(n: usize, k: usize, x: f64) -> f64 {
            let binom = |a: usize, b: usize| -> f64 {
                (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
            };
            let mut fact = 1.0;
            let mut s = 0.0;
            for j in 0..=n {
                if j > 0 {
                    fact *= j as f64;
                }
                s += (-1f64).powi(j as i32) * binom(n + k, n - j) * x.powi(j as i32) / fact;
            }
            s
        }
        assert!((laguerre(2, 0, 1.0) - series(2, 0, 1.0)).abs() < 1e-15);
        assert!((laguerre(2, 0, 1.0) + 0.5).abs() < 1e-15);
        for &(n, k, x) in &[(5, 3, 2.5), (8, 0, 0.3), (10, 7, 11.0), (12, 2, 4.0)] {
            let want = series(n, k, x);
            assert!((laguerre(n, k, x) - want).abs() < 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn overlap_trivial_cases() {
        assert_eq!(displaced_fock_overlap(3, 3, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(displaced_fock_overlap(3, 2, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!(displaced_fock_overlap(1, 1, c(1.0, 0.0)).unwrap().norm() < 1e-16);
        assert!(displaced_fock_overlap(0, 0, c(f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn overlap_matches_matrix_exponential() {
        let beta = c(0.5, 0.5);
        let d = displacement_matrix(beta, 60).unwrap();
        let got = displaced_fock_overlap(2, 0, beta).unwrap();
        assert!((got - d.matrix()[(2, 0)]).norm() < 1e-10);
        // both orderings, a generic complex displacement
        let beta = c(-1.3, 0.7);
        let d = displacement_matrix(beta, 80).unwrap();
        for m in 0..12 {
            for n in 0..12 {
                let got = displaced_fock_overlap(m, n, beta).unwrap();
                assert!((got - d.matrix()[(m, n)]).norm() < 1e-10, "({m},{n})");
            }
        }
    }

    #[test]
    fn coherent_state_moments() {
        assert_eq!(
            build_field_state(&FieldStateSpec::coherent(c(0.0, 0.0)), 5)
                .unwrap()
                .amplitudes()[0],
            c(1.0, 0.0)
        );
        let v = build_field_state(&FieldStateSpec::coherent(c(10.0, 0.0)), 200).unwrap();
        // Poisson weights summed directly
        let mut p = (-100.0f64).exp();
        let mut total = p;
        for n in 1..200 {
            p *= 100.0 / n as f64;
            total += p;
        }
        assert!((v.norm() * v.norm() - total).abs() < 1e-12);
        assert!((v.norm() - 1.0).abs() < 1e-10);
        assert!((v.mean_annihilation() - c(10.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn displaced_fock_photon_number() {
        let spec = FieldStateSpec::displaced_fock(c(10.0, 0.0), 1);
        let v = build_field_state(&spec, 200).unwrap();
        assert!((v.mean_photon_number() - 101.0).abs() < 1e-6);
        // agrees with displacement_matrix applied to |1>
        let d = displacement_matrix(c(10.0, 0.0), 200).unwrap();
        for m in 0..150 {
            assert!((d.matrix()[(m, 1)] - v.amplitudes()[m]).norm() < 1e-10);
        }
    }

    #[test]
    fn truncation_is_reported() {
        let err = build_field_state(&FieldStateSpec::coherent(c(10.0, 0.0)), 60).unwrap_err();
        match err {
            Error::TruncationInsufficient { suggested, .. } => assert!(suggested >= 200),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn superposition_is_normalized_and_displaced() {
        let beta = c(3.0, -1.0);
        let spec = FieldStateSpec::two_level_superposition(beta, 0.4);
        let v = build_field_state(&spec, 120).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-10);
        let mean = spec.mean_displacement().unwrap();
        assert!((mean - v.mean_annihilation()).norm() < 1e-10);
        // <phi|D(x)|phi> against the vector
        let x = c(0.3, 0.8);
        let d = displacement_matrix(x, 120).unwrap();
        let brute = v.amplitudes().dotc(&(d.matrix() * v.amplitudes()));
        let closed = spec.displacement_expectation(x).unwrap();
        assert!((brute - closed).norm() < 1e-10);
        // the displaced-frame representation has the same physics
        let shifted = spec.displaced_by(beta).unwrap();
        let w = build_field_state(&shifted, 120).unwrap();
        let back = displacement_matrix(beta, 120).unwrap().matrix() * w.amplitudes();
        for m in 0..60 {
            assert!((back[m] - v.amplitudes()[m]).norm() < 1e-9);
        }
    }
}
