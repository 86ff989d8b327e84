//! Exact reference engine: the spin–boson Hamiltonian on spin ⊗ Fock and its
//! evolution by dense spectral decomposition.
//!
//! Spin-major ordering: index `s * fock_dim + n`, with `s = 0` for `|+z>` and
//! `s = 1` for `|-z>`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fockspace::{FockVector, OperatorMatrix};

/// Which light–matter coupling `f(a, a^dag)` multiplies `sigma_+`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coupling {
    /// `f = a`
    Jcm,
    /// `f = a + a^dag`
    Rabi,
}

impl std::str::FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jcm" | "jaynes-cummings" => Ok(Coupling::Jcm),
            "rabi" => Ok(Coupling::Rabi),
            other => Err(Error::Config(format!("unknown coupling {other:?} (jcm|rabi)"))),
        }
    }
}

impl std::fmt::Display for Coupling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Coupling::Jcm => "jcm",
            Coupling::Rabi => "rabi",
        })
    }
}

/// Physical constants plus the reference displacement `alpha = |alpha| e^{i phase}`
/// that separates the semiclassical drive from the quantum field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub omega0: f64,
    pub omega_spin: f64,
    pub lambda: f64,
    pub coupling: Coupling,
    pub alpha_mod: f64,
    pub alpha_phase: f64,
}

impl ModelParams {
    pub fn new(
        omega0: f64,
        omega_spin: f64,
        lambda: f64,
        coupling: Coupling,
        alpha_mod: f64,
        alpha_phase: f64,
    ) -> Result<Self> {
        let p = Self {
            omega0,
            omega_spin,
            lambda,
            coupling,
            alpha_mod,
            alpha_phase: alpha_phase.rem_euclid(std::f64::consts::TAU),
        };
        p.validate()?;
        Ok(p)
    }

    /// Resonant model `omega0 = omega_spin = 1` with real `alpha`.
    pub fn resonant(coupling: Coupling, lambda: f64, alpha_mod: f64) -> Self {
        Self {
            omega0: 1.0,
            omega_spin: 1.0,
            lambda,
            coupling,
            alpha_mod,
            alpha_phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega0,
            self.omega_spin,
            self.lambda,
            self.alpha_mod,
            self.alpha_phase,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("model parameters must be finite".into()));
        }
        if self.omega0 <= 0.0 {
            return Err(Error::InvalidArgument("omega0 must be > 0".into()));
        }
        if self.lambda < 0.0 || self.omega_spin < 0.0 || self.alpha_mod < 0.0 {
            return Err(Error::InvalidArgument(
                "lambda, omega_spin and |alpha| must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.alpha_mod, self.alpha_phase)
    }

    /// `lambda |alpha| / (2 Omega)`; small values mean the Floquet modes stay
    /// close to their rotating-wave form.
    pub fn epsilon(&self) -> Option<f64> {
        (self.omega_spin > 0.0).then(|| self.lambda * self.alpha_mod / (2.0 * self.omega_spin))
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega0
    }

    pub fn is_resonant(&self) -> bool {
        (self.omega_spin - self.omega0).abs() <= 1e-12 * self.omega0
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }
}

/// Joint spin–field amplitudes in spin-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinFieldVector {
    fock_dim: usize,
    amplitudes: DVector<Complex64>,
}

impl SpinFieldVector {
    pub fn new(fock_dim: usize, amplitudes: DVector<Complex64>) -> Result<Self> {
        if fock_dim == 0 || amplitudes.len() != 2 * fock_dim {
            return Err(Error::InvalidDimension(format!(
                "spin-field vector needs 2*{fock_dim} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        Ok(Self {
            fock_dim,
            amplitudes,
        })
    }

    /// `(spin[0] |+z> + spin[1] |-z>) ⊗ field`.
    pub fn product(spin: [Complex64; 2], field: &FockVector) -> Self {
        let n = field.dim();
        let f = field.amplitudes();
        let amps = DVector::from_fn(2 * n, |i, _| spin[i / n] * f[i % n]);
        Self {
            fock_dim: n,
            amplitudes: amps,
        }
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> Result<Complex64> {
        if op.dim() != self.amplitudes.len() {
            return Err(Error::InvalidDimension(format!(
                "operator dim {} vs state dim {}",
                op.dim(),
                self.amplitudes.len()
            )));
        }
        Ok(self.amplitudes.dotc(&(op.matrix() * &self.amplitudes)))
    }

    /// `<a^dag a + sigma_+ sigma_->`, conserved by the JCM.
    pub fn excitation_number(&self) -> f64 {
        let n = self.fock_dim;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let photons = (i % n) as f64;
                let up = if i < n { 1.0 } else { 0.0 };
                (photons + up) * c.norm_sqr()
            })
            .sum()
    }
}

/// `P(+z)`: the weight of the `|+z>` block.
pub fn excited_probability(psi: &SpinFieldVector) -> f64 {
    psi.amplitudes
        .rows(0, psi.fock_dim)
        .iter()
        .map(|c| c.norm_sqr())
        .sum()
}

/// `H = w0 a^dag a + Omega/2 sigma_z + lambda (f sigma_+ + f^dag sigma_-)`.
pub fn build_hamiltonian(params: &ModelParams, fock_dim: usize) -> Result<OperatorMatrix> {
    params.validate()?;
    if fock_dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "fock_dim must be >= 2, got {fock_dim}"
        )));
    }
    let n = fock_dim;
    let mut h = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for k in 0..n {
        let e = params.omega0 * k as f64;
        h[(k, k)] = Complex64::new(e + 0.5 * params.omega_spin, 0.0);
        h[(n + k, n + k)] = Complex64::new(e - 0.5 * params.omega_spin, 0.0);
    }
    // <+,m| lambda f |-,k>
    for k in 1..n {
        let g = Complex64::new(params.lambda * (k as f64).sqrt(), 0.0);
        // a: m = k - 1
        h[(k - 1, n + k)] += g;
        h[(n + k, k - 1)] += g;
        if params.coupling == Coupling::Rabi {
            // a^dag: m = k, column k - 1
            h[(k, n + k - 1)] += g;
            h[(n + k - 1, k)] += g;
        }
    }
    OperatorMatrix::hermitian(h)
}

struct Block {
    indices: Vec<usize>,
    energies: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

/// One-time eigendecomposition of a time-independent Hamiltonian.
///
/// Decoupled sectors (connected components of the sparsity pattern) are
/// diagonalized separately, so the JCM costs a set of 2×2 problems and the
/// Rabi model two parity blocks.
pub struct SpectralPropagator {
    dim: usize,
    blocks: Vec<Block>,
}

impl SpectralPropagator {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        if h.kind() != crate::fockspace::OperatorKind::Hermitian {
            return Err(Error::InvalidArgument(
                "spectral evolution needs a Hermitian operator".into(),
            ));
        }
        let m = h.matrix();
        let dim = m.nrows();
        let mut blocks = Vec::new();
        for indices in connected_components(m) {
            blocks.push(diagonalize_block(m, indices)?);
        }
        Ok(Self { dim, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All eigenvalues in ascending order.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.blocks.iter().flat_map(|b| b.energies.clone()).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    fn check(&self, psi0: &SpinFieldVector, times: &[f64]) -> Result<()> {
        if psi0.amplitudes.len() != self.dim {
            return Err(Error::InvalidDimension(format!(
                "state dim {} vs Hamiltonian dim {}",
                psi0.amplitudes.len(),
                self.dim
            )));
        }
        check_times(times)
    }

    /// `psi(t) = sum_j exp(-i E_j t) <v_j|psi0> |v_j>` at each requested time.
    pub fn evolve(&self, psi0: &SpinFieldVector, times: &[f64]) -> Result<Vec<SpinFieldVector>> {
        self.check(psi0, times)?;
        let projections: Vec<DVector<Complex64>> = self
            .blocks
            .iter()
            .map(|b| {
                let local = DVector::from_iterator(
                    b.indices.len(),
                    b.indices.iter().map(|&i| psi0.amplitudes[i]),
                );
                b.vectors.adjoint() * local
            })
            .collect();
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            if t == 0.0 {
                out.push(psi0.clone());
                continue;
            }
            let mut amps = DVector::zeros(self.dim);
            for (b, c) in self.blocks.iter().zip(&projections) {
                let phased = DVector::from_iterator(
                    c.len(),
                    c.iter()
                        .zip(&b.energies)
                        .map(|(c, e)| c * Complex64::from_polar(1.0, -e * t)),
                );
                let local = &b.vectors * phased;
                for (k, &i) in b.indices.iter().enumerate() {
                    amps[i] = local[k];
                }
            }
            out.push(SpinFieldVector {
                fock_dim: psi0.fock_dim,
                amplitudes: amps,
            });
        }
        Ok(out)
    }

    /// `P(+z)(t)` without materializing the full state at every time.
    ///
    /// Eigenvectors whose projections carry less than `1e-16` of the total
    /// weight are dropped, as are `+z` rows that stay below `1e-9` in amplitude.
    pub fn excited_probability_series(
        &self,
        psi0: &SpinFieldVector,
        times: &[f64],
    ) -> Result<Vec<f64>> {
        self.check(psi0, times)?;
        let n_up = psi0.fock_dim;
        let mut p = vec![0.0; times.len()];
        for b in &self.blocks {
            let local = DVector::from_iterator(
                b.indices.len(),
                b.indices.iter().map(|&i| psi0.amplitudes[i]),
            );
            let c = b.vectors.adjoint() * local;
            // keep eigenvectors carrying weight
            let mut order: Vec<usize> = (0..c.len()).collect();
            order.sort_by(|&i, &j| c[i].norm_sqr().total_cmp(&c[j].norm_sqr()));
            let mut dropped = 0.0;
            let mut keep = Vec::new();
            for &j in &order {
                let w = c[j].norm_sqr();
                if dropped + w < 1e-16 {
                    dropped += w;
                } else {
                    keep.push(j);
                }
            }
            if keep.is_empty() {
                continue;
            }
            let rows: Vec<usize> = (0..b.indices.len())
                .filter(|&r| b.indices[r] < n_up)
                .filter(|&r| keep.iter().map(|&j| (b.vectors[(r, j)] * c[j]).norm()).sum::<f64>() > 1e-9)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let nr = rows.len();
            let nk = keep.len();
            let w_re = DMatrix::from_fn(nr, nk, |r, j| (b.vectors[(rows[r], keep[j])] * c[keep[j]]).re);
            let w_im = DMatrix::from_fn(nr, nk, |r, j| (b.vectors[(rows[r], keep[j])] * c[keep[j]]).im);
            let energies: Vec<f64> = keep.iter().map(|&j| b.energies[j]).collect();
            const CHUNK: usize = 512;
            for (ci, chunk) in times.chunks(CHUNK).enumerate() {
                let cos = DMatrix::from_fn(nk, chunk.len(), |j, k| (energies[j] * chunk[k]).cos());
                let sin = DMatrix::from_fn(nk, chunk.len(), |j, k| (energies[j] * chunk[k]).sin());
                // (Wr + i Wi)(cos - i sin)
                let re = &w_re * &cos + &w_im * &sin;
                let im = &w_im * &cos - &w_re * &sin;
                for k in 0..chunk.len() {
                    let mut s = 0.0;
                    for r in 0..nr {
                        s += re[(r, k)] * re[(r, k)] + im[(r, k)] * im[(r, k)];
                    }
                    p[ci * CHUNK + k] += s;
                }
            }
        }
        Ok(p)
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    for w in times.windows(2) {
        if !(w[1] >= w[0]) {
            return Err(Error::InvalidArgument("times must be ascending".into()));
        }
    }
    if let Some(t) = times.first() {
        if !(*t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument("times must be finite and >= 0".into()));
        }
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("times must be finite".into()));
    }
    Ok(())
}

fn connected_components(m: &DMatrix<Complex64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if m[(i, j)] != Complex64::new(0.0, 0.0) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

fn diagonalize_block(m: &DMatrix<Complex64>, indices: Vec<usize>) -> Result<Block> {
    let k = indices.len();
    let sub = DMatrix::from_fn(k, k, |i, j| m[(indices[i], indices[j])]);
    let real = sub.iter().all(|z| z.im == 0.0);
    let max_iter = 1000 * k.max(10);
    let (energies, vectors) = if real {
        let r = sub.map(|z| z.re);
        let eig = SymmetricEigen::try_new(r, f64::EPSILON, max_iter).ok_or_else(|| {
            Error::Numeric(format!("real symmetric eigensolver did not converge (block {k})"))
        })?;
        (
            eig.eigenvalues.iter().copied().collect::<Vec<_>>(),
            eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::try_new(sub, f64::EPSILON, max_iter).ok_or_else(|| {
            Error::Numeric(format!("Hermitian eigensolver did not converge (block {k})"))
        })?;
        (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors)
    };
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::Numeric("non-finite eigenvalue".into()));
    }
    Ok(Block {
        indices,
        energies,
        vectors,
    })
}

/// Convenience wrapper: diagonalize `h` once and evolve `psi0`.
pub fn evolve_exact(
    h: &OperatorMatrix,
    psi0: &SpinFieldVector,
    times: &[f64],
) -> Result<Vec<SpinFieldVector>> {
    SpectralPropagator::new(h)?.evolve(psi0, times)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    bits: [u64; 5],
    coupling: Coupling,
    fock_dim: usize,
}

/// Shared propagators keyed by model parameters and truncation.
#[derive(Default)]
pub struct PropagatorCache {
    inner: RwLock<HashMap<CacheKey, Arc<SpectralPropagator>>>,
}

impl PropagatorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(&self, params: &ModelParams, fock_dim: usize) -> Result<Arc<SpectralPropagator>> {
        // the lab-frame Hamiltonian does not depend on alpha
        let key = CacheKey {
            bits: [
                params.omega0.to_bits(),
                params.omega_spin.to_bits(),
                params.lambda.to_bits(),
                0,
                0,
            ],
            coupling: params.coupling,
            fock_dim,
        };
        if let Some(p) = self.inner.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(p));
        }
        let built = Arc::new(SpectralPropagator::new(&build_hamiltonian(params, fock_dim)?)?);
        let mut w = self.inner.write().expect("cache lock");
        Ok(Arc::clone(w.entry(key).or_insert(built)))
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{build_field_state, FieldStateSpec};

    fn up() -> [Complex64; 2] {
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
    }

    #[test]
    fn uncoupled_spectrum_is_diagonal() {
        let p = ModelParams::new(1.3, 0.7, 0.0, Coupling::Rabi, 2.0, 0.0).unwrap();
        let h = build_hamiltonian(&p, 6).unwrap();
        let m = h.matrix();
        for i in 0..12 {
            for j in 0..12 {
                if i != j {
                    assert_eq!(m[(i, j)].norm(), 0.0);
                }
            }
        }
        assert!((m[(3, 3)].re - (3.0 * 1.3 + 0.35)).abs() < 1e-15);
        assert!((m[(9, 9)].re - (3.0 * 1.3 - 0.35)).abs() < 1e-15);
    }

    #[test]
    fn jcm_dressed_energies() {
        let p = ModelParams::resonant(Coupling::Jcm, 0.1, 0.0);
        let h = build_hamiltonian(&p, 30).unwrap();
        let prop = SpectralPropagator::new(&h).unwrap();
        let e = prop.energies();
        // (n + 1/2) w0 +- lambda sqrt(n + 1), plus the ground state -1/2
        let mut want = vec![-0.5];
        for n in 0..5 {
            want.push(n as f64 + 0.5 - 0.1 * ((n + 1) as f64).sqrt());
            want.push(n as f64 + 0.5 + 0.1 * ((n + 1) as f64).sqrt());
        }
        want.sort_by(f64::total_cmp);
        for k in 0..3 {
            assert!((e[k] - want[k]).abs() < 1e-10, "{k}: {} vs {}", e[k], want[k]);
        }
        assert!((e[1] - 0.4).abs() < 1e-10 && (e[2] - 0.6).abs() < 1e-10);
    }

    #[test]
    fn rabi_hamiltonian_is_hermitian() {
        let p = ModelParams::resonant(Coupling::Rabi, 0.1, 0.0);
        let h = build_hamiltonian(&p, 40).unwrap();
        assert!(h.hermiticity_defect() < 1e-14);
        assert!(build_hamiltonian(&p, 1).is_err());
    }

    #[test]
    fn probability_of_simple_states() {
        let field = FockVector::basis(0, 4).unwrap();
        let psi = SpinFieldVector::product(up(), &field);
        assert_eq!(excited_probability(&psi), 1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = SpinFieldVector::product([s.into(), s.into()], &field);
        assert!((excited_probability(&psi) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn evolution_at_zero_and_without_coupling() {
        let p = ModelParams::resonant(Coupling::Jcm, 0.0, 3.0);
        let field = build_field_state(&FieldStateSpec::coherent(3.0.into()), 60).unwrap();
        let psi0 = SpinFieldVector::product(up(), &field);
        let h = build_hamiltonian(&p, 60).unwrap();
        let out = evolve_exact(&h, &psi0, &[0.0, 1.0, 17.5]).unwrap();
        assert_eq!(out[0], psi0);
        for s in &out {
            assert!((excited_probability(s) - excited_probability(&psi0)).abs() < 1e-12);
        }
        assert!(evolve_exact(&h, &psi0, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn series_matches_full_evolution() {
        let p = ModelParams::resonant(Coupling::Rabi, 0.07, 3.0);
        let field = build_field_state(&FieldStateSpec::displaced_fock(3.0.into(), 1), 70).unwrap();
        let psi0 = SpinFieldVector::product(up(), &field);
        let prop = SpectralPropagator::new(&build_hamiltonian(&p, 70).unwrap()).unwrap();
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 1.3).collect();
        let fast = prop.excited_probability_series(&psi0, &times).unwrap();
        let full = prop.evolve(&psi0, &times).unwrap();
        for (a, s) in fast.iter().zip(&full) {
            assert!((a - excited_probability(s)).abs() < 1e-12);
        }
    }

    #[test]
    fn cache_reuses_decompositions() {
        let cache = PropagatorCache::new();
        let p = ModelParams::resonant(Coupling::Jcm, 0.1, 2.0);
        let a = cache.get_or_build(&p, 20).unwrap();
        let b = cache.get_or_build(&p, 20).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let _ = cache.get_or_build(&p, 21).unwrap();
        assert_eq!(cache.len(), 2);
    }
}
