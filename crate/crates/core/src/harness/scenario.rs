use std::thread;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fbrwa::{
    fbrwa_prepare, lambda_eff, p_excited_closed_form, p_excited_fbrwa, qcfd_fock_dim, qcfd_integrate,
    CollapseKind,
};
use crate::floquet::{floquet_solve, shirley_solve, FloquetSolution};
use crate::fockspace::{build_field_state, default_fock_dim};
use crate::fullmodel::{Coupling, ModelParams, PropagatorCache, SpinFieldVector};

use super::config::{fock_dim_from_env, Engine, FieldKind, FloquetBackend, ScenarioConfig};

/// `P(+z)` sampled on a time grid by one engine.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub engine: String,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub params_hash: String,
    /// Fock truncation used, when the engine has one.
    pub fock_dim: Option<usize>,
    /// Norm lost by truncating the initial field, when the engine has one.
    pub truncation_loss: Option<f64>,
}

impl TimeSeries {
    pub fn new(engine: impl Into<String>, t: Vec<f64>, p: Vec<f64>, params_hash: impl Into<String>) -> Result<Self> {
        let s = Self {
            engine: engine.into(),
            t,
            p,
            params_hash: params_hash.into(),
            fock_dim: None,
            truncation_loss: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t.len() != self.p.len() {
            return Err(Error::Numeric(format!(
                "{}: {} times but {} values",
                self.engine,
                self.t.len(),
                self.p.len()
            )));
        }
        if let Some((t, p)) = self
            .t
            .iter()
            .zip(&self.p)
            .find(|(_, p)| !(**p >= -1e-9 && **p <= 1.0 + 1e-9))
        {
            return Err(Error::Numeric(format!(
                "{}: probability {p} at t = {t} is outside [0, 1]",
                self.engine
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// First 16 hex digits of the SHA-256 of the scenario's physical content.
pub fn params_hash(config: &ScenarioConfig) -> String {
    let digest = Sha256::digest(config.canonical_physics().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Truncation for the lab-frame engine: environment, then config, then the default rule.
pub fn exact_fock_dim(config: &ScenarioConfig) -> Result<usize> {
    if let Some(d) = fock_dim_from_env()? {
        return Ok(d);
    }
    if let Some(d) = config.fock_dim_override {
        return Ok(d);
    }
    let field = config.field();
    Ok(default_fock_dim(field.max_displacement()) + 2 * field.max_fock_index())
}

/// Floquet states for the scenario's semiclassical problem.
pub fn solve_floquet(config: &ScenarioConfig) -> Result<FloquetSolution> {
    let p = &config.params;
    match (config.floquet_backend, p.coupling) {
        (FloquetBackend::Auto, Coupling::Jcm) => FloquetSolution::jcm_rotating_wave(p),
        (FloquetBackend::Shirley, _) => shirley_solve(p, config.harmonic_cutoff),
        _ => floquet_solve(p, config.harmonic_cutoff, config.samples_per_period),
    }
}

fn closed_form_kind(config: &ScenarioConfig) -> Result<(CollapseKind, ModelParams)> {
    let p = &config.params;
    let spin_up = config.initial_spin[1].norm() == 0.0;
    let reference_matches = (p.alpha() - config.field_alpha).norm() <= 1e-12 * (1.0 + config.field_alpha.norm());
    if p.coupling != Coupling::Jcm || !p.is_resonant() || !spin_up || !reference_matches {
        return Err(Error::Config(
            "closed_form engine needs the resonant JCM, spin up and reference = field; use the fbrwa engine".into(),
        ));
    }
    let kind = match config.field_kind {
        FieldKind::Coherent => CollapseKind::Coherent,
        FieldKind::DisplacedFock(n) => CollapseKind::DisplacedFock(n),
        FieldKind::Superposition { xi } => {
            let d = (xi + config.field_alpha.arg()).rem_euclid(std::f64::consts::TAU);
            if d.min(std::f64::consts::TAU - d) > 1e-12 || config.field_alpha.norm() == 0.0 {
                return Err(Error::Config(
                    "closed_form engine needs xi = -arg(beta) for the superposition; use the fbrwa engine".into(),
                ));
            }
            CollapseKind::Superposition
        }
    };
    let mut cp = *p;
    cp.alpha_mod = config.field_alpha.norm();
    Ok((kind, cp))
}

fn run_engine(
    config: &ScenarioConfig,
    engine: Engine,
    times: &[f64],
    hash: &str,
    cache: &PropagatorCache,
) -> Result<TimeSeries> {
    let field = config.field();
    let spin = config.initial_spin;
    let mut series = match engine {
        Engine::Exact => {
            let dim = exact_fock_dim(config)?;
            let phi = build_field_state(&field, dim)?;
            let loss = phi.truncation_loss();
            let psi0 = SpinFieldVector::product(normalize(spin)?, &phi);
            let prop = cache.get_or_build(&config.params, dim)?;
            let p = prop.excited_probability_series(&psi0, times)?;
            let mut s = TimeSeries::new(engine.label(), times.to_vec(), p, hash)?;
            s.fock_dim = Some(dim);
            s.truncation_loss = Some(loss);
            s
        }
        Engine::Fbrwa => {
            let sol = solve_floquet(config)?;
            let res = fbrwa_prepare(&sol, spin, &field)?;
            let p = times
                .iter()
                .map(|&t| p_excited_fbrwa(&sol, &res, t))
                .collect::<Result<Vec<_>>>()?;
            TimeSeries::new(engine.label(), times.to_vec(), p, hash)?
        }
        Engine::ClosedForm => {
            let (kind, cp) = closed_form_kind(config)?;
            let p = times
                .iter()
                .map(|&t| p_excited_closed_form(kind, &cp, t))
                .collect::<Result<Vec<_>>>()?;
            TimeSeries::new(engine.label(), times.to_vec(), p, hash)?
        }
        Engine::Qcfd => {
            let sol = solve_floquet(config)?;
            let t_max = times.last().copied().unwrap_or(0.0);
            let dim = match (fock_dim_from_env()?, config.fock_dim_override) {
                (Some(d), _) | (None, Some(d)) => d,
                (None, None) => qcfd_fock_dim(
                    &field,
                    config.params.alpha(),
                    lambda_eff(&sol, config.params.lambda),
                    t_max,
                )?,
            };
            let out = qcfd_integrate(&sol, spin, &field, times, dim, config.qcfd)?;
            let p = out.iter().map(|s| s.p_excited.clamp(0.0, 1.0)).collect();
            let mut s = TimeSeries::new(engine.label(), times.to_vec(), p, hash)?;
            s.fock_dim = Some(dim);
            s
        }
    };
    series.engine = engine.label().to_string();
    Ok(series)
}

fn normalize(spin: [Complex64; 2]) -> Result<[Complex64; 2]> {
    let n = (spin[0].norm_sqr() + spin[1].norm_sqr()).sqrt();
    if !(n > 0.0) {
        return Err(Error::Config("initial spin state must be non-zero".into()));
    }
    Ok([spin[0] / n, spin[1] / n])
}

/// Runs every selected engine, in the configured order. Engines run on
/// separate threads; the result is deterministic.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<TimeSeries>> {
    run_scenario_with_cache(config, &PropagatorCache::new())
}

pub fn run_scenario_with_cache(config: &ScenarioConfig, cache: &PropagatorCache) -> Result<Vec<TimeSeries>> {
    config.grid.validate()?;
    if config.engines.is_empty() {
        return Err(Error::Config("at least one engine must be selected".into()));
    }
    // regime mismatches are configuration errors, reported before any work
    if config.engines.contains(&Engine::ClosedForm) {
        closed_form_kind(config)?;
    }
    let times = config.grid.times();
    let hash = params_hash(config);
    let results: Vec<Result<TimeSeries>> = thread::scope(|scope| {
        let handles: Vec<_> = config
            .engines
            .iter()
            .map(|&e| {
                let (times, hash) = (&times, &hash);
                scope.spawn(move || run_engine(config, e, times, hash, cache))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Numeric("engine thread panicked".into()))))
            .collect()
    });
    results.into_iter().collect()
}
