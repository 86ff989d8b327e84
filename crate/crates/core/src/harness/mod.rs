//! Scenario plumbing: configuration, engine runs, comparison metrics and
//! CSV/SVG output.

pub mod config;
pub mod emit;
pub mod metrics;
pub mod scenario;

pub use config::{
    fock_dim_from_env, preset, preset_names, Engine, FieldKind, FloquetBackend, OutputFormat,
    ScenarioConfig, TimeGrid, FOCK_DIM_ENV,
};
pub use emit::{emit, parse_csv, read_csv, to_csv, to_svg};
pub use metrics::{compare, dominant_frequency, envelope_gap, hilbert_envelope, CompareMetrics};
pub use scenario::{params_hash, run_scenario, run_scenario_with_cache, solve_floquet, TimeSeries};
