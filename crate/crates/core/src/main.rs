use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qcfd::fbrwa::lambda_eff;
use qcfd::harness::{
    compare, emit, preset, read_csv, run_scenario, solve_floquet, to_csv, CompareMetrics, OutputFormat,
    ScenarioConfig, TimeSeries,
};
use qcfd::{Error, Result};

/// Floquet-basis spin–field dynamics for the Rabi and Jaynes–Cummings models.
#[derive(Parser)]
#[command(name = "qcfd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its time series.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Reproduce a named figure preset (fig1a..fig1d, fig2a..fig2c, fig3).
    Figure {
        name: String,
        /// Directory for <name>.csv and <name>.svg.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print quasienergies, Fourier coefficients and lambda_eff as CSV.
    Floquet {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare two CSV files produced by simulate or figure.
    Compare {
        csv_a: PathBuf,
        csv_b: PathBuf,
        /// Restrict the comparison to LO,HI.
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
    },
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    coupling: Option<String>,
    #[arg(long)]
    field: Option<String>,
    /// Comma-separated engine list.
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    n_points: Option<String>,
    /// Output path stem; the format extension is appended.
    #[arg(long)]
    out: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(String, String)> {
        [
            ("lambda", &self.lambda),
            ("alpha", &self.alpha),
            ("coupling", &self.coupling),
            ("field", &self.field),
            ("engines", &self.engine),
            ("t_end", &self.t_end),
            ("n_points", &self.n_points),
            ("output", &self.out),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let a: f64 = a.trim().parse().map_err(|_| "bad LO")?;
    let b: f64 = b.trim().parse().map_err(|_| "bad HI")?;
    Ok((a, b))
}

fn output_path(stem: &Path, format: OutputFormat) -> PathBuf {
    if stem.extension().and_then(|e| e.to_str()) == Some(format.extension()) {
        stem.to_path_buf()
    } else {
        let mut s = stem.as_os_str().to_owned();
        s.push(".");
        s.push(format.extension());
        PathBuf::from(s)
    }
}

fn write_outputs(cfg: &ScenarioConfig, series: &[TimeSeries], stem: &Path) -> Result<()> {
    for &format in &cfg.formats {
        let path = output_path(stem, format);
        emit(series, format, &path, &cfg.name)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn report(series: &[TimeSeries]) -> Result<()> {
    let Some(reference) = series.iter().find(|s| s.engine == "exact").or(series.first()) else {
        return Ok(());
    };
    for s in series.iter().filter(|s| s.engine != reference.engine) {
        let m = compare(reference, s, None)?;
        eprintln!(
            "{} vs {}: sup {:.3e}, rmse {:.3e}",
            reference.engine, s.engine, m.sup_norm, m.rmse
        );
    }
    Ok(())
}

fn stdout_write(text: &str) -> Result<()> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        })
}

fn metrics_header() -> &'static str {
    "engine_a,engine_b,samples,sup_norm,rmse,dominant_frequency_a,dominant_frequency_b,frequency_bin"
}

fn metrics_row(a: &str, b: &str, m: &CompareMetrics) -> String {
    format!(
        "{a},{b},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
        m.samples, m.sup_norm, m.rmse, m.dominant_frequency_a, m.dominant_frequency_b, m.frequency_bin
    )
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, overrides } => {
            let cfg = ScenarioConfig::from_file(&config, &overrides.pairs())?;
            let series = run_scenario(&cfg)?;
            report(&series)?;
            match &cfg.output {
                Some(stem) => write_outputs(&cfg, &series, stem),
                None => stdout_write(&to_csv(&series)),
            }
        }
        Command::Figure {
            name,
            out_dir,
            overrides,
        } => {
            let cfg = preset(&name, &overrides.pairs())?;
            let series = run_scenario(&cfg)?;
            report(&series)?;
            let stem = cfg.output.clone().unwrap_or_else(|| out_dir.join(&cfg.name));
            write_outputs(&cfg, &series, &stem)
        }
        Command::Floquet { config, overrides } => {
            let cfg = ScenarioConfig::from_file(&config, &overrides.pairs())?;
            let sol = solve_floquet(&cfg)?;
            let mut out = String::from("quantity,index,value\n");
            out += &format!("q_plus,,{:.16e}\n", sol.q_plus());
            out += &format!("q_minus,,{:.16e}\n", sol.q_minus());
            out += &format!("lambda_eff,,{:.16e}\n", lambda_eff(&sol, cfg.params.lambda));
            out += &format!("gauge_residual,,{:.6e}\n", sol.gauge_residual());
            for n in sol.harmonics().filter(|n| n.rem_euclid(2) == 0) {
                out += &format!("A,{n},{:.16e}\n", sol.a(n));
            }
            for n in sol.harmonics().filter(|n| n.rem_euclid(2) == 1) {
                out += &format!("B,{n},{:.16e}\n", sol.b(n));
            }
            stdout_write(&out)
        }
        Command::Compare { csv_a, csv_b, window } => {
            let a = read_csv(&csv_a)?;
            let b = read_csv(&csv_b)?;
            let mut pairs: Vec<(&TimeSeries, &TimeSeries)> = a
                .iter()
                .filter_map(|x| b.iter().find(|y| y.engine == x.engine).map(|y| (x, y)))
                .collect();
            if pairs.is_empty() && a.len() == 1 && b.len() == 1 {
                pairs.push((&a[0], &b[0]));
            }
            if pairs.is_empty() {
                return Err(Error::Config("the two files share no engine label".into()));
            }
            let mut out = format!("{}\n", metrics_header());
            for (x, y) in pairs {
                let m = compare(x, y, window)?;
                out += &metrics_row(&x.engine, &y.engine, &m);
                out.push('\n');
            }
            stdout_write(&out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
