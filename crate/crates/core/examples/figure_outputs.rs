//! Writes every figure preset as CSV and SVG and reads the CSV back.

use qcfd::harness::{emit, preset, preset_names, read_csv, run_scenario, OutputFormat};

fn main() -> qcfd::Result<()> {
    let dir = std::env::temp_dir().join("qcfd-figures");
    std::fs::create_dir_all(&dir).map_err(|e| qcfd::Error::Io { path: dir.clone(), source: e })?;
    for name in preset_names() {
        let over = vec![("n_points".to_string(), "801".to_string())];
        let cfg = preset(name, &over)?;
        let series = run_scenario(&cfg)?;
        let csv = dir.join(format!("{name}.csv"));
        emit(&series, OutputFormat::Csv, &csv, name)?;
        emit(&series, OutputFormat::Svg, &dir.join(format!("{name}.svg")), name)?;
        let back = read_csv(&csv)?;
        println!(
            "{name}: {} engines, hash {}, round trip {}",
            series.len(),
            series[0].params_hash,
            if back.iter().zip(&series).all(|(a, b)| a.p == b.p) { "exact" } else { "LOSSY" }
        );
    }
    println!("written to {}", dir.display());
    Ok(())
}
