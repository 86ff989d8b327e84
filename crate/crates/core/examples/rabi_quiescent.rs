//! Rabi-model collapse followed by small oscillations near twice the field
//! frequency, compared with the Floquet-basis prediction.

use qcfd::harness::{compare, dominant_frequency, preset, run_scenario};

fn main() -> qcfd::Result<()> {
    let over = vec![("t_end".to_string(), "600".to_string()), ("n_points".to_string(), "6001".to_string())];
    let cfg = preset("fig2a", &over)?;
    let series = run_scenario(&cfg)?;
    let (exact, fbrwa) = (&series[0], &series[1]);
    let collapse = compare(exact, fbrwa, Some((0.0, 150.0)))?;
    println!("collapse window [0, 150]: sup {:.4}, rmse {:.4}", collapse.sup_norm, collapse.rmse);
    let start = exact.t.partition_point(|&t| t < 250.0);
    for s in [exact, fbrwa] {
        let (w, bin) = dominant_frequency(&s.t[start..], &s.p[start..])?;
        println!("{:<6} dominant frequency on [250, 600]: {w:.4} (bin {bin:.4})", s.engine);
    }
    Ok(())
}
