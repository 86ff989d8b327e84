//! Collapse for a superposition of two displaced Fock states; the phase xi
//! selects how the Gaussian envelope is skewed.

use qcfd::harness::{compare, preset, run_scenario, ScenarioConfig};

fn main() -> qcfd::Result<()> {
    let cfg = preset("fig3", &[])?;
    let series = run_scenario(&cfg)?;
    for s in &series[1..] {
        let m = compare(&series[0], s, Some((0.0, 40.0)))?;
        println!("fig3: exact vs {:<12} sup over [0, 40] = {:.4}", s.engine, m.sup_norm);
    }
    for xi in ["0", "1.5707963267948966", "3.141592653589793"] {
        let text = format!(
            "coupling = jcm\nlambda = 0.05\nalpha = 10\nfield = superposition\nxi = {xi}\nreference = mean\nt_end = 60\nn_points = 601\nengines = exact, fbrwa\n"
        );
        let s = run_scenario(&ScenarioConfig::from_text(&text, &[])?)?;
        let m = compare(&s[0], &s[1], None)?;
        println!("xi = {xi:<20} exact vs fbrwa sup {:.4}, P(+z) at t=30: {:.4}", m.sup_norm, s[0].p[300]);
    }
    Ok(())
}
