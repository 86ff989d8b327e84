//! Collapse of Rabi oscillations for displaced Fock states: closed form,
//! FBRWA pipeline and exact evolution side by side.

use qcfd::harness::{compare, preset, run_scenario};

fn main() -> qcfd::Result<()> {
    for name in ["fig1a", "fig1b", "fig1c", "fig1d"] {
        let cfg = preset(name, &[])?;
        let series = run_scenario(&cfg)?;
        let exact = &series[0];
        for s in &series[1..] {
            let m = compare(exact, s, Some((0.0, 40.0)))?;
            println!("{name}: exact vs {:<12} sup over [0, 40] = {:.4}", s.engine, m.sup_norm);
        }
        let env_at = |t: f64| {
            let i = exact.t.partition_point(|&x| x < t);
            exact.p[i]
        };
        println!("        exact P(+z) at t = 20, 40, 80: {:.4} {:.4} {:.4}", env_at(20.0), env_at(40.0), env_at(80.0));
    }
    Ok(())
}
