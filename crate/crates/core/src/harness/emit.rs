use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use crate::error::{Error, Result};

use super::config::OutputFormat;
use super::scenario::TimeSeries;

pub const CSV_HEADER: &str = "t,engine,p,params_hash";

static EMIT_LOCK: Mutex<()> = Mutex::new(());

/// CSV text: one row per (engine, t), 17 significant digits.
pub fn to_csv(series: &[TimeSeries]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in series {
        for (t, p) in s.t.iter().zip(&s.p) {
            let _ = writeln!(out, "{t:.16e},{},{p:.16e},{}", s.engine, s.params_hash);
        }
    }
    out
}

/// Inverse of [`to_csv`]; series keep their first-appearance order.
pub fn parse_csv(text: &str) -> Result<Vec<TimeSeries>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Config(format!("CSV must start with '{CSV_HEADER}'"))),
    }
    let mut out: Vec<TimeSeries> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Config(format!("CSV line {}: malformed row '{line}'", i + 1));
        if cols.len() != 4 {
            return Err(bad());
        }
        let t: f64 = cols[0].parse().map_err(|_| bad())?;
        let p: f64 = cols[2].parse().map_err(|_| bad())?;
        let (engine, hash) = (cols[1], cols[3]);
        match out.iter_mut().find(|s| s.engine == engine) {
            Some(s) => {
                if s.params_hash != hash {
                    return Err(Error::Config(format!(
                        "CSV line {}: params_hash changes within engine '{engine}'",
                        i + 1
                    )));
                }
                s.t.push(t);
                s.p.push(p);
            }
            None => out.push(TimeSeries {
                engine: engine.to_string(),
                t: vec![t],
                p: vec![p],
                params_hash: hash.to_string(),
                fock_dim: None,
                truncation_loss: None,
            }),
        }
    }
    for s in &out {
        s.validate()?;
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<TimeSeries>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const COLOURS: [&str; 6] = ["#c0158f", "#111111", "#1f6fd1", "#e08a00", "#2a9d3a", "#7a4bc2"];

/// Self-contained SVG line plot of `P(+z)` against `t`.
pub fn to_svg(series: &[TimeSeries], title: &str) -> String {
    let (w, h) = (900.0, 500.0);
    let (left, right, top, bottom) = (70.0, 160.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let t0 = series
        .iter()
        .flat_map(|s| s.t.first())
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let t1 = series
        .iter()
        .flat_map(|s| s.t.last())
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let (t0, t1) = if t1 > t0 { (t0, t1) } else { (t0, t0 + 1.0) };
    let x = |t: f64| left + pw * (t - t0) / (t1 - t0);
    let y = |p: f64| top + ph * (1.0 - p);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    // axes
    let _ = writeln!(
        s,
        r#"<path d="M{left} {top} V{} H{}" fill="none" stroke="black" stroke-width="1"/>"#,
        top + ph,
        left + pw
    );
    for i in 0..=5 {
        let p = i as f64 / 5.0;
        let yy = y(p);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{yy:.2}" x2="{left}" y2="{yy:.2}" stroke="black"/><text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{p:.1}</text>"#,
            left - 5.0,
            left - 8.0,
            yy + 4.0
        );
        let tt = t0 + (t1 - t0) * i as f64 / 5.0;
        let xx = x(tt);
        let _ = writeln!(
            s,
            r#"<line x1="{xx:.2}" y1="{}" x2="{xx:.2}" y2="{}" stroke="black"/><text x="{xx:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            top + ph,
            top + ph + 5.0,
            top + ph + 18.0,
            format_tick(tt)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">t</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">P(+z)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (k, ser) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let mut pts = String::with_capacity(ser.t.len() * 16);
        for (t, p) in ser.t.iter().zip(&ser.p) {
            let _ = write!(pts, "{:.2},{:.2} ", x(*t), y(*p));
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1"/>"#,
            pts.trim_end()
        );
        let ly = top + 10.0 + 20.0 * k as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0,
            escape(&ser.engine)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{:.0}", v)
    } else {
        format!("{:.1}", v)
    }
}

/// Writes `series` to `path`. Nothing is created when `series` is empty.
pub fn emit(series: &[TimeSeries], format: OutputFormat, path: &Path, title: &str) -> Result<()> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("nothing to emit: empty series list".into()));
    }
    for s in series {
        s.validate()?;
    }
    let body = match format {
        OutputFormat::Csv => to_csv(series),
        OutputFormat::Svg => to_svg(series, title),
    };
    let _guard = EMIT_LOCK.lock().unwrap_or_else(|e| e.into_inner());
    fs::write(path, body).map_err(|e| Error::io(path, e))
}
