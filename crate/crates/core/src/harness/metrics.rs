use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

use super::scenario::TimeSeries;

/// Differences between two series on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareMetrics {
    pub window: (f64, f64),
    pub samples: usize,
    pub sup_norm: f64,
    pub rmse: f64,
    /// Angular frequency of the largest spectral peak of each series.
    pub dominant_frequency_a: f64,
    pub dominant_frequency_b: f64,
    /// Angular width of one DFT bin over the window.
    pub frequency_bin: f64,
}

impl CompareMetrics {
    pub fn frequency_difference(&self) -> f64 {
        (self.dominant_frequency_a - self.dominant_frequency_b).abs()
    }
}

/// Fails unless both series sample the same times.
pub fn check_same_grid(a: &TimeSeries, b: &TimeSeries) -> Result<()> {
    if a.t.len() != b.t.len() {
        return Err(Error::Grid(format!(
            "{} has {} samples, {} has {}",
            a.engine,
            a.t.len(),
            b.engine,
            b.t.len()
        )));
    }
    for (x, y) in a.t.iter().zip(&b.t) {
        if (x - y).abs() > 1e-12 * x.abs().max(1.0) {
            return Err(Error::Grid(format!("sample times differ: {x} vs {y}")));
        }
    }
    Ok(())
}

fn window_indices(t: &[f64], window: Option<(f64, f64)>) -> Result<(usize, usize)> {
    let Some((lo, hi)) = window else {
        return Ok((0, t.len()));
    };
    if !(lo <= hi) {
        return Err(Error::InvalidArgument(format!("empty window [{lo}, {hi}]")));
    }
    let start = t.partition_point(|&x| x < lo);
    let end = t.partition_point(|&x| x <= hi);
    if end <= start {
        return Err(Error::InvalidArgument(format!("no samples in window [{lo}, {hi}]")));
    }
    Ok((start, end))
}

/// Sup-norm, RMSE and dominant frequencies over an optional time window.
pub fn compare(a: &TimeSeries, b: &TimeSeries, window: Option<(f64, f64)>) -> Result<CompareMetrics> {
    check_same_grid(a, b)?;
    if a.t.is_empty() {
        return Err(Error::Grid("series are empty".into()));
    }
    let (s, e) = window_indices(&a.t, window)?;
    let (pa, pb, t) = (&a.p[s..e], &b.p[s..e], &a.t[s..e]);
    let mut sup = 0.0f64;
    let mut sq = 0.0;
    for (x, y) in pa.iter().zip(pb) {
        let d = (x - y).abs();
        sup = sup.max(d);
        sq += d * d;
    }
    let n = pa.len();
    let (fa, bin) = dominant_frequency(t, pa)?;
    let (fb, _) = dominant_frequency(t, pb)?;
    Ok(CompareMetrics {
        window: (t[0], t[n - 1]),
        samples: n,
        sup_norm: sup,
        rmse: (sq / n as f64).sqrt(),
        dominant_frequency_a: fa,
        dominant_frequency_b: fb,
        frequency_bin: bin,
    })
}

/// `x` minus its least-squares straight line.
pub fn detrend(t: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let mx = x.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut stx = 0.0;
    for (ti, xi) in t.iter().zip(x) {
        stt += (ti - mt) * (ti - mt);
        stx += (ti - mt) * (xi - mx);
    }
    let slope = if stt > 0.0 { stx / stt } else { 0.0 };
    t.iter().zip(x).map(|(ti, xi)| xi - mx - slope * (ti - mt)).collect()
}

/// Angular frequency of the largest non-zero DFT peak of the detrended
/// signal, and the bin width. Samples must be uniformly spaced.
pub fn dominant_frequency(t: &[f64], x: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n < 4 || t.len() != n {
        return Ok((0.0, 0.0));
    }
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Grid("frequency analysis needs increasing times".into()));
    }
    let y = detrend(t, x);
    let mut buf: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bin = std::f64::consts::TAU / (n as f64 * dt);
    let (k, peak) = (1..=n / 2)
        .map(|k| (k, buf[k].norm()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if peak <= 1e-12 * (n as f64) {
        return Ok((0.0, bin));
    }
    Ok((k as f64 * bin, bin))
}

/// Modulus of the analytic signal of `x` (FFT-based Hilbert transform).
pub fn hilbert_envelope(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let h = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *v *= h;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|v| v.norm() / n as f64).collect()
}

/// Largest difference between the oscillation envelopes of `P - 1/2` for
/// samples with `t <= until`.
pub fn envelope_gap(a: &TimeSeries, b: &TimeSeries, until: f64) -> Result<f64> {
    check_same_grid(a, b)?;
    let ea = hilbert_envelope(&a.p.iter().map(|p| p - 0.5).collect::<Vec<_>>());
    let eb = hilbert_envelope(&b.p.iter().map(|p| p - 0.5).collect::<Vec<_>>());
    Ok(a.t
        .iter()
        .zip(ea.iter().zip(&eb))
        .filter(|(t, _)| **t <= until)
        .map(|(_, (x, y))| (x - y).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(label: &str, t: &[f64], f: impl Fn(f64) -> f64) -> TimeSeries {
        TimeSeries::new(label, t.to_vec(), t.iter().map(|&x| f(x)).collect(), "h").unwrap()
    }

    fn grid(n: usize, end: f64) -> Vec<f64> {
        (0..n).map(|j| end * j as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn identical_series_have_zero_metrics() {
        let t = grid(501, 50.0);
        let a = series("a", &t, |x| 0.5 + 0.4 * (1.3 * x).cos());
        let m = compare(&a, &a.clone(), None).unwrap();
        assert_eq!(m.sup_norm, 0.0);
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.frequency_difference(), 0.0);
    }

    #[test]
    fn mismatched_grids_are_grid_errors() {
        let a = series("a", &grid(11, 1.0), |_| 0.5);
        let b = series("b", &grid(12, 1.0), |_| 0.5);
        assert!(matches!(compare(&a, &b, None), Err(Error::Grid(_))));
        let c = series("c", &grid(11, 1.1), |_| 0.5);
        assert!(matches!(compare(&a, &c, None), Err(Error::Grid(_))));
    }

    #[test]
    fn sup_and_rmse() {
        let t = grid(5, 4.0);
        let a = series("a", &t, |_| 0.5);
        let b = series("b", &t, |x| if x == 2.0 { 0.7 } else { 0.5 });
        let m = compare(&a, &b, None).unwrap();
        assert!((m.sup_norm - 0.2).abs() < 1e-15);
        assert!((m.rmse - (0.04f64 / 5.0).sqrt()).abs() < 1e-15);
        let w = compare(&a, &b, Some((3.0, 4.0))).unwrap();
        assert_eq!(w.sup_norm, 0.0);
        assert_eq!(w.samples, 2);
    }

    #[test]
    fn finds_dominant_frequency() {
        let t = grid(4001, 200.0);
        let a = series("a", &t, |x| 0.5 + 0.01 * x / 200.0 + 0.1 * (2.0 * x).sin() + 0.03 * (0.7 * x).cos());
        let (w, bin) = dominant_frequency(&a.t, &a.p).unwrap();
        assert!((w - 2.0).abs() <= bin, "{w} {bin}");
        assert!((bin - std::f64::consts::TAU / (4001.0 * 0.05)).abs() < 1e-12);
    }

    #[test]
    fn hilbert_envelope_of_modulated_cosine() {
        let t = grid(8000, 400.0);
        let x: Vec<f64> = t.iter().map(|&s| (-(s - 200.0).powi(2) / 5000.0).exp() * (3.0 * s).cos()).collect();
        let env = hilbert_envelope(&x);
        for (i, s) in t.iter().enumerate().skip(500).take(7000) {
            let want = (-(s - 200.0).powi(2) / 5000.0).exp();
            assert!((env[i] - want).abs() < 1e-3, "t={s}");
        }
    }
}
