//! Dormand–Prince 5(4) embedded Runge–Kutta pair for complex state vectors.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive integrator for `dy/dt = f(t, y)`. Keeps its step size between
/// calls so that integrating through many output times stays cheap.
#[derive(Clone, Debug)]
pub struct DormandPrince {
    rtol: f64,
    atol: f64,
    h: f64,
    max_steps: usize,
    steps: usize,
    rejected: usize,
    k: Vec<Vec<Complex64>>,
    stage: Vec<Complex64>,
    y_new: Vec<Complex64>,
}

impl DormandPrince {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            h: 0.0,
            max_steps: 50_000_000,
            steps: 0,
            rejected: 0,
            k: Vec::new(),
            stage: Vec::new(),
            y_new: Vec::new(),
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn accepted_steps(&self) -> usize {
        self.steps
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    fn ensure_buffers(&mut self, n: usize) {
        if self.stage.len() != n {
            self.k = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
            self.stage = vec![Complex64::new(0.0, 0.0); n];
            self.y_new = vec![Complex64::new(0.0, 0.0); n];
        }
    }

    /// Advances `y` from `t0` to `t1` (`t1 >= t0`).
    pub fn integrate<F>(&mut self, mut f: F, t0: f64, t1: f64, y: &mut [Complex64]) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        if t1 < t0 {
            return Err(Error::InvalidArgument(format!(
                "integration must run forward, got {t0} -> {t1}"
            )));
        }
        if t1 == t0 {
            return Ok(());
        }
        let n = y.len();
        self.ensure_buffers(n);
        if self.h <= 0.0 {
            self.h = self.initial_step(&mut f, t0, y);
        }
        let span = t1 - t0;
        let mut t = t0;
        f(t, y, &mut self.k[0]);
        while t < t1 {
            if self.steps > self.max_steps {
                return Err(Error::StepSize(format!(
                    "exceeded {} steps at t = {t}",
                    self.max_steps
                )));
            }
            let mut h = self.h.min(t1 - t);
            let last = h >= t1 - t;
            if h < 1e-14 * span.max(t.abs()) {
                return Err(Error::StepSize(format!("step size underflow at t = {t}")));
            }
            // stages 2..7
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, a) in A[s].iter().enumerate().take(s) {
                        if *a != 0.0 {
                            acc += self.k[j][i] * *a;
                        }
                    }
                    self.stage[i] = y[i] + acc * h;
                }
                let (head, tail) = self.k.split_at_mut(s);
                let _ = head;
                f(t + C[s] * h, &self.stage, &mut tail[0]);
                if s == 6 {
                    self.y_new.copy_from_slice(&self.stage);
                }
            }
            let mut err = 0.0f64;
            for i in 0..n {
                let mut e = Complex64::new(0.0, 0.0);
                for (j, ej) in E.iter().enumerate() {
                    if *ej != 0.0 {
                        e += self.k[j][i] * *ej;
                    }
                }
                let scale = self.atol + self.rtol * y[i].norm().max(self.y_new[i].norm());
                let r = (e * h).norm() / scale;
                err += r * r;
            }
            let err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::StepSize(format!("non-finite error estimate at t = {t}")));
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                y.copy_from_slice(&self.y_new);
                t = if last { t1 } else { t + h };
                self.k.swap(0, 6);
                self.steps += 1;
                // a step clipped to hit t1 says little about the next size
                if h >= self.h {
                    self.h = h * factor;
                }
            } else {
                self.rejected += 1;
                h *= factor.min(1.0);
                self.h = h;
            }
        }
        Ok(())
    }

    fn initial_step<F>(&mut self, f: &mut F, t0: f64, y: &[Complex64]) -> f64
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let n = y.len();
        let mut dy = vec![Complex64::new(0.0, 0.0); n];
        f(t0, y, &mut dy);
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..n {
            let sc = self.atol + self.rtol * y[i].norm();
            d0 += (y[i].norm() / sc).powi(2);
            d1 += (dy[i].norm() / sc).powi(2);
        }
        let d0 = (d0 / n as f64).sqrt();
        let d1 = (d1 / n as f64).sqrt();
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h.min(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_rotation_is_accurate() {
        // y' = -i w y  ->  y(t) = exp(-i w t)
        let w = 1.7;
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut dp = DormandPrince::new(1e-12, 1e-14);
        let mut t = 0.0;
        for _ in 0..10 {
            dp.integrate(|_, y, dy| dy[0] = Complex64::new(0.0, -w) * y[0], t, t + 3.0, &mut y)
                .unwrap();
            t += 3.0;
        }
        let exact = Complex64::from_polar(1.0, -w * t);
        assert!((y[0] - exact).norm() < 1e-9);
    }

    #[test]
    fn time_dependent_coefficient() {
        // y' = i cos(t) y  ->  y = exp(i sin t)
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut dp = DormandPrince::new(1e-11, 1e-13);
        dp.integrate(|t, y, dy| dy[0] = Complex64::new(0.0, t.cos()) * y[0], 0.0, 20.0, &mut y)
            .unwrap();
        assert!((y[0] - Complex64::from_polar(1.0, 20f64.sin())).norm() < 1e-9);
    }

    #[test]
    fn backwards_is_rejected() {
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut dp = DormandPrince::new(1e-8, 1e-10);
        assert!(dp.integrate(|_, _, dy| dy[0] = 0.0.into(), 1.0, 0.0, &mut y).is_err());
    }
}
