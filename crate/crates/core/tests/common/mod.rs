//! Independent reference models shared by the integration tests and the
//! acceptance runner. The oracles in this file do not call into the crate.

#![allow(dead_code)]

pub mod checks;

/// Continuous two-lag cascade with transport delay,
/// `tc1·x1' = -x1 + g·u(t - d)`, `tc2·x2' = -x2 + x1`, integrated with RK4.
pub struct LagCascadeOracle {
    pub gain: f64,
    pub tc1: f64,
    pub tc2: f64,
    pub delay: f64,
}

impl LagCascadeOracle {
    /// Output `x2` at every multiple of `ts` for `n` samples, starting at rest.
    /// `input(t)` is the undelayed input; `substeps` RK4 steps per sample.
    pub fn sampled_response(&self, input: impl Fn(f64) -> f64, ts: f64, n: usize, substeps: usize) -> Vec<f64> {
        let h = ts / substeps as f64;
        let u = |t: f64| if t < self.delay { 0.0 } else { input(t - self.delay) };
        let rhs = |t: f64, x: [f64; 2]| {
            [
                (-x[0] + self.gain * u(t)) / self.tc1,
                (-x[1] + x[0]) / self.tc2,
            ]
        };
        let mut x = [0.0f64; 2];
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(x[1]);
            for j in 0..substeps {
                let t = k as f64 * ts + j as f64 * h;
                x = rk4(&rhs, t, x, h);
            }
        }
        out
    }
}

fn rk4(f: &impl Fn(f64, [f64; 2]) -> [f64; 2], t: f64, x: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
    let k1 = f(t, x);
    let k2 = f(t + h / 2.0, add(x, k1, h / 2.0));
    let k3 = f(t + h / 2.0, add(x, k2, h / 2.0));
    let k4 = f(t + h, add(x, k3, h));
    [
        x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Fine-step truth for `dδq/dt = F(t) + α·δu(t - h)`, RK4 on a grid of
/// `substeps` per sample period.
pub struct UltraLocalTruth {
    pub alpha: f64,
    pub delay: f64,
    pub ts: f64,
    pub substeps: usize,
    pub t: f64,
    pub dq: f64,
}

impl UltraLocalTruth {
    pub fn new(alpha: f64, delay: f64, ts: f64, substeps: usize, dq0: f64) -> Self {
        Self { alpha, delay, ts, substeps, t: 0.0, dq: dq0 }
    }

    /// Advances one sample period. `du(t)` is the undelayed input as a
    /// function of time.
    pub fn advance(&mut self, f: impl Fn(f64) -> f64, du: impl Fn(f64) -> f64) {
        let h = self.ts / self.substeps as f64;
        let rate = |t: f64| f(t) + self.alpha * du(t - self.delay);
        for _ in 0..self.substeps {
            let t = self.t;
            // RK4 on a pure quadrature reduces to Simpson's rule
            self.dq += h / 6.0 * (rate(t) + 4.0 * rate(t + h / 2.0) + rate(t + h));
            self.t += h;
        }
    }
}

/// Ordinary least-squares line `x ≈ a0 + a1·σ` through `(σ_i, x_i)`.
pub fn least_squares_line(sigma: &[f64], x: &[f64]) -> (f64, f64) {
    let n = sigma.len() as f64;
    let ms = sigma.iter().sum::<f64>() / n;
    let mx = x.iter().sum::<f64>() / n;
    let sxy: f64 = sigma.iter().zip(x).map(|(s, v)| (s - ms) * (v - mx)).sum();
    let sxx: f64 = sigma.iter().map(|s| (s - ms) * (s - ms)).sum();
    let a1 = sxy / sxx;
    (mx - a1 * ms, a1)
}

/// Slope of the least-squares fit of `ln|e|` against `t`, negated.
pub fn decay_rate(t: &[f64], e: &[f64]) -> f64 {
    let logs: Vec<f64> = e.iter().map(|v| v.abs().ln()).collect();
    -least_squares_line(t, &logs).1
}

/// Operating point from first principles: `τ0 = q0/c + T_p`,
/// `w0 = c·τ0/N`, `u0 = 2/w0²`.
pub fn operating_point(q0: f64, c: f64, tp: f64, n: f64) -> (f64, f64, f64) {
    let tau0 = q0 / c + tp;
    let w0 = c * tau0 / n;
    (tau0, w0, 2.0 / (w0 * w0))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
