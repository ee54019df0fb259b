//! Algebraic sliding-window estimators.
//!
//! Two kernels are provided. [`FKernel`] recovers the lumped term `F` of the
//! ultra-local model `dδq/dt = F + α·δu(t - h)` from a window of outputs and
//! delayed inputs:
//!
//! ```text
//! F_est(t) = -(6/τ³) ∫₀^τ [ (τ - 2σ)·δq(σ) + α·σ(τ - σ)·δu(σ - h) ] dσ
//! ```
//!
//! [`TrendKernel`] extracts the mean and slope `(a0, a1)` of a signal as the
//! first-degree polynomial `a0 + a1·σ` best describing the window, via the
//! integral kernels `(2T - 3σ)` and `(T - 2σ)`.
//!
//! Both are evaluated with the composite trapezoid. The normalizing moments
//! (`τ³/6`, `T²/2`, ...) are computed with the same quadrature rather than in
//! closed form, so every estimator is exact (up to rounding) on affine
//! windows at any sample period.

use thiserror::Error;

use crate::signals::{trapezoid, SignalError, SlidingWindow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("output and input windows differ: {0}")]
    Misaligned(&'static str),
    #[error("forecast horizon {horizon} s outside [0, {bound}] s")]
    HorizonOutOfRange { horizon: f64, bound: f64 },
    #[error("invalid estimator config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Length of the `F` estimation window `τ` [s].
    pub window: f64,
    /// Length of the trend-fit window on `F_est` [s].
    pub forecast_window: f64,
    /// Ultra-local input gain `α`.
    pub alpha: f64,
    /// Assumed delay `h` [s].
    pub delay: f64,
    /// Sample period [s].
    pub ts: f64,
    /// Largest accepted forecast horizon; `None` means `max(h, forecast_window)`.
    pub max_horizon: Option<f64>,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        let bad = |msg: String| Err(EstimatorError::Config(msg));
        if !(self.ts > 0.0) || !self.ts.is_finite() {
            return bad(format!("sample period must be positive, got {}", self.ts));
        }
        if !(self.window >= 2.0 * self.ts) {
            return bad(format!("estimation window {} s shorter than 2·Ts", self.window));
        }
        if !(self.forecast_window >= 2.0 * self.ts) {
            return bad(format!(
                "forecast window {} s shorter than 2·Ts",
                self.forecast_window
            ));
        }
        if !(self.delay >= 0.0) || !self.delay.is_finite() {
            return bad(format!("delay must be non-negative, got {}", self.delay));
        }
        if self.alpha == 0.0 || !self.alpha.is_finite() {
            return bad(format!("alpha must be finite and non-zero, got {}", self.alpha));
        }
        Ok(())
    }

    pub fn window_samples(&self) -> usize {
        (self.window / self.ts).round() as usize + 1
    }

    pub fn forecast_samples(&self) -> usize {
        (self.forecast_window / self.ts).round() as usize + 1
    }

    pub fn horizon_bound(&self) -> f64 {
        self.max_horizon
            .unwrap_or_else(|| self.delay.max(self.forecast_window))
    }
}

/// Trend value at the end of the window and its slope.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrendEstimate {
    pub mean: f64,
    pub slope: f64,
}

impl TrendEstimate {
    pub fn new(mean: f64, slope: f64) -> Self {
        Self { mean, slope }
    }

    /// `m + dm·dT`, without any horizon check.
    pub fn extrapolate(&self, dt: f64) -> f64 {
        self.mean + self.slope * dt
    }

    /// Exact integral of the affine extrapolation over `[t, t + h]`.
    pub fn integral(&self, h: f64) -> f64 {
        self.mean * h + 0.5 * self.slope * h * h
    }
}

/// Precomputed weights for the `F` estimator on `len` samples.
#[derive(Debug, Clone)]
pub struct FKernel {
    len: usize,
    ts: f64,
    span: f64,
    // ∫ (τ - 2σ)·σ dσ, continuous value -τ³/6
    output_moment: f64,
    // ∫ σ(τ - σ) dσ, continuous value τ³/6
    input_moment: f64,
}

impl FKernel {
    pub fn new(len: usize, ts: f64) -> Self {
        let span = (len - 1) as f64 * ts;
        Self {
            len,
            ts,
            span,
            output_moment: trapezoid(len, ts, |_, s| (span - 2.0 * s) * s),
            input_moment: trapezoid(len, ts, |_, s| s * (span - s)),
        }
    }

    pub fn samples(&self) -> usize {
        self.len
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    /// `q` holds `δq` and `u` holds `δu(· - h)` on the same sample clock.
    pub fn estimate(
        &self,
        q: &SlidingWindow,
        u: &SlidingWindow,
        alpha: f64,
    ) -> Result<f64, EstimatorError> {
        if q.capacity() != self.len || u.capacity() != self.len {
            return Err(EstimatorError::Misaligned("window length"));
        }
        if q.ts() != self.ts || u.ts() != self.ts {
            return Err(EstimatorError::Misaligned("sample period"));
        }
        let tau = self.span;
        let output_part = q.integral(|s| tau - 2.0 * s)? / self.output_moment;
        let input_part = u.integral(|s| s * (tau - s))? / self.input_moment;
        Ok(output_part - alpha * input_part)
    }
}

/// Precomputed moments of the trend/slope kernels on `len` samples.
#[derive(Debug, Clone)]
pub struct TrendKernel {
    len: usize,
    ts: f64,
    span: f64,
    // Triangular system
    //   ∫(2T-3σ)x = a0·m00 + a1·m01
    //   ∫(T-2σ)x  =          a1·m11
    // with m00 = T²/2, m01 = 0, m11 = -T³/6 in continuous time.
    m00: f64,
    m01: f64,
    m11: f64,
}

impl TrendKernel {
    pub fn new(len: usize, ts: f64) -> Self {
        let span = (len - 1) as f64 * ts;
        Self {
            len,
            ts,
            span,
            m00: trapezoid(len, ts, |_, s| 2.0 * span - 3.0 * s),
            m01: trapezoid(len, ts, |_, s| (2.0 * span - 3.0 * s) * s),
            m11: trapezoid(len, ts, |_, s| (span - 2.0 * s) * s),
        }
    }

    pub fn samples(&self) -> usize {
        self.len
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    /// Coefficients `(a0, a1)` of `a0 + a1·σ`, `σ` measured from the oldest sample.
    pub fn coefficients(&self, x: &SlidingWindow) -> Result<(f64, f64), EstimatorError> {
        if x.capacity() != self.len || x.ts() != self.ts {
            return Err(EstimatorError::Misaligned("trend window shape"));
        }
        let t = self.span;
        let i0 = x.integral(|s| 2.0 * t - 3.0 * s)?;
        let i1 = x.integral(|s| t - 2.0 * s)?;
        let a1 = i1 / self.m11;
        let a0 = (i0 - self.m01 * a1) / self.m00;
        Ok((a0, a1))
    }

    pub fn fit(&self, x: &SlidingWindow) -> Result<TrendEstimate, EstimatorError> {
        let (a0, a1) = self.coefficients(x)?;
        Ok(TrendEstimate::new(a0 + a1 * self.span, a1))
    }
}

/// `F` estimate from an output window and the matching delayed-input window.
pub fn estimate_f(
    q_window: &SlidingWindow,
    u_window: &SlidingWindow,
    cfg: &EstimatorConfig,
) -> Result<f64, EstimatorError> {
    if q_window.capacity() != cfg.window_samples() {
        return Err(EstimatorError::Misaligned("window does not span the estimation window"));
    }
    FKernel::new(q_window.capacity(), q_window.ts()).estimate(q_window, u_window, cfg.alpha)
}

/// Trend at the newest sample and slope of `x_window`.
pub fn trend_and_slope(x_window: &SlidingWindow) -> Result<TrendEstimate, EstimatorError> {
    TrendKernel::new(x_window.capacity(), x_window.ts()).fit(x_window)
}

/// `m + dm·dT` for `0 ≤ dT ≤ bound`.
pub fn forecast(est: &TrendEstimate, dt: f64, bound: f64) -> Result<f64, EstimatorError> {
    if !(dt >= 0.0 && dt <= bound) {
        return Err(EstimatorError::HorizonOutOfRange { horizon: dt, bound });
    }
    Ok(est.extrapolate(dt))
}

/// `∫ₜ^{t+h}` of the affine extrapolation: `m·h + dm·h²/2`.
pub fn integrate_forecast(est: &TrendEstimate, h: f64) -> f64 {
    est.integral(h)
}
