//! Intelligent proportional control with delay.
//!
//! Each sample the controller
//!
//! 1. estimates `F` over the last `τ` seconds of measured `δq` and of its own
//!    past commands delayed by `h`,
//! 2. fits a trend to the recent `F` estimates and forecasts `F(t + h)`,
//! 3. predicts `δq̂(t + h) = δq(t) + ∫ₜ^{t+h} F + α ∫_{t-h}^t δu`,
//! 4. applies `δu = (δq̇*(t+h) - F(t+h) - K_P·(δq̂(t+h) - δq*(t+h))) / α`.
//!
//! Only measurements, its own commands and the assumed delay are used.

use std::collections::VecDeque;

use thiserror::Error;

use crate::estimators::{
    forecast, EstimatorConfig, EstimatorError, FKernel, TrendEstimate, TrendKernel,
};
use crate::signals::{delay_samples, SlidingWindow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("stability check: K_P must be positive, got {0}")]
    UnstableGain(f64),
    #[error("K_P must be finite, got {0}")]
    BadGain(f64),
    #[error("controller still warming up ({done} of {need} steps)")]
    WarmingUp { done: usize, need: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Proportional gain `K_P` [1/s].
    pub kp: f64,
    pub estimator: EstimatorConfig,
    /// Reject `K_P ≤ 0`.
    pub stability_check: bool,
    /// Bounds of the applied deviation `δu`, used for the controller's own
    /// record of past commands.
    pub command_limits: Option<(f64, f64)>,
}

impl ControllerConfig {
    pub fn alpha(&self) -> f64 {
        self.estimator.alpha
    }

    pub fn delay(&self) -> f64 {
        self.estimator.delay
    }

    pub fn ts(&self) -> f64 {
        self.estimator.ts
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        self.estimator.validate()?;
        if !self.kp.is_finite() {
            return Err(ControllerError::BadGain(self.kp));
        }
        if self.stability_check && !(self.kp > 0.0) {
            return Err(ControllerError::UnstableGain(self.kp));
        }
        Ok(())
    }

    pub fn delay_samples(&self) -> usize {
        delay_samples(self.delay(), self.ts()).0
    }

    /// Steps during which the command is held at zero: the longer of
    /// `max(τ, T_f) + h` and the time to fill both estimation windows.
    pub fn warmup_steps(&self) -> usize {
        let e = &self.estimator;
        let by_time = ((e.window.max(e.forecast_window) + e.delay) / e.ts).round() as usize;
        let by_fill = e.window_samples() + e.forecast_samples() - 2;
        by_time.max(by_fill)
    }
}

/// Reference value and rate, sampled at `t + h`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceSample {
    pub value: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerOutput {
    /// Command `δu(t)`, before any actuator saturation.
    pub du: f64,
    /// `F_est(t)`; zero while the estimation window fills.
    pub f_est: f64,
    /// `F_est(t + h)`.
    pub f_forecast: f64,
    /// `δq̂(t + h)`.
    pub dq_hat: f64,
    pub warming_up: bool,
}

/// `δq(t) + ∫ₜ^{t+h} F + α·Ts·Σ δu` over the commands still in flight.
///
/// `in_flight` are the last `round(h/Ts)` commands; with piecewise-constant
/// commands the rectangle sum is the exact integral over `[t - h, t]`.
pub fn predict_output(
    dq: f64,
    f_trend: &TrendEstimate,
    in_flight: impl IntoIterator<Item = f64>,
    cfg: &ControllerConfig,
) -> f64 {
    let h = cfg.delay_samples() as f64 * cfg.ts();
    let pending: f64 = in_flight.into_iter().sum::<f64>() * cfg.ts();
    dq + f_trend.integral(h) + cfg.alpha() * pending
}

/// The intelligent proportional law with delay.
pub fn control(
    ref_value: f64,
    ref_rate: f64,
    f_forecast: f64,
    dq_hat: f64,
    cfg: &ControllerConfig,
) -> f64 {
    let predicted_error = dq_hat - ref_value;
    (ref_rate - f_forecast - cfg.kp * predicted_error) / cfg.alpha()
}

#[derive(Debug, Clone)]
pub struct Controller {
    cfg: ControllerConfig,
    delay_steps: usize,
    warmup: usize,
    f_kernel: FKernel,
    trend_kernel: TrendKernel,
    q_window: SlidingWindow,
    u_window: SlidingWindow,
    f_window: SlidingWindow,
    // last `delay_steps` applied commands, oldest first
    in_flight: VecDeque<f64>,
    last_trend: TrendEstimate,
    steps: usize,
}

impl Controller {
    pub fn new(cfg: ControllerConfig) -> Result<Self, ControllerError> {
        cfg.validate()?;
        let e = &cfg.estimator;
        let (w, f) = (e.window_samples(), e.forecast_samples());
        let delay_steps = cfg.delay_samples();
        let window = |len| SlidingWindow::new(len, e.ts).map_err(EstimatorError::from);
        Ok(Self {
            delay_steps,
            warmup: cfg.warmup_steps(),
            f_kernel: FKernel::new(w, e.ts),
            trend_kernel: TrendKernel::new(f, e.ts),
            q_window: window(w)?,
            u_window: window(w)?,
            f_window: window(f)?,
            in_flight: std::iter::repeat_n(0.0, delay_steps).collect(),
            last_trend: TrendEstimate::default(),
            steps: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    /// Assumed delay after rounding to samples [s].
    pub fn horizon(&self) -> f64 {
        self.delay_steps as f64 * self.cfg.ts()
    }

    pub fn warmup_steps(&self) -> usize {
        self.warmup
    }

    pub fn is_warming_up(&self) -> bool {
        self.steps < self.warmup
    }

    pub fn last_trend(&self) -> TrendEstimate {
        self.last_trend
    }

    pub fn in_flight(&self) -> impl Iterator<Item = f64> + '_ {
        self.in_flight.iter().copied()
    }

    /// Output prediction over the horizon from the controller's own history.
    pub fn predict_output(&self, dq: f64, f_trend: &TrendEstimate) -> Result<f64, ControllerError> {
        if self.is_warming_up() {
            return Err(ControllerError::WarmingUp {
                done: self.steps,
                need: self.warmup,
            });
        }
        Ok(predict_output(dq, f_trend, self.in_flight(), &self.cfg))
    }

    /// One sample: `dq` is the measured output at `t`, `reference` the
    /// reference at `t + h`.
    pub fn step(&mut self, dq: f64, reference: ReferenceSample) -> ControllerOutput {
        let ts = self.cfg.ts();
        let t = self.steps as f64 * ts;
        self.q_window.push(t, dq);
        // With h = 0 the newest delayed input is the command not issued yet;
        // its kernel weight is zero.
        let delayed = self.in_flight.front().copied().unwrap_or(0.0);
        self.u_window.push(t, delayed);

        let mut out = ControllerOutput {
            warming_up: true,
            ..ControllerOutput::default()
        };
        if self.q_window.is_full() {
            // windows are full and share the clock, so this cannot fail
            if let Ok(f) = self
                .f_kernel
                .estimate(&self.q_window, &self.u_window, self.cfg.alpha())
            {
                out.f_est = f;
                self.f_window.push(t, f);
            }
        }

        if !self.is_warming_up() && self.f_window.is_full() {
            if let Ok(trend) = self.trend_kernel.fit(&self.f_window) {
                let h = self.horizon();
                self.last_trend = trend;
                out.f_forecast = forecast(&trend, h, self.cfg.estimator.horizon_bound().max(h))
                    .unwrap_or_else(|_| trend.extrapolate(h));
                out.dq_hat = predict_output(dq, &trend, self.in_flight(), &self.cfg);
                out.du = control(reference.value, reference.rate, out.f_forecast, out.dq_hat, &self.cfg);
                out.warming_up = false;
            }
        }

        let applied = match self.cfg.command_limits {
            Some((lo, hi)) => out.du.clamp(lo, hi),
            None => out.du,
        };
        if self.delay_steps > 0 {
            self.in_flight.pop_front();
            self.in_flight.push_back(applied);
        }
        self.steps += 1;
        out
    }
}
