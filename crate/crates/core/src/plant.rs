//! Linearized TCP/AQM plant: static gain, two first-order lags and a transport
//! delay, discretized with a zero-order hold per stage.
//!
//! The plant maps the loss-ratio deviation `δu` to the queue deviation `δq`:
//!
//! ```text
//! δq/δu = -K · e^{-τ0 s} / ((τ0 s + 1)(w0 τ0 s / 2 + 1))
//! ```
//!
//! It is only used as the truth model of a simulation. The controller never
//! sees any of it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netparams::{NetworkParams, OperatingPoint};
use crate::signals::{delay_samples, DelayLine};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("sample period must be positive and finite, got {0}")]
    BadSamplePeriod(f64),
    #[error("plant delay must be non-negative and finite, got {0}")]
    BadDelay(f64),
    #[error("time constant `{name}` must be positive, got {value}")]
    BadTimeConstant { name: &'static str, value: f64 },
}

/// How the static gain `K` is computed from the operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainStrategy {
    /// `(2N·w0/2)³ = (N·w0)³`, the numerator as printed.
    #[default]
    #[serde(rename = "paper")]
    PaperLiteral,
    /// `(c·τ0)³ / (4N²)`, the classical fluid-model linearization.
    Hollot,
}

impl GainStrategy {
    pub fn gain(self, net: &NetworkParams, op: &OperatingPoint) -> f64 {
        let n = f64::from(net.sessions);
        match self {
            GainStrategy::PaperLiteral => (n * op.w0).powi(3),
            GainStrategy::Hollot => (net.capacity * op.tau0).powi(3) / (4.0 * n * n),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GainStrategy::PaperLiteral => "paper",
            GainStrategy::Hollot => "hollot",
        }
    }
}

impl std::str::FromStr for GainStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(GainStrategy::PaperLiteral),
            "hollot" => Ok(GainStrategy::Hollot),
            other => Err(format!("unknown gain strategy `{other}` (expected paper|hollot)")),
        }
    }
}

/// Continuous-time description of the plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// Static gain magnitude [packets per unit loss ratio].
    pub gain: f64,
    /// Sign of the gain; `-1` since dropping more packets shrinks the queue.
    pub sign: f64,
    /// First time constant, `τ0` [s].
    pub tc1: f64,
    /// Second time constant, `w0·τ0/2` [s].
    pub tc2: f64,
    /// Transport delay [s].
    pub delay_s: f64,
}

impl PlantParams {
    pub fn from_network(net: &NetworkParams, op: &OperatingPoint, strategy: GainStrategy) -> Self {
        Self {
            gain: strategy.gain(net, op),
            sign: -1.0,
            tc1: op.tau0,
            tc2: op.w0 * op.tau0 / 2.0,
            delay_s: op.tau0,
        }
    }

    pub fn dc_gain(&self) -> f64 {
        self.sign * self.gain
    }
}

/// Unit-DC-gain first-order lag discretized with a zero-order hold:
/// `y[k+1] = p·y[k] + (1 - p)·x[k]`, `p = exp(-Ts/tc)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZohLag {
    pub pole: f64,
    pub input_gain: f64,
}

impl ZohLag {
    pub fn new(tc: f64, ts: f64) -> Self {
        let pole = (-ts / tc).exp();
        Self {
            pole,
            input_gain: 1.0 - pole,
        }
    }

    #[inline]
    pub fn advance(&self, state: f64, input: f64) -> f64 {
        self.pole * state + self.input_gain * input
    }

    /// `b / (1 - p)`, the transfer function at `z = 1`.
    pub fn dc_gain(&self) -> f64 {
        self.input_gain / (1.0 - self.pole)
    }
}

/// Lag states and the absolute, saturated plant variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    /// Lag states in cascade order [packets].
    pub lags: [f64; 2],
    /// Absolute queue length, clamped to `[0, q_max]`.
    pub q: f64,
    /// Absolute loss ratio last applied, clamped to `[0, 1]`.
    pub u: f64,
}

impl PlantState {
    /// Output deviation before the queue clamp.
    pub fn unclamped_dq(&self) -> f64 {
        self.lags[1]
    }
}

#[derive(Debug, Clone)]
pub struct DiscretePlant {
    params: PlantParams,
    ts: f64,
    stages: [ZohLag; 2],
    delay: DelayLine,
    realized_delay: f64,
    q0: f64,
    q_max: f64,
    u0: f64,
}

/// Builds the discrete plant. `delay_override` replaces the transport delay,
/// zero included.
pub fn build_plant(
    op: &OperatingPoint,
    net: &NetworkParams,
    ts: f64,
    delay_override: Option<f64>,
    strategy: GainStrategy,
) -> Result<DiscretePlant, PlantError> {
    let mut params = PlantParams::from_network(net, op, strategy);
    if let Some(d) = delay_override {
        params.delay_s = d;
    }
    DiscretePlant::new(params, ts, net.q0, net.q_max, op.u0)
}

impl DiscretePlant {
    pub fn new(
        params: PlantParams,
        ts: f64,
        q0: f64,
        q_max: f64,
        u0: f64,
    ) -> Result<Self, PlantError> {
        if !(ts > 0.0) || !ts.is_finite() {
            return Err(PlantError::BadSamplePeriod(ts));
        }
        if !(params.delay_s >= 0.0) || !params.delay_s.is_finite() {
            return Err(PlantError::BadDelay(params.delay_s));
        }
        for (name, value) in [("tc1", params.tc1), ("tc2", params.tc2)] {
            if !(value > 0.0) {
                return Err(PlantError::BadTimeConstant { name, value });
            }
        }
        let (samples, realized_delay) = delay_samples(params.delay_s, ts);
        Ok(Self {
            params,
            ts,
            stages: [ZohLag::new(params.tc1, ts), ZohLag::new(params.tc2, ts)],
            delay: DelayLine::new(samples, 0.0),
            realized_delay,
            q0,
            q_max,
            u0,
        })
    }

    /// Same input/output map with the two lags swapped.
    pub fn with_reversed_stages(mut self) -> Self {
        self.stages.swap(0, 1);
        self
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn stages(&self) -> &[ZohLag; 2] {
        &self.stages
    }

    pub fn delay_samples(&self) -> usize {
        self.delay.capacity()
    }

    /// Delay actually realized after rounding to whole samples [s].
    pub fn realized_delay(&self) -> f64 {
        self.realized_delay
    }

    /// DC gain of the discrete cascade.
    pub fn dc_gain(&self) -> f64 {
        self.params.dc_gain() * self.stages.iter().map(ZohLag::dc_gain).product::<f64>()
    }

    /// State at the operating point.
    pub fn initial_state(&self) -> PlantState {
        PlantState {
            lags: [0.0; 2],
            q: self.q0,
            u: self.u0,
        }
    }

    /// One sample period: saturate the input, push it through the delay and
    /// both lags, clamp the queue. Returns `δq = q - q0` at the next sample.
    pub fn step(&mut self, state: &mut PlantState, du: f64) -> f64 {
        let u = (self.u0 + du).clamp(0.0, 1.0);
        state.u = u;
        let delayed = self.delay.step(u - self.u0);
        let x0 = self.params.dc_gain() * delayed;
        let x1 = state.lags[0];
        state.lags[0] = self.stages[0].advance(state.lags[0], x0);
        state.lags[1] = self.stages[1].advance(state.lags[1], x1);
        state.q = (self.q0 + state.lags[1]).clamp(0.0, self.q_max);
        state.q - self.q0
    }
}
