//! Closed-loop experiment engine and preset scenarios.
//!
//! Per step `k` (time `t = k·Ts`): the controller reads the (optionally
//! noisy) output and the reference at `t + h`, its command is perturbed by the
//! disturbance, saturated, and fed to the plant, which produces the output at
//! `t + Ts`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::controller::{Controller, ControllerConfig, ControllerError, ReferenceSample};
use crate::estimators::EstimatorConfig;
use crate::netparams::{NetworkParams, ParamError};
use crate::plant::{build_plant, GainStrategy, PlantError};

/// Identifier of the random stream, echoed in run metadata.
pub const RNG_ID: &str = "ChaCha8Rng (rand_chacha 0.3), disturbance stream 0, noise stream 1";

/// Divergence abort threshold, in multiples of `q_max`.
const DIVERGENCE_FACTOR: f64 = 10.0;

/// Names accepted by [`preset`].
pub const PRESETS: &[&str] = &[
    "nominal",
    "plant-no-delay",
    "plant-delay-x1.5",
    "n-mismatch",
    "disturb-sine",
    "disturb-random",
    "nominal-kp-negative",
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Network(#[from] ParamError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("divergence at t = {t:.2} s: |δq| = {dq:.3e} exceeds {limit} packets")]
    Divergence { t: f64, dq: f64, limit: f64 },
}

/// Controller settings as written in a scenario; the sample period comes
/// from the scenario itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    pub alpha: f64,
    pub kp: f64,
    /// Assumed delay `h` [s].
    pub delay: f64,
    /// `F` estimation window [s].
    pub estimation_window: f64,
    /// Trend-fit window on `F_est` [s].
    pub forecast_window: f64,
    pub stability_check: bool,
}

impl ControllerParams {
    pub fn to_config(&self, ts: f64) -> ControllerConfig {
        ControllerConfig {
            kp: self.kp,
            estimator: EstimatorConfig {
                window: self.estimation_window,
                forecast_window: self.forecast_window,
                alpha: self.alpha,
                delay: self.delay,
                ts,
                max_horizon: None,
            },
            stability_check: self.stability_check,
            command_limits: None,
        }
    }
}

/// Piecewise-constant setpoints smoothed by a first-order filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceProfile {
    /// `(switch time [s], setpoint δq* [packets])`, increasing in time.
    pub steps: Vec<(f64, f64)>,
    /// Filter time constant [s]; zero gives raw steps.
    pub smoothing: f64,
}

impl Default for ReferenceProfile {
    fn default() -> Self {
        Self {
            steps: vec![(0.0, 0.0), (5.0, 100.0), (15.0, -75.0), (25.0, 0.0)],
            smoothing: 0.5,
        }
    }
}

impl ReferenceProfile {
    pub fn constant(value: f64) -> Self {
        Self {
            steps: vec![(0.0, value)],
            smoothing: 0.0,
        }
    }

    pub fn validate(&self, net: &NetworkParams) -> Result<(), ScenarioError> {
        let invalid = |m: String| Err(ScenarioError::Invalid(m));
        if self.steps.is_empty() {
            return invalid("reference needs at least one setpoint".into());
        }
        if !(self.smoothing >= 0.0) || !self.smoothing.is_finite() {
            return invalid(format!("reference smoothing {} must be >= 0", self.smoothing));
        }
        for pair in self.steps.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return invalid("reference switch times must be strictly increasing".into());
            }
        }
        for &(t, s) in &self.steps {
            if !t.is_finite() || !s.is_finite() {
                return invalid("reference entries must be finite".into());
            }
            let q = net.q0 + s;
            if !(0.0..=net.q_max).contains(&q) {
                return invalid(format!(
                    "setpoint {s} at t = {t} puts the queue at {q}, outside [0, {}]",
                    net.q_max
                ));
            }
        }
        Ok(())
    }

    /// Filtered value and rate at `t`, in closed form.
    pub fn sample(&self, t: f64) -> ReferenceSample {
        let Some(&(_, first)) = self.steps.first() else {
            return ReferenceSample::default();
        };
        if self.smoothing == 0.0 {
            let value = self
                .steps
                .iter()
                .take_while(|&&(ts, _)| ts <= t)
                .last()
                .map_or(first, |&(_, s)| s);
            return ReferenceSample { value, rate: 0.0 };
        }
        let mut level = first;
        for (j, &(start, setpoint)) in self.steps.iter().enumerate() {
            let end = self.steps.get(j + 1).map_or(f64::INFINITY, |s| s.0);
            if t < end {
                let dt = (t - start).max(0.0);
                let decay = (-dt / self.smoothing).exp();
                let gap = level - setpoint;
                return ReferenceSample {
                    value: setpoint + gap * decay,
                    rate: -gap * decay / self.smoothing,
                };
            }
            level = setpoint + (level - setpoint) * (-(end - start) / self.smoothing).exp();
        }
        ReferenceSample {
            value: level,
            rate: 0.0,
        }
    }

    /// Setpoint hold intervals `[start, end)` clipped to `[0, duration]`.
    pub fn holds(&self, duration: f64) -> Vec<(f64, f64)> {
        self.steps
            .iter()
            .enumerate()
            .map(|(j, &(start, _))| {
                let end = self.steps.get(j + 1).map_or(duration, |s| s.0).min(duration);
                (start.max(0.0), end)
            })
            .filter(|(s, e)| e > s)
            .collect()
    }
}

/// Additive perturbation of the control variable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DisturbanceSpec {
    #[default]
    None,
    /// `a·sin(ωt + φ)`.
    Sine { amplitude: f64, omega: f64, phase: f64 },
    /// `U(-a, a)·sin(ωt + φ)`, a fresh uniform draw every sample.
    UniformSine { amplitude: f64, omega: f64, phase: f64 },
}

impl DisturbanceSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            DisturbanceSpec::None => "none",
            DisturbanceSpec::Sine { .. } => "sine",
            DisturbanceSpec::UniformSine { .. } => "uniform-sine",
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        match *self {
            DisturbanceSpec::None => Ok(()),
            DisturbanceSpec::Sine { amplitude, omega, phase }
            | DisturbanceSpec::UniformSine { amplitude, omega, phase } => {
                if !(amplitude >= 0.0) || !amplitude.is_finite() || !omega.is_finite() || !phase.is_finite() {
                    Err(ScenarioError::Invalid(format!(
                        "disturbance parameters must be finite with amplitude >= 0, got a={amplitude} ω={omega} φ={phase}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn sample(&self, t: f64, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            DisturbanceSpec::None => 0.0,
            DisturbanceSpec::Sine { amplitude, omega, phase } => amplitude * (omega * t + phase).sin(),
            DisturbanceSpec::UniformSine { amplitude, omega, phase } => {
                let draw = if amplitude > 0.0 {
                    rng.gen_range(-amplitude..amplitude)
                } else {
                    0.0
                };
                draw * (omega * t + phase).sin()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    /// [s]
    pub duration: f64,
    /// Sample period [s].
    pub ts: f64,
    pub network: NetworkParams,
    pub controller: ControllerParams,
    /// Replaces the plant's transport delay (zero included).
    pub plant_delay_override: Option<f64>,
    /// Number of TCP sessions seen by the plant, when it differs from `network`.
    pub plant_sessions: Option<u32>,
    pub gain_strategy: GainStrategy,
    pub reference: ReferenceProfile,
    pub disturbance: DisturbanceSpec,
    /// Amplitude of uniform measurement noise on `δq` [packets].
    pub measurement_noise: Option<f64>,
    pub rng_seed: u64,
}

impl ScenarioSpec {
    pub fn steps(&self) -> Result<usize, ScenarioError> {
        let ratio = self.duration / self.ts;
        let n = ratio.round();
        if !(self.ts > 0.0) || !ratio.is_finite() || n < 1.0 || (ratio - n).abs() > 1e-6 {
            return Err(ScenarioError::Invalid(format!(
                "duration {} s is not a positive whole number of {} s steps",
                self.duration, self.ts
            )));
        }
        Ok(n as usize)
    }

    pub fn controller_config(&self) -> ControllerConfig {
        self.controller.to_config(self.ts)
    }

    pub fn plant_network(&self) -> NetworkParams {
        NetworkParams {
            sessions: self.plant_sessions.unwrap_or(self.network.sessions),
            ..self.network
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.steps()?;
        self.network.validate()?;
        self.plant_network().operating_point()?;
        self.controller_config().validate()?;
        self.reference.validate(&self.network)?;
        self.disturbance.validate()?;
        if let Some(d) = self.plant_delay_override {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(PlantError::BadDelay(d).into());
            }
        }
        if let Some(a) = self.measurement_noise {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(ScenarioError::Invalid(format!("noise amplitude {a} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// One closed-loop sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRecord {
    pub t: f64,
    /// Absolute queue [packets].
    pub q: f64,
    pub dq: f64,
    /// Reference `δq*(t)`.
    pub reference: f64,
    /// `u0 + δu + disturbance` before saturation.
    pub u_raw: f64,
    /// Applied loss ratio, in `[0, 1]`.
    pub u: f64,
    /// Applied deviation `u - u0`.
    pub du: f64,
    pub f_est: f64,
    pub f_forecast: f64,
    pub dq_hat: f64,
    pub disturbance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Metrics {
    /// RMSE of `δq - δq*` over the second half of every setpoint hold.
    pub rmse: f64,
    pub max_abs_error: f64,
    /// Largest `|δq - δq*|` over the last 2 s of every setpoint hold.
    pub settled_max_error: f64,
    /// Largest controller command `|δu|`.
    pub max_abs_du: f64,
    /// Samples where `u_raw` left `[0, 1]`.
    pub saturated_input_samples: usize,
    /// Samples where the queue sat at `0` or `q_max`.
    pub saturated_queue_samples: usize,
    pub steps: usize,
    pub warmup_steps: usize,
    pub plant_delay_s: f64,
    pub controller_delay_s: f64,
}

/// Seconds at the end of each hold counted as settled.
pub const SETTLED_WINDOW: f64 = 2.0;

impl Metrics {
    /// Error statistics of a trace (delay and warm-up fields are left zero).
    pub fn from_trace(
        trace: &[TraceRecord],
        reference: &ReferenceProfile,
        duration: f64,
        q_max: f64,
        u0: f64,
    ) -> Self {
        let holds = reference.holds(duration);
        let mut m = Metrics {
            steps: trace.len(),
            ..Metrics::default()
        };
        let (mut sum_sq, mut count) = (0.0, 0usize);
        for r in trace {
            let e = r.dq - r.reference;
            m.max_abs_error = m.max_abs_error.max(e.abs());
            if let Some(&(start, end)) = holds.iter().find(|(s, e)| r.t >= *s && r.t < *e) {
                if r.t >= start + 0.5 * (end - start) {
                    sum_sq += e * e;
                    count += 1;
                }
                if r.t >= end - SETTLED_WINDOW {
                    m.settled_max_error = m.settled_max_error.max(e.abs());
                }
            }
            if !(0.0..=1.0).contains(&r.u_raw) {
                m.saturated_input_samples += 1;
            }
            if r.q <= 0.0 || r.q >= q_max {
                m.saturated_queue_samples += 1;
            }
            let command = r.u_raw - r.disturbance - u0;
            m.max_abs_du = m.max_abs_du.max(command.abs());
        }
        if count > 0 {
            m.rmse = (sum_sq / count as f64).sqrt();
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    pub metrics: Metrics,
}

pub fn run(spec: &ScenarioSpec) -> Result<RunOutput, ScenarioError> {
    spec.validate()?;
    let steps = spec.steps()?;
    let net = spec.network;
    let op = net.operating_point()?;
    let plant_net = spec.plant_network();
    let plant_op = plant_net.operating_point()?;
    let mut plant = build_plant(&plant_op, &plant_net, spec.ts, spec.plant_delay_override, spec.gain_strategy)?;
    let mut state = plant.initial_state();

    let mut cfg = spec.controller_config();
    // the controller knows the actuator range around its own operating point
    cfg.command_limits = Some((-op.u0, 1.0 - op.u0));
    let mut controller = Controller::new(cfg)?;
    let horizon = controller.horizon();

    let mut dist_rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    noise_rng.set_stream(1);

    let limit = DIVERGENCE_FACTOR * net.q_max;
    let mut trace = Vec::with_capacity(steps);
    let mut dq = 0.0;
    for k in 0..steps {
        let t = k as f64 * spec.ts;
        let measured = match spec.measurement_noise {
            Some(a) if a > 0.0 => dq + noise_rng.gen_range(-a..a),
            _ => dq,
        };
        let out = controller.step(measured, spec.reference.sample(t + horizon));
        let disturbance = spec.disturbance.sample(t, &mut dist_rng);
        let u_raw = op.u0 + out.du + disturbance;
        let q = state.q;
        let next = plant.step(&mut state, out.du + disturbance);
        trace.push(TraceRecord {
            t,
            q,
            dq,
            reference: spec.reference.sample(t).value,
            u_raw,
            u: state.u,
            du: state.u - op.u0,
            f_est: out.f_est,
            f_forecast: out.f_forecast,
            dq_hat: out.dq_hat,
            disturbance,
        });
        let raw = state.unclamped_dq();
        if !raw.is_finite() || raw.abs() > limit {
            return Err(ScenarioError::Divergence {
                t: t + spec.ts,
                dq: raw,
                limit,
            });
        }
        dq = next;
    }

    let mut metrics = Metrics::from_trace(&trace, &spec.reference, spec.duration, net.q_max, op.u0);
    metrics.warmup_steps = controller.warmup_steps();
    metrics.plant_delay_s = plant.realized_delay();
    metrics.controller_delay_s = horizon;
    Ok(RunOutput { trace, metrics })
}

/// Table 1 network, `α = -1e5`, `K_P = 0.5`, 35 s at 10 ms.
fn nominal() -> ScenarioSpec {
    let network = NetworkParams::nominal();
    let tau0 = network.q0 / network.capacity + network.prop_delay;
    ScenarioSpec {
        name: "nominal".into(),
        duration: 35.0,
        ts: 0.01,
        network,
        controller: ControllerParams {
            alpha: -1e5,
            kp: 0.5,
            delay: tau0,
            estimation_window: 0.3,
            forecast_window: 0.8,
            stability_check: true,
        },
        plant_delay_override: None,
        plant_sessions: None,
        gain_strategy: GainStrategy::Hollot,
        reference: ReferenceProfile::default(),
        disturbance: DisturbanceSpec::None,
        measurement_noise: None,
        rng_seed: 1,
    }
}

pub fn preset(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    let mut spec = nominal();
    let tau0 = spec.controller.delay;
    match name {
        "nominal" => {}
        "plant-no-delay" => spec.plant_delay_override = Some(0.0),
        "plant-delay-x1.5" => spec.plant_delay_override = Some(1.5 * tau0),
        "n-mismatch" => spec.plant_sessions = Some(90),
        "disturb-sine" => {
            spec.disturbance = DisturbanceSpec::Sine {
                amplitude: 5e-4,
                omega: 2.0 * PI / 10.0,
                phase: 0.0,
            }
        }
        "disturb-random" => {
            spec.disturbance = DisturbanceSpec::UniformSine {
                amplitude: 1e-2,
                omega: PI / 40.0,
                phase: PI / 2.0,
            }
        }
        "nominal-kp-negative" => {
            spec.controller.kp = -0.5;
            spec.controller.stability_check = false;
        }
        other => return Err(ScenarioError::UnknownPreset(other.to_owned())),
    }
    spec.name = name.to_owned();
    Ok(spec)
}
