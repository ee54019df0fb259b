//! Flat sectioned key-value scenario files.
//!
//! The format is TOML restricted to five tables of scalar keys (plus two
//! arrays for the reference). All quantities are SI: seconds, packets,
//! packets per second, loss-ratio units.
//!
//! ```toml
//! [run]
//! name = "nominal"          # optional
//! duration = 35.0
//! ts = 0.01
//! gain = "hollot"           # paper | hollot
//! seed = 1
//! plant_delay = 0.0         # optional, overrides the plant's delay
//! plant_sessions = 90       # optional, N seen by the plant
//! noise_amplitude = 0.5     # optional, uniform noise on δq [packets]
//!
//! [network]
//! w_max = 131.0
//! q_max = 800.0
//! q0 = 175.0
//! sessions = 60
//! capacity = 3750.0
//! prop_delay = 0.2
//!
//! [controller]
//! alpha = -100000.0
//! kp = 0.5
//! delay = 0.24666666666666667  # optional, defaults to q0/c + T_p
//! estimation_window = 0.3
//! forecast_window = 0.8
//! stability_check = true       # optional, default false
//!
//! [reference]                  # optional, defaults to the stepped profile
//! times = [0.0, 5.0, 15.0, 25.0]
//! setpoints = [0.0, 100.0, -75.0, 0.0]
//! smoothing = 0.5
//!
//! [disturbance]                # optional, defaults to kind = "none"
//! kind = "uniform-sine"        # none | sine | uniform-sine
//! amplitude = 0.01
//! omega = 0.07853981633974483
//! phase = 1.5707963267948966
//! ```
//!
//! Unknown sections or keys are errors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netparams::NetworkParams;
use crate::plant::GainStrategy;
use crate::scenario::{ControllerParams, DisturbanceSpec, ReferenceProfile, ScenarioError, ScenarioSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("config field `{field}`: {msg}")]
    Field { field: &'static str, msg: String },
    #[error("config validation: {0}")]
    Invalid(#[from] ScenarioError),
}

fn field(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ConfigFile {
    run: RunSection,
    network: NetworkSection,
    controller: ControllerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference: Option<ReferenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    disturbance: Option<DisturbanceSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    duration: f64,
    ts: f64,
    gain: GainStrategy,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plant_delay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plant_sessions: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_amplitude: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkSection {
    w_max: f64,
    q_max: f64,
    q0: f64,
    sessions: u32,
    capacity: f64,
    prop_delay: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerSection {
    alpha: f64,
    kp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delay: Option<f64>,
    estimation_window: f64,
    forecast_window: f64,
    #[serde(default)]
    stability_check: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceSection {
    times: Vec<f64>,
    setpoints: Vec<f64>,
    smoothing: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DisturbanceSection {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phase: Option<f64>,
}

impl ConfigFile {
    fn from_spec(spec: &ScenarioSpec) -> Self {
        let n = &spec.network;
        let c = &spec.controller;
        let disturbance = match spec.disturbance {
            DisturbanceSpec::None => None,
            DisturbanceSpec::Sine { amplitude, omega, phase }
            | DisturbanceSpec::UniformSine { amplitude, omega, phase } => Some(DisturbanceSection {
                kind: spec.disturbance.kind().to_owned(),
                amplitude: Some(amplitude),
                omega: Some(omega),
                phase: Some(phase),
            }),
        };
        ConfigFile {
            run: RunSection {
                name: Some(spec.name.clone()),
                duration: spec.duration,
                ts: spec.ts,
                gain: spec.gain_strategy,
                seed: spec.rng_seed,
                plant_delay: spec.plant_delay_override,
                plant_sessions: spec.plant_sessions,
                noise_amplitude: spec.measurement_noise,
            },
            network: NetworkSection {
                w_max: n.w_max,
                q_max: n.q_max,
                q0: n.q0,
                sessions: n.sessions,
                capacity: n.capacity,
                prop_delay: n.prop_delay,
            },
            controller: ControllerSection {
                alpha: c.alpha,
                kp: c.kp,
                delay: Some(c.delay),
                estimation_window: c.estimation_window,
                forecast_window: c.forecast_window,
                stability_check: c.stability_check,
            },
            reference: Some(ReferenceSection {
                times: spec.reference.steps.iter().map(|s| s.0).collect(),
                setpoints: spec.reference.steps.iter().map(|s| s.1).collect(),
                smoothing: spec.reference.smoothing,
            }),
            disturbance,
        }
    }

    fn into_spec(self) -> Result<ScenarioSpec, ConfigError> {
        let n = self.network;
        let network = NetworkParams {
            w_max: n.w_max,
            q_max: n.q_max,
            q0: n.q0,
            sessions: n.sessions,
            capacity: n.capacity,
            prop_delay: n.prop_delay,
        };
        let c = self.controller;
        let delay = c
            .delay
            .unwrap_or(network.q0 / network.capacity + network.prop_delay);
        let reference = match self.reference {
            None => ReferenceProfile::default(),
            Some(r) => {
                if r.times.len() != r.setpoints.len() {
                    return Err(field(
                        "reference.setpoints",
                        format!("{} setpoints for {} times", r.setpoints.len(), r.times.len()),
                    ));
                }
                ReferenceProfile {
                    steps: r.times.into_iter().zip(r.setpoints).collect(),
                    smoothing: r.smoothing,
                }
            }
        };
        let disturbance = match self.disturbance {
            None => DisturbanceSpec::None,
            Some(d) => parse_disturbance(d)?,
        };
        let spec = ScenarioSpec {
            name: self.run.name.unwrap_or_else(|| "custom".to_owned()),
            duration: self.run.duration,
            ts: self.run.ts,
            network,
            controller: ControllerParams {
                alpha: c.alpha,
                kp: c.kp,
                delay,
                estimation_window: c.estimation_window,
                forecast_window: c.forecast_window,
                stability_check: c.stability_check,
            },
            plant_delay_override: self.run.plant_delay,
            plant_sessions: self.run.plant_sessions,
            gain_strategy: self.run.gain,
            reference,
            disturbance,
            measurement_noise: self.run.noise_amplitude,
            rng_seed: self.run.seed,
        };
        check_fields(&spec)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_disturbance(d: DisturbanceSection) -> Result<DisturbanceSpec, ConfigError> {
    let need = |v: Option<f64>, name: &'static str| {
        v.ok_or_else(|| field(name, format!("required for kind `{}`", d.kind)))
    };
    match d.kind.as_str() {
        "none" => {
            if d.amplitude.is_some() || d.omega.is_some() || d.phase.is_some() {
                return Err(field("disturbance.kind", "kind `none` takes no parameters"));
            }
            Ok(DisturbanceSpec::None)
        }
        "sine" => Ok(DisturbanceSpec::Sine {
            amplitude: need(d.amplitude, "disturbance.amplitude")?,
            omega: need(d.omega, "disturbance.omega")?,
            phase: need(d.phase, "disturbance.phase")?,
        }),
        "uniform-sine" => Ok(DisturbanceSpec::UniformSine {
            amplitude: need(d.amplitude, "disturbance.amplitude")?,
            omega: need(d.omega, "disturbance.omega")?,
            phase: need(d.phase, "disturbance.phase")?,
        }),
        other => Err(field(
            "disturbance.kind",
            format!("unknown kind `{other}` (expected none|sine|uniform-sine)"),
        )),
    }
}

/// Field-level checks that give a precise key in the diagnostic; the rest
/// is left to [`ScenarioSpec::validate`].
pub fn check_fields(spec: &ScenarioSpec) -> Result<(), ConfigError> {
    if !(spec.ts > 0.0) || !spec.ts.is_finite() {
        return Err(field("run.ts", format!("sample period must be positive, got {}", spec.ts)));
    }
    if !(spec.duration > 0.0) || !spec.duration.is_finite() {
        return Err(field("run.duration", format!("must be positive, got {}", spec.duration)));
    }
    if spec.steps().is_err() {
        return Err(field(
            "run.duration",
            format!("{} s is not a whole number of {} s steps", spec.duration, spec.ts),
        ));
    }
    let c = &spec.controller;
    if c.alpha == 0.0 || !c.alpha.is_finite() {
        return Err(field("controller.alpha", "must be finite and non-zero"));
    }
    if !(c.delay >= 0.0) || !c.delay.is_finite() {
        return Err(field("controller.delay", format!("must be >= 0, got {}", c.delay)));
    }
    if !(c.estimation_window >= 2.0 * spec.ts) {
        return Err(field("controller.estimation_window", "must be at least 2·ts"));
    }
    if !(c.forecast_window >= 2.0 * spec.ts) {
        return Err(field("controller.forecast_window", "must be at least 2·ts"));
    }
    if c.stability_check && !(c.kp > 0.0) {
        return Err(field("controller.kp", "stability_check requires kp > 0"));
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<ScenarioSpec, ConfigError> {
    let file: ConfigFile = toml::from_str(text)?;
    file.into_spec()
}

pub fn serialize_config(spec: &ScenarioSpec) -> String {
    toml::to_string(&ConfigFile::from_spec(spec)).expect("scenario config is always representable")
}

/// Rebuilds a spec from an already parsed table holding the config sections.
pub fn spec_from_table(table: toml::Table) -> Result<ScenarioSpec, ConfigError> {
    let file: ConfigFile = table.try_into()?;
    file.into_spec()
}
