//! Network constants and the operating point of the linearized TCP/AQM model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("network parameter `{field}` must be strictly positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("operating queue length q0 = {q0} must lie in [0, q_max = {q_max}]")]
    QueueOutOfRange { q0: f64, q_max: f64 },
    #[error("operating loss ratio u0 = {0} is not in (0, 1)")]
    LossRatioOutOfRange(f64),
}

/// Constants of the TCP/AQM link around which the model is linearized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Maximum TCP window [packets]. Not used by the linear model.
    pub w_max: f64,
    /// Buffer size [packets].
    pub q_max: f64,
    /// Queue length at the operating point [packets].
    pub q0: f64,
    /// Number of TCP sessions.
    pub sessions: u32,
    /// Link capacity [packets/s].
    pub capacity: f64,
    /// Propagation delay [s].
    pub prop_delay: f64,
}

impl NetworkParams {
    pub const fn nominal() -> Self {
        Self {
            w_max: 131.0,
            q_max: 800.0,
            q0: 175.0,
            sessions: 60,
            capacity: 3750.0,
            prop_delay: 0.2,
        }
    }

    /// Checks the field invariants. `q0` may be zero (an empty queue is a
    /// valid operating point); everything else must be strictly positive.
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("w_max", self.w_max),
            ("q_max", self.q_max),
            ("sessions", f64::from(self.sessions)),
            ("capacity", self.capacity),
            ("prop_delay", self.prop_delay),
        ];
        for (field, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ParamError::NonPositive { field, value });
            }
        }
        if !(self.q0 >= 0.0 && self.q0 <= self.q_max) {
            return Err(ParamError::QueueOutOfRange {
                q0: self.q0,
                q_max: self.q_max,
            });
        }
        Ok(())
    }

    pub fn operating_point(&self) -> Result<OperatingPoint, ParamError> {
        derive_operating_point(self)
    }
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self::nominal()
    }
}

/// Round trip time, window and loss ratio at the operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Round trip time [s].
    pub tau0: f64,
    /// TCP window [packets].
    pub w0: f64,
    /// Packet-loss ratio.
    pub u0: f64,
}

/// `tau0 = q0/c + T_p`, `w0 = c·tau0/N`, `u0 = 2/w0²`.
pub fn derive_operating_point(p: &NetworkParams) -> Result<OperatingPoint, ParamError> {
    p.validate()?;
    let tau0 = p.q0 / p.capacity + p.prop_delay;
    let w0 = p.capacity * tau0 / f64::from(p.sessions);
    let u0 = 2.0 / (w0 * w0);
    if !(u0 > 0.0 && u0 < 1.0) {
        return Err(ParamError::LossRatioOutOfRange(u0));
    }
    Ok(OperatingPoint { tau0, w0, u0 })
}
