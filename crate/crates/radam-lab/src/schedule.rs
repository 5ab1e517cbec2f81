//! Step-size schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learning-rate schedule; `value(t)` is the step size at 1-based step t.
/// Every valid schedule yields strictly positive values for all t >= 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Constant {
        alpha0: f64,
    },
    /// alpha0 * t / warmup_steps until the ramp tops out at alpha0.
    LinearWarmup {
        alpha0: f64,
        warmup_steps: usize,
    },
    /// alpha0 * (total_steps - (t-1)) / total_steps, floored at one part
    /// in total_steps so the rate stays positive past the end.
    LinearDecay {
        alpha0: f64,
        total_steps: usize,
    },
    /// alpha0 * factor^(number of milestones at or before t).
    PiecewiseDecay {
        alpha0: f64,
        milestones: Vec<usize>,
        factor: f64,
    },
    /// The warmup leg through its ramp, then the tail schedule evaluated
    /// at the global step index.
    Composed {
        warmup: Box<Schedule>,
        then: Box<Schedule>,
    },
}

impl Schedule {
    pub fn value(&self, t: usize) -> f64 {
        debug_assert!(t >= 1);
        match self {
            Schedule::Constant { alpha0 } => *alpha0,
            Schedule::LinearWarmup {
                alpha0,
                warmup_steps,
            } => alpha0 * (t.min(*warmup_steps) as f64 / *warmup_steps as f64),
            Schedule::LinearDecay {
                alpha0,
                total_steps,
            } => {
                let remaining = total_steps.saturating_sub(t - 1).max(1);
                alpha0 * (remaining as f64 / *total_steps as f64)
            }
            Schedule::PiecewiseDecay {
                alpha0,
                milestones,
                factor,
            } => {
                let drops = milestones.iter().filter(|&&m| m <= t).count();
                alpha0 * factor.powi(drops as i32)
            }
            Schedule::Composed { warmup, then } => {
                let ramp = match **warmup {
                    Schedule::LinearWarmup { warmup_steps, .. } => warmup_steps,
                    // validate() rejects anything else
                    _ => 0,
                };
                if t <= ramp {
                    warmup.value(t)
                } else {
                    then.value(t)
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let alpha_ok = |alpha0: f64| -> Result<()> {
            if !(alpha0 > 0.0 && alpha0.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "schedule alpha0 must be positive and finite, got {alpha0}"
                )));
            }
            Ok(())
        };
        match self {
            Schedule::Constant { alpha0 } => alpha_ok(*alpha0),
            Schedule::LinearWarmup {
                alpha0,
                warmup_steps,
            } => {
                alpha_ok(*alpha0)?;
                if *warmup_steps == 0 {
                    return Err(Error::InvalidConfig(
                        "warmup_steps must be >= 1".to_string(),
                    ));
                }
                Ok(())
            }
            Schedule::LinearDecay {
                alpha0,
                total_steps,
            } => {
                alpha_ok(*alpha0)?;
                if *total_steps == 0 {
                    return Err(Error::InvalidConfig("total_steps must be >= 1".to_string()));
                }
                Ok(())
            }
            Schedule::PiecewiseDecay {
                alpha0,
                milestones,
                factor,
            } => {
                alpha_ok(*alpha0)?;
                if !(*factor > 0.0 && *factor < 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "piecewise factor must lie in (0, 1), got {factor}"
                    )));
                }
                if milestones.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidConfig(
                        "milestones must be strictly increasing".to_string(),
                    ));
                }
                Ok(())
            }
            Schedule::Composed { warmup, then } => {
                if !matches!(**warmup, Schedule::LinearWarmup { .. }) {
                    return Err(Error::InvalidConfig(
                        "composed schedules need a linear_warmup leg first".to_string(),
                    ));
                }
                warmup.validate()?;
                then.validate()
            }
        }
    }

    /// The same shape with every alpha0 replaced; how a sweep applies one
    /// schedule template across its learning-rate grid.
    pub fn with_alpha0(&self, lr: f64) -> Schedule {
        match self {
            Schedule::Constant { .. } => Schedule::Constant { alpha0: lr },
            Schedule::LinearWarmup { warmup_steps, .. } => Schedule::LinearWarmup {
                alpha0: lr,
                warmup_steps: *warmup_steps,
            },
            Schedule::LinearDecay { total_steps, .. } => Schedule::LinearDecay {
                alpha0: lr,
                total_steps: *total_steps,
            },
            Schedule::PiecewiseDecay {
                milestones, factor, ..
            } => Schedule::PiecewiseDecay {
                alpha0: lr,
                milestones: milestones.clone(),
                factor: *factor,
            },
            Schedule::Composed { warmup, then } => Schedule::Composed {
                warmup: Box::new(warmup.with_alpha0(lr)),
                then: Box::new(then.with_alpha0(lr)),
            },
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Schedule::Constant { .. } => "constant",
            Schedule::LinearWarmup { .. } => "linear_warmup",
            Schedule::LinearDecay { .. } => "linear_decay",
            Schedule::PiecewiseDecay { .. } => "piecewise_decay",
            Schedule::Composed { .. } => "composed",
        }
    }
}

/// Free-function spelling of [`Schedule::value`].
pub fn schedule_value(schedule: &Schedule, t: usize) -> f64 {
    schedule.value(t)
}
