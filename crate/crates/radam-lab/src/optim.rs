//! Update rules: SGD with bias-corrected momentum, Adam (with optional
//! frozen lead-in and decoupled weight decay), and rectified Adam.
//!
//! All three share state shape and bias-correction bookkeeping, so the
//! degeneracy "rectified Adam below the variance threshold is SGDM" is an
//! identity of code paths, not just of algebra.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::run::StepContext;
use crate::variance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Sgdm,
    Adam,
    Radam,
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::Sgdm => "sgdm",
            Variant::Adam => "adam",
            Variant::Radam => "radam",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub variant: Variant,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Weight-decay strength lambda; 0 disables.
    pub weight_decay: f64,
    /// Decoupled decay shrinks parameters after the update; the coupled
    /// alternative folds lambda * theta into the gradient instead.
    pub decoupled: bool,
    /// Adam only: steps during which m and theta stay frozen while v
    /// keeps estimating the second moment. 0 disables.
    pub freeze_steps: usize,
    /// SGDM only: its momentum coefficient (the beta1 role).
    pub momentum: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            variant: Variant::Adam,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            decoupled: true,
            freeze_steps: 0,
            momentum: 0.9,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let coef_ok = |name: &str, x: f64| -> Result<()> {
            if !(0.0..1.0).contains(&x) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 1), got {x}"
                )));
            }
            Ok(())
        };
        coef_ok("beta1", self.beta1)?;
        coef_ok("beta2", self.beta2)?;
        coef_ok("momentum", self.momentum)?;
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "eps must be finite and >= 0, got {}",
                self.eps
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "weight_decay must be finite and >= 0, got {}",
                self.weight_decay
            )));
        }
        if self.freeze_steps > 0 && self.variant != Variant::Adam {
            return Err(Error::InvalidConfig(format!(
                "freeze_steps applies only to adam, not {}",
                self.variant
            )));
        }
        Ok(())
    }
}

/// Moment estimates plus the step counter and the running coefficient
/// powers for bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: usize,
    beta1_pow: f64,
    beta2_pow: f64,
    momentum_pow: f64,
}

impl OptimizerState {
    pub fn new(dim: usize) -> Self {
        OptimizerState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
            beta1_pow: 1.0,
            beta2_pow: 1.0,
            momentum_pow: 1.0,
        }
    }

    fn begin_step(&mut self, config: &OptimizerConfig) {
        self.t += 1;
        self.beta1_pow *= config.beta1;
        self.beta2_pow *= config.beta2;
        self.momentum_pow *= config.momentum;
    }
}

// m <- coef m + (1-coef) g, then delta = -(alpha * (m / (1 - coef^t))).
// Shared verbatim by sgdm_step and the radam fallback so their agreement
// is bit-exact by construction.
fn unadapted_update(
    m: &mut [f64],
    coef: f64,
    coef_pow: f64,
    grads: &[f64],
    alpha: f64,
) -> Vec<f64> {
    let w = 1.0 - coef;
    let bias = 1.0 - coef_pow;
    m.iter_mut()
        .zip(grads)
        .map(|(mi, &g)| {
            *mi = coef * *mi + w * g;
            -(alpha * (*mi / bias))
        })
        .collect()
}

/// SGD with bias-corrected momentum: delta = -alpha_t * m_t / (1 - mu^t).
pub fn sgdm_step(
    state: &mut OptimizerState,
    config: &OptimizerConfig,
    grads: &[f64],
    ctx: &StepContext,
) -> Vec<f64> {
    debug_assert_eq!(state.m.len(), grads.len());
    state.begin_step(config);
    unadapted_update(
        &mut state.m,
        config.momentum,
        state.momentum_pow,
        grads,
        ctx.alpha_t,
    )
}

/// Adam: delta = -alpha_t * m_hat * sqrt(1 - beta2^t) / (eps + sqrt(v)).
///
/// While t <= freeze_steps only v advances; m and the parameters hold
/// still, so a long noise-only lead-in seasons the denominator first.
pub fn adam_step(
    state: &mut OptimizerState,
    config: &OptimizerConfig,
    grads: &[f64],
    ctx: &StepContext,
) -> Vec<f64> {
    debug_assert_eq!(state.m.len(), grads.len());
    state.begin_step(config);
    let w2 = 1.0 - config.beta2;
    for (vi, &g) in state.v.iter_mut().zip(grads) {
        *vi = config.beta2 * *vi + w2 * (g * g);
    }
    if state.t <= config.freeze_steps {
        return vec![0.0; grads.len()];
    }
    let w1 = 1.0 - config.beta1;
    let bias1 = 1.0 - state.beta1_pow;
    let rate_scale = (1.0 - state.beta2_pow).sqrt();
    let alpha = ctx.alpha_t;
    state
        .m
        .iter_mut()
        .zip(grads)
        .zip(&state.v)
        .map(|((mi, &g), vi)| {
            *mi = config.beta1 * *mi + w1 * g;
            let denom = config.eps + vi.sqrt();
            // eps = 0 with an all-zero gradient history: 0/0 reads as 0.
            if denom == 0.0 {
                0.0
            } else {
                -(alpha * (*mi / bias1)) * (rate_scale / denom)
            }
        })
        .collect()
}

/// Rectified Adam: the adaptive step scaled by rect_term once rho_t > 4,
/// the bias-corrected momentum step before that.
pub fn radam_step(
    state: &mut OptimizerState,
    config: &OptimizerConfig,
    grads: &[f64],
    ctx: &StepContext,
) -> Vec<f64> {
    debug_assert_eq!(state.m.len(), grads.len());
    state.begin_step(config);
    let w2 = 1.0 - config.beta2;
    for (vi, &g) in state.v.iter_mut().zip(grads) {
        *vi = config.beta2 * *vi + w2 * (g * g);
    }
    let rho = variance::rho_t_raw(state.t, config.beta2);
    if rho > 4.0 {
        let rect = variance::rect_term_raw(rho, variance::rho_inf_raw(config.beta2));
        let scale = ctx.alpha_t * rect;
        let w1 = 1.0 - config.beta1;
        let bias1 = 1.0 - state.beta1_pow;
        let rate_scale = (1.0 - state.beta2_pow).sqrt();
        state
            .m
            .iter_mut()
            .zip(grads)
            .zip(&state.v)
            .map(|((mi, &g), vi)| {
                *mi = config.beta1 * *mi + w1 * g;
                let denom = vi.sqrt() + config.eps;
                if denom == 0.0 {
                    0.0
                } else {
                    -(scale * (*mi / bias1)) * (rate_scale / denom)
                }
            })
            .collect()
    } else {
        unadapted_update(
            &mut state.m,
            config.beta1,
            state.beta1_pow,
            grads,
            ctx.alpha_t,
        )
    }
}

/// theta <- theta - alpha * lambda * theta, applied after the optimizer
/// delta; touches neither m nor v.
pub fn decoupled_weight_decay(params: &mut [f64], lambda: f64, alpha: f64) {
    for p in params {
        *p -= alpha * lambda * *p;
    }
}

/// One configured update rule plus its state.
#[derive(Clone, Debug)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    pub state: OptimizerState,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, dim: usize) -> Result<Self> {
        config.validate()?;
        Ok(Optimizer {
            config,
            state: OptimizerState::new(dim),
        })
    }

    pub fn step(&mut self, grads: &[f64], ctx: &StepContext) -> Vec<f64> {
        match self.config.variant {
            Variant::Sgdm => sgdm_step(&mut self.state, &self.config, grads, ctx),
            Variant::Adam => adam_step(&mut self.state, &self.config, grads, ctx),
            Variant::Radam => radam_step(&mut self.state, &self.config, grads, ctx),
        }
    }

    pub fn tag(&self) -> &'static str {
        self.config.variant.tag()
    }
}
