//! The training loop: schedule, optimizer, problem, and the logged record.

use serde::Serialize;

use crate::bench::{grad_histogram, Histogram, Problem};
use crate::optim::{decoupled_weight_decay, Optimizer};
use crate::rng::substream_seed;
use crate::schedule::Schedule;

pub type ParamVector = Vec<f64>;

/// 1-based step index and the schedule value for that step.
#[derive(Clone, Copy, Debug)]
pub struct StepContext {
    pub t: usize,
    pub alpha_t: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct InstrumentationFlags {
    pub grad_histograms: bool,
}

const HIST_BINS: usize = 40;
const HIST_LO_LOG10: f64 = -8.0;
const HIST_HI_LOG10: f64 = 2.0;

// Histograms for every step through 100, then every 100th.
fn histogram_due(t: usize) -> bool {
    t <= 100 || t.is_multiple_of(100)
}

/// Everything a run logs. `steps` is the requested count; the series
/// lengths equal the number of executed steps, which is smaller exactly
/// when the run diverged and was truncated.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub optimizer: String,
    pub schedule: String,
    pub steps: usize,
    pub losses: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub update_norms: Vec<f64>,
    pub divergent: bool,
    pub final_params: ParamVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histograms: Option<Vec<Histogram>>,
}

/// Drive `optimizer` over `problem` for up to `steps` steps.
///
/// Step t draws its minibatch noise from substream (seed, t), so the
/// record is a pure function of (problem, configs, steps, seed). A
/// non-finite loss truncates the run before recording that step; a
/// non-finite parameter after an update rejects the update. Both flag
/// the record divergent instead of failing.
pub fn run_loop(
    problem: &Problem,
    optimizer: &mut Optimizer,
    schedule: &Schedule,
    steps: usize,
    seed: u64,
    flags: InstrumentationFlags,
) -> RunRecord {
    let mut params = problem.initial_params();
    let mut losses = Vec::with_capacity(steps);
    let mut step_sizes = Vec::with_capacity(steps);
    let mut update_norms = Vec::with_capacity(steps);
    let mut histograms = flags.grad_histograms.then(Vec::new);
    let mut divergent = false;
    let lambda = optimizer.config.weight_decay;
    let coupled_decay = lambda > 0.0 && !optimizer.config.decoupled;
    let decoupled_decay = lambda > 0.0 && optimizer.config.decoupled;

    for t in 1..=steps {
        let key = substream_seed(seed, t as u64);
        let (loss, mut grads) = problem.loss_and_grad(&params, key);
        if !loss.is_finite() {
            divergent = true;
            break;
        }
        if let Some(hs) = histograms.as_mut() {
            if histogram_due(t) {
                let mut h = grad_histogram(&grads, HIST_BINS, HIST_LO_LOG10, HIST_HI_LOG10);
                h.step = t;
                hs.push(h);
            }
        }
        if coupled_decay {
            for (g, &p) in grads.iter_mut().zip(&params) {
                *g += lambda * p;
            }
        }
        let alpha_t = schedule.value(t);
        let ctx = StepContext { t, alpha_t };
        let delta = optimizer.step(&grads, &ctx);
        let previous = params.clone();
        for (p, d) in params.iter_mut().zip(&delta) {
            *p += d;
        }
        if decoupled_decay {
            decoupled_weight_decay(&mut params, lambda, alpha_t);
        }
        if params.iter().any(|p| !p.is_finite()) {
            params = previous.clone();
            divergent = true;
        }
        let mut norm_sq = 0.0;
        for (p, q) in params.iter().zip(&previous) {
            let d = p - q;
            norm_sq += d * d;
        }
        losses.push(loss);
        step_sizes.push(alpha_t);
        update_norms.push(norm_sq.sqrt());
        if divergent {
            break;
        }
    }

    RunRecord {
        seed,
        optimizer: optimizer.tag().to_string(),
        schedule: schedule.tag().to_string(),
        steps,
        losses,
        step_sizes,
        update_norms,
        divergent,
        final_params: params,
        histograms,
    }
}
