//! Desk-scale stochastic objectives with closed-form gradients, the
//! gradient-magnitude histogram instrumentation, and learning-rate sweep
//! orchestration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{Optimizer, OptimizerConfig};
use crate::rng::{substream_seed, GaussianStream, SplitMix64};
use crate::run::{run_loop, InstrumentationFlags};
use crate::schedule::Schedule;

pub const DEFAULT_QUADRATIC_DIM: usize = 10;
pub const DEFAULT_CONDITION_NUMBER: f64 = 100.0;
pub const DEFAULT_NOISE_STD: f64 = 1.0;
pub const DEFAULT_LOGISTIC_DIM: usize = 10;
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_HIDDEN: usize = 8;

fn default_quadratic_dim() -> usize {
    DEFAULT_QUADRATIC_DIM
}
fn default_condition_number() -> f64 {
    DEFAULT_CONDITION_NUMBER
}
fn default_noise_std() -> f64 {
    DEFAULT_NOISE_STD
}
fn default_logistic_dim() -> usize {
    DEFAULT_LOGISTIC_DIM
}
fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}
fn default_hidden() -> usize {
    DEFAULT_HIDDEN
}

/// What to build: a noisy quadratic bowl, a two-blob logistic regression,
/// or a one-hidden-layer tanh network on a ring-vs-blob dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    NoisyQuadratic {
        #[serde(default = "default_quadratic_dim")]
        dim: usize,
        #[serde(default = "default_condition_number")]
        condition_number: f64,
        #[serde(default = "default_noise_std")]
        noise_std: f64,
    },
    LogisticRegression {
        #[serde(default = "default_logistic_dim")]
        dim: usize,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_batch_size")]
        batch_size: usize,
    },
    SmallMlp {
        #[serde(default = "default_hidden")]
        hidden: usize,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_batch_size")]
        batch_size: usize,
    },
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec::NoisyQuadratic {
            dim: default_quadratic_dim(),
            condition_number: default_condition_number(),
            noise_std: default_noise_std(),
        }
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemSpec::NoisyQuadratic {
                dim,
                condition_number,
                noise_std,
            } => {
                if *dim == 0 {
                    return Err(Error::InvalidConfig("dim must be >= 1".to_string()));
                }
                if !(*condition_number >= 1.0 && condition_number.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "condition_number must be >= 1, got {condition_number}"
                    )));
                }
                if !(*noise_std >= 0.0 && noise_std.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "noise_std must be >= 0, got {noise_std}"
                    )));
                }
                Ok(())
            }
            ProblemSpec::LogisticRegression {
                dim,
                samples,
                batch_size,
            } => {
                if *dim == 0 || *samples == 0 || *batch_size == 0 {
                    return Err(Error::InvalidConfig(
                        "dim, samples, and batch_size must all be >= 1".to_string(),
                    ));
                }
                Ok(())
            }
            ProblemSpec::SmallMlp {
                hidden,
                samples,
                batch_size,
            } => {
                if *hidden == 0 || *samples == 0 || *batch_size == 0 {
                    return Err(Error::InvalidConfig(
                        "hidden, samples, and batch_size must all be >= 1".to_string(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ProblemSpec::NoisyQuadratic { .. } => "noisy_quadratic",
            ProblemSpec::LogisticRegression { .. } => "logistic_regression",
            ProblemSpec::SmallMlp { .. } => "small_mlp",
        }
    }
}

enum ProblemKind {
    Quadratic {
        h: Vec<f64>,
        noise_std: f64,
    },
    /// Features row-major, one row per sample; parameters are [w, b].
    Logistic {
        xs: Vec<f64>,
        ys: Vec<f64>,
        feat: usize,
        batch: usize,
    },
    /// 2-input tanh layer of `hidden` units, linear output, target 0/1.
    /// Parameters are [W1 (hidden x 2), b1, w2, b2].
    Mlp {
        xs: Vec<f64>,
        ys: Vec<f64>,
        hidden: usize,
        batch: usize,
    },
}

/// A stochastic objective: `loss_and_grad` is a pure function of the
/// parameters and a step key, so runs replay exactly.
pub struct Problem {
    dim: usize,
    init: Vec<f64>,
    kind: ProblemKind,
}

/// Builds the dataset and initial point deterministically from `seed`.
/// The data substreams are derived away from the run loop's per-step
/// keys, so sharing one seed between the two stays collision-free.
pub fn make_problem(spec: &ProblemSpec, seed: u64) -> Result<Problem> {
    spec.validate()?;
    let root = substream_seed(seed, u64::MAX);
    let mut init_stream = GaussianStream::new(substream_seed(root, 0));
    let mut data_stream = GaussianStream::new(substream_seed(root, 1));
    match *spec {
        ProblemSpec::NoisyQuadratic {
            dim,
            condition_number,
            noise_std,
        } => {
            let h: Vec<f64> = if dim == 1 {
                vec![1.0]
            } else {
                (0..dim)
                    .map(|i| condition_number.powf(i as f64 / (dim - 1) as f64))
                    .collect()
            };
            // Fixed start at the ones vector: every coordinate begins one
            // unit from the optimum, so runs differ only through gradient
            // noise and exact contraction arguments stay available.
            Ok(Problem {
                dim,
                init: vec![1.0; dim],
                kind: ProblemKind::Quadratic { h, noise_std },
            })
        }
        ProblemSpec::LogisticRegression {
            dim,
            samples,
            batch_size,
        } => {
            let center = 1.5 / (dim as f64).sqrt();
            let mut xs = Vec::with_capacity(samples * dim);
            let mut ys = Vec::with_capacity(samples);
            for i in 0..samples {
                let y = (i % 2) as f64;
                let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
                for _ in 0..dim {
                    xs.push(sign * center + data_stream.sample());
                }
                ys.push(y);
            }
            let mut init = vec![0.0; dim + 1];
            init_stream.fill(&mut init);
            Ok(Problem {
                dim: dim + 1,
                init,
                kind: ProblemKind::Logistic {
                    xs,
                    ys,
                    feat: dim,
                    batch: batch_size,
                },
            })
        }
        ProblemSpec::SmallMlp {
            hidden,
            samples,
            batch_size,
        } => {
            let mut xs = Vec::with_capacity(samples * 2);
            let mut ys = Vec::with_capacity(samples);
            for i in 0..samples {
                if i % 2 == 0 {
                    // blob class at the origin
                    xs.push(0.5 * data_stream.sample());
                    xs.push(0.5 * data_stream.sample());
                    ys.push(0.0);
                } else {
                    // ring class: noisy radius, gaussian direction
                    let r = 2.0 + 0.2 * data_stream.sample();
                    let (mut dx, mut dy) = (data_stream.sample(), data_stream.sample());
                    let norm = (dx * dx + dy * dy).sqrt();
                    if norm == 0.0 {
                        dx = 1.0;
                        dy = 0.0;
                    } else {
                        dx /= norm;
                        dy /= norm;
                    }
                    xs.push(r * dx);
                    xs.push(r * dy);
                    ys.push(1.0);
                }
            }
            let dim = 4 * hidden + 1;
            let mut init = vec![0.0; dim];
            init_stream.fill(&mut init);
            for p in &mut init {
                *p *= 0.5;
            }
            Ok(Problem {
                dim,
                init,
                kind: ProblemKind::Mlp {
                    xs,
                    ys,
                    hidden,
                    batch: batch_size,
                },
            })
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// max(z,0) - z y + ln(1 + exp(-|z|)): the overflow-free cross entropy.
fn cross_entropy(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn initial_params(&self) -> Vec<f64> {
        self.init.clone()
    }

    /// Minibatch loss and gradient at `params`; `key` selects the batch
    /// (and the gradient noise for the quadratic). Same key, same answer.
    pub fn loss_and_grad(&self, params: &[f64], key: u64) -> (f64, Vec<f64>) {
        assert_eq!(params.len(), self.dim);
        match &self.kind {
            ProblemKind::Quadratic { h, noise_std } => {
                let mut gs = GaussianStream::new(key);
                let mut loss = 0.0;
                let grad = h
                    .iter()
                    .zip(params)
                    .map(|(&hi, &p)| {
                        loss += 0.5 * hi * p * p;
                        hi * p + noise_std * gs.sample()
                    })
                    .collect();
                (loss, grad)
            }
            ProblemKind::Logistic {
                xs,
                ys,
                feat,
                batch,
            } => {
                let mut rng = SplitMix64::new(key);
                let n = ys.len() as u64;
                let indices = (0..*batch).map(|_| (rng.next_u64() % n) as usize);
                self.logistic_batch(params, xs, ys, *feat, indices)
            }
            ProblemKind::Mlp {
                xs,
                ys,
                hidden,
                batch,
            } => {
                let mut rng = SplitMix64::new(key);
                let n = ys.len() as u64;
                let indices = (0..*batch).map(|_| (rng.next_u64() % n) as usize);
                self.mlp_batch(params, xs, ys, *hidden, indices)
            }
        }
    }

    /// Loss and gradient over the full dataset (the expectation the
    /// minibatch gradient is unbiased for). The quadratic's full gradient
    /// is its noiseless one.
    pub fn full_loss_and_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(params.len(), self.dim);
        match &self.kind {
            ProblemKind::Quadratic { h, .. } => {
                let mut loss = 0.0;
                let grad = h
                    .iter()
                    .zip(params)
                    .map(|(&hi, &p)| {
                        loss += 0.5 * hi * p * p;
                        hi * p
                    })
                    .collect();
                (loss, grad)
            }
            ProblemKind::Logistic { xs, ys, feat, .. } => {
                self.logistic_batch(params, xs, ys, *feat, 0..ys.len())
            }
            ProblemKind::Mlp { xs, ys, hidden, .. } => {
                self.mlp_batch(params, xs, ys, *hidden, 0..ys.len())
            }
        }
    }

    fn logistic_batch(
        &self,
        params: &[f64],
        xs: &[f64],
        ys: &[f64],
        feat: usize,
        indices: impl Iterator<Item = usize>,
    ) -> (f64, Vec<f64>) {
        let (w, b) = (&params[..feat], params[feat]);
        let mut loss = 0.0;
        let mut grad = vec![0.0; feat + 1];
        let mut count = 0usize;
        for idx in indices {
            let x = &xs[idx * feat..(idx + 1) * feat];
            let y = ys[idx];
            let z = w.iter().zip(x).map(|(&wi, &xi)| wi * xi).sum::<f64>() + b;
            loss += cross_entropy(z, y);
            let dz = sigmoid(z) - y;
            for (gi, &xi) in grad[..feat].iter_mut().zip(x) {
                *gi += dz * xi;
            }
            grad[feat] += dz;
            count += 1;
        }
        let scale = 1.0 / count as f64;
        for g in &mut grad {
            *g *= scale;
        }
        (loss * scale, grad)
    }

    fn mlp_batch(
        &self,
        params: &[f64],
        xs: &[f64],
        ys: &[f64],
        hidden: usize,
        indices: impl Iterator<Item = usize>,
    ) -> (f64, Vec<f64>) {
        let w1 = &params[..2 * hidden];
        let b1 = &params[2 * hidden..3 * hidden];
        let w2 = &params[3 * hidden..4 * hidden];
        let b2 = params[4 * hidden];
        let mut loss = 0.0;
        let mut grad = vec![0.0; self.dim];
        let mut act = vec![0.0; hidden];
        let mut count = 0usize;
        for idx in indices {
            let (x0, x1) = (xs[2 * idx], xs[2 * idx + 1]);
            let y = ys[idx];
            let mut out = b2;
            for j in 0..hidden {
                let pre = w1[2 * j] * x0 + w1[2 * j + 1] * x1 + b1[j];
                act[j] = pre.tanh();
                out += w2[j] * act[j];
            }
            let e = out - y;
            loss += 0.5 * e * e;
            let (gw1, rest) = grad.split_at_mut(2 * hidden);
            let (gb1, rest) = rest.split_at_mut(hidden);
            let (gw2, gb2) = rest.split_at_mut(hidden);
            gb2[0] += e;
            for j in 0..hidden {
                gw2[j] += e * act[j];
                let dpre = e * w2[j] * (1.0 - act[j] * act[j]);
                gw1[2 * j] += dpre * x0;
                gw1[2 * j + 1] += dpre * x1;
                gb1[j] += dpre;
            }
            count += 1;
        }
        let scale = 1.0 / count as f64;
        for g in &mut grad {
            *g *= scale;
        }
        (loss * scale, grad)
    }
}

/// Histogram of log10 |g| with half-open bins [lo, hi); zero entries
/// count as underflow. Conservation: counts + underflow + overflow
/// equals the number of gradient entries.
#[derive(Clone, Debug, Serialize)]
pub struct Histogram {
    pub step: usize,
    #[serde(rename = "edges")]
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

pub fn grad_histogram(g: &[f64], bins: usize, lo_log10: f64, hi_log10: f64) -> Histogram {
    assert!(bins >= 1 && lo_log10 < hi_log10);
    let width = (hi_log10 - lo_log10) / bins as f64;
    let mut counts = vec![0u64; bins];
    let mut underflow = 0u64;
    let mut overflow = 0u64;
    for &gi in g {
        let a = gi.abs();
        if a == 0.0 {
            underflow += 1;
            continue;
        }
        let x = a.log10();
        if x.is_nan() {
            overflow += 1;
        } else if x < lo_log10 {
            underflow += 1;
        } else if x >= hi_log10 {
            overflow += 1;
        } else {
            let idx = ((x - lo_log10) / width) as usize;
            counts[idx.min(bins - 1)] += 1;
        }
    }
    Histogram {
        step: 0,
        bin_edges: (0..=bins).map(|i| lo_log10 + i as f64 * width).collect(),
        counts,
        underflow,
        overflow,
    }
}

/// One (optimizer, lr, seed) cell of a sweep. Divergent runs keep their
/// flag and leave the loss columns empty.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub optimizer: String,
    pub lr: f64,
    pub seed: u64,
    pub final_loss: Option<f64>,
    pub best_loss: Option<f64>,
    pub divergent: bool,
    pub tail_mean_loss: Option<f64>,
}

/// Run the full cartesian product optimizers x learning_rates x seeds.
///
/// Rows come back in that nesting order regardless of how the runs were
/// scheduled. Each run gets the template schedule with alpha0 swapped
/// for its learning rate, and a problem built from its own seed.
pub fn lr_sweep(
    spec: &ProblemSpec,
    optimizers: &[OptimizerConfig],
    schedule_template: &Schedule,
    learning_rates: &[f64],
    steps: usize,
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    schedule_template.validate()?;
    if optimizers.is_empty() {
        return Err(Error::InvalidConfig("optimizers list is empty".to_string()));
    }
    if learning_rates.is_empty() {
        return Err(Error::InvalidConfig(
            "learning_rates list is empty".to_string(),
        ));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("seeds list is empty".to_string()));
    }
    if steps == 0 {
        return Err(Error::InvalidConfig("steps must be >= 1".to_string()));
    }
    for cfg in optimizers {
        cfg.validate()?;
    }
    for &lr in learning_rates {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rates must be positive and finite, got {lr}"
            )));
        }
    }

    let mut jobs = Vec::new();
    for cfg in optimizers {
        for &lr in learning_rates {
            for &seed in seeds {
                jobs.push((cfg, lr, seed));
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|&(cfg, lr, seed)| {
            let problem = make_problem(spec, seed).expect("spec validated above");
            let schedule = schedule_template.with_alpha0(lr);
            let mut optimizer =
                Optimizer::new(cfg.clone(), problem.dim()).expect("config validated above");
            let record = run_loop(
                &problem,
                &mut optimizer,
                &schedule,
                steps,
                seed,
                InstrumentationFlags::default(),
            );
            let (final_loss, best_loss, tail_mean_loss) = if record.divergent {
                (None, None, None)
            } else {
                let losses = &record.losses;
                let tail_len = losses.len().div_ceil(10).max(1);
                let tail = &losses[losses.len() - tail_len..];
                let mean = tail.iter().sum::<f64>() / tail_len as f64;
                (
                    losses.last().copied(),
                    Some(losses.iter().copied().fold(f64::INFINITY, f64::min)),
                    Some(mean),
                )
            };
            SweepRow {
                optimizer: record.optimizer,
                lr,
                seed,
                final_loss,
                best_loss,
                divergent: record.divergent,
                tail_mean_loss,
            }
        })
        .collect();
    Ok(rows)
}
