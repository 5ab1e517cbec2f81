//! Monte Carlo harnesses: the ensemble variance of the raw vs rectified
//! adaptive rate, the exact-vs-approximate variance table, and an
//! empirical check that the EMA second moment behaves like a plain
//! moving average over its effective window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kahan::Kahan;
use crate::rng::{substream_seed, GaussianStream};
use crate::variance::{rect_term_raw, rho_inf_raw, rho_t_raw};

/// Standard-normal samples for one trajectory of an ensemble; the
/// trajectory's stream depends only on (seed, trajectory_index).
pub fn gaussian_stream(seed: u64, trajectory_index: u64, count: usize) -> Vec<f64> {
    let mut gs = GaussianStream::new(substream_seed(seed, trajectory_index));
    let mut out = vec![0.0; count];
    gs.fill(&mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Gradient mean: g_t ~ N(mu, 1).
    pub mu: f64,
    pub beta2: f64,
    pub trajectories: usize,
    pub steps: usize,
    pub seed: u64,
    pub epsilon: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mu: 0.0,
            beta2: 0.999,
            trajectories: 5000,
            steps: 6000,
            seed: 42,
            epsilon: 0.0,
        }
    }
}

impl SimConfig {
    /// Smaller preset that shows the same effect in a couple of seconds.
    pub fn desk_preset() -> Self {
        SimConfig {
            trajectories: 2000,
            steps: 2000,
            ..SimConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.beta2 && self.beta2 < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "beta2 must lie in (0, 1), got {}",
                self.beta2
            )));
        }
        if self.trajectories < 2 {
            return Err(Error::InvalidConfig(
                "trajectories must be >= 2".to_string(),
            ));
        }
        if self.steps < 5 {
            return Err(Error::InvalidConfig("steps must be >= 5".to_string()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "mu must be finite, got {}",
                self.mu
            )));
        }
        Ok(())
    }
}

/// Across-trajectory variances of the adaptive rate, raw and rectified,
/// for every step from `start_t` (the first step with rho_t > 4) through
/// the configured end.
#[derive(Clone, Debug)]
pub struct EnsembleSeries {
    pub start_t: usize,
    pub var_raw: Vec<f64>,
    pub var_rectified: Vec<f64>,
}

/// Simulate `trajectories` independent gradient histories g_t ~ N(mu, 1),
/// track each one's adaptive rate l_t = sqrt(1 - beta2^t)/(sqrt(v_t) +
/// epsilon), and reduce across trajectories per step.
///
/// Trajectories fill in parallel over disjoint rows; every reduction
/// walks trajectory indices in ascending order with compensated sums, so
/// the output is bit-identical at any worker count.
pub fn simulate_rate_variance(cfg: &SimConfig) -> Result<EnsembleSeries> {
    cfg.validate()?;
    let inf = rho_inf_raw(cfg.beta2);
    if !(inf > 4.0) {
        return Err(Error::DegenerateConfig(format!(
            "rho_inf = {inf} <= 4 for beta2 = {}; the adaptive rate never has a variance",
            cfg.beta2
        )));
    }
    let start_t = (1..=cfg.steps)
        .find(|&t| rho_t_raw(t, cfg.beta2) > 4.0)
        .ok_or_else(|| {
            Error::DegenerateConfig(format!(
                "rho_t stays <= 4 through all {} steps for beta2 = {}",
                cfg.steps, cfg.beta2
            ))
        })?;
    let cols = cfg.steps - start_t + 1;

    let mut rates = vec![0.0f64; cfg.trajectories * cols];
    let w2 = 1.0 - cfg.beta2;
    rates.par_chunks_mut(cols).enumerate().for_each(|(k, row)| {
        let mut gs = GaussianStream::new(substream_seed(cfg.seed, k as u64));
        let mut v = 0.0f64;
        let mut beta2_pow = 1.0f64;
        for t in 1..=cfg.steps {
            let g = cfg.mu + gs.sample();
            v = cfg.beta2 * v + w2 * (g * g);
            beta2_pow *= cfg.beta2;
            if t >= start_t {
                row[t - start_t] = (1.0 - beta2_pow).sqrt() / (v.sqrt() + cfg.epsilon);
            }
        }
    });

    let rect: Vec<f64> = (0..cols)
        .map(|j| rect_term_raw(rho_t_raw(start_t + j, cfg.beta2), inf))
        .collect();

    let n = cfg.trajectories as f64;
    let mut sum_raw = vec![Kahan::default(); cols];
    let mut sum_rect = vec![Kahan::default(); cols];
    for k in 0..cfg.trajectories {
        let row = &rates[k * cols..(k + 1) * cols];
        for j in 0..cols {
            sum_raw[j].add(row[j]);
            sum_rect[j].add(rect[j] * row[j]);
        }
    }
    let mean_raw: Vec<f64> = sum_raw.iter().map(|s| s.value() / n).collect();
    let mean_rect: Vec<f64> = sum_rect.iter().map(|s| s.value() / n).collect();

    let mut ss_raw = vec![Kahan::default(); cols];
    let mut ss_rect = vec![Kahan::default(); cols];
    for k in 0..cfg.trajectories {
        let row = &rates[k * cols..(k + 1) * cols];
        for j in 0..cols {
            let d = row[j] - mean_raw[j];
            ss_raw[j].add(d * d);
            let e = rect[j] * row[j] - mean_rect[j];
            ss_rect[j].add(e * e);
        }
    }
    Ok(EnsembleSeries {
        start_t,
        var_raw: ss_raw.iter().map(|s| s.value() / n).collect(),
        var_rectified: ss_rect.iter().map(|s| s.value() / n).collect(),
    })
}

/// One grid point of the exact-vs-approximate comparison at sigma = 1.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ApproxErrorRow {
    pub rho: f64,
    pub var_exact: f64,
    pub var_approx: f64,
    pub abs_diff: f64,
}

/// Tabulate both variance formulas on rho = rho_min, rho_min + step, ...
/// up to rho_max inclusive.
pub fn approx_error_curve(rho_min: f64, rho_max: f64, step: f64) -> Result<Vec<ApproxErrorRow>> {
    if !(rho_min > 4.0) {
        return Err(Error::Domain(format!(
            "rho_min must exceed 4, got {rho_min}"
        )));
    }
    if !(rho_max > rho_min) {
        return Err(Error::Domain(format!(
            "rho_max must exceed rho_min, got rho_max = {rho_max}, rho_min = {rho_min}"
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let mut rows = Vec::new();
    let mut k = 0usize;
    loop {
        // Grid points by index, not by accumulation, so they never drift.
        let rho = rho_min + k as f64 * step;
        if rho > rho_max {
            break;
        }
        let var_exact = crate::variance::var_exact(rho, 1.0)?;
        let var_approx = crate::variance::var_approx(rho, 1.0)?;
        rows.push(ApproxErrorRow {
            rho,
            var_exact,
            var_approx,
            abs_diff: (var_approx - var_exact).abs(),
        });
        k += 1;
    }
    Ok(rows)
}

/// Sample moments of the bias-corrected EMA of g^2 against the plain
/// average of the last round(rho_t) squared gradients.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentCheck {
    pub ema_mean: f64,
    pub sma_mean: f64,
    pub ema_var: f64,
    pub sma_var: f64,
}

/// Draw `n_samples` independent length-t gradient histories g ~ N(0, 1)
/// and compare the two second-moment statistics. Population variances;
/// sample index order fixed.
pub fn sma_ema_moment_check(
    t: usize,
    beta2: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MomentCheck> {
    if t == 0 {
        return Err(Error::Domain("t must be >= 1".to_string()));
    }
    if !(0.0 < beta2 && beta2 < 1.0) {
        return Err(Error::Domain(format!(
            "beta2 must lie in (0, 1), got {beta2}"
        )));
    }
    if n_samples < 1000 {
        return Err(Error::InvalidConfig(format!(
            "n_samples must be >= 1000 for stable moments, got {n_samples}"
        )));
    }
    let rho = rho_t_raw(t, beta2);
    // Rounds half away from zero; the nominal window length rho_t is
    // generally not an integer and always lands in [1, t].
    let window = (rho.round() as usize).clamp(1, t);

    let mut ema_vals = vec![0.0f64; n_samples];
    let mut sma_vals = vec![0.0f64; n_samples];
    let mut sq = vec![0.0f64; t];
    for s in 0..n_samples {
        let mut gs = GaussianStream::new(substream_seed(seed, s as u64));
        for slot in sq.iter_mut() {
            let g = gs.sample();
            *slot = g * g;
        }
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for &x in sq.iter() {
            num = beta2 * num + x;
            den = beta2 * den + 1.0;
        }
        ema_vals[s] = num / den;
        let tail = &sq[t - window..];
        sma_vals[s] = tail.iter().sum::<f64>() / window as f64;
    }

    let n = n_samples as f64;
    let mean_of = |vals: &[f64]| -> f64 {
        let mut acc = Kahan::default();
        for &x in vals {
            acc.add(x);
        }
        acc.value() / n
    };
    let ema_mean = mean_of(&ema_vals);
    let sma_mean = mean_of(&sma_vals);
    let var_of = |vals: &[f64], mean: f64| -> f64 {
        let mut acc = Kahan::default();
        for &x in vals {
            let d = x - mean;
            acc.add(d * d);
        }
        acc.value() / n
    };
    Ok(MomentCheck {
        ema_mean,
        sma_mean,
        ema_var: var_of(&ema_vals, ema_mean),
        sma_var: var_of(&sma_vals, sma_mean),
    })
}
