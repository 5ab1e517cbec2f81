//! Statistics of the adaptive learning rate.
//!
//! The EMA second-moment estimate behaves like an average over an
//! effective number of recent gradients. `rho_t` tracks that effective
//! count as it grows from 1 toward `rho_inf`; under i.i.d. normal
//! gradients the squared adaptive rate then follows a scaled inverse
//! chi-square law with `rho_t` degrees of freedom. The variance of the
//! rate exists only once `rho_t > 4`, which is exactly the regime the
//! rectifier `rect_term` is built to normalize.
//!
//! `var_exact` evaluates the analytic variance through log-gamma
//! differences. `var_approx` is the first-order approximation
//! rho / (2 (rho-2) (rho-4) sigma^2). `var_exact_beta_form` is the
//! textbook beta-function expression, kept only as a cross-check because
//! it overflows past rho of a few hundred.

use crate::error::{Error, Result};
use crate::kahan::Kahan;

// Lanczos approximation, g = 7, 9 terms. Published digits kept verbatim.
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

// ln(sqrt(2 pi))
const HALF_LN_TWO_PI: f64 = 0.9189385332046727;

/// Natural log of the gamma function for x > 0.
///
/// No reflection branch: no caller leaves the positive axis. Error stays
/// below 3e-15 relative to max(1, |ln gamma(x)|) on [0.5, 1e6].
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("log_gamma needs x > 0, got {x}")));
    }
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + (i - 1) as f64);
    }
    let t = x + 6.5;
    Ok(HALF_LN_TWO_PI + (x - 0.5) * t.ln() - t + a.ln())
}

fn check_beta2(beta2: f64) -> Result<()> {
    if !(0.0 < beta2 && beta2 < 1.0) {
        return Err(Error::Domain(format!(
            "beta2 must lie in (0, 1), got {beta2}"
        )));
    }
    Ok(())
}

fn check_t(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::Domain("step index t must be >= 1".to_string()));
    }
    Ok(())
}

/// Limiting effective sample count of the EMA second moment,
/// 2/(1 - beta2) - 1.
pub fn rho_inf(beta2: f64) -> Result<f64> {
    check_beta2(beta2)?;
    Ok(rho_inf_raw(beta2))
}

pub(crate) fn rho_inf_raw(beta2: f64) -> f64 {
    2.0 / (1.0 - beta2) - 1.0
}

/// Effective sample count of the EMA second moment after t steps:
/// rho_inf - 2 t beta2^t / (1 - beta2^t).
pub fn rho_t(t: usize, beta2: f64) -> Result<f64> {
    check_beta2(beta2)?;
    check_t(t)?;
    Ok(rho_t_raw(t, beta2))
}

pub(crate) fn rho_t_raw(t: usize, beta2: f64) -> f64 {
    // t = 1 collapses algebraically to 1 for every beta2; the closed form
    // would divide rounding noise by rounding noise.
    if t == 1 {
        return 1.0;
    }
    let inf = rho_inf_raw(beta2);
    let tf = t as f64;
    let x = tf * beta2.ln();
    // beta2^t underflowed: the correction term is below one ulp of inf.
    if x < -700.0 {
        return inf;
    }
    inf - 2.0 * tf * x.exp() / (-x.exp_m1())
}

/// Rectification factor r_t in (0, 1]: the variance-matching multiplier
/// that makes the early adaptive rate as consistent as its t -> inf limit.
pub fn rect_term(t: usize, beta2: f64) -> Result<f64> {
    check_beta2(beta2)?;
    check_t(t)?;
    let inf = rho_inf_raw(beta2);
    if !(inf > 4.0) {
        return Err(Error::DegenerateConfig(format!(
            "rho_inf = {inf} <= 4 for beta2 = {beta2}; the rectifier never activates"
        )));
    }
    let rho = rho_t_raw(t, beta2);
    if !(rho > 4.0) {
        return Err(Error::VarianceIntractable(format!(
            "rho_t = {rho} <= 4 at t = {t}; the adaptive rate has no variance yet"
        )));
    }
    Ok(rect_term_raw(rho, inf))
}

pub(crate) fn rect_term_raw(rho: f64, inf: f64) -> f64 {
    let num = (rho - 4.0) * (rho - 2.0) * inf;
    let den = (inf - 4.0) * (inf - 2.0) * rho;
    (num / den).sqrt()
}

fn check_var_args(rho: f64, sigma: f64) -> Result<()> {
    if !(rho > 4.0) {
        return Err(Error::Domain(format!(
            "variance of the adaptive rate needs rho > 4, got {rho}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    Ok(())
}

/// Analytic variance of the adaptive rate for a given effective sample
/// count rho and gradient scale sigma, as E[x] - E[sqrt(x)]^2 of the
/// scaled inverse chi-square law, with both moments going through
/// log-gamma so nothing overflows at large rho.
pub fn var_exact(rho: f64, sigma: f64) -> Result<f64> {
    check_var_args(rho, sigma)?;
    let tau = 1.0 / sigma;
    let root =
        tau * (rho / 2.0).sqrt() * (log_gamma((rho - 1.0) / 2.0)? - log_gamma(rho / 2.0)?).exp();
    Ok(tau * tau * (rho / (rho - 2.0)) - root * root)
}

/// The same quantity through the beta function and an explicit power of
/// two. Overflows to NaN past rho of a few hundred; kept deliberately
/// direct as an independent cross-check of `var_exact` on small rho.
pub fn var_exact_beta_form(rho: f64, sigma: f64) -> Result<f64> {
    check_var_args(rho, sigma)?;
    let tau = 1.0 / sigma;
    let half = (rho - 1.0) / 2.0;
    let b = (log_gamma(half)? + log_gamma(half)? - log_gamma(rho - 1.0)?).exp();
    let pow = 2.0f64.powf(2.0 * rho - 5.0);
    Ok(tau * tau * (rho / (rho - 2.0) - rho * pow / std::f64::consts::PI * b * b))
}

/// First-order approximation rho / (2 (rho-2) (rho-4) sigma^2).
pub fn var_approx(rho: f64, sigma: f64) -> Result<f64> {
    check_var_args(rho, sigma)?;
    Ok(rho / (2.0 * (rho - 2.0) * (rho - 4.0) * sigma * sigma))
}

/// Minimum of `var_exact` over the whole run, attained in the t -> inf
/// limit rho_t = rho_inf.
pub fn c_var(beta2: f64, sigma: f64) -> Result<f64> {
    check_beta2(beta2)?;
    let inf = rho_inf_raw(beta2);
    if !(inf > 4.0) {
        return Err(Error::DegenerateConfig(format!(
            "rho_inf = {inf} <= 4 for beta2 = {beta2}; the variance never exists"
        )));
    }
    var_exact(inf, sigma)
}

/// EMA-weighted mean of the step indices 1..=t with weights
/// proportional to beta2^(t-i): the "center of mass" that ties the EMA
/// to a plain moving average of the last rho_t gradients.
pub fn ema_center_of_mass(t: usize, beta2: f64) -> Result<f64> {
    check_beta2(beta2)?;
    check_t(t)?;
    let mut num = Kahan::default();
    let mut den = Kahan::default();
    let mut w = 1.0;
    // Descending index i = t..1 keeps weights exact powers of beta2 and
    // adds the largest terms first.
    for i in (1..=t).rev() {
        num.add(w * i as f64);
        den.add(w);
        w *= beta2;
    }
    Ok(num.value() / den.value())
}

/// Scaled inverse chi-square description of the squared adaptive rate:
/// degrees of freedom and the gradient scale it was fit to.
#[derive(Clone, Copy, Debug)]
pub struct VarianceModel {
    pub rho: f64,
    pub sigma: f64,
    pub tau: f64,
}

impl VarianceModel {
    pub fn new(rho: f64, sigma: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::Domain(format!("rho must be positive, got {rho}")));
        }
        if !(sigma > 0.0) {
            return Err(Error::Domain(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(VarianceModel {
            rho,
            sigma,
            tau: 1.0 / sigma,
        })
    }

    /// Variance of the adaptive rate under this model.
    pub fn variance(&self) -> Result<f64> {
        var_exact(self.rho, self.sigma)
    }
}

/// The degrees-of-freedom bookkeeping for one (t, beta2) point.
#[derive(Clone, Copy, Debug)]
pub struct SmaEstimate {
    pub t: usize,
    pub beta2: f64,
    pub rho_t: f64,
    pub rho_inf: f64,
}

impl SmaEstimate {
    pub fn new(t: usize, beta2: f64) -> Result<Self> {
        Ok(SmaEstimate {
            t,
            beta2,
            rho_t: rho_t(t, beta2)?,
            rho_inf: rho_inf(beta2)?,
        })
    }
}
