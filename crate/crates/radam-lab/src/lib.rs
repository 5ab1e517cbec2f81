// Validation guards are spelled `!(x > limit)` so NaN always fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Why does Adam need learning-rate warmup, and what happens when you
//! rectify the adaptive rate instead?
//!
//! The adaptive step size `1 / sqrt(v_t)` is wild in early training: with
//! only a handful of squared gradients in the EMA, its variance is large
//! (divergent for the first few steps), so early updates are erratic
//! unless something suppresses them. This crate contains the pieces
//! needed to study that effect end to end:
//!
//! - [`variance`]: the effective sample size `rho_t` of the squared
//!   gradient EMA, the exact and first-order variance of the adaptive
//!   rate as a function of `rho`, and the rectifier `r_t` that scales
//!   steps so the rectified rate has the variance of the large-`rho`
//!   limit.
//! - [`optim`]: SGD with momentum, Adam, and rectified Adam over flat
//!   `f64` parameter vectors, plus coupled and decoupled weight decay
//!   and a warmup-free `freeze_steps` heuristic for Adam.
//! - [`schedule`]: constant, linear warmup, linear decay, piecewise
//!   decay, and warmup-then-decay learning-rate schedules.
//! - [`sim`]: Monte Carlo ensembles of the adaptive rate that check the
//!   theory, a grid of exact-vs-approximate variance, and an EMA-vs-SMA
//!   moment comparison.
//! - [`bench`]: a noisy quadratic, a separable logistic regression, and
//!   a tiny MLP, all with deterministic data generation.
//! - [`run`]: the training loop that ties an optimizer, a schedule, and
//!   a problem together into a serializable run record.
//! - [`cli`]: the `radam-lab` binary surface over all of the above.
//!
//! Everything is deterministic: a run is a pure function of its seed and
//! configuration, at any thread count, down to the last bit. See the
//! `examples/` directory for one runnable walkthrough per capability.

pub mod bench;
pub mod cli;
pub mod error;
pub mod optim;
pub mod rng;
pub mod run;
pub mod schedule;
pub mod sim;
pub mod variance;

mod kahan;

pub use error::{Error, Result};
