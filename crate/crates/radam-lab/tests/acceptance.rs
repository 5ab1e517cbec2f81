//! The release gate. Each test prints exactly one PASS/FAIL line with the
//! measured numbers, then asserts. Thresholds and runtime budgets are
//! frozen; run with `--nocapture` to see the lines for passing criteria.

mod common;

use std::process::Command;
use std::time::Instant;

use radam_lab::bench::{lr_sweep, make_problem, ProblemSpec};
use radam_lab::optim::{
    adam_step, radam_step, sgdm_step, OptimizerConfig, OptimizerState, Variant,
};
use radam_lab::rng::{substream_seed, GaussianStream};
use radam_lab::run::StepContext;
use radam_lab::schedule::Schedule;
use radam_lab::sim::{approx_error_curve, simulate_rate_variance, SimConfig};
use radam_lab::variance::{ema_center_of_mass, rect_term, rho_t, var_approx, var_exact};

fn verdict(n: u32, ok: bool, detail: &str) {
    println!(
        "criterion {n}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n}: {detail}");
}

// 1. Exact variance strictly decreasing over rho = 4.5 + 0.1 k up to 10000.
#[test]
fn criterion_01_exact_variance_strictly_decreasing() {
    let clock = Instant::now();
    let mut violations = 0usize;
    let mut points = 1usize;
    let mut prev = var_exact(4.5, 1.0).unwrap();
    for k in 1.. {
        let rho = 4.5 + 0.1 * k as f64;
        if rho > 10_000.0 {
            break;
        }
        let cur = var_exact(rho, 1.0).unwrap();
        let decreased = cur < prev;
        if !decreased {
            // NaN lands here too; anything short of a strict drop is a violation.
            violations += 1;
        }
        prev = cur;
        points += 1;
    }
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        1,
        violations == 0 && secs < 5.0,
        &format!("{points} grid points, {violations} violations, {secs:.2}s"),
    );
}

// 2. Early-to-late variance ratio exceeds 100x in both formulas.
#[test]
fn criterion_02_variance_ratio_over_one_hundred() {
    let clock = Instant::now();
    let approx_ratio = var_approx(5.0, 1.0).unwrap() / var_approx(500.0, 1.0).unwrap();
    let exact_ratio = var_exact(5.0, 1.0).unwrap() / var_exact(500.0, 1.0).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        2,
        approx_ratio > 100.0 && exact_ratio > 100.0 && secs < 1.0,
        &format!("approx ratio {approx_ratio:.2}, exact ratio {exact_ratio:.2}, {secs:.2}s"),
    );
}

// 3. EMA center of mass matches t + 1 - (rho_t + 1)/2 to 1e-8 everywhere.
#[test]
fn criterion_03_center_of_mass_identity() {
    let clock = Instant::now();
    let mut worst = 0.0f64;
    for beta2 in [0.9, 0.99, 0.999, 0.9995] {
        for t in 1..=10_000 {
            let com = ema_center_of_mass(t, beta2).unwrap();
            let matched = t as f64 + 1.0 - (rho_t(t, beta2).unwrap() + 1.0) / 2.0;
            worst = worst.max((com - matched).abs());
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        3,
        worst <= 1e-8 && secs < 10.0,
        &format!("max abs deviation {worst:.3e} over 40000 (t, beta2) points, {secs:.2}s"),
    );
}

// 4. First-order formula within 10% of exact for rho >= 50, error shrinking in rho.
#[test]
fn criterion_04_approximation_error_curve() {
    let clock = Instant::now();
    let rows = approx_error_curve(5.0, 500.0, 1.0).unwrap();
    let rel: Vec<f64> = rows.iter().map(|r| r.abs_diff / r.var_exact).collect();
    let under_ten_pct = rows
        .iter()
        .zip(&rel)
        .filter(|(r, _)| r.rho >= 50.0)
        .all(|(_, e)| *e < 0.10);
    let monotone = rel.windows(2).all(|w| w[1] < w[0]);
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        4,
        under_ten_pct && monotone && secs < 5.0,
        &format!(
            "{} rows, rel err at 50 = {:.4}, at 500 = {:.6}, monotone = {monotone}, {secs:.2}s",
            rows.len(),
            rel[45],
            rel[495]
        ),
    );
}

fn desk_runs() -> Vec<(f64, radam_lab::sim::EnsembleSeries)> {
    [0.0, 0.001, 0.01, 0.1, 1.0, 10.0]
        .into_iter()
        .map(|mu| {
            let cfg = SimConfig {
                mu,
                trajectories: 2000,
                steps: 2000,
                ..SimConfig::default()
            };
            (mu, simulate_rate_variance(&cfg).unwrap())
        })
        .collect()
}

// 5. Raw rate variance collapses at least 25x while the rectified one
//    stays within a 5x band, for every gradient mean.
#[test]
fn criterion_05_rectification_flattens_variance() {
    let clock = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for (mu, series) in desk_runs() {
        let drop = series.var_raw[0] / series.var_raw[series.var_raw.len() - 1];
        let flat = series
            .var_rectified
            .iter()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            / series
                .var_rectified
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b));
        ok &= drop >= 25.0 && flat <= 5.0;
        details.push(format!("mu={mu}: drop {drop:.1}, band {flat:.2}"));
    }
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        5,
        ok && secs < 60.0,
        &format!("{} ({secs:.1}s)", details.join("; ")),
    );
}

// 6. Rectified series is exactly r_t^2 times the raw series, up to rounding.
#[test]
fn criterion_06_exact_proportionality() {
    let mut worst = 0.0f64;
    for (_, series) in desk_runs() {
        for (j, (&raw, &rectified)) in series.var_raw.iter().zip(&series.var_rectified).enumerate()
        {
            let r = rect_term(series.start_t + j, 0.999).unwrap();
            let expected = r * r * raw;
            worst = worst.max((rectified - expected).abs() / expected.abs());
        }
    }
    verdict(
        6,
        worst <= 1e-12,
        &format!("max relative gap {worst:.3e} across all six runs"),
    );
}

// 7. RAdam rides the momentum branch exactly until rho_t clears 4.
#[test]
fn criterion_07_branch_agreement_with_sgdm() {
    let clock = Instant::now();
    let dim = 8;
    let radam_cfg = OptimizerConfig {
        variant: Variant::Radam,
        ..OptimizerConfig::default()
    };
    let sgdm_cfg = OptimizerConfig {
        variant: Variant::Sgdm,
        ..OptimizerConfig::default()
    };

    let drive = |beta2: f64, steps: usize| -> Vec<bool> {
        let radam_cfg = OptimizerConfig {
            beta2,
            ..radam_cfg.clone()
        };
        let mut ra = OptimizerState::new(dim);
        let mut sg = OptimizerState::new(dim);
        let mut theta_ra = vec![0.0f64; dim];
        let mut theta_sg = vec![0.0f64; dim];
        let mut gs = GaussianStream::new(2024);
        let mut g = vec![0.0; dim];
        (1..=steps)
            .map(|t| {
                gs.fill(&mut g);
                let ctx = StepContext { t, alpha_t: 0.01 };
                for (p, d) in theta_ra
                    .iter_mut()
                    .zip(radam_step(&mut ra, &radam_cfg, &g, &ctx))
                {
                    *p += d;
                }
                for (p, d) in theta_sg
                    .iter_mut()
                    .zip(sgdm_step(&mut sg, &sgdm_cfg, &g, &ctx))
                {
                    *p += d;
                }
                theta_ra
                    .iter()
                    .zip(&theta_sg)
                    .all(|(a, b)| a.to_bits() == b.to_bits())
            })
            .collect()
    };

    let warm = drive(0.999, 5);
    let early_identical = warm[..4].iter().all(|&b| b);
    let diverges_at_five = !warm[4];
    let degenerate_identical = drive(0.6, 1000).iter().all(|&b| b);
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        7,
        early_identical && diverges_at_five && degenerate_identical && secs < 1.0,
        &format!(
            "beta2=0.999: steps 1-4 identical = {early_identical}, step 5 differs = \
             {diverges_at_five}; beta2=0.6: 1000 steps identical = {degenerate_identical} \
             ({secs:.2}s)"
        ),
    );
}

// 8. First Adam step has magnitude exactly alpha (eps = 0); a freeze
//    leaves theta and m untouched while v keeps learning.
#[test]
fn criterion_08_first_step_contract_and_freeze() {
    let clock = Instant::now();

    let cfg = OptimizerConfig {
        eps: 0.0,
        ..OptimizerConfig::default()
    };
    let mut gs = GaussianStream::new(5);
    let mut exact = 0usize;
    let mut tried = 0usize;
    while tried < 100 {
        let g = gs.sample();
        if g == 0.0 {
            continue;
        }
        tried += 1;
        let mut state = OptimizerState::new(1);
        let delta = adam_step(&mut state, &cfg, &[g], &StepContext { t: 1, alpha_t: 0.1 });
        if delta[0].abs().to_bits() == 0.1f64.to_bits() {
            exact += 1;
        }
    }

    let freeze_cfg = OptimizerConfig {
        freeze_steps: 2000,
        ..OptimizerConfig::default()
    };
    let dim = 3;
    let mut state = OptimizerState::new(dim);
    let mut gs = GaussianStream::new(77);
    let mut g = vec![0.0; dim];
    let mut frozen_ok = true;
    let mut prev_v = state.v.clone();
    for t in 1..=2000 {
        gs.fill(&mut g);
        let delta = adam_step(
            &mut state,
            &freeze_cfg,
            &g,
            &StepContext { t, alpha_t: 0.1 },
        );
        frozen_ok &= delta.iter().all(|&d| d.to_bits() == 0.0f64.to_bits());
        frozen_ok &= state.m.iter().all(|&m| m.to_bits() == 0.0f64.to_bits());
        frozen_ok &= state
            .v
            .iter()
            .zip(&prev_v)
            .any(|(a, b)| a.to_bits() != b.to_bits());
        prev_v.clone_from(&state.v);
    }
    gs.fill(&mut g);
    let live = adam_step(
        &mut state,
        &freeze_cfg,
        &g,
        &StepContext {
            t: 2001,
            alpha_t: 0.1,
        },
    );
    let wakes_up = live.iter().any(|&d| d != 0.0);

    let secs = clock.elapsed().as_secs_f64();
    verdict(
        8,
        exact == 100 && frozen_ok && wakes_up && secs < 1.0,
        &format!(
            "first-step magnitude exact for {exact}/100 gradients; freeze invariant = \
             {frozen_ok}, post-freeze step moves = {wakes_up} ({secs:.2}s)"
        ),
    );
}

// 9. Analytic gradients match central finite differences.
#[test]
fn criterion_09_finite_difference_gradient_checks() {
    let clock = Instant::now();
    let h = 1e-5;

    let logistic = make_problem(
        &ProblemSpec::LogisticRegression {
            dim: 10,
            samples: 200,
            batch_size: 32,
        },
        7,
    )
    .unwrap();
    let mut worst_abs = 0.0f64;
    for cfg_idx in 0..10u64 {
        let mut theta = vec![0.0; logistic.dim()];
        GaussianStream::new(substream_seed(2026, cfg_idx)).fill(&mut theta);
        let (_, grad) = logistic.loss_and_grad(&theta, cfg_idx);
        for j in 0..theta.len() {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (logistic.loss_and_grad(&plus, cfg_idx).0
                - logistic.loss_and_grad(&minus, cfg_idx).0)
                / (2.0 * h);
            worst_abs = worst_abs.max((fd - grad[j]).abs());
        }
    }

    let mlp = make_problem(
        &ProblemSpec::SmallMlp {
            hidden: 8,
            samples: 200,
            batch_size: 32,
        },
        7,
    )
    .unwrap();
    let mut worst_rel = 0.0f64;
    for cfg_idx in 0..10u64 {
        let mut theta = vec![0.0; mlp.dim()];
        GaussianStream::new(substream_seed(4052, cfg_idx)).fill(&mut theta);
        for x in &mut theta {
            *x *= 0.5;
        }
        let (_, grad) = mlp.loss_and_grad(&theta, cfg_idx);
        for j in 0..theta.len() {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (mlp.loss_and_grad(&plus, cfg_idx).0 - mlp.loss_and_grad(&minus, cfg_idx).0)
                / (2.0 * h);
            worst_rel = worst_rel.max((fd - grad[j]).abs() / grad[j].abs());
        }
    }

    let secs = clock.elapsed().as_secs_f64();
    verdict(
        9,
        worst_abs <= 1e-6 && worst_rel <= 1e-5 && secs < 10.0,
        &format!(
            "logistic max abs gap {worst_abs:.3e} (limit 1e-6), mlp max rel gap \
             {worst_rel:.3e} (limit 1e-5), 10 configs each ({secs:.2}s)"
        ),
    );
}

// 10. RAdam's tail loss varies less across learning rates than Adam's.
#[test]
fn criterion_10_lr_robustness_spread() {
    let clock = Instant::now();
    let spec = ProblemSpec::default();
    let optimizers = [
        OptimizerConfig {
            variant: Variant::Radam,
            ..OptimizerConfig::default()
        },
        OptimizerConfig::default(),
    ];
    let schedule = Schedule::Constant { alpha0: 0.01 };
    let rows = lr_sweep(
        &spec,
        &optimizers,
        &schedule,
        &[0.1, 0.03, 0.01, 0.003],
        8000,
        &[0, 1, 2, 3, 4],
    )
    .unwrap();
    let spread = |tag: &str| {
        let tails: Vec<f64> = rows
            .iter()
            .filter(|r| r.optimizer == tag)
            .map(|r| r.tail_mean_loss.expect("no divergent runs on this grid"))
            .collect();
        assert_eq!(tails.len(), 20);
        tails.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - tails.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    };
    let radam_spread = spread("radam");
    let adam_spread = spread("adam");
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        10,
        radam_spread < adam_spread && secs < 60.0,
        &format!("radam spread {radam_spread:.6} < adam spread {adam_spread:.6} ({secs:.1}s)"),
    );
}

// 11. Every command is byte-deterministic under reruns and worker counts.
#[test]
fn criterion_11_byte_identical_outputs() {
    let clock = Instant::now();
    let bin = env!("CARGO_BIN_EXE_radam-lab");
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).output().unwrap();
        assert!(
            out.status.success(),
            "{bin} {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let bytes = |name: &str| std::fs::read(dir.path().join(name)).unwrap();

    let mut ok = true;
    let mut notes = Vec::new();
    let mut check = |label: &str, same: bool| {
        ok &= same;
        notes.push(format!(
            "{label}: {}",
            if same { "identical" } else { "DIFFER" }
        ));
    };

    let vc = |out: &str| {
        let p = path(out);
        run(&[
            "variance-curve",
            "--beta2",
            "0.999",
            "--t-max",
            "400",
            "--out",
            &p,
        ]);
    };
    vc("vc1.csv");
    vc("vc2.csv");
    check("variance-curve rerun", bytes("vc1.csv") == bytes("vc2.csv"));

    let sim = |workers: &str, out: &str| {
        let p = path(out);
        run(&[
            "simulate",
            "--mu",
            "0.01",
            "--trajectories",
            "64",
            "--steps",
            "80",
            "--seed",
            "3",
            "--workers",
            workers,
            "--out",
            &p,
        ]);
    };
    sim("1", "sim1.csv");
    sim("4", "sim4.csv");
    sim("4", "sim4b.csv");
    check(
        "simulate workers 1 vs 4",
        bytes("sim1.csv") == bytes("sim4.csv"),
    );
    check("simulate rerun", bytes("sim4.csv") == bytes("sim4b.csv"));

    let ae = |out: &str| {
        let p = path(out);
        run(&[
            "approx-error",
            "--rho-min",
            "5",
            "--rho-max",
            "60",
            "--out",
            &p,
        ]);
    };
    ae("ae1.csv");
    ae("ae2.csv");
    check("approx-error rerun", bytes("ae1.csv") == bytes("ae2.csv"));

    let train = |out: &str| {
        let p = path(out);
        run(&[
            "train",
            "--problem",
            "quadratic",
            "--steps",
            "300",
            "--seed",
            "1",
            "--lr",
            "0.01",
            "--hist",
            "--out",
            &p,
        ]);
    };
    train("t1.json");
    train("t2.json");
    check("train rerun", bytes("t1.json") == bytes("t2.json"));

    let sweep_cfg = path("sweep.json");
    std::fs::write(
        &sweep_cfg,
        r#"{
  "problem": {"kind": "noisy_quadratic", "dim": 4},
  "learning_rates": [0.01, 0.003],
  "steps": 200,
  "seeds": [0, 1]
}"#,
    )
    .unwrap();
    let sweep = |workers: &str, out: &str| {
        let p = path(out);
        run(&[
            "sweep",
            "--config",
            &sweep_cfg,
            "--workers",
            workers,
            "--out",
            &p,
        ]);
    };
    sweep("1", "sw1.csv");
    sweep("4", "sw4.csv");
    sweep("4", "sw4b.csv");
    check("sweep workers 1 vs 4", bytes("sw1.csv") == bytes("sw4.csv"));
    check("sweep rerun", bytes("sw4.csv") == bytes("sw4b.csv"));

    let secs = clock.elapsed().as_secs_f64();
    verdict(
        11,
        ok && secs < 120.0,
        &format!("{} ({secs:.1}s)", notes.join("; ")),
    );
}
