//! One full training run on the noisy quadratic, the smallest problem
//! where early-step adaptive-rate variance actually hurts. Prints loss
//! milestones for RAdam and Adam from the same start and gradient noise.

use radam_lab::bench::{make_problem, ProblemSpec};
use radam_lab::optim::{Optimizer, OptimizerConfig, Variant};
use radam_lab::run::{run_loop, InstrumentationFlags, RunRecord};
use radam_lab::schedule::Schedule;

fn train(variant: Variant) -> RunRecord {
    let spec = ProblemSpec::default();
    let problem = make_problem(&spec, 0).unwrap();
    let cfg = OptimizerConfig {
        variant,
        ..OptimizerConfig::default()
    };
    let mut optimizer = Optimizer::new(cfg, problem.dim()).unwrap();
    let schedule = Schedule::Constant { alpha0: 0.01 };
    run_loop(
        &problem,
        &mut optimizer,
        &schedule,
        4000,
        0,
        InstrumentationFlags::default(),
    )
}

fn main() {
    let radam = train(Variant::Radam);
    let adam = train(Variant::Adam);

    println!("noisy quadratic, dim 10, condition number 100, lr 0.01, seed 0\n");
    println!("{:>6} {:>14} {:>14}", "t", "radam loss", "adam loss");
    for t in [1usize, 10, 50, 100, 500, 1000, 2000, 4000] {
        println!(
            "{t:>6} {:>14.6} {:>14.6}",
            radam.losses[t - 1],
            adam.losses[t - 1]
        );
    }

    let tail = |r: &RunRecord| {
        let n = r.losses.len() / 10;
        r.losses[r.losses.len() - n..].iter().sum::<f64>() / n as f64
    };
    println!(
        "\ntail mean loss: radam {:.6}, adam {:.6}",
        tail(&radam),
        tail(&adam)
    );
    println!(
        "step sizes logged per step: first {:.2e}, last {:.2e}",
        radam.step_sizes[0],
        radam.step_sizes[radam.step_sizes.len() - 1]
    );
}
