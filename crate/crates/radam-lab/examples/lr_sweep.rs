//! Learning-rate robustness in one table: sweep both optimizers over a
//! 30x range of learning rates and compare how much the tail loss moves.

use radam_lab::bench::{lr_sweep, ProblemSpec, SweepRow};
use radam_lab::optim::{OptimizerConfig, Variant};
use radam_lab::schedule::Schedule;

fn main() -> radam_lab::Result<()> {
    let lrs = [0.1, 0.03, 0.01, 0.003];
    let seeds = [0, 1, 2, 3, 4];
    let rows = lr_sweep(
        &ProblemSpec::default(),
        &[
            OptimizerConfig {
                variant: Variant::Radam,
                ..OptimizerConfig::default()
            },
            OptimizerConfig::default(),
        ],
        &Schedule::Constant { alpha0: 0.01 },
        &lrs,
        8000,
        &seeds,
    )?;

    let mean_tail = |tag: &str, lr: f64| -> f64 {
        let cells: Vec<&SweepRow> = rows
            .iter()
            .filter(|r| r.optimizer == tag && r.lr == lr)
            .collect();
        cells.iter().map(|r| r.tail_mean_loss.unwrap()).sum::<f64>() / cells.len() as f64
    };

    println!(
        "noisy quadratic, 8000 steps, tail mean loss averaged over {} seeds\n",
        seeds.len()
    );
    println!("{:>8} {:>12} {:>12}", "lr", "radam", "adam");
    for &lr in &lrs {
        println!(
            "{lr:>8} {:>12.6} {:>12.6}",
            mean_tail("radam", lr),
            mean_tail("adam", lr)
        );
    }

    let spread = |tag: &str| {
        let tails: Vec<f64> = rows
            .iter()
            .filter(|r| r.optimizer == tag)
            .map(|r| r.tail_mean_loss.unwrap())
            .collect();
        tails.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - tails.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    };
    println!(
        "\nspread (max - min over all {} cells):",
        lrs.len() * seeds.len()
    );
    println!("  radam {:.6}", spread("radam"));
    println!("  adam  {:.6}", spread("adam"));
    Ok(())
}
