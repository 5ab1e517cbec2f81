//! Watch the gradient magnitude distribution move during the first steps
//! of a run: histograms of log10|g| rendered as ASCII bars. The early
//! distortion is the raw material of the variance problem.

use radam_lab::bench::{make_problem, ProblemSpec};
use radam_lab::optim::{Optimizer, OptimizerConfig, Variant};
use radam_lab::run::{run_loop, InstrumentationFlags};
use radam_lab::schedule::Schedule;

fn main() {
    let spec = ProblemSpec::SmallMlp {
        hidden: 8,
        samples: 200,
        batch_size: 32,
    };
    let problem = make_problem(&spec, 4).unwrap();
    let cfg = OptimizerConfig {
        variant: Variant::Adam,
        ..OptimizerConfig::default()
    };
    let mut optimizer = Optimizer::new(cfg, problem.dim()).unwrap();
    let record = run_loop(
        &problem,
        &mut optimizer,
        &Schedule::Constant { alpha0: 0.01 },
        300,
        4,
        InstrumentationFlags {
            grad_histograms: true,
        },
    );

    let histograms = record.histograms.as_ref().unwrap();
    for h in histograms
        .iter()
        .filter(|h| [1, 5, 50, 300].contains(&h.step))
    {
        println!(
            "step {} (underflow {}, overflow {})",
            h.step, h.underflow, h.overflow
        );
        let peak = h.counts.iter().copied().max().unwrap().max(1);
        for (i, &c) in h.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let bar = "#".repeat((c * 30 / peak).max(1) as usize);
            println!(
                "  [{:>5.2}, {:>5.2}) {bar} {c}",
                h.bin_edges[i],
                h.bin_edges[i + 1]
            );
        }
        println!();
    }
    println!("bins are log10|g| over [-8, 2); tanh keeps everything smooth.");
}
