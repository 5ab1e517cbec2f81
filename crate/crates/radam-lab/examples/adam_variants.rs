//! The three update rules side by side on one gradient stream, plus the
//! two mechanisms that guard Adam's early steps: RAdam's branch switch
//! and the Adam-2k freeze.

use radam_lab::optim::{
    adam_step, radam_step, sgdm_step, OptimizerConfig, OptimizerState, Variant,
};
use radam_lab::rng::GaussianStream;
use radam_lab::run::StepContext;

fn main() {
    let sgdm_cfg = OptimizerConfig {
        variant: Variant::Sgdm,
        ..OptimizerConfig::default()
    };
    let adam_cfg = OptimizerConfig::default();
    let radam_cfg = OptimizerConfig {
        variant: Variant::Radam,
        ..OptimizerConfig::default()
    };

    let mut sg = OptimizerState::new(1);
    let mut ad = OptimizerState::new(1);
    let mut ra = OptimizerState::new(1);
    let mut gs = GaussianStream::new(17);

    println!("scalar problem, alpha = 0.1, beta2 = 0.999\n");
    println!(
        "{:>3} {:>10} {:>12} {:>12} {:>12} {:>8}",
        "t", "grad", "sgdm", "adam", "radam", "agrees"
    );
    for t in 1..=7 {
        let g = [gs.sample()];
        let ctx = StepContext { t, alpha_t: 0.1 };
        let ds = sgdm_step(&mut sg, &sgdm_cfg, &g, &ctx)[0];
        let da = adam_step(&mut ad, &adam_cfg, &g, &ctx)[0];
        let dr = radam_step(&mut ra, &radam_cfg, &g, &ctx)[0];
        // Through t = 4 rho_t <= 4: radam falls back to the momentum rule.
        let twin = if dr.to_bits() == ds.to_bits() {
            "sgdm"
        } else {
            "-"
        };
        println!(
            "{t:>3} {:>10.4} {ds:>12.6} {da:>12.6} {dr:>12.6} {twin:>8}",
            g[0]
        );
    }

    println!("\nadam-2k: freeze theta and m for 2000 steps while v seasons");
    let freeze_cfg = OptimizerConfig {
        freeze_steps: 2000,
        ..OptimizerConfig::default()
    };
    let mut st = OptimizerState::new(1);
    let mut gs = GaussianStream::new(17);
    for t in 1..=2001 {
        let g = [gs.sample()];
        let d = adam_step(&mut st, &freeze_cfg, &g, &StepContext { t, alpha_t: 0.1 })[0];
        if [1, 1000, 2000, 2001].contains(&t) {
            println!(
                "  t = {t:>4}: delta = {d:>12.6}, m = {:>9.6}, v = {:>9.6}",
                st.m[0], st.v[0]
            );
        }
    }
    println!("the first live step starts from a converged v instead of a one-sample guess.");
}
