//! The approximation underneath everything: an EMA of squared gradients
//! behaves like a simple moving average of the last rho_t of them. Two
//! checks, one analytic and one by simulation.

use radam_lab::sim::sma_ema_moment_check;
use radam_lab::variance::{ema_center_of_mass, rho_t};

fn main() -> radam_lab::Result<()> {
    println!("center-of-mass identity: com(t) = t + 1 - (rho_t + 1)/2\n");
    println!(
        "{:>6} {:>8} {:>14} {:>14} {:>10}",
        "t", "beta2", "com", "matched sma", "gap"
    );
    for (t, beta2) in [
        (1usize, 0.999),
        (10, 0.999),
        (100, 0.99),
        (1000, 0.999),
        (10000, 0.9995),
    ] {
        let com = ema_center_of_mass(t, beta2)?;
        let matched = t as f64 + 1.0 - (rho_t(t, beta2)? + 1.0) / 2.0;
        println!(
            "{t:>6} {beta2:>8} {com:>14.6} {matched:>14.6} {:>10.2e}",
            (com - matched).abs()
        );
    }

    println!("\nmoment check at t = 200, beta2 = 0.99 (1e6 sampled histories):");
    let check = sma_ema_moment_check(200, 0.99, 1_000_000, 11)?;
    println!(
        "  ema second moment: mean {:.5}, var {:.5}",
        check.ema_mean, check.ema_var
    );
    println!(
        "  sma second moment: mean {:.5}, var {:.5}",
        check.sma_mean, check.sma_var
    );
    println!(
        "  variance ratio ema/sma = {:.3} (the sma window length rho_t = {:.1})",
        check.ema_var / check.sma_var,
        rho_t(200, 0.99)?
    );
    println!("\nboth estimate E[g^2] = 1; matching variances justify the sma model.");
    Ok(())
}
