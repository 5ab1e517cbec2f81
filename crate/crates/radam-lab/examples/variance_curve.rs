//! Where the adaptive rate's variance comes from and where it goes:
//! tabulates rho_t, the rectification gain, and both variance formulas
//! over the first steps of a beta2 = 0.999 run.

use radam_lab::variance::{rect_term, rho_inf, rho_t, var_approx, var_exact};

fn main() -> radam_lab::Result<()> {
    let beta2 = 0.999;
    let inf = rho_inf(beta2)?;
    println!("beta2 = {beta2}, rho_inf = {inf:.4}\n");
    println!(
        "{:>6} {:>12} {:>12} {:>14} {:>14}",
        "t", "rho_t", "rect", "var_exact", "var_approx"
    );

    for t in [1usize, 2, 3, 4, 5, 6, 8, 10, 20, 50, 100, 500, 1000, 5000] {
        let rho = rho_t(t, beta2)?;
        if rho <= 4.0 {
            // No rectification and no finite variance this early.
            println!("{t:>6} {rho:>12.6} {:>12} {:>14} {:>14}", "-", "-", "-");
        } else {
            println!(
                "{t:>6} {rho:>12.6} {:>12.6} {:>14.6e} {:>14.6e}",
                rect_term(t, beta2)?,
                var_exact(rho, 1.0)?,
                var_approx(rho, 1.0)?,
            );
        }
    }

    let early = var_exact(rho_t(5, beta2)?, 1.0)?;
    let late = var_exact(inf, 1.0)?;
    println!(
        "\nvariance at t = 5 over variance at t -> inf: {:.1}x",
        early / late
    );
    println!("warmup exists to ride out exactly this early spike.");
    Ok(())
}
