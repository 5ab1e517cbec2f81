//! How good is the first-order variance formula? Tabulates its relative
//! error against the exact moment computation across the rho grid and
//! finds where it crosses 10% and 5%.

use radam_lab::sim::approx_error_curve;

fn main() -> radam_lab::Result<()> {
    let rows = approx_error_curve(5.0, 500.0, 1.0)?;
    let rel = |i: usize| rows[i].abs_diff / rows[i].var_exact;

    println!(
        "{:>8} {:>14} {:>14} {:>10}",
        "rho", "var_exact", "var_approx", "rel err"
    );
    for (i, row) in rows.iter().enumerate() {
        if [5.0, 10.0, 20.0, 27.0, 50.0, 100.0, 200.0, 500.0].contains(&row.rho) {
            println!(
                "{:>8} {:>14.6e} {:>14.6e} {:>9.2}%",
                row.rho,
                row.var_exact,
                row.var_approx,
                100.0 * rel(i)
            );
        }
    }

    let first_under = |limit: f64| {
        rows.iter()
            .enumerate()
            .find(|(i, _)| rel(*i) < limit)
            .map(|(_, r)| r.rho)
            .unwrap()
    };
    println!("\nfirst grid point under 10%: rho = {}", first_under(0.10));
    println!("first grid point under  5%: rho = {}", first_under(0.05));
    println!("the formula is an asymptotic tool; trust it late, not at t = 5.");
    Ok(())
}
