//! Binomial weights at benign and extreme parameters.
//!
//! The weights are built by a ratio recurrence anchored at the mode, so
//! no intermediate value overflows or underflows even at n = 10000 with
//! p = 0.999, where the naive factorial formula is hopeless. Compensated
//! summation keeps the normalization at machine accuracy.

use korovkin::{binomial_weights, compensated_sum};

fn report(n: usize, p: f64) -> Result<(), Box<dyn std::error::Error>> {
    let w = binomial_weights(n, p)?;
    let sum = compensated_sum(w.values().iter().copied());
    let (argmax, max) = w
        .values()
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    println!(
        "n = {:>6}, p = {:<6}  sum-1 = {:+.3e}   max weight {:.3e} at k = {} (mode ~ {:.0})",
        n,
        p,
        sum - 1.0,
        max,
        argmax,
        (n as f64 + 1.0) * p
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    report(10, 0.5)?;
    report(100, 0.01)?;
    report(1000, 0.99)?;
    report(10_000, 0.999)?;
    report(10_000, 1e-9)?;
    Ok(())
}
