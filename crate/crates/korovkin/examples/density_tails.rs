//! Density tails of an exceedance set under two matrices.
//!
//! The set {n : |u_n - 1| >= 1/2} of a square-spiked sequence is
//! infinite, but its C1 row mass is about sqrt(j)/j and decays; under the
//! identity matrix the same set keeps full mass at every square row. The
//! trend classifier turns those observations into verdicts.

use korovkin::{classify_trend, is_perfect_square, SequenceSpec, SummabilityMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let u = SequenceSpec::square_perturbation(2.0)?;
    let schedule = [100usize, 400, 2500, 10_000];
    let tol = 1e-2;

    let c1 = SummabilityMatrix::cesaro_c1();
    let mut c1_tails = Vec::new();
    println!("C1 tails of {{n : |u_n - 1| >= 0.5}}:");
    for &j in &schedule {
        let tail = c1.density_tail(&u, 1.0, 0.5, j, j)?;
        println!("  row {:>6}: {:.6}  ({} squares up to {})", j, tail,
            (1..=j).filter(|&n| is_perfect_square(n)).count(), j);
        c1_tails.push(tail);
    }
    println!("  trend: {}\n", classify_trend(&c1_tails, tol));

    // Identity rows at perfect squares see the spike with full mass.
    let identity = SummabilityMatrix::identity();
    let square_rows = [100usize, 400, 2500, 10_000];
    let mut id_tails = Vec::new();
    println!("identity tails at square rows:");
    for &j in &square_rows {
        let tail = identity.density_tail(&u, 1.0, 0.5, j, j)?;
        println!("  row {:>6}: {:.6}", j, tail);
        id_tails.push(tail);
    }
    println!("  trend: {}", classify_trend(&id_tails, tol));
    Ok(())
}
