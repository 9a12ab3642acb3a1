//! Moduli of continuity on the two metrics, and the budget inversion.
//!
//! The coordinate ratio p = x/(1+x) has transformed-metric modulus
//! exactly delta, but its original-metric modulus saturates towards 1 as
//! the allowance grows: on the unbounded domain only the transformed
//! metric gives the uniform control the quantitative bound needs. The
//! membership probe makes the same point pairwise.

use korovkin::engine::DEFAULT_GRID_POINTS;
use korovkin::{
    delta_for_epsilon, estimate_modulus, hw_membership_probe, EvaluationGrid, Metric, TestSuite,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suite = TestSuite::new(2);
    let f1 = &suite.functions()[1];
    let grid = EvaluationGrid::uniform(2, 0.99, DEFAULT_GRID_POINTS)?;
    let seed = 42;

    println!("modulus of f1 (first coordinate ratio):");
    for delta in [0.4, 0.2, 0.1, 0.05] {
        let transformed = estimate_modulus(
            f1,
            Metric::Transformed,
            &[delta, delta],
            &grid,
            20_000,
            seed,
        )?;
        let original =
            estimate_modulus(f1, Metric::Original, &[delta, delta], &grid, 20_000, seed)?;
        println!(
            "  delta = {:<5} transformed: {:.6} (= delta)   original: {:.6} (= delta/(1+delta) on the grid)",
            delta, transformed.value, original.value
        );
    }

    let epsilon = 0.1;
    let deltas = delta_for_epsilon(f1, epsilon, &grid, 20_000, seed)?;
    println!(
        "\nlargest per-axis radius with transformed modulus below {epsilon}: {:.6}",
        deltas[0]
    );

    let clean = hw_membership_probe(f1, Metric::Transformed, &grid, 3_000, seed, 1e-9)?;
    let dirty = hw_membership_probe(f1, Metric::Original, &grid, 3_000, seed, 1e-9)?;
    println!("\nmembership probe over 3000 random pairs:");
    println!("  transformed metric: {} violations", clean.len());
    println!("  original metric:    {} violations", dirty.len());
    if let Some(worst) = dirty
        .iter()
        .max_by(|a, b| {
            (a.increment - a.modulus_value)
                .partial_cmp(&(b.increment - b.modulus_value))
                .unwrap()
        })
    {
        println!(
            "  worst original-metric pair: increment {:.4} vs modulus {:.4} at u = ({:.2}, {:.2}), x = ({:.2}, {:.2})",
            worst.increment, worst.modulus_value, worst.u[0], worst.u[1], worst.x[0], worst.x[1]
        );
    }
    Ok(())
}
