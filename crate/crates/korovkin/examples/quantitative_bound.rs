//! The quantitative error bound and the index-set decomposition, on a
//! hand-sized run.
//!
//! The bound says: once a radius delta keeps the target's modulus below
//! epsilon, the target error at every degree is at most
//! epsilon + B * (sum of test-function errors), B = epsilon + M + 4M/delta^2.
//! The decomposition turns that into set containment: degrees where the
//! target error reaches r all sit inside the union of the per-test
//! exceedance sets at threshold (r - epsilon) / ((m+2) B).

use korovkin::engine::{sup_norm, sup_norm_error};
use korovkin::operators::OperatorFamily;
use korovkin::{
    index_sets, korovkin_bound, union_contains, EvaluationGrid, KorovkinBoundInputs, SequenceSpec,
    TestSuite,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = 2;
    let suite = TestSuite::new(m);
    let grid = EvaluationGrid::uniform(m, 0.99, 64)?;
    let family = OperatorFamily::perturbed(m, SequenceSpec::square_perturbation(2.0)?);
    let target = suite.functions()[1].clone();

    // Hand-checkable ingredients: M = 0.99 on this grid, delta = 0.5.
    let inputs = KorovkinBoundInputs::new(0.1, sup_norm(&target, &grid)?, 0.5)?;
    println!(
        "epsilon = {}, M = {}, delta = {} => B = {:.4}",
        inputs.epsilon, inputs.sup_norm, inputs.delta, inputs.b
    );

    let mut rows = Vec::new();
    for n in 1..=60 {
        let test_errors: Vec<f64> = suite
            .functions()
            .iter()
            .map(|f| sup_norm_error(&family, n, f, &grid))
            .collect::<Result<_, _>>()?;
        let target_error = sup_norm_error(&family, n, &target, &grid)?;
        let bound = korovkin_bound(&inputs, &test_errors)?;
        rows.push(korovkin::engine::ErrorRow {
            n,
            test_errors,
            target_error,
            bound,
        });
    }
    for row in rows.iter().filter(|r| r.n <= 5 || r.n % 20 == 0) {
        println!(
            "  n = {:>2}: target error {:.4} <= bound {:.4}  (spiked: {})",
            row.n,
            row.target_error,
            row.bound,
            if korovkin::is_perfect_square(row.n) { "yes" } else { "no" }
        );
    }
    let dominated = rows.iter().all(|r| r.target_error <= r.bound + 1e-9);
    println!("bound dominates the target error at every degree: {dominated}");

    let sets = index_sets(&rows, 0.5, 0.1, inputs.b)?;
    println!(
        "\nthreshold (r - epsilon)/((m+2)B) = {:.6}",
        sets.threshold
    );
    println!("target set {{n : err >= r}}: {:?}", sets.target_set);
    for (i, set) in sets.test_sets.iter().enumerate() {
        println!("  test set for f{}: {} degrees", i, set.len());
    }
    println!(
        "target set contained in the union of test sets: {}",
        union_contains(&sets.target_set, &sets.test_sets)
    );
    Ok(())
}
