//! The full verification pipeline on a small configuration.
//!
//! Runs the perturbed family against the two-variable suite under the
//! Cesàro matrix, then prints the chain of facts the verdicts certify:
//! bound dominance degree by degree, index-set containment, the tail
//! inequality at every scheduled row, and the decay of the target set's
//! density.

use korovkin::operators::OperatorFamily;
use korovkin::{
    verify_theorem, EvaluationGrid, SequenceSpec, SummabilityMatrix, TestSuite, VerifySettings,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = 2;
    let matrix = SummabilityMatrix::cesaro_c1();
    let family = OperatorFamily::perturbed(m, SequenceSpec::square_perturbation(2.0)?);
    let suite = TestSuite::new(m);
    let grid = EvaluationGrid::uniform(m, 0.99, 64)?;
    let target = suite.functions()[1].clone();
    let settings = VerifySettings {
        n_max: 120,
        j_schedule: vec![100, 400, 2500, 10_000],
        r: 0.5,
        epsilon: 0.1,
        seed: 42,
        pair_samples: 20_000,
        trend_tol: 1e-2,
    };

    let report = verify_theorem(&matrix, &family, &target, &suite, &grid, &settings)?;

    println!("operator: {}", report.operator);
    println!("matrix:   {}", report.matrix);
    println!(
        "M = {:.4}, delta = {:.6}, B = {:.4}, threshold = {:.6}",
        report.sup_norm_target, report.delta, report.bound_inputs.b, report.sets.threshold
    );
    println!(
        "target set: {} degrees {:?}",
        report.sets.target_set.len(),
        report.sets.target_set
    );
    println!("tails along the schedule:");
    for tail in &report.tails {
        let sum: f64 = tail.test_tails.iter().sum();
        println!(
            "  row {:>6}: target {:.6} <= sum of test tails {:.6}",
            tail.j, tail.target_tail, sum
        );
    }
    println!("\nverdicts:");
    println!("  bound dominance:   {}", report.verdicts.bound_dominance);
    println!("  set containment:   {}", report.verdicts.set_containment);
    println!("  tail inequality:   {}", report.verdicts.tail_inequality);
    println!("  target tail trend: {}", report.verdicts.target_tail_trend);
    println!("  all pass:          {}", report.verdicts.all_pass());
    for note in &report.notes {
        println!("note: {note}");
    }
    Ok(())
}
