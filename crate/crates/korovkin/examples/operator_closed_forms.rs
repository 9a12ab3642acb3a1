//! Direct operator evaluation against the closed forms.
//!
//! On the test suite the two-variable operators have exact closed forms:
//! the tensor sums must reproduce them to rounding error. This is the
//! check that pins the evaluator: any indexing or weight bug shows up as
//! a visible gap here.

use korovkin::functions::Target;
use korovkin::{
    closed_form_f0, closed_form_f1, closed_form_f2, closed_form_f3, tn_eval, SequenceSpec,
    TestSuite,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suite = TestSuite::new(2);
    let u = SequenceSpec::square_perturbation(2.0)?;
    let points: [[f64; 2]; 3] = [[0.5, 2.0], [10.0, 0.1], [99.0, 99.0]];

    for n in [1usize, 4, 50, 500] {
        let u_n = u.value(n);
        println!("n = {n} (u_n = {u_n}):");
        for (point, label) in points.iter().zip(["(0.5, 2.0)", "(10, 0.1)", "(99, 99)"]) {
            let closed = [
                closed_form_f0(n, u_n),
                closed_form_f1(n, u_n, point[0]),
                closed_form_f2(n, u_n, point[1]),
                closed_form_f3(n, u_n, point[0], point[1]),
            ];
            let direct: Vec<f64> = suite
                .functions()
                .iter()
                .map(|f: &Target| tn_eval(n, &u, f, point))
                .collect::<Result<_, _>>()?;
            let worst = direct
                .iter()
                .zip(closed.iter())
                .map(|(d, c)| (d - c).abs())
                .fold(0.0f64, f64::max);
            println!("  at {label:>10}: largest |direct - closed| = {worst:.3e}");
        }
    }
    println!("\n(all gaps are pure floating-point noise)");
    Ok(())
}
