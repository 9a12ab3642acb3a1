//! Statistical convergence where classical convergence fails, written
//! out as a report.
//!
//! The perturbed family with a square-spiked sequence keeps a fixed
//! error at every spiked degree, so it never converges uniformly in the
//! classical sense. Yet all four exceedance sets have decaying C1
//! density, which is the whole point of measuring convergence through a
//! summability matrix.

use korovkin::cmd_demo_counterexample;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("korovkin-counterexample");
    let outcome = cmd_demo_counterexample(2.0, 200, &[100, 400, 2500, 10_000], &out)?;
    println!("{}", outcome.headline);
    println!("report files:");
    println!("  {}", outcome.files.errors_csv.display());
    println!("  {}", outcome.files.densities_csv.display());
    println!("  {}", outcome.files.summary_json.display());

    let densities = std::fs::read_to_string(&outcome.files.densities_csv)?;
    println!("\ndensity tails (row mass of the exceedance sets):");
    print!("{densities}");
    println!("\nevery column shrinks while the spikes themselves never stop:");
    let errors = std::fs::read_to_string(&outcome.files.errors_csv)?;
    for line in errors.lines().filter(|l| {
        l.split(',')
            .next()
            .and_then(|n| n.parse::<usize>().ok())
            .is_some_and(korovkin::is_perfect_square)
    }) {
        let mut parts = line.split(',');
        let n = parts.next().unwrap();
        let err0 = parts.next().unwrap();
        let err0: f64 = err0.parse()?;
        if err0 > 0.5 {
            println!("  n = {n:>4}: err_f0 = {err0}");
        }
    }
    Ok(())
}
