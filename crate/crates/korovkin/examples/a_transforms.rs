//! A-transforms of catalog sequences under the Cesàro matrix, and the
//! density-trace estimate of a statistical limit.
//!
//! The alternating sequence has no classical limit, yet its C1 transform
//! sits near 0; the square-spiked sequence keeps hitting 2 forever, yet
//! its transform tends to 1 because the spikes carry vanishing row mass.

use korovkin::{SequenceSpec, SummabilityMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c1 = SummabilityMatrix::cesaro_c1();
    let rows = [10usize, 100, 1000, 10_000];

    let sequences = [
        SequenceSpec::alternating(),
        SequenceSpec::one_plus_one_over_n(),
        SequenceSpec::square_perturbation(2.0)?,
    ];
    for seq in &sequences {
        println!("C1 transform of '{}':", seq.name());
        for &j in &rows {
            println!("  row {:>6}: {:+.8}", j, c1.a_transform(seq, j, j)?);
        }
        println!();
    }

    // The transform of the spiked sequence settles at 1. The density
    // traces say the same thing pointwise: for every radius, the row mass
    // of the indices staying away from 1 dies out.
    let spiked = SequenceSpec::square_perturbation(2.0)?;
    let traces = c1.estimate_st_a_limit(&spiked, 1.0, &[0.5, 0.25, 0.05], &rows, 10_000, 1e-2)?;
    println!("density traces of '{}' around limit 1:", spiked.name());
    for trace in traces {
        let (last_j, last_tail) = *trace.tails.last().unwrap();
        println!(
            "  radius {:>4}: tail at row {} is {:.4} -> {}",
            trace.epsilon, last_j, last_tail, trace.trend
        );
    }
    Ok(())
}
