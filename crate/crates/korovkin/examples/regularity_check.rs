//! Regularity diagnostics for the three built-in matrices.
//!
//! C1 passes everything. The identity matrix is regular in the classical
//! sense (row sums 1, columns vanish) but fails the max-entry condition,
//! which is exactly why identity-matrix "density" cannot forgive any
//! exceptional index. The doubled-C1 specimen fails the row-sum check.

use korovkin::report::cmd_regularity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let schedule = [10usize, 100, 1000, 10_000];
    for matrix in ["c1", "identity", "doubled-c1"] {
        let run = cmd_regularity(matrix, &schedule, None)?;
        println!("{}", run.table);
        println!(
            "=> {} is {}\n",
            matrix,
            if run.report.all_ok() {
                "a usable density matrix"
            } else {
                "NOT a usable density matrix"
            }
        );
    }
    Ok(())
}
