//! Targets supplied as plain-text node tables.
//!
//! A table stores values on the operator's own node lattice
//! x_{n,k} = k/(n-k+1); the parser round-trips the text format and the
//! resulting target snaps arbitrary points to the nearest node. Tables
//! built from a known function evaluate close to it, so they can stand
//! in as verification targets via `--f <file>`.

use korovkin::{bbh_eval, node, p_transform, NodeTable, Target};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Tabulate g(x, y) = p(x) * p(y) on the n = 24 lattice.
    let n = 24;
    let mut values = Vec::new();
    for kx in 0..=n {
        for ky in 0..=n {
            let g = p_transform(node(n, kx)?) * p_transform(node(n, ky)?);
            values.push(g);
        }
    }
    let table = NodeTable::new(2, n, values)?;

    let text = table.to_text();
    println!("table header + first rows:");
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    let reparsed = NodeTable::parse(&text)?;
    println!(
        "round-trip preserves all {} values: {}",
        (n + 1) * (n + 1),
        reparsed.to_text() == text
    );

    let target = reparsed.into_target();
    let exact = Target::separable_product(vec![korovkin::axis_ratio(); 2]);
    let mut worst = 0.0f64;
    for &x in &[0.1, 1.0, 7.5] {
        for &y in &[0.4, 3.0, 20.0] {
            let gap = (target.eval(&[x, y]) - exact.eval(&[x, y])).abs();
            worst = worst.max(gap);
        }
    }
    println!("largest |table - exact| over sample points: {worst:.4} (nearest-node snap)");

    // The table works as an operator argument like any other target.
    let applied = bbh_eval(40, &target, &[1.0, 1.0])?;
    let reference = bbh_eval(40, &exact, &[1.0, 1.0])?;
    println!("H_40 at (1,1): table target {applied:.6} vs exact target {reference:.6}");
    Ok(())
}
