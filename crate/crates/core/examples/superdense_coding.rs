//! Optimal entanglement-assisted strategies extracted from the SDP solution.

use qsignal::random::{random_channel, seeded};
use qsignal::signalling::{extract_exclusion_strategy, extract_superdense_strategy, signalling_power};
use qsignal::tensor::Wire;

fn main() -> qsignal::error::Result<()> {
    let mut rng = seeded(8);
    let n = random_channel(Wire::new("A", 2), Wire::new("B", 2), &mut rng)?;
    let s = extract_superdense_strategy(&n)?;
    println!("2^S = {:.8}", signalling_power(&n)?.raw_primal);
    println!("Σ_x Pr(x|x) = {:.8}", s.coincidence_sum);
    for (x, row) in s.probabilities.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.4}")).collect();
        println!("  x = {x}: {}", cells.join(" "));
    }
    let e = extract_exclusion_strategy(&n)?;
    println!("exclusion game value = {:.8}", e.exclusion_value());
    Ok(())
}
