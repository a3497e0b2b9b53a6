//! Exclusion power, its relation to `S`, and superadditivity of `P` for the channel Ñ.

use qsignal::random::{random_channel, seeded};
use qsignal::signalling::{eb_exclusion_channel, exclusion_power, p_from_s_relation, superadditive_channel};
use qsignal::tensor::Wire;

fn main() -> qsignal::error::Result<()> {
    let eb = eb_exclusion_channel("A", "B")?;
    println!("P(N_EB) = {:.6}", exclusion_power(&eb)?.p_value);

    let mut rng = seeded(5);
    let n = random_channel(Wire::new("A", 2), Wire::new("B", 2), &mut rng)?;
    let (lhs, rhs) = p_from_s_relation(&n)?;
    println!("random channel: P = {lhs:.8}, (d²−1)(2^S(N̂) − 1) = {rhs:.8}");

    let n1 = superadditive_channel("A1", "B1")?;
    let n2 = superadditive_channel("A2", "B2")?;
    println!("P(Ñ)     = {:.6}", exclusion_power(&n1)?.p_value);
    println!("P(Ñ ⊗ Ñ) = {:.6}", exclusion_power(&n1.tensor(&n2)?)?.p_value);
    Ok(())
}
