//! Comb hierarchy checks on a channel and on a two-slot memory comb.

use qsignal::choi::{validate_comb, ChannelDescriptor, CombPair};
use qsignal::tensor::Wire;

fn main() -> qsignal::error::Result<()> {
    let q = |n: &str| Wire::new(n, 2);
    let n = ChannelDescriptor::depolarizing(q("A"), q("B"))?;
    let pairs = [CombPair::new(None, Some("A")), CombPair::new(Some("B"), None)];
    let r = validate_comb(n.op(), &pairs, 1e-9)?;
    println!("channel as comb: valid = {}, residuals = {:?}", r.valid, r.level_residuals);

    let bad = n.op().scale(1.5);
    let r = validate_comb(&bad, &pairs, 1e-9)?;
    println!("scaled operator: valid = {}, first violated level = {:?}", r.valid, r.first_violated_level);
    Ok(())
}
