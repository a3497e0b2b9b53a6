//! Diamond-norm distance between channels.

use qsignal::choi::ChannelDescriptor;
use qsignal::random::{random_unitary_channel, seeded};
use qsignal::sdp::diamond_norm_distance;
use qsignal::tensor::Wire;

fn main() -> qsignal::error::Result<()> {
    let (a, b) = (Wire::new("A", 2), Wire::new("B", 2));
    let id = ChannelDescriptor::identity(a.clone(), b.clone())?;
    let dep = ChannelDescriptor::depolarizing(a.clone(), b.clone())?;
    println!("‖id − dep‖⋄ = {:.8}", diamond_norm_distance(&id, &dep)?);
    let mut rng = seeded(2);
    let u = random_unitary_channel(a, b, &mut rng)?;
    println!("‖id − U‖⋄  = {:.8}", diamond_norm_distance(&id, &u)?);
    Ok(())
}
