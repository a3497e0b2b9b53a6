//! Channel composition in the Choi picture: `CJ(M ∘ N) = CJ(M) ⋆ CJ(N)` and `N(ρ) = N ⋆ ρ`.

use qsignal::choi::{link, ChannelDescriptor};
use qsignal::random::{random_channel, random_density, seeded};
use qsignal::tensor::Wire;

fn main() -> qsignal::error::Result<()> {
    let mut rng = seeded(1);
    let n = random_channel(Wire::new("A", 2), Wire::new("B", 3), &mut rng)?;
    let m = random_channel(Wire::new("B", 3), Wire::new("C", 2), &mut rng)?;
    let composed = n.then(&m)?;
    println!("composition wires: {:?}", composed.op().names());

    let rho = random_density(vec![Wire::new("A", 2)], &mut rng)?;
    let direct = m.apply(&n.apply(&rho)?)?;
    let linked = link(composed.op(), &rho)?;
    println!("|M(N(ρ)) − (M∘N) ⋆ ρ|_max = {:.2e}", direct.max_abs_diff(&linked)?);

    let id = ChannelDescriptor::identity(Wire::new("A", 2), Wire::new("B", 2))?;
    println!("identity Choi:\n{}", id.op().data().map(|z| z.re));
    Ok(())
}
