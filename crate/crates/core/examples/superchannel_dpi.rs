//! Data processing under bistochastic superchannels, and a memory superchannel that raises `S`.

use qsignal::choi::{apply_superchannel, ChannelDescriptor, SuperchannelDescriptor};
use qsignal::random::{random_bistochastic_superchannel, random_channel, seeded};
use qsignal::signalling::signalling_power;
use qsignal::tensor::{LabeledOperator, Wire};

fn main() -> qsignal::error::Result<()> {
    let q = |n: &str| Wire::new(n, 2);
    let mut rng = seeded(3);
    for _ in 0..5 {
        let t = random_bistochastic_superchannel(q("X"), q("A"), q("B"), q("Y"), 2, &mut rng)?;
        let n = random_channel(q("A"), q("B"), &mut rng)?;
        let before = signalling_power(&n)?.s_value;
        let after = signalling_power(&apply_superchannel(&t, &n)?)?.s_value;
        println!("S(N) = {before:.5}  S(T⋆N) = {after:.5}");
    }

    // route X straight to Y through the memory M; the slot gets a fixed state
    let zero = LabeledOperator::basis_projector(q("A"), 0)?;
    let pre = ChannelDescriptor::identity(q("X"), q("M"))?
        .tensor(&ChannelDescriptor::trace_and_prepare(vec![], &zero)?)?;
    let post = ChannelDescriptor::trace_and_prepare(vec![q("B")], &LabeledOperator::identity(vec![])?)?
        .tensor(&ChannelDescriptor::identity(q("M"), q("Y"))?)?;
    let t = SuperchannelDescriptor::from_decomposition(&pre, &post)?;
    let dep = ChannelDescriptor::depolarizing(q("A"), q("B"))?;
    println!(
        "memory superchannel: bistochastic = {}, S(dep) = {:.4}, S(T⋆dep) = {:.4}",
        t.is_bistochastic(1e-8)?.is_bistochastic,
        signalling_power(&dep)?.s_value,
        signalling_power(&apply_superchannel(&t, &dep)?)?.s_value
    );
    Ok(())
}
