//! Signalling power of a few standard qubit channels.

use nalgebra::DMatrix;
use num_complex::Complex64;
use qsignal::choi::ChannelDescriptor;
use qsignal::signalling::{eb_exclusion_channel, signalling_power};
use qsignal::tensor::Wire;

fn main() -> qsignal::error::Result<()> {
    let (a, b) = (Wire::new("A", 2), Wire::new("B", 2));
    let c = |x: f64| Complex64::new(x, 0.0);
    let lambda: f64 = 0.75;
    let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - lambda).sqrt())]);
    let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(lambda.sqrt()), c(0.0), c(0.0)]);
    let channels = [
        ("identity", ChannelDescriptor::identity(a.clone(), b.clone())?),
        ("depolarizing", ChannelDescriptor::depolarizing(a.clone(), b.clone())?),
        ("amplitude damping 0.75", ChannelDescriptor::from_kraus(&[k0, k1], a.clone(), b.clone())?),
        ("N_EB", eb_exclusion_channel("A", "B")?),
    ];
    for (name, n) in &channels {
        let r = signalling_power(n)?;
        println!(
            "{name:>24}: S = {:.6} bits (2^S = {:.6}, gap {:.1e}, beats EB bound: {})",
            r.s_value, r.raw_primal, r.gap, r.witness_eb
        );
    }
    Ok(())
}
