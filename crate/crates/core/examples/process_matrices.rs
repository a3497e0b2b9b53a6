//! Common-cause / direct-cause mixtures and the causal-loop inequality.

use qsignal::process::{cause_mixture, process_signalling_curve, random_process_matrix, MixtureKind};
use qsignal::random::seeded;
use qsignal::signalling::causal_loop_inequality;

fn main() -> qsignal::error::Result<()> {
    let alphas: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let coh = process_signalling_curve(MixtureKind::Coherent, &alphas)?;
    let inc = process_signalling_curve(MixtureKind::Incoherent, &alphas)?;
    println!("alpha  S_coherent  S_incoherent");
    for ((a, s1), (_, s2)) in coh.iter().zip(&inc) {
        println!("{a:.1}    {s1:.6}    {s2:.6}");
    }

    let dc = causal_loop_inequality(&cause_mixture(0.0, MixtureKind::Incoherent)?)?;
    println!("direct cause: P(A→B) = {:.6}, P(B→A) = {:.6}", dc.term_ab, dc.term_ba);
    let mut rng = seeded(4);
    for _ in 0..3 {
        let r = causal_loop_inequality(&random_process_matrix([2, 2, 2, 2], 0.999, &mut rng)?)?;
        println!("random process: {:.6} + {:.6} = {:.6}", r.term_ab, r.term_ba, r.sum);
    }
    Ok(())
}
