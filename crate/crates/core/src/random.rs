//! Seeded samplers for states, unitaries and channels.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::choi::{ChannelDescriptor, SuperchannelDescriptor, CHANNEL_TOL};
use crate::error::{Error, Result};
use crate::linalg::herm_apply;
use crate::tensor::{LabeledOperator, Wire};

/// Deterministic generator used by every randomized routine in the crate.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phase of `R`'s diagonal removed).
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Haar-random unit vector of length `d`.
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Complex64> {
    let g = ginibre(d, 1, rng);
    let n = g.norm();
    g.iter().map(|z| z / n).collect()
}

pub fn random_pure_state<R: Rng + ?Sized>(wires: Vec<Wire>, rng: &mut R) -> Result<LabeledOperator> {
    let d = wires.iter().map(|w| w.dim).product();
    LabeledOperator::projector(wires, &haar_vector(d, rng))
}

/// Full-rank random density operator `G G† / Tr(G G†)` (Hilbert–Schmidt ensemble).
pub fn random_density<R: Rng + ?Sized>(wires: Vec<Wire>, rng: &mut R) -> Result<LabeledOperator> {
    let d = wires.iter().map(|w| w.dim).product();
    let g = ginibre(d, d, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    LabeledOperator::new(wires, rho / tr)
}

/// Random Hermitian operator with Gaussian entries (GUE-like, unit scale).
pub fn random_hermitian<R: Rng + ?Sized>(wires: Vec<Wire>, rng: &mut R) -> Result<LabeledOperator> {
    let d = wires.iter().map(|w| w.dim).product();
    let g = ginibre(d, d, rng);
    LabeledOperator::new(wires, (&g + g.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Random CPTP map: trace out a dilation of a Haar pure state on `A ⊗ B ⊗ E` (dim E = dim B),
/// then rescale by the inverse square root of the input marginal.
pub fn random_channel<R: Rng + ?Sized>(input: Wire, output: Wire, rng: &mut R) -> Result<ChannelDescriptor> {
    let (da, db) = (input.dim, output.dim);
    let psi = haar_vector(da * db * db, rng);
    // ρ_AB = Tr_E |ψ⟩⟨ψ|, ψ indexed ((a·db + b)·db + e)
    let m = DMatrix::from_fn(da * db, db, |r, e| psi[r * db + e]);
    let rho = &m * m.adjoint();
    normalize_to_channel(rho, input, output)
}

/// `(R^{-1/2} ⊗ id) ρ (R^{-1/2} ⊗ id)` with `R = Tr_B ρ`.
fn normalize_to_channel(rho: DMatrix<Complex64>, input: Wire, output: Wire) -> Result<ChannelDescriptor> {
    let (da, db) = (input.dim, output.dim);
    let (i, o) = (input.name.clone(), output.name.clone());
    let op = LabeledOperator::new(vec![input, output], rho)?;
    let marg = op.partial_trace(&[&o])?;
    let inv_sqrt = herm_apply(marg.data(), |x| {
        if x > 1e-14 {
            1.0 / x.sqrt()
        } else {
            0.0
        }
    });
    let k = inv_sqrt.kronecker(&DMatrix::<Complex64>::identity(db, db));
    let n = &k * op.data() * &k;
    let n = (&n + n.adjoint()) * Complex64::new(0.5, 0.0);
    debug_assert_eq!(n.nrows(), da * db);
    let op = LabeledOperator::new(op.wires().to_vec(), n)?;
    ChannelDescriptor::with_tolerance(op, &[&i], &[&o], 1e-8)
}

pub fn random_unitary_channel<R: Rng + ?Sized>(input: Wire, output: Wire, rng: &mut R) -> Result<ChannelDescriptor> {
    if input.dim != output.dim {
        return Err(Error::DimensionMismatch(format!("{input} vs {output}")));
    }
    let u = haar_unitary(input.dim, rng);
    ChannelDescriptor::from_unitary(&u, input, output)
}

/// `id_in ⊗ ϖ` with a random density operator `ϖ`.
pub fn random_trace_and_prepare<R: Rng + ?Sized>(input: Wire, output: Wire, rng: &mut R) -> Result<ChannelDescriptor> {
    let varpi = random_density(vec![output], rng)?;
    ChannelDescriptor::trace_and_prepare(vec![input], &varpi)
}

/// Random POVM with `n` elements on dimension `d`: `E_x = S^{-1/2} G_x S^{-1/2}`, `S = Σ G_x`.
pub fn random_povm<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Vec<DMatrix<Complex64>> {
    let gs: Vec<DMatrix<Complex64>> = (0..n)
        .map(|_| {
            let g = ginibre(d, d, rng);
            &g * g.adjoint()
        })
        .collect();
    let s: DMatrix<Complex64> = gs.iter().sum();
    let s_inv_sqrt = herm_apply(&s, |x| 1.0 / x.sqrt());
    gs.iter().map(|g| &s_inv_sqrt * g * &s_inv_sqrt).collect()
}

/// Entanglement-breaking channel in Holevo form `ρ ↦ Σ_x Tr(E_x ρ) ϱ_x`, Choi `Σ_x E_xᵀ ⊗ ϱ_x`.
pub fn random_eb_channel<R: Rng + ?Sized>(
    input: Wire,
    output: Wire,
    outcomes: usize,
    rng: &mut R,
) -> Result<ChannelDescriptor> {
    let povm = random_povm(input.dim, outcomes, rng);
    let (i, o) = (input.name.clone(), output.name.clone());
    let mut total = LabeledOperator::zeros(vec![input.clone(), output.clone()])?;
    for e in povm {
        let e = LabeledOperator::new(vec![input.clone()], e.transpose())?;
        let state = random_density(vec![output.clone()], rng)?;
        total = total.add(&e.tensor(&state)?)?;
    }
    ChannelDescriptor::with_tolerance(total, &[&i], &[&o], 1e-8)
}

/// Random bistochastic superchannel `Ā → A`, `B → B̄`: a convex mixture of `components`
/// memoryless superchannels (random pre- and post-processing channels), i.e. pre- and
/// post-processing correlated only through shared classical randomness.
pub fn random_bistochastic_superchannel<R: Rng + ?Sized>(
    outer_in: Wire,
    inner_in: Wire,
    inner_out: Wire,
    outer_out: Wire,
    components: usize,
    rng: &mut R,
) -> Result<SuperchannelDescriptor> {
    let k = components.max(1);
    let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut op: Option<LabeledOperator> = None;
    for w in weights {
        let pre = random_channel(outer_in.clone(), inner_in.clone(), rng)?;
        let post = random_channel(inner_out.clone(), outer_out.clone(), rng)?;
        let t = SuperchannelDescriptor::from_decomposition(&pre, &post)?;
        let term = t.op().scale(w / total);
        op = Some(match op {
            None => term,
            Some(acc) => acc.add(&term)?,
        });
    }
    let op = op.ok_or_else(|| Error::InvalidArgument("no components".into()))?;
    SuperchannelDescriptor::new(
        op,
        &[&outer_in.name],
        &[&inner_in.name],
        &[&inner_out.name],
        &[&outer_out.name],
        CHANNEL_TOL,
    )
}
