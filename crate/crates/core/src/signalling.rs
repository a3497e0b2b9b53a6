//! Signalling power `S`, exclusion power `P` and the protocols and witnesses built on them.
//!
//! For a channel `N: A → B`, `2^S = max Tr(NW)` and `P = 1 − min Tr(NW)` over Choi operators
//! `W ⪰ 0` with `Tr_A W = id_B`, i.e. channels in the reverse direction `B → A`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::choi::{link, weyl_matrix, ChannelDescriptor, CHANNEL_TOL};
use crate::error::{Error, Result};
use crate::process::ProcessMatrix;
use crate::sdp::{solve, SdpOptions, SdpProblem, Sense};
use crate::tensor::{LabeledOperator, Wire};

/// Absolute tolerance (in bits) below which a witness value is reported as inconclusive.
pub const WITNESS_TOL: f64 = 1e-5;

#[derive(Clone, Debug, Serialize)]
pub struct SignallingReport {
    /// `S` in bits.
    pub s_value: f64,
    /// `2^S = max Tr(NW)`.
    pub raw_primal: f64,
    pub dual_value: f64,
    pub gap: f64,
    /// `S > log₂(dim input)` beyond [`WITNESS_TOL`], which rules out entanglement breaking.
    pub witness_eb: bool,
    pub iterations: usize,
    pub w_opt: LabeledOperator,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExclusionReport {
    pub p_value: f64,
    /// `min Tr(NW)`.
    pub raw_min: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub w_min: LabeledOperator,
}

fn reverse_channel_problem(n: &ChannelDescriptor, sense: Sense) -> Result<SdpProblem> {
    SdpProblem::new(n.op().clone(), sense).with_identity_constraint(&n.input_names())
}

pub fn signalling_power(n: &ChannelDescriptor) -> Result<SignallingReport> {
    signalling_power_with(n, &SdpOptions::default())
}

pub fn signalling_power_with(n: &ChannelDescriptor, opts: &SdpOptions) -> Result<SignallingReport> {
    let sol = solve(&reverse_channel_problem(n, Sense::Maximize)?, opts)?;
    let s_value = sol.primal_value.log2();
    let bound = (n.input_dim() as f64).log2();
    Ok(SignallingReport {
        s_value,
        raw_primal: sol.primal_value,
        dual_value: sol.dual_value,
        gap: sol.gap,
        witness_eb: s_value > bound + WITNESS_TOL,
        iterations: sol.iterations,
        w_opt: sol.w_opt,
    })
}

pub fn exclusion_power(n: &ChannelDescriptor) -> Result<ExclusionReport> {
    exclusion_power_with(n, &SdpOptions::default())
}

pub fn exclusion_power_with(n: &ChannelDescriptor, opts: &SdpOptions) -> Result<ExclusionReport> {
    let sol = solve(&reverse_channel_problem(n, Sense::Minimize)?, opts)?;
    Ok(ExclusionReport {
        p_value: 1.0 - sol.primal_value,
        raw_min: sol.primal_value,
        dual_value: sol.dual_value,
        gap: sol.gap,
        iterations: sol.iterations,
        w_min: sol.w_opt,
    })
}

/// `N̂ = (d_A·id − N)/(d_A d_B − 1)`, the channel whose signalling power determines `P(N)`.
pub fn complement_channel(n: &ChannelDescriptor) -> Result<ChannelDescriptor> {
    let da = n.input_dim() as f64;
    let dab = (n.input_dim() * n.output_dim()) as f64;
    let id = LabeledOperator::identity(n.op().wires().to_vec())?;
    let op = id.scale(da).sub(n.op())?.scale(1.0 / (dab - 1.0));
    ChannelDescriptor::with_tolerance(op, &n.input_names(), &n.output_names(), 1e-6)
}

/// `(P(N), (d_AB − 1)(2^{S(N̂)} − 1))`; the two agree for every channel.
pub fn p_from_s_relation(n: &ChannelDescriptor) -> Result<(f64, f64)> {
    let lhs = exclusion_power(n)?.p_value;
    let dab = (n.input_dim() * n.output_dim()) as f64;
    let s_hat = signalling_power(&complement_channel(n)?)?;
    Ok((lhs, (dab - 1.0) * (s_hat.raw_primal - 1.0)))
}

/// Encoding/decoding pair for the entanglement-assisted protocol built from an optimal `W`.
#[derive(Clone, Debug, Serialize)]
pub struct SuperdenseStrategy {
    /// Alice's unitary encodings, as channels from her half of `Φ⁺` into the channel input.
    pub encodings: Vec<LabeledOperator>,
    /// Bob's POVM on (his half of `Φ⁺`, channel output).
    pub povm: Vec<LabeledOperator>,
    /// `probabilities[x][y] = Pr(B = y | X = x)`.
    pub probabilities: Vec<Vec<f64>>,
    /// `Σ_x Pr(B = x | X = x)`.
    pub coincidence_sum: f64,
    /// `Tr(NW)` for the `W` the strategy was built from.
    pub target_value: f64,
}

impl SuperdenseStrategy {
    /// Exclusion game value `1 − |X| + Σ_x Pr(B ≠ x | X = x)`.
    pub fn exclusion_value(&self) -> f64 {
        let nx = self.probabilities.len() as f64;
        1.0 - nx + self.probabilities.iter().enumerate().map(|(x, row)| 1.0 - row[x]).sum::<f64>()
    }

    /// Largest deviation of the POVM from completeness.
    pub fn povm_residual(&self) -> Result<f64> {
        let mut total = self.povm[0].scale(0.0);
        for e in &self.povm {
            total = total.add(e)?;
        }
        total.max_abs_diff(&LabeledOperator::identity(total.wires().to_vec())?)
    }
}

fn fresh_name(op: &LabeledOperator, base: &str) -> String {
    let mut name = base.to_string();
    while op.has_wire(&name) {
        name.push('\'');
    }
    name
}

/// Choi operator of `ρ ↦ V ρ V†` from `from` into the given (possibly composite) wires.
fn unitary_choi(v: &DMatrix<Complex64>, from: Wire, into: &[Wire]) -> Result<LabeledOperator> {
    let d = v.nrows();
    let ch = ChannelDescriptor::from_unitary(v, from.clone(), Wire::new("__out", d))?;
    let mut wires = vec![from];
    wires.extend(into.iter().cloned());
    LabeledOperator::new(wires, ch.into_op().into_data())
}

/// Builds the protocol from a reverse channel `W`: Bob decodes with `E_x = (u_x ⋆ W)/d`,
/// `u_x` the Weyl channel from the channel input to his half `B̄` of `Φ⁺`; Alice encodes with
/// `V_xᵀ` on her half.
pub fn strategy_from_w(n: &ChannelDescriptor, w: &LabeledOperator) -> Result<SuperdenseStrategy> {
    let d = n.input_dim();
    if d != n.output_dim() {
        return Err(Error::NonSquareChannel {
            input: d,
            output: n.output_dim(),
        });
    }
    let bbar = Wire::new(fresh_name(n.op(), "Bbar"), d);
    let inputs = n.input_wires();
    let df = d as f64;
    let mut povm = Vec::with_capacity(d * d);
    let mut states = Vec::with_capacity(d * d);
    let mut encodings = Vec::with_capacity(d * d);
    for k in 0..d {
        for l in 0..d {
            let v = weyl_matrix(d, k, l);
            // u_x: A → B̄, stored with the composite input first
            let u = unitary_choi(&v, bbar.clone(), &inputs)?;
            let u = u.partial_transpose(&u.names())?;
            povm.push(link(&u, w)?.scale(1.0 / df));
            let enc = unitary_choi(&v.transpose(), bbar.clone(), &inputs)?;
            states.push(link(&enc, n.op())?.scale(1.0 / df));
            encodings.push(enc);
        }
    }
    let probabilities: Vec<Vec<f64>> = states
        .iter()
        .map(|rho| {
            povm.iter()
                .map(|e| rho.trace_product(e).map(|z| z.re))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let coincidence_sum = probabilities.iter().enumerate().map(|(x, r)| r[x]).sum();
    Ok(SuperdenseStrategy {
        encodings,
        povm,
        probabilities,
        coincidence_sum,
        target_value: n.op().trace_product(w)?.re,
    })
}

/// Optimal superdense-coding strategy; its coincidence sum equals `2^S`.
pub fn extract_superdense_strategy(n: &ChannelDescriptor) -> Result<SuperdenseStrategy> {
    if n.input_dim() != n.output_dim() {
        return Err(Error::NonSquareChannel {
            input: n.input_dim(),
            output: n.output_dim(),
        });
    }
    let rep = signalling_power(n)?;
    strategy_from_w(n, &rep.w_opt)
}

/// Optimal exclusion strategy; its exclusion value equals `P`.
pub fn extract_exclusion_strategy(n: &ChannelDescriptor) -> Result<SuperdenseStrategy> {
    if n.input_dim() != n.output_dim() {
        return Err(Error::NonSquareChannel {
            input: n.input_dim(),
            output: n.output_dim(),
        });
    }
    let rep = exclusion_power(n)?;
    strategy_from_w(n, &rep.w_min)
}

/// Signalling power of a channel with memory `Σ` on `{A_i, A_o, B_i}`, viewed as a channel
/// `A_o → A_i B_i`: the maximisation runs over `W ⪰ 0` with `Tr_{A_o} W = id_{A_i B_i}`.
/// Any further wires of `sigma` (e.g. a trivial `B_o`) are treated as outputs.
pub fn memory_channel_signalling(sigma: &LabeledOperator, a_o: &[&str]) -> Result<SignallingReport> {
    let outputs: Vec<&str> = sigma.names().into_iter().filter(|n| !a_o.contains(n)).collect();
    let ch = ChannelDescriptor::unchecked(sigma.clone(), a_o, &outputs)?;
    let check = ch.check(CHANNEL_TOL)?;
    if check.tp_residual > CHANNEL_TOL || check.min_eigenvalue < -CHANNEL_TOL {
        return Err(Error::NotAChannelInDeclaredDirection {
            residual: check.tp_residual.max(-check.min_eigenvalue),
        });
    }
    signalling_power(&ch)
}

#[derive(Clone, Debug, Serialize)]
pub struct CausalLoopReport {
    /// `P` of the marginal channel `A_o → B_i`.
    pub term_ab: f64,
    /// `P` of the marginal channel `B_o → A_i`.
    pub term_ba: f64,
    pub sum: f64,
    pub satisfied: bool,
    pub tolerance: f64,
}

/// The two marginal channels of a bipartite process and their exclusion powers.
pub fn causal_loop_inequality(pm: &ProcessMatrix) -> Result<CausalLoopReport> {
    let report = pm.validate(CHANNEL_TOL)?;
    if !report.valid {
        return Err(Error::InvalidProcessMatrix(report.summary()));
    }
    let (ab, ba) = pm.marginal_channels()?;
    let term_ab = exclusion_power(&ab)?.p_value;
    let term_ba = exclusion_power(&ba)?.p_value;
    let sum = term_ab + term_ba;
    let tolerance = 1e-6;
    Ok(CausalLoopReport {
        term_ab,
        term_ba,
        sum,
        satisfied: sum <= 1.0 + tolerance,
        tolerance,
    })
}

/// `S(M) − log₂(dim input)`; positive values certify that `M` is not entanglement breaking.
pub fn quantum_memory_witness(m: &ChannelDescriptor) -> Result<f64> {
    let rep = signalling_power(m)?;
    Ok(rep.s_value - (m.input_dim() as f64).log2())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessVerdict {
    Positive,
    NonPositive,
    Inconclusive,
}

pub fn witness_verdict(value: f64) -> WitnessVerdict {
    if value > WITNESS_TOL {
        WitnessVerdict::Positive
    } else if value < -WITNESS_TOL {
        WitnessVerdict::NonPositive
    } else {
        WitnessVerdict::Inconclusive
    }
}

/// `|0⟩⟨0| ⊗ |0⟩⟨0| + |1⟩⟨1| ⊗ |1⟩⟨1|`: entanglement breaking with `P = 1`.
pub fn eb_exclusion_channel(input: &str, output: &str) -> Result<ChannelDescriptor> {
    let (a, b) = (Wire::new(input, 2), Wire::new(output, 2));
    let mut op = LabeledOperator::zeros(vec![a.clone(), b.clone()])?;
    for k in 0..2 {
        let t = LabeledOperator::basis_projector(a.clone(), k)?
            .tensor(&LabeledOperator::basis_projector(b.clone(), k)?)?;
        op = op.add(&t)?;
    }
    ChannelDescriptor::new(op, &[input], &[output])
}

/// Qubit channel with `P(Ñ) < 1` but `P(Ñ ⊗ Ñ) = 1`. The published entries are rounded to five
/// digits, so it is validated at tolerance 1e-4.
pub fn superadditive_channel(input: &str, output: &str) -> Result<ChannelDescriptor> {
    let rows: [&[f64]; 4] = [
        &[0.70836, 0.23062, -0.24562, -0.07939],
        &[0.23062, 0.29164, 0.26927, 0.24562],
        &[-0.24562, 0.26927, 0.64901, 0.46428],
        &[-0.07939, 0.24562, 0.46428, 0.35100],
    ];
    let op = LabeledOperator::from_real(vec![Wire::new(input, 2), Wire::new(output, 2)], &rows)?;
    ChannelDescriptor::with_tolerance(op, &[input], &[output], 1e-4)
}
