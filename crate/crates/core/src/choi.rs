//! Choi operators, the link product, and validators for channels, superchannels and combs.
//!
//! The Choi operator of a map 𝒩: A → B is `N = Σ_ij |i⟩⟨j| ⊗ 𝒩(|i⟩⟨j|)` with the input
//! wires first. Composition of maps is the link product
//! `U ⋆ V = Tr_S[(U^{T_S} ⊗ id)(V ⊗ id)]` over the shared wires `S`.

use std::collections::HashSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{LabeledOperator, Wire};

/// Default validation tolerance for channels and higher-order objects.
pub const CHANNEL_TOL: f64 = 1e-7;

/// Link product `u ⋆ v`.
///
/// Wires shared by name are contracted (their dimensions must agree). The result acts on
/// `u`'s unshared wires followed by `v`'s unshared wires. Disjoint wire sets give the tensor
/// product; identical wire sets give the scalar `Tr(uᵀ v)`.
pub fn link(u: &LabeledOperator, v: &LabeledOperator) -> Result<LabeledOperator> {
    let mut shared = Vec::new();
    for w in u.wires() {
        if let Ok(o) = v.wire(&w.name) {
            if o.dim != w.dim {
                return Err(Error::DimConflict {
                    name: w.name.clone(),
                    left: w.dim,
                    right: o.dim,
                });
            }
            shared.push(w.name.as_str());
        }
    }
    if shared.is_empty() {
        return u.tensor(v);
    }
    let a_names: Vec<&str> = u.names().into_iter().filter(|n| !shared.contains(n)).collect();
    let b_names: Vec<&str> = v.names().into_iter().filter(|n| !shared.contains(n)).collect();
    let u_order: Vec<&str> = a_names.iter().chain(shared.iter()).copied().collect();
    let v_order: Vec<&str> = shared.iter().chain(b_names.iter()).copied().collect();
    let up = u.permute_wires(&u_order)?;
    let vp = v.permute_wires(&v_order)?;
    let da = up.dim_of(&a_names)?;
    let ds = up.dim_of(&shared)?;
    let db = vp.dim_of(&b_names)?;
    let (um, vm) = (up.data(), vp.data());

    // Ũ[(a,a'),(s,s')] = U[(a,s'),(a',s)],  Ṽ[(s,s'),(b,b')] = V[(s',b),(s,b')]
    let ut = DMatrix::from_fn(da * da, ds * ds, |r, c| {
        let (a, a2) = (r / da, r % da);
        let (s, s2) = (c / ds, c % ds);
        um[(a * ds + s2, a2 * ds + s)]
    });
    let vt = DMatrix::from_fn(ds * ds, db * db, |r, c| {
        let (s, s2) = (r / ds, r % ds);
        let (b, b2) = (c / db, c % db);
        vm[(s2 * db + b, s * db + b2)]
    });
    let prod = ut * vt;
    let data = DMatrix::from_fn(da * db, da * db, |r, c| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (c / db, c % db);
        prod[(a * da + a2, b * db + b2)]
    });
    let wires: Vec<Wire> = a_names
        .iter()
        .map(|n| up.wire(n).cloned())
        .chain(b_names.iter().map(|n| vp.wire(n).cloned()))
        .collect::<Result<_>>()?;
    LabeledOperator::new(wires, data)
}

fn name_set(names: &[String]) -> HashSet<&str> {
    names.iter().map(String::as_str).collect()
}

fn as_strs(names: &[String]) -> Vec<&str> {
    names.iter().map(String::as_str).collect()
}

/// Largest entry of `Tr_out op − id`.
pub fn marginal_residual(op: &LabeledOperator, outputs: &[String]) -> Result<f64> {
    let marg = op.partial_trace(&as_strs(outputs))?;
    let id = LabeledOperator::identity(marg.wires().to_vec())?;
    marg.max_abs_diff(&id)
}

/// Choi operator of a CPTP map together with its declared input/output wire partition.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDescriptor {
    op: LabeledOperator,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

/// Outcome of a channel validity check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelCheck {
    pub min_eigenvalue: f64,
    pub tp_residual: f64,
    pub tolerance: f64,
}

impl ChannelCheck {
    pub fn is_valid(&self) -> bool {
        self.min_eigenvalue >= -self.tolerance && self.tp_residual <= self.tolerance
    }
}

impl ChannelDescriptor {
    /// Wraps and validates a Choi operator (tolerance [`CHANNEL_TOL`]).
    pub fn new(op: LabeledOperator, inputs: &[&str], outputs: &[&str]) -> Result<Self> {
        Self::with_tolerance(op, inputs, outputs, CHANNEL_TOL)
    }

    pub fn with_tolerance(
        op: LabeledOperator,
        inputs: &[&str],
        outputs: &[&str],
        tol: f64,
    ) -> Result<Self> {
        let ch = Self::unchecked(op, inputs, outputs)?;
        let check = ch.check(tol)?;
        if check.min_eigenvalue < -tol {
            return Err(Error::NotPositive {
                min_eigenvalue: check.min_eigenvalue,
            });
        }
        if check.tp_residual > tol {
            return Err(Error::NotTracePreserving {
                residual: check.tp_residual,
            });
        }
        Ok(ch)
    }

    /// Wraps an operator after checking only the wire partition.
    pub fn unchecked(op: LabeledOperator, inputs: &[&str], outputs: &[&str]) -> Result<Self> {
        let mut seen = HashSet::new();
        for n in inputs.iter().chain(outputs) {
            op.wire(n)?;
            if !seen.insert(*n) {
                return Err(Error::DuplicateWire(n.to_string()));
            }
        }
        if seen.len() != op.wires().len() {
            return Err(Error::WireMismatch(format!(
                "wires {:?} not all declared as input or output",
                op.names()
            )));
        }
        Ok(ChannelDescriptor {
            op,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn check(&self, tol: f64) -> Result<ChannelCheck> {
        let report = self.op.check_hermitian_psd(tol);
        let min_eigenvalue = if report.is_hermitian {
            report.min_eigenvalue
        } else {
            -report.max_asymmetry
        };
        Ok(ChannelCheck {
            min_eigenvalue,
            tp_residual: marginal_residual(&self.op, &self.outputs)?,
            tolerance: tol,
        })
    }

    /// Choi operator of `ρ ↦ Σ_k K_k ρ K_k†` from `input` to `output`.
    pub fn from_kraus(kraus: &[DMatrix<Complex64>], input: Wire, output: Wire) -> Result<Self> {
        let (din, dout) = (input.dim, output.dim);
        if kraus.is_empty() {
            return Err(Error::InvalidArgument("empty Kraus list".into()));
        }
        let mut data = DMatrix::zeros(din * dout, din * dout);
        for k in kraus {
            if k.nrows() != dout || k.ncols() != din {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {dout}x{din}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            // |K⟩⟩ = Σ_i |i⟩ ⊗ K|i⟩
            let v = DMatrix::from_fn(din * dout, 1, |r, _| k[(r % dout, r / dout)]);
            data += &v * v.adjoint();
        }
        let (i, o) = (input.name.clone(), output.name.clone());
        let op = LabeledOperator::new(vec![input, output], data)?;
        Self::new(op, &[&i], &[&o])
    }

    pub fn from_unitary(u: &DMatrix<Complex64>, input: Wire, output: Wire) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(u), input, output)
    }

    /// Choi operator of an arbitrary linear map given by its action on matrices.
    pub fn from_linear_map<F>(map: F, input: Wire, output: Wire, tol: f64) -> Result<Self>
    where
        F: Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>,
    {
        let (din, dout) = (input.dim, output.dim);
        let mut data = DMatrix::zeros(din * dout, din * dout);
        for i in 0..din {
            for j in 0..din {
                let mut e = DMatrix::zeros(din, din);
                e[(i, j)] = Complex64::new(1.0, 0.0);
                let out = map(&e);
                if out.nrows() != dout || out.ncols() != dout {
                    return Err(Error::DimensionMismatch("map output has wrong size".into()));
                }
                data.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&out);
            }
        }
        let (i, o) = (input.name.clone(), output.name.clone());
        let op = LabeledOperator::new(vec![input, output], data)?;
        Self::with_tolerance(op, &[&i], &[&o], tol)
    }

    pub fn identity(input: Wire, output: Wire) -> Result<Self> {
        if input.dim != output.dim {
            return Err(Error::DimensionMismatch(format!("{input} vs {output}")));
        }
        let u = DMatrix::identity(input.dim, input.dim);
        Self::from_unitary(&u, input, output)
    }

    /// `ρ ↦ Tr(ρ) ϖ`, i.e. `id_in ⊗ ϖ`.
    pub fn trace_and_prepare(inputs: Vec<Wire>, state: &LabeledOperator) -> Result<Self> {
        let ins: Vec<String> = inputs.iter().map(|w| w.name.clone()).collect();
        let outs: Vec<String> = state.names().iter().map(|s| s.to_string()).collect();
        let op = LabeledOperator::identity(inputs)?.tensor(state)?;
        Self::new(op, &as_strs(&ins), &as_strs(&outs))
    }

    /// Completely depolarizing channel `ρ ↦ Tr(ρ) id/d`.
    pub fn depolarizing(input: Wire, output: Wire) -> Result<Self> {
        let d = output.dim as f64;
        let state = LabeledOperator::identity(vec![output])?.scale(1.0 / d);
        Self::trace_and_prepare(vec![input], &state)
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn into_op(self) -> LabeledOperator {
        self.op
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn input_names(&self) -> Vec<&str> {
        as_strs(&self.inputs)
    }

    pub fn output_names(&self) -> Vec<&str> {
        as_strs(&self.outputs)
    }

    pub fn input_dim(&self) -> usize {
        self.op.dim_of(&self.input_names()).expect("declared wires exist")
    }

    pub fn output_dim(&self) -> usize {
        self.op.dim_of(&self.output_names()).expect("declared wires exist")
    }

    pub fn input_wires(&self) -> Vec<Wire> {
        self.inputs.iter().map(|n| self.op.wire(n).unwrap().clone()).collect()
    }

    pub fn output_wires(&self) -> Vec<Wire> {
        self.outputs.iter().map(|n| self.op.wire(n).unwrap().clone()).collect()
    }

    /// Choi operator with wires ordered inputs first, then outputs.
    pub fn canonical_op(&self) -> Result<LabeledOperator> {
        let order: Vec<&str> = self.input_names().into_iter().chain(self.output_names()).collect();
        self.op.permute_wires(&order)
    }

    pub fn apply(&self, state: &LabeledOperator) -> Result<LabeledOperator> {
        apply_channel(self, state)
    }

    /// Parallel composition `self ⊗ other`.
    pub fn tensor(&self, other: &ChannelDescriptor) -> Result<Self> {
        let op = self.op.tensor(&other.op)?;
        let ins: Vec<&str> = self.input_names().into_iter().chain(other.input_names()).collect();
        let outs: Vec<&str> = self.output_names().into_iter().chain(other.output_names()).collect();
        Self::unchecked(op, &ins, &outs)
    }

    /// Sequential composition: `after ∘ self`, with `self`'s outputs feeding `after`'s inputs.
    pub fn then(&self, after: &ChannelDescriptor) -> Result<Self> {
        if name_set(&self.outputs) != name_set(&after.inputs) {
            return Err(Error::WireMismatch(format!(
                "outputs {:?} do not match inputs {:?}",
                self.outputs, after.inputs
            )));
        }
        let op = link(&self.op, &after.op)?;
        Self::unchecked(op, &self.input_names(), &after.output_names())
    }

    pub fn rename(&self, pairs: &[(&str, &str)]) -> Result<Self> {
        let op = self.op.rename_many(pairs)?;
        let map = |n: &String| {
            pairs
                .iter()
                .find(|(f, _)| *f == n)
                .map_or(n.clone(), |(_, t)| t.to_string())
        };
        let ins: Vec<String> = self.inputs.iter().map(map).collect();
        let outs: Vec<String> = self.outputs.iter().map(map).collect();
        Self::unchecked(op, &as_strs(&ins), &as_strs(&outs))
    }

    /// Convex combination `λ·self + (1−λ)·other` on the same wires.
    pub fn mix(&self, other: &ChannelDescriptor, lambda: f64) -> Result<Self> {
        let op = self.op.scale(lambda).add(&other.op.scale(1.0 - lambda))?;
        Self::unchecked(op, &self.input_names(), &self.output_names())
    }
}

/// `𝒩(ρ) = N ⋆ ρ`; the state must live exactly on the channel's input wires.
pub fn apply_channel(ch: &ChannelDescriptor, state: &LabeledOperator) -> Result<LabeledOperator> {
    let names: HashSet<&str> = state.names().into_iter().collect();
    if names != name_set(&ch.inputs) {
        return Err(Error::WireMismatch(format!(
            "state on {:?}, channel input {:?}",
            state.names(),
            ch.inputs
        )));
    }
    let out = link(state, &ch.op)?;
    out.permute_wires(&ch.output_names())
}

/// Weyl–Heisenberg unitary `X^k Z^ℓ` on dimension `d`.
pub fn weyl_matrix(d: usize, k: usize, l: usize) -> DMatrix<Complex64> {
    let omega = 2.0 * std::f64::consts::PI / d as f64;
    // (X^k Z^ℓ)|j⟩ = ω^{ℓj} |j+k⟩
    DMatrix::from_fn(d, d, |r, c| {
        if r == (c + k) % d {
            Complex64::from_polar(1.0, omega * (l * c) as f64)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// The `d²` Weyl unitary channels `input → output`, indexed `x = k·d + ℓ`.
pub fn weyl_unitaries(d: usize, input: &str, output: &str) -> Result<Vec<ChannelDescriptor>> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("Weyl set needs d ≥ 2, got {d}")));
    }
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        for l in 0..d {
            out.push(ChannelDescriptor::from_unitary(
                &weyl_matrix(d, k, l),
                Wire::new(input, d),
                Wire::new(output, d),
            )?);
        }
    }
    Ok(out)
}

/// Instrument in the Choi picture: CP effects summing to a channel.
#[derive(Clone, Debug)]
pub struct Instrument {
    pub effects: Vec<LabeledOperator>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl Instrument {
    pub fn new(effects: Vec<LabeledOperator>, inputs: &[&str], outputs: &[&str], tol: f64) -> Result<Self> {
        let first = effects
            .first()
            .ok_or_else(|| Error::InvalidArgument("instrument has no effects".into()))?;
        let mut total = first.scale(0.0);
        for e in &effects {
            let r = e.check_hermitian_psd(tol);
            if !r.is_psd(tol) {
                return Err(Error::NotPositive {
                    min_eigenvalue: r.min_eigenvalue,
                });
            }
            total = total.add(e)?;
        }
        ChannelDescriptor::with_tolerance(total, inputs, outputs, tol)?;
        Ok(Instrument {
            effects,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// Measure-and-prepare instrument: measure `input` in the computational basis, then
    /// prepare `|k⟩` on `output` for outcome `k`. Trivial (dimension 1) wires are allowed.
    pub fn computational(input: Wire, output: Wire, prepare: Option<usize>) -> Result<Self> {
        let (i, o) = (input.name.clone(), output.name.clone());
        let mut effects = Vec::new();
        for k in 0..input.dim {
            let meas = LabeledOperator::basis_projector(input.clone(), k)?;
            let prep = LabeledOperator::basis_projector(output.clone(), prepare.unwrap_or(0).min(output.dim - 1))?;
            effects.push(meas.tensor(&prep)?);
        }
        Self::new(effects, &[&i], &[&o], CHANNEL_TOL)
    }
}

/// Superchannel Choi operator on outer input Ā, inner input A, inner output B, outer output B̄.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperchannelDescriptor {
    op: LabeledOperator,
    outer_in: Vec<String>,
    inner_in: Vec<String>,
    inner_out: Vec<String>,
    outer_out: Vec<String>,
}

/// Residuals of the comb conditions of a superchannel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuperchannelCheck {
    pub min_eigenvalue: f64,
    /// `‖Tr_{B̄} T − id_B ⊗ L‖_max`.
    pub marginal_residual: f64,
    /// `‖Tr_A L − id_Ā‖_max`.
    pub normalization_residual: f64,
    pub tolerance: f64,
}

impl SuperchannelCheck {
    pub fn is_valid(&self) -> bool {
        self.min_eigenvalue >= -self.tolerance
            && self.marginal_residual <= self.tolerance
            && self.normalization_residual <= self.tolerance
    }
}

/// Residuals of the reversed-direction comb conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BistochasticReport {
    pub is_bistochastic: bool,
    /// `‖Tr_A T − id_Ā ⊗ M‖_max`.
    pub marginal_residual: f64,
    /// `‖Tr_{B̄} M − id_B‖_max`.
    pub normalization_residual: f64,
}

/// Checks `Tr_{t1} op = id_{i1} ⊗ L` with `L = Tr_{i1 t1} op / dim(i1)` and `Tr_{t2} L = id_{i2}`.
fn comb_pair_residuals(
    op: &LabeledOperator,
    traced_first: &[&str],
    identity_first: &[&str],
    traced_second: &[&str],
) -> Result<(f64, f64)> {
    let marg = op.partial_trace(traced_first)?;
    let d = marg.dim_of(identity_first)? as f64;
    let l = marg.partial_trace(identity_first)?.scale(1.0 / d);
    let id_wires: Vec<Wire> = identity_first
        .iter()
        .map(|n| marg.wire(n).cloned())
        .collect::<Result<_>>()?;
    let expected = LabeledOperator::identity(id_wires)?.tensor(&l)?;
    let r1 = marg.max_abs_diff(&expected)?;
    let l2 = l.partial_trace(traced_second)?;
    let r2 = l2.max_abs_diff(&LabeledOperator::identity(l2.wires().to_vec())?)?;
    Ok((r1, r2))
}

impl SuperchannelDescriptor {
    pub fn new(
        op: LabeledOperator,
        outer_in: &[&str],
        inner_in: &[&str],
        inner_out: &[&str],
        outer_out: &[&str],
        tol: f64,
    ) -> Result<Self> {
        let t = Self::unchecked(op, outer_in, inner_in, inner_out, outer_out)?;
        let c = t.check(tol)?;
        if !c.is_valid() {
            return Err(Error::InvalidSuperchannel(format!(
                "min eigenvalue {:.3e}, marginal residual {:.3e}, normalization residual {:.3e}",
                c.min_eigenvalue, c.marginal_residual, c.normalization_residual
            )));
        }
        Ok(t)
    }

    pub fn unchecked(
        op: LabeledOperator,
        outer_in: &[&str],
        inner_in: &[&str],
        inner_out: &[&str],
        outer_out: &[&str],
    ) -> Result<Self> {
        let all: Vec<&str> = outer_in
            .iter()
            .chain(inner_in)
            .chain(inner_out)
            .chain(outer_out)
            .copied()
            .collect();
        ChannelDescriptor::unchecked(op.clone(), &all, &[])?;
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        Ok(SuperchannelDescriptor {
            op,
            outer_in: own(outer_in),
            inner_in: own(inner_in),
            inner_out: own(inner_out),
            outer_out: own(outer_out),
        })
    }

    /// `T = pre ⋆ post` for `pre: Ā → A ⊗ M` and `post: B ⊗ M → B̄`; the memory wires `M`
    /// are the outputs of `pre` shared with the inputs of `post`.
    pub fn from_decomposition(pre: &ChannelDescriptor, post: &ChannelDescriptor) -> Result<Self> {
        let memory: Vec<&str> = pre
            .output_names()
            .into_iter()
            .filter(|n| post.inputs().iter().any(|p| p == n))
            .collect();
        let inner_in: Vec<&str> = pre
            .output_names()
            .into_iter()
            .filter(|n| !memory.contains(n))
            .collect();
        let inner_out: Vec<&str> = post
            .input_names()
            .into_iter()
            .filter(|n| !memory.contains(n))
            .collect();
        let op = link(pre.op(), post.op())?;
        Self::new(
            op,
            &pre.input_names(),
            &inner_in,
            &inner_out,
            &post.output_names(),
            CHANNEL_TOL,
        )
    }

    /// `T[𝒩] = 𝒩`.
    pub fn identity(outer_in: Wire, inner_in: Wire, inner_out: Wire, outer_out: Wire) -> Result<Self> {
        let pre = ChannelDescriptor::identity(outer_in, inner_in)?;
        let post = ChannelDescriptor::identity(inner_out, outer_out)?;
        Self::from_decomposition(&pre, &post)
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn outer_in(&self) -> Vec<&str> {
        as_strs(&self.outer_in)
    }

    pub fn inner_in(&self) -> Vec<&str> {
        as_strs(&self.inner_in)
    }

    pub fn inner_out(&self) -> Vec<&str> {
        as_strs(&self.inner_out)
    }

    pub fn outer_out(&self) -> Vec<&str> {
        as_strs(&self.outer_out)
    }

    pub fn check(&self, tol: f64) -> Result<SuperchannelCheck> {
        let min_eigenvalue = self.op.check_hermitian_psd(tol).min_eigenvalue;
        let (marginal_residual, normalization_residual) =
            comb_pair_residuals(&self.op, &self.outer_out(), &self.inner_out(), &self.inner_in())?;
        Ok(SuperchannelCheck {
            min_eigenvalue,
            marginal_residual,
            normalization_residual,
            tolerance: tol,
        })
    }

    /// Whether `T ⋆ W` is a channel `B̄ → Ā` for every channel `W: B → A`:
    /// `Tr_A T = id_Ā ⊗ M` with `M = Tr_{AĀ} T / dim Ā` and `Tr_{B̄} M = id_B`.
    pub fn is_bistochastic(&self, tol: f64) -> Result<BistochasticReport> {
        let (marginal_residual, normalization_residual) =
            comb_pair_residuals(&self.op, &self.inner_in(), &self.outer_in(), &self.outer_out())?;
        Ok(BistochasticReport {
            is_bistochastic: marginal_residual <= tol && normalization_residual <= tol,
            marginal_residual,
            normalization_residual,
        })
    }
}

/// `𝒯[𝒩] = T ⋆ N`, validated as a channel Ā → B̄.
pub fn apply_superchannel(t: &SuperchannelDescriptor, n: &ChannelDescriptor) -> Result<ChannelDescriptor> {
    if name_set(n.inputs()) != name_set(&t.inner_in) || name_set(n.outputs()) != name_set(&t.inner_out) {
        return Err(Error::WireMismatch(format!(
            "channel {:?} → {:?} does not fit slot {:?} → {:?}",
            n.inputs(),
            n.outputs(),
            t.inner_in,
            t.inner_out
        )));
    }
    let op = link(&t.op, n.op())?;
    let ch = ChannelDescriptor::unchecked(op, &t.outer_in(), &t.outer_out())?;
    let c = ch.check(CHANNEL_TOL)?;
    if !c.is_valid() {
        return Err(Error::OutputNotCptp(format!(
            "min eigenvalue {:.3e}, TP residual {:.3e}",
            c.min_eigenvalue, c.tp_residual
        )));
    }
    Ok(ch)
}

/// One laboratory of a comb: the wire it receives and the wire it sends back, either optional.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombPair {
    #[serde(rename = "in", default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(rename = "out", default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl CombPair {
    pub fn new(input: Option<&str>, output: Option<&str>) -> Self {
        CombPair {
            input: input.map(str::to_string),
            output: output.map(str::to_string),
        }
    }
}

/// JSON wrapper `{"pairs":[{"in":"A_i","out":"A_o"},...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CombPairs {
    pub pairs: Vec<CombPair>,
}

/// Diagnostic from [`validate_comb`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CombReport {
    pub valid: bool,
    pub psd: bool,
    pub min_eigenvalue: f64,
    /// Lowest violated trace level (1 = overall normalisation).
    pub first_violated_level: Option<usize>,
    /// Residual per level, index 0 is level 1.
    pub level_residuals: Vec<f64>,
    pub tolerance: f64,
}

/// Checks the comb hierarchy `Tr_{j.in} Υ_j = id_{(j−1).out} ⊗ Υ_{j−1}` down to `Tr Υ_1 = 1`.
///
/// `pairs` lists the laboratories in causal order; every wire of `op` must occur in exactly
/// one pair.
pub fn validate_comb(op: &LabeledOperator, pairs: &[CombPair], tol: f64) -> Result<CombReport> {
    let mut declared = HashSet::new();
    for p in pairs {
        for n in p.input.iter().chain(&p.output) {
            op.wire(n)?;
            if !declared.insert(n.as_str()) {
                return Err(Error::DuplicateWire(n.clone()));
            }
        }
    }
    if declared.len() != op.wires().len() {
        return Err(Error::WireMismatch("some wires are not assigned to a pair".into()));
    }
    let n = pairs.len();
    let mut residuals = vec![0.0; n + 1];
    let mut current = op.clone();
    // level j ∈ (n+1)..=2; pair index j−1 supplies `in`, pair j−2 supplies `out`
    for j in (2..=n + 1).rev() {
        let traced = if j <= n { pairs[j - 1].input.as_deref() } else { None };
        let x = match traced {
            Some(w) => current.partial_trace(&[w])?,
            None => current,
        };
        current = match pairs[j - 2].output.as_deref() {
            Some(w) => {
                let d = x.wire(w)?.dim as f64;
                let lower = x.partial_trace(&[w])?.scale(1.0 / d);
                let expected = LabeledOperator::identity(vec![x.wire(w)?.clone()])?.tensor(&lower)?;
                residuals[j - 1] = x.max_abs_diff(&expected)?;
                lower
            }
            None => x,
        };
    }
    residuals[0] = (current.trace() - Complex64::new(1.0, 0.0)).norm();
    let report = op.check_hermitian_psd(tol);
    let psd = report.is_psd(tol);
    let first_violated_level = residuals.iter().position(|&r| r > tol).map(|i| i + 1);
    Ok(CombReport {
        valid: psd && first_violated_level.is_none(),
        psd,
        min_eigenvalue: report.min_eigenvalue,
        first_violated_level,
        level_residuals: residuals,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_channel, random_density, seeded};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn q(name: &str) -> Wire {
        Wire::new(name, 2)
    }

    fn amplitude_damping(lambda: f64) -> Vec<DMatrix<Complex64>> {
        let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - lambda).sqrt())]);
        let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(lambda.sqrt()), c(0.0), c(0.0)]);
        vec![k0, k1]
    }

    #[test]
    fn identity_choi_is_unnormalised_bell() {
        let ch = ChannelDescriptor::identity(q("A"), q("B")).unwrap();
        let phi = LabeledOperator::max_entangled(q("A"), q("B")).unwrap();
        assert!(ch.op().max_abs_diff(&phi).unwrap() < 1e-15);
        assert!((ch.op().trace() - c(2.0)).norm() < 1e-15);
    }

    #[test]
    fn depolarizing_choi() {
        let ch = ChannelDescriptor::depolarizing(q("A"), q("B")).unwrap();
        let expect = LabeledOperator::identity(vec![q("A"), q("B")]).unwrap().scale(0.5);
        assert!(ch.op().max_abs_diff(&expect).unwrap() < 1e-15);
        // Σ_ij |i⟩⟨j| ⊗ Tr(|i⟩⟨j|) id/2 via the generic constructor
        let lin = ChannelDescriptor::from_linear_map(
            |m| DMatrix::identity(2, 2) * (m.trace() * 0.5),
            q("A"),
            q("B"),
            1e-12,
        )
        .unwrap();
        assert!(lin.op().max_abs_diff(ch.op()).unwrap() < 1e-15);
    }

    #[test]
    fn non_tp_kraus_rejected() {
        let k = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.5)]);
        assert!(matches!(
            ChannelDescriptor::from_kraus(&[k], q("A"), q("B")),
            Err(Error::NotTracePreserving { .. })
        ));
        let bad = DMatrix::identity(3, 2);
        assert!(matches!(
            ChannelDescriptor::from_kraus(&[bad], q("A"), q("B")),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn amplitude_damping_action_matches_kraus() {
        let lambda = 0.3;
        let ks = amplitude_damping(lambda);
        let ch = ChannelDescriptor::from_kraus(&ks, q("A"), q("B")).unwrap();
        let one = LabeledOperator::basis_projector(q("A"), 1).unwrap();
        let out = ch.apply(&one).unwrap();
        assert!((out.data()[(0, 0)] - c(lambda)).norm() < 1e-14);
        assert!((out.data()[(1, 1)] - c(1.0 - lambda)).norm() < 1e-14);
        let mut rng = seeded(3);
        let rho = random_density(vec![q("A")], &mut rng).unwrap();
        let direct: DMatrix<Complex64> = ks.iter().map(|k| k * rho.data() * k.adjoint()).sum();
        let via = ch.apply(&rho).unwrap();
        assert!((via.data() - direct).norm() < 1e-13);
    }

    #[test]
    fn trace_and_prepare_outputs_state() {
        let mut rng = seeded(1);
        let varpi = random_density(vec![q("B")], &mut rng).unwrap();
        let ch = ChannelDescriptor::trace_and_prepare(vec![q("A")], &varpi).unwrap();
        let rho = random_density(vec![q("A")], &mut rng).unwrap();
        assert!(ch.apply(&rho).unwrap().max_abs_diff(&varpi).unwrap() < 1e-14);
    }

    #[test]
    fn link_identical_wires_is_trace_of_transpose_product() {
        let phi = LabeledOperator::max_entangled(q("A"), q("B")).unwrap().scale(0.5);
        let s = link(&phi, &phi).unwrap();
        assert!(s.wires().is_empty());
        // explicit Σ_{ij} U[j,i] V[j,i]
        let (u, v) = (phi.data(), phi.data());
        let mut oracle = c(0.0);
        for i in 0..4 {
            for j in 0..4 {
                oracle += u[(j, i)] * v[(j, i)];
            }
        }
        assert!((s.trace() - oracle).norm() < 1e-15);
        assert!((s.trace() - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn link_dim_conflict() {
        let a = LabeledOperator::identity(vec![q("A")]).unwrap();
        let b = LabeledOperator::identity(vec![Wire::new("A", 3)]).unwrap();
        assert!(matches!(link(&a, &b), Err(Error::DimConflict { .. })));
    }

    #[test]
    fn choi_composition_matches_kraus_composition() {
        let n = ChannelDescriptor::from_kraus(&amplitude_damping(0.4), q("A"), q("B")).unwrap();
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(1.0), c(-1.0)]) * c(0.5f64.sqrt());
        let m = ChannelDescriptor::from_unitary(&h, q("B"), q("C")).unwrap();
        let composed = n.then(&m).unwrap();
        let kraus: Vec<DMatrix<Complex64>> = amplitude_damping(0.4).iter().map(|k| &h * k).collect();
        let direct = ChannelDescriptor::from_kraus(&kraus, q("A"), q("C")).unwrap();
        assert!(composed.op().max_abs_diff(direct.op()).unwrap() < 1e-14);
    }

    #[test]
    fn weyl_set_d2() {
        let x = weyl_matrix(2, 1, 0);
        let z = weyl_matrix(2, 0, 1);
        assert!((x[(1, 0)] - c(1.0)).norm() < 1e-15 && (x[(0, 1)] - c(1.0)).norm() < 1e-15);
        assert!((z[(1, 1)] - c(-1.0)).norm() < 1e-15);
        assert!((weyl_matrix(2, 1, 1) - &x * &z).norm() < 1e-15);
        let us = weyl_unitaries(2, "A", "B").unwrap();
        for (m, um) in us.iter().enumerate() {
            for (n, un) in us.iter().enumerate() {
                let t = um.op().trace_product(un.op()).unwrap();
                let expect = if m == n { 4.0 } else { 0.0 };
                assert!((t - c(expect)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn weyl_completeness_d3() {
        let us = weyl_unitaries(3, "A", "B").unwrap();
        let mut sum = LabeledOperator::zeros(vec![Wire::new("A", 3), Wire::new("B", 3)]).unwrap();
        for u in &us {
            sum = sum.add(u.op()).unwrap();
        }
        let id = LabeledOperator::identity(sum.wires().to_vec()).unwrap();
        assert!(sum.scale(1.0 / 3.0).max_abs_diff(&id).unwrap() < 1e-12);
        assert!(weyl_unitaries(1, "A", "B").is_err());
    }

    #[test]
    fn identity_superchannel_returns_channel() {
        let t = SuperchannelDescriptor::identity(q("Abar"), q("A"), q("B"), q("Bbar")).unwrap();
        let mut rng = seeded(9);
        let n = random_channel(q("A"), q("B"), &mut rng).unwrap();
        let out = apply_superchannel(&t, &n).unwrap();
        let expect = n.rename(&[("A", "Abar"), ("B", "Bbar")]).unwrap();
        assert!(out.op().max_abs_diff(expect.op()).unwrap() < 1e-13);
        assert!(t.is_bistochastic(1e-9).unwrap().is_bistochastic);
    }

    #[test]
    fn superchannel_slot_mismatch() {
        let t = SuperchannelDescriptor::identity(q("Abar"), q("A"), q("B"), q("Bbar")).unwrap();
        let n = ChannelDescriptor::identity(q("X"), q("B")).unwrap();
        assert!(matches!(apply_superchannel(&t, &n), Err(Error::WireMismatch(_))));
    }

    #[test]
    fn routing_through_memory_is_not_bistochastic() {
        // pre: Ā → A ⊗ M sends Ā into the memory and |0⟩ into the slot; post discards B.
        let zero = LabeledOperator::basis_projector(q("A"), 0).unwrap();
        let id_mem = ChannelDescriptor::identity(q("Abar"), q("M")).unwrap();
        let pre_op = id_mem.op().tensor(&zero).unwrap();
        let pre = ChannelDescriptor::new(pre_op, &["Abar"], &["M", "A"]).unwrap();
        let id_out = ChannelDescriptor::identity(q("M"), q("Bbar")).unwrap();
        let post_op = id_out.op().tensor_identity(vec![q("B")]).unwrap();
        let post = ChannelDescriptor::new(post_op, &["M", "B"], &["Bbar"]).unwrap();
        let t = SuperchannelDescriptor::from_decomposition(&pre, &post).unwrap();
        let rep = t.is_bistochastic(1e-9).unwrap();
        assert!(!rep.is_bistochastic);
        assert!(rep.marginal_residual > 0.1);
    }

    #[test]
    fn comb_single_channel_is_cptp() {
        let mut rng = seeded(4);
        let n = random_channel(q("A"), q("B"), &mut rng).unwrap();
        let pairs = [CombPair::new(None, Some("A")), CombPair::new(Some("B"), None)];
        let r = validate_comb(n.op(), &pairs, 1e-9).unwrap();
        assert!(r.valid, "{r:?}");
        let scaled = n.op().scale(1.5);
        let r = validate_comb(&scaled, &pairs, 1e-9).unwrap();
        assert_eq!(r.first_violated_level, Some(1));
    }

    #[test]
    fn comb_memory_channel_valid() {
        let mut rng = seeded(5);
        // Σ = σ_{A_i M} ⋆ L_{A_o M → B_i}
        let sigma = random_density(vec![q("A_i"), q("M")], &mut rng).unwrap();
        let l = random_channel(Wire::new("AoM", 4), q("B_i"), &mut rng).unwrap();
        let l = ChannelDescriptor::unchecked(
            LabeledOperator::new(
                vec![q("A_o"), q("M"), q("B_i")],
                l.op().data().clone(),
            )
            .unwrap(),
            &["A_o", "M"],
            &["B_i"],
        )
        .unwrap();
        let big_sigma = link(&sigma, l.op()).unwrap();
        let pairs = [CombPair::new(Some("A_i"), Some("A_o")), CombPair::new(Some("B_i"), None)];
        let r = validate_comb(&big_sigma, &pairs, 1e-9).unwrap();
        assert!(r.valid, "{r:?}");
    }

    #[test]
    fn comb_pairs_json() {
        let s = r#"{"pairs":[{"in":"A_i","out":"A_o"},{"in":"B_i"}]}"#;
        let p: CombPairs = serde_json::from_str(s).unwrap();
        assert_eq!(p.pairs[1], CombPair::new(Some("B_i"), None));
    }

    #[test]
    fn computational_instrument_sums_to_channel() {
        let inst = Instrument::computational(q("A"), Wire::new("X", 1), None).unwrap();
        assert_eq!(inst.effects.len(), 2);
    }
}
