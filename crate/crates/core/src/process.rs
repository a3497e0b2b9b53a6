//! Bipartite process matrices on `A_i, A_o, B_i, B_o`.
//!
//! Operators are kept in the canonical wire order `[A_i, A_o, B_i, B_o]`; `B_o` may be
//! one-dimensional.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::choi::{link, ChannelDescriptor, Instrument, CHANNEL_TOL};
use crate::error::{Error, Result};
use crate::random::random_hermitian;
use crate::signalling::memory_channel_signalling;
use crate::tensor::{LabeledOperator, Wire};

pub const A_I: &str = "A_i";
pub const A_O: &str = "A_o";
pub const B_I: &str = "B_i";
pub const B_O: &str = "B_o";
const ORDER: [&str; 4] = [A_I, A_O, B_I, B_O];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalClass {
    /// Alice before Bob.
    AThenB,
    /// Bob before Alice.
    BThenA,
    /// No causal order assumed.
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    AToB,
    BToA,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureKind {
    Coherent,
    Incoherent,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionResidual {
    pub name: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProcessValidation {
    pub valid: bool,
    pub min_eigenvalue: f64,
    pub trace_residual: f64,
    pub conditions: Vec<ConditionResidual>,
    /// Name of the first failing check, if any.
    pub violated: Option<String>,
    pub tolerance: f64,
}

impl ProcessValidation {
    pub fn summary(&self) -> String {
        match &self.violated {
            None => "valid".into(),
            Some(name) => {
                let r = self
                    .conditions
                    .iter()
                    .find(|c| &c.name == name)
                    .map(|c| c.residual)
                    .unwrap_or(f64::NAN);
                format!("{name} violated (residual {r:.3e})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    op: LabeledOperator,
    class: CausalClass,
}

fn canonical(op: &LabeledOperator) -> Result<LabeledOperator> {
    let mut op = op.clone();
    if !op.has_wire(B_O) {
        op = op.tensor(&LabeledOperator::identity(vec![Wire::new(B_O, 1)])?)?;
    }
    if op.wires().len() != 4 {
        return Err(Error::WireMismatch(format!(
            "process matrix needs wires {ORDER:?}, got {:?}",
            op.names()
        )));
    }
    op.permute_wires(&ORDER)
}

fn residual(a: &LabeledOperator, b: &LabeledOperator) -> Result<f64> {
    a.max_abs_diff(b)
}

fn tr(op: &LabeledOperator, names: &[&str]) -> Result<LabeledOperator> {
    op.trace_replace(names)
}

/// Projector onto the linear span of valid process matrices without causal-order assumption.
pub fn validity_projection(op: &LabeledOperator) -> Result<LabeledOperator> {
    let w = canonical(op)?;
    let mut acc = tr(&w, &[B_O])?;
    acc = acc.add(&tr(&w, &[A_O])?)?;
    acc = acc.sub(&tr(&w, &[A_O, B_O])?)?;
    acc = acc.sub(&tr(&w, &[B_I, B_O])?)?;
    acc = acc.add(&tr(&w, &[A_O, B_I, B_O])?)?;
    acc = acc.sub(&tr(&w, &[A_I, A_O])?)?;
    acc.add(&tr(&w, &[A_I, A_O, B_O])?)
}

impl ProcessMatrix {
    /// Validates at [`CHANNEL_TOL`]; a missing `B_o` wire is added with dimension 1.
    pub fn new(op: LabeledOperator, class: CausalClass) -> Result<Self> {
        let pm = Self::unchecked(op, class)?;
        let report = pm.validate(CHANNEL_TOL)?;
        if !report.valid {
            return Err(Error::InvalidProcessMatrix(report.summary()));
        }
        Ok(pm)
    }

    pub fn unchecked(op: LabeledOperator, class: CausalClass) -> Result<Self> {
        Ok(ProcessMatrix {
            op: canonical(&op)?,
            class,
        })
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn class(&self) -> CausalClass {
        self.class
    }

    pub fn dim(&self, name: &str) -> usize {
        self.op.wire(name).map(|w| w.dim).unwrap_or(1)
    }

    pub fn validate(&self, tol: f64) -> Result<ProcessValidation> {
        validate_process_matrix(&self.op, self.class, tol)
    }

    /// `(A_o → B_i, B_o → A_i)` marginal channels.
    pub fn marginal_channels(&self) -> Result<(ChannelDescriptor, ChannelDescriptor)> {
        let ab = self
            .op
            .partial_trace(&[A_I, B_O])?
            .scale(1.0 / self.dim(B_O) as f64);
        let ba = self
            .op
            .partial_trace(&[B_I, A_O])?
            .scale(1.0 / self.dim(A_O) as f64);
        Ok((
            ChannelDescriptor::with_tolerance(ab, &[A_O], &[B_I], 1e-6)?,
            ChannelDescriptor::with_tolerance(ba, &[B_O], &[A_I], 1e-6)?,
        ))
    }

    /// `S` of the process viewed as a channel from `A_o` to the remaining wires.
    pub fn signalling_power(&self) -> Result<f64> {
        Ok(memory_channel_signalling(&self.op, &[A_O])?.s_value)
    }
}

/// PSD, trace and linear-constraint residuals of a candidate process matrix.
pub fn validate_process_matrix(op: &LabeledOperator, class: CausalClass, tol: f64) -> Result<ProcessValidation> {
    let w = canonical(op)?;
    let herm = w.check_hermitian_psd(tol);
    let d_out = (w.dim_of(&[A_O])? * w.dim_of(&[B_O])?) as f64;
    let trace_residual = (w.trace() - Complex64::new(d_out, 0.0)).norm();
    let mut conditions = Vec::new();
    let mut push = |name: &str, r: f64| {
        conditions.push(ConditionResidual {
            name: name.into(),
            residual: r,
        })
    };
    push("hermitian", herm.max_asymmetry);
    match class {
        CausalClass::General => {
            let rhs = tr(&w, &[A_O])?.add(&tr(&w, &[B_O])?)?.sub(&tr(&w, &[A_O, B_O])?)?;
            push("W = _AoW + _BoW - _AoBoW", residual(&w, &rhs)?);
            push(
                "_AiAoW = _AiAoBoW",
                residual(&tr(&w, &[A_I, A_O])?, &tr(&w, &[A_I, A_O, B_O])?)?,
            );
            push(
                "_BiBoW = _BiBoAoW",
                residual(&tr(&w, &[B_I, B_O])?, &tr(&w, &[B_I, B_O, A_O])?)?,
            );
        }
        CausalClass::AThenB => {
            push("W = _BoW", residual(&w, &tr(&w, &[B_O])?)?);
            push(
                "_BiBoW = _BiBoAoW",
                residual(&tr(&w, &[B_I, B_O])?, &tr(&w, &[B_I, B_O, A_O])?)?,
            );
        }
        CausalClass::BThenA => {
            push("W = _AoW", residual(&w, &tr(&w, &[A_O])?)?);
            push(
                "_AiAoW = _AiAoBoW",
                residual(&tr(&w, &[A_I, A_O])?, &tr(&w, &[A_I, A_O, B_O])?)?,
            );
        }
    }
    let mut violated = conditions.iter().find(|c| c.residual > tol).map(|c| c.name.clone());
    if violated.is_none() && trace_residual > tol {
        violated = Some("trace".into());
    }
    if violated.is_none() && herm.min_eigenvalue < -tol {
        violated = Some("positivity".into());
    }
    if let Some(v) = &violated {
        if v == "trace" {
            conditions.push(ConditionResidual {
                name: "trace".into(),
                residual: trace_residual,
            });
        } else if v == "positivity" {
            conditions.push(ConditionResidual {
                name: "positivity".into(),
                residual: -herm.min_eigenvalue,
            });
        }
    }
    Ok(ProcessValidation {
        valid: violated.is_none(),
        min_eigenvalue: herm.min_eigenvalue,
        trace_residual,
        conditions,
        violated,
        tolerance: tol,
    })
}

/// `Pr = Tr[(Eᵀ ⊗ Fᵀ)(Υ ⊗ ϱ)]` for Choi-picture effects `E` (Alice) and `F` (Bob). Any wires
/// of `ϱ` must be shared between the effects; the wire sets have to match exactly.
pub fn born_probability(
    pm: &ProcessMatrix,
    e: &LabeledOperator,
    f: &LabeledOperator,
    shared_state: Option<&LabeledOperator>,
) -> Result<f64> {
    let mut full = pm.op.clone();
    if let Some(rho) = shared_state {
        full = full.tensor(rho)?;
    }
    let mut eff = e.tensor(f)?;
    // effects need not mention the trivial B_o wire
    if !eff.has_wire(B_O) && full.has_wire(B_O) && full.dim_of(&[B_O])? == 1 {
        full = full.partial_trace(&[B_O])?;
    }
    let mut a: Vec<&str> = full.names();
    let mut b: Vec<&str> = eff.names();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Err(Error::WireMismatch(format!("effects on {b:?}, process and state on {a:?}")));
    }
    eff = eff.transpose();
    Ok(eff.trace_product(&full)?.re)
}

/// Outcome distribution `p[a][b]` for two instruments on the process.
pub fn born_table(pm: &ProcessMatrix, alice: &Instrument, bob: &Instrument) -> Result<Vec<Vec<f64>>> {
    alice
        .effects
        .iter()
        .map(|e| bob.effects.iter().map(|f| born_probability(pm, e, f, None)).collect())
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct NonSignallingReport {
    pub non_signalling: bool,
    pub residual: f64,
}

/// A cannot signal to B iff `Υ = _{A_o}Υ` (B to A: `Υ = _{B_o}Υ`).
pub fn check_non_signalling(pm: &ProcessMatrix, direction: Direction, tol: f64) -> Result<NonSignallingReport> {
    let wire = match direction {
        Direction::AToB => A_O,
        Direction::BToA => B_O,
    };
    let r = residual(&pm.op, &tr(&pm.op, &[wire])?)?;
    Ok(NonSignallingReport {
        non_signalling: r <= tol,
        residual: r,
    })
}

fn qubit(name: &str) -> Wire {
    Wire::new(name, 2)
}

fn phi_plus(a: &str, b: &str) -> Result<LabeledOperator> {
    Ok(LabeledOperator::max_entangled(qubit(a), qubit(b))?.scale(0.5))
}

/// `Φ⁺_{A_i B_i} ⊗ id_{A_o}` with trivial `B_o`.
pub fn common_cause() -> Result<ProcessMatrix> {
    let op = phi_plus(A_I, B_I)?.tensor_identity(vec![qubit(A_O)])?;
    ProcessMatrix::new(op, CausalClass::AThenB)
}

/// `id_{A_i} ⊗ Φ⁺_{A_o B_i}` (normalised `Φ⁺`), i.e. `(id/2) ⊗` the Choi of the identity channel.
pub fn direct_cause() -> Result<ProcessMatrix> {
    let op = LabeledOperator::identity(vec![qubit(A_I)])?.tensor(&phi_plus(A_O, B_I)?)?;
    ProcessMatrix::new(op, CausalClass::AThenB)
}

/// Embeds a channel `A_o → B_i` with Alice's input prepared in `varpi`.
pub fn channel_process(varpi: &LabeledOperator, n: &ChannelDescriptor) -> Result<ProcessMatrix> {
    let n = n.rename(&[(n.input_names()[0], A_O), (n.output_names()[0], B_I)])?;
    let v = varpi.rename(varpi.names()[0], A_I)?;
    ProcessMatrix::new(v.tensor(n.op())?, CausalClass::AThenB)
}

/// `cos(θ/2) id + i sin(θ/2) SWAP` on two qubits.
pub fn partial_swap(theta: f64) -> DMatrix<Complex64> {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, (theta / 2.0).sin());
    DMatrix::from_fn(4, 4, |r, col| {
        let swap = if r == ((col & 1) << 1 | col >> 1) { s } else { Complex64::new(0.0, 0.0) };
        let id = if r == col { c } else { Complex64::new(0.0, 0.0) };
        id + swap
    })
}

/// Incoherent `α Υ^cc + (1−α) Υ^dc`, or the coherent version in which a partial SWAP
/// `U_PS(πα): (A_o, Aux) → (B_i, Aux')` routes either Alice's output or the partner of her
/// input to Bob; `Aux` starts maximally entangled with `A_i` and `Aux'` is discarded.
pub fn cause_mixture(alpha: f64, kind: MixtureKind) -> Result<ProcessMatrix> {
    if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let op = match kind {
        MixtureKind::Incoherent => common_cause()?
            .op
            .scale(alpha)
            .add(&direct_cause()?.op.scale(1.0 - alpha))?,
        MixtureKind::Coherent => {
            let u = partial_swap(std::f64::consts::PI * alpha);
            // ‖U⟩ = (id ⊗ U) Σ|ii⟩ on (A_o Aux) ⊗ (B_i Aux')
            let mut vec = vec![Complex64::new(0.0, 0.0); 16];
            for i in 0..4 {
                for r in 0..4 {
                    vec[i * 4 + r] = u[(r, i)];
                }
            }
            let k = LabeledOperator::projector(
                vec![qubit(A_O), qubit("Aux"), qubit(B_I), qubit("Aux'")],
                &vec,
            )?;
            let with_source = link(&phi_plus(A_I, "Aux")?, &k)?;
            with_source.partial_trace(&["Aux'"])?
        }
    };
    ProcessMatrix::new(op, CausalClass::AThenB)
}

/// `(α, S(Υ(α)))` along a mixture curve, evaluated in parallel.
pub fn process_signalling_curve(kind: MixtureKind, alphas: &[f64]) -> Result<Vec<(f64, f64)>> {
    alphas
        .par_iter()
        .map(|&a| Ok((a, cause_mixture(a, kind)?.signalling_power()?)))
        .collect()
}

/// Random valid process without causal-order assumption: a Hermitian perturbation projected onto
/// the traceless part of the valid subspace, mixed with the uniform process until it is PSD.
/// `boundary` in (0, 1] sets how close to the PSD boundary the sample sits.
pub fn random_process_matrix<R: Rng + ?Sized>(dims: [usize; 4], boundary: f64, rng: &mut R) -> Result<ProcessMatrix> {
    let wires: Vec<Wire> = ORDER.iter().zip(dims).map(|(n, d)| Wire::new(*n, d)).collect();
    let h = random_hermitian(wires.clone(), rng)?;
    let p = validity_projection(&h)?;
    let p = p.sub(&tr(&p, &ORDER)?)?;
    let din = (dims[0] * dims[2]) as f64;
    let uniform = LabeledOperator::identity(wires)?.scale(1.0 / din);
    let lam_min = p.eigenvalues()[0];
    let scale = if lam_min < 0.0 { (1.0 / din) / -lam_min } else { 1.0 };
    let op = uniform.add(&p.scale(scale * boundary.clamp(0.0, 1.0)))?.hermitian_part();
    ProcessMatrix::new(op, CausalClass::General)
}
