//! Complex Hermitian semidefinite programs with partial-trace equality constraints.
//!
//! An [`SdpProblem`] optimizes `Tr(C W)` over `W ⪰ 0` on the objective's wires subject to
//! `Tr_S W = R` for each [`TraceConstraint`]. Problems are embedded into real symmetric cone
//! programs and solved by the interior-point method in [`ipm`].

pub mod embed;
pub mod ipm;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::choi::ChannelDescriptor;
use crate::error::{Error, Result};
use crate::tensor::{LabeledOperator, OperatorJson};
use embed::{unembed, ComplexSdp, HermTriplets};
use ipm::{IpmOptions, RealSdp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

/// `Tr_traced W = target`; the target lives on the complementary wires.
#[derive(Clone, Debug)]
pub struct TraceConstraint {
    pub traced: Vec<String>,
    pub target: LabeledOperator,
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub objective: LabeledOperator,
    pub sense: Sense,
    pub constraints: Vec<TraceConstraint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SdpOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Largest admissible complex side of the variable.
    pub max_side: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 200,
            max_side: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalTrouble,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub primal_value: f64,
    pub dual_value: f64,
    /// `primal_value − dual_value`.
    pub gap: f64,
    pub w_opt: LabeledOperator,
    /// One Hermitian dual operator `Λ_j` per constraint, on the constraint's target wires.
    pub dual_operators: Vec<LabeledOperator>,
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

impl SdpProblem {
    pub fn new(objective: LabeledOperator, sense: Sense) -> Self {
        SdpProblem {
            objective,
            sense,
            constraints: Vec::new(),
        }
    }

    pub fn with_constraint(mut self, traced: &[&str], target: LabeledOperator) -> Self {
        self.constraints.push(TraceConstraint {
            traced: traced.iter().map(|s| s.to_string()).collect(),
            target,
        });
        self
    }

    /// `Tr_traced W = id` on the remaining wires.
    pub fn with_identity_constraint(self, traced: &[&str]) -> Result<Self> {
        let kept: Vec<_> = self
            .objective
            .wires()
            .iter()
            .filter(|w| !traced.contains(&w.name.as_str()))
            .cloned()
            .collect();
        let id = LabeledOperator::identity(kept)?;
        Ok(self.with_constraint(traced, id))
    }

    fn validate(&self, opts: &SdpOptions) -> Result<()> {
        let side = self.objective.dim();
        if side > opts.max_side {
            return Err(Error::ProblemTooLarge {
                side,
                cap: opts.max_side,
            });
        }
        let scale = 1.0 + self.objective.max_abs();
        if !self.objective.check_hermitian_psd(1e-9 * scale).is_hermitian {
            return Err(Error::InvalidArgument("objective is not Hermitian".into()));
        }
        for c in &self.constraints {
            for t in &c.traced {
                self.objective.wire(t)?;
            }
            let kept: Vec<&str> = self
                .objective
                .names()
                .into_iter()
                .filter(|n| !c.traced.iter().any(|t| t == n))
                .collect();
            let expected = LabeledOperator::identity(
                kept.iter().map(|n| self.objective.wire(n).unwrap().clone()).collect(),
            )?;
            expected.align(&c.target)?;
            let s = 1.0 + c.target.max_abs();
            if !c.target.check_hermitian_psd(1e-9 * s).is_hermitian {
                return Err(Error::InvalidArgument("constraint target is not Hermitian".into()));
            }
        }
        Ok(())
    }

    /// Complex program in minimisation form plus, per constraint, the constraint rows it owns.
    fn compile(&self) -> Result<(ComplexSdp, Vec<std::ops::Range<usize>>)> {
        let n = self.objective.dim();
        let sign = match self.sense {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        };
        let objective = vec![self.objective.data() * Complex64::new(sign, 0.0)];
        let mut constraints = Vec::new();
        let mut rhs = Vec::new();
        let mut ranges = Vec::new();
        let dims: Vec<usize> = self.objective.wires().iter().map(|w| w.dim).collect();
        for c in &self.constraints {
            let start = constraints.len();
            let traced_pos: Vec<usize> = self
                .objective
                .wires()
                .iter()
                .enumerate()
                .filter(|(_, w)| c.traced.contains(&w.name))
                .map(|(i, _)| i)
                .collect();
            let kept_names: Vec<&str> = self
                .objective
                .names()
                .into_iter()
                .filter(|n| !c.traced.iter().any(|t| t == n))
                .collect();
            let target = c.target.permute_wires(&kept_names)?;
            let dk = target.dim();
            let ds = n / dk;
            // idx[p][s]: full index with kept digits p and traced digits s
            let mut idx = vec![vec![0usize; ds]; dk];
            for full in 0..n {
                let mut rem = full;
                let mut digits = vec![0; dims.len()];
                for k in (0..dims.len()).rev() {
                    digits[k] = rem % dims[k];
                    rem /= dims[k];
                }
                let (mut p, mut s) = (0, 0);
                for (k, &d) in digits.iter().enumerate() {
                    if traced_pos.contains(&k) {
                        s = s * dims[k] + d;
                    } else {
                        p = p * dims[k] + d;
                    }
                }
                idx[p][s] = full;
            }
            let half = 0.5;
            for p in 0..dk {
                for q in p..dk {
                    let r = target.data()[(p, q)];
                    if p == q {
                        let h: HermTriplets = (0..ds)
                            .map(|s| (0, idx[p][s], idx[p][s], Complex64::new(1.0, 0.0)))
                            .collect();
                        constraints.push(h);
                        rhs.push(r.re);
                        continue;
                    }
                    let mut re = HermTriplets::new();
                    let mut im = HermTriplets::new();
                    for s in 0..ds {
                        let (a, b) = (idx[p][s], idx[q][s]);
                        re.push((0, a, b, Complex64::new(half, 0.0)));
                        re.push((0, b, a, Complex64::new(half, 0.0)));
                        im.push((0, a, b, Complex64::new(0.0, half)));
                        im.push((0, b, a, Complex64::new(0.0, -half)));
                    }
                    constraints.push(re);
                    rhs.push(r.re);
                    constraints.push(im);
                    rhs.push(r.im);
                }
            }
            ranges.push(start..constraints.len());
        }
        Ok((
            ComplexSdp {
                blocks: vec![n],
                objective,
                constraints,
                rhs,
            },
            ranges,
        ))
    }

    /// JSON dump of the problem and of its real embedding, for external verification.
    ///
    /// Layout: `{"sense", "objective": operator, "constraints": [{"traced", "target"}],
    /// "embedded": {"blocks", "c": [dense rows per block], "a": [[[block,i,j,v],..],..], "b"}}`.
    /// The embedded program is `min ⟨c,X⟩ s.t. ⟨a_k,X⟩ = b_k, X ⪰ 0`.
    pub fn dump_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Constraint<'a> {
            traced: &'a [String],
            target: OperatorJson,
        }
        #[derive(Serialize)]
        struct Embedded {
            blocks: Vec<usize>,
            c: Vec<Vec<Vec<f64>>>,
            a: Vec<Vec<(usize, usize, usize, f64)>>,
            b: Vec<f64>,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            sense: Sense,
            objective: OperatorJson,
            constraints: Vec<Constraint<'a>>,
            embedded: Embedded,
        }
        let (cp, _) = self.compile()?;
        let real: RealSdp = cp.to_real();
        let dump = Dump {
            sense: self.sense,
            objective: OperatorJson::from(&self.objective),
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint {
                    traced: &c.traced,
                    target: OperatorJson::from(&c.target),
                })
                .collect(),
            embedded: Embedded {
                blocks: real.blocks.clone(),
                c: real
                    .c
                    .iter()
                    .map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect())
                    .collect(),
                a: real.a.iter().map(|s| s.entries.clone()).collect(),
                b: real.b.iter().copied().collect(),
            },
        };
        Ok(serde_json::to_string(&dump)?)
    }
}

fn ipm_options(opts: &SdpOptions) -> IpmOptions {
    IpmOptions {
        feas_tol: opts.feas_tol,
        gap_tol: opts.gap_tol,
        max_iter: opts.max_iter,
    }
}

/// Solves the problem and returns the optimizer together with the dual certificate.
pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    problem.validate(opts)?;
    let (cp, ranges) = problem.compile()?;
    let real = cp.to_real();
    let sol = ipm::solve(&real, &ipm_options(opts))?;
    let w = unembed(&sol.x[0]);
    let w = (&w + w.adjoint()) * Complex64::new(0.5, 0.0);
    let w_opt = LabeledOperator::new(problem.objective.wires().to_vec(), w)?;
    let primal_value = problem.objective.trace_product(&w_opt)?.re;

    // Λ_total = ∓ Σ y_k H_k per constraint, reduced to the target wires.
    let sign = match problem.sense {
        Sense::Maximize => -1.0,
        Sense::Minimize => 1.0,
    };
    let n = problem.objective.dim();
    let mut dual_operators = Vec::new();
    let mut dual_value = 0.0;
    for (c, range) in problem.constraints.iter().zip(ranges) {
        let mut total = DMatrix::<Complex64>::zeros(n, n);
        for k in range {
            let yk = sol.y[k] * sign;
            for &(_, i, j, h) in &cp.constraints[k] {
                total[(i, j)] += h * yk;
            }
        }
        let total = LabeledOperator::new(problem.objective.wires().to_vec(), total)?;
        let traced: Vec<&str> = c.traced.iter().map(String::as_str).collect();
        let ds = problem.objective.dim_of(&traced)? as f64;
        let lambda = total.partial_trace(&traced)?.scale(1.0 / ds);
        let lambda = c.target.align(&lambda)?.hermitian_part();
        dual_value += lambda.trace_product(&c.target)?.re;
        dual_operators.push(lambda);
    }
    if problem.constraints.is_empty() {
        dual_value = -sign * sol.dual_objective;
    }
    Ok(SdpSolution {
        primal_value,
        dual_value,
        gap: primal_value - dual_value,
        w_opt,
        dual_operators,
        status: SdpStatus::Optimal,
        iterations: sol.iterations,
        primal_infeasibility: sol.primal_infeasibility,
        dual_infeasibility: sol.dual_infeasibility,
    })
}

/// `‖𝒩 − ℳ‖⋄` via `2 max Tr(JW)` over `0 ⪯ W ⪯ ρ ⊗ id`, `Tr ρ = 1`, with `J = N − M`.
pub fn diamond_norm_distance(n: &ChannelDescriptor, m: &ChannelDescriptor) -> Result<f64> {
    diamond_norm_distance_with(n, m, &SdpOptions::default())
}

pub fn diamond_norm_distance_with(
    n: &ChannelDescriptor,
    m: &ChannelDescriptor,
    opts: &SdpOptions,
) -> Result<f64> {
    let sorted = |v: &[String]| {
        let mut v = v.to_vec();
        v.sort();
        v
    };
    if sorted(n.inputs()) != sorted(m.inputs()) {
        return Err(Error::WireMismatch("channels have different inputs".into()));
    }
    let nj = n.canonical_op()?;
    let j = nj.sub(m.op())?;
    let din = n.input_dim();
    let dout = n.output_dim();
    let nd = din * dout;
    if nd > opts.max_side {
        return Err(Error::ProblemTooLarge {
            side: nd,
            cap: opts.max_side,
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let half = Complex64::new(0.5, 0.0);
    let ihalf = Complex64::new(0.0, 0.5);
    let mut constraints = Vec::new();
    let mut rhs = Vec::new();
    for r in 0..nd {
        let (ar, br) = (r / dout, r % dout);
        for c in r..nd {
            let (ac, bc) = (c / dout, c % dout);
            if r == c {
                constraints.push(vec![(0, r, r, one), (1, r, r, one), (2, ar, ar, -one)]);
                rhs.push(0.0);
                continue;
            }
            let mut re = vec![(0, r, c, half), (0, c, r, half), (1, r, c, half), (1, c, r, half)];
            let mut im = vec![(0, r, c, ihalf), (0, c, r, -ihalf), (1, r, c, ihalf), (1, c, r, -ihalf)];
            if br == bc {
                re.push((2, ar, ac, -half));
                re.push((2, ac, ar, -half));
                im.push((2, ar, ac, -ihalf));
                im.push((2, ac, ar, ihalf));
            }
            constraints.push(re);
            rhs.push(0.0);
            constraints.push(im);
            rhs.push(0.0);
        }
    }
    constraints.push((0..din).map(|a| (2, a, a, one)).collect());
    rhs.push(1.0);
    let cp = ComplexSdp {
        blocks: vec![nd, nd, din],
        objective: vec![
            -j.data().clone(),
            DMatrix::zeros(nd, nd),
            DMatrix::zeros(din, din),
        ],
        constraints,
        rhs,
    };
    let sol = ipm::solve(&cp.to_real(), &ipm_options(opts))?;
    let w = unembed(&sol.x[0]);
    let value = (j.data() * w).trace().re;
    Ok((2.0 * value).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_channel, seeded};
    use crate::tensor::Wire;

    fn q(n: &str) -> Wire {
        Wire::new(n, 2)
    }

    /// Tr(NW) maximised over W ⪰ 0 with Tr_A W = id_B.
    fn signalling_problem(n: &ChannelDescriptor) -> SdpProblem {
        SdpProblem::new(n.op().clone(), Sense::Maximize)
            .with_identity_constraint(&n.input_names())
            .unwrap()
    }

    #[test]
    fn trace_and_prepare_gives_one() {
        let varpi = LabeledOperator::basis_projector(q("B"), 0).unwrap();
        let n = ChannelDescriptor::trace_and_prepare(vec![q("A")], &varpi).unwrap();
        let s = solve(&signalling_problem(&n), &SdpOptions::default()).unwrap();
        assert!((s.primal_value - 1.0).abs() < 1e-7, "{}", s.primal_value);
        assert!((s.dual_value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn identity_gives_four() {
        let n = ChannelDescriptor::identity(q("A"), q("B")).unwrap();
        let s = solve(&signalling_problem(&n), &SdpOptions::default()).unwrap();
        assert!((s.primal_value - 4.0).abs() < 1e-7);
        assert!(s.gap.abs() < 1e-6);
        // returned W is feasible
        let marg = s.w_opt.partial_trace(&["A"]).unwrap();
        let id = LabeledOperator::identity(vec![q("B")]).unwrap();
        assert!(marg.max_abs_diff(&id).unwrap() < 1e-7);
        assert!(s.w_opt.check_hermitian_psd(1e-7).min_eigenvalue > -1e-7);
    }

    #[test]
    fn dual_operator_is_feasible() {
        let mut rng = seeded(31);
        let n = random_channel(q("A"), q("B"), &mut rng).unwrap();
        let s = solve(&signalling_problem(&n), &SdpOptions::default()).unwrap();
        let lam = &s.dual_operators[0];
        // id_A ⊗ Λ − N ⪰ 0
        let lifted = LabeledOperator::identity(vec![q("A")]).unwrap().tensor(lam).unwrap();
        let slack = lifted.sub(n.op()).unwrap();
        assert!(slack.eigenvalues()[0] > -1e-6);
        assert!((s.primal_value - s.dual_value).abs() / s.primal_value.max(1.0) < 1e-6);
    }

    #[test]
    fn min_sense() {
        let n = ChannelDescriptor::identity(q("A"), q("B")).unwrap();
        let p = SdpProblem::new(n.op().clone(), Sense::Minimize)
            .with_identity_constraint(&["A"])
            .unwrap();
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert!(s.primal_value.abs() < 1e-7);
        assert!(s.dual_value.abs() < 1e-6);
    }

    #[test]
    fn too_large_rejected() {
        let op = LabeledOperator::identity(vec![Wire::new("A", 9), Wire::new("B", 9)]).unwrap();
        let p = SdpProblem::new(op, Sense::Maximize);
        assert!(matches!(
            solve(&p, &SdpOptions::default()),
            Err(Error::ProblemTooLarge { side: 81, cap: 64 })
        ));
    }

    #[test]
    fn infeasible_target_reported() {
        let n = ChannelDescriptor::identity(q("A"), q("B")).unwrap();
        let bad = LabeledOperator::from_real(vec![q("B")], &[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
        let p = SdpProblem::new(n.op().clone(), Sense::Maximize).with_constraint(&["A"], bad);
        assert!(matches!(
            solve(&p, &SdpOptions::default()),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn diamond_identity_vs_depolarizing() {
        let id = ChannelDescriptor::identity(q("A"), q("B")).unwrap();
        let dep = ChannelDescriptor::depolarizing(q("A"), q("B")).unwrap();
        let d = diamond_norm_distance(&id, &dep).unwrap();
        assert!((d - 1.5).abs() < 1e-6, "{d}");
        assert!(diamond_norm_distance(&id, &id).unwrap() < 1e-6);
    }

    #[test]
    fn dump_is_json() {
        let n = ChannelDescriptor::identity(q("A"), q("B")).unwrap();
        let s = signalling_problem(&n).dump_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["embedded"]["blocks"][0], 8);
        assert_eq!(v["sense"], "maximize");
    }
}
