//! Resonant Jaynes–Cummings atom–cavity model and the dynamical supermap built from it.
//!
//! The atom is `S` (`|0⟩` ground, `|1⟩` excited) and the truncated cavity mode `Env` has Fock
//! levels `0..=n_max`. `H = g(σ₊ ⊗ b + σ₋ ⊗ b†)` with `ħ = 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choi::ChannelDescriptor;
use crate::error::{Error, Result};
use crate::signalling::signalling_power;
use crate::tensor::{LabeledOperator, Wire};

pub const ATOM: &str = "S";
pub const CAVITY: &str = "Env";
/// Largest tolerated population of the top Fock level.
pub const LEAK_TOL: f64 = 1e-10;

type CMat = DMatrix<Complex64>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JcConfig {
    pub g: f64,
    pub n_max: usize,
    /// Cavity state at time 0.
    pub initial_env: LabeledOperator,
    /// Atom state at time 0; the channel construction feeds every operator-basis element
    /// instead, so this only enters [`reduced_trajectory`].
    pub initial_atom: LabeledOperator,
    /// State prepared in the trace-and-prepare slot.
    pub varpi: LabeledOperator,
}

impl JcConfig {
    /// Cavity in `|1⟩`, atom maximally mixed, `ϖ = |0⟩⟨0|`, `n_max = 4`, `g = 1`.
    pub fn standard() -> Result<Self> {
        Self::with_fock(1.0, 4, 1)
    }

    pub fn with_fock(g: f64, n_max: usize, fock: usize) -> Result<Self> {
        if n_max < 2 || fock > n_max {
            return Err(Error::InvalidArgument(format!("need 2 <= n_max and fock <= n_max (got {n_max}, {fock})")));
        }
        Ok(JcConfig {
            g,
            n_max,
            initial_env: LabeledOperator::basis_projector(Wire::new(CAVITY, n_max + 1), fock)?,
            initial_atom: LabeledOperator::identity(vec![Wire::new(ATOM, 2)])?.scale(0.5),
            varpi: LabeledOperator::basis_projector(Wire::new(ATOM, 2), 0)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.g.is_nan() || self.g < 0.0 || self.n_max < 2 {
            return Err(Error::InvalidArgument("need g >= 0 and n_max >= 2".into()));
        }
        let checks = [
            (&self.initial_env, self.n_max + 1, "initial_env"),
            (&self.initial_atom, 2, "initial_atom"),
            (&self.varpi, 2, "varpi"),
        ];
        for (op, d, name) in checks {
            if op.dim() != d {
                return Err(Error::DimensionMismatch(format!("{name} has dimension {}, expected {d}", op.dim())));
            }
            let r = op.check_hermitian_psd(1e-9);
            if !r.is_psd(1e-9) || (op.trace().re - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("{name} is not a density operator")));
            }
        }
        Ok(())
    }

    fn cav_dim(&self) -> usize {
        self.n_max + 1
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(−iH(t1 − t0))` on atom ⊗ cavity, built from the closed-form 2×2 rotations in each
/// excitation sector `{|1,n−1⟩, |0,n⟩}`. The state `|1,n_max⟩` has no partner inside the
/// truncation and is left invariant.
pub fn jc_unitary_matrix(g: f64, n_max: usize, t1: f64, t0: f64) -> Result<CMat> {
    if t1 < t0 {
        return Err(Error::InvalidArgument(format!("t1 = {t1} < t0 = {t0}")));
    }
    let nc = n_max + 1;
    let tau = t1 - t0;
    let mut u = CMat::identity(2 * nc, 2 * nc);
    for n in 1..=n_max {
        let e = nc + (n - 1); // |1, n−1⟩
        let gd = n; // |0, n⟩
        let theta = g * (n as f64).sqrt() * tau;
        let (s, co) = theta.sin_cos();
        u[(e, e)] = c(co, 0.0);
        u[(gd, gd)] = c(co, 0.0);
        u[(e, gd)] = c(0.0, -s);
        u[(gd, e)] = c(0.0, -s);
    }
    Ok(u)
}

pub fn jc_unitary(cfg: &JcConfig, t1: f64, t0: f64) -> Result<LabeledOperator> {
    LabeledOperator::new(
        vec![Wire::new(ATOM, 2), Wire::new(CAVITY, cfg.cav_dim())],
        jc_unitary_matrix(cfg.g, cfg.n_max, t1, t0)?,
    )
}

/// Truncated Hamiltonian, for reference and excitation-number checks.
pub fn jc_hamiltonian(g: f64, n_max: usize) -> CMat {
    let nc = n_max + 1;
    let mut h = CMat::zeros(2 * nc, 2 * nc);
    for n in 1..nc {
        let amp = c(g * (n as f64).sqrt(), 0.0);
        // σ₊ ⊗ b : |0,n⟩ → √n |1,n−1⟩
        h[(nc + n - 1, n)] = amp;
        h[(n, nc + n - 1)] = amp;
    }
    h
}

/// `σ₊σ₋ ⊗ id + id ⊗ b†b`.
pub fn excitation_number(n_max: usize) -> CMat {
    let nc = n_max + 1;
    CMat::from_fn(2 * nc, 2 * nc, |r, col| {
        if r == col {
            c((r / nc + r % nc) as f64, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

fn trace_atom(x: &CMat, nc: usize) -> CMat {
    CMat::from_fn(nc, nc, |i, j| x[(i, j)] + x[(nc + i, nc + j)])
}

fn trace_cavity(x: &CMat, nc: usize) -> CMat {
    CMat::from_fn(2, 2, |a, b| (0..nc).map(|n| x[(a * nc + n, b * nc + n)]).sum())
}

fn top_population(x: &CMat, nc: usize) -> f64 {
    (x[(nc - 1, nc - 1)] + x[(2 * nc - 1, 2 * nc - 1)]).re.abs()
}

/// What happens to the cavity between the two unitary stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvMode {
    /// The cavity state is passed on untouched.
    Coherent,
    /// The cavity is measured in the Fock basis and the outcome re-prepared, which makes the
    /// environment a classical memory.
    MeasurePrepare,
}

/// Output channel `M_{t,s}` of the dynamical supermap with the trace-and-prepare channel
/// `id ⊗ ϖ` in the slot: `ρ ↦ Tr_Env U_{t|s}[ϖ ⊗ Tr_S U_{s|0}(ρ ⊗ ϱ_Env)U†_{s|0}]U†_{t|s}`.
pub fn supermap_output_channel(cfg: &JcConfig, s: f64, t: f64) -> Result<ChannelDescriptor> {
    supermap_output_channel_with(cfg, s, t, EnvMode::Coherent)
}

pub fn supermap_output_channel_with(cfg: &JcConfig, s: f64, t: f64, mode: EnvMode) -> Result<ChannelDescriptor> {
    if s < 0.0 || t < s {
        return Err(Error::InvalidArgument(format!("need 0 <= s <= t (got s = {s}, t = {t})")));
    }
    cfg.validate()?;
    let nc = cfg.cav_dim();
    let u1 = jc_unitary_matrix(cfg.g, cfg.n_max, s, 0.0)?;
    let u2 = jc_unitary_matrix(cfg.g, cfg.n_max, t, s)?;
    let env0 = cfg.initial_env.data().clone();
    let varpi = cfg.varpi.data().clone();
    let leak = std::cell::Cell::new(0.0f64);
    let map = |rho: &CMat| -> CMat {
        let x = &u1 * rho.kronecker(&env0) * u1.adjoint();
        leak.set(leak.get().max(top_population(&x, nc)));
        let mut env = trace_atom(&x, nc);
        if mode == EnvMode::MeasurePrepare {
            env = CMat::from_diagonal(&env.diagonal());
        }
        let y = &u2 * varpi.kronecker(&env) * u2.adjoint();
        leak.set(leak.get().max(top_population(&y, nc)));
        trace_cavity(&y, nc)
    };
    let ch = ChannelDescriptor::from_linear_map(map, Wire::new("A", 2), Wire::new("B", 2), 1e-8)?;
    if leak.get() > LEAK_TOL {
        return Err(Error::TruncationLeak { population: leak.get() });
    }
    Ok(ch)
}

/// Reduced atom state `Tr_Env U_{t|0}(ϱ_S ⊗ ϱ_Env)U†` without any intervention.
pub fn reduced_trajectory(cfg: &JcConfig, t: f64) -> Result<LabeledOperator> {
    cfg.validate()?;
    let nc = cfg.cav_dim();
    let u = jc_unitary_matrix(cfg.g, cfg.n_max, t, 0.0)?;
    let x = &u * cfg.initial_atom.data().kronecker(cfg.initial_env.data()) * u.adjoint();
    if top_population(&x, nc) > LEAK_TOL {
        return Err(Error::TruncationLeak {
            population: top_population(&x, nc),
        });
    }
    LabeledOperator::new(vec![Wire::new(ATOM, 2)], trace_cavity(&x, nc))
}

#[derive(Clone, Debug, Serialize)]
pub struct BackflowGrid {
    pub s_values: Vec<f64>,
    pub t_values: Vec<f64>,
    /// `witness[i][j] = S(M_{t_j, s_i}) − 1`, `None` where `s > t`.
    pub witness: Vec<Vec<Option<f64>>>,
}

impl BackflowGrid {
    pub fn max(&self) -> f64 {
        self.witness
            .iter()
            .flatten()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(s, t, witness)` for every defined cell, row-major in `s`.
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for (i, s) in self.s_values.iter().enumerate() {
            for (j, t) in self.t_values.iter().enumerate() {
                if let Some(w) = self.witness[i][j] {
                    out.push((*s, *t, w));
                }
            }
        }
        out
    }
}

/// Quantum-memory witness `S(M_{t,s}) − log₂ 2` on every `s ≤ t` cell, in parallel.
pub fn backflow_scan(cfg: &JcConfig, s_grid: &[f64], t_grid: &[f64], mode: EnvMode) -> Result<BackflowGrid> {
    let sorted = |g: &[f64]| g.windows(2).all(|w| w[0] <= w[1]);
    if !sorted(s_grid) || !sorted(t_grid) {
        return Err(Error::InvalidArgument("grids must be sorted".into()));
    }
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = (0..s_grid.len())
        .flat_map(|i| (0..t_grid.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| s_grid[i] <= t_grid[j])
        .collect();
    let values: Vec<(usize, usize, f64)> = cells
        .par_iter()
        .map(|&(i, j)| {
            let ch = supermap_output_channel_with(cfg, s_grid[i], t_grid[j], mode)?;
            Ok((i, j, signalling_power(&ch)?.s_value - 1.0))
        })
        .collect::<Result<_>>()?;
    let mut witness = vec![vec![None; t_grid.len()]; s_grid.len()];
    for (i, j, w) in values {
        witness[i][j] = Some(w);
    }
    Ok(BackflowGrid {
        s_values: s_grid.to_vec(),
        t_values: t_grid.to_vec(),
        witness,
    })
}
