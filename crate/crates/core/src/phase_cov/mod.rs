//! Phase-covariant qubit dynamics: closed-form Choi operator, `S` and `P`, backflow conditions
//! and the divisibility thresholds of the κ-model.
//!
//! Master equation rates `γ₊, γ₋, γ_z` enter with a factor ½, so with `Ω = 1`
//! `ρ₁₁(t) = G² ρ₁₁(0) + H` and `ρ₀₁(t) = G Γ_z ρ₀₁(0)` where
//! `G = exp(−¼∫(γ₊+γ₋))`, `Γ_z = exp(−∫γ_z)` and `H = ½∫₀ᵗ G(t,s)² γ₊(s) ds`.

pub mod quadrature;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{LabeledOperator, Wire};
use quadrature::{cumulative, integrate};

/// Default absolute tolerance for rate integrals.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rates {
    pub plus: f64,
    pub minus: f64,
    pub z: f64,
}

impl Rates {
    pub fn sum(&self) -> f64 {
        self.plus + self.minus
    }
}

type RateFn = Arc<dyn Fn(f64) -> Rates + Send + Sync>;

#[derive(Clone)]
pub enum RateModel {
    Constant { gamma_plus: f64, gamma_minus: f64, gamma_z: f64 },
    /// `γ₊ = γ₋ = γ/2`, `γ_z = −(γ/4) tanh(γt/4)`.
    EternalNm { gamma: f64 },
    /// `γ₊ = e^{−t/2}`, `γ₋ = e^{−t/4}`, `γ_z = (κ/2) e^{−3t/8} cos 2t`.
    Kappa { kappa: f64 },
    Custom { name: String, rates: RateFn },
}

impl fmt::Debug for RateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateModel::Constant {
                gamma_plus,
                gamma_minus,
                gamma_z,
            } => write!(f, "constant(gamma_plus={gamma_plus}, gamma_minus={gamma_minus}, gamma_z={gamma_z})"),
            RateModel::EternalNm { gamma } => write!(f, "eternal(gamma={gamma})"),
            RateModel::Kappa { kappa } => write!(f, "kappa(kappa={kappa})"),
            RateModel::Custom { name, .. } => write!(f, "custom({name})"),
        }
    }
}

impl RateModel {
    pub fn custom(name: impl Into<String>, rates: impl Fn(f64) -> Rates + Send + Sync + 'static) -> Self {
        RateModel::Custom {
            name: name.into(),
            rates: Arc::new(rates),
        }
    }

    /// Built-in model from a name and `key=value` parameters.
    pub fn from_name(name: &str, params: &[(String, f64)]) -> Result<Self> {
        let get = |key: &str, default: f64| -> f64 {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .unwrap_or(default)
        };
        let allowed: &[&str] = match name {
            "constant" => &["gamma_plus", "gamma_minus", "gamma_z"],
            "eternal" | "eternal-nm" => &["gamma"],
            "kappa" => &["kappa"],
            _ => return Err(Error::InvalidArgument(format!("unknown rate model `{name}`"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!("model `{name}` has no parameter `{k}`")));
        }
        Ok(match name {
            "constant" => RateModel::Constant {
                gamma_plus: get("gamma_plus", 0.0),
                gamma_minus: get("gamma_minus", 1.0),
                gamma_z: get("gamma_z", 0.0),
            },
            "kappa" => RateModel::Kappa { kappa: get("kappa", 1.0) },
            _ => {
                let gamma = get("gamma", 1.0);
                if gamma <= 0.0 {
                    return Err(Error::InvalidArgument("gamma must be positive".into()));
                }
                RateModel::EternalNm { gamma }
            }
        })
    }

    pub fn rates(&self, t: f64) -> Rates {
        match self {
            RateModel::Constant {
                gamma_plus,
                gamma_minus,
                gamma_z,
            } => Rates {
                plus: *gamma_plus,
                minus: *gamma_minus,
                z: *gamma_z,
            },
            RateModel::EternalNm { gamma } => Rates {
                plus: gamma / 2.0,
                minus: gamma / 2.0,
                z: eternal_nm_rate(*gamma, t),
            },
            RateModel::Kappa { kappa } => Rates {
                plus: (-t / 2.0).exp(),
                minus: (-t / 4.0).exp(),
                z: kappa / 2.0 * (-3.0 * t / 8.0).exp() * (2.0 * t).cos(),
            },
            RateModel::Custom { rates, .. } => rates(t),
        }
    }
}

/// `γ_z(t) = −(γ/4) tanh(γt/4)`.
pub fn eternal_nm_rate(gamma: f64, t: f64) -> f64 {
    -gamma / 4.0 * (gamma * t / 4.0).tanh()
}

/// `16 γ̇_z + γ² − 16 γ_z²` with the analytic derivative `γ̇_z = −(γ²/16) sech²(γt/4)`.
pub fn eternal_nm_ode_residual(gamma: f64, t: f64) -> f64 {
    let sech = 1.0 / (gamma * t / 4.0).cosh();
    let dot = -gamma * gamma / 16.0 * sech * sech;
    let z = eternal_nm_rate(gamma, t);
    16.0 * dot + gamma * gamma - 16.0 * z * z
}

#[derive(Clone, Debug, Serialize)]
pub struct DynamicsPoint {
    pub t: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "Gamma_z")]
    pub gamma_z: f64,
    pub choi: LabeledOperator,
    pub s_closed: f64,
    pub p_closed: f64,
    /// Smallest Choi eigenvalue; negative values mean the rates do not give a CP map.
    pub min_eigenvalue: f64,
}

impl DynamicsPoint {
    pub fn from_functions(t: f64, g: f64, h: f64, gamma_z: f64) -> Result<Self> {
        let choi = choi_matrix(g, h, gamma_z, "A", "B")?;
        let min_eigenvalue = choi.eigenvalues()[0];
        Ok(DynamicsPoint {
            t,
            g,
            h,
            gamma_z,
            choi,
            s_closed: closed_form_s(g, gamma_z),
            p_closed: closed_form_p(g, gamma_z),
            min_eigenvalue,
        })
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol
    }
}

/// The 4×4 Choi operator on `input ⊗ output`.
pub fn choi_matrix(g: f64, h: f64, gamma_z: f64, input: &str, output: &str) -> Result<LabeledOperator> {
    let c = g * gamma_z;
    LabeledOperator::from_real(
        vec![Wire::new(input, 2), Wire::new(output, 2)],
        &[
            &[1.0 - h, 0.0, 0.0, c],
            &[0.0, h, 0.0, 0.0],
            &[0.0, 0.0, 1.0 - g * g - h, 0.0],
            &[c, 0.0, 0.0, g * g + h],
        ],
    )
}

/// `log₂(1 + G² + 2GΓ_z)`.
pub fn closed_form_s(g: f64, gamma_z: f64) -> f64 {
    (1.0 + g * g + 2.0 * g * gamma_z.abs()).log2()
}

/// `2GΓ_z − G²` when `Γ_z/G > 1`, else `G²`.
pub fn closed_form_p(g: f64, gamma_z: f64) -> f64 {
    let gz = gamma_z.abs();
    if gz > g {
        2.0 * g * gz - g * g
    } else {
        g * g
    }
}

/// `(∫₀ᵗ (γ₊+γ₋), ∫₀ᵗ γ_z)`.
pub fn rate_integrals(model: &RateModel, t: f64, tol: f64) -> Result<(f64, f64)> {
    let sum = integrate(|s| model.rates(s).sum(), 0.0, t, tol)?;
    let z = integrate(|s| model.rates(s).z, 0.0, t, tol)?;
    Ok((sum, z))
}

/// `½ ∫_a^b exp(−½(I(b) − I(s))) γ₊(s) ds` where `I' = γ₊ + γ₋`; the inner integral is
/// evaluated from `a`, so no `G(s)^{−2}` factor can overflow.
fn h_increment(model: &RateModel, a: f64, b: f64, tol: f64) -> Result<f64> {
    let total = integrate(|s| model.rates(s).sum(), a, b, tol * 1e-2)?;
    let inner_tol = (tol * 1e-2).max(1e-15);
    let failed = std::cell::Cell::new(None);
    let v = integrate(
        |s| match integrate(|u| model.rates(u).sum(), a, s, inner_tol) {
            Ok(partial) => 0.5 * (-0.5 * (total - partial)).exp() * model.rates(s).plus,
            Err(e) => {
                failed.set(Some(e));
                0.0
            }
        },
        a,
        b,
        tol,
    )?;
    match failed.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

pub fn evolve(model: &RateModel, t: f64, tol: f64) -> Result<DynamicsPoint> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time {t} must be finite and nonnegative")));
    }
    let (isum, iz) = rate_integrals(model, t, tol)?;
    let h = h_increment(model, 0.0, t, tol)?;
    DynamicsPoint::from_functions(t, (-isum / 4.0).exp(), h, (-iz).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Backflow {
    pub lhs: f64,
    pub branch: Branch,
}

/// `γ₊+γ₋+4γ_z ± (γ₊+γ₋) G/Γ_z`, minus branch iff `Γ_z/G ≥ 1`. A negative value flags
/// information backflow.
pub fn backflow_lhs(r: Rates, g: f64, gamma_z: f64) -> Backflow {
    let ratio = g / gamma_z;
    let base = r.sum() + 4.0 * r.z;
    if gamma_z >= g {
        Backflow {
            lhs: base - r.sum() * ratio,
            branch: Branch::Minus,
        }
    } else {
        Backflow {
            lhs: base + r.sum() * ratio,
            branch: Branch::Plus,
        }
    }
}

/// Condition from `d/dt 2^S ≤ 0`: always the plus branch.
pub fn s_backflow_lhs(r: Rates, g: f64, gamma_z: f64) -> f64 {
    r.sum() + 4.0 * r.z + r.sum() * g / gamma_z
}

/// Condition from `dP/dt ≤ 0`: minus branch when `Γ_z/G ≥ 1`, otherwise `γ₊ + γ₋`.
pub fn p_backflow_lhs(r: Rates, g: f64, gamma_z: f64) -> f64 {
    if gamma_z >= g {
        r.sum() + 4.0 * r.z - r.sum() * g / gamma_z
    } else {
        r.sum()
    }
}

pub fn backflow_condition(model: &RateModel, t: f64, tol: f64) -> Result<Backflow> {
    let (isum, iz) = rate_integrals(model, t, tol)?;
    Ok(backflow_lhs(model.rates(t), (-isum / 4.0).exp(), (-iz).exp()))
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub t: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "Gamma_z")]
    pub gamma_z: f64,
    pub s_bits: f64,
    pub p_value: f64,
    pub backflow_lhs: f64,
}

/// `n` uniformly spaced points on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
}

/// Functions `G, H, Γ_z` along a time grid, accumulated panel by panel.
pub fn scan(model: &RateModel, grid: &[f64], tol: f64) -> Result<Vec<ScanRow>> {
    if grid.iter().any(|t| *t < 0.0) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("time grid must be nonnegative and sorted".into()));
    }
    let mut nodes = vec![0.0];
    nodes.extend(grid.iter().copied().filter(|t| *t > 0.0));
    let isum = cumulative(&|s| model.rates(s).sum(), &nodes, tol)?;
    let iz = cumulative(&|s| model.rates(s).z, &nodes, tol)?;
    let per = (tol / nodes.len() as f64).max(1e-15);
    let mut h = vec![0.0; nodes.len()];
    for k in 1..nodes.len() {
        let decay = (-0.5 * (isum[k] - isum[k - 1])).exp();
        h[k] = decay * h[k - 1] + h_increment(model, nodes[k - 1], nodes[k], per)?;
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &t in grid {
        let k = if t > 0.0 {
            nodes.iter().position(|x| *x == t).unwrap_or(0)
        } else {
            0
        };
        let g = (-isum[k] / 4.0).exp();
        let gz = (-iz[k]).exp();
        rows.push(ScanRow {
            t,
            g,
            h: h[k],
            gamma_z: gz,
            s_bits: closed_form_s(g, gz),
            p_value: closed_form_p(g, gz),
            backflow_lhs: backflow_lhs(model.rates(t), g, gz).lhs,
        });
    }
    Ok(rows)
}

/// Divisibility and distinguishability criteria for the κ-model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Some rate negative.
    Cp,
    /// `√(γ₊γ₋) + 2γ_z < 0`.
    PDivisibility,
    /// `γ₊ + γ₋ + 4γ_z < 0`.
    TraceDistance,
    /// `P`-based backflow condition violated.
    Sp,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [Criterion::Cp, Criterion::PDivisibility, Criterion::TraceDistance, Criterion::Sp];
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdOptions {
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub t_max: f64,
    pub grid: usize,
    /// Local refinement factor around grid minima.
    pub refine: usize,
    pub kappa_tol: f64,
    pub quad_tol: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            kappa_lo: 0.0,
            kappa_hi: 3.0,
            t_max: 20.0,
            grid: 2000,
            refine: 10,
            kappa_tol: 1e-5,
            quad_tol: QUAD_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    pub cp: f64,
    pub p_div: f64,
    pub td: f64,
    pub sp: f64,
    pub options: ThresholdOptions,
}

/// Rate integrals tabulated on a grid, with off-grid values integrated from the node below.
struct Profile<'a> {
    model: &'a RateModel,
    grid: Vec<f64>,
    isum: Vec<f64>,
    iz: Vec<f64>,
    tol: f64,
}

impl<'a> Profile<'a> {
    fn new(model: &'a RateModel, grid: Vec<f64>, tol: f64) -> Result<Self> {
        let isum = cumulative(&|s| model.rates(s).sum(), &grid, tol)?;
        let iz = cumulative(&|s| model.rates(s).z, &grid, tol)?;
        Ok(Profile {
            model,
            grid,
            isum,
            iz,
            tol,
        })
    }

    fn functions(&self, t: f64) -> Result<(f64, f64)> {
        let k = match self.grid.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(k) => return Ok(((-self.isum[k] / 4.0).exp(), (-self.iz[k]).exp())),
            Err(k) => k.saturating_sub(1),
        };
        let a = self.grid[k];
        let ds = integrate(|s| self.model.rates(s).sum(), a, t, self.tol * 1e-3)?;
        let dz = integrate(|s| self.model.rates(s).z, a, t, self.tol * 1e-3)?;
        Ok(((-(self.isum[k] + ds) / 4.0).exp(), (-(self.iz[k] + dz)).exp()))
    }

    fn criterion(&self, c: Criterion, t: f64) -> Result<f64> {
        let r = self.model.rates(t);
        Ok(match c {
            Criterion::Cp => r.plus.min(r.minus).min(r.z),
            Criterion::PDivisibility => (r.plus * r.minus).sqrt() + 2.0 * r.z,
            Criterion::TraceDistance => r.sum() + 4.0 * r.z,
            Criterion::Sp => {
                let (g, gz) = self.functions(t)?;
                p_backflow_lhs(r, g, gz)
            }
        })
    }
}

/// Minimum over `[0, t_max]` of a criterion function: grid scan, ×`refine` resampling around
/// every local minimum, then golden-section search. Returns `(value, t)`.
pub fn criterion_minimum(model: &RateModel, c: Criterion, opts: &ThresholdOptions) -> Result<(f64, f64)> {
    let grid = uniform_grid(opts.t_max, opts.grid.max(3));
    let prof = Profile::new(model, grid.clone(), opts.quad_tol)?;
    let vals: Vec<f64> = grid.iter().map(|&t| prof.criterion(c, t)).collect::<Result<_>>()?;
    let n = grid.len();
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..n {
        let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < n { vals[i + 1] } else { f64::INFINITY };
        if vals[i] < best.0 {
            best = (vals[i], grid[i]);
        }
        if vals[i] > left || vals[i] > right {
            continue;
        }
        let a = grid[i.saturating_sub(1)];
        let b = grid[(i + 1).min(n - 1)];
        let m = opts.refine.max(1) * 2;
        let fine: Vec<f64> = (0..=m).map(|k| a + (b - a) * k as f64 / m as f64).collect();
        let fv: Vec<f64> = fine.iter().map(|&t| prof.criterion(c, t)).collect::<Result<_>>()?;
        let j = (0..fv.len()).min_by(|&x, &y| fv[x].total_cmp(&fv[y])).unwrap_or(0);
        let (mut lo, mut hi) = (fine[j.saturating_sub(1)], fine[(j + 1).min(m)]);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = prof.criterion(c, x1)?;
        let mut f2 = prof.criterion(c, x2)?;
        for _ in 0..60 {
            if hi - lo < 1e-10 {
                break;
            }
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = prof.criterion(c, x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = prof.criterion(c, x2)?;
            }
        }
        for (v, t) in [(fv[j], fine[j]), (f1, x1), (f2, x2)] {
            if v < best.0 {
                best = (v, t);
            }
        }
    }
    Ok(best)
}

/// Smallest κ in `[kappa_lo, kappa_hi]` at which the criterion is violated somewhere on
/// `[0, t_max]`, by bisection.
pub fn kappa_threshold(c: Criterion, opts: &ThresholdOptions) -> Result<f64> {
    let violated = |kappa: f64| -> Result<bool> {
        Ok(criterion_minimum(&RateModel::Kappa { kappa }, c, opts)?.0 < 0.0)
    };
    let (mut lo, mut hi) = (opts.kappa_lo, opts.kappa_hi);
    if violated(lo)? || !violated(hi)? {
        return Err(Error::GridTooCoarse(format!(
            "{c:?} boundary not bracketed by kappa in [{lo}, {hi}]"
        )));
    }
    while hi - lo > opts.kappa_tol {
        let mid = 0.5 * (lo + hi);
        if violated(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn divisibility_thresholds(opts: &ThresholdOptions) -> Result<ThresholdReport> {
    let found: Vec<f64> = Criterion::ALL
        .par_iter()
        .map(|&c| kappa_threshold(c, opts))
        .collect::<Result<_>>()?;
    Ok(ThresholdReport {
        cp: found[0],
        p_div: found[1],
        td: found[2],
        sp: found[3],
        options: opts.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// RK4 integration of the master equation for populations and coherence.
    fn rk4(model: &RateModel, t: f64, p1: f64, coh: f64) -> (f64, f64) {
        let steps = 4000;
        let dt = t / steps as f64;
        let f = |s: f64, y: [f64; 2]| {
            let r = model.rates(s);
            [r.plus / 2.0 * (1.0 - y[0]) - r.minus / 2.0 * y[0], -(r.sum() / 4.0 + r.z) * y[1]]
        };
        let mut y = [p1, coh];
        for k in 0..steps {
            let s = k as f64 * dt;
            let k1 = f(s, y);
            let k2 = f(s + dt / 2.0, [y[0] + dt / 2.0 * k1[0], y[1] + dt / 2.0 * k1[1]]);
            let k3 = f(s + dt / 2.0, [y[0] + dt / 2.0 * k2[0], y[1] + dt / 2.0 * k2[1]]);
            let k4 = f(s + dt, [y[0] + dt * k3[0], y[1] + dt * k3[1]]);
            for i in 0..2 {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        (y[0], y[1])
    }

    #[test]
    fn initial_point_is_identity() {
        let p = evolve(&RateModel::Kappa { kappa: 2.0 }, 0.0, QUAD_TOL).unwrap();
        assert_eq!((p.g, p.h, p.gamma_z), (1.0, 0.0, 1.0));
        assert!((p.s_closed - 2.0).abs() < 1e-15);
        assert!((p.p_closed - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pure_dephasing() {
        let gamma = 0.7;
        let m = RateModel::Constant {
            gamma_plus: 0.0,
            gamma_minus: 0.0,
            gamma_z: gamma,
        };
        let t = 2f64.ln() / gamma;
        let p = evolve(&m, t, QUAD_TOL).unwrap();
        assert!((p.g * p.gamma_z - 0.5).abs() < 1e-10);
        assert!((p.s_closed - 3f64.log2()).abs() < 1e-9);
        assert!((p.p_closed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn damping_matches_master_equation() {
        let gamma = 0.9;
        let m = RateModel::Constant {
            gamma_plus: 0.0,
            gamma_minus: gamma,
            gamma_z: 0.0,
        };
        let t = 1.3;
        let p = evolve(&m, t, QUAD_TOL).unwrap();
        assert!((p.g - (-gamma * t / 4.0).exp()).abs() < 1e-12);
        assert!(p.h.abs() < 1e-15);
        let (p1, coh) = rk4(&m, t, 1.0, 1.0);
        assert!((p1 - p.g * p.g).abs() < 1e-10);
        assert!((coh - p.g * p.gamma_z).abs() < 1e-10);
        assert!((p.p_closed - (2.0 * p.g - p.g * p.g)).abs() < 1e-12);
    }

    #[test]
    fn gain_and_kappa_match_master_equation() {
        for m in [
            RateModel::Constant {
                gamma_plus: 0.4,
                gamma_minus: 0.3,
                gamma_z: 0.1,
            },
            RateModel::Kappa { kappa: 0.8 },
        ] {
            for t in [0.5, 3.0, 7.5] {
                let p = evolve(&m, t, QUAD_TOL).unwrap();
                let (p1_from0, coh) = rk4(&m, t, 0.0, 1.0);
                assert!((p1_from0 - p.h).abs() < 1e-9, "{m:?} {t}");
                assert!((coh - p.g * p.gamma_z).abs() < 1e-9);
                assert!(p.h >= 0.0 && p.h <= 1.0);
                let tp = p.choi.partial_trace(&["B"]).unwrap();
                assert!(tp.max_abs_diff(&LabeledOperator::identity(tp.wires().to_vec()).unwrap()).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn scan_agrees_with_evolve() {
        let m = RateModel::Kappa { kappa: 1.5 };
        let rows = scan(&m, &uniform_grid(6.0, 31), QUAD_TOL).unwrap();
        for row in rows.iter().step_by(7) {
            let p = evolve(&m, row.t, QUAD_TOL).unwrap();
            assert!((row.g - p.g).abs() < 1e-10);
            assert!((row.h - p.h).abs() < 1e-10);
            assert!((row.gamma_z - p.gamma_z).abs() < 1e-10);
        }
    }

    #[test]
    fn eternal_rate() {
        assert_eq!(eternal_nm_rate(1.3, 0.0), 0.0);
        assert!((eternal_nm_rate(1.3, 200.0) + 1.3 / 4.0).abs() < 1e-12);
        for t in [0.1, 1.0, 5.0] {
            assert!(eternal_nm_ode_residual(1.3, t).abs() < 1e-12);
        }
    }

    #[test]
    fn eternal_model_has_zero_lhs() {
        let m = RateModel::EternalNm { gamma: 1.0 };
        for t in [0.0, 0.5, 2.0, 9.0] {
            let b = backflow_condition(&m, t, QUAD_TOL).unwrap();
            assert_eq!(b.branch, Branch::Minus);
            assert!(b.lhs.abs() < 1e-8, "{t} {}", b.lhs);
        }
    }

    #[test]
    fn semigroup_has_no_backflow() {
        let m = RateModel::Constant {
            gamma_plus: 0.2,
            gamma_minus: 1.0,
            gamma_z: 0.3,
        };
        for row in scan(&m, &uniform_grid(10.0, 50), QUAD_TOL).unwrap() {
            assert!(row.backflow_lhs >= 0.0);
        }
    }

    #[test]
    fn kappa_two_shows_backflow() {
        let rows = scan(&RateModel::Kappa { kappa: 2.0 }, &uniform_grid(10.0, 400), QUAD_TOL).unwrap();
        assert!(rows.iter().any(|r| r.backflow_lhs < 0.0));
    }

    #[test]
    fn model_from_name() {
        let m = RateModel::from_name("kappa", &[("kappa".into(), 2.0)]).unwrap();
        assert!((m.rates(0.0).z - 1.0).abs() < 1e-15);
        assert!(RateModel::from_name("kappa", &[("gamma".into(), 2.0)]).is_err());
        assert!(RateModel::from_name("nope", &[]).is_err());
    }
}
