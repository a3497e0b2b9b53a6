//! Primal–dual interior-point method for real block-diagonal semidefinite programs.
//!
//! Solves `min ⟨C,X⟩ s.t. ⟨A_k,X⟩ = b_k, X ⪰ 0` together with its dual
//! `max bᵀy s.t. Z = C − Σ y_k A_k ⪰ 0`, using the HKM search direction with a
//! Mehrotra predictor–corrector from an infeasible start.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Symmetric constraint matrix stored as full-storage triplets `(block, i, j, value)`.
#[derive(Clone, Debug, Default)]
pub struct SparseSym {
    pub entries: Vec<(usize, usize, usize, f64)>,
}

impl SparseSym {
    /// Adds `v` at `(i,j)` and, off the diagonal, at `(j,i)`.
    pub fn push_sym(&mut self, block: usize, i: usize, j: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        self.entries.push((block, i, j, v));
        if i != j {
            self.entries.push((block, j, i, v));
        }
    }

    fn dot(&self, x: &[DMatrix<f64>]) -> f64 {
        self.entries.iter().map(|&(b, i, j, v)| v * x[b][(i, j)]).sum()
    }
}

#[derive(Clone, Debug)]
pub struct RealSdp {
    pub blocks: Vec<usize>,
    pub c: Vec<DMatrix<f64>>,
    pub a: Vec<SparseSym>,
    pub b: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct IpmOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Debug)]
pub struct RealSolution {
    pub x: Vec<DMatrix<f64>>,
    pub y: DVector<f64>,
    pub z: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
    pub iterations: usize,
}

type Blocks = Vec<DMatrix<f64>>;

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn fro(a: &[DMatrix<f64>]) -> f64 {
    inner(a, a).sqrt()
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

impl RealSdp {
    fn apply_a(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(self.a.len(), self.a.iter().map(|ak| ak.dot(x)))
    }

    fn apply_at(&self, y: &DVector<f64>) -> Blocks {
        let mut out: Blocks = self.blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (ak, &yk) in self.a.iter().zip(y.iter()) {
            for &(b, i, j, v) in &ak.entries {
                out[b][(i, j)] += yk * v;
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.c.len() != self.blocks.len() || self.b.len() != self.a.len() {
            return Err(Error::DimensionMismatch("inconsistent SDP data".into()));
        }
        for (c, &n) in self.c.iter().zip(&self.blocks) {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::DimensionMismatch("objective block has wrong size".into()));
            }
        }
        for ak in &self.a {
            for &(b, i, j, _) in &ak.entries {
                if b >= self.blocks.len() || i >= self.blocks[b] || j >= self.blocks[b] {
                    return Err(Error::DimensionMismatch("constraint entry out of range".into()));
                }
            }
        }
        Ok(())
    }
}

/// Largest `α` with `x + α dx ⪰ 0` (infinite if `dx` does not decrease any eigenvalue).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(x.clone())?;
    let l = chol.l();
    let t = l.solve_lower_triangular(dx)?;
    let t2 = l.solve_lower_triangular(&t.transpose())?;
    let min = SymmetricEigen::new(sym(t2)).eigenvalues.min();
    Some(if min < 0.0 { -1.0 / min } else { f64::INFINITY })
}

fn step_length(x: &[DMatrix<f64>], dx: &[DMatrix<f64>]) -> Result<f64> {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        let a = max_step(xb, db)
            .ok_or_else(|| Error::NumericalTrouble("iterate lost positive definiteness".into()))?;
        alpha = alpha.min(a);
    }
    Ok(alpha)
}

fn inverse_pd(z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::new(z.clone())
        .map(|c| sym(c.inverse()))
        .ok_or_else(|| Error::NumericalTrouble("dual slack lost positive definiteness".into()))
}

struct Factor {
    chol: Option<Cholesky<f64, nalgebra::Dyn>>,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl Factor {
    fn new(m: DMatrix<f64>) -> Self {
        match Cholesky::new(m.clone()) {
            Some(c) => Factor {
                chol: Some(c),
                lu: None,
            },
            None => Factor {
                chol: None,
                lu: Some(m.lu()),
            },
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        match (&self.chol, &self.lu) {
            (Some(c), _) => Ok(c.solve(rhs)),
            (None, Some(lu)) => lu
                .solve(rhs)
                .ok_or_else(|| Error::NumericalTrouble("singular Schur complement".into())),
            _ => unreachable!(),
        }
    }
}

/// Schur complement `M_kl = Tr(A_k X A_l Z⁻¹)`, evaluated on the sparse triplets.
fn schur(p: &RealSdp, x: &[DMatrix<f64>], zi: &[DMatrix<f64>]) -> DMatrix<f64> {
    let m = p.a.len();
    let mut out = DMatrix::zeros(m, m);
    for l in 0..m {
        for k in l..m {
            let mut acc = 0.0;
            for &(bk, i, j, v) in &p.a[k].entries {
                for &(bl, pp, q, w) in &p.a[l].entries {
                    if bk == bl {
                        acc += v * w * x[bk][(j, pp)] * zi[bk][(q, i)];
                    }
                }
            }
            out[(k, l)] = acc;
            out[(l, k)] = acc;
        }
    }
    out
}

fn initial_point(p: &RealSdp) -> (Blocks, Blocks) {
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for (bi, &n) in p.blocks.iter().enumerate() {
        let nf = n as f64;
        let mut xi: f64 = 10f64.max(nf.sqrt());
        let mut eta: f64 = 10f64.max(nf.sqrt()).max(p.c[bi].norm());
        for (ak, &bk) in p.a.iter().zip(p.b.iter()) {
            let norm = ak
                .entries
                .iter()
                .filter(|e| e.0 == bi)
                .map(|e| e.3 * e.3)
                .sum::<f64>()
                .sqrt();
            xi = xi.max(nf * (1.0 + bk.abs()) / (1.0 + norm));
            eta = eta.max(norm);
        }
        xs.push(DMatrix::identity(n, n) * xi);
        zs.push(DMatrix::identity(n, n) * eta);
    }
    (xs, zs)
}

/// Runs the interior-point iteration.
pub fn solve(p: &RealSdp, opts: &IpmOptions) -> Result<RealSolution> {
    p.validate()?;
    let m = p.a.len();
    let n_total: usize = p.blocks.iter().sum();
    let (mut x, mut z) = initial_point(p);
    let mut y = DVector::zeros(m);
    let norm_b = p.b.norm();
    let norm_c = fro(&p.c);

    for iter in 0..=opts.max_iter {
        let ax = p.apply_a(&x);
        let rp = &p.b - &ax;
        let aty = p.apply_at(&y);
        let rd: Blocks = p
            .c
            .iter()
            .zip(&z)
            .zip(&aty)
            .map(|((c, z), a)| c - z - a)
            .collect();
        let pobj = inner(&p.c, &x);
        let dobj = p.b.dot(&y);
        let pinf = rp.norm() / (1.0 + norm_b);
        let dinf = fro(&rd) / (1.0 + norm_c);
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

        if pinf <= opts.feas_tol && dinf <= opts.feas_tol && rel_gap <= opts.gap_tol {
            return Ok(RealSolution {
                x,
                y,
                z,
                primal_objective: pobj,
                dual_objective: dobj,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
                relative_gap: rel_gap,
                iterations: iter,
            });
        }
        // improving rays: A*y + Z ≈ 0 with bᵀy > 0, or A(X) ≈ 0 with ⟨C,X⟩ < 0
        if dobj > 0.0 {
            let ray: Blocks = aty.iter().zip(&z).map(|(a, z)| a + z).collect();
            let cert = fro(&ray) / dobj;
            if cert < opts.feas_tol && dobj > 1e6 * (1.0 + norm_c) {
                return Err(Error::Infeasible {
                    kind: "primal",
                    certificate_norm: cert,
                });
            }
        }
        if pobj < 0.0 {
            let cert = ax.norm() / -pobj;
            if cert < opts.feas_tol && -pobj > 1e6 * (1.0 + norm_b) {
                return Err(Error::Infeasible {
                    kind: "dual",
                    certificate_norm: cert,
                });
            }
        }
        if iter == opts.max_iter {
            break;
        }

        let mu = inner(&x, &z) / n_total as f64;
        let zi: Blocks = z.iter().map(inverse_pd).collect::<Result<_>>()?;
        let factor = Factor::new(schur(p, &x, &zi));
        // X Rd Z⁻¹ is shared by predictor and corrector
        let x_rd_zi: Blocks = x
            .iter()
            .zip(&rd)
            .zip(&zi)
            .map(|((x, r), zi)| x * r * zi)
            .collect();

        let direction = |rc_zi: &Blocks| -> Result<(Blocks, DVector<f64>, Blocks)> {
            let g: Blocks = rc_zi.iter().zip(&x_rd_zi).map(|(a, b)| a - b).collect();
            let rhs = &rp - p.apply_a(&g);
            let dy = factor.solve(&rhs)?;
            let atdy = p.apply_at(&dy);
            let dz: Blocks = rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
            let dx: Blocks = rc_zi
                .iter()
                .zip(&x)
                .zip(&dz)
                .zip(&zi)
                .map(|(((rc, x), dz), zi)| sym(rc - x * dz * zi))
                .collect();
            Ok((dx, dy, dz))
        };

        // predictor: Rc = −XZ, so Rc Z⁻¹ = −X
        let rc_zi: Blocks = x.iter().map(|x| -x).collect();
        let (dxa, _, dza) = direction(&rc_zi)?;
        let ap = step_length(&x, &dxa)?.min(1.0);
        let ad = step_length(&z, &dza)?.min(1.0);
        let xa: Blocks = x.iter().zip(&dxa).map(|(x, d)| x + d * ap).collect();
        let za: Blocks = z.iter().zip(&dza).map(|(z, d)| z + d * ad).collect();
        let sigma = (inner(&xa, &za) / inner(&x, &z)).clamp(0.0, 1.0).powi(3);

        // corrector: Rc = σμI − XZ − dXa dZa
        let rc_zi: Blocks = x
            .iter()
            .zip(&zi)
            .zip(dxa.iter().zip(&dza))
            .map(|((x, zi), (dx, dz))| zi * (sigma * mu) - x - dx * dz * zi)
            .collect();
        let (dx, dy, dz) = direction(&rc_zi)?;
        let ap = (0.98 * step_length(&x, &dx)?).min(1.0);
        let ad = (0.98 * step_length(&z, &dz)?).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            return Err(Error::NumericalTrouble(format!(
                "stalled at iteration {iter} (primal infeasibility {pinf:.2e}, dual infeasibility {dinf:.2e}, gap {rel_gap:.2e})"
            )));
        }
        for (xb, d) in x.iter_mut().zip(&dx) {
            *xb += d * ap;
        }
        for (zb, d) in z.iter_mut().zip(&dz) {
            *zb += d * ad;
        }
        y += dy * ad;
    }
    Err(Error::NumericalTrouble(format!(
        "no convergence within {} iterations",
        opts.max_iter
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> IpmOptions {
        IpmOptions {
            feas_tol: 1e-9,
            gap_tol: 1e-9,
            max_iter: 100,
        }
    }

    #[test]
    fn max_eigenvalue_as_sdp() {
        // min ⟨−C, X⟩ s.t. Tr X = 1 → −λ_max(C)
        let c = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let mut tr = SparseSym::default();
        for i in 0..3 {
            tr.push_sym(0, i, i, 1.0);
        }
        let p = RealSdp {
            blocks: vec![3],
            c: vec![-c.clone()],
            a: vec![tr],
            b: DVector::from_element(1, 1.0),
        };
        let s = solve(&p, &opts()).unwrap();
        let lmax = SymmetricEigen::new(c).eigenvalues.max();
        assert!((s.primal_objective + lmax).abs() < 1e-7);
        assert!((s.dual_objective + lmax).abs() < 1e-7);
    }

    #[test]
    fn two_blocks_lp() {
        // min x1 + 2 x2  s.t. x1 + x2 = 1  → 1
        let mut a = SparseSym::default();
        a.push_sym(0, 0, 0, 1.0);
        a.push_sym(1, 0, 0, 1.0);
        let p = RealSdp {
            blocks: vec![1, 1],
            c: vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 2.0)],
            a: vec![a],
            b: DVector::from_element(1, 1.0),
        };
        let s = solve(&p, &opts()).unwrap();
        assert!((s.primal_objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn infeasible_detected() {
        // X ⪰ 0 with Tr X = −1
        let mut tr = SparseSym::default();
        tr.push_sym(0, 0, 0, 1.0);
        tr.push_sym(0, 1, 1, 1.0);
        let p = RealSdp {
            blocks: vec![2],
            c: vec![DMatrix::identity(2, 2)],
            a: vec![tr],
            b: DVector::from_element(1, -1.0),
        };
        let r = solve(&p, &opts());
        assert!(matches!(r, Err(Error::Infeasible { kind: "primal", .. })), "{r:?}");
    }
}
