//! Reduction of complex Hermitian SDPs to real symmetric ones.
//!
//! A Hermitian `H = Hr + i Hi` maps to `emb(H) = [[Hr, −Hi], [Hi, Hr]]`, which is PSD iff `H`
//! is, and `Tr(emb(H) emb(X)) = 2 Tr(HX)`. Objective and constraint matrices are therefore
//! embedded with a factor ½.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::ipm::{RealSdp, SparseSym};

/// Hermitian constraint matrix in full-storage triplets `(block, i, j, H_ij)`; both `(i,j)` and
/// `(j,i)` must be listed for off-diagonal entries.
pub type HermTriplets = Vec<(usize, usize, usize, Complex64)>;

/// `min Σ_b Tr(C_b X_b)` s.t. `Σ_b Tr(H_kb X_b) = rhs_k`, `X_b ⪰ 0` (complex Hermitian blocks).
#[derive(Clone, Debug)]
pub struct ComplexSdp {
    pub blocks: Vec<usize>,
    pub objective: Vec<DMatrix<Complex64>>,
    pub constraints: Vec<HermTriplets>,
    pub rhs: Vec<f64>,
}

/// Real symmetric embedding of a Hermitian matrix.
pub fn embed(h: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = h[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`embed`] that also projects a general real symmetric matrix onto the
/// embedded subspace: `((Y11 + Y22) + i(Y21 − Y12)) / 2`.
pub fn unembed(y: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = y.nrows() / 2;
    DMatrix::from_fn(n, n, |r, c| {
        let re = 0.5 * (y[(r, c)] + y[(n + r, n + c)]);
        let im = 0.5 * (y[(n + r, c)] - y[(r, n + c)]);
        Complex64::new(re, im)
    })
}

impl ComplexSdp {
    pub fn to_real(&self) -> RealSdp {
        let c = self.objective.iter().map(|c| embed(c) * 0.5).collect();
        let a = self
            .constraints
            .iter()
            .map(|h| {
                let mut s = SparseSym::default();
                for &(b, i, j, z) in h {
                    let n = self.blocks[b];
                    if z.re != 0.0 {
                        s.entries.push((b, i, j, 0.5 * z.re));
                        s.entries.push((b, n + i, n + j, 0.5 * z.re));
                    }
                    if z.im != 0.0 {
                        s.entries.push((b, i, n + j, -0.5 * z.im));
                        s.entries.push((b, n + i, j, 0.5 * z.im));
                    }
                }
                s
            })
            .collect();
        RealSdp {
            blocks: self.blocks.iter().map(|n| 2 * n).collect(),
            c,
            a,
            b: DVector::from_column_slice(&self.rhs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, seeded};
    use crate::tensor::Wire;
    use nalgebra::SymmetricEigen;

    #[test]
    fn embedding_preserves_spectrum_sign() {
        let mut rng = seeded(21);
        for _ in 0..50 {
            let h = random_hermitian(vec![Wire::new("A", 4)], &mut rng).unwrap();
            let min_h = SymmetricEigen::new(h.data().clone()).eigenvalues.min();
            for shift in [-0.05, 0.05] {
                let shifted = h.data() + DMatrix::identity(4, 4) * Complex64::new(shift - min_h, 0.0);
                let min_c = SymmetricEigen::new(shifted.clone()).eigenvalues.min();
                let min_r = SymmetricEigen::new(embed(&shifted)).eigenvalues.min();
                assert!((min_c - min_r).abs() < 1e-10);
                assert_eq!(min_c >= -1e-10, min_r >= -1e-10);
                assert_eq!(min_r >= -1e-10, shift > 0.0);
            }
        }
    }

    #[test]
    fn unembed_inverts_embed() {
        let mut rng = seeded(22);
        let h = random_hermitian(vec![Wire::new("A", 3)], &mut rng).unwrap();
        let back = unembed(&embed(h.data()));
        assert!((back - h.data()).norm() < 1e-15);
    }

    #[test]
    fn trace_doubles() {
        let mut rng = seeded(23);
        let a = random_hermitian(vec![Wire::new("A", 3)], &mut rng).unwrap();
        let b = random_hermitian(vec![Wire::new("A", 3)], &mut rng).unwrap();
        let tc = (a.data() * b.data()).trace().re;
        let tr = (embed(a.data()) * embed(b.data())).trace();
        assert!((tr - 2.0 * tc).abs() < 1e-12);
    }
}
