//! Dense complex operators over named tensor wires.
//!
//! A [`LabeledOperator`] is a square matrix acting on the tensor product of an
//! ordered list of [`Wire`]s. The computational basis is used throughout: the
//! leftmost wire is the most significant digit of a row/column index, and the
//! matrix is stored row-major in that basis. Every structural operation
//! (partial trace, partial transpose, permutation, link product) addresses
//! wires by name, never by position.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for Hermiticity / PSD checks on unit-trace-scale operators.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// A named Hilbert-space factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Wire {
    pub name: String,
    pub dim: usize,
}

impl Wire {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Wire {
            name: name.into(),
            dim,
        }
    }
}

impl fmt::Display for Wire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.dim)
    }
}

/// Result of [`LabeledOperator::check_hermitian_psd`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HermitianCheckReport {
    pub is_hermitian: bool,
    /// Largest entry of `|op - op†|`.
    pub max_asymmetry: f64,
    /// Smallest eigenvalue of the Hermitian part `(op + op†)/2`.
    pub min_eigenvalue: f64,
}

impl HermitianCheckReport {
    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_hermitian && self.min_eigenvalue >= -tol
    }
}

/// Dense complex square matrix over an ordered set of named wires.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOperator {
    wires: Vec<Wire>,
    data: DMatrix<Complex64>,
}

fn product(dims: impl IntoIterator<Item = usize>) -> usize {
    dims.into_iter().product()
}

/// Digit table: `table[idx]` holds the mixed-radix digits of `idx` (most significant first).
fn digit_table(dims: &[usize]) -> Vec<Vec<usize>> {
    let n = product(dims.iter().copied());
    (0..n)
        .map(|mut idx| {
            let mut d = vec![0; dims.len()];
            for k in (0..dims.len()).rev() {
                d[k] = idx % dims[k];
                idx /= dims[k];
            }
            d
        })
        .collect()
}

fn compose(digits: impl IntoIterator<Item = (usize, usize)>) -> usize {
    digits.into_iter().fold(0, |acc, (digit, dim)| acc * dim + digit)
}

fn check_unique(wires: &[Wire]) -> Result<()> {
    let mut seen = HashSet::new();
    for w in wires {
        if !seen.insert(w.name.as_str()) {
            return Err(Error::DuplicateWire(w.name.clone()));
        }
    }
    Ok(())
}

impl LabeledOperator {
    pub fn new(wires: Vec<Wire>, data: DMatrix<Complex64>) -> Result<Self> {
        check_unique(&wires)?;
        if let Some(w) = wires.iter().find(|w| w.dim == 0) {
            return Err(Error::DimensionMismatch(format!("wire `{}` has dimension 0", w.name)));
        }
        let side = product(wires.iter().map(|w| w.dim));
        if data.nrows() != side || data.ncols() != side {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, wires require {side}x{side}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(LabeledOperator { wires, data })
    }

    /// Operator with no wires holding a single complex number.
    pub fn scalar(value: Complex64) -> Self {
        LabeledOperator {
            wires: Vec::new(),
            data: DMatrix::from_element(1, 1, value),
        }
    }

    pub fn identity(wires: Vec<Wire>) -> Result<Self> {
        let side = product(wires.iter().map(|w| w.dim));
        Self::new(wires, DMatrix::identity(side, side))
    }

    pub fn zeros(wires: Vec<Wire>) -> Result<Self> {
        let side = product(wires.iter().map(|w| w.dim));
        Self::new(wires, DMatrix::zeros(side, side))
    }

    /// Builds an operator from real row-major entries.
    pub fn from_real(wires: Vec<Wire>, rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("rows are not square".into()));
        }
        let data = DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0));
        Self::new(wires, data)
    }

    /// Rank-one operator `|ψ⟩⟨ψ|` from amplitudes in the wires' computational basis.
    pub fn projector(wires: Vec<Wire>, amplitudes: &[Complex64]) -> Result<Self> {
        let n = amplitudes.len();
        let data = DMatrix::from_fn(n, n, |i, j| amplitudes[i] * amplitudes[j].conj());
        Self::new(wires, data)
    }

    /// `|k⟩⟨k|` on a single wire.
    pub fn basis_projector(wire: Wire, k: usize) -> Result<Self> {
        if k >= wire.dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {k} out of range for {wire}"
            )));
        }
        let mut data = DMatrix::zeros(wire.dim, wire.dim);
        data[(k, k)] = Complex64::new(1.0, 0.0);
        Self::new(vec![wire], data)
    }

    /// Unnormalised maximally entangled operator `Σ_ij |ii⟩⟨jj|` on two equal-dimension wires.
    pub fn max_entangled(a: Wire, b: Wire) -> Result<Self> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch(format!("{a} vs {b}")));
        }
        let d = a.dim;
        let mut data = DMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                data[(i * d + i, j * d + j)] = Complex64::new(1.0, 0.0);
            }
        }
        Self::new(vec![a, b], data)
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn names(&self) -> Vec<&str> {
        self.wires.iter().map(|w| w.name.as_str()).collect()
    }

    pub fn has_wire(&self, name: &str) -> bool {
        self.wires.iter().any(|w| w.name == name)
    }

    pub fn wire(&self, name: &str) -> Result<&Wire> {
        self.wires
            .iter()
            .find(|w| w.name == name)
            .ok_or_else(|| Error::UnknownWire(name.to_string()))
    }

    /// Product of the dimensions of the named wires.
    pub fn dim_of(&self, names: &[&str]) -> Result<usize> {
        names
            .iter()
            .map(|n| self.wire(n).map(|w| w.dim))
            .product()
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.wires
            .iter()
            .position(|w| w.name == name)
            .ok_or_else(|| Error::UnknownWire(name.to_string()))
    }

    fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let p = self.position(n)?;
            if !out.contains(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    fn dims(&self) -> Vec<usize> {
        self.wires.iter().map(|w| w.dim).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn dagger(&self) -> Self {
        LabeledOperator {
            wires: self.wires.clone(),
            data: self.data.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        LabeledOperator {
            wires: self.wires.clone(),
            data: self.data.transpose(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        LabeledOperator {
            wires: self.wires.clone(),
            data: &self.data * Complex64::new(factor, 0.0),
        }
    }

    pub fn scale_c(&self, factor: Complex64) -> Self {
        LabeledOperator {
            wires: self.wires.clone(),
            data: &self.data * factor,
        }
    }

    /// `(op + op†)/2`.
    pub fn hermitian_part(&self) -> Self {
        LabeledOperator {
            wires: self.wires.clone(),
            data: (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0),
        }
    }

    /// Returns `other` with its wires reordered to match `self`.
    pub fn align(&self, other: &LabeledOperator) -> Result<LabeledOperator> {
        if self.wires.len() != other.wires.len() {
            return Err(Error::WireMismatch(format!(
                "{:?} vs {:?}",
                self.names(),
                other.names()
            )));
        }
        for w in &self.wires {
            let o = other
                .wire(&w.name)
                .map_err(|_| Error::WireMismatch(format!("`{}` missing on right", w.name)))?;
            if o.dim != w.dim {
                return Err(Error::DimConflict {
                    name: w.name.clone(),
                    left: w.dim,
                    right: o.dim,
                });
            }
        }
        if self.wires == other.wires {
            return Ok(other.clone());
        }
        other.permute_wires(&self.names())
    }

    pub fn add(&self, other: &LabeledOperator) -> Result<Self> {
        let o = self.align(other)?;
        Ok(LabeledOperator {
            wires: self.wires.clone(),
            data: &self.data + o.data,
        })
    }

    pub fn sub(&self, other: &LabeledOperator) -> Result<Self> {
        let o = self.align(other)?;
        Ok(LabeledOperator {
            wires: self.wires.clone(),
            data: &self.data - o.data,
        })
    }

    /// Matrix product `self · other` on a common wire set.
    pub fn matmul(&self, other: &LabeledOperator) -> Result<Self> {
        let o = self.align(other)?;
        Ok(LabeledOperator {
            wires: self.wires.clone(),
            data: &self.data * o.data,
        })
    }

    /// `Tr(self · other)` on a common wire set.
    pub fn trace_product(&self, other: &LabeledOperator) -> Result<Complex64> {
        let o = self.align(other)?;
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.data[(i, j)] * o.data[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &LabeledOperator) -> Result<f64> {
        let o = self.align(other)?;
        Ok(self
            .data
            .iter()
            .zip(o.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = self.hermitian_part();
        let mut ev: Vec<f64> = SymmetricEigen::new(h.data).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Sum of absolute eigenvalues of the Hermitian part.
    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|x| x.abs()).sum()
    }

    pub fn check_hermitian_psd(&self, tol: f64) -> HermitianCheckReport {
        let adj = self.data.adjoint();
        let max_asymmetry = self
            .data
            .iter()
            .zip(adj.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let min_eigenvalue = self.eigenvalues().first().copied().unwrap_or(0.0);
        HermitianCheckReport {
            is_hermitian: max_asymmetry <= tol,
            max_asymmetry,
            min_eigenvalue,
        }
    }

    /// Kronecker product; `other`'s wires are appended after `self`'s.
    pub fn tensor(&self, other: &LabeledOperator) -> Result<Self> {
        let mut wires = self.wires.clone();
        wires.extend(other.wires.iter().cloned());
        check_unique(&wires)?;
        Ok(LabeledOperator {
            wires,
            data: self.data.kronecker(&other.data),
        })
    }

    /// `self ⊗ id` on the given extra wires.
    pub fn tensor_identity(&self, wires: Vec<Wire>) -> Result<Self> {
        self.tensor(&LabeledOperator::identity(wires)?)
    }

    pub fn partial_trace(&self, names: &[&str]) -> Result<Self> {
        let traced = self.positions(names)?;
        if traced.is_empty() {
            return Ok(self.clone());
        }
        let dims = self.dims();
        let keep: Vec<usize> = (0..dims.len()).filter(|p| !traced.contains(p)).collect();
        let table = digit_table(&dims);
        let keep_dim = product(keep.iter().map(|&p| dims[p]));
        let traced_dim = product(traced.iter().map(|&p| dims[p]));
        let mut keep_of = Vec::with_capacity(table.len());
        let mut buckets = vec![Vec::new(); traced_dim];
        for (idx, d) in table.iter().enumerate() {
            keep_of.push(compose(keep.iter().map(|&p| (d[p], dims[p]))));
            buckets[compose(traced.iter().map(|&p| (d[p], dims[p])))].push(idx);
        }
        let mut out = DMatrix::zeros(keep_dim, keep_dim);
        for bucket in &buckets {
            for &r in bucket {
                for &c in bucket {
                    out[(keep_of[r], keep_of[c])] += self.data[(r, c)];
                }
            }
        }
        Ok(LabeledOperator {
            wires: keep.iter().map(|&p| self.wires[p].clone()).collect(),
            data: out,
        })
    }

    pub fn partial_transpose(&self, names: &[&str]) -> Result<Self> {
        let pos = self.positions(names)?;
        if pos.is_empty() {
            return Ok(self.clone());
        }
        if pos.len() == self.wires.len() {
            return Ok(self.transpose());
        }
        let dims = self.dims();
        let table = digit_table(&dims);
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        let mut rd = vec![0; dims.len()];
        let mut cd = vec![0; dims.len()];
        for r in 0..n {
            for c in 0..n {
                rd.copy_from_slice(&table[r]);
                cd.copy_from_slice(&table[c]);
                for &p in &pos {
                    std::mem::swap(&mut rd[p], &mut cd[p]);
                }
                let r2 = compose(rd.iter().copied().zip(dims.iter().copied()));
                let c2 = compose(cd.iter().copied().zip(dims.iter().copied()));
                out[(r2, c2)] = self.data[(r, c)];
            }
        }
        Ok(LabeledOperator {
            wires: self.wires.clone(),
            data: out,
        })
    }

    /// Reorders the tensor factors; `order` must name every wire exactly once.
    pub fn permute_wires(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.wires.len() {
            return Err(Error::NotAPermutation);
        }
        let mut pos = Vec::with_capacity(order.len());
        for name in order {
            let p = self.position(name).map_err(|_| Error::NotAPermutation)?;
            if pos.contains(&p) {
                return Err(Error::NotAPermutation);
            }
            pos.push(p);
        }
        if pos.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let dims = self.dims();
        let new_dims: Vec<usize> = pos.iter().map(|&p| dims[p]).collect();
        let table = digit_table(&new_dims);
        // new index -> old index
        let map: Vec<usize> = table
            .iter()
            .map(|nd| {
                let mut od = vec![0; dims.len()];
                for (k, &p) in pos.iter().enumerate() {
                    od[p] = nd[k];
                }
                compose(od.into_iter().zip(dims.iter().copied()))
            })
            .collect();
        let n = self.dim();
        let data = DMatrix::from_fn(n, n, |i, j| self.data[(map[i], map[j])]);
        Ok(LabeledOperator {
            wires: pos.iter().map(|&p| self.wires[p].clone()).collect(),
            data,
        })
    }

    pub fn rename(&self, from: &str, to: &str) -> Result<Self> {
        let p = self.position(from)?;
        if from != to && self.has_wire(to) {
            return Err(Error::DuplicateWire(to.to_string()));
        }
        let mut wires = self.wires.clone();
        wires[p].name = to.to_string();
        Ok(LabeledOperator {
            wires,
            data: self.data.clone(),
        })
    }

    /// Renames several wires at once (simultaneous substitution).
    pub fn rename_many(&self, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut wires = self.wires.clone();
        for (from, to) in pairs {
            let p = self.position(from)?;
            wires[p].name = to.to_string();
        }
        check_unique(&wires)?;
        Ok(LabeledOperator {
            wires,
            data: self.data.clone(),
        })
    }

    /// `_X W = Tr_X W ⊗ id_X / dim X`, with the original wire order restored.
    pub fn trace_replace(&self, names: &[&str]) -> Result<Self> {
        if names.is_empty() {
            return Ok(self.clone());
        }
        let d = self.dim_of(names)? as f64;
        let traced: Vec<Wire> = names
            .iter()
            .map(|n| self.wire(n).cloned())
            .collect::<Result<_>>()?;
        let reduced = self.partial_trace(names)?.tensor_identity(traced)?;
        reduced.scale(1.0 / d).permute_wires(&self.names())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&OperatorJson::from(self)).expect("operator JSON serialization")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: OperatorJson = serde_json::from_str(s)?;
        j.try_into()
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

/// On-disk operator format: `{"wires":[{"name":"A","dim":2}],"re":[[..]],"im":[[..]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorJson {
    pub wires: Vec<Wire>,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl From<&LabeledOperator> for OperatorJson {
    fn from(op: &LabeledOperator) -> Self {
        let n = op.dim();
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| f(&op.data[(i, j)])).collect())
                .collect()
        };
        OperatorJson {
            wires: op.wires.clone(),
            re: rows(|z| z.re),
            im: Some(rows(|z| z.im)),
        }
    }
}

impl TryFrom<OperatorJson> for LabeledOperator {
    type Error = Error;

    fn try_from(j: OperatorJson) -> Result<Self> {
        let n = j.re.len();
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !square(&j.re) {
            return Err(Error::Parse("`re` is not a square matrix".into()));
        }
        if let Some(im) = &j.im {
            if !square(im) {
                return Err(Error::Parse("`im` does not match `re`".into()));
            }
        }
        let data = DMatrix::from_fn(n, n, |r, c| {
            let im = j.im.as_ref().map_or(0.0, |m| m[r][c]);
            Complex64::new(j.re[r][c], im)
        });
        LabeledOperator::new(j.wires, data).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl Serialize for LabeledOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabeledOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = OperatorJson::deserialize(d)?;
        LabeledOperator::try_from(j).map_err(serde::de::Error::custom)
    }
}
