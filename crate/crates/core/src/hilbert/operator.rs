//! Square complex operators in compressed sparse row form.
//!
//! Entries are kept in canonical `(row, col)` order with duplicates coalesced
//! on construction, and anything at or below [`DROP_TOLERANCE`] in modulus is
//! discarded. Every operation returns a new value.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Entries with modulus at or below this value are not stored.
pub const DROP_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl ComplexOperator {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, C64::new(1.0, 0.0))
    }

    pub fn scaled_identity(dim: usize, value: C64) -> Self {
        if value.norm() <= DROP_TOLERANCE {
            return Self::zero(dim);
        }
        Self {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            vals: vec![value; dim],
        }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let triplets = diag.iter().enumerate().map(|(i, &v)| (i, i, v));
        Self::build(diag.len(), triplets)
    }

    /// Builds an operator from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let triplets: Vec<_> = triplets.into_iter().collect();
        for &(r, c, _) in &triplets {
            if r >= dim {
                return Err(Error::Range {
                    component: "row",
                    value: r as u64,
                    bound: dim as u64,
                });
            }
            if c >= dim {
                return Err(Error::Range {
                    component: "column",
                    value: c as u64,
                    bound: dim as u64,
                });
            }
        }
        Ok(Self::build(dim, triplets))
    }

    /// Triplet construction for callers that already guarantee the indices.
    pub(crate) fn build<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut entries: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<C64> = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        let mut iter = entries.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v.norm() > DROP_TOLERANCE {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                left: m.nrows(),
                right: m.ncols(),
            });
        }
        let n = m.nrows();
        let mut triplets = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let v = m[(r, c)];
                if v.norm() > DROP_TOLERANCE {
                    triplets.push((r, c, v));
                }
            }
        }
        Ok(Self::build(n, triplets))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        if row >= self.dim {
            return C64::new(0.0, 0.0);
        }
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Nonzero entries of one row as `(col, value)`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// Column `c` as `(row, value)` pairs. Builds the adjoint, so prefer
    /// [`ComplexOperator::adjoint`] when reading many columns.
    pub fn column(&self, col: usize) -> Vec<(usize, C64)> {
        self.triplets()
            .filter(|&(_, c, _)| c == col)
            .map(|(r, _, v)| (r, v))
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut counts = vec![0usize; self.dim + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for i in 0..self.dim {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![C64::new(0.0, 0.0); self.nnz()];
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                let slot = next[c];
                cols[slot] = r;
                vals[slot] = self.vals[k].conj();
                next[c] += 1;
            }
        }
        Self {
            dim: self.dim,
            row_ptr,
            cols,
            vals,
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut acc = vec![C64::new(0.0, 0.0); n];
        let mut mark = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..n {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                let v = acc[c];
                if v.norm() > DROP_TOLERANCE {
                    cols.push(c);
                    vals.push(v);
                }
                acc[c] = C64::new(0.0, 0.0);
                mark[c] = false;
            }
            touched.clear();
            row_ptr.push(cols.len());
        }
        Ok(Self {
            dim: n,
            row_ptr,
            cols,
            vals,
        })
    }

    /// `alpha * self + beta * other`.
    pub fn linear_combination(&self, alpha: C64, other: &Self, beta: C64) -> Result<Self> {
        self.check_dim(other)?;
        let a = self.triplets().map(|(r, c, v)| (r, c, alpha * v));
        let b = other.triplets().map(|(r, c, v)| (r, c, beta * v));
        Ok(Self::build(self.dim, a.chain(b)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.linear_combination(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.linear_combination(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::build(self.dim, self.triplets().map(|(r, c, v)| (r, c, factor * v)))
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::identity(self.dim);
        for _ in 0..n {
            out = out.compose(self).expect("same dimension");
        }
        out
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: x.len(),
            });
        }
        Ok((0..self.dim)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect())
    }

    /// Largest entry modulus; the residual norm used throughout the crate.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max-entry distance between two operators.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.distance(&self.adjoint()).expect("same dimension")
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(r, c, _)| r == c)
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Largest off-diagonal entry modulus.
    pub fn off_diagonal_max(&self) -> f64 {
        self.triplets()
            .filter(|&(r, c, _)| r != c)
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Compression onto the coordinate subspace spanned by `indices`
    /// (in the given order).
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let mut position = vec![usize::MAX; self.dim];
        for (k, &i) in indices.iter().enumerate() {
            if i >= self.dim {
                return Err(Error::Range {
                    component: "restriction index",
                    value: i as u64,
                    bound: self.dim as u64,
                });
            }
            position[i] = k;
        }
        let triplets = indices.iter().enumerate().flat_map(|(k, &i)| {
            let position = &position;
            self.row(i).filter_map(move |(c, v)| {
                let pc = position[c];
                (pc != usize::MAX).then_some((k, pc, v))
            })
        });
        Ok(Self::build(indices.len(), triplets.collect::<Vec<_>>()))
    }

    /// Largest entry coupling `indices` to their complement, in either direction.
    pub fn leakage_from(&self, indices: &[usize]) -> f64 {
        let mut inside = vec![false; self.dim];
        for &i in indices {
            inside[i] = true;
        }
        self.triplets()
            .filter(|&(r, c, _)| inside[r] != inside[c])
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Direct sum in the given block order.
    pub fn block_diagonal(blocks: &[ComplexOperator]) -> Self {
        let dim = blocks.iter().map(|b| b.dim).sum();
        let mut offset = 0;
        let mut triplets = Vec::new();
        for b in blocks {
            triplets.extend(b.triplets().map(|(r, c, v)| (r + offset, c + offset, v)));
            offset += b.dim;
        }
        Self::build(dim, triplets)
    }

    /// Connected components of the undirected sparsity graph of `ops`,
    /// each sorted ascending, ordered by smallest member.
    pub fn connected_components(ops: &[&ComplexOperator]) -> Vec<Vec<usize>> {
        let dim = ops.first().map_or(0, |o| o.dim);
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for op in ops {
            for (r, c, _) in op.triplets() {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..dim {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|g| g[0]);
        out
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }
}
