//! Dense Hermitian eigensolves and the helpers built on them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::operator::ComplexOperator;
use super::tolerance::ToleranceContext;
use crate::error::{Error, Result};
use crate::report::PredicateReport;

/// Largest dimension handed to the dense eigensolver.
pub const DENSE_CAP: usize = 4096;

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.vectors.column(k).into_owned()
    }
}

pub(crate) fn check_cap(dim: usize) -> Result<()> {
    if dim > DENSE_CAP {
        return Err(Error::DenseCapExceeded { dim, cap: DENSE_CAP });
    }
    Ok(())
}

/// Rotates `v` so that its first component above `threshold` is real positive.
pub fn fix_phase(v: &mut DVector<C64>, threshold: f64) {
    if let Some(first) = v.iter().find(|z| z.norm() > threshold).copied() {
        let phase = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Eigendecomposition of a dense Hermitian matrix, ascending, phase fixed.
pub fn hermitian_eigen_dense(a: &DMatrix<C64>) -> Result<EigenDecomposition> {
    let n = a.nrows();
    check_cap(n)?;
    if n == 0 {
        return Ok(EigenDecomposition {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    // Symmetrize so rounding noise in the input cannot break the solver's assumptions.
    let sym = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        fix_phase(&mut v, 1e-8);
        vectors.set_column(k, &v);
        values.push(eig.eigenvalues[i]);
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Eigendecomposition of a Hermitian operator. Rejects inputs whose
/// Hermiticity residual exceeds `eps_proj`.
pub fn hermitian_eigen(a: &ComplexOperator, tol: &ToleranceContext) -> Result<EigenDecomposition> {
    check_cap(a.dim())?;
    let residual = a.hermiticity_residual();
    if residual > tol.eps_proj {
        return Err(Error::NotHermitian { residual });
    }
    hermitian_eigen_dense(&a.to_dense())
}

/// Positive semidefinite square root.
///
/// Eigenvalues with magnitude up to `eps_proj` are set to zero before the
/// root is taken; otherwise roundoff of order 1e-16 would surface as 1e-8.
pub fn hermitian_sqrt(a: &ComplexOperator, tol: &ToleranceContext) -> Result<ComplexOperator> {
    let residual = a.hermiticity_residual();
    if residual > tol.eps_proj {
        return Err(Error::NotHermitian { residual });
    }
    if a.is_diagonal() {
        let mut diag = Vec::with_capacity(a.dim());
        for z in a.diagonal() {
            diag.push(C64::new(clamped_root(z.re, tol)?, 0.0));
        }
        return Ok(ComplexOperator::from_diagonal(&diag));
    }
    let eig = hermitian_eigen(a, tol)?;
    let n = eig.dim();
    let mut roots = Vec::with_capacity(n);
    for &lambda in &eig.values {
        roots.push(clamped_root(lambda, tol)?);
    }
    let v = &eig.vectors;
    let scaled = DMatrix::from_fn(n, n, |r, c| v[(r, c)] * roots[c]);
    ComplexOperator::from_dense(&(scaled * v.adjoint()))
}

fn clamped_root(lambda: f64, tol: &ToleranceContext) -> Result<f64> {
    if lambda < -tol.eps_proj {
        return Err(Error::NotPsd { eigenvalue: lambda });
    }
    Ok(if lambda <= tol.eps_proj {
        0.0
    } else {
        lambda.sqrt()
    })
}

/// `P` is a projection when both `|P - P^dagger|` and `|P^2 - P|` are within `eps_proj`.
pub fn is_projection(p: &ComplexOperator, tol: &ToleranceContext) -> PredicateReport {
    let hermiticity = p.hermiticity_residual();
    let idempotence = p
        .compose(p)
        .and_then(|p2| p2.distance(p))
        .expect("square operator");
    let verdict = hermiticity <= tol.eps_proj && idempotence <= tol.eps_proj;
    let report = PredicateReport::new(verdict)
        .with_residual("hermiticity", hermiticity)
        .with_residual("idempotence", idempotence);
    if verdict {
        report
    } else {
        report.with_witness(
            format!("max |P - P^dagger| = {hermiticity:e}, max |P^2 - P| = {idempotence:e}"),
            Vec::new(),
        )
    }
}

/// Orthonormal basis (as columns) of the range of a Hermitian projection.
pub fn range_basis(p: &ComplexOperator, tol: &ToleranceContext) -> Result<DMatrix<C64>> {
    let eig = hermitian_eigen(p, tol)?;
    let cols: Vec<usize> = (0..eig.dim()).filter(|&k| eig.values[k] > 0.5).collect();
    Ok(DMatrix::from_fn(eig.dim(), cols.len(), |r, c| {
        eig.vectors[(r, cols[c])]
    }))
}

/// Rank of a projection, read off its trace.
pub fn projection_rank(p: &ComplexOperator) -> usize {
    p.trace().re.round().max(0.0) as usize
}
