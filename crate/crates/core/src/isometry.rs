//! Operator predicates: partial isometry, orthogonality preservation,
//! stability on a basis, distinct path generation and power partial isometry.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::operator::ComplexOperator;
use crate::hilbert::spectral::{check_cap, fix_phase, hermitian_eigen_dense, is_projection};
use crate::hilbert::tolerance::ToleranceContext;
use crate::report::PredicateReport;

/// An orthonormal basis: either the computational one or the columns of a
/// unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    Computational { dim: usize },
    Explicit { matrix: ComplexOperator },
}

impl Basis {
    pub fn computational(dim: usize) -> Self {
        Basis::Computational { dim }
    }

    /// Wraps a change-of-basis matrix after checking `B^dagger B = 1`.
    pub fn explicit(matrix: ComplexOperator, tol: &ToleranceContext) -> Result<Self> {
        let gram = matrix.adjoint().compose(&matrix)?;
        let residual = gram.distance(&ComplexOperator::identity(matrix.dim()))?;
        if residual > tol.eps_zero {
            return Err(Error::Precondition(format!(
                "basis is not orthonormal: max |B^dagger B - 1| = {residual:e}"
            )));
        }
        Ok(Basis::Explicit { matrix })
    }

    pub fn from_dense(matrix: &DMatrix<C64>, tol: &ToleranceContext) -> Result<Self> {
        Self::explicit(ComplexOperator::from_dense(matrix)?, tol)
    }

    pub fn dim(&self) -> usize {
        match self {
            Basis::Computational { dim } => *dim,
            Basis::Explicit { matrix } => matrix.dim(),
        }
    }

    pub fn is_computational(&self) -> bool {
        matches!(self, Basis::Computational { .. })
    }

    /// The change-of-basis matrix, columns are basis vectors.
    pub fn matrix(&self) -> ComplexOperator {
        match self {
            Basis::Computational { dim } => ComplexOperator::identity(*dim),
            Basis::Explicit { matrix } => matrix.clone(),
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: self.dim(),
            });
        }
        Ok(())
    }

    /// `B^dagger A B`: the operator expressed in this basis.
    pub fn conjugate(&self, op: &ComplexOperator) -> Result<ComplexOperator> {
        self.check(op.dim())?;
        match self {
            Basis::Computational { .. } => Ok(op.clone()),
            Basis::Explicit { matrix } => matrix.adjoint().compose(op)?.compose(matrix),
        }
    }

    /// `B A B^dagger`: maps an operator given in basis coordinates back.
    pub fn unconjugate(&self, op: &ComplexOperator) -> Result<ComplexOperator> {
        self.check(op.dim())?;
        match self {
            Basis::Computational { .. } => Ok(op.clone()),
            Basis::Explicit { matrix } => matrix.compose(op)?.compose(&matrix.adjoint()),
        }
    }

    /// Coordinates `B^dagger psi`.
    pub fn coordinates(&self, psi: &[C64]) -> Result<Vec<C64>> {
        self.check(psi.len())?;
        match self {
            Basis::Computational { .. } => Ok(psi.to_vec()),
            Basis::Explicit { matrix } => matrix.adjoint().apply(psi),
        }
    }

    /// Basis vector `k` in computational coordinates.
    pub fn vector(&self, k: usize) -> Vec<C64> {
        let mut e = vec![C64::new(0.0, 0.0); self.dim()];
        e[k] = C64::new(1.0, 0.0);
        match self {
            Basis::Computational { .. } => e,
            Basis::Explicit { matrix } => matrix.apply(&e).expect("same dimension"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKind {
    Open,
    Cycle,
}

/// A path of basis indices; for an open chain `T` annihilates the last state
/// and `T^dagger` the first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Chain {
    pub kind: ChainKind,
    pub states: Vec<usize>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Orientation-free and rotation-free form, used to compare path sets.
    pub fn canonical(&self) -> (ChainKind, Vec<usize>) {
        let s = &self.states;
        match self.kind {
            ChainKind::Open => {
                let rev: Vec<usize> = s.iter().rev().copied().collect();
                (ChainKind::Open, s.clone().min(rev))
            }
            ChainKind::Cycle => {
                let n = s.len();
                let mut best: Option<Vec<usize>> = None;
                for start in 0..n {
                    let fwd: Vec<usize> = (0..n).map(|k| s[(start + k) % n]).collect();
                    let bwd: Vec<usize> = (0..n).map(|k| s[(start + n - k) % n]).collect();
                    for cand in [fwd, bwd] {
                        if best.as_ref().is_none_or(|b| cand < *b) {
                            best = Some(cand);
                        }
                    }
                }
                (ChainKind::Cycle, best.unwrap_or_default())
            }
        }
    }
}

/// The distinct paths generated by a step operator on a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub dim: usize,
    pub chains: Vec<Chain>,
    /// Basis indices annihilated by both `T` and `T^dagger`.
    pub zero_length: Vec<usize>,
    /// `T|b> = alpha |b'>` for every index with a successor.
    pub successor_amplitudes: BTreeMap<usize, C64>,
}

impl PathSet {
    /// Index of the chain containing basis state `index`.
    pub fn chain_of(&self, index: usize) -> Option<usize> {
        self.chains.iter().position(|c| c.states.contains(&index))
    }

    pub fn undirected(&self) -> BTreeSet<(ChainKind, Vec<usize>)> {
        self.chains.iter().map(Chain::canonical).collect()
    }

    pub fn open_chains(&self) -> impl Iterator<Item = &Chain> {
        self.chains.iter().filter(|c| c.kind == ChainKind::Open)
    }

    pub fn cycles(&self) -> impl Iterator<Item = &Chain> {
        self.chains.iter().filter(|c| c.kind == ChainKind::Cycle)
    }
}

/// Result of a stability check, with the successor map when it passes.
#[derive(Debug, Clone)]
pub struct Stability {
    pub report: PredicateReport,
    /// `successors[b] = Some((b', alpha))` when `T|b> = alpha|b'>`.
    pub successors: Vec<Option<(usize, C64)>>,
}

fn significant(row: impl Iterator<Item = (usize, C64)>, eps: f64) -> Vec<(usize, C64)> {
    let mut out: Vec<(usize, C64)> = row.filter(|(_, v)| v.norm() > eps).collect();
    out.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()).then(a.0.cmp(&b.0)));
    out
}

/// Looks for the off-diagonal entry of `gram` that explains a failure,
/// returning `(i, k, shared)` where columns `i` and `k` of `op` overlap at row `shared`.
fn overlap_witness(
    op: &ComplexOperator,
    gram: &ComplexOperator,
    eps: f64,
) -> Option<(usize, usize, usize, C64)> {
    let (i, k, g) = gram
        .triplets()
        .filter(|&(r, c, v)| r < c && v.norm() > eps)
        .max_by(|a, b| a.2.norm().total_cmp(&b.2.norm()))?;
    let cols = op.adjoint();
    let rows_i: BTreeSet<usize> = cols.row(i).map(|(r, _)| r).collect();
    let shared = cols.row(k).map(|(r, _)| r).find(|r| rows_i.contains(r))?;
    Some((i, k, shared, g))
}

/// `T` is a partial isometry when `T^dagger T` and `T T^dagger` are projections.
///
/// On failure the witness names two basis states whose images overlap
/// (`indices = [first, second, shared target]`), or two images of one state.
pub fn is_partial_isometry(t: &ComplexOperator, tol: &ToleranceContext) -> PredicateReport {
    let t_adj = t.adjoint();
    let initial = t_adj.compose(t).expect("square");
    let fin = t.compose(&t_adj).expect("square");
    let ri = is_projection(&initial, tol);
    let rf = is_projection(&fin, tol);
    let max = ri
        .residuals
        .values()
        .chain(rf.residuals.values())
        .copied()
        .fold(0.0, f64::max);
    let report = PredicateReport::new(ri.verdict && rf.verdict)
        .absorb("initial", &ri)
        .absorb("final", &rf)
        .with_residual("max", max);
    if report.verdict {
        return report;
    }
    if !ri.verdict {
        if let Some((i, k, r, g)) = overlap_witness(t, &initial, tol.eps_proj) {
            return report.fail(
                format!(
                    "basis states {i} and {k} have overlapping images (<T{i}|T{k}> = {g}); both reach state {r}"
                ),
                vec![i, k, r],
            );
        }
        let bad = (0..t.dim())
            .map(|i| (i, initial.get(i, i).re))
            .find(|&(_, d)| d.abs() > tol.eps_proj && (d - 1.0).abs() > tol.eps_proj);
        if let Some((i, d)) = bad {
            return report.fail(format!("|T e_{i}|^2 = {d}, neither 0 nor 1"), vec![i]);
        }
    }
    if let Some((i, k, r, g)) = overlap_witness(&t_adj, &fin, tol.eps_proj) {
        return report.fail(
            format!("basis state {r} branches into states {i} and {k} (<T*{i}|T*{k}> = {g})"),
            vec![r, i, k],
        );
    }
    let bad = (0..t.dim())
        .map(|i| (i, fin.get(i, i).re))
        .find(|&(_, d)| d.abs() > tol.eps_proj && (d - 1.0).abs() > tol.eps_proj);
    let (desc, idx) = match bad {
        Some((i, d)) => (format!("|T^dagger e_{i}|^2 = {d}, neither 0 nor 1"), vec![i]),
        None => ("Gram operators fail the projection test".to_string(), Vec::new()),
    };
    report.fail(desc, idx)
}

/// `T` is orthogonality preserving when `[T^dagger T, T T^dagger] = 0`.
pub fn is_orthogonality_preserving(t: &ComplexOperator, tol: &ToleranceContext) -> PredicateReport {
    let t_adj = t.adjoint();
    let initial = t_adj.compose(t).expect("square");
    let fin = t.compose(&t_adj).expect("square");
    let comm = initial.commutator(&fin).expect("square");
    let residual = comm.max_abs();
    let report = PredicateReport::new(residual <= tol.eps_comm).with_residual("commutator", residual);
    if report.verdict {
        return report;
    }
    let (r, c, v) = comm
        .triplets()
        .max_by(|a, b| a.2.norm().total_cmp(&b.2.norm()))
        .expect("nonzero commutator");
    report.fail(
        format!("[T^dagger T, T T^dagger] has entry {v} at ({r}, {c})"),
        vec![r, c],
    )
}

/// Largest off-diagonal entries of `B^dagger T^dagger T B` and `B^dagger T T^dagger B`.
pub fn weak_op_residuals(t: &ComplexOperator, basis: &Basis) -> Result<(f64, f64)> {
    let tb = basis.conjugate(t)?;
    let tb_adj = tb.adjoint();
    let forward = tb_adj.compose(&tb)?.off_diagonal_max();
    let backward = tb.compose(&tb_adj)?.off_diagonal_max();
    Ok((forward, backward))
}

/// Joint eigenbasis candidate of `T^dagger T` and `T T^dagger`.
///
/// `T^dagger T` is diagonalized first; eigenvalues within `eps_eig` of their
/// neighbour form a group, inside which `T T^dagger` is diagonalized. No
/// commutation is assumed, so for non-commuting Gram operators the result is
/// simply a basis on which the weak check fails.
pub fn joint_eigenbasis_candidate(t: &ComplexOperator, tol: &ToleranceContext) -> Result<Basis> {
    let t_adj = t.adjoint();
    let initial = t_adj.compose(t)?;
    let fin = t.compose(&t_adj)?;
    if initial.is_diagonal() && fin.is_diagonal() {
        return Ok(Basis::computational(t.dim()));
    }
    let mut triplets = Vec::new();
    let mut col = 0;
    for comp in ComplexOperator::connected_components(&[&initial, &fin]) {
        if comp.len() == 1 {
            triplets.push((comp[0], col, C64::new(1.0, 0.0)));
            col += 1;
            continue;
        }
        check_cap(comp.len())?;
        let a = initial.restrict(&comp)?.to_dense();
        let f = fin.restrict(&comp)?.to_dense();
        let eig = hermitian_eigen_dense(&a)?;
        let mut start = 0;
        while start < eig.dim() {
            let mut end = start + 1;
            while end < eig.dim() && eig.values[end] - eig.values[end - 1] <= tol.eps_eig {
                end += 1;
            }
            let group = eig.vectors.columns(start, end - start).into_owned();
            let inner = group.adjoint() * &f * &group;
            let sub = hermitian_eigen_dense(&inner)?;
            let rotated = &group * &sub.vectors;
            for k in 0..rotated.ncols() {
                let mut v = rotated.column(k).into_owned();
                fix_phase(&mut v, 1e-8);
                for (r, &z) in v.iter().enumerate() {
                    triplets.push((comp[r], col, z));
                }
                col += 1;
            }
            start = end;
        }
    }
    Ok(Basis::Explicit {
        matrix: ComplexOperator::build(t.dim(), triplets),
    })
}

/// A common basis on which `T` and `T^dagger` are weakly orthogonality
/// preserving. Requires `[T^dagger T, T T^dagger] = 0`.
pub fn op_basis(t: &ComplexOperator, tol: &ToleranceContext) -> Result<Basis> {
    let op = is_orthogonality_preserving(t, tol);
    if !op.verdict {
        return Err(Error::Precondition(format!(
            "operator is not orthogonality preserving (commutator {:e})",
            op.residual("commutator").unwrap_or(f64::NAN)
        )));
    }
    let basis = joint_eigenbasis_candidate(t, tol)?;
    let (forward, backward) = weak_op_residuals(t, &basis)?;
    let residual = forward.max(backward);
    if residual > tol.eps_comm {
        return Err(Error::Inconsistent {
            what: "joint eigenbasis post-check".into(),
            residual,
        });
    }
    Ok(basis)
}

/// Checks that `T` and `T^dagger` map each basis vector to a multiple of a
/// basis vector or to zero.
pub fn is_stable_on_basis(t: &ComplexOperator, basis: &Basis, tol: &ToleranceContext) -> Result<Stability> {
    let tb = basis.conjugate(t)?;
    let columns = tb.adjoint();
    let mut successors = vec![None; tb.dim()];
    let mut report = PredicateReport::new(true);
    let mut worst_secondary: f64 = 0.0;
    for b in 0..tb.dim() {
        for (direction, row) in [("T", columns.row(b)), ("T^dagger", tb.row(b))]
            .into_iter()
            .map(|(d, r)| (d, significant(r, tol.eps_zero)))
        {
            if row.len() > 1 {
                worst_secondary = worst_secondary.max(row[1].1.norm());
                if report.verdict {
                    report = report.fail(
                        format!(
                            "{direction} maps basis vector {b} to a superposition: |c_{}| = {:.6}, |c_{}| = {:.6}",
                            row[0].0,
                            row[0].1.norm(),
                            row[1].0,
                            row[1].1.norm()
                        ),
                        vec![b, row[0].0, row[1].0],
                    );
                }
            } else if direction == "T" {
                // Column entries of `columns` are conjugated.
                successors[b] = row.first().map(|&(k, v)| (k, v.conj()));
            }
        }
    }
    let report = report.with_residual("max_secondary_coefficient", worst_secondary);
    Ok(Stability { report, successors })
}

/// Follows successors to build the distinct paths of `T` on `B`.
///
/// Requires forward stability; merges are reported as
/// [`Error::Distinctness`] and non-unit amplitudes as [`Error::NormViolation`].
pub fn extract_paths(t: &ComplexOperator, basis: &Basis, tol: &ToleranceContext) -> Result<PathSet> {
    let tb = basis.conjugate(t)?;
    let n = tb.dim();
    let columns = tb.adjoint();
    let mut succ: Vec<Option<(usize, C64)>> = vec![None; n];
    for (b, slot) in succ.iter_mut().enumerate() {
        let col = significant(columns.row(b), tol.eps_zero);
        if col.len() > 1 {
            return Err(Error::Precondition(format!(
                "operator is not stable on the basis: vector {b} maps to a superposition of {} and {}",
                col[0].0, col[1].0
            )));
        }
        *slot = col.first().map(|&(k, v)| (k, v.conj()));
    }
    let mut pred: Vec<Option<usize>> = vec![None; n];
    for (b, s) in succ.iter().enumerate() {
        if let Some((target, _)) = *s {
            if let Some(first) = pred[target] {
                return Err(Error::Distinctness {
                    first,
                    second: b,
                    target,
                });
            }
            pred[target] = Some(b);
        }
    }
    for (b, s) in succ.iter().enumerate() {
        if let Some((_, alpha)) = *s {
            if (alpha.norm() - 1.0).abs() > tol.eps_zero {
                return Err(Error::NormViolation {
                    index: b,
                    modulus: alpha.norm(),
                });
            }
        }
    }
    // Adjoint consistency: T^dagger must send each target back to its source.
    for target in 0..n {
        let back = significant(tb.row(target), tol.eps_zero);
        match (pred[target], back.first()) {
            (None, None) => {}
            (Some(p), Some(&(q, _))) if back.len() == 1 && p == q => {}
            _ => {
                return Err(Error::Precondition(format!(
                    "adjoint is inconsistent at basis vector {target}"
                )))
            }
        }
    }

    let mut visited = vec![false; n];
    let mut chains = Vec::new();
    let mut zero_length = Vec::new();
    for start in 0..n {
        if visited[start] || pred[start].is_some() {
            continue;
        }
        if succ[start].is_none() {
            visited[start] = true;
            zero_length.push(start);
            continue;
        }
        let mut states = vec![start];
        visited[start] = true;
        let mut cur = start;
        while let Some((next, _)) = succ[cur] {
            visited[next] = true;
            states.push(next);
            cur = next;
        }
        chains.push(Chain {
            kind: ChainKind::Open,
            states,
        });
    }
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut states = vec![start];
        visited[start] = true;
        let mut cur = start;
        while let Some((next, _)) = succ[cur] {
            if next == start {
                break;
            }
            visited[next] = true;
            states.push(next);
            cur = next;
        }
        chains.push(Chain {
            kind: ChainKind::Cycle,
            states,
        });
    }
    let successor_amplitudes = succ
        .iter()
        .enumerate()
        .filter_map(|(b, s)| s.map(|(_, a)| (b, a)))
        .collect();
    Ok(PathSet {
        dim: n,
        chains,
        zero_length,
        successor_amplitudes,
    })
}

/// Partial isometry, orthogonality preserving, stable on `B`, and the paths
/// extract without merges or non-unit amplitudes.
pub fn is_distinct_path_generating(
    t: &ComplexOperator,
    basis: &Basis,
    tol: &ToleranceContext,
) -> Result<PredicateReport> {
    let pi = is_partial_isometry(t, tol);
    let op = is_orthogonality_preserving(t, tol);
    let stable = is_stable_on_basis(t, basis, tol)?;
    let mut report = PredicateReport::new(true)
        .absorb("partial_isometry", &pi)
        .absorb("orthogonality", &op)
        .absorb("stability", &stable.report);
    for (name, sub) in [
        ("partial isometry", &pi),
        ("orthogonality preservation", &op),
        ("stability", &stable.report),
    ] {
        if !sub.verdict {
            let w = sub.witness.clone().expect("failed report has witness");
            return Ok(report.fail(format!("{name} fails: {}", w.description), w.indices));
        }
    }
    match extract_paths(t, basis, tol) {
        Ok(paths) => {
            report = report
                .with_residual("chains", paths.chains.len() as f64)
                .with_residual("zero_length", paths.zero_length.len() as f64);
            Ok(report)
        }
        Err(e) => {
            let indices = match &e {
                Error::Distinctness {
                    first,
                    second,
                    target,
                } => vec![*first, *second, *target],
                Error::NormViolation { index, .. } => vec![*index],
                _ => Vec::new(),
            };
            Ok(report.fail(format!("path extraction fails: {e}"), indices))
        }
    }
}

/// Projection residuals of `I_n` and `F_n` for one power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerResidual {
    pub power: usize,
    /// Idempotence/hermiticity residual of `(T^dagger)^n T^n`.
    pub initial: f64,
    /// Idempotence/hermiticity residual of `T^n (T^dagger)^n`.
    #[serde(rename = "final")]
    pub final_: f64,
    pub partial_isometry: bool,
    /// Largest entry of `T^n`.
    pub norm: f64,
}

/// Residuals for every power `1..=n_max`, without early stopping.
pub fn power_profile(t: &ComplexOperator, n_max: usize, tol: &ToleranceContext) -> Vec<PowerResidual> {
    let mut out = Vec::with_capacity(n_max);
    let mut tn = ComplexOperator::identity(t.dim());
    for power in 1..=n_max {
        tn = tn.compose(t).expect("square");
        let report = is_partial_isometry(&tn, tol);
        let initial = report
            .residual("initial.idempotence")
            .unwrap_or(0.0)
            .max(report.residual("initial.hermiticity").unwrap_or(0.0));
        let final_ = report
            .residual("final.idempotence")
            .unwrap_or(0.0)
            .max(report.residual("final.hermiticity").unwrap_or(0.0));
        out.push(PowerResidual {
            power,
            initial,
            final_,
            partial_isometry: report.verdict,
            norm: tn.max_abs(),
        });
    }
    out
}

/// Every power `T^n`, `1 <= n <= n_max` (default: dimension), is a partial isometry.
///
/// Stops early once both `I_n` and `F_n` repeat: `I_{n+1} = T^dagger I_n T`,
/// so a repeated pair repeats forever.
pub fn is_power_partial_isometry(
    t: &ComplexOperator,
    n_max: Option<usize>,
    tol: &ToleranceContext,
) -> PredicateReport {
    let n_max = n_max.unwrap_or(t.dim()).max(1);
    let mut tn = ComplexOperator::identity(t.dim());
    let mut prev_i = ComplexOperator::identity(t.dim());
    let mut prev_f = prev_i.clone();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for n in 1..=n_max {
        tn = tn.compose(t).expect("square");
        let tn_adj = tn.adjoint();
        let i_n = tn_adj.compose(&tn).expect("square");
        let f_n = tn.compose(&tn_adj).expect("square");
        let ri = is_projection(&i_n, tol);
        let rf = is_projection(&f_n, tol);
        checked = n;
        let residual = ri
            .residuals
            .values()
            .chain(rf.residuals.values())
            .copied()
            .fold(0.0, f64::max);
        worst = worst.max(residual);
        if !(ri.verdict && rf.verdict) {
            let which = if ri.verdict {
                "T^n T^dagger^n"
            } else {
                "T^dagger^n T^n"
            };
            return PredicateReport::new(false)
                .with_residual("powers_checked", n as f64)
                .with_residual("max_residual", worst)
                .with_residual("first_failing_power", n as f64)
                .with_witness(
                    format!("power {n}: {which} is not a projection (residual {residual:e})"),
                    Vec::new(),
                );
        }
        let stable = i_n.distance(&prev_i).expect("square") <= tol.eps_proj
            && f_n.distance(&prev_f).expect("square") <= tol.eps_proj;
        if stable {
            return PredicateReport::new(true)
                .with_residual("powers_checked", n as f64)
                .with_residual("max_residual", worst)
                .with_residual("stabilized_at", n as f64);
        }
        prev_i = i_n;
        prev_f = f_n;
    }
    PredicateReport::new(true)
        .with_residual("powers_checked", checked as f64)
        .with_residual("max_residual", worst)
}

/// For partial isometries, complete orthogonality preservation is
/// equivalent to being a power partial isometry.
pub fn is_completely_orthogonality_preserving(
    t: &ComplexOperator,
    tol: &ToleranceContext,
) -> Result<PredicateReport> {
    let pi = is_partial_isometry(t, tol);
    if !pi.verdict {
        return Err(Error::Precondition(format!(
            "operator is not a partial isometry (residual {:e})",
            pi.residual("max").unwrap_or(f64::NAN)
        )));
    }
    Ok(is_power_partial_isometry(t, None, tol))
}

/// Checks `<T^n b_i | T^n b_k> = 0` and the same for `T^dagger` directly on `B`.
pub fn powers_preserve_orthogonality(
    t: &ComplexOperator,
    basis: &Basis,
    n_max: usize,
    tol: &ToleranceContext,
) -> Result<PredicateReport> {
    let tb = basis.conjugate(t)?;
    let mut pow = ComplexOperator::identity(tb.dim());
    let mut worst: f64 = 0.0;
    for n in 1..=n_max {
        pow = pow.compose(&tb)?;
        if pow.nnz() == 0 {
            break;
        }
        let pow_adj = pow.adjoint();
        for (label, gram) in [
            ("T", pow_adj.compose(&pow)?),
            ("T^dagger", pow.compose(&pow_adj)?),
        ] {
            let off = gram
                .triplets()
                .filter(|&(r, c, _)| r != c)
                .max_by(|a, b| a.2.norm().total_cmp(&b.2.norm()));
            if let Some((i, k, v)) = off {
                worst = worst.max(v.norm());
                if v.norm() > tol.eps_comm {
                    return Ok(PredicateReport::new(false)
                        .with_residual("max_overlap", worst)
                        .with_residual("failing_power", n as f64)
                        .with_witness(
                            format!(
                                "power {n} of {label}: images of basis vectors {i} and {k} overlap by {v}"
                            ),
                            vec![i, k],
                        ));
                }
            }
        }
    }
    Ok(PredicateReport::new(true).with_residual("max_overlap", worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{head_shift, LatticeShape, Topology};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn shift(n: usize, topology: Topology) -> ComplexOperator {
        head_shift(&LatticeShape::new(1, n, topology, false).unwrap())
    }

    fn tol() -> ToleranceContext {
        ToleranceContext::default()
    }

    #[test]
    fn lower_shift_is_partial_isometry() {
        assert!(is_partial_isometry(&shift(3, Topology::Open), &tol()).verdict);
    }

    #[test]
    fn contraction_is_not_partial_isometry() {
        let u1 = ComplexOperator::from_triplets(2, [(1, 0, c(0.5))]).unwrap();
        let r = is_partial_isometry(&u1, &tol());
        assert!(!r.verdict);
        assert_eq!(r.witness.unwrap().indices, vec![0]);
        assert!(is_orthogonality_preserving(&u1, &tol()).verdict);
    }

    #[test]
    fn merging_pair_witness() {
        let t = ComplexOperator::from_triplets(3, [(2, 0, c(1.0)), (2, 1, c(1.0))]).unwrap();
        let r = is_partial_isometry(&t, &tol());
        assert!(!r.verdict);
        assert_eq!(r.witness.unwrap().indices, vec![0, 1, 2]);
    }

    #[test]
    fn non_op_two_by_two() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = ComplexOperator::from_triplets(2, [(1, 0, c(h)), (1, 1, c(h))]).unwrap();
        let r = is_orthogonality_preserving(&t, &tol());
        assert!(!r.verdict);
        // T^dagger T = [[.5,.5],[.5,.5]], T T^dagger = diag(0,1); the commutator has entries of modulus 1/2.
        assert!((r.residual("commutator").unwrap() - 0.5).abs() < 1e-15);
        assert!(op_basis(&t, &tol()).is_err());
    }

    #[test]
    fn op_basis_of_projection_is_computational() {
        let p = ComplexOperator::from_diagonal(&[c(1.0), c(0.0)]);
        assert!(op_basis(&p, &tol()).unwrap().is_computational());
    }

    #[test]
    fn op_basis_for_rotated_operator() {
        // T = W A W^dagger with A a weighted partial permutation.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let w = ComplexOperator::from_triplets(
            3,
            [
                (0, 0, c(h)),
                (0, 1, c(h)),
                (1, 0, c(h)),
                (1, 1, c(-h)),
                (2, 2, c(1.0)),
            ],
        )
        .unwrap();
        let a = ComplexOperator::from_triplets(3, [(1, 0, c(1.0)), (2, 1, c(0.5))]).unwrap();
        let t = w.compose(&a).unwrap().compose(&w.adjoint()).unwrap();
        let basis = op_basis(&t, &tol()).unwrap();
        let (f, b) = weak_op_residuals(&t, &basis).unwrap();
        assert!(f < 1e-12 && b < 1e-12);
    }

    #[test]
    fn paths_of_shifts() {
        let open = extract_paths(&shift(5, Topology::Open), &Basis::computational(5), &tol()).unwrap();
        assert_eq!(open.chains.len(), 1);
        assert_eq!(open.chains[0].kind, ChainKind::Open);
        assert_eq!(open.chains[0].states, vec![0, 1, 2, 3, 4]);
        let cyc = extract_paths(&shift(4, Topology::Cyclic), &Basis::computational(4), &tol()).unwrap();
        assert_eq!(cyc.chains.len(), 1);
        assert_eq!(cyc.chains[0].kind, ChainKind::Cycle);
        assert_eq!(cyc.chains[0].len(), 4);
    }

    #[test]
    fn extract_paths_error_classes() {
        let merge = ComplexOperator::from_triplets(3, [(2, 0, c(1.0)), (2, 1, c(1.0))]).unwrap();
        assert!(matches!(
            extract_paths(&merge, &Basis::computational(3), &tol()),
            Err(Error::Distinctness {
                first: 0,
                second: 1,
                target: 2
            })
        ));
        let scaled = ComplexOperator::from_triplets(2, [(1, 0, c(0.5))]).unwrap();
        assert!(matches!(
            extract_paths(&scaled, &Basis::computational(2), &tol()),
            Err(Error::NormViolation { index: 0, .. })
        ));
    }

    #[test]
    fn fourier_matrix_not_stable() {
        let n = 4;
        let tau = 2.0 * std::f64::consts::PI / n as f64;
        let triplets =
            (0..n).flat_map(|r| (0..n).map(move |k| (r, k, C64::from_polar(0.5, tau * (r * k) as f64))));
        let f = ComplexOperator::from_triplets(n, triplets).unwrap();
        let report = is_distinct_path_generating(&f, &Basis::computational(n), &tol()).unwrap();
        assert!(!report.verdict);
        assert!(report.witness.unwrap().description.contains("stability"));
    }

    #[test]
    fn identity_properties() {
        let id = ComplexOperator::identity(3);
        assert!(is_power_partial_isometry(&id, None, &tol()).verdict);
        assert!(
            is_completely_orthogonality_preserving(&id, &tol())
                .unwrap()
                .verdict
        );
        let paths = extract_paths(&id, &Basis::computational(3), &tol()).unwrap();
        assert_eq!(paths.cycles().count(), 3);
    }

    #[test]
    fn cop_requires_partial_isometry() {
        let u1 = ComplexOperator::from_triplets(2, [(1, 0, c(0.5))]).unwrap();
        assert!(matches!(
            is_completely_orthogonality_preserving(&u1, &tol()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn shift_powers_preserve_orthogonality() {
        let s = shift(6, Topology::Open);
        let r = powers_preserve_orthogonality(&s, &Basis::computational(6), 6, &tol()).unwrap();
        assert!(r.verdict);
    }

    #[test]
    fn canonical_chain_ignores_direction_and_rotation() {
        let a = Chain {
            kind: ChainKind::Cycle,
            states: vec![3, 1, 2],
        };
        let b = Chain {
            kind: ChainKind::Cycle,
            states: vec![1, 3, 2],
        };
        assert_eq!(a.canonical(), b.canonical());
        let o1 = Chain {
            kind: ChainKind::Open,
            states: vec![4, 2],
        };
        let o2 = Chain {
            kind: ChainKind::Open,
            states: vec![2, 4],
        };
        assert_eq!(o1.canonical(), o2.canonical());
    }
}
