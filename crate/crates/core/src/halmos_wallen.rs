//! Defect chains and the Halmos–Wallen decomposition of power partial
//! isometries, plus the counterexample tower of contractions.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::operator::ComplexOperator;
use crate::hilbert::spectral::{hermitian_sqrt, is_projection, projection_rank};
use crate::hilbert::tolerance::ToleranceContext;
use crate::isometry::{extract_paths, is_partial_isometry, Basis, ChainKind, PathSet};
use crate::report::PredicateReport;

/// `I_n = (T^dagger)^n T^n` and `F_n = T^n (T^dagger)^n` up to stabilization.
#[derive(Debug, Clone)]
pub struct DefectChain {
    /// `I_0 ..= I_stop`.
    pub initial: Vec<ComplexOperator>,
    /// `F_0 ..= F_stop`.
    pub final_: Vec<ComplexOperator>,
    /// First `n` with `I_n = I_{n-1}` and `F_n = F_{n-1}`.
    pub stop_index: usize,
}

impl DefectChain {
    pub fn i_inf(&self) -> &ComplexOperator {
        &self.initial[self.stop_index]
    }

    pub fn f_inf(&self) -> &ComplexOperator {
        &self.final_[self.stop_index]
    }

    /// `I_n`, extended past the stop index by its stable value.
    pub fn i(&self, n: usize) -> &ComplexOperator {
        &self.initial[n.min(self.stop_index)]
    }

    pub fn f(&self, n: usize) -> &ComplexOperator {
        &self.final_[n.min(self.stop_index)]
    }

    pub fn initial_ranks(&self) -> Vec<usize> {
        self.initial.iter().map(projection_rank).collect()
    }

    pub fn final_ranks(&self) -> Vec<usize> {
        self.final_.iter().map(projection_rank).collect()
    }

    /// Largest commutator among all chain members.
    pub fn max_commutator(&self) -> f64 {
        let all: Vec<&ComplexOperator> = self.initial.iter().chain(&self.final_).collect();
        let mut worst: f64 = 0.0;
        for (a, x) in all.iter().enumerate() {
            for y in &all[a + 1..] {
                worst = worst.max(x.commutator(y).expect("same dimension").max_abs());
            }
        }
        worst
    }

    /// Largest violation of `I_n I_{n+1} = I_{n+1}` and `F_n F_{n+1} = F_{n+1}`.
    pub fn monotonicity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for chain in [&self.initial, &self.final_] {
            for w in chain.windows(2) {
                let r = w[0].compose(&w[1]).and_then(|p| p.distance(&w[1]));
                worst = worst.max(r.expect("same dimension"));
            }
        }
        worst
    }
}

/// Builds the defect chain, failing with [`Error::PpiViolation`] at the first
/// power whose Gram operators are not projections.
pub fn defect_chain(t: &ComplexOperator, tol: &ToleranceContext) -> Result<DefectChain> {
    let dim = t.dim();
    let id = ComplexOperator::identity(dim);
    let mut initial = vec![id.clone()];
    let mut final_ = vec![id];
    let mut tn = ComplexOperator::identity(dim);
    for n in 1..=dim + 1 {
        tn = tn.compose(t)?;
        let tn_adj = tn.adjoint();
        let i_n = tn_adj.compose(&tn)?;
        let f_n = tn.compose(&tn_adj)?;
        for p in [&i_n, &f_n] {
            let r = is_projection(p, tol);
            if !r.verdict {
                let residual = r.residuals.values().copied().fold(0.0, f64::max);
                return Err(Error::PpiViolation { power: n, residual });
            }
        }
        let stable =
            i_n.distance(&initial[n - 1])? <= tol.eps_proj && f_n.distance(&final_[n - 1])? <= tol.eps_proj;
        initial.push(i_n);
        final_.push(f_n);
        if stable {
            let chain = DefectChain {
                initial,
                final_,
                stop_index: n,
            };
            let comm = chain.max_commutator();
            if comm > tol.eps_comm {
                return Err(Error::Inconsistent {
                    what: "defect chain commutation".into(),
                    residual: comm,
                });
            }
            return Ok(chain);
        }
    }
    Err(Error::Inconsistent {
        what: "defect chain did not stabilize within the dimension".into(),
        residual: f64::NAN,
    })
}

/// Truncated-shift component of index `n`.
#[derive(Debug, Clone)]
pub struct TruncatedShift {
    pub index: usize,
    pub projector: ComplexOperator,
    /// `P_{n,l}` for `l = 1..=n`.
    pub slots: Vec<ComplexOperator>,
}

impl TruncatedShift {
    pub fn rank(&self) -> usize {
        projection_rank(&self.projector)
    }
}

/// How the unitary part's paths look on the computational basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitaryPaths {
    /// Path extraction on the unitary block succeeded.
    pub ballistic_compatible: bool,
    pub cycles: usize,
    pub open_chains: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub chain: DefectChain,
    pub unitary: ComplexOperator,
    pub isometry: ComplexOperator,
    pub coisometry: ComplexOperator,
    pub truncated: Vec<TruncatedShift>,
    pub unitary_paths: UnitaryPaths,
    pub completeness_residual: f64,
    pub orthogonality_residual: f64,
    pub reducing_residual: f64,
}

/// Ranks of the decomposition components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionSummary {
    pub dim: usize,
    pub unitary_rank: usize,
    pub isometry_rank: usize,
    pub coisometry_rank: usize,
    /// `(index, rank)` per truncated shift.
    pub truncated: Vec<(usize, usize)>,
    pub stop_index: usize,
    pub completeness_residual: f64,
    pub unitary_paths: UnitaryPaths,
}

impl Decomposition {
    pub fn truncated_shift(&self, index: usize) -> Option<&TruncatedShift> {
        self.truncated.iter().find(|s| s.index == index)
    }

    pub fn summary(&self) -> DecompositionSummary {
        DecompositionSummary {
            dim: self.unitary.dim(),
            unitary_rank: projection_rank(&self.unitary),
            isometry_rank: projection_rank(&self.isometry),
            coisometry_rank: projection_rank(&self.coisometry),
            truncated: self.truncated.iter().map(|s| (s.index, s.rank())).collect(),
            stop_index: self.chain.stop_index,
            completeness_residual: self.completeness_residual,
            unitary_paths: self.unitary_paths.clone(),
        }
    }

    /// All component projectors: unitary, isometry, coisometry, then truncated shifts.
    pub fn components(&self) -> Vec<&ComplexOperator> {
        let mut out = vec![&self.unitary, &self.isometry, &self.coisometry];
        out.extend(self.truncated.iter().map(|s| &s.projector));
        out
    }
}

fn classify_unitary(t: &ComplexOperator, unitary: &ComplexOperator, tol: &ToleranceContext) -> UnitaryPaths {
    if unitary.nnz() == 0 {
        return UnitaryPaths {
            ballistic_compatible: true,
            cycles: 0,
            open_chains: 0,
            note: None,
        };
    }
    let restricted = t.compose(unitary).expect("same dimension");
    match extract_paths(&restricted, &Basis::computational(t.dim()), tol) {
        Ok(paths) => summarize_unitary(&paths),
        Err(e) => UnitaryPaths {
            ballistic_compatible: false,
            cycles: 0,
            open_chains: 0,
            note: Some(e.to_string()),
        },
    }
}

fn summarize_unitary(paths: &PathSet) -> UnitaryPaths {
    UnitaryPaths {
        ballistic_compatible: true,
        cycles: paths.cycles().count(),
        open_chains: paths.chains.iter().filter(|c| c.kind == ChainKind::Open).count(),
        note: None,
    }
}

/// Halmos–Wallen decomposition of a power partial isometry.
pub fn decompose(t: &ComplexOperator, tol: &ToleranceContext) -> Result<Decomposition> {
    let chain = defect_chain(t, tol)?;
    let dim = t.dim();
    let unitary = chain.i_inf().compose(chain.f_inf())?;
    let isometry = chain.i_inf().sub(&unitary)?;
    let coisometry = chain.f_inf().sub(&unitary)?;
    let mut truncated = Vec::new();
    for n in 1..=chain.stop_index {
        let mut slots = Vec::with_capacity(n);
        let mut projector = ComplexOperator::zero(dim);
        for l in 1..=n {
            let f_part = chain.f(l - 1).sub(chain.f(l))?;
            let i_part = chain.i(n - l).sub(chain.i(n - l + 1))?;
            let slot = f_part.compose(&i_part)?;
            projector = projector.add(&slot)?;
            slots.push(slot);
        }
        if projector.nnz() > 0 {
            truncated.push(TruncatedShift {
                index: n,
                projector,
                slots,
            });
        }
    }

    let mut components: Vec<&ComplexOperator> = vec![&unitary, &isometry, &coisometry];
    components.extend(truncated.iter().map(|s| &s.projector));
    let mut total = ComplexOperator::zero(dim);
    for p in &components {
        total = total.add(p)?;
    }
    let completeness_residual = total.distance(&ComplexOperator::identity(dim))?;
    if completeness_residual > tol.eps_proj {
        return Err(Error::Decomposition(format!(
            "component projectors sum to identity only within {completeness_residual:e}"
        )));
    }
    let mut orthogonality_residual: f64 = 0.0;
    for (a, p) in components.iter().enumerate() {
        for q in &components[a + 1..] {
            orthogonality_residual = orthogonality_residual.max(p.compose(q)?.max_abs());
        }
    }
    if orthogonality_residual > tol.eps_proj {
        return Err(Error::Decomposition(format!(
            "component projectors overlap by {orthogonality_residual:e}"
        )));
    }
    let t_adj = t.adjoint();
    let gram_i = t_adj.compose(t)?;
    let gram_f = t.compose(&t_adj)?;
    let mut reducing_residual: f64 = 0.0;
    for p in &components {
        reducing_residual = reducing_residual
            .max(p.commutator(&gram_i)?.max_abs())
            .max(p.commutator(&gram_f)?.max_abs());
    }
    if reducing_residual > tol.eps_comm {
        return Err(Error::Decomposition(format!(
            "component projectors fail to commute with the Gram operators ({reducing_residual:e})"
        )));
    }
    let unitary_paths = classify_unitary(t, &unitary, tol);
    Ok(Decomposition {
        chain,
        unitary,
        isometry,
        coisometry,
        truncated,
        unitary_paths,
        completeness_residual,
        orthogonality_residual,
        reducing_residual,
    })
}

/// `WV` is a partial isometry iff `V V^dagger` commutes with `W^dagger W`.
/// The verdict states whether the two sides agree.
pub fn hw_product_lemma(
    w: &ComplexOperator,
    v: &ComplexOperator,
    tol: &ToleranceContext,
) -> Result<PredicateReport> {
    for (name, op) in [("W", w), ("V", v)] {
        if !is_partial_isometry(op, tol).verdict {
            return Err(Error::Precondition(format!("{name} is not a partial isometry")));
        }
    }
    let commutator = v
        .compose(&v.adjoint())?
        .commutator(&w.adjoint().compose(w)?)?
        .max_abs();
    let product = is_partial_isometry(&w.compose(v)?, tol);
    let commutes = commutator <= tol.eps_comm;
    let report = PredicateReport::new(commutes == product.verdict)
        .with_residual("commutator", commutator)
        .with_residual("product_pi", if product.verdict { 1.0 } else { 0.0 })
        .absorb("product", &product);
    if report.verdict {
        Ok(report)
    } else {
        Ok(report.fail(
            format!(
                "commutator criterion says {commutes} but the product check says {}",
                product.verdict
            ),
            Vec::new(),
        ))
    }
}

fn check_contraction_parameter(a: C64) -> Result<()> {
    if !(a.norm() < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "|a| must be below 1/2, got {}",
            a.norm()
        )));
    }
    Ok(())
}

/// `U_1 = a (sigma_x - i sigma_y)`: the single entry `2a` at (1, 0).
pub fn contraction_u1(a: C64) -> Result<ComplexOperator> {
    check_contraction_parameter(a)?;
    ComplexOperator::from_triplets(2, [(1, 0, a * 2.0)])
}

/// `U_n = [[U_{n-1}, D], [0, 0]]` with `D = (1 - U_{n-1} U_{n-1}^dagger)^{1/2}`.
///
/// Dimension `2^n`. Powers below `n` are partial isometries, the `n`-th is
/// not and the next vanishes; all three are checked before returning.
pub fn hw_tower(n: usize, a: C64) -> Result<ComplexOperator> {
    if n == 0 {
        return Err(Error::InvalidParameter("tower level must be at least 1".into()));
    }
    if n > 12 {
        return Err(Error::InvalidParameter(format!("tower level {n} exceeds 12")));
    }
    let tol = ToleranceContext::default();
    let mut u = contraction_u1(a)?;
    for _ in 1..n {
        let half = u.dim();
        let defect = ComplexOperator::identity(half).sub(&u.compose(&u.adjoint())?)?;
        let d = hermitian_sqrt(&defect, &tol)?;
        let triplets = u
            .triplets()
            .chain(d.triplets().map(|(r, c, v)| (r, c + half, v)))
            .collect::<Vec<_>>();
        u = ComplexOperator::from_triplets(2 * half, triplets)?;
    }
    verify_tower(&u, n, a, &tol)?;
    Ok(u)
}

fn verify_tower(u: &ComplexOperator, n: usize, a: C64, tol: &ToleranceContext) -> Result<()> {
    let mut power = ComplexOperator::identity(u.dim());
    for k in 1..=n + 1 {
        power = power.compose(u)?;
        let pi = is_partial_isometry(&power, tol).verdict;
        let ok = match k.cmp(&n) {
            std::cmp::Ordering::Less => pi,
            // a = 0 degenerates to the zero operator, which is trivially partial-isometric.
            std::cmp::Ordering::Equal => !pi || a.norm() == 0.0,
            std::cmp::Ordering::Greater => power.max_abs() <= tol.eps_zero,
        };
        if !ok {
            return Err(Error::Construction(format!(
                "tower U_{n}: power {k} has the wrong partial-isometry status"
            )));
        }
    }
    Ok(())
}

/// Block-diagonal sum of `U_n` over the positions `n` (1-based) where `s` is 1.
pub fn hw_direct_sum(s: &[bool], a: C64) -> Result<ComplexOperator> {
    let blocks = s
        .iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(k, _)| hw_tower(k + 1, a))
        .collect::<Result<Vec<_>>>()?;
    if blocks.is_empty() {
        return Err(Error::InvalidParameter("selection sequence has no 1s".into()));
    }
    Ok(ComplexOperator::block_diagonal(&blocks))
}
