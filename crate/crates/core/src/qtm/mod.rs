//! Quantum Turing machine step operators built from rule tables.
//!
//! A rule `(l, s) -> (f, d, v)` contributes the term
//! `sum_j |f><l| (x) v_j P_{s,j} U^d P_j`: in head state `l` with bit `s`
//! under the head at site `j`, apply `v` to site `j`, move the head one site
//! in direction `d` and switch to head state `f`.

mod examples;

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::gates::{self, Gate};
use crate::hilbert::operator::ComplexOperator;
use crate::hilbert::tolerance::ToleranceContext;
use crate::hilbert::{LatticeShape, Topology};
use crate::isometry::{
    extract_paths, is_distinct_path_generating, is_orthogonality_preserving, is_partial_isometry, Basis,
    Chain, ChainKind,
};
use crate::report::PredicateReport;

pub use examples::{
    bit_rotation_stable_basis, split_path_segment_start, split_path_stable_basis, ExampleMachine,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    pub fn symbol(self) -> char {
        match self {
            Direction::Right => 'R',
            Direction::Left => 'L',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub l: usize,
    pub s: u8,
    pub f: usize,
    pub d: Direction,
    pub v: Gate,
}

impl Rule {
    pub fn new(l: usize, s: u8, f: usize, d: Direction, v: Gate) -> Self {
        Self { l, s, f, d, v }
    }
}

/// A machine: head-state count and at most one rule per `(l, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleTable {
    pub n_head: usize,
    pub rules: Vec<Rule>,
}

impl RuleTable {
    pub fn new(n_head: usize, rules: Vec<Rule>, tol: &ToleranceContext) -> Result<Self> {
        if n_head == 0 {
            return Err(Error::InvalidParameter("n_head must be positive".into()));
        }
        let mut seen = BTreeMap::new();
        for (k, r) in rules.iter().enumerate() {
            if r.l >= n_head {
                return Err(Error::Range {
                    component: "rule head state",
                    value: r.l as u64,
                    bound: n_head as u64,
                });
            }
            if r.f >= n_head {
                return Err(Error::Range {
                    component: "rule target head state",
                    value: r.f as u64,
                    bound: n_head as u64,
                });
            }
            if r.s > 1 {
                return Err(Error::Range {
                    component: "rule bit",
                    value: u64::from(r.s),
                    bound: 2,
                });
            }
            if let Some(prev) = seen.insert((r.l, r.s), k) {
                return Err(Error::InvalidParameter(format!(
                    "rules {prev} and {k} share the domain pair ({}, {})",
                    r.l, r.s
                )));
            }
            let residual = gates::unitarity_residual(&r.v);
            if residual > tol.eps_zero {
                return Err(Error::NotUnitary { residual });
            }
        }
        Ok(Self { n_head, rules })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn domain(&self) -> Vec<(usize, u8)> {
        self.rules.iter().map(|r| (r.l, r.s)).collect()
    }
}

fn check_shape(rules: &RuleTable, shape: &LatticeShape) -> Result<()> {
    if !shape.spins {
        return Err(Error::Precondition("machines need the spin sector".into()));
    }
    if shape.n_head != rules.n_head {
        return Err(Error::DimensionMismatch {
            left: rules.n_head,
            right: shape.n_head,
        });
    }
    Ok(())
}

fn move_head(shape: &LatticeShape, j: usize, d: Direction) -> Option<usize> {
    let l = shape.length;
    match (d, shape.topology) {
        (Direction::Right, _) if j + 1 < l => Some(j + 1),
        (Direction::Right, Topology::Cyclic) => Some(0),
        (Direction::Left, _) if j > 0 => Some(j - 1),
        (Direction::Left, Topology::Cyclic) => Some(l - 1),
        _ => None,
    }
}

/// The operator of a single rule, summed over sites.
pub fn term_operator(rule: &Rule, shape: &LatticeShape) -> ComplexOperator {
    let mut triplets = Vec::new();
    let spin_dim = shape.spin_dim() as u64;
    for j in 0..shape.length {
        let Some(target_site) = move_head(shape, j, rule.d) else {
            continue;
        };
        for sigma in 0..spin_dim {
            if ((sigma >> j) & 1) as u8 != rule.s {
                continue;
            }
            let src = shape.encode(rule.l, j, sigma).expect("in range");
            let cleared = sigma & !(1 << j);
            for out in 0..2u64 {
                let amp = rule.v[(out as usize, rule.s as usize)];
                if amp.norm() > crate::hilbert::operator::DROP_TOLERANCE {
                    let dst = shape
                        .encode(rule.f, target_site, cleared | (out << j))
                        .expect("in range");
                    triplets.push((dst, src, amp));
                }
            }
        }
    }
    ComplexOperator::build(shape.dim(), triplets)
}

/// One operator per rule, in rule order.
pub fn term_operators(rules: &RuleTable, shape: &LatticeShape) -> Result<Vec<ComplexOperator>> {
    check_shape(rules, shape)?;
    Ok(rules.rules.iter().map(|r| term_operator(r, shape)).collect())
}

/// `T = sum over rules` of the term operators.
pub fn build_step_operator(rules: &RuleTable, shape: &LatticeShape) -> Result<ComplexOperator> {
    let terms = term_operators(rules, shape)?;
    let triplets: Vec<_> = terms.iter().flat_map(|t| t.triplets()).collect();
    Ok(ComplexOperator::build(shape.dim(), triplets))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionXViolation {
    /// Rule indices.
    pub first: usize,
    pub second: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionXReport {
    pub verdict: bool,
    pub violations: Vec<ConditionXViolation>,
}

/// Rules that share a target head state must move the same way and have
/// `<s| v_a^dagger v_b |t> = 0`.
pub fn condition_x(rules: &RuleTable, tol: &ToleranceContext) -> ConditionXReport {
    let mut violations = Vec::new();
    for (a, ra) in rules.rules.iter().enumerate() {
        for (b, rb) in rules.rules.iter().enumerate().skip(a + 1) {
            if ra.f != rb.f {
                continue;
            }
            if ra.d != rb.d {
                violations.push(ConditionXViolation {
                    first: a,
                    second: b,
                    reason: format!(
                        "both reach head state {} but move {:?} and {:?}",
                        ra.f, ra.d, rb.d
                    ),
                });
                continue;
            }
            let overlap = (ra.v.adjoint() * rb.v)[(ra.s as usize, rb.s as usize)];
            if overlap.norm() > tol.eps_zero {
                violations.push(ConditionXViolation {
                    first: a,
                    second: b,
                    reason: format!(
                        "both reach head state {} and <{}|v_a^dagger v_b|{}> = {overlap}",
                        ra.f, ra.s, rb.s
                    ),
                });
            }
        }
    }
    ConditionXReport {
        verdict: violations.is_empty(),
        violations,
    }
}

/// Projection residuals of `I_1`, `F_1` and the cross-term sums that decide them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramReport {
    /// Max entry of `I_1^2 - I_1`.
    pub initial_idempotence: f64,
    /// Max entry of `F_1^2 - F_1`.
    pub final_idempotence: f64,
    /// `sum_{a != b} T_a^dagger T_b`: nonzero when two terms reach the same state.
    pub initial_off_diagonal: f64,
    /// `sum_{a != b} T_a T_b^dagger`.
    pub final_off_diagonal: f64,
    /// `sum_{a,d} sum_{c != a,d} T_a^dagger F_c T_d`.
    pub initial_cross_sum: f64,
    /// `sum_{a != b} F_a F_b`.
    pub final_cross_sum: f64,
    /// Max entry of `I_1^2 - I_1 - (off-diagonal + cross sum)`; zero when the
    /// bookkeeping of the expansion is complete.
    pub expansion_residual: f64,
    pub initial_projection: bool,
    pub final_projection: bool,
}

impl GramReport {
    pub fn passed(&self) -> bool {
        self.initial_projection && self.final_projection
    }
}

/// Expands `I_1 = T^dagger T` and `F_1 = T T^dagger` over the rule terms.
///
/// With every term a partial isometry, `I_1^2 = I_1 + O + C` where
/// `O = sum_{a != d} T_a^dagger T_d` and `C` is the cross sum over a third
/// term. Both parts are reported, along with the residual of that identity.
pub fn gram_conditions(terms: &[ComplexOperator], tol: &ToleranceContext) -> Result<GramReport> {
    let dim = terms.first().map_or(0, ComplexOperator::dim);
    let zero = ComplexOperator::zero(dim);
    let total = terms.iter().try_fold(zero.clone(), |acc, t| acc.add(t))?;
    let total_adj = total.adjoint();
    let i1 = total_adj.compose(&total)?;
    let f1 = total.compose(&total_adj)?;
    let initial_idempotence = i1.compose(&i1)?.distance(&i1)?;
    let final_idempotence = f1.compose(&f1)?.distance(&f1)?;

    let adjoints: Vec<ComplexOperator> = terms.iter().map(ComplexOperator::adjoint).collect();
    let finals: Vec<ComplexOperator> = terms
        .iter()
        .zip(&adjoints)
        .map(|(t, ta)| t.compose(ta))
        .collect::<Result<_>>()?;
    let mut initial_diag = zero.clone();
    for (t, ta) in terms.iter().zip(&adjoints) {
        initial_diag = initial_diag.add(&ta.compose(t)?)?;
    }
    let initial_off = i1.sub(&initial_diag)?;
    let final_diag = finals.iter().try_fold(zero.clone(), |acc, f| acc.add(f))?;
    let final_off = f1.sub(&final_diag)?;

    // sum over c of S_c^dagger F_c S_c with S_c the sum of all other terms.
    let mut cross = zero.clone();
    for (c, fc) in finals.iter().enumerate() {
        let others = total.sub(&terms[c])?;
        cross = cross.add(&others.adjoint().compose(fc)?.compose(&others)?)?;
    }
    let mut final_cross = zero.clone();
    for (a, fa) in finals.iter().enumerate() {
        for (b, fb) in finals.iter().enumerate() {
            if a != b {
                final_cross = final_cross.add(&fa.compose(fb)?)?;
            }
        }
    }
    let expansion_residual = i1
        .compose(&i1)?
        .sub(&i1)?
        .sub(&initial_off)?
        .sub(&cross)?
        .max_abs();
    Ok(GramReport {
        initial_idempotence,
        final_idempotence,
        initial_off_diagonal: initial_off.max_abs(),
        final_off_diagonal: final_off.max_abs(),
        initial_cross_sum: cross.max_abs(),
        final_cross_sum: final_cross.max_abs(),
        expansion_residual,
        initial_projection: initial_idempotence <= tol.eps_proj,
        final_projection: final_idempotence <= tol.eps_proj,
    })
}

/// Every bit action is the identity or a spin flip, up to a global phase.
pub fn is_deterministic(rules: &RuleTable, tol: &ToleranceContext) -> bool {
    rules.rules.iter().all(|r| {
        gates::phase_distance(&r.v, &gates::identity()) <= tol.eps_zero
            || gates::phase_distance(&r.v, &gates::pauli_x()) <= tol.eps_zero
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BallisticVerdict {
    Ballistic,
    PartiallyBallistic,
    NotBallistic,
    Undecided,
}

/// A start state whose forward norm leaves `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormDecay {
    pub start: usize,
    pub norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MachineVerdict {
    pub partial_isometry: PredicateReport,
    pub orthogonality: PredicateReport,
    pub condition_x: ConditionXReport,
    pub deterministic: bool,
    pub ballistic: BallisticVerdict,
    pub evidence: Vec<String>,
    pub norm_decay: Option<NormDecay>,
    /// Complete computational-basis paths on which the machine is stable.
    pub stable_chains: usize,
}

/// Forward norms `|T^n psi0|` for `n = 0..=n_steps`.
pub fn iterate_norm_profile(t: &ComplexOperator, psi0: &[C64], n_steps: usize) -> Result<Vec<f64>> {
    if psi0.len() != t.dim() {
        return Err(Error::DimensionMismatch {
            left: t.dim(),
            right: psi0.len(),
        });
    }
    let columns = t.adjoint();
    let mut state: BTreeMap<usize, C64> = psi0
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > 0.0)
        .map(|(i, &z)| (i, z))
        .collect();
    let mut norms = Vec::with_capacity(n_steps + 1);
    norms.push(sparse_norm(&state));
    for _ in 0..n_steps {
        state = sparse_step(&columns, &state);
        norms.push(sparse_norm(&state));
    }
    Ok(norms)
}

fn sparse_norm(state: &BTreeMap<usize, C64>) -> f64 {
    state.values().fold(0.0, |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Applies `T` given its adjoint (whose rows are conjugated columns of `T`).
fn sparse_step(columns: &ComplexOperator, state: &BTreeMap<usize, C64>) -> BTreeMap<usize, C64> {
    let mut next: BTreeMap<usize, C64> = BTreeMap::new();
    for (&i, &a) in state {
        for (r, v) in columns.row(i) {
            *next.entry(r).or_default() += v.conj() * a;
        }
    }
    next.retain(|_, z| z.norm() > crate::hilbert::operator::DROP_TOLERANCE);
    next
}

/// Complete computational paths (length at least 2) on which `T` and
/// `T^dagger` act with single unit-modulus entries throughout.
pub fn stable_computational_chains(t: &ComplexOperator, tol: &ToleranceContext) -> Vec<Chain> {
    let columns = t.adjoint();
    let single = |row: Vec<(usize, C64)>| -> Option<Option<usize>> {
        let sig: Vec<_> = row.into_iter().filter(|(_, v)| v.norm() > tol.eps_zero).collect();
        match sig.as_slice() {
            [] => Some(None),
            [(k, v)] if (v.norm() - 1.0).abs() <= tol.eps_zero => Some(Some(*k)),
            _ => None,
        }
    };
    let n = t.dim();
    let mut succ = vec![None; n];
    let mut pred = vec![None; n];
    let mut good = vec![false; n];
    for b in 0..n {
        if let (Some(s), Some(p)) = (single(columns.row(b).collect()), single(t.row(b).collect())) {
            good[b] = true;
            succ[b] = s;
            pred[b] = p;
        }
    }
    let mut chains = Vec::new();
    for start in 0..n {
        if !good[start] || pred[start].is_some() || succ[start].is_none() {
            continue;
        }
        let mut states = vec![start];
        let mut cur = start;
        let mut ok = true;
        while let Some(next) = succ[cur] {
            if !good[next] || pred[next] != Some(cur) || states.len() > n {
                ok = false;
                break;
            }
            states.push(next);
            cur = next;
        }
        if ok {
            chains.push(Chain {
                kind: ChainKind::Open,
                states,
            });
        }
    }
    chains
}

/// Decision procedure.
///
/// Deterministic machines are stable on the computational basis by
/// inspection, so partial isometry, orthogonality preservation and path
/// extraction settle the verdict. For other machines a supplied basis is
/// tried; without one the verdict is `undecided` unless forward norm decay
/// from a computational state coexists with complete stable paths, which
/// gives `partially_ballistic`.
pub fn decide_ballistic(
    rules: &RuleTable,
    shape: &LatticeShape,
    basis: Option<&Basis>,
    tol: &ToleranceContext,
) -> Result<MachineVerdict> {
    let t = build_step_operator(rules, shape)?;
    let partial_isometry = is_partial_isometry(&t, tol);
    let orthogonality = is_orthogonality_preserving(&t, tol);
    let cx = condition_x(rules, tol);
    let deterministic = is_deterministic(rules, tol);
    let mut evidence = Vec::new();
    let mut verdict = MachineVerdict {
        partial_isometry: partial_isometry.clone(),
        orthogonality: orthogonality.clone(),
        condition_x: cx,
        deterministic,
        ballistic: BallisticVerdict::Undecided,
        evidence: Vec::new(),
        norm_decay: None,
        stable_chains: 0,
    };

    if deterministic {
        let computational = Basis::computational(t.dim());
        let mut ok = true;
        for (name, r) in [
            ("partial isometry", &partial_isometry),
            ("orthogonality", &orthogonality),
        ] {
            if let Some(w) = &r.witness {
                evidence.push(format!("{name} fails: {}", w.description));
                ok = false;
            }
        }
        if ok {
            match extract_paths(&t, &computational, tol) {
                Ok(paths) => evidence.push(format!(
                    "deterministic rules are stable on the computational basis; {} paths, {} zero-length states",
                    paths.chains.len(),
                    paths.zero_length.len()
                )),
                Err(e) => {
                    evidence.push(format!("path extraction fails: {e}"));
                    ok = false;
                }
            }
        }
        verdict.ballistic = if ok {
            BallisticVerdict::Ballistic
        } else {
            BallisticVerdict::NotBallistic
        };
        verdict.evidence = evidence;
        return Ok(verdict);
    }

    if let Some(b) = basis {
        let report = is_distinct_path_generating(&t, b, tol)?;
        if report.verdict {
            evidence.push("distinct path generating on the supplied basis".into());
            verdict.ballistic = BallisticVerdict::Ballistic;
            verdict.evidence = evidence;
            return Ok(verdict);
        }
        if let Some(w) = report.witness {
            evidence.push(format!("supplied basis rejected: {}", w.description));
        }
    }

    let chains = stable_computational_chains(&t, tol);
    verdict.stable_chains = chains.len();
    let n_steps = 2 * shape.length * shape.n_head + 4;
    let columns = t.adjoint();
    for start in 0..t.dim() {
        let mut state = BTreeMap::from([(start, C64::new(1.0, 0.0))]);
        let mut norms = vec![1.0];
        for _ in 0..n_steps {
            state = sparse_step(&columns, &state);
            let n = sparse_norm(&state);
            norms.push(n);
            if n <= tol.eps_zero {
                break;
            }
        }
        if norms.iter().any(|&n| n > tol.eps_zero && n < 1.0 - 1e-9) {
            verdict.norm_decay = Some(NormDecay { start, norms });
            break;
        }
    }
    match (&verdict.norm_decay, chains.is_empty()) {
        (Some(decay), false) => {
            evidence.push(format!(
                "norm of T^n applied to basis state {} leaves {{0, 1}}; {} complete stable paths elsewhere",
                decay.start,
                chains.len()
            ));
            verdict.ballistic = BallisticVerdict::PartiallyBallistic;
        }
        _ => {
            evidence
                .push("nondeterministic machine: no stable basis supplied and none is searched for".into());
        }
    }
    verdict.evidence = evidence;
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{head_shift, projector, ProjectorKind};

    fn tol() -> ToleranceContext {
        ToleranceContext::default()
    }

    fn shape(n_head: usize, length: usize, topology: Topology) -> LatticeShape {
        LatticeShape::new(n_head, length, topology, true).unwrap()
    }

    #[test]
    fn zero_motion_matches_projector_form() {
        let s = shape(1, 4, Topology::Cyclic);
        let rules = ExampleMachine::ZeroMotion.rules();
        let t = build_step_operator(&rules, &s).unwrap();
        let u = head_shift(&s);
        let mut expected = ComplexOperator::zero(s.dim());
        for j in 0..4 {
            let pj = projector(ProjectorKind::HeadPosition(j), &s).unwrap();
            let p0 = projector(ProjectorKind::Spin { value: 0, site: j }, &s).unwrap();
            expected = expected
                .add(&p0.compose(&u).unwrap().compose(&pj).unwrap())
                .unwrap();
        }
        assert_eq!(t, expected);
    }

    #[test]
    fn rule_counts() {
        assert_eq!(ExampleMachine::SplitPath(gates::fourier()).rules().len(), 5);
        assert_eq!(ExampleMachine::Turnaround(gates::fourier()).rules().len(), 3);
        assert_eq!(ExampleMachine::ZeroMotion.rules().len(), 1);
    }

    #[test]
    fn duplicate_domain_rejected() {
        let r = Rule::new(0, 0, 0, Direction::Right, gates::identity());
        assert!(RuleTable::new(1, vec![r.clone(), r], &tol()).is_err());
    }

    #[test]
    fn condition_x_examples() {
        assert!(condition_x(&ExampleMachine::Turnaround(gates::fourier()).rules(), &tol()).verdict);
        assert!(condition_x(&ExampleMachine::SplitPath(gates::fourier()).rules(), &tol()).verdict);
        let erasure = condition_x(&ExampleMachine::Erasure.rules(), &tol());
        assert!(!erasure.verdict);
        assert_eq!(
            (erasure.violations[0].first, erasure.violations[0].second),
            (0, 1)
        );
        let opposite = RuleTable::new(
            2,
            vec![
                Rule::new(0, 0, 1, Direction::Right, gates::identity()),
                Rule::new(1, 0, 1, Direction::Left, gates::identity()),
            ],
            &tol(),
        )
        .unwrap();
        let r = condition_x(&opposite, &tol());
        assert!(!r.verdict);
        assert!(r.violations[0].reason.contains("move"));
    }

    #[test]
    fn determinism() {
        assert!(is_deterministic(&ExampleMachine::ZeroMotion.rules(), &tol()));
        assert!(!is_deterministic(
            &ExampleMachine::BitRotation(gates::fourier()).rules(),
            &tol()
        ));
        let phased = gates::pauli_x() * C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert!(is_deterministic(
            &ExampleMachine::BitRotation(phased).rules(),
            &tol()
        ));
    }

    #[test]
    fn gram_examples() {
        let s = shape(1, 6, Topology::Open);
        let terms = term_operators(&ExampleMachine::ZeroMotion.rules(), &s).unwrap();
        assert!(gram_conditions(&terms, &tol()).unwrap().passed());
        let s3 = shape(1, 3, Topology::Cyclic);
        let terms = term_operators(&ExampleMachine::Erasure.rules(), &s3).unwrap();
        let g = gram_conditions(&terms, &tol()).unwrap();
        assert!(!g.initial_projection);
        assert!(!g.final_projection);
        assert!(g.initial_off_diagonal > 0.5);
        assert!(g.expansion_residual < 1e-12);
    }

    #[test]
    fn norm_profile_of_zero_operator() {
        let t = ComplexOperator::zero(3);
        let psi = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        assert_eq!(iterate_norm_profile(&t, &psi, 2).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_motion_is_ballistic() {
        let s = shape(1, 5, Topology::Open);
        let v = decide_ballistic(&ExampleMachine::ZeroMotion.rules(), &s, None, &tol()).unwrap();
        assert_eq!(v.ballistic, BallisticVerdict::Ballistic);
    }

    #[test]
    fn erasure_is_not_ballistic() {
        let s = shape(1, 3, Topology::Cyclic);
        let v = decide_ballistic(&ExampleMachine::Erasure.rules(), &s, None, &tol()).unwrap();
        assert_eq!(v.ballistic, BallisticVerdict::NotBallistic);
        assert!(!v.partial_isometry.verdict);
    }
}
