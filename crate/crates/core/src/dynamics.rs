//! Feynman Hamiltonians `H = K (2 - T - T^dagger)`, their spectra against
//! closed forms, time evolution along paths and reconstruction of a step
//! operator from a ballistic Hamiltonian.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::operator::ComplexOperator;
use crate::hilbert::spectral::{check_cap, hermitian_eigen, EigenDecomposition};
use crate::hilbert::tolerance::ToleranceContext;
use crate::isometry::{extract_paths, Basis, Chain, ChainKind, PathSet};

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub matrix: ComplexOperator,
    pub k: f64,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// `H = K (2 - T - T^dagger)`.
pub fn feynman_hamiltonian(t: &ComplexOperator, k: f64) -> Result<Hamiltonian> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidParameter(format!("K must be positive, got {k}")));
    }
    let kc = C64::new(k, 0.0);
    let hop = t.add(&t.adjoint())?;
    let matrix = ComplexOperator::scaled_identity(t.dim(), kc * 2.0).linear_combination(
        C64::new(1.0, 0.0),
        &hop,
        -kc,
    )?;
    let residual = matrix.hermiticity_residual();
    if residual > ToleranceContext::default().eps_zero {
        return Err(Error::NotHermitian { residual });
    }
    Ok(Hamiltonian { matrix, k })
}

/// Dense spectrum, ascending, with phase-fixed eigenvectors.
pub fn spectrum(h: &Hamiltonian, tol: &ToleranceContext) -> Result<EigenDecomposition> {
    hermitian_eigen(&h.matrix, tol)
}

/// Closed-form spectral families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectrumKind {
    /// Cyclic shift on `m + 1` states.
    Cycle { m: usize },
    /// Truncated shift of index `n`.
    TruncatedShift { n: usize },
    /// Standing waves `sin k(n+1)` of a unilateral shift, sampled on `n` sites.
    IsometricStandingWave { n: usize },
    /// States between two barriers separated by `w` zeros (`w + 1` states).
    BoundBand { w: usize },
}

impl SpectrumKind {
    pub fn size(&self) -> usize {
        match *self {
            SpectrumKind::Cycle { m } => m + 1,
            SpectrumKind::TruncatedShift { n } | SpectrumKind::IsometricStandingWave { n } => n,
            SpectrumKind::BoundBand { w } => w + 1,
        }
    }

    /// Allowed momenta in level order `m = 1..=size`.
    pub fn momenta(&self) -> Vec<f64> {
        let size = self.size();
        (1..=size)
            .map(|m| {
                let m = m as f64;
                match *self {
                    SpectrumKind::Cycle { m: big_m } => 2.0 * PI * m / (big_m as f64 + 1.0),
                    SpectrumKind::TruncatedShift { n } | SpectrumKind::IsometricStandingWave { n } => {
                        m * PI / (n as f64 + 1.0)
                    }
                    SpectrumKind::BoundBand { w } => m * PI / (w as f64 + 2.0),
                }
            })
            .collect()
    }

    /// Parses `cycle:M`, `truncated_shift:N`, `isometric:N` or `bound_band:W`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, value) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("expected kind:param, got {spec:?}")))?;
        let v: usize = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad parameter in {spec:?}")))?;
        let kind = match name.trim() {
            "cycle" => SpectrumKind::Cycle { m: v },
            "truncated_shift" => SpectrumKind::TruncatedShift { n: v },
            "isometric" | "isometric_standing_wave" => SpectrumKind::IsometricStandingWave { n: v },
            "bound_band" => SpectrumKind::BoundBand { w: v },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown spectrum kind {other:?}"
                )))
            }
        };
        if kind.size() == 0 {
            return Err(Error::InvalidParameter(format!(
                "{spec:?} describes an empty component"
            )));
        }
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumPrediction {
    pub kind: SpectrumKind,
    pub momenta: Vec<f64>,
    pub energies: Vec<f64>,
    pub multiplicity: usize,
}

/// `E_k = 2K (1 - cos k)`.
pub fn dispersion(k: f64, big_k: f64) -> f64 {
    2.0 * big_k * (1.0 - k.cos())
}

pub fn predicted_spectrum(kind: SpectrumKind, big_k: f64) -> SpectrumPrediction {
    let momenta = kind.momenta();
    let energies = momenta.iter().map(|&k| dispersion(k, big_k)).collect();
    SpectrumPrediction {
        kind,
        momenta,
        energies,
        multiplicity: 1,
    }
}

/// Closed-form eigenvector for level `m` (1-based), normalized over the
/// component in path order.
pub fn predicted_eigenvector(kind: SpectrumKind, m: usize) -> Result<DVector<C64>> {
    let size = kind.size();
    if m == 0 || m > size {
        return Err(Error::Range {
            component: "level",
            value: m as u64,
            bound: size as u64 + 1,
        });
    }
    let k = kind.momenta()[m - 1];
    let v: DVector<C64> = DVector::from_fn(size, |n, _| {
        let n = n as f64;
        match kind {
            SpectrumKind::Cycle { .. } => C64::from_polar(1.0, k * n),
            SpectrumKind::TruncatedShift { n: big_n } => C64::new((k * (n - big_n as f64)).sin(), 0.0),
            SpectrumKind::IsometricStandingWave { .. } | SpectrumKind::BoundBand { .. } => {
                C64::new((k * (n + 1.0)).sin(), 0.0)
            }
        }
    });
    let norm = v.norm();
    Ok(v / C64::new(norm, 0.0))
}

/// A closed-form prediction for an invariant block; `indices` lists the
/// block's basis states in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPrediction {
    pub indices: Vec<usize>,
    pub kind: SpectrumKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentCheck {
    pub kind: SpectrumKind,
    pub size: usize,
    pub max_energy_error: f64,
    pub worst_level: usize,
    pub min_overlap: f64,
    pub leakage: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub passed: bool,
    pub components: Vec<ComponentCheck>,
}

/// One prediction per path of `paths`: open chains as truncated shifts,
/// cycles by their length.
pub fn path_predictions(paths: &PathSet) -> Vec<ComponentPrediction> {
    paths
        .chains
        .iter()
        .map(|c| ComponentPrediction {
            indices: c.states.clone(),
            kind: match c.kind {
                ChainKind::Open => SpectrumKind::TruncatedShift { n: c.len() },
                ChainKind::Cycle => SpectrumKind::Cycle { m: c.len() - 1 },
            },
        })
        .collect()
}

/// Compares each block's exact spectrum with its closed form: energies
/// within `eps_eig`, eigenvector overlap with the exact degenerate
/// eigenspace at least `1 - 1e-8`.
pub fn verify_spectrum(
    h: &Hamiltonian,
    predictions: &[ComponentPrediction],
    tol: &ToleranceContext,
) -> Result<SpectrumReport> {
    let mut components = Vec::with_capacity(predictions.len());
    for p in predictions {
        if p.indices.len() != p.kind.size() {
            return Err(Error::DimensionMismatch {
                left: p.indices.len(),
                right: p.kind.size(),
            });
        }
        check_cap(p.indices.len())?;
        let leakage = h.matrix.leakage_from(&p.indices);
        let block = h.matrix.restrict(&p.indices)?;
        let exact = hermitian_eigen(&block, tol)?;
        let predicted = predicted_spectrum(p.kind, h.k);
        let mut sorted = predicted.energies.clone();
        sorted.sort_by(f64::total_cmp);
        let (mut max_err, mut worst_level) = (0.0f64, 0);
        for (level, (e, x)) in sorted.iter().zip(&exact.values).enumerate() {
            if (e - x).abs() > max_err {
                max_err = (e - x).abs();
                worst_level = level;
            }
        }
        let mut min_overlap: f64 = 1.0;
        for m in 1..=p.kind.size() {
            let v = predicted_eigenvector(p.kind, m)?;
            let e = predicted.energies[m - 1];
            let mut captured = 0.0;
            for (j, &x) in exact.values.iter().enumerate() {
                if (x - e).abs() <= tol.eps_eig {
                    captured += exact.vectors.column(j).dotc(&v).norm_sqr();
                }
            }
            min_overlap = min_overlap.min(captured.sqrt());
        }
        let passed = max_err <= tol.eps_eig && min_overlap >= 1.0 - 1e-8 && leakage <= tol.eps_zero;
        components.push(ComponentCheck {
            kind: p.kind,
            size: p.indices.len(),
            max_energy_error: max_err,
            worst_level,
            min_overlap,
            leakage,
            passed,
        });
    }
    Ok(SpectrumReport {
        passed: components.iter().all(|c| c.passed),
        components,
    })
}

/// Spectral propagator restricted to the invariant blocks of `H` that
/// touch a given support.
#[derive(Debug, Clone)]
pub struct Propagator {
    dim: usize,
    blocks: Vec<(Vec<usize>, EigenDecomposition)>,
}

impl Propagator {
    /// Blocks are the connected components of the sparsity graph of `H`
    /// that meet `support`.
    pub fn new(h: &Hamiltonian, support: &[usize], tol: &ToleranceContext) -> Result<Self> {
        let mut wanted = vec![false; h.dim()];
        for &i in support {
            if i >= h.dim() {
                return Err(Error::Range {
                    component: "state index",
                    value: i as u64,
                    bound: h.dim() as u64,
                });
            }
            wanted[i] = true;
        }
        let mut blocks = Vec::new();
        for comp in ComplexOperator::connected_components(&[&h.matrix]) {
            if comp.iter().any(|&i| wanted[i]) {
                check_cap(comp.len())?;
                let eig = hermitian_eigen(&h.matrix.restrict(&comp)?, tol)?;
                blocks.push((comp, eig));
            }
        }
        Ok(Self { dim: h.dim(), blocks })
    }

    /// `exp(-i H t) psi`; `psi` must vanish outside the blocks.
    pub fn apply(&self, psi: &[C64], t: f64) -> Result<Vec<C64>> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: psi.len(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for (comp, eig) in &self.blocks {
            let local = DVector::from_iterator(comp.len(), comp.iter().map(|&i| psi[i]));
            let coeffs = eig.vectors.adjoint() * local;
            let phased = DVector::from_fn(coeffs.len(), |j, _| {
                coeffs[j] * C64::from_polar(1.0, -eig.values[j] * t)
            });
            let back = &eig.vectors * phased;
            for (k, &i) in comp.iter().enumerate() {
                out[i] = back[k];
            }
        }
        Ok(out)
    }
}

fn norm(psi: &[C64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `psi(t) = exp(-i H t) psi0` for each time, via the spectral decomposition
/// of the blocks that `psi0` touches. Norm drift above 1e-9 is an error.
pub fn evolve(h: &Hamiltonian, psi0: &[C64], times: &[f64], tol: &ToleranceContext) -> Result<Vec<Vec<C64>>> {
    let support: Vec<usize> = psi0
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > 0.0)
        .map(|(i, _)| i)
        .collect();
    let prop = Propagator::new(h, &support, tol)?;
    let n0 = norm(psi0);
    times
        .iter()
        .map(|&t| {
            let psi = prop.apply(psi0, t)?;
            let drift = (norm(&psi) - n0).abs();
            if drift > 1e-9 {
                return Err(Error::Inconsistent {
                    what: format!("norm drift at t = {t}"),
                    residual: drift,
                });
            }
            Ok(psi)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportProfile {
    /// Probability on each chain of the path set, in chain order.
    pub chain_probabilities: Vec<f64>,
    pub zero_length_probability: f64,
    /// Probability outside the origin chains.
    pub leakage: f64,
    pub norm: f64,
}

/// Distributes `|psi|^2` over the chains of `paths` in basis coordinates;
/// probabilities are normalized by the total.
pub fn path_support_profile(
    psi: &[C64],
    paths: &PathSet,
    basis: &Basis,
    origin: &[usize],
) -> Result<SupportProfile> {
    if psi.len() != paths.dim {
        return Err(Error::DimensionMismatch {
            left: paths.dim,
            right: psi.len(),
        });
    }
    let coords = basis.coordinates(psi)?;
    let total: f64 = coords.iter().map(|z| z.norm_sqr()).sum();
    let scale = if total > 0.0 { 1.0 / total } else { 0.0 };
    let chain_probabilities: Vec<f64> = paths
        .chains
        .iter()
        .map(|c| c.states.iter().map(|&i| coords[i].norm_sqr()).sum::<f64>() * scale)
        .collect();
    let zero_length_probability = paths
        .zero_length
        .iter()
        .fold(0.0, |acc, &i| acc + coords[i].norm_sqr())
        * scale;
    let inside: f64 = origin.iter().map(|&c| chain_probabilities[c]).sum();
    Ok(SupportProfile {
        leakage: (1.0 - inside).max(0.0),
        chain_probabilities,
        zero_length_probability,
        norm: total.sqrt(),
    })
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub t_prime: ComplexOperator,
    /// Oriented chains in basis indices.
    pub chains: Vec<Chain>,
    /// Per chain: whether it was reversed relative to the default orientation.
    pub flips: Vec<bool>,
    pub c: C64,
    pub k: f64,
}

/// Adjacency chains of `H` on `B` in their default orientation.
fn adjacency_chains(
    h: &ComplexOperator,
    basis: &Basis,
    tol: &ToleranceContext,
) -> Result<(Vec<Chain>, C64, f64)> {
    let hb = basis.conjugate(h)?;
    let n = hb.dim();
    if n == 0 {
        return Ok((Vec::new(), C64::new(0.0, 0.0), 0.0));
    }
    let residual = hb.hermiticity_residual();
    if residual > tol.eps_zero {
        return Err(Error::NotHermitian { residual });
    }
    let k = hb.get(0, 0).re / 2.0;
    if k <= tol.eps_zero {
        return Err(Error::NonBallistic {
            state: 0,
            reason: format!("diagonal {} gives no positive K", hb.get(0, 0).re),
        });
    }
    let c = C64::new(-k, 0.0);
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in 0..n {
        let d = hb.get(a, a);
        if (d - C64::new(2.0 * k, 0.0)).norm() > tol.eps_zero {
            return Err(Error::NonBallistic {
                state: a,
                reason: format!("diagonal {d} differs from 2K = {}", 2.0 * k),
            });
        }
        for (b, v) in hb.row(a) {
            if b == a || v.norm() <= tol.eps_zero {
                continue;
            }
            if (v - c).norm() > tol.eps_zero {
                return Err(Error::NonBallistic {
                    state: a,
                    reason: format!("coupling {v} to state {b} differs from -K = {c}"),
                });
            }
            neighbours[a].push(b);
        }
        if neighbours[a].len() > 2 {
            return Err(Error::NonBallistic {
                state: a,
                reason: format!("{} adjacent states (at most 2 allowed)", neighbours[a].len()),
            });
        }
    }
    let mut visited = vec![false; n];
    let mut chains = Vec::new();
    let walk = |start: usize, first: usize, visited: &mut Vec<bool>| {
        let mut states = vec![start];
        visited[start] = true;
        let (mut prev, mut cur) = (start, first);
        while !visited[cur] {
            visited[cur] = true;
            states.push(cur);
            let next = neighbours[cur].iter().copied().find(|&x| x != prev);
            match next {
                Some(x) => {
                    prev = cur;
                    cur = x;
                }
                None => break,
            }
        }
        states
    };
    // Open chains from their smaller endpoint.
    for a in 0..n {
        if visited[a] || neighbours[a].len() != 1 {
            continue;
        }
        let states = walk(a, neighbours[a][0], &mut visited);
        let last = *states.last().expect("nonempty");
        let states = if last < a {
            states.into_iter().rev().collect()
        } else {
            states
        };
        chains.push(Chain {
            kind: ChainKind::Open,
            states,
        });
    }
    // Cycles from their smallest state toward its smaller neighbour.
    for a in 0..n {
        if visited[a] || neighbours[a].len() != 2 {
            continue;
        }
        let first = neighbours[a][0].min(neighbours[a][1]);
        let states = walk(a, first, &mut visited);
        chains.push(Chain {
            kind: ChainKind::Cycle,
            states,
        });
    }
    chains.sort_by_key(|c| c.states.iter().copied().min());
    Ok((chains, c, k))
}

/// Rebuilds a step operator from a Hamiltonian that is ballistic on `B`,
/// orienting every path by the default rule.
pub fn reconstruct_step_operator(
    h: &Hamiltonian,
    basis: &Basis,
    tol: &ToleranceContext,
) -> Result<ReconstructionResult> {
    let (chains, _, _) = adjacency_chains(&h.matrix, basis, tol)?;
    let flips = vec![false; chains.len()];
    reconstruct_with_orientation(h, basis, &flips, tol)
}

/// Like [`reconstruct_step_operator`], reversing chain `i` when `flips[i]`.
pub fn reconstruct_with_orientation(
    h: &Hamiltonian,
    basis: &Basis,
    flips: &[bool],
    tol: &ToleranceContext,
) -> Result<ReconstructionResult> {
    let (mut chains, c, k) = adjacency_chains(&h.matrix, basis, tol)?;
    if flips.len() != chains.len() {
        return Err(Error::DimensionMismatch {
            left: chains.len(),
            right: flips.len(),
        });
    }
    let mut triplets = Vec::new();
    for (chain, &flip) in chains.iter_mut().zip(flips) {
        if flip {
            chain.states.reverse();
        }
        let s = &chain.states;
        for w in s.windows(2) {
            triplets.push((w[1], w[0], C64::new(1.0, 0.0)));
        }
        if chain.kind == ChainKind::Cycle {
            triplets.push((s[0], s[s.len() - 1], C64::new(1.0, 0.0)));
        }
    }
    let tb = ComplexOperator::build(h.dim(), triplets);
    let t_prime = basis.unconjugate(&tb)?;
    let rebuilt = feynman_hamiltonian(&t_prime, k)?;
    let residual = rebuilt.matrix.distance(&h.matrix)?;
    if residual > tol.eps_zero {
        return Err(Error::Inconsistent {
            what: "reconstructed Hamiltonian".into(),
            residual,
        });
    }
    Ok(ReconstructionResult {
        t_prime,
        chains,
        flips: flips.to_vec(),
        c,
        k,
    })
}

/// Paths of the reconstructed operator, for comparison with the original.
pub fn reconstructed_paths(
    r: &ReconstructionResult,
    basis: &Basis,
    tol: &ToleranceContext,
) -> Result<PathSet> {
    extract_paths(&r.t_prime, basis, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuumRow {
    pub d: f64,
    pub w: usize,
    pub big_k: f64,
    pub exact: f64,
    pub continuum: f64,
    pub deviation: f64,
    /// Previous row's deviation divided by this one's.
    pub deviation_ratio: Option<f64>,
}

/// Level `m` of a bound band against the free-particle energy `c (m pi / D)^2`.
///
/// The physical width `D = (w0 + 2) d0` is held fixed while the spacing
/// shrinks, so each `d` uses `W = D/d - 2` sites and `K = c / d^2`. Exact
/// energies come from diagonalizing the band's tridiagonal block.
pub fn continuum_limit_check(
    w0: usize,
    c: f64,
    d_values: &[f64],
    m: usize,
    tol: &ToleranceContext,
) -> Result<Vec<ContinuumRow>> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
    }
    let Some(&d0) = d_values.first() else {
        return Ok(Vec::new());
    };
    if d_values.iter().any(|&d| !(d > 0.0)) || d_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "d values must be positive and decreasing".into(),
        ));
    }
    let big_d = (w0 as f64 + 2.0) * d0;
    let mut rows: Vec<ContinuumRow> = Vec::with_capacity(d_values.len());
    for &d in d_values {
        let sites = big_d / d;
        if (sites - sites.round()).abs() > 1e-9 || sites.round() < 2.0 {
            return Err(Error::InvalidParameter(format!(
                "D/d = {sites} is not an integer of at least 2"
            )));
        }
        let w = sites.round() as usize - 2;
        if m == 0 || m > w + 1 {
            return Err(Error::Range {
                component: "level",
                value: m as u64,
                bound: w as u64 + 2,
            });
        }
        let big_k = c / (d * d);
        let band = bound_band_hamiltonian(w, big_k)?;
        let exact = spectrum(&band, tol)?.values[m - 1];
        let continuum = c * (m as f64 * PI / big_d).powi(2);
        let deviation = (exact - continuum).abs() / continuum;
        let deviation_ratio = rows.last().map(|r| r.deviation / deviation);
        rows.push(ContinuumRow {
            d,
            w,
            big_k,
            exact,
            continuum,
            deviation,
            deviation_ratio,
        });
    }
    Ok(rows)
}

/// Hamiltonian of a chain of `w + 1` states (the open shift of that length).
pub fn bound_band_hamiltonian(w: usize, big_k: f64) -> Result<Hamiltonian> {
    let n = w + 1;
    let shift = ComplexOperator::build(
        n,
        (0..n - 1)
            .map(|i| (i + 1, i, C64::new(1.0, 0.0)))
            .collect::<Vec<_>>(),
    );
    feynman_hamiltonian(&shift, big_k)
}

/// Reconstructs under every orientation of the chains (at most 16) and
/// records each one's Hamiltonian mismatch.
pub fn orientation_sweep(
    h: &Hamiltonian,
    basis: &Basis,
    tol: &ToleranceContext,
) -> Result<BTreeMap<Vec<bool>, f64>> {
    let (chains, _, _) = adjacency_chains(&h.matrix, basis, tol)?;
    let n = chains.len();
    if n > 16 {
        return Err(Error::InvalidParameter(format!(
            "{n} chains is too many to enumerate"
        )));
    }
    let mut out = BTreeMap::new();
    for mask in 0..(1u32 << n) {
        let flips: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let r = reconstruct_with_orientation(h, basis, &flips, tol)?;
        let residual = feynman_hamiltonian(&r.t_prime, r.k)?.matrix.distance(&h.matrix)?;
        out.insert(flips, residual);
    }
    Ok(out)
}
