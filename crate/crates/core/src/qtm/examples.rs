//! Built-in machines and their hand-constructed stable bases.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use super::{build_step_operator, Direction, Rule, RuleTable};
use crate::error::{Error, Result};
use crate::hilbert::gates::{self, Gate};
use crate::hilbert::operator::ComplexOperator;
use crate::hilbert::tolerance::ToleranceContext;
use crate::hilbert::{LatticeShape, Topology};
use crate::isometry::{is_stable_on_basis, Basis};

#[derive(Debug, Clone, PartialEq)]
pub enum ExampleMachine {
    /// Head moves right over 0 bits.
    ZeroMotion,
    /// Head moves right over 0 bits, rotating each by `v`.
    BitRotation(Gate),
    /// Three rules: rotate 0s moving right, turn at a 1, flip 1s moving left.
    Turnaround(Gate),
    /// Five rules with a single `v` step that splits the path in two.
    SplitPath(Gate),
    /// Moves right resetting every bit to 0.
    Erasure,
}

impl ExampleMachine {
    pub const NAMES: [&'static str; 5] = [
        "zero_motion",
        "bit_rotation",
        "turnaround",
        "split_path",
        "erasure",
    ];

    /// Looks up a machine by name; gate-parametrized machines use the Fourier gate.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "zero_motion" => Self::ZeroMotion,
            "bit_rotation" => Self::BitRotation(gates::fourier()),
            "turnaround" => Self::Turnaround(gates::fourier()),
            "split_path" => Self::SplitPath(gates::fourier()),
            "erasure" => Self::Erasure,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::ZeroMotion => "zero_motion",
            Self::BitRotation(_) => "bit_rotation",
            Self::Turnaround(_) => "turnaround",
            Self::SplitPath(_) => "split_path",
            Self::Erasure => "erasure",
        }
    }

    pub fn rules(&self) -> RuleTable {
        use Direction::{Left, Right};
        let id = gates::identity();
        let (n_head, rules) = match self {
            Self::ZeroMotion => (1, vec![Rule::new(0, 0, 0, Right, id)]),
            Self::BitRotation(v) => (1, vec![Rule::new(0, 0, 0, Right, *v)]),
            Self::Turnaround(v) => (
                2,
                vec![
                    Rule::new(0, 0, 0, Right, *v),
                    Rule::new(0, 1, 1, Left, id),
                    Rule::new(1, 1, 1, Left, gates::pauli_x()),
                ],
            ),
            // Head-state prefixes u Q_l and u^2 Q_2 are the maps l -> l+1 and 2 -> 4.
            Self::SplitPath(v) => (
                5,
                vec![
                    Rule::new(0, 0, 0, Right, id),
                    Rule::new(0, 1, 1, Left, *v),
                    Rule::new(1, 0, 2, Right, id),
                    Rule::new(2, 0, 3, Right, id),
                    Rule::new(2, 1, 4, Right, id),
                ],
            ),
            Self::Erasure => (
                1,
                vec![
                    Rule::new(0, 0, 0, Right, id),
                    Rule::new(0, 1, 0, Right, gates::pauli_x()),
                ],
            ),
        };
        RuleTable { n_head, rules }
    }

    /// A small lattice on which the machine's behaviour is visible.
    pub fn default_shape(&self) -> LatticeShape {
        let (n_head, length, topology) = match self {
            Self::ZeroMotion | Self::BitRotation(_) => (1, 6, Topology::Open),
            Self::Turnaround(_) => (2, 8, Topology::Open),
            Self::SplitPath(_) => (5, 6, Topology::Open),
            Self::Erasure => (1, 3, Topology::Cyclic),
        };
        LatticeShape::new(n_head, length, topology, true).expect("valid shape")
    }
}

/// Expands `|sigma>` with `v` applied on each of `sites` into `(sigma', amplitude)`.
fn rotate_sites(sigma: u64, sites: impl IntoIterator<Item = usize>, v: &Gate) -> BTreeMap<u64, C64> {
    let mut terms = BTreeMap::from([(sigma, C64::new(1.0, 0.0))]);
    for k in sites {
        let mut next = BTreeMap::new();
        for (s, a) in terms {
            let bit = ((s >> k) & 1) as usize;
            let cleared = s & !(1 << k);
            for out in 0..2u64 {
                let amp = v[(out as usize, bit)];
                if amp.norm() > 0.0 {
                    *next.entry(cleared | (out << k)).or_insert(C64::new(0.0, 0.0)) += a * amp;
                }
            }
        }
        terms = next;
    }
    terms
}

fn finish(
    shape: &LatticeShape,
    triplets: Vec<(usize, usize, C64)>,
    machine: &ExampleMachine,
    tol: &ToleranceContext,
) -> Result<Basis> {
    let basis = Basis::explicit(ComplexOperator::build(shape.dim(), triplets), tol)?;
    // Extra head states are inert, so the rules are checked on the full head space.
    let rules = RuleTable {
        n_head: shape.n_head,
        ..machine.rules()
    };
    let t = build_step_operator(&rules, shape)?;
    let stable = is_stable_on_basis(&t, &basis, tol)?;
    if !stable.report.verdict {
        let w = stable.report.witness.map(|w| w.description).unwrap_or_default();
        return Err(Error::Construction(format!(
            "{} basis post-check failed: {w}",
            machine.name()
        )));
    }
    Ok(basis)
}

/// Stable basis for the bit-rotation machine on an open lattice.
///
/// Column `(h, j, sigma)` carries `v` on every site from the highest 1 of
/// `sigma` below `j` (site 0 if there is none) up to `j - 1`; other sites
/// stay computational.
pub fn bit_rotation_stable_basis(v: &Gate, shape: &LatticeShape, tol: &ToleranceContext) -> Result<Basis> {
    if shape.topology != Topology::Open || !shape.spins {
        return Err(Error::Precondition(
            "the bit-rotation basis is built for open lattices with spins".into(),
        ));
    }
    let mut triplets = Vec::new();
    for col in 0..shape.dim() {
        let (h, j, sigma) = shape.decode(col)?;
        let below = sigma & ((1u64 << j) - 1);
        let anchor = if below == 0 {
            0
        } else {
            63 - below.leading_zeros() as usize
        };
        for (s, a) in rotate_sites(sigma, anchor..j, v) {
            triplets.push((shape.encode(h, j, s)?, col, a));
        }
    }
    finish(shape, triplets, &ExampleMachine::BitRotation(*v), tol)
}

/// Stable basis for the five-rule machine.
///
/// Columns are labelled by computational states. Head state 1 at `p`
/// carries `v` on site `p + 1`, head state 2 at `p` carries `v` on site `p`.
/// For head states 3/4 at `p >= 1`, labels `(3, bit 0)` and `(4, bit 1)` at
/// site `p - 1` become the split states `v_{0b}|3,0> + v_{1b}|4,1>`; every
/// other label is computational.
pub fn split_path_stable_basis(v: &Gate, shape: &LatticeShape, tol: &ToleranceContext) -> Result<Basis> {
    if shape.n_head < 5 || !shape.spins {
        return Err(Error::Precondition(
            "the five-rule basis needs at least 5 head states and spins".into(),
        ));
    }
    let mut triplets = Vec::new();
    for col in 0..shape.dim() {
        let (h, p, sigma) = shape.decode(col)?;
        match h {
            1 if p + 1 < shape.length => {
                for (s, a) in rotate_sites(sigma, [p + 1], v) {
                    triplets.push((shape.encode(1, p, s)?, col, a));
                }
            }
            2 => {
                for (s, a) in rotate_sites(sigma, [p], v) {
                    triplets.push((shape.encode(2, p, s)?, col, a));
                }
            }
            3 | 4 if p >= 1 => {
                let site = p - 1;
                let bit = (sigma >> site) & 1;
                let b = match (h, bit) {
                    (3, 0) => Some(0),
                    (4, 1) => Some(1),
                    _ => None,
                };
                match b {
                    Some(b) => {
                        let cleared = sigma & !(1 << site);
                        triplets.push((shape.encode(3, p, cleared)?, col, v[(0, b)]));
                        triplets.push((shape.encode(4, p, cleared | (1 << site))?, col, v[(1, b)]));
                    }
                    None => triplets.push((col, col, C64::new(1.0, 0.0))),
                }
            }
            _ => triplets.push((col, col, C64::new(1.0, 0.0))),
        }
    }
    finish(shape, triplets, &ExampleMachine::SplitPath(*v), tol)
}

/// Label of the first state of the segment chain: head state 0 just right of
/// a 1 at site `m`, followed by `n` zeros and a closing 1 at `m + n + 1`.
pub fn split_path_segment_start(shape: &LatticeShape, m: usize, n: usize) -> Result<usize> {
    let right = m + n + 1;
    if right >= shape.length {
        return Err(Error::Range {
            component: "segment end",
            value: right as u64,
            bound: shape.length as u64,
        });
    }
    let sigma = (1u64 << m) | (1u64 << right);
    shape.encode(0, m + 1, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isometry::extract_paths;

    fn tol() -> ToleranceContext {
        ToleranceContext::default()
    }

    #[test]
    fn identity_rotation_basis_is_computational() {
        let s = LatticeShape::new(1, 4, Topology::Open, true).unwrap();
        let b = bit_rotation_stable_basis(&gates::identity(), &s, &tol()).unwrap();
        assert_eq!(b.matrix(), ComplexOperator::identity(s.dim()));
    }

    #[test]
    fn fourier_rotation_basis_is_stable_with_unit_amplitudes() {
        let s = LatticeShape::new(1, 5, Topology::Open, true).unwrap();
        let b = bit_rotation_stable_basis(&gates::fourier(), &s, &tol()).unwrap();
        let t = build_step_operator(&ExampleMachine::BitRotation(gates::fourier()).rules(), &s).unwrap();
        let paths = extract_paths(&t, &b, &tol()).unwrap();
        assert!(paths
            .successor_amplitudes
            .values()
            .all(|a| (a - C64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn split_degenerates_for_spin_flip() {
        let s = LatticeShape::new(5, 4, Topology::Open, true).unwrap();
        let b = split_path_stable_basis(&gates::pauli_x(), &s, &tol()).unwrap();
        // label (3, p = 2, bit 1 = 0): v_{00} = 0, v_{10} = 1, a product state on head 4.
        let label = s.encode(3, 2, 0).unwrap();
        let col = b.vector(label);
        let nz: Vec<usize> = (0..s.dim()).filter(|&i| col[i].norm() > 1e-12).collect();
        assert_eq!(nz, vec![s.encode(4, 2, 0b10).unwrap()]);
    }

    #[test]
    fn names_round_trip() {
        for name in ExampleMachine::NAMES {
            assert_eq!(ExampleMachine::from_name(name).unwrap().name(), name);
        }
        assert!(ExampleMachine::from_name("busy_beaver").is_none());
    }
}
