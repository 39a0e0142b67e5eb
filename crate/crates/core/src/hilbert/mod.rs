//! The lattice Hilbert space: head state, head position and site spins.

pub mod gates;
pub mod operator;
pub mod spectral;
pub mod tolerance;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use gates::Gate;
use operator::ComplexOperator;
use tolerance::ToleranceContext;

/// Largest lattice length accepted when the spin sector is present.
pub const MAX_SPIN_SITES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Cyclic,
    Open,
}

/// Finite truncation of the lattice.
///
/// Basis index of `|h, j, sigma>` is `(h * L + j) * 2^L + sigma` with site 0
/// as the least significant bit of `sigma`. Without spins the factor `2^L` is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeShape {
    pub n_head: usize,
    pub length: usize,
    pub topology: Topology,
    pub spins: bool,
}

/// Selector for [`projector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectorKind {
    /// `Q_l`: head in internal state `l`.
    HeadState(usize),
    /// `P_j`: head at site `j`.
    HeadPosition(usize),
    /// `P_{i,j}`: spin at site `site` equal to `value`.
    Spin { value: u8, site: usize },
}

impl LatticeShape {
    pub fn new(n_head: usize, length: usize, topology: Topology, spins: bool) -> Result<Self> {
        if n_head == 0 {
            return Err(Error::InvalidParameter("n_head must be positive".into()));
        }
        if length == 0 {
            return Err(Error::InvalidParameter("lattice length must be positive".into()));
        }
        if spins && length > MAX_SPIN_SITES {
            return Err(Error::Range {
                component: "lattice length",
                value: length as u64,
                bound: MAX_SPIN_SITES as u64 + 1,
            });
        }
        Ok(Self {
            n_head,
            length,
            topology,
            spins,
        })
    }

    pub fn spin_dim(&self) -> usize {
        if self.spins {
            1 << self.length
        } else {
            1
        }
    }

    pub fn dim(&self) -> usize {
        self.n_head * self.length * self.spin_dim()
    }

    pub fn encode(&self, h: usize, j: usize, sigma: u64) -> Result<usize> {
        if h >= self.n_head {
            return Err(range("head state", h as u64, self.n_head as u64));
        }
        if j >= self.length {
            return Err(range("site", j as u64, self.length as u64));
        }
        if sigma >= self.spin_dim() as u64 {
            return Err(range("spin configuration", sigma, self.spin_dim() as u64));
        }
        Ok((h * self.length + j) * self.spin_dim() + sigma as usize)
    }

    /// Inverse of [`LatticeShape::encode`].
    pub fn decode(&self, index: usize) -> Result<(usize, usize, u64)> {
        if index >= self.dim() {
            return Err(range("basis index", index as u64, self.dim() as u64));
        }
        let sigma = (index % self.spin_dim()) as u64;
        let rest = index / self.spin_dim();
        Ok((rest / self.length, rest % self.length, sigma))
    }

    /// Spin configuration from a per-site bit list, site 0 first.
    pub fn sigma_from_bits(bits: &[u8]) -> u64 {
        bits.iter()
            .enumerate()
            .fold(0, |acc, (k, &b)| acc | (u64::from(b & 1) << k))
    }

    fn next_site(&self, j: usize) -> Option<usize> {
        if j + 1 < self.length {
            Some(j + 1)
        } else {
            match self.topology {
                Topology::Cyclic => Some(0),
                Topology::Open => None,
            }
        }
    }

    fn require_spins(&self) -> Result<()> {
        if !self.spins {
            return Err(Error::Precondition("operation requires the spin sector".into()));
        }
        Ok(())
    }
}

fn range(component: &'static str, value: u64, bound: u64) -> Error {
    Error::Range {
        component,
        value,
        bound,
    }
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// `U`: moves the head one site to the right.
pub fn head_shift(shape: &LatticeShape) -> ComplexOperator {
    let triplets = (0..shape.dim()).filter_map(|i| {
        let (h, j, sigma) = shape.decode(i).expect("in range");
        shape
            .next_site(j)
            .map(|k| (shape.encode(h, k, sigma).expect("in range"), i, one()))
    });
    ComplexOperator::build(shape.dim(), triplets.collect::<Vec<_>>())
}

/// `u`: raises the head state by one, cyclically.
pub fn head_raise(shape: &LatticeShape) -> ComplexOperator {
    let triplets = (0..shape.dim()).map(|i| {
        let (h, j, sigma) = shape.decode(i).expect("in range");
        let target = shape.encode((h + 1) % shape.n_head, j, sigma).expect("in range");
        (target, i, one())
    });
    ComplexOperator::build(shape.dim(), triplets.collect::<Vec<_>>())
}

pub fn projector(kind: ProjectorKind, shape: &LatticeShape) -> Result<ComplexOperator> {
    let select: Box<dyn Fn(usize, usize, u64) -> bool> = match kind {
        ProjectorKind::HeadState(l) => {
            if l >= shape.n_head {
                return Err(range("head state", l as u64, shape.n_head as u64));
            }
            Box::new(move |h, _, _| h == l)
        }
        ProjectorKind::HeadPosition(p) => {
            if p >= shape.length {
                return Err(range("site", p as u64, shape.length as u64));
            }
            Box::new(move |_, j, _| j == p)
        }
        ProjectorKind::Spin { value, site } => {
            shape.require_spins()?;
            if site >= shape.length {
                return Err(range("site", site as u64, shape.length as u64));
            }
            if value > 1 {
                return Err(range("spin value", u64::from(value), 2));
            }
            Box::new(move |_, _, sigma| ((sigma >> site) & 1) as u8 == value)
        }
    };
    let triplets = (0..shape.dim()).filter_map(|i| {
        let (h, j, sigma) = shape.decode(i).expect("in range");
        select(h, j, sigma).then_some((i, i, one()))
    });
    Ok(ComplexOperator::build(shape.dim(), triplets.collect::<Vec<_>>()))
}

/// `v_j`: the 2x2 unitary `v` acting on the spin at `site`.
pub fn site_unitary(
    v: &Gate,
    site: usize,
    shape: &LatticeShape,
    tol: &ToleranceContext,
) -> Result<ComplexOperator> {
    shape.require_spins()?;
    if site >= shape.length {
        return Err(range("site", site as u64, shape.length as u64));
    }
    let residual = gates::unitarity_residual(v);
    if residual > tol.eps_zero {
        return Err(Error::NotUnitary { residual });
    }
    Ok(site_gate_unchecked(v, site, shape))
}

/// `v_j` without the unitarity check; used for term assembly.
pub(crate) fn site_gate_unchecked(v: &Gate, site: usize, shape: &LatticeShape) -> ComplexOperator {
    let mut triplets = Vec::with_capacity(2 * shape.dim());
    for i in 0..shape.dim() {
        let (h, j, sigma) = shape.decode(i).expect("in range");
        let bit = ((sigma >> site) & 1) as usize;
        let cleared = sigma & !(1 << site);
        for out in 0..2 {
            let amp = v[(out, bit)];
            if amp.norm() > operator::DROP_TOLERANCE {
                let target = shape
                    .encode(h, j, cleared | ((out as u64) << site))
                    .expect("in range");
                triplets.push((target, i, amp));
            }
        }
    }
    ComplexOperator::build(shape.dim(), triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spinless(n: usize, topology: Topology) -> LatticeShape {
        LatticeShape::new(1, n, topology, false).unwrap()
    }

    #[test]
    fn encode_examples() {
        let a = LatticeShape::new(1, 2, Topology::Open, true).unwrap();
        assert_eq!(a.encode(0, 1, 0b10).unwrap(), 6);
        let b = spinless(4, Topology::Open);
        assert_eq!(b.encode(0, 0, 0).unwrap(), 0);
        let c = LatticeShape::new(5, 4, Topology::Open, true).unwrap();
        assert_eq!(c.encode(2, 3, 0b0001).unwrap(), 177);
        assert_eq!(c.decode(177).unwrap(), (2, 3, 1));
    }

    #[test]
    fn encode_range_errors_name_component() {
        let s = LatticeShape::new(2, 3, Topology::Open, true).unwrap();
        assert!(matches!(
            s.encode(2, 0, 0),
            Err(Error::Range {
                component: "head state",
                ..
            })
        ));
        assert!(matches!(
            s.encode(0, 3, 0),
            Err(Error::Range {
                component: "site",
                ..
            })
        ));
        assert!(matches!(
            s.encode(0, 0, 8),
            Err(Error::Range {
                component: "spin configuration",
                ..
            })
        ));
    }

    #[test]
    fn cyclic_shift_is_three_cycle() {
        let u = head_shift(&spinless(3, Topology::Cyclic));
        assert_eq!(u.get(1, 0), one());
        assert_eq!(u.get(2, 1), one());
        assert_eq!(u.get(0, 2), one());
        assert_eq!(u.nnz(), 3);
        let id = ComplexOperator::identity(3);
        assert_eq!(u.adjoint().compose(&u).unwrap(), id);
        assert_eq!(u.pow(3), id);
    }

    #[test]
    fn open_shift_is_truncated() {
        let u = head_shift(&spinless(3, Topology::Open));
        assert_eq!(u.nnz(), 2);
        assert_eq!(u.pow(3).nnz(), 0);
    }

    #[test]
    fn head_raise_cycles() {
        let s = LatticeShape::new(5, 2, Topology::Open, true).unwrap();
        let u = head_raise(&s);
        assert_eq!(u.pow(5), ComplexOperator::identity(s.dim()));
        let q0 = projector(ProjectorKind::HeadState(0), &s).unwrap();
        let q1 = projector(ProjectorKind::HeadState(1), &s).unwrap();
        let conj = u.compose(&q0).unwrap().compose(&u.adjoint()).unwrap();
        assert_eq!(conj, q1);
        let two = LatticeShape::new(2, 1, Topology::Open, false).unwrap();
        let swap = head_raise(&two);
        assert_eq!(swap.get(0, 1), one());
        assert_eq!(swap.get(1, 0), one());
    }

    #[test]
    fn projectors_complete_and_orthogonal() {
        let s = LatticeShape::new(2, 3, Topology::Cyclic, true).unwrap();
        let mut sum = ComplexOperator::zero(s.dim());
        for j in 0..3 {
            sum = sum
                .add(&projector(ProjectorKind::HeadPosition(j), &s).unwrap())
                .unwrap();
        }
        assert_eq!(sum, ComplexOperator::identity(s.dim()));
        let p0 = projector(ProjectorKind::Spin { value: 0, site: 1 }, &s).unwrap();
        let p1 = projector(ProjectorKind::Spin { value: 1, site: 1 }, &s).unwrap();
        assert_eq!(p0.compose(&p1).unwrap().nnz(), 0);
        let spinless = LatticeShape::new(1, 3, Topology::Cyclic, false).unwrap();
        assert!(projector(ProjectorKind::Spin { value: 0, site: 0 }, &spinless).is_err());
    }

    #[test]
    fn site_unitary_examples() {
        let tol = ToleranceContext::default();
        let s = LatticeShape::new(1, 1, Topology::Open, true).unwrap();
        let id = site_unitary(&gates::identity(), 0, &s, &tol).unwrap();
        assert_eq!(id, ComplexOperator::identity(2));
        let f = site_unitary(&gates::fourier(), 0, &s, &tol).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.get(0, 0).re - h).abs() < 1e-15);
        assert!((f.get(1, 0).re - h).abs() < 1e-15);
        let bad = gates::identity() * C64::new(1.1, 0.0);
        assert!(matches!(
            site_unitary(&bad, 0, &s, &tol),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn spin_flip_acts_on_one_site() {
        let tol = ToleranceContext::default();
        let s = LatticeShape::new(1, 3, Topology::Open, true).unwrap();
        let x = site_unitary(&gates::pauli_x(), 1, &s, &tol).unwrap();
        let from = s.encode(0, 2, 0b001).unwrap();
        let to = s.encode(0, 2, 0b011).unwrap();
        assert_eq!(x.get(to, from), one());
        assert_eq!(x.nnz(), s.dim());
    }
}
