#![allow(dead_code)]

use ballistic_core::{Basis, ComplexOperator, ToleranceContext, C64};
use nalgebra::DMatrix;
use rand::Rng;

pub fn tol() -> ToleranceContext {
    ToleranceContext::default()
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn random_dense<R: Rng>(rng: &mut R, n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> DMatrix<C64> {
    random_dense(rng, n).qr().q()
}

pub fn shuffled<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        v.swap(i, rng.gen_range(0..=i));
    }
    v
}

/// Partial injection with unit-modulus amplitudes: open chains and cycles
/// (length >= 3) over a random ordering of `0..dim`.
pub fn random_injection<R: Rng>(rng: &mut R, dim: usize, max_len: usize, phases: bool) -> ComplexOperator {
    let order = shuffled(rng, dim);
    let mut triplets = Vec::new();
    let amp = |rng: &mut R| {
        if phases {
            C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
        } else {
            c(1.0)
        }
    };
    let mut rest = &order[..];
    while !rest.is_empty() {
        let len = rng.gen_range(1..=max_len).min(rest.len());
        let (seg, tail) = rest.split_at(len);
        for w in seg.windows(2) {
            let a = amp(rng);
            triplets.push((w[1], w[0], a));
        }
        if len >= 3 && rng.gen_bool(0.3) {
            let a = amp(rng);
            triplets.push((seg[0], seg[len - 1], a));
        }
        rest = tail;
    }
    ComplexOperator::from_triplets(dim, triplets).unwrap()
}

/// `W A W^dagger` together with the basis `W`.
pub fn conjugated<R: Rng>(rng: &mut R, a: &ComplexOperator) -> (ComplexOperator, Basis) {
    let w = random_unitary(rng, a.dim());
    let t = &w * a.to_dense() * w.adjoint();
    (
        ComplexOperator::from_dense(&t).unwrap(),
        Basis::from_dense(&w, &tol()).unwrap(),
    )
}

pub fn dense_max(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
