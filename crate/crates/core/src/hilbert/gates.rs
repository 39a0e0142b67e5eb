//! Single-site 2x2 gates.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

pub type Gate = Matrix2<C64>;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity() -> Gate {
    Gate::identity()
}

pub fn pauli_x() -> Gate {
    Gate::new(re(0.0), re(1.0), re(1.0), re(0.0))
}

pub fn pauli_y() -> Gate {
    Gate::new(re(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), re(0.0))
}

pub fn pauli_z() -> Gate {
    Gate::new(re(1.0), re(0.0), re(0.0), re(-1.0))
}

/// `(sigma_x + sigma_z) / sqrt(2)`.
pub fn fourier() -> Gate {
    (pauli_x() + pauli_z()) * re(std::f64::consts::FRAC_1_SQRT_2)
}

/// Largest entry modulus.
pub fn max_modulus(v: &Gate) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max entry of `v^dagger v - 1`.
pub fn unitarity_residual(v: &Gate) -> f64 {
    max_modulus(&(v.adjoint() * v - Gate::identity()))
}

/// Distance from `target` up to a global phase, in the max-entry norm.
pub fn phase_distance(v: &Gate, target: &Gate) -> f64 {
    let overlap = (target.adjoint() * v).trace();
    if overlap.norm() < 1e-300 {
        return max_modulus(&(v - target)).max(max_modulus(v));
    }
    let phase = overlap / overlap.norm();
    max_modulus(&(v - target * phase))
}

/// Nearest unitary in Frobenius norm (the polar factor).
pub fn nearest_unitary(v: &Gate) -> Gate {
    let svd = v.svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    u * vt
}
