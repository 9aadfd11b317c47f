//! Random states and measurements for tests, benches and spot checks.

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMatrix, CVector};
use crate::measurement::{MeasurementDirection, QubitPovm};
use crate::statekit::DensityMatrix;

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state vector.
pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CVector {
    let v = CVector::from_fn(d, |_, _| gaussian_complex(rng));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Full-rank random state from the Hilbert-Schmidt (Ginibre) ensemble.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix {
    random_density_rank(rng, d, d)
}

/// Random state of the given rank (`G G^dagger` with a `d x rank` Ginibre `G`).
pub fn random_density_rank<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> DensityMatrix {
    let g = CMatrix::from_fn(d, rank, |_, _| gaussian_complex(rng));
    DensityMatrix::from_trusted(&g * g.adjoint())
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n: f64 = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> MeasurementDirection {
    MeasurementDirection::new(random_unit_vector(rng)).expect("unit vector")
}

/// Random rank-one POVM on a qubit with three elements.
pub fn random_povm3<R: Rng + ?Sized>(rng: &mut R) -> QubitPovm {
    loop {
        let k1 = random_unit_vector(rng);
        let k2 = random_unit_vector(rng);
        let q1: f64 = rng.random_range(0.2..1.0);
        let q2: f64 = rng.random_range(0.2..1.0);
        let v = k1 * q1 + k2 * q2;
        let q3 = v.norm();
        if q3 < 1e-3 {
            continue;
        }
        let k3 = -v / q3;
        let scale = 2.0 / (q1 + q2 + q3);
        if let Ok(povm) = QubitPovm::new(vec![(q1 * scale, k1), (q2 * scale, k2), (q3 * scale, k3)]) {
            return povm;
        }
    }
}

/// Random semi-quantum state `sum_j p_j rho_{A/j} (x) P_{jB}` measured along `k`.
pub fn random_semi_quantum<R: Rng + ?Sized>(
    rng: &mut R,
    da: usize,
    k: &MeasurementDirection,
) -> DensityMatrix {
    let p: f64 = rng.random_range(0.1..0.9);
    let a_plus = random_density(rng, da);
    let a_minus = random_density(rng, da);
    let proj = |sign: f64| crate::measurement::qubit_projector(&(k.vector() * sign));
    let m = a_plus.matrix().kronecker(&proj(1.0)) * Complex64::new(p, 0.0)
        + a_minus.matrix().kronecker(&proj(-1.0)) * Complex64::new(1.0 - p, 0.0);
    DensityMatrix::from_trusted(m)
}
