//! Local rank-one measurements on qubit B, post-measurement conditional states
//! of A and the unread post-measurement joint state.

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entropy::{entropy_of_matrix, EntropyFunctional};
use crate::error::{QcorrError, Result};
use crate::linalg::{frobenius_sq, hermitian_eigenvalues, identity, pauli, trace, CMatrix};
use crate::statekit::{gellmann_basis, partial_trace, partial_trace_weighted, BipartiteLayout, DensityMatrix, Keep};

/// Outcomes with smaller probability contribute nothing to averages.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// Unit vector `k` with the sign fixed so that `+k` and `-k` (the same
/// projective measurement) map to one representative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDirection {
    k: [f64; 3],
}

/// Flip `v` into the canonical half-space: `z > 0`, else `x > 0`, else `y > 0`.
pub fn canonicalize(v: Vector3<f64>) -> Vector3<f64> {
    let flip = if v.z != 0.0 {
        v.z < 0.0
    } else if v.x != 0.0 {
        v.x < 0.0
    } else {
        v.y < 0.0
    };
    if flip {
        -v
    } else {
        v
    }
}

impl MeasurementDirection {
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(QcorrError::InvalidDirection);
        }
        let k = canonicalize(v / n);
        Ok(Self { k: [k.x, k.y, k.z] })
    }

    /// `k = (sin t cos p, sin t sin p, cos t)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self::new(Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()))
            .expect("angles give a unit vector")
    }

    pub fn x() -> Self {
        Self { k: [1.0, 0.0, 0.0] }
    }

    pub fn y() -> Self {
        Self { k: [0.0, 1.0, 0.0] }
    }

    pub fn z() -> Self {
        Self { k: [0.0, 0.0, 1.0] }
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.k[0], self.k[1], self.k[2])
    }

    /// `(theta, phi)` with `theta` in `[0, pi/2]` and `phi` in `[0, 2 pi)`.
    pub fn angles(&self) -> (f64, f64) {
        let theta = self.k[2].clamp(-1.0, 1.0).acos();
        let mut phi = self.k[1].atan2(self.k[0]);
        if phi < 0.0 {
            phi += std::f64::consts::TAU;
        }
        if phi >= std::f64::consts::TAU {
            phi -= std::f64::consts::TAU;
        }
        (theta, phi)
    }

    /// Angle between the measurement axes, in `[0, pi/2]`.
    pub fn axis_angle(&self, other: &MeasurementDirection) -> f64 {
        self.vector().dot(&other.vector()).abs().min(1.0).acos()
    }
}

/// `(I + k . sigma) / 2` for an arbitrary (not necessarily canonical) unit `k`.
pub fn qubit_projector(k: &Vector3<f64>) -> CMatrix {
    let p = pauli();
    let mut m = identity(2);
    for nu in 0..3 {
        m += &p[nu] * Complex64::new(k[nu], 0.0);
    }
    m * Complex64::new(0.5, 0.0)
}

/// Rank-one qubit POVM `{q_k P_k}` with `sum q_k P_k = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitPovm {
    elements: Vec<(f64, Vector3<f64>)>,
}

impl QubitPovm {
    pub fn new(elements: Vec<(f64, Vector3<f64>)>) -> Result<Self> {
        if elements.is_empty() {
            return Err(QcorrError::InvalidPovm { reason: "no elements".into() });
        }
        let mut total = CMatrix::zeros(2, 2);
        for (q, k) in &elements {
            if !(*q > 0.0) {
                return Err(QcorrError::InvalidPovm {
                    reason: format!("non-positive weight {q}"),
                });
            }
            if (k.norm() - 1.0).abs() > 1e-10 {
                return Err(QcorrError::InvalidPovm {
                    reason: format!("element direction has norm {}", k.norm()),
                });
            }
            total += qubit_projector(k) * Complex64::new(*q, 0.0);
        }
        let err = (total - identity(2)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err > 1e-10 {
            return Err(QcorrError::InvalidPovm {
                reason: format!("elements do not sum to identity (error {err:e})"),
            });
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[(f64, Vector3<f64>)] {
        &self.elements
    }
}

/// Two-outcome spin measurement along `+k`, `-k`.
pub fn projective_povm(k: &MeasurementDirection) -> QubitPovm {
    let v = k.vector();
    QubitPovm {
        elements: vec![(1.0, v), (1.0, -v)],
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub p: f64,
    pub rho_a: DensityMatrix,
    /// Bloch vector of `rho_a` in the operator basis of A.
    pub ra_post: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct ConditionalEnsemble {
    pub outcomes: Vec<Outcome>,
}

impl ConditionalEnsemble {
    pub fn average_entropy(&self, family: EntropyFunctional) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| o.p > 0.0)
            .map(|o| o.p * entropy_of_matrix(o.rho_a.matrix(), family))
            .sum()
    }
}

pub fn condition_on_measurement(
    rho: &DensityMatrix,
    layout: BipartiteLayout,
    povm: &QubitPovm,
) -> Result<ConditionalEnsemble> {
    layout.check_qubit_b(rho)?;
    let basis_a = gellmann_basis(layout.da);
    let rho_a = partial_trace(rho, layout, Keep::A)?;
    let mut outcomes = Vec::with_capacity(povm.elements.len());
    for (q, k) in &povm.elements {
        let block = partial_trace_weighted(rho.matrix(), layout, &qubit_projector(k));
        let t = trace(&block).re;
        let p = q * t;
        let state = if p < ZERO_PROBABILITY {
            rho_a.clone()
        } else {
            DensityMatrix::from_trusted(block / Complex64::new(t, 0.0))
        };
        let ra_post = basis_a.expectations(state.matrix());
        outcomes.push(Outcome {
            p: if p < ZERO_PROBABILITY { 0.0 } else { p },
            rho_a: state,
            ra_post,
        });
    }
    Ok(ConditionalEnsemble { outcomes })
}

/// `rho' = sum_(+/-) (I (x) P_(+/-k)) rho (I (x) P_(+/-k))`.
pub fn unread_state(rho: &DensityMatrix, layout: BipartiteLayout, k: &MeasurementDirection) -> Result<DensityMatrix> {
    layout.check_qubit_b(rho)?;
    let id_a = identity(layout.da);
    let v = k.vector();
    let mut out = CMatrix::zeros(rho.dim(), rho.dim());
    for sign in [1.0, -1.0] {
        let proj = id_a.kronecker(&qubit_projector(&(v * sign)));
        out += &proj * rho.matrix() * &proj;
    }
    Ok(DensityMatrix::from_trusted(out))
}

/// `S_f(A|B_M) = sum_k p_k S_f(rho_{A/k})`.
pub fn conditional_entropy(
    rho: &DensityMatrix,
    layout: BipartiteLayout,
    povm: &QubitPovm,
    family: EntropyFunctional,
) -> Result<f64> {
    family.validate()?;
    Ok(condition_on_measurement(rho, layout, povm)?.average_entropy(family))
}

/// Precomputed partial traces for fast evaluation of projective objectives.
///
/// `Tr_B[rho (I (x) P_k)] = (rho_A + sum_nu k_nu X_nu) / 2` with
/// `X_nu = Tr_B[rho (I (x) sigma_nu)]`, so each direction costs one
/// `d_A x d_A` linear combination.
#[derive(Debug, Clone)]
pub struct MeasurementKernel {
    half_rho_a: CMatrix,
    half_x: [CMatrix; 3],
}

impl MeasurementKernel {
    pub fn new(rho: &DensityMatrix, layout: BipartiteLayout) -> Result<Self> {
        layout.check_qubit_b(rho)?;
        let half = Complex64::new(0.5, 0.0);
        let p = pauli();
        let half_rho_a = partial_trace(rho, layout, Keep::A)?.into_matrix() * half;
        let half_x = [0, 1, 2].map(|nu| partial_trace_weighted(rho.matrix(), layout, &p[nu]) * half);
        Ok(Self { half_rho_a, half_x })
    }

    /// Unnormalized conditional block for outcome `+k` (pass `-k` for the other).
    pub fn block(&self, k: &Vector3<f64>) -> CMatrix {
        let mut m = self.half_rho_a.clone();
        for nu in 0..3 {
            m += &self.half_x[nu] * Complex64::new(k[nu], 0.0);
        }
        m
    }

    /// Projective conditional entropy along `k`.
    pub fn conditional_entropy(&self, k: &Vector3<f64>, family: EntropyFunctional) -> f64 {
        let mut total = 0.0;
        for sign in [1.0, -1.0] {
            let b = self.block(&(k * sign));
            let p = trace(&b).re;
            if p < ZERO_PROBABILITY {
                continue;
            }
            total += p * entropy_of_matrix(&(b / Complex64::new(p, 0.0)), family);
        }
        total
    }

    /// `S_f(rho')` of the unread measured state; its spectrum is the union of
    /// the two block spectra.
    pub fn unread_entropy(&self, k: &Vector3<f64>, family: EntropyFunctional) -> f64 {
        let plus = self.block(k);
        let minus = self.block(&-k);
        if let EntropyFunctional::Quadratic = family {
            return 2.0 * (1.0 - frobenius_sq(&plus) - frobenius_sq(&minus));
        }
        let mut spectrum = hermitian_eigenvalues(&plus);
        spectrum.extend(hermitian_eigenvalues(&minus));
        family.of_spectrum(&spectrum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::entropy;
    use crate::linalg::CVector;
    use crate::sample::{random_density, random_direction, random_povm3, random_pure, random_semi_quantum};
    use rand::{rngs::StdRng, SeedableRng};

    fn bell() -> DensityMatrix {
        let s = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
        let z = Complex64::new(0.0, 0.0);
        DensityMatrix::pure(&CVector::from_vec(vec![s, z, z, s]))
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn canonical_sign_rules() {
        let d = MeasurementDirection::new(Vector3::new(0.3, 0.1, -0.5)).unwrap();
        assert!(d.vector().z > 0.0);
        let d = MeasurementDirection::new(Vector3::new(-1.0, 0.5, 0.0)).unwrap();
        assert!(d.vector().x > 0.0);
        let d = MeasurementDirection::new(Vector3::new(0.0, -2.0, 0.0)).unwrap();
        assert_eq!(d, MeasurementDirection::y());
        assert!((d.vector().norm() - 1.0).abs() < 1e-12);
        assert!(MeasurementDirection::new(Vector3::zeros()).is_err());
    }

    #[test]
    fn angles_round_trip() {
        let d = MeasurementDirection::from_angles(0.7, 4.0);
        let (t, p) = d.angles();
        assert!((t - 0.7).abs() < 1e-12 && (p - 4.0).abs() < 1e-12);
        let (t, p) = MeasurementDirection::x().angles();
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-15 && p == 0.0);
    }

    #[test]
    fn projective_povm_elements() {
        let z = projective_povm(&MeasurementDirection::z());
        let p0 = qubit_projector(&z.elements()[0].1);
        let p1 = qubit_projector(&z.elements()[1].1);
        assert!(max_diff(&p0, &CMatrix::from_diagonal(&CVector::from_vec(vec![1.0.into(), 0.0.into()]))) < 1e-15);
        assert!(max_diff(&(p0 + p1), &identity(2)) < 1e-15);
        let x = projective_povm(&MeasurementDirection::x());
        let px = qubit_projector(&x.elements()[0].1);
        let expected = (identity(2) + &pauli()[0]) * Complex64::new(0.5, 0.0);
        assert!(max_diff(&px, &expected) < 1e-15);
        assert!(QubitPovm::new(x.elements().to_vec()).is_ok());
    }

    #[test]
    fn incomplete_povm_is_rejected() {
        let err = QubitPovm::new(vec![(1.0, Vector3::z())]).unwrap_err();
        assert!(matches!(err, QcorrError::InvalidPovm { .. }));
        assert!(QubitPovm::new(vec![(2.0, Vector3::new(0.0, 0.0, 2.0))]).is_err());
    }

    #[test]
    fn product_state_conditionals_equal_marginal() {
        let mut rng = StdRng::seed_from_u64(1);
        let a = random_density(&mut rng, 3);
        let ab = a.tensor(&random_density(&mut rng, 2));
        let layout = BipartiteLayout::new(3, 2);
        for _ in 0..5 {
            let ens = condition_on_measurement(&ab, layout, &projective_povm(&random_direction(&mut rng))).unwrap();
            for o in &ens.outcomes {
                assert!(o.rho_a.max_abs_diff(&a) < 1e-12);
            }
        }
    }

    #[test]
    fn bell_conditionals() {
        let layout = BipartiteLayout::two_qubit();
        let ens = condition_on_measurement(&bell(), layout, &projective_povm(&MeasurementDirection::z())).unwrap();
        assert!((ens.outcomes[0].p - 0.5).abs() < 1e-15);
        assert!((ens.outcomes[0].rho_a.matrix()[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!((ens.outcomes[1].rho_a.matrix()[(1, 1)].re - 1.0).abs() < 1e-14);
        let ens = condition_on_measurement(&bell(), layout, &projective_povm(&MeasurementDirection::x())).unwrap();
        // |+><+| has Bloch vector +x, |-><-| has -x.
        assert!((ens.outcomes[0].ra_post[0] - 1.0).abs() < 1e-14);
        assert!((ens.outcomes[1].ra_post[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn post_measurement_bloch_vector_follows_correlation_tensor() {
        // r_{A/k} = r_A + C k / (1 + r_B . k)
        let mut rng = StdRng::seed_from_u64(2);
        for da in [2, 3] {
            let layout = BipartiteLayout::new(da, 2);
            let rho = random_density(&mut rng, 2 * da);
            let dec = crate::statekit::bloch_decompose(&rho, layout).unwrap();
            let povm = random_povm3(&mut rng);
            let ens = condition_on_measurement(&rho, layout, &povm).unwrap();
            for ((q, k), o) in povm.elements().iter().zip(&ens.outcomes) {
                let expected = &dec.ra + &dec.c * k / (1.0 + dec.rb.dot(k));
                assert!((&o.ra_post - expected).amax() < 1e-12);
                assert!((o.p - 0.5 * q * (1.0 + dec.rb.dot(k))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_probability_outcome_uses_marginal() {
        let up = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let ab = DensityMatrix::maximally_mixed(2).tensor(&up);
        let ens = condition_on_measurement(&ab, BipartiteLayout::two_qubit(), &projective_povm(&MeasurementDirection::z())).unwrap();
        assert_eq!(ens.outcomes[1].p, 0.0);
        assert!(ens.outcomes[1].rho_a.max_abs_diff(&DensityMatrix::maximally_mixed(2)) < 1e-15);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let rho = random_density(&mut rng, 4);
            let ens = condition_on_measurement(&rho, BipartiteLayout::two_qubit(), &random_povm3(&mut rng)).unwrap();
            let total: f64 = ens.outcomes.iter().map(|o| o.p).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unread_state_examples() {
        let layout = BipartiteLayout::two_qubit();
        let out = unread_state(&bell(), layout, &MeasurementDirection::z()).unwrap();
        let expected = DensityMatrix::diagonal(&[0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-15);

        let mut rng = StdRng::seed_from_u64(4);
        let k = random_direction(&mut rng);
        let sq = random_semi_quantum(&mut rng, 3, &k);
        let again = unread_state(&sq, BipartiteLayout::new(3, 2), &k).unwrap();
        assert!(again.max_abs_diff(&sq) < 1e-12);
    }

    #[test]
    fn unread_state_is_idempotent() {
        let mut rng = StdRng::seed_from_u64(5);
        let layout = BipartiteLayout::new(3, 2);
        for _ in 0..10 {
            let rho = random_density(&mut rng, 6);
            let k = random_direction(&mut rng);
            let once = unread_state(&rho, layout, &k).unwrap();
            let twice = unread_state(&once, layout, &k).unwrap();
            assert!(twice.max_abs_diff(&once) < 1e-12);
            assert!((trace(once.matrix()).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_agrees_with_explicit_matrices() {
        let mut rng = StdRng::seed_from_u64(6);
        for da in [2, 3] {
            let layout = BipartiteLayout::new(da, 2);
            let rho = random_density(&mut rng, 2 * da);
            let kernel = MeasurementKernel::new(&rho, layout).unwrap();
            for family in [EntropyFunctional::VonNeumann, EntropyFunctional::Quadratic, EntropyFunctional::Tsallis(3.0)] {
                let k = random_direction(&mut rng);
                let explicit = entropy(&unread_state(&rho, layout, &k).unwrap(), family).unwrap();
                assert!((kernel.unread_entropy(&k.vector(), family) - explicit).abs() < 1e-12);
                let cond = conditional_entropy(&rho, layout, &projective_povm(&k), family).unwrap();
                assert!((kernel.conditional_entropy(&k.vector(), family) - cond).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pure_state_conditional_entropy_vanishes() {
        let mut rng = StdRng::seed_from_u64(7);
        let rho = DensityMatrix::pure(&random_pure(&mut rng, 6));
        let layout = BipartiteLayout::new(3, 2);
        for family in [EntropyFunctional::VonNeumann, EntropyFunctional::Quadratic, EntropyFunctional::Tsallis(0.5)] {
            let k = random_direction(&mut rng);
            assert!(conditional_entropy(&rho, layout, &projective_povm(&k), family).unwrap().abs() < 1e-6);
        }
        let bell_z = conditional_entropy(&bell(), BipartiteLayout::two_qubit(), &projective_povm(&MeasurementDirection::z()), EntropyFunctional::VonNeumann).unwrap();
        assert!(bell_z.abs() < 1e-12);
    }

    #[test]
    fn product_state_conditional_entropy_is_marginal() {
        let mut rng = StdRng::seed_from_u64(8);
        let a = random_density(&mut rng, 2);
        let ab = a.tensor(&random_density(&mut rng, 2));
        let sa = entropy(&a, EntropyFunctional::VonNeumann).unwrap();
        for _ in 0..5 {
            let k = random_direction(&mut rng);
            let s = conditional_entropy(&ab, BipartiteLayout::two_qubit(), &projective_povm(&k), EntropyFunctional::VonNeumann).unwrap();
            assert!((s - sa).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_entropy_never_exceeds_marginal() {
        let mut rng = StdRng::seed_from_u64(9);
        let families = [
            EntropyFunctional::VonNeumann,
            EntropyFunctional::Quadratic,
            EntropyFunctional::Tsallis(0.5),
            EntropyFunctional::Tsallis(3.0),
        ];
        for da in [2, 3] {
            let layout = BipartiteLayout::new(da, 2);
            for _ in 0..5 {
                let rho = random_density(&mut rng, 2 * da);
                let rho_a = partial_trace(&rho, layout, Keep::A).unwrap();
                let kernel = MeasurementKernel::new(&rho, layout).unwrap();
                for f in families {
                    let sa = entropy(&rho_a, f).unwrap();
                    for i in 0..20 {
                        for j in 0..20 {
                            let theta = std::f64::consts::PI * i as f64 / 19.0;
                            let phi = std::f64::consts::TAU * j as f64 / 20.0;
                            let k = MeasurementDirection::from_angles(theta, phi).vector();
                            assert!(kernel.conditional_entropy(&k, f) <= sa + 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn unread_spectrum_is_majorized() {
        let mut rng = StdRng::seed_from_u64(10);
        for _ in 0..100 {
            let rho = random_density(&mut rng, 4);
            let k = random_direction(&mut rng);
            let after = unread_state(&rho, BipartiteLayout::two_qubit(), &k).unwrap();
            let mut a = rho.eigenvalues();
            let mut b = after.eigenvalues();
            a.sort_by(|x, y| y.total_cmp(x));
            b.sort_by(|x, y| y.total_cmp(x));
            let (mut sa, mut sb) = (0.0, 0.0);
            for i in 0..4 {
                sa += a[i];
                sb += b[i];
                assert!(sb <= sa + 1e-12);
            }
        }
    }
}
