//! Generalized one-way information deficits `I_f = min_k S_f(rho') - S_f(rho)`
//! for complete projective measurements on qubit B.

use nalgebra::Matrix3;
use serde::Serialize;

use crate::discord::{dominant_direction, Method, CLIP_WINDOW};
use crate::entropy::{entropy, f_prime_of_matrix, EntropyFunctional, EIGEN_FLOOR};
use crate::error::{QcorrError, Result};
use crate::linalg::{frobenius_sq, spectral_map, CMatrix};
use crate::measurement::{MeasurementDirection, MeasurementKernel, unread_state};
use crate::search::{minimize_on_sphere, SearchConfig};
use crate::statekit::{bloch_decompose, partial_trace, BipartiteLayout, BlochDecomposition, DensityMatrix, Keep};

#[derive(Debug, Clone, Serialize)]
pub struct DeficitResult {
    pub value: f64,
    pub k_star: MeasurementDirection,
    pub theta: f64,
    pub phi: f64,
    pub method: Method,
    pub stationarity_residual: f64,
}

impl DeficitResult {
    fn new(value: f64, k_star: MeasurementDirection, method: Method, residual: f64) -> Self {
        let (theta, phi) = k_star.angles();
        Self {
            value,
            k_star,
            theta,
            phi,
            method,
            stationarity_residual: residual,
        }
    }
}

fn clip(raw: f64) -> f64 {
    if (-CLIP_WINDOW..0.0).contains(&raw) {
        0.0
    } else {
        raw
    }
}

/// `M_2 = r_B r_B^T + J^T J`.
#[derive(Debug, Clone, Copy)]
pub struct M2Matrix {
    pub m: Matrix3<f64>,
    pub lambda_max: f64,
    pub trace: f64,
}

pub fn m2_matrix(dec: &BlochDecomposition) -> M2Matrix {
    let jtj = dec.j.transpose() * &dec.j;
    let m = dec.rb * dec.rb.transpose() + Matrix3::from_fn(|r, c| jtj[(r, c)]);
    let lambda_max = crate::linalg::sym3_eigen_desc(&m).0[0];
    M2Matrix {
        m,
        lambda_max,
        trace: m.trace(),
    }
}

/// Numerical minimization of `S_f(rho'(k)) - S_f(rho)`.
pub fn deficit(
    rho: &DensityMatrix,
    layout: BipartiteLayout,
    family: EntropyFunctional,
    cfg: &SearchConfig,
) -> Result<DeficitResult> {
    family.validate()?;
    cfg.validate()?;
    let kernel = MeasurementKernel::new(rho, layout)?;
    let base = entropy(rho, family)?;
    let min = minimize_on_sphere(|k| kernel.unread_entropy(k, family), cfg);
    let k_star = MeasurementDirection::new(min.k)?;
    let residual_family = match family {
        EntropyFunctional::Renyi(q) => EntropyFunctional::Tsallis(q),
        f => f,
    };
    let residual = stationarity_residual(rho, layout, &k_star, residual_family, ResidualMode::Deficit)?;
    Ok(DeficitResult::new(clip(min.value - base), k_star, Method::GridRefine, residual))
}

/// `I_2 = (tr M_2 - lambda_max) / d_A`, minimized by the dominant eigenvector of `M_2`.
pub fn quadratic_deficit_closed(rho: &DensityMatrix, layout: BipartiteLayout) -> Result<DeficitResult> {
    let dec = bloch_decompose(rho, layout)?;
    let m2 = m2_matrix(&dec);
    let (lambda_max, k) = dominant_direction(&m2.m, &Matrix3::identity());
    let value = clip((m2.trace - lambda_max) / dec.da as f64);
    let k_star = MeasurementDirection::new(k)?;
    let residual = stationarity_residual(rho, layout, &k_star, EntropyFunctional::Quadratic, ResidualMode::Deficit)?;
    Ok(DeficitResult::new(value, k_star, Method::ClosedForm, residual))
}

/// Renyi-q deficit. The minimizer is shared with the Tsallis-q deficit
/// (closed form for `q = 2`); the Renyi value is evaluated there.
pub fn renyi_deficit(rho: &DensityMatrix, layout: BipartiteLayout, q: f64, cfg: &SearchConfig) -> Result<DeficitResult> {
    let family = EntropyFunctional::Renyi(q);
    family.validate()?;
    let tsallis = if q == 2.0 {
        quadratic_deficit_closed(rho, layout)?
    } else {
        deficit(rho, layout, EntropyFunctional::Tsallis(q), cfg)?
    };
    let after = unread_state(rho, layout, &tsallis.k_star)?;
    let value = clip(entropy(&after, family)? - entropy(rho, family)?);
    Ok(DeficitResult::new(value, tsallis.k_star, tsallis.method, tsallis.stationarity_residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualMode {
    Deficit,
    Discord,
}

/// `Tr_A` of an arbitrary operator on `A (x) B`.
fn trace_out_a(m: &CMatrix, layout: BipartiteLayout) -> CMatrix {
    let (da, db) = (layout.da, layout.db);
    CMatrix::from_fn(db, db, |b, bp| (0..da).map(|a| m[(a * db + b, a * db + bp)]).sum())
}

/// Frobenius norm of `Tr_A [f'(rho'_AB), rho_AB]`, plus `[log2 rho'_B, rho_B]`
/// in discord mode (von Neumann only). Vanishes at stationary measurements.
pub fn stationarity_residual(
    rho: &DensityMatrix,
    layout: BipartiteLayout,
    k: &MeasurementDirection,
    family: EntropyFunctional,
    mode: ResidualMode,
) -> Result<f64> {
    family.validate()?;
    if !family.is_trace_form() || (mode == ResidualMode::Discord && family != EntropyFunctional::VonNeumann) {
        return Err(QcorrError::UnsupportedFamily { family: family.name() });
    }
    let after = unread_state(rho, layout, k)?;
    let fp = f_prime_of_matrix(after.matrix(), family)?.matrix;
    let m = rho.matrix();
    let comm = &fp * m - m * &fp;
    let mut total = trace_out_a(&comm, layout);
    if mode == ResidualMode::Discord {
        let rho_b = partial_trace(rho, layout, Keep::B)?.into_matrix();
        let after_b = partial_trace(&after, layout, Keep::B)?.into_matrix();
        let log_b = spectral_map(&after_b, |v| v.max(EIGEN_FLOOR).log2());
        total += &log_b * &rho_b - &rho_b * &log_b;
    }
    Ok(frobenius_sq(&total).sqrt())
}

/// `2 Tr(rho^2 - rho'^2)` for explicit measured states.
pub fn quadratic_loss(rho: &DensityMatrix, after: &DensityMatrix) -> f64 {
    2.0 * (frobenius_sq(rho.matrix()) - frobenius_sq(after.matrix()))
}

/// `S(rho || sigma)` in bits.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let log_rho = spectral_map(rho.matrix(), |v| if v > 0.0 { v.log2() } else { 0.0 });
    let log_sigma = spectral_map(sigma.matrix(), |v| v.max(EIGEN_FLOOR).log2());
    let diff = log_rho - log_sigma;
    (rho.matrix() * diff).trace().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discord::discord;
    use crate::linalg::CVector;
    use crate::sample::{random_density, random_direction, random_pure, random_semi_quantum};
    use crate::search::grid_directions;
    use num_complex::Complex64;
    use rand::{rngs::StdRng, SeedableRng};

    fn bell() -> DensityMatrix {
        let s = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
        let z = Complex64::new(0.0, 0.0);
        DensityMatrix::pure(&CVector::from_vec(vec![s, z, z, s]))
    }

    fn coarse() -> SearchConfig {
        SearchConfig { grid_theta: 20, grid_phi: 40, ..SearchConfig::default() }
    }

    #[test]
    fn bell_deficits() {
        let layout = BipartiteLayout::two_qubit();
        let i1 = deficit(&bell(), layout, EntropyFunctional::VonNeumann, &coarse()).unwrap();
        assert!((i1.value - 1.0).abs() < 1e-10);
        let i2 = quadratic_deficit_closed(&bell(), layout).unwrap();
        assert!((i2.value - 1.0).abs() < 1e-14);
        let r2 = renyi_deficit(&bell(), layout, 2.0, &coarse()).unwrap();
        assert!((r2.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_m2_is_rank_one() {
        let mut rng = StdRng::seed_from_u64(1);
        let a = random_density(&mut rng, 2);
        let b = random_density(&mut rng, 2);
        let ab = a.tensor(&b);
        let dec = bloch_decompose(&ab, BipartiteLayout::two_qubit()).unwrap();
        let m2 = m2_matrix(&dec);
        let expected = dec.rb * dec.rb.transpose() * (1.0 + dec.ra.norm_squared());
        assert!((m2.m - expected).norm() < 1e-12);
        let i2 = quadratic_deficit_closed(&ab, BipartiteLayout::two_qubit()).unwrap();
        assert!(i2.value.abs() < 1e-12);
        assert!(i2.k_star.vector().dot(&dec.rb.normalize()).abs() > 1.0 - 1e-10);
    }

    #[test]
    fn closed_form_matches_explicit_purity_loss_on_grid() {
        // Oracle: 2 Tr(rho^2 - rho'^2) with rho' from explicit projector products.
        let mut rng = StdRng::seed_from_u64(2);
        let cfg = SearchConfig { grid_theta: 12, grid_phi: 24, ..SearchConfig::default() };
        for da in [2, 3] {
            let layout = BipartiteLayout::new(da, 2);
            let rho = random_density(&mut rng, 2 * da);
            let closed = quadratic_deficit_closed(&rho, layout).unwrap();
            let mut best = f64::INFINITY;
            for v in grid_directions(&cfg) {
                let k = MeasurementDirection::new(v).unwrap();
                let loss = quadratic_loss(&rho, &unread_state(&rho, layout, &k).unwrap());
                assert!(loss >= closed.value - 1e-12);
                best = best.min(loss);
            }
            let at_k = quadratic_loss(&rho, &unread_state(&rho, layout, &closed.k_star).unwrap());
            assert!((at_k - closed.value).abs() < 1e-12);
            assert!(best - closed.value < 0.05);
        }
    }

    #[test]
    fn numeric_quadratic_deficit_matches_closed_form() {
        let mut rng = StdRng::seed_from_u64(3);
        for da in [2, 3] {
            let layout = BipartiteLayout::new(da, 2);
            let rho = random_density(&mut rng, 2 * da);
            let closed = quadratic_deficit_closed(&rho, layout).unwrap();
            let numeric = deficit(&rho, layout, EntropyFunctional::Quadratic, &SearchConfig::default()).unwrap();
            assert!((closed.value - numeric.value).abs() < 1e-10);
        }
    }

    #[test]
    fn pure_state_deficit_uses_schmidt_basis() {
        let mut rng = StdRng::seed_from_u64(4);
        let layout = BipartiteLayout::two_qubit();
        for _ in 0..5 {
            let rho = DensityMatrix::pure(&random_pure(&mut rng, 4));
            let rho_a = partial_trace(&rho, layout, Keep::A).unwrap();
            let rho_b = partial_trace(&rho, layout, Keep::B).unwrap();
            for f in [EntropyFunctional::VonNeumann, EntropyFunctional::Tsallis(3.0)] {
                let out = deficit(&rho, layout, f, &SearchConfig::default()).unwrap();
                assert!((out.value - entropy(&rho_a, f).unwrap()).abs() < 1e-8);
                // k* diagonalizes rho_B: rho_B's Bloch vector is parallel to k*.
                let rb = crate::statekit::gellmann_basis(2).expectations(rho_b.matrix());
                let k = out.k_star.vector();
                let cos = (rb[0] * k.x + rb[1] * k.y + rb[2] * k.z).abs() / rb.norm();
                assert!(cos > 1.0 - 1e-8);
            }
        }
    }

    #[test]
    fn semi_quantum_deficit_vanishes() {
        let mut rng = StdRng::seed_from_u64(5);
        let k = random_direction(&mut rng);
        let sq = random_semi_quantum(&mut rng, 2, &k);
        let layout = BipartiteLayout::two_qubit();
        for f in [EntropyFunctional::VonNeumann, EntropyFunctional::Quadratic, EntropyFunctional::Tsallis(0.5)] {
            let out = deficit(&sq, layout, f, &SearchConfig::default()).unwrap();
            assert!(out.value.abs() < 1e-8, "{f:?}: {}", out.value);
            assert!(out.k_star.axis_angle(&k) < 1e-4);
        }
        assert!(renyi_deficit(&sq, layout, 2.0, &coarse()).unwrap().value.abs() < 1e-10);
        let res = stationarity_residual(&sq, layout, &k, EntropyFunctional::VonNeumann, ResidualMode::Deficit).unwrap();
        assert!(res < 1e-10);
    }

    #[test]
    fn renyi_shares_tsallis_minimizer() {
        let mut rng = StdRng::seed_from_u64(6);
        let layout = BipartiteLayout::two_qubit();
        for _ in 0..5 {
            let rho = random_density(&mut rng, 4);
            let r2 = renyi_deficit(&rho, layout, 2.0, &SearchConfig::default()).unwrap();
            let t2 = deficit(&rho, layout, EntropyFunctional::Tsallis(2.0), &SearchConfig::default()).unwrap();
            assert!(r2.k_star.axis_angle(&t2.k_star) < 1e-8, "{}", r2.k_star.axis_angle(&t2.k_star));
            let direct = deficit(&rho, layout, EntropyFunctional::Renyi(2.0), &SearchConfig::default()).unwrap();
            assert!((direct.value - r2.value).abs() < 1e-10);
        }
        assert!(matches!(renyi_deficit(&bell(), layout, 1.0, &coarse()), Err(QcorrError::InvalidQ { .. })));
    }

    #[test]
    fn residual_vanishes_at_closed_form_optimum() {
        let mut rng = StdRng::seed_from_u64(7);
        for da in [2, 3] {
            let layout = BipartiteLayout::new(da, 2);
            for _ in 0..5 {
                let rho = random_density(&mut rng, 2 * da);
                let out = quadratic_deficit_closed(&rho, layout).unwrap();
                assert!(out.stationarity_residual < 1e-8);
                let random = random_direction(&mut rng);
                let r = stationarity_residual(&rho, layout, &random, EntropyFunctional::Quadratic, ResidualMode::Deficit).unwrap();
                assert!(out.stationarity_residual < r);
            }
        }
    }

    #[test]
    fn von_neumann_residuals_vanish_after_refinement() {
        let mut rng = StdRng::seed_from_u64(8);
        let layout = BipartiteLayout::two_qubit();
        for _ in 0..5 {
            let rho = random_density(&mut rng, 4);
            let i1 = deficit(&rho, layout, EntropyFunctional::VonNeumann, &SearchConfig::default()).unwrap();
            assert!(i1.stationarity_residual < 1e-6, "{}", i1.stationarity_residual);
            let d = discord(&rho, layout, &SearchConfig::default()).unwrap();
            assert!(d.residual.unwrap() < 1e-6);
        }
    }

    #[test]
    fn residual_rejects_unsupported_modes() {
        let k = MeasurementDirection::z();
        let layout = BipartiteLayout::two_qubit();
        assert!(stationarity_residual(&bell(), layout, &k, EntropyFunctional::Renyi(2.0), ResidualMode::Deficit).is_err());
        assert!(stationarity_residual(&bell(), layout, &k, EntropyFunctional::Quadratic, ResidualMode::Discord).is_err());
    }

    #[test]
    fn von_neumann_deficit_is_relative_entropy() {
        let mut rng = StdRng::seed_from_u64(9);
        let layout = BipartiteLayout::new(3, 2);
        for _ in 0..5 {
            let rho = random_density(&mut rng, 6);
            let k = random_direction(&mut rng);
            let after = unread_state(&rho, layout, &k).unwrap();
            let vn = EntropyFunctional::VonNeumann;
            let diff = entropy(&after, vn).unwrap() - entropy(&rho, vn).unwrap();
            assert!((relative_entropy(&rho, &after) - diff).abs() < 1e-10);
        }
    }
}
