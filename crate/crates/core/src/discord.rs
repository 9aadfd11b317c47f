//! Quantum discord and minimum conditional entropies over projective
//! measurements on qubit B, plus the closed-form quadratic solution and the
//! correlation ellipsoid.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::deficit::{stationarity_residual, ResidualMode};
use crate::entropy::{entropy, EntropyFunctional};
use crate::error::Result;
use crate::linalg::{orthonormal_span, sym3_eigen_desc};
use crate::measurement::{MeasurementDirection, MeasurementKernel};
use crate::search::{minimize_on_sphere, SearchConfig};
use crate::statekit::{bloch_decompose, partial_trace, BipartiteLayout, BlochDecomposition, DensityMatrix, Keep};

/// Negative optimizer output above this is rounding and is clipped to zero.
pub const CLIP_WINDOW: f64 = 1e-9;
/// `1 - |r_B|` below this counts as a pure qubit marginal.
pub const DEGENERATE_MARGINAL: f64 = 1e-9;
/// Eigenvalues within this of the largest are treated as ties.
pub const EIGEN_TIE: f64 = 1e-10;
/// Pseudo-inverse cutoff for `N_B^{-1/2}`.
pub const PINV_CUTOFF: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ClosedForm,
    GridRefine,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub value: f64,
    pub k_star: MeasurementDirection,
    pub theta: f64,
    pub phi: f64,
    pub method: Method,
    /// Stationarity diagnostic where one is defined for the objective.
    pub residual: Option<f64>,
    /// Set when qubit B's marginal is pure and every direction is optimal.
    pub degenerate_marginal: bool,
}

impl OptimizationResult {
    fn new(value: f64, k: Vector3<f64>, method: Method) -> Self {
        let k_star = MeasurementDirection::new(k).expect("optimizer returns unit vectors");
        let (theta, phi) = k_star.angles();
        Self {
            value,
            k_star,
            theta,
            phi,
            method,
            residual: None,
            degenerate_marginal: false,
        }
    }
}

/// `D(A|B) = min_k S(A|B_k) - [S(rho_AB) - S(rho_B)]` over projective `k`.
pub fn discord(rho: &DensityMatrix, layout: BipartiteLayout, cfg: &SearchConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    let kernel = MeasurementKernel::new(rho, layout)?;
    let vn = EntropyFunctional::VonNeumann;
    let s_ab = entropy(rho, vn)?;
    let s_b = entropy(&partial_trace(rho, layout, Keep::B)?, vn)?;
    let min = minimize_on_sphere(|k| kernel.conditional_entropy(k, vn), cfg);
    let raw = min.value - (s_ab - s_b);
    let value = if (-CLIP_WINDOW..0.0).contains(&raw) { 0.0 } else { raw };
    let mut out = OptimizationResult::new(value, min.k, Method::GridRefine);
    out.residual = Some(stationarity_residual(rho, layout, &out.k_star, vn, ResidualMode::Discord)?);
    Ok(out)
}

/// `min_k S_f(A|B_k)` over projective `k`.
pub fn conditional_entropy_min(
    rho: &DensityMatrix,
    layout: BipartiteLayout,
    family: EntropyFunctional,
    cfg: &SearchConfig,
) -> Result<OptimizationResult> {
    family.validate()?;
    cfg.validate()?;
    let kernel = MeasurementKernel::new(rho, layout)?;
    let min = minimize_on_sphere(|k| kernel.conditional_entropy(k, family), cfg);
    Ok(OptimizationResult::new(min.value, min.k, Method::GridRefine))
}

/// Among an eigenspace, the direction with the largest `|k_z|`, then `|k_x|`.
pub(crate) fn tie_break(space: &[Vector3<f64>]) -> Vector3<f64> {
    let basis = orthonormal_span(space);
    for target in [Vector3::z(), Vector3::x(), Vector3::y()] {
        let proj: Vector3<f64> = basis.iter().map(|b| b * b.dot(&target)).sum();
        if proj.norm() > 1e-8 {
            return proj.normalize();
        }
    }
    Vector3::z()
}

/// Dominant eigenpair of a symmetric 3x3 matrix with deterministic tie-breaking.
pub(crate) fn dominant_direction(m: &Matrix3<f64>, transform: &Matrix3<f64>) -> (f64, Vector3<f64>) {
    let (vals, vecs) = sym3_eigen_desc(m);
    let space: Vec<Vector3<f64>> = (0..3)
        .filter(|&i| vals[i] >= vals[0] - EIGEN_TIE)
        .map(|i| transform * vecs[i])
        .collect();
    (vals[0], tie_break(&space))
}

struct Normalized {
    inv_sqrt: Matrix3<f64>,
    cn: DMatrix<f64>,
}

fn normalized_tensor(dec: &BlochDecomposition) -> Normalized {
    let n_b = Matrix3::identity() - dec.rb * dec.rb.transpose();
    let (vals, vecs) = sym3_eigen_desc(&n_b);
    let mut inv_sqrt = Matrix3::zeros();
    for i in 0..3 {
        if vals[i] >= PINV_CUTOFF {
            inv_sqrt += vecs[i] * vecs[i].transpose() / vals[i].sqrt();
        }
    }
    let inv_dyn = DMatrix::from_fn(3, 3, |r, c| inv_sqrt[(r, c)]);
    Normalized {
        inv_sqrt,
        cn: &dec.c * inv_dyn,
    }
}

fn gram3(m: &DMatrix<f64>) -> Matrix3<f64> {
    let g = m.transpose() * m;
    Matrix3::from_fn(|r, c| g[(r, c)])
}

/// Largest generalized eigenvalue of `C^T C k = lambda N_B k` and its direction.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticSolution {
    pub lambda_max: f64,
    pub k: Vector3<f64>,
    pub degenerate_marginal: bool,
}

pub fn quadratic_eigen(dec: &BlochDecomposition) -> QuadraticSolution {
    if 1.0 - dec.rb.norm() < DEGENERATE_MARGINAL {
        return QuadraticSolution {
            lambda_max: 0.0,
            k: Vector3::z(),
            degenerate_marginal: true,
        };
    }
    let norm = normalized_tensor(dec);
    let (lambda_max, k) = dominant_direction(&gram3(&norm.cn), &norm.inv_sqrt);
    QuadraticSolution {
        lambda_max: lambda_max.max(0.0),
        k,
        degenerate_marginal: false,
    }
}

/// `min_k S_2(A|B_k) = S_2(rho_A) - (2/d_A) lambda_max`.
pub fn quadratic_closed_form(rho: &DensityMatrix, layout: BipartiteLayout) -> Result<OptimizationResult> {
    let dec = bloch_decompose(rho, layout)?;
    let sol = quadratic_eigen(&dec);
    let value = dec.s2_a() - 2.0 / dec.da as f64 * sol.lambda_max;
    let mut out = OptimizationResult::new(value, sol.k, Method::ClosedForm);
    out.degenerate_marginal = sol.degenerate_marginal;
    Ok(out)
}

/// Principal axes of the set of post-measurement Bloch vectors of A.
#[derive(Debug, Clone)]
pub struct CorrelationEllipsoid {
    /// Singular values of `C_N = C N_B^{-1/2}`, descending.
    pub semi_axes: [f64; 3],
    /// Right singular vectors (measurement space of B).
    pub axis_dirs_b: [Vector3<f64>; 3],
    /// Left singular vectors in A's `(d_A^2 - 1)`-space, one per non-zero axis.
    pub axis_dirs_a: Vec<DVector<f64>>,
    pub center: DVector<f64>,
    pub degenerate_marginal: bool,
}

pub fn ellipsoid(rho: &DensityMatrix, layout: BipartiteLayout) -> Result<CorrelationEllipsoid> {
    let dec = bloch_decompose(rho, layout)?;
    let degenerate_marginal = 1.0 - dec.rb.norm() < DEGENERATE_MARGINAL;
    let norm = normalized_tensor(&dec);
    let (vals, vecs) = sym3_eigen_desc(&gram3(&norm.cn));
    let semi_axes = vals.map(|v| v.max(0.0).sqrt());
    let mut axis_dirs_a = Vec::new();
    for i in 0..3 {
        if semi_axes[i] > 1e-12 {
            let kn = DVector::from_column_slice(vecs[i].as_slice());
            axis_dirs_a.push(&norm.cn * kn / semi_axes[i]);
        }
    }
    Ok(CorrelationEllipsoid {
        semi_axes,
        axis_dirs_b: vecs,
        axis_dirs_a,
        center: dec.ra,
        degenerate_marginal,
    })
}
