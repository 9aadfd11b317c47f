//! Minimization of smooth functions of a projective qubit measurement axis.
//!
//! Two stages: an exhaustive `(theta, phi)` grid over the upper hemisphere,
//! then a local refinement around the best grid point in a tangent-plane chart
//! (no pole singularity). The refinement is a Nelder-Mead simplex followed by
//! a few Newton steps with central-difference derivatives, which pins the
//! minimizer well below the simplex resolution.

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{QcorrError, Result};
use crate::exec::Execution;
use crate::measurement::canonicalize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Polar grid divisions over `[0, pi/2]`.
    pub grid_theta: usize,
    /// Azimuthal grid divisions over `[0, 2 pi)`.
    pub grid_phi: usize,
    /// Simplex stops when the objective spread falls below this.
    pub refine_tol: f64,
    pub refine_max_iter: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_theta: 60,
            grid_phi: 120,
            refine_tol: 1e-10,
            refine_max_iter: 200,
            execution: Execution::default(),
        }
    }
}

impl SearchConfig {
    /// One-degree grid.
    pub fn fine() -> Self {
        Self {
            grid_theta: 90,
            grid_phi: 360,
            ..Self::default()
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_theta < 8 || self.grid_phi < 8 {
            return Err(QcorrError::InvalidConfig {
                reason: format!("grids must be >= 8 (got {} x {})", self.grid_theta, self.grid_phi),
            });
        }
        if !(self.refine_tol > 0.0) || self.refine_max_iter == 0 {
            return Err(QcorrError::InvalidConfig {
                reason: "refine_tol and refine_max_iter must be positive".into(),
            });
        }
        Ok(())
    }

    fn theta_step(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 / self.grid_theta as f64
    }
}

/// Grid directions: the pole once, then every `(theta_i, phi_j)` with `i >= 1`.
pub fn grid_directions(cfg: &SearchConfig) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(1 + cfg.grid_theta * cfg.grid_phi);
    out.push(Vector3::z());
    let dt = cfg.theta_step();
    let dp = std::f64::consts::TAU / cfg.grid_phi as f64;
    for i in 1..=cfg.grid_theta {
        let theta = dt * i as f64;
        let (st, ct) = theta.sin_cos();
        for j in 0..cfg.grid_phi {
            let (sp, cp) = (dp * j as f64).sin_cos();
            out.push(Vector3::new(st * cp, st * sp, ct));
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct SphereMinimum {
    /// Canonical unit vector.
    pub k: Vector3<f64>,
    pub value: f64,
    pub grid_value: f64,
    pub evaluations: usize,
}

/// Tangent-plane chart `k(u, v) = normalize(k0 + u e1 + v e2)`.
struct Chart {
    k0: Vector3<f64>,
    e1: Vector3<f64>,
    e2: Vector3<f64>,
}

impl Chart {
    fn at(k0: Vector3<f64>) -> Self {
        let helper = if k0.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let e1 = (helper - k0 * k0.dot(&helper)).normalize();
        let e2 = k0.cross(&e1);
        Self { k0, e1, e2 }
    }

    fn point(&self, uv: &Vector2<f64>) -> Vector3<f64> {
        (self.k0 + self.e1 * uv.x + self.e2 * uv.y).normalize()
    }
}

pub fn minimize_on_sphere<F>(objective: F, cfg: &SearchConfig) -> SphereMinimum
where
    F: Fn(&Vector3<f64>) -> f64 + Sync + Send,
{
    let grid = grid_directions(cfg);
    let values = cfg.execution.map(&grid, |k| objective(k));
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let grid_value = values[best];
    let mut evaluations = grid.len();

    let chart = Chart::at(grid[best]);
    let f = |uv: &Vector2<f64>| objective(&chart.point(uv));
    let (uv, mut value, n) = nelder_mead(&f, cfg.theta_step(), cfg.refine_tol, cfg.refine_max_iter);
    evaluations += n;
    let mut k = chart.point(&uv);
    if value > grid_value {
        k = grid[best];
        value = grid_value;
    }
    let (k, value, n) = newton_polish(&objective, k, value);
    evaluations += n;
    SphereMinimum {
        k: canonicalize(k),
        value,
        grid_value,
        evaluations,
    }
}

fn nelder_mead<F: Fn(&Vector2<f64>) -> f64>(
    f: &F,
    step: f64,
    tol: f64,
    max_iter: usize,
) -> (Vector2<f64>, f64, usize) {
    let mut pts = [Vector2::zeros(), Vector2::new(step, 0.0), Vector2::new(0.0, step)];
    let mut vals = pts.map(|p| f(&p));
    let mut evals = 3;
    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.map(|i| pts[i]);
        vals = order.map(|i| vals[i]);
        if vals[2] - vals[0] <= tol {
            break;
        }
        let centroid = (pts[0] + pts[1]) * 0.5;
        let reflected = centroid + (centroid - pts[2]);
        let fr = f(&reflected);
        evals += 1;
        if fr < vals[0] {
            let expanded = centroid + (centroid - pts[2]) * 2.0;
            let fe = f(&expanded);
            evals += 1;
            if fe < fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
        } else {
            let (candidate, fc) = if fr < vals[2] {
                let c = centroid + (reflected - centroid) * 0.5;
                (c, f(&c))
            } else {
                let c = centroid + (pts[2] - centroid) * 0.5;
                (c, f(&c))
            };
            evals += 1;
            if fc < vals[2].min(fr) {
                pts[2] = candidate;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    pts[i] = pts[0] + (pts[i] - pts[0]) * 0.5;
                    vals[i] = f(&pts[i]);
                }
                evals += 2;
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    (pts[best], vals[best], evals)
}

const FD_STEP: f64 = 1e-4;

/// Newton iterations on central-difference derivatives in a chart re-centred
/// at each iterate. Steps are kept only if they do not raise the objective
/// beyond rounding.
fn newton_polish<F: Fn(&Vector3<f64>) -> f64>(f: &F, k: Vector3<f64>, value: f64) -> (Vector3<f64>, f64, usize) {
    let (mut k, mut value) = (k, value);
    let mut evals = 0;
    for _ in 0..8 {
        let chart = Chart::at(k);
        let g = |u: f64, v: f64| f(&chart.point(&Vector2::new(u, v)));
        let h = FD_STEP;
        let (fpp, fmp, fpm, fmm) = (g(h, h), g(-h, h), g(h, -h), g(-h, -h));
        let (fu_p, fu_m, fv_p, fv_m) = (g(h, 0.0), g(-h, 0.0), g(0.0, h), g(0.0, -h));
        evals += 8;
        let grad = Vector2::new((fu_p - fu_m) / (2.0 * h), (fv_p - fv_m) / (2.0 * h));
        let huu = (fu_p - 2.0 * value + fu_m) / (h * h);
        let hvv = (fv_p - 2.0 * value + fv_m) / (h * h);
        let huv = (fpp - fmp - fpm + fmm) / (4.0 * h * h);
        let hess = Matrix2::new(huu, huv, huv, hvv);
        let det = hess.determinant();
        if !(huu > 0.0 && det > 0.0) {
            break;
        }
        let step = -(hess.try_inverse().expect("positive definite") * grad);
        let len = step.norm();
        if !len.is_finite() || len > 1e-2 {
            break;
        }
        let candidate = chart.point(&step);
        let fc = f(&candidate);
        evals += 1;
        let noise = 1e-14 * value.abs().max(1.0);
        if fc <= value + noise {
            k = candidate;
            value = fc;
        } else {
            break;
        }
        if len < 1e-12 {
            break;
        }
    }
    (k, value, evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_size_and_coverage() {
        let cfg = SearchConfig::default();
        let grid = grid_directions(&cfg);
        assert_eq!(grid.len(), 1 + 60 * 120);
        assert!(grid.iter().all(|k| (k.norm() - 1.0).abs() < 1e-14 && k.z >= -1e-15));
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let bad = SearchConfig { grid_theta: 4, ..SearchConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SearchConfig { refine_tol: 0.0, ..SearchConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn finds_quadratic_form_minimum_to_high_precision() {
        // f(k) = k^T A k is minimized by the smallest eigenvector of A.
        let a = nalgebra::Matrix3::new(2.0, 0.3, -0.1, 0.3, 1.5, 0.2, -0.1, 0.2, 0.7);
        let (vals, vecs) = crate::linalg::sym3_eigen_desc(&a);
        let target = canonicalize(vecs[2]);
        let out = minimize_on_sphere(|k| k.dot(&(a * k)), &SearchConfig::default());
        assert!((out.value - vals[2]).abs() < 1e-12);
        assert!(out.k.dot(&target).abs() > 1.0 - 1e-14);
    }

    #[test]
    fn handles_minimum_at_pole_and_equator() {
        let cfg = SearchConfig::default().with_execution(Execution::Sequential);
        let out = minimize_on_sphere(|k| 1.0 - k.z * k.z, &cfg);
        assert!(out.k.z > 1.0 - 1e-12);
        let off = Vector3::new(1.0, 1e-3, 0.0).normalize();
        let out = minimize_on_sphere(|k| 1.0 - k.dot(&off).powi(2), &cfg);
        assert!(out.k.dot(&off).abs() > 1.0 - 1e-12);
    }

    #[test]
    fn constant_objective_keeps_grid_point() {
        let out = minimize_on_sphere(|_| 0.25, &SearchConfig::default());
        assert_eq!(out.value, 0.25);
        assert!((out.k.norm() - 1.0).abs() < 1e-12);
    }
}
