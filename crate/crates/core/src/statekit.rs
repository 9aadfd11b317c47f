//! Density matrices, partial traces and the qudit-qubit Bloch decomposition.
//!
//! Joint basis index convention: `i = i_A * d_B + i_B` (A slow, B fast).
//!
//! The traceless operator basis is normalized as `Tr s_mu s_nu = d delta_mu_nu`
//! (Pauli normalization for qubits), so a state reads
//! `rho = (I + r . s) / d` with `r = <s>`.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QcorrError, Result};
use crate::linalg::{
    frobenius_sq, hermitian_eigen, hermitian_eigenvalues, hermitize, max_asymmetry, pauli, trace,
    CMatrix, CVector, ZERO,
};

/// Rejection thresholds for [`make_density`].
pub const HERMITIAN_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;

/// A validated Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

/// Result of [`make_density`]: the state plus what had to be fixed.
#[derive(Debug, Clone)]
pub struct Construction {
    pub state: DensityMatrix,
    /// Frobenius norm of the change applied to the input.
    pub correction: f64,
    /// Number of negative eigenvalues clipped to zero.
    pub clipped: usize,
}

/// Validate `entries` as a density matrix, hermitizing, clipping negative
/// eigenvalues and renormalizing the trace.
pub fn make_density(entries: CMatrix) -> Result<Construction> {
    let (rows, cols) = entries.shape();
    if rows != cols || rows == 0 {
        return Err(QcorrError::NotSquare { rows, cols });
    }
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QcorrError::Numerical {
            reason: "non-finite matrix entry".into(),
        });
    }
    let asymmetry = max_asymmetry(&entries);
    if asymmetry > HERMITIAN_TOL {
        return Err(QcorrError::NotHermitian { asymmetry });
    }
    let tr = trace(&entries);
    let deviation = (tr - Complex64::new(1.0, 0.0)).norm();
    if deviation > TRACE_TOL {
        return Err(QcorrError::TraceDeviation { deviation });
    }
    let herm = hermitize(&entries);
    let (values, vecs) = hermitian_eigen(&herm);
    let min_eigenvalue = values[0];
    if min_eigenvalue < -POSITIVITY_TOL {
        return Err(QcorrError::NotPositive { min_eigenvalue });
    }
    let clipped = values.iter().filter(|&&v| v < 0.0).count();
    let mat = if clipped > 0 {
        let kept: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = kept.iter().sum();
        let mut scaled = vecs.clone();
        for (col, &lambda) in kept.iter().enumerate() {
            let w = Complex64::new(lambda / total, 0.0);
            for row in 0..rows {
                scaled[(row, col)] *= w;
            }
        }
        hermitize(&(scaled * vecs.adjoint()))
    } else {
        let t = trace(&herm).re;
        herm / Complex64::new(t, 0.0)
    };
    let correction = frobenius_sq(&(&mat - &entries)).sqrt();
    Ok(Construction {
        state: DensityMatrix { mat },
        correction,
        clipped,
    })
}

impl DensityMatrix {
    /// [`make_density`] without the correction report.
    pub fn new(entries: CMatrix) -> Result<Self> {
        make_density(entries).map(|c| c.state)
    }

    /// Internal constructor for matrices that are density matrices up to
    /// rounding (partial traces, projections of valid states).
    pub(crate) fn from_trusted(mat: CMatrix) -> Self {
        let herm = hermitize(&mat);
        let t = trace(&herm).re;
        DensityMatrix {
            mat: herm / Complex64::new(t, 0.0),
        }
    }

    /// Projector onto a (normalized internally) pure state.
    pub fn pure(psi: &CVector) -> Self {
        let norm = psi.norm();
        let v = psi / Complex64::new(norm, 0.0);
        DensityMatrix {
            mat: &v * v.adjoint(),
        }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix {
            mat: CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0),
        }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let d = probs.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, &p) in probs.iter().enumerate() {
            m[(i, i)] = Complex64::new(p, 0.0);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Eigenvalues ascending, tiny negatives clipped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// Convex combination `p a + (1 - p) b`.
    pub fn mix(p: f64, a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
        if a.dim() != b.dim() {
            return Err(QcorrError::DimensionMismatch {
                expected: a.dim(),
                actual: b.dim(),
            });
        }
        let m = &a.mat * Complex64::new(p, 0.0) + &b.mat * Complex64::new(1.0 - p, 0.0);
        Ok(DensityMatrix::from_trusted(m))
    }

    /// Conjugate by a unitary: `U rho U^dagger`.
    pub fn conjugate(&self, unitary: &CMatrix) -> DensityMatrix {
        DensityMatrix::from_trusted(unitary * &self.mat * unitary.adjoint())
    }

    /// Max entrywise distance to another state of the same dimension.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Dimensions of a bipartite split `A (x) B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteLayout {
    pub da: usize,
    pub db: usize,
}

impl BipartiteLayout {
    pub fn new(da: usize, db: usize) -> Self {
        Self { da, db }
    }

    pub fn two_qubit() -> Self {
        Self { da: 2, db: 2 }
    }

    /// Qudit-qubit layout for a joint state of dimension `dim`.
    pub fn qudit_qubit(dim: usize) -> Result<Self> {
        if dim < 4 || !dim.is_multiple_of(2) {
            return Err(QcorrError::LayoutMismatch { da: dim / 2, db: 2, dim });
        }
        Ok(Self { da: dim / 2, db: 2 })
    }

    pub fn check(&self, rho: &DensityMatrix) -> Result<()> {
        if self.da == 0 || self.db == 0 || self.da * self.db != rho.dim() {
            return Err(QcorrError::LayoutMismatch {
                da: self.da,
                db: self.db,
                dim: rho.dim(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_qubit_b(&self, rho: &DensityMatrix) -> Result<()> {
        self.check(rho)?;
        if self.db != 2 {
            return Err(QcorrError::LayoutMismatch {
                da: self.da,
                db: self.db,
                dim: rho.dim(),
            });
        }
        Ok(())
    }
}

/// Which factor survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

pub fn partial_trace(rho: &DensityMatrix, layout: BipartiteLayout, keep: Keep) -> Result<DensityMatrix> {
    layout.check(rho)?;
    let (da, db) = (layout.da, layout.db);
    let m = rho.matrix();
    let out = match keep {
        Keep::A => CMatrix::from_fn(da, da, |a, ap| {
            (0..db).map(|b| m[(a * db + b, ap * db + b)]).sum()
        }),
        Keep::B => CMatrix::from_fn(db, db, |b, bp| {
            (0..da).map(|a| m[(a * db + b, a * db + bp)]).sum()
        }),
    };
    Ok(DensityMatrix::from_trusted(out))
}

/// `Tr_B[rho (I_A (x) op)]` as a `d_A x d_A` matrix (unnormalized).
pub fn partial_trace_weighted(rho: &CMatrix, layout: BipartiteLayout, op: &CMatrix) -> CMatrix {
    let (da, db) = (layout.da, layout.db);
    CMatrix::from_fn(da, da, |a, ap| {
        let mut acc = ZERO;
        for b in 0..db {
            for bp in 0..db {
                acc += rho[(a * db + b, ap * db + bp)] * op[(bp, b)];
            }
        }
        acc
    })
}

/// Traceless Hermitian operator basis with `Tr s_mu s_nu = d delta_mu_nu`.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    pub dim: usize,
    pub ops: Vec<CMatrix>,
}

impl OperatorBasis {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Real expectation values `Tr(rho s_mu)`.
    pub fn expectations(&self, rho: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(
            self.ops.len(),
            self.ops.iter().map(|s| crate::linalg::trace_product_re(rho, s)),
        )
    }
}

/// Generalized Gell-Mann matrices rescaled to `Tr s_mu s_nu = d delta_mu_nu`.
///
/// Order: symmetric pairs `(j, k)` with `j < k` in lexicographic order, then
/// antisymmetric pairs in the same order, then the `d - 1` diagonal operators.
/// For `d = 2` this is exactly (sigma_x, sigma_y, sigma_z).
pub fn gellmann_basis(d: usize) -> OperatorBasis {
    assert!(d >= 2, "operator basis needs d >= 2");
    let scale = Complex64::new((d as f64 / 2.0).sqrt(), 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut ops = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = scale;
            m[(k, j)] = scale;
            ops.push(m);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = -i * scale;
            m[(k, j)] = i * scale;
            ops.push(m);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for jj in 0..l {
            m[(jj, jj)] = Complex64::new(norm, 0.0) * scale;
        }
        m[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0) * scale;
        ops.push(m);
    }
    OperatorBasis { dim: d, ops }
}

/// `(r_A, r_B, C, J)` of a qudit-qubit state.
#[derive(Debug, Clone)]
pub struct BlochDecomposition {
    pub da: usize,
    /// `<s_A mu>`, length `d_A^2 - 1`.
    pub ra: DVector<f64>,
    /// `<sigma_nu>` of the qubit.
    pub rb: Vector3<f64>,
    /// Correlation tensor `<s_A mu (x) sigma_nu> - <s_A mu><sigma_nu>`.
    pub c: DMatrix<f64>,
    /// Raw moments `<s_A mu (x) sigma_nu>` (= C + r_A r_B^T).
    pub j: DMatrix<f64>,
}

pub fn bloch_decompose(rho: &DensityMatrix, layout: BipartiteLayout) -> Result<BlochDecomposition> {
    layout.check_qubit_b(rho)?;
    let basis_a = gellmann_basis(layout.da);
    let paulis = pauli();
    let rho_a = partial_trace(rho, layout, Keep::A)?;
    let rho_b = partial_trace(rho, layout, Keep::B)?;
    let ra = basis_a.expectations(rho_a.matrix());
    let rb = Vector3::from_fn(|nu, _| crate::linalg::trace_product_re(rho_b.matrix(), &paulis[nu]));
    let m = basis_a.len();
    let mut j = DMatrix::<f64>::zeros(m, 3);
    for (nu, s) in paulis.iter().enumerate() {
        let x = partial_trace_weighted(rho.matrix(), layout, s);
        for (mu, sa) in basis_a.ops.iter().enumerate() {
            j[(mu, nu)] = crate::linalg::trace_product_re(&x, sa);
        }
    }
    let rb_row = DMatrix::from_row_slice(1, 3, rb.as_slice());
    let c = &j - &ra * rb_row;
    Ok(BlochDecomposition {
        da: layout.da,
        ra,
        rb,
        c,
        j,
    })
}

impl BlochDecomposition {
    /// Rebuild the joint matrix from `rho_A (x) rho_B + (1/2d_A) sum C s_A (x) sigma`.
    pub fn reconstruct(&self) -> CMatrix {
        let da = self.da;
        let basis_a = gellmann_basis(da);
        let paulis = pauli();
        let mut rho_a = CMatrix::identity(da, da);
        for (mu, s) in basis_a.ops.iter().enumerate() {
            rho_a += s * Complex64::new(self.ra[mu], 0.0);
        }
        rho_a /= Complex64::new(da as f64, 0.0);
        let mut rho_b = CMatrix::identity(2, 2);
        for (nu, s) in paulis.iter().enumerate() {
            rho_b += s * Complex64::new(self.rb[nu], 0.0);
        }
        rho_b /= Complex64::new(2.0, 0.0);
        let mut out = rho_a.kronecker(&rho_b);
        let w = 1.0 / (2.0 * da as f64);
        for (mu, sa) in basis_a.ops.iter().enumerate() {
            for (nu, sb) in paulis.iter().enumerate() {
                let coeff = self.c[(mu, nu)] * w;
                if coeff != 0.0 {
                    out += sa.kronecker(sb) * Complex64::new(coeff, 0.0);
                }
            }
        }
        out
    }

    /// Quadratic entropy of `rho_A` from its Bloch vector: `(2/d)(d - 1 - |r_A|^2)`.
    pub fn s2_a(&self) -> f64 {
        let d = self.da as f64;
        2.0 / d * (d - 1.0 - self.ra.norm_squared())
    }
}

/// `Tr rho^2`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    frobenius_sq(rho.matrix())
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let mut entries = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                let z = self.mat[(r, c)];
                entries.push([z.re, z.im]);
            }
        }
        StateJson { dim: d, entries }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = StateJson::deserialize(deserializer)?;
        if raw.entries.len() != raw.dim * raw.dim {
            return Err(serde::de::Error::custom(format!(
                "expected {} entries for dim {}, got {}",
                raw.dim * raw.dim,
                raw.dim,
                raw.entries.len()
            )));
        }
        let m = CMatrix::from_row_iterator(
            raw.dim,
            raw.dim,
            raw.entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
        );
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}
