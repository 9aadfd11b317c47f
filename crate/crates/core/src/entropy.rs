//! Trace-form entropies `S_f(rho) = Tr f(rho)`, their derivatives, and
//! two-qubit concurrence / entanglement of formation.
//!
//! All logarithms are base 2, so every family gives `S(I/2) = 1` for a qubit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QcorrError, Result};
use crate::linalg::{frobenius_sq, hermitian_eigen, hermitian_eigenvalues, kron, pauli, CMatrix};
use crate::statekit::DensityMatrix;

/// Floor applied to eigenvalues inside logarithms and negative powers.
pub const EIGEN_FLOOR: f64 = 1e-300;

/// Entropic family. Tsallis and Renyi carry their index `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "q", rename_all = "snake_case")]
pub enum EntropyFunctional {
    VonNeumann,
    Quadratic,
    Tsallis(f64),
    Renyi(f64),
}

impl EntropyFunctional {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Tsallis(q) | Self::Renyi(q) if !(q > 0.0) || q == 1.0 || !q.is_finite() => {
                Err(QcorrError::InvalidQ { q })
            }
            _ => Ok(()),
        }
    }

    /// Renyi entropies are not of the form `Tr f(rho)`.
    pub fn is_trace_form(&self) -> bool {
        !matches!(self, Self::Renyi(_))
    }

    pub fn name(&self) -> String {
        match self {
            Self::VonNeumann => "von_neumann".into(),
            Self::Quadratic => "quadratic".into(),
            Self::Tsallis(q) => format!("tsallis_{q}"),
            Self::Renyi(q) => format!("renyi_{q}"),
        }
    }

    /// Entropy of a (possibly unnormalized-block) spectrum that sums to one.
    pub fn of_spectrum(&self, eigenvalues: &[f64]) -> f64 {
        let clipped = eigenvalues.iter().map(|&v| v.max(0.0));
        match *self {
            Self::VonNeumann => -clipped
                .filter(|&v| v > 0.0)
                .map(|v| v * v.log2())
                .sum::<f64>(),
            Self::Quadratic => 2.0 * (1.0 - clipped.map(|v| v * v).sum::<f64>()),
            Self::Tsallis(q) => (1.0 - power_sum(clipped, q)) / (1.0 - 2f64.powf(1.0 - q)),
            Self::Renyi(q) => power_sum(clipped, q).log2() / (1.0 - q),
        }
    }

    /// `f'(lambda)` for trace-form families.
    fn derivative(&self, lambda: f64) -> f64 {
        let l = lambda.max(EIGEN_FLOOR);
        match *self {
            Self::VonNeumann => -l.log2() - 1.0 / std::f64::consts::LN_2,
            Self::Quadratic => 2.0 - 4.0 * lambda,
            Self::Tsallis(q) => (1.0 - q * l.powf(q - 1.0)) / (1.0 - 2f64.powf(1.0 - q)),
            Self::Renyi(_) => unreachable!("Renyi has no trace-form derivative"),
        }
    }

    fn needs_floor(&self) -> bool {
        match *self {
            Self::VonNeumann => true,
            Self::Tsallis(q) => q < 1.0,
            _ => false,
        }
    }
}

/// Eigenvalues at or below this are rounding noise; for `q < 1` their
/// powers would otherwise dominate the entropy of near-pure states.
const SPECTRUM_NOISE: f64 = 1e-14;

fn power_sum(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    let cut = if q < 1.0 { SPECTRUM_NOISE } else { 0.0 };
    values.filter(|&v| v > cut).map(|v| v.powf(q)).sum()
}

/// `S_f(rho)`.
pub fn entropy(rho: &DensityMatrix, family: EntropyFunctional) -> Result<f64> {
    family.validate()?;
    Ok(entropy_of_matrix(rho.matrix(), family))
}

/// Entropy of a Hermitian unit-trace matrix; quadratic avoids diagonalization.
pub(crate) fn entropy_of_matrix(m: &CMatrix, family: EntropyFunctional) -> f64 {
    match family {
        EntropyFunctional::Quadratic => 2.0 * (1.0 - frobenius_sq(m)),
        _ => family.of_spectrum(&hermitian_eigenvalues(m)),
    }
}

/// `f'(rho)` evaluated in the eigenbasis of `rho`.
#[derive(Debug, Clone)]
pub struct FPrime {
    pub matrix: CMatrix,
    /// Set when an exactly-zero eigenvalue was replaced by [`EIGEN_FLOOR`].
    pub floored: bool,
}

pub fn f_prime_matrix(rho: &DensityMatrix, family: EntropyFunctional) -> Result<FPrime> {
    family.validate()?;
    f_prime_of_matrix(rho.matrix(), family)
}

pub(crate) fn f_prime_of_matrix(m: &CMatrix, family: EntropyFunctional) -> Result<FPrime> {
    if !family.is_trace_form() {
        return Err(QcorrError::UnsupportedFamily { family: family.name() });
    }
    if let EntropyFunctional::Quadratic = family {
        let n = m.nrows();
        return Ok(FPrime {
            matrix: CMatrix::identity(n, n) * Complex64::new(2.0, 0.0) - m * Complex64::new(4.0, 0.0),
            floored: false,
        });
    }
    let (values, vecs) = hermitian_eigen(m);
    let floored = family.needs_floor() && values.iter().any(|&v| v <= 0.0);
    let n = m.nrows();
    let mut scaled = vecs.clone();
    for (col, &lambda) in values.iter().enumerate() {
        let w = Complex64::new(family.derivative(lambda), 0.0);
        for row in 0..n {
            scaled[(row, col)] *= w;
        }
    }
    Ok(FPrime {
        matrix: scaled * vecs.adjoint(),
        floored,
    })
}

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(QcorrError::DimensionMismatch {
            expected: 4,
            actual: rho.dim(),
        });
    }
    let sy = &pauli()[1];
    let flip = kron(sy, sy);
    let m = rho.matrix();
    let tilde = &flip * m.conjugate() * &flip;
    // sqrt(rho) tilde sqrt(rho) is Hermitian PSD with the same spectrum as rho tilde.
    let sqrt_rho = crate::linalg::spectral_map(m, |v| v.max(0.0).sqrt());
    let r = &sqrt_rho * tilde * &sqrt_rho;
    let mut mu: Vec<f64> = hermitian_eigenvalues(&r).into_iter().map(|v| v.max(0.0).sqrt()).collect();
    mu.sort_by(|a, b| b.total_cmp(a));
    Ok((mu[0] - mu[1] - mu[2] - mu[3]).clamp(0.0, 1.0))
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEntanglement {
    pub concurrence: f64,
    pub eof: f64,
}

impl PairEntanglement {
    pub fn from_concurrence(c: f64) -> Self {
        let c = c.clamp(0.0, 1.0);
        let eof = if c == 0.0 {
            0.0
        } else {
            binary_entropy(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt()))
        };
        Self { concurrence: c, eof }
    }
}

pub fn entanglement_of_formation(rho: &DensityMatrix) -> Result<PairEntanglement> {
    concurrence(rho).map(PairEntanglement::from_concurrence)
}
