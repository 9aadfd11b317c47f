//! Finite spin-1/2 XY chains in a magnetic field in the xz plane:
//!
//! `H = -sum_i h . S_i - 1/2 sum_{i != j} (Jx_ij S^x_i S^x_j + Jy_ij S^y_i S^y_j)`
//!
//! Basis: site `i` is bit `n - 1 - i` of the basis index (site 0 slowest),
//! bit value 0 is spin up (`sigma_z = +1`). With `h_y = 0` the Hamiltonian is
//! real symmetric, so ground states are stored as real amplitude vectors.
//! For transverse fields the `S_z` parity `P_z = prod_i (-2 S^z_i)` is used to
//! split the Hilbert space into two blocks that are diagonalized separately.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QcorrError, Result};
use crate::exec::Execution;
use crate::linalg::{CMatrix, CVector};
use crate::statekit::DensityMatrix;

pub const MAX_SITES: usize = 14;
/// Relative (to the spectral norm of H) level gap below which two parity
/// sectors are declared degenerate.
pub const DEGENERACY_REL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinChainSpec {
    pub n: usize,
    pub jx: DMatrix<f64>,
    pub jy: DMatrix<f64>,
    /// Field components `(h_x, h_z)`; `h_y` is always zero.
    pub hx: f64,
    pub hz: f64,
    pub chi: f64,
}

impl SpinChainSpec {
    /// Cyclic first-neighbour chain with `Jy = chi Jx`.
    pub fn cyclic(n: usize, jx: f64, chi: f64, hx: f64, hz: f64) -> Result<Self> {
        if !(2..=MAX_SITES).contains(&n) {
            return Err(if n > MAX_SITES {
                QcorrError::TooLarge { n, max: MAX_SITES }
            } else {
                QcorrError::InvalidConfig {
                    reason: format!("chain needs at least 2 sites, got {n}"),
                }
            });
        }
        let bond = |i: usize, j: usize| {
            let d = (j + n - i) % n;
            i != j && (d == 1 || d == n - 1)
        };
        let jxm = DMatrix::from_fn(n, n, |i, j| if bond(i, j) { jx } else { 0.0 });
        let jym = &jxm * chi;
        let spec = Self {
            n,
            jx: jxm,
            jy: jym,
            hx,
            hz,
            chi,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn transverse(n: usize, jx: f64, chi: f64, hz: f64) -> Result<Self> {
        Self::cyclic(n, jx, chi, 0.0, hz)
    }

    /// Field of magnitude `h` at angle `gamma` (radians) from the z axis,
    /// tilted towards +x.
    pub fn tilted(n: usize, jx: f64, chi: f64, h: f64, gamma: f64) -> Result<Self> {
        let hx = if gamma == 0.0 { 0.0 } else { h * gamma.sin() };
        Self::cyclic(n, jx, chi, hx, h * gamma.cos())
    }

    pub fn with_field(&self, hx: f64, hz: f64) -> Self {
        Self { hx, hz, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n > MAX_SITES {
            return Err(QcorrError::TooLarge { n: self.n, max: MAX_SITES });
        }
        if self.n < 2 || self.jx.shape() != (self.n, self.n) || self.jy.shape() != (self.n, self.n) {
            return Err(QcorrError::InvalidConfig {
                reason: "coupling matrices must be n x n with n >= 2".into(),
            });
        }
        for i in 0..self.n {
            if self.jx[(i, i)] != 0.0 || self.jy[(i, i)] != 0.0 {
                return Err(QcorrError::InvalidConfig {
                    reason: "couplings must have a zero diagonal".into(),
                });
            }
            for j in 0..self.n {
                if (self.jx[(i, j)] - self.jx[(j, i)]).abs() > 1e-14 || (self.jy[(i, j)] - self.jy[(j, i)]).abs() > 1e-14 {
                    return Err(QcorrError::InvalidConfig {
                        reason: "couplings must be symmetric".into(),
                    });
                }
            }
        }
        if !self.hx.is_finite() || !self.hz.is_finite() {
            return Err(QcorrError::InvalidConfig { reason: "field must be finite".into() });
        }
        Ok(())
    }

    pub fn is_transverse(&self) -> bool {
        self.hx == 0.0
    }

    fn dim(&self) -> usize {
        1 << self.n
    }

    fn bit(&self, site: usize) -> usize {
        1 << (self.n - 1 - site)
    }

    /// Non-zero matrix elements `(row, value)` in column `s`.
    fn column(&self, s: usize, mut emit: impl FnMut(usize, f64)) {
        let n = self.n;
        let mut diag = 0.0;
        for i in 0..n {
            let up = s & self.bit(i) == 0;
            diag -= self.hz * if up { 0.5 } else { -0.5 };
            if self.hx != 0.0 {
                emit(s ^ self.bit(i), -0.5 * self.hx);
            }
        }
        emit(s, diag);
        for i in 0..n {
            for j in (i + 1)..n {
                let jx = self.jx[(i, j)];
                let jy = self.jy[(i, j)];
                if jx == 0.0 && jy == 0.0 {
                    continue;
                }
                let same = (s & self.bit(i) == 0) == (s & self.bit(j) == 0);
                let amp = if same { -(jx - jy) / 4.0 } else { -(jx + jy) / 4.0 };
                if amp != 0.0 {
                    emit(s ^ self.bit(i) ^ self.bit(j), amp);
                }
            }
        }
    }
}

/// Dense real symmetric Hamiltonian, `2^n x 2^n`.
pub fn build_hamiltonian(spec: &SpinChainSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let d = spec.dim();
    let mut h = DMatrix::zeros(d, d);
    for s in 0..d {
        spec.column(s, |r, v| h[(r, s)] += v);
    }
    Ok(h)
}

/// Eigenvalue of `P_z` on a basis state: `(-1)^(number of up spins)`.
pub fn basis_parity(n: usize, s: usize) -> i8 {
    let ups = n - s.count_ones() as usize;
    if ups.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Diagonal of `P_z` in the computational basis.
pub fn parity_operator(n: usize) -> DVector<f64> {
    DVector::from_fn(1 << n, |s, _| basis_parity(n, s) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Broken,
}

impl Parity {
    pub fn label(&self) -> &'static str {
        match self {
            Parity::Even => "+1",
            Parity::Odd => "-1",
            Parity::Broken => "broken",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub n: usize,
    pub energy: f64,
    /// Unit-norm real amplitudes over the `2^n` basis.
    pub vector: DVector<f64>,
    pub parity: Parity,
    pub degenerate: bool,
    /// Definite-parity states `(P_z = +1, P_z = -1)` at a level crossing.
    pub side_limits: Option<Box<(GroundState, GroundState)>>,
    /// Spectral norm estimate of H used for the degeneracy threshold.
    pub h_norm: f64,
}

struct BlockMinimum {
    energy: f64,
    vector: DVector<f64>,
    norm: f64,
}

fn block_states(n: usize, parity: i8) -> Vec<usize> {
    (0..1usize << n).filter(|&s| basis_parity(n, s) == parity).collect()
}

fn diagonalize_block(spec: &SpinChainSpec, parity: i8) -> BlockMinimum {
    let states = block_states(spec.n, parity);
    let mut index = vec![usize::MAX; spec.dim()];
    for (k, &s) in states.iter().enumerate() {
        index[s] = k;
    }
    let m = states.len();
    let mut h = DMatrix::zeros(m, m);
    for (col, &s) in states.iter().enumerate() {
        spec.column(s, |r, v| h[(index[r], col)] += v);
    }
    let eig = SymmetricEigen::new(h);
    let (imin, energy) = argmin(eig.eigenvalues.as_slice());
    let norm = eig.eigenvalues.iter().fold(0.0f64, |a: f64, v: &f64| a.max(v.abs()));
    let mut vector = DVector::zeros(spec.dim());
    for (k, &s) in states.iter().enumerate() {
        vector[s] = eig.eigenvectors[(k, imin)];
    }
    BlockMinimum { energy, vector, norm }
}

fn argmin(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    (best, values[best])
}

/// Lowest energies of the even and odd parity sectors (transverse field only).
pub fn parity_sector_energies(spec: &SpinChainSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    if !spec.is_transverse() {
        return Err(QcorrError::UnsupportedGeometry {
            reason: "parity sectors require a transverse field".into(),
        });
    }
    Ok((diagonalize_block(spec, 1).energy, diagonalize_block(spec, -1).energy))
}

fn sign_fix(mut v: DVector<f64>) -> DVector<f64> {
    // Deterministic global sign: largest-magnitude amplitude positive.
    let (imax, _) = v.iter().enumerate().fold((0, 0.0f64), |(bi, bv), (i, x)| if x.abs() > bv + 1e-12 { (i, x.abs()) } else { (bi, bv) });
    if v[imax] < 0.0 {
        v.neg_mut();
    }
    v
}

pub fn ground_state(spec: &SpinChainSpec) -> Result<GroundState> {
    spec.validate()?;
    let n = spec.n;
    if spec.is_transverse() {
        let even = diagonalize_block(spec, 1);
        let odd = diagonalize_block(spec, -1);
        let h_norm = even.norm.max(odd.norm);
        let make = |b: &BlockMinimum, parity| GroundState {
            n,
            energy: b.energy,
            vector: sign_fix(b.vector.clone()),
            parity,
            degenerate: false,
            side_limits: None,
            h_norm,
        };
        let plus = make(&even, Parity::Even);
        let minus = make(&odd, Parity::Odd);
        let degenerate = (even.energy - odd.energy).abs() < DEGENERACY_REL * h_norm.max(1e-300);
        let mut main = if odd.energy < even.energy && !degenerate { minus.clone() } else { plus.clone() };
        if degenerate {
            main.degenerate = true;
            main.side_limits = Some(Box::new((plus, minus)));
        }
        return Ok(main);
    }
    let h = build_hamiltonian(spec)?;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let h_norm = eig.eigenvalues.iter().fold(0.0f64, |a: f64, v: &f64| a.max(v.abs()));
    let e0 = eig.eigenvalues[order[0]];
    let e1 = eig.eigenvalues[order[1]];
    Ok(GroundState {
        n,
        energy: e0,
        vector: sign_fix(eig.eigenvectors.column(order[0]).into_owned()),
        parity: Parity::Broken,
        degenerate: (e1 - e0).abs() < DEGENERACY_REL * h_norm.max(1e-300),
        side_limits: None,
        h_norm,
    })
}

/// Two-site reduced state of a real pure state; site `i` is the A factor.
pub fn reduced_pair_of_vector(vector: &DVector<f64>, n: usize, i: usize, j: usize) -> Result<DensityMatrix> {
    if i >= j || j >= n {
        return Err(QcorrError::IndexOutOfRange { i, j, n });
    }
    let bi = 1usize << (n - 1 - i);
    let bj = 1usize << (n - 1 - j);
    let mut acc = [[0.0f64; 4]; 4];
    for s in 0..(1usize << n) {
        let amp = vector[s];
        if amp == 0.0 {
            continue;
        }
        let row = 2 * usize::from(s & bi != 0) + usize::from(s & bj != 0);
        let base = s & !(bi | bj);
        for (col, cell) in acc[row].iter_mut().enumerate() {
            let sp = base | if col & 2 != 0 { bi } else { 0 } | if col & 1 != 0 { bj } else { 0 };
            *cell += amp * vector[sp];
        }
    }
    let m = CMatrix::from_fn(4, 4, |r, c| Complex64::new(acc[r][c], 0.0));
    Ok(DensityMatrix::from_trusted(m))
}

pub fn reduced_pair(gs: &GroundState, i: usize, j: usize) -> Result<DensityMatrix> {
    reduced_pair_of_vector(&gs.vector, gs.n, i, j)
}

/// Single-site Bloch vector `(<sigma_x>, <sigma_y>, <sigma_z>)` of a real state.
pub fn site_bloch_vector(vector: &DVector<f64>, n: usize, i: usize) -> [f64; 3] {
    let b = 1usize << (n - 1 - i);
    let (mut x, mut z) = (0.0, 0.0);
    for s in 0..(1usize << n) {
        let a = vector[s];
        z += a * a * if s & b == 0 { 1.0 } else { -1.0 };
        x += a * vector[s ^ b];
    }
    [x, 0.0, z]
}

/// Factorizing-field data for `cos(theta) = sqrt(chi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationData {
    pub theta: f64,
    pub h_zs: f64,
    pub h_s_magnitude: f64,
    pub gamma: f64,
}

/// Transverse (`gamma = 0`) and non-transverse factorizing field magnitudes:
/// `h_zs = Jx sqrt(chi)`, `|h_s| = h_zs sin(theta) / sin(theta - gamma)`.
pub fn factorizing_field(chi: f64, jx: f64, gamma: f64) -> Result<FactorizationData> {
    if !(chi > 0.0 && chi <= 1.0) || !(jx > 0.0) || !(gamma >= 0.0) {
        return Err(QcorrError::InvalidConfig {
            reason: format!("need chi in (0, 1], Jx > 0, gamma >= 0 (got {chi}, {jx}, {gamma})"),
        });
    }
    let theta = chi.sqrt().acos();
    let h_zs = jx * chi.sqrt();
    let h_s_magnitude = if gamma == 0.0 {
        h_zs
    } else if gamma >= theta {
        return Err(QcorrError::GammaTooLarge { gamma, theta });
    } else {
        h_zs * theta.sin() / (theta - gamma).sin()
    };
    Ok(FactorizationData {
        theta,
        h_zs,
        h_s_magnitude,
        gamma,
    })
}

/// `|theta> = exp(-i theta S_y)|down> = cos(theta/2)|down> - sin(theta/2)|up>`
/// as `(up, down)` amplitudes.
pub fn spin_state(theta: f64) -> [f64; 2] {
    [-(theta / 2.0).sin(), (theta / 2.0).cos()]
}

/// Product state with per-site angles.
pub fn product_state(angles: &[f64]) -> DVector<f64> {
    let n = angles.len();
    DVector::from_fn(1 << n, |s, _| {
        angles
            .iter()
            .enumerate()
            .map(|(i, &t)| spin_state(t)[usize::from(s & (1 << (n - 1 - i)) != 0)])
            .product()
    })
}

/// Two-spin states built from `|+-theta, +-theta>`.
#[derive(Debug, Clone)]
pub struct ThetaStates {
    /// `(|tt><tt| + |-t-t><-t-t|)/2`, overlap neglected.
    pub mixture: DensityMatrix,
    /// Exact pair states of `|Theta_+>` and `|Theta_->` for `n` sites.
    pub side_limits: Option<(DensityMatrix, Option<DensityMatrix>)>,
}

fn two_spin(theta: f64) -> CVector {
    let a = spin_state(theta);
    CVector::from_fn(4, |s, _| Complex64::new(a[s >> 1] * a[s & 1], 0.0))
}

pub(crate) fn theta_states_unchecked(theta: f64, n: Option<usize>) -> ThetaStates {
    let plus = two_spin(theta);
    let minus = two_spin(-theta);
    let pp = &plus * plus.adjoint();
    let mm = &minus * minus.adjoint();
    let pm = &plus * minus.adjoint();
    let mp = &minus * plus.adjoint();
    let half = Complex64::new(0.5, 0.0);
    let mixture = DensityMatrix::from_trusted((&pp + &mm) * half);
    let side_limits = n.map(|n| {
        // Tr_{n-2} |Theta_+-><Theta_+-| with <-t|t> = cos(theta).
        let c = theta.cos();
        let cross = c.powi(n as i32 - 2);
        let overlap = c.powi(n as i32);
        let build = |sign: f64| {
            let m = &pp + &mm + (&pm + &mp) * Complex64::new(sign * cross, 0.0);
            DensityMatrix::from_trusted(m * Complex64::new(1.0 / (2.0 * (1.0 + sign * overlap)), 0.0))
        };
        let minus_state = if 1.0 - overlap > 1e-12 { Some(build(-1.0)) } else { None };
        (build(1.0), minus_state)
    });
    ThetaStates { mixture, side_limits }
}

pub fn rho_theta(theta: f64, n: Option<usize>) -> Result<ThetaStates> {
    if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2 + 1e-15) {
        return Err(QcorrError::InvalidTheta { theta });
    }
    if let Some(n) = n {
        if n < 2 {
            return Err(QcorrError::InvalidConfig { reason: "need n >= 2".into() });
        }
    }
    Ok(theta_states_unchecked(theta, n))
}

/// Concurrence side limits `C_+- = chi^(n/2 - 1) (1 - chi) / (1 +- chi^(n/2))`.
pub fn concurrence_side_limits(chi: f64, n: usize) -> (f64, f64) {
    let half = n as f64 / 2.0;
    let num = chi.powf(half - 1.0) * (1.0 - chi);
    (num / (1.0 + chi.powf(half)), num / (1.0 - chi.powf(half)))
}

/// Sign flips `sigma_z` on even sites mapping an antiferromagnetic
/// first-neighbour chain onto the ferromagnetic one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AfmTransform {
    pub n: usize,
    pub rotated_sites: Vec<usize>,
}

impl AfmTransform {
    /// Apply the site rotations to a real state vector.
    pub fn apply(&self, vector: &DVector<f64>) -> DVector<f64> {
        let mask: usize = self.rotated_sites.iter().map(|&i| 1usize << (self.n - 1 - i)).sum();
        DVector::from_fn(vector.len(), |s, _| {
            let downs = (s & mask).count_ones();
            if downs.is_multiple_of(2) {
                vector[s]
            } else {
                -vector[s]
            }
        })
    }

    /// Map per-site angles of a factorized state.
    pub fn apply_angles(&self, angles: &[f64]) -> Vec<f64> {
        angles
            .iter()
            .enumerate()
            .map(|(i, &t)| if self.rotated_sites.contains(&i) { -t } else { t })
            .collect()
    }
}

pub fn afm_map(spec: &SpinChainSpec) -> Result<(SpinChainSpec, AfmTransform)> {
    spec.validate()?;
    let n = spec.n;
    if !n.is_multiple_of(2) {
        return Err(QcorrError::UnsupportedGeometry { reason: "odd chain length".into() });
    }
    if !spec.is_transverse() {
        return Err(QcorrError::UnsupportedGeometry { reason: "field must be transverse".into() });
    }
    for i in 0..n {
        for j in 0..n {
            let d = (j + n - i) % n;
            let neighbour = d == 1 || d == n - 1;
            let (x, y) = (spec.jx[(i, j)], spec.jy[(i, j)]);
            if !neighbour && (x != 0.0 || y != 0.0) {
                return Err(QcorrError::UnsupportedGeometry { reason: "couplings beyond first neighbours".into() });
            }
            if neighbour && x > 0.0 {
                return Err(QcorrError::UnsupportedGeometry { reason: "expected Jx < 0 on every bond".into() });
            }
        }
    }
    let mapped = SpinChainSpec {
        jx: -&spec.jx,
        jy: -&spec.jy,
        ..spec.clone()
    };
    let transform = AfmTransform {
        n,
        rotated_sites: (0..n).step_by(2).collect(),
    };
    Ok((mapped, transform))
}

/// Fields in `(0, h_max)` where the lowest even and odd levels cross, each
/// refined by bisection to `tol`.
pub fn parity_crossings(
    template: &SpinChainSpec,
    h_max: f64,
    points: usize,
    tol: f64,
    exec: Execution,
) -> Result<Vec<f64>> {
    let fields: Vec<f64> = (1..=points).map(|i| h_max * i as f64 / (points + 1) as f64).collect();
    let gap = |h: f64| -> Result<f64> {
        let (e, o) = parity_sector_energies(&template.with_field(0.0, h))?;
        Ok(e - o)
    };
    let gaps: Vec<f64> = exec.map(&fields, |&h| gap(h)).into_iter().collect::<Result<_>>()?;
    let mut brackets = Vec::new();
    for w in 0..fields.len() - 1 {
        if (gaps[w] >= 0.0) != (gaps[w + 1] >= 0.0) {
            brackets.push((fields[w], fields[w + 1], gaps[w]));
        }
    }
    exec.map(&brackets, |&(mut lo, mut hi, g_lo)| {
        let lo_sign = g_lo >= 0.0;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if (gap(mid)? >= 0.0) == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    })
    .into_iter()
    .collect()
}
