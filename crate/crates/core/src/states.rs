//! State-space types and decompositions.
//!
//! Pure states are unit vectors (ray representatives), mixed states are
//! Hermitian positive-semidefinite unit-trace matrices, and amplitudes are
//! invertible matrices M sitting above ρ = MM† in the bundle picture. The
//! module provides thermal states, the maximally mixed state, polar
//! decomposition, the canonical Hermitian amplitude section √ρ, rank
//! stratification, and the Hilbert–Schmidt / Bures geometry used everywhere
//! else in the crate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, cr, tol, CMatrix, CVector};

/// A vector in C^N (N ≥ 2), not necessarily normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    entries: CVector,
}

impl StateVector {
    /// Wrap a complex vector; requires dimension ≥ 2.
    pub fn new(entries: CVector) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::Validation(format!(
                "state vectors need dimension ≥ 2, got {}",
                entries.len()
            )));
        }
        Ok(StateVector { entries })
    }

    /// Dimension N.
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Underlying components.
    pub fn entries(&self) -> &CVector {
        &self.entries
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }
}

/// A pure state: unit-norm representative of a ray.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    rep: StateVector,
}

impl PureState {
    /// Wrap an already-normalized representative (‖z‖ = 1 within 1e-12).
    pub fn new(rep: StateVector) -> Result<Self> {
        let n = rep.norm();
        if (n - 1.0).abs() > tol::HERM {
            return Err(Error::Validation(format!(
                "pure-state representative must have unit norm, got ‖z‖ = {n:.15}"
            )));
        }
        Ok(PureState { rep })
    }

    /// Normalize an arbitrary nonzero vector into a pure state.
    pub fn normalized(v: CVector) -> Result<Self> {
        let n = v.norm();
        if n <= tol::RANK {
            return Err(Error::Validation("cannot normalize the zero vector".into()));
        }
        PureState::new(StateVector::new(v.unscale(n))?)
    }

    /// The chosen unit-norm representative.
    pub fn rep(&self) -> &CVector {
        &self.rep.entries
    }

    /// Dimension N.
    pub fn dim(&self) -> usize {
        self.rep.dim()
    }
}

/// A density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validate and wrap a candidate density matrix.
    ///
    /// Checks Hermiticity (relative residual ≤ 1e-12), unit trace
    /// (within 1e-12), and positivity (eigenvalues ≥ −1e-10).
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() || mat.nrows() < 2 {
            return Err(Error::Validation(format!(
                "density matrix must be square with dimension ≥ 2, got {}×{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let herm = linalg::hermiticity_residual(&mat);
        if herm > tol::HERM {
            return Err(Error::Validation(format!(
                "density matrix is not Hermitian: residual {herm:.3e}"
            )));
        }
        let tr = linalg::trace(&mat);
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::Validation(format!(
                "density matrix must have unit trace, got {tr}"
            )));
        }
        let eigs = linalg::eigh(&mat).values;
        if let Some(&lo) = eigs.first() {
            if lo < tol::PSD_EIG {
                return Err(Error::Validation(format!(
                    "density matrix is not positive semidefinite: smallest eigenvalue {lo:.3e}"
                )));
            }
        }
        Ok(DensityMatrix { mat })
    }

    /// Underlying matrix.
    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    /// Dimension N.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigh(&self.mat).values
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Principal square root √ρ (Hermitian PSD).
    pub fn sqrt(&self) -> CMatrix {
        linalg::sqrt_psd(&self.mat).expect("density matrices are PSD by construction")
    }

    /// Hilbert–Schmidt distance to another density matrix.
    pub fn hs_distance(&self, other: &DensityMatrix) -> f64 {
        (&self.mat - &other.mat).norm()
    }
}

/// An invertible amplitude matrix M with ρ = MM†.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplitude {
    mat: CMatrix,
    normalized: bool,
}

impl Amplitude {
    /// Validate and wrap an amplitude.
    ///
    /// `normalized` asserts tr(MM†) = 1 within 1e-12 (i.e. MM† is unit
    /// trace); full rank is required either way, measured as smallest/largest
    /// singular value > 1e-12.
    pub fn new(mat: CMatrix, normalized: bool) -> Result<Self> {
        if !mat.is_square() || mat.nrows() < 2 {
            return Err(Error::Validation(format!(
                "amplitude must be square with dimension ≥ 2, got {}×{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let svals = mat.clone().svd(false, false).singular_values;
        let smax = svals.iter().cloned().fold(0.0_f64, f64::max);
        let smin = svals.iter().cloned().fold(f64::INFINITY, f64::min);
        if smax == 0.0 || smin <= 1e-12 * smax {
            return Err(Error::Stratum(format!(
                "amplitude must be invertible: smallest/largest singular value = {:.3e}",
                smin / smax.max(f64::MIN_POSITIVE)
            )));
        }
        if normalized {
            let hs = mat.norm();
            if (hs * hs - 1.0).abs() > tol::TRACE {
                return Err(Error::Validation(format!(
                    "normalized amplitude must satisfy tr(MM†) = 1, got {}",
                    hs * hs
                )));
            }
        }
        Ok(Amplitude { mat, normalized })
    }

    /// Underlying matrix M.
    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    /// Whether tr(MM†) = 1 was asserted at construction.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Dimension N.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Project to the density matrix ρ = MM† (renormalizing the trace for
    /// non-normalized amplitudes).
    pub fn density(&self) -> Result<DensityMatrix> {
        let rho = &self.mat * self.mat.adjoint();
        let tr = linalg::trace(&rho).re;
        DensityMatrix::new(rho.unscale(tr))
    }
}

/// Rank stratification report of a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RankStratum {
    /// Number of eigenvalues above threshold.
    pub rank: usize,
    /// All eigenvalues, sorted ascending, negatives clamped to zero.
    pub eigenvalues: Vec<f64>,
    /// True when the state has full rank N.
    pub is_maximal: bool,
    /// True when the state is pure (rank 1).
    pub is_pure: bool,
    /// True when the state is the maximally mixed ρ* = I/N within threshold.
    pub is_max_disorder: bool,
}

/// Rank-one projector |z⟩⟨z| of a pure state.
pub fn projector(z: &PureState) -> DensityMatrix {
    let v = z.rep();
    let n = v.len();
    let mat = CMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj());
    // Hermitian and unit-trace by construction; symmetrize roundoff anyway.
    DensityMatrix::new(linalg::hermitian_part(&mat))
        .expect("outer product of a unit vector is a density matrix")
}

/// Thermal (Gibbs) state e^{−H/T}/tr(e^{−H/T}).
///
/// H is shifted by its smallest eigenvalue before exponentiation so that the
/// computation stays in range even at very small temperatures; the quotient
/// is unchanged by the shift.
pub fn thermal_state(h: &CMatrix, temperature: f64) -> Result<DensityMatrix> {
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if !linalg::is_hermitian(h, tol::HERM.max(1e-10)) {
        return Err(Error::Validation(format!(
            "thermal state needs a Hermitian Hamiltonian: residual {:.3e}",
            linalg::hermiticity_residual(h)
        )));
    }
    let e = linalg::eigh(h);
    let ground = e.values[0];
    let weights: Vec<f64> = e
        .values
        .iter()
        .map(|&w| (-(w - ground) / temperature).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let n = h.nrows();
    let diag = CMatrix::from_fn(
        n,
        n,
        |i, j| if i == j { cr(weights[i] / z) } else { cr(0.0) },
    );
    let rho = &e.vectors * diag * e.vectors.adjoint();
    DensityMatrix::new(linalg::hermitian_part(&rho))
}

/// The maximally mixed state ρ* = I/N.
pub fn maximally_mixed(n: usize) -> Result<DensityMatrix> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "maximally mixed state needs dimension ≥ 2, got {n}"
        )));
    }
    DensityMatrix::new(CMatrix::identity(n, n).unscale(n as f64))
}

/// Polar decomposition of an amplitude: M = P·U with P = √(MM†) Hermitian
/// positive definite and U unitary.
pub fn polar_decompose(m: &Amplitude) -> Result<(CMatrix, CMatrix)> {
    let p = linalg::polar(m.mat())?;
    Ok((p.positive, p.unitary))
}

/// Canonical Hermitian amplitude above a full-rank density matrix: σ(ρ) = √ρ.
pub fn canonical_amplitude(rho: &DensityMatrix) -> Result<Amplitude> {
    if rho.min_eigenvalue() <= tol::RANK {
        return Err(Error::Stratum(format!(
            "canonical amplitude needs a full-rank state; smallest eigenvalue {:.3e}",
            rho.min_eigenvalue()
        )));
    }
    Amplitude::new(rho.sqrt(), true)
}

/// Rank stratification with an explicit eigenvalue threshold (default 1e-10).
pub fn rank_stratum(rho: &DensityMatrix, threshold: f64) -> Result<RankStratum> {
    if !(threshold > 0.0) {
        return Err(Error::Domain(format!(
            "rank threshold must be positive, got {threshold}"
        )));
    }
    let n = rho.dim();
    let eigenvalues: Vec<f64> = rho.eigenvalues().iter().map(|&w| w.max(0.0)).collect();
    let rank = eigenvalues.iter().filter(|&&w| w > threshold).count();
    let center = maximally_mixed(n)?;
    let is_max_disorder = rho.hs_distance(&center) <= threshold;
    Ok(RankStratum {
        rank,
        eigenvalues,
        is_maximal: rank == n,
        is_pure: rank == 1,
        is_max_disorder,
    })
}

/// Hilbert–Schmidt inner product tr(M1† M2); the real part is the
/// Riemannian metric on amplitudes.
pub fn hs_inner(m1: &CMatrix, m2: &CMatrix) -> Result<Complex64> {
    if m1.shape() != m2.shape() {
        return Err(Error::Validation(format!(
            "HS inner product needs equal shapes, got {:?} and {:?}",
            m1.shape(),
            m2.shape()
        )));
    }
    Ok(linalg::hs_inner(m1, m2))
}

/// Bures distance D = √(2 − 2 tr√(√ρ σ √ρ)) between density matrices.
///
/// The fidelity-based formula is the standard one; it is symmetric, vanishes
/// exactly on equal states, and is bounded by √2.
pub fn bures_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Validation(format!(
            "Bures distance needs equal dimensions, got {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let sr = rho.sqrt();
    let inner = &sr * sigma.mat() * &sr;
    let root = linalg::sqrt_psd(&linalg::hermitian_part(&inner))?;
    let fidelity = linalg::trace(&root).re.clamp(0.0, 1.0 + 1e-9);
    Ok((2.0 - 2.0 * fidelity).max(0.0).sqrt())
}
