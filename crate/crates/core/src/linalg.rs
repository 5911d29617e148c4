//! Dense complex linear algebra helpers shared by all modules.
//!
//! Everything here operates on dynamically sized `nalgebra` matrices over
//! `num_complex::Complex64`. The crate works with small fibers (N = 2..8) on
//! large grids, so the emphasis is on correctness and stable conventions
//! rather than asymptotics: eigenvalues are always returned ascending,
//! vectorization is always column-stacking, and angles are always reduced to
//! the principal interval (−π, π].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector used throughout the crate.
pub type CVector = DVector<Complex64>;

/// Shorthand complex constructor.
#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real number embedded as a complex scalar.
#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Numerical tolerances pinned by the public contracts of this crate.
pub mod tol {
    /// Relative Hermiticity residual allowed on density matrices.
    pub const HERM: f64 = 1e-12;
    /// Allowed deviation of a density-matrix trace from one.
    pub const TRACE: f64 = 1e-12;
    /// Most negative eigenvalue a density matrix may carry (roundoff floor).
    pub const PSD_EIG: f64 = -1e-10;
    /// Relative smallest singular value below which a matrix counts as singular.
    pub const RANK: f64 = 1e-10;
    /// Hilbert–Schmidt distance under which two loop endpoints count as equal.
    pub const CLOSURE: f64 = 1e-10;
    /// Unitarity residual allowed on holonomies and transport chains.
    pub const UNITARY: f64 = 1e-10;
    /// Minimal spectral gap for band projectors.
    pub const GAP: f64 = 1e-8;
    /// Overlap magnitude under which consecutive loop samples are
    /// ill-conditioned for phase products.
    pub const OVERLAP: f64 = 1e-8;
    /// Default stratum margin threshold used in invariance experiments.
    pub const MARGIN: f64 = 1e-6;
    /// Integrality residual above which lattice invariants are rejected.
    pub const INTEGRALITY: f64 = 1e-3;
}

/// N×N identity matrix.
pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Pauli matrices: `pauli(0)` = I, `pauli(1..=3)` = σ_x, σ_y, σ_z.
pub fn pauli(i: usize) -> CMatrix {
    match i {
        0 => identity(2),
        1 => CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]),
        2 => CMatrix::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)]),
        3 => CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]),
        _ => panic!("pauli index must be 0..=3, got {i}"),
    }
}

/// Hamiltonian d·σ of a real 3-vector d.
pub fn dot_sigma(d: [f64; 3]) -> CMatrix {
    pauli(1).scale(d[0]) + pauli(2).scale(d[1]) + pauli(3).scale(d[2])
}

/// Hilbert–Schmidt (Frobenius) norm ‖M‖ = √tr(M†M).
pub fn hs_norm(m: &CMatrix) -> f64 {
    m.norm()
}

/// Hilbert–Schmidt inner product ⟨A, B⟩ = tr(A†B).
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc
}

/// Trace of a square matrix.
pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// ‖M − M†‖ divided by max(‖M‖, 1): zero exactly when M is Hermitian.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    (m - m.adjoint()).norm() / m.norm().max(1.0)
}

/// True when M is square and Hermitian within `tolerance`.
pub fn is_hermitian(m: &CMatrix, tolerance: f64) -> bool {
    m.is_square() && hermiticity_residual(m) <= tolerance
}

/// Hermitian part (M + M†)/2.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub struct Eigh {
    /// Real eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose k-th column is the eigenvector of `values[k]`.
    pub vectors: CMatrix,
}

/// Hermitian eigendecomposition (the input is symmetrized defensively first).
///
/// Columns of the returned basis are orthonormal; eigenvalues ascend.
pub fn eigh(m: &CMatrix) -> Eigh {
    let n = m.nrows();
    let se = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| se.eigenvectors[(r, order[k])]);
    Eigh { values, vectors }
}

/// Apply a real function to the spectrum of a Hermitian matrix: V f(Λ) V†.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let e = eigh(m);
    let n = m.nrows();
    let diag = CMatrix::from_fn(
        n,
        n,
        |i, j| if i == j { cr(f(e.values[i])) } else { cr(0.0) },
    );
    &e.vectors * diag * e.vectors.adjoint()
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in [−1e-10, 0) are clamped to zero (roundoff of genuinely
/// semidefinite input); eigenvalues below −1e-10 are rejected.
pub fn sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let e = eigh(m);
    if let Some(&lo) = e.values.first() {
        if lo < tol::PSD_EIG {
            return Err(Error::Validation(format!(
                "matrix is not positive semidefinite: smallest eigenvalue {lo:.3e}"
            )));
        }
    }
    let n = m.nrows();
    let diag = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            cr(e.values[i].max(0.0).sqrt())
        } else {
            cr(0.0)
        }
    });
    Ok(&e.vectors * diag * e.vectors.adjoint())
}

/// Matrix exponential by scaling-and-squaring with a Taylor kernel.
///
/// The argument is scaled so its norm is at most 1/2, the series is summed to
/// machine precision, and the result is squared back up. Adequate for the
/// small fiber dimensions used here.
pub fn expm(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let norm = m.norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let a = m.scale(0.5_f64.powi(squarings as i32));
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for k in 1..=48u32 {
        term = (&term * &a).scale(1.0 / k as f64);
        sum += &term;
        if term.norm() <= 1e-18 * sum.norm().max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Principal matrix logarithm of a matrix near the identity, via the
/// Mercator series log(I + E) = E − E²/2 + E³/3 − …
///
/// Requires ‖M − I‖ ≤ 0.7; holonomies of admissible meshes are well inside
/// this. Coarser input is rejected rather than extrapolated.
pub fn log_near_identity(m: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    let e = m - CMatrix::identity(n, n);
    let enorm = e.norm();
    if enorm > 0.7 {
        return Err(Error::Admissibility(format!(
            "matrix logarithm needs ‖M − I‖ ≤ 0.7, got {enorm:.3e}; refine the mesh"
        )));
    }
    let mut power = e.clone();
    let mut sum = e.clone();
    let mut sign = -1.0;
    for k in 2..=96u32 {
        power = &power * &e;
        sum += power.scale(sign / k as f64);
        sign = -sign;
        if power.norm() / k as f64 <= 1e-18 {
            break;
        }
    }
    Ok(sum)
}

/// Polar factors of an invertible matrix M = P·U (P Hermitian positive
/// definite, U unitary).
pub struct Polar {
    /// Hermitian positive-definite factor P = √(MM†).
    pub positive: CMatrix,
    /// Unitary factor.
    pub unitary: CMatrix,
}

/// Polar decomposition via SVD: M = WΣV† gives P = WΣW† and U = WV†.
///
/// Fails when the smallest singular value is below `tol::RANK` relative to
/// the largest (the unitary factor is then ill-defined).
pub fn polar(m: &CMatrix) -> Result<Polar> {
    let svd = m.clone().svd(true, true);
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| Error::Numerical("SVD did not return left singular vectors".into()))?;
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0_f64, f64::max);
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin / smax.max(f64::MIN_POSITIVE)).is_finite() || smin <= tol::RANK * smax {
        return Err(Error::Stratum(format!(
            "matrix is numerically singular: smallest/largest singular value = {:.3e}",
            smin / smax.max(f64::MIN_POSITIVE)
        )));
    }
    let n = m.nrows();
    let sigma = CMatrix::from_fn(n, n, |i, j| if i == j { cr(s[i]) } else { cr(0.0) });
    let positive = u * &sigma * u.adjoint();
    let unitary = u * v_t;
    Ok(Polar { positive, unitary })
}

/// Unitary factor of the polar decomposition of a (possibly singular) matrix,
/// by SVD: UPF(M) = W V†. Well defined whenever M has full rank; for
/// rank-deficient input the factor on the null directions is an arbitrary
/// completion, so callers gate rank themselves when it matters.
pub fn unitary_factor(m: &CMatrix) -> Result<CMatrix> {
    let svd = m.clone().svd(true, true);
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| Error::Numerical("SVD did not return left singular vectors".into()))?;
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;
    Ok(u * v_t)
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorization: vec(M) stacks the columns of M.
///
/// With this convention vec(A X B) = (Bᵀ ⊗ A) vec(X).
pub fn vec_mat(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_mat`] for square n×n matrices.
pub fn unvec_mat(v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

/// Solve the dense linear system A x = b by LU with partial pivoting.
pub fn solve(a: &CMatrix, b: &CVector) -> Result<CVector> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Degenerate("linear system is singular".into()))
}

/// Reduce an angle to the principal interval (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y - two_pi
    } else {
        y
    }
}

/// Distance between two angles on the circle, |arg e^{i(a−b)}| ∈ [0, π].
///
/// All phase comparisons in this crate are circular: a loop phase of −π and
/// +π are the same point.
pub fn angle_dist(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}
