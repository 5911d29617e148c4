//! Seeded random fixtures for tests, property checks, and CLI self-checks.
//!
//! Everything takes an explicit RNG so results are reproducible from a seed.

use rand::Rng;

use crate::linalg::{self, c, CMatrix, CVector};
use crate::states::{DensityMatrix, PureState};

/// Random complex matrix with entries uniform in the unit square.
pub fn random_matrix(rng: &mut impl Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Random Hermitian matrix (Hermitian part of a random matrix).
pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    linalg::hermitian_part(&random_matrix(rng, n))
}

/// Random invertible matrix: a random matrix pushed away from singularity.
pub fn random_invertible(rng: &mut impl Rng, n: usize) -> CMatrix {
    random_matrix(rng, n) + CMatrix::identity(n, n).scale(2.0 + n as f64)
}

/// Random unitary: the polar unitary factor of a random invertible matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    linalg::unitary_factor(&random_invertible(rng, n)).expect("SVD of a finite matrix")
}

/// Random pure state: normalized random complex vector.
pub fn random_pure_state(rng: &mut impl Rng, n: usize) -> PureState {
    loop {
        let v = CVector::from_fn(n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        if v.norm() > 1e-3 {
            return PureState::normalized(v).expect("nonzero vector normalizes");
        }
    }
}

/// Random Hermitian tangent direction with unit HS norm.
pub fn random_hermitian_unit(rng: &mut impl Rng, n: usize) -> CMatrix {
    let h = random_hermitian(rng, n);
    let norm = h.norm();
    h.unscale(norm.max(1e-12))
}

/// Random density matrix AA†/tr, blended toward I/N so every eigenvalue is
/// at least `min_eig` (pass 0.0 for an unconstrained Wishart-type draw).
pub fn random_density(rng: &mut impl Rng, n: usize, min_eig: f64) -> DensityMatrix {
    let a = random_matrix(rng, n);
    let w = &a * a.adjoint();
    let tr = linalg::trace(&w).re;
    let base = w.unscale(tr);
    let beta = (min_eig * n as f64).clamp(0.0, 1.0);
    let mixed = base.scale(1.0 - beta) + CMatrix::identity(n, n).scale(beta / n as f64);
    DensityMatrix::new(linalg::hermitian_part(&mixed)).expect("blend of density matrices")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(&mut rng, 4);
        assert!(
            (u.adjoint() * &u - CMatrix::identity(4, 4)).norm() <= 1e-10,
            "U†U must be the identity"
        );
    }

    #[test]
    fn random_density_respects_eigenvalue_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let rho = random_density(&mut rng, 3, 0.05);
            assert!(
                rho.min_eigenvalue() >= 0.05 - 1e-12,
                "eigenvalue floor violated: {}",
                rho.min_eigenvalue()
            );
        }
    }

    #[test]
    fn seeded_draws_are_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(random_matrix(&mut a, 3), random_matrix(&mut b, 3));
    }
}
