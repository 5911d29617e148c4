//! Lattice models and their momentum-space decomposition.
//!
//! Two complementary views of a periodic system:
//!
//! - [`BlochModel`]: an analytic family of two-band fiber Hamiltonians
//!   H_ε = d(ε)·σ over the 2D Brillouin torus, optionally carrying
//!   fiberwise jump operators for open-system evolution;
//! - [`RingLattice`]: a real-space nearest-neighbor ring of unit cells
//!   whose full Hamiltonian block-diagonalizes over the quasi-momenta
//!   ε_m = 2πm/(aL), providing an exact consistency check between the
//!   real-space spectrum and the fiber spectra.
//!
//! [`thermal_family`] turns a gapped model into a full-rank density-matrix
//! field over a torus grid, the main input for curvature and degree
//! computations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, tol, CMatrix};
use crate::states::{thermal_state, DensityMatrix};
use crate::topology::{FiberField, TorusGrid};

/// One trigonometric term amp·cos(n·ε) or amp·sin(n·ε) of a Bloch-vector
/// component.
///
/// JSON encoding: `{"a": 0.5, "n": [1, -2], "fn": "cos"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    /// Amplitude.
    #[serde(rename = "a")]
    pub amp: f64,
    /// Integer wave numbers along the two torus axes.
    pub n: [i32; 2],
    /// Which trigonometric function the term uses.
    #[serde(rename = "fn")]
    pub kind: HarmonicKind,
}

/// Trigonometric flavor of a [`Harmonic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicKind {
    Cos,
    Sin,
}

impl Harmonic {
    fn eval(&self, eps: &[f64]) -> f64 {
        let phase = self.n[0] as f64 * eps[0] + self.n[1] as f64 * eps[1];
        match self.kind {
            HarmonicKind::Cos => self.amp * phase.cos(),
            HarmonicKind::Sin => self.amp * phase.sin(),
        }
    }
}

/// Analytic form of the fiber map ε ↦ H_ε.
///
/// JSON encoding: `{"type": "qwz", "m": 1.0}` or
/// `{"type": "two_band_d", "d": [[…], […], […]]}` with one harmonic list
/// per Bloch-vector component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FiberKind {
    /// The two-band reference model d(ε) = (sin ε₁, sin ε₂, m + cos ε₁ + cos ε₂).
    Qwz { m: f64 },
    /// A general trigonometric Bloch vector d(ε), one harmonic list per
    /// component.
    TwoBandD { d: [Vec<Harmonic>; 3] },
}

/// Fiberwise jump-operator prescription attached to a [`BlochModel`].
///
/// JSON encoding: `{"type": "depolarizing", "gamma": 0.25}` or
/// `{"type": "band_projector", "gamma": 0.25, "band": 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JumpKind {
    /// Three jumps √γ·σ_i/2 at every ε — an isotropic contraction of the
    /// Bloch ball toward the maximally mixed state.
    Depolarizing { gamma: f64 },
    /// One jump √γ·P_band(ε) — dissipation aligned with a band projector,
    /// which leaves the band's thermal states stationary.
    BandProjector { gamma: f64, band: usize },
}

/// A two-band lattice model over the 2D Brillouin torus: an analytic
/// Hermitian fiber map plus optional fiberwise jump operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochModel {
    kind: FiberKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    jumps: Vec<JumpKind>,
}

impl BlochModel {
    /// Wrap an analytic fiber kind with no jumps.
    pub fn new(kind: FiberKind) -> Self {
        BlochModel {
            kind,
            jumps: Vec::new(),
        }
    }

    /// Attach jump prescriptions (builder style).
    pub fn with_jumps(mut self, jumps: Vec<JumpKind>) -> Self {
        self.jumps = jumps;
        self
    }

    /// Number of bands (always 2 for the supported fiber kinds).
    pub fn bands(&self) -> usize {
        2
    }

    /// Spatial dimension of the Brillouin torus (always 2).
    pub fn dim(&self) -> usize {
        2
    }

    /// The analytic fiber kind.
    pub fn kind(&self) -> &FiberKind {
        &self.kind
    }

    /// Attached jump prescriptions.
    pub fn jumps(&self) -> &[JumpKind] {
        &self.jumps
    }

    /// Bloch vector d(ε) of the fiber Hamiltonian.
    pub fn d_vector(&self, eps: &[f64]) -> [f64; 3] {
        match &self.kind {
            FiberKind::Qwz { m } => [eps[0].sin(), eps[1].sin(), m + eps[0].cos() + eps[1].cos()],
            FiberKind::TwoBandD { d } => {
                let mut out = [0.0; 3];
                for (component, harmonics) in out.iter_mut().zip(d.iter()) {
                    *component = harmonics.iter().map(|h| h.eval(eps)).sum();
                }
                out
            }
        }
    }

    /// Fiber Hamiltonian H_ε = d(ε)·σ (exactly Hermitian by construction).
    pub fn h_fiber(&self, eps: &[f64]) -> CMatrix {
        linalg::dot_sigma(self.d_vector(eps))
    }

    /// Concrete jump operators K_{ε,i} at one quasi-momentum.
    pub fn jump_fiber(&self, eps: &[f64]) -> Result<Vec<CMatrix>> {
        let mut out = Vec::new();
        for jump in &self.jumps {
            match jump {
                JumpKind::Depolarizing { gamma } => {
                    if *gamma < 0.0 {
                        return Err(Error::Domain("depolarizing rate must be ≥ 0".into()));
                    }
                    let s = c(0.5 * gamma.sqrt(), 0.0);
                    out.extend((1..=3).map(|i| linalg::pauli(i) * s));
                }
                JumpKind::BandProjector { gamma, band } => {
                    if *gamma < 0.0 {
                        return Err(Error::Domain("band-projector rate must be ≥ 0".into()));
                    }
                    let p = band_projector(self, eps, *band)?;
                    out.push(p.mat() * c(gamma.sqrt(), 0.0));
                }
            }
        }
        Ok(out)
    }
}

/// The two-band reference model with Bloch vector
/// d(ε) = (sin ε₁, sin ε₂, m + cos ε₁ + cos ε₂): gapped whenever
/// m ∉ {0, ±2}, lower-band Chern number −1 at m = 1 and +1 at m = −1 under
/// the orientation of the topology module.
pub fn qwz_model(m: f64) -> BlochModel {
    BlochModel::new(FiberKind::Qwz { m })
}

/// Rank-1 projector onto the `band`-th eigenvector (ascending eigenvalue
/// order) of the fiber Hamiltonian at ε, returned as a density matrix.
///
/// The spectral gap around the band must exceed 1e-8.
pub fn band_projector(model: &BlochModel, eps: &[f64], band: usize) -> Result<DensityMatrix> {
    let n = model.bands();
    if band >= n {
        return Err(Error::Validation(format!(
            "band index {band} out of range for {n} bands"
        )));
    }
    let h = model.h_fiber(eps);
    let e = linalg::eigh(&h);
    let gap_below = if band == 0 {
        f64::INFINITY
    } else {
        e.values[band] - e.values[band - 1]
    };
    let gap_above = if band + 1 == n {
        f64::INFINITY
    } else {
        e.values[band + 1] - e.values[band]
    };
    if gap_below.min(gap_above) < tol::GAP {
        return Err(Error::Degenerate(format!(
            "band {band} is degenerate at ε = {eps:?} (gap {:.3e})",
            gap_below.min(gap_above)
        )));
    }
    let z = e.vectors.column(band);
    let p = CMatrix::from_fn(n, n, |r, s| z[r] * z[s].conj());
    DensityMatrix::new(linalg::hermitian_part(&p))
}

/// Thermal density-matrix field ρ_ε = thermal_state(H_ε, T) over a torus
/// grid.
///
/// The model must stay gapped on the grid (so the T → 0 limit converges to
/// the lowest band projector); a gap below 1e-8 at any node is rejected.
pub fn thermal_family(model: &BlochModel, temperature: f64, grid: TorusGrid) -> Result<FiberField> {
    if temperature <= 0.0 {
        return Err(Error::Domain(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    // Two-stage collect for a deterministic first-failing-node report.
    let states: Vec<Result<CMatrix>> = (0..grid.node_count())
        .into_par_iter()
        .map(|flat| {
            let index: Vec<usize> = {
                // decode row-major, last axis fastest
                let mut idx = vec![0usize; grid.dims().len()];
                let mut rest = flat;
                for a in (0..grid.dims().len()).rev() {
                    idx[a] = rest % grid.dims()[a];
                    rest /= grid.dims()[a];
                }
                idx
            };
            let eps = grid.point(&index);
            let h = model.h_fiber(&eps);
            let e = linalg::eigh(&h);
            if e.values[1] - e.values[0] < tol::GAP {
                return Err(Error::Degenerate(format!(
                    "model is gapless at node {index:?} (gap {:.3e})",
                    e.values[1] - e.values[0]
                )));
            }
            Ok(thermal_state(&h, temperature)?.mat().clone())
        })
        .collect();
    let values = states.into_iter().collect::<Result<Vec<CMatrix>>>()?;
    FiberField::new(grid, values)
}

/// A nearest-neighbor ring of L unit cells with N orbitals per cell:
/// Hermitian intra-cell block, arbitrary inter-cell hopping block, and
/// lattice period a.
#[derive(Debug, Clone)]
pub struct RingLattice {
    cells: usize,
    orbitals: usize,
    intra: CMatrix,
    inter: CMatrix,
    period: f64,
}

impl RingLattice {
    /// Validate and build. Needs L ≥ 2, square N×N blocks with Hermitian
    /// intra part, and a positive period.
    pub fn new(
        cells: usize,
        orbitals: usize,
        intra: CMatrix,
        inter: CMatrix,
        period: f64,
    ) -> Result<Self> {
        if cells < 2 {
            return Err(Error::Validation(format!(
                "ring lattice needs at least 2 cells, got {cells}"
            )));
        }
        if orbitals == 0 {
            return Err(Error::Validation("orbital count must be ≥ 1".into()));
        }
        let shape = (orbitals, orbitals);
        if intra.shape() != shape || inter.shape() != shape {
            return Err(Error::Validation(format!(
                "hopping blocks must be {orbitals}×{orbitals}, got {:?} and {:?}",
                intra.shape(),
                inter.shape()
            )));
        }
        if linalg::hermiticity_residual(&intra) > tol::HERM {
            return Err(Error::Validation(
                "intra-cell block must be Hermitian".into(),
            ));
        }
        if !(period > 0.0) {
            return Err(Error::Validation("lattice period must be positive".into()));
        }
        Ok(RingLattice {
            cells,
            orbitals,
            intra,
            inter,
            period,
        })
    }

    /// Number of unit cells L.
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Orbitals per cell N.
    pub fn orbitals(&self) -> usize {
        self.orbitals
    }

    /// Lattice period a.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// The full NL×NL real-space Hamiltonian with periodic boundary:
    /// intra blocks on the diagonal, inter blocks coupling cell ℓ to
    /// ℓ+1 (wrapping), Hermitian by construction.
    pub fn full_hamiltonian(&self) -> CMatrix {
        let (l, n) = (self.cells, self.orbitals);
        let mut h = CMatrix::zeros(l * n, l * n);
        let mut add_block = |row: usize, col: usize, block: &CMatrix| {
            let mut view = h.view_mut((row * n, col * n), (n, n));
            view += block;
        };
        let inter_dag = self.inter.adjoint();
        for cell in 0..l {
            let next = (cell + 1) % l;
            add_block(cell, cell, &self.intra);
            add_block(cell, next, &self.inter);
            add_block(next, cell, &inter_dag);
        }
        h
    }

    /// The unitary one-cell shift operator T: (Tz)(ℓ) = z(ℓ−1), acting as
    /// the identity on orbitals.
    pub fn translation_operator(&self) -> CMatrix {
        let (l, n) = (self.cells, self.orbitals);
        let mut t = CMatrix::zeros(l * n, l * n);
        for cell in 0..l {
            let next = (cell + 1) % l;
            for orb in 0..n {
                t[(next * n + orb, cell * n + orb)] = c(1.0, 0.0);
            }
        }
        t
    }

    /// Fiber Hamiltonian H_ε = intra + e^{iaε}·inter + e^{−iaε}·inter†.
    pub fn h_fiber(&self, eps: f64) -> CMatrix {
        let phase = c(0.0, self.period * eps).exp();
        &self.intra + &self.inter * phase + self.inter.adjoint() * phase.conj()
    }
}

/// Decompose a ring lattice into its L fiber Hamiltonians at the
/// quasi-momenta ε_m = 2πm/(aL), m = 0..L−1.
///
/// The multiset of all fiber eigenvalues equals the spectrum of the full
/// real-space Hamiltonian (within 1e-9), and the full Hamiltonian commutes
/// with the cell shift (within 1e-12) — see
/// [`translation_invariance_check`].
pub fn bloch_decompose(lat: &RingLattice) -> Vec<(f64, CMatrix)> {
    (0..lat.cells())
        .map(|m| {
            let eps = 2.0 * std::f64::consts::PI * m as f64 / (lat.period() * lat.cells() as f64);
            (eps, lat.h_fiber(eps))
        })
        .collect()
}

/// HS norm of the commutator ‖TH − HT‖ of a Hermitian matrix with a
/// unitary shift; vanishes (≤ 1e-12) for lattices built by [`RingLattice`].
pub fn translation_invariance_check(h_full: &CMatrix, shift: &CMatrix) -> Result<f64> {
    if h_full.shape() != shift.shape() || h_full.nrows() != h_full.ncols() {
        return Err(Error::Validation(format!(
            "shape mismatch: Hamiltonian {:?} vs shift {:?}",
            h_full.shape(),
            shift.shape()
        )));
    }
    let n = shift.nrows();
    let unitarity = (shift.adjoint() * shift - linalg::identity(n)).norm();
    if unitarity > tol::UNITARY {
        return Err(Error::Validation(format!(
            "shift operator is not unitary (residual {unitarity:.3e})"
        )));
    }
    Ok((shift * h_full - h_full * shift).norm())
}
