//! Topological invariants of matrix families over discretized parameter tori.
//!
//! The central objects are [`TorusGrid`] (a periodic mesh of quasi-momenta)
//! and [`FiberField`] (one matrix per node). On 2D grids the module computes:
//!
//! - [`chern_fhs`]: the first Chern number of a rank-1 projector family by
//!   the lattice field-strength method — plaquette phases of link products,
//!   exactly gauge-invariant and integer at any admissible mesh;
//! - [`mapping_degree`]: the degree of the Bloch direction field of a
//!   two-level mixed-state family, by signed spherical-triangle areas;
//! - [`uhlmann_chern_trace`]: the trace of the discrete curvature of the
//!   Uhlmann connection over the canonical √ρ amplitudes (a triviality
//!   check — it vanishes for every full-rank family);
//! - [`weighted_chern`]: the purity-weighted curvature trace, which is *not*
//!   quantized and shifts under smooth perturbations;
//! - [`winding_literal`]: the literal discretization of the two-form
//!   tr(ρ⁻¹dρ ∧ ρ⁻¹dρ), kept as a diagnostic — the trace of a commutator
//!   cancels identically, so only discretization noise survives;
//! - [`strata_distance`]: margins of a state to the rank boundary and to
//!   the maximally mixed state.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::connection_spectral_raw;
use crate::linalg::{self, tol, CMatrix};
use crate::states::{maximally_mixed, DensityMatrix};

/// Periodic rectangular grid on a d-dimensional parameter torus.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusGrid {
    dims: Vec<usize>,
    spacing: Vec<f64>,
}

impl TorusGrid {
    /// Grid with `dims[a]` nodes and step `spacing[a]` along axis a.
    ///
    /// Every axis needs at least 4 nodes (minimum resolvable mesh).
    pub fn new(dims: Vec<usize>, spacing: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() != spacing.len() {
            return Err(Error::Validation(format!(
                "grid needs matching nonempty dims/spacing, got {} and {}",
                dims.len(),
                spacing.len()
            )));
        }
        if let Some(&k) = dims.iter().find(|&&k| k < 4) {
            return Err(Error::Domain(format!(
                "each grid axis needs at least 4 nodes, got {k}"
            )));
        }
        if spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::Validation("grid spacing must be positive".into()));
        }
        Ok(TorusGrid { dims, spacing })
    }

    /// Square 2D grid of K×K nodes covering [0, 2π)² with spacing 2π/K.
    pub fn square(k: usize) -> Result<Self> {
        TorusGrid::new(vec![k, k], vec![2.0 * PI / k as f64, 2.0 * PI / k as f64])
    }

    /// Nodes per axis.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Step per axis.
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Total number of nodes.
    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Coordinates of the node with the given multi-index.
    pub fn point(&self, index: &[usize]) -> Vec<f64> {
        index
            .iter()
            .zip(&self.spacing)
            .map(|(&i, &h)| i as f64 * h)
            .collect()
    }

    /// Decode a flat node index (row-major, last axis fastest).
    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0usize; self.dims.len()];
        for a in (0..self.dims.len()).rev() {
            index[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
        index
    }

    fn require_2d(&self) -> Result<(usize, usize)> {
        if self.dims.len() != 2 {
            return Err(Error::Domain(format!(
                "this invariant needs a 2D grid, got {} axes",
                self.dims.len()
            )));
        }
        Ok((self.dims[0], self.dims[1]))
    }
}

/// A matrix-valued field over a torus grid: one N×N matrix per node.
#[derive(Debug, Clone)]
pub struct FiberField {
    grid: TorusGrid,
    values: Vec<CMatrix>,
}

impl FiberField {
    /// Wrap per-node values (row-major, last axis fastest).
    pub fn new(grid: TorusGrid, values: Vec<CMatrix>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Validation(format!(
                "field has {} values for {} grid nodes",
                values.len(),
                grid.node_count()
            )));
        }
        let n = values[0].nrows();
        if n < 2 || values.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::Validation(
                "field values must all be square matrices of one dimension ≥ 2".into(),
            ));
        }
        Ok(FiberField { grid, values })
    }

    /// Evaluate a function of the node coordinates at every node, in
    /// parallel (deterministic per-node results, order-preserving).
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> CMatrix + Sync) -> Result<Self> {
        let values: Vec<CMatrix> = (0..grid.node_count())
            .into_par_iter()
            .map(|flat| f(&grid.point(&grid.unflatten(flat))))
            .collect();
        FiberField::new(grid, values)
    }

    /// The grid.
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Matrix dimension N of the fiber values.
    pub fn fiber_dim(&self) -> usize {
        self.values[0].nrows()
    }

    /// All values, row-major.
    pub fn values(&self) -> &[CMatrix] {
        &self.values
    }

    /// Node value on a 2D grid with periodic wrapping.
    pub fn at(&self, i: usize, j: usize) -> &CMatrix {
        let (k1, k2) = (self.grid.dims[0], self.grid.dims[1]);
        &self.values[(i % k1) * k2 + (j % k2)]
    }
}

/// Per-plaquette scalar curvature of a 2D field.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    grid: TorusGrid,
    plaquette_values: Vec<f64>,
}

impl CurvatureField {
    /// The grid the curvature lives on (one plaquette per node by torus
    /// periodicity).
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Plaquette values, row-major like the node values.
    pub fn plaquette_values(&self) -> &[f64] {
        &self.plaquette_values
    }

    /// Sum of all plaquette values (sequential fold, so results are
    /// bit-stable across thread counts).
    pub fn total(&self) -> f64 {
        self.plaquette_values.iter().sum()
    }
}

/// An integer-valued lattice invariant together with the raw sum it was
/// rounded from and the rounding residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeInvariant {
    /// The integer invariant.
    pub value: i64,
    /// The raw real number before rounding.
    pub raw: f64,
    /// |raw − value|.
    pub residual: f64,
}

/// Round a raw invariant to the nearest integer, rejecting the result as
/// inadmissible (mesh too coarse) when the residual exceeds the limit.
pub fn round_invariant(raw: f64, residual_limit: f64, what: &str) -> Result<LatticeInvariant> {
    let value = raw.round() as i64;
    let residual = (raw - value as f64).abs();
    if residual > residual_limit {
        return Err(Error::Admissibility(format!(
            "{what} rounding residual {residual:.3e} exceeds {residual_limit:.1e}; mesh too coarse"
        )));
    }
    Ok(LatticeInvariant {
        value,
        raw,
        residual,
    })
}

/// Check that every node of a 2D field holds a rank-1 projector
/// (Hermitian, idempotent within 1e-8, unit trace).
fn check_projector_field(field: &FiberField) -> Result<()> {
    // Index-ordered two-stage collect: the lowest failing node wins
    // regardless of thread scheduling, keeping error messages deterministic.
    let checks: Vec<Result<()>> = field
        .values()
        .par_iter()
        .enumerate()
        .map(|(flat, p)| {
            let idem = (p * p - p).norm();
            let tr = linalg::trace(p);
            if linalg::hermiticity_residual(p) > 1e-8
                || idem > 1e-8
                || (tr.re - 1.0).abs() > 1e-8
                || tr.im.abs() > 1e-8
            {
                let idx = field.grid().unflatten(flat);
                return Err(Error::Validation(format!(
                    "node {idx:?} is not a rank-1 projector (idempotency residual {idem:.3e})"
                )));
            }
            Ok(())
        })
        .collect();
    checks.into_iter().collect()
}

/// Check that every node of a field is a full-rank density matrix; returns
/// the per-node validated states.
fn check_density_field(field: &FiberField, min_rank_eig: f64) -> Result<Vec<DensityMatrix>> {
    // Two-stage collect for a deterministic first-failing-node report.
    let states: Vec<Result<DensityMatrix>> = field
        .values()
        .par_iter()
        .enumerate()
        .map(|(flat, m)| {
            let idx = field.grid().unflatten(flat);
            let rho = DensityMatrix::new(m.clone())
                .map_err(|e| Error::Validation(format!("node {idx:?}: {e}")))?;
            let lo = rho.min_eigenvalue();
            if lo <= min_rank_eig {
                return Err(Error::Stratum(format!(
                    "node {idx:?} is rank-deficient (smallest eigenvalue {lo:.3e})"
                )));
            }
            Ok(rho)
        })
        .collect();
    states.into_iter().collect()
}

/// Lattice field-strength curvature of a rank-1 projector field.
///
/// The plaquette phase at n is the argument of the gauge-invariant cycle
/// trace tr(P_n P_{n+2̂} P_{n+2̂+1̂} P_{n+1̂}) — the link-product circulation
/// n → n+2̂ → n+2̂+1̂ → n+1̂ → n, identical for every per-node eigenvector
/// choice. Each phase lies in (−π, π]; the orientation is fixed by the
/// two-band reference family (lower band of d(ε) = (sin ε₁, sin ε₂,
/// m + cos ε₁ + cos ε₂) has Chern number −1 at m = 1).
pub fn fhs_curvature(field: &FiberField) -> Result<CurvatureField> {
    let (k1, k2) = field.grid().require_2d()?;
    check_projector_field(field)?;
    // Two-stage collect for a deterministic first-failing-link report.
    let phases: Vec<Result<f64>> = (0..k1 * k2)
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / k2, flat % k2);
            let a = field.at(i, j);
            let b = field.at(i, j + 1);
            let c = field.at(i + 1, j + 1);
            let d = field.at(i + 1, j);
            // Links of the cycle; overlap magnitudes are gauge-invariant:
            // |⟨z_a|z_b⟩|² = tr(P_a P_b).
            for (p, q, from, to) in [
                (a, b, (i, j), (i, j + 1)),
                (b, c, (i, j + 1), (i + 1, j + 1)),
                (c, d, (i + 1, j + 1), (i + 1, j)),
                (d, a, (i + 1, j), (i, j)),
            ] {
                let overlap_sq = linalg::trace(&(p * q)).re.max(0.0);
                if overlap_sq.sqrt() < tol::RANK {
                    return Err(Error::Admissibility(format!(
                        "vanishing link overlap between nodes {from:?} and {to:?}; mesh too coarse"
                    )));
                }
            }
            let cycle = linalg::trace(&(a * b * c * d));
            Ok(cycle.arg())
        })
        .collect();
    let plaquette_values = phases.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(CurvatureField {
        grid: field.grid().clone(),
        plaquette_values,
    })
}

/// First Chern number of a rank-1 projector field on a 2D torus grid, by
/// the lattice field-strength method. Exactly gauge-invariant; integer at
/// every admissible mesh.
pub fn chern_fhs(field: &FiberField) -> Result<LatticeInvariant> {
    let curvature = fhs_curvature(field)?;
    round_invariant(curvature.total() / (2.0 * PI), 1e-6, "Chern number")
}

/// Discrete curvature matrices log Hol_P of the canonical-amplitude
/// connection, one per plaquette, traversed like [`fhs_curvature`].
fn connection_plaquette_logs(field: &FiberField) -> Result<Vec<CMatrix>> {
    let (k1, k2) = field.grid().require_2d()?;
    let states = check_density_field(field, tol::RANK)?;
    let roots: Vec<CMatrix> = states.par_iter().map(|rho| rho.sqrt()).collect();
    let root_at = |i: usize, j: usize| -> &CMatrix { &roots[(i % k1) * k2 + (j % k2)] };
    // Two-stage collect for a deterministic first-failing-plaquette report.
    let logs: Vec<Result<CMatrix>> = (0..k1 * k2)
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / k2, flat % k2);
            let cycle = [(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j), (i, j)];
            let n = field.fiber_dim();
            let mut hol = CMatrix::identity(n, n);
            for edge in cycle.windows(2) {
                let start = root_at(edge[0].0, edge[0].1);
                let end = root_at(edge[1].0, edge[1].1);
                let a = connection_spectral_raw(start, &(end - start))?;
                // Parallel transport along the edge: V̇ = −𝒜(Ṁ)V.
                hol = linalg::expm(&(-a)) * hol;
            }
            linalg::log_near_identity(&hol)
        })
        .collect();
    logs.into_iter().collect()
}

/// Per-plaquette trace curvature Im tr log Hol_P of the canonical-amplitude
/// connection of a full-rank density-matrix field.
pub fn uhlmann_curvature(field: &FiberField) -> Result<CurvatureField> {
    let logs = connection_plaquette_logs(field)?;
    Ok(CurvatureField {
        grid: field.grid().clone(),
        plaquette_values: logs.iter().map(|l| linalg::trace(l).im).collect(),
    })
}

/// Total trace curvature (1/2π) Σ_P Im tr log Hol_P of the
/// canonical-amplitude connection.
///
/// The bundle of amplitudes over the full-rank stratum is trivial, so this
/// vanishes for every smooth family: each transporter has unit determinant
/// (the connection values are traceless in the canonical gauge), making the
/// result pure floating-point dust — typically ~1e-15 at every mesh, with
/// no decay left to observe under refinement.
pub fn uhlmann_chern_trace(field: &FiberField) -> Result<f64> {
    Ok(uhlmann_curvature(field)?.total() / (2.0 * PI))
}

/// Purity-weighted curvature sum (1/2π) Σ_P Im tr(ρ_P · log Hol_P), with
/// ρ_P the state at the plaquette corner.
///
/// Unlike the unweighted trace this does not cancel: it is a genuine real
/// number, but it is *not* quantized and moves under smooth perturbations
/// of the family.
pub fn weighted_chern(field: &FiberField) -> Result<f64> {
    let (k1, k2) = field.grid().require_2d()?;
    let logs = connection_plaquette_logs(field)?;
    let total: f64 = (0..k1 * k2)
        .map(|flat| {
            let (i, j) = (flat / k2, flat % k2);
            linalg::trace(&(field.at(i, j) * &logs[flat])).im
        })
        .sum();
    Ok(total / (2.0 * PI))
}

/// Literal discretization of (1/2π) ∫ tr(ρ⁻¹dρ ∧ ρ⁻¹dρ) on a 2D grid, with
/// ω_a = ρ⁻¹ ∂_a ρ from central differences and the wedge evaluated as the
/// commutator tr(ω₁ω₂ − ω₂ω₁) per cell.
///
/// The trace of a commutator is zero, so the full sum cancels identically;
/// the returned number is discretization noise (≲1e-6 on smooth families)
/// and serves as a transcription-fidelity diagnostic.
pub fn winding_literal(field: &FiberField) -> Result<f64> {
    let (k1, k2) = field.grid().require_2d()?;
    check_density_field(field, tol::RANK)?;
    let (h1, h2) = (field.grid().spacing[0], field.grid().spacing[1]);
    // Two-stage collect for a deterministic first-failing-node report.
    let cells: Vec<Result<f64>> = (0..k1 * k2)
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / k2, flat % k2);
            let rho = field.at(i, j);
            let d1 = (field.at(i + 1, j) - field.at(i + k1 - 1, j)).unscale(2.0 * h1);
            let d2 = (field.at(i, j + 1) - field.at(i, j + k2 - 1)).unscale(2.0 * h2);
            let lu = rho.clone().lu();
            let w1 = lu.solve(&d1).ok_or_else(|| {
                Error::Stratum(format!("node ({i}, {j}) is numerically singular"))
            })?;
            let w2 = lu.solve(&d2).ok_or_else(|| {
                Error::Stratum(format!("node ({i}, {j}) is numerically singular"))
            })?;
            let comm = &w1 * &w2 - &w2 * &w1;
            Ok(linalg::trace(&comm).im * h1 * h2)
        })
        .collect();
    let cell_values = cells.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(cell_values.iter().sum::<f64>() / (2.0 * PI))
}

/// Bloch vector r of a two-level density matrix: ρ = (I + r·σ)/2.
pub fn bloch_vector(rho: &DensityMatrix) -> Result<[f64; 3]> {
    if rho.dim() != 2 {
        return Err(Error::Domain(format!(
            "Bloch vectors are defined for two-level states, got dimension {}",
            rho.dim()
        )));
    }
    let mut r = [0.0; 3];
    for (a, slot) in r.iter_mut().enumerate() {
        *slot = linalg::trace(&(rho.mat() * linalg::pauli(a + 1))).re;
    }
    Ok(r)
}

/// Signed solid angle of the spherical triangle (a, b, c) of unit vectors,
/// by the Van Oosterom–Strackee formula.
fn triangle_solid_angle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let dot = |x: [f64; 3], y: [f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let cross = |x: [f64; 3], y: [f64; 3]| {
        [
            x[1] * y[2] - x[2] * y[1],
            x[2] * y[0] - x[0] * y[2],
            x[0] * y[1] - x[1] * y[0],
        ]
    };
    let numer = dot(a, cross(b, c));
    let denom = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * numer.atan2(denom)
}

/// Mapping degree of the normalized Bloch direction field of a two-level,
/// full-rank, non-central density-matrix family over a 2D torus grid.
///
/// Each grid cell is split into two spherical triangles whose signed areas
/// (Van Oosterom–Strackee) are summed and divided by 4π. The triangle
/// orientation is fixed so the degree of a lower-band projector family
/// equals its lattice Chern number. The raw sum rounds to an exact integer;
/// residuals above 1e-3 are rejected as unresolved meshes.
pub fn mapping_degree(field: &FiberField) -> Result<LatticeInvariant> {
    let (k1, k2) = field.grid().require_2d()?;
    if field.fiber_dim() != 2 {
        return Err(Error::Domain(format!(
            "mapping degree needs two-level fibers, got dimension {}",
            field.fiber_dim()
        )));
    }
    // Two-stage collect for a deterministic first-failing-node report.
    let gated: Vec<Result<[f64; 3]>> = field
        .values()
        .par_iter()
        .enumerate()
        .map(|(flat, m)| {
            let idx = field.grid().unflatten(flat);
            let rho = DensityMatrix::new(m.clone())
                .map_err(|e| Error::Validation(format!("node {idx:?}: {e}")))?;
            let r = bloch_vector(&rho)?;
            let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            if len <= 1e-8 {
                return Err(Error::Central(format!(
                    "node {idx:?} is at the maximally mixed state (|r| = {len:.3e}); direction undefined"
                )));
            }
            if len >= 1.0 - 1e-8 {
                return Err(Error::Stratum(format!(
                    "node {idx:?} is pure (|r| = {len:.9}); the family must stay in the full-rank stratum"
                )));
            }
            Ok([r[0] / len, r[1] / len, r[2] / len])
        })
        .collect();
    let directions = gated.into_iter().collect::<Result<Vec<[f64; 3]>>>()?;
    let dir_at = |i: usize, j: usize| directions[(i % k1) * k2 + (j % k2)];
    let total: f64 = (0..k1 * k2)
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / k2, flat % k2);
            let a = dir_at(i, j);
            let b = dir_at(i + 1, j);
            let c = dir_at(i + 1, j + 1);
            let d = dir_at(i, j + 1);
            triangle_solid_angle(a, c, b) + triangle_solid_angle(a, d, c)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    round_invariant(total / (4.0 * PI), 1e-3, "mapping degree")
}

/// Stratum margins of a state: its smallest eigenvalue (distance to the
/// rank boundary) and its HS distance to the maximally mixed state I/N.
pub fn strata_distance(rho: &DensityMatrix) -> (f64, f64) {
    let min_eig = rho.min_eigenvalue().max(0.0);
    let center = maximally_mixed(rho.dim()).expect("state dimension ≥ 2");
    (min_eig, rho.hs_distance(&center))
}

/// Reference two-band Bloch vector d(ε) = (sin ε₁, sin ε₂, m + cos ε₁ + cos ε₂).
///
/// Gapped for |m| ∉ {0, 2}; the lower band carries Chern number −1 at
/// m = 1, +1 at m = −1, and 0 for |m| > 2 under this module's orientation.
pub fn two_band_d(m: f64, eps: &[f64]) -> [f64; 3] {
    [eps[0].sin(), eps[1].sin(), m + eps[0].cos() + eps[1].cos()]
}

/// Lower-band projector (I − d̂·σ)/2 of the Hamiltonian d·σ.
pub fn lower_band_projector(d: [f64; 3]) -> CMatrix {
    let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    (linalg::identity(2) - linalg::dot_sigma([d[0] / len, d[1] / len, d[2] / len])).scale(0.5)
}
