//! GKLS open-system dynamics: superoperator construction, exact and
//! stepped propagation, fiberwise Brillouin-zone evolution, and the
//! degree-invariance experiment.
//!
//! The generator ρ̇ = −i[H, ρ] + Σ_i (K_i ρ K_i† − ½{K_i†K_i, ρ}) is
//! represented as an N²×N² matrix acting on column-vectorized states
//! (column-stacking convention: vec(AXB) = (Bᵀ⊗A)·vec X, which puts the
//! transposes on the *left* Kronecker factors). Exact propagation by dense
//! matrix exponential is the reference; RK4 stepping exists for long
//! trajectories and is guarded by a stability bound on the step size.

use rayon::prelude::*;

use crate::bloch::BlochModel;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::states::DensityMatrix;
use crate::topology::{mapping_degree, strata_distance, FiberField, LatticeInvariant};

/// A GKLS generator specification: Hermitian Hamiltonian (ħ = 1) plus any
/// number of jump operators (√rate units).
#[derive(Debug, Clone)]
pub struct GKLSSpec {
    h: CMatrix,
    jumps: Vec<CMatrix>,
}

impl GKLSSpec {
    /// Validate and build: H must be square Hermitian (within 1e-12
    /// relative) and every jump must match its dimension.
    pub fn new(h: CMatrix, jumps: Vec<CMatrix>) -> Result<Self> {
        let n = h.nrows();
        if n < 2 || h.ncols() != n {
            return Err(Error::Validation(format!(
                "Hamiltonian must be square of dimension ≥ 2, got {:?}",
                h.shape()
            )));
        }
        let herm = linalg::hermiticity_residual(&h);
        if herm > linalg::tol::HERM {
            return Err(Error::Validation(format!(
                "Hamiltonian is not Hermitian (relative residual {herm:.3e})"
            )));
        }
        if let Some(bad) = jumps.iter().find(|k| k.shape() != (n, n)) {
            return Err(Error::Validation(format!(
                "jump operator shape {:?} does not match dimension {n}",
                bad.shape()
            )));
        }
        Ok(GKLSSpec { h, jumps })
    }

    /// The Hamiltonian.
    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    /// The jump operators.
    pub fn jumps(&self) -> &[CMatrix] {
        &self.jumps
    }

    /// Hilbert-space dimension N.
    pub fn dim(&self) -> usize {
        self.h.nrows()
    }
}

/// Matrix representation of a GKLS generator on column-vectorized states.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    mat: CMatrix,
    dim: usize,
}

impl Liouvillian {
    /// The N²×N² generator matrix.
    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    /// Hilbert-space dimension N.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Apply the generator to a density matrix: unvec(L·vec ρ).
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        Ok(linalg::unvec_mat(
            &(&self.mat * linalg::vec_mat(rho)),
            self.dim,
        ))
    }

    /// Residual of the trace-preservation identity: ‖vec(I)†·L‖. Zero (up
    /// to roundoff, ≤ 1e-10) for every generator built from a [`GKLSSpec`].
    pub fn trace_defect(&self) -> f64 {
        let id = linalg::vec_mat(&linalg::identity(self.dim));
        (self.mat.adjoint() * id).norm()
    }
}

/// Build the vectorized GKLS generator
/// L = −i[(I⊗H) − (Hᵀ⊗I)] + Σ_K [(K̄⊗K) − ½(I⊗K†K) − ½((K†K)ᵀ⊗I)]
/// in the column-stacking convention.
pub fn liouvillian_matrix(spec: &GKLSSpec) -> Liouvillian {
    let n = spec.dim();
    let id = linalg::identity(n);
    let minus_i = c(0.0, -1.0);
    let mut mat = (linalg::kron(&id, &spec.h) - linalg::kron(&spec.h.transpose(), &id)) * minus_i;
    for k in &spec.jumps {
        let kdk = k.adjoint() * k;
        mat += linalg::kron(&k.conjugate(), k)
            - (linalg::kron(&id, &kdk) + linalg::kron(&kdk.transpose(), &id)).scale(0.5);
    }
    Liouvillian { mat, dim: n }
}

/// The GKLS right-hand side −i[H,ρ] + Σ_i (K_iρK_i† − ½{K_i†K_i, ρ}),
/// computed directly (no vectorization). Reference implementation for
/// pinning the matrix representation.
pub fn gkls_rhs(spec: &GKLSSpec, rho: &CMatrix) -> CMatrix {
    let h = &spec.h;
    let mut out = (h * rho - rho * h) * c(0.0, -1.0);
    for k in &spec.jumps {
        let kdk = k.adjoint() * k;
        out += k * rho * k.adjoint() - (&kdk * rho + rho * &kdk).scale(0.5);
    }
    out
}

/// Propagation method for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Dense matrix exponential of L·t — the reference propagator.
    Exact,
    /// Classical fourth-order Runge–Kutta with fixed step `dt`
    /// (rounded down so the steps tile [0, t] exactly). The step must
    /// satisfy dt ≤ 0.1/‖L‖.
    Rk4 { dt: f64 },
}

/// Diagnostics of the raw integrator output, measured before the result is
/// projected back onto the state space.
#[derive(Debug, Clone, Copy)]
pub struct EvolveDiagnostics {
    /// |tr ρ − 1| of the raw output.
    pub trace_defect: f64,
    /// Relative Hermiticity residual of the raw output.
    pub hermiticity: f64,
    /// Smallest eigenvalue of the symmetrized raw output.
    pub min_eigenvalue: f64,
}

const TRACE_DRIFT: f64 = 1e-9;
const HERM_DRIFT: f64 = 1e-10;
const EIG_DRIFT: f64 = -1e-8;

/// Evolve a state under a GKLS generator for time t, returning the final
/// state together with integrator diagnostics.
///
/// The raw propagated matrix must stay a state up to integrator drift
/// (|tr − 1| ≤ 1e-9, Hermiticity ≤ 1e-10, eigenvalues ≥ −1e-8); it is then
/// projected back onto the state space (symmetrized, negative eigenvalues
/// at roundoff scale clamped, trace renormalized).
pub fn evolve_with_diagnostics(
    rho0: &DensityMatrix,
    spec: &GKLSSpec,
    t: f64,
    method: Method,
) -> Result<(DensityMatrix, EvolveDiagnostics)> {
    if rho0.dim() != spec.dim() {
        return Err(Error::Validation(format!(
            "state dimension {} does not match generator dimension {}",
            rho0.dim(),
            spec.dim()
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "evolution time must be ≥ 0, got {t}"
        )));
    }
    if t == 0.0 {
        let diag = EvolveDiagnostics {
            trace_defect: 0.0,
            hermiticity: 0.0,
            min_eigenvalue: rho0.min_eigenvalue(),
        };
        return Ok((rho0.clone(), diag));
    }
    let liouville = liouvillian_matrix(spec);
    let v0 = linalg::vec_mat(rho0.mat());
    let v_final: CVector = match method {
        Method::Exact => linalg::expm(&liouville.mat().scale(t)) * v0,
        Method::Rk4 { dt } => {
            if !(dt > 0.0) {
                return Err(Error::Domain(format!(
                    "step size must be positive, got {dt}"
                )));
            }
            let lnorm = liouville.mat().norm();
            if lnorm > 0.0 && dt > 0.1 / lnorm {
                return Err(Error::Numerical(format!(
                    "step {dt} exceeds the stability bound 0.1/‖L‖ = {:.3e}",
                    0.1 / lnorm
                )));
            }
            let steps = (t / dt).ceil().max(1.0) as usize;
            let h = t / steps as f64;
            let mut v = v0;
            for _ in 0..steps {
                let k1 = liouville.mat() * &v;
                let k2 = liouville.mat() * &(&v + &k1 * c(0.5 * h, 0.0));
                let k3 = liouville.mat() * &(&v + &k2 * c(0.5 * h, 0.0));
                let k4 = liouville.mat() * &(&v + &k3 * c(h, 0.0));
                v += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0);
            }
            v
        }
    };
    let raw = linalg::unvec_mat(&v_final, spec.dim());

    let trace = linalg::trace(&raw);
    let diag = EvolveDiagnostics {
        trace_defect: (trace - c(1.0, 0.0)).norm(),
        hermiticity: linalg::hermiticity_residual(&raw),
        min_eigenvalue: linalg::eigh(&raw).values[0],
    };
    if diag.trace_defect > TRACE_DRIFT {
        return Err(Error::Numerical(format!(
            "propagation lost trace normalization (defect {:.3e})",
            diag.trace_defect
        )));
    }
    if diag.hermiticity > HERM_DRIFT {
        return Err(Error::Numerical(format!(
            "propagation lost Hermiticity (residual {:.3e})",
            diag.hermiticity
        )));
    }
    if diag.min_eigenvalue < EIG_DRIFT {
        return Err(Error::Numerical(format!(
            "propagation lost positivity (smallest eigenvalue {:.3e})",
            diag.min_eigenvalue
        )));
    }

    // Project back onto the state space: clamp roundoff-scale negative
    // eigenvalues and renormalize the trace.
    let e = linalg::eigh(&raw);
    let clamped: Vec<f64> = e.values.iter().map(|&w| w.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    let mut repaired = CMatrix::zeros(spec.dim(), spec.dim());
    for (idx, &w) in clamped.iter().enumerate() {
        let col = e.vectors.column(idx);
        let proj = CMatrix::from_fn(spec.dim(), spec.dim(), |r, s| col[r] * col[s].conj());
        repaired += proj * c(w / total, 0.0);
    }
    let state = DensityMatrix::new(linalg::hermitian_part(&repaired))
        .expect("projected output is a valid state");
    Ok((state, diag))
}

/// Evolve a state under a GKLS generator for time t. See
/// [`evolve_with_diagnostics`] for the drift guards applied to the result.
pub fn evolve(
    rho0: &DensityMatrix,
    spec: &GKLSSpec,
    t: f64,
    method: Method,
) -> Result<DensityMatrix> {
    evolve_with_diagnostics(rho0, spec, t, method).map(|(state, _)| state)
}

/// Evolve every node of a density-matrix field under the model's fiberwise
/// GKLS generator for time t (exact propagation, nodes independent and
/// computed in parallel). Node failures are reported with their grid
/// coordinates.
pub fn fiberwise_evolve(model: &BlochModel, field: &FiberField, t: f64) -> Result<FiberField> {
    let grid = field.grid().clone();
    let dims = grid.dims().to_vec();
    // Two-stage collect for a deterministic first-failing-node report.
    let evolved_nodes: Vec<Result<CMatrix>> = (0..grid.node_count())
        .into_par_iter()
        .map(|flat| {
            let mut index = vec![0usize; dims.len()];
            let mut rest = flat;
            for a in (0..dims.len()).rev() {
                index[a] = rest % dims[a];
                rest /= dims[a];
            }
            let eps = grid.point(&index);
            let with_node = |e: Error| -> Error {
                let wrap = format!("node {index:?}: {e}");
                match e {
                    Error::Validation(_) => Error::Validation(wrap),
                    Error::Domain(_) => Error::Domain(wrap),
                    Error::Stratum(_) => Error::Stratum(wrap),
                    Error::Central(_) => Error::Central(wrap),
                    Error::Degenerate(_) => Error::Degenerate(wrap),
                    Error::Admissibility(_) => Error::Admissibility(wrap),
                    Error::Numerical(_) => Error::Numerical(wrap),
                }
            };
            let spec = GKLSSpec::new(
                model.h_fiber(&eps),
                model.jump_fiber(&eps).map_err(with_node)?,
            )
            .map_err(with_node)?;
            let rho = DensityMatrix::new(field.values()[flat].clone()).map_err(with_node)?;
            let evolved = evolve(&rho, &spec, t, Method::Exact).map_err(with_node)?;
            Ok(evolved.mat().clone())
        })
        .collect();
    let values = evolved_nodes
        .into_iter()
        .collect::<Result<Vec<CMatrix>>>()?;
    FiberField::new(grid, values)
}

/// Which stratum margin a [`TransitionWindow`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginKind {
    /// Smallest eigenvalue (distance to the rank boundary).
    Rank,
    /// HS distance to the maximally mixed state.
    Center,
}

/// A recorded crossing of a stratum-margin threshold between two
/// consecutive sample times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionWindow {
    /// Last sample time with the margin on the original side.
    pub start: f64,
    /// First sample time with the margin on the other side.
    pub end: f64,
    /// Which margin crossed.
    pub margin: MarginKind,
}

/// Mapping degree at one sample time: either a resolved invariant or the
/// reason it is undefined (e.g. a node reached the maximally mixed state).
#[derive(Debug, Clone, PartialEq)]
pub enum DegreeSample {
    Defined(LatticeInvariant),
    Undefined(String),
}

/// Margin threshold below which degree constancy is no longer asserted.
pub const MARGIN_THRESHOLD: f64 = 1e-6;

/// Full record of a fiberwise evolution experiment: snapshots, the mapping
/// degree per sample time, per-node stratum margins, and any
/// threshold-crossing windows.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    times: Vec<f64>,
    states: Vec<FiberField>,
    degrees: Vec<DegreeSample>,
    strata_margins: Vec<Vec<(f64, f64)>>,
    transition_windows: Vec<TransitionWindow>,
}

impl TrajectoryRecord {
    /// Sample times, strictly increasing.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Field snapshot per sample time.
    pub fn states(&self) -> &[FiberField] {
        &self.states
    }

    /// Mapping degree per sample time.
    pub fn degrees(&self) -> &[DegreeSample] {
        &self.degrees
    }

    /// (min_eig, dist_center) per sample time per node (row-major node
    /// order).
    pub fn strata_margins(&self) -> &[Vec<(f64, f64)>] {
        &self.strata_margins
    }

    /// Threshold crossings of the minimum margins between consecutive
    /// sample times.
    pub fn transition_windows(&self) -> &[TransitionWindow] {
        &self.transition_windows
    }

    /// Minimum margins over all nodes at sample index `i`.
    pub fn min_margins(&self, i: usize) -> (f64, f64) {
        self.strata_margins[i].iter().fold(
            (f64::INFINITY, f64::INFINITY),
            |(rank, center), &(lo, dc)| (rank.min(lo), center.min(dc)),
        )
    }
}

/// Evolve a two-level field under the model's fiberwise GKLS generator,
/// recording the mapping degree and stratum margins at each requested
/// time.
///
/// Margin crossings are recorded as [`TransitionWindow`]s, never as
/// failures; the mapping degree is recorded as undefined when a node
/// reaches the maximally mixed state or leaves the full-rank stratum.
/// Degree constancy is asserted between consecutive samples whose minimum
/// margins both exceed [`MARGIN_THRESHOLD`] — a change there is a genuine
/// violation and fails the experiment.
pub fn invariance_experiment(
    model: &BlochModel,
    field0: &FiberField,
    times: &[f64],
) -> Result<TrajectoryRecord> {
    if field0.fiber_dim() != 2 {
        return Err(Error::Validation(format!(
            "degree experiments need two-level fibers, got dimension {}",
            field0.fiber_dim()
        )));
    }
    if times.is_empty() {
        return Err(Error::Validation(
            "at least one sample time is required".into(),
        ));
    }
    if !(times[0] >= 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Validation(
            "sample times must be ≥ 0 and strictly increasing".into(),
        ));
    }

    let mut states: Vec<FiberField> = Vec::with_capacity(times.len());
    let mut current = if times[0] == 0.0 {
        field0.clone()
    } else {
        fiberwise_evolve(model, field0, times[0])?
    };
    states.push(current.clone());
    for pair in times.windows(2) {
        current = fiberwise_evolve(model, &current, pair[1] - pair[0])?;
        states.push(current.clone());
    }

    let degrees: Vec<DegreeSample> = states
        .iter()
        .map(|field| match mapping_degree(field) {
            Ok(inv) => DegreeSample::Defined(inv),
            Err(e) => DegreeSample::Undefined(e.to_string()),
        })
        .collect();

    let strata_margins: Vec<Vec<(f64, f64)>> = states
        .iter()
        .map(|field| {
            field
                .values()
                .iter()
                .map(|m| {
                    let rho = DensityMatrix::new(m.clone()).expect("snapshot nodes are states");
                    strata_distance(&rho)
                })
                .collect()
        })
        .collect();

    let record = TrajectoryRecord {
        times: times.to_vec(),
        states,
        degrees,
        strata_margins,
        transition_windows: Vec::new(),
    };

    let mut transition_windows = Vec::new();
    for i in 0..times.len() - 1 {
        let (rank_a, center_a) = record.min_margins(i);
        let (rank_b, center_b) = record.min_margins(i + 1);
        if (rank_a >= MARGIN_THRESHOLD) != (rank_b >= MARGIN_THRESHOLD) {
            transition_windows.push(TransitionWindow {
                start: times[i],
                end: times[i + 1],
                margin: MarginKind::Rank,
            });
        }
        if (center_a >= MARGIN_THRESHOLD) != (center_b >= MARGIN_THRESHOLD) {
            transition_windows.push(TransitionWindow {
                start: times[i],
                end: times[i + 1],
                margin: MarginKind::Center,
            });
        }
        let margins_good = rank_a >= MARGIN_THRESHOLD
            && center_a >= MARGIN_THRESHOLD
            && rank_b >= MARGIN_THRESHOLD
            && center_b >= MARGIN_THRESHOLD;
        if margins_good {
            if let (DegreeSample::Defined(da), DegreeSample::Defined(db)) =
                (&record.degrees[i], &record.degrees[i + 1])
            {
                if da.value != db.value {
                    return Err(Error::Numerical(format!(
                        "mapping degree changed from {} to {} between t = {} and t = {} \
                         although both margins stayed above {MARGIN_THRESHOLD:.0e}",
                        da.value,
                        db.value,
                        times[i],
                        times[i + 1]
                    )));
                }
            }
        }
    }

    Ok(TrajectoryRecord {
        transition_windows,
        ..record
    })
}
