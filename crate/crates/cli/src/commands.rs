//! Command implementations: each one computes its results and renders the
//! optional CSV body; file writing stays in `main`.

use std::f64::consts::PI;

use mixtop::bloch::{band_projector, thermal_family, BlochModel, FiberKind, JumpKind, RingLattice};
use mixtop::bloch::{bloch_decompose, translation_invariance_check};
use mixtop::geometry::{aa_phase, loops, uhlmann_transport_with, StateLoop};
use mixtop::linalg;
use mixtop::lindblad::{invariance_experiment, DegreeSample, MarginKind, MARGIN_THRESHOLD};
use mixtop::sample;
use mixtop::serial::DensityLoopJson;
use mixtop::states::{DensityMatrix, PureState};
use mixtop::topology::{
    fhs_curvature, mapping_degree, round_invariant, strata_distance, FiberField, TorusGrid,
};
use mixtop::{CMatrix, Error, Result};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    AaPhaseConfig, BlochCheckConfig, ChernConfig, DegreeConfig, DensityLoopSpec, EvolveConfig,
    PureLoopSpec, RunConfig, ThermalSweepConfig, UhlmannConfig,
};
use crate::report::{csv_row, fnum};

/// What a command produced: a results object for the report, and the CSV
/// body for commands with tabular data.
pub struct CommandOutcome {
    pub results: Value,
    pub csv: Option<String>,
}

/// Execute a resolved configuration.
pub fn run(cfg: &RunConfig) -> Result<CommandOutcome> {
    match cfg {
        RunConfig::AaPhase(c) => run_aa_phase(c),
        RunConfig::Uhlmann(c) => run_uhlmann(c),
        RunConfig::Chern(c) => run_chern(c),
        RunConfig::Degree(c) => run_degree(c),
        RunConfig::Evolve(c) => run_evolve(c),
        RunConfig::ThermalSweep(c) => run_thermal_sweep(c),
        RunConfig::BlochCheck(c) => run_bloch_check(c),
    }
}

fn with_node(idx: [usize; 2], e: Error) -> Error {
    let msg = format!("node [{}, {}]: {e}", idx[0], idx[1]);
    match e {
        Error::Validation(_) => Error::Validation(msg),
        Error::Domain(_) => Error::Domain(msg),
        Error::Stratum(_) => Error::Stratum(msg),
        Error::Central(_) => Error::Central(msg),
        Error::Degenerate(_) => Error::Degenerate(msg),
        Error::Admissibility(_) => Error::Admissibility(msg),
        Error::Numerical(_) => Error::Numerical(msg),
    }
}

fn build_pure_loop(spec: &PureLoopSpec) -> StateLoop<PureState> {
    match spec {
        PureLoopSpec::GreatCircle { samples } => loops::great_circle_loop(*samples),
        PureLoopSpec::Octant { samples } => loops::octant_loop(*samples),
        PureLoopSpec::Circle {
            polar_angle_rad,
            samples,
        } => loops::circle_loop(*polar_angle_rad, *samples),
        PureLoopSpec::GroundCircle {
            polar_angle_rad,
            samples,
        } => loops::ground_circle_loop(*polar_angle_rad, *samples),
    }
}

fn run_aa_phase(c: &AaPhaseConfig) -> Result<CommandOutcome> {
    let base = build_pure_loop(&c.loop_spec);
    let hol = aa_phase(&base)?;
    let mut results = json!({
        "phase_rad": hol.phase,
        "intervals": base.mesh(),
    });
    if c.gauge_shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed.unwrap_or(0));
        let k = base.mesh();
        let mut rephased: Vec<PureState> = Vec::with_capacity(k + 1);
        for j in 0..k {
            let lambda = linalg::c(0.0, rng.gen_range(-PI..PI)).exp();
            rephased.push(PureState::normalized(base.samples()[j].rep() * lambda)?);
        }
        rephased.push(rephased[0].clone());
        let regauged = StateLoop::new(rephased, base.params().to_vec())?;
        let shifted = aa_phase(&regauged)?;
        results["gauge_shuffled_phase_rad"] = json!(shifted.phase);
        results["gauge_shift_rad"] = json!(linalg::angle_dist(shifted.phase, hol.phase));
    }
    Ok(CommandOutcome { results, csv: None })
}

fn run_uhlmann(c: &UhlmannConfig) -> Result<CommandOutcome> {
    let state_loop = match &c.loop_spec {
        DensityLoopSpec::ThermalCircle {
            polar_angle_rad,
            temperature,
            samples,
        } => loops::thermal_circle_loop(*polar_angle_rad, *temperature, *samples)?,
        DensityLoopSpec::Literal {
            samples,
            closed,
            params,
        } => DensityLoopJson {
            samples: samples.clone(),
            closed: *closed,
            params: params.clone(),
        }
        .to_loop()?,
    };
    let rank_tol = if c.rank_gate { c.tol } else { None };
    let hol = uhlmann_transport_with(&state_loop, rank_tol)?;
    Ok(CommandOutcome {
        results: json!({
            "uhlmann_phase_rad": hol.phase,
            "intervals": state_loop.mesh(),
            "rank_gate": c.rank_gate,
        }),
        csv: None,
    })
}

fn family_id(kind: &FiberKind, band: usize) -> String {
    match kind {
        FiberKind::Qwz { m } => format!("qwz(m={m}):band{band}"),
        FiberKind::TwoBandD { .. } => format!("two_band_d:band{band}"),
    }
}

fn band_projector_field(model: &BlochModel, k: usize, band: usize) -> Result<FiberField> {
    let grid = TorusGrid::square(k)?;
    // Two-stage collect for a deterministic first-failing-node report.
    let nodes: Vec<Result<CMatrix>> = (0..grid.node_count())
        .into_par_iter()
        .map(|flat| {
            let idx = [flat / k, flat % k];
            let eps = grid.point(&idx);
            let p = band_projector(model, &eps, band).map_err(|e| with_node(idx, e))?;
            Ok(p.mat().clone())
        })
        .collect();
    let values = nodes.into_iter().collect::<Result<Vec<CMatrix>>>()?;
    FiberField::new(grid, values)
}

const INVARIANT_CSV_HEADER: &str = "family_id,mesh,invariant_name,raw_value,rounded,residual\n";

fn run_chern(c: &ChernConfig) -> Result<CommandOutcome> {
    let meshes = c
        .grid
        .map(|k| vec![k])
        .unwrap_or_else(|| c.grids.clone().unwrap_or_default());
    let tol = c.tol.expect("resolved configs carry the tolerance");
    let model = BlochModel::new(c.model.clone());
    let id = family_id(&c.model, c.band);
    let mut runs = Vec::new();
    let mut csv = String::from(INVARIANT_CSV_HEADER);
    for &k in &meshes {
        let field = band_projector_field(&model, k, c.band)?;
        let curvature = fhs_curvature(&field)?;
        let invariant = round_invariant(curvature.total() / (2.0 * PI), tol, "Chern number")?;
        runs.push(json!({
            "mesh": k,
            "raw": invariant.raw,
            "value": invariant.value,
            "residual": invariant.residual,
        }));
        csv += &csv_row(&[
            id.clone(),
            format!("{k}x{k}"),
            "chern_fhs".into(),
            fnum(invariant.raw),
            invariant.value.to_string(),
            fnum(invariant.residual),
        ]);
    }
    Ok(CommandOutcome {
        results: json!({
            "invariant": "chern_fhs",
            "family_id": id,
            "runs": runs,
        }),
        csv: Some(csv),
    })
}

fn field_margins(field: &FiberField) -> Result<(f64, f64)> {
    let mut min_rank = f64::INFINITY;
    let mut min_center = f64::INFINITY;
    for value in field.values() {
        let rho = DensityMatrix::new(value.clone())?;
        let (rank, center) = strata_distance(&rho);
        min_rank = min_rank.min(rank);
        min_center = min_center.min(center);
    }
    Ok((min_rank, min_center))
}

fn run_degree(c: &DegreeConfig) -> Result<CommandOutcome> {
    let meshes = c
        .grid
        .map(|k| vec![k])
        .unwrap_or_else(|| c.grids.clone().unwrap_or_default());
    let tol = c.tol.expect("resolved configs carry the tolerance");
    let model = BlochModel::new(c.model.clone());
    let id = format!("{}:T={}", family_id(&c.model, 0), c.temperature);
    let mut runs = Vec::new();
    let mut csv = String::from(INVARIANT_CSV_HEADER);
    for &k in &meshes {
        let field = thermal_family(&model, c.temperature, TorusGrid::square(k)?)?;
        let invariant = mapping_degree(&field)?;
        if invariant.residual > tol {
            return Err(Error::Admissibility(format!(
                "mapping degree rounding residual {:.3e} exceeds tol {:.1e}; mesh too coarse",
                invariant.residual, tol
            )));
        }
        let (min_rank, min_center) = field_margins(&field)?;
        runs.push(json!({
            "mesh": k,
            "raw": invariant.raw,
            "value": invariant.value,
            "residual": invariant.residual,
            "min_rank_margin": min_rank,
            "min_center_distance_hs": min_center,
        }));
        csv += &csv_row(&[
            id.clone(),
            format!("{k}x{k}"),
            "mapping_degree".into(),
            fnum(invariant.raw),
            invariant.value.to_string(),
            fnum(invariant.residual),
        ]);
    }
    Ok(CommandOutcome {
        results: json!({
            "invariant": "mapping_degree",
            "family_id": id,
            "runs": runs,
        }),
        csv: Some(csv),
    })
}

fn run_evolve(c: &EvolveConfig) -> Result<CommandOutcome> {
    let jumps = if c.gamma == 0.0 {
        Vec::new()
    } else {
        match c.dissipator.as_deref() {
            Some("depolarizing") => vec![JumpKind::Depolarizing { gamma: c.gamma }],
            Some("band_projector") => vec![JumpKind::BandProjector {
                gamma: c.gamma,
                band: c.band.unwrap_or(0),
            }],
            _ => unreachable!("validated during config resolution"),
        }
    };
    let model = BlochModel::new(c.model.clone()).with_jumps(jumps);
    let grid = TorusGrid::square(c.grid)?;
    let field0 = thermal_family(&model, c.temperature, grid)?;
    let record = invariance_experiment(&model, &field0, &c.times)?;

    let k = c.grid;
    let mut csv =
        String::from("time,node_i,node_j,min_eig,dist_center_hs,degree,degree_residual\n");
    let mut degree_rows = Vec::new();
    let mut margin_rows = Vec::new();
    for (ti, t) in record.times().iter().enumerate() {
        for (flat, (min_eig, dist_center)) in record.strata_margins()[ti].iter().enumerate() {
            csv += &csv_row(&[
                fnum(*t),
                (flat / k).to_string(),
                (flat % k).to_string(),
                fnum(*min_eig),
                fnum(*dist_center),
                String::new(),
                String::new(),
            ]);
        }
        let degree_cells = match &record.degrees()[ti] {
            DegreeSample::Defined(inv) => {
                degree_rows.push(json!({
                    "time": t,
                    "status": "defined",
                    "value": inv.value,
                    "residual": inv.residual,
                }));
                (inv.value.to_string(), fnum(inv.residual))
            }
            DegreeSample::Undefined(reason) => {
                degree_rows.push(json!({
                    "time": t,
                    "status": "undefined",
                    "reason": reason,
                }));
                ("undefined".into(), String::new())
            }
        };
        let (min_rank, min_center) = record.min_margins(ti);
        margin_rows.push(json!({
            "time": t,
            "min_rank_margin": min_rank,
            "min_center_distance_hs": min_center,
        }));
        csv += &csv_row(&[
            fnum(*t),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            degree_cells.0,
            degree_cells.1,
        ]);
    }
    let windows: Vec<Value> = record
        .transition_windows()
        .iter()
        .map(|w| {
            json!({
                "margin": match w.margin {
                    MarginKind::Rank => "rank",
                    MarginKind::Center => "center",
                },
                "after_time": w.start,
                "by_time": w.end,
            })
        })
        .collect();
    Ok(CommandOutcome {
        results: json!({
            "degrees": degree_rows,
            "min_margins": margin_rows,
            "transition_windows": windows,
            "margin_threshold": MARGIN_THRESHOLD,
        }),
        csv: Some(csv),
    })
}

fn run_thermal_sweep(c: &ThermalSweepConfig) -> Result<CommandOutcome> {
    let ground = aa_phase(&loops::ground_circle_loop(c.polar_angle_rad, c.samples))?;
    let mut csv = String::from("T,uhlmann_phase_rad,aa_phase_ground_rad,abs_difference_rad\n");
    let mut rows = Vec::new();
    for &temperature in &c.temperatures {
        let state_loop = loops::thermal_circle_loop(c.polar_angle_rad, temperature, c.samples)?;
        // The sweep approaches the pure-state limit, so the rank gate is off.
        let hol = uhlmann_transport_with(&state_loop, None)?;
        let diff = linalg::angle_dist(hol.phase, ground.phase);
        rows.push(json!({
            "T": temperature,
            "uhlmann_phase_rad": hol.phase,
            "aa_phase_ground_rad": ground.phase,
            "abs_difference_rad": diff,
        }));
        csv += &csv_row(&[
            fnum(temperature),
            fnum(hol.phase),
            fnum(ground.phase),
            fnum(diff),
        ]);
    }
    Ok(CommandOutcome {
        results: json!({
            "polar_angle_rad": c.polar_angle_rad,
            "intervals": c.samples,
            "rows": rows,
        }),
        csv: Some(csv),
    })
}

fn run_bloch_check(c: &BlochCheckConfig) -> Result<CommandOutcome> {
    let lattice = match (&c.lattice, &c.random) {
        (Some(spec), None) => RingLattice::new(
            spec.cells,
            spec.orbitals,
            spec.intra.to_matrix()?,
            spec.inter.to_matrix()?,
            spec.period,
        )?,
        (None, Some(spec)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed.unwrap_or(0));
            RingLattice::new(
                spec.cells,
                spec.orbitals,
                sample::random_hermitian(&mut rng, spec.orbitals),
                sample::random_matrix(&mut rng, spec.orbitals),
                1.0,
            )?
        }
        _ => unreachable!("validated during config resolution"),
    };
    let full_h = lattice.full_hamiltonian();
    let mut full = linalg::eigh(&full_h).values;
    full.sort_by(f64::total_cmp);
    let fibers = bloch_decompose(&lattice);
    let mut csv = String::from("fiber_index,quasi_momentum_rad_per_length,band_index,energy\n");
    let mut concatenated = Vec::with_capacity(full.len());
    for (fi, (eps, h_fiber)) in fibers.iter().enumerate() {
        let mut bands = linalg::eigh(h_fiber).values;
        bands.sort_by(f64::total_cmp);
        for (bi, energy) in bands.iter().enumerate() {
            csv += &csv_row(&[fi.to_string(), fnum(*eps), bi.to_string(), fnum(*energy)]);
            concatenated.push(*energy);
        }
    }
    concatenated.sort_by(f64::total_cmp);
    let spectrum_error = full
        .iter()
        .zip(&concatenated)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    let commutator = translation_invariance_check(&full_h, &lattice.translation_operator())?;
    let tol = c.tol.expect("resolved configs carry the tolerance");
    if spectrum_error > tol {
        return Err(Error::Numerical(format!(
            "fiber spectra disagree with the full spectrum by {spectrum_error:.3e} (tol {tol:.1e})"
        )));
    }
    if commutator > 1e-12 {
        return Err(Error::Numerical(format!(
            "translation commutator norm {commutator:.3e} exceeds 1e-12"
        )));
    }
    Ok(CommandOutcome {
        results: json!({
            "cells": lattice.cells(),
            "orbitals": lattice.orbitals(),
            "spectrum_max_abs_error": spectrum_error,
            "translation_commutator_hs": commutator,
        }),
        csv: Some(csv),
    })
}
