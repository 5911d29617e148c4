//! Run-configuration parsing: strict JSON (unknown keys rejected at every
//! level), flag overrides, and fully resolved echoes for reports.

use mixtop::bloch::FiberKind;
use mixtop::serial::MatrixJson;
use mixtop::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Command names as written in config files.
pub const COMMANDS: [&str; 7] = [
    "aa-phase",
    "uhlmann",
    "chern",
    "degree",
    "evolve",
    "thermal-sweep",
    "bloch-check",
];

/// Values supplied on the command line; they override config keys.
#[derive(Debug, Default, Clone)]
pub struct Flags {
    pub out: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

/// A validated, fully resolved run configuration.
#[derive(Debug, Clone)]
pub enum RunConfig {
    AaPhase(AaPhaseConfig),
    Uhlmann(UhlmannConfig),
    Chern(ChernConfig),
    Degree(DegreeConfig),
    Evolve(EvolveConfig),
    ThermalSweep(ThermalSweepConfig),
    BlochCheck(BlochCheckConfig),
}

impl RunConfig {
    /// The command name (kebab-case).
    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::AaPhase(_) => "aa-phase",
            RunConfig::Uhlmann(_) => "uhlmann",
            RunConfig::Chern(_) => "chern",
            RunConfig::Degree(_) => "degree",
            RunConfig::Evolve(_) => "evolve",
            RunConfig::ThermalSweep(_) => "thermal-sweep",
            RunConfig::BlochCheck(_) => "bloch-check",
        }
    }

    /// Report output path.
    pub fn out(&self) -> &str {
        let out = match self {
            RunConfig::AaPhase(c) => &c.out,
            RunConfig::Uhlmann(c) => &c.out,
            RunConfig::Chern(c) => &c.out,
            RunConfig::Degree(c) => &c.out,
            RunConfig::Evolve(c) => &c.out,
            RunConfig::ThermalSweep(c) => &c.out,
            RunConfig::BlochCheck(c) => &c.out,
        };
        out.as_deref()
            .expect("resolved configs always carry an output path")
    }

    /// The resolved configuration as a JSON object (defaults filled in),
    /// embedded verbatim in every report.
    pub fn resolved_json(&self) -> Value {
        let mut v = match self {
            RunConfig::AaPhase(c) => serde_json::to_value(c),
            RunConfig::Uhlmann(c) => serde_json::to_value(c),
            RunConfig::Chern(c) => serde_json::to_value(c),
            RunConfig::Degree(c) => serde_json::to_value(c),
            RunConfig::Evolve(c) => serde_json::to_value(c),
            RunConfig::ThermalSweep(c) => serde_json::to_value(c),
            RunConfig::BlochCheck(c) => serde_json::to_value(c),
        }
        .expect("resolved configs serialize");
        v["command"] = Value::String(self.command().to_string());
        v
    }
}

/// A loop of pure states, specified by a generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PureLoopSpec {
    /// Equatorial great circle on the Bloch sphere, `samples` intervals.
    GreatCircle { samples: usize },
    /// Octant loop x̂ → ẑ → ŷ → x̂, `samples` intervals per edge.
    Octant { samples: usize },
    /// Latitude circle at the given polar angle, `samples` intervals.
    Circle {
        polar_angle_rad: f64,
        samples: usize,
    },
    /// Ground states of the circle Hamiltonians n̂(θ, φ)·σ.
    GroundCircle {
        polar_angle_rad: f64,
        samples: usize,
    },
}

/// A loop of density matrices: a thermal generator or a literal sample list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DensityLoopSpec {
    /// Thermal states of the circle Hamiltonians n̂(θ, φ)·σ.
    ThermalCircle {
        polar_angle_rad: f64,
        temperature: f64,
        samples: usize,
    },
    /// Explicit samples: matrix objects plus closure flag and parameters.
    Literal {
        samples: Vec<MatrixJson>,
        closed: bool,
        params: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AaPhaseConfig {
    #[serde(rename = "loop")]
    pub loop_spec: PureLoopSpec,
    #[serde(default)]
    pub gauge_shuffle: bool,
    pub out: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UhlmannConfig {
    #[serde(rename = "loop")]
    pub loop_spec: DensityLoopSpec,
    #[serde(default = "default_true")]
    pub rank_gate: bool,
    pub out: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChernConfig {
    pub model: FiberKind,
    #[serde(default)]
    pub band: usize,
    pub grid: Option<usize>,
    pub grids: Option<Vec<usize>>,
    pub out: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegreeConfig {
    pub model: FiberKind,
    pub temperature: f64,
    pub grid: Option<usize>,
    pub grids: Option<Vec<usize>>,
    pub out: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub model: FiberKind,
    pub grid: usize,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub gamma: f64,
    pub dissipator: Option<String>,
    pub band: Option<usize>,
    pub times: Vec<f64>,
    pub out: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermalSweepConfig {
    pub polar_angle_rad: f64,
    pub temperatures: Vec<f64>,
    pub samples: usize,
    pub out: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSpec {
    #[serde(rename = "L")]
    pub cells: usize,
    #[serde(rename = "N")]
    pub orbitals: usize,
    pub intra: MatrixJson,
    pub inter: MatrixJson,
    #[serde(default = "default_period")]
    pub period: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomLatticeSpec {
    #[serde(rename = "L")]
    pub cells: usize,
    #[serde(rename = "N")]
    pub orbitals: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlochCheckConfig {
    pub lattice: Option<LatticeSpec>,
    pub random: Option<RandomLatticeSpec>,
    pub out: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

fn default_true() -> bool {
    true
}

fn default_period() -> f64 {
    1.0
}

fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

/// Reject unknown keys and report missing required keys, naming the key and
/// the object it belongs to. `serde_json` maps iterate in sorted key order,
/// so the first offender is deterministic.
fn check_keys(v: &Value, ctx: &str, required: &[&str], optional: &[&str]) -> Result<()> {
    let obj = v
        .as_object()
        .ok_or_else(|| validation(format!("{ctx} must be a JSON object")))?;
    let mut allowed: Vec<&str> = required.iter().chain(optional).copied().collect();
    allowed.sort_unstable();
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(validation(format!(
                "unknown key '{key}' in {ctx}; allowed keys: {}",
                allowed.join(", ")
            )));
        }
    }
    for key in required {
        if !obj.contains_key(*key) {
            return Err(validation(format!("missing required key '{key}' in {ctx}")));
        }
    }
    Ok(())
}

fn tagged(v: &Value, ctx: &str, kinds: &[&str]) -> Result<String> {
    let ty = v
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| validation(format!("{ctx} needs a string key 'type'")))?;
    if !kinds.contains(&ty) {
        return Err(validation(format!(
            "unknown type '{ty}' in {ctx}; expected one of: {}",
            kinds.join(", ")
        )));
    }
    Ok(ty.to_string())
}

fn check_matrix(v: &Value, ctx: &str) -> Result<()> {
    check_keys(v, ctx, &["dim", "re"], &["im"])
}

fn check_model(v: &Value) -> Result<()> {
    match tagged(v, "model", &["qwz", "two_band_d"])?.as_str() {
        "qwz" => check_keys(v, "model", &["type", "m"], &[]),
        _ => {
            check_keys(v, "model", &["type", "d"], &[])?;
            let d = v
                .get("d")
                .and_then(Value::as_array)
                .filter(|a| a.len() == 3)
                .ok_or_else(|| {
                    validation("model.d must be an array of exactly 3 harmonic lists")
                })?;
            for (i, comp) in d.iter().enumerate() {
                let terms = comp.as_array().ok_or_else(|| {
                    validation(format!("model.d[{i}] must be an array of harmonic terms"))
                })?;
                for (j, term) in terms.iter().enumerate() {
                    check_keys(term, &format!("model.d[{i}][{j}]"), &["a", "n", "fn"], &[])?;
                }
            }
            Ok(())
        }
    }
}

fn check_pure_loop(v: &Value) -> Result<()> {
    match tagged(
        v,
        "loop",
        &["great_circle", "octant", "circle", "ground_circle"],
    )?
    .as_str()
    {
        "great_circle" | "octant" => check_keys(v, "loop", &["type", "samples"], &[]),
        _ => check_keys(v, "loop", &["type", "polar_angle_rad", "samples"], &[]),
    }
}

fn check_density_loop(v: &Value) -> Result<()> {
    match tagged(v, "loop", &["thermal_circle", "literal"])?.as_str() {
        "thermal_circle" => check_keys(
            v,
            "loop",
            &["type", "polar_angle_rad", "temperature", "samples"],
            &[],
        ),
        _ => {
            check_keys(v, "loop", &["type", "samples", "closed", "params"], &[])?;
            let samples = v
                .get("samples")
                .and_then(Value::as_array)
                .ok_or_else(|| validation("loop.samples must be an array of matrix objects"))?;
            for (k, m) in samples.iter().enumerate() {
                check_matrix(m, &format!("loop.samples[{k}]"))?;
            }
            Ok(())
        }
    }
}

fn from_root<T: DeserializeOwned>(mut root: Value) -> Result<T> {
    root.as_object_mut()
        .expect("checked to be an object")
        .remove("command");
    serde_json::from_value(root).map_err(|e| validation(format!("config: {e}")))
}

fn require_out(out: &Option<String>) -> Result<()> {
    match out {
        None => Err(validation(
            "missing output path: set the config key 'out' or pass --out",
        )),
        Some(path) if path.ends_with(".csv") => Err(validation(
            "'out' must not use the .csv extension (reserved for the data file)",
        )),
        Some(_) => Ok(()),
    }
}

fn reject_tol(tol: &Option<f64>, command: &str) -> Result<()> {
    if tol.is_some() {
        return Err(validation(format!(
            "key 'tol' is not used by command {command}"
        )));
    }
    Ok(())
}

fn check_positive_tol(tol: &Option<f64>) -> Result<()> {
    if let Some(t) = tol {
        if !(*t > 0.0) {
            return Err(validation(format!("'tol' must be positive, got {t}")));
        }
    }
    Ok(())
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(validation(format!(
            "'loop.samples' must be at least 2, got {samples}"
        )));
    }
    Ok(())
}

fn check_grid_choice(grid: &Option<usize>, grids: &Option<Vec<usize>>) -> Result<Vec<usize>> {
    let meshes = match (grid, grids) {
        (Some(k), None) => vec![*k],
        (None, Some(ks)) if !ks.is_empty() => ks.clone(),
        (None, Some(_)) => return Err(validation("'grids' must not be empty")),
        _ => {
            return Err(validation(
                "provide exactly one of 'grid' (an integer) or 'grids' (a list)",
            ))
        }
    };
    for k in &meshes {
        if *k < 4 {
            return Err(validation(format!(
                "grid size must be at least 4 nodes per side, got {k}"
            )));
        }
    }
    Ok(meshes)
}

fn apply_common(
    out: &mut Option<String>,
    tol: &mut Option<f64>,
    seed: &mut Option<u64>,
    flags: &Flags,
) {
    if flags.out.is_some() {
        *out = flags.out.clone();
    }
    if flags.tol.is_some() {
        *tol = flags.tol;
    }
    if flags.seed.is_some() {
        *seed = flags.seed;
    }
    if seed.is_none() {
        *seed = Some(0);
    }
}

/// Parse, strictly validate, and resolve a run configuration.
///
/// Every error names the offending key (or value) and maps to exit code 2.
pub fn parse(text: &str, flags: &Flags) -> Result<RunConfig> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| validation(format!("config is not valid JSON: {e}")))?;
    if !root.is_object() {
        return Err(validation("config must be a JSON object"));
    }
    let command = root
        .get("command")
        .and_then(Value::as_str)
        .ok_or_else(|| validation("missing required key 'command' (a string)"))?
        .to_string();
    let common = ["out", "tol", "seed"];
    match command.as_str() {
        "aa-phase" => {
            let optional: Vec<&str> = ["gauge_shuffle"].iter().chain(&common).copied().collect();
            check_keys(&root, "config", &["command", "loop"], &optional)?;
            check_pure_loop(&root["loop"])?;
            let mut c: AaPhaseConfig = from_root(root)?;
            apply_common(&mut c.out, &mut c.tol, &mut c.seed, flags);
            reject_tol(&c.tol, "aa-phase")?;
            require_out(&c.out)?;
            match &c.loop_spec {
                PureLoopSpec::GreatCircle { samples } | PureLoopSpec::Octant { samples } => {
                    check_samples(*samples)?
                }
                PureLoopSpec::Circle { samples, .. }
                | PureLoopSpec::GroundCircle { samples, .. } => check_samples(*samples)?,
            }
            Ok(RunConfig::AaPhase(c))
        }
        "uhlmann" => {
            let optional: Vec<&str> = ["rank_gate"].iter().chain(&common).copied().collect();
            check_keys(&root, "config", &["command", "loop"], &optional)?;
            check_density_loop(&root["loop"])?;
            let mut c: UhlmannConfig = from_root(root)?;
            apply_common(&mut c.out, &mut c.tol, &mut c.seed, flags);
            check_positive_tol(&c.tol)?;
            require_out(&c.out)?;
            match &c.loop_spec {
                DensityLoopSpec::ThermalCircle {
                    temperature,
                    samples,
                    ..
                } => {
                    check_samples(*samples)?;
                    if !(*temperature > 0.0) {
                        return Err(validation(format!(
                            "'loop.temperature' must be positive, got {temperature}"
                        )));
                    }
                }
                DensityLoopSpec::Literal { .. } => {}
            }
            if c.rank_gate {
                c.tol = Some(c.tol.unwrap_or(1e-10));
            } else if c.tol.is_some() {
                return Err(validation(
                    "'tol' sets the rank-gate threshold and needs 'rank_gate' enabled",
                ));
            }
            Ok(RunConfig::Uhlmann(c))
        }
        "chern" => {
            let optional: Vec<&str> = ["band", "grid", "grids"]
                .iter()
                .chain(&common)
                .copied()
                .collect();
            check_keys(&root, "config", &["command", "model"], &optional)?;
            check_model(&root["model"])?;
            let mut c: ChernConfig = from_root(root)?;
            apply_common(&mut c.out, &mut c.tol, &mut c.seed, flags);
            check_positive_tol(&c.tol)?;
            require_out(&c.out)?;
            check_grid_choice(&c.grid, &c.grids)?;
            if c.band > 1 {
                return Err(validation(format!(
                    "'band' must be 0 or 1 for two-band models, got {}",
                    c.band
                )));
            }
            c.tol = Some(c.tol.unwrap_or(1e-6));
            Ok(RunConfig::Chern(c))
        }
        "degree" => {
            let optional: Vec<&str> = ["grid", "grids"].iter().chain(&common).copied().collect();
            check_keys(
                &root,
                "config",
                &["command", "model", "temperature"],
                &optional,
            )?;
            check_model(&root["model"])?;
            let mut c: DegreeConfig = from_root(root)?;
            apply_common(&mut c.out, &mut c.tol, &mut c.seed, flags);
            check_positive_tol(&c.tol)?;
            require_out(&c.out)?;
            check_grid_choice(&c.grid, &c.grids)?;
            if !(c.temperature > 0.0) {
                return Err(validation(format!(
                    "'temperature' must be positive, got {}",
                    c.temperature
                )));
            }
            if let Some(t) = c.tol {
                if t > 1e-3 {
                    return Err(validation(format!(
                        "'tol' can only tighten the mapping-degree residual gate (≤ 1e-3), got {t}"
                    )));
                }
            }
            c.tol = Some(c.tol.unwrap_or(1e-3));
            Ok(RunConfig::Degree(c))
        }
        "evolve" => {
            let optional: Vec<&str> = ["dissipator", "band"]
                .iter()
                .chain(&common)
                .copied()
                .collect();
            check_keys(
                &root,
                "config",
                &["command", "model", "grid", "T", "gamma", "times"],
                &optional,
            )?;
            check_model(&root["model"])?;
            let mut c: EvolveConfig = from_root(root)?;
            apply_common(&mut c.out, &mut c.tol, &mut c.seed, flags);
            reject_tol(&c.tol, "evolve")?;
            require_out(&c.out)?;
            if c.grid < 4 {
                return Err(validation(format!(
                    "'grid' must be at least 4 nodes per side, got {}",
                    c.grid
                )));
            }
            if !(c.temperature > 0.0) {
                return Err(validation(format!(
                    "'T' must be positive, got {}",
                    c.temperature
                )));
            }
            if !(c.gamma >= 0.0) {
                return Err(validation(format!(
                    "'gamma' must be non-negative, got {}",
                    c.gamma
                )));
            }
            match c.dissipator.as_deref() {
                None if c.gamma > 0.0 => {
                    return Err(validation(
                        "'gamma' is positive, so 'dissipator' is required \
                         (depolarizing or band_projector)",
                    ))
                }
                None | Some("depolarizing") | Some("band_projector") => {}
                Some(other) => return Err(validation(format!(
                    "unknown 'dissipator' value '{other}'; expected depolarizing or band_projector"
                ))),
            }
            if let Some(b) = c.band {
                if c.dissipator.as_deref() != Some("band_projector") {
                    return Err(validation(
                        "'band' only applies to the band_projector dissipator",
                    ));
                }
                if b > 1 {
                    return Err(validation(format!(
                        "'band' must be 0 or 1 for two-band models, got {b}"
                    )));
                }
            }
            if c.times.is_empty() {
                return Err(validation("'times' must not be empty"));
            }
            Ok(RunConfig::Evolve(c))
        }
        "thermal-sweep" => {
            let optional: Vec<&str> = common.to_vec();
            check_keys(
                &root,
                "config",
                &["command", "polar_angle_rad", "temperatures", "samples"],
                &optional,
            )?;
            let mut c: ThermalSweepConfig = from_root(root)?;
            apply_common(&mut c.out, &mut c.tol, &mut c.seed, flags);
            reject_tol(&c.tol, "thermal-sweep")?;
            require_out(&c.out)?;
            check_samples(c.samples)?;
            if c.temperatures.is_empty() {
                return Err(validation("'temperatures' must not be empty"));
            }
            for (i, t) in c.temperatures.iter().enumerate() {
                if !(*t > 0.0) {
                    return Err(validation(format!(
                        "'temperatures[{i}]' must be positive, got {t}"
                    )));
                }
            }
            Ok(RunConfig::ThermalSweep(c))
        }
        "bloch-check" => {
            let optional: Vec<&str> = ["lattice", "random"]
                .iter()
                .chain(&common)
                .copied()
                .collect();
            check_keys(&root, "config", &["command"], &optional)?;
            if let Some(lat) = root.get("lattice") {
                check_keys(lat, "lattice", &["L", "N", "intra", "inter"], &["period"])?;
                check_matrix(&lat["intra"], "lattice.intra")?;
                check_matrix(&lat["inter"], "lattice.inter")?;
            }
            if let Some(r) = root.get("random") {
                check_keys(r, "random", &["L", "N"], &[])?;
            }
            let mut c: BlochCheckConfig = from_root(root)?;
            apply_common(&mut c.out, &mut c.tol, &mut c.seed, flags);
            check_positive_tol(&c.tol)?;
            require_out(&c.out)?;
            match (&c.lattice, &c.random) {
                (Some(_), None) | (None, Some(_)) => {}
                _ => {
                    return Err(validation(
                        "provide exactly one of 'lattice' (explicit blocks) or 'random' (a seeded fixture)",
                    ))
                }
            }
            c.tol = Some(c.tol.unwrap_or(1e-9));
            Ok(RunConfig::BlochCheck(c))
        }
        other => Err(validation(format!(
            "unknown command '{other}'; expected one of: {}",
            COMMANDS.join(", ")
        ))),
    }
}
