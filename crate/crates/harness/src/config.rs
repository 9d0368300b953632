//! Run configuration: one JSON document with a `command` discriminator, overridable
//! key by key from the command line, resolved into a fully specified job.

use std::collections::BTreeSet;
use std::path::PathBuf;

use capillary::droplet::{DividingRule, NucleusKind};
use capillary::planar::{Geometry, MIN_POINTS};
use capillary::sharp::FamilyShape;
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{HarnessError, Result};
use crate::list::FloatList;

/// Upper bound on profile samples, to keep a typo from exhausting memory.
pub const MAX_POINTS: usize = 1 << 22;
pub const MAX_THREADS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Coexist,
    Planar,
    Droplet,
    Laplace,
    Sharp,
    Distribution,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Coexist => "coexist",
            CommandKind::Planar => "planar",
            CommandKind::Droplet => "droplet",
            CommandKind::Laplace => "laplace",
            CommandKind::Sharp => "sharp",
            CommandKind::Distribution => "distribution",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            CommandKind::Coexist => &["temperature", "temperatures"],
            CommandKind::Planar => &["temperature", "lambda", "points", "profile_in"],
            CommandKind::Droplet => &[
                "temperature",
                "lambda",
                "kind",
                "rule",
                "supersaturation",
                "rho_inf",
                "r_max",
                "grid_spacing",
            ],
            CommandKind::Laplace => &[
                "temperature",
                "lambda",
                "kind",
                "rule",
                "radii",
                "radii_thickness",
                "radius_tol",
                "tail_thicknesses",
                "grid_spacing",
            ],
            CommandKind::Sharp => &[
                "sigma_source",
                "temperature",
                "lambda",
                "sigma",
                "rho_v",
                "rho_l",
                "geometry",
                "shape",
                "epsilons",
                "center",
                "support",
                "cross_model_tol",
            ],
            CommandKind::Distribution => &[
                "geometry",
                "shape",
                "center",
                "rho_v",
                "rho_l",
                "epsilons",
                "test_function",
                "support",
            ],
        }
    }
}

/// Table encoding for tabular outputs; reports are always JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Where the sharp model's surface tension comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaSource {
    /// Planar diffuse interface at `temperature` and `lambda`.
    #[default]
    Planar,
    /// Explicit `sigma`, `rho_v` and `rho_l`.
    Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunctionKind {
    /// 1 on the whole support.
    #[default]
    Constant,
    /// Smooth bump vanishing at the support edges.
    Bump,
}

/// Parses a flag value with the same spelling as the JSON config.
pub fn parse_enum<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Every key a run may set. Unset keys take per-command defaults; keys that do not
/// apply to the selected command are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,

    /// Reduced temperature T/T_c.
    #[arg(long, short = 'T')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    /// Comma-separated temperatures (coexist).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperatures: Option<FloatList>,
    /// Capillarity coefficient.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Samples in the planar profile.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Analyze an existing planar profile CSV (columns coordinate, density).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_in: Option<PathBuf>,

    /// droplet or bubble.
    #[arg(long, value_parser = parse_enum::<NucleusKind>)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<NucleusKind>,
    /// Dividing-surface rule: max-slope or equimolar.
    #[arg(long, value_parser = parse_enum::<DividingRule>)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<DividingRule>,
    /// Fraction of the way from coexistence to the spinodal, in (0, 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supersaturation: Option<f64>,
    /// Far-field density (instead of --supersaturation).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_inf: Option<f64>,
    /// Outer radius of the droplet domain.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    /// Output grid spacing of droplet profiles.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_spacing: Option<f64>,

    /// Comma-separated target radii.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<FloatList>,
    /// Comma-separated target radii in planar interface thicknesses.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii_thickness: Option<FloatList>,
    /// Relative tolerance on hitting each target radius.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius_tol: Option<f64>,
    /// Far-field extent beyond each target, in planar thicknesses.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_thicknesses: Option<f64>,

    /// planar or value.
    #[arg(long, value_parser = parse_enum::<SigmaSource>)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_source: Option<SigmaSource>,
    /// Surface tension (sigma-source value).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Vapor density of the jump.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_v: Option<f64>,
    /// Liquid density of the jump.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_l: Option<f64>,
    /// planar or spherical.
    #[arg(long, value_parser = parse_enum::<Geometry>)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    /// Regularized family: symmetric-tanh, tanh or exp-skew.
    #[arg(long, value_parser = parse_enum::<FamilyShape>)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<FamilyShape>,
    /// Comma-separated regularization widths.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<FloatList>,
    /// Interface position (planar) or radius (spherical).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    /// constant or bump.
    #[arg(long, value_parser = parse_enum::<TestFunctionKind>)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFunctionKind>,
    /// Integration box as "lo,hi".
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<FloatList>,
    /// Largest accepted relative sharp/diffuse pressure-jump mismatch.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_model_tol: Option<f64>,
}

/// Parses a config document. A run manifest is accepted too, in which case its resolved
/// configuration is used.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| HarnessError::config(format!("malformed JSON: {e}")))?;
    let value = match value {
        Value::Object(mut map) if map.contains_key("toolkit_version") => match map.remove("config")
        {
            Some(cfg @ Value::Object(_)) => cfg,
            _ => return Err(HarnessError::config("manifest has no config object")),
        },
        other => other,
    };
    if !value.is_object() {
        return Err(HarnessError::config("config must be a JSON object"));
    }
    serde_json::from_value(value).map_err(|e| HarnessError::config(e.to_string()))
}

fn to_map(cfg: &RunConfig) -> Map<String, Value> {
    match serde_json::to_value(cfg) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    }
}

impl RunConfig {
    /// Keys set in `over` replace those in `self`.
    pub fn overridden_by(&self, over: &RunConfig) -> RunConfig {
        let mut base = to_map(self);
        base.extend(to_map(over));
        // both sides came from valid configs, so the union is valid too
        serde_json::from_value(Value::Object(base)).unwrap_or_else(|_| over.clone())
    }

    /// Names of the keys that are set.
    pub fn set_keys(&self) -> BTreeSet<String> {
        to_map(self).into_iter().map(|(k, _)| k).collect()
    }
}

/// A config with every default filled in, ready to run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    #[serde(flatten)]
    pub job: Job,
    pub format: Format,
    pub threads: usize,
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Job {
    Coexist(CoexistJob),
    Planar(PlanarJob),
    Droplet(DropletJob),
    Laplace(LaplaceJob),
    Sharp(SharpJob),
    Distribution(DistributionJob),
}

impl Job {
    pub fn command(&self) -> CommandKind {
        match self {
            Job::Coexist(_) => CommandKind::Coexist,
            Job::Planar(_) => CommandKind::Planar,
            Job::Droplet(_) => CommandKind::Droplet,
            Job::Laplace(_) => CommandKind::Laplace,
            Job::Sharp(_) => CommandKind::Sharp,
            Job::Distribution(_) => CommandKind::Distribution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoexistJob {
    pub temperatures: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarJob {
    pub temperature: f64,
    pub lambda: f64,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_in: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropletJob {
    pub temperature: f64,
    pub lambda: f64,
    pub kind: NucleusKind,
    pub rule: DividingRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supersaturation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_inf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceJob {
    pub temperature: f64,
    pub lambda: f64,
    pub kind: NucleusKind,
    pub rule: DividingRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii_thickness: Option<Vec<f64>>,
    pub radius_tol: f64,
    pub tail_thicknesses: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpJob {
    pub sigma_source: SigmaSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_l: Option<f64>,
    pub geometry: Geometry,
    pub shape: FamilyShape,
    pub epsilons: Vec<f64>,
    pub center: f64,
    pub support: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_model_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionJob {
    pub geometry: Geometry,
    pub shape: FamilyShape,
    pub center: f64,
    pub rho_v: f64,
    pub rho_l: f64,
    pub epsilons: Vec<f64>,
    pub test_function: TestFunctionKind,
    pub support: Vec<f64>,
}

pub const DEFAULT_TEMPERATURES: [f64; 5] = [0.6, 0.7, 0.8, 0.9, 0.95];
pub const DEFAULT_TEMPERATURE: f64 = 0.9;
pub const DEFAULT_SUPERSATURATION: f64 = 0.05;
pub const DEFAULT_RADII_THICKNESS: [f64; 4] = [10.0, 20.0, 40.0, 80.0];
pub const DEFAULT_EPSILONS: [f64; 3] = [0.2, 0.1, 0.05];
pub const DEFAULT_CROSS_MODEL_TOL: f64 = 0.02;
pub const DEFAULT_SPHERE_RADIUS: f64 = 5.0;
pub const DEFAULT_JUMP: (f64, f64) = (0.1, 1.2);

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::config(msg)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(format!("{name} must be positive and finite, got {v}")))
    }
}

fn subcritical(v: f64) -> Result<f64> {
    positive("temperature", v)?;
    if v < 1.0 {
        Ok(v)
    } else {
        Err(bad(format!(
            "temperature must be subcritical (T < 1) for this command, got {v}"
        )))
    }
}

fn positive_list(name: &str, v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(bad(format!("{name} must not be empty")));
    }
    for x in v {
        positive(name, *x)?;
    }
    Ok(v.to_vec())
}

fn increasing_radii(name: &str, v: &[f64]) -> Result<Vec<f64>> {
    let v = positive_list(name, v)?;
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(bad(format!("{name} must be strictly increasing")));
    }
    Ok(v)
}

fn jump(rho_v: f64, rho_l: f64) -> Result<(f64, f64)> {
    if !(rho_v >= 0.0 && rho_v.is_finite() && rho_l.is_finite() && rho_l > rho_v) {
        return Err(bad(format!(
            "densities need 0 <= rho_v < rho_l, got rho_v = {rho_v}, rho_l = {rho_l}"
        )));
    }
    Ok((rho_v, rho_l))
}

fn exclusive(cfg: &RunConfig, a: &str, b: &str) -> Result<()> {
    let keys = cfg.set_keys();
    if keys.contains(a) && keys.contains(b) {
        return Err(bad(format!("{a} and {b} are mutually exclusive")));
    }
    Ok(())
}

/// Integration box for a family; the default leaves sixty widths of the widest
/// regularization on the open side(s) of the interface.
fn support(cfg: &RunConfig, geometry: Geometry, center: f64, eps_max: f64) -> Result<Vec<f64>> {
    if let Some(s) = &cfg.support {
        let s = &s.0;
        if s.len() != 2 || !(s[1] > s[0]) {
            return Err(bad("support must be two increasing values \"lo,hi\""));
        }
        if geometry == Geometry::Spherical && s[0] < 0.0 {
            return Err(bad("spherical support must start at a non-negative radius"));
        }
        return Ok(s.clone());
    }
    let half = (60.0 * eps_max).max(10.0);
    Ok(match geometry {
        Geometry::Planar => vec![center - half, center + half],
        Geometry::Spherical => vec![0.0, center + half],
    })
}

fn center(cfg: &RunConfig, geometry: Geometry) -> Result<f64> {
    match (geometry, cfg.center) {
        (Geometry::Planar, None) => Ok(0.0),
        (Geometry::Spherical, None) => Ok(DEFAULT_SPHERE_RADIUS),
        (Geometry::Planar, Some(c)) if c.is_finite() => Ok(c),
        (Geometry::Spherical, Some(c)) => positive("center (sphere radius)", c),
        (_, Some(c)) => Err(bad(format!("center must be finite, got {c}"))),
    }
}

/// Fills defaults, checks every invariant, and rejects keys that do not apply to the
/// command. `default_out` applies when neither flags nor config name a directory.
pub fn resolve(cfg: &RunConfig, default_out: PathBuf) -> Result<Resolved> {
    let command = cfg
        .command
        .ok_or_else(|| bad("no command given (use a subcommand or the \"command\" key)"))?;
    let allowed: BTreeSet<&str> = command
        .keys()
        .iter()
        .copied()
        .chain(["command", "out", "threads", "format"])
        .collect();
    let stray: Vec<String> = cfg
        .set_keys()
        .into_iter()
        .filter(|k| !allowed.contains(k.as_str()))
        .collect();
    if !stray.is_empty() {
        return Err(bad(format!(
            "keys not used by {}: {}",
            command.name(),
            stray.join(", ")
        )));
    }

    let threads = match cfg.threads {
        Some(n) if (1..=MAX_THREADS).contains(&n) => n,
        Some(n) => {
            return Err(bad(format!(
                "threads must be in 1..={MAX_THREADS}, got {n}"
            )))
        }
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let temperature = || subcritical(cfg.temperature.unwrap_or(DEFAULT_TEMPERATURE));
    let lambda = || positive("lambda", cfg.lambda.unwrap_or(1.0));
    let grid_spacing = || {
        cfg.grid_spacing
            .map(|h| positive("grid_spacing", h))
            .transpose()
    };

    let job = match command {
        CommandKind::Coexist => {
            exclusive(cfg, "temperature", "temperatures")?;
            let temperatures = match (&cfg.temperature, &cfg.temperatures) {
                (Some(t), _) => vec![*t],
                (None, Some(list)) => list.0.clone(),
                (None, None) => DEFAULT_TEMPERATURES.to_vec(),
            };
            // supercritical entries are reported as failed rows, not rejected here
            Job::Coexist(CoexistJob {
                temperatures: positive_list("temperatures", &temperatures)?,
            })
        }
        CommandKind::Planar => {
            let points = cfg.points.unwrap_or(capillary::planar::DEFAULT_POINTS);
            if !(MIN_POINTS..=MAX_POINTS).contains(&points) {
                return Err(bad(format!(
                    "points must be in {MIN_POINTS}..={MAX_POINTS}, got {points}"
                )));
            }
            Job::Planar(PlanarJob {
                temperature: temperature()?,
                lambda: lambda()?,
                points,
                profile_in: cfg.profile_in.clone(),
            })
        }
        CommandKind::Droplet => {
            exclusive(cfg, "supersaturation", "rho_inf")?;
            let (supersaturation, rho_inf) = match (cfg.supersaturation, cfg.rho_inf) {
                (_, Some(r)) if r > 0.0 && r < 3.0 => (None, Some(r)),
                (_, Some(r)) => return Err(bad(format!("rho_inf must lie in (0, 3), got {r}"))),
                (q, None) => {
                    let q = q.unwrap_or(DEFAULT_SUPERSATURATION);
                    if !(q > 0.0 && q < 1.0) {
                        return Err(bad(format!("supersaturation must lie in (0, 1), got {q}")));
                    }
                    (Some(q), None)
                }
            };
            Job::Droplet(DropletJob {
                temperature: temperature()?,
                lambda: lambda()?,
                kind: cfg.kind.unwrap_or(NucleusKind::Droplet),
                rule: cfg.rule.unwrap_or_default(),
                supersaturation,
                rho_inf,
                r_max: cfg.r_max.map(|r| positive("r_max", r)).transpose()?,
                grid_spacing: grid_spacing()?,
            })
        }
        CommandKind::Laplace => {
            exclusive(cfg, "radii", "radii_thickness")?;
            let (radii, radii_thickness) = match (&cfg.radii, &cfg.radii_thickness) {
                (Some(r), _) => (Some(increasing_radii("radii", &r.0)?), None),
                (None, Some(m)) => (None, Some(increasing_radii("radii_thickness", &m.0)?)),
                (None, None) => (None, Some(DEFAULT_RADII_THICKNESS.to_vec())),
            };
            let radius_tol = cfg.radius_tol.unwrap_or(0.01);
            if !(radius_tol > 0.0 && radius_tol < 0.5) {
                return Err(bad(format!(
                    "radius_tol must lie in (0, 0.5), got {radius_tol}"
                )));
            }
            Job::Laplace(LaplaceJob {
                temperature: temperature()?,
                lambda: lambda()?,
                kind: cfg.kind.unwrap_or(NucleusKind::Droplet),
                rule: cfg.rule.unwrap_or_default(),
                radii,
                radii_thickness,
                radius_tol,
                tail_thicknesses: positive(
                    "tail_thicknesses",
                    cfg.tail_thicknesses
                        .unwrap_or(capillary::droplet::DEFAULT_TAIL_THICKNESSES),
                )?,
                grid_spacing: grid_spacing()?,
            })
        }
        CommandKind::Sharp => {
            let source = cfg.sigma_source.unwrap_or_default();
            let (temperature, lambda, sigma, rho_v, rho_l, tol) = match source {
                SigmaSource::Planar => {
                    for key in ["sigma", "rho_v", "rho_l"] {
                        if cfg.set_keys().contains(key) {
                            return Err(bad(format!("{key} is only used with sigma_source value")));
                        }
                    }
                    let tol = positive(
                        "cross_model_tol",
                        cfg.cross_model_tol.unwrap_or(DEFAULT_CROSS_MODEL_TOL),
                    )?;
                    (
                        Some(temperature()?),
                        Some(lambda()?),
                        None,
                        None,
                        None,
                        Some(tol),
                    )
                }
                SigmaSource::Value => {
                    for key in ["temperature", "lambda", "cross_model_tol"] {
                        if cfg.set_keys().contains(key) {
                            return Err(bad(format!(
                                "{key} is only used with sigma_source planar"
                            )));
                        }
                    }
                    let (Some(s), Some(v), Some(l)) = (cfg.sigma, cfg.rho_v, cfg.rho_l) else {
                        return Err(bad("sigma_source value needs sigma, rho_v and rho_l"));
                    };
                    let (v, l) = jump(v, l)?;
                    (
                        None,
                        None,
                        Some(positive("sigma", s)?),
                        Some(v),
                        Some(l),
                        None,
                    )
                }
            };
            let geometry = cfg.geometry.unwrap_or(Geometry::Planar);
            let epsilons = positive_list(
                "epsilons",
                &cfg.epsilons
                    .clone()
                    .map_or(DEFAULT_EPSILONS.to_vec(), |e| e.0),
            )?;
            let eps_max = epsilons.iter().cloned().fold(0.0, f64::max);
            let c = center(cfg, geometry)?;
            Job::Sharp(SharpJob {
                sigma_source: source,
                temperature,
                lambda,
                sigma,
                rho_v,
                rho_l,
                geometry,
                shape: cfg.shape.unwrap_or_default(),
                support: support(cfg, geometry, c, eps_max)?,
                epsilons,
                center: c,
                cross_model_tol: tol,
            })
        }
        CommandKind::Distribution => {
            let geometry = cfg.geometry.unwrap_or(Geometry::Planar);
            let (rho_v, rho_l) = jump(
                cfg.rho_v.unwrap_or(DEFAULT_JUMP.0),
                cfg.rho_l.unwrap_or(DEFAULT_JUMP.1),
            )?;
            let epsilons = positive_list(
                "epsilons",
                &cfg.epsilons
                    .clone()
                    .map_or(DEFAULT_EPSILONS.to_vec(), |e| e.0),
            )?;
            let eps_max = epsilons.iter().cloned().fold(0.0, f64::max);
            let c = center(cfg, geometry)?;
            Job::Distribution(DistributionJob {
                geometry,
                shape: cfg.shape.unwrap_or_default(),
                center: c,
                rho_v,
                rho_l,
                support: support(cfg, geometry, c, eps_max)?,
                epsilons,
                test_function: cfg.test_function.unwrap_or_default(),
            })
        }
    };
    Ok(Resolved {
        job,
        format: cfg.format.unwrap_or_default(),
        threads,
        out: cfg.out.clone().unwrap_or(default_out),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> RunConfig {
        parse_config(json).unwrap()
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config(r#"{"command":"planar","temprature":0.9}"#).is_err());
        assert!(parse_config("[1,2]").is_err());
        assert!(parse_config("{").is_err());
    }

    #[test]
    fn keys_of_other_commands_are_rejected() {
        let c = cfg(r#"{"command":"planar","radii":[1,2]}"#);
        let err = resolve(&c, "o".into()).unwrap_err().to_string();
        assert!(err.contains("radii"), "{err}");
    }

    #[test]
    fn overrides_replace_only_set_keys() {
        let base = cfg(r#"{"command":"planar","temperature":0.8,"lambda":2.0}"#);
        let over = RunConfig {
            lambda: Some(4.0),
            ..Default::default()
        };
        let m = base.overridden_by(&over);
        assert_eq!(m.temperature, Some(0.8));
        assert_eq!(m.lambda, Some(4.0));
        assert_eq!(m.command, Some(CommandKind::Planar));
    }

    #[test]
    fn defaults_and_validation() {
        let r = resolve(&cfg(r#"{"command":"laplace"}"#), "o".into()).unwrap();
        let Job::Laplace(j) = r.job else { panic!() };
        assert_eq!(j.radii_thickness.unwrap(), DEFAULT_RADII_THICKNESS.to_vec());
        for bad_cfg in [
            r#"{"command":"laplace","radii":[2,1,3,4]}"#,
            r#"{"command":"laplace","radii":[-1,1]}"#,
            r#"{"command":"planar","temperature":1.2}"#,
            r#"{"command":"planar","points":4}"#,
            r#"{"command":"planar","lambda":0}"#,
            r#"{"command":"distribution","rho_v":1.0,"rho_l":0.5}"#,
            r#"{"command":"distribution","epsilons":[0.1,-0.1]}"#,
            r#"{"command":"droplet","supersaturation":0.1,"rho_inf":0.1}"#,
            r#"{"command":"sharp","sigma_source":"value","sigma":1.0}"#,
            r#"{"command":"sharp","sigma":1.0}"#,
            r#"{"command":"coexist","threads":0}"#,
            r#"{"command":"distribution","support":[1,0]}"#,
        ] {
            assert!(resolve(&cfg(bad_cfg), "o".into()).is_err(), "{bad_cfg}");
        }
    }

    #[test]
    fn supercritical_coexist_is_not_a_config_error() {
        let r = resolve(
            &cfg(r#"{"command":"coexist","temperature":1.2}"#),
            "o".into(),
        )
        .unwrap();
        assert_eq!(
            r.job,
            Job::Coexist(CoexistJob {
                temperatures: vec![1.2]
            })
        );
    }

    #[test]
    fn resolved_config_reads_back() {
        let r = resolve(
            &cfg(r#"{"command":"sharp","geometry":"spherical"}"#),
            "o".into(),
        )
        .unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let again = resolve(&parse_config(&text).unwrap(), "o".into()).unwrap();
        assert_eq!(r, again);
    }
}
