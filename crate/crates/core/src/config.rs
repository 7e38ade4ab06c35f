//! Experiment configuration: TOML file plus command-line overrides.
//!
//! The schema with every key and default lives in `docs/config-schema.md`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{GroupTag, WalkConfig};
use crate::kinematics::{Preset, TranslationDomain};
use crate::polytope::Polytope;
use crate::suites::{Context, Tolerances};
use crate::valuations::{Ambient, ValuationId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckIdentities,
    SampleDiagnostics,
    Evaluate,
    Pkf,
    RankCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckIdentities => "check-identities",
            Command::SampleDiagnostics => "sample-diagnostics",
            Command::Evaluate => "evaluate",
            Command::Pkf => "pkf",
            Command::RankCheck => "rank-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// File layout of a config, every key optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub command: Option<Command>,
    pub context: Option<String>,
    pub group: Option<String>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub walk: WalkSection,
    #[serde(default)]
    pub pkf: PkfSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub bodies: BTreeMap<String, BodySpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub identity: Option<f64>,
    pub form: Option<f64>,
    pub metric: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSection {
    pub walk_steps: Option<usize>,
    pub stride: Option<usize>,
    pub step_scale: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PkfSection {
    pub preset: Option<String>,
    pub k: Option<String>,
    pub l: Option<String>,
    pub n_group: Option<usize>,
    pub n_translation: Option<usize>,
    pub margin: Option<f64>,
    pub domain: Option<TranslationDomain>,
    pub chunk: Option<usize>,
    pub angle_samples: Option<usize>,
    pub sigmas: Option<f64>,
    pub exceptional_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    pub ambient: Option<String>,
    pub valuations: Option<Vec<String>>,
    pub bodies: Option<Vec<String>>,
    pub angle_samples: Option<usize>,
    pub disk_bundle: Option<bool>,
    pub disk_samples: Option<usize>,
}

/// A named body. `family` is `box`, `simplex` or `json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub family: String,
    /// Ambient dimension (`box` only; other families infer it).
    pub n: Option<usize>,
    /// Coordinate axes spanned by a box.
    pub axes: Option<Vec<usize>>,
    /// Orthonormal edge directions of a box, one row per direction.
    pub frame: Option<Vec<Vec<f64>>>,
    /// Edge lengths, default 1.
    pub sides: Option<Vec<f64>>,
    /// Box center, default the origin.
    pub center: Option<Vec<f64>>,
    pub vertices: Option<Vec<Vec<f64>>>,
    /// Path of a polytope JSON file, relative to the config file.
    pub path: Option<PathBuf>,
}

impl BodySpec {
    pub fn build(&self, base: &Path) -> Result<Polytope> {
        let err = |m: &str| Error::Config(format!("body family '{}': {m}", self.family));
        match self.family.to_ascii_lowercase().as_str() {
            "box" => {
                let n = self.n.ok_or_else(|| err("missing n"))?;
                if n == 0 || n > crate::intersect::MAXN {
                    return Err(err("n out of range"));
                }
                let frame = match (&self.axes, &self.frame) {
                    (Some(axes), None) => {
                        let mut f = DMatrix::zeros(n, axes.len());
                        for (j, &a) in axes.iter().enumerate() {
                            if a >= n {
                                return Err(err("axis out of range"));
                            }
                            f[(a, j)] = 1.0;
                        }
                        f
                    }
                    (None, Some(rows)) => {
                        if rows.iter().any(|r| r.len() != n) {
                            return Err(err("frame rows must have length n"));
                        }
                        DMatrix::from_fn(n, rows.len(), |i, j| rows[j][i])
                    }
                    _ => return Err(err("exactly one of axes, frame")),
                };
                let k = frame.ncols();
                let sides = self.sides.clone().unwrap_or_else(|| vec![1.0; k]);
                if sides.len() != k || sides.iter().any(|s| !s.is_finite() || *s < 0.0) {
                    return Err(err("sides must be k non-negative numbers"));
                }
                let center = match &self.center {
                    Some(c) if c.len() == n => DVector::from_column_slice(c),
                    Some(_) => return Err(err("center must have length n")),
                    None => DVector::zeros(n),
                };
                Polytope::cuboid(center, frame, sides.iter().map(|s| s / 2.0).collect())
            }
            "simplex" => {
                let v = self.vertices.as_ref().ok_or_else(|| err("missing vertices"))?;
                Polytope::simplex(v.iter().map(|x| DVector::from_column_slice(x)).collect())
            }
            "json" => {
                let p = self.path.as_ref().ok_or_else(|| err("missing path"))?;
                let text = std::fs::read_to_string(base.join(p))
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                Polytope::parse_json(&text)
            }
            other => Err(Error::Config(format!("unknown body family '{other}'"))),
        }
        .map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Fully resolved, validated run description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub context: Context,
    pub group: Option<GroupTag>,
    pub seed: u64,
    pub samples: usize,
    pub workers: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
    #[serde(serialize_with = "ser_tolerances")]
    pub tolerances: Tolerances,
    pub walk: WalkConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pkf: Option<PkfPlan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluate: Option<EvaluatePlan>,
}

fn ser_tolerances<S: serde::Serializer>(t: &Tolerances, s: S) -> std::result::Result<S::Ok, S::Error> {
    ToleranceSection {
        identity: Some(t.identity),
        form: Some(t.form),
        metric: Some(t.metric),
    }
    .serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PkfPlan {
    pub group: GroupTag,
    pub k_name: String,
    pub l_name: String,
    #[serde(skip)]
    pub k: Polytope,
    #[serde(skip)]
    pub l: Polytope,
    pub n_group: usize,
    pub n_translation: usize,
    pub margin: f64,
    pub domain: TranslationDomain,
    pub chunk: usize,
    pub angle_samples: usize,
    pub sigmas: f64,
    pub exceptional_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluatePlan {
    pub ambient: String,
    pub valuations: Vec<String>,
    #[serde(skip)]
    pub ids: Vec<ValuationId>,
    pub body_names: Vec<String>,
    #[serde(skip)]
    pub bodies: Vec<Polytope>,
    pub angle_samples: usize,
    pub disk_bundle: bool,
    pub disk_samples: usize,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_N: usize = 2000;
pub const DEFAULT_MARGIN: f64 = 0.0;
pub const DEFAULT_CHUNK: usize = 256;
pub const DEFAULT_ANGLE_SAMPLES: usize = 1_000_000;
pub const DEFAULT_DISK_SAMPLES: usize = 100_000;
pub const DEFAULT_SIGMAS: f64 = 3.0;

fn default_group(context: Context) -> GroupTag {
    match context {
        Context::G2 => GroupTag::G2,
        Context::Spin7 => GroupTag::Spin7,
        Context::Su => GroupTag::SU4,
        Context::So => GroupTag::SO7,
    }
}

fn context_of(group: GroupTag) -> Context {
    match group {
        GroupTag::G2 => Context::G2,
        GroupTag::Spin7 => Context::Spin7,
        GroupTag::SU3 | GroupTag::SU4 => Context::Su,
        GroupTag::SO7 | GroupTag::SO8 => Context::So,
    }
}

fn positive(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        Err(Error::Config(format!("{name} must be positive")))
    } else {
        Ok(v)
    }
}

fn finite_positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be a positive number")))
    }
}

impl ExperimentConfig {
    /// Resolve a file (already merged with overrides) into a runnable plan.
    /// `base` is the directory body paths are relative to.
    pub fn resolve(file: &ConfigFile, base: &Path) -> Result<Self> {
        let command = file
            .command
            .ok_or_else(|| Error::Config("no command given (flag or config key)".into()))?;
        let group: Option<GroupTag> = file.group.as_deref().map(str::parse).transpose()?;
        let context = match (&file.context, group) {
            (Some(c), _) => c.parse()?,
            (None, Some(g)) => context_of(g),
            (None, None) => Context::G2,
        };
        let d = Tolerances::default();
        let tolerances = Tolerances {
            identity: finite_positive("tolerances.identity", file.tolerances.identity.unwrap_or(d.identity))?,
            form: finite_positive("tolerances.form", file.tolerances.form.unwrap_or(d.form))?,
            metric: finite_positive("tolerances.metric", file.tolerances.metric.unwrap_or(d.metric))?,
        };
        let dw = WalkConfig::default();
        let walk = WalkConfig {
            walk_steps: file.walk.walk_steps.unwrap_or(dw.walk_steps),
            stride: file.walk.stride.unwrap_or(dw.stride),
            step_scale: file.walk.step_scale.unwrap_or(dw.step_scale),
        };
        walk.validate().map_err(|e| Error::Config(e.to_string()))?;
        let samples = positive("samples", file.samples.unwrap_or(DEFAULT_SAMPLES))?;
        let workers = positive("workers", file.workers.unwrap_or(1))?;
        let named = |name: &str| -> Result<Polytope> {
            file.bodies
                .get(name)
                .ok_or_else(|| Error::Config(format!("unknown body '{name}'")))?
                .build(base)
        };

        let pkf = if command == Command::Pkf {
            let p = &file.pkf;
            let group = group.unwrap_or_else(|| default_group(context));
            if matches!(group, GroupTag::SU3 | GroupTag::SU4) {
                return Err(Error::Config(format!("no kinematic formula for {group}")));
            }
            let (k_name, l_name, k, l) = match (&p.preset, &p.k, &p.l) {
                (Some(s), None, None) => {
                    let preset = Preset::parse(s)?;
                    let (k, l) = preset.bodies(group)?;
                    (format!("{s}:K"), format!("{s}:L"), k, l)
                }
                (None, Some(k), Some(l)) => (k.clone(), l.clone(), named(k)?, named(l)?),
                _ => return Err(Error::Config("pkf needs either preset or both k and l".into())),
            };
            for body in [&k, &l] {
                if body.ambient_dim() != group.dim() {
                    return Err(Error::Config(format!(
                        "body lives in R^{}, {group} acts on R^{}",
                        body.ambient_dim(),
                        group.dim()
                    )));
                }
            }
            let margin = p.margin.unwrap_or(DEFAULT_MARGIN);
            if !margin.is_finite() || margin < 0.0 {
                return Err(Error::Config("pkf.margin must be non-negative".into()));
            }
            Some(PkfPlan {
                group,
                k_name,
                l_name,
                k,
                l,
                n_group: positive("pkf.n_group", p.n_group.unwrap_or(DEFAULT_N))?,
                n_translation: positive("pkf.n_translation", p.n_translation.unwrap_or(DEFAULT_N))?,
                margin,
                domain: p.domain.unwrap_or(TranslationDomain::SupportBox),
                chunk: positive("pkf.chunk", p.chunk.unwrap_or(DEFAULT_CHUNK))?,
                angle_samples: positive("pkf.angle_samples", p.angle_samples.unwrap_or(DEFAULT_ANGLE_SAMPLES))?,
                sigmas: finite_positive("pkf.sigmas", p.sigmas.unwrap_or(DEFAULT_SIGMAS))?,
                exceptional_tolerance: p
                    .exceptional_tolerance
                    .map(|t| finite_positive("pkf.exceptional_tolerance", t))
                    .transpose()?,
            })
        } else {
            None
        };

        let evaluate = if command == Command::Evaluate {
            let e = &file.evaluate;
            let body_names = e.bodies.clone().unwrap_or_else(|| file.bodies.keys().cloned().collect());
            if body_names.is_empty() {
                return Err(Error::Config("evaluate needs at least one body".into()));
            }
            let bodies = body_names.iter().map(|n| named(n)).collect::<Result<Vec<_>>>()?;
            let ambient: Ambient = match &e.ambient {
                Some(a) => a.parse()?,
                None => match context {
                    Context::G2 => Ambient::G2,
                    Context::Spin7 => Ambient::Spin7,
                    Context::Su => Ambient::Su(bodies[0].ambient_dim() / 2),
                    Context::So => Ambient::Euclidean(bodies[0].ambient_dim()),
                },
            };
            for b in &bodies {
                if b.ambient_dim() != ambient.dim() {
                    return Err(Error::Config(format!(
                        "body lives in R^{}, ambient {ambient} is R^{}",
                        b.ambient_dim(),
                        ambient.dim()
                    )));
                }
            }
            let valuations = e.valuations.clone().unwrap_or_else(|| default_valuations(ambient));
            let ids = valuations
                .iter()
                .map(|v| ValuationId::parse(v, ambient).map_err(|e| Error::Config(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let disk_bundle = e.disk_bundle.unwrap_or(false);
            if disk_bundle && ambient != Ambient::G2 {
                return Err(Error::Config("disk_bundle needs the G2 ambient".into()));
            }
            Some(EvaluatePlan {
                ambient: ambient.to_string(),
                valuations,
                ids,
                body_names,
                bodies,
                angle_samples: positive("evaluate.angle_samples", e.angle_samples.unwrap_or(DEFAULT_ANGLE_SAMPLES))?,
                disk_bundle,
                disk_samples: positive("evaluate.disk_samples", e.disk_samples.unwrap_or(DEFAULT_DISK_SAMPLES))?,
            })
        } else {
            None
        };

        if command == Command::RankCheck && !matches!(context, Context::G2 | Context::Spin7) {
            return Err(Error::Config("rank-check runs in the G2 or SPIN7 context".into()));
        }

        Ok(Self {
            command,
            context,
            group,
            seed: file.seed.unwrap_or(DEFAULT_SEED),
            samples,
            workers,
            output: file.output.clone(),
            format: file.format.unwrap_or_default(),
            tolerances,
            walk,
            pkf,
            evaluate,
        })
    }

    /// Group for sampler diagnostics.
    pub fn sampler_group(&self) -> GroupTag {
        self.group.unwrap_or_else(|| default_group(self.context))
    }
}

fn default_valuations(ambient: Ambient) -> Vec<String> {
    let mut v: Vec<String> = (0..=ambient.dim()).map(|k| format!("MU({k})")).collect();
    match ambient {
        Ambient::G2 => v.extend(["NU3", "NU4"].map(String::from)),
        Ambient::Spin7 => v.push("ETA".into()),
        _ => {}
    }
    v
}
