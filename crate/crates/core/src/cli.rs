//! Command execution and report emission.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{Command, ConfigFile, ExperimentConfig, Format};
use crate::error::{Error, Result};
use crate::kinematics::{run_experiment, KinematicExperiment, KinematicReport, TranslationDomain};
use crate::polytope::OuterAngleOptions;
use crate::suites::{axiom_suite, identity_suite, rank_suite, sampler_diagnostics, Check, Context, SamplerDiagnostics};
use crate::valuations::{evaluate_with, nu3_disk_bundle, Ambient};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "holval", version, about = "Invariant valuations and kinematic formulas for G2 and Spin(7)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<CliCommand>,
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Algebraic identity suite for one context.
    CheckIdentities(ContextArgs),
    /// Certification, sphere moments and walk mixing of a group sampler.
    SampleDiagnostics(GroupArgs),
    /// Evaluate valuations on bodies from the config, or on a polytope file.
    Evaluate(EvaluateArgs),
    /// Principal kinematic formula experiment.
    Pkf(PkfArgs),
    /// Klain-sample rank of the invariant valuation basis.
    RankCheck(ContextArgs),
}

#[derive(Debug, Args)]
pub struct ContextArgs {
    /// G2, SPIN7, SU or SO.
    #[arg(long)]
    pub context: Option<String>,
}

#[derive(Debug, Args)]
pub struct GroupArgs {
    /// SO7, SO8, SU3, SU4, G2 or SPIN7.
    #[arg(long)]
    pub group: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub context: Option<String>,
    /// Valuation name, repeatable (e.g. NU3, MU(3), TASAKI(4,1)).
    #[arg(long)]
    pub valuation: Vec<String>,
    /// Polytope JSON file, evaluated as body `polytope`.
    #[arg(long)]
    pub polytope: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PkfArgs {
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub n_group: Option<usize>,
    #[arg(long)]
    pub n_translation: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long, value_enum)]
    pub domain: Option<DomainArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DomainArg {
    Global,
    SupportBox,
}

impl Cli {
    /// Load the config file (if any) and apply command-line overrides.
    pub fn merged(&self) -> Result<(ConfigFile, PathBuf)> {
        let (mut file, base) = match &self.config {
            Some(p) => (
                ConfigFile::load(p)?,
                p.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
            ),
            None => (ConfigFile::default(), PathBuf::from(".")),
        };
        if let Some(s) = self.seed {
            file.seed = Some(s);
        }
        if let Some(s) = self.samples {
            file.samples = Some(s);
        }
        if let Some(w) = self.workers {
            file.workers = Some(w);
        }
        if let Some(o) = &self.output {
            file.output = Some(o.clone());
        }
        if let Some(f) = self.format {
            file.format = Some(match f {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
            });
        }
        match &self.command {
            None => {}
            Some(CliCommand::CheckIdentities(a)) => {
                file.command = Some(Command::CheckIdentities);
                override_opt(&mut file.context, &a.context);
            }
            Some(CliCommand::RankCheck(a)) => {
                file.command = Some(Command::RankCheck);
                override_opt(&mut file.context, &a.context);
            }
            Some(CliCommand::SampleDiagnostics(a)) => {
                file.command = Some(Command::SampleDiagnostics);
                override_opt(&mut file.group, &a.group);
            }
            Some(CliCommand::Evaluate(a)) => {
                file.command = Some(Command::Evaluate);
                override_opt(&mut file.context, &a.context);
                if !a.valuation.is_empty() {
                    file.evaluate.valuations = Some(a.valuation.clone());
                }
                if let Some(p) = &a.polytope {
                    let path = std::fs::canonicalize(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                    file.bodies.insert(
                        "polytope".into(),
                        crate::config::BodySpec {
                            family: "json".into(),
                            path: Some(path),
                            ..Default::default()
                        },
                    );
                    file.evaluate.bodies = Some(vec!["polytope".into()]);
                }
            }
            Some(CliCommand::Pkf(a)) => {
                file.command = Some(Command::Pkf);
                override_opt(&mut file.group, &a.group);
                if a.preset.is_some() {
                    file.pkf.preset = a.preset.clone();
                    file.pkf.k = None;
                    file.pkf.l = None;
                }
                file.pkf.n_group = a.n_group.or(file.pkf.n_group);
                file.pkf.n_translation = a.n_translation.or(file.pkf.n_translation);
                file.pkf.margin = a.margin.or(file.pkf.margin);
                if let Some(d) = a.domain {
                    file.pkf.domain = Some(match d {
                        DomainArg::Global => TranslationDomain::Global,
                        DomainArg::SupportBox => TranslationDomain::SupportBox,
                    });
                }
            }
        }
        Ok((file, base))
    }
}

fn override_opt(slot: &mut Option<String>, value: &Option<String>) {
    if value.is_some() {
        *slot = value.clone();
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub timestamp: u64,
}

impl Header {
    pub fn now() -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }
}

/// One evaluated valuation.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationRow {
    pub valuation: String,
    pub polytope: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_im: Option<f64>,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    None,
    Rows(Vec<EvaluationRow>),
    Sampler(Box<SamplerDiagnostics>),
    Kinematic(Box<KinematicReport>),
}

/// Deterministic part of a report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportBody {
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "is_none_outcome")]
    pub result: Outcome,
}

fn is_none_outcome(o: &Outcome) -> bool {
    matches!(o, Outcome::None)
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub header: Header,
    pub body: ReportBody,
}

impl ReportBody {
    pub fn exit_code(&self, certification_failed: bool) -> i32 {
        if certification_failed {
            EXIT_CERTIFICATION
        } else if self.passed {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }

    /// CSV rendering: strata for kinematic runs, rows for evaluations,
    /// checks otherwise.
    pub fn to_csv(&self) -> String {
        match &self.result {
            Outcome::Kinematic(r) => r.strata_csv(),
            Outcome::Rows(rows) => {
                let mut out = String::from("valuation,polytope,value,std_error\n");
                for r in rows {
                    let _ = writeln!(out, "{},{},{:e},{:e}", r.valuation, r.polytope, r.value, r.std_error);
                }
                out
            }
            _ => {
                let mut out = String::from("name,value,tolerance,expected,std_error,passed\n");
                for c in &self.checks {
                    let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
                    let _ = writeln!(
                        out,
                        "{},{:e},{:e},{},{},{}",
                        c.name,
                        c.value,
                        c.tolerance,
                        opt(c.expected),
                        opt(c.std_error),
                        c.passed
                    );
                }
                out
            }
        }
    }
}

fn context_ambient(context: Context) -> Ambient {
    match context {
        Context::Spin7 => Ambient::Spin7,
        _ => Ambient::G2,
    }
}

/// Execute a resolved config. Errors here are run-time failures, not
/// config errors.
pub fn execute(cfg: &ExperimentConfig) -> Result<(Vec<Check>, Outcome)> {
    let tol = &cfg.tolerances;
    match cfg.command {
        Command::CheckIdentities => {
            let mut checks = identity_suite(cfg.context, cfg.samples, cfg.seed, tol)?;
            if cfg.context == Context::G2 {
                checks.extend(axiom_suite(cfg.seed, tol)?);
            }
            Ok((checks, Outcome::None))
        }
        Command::RankCheck => {
            let checks = rank_suite(context_ambient(cfg.context), cfg.samples, cfg.seed)?;
            Ok((checks, Outcome::None))
        }
        Command::SampleDiagnostics => {
            let d = sampler_diagnostics(cfg.sampler_group(), cfg.samples, cfg.seed, cfg.walk, cfg.workers, tol)?;
            Ok((d.checks.clone(), Outcome::Sampler(Box::new(d))))
        }
        Command::Evaluate => {
            let plan = cfg.evaluate.as_ref().expect("resolved evaluate plan");
            let opts = OuterAngleOptions {
                samples: plan.angle_samples,
                seed: cfg.seed,
            };
            let mut rows = Vec::new();
            let mut checks = Vec::new();
            for (name, body) in plan.body_names.iter().zip(&plan.bodies) {
                for id in &plan.ids {
                    let v = evaluate_with(id, body, &opts)?;
                    rows.push(EvaluationRow {
                        valuation: id.kind.to_string(),
                        polytope: name.clone(),
                        value: v.re,
                        value_im: id.kind.is_complex().then_some(v.im),
                        std_error: v.std_error,
                    });
                }
                if plan.disk_bundle {
                    let id = crate::valuations::ValuationId::new(crate::valuations::ValuationKind::Nu3, Ambient::G2)?;
                    let face = evaluate_with(&id, body, &opts)?;
                    let disk = nu3_disk_bundle(body, plan.disk_samples, cfg.seed)?;
                    rows.push(EvaluationRow {
                        valuation: "NU3_DISK_BUNDLE".into(),
                        polytope: name.clone(),
                        value: disk.value.re,
                        value_im: None,
                        std_error: disk.value.std_error,
                    });
                    let se = face.std_error.hypot(disk.value.std_error);
                    checks.push(Check::within_sigma(
                        format!("disk_bundle_{name}"),
                        disk.value.re,
                        se,
                        face.re,
                        3.0,
                    ));
                }
            }
            Ok((checks, Outcome::Rows(rows)))
        }
        Command::Pkf => {
            let plan = cfg.pkf.as_ref().expect("resolved pkf plan");
            let exp = KinematicExperiment {
                n_group: plan.n_group,
                n_translation: plan.n_translation,
                master_seed: cfg.seed,
                box_margin: plan.margin,
                domain: plan.domain,
                walk: cfg.walk,
                chunk: plan.chunk,
                workers: cfg.workers,
                angle_samples: plan.angle_samples,
                ..KinematicExperiment::new(plan.group, plan.k.clone(), plan.l.clone())
            };
            let r = run_experiment(&exp)?;
            let se = r.lhs_std_error.hypot(r.rhs_std_error);
            let mut checks = vec![Check::within_sigma("pkf_agreement", r.lhs_estimate, se, r.rhs_total, plan.sigmas)];
            if let (Some(t), Some(e)) = (plan.exceptional_tolerance, r.exceptional_relative_error) {
                checks.push(Check::below("pkf_exceptional_relative_error", e, t));
            }
            Ok((checks, Outcome::Kinematic(Box::new(r))))
        }
    }
}

/// Run a resolved config into a report body and an exit code.
pub fn run(cfg: ExperimentConfig) -> (ReportBody, i32) {
    let command = cfg.command.name();
    match execute(&cfg) {
        Ok((checks, result)) => {
            let passed = checks.iter().all(|c| c.passed);
            let body = ReportBody {
                command,
                config: cfg,
                checks,
                passed,
                error: None,
                result,
            };
            let code = body.exit_code(false);
            (body, code)
        }
        Err(e) => {
            let cert = matches!(e, Error::Certification { .. });
            let body = ReportBody {
                command,
                config: cfg,
                checks: Vec::new(),
                passed: false,
                error: Some(e.to_string()),
                result: Outcome::None,
            };
            let code = body.exit_code(cert);
            (body, code)
        }
    }
}

/// Render the report in the configured format.
pub fn render(body: ReportBody) -> Result<String> {
    match body.config.format {
        Format::Csv => Ok(body.to_csv()),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&Report {
                header: Header::now(),
                body,
            })?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Whole CLI: parse, resolve, run, write. Returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let cfg = match cli.merged().and_then(|(file, base)| ExperimentConfig::resolve(&file, &base)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let output = cfg.output.clone();
    let (body, code) = run(cfg);
    if let Some(err) = &body.error {
        eprintln!("error: {err}");
    }
    let text = match render(body) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CHECK_FAILED;
        }
    };
    let written = match &output {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: writing report: {e}");
        return EXIT_CHECK_FAILED;
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("holval").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config() {
        let c = cli(&["--seed", "9", "pkf", "--group", "SO7", "--preset", "cube-pair", "--n-group", "5"]);
        let (file, base) = c.merged().unwrap();
        let cfg = ExperimentConfig::resolve(&file, &base).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.pkf.unwrap().n_group, 5);
    }

    #[test]
    fn identity_run_passes() {
        let c = cli(&["check-identities", "--context", "SU", "--samples", "50"]);
        let (file, base) = c.merged().unwrap();
        let (body, code) = run(ExperimentConfig::resolve(&file, &base).unwrap());
        assert!(body.passed);
        assert_eq!(code, EXIT_PASS);
        assert!(body.to_csv().starts_with("name,value"));
    }

    #[test]
    fn failing_check_exits_one() {
        let c = cli(&["check-identities", "--context", "SO", "--samples", "10"]);
        let (mut file, base) = c.merged().unwrap();
        file.tolerances.identity = Some(1e-300);
        let (body, code) = run(ExperimentConfig::resolve(&file, &base).unwrap());
        assert!(!body.passed);
        assert_eq!(code, EXIT_CHECK_FAILED);
    }

    #[test]
    fn certification_failure_exits_three() {
        let c = cli(&["check-identities"]);
        let (file, base) = c.merged().unwrap();
        let (mut body, _) = run(ExperimentConfig::resolve(&file, &base).unwrap());
        body.passed = false;
        assert_eq!(body.exit_code(true), EXIT_CERTIFICATION);
        assert_eq!(body.exit_code(false), EXIT_CHECK_FAILED);
    }

    #[test]
    fn missing_command_is_config_error() {
        assert_eq!(main_with(cli(&["--seed", "1"])), EXIT_CONFIG);
    }
}
