//! Command-line surface and `--config` merging.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "scissor",
    version,
    about = "Forward kinematics and inverse design of planar scissor linkages",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit aspect ratios so the deployed chain takes the shape of a target.
    Morph(MorphArgs),
    /// Fit a sectioned chain whose tip traces a target during actuation.
    Write(WriteArgs),
    /// Validation studies.
    Analyze(AnalyzeArgs),
    /// Re-simulate a saved design.json.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn names(&self) -> Vec<&'static str> {
        match self {
            Command::Morph(_) => vec!["morph"],
            Command::Write(_) => vec!["write"],
            Command::Simulate(_) => vec!["simulate"],
            Command::Analyze(a) => vec![
                "analyze",
                match a.kind {
                    AnalyzeKind::Sensitivity(_) => "sensitivity",
                    AnalyzeKind::Closure(_) => "closure",
                    AnalyzeKind::Perturbation(_) => "perturbation",
                },
            ],
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Morph(a) => &a.common,
            Command::Write(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Analyze(a) => match &a.kind {
                AnalyzeKind::Sensitivity(k) => &k.common,
                AnalyzeKind::Closure(k) => &k.common,
                AnalyzeKind::Perturbation(k) => &k.common,
            },
        }
    }

    /// Resolved settings echoed into the manifest.
    pub fn echo(&self) -> Value {
        let v = match self {
            Command::Morph(a) => serde_json::to_value(a),
            Command::Write(a) => serde_json::to_value(a),
            Command::Simulate(a) => serde_json::to_value(a),
            Command::Analyze(a) => match &a.kind {
                AnalyzeKind::Sensitivity(k) => serde_json::to_value(k),
                AnalyzeKind::Closure(k) => serde_json::to_value(k),
                AnalyzeKind::Perturbation(k) => serde_json::to_value(k),
            },
        };
        v.unwrap_or(Value::Null)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// JSON object supplying any flag of the command; flags on the command
    /// line win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Seed of every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TargetArgs {
    /// `name:key=val,...` (line, circle, spiral, sine, flower3) or a CSV/JSON
    /// point file.
    #[arg(long)]
    pub target: String,
    /// Treat a point file as a closed curve.
    #[arg(long)]
    pub closed: bool,
    /// Curvature smoothing bandwidth in target arc length (0 disables;
    /// default two input spacings).
    #[arg(long)]
    pub smoothing: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 5000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    /// Aspect ratio bounds `min:max`.
    #[arg(long, default_value = "0.1:0.9")]
    pub alpha_bounds: String,
    /// Member length bounds `min:max` (unbounded when absent).
    #[arg(long)]
    pub length_bounds: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MorphArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    /// Number of units.
    #[arg(long, default_value_t = 20)]
    pub units: usize,
    /// `kappa,tip,rot` loss weights.
    #[arg(long, default_value = "1,1,0.1")]
    pub weights: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WriteArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    /// Number of units (ignored with --grid).
    #[arg(long, default_value_t = 8)]
    pub units: usize,
    /// Unit counts to search, `lo:hi:step`, `lo:hi` or a comma list.
    #[arg(long)]
    pub grid: Option<String>,
    /// Number of sections sharing one aspect ratio each (default: one per
    /// unit).
    #[arg(long)]
    pub sections: Option<usize>,
    #[arg(long, default_value_t = 15)]
    pub restarts: usize,
    /// `smooth,length,steric` loss weights.
    #[arg(long, default_value = "0.01,1,10")]
    pub weights: String,
    /// Actuation sweep `max:min` in radians (or with a `deg` suffix).
    #[arg(long, default_value = "3:0.3")]
    pub psi_range: String,
    /// Also optimize the sweep end points.
    #[arg(long)]
    pub optimize_psi: bool,
    /// Actuation samples per sweep.
    #[arg(long, default_value_t = 400)]
    pub samples: usize,
    /// Smallest internal angle before the steric penalty applies.
    #[arg(long, default_value = "0.1")]
    pub phi_min: String,
    /// Stop scheduling new runs after this many seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    pub kind: AnalyzeKind,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeKind {
    /// Tip variance under single-unit aspect-ratio noise.
    Sensitivity(SensitivityArgs),
    /// Closure actuation of uniform chains, closed form against measured.
    Closure(ClosureArgs),
    /// Error of the first-order perturbative chain against the exact one.
    Perturbation(PerturbationArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SensitivityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, default_value = "100,200,300")]
    pub units: String,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Samples per unit.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value = "90deg")]
    pub psi: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClosureArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Aspect ratios, comma separated.
    #[arg(long, default_value = "0.6")]
    pub alpha: String,
    #[arg(long, default_value = "4:30")]
    pub units: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PerturbationArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.52)]
    pub alpha0: f64,
    /// Perturbation amplitudes, comma separated.
    #[arg(long, default_value = "1e-4,3e-4,1e-3,3e-3")]
    pub epsilon: String,
    #[arg(long, default_value_t = 30)]
    pub units: usize,
    #[arg(long, default_value = "45deg")]
    pub psi: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// A design.json written by `morph` or `write`.
    #[arg(long)]
    pub design: PathBuf,
    /// Override the number of actuation samples of a writing design.
    #[arg(long)]
    pub samples: Option<usize>,
}

/// Path and contents of the `--config` file.
pub type ConfigFile = (PathBuf, Vec<u8>);

/// Turns a JSON config object into flags.
pub fn config_tokens(value: &Value) -> CliResult<Vec<OsString>> {
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::invalid("config must be a JSON object of flag names to values"))?;
    let mut out = Vec::new();
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            return Err(CliError::invalid("config files cannot nest `config`"));
        }
        let scalar = |v: &Value| -> CliResult<String> {
            match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(CliError::invalid(format!("config `{key}`: unsupported value {v}"))),
            }
        };
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => out.push(flag.into()),
            Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar).collect::<CliResult<_>>()?;
                out.push(flag.into());
                out.push(joined.join(",").into());
            }
            other => {
                out.push(flag.into());
                out.push(scalar(other)?.into());
            }
        }
    }
    Ok(out)
}

/// Inserts config flags right after the subcommand names so that flags given
/// on the command line, which come later, override them.
pub fn merge_config(raw: &[OsString], names: &[&str], tokens: Vec<OsString>) -> Vec<OsString> {
    let mut at = 1;
    for name in names {
        if let Some(i) = raw.iter().skip(at).position(|a| a == name) {
            at += i + 1;
        }
    }
    let mut merged = raw[..at].to_vec();
    merged.extend(tokens);
    merged.extend_from_slice(&raw[at..]);
    merged
}

/// Parses the process arguments, applying `--config` if given. Clap errors
/// (including help and version) terminate the process through clap.
pub fn parse(raw: Vec<OsString>) -> CliResult<(Cli, Option<ConfigFile>)> {
    let first = Cli::try_parse_from(&raw).unwrap_or_else(|e| e.exit());
    let Some(path) = first.command.common().config.clone() else {
        return Ok((first, None));
    };
    let bytes = std::fs::read(&path).map_err(|e| CliError::invalid(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::invalid(format!("config {} is not valid JSON: {e}", path.display())))?;
    let merged = merge_config(&raw, &first.command.names(), config_tokens(&value)?);
    let cli = Cli::try_parse_from(&merged).unwrap_or_else(|e| e.exit());
    Ok((cli, Some((path, bytes))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn command_line_beats_config() {
        let cfg: Value = serde_json::json!({"units": 12, "target": "circle:R=2", "closed": true, "restarts": 3});
        let raw = os(&["scissor", "write", "--units", "9"]);
        let merged = merge_config(&raw, &["write"], config_tokens(&cfg).unwrap());
        let cli = Cli::try_parse_from(&merged).unwrap();
        let Command::Write(w) = cli.command else { panic!() };
        assert_eq!(w.units, 9);
        assert_eq!(w.restarts, 3);
        assert_eq!(w.target.target, "circle:R=2");
        assert!(w.target.closed);
    }

    #[test]
    fn config_lands_after_nested_subcommand() {
        let cfg: Value = serde_json::json!({"alpha": [0.6, 0.7]});
        let raw = os(&["scissor", "analyze", "closure", "--units", "5:6"]);
        let merged = merge_config(&raw, &["analyze", "closure"], config_tokens(&cfg).unwrap());
        let cli = Cli::try_parse_from(&merged).unwrap();
        let Command::Analyze(AnalyzeArgs { kind: AnalyzeKind::Closure(c) }) = cli.command else { panic!() };
        assert_eq!(c.alpha, "0.6,0.7");
    }

    #[test]
    fn nested_config_and_objects_rejected() {
        assert!(config_tokens(&serde_json::json!({"config": "x.json"})).is_err());
        assert!(config_tokens(&serde_json::json!({"units": {"a": 1}})).is_err());
        assert!(config_tokens(&serde_json::json!([1])).is_err());
    }

    #[test]
    fn echo_omits_paths() {
        let cli = Cli::try_parse_from(os(&["scissor", "morph", "--target", "circle", "--out", "/tmp/x"])).unwrap();
        let echo = cli.command.echo();
        assert!(echo.get("out").is_none());
        assert_eq!(echo["units"], 20);
    }
}
