//! Command-line flags and the flat TOML config file they override.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};
use crate::grid::Spec;

#[derive(Debug, Parser)]
#[command(name = "bcmix", version, about = "Phase structure and Glauber mixing of the mean-field Blume-Capel model")]
pub struct Cli {
    /// Base seed of all Monte Carlo streams.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Line-delimited JSON rows instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Flat TOML file with the same keys as the flags; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Phase and predicted mixing regime on a (beta, K) grid.
    PhaseDiagram(PhaseDiagramArgs),
    /// The critical curves kc2 (beta <= ln 4), k1 and kc1 (beta > ln 4).
    CriticalCurves(CriticalCurvesArgs),
    /// Exact mixing times from the lumped chain.
    MixExact(MixExactArgs),
    /// Coalescence times of the threshold coupling.
    MixCouple(MixCoupleArgs),
    /// Local and aggregate contraction coefficients along z.
    CouplingContraction(CouplingContractionArgs),
    /// Exact bottleneck ratios and the implied mixing-time lower bound.
    Bottleneck(BottleneckArgs),
    /// Least-squares scaling fit of a column of a CSV file.
    ScalingFit(ScalingFitArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::PhaseDiagram(_) => "phase-diagram",
            Command::CriticalCurves(_) => "critical-curves",
            Command::MixExact(_) => "mix-exact",
            Command::MixCouple(_) => "mix-couple",
            Command::CouplingContraction(_) => "coupling-contraction",
            Command::Bottleneck(_) => "bottleneck",
            Command::ScalingFit(_) => "scaling-fit",
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PhaseDiagramArgs {
    /// Inverse temperatures, e.g. `0.2:3.0:0.02`.
    #[arg(long)]
    pub beta: Option<Spec>,
    /// Coupling constants; values, ranges or curve multiples such as `0.9*k1`.
    #[arg(long)]
    pub k: Option<Spec>,
    /// Root-finding tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CriticalCurvesArgs {
    #[arg(long)]
    pub beta: Option<Spec>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct MixExactArgs {
    /// System sizes, e.g. `20:320:*2`.
    #[arg(long)]
    pub n: Option<Spec>,
    #[arg(long)]
    pub beta: Option<Spec>,
    #[arg(long)]
    pub k: Option<Spec>,
    /// Distance thresholds (default 0.25).
    #[arg(long)]
    pub eps: Option<Spec>,
    /// Maximise over every lumped start instead of the three extreme ones.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub all_starts: bool,
    /// Step budget per start (default 50 n ln n).
    #[arg(long)]
    pub t_max: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extreme {
    Plus,
    Minus,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partner {
    Stationary,
    Plus,
    Minus,
    Zero,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct MixCoupleArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub k: Option<Spec>,
    /// Number of coupled runs (default 100).
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Step cap per run (default 10^7).
    #[arg(long)]
    pub cap: Option<u64>,
    /// Start of the first chain (default plus).
    #[arg(long, value_enum)]
    pub start: Option<Extreme>,
    /// Start of the second chain (default stationary).
    #[arg(long, value_enum)]
    pub against: Option<Partner>,
    /// Emit the trajectory of replica 0 instead of the coalescence table.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub trace: bool,
    /// Emit the coupling bound on d(t) at these times instead.
    #[arg(long)]
    pub tv_grid: Option<Spec>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CouplingContractionArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub k: Option<Spec>,
    /// Magnetisations in (0, 1] (default `0.01:1:0.01`).
    #[arg(long)]
    pub z: Option<Spec>,
    /// System size for the sampled aggregate contraction trailers.
    #[arg(long)]
    pub n: Option<usize>,
    /// Windows `|S/n| < eps` for the trailers (default `0.05,0.1,0.2`).
    #[arg(long)]
    pub eps: Option<Spec>,
    /// Stationary draws per window (default 2000).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Reference configuration of the pairs (default plus).
    #[arg(long, value_enum)]
    pub tau: Option<Extreme>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BottleneckArgs {
    #[arg(long)]
    pub n: Option<Spec>,
    #[arg(long)]
    pub beta: Option<Spec>,
    #[arg(long)]
    pub k: Option<Spec>,
    /// Cut `S/n > z'` (default 0).
    #[arg(long)]
    pub zprime: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ScalingFitArgs {
    /// CSV file; lines starting with `#` are skipped.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// `poly_nlogn` or `exponential`.
    #[arg(long)]
    pub model: Option<String>,
    /// Column of sizes (default n).
    #[arg(long)]
    pub x: Option<String>,
    /// Column of values (default t_mix).
    #[arg(long)]
    pub y: Option<String>,
    /// Keep rows matching every `column=value`, e.g. `beta=1,eps=0.25`.
    #[arg(long)]
    pub select: Option<String>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Global settings after merging flags over the config file.
#[derive(Debug, Clone)]
pub struct Globals {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub json: bool,
}

const GLOBAL_KEYS: [&str; 5] = ["seed", "threads", "out", "json", "experiment"];

/// Reads the config file (if any) and overlays the command line on it.
pub fn resolve(cli: Cli) -> Result<(Globals, Command)> {
    let (file, text) = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let table: Map<String, Value> =
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            (table, text)
        }
        None => (Map::new(), String::new()),
    };
    let path = cli.config.clone().unwrap_or_default();
    let diag = |key: &str, msg: String| config_error(&path, &text, key, msg);

    let mut rest = file.clone();
    for k in GLOBAL_KEYS {
        rest.remove(k);
    }
    let experiment = match file.get("experiment") {
        None => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(v) => return Err(diag("experiment", format!("`experiment` must be a string, got {v}"))),
    };

    let command = match (cli.command, experiment) {
        (Some(c), Some(e)) if c.name() != e => {
            return Err(diag(
                "experiment",
                format!("config selects `{e}` but the command line runs `{}`", c.name()),
            ))
        }
        (Some(c), _) => c,
        (None, Some(e)) => default_command(&e).ok_or_else(|| diag("experiment", format!("unknown experiment `{e}`")))?,
        (None, None) => {
            return Err(CliError::Config("no subcommand given (pass one, or set `experiment` in --config)".into()))
        }
    };

    let command = match command {
        Command::PhaseDiagram(a) => Command::PhaseDiagram(overlay(a, &rest, &diag)?),
        Command::CriticalCurves(a) => Command::CriticalCurves(overlay(a, &rest, &diag)?),
        Command::MixExact(a) => Command::MixExact(overlay(a, &rest, &diag)?),
        Command::MixCouple(a) => Command::MixCouple(overlay(a, &rest, &diag)?),
        Command::CouplingContraction(a) => Command::CouplingContraction(overlay(a, &rest, &diag)?),
        Command::Bottleneck(a) => Command::Bottleneck(overlay(a, &rest, &diag)?),
        Command::ScalingFit(a) => Command::ScalingFit(overlay(a, &rest, &diag)?),
    };

    let seed = match (cli.seed, file.get("seed")) {
        (Some(s), _) => s,
        (None, None) => 0,
        (None, Some(v)) => v.as_u64().ok_or_else(|| diag("seed", format!("`seed` must be a 64-bit unsigned integer, got {v}")))?,
    };
    let threads = match (cli.threads, file.get("threads")) {
        (Some(t), _) => Some(t),
        (None, None) => None,
        (None, Some(v)) => Some(
            v.as_u64().ok_or_else(|| diag("threads", format!("`threads` must be a nonnegative integer, got {v}")))?
                as usize,
        ),
    };
    let out = match (cli.out, file.get("out")) {
        (Some(p), _) => Some(p),
        (None, None) => None,
        (None, Some(Value::String(s))) => Some(PathBuf::from(s)),
        (None, Some(v)) => return Err(diag("out", format!("`out` must be a path string, got {v}"))),
    };
    let json = match file.get("json") {
        _ if cli.json => true,
        None => false,
        Some(Value::Bool(b)) => *b,
        Some(v) => return Err(diag("json", format!("`json` must be a boolean, got {v}"))),
    };
    Ok((Globals { seed, threads, out, json }, command))
}

fn default_command(name: &str) -> Option<Command> {
    Some(match name {
        "phase-diagram" => Command::PhaseDiagram(Default::default()),
        "critical-curves" => Command::CriticalCurves(Default::default()),
        "mix-exact" => Command::MixExact(Default::default()),
        "mix-couple" => Command::MixCouple(Default::default()),
        "coupling-contraction" => Command::CouplingContraction(Default::default()),
        "bottleneck" => Command::Bottleneck(Default::default()),
        "scaling-fit" => Command::ScalingFit(Default::default()),
        _ => return None,
    })
}

fn overlay<A, F>(cli: A, file: &Map<String, Value>, diag: &F) -> Result<A>
where
    A: Serialize + DeserializeOwned,
    F: Fn(&str, String) -> CliError,
{
    // validate the file on its own first so errors point at the file
    if let Err(e) = serde_json::from_value::<A>(Value::Object(file.clone())) {
        let msg = e.to_string();
        // type errors do not name the field; find the first key failing on its own
        let culprit = file.iter().find(|(k, v)| {
            let one: Map<String, Value> = [((*k).clone(), (*v).clone())].into_iter().collect();
            serde_json::from_value::<A>(Value::Object(one)).is_err()
        });
        return Err(match culprit {
            Some((k, _)) if backticked(&msg).as_deref() != Some(k) => diag(k, format!("`{k}`: {msg}")),
            _ => diag(&backticked(&msg).unwrap_or_default(), msg),
        });
    }
    let mut merged = file.clone();
    let flags = serde_json::to_value(&cli).map_err(|e| CliError::Config(e.to_string()))?;
    if let Value::Object(m) = flags {
        merged.extend(m.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(e.to_string()))
}

fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

/// `path:line: msg` when `key` is assigned on some line of the file.
fn config_error(path: &Path, text: &str, key: &str, msg: String) -> CliError {
    let line = text.lines().position(|l| {
        l.trim_start()
            .strip_prefix(key)
            .is_some_and(|r| r.trim_start().starts_with('='))
    });
    match line {
        Some(i) if !key.is_empty() => CliError::Config(format!("{}:{}: {msg}", path.display(), i + 1)),
        _ => CliError::Config(format!("{}: {msg}", path.display())),
    }
}

/// Value of a merged option that has no default.
pub fn required<T: Clone>(v: &Option<T>, key: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| CliError::Config(format!("missing `{key}` (pass --{key} or set it in the config file)")))
}
