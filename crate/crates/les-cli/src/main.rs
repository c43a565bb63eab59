//! `les` — penalized regression with the convex log-exp-sum group penalty.
//!
//! Subcommands: `fit`, `tune`, `simulate`, `verify`, `df`. Every option can
//! come from a config file (`--config`, flat `key = value` lines with
//! optional `[section]` headers) or a flag of the same name; flags win.

mod commands;
mod csvio;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use les_core::Error as CoreError;
use output::Format;

/// Error carrying the process exit code:
/// 1 usage/config, 2 data, 3 solver non-convergence, 4 verification failure.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
    pub fn solver(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }
    pub fn verification(message: impl Into<String>) -> Self {
        CliError {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::InvalidConfig(_) | CoreError::InvalidGroups(_) => 1,
            CoreError::Solver(_) | CoreError::PerturbedRefit { .. } => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fit,
    Tune,
    Simulate,
    Verify,
    Df,
}

/// Flags/config keys that take a value.
const VALUE_KEYS: &[&str] = &[
    "config",
    "input",
    "response",
    "groups",
    "lambda",
    "alpha",
    "weights",
    "grid-lambdas",
    "grid-alphas",
    "criterion",
    "validation-input",
    "df-r",
    "df-rho",
    "reps",
    "example",
    "method",
    "tuning",
    "seed",
    "threads",
    "out",
    "format",
    "n",
    "max-sweeps",
    "outer-tol",
    "inner-tol",
];

/// Value-less boolean flags.
const SWITCH_KEYS: &[&str] = &["standardized", "all"];

/// Parsed invocation: the command plus a merged key-value map
/// (config file first, command line wins).
pub struct RunConfig {
    pub command: Command,
    options: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.options.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::usage(format!("missing required option --{key}")))
    }

    pub fn parse_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CliError::usage(format!("--{key}: '{v}' is not a number")))
            })
            .transpose()
    }

    pub fn parse_usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| CliError::usage(format!("--{key}: '{v}' is not an integer")))
            })
            .transpose()
    }

    pub fn parse_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| CliError::usage(format!("--{key}: '{v}' is not an integer")))
            })
            .transpose()
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        Ok(self.parse_u64("seed")?.unwrap_or(0))
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn format(&self) -> Result<Format, CliError> {
        match self.get("format") {
            Some(v) => Format::parse(v),
            None => Ok(Format::Text),
        }
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.options.contains_key(key)
    }

    pub fn solver_options(&self) -> Result<les_core::SolverOptions, CliError> {
        let mut opts = les_core::SolverOptions::default();
        if let Some(v) = self.parse_usize("max-sweeps")? {
            opts.max_sweeps = v;
        }
        if let Some(v) = self.parse_f64("outer-tol")? {
            opts.outer_tol = v;
        }
        if let Some(v) = self.parse_f64("inner-tol")? {
            opts.inner_tol = v;
        }
        Ok(opts)
    }
}

fn normalize_key(raw: &str) -> String {
    raw.trim().trim_start_matches("--").to_ascii_lowercase()
}

fn parse_config_file(path: &PathBuf) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if t.starts_with('[') && t.ends_with(']') {
            continue; // section headers organize the file; keys are global
        }
        let Some((k, v)) = t.split_once('=') else {
            return Err(CliError::usage(format!(
                "config line {}: expected 'key = value', got '{t}'",
                i + 1
            )));
        };
        let key = normalize_key(k);
        let value = v.trim().to_string();
        if SWITCH_KEYS.contains(&key.as_str()) || VALUE_KEYS.contains(&key.as_str()) {
            pairs.push((key, value));
        } else {
            return Err(CliError::usage(format!(
                "config line {}: unknown key '{key}'",
                i + 1
            )));
        }
    }
    Ok(pairs)
}

fn parse_args(args: &[String]) -> Result<RunConfig, CliError> {
    if args.is_empty() {
        return Err(CliError::usage(USAGE.trim_start()));
    }
    let command = match args[0].as_str() {
        "fit" => Command::Fit,
        "tune" => Command::Tune,
        "simulate" => Command::Simulate,
        "verify" => Command::Verify,
        "df" => Command::Df,
        "help" | "--help" | "-h" => return Err(CliError::usage(USAGE.trim_start())),
        other => {
            return Err(CliError::usage(format!(
                "unknown command '{other}'; expected fit, tune, simulate, verify or df"
            )))
        }
    };

    let mut cli_pairs: Vec<(String, String)> = Vec::new();
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if !a.starts_with("--") {
            return Err(CliError::usage(format!("unexpected argument '{a}'")));
        }
        let (key_raw, inline_val) = match a.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (a.clone(), None),
        };
        let key = normalize_key(&key_raw);
        if SWITCH_KEYS.contains(&key.as_str()) {
            cli_pairs.push((key, inline_val.unwrap_or_else(|| "true".into())));
            i += 1;
        } else if VALUE_KEYS.contains(&key.as_str()) {
            let value = match inline_val {
                Some(v) => v,
                None => {
                    i += 1;
                    args.get(i)
                        .cloned()
                        .ok_or_else(|| CliError::usage(format!("--{key} needs a value")))?
                }
            };
            cli_pairs.push((key, value));
            i += 1;
        } else {
            return Err(CliError::usage(format!("unknown option --{key}")));
        }
    }

    // config file first, then command line on top
    let mut options = BTreeMap::new();
    if let Some((_, cfg_path)) = cli_pairs.iter().find(|(k, _)| k == "config") {
        for (k, v) in parse_config_file(&PathBuf::from(cfg_path))? {
            options.insert(k, v);
        }
    }
    for (k, v) in cli_pairs {
        if k != "config" {
            options.insert(k, v);
        }
    }
    // reproducibility: a seed is always present
    options.entry("seed".into()).or_insert_with(|| "0".into());

    Ok(RunConfig { command, options })
}

const USAGE: &str = "
usage: les <command> [options]

commands:
  fit       fit at one (lambda, alpha): --input data.csv --response y --groups map.csv --lambda L --alpha A
  tune      grid search: --criterion {validation|cv:<k>|bic} [--validation-input v.csv] [--grid-lambdas l1,l2,...] [--grid-alphas a1,a2,...]
  simulate  replicate study: --example {1|2|3|4} --method {les|lasso} --tuning {tuning-set|bic} --reps N
  verify    oracle battery: --all [--seed S]; nonzero exit on any failure
  df        randomized-trace degrees of freedom at one (lambda, alpha)

common options:
  --config FILE      key = value file; any option below, flags win
  --weights {pk_over_p|pk|custom:<path>}   per-group penalty weights
  --df-R N --df-rho X                      df estimator settings
  --seed S --threads T --out FILE --format {csv|structured-text}
  --standardized                           also report standardized-scale estimates
exit codes: 0 ok, 1 usage, 2 data, 3 solver non-convergence, 4 verification failure
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let run = parse_args(&args).and_then(|cfg| {
        if let Some(t) = cfg.parse_usize("threads")? {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .ok();
        }
        commands::dispatch(&cfg)
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
