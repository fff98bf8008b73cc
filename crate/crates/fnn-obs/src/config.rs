//! Experiment configuration.
//!
//! A single flat TOML file drives every subcommand; command-line flags
//! override file values. Matrices are written as nested arrays, random
//! sources as strings carrying their own seed (`"random(7)"`), and block
//! sources as `"canonical"` or `"sampled(lo,hi,seed)"`. Defaults reproduce
//! the built-in numerical experiment: the reference 3×3 weight matrix and
//! activation pattern, 1000 neighbors, spread 2.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fnn::{InputSequence, WeightState};
use crate::input_design::{
    canonical_template, random_nonsingular_weights, sample_blocks, sample_pattern,
    DesignTemplate,
};

/// Weight matrix of the built-in experiment.
pub fn default_weights() -> Vec<Vec<f64>> {
    vec![
        vec![0.67, 0.07, 0.15],
        vec![0.90, 0.42, 0.09],
        vec![0.72, 0.91, 0.51],
    ]
}

/// Activation pattern of the built-in experiment.
pub fn default_pattern() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 1.0, 0.0],
        vec![1.0, 1.0, 1.0],
        vec![0.0, 0.0, 1.0],
    ]
}

/// A matrix either given literally or drawn from a seeded sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Literal(Vec<Vec<f64>>),
    Source(String),
}

impl MatrixSpec {
    fn random_seed(&self, what: &str) -> Result<Option<u64>> {
        match self {
            MatrixSpec::Literal(_) => Ok(None),
            MatrixSpec::Source(s) => parse_call(s, "random", 1, what)
                .map(|args| Some(args[0] as u64)),
        }
    }
}

/// How the stacked blocks `B` are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BlockSpec {
    Canonical,
    Sampled { lo: f64, hi: f64, seed: u64 },
}

impl From<BlockSpec> for String {
    fn from(spec: BlockSpec) -> String {
        match spec {
            BlockSpec::Canonical => "canonical".to_owned(),
            BlockSpec::Sampled { lo, hi, seed } => format!("sampled({lo},{hi},{seed})"),
        }
    }
}

impl TryFrom<String> for BlockSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        if s.trim() == "canonical" {
            return Ok(BlockSpec::Canonical);
        }
        let args = parse_call(&s, "sampled", 3, "b")?;
        Ok(BlockSpec::Sampled {
            lo: args[0],
            hi: args[1],
            seed: args[2] as u64,
        })
    }
}

/// Parses `name(a,b,...)` with exactly `arity` numeric arguments.
fn parse_call(s: &str, name: &str, arity: usize, field: &str) -> Result<Vec<f64>> {
    let trimmed = s.trim();
    let inner = trimmed
        .strip_prefix(name)
        .and_then(|rest| rest.trim().strip_prefix('('))
        .and_then(|rest| rest.trim_end().strip_suffix(')'))
        .ok_or_else(|| {
            Error::Config(format!(
                "field `{field}`: expected `{name}(...)` with {arity} argument(s), got `{s}`"
            ))
        })?;
    let args: Vec<f64> = inner
        .split(',')
        .map(|a| {
            a.trim().parse::<f64>().map_err(|_| {
                Error::Config(format!("field `{field}`: cannot parse `{a}` as a number"))
            })
        })
        .collect::<Result<_>>()?;
    if args.len() != arity {
        return Err(Error::Config(format!(
            "field `{field}`: `{name}` takes {arity} argument(s), got {}",
            args.len()
        )));
    }
    Ok(args)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!(
                "field `format`: expected `csv` or `json`, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputFormat::Csv => write!(f, "csv"),
            OutputFormat::Json => write!(f, "json"),
        }
    }
}

/// Raw file contents; every field is optional and overlays the defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n: Option<usize>,
    w: Option<MatrixSpec>,
    t: Option<MatrixSpec>,
    b: Option<BlockSpec>,
    u: Option<Vec<Vec<f64>>>,
    neighbor_count: Option<usize>,
    spread: Option<f64>,
    master_seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
}

/// Fully resolved configuration, echoed verbatim into reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub w: MatrixSpec,
    pub t: MatrixSpec,
    pub b: BlockSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<Vec<f64>>>,
    pub neighbor_count: usize,
    pub spread: f64,
    pub master_seed: u64,
    /// Destination of the rendered report; not part of the experiment, so
    /// never echoed into it.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 3,
            w: MatrixSpec::Literal(default_weights()),
            t: MatrixSpec::Literal(default_pattern()),
            b: BlockSpec::Sampled {
                lo: 0.1,
                hi: 1.0,
                seed: 1,
            },
            u: None,
            neighbor_count: 1000,
            spread: 2.0,
            master_seed: 42,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    /// Reads a TOML file over the defaults; with no path, returns defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            let file: ConfigFile = toml::from_str(&text).map_err(|e| {
                Error::Config(format!("{}: {e}", path.display()))
            })?;
            cfg.overlay(file);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn overlay(&mut self, file: ConfigFile) {
        if let Some(n) = file.n {
            self.n = n;
        }
        if let Some(w) = file.w {
            self.w = w;
        }
        if let Some(t) = file.t {
            self.t = t;
        }
        if let Some(b) = file.b {
            self.b = b;
        }
        if file.u.is_some() {
            self.u = file.u;
        }
        if let Some(c) = file.neighbor_count {
            self.neighbor_count = c;
        }
        if let Some(s) = file.spread {
            self.spread = s;
        }
        if let Some(seed) = file.master_seed {
            self.master_seed = seed;
        }
        if file.out.is_some() {
            self.out = file.out;
        }
        if let Some(f) = file.format {
            self.format = f;
        }
    }

    /// Applies command-line overrides; a given flag wins over the file.
    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        out: Option<PathBuf>,
        format: Option<OutputFormat>,
    ) {
        if let Some(seed) = seed {
            self.master_seed = seed;
        }
        if out.is_some() {
            self.out = out;
        }
        if let Some(format) = format {
            self.format = format;
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("field `n`: must be at least 1".into()));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(Error::Config(format!(
                "field `spread`: must be positive, got {}",
                self.spread
            )));
        }
        if let MatrixSpec::Literal(rows) = &self.w {
            for (i, row) in rows.iter().enumerate() {
                if row.len() != self.n {
                    return Err(Error::Config(format!(
                        "field `w`: row {i} has {} entries, expected n = {}",
                        row.len(),
                        self.n
                    )));
                }
            }
        }
        if let MatrixSpec::Literal(rows) = &self.t {
            if rows.len() != self.n || rows.iter().any(|r| r.len() != self.n) {
                return Err(Error::Config(format!(
                    "field `t`: must be an {n}×{n} matrix",
                    n = self.n
                )));
            }
        }
        self.w.random_seed("w")?;
        self.t.random_seed("t")?;
        Ok(())
    }

    /// Materializes the weight state.
    pub fn weight_state(&self) -> Result<WeightState> {
        match &self.w {
            MatrixSpec::Literal(rows) => WeightState::from_rows(rows),
            MatrixSpec::Source(_) => {
                let seed = self.w.random_seed("w")?.expect("validated source");
                random_nonsingular_weights(self.n, seed)
            }
        }
    }

    /// Materializes the 0/1 pattern matrix `T`.
    pub fn pattern_matrix(&self) -> Result<DMatrix<f64>> {
        match &self.t {
            MatrixSpec::Literal(rows) => {
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Ok(DMatrix::from_row_slice(self.n, self.n, &flat))
            }
            MatrixSpec::Source(_) => {
                let seed = self.t.random_seed("t")?.expect("validated source");
                sample_pattern(self.n, seed)
            }
        }
    }

    /// Materializes the design template. The canonical source pins
    /// `T = I_n`; the `t` field only feeds sampled blocks.
    pub fn template(&self) -> Result<DesignTemplate> {
        match self.b {
            BlockSpec::Canonical => Ok(canonical_template(self.n)),
            BlockSpec::Sampled { lo, hi, seed } => {
                sample_blocks(&self.pattern_matrix()?, (lo, hi), seed)
            }
        }
    }

    /// The explicitly supplied input sequence, when the config carries one.
    pub fn explicit_inputs(&self) -> Result<Option<InputSequence>> {
        match &self.u {
            None => Ok(None),
            Some(rows) => InputSequence::from_rows(rows).map(Some),
        }
    }
}
