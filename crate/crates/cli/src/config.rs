//! Command parameters: flag structs that double as JSON config schemas.
//!
//! Every command takes `--config FILE` whose flat keys mirror the long
//! flags; explicit flags override file values. The merged, fully resolved
//! parameter set is what lands in the run manifest, so re-running a
//! manifest needs no other state.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use opuc_core::coeffs::VerblunskySequence;
use opuc_core::io::{self, MeasureSpec};
use opuc_core::measures::HolderMeasure;

use crate::CliError;

const PI: f64 = std::f64::consts::PI;

/// Parse a list flag like "16,32,64".
fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| CliError::config(format!("cannot parse {what} entry '{t}'")))
        })
        .collect()
}

/// β tokens: plain numbers plus "pi" and "0".
fn parse_betas(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t {
            "pi" | "PI" => Ok(PI),
            other => other
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("cannot parse beta '{other}'"))),
        })
        .collect()
}

/// Threshold tokens: plain numbers or "eN" for e^N.
fn parse_thresholds(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            if let Some(exp) = t.strip_prefix('e') {
                exp.parse::<f64>()
                    .map(f64::exp)
                    .map_err(|_| CliError::config(format!("cannot parse threshold '{t}'")))
            } else {
                t.parse::<f64>()
                    .map_err(|_| CliError::config(format!("cannot parse threshold '{t}'")))
            }
        })
        .collect()
}

fn load_config_opts<T: serde::de::DeserializeOwned + Default>(
    path: Option<&PathBuf>,
) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => io::read_json::<T>(p).map_err(|e| CliError::config(e.to_string())),
    }
}

macro_rules! merge_field {
    ($cli:expr, $cfg:expr, $($f:ident),+) => {
        $( if $cli.$f.is_none() { $cli.$f = $cfg.$f.take(); } )+
    };
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::config(format!("missing required parameter --{flag}")))
}

// --------------------------------------------------------------------- gen

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenOpts {
    /// JSON config with these keys; flags override
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// power | random | sparse | zero
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub modulus: Option<f64>,
    /// support indices for the sparse family, e.g. "0,3,9"
    #[arg(long)]
    pub indices: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "n-max")]
    pub n_max: Option<usize>,
    /// rotate the generated sequence by e^{iβ}
    #[arg(long)]
    pub rotate: Option<f64>,
    /// artifact stem inside the output directory
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub modulus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub indices: Option<Vec<usize>>,
    pub seed: u64,
    pub n_max: usize,
    pub rotate: f64,
    pub name: String,
}

impl GenOpts {
    pub fn resolve(mut self) -> Result<GenParams, CliError> {
        let mut cfg: GenOpts = load_config_opts(self.config.as_ref())?;
        merge_field!(
            self, cfg, family, c, delta, gamma, margin, modulus, indices, seed, n_max, rotate, name
        );
        let family = require(self.family, "family")?;
        let indices = match self.indices {
            Some(s) => Some(parse_list::<usize>(&s, "indices")?),
            None => None,
        };
        let params = GenParams {
            family,
            c: self.c,
            delta: self.delta,
            gamma: self.gamma,
            margin: self.margin,
            modulus: self.modulus,
            indices,
            seed: self.seed.unwrap_or(0),
            n_max: require(self.n_max, "n-max")?,
            rotate: self.rotate.unwrap_or(0.0),
            name: self.name.unwrap_or_else(|| "seq".into()),
        };
        params.build()?; // validate now so errors surface as config errors
        Ok(params)
    }
}

impl GenParams {
    pub fn build(&self) -> Result<VerblunskySequence, CliError> {
        let seq = match self.family.as_str() {
            "power" | "power_decay" => VerblunskySequence::power_decay(
                self.c
                    .ok_or_else(|| CliError::config("power family needs --c"))?,
                self.delta
                    .ok_or_else(|| CliError::config("power family needs --delta"))?,
                self.seed,
                self.n_max,
            ),
            "random" | "random_weighted" => VerblunskySequence::random_weighted(
                self.gamma
                    .ok_or_else(|| CliError::config("random family needs --gamma"))?,
                self.margin
                    .ok_or_else(|| CliError::config("random family needs --margin"))?,
                self.seed,
                self.n_max,
            ),
            "sparse" => VerblunskySequence::sparse(
                self.indices
                    .as_deref()
                    .ok_or_else(|| CliError::config("sparse family needs --indices"))?,
                self.modulus
                    .ok_or_else(|| CliError::config("sparse family needs --modulus"))?,
                self.seed,
                self.n_max,
            ),
            "zero" => VerblunskySequence::sparse(&[], 0.0, self.seed, self.n_max),
            other => {
                return Err(CliError::config(format!(
                    "unknown family '{other}' (power|random|sparse|zero)"
                )))
            }
        }
        .map_err(|e| CliError::config(e.to_string()))?;
        Ok(if self.rotate != 0.0 {
            seq.rotate(self.rotate)
        } else {
            seq
        })
    }
}

// ---------------------------------------------------------- evolve / prufer

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryOpts {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// sequence spec JSON produced by `gen`
    #[arg(long = "seq")]
    pub seq_file: Option<PathBuf>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "n-max")]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryParams {
    pub seq_file: PathBuf,
    pub eta: f64,
    pub beta: f64,
    pub n_max: usize,
    pub name: String,
}

impl TrajectoryOpts {
    pub fn resolve(mut self, default_name: &str) -> Result<TrajectoryParams, CliError> {
        let mut cfg: TrajectoryOpts = load_config_opts(self.config.as_ref())?;
        merge_field!(self, cfg, seq_file, eta, beta, n_max, name);
        Ok(TrajectoryParams {
            seq_file: require(self.seq_file, "seq")?,
            eta: require(self.eta, "eta")?,
            beta: self.beta.unwrap_or(0.0),
            n_max: require(self.n_max, "n-max")?,
            name: self.name.unwrap_or_else(|| default_name.into()),
        })
    }
}

// ---------------------------------------------------------------- wkb-bench

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WkbBenchOpts {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long = "seq")]
    pub seq_file: Option<PathBuf>,
    /// measure JSON (a MeasureArtifact or bare spec); alternative to the
    /// inline cantor flags below
    #[arg(long = "measure")]
    pub measure_file: Option<PathBuf>,
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long = "support-lo")]
    pub support_lo: Option<f64>,
    #[arg(long = "support-hi")]
    pub support_hi: Option<f64>,
    /// comma-separated cutoffs, e.g. "16,32,64,128"
    #[arg(long = "l-grid")]
    pub l_grid: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WkbBenchParams {
    pub seq_file: PathBuf,
    pub measure: MeasureSpec,
    pub l_grid: Vec<usize>,
    pub beta: f64,
    pub name: String,
}

impl WkbBenchOpts {
    pub fn resolve(mut self) -> Result<WkbBenchParams, CliError> {
        let mut cfg: WkbBenchOpts = load_config_opts(self.config.as_ref())?;
        merge_field!(
            self,
            cfg,
            seq_file,
            measure_file,
            ratio,
            level,
            support_lo,
            support_hi,
            l_grid,
            beta,
            name
        );
        let measure = if let Some(path) = &self.measure_file {
            #[derive(Deserialize)]
            struct SpecOnly {
                #[serde(flatten)]
                spec: MeasureSpec,
            }
            let spec: SpecOnly =
                io::read_json(path).map_err(|e| CliError::config(e.to_string()))?;
            spec.spec
        } else {
            MeasureSpec::Cantor {
                ratio: require(self.ratio, "ratio")?,
                level: require(self.level, "level")?,
                a: self.support_lo.unwrap_or(0.5),
                b: self.support_hi.unwrap_or(std::f64::consts::TAU - 0.5),
            }
        };
        let l_grid: Vec<usize> = parse_list(&require(self.l_grid, "l-grid")?, "l-grid")?;
        let mut distinct = l_grid.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 4 {
            return Err(CliError::config(format!(
                "l-grid needs at least 4 distinct cutoffs for the scaling fit, got {}",
                distinct.len()
            )));
        }
        Ok(WkbBenchParams {
            seq_file: require(self.seq_file, "seq")?,
            measure,
            l_grid,
            beta: self.beta.unwrap_or(0.0),
            name: self.name.unwrap_or_else(|| "wkb".into()),
        })
    }
}

// ----------------------------------------------------------- partition-diag

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionDiagOpts {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long = "seq")]
    pub seq_file: Option<PathBuf>,
    /// Hölder exponent D of the companion measure
    #[arg(long)]
    pub d: Option<f64>,
    /// decay class; defaults to the sequence's own if it declares one
    #[arg(long)]
    pub gamma: Option<f64>,
    /// subdivision depth j
    #[arg(long)]
    pub depth: Option<u32>,
    /// exponent N for the second goal term; default from (gamma, d)
    #[arg(long = "goal2-n")]
    pub goal2_n: Option<u32>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDiagParams {
    pub seq_file: PathBuf,
    pub d: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
    pub depth: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub goal2_n: Option<u32>,
    pub name: String,
}

impl PartitionDiagOpts {
    pub fn resolve(mut self) -> Result<PartitionDiagParams, CliError> {
        let mut cfg: PartitionDiagOpts = load_config_opts(self.config.as_ref())?;
        merge_field!(self, cfg, seq_file, d, gamma, depth, goal2_n, name);
        let d = require(self.d, "d")?;
        if !(0.0 < d && d < 1.0) {
            return Err(CliError::config(format!("d = {d} must lie in (0, 1)")));
        }
        Ok(PartitionDiagParams {
            seq_file: require(self.seq_file, "seq")?,
            d,
            gamma: self.gamma,
            depth: self.depth.unwrap_or(1),
            goal2_n: self.goal2_n,
            name: self.name.unwrap_or_else(|| "partition".into()),
        })
    }
}

// --------------------------------------------------------------------- scan

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanOpts {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long = "seq")]
    pub seq_file: Option<PathBuf>,
    /// number of grid angles (default 2^16)
    #[arg(long = "grid-size")]
    pub grid_size: Option<usize>,
    #[arg(long = "eta-min")]
    pub eta_min: Option<f64>,
    #[arg(long = "eta-max")]
    pub eta_max: Option<f64>,
    #[arg(long = "n-max")]
    pub n_max: Option<usize>,
    /// comma-separated β values; "pi" allowed (default "0,pi")
    #[arg(long)]
    pub betas: Option<String>,
    /// super-level thresholds M; "eN" means e^N (default "e10")
    #[arg(long)]
    pub thresholds: Option<String>,
    /// box widths as multiples of the grid spacing (default "2,4,8,16,32,64")
    #[arg(long = "dim-scales")]
    pub dim_scales: Option<String>,
    /// decay class for the report row; defaults to the sequence's own
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub seq_file: PathBuf,
    pub grid_size: usize,
    pub eta_min: f64,
    pub eta_max: f64,
    pub n_max: usize,
    pub betas: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub dim_scales: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
    pub name: String,
}

impl ScanOpts {
    pub fn resolve(mut self) -> Result<ScanParams, CliError> {
        let mut cfg: ScanOpts = load_config_opts(self.config.as_ref())?;
        merge_field!(
            self, cfg, seq_file, grid_size, eta_min, eta_max, n_max, betas, thresholds, dim_scales,
            gamma, name
        );
        let betas = parse_betas(self.betas.as_deref().unwrap_or("0,pi"))?;
        let thresholds = parse_thresholds(self.thresholds.as_deref().unwrap_or("e10"))?;
        let dim_scales: Vec<usize> = parse_list(
            self.dim_scales.as_deref().unwrap_or("2,4,8,16,32,64"),
            "dim-scales",
        )?;
        if dim_scales.len() < 3 {
            return Err(CliError::config("dim-scales needs at least 3 entries"));
        }
        Ok(ScanParams {
            seq_file: require(self.seq_file, "seq")?,
            grid_size: self.grid_size.unwrap_or(1 << 16),
            eta_min: self.eta_min.unwrap_or(opuc_core::badset::DEFAULT_ETA_MIN),
            eta_max: self.eta_max.unwrap_or(opuc_core::badset::DEFAULT_ETA_MAX),
            n_max: require(self.n_max, "n-max")?,
            betas,
            thresholds,
            dim_scales,
            gamma: self.gamma,
            name: self.name.unwrap_or_else(|| "scan".into()),
        })
    }
}

// ------------------------------------------------------------------ helpers

/// Resolved parameter sets, tagged by command; the manifest payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Params {
    Gen(GenParams),
    Evolve(TrajectoryParams),
    PruferCheck(TrajectoryParams),
    WkbBench(WkbBenchParams),
    PartitionDiag(PartitionDiagParams),
    Scan(ScanParams),
}

impl Params {
    pub fn command_name(&self) -> &'static str {
        match self {
            Params::Gen(_) => "gen",
            Params::Evolve(_) => "evolve",
            Params::PruferCheck(_) => "prufer-check",
            Params::WkbBench(_) => "wkb-bench",
            Params::PartitionDiag(_) => "partition-diag",
            Params::Scan(_) => "scan",
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Params::Gen(p) => &p.name,
            Params::Evolve(p) | Params::PruferCheck(p) => &p.name,
            Params::WkbBench(p) => &p.name,
            Params::PartitionDiag(p) => &p.name,
            Params::Scan(p) => &p.name,
        }
    }
}

pub fn load_sequence(path: &Path) -> Result<VerblunskySequence, CliError> {
    io::read_sequence_spec(path).map_err(|e| CliError::config(e.to_string()))
}

pub fn build_measure(spec: &MeasureSpec) -> Result<HolderMeasure, CliError> {
    spec.build().map_err(|e| CliError::config(e.to_string()))
}
