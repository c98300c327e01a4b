use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ibbm_core::model::{uniform_mesh, validate_mesh, ResourceLimits};
use ibbm_core::{ModelParams, Sampler, SbmParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "ibbm", version, about = "Interacting branching Brownian motion experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the interacting BBM and write particle snapshots.
    Simulate(Flags),
    /// Run the BBM verification suite.
    ValidateBbm(Flags),
    /// Exploratory local-mass experiment.
    Conjecture(Flags),
    /// Super-Brownian particle approximation and its checks.
    Sbm(Flags),
    /// Run every verification criterion.
    ValidateAll(Flags),
}

impl Command {
    pub fn split(self) -> (Experiment, Flags) {
        match self {
            Command::Simulate(f) => (Experiment::Simulate, f),
            Command::ValidateBbm(f) => (Experiment::ValidateBbm, f),
            Command::Conjecture(f) => (Experiment::Conjecture, f),
            Command::Sbm(f) => (Experiment::Sbm, f),
            Command::ValidateAll(f) => (Experiment::ValidateAll, f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    ValidateBbm,
    Conjecture,
    Sbm,
    ValidateAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

/// Every flag is optional so that unset flags fall back to the config file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Flags {
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Last epoch index M; the run ends at t = M + 1.
    #[arg(long, allow_hyphen_values = true)]
    pub epochs: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Approximation level n of the super-Brownian scheme.
    #[arg(long = "level-n")]
    pub level_n: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub replicates: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// exact or euler.
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// `uniform:K` or a comma-separated list of times.
    #[arg(long)]
    pub mesh: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, env = "BBM_THREADS")]
    pub threads: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Flags {
    /// Values set here win over `base`.
    fn over(self, base: Flags) -> Flags {
        Flags {
            gamma: self.gamma.or(base.gamma),
            dim: self.dim.or(base.dim),
            epochs: self.epochs.or(base.epochs),
            alpha: self.alpha.or(base.alpha),
            beta: self.beta.or(base.beta),
            level_n: self.level_n.or(base.level_n),
            horizon: self.horizon.or(base.horizon),
            replicates: self.replicates.or(base.replicates),
            seed: self.seed.or(base.seed),
            sampler: self.sampler.or(base.sampler),
            dt: self.dt.or(base.dt),
            mesh: self.mesh.or(base.mesh),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            threads: self.threads.or(base.threads),
            config: self.config,
        }
    }
}

/// Fully validated configuration; this is what gets echoed to `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub experiment: Experiment,
    pub gamma: f64,
    pub dim: usize,
    pub epochs: u32,
    pub alpha: f64,
    pub beta: f64,
    pub level_n: u64,
    pub horizon: f64,
    pub replicates: Option<u64>,
    pub seed: u64,
    pub sampler: Sampler,
    pub dt: f64,
    pub mesh: String,
    pub out: PathBuf,
    pub format: Format,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn model_params(&self) -> Result<ModelParams> {
        let mesh = match self.experiment {
            Experiment::Simulate => parse_epoch_mesh(&self.mesh)?,
            _ => Vec::new(),
        };
        Ok(ModelParams {
            gamma: self.gamma,
            dim: self.dim,
            max_epoch: self.epochs,
            sampler: self.sampler,
            dt: self.dt,
            record_mesh: mesh,
            limits: ResourceLimits::default(),
        })
    }

    pub fn sbm_params(&self) -> Result<SbmParams> {
        let params = SbmParams {
            alpha: self.alpha,
            beta: self.beta,
            n: self.level_n,
            dim: self.dim,
            horizon: self.horizon,
            record_mesh: parse_time_mesh(&self.mesh, self.horizon)?,
            ..SbmParams::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn replicates_or(&self, default: u64) -> u64 {
        self.replicates.unwrap_or(default)
    }
}

/// Intra-epoch record mesh: `uniform:K` gives `0, 1/K, ..., (K-1)/K`.
pub fn parse_epoch_mesh(spec: &str) -> Result<Vec<f64>> {
    let mesh = if let Some(k) = spec.strip_prefix("uniform:") {
        let k: usize = k.trim().parse().context("uniform mesh needs an integer K")?;
        if k == 0 {
            bail!("uniform mesh needs K ≥ 1");
        }
        uniform_mesh(k)
    } else {
        parse_list(spec)?
    };
    validate_mesh(&mesh)?;
    Ok(mesh)
}

/// Absolute record times for the super-Brownian runs: `uniform:K` gives
/// spacing `1/K` up to the horizon.
pub fn parse_time_mesh(spec: &str, horizon: f64) -> Result<Vec<f64>> {
    if let Some(k) = spec.strip_prefix("uniform:") {
        let k: usize = k.trim().parse().context("uniform mesh needs an integer K")?;
        if k == 0 {
            bail!("uniform mesh needs K ≥ 1");
        }
        return Ok(ibbm_core::sbm::uniform_grid(horizon, 1.0 / k as f64));
    }
    parse_list(spec)
}

fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("bad mesh entry {s:?}")))
        .collect()
}

fn read_file(path: &Path) -> Result<Flags> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Merges flags over the optional config file, fills defaults and checks
/// every numeric constraint.
pub fn resolve(experiment: Experiment, flags: Flags) -> Result<RunConfig> {
    let file = match &flags.config {
        Some(path) => read_file(path)?,
        None => Flags::default(),
    };
    let f = flags.over(file);

    let epochs = f.epochs.unwrap_or(match experiment {
        Experiment::Conjecture => 13,
        _ => 5,
    });
    if epochs < 0 {
        bail!("max_epoch ≥ 0 violated (epochs = {epochs})");
    }
    let epochs = u32::try_from(epochs).context("epochs out of range")?;
    let sampler = match f.sampler.as_deref() {
        None => Sampler::Exact,
        Some(s) => s.parse().map_err(|e| anyhow::anyhow!("{e}"))?,
    };
    if f.replicates == Some(0) {
        bail!("replicates ≥ 1 violated");
    }
    if f.threads == Some(0) {
        bail!("threads ≥ 1 violated");
    }
    let cfg = RunConfig {
        experiment,
        gamma: f.gamma.unwrap_or(1.0),
        dim: f.dim.unwrap_or(1),
        epochs,
        alpha: f.alpha.unwrap_or(1.0),
        beta: f.beta.unwrap_or(1.0),
        level_n: f.level_n.unwrap_or(10),
        horizon: f.horizon.unwrap_or(5.0),
        replicates: f.replicates,
        seed: f.seed.unwrap_or(1),
        sampler,
        dt: f.dt.unwrap_or(1e-3),
        mesh: f.mesh.unwrap_or_default(),
        out: f.out.unwrap_or_else(|| PathBuf::from("out")),
        format: f.format.unwrap_or_default(),
        threads: f.threads,
    };

    match experiment {
        Experiment::Simulate | Experiment::Conjecture => {
            let params = cfg.model_params()?;
            params.validate()?;
            params.check_resources()?;
            if experiment == Experiment::Conjecture {
                if cfg.gamma == 0.0 {
                    bail!("gamma ≠ 0 violated for the conjecture experiment");
                }
                if cfg.epochs + 1 < ibbm_core::conjecture::MIN_OBSERVATION_TIME {
                    bail!("observation time epochs + 1 ≥ 10 violated");
                }
                if cfg.replicates_or(100) < ibbm_core::conjecture::MIN_REPLICATES {
                    bail!("replicates ≥ 100 violated for the conjecture experiment");
                }
            }
        }
        Experiment::Sbm => {
            cfg.sbm_params()?;
        }
        Experiment::ValidateBbm | Experiment::ValidateAll => {}
    }
    Ok(cfg)
}

pub fn parse_config<I, T>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let (experiment, flags) = cli.command.split();
    resolve(experiment, flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_mesh_specs() {
        assert_eq!(parse_epoch_mesh("uniform:4").unwrap(), vec![0.0, 0.25, 0.5, 0.75]);
        assert_eq!(parse_epoch_mesh("0.1, 0.5").unwrap(), vec![0.1, 0.5]);
        assert!(parse_epoch_mesh("").unwrap().is_empty());
        assert!(parse_epoch_mesh("0.5,0.1").is_err());
        assert!(parse_epoch_mesh("uniform:0").is_err());
        assert!(parse_epoch_mesh("1.5").is_err());
    }

    #[test]
    fn time_mesh_specs() {
        assert_eq!(parse_time_mesh("uniform:2", 1.0).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_time_mesh("1,2", 3.0).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn flags_win_over_file_values() {
        let flags = Flags { gamma: Some(1.0), ..Flags::default() };
        let file = Flags { gamma: Some(2.0), dim: Some(3), ..Flags::default() };
        let merged = flags.over(file);
        assert_eq!(merged.gamma, Some(1.0));
        assert_eq!(merged.dim, Some(3));
    }

    #[test]
    fn format_selection() {
        assert!(Format::Both.csv() && Format::Both.json());
        assert!(!Format::Csv.json());
    }
}
