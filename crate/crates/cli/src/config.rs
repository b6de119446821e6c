use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use kg_agent::agent::{AgentLimits, DecodingParams, DEFAULT_TIMEOUT};
use kg_agent::evalkit::DEFAULT_REPEATS;
use kg_agent::synthesis::SynthesisOptions;
use serde::Deserialize;

use crate::exit::{Failure, WithCode, EXIT_USAGE};

/// Settings read from `--config`. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub graph: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub planner: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub repeats: Option<usize>,
    pub timeout_secs: Option<u64>,
    pub limits: AgentLimits,
    pub decoding: DecodingParams,
    pub synthesis: SynthesisOptions,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))
            .code(EXIT_USAGE)?;
        let mut config: FileConfig = toml::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))
            .code(EXIT_USAGE)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.graph, &mut config.registry, &mut config.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(spec) = &config.planner {
            if let Some(file) = spec.strip_prefix("scripted:") {
                if Path::new(file).is_relative() {
                    config.planner = Some(format!("scripted:{}", base.join(file).display()));
                }
            }
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlannerSpec {
    Scripted(PathBuf),
    Remote(String),
}

impl FromStr for PlannerSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        if let Some(path) = s.strip_prefix("scripted:") {
            if path.is_empty() {
                bail!("`scripted:` needs a file path");
            }
            Ok(PlannerSpec::Scripted(PathBuf::from(path)))
        } else if let Some(url) = s.strip_prefix("remote:") {
            if url.is_empty() {
                bail!("`remote:` needs a URL");
            }
            Ok(PlannerSpec::Remote(url.to_string()))
        } else {
            Err(anyhow!("planner must be `scripted:<path>` or `remote:<url>`, got `{s}`"))
        }
    }
}

/// Fully resolved settings for one command; paths are checked here, before
/// any work starts.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub graph: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub planner: Option<PlannerSpec>,
    pub limits: AgentLimits,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub repeats: usize,
    pub timeout: Duration,
    pub decoding: DecodingParams,
    pub synthesis: SynthesisOptions,
}

/// Values given on the command line; each one overrides the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub graph: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub planner: Option<String>,
    pub planner_url: Option<String>,
    pub max_steps: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub repeats: Option<usize>,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self, Failure> {
        let planner = match flags.planner.or(file.planner) {
            Some(spec) => Some(spec.parse::<PlannerSpec>().code(EXIT_USAGE)?),
            None => flags.planner_url.map(PlannerSpec::Remote),
        };
        let mut limits = file.limits;
        if let Some(n) = flags.max_steps {
            limits.max_steps = n;
        }
        let workers = flags.workers.or(file.workers);
        if workers == Some(0) {
            return Err(anyhow!("workers must be at least 1")).code(EXIT_USAGE);
        }
        let repeats = flags.repeats.or(file.repeats).unwrap_or(DEFAULT_REPEATS);
        if repeats == 0 {
            return Err(anyhow!("repeats must be at least 1")).code(EXIT_USAGE);
        }
        let config = RunConfig {
            graph: flags.graph.or(file.graph),
            registry: flags.registry.or(file.registry),
            planner,
            limits,
            seed: flags.seed.or(file.seed),
            out: flags.out.or(file.out),
            workers,
            repeats,
            timeout: file.timeout_secs.map(Duration::from_secs).unwrap_or(DEFAULT_TIMEOUT),
            decoding: file.decoding,
            synthesis: file.synthesis,
        };
        for path in [&config.graph, &config.registry].into_iter().flatten() {
            require_file(path)?;
        }
        if let Some(PlannerSpec::Scripted(path)) = &config.planner {
            require_file(path)?;
        }
        Ok(config)
    }

    pub fn graph(&self) -> Result<&Path, Failure> {
        self.graph
            .as_deref()
            .ok_or_else(|| anyhow!("no graph given; pass --graph or set `graph` in the config"))
            .code(EXIT_USAGE)
    }

    pub fn seed(&self) -> Result<u64, Failure> {
        self.seed
            .ok_or_else(|| anyhow!("this command needs --seed (or `seed` in the config)"))
            .code(EXIT_USAGE)
    }
}

pub fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(anyhow!("{} is not a readable file", path.display())).code(EXIT_USAGE)
    }
}
