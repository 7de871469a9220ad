use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::args::{
    CommonArgs, DesignArgs, ExperimentArgs, FitArgs, GridArgs, InputArgs, KrigeArgs, ReportArgs, SolverArgs,
};
use crate::failure::{usage, UsageError};

/// Fills each unset field from the config file's section.
pub trait Layer: Sized {
    fn layer(&mut self, file: Option<Self>);
}

macro_rules! layered {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl $crate::config::Layer for $ty {
            fn layer(&mut self, file: Option<Self>) {
                if let Some(file) = file {
                    $(
                        if self.$field.is_none() {
                            self.$field = file.$field;
                        }
                    )*
                }
            }
        }
    };
}
pub(crate) use layered;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub design: Option<DesignArgs>,
    pub input: Option<InputArgs>,
    pub fit: Option<FitArgs>,
    pub grid: Option<GridArgs>,
    pub solver: Option<SolverArgs>,
    pub krige: Option<KrigeArgs>,
    pub experiment: Option<ExperimentArgs>,
    pub report: Option<ReportArgs>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }
}

/// Common settings after layering.
#[derive(Debug, Clone)]
pub struct Common {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: PathBuf,
}

pub fn resolve_common(flags: &CommonArgs, file: &ConfigFile) -> anyhow::Result<Common> {
    let jobs = flags.jobs.or(file.jobs);
    if jobs == Some(0) {
        return usage("--jobs must be at least 1");
    }
    Ok(Common {
        seed: flags.seed.or(file.seed).unwrap_or(0),
        jobs,
        out: flags
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
    })
}
