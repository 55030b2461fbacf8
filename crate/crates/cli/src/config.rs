//! Optional TOML defaults for `extract`. Command-line flags take precedence.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::failure::{Classify, CliResult};
use crate::{ContextArg, ExtractArgs, FormatArg};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExtractConfig {
    pub pipeline: Option<String>,
    pub context: Option<ContextArg>,
    pub index: Option<PathBuf>,
    pub replay: Option<PathBuf>,
    pub replay_format: Option<FormatArg>,
    pub endpoint: Option<String>,
    pub timeout_secs: Option<u64>,
    pub retries: Option<usize>,
    pub threads: Option<usize>,
    pub ontology: Option<PathBuf>,
}

impl ExtractConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).usage(format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).usage(format!("invalid config {}", path.display()))
    }

    /// Flags present on the command line replace config values.
    pub fn merge(self, args: &ExtractArgs) -> ExtractConfig {
        ExtractConfig {
            pipeline: args.pipeline.clone().or(self.pipeline),
            context: args.context.or(self.context),
            index: args.index.clone().or(self.index),
            replay: args.replay.clone().or(if args.endpoint.is_some() { None } else { self.replay }),
            replay_format: args.replay_format.or(self.replay_format),
            endpoint: args.endpoint.clone().or(if args.replay.is_some() { None } else { self.endpoint }),
            timeout_secs: args.timeout_secs.or(self.timeout_secs),
            retries: args.retries.or(self.retries),
            threads: args.threads.or(self.threads),
            ontology: args.ontology.clone().or(self.ontology),
        }
    }
}
