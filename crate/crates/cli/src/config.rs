use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scn_core::graph_dtw::DtwConfig;
use scn_core::ingest::{IngestConfig, ValidationConfig};
use scn_core::labeling::LabelConfig;
use scn_core::slicing::SliceConfig;
use scn_core::tree_metric::MetricConfig;

use crate::CliError;

/// Default input locations. Command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub tracks: Option<PathBuf>,
    pub map: Option<PathBuf>,
    pub atoms: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Worker threads; `None` uses every core. `SCN_THREADS` overrides.
    pub threads: Option<usize>,
    pub paths: Paths,
    pub ingest: IngestConfig,
    pub validate: ValidationConfig,
    pub slice: SliceConfig,
    pub metric: MetricConfig,
    pub dtw: DtwConfig,
    pub label: LabelConfig,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = crate::read_text(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Effective worker count: `SCN_THREADS`, then the config, then 0 (all cores).
    pub fn thread_count(&self) -> Result<usize, CliError> {
        match std::env::var("SCN_THREADS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("SCN_THREADS must be a non-negative integer, got {v:?}"))),
            Err(_) => Ok(self.threads.unwrap_or(0)),
        }
    }

    pub fn check(&self) -> Result<(), CliError> {
        let usage = |e: String| CliError::Usage(e);
        self.ingest.check().map_err(|e| usage(e.to_string()))?;
        self.slice.check().map_err(|e| usage(e.to_string()))?;
        self.metric.check().map_err(|e| usage(e.to_string()))?;
        self.label.check().map_err(|e| usage(e.to_string()))?;
        if self.dtw.stride == 0 {
            return Err(usage("dtw.stride must be >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(usage("threads must be >= 1 when set".into()));
        }
        Ok(())
    }
}

/// Rejects output paths that collide with each other or with an input.
pub fn check_outputs(inputs: &[&Path], outputs: &[&Path]) -> Result<(), CliError> {
    for (i, o) in outputs.iter().enumerate() {
        if outputs[..i].contains(o) {
            return Err(CliError::Usage(format!("output path {} is used twice", o.display())));
        }
        if inputs.contains(o) {
            return Err(CliError::Usage(format!("output path {} is also an input", o.display())));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let text = serde_json::to_string_pretty(&PipelineConfig::default()).unwrap();
        let back: PipelineConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, PipelineConfig::default());
        assert!(back.check().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"metric": {"depth": 2, "dept": 3}}"#).is_err());
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"metrics": {}}"#).is_err());
        let c: PipelineConfig = serde_json::from_str(r#"{"metric": {"depth": 2}}"#).unwrap();
        assert_eq!(c.metric.depth, 2);
    }

    #[test]
    fn output_collisions() {
        let (a, b) = (Path::new("a"), Path::new("b"));
        assert!(check_outputs(&[a], &[b]).is_ok());
        assert!(check_outputs(&[a], &[a]).is_err());
        assert!(check_outputs(&[], &[b, b]).is_err());
    }
}
