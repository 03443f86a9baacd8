//! Run-configuration ingestion: JSON parsing, command-line overrides and
//! validation that reports every violation at once.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::mcs::{FeederSource, RunConfig};

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub penetration_levels: Option<Vec<f64>>,
    pub scenarios: Option<usize>,
    pub dt_h: Option<f64>,
    pub traces: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(seed) = self.seed {
            config.run.seed = seed;
        }
        if let Some(pl) = &self.penetration_levels {
            config.run.penetration_levels = pl.clone();
        }
        if let Some(n) = self.scenarios {
            config.run.scenarios = n;
        }
        if let Some(dt) = self.dt_h {
            config.run.dt_h = dt;
        }
        if let Some(t) = self.traces {
            config.run.traces = t;
        }
    }
}

/// Parses a configuration document. Blank input means all defaults, and a
/// run manifest is accepted in place of a configuration (its `config` key
/// is used).
pub fn parse_config(text: &str) -> Result<RunConfig> {
    if text.trim().is_empty() {
        return Ok(RunConfig::default());
    }
    let mut value: Value = serde_json::from_str(text)
        .map_err(|e| Error::Config(vec![format!("not valid JSON: {e}")]))?;
    if let Some(obj) = value.as_object_mut() {
        if obj.contains_key("manifest_version") {
            value = obj
                .remove("config")
                .ok_or_else(|| Error::Config(vec!["manifest has no config section".into()]))?;
        }
    }
    serde_json::from_value(value).map_err(|e| Error::Config(vec![e.to_string()]))
}

/// Parses, applies overrides and validates. Feeder paths are resolved
/// against `base_dir` and inlined, so the result is self-contained.
pub fn parse_and_validate(
    text: &str,
    overrides: &Overrides,
    base_dir: Option<&Path>,
) -> Result<RunConfig> {
    let mut config = parse_config(text)?;
    overrides.apply(&mut config);
    inline_feeder(&mut config, base_dir)?;
    config.validate()?;
    Ok(config)
}

/// Reads a configuration file; see [`parse_and_validate`].
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_and_validate(&text, overrides, path.parent())
}

fn inline_feeder(config: &mut RunConfig, base_dir: Option<&Path>) -> Result<()> {
    let model = match &config.feeder {
        FeederSource::Path { path } => {
            let full = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            let text = std::fs::read_to_string(&full).map_err(|e| {
                Error::Config(vec![format!(
                    "feeder.path: cannot read {}: {e}",
                    full.display()
                )])
            })?;
            crate::FeederModel::from_json_str(&text)
                .map_err(|e| Error::Config(vec![format!("feeder: {e}")]))?
        }
        FeederSource::Named(_) | FeederSource::Inline { .. } => {
            config.feeder.resolve().map_err(|e| match e {
                Error::Config(v) => Error::Config(v),
                other => Error::Config(vec![format!("feeder: {other}")]),
            })?;
            return Ok(());
        }
    };
    config.feeder = FeederSource::Inline {
        model: model.document().clone(),
    };
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn violations(text: &str) -> Vec<String> {
        match parse_and_validate(text, &Overrides::default(), None) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_document_gives_case_study_defaults() {
        for text in ["", "{}", "  \n"] {
            let c = parse_and_validate(text, &Overrides::default(), None).unwrap();
            assert_eq!(
                c.run.penetration_levels,
                vec![0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0]
            );
            assert_eq!(c.run.scenarios, 100);
            assert_eq!(c.run.dt_h, 0.1);
            assert_eq!(c.tco.capital_cost, 4575.0);
            assert_eq!(c.tco.core_loss_kw, 0.96);
            assert_eq!(c.tco.load_loss_kw, 5.1);
        }
    }

    #[test]
    fn bad_resolution_names_field() {
        let v = violations(r#"{"run": {"dt_h": 0.7}}"#);
        assert!(v.iter().any(|m| m.starts_with("run.dt_h")), "{v:?}");
    }

    #[test]
    fn all_violations_reported_together() {
        let v =
            violations(r#"{"run": {"dt_h": 0.7, "scenarios": 0}, "tco": {"interest_rate": -1}}"#);
        assert!(v.len() >= 3, "{v:?}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let v = violations(r#"{"run": {"dtt": 0.1}}"#);
        assert!(v[0].contains("dtt"), "{v:?}");
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            penetration_levels: Some(vec![150.0]),
            seed: Some(9),
            ..Default::default()
        };
        let c = parse_and_validate(r#"{"run": {"seed": 1}}"#, &o, None).unwrap();
        assert_eq!(c.run.penetration_levels, vec![150.0]);
        assert_eq!(c.run.seed, 9);
    }

    #[test]
    fn manifest_is_accepted() {
        let mut c = RunConfig::default();
        c.run.seed = 77;
        let manifest = serde_json::json!({"manifest_version": 1, "config": c});
        let back = parse_config(&manifest.to_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn feeder_path_is_inlined() {
        let dir = tempfile::tempdir().unwrap();
        let feeder = crate::feeder::build_builtin_feeder();
        std::fs::write(dir.path().join("f.json"), feeder.to_json_string().unwrap()).unwrap();
        let cfg_path = dir.path().join("run.json");
        std::fs::write(&cfg_path, r#"{"feeder": {"path": "f.json"}}"#).unwrap();
        let c = load_config(&cfg_path, &Overrides::default()).unwrap();
        match c.feeder {
            FeederSource::Inline { model } => assert_eq!(&model, feeder.document()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_builtin_rejected() {
        let v = violations(r#"{"feeder": "ieee-123"}"#);
        assert!(v[0].contains("ieee-123"));
    }
}
