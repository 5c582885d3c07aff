//! Flat experiment configuration: `section.key = value` lines against a
//! fixed key registry, resolved as defaults, then file, then `--set`
//! overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use alab_core::acquisition::{epoch_schedule, StrategyKind, StrategySpec};
use alab_core::experiment::{DataSource, ExperimentConfig};
use alab_core::nn::{PredSpace, TrainConfig};
use alab_core::pool::BlobSpec;

use crate::errors::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    UInt,
    Float,
    Str,
    UIntList,
    StrList,
}

impl ValueKind {
    pub fn is_numeric(self) -> bool {
        matches!(self, ValueKind::UInt | ValueKind::Float)
    }
}

struct KeySpec {
    key: &'static str,
    kind: ValueKind,
    default: &'static str,
}

const REGISTRY: &[KeySpec] = &[
    KeySpec { key: "data.source", kind: ValueKind::Str, default: "blobs" },
    KeySpec { key: "data.path", kind: ValueKind::Str, default: "" },
    KeySpec { key: "data.classes", kind: ValueKind::UInt, default: "4" },
    KeySpec { key: "data.samples_per_class", kind: ValueKind::UInt, default: "250" },
    KeySpec { key: "data.dim", kind: ValueKind::UInt, default: "8" },
    KeySpec { key: "data.center_scale", kind: ValueKind::Float, default: "4.0" },
    KeySpec { key: "data.noise_sigma", kind: ValueKind::Float, default: "1.0" },
    KeySpec { key: "data.seed", kind: ValueKind::UInt, default: "1" },
    KeySpec { key: "model.hidden", kind: ValueKind::UIntList, default: "32" },
    KeySpec { key: "train.epochs", kind: ValueKind::UInt, default: "60" },
    KeySpec { key: "train.batch_size", kind: ValueKind::UInt, default: "32" },
    KeySpec { key: "train.learning_rate", kind: ValueKind::Float, default: "0.05" },
    KeySpec { key: "train.momentum", kind: ValueKind::Float, default: "0.9" },
    KeySpec { key: "train.seed", kind: ValueKind::UInt, default: "7" },
    KeySpec { key: "schedule.interval", kind: ValueKind::UInt, default: "2" },
    KeySpec { key: "schedule.count", kind: ValueKind::UInt, default: "5" },
    KeySpec { key: "acquisition.strategies", kind: ValueKind::StrList, default: "random" },
    KeySpec { key: "acquisition.space", kind: ValueKind::Str, default: "softmax" },
    KeySpec { key: "acquisition.seed", kind: ValueKind::UInt, default: "0" },
    KeySpec { key: "run.initial_k", kind: ValueKind::UInt, default: "40" },
    KeySpec { key: "run.batch_b", kind: ValueKind::UInt, default: "20" },
    KeySpec { key: "run.budget", kind: ValueKind::UInt, default: "240" },
    KeySpec { key: "run.trials", kind: ValueKind::UInt, default: "5" },
    KeySpec { key: "run.master_seed", kind: ValueKind::UInt, default: "42" },
];

fn lookup(key: &str) -> Option<&'static KeySpec> {
    REGISTRY.iter().find(|s| s.key == key)
}

/// Returns the kind of a registered key, for sweep validation.
pub fn key_kind(key: &str) -> Option<ValueKind> {
    lookup(key).map(|s| s.kind)
}

fn check_value(spec: &KeySpec, value: &str) -> CliResult<()> {
    let bad = |what: &str| {
        Err(CliError::usage(format!(
            "key '{}' expects {what}, got '{value}'",
            spec.key
        )))
    };
    match spec.kind {
        ValueKind::UInt => {
            if value.parse::<u64>().is_err() {
                return bad("a nonnegative integer");
            }
        }
        ValueKind::Float => match value.parse::<f64>() {
            Ok(v) if v.is_finite() => {}
            _ => return bad("a finite number"),
        },
        ValueKind::UIntList => {
            for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                if item.parse::<u64>().is_err() {
                    return bad("a comma-separated list of nonnegative integers");
                }
            }
        }
        ValueKind::Str | ValueKind::StrList => {}
    }
    Ok(())
}

/// A fully resolved configuration: every registered key has a value.
#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn defaults() -> Config {
        let values = REGISTRY
            .iter()
            .map(|s| (s.key.to_string(), s.default.to_string()))
            .collect();
        Config { values }
    }

    /// Defaults overlaid with the `section.key = value` lines of a file.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn from_file(path: &Path) -> CliResult<Config> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut config = Config::defaults();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!(
                    "config line {}: expected 'key = value', got '{line}'",
                    idx + 1
                ))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    /// Applies repeatable `--set key=value` flags.
    pub fn apply_overrides(&mut self, sets: &[String]) -> CliResult<()> {
        for item in sets {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                CliError::usage(format!("--set expects key=value, got '{item}'"))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let spec = lookup(key)
            .ok_or_else(|| CliError::usage(format!("unknown config key '{key}'")))?;
        check_value(spec, value)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get_str(&self, key: &str) -> &str {
        &self.values[key]
    }

    pub fn get_uint(&self, key: &str) -> CliResult<u64> {
        self.values[key]
            .parse()
            .map_err(|_| CliError::usage(format!("key '{key}' is not an integer")))
    }

    pub fn get_float(&self, key: &str) -> CliResult<f64> {
        self.values[key]
            .parse()
            .map_err(|_| CliError::usage(format!("key '{key}' is not a number")))
    }

    pub fn get_uint_list(&self, key: &str) -> CliResult<Vec<usize>> {
        self.values[key]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| CliError::usage(format!("key '{key}' holds a non-integer '{s}'")))
            })
            .collect()
    }

    pub fn get_str_list(&self, key: &str) -> Vec<String> {
        self.values[key]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    }

    /// The resolved key/value pairs, sorted by key.
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn data_source(&self) -> CliResult<DataSource> {
        match self.get_str("data.source") {
            "blobs" => Ok(DataSource::Blobs(BlobSpec {
                num_classes: self.get_uint("data.classes")? as usize,
                samples_per_class: self.get_uint("data.samples_per_class")? as usize,
                dim: self.get_uint("data.dim")? as usize,
                center_scale: self.get_float("data.center_scale")?,
                noise_sigma: self.get_float("data.noise_sigma")?,
                seed: self.get_uint("data.seed")?,
            })),
            "csv" => {
                let path = self.get_str("data.path");
                if path.is_empty() {
                    return Err(CliError::usage("data.source = csv requires data.path"));
                }
                Ok(DataSource::Csv(path.into()))
            }
            other => Err(CliError::usage(format!(
                "data.source must be 'blobs' or 'csv', got '{other}'"
            ))),
        }
    }

    fn snapshot_space(&self) -> CliResult<PredSpace> {
        match self.get_str("acquisition.space") {
            "softmax" => Ok(PredSpace::Softmax),
            "logit" => Ok(PredSpace::Logit),
            other => Err(CliError::usage(format!(
                "acquisition.space must be 'softmax' or 'logit', got '{other}'"
            ))),
        }
    }

    /// One validated experiment per configured strategy, in config order.
    pub fn to_experiments(&self) -> CliResult<Vec<(String, ExperimentConfig)>> {
        let source = self.data_source()?;
        let train = TrainConfig {
            epochs: self.get_uint("train.epochs")? as usize,
            batch_size: self.get_uint("train.batch_size")? as usize,
            learning_rate: self.get_float("train.learning_rate")?,
            momentum: self.get_float("train.momentum")?,
            seed: self.get_uint("train.seed")?,
        };
        let space = self.snapshot_space()?;
        let acquisition_seed = self.get_uint("acquisition.seed")?;

        let names = self.get_str_list("acquisition.strategies");
        if names.is_empty() {
            return Err(CliError::usage("acquisition.strategies lists no strategies"));
        }
        let mut experiments = Vec::with_capacity(names.len());
        for name in &names {
            if experiments.iter().any(|(n, _)| n == name) {
                return Err(CliError::usage(format!("strategy '{name}' listed twice")));
            }
            let kind: StrategyKind = name
                .parse()
                .map_err(|e: alab_core::Error| CliError::usage(e.to_string()))?;
            let strategy = if kind.is_sequential() {
                let schedule = epoch_schedule(
                    train.epochs,
                    self.get_uint("schedule.interval")? as usize,
                    self.get_uint("schedule.count")? as usize,
                )
                .map_err(|e| CliError::usage(e.to_string()))?;
                StrategySpec {
                    kind,
                    space,
                    schedule: Some(schedule),
                    seed: acquisition_seed,
                }
            } else {
                StrategySpec {
                    kind,
                    space: PredSpace::Softmax,
                    schedule: None,
                    seed: acquisition_seed,
                }
            };
            let cfg = ExperimentConfig {
                source: source.clone(),
                initial_k: self.get_uint("run.initial_k")? as usize,
                batch_b: self.get_uint("run.batch_b")? as usize,
                budget: self.get_uint("run.budget")? as usize,
                hidden_layers: self.get_uint_list("model.hidden")?,
                train: train.clone(),
                strategy,
                trials: self.get_uint("run.trials")? as usize,
                master_seed: self.get_uint("run.master_seed")?,
            };
            cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
            experiments.push((name.clone(), cfg));
        }
        Ok(experiments)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_config(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn defaults_cover_every_key_and_build_experiments() {
        let config = Config::defaults();
        assert_eq!(config.entries().len(), REGISTRY.len());
        let experiments = config.to_experiments().unwrap();
        assert_eq!(experiments.len(), 1);
        assert_eq!(experiments[0].0, "random");
    }

    #[test]
    fn file_lines_override_defaults() {
        let f = temp_config(
            "# comment\n\nrun.trials = 3\nacquisition.strategies = entropy, random\nmodel.hidden = 16,8\n",
        );
        let config = Config::from_file(f.path()).unwrap();
        assert_eq!(config.get_uint("run.trials").unwrap(), 3);
        assert_eq!(config.get_str_list("acquisition.strategies"), vec!["entropy", "random"]);
        assert_eq!(config.get_uint_list("model.hidden").unwrap(), vec![16, 8]);
        let experiments = config.to_experiments().unwrap();
        assert_eq!(experiments.len(), 2);
        assert_eq!(experiments[1].1.hidden_layers, vec![16, 8]);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_usage_errors() {
        let mut config = Config::defaults();
        let err = config.set("run.bogus", "1").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("run.bogus"));

        let err = config.set("run.trials", "many").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("run.trials"));

        let f = temp_config("run.trials: 3\n");
        assert!(Config::from_file(f.path()).unwrap_err().to_string().contains("line 1"));
    }

    #[test]
    fn overrides_apply_in_order() {
        let mut config = Config::defaults();
        config
            .apply_overrides(&["train.epochs=20".into(), "train.epochs=30".into()])
            .unwrap();
        assert_eq!(config.get_uint("train.epochs").unwrap(), 30);
        assert!(config.apply_overrides(&["nonsense".into()]).is_err());
    }

    #[test]
    fn unknown_strategy_reports_valid_kinds() {
        let mut config = Config::defaults();
        config.set("acquisition.strategies", "margin").unwrap();
        let err = config.to_experiments().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        for kind in StrategyKind::ALL {
            assert!(err.to_string().contains(kind.name()), "{err}");
        }
    }

    #[test]
    fn duplicate_strategies_are_rejected() {
        let mut config = Config::defaults();
        config.set("acquisition.strategies", "random,random").unwrap();
        assert!(config.to_experiments().is_err());
    }

    #[test]
    fn csv_source_requires_a_path() {
        let mut config = Config::defaults();
        config.set("data.source", "csv").unwrap();
        assert!(config.to_experiments().is_err());
        config.set("data.path", "/tmp/data.csv").unwrap();
        let experiments = config.to_experiments().unwrap();
        assert!(matches!(experiments[0].1.source, DataSource::Csv(_)));
    }

    #[test]
    fn sequential_strategies_get_the_schedule() {
        let mut config = Config::defaults();
        config.set("acquisition.strategies", "prediction_stability").unwrap();
        config.set("train.epochs", "10").unwrap();
        config.set("schedule.interval", "2").unwrap();
        config.set("schedule.count", "3").unwrap();
        let experiments = config.to_experiments().unwrap();
        let schedule = experiments[0].1.strategy.schedule.as_ref().unwrap();
        assert_eq!(schedule.epochs(), &[10, 8, 6]);

        config.set("schedule.count", "10").unwrap();
        assert!(config.to_experiments().is_err());
    }

    #[test]
    fn numeric_kinds_are_flagged_for_sweeps() {
        assert!(key_kind("schedule.interval").unwrap().is_numeric());
        assert!(key_kind("train.learning_rate").unwrap().is_numeric());
        assert!(!key_kind("acquisition.strategies").unwrap().is_numeric());
        assert!(key_kind("no.such.key").is_none());
    }
}
