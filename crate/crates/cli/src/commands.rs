//! Subcommand implementations. Each returns `CliResult<()>`; `main`
//! translates errors into exit codes (2 usage, 1 runtime).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use alab_core::acquisition::{write_snapshot_csv, SnapshotTensor};
use alab_core::experiment::{run_experiment, run_experiment_observed, ExperimentResult};
use alab_core::pool::{generate_blobs, write_csv_dataset, BlobSpec};

use crate::config::{key_kind, Config};
use crate::csvio::{read_metrics_csv, write_metrics_csv, MetricsRow};
use crate::errors::{CliError, CliResult};
use crate::manifest::{write_manifest, RunManifest};
use crate::svg::{render_line_chart, Series};

fn load_config(path: Option<&Path>, sets: &[String], seed: Option<u64>) -> CliResult<Config> {
    let mut config = match path {
        Some(p) => Config::from_file(p)?,
        None => Config::defaults(),
    };
    config.apply_overrides(sets)?;
    if let Some(seed) = seed {
        config.set("run.master_seed", &seed.to_string())?;
    }
    Ok(config)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))
}

fn metrics_rows(name: &str, result: &ExperimentResult) -> Vec<MetricsRow> {
    let mut rows = Vec::new();
    for (trial, rounds) in result.trials.iter().enumerate() {
        for m in rounds {
            rows.push(MetricsRow {
                strategy: name.to_string(),
                trial,
                round: m.round,
                labeled_count: m.labeled_count,
                test_accuracy: m.test_accuracy,
            });
        }
    }
    rows
}

fn mean_curve(name: &str, result: &ExperimentResult) -> Series {
    Series {
        label: name.to_string(),
        points: result
            .labeled_counts
            .iter()
            .zip(&result.mean_accuracy)
            .map(|(&n, &acc)| (n as f64, acc))
            .collect(),
    }
}

pub fn cmd_run(
    config_path: Option<&Path>,
    out_dir: &Path,
    sets: &[String],
    seed: Option<u64>,
    dump_snapshots: bool,
) -> CliResult<()> {
    let config = load_config(config_path, sets, seed)?;
    let experiments = config.to_experiments()?;
    ensure_dir(out_dir)?;

    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut artifacts = vec!["metrics.csv".to_string(), "curves.svg".to_string()];

    for (name, cfg) in &experiments {
        let result = if dump_snapshots && cfg.strategy.kind.is_sequential() {
            let snap_dir = out_dir.join("snapshots");
            ensure_dir(&snap_dir)?;
            let mut written: Vec<String> = Vec::new();
            let result = {
                let mut observer = |trial: usize,
                                    round: usize,
                                    tensor: &SnapshotTensor|
                 -> alab_core::Result<()> {
                    let file = format!("{name}_trial{trial}_round{round}.csv");
                    write_snapshot_csv(tensor, snap_dir.join(&file))?;
                    written.push(format!("snapshots/{file}"));
                    Ok(())
                };
                run_experiment_observed(cfg, Some(&mut observer))?
            };
            artifacts.extend(written);
            result
        } else {
            run_experiment(cfg)?
        };
        println!(
            "{name}: final mean accuracy {:.4} at {} labels ({} trials)",
            result.final_mean_accuracy(),
            result.labeled_counts.last().copied().unwrap_or(0),
            cfg.trials
        );
        rows.extend(metrics_rows(name, &result));
        curves.push(mean_curve(name, &result));
    }

    write_metrics_csv(&out_dir.join("metrics.csv"), &rows)?;
    let svg = render_line_chart("Mean test accuracy", "labeled samples", "accuracy", &curves);
    fs::write(out_dir.join("curves.svg"), svg)
        .map_err(|e| CliError::runtime(format!("cannot write curves.svg: {e}")))?;

    let manifest = RunManifest::new("run", config.entries().clone(), artifacts);
    write_manifest(&out_dir.join("manifest.json"), &manifest)
}

pub fn cmd_sweep(
    config_path: Option<&Path>,
    out_dir: &Path,
    param: &str,
    sets: &[String],
    seed: Option<u64>,
) -> CliResult<()> {
    let base = load_config(config_path, sets, seed)?;
    let (key, value_list) = param
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("--param expects key=v1,v2,..., got '{param}'")))?;
    let key = key.trim();
    let kind = key_kind(key)
        .ok_or_else(|| CliError::usage(format!("unknown sweep parameter '{key}'")))?;
    if !kind.is_numeric() {
        return Err(CliError::usage(format!("sweep parameter '{key}' is not numeric")));
    }
    let values: Vec<String> = value_list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if values.is_empty() {
        return Err(CliError::usage(format!("--param {key}= lists no values")));
    }
    ensure_dir(out_dir)?;

    let mut table = String::from("param,value,strategy,trial,round,labeled_count,test_accuracy\n");
    let mut final_points: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut strategy_order = Vec::new();
    for value in &values {
        let mut config = base.clone();
        config.set(key, value)?;
        let numeric: f64 = value
            .parse()
            .map_err(|_| CliError::usage(format!("sweep value '{value}' is not numeric")))?;
        for (name, cfg) in &config.to_experiments()? {
            let result = run_experiment(cfg)?;
            println!(
                "{key}={value} {name}: final mean accuracy {:.4}",
                result.final_mean_accuracy()
            );
            for row in metrics_rows(name, &result) {
                table.push_str(&format!(
                    "{key},{value},{},{},{},{},{:.6}\n",
                    row.strategy, row.trial, row.round, row.labeled_count, row.test_accuracy
                ));
            }
            if !strategy_order.contains(name) {
                strategy_order.push(name.clone());
            }
            final_points
                .entry(name.clone())
                .or_default()
                .push((numeric, result.final_mean_accuracy()));
        }
    }

    fs::write(out_dir.join("sweep.csv"), table)
        .map_err(|e| CliError::runtime(format!("cannot write sweep.csv: {e}")))?;
    let series: Vec<Series> = strategy_order
        .iter()
        .map(|name| Series { label: name.clone(), points: final_points[name].clone() })
        .collect();
    let svg = render_line_chart(
        &format!("Final accuracy vs {key}"),
        key,
        "final mean accuracy",
        &series,
    );
    fs::write(out_dir.join("sweep.svg"), svg)
        .map_err(|e| CliError::runtime(format!("cannot write sweep.svg: {e}")))?;

    let mut echo = base.entries().clone();
    echo.insert("sweep.param".to_string(), param.to_string());
    let manifest = RunManifest::new(
        "sweep",
        echo,
        vec!["sweep.csv".to_string(), "sweep.svg".to_string()],
    );
    write_manifest(&out_dir.join("manifest.json"), &manifest)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_gen_data(
    classes: usize,
    per_class: usize,
    dim: usize,
    center_scale: f64,
    noise_sigma: f64,
    seed: u64,
    out: &Path,
) -> CliResult<()> {
    let spec = BlobSpec {
        num_classes: classes,
        samples_per_class: per_class,
        dim,
        center_scale,
        noise_sigma,
        seed,
    };
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let split = generate_blobs(&spec).map_err(|e| CliError::usage(e.to_string()))?;
    write_csv_dataset(&split.train, out)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    println!(
        "wrote {} samples (d={}, C={}) to {}",
        split.train.len(),
        split.train.dim(),
        split.train.num_classes,
        out.display()
    );
    Ok(())
}

pub fn cmd_plot(inputs: &[PathBuf], out: &Path) -> CliResult<()> {
    let mut rows = Vec::new();
    for path in inputs {
        let file_rows = read_metrics_csv(path)?;
        if file_rows.is_empty() {
            return Err(CliError::usage(format!(
                "{}: no data rows to plot",
                path.display()
            )));
        }
        rows.extend(file_rows);
    }

    let mut strategy_order: Vec<String> = Vec::new();
    let mut by_round: BTreeMap<(String, usize), (f64, f64, usize)> = BTreeMap::new();
    for row in &rows {
        if !strategy_order.contains(&row.strategy) {
            strategy_order.push(row.strategy.clone());
        }
        let slot = by_round
            .entry((row.strategy.clone(), row.round))
            .or_insert((0.0, 0.0, 0));
        slot.0 += row.labeled_count as f64;
        slot.1 += row.test_accuracy;
        slot.2 += 1;
    }

    let series: Vec<Series> = strategy_order
        .iter()
        .map(|name| {
            let points = by_round
                .iter()
                .filter(|((s, _), _)| s == name)
                .map(|(_, &(x_sum, y_sum, n))| (x_sum / n as f64, y_sum / n as f64))
                .collect();
            Series { label: name.clone(), points }
        })
        .collect();

    let svg = render_line_chart("Mean test accuracy", "labeled samples", "accuracy", &series);
    fs::write(out, svg)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", out.display())))?;
    println!("wrote {}", out.display());
    Ok(())
}
