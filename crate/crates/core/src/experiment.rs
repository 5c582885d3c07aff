//! The experiment driver: initialize the pool, train with snapshot
//! recording, score, select, annotate, repeat until the budget; run several
//! paired trials and aggregate their accuracy curves.
//!
//! A trial with initial count k, per-round batch b, and budget B performs
//! (B - k) / b selections. Training rounds are indexed 0..=R: round r trains
//! from scratch on the current labeled set, evaluates on the test split, and
//! (until the budget is met) selects and annotates the next b samples. Each
//! round's metrics list the samples that were annotated to form its labeled
//! set, so the initial round's selection is empty.

use std::path::PathBuf;
use std::time::Instant;

use crate::acquisition::{
    score_pool, select_top_b, ScoreInput, SnapshotRecorder, SnapshotTensor, StrategySpec,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::nn::{self, PredSpace, TrainConfig};
use crate::pool::{generate_blobs, load_csv_dataset, BlobSpec, Dataset, PoolState};
use crate::seeding;

/// Where the sample universe comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Blobs(BlobSpec),
    Csv(PathBuf),
}

/// Materialized train pool and test split.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub train: Dataset,
    pub test: Dataset,
}

/// Everything one experiment needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub initial_k: usize,
    pub batch_b: usize,
    pub budget: usize,
    pub hidden_layers: Vec<usize>,
    pub train: TrainConfig,
    pub strategy: StrategySpec,
    pub trials: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_k == 0 {
            return Err(Error::invalid_argument("initial_k must be >= 1"));
        }
        if self.initial_k > self.budget {
            return Err(Error::invalid_argument(format!(
                "initial_k {} exceeds budget {}",
                self.initial_k, self.budget
            )));
        }
        if self.batch_b == 0 {
            return Err(Error::invalid_argument("batch_b must be >= 1"));
        }
        if !(self.budget - self.initial_k).is_multiple_of(self.batch_b) {
            return Err(Error::invalid_argument(format!(
                "budget - initial_k = {} is not a multiple of batch_b {}",
                self.budget - self.initial_k,
                self.batch_b
            )));
        }
        if self.trials == 0 {
            return Err(Error::invalid_argument("trials must be >= 1"));
        }
        self.train.validate()?;
        self.strategy.validate()?;
        if let Some(schedule) = &self.strategy.schedule {
            if schedule.epochs()[0] != self.train.epochs {
                return Err(Error::invalid_argument(format!(
                    "schedule starts at epoch {} but training runs {} epochs",
                    schedule.epochs()[0],
                    self.train.epochs
                )));
            }
        }
        Ok(())
    }

    /// Number of selection steps: (budget - initial_k) / batch_b.
    pub fn selection_rounds(&self) -> usize {
        (self.budget - self.initial_k) / self.batch_b
    }

    /// Builds or loads the train pool and test split. Pure in the config,
    /// so repeated calls see identical data.
    pub fn materialize_data(&self) -> Result<ExperimentData> {
        match &self.source {
            DataSource::Blobs(spec) => {
                let split = generate_blobs(spec)?;
                Ok(ExperimentData {
                    train: split.train,
                    test: split.test,
                })
            }
            DataSource::Csv(path) => {
                let dataset = load_csv_dataset(path)?;
                split_holdout(dataset, self.master_seed)
            }
        }
    }
}

/// Stratified 80/20 holdout for file-based datasets, seeded by the master
/// seed. Classes with a single sample stay entirely in the train pool.
fn split_holdout(dataset: Dataset, master_seed: u64) -> Result<ExperimentData> {
    use rand::seq::SliceRandom;
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.num_classes];
    for (i, &label) in dataset.labels.iter().enumerate() {
        per_class[label].push(i);
    }
    let mut rng = seeding::rng_from(seeding::holdout_seed(master_seed));
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for mut members in per_class {
        members.shuffle(&mut rng);
        let n_test = if members.len() >= 2 {
            (members.len() / 5).max(1)
        } else {
            0
        };
        test_idx.extend_from_slice(&members[..n_test]);
        train_idx.extend_from_slice(&members[n_test..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let (train_f, train_l) = dataset.gather(&train_idx);
    let (test_f, test_l) = dataset.gather(&test_idx);
    Ok(ExperimentData {
        train: Dataset::new(train_f, train_l, dataset.num_classes)?,
        test: Dataset::new(test_f, test_l, dataset.num_classes)?,
    })
}

/// What one training round recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub labeled_count: usize,
    pub test_accuracy: f64,
    /// Samples annotated to form this round's labeled set; empty for the
    /// initial round.
    pub selected: Vec<usize>,
    pub epoch_losses: Vec<f64>,
}

/// Return value of [`run_round`]: `metrics.selected` is left empty here, and
/// `selection` holds the samples this round annotated at its end; the trial
/// loop attributes each selection to the round whose training it feeds.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub metrics: RoundMetrics,
    pub selection: Vec<usize>,
    pub snapshots: Option<SnapshotTensor>,
}

/// Callback receiving (trial, round, tensor) for every recorded snapshot.
pub type SnapshotObserver<'a> = &'a mut dyn FnMut(usize, usize, &SnapshotTensor) -> Result<()>;

/// One training round: re-initialize the model from the trial's seed stream,
/// train on the labeled set (recording snapshots at scheduled epochs for
/// sequential strategies), evaluate, then score, select, and annotate unless
/// the budget is already met.
pub fn run_round(
    pool: &mut PoolState<'_>,
    test: &Dataset,
    cfg: &ExperimentConfig,
    trial_seed: u64,
    round: usize,
) -> Result<RoundOutcome> {
    let start = Instant::now();
    if pool.n_labeled() == 0 {
        return Err(Error::invalid_state("round started with no labeled samples"));
    }
    let trained_on = pool.n_labeled();
    let select_b = if trained_on < cfg.budget { cfg.batch_b } else { 0 };

    let mut layer_sizes = Vec::with_capacity(cfg.hidden_layers.len() + 2);
    layer_sizes.push(pool.dataset().dim());
    layer_sizes.extend_from_slice(&cfg.hidden_layers);
    layer_sizes.push(pool.dataset().num_classes);
    let model = nn::init_model(&layer_sizes, seeding::model_seed(trial_seed, round))?;

    let mut round_train = cfg.train.clone();
    round_train.seed = seeding::mix(
        seeding::shuffle_seed(trial_seed, round),
        cfg.train.seed,
        0,
    );

    let (features, labels) = pool.labeled_data();
    let unlabeled_features = if select_b > 0 {
        Some(pool.unlabeled_features())
    } else {
        None
    };
    let mut recorder = if select_b > 0 && cfg.strategy.kind.is_sequential() {
        let schedule = cfg.strategy.schedule.clone().ok_or_else(|| {
            Error::invalid_state("sequential strategy without a schedule survived validation")
        })?;
        Some(SnapshotRecorder::new(
            schedule,
            cfg.strategy.space,
            pool.unlabeled().to_vec(),
        ))
    } else {
        None
    };

    let (trained, epoch_losses) = nn::train(model, &features, &labels, &round_train, |epoch, m| {
        if let Some(rec) = recorder.as_mut() {
            if rec.wants(epoch) {
                let preds = nn::predict_pool(
                    m,
                    unlabeled_features.as_ref().unwrap(),
                    cfg.strategy.space,
                )?;
                rec.record(epoch, preds)?;
            }
        }
        Ok(())
    })?;

    let test_accuracy = nn::evaluate_accuracy(&trained, &test.features, &test.labels)?;

    let mut selection = Vec::new();
    let mut snapshots = None;
    if select_b > 0 {
        let mut round_spec = cfg.strategy.clone();
        round_spec.seed = seeding::mix(
            seeding::score_seed(trial_seed, round),
            cfg.strategy.seed,
            0,
        );
        let scores = match recorder.take() {
            Some(rec) => {
                let tensor = rec.finish()?;
                let scores = score_pool(&round_spec, ScoreInput::Snapshots(&tensor))?;
                snapshots = Some(tensor);
                scores
            }
            None => {
                let ufeats = unlabeled_features.as_ref().unwrap();
                let predictions = nn::predict_pool(&trained, ufeats, PredSpace::Softmax)?;
                score_pool(
                    &round_spec,
                    ScoreInput::Final {
                        predictions: &predictions,
                        pool_index_map: pool.unlabeled(),
                    },
                )?
            }
        };
        if select_b > pool.n_unlabeled() {
            log::warn!(
                "round {round}: requested {select_b} samples but only {} remain, clamping",
                pool.n_unlabeled()
            );
        }
        selection = select_top_b(&scores, select_b);
        pool.annotate(&selection)?;
    }

    log::info!(
        "round {round}: n_l={trained_on} accuracy={test_accuracy:.4} selected={} wall={:.2?}",
        selection.len(),
        start.elapsed()
    );

    Ok(RoundOutcome {
        metrics: RoundMetrics {
            round,
            labeled_count: trained_on,
            test_accuracy,
            selected: Vec::new(),
            epoch_losses,
        },
        selection,
        snapshots,
    })
}

fn run_trial_on(
    data: &ExperimentData,
    cfg: &ExperimentConfig,
    trial: usize,
    mut observer: Option<SnapshotObserver<'_>>,
) -> Result<Vec<RoundMetrics>> {
    let trial_seed = seeding::trial_seed(cfg.master_seed, trial);
    let mut pool = PoolState::new(&data.train);
    let mut init_rng = seeding::rng_from(seeding::init_seed(trial_seed));
    pool.balanced_initial_sample(cfg.initial_k, &mut init_rng)?;

    let rounds = cfg.selection_rounds();
    let mut metrics = Vec::with_capacity(rounds + 1);
    let mut selections = Vec::with_capacity(rounds + 1);
    for round in 0..=rounds {
        let outcome = run_round(&mut pool, &data.test, cfg, trial_seed, round)?;
        if let (Some(obs), Some(tensor)) = (observer.as_mut(), &outcome.snapshots) {
            obs(trial, round, tensor)?;
        }
        metrics.push(outcome.metrics);
        selections.push(outcome.selection);
    }
    for round in (1..=rounds).rev() {
        metrics[round].selected = std::mem::take(&mut selections[round - 1]);
    }
    Ok(metrics)
}

/// One complete trial: balanced initial sample, then training rounds until
/// the budget. The trial's seed stream is derived from (master_seed, trial),
/// and the initial sample is drawn before the strategy is consulted, so
/// trials are paired across strategies under one master seed.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<Vec<RoundMetrics>> {
    cfg.validate()?;
    let data = cfg.materialize_data()?;
    run_trial_on(&data, cfg, trial, None)
}

/// Per-trial metric sequences plus the accuracy curve aggregated across
/// trials (mean and population standard deviation per round).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub trials: Vec<Vec<RoundMetrics>>,
    pub labeled_counts: Vec<usize>,
    pub mean_accuracy: Vec<f64>,
    pub std_accuracy: Vec<f64>,
}

impl ExperimentResult {
    pub fn final_mean_accuracy(&self) -> f64 {
        *self.mean_accuracy.last().unwrap()
    }
}

/// Runs all trials and aggregates. With an observer, trials run sequentially
/// and every recorded snapshot tensor is passed to it; without one, trials
/// run on the execution backend (data-parallel when enabled).
pub fn run_experiment_observed(
    cfg: &ExperimentConfig,
    mut observer: Option<SnapshotObserver<'_>>,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let data = cfg.materialize_data()?;
    log::info!(
        "experiment: strategy={} trials={} rounds={} train_n={} test_n={} backend={}",
        cfg.strategy.kind,
        cfg.trials,
        cfg.selection_rounds(),
        data.train.len(),
        data.test.len(),
        exec::backend()
    );

    let per_trial: Vec<Vec<RoundMetrics>> = match observer.as_mut() {
        Some(obs) => {
            let mut all = Vec::with_capacity(cfg.trials);
            for trial in 0..cfg.trials {
                all.push(run_trial_on(&data, cfg, trial, Some(&mut **obs))?);
            }
            all
        }
        None => exec::map_indexed(cfg.trials, |trial| run_trial_on(&data, cfg, trial, None))
            .into_iter()
            .collect::<Result<Vec<_>>>()?,
    };

    let round_count = per_trial[0].len();
    if per_trial.iter().any(|t| t.len() != round_count) {
        return Err(Error::invalid_state("trials produced unequal round counts"));
    }
    let n = cfg.trials as f64;
    let mut mean_accuracy = Vec::with_capacity(round_count);
    let mut std_accuracy = Vec::with_capacity(round_count);
    for r in 0..round_count {
        let mean = per_trial.iter().map(|t| t[r].test_accuracy).sum::<f64>() / n;
        let var = per_trial
            .iter()
            .map(|t| (t[r].test_accuracy - mean).powi(2))
            .sum::<f64>()
            / n;
        mean_accuracy.push(mean);
        std_accuracy.push(var.sqrt());
    }
    let labeled_counts = per_trial[0].iter().map(|m| m.labeled_count).collect();

    Ok(ExperimentResult {
        trials: per_trial,
        labeled_counts,
        mean_accuracy,
        std_accuracy,
    })
}

/// [`run_experiment_observed`] without snapshot observation.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_observed(cfg, None)
}
