//! Acquisition scoring: the epoch-selection schedule, spatial scorers
//! (entropy, least confidence, random), sequential scorers over per-epoch
//! prediction snapshots (variance, absolute increase), and top-b selection.
//!
//! All scores follow one convention: higher score = selected first. The
//! stability criterion therefore stores the prediction variance, an
//! instability measure, so selecting its maximum picks the least stable
//! samples.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::matrix::Matrix;
use crate::nn::PredSpace;
use crate::seeding;

/// The epochs at which prediction snapshots are recorded, in schedule order
/// e_1 > e_2 > ... > e_n with e_i = N_e - (i-1) * interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochSchedule {
    epochs: Vec<usize>,
    interval: usize,
}

impl EpochSchedule {
    pub fn epochs(&self) -> &[usize] {
        &self.epochs
    }

    pub fn interval(&self) -> usize {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn contains(&self, epoch: usize) -> bool {
        self.epochs.contains(&epoch)
    }
}

/// Builds the schedule {N_e, N_e-interval, ..., N_e-(n-1)*interval}.
pub fn epoch_schedule(total_epochs: usize, interval: usize, count: usize) -> Result<EpochSchedule> {
    if total_epochs == 0 || interval == 0 || count == 0 {
        return Err(Error::invalid_argument(
            "total_epochs, interval, and count must all be >= 1",
        ));
    }
    let span = (count - 1) * interval;
    if span + 1 > total_epochs {
        return Err(Error::invalid_argument(format!(
            "schedule underflows: epoch {total_epochs} - {span} < 1"
        )));
    }
    let epochs = (0..count).map(|i| total_epochs - i * interval).collect();
    Ok(EpochSchedule { epochs, interval })
}

/// Stacked per-epoch prediction matrices over one round's unlabeled set,
/// ordered by schedule position. `pool_index_map[r]` is the pool index of
/// row r in every slice.
#[derive(Debug, Clone)]
pub struct SnapshotTensor {
    epochs: Vec<usize>,
    space: PredSpace,
    pool_index_map: Vec<usize>,
    slices: Vec<Matrix>,
}

impl SnapshotTensor {
    pub fn new(
        epochs: Vec<usize>,
        space: PredSpace,
        pool_index_map: Vec<usize>,
        slices: Vec<Matrix>,
    ) -> Result<SnapshotTensor> {
        if epochs.is_empty() || slices.len() != epochs.len() {
            return Err(Error::invalid_argument(format!(
                "{} slices for {} scheduled epochs",
                slices.len(),
                epochs.len()
            )));
        }
        if !epochs.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::invalid_argument(
                "snapshot epochs must be strictly decreasing",
            ));
        }
        let cols = slices[0].cols();
        for slice in &slices {
            if slice.rows() != pool_index_map.len() || slice.cols() != cols {
                return Err(Error::invalid_argument("snapshot slices must share shape"));
            }
            if space == PredSpace::Softmax {
                for row in slice.iter_rows() {
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-6 {
                        return Err(Error::invalid_argument(format!(
                            "softmax snapshot row sums to {sum}"
                        )));
                    }
                }
            }
        }
        Ok(SnapshotTensor {
            epochs,
            space,
            pool_index_map,
            slices,
        })
    }

    pub fn epochs(&self) -> &[usize] {
        &self.epochs
    }

    pub fn space(&self) -> PredSpace {
        self.space
    }

    pub fn pool_index_map(&self) -> &[usize] {
        &self.pool_index_map
    }

    pub fn slices(&self) -> &[Matrix] {
        &self.slices
    }

    pub fn n_rows(&self) -> usize {
        self.pool_index_map.len()
    }

    pub fn num_classes(&self) -> usize {
        self.slices[0].cols()
    }

    /// The per-epoch prediction vectors of one row, in schedule order.
    pub fn sample_views(&self, row: usize) -> Vec<&[f64]> {
        self.slices.iter().map(|s| s.row(row)).collect()
    }
}

/// Accumulates snapshots as training passes through scheduled epochs.
/// Epochs arrive in ascending training order; the finished tensor is in
/// descending schedule order.
#[derive(Debug)]
pub struct SnapshotRecorder {
    schedule: EpochSchedule,
    space: PredSpace,
    pool_index_map: Vec<usize>,
    recorded: Vec<Option<Matrix>>,
}

impl SnapshotRecorder {
    pub fn new(
        schedule: EpochSchedule,
        space: PredSpace,
        pool_index_map: Vec<usize>,
    ) -> SnapshotRecorder {
        let recorded = vec![None; schedule.len()];
        SnapshotRecorder {
            schedule,
            space,
            pool_index_map,
            recorded,
        }
    }

    pub fn wants(&self, epoch: usize) -> bool {
        self.schedule.contains(epoch)
    }

    pub fn record(&mut self, epoch: usize, predictions: Matrix) -> Result<()> {
        let pos = self
            .schedule
            .epochs()
            .iter()
            .position(|&e| e == epoch)
            .ok_or_else(|| Error::invalid_argument(format!("epoch {epoch} not in schedule")))?;
        if self.recorded[pos].is_some() {
            return Err(Error::invalid_state(format!("epoch {epoch} already recorded")));
        }
        self.recorded[pos] = Some(predictions);
        Ok(())
    }

    pub fn finish(self) -> Result<SnapshotTensor> {
        let mut slices = Vec::with_capacity(self.recorded.len());
        for (slot, &epoch) in self.recorded.into_iter().zip(self.schedule.epochs()) {
            match slot {
                Some(m) => slices.push(m),
                None => {
                    return Err(Error::invalid_state(format!(
                        "scheduled epoch {epoch} was never recorded"
                    )))
                }
            }
        }
        SnapshotTensor::new(
            self.schedule.epochs().to_vec(),
            self.space,
            self.pool_index_map,
            slices,
        )
    }
}

/// The acquisition criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Random,
    Entropy,
    LeastConfidence,
    PredictionStability,
    AbsoluteIncrease,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Random,
        StrategyKind::Entropy,
        StrategyKind::LeastConfidence,
        StrategyKind::PredictionStability,
        StrategyKind::AbsoluteIncrease,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Entropy => "entropy",
            StrategyKind::LeastConfidence => "least_confidence",
            StrategyKind::PredictionStability => "prediction_stability",
            StrategyKind::AbsoluteIncrease => "absolute_increase",
        }
    }

    /// Sequential kinds consume per-epoch snapshots; spatial kinds consume
    /// only the final model's outputs.
    pub fn is_sequential(self) -> bool {
        matches!(
            self,
            StrategyKind::PredictionStability | StrategyKind::AbsoluteIncrease
        )
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<StrategyKind> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = StrategyKind::ALL.iter().map(|k| k.name()).collect();
                Error::invalid_argument(format!(
                    "unknown strategy '{s}', valid kinds: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// A fully specified acquisition strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub space: PredSpace,
    pub schedule: Option<EpochSchedule>,
    pub seed: u64,
}

impl StrategySpec {
    pub fn spatial(kind: StrategyKind) -> StrategySpec {
        StrategySpec {
            kind,
            space: PredSpace::Softmax,
            schedule: None,
            seed: 0,
        }
    }

    pub fn sequential(kind: StrategyKind, space: PredSpace, schedule: EpochSchedule) -> StrategySpec {
        StrategySpec {
            kind,
            space,
            schedule: Some(schedule),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.is_sequential() {
            match &self.schedule {
                Some(s) if s.len() >= 2 => {}
                Some(_) => {
                    return Err(Error::invalid_argument(format!(
                        "{} needs a schedule of at least 2 epochs",
                        self.kind
                    )))
                }
                None => {
                    return Err(Error::invalid_argument(format!(
                        "{} needs an epoch schedule",
                        self.kind
                    )))
                }
            }
        } else if self.space != PredSpace::Softmax {
            return Err(Error::invalid_argument(format!(
                "{} scores softmax outputs, not {}",
                self.kind,
                self.space.name()
            )));
        }
        Ok(())
    }
}

/// Scores aligned with `pool_index_map`; higher score = selected first.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub pool_index_map: Vec<usize>,
}

fn check_softmax_vec(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-4 {
        return Err(Error::invalid_argument(format!(
            "probability vector sums to {sum}"
        )));
    }
    if p.iter().any(|&v| !(0.0..=1.0 + 1e-9).contains(&v)) {
        return Err(Error::invalid_argument(
            "probability components must lie in [0,1]",
        ));
    }
    Ok(())
}

/// Shannon entropy -sum p ln p (natural log, 0 ln 0 = 0).
pub fn entropy_score(p: &[f64]) -> Result<f64> {
    check_softmax_vec(p)?;
    Ok(p.iter()
        .map(|&v| if v > 0.0 { -v * v.ln() } else { 0.0 })
        .sum())
}

/// 1 - max class probability.
pub fn least_confidence_score(p: &[f64]) -> Result<f64> {
    check_softmax_vec(p)?;
    Ok(1.0 - p.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

fn check_epoch_vectors(epoch_vectors: &[&[f64]]) -> Result<()> {
    if epoch_vectors.len() < 2 {
        return Err(Error::invalid_argument(format!(
            "need at least 2 epoch vectors, got {}",
            epoch_vectors.len()
        )));
    }
    let width = epoch_vectors[0].len();
    if epoch_vectors.iter().any(|v| v.len() != width) {
        return Err(Error::invalid_argument("epoch vectors must share a width"));
    }
    Ok(())
}

/// Per-class population variance across epochs, summed over classes.
/// High variance = low prediction stability = high selection priority.
pub fn variance_score(epoch_vectors: &[&[f64]]) -> Result<f64> {
    check_epoch_vectors(epoch_vectors)?;
    let n = epoch_vectors.len() as f64;
    let width = epoch_vectors[0].len();
    let mut total = 0.0;
    for class in 0..width {
        let mean: f64 = epoch_vectors.iter().map(|v| v[class]).sum::<f64>() / n;
        let var: f64 = epoch_vectors
            .iter()
            .map(|v| (v[class] - mean).powi(2))
            .sum::<f64>()
            / n;
        total += var;
    }
    Ok(total)
}

/// Sum of elementwise absolute differences between consecutive scheduled
/// epochs, summed over classes.
pub fn absolute_increase_score(epoch_vectors: &[&[f64]]) -> Result<f64> {
    check_epoch_vectors(epoch_vectors)?;
    let mut total = 0.0;
    for pair in epoch_vectors.windows(2) {
        for (a, b) in pair[1].iter().zip(pair[0].iter()) {
            total += (a - b).abs();
        }
    }
    Ok(total)
}

/// What a strategy scores: the final model's predictions (spatial kinds)
/// or the round's snapshot tensor (sequential kinds).
#[derive(Debug, Clone, Copy)]
pub enum ScoreInput<'a> {
    Final {
        predictions: &'a Matrix,
        pool_index_map: &'a [usize],
    },
    Snapshots(&'a SnapshotTensor),
}

/// Applies the strategy's per-sample scorer row-wise over the pool.
pub fn score_pool(spec: &StrategySpec, input: ScoreInput<'_>) -> Result<ScoreVector> {
    spec.validate()?;
    match (spec.kind, input) {
        (StrategyKind::Random, ScoreInput::Final { predictions, pool_index_map }) => {
            if predictions.rows() != pool_index_map.len() {
                return Err(Error::invalid_argument(
                    "prediction rows must match pool_index_map",
                ));
            }
            let mut rng = seeding::rng_from(spec.seed);
            let scores = (0..pool_index_map.len())
                .map(|_| rng.random_range(0.0..1.0))
                .collect();
            Ok(ScoreVector {
                scores,
                pool_index_map: pool_index_map.to_vec(),
            })
        }
        (StrategyKind::Entropy | StrategyKind::LeastConfidence, ScoreInput::Final { predictions, pool_index_map }) => {
            if predictions.rows() != pool_index_map.len() {
                return Err(Error::invalid_argument(
                    "prediction rows must match pool_index_map",
                ));
            }
            let kind = spec.kind;
            let raw = exec::map_indexed(predictions.rows(), |r| {
                let row = predictions.row(r);
                match kind {
                    StrategyKind::Entropy => entropy_score(row),
                    _ => least_confidence_score(row),
                }
            });
            let scores = raw.into_iter().collect::<Result<Vec<f64>>>()?;
            Ok(ScoreVector {
                scores,
                pool_index_map: pool_index_map.to_vec(),
            })
        }
        (StrategyKind::PredictionStability | StrategyKind::AbsoluteIncrease, ScoreInput::Snapshots(tensor)) => {
            if tensor.space() != spec.space {
                return Err(Error::invalid_argument(format!(
                    "snapshot space {} does not match strategy space {}",
                    tensor.space().name(),
                    spec.space.name()
                )));
            }
            let kind = spec.kind;
            let raw = exec::map_indexed(tensor.n_rows(), |r| {
                let views = tensor.sample_views(r);
                match kind {
                    StrategyKind::PredictionStability => variance_score(&views),
                    _ => absolute_increase_score(&views),
                }
            });
            let scores = raw.into_iter().collect::<Result<Vec<f64>>>()?;
            Ok(ScoreVector {
                scores,
                pool_index_map: tensor.pool_index_map().to_vec(),
            })
        }
        (kind, _) => Err(Error::invalid_argument(format!(
            "strategy {kind} received the wrong score input"
        ))),
    }
}

/// The b pool indices with highest scores, ties broken by lower pool index,
/// returned ascending. b larger than the pool clamps to everything.
pub fn select_top_b(scores: &ScoreVector, b: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.scores.len()).collect();
    order.sort_by(|&i, &j| {
        scores.scores[j]
            .partial_cmp(&scores.scores[i])
            .unwrap()
            .then(scores.pool_index_map[i].cmp(&scores.pool_index_map[j]))
    });
    let take = b.min(order.len());
    let mut picked: Vec<usize> = order[..take]
        .iter()
        .map(|&i| scores.pool_index_map[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Dumps one round's snapshot tensor: columns `pool_index,epoch,c0..c{C-1}`,
/// rows sorted by pool index, then schedule order.
pub fn write_snapshot_csv(tensor: &SnapshotTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let classes = tensor.num_classes();
    let mut out = String::from("pool_index,epoch");
    for c in 0..classes {
        out.push_str(&format!(",c{c}"));
    }
    out.push('\n');

    let mut order: Vec<usize> = (0..tensor.n_rows()).collect();
    order.sort_by_key(|&r| tensor.pool_index_map()[r]);
    for r in order {
        for (i, &epoch) in tensor.epochs().iter().enumerate() {
            out.push_str(&format!("{},{epoch}", tensor.pool_index_map()[r]));
            for v in tensor.slices()[i].row(r) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::softmax;
    use proptest::prelude::*;

    #[test]
    fn schedule_matches_hand_values() {
        let s = epoch_schedule(164, 5, 5).unwrap();
        assert_eq!(s.epochs(), &[164, 159, 154, 149, 144]);
        let s = epoch_schedule(164, 1, 5).unwrap();
        assert_eq!(s.epochs(), &[164, 163, 162, 161, 160]);
        assert!(epoch_schedule(10, 5, 4).is_err());
        assert!(epoch_schedule(10, 0, 2).is_err());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn entropy_matches_hand_values() {
        let uniform = vec![0.1; 10];
        assert!((entropy_score(&uniform).unwrap() - 10.0f64.ln()).abs() < 1e-12);
        assert_eq!(entropy_score(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!((entropy_score(&[0.5, 0.5]).unwrap() - 0.6931).abs() < 1e-4);
        assert!(entropy_score(&[0.5, 0.2]).is_err());
        assert!(entropy_score(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn least_confidence_matches_hand_values() {
        assert_eq!(least_confidence_score(&[0.0, 1.0]).unwrap(), 0.0);
        assert!((least_confidence_score(&[0.25; 4]).unwrap() - 0.75).abs() < 1e-12);
        assert!((least_confidence_score(&[0.6, 0.3, 0.1]).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn variance_matches_hand_values() {
        let same = variance_score(&[&[0.3, 0.7], &[0.3, 0.7], &[0.3, 0.7]]).unwrap();
        assert!(same.abs() < 1e-12);
        let flip = variance_score(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!((flip - 0.5).abs() < 1e-12);
        let scalar = variance_score(&[&[0.0], &[0.5], &[1.0]]).unwrap();
        assert!((scalar - 1.0 / 6.0).abs() < 1e-12);
        assert!(variance_score(&[&[1.0, 0.0]]).is_err());
    }

    #[test]
    fn absolute_increase_matches_hand_values() {
        let same = absolute_increase_score(&[&[0.3, 0.7], &[0.3, 0.7]]).unwrap();
        assert_eq!(same, 0.0);
        let flip = absolute_increase_score(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!((flip - 2.0).abs() < 1e-12);
        let scalar = absolute_increase_score(&[&[0.0], &[0.5], &[1.0]]).unwrap();
        assert!((scalar - 1.0).abs() < 1e-12);
        assert!(absolute_increase_score(&[&[1.0]]).is_err());
    }

    fn tensor_from_slices(space: PredSpace, pool: Vec<usize>, slices: Vec<Matrix>) -> SnapshotTensor {
        let epochs = (0..slices.len()).map(|i| 10 - i).collect();
        SnapshotTensor::new(epochs, space, pool, slices).unwrap()
    }

    #[test]
    fn score_pool_composes_row_wise() {
        let preds = Matrix::from_row_vecs(
            2,
            &[vec![0.5, 0.5], vec![0.9, 0.1], vec![0.2, 0.8]],
        )
        .unwrap();
        let pool = vec![3, 5, 8];
        let spec = StrategySpec::spatial(StrategyKind::Entropy);
        let sv = score_pool(&spec, ScoreInput::Final { predictions: &preds, pool_index_map: &pool }).unwrap();
        assert_eq!(sv.pool_index_map, pool);
        for (r, &s) in sv.scores.iter().enumerate() {
            assert_eq!(s, entropy_score(preds.row(r)).unwrap());
        }
    }

    #[test]
    fn stability_of_identical_slices_is_zero() {
        let slice = Matrix::from_row_vecs(2, &[vec![0.4, 0.6], vec![0.7, 0.3]]).unwrap();
        let tensor = tensor_from_slices(
            PredSpace::Softmax,
            vec![0, 1],
            vec![slice.clone(), slice],
        );
        let spec = StrategySpec::sequential(
            StrategyKind::PredictionStability,
            PredSpace::Softmax,
            epoch_schedule(10, 1, 2).unwrap(),
        );
        let sv = score_pool(&spec, ScoreInput::Snapshots(&tensor)).unwrap();
        assert_eq!(sv.scores, vec![0.0, 0.0]);
    }

    #[test]
    fn random_scores_are_seed_deterministic() {
        let preds = Matrix::zeros(4, 2);
        let preds = {
            let mut m = preds;
            for r in 0..4 {
                m.row_mut(r).copy_from_slice(&[0.5, 0.5]);
            }
            m
        };
        let pool = vec![0, 1, 2, 3];
        let mut spec = StrategySpec::spatial(StrategyKind::Random);
        spec.seed = 99;
        let a = score_pool(&spec, ScoreInput::Final { predictions: &preds, pool_index_map: &pool }).unwrap();
        let b = score_pool(&spec, ScoreInput::Final { predictions: &preds, pool_index_map: &pool }).unwrap();
        assert_eq!(a, b);
        assert!(a.scores.iter().all(|&s| (0.0..1.0).contains(&s)));
    }

    #[test]
    fn kind_input_mismatch_is_rejected() {
        let slice = Matrix::from_row_vecs(2, &[vec![0.5, 0.5]]).unwrap();
        let tensor = tensor_from_slices(PredSpace::Softmax, vec![0], vec![slice.clone(), slice.clone()]);
        let spatial = StrategySpec::spatial(StrategyKind::Entropy);
        assert!(score_pool(&spatial, ScoreInput::Snapshots(&tensor)).is_err());
        let sequential = StrategySpec::sequential(
            StrategyKind::PredictionStability,
            PredSpace::Softmax,
            epoch_schedule(10, 1, 2).unwrap(),
        );
        let pool = vec![0];
        assert!(score_pool(
            &sequential,
            ScoreInput::Final { predictions: &slice, pool_index_map: &pool }
        )
        .is_err());
    }

    #[test]
    fn select_top_b_matches_hand_ordering() {
        let sv = ScoreVector {
            scores: vec![0.1, 0.9, 0.5],
            pool_index_map: vec![4, 7, 9],
        };
        assert_eq!(select_top_b(&sv, 2), vec![7, 9]);
        assert_eq!(select_top_b(&sv, 0), Vec::<usize>::new());
        assert_eq!(select_top_b(&sv, 10), vec![4, 7, 9]);

        let ties = ScoreVector {
            scores: vec![0.5, 0.5, 0.5],
            pool_index_map: vec![12, 3, 8],
        };
        assert_eq!(select_top_b(&ties, 1), vec![3]);
        assert_eq!(select_top_b(&ties, 2), vec![3, 8]);
    }

    #[test]
    fn strategy_names_round_trip() {
        for kind in StrategyKind::ALL {
            assert_eq!(kind.name().parse::<StrategyKind>().unwrap(), kind);
        }
        let err = "margin".parse::<StrategyKind>().unwrap_err().to_string();
        for kind in StrategyKind::ALL {
            assert!(err.contains(kind.name()), "{err}");
        }
    }

    #[test]
    fn spec_validation_enforces_kind_requirements() {
        let mut spec = StrategySpec::spatial(StrategyKind::Entropy);
        assert!(spec.validate().is_ok());
        spec.space = PredSpace::Logit;
        assert!(spec.validate().is_err());

        let sched = epoch_schedule(10, 1, 2).unwrap();
        let seq = StrategySpec::sequential(StrategyKind::AbsoluteIncrease, PredSpace::Softmax, sched);
        assert!(seq.validate().is_ok());
        let mut no_sched = seq.clone();
        no_sched.schedule = None;
        assert!(no_sched.validate().is_err());
        let mut short = seq;
        short.schedule = Some(epoch_schedule(10, 1, 1).unwrap());
        assert!(short.validate().is_err());
    }

    #[test]
    fn softmax_stability_ignores_logit_shifts_but_logit_variant_flips() {
        let a_logits = [vec![0.0, 0.0], vec![0.0, 0.0]];
        let b_logits = [vec![0.1, 0.0], vec![0.0, 0.1]];
        let shift = 10.0;
        let a_shifted: Vec<Vec<f64>> = vec![
            a_logits[0].iter().map(|v| v + shift).collect(),
            a_logits[1].clone(),
        ];

        let soft = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
            rows.iter().map(|r| softmax(r).unwrap()).collect()
        };
        let score_soft = |rows: &[Vec<f64>]| {
            let p = soft(rows);
            let views: Vec<&[f64]> = p.iter().map(|v| v.as_slice()).collect();
            variance_score(&views).unwrap()
        };
        let score_logit = |rows: &[Vec<f64>]| {
            let views: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
            variance_score(&views).unwrap()
        };

        assert!((score_soft(&a_logits) - score_soft(&a_shifted)).abs() < 1e-9);
        assert!(score_soft(&a_shifted) < score_soft(&b_logits));
        assert!(score_logit(&a_logits) < score_logit(&b_logits));
        assert!(score_logit(&a_shifted) > score_logit(&b_logits));
    }

    #[test]
    fn snapshot_recorder_requires_every_scheduled_epoch() {
        let sched = epoch_schedule(6, 2, 3).unwrap();
        let slice = || Matrix::from_row_vecs(2, &[vec![0.5, 0.5]]).unwrap();
        let mut rec = SnapshotRecorder::new(sched.clone(), PredSpace::Softmax, vec![9]);
        assert!(rec.wants(2) && rec.wants(4) && rec.wants(6));
        assert!(!rec.wants(3));
        rec.record(2, slice()).unwrap();
        assert!(rec.record(2, slice()).is_err());
        rec.record(6, slice()).unwrap();
        let unfinished = rec;
        assert!(unfinished.finish().is_err());

        let mut rec = SnapshotRecorder::new(sched, PredSpace::Softmax, vec![9]);
        for e in [2, 4, 6] {
            rec.record(e, slice()).unwrap();
        }
        let tensor = rec.finish().unwrap();
        assert_eq!(tensor.epochs(), &[6, 4, 2]);
        assert_eq!(tensor.pool_index_map(), &[9]);
    }

    #[test]
    fn snapshot_csv_lists_rows_by_pool_index_then_schedule() {
        let s1 = Matrix::from_row_vecs(2, &[vec![0.25, 0.75], vec![0.5, 0.5]]).unwrap();
        let s2 = Matrix::from_row_vecs(2, &[vec![0.75, 0.25], vec![0.5, 0.5]]).unwrap();
        let tensor = SnapshotTensor::new(
            vec![8, 4],
            PredSpace::Softmax,
            vec![14, 2],
            vec![s1, s2],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.csv");
        write_snapshot_csv(&tensor, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "pool_index,epoch,c0,c1");
        assert_eq!(lines[1], "2,8,0.5,0.5");
        assert_eq!(lines[2], "2,4,0.5,0.5");
        assert_eq!(lines[3], "14,8,0.25,0.75");
        assert_eq!(lines[4], "14,4,0.75,0.25");
    }

    fn brute_force_max_sum(scores: &[f64], b: usize) -> f64 {
        let n = scores.len();
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != b {
                continue;
            }
            let sum: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| scores[i]).sum();
            best = best.max(sum);
        }
        best
    }

    proptest! {
        #[test]
        fn greedy_selection_attains_subset_argmax(
            quarters in proptest::collection::vec(0u8..=4, 1..12),
            b in 0usize..=3,
        ) {
            let scores: Vec<f64> = quarters.iter().map(|&q| q as f64 * 0.25).collect();
            let pool: Vec<usize> = (0..scores.len()).map(|i| i * 3 + 1).collect();
            let sv = ScoreVector { scores: scores.clone(), pool_index_map: pool.clone() };
            let picked = select_top_b(&sv, b);
            prop_assert_eq!(picked.len(), b.min(scores.len()));
            let sum: f64 = picked
                .iter()
                .map(|pi| {
                    let row = pool.iter().position(|x| x == pi).unwrap();
                    scores[row]
                })
                .sum();
            let best = brute_force_max_sum(&scores, b.min(scores.len()));
            prop_assert_eq!(sum, best);
        }

        #[test]
        fn variance_is_nonnegative_and_zero_only_when_flat(
            rows in proptest::collection::vec(
                proptest::collection::vec(-5.0f64..5.0, 3), 2..6,
            ),
        ) {
            let views: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
            let score = variance_score(&views).unwrap();
            prop_assert!(score >= 0.0);
            let flat = rows.windows(2).all(|w| {
                w[0].iter().zip(&w[1]).all(|(a, b)| (a - b).abs() <= 1e-12)
            });
            if flat {
                prop_assert!(score <= 1e-12);
            } else {
                let spread = rows.windows(2).any(|w| {
                    w[0].iter().zip(&w[1]).any(|(a, b)| (a - b).abs() > 1e-5)
                });
                if spread {
                    prop_assert!(score > 0.0);
                }
            }
        }

        #[test]
        fn variance_ignores_epoch_order_and_absinc_survives_reversal(
            rows in proptest::collection::vec(
                proptest::collection::vec(0.0f64..1.0, 4), 2..6,
            ),
            seed in 0u64..1000,
        ) {
            let views: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
            let var = variance_score(&views).unwrap();
            let abs = absolute_increase_score(&views).unwrap();

            let mut shuffled = rows.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut seeding::rng_from(seed));
            let shuffled_views: Vec<&[f64]> = shuffled.iter().map(|v| v.as_slice()).collect();
            prop_assert!((variance_score(&shuffled_views).unwrap() - var).abs() <= 1e-12);

            let reversed: Vec<&[f64]> = rows.iter().rev().map(|v| v.as_slice()).collect();
            prop_assert!((absolute_increase_score(&reversed).unwrap() - abs).abs() <= 1e-12);
        }

        #[test]
        fn entropy_is_bounded_and_peaks_at_uniform(
            raw in proptest::collection::vec(0.01f64..1.0, 2..10),
        ) {
            let sum: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / sum).collect();
            let c = p.len() as f64;
            let e = entropy_score(&p).unwrap();
            prop_assert!(e >= 0.0);
            prop_assert!(e <= c.ln() + 1e-12);

            let uniform = vec![1.0 / c; p.len()];
            let max_dev = p
                .iter()
                .zip(&uniform)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if max_dev > 1e-3 {
                prop_assert!(e < entropy_score(&uniform).unwrap() - 1e-9);
            }
        }

        #[test]
        fn scoring_is_permutation_equivariant(
            logits in proptest::collection::vec(
                proptest::collection::vec(-3.0f64..3.0, 3), 2..8,
            ),
            seed in 0u64..1000,
        ) {
            let rows: Vec<Vec<f64>> = logits.iter().map(|r| softmax(r).unwrap()).collect();
            let n = rows.len();
            let preds = Matrix::from_row_vecs(3, &rows).unwrap();
            let pool: Vec<usize> = (0..n).collect();
            let spec = StrategySpec::spatial(StrategyKind::Entropy);
            let base = score_pool(&spec, ScoreInput::Final { predictions: &preds, pool_index_map: &pool }).unwrap();

            let mut perm: Vec<usize> = (0..n).collect();
            use rand::seq::SliceRandom;
            perm.shuffle(&mut seeding::rng_from(seed));
            let perm_rows: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
            let perm_pool: Vec<usize> = perm.iter().map(|&i| pool[i]).collect();
            let perm_preds = Matrix::from_row_vecs(3, &perm_rows).unwrap();
            let permuted = score_pool(&spec, ScoreInput::Final { predictions: &perm_preds, pool_index_map: &perm_pool }).unwrap();

            for (j, &i) in perm.iter().enumerate() {
                prop_assert_eq!(permuted.scores[j], base.scores[i]);
            }
            prop_assert_eq!(select_top_b(&permuted, 2), select_top_b(&base, 2));
        }
    }
}
