//! The sample universe: datasets, the labeled/unlabeled partition, the
//! labeling oracle, synthetic blob generation, and CSV ingestion.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeding;

/// A fully labeled sample collection. The ground-truth labels double as the
/// annotation oracle: "labeling" a sample reveals its stored label.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Dataset> {
        if features.rows() == 0 {
            return Err(Error::invalid_argument("dataset has no samples"));
        }
        if labels.len() != features.rows() {
            return Err(Error::invalid_argument(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if num_classes == 0 {
            return Err(Error::invalid_argument("num_classes must be >= 1"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::invalid_argument(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        if !features.all_finite() {
            return Err(Error::invalid_argument("features must be finite"));
        }
        Ok(Dataset {
            features,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Copies the given rows into a dense (features, labels) pair.
    pub fn gather(&self, indices: &[usize]) -> (Matrix, Vec<usize>) {
        let features = Matrix::from_rows_fn(indices.len(), self.dim(), |r, row| {
            row.copy_from_slice(self.features.row(indices[r]));
        });
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        (features, labels)
    }
}

/// The labeled/unlabeled partition over one dataset. Both index sets are
/// kept sorted ascending so iteration and tie-breaking are deterministic.
#[derive(Debug, Clone)]
pub struct PoolState<'a> {
    dataset: &'a Dataset,
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
}

impl<'a> PoolState<'a> {
    /// Fresh pool with every sample unlabeled.
    pub fn new(dataset: &'a Dataset) -> PoolState<'a> {
        PoolState {
            dataset,
            labeled: Vec::new(),
            unlabeled: (0..dataset.len()).collect(),
        }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled.len()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.unlabeled.len()
    }

    /// Training view of the labeled set, with oracle labels.
    pub fn labeled_data(&self) -> (Matrix, Vec<usize>) {
        self.dataset.gather(&self.labeled)
    }

    /// Feature rows of the unlabeled set, aligned with `unlabeled()`.
    pub fn unlabeled_features(&self) -> Matrix {
        let (features, _) = self.dataset.gather(&self.unlabeled);
        features
    }

    /// Moves `indices` from unlabeled to labeled. Re-annotating, duplicates,
    /// and out-of-range indices are errors, never silent no-ops.
    pub fn annotate(&mut self, indices: &[usize]) -> Result<()> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        if let Some(dup) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid_argument(format!(
                "duplicate index {} in annotation request",
                dup[0]
            )));
        }
        for &i in &sorted {
            if i >= self.dataset.len() {
                return Err(Error::invalid_argument(format!(
                    "index {i} out of range for pool of {}",
                    self.dataset.len()
                )));
            }
            if self.unlabeled.binary_search(&i).is_err() {
                return Err(Error::invalid_argument(format!("index {i} already labeled")));
            }
        }
        self.unlabeled.retain(|i| sorted.binary_search(i).is_err());
        self.labeled.extend_from_slice(&sorted);
        self.labeled.sort_unstable();
        Ok(())
    }

    /// Labels exactly k/C uniformly chosen samples of each class.
    pub fn balanced_initial_sample(&mut self, k: usize, rng: &mut ChaCha8Rng) -> Result<()> {
        let classes = self.dataset.num_classes;
        if !k.is_multiple_of(classes) {
            return Err(Error::invalid_argument(format!(
                "initial count {k} not divisible by {classes} classes"
            )));
        }
        let per = k / classes;
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
        for &i in &self.unlabeled {
            by_class[self.dataset.labels[i]].push(i);
        }
        let mut picks = Vec::with_capacity(k);
        for (class, mut members) in by_class.into_iter().enumerate() {
            if members.len() < per {
                return Err(Error::invalid_state(format!(
                    "class {class} has {} unlabeled samples, need {per}",
                    members.len()
                )));
            }
            members.shuffle(rng);
            picks.extend_from_slice(&members[..per]);
        }
        self.annotate(&picks)
    }
}

/// Recipe for an isotropic Gaussian blob dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub dim: usize,
    pub center_scale: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl BlobSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.samples_per_class == 0 || self.dim == 0 {
            return Err(Error::invalid_argument(
                "num_classes, samples_per_class, and dim must all be >= 1",
            ));
        }
        if !(self.center_scale.is_finite() && self.center_scale > 0.0) {
            return Err(Error::invalid_argument(format!(
                "center_scale must be positive, got {}",
                self.center_scale
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid_argument(format!(
                "noise_sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Train pool plus a disjoint test split drawn around the same centers.
#[derive(Debug, Clone)]
pub struct BlobSplit {
    pub train: Dataset,
    pub test: Dataset,
}

/// Class centers uniform in the cube of half-width `center_scale`; samples
/// are center + isotropic Gaussian noise. The test split uses the same
/// centers and per-class count with an independent noise stream.
pub fn generate_blobs(spec: &BlobSpec) -> Result<BlobSplit> {
    spec.validate()?;
    let mut crng = seeding::rng_from(seeding::center_seed(spec.seed));
    let centers: Vec<Vec<f64>> = (0..spec.num_classes)
        .map(|_| {
            (0..spec.dim)
                .map(|_| crng.random_range(-spec.center_scale..spec.center_scale))
                .collect()
        })
        .collect();
    let train = sample_around(spec, &centers, seeding::noise_seed(spec.seed, 0))?;
    let test = sample_around(spec, &centers, seeding::noise_seed(spec.seed, 1))?;
    Ok(BlobSplit { train, test })
}

fn sample_around(spec: &BlobSpec, centers: &[Vec<f64>], seed: u64) -> Result<Dataset> {
    let mut rng = seeding::rng_from(seed);
    let n = spec.num_classes * spec.samples_per_class;
    let mut features = Matrix::zeros(n, spec.dim);
    let mut labels = Vec::with_capacity(n);
    let mut r = 0;
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..spec.samples_per_class {
            let row = features.row_mut(r);
            for (v, &c) in row.iter_mut().zip(center.iter()) {
                let z: f64 = rng.sample(StandardNormal);
                *v = c + spec.noise_sigma * z;
            }
            labels.push(class);
            r += 1;
        }
    }
    Dataset::new(features, labels, spec.num_classes)
}

/// Reads a dataset CSV (header `f0,...,f{d-1},label`) and standardizes each
/// feature column to zero mean and unit variance; constant columns become
/// all zeros. The class count is 1 + the maximum label.
pub fn load_csv_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty file, expected a header line"))?;
    let fields: Vec<&str> = header.split(',').collect();
    let dim = fields.len().saturating_sub(1);
    if dim == 0 || fields[dim] != "label" {
        return Err(Error::parse(1, "header must be f0,...,f{d-1},label"));
    }
    for (i, field) in fields[..dim].iter().enumerate() {
        if *field != format!("f{i}") {
            return Err(Error::parse(
                1,
                format!("header column {i} is '{field}', expected 'f{i}'"),
            ));
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != dim + 1 {
            return Err(Error::parse(
                lineno,
                format!("expected {} fields, got {}", dim + 1, cells.len()),
            ));
        }
        let mut row = Vec::with_capacity(dim);
        for cell in &cells[..dim] {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::parse(lineno, format!("non-numeric value '{cell}'")))?;
            if !v.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite value '{cell}'")));
            }
            row.push(v);
        }
        let raw_label = cells[dim];
        let label: i64 = raw_label
            .parse()
            .map_err(|_| Error::parse(lineno, format!("non-integer label '{raw_label}'")))?;
        if label < 0 {
            return Err(Error::parse(lineno, format!("negative label {label}")));
        }
        rows.push(row);
        labels.push(label as usize);
    }
    if rows.is_empty() {
        return Err(Error::parse(1, "no samples after the header"));
    }

    let mut features = Matrix::from_row_vecs(dim, &rows)?;
    standardize_columns(&mut features);
    let num_classes = 1 + labels.iter().copied().max().unwrap();
    Dataset::new(features, labels, num_classes)
}

/// Writes a dataset in the CSV layout `load_csv_dataset` reads.
pub fn write_csv_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..dataset.dim() {
        out.push_str(&format!("f{i},"));
    }
    out.push_str("label\n");
    for (row, &label) in dataset.features.iter_rows().zip(dataset.labels.iter()) {
        for v in row {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{label}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn standardize_columns(features: &mut Matrix) {
    let n = features.rows() as f64;
    for c in 0..features.cols() {
        let mut mean = 0.0;
        for r in 0..features.rows() {
            mean += features.get(r, c);
        }
        mean /= n;
        let mut var = 0.0;
        for r in 0..features.rows() {
            let d = features.get(r, c) - mean;
            var += d * d;
        }
        var /= n;
        let std = var.sqrt();
        for r in 0..features.rows() {
            let v = features.row_mut(r);
            v[c] = if std > 0.0 { (v[c] - mean) / std } else { 0.0 };
        }
    }
}
