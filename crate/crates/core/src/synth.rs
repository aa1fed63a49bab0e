//! Synthetic outcome data with a known answer.
//!
//! Questions come from `K` Gaussian clusters in feature space. Each cluster
//! has one dedicated head that solves its questions with probability
//! `p_hi`; every other (head, question) pair succeeds with probability
//! `p_lo`. A selector that learns the cluster-to-head map scores about
//! `p_hi` at Pass@1.

use std::path::Path;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SprintError};
use crate::features::QuestionFeatures;
use crate::outcomes::{HeadCatalog, OutcomeMatrix};
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub clusters: usize,
    /// Total number of prunable heads `LH`.
    pub heads: usize,
    /// Layers the heads are spread over; must divide `heads`.
    pub layers: usize,
    pub feature_dim: usize,
    pub p_hi: f64,
    pub p_lo: f64,
    pub n: usize,
    pub seed: u64,
    /// Standard deviation of cluster centers around the origin.
    pub center_scale: f64,
    /// Standard deviation of questions around their center.
    pub noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            clusters: 4,
            heads: 8,
            layers: 1,
            feature_dim: 16,
            p_hi: 0.95,
            p_lo: 0.3,
            n: 2000,
            seed: 0,
            center_scale: 3.0,
            noise: 1.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SprintError::Argument(msg));
        if self.n == 0 {
            return bad("synthetic question count n must be >= 1".into());
        }
        if self.clusters == 0 || self.clusters > self.heads {
            return bad(format!("need 1 <= clusters ({}) <= heads ({})", self.clusters, self.heads));
        }
        if self.layers == 0 || !self.heads.is_multiple_of(self.layers) {
            return bad(format!("layers ({}) must divide heads ({})", self.layers, self.heads));
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be >= 1".into());
        }
        if !(0.0 <= self.p_lo && self.p_lo < self.p_hi && self.p_hi <= 1.0) {
            return bad(format!("need 0 <= p_lo ({}) < p_hi ({}) <= 1", self.p_lo, self.p_hi));
        }
        if !(self.center_scale >= 0.0 && self.noise >= 0.0) {
            return bad("center_scale and noise must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Dedicated head of each cluster.
    pub dedicated: Vec<usize>,
    /// Cluster of each question.
    pub cluster_of: Vec<usize>,
}

impl GroundTruth {
    /// Success probability of head `j` on question `i`.
    pub fn probability(&self, spec: &SynthSpec, i: usize, j: usize) -> f64 {
        if self.dedicated[self.cluster_of[i]] == j {
            spec.p_hi
        } else {
            spec.p_lo
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub spec: SynthSpec,
    pub outcomes: OutcomeMatrix,
    pub features: QuestionFeatures,
    pub catalog: HeadCatalog,
    pub truth: GroundTruth,
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let lh = spec.heads;
    let per_layer = lh / spec.layers;
    let catalog = HeadCatalog::grid(&(0..spec.layers).collect::<Vec<_>>(), per_layer)?;

    let dedicated = sample(&mut rng_for(spec.seed, "synth/dedicated"), lh, spec.clusters).into_vec();

    let mut center_rng = rng_for(spec.seed, "synth/centers");
    let center_dist = Normal::new(0.0, spec.center_scale).expect("valid scale");
    let centers = Array2::from_shape_fn((spec.clusters, spec.feature_dim), |_| center_dist.sample(&mut center_rng));

    let mut rng = rng_for(spec.seed, "synth/questions");
    let noise = Normal::new(0.0, spec.noise).expect("valid noise");
    let mut cluster_of = Vec::with_capacity(spec.n);
    let mut data = Array2::zeros((spec.n, spec.feature_dim));
    let mut z = Array2::<u8>::zeros((spec.n, lh));
    let mut baseline = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let c = rng.random_range(0..spec.clusters);
        cluster_of.push(c);
        for d in 0..spec.feature_dim {
            data[[i, d]] = centers[[c, d]] + noise.sample(&mut rng);
        }
        for j in 0..lh {
            let p = if dedicated[c] == j { spec.p_hi } else { spec.p_lo };
            z[[i, j]] = (rng.random::<f64>() < p) as u8;
        }
        // the unpruned model behaves like a background head
        baseline.push((rng.random::<f64>() < spec.p_lo) as u8);
    }
    let width = (spec.n - 1).to_string().len();
    let ids: Vec<String> = (0..spec.n).map(|i| format!("q{i:0width$}")).collect();
    let subjects = cluster_of.iter().map(|c| format!("cluster{c}")).collect();
    let outcomes = OutcomeMatrix::new(z, ids.clone(), Some(subjects), Some(baseline))?;
    let features = QuestionFeatures::new(ids, data)?;
    Ok(SyntheticData {
        spec: *spec,
        outcomes,
        features,
        catalog,
        truth: GroundTruth { dedicated, cluster_of },
    })
}

impl SyntheticData {
    /// Rows `[0, at)` and `[at, n)`; questions are i.i.d. so a prefix split is unbiased.
    pub fn split(&self, at: usize) -> Result<(Split, Split)> {
        let (z_train, z_test) = self.outcomes.split_at(at)?;
        let train_rows: Vec<usize> = (0..at).collect();
        let test_rows: Vec<usize> = (at..self.outcomes.n()).collect();
        Ok((
            Split {
                outcomes: z_train,
                features: self.features.select_rows(&train_rows),
            },
            Split {
                outcomes: z_test,
                features: self.features.select_rows(&test_rows),
            },
        ))
    }

    /// Split point for a train fraction, e.g. 0.8 for an 80/20 split.
    pub fn split_fraction(&self, train_fraction: f64) -> Result<(Split, Split)> {
        if !(0.0 < train_fraction && train_fraction < 1.0) {
            return Err(SprintError::Argument("train fraction must be in (0, 1)".into()));
        }
        let at = (self.outcomes.n() as f64 * train_fraction).round() as usize;
        if at == 0 || at >= self.outcomes.n() {
            return Err(SprintError::Argument("split leaves one side empty".into()));
        }
        self.split(at)
    }

    /// Writes `train.csv`, `test.csv`, `train.jsonl`, `test.jsonl`,
    /// `catalog.json` and `truth.json` into `dir`.
    pub fn write_fixture(&self, dir: impl AsRef<Path>, train_fraction: f64) -> Result<Vec<std::path::PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| SprintError::io(dir, e))?;
        let (train, test) = self.split_fraction(train_fraction)?;
        let paths: Vec<_> = ["train.csv", "test.csv", "train.jsonl", "test.jsonl", "catalog.json", "truth.json"]
            .iter()
            .map(|name| dir.join(name))
            .collect();
        train.outcomes.save_csv(&self.catalog, &paths[0])?;
        test.outcomes.save_csv(&self.catalog, &paths[1])?;
        train.features.save(&paths[2])?;
        test.features.save(&paths[3])?;
        self.catalog.save(&paths[4])?;
        let truth = serde_json::json!({ "spec": self.spec, "truth": self.truth });
        std::fs::write(&paths[5], serde_json::to_string_pretty(&truth).expect("serializes") + "\n")
            .map_err(|e| SprintError::io(&paths[5], e))?;
        Ok(paths)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub outcomes: OutcomeMatrix,
    pub features: QuestionFeatures,
}
