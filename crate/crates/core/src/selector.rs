//! Nearest-embedding head selection for a new question.

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SprintError};
use crate::trainer::{squared_distances, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedHead {
    pub j: usize,
    pub layer: usize,
    pub head: usize,
    pub squared_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// All heads, nearest first; ties by ascending `j`.
    pub ranked: Vec<RankedHead>,
}

impl SelectionResult {
    pub fn chosen(&self) -> &RankedHead {
        &self.ranked[0]
    }

    pub fn order(&self) -> Vec<usize> {
        self.ranked.iter().map(|r| r.j).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopN {
    pub heads: Vec<usize>,
    /// Set when the request asked for more heads than exist.
    pub clamped: bool,
}

/// Indices sorted by ascending distance, ties by ascending index.
pub fn rank_by_distance(distances: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
    order
}

pub fn select(model: &TrainedModel, features: ArrayView1<'_, f64>) -> Result<SelectionResult> {
    if !features.iter().all(|v| v.is_finite()) {
        return Err(SprintError::Numeric("question features are not finite".into()));
    }
    let q = model.encoder().encode(features)?;
    let distances = squared_distances(model.embeddings(), q.view());
    let ranked = rank_by_distance(&distances)
        .into_iter()
        .map(|j| {
            let id = model.catalog.entries()[j];
            RankedHead {
                j,
                layer: id.layer,
                head: id.head,
                squared_distance: distances[j],
            }
        })
        .collect();
    Ok(SelectionResult { ranked })
}

/// The `min(n, LH)` nearest heads.
pub fn select_top_n(model: &TrainedModel, features: ArrayView1<'_, f64>, n: usize) -> Result<TopN> {
    if n == 0 {
        return Err(SprintError::Argument("top-n must be >= 1".into()));
    }
    let mut heads = select(model, features)?.order();
    let clamped = n > heads.len();
    heads.truncate(n);
    Ok(TopN { heads, clamped })
}
