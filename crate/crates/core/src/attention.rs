//! Multi-head attention with head pruning.
//!
//! Pruning head `h` replaces that head's output `a_h` with zeros before the
//! head outputs are concatenated and fed to the output projection. Because
//! the projection is linear, this is the same as zeroing the rows of `W_o`
//! that read head `h`'s slice of the concatenation. [`mha_forward`] does the
//! former, [`mha_forward_zeroed_proj`] the latter; each checks the other.
//!
//! Layout is row-major: inputs and outputs are `T x model_dim`, per-head
//! projections are `model_dim x head_dim`, and `W_o` is `D x model_dim`
//! with `D = H * head_dim`. There is no causal mask, residual, or norm.

use std::collections::BTreeSet;

use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Result, SprintError};
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AttentionConfig {
    pub num_heads: usize,
    pub head_dim: usize,
    pub model_dim: usize,
    pub seq_len: usize,
}

impl AttentionConfig {
    pub fn new(num_heads: usize, head_dim: usize, model_dim: usize, seq_len: usize) -> Result<Self> {
        if num_heads == 0 || head_dim == 0 || model_dim == 0 || seq_len == 0 {
            return Err(SprintError::Argument(format!(
                "attention dimensions must be >= 1 (heads={num_heads}, head_dim={head_dim}, \
                 model_dim={model_dim}, seq_len={seq_len})"
            )));
        }
        if model_dim != num_heads * head_dim {
            return Err(SprintError::Argument(format!(
                "model_dim {model_dim} != heads {num_heads} x head_dim {head_dim}"
            )));
        }
        Ok(Self {
            num_heads,
            head_dim,
            model_dim,
            seq_len,
        })
    }

    /// Config with `model_dim = num_heads * head_dim`.
    pub fn square(num_heads: usize, head_dim: usize, seq_len: usize) -> Result<Self> {
        Self::new(num_heads, head_dim, num_heads * head_dim, seq_len)
    }

    /// Width of the concatenated head outputs.
    pub fn concat_dim(&self) -> usize {
        self.num_heads * self.head_dim
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub w_q: Vec<Array2<f64>>,
    pub w_k: Vec<Array2<f64>>,
    pub w_v: Vec<Array2<f64>>,
    pub w_o: Array2<f64>,
    pub b_o: Option<Array1<f64>>,
}

impl AttentionWeights {
    /// Gaussian weights scaled by `1/sqrt(model_dim)`.
    pub fn random<R: Rng>(cfg: &AttentionConfig, with_bias: bool, rng: &mut R) -> Self {
        let scale = 1.0 / (cfg.model_dim as f64).sqrt();
        let mut draw = |rows: usize, cols: usize| {
            Array2::from_shape_fn((rows, cols), |_| scale * rng.sample::<f64, _>(StandardNormal))
        };
        let w_q = (0..cfg.num_heads).map(|_| draw(cfg.model_dim, cfg.head_dim)).collect();
        let w_k = (0..cfg.num_heads).map(|_| draw(cfg.model_dim, cfg.head_dim)).collect();
        let w_v = (0..cfg.num_heads).map(|_| draw(cfg.model_dim, cfg.head_dim)).collect();
        let w_o = draw(cfg.concat_dim(), cfg.model_dim);
        let b_o = with_bias.then(|| draw(1, cfg.model_dim).row(0).to_owned());
        Self {
            w_q,
            w_k,
            w_v,
            w_o,
            b_o,
        }
    }

    pub fn validate(&self, cfg: &AttentionConfig) -> Result<()> {
        let per_head = (cfg.model_dim, cfg.head_dim);
        for (name, mats) in [("W_q", &self.w_q), ("W_k", &self.w_k), ("W_v", &self.w_v)] {
            if mats.len() != cfg.num_heads {
                return Err(SprintError::Dimension(format!(
                    "{name} has {} heads, config has {}",
                    mats.len(),
                    cfg.num_heads
                )));
            }
            for (h, m) in mats.iter().enumerate() {
                if m.dim() != per_head {
                    return Err(SprintError::Dimension(format!(
                        "{name}[{h}] is {:?}, expected {per_head:?}",
                        m.dim()
                    )));
                }
                ensure_finite(m.iter(), &format!("{name}[{h}]"))?;
            }
        }
        if self.w_o.dim() != (cfg.concat_dim(), cfg.model_dim) {
            return Err(SprintError::Dimension(format!(
                "W_o is {:?}, expected {:?}",
                self.w_o.dim(),
                (cfg.concat_dim(), cfg.model_dim)
            )));
        }
        ensure_finite(self.w_o.iter(), "W_o")?;
        if let Some(b) = &self.b_o {
            if b.len() != cfg.model_dim {
                return Err(SprintError::Dimension(format!(
                    "b_o has length {}, expected {}",
                    b.len(),
                    cfg.model_dim
                )));
            }
            ensure_finite(b.iter(), "b_o")?;
        }
        Ok(())
    }
}

/// Which heads of one attention block are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadMask {
    kept: Vec<bool>,
}

impl HeadMask {
    pub fn keep_all(num_heads: usize) -> Self {
        Self {
            kept: vec![true; num_heads],
        }
    }

    pub fn prune_all(num_heads: usize) -> Self {
        Self {
            kept: vec![false; num_heads],
        }
    }

    pub fn pruning(num_heads: usize, heads: &[usize]) -> Result<Self> {
        let mut mask = Self::keep_all(num_heads);
        for &h in heads {
            if h >= num_heads {
                return Err(SprintError::Argument(format!(
                    "head {h} out of range for {num_heads} heads"
                )));
            }
            mask.kept[h] = false;
        }
        Ok(mask)
    }

    pub fn num_heads(&self) -> usize {
        self.kept.len()
    }

    pub fn is_kept(&self, head: usize) -> bool {
        self.kept[head]
    }

    pub fn kept(&self) -> &[bool] {
        &self.kept
    }

    pub fn pruned_heads(&self) -> impl Iterator<Item = usize> + '_ {
        self.kept.iter().enumerate().filter(|(_, k)| !**k).map(|(h, _)| h)
    }

    pub fn union(&self, other: &HeadMask) -> HeadMask {
        HeadMask {
            kept: self.kept.iter().zip(&other.kept).map(|(a, b)| *a && *b).collect(),
        }
    }
}

/// Pruned (layer, head) pairs across a stack of blocks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PruneSet {
    num_layers: usize,
    num_heads: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl PruneSet {
    pub fn new(num_layers: usize, num_heads: usize) -> Self {
        Self {
            num_layers,
            num_heads,
            pairs: BTreeSet::new(),
        }
    }

    /// Marks `(layer, head)` pruned. Returns `false` if it already was.
    pub fn prune(&mut self, layer: usize, head: usize) -> Result<bool> {
        if layer >= self.num_layers || head >= self.num_heads {
            return Err(SprintError::Argument(format!(
                "(layer {layer}, head {head}) out of range for {} x {}",
                self.num_layers, self.num_heads
            )));
        }
        Ok(self.pairs.insert((layer, head)))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn layer_mask(&self, layer: usize) -> HeadMask {
        let mut kept = vec![true; self.num_heads];
        for &(_, h) in self.pairs.range((layer, 0)..(layer + 1, 0)) {
            kept[h] = false;
        }
        HeadMask { kept }
    }
}

fn ensure_finite<'a>(values: impl IntoIterator<Item = &'a f64>, what: &str) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SprintError::Numeric(format!("{what} contains a non-finite entry")))
    }
}

fn check_inputs(x: &Array2<f64>, w: &AttentionWeights, cfg: &AttentionConfig, mask: &HeadMask) -> Result<()> {
    if x.dim() != (cfg.seq_len, cfg.model_dim) {
        return Err(SprintError::Dimension(format!(
            "input is {:?}, expected {:?}",
            x.dim(),
            (cfg.seq_len, cfg.model_dim)
        )));
    }
    if mask.num_heads() != cfg.num_heads {
        return Err(SprintError::Dimension(format!(
            "mask covers {} heads, config has {}",
            mask.num_heads(),
            cfg.num_heads
        )));
    }
    ensure_finite(x.iter(), "input")?;
    w.validate(cfg)
}

fn softmax_rows(scores: &mut Array2<f64>) {
    for mut row in scores.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        row.mapv_inplace(|v| v / total);
    }
}

/// Attention probabilities `softmax(Q K^T / sqrt(d))` of one head (T x T).
pub fn attention_probs(x: &Array2<f64>, w: &AttentionWeights, cfg: &AttentionConfig, head: usize) -> Result<Array2<f64>> {
    check_inputs(x, w, cfg, &HeadMask::keep_all(cfg.num_heads))?;
    if head >= cfg.num_heads {
        return Err(SprintError::Argument(format!("head {head} out of range")));
    }
    Ok(head_probs(x, w, cfg, head))
}

fn head_probs(x: &Array2<f64>, w: &AttentionWeights, cfg: &AttentionConfig, head: usize) -> Array2<f64> {
    let q = x.dot(&w.w_q[head]);
    let k = x.dot(&w.w_k[head]);
    let mut scores = q.dot(&k.t()) / (cfg.head_dim as f64).sqrt();
    softmax_rows(&mut scores);
    scores
}

/// Concatenated head outputs `(a_1, ..., a_H)`, T x D. Heads with
/// `kept[h] == false` contribute zeros.
fn concat_heads(x: &Array2<f64>, w: &AttentionWeights, cfg: &AttentionConfig, kept: &[bool]) -> Array2<f64> {
    let mut concat = Array2::zeros((cfg.seq_len, cfg.concat_dim()));
    for (h, &keep) in kept.iter().enumerate() {
        if !keep {
            continue;
        }
        let probs = head_probs(x, w, cfg, h);
        let out = probs.dot(&x.dot(&w.w_v[h]));
        concat
            .slice_mut(s![.., h * cfg.head_dim..(h + 1) * cfg.head_dim])
            .assign(&out);
    }
    concat
}

fn project(concat: &Array2<f64>, w_o: &Array2<f64>, b_o: Option<&Array1<f64>>) -> Array2<f64> {
    let mut out = concat.dot(w_o);
    if let Some(b) = b_o {
        out += &b.view().insert_axis(Axis(0));
    }
    out
}

/// Forward pass with pruned heads' outputs zeroed before concatenation.
pub fn mha_forward(x: &Array2<f64>, w: &AttentionWeights, cfg: &AttentionConfig, mask: &HeadMask) -> Result<Array2<f64>> {
    check_inputs(x, w, cfg, mask)?;
    let concat = concat_heads(x, w, cfg, mask.kept());
    Ok(project(&concat, &w.w_o, w.b_o.as_ref()))
}

/// Forward pass with every head computed and the `W_o` rows of pruned
/// heads zeroed instead.
pub fn mha_forward_zeroed_proj(
    x: &Array2<f64>,
    w: &AttentionWeights,
    cfg: &AttentionConfig,
    mask: &HeadMask,
) -> Result<Array2<f64>> {
    check_inputs(x, w, cfg, mask)?;
    let concat = concat_heads(x, w, cfg, &vec![true; cfg.num_heads]);
    let mut w_o = w.w_o.clone();
    for h in mask.pruned_heads() {
        w_o.slice_mut(s![h * cfg.head_dim..(h + 1) * cfg.head_dim, ..]).fill(0.0);
    }
    Ok(project(&concat, &w_o, w.b_o.as_ref()))
}

/// Runs independent blocks in sequence, block `l` pruned by layer `l` of
/// `prune`.
pub fn forward_layers(
    x: &Array2<f64>,
    blocks: &[AttentionWeights],
    cfg: &AttentionConfig,
    prune: &PruneSet,
) -> Result<Array2<f64>> {
    if prune.num_layers != blocks.len() || prune.num_heads != cfg.num_heads {
        return Err(SprintError::Dimension(format!(
            "prune set is {} x {}, stack is {} x {}",
            prune.num_layers,
            prune.num_heads,
            blocks.len(),
            cfg.num_heads
        )));
    }
    let mut h = x.clone();
    for (layer, block) in blocks.iter().enumerate() {
        h = mha_forward(&h, block, cfg, &prune.layer_mask(layer))?;
    }
    Ok(h)
}

/// Random input `T x model_dim` with standard normal entries.
pub fn random_input<R: Rng>(cfg: &AttentionConfig, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_fn((cfg.seq_len, cfg.model_dim), |_| rng.sample(StandardNormal))
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoLine {
    pub pruned_head: usize,
    pub max_abs_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoReport {
    pub config: AttentionConfig,
    pub seed: u64,
    pub lines: Vec<DemoLine>,
}

impl DemoReport {
    pub fn max_deviation(&self) -> f64 {
        self.lines.iter().map(|l| l.max_abs_deviation).fold(0.0, f64::max)
    }

    /// One JSON object per single-head mask.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            let obj = serde_json::json!({
                "heads": self.config.num_heads,
                "head_dim": self.config.head_dim,
                "seq_len": self.config.seq_len,
                "seed": self.seed,
                "pruned_head": line.pruned_head,
                "max_abs_deviation": line.max_abs_deviation,
            });
            out.push_str(&obj.to_string());
            out.push('\n');
        }
        out
    }
}

/// Compares both forward implementations for every single-head mask on a
/// seeded random instance.
pub fn attn_demo(cfg: &AttentionConfig, seed: u64) -> Result<DemoReport> {
    let weights = AttentionWeights::random(cfg, true, &mut rng_for(seed, "attn/weights"));
    let x = random_input(cfg, &mut rng_for(seed, "attn/input"));
    let mut lines = Vec::with_capacity(cfg.num_heads);
    for h in 0..cfg.num_heads {
        let mask = HeadMask::pruning(cfg.num_heads, &[h])?;
        let a = mha_forward(&x, &weights, cfg, &mask)?;
        let b = mha_forward_zeroed_proj(&x, &weights, cfg, &mask)?;
        lines.push(DemoLine {
            pruned_head: h,
            max_abs_deviation: max_abs_diff(&a, &b),
        });
    }
    Ok(DemoReport {
        config: *cfg,
        seed,
        lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    fn instance(cfg: &AttentionConfig, seed: u64, bias: bool) -> (Array2<f64>, AttentionWeights) {
        let w = AttentionWeights::random(cfg, bias, &mut rng_for(seed, "w"));
        let x = random_input(cfg, &mut rng_for(seed, "x"));
        (x, w)
    }

    #[test]
    fn all_heads_pruned_without_bias_is_zero() {
        let cfg = AttentionConfig::square(3, 2, 4).unwrap();
        let (x, w) = instance(&cfg, 1, false);
        let out = mha_forward(&x, &w, &cfg, &HeadMask::prune_all(3)).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_heads_pruned_leaves_only_bias() {
        let cfg = AttentionConfig::square(2, 3, 3).unwrap();
        let (x, mut w) = instance(&cfg, 2, false);
        let b = Array1::from(vec![0.5, -1.0, 2.0, 0.0, 3.5, -0.25]);
        w.b_o = Some(b.clone());
        let out = mha_forward_zeroed_proj(&x, &w, &cfg, &HeadMask::prune_all(2)).unwrap();
        for row in out.rows() {
            assert_eq!(row, b);
        }
    }

    #[test]
    fn single_token_single_head_is_input_times_output_projection() {
        let cfg = AttentionConfig::square(1, 2, 1).unwrap();
        let eye = Array2::<f64>::eye(2);
        let w_o = array![[2.0, 3.0], [5.0, 7.0]];
        let w = AttentionWeights {
            w_q: vec![eye.clone()],
            w_k: vec![eye.clone()],
            w_v: vec![eye],
            w_o: w_o.clone(),
            b_o: None,
        };
        let x = array![[1.0, 0.0]];
        let out = mha_forward(&x, &w, &cfg, &HeadMask::keep_all(1)).unwrap();
        assert_eq!(out, x.dot(&w_o));
    }

    #[test]
    fn pruned_head_matches_zeroed_projection_rows() {
        let cfg = AttentionConfig::square(4, 8, 5).unwrap();
        let (x, w) = instance(&cfg, 7, true);
        let mask = HeadMask::pruning(4, &[2]).unwrap();
        let a = mha_forward(&x, &w, &cfg, &mask).unwrap();
        let b = mha_forward_zeroed_proj(&x, &w, &cfg, &mask).unwrap();
        assert!(max_abs_diff(&a, &b) <= 1e-12);
        // pruning actually changed something
        let dense = mha_forward(&x, &w, &cfg, &HeadMask::keep_all(4)).unwrap();
        assert!(max_abs_diff(&a, &dense) > 1e-6);
    }

    #[test]
    fn empty_mask_agrees() {
        let cfg = AttentionConfig::square(2, 4, 3).unwrap();
        let (x, w) = instance(&cfg, 3, true);
        let mask = HeadMask::keep_all(2);
        let a = mha_forward(&x, &w, &cfg, &mask).unwrap();
        let b = mha_forward_zeroed_proj(&x, &w, &cfg, &mask).unwrap();
        assert!(max_abs_diff(&a, &b) <= 1e-12);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let cfg = AttentionConfig::square(2, 3, 6).unwrap();
        let (x, w) = instance(&cfg, 4, false);
        for h in 0..2 {
            let p = attention_probs(&x, &w, &cfg, h).unwrap();
            for row in p.rows() {
                assert!((row.sum() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn shape_and_value_errors() {
        assert!(AttentionConfig::new(2, 2, 5, 2).is_err());
        assert!(AttentionConfig::square(0, 2, 2).is_err());
        let cfg = AttentionConfig::square(2, 2, 2).unwrap();
        let (x, w) = instance(&cfg, 5, false);
        let bad = Array2::zeros((3, 4));
        assert!(matches!(
            mha_forward(&bad, &w, &cfg, &HeadMask::keep_all(2)),
            Err(SprintError::Dimension(_))
        ));
        let mut nan = x.clone();
        nan[[0, 0]] = f64::NAN;
        assert!(matches!(
            mha_forward(&nan, &w, &cfg, &HeadMask::keep_all(2)),
            Err(SprintError::Numeric(_))
        ));
        assert!(HeadMask::pruning(2, &[2]).is_err());
        assert!(matches!(
            mha_forward(&x, &w, &cfg, &HeadMask::keep_all(3)),
            Err(SprintError::Dimension(_))
        ));
    }

    #[test]
    fn prune_set_layer_views() {
        let mut set = PruneSet::new(3, 4);
        assert!(set.prune(1, 2).unwrap());
        assert!(!set.prune(1, 2).unwrap());
        assert!(set.prune(3, 0).is_err());
        assert_eq!(set.layer_mask(1).kept(), &[true, true, false, true]);
        assert_eq!(set.layer_mask(0), HeadMask::keep_all(4));
    }

    #[test]
    fn stacked_blocks_respect_layer_masks() {
        let cfg = AttentionConfig::square(2, 2, 3).unwrap();
        let blocks: Vec<_> = (0..2)
            .map(|l| AttentionWeights::random(&cfg, false, &mut rng_for(l, "blk")))
            .collect();
        let x = random_input(&cfg, &mut rng_for(9, "x"));
        let mut set = PruneSet::new(2, 2);
        set.prune(1, 0).unwrap();
        let stacked = forward_layers(&x, &blocks, &cfg, &set).unwrap();
        let h = mha_forward(&x, &blocks[0], &cfg, &HeadMask::keep_all(2)).unwrap();
        let manual = mha_forward(&h, &blocks[1], &cfg, &HeadMask::pruning(2, &[0]).unwrap()).unwrap();
        assert_eq!(stacked, manual);
    }

    #[test]
    fn demo_reports_one_line_per_head() {
        let cfg = AttentionConfig::square(2, 2, 2).unwrap();
        let report = attn_demo(&cfg, 0).unwrap();
        assert_eq!(report.lines.len(), 2);
        assert!(report.max_deviation() <= 1e-12);
        assert_eq!(report.to_json_lines().lines().count(), 2);
        let one = attn_demo(&AttentionConfig::square(1, 3, 2).unwrap(), 0).unwrap();
        assert_eq!(one.lines.len(), 1);
    }
}
