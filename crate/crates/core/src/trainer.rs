//! Joint training of the question encoder and the head embeddings.
//!
//! For question `i` with embedding `q_i = W^T x_i + b` and positive head set
//! `M_i^+ = {j : z_ij = 1}` the objective is
//!
//! ```text
//! L = mean_i [ -log( sum_{j in M_i^+} exp(-|q_i - v_j|^2) / sum_j exp(-|q_i - v_j|^2) ) ]
//!     - lambda * sum_{j<k} s_jk |v_j - v_k|^2
//! ```
//!
//! The first (alignment) term pulls questions toward heads whose pruning
//! solves them; the second (diversity) term pushes heads with similar
//! outcome columns apart. The second term is unbounded below, so after each
//! step every `v_j` is projected back onto the ball of radius `R`.
//! Questions that no head solves are left out of the alignment term.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SprintError};
use crate::features::QuestionFeatures;
use crate::outcomes::{similarity, HeadCatalog, OutcomeMatrix, SimilarityMatrix};
use crate::seed::rng_for;

/// Linear map from sentence features (dim `f`) to the embedding space (dim `p`).
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionEncoder {
    /// `f x p`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl QuestionEncoder {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        if weight.ncols() == 0 || weight.nrows() == 0 {
            return Err(SprintError::Dimension("encoder weight must be non-empty".into()));
        }
        if bias.len() != weight.ncols() {
            return Err(SprintError::Dimension(format!(
                "bias has length {}, weight maps to {}",
                bias.len(),
                weight.ncols()
            )));
        }
        if !weight.iter().chain(bias.iter()).all(|v| v.is_finite()) {
            return Err(SprintError::Numeric("encoder parameters are not finite".into()));
        }
        Ok(Self { weight, bias })
    }

    pub fn feature_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn embed_dim(&self) -> usize {
        self.weight.ncols()
    }

    /// `q = W^T x + b`.
    pub fn encode(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.feature_dim() {
            return Err(SprintError::Dimension(format!(
                "feature vector has length {}, encoder expects {}",
                x.len(),
                self.feature_dim()
            )));
        }
        Ok(self.weight.t().dot(&x) + &self.bias)
    }
}

/// One learnable vector per pruning configuration; row `j` is `v_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadEmbeddings {
    pub vectors: Array2<f64>,
}

impl HeadEmbeddings {
    pub fn num_heads(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors
            .rows()
            .into_iter()
            .map(|r| r.dot(&r).sqrt())
            .fold(0.0, f64::max)
    }

    /// Scales every row with norm above `radius` back onto the sphere.
    pub fn project_to_ball(&mut self, radius: f64) {
        for mut row in self.vectors.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > radius {
                row *= radius / norm;
            }
        }
    }
}

/// Encoder plus head embeddings: everything the loss depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct SprintParams {
    pub encoder: QuestionEncoder,
    pub embeddings: HeadEmbeddings,
}

impl SprintParams {
    /// Gaussian(0, std) entries for `W` and `V`, zero bias.
    pub fn random<R: Rng>(feature_dim: usize, embed_dim: usize, num_heads: usize, std: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, std).expect("valid std");
        let weight = Array2::from_shape_fn((feature_dim, embed_dim), |_| rng.sample(normal));
        let vectors = Array2::from_shape_fn((num_heads, embed_dim), |_| rng.sample(normal));
        Self {
            encoder: QuestionEncoder {
                weight,
                bias: Array1::zeros(embed_dim),
            },
            embeddings: HeadEmbeddings { vectors },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    SgdMomentum { beta: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Embedding dimension `p`.
    pub embed_dim: usize,
    pub lambda: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Radius of the ball the head embeddings are projected onto.
    pub radius: f64,
    pub optimizer: OptimizerKind,
    /// Full-data loss is recorded every this many steps (and at the last).
    pub trace_every: usize,
    /// Standard deviation of the Gaussian initialization of `W` and `V`.
    pub init_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            embed_dim: 16,
            lambda: 0.01,
            learning_rate: 1e-2,
            steps: 2000,
            batch_size: 64,
            seed: 0,
            radius: 10.0,
            optimizer: OptimizerKind::default(),
            trace_every: 50,
            init_std: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SprintError::Argument(msg.to_string()));
        if self.embed_dim == 0 {
            return bad("embed_dim must be >= 1");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be a finite non-negative number");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad("radius must be positive");
        }
        if self.trace_every == 0 {
            return bad("trace_every must be >= 1");
        }
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return bad("init_std must be positive");
        }
        match self.optimizer {
            OptimizerKind::Sgd => {}
            OptimizerKind::SgdMomentum { beta } if (0.0..1.0).contains(&beta) => {}
            OptimizerKind::Adam { beta1, beta2, eps }
                if (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0 => {}
            _ => return bad("optimizer coefficients out of range"),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub step: usize,
    /// Full objective over all trainable questions.
    pub loss: f64,
    /// Alignment (first) term alone.
    pub alignment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: SprintParams,
    pub catalog: HeadCatalog,
    pub config: TrainConfig,
    pub loss_trace: Vec<LossPoint>,
    /// Training questions left out of the alignment term (no solving head).
    pub excluded_questions: usize,
}

impl TrainedModel {
    pub fn encoder(&self) -> &QuestionEncoder {
        &self.params.encoder
    }

    pub fn embeddings(&self) -> &HeadEmbeddings {
        &self.params.embeddings
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub alignment: f64,
    /// `sum_{j<k} s_jk |v_j - v_k|^2`, before the `-lambda` factor.
    pub diversity: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub embeddings: Array2<f64>,
}

/// Borrowed view of everything the objective reads besides the parameters.
#[derive(Debug, Clone, Copy)]
pub struct LossProblem<'a> {
    pub outcomes: &'a OutcomeMatrix,
    pub similarity: &'a SimilarityMatrix,
    pub features: &'a QuestionFeatures,
    pub lambda: f64,
}

impl LossProblem<'_> {
    fn check(&self, params: &SprintParams, subset: &[usize]) -> Result<()> {
        let lh = params.embeddings.num_heads();
        if subset.is_empty() {
            return Err(SprintError::Argument("loss over an empty question subset".into()));
        }
        if self.outcomes.num_heads() != lh || self.similarity.size() != lh {
            return Err(SprintError::Dimension(format!(
                "{lh} head embeddings, outcomes have {} heads, similarity is {}",
                self.outcomes.num_heads(),
                self.similarity.size()
            )));
        }
        if params.embeddings.dim() != params.encoder.embed_dim() {
            return Err(SprintError::Dimension("encoder and head embedding dimensions differ".into()));
        }
        if self.features.dim() != params.encoder.feature_dim() {
            return Err(SprintError::Dimension(format!(
                "features have dimension {}, encoder expects {}",
                self.features.dim(),
                params.encoder.feature_dim()
            )));
        }
        if self.features.n() != self.outcomes.n() {
            return Err(SprintError::Alignment(format!(
                "{} feature rows, {} outcome rows",
                self.features.n(),
                self.outcomes.n()
            )));
        }
        if let Some(&i) = subset.iter().find(|&&i| i >= self.outcomes.n()) {
            return Err(SprintError::Argument(format!("question index {i} out of range")));
        }
        Ok(())
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn evaluate(
    params: &SprintParams,
    problem: &LossProblem<'_>,
    subset: &[usize],
    want_grad: bool,
) -> Result<(LossTerms, Option<Gradients>)> {
    problem.check(params, subset)?;
    let v = &params.embeddings.vectors;
    let (lh, p) = v.dim();
    let f = params.encoder.feature_dim();
    let scale = 1.0 / subset.len() as f64;

    let mut grad = want_grad.then(|| Gradients {
        weight: Array2::zeros((f, p)),
        bias: Array1::zeros(p),
        embeddings: Array2::zeros((lh, p)),
    });

    let mut alignment = 0.0;
    let mut logits = vec![0.0; lh];
    for &i in subset {
        if !problem.outcomes.solvable(i) {
            return Err(SprintError::EmptyPositiveSet(i));
        }
        let x = problem.features.row(i);
        let q = params.encoder.encode(x)?;
        for (j, vj) in v.rows().into_iter().enumerate() {
            let diff = &q - &vj;
            logits[j] = -diff.dot(&diff);
        }
        let positive = |j: &usize| problem.outcomes.get(i, *j);
        let lse_all = log_sum_exp(logits.iter().copied());
        let lse_pos = log_sum_exp((0..lh).filter(positive).map(|j| logits[j]));
        alignment += lse_all - lse_pos;

        if let Some(g) = grad.as_mut() {
            // d(term)/d(logit_j) = softmax_all_j - softmax_pos_j
            let mut grad_q = Array1::<f64>::zeros(p);
            for (j, &logit) in logits.iter().enumerate() {
                let mut coef = (logit - lse_all).exp();
                if positive(&j) {
                    coef -= (logit - lse_pos).exp();
                }
                if coef == 0.0 {
                    continue;
                }
                let diff = &q - &v.row(j);
                // logit = -|q - v|^2: d/dq = -2(q - v), d/dv = 2(q - v)
                grad_q.scaled_add(-2.0 * coef * scale, &diff);
                g.embeddings.row_mut(j).scaled_add(2.0 * coef * scale, &diff);
            }
            g.bias += &grad_q;
            for (a, &xa) in x.iter().enumerate() {
                g.weight.row_mut(a).scaled_add(xa, &grad_q);
            }
        }
    }
    alignment *= scale;

    let mut diversity = 0.0;
    for j in 0..lh {
        for k in (j + 1)..lh {
            let s = problem.similarity.get(j, k);
            if s == 0.0 {
                continue;
            }
            let diff = &v.row(j) - &v.row(k);
            diversity += s * diff.dot(&diff);
            if let Some(g) = grad.as_mut() {
                // -lambda * s * |v_j - v_k|^2
                let c = -2.0 * problem.lambda * s;
                g.embeddings.row_mut(j).scaled_add(c, &diff);
                g.embeddings.row_mut(k).scaled_add(-c, &diff);
            }
        }
    }
    let terms = LossTerms {
        alignment,
        diversity,
        total: alignment - problem.lambda * diversity,
    };
    Ok((terms, grad))
}

pub fn loss_terms(params: &SprintParams, problem: &LossProblem<'_>, subset: &[usize]) -> Result<LossTerms> {
    evaluate(params, problem, subset, false).map(|(t, _)| t)
}

/// Objective value over the questions in `subset`.
pub fn loss(params: &SprintParams, problem: &LossProblem<'_>, subset: &[usize]) -> Result<f64> {
    loss_terms(params, problem, subset).map(|t| t.total)
}

/// Analytic gradient of [`loss`] with respect to `W`, `b` and every `v_j`.
pub fn loss_gradients(params: &SprintParams, problem: &LossProblem<'_>, subset: &[usize]) -> Result<Gradients> {
    evaluate(params, problem, subset, true).map(|(_, g)| g.expect("gradient requested"))
}

pub fn loss_and_gradients(
    params: &SprintParams,
    problem: &LossProblem<'_>,
    subset: &[usize],
) -> Result<(LossTerms, Gradients)> {
    evaluate(params, problem, subset, true).map(|(t, g)| (t, g.expect("gradient requested")))
}

struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    t: i32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    fn new(kind: OptimizerKind, lr: f64, sizes: &[usize]) -> Self {
        Self {
            kind,
            lr,
            t: 0,
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn begin_step(&mut self) {
        self.t += 1;
    }

    fn update(&mut self, slot: usize, params: &mut [f64], grad: &[f64]) {
        let lr = self.lr;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::SgdMomentum { beta } => {
                for ((p, g), m) in params.iter_mut().zip(grad).zip(&mut self.first[slot]) {
                    *m = beta * *m + g;
                    *p -= lr * *m;
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                let moments = self.first[slot].iter_mut().zip(&mut self.second[slot]);
                for ((p, g), (m, s)) in params.iter_mut().zip(grad).zip(moments) {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *s = beta2 * *s + (1.0 - beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*s / c2).sqrt() + eps);
                }
            }
        }
    }
}

fn slice(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

/// Trains encoder and head embeddings on `(outcomes, features)`, which must
/// be row-aligned. Fully determined by `cfg` (including its seed).
pub fn train(
    outcomes: &OutcomeMatrix,
    features: &QuestionFeatures,
    catalog: &HeadCatalog,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    cfg.validate()?;
    if features.n() != outcomes.n() {
        return Err(SprintError::Alignment(format!(
            "{} feature rows, {} outcome rows",
            features.n(),
            outcomes.n()
        )));
    }
    if catalog.len() != outcomes.num_heads() {
        return Err(SprintError::CatalogMismatch(format!(
            "catalog has {} heads, outcomes have {}",
            catalog.len(),
            outcomes.num_heads()
        )));
    }
    let sim = similarity(outcomes);
    let problem = LossProblem {
        outcomes,
        similarity: &sim,
        features,
        lambda: cfg.lambda,
    };
    let mut order: Vec<usize> = (0..outcomes.n()).filter(|&i| outcomes.solvable(i)).collect();
    if order.is_empty() {
        return Err(SprintError::NoTrainableQuestions);
    }
    let trainable = order.clone();
    let excluded_questions = outcomes.n() - trainable.len();

    let mut params = SprintParams::random(
        features.dim(),
        cfg.embed_dim,
        catalog.len(),
        cfg.init_std,
        &mut rng_for(cfg.seed, "train/init"),
    );
    params.embeddings.project_to_ball(cfg.radius);

    let trace_point = |params: &SprintParams, step: usize| -> Result<LossPoint> {
        let t = loss_terms(params, &problem, &trainable)?;
        if !t.total.is_finite() {
            return Err(SprintError::Diverged { step, loss: t.total });
        }
        Ok(LossPoint {
            step,
            loss: t.total,
            alignment: t.alignment,
        })
    };
    let mut loss_trace = vec![trace_point(&params, 0)?];

    let mut shuffle_rng = rng_for(cfg.seed, "train/shuffle");
    order.shuffle(&mut shuffle_rng);
    let mut cursor = 0;
    let sizes = [
        params.encoder.weight.len(),
        params.encoder.bias.len(),
        params.embeddings.vectors.len(),
    ];
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &sizes);

    for step in 1..=cfg.steps {
        if cursor >= order.len() {
            order.shuffle(&mut shuffle_rng);
            cursor = 0;
        }
        let end = (cursor + cfg.batch_size).min(order.len());
        let batch = &order[cursor..end];
        cursor = end;

        let (terms, grad) = loss_and_gradients(&params, &problem, batch)?;
        if !terms.total.is_finite() {
            return Err(SprintError::Diverged { step, loss: terms.total });
        }
        opt.begin_step();
        let enc = &mut params.encoder;
        opt.update(0, enc.weight.as_slice_mut().expect("standard layout"), slice(&grad.weight));
        opt.update(1, enc.bias.as_slice_mut().expect("contiguous"), grad.bias.as_slice().expect("contiguous"));
        let emb = &mut params.embeddings;
        opt.update(2, emb.vectors.as_slice_mut().expect("standard layout"), slice(&grad.embeddings));
        emb.project_to_ball(cfg.radius);

        if step % cfg.trace_every == 0 || step == cfg.steps {
            loss_trace.push(trace_point(&params, step)?);
        }
    }

    Ok(TrainedModel {
        params,
        catalog: catalog.clone(),
        config: *cfg,
        loss_trace,
        excluded_questions,
    })
}

/// Squared distances from `q` to every head embedding.
pub fn squared_distances(embeddings: &HeadEmbeddings, q: ArrayView1<'_, f64>) -> Vec<f64> {
    embeddings
        .vectors
        .rows()
        .into_iter()
        .map(|v| {
            let d = &q - &v;
            d.dot(&d)
        })
        .collect()
}

/// Question embeddings for every row of `features`, `n x p`.
pub fn encode_all(encoder: &QuestionEncoder, features: &QuestionFeatures) -> Result<Array2<f64>> {
    if features.dim() != encoder.feature_dim() {
        return Err(SprintError::Dimension(format!(
            "features have dimension {}, encoder expects {}",
            features.dim(),
            encoder.feature_dim()
        )));
    }
    Ok(features.data().dot(&encoder.weight) + encoder.bias.view().insert_axis(Axis(0)))
}
