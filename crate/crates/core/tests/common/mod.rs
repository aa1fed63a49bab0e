//! Independent reference computations used by the integration tests. None
//! of these call into the code paths they check.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use sprint::features::QuestionFeatures;
use sprint::outcomes::OutcomeMatrix;
use sprint::trainer::{HeadEmbeddings, QuestionEncoder, SprintParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Agreement counts by the literal triple loop over (j, k, i).
pub fn brute_agreements(z: &OutcomeMatrix) -> Vec<Vec<u32>> {
    let m = z.num_heads();
    let mut out = vec![vec![0u32; m]; m];
    for (j, row) in out.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate() {
            for i in 0..z.n() {
                if z.get(i, j) == z.get(i, k) {
                    *cell += 1;
                }
            }
        }
    }
    out
}

/// Loss by direct transcription of the objective: plain exponentials, no
/// max-subtraction, similarity from brute-force counts.
pub fn naive_loss(
    w: &Array2<f64>,
    b: &Array1<f64>,
    v: &Array2<f64>,
    z: &OutcomeMatrix,
    x: &Array2<f64>,
    lambda: f64,
    subset: &[usize],
) -> f64 {
    let (f, p) = w.dim();
    let lh = v.nrows();
    let mut first = 0.0;
    for &i in subset {
        let mut q = vec![0.0; p];
        for (c, qc) in q.iter_mut().enumerate() {
            *qc = b[c];
            for a in 0..f {
                *qc += w[[a, c]] * x[[i, a]];
            }
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..lh {
            let d2: f64 = (0..p).map(|c| (q[c] - v[[j, c]]).powi(2)).sum();
            let e = (-d2).exp();
            den += e;
            if z.get(i, j) {
                num += e;
            }
        }
        first += -(num / den).ln();
    }
    first /= subset.len() as f64;
    let agree = brute_agreements(z);
    let mut reg = 0.0;
    for j in 0..lh {
        for k in (j + 1)..lh {
            let s = agree[j][k] as f64 / z.n() as f64;
            let d2: f64 = (0..p).map(|c| (v[[j, c]] - v[[k, c]]).powi(2)).sum();
            reg += s * d2;
        }
    }
    first - lambda * reg
}

/// Central differences of `f` at every coordinate of `theta`.
pub fn central_differences(theta: &[f64], step: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut work = theta.to_vec();
    (0..theta.len())
        .map(|c| {
            work[c] = theta[c] + step;
            let up = f(&work);
            work[c] = theta[c] - step;
            let down = f(&work);
            work[c] = theta[c];
            (up - down) / (2.0 * step)
        })
        .collect()
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-2)
}

/// A random loss problem; every row gets at least one positive head.
pub struct LossInstance {
    pub z: OutcomeMatrix,
    pub features: QuestionFeatures,
    pub params: SprintParams,
    pub lambda: f64,
}

impl LossInstance {
    pub fn random(seed: u64, n: usize, lh: usize, p: usize, f: usize, lambda: f64) -> Self {
        let mut r = rng(seed);
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|_| {
                let mut row: Vec<u8> = (0..lh).map(|_| r.random_bool(0.4) as u8).collect();
                let forced = r.random_range(0..lh);
                row[forced] = 1;
                row
            })
            .collect();
        let z = OutcomeMatrix::from_rows(&rows).unwrap();
        let x = Array2::from_shape_fn((n, f), |_| r.random_range(-1.0..1.0));
        let features = QuestionFeatures::new(z.question_ids().to_vec(), x).unwrap();
        let w = Array2::from_shape_fn((f, p), |_| r.random_range(-0.6..0.6));
        let b = Array1::from_shape_fn(p, |_| r.random_range(-0.5..0.5));
        let v = Array2::from_shape_fn((lh, p), |_| r.random_range(-1.0..1.0));
        Self {
            z,
            features,
            params: SprintParams {
                encoder: QuestionEncoder::new(w, b).unwrap(),
                embeddings: HeadEmbeddings { vectors: v },
            },
            lambda,
        }
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let e = &self.params.encoder;
        e.weight
            .iter()
            .chain(e.bias.iter())
            .chain(self.params.embeddings.vectors.iter())
            .copied()
            .collect()
    }

    /// Naive loss with parameters read from a flat `W | b | V` vector.
    pub fn naive_at(&self, theta: &[f64], subset: &[usize]) -> f64 {
        let (f, p) = self.params.encoder.weight.dim();
        let lh = self.params.embeddings.num_heads();
        let w = Array2::from_shape_vec((f, p), theta[..f * p].to_vec()).unwrap();
        let b = Array1::from(theta[f * p..f * p + p].to_vec());
        let v = Array2::from_shape_vec((lh, p), theta[f * p + p..].to_vec()).unwrap();
        naive_loss(&w, &b, &v, &self.z, self.features.data(), self.lambda, subset)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (k - t) as f64)
}

/// Exact expected Pass@N of drawing `N` heads uniformly without
/// replacement from `pool`: 1 - C(misses, N) / C(|pool|, N), averaged
/// over rows.
pub fn expected_random_pass(z: &OutcomeMatrix, pool: &[usize], n: usize) -> f64 {
    let k = n.min(pool.len());
    let total = binomial(pool.len(), k);
    (0..z.n())
        .map(|i| {
            let misses = pool.iter().filter(|&&j| !z.get(i, j)).count();
            1.0 - binomial(misses, k) / total
        })
        .sum::<f64>()
        / z.n() as f64
}

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.5758293035489;
