//! Pass@N evaluation of head-selection policies over a held-out outcome
//! matrix.
//!
//! Every head's correctness on a question is a fixed bit of `Z` (answers
//! come from greedy decoding), so Pass@N of a policy is exact: question `i`
//! counts as solved at `N` iff one of the first `N` heads the policy picks
//! for it has `z_ij = 1`.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SprintError};
use crate::features::QuestionFeatures;
use crate::outcomes::OutcomeMatrix;
use crate::seed::rng_for;
use crate::selector::select_top_n;
use crate::trainer::TrainedModel;

/// When the random-head baseline draws its heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrawMode {
    /// Fresh draw for every question.
    #[default]
    PerQuestion,
    /// One draw shared by every question of a run.
    PerRun,
}

#[derive(Debug, Clone)]
pub enum Policy<'a> {
    /// Nearest head embeddings to the question embedding.
    Sprint(&'a TrainedModel),
    /// `N` heads drawn uniformly without replacement from `pool`.
    RandomHeads { pool: Vec<usize>, mode: DrawMode },
    /// The same ordered list for every question.
    Fixed(Vec<usize>),
    /// Upper bound: solved iff any head solves the question.
    Oracle,
}

impl Policy<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Sprint(_) => "sprint",
            Policy::RandomHeads { .. } => "random",
            Policy::Fixed(_) => "fixed",
            Policy::Oracle => "oracle",
        }
    }

    fn validate(&self, num_heads: usize) -> Result<()> {
        let check = |list: &[usize], what: &str| -> Result<()> {
            if list.is_empty() {
                return Err(SprintError::Argument(format!("{what} must be non-empty")));
            }
            if let Some(j) = list.iter().find(|&&j| j >= num_heads) {
                return Err(SprintError::Argument(format!("{what} head {j} out of range for {num_heads} heads")));
            }
            if list.iter().collect::<BTreeSet<_>>().len() != list.len() {
                return Err(SprintError::Argument(format!("{what} contains repeated heads")));
            }
            Ok(())
        };
        match self {
            Policy::Sprint(m) if m.catalog.len() != num_heads => Err(SprintError::Dimension(format!(
                "model has {} heads, outcomes have {num_heads}",
                m.catalog.len()
            ))),
            Policy::RandomHeads { pool, .. } => check(pool, "random pool"),
            Policy::Fixed(list) => check(list, "fixed list"),
            _ => Ok(()),
        }
    }
}

/// 1 iff one of the first `min(n, row.len())` chosen heads solves the row.
pub fn pass_at_n(row: &[u8], chosen: &[usize], n: usize) -> Result<u8> {
    let k = n.min(row.len());
    if chosen.len() < k {
        return Err(SprintError::Argument(format!(
            "{} chosen heads, Pass@{n} needs {k}",
            chosen.len()
        )));
    }
    prefix_hit(row, chosen, k)
}

fn prefix_hit(row: &[u8], chosen: &[usize], k: usize) -> Result<u8> {
    for &j in chosen.iter().take(k) {
        match row.get(j) {
            Some(1) => return Ok(1),
            Some(_) => {}
            None => {
                return Err(SprintError::Argument(format!(
                    "head index {j} out of range for {} heads",
                    row.len()
                )))
            }
        }
    }
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyRule {
    /// Iterative set cover: each pick maximizes newly covered questions.
    #[default]
    MarginalCoverage,
    /// Top heads by raw solve count.
    RawCount,
}

/// The `pool_size` heads picked greedily on a training matrix. Ties go to
/// the lowest head index.
pub fn greedy_head_ranking(z: &OutcomeMatrix, pool_size: usize, rule: GreedyRule) -> Result<Vec<usize>> {
    let lh = z.num_heads();
    if pool_size == 0 || pool_size > lh {
        return Err(SprintError::Argument(format!("pool size must be in 1..={lh}, got {pool_size}")));
    }
    match rule {
        GreedyRule::RawCount => {
            let counts: Vec<usize> = (0..lh).map(|j| (0..z.n()).filter(|&i| z.get(i, j)).count()).collect();
            let mut order: Vec<usize> = (0..lh).collect();
            order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
            order.truncate(pool_size);
            Ok(order)
        }
        GreedyRule::MarginalCoverage => {
            let mut covered = vec![false; z.n()];
            let mut picked = vec![false; lh];
            let mut ranking = Vec::with_capacity(pool_size);
            for _ in 0..pool_size {
                let mut best: Option<(usize, usize)> = None;
                for j in (0..lh).filter(|&j| !picked[j]) {
                    let gain = (0..z.n()).filter(|&i| !covered[i] && z.get(i, j)).count();
                    if best.is_none_or(|(_, g)| gain > g) {
                        best = Some((j, gain));
                    }
                }
                let (j, _) = best.expect("unpicked head remains");
                picked[j] = true;
                for (i, c) in covered.iter_mut().enumerate() {
                    *c |= z.get(i, j);
                }
                ranking.push(j);
            }
            Ok(ranking)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassPoint {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation across runs (0 for a single run).
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub policy: String,
    /// Evaluation seeds; empty for deterministic policies.
    pub seeds: Vec<u64>,
    pub pass_at: Vec<PassPoint>,
    /// Pass@N rate of each run, `per_run[r][N - 1]`.
    pub per_run: Vec<Vec<f64>>,
    /// Heads chosen for each test question in the first run, best first.
    pub chosen: Vec<Vec<usize>>,
    /// Random pool, or fixed list, when the policy has one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub heads: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub draw_mode: Option<DrawMode>,
}

impl PolicyReport {
    pub fn rate(&self, n: usize) -> f64 {
        self.pass_at[n - 1].mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_test: usize,
    pub n_max: usize,
    pub question_ids: Vec<String>,
    pub policies: Vec<PolicyReport>,
}

impl EvalReport {
    pub fn policy(&self, name: &str) -> Option<&PolicyReport> {
        self.policies.iter().find(|p| p.policy == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SprintError::parse("eval report", e))
    }

    /// `policy,N,mean,stddev`, one row per policy and N.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("policy,N,mean,stddev\n");
        for p in &self.policies {
            for pt in &p.pass_at {
                out.push_str(&format!("{},{},{},{}\n", p.policy, pt.n, pt.mean, pt.stddev));
            }
        }
        out
    }

    /// Fixed-width Pass@N table for terminals.
    pub fn table(&self) -> String {
        let mut out = format!("{:<8}", "policy");
        for n in 1..=self.n_max {
            out.push_str(&format!(" {:>8}", format!("N={n}")));
        }
        out.push('\n');
        for p in &self.policies {
            out.push_str(&format!("{:<8}", p.policy));
            for pt in &p.pass_at {
                out.push_str(&format!(" {:>8.4}", pt.mean));
            }
            out.push('\n');
        }
        out
    }
}

/// Per-question ordered candidate heads for one run of one policy.
fn candidate_lists(
    policy: &Policy<'_>,
    z: &OutcomeMatrix,
    features: &QuestionFeatures,
    n_max: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let n = z.n();
    match policy {
        Policy::Sprint(model) => (0..n)
            .map(|i| select_top_n(model, features.row(i), n_max).map(|t| t.heads))
            .collect(),
        Policy::Fixed(list) => Ok(vec![list.iter().copied().take(n_max).collect(); n]),
        Policy::Oracle => Ok((0..n)
            .map(|i| (0..z.num_heads()).filter(|&j| z.get(i, j)).take(n_max).collect())
            .collect()),
        Policy::RandomHeads { pool, mode } => {
            let mut rng = rng_for(seed, &format!("eval/random/{seed}"));
            let mut draw = || {
                let mut p = pool.clone();
                p.shuffle(&mut rng);
                p.truncate(n_max);
                p
            };
            Ok(match mode {
                DrawMode::PerQuestion => (0..n).map(|_| draw()).collect(),
                DrawMode::PerRun => vec![draw(); n],
            })
        }
    }
}

fn run_rates(policy: &Policy<'_>, z: &OutcomeMatrix, lists: &[Vec<usize>], n_max: usize) -> Result<Vec<f64>> {
    let mut solved = vec![0usize; n_max];
    for (i, list) in lists.iter().enumerate() {
        let row = z.row(i);
        for (n, count) in (1..=n_max).zip(solved.iter_mut()) {
            let hit = match policy {
                Policy::Oracle => z.solvable(i) as u8,
                _ => prefix_hit(&row, list, n.min(list.len()))?,
            };
            *count += hit as usize;
        }
    }
    Ok(solved.iter().map(|&c| c as f64 / z.n() as f64).collect())
}

fn mean_and_stddev(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

/// Evaluates each policy for `N = 1..=n_max`. Random policies run once per
/// seed in `seeds`; the others run once.
pub fn evaluate(
    policies: &[Policy<'_>],
    z: &OutcomeMatrix,
    features: &QuestionFeatures,
    n_max: usize,
    seeds: &[u64],
) -> Result<EvalReport> {
    if n_max == 0 {
        return Err(SprintError::Argument("n-max must be >= 1".into()));
    }
    if features.ids() != z.question_ids() {
        return Err(SprintError::Alignment(
            "feature rows and outcome rows must list the same questions in the same order".into(),
        ));
    }
    let mut reports = Vec::with_capacity(policies.len());
    for policy in policies {
        policy.validate(z.num_heads())?;
        let (run_seeds, report_seeds) = match policy {
            Policy::RandomHeads { .. } => {
                if seeds.is_empty() {
                    return Err(SprintError::Argument("random policy needs at least one seed".into()));
                }
                (seeds.to_vec(), seeds.to_vec())
            }
            _ => (vec![0], Vec::new()),
        };
        let mut per_run = Vec::with_capacity(run_seeds.len());
        let mut chosen = Vec::new();
        for (r, &seed) in run_seeds.iter().enumerate() {
            let lists = candidate_lists(policy, z, features, n_max, seed)?;
            per_run.push(run_rates(policy, z, &lists, n_max)?);
            if r == 0 {
                chosen = lists;
            }
        }
        let pass_at = (0..n_max)
            .map(|k| {
                let column: Vec<f64> = per_run.iter().map(|run| run[k]).collect();
                let (mean, stddev) = mean_and_stddev(&column);
                PassPoint { n: k + 1, mean, stddev }
            })
            .collect();
        let (heads, draw_mode) = match policy {
            Policy::RandomHeads { pool, mode } => (Some(pool.clone()), Some(*mode)),
            Policy::Fixed(list) => (Some(list.clone()), None),
            _ => (None, None),
        };
        reports.push(PolicyReport {
            policy: policy.name().to_string(),
            seeds: report_seeds,
            pass_at,
            per_run,
            chosen,
            heads,
            draw_mode,
        });
    }
    Ok(EvalReport {
        n_test: z.n(),
        n_max,
        question_ids: z.question_ids().to_vec(),
        policies: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcomes::HeadCatalog;
    use crate::trainer::{HeadEmbeddings, QuestionEncoder, SprintParams, TrainConfig};
    use ndarray::{array, Array1, Array2};

    fn features_for(z: &OutcomeMatrix, data: Array2<f64>) -> QuestionFeatures {
        QuestionFeatures::new(z.question_ids().to_vec(), data).unwrap()
    }

    #[test]
    fn pass_at_n_examples() {
        assert_eq!(pass_at_n(&[0, 0, 1], &[0, 1, 2], 3).unwrap(), 1);
        assert_eq!(pass_at_n(&[0, 0, 1], &[0, 1, 2], 2).unwrap(), 0);
        assert_eq!(pass_at_n(&[1, 1, 1], &[2, 0, 1], 1).unwrap(), 1);
        assert!(pass_at_n(&[0, 0], &[5], 1).is_err());
        assert!(pass_at_n(&[0, 0], &[0], 2).is_err());
        // N beyond LH clamps to the whole row
        assert_eq!(pass_at_n(&[0, 1], &[0, 1], 9).unwrap(), 1);
    }

    #[test]
    fn greedy_cover_prefers_new_coverage() {
        // A solves {1,2,3}, B solves {1,2}, C solves {4}
        let z = OutcomeMatrix::from_rows(&[
            vec![1, 1, 0],
            vec![1, 1, 0],
            vec![1, 0, 0],
            vec![0, 0, 1],
        ])
        .unwrap();
        assert_eq!(greedy_head_ranking(&z, 3, GreedyRule::MarginalCoverage).unwrap(), vec![0, 2, 1]);
        assert_eq!(greedy_head_ranking(&z, 3, GreedyRule::RawCount).unwrap(), vec![0, 1, 2]);
        assert!(greedy_head_ranking(&z, 0, GreedyRule::MarginalCoverage).is_err());
        assert!(greedy_head_ranking(&z, 4, GreedyRule::MarginalCoverage).is_err());
    }

    #[test]
    fn greedy_edge_cases() {
        let single = OutcomeMatrix::from_rows(&[vec![0], vec![1]]).unwrap();
        assert_eq!(greedy_head_ranking(&single, 1, GreedyRule::MarginalCoverage).unwrap(), vec![0]);
        // head 0 solves nothing and comes last
        let z = OutcomeMatrix::from_rows(&[vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        assert_eq!(greedy_head_ranking(&z, 3, GreedyRule::MarginalCoverage).unwrap(), vec![1, 2, 0]);
    }

    #[test]
    fn oracle_and_exhaustive_fixed_agree() {
        let z = OutcomeMatrix::from_rows(&[vec![0, 0, 0], vec![0, 1, 0], vec![1, 0, 1], vec![0, 0, 1]]).unwrap();
        let f = features_for(&z, Array2::zeros((4, 1)));
        let r = evaluate(&[Policy::Oracle, Policy::Fixed(vec![0, 1, 2])], &z, &f, 3, &[]).unwrap();
        let oracle = r.policy("oracle").unwrap();
        assert!(oracle.pass_at.iter().all(|p| p.mean == 0.75));
        assert_eq!(r.policy("fixed").unwrap().rate(3), 0.75);
        assert_eq!(r.policy("fixed").unwrap().rate(1), 0.25);
    }

    #[test]
    fn planted_sprint_model_ranks_solver_first() {
        // question 0 solved only by head 1, question 1 only by head 0
        let z = OutcomeMatrix::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap();
        let f = features_for(&z, array![[1.0, 0.0], [0.0, 1.0]]);
        let model = TrainedModel {
            params: SprintParams {
                encoder: QuestionEncoder::new(Array2::eye(2), Array1::zeros(2)).unwrap(),
                embeddings: HeadEmbeddings {
                    vectors: array![[0.0, 1.0], [1.0, 0.0]],
                },
            },
            catalog: HeadCatalog::grid(&[0], 2).unwrap(),
            config: TrainConfig::default(),
            loss_trace: vec![],
            excluded_questions: 0,
        };
        let r = evaluate(&[Policy::Sprint(&model)], &z, &f, 2, &[]).unwrap();
        assert_eq!(r.policies[0].rate(1), 1.0);
        assert_eq!(r.policies[0].chosen, vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn random_policy_is_seeded_and_reported() {
        let z = OutcomeMatrix::from_rows(&[vec![0, 1, 0, 0], vec![1, 0, 0, 0], vec![0, 0, 0, 1]]).unwrap();
        let f = features_for(&z, Array2::zeros((3, 1)));
        let policy = Policy::RandomHeads {
            pool: vec![0, 1, 2, 3],
            mode: DrawMode::PerQuestion,
        };
        let a = evaluate(std::slice::from_ref(&policy), &z, &f, 4, &[1, 2, 3]).unwrap();
        let b = evaluate(&[policy], &z, &f, 4, &[1, 2, 3]).unwrap();
        assert_eq!(a, b);
        let p = &a.policies[0];
        assert_eq!(p.per_run.len(), 3);
        assert_eq!(p.seeds, vec![1, 2, 3]);
        assert_eq!(p.rate(4), 1.0);
        assert_eq!(EvalReport::from_json(&a.to_json()).unwrap(), a);
        assert_eq!(a.plot_csv().lines().count(), 1 + 4);
    }

    #[test]
    fn per_run_draws_share_the_list() {
        let z = OutcomeMatrix::from_rows(&[vec![0, 1, 0], vec![1, 0, 0]]).unwrap();
        let f = features_for(&z, Array2::zeros((2, 1)));
        let policy = Policy::RandomHeads {
            pool: vec![0, 1, 2],
            mode: DrawMode::PerRun,
        };
        let r = evaluate(&[policy], &z, &f, 2, &[4]).unwrap();
        assert_eq!(r.policies[0].chosen[0], r.policies[0].chosen[1]);
    }

    #[test]
    fn misaligned_and_invalid_inputs() {
        let z = OutcomeMatrix::from_rows(&[vec![0, 1]]).unwrap();
        let other = QuestionFeatures::new(vec!["x".into()], Array2::zeros((1, 1))).unwrap();
        assert!(matches!(
            evaluate(&[Policy::Oracle], &z, &other, 1, &[]),
            Err(SprintError::Alignment(_))
        ));
        let f = features_for(&z, Array2::zeros((1, 1)));
        assert!(evaluate(&[Policy::Oracle], &z, &f, 0, &[]).is_err());
        assert!(evaluate(&[Policy::Fixed(vec![0, 0])], &z, &f, 1, &[]).is_err());
        assert!(evaluate(&[Policy::Fixed(vec![2])], &z, &f, 1, &[]).is_err());
        let empty_pool = Policy::RandomHeads {
            pool: vec![],
            mode: DrawMode::PerQuestion,
        };
        assert!(evaluate(&[empty_pool], &z, &f, 1, &[0]).is_err());
    }
}
