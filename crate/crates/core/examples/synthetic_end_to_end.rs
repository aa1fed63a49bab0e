//! Generate clustered synthetic outcomes, train on 80%, and compare
//! SPRINT against the random-head baseline and the oracle on the rest.
//!
//! ```text
//! cargo run --release --example synthetic_end_to_end -- [p_hi] [p_lo] [seed]
//! ```

use sprint::eval::{evaluate, greedy_head_ranking, DrawMode, GreedyRule, Policy};
use sprint::synth::{generate_synthetic, SynthSpec};
use sprint::trainer::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let mut argv = std::env::args().skip(1);
    let p_hi: f64 = argv.next().map_or(Ok(1.0), |s| s.parse())?;
    let p_lo: f64 = argv.next().map_or(Ok(0.0), |s| s.parse())?;
    let seed: u64 = argv.next().map_or(Ok(0), |s| s.parse())?;

    let spec = SynthSpec {
        clusters: 4,
        heads: 8,
        feature_dim: 16,
        p_hi,
        p_lo,
        n: 2000,
        seed,
        ..SynthSpec::default()
    };
    let data = generate_synthetic(&spec)?;
    let (train_split, test_split) = data.split_fraction(0.8)?;
    println!("dedicated heads per cluster: {:?}", data.truth.dedicated);

    let cfg = TrainConfig {
        embed_dim: 8,
        seed,
        ..TrainConfig::default()
    };
    let model = train(&train_split.outcomes, &train_split.features, &data.catalog, &cfg)?;
    let first = model.loss_trace.first().unwrap();
    let last = model.loss_trace.last().unwrap();
    println!(
        "alignment loss {:.4} -> {:.4}, total {:.4} -> {:.4}, {} questions excluded",
        first.alignment, last.alignment, first.loss, last.loss, model.excluded_questions
    );

    let pool = greedy_head_ranking(&train_split.outcomes, data.catalog.len(), GreedyRule::MarginalCoverage)?;
    println!("greedy pool: {pool:?}");
    let policies = [
        Policy::Sprint(&model),
        Policy::RandomHeads {
            pool,
            mode: DrawMode::PerQuestion,
        },
        Policy::Oracle,
    ];
    let seeds: Vec<u64> = (0..30).collect();
    let report = evaluate(&policies, &test_split.outcomes, &test_split.features, 8, &seeds)?;
    print!("{}", report.table());
    Ok(())
}
