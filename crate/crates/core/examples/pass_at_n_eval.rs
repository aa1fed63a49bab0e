//! Pass@N for every policy on one outcome matrix: a trained selector,
//! random heads from a greedy set-cover pool, a fixed order, and the
//! oracle. Writes the JSON report and the plot CSV to the current
//! directory when `--write` is given.
//!
//! ```text
//! cargo run --release --example pass_at_n_eval -- [pool_size] [--write]
//! ```

use sprint::eval::{evaluate, greedy_head_ranking, DrawMode, GreedyRule, Policy};
use sprint::synth::{generate_synthetic, SynthSpec};
use sprint::trainer::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let write = args.iter().any(|a| a == "--write");
    let pool_size: usize = args.iter().find(|a| !a.starts_with("--")).map_or(Ok(4), |s| s.parse())?;

    let data = generate_synthetic(&SynthSpec { p_hi: 0.9, p_lo: 0.2, ..SynthSpec::default() })?;
    let (tr, te) = data.split_fraction(0.8)?;
    let model = train(&tr.outcomes, &tr.features, &data.catalog, &TrainConfig { embed_dim: 8, ..TrainConfig::default() })?;

    let coverage = greedy_head_ranking(&tr.outcomes, pool_size, GreedyRule::MarginalCoverage)?;
    let raw = greedy_head_ranking(&tr.outcomes, pool_size, GreedyRule::RawCount)?;
    println!("greedy pool (coverage) {coverage:?}, by raw count {raw:?}");

    let policies = [
        Policy::Sprint(&model),
        Policy::RandomHeads { pool: coverage.clone(), mode: DrawMode::PerQuestion },
        Policy::Fixed(coverage),
        Policy::Oracle,
    ];
    let seeds: Vec<u64> = (0..30).collect();
    let report = evaluate(&policies, &te.outcomes, &te.features, 6, &seeds)?;
    print!("{}", report.table());
    if write {
        std::fs::write("eval_report.json", report.to_json())?;
        std::fs::write("pass_at_n.csv", report.plot_csv())?;
        println!("wrote eval_report.json and pass_at_n.csv");
    }
    Ok(())
}
