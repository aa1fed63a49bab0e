//! Rank heads for a few held-out questions with a trained model and
//! compare the choice against the heads that actually solve them.
//!
//! ```text
//! cargo run --release --example select_heads -- [top_n]
//! ```

use sprint::selector::{select, select_top_n};
use sprint::synth::{generate_synthetic, SynthSpec};
use sprint::trainer::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let top_n: usize = std::env::args().nth(1).map_or(Ok(2), |s| s.parse())?;
    let data = generate_synthetic(&SynthSpec { heads: 4, layers: 2, p_hi: 0.9, p_lo: 0.1, ..SynthSpec::default() })?;
    let (tr, te) = data.split_fraction(0.8)?;
    let model = train(&tr.outcomes, &tr.features, &data.catalog, &TrainConfig { embed_dim: 8, ..TrainConfig::default() })?;

    for i in 0..5 {
        let x = te.features.row(i);
        let ranking = select(&model, x)?;
        let best = &ranking.ranked[0];
        let top = select_top_n(&model, x, top_n)?;
        let solvers: Vec<usize> = (0..te.outcomes.num_heads()).filter(|&j| te.outcomes.get(i, j)).collect();
        println!(
            "{}: nearest L{}H{} (d^2 {:.3}), top-{top_n} {:?}{}, solved by {solvers:?}",
            te.features.ids()[i],
            best.layer,
            best.head,
            best.squared_distance,
            top.heads,
            if top.clamped { " (clamped)" } else { "" },
        );
    }
    Ok(())
}
