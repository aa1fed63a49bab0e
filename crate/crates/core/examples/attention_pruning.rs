//! Prune each head of a toy attention block both ways (zero the head
//! output, or zero its rows of W_o) and print how far the two disagree.
//!
//! ```text
//! cargo run --example attention_pruning -- [heads] [head_dim] [seq_len] [seed]
//! ```

use sprint::attention::{
    attn_demo, forward_layers, max_abs_diff, random_input, AttentionConfig, AttentionWeights, PruneSet,
};
use sprint::seed::rng_for;

fn main() -> anyhow::Result<()> {
    let mut argv = std::env::args().skip(1).map(|s| s.parse::<u64>());
    let heads = argv.next().transpose()?.unwrap_or(4) as usize;
    let head_dim = argv.next().transpose()?.unwrap_or(8) as usize;
    let seq_len = argv.next().transpose()?.unwrap_or(5) as usize;
    let seed = argv.next().transpose()?.unwrap_or(7);

    let cfg = AttentionConfig::square(heads, head_dim, seq_len)?;
    let demo = attn_demo(&cfg, seed)?;
    print!("{}", demo.to_json_lines());
    println!("max deviation over all heads: {:.3e}", demo.max_deviation());

    // two stacked blocks with one head pruned in each
    let mut r = rng_for(seed, "attn/weights");
    let blocks = [
        AttentionWeights::random(&cfg, true, &mut r),
        AttentionWeights::random(&cfg, true, &mut r),
    ];
    let x = random_input(&cfg, &mut rng_for(seed, "attn/input"));
    let full = forward_layers(&x, &blocks, &cfg, &PruneSet::new(2, heads))?;
    let mut prune = PruneSet::new(2, heads);
    prune.prune(0, 0)?;
    prune.prune(1, heads - 1)?;
    let pruned = forward_layers(&x, &blocks, &cfg, &prune)?;
    println!(
        "pruning {:?} moves the two-block output by {:.4}",
        prune.pairs().collect::<Vec<_>>(),
        max_abs_diff(&full, &pruned)
    );
    Ok(())
}
