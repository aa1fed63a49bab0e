//! Train the question encoder and head embeddings on a synthetic split,
//! save the model file, load it back and check nothing changed.
//!
//! ```text
//! cargo run --release --example train_sprint -- [steps] [lambda]
//! ```

use sprint::synth::{generate_synthetic, SynthSpec};
use sprint::trainer::{train, OptimizerKind, TrainConfig};
use sprint::{load_model, save_model};

fn main() -> anyhow::Result<()> {
    let mut argv = std::env::args().skip(1);
    let steps: usize = argv.next().map_or(Ok(1000), |s| s.parse())?;
    let lambda: f64 = argv.next().map_or(Ok(0.01), |s| s.parse())?;

    let data = generate_synthetic(&SynthSpec { n: 1000, ..SynthSpec::default() })?;
    let (tr, _) = data.split_fraction(0.8)?;
    let cfg = TrainConfig {
        steps,
        lambda,
        embed_dim: 8,
        trace_every: steps.div_ceil(10).max(1),
        optimizer: OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 },
        ..TrainConfig::default()
    };
    let model = train(&tr.outcomes, &tr.features, &data.catalog, &cfg)?;
    println!("{:>6} {:>10} {:>10}", "step", "loss", "alignment");
    for pt in &model.loss_trace {
        println!("{:>6} {:>10.5} {:>10.5}", pt.step, pt.loss, pt.alignment);
    }
    println!(
        "{} questions had no solving head; largest |v_j| = {:.3}",
        model.excluded_questions,
        model.embeddings().max_norm()
    );

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.sprint");
    save_model(&model, &path)?;
    let back = load_model(&path)?;
    println!(
        "saved {} bytes, reload identical: {}",
        std::fs::metadata(&path)?.len(),
        back.params == model.params && back.loss_trace == model.loss_trace
    );
    Ok(())
}
