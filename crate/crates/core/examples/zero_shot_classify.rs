//! Zero-shot recognition end to end on the hermetic fixture: summaries and
//! descriptors are embedded with the same encoder and each window takes the
//! label of its nearest descriptor.

use std::path::PathBuf;

use zeroshot_har::embedding::TestEmbedder;
use zeroshot_har::evaluate::{run_zero_shot, Experiment};
use zeroshot_har::model::{read_corpus, HomeLayout};
use zeroshot_har::textgen::{load_descriptors, SummaryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/hermetic");
    let windows = read_corpus(dir.join("corpus.jsonl"))?;
    let layout = HomeLayout::load(dir.join("layout.toml"))?;
    let descriptors = load_descriptors(dir.join("descriptors.toml"))?;
    let summary = SummaryConfig::default();
    let encoder = TestEmbedder::new(384);

    let exp = Experiment::new(
        "hermetic",
        &windows,
        &layout,
        &summary,
        &descriptors,
        &encoder,
    );
    let run = run_zero_shot(&exp)?;

    for p in &run.predictions {
        let best = &p.top[0];
        println!(
            "{}  truth={:<11} predicted={:<11} {:.4} via {}",
            p.window_id,
            p.ground_truth.as_deref().unwrap_or("?"),
            p.predicted_label,
            best.score,
            best.anchor_id
        );
    }
    let m = &run.report.metrics;
    println!(
        "accuracy {:.4}  f1_weighted {:.4}  f1_macro {:.4}",
        m.accuracy, m.f1_weighted, m.f1_macro
    );
    Ok(())
}
