//! Adds labeled exemplars to the descriptor anchors and sweeps the number of
//! shots per class over several seeds.

use std::path::PathBuf;

use zeroshot_har::embedding::TestEmbedder;
use zeroshot_har::evaluate::{run_few_shot, Experiment, SupportSplit};
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

    // One window per class is held out as exemplar support.
    let sweep = run_few_shot(
        &exp,
        SupportSplit::Earliest { per_class: 1 },
        &[0, 1],
        &[1, 2, 3],
    )?;

    println!("support: {}", sweep.support_ids.join(", "));
    println!(
        "zero-shot baseline f1_weighted {:.4}",
        sweep.baseline.metrics.f1_weighted
    );
    for r in &sweep.runs {
        println!(
            "shots={} seed={} acc={:.4} exemplars=[{}]",
            r.shots_per_class,
            r.seed,
            r.report.metrics.accuracy,
            r.exemplar_ids.join(" ")
        );
    }
    for a in &sweep.aggregates {
        println!(
            "shots={} runs={} mean_acc={:.4} mean_f1_w={:.4} var={}",
            a.shots_per_class,
            a.runs,
            a.mean_accuracy,
            a.mean_f1_weighted,
            a.variance_f1_weighted
                .map_or("-".into(), |v| format!("{v:.6}"))
        );
    }
    Ok(())
}
