//! The five-row ablation: summaries, descriptors, encoder and metric are
//! switched off one at a time.

use std::path::PathBuf;

use zeroshot_har::embedding::{TestEmbedder, ALT_MODEL};
use zeroshot_har::evaluate::{ablation_csv, run_ablation, AltEncoder, Experiment};
use zeroshot_har::model::{read_corpus, HomeLayout};
use zeroshot_har::textgen::{load_descriptors, SummaryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/hermetic");
    let windows = read_corpus(dir.join("corpus.jsonl"))?;
    let layout = HomeLayout::load(dir.join("layout.toml"))?;
    let descriptors = load_descriptors(dir.join("descriptors.toml"))?;
    let summary = SummaryConfig::default();
    let encoder = TestEmbedder::new(384);
    let alt = TestEmbedder::with_model(ALT_MODEL, 384);
    let exp = Experiment::new(
        "hermetic",
        &windows,
        &layout,
        &summary,
        &descriptors,
        &encoder,
    );

    let table = run_ablation(&exp, &AltEncoder::Ready(&alt))?;
    println!("{:<36} {:>8} {:>8} {:>8}", "method", "acc", "f1_w", "f1_m");
    for row in &table.rows {
        match row.outcome.report() {
            Some(r) => println!(
                "{:<36} {:>8.4} {:>8.4} {:>8.4}",
                row.method, r.metrics.accuracy, r.metrics.f1_weighted, r.metrics.f1_macro
            ),
            None => println!("{:<36} unavailable", row.method),
        }
    }

    // Without an alternate encoder the cell is reported rather than dropped.
    let partial = run_ablation(
        &exp,
        &AltEncoder::unavailable("no cache for the alternate model"),
    )?;
    print!("\n{}", ablation_csv(&[partial], "example"));
    Ok(())
}
