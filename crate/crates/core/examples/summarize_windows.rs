//! Renders the natural-language summary of every window in a corpus, with
//! the special rules from a summary config applied.

use std::path::PathBuf;

use zeroshot_har::ingest::read_casas_file;
use zeroshot_har::model::HomeLayout;
use zeroshot_har::textgen::{raw_event_text, summarize, SummaryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let layout = HomeLayout::load(fixtures.join("milan/layout.toml"))?;
    let cfg = SummaryConfig::load(fixtures.join("summary.toml"))?;
    let (windows, _) =
        read_casas_file(&fixtures.join("synthetic/milan_sample.txt"), Some(&layout))?;

    for w in &windows {
        let s = summarize(w, &layout, &cfg);
        println!(
            "{} ({})",
            s.window_id,
            w.ground_truth.as_deref().unwrap_or("?")
        );
        for part in &s.parts {
            println!("  - {part}");
        }
    }

    // What the encoder sees when summaries are switched off.
    if let Some(w) = windows.first() {
        println!("\nraw: {}", raw_event_text(w));
    }
    Ok(())
}
