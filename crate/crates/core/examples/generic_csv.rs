//! Reads a non-CASAS export through a column mapping. Rows with a label form
//! windows; consecutive rows sharing a label belong to the same window.

use std::path::PathBuf;

use zeroshot_har::ingest::{read_csv_file, CsvMapping};
use zeroshot_har::model::HomeLayout;
use zeroshot_har::textgen::{summarize, SummaryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic");
    let mapping = CsvMapping::load(&dir.join("plug_mapping.toml"))?;
    let layout = HomeLayout::load(dir.join("plug_layout.toml"))?;

    let (windows, report) = read_csv_file(&dir.join("plug_events.csv"), &mapping, Some(&layout))?;
    println!(
        "{} windows, {} rows skipped",
        windows.len(),
        report.lines_skipped.len()
    );

    let cfg = SummaryConfig::default();
    for w in &windows {
        println!(
            "\n[{}] {}",
            w.ground_truth.as_deref().unwrap_or("?"),
            w.window_id
        );
        for e in &w.events {
            println!(
                "  {} {:<12} {:<12} {}",
                e.timestamp, e.sensor_id, e.value, e.modality
            );
        }
        println!("  {}", summarize(w, &layout, &cfg).text);
    }
    Ok(())
}
