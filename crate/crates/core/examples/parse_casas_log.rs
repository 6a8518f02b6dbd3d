//! Segments a CASAS log into labeled windows and prints the accounting.
//!
//! cargo run --example parse_casas_log [LOG] [LAYOUT]

use std::path::PathBuf;

use zeroshot_har::ingest::read_casas_file;
use zeroshot_har::model::HomeLayout;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut args = std::env::args().skip(1);
    let log = args
        .next()
        .map(PathBuf::from)
        .unwrap_or(fixtures.join("synthetic/milan_sample.txt"));
    let layout = args
        .next()
        .map(PathBuf::from)
        .unwrap_or(fixtures.join("milan/layout.toml"));

    let layout = HomeLayout::load(&layout)?;
    let (windows, report) = read_casas_file(&log, Some(&layout))?;

    for w in &windows {
        println!(
            "{}  {:<18} {} -> {}  {} events",
            w.window_id,
            w.ground_truth.as_deref().unwrap_or("-"),
            w.start,
            w.end,
            w.events.len()
        );
    }
    for s in &report.lines_skipped {
        println!("skipped line {}: {}", s.line, s.reason);
    }
    println!(
        "orphans {}/{}  events {} = {} + {} + {}  conserved={}",
        report.orphan_begins,
        report.orphan_ends,
        report.events_total,
        report.events_in_windows,
        report.events_orphaned,
        report.events_unannotated,
        report.is_conserved()
    );
    Ok(())
}
