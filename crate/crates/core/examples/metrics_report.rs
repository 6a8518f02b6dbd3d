//! Metrics from (truth, predicted) pairs, plus the artifact renderings.

use zeroshot_har::evaluate::{compute_metrics, confusion_csv, heatmap, sample_variance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let labels: Vec<String> = ["Cook", "Relax", "Sleep"].map(String::from).to_vec();
    let pairs = [
        ("Cook", "Cook"),
        ("Cook", "Relax"),
        ("Relax", "Relax"),
        ("Relax", "Relax"),
        ("Relax", "Sleep"),
        ("Sleep", "Sleep"),
    ];
    let m = compute_metrics(&pairs, &labels)?;

    println!(
        "accuracy {:.4}  f1_weighted {:.4}  f1_macro {:.4}",
        m.accuracy, m.f1_weighted, m.f1_macro
    );
    for c in &m.per_class {
        println!(
            "  {:<6} p={:.3} r={:.3} f1={:.3} n={}",
            c.label, c.precision, c.recall, c.f1, c.support
        );
    }
    print!("\n{}", confusion_csv(&m.confusion, "example"));
    print!("\n{}", heatmap(&m.confusion));

    let f1s = [0.61, 0.64, 0.66, 0.63, 0.65];
    println!(
        "\nvariance over seeds: {:.6}",
        sample_variance(&f1s).unwrap_or(0.0)
    );
    Ok(())
}
