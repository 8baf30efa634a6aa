//! Training-loss curves of the standard KAF and the Case 1 widely linear KAF
//! over matched seeds, merged into one mean/std CSV.
//!
//! Uses MNIST when its IDX files are available, otherwise the toy XOR set.
//!
//! ```text
//! cargo run --release --example convergence_curves [out_dir]
//! ```

use std::path::PathBuf;

use wlkaf::config::ExperimentConfig;
use wlkaf::experiment::{cmd_curves, load_dataset, train_run};
use wlkaf::model_file::ModelVariant;
use wlkaf::Result;

fn main() -> Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "runs/curves".into()));
    let mut cfg = ExperimentConfig::default();
    cfg.set("max_iterations", "4000")?;
    cfg.set("train_size", "10000")?;
    cfg.set("val_size", "2000")?;
    cfg.set("test_size", "2000")?;
    let ds = match load_dataset(&cfg) {
        Ok(ds) => ds,
        Err(e) => {
            eprintln!("{e}; falling back to the toy XOR set");
            cfg.set("dataset", "toy-xor")?;
            cfg.set("hidden", "16,16")?;
            load_dataset(&cfg)?
        }
    };

    let mut traces = Vec::new();
    for name in ["kaf_independent", "wlkaf_case1"] {
        let variant: ModelVariant = name.parse()?;
        for seed in 0..3 {
            let dir = out.join(name).join(format!("seed{seed}"));
            let (_, trace, summary) = train_run(&cfg, &ds, &variant, seed, cfg.c, &dir)?;
            println!(
                "{name} seed {seed}: mean loss over 500-4000 {:.4}, test {:.4}",
                trace.mean_loss_between(500, 4000).unwrap_or(f64::NAN),
                summary.test_accuracy.unwrap_or(f64::NAN)
            );
            traces.push(format!("{name}={}", dir.join("trace.csv").display()));
        }
    }
    let merged = out.join("curves.csv");
    let csv = cmd_curves(&traces, &merged, false)?;
    for line in csv.lines().take(6) {
        println!("{line}");
    }
    println!("... full curves in {}", merged.display());
    Ok(())
}
