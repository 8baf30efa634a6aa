//! Scaled-down model comparison on MNIST: grid search over `C` on the first
//! seed, then one run per seed for the real-valued baseline, the standard
//! KAF, and both widely linear KAFs.
//!
//! Needs the raw MNIST IDX files in `$WLKAF_DATA_DIR/mnist/` (default
//! `data/mnist/`). With the default 10k/2k/2k subset and 3 seeds this takes
//! roughly half an hour on one core.
//!
//! ```text
//! cargo run --release --example mnist_benchmark [train_size] [seeds] [out]
//! ```

use wlkaf::config::ExperimentConfig;
use wlkaf::experiment::cmd_compare;
use wlkaf::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let train = args.next().unwrap_or_else(|| "10000".into());
    let seeds = args.next().unwrap_or_else(|| "0,1,2".into());
    let out = args.next().unwrap_or_else(|| "runs/mnist-benchmark".into());

    let mut cfg = ExperimentConfig::default();
    cfg.set("train_size", &train)?;
    cfg.set("val_size", "2000")?;
    cfg.set("test_size", "2000")?;
    cfg.set("seeds", &seeds)?;
    cfg.set("out", &out)?;

    let report = cmd_compare(&cfg)?;
    print!("{}", report.render());
    for row in &report.rows {
        let grid: Vec<String> = row.c_search.iter().map(|(c, acc)| format!("C={c:e}: {acc:.4}")).collect();
        println!("{:<16} validation accuracy per C: {}", row.model, grid.join(", "));
    }
    println!("per-run artifacts under {out}/<model>/seed<k>/");
    Ok(())
}
