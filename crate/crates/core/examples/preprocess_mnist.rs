//! FFT feature extraction: 2-D transform of every image, selection of the
//! coefficients with the largest mean magnitude on the training split, and
//! per-coefficient standardization. Writes the dataset cache.
//!
//! Needs the raw MNIST IDX files in `$WLKAF_DATA_DIR/mnist/` (default `data/mnist/`).
//!
//! ```text
//! cargo run --release --example preprocess_mnist [K]
//! ```

use wlkaf::config::ExperimentConfig;
use wlkaf::experiment::{cmd_preprocess, describe_dataset};
use wlkaf::Result;

fn main() -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(k) = std::env::args().nth(1) {
        cfg.set("k_coeffs", &k)?;
    }
    let (path, ds) = cmd_preprocess(&cfg)?;
    println!("{}", describe_dataset(&ds));
    let first = ds.train.row(0);
    println!(
        "first training sample, first 4 standardized features: {:?}",
        first.iter().take(4).map(|z| format!("{z:.3}")).collect::<Vec<_>>()
    );
    println!("scale of the DC coefficient {:.1}, cache at {}", ds.scale[0], path.display());
    Ok(())
}
