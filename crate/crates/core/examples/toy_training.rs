//! Train every benchmark model on the quadrant-XOR toy problem with the
//! Adagrad / early-stopping loop, then round-trip one model through a file.
//!
//! ```text
//! cargo run --release --example toy_training
//! ```

use wlkaf::data::synthetic::xor_like;
use wlkaf::model::{Classifier, TrainObjective};
use wlkaf::model_file::{Architecture, Model, ModelVariant};
use wlkaf::optim::{evaluate, train, TrainConfig};
use wlkaf::Result;

fn main() -> Result<()> {
    let ds = xor_like(2000, 500, 500, 0);
    let arch = Architecture { hidden: vec![16, 16], ..Architecture::default() };
    let cfg = TrainConfig { patience: 500, max_iterations: 3000, ..TrainConfig::default() };
    let obj = TrainObjective::cross_entropy(1e-4);

    let mut last = None;
    for variant in ModelVariant::benchmark() {
        let model = variant.build(ds.dim(), ds.classes, &arch, 0)?;
        let (best, trace) = train(model, &ds.train, &ds.val, &cfg, &obj).map_err(|abort| abort.error)?;
        println!(
            "{:<16} params {:>5}  best val {:.3} at iteration {:>4} of {:>4}  test {:.3}",
            variant.to_string(),
            best.parameter_count(),
            trace.best_val_accuracy,
            trace.best_iteration,
            trace.iterations_run,
            evaluate(&best, &ds.test)?
        );
        last = Some(best);
    }

    let model = last.expect("at least one model");
    let path = std::env::temp_dir().join("wlkaf-toy-model.bin");
    model.save(&path)?;
    let back = Model::load(&path)?;
    println!("reloaded {} : identical = {}, test {:.3}", path.display(), back == model, evaluate(&back, &ds.test)?);
    Ok(())
}
