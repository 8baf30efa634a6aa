//! Every activation family on a few inputs, the near-linear initial fit of
//! the kernel activations, and one backward pass.
//!
//! ```text
//! cargo run --example activations
//! ```

use std::sync::Arc;

use wlkaf::activations::{
    activation_backward, activation_forward, default_init_target, gamma_rule_of_thumb, init_alpha, ActivationSpec,
    KafParams,
};
use wlkaf::kernels::build_dictionary;
use wlkaf::{Result, C64};

fn main() -> Result<()> {
    let dict = Arc::new(build_dictionary(8, -2.0, 2.0)?);
    let gamma = gamma_rule_of_thumb(&dict);
    let inputs = [C64::new(0.5, 0.0), C64::new(-0.4, 1.1), C64::new(1.5, -1.5)];

    let names = [
        "split-identity",
        "split-tanh",
        "phase-amplitude",
        "kaf-complex-gaussian",
        "kaf-independent",
        "kaf-real-gaussian",
        "wlkaf-case1",
        "wlkaf-case2",
    ];
    for name in names {
        let spec: ActivationSpec = name.parse()?;
        let params = match spec.uniform_bandwidths(gamma)? {
            Some(bw) => {
                let alpha = init_alpha(&dict, &spec, &bw, default_init_target(&spec), 1e-4)?;
                Some(KafParams::new(dict.clone(), alpha, bw)?)
            }
            None => None,
        };
        let outs: Vec<String> = inputs
            .iter()
            .map(|&z| activation_forward(&spec, params.as_ref(), z).map(|g| format!("{g:.3}")))
            .collect::<Result<_>>()?;
        println!("{name:<22} {}", outs.join("   "));

        if let Some(p) = &params {
            let g = activation_backward(&spec, Some(p), inputs[1], C64::new(1.0, 0.0))?;
            let norm: f64 = g.alpha.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            println!(
                "{:<22} d/dz {:.3}, |d/dalpha| {norm:.3}, d/dlog_gamma {:?}",
                "",
                g.z,
                g.log_bandwidths.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>()
            );
        }
    }
    println!("\nkernel activations start near the identity (kaf-independent near conj(z))");
    Ok(())
}
