//! Dictionary, scalar kernels, and the block view of standard and widely
//! linear kernel expansions.
//!
//! ```text
//! cargo run --example kernels_tour
//! ```

use wlkaf::activations::gamma_rule_of_thumb;
use wlkaf::kernels::{
    blocks_from_complex_kernel, build_dictionary, case1_pair, case2_pair_terms, standard_output,
    vector_model_output, widely_linear_output, wl_from_blocks, Case2Term, ComplexKernel,
};
use wlkaf::{Result, C64};

fn main() -> Result<()> {
    let dict = build_dictionary(8, -2.0, 2.0)?;
    let gamma = gamma_rule_of_thumb(&dict);
    println!("dictionary: {} points, spacing {:.4}, rule-of-thumb gamma {:.4}", dict.len(), dict.spacing(), gamma);

    let z = C64::new(0.3, -0.7);
    let alpha: Vec<C64> = (0..dict.len()).map(|j| C64::new((j as f64 * 0.37).sin(), (j as f64 * 0.11).cos()) * 0.1).collect();

    for kernel in [
        ComplexKernel::ComplexGaussian { gamma },
        ComplexKernel::Independent { gamma },
        ComplexKernel::RealGaussian { gamma },
    ] {
        let k = kernel.vector(z, &dict)?;
        let b = blocks_from_complex_kernel(&kernel, z, &dict)?;
        let tied = b.k_rr == b.k_ii && b.k_ri.iter().zip(&b.k_ir).all(|(a, c)| *a == -*c);
        println!(
            "{kernel:?}\n  k(z, d_0) = {:.5}, output {:.5}, blocks tied: {tied}",
            k[0],
            standard_output(&k, &alpha)?
        );
    }

    // Case 1: separate bandwidths for the real and imaginary outputs
    let pair = case1_pair(z, &dict, gamma, 0.5 * gamma)?;
    println!("Case 1 output: {:.5}", widely_linear_output(&pair, &alpha)?);

    // Case 2 with one mixing term
    let term = Case2Term { gamma, gamma_tilde: gamma, omega: 0.3 };
    let pair = case2_pair_terms(z, &dict, &[term])?;
    println!("Case 2 output: {:.5}", widely_linear_output(&pair, &alpha)?);

    // any block kernel has an equivalent kernel / pseudo-kernel pair
    let b = blocks_from_complex_kernel(&ComplexKernel::Independent { gamma }, z, &dict)?;
    let direct = vector_model_output(&b, &alpha)?;
    let via_pair = widely_linear_output(&wl_from_blocks(&b), &alpha)?;
    println!("block model {direct:.6} vs widely linear form {via_pair:.6}");
    Ok(())
}
