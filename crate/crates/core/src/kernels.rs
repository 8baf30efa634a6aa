//! Kernels and pseudo-kernels over complex inputs.
//!
//! Besides the three scalar kernels (complex Gaussian, independent kernel,
//! real Gaussian on complex inputs) this module exposes the block view of a
//! complex kernel as a 2×2 real matrix-valued kernel, the map from blocks to
//! a widely linear (kernel, pseudo-kernel) pair, and the two widely linear
//! constructions used by the activation functions.

use crate::cnum::{C64, I, ZERO};
use crate::error::{Error, Result};

/// Largest magnitude allowed for the real part of the complex Gaussian's
/// exponent before the evaluation is treated as an overflow.
pub const COMPLEX_GAUSSIAN_EXPONENT_LIMIT: f64 = 700.0;

/// Fixed grid of complex sample points.
///
/// Points are stored row-major with the imaginary axis outer and the real
/// axis inner: point `j = r·m + c` is `axis[c] + i·axis[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    points: Vec<C64>,
    axis: Vec<f64>,
    points_per_axis: usize,
    range: (f64, f64),
    spacing: f64,
}

impl Dictionary {
    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// The `m` equispaced values shared by both axes.
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of dictionary points `D = m²`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Flat index of the point with imaginary-axis row `r` and real-axis column `c`.
    pub fn index(&self, r: usize, c: usize) -> usize {
        r * self.points_per_axis + c
    }
}

/// Build an `m × m` grid over `[lo, hi]` on both axes.
pub fn build_dictionary(points_per_axis: usize, lo: f64, hi: f64) -> Result<Dictionary> {
    if points_per_axis < 2 {
        return Err(Error::Parameter(format!(
            "dictionary needs at least 2 points per axis, got {points_per_axis}"
        )));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Parameter(format!("invalid dictionary range [{lo}, {hi}]")));
    }
    let m = points_per_axis;
    let spacing = (hi - lo) / (m - 1) as f64;
    let axis: Vec<f64> = (0..m)
        .map(|i| if i == m - 1 { hi } else { lo + spacing * i as f64 })
        .collect();
    let points = axis
        .iter()
        .flat_map(|&im| axis.iter().map(move |&re| C64::new(re, im)))
        .collect();
    Ok(Dictionary {
        points,
        axis,
        points_per_axis: m,
        range: (lo, hi),
        spacing,
    })
}

/// One-dimensional real Gaussian `exp{−γ(u − v)²}`.
///
/// Every Gaussian in the crate is assembled from this factor, so batched and
/// scalar evaluations agree bit for bit.
#[inline]
pub fn axis_factor(u: f64, v: f64, gamma: f64) -> f64 {
    let d = u - v;
    (-gamma * (d * d)).exp()
}

/// Exponents beyond this magnitude make the recurrence in [`axis_factors`]
/// fall back to direct evaluation.
const RECURRENCE_LIMIT: f64 = 300.0;

/// `out[k] = exp{−γ(u − axis[k])²}` for an equispaced `axis` with step `spacing`.
///
/// Uses `e[k+1] = e[k]·q[k]`, `q[k+1] = q[k]·exp(−2γΔ²)`, which needs three
/// exponentials instead of one per point. Agrees with [`axis_factor`] to a few
/// ulps; inputs whose exponents could leave the normal range are evaluated
/// directly.
#[inline]
pub fn axis_factors(u: f64, axis: &[f64], spacing: f64, gamma: f64, out: &mut [f64]) {
    let m = axis.len();
    let d0 = u - axis[0];
    let dl = u - axis[m - 1];
    let step = 2.0 * gamma * spacing;
    let safe = m > 2
        && gamma * d0 * d0 < RECURRENCE_LIMIT
        && gamma * dl * dl < RECURRENCE_LIMIT
        && step * spacing < RECURRENCE_LIMIT
        && step * d0.abs().max(dl.abs()) < RECURRENCE_LIMIT;
    if !safe {
        for (o, &a) in out.iter_mut().zip(axis) {
            *o = axis_factor(u, a, gamma);
        }
        return;
    }
    let decay = (-step * spacing).exp();
    let mut q = (step * d0 - gamma * spacing * spacing).exp();
    let mut e = (-gamma * d0 * d0).exp();
    for o in &mut out[..m] {
        *o = e;
        e *= q;
        q *= decay;
    }
}

/// Complex Gaussian `exp{−γ(z − d*)²}` with complex squaring.
///
/// Unbounded off the reflected diagonal; fails when the exponent's real part
/// exceeds [`COMPLEX_GAUSSIAN_EXPONENT_LIMIT`] in magnitude.
pub fn gaussian_complex(z: C64, d: C64, gamma: f64) -> Result<C64> {
    let u = z - d.conj();
    let arg = -(u * u) * gamma;
    if arg.re.abs() > COMPLEX_GAUSSIAN_EXPONENT_LIMIT || !arg.re.is_finite() || !arg.im.is_finite() {
        return Err(Error::Numeric(format!(
            "complex Gaussian exponent {arg} out of range at z = {z}, d = {d}, gamma = {gamma}"
        )));
    }
    Ok(arg.exp())
}

/// Real-valued Gaussian on complex inputs, `exp{−γ|z − d|²}`.
#[inline]
pub fn gaussian_real_of_complex(z: C64, d: C64, gamma: f64) -> f64 {
    axis_factor(z.re, d.re, gamma) * axis_factor(z.im, d.im, gamma)
}

/// Independent kernel built from four real Gaussians on component pairs.
#[inline]
pub fn independent_kernel(z: C64, d: C64, gamma: f64) -> C64 {
    let re = axis_factor(z.re, d.re, gamma) + axis_factor(z.im, d.im, gamma);
    let im = axis_factor(z.re, d.im, gamma) - axis_factor(z.im, d.re, gamma);
    C64::new(re, im)
}

/// The scalar complex kernels usable in a standard kernel expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComplexKernel {
    /// `exp{−γ(z − d*)²}`
    ComplexGaussian { gamma: f64 },
    /// Independent kernel with real Gaussian components.
    Independent { gamma: f64 },
    /// `exp{−γ|z − d|²}` (real-valued output).
    RealGaussian { gamma: f64 },
}

impl ComplexKernel {
    pub fn gamma(&self) -> f64 {
        match *self {
            ComplexKernel::ComplexGaussian { gamma }
            | ComplexKernel::Independent { gamma }
            | ComplexKernel::RealGaussian { gamma } => gamma,
        }
    }

    pub fn eval(&self, z: C64, d: C64) -> Result<C64> {
        match *self {
            ComplexKernel::ComplexGaussian { gamma } => gaussian_complex(z, d, gamma),
            ComplexKernel::Independent { gamma } => Ok(independent_kernel(z, d, gamma)),
            ComplexKernel::RealGaussian { gamma } => {
                Ok(C64::new(gaussian_real_of_complex(z, d, gamma), 0.0))
            }
        }
    }

    /// Kernel vector `k` between `z` and every dictionary point.
    pub fn vector(&self, z: C64, dict: &Dictionary) -> Result<Vec<C64>> {
        dict.points().iter().map(|&d| self.eval(z, d)).collect()
    }
}

/// Real blocks of a 2×2 matrix-valued kernel evaluated against a dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBlockSet {
    pub k_rr: Vec<f64>,
    pub k_ri: Vec<f64>,
    pub k_ir: Vec<f64>,
    pub k_ii: Vec<f64>,
}

impl KernelBlockSet {
    pub fn new(k_rr: Vec<f64>, k_ri: Vec<f64>, k_ir: Vec<f64>, k_ii: Vec<f64>) -> Result<Self> {
        let d = k_rr.len();
        if k_ri.len() != d || k_ir.len() != d || k_ii.len() != d {
            return Err(Error::Dimension("kernel blocks must share one length".into()));
        }
        let all = k_rr.iter().chain(&k_ri).chain(&k_ir).chain(&k_ii);
        if let Some(v) = all.into_iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite kernel block entry {v}")));
        }
        Ok(Self { k_rr, k_ri, k_ir, k_ii })
    }

    pub fn len(&self) -> usize {
        self.k_rr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_rr.is_empty()
    }
}

/// Block form of a standard complex kernel expansion: `k_rr = k_ii = Re k`,
/// `k_ir = Im k`, `k_ri = −Im k`.
pub fn blocks_from_complex_kernel(
    kernel: &ComplexKernel,
    z: C64,
    dict: &Dictionary,
) -> Result<KernelBlockSet> {
    blocks_from_kernel_vector(&kernel.vector(z, dict)?)
}

/// Block form of an already evaluated kernel vector.
pub fn blocks_from_kernel_vector(k: &[C64]) -> Result<KernelBlockSet> {
    let re: Vec<f64> = k.iter().map(|v| v.re).collect();
    let im: Vec<f64> = k.iter().map(|v| v.im).collect();
    let neg_im = im.iter().map(|v| -v).collect();
    KernelBlockSet::new(re.clone(), neg_im, im, re)
}

/// Kernel and pseudo-kernel vectors of a widely linear expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPair {
    pub k: Vec<C64>,
    pub k_tilde: Vec<C64>,
}

/// Kernel and pseudo-kernel equivalent to a matrix-valued kernel given by its blocks.
pub fn wl_from_blocks(blocks: &KernelBlockSet) -> KernelPair {
    let n = blocks.len();
    let mut k = Vec::with_capacity(n);
    let mut k_tilde = Vec::with_capacity(n);
    for j in 0..n {
        let (rr, ri, ir, ii) = (blocks.k_rr[j], blocks.k_ri[j], blocks.k_ir[j], blocks.k_ii[j]);
        k.push(C64::new(0.5 * (rr + ii), 0.5 * (ir - ri)));
        k_tilde.push(C64::new(0.5 * (rr - ii), 0.5 * (ir + ri)));
    }
    KernelPair { k, k_tilde }
}

/// Output of the matrix-valued (two-output) kernel model:
/// `[g_r; g_i] = [k_rrᵀ k_riᵀ; k_irᵀ k_iiᵀ]·[Re α; Im α]`.
pub fn vector_model_output(blocks: &KernelBlockSet, alpha: &[C64]) -> Result<C64> {
    if alpha.len() != blocks.len() {
        return Err(Error::Dimension(format!(
            "alpha has {} entries, blocks have {}",
            alpha.len(),
            blocks.len()
        )));
    }
    let (mut gr, mut gi) = (0.0, 0.0);
    for (j, a) in alpha.iter().enumerate() {
        gr += blocks.k_rr[j] * a.re + blocks.k_ri[j] * a.im;
        gi += blocks.k_ir[j] * a.re + blocks.k_ii[j] * a.im;
    }
    Ok(C64::new(gr, gi))
}

/// Standard expansion `kᵀα` (plain transpose, no conjugation).
pub fn standard_output(k: &[C64], alpha: &[C64]) -> Result<C64> {
    if k.len() != alpha.len() {
        return Err(Error::Dimension(format!("k has {} entries, alpha {}", k.len(), alpha.len())));
    }
    Ok(k.iter().zip(alpha).map(|(a, b)| a * b).sum())
}

/// Widely linear expansion `kᵀα + k̃ᵀα*`.
pub fn widely_linear_output(pair: &KernelPair, alpha: &[C64]) -> Result<C64> {
    if pair.k_tilde.len() != alpha.len() {
        return Err(Error::Dimension(format!(
            "pseudo-kernel has {} entries, alpha {}",
            pair.k_tilde.len(),
            alpha.len()
        )));
    }
    let pseudo: C64 = pair.k_tilde.iter().zip(alpha).map(|(a, b)| a * b.conj()).sum();
    Ok(standard_output(&pair.k, alpha)? + pseudo)
}

/// One term of the separable widely linear construction: a kernel with
/// bandwidth `gamma`, a pseudo-kernel with bandwidth `gamma_tilde`, and the
/// mixing weight `omega ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Case2Term {
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub omega: f64,
}

/// Bandwidth parameters of a kernel activation, stored as `log γ` so that any
/// unconstrained update keeps every bandwidth positive.
#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthParams {
    Standard { log_gamma: f64 },
    Case1 { log_gamma_rr: f64, log_gamma_ii: f64 },
    Case2 { log_gammas: Vec<(f64, f64)>, omegas: Vec<f64> },
}

fn log_of_positive(gamma: f64) -> Result<f64> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(gamma.ln())
    } else {
        Err(Error::Parameter(format!("bandwidth must be a positive finite real, got {gamma}")))
    }
}

pub(crate) fn validate_omegas(omegas: &[f64]) -> Result<()> {
    if omegas.is_empty() {
        return Err(Error::Parameter("separable construction needs Q ≥ 1 terms".into()));
    }
    if let Some(w) = omegas.iter().find(|w| !(**w > 0.0 && **w < 1.0)) {
        return Err(Error::Parameter(format!("mixing weight omega must lie in (0, 1), got {w}")));
    }
    Ok(())
}

impl BandwidthParams {
    pub fn standard(gamma: f64) -> Result<Self> {
        Ok(BandwidthParams::Standard { log_gamma: log_of_positive(gamma)? })
    }

    pub fn case1(gamma_rr: f64, gamma_ii: f64) -> Result<Self> {
        Ok(BandwidthParams::Case1 {
            log_gamma_rr: log_of_positive(gamma_rr)?,
            log_gamma_ii: log_of_positive(gamma_ii)?,
        })
    }

    pub fn case2(terms: &[Case2Term]) -> Result<Self> {
        let omegas: Vec<f64> = terms.iter().map(|t| t.omega).collect();
        validate_omegas(&omegas)?;
        let log_gammas = terms
            .iter()
            .map(|t| Ok((log_of_positive(t.gamma)?, log_of_positive(t.gamma_tilde)?)))
            .collect::<Result<_>>()?;
        Ok(BandwidthParams::Case2 { log_gammas, omegas })
    }

    /// Trainable log-bandwidths in storage order.
    pub fn log_values(&self) -> Vec<f64> {
        match self {
            BandwidthParams::Standard { log_gamma } => vec![*log_gamma],
            BandwidthParams::Case1 { log_gamma_rr, log_gamma_ii } => vec![*log_gamma_rr, *log_gamma_ii],
            BandwidthParams::Case2 { log_gammas, .. } => {
                log_gammas.iter().flat_map(|&(a, b)| [a, b]).collect()
            }
        }
    }

    /// Case 2 terms with bandwidths mapped back out of log space.
    pub fn case2_terms(&self) -> Option<Vec<Case2Term>> {
        match self {
            BandwidthParams::Case2 { log_gammas, omegas } => Some(
                log_gammas
                    .iter()
                    .zip(omegas)
                    .map(|(&(a, b), &omega)| Case2Term { gamma: a.exp(), gamma_tilde: b.exp(), omega })
                    .collect(),
            ),
            _ => None,
        }
    }
}

/// Kernel/pseudo-kernel pair with independent real and imaginary outputs:
/// `k = ½(k_rr + k_ii)`, `k̃ = ½(k_rr − k_ii)`, each block a real Gaussian
/// with its own bandwidth.
pub fn case1_pair(z: C64, dict: &Dictionary, gamma_rr: f64, gamma_ii: f64) -> Result<KernelPair> {
    log_of_positive(gamma_rr)?;
    log_of_positive(gamma_ii)?;
    let mut k = Vec::with_capacity(dict.len());
    let mut k_tilde = Vec::with_capacity(dict.len());
    for &d in dict.points() {
        let rr = gaussian_real_of_complex(z, d, gamma_rr);
        let ii = gaussian_real_of_complex(z, d, gamma_ii);
        k.push(C64::new(0.5 * (rr + ii), 0.0));
        k_tilde.push(C64::new(0.5 * (rr - ii), 0.0));
    }
    Ok(KernelPair { k, k_tilde })
}

/// Separable construction `k = Σ_q κ^q`, `k̃ = 2i·Σ_q ω_q κ̃^q`, with every
/// component a real Gaussian on complex inputs.
pub fn case2_pair(z: C64, dict: &Dictionary, params: &BandwidthParams) -> Result<KernelPair> {
    let terms = params
        .case2_terms()
        .ok_or_else(|| Error::Parameter("case2_pair needs Case 2 bandwidth parameters".into()))?;
    case2_pair_terms(z, dict, &terms)
}

/// [`case2_pair`] over explicit terms.
pub fn case2_pair_terms(z: C64, dict: &Dictionary, terms: &[Case2Term]) -> Result<KernelPair> {
    let omegas: Vec<f64> = terms.iter().map(|t| t.omega).collect();
    validate_omegas(&omegas)?;
    for t in terms {
        log_of_positive(t.gamma)?;
        log_of_positive(t.gamma_tilde)?;
    }
    let mut k = vec![ZERO; dict.len()];
    let mut pseudo = vec![0.0; dict.len()];
    for t in terms {
        for (j, &d) in dict.points().iter().enumerate() {
            k[j].re += gaussian_real_of_complex(z, d, t.gamma);
            pseudo[j] += t.omega * gaussian_real_of_complex(z, d, t.gamma_tilde);
        }
    }
    let k_tilde = pseudo.into_iter().map(|p| I * (2.0 * p)).collect();
    Ok(KernelPair { k, k_tilde })
}

/// Kernel values between every input in `zs` and every dictionary point,
/// row-major `B × D`.
pub fn kernel_matrix(zs: &[C64], dict: &Dictionary, kernel: &ComplexKernel) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(zs.len() * dict.len());
    for &z in zs {
        for &d in dict.points() {
            out.push(kernel.eval(z, d)?);
        }
    }
    Ok(out)
}
