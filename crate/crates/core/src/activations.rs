//! Complex activation functions with forward and backward passes.
//!
//! Two evaluation routes exist for the kernel activations. The scalar
//! functions ([`kaf_forward`], [`wlkaf_forward`]) assemble the kernel vectors
//! through [`crate::kernels`] and apply the expansion literally. The layer
//! routines ([`layer_forward`], [`layer_backward`]) exploit the grid
//! dictionary: every Gaussian factorizes over the two axes, so one input
//! needs `2m` exponentials per bandwidth instead of `m²`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::cnum::{pull_back, C64, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::kernels::{
    axis_factors, case1_pair, case2_pair, standard_output, validate_omegas, widely_linear_output,
    BandwidthParams, ComplexKernel, Dictionary, COMPLEX_GAUSSIAN_EXPONENT_LIMIT,
};

/// Real nonlinearity used by the split activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitFn {
    Identity,
    Tanh,
}

impl SplitFn {
    pub fn eval(self, u: f64) -> f64 {
        match self {
            SplitFn::Identity => u,
            SplitFn::Tanh => u.tanh(),
        }
    }

    pub fn derivative(self, u: f64) -> f64 {
        match self {
            SplitFn::Identity => 1.0,
            SplitFn::Tanh => {
                let t = u.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Which scalar kernel a standard kernel activation expands over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    ComplexGaussian,
    Independent,
    RealGaussian,
}

impl KernelKind {
    pub fn with_gamma(self, gamma: f64) -> ComplexKernel {
        match self {
            KernelKind::ComplexGaussian => ComplexKernel::ComplexGaussian { gamma },
            KernelKind::Independent => ComplexKernel::Independent { gamma },
            KernelKind::RealGaussian => ComplexKernel::RealGaussian { gamma },
        }
    }
}

/// Activation variant of a hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub enum ActivationSpec {
    Split(SplitFn),
    PhaseAmplitude,
    Kaf(KernelKind),
    WlKafCase1,
    WlKafCase2 { omegas: Vec<f64> },
}

impl ActivationSpec {
    /// Widely linear Case 2 with a single term and `ω = 0.3`.
    pub fn case2_default() -> Self {
        ActivationSpec::WlKafCase2 { omegas: vec![0.3] }
    }

    pub fn has_kernel(&self) -> bool {
        matches!(
            self,
            ActivationSpec::Kaf(_) | ActivationSpec::WlKafCase1 | ActivationSpec::WlKafCase2 { .. }
        )
    }

    /// Trainable log-bandwidths per neuron.
    pub fn bandwidth_count(&self) -> usize {
        match self {
            ActivationSpec::Split(_) | ActivationSpec::PhaseAmplitude => 0,
            ActivationSpec::Kaf(_) => 1,
            ActivationSpec::WlKafCase1 => 2,
            ActivationSpec::WlKafCase2 { omegas } => 2 * omegas.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ActivationSpec::WlKafCase2 { omegas } = self {
            validate_omegas(omegas)?;
        }
        Ok(())
    }

    /// Bandwidth parameters with every bandwidth set to `gamma`.
    pub fn uniform_bandwidths(&self, gamma: f64) -> Result<Option<BandwidthParams>> {
        Ok(match self {
            ActivationSpec::Split(_) | ActivationSpec::PhaseAmplitude => None,
            ActivationSpec::Kaf(_) => Some(BandwidthParams::standard(gamma)?),
            ActivationSpec::WlKafCase1 => Some(BandwidthParams::case1(gamma, gamma)?),
            ActivationSpec::WlKafCase2 { omegas } => {
                let terms: Vec<_> = omegas
                    .iter()
                    .map(|&omega| crate::kernels::Case2Term { gamma, gamma_tilde: gamma, omega })
                    .collect();
                Some(BandwidthParams::case2(&terms)?)
            }
        })
    }

    /// Typed bandwidths from a per-neuron log-bandwidth slice.
    pub fn bandwidths_from_logs(&self, logs: &[f64]) -> Result<Option<BandwidthParams>> {
        if logs.len() != self.bandwidth_count() {
            return Err(Error::Dimension(format!(
                "{self} expects {} log-bandwidths, got {}",
                self.bandwidth_count(),
                logs.len()
            )));
        }
        Ok(match self {
            ActivationSpec::Split(_) | ActivationSpec::PhaseAmplitude => None,
            ActivationSpec::Kaf(_) => Some(BandwidthParams::Standard { log_gamma: logs[0] }),
            ActivationSpec::WlKafCase1 => Some(BandwidthParams::Case1 {
                log_gamma_rr: logs[0],
                log_gamma_ii: logs[1],
            }),
            ActivationSpec::WlKafCase2 { omegas } => Some(BandwidthParams::Case2 {
                log_gammas: logs.chunks_exact(2).map(|p| (p[0], p[1])).collect(),
                omegas: omegas.clone(),
            }),
        })
    }
}

impl fmt::Display for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationSpec::Split(SplitFn::Identity) => write!(f, "split-identity"),
            ActivationSpec::Split(SplitFn::Tanh) => write!(f, "split-tanh"),
            ActivationSpec::PhaseAmplitude => write!(f, "phase-amplitude"),
            ActivationSpec::Kaf(KernelKind::ComplexGaussian) => write!(f, "kaf-complex-gaussian"),
            ActivationSpec::Kaf(KernelKind::Independent) => write!(f, "kaf-independent"),
            ActivationSpec::Kaf(KernelKind::RealGaussian) => write!(f, "kaf-real-gaussian"),
            ActivationSpec::WlKafCase1 => write!(f, "wlkaf-case1"),
            ActivationSpec::WlKafCase2 { omegas } => {
                write!(f, "wlkaf-case2")?;
                for w in omegas {
                    write!(f, ":{w}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ActivationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = match s {
            "split-identity" => ActivationSpec::Split(SplitFn::Identity),
            "split-tanh" | "split" => ActivationSpec::Split(SplitFn::Tanh),
            "phase-amplitude" => ActivationSpec::PhaseAmplitude,
            "kaf-complex-gaussian" => ActivationSpec::Kaf(KernelKind::ComplexGaussian),
            "kaf-independent" | "kaf" => ActivationSpec::Kaf(KernelKind::Independent),
            "kaf-real-gaussian" => ActivationSpec::Kaf(KernelKind::RealGaussian),
            "wlkaf-case1" => ActivationSpec::WlKafCase1,
            "wlkaf-case2" => ActivationSpec::case2_default(),
            other => {
                let Some(rest) = other.strip_prefix("wlkaf-case2:") else {
                    return Err(Error::Parameter(format!("unknown activation '{other}'")));
                };
                let omegas = rest
                    .split(':')
                    .map(|w| w.parse::<f64>().map_err(|e| Error::Parameter(format!("bad omega '{w}': {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                ActivationSpec::WlKafCase2 { omegas }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Kernel-activation parameters of a single neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct KafParams {
    pub dictionary: Arc<Dictionary>,
    pub alpha: Vec<C64>,
    pub bandwidths: BandwidthParams,
}

impl KafParams {
    pub fn new(dictionary: Arc<Dictionary>, alpha: Vec<C64>, bandwidths: BandwidthParams) -> Result<Self> {
        if alpha.len() != dictionary.len() {
            return Err(Error::Dimension(format!(
                "alpha has {} coefficients, dictionary has {} points",
                alpha.len(),
                dictionary.len()
            )));
        }
        Ok(Self { dictionary, alpha, bandwidths })
    }
}

/// Split activation `g_R(Re z) + i·g_R(Im z)`.
pub fn split_activation(z: C64, g: impl Fn(f64) -> f64) -> C64 {
    C64::new(g(z.re), g(z.im))
}

/// Phase-amplitude activation `tanh(|z|)·exp{iφ(z)}`; zero at the origin.
pub fn phase_amplitude(z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        ZERO
    } else {
        z * (r.tanh() / r)
    }
}

/// Standard kernel activation `kᵀα` for the given kernel.
pub fn kaf_forward(z: C64, params: &KafParams, kind: KernelKind) -> Result<C64> {
    let BandwidthParams::Standard { log_gamma } = params.bandwidths else {
        return Err(Error::Parameter("kaf_forward needs a single standard bandwidth".into()));
    };
    let k = kind.with_gamma(log_gamma.exp()).vector(z, &params.dictionary)?;
    standard_output(&k, &params.alpha)
}

/// Widely linear kernel activation `kᵀα + k̃ᵀα*`, Case 1 or Case 2 depending on the bandwidths.
pub fn wlkaf_forward(z: C64, params: &KafParams) -> Result<C64> {
    let pair = match &params.bandwidths {
        BandwidthParams::Case1 { log_gamma_rr, log_gamma_ii } => {
            case1_pair(z, &params.dictionary, log_gamma_rr.exp(), log_gamma_ii.exp())?
        }
        p @ BandwidthParams::Case2 { .. } => case2_pair(z, &params.dictionary, p)?,
        BandwidthParams::Standard { .. } => {
            return Err(Error::Parameter("wlkaf_forward needs Case 1 or Case 2 bandwidths".into()))
        }
    };
    widely_linear_output(&pair, &params.alpha)
}

/// Rule-of-thumb initial bandwidth `1/(2Δ²)` for a grid with spacing `Δ`.
pub fn gamma_rule_of_thumb(dict: &Dictionary) -> f64 {
    let d = dict.spacing();
    1.0 / (2.0 * d * d)
}

/// Cogradients returned by [`activation_backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationCograds {
    pub z: C64,
    pub alpha: Vec<C64>,
    pub log_bandwidths: Vec<f64>,
}

/// Evaluate a single activation.
pub fn activation_forward(spec: &ActivationSpec, params: Option<&KafParams>, z: C64) -> Result<C64> {
    let (alpha, logs, dict) = unpack(spec, params)?;
    NeuronEval { spec, dict, alpha, log_bw: &logs }.forward(z)
}

/// Backward pass of a single activation. `z` is the cached pre-activation.
/// Parameter-free variants return empty parameter cogradients.
pub fn activation_backward(
    spec: &ActivationSpec,
    params: Option<&KafParams>,
    z: C64,
    cograd_out: C64,
) -> Result<ActivationCograds> {
    let (alpha, logs, dict) = unpack(spec, params)?;
    let mut g_alpha = vec![ZERO; alpha.len()];
    let mut g_log = vec![0.0; logs.len()];
    let gz = NeuronEval { spec, dict, alpha, log_bw: &logs }.backward(z, cograd_out, &mut g_alpha, &mut g_log)?;
    Ok(ActivationCograds { z: gz, alpha: g_alpha, log_bandwidths: g_log })
}

fn unpack<'a>(
    spec: &ActivationSpec,
    params: Option<&'a KafParams>,
) -> Result<(&'a [C64], Vec<f64>, Option<&'a Dictionary>)> {
    spec.validate()?;
    match (spec.has_kernel(), params) {
        (false, _) => Ok((&[], Vec::new(), None)),
        (true, None) => Err(Error::Parameter(format!("{spec} needs kernel parameters"))),
        (true, Some(p)) => {
            let logs = p.bandwidths.log_values();
            if logs.len() != spec.bandwidth_count() {
                return Err(Error::Parameter(format!("bandwidths do not match {spec}")));
            }
            Ok((&p.alpha, logs, Some(&p.dictionary)))
        }
    }
}

/// How a Gaussian term mixes the coefficient `α` into the output.
#[derive(Debug, Clone, Copy)]
enum Mix {
    /// `α`
    Plain,
    /// `Re α`
    Real,
    /// `i·Im α`
    Imag,
    /// `s·α*`
    Conj(C64),
}

impl Mix {
    #[inline]
    fn apply(self, a: C64) -> C64 {
        match self {
            Mix::Plain => a,
            Mix::Real => C64::new(a.re, 0.0),
            Mix::Imag => C64::new(0.0, a.im),
            Mix::Conj(s) => s * a.conj(),
        }
    }

    /// Cogradient w.r.t. `α` of `Re(conj(G)·κ·apply(α))` for real `κ`.
    #[inline]
    fn cograd(self, g: C64, kappa: f64) -> C64 {
        match self {
            Mix::Plain => g * kappa,
            Mix::Real => C64::new(g.re * kappa, 0.0),
            Mix::Imag => C64::new(0.0, g.im * kappa),
            Mix::Conj(s) => g.conj() * s * kappa,
        }
    }
}

/// Evaluation of one neuron's activation. Kernel variants require `dict`.
struct NeuronEval<'a> {
    spec: &'a ActivationSpec,
    dict: Option<&'a Dictionary>,
    alpha: &'a [C64],
    log_bw: &'a [f64],
}

const MAX_GAUSSIAN_TERMS: usize = 8;

impl NeuronEval<'_> {
    fn dict(&self) -> &Dictionary {
        self.dict.expect("kernel activation without dictionary")
    }

    fn gaussian_terms(&self, out: &mut [(f64, Mix)]) -> usize {
        let lb = self.log_bw;
        match self.spec {
            ActivationSpec::Kaf(KernelKind::RealGaussian) => {
                out[0] = (lb[0].exp(), Mix::Plain);
                1
            }
            ActivationSpec::WlKafCase1 => {
                out[0] = (lb[0].exp(), Mix::Real);
                out[1] = (lb[1].exp(), Mix::Imag);
                2
            }
            ActivationSpec::WlKafCase2 { omegas } => {
                for (q, &w) in omegas.iter().enumerate() {
                    out[2 * q] = (lb[2 * q].exp(), Mix::Plain);
                    out[2 * q + 1] = (lb[2 * q + 1].exp(), Mix::Conj(I * (2.0 * w)));
                }
                2 * omegas.len()
            }
            _ => 0,
        }
    }

    fn forward(&self, z: C64) -> Result<C64> {
        let out = match self.spec {
            ActivationSpec::Split(f) => split_activation(z, |u| f.eval(u)),
            ActivationSpec::PhaseAmplitude => phase_amplitude(z),
            ActivationSpec::Kaf(KernelKind::ComplexGaussian) => self.complex_gaussian(z, None)?,
            ActivationSpec::Kaf(KernelKind::Independent) => self.independent(z, None),
            _ => self.gaussian_sum(z, None),
        };
        Ok(out)
    }

    /// Accumulates parameter cogradients and returns the input cogradient.
    fn backward(&self, z: C64, g: C64, g_alpha: &mut [C64], g_log: &mut [f64]) -> Result<C64> {
        if g == ZERO {
            return Ok(ZERO);
        }
        let gz = match self.spec {
            ActivationSpec::Split(f) => {
                pull_back(g, C64::new(f.derivative(z.re), 0.0), C64::new(0.0, f.derivative(z.im)))
            }
            ActivationSpec::PhaseAmplitude => {
                let (fx, fy) = phase_amplitude_partials(z);
                pull_back(g, fx, fy)
            }
            ActivationSpec::Kaf(KernelKind::ComplexGaussian) => {
                let mut gz = ZERO;
                self.complex_gaussian(z, Some((g, g_alpha, g_log, &mut gz)))?;
                gz
            }
            ActivationSpec::Kaf(KernelKind::Independent) => {
                let mut gz = ZERO;
                self.independent(z, Some((g, g_alpha, g_log, &mut gz)));
                gz
            }
            _ => {
                let mut gz = ZERO;
                self.gaussian_sum(z, Some((g, g_alpha, g_log, &mut gz)));
                gz
            }
        };
        Ok(gz)
    }

    fn complex_gaussian(&self, z: C64, grad: Option<Grad<'_>>) -> Result<C64> {
        let dict = self.dict();
        let gamma = self.log_bw[0].exp();
        let (mut out, mut deriv, mut dlog) = (ZERO, ZERO, ZERO);
        let want_grad = grad.is_some();
        let mut kvals = Vec::new();
        for (&d, &a) in dict.points().iter().zip(self.alpha) {
            let u = z - d.conj();
            let arg = -(u * u) * gamma;
            if arg.re.abs() > COMPLEX_GAUSSIAN_EXPONENT_LIMIT || !arg.re.is_finite() || !arg.im.is_finite() {
                return Err(Error::Numeric(format!(
                    "complex Gaussian exponent {arg} out of range at z = {z}, d = {d}"
                )));
            }
            let k = arg.exp();
            out += a * k;
            if want_grad {
                deriv += a * k * u * (-2.0 * gamma);
                dlog += a * k * arg;
                kvals.push(k);
            }
        }
        if let Some((g, g_alpha, g_log, gz)) = grad {
            for (ga, k) in g_alpha.iter_mut().zip(&kvals) {
                *ga += g * k.conj();
            }
            g_log[0] += (g.conj() * dlog).re;
            *gz = pull_back(g, deriv, I * deriv);
        }
        Ok(out)
    }

    fn independent(&self, z: C64, grad: Option<Grad<'_>>) -> C64 {
        let dict = self.dict();
        let m = dict.points_per_axis();
        let axis = dict.axis();
        let gamma = self.log_bw[0].exp();
        let mut ex = [0.0; MAX_AXIS];
        let mut ey = [0.0; MAX_AXIS];
        let mut dx = [0.0; MAX_AXIS];
        let mut dy = [0.0; MAX_AXIS];
        axis_factors(z.re, axis, dict.spacing(), gamma, &mut ex);
        axis_factors(z.im, axis, dict.spacing(), gamma, &mut ey);
        for k in 0..m {
            dx[k] = z.re - axis[k];
            dy[k] = z.im - axis[k];
        }
        let mut out = ZERO;
        match grad {
            None => {
                for r in 0..m {
                    for c in 0..m {
                        let kappa = C64::new(ex[c] + ey[r], ex[r] - ey[c]);
                        out += self.alpha[r * m + c] * kappa;
                    }
                }
            }
            Some((g, g_alpha, g_log, gz)) => {
                // per-axis derivatives of the real factors
                let mut dex = [0.0; MAX_AXIS];
                let mut dey = [0.0; MAX_AXIS];
                let mut lx = [0.0; MAX_AXIS];
                let mut ly = [0.0; MAX_AXIS];
                for k in 0..m {
                    dex[k] = -2.0 * gamma * dx[k] * ex[k];
                    dey[k] = -2.0 * gamma * dy[k] * ey[k];
                    lx[k] = -gamma * dx[k] * dx[k] * ex[k];
                    ly[k] = -gamma * dy[k] * dy[k] * ey[k];
                }
                let (mut fx, mut fy, mut fl) = (ZERO, ZERO, ZERO);
                for r in 0..m {
                    for c in 0..m {
                        let j = r * m + c;
                        let a = self.alpha[j];
                        let kappa = C64::new(ex[c] + ey[r], ex[r] - ey[c]);
                        out += a * kappa;
                        fx += a * C64::new(dex[c], dex[r]);
                        fy += a * C64::new(dey[r], -dey[c]);
                        fl += a * C64::new(lx[c] + ly[r], lx[r] - ly[c]);
                        g_alpha[j] += g * kappa.conj();
                    }
                }
                g_log[0] += (g.conj() * fl).re;
                *gz = pull_back(g, fx, fy);
            }
        }
        out
    }

    fn gaussian_sum(&self, z: C64, grad: Option<Grad<'_>>) -> C64 {
        let dict = self.dict();
        let m = dict.points_per_axis();
        let axis = dict.axis();
        let mut terms = [(0.0, Mix::Plain); MAX_GAUSSIAN_TERMS];
        let nterms = self.gaussian_terms(&mut terms);
        let mut dx = [0.0; MAX_AXIS];
        let mut dy = [0.0; MAX_AXIS];
        for k in 0..m {
            dx[k] = z.re - axis[k];
            dy[k] = z.im - axis[k];
        }
        // Every mix is real-linear and the kernel is real, so sums are taken
        // over the raw coefficients and mixed once per term.
        let mut out = ZERO;
        let mut ex = [0.0; MAX_AXIS];
        let mut ey = [0.0; MAX_AXIS];
        match grad {
            None => {
                for &(gamma, mix) in &terms[..nterms] {
                    axis_factors(z.re, axis, dict.spacing(), gamma, &mut ex);
                    axis_factors(z.im, axis, dict.spacing(), gamma, &mut ey);
                    let mut s = ZERO;
                    for (row, &ey_r) in self.alpha.chunks_exact(m).zip(&ey[..m]) {
                        let mut r0 = ZERO;
                        for (&a, &e) in row.iter().zip(&ex[..m]) {
                            r0 += a * e;
                        }
                        s += r0 * ey_r;
                    }
                    out += mix.apply(s);
                }
            }
            Some((g, g_alpha, g_log, gz)) => {
                let (mut fx, mut fy) = (ZERO, ZERO);
                let mut exd = [0.0; MAX_AXIS];
                let mut exd2 = [0.0; MAX_AXIS];
                for (t, &(gamma, mix)) in terms[..nterms].iter().enumerate() {
                    axis_factors(z.re, axis, dict.spacing(), gamma, &mut ex);
                    axis_factors(z.im, axis, dict.spacing(), gamma, &mut ey);
                    for k in 0..m {
                        exd[k] = ex[k] * dx[k];
                        exd2[k] = exd[k] * dx[k];
                    }
                    // cograd of α_j is mix.cograd(g, κ_j) = g_mix·κ_j
                    let g_mix = mix.cograd(g, 1.0);
                    let (mut s0, mut sx, mut sy, mut sd) = (ZERO, ZERO, ZERO, ZERO);
                    for r in 0..m {
                        let (mut r0, mut rx, mut rxx) = (ZERO, ZERO, ZERO);
                        let row = &self.alpha[r * m..(r + 1) * m];
                        let g_row = &mut g_alpha[r * m..(r + 1) * m];
                        let gr = g_mix * ey[r];
                        for c in 0..m {
                            let a = row[c];
                            r0 += a * ex[c];
                            rx += a * exd[c];
                            rxx += a * exd2[c];
                            g_row[c] += gr * ex[c];
                        }
                        s0 += r0 * ey[r];
                        sx += rx * ey[r];
                        sy += r0 * (dy[r] * ey[r]);
                        sd += (rxx + r0 * (dy[r] * dy[r])) * ey[r];
                    }
                    out += mix.apply(s0);
                    fx += mix.apply(sx) * (-2.0 * gamma);
                    fy += mix.apply(sy) * (-2.0 * gamma);
                    g_log[t] += (g.conj() * mix.apply(sd) * (-gamma)).re;
                }
                *gz = pull_back(g, fx, fy);
            }
        }
        out
    }
}

/// Largest supported number of points per dictionary axis.
pub const MAX_AXIS: usize = 32;

type Grad<'a> = (C64, &'a mut [C64], &'a mut [f64], &'a mut C64);

/// Real partials of `tanh(|z|)·z/|z|`.
fn phase_amplitude_partials(z: C64) -> (C64, C64) {
    let r = z.norm();
    if r < 1e-8 {
        // t(r) = tanh(r)/r ≈ 1 − r²/3
        return (ONE, I);
    }
    let t = r.tanh() / r;
    let sech2 = 1.0 - r.tanh().powi(2);
    let dt = (sech2 * r - r.tanh()) / (r * r);
    let fx = z * (dt * z.re / r) + t;
    let fy = z * (dt * z.im / r) + I * t;
    (fx, fy)
}

/// Per-layer kernel-activation parameters, stored as contiguous
/// `neurons × D` coefficients and `neurons × bandwidth_count` log-bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub struct KafLayerParams {
    pub dictionary: Arc<Dictionary>,
    pub alpha: Vec<C64>,
    pub log_bandwidths: Vec<f64>,
}

impl KafLayerParams {
    pub fn neuron(&self, spec: &ActivationSpec, i: usize) -> Result<KafParams> {
        let d = self.dictionary.len();
        let nb = spec.bandwidth_count();
        let bandwidths = spec
            .bandwidths_from_logs(&self.log_bandwidths[i * nb..(i + 1) * nb])?
            .ok_or_else(|| Error::Parameter(format!("{spec} has no kernel parameters")))?;
        KafParams::new(self.dictionary.clone(), self.alpha[i * d..(i + 1) * d].to_vec(), bandwidths)
    }

    /// Initialize every neuron with the same coefficients and bandwidths.
    pub fn replicated(
        spec: &ActivationSpec,
        dictionary: Arc<Dictionary>,
        neurons: usize,
        alpha: &[C64],
        bandwidths: &BandwidthParams,
    ) -> Result<Self> {
        if alpha.len() != dictionary.len() {
            return Err(Error::Dimension("alpha does not match dictionary".into()));
        }
        let logs = bandwidths.log_values();
        if logs.len() != spec.bandwidth_count() {
            return Err(Error::Parameter(format!("bandwidths do not match {spec}")));
        }
        Ok(Self {
            dictionary,
            alpha: alpha.iter().copied().cycle().take(alpha.len() * neurons).collect(),
            log_bandwidths: logs.iter().copied().cycle().take(logs.len() * neurons).collect(),
        })
    }
}

fn check_layer(spec: &ActivationSpec, params: Option<&KafLayerParams>, neurons: usize) -> Result<()> {
    if spec.has_kernel() {
        let p = params.ok_or_else(|| Error::Parameter(format!("{spec} layer needs kernel parameters")))?;
        if p.dictionary.points_per_axis() > MAX_AXIS {
            return Err(Error::Parameter(format!("at most {MAX_AXIS} dictionary points per axis supported")));
        }
        if p.alpha.len() != neurons * p.dictionary.len()
            || p.log_bandwidths.len() != neurons * spec.bandwidth_count()
        {
            return Err(Error::Dimension(format!("kernel parameters do not match {neurons} neurons")));
        }
    }
    Ok(())
}

fn neuron_eval<'a>(
    spec: &'a ActivationSpec,
    params: Option<&'a KafLayerParams>,
    i: usize,
) -> NeuronEval<'a> {
    match params.filter(|_| spec.has_kernel()) {
        None => NeuronEval { spec, dict: None, alpha: &[], log_bw: &[] },
        Some(p) => {
            let d = p.dictionary.len();
            let nb = spec.bandwidth_count();
            NeuronEval {
                spec,
                dict: Some(&p.dictionary),
                alpha: &p.alpha[i * d..(i + 1) * d],
                log_bw: &p.log_bandwidths[i * nb..(i + 1) * nb],
            }
        }
    }
}

/// Apply the activation elementwise to a `batch × neurons` pre-activation buffer.
pub fn layer_forward(
    spec: &ActivationSpec,
    params: Option<&KafLayerParams>,
    z: &[C64],
    neurons: usize,
) -> Result<Vec<C64>> {
    check_layer(spec, params, neurons)?;
    let evals: Vec<NeuronEval<'_>> = (0..neurons).map(|i| neuron_eval(spec, params, i)).collect();
    let mut out = Vec::with_capacity(z.len());
    for row in z.chunks_exact(neurons) {
        for (zi, ev) in row.iter().zip(&evals) {
            out.push(ev.forward(*zi)?);
        }
    }
    Ok(out)
}

/// Backward pass over a `batch × neurons` buffer. Parameter cogradients are
/// accumulated into `g_alpha` / `g_log`; returns the pre-activation cogradient.
pub fn layer_backward(
    spec: &ActivationSpec,
    params: Option<&KafLayerParams>,
    z: &[C64],
    g_out: &[C64],
    neurons: usize,
    g_alpha: &mut [C64],
    g_log: &mut [f64],
) -> Result<Vec<C64>> {
    check_layer(spec, params, neurons)?;
    let (d, nb) = match params.filter(|_| spec.has_kernel()) {
        Some(p) => (p.dictionary.len(), spec.bandwidth_count()),
        None => (0, 0),
    };
    let evals: Vec<NeuronEval<'_>> = (0..neurons).map(|i| neuron_eval(spec, params, i)).collect();
    let mut gz = vec![ZERO; z.len()];
    for ((zrow, grow), gzrow) in z
        .chunks_exact(neurons)
        .zip(g_out.chunks_exact(neurons))
        .zip(gz.chunks_exact_mut(neurons))
    {
        for (i, ev) in evals.iter().enumerate() {
            gzrow[i] = ev.backward(
                zrow[i],
                grow[i],
                &mut g_alpha[i * d..(i + 1) * d],
                &mut g_log[i * nb..(i + 1) * nb],
            )?;
        }
    }
    Ok(gz)
}

/// Fit the coefficients so the activation reproduces `target` on the
/// dictionary points, by ridge-regularized least squares.
///
/// The activation is real-linear in `(Re α, Im α)`, so the fit is a real
/// `2D × 2D` system. With `ridge = 0` the square system is solved directly.
pub fn init_alpha(
    dict: &Dictionary,
    spec: &ActivationSpec,
    bandwidths: &BandwidthParams,
    target: impl Fn(C64) -> C64,
    ridge: f64,
) -> Result<Vec<C64>> {
    if !(ridge >= 0.0) {
        return Err(Error::Parameter(format!("ridge must be ≥ 0, got {ridge}")));
    }
    if !spec.has_kernel() {
        return Err(Error::Parameter(format!("{spec} has no kernel coefficients")));
    }
    let logs = bandwidths.log_values();
    if logs.len() != spec.bandwidth_count() {
        return Err(Error::Parameter(format!("bandwidths do not match {spec}")));
    }
    let d = dict.len();
    let mut a = DMatrix::<f64>::zeros(2 * d, 2 * d);
    let mut basis = vec![ZERO; d];
    for col in 0..2 * d {
        basis.fill(ZERO);
        basis[col % d] = if col < d { ONE } else { I };
        let ev = NeuronEval { spec, dict: Some(dict), alpha: &basis, log_bw: &logs };
        for (n, &p) in dict.points().iter().enumerate() {
            let v = ev.forward(p)?;
            a[(n, col)] = v.re;
            a[(d + n, col)] = v.im;
        }
    }
    let mut y = DVector::<f64>::zeros(2 * d);
    for (n, &p) in dict.points().iter().enumerate() {
        let t = target(p);
        y[n] = t.re;
        y[d + n] = t.im;
    }
    let theta = if ridge == 0.0 {
        let sv = a.clone().svd(false, false).singular_values;
        let (lo, hi) = (sv.min(), sv.max());
        if !(lo > SINGULAR_RATIO * hi) {
            return Err(Error::Numeric(format!(
                "singular kernel system with zero ridge (singular values {lo:e} .. {hi:e})"
            )));
        }
        a.lu()
            .solve(&y)
            .ok_or_else(|| Error::Numeric("singular kernel system with zero ridge".into()))?
    } else {
        // θ = V·diag(s/(s² + ridge))·Uᵀy, stable where AᵀA would lose the ridge
        let svd = a.svd(true, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => return Err(Error::Numeric("SVD of the kernel system failed".into())),
        };
        let mut uty = u.transpose() * &y;
        for (c, s) in uty.iter_mut().zip(svd.singular_values.iter()) {
            *c *= s / (s * s + ridge);
        }
        v_t.transpose() * uty
    };
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite coefficients from the kernel fit".into()));
    }
    Ok((0..d).map(|j| C64::new(theta[j], theta[d + j])).collect())
}

/// Relative singular-value floor below which an unregularized fit is rejected.
const SINGULAR_RATIO: f64 = 1e-12;

/// Near-linear function the coefficients are fitted to at initialization.
///
/// The independent kernel only spans outputs of the form
/// `Re g = p(x) + q(y)`, `Im g = q(x) − p(y)`, which excludes the identity but
/// contains the conjugate; every other kernel variant starts at the identity.
pub fn default_init_target(spec: &ActivationSpec) -> fn(C64) -> C64 {
    match spec {
        ActivationSpec::Kaf(KernelKind::Independent) => |z: C64| z.conj(),
        _ => |z: C64| z,
    }
}

/// Seeded random coefficients, complex normal with the given per-component std.
pub fn random_alpha(rng: &mut impl Rng, d: usize, std: f64) -> Vec<C64> {
    let normal = Normal::new(0.0, std).expect("valid std");
    (0..d).map(|_| C64::new(normal.sample(rng), normal.sample(rng))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnum::{finite_diff_cogradient, ComplexTensor, derivative_agreement};
    use crate::kernels::{build_dictionary, gaussian_real_of_complex};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rand_c(rng: &mut impl Rng, r: f64) -> C64 {
        c(rng.gen_range(-r..r), rng.gen_range(-r..r))
    }

    fn dict4() -> Arc<Dictionary> {
        Arc::new(build_dictionary(4, -2.0, 2.0).unwrap())
    }

    fn all_kernel_specs() -> Vec<ActivationSpec> {
        vec![
            ActivationSpec::Kaf(KernelKind::ComplexGaussian),
            ActivationSpec::Kaf(KernelKind::Independent),
            ActivationSpec::Kaf(KernelKind::RealGaussian),
            ActivationSpec::WlKafCase1,
            ActivationSpec::case2_default(),
            ActivationSpec::WlKafCase2 { omegas: vec![0.2, 0.7] },
        ]
    }

    fn random_params(spec: &ActivationSpec, dict: Arc<Dictionary>, rng: &mut ChaCha8Rng) -> KafParams {
        let base = if matches!(spec, ActivationSpec::Kaf(KernelKind::ComplexGaussian)) { 0.2 } else { 0.8 };
        let logs: Vec<f64> = (0..spec.bandwidth_count())
            .map(|_| (base * rng.gen_range(0.6..1.6f64)).ln())
            .collect();
        let bw = spec.bandwidths_from_logs(&logs).unwrap().unwrap();
        let alpha = random_alpha(rng, dict.len(), 0.5);
        KafParams::new(dict, alpha, bw).unwrap()
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_activation(ZERO, f64::tanh), ZERO);
        let v = split_activation(c(10.0, 10.0), f64::tanh);
        assert!((v - c(1.0, 1.0)).norm() < 1e-8);
        let z = c(-0.3, 4.0);
        assert_eq!(split_activation(z, |u| u), z);
    }

    #[test]
    fn phase_amplitude_examples() {
        assert_eq!(phase_amplitude(ZERO), ZERO);
        let v = phase_amplitude(c(1.5, 0.0));
        assert_eq!(v, c(1.5f64.tanh(), 0.0));
        let v = phase_amplitude(c(0.0, 2.0));
        assert!((v - c(0.0, 2f64.tanh())).norm() < 1e-15);
        assert!((v.im - 0.964).abs() < 1e-3);
    }

    #[test]
    fn kaf_forward_examples() {
        let dict = dict4();
        let bw = BandwidthParams::standard(0.7).unwrap();
        let z = c(0.4, -0.9);
        let zero = KafParams::new(dict.clone(), vec![ZERO; 16], bw.clone()).unwrap();
        for kind in [KernelKind::Independent, KernelKind::RealGaussian, KernelKind::ComplexGaussian] {
            assert_eq!(kaf_forward(z, &zero, kind).unwrap(), ZERO);
            let mut alpha = vec![ZERO; 16];
            alpha[6] = ONE;
            let p = KafParams::new(dict.clone(), alpha, bw.clone()).unwrap();
            let expect = kind.with_gamma(0.7).eval(z, dict.points()[6]).unwrap();
            assert!((kaf_forward(z, &p, kind).unwrap() - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn scalar_and_layer_routes_agree() {
        let dict = dict4();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for spec in all_kernel_specs() {
            for _ in 0..20 {
                let p = random_params(&spec, dict.clone(), &mut rng);
                let z = rand_c(&mut rng, 2.5);
                let literal = match &spec {
                    ActivationSpec::Kaf(kind) => kaf_forward(z, &p, *kind).unwrap(),
                    _ => wlkaf_forward(z, &p).unwrap(),
                };
                let fast = activation_forward(&spec, Some(&p), z).unwrap();
                assert!((literal - fast).norm() < 1e-12, "{spec}: {literal} vs {fast}");
            }
        }
    }

    #[test]
    fn case1_equal_bandwidths_is_standard_kaf() {
        let dict = dict4();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let alpha = random_alpha(&mut rng, 16, 0.7);
            let g = rng.gen_range(0.2..2.0);
            let z = rand_c(&mut rng, 3.0);
            let wl = KafParams::new(dict.clone(), alpha.clone(), BandwidthParams::case1(g, g).unwrap()).unwrap();
            let st = KafParams::new(dict.clone(), alpha, BandwidthParams::standard(g).unwrap()).unwrap();
            let a = wlkaf_forward(z, &wl).unwrap();
            let b = kaf_forward(z, &st, KernelKind::RealGaussian).unwrap();
            assert!((a - b).norm() <= 1e-14);
        }
    }

    #[test]
    fn case1_real_alpha_gives_real_output() {
        let dict = dict4();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let alpha: Vec<C64> = (0..16).map(|_| c(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let p = KafParams::new(dict, alpha, BandwidthParams::case1(0.5, 1.5).unwrap()).unwrap();
        let v = wlkaf_forward(c(0.3, 0.8), &p).unwrap();
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn case2_matches_vector_model() {
        use crate::kernels::{vector_model_output, KernelBlockSet};
        let dict = dict4();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let p = random_params(&ActivationSpec::case2_default(), dict.clone(), &mut rng);
            let z = rand_c(&mut rng, 2.0);
            let t = p.bandwidths.case2_terms().unwrap()[0];
            // independent matrix-valued oracle: k_rr = k_ii = κ, k_ir = 2ωκ̃, k_ri = 2ωκ̃
            let kap: Vec<f64> = dict.points().iter().map(|&d| gaussian_real_of_complex(z, d, t.gamma)).collect();
            let kt: Vec<f64> = dict
                .points()
                .iter()
                .map(|&d| 2.0 * t.omega * gaussian_real_of_complex(z, d, t.gamma_tilde))
                .collect();
            let blocks = KernelBlockSet::new(kap.clone(), kt.clone(), kt, kap).unwrap();
            let oracle = vector_model_output(&blocks, &p.alpha).unwrap();
            assert!((wlkaf_forward(z, &p).unwrap() - oracle).norm() < 1e-12);
        }
    }

    #[test]
    fn backward_zero_cotangent() {
        let dict = dict4();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for spec in all_kernel_specs() {
            let p = random_params(&spec, dict.clone(), &mut rng);
            let g = activation_backward(&spec, Some(&p), c(0.2, 0.1), ZERO).unwrap();
            assert_eq!(g.z, ZERO);
            assert!(g.alpha.iter().all(|v| *v == ZERO) && g.log_bandwidths.iter().all(|v| *v == 0.0));
        }
        let g = activation_backward(&ActivationSpec::PhaseAmplitude, None, c(0.2, 0.1), ONE).unwrap();
        assert!(g.alpha.is_empty() && g.log_bandwidths.is_empty());
    }

    /// J = Re(conj(t)·g(z)) + |g(z)|², a generic real objective on the output.
    fn objective(out: C64, t: C64) -> (f64, C64) {
        ((t.conj() * out).re + out.norm_sqr(), t + out * 2.0)
    }

    fn check(a: f64, n: f64, what: &str) {
        let (rel, ok) = derivative_agreement(a, n, 1e-5, 1e-8);
        assert!(ok, "{what}: analytic {a} vs numeric {n} (rel {rel})");
    }

    #[test]
    fn backward_matches_finite_differences() {
        let dict = dict4();
        let mut specs = all_kernel_specs();
        specs.extend([ActivationSpec::Split(SplitFn::Tanh), ActivationSpec::PhaseAmplitude]);
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            for spec in &specs {
                let p = spec.has_kernel().then(|| random_params(spec, dict.clone(), &mut rng));
                let z = rand_c(&mut rng, 2.0);
                let t = rand_c(&mut rng, 1.0);
                let out = activation_forward(spec, p.as_ref(), z).unwrap();
                let (_, g) = objective(out, t);
                let an = activation_backward(spec, p.as_ref(), z, g).unwrap();

                let zt = ComplexTensor::vector(&[z]).unwrap();
                let fd = finite_diff_cogradient(
                    |zp| objective(activation_forward(spec, p.as_ref(), zp.data()[0]).unwrap(), t).0,
                    &zt,
                    1e-6,
                )
                .unwrap();
                check(an.z.re, fd.data()[0].re, &format!("{spec} dz re"));
                check(an.z.im, fd.data()[0].im, &format!("{spec} dz im"));

                let Some(p) = p else { continue };
                let at = ComplexTensor::vector(&p.alpha).unwrap();
                let fd = finite_diff_cogradient(
                    |ap| {
                        let q = KafParams { alpha: ap.data().to_vec(), ..p.clone() };
                        objective(activation_forward(spec, Some(&q), z).unwrap(), t).0
                    },
                    &at,
                    1e-6,
                )
                .unwrap();
                for (a, n) in an.alpha.iter().zip(fd.data()) {
                    check(a.re, n.re, &format!("{spec} dalpha re"));
                    check(a.im, n.im, &format!("{spec} dalpha im"));
                }
                let logs = p.bandwidths.log_values();
                for (k, &ga) in an.log_bandwidths.iter().enumerate() {
                    let eval = |h: f64| {
                        let mut l = logs.clone();
                        l[k] += h;
                        let q = KafParams { bandwidths: spec.bandwidths_from_logs(&l).unwrap().unwrap(), ..p.clone() };
                        objective(activation_forward(spec, Some(&q), z).unwrap(), t).0
                    };
                    let n = (eval(1e-6) - eval(-1e-6)) / 2e-6;
                    check(ga, n, &format!("{spec} dlog[{k}]"));
                }
            }
        }
    }

    #[test]
    fn phase_amplitude_gradient_near_origin() {
        let g = activation_backward(&ActivationSpec::PhaseAmplitude, None, ZERO, c(0.5, -1.0)).unwrap();
        assert_eq!(g.z, c(0.5, -1.0));
    }

    #[test]
    fn layer_routes_match_scalar_routes() {
        let dict = dict4();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let spec = ActivationSpec::WlKafCase1;
        let neurons = 3;
        let params: Vec<KafParams> = (0..neurons).map(|_| random_params(&spec, dict.clone(), &mut rng)).collect();
        let layer = KafLayerParams {
            dictionary: dict.clone(),
            alpha: params.iter().flat_map(|p| p.alpha.clone()).collect(),
            log_bandwidths: params.iter().flat_map(|p| p.bandwidths.log_values()).collect(),
        };
        let z: Vec<C64> = (0..2 * neurons).map(|_| rand_c(&mut rng, 2.0)).collect();
        let g: Vec<C64> = (0..2 * neurons).map(|_| rand_c(&mut rng, 1.0)).collect();
        let out = layer_forward(&spec, Some(&layer), &z, neurons).unwrap();
        let mut ga = vec![ZERO; layer.alpha.len()];
        let mut gl = vec![0.0; layer.log_bandwidths.len()];
        let gz = layer_backward(&spec, Some(&layer), &z, &g, neurons, &mut ga, &mut gl).unwrap();
        let mut ga_ref = vec![ZERO; layer.alpha.len()];
        for b in 0..2 {
            for i in 0..neurons {
                let idx = b * neurons + i;
                assert_eq!(out[idx], activation_forward(&spec, Some(&params[i]), z[idx]).unwrap());
                let s = activation_backward(&spec, Some(&params[i]), z[idx], g[idx]).unwrap();
                assert_eq!(gz[idx], s.z);
                for (j, v) in s.alpha.iter().enumerate() {
                    ga_ref[i * 16 + j] += v;
                }
            }
        }
        for (a, b) in ga.iter().zip(&ga_ref) {
            assert!((a - b).norm() < 1e-14);
        }
        assert_eq!(layer.neuron(&spec, 1).unwrap(), params[1]);
    }

    #[test]
    fn rule_of_thumb_values() {
        let d = build_dictionary(3, -1.0, 1.0).unwrap();
        assert_eq!(gamma_rule_of_thumb(&d), 0.5);
        let d = build_dictionary(8, -2.0, 2.0).unwrap();
        assert!((gamma_rule_of_thumb(&d) - 1.53125).abs() < 1e-12);
        let d = build_dictionary(4, -2.0, 2.0).unwrap();
        assert!((gamma_rule_of_thumb(&d) - 0.28125).abs() < 1e-12);
    }

    #[test]
    fn init_alpha_zero_target() {
        let dict = dict4();
        let spec = ActivationSpec::Kaf(KernelKind::RealGaussian);
        let bw = BandwidthParams::standard(gamma_rule_of_thumb(&dict)).unwrap();
        let a = init_alpha(&dict, &spec, &bw, |_| ZERO, 1e-4).unwrap();
        assert!(a.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn init_alpha_exact_interpolation() {
        let dict = dict4();
        let gamma = gamma_rule_of_thumb(&dict);
        for kind in [KernelKind::RealGaussian, KernelKind::ComplexGaussian] {
            let spec = ActivationSpec::Kaf(kind);
            let bw = BandwidthParams::standard(gamma).unwrap();
            let kernel = kind.with_gamma(gamma);
            let dj = dict.points()[9];
            let a = init_alpha(&dict, &spec, &bw, |z| kernel.eval(z, dj).unwrap(), 0.0).unwrap();
            for (j, v) in a.iter().enumerate() {
                let expect = if j == 9 { ONE } else { ZERO };
                assert!((v - expect).norm() < 1e-8, "{kind:?} j={j}: {v}");
            }
        }
    }

    #[test]
    fn init_alpha_identity_fit() {
        let dict = dict4();
        let gamma = gamma_rule_of_thumb(&dict);
        for spec in [
            ActivationSpec::Kaf(KernelKind::RealGaussian),
            ActivationSpec::Kaf(KernelKind::Independent),
            ActivationSpec::Kaf(KernelKind::ComplexGaussian),
            ActivationSpec::WlKafCase1,
            ActivationSpec::case2_default(),
        ] {
            let bw = spec.uniform_bandwidths(gamma).unwrap().unwrap();
            let target = default_init_target(&spec);
            let alpha = init_alpha(&dict, &spec, &bw, target, 1e-4).unwrap();
            let p = KafParams::new(dict.clone(), alpha, bw).unwrap();
            let worst = dict
                .points()
                .iter()
                .map(|&d| (activation_forward(&spec, Some(&p), d).unwrap() - target(d)).norm())
                .fold(0.0, f64::max);
            assert!(worst < 0.05, "{spec}: worst identity error {worst}");
        }
    }

    #[test]
    fn init_alpha_errors() {
        let dict = dict4();
        let bw = BandwidthParams::standard(1.0).unwrap();
        let spec = ActivationSpec::Kaf(KernelKind::RealGaussian);
        assert!(matches!(init_alpha(&dict, &spec, &bw, |z| z, -1.0), Err(Error::Parameter(_))));
        assert!(init_alpha(&dict, &ActivationSpec::PhaseAmplitude, &bw, |z| z, 0.0).is_err());
        // the independent kernel spans far fewer than 2D real functions
        let ind = ActivationSpec::Kaf(KernelKind::Independent);
        assert!(matches!(init_alpha(&dict, &ind, &bw, |z| z, 0.0), Err(Error::Numeric(_))));
        // a vanishing bandwidth makes every column identical
        let flat = BandwidthParams::standard(1e-300).unwrap();
        assert!(matches!(init_alpha(&dict, &spec, &flat, |z| z, 0.0), Err(Error::Numeric(_))));
    }

    #[test]
    fn alpha_count_is_variant_independent() {
        let dict = dict4();
        let g = gamma_rule_of_thumb(&dict);
        let alpha = vec![ZERO; 16];
        let mut counts = Vec::new();
        for spec in [ActivationSpec::Kaf(KernelKind::Independent), ActivationSpec::WlKafCase1, ActivationSpec::case2_default()] {
            let bw = spec.uniform_bandwidths(g).unwrap().unwrap();
            let layer = KafLayerParams::replicated(&spec, dict.clone(), 10, &alpha, &bw).unwrap();
            counts.push(layer.alpha.len());
        }
        assert!(counts.iter().all(|&n| n == 160));
    }

    #[test]
    fn spec_names_round_trip() {
        for s in ["split-identity", "split-tanh", "phase-amplitude", "kaf-complex-gaussian", "kaf-independent", "kaf-real-gaussian", "wlkaf-case1", "wlkaf-case2:0.3", "wlkaf-case2:0.2:0.6"] {
            let spec: ActivationSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("wlkaf-case2:1.2".parse::<ActivationSpec>().is_err());
        assert!("relu".parse::<ActivationSpec>().is_err());
    }

    #[test]
    fn bounded_variants_stay_finite() {
        let dict = dict4();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for spec in &all_kernel_specs()[1..] {
            let p = random_params(spec, dict.clone(), &mut rng);
            for z in [c(1e6, -1e6), c(-50.0, 3.0), c(0.0, 1e300)] {
                assert!(activation_forward(spec, Some(&p), z).unwrap().is_finite());
            }
        }
    }
}
