//! Feedforward complex-valued network: affine layers with elementwise
//! activations, a complex affine output layer, the squared-magnitude softmax,
//! losses and the regularized objective with its CR-calculus backward pass.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::activations::{
    default_init_target, gamma_rule_of_thumb, init_alpha, layer_backward, layer_forward, random_alpha,
    ActivationSpec, KafLayerParams,
};
use crate::cnum::{affine_rows, affine_rows_backward, ComplexTensor, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::kernels::{build_dictionary, Dictionary};
use crate::model::{non_finite_error, Classifier, GradBuf, Loss, ParamBuf, ParamBufMut, Targets, TrainObjective};
use crate::persist::{invalid, Reader, Writer};

/// Probability floor applied before taking the logarithm in the cross-entropy.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Class probabilities `p_n ∝ exp{Re(h_n)² + Im(h_n)²}`.
pub fn complex_softmax(h: &[C64]) -> Vec<f64> {
    let sq: Vec<f64> = h.iter().map(|z| z.re * z.re + z.im * z.im).collect();
    softmax(&sq)
}

/// Standard softmax, stabilized by subtracting the maximum.
pub fn softmax(s: &[f64]) -> Vec<f64> {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// `(y − ŷ)ᴴ(y − ŷ)`.
pub fn squared_loss(y: &[C64], y_hat: &[C64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::Dimension(format!("target length {} vs output length {}", y.len(), y_hat.len())));
    }
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b).norm_sqr()).sum())
}

/// `−ln p_label`, with `p_label` floored at [`PROBABILITY_FLOOR`].
pub fn cross_entropy(p: &[f64], label: usize) -> Result<f64> {
    let v = p
        .get(label)
        .ok_or_else(|| Error::Index(format!("label {label} out of range for {} classes", p.len())))?;
    Ok(-v.max(PROBABILITY_FLOOR).ln())
}

/// How kernel coefficients are initialized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaInit {
    /// Ridge fit to a near-linear target on the dictionary.
    Fit { ridge: f64 },
    /// Seeded complex normal coefficients.
    Random { std: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Number of complex input features.
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
    pub activation: ActivationSpec,
    pub dict_points: usize,
    pub dict_range: (f64, f64),
    pub alpha_init: AlphaInit,
    pub seed: u64,
}

impl NetworkConfig {
    /// Three hidden layers of 100 neurons with an 8×8 dictionary on `[−2, 2]²`.
    pub fn new(input_dim: usize, classes: usize, activation: ActivationSpec, seed: u64) -> Self {
        Self {
            input_dim,
            hidden: vec![100, 100, 100],
            classes,
            activation,
            dict_points: 8,
            dict_range: (-2.0, 2.0),
            alpha_init: AlphaInit::Fit { ridge: 1e-4 },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() {
            return Err(Error::Parameter("network needs at least one hidden layer".into()));
        }
        if self.input_dim == 0 || self.classes == 0 || self.hidden.iter().any(|&w| w == 0) {
            return Err(Error::Parameter("layer widths must be positive".into()));
        }
        self.activation.validate()
    }
}

/// Complex weights `n_out × n_in` and bias of one affine map.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineParams {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<C64>,
    pub b: Vec<C64>,
}

impl AffineParams {
    pub fn new(w: &ComplexTensor, b: &ComplexTensor) -> Result<Self> {
        if w.shape().len() != 2 || b.shape() != [w.shape()[0]] {
            return Err(Error::Dimension(format!("W {:?} and b {:?} do not conform", w.shape(), b.shape())));
        }
        Ok(Self { n_in: w.shape()[1], n_out: w.shape()[0], w: w.data().to_vec(), b: b.data().to_vec() })
    }

    /// Complex normal weights with `E|w|² = 1/n_in`, zero bias.
    fn random(n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let normal = Normal::new(0.0, (0.5 / n_in as f64).sqrt()).expect("valid std");
        let w = (0..n_in * n_out).map(|_| C64::new(normal.sample(rng), normal.sample(rng))).collect();
        Self { n_in, n_out, w, b: vec![ZERO; n_out] }
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let batch = x.len() / self.n_in;
        let mut out = vec![ZERO; batch * self.n_out];
        affine_rows(&self.w, &self.b, x, self.n_in, self.n_out, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    pub affine: AffineParams,
    pub kaf: Option<KafLayerParams>,
}

/// Intermediates of a forward pass needed by the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    batch: usize,
    /// Input of every hidden layer, then the input of the output layer.
    inputs: Vec<Vec<C64>>,
    /// Pre-activations of every hidden layer.
    pre: Vec<Vec<C64>>,
    logits: Vec<C64>,
}

impl ForwardCache {
    pub fn logits(&self) -> &[C64] {
        &self.logits
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

#[derive(Debug, Clone)]
pub struct ComplexNetwork {
    config: NetworkConfig,
    dictionary: Arc<Dictionary>,
    hidden: Vec<HiddenLayer>,
    output: AffineParams,
    version: u64,
}

/// Compares parameters only; the update counter is bookkeeping.
impl PartialEq for ComplexNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.dictionary == other.dictionary
            && self.hidden == other.hidden
            && self.output == other.output
    }
}

impl ComplexNetwork {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (lo, hi) = config.dict_range;
        let dictionary = Arc::new(build_dictionary(config.dict_points, lo, hi)?);
        let spec = &config.activation;
        let kaf_init = if spec.has_kernel() {
            let gamma = gamma_rule_of_thumb(&dictionary);
            let bw = spec.uniform_bandwidths(gamma)?.expect("kernel variant has bandwidths");
            Some((bw, config.alpha_init))
        } else {
            None
        };
        let fitted = match &kaf_init {
            Some((bw, AlphaInit::Fit { ridge })) => {
                Some(init_alpha(&dictionary, spec, bw, default_init_target(spec), *ridge)?)
            }
            _ => None,
        };
        let mut hidden = Vec::with_capacity(config.hidden.len());
        let mut n_in = config.input_dim;
        for &n_out in &config.hidden {
            let affine = AffineParams::random(n_in, n_out, &mut rng);
            let kaf = match &kaf_init {
                None => None,
                Some((bw, AlphaInit::Random { std })) => {
                    let alpha = random_alpha(&mut rng, dictionary.len() * n_out, *std);
                    let mut layer = KafLayerParams::replicated(spec, dictionary.clone(), n_out, &alpha[..dictionary.len()], bw)?;
                    layer.alpha = alpha;
                    Some(layer)
                }
                Some((bw, AlphaInit::Fit { .. })) => Some(KafLayerParams::replicated(
                    spec,
                    dictionary.clone(),
                    n_out,
                    fitted.as_deref().expect("fitted coefficients"),
                    bw,
                )?),
            };
            hidden.push(HiddenLayer { affine, kaf });
            n_in = n_out;
        }
        let output = AffineParams::random(n_in, config.classes, &mut rng);
        Ok(Self { config, dictionary, hidden, output, version: 0 })
    }

    /// Assemble a network from explicit layers. `config.hidden`,
    /// `config.input_dim` and `config.classes` are overwritten from the layers.
    pub fn from_layers(mut config: NetworkConfig, hidden: Vec<HiddenLayer>, output: AffineParams) -> Result<Self> {
        let (lo, hi) = config.dict_range;
        let dictionary = Arc::new(build_dictionary(config.dict_points, lo, hi)?);
        let first = hidden.first().ok_or_else(|| Error::Parameter("network needs at least one hidden layer".into()))?;
        config.input_dim = first.affine.n_in;
        config.hidden = hidden.iter().map(|l| l.affine.n_out).collect();
        config.classes = output.n_out;
        config.validate()?;
        let mut n_in = config.input_dim;
        for layer in hidden.iter().map(|l| &l.affine).chain(std::iter::once(&output)) {
            if layer.n_in != n_in || layer.w.len() != layer.n_in * layer.n_out || layer.b.len() != layer.n_out {
                return Err(Error::Dimension(format!("layer {}×{} does not follow width {n_in}", layer.n_out, layer.n_in)));
            }
            n_in = layer.n_out;
        }
        for l in &hidden {
            match (&l.kaf, config.activation.has_kernel()) {
                (Some(k), true) => {
                    if k.alpha.len() != l.affine.n_out * k.dictionary.len()
                        || k.log_bandwidths.len() != l.affine.n_out * config.activation.bandwidth_count()
                    {
                        return Err(Error::Dimension("kernel parameters do not match layer width".into()));
                    }
                }
                (None, false) => {}
                _ => return Err(Error::Parameter("kernel parameters do not match the activation".into())),
            }
        }
        Ok(Self { config, dictionary, hidden, output, version: 0 })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn hidden_layers(&self) -> &[HiddenLayer] {
        &self.hidden
    }

    pub fn output_layer(&self) -> &AffineParams {
        &self.output
    }

    /// Total number of trainable kernel coefficients `α`.
    pub fn alpha_count(&self) -> usize {
        self.hidden.iter().filter_map(|l| l.kaf.as_ref()).map(|k| k.alpha.len()).sum()
    }

    /// Forward pass over a `batch × input_dim` buffer, keeping the intermediates.
    pub fn forward_batch(&self, x: &[C64]) -> Result<ForwardCache> {
        let batch = self.check_input(x)?;
        let spec = &self.config.activation;
        let mut inputs = Vec::with_capacity(self.hidden.len() + 1);
        let mut pre = Vec::with_capacity(self.hidden.len());
        let mut cur = x.to_vec();
        for layer in &self.hidden {
            let z = layer.affine.apply(&cur);
            let a = layer_forward(spec, layer.kaf.as_ref(), &z, layer.affine.n_out)?;
            inputs.push(std::mem::replace(&mut cur, a));
            pre.push(z);
        }
        let logits = self.output.apply(&cur);
        inputs.push(cur);
        Ok(ForwardCache { version: self.version, batch, inputs, pre, logits })
    }

    /// Logits without keeping intermediates.
    pub fn logits(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check_input(x)?;
        let spec = &self.config.activation;
        let mut cur = x.to_vec();
        for layer in &self.hidden {
            let z = layer.affine.apply(&cur);
            cur = layer_forward(spec, layer.kaf.as_ref(), &z, layer.affine.n_out)?;
        }
        Ok(self.output.apply(&cur))
    }

    fn check_input(&self, x: &[C64]) -> Result<usize> {
        let f = self.config.input_dim;
        if x.is_empty() || x.len() % f != 0 {
            return Err(Error::Dimension(format!("input length {} is not a positive multiple of {f}", x.len())));
        }
        Ok(x.len() / f)
    }

    /// Mean data loss and its cogradient with respect to the logits.
    fn data_loss(&self, logits: &[C64], targets: Targets<'_>, loss: Loss) -> Result<(f64, Vec<C64>)> {
        let k = self.config.classes;
        let batch = logits.len() / k;
        if targets.batch(k) != batch {
            return Err(Error::Dimension(format!("{} targets for a batch of {batch}", targets.batch(k))));
        }
        let inv = 1.0 / batch as f64;
        let mut total = 0.0;
        let mut g = vec![ZERO; logits.len()];
        for (b, (h, gh)) in logits.chunks_exact(k).zip(g.chunks_exact_mut(k)).enumerate() {
            match (loss, targets) {
                (Loss::CrossEntropy, Targets::Labels(labels)) => {
                    let label = labels[b];
                    let p = complex_softmax(h);
                    total += cross_entropy(&p, label)?;
                    if p[label] > PROBABILITY_FLOOR {
                        for n in 0..k {
                            let dsn = p[n] - if n == label { 1.0 } else { 0.0 };
                            gh[n] = h[n] * (2.0 * dsn * inv);
                        }
                    }
                }
                (Loss::CrossEntropy, Targets::Values(_)) => {
                    return Err(Error::Parameter("cross-entropy needs class labels".into()))
                }
                (Loss::SquaredError, t) => {
                    let target: Vec<C64> = match t {
                        Targets::Labels(labels) => {
                            let label = labels[b];
                            if label >= k {
                                return Err(Error::Index(format!("label {label} out of range for {k} classes")));
                            }
                            (0..k).map(|n| if n == label { ONE } else { ZERO }).collect()
                        }
                        Targets::Values(v) => v[b * k..(b + 1) * k].to_vec(),
                    };
                    total += squared_loss(&target, h)?;
                    for n in 0..k {
                        gh[n] = (h[n] - target[n]) * (2.0 * inv);
                    }
                }
            }
        }
        Ok((total * inv, g))
    }

    /// Objective value and cogradients of every parameter group from a cached forward pass.
    pub fn backward(&self, cache: &ForwardCache, targets: Targets<'_>, obj: &TrainObjective) -> Result<(f64, Vec<GradBuf>)> {
        obj.validate()?;
        if cache.version != self.version {
            return Err(Error::State(format!(
                "forward cache from parameter version {} used at version {}",
                cache.version, self.version
            )));
        }
        let (loss, g_logits) = self.data_loss(&cache.logits, targets, obj.loss)?;
        let value = loss + self.regularizer(obj.c);
        if !value.is_finite() {
            return Err(non_finite_error(self, "objective", value));
        }

        let spec = &self.config.activation;
        let mut grads: Vec<GradBuf> = self.params().into_iter().map(GradBuf::zeros_like).collect();
        let n_hidden = self.hidden.len();
        let out_idx = grads.len() - 2;

        let mut g_act = vec![ZERO; cache.inputs[n_hidden].len()];
        {
            let (gw, gb) = complex_pair(&mut grads, out_idx);
            affine_rows_backward(
                &self.output.w,
                &cache.inputs[n_hidden],
                &g_logits,
                self.output.n_in,
                self.output.n_out,
                gw,
                gb,
                Some(&mut g_act),
            );
        }
        let mut group = out_idx;
        for (l, layer) in self.hidden.iter().enumerate().rev() {
            let n = layer.affine.n_out;
            let has_kaf = layer.kaf.is_some();
            group -= if has_kaf { 4 } else { 2 };
            let g_z = if let Some(kaf) = &layer.kaf {
                let (ga, gl) = kernel_pair(&mut grads, group + 2);
                layer_backward(spec, Some(kaf), &cache.pre[l], &g_act, n, ga, gl)?
            } else {
                let (mut ga, mut gl) = (Vec::new(), Vec::new());
                layer_backward(spec, None, &cache.pre[l], &g_act, n, &mut ga, &mut gl)?
            };
            let (gw, gb) = complex_pair(&mut grads, group);
            let want_input = l > 0;
            let mut g_in = if want_input { vec![ZERO; cache.inputs[l].len()] } else { Vec::new() };
            affine_rows_backward(
                &layer.affine.w,
                &cache.inputs[l],
                &g_z,
                layer.affine.n_in,
                n,
                gw,
                gb,
                want_input.then_some(g_in.as_mut_slice()),
            );
            g_act = g_in;
        }
        for (g, p) in grads.iter_mut().zip(self.params()) {
            g.add_ridge(p, obj.c);
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!("non-finite cogradient in {}", self.param_names()[i])));
        }
        Ok((value, grads))
    }
}

fn complex_pair(grads: &mut [GradBuf], i: usize) -> (&mut [C64], &mut [C64]) {
    let (a, b) = grads[i..].split_at_mut(1);
    match (&mut a[0], &mut b[0]) {
        (GradBuf::Complex(w), GradBuf::Complex(b)) => (w, b),
        _ => unreachable!("affine groups are complex"),
    }
}

fn kernel_pair(grads: &mut [GradBuf], i: usize) -> (&mut [C64], &mut [f64]) {
    let (a, b) = grads[i..].split_at_mut(1);
    match (&mut a[0], &mut b[0]) {
        (GradBuf::Complex(al), GradBuf::Real(lg)) => (al, lg),
        _ => unreachable!("kernel groups are (complex, real)"),
    }
}

/// Forward pass of a single complex input vector.
pub fn network_forward(x: &[C64], net: &ComplexNetwork) -> Result<(Vec<C64>, ForwardCache)> {
    if x.len() != net.config.input_dim {
        return Err(Error::Dimension(format!("input has {} entries, network expects {}", x.len(), net.config.input_dim)));
    }
    let cache = net.forward_batch(x)?;
    Ok((cache.logits.clone(), cache))
}

/// Objective value and cogradients for every parameter group.
pub fn network_backward(
    cache: &ForwardCache,
    net: &ComplexNetwork,
    targets: Targets<'_>,
    obj: &TrainObjective,
) -> Result<(f64, Vec<GradBuf>)> {
    net.backward(cache, targets, obj)
}

impl Classifier for ComplexNetwork {
    fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    fn classes(&self) -> usize {
        self.config.classes
    }

    fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, l) in self.hidden.iter().enumerate() {
            names.push(format!("layer{}.W", i + 1));
            names.push(format!("layer{}.b", i + 1));
            if l.kaf.is_some() {
                names.push(format!("layer{}.alpha", i + 1));
                names.push(format!("layer{}.log_gamma", i + 1));
            }
        }
        names.push("output.W".into());
        names.push("output.b".into());
        names
    }

    fn params(&self) -> Vec<ParamBuf<'_>> {
        let mut out = Vec::new();
        for l in &self.hidden {
            out.push(ParamBuf::Complex(&l.affine.w));
            out.push(ParamBuf::Complex(&l.affine.b));
            if let Some(k) = &l.kaf {
                out.push(ParamBuf::Complex(&k.alpha));
                out.push(ParamBuf::Real(&k.log_bandwidths));
            }
        }
        out.push(ParamBuf::Complex(&self.output.w));
        out.push(ParamBuf::Complex(&self.output.b));
        out
    }

    fn params_mut(&mut self) -> Vec<ParamBufMut<'_>> {
        self.version += 1;
        let mut out = Vec::new();
        for l in &mut self.hidden {
            out.push(ParamBufMut::Complex(&mut l.affine.w));
            out.push(ParamBufMut::Complex(&mut l.affine.b));
            if let Some(k) = &mut l.kaf {
                out.push(ParamBufMut::Complex(&mut k.alpha));
                out.push(ParamBufMut::Real(&mut k.log_bandwidths));
            }
        }
        out.push(ParamBufMut::Complex(&mut self.output.w));
        out.push(ParamBufMut::Complex(&mut self.output.b));
        out
    }

    fn predict_proba(&self, x: &[C64]) -> Result<Vec<f64>> {
        let logits = self.logits(x)?;
        Ok(logits.chunks_exact(self.config.classes).flat_map(complex_softmax).collect())
    }

    fn loss_and_grad(&self, x: &[C64], targets: Targets<'_>, obj: &TrainObjective) -> Result<(f64, Vec<GradBuf>)> {
        let cache = self.forward_batch(x)?;
        self.backward(&cache, targets, obj)
    }

    fn objective(&self, x: &[C64], targets: Targets<'_>, obj: &TrainObjective) -> Result<f64> {
        obj.validate()?;
        let logits = self.logits(x)?;
        let (loss, _) = self.data_loss(&logits, targets, obj.loss)?;
        let value = loss + self.regularizer(obj.c);
        if !value.is_finite() {
            return Err(non_finite_error(self, "objective", value));
        }
        Ok(value)
    }
}

// Serialization body; the container header lives in `model_file`.
impl ComplexNetwork {
    pub(crate) fn write_body<W: Write>(&self, w: &mut Writer<W>) -> std::io::Result<()> {
        let c = &self.config;
        w.usize(c.input_dim)?;
        w.usize(c.classes)?;
        w.usizes(&c.hidden)?;
        w.str(&c.activation.to_string())?;
        w.usize(c.dict_points)?;
        w.f64(c.dict_range.0)?;
        w.f64(c.dict_range.1)?;
        match c.alpha_init {
            AlphaInit::Fit { ridge } => {
                w.u8(0)?;
                w.f64(ridge)?;
            }
            AlphaInit::Random { std } => {
                w.u8(1)?;
                w.f64(std)?;
            }
        }
        w.u64(c.seed)?;
        w.complexes(self.dictionary.points())?;
        for l in &self.hidden {
            w.complexes(&l.affine.w)?;
            w.complexes(&l.affine.b)?;
            if let Some(k) = &l.kaf {
                w.complexes(&k.alpha)?;
                w.f64s(&k.log_bandwidths)?;
            }
        }
        w.complexes(&self.output.w)?;
        w.complexes(&self.output.b)
    }

    pub(crate) fn read_body<R: Read>(r: &mut Reader<R>) -> std::io::Result<Self> {
        let input_dim = r.usize()?;
        let classes = r.usize()?;
        let hidden = r.usizes()?;
        let activation: ActivationSpec = r.str()?.parse().map_err(|_| invalid("unknown activation"))?;
        let dict_points = r.usize()?;
        let dict_range = (r.f64()?, r.f64()?);
        let alpha_init = match r.u8()? {
            0 => AlphaInit::Fit { ridge: r.f64()? },
            1 => AlphaInit::Random { std: r.f64()? },
            _ => return Err(invalid("unknown alpha initialization tag")),
        };
        let seed = r.u64()?;
        let config = NetworkConfig { input_dim, hidden: hidden.clone(), classes, activation, dict_points, dict_range, alpha_init, seed };
        config.validate().map_err(|_| invalid("invalid network configuration"))?;
        let dictionary = Arc::new(build_dictionary(dict_points, dict_range.0, dict_range.1).map_err(|_| invalid("invalid dictionary"))?);
        if r.complexes()? != dictionary.points() {
            return Err(invalid("stored dictionary does not match its grid description"));
        }
        let mut layers = Vec::with_capacity(hidden.len());
        let mut n_in = input_dim;
        for &n_out in &hidden {
            let affine = read_affine(r, n_in, n_out)?;
            let kaf = if config.activation.has_kernel() {
                let alpha = r.complexes()?;
                let log_bandwidths = r.f64s()?;
                Some(KafLayerParams { dictionary: dictionary.clone(), alpha, log_bandwidths })
            } else {
                None
            };
            layers.push(HiddenLayer { affine, kaf });
            n_in = n_out;
        }
        let output = read_affine(r, n_in, classes)?;
        Self::from_layers(config, layers, output).map_err(|e| invalid(&e.to_string()))
    }
}

fn read_affine<R: Read>(r: &mut Reader<R>, n_in: usize, n_out: usize) -> std::io::Result<AffineParams> {
    let w = r.complexes()?;
    let b = r.complexes()?;
    if w.len() != n_in * n_out || b.len() != n_out {
        return Err(invalid("affine parameter length mismatch"));
    }
    Ok(AffineParams { n_in, n_out, w, b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::{KernelKind, SplitFn};
    use crate::cnum::I;
    use rand::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn tiny(spec: ActivationSpec, seed: u64) -> ComplexNetwork {
        let mut cfg = NetworkConfig::new(3, 2, spec, seed);
        cfg.hidden = vec![4, 4];
        cfg.dict_points = 4;
        cfg.alpha_init = AlphaInit::Random { std: 0.3 };
        ComplexNetwork::new(cfg).unwrap()
    }

    #[test]
    fn softmax_examples() {
        let p = complex_softmax(&[c(1.0, 0.0), I, c(0.6, 0.8)]);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(complex_softmax(&[c(3.0, -2.0)]), vec![1.0]);
        let p = complex_softmax(&[c(1.0, 0.0), ZERO]);
        let e = std::f64::consts::E;
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-15 && (p[1] - 1.0 / (e + 1.0)).abs() < 1e-15);
        assert!((p[0] - 0.7311).abs() < 1e-4);
        // large magnitudes do not overflow
        let p = complex_softmax(&[c(100.0, 0.0), c(99.0, 0.0)]);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn squared_loss_examples() {
        let y = [c(1.0, 2.0), c(-1.0, 0.5)];
        assert_eq!(squared_loss(&y, &y).unwrap(), 0.0);
        assert_eq!(squared_loss(&[I], &[ZERO]).unwrap(), 1.0);
        assert_eq!(squared_loss(&[c(1.0, 1.0), c(2.0, 0.0)], &[ZERO, ZERO]).unwrap(), 6.0);
        assert!(matches!(squared_loss(&[I], &[]), Err(Error::Dimension(_))));
    }

    #[test]
    fn cross_entropy_examples() {
        let u = vec![0.1; 10];
        assert!((cross_entropy(&u, 3).unwrap() - 10f64.ln()).abs() < 1e-12);
        assert_eq!(cross_entropy(&[0.0, 1.0], 1).unwrap(), 0.0);
        assert!((cross_entropy(&[0.7311, 0.2689], 0).unwrap() - 0.3133).abs() < 1e-4);
        assert!(matches!(cross_entropy(&[0.5, 0.5], 2), Err(Error::Index(_))));
        assert!((cross_entropy(&[1.0, 0.0], 1).unwrap() + PROBABILITY_FLOOR.ln()).abs() < 1e-12);
    }

    fn identity_net(n: usize) -> ComplexNetwork {
        let cfg = NetworkConfig::new(n, n, ActivationSpec::Split(SplitFn::Identity), 0);
        let eye = ComplexTensor::identity(n).unwrap();
        let zero = ComplexTensor::zeros(vec![n]).unwrap();
        let layer = HiddenLayer { affine: AffineParams::new(&eye, &zero).unwrap(), kaf: None };
        ComplexNetwork::from_layers(cfg, vec![layer], AffineParams::new(&eye, &zero).unwrap()).unwrap()
    }

    #[test]
    fn identity_network_passes_input_through() {
        let net = identity_net(3);
        let x = [c(1.0, -1.0), c(0.5, 2.0), c(-3.0, 0.0)];
        let (logits, _) = network_forward(&x, &net).unwrap();
        assert_eq!(logits, x);
        assert!(matches!(network_forward(&x[..2], &net), Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_weights_give_bias_logits() {
        let mut net = tiny(ActivationSpec::Kaf(KernelKind::Independent), 1);
        let bias = [c(0.3, -0.2), c(1.0, 2.0)];
        net.output.w.fill(ZERO);
        net.output.b.copy_from_slice(&bias);
        let (logits, _) = network_forward(&[ONE, I, ZERO], &net).unwrap();
        assert_eq!(logits, bias);
    }

    #[test]
    fn forward_is_composition_of_layers() {
        use crate::activations::layer_forward;
        use crate::cnum::complex_affine;
        let net = tiny(ActivationSpec::WlKafCase1, 5);
        let x = [c(0.2, 1.0), c(-0.7, 0.1), c(0.9, -0.4)];
        let mut cur = ComplexTensor::vector(&x).unwrap();
        for l in net.hidden_layers() {
            let w = ComplexTensor::new(vec![l.affine.n_out, l.affine.n_in], l.affine.w.clone()).unwrap();
            let b = ComplexTensor::vector(&l.affine.b).unwrap();
            let z = complex_affine(&w, &cur, &b).unwrap();
            let a = layer_forward(&net.config.activation, l.kaf.as_ref(), z.data(), l.affine.n_out).unwrap();
            cur = ComplexTensor::vector(&a).unwrap();
        }
        let o = net.output_layer();
        let w = ComplexTensor::new(vec![o.n_out, o.n_in], o.w.clone()).unwrap();
        let expect = complex_affine(&w, &cur, &ComplexTensor::vector(&o.b).unwrap()).unwrap();
        assert_eq!(network_forward(&x, &net).unwrap().0, expect.data());
    }

    #[test]
    fn objective_examples() {
        // C = 0, perfect squared-loss predictions
        let net = identity_net(2);
        let x = [c(0.4, 0.1), c(-1.0, 2.0)];
        let obj = TrainObjective { loss: Loss::SquaredError, c: 0.0 };
        assert_eq!(net.objective(&x, Targets::Values(&x), &obj).unwrap(), 0.0);
        let (_, grads) = net.loss_and_grad(&x, Targets::Values(&x), &obj).unwrap();
        for g in grads {
            match g {
                GradBuf::Complex(v) => assert!(v.iter().all(|z| *z == ZERO)),
                GradBuf::Real(v) => assert!(v.iter().all(|z| *z == 0.0)),
            }
        }

        // regularizer only: a single weight 1+i with C = 1
        let cfg = NetworkConfig::new(1, 1, ActivationSpec::Split(SplitFn::Identity), 0);
        let w = ComplexTensor::matrix(&[&[c(1.0, 1.0)]]).unwrap();
        let zero_w = ComplexTensor::matrix(&[&[ZERO]]).unwrap();
        let zero_b = ComplexTensor::vector(&[ZERO]).unwrap();
        let layer = HiddenLayer { affine: AffineParams::new(&w, &zero_b).unwrap(), kaf: None };
        let net = ComplexNetwork::from_layers(cfg, vec![layer], AffineParams::new(&zero_w, &zero_b).unwrap()).unwrap();
        let obj = TrainObjective { loss: Loss::SquaredError, c: 1.0 };
        let v = net.objective(&[ZERO], Targets::Values(&[ZERO]), &obj).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
        let (_, grads) = net.loss_and_grad(&[ZERO], Targets::Values(&[ZERO]), &obj).unwrap();
        assert_eq!(grads[0], GradBuf::Complex(vec![c(2.0, 2.0)]));
    }

    #[test]
    fn gradient_step_decreases_objective() {
        let net = tiny(ActivationSpec::case2_default(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<C64> = (0..15).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let labels: Vec<usize> = (0..5).map(|i| i % 2).collect();
        let obj = TrainObjective::cross_entropy(1e-3);
        let (before, grads) = net.loss_and_grad(&x, Targets::Labels(&labels), &obj).unwrap();
        let mut stepped = net.clone();
        for (p, g) in stepped.params_mut().into_iter().zip(&grads) {
            match (p, g) {
                (ParamBufMut::Complex(p), GradBuf::Complex(g)) => p.iter_mut().zip(g).for_each(|(p, g)| *p -= g * 1e-3),
                (ParamBufMut::Real(p), GradBuf::Real(g)) => p.iter_mut().zip(g).for_each(|(p, g)| *p -= g * 1e-3),
                _ => unreachable!(),
            }
        }
        let after = stepped.objective(&x, Targets::Labels(&labels), &obj).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut net = tiny(ActivationSpec::PhaseAmplitude, 2);
        let cache = net.forward_batch(&[ONE, I, ZERO]).unwrap();
        let _ = net.params_mut();
        let obj = TrainObjective::cross_entropy(0.0);
        assert!(matches!(net.backward(&cache, Targets::Labels(&[0]), &obj), Err(Error::State(_))));
    }

    #[test]
    fn regularizer_gradient_is_twice_c_w() {
        let net = tiny(ActivationSpec::WlKafCase1, 4);
        let obj = TrainObjective::cross_entropy(0.0);
        let reg = TrainObjective::cross_entropy(0.25);
        let x = [c(0.1, 0.2), c(0.3, -0.1), c(-0.5, 0.0)];
        let (_, g0) = net.loss_and_grad(&x, Targets::Labels(&[1]), &obj).unwrap();
        let (_, g1) = net.loss_and_grad(&x, Targets::Labels(&[1]), &reg).unwrap();
        for ((a, b), p) in g0.iter().zip(&g1).zip(net.params()) {
            match (a, b, p) {
                (GradBuf::Complex(a), GradBuf::Complex(b), ParamBuf::Complex(w)) => {
                    for ((a, b), w) in a.iter().zip(b).zip(w) {
                        assert!((b - a - w * 0.5).norm() < 1e-12);
                    }
                }
                (GradBuf::Real(a), GradBuf::Real(b), ParamBuf::Real(w)) => {
                    for ((a, b), w) in a.iter().zip(b).zip(w) {
                        assert!((b - a - 0.5 * w).abs() < 1e-12);
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn wl_and_standard_share_alpha_count() {
        let mut cfg = NetworkConfig::new(100, 10, ActivationSpec::Kaf(KernelKind::Independent), 0);
        let kaf = ComplexNetwork::new(cfg.clone()).unwrap();
        cfg.activation = ActivationSpec::WlKafCase1;
        let case1 = ComplexNetwork::new(cfg.clone()).unwrap();
        cfg.activation = ActivationSpec::case2_default();
        let case2 = ComplexNetwork::new(cfg).unwrap();
        assert_eq!(kaf.alpha_count(), 300 * 64);
        assert_eq!(kaf.alpha_count(), case1.alpha_count());
        assert_eq!(kaf.alpha_count(), case2.alpha_count());
    }

    #[test]
    fn deterministic_construction_and_forward() {
        let a = tiny(ActivationSpec::WlKafCase1, 17);
        let b = tiny(ActivationSpec::WlKafCase1, 17);
        assert_eq!(a, b);
        let x = [c(0.5, 0.5), c(-0.1, 0.3), c(1.2, -0.8)];
        assert_eq!(a.logits(&x).unwrap(), b.logits(&x).unwrap());
        assert_ne!(a, tiny(ActivationSpec::WlKafCase1, 18));
    }

    #[test]
    fn default_init_is_near_linear() {
        let cfg = NetworkConfig::new(4, 2, ActivationSpec::WlKafCase1, 0);
        let net = ComplexNetwork::new(cfg).unwrap();
        let l = &net.hidden_layers()[0];
        let spec = &net.config().activation;
        let z: Vec<C64> = (0..100).map(|i| c(-1.5 + 0.03 * i as f64, 1.0 - 0.02 * i as f64)).collect();
        let out = layer_forward(spec, l.kaf.as_ref(), &z, 100).unwrap();
        let worst = z.iter().zip(&out).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst < 0.05, "worst deviation from identity {worst}");
    }
}
