//! Real-valued MLP baseline: the complex input is split into `[Re x; Im x]`,
//! hidden layers use ReLU and the output is a standard softmax.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cnum::C64;
use crate::error::{Error, Result};
use crate::model::{non_finite_error, Classifier, GradBuf, Loss, ParamBuf, ParamBufMut, Targets, TrainObjective};
use crate::network::{cross_entropy, softmax, PROBABILITY_FLOOR};
use crate::persist::{invalid, Reader, Writer};

#[derive(Debug, Clone, PartialEq)]
pub struct RealLayer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out × n_in`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl RealLayer {
    pub fn new(n_in: usize, n_out: usize, w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if n_in == 0 || n_out == 0 || w.len() != n_in * n_out || b.len() != n_out {
            return Err(Error::Dimension(format!("layer {n_out}×{n_in} with {} weights, {} biases", w.len(), b.len())));
        }
        Ok(Self { n_in, n_out, w, b })
    }

    /// He initialization, `N(0, 2/n_in)`, zero bias.
    fn he(n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let normal = Normal::new(0.0, (2.0 / n_in as f64).sqrt()).expect("valid std");
        Self { n_in, n_out, w: (0..n_in * n_out).map(|_| normal.sample(rng)).collect(), b: vec![0.0; n_out] }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len() / self.n_in * self.n_out);
        for row in x.chunks_exact(self.n_in) {
            for (wr, b) in self.w.chunks_exact(self.n_in).zip(&self.b) {
                out.push(b + wr.iter().zip(row).map(|(w, x)| w * x).sum::<f64>());
            }
        }
        out
    }

    /// Accumulates `gw`, `gb`; returns the input gradient when asked.
    fn backward(&self, x: &[f64], gy: &[f64], gw: &mut [f64], gb: &mut [f64], want_input: bool) -> Vec<f64> {
        let mut gx = if want_input { vec![0.0; x.len()] } else { Vec::new() };
        for (b, (xr, gr)) in x.chunks_exact(self.n_in).zip(gy.chunks_exact(self.n_out)).enumerate() {
            for (o, &g) in gr.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                gb[o] += g;
                let wrow = &self.w[o * self.n_in..(o + 1) * self.n_in];
                gw[o * self.n_in..(o + 1) * self.n_in].iter_mut().zip(xr).for_each(|(w, x)| *w += g * x);
                if want_input {
                    gx[b * self.n_in..(b + 1) * self.n_in].iter_mut().zip(wrow).for_each(|(d, w)| *d += g * w);
                }
            }
        }
        gx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealMlp {
    /// Complex input dimension `F`; the network sees `2F` reals.
    input_dim: usize,
    seed: u64,
    /// Hidden layers followed by the output layer.
    layers: Vec<RealLayer>,
}

/// `[Re x; Im x]` per row of a `batch × f` complex buffer.
pub fn split_input(x: &[C64], f: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * x.len());
    for row in x.chunks_exact(f) {
        out.extend(row.iter().map(|z| z.re));
        out.extend(row.iter().map(|z| z.im));
    }
    out
}

impl RealMlp {
    pub fn new(input_dim: usize, hidden: &[usize], classes: usize, seed: u64) -> Result<Self> {
        if hidden.is_empty() {
            return Err(Error::Parameter("network needs at least one hidden layer".into()));
        }
        if input_dim == 0 || classes == 0 || hidden.iter().any(|&w| w == 0) {
            return Err(Error::Parameter("layer widths must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut n_in = 2 * input_dim;
        for &n in hidden.iter().chain(std::iter::once(&classes)) {
            layers.push(RealLayer::he(n_in, n, &mut rng));
            n_in = n;
        }
        Ok(Self { input_dim, seed, layers })
    }

    /// Assemble from explicit layers; the first takes `2F` inputs.
    pub fn from_layers(layers: Vec<RealLayer>, seed: u64) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::Parameter("network needs at least one hidden layer".into()));
        }
        if layers[0].n_in % 2 != 0 {
            return Err(Error::Dimension("first layer must take [Re x; Im x]".into()));
        }
        for pair in layers.windows(2) {
            if pair[1].n_in != pair[0].n_out {
                return Err(Error::Dimension(format!("layer of width {} feeds {} inputs", pair[0].n_out, pair[1].n_in)));
            }
        }
        Ok(Self { input_dim: layers[0].n_in / 2, seed, layers })
    }

    pub fn layers(&self) -> &[RealLayer] {
        &self.layers
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.n_out).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Output logits for a `batch × 2F` real buffer.
    pub fn logits_split(&self, x_split: &[f64]) -> Result<Vec<f64>> {
        let n = 2 * self.input_dim;
        if x_split.is_empty() || x_split.len() % n != 0 {
            return Err(Error::Dimension(format!("input length {} is not a positive multiple of {n}", x_split.len())));
        }
        let (hidden, out) = self.layers.split_at(self.layers.len() - 1);
        let mut cur = x_split.to_vec();
        for l in hidden {
            cur = l.apply(&cur);
            relu(&mut cur);
        }
        Ok(out[0].apply(&cur))
    }

    fn forward_cached(&self, x_split: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let (hidden, out) = self.layers.split_at(self.layers.len() - 1);
        let mut acts = Vec::with_capacity(self.layers.len());
        let mut cur = x_split.to_vec();
        for l in hidden {
            let mut next = l.apply(&cur);
            relu(&mut next);
            acts.push(std::mem::replace(&mut cur, next));
        }
        let logits = out[0].apply(&cur);
        acts.push(cur);
        (acts, logits)
    }

    fn data_loss(&self, logits: &[f64], targets: Targets<'_>, loss: Loss) -> Result<(f64, Vec<f64>)> {
        let k = self.classes();
        let batch = logits.len() / k;
        let labels = match targets {
            Targets::Labels(l) if l.len() == batch => l,
            Targets::Labels(l) => {
                return Err(Error::Dimension(format!("{} targets for a batch of {batch}", l.len())))
            }
            Targets::Values(_) => return Err(Error::Parameter("the real baseline needs class labels".into())),
        };
        let inv = 1.0 / batch as f64;
        let mut total = 0.0;
        let mut g = vec![0.0; logits.len()];
        for ((s, gs), &label) in logits.chunks_exact(k).zip(g.chunks_exact_mut(k)).zip(labels) {
            if label >= k {
                return Err(Error::Index(format!("label {label} out of range for {k} classes")));
            }
            match loss {
                Loss::CrossEntropy => {
                    let p = softmax(s);
                    total += cross_entropy(&p, label)?;
                    if p[label] > PROBABILITY_FLOOR {
                        for n in 0..k {
                            gs[n] = (p[n] - if n == label { 1.0 } else { 0.0 }) * inv;
                        }
                    }
                }
                Loss::SquaredError => {
                    for n in 0..k {
                        let r = s[n] - if n == label { 1.0 } else { 0.0 };
                        total += r * r;
                        gs[n] = 2.0 * r * inv;
                    }
                }
            }
        }
        Ok((total * inv, g))
    }
}

fn relu(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
}

/// Class probabilities of the real baseline for one `[Re x; Im x]` input.
pub fn real_baseline_forward(x_split: &[f64], net: &RealMlp) -> Result<Vec<f64>> {
    if x_split.len() != 2 * net.input_dim {
        return Err(Error::Dimension(format!("input has {} entries, network expects {}", x_split.len(), 2 * net.input_dim)));
    }
    Ok(softmax(&net.logits_split(x_split)?))
}

impl Classifier for RealMlp {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn classes(&self) -> usize {
        self.layers.last().expect("output layer").n_out
    }

    fn param_names(&self) -> Vec<String> {
        let last = self.layers.len() - 1;
        (0..self.layers.len())
            .flat_map(|i| {
                let name = if i == last { "output".to_string() } else { format!("layer{}", i + 1) };
                [format!("{name}.W"), format!("{name}.b")]
            })
            .collect()
    }

    fn params(&self) -> Vec<ParamBuf<'_>> {
        self.layers.iter().flat_map(|l| [ParamBuf::Real(&l.w), ParamBuf::Real(&l.b)]).collect()
    }

    fn params_mut(&mut self) -> Vec<ParamBufMut<'_>> {
        self.layers.iter_mut().flat_map(|l| [ParamBufMut::Real(&mut l.w), ParamBufMut::Real(&mut l.b)]).collect()
    }

    fn predict_proba(&self, x: &[C64]) -> Result<Vec<f64>> {
        let logits = self.logits_split(&split_input(x, self.input_dim))?;
        Ok(logits.chunks_exact(self.classes()).flat_map(softmax).collect())
    }

    fn loss_and_grad(&self, x: &[C64], targets: Targets<'_>, obj: &TrainObjective) -> Result<(f64, Vec<GradBuf>)> {
        obj.validate()?;
        let xs = split_input(x, self.input_dim);
        self.logits_split(&xs)?;
        let (acts, logits) = self.forward_cached(&xs);
        let (loss, mut g) = self.data_loss(&logits, targets, obj.loss)?;
        let value = loss + self.regularizer(obj.c);
        if !value.is_finite() {
            return Err(non_finite_error(self, "objective", value));
        }
        let mut grads: Vec<GradBuf> = self.params().into_iter().map(GradBuf::zeros_like).collect();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (gw, gb) = match grads[2 * i..].split_at_mut(1) {
                (a, b) => match (&mut a[0], &mut b[0]) {
                    (GradBuf::Real(w), GradBuf::Real(b)) => (w, b),
                    _ => unreachable!("real groups"),
                },
            };
            let mut gx = layer.backward(&acts[i], &g, gw, gb, i > 0);
            if i > 0 {
                // ReLU mask: the cached activation is zero exactly where the unit was inactive.
                gx.iter_mut().zip(&acts[i]).for_each(|(g, a)| {
                    if *a <= 0.0 {
                        *g = 0.0
                    }
                });
            }
            g = gx;
        }
        for (g, p) in grads.iter_mut().zip(self.params()) {
            g.add_ridge(p, obj.c);
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!("non-finite gradient in {}", self.param_names()[i])));
        }
        Ok((value, grads))
    }

    fn objective(&self, x: &[C64], targets: Targets<'_>, obj: &TrainObjective) -> Result<f64> {
        obj.validate()?;
        let logits = self.logits_split(&split_input(x, self.input_dim))?;
        let (loss, _) = self.data_loss(&logits, targets, obj.loss)?;
        let value = loss + self.regularizer(obj.c);
        if !value.is_finite() {
            return Err(non_finite_error(self, "objective", value));
        }
        Ok(value)
    }
}

impl RealMlp {
    pub(crate) fn write_body<W: Write>(&self, w: &mut Writer<W>) -> std::io::Result<()> {
        w.u64(self.seed)?;
        w.usize(self.layers.len())?;
        for l in &self.layers {
            w.usize(l.n_in)?;
            w.usize(l.n_out)?;
            w.f64s(&l.w)?;
            w.f64s(&l.b)?;
        }
        Ok(())
    }

    pub(crate) fn read_body<R: Read>(r: &mut Reader<R>) -> std::io::Result<Self> {
        let seed = r.u64()?;
        let n = r.usize()?;
        if n > 64 {
            return Err(invalid("too many layers"));
        }
        let mut layers = Vec::with_capacity(n);
        for _ in 0..n {
            let (n_in, n_out) = (r.usize()?, r.usize()?);
            let (w, b) = (r.f64s()?, r.f64s()?);
            layers.push(RealLayer::new(n_in, n_out, w, b).map_err(|e| invalid(&e.to_string()))?);
        }
        Self::from_layers(layers, seed).map_err(|e| invalid(&e.to_string()))
    }
}
