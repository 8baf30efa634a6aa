//! The interface shared by the complex network and the real-valued baseline:
//! named parameter groups, batched loss/cogradient evaluation and prediction.

use crate::cnum::C64;
use crate::error::{Error, Result};

/// Data loss used by the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// `(y − ŷ)ᴴ(y − ŷ)` against one-hot (or explicit complex) targets.
    SquaredError,
    /// Cross-entropy on the output probabilities.
    CrossEntropy,
}

/// Regularized objective: mean batch loss plus `c·‖w‖²` over every trainable parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainObjective {
    pub loss: Loss,
    pub c: f64,
}

impl TrainObjective {
    pub fn cross_entropy(c: f64) -> Self {
        Self { loss: Loss::CrossEntropy, c }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::Parameter(format!("regularization weight must be ≥ 0, got {}", self.c)));
        }
        Ok(())
    }
}

/// Mutable view of one parameter group.
pub enum ParamBufMut<'a> {
    Complex(&'a mut [C64]),
    Real(&'a mut [f64]),
}

/// Read-only view of one parameter group.
#[derive(Clone, Copy)]
pub enum ParamBuf<'a> {
    Complex(&'a [C64]),
    Real(&'a [f64]),
}

impl ParamBuf<'_> {
    pub fn len(&self) -> usize {
        match self {
            ParamBuf::Complex(v) => v.len(),
            ParamBuf::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Σ|w|²`
    pub fn norm_sq(&self) -> f64 {
        match self {
            ParamBuf::Complex(v) => crate::cnum::hermitian_norm_sq(v),
            ParamBuf::Real(v) => v.iter().map(|x| x * x).sum(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            ParamBuf::Complex(v) => v.iter().map(|z| z.norm()).fold(0.0, f64::max),
            ParamBuf::Real(v) => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
        }
    }
}

/// Cogradient of one parameter group (real groups hold plain derivatives).
#[derive(Debug, Clone, PartialEq)]
pub enum GradBuf {
    Complex(Vec<C64>),
    Real(Vec<f64>),
}

impl GradBuf {
    pub fn zeros_like(p: ParamBuf<'_>) -> Self {
        match p {
            ParamBuf::Complex(v) => GradBuf::Complex(vec![C64::new(0.0, 0.0); v.len()]),
            ParamBuf::Real(v) => GradBuf::Real(vec![0.0; v.len()]),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            GradBuf::Complex(v) => v.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            GradBuf::Real(v) => v.iter().all(|x| x.is_finite()),
        }
    }

    /// Add `2c·w`, the cogradient of `c·‖w‖²`.
    pub fn add_ridge(&mut self, p: ParamBuf<'_>, c: f64) {
        if c == 0.0 {
            return;
        }
        match (self, p) {
            (GradBuf::Complex(g), ParamBuf::Complex(w)) => {
                g.iter_mut().zip(w).for_each(|(g, w)| *g += w * (2.0 * c))
            }
            (GradBuf::Real(g), ParamBuf::Real(w)) => g.iter_mut().zip(w).for_each(|(g, w)| *g += 2.0 * c * w),
            _ => unreachable!("gradient/parameter kind mismatch"),
        }
    }
}

/// Supervision for one batch.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Labels(&'a [usize]),
    /// Explicit complex output targets (squared loss only), `batch × classes`.
    Values(&'a [C64]),
}

impl Targets<'_> {
    pub fn batch(&self, classes: usize) -> usize {
        match self {
            Targets::Labels(l) => l.len(),
            Targets::Values(v) => v.len() / classes.max(1),
        }
    }
}

/// A trainable classifier over complex feature vectors.
pub trait Classifier: Clone {
    fn input_dim(&self) -> usize;

    fn classes(&self) -> usize;

    /// Names of the parameter groups, in [`Classifier::params`] order.
    fn param_names(&self) -> Vec<String>;

    fn params(&self) -> Vec<ParamBuf<'_>>;

    fn params_mut(&mut self) -> Vec<ParamBufMut<'_>>;

    /// Class probabilities for a `batch × input_dim` buffer, row-major `batch × classes`.
    fn predict_proba(&self, x: &[C64]) -> Result<Vec<f64>>;

    /// Objective value and cogradients for every parameter group.
    fn loss_and_grad(&self, x: &[C64], targets: Targets<'_>, obj: &TrainObjective) -> Result<(f64, Vec<GradBuf>)>;

    /// Objective value only.
    fn objective(&self, x: &[C64], targets: Targets<'_>, obj: &TrainObjective) -> Result<f64>;

    /// Predicted class per row; ties go to the lowest class index.
    fn predict(&self, x: &[C64]) -> Result<Vec<usize>> {
        let k = self.classes();
        Ok(self.predict_proba(x)?.chunks_exact(k).map(argmax).collect())
    }

    /// `c·‖w‖²` over every parameter group.
    fn regularizer(&self, c: f64) -> f64 {
        c * self.params().iter().map(|p| p.norm_sq()).sum::<f64>()
    }

    fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Numeric error listing each parameter group's largest magnitude.
pub(crate) fn non_finite_error<M: Classifier>(model: &M, what: &str, value: f64) -> Error {
    let diag: Vec<String> = model
        .param_names()
        .into_iter()
        .zip(model.params())
        .map(|(n, p)| format!("{n}: max|w| = {:e}", p.max_abs()))
        .collect();
    Error::Numeric(format!("{what} is {value}; {}", diag.join(", ")))
}
