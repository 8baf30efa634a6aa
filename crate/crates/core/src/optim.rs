//! Component-wise Adagrad, the mini-batch training loop with early stopping
//! on validation accuracy, evaluation and the regularization grid search.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Split;
use crate::error::{Error, Result};
use crate::model::{Classifier, GradBuf, ParamBufMut, Targets, TrainObjective};

/// Per-component squared-gradient accumulators. Complex parameters are
/// treated as `(Re, Im)` pairs stored consecutively.
#[derive(Debug, Clone, PartialEq)]
pub struct AdagradState {
    pub lr: f64,
    pub eps: f64,
    acc: Vec<Vec<f64>>,
}

impl AdagradState {
    pub fn new<M: Classifier>(model: &M, lr: f64, eps: f64) -> Result<Self> {
        if !(lr > 0.0) || !(eps > 0.0) {
            return Err(Error::Parameter(format!("Adagrad needs lr > 0 and eps > 0, got {lr}, {eps}")));
        }
        let acc = model
            .params()
            .iter()
            .map(|p| match p {
                crate::model::ParamBuf::Complex(v) => vec![0.0; 2 * v.len()],
                crate::model::ParamBuf::Real(v) => vec![0.0; v.len()],
            })
            .collect();
        Ok(Self { lr, eps, acc })
    }

    pub fn accumulators(&self) -> &[Vec<f64>] {
        &self.acc
    }
}

/// One Adagrad update `w_c ← w_c − η g_c / (√acc_c + ε)` after `acc_c += g_c²`.
/// Nothing is modified when any gradient entry is non-finite.
pub fn adagrad_step<M: Classifier>(model: &mut M, grads: &[GradBuf], state: &mut AdagradState) -> Result<()> {
    if grads.len() != state.acc.len() {
        return Err(Error::Dimension(format!("{} gradient groups for {} parameter groups", grads.len(), state.acc.len())));
    }
    for (i, g) in grads.iter().enumerate() {
        let n = match g {
            GradBuf::Complex(v) => 2 * v.len(),
            GradBuf::Real(v) => v.len(),
        };
        if n != state.acc[i].len() {
            return Err(Error::Dimension(format!("gradient group {i} has {n} components, expected {}", state.acc[i].len())));
        }
        if !g.is_finite() {
            return Err(Error::Numeric(format!("non-finite gradient in group {}", model.param_names()[i])));
        }
    }
    let (lr, eps) = (state.lr, state.eps);
    let update = |w: &mut f64, g: f64, acc: &mut f64| {
        *acc += g * g;
        *w -= lr * g / (acc.sqrt() + eps);
    };
    for ((p, g), acc) in model.params_mut().into_iter().zip(grads).zip(&mut state.acc) {
        match (p, g) {
            (ParamBufMut::Complex(w), GradBuf::Complex(g)) => {
                for ((w, g), a) in w.iter_mut().zip(g).zip(acc.chunks_exact_mut(2)) {
                    update(&mut w.re, g.re, &mut a[0]);
                    update(&mut w.im, g.im, &mut a[1]);
                }
            }
            (ParamBufMut::Real(w), GradBuf::Real(g)) => {
                for ((w, g), a) in w.iter_mut().zip(g).zip(acc.iter_mut()) {
                    update(w, *g, a);
                }
            }
            _ => return Err(Error::Dimension("gradient kind does not match parameter kind".into())),
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Iterations without a strict validation improvement before stopping.
    pub patience: usize,
    pub eval_every: usize,
    pub max_iterations: usize,
    pub c_grid: Vec<f64>,
    pub lr: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 40,
            patience: 1000,
            eval_every: 50,
            max_iterations: 100_000,
            c_grid: vec![0.0, 1e-5, 1e-4, 1e-3],
            lr: 0.01,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, train_size: usize) -> Result<()> {
        if self.batch_size == 0 || self.eval_every == 0 || self.max_iterations == 0 {
            return Err(Error::Parameter("batch size, eval interval and iteration cap must be positive".into()));
        }
        if self.batch_size > train_size {
            return Err(Error::Parameter(format!(
                "batch size {} exceeds the training set size {train_size}",
                self.batch_size
            )));
        }
        if self.c_grid.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::Parameter("regularization grid values must be finite and ≥ 0".into()));
        }
        if !(self.lr > 0.0) || !(self.eps > 0.0) {
            return Err(Error::Parameter("learning rate and epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// One evaluation point of a training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Mean mini-batch objective over the iterations since the previous record.
    pub train_loss: f64,
    /// The same mean without the regularization term.
    pub data_loss: f64,
    pub val_accuracy: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    /// Validation accuracy of the initial parameters.
    pub initial_val_accuracy: f64,
    /// Iteration of the returned checkpoint (0 = the initial parameters).
    pub best_iteration: usize,
    pub best_val_accuracy: f64,
    pub iterations_run: usize,
}

/// Row of the deterministic trace CSV.
#[derive(Serialize, Deserialize)]
struct LossRow {
    iteration: usize,
    train_loss: f64,
    data_loss: f64,
    val_accuracy: f64,
}

impl TrainTrace {
    /// Records with the wall-clock column dropped, for reproducibility checks.
    pub fn deterministic_part(&self) -> Vec<(usize, f64, f64, f64)> {
        self.records.iter().map(|r| (r.iteration, r.train_loss, r.data_loss, r.val_accuracy)).collect()
    }

    /// CSV with columns `iteration, train_loss, data_loss, val_accuracy` and, when
    /// `with_timing`, `elapsed_seconds`.
    pub fn to_csv(&self, with_timing: bool) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            let res = if with_timing {
                w.serialize(r)
            } else {
                w.serialize(LossRow {
                    iteration: r.iteration,
                    train_loss: r.train_loss,
                    data_loss: r.data_loss,
                    val_accuracy: r.val_accuracy,
                })
            };
            res.expect("writing to memory cannot fail");
        }
        if self.records.is_empty() {
            let header: &[&str] = if with_timing {
                &["iteration", "train_loss", "data_loss", "val_accuracy", "elapsed_seconds"]
            } else {
                &["iteration", "train_loss", "data_loss", "val_accuracy"]
            };
            w.write_record(header).expect("writing to memory cannot fail");
        }
        w.into_inner().expect("flush to memory")
    }

    /// Sidecar CSV with `iteration, elapsed_seconds`.
    pub fn timing_csv(&self) -> Vec<u8> {
        let mut out = b"iteration,elapsed_seconds\n".to_vec();
        for r in &self.records {
            writeln!(out, "{},{}", r.iteration, r.elapsed_seconds).expect("in-memory write");
        }
        out
    }

    pub fn write_csv(&self, path: &Path, with_timing: bool) -> Result<()> {
        std::fs::write(path, self.to_csv(with_timing)).map_err(|e| Error::io(path, e))
    }

    /// Mean data loss over records whose iteration lies in `[lo, hi]`.
    pub fn mean_loss_between(&self, lo: usize, hi: usize) -> Option<f64> {
        let v: Vec<f64> =
            self.records.iter().filter(|r| r.iteration >= lo && r.iteration <= hi).map(|r| r.data_loss).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Training aborted by an error; the trace holds everything recorded before it.
#[derive(Debug)]
pub struct TrainAbort {
    pub error: Error,
    pub trace: TrainTrace,
}

impl fmt::Display for TrainAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "training aborted after {} iterations: {}", self.trace.iterations_run, self.error)
    }
}

impl std::error::Error for TrainAbort {}

impl From<TrainAbort> for Error {
    fn from(a: TrainAbort) -> Self {
        a.error
    }
}

/// Rows evaluated per forward pass in [`evaluate`].
const EVAL_CHUNK: usize = 500;

/// Fraction of samples whose most probable class equals the label.
pub fn evaluate<M: Classifier>(model: &M, split: &Split) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::Parameter("cannot evaluate on an empty split".into()));
    }
    if split.dim != model.input_dim() {
        return Err(Error::Dimension(format!("split has {} features, model expects {}", split.dim, model.input_dim())));
    }
    let mut correct = 0usize;
    for (x, y) in split.features.chunks(EVAL_CHUNK * split.dim).zip(split.labels.chunks(EVAL_CHUNK)) {
        correct += model.predict(x)?.iter().zip(y).filter(|(p, y)| p == y).count();
    }
    Ok(correct as f64 / split.len() as f64)
}

/// Mini-batch Adagrad with early stopping. Returns the parameters with the
/// best validation accuracy seen (the initial ones if nothing improved).
pub fn train<M: Classifier>(
    model: M,
    train_split: &Split,
    val_split: &Split,
    cfg: &TrainConfig,
    obj: &TrainObjective,
) -> std::result::Result<(M, TrainTrace), TrainAbort> {
    train_with_metric(model, train_split, cfg, obj, |m: &M| evaluate(m, val_split))
}

/// [`train`] with an arbitrary validation metric (higher is better).
pub fn train_with_metric<M, F>(
    mut model: M,
    train_split: &Split,
    cfg: &TrainConfig,
    obj: &TrainObjective,
    mut metric: F,
) -> std::result::Result<(M, TrainTrace), TrainAbort>
where
    M: Classifier,
    F: FnMut(&M) -> Result<f64>,
{
    let mut trace = TrainTrace::default();
    let abort = |error: Error, trace: &TrainTrace| TrainAbort { error, trace: trace.clone() };
    let setup = (|| {
        cfg.validate(train_split.len())?;
        obj.validate()?;
        if train_split.dim != model.input_dim() {
            return Err(Error::Dimension(format!(
                "training split has {} features, model expects {}",
                train_split.dim,
                model.input_dim()
            )));
        }
        AdagradState::new(&model, cfg.lr, cfg.eps)
    })();
    let mut state = setup.map_err(|e| abort(e, &trace))?;

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial = metric(&model).map_err(|e| abort(e, &trace))?;
    trace.initial_val_accuracy = initial;
    trace.best_val_accuracy = initial;
    let mut best = model.clone();
    let (mut window_loss, mut window_data, mut window_len) = (0.0, 0.0, 0usize);
    let dim = train_split.dim;
    let mut xb = Vec::with_capacity(cfg.batch_size * dim);
    let mut yb = Vec::with_capacity(cfg.batch_size);

    for it in 1..=cfg.max_iterations {
        xb.clear();
        yb.clear();
        for i in index::sample(&mut rng, train_split.len(), cfg.batch_size) {
            xb.extend_from_slice(train_split.row(i));
            yb.push(train_split.labels[i]);
        }
        let penalty = model.regularizer(obj.c);
        let step = model
            .loss_and_grad(&xb, Targets::Labels(&yb), obj)
            .and_then(|(loss, grads)| adagrad_step(&mut model, &grads, &mut state).map(|_| loss));
        let loss = step.map_err(|e| abort(e, &trace))?;
        trace.iterations_run = it;
        window_loss += loss;
        window_data += loss - penalty;
        window_len += 1;

        if it % cfg.eval_every == 0 || it == cfg.max_iterations {
            let acc = metric(&model).map_err(|e| abort(e, &trace))?;
            trace.records.push(TraceRecord {
                iteration: it,
                train_loss: window_loss / window_len as f64,
                data_loss: window_data / window_len as f64,
                val_accuracy: acc,
                elapsed_seconds: start.elapsed().as_secs_f64(),
            });
            window_loss = 0.0;
            window_data = 0.0;
            window_len = 0;
            if acc > trace.best_val_accuracy {
                trace.best_val_accuracy = acc;
                trace.best_iteration = it;
                best = model.clone();
            }
            if it - trace.best_iteration >= cfg.patience {
                break;
            }
        }
    }
    Ok((best, trace))
}

/// Outcome of [`grid_search_c`].
#[derive(Debug, Clone)]
pub struct GridSearch<M> {
    pub best_c: f64,
    /// `(C, best validation accuracy)` per grid point, in grid order.
    pub accuracies: Vec<(f64, f64)>,
    /// Best-validation checkpoint trained with `best_c`.
    pub model: M,
    pub trace: TrainTrace,
}

/// Train one model per grid value of `C` (same seed each time) and keep the
/// one with the highest validation accuracy; ties go to the smaller `C`.
pub fn grid_search_c<M, F>(
    mut factory: F,
    train_split: &Split,
    val_split: &Split,
    cfg: &TrainConfig,
    loss: crate::model::Loss,
) -> Result<GridSearch<M>>
where
    M: Classifier,
    F: FnMut() -> Result<M>,
{
    if cfg.c_grid.is_empty() {
        return Err(Error::Parameter("regularization grid is empty".into()));
    }
    let mut best: Option<(f64, f64, M, TrainTrace)> = None;
    let mut accuracies = Vec::with_capacity(cfg.c_grid.len());
    for &c in &cfg.c_grid {
        let obj = TrainObjective { loss, c };
        let (model, trace) = train(factory()?, train_split, val_split, cfg, &obj)?;
        let acc = trace.best_val_accuracy;
        accuracies.push((c, acc));
        let better = match &best {
            None => true,
            Some((bc, bacc, _, _)) => acc > *bacc || (acc == *bacc && c < *bc),
        };
        if better {
            best = Some((c, acc, model, trace));
        }
    }
    let (best_c, _, model, trace) = best.expect("grid is nonempty");
    Ok(GridSearch { best_c, accuracies, model, trace })
}
