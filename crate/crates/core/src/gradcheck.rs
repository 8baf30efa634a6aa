//! End-to-end finite-difference check of the backward pass.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activations::ActivationSpec;
use crate::cnum::{derivative_agreement, C64};
use crate::error::{Error, Result};
use crate::model::{Classifier, GradBuf, ParamBufMut, Targets, TrainObjective};
use crate::network::{AlphaInit, ComplexNetwork, NetworkConfig};

/// Settings for one check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub rel_tol: f64,
    /// Differences below this are accepted regardless of the relative error
    /// (central-difference round-off floor).
    pub abs_tol: f64,
    pub eps: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-5, abs_tol: 1e-8, eps: 1e-5 }
    }
}

/// Worst agreement within one parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCheck {
    pub name: String,
    /// Real scalar directions checked (two per complex entry).
    pub directions: usize,
    pub worst_rel: f64,
    pub worst_abs: f64,
    pub failures: usize,
}

impl GroupCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub label: String,
    pub config: GradCheckConfig,
    pub groups: Vec<GroupCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(GroupCheck::passed)
    }

    pub fn worst_rel(&self) -> f64 {
        self.groups.iter().map(|g| g.worst_rel).fold(0.0, f64::max)
    }

    /// `Ok` when every group passes, otherwise a gradient-check error naming the offenders.
    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            return Ok(self);
        }
        let bad: Vec<String> = self
            .groups
            .iter()
            .filter(|g| !g.passed())
            .map(|g| format!("{} ({} of {} directions, worst rel {:.3e})", g.name, g.failures, g.directions, g.worst_rel))
            .collect();
        Err(Error::GradCheck(format!("{}: {}", self.label, bad.join(", "))))
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gradient check: {} (rel tol {:e})", self.label, self.config.rel_tol)?;
        for g in &self.groups {
            writeln!(
                f,
                "  {:<18} {:>6} dirs  worst rel {:.3e}  worst abs {:.3e}  {}",
                g.name,
                g.directions,
                g.worst_rel,
                g.worst_abs,
                if g.passed() { "ok" } else { "FAIL" }
            )?;
        }
        write!(f, "  {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Overwrite one real component, returning its previous value.
fn replace(p: ParamBufMut<'_>, j: usize, imag: bool, value: f64) -> f64 {
    let slot = match p {
        ParamBufMut::Complex(v) if imag => &mut v[j].im,
        ParamBufMut::Complex(v) => &mut v[j].re,
        ParamBufMut::Real(v) => &mut v[j],
    };
    std::mem::replace(slot, value)
}

/// Compare `loss_and_grad` with central differences of `objective` in every
/// real direction of every parameter group.
pub fn check_model<M: Classifier>(
    model: &M,
    x: &[C64],
    targets: Targets<'_>,
    obj: &TrainObjective,
    cfg: GradCheckConfig,
    label: &str,
) -> Result<GradCheckReport> {
    let (_, grads) = model.loss_and_grad(x, targets, obj)?;
    let names = model.param_names();
    let mut probe = model.clone();
    let mut groups = Vec::with_capacity(grads.len());
    for (gi, g) in grads.iter().enumerate() {
        let dirs: Vec<(usize, bool, f64)> = match g {
            GradBuf::Complex(v) => {
                v.iter().enumerate().flat_map(|(j, z)| [(j, false, z.re), (j, true, z.im)]).collect()
            }
            GradBuf::Real(v) => v.iter().enumerate().map(|(j, &d)| (j, false, d)).collect(),
        };
        let mut check = GroupCheck { name: names[gi].clone(), directions: dirs.len(), worst_rel: 0.0, worst_abs: 0.0, failures: 0 };
        for (j, imag, analytic) in dirs {
            let mut eval = |d: f64| -> Result<f64> {
                let orig = replace(probe.params_mut().swap_remove(gi), j, imag, f64::NAN);
                replace(probe.params_mut().swap_remove(gi), j, imag, orig + d);
                let v = probe.objective(x, targets, obj);
                replace(probe.params_mut().swap_remove(gi), j, imag, orig);
                v
            };
            let numeric = (eval(cfg.eps)? - eval(-cfg.eps)?) / (2.0 * cfg.eps);
            let (rel, ok) = derivative_agreement(analytic, numeric, cfg.rel_tol, cfg.abs_tol);
            let abs = (analytic - numeric).abs();
            // Relative error is only meaningful above the round-off floor.
            if abs > cfg.abs_tol {
                check.worst_rel = check.worst_rel.max(rel);
            }
            check.worst_abs = check.worst_abs.max(abs);
            if !ok {
                check.failures += 1;
            }
        }
        groups.push(check);
    }
    Ok(GradCheckReport { label: label.to_string(), config: cfg, groups })
}

/// The tiny random network used by the gradient check: `F = 3`, widths
/// `[4, 4]`, two classes, random kernel coefficients and jittered bandwidths.
pub fn tiny_network(spec: &ActivationSpec, seed: u64) -> Result<ComplexNetwork> {
    let mut cfg = NetworkConfig::new(3, 2, spec.clone(), seed);
    cfg.hidden = vec![4, 4];
    cfg.alpha_init = AlphaInit::Random { std: 0.3 };
    let mut net = ComplexNetwork::new(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for p in net.params_mut() {
        match p {
            ParamBufMut::Real(v) => v.iter_mut().for_each(|x| *x += rng.gen_range(-0.3..0.3)),
            // nonzero biases so every path is exercised
            ParamBufMut::Complex(v) if v.len() <= 4 => {
                v.iter_mut().for_each(|z| *z += C64::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)))
            }
            ParamBufMut::Complex(_) => {}
        }
    }
    Ok(net)
}

/// Gradient check of one activation variant on [`tiny_network`] with a
/// random batch of four samples and a small regularizer.
pub fn gradcheck_variant(spec: &ActivationSpec, seed: u64, cfg: GradCheckConfig) -> Result<GradCheckReport> {
    let net = tiny_network(spec, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let x: Vec<C64> = (0..12).map(|_| C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5))).collect();
    let labels: Vec<usize> = (0..4).map(|_| rng.gen_range(0..2)).collect();
    let obj = TrainObjective::cross_entropy(1e-3);
    check_model(&net, &x, Targets::Labels(&labels), &obj, cfg, &format!("{spec} seed {seed}"))
}
