//! Complex arithmetic, dense complex tensors and the cogradient convention.
//!
//! Every gradient in this crate is a *cogradient*: for a real objective `J`
//! and a complex parameter `w`, the stored value is
//! `∂J/∂Re(w) + i·∂J/∂Im(w)`, which equals `2·∂J/∂w*` in CR-calculus.
//! Plain descent `w ← w − η·g` is then correct without any conjugation.
//!
//! Chain rule in this convention, for `y = f(z)` with real partials
//! `f_x = ∂f/∂Re(z)` and `f_y = ∂f/∂Im(z)`:
//!
//! ```text
//! g_z = Re(conj(g_y)·f_x) + i·Re(conj(g_y)·f_y)
//! ```
//!
//! For holomorphic maps this reduces to `g_z = g_y·conj(f'(z))`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Double-precision complex scalar.
pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Returns an error unless both components are finite.
pub fn check_finite(z: C64, what: &str) -> Result<C64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::Numeric(format!("{what} is not finite: {z}")))
    }
}

/// Pull a cogradient through a map with real partials `f_x`, `f_y`.
#[inline]
pub fn pull_back(upstream: C64, f_x: C64, f_y: C64) -> C64 {
    let gc = upstream.conj();
    C64::new((gc * f_x).re, (gc * f_y).re)
}

/// Dense row-major complex tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl ComplexTensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Dimension(format!(
                "shape {shape:?} has a zero dimension"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n = shape.iter().product();
        Self::new(shape, vec![ZERO; n])
    }

    /// One-dimensional tensor from a slice.
    pub fn vector(values: &[C64]) -> Result<Self> {
        Self::new(vec![values.len()], values.to_vec())
    }

    /// Two-dimensional tensor from row slices.
    pub fn matrix(rows: &[&[C64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(vec![rows.len(), cols], data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut t = Self::zeros(vec![n, n])?;
        for i in 0..n {
            t.data[i * n + i] = ONE;
        }
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    fn flat_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len() {
            return Err(Error::Index(format!(
                "index {index:?} has rank {}, tensor has rank {}",
                index.len(),
                self.shape.len()
            )));
        }
        let mut flat = 0;
        for (&i, &d) in index.iter().zip(&self.shape) {
            if i >= d {
                return Err(Error::Index(format!(
                    "index {index:?} out of bounds for shape {:?}",
                    self.shape
                )));
            }
            flat = flat * d + i;
        }
        Ok(flat)
    }

    pub fn get(&self, index: &[usize]) -> Result<C64> {
        self.flat_index(index).map(|i| self.data[i])
    }

    pub fn set(&mut self, index: &[usize], value: C64) -> Result<()> {
        let i = self.flat_index(index)?;
        self.data[i] = value;
        Ok(())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        for z in &self.data {
            check_finite(*z, what)?;
        }
        Ok(())
    }
}

/// Cogradient of a real objective with respect to a complex tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Cogradient(pub ComplexTensor);

impl Cogradient {
    pub fn tensor(&self) -> &ComplexTensor {
        &self.0
    }

    pub fn data(&self) -> &[C64] {
        self.0.data()
    }
}

/// Batched affine map `z[b, :] = W · x[b, :] + bias` over row-major buffers.
///
/// `w` is `n_out × n_in`, `x` is `batch × n_in`, `out` is `batch × n_out`.
pub(crate) fn affine_rows(
    w: &[C64],
    bias: &[C64],
    x: &[C64],
    n_in: usize,
    n_out: usize,
    out: &mut [C64],
) {
    debug_assert_eq!(w.len(), n_in * n_out);
    for (xrow, orow) in x.chunks_exact(n_in).zip(out.chunks_exact_mut(n_out)) {
        for ((wrow, o), b) in w.chunks_exact(n_in).zip(orow.iter_mut()).zip(bias) {
            let (mut re, mut im) = (0.0, 0.0);
            for (wk, xk) in wrow.iter().zip(xrow) {
                re += wk.re * xk.re - wk.im * xk.im;
                im += wk.re * xk.im + wk.im * xk.re;
            }
            *o = C64::new(re, im) + b;
        }
    }
}

/// Backward rule for [`affine_rows`]. Parameter cogradients are accumulated
/// into `gw`/`gb`; the input cogradient is written to `gx` when requested.
pub(crate) fn affine_rows_backward(
    w: &[C64],
    x: &[C64],
    gy: &[C64],
    n_in: usize,
    n_out: usize,
    gw: &mut [C64],
    gb: &mut [C64],
    mut gx: Option<&mut [C64]>,
) {
    if let Some(gx) = gx.as_deref_mut() {
        gx.fill(ZERO);
    }
    for (bi, (xrow, gyrow)) in x.chunks_exact(n_in).zip(gy.chunks_exact(n_out)).enumerate() {
        for (o, &g) in gyrow.iter().enumerate() {
            if g == ZERO {
                continue;
            }
            gb[o] += g;
            let gwrow = &mut gw[o * n_in..(o + 1) * n_in];
            for (gwk, xk) in gwrow.iter_mut().zip(xrow) {
                // g · conj(x)
                gwk.re += g.re * xk.re + g.im * xk.im;
                gwk.im += g.im * xk.re - g.re * xk.im;
            }
            if let Some(gx) = gx.as_deref_mut() {
                let gxrow = &mut gx[bi * n_in..(bi + 1) * n_in];
                let wrow = &w[o * n_in..(o + 1) * n_in];
                for (gxk, wk) in gxrow.iter_mut().zip(wrow) {
                    // g · conj(w)
                    gxk.re += g.re * wk.re + g.im * wk.im;
                    gxk.im += g.im * wk.re - g.re * wk.im;
                }
            }
        }
    }
}

/// Complex affine map `y = W·x + b` for a single input vector.
pub fn complex_affine(
    w: &ComplexTensor,
    x: &ComplexTensor,
    b: &ComplexTensor,
) -> Result<ComplexTensor> {
    let (n_out, n_in) = affine_dims(w, x, b)?;
    let mut out = vec![ZERO; n_out];
    affine_rows(w.data(), b.data(), x.data(), n_in, n_out, &mut out);
    ComplexTensor::new(vec![n_out], out)
}

/// Cogradients of a real objective with respect to `W`, `x` and `b`,
/// given the cogradient with respect to the output of [`complex_affine`].
pub fn backward_affine(
    cograd_y: &ComplexTensor,
    w: &ComplexTensor,
    x: &ComplexTensor,
) -> Result<(Cogradient, Cogradient, Cogradient)> {
    if w.shape().len() != 2 || x.shape().len() != 1 {
        return Err(Error::Dimension("expected matrix W and vector x".into()));
    }
    let (n_out, n_in) = (w.shape()[0], w.shape()[1]);
    if x.len() != n_in || cograd_y.shape() != [n_out] {
        return Err(Error::Dimension(format!(
            "cograd_y shape {:?} does not match W {:?} · x {:?}",
            cograd_y.shape(),
            w.shape(),
            x.shape()
        )));
    }
    let mut gw = vec![ZERO; n_out * n_in];
    let mut gb = vec![ZERO; n_out];
    let mut gx = vec![ZERO; n_in];
    affine_rows_backward(
        w.data(),
        x.data(),
        cograd_y.data(),
        n_in,
        n_out,
        &mut gw,
        &mut gb,
        Some(&mut gx),
    );
    Ok((
        Cogradient(ComplexTensor::new(vec![n_out, n_in], gw)?),
        Cogradient(ComplexTensor::new(vec![n_in], gx)?),
        Cogradient(ComplexTensor::new(vec![n_out], gb)?),
    ))
}

fn affine_dims(w: &ComplexTensor, x: &ComplexTensor, b: &ComplexTensor) -> Result<(usize, usize)> {
    if w.shape().len() != 2 {
        return Err(Error::Dimension(format!("W must be a matrix, got shape {:?}", w.shape())));
    }
    let (n_out, n_in) = (w.shape()[0], w.shape()[1]);
    if x.shape() != [n_in] || b.shape() != [n_out] {
        return Err(Error::Dimension(format!(
            "W {:?}, x {:?}, b {:?} do not conform",
            w.shape(),
            x.shape(),
            b.shape()
        )));
    }
    Ok((n_out, n_in))
}

/// `Σ |w_i|²`.
pub fn hermitian_norm_sq(w: &[C64]) -> f64 {
    w.iter().map(|z| z.norm_sqr()).sum()
}

/// Central-difference cogradient of `f` at `w`, perturbing the real and
/// imaginary part of every entry separately.
pub fn finite_diff_cogradient<F>(mut f: F, w: &ComplexTensor, eps: f64) -> Result<Cogradient>
where
    F: FnMut(&ComplexTensor) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("finite-difference step must be > 0, got {eps}")));
    }
    let mut probe = w.clone();
    let mut out = vec![ZERO; w.len()];
    let mut eval = |probe: &ComplexTensor| -> Result<f64> {
        let v = f(probe);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("objective returned {v} during finite differencing")))
        }
    };
    for i in 0..w.len() {
        let orig = w.data()[i];
        for (k, dir) in [ONE, I].into_iter().enumerate() {
            probe.data_mut()[i] = orig + dir * eps;
            let plus = eval(&probe)?;
            probe.data_mut()[i] = orig - dir * eps;
            let minus = eval(&probe)?;
            let d = (plus - minus) / (2.0 * eps);
            if k == 0 {
                out[i].re = d;
            } else {
                out[i].im = d;
            }
        }
        probe.data_mut()[i] = orig;
    }
    Ok(Cogradient(ComplexTensor::new(w.shape().to_vec(), out)?))
}

/// Relative error between an analytic and a numeric derivative component,
/// together with a flag saying whether it is within tolerance.
///
/// A pair passes when the relative error is at most `rel_tol`, or when the
/// absolute difference is at most `abs_tol` (true value near zero).
pub fn derivative_agreement(analytic: f64, numeric: f64, rel_tol: f64, abs_tol: f64) -> (f64, bool) {
    let diff = (analytic - numeric).abs();
    let scale = analytic.abs().max(numeric.abs());
    let rel = if scale > 0.0 { diff / scale } else { 0.0 };
    (rel, rel <= rel_tol || diff <= abs_tol)
}
