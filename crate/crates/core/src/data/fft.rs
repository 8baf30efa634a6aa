//! Unnormalized forward 2-D DFT of real images.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::cnum::{C64, ZERO};
use crate::error::{Error, Result};

/// Reusable row/column transforms for one image shape.
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fft: Arc<dyn Fft<f64>>,
    col_fft: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Parameter(format!("image shape {rows}×{cols} must be positive")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self { rows, cols, row_fft: planner.plan_fft_forward(cols), col_fft: planner.plan_fft_forward(rows) })
    }

    /// Transform a row-major `rows × cols` image.
    pub fn transform<T: Copy + Into<f64>>(&self, image: &[T]) -> Result<Vec<C64>> {
        if image.len() != self.rows * self.cols {
            return Err(Error::Dimension(format!("image has {} pixels, expected {}×{}", image.len(), self.rows, self.cols)));
        }
        let mut data: Vec<C64> = image.iter().map(|&p| C64::new(p.into(), 0.0)).collect();
        self.row_fft.process(&mut data);
        let mut col = vec![ZERO; self.rows];
        for c in 0..self.cols {
            for r in 0..self.rows {
                col[r] = data[r * self.cols + c];
            }
            self.col_fft.process(&mut col);
            for r in 0..self.rows {
                data[r * self.cols + c] = col[r];
            }
        }
        Ok(data)
    }
}

/// `F[u,v] = Σ_{r,c} x[r,c] e^{−2πi(ur/H + vc/W)}` for a row-major `h × w` image.
pub fn fft2(image: &[f64], h: usize, w: usize) -> Result<Vec<C64>> {
    Fft2::new(h, w)?.transform(image)
}
