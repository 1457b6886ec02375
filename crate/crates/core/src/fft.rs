//! Row/column 2D FFT on row-major buffers, built on rustfft.
//!
//! The forward transform leaves the spectrum transposed (x-frequency major)
//! and the inverse consumes that layout, which saves one transpose per
//! propagation. Transfer functions are laid out to match.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par::{self, Exec};

const TRANSPOSE_BLOCK: usize = 32;

pub struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Forward transform. `data` holds `ny` rows of `nx`; the result is
    /// returned as `nx` rows of `ny` (element `kx * ny + ky`). In 1D mode the
    /// layouts coincide.
    pub fn forward(&self, exec: Exec, mut data: Vec<Complex64>) -> Vec<Complex64> {
        assert_eq!(data.len(), self.nx * self.ny);
        rows(exec, &self.fwd_x, &mut data, self.nx);
        if self.ny == 1 {
            return data;
        }
        let mut t = vec![Complex64::default(); data.len()];
        transpose(exec, &data, &mut t, self.ny, self.nx);
        drop(data);
        rows(exec, &self.fwd_y, &mut t, self.ny);
        t
    }

    /// Inverse of [`Fft2::forward`], normalized by `1 / (nx * ny)`.
    pub fn inverse(&self, exec: Exec, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        assert_eq!(spectrum.len(), self.nx * self.ny);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        let mut data = if self.ny == 1 {
            spectrum
        } else {
            rows(exec, &self.inv_y, &mut spectrum, self.ny);
            let mut t = vec![Complex64::default(); spectrum.len()];
            transpose(exec, &spectrum, &mut t, self.nx, self.ny);
            t
        };
        let inv_x = &self.inv_x;
        par::for_each_row_with(
            exec,
            &mut data,
            self.nx,
            || vec![Complex64::default(); inv_x.get_inplace_scratch_len()],
            |scratch, _, row| {
                inv_x.process_with_scratch(row, scratch);
                row.iter_mut().for_each(|v| *v *= scale);
            },
        );
        data
    }
}

fn rows(exec: Exec, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64], len: usize) {
    par::for_each_row_with(
        exec,
        data,
        len,
        || vec![Complex64::default(); fft.get_inplace_scratch_len()],
        |scratch, _, row| fft.process_with_scratch(row, scratch),
    );
}

/// `src` is `rows x cols` row-major; `dst` becomes `cols x rows`.
pub(crate) fn transpose<T: Copy + Send + Sync>(
    exec: Exec,
    src: &[T],
    dst: &mut [T],
    rows: usize,
    cols: usize,
) {
    assert_eq!(src.len(), rows * cols);
    assert_eq!(dst.len(), rows * cols);
    // Each task owns a block of destination rows (source columns).
    par::for_each_row(exec, dst, TRANSPOSE_BLOCK * rows, |b, block| {
        let c0 = b * TRANSPOSE_BLOCK;
        let width = block.len() / rows;
        for r in 0..rows {
            let src_row = &src[r * cols + c0..r * cols + c0 + width];
            for (k, v) in src_row.iter().enumerate() {
                block[k * rows + r] = *v;
            }
        }
    });
}
