//! Partial Fourier transforms between a K-point grid per axis and the
//! symmetric frequency band -N..N per axis. Grid sizes below the band
//! length fold indices modulo K, so anisotropic models (coarse angle
//! grids) go through the same code path.

use crate::spectral::Bandwidth;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::sync::Arc;

/// Lines along a strided axis are processed in blocks of this many so
/// gathers and scatters touch whole cache lines.
const LINE_BLOCK: usize = 16;

pub struct PartialFourier {
    planner: RefCell<FftPlanner<f64>>,
}

impl Default for PartialFourier {
    fn default() -> Self {
        Self::new()
    }
}

impl PartialFourier {
    pub fn new() -> Self {
        Self {
            planner: RefCell::new(FftPlanner::new()),
        }
    }

    fn plan(&self, len: usize, inverse: bool) -> Arc<dyn rustfft::Fft<f64>> {
        let mut planner = self.planner.borrow_mut();
        if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        }
    }

    /// out[p] = sum_n s[n] e^{+i 2 pi <p, n/K>}: synthesize band-limited
    /// frequency content from grid coefficients (one K-point inverse DFT
    /// per axis, gathered at p mod K).
    pub fn grid_to_band(&self, s: &[Complex64], k: &[usize], band: &Bandwidth) -> Vec<Complex64> {
        debug_assert_eq!(s.len(), k.iter().product::<usize>());
        let d = band.dim();
        let mut dims: Vec<usize> = k.to_vec();
        let mut data = s.to_vec();
        for axis in 0..d {
            let len_in = dims[axis];
            let len_out = band.len(axis);
            let fft = self.plan(len_in, true);
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            let half = band.half(axis) as i64;
            let gather: Vec<usize> = (0..len_out)
                .map(|j| (j as i64 - half).rem_euclid(len_in as i64) as usize)
                .collect();
            let mut work = vec![Complex64::default(); len_in];
            data = transform_axis(&data, &dims, axis, len_out, |line, out| {
                work.copy_from_slice(line);
                fft.process_with_scratch(&mut work, &mut scratch);
                for (o, &g) in out.iter_mut().zip(&gather) {
                    *o = work[g];
                }
            });
            dims[axis] = len_out;
        }
        data
    }

    /// Adjoint of [`Self::grid_to_band`]:
    /// out[n] = sum_p z[p] e^{-i 2 pi <p, n/K>}.
    pub fn band_to_grid_adjoint(
        &self,
        z: &[Complex64],
        band: &Bandwidth,
        k: &[usize],
    ) -> Vec<Complex64> {
        self.band_to_grid(z, band, k, false)
    }

    /// Evaluation map: out[n] = sum_p z[p] e^{+i 2 pi <p, n/K>}, i.e. the
    /// trigonometric polynomial with coefficients z sampled on the grid.
    pub fn band_to_grid_eval(
        &self,
        z: &[Complex64],
        band: &Bandwidth,
        k: &[usize],
    ) -> Vec<Complex64> {
        self.band_to_grid(z, band, k, true)
    }

    fn band_to_grid(
        &self,
        z: &[Complex64],
        band: &Bandwidth,
        k: &[usize],
        inverse: bool,
    ) -> Vec<Complex64> {
        debug_assert_eq!(z.len(), band.ambient());
        let d = band.dim();
        let mut dims: Vec<usize> = band.lens();
        let mut data = z.to_vec();
        for axis in 0..d {
            let len_out = k[axis];
            let fft = self.plan(len_out, inverse);
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            let half = band.half(axis) as i64;
            let len_in = dims[axis];
            let scatter: Vec<usize> = (0..len_in)
                .map(|j| (j as i64 - half).rem_euclid(len_out as i64) as usize)
                .collect();
            let mut work = vec![Complex64::default(); len_out];
            data = transform_axis(&data, &dims, axis, len_out, |line, out| {
                work.fill(Complex64::default());
                for (&v, &sc) in line.iter().zip(&scatter) {
                    work[sc] += v;
                }
                fft.process_with_scratch(&mut work, &mut scratch);
                out.copy_from_slice(&work);
            });
            dims[axis] = len_out;
        }
        data
    }
}

/// Apply a line transform along one axis of a row-major array, producing
/// an array whose extent along that axis is `len_out`. Lines are gathered
/// in blocks of adjacent inner indices so strided axes stay cache
/// friendly.
fn transform_axis<F>(
    data: &[Complex64],
    dims: &[usize],
    axis: usize,
    len_out: usize,
    mut f: F,
) -> Vec<Complex64>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let len_in = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut out = vec![Complex64::default(); outer * len_out * inner];
    let block = LINE_BLOCK.min(inner.max(1));
    let mut gathered = vec![Complex64::default(); block * len_in];
    let mut produced = vec![Complex64::default(); block * len_out];
    for o in 0..outer {
        let mut i = 0;
        while i < inner {
            let width = block.min(inner - i);
            let base_in = o * len_in * inner + i;
            // gather `width` adjacent lines; adjacent inner indices are
            // contiguous in memory
            for t in 0..len_in {
                let src = &data[base_in + t * inner..base_in + t * inner + width];
                for (b, &v) in src.iter().enumerate() {
                    gathered[b * len_in + t] = v;
                }
            }
            for b in 0..width {
                let (line_in, line_out) = (
                    &gathered[b * len_in..(b + 1) * len_in],
                    &mut produced[b * len_out..(b + 1) * len_out],
                );
                f(line_in, line_out);
            }
            let base_out = o * len_out * inner + i;
            for t in 0..len_out {
                let dst = &mut out[base_out + t * inner..base_out + t * inner + width];
                for (b, v) in dst.iter_mut().enumerate() {
                    *v = produced[b * len_out + t];
                }
            }
            i += width;
        }
    }
    out
}
