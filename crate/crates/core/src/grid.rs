//! Uniform periodic grid over M lattice cells with FFT-based calculus.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct PeriodicGrid {
    pub a: f64,
    pub cells: usize,
    pub per_cell: usize,
    /// Grid spacing `a / per_cell`.
    pub h: f64,
    pub x_start: f64,
    pub x0: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("a", &self.a)
            .field("cells", &self.cells)
            .field("per_cell", &self.per_cell)
            .field("x_start", &self.x_start)
            .finish()
    }
}

impl PeriodicGrid {
    /// Cells are indexed `j_min..=j_max` with `j_min = -floor(M/2)`; cell `j` is
    /// `[x0 + (j - 1/2) a, x0 + (j + 1/2) a)` and its midpoint `x0 + j a` is a grid point.
    pub fn new(a: f64, x0: f64, cells: usize, per_cell: usize) -> Result<Self> {
        if cells < 3 {
            return Err(Error::InvalidConfig(format!("need at least 3 cells, got {cells}")));
        }
        if per_cell < 8 || per_cell % 2 != 0 {
            return Err(Error::InvalidConfig(format!("points per cell must be even and >= 8, got {per_cell}")));
        }
        let n = cells * per_cell;
        let mut planner = FftPlanner::new();
        let j_min = -((cells / 2) as f64);
        Ok(Self {
            a,
            cells,
            per_cell,
            h: a / per_cell as f64,
            x_start: x0 + (j_min - 0.5) * a,
            x0,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.cells * self.per_cell
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.a * self.cells as f64
    }

    pub fn j_min(&self) -> i64 {
        -((self.cells / 2) as i64)
    }

    pub fn j_max(&self) -> i64 {
        self.j_min() + self.cells as i64 - 1
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_start + i as f64 * self.h
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// Index of the well centre `x0 + j a`.
    pub fn centre_index(&self, j: i64) -> usize {
        ((j - self.j_min()) as usize) * self.per_cell + self.per_cell / 2
    }

    pub fn cell_range(&self, j: i64) -> std::ops::Range<usize> {
        let s = ((j - self.j_min()) as usize) * self.per_cell;
        s..s + self.per_cell
    }

    /// Signed mode number of FFT slot `i`.
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.len() as i64;
        let i = i as i64;
        if i < n / 2 { i } else { i - n }
    }

    pub fn slot(&self, mode: i64) -> usize {
        mode.rem_euclid(self.len() as i64) as usize
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.mode(i) as f64 / self.length()
    }

    /// Coefficients `c_n` with `f(x_i) = sum_n c_n exp(i k_n (x_i - x_start))`.
    pub fn forward_c(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut buf = f.to_vec();
        self.forward.process(&mut buf);
        let s = 1.0 / self.len() as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_c(&buf)
    }

    pub fn inverse(&self, c: &[Complex64]) -> Vec<Complex64> {
        let mut buf = c.to_vec();
        self.inverse.process(&mut buf);
        buf
    }

    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.h * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.dot(f, f).sqrt()
    }

    /// `(||f||^2 + ||f'||^2)^(1/2)` with the derivative taken spectrally.
    pub fn h1_norm(&self, f: &[f64]) -> f64 {
        let c = self.forward(f);
        let s: f64 = c
            .iter()
            .enumerate()
            .map(|(i, v)| (1.0 + self.wavenumber(i).powi(2)) * v.norm_sqr())
            .sum();
        (self.length() * s).sqrt()
    }

    /// `g(x) = f(x - cells * a)`, periodic.
    pub fn translate(&self, f: &[f64], cells: i64) -> Vec<f64> {
        let n = self.len() as i64;
        let shift = (cells * self.per_cell as i64).rem_euclid(n) as usize;
        let mut g = vec![0.0; f.len()];
        for (i, v) in f.iter().enumerate() {
            g[(i + shift) % f.len()] = *v;
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_puts_well_centres_on_grid() {
        let g = PeriodicGrid::new(1.0, 0.0, 32, 64).unwrap();
        assert_eq!(g.j_min(), -16);
        assert_eq!(g.j_max(), 15);
        for j in [-16, -3, 0, 7, 15] {
            assert!((g.x(g.centre_index(j)) - j as f64).abs() < 1e-12);
        }
        let g = PeriodicGrid::new(2.0, 0.3, 5, 16).unwrap();
        assert!((g.x(g.centre_index(0)) - 0.3).abs() < 1e-12);
        assert!((g.x_start - (0.3 - 5.0)).abs() < 1e-12);
    }

    #[test]
    fn h1_norm_of_a_sine() {
        let g = PeriodicGrid::new(1.0, 0.0, 4, 32).unwrap();
        let k = 2.0 * PI * 3.0 / g.length();
        let f: Vec<f64> = g.xs().iter().map(|x| (k * x).sin()).collect();
        let expected = (0.5 * g.length() * (1.0 + k * k)).sqrt();
        assert!((g.h1_norm(&f) - expected).abs() < 1e-12);
        assert!((g.norm(&f) - (0.5 * g.length()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn translate_wraps() {
        let g = PeriodicGrid::new(1.0, 0.0, 3, 8).unwrap();
        let f: Vec<f64> = (0..24).map(|i| i as f64).collect();
        let t = g.translate(&f, 1);
        assert_eq!(t[8], 0.0);
        assert_eq!(t[0], 16.0);
        assert_eq!(g.translate(&t, -1), f);
    }
}
