//! Floquet-Bloch band structure in a plane-wave basis.
//!
//! A Bloch function is stored through the coefficients of its periodic part,
//! `phi(x, kappa) = exp(i kappa (x - x_ref)) sum_m c_m exp(2 pi i m (x - x_ref) / a)`,
//! with `c = vector / sqrt(a)` so that the cell L2 norm is one.

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::potential::PotentialSpec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetConfig {
    pub hbar: f64,
    pub n_pw: usize,
    pub n_kappa: usize,
    pub n_bands_kept: usize,
}

impl FloquetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0) {
            return Err(Error::InvalidConfig(format!("hbar must be positive, got {}", self.hbar)));
        }
        if self.n_pw % 2 == 0 {
            return Err(Error::InvalidConfig(format!("n_pw must be odd, got {}", self.n_pw)));
        }
        if self.n_bands_kept == 0 || self.n_pw < 2 * self.n_bands_kept + 9 {
            return Err(Error::InvalidConfig(format!(
                "n_pw = {} too small for {} bands (need 2 n_bands + 9)",
                self.n_pw, self.n_bands_kept
            )));
        }
        if self.n_kappa < 2 || self.n_kappa % 2 != 0 {
            return Err(Error::InvalidConfig(format!("n_kappa must be even, got {}", self.n_kappa)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandData {
    pub a: f64,
    pub hbar: f64,
    /// Well centre of the potential.
    pub x0: f64,
    pub x_ref: f64,
    pub kappas: Vec<f64>,
    /// Plane-wave indices m per quasimomentum, aligned with `vectors`.
    pub modes: Vec<Vec<i64>>,
    /// `energies[n][i] = E_n(kappas[i])`.
    pub energies: Vec<Vec<f64>>,
    /// `vectors[n][i]`: unit-norm plane-wave amplitudes.
    pub vectors: Vec<Vec<Vec<Complex64>>>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandMetrics {
    pub width: f64,
    pub gap_above: f64,
}

/// Coefficients of the periodic potential sampled at `p` points of one cell.
fn potential_coefficients(spec: &PotentialSpec, x_ref: f64, p: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = (0..p)
        .map(|i| Complex64::new(spec.value(x_ref + spec.a * i as f64 / p as f64), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(p).process(&mut buf);
    buf.iter().map(|c| c / p as f64).collect()
}

struct BlockSolution {
    energies: Vec<f64>,
    vectors: Vec<Vec<Complex64>>,
}

fn solve_block(v_hat: &[Complex64], a: f64, hbar: f64, kappa: f64, modes: &[i64], keep: usize) -> Result<BlockSolution> {
    let n = modes.len();
    let p = v_hat.len() as i64;
    let mut g = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        let k = kappa + 2.0 * PI * modes[i] as f64 / a;
        g[(i, i)] = Complex64::new(hbar * hbar * k * k + v_hat[0].re, 0.0);
        for j in 0..i {
            let c = v_hat[(modes[i] - modes[j]).rem_euclid(p) as usize];
            g[(i, j)] = c;
            g[(j, i)] = c.conj();
        }
    }
    debug_assert!(g == g.adjoint());
    let g_ref = g.clone();
    let eig = g.try_symmetric_eigen(f64::EPSILON, 10_000).ok_or_else(|| Error::Eigen(format!("no convergence at kappa = {kappa}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let mut energies = Vec::with_capacity(keep);
    let mut vectors = Vec::with_capacity(keep);
    for &col in order.iter().take(keep) {
        let mut v: Vec<Complex64> = eig.eigenvectors.column(col).iter().copied().collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        // Deterministic phase: largest amplitude real and positive.
        let (imax, _) = v
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, c)| if c.norm() > acc.1 + 1e-12 { (i, c.norm()) } else { acc });
        let phase = v[imax].conj() / (v[imax].norm() * norm);
        v.iter_mut().for_each(|c| *c *= phase);
        // Rayleigh quotient recovers the eigenvalue to a small multiple of the
        // entries that actually carry weight, rather than of the matrix norm.
        let gv = &g_ref * nalgebra::DVector::from_column_slice(&v);
        let e: f64 = v.iter().zip(gv.iter()).map(|(x, y)| (x.conj() * y).re).sum();
        energies.push(e);
        vectors.push(v);
    }
    Ok(BlockSolution { energies, vectors })
}

fn assemble(
    spec: &PotentialSpec,
    hbar: f64,
    x_ref: f64,
    kappas: Vec<f64>,
    modes: Vec<Vec<i64>>,
    v_hat: &[Complex64],
    keep: usize,
) -> Result<BandData> {
    let a = spec.a;
    let blocks: Vec<BlockSolution> = kappas
        .par_iter()
        .zip(modes.par_iter())
        .map(|(&k, m)| solve_block(v_hat, a, hbar, k, m, keep))
        .collect::<Result<_>>()?;
    let nk = kappas.len();
    let mut energies = vec![vec![0.0; nk]; keep];
    let mut vectors = vec![Vec::with_capacity(nk); keep];
    for (i, blk) in blocks.into_iter().enumerate() {
        for (n, (e, v)) in blk.energies.into_iter().zip(blk.vectors).enumerate() {
            energies[n][i] = e;
            vectors[n].push(v);
        }
    }
    let alpha: Vec<f64> = energies.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let beta: Vec<f64> = energies.iter().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    Ok(BandData { a, hbar, x0: spec.x0, x_ref, kappas, modes, energies, vectors, alpha, beta, warnings: Vec::new() })
}

/// Bands on the symmetric plane-wave set `|m| <= (n_pw - 1)/2` and the zone grid
/// `kappa_i = b (i - n_kappa/2) / n_kappa`.
pub fn solve_bands(spec: &PotentialSpec, cfg: &FloquetConfig) -> Result<BandData> {
    cfg.validate()?;
    let a = spec.a;
    let b = 2.0 * PI / a;
    let half = (cfg.n_pw / 2) as i64;
    let x_ref = spec.x0 - 0.5 * a;
    let v_hat = potential_coefficients(spec, x_ref, cfg.n_pw);
    let kappas: Vec<f64> = (0..cfg.n_kappa)
        .map(|i| b * (i as f64 - (cfg.n_kappa / 2) as f64) / cfg.n_kappa as f64)
        .collect();
    let modes = vec![(-half..=half).collect::<Vec<i64>>(); cfg.n_kappa];
    let mut bd = assemble(spec, cfg.hbar, x_ref, kappas, modes, &v_hat, cfg.n_bands_kept)?;
    let cutoff = cfg.hbar * cfg.hbar * (PI * cfg.n_pw as f64 / a).powi(2) / 4.0;
    let top = bd.beta[cfg.n_bands_kept - 1];
    if top > cutoff {
        let msg = format!("basis truncation: top kept band reaches {top:.4e} above {cutoff:.4e}, increase n_pw");
        log::warn!("{msg}");
        bd.warnings.push(msg);
    }
    Ok(bd)
}

/// Complete Bloch decomposition of the discretized operator on a periodic
/// grid: one block per `kappa_r = 2 pi r / (M a)`, all `per_cell` bands kept.
/// The blocks diagonalize the grid operator exactly, so projections and
/// resolvents built from them are exact for the discrete problem.
pub fn solve_bands_on_grid(spec: &PotentialSpec, grid: &PeriodicGrid, hbar: f64) -> Result<BandData> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidConfig(format!("hbar must be positive, got {hbar}")));
    }
    let m = grid.cells as i64;
    let p = grid.per_cell as i64;
    let ng = m * p;
    let v_hat = potential_coefficients(spec, grid.x_start, grid.per_cell);
    let rs: Vec<i64> = (grid.j_min()..=grid.j_max()).collect();
    let kappas: Vec<f64> = rs.iter().map(|&r| 2.0 * PI * r as f64 / grid.length()).collect();
    let modes: Vec<Vec<i64>> = rs
        .iter()
        .map(|&r| {
            let lo = (-ng / 2 - r).div_euclid(m) + i64::from((-ng / 2 - r).rem_euclid(m) != 0);
            (lo..lo + p).collect()
        })
        .collect();
    assemble(spec, hbar, grid.x_start, kappas, modes, &v_hat, grid.per_cell)
}

/// `width = beta_n - alpha_n`, `gap_above = alpha_{n+1} - beta_n` (bands counted from 0).
pub fn band_metrics(bd: &BandData, n: usize) -> Result<BandMetrics> {
    if n + 1 >= bd.energies.len() {
        return Err(Error::Precondition(format!("band {n} has no band above it among the kept bands")));
    }
    Ok(BandMetrics { width: bd.beta[n] - bd.alpha[n], gap_above: bd.alpha[n + 1] - bd.beta[n] })
}

impl BandData {
    pub fn n_bands(&self) -> usize {
        self.energies.len()
    }

    pub fn zone_width(&self) -> f64 {
        2.0 * PI / self.a
    }

    /// Index of the grid quasimomentum equal to `kappa` modulo the zone width.
    pub fn kappa_index(&self, kappa: f64) -> Result<usize> {
        let b = self.zone_width();
        self.kappas
            .iter()
            .position(|&k| {
                let t = (kappa - k) / b;
                (t - t.round()).abs() < 1e-9
            })
            .ok_or(Error::KappaNotOnGrid(kappa))
    }

    /// Periodic-part coefficients of band `n` at grid point `i`.
    pub fn coefficients(&self, n: usize, i: usize) -> Vec<Complex64> {
        let s = 1.0 / self.a.sqrt();
        self.vectors[n][i].iter().map(|c| c * s).collect()
    }

    pub fn evaluate(&self, n: usize, i: usize, xs: &[f64]) -> Vec<Complex64> {
        let c = self.coefficients(n, i);
        let q = 2.0 * PI / self.a;
        let kappa = self.kappas[i];
        xs.iter()
            .map(|&x| {
                let d = x - self.x_ref;
                let s: Complex64 = self.modes[i]
                    .iter()
                    .zip(&c)
                    .map(|(&m, c)| c * Complex64::from_polar(1.0, q * m as f64 * d))
                    .sum();
                s * Complex64::from_polar(1.0, kappa * d)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "kappa", "E"])?;
        for (n, row) in self.energies.iter().enumerate() {
            for (k, e) in self.kappas.iter().zip(row) {
                wr.write_record([(n + 1).to_string(), format!("{k:.15e}"), format!("{e:.15e}")])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// `phi_n(x, kappa)` on arbitrary points; `kappa` outside the zone is folded.
pub fn bloch_on_grid(bd: &BandData, n: usize, kappa: f64, xs: &[f64]) -> Result<Vec<Complex64>> {
    if n >= bd.n_bands() {
        return Err(Error::Precondition(format!("band {n} not kept")));
    }
    let i = bd.kappa_index(kappa)?;
    Ok(bd.evaluate(n, i, xs))
}
