//! Gauge fixing, the first-band Wannier function and the Löwdin-orthonormalized
//! localized basis `u_j` spanning the first band.

use crate::bloch::BandData;
use crate::domain::CellDomain;
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::numeric::{line_fit, LineFit};
use crate::potential::{AgmonData, PotentialSpec};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `sum_m conj(a_m) b_{m + shift}` over the common plane waves.
fn overlap(ma: &[i64], va: &[Complex64], mb: &[i64], vb: &[Complex64], shift: i64) -> Complex64 {
    let base = mb[0];
    ma.iter()
        .zip(va)
        .filter_map(|(&m, a)| {
            let k = m + shift - base;
            (k >= 0 && (k as usize) < vb.len()).then(|| a.conj() * vb[k as usize])
        })
        .sum()
}

fn rotate(v: &mut [Complex64], phase: Complex64) {
    v.iter_mut().for_each(|c| *c *= phase);
}

/// Smooth, real gauge for the first band: parallel transport outward from
/// `kappa = 0`, the closure phase spread linearly over the zone, the Wannier
/// centre moved onto `x0` and the global phase chosen so that `W1(x0) > 0`.
pub fn fix_gauge(bd: &BandData) -> Result<BandData> {
    let mut out = bd.clone();
    let n = bd.kappas.len();
    let b = bd.zone_width();
    let modes = &bd.modes;
    let vecs = &mut out.vectors[0];
    let i0 = (0..n).min_by(|&i, &j| bd.kappas[i].abs().total_cmp(&bd.kappas[j].abs())).unwrap_or(0);

    let align = |ov: Complex64| -> Result<Complex64> {
        let m = ov.norm();
        if m < 0.9 {
            return Err(Error::CoarseKappaGrid { overlap: m });
        }
        Ok(ov.conj() / m)
    };
    for i in i0 + 1..n {
        let ph = align(overlap(&modes[i - 1], &vecs[i - 1], &modes[i], &vecs[i], 0))?;
        rotate(&mut vecs[i], ph);
    }
    for i in (0..i0).rev() {
        let ph = align(overlap(&modes[i + 1], &vecs[i + 1], &modes[i], &vecs[i], 0))?;
        rotate(&mut vecs[i], ph);
    }
    if n > 1 {
        // phi(kappa + b) has periodic-part coefficients c_{m+1}(kappa).
        let closure = overlap(&modes[n - 1], &vecs[n - 1], &modes[0], &vecs[0], 1);
        align(closure)?;
        let theta = closure.arg();
        for i in 0..n {
            rotate(&mut vecs[i], Complex64::from_polar(1.0, theta * bd.kappas[i] / b));
        }
    }

    let at_x0: Vec<Complex64> = (0..n).map(|i| out.evaluate(0, i, &[bd.x0])[0]).collect();
    let centre = |j: i64| -> Complex64 {
        at_x0
            .iter()
            .zip(&bd.kappas)
            .map(|(p, k)| p * Complex64::from_polar(1.0, k * j as f64 * bd.a))
            .sum::<Complex64>()
            / n as f64
    };
    let half = (n / 2) as i64;
    let jstar = (-half..n as i64 - half)
        .max_by(|&x, &y| centre(x).norm().total_cmp(&centre(y).norm()).then(y.abs().cmp(&x.abs())))
        .unwrap_or(0);
    let w = centre(jstar);
    let global = w.conj() / w.norm();
    for (i, k) in bd.kappas.iter().enumerate() {
        rotate(&mut out.vectors[0][i], global * Complex64::from_polar(1.0, k * jstar as f64 * bd.a));
    }
    Ok(out)
}

/// `W1(x) = (1/n) sum_kappa phi_1(x, kappa)` including its imaginary part.
pub fn wannier_function_complex(bd: &BandData, xs: &[f64]) -> Vec<Complex64> {
    let n = bd.kappas.len();
    let mut w = vec![Complex64::new(0.0, 0.0); xs.len()];
    for i in 0..n {
        for (acc, v) in w.iter_mut().zip(bd.evaluate(0, i, xs)) {
            *acc += v / n as f64;
        }
    }
    w
}

pub fn wannier_function(bd: &BandData, xs: &[f64]) -> Vec<f64> {
    wannier_function_complex(bd, xs).iter().map(|c| c.re).collect()
}

/// Normalized ground state of the harmonic approximation at the well.
pub fn harmonic_ground_state(spec: &PotentialSpec, hbar: f64, xs: &[f64]) -> Vec<f64> {
    let w = (0.5 * spec.curvature).sqrt();
    let norm = (w / (PI * hbar)).powf(0.25);
    xs.iter().map(|x| norm * (-w * (x - spec.x0).powi(2) / (2.0 * hbar)).exp()).collect()
}

/// Ground state of `H` on the single cell around `x0` with hard walls, expanded
/// in `modes` sine functions. Returns the energy and the sine coefficients.
pub fn single_well_ground_state(spec: &PotentialSpec, hbar: f64, modes: usize) -> Result<(f64, Vec<f64>)> {
    let l = spec.a;
    let xl = spec.x0 - 0.5 * l;
    // Cosine moments C_q = int_0^L V(xl + t) cos(q pi t / L) dt by composite Simpson.
    let q_max = 2 * modes;
    let intervals = 8192;
    let dt = l / intervals as f64;
    let vs: Vec<f64> = (0..=intervals).map(|i| spec.value(xl + i as f64 * dt)).collect();
    let moments: Vec<f64> = (0..=q_max)
        .map(|q| {
            let s: f64 = vs
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let w = if i == 0 || i == intervals { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    w * v * (q as f64 * PI * i as f64 / intervals as f64).cos()
                })
                .sum();
            s * dt / 3.0
        })
        .collect();
    let h = DMatrix::from_fn(modes, modes, |i, j| {
        let (n, m) = (i + 1, j + 1);
        let kin = if n == m { (hbar * n as f64 * PI / l).powi(2) } else { 0.0 };
        kin + (moments[n.abs_diff(m)] - moments[n + m]) / l
    });
    let eig = SymmetricEigen::new(h);
    let k = (0..modes)
        .min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]))
        .ok_or_else(|| Error::Eigen("empty single-well basis".into()))?;
    let mut c: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    let centre: f64 = c.iter().enumerate().map(|(i, c)| c * ((i + 1) as f64 * PI * 0.5).sin()).sum();
    if centre < 0.0 {
        c.iter_mut().for_each(|v| *v = -*v);
    }
    Ok((eig.eigenvalues[k], c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisOptions {
    /// Overlaps `a_l` kept for `|l| <= overlap_band`.
    pub overlap_band: usize,
    pub seed_modes: usize,
}

impl Default for BasisOptions {
    fn default() -> Self {
        Self { overlap_band: 6, seed_modes: 128 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WannierBasis {
    pub hbar: f64,
    pub a: f64,
    pub x0: f64,
    pub cells: usize,
    pub per_cell: usize,
    pub w1: Vec<f64>,
    /// `max |Im W1| / max |W1|` before discarding the imaginary part.
    pub w1_imag_residue: f64,
    /// Projected single-well seed `v_0`.
    pub v0: Vec<f64>,
    pub u0: Vec<f64>,
    /// `a_l = <v_0, v_l> - delta_{l0}` for `l = 0..=K`.
    pub overlaps: Vec<f64>,
    /// Löwdin coefficients `b_l` for `l = 0..=K`.
    pub lowdin: Vec<f64>,
    /// `|a_0| + 2 sum |a_l|`, a bound on the overlap operator norm.
    pub overlap_norm: f64,
    /// `||u_0 - W1||` after sign alignment.
    pub wannier_discrepancy: f64,
    /// Decay rate of `W1` per unit length, if a tail is resolvable.
    pub tau_w: Option<f64>,
}

impl WannierBasis {
    /// `u_j(x) = u_0(x - j a)`.
    pub fn u(&self, j: i64) -> Vec<f64> {
        let n = self.u0.len() as i64;
        let shift = (j * self.per_cell as i64).rem_euclid(n) as usize;
        let mut out = vec![0.0; self.u0.len()];
        for (i, v) in self.u0.iter().enumerate() {
            out[(i + shift) % self.u0.len()] = *v;
        }
        out
    }

    pub fn h(&self) -> f64 {
        self.a / self.per_cell as f64
    }

    pub fn j_min(&self) -> i64 {
        -((self.cells / 2) as i64)
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.j_min()..=self.j_min() + self.cells as i64 - 1
    }
}

/// Löwdin coefficients `b_l`, `l in j_min..=j_max`, of `(I + A)^{-1/2}` for the
/// circulant overlap with band `a[0..=K]` on `cells` sites.
pub fn lowdin_coefficients(a: &[f64], cells: usize) -> Result<Vec<f64>> {
    let j_min = -((cells / 2) as i64);
    let kap: Vec<f64> = (0..cells).map(|r| 2.0 * PI * r as f64 / cells as f64).collect();
    let symbol: Vec<f64> = kap
        .iter()
        .map(|k| 1.0 + a[0] + 2.0 * a.iter().enumerate().skip(1).map(|(l, v)| v * (l as f64 * k).cos()).sum::<f64>())
        .collect();
    if let Some(s) = symbol.iter().find(|s| **s <= 0.0) {
        return Err(Error::IllConditionedBasis { norm: 1.0 - s });
    }
    Ok((0..cells as i64)
        .map(|i| {
            let l = (j_min + i) as f64;
            kap.iter().zip(&symbol).map(|(k, s)| s.powf(-0.5) * (l * k).cos()).sum::<f64>() / cells as f64
        })
        .collect())
}

pub fn build_orthonormal_basis(spec: &PotentialSpec, domain: &CellDomain, opts: &BasisOptions) -> Result<WannierBasis> {
    let grid = &domain.grid;
    let m = grid.cells;
    let k = opts.overlap_band;
    if m < 2 * k + 3 {
        log::warn!("only {m} cells for overlap band {k}; interior accuracy degraded");
    }
    let gauged = fix_gauge(&domain.bands)?;
    let wc = domain.band1_average(&gauged);
    let wmax = wc.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let w1_imag_residue = wc.iter().map(|c| c.im.abs()).fold(0.0, f64::max) / wmax;
    let w1: Vec<f64> = wc.iter().map(|c| c.re).collect();

    let (_, coeffs) = single_well_ground_state(spec, domain.hbar, opts.seed_modes)?;
    let mut seed = vec![0.0; grid.len()];
    let xl = spec.x0 - 0.5 * spec.a;
    for i in grid.cell_range(0) {
        let t = PI * (grid.x(i) - xl) / spec.a;
        seed[i] = (2.0 / spec.a).sqrt() * coeffs.iter().enumerate().map(|(n, c)| c * ((n + 1) as f64 * t).sin()).sum::<f64>();
    }
    let v0 = domain.project_band1(&seed);

    let mut overlaps: Vec<f64> = (0..=k as i64).map(|l| grid.dot(&v0, &grid.translate(&v0, l))).collect();
    overlaps[0] -= 1.0;
    let overlap_norm = overlaps[0].abs() + 2.0 * overlaps[1..].iter().map(|v| v.abs()).sum::<f64>();
    if overlap_norm >= 1.0 {
        return Err(Error::IllConditionedBasis { norm: overlap_norm });
    }
    let b_all = lowdin_coefficients(&overlaps, m)?;
    let mut u0 = vec![0.0; grid.len()];
    for (i, b) in b_all.iter().enumerate() {
        let l = grid.j_min() + i as i64;
        for (acc, v) in u0.iter_mut().zip(grid.translate(&v0, l)) {
            *acc += b * v;
        }
    }
    let zero = (-grid.j_min()) as usize;
    let lowdin: Vec<f64> = (0..=k).map(|l| b_all[(zero + l) % m]).collect();

    let sign = grid.dot(&u0, &w1).signum();
    let diff: Vec<f64> = u0.iter().zip(&w1).map(|(u, w)| u - sign * w).collect();
    let wannier_discrepancy = grid.norm(&diff);
    let tau_w = decay_fit(grid, &w1, (1e-10, 1e-3)).ok().map(|f| -f.slope);

    Ok(WannierBasis {
        hbar: domain.hbar,
        a: spec.a,
        x0: spec.x0,
        cells: m,
        per_cell: grid.per_cell,
        w1,
        w1_imag_residue,
        v0,
        u0,
        overlaps,
        lowdin,
        overlap_norm,
        wannier_discrepancy,
        tau_w,
    })
}

fn tail_points(grid: &PeriodicGrid, f: &[f64], window: (f64, f64)) -> Vec<usize> {
    grid.cell_range(0).filter(|&i| f[i].abs() >= window.0 && f[i].abs() <= window.1).collect()
}

/// Slope of `log|f|` against `|x - x0|` over the central cell where `|f|` lies in `window`.
pub fn decay_fit(grid: &PeriodicGrid, f: &[f64], window: (f64, f64)) -> Result<LineFit> {
    let pts = tail_points(grid, f, window);
    if pts.len() < 4 {
        return Err(Error::Fit(format!("only {} tail points in the amplitude window", pts.len())));
    }
    let xs: Vec<f64> = pts.iter().map(|&i| (grid.x(i) - grid.x0).abs()).collect();
    let ys: Vec<f64> = pts.iter().map(|&i| f[i].abs().ln()).collect();
    line_fit(&xs, &ys)
}

/// Slope of `log|f|` against `d_A(x, x0) / hbar` over the central cell where
/// `|f|` lies in `window`. Farther cells are excluded: near the neighbouring
/// wells the Agmon distance plateaus while the prefactor does not.
pub fn agmon_tail_fit(grid: &PeriodicGrid, f: &[f64], agmon: &AgmonData, hbar: f64, window: (f64, f64)) -> Result<LineFit> {
    if agmon.distance.len() != f.len() {
        return Err(Error::Precondition("Agmon table does not match the grid".into()));
    }
    let pts = tail_points(grid, f, window);
    if pts.len() < 4 {
        return Err(Error::Fit(format!("only {} tail points in the amplitude window", pts.len())));
    }
    let xs: Vec<f64> = pts.iter().map(|&i| agmon.distance[i] / hbar).collect();
    let ys: Vec<f64> = pts.iter().map(|&i| f[i].abs().ln()).collect();
    line_fit(&xs, &ys)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDiagnostics {
    /// `sup_x sum_j |u_j(x)|`.
    pub sup_sum: f64,
    /// `||u_0 u_l||_{L1}` for `l = 0..=4`.
    pub pair_l1: Vec<f64>,
}

pub fn basis_diagnostics(wb: &WannierBasis) -> BasisDiagnostics {
    let p = wb.per_cell;
    let n = wb.u0.len();
    let sup_sum = (0..p)
        .map(|i| (0..wb.cells).map(|c| wb.u0[(i + c * p) % n].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let pair_l1 = (0..=4)
        .map(|l| wb.h() * wb.u0.iter().zip(wb.u(l)).map(|(a, b)| (a * b).abs()).sum::<f64>())
        .collect();
    BasisDiagnostics { sup_sum, pair_l1 }
}

/// Dense `(I + A)^{-1/2}` for a symmetric banded Toeplitz overlap, periodic wrap.
pub fn dense_inverse_sqrt(a: &[f64], cells: usize) -> DMatrix<f64> {
    let k = a.len() - 1;
    let m = DMatrix::from_fn(cells, cells, |i, j| {
        let d = i.abs_diff(j).min(cells - i.abs_diff(j));
        let v = if d <= k { a[d] } else { 0.0 };
        v + if i == j { 1.0 } else { 0.0 }
    });
    let e = SymmetricEigen::new(m);
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|x| x.powf(-0.5)));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{solve_bands, FloquetConfig};
    use crate::potential::{make_potential, tunneling_action, PotentialFamily};

    fn spec() -> PotentialSpec {
        make_potential(&PotentialFamily::Sin2 { v0: 8.0, a: 1.0 }).unwrap()
    }

    fn fixed(hbar: f64) -> BandData {
        let cfg = FloquetConfig { hbar, n_pw: 65, n_kappa: 32, n_bands_kept: 3 };
        fix_gauge(&solve_bands(&spec(), &cfg).unwrap()).unwrap()
    }

    fn xs() -> Vec<f64> {
        (0..32 * 32).map(|i| -16.0 + i as f64 / 32.0).collect()
    }

    #[test]
    fn gauge_makes_wannier_real_positive_and_normalized() {
        let bd = fixed(0.2);
        let w = wannier_function_complex(&bd, &xs());
        let wmax = w.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let imax = w.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        assert!(imax / wmax < 1e-8, "{}", imax / wmax);
        let centre = wannier_function(&bd, &[0.0])[0];
        assert!(centre > 0.0);
        assert!((centre - wmax).abs() < 1e-12);
        let norm: f64 = w.iter().map(|c| c.norm_sqr()).sum::<f64>() / 32.0;
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gauge_is_idempotent() {
        let once = fixed(0.2);
        let twice = fix_gauge(&once).unwrap();
        let d = once.vectors[0]
            .iter()
            .flatten()
            .zip(twice.vectors[0].iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn gauge_survives_a_random_phase_seed() {
        let cfg = FloquetConfig { hbar: 0.2, n_pw: 65, n_kappa: 32, n_bands_kept: 3 };
        let mut bd = solve_bands(&spec(), &cfg).unwrap();
        let a = wannier_function(&fix_gauge(&bd).unwrap(), &xs());
        for (i, v) in bd.vectors[0].iter_mut().enumerate() {
            rotate(v, Complex64::from_polar(1.0, 0.7 * i as f64 + 0.3));
        }
        let b = wannier_function(&fix_gauge(&bd).unwrap(), &xs());
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let cfg = FloquetConfig { hbar: 1.5, n_pw: 33, n_kappa: 2, n_bands_kept: 3 };
        let weak = make_potential(&PotentialFamily::Sin2 { v0: 0.5, a: 1.0 }).unwrap();
        let bd = solve_bands(&weak, &cfg).unwrap();
        assert!(matches!(fix_gauge(&bd), Err(Error::CoarseKappaGrid { .. })));
    }

    #[test]
    fn wannier_approaches_harmonic_state() {
        let x = xs();
        let d: Vec<f64> = [0.2, 0.1]
            .iter()
            .map(|&h| {
                let w = wannier_function(&fixed(h), &x);
                let g = harmonic_ground_state(&spec(), h, &x);
                (w.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 32.0).sqrt()
            })
            .collect();
        assert!(d[1] < d[0], "{d:?}");
    }

    #[test]
    fn lowdin_symbol_matches_dense_inverse_sqrt() {
        let a = [0.01, -0.08, 0.004, -0.0002, 1e-5, 0.0, 0.0];
        let b = lowdin_coefficients(&a, 31).unwrap();
        let dense = dense_inverse_sqrt(&a, 31);
        for l in -15i64..=15 {
            let col = l.rem_euclid(31) as usize;
            assert!((b[(l + 15) as usize] - dense[(0, col)]).abs() < 1e-13);
        }
    }

    #[test]
    fn single_well_state_is_localized_and_low() {
        let s = spec();
        let (e, c) = single_well_ground_state(&s, 0.1, 96).unwrap();
        assert!((e - s.harmonic_energy(0.1)).abs() < 0.05);
        assert!((c.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    fn basis(hbar: f64) -> (CellDomain, WannierBasis) {
        let d = CellDomain::new(&spec(), 16, 64, hbar).unwrap();
        let wb = build_orthonormal_basis(&spec(), &d, &BasisOptions::default()).unwrap();
        (d, wb)
    }

    #[test]
    fn basis_is_orthonormal_translated_and_first_band() {
        let (d, wb) = basis(0.2);
        let g = &d.grid;
        for j in -3..=3i64 {
            for k in -3..=3i64 {
                let o = g.dot(&wb.u(j), &wb.u(k));
                assert!((o - f64::from(j == k)).abs() < 1e-8, "{j} {k} {o}");
            }
        }
        let u2 = wb.u(2);
        let back = g.translate(&wb.u0, 2);
        assert!(u2.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-12));
        let p = d.project_band1(&u2);
        let leak: Vec<f64> = p.iter().zip(&u2).map(|(a, b)| a - b).collect();
        assert!(g.norm(&leak) < 1e-6);
        assert!(wb.w1_imag_residue < 1e-8);
        assert!(wb.u0[g.centre_index(0)] > 0.0);
        assert!(wb.wannier_discrepancy < 1e-3, "{}", wb.wannier_discrepancy);
    }

    #[test]
    fn basis_spans_first_band_bloch_states() {
        let (d, wb) = basis(0.2);
        for i in [3usize, 8, 12] {
            let phi = d.bloch_samples(0, i);
            let re: Vec<f64> = phi.iter().map(|c| c.re).collect();
            let im: Vec<f64> = phi.iter().map(|c| c.im).collect();
            let s: f64 = wb
                .indices()
                .map(|j| {
                    let u = wb.u(j);
                    d.grid.dot(&u, &re).powi(2) + d.grid.dot(&u, &im).powi(2)
                })
                .sum();
            assert!((s / d.grid.cells as f64 - 1.0).abs() < 1e-6, "{s}");
        }
    }

    #[test]
    fn lowdin_leading_order() {
        let (_, wb) = basis(0.16);
        let a1 = wb.overlaps[1];
        assert!(a1 != 0.0);
        assert!((wb.lowdin[1] + 0.5 * a1).abs() < 0.05 * a1.abs());
    }

    #[test]
    fn diagnostics_pair_overlaps_decay() {
        let (_, wb) = basis(0.2);
        let diag = basis_diagnostics(&wb);
        assert!((diag.pair_l1[0] - 1.0).abs() < 1e-10);
        assert!(diag.pair_l1[2] <= 10.0 * diag.pair_l1[1].powi(2));
        assert!(diag.sup_sum > 0.0);
    }

    #[test]
    fn wannier_tail_follows_agmon_rate() {
        let s = spec();
        let d = CellDomain::new(&s, 16, 64, 0.1).unwrap();
        let wb = build_orthonormal_basis(&s, &d, &BasisOptions::default()).unwrap();
        let ad = tunneling_action(&s, &d.grid.xs()).unwrap();
        let fit = agmon_tail_fit(&d.grid, &wb.w1, &ad, 0.1, (1e-10, 1e-3)).unwrap();
        assert!((fit.slope + 1.0).abs() <= 0.15, "{}", fit.slope);
    }
}
