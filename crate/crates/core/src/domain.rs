//! The discretized operator `H = -hbar^2 d^2/dx^2 + V` on the M-cell periodic
//! grid, together with its exact Bloch decomposition.

use crate::bloch::{solve_bands_on_grid, BandData};
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::potential::PotentialSpec;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct CellDomain {
    pub grid: PeriodicGrid,
    pub hbar: f64,
    pub v: Vec<f64>,
    /// All bands, one quasimomentum per lattice cell.
    pub bands: BandData,
    slots: Vec<Vec<usize>>,
    kinetic: Vec<f64>,
}

impl CellDomain {
    pub fn new(spec: &PotentialSpec, cells: usize, per_cell: usize, hbar: f64) -> Result<Self> {
        let grid = PeriodicGrid::new(spec.a, spec.x0, cells, per_cell)?;
        let bands = solve_bands_on_grid(spec, &grid, hbar)?;
        let slots = bands
            .modes
            .iter()
            .enumerate()
            .map(|(i, ms)| {
                let r = grid.j_min() + i as i64;
                ms.iter().map(|&m| grid.slot(r + cells as i64 * m)).collect()
            })
            .collect();
        let kinetic = (0..grid.len()).map(|i| (hbar * grid.wavenumber(i)).powi(2)).collect();
        let v = grid.xs().iter().map(|&x| spec.value(x)).collect();
        Ok(Self { grid, hbar, v, bands, slots, kinetic })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn apply_h(&self, f: &[f64]) -> Vec<f64> {
        let mut c = self.grid.forward(f);
        c.iter_mut().zip(&self.kinetic).for_each(|(c, k)| *c *= k);
        self.grid
            .inverse(&c)
            .iter()
            .zip(f.iter().zip(&self.v))
            .map(|(t, (f, v))| t.re + v * f)
            .collect()
    }

    /// Coordinates of `f` in the Bloch eigenbasis, `[kappa][band]`.
    fn analyse(&self, f: &[f64]) -> Vec<Vec<Complex64>> {
        let c = self.grid.forward(f);
        let nb = self.bands.n_bands();
        self.slots
            .iter()
            .enumerate()
            .map(|(i, slots)| {
                (0..nb)
                    .map(|n| {
                        self.bands.vectors[n][i]
                            .iter()
                            .zip(slots)
                            .map(|(u, &s)| u.conj() * c[s])
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    fn synthesise(&self, y: &[Vec<Complex64>]) -> Vec<f64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.len()];
        for (i, slots) in self.slots.iter().enumerate() {
            for (n, yn) in y[i].iter().enumerate() {
                if yn.norm_sqr() == 0.0 {
                    continue;
                }
                for (u, &s) in self.bands.vectors[n][i].iter().zip(slots) {
                    c[s] += u * yn;
                }
            }
        }
        self.grid.inverse(&c).iter().map(|z| z.re).collect()
    }

    /// Applies `g(band, E)` as a spectral multiplier.
    pub fn spectral_map<G: Fn(usize, f64) -> f64>(&self, f: &[f64], g: G) -> Vec<f64> {
        let mut y = self.analyse(f);
        for (i, row) in y.iter_mut().enumerate() {
            for (n, v) in row.iter_mut().enumerate() {
                *v *= g(n, self.bands.energies[n][i]);
            }
        }
        self.synthesise(&y)
    }

    /// Orthogonal projection onto the first band.
    pub fn project_band1(&self, f: &[f64]) -> Vec<f64> {
        self.spectral_map(f, |n, _| if n == 0 { 1.0 } else { 0.0 })
    }

    /// `(H - z)^{-1}` restricted to the complement of the first band.
    pub fn resolvent_perp(&self, f: &[f64], z: f64) -> Result<Vec<f64>> {
        let gap_floor = self.bands.alpha[1];
        if z >= gap_floor {
            return Err(Error::Precondition(format!("shift {z} lies inside the upper spectrum (starts at {gap_floor})")));
        }
        Ok(self.spectral_map(f, |n, e| if n == 0 { 0.0 } else { 1.0 / (e - z) }))
    }

    /// Largest Bloch energy of the first band, `beta_1`.
    pub fn band1_top(&self) -> f64 {
        self.bands.beta[0]
    }

    /// First gap `alpha_2 - beta_1`.
    pub fn gap(&self) -> f64 {
        self.bands.alpha[1] - self.bands.beta[0]
    }

    /// Bloch function of band `n` at quasimomentum index `i` as real and
    /// imaginary grid samples (unit norm per cell).
    pub fn bloch_samples(&self, n: usize, i: usize) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.len()];
        let s = 1.0 / self.bands.a.sqrt();
        for (u, &slot) in self.bands.vectors[n][i].iter().zip(&self.slots[i]) {
            c[slot] = u * s;
        }
        self.grid.inverse(&c)
    }

    /// `(1/M) sum_kappa phi_1(x, kappa)` on the grid.
    pub fn band1_average(&self, bands: &BandData) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.len()];
        let s = 1.0 / (bands.a.sqrt() * bands.kappas.len() as f64);
        for (i, slots) in self.slots.iter().enumerate() {
            for (u, &slot) in bands.vectors[0][i].iter().zip(slots) {
                c[slot] += u * s;
            }
        }
        self.grid.inverse(&c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{make_potential, PotentialFamily};
    use rand::{Rng, SeedableRng};

    fn domain() -> CellDomain {
        let spec = make_potential(&PotentialFamily::Sin2 { v0: 8.0, a: 1.0 }).unwrap();
        CellDomain::new(&spec, 8, 32, 0.2).unwrap()
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn bloch_decomposition_diagonalizes_h() {
        let d = domain();
        let f = random(d.len(), 1);
        let direct = d.apply_h(&f);
        let spectral = d.spectral_map(&f, |_, e| e);
        let err = direct.iter().zip(&spectral).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        let back = d.spectral_map(&f, |_, _| 1.0);
        assert!(f.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal() {
        let d = domain();
        let f = random(d.len(), 2);
        let p = d.project_band1(&f);
        let pp = d.project_band1(&p);
        assert!(d.grid.norm(&p.iter().zip(&pp).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-10);
        let q: Vec<f64> = f.iter().zip(&p).map(|(a, b)| a - b).collect();
        assert!(d.grid.dot(&p, &q).abs() < 1e-12);
    }

    #[test]
    fn resolvent_inverts_shifted_operator_off_band() {
        let d = domain();
        let z = d.bands.alpha[0] - 0.3;
        let f = random(d.len(), 3);
        let q: Vec<f64> = f.iter().zip(d.project_band1(&f)).map(|(a, b)| a - b).collect();
        let r = d.resolvent_perp(&q, z).unwrap();
        let back: Vec<f64> = d.apply_h(&r).iter().zip(&r).map(|(h, r)| h - z * r).collect();
        let err = back.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        assert!(d.resolvent_perp(&q, d.bands.alpha[1] + 0.1).is_err());
    }

    #[test]
    fn bloch_samples_are_eigenfunctions() {
        let d = domain();
        let phi = d.bloch_samples(0, 3);
        let re: Vec<f64> = phi.iter().map(|c| c.re).collect();
        let hre = d.apply_h(&re);
        let e = d.bands.energies[0][3];
        assert!(hre.iter().zip(&re).all(|(h, r)| (h - e * r).abs() < 1e-9));
        let norm: f64 = phi.iter().map(|c| c.norm_sqr()).sum::<f64>() * d.grid.h;
        assert!((norm - d.grid.cells as f64).abs() < 1e-10);
    }
}
