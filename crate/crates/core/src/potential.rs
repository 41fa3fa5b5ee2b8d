//! Periodic potentials with a single non-degenerate well per period, and the
//! Agmon metric they induce.

use crate::error::{Error, Result};
use crate::numeric::{integrate, PeriodicSpline};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const SCAN_POINTS: usize = 1024;
const AGMON_TOL: f64 = 1e-10;

/// User-facing description of a potential family, as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PotentialFamily {
    /// `V(x) = v0 sin^2(pi x / a)`.
    Sin2 { v0: f64, a: f64 },
    /// `V(x) = sum_n coeffs[n-1] cos(2 pi n x / a)`, shifted so that min V = 0.
    CosSeries { a: f64, coeffs: Vec<f64> },
    /// Equispaced samples of one period starting at x = 0, spline-interpolated.
    CustomSamples { a: f64, samples: Vec<f64> },
}

#[derive(Debug, Clone)]
enum Profile {
    Sin2 { v0: f64 },
    Cos { coeffs: Vec<f64> },
    Spline(PeriodicSpline),
    Zero,
}

#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub a: f64,
    pub x0: f64,
    pub curvature: f64,
    pub v0: f64,
    offset: f64,
    profile: Profile,
}

impl PotentialSpec {
    fn raw(&self, x: f64, order: u8) -> f64 {
        let a = self.a;
        match &self.profile {
            Profile::Sin2 { v0 } => {
                let q = 2.0 * PI / a;
                match order {
                    0 => v0 * (PI * x / a).sin().powi(2),
                    1 => 0.5 * v0 * q * (q * x).sin(),
                    _ => 0.5 * v0 * q * q * (q * x).cos(),
                }
            }
            Profile::Cos { coeffs } => coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let q = 2.0 * PI * (i + 1) as f64 / a;
                    match order {
                        0 => c * (q * x).cos(),
                        1 => -c * q * (q * x).sin(),
                        _ => -c * q * q * (q * x).cos(),
                    }
                })
                .sum(),
            Profile::Spline(s) => match order {
                0 => s.value(x),
                1 => s.derivative(x),
                _ => s.second_derivative(x),
            },
            Profile::Zero => 0.0,
        }
    }

    /// Normalized potential, min V = 0.
    pub fn value(&self, x: f64) -> f64 {
        self.raw(x, 0) - self.offset
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.raw(x, 1)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.raw(x, 2)
    }

    /// Harmonic ground-state energy `hbar sqrt(V''(x0)/2)`.
    pub fn harmonic_energy(&self, hbar: f64) -> f64 {
        hbar * (0.5 * self.curvature).sqrt()
    }

    /// Largest relative deviation of `V(x + a)` from `V(x)` over `n` points.
    pub fn periodicity_defect(&self, n: usize) -> f64 {
        let scale = self.v0.max(f64::MIN_POSITIVE);
        (0..n)
            .map(|i| {
                let x = self.x0 - 0.5 * self.a + self.a * i as f64 / n as f64;
                (self.value(x + self.a) - self.value(x)).abs() / scale
            })
            .fold(0.0, f64::max)
    }

    /// Free particle `V = 0`. Skips the non-degeneracy checks, which it fails;
    /// only meant for band-solver tests.
    pub fn free_particle(a: f64) -> Self {
        Self { a, x0: 0.0, curvature: 0.0, v0: 0.0, offset: 0.0, profile: Profile::Zero }
    }
}

pub fn make_potential(family: &PotentialFamily) -> Result<PotentialSpec> {
    let (a, profile) = match family {
        PotentialFamily::Sin2 { v0, a } => (*a, Profile::Sin2 { v0: *v0 }),
        PotentialFamily::CosSeries { a, coeffs } => (*a, Profile::Cos { coeffs: coeffs.clone() }),
        PotentialFamily::CustomSamples { a, samples } => {
            if !(*a > 0.0) {
                return Err(Error::InvalidPotential(format!("period must be positive, got {a}")));
            }
            if samples.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidPotential("non-finite sample".into()));
            }
            (*a, Profile::Spline(PeriodicSpline::new(*a, samples.clone())?))
        }
    };
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidPotential(format!("period must be positive, got {a}")));
    }
    let mut spec = PotentialSpec { a, x0: 0.0, curvature: 0.0, v0: 0.0, offset: 0.0, profile };

    let h = a / SCAN_POINTS as f64;
    let xs: Vec<f64> = (0..SCAN_POINTS).map(|i| -0.5 * a + i as f64 * h).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| spec.raw(x, 0)).collect();
    if vs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidPotential("potential is not bounded".into()));
    }
    let (imin, vmin) = vs
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let vmax = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let amplitude = vmax - vmin;
    if amplitude <= 1e-12 * vmax.abs().max(1.0) {
        return Err(Error::InvalidPotential("degenerate minimum: potential is flat".into()));
    }
    let n = SCAN_POINTS;
    for i in 0..n {
        let dist = (i as isize - imin as isize).unsigned_abs();
        if dist.min(n - dist) <= 2 {
            continue;
        }
        let v = vs[i];
        if v <= vs[(i + 1) % n] && v <= vs[(i + n - 1) % n] && v - vmin <= 1e-9 * amplitude {
            return Err(Error::InvalidPotential(format!(
                "multiple equal minima per period (x = {:.6} and x = {:.6})",
                xs[imin], xs[i]
            )));
        }
    }

    // Newton on V' inside the bracketing grid cell pair, bisection as fallback.
    let (mut lo, mut hi) = (xs[imin] - h, xs[imin] + h);
    let mut x = xs[imin];
    for _ in 0..100 {
        let d1 = spec.derivative(x);
        let d2 = spec.second_derivative(x);
        if d1 == 0.0 {
            break;
        }
        if d1 > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = if d2 > 0.0 { x - d1 / d2 } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * a {
            x = next;
            break;
        }
        x = next;
    }
    let x0 = (x + 0.5 * a).rem_euclid(a) - 0.5 * a;
    let curvature = spec.second_derivative(x0);
    if !(curvature > 1e-10 * amplitude / (a * a)) {
        return Err(Error::InvalidPotential(format!("degenerate minimum: V''(x0) = {curvature:e}")));
    }
    spec.offset = spec.raw(x0, 0).min(vmin);
    spec.x0 = x0;
    spec.curvature = curvature;
    spec.v0 = amplitude;
    Ok(spec)
}

/// `|int_x^y sqrt(V)|`, split at the wells so every piece has a smooth interior.
pub fn agmon_distance(spec: &PotentialSpec, x: f64, y: f64) -> Result<f64> {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    if lo == hi {
        return Ok(0.0);
    }
    let mut cuts = vec![lo];
    let first = ((lo - spec.x0) / spec.a).floor() as i64 + 1;
    let mut j = first;
    loop {
        let c = spec.x0 + j as f64 * spec.a;
        if c >= hi {
            break;
        }
        if c > lo {
            cuts.push(c);
        }
        j += 1;
    }
    cuts.push(hi);
    let tol = AGMON_TOL / (cuts.len() - 1) as f64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(|s| spec.value(s).max(0.0).sqrt(), w[0], w[1], tol)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgmonData {
    pub s0: f64,
    pub grid: Vec<f64>,
    /// `d_A(grid[i], x0)`.
    pub distance: Vec<f64>,
}

/// `S0 = d_A(x0, x0 + a)` plus `d_A(., x0)` tabulated on an ascending grid.
pub fn tunneling_action(spec: &PotentialSpec, grid: &[f64]) -> Result<AgmonData> {
    let s0 = agmon_distance(spec, spec.x0, spec.x0 + spec.a)?;
    let mut distance = vec![0.0; grid.len()];
    let split = grid.partition_point(|&x| x < spec.x0);
    let mut prev = spec.x0;
    let mut acc = 0.0;
    for i in split..grid.len() {
        acc += agmon_distance(spec, prev, grid[i])?;
        distance[i] = acc;
        prev = grid[i];
    }
    prev = spec.x0;
    acc = 0.0;
    for i in (0..split).rev() {
        acc += agmon_distance(spec, grid[i], prev)?;
        distance[i] = acc;
        prev = grid[i];
    }
    Ok(AgmonData { s0, grid: grid.to_vec(), distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sin2(v0: f64, a: f64) -> PotentialSpec {
        make_potential(&PotentialFamily::Sin2 { v0, a }).unwrap()
    }

    #[test]
    fn sin2_minimum_and_curvature() {
        let s = sin2(1.0, 1.0);
        assert_eq!(s.x0, 0.0);
        assert!((s.curvature - 2.0 * PI * PI).abs() < 1e-12);
        let s = sin2(5.0, 2.0);
        assert!(s.x0.abs() < 1e-14);
        assert!((s.curvature - 5.0 * PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn flat_potential_rejected() {
        let e = make_potential(&PotentialFamily::CosSeries { a: 1.0, coeffs: vec![] });
        assert!(matches!(e, Err(Error::InvalidPotential(_))));
        let e = make_potential(&PotentialFamily::CustomSamples { a: 1.0, samples: vec![2.0; 16] });
        assert!(matches!(e, Err(Error::InvalidPotential(_))));
    }

    #[test]
    fn double_well_cell_rejected() {
        // cos(4 pi x) has two equal minima per unit period.
        let e = make_potential(&PotentialFamily::CosSeries { a: 1.0, coeffs: vec![0.0, 1.0] });
        assert!(matches!(e, Err(Error::InvalidPotential(m)) if m.contains("multiple")));
    }

    #[test]
    fn shifted_cos_series_minimum_found() {
        // V = -cos(2 pi x) + 0.1 cos(4 pi x) has its unique minimum at 0.
        let s = make_potential(&PotentialFamily::CosSeries { a: 1.0, coeffs: vec![-1.0, 0.1] }).unwrap();
        assert!(s.x0.abs() < 1e-12);
        assert!(s.value(s.x0).abs() < 1e-14);
        let expected = 4.0 * PI * PI * (1.0 - 0.4);
        assert!((s.curvature - expected).abs() < 1e-10);
    }

    #[test]
    fn spline_samples_match_analytic_family() {
        let n = 512;
        let samples: Vec<f64> = (0..n).map(|i| 3.0 * (PI * i as f64 / n as f64).sin().powi(2)).collect();
        let s = make_potential(&PotentialFamily::CustomSamples { a: 1.0, samples }).unwrap();
        assert!(s.x0.abs() < 1e-6);
        assert!((s.curvature - 6.0 * PI * PI).abs() / (6.0 * PI * PI) < 1e-4);
    }

    #[test]
    fn agmon_examples() {
        let s = sin2(1.0, 1.0);
        assert!((agmon_distance(&s, 0.0, 1.0).unwrap() - 2.0 / PI).abs() < 1e-10);
        assert_eq!(agmon_distance(&s, 0.37, 0.37).unwrap(), 0.0);
        let s = sin2(4.0, 1.0);
        assert!((agmon_distance(&s, 0.0, 1.0).unwrap() - 4.0 / PI).abs() < 1e-10);
        let s = sin2(1.0, 2.0);
        let ad = tunneling_action(&s, &[]).unwrap();
        assert!((ad.s0 - 4.0 / PI).abs() < 1e-10);
    }

    #[test]
    fn agmon_additivity_over_wells() {
        let s = sin2(8.0, 1.0);
        let s0 = tunneling_action(&s, &[]).unwrap().s0;
        for k in 1..=4 {
            let d = agmon_distance(&s, s.x0, s.x0 + k as f64).unwrap();
            assert!((d - k as f64 * s0).abs() < 1e-8);
        }
        let d = agmon_distance(&s, s.x0 + 2.0, s.x0).unwrap();
        assert!((d - 2.0 * s0).abs() < 1e-9);
    }

    #[test]
    fn tabulated_distance_is_monotone_per_arm() {
        let s = sin2(8.0, 1.0);
        let grid: Vec<f64> = (0..129).map(|i| -0.5 + i as f64 / 128.0).collect();
        let ad = tunneling_action(&s, &grid).unwrap();
        assert_eq!(ad.distance[64], 0.0);
        for i in 64..128 {
            assert!(ad.distance[i + 1] >= ad.distance[i]);
        }
        for i in 1..=64 {
            assert!(ad.distance[i - 1] >= ad.distance[i]);
        }
        let direct = agmon_distance(&s, 0.0, grid[100]).unwrap();
        assert!((ad.distance[100] - direct).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn periodic_to_roundoff(v0 in 0.5f64..20.0, a in 0.5f64..3.0) {
            let s = sin2(v0, a);
            prop_assert!(s.periodicity_defect(1000) < 1e-12);
        }

        #[test]
        fn action_scales_with_root_of_depth(v0 in 0.5f64..10.0, c in 0.5f64..3.0) {
            let s1 = tunneling_action(&sin2(v0, 1.0), &[]).unwrap().s0;
            let s2 = tunneling_action(&sin2(c * c * v0, 1.0), &[]).unwrap().s0;
            prop_assert!((s2 - c * s1).abs() < 1e-10);
        }
    }
}
