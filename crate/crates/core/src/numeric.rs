//! Small numerical kernels shared by the modules: adaptive Gauss-Kronrod
//! quadrature, periodic cubic splines and straight-line least squares.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive G7-K15 integration of `f` over `[a, b]` with absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    // Work list of (lo, hi, estimate, error); split the worst interval until the
    // summed error estimate meets the tolerance.
    let (v, e) = gk15(&f, lo, hi);
    let mut parts = vec![(lo, hi, v, e)];
    for _ in 0..20_000 {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        let total: f64 = parts.iter().map(|p| p.2).sum();
        if total_err <= tol.max(50.0 * f64::EPSILON * total.abs()) {
            return Ok(sign * total);
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (l, h, _, _) = parts.swap_remove(worst);
        let m = 0.5 * (l + h);
        if m <= l || m >= h {
            break;
        }
        let (v1, e1) = gk15(&f, l, m);
        let (v2, e2) = gk15(&f, m, h);
        parts.push((l, m, v1, e1));
        parts.push((m, h, v2, e2));
    }
    Err(Error::Quadrature { achieved: parts.iter().map(|p| p.3).sum() })
}

/// Periodic cubic spline through equispaced samples on `[0, period)`.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    period: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl PeriodicSpline {
    pub fn new(period: f64, samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if n < 4 {
            return Err(Error::InvalidPotential("need at least 4 samples".into()));
        }
        let h = period / n as f64;
        // M_{i-1} + 4 M_i + M_{i+1} = 6 (y_{i+1} - 2 y_i + y_{i-1}) / h^2 is circulant,
        // so it diagonalizes under the DFT.
        let mut rhs: Vec<Complex64> = (0..n)
            .map(|i| {
                let yp = samples[(i + 1) % n];
                let ym = samples[(i + n - 1) % n];
                Complex64::new(6.0 * (yp - 2.0 * samples[i] + ym) / (h * h), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut rhs);
        for (k, r) in rhs.iter_mut().enumerate() {
            *r /= 4.0 + 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos();
        }
        planner.plan_fft_inverse(n).process(&mut rhs);
        let m = rhs.iter().map(|c| c.re / n as f64).collect();
        Ok(Self { period, y: samples, m })
    }

    fn locate(&self, x: f64) -> (usize, usize, f64, f64) {
        let n = self.y.len();
        let h = self.period / n as f64;
        let t = (x / self.period).rem_euclid(1.0) * n as f64;
        let i = (t.floor() as usize).min(n - 1);
        let s = (t - i as f64) * h;
        (i, (i + 1) % n, s, h)
    }

    pub fn value(&self, x: f64) -> f64 {
        let (i, j, s, h) = self.locate(x);
        let r = h - s;
        self.m[i] * r.powi(3) / (6.0 * h)
            + self.m[j] * s.powi(3) / (6.0 * h)
            + (self.y[i] - self.m[i] * h * h / 6.0) * r / h
            + (self.y[j] - self.m[j] * h * h / 6.0) * s / h
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (i, j, s, h) = self.locate(x);
        let r = h - s;
        -self.m[i] * r * r / (2.0 * h) + self.m[j] * s * s / (2.0 * h)
            - (self.y[i] - self.m[i] * h * h / 6.0) / h
            + (self.y[j] - self.m[j] * h * h / 6.0) / h
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let (i, j, s, h) = self.locate(x);
        (self.m[i] * (h - s) + self.m[j] * s) / h
    }
}

/// Ordinary least squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn line_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Fit(format!("need matching samples, got {} and {}", xs.len(), ys.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae have no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LineFit { slope, intercept, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_kinked_integrand() {
        let v = integrate(|s| (PI * s).sin().abs(), -0.3, 1.7, 1e-12).unwrap();
        let exact = (1.0 - (0.3 * PI).cos()) / PI + 2.0 / PI + (1.0 - (0.7 * PI).cos()) / PI;
        assert!((v - exact).abs() < 1e-11, "{v} vs {exact}");
    }

    #[test]
    fn integral_is_antisymmetric_in_limits() {
        let f = |x: f64| x.exp();
        let a = integrate(f, 0.0, 1.0, 1e-12).unwrap();
        let b = integrate(f, 1.0, 0.0, 1e-12).unwrap();
        assert_eq!(a, -b);
        assert!((a - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn spline_reproduces_trigonometric_samples() {
        let n = 256;
        let s: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let sp = PeriodicSpline::new(1.0, s).unwrap();
        for &x in &[0.013, 0.25, 0.61, -0.2, 1.37] {
            let t = 2.0 * PI * x;
            assert!((sp.value(x) - t.cos()).abs() < 1e-7);
            assert!((sp.derivative(x) + 2.0 * PI * t.sin()).abs() < 1e-4);
            assert!((sp.second_derivative(x) + 4.0 * PI * PI * t.cos()).abs() < 1e-2);
        }
    }

    #[test]
    fn line_fit_exact_line() {
        let xs = [4.0, 5.0, 6.25, 8.0, 10.0];
        let ys: Vec<f64> = xs.iter().map(|x| -1.8 * x + 1.0).collect();
        let f = line_fit(&xs, &ys).unwrap();
        assert!((f.slope + 1.8).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }
}
