//! Stationary discrete NLS `E F_k - (F_{k+1} + F_{k-1}) + eta |F_k|^{2 sigma} F_k = 0`
//! with `||F|| = 1`. Negative `eta` is the focusing (localizing) side.

use crate::error::{Error, Result};
use crate::numeric::line_fit;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Zero,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DnlsProblem {
    pub eta: f64,
    pub sigma: f64,
    pub n: usize,
    pub boundary: Boundary,
}

impl DnlsProblem {
    pub fn new(eta: f64, sigma: f64, n: usize, boundary: Boundary) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidConfig(format!("lattice needs at least 3 sites, got {n}")));
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
        }
        if !eta.is_finite() {
            return Err(Error::InvalidConfig("eta must be finite".into()));
        }
        Ok(Self { eta, sigma, n, boundary })
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        Self { eta, ..*self }
    }

    /// Centre site, the reference for seed offsets.
    pub fn centre(&self) -> usize {
        self.n / 2
    }

    fn neighbours<T: Copy + std::ops::Add<Output = T> + Default>(&self, f: &[T], k: usize) -> T {
        let n = self.n;
        let (l, r) = match self.boundary {
            Boundary::Periodic => (Some((k + n - 1) % n), Some((k + 1) % n)),
            Boundary::Zero => (k.checked_sub(1), (k + 1 < n).then_some(k + 1)),
        };
        l.map_or(T::default(), |i| f[i]) + r.map_or(T::default(), |i| f[i])
    }
}

/// `|x|^{2 sigma}`, floored at the origin so that small powers stay finite.
fn power(x: f64, sigma: f64) -> f64 {
    (x * x + 1e-300).powf(sigma)
}

pub fn dnls_residual(f: &[f64], e: f64, prob: &DnlsProblem) -> Vec<f64> {
    (0..prob.n)
        .map(|k| e * f[k] - prob.neighbours(f, k) + prob.eta * f[k].abs().powf(2.0 * prob.sigma) * f[k])
        .collect()
}

/// Complex test mode of the residual, with `|F|^{2 sigma} F`.
pub fn dnls_residual_complex(f: &[Complex64], e: f64, prob: &DnlsProblem) -> Vec<Complex64> {
    (0..prob.n)
        .map(|k| e * f[k] - prob.neighbours(f, k) + prob.eta * f[k].norm().powf(2.0 * prob.sigma) * f[k])
        .collect()
}

/// `(L+ c)_j = -(c_{j+1} + c_{j-1}) + (E + eta (2 sigma + 1) |F_j|^{2 sigma}) c_j`.
pub fn linearization_lplus(f: &[f64], e: f64, prob: &DnlsProblem) -> DMatrix<f64> {
    let n = prob.n;
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = e + prob.eta * (2.0 * prob.sigma + 1.0) * power(f[k], prob.sigma);
        if k + 1 < n {
            m[(k, k + 1)] = -1.0;
            m[(k + 1, k)] = -1.0;
        }
    }
    if prob.boundary == Boundary::Periodic {
        m[(0, n - 1)] -= 1.0;
        m[(n - 1, 0)] -= 1.0;
    }
    m
}

/// `max_j sum_i |(L+^{-1})_{ij}|`, the induced l1 norm of the inverse.
pub fn lplus_inverse_l1(f: &[f64], e: f64, prob: &DnlsProblem) -> Result<f64> {
    let inv = linearization_lplus(f, e, prob)
        .try_inverse()
        .ok_or_else(|| Error::Precondition("L+ is singular".into()))?;
    Ok((0..prob.n).map(|j| inv.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max))
}

pub fn participation(f: &[f64]) -> f64 {
    let n2: f64 = f.iter().map(|v| v * v).sum();
    n2 * n2 / f.iter().map(|v| v.powi(4)).sum::<f64>()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Least-squares decay per site of `log|F_j|` in `|j - argmax|`, sites with `|F_j|` in `[1e-12, 1e-2]`.
pub fn decay_rate(f: &[f64]) -> Result<f64> {
    let p = participation(f);
    if p >= f.len() as f64 / 4.0 {
        return Err(Error::NotLocalized(format!("participation {p:.2} of {} sites", f.len())));
    }
    let peak = (0..f.len()).max_by(|&i, &j| f[i].abs().total_cmp(&f[j].abs())).unwrap_or(0);
    let (xs, ys): (Vec<f64>, Vec<f64>) = f
        .iter()
        .enumerate()
        .filter(|(_, v)| (1e-12..=1e-2).contains(&v.abs()))
        .map(|(j, v)| (j.abs_diff(peak) as f64, v.abs().ln()))
        .unzip();
    if xs.len() < 4 {
        return Err(Error::NotLocalized(format!("only {} tail sites", xs.len())));
    }
    Ok(-line_fit(&xs, &ys)?.slope)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnlsState {
    pub eta: f64,
    pub sigma: f64,
    pub f: Vec<f64>,
    pub e: f64,
    pub residual_norm: f64,
    pub participation: f64,
    pub decay_rate: Option<f64>,
}

impl DnlsState {
    pub fn from_solution(prob: &DnlsProblem, f: Vec<f64>, e: f64) -> Self {
        let residual_norm = l2(&dnls_residual(&f, e, prob));
        Self {
            eta: prob.eta,
            sigma: prob.sigma,
            participation: participation(&f),
            decay_rate: decay_rate(&f).ok(),
            f,
            e,
            residual_norm,
        }
    }

    pub fn norm(&self) -> f64 {
        l2(&self.f)
    }
}

pub const RESIDUAL_TOL: f64 = 1e-10;

fn bordered_jacobian(f: &[f64], e: f64, prob: &DnlsProblem) -> DMatrix<f64> {
    let n = prob.n;
    let mut j = DMatrix::zeros(n + 1, n + 1);
    j.view_mut((0, 0), (n, n)).copy_from(&linearization_lplus(f, e, prob));
    for k in 0..n {
        j[(k, n)] = f[k];
        j[(n, k)] = f[k];
    }
    j
}

/// Newton on `(F, E)` with the normalization row `(||F||^2 - 1)/2 = 0`.
pub fn newton_bordered(prob: &DnlsProblem, f0: &[f64], e0: f64) -> Result<DnlsState> {
    let n = prob.n;
    let mut f = f0.to_vec();
    let mut e = e0;
    let mut best = f64::INFINITY;
    let mut stall = 0;
    for _ in 0..60 {
        let r = dnls_residual(&f, e, prob);
        let g = 0.5 * (f.iter().map(|v| v * v).sum::<f64>() - 1.0);
        let size = (l2(&r).powi(2) + g * g).sqrt();
        if !size.is_finite() || size > 1e8 {
            return Err(Error::NonConvergence(format!("Newton diverged (residual {size:e})")));
        }
        if size < 1e-14 {
            break;
        }
        if size < 0.5 * best {
            stall = 0;
        } else {
            stall += 1;
            if stall >= 3 && best < RESIDUAL_TOL {
                break;
            }
            if stall >= 8 {
                break;
            }
        }
        best = best.min(size);
        let mut rhs = DVector::from_iterator(n + 1, r.iter().map(|v| -v).chain(std::iter::once(-g)));
        let lu = bordered_jacobian(&f, e, prob).lu();
        if !lu.solve_mut(&mut rhs) {
            return Err(Error::NonConvergence("singular bordered Jacobian".into()));
        }
        for k in 0..n {
            f[k] += rhs[k];
        }
        e += rhs[n];
    }
    let nf = l2(&f);
    f.iter_mut().for_each(|v| *v /= nf);
    let st = DnlsState::from_solution(prob, f, e);
    if !(st.residual_norm <= RESIDUAL_TOL) {
        return Err(Error::NonConvergence(format!("Newton stalled at residual {:e}", st.residual_norm)));
    }
    Ok(st)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Continuation {
    /// One state per requested path value, in path order.
    pub states: Vec<DnlsState>,
    pub turning_point: bool,
    pub message: Option<String>,
}

/// Continues the single-site state seeded at `centre + seed` from the
/// anticontinuum end of `path` (which must start at `|eta| >= 50` and have
/// nonincreasing `|eta|` of one sign) with adaptive step halving.
pub fn solve_anticontinuum(template: &DnlsProblem, seed: i64, path: &[f64]) -> Result<Continuation> {
    let first = *path.first().ok_or_else(|| Error::Precondition("empty eta path".into()))?;
    if first.abs() < 50.0 {
        return Err(Error::Precondition(format!("path must start at |eta| >= 50, got {first}")));
    }
    for w in path.windows(2) {
        if w[1].abs() > w[0].abs() || w[1] * first < 0.0 {
            return Err(Error::Precondition(format!("path must shrink |eta| without changing sign ({} -> {})", w[0], w[1])));
        }
    }
    let site = template.centre() as i64 + seed;
    if site < 0 || site >= template.n as i64 {
        return Err(Error::Precondition(format!("seed site {seed} outside the lattice")));
    }
    let mut f = vec![0.0; template.n];
    f[site as usize] = 1.0;
    let prob = template.with_eta(first);
    let mut cur = newton_bordered(&prob, &f, -first)?;
    let mut states = vec![cur.clone()];
    let mut eta = first;
    let mut step = 0.0f64;
    for &target in &path[1..] {
        if step == 0.0 {
            step = target - eta;
        }
        while eta != target {
            let remaining = target - eta;
            // Relative cap keeps the predictor inside the basin of the branch.
            let cap = step.abs().min(0.25 * eta.abs() + 0.05);
            let next = if remaining.abs() <= cap { target } else { eta + cap * remaining.signum() };
            let p = template.with_eta(next);
            let guess = tangent_predictor(&template.with_eta(eta), &cur, next - eta);
            let attempt = newton_bordered(&p, &guess.0, guess.1).and_then(|st| {
                let jump = l2(&st.f.iter().zip(&guess.0).map(|(a, b)| a - b).collect::<Vec<_>>());
                if jump > 0.1 {
                    Err(Error::NonConvergence(format!("corrector moved {jump:.3} off the predicted branch")))
                } else {
                    Ok(st)
                }
            });
            match attempt {
                Ok(st) => {
                    cur = st;
                    eta = next;
                    step = 2.0 * step.abs();
                }
                Err(err) => {
                    step = 0.5 * step.abs();
                    if step < 1e-8 * eta.abs().max(1.0) {
                        return Ok(Continuation {
                            states,
                            turning_point: true,
                            message: Some(format!("continuation stopped at eta = {eta}: {err}")),
                        });
                    }
                }
            }
        }
        states.push(cur.clone());
    }
    Ok(Continuation { states, turning_point: false, message: None })
}

fn tangent_predictor(prob: &DnlsProblem, st: &DnlsState, d_eta: f64) -> (Vec<f64>, f64) {
    let n = prob.n;
    let mut rhs = DVector::from_iterator(
        n + 1,
        st.f.iter().map(|v| -v.abs().powf(2.0 * prob.sigma) * v).chain(std::iter::once(0.0)),
    );
    if bordered_jacobian(&st.f, st.e, prob).lu().solve_mut(&mut rhs) {
        let f = st.f.iter().enumerate().map(|(k, v)| v + d_eta * rhs[k]).collect();
        (f, st.e + d_eta * rhs[n])
    } else {
        (st.f.clone(), st.e)
    }
}

/// Discrete Gagliardo-Nirenberg quotient
/// `(sum F^2)^sigma <-delta^2 F, F> / sum |F|^{2 sigma + 2}`.
pub fn weinstein_quotient(f: &[f64], sigma: f64, boundary: Boundary) -> f64 {
    let (q, _) = quotient_and_gradient(f, sigma, boundary);
    q
}

fn quotient_and_gradient(f: &[f64], sigma: f64, boundary: Boundary) -> (f64, Vec<f64>) {
    let n = f.len();
    let prob = DnlsProblem { eta: 0.0, sigma, n, boundary };
    let lap: Vec<f64> = (0..n).map(|k| 2.0 * f[k] - prob.neighbours(f, k)).collect();
    let mass: f64 = f.iter().map(|v| v * v).sum();
    let kin: f64 = f.iter().zip(&lap).map(|(a, b)| a * b).sum();
    let pot: f64 = f.iter().map(|v| v.abs().powf(2.0 * sigma + 2.0)).sum();
    let q = mass.powf(sigma) * kin / pot;
    // Gradient of log q.
    let g = (0..n)
        .map(|k| {
            2.0 * sigma * f[k] / mass + 2.0 * lap[k] / kin
                - (2.0 * sigma + 2.0) * f[k].abs().powf(2.0 * sigma) * f[k] / pot
        })
        .collect();
    (q, g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeinsteinThreshold {
    pub eta_thresh: f64,
    pub quotient: f64,
    /// Below the critical power a minimizer exists for every `eta < 0`.
    pub exists_for_all_eta: bool,
    pub seeds_converged: usize,
}

fn minimize_quotient(mut f: Vec<f64>, sigma: f64) -> (f64, bool) {
    let nrm = l2(&f);
    f.iter_mut().for_each(|v| *v /= nrm);
    let (mut q, mut g) = quotient_and_gradient(&f, sigma, Boundary::Zero);
    let mut lq = q.ln();
    let mut t = 0.1;
    for _ in 0..50_000 {
        let gn = l2(&g);
        if gn < 1e-10 {
            return (q, true);
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            let nt = l2(&trial);
            trial.iter_mut().for_each(|v| *v /= nt);
            let (qt, gt) = quotient_and_gradient(&trial, sigma, Boundary::Zero);
            if qt.is_finite() && qt.ln() <= lq - 1e-4 * t * gn * gn {
                let done = (lq - qt.ln()).abs() < 1e-15;
                f = trial;
                q = qt;
                lq = qt.ln();
                g = gt;
                accepted = true;
                t *= 1.5;
                if done {
                    return (q, true);
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return (q, gn < 1e-6);
        }
    }
    (q, false)
}

/// `(sigma + 1) inf Q` over the zero-boundary lattice of `n` sites.
pub fn weinstein_threshold(sigma: f64, n: usize) -> Result<WeinsteinThreshold> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
    }
    if sigma < 2.0 {
        return Ok(WeinsteinThreshold { eta_thresh: 0.0, quotient: 0.0, exists_for_all_eta: true, seeds_converged: 0 });
    }
    let c = (n / 2) as f64;
    let mut seeds: Vec<Vec<f64>> = vec![(0..n).map(|k| f64::from(k == n / 2) + 1e-3).collect()];
    for w in [1.0, 2.0, 4.0, 8.0] {
        seeds.push((0..n).map(|k| (-((k as f64 - c) / w).powi(2)).exp()).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..3 {
        seeds.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let results: Vec<(f64, bool)> = seeds.into_iter().map(|s| minimize_quotient(s, sigma)).collect();
    let converged = results.iter().filter(|r| r.1).count();
    let best = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    if converged == 0 {
        return Err(Error::NonConvergence(format!("no seed converged; best quotient {best}")));
    }
    Ok(WeinsteinThreshold { eta_thresh: (sigma + 1.0) * best, quotient: best, exists_for_all_eta: false, seeds_converged: converged })
}
