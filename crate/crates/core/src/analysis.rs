//! Convergence of the intertwining integral, the constant `c(lambda)`, the
//! descent identity and the pole ledgers of its meromorphic continuation.
//!
//! The two spectral parameters are related by `s = -p/4 + p lambda / 2`.

use crate::bernstein::{case_b, delta_polynomial};
use crate::error::{Error, Result};
use crate::jets::{Jet, Poly};
use crate::minpoly::fundamental_kernel;
use crate::models::{Case, Element, ModelSpec, TripleSystem};
use crate::rng;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use num_rational::Rational64;
use statrs::function::gamma::ln_gamma;

pub fn lambda_to_s(p: Rational64, lambda: Rational64) -> Rational64 {
    -p / 4 + p * lambda / 2
}

pub fn s_to_lambda(p: Rational64, s: Rational64) -> Rational64 {
    (s + p / 4) * 2 / p
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    pub lambda_min: Rational64,
    pub s_min: Rational64,
}

impl Threshold {
    pub fn lambda_f64(&self) -> f64 {
        to_f64(self.lambda_min)
    }

    pub fn s_f64(&self) -> f64 {
        to_f64(self.s_min)
    }
}

pub fn to_f64(q: Rational64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// `lambda_min = 1/2 - c/p`, `s_min = -c/2`.
pub fn threshold(v: &TripleSystem) -> Threshold {
    let cd = v.table();
    let (c, p) = (cd.c as i64, cd.p as i64);
    let lambda_min = Rational64::new(1, 2) - Rational64::new(c, p);
    let s_min = Rational64::new(-c, 2);
    assert_eq!(lambda_to_s(Rational64::from(p), lambda_min), s_min);
    Threshold { lambda_min, s_min }
}

/// Convergence conditions of the Selberg integral `S_r(alpha, beta, gamma)`.
pub fn selberg_convergent(alpha: f64, beta: f64, gamma: f64, r: usize) -> bool {
    if alpha <= 0.0 || beta <= 0.0 {
        return false;
    }
    let mut bound = 1.0 / r as f64;
    if r > 1 {
        let k = (r - 1) as f64;
        bound = bound.min(alpha / k).min(beta / k);
    }
    gamma > -bound
}

/// Gauss-Jacobi rule on `[0,1]` for the weight `u^a (1-u)^b`, by the
/// Golub-Welsch eigenvalue method.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Config("quadrature needs at least one node".into()));
    }
    if a <= -1.0 || b <= -1.0 {
        return Err(Error::Domain(format!("weight exponents ({a}, {b}) are not integrable")));
    }
    // weight (1-x)^al (1+x)^be on [-1,1] with u = (1+x)/2
    let (al, be) = (b, a);
    let ab = al + be;
    let mut t = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (be - al) / (ab + 2.0)
        } else {
            (be * be - al * al) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        t[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let off = if m == 1.0 {
                4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + al) * (m + be) * (m + ab)
                    / ((2.0 * m + ab).powi(2) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0))
            };
            t[(k, k + 1)] = off.sqrt();
            t[(k + 1, k)] = off.sqrt();
        }
    }
    let ln_mu0 = (ab + 1.0) * 2f64.ln() + ln_gamma(al + 1.0) + ln_gamma(be + 1.0) - ln_gamma(ab + 2.0);
    let eig = SymmetricEigen::new(t);
    let scale = (ln_mu0 - (ab + 1.0) * 2f64.ln()).exp();
    let mut pts: Vec<(f64, f64)> =
        (0..n).map(|i| ((1.0 + eig.eigenvalues[i]) / 2.0, scale * eig.eigenvectors[(0, i)].powi(2))).collect();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(pts.into_iter().unzip())
}

/// Gauss-Legendre rule on `[lo, hi]`.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, w) = gauss_jacobi(n, 0.0, 0.0)?;
    let len = hi - lo;
    Ok((x.iter().map(|u| lo + len * u).collect(), w.iter().map(|wi| wi * len).collect()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuadratureRule {
    /// tensor Gauss-Jacobi in `u_j = cos^2 theta_j`, nodes per axis
    TensorGaussJacobi { nodes: usize },
    /// uniform sampling of the torus
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rule: QuadratureRule::TensorGaussJacobi { nodes: 64 } }
    }
}

/// A quadrature value with its declared error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// Exponents `(A, B)` of the `u^A (1-u)^B` weight after `u = cos^2 theta`.
fn u_exponents(p: f64, c: f64, b: f64, lambda: f64) -> (f64, f64) {
    (0.5 * (p * (lambda - 0.5) + c) - 1.0, 0.5 * (c + b) - 1.0)
}

fn torus_gj(v: &TripleSystem, lambda: f64, n: usize) -> Result<f64> {
    let cd = v.table();
    let (p, c, b) = (cd.p as f64, cd.c as f64, cd.b as f64);
    let (ea, eb) = u_exponents(p, c, b, lambda);
    let k = 2f64.powf(c - 2.0);
    match cd.r {
        1 => {
            let (_, w) = gauss_jacobi(n, ea, eb)?;
            Ok(2.0 * k * w.iter().sum::<f64>())
        }
        2 => {
            // symmetric in (u1, u2); on u1 = t u2 the diagonal factor splits off
            let (ap, am) = (cd.a_plus as f64, cd.a_minus as f64);
            let lo = ap.min(am);
            let (t, wt) = gauss_jacobi(n, ea, lo)?;
            let (u, wu) = gauss_jacobi(n, 2.0 * ea + 1.0 + (ap + am) / 2.0, eb)?;
            let mut acc = 0.0;
            for (&ti, &wi) in t.iter().zip(&wt) {
                for (&uj, &wj) in u.iter().zip(&wu) {
                    let s = (1.0 - uj * ti).sqrt() + (ti * (1.0 - uj)).sqrt();
                    let g = (1.0 - ti).powf(ap - lo) * s.powf(am - ap) + (1.0 - ti).powf(am - lo) * s.powf(ap - am);
                    acc += wi * wj * (1.0 - uj * ti).powf(eb) * g;
                }
            }
            Ok(4.0 * k * k * acc)
        }
        r => Err(Error::Domain(format!("tensor quadrature supports rank 1 and 2, got {r}"))),
    }
}

fn torus_integrand(v: &TripleSystem, lambda: f64, theta: &[f64]) -> f64 {
    let cd = v.table();
    let expo = cd.p as f64 * (lambda - 0.5);
    let cosprod: f64 = theta.iter().map(|t| t.cos().abs()).product();
    let t = crate::kernels::TorusPoint { theta: theta.to_vec() };
    let d = crate::kernels::torus_density(v, &t).unwrap_or(0.0);
    cosprod.powf(expo) * d
}

/// `c(lambda) = int_[0,pi]^r (prod cos^2 theta_j)^(p(lambda - 1/2)/2) D(theta) dtheta`,
/// the torus reduction of `int_X c~(o,y)^(lambda - 1/2) dsigma(y)`.
pub fn c_lambda_numeric(v: &TripleSystem, lambda: f64, spec: &QuadratureSpec) -> Result<Quadrature> {
    let th = threshold(v);
    if lambda <= th.lambda_f64() {
        return Err(Error::Domain(format!("lambda = {lambda} is not beyond the threshold {}", th.lambda_f64())));
    }
    match spec.rule {
        QuadratureRule::TensorGaussJacobi { nodes } => {
            let full = torus_gj(v, lambda, nodes)?;
            let half = torus_gj(v, lambda, (nodes / 2).max(1))?;
            Ok(Quadrature { value: full, error: (full - half).abs() })
        }
        QuadratureRule::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::Config("Monte Carlo needs at least two samples".into()));
            }
            let r = v.rank();
            let vol = std::f64::consts::PI.powi(r as i32);
            let mut g = rng::seeded(seed);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..samples {
                let theta: Vec<f64> = (0..r).map(|_| rng::uniform(&mut g, 0.0, std::f64::consts::PI)).collect();
                let f = torus_integrand(v, lambda, &theta) * vol;
                sum += f;
                sq += f * f;
            }
            let nf = samples as f64;
            let mean = sum / nf;
            let var = (sq / nf - mean * mean).max(0.0);
            Ok(Quadrature { value: mean, error: (var / nf).sqrt() })
        }
    }
}

/// `ln S_r(alpha, beta, gamma)` by Selberg's formula.
pub fn ln_selberg(alpha: f64, beta: f64, gamma: f64, r: usize) -> f64 {
    (0..r)
        .map(|j| {
            let j = j as f64;
            ln_gamma(alpha + j * gamma) + ln_gamma(beta + j * gamma) + ln_gamma(1.0 + (j + 1.0) * gamma)
                - ln_gamma(alpha + beta + (r as f64 + j - 1.0) * gamma)
                - ln_gamma(1.0 + gamma)
        })
        .sum()
}

/// `ln int_R^r prod (1+t_j^2)^(-sigma) prod_(i<j) |t_i - t_j|^(2 gamma) dt`.
pub fn ln_cauchy_selberg(sigma: f64, gamma: f64, r: usize) -> f64 {
    let rf = r as f64;
    let head = rf * std::f64::consts::PI.ln() + (-rf * (2.0 * sigma - 2.0) + gamma * rf * (rf - 1.0)) * 2f64.ln();
    head + (0..r)
        .map(|j| {
            let j = j as f64;
            ln_gamma(2.0 * sigma - 1.0 - (rf + j - 1.0) * gamma) + ln_gamma(1.0 + (j + 1.0) * gamma)
                - ln_gamma(1.0 + gamma)
                - 2.0 * ln_gamma(sigma - j * gamma)
        })
        .sum::<f64>()
}

fn check_gamma_args(args: &[f64]) -> Result<()> {
    if let Some(x) = args.iter().find(|&&x| x <= 0.0) {
        return Err(Error::Domain(format!("Gamma argument {x} is at or beyond a pole")));
    }
    Ok(())
}

/// Exact `ln c(lambda)` with the normalization of [`c_lambda_numeric`]:
/// Selberg's product when `a+ = a-`, the Cauchy form on Euclidean models.
pub fn ln_c_lambda_closed(v: &TripleSystem, lambda: f64) -> Result<f64> {
    let cd = v.table();
    let (p, c, b, a) = (cd.p as f64, cd.c as f64, cd.b as f64, cd.a as f64);
    let r = cd.r;
    if cd.a_plus == cd.a_minus {
        let (ea, eb) = u_exponents(p, c, b, lambda);
        let (alpha, beta, gamma) = (ea + 1.0, eb + 1.0, a / 4.0);
        let args: Vec<f64> = (0..r).map(|j| alpha + j as f64 * gamma).collect();
        check_gamma_args(&args)?;
        Ok(r as f64 * (c - 1.0) * 2f64.ln() + ln_selberg(alpha, beta, gamma, r))
    } else if cd.a_minus == 0 && cd.b == 0 && cd.c == 1 {
        let sigma = p / 2.0 * (0.5 + lambda);
        let gamma = a / 2.0;
        let args: Vec<f64> = (0..r).map(|j| 2.0 * sigma - 1.0 - (r as f64 + j as f64 - 1.0) * gamma).collect();
        check_gamma_args(&args)?;
        Ok(ln_cauchy_selberg(sigma, gamma, r))
    } else {
        Err(Error::Domain(format!("no closed form for c(lambda) on {}", v.name())))
    }
}

/// `c(lambda1) / c(lambda2)` from the Gamma products.
pub fn c_lambda_gamma_ratio(v: &TripleSystem, lambda1: f64, lambda2: f64) -> Result<f64> {
    let lm = threshold(v).lambda_f64();
    if lambda1 <= lm || lambda2 <= lm {
        return Err(Error::Domain(format!("both lambdas must exceed {lm}")));
    }
    Ok((ln_c_lambda_closed(v, lambda1)? - ln_c_lambda_closed(v, lambda2)?).exp())
}

/// `c(lambda)` at `lambda_min + delta_k`, `delta_k = delta0 2^-k`.
pub fn divergence_probe(v: &TripleSystem, steps: usize, delta0: f64, spec: &QuadratureSpec) -> Result<Vec<(f64, f64)>> {
    let lm = threshold(v).lambda_f64();
    (0..steps)
        .map(|k| {
            let lambda = lm + delta0 * 0.5f64.powi(k as i32);
            Ok((lambda, c_lambda_numeric(v, lambda, spec)?.value))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoleFamily {
    pub head: Rational64,
    pub step: Rational64,
    pub description: String,
    pub poles: Vec<Rational64>,
}

/// Poles of the continuation of `J_s`, by family, with the genus for the
/// map to the `lambda` plane.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleLedger {
    pub case: Case,
    pub p: i64,
    pub c: i64,
    pub families: Vec<PoleFamily>,
}

impl PoleLedger {
    pub fn first_pole(&self) -> Rational64 {
        self.s_poles()[0]
    }

    /// All s-poles, merged and sorted decreasingly.
    pub fn s_poles(&self) -> Vec<Rational64> {
        let mut all: Vec<Rational64> = self.families.iter().flat_map(|f| f.poles.iter().copied()).collect();
        all.sort_by(|a, b| b.cmp(a));
        all.dedup();
        all
    }

    pub fn lambda_poles(&self) -> Vec<Rational64> {
        let p = Rational64::from(self.p);
        self.s_poles().into_iter().map(|s| s_to_lambda(p, s)).collect()
    }
}

pub fn pole_ledger(v: &TripleSystem, count: usize) -> PoleLedger {
    let cd = v.table();
    let q = |n: i64, d: i64| Rational64::new(n, d);
    let mut fams: Vec<(Rational64, Rational64)> = Vec::new();
    match v.case() {
        Case::ComplexStructure => {
            let a = cd.a_complex() as i64;
            fams.push((q(-1, 1), q(1, 1)));
            if cd.r >= 2 && a % 2 == 1 {
                fams.push((q(-1, 1) - q(a, 2), q(1, 1)));
            }
        }
        Case::Reduced | Case::ReducedEuclidean => {
            let a = cd.a as i64;
            fams.push((q(-1, 2), q(1, 2)));
            if cd.r >= 2 && a % 2 == 1 {
                fams.push((q(-a, 4) - q(1, 2), q(1, 2)));
            }
        }
        Case::NonReduced => {
            let c = cd.c as i64;
            fams.push((q(-c, 2), q(1, 1)));
            if cd.r >= 2 && c % 2 == 1 {
                fams.push((q(1 - c, 1), q(1, 1)));
            }
        }
    }
    let families = fams
        .into_iter()
        .map(|(head, step)| PoleFamily {
            head,
            step,
            description: if step == q(1, 1) { format!("{head} - k") } else { format!("{head} - k/2") },
            poles: (0..count as i64).map(|k| head - step * k).collect(),
        })
        .collect();
    PoleLedger { case: v.case(), p: cd.p as i64, c: cd.c as i64, families }
}

/// Smallest `m >= 1` with `b(sigma + m) = 0`, checked in exact arithmetic.
pub fn descent_shift(v: &TripleSystem, sigma: Rational64, max_shift: i64) -> Option<i64> {
    let roots = case_b(v).roots();
    (1..=max_shift).find(|&m| roots.contains(&(sigma + m)))
}

/// Smooth bump `exp(-1/((y - lo)(hi - y)))` on `(lo, hi)`, times `scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub lo: f64,
    pub hi: f64,
    pub scale: f64,
}

impl Bump {
    pub fn jet(&self, y: f64, order: usize) -> Result<Jet<Complex64>> {
        let one = Complex64::new(1.0, 0.0);
        let q = Poly::monomial(1, vec![2], -one)
            .add(&Poly::linear(1, &[(0, one * (self.lo + self.hi))]))
            .add(&Poly::constant(1, one * (-self.lo * self.hi)));
        let qj = crate::jets::jet_of_polynomial(&q, &[one * y], order)?;
        if qj.value().re <= 0.0 {
            return Jet::zero(1, order);
        }
        Ok(qj.recip()?.scale(-one).exp().scale(one * self.scale))
    }
}

/// Both sides of `J_(s-1) f = b(s)^-1 J_s (B_s^t f)` at `x`, with
/// `J_s f (x) = int k(x,y)^s f(y) dy`, on a one-dimensional reduced model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Descent {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_error: f64,
}

pub fn verify_descent(v: &TripleSystem, s: f64, f: &Bump, x: f64, nodes: usize) -> Result<Descent> {
    if v.dim() != 1 || !matches!(v.case(), Case::Reduced | Case::ReducedEuclidean) {
        return Err(Error::Domain(format!(
            "descent check is implemented for one-dimensional models, not {}",
            v.name()
        )));
    }
    if f.lo <= 0.0 || f.hi <= f.lo {
        return Err(Error::Domain("bump support must lie in the positive half-line".into()));
    }
    if s <= threshold(v).s_f64() + 1.0 {
        return Err(Error::Domain(format!("s = {s} is too small for absolute convergence of both sides")));
    }
    let e = delta_polynomial(v)?;
    let b = case_b(v).eval(s);
    let (ys, ws) = gauss_legendre(nodes, f.lo, f.hi)?;
    let xe = Element::from_vec(vec![x]);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for (&y, &w) in ys.iter().zip(&ws) {
        let k = fundamental_kernel(v, &xe, &Element::from_vec(vec![y]))?;
        let fj = f.jet(y, 2)?;
        let inner = e.e_s_transpose_jet(2.0 * s - 1.0, &fj, &[y])?;
        let bt = e.apply_e_s_transpose(2.0 * s, &inner, &[y])?;
        lhs += w * k.powf(s - 1.0) * fj.value().re;
        rhs += w * k.powf(s) * bt.re;
    }
    rhs /= b;
    let denom = lhs.abs().max(rhs.abs());
    let relative_error = if denom == 0.0 { 0.0 } else { (lhs - rhs).abs() / denom };
    Ok(Descent { lhs, rhs, relative_error })
}

/// Default model for the descent check.
pub fn descent_model() -> ModelSpec {
    ModelSpec::Sym(1)
}
