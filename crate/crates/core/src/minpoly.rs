//! Generic minimal polynomial `m(T,x,y)` and the fundamental kernels `h`, `k`.
//!
//! The coefficients are obtained from the relation
//! `x^(rho+1,y) + sum_j (-1)^j m_j(x,y) x^(rho+1-j,y) = 0`
//! by least squares on the span of the Jordan powers.

use crate::error::{Error, Result};
use crate::models::{Case, Element, TripleSystem};
use crate::rng;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Smallest admissible `sigma_min / sigma_max` of the power matrix.
pub const REGULAR_THRESHOLD: f64 = 1e-9;
/// Below this ratio kernel evaluations switch to interpolation along a line.
const INTERPOLATE_THRESHOLD: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct MinPoly<T> {
    pub rho: usize,
    /// `m_1 .. m_rho`
    pub m: Vec<T>,
    /// relative least-squares defect
    pub residual: f64,
    pub sigma_ratio: f64,
    pub interpolated: bool,
}

pub type MinPolyResult = MinPoly<f64>;

impl<T: Copy + Into<Complex64>> MinPoly<T> {
    /// `h = 1 + sum m_k`.
    pub fn h(&self) -> Complex64 {
        self.m.iter().fold(Complex64::new(1.0, 0.0), |acc, &v| acc + v.into())
    }

    /// `m(T) = T^rho + sum (-1)^j m_j T^(rho-j)`.
    pub fn eval(&self, t: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (j, &mj) in self.m.iter().enumerate() {
            let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
            acc = acc * t + sign * mj.into();
        }
        acc
    }
}

/// `x^(k,y)` with `x^(1,y) = x` and `x^(k+1,y) = {x, y, x^(k,y)}`.
pub fn jordan_power(v: &TripleSystem, x: &Element, y: &Element, k: usize) -> Result<Element> {
    v.check_dim(x)?;
    v.check_dim(y)?;
    if k == 0 {
        return Err(Error::Domain("Jordan powers start at k = 1".into()));
    }
    Ok(jordan_powers(v, x, y, k).pop().expect("k >= 1"))
}

/// `[x^(1,y), ..., x^(k,y)]`.
pub fn jordan_powers(v: &TripleSystem, x: &Element, y: &Element, k: usize) -> Vec<Element> {
    let mut out = Vec::with_capacity(k);
    let mut cur = x.clone();
    for _ in 0..k {
        let next = v.product(x.as_slice(), y.as_slice(), cur.as_slice());
        out.push(cur);
        cur = next;
    }
    out
}

/// Degree of the real generic minimal polynomial predicted by the case.
pub fn real_rank(v: &TripleSystem) -> usize {
    match v.case() {
        Case::ComplexStructure | Case::NonReduced => 2 * v.rank(),
        Case::Reduced | Case::ReducedEuclidean => v.rank(),
    }
}

/// Numeric rank of the power sequence at a seeded random pair, checked
/// against [`real_rank`].
pub fn absolute_rank(v: &TripleSystem) -> Result<usize> {
    let n = v.dim();
    let mut g = rng::seeded(0xab5_0000 + n as u64);
    let x = rng::gaussian(&mut g, n, 1.0).normalize();
    let y = rng::gaussian(&mut g, n, 1.0).normalize();
    let kmax = (2 * v.rank() + 2).min(n);
    let pw = jordan_powers(v, &x, &y, kmax);
    let mut rank = 0;
    for k in 1..=kmax {
        let m = DMatrix::from_fn(n, k, |i, j| pw[j][i] / pw[j].norm());
        let sv = m.singular_values();
        if sv.min() < REGULAR_THRESHOLD * sv.max() {
            break;
        }
        rank = k;
    }
    let expected = real_rank(v);
    if rank != expected {
        return Err(Error::Consistency(format!(
            "{}: sampled absolute rank {rank} differs from predicted {expected}",
            v.name()
        )));
    }
    Ok(rank)
}

fn scales(x: &Element, y: &Element) -> Option<(f64, f64)> {
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || ny == 0.0 {
        None
    } else {
        Some((nx, ny))
    }
}

fn solve_real(v: &TripleSystem, x: &Element, y: &Element, rho: usize) -> MinPoly<f64> {
    let Some((nx, ny)) = scales(x, y) else {
        return MinPoly { rho, m: vec![0.0; rho], residual: 0.0, sigma_ratio: 1.0, interpolated: false };
    };
    let pw = jordan_powers(v, &(x / nx), &(y / ny), rho + 1);
    let n = v.dim();
    let a = DMatrix::from_fn(n, rho, |i, j| pw[rho - 1 - j][i]);
    let b = -&pw[rho];
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let ratio = if sv.max() > 0.0 { sv.min() / sv.max() } else { 0.0 };
    let c = svd.solve(&b, 0.0).unwrap_or_else(|_| DVector::zeros(rho));
    let res = (&a * &c - &b).norm() / b.norm().max(f64::MIN_POSITIVE);
    let s = nx * ny;
    let m = (0..rho)
        .map(|j| {
            let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
            sign * c[j] * s.powi(j as i32 + 1)
        })
        .collect();
    MinPoly { rho, m, residual: res, sigma_ratio: ratio, interpolated: false }
}

fn solve_complex(v: &TripleSystem, x: &Element, y: &Element, rho: usize) -> MinPoly<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let Some((nx, ny)) = scales(x, y) else {
        return MinPoly { rho, m: vec![zero; rho], residual: 0.0, sigma_ratio: 1.0, interpolated: false };
    };
    let pw = jordan_powers(v, &(x / nx), &(y / ny), rho + 1);
    let half = v.dim() / 2;
    let cz = |e: &Element, t: usize| Complex64::new(e[t], e[half + t]);
    let a = DMatrix::from_fn(half, rho, |i, j| cz(&pw[rho - 1 - j], i));
    let b = DVector::from_fn(half, |i, _| -cz(&pw[rho], i));
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let ratio = if sv.max() > 0.0 { sv.min() / sv.max() } else { 0.0 };
    let c = svd.solve(&b, 0.0).unwrap_or_else(|_| DVector::from_element(rho, zero));
    let res = (&a * &c - &b).norm() / b.norm().max(f64::MIN_POSITIVE);
    let s = nx * ny;
    let m = (0..rho)
        .map(|j| {
            let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
            c[j] * (sign * s.powi(j as i32 + 1))
        })
        .collect();
    MinPoly { rho, m, residual: res, sigma_ratio: ratio, interpolated: false }
}

fn require_regular<T>(p: MinPoly<T>) -> Result<MinPoly<T>> {
    if p.sigma_ratio < REGULAR_THRESHOLD {
        return Err(Error::RankDeficient(format!("non-regular pair: sigma_min/sigma_max = {:e}", p.sigma_ratio)));
    }
    Ok(p)
}

/// Real generic minimal polynomial of degree [`real_rank`] at a regular pair.
pub fn minpoly_coeffs(v: &TripleSystem, x: &Element, y: &Element) -> Result<MinPolyResult> {
    v.check_dim(x)?;
    v.check_dim(y)?;
    require_regular(solve_real(v, x, y, real_rank(v)))
}

/// Complex generic minimal polynomial (degree `r`) of a complex-structure
/// model, computed in the coordinates `z_t = x_t + i x_{N+t}`.
pub fn complex_minpoly_coeffs(v: &TripleSystem, x: &Element, y: &Element) -> Result<MinPoly<Complex64>> {
    v.check_dim(x)?;
    v.check_dim(y)?;
    if v.complex_structure().is_none() {
        return Err(Error::Domain(format!("{} has no complex structure", v.name())));
    }
    require_regular(solve_complex(v, x, y, v.rank()))
}

/// Lagrange weights for evaluating the interpolant at zero.
fn weights_at_zero(nodes: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, &ei)| nodes.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &ek)| -ek / (ei - ek)).product())
        .collect()
}

/// Coefficients of the intrinsic minimal polynomial at any pair: complex of
/// degree `r` for complex-structure models, real of degree [`real_rank`]
/// otherwise. Near non-regular pairs the `m_j` (polynomials of degree at most
/// `2 rho` along any line) are recovered by exact interpolation from
/// perturbed regular pairs on a seeded line through `(x,y)`.
pub fn minpoly_any(v: &TripleSystem, x: &Element, y: &Element) -> Result<MinPoly<Complex64>> {
    v.check_dim(x)?;
    v.check_dim(y)?;
    let complex = v.complex_structure().is_some();
    let rho = if complex { v.rank() } else { real_rank(v) };
    let direct = |x: &Element, y: &Element| -> MinPoly<Complex64> {
        if complex {
            solve_complex(v, x, y, rho)
        } else {
            let p = solve_real(v, x, y, rho);
            MinPoly {
                rho,
                m: p.m.iter().map(|&t| Complex64::new(t, 0.0)).collect(),
                residual: p.residual,
                sigma_ratio: p.sigma_ratio,
                interpolated: false,
            }
        }
    };
    let p = direct(x, y);
    if p.sigma_ratio >= INTERPOLATE_THRESHOLD {
        return Ok(p);
    }
    let n = v.dim();
    let base_seed = rng::seed_from(&[x.as_slice(), y.as_slice()]);
    let scale = x.norm().max(y.norm()).max(1e-3);
    let nodes: Vec<f64> = (1..=rho as i32 + 1).flat_map(|i| [i as f64, -(i as f64)]).collect();
    let w = weights_at_zero(&nodes);
    for attempt in 0..4u64 {
        let mut g = rng::seeded(base_seed.wrapping_add(attempt));
        let u = rng::gaussian(&mut g, n, 1.0).normalize();
        let dv = rng::gaussian(&mut g, n, 1.0).normalize();
        let delta = 0.3 * scale;
        let mut acc = vec![Complex64::new(0.0, 0.0); rho];
        let mut worst_ratio = f64::INFINITY;
        let mut worst_res: f64 = 0.0;
        for (&e, &wi) in nodes.iter().zip(&w) {
            let q = direct(&(x + &u * (e * delta)), &(y + &dv * (e * delta)));
            worst_ratio = worst_ratio.min(q.sigma_ratio);
            worst_res = worst_res.max(q.residual);
            for (a, m) in acc.iter_mut().zip(&q.m) {
                *a += m * wi;
            }
        }
        if worst_ratio >= INTERPOLATE_THRESHOLD {
            return Ok(MinPoly { rho, m: acc, residual: worst_res, sigma_ratio: worst_ratio, interpolated: true });
        }
    }
    Err(Error::RankDeficient("could not find regular pairs near the input".into()))
}

/// `h(x,y) = sum_{k=0}^{rho} m_k(x,y)`; complex only on complex-structure models.
pub fn h_kernel(v: &TripleSystem, x: &Element, y: &Element) -> Result<Complex64> {
    Ok(minpoly_any(v, x, y)?.h())
}

/// `k = |h|^2` (complex structure), `h^2` (reduced) or `h` (non-reduced).
pub fn fundamental_kernel(v: &TripleSystem, x: &Element, y: &Element) -> Result<f64> {
    let h = h_kernel(v, x, y)?;
    Ok(kernel_from_h(v.case(), h))
}

pub fn kernel_from_h(case: Case, h: Complex64) -> f64 {
    match case {
        Case::ComplexStructure => h.norm_sqr(),
        Case::Reduced | Case::ReducedEuclidean => h.re * h.re,
        Case::NonReduced => h.re,
    }
}

/// Elementary symmetric polynomials `e_1 .. e_k` of `vals`.
pub fn elementary_symmetric(vals: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; vals.len() + 1];
    e[0] = 1.0;
    for (i, &v) in vals.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e.remove(0);
    e
}

/// Expected `m_k(x,x)` on the flat `x = sum t_j c_j`, for the polynomial of
/// degree `rho`: each `t_j^2` counted `rho / r` times.
pub fn flat_minpoly_oracle(t: &[f64], rho: usize) -> Vec<f64> {
    let rep = rho / t.len();
    let sq: Vec<f64> = t.iter().flat_map(|&tj| std::iter::repeat_n(tj * tj, rep)).collect();
    elementary_symmetric(&sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, hermitify, zoo, ModelSpec};
    use crate::operators::{sigma, structure_element};
    use crate::spectral::joint_peirce;

    fn rand_pair(v: &TripleSystem, seed: u64) -> (Element, Element) {
        let mut g = rng::seeded(seed);
        (rng::gaussian(&mut g, v.dim(), 1.0), rng::gaussian(&mut g, v.dim(), 1.0))
    }

    #[test]
    fn power_examples() {
        let v = build_model(ModelSpec::Sym(3)).unwrap();
        let (x, y) = rand_pair(&v, 1);
        let q = crate::operators::q_op(&v, &x).unwrap();
        assert!((jordan_power(&v, &x, &y, 2).unwrap() - q * &y).amax() < 1e-13);
        let z = v.zero();
        assert_eq!(jordan_power(&v, &x, &z, 3).unwrap(), z);
        let t = [0.5, -1.2, 2.0];
        let xf = v.flat_point(&t).unwrap();
        for k in 1..5 {
            let want: Vec<f64> = t.iter().map(|tj: &f64| tj.powi(2 * k as i32 - 1)).collect();
            let got = jordan_power(&v, &xf, &xf, k).unwrap();
            assert!((got - v.flat_point(&want).unwrap()).amax() < 1e-12);
        }
    }

    #[test]
    fn absolute_ranks() {
        for spec in zoo() {
            let v = build_model(spec).unwrap();
            let rho = absolute_rank(&v).unwrap();
            match spec {
                ModelSpec::Sym(r) => assert_eq!(rho, r),
                ModelSpec::Sphere(_) => assert_eq!(rho, 2),
                _ => {}
            }
        }
    }

    #[test]
    fn flat_coefficients_reduced() {
        let v = build_model(ModelSpec::Sym(3)).unwrap();
        let t = [0.4, -1.3, 0.9];
        let x = v.flat_point(&t).unwrap();
        let p = minpoly_coeffs(&v, &x, &x).unwrap();
        for (a, b) in p.m.iter().zip(flat_minpoly_oracle(&t, 3)) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn zero_argument() {
        let v = build_model(ModelSpec::Sym(2)).unwrap();
        let (_, y) = rand_pair(&v, 2);
        let p = minpoly_any(&v, &v.zero(), &y).unwrap();
        assert!(p.m.iter().all(|m| m.norm() == 0.0));
        assert_eq!(h_kernel(&v, &y, &v.zero()).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(fundamental_kernel(&v, &y, &v.zero()).unwrap(), 1.0);
    }

    #[test]
    fn resubstitution() {
        for spec in zoo() {
            let v = build_model(spec).unwrap();
            let (x, y) = rand_pair(&v, 3);
            let p = minpoly_coeffs(&v, &x, &y).unwrap();
            assert!(p.residual < 1e-9, "{spec}: {}", p.residual);
        }
    }

    #[test]
    fn sphere_closed_form() {
        for n in 3..=5 {
            let v = build_model(ModelSpec::Sphere(n)).unwrap();
            let (x, y) = rand_pair(&v, 4);
            let p = minpoly_coeffs(&v, &x, &y).unwrap();
            let xy = x.dot(&y);
            assert!((p.m[0] - 2.0 * xy).abs() < 1e-10);
            assert!((p.m[1] - x.norm_squared() * y.norm_squared()).abs() < 1e-9);
            let e = v.basis(0);
            let h = h_kernel(&v, &e, &e).unwrap();
            assert!((h.re - 4.0).abs() < 1e-9 && h.im == 0.0);
            assert!((fundamental_kernel(&v, &e, &e).unwrap() - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_h_matches_fitted_quadratic() {
        // fit h(t x, y) as a quadratic in t from three values; compare with 1 + 2(x,y) + |x|^2|y|^2
        let v = build_model(ModelSpec::Sphere(4)).unwrap();
        let (x, y) = rand_pair(&v, 5);
        let f = |t: f64| h_kernel(&v, &(&x * t), &y).unwrap().re;
        let (f0, f1, fm) = (f(0.0), f(1.0), f(-1.0));
        let c1 = (f1 - fm) / 2.0;
        let c2 = (f1 + fm) / 2.0 - f0;
        assert!((f0 - 1.0).abs() < 1e-12);
        assert!((c1 - 2.0 * x.dot(&y)).abs() < 1e-9);
        assert!((c2 - x.norm_squared() * y.norm_squared()).abs() < 1e-9);
    }

    #[test]
    fn complex_flat_product_formula() {
        let v = build_model(ModelSpec::Cmat(2, 2)).unwrap();
        let t = [0.7, -1.1];
        let s = [1.3, 0.2];
        let x = v.flat_point(&t).unwrap();
        let y = v.flat_point(&s).unwrap();
        let h = h_kernel(&v, &x, &y).unwrap();
        let want: f64 = t.iter().zip(&s).map(|(a, b)| 1.0 + a * b).product();
        assert!((h - want).norm() < 1e-10);
        // complex flat coordinates: x = sum z_j c_j with J-rotation
        let j = v.complex_structure().unwrap();
        let xz = &x * 0.3 + j * &x * 0.8;
        let h = h_kernel(&v, &xz, &y).unwrap();
        let want: Complex64 = t.iter().zip(&s).map(|(a, b)| 1.0 + Complex64::new(0.3 * a, 0.8 * a) * b).product();
        assert!((h - want).norm() < 1e-10);
    }

    #[test]
    fn kernel_on_flats() {
        let v = build_model(ModelSpec::Sym(2)).unwrap();
        let t = [0.6, 1.7];
        let x = v.flat_point(&t).unwrap();
        let k = fundamental_kernel(&v, &x, &x).unwrap();
        let want: f64 = t.iter().map(|a| (1.0 + a * a).powi(2)).product();
        assert!((k - want).abs() < 1e-9 * want);
        // t_1 = t_2 makes the pair non-regular
        let x = v.flat_point(&[0.8, 0.8]).unwrap();
        let k = fundamental_kernel(&v, &x, &x).unwrap();
        assert!((k - 1.64f64.powi(4)).abs() < 1e-8);
    }

    #[test]
    fn symmetry_of_k() {
        for spec in zoo() {
            let v = build_model(spec).unwrap();
            let (x, y) = rand_pair(&v, 6);
            let (x, y) = (x * 0.5, y * 0.5);
            let a = fundamental_kernel(&v, &x, &y).unwrap();
            let b = fundamental_kernel(&v, &y, &x).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{spec}: {a} {b}");
        }
    }

    #[test]
    fn structure_group_invariance() {
        for spec in [ModelSpec::Sym(3), ModelSpec::Spin(2, 3), ModelSpec::Sphere(4), ModelSpec::Cmat(2, 2)] {
            let v = build_model(spec).unwrap();
            let (x, y) = rand_pair(&v, 7);
            let (u, w) = rand_pair(&v, 8);
            let g = structure_element(&v, &(u * 0.2), &(w * 0.2)).unwrap();
            let sg = sigma(&g).unwrap();
            let a = minpoly_coeffs(&v, &x, &y).unwrap();
            let b = minpoly_coeffs(&v, &(&g * &x), &(&sg * &y)).unwrap();
            for (ma, mb) in a.m.iter().zip(&b.m) {
                assert!((ma - mb).abs() <= 1e-8 * ma.abs().max(1.0), "{spec}");
            }
        }
    }

    #[test]
    fn peirce_restriction_of_h() {
        let v = build_model(ModelSpec::Rect(2, 3)).unwrap();
        let jp = joint_peirce(&v, v.frame()).unwrap();
        let (p2, p1) = (jp.v2_projection(), jp.v1_projection());
        let (x, y) = rand_pair(&v, 9);
        let (x2, x1, y2) = (&p2 * &x, &p1 * &x, &p2 * &y);
        let a = h_kernel(&v, &(&x2 + &x1), &y2).unwrap();
        let b = h_kernel(&v, &x2, &y2).unwrap();
        assert!((a - b).norm() <= 1e-9 * b.norm());
    }

    #[test]
    fn hermitification_restricts_minpoly() {
        for spec in [ModelSpec::Sym(2), ModelSpec::Sphere(3), ModelSpec::Spin(1, 2)] {
            let v = build_model(spec).unwrap();
            let h = hermitify(&v).unwrap();
            let (x, y) = rand_pair(&v, 10);
            let real = minpoly_coeffs(&v, &x, &y).unwrap();
            let cplx = complex_minpoly_coeffs(&h, &h.embed_real(&x).unwrap(), &h.embed_real(&y).unwrap()).unwrap();
            assert_eq!(real.rho, cplx.rho);
            for (a, b) in real.m.iter().zip(&cplx.m) {
                assert!((b - a).norm() <= 1e-9 * a.abs().max(1.0), "{spec}");
            }
        }
    }

    #[test]
    fn elementary_symmetric_small() {
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0]), vec![6.0, 11.0, 6.0]);
        assert_eq!(flat_minpoly_oracle(&[2.0], 2), vec![8.0, 16.0]);
    }
}
