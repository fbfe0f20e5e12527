//! Canonical kernel `c(x,y) = |det C(x,y)|` and its compact picture.

use crate::error::{Error, Result};
use crate::minpoly::fundamental_kernel;
use crate::models::{Element, LinOp, TripleSystem};
use crate::operators::{dual_bergman, l_op, sigma};
use crate::rng;
use crate::spectral::peirce;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub fn canonical_kernel(v: &TripleSystem, x: &Element, y: &Element) -> Result<f64> {
    Ok(dual_bergman(v, x, y)?.determinant().abs())
}

/// Complex determinant of `C(x,y)` on a complex-structure model.
pub fn complex_canonical_kernel(v: &TripleSystem, x: &Element, y: &Element) -> Result<Complex64> {
    if v.complex_structure().is_none() {
        return Err(Error::Domain(format!("{} has no complex structure", v.name())));
    }
    let c = dual_bergman(v, x, y)?;
    let n = v.dim() / 2;
    let cz = DMatrix::from_fn(n, n, |a, b| Complex64::new(c[(a, b)], c[(n + a, b)]));
    Ok(cz.determinant())
}

/// Largest `|c - k^(p/2)| / c` over seeded samples with `k > 0`.
pub fn verify_power_identity(v: &TripleSystem, samples: usize, seed: u64) -> Result<f64> {
    let p = v.table().p as f64;
    let mut g = rng::seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = rng::gaussian(&mut g, v.dim(), 0.6);
        let y = rng::gaussian(&mut g, v.dim(), 0.6);
        let k = fundamental_kernel(v, &x, &y)?;
        if k <= 1e-12 {
            continue;
        }
        let c = canonical_kernel(v, &x, &y)?;
        worst = worst.max((c - k.powf(p / 2.0)).abs() / c);
    }
    Ok(worst)
}

/// `|c(gx, sigma(g)y) - c(x,y)| / c(x,y)` for `g = exp(L(u,w))`.
pub fn covariance_check(v: &TripleSystem, u: &Element, w: &Element, x: &Element, y: &Element) -> Result<f64> {
    let g = l_op(v, u, w)?.exp();
    let sg = sigma(&g).ok_or_else(|| Error::Degenerate("exp(L(u,v)) not invertible".into()))?;
    let c0 = canonical_kernel(v, x, y)?;
    let c1 = canonical_kernel(v, &(&g * x), &(&sg * y))?;
    Ok((c1 - c0).abs() / c0)
}

/// `exp(L(u,w) - L(w,u))`, an automorphism of the triple system.
pub fn automorphism(v: &TripleSystem, u: &Element, w: &Element) -> Result<LinOp> {
    Ok((l_op(v, u, w)? - l_op(v, w, u)?).exp())
}

/// `|c(x2+x1, y2) - c(x2, y2)| / c(x2, y2)` with `x2, y2` the `V(c,1)`
/// components and `x1` the `V(c,1/2)` component of the inputs.
pub fn peirce_restriction_check(
    v: &TripleSystem,
    c_max: &Element,
    x1: &Element,
    x2: &Element,
    y2: &Element,
) -> Result<f64> {
    let pd = peirce(v, c_max)?;
    if pd.d0 != 0 {
        return Err(Error::Domain("tripotent is not maximal".into()));
    }
    let (x1, x2, y2) = (&pd.p_half * x1, &pd.p1 * x2, &pd.p1 * y2);
    let a = canonical_kernel(v, &(&x2 + &x1), &y2)?;
    let b = canonical_kernel(v, &x2, &y2)?;
    Ok((a - b).abs() / b)
}

/// Angles `theta_j` of the torus point `Exp(sum theta_j c_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusPoint {
    pub theta: Vec<f64>,
}

/// `c~(o, a_theta(o)) = (prod cos^2 theta_j)^(p/2)`.
pub fn compact_kernel(v: &TripleSystem, t: &TorusPoint) -> Result<f64> {
    if t.theta.len() != v.rank() {
        return Err(Error::Dimension { expected: v.rank(), got: t.theta.len() });
    }
    let prod: f64 = t.theta.iter().map(|th| th.cos().powi(2)).product();
    Ok(prod.powf(v.table().p as f64 / 2.0))
}

/// `c(x,x)^(-1/2) c(x,y) c(y,y)^(-1/2)`.
pub fn compact_kernel_pair(v: &TripleSystem, x: &Element, y: &Element) -> Result<f64> {
    let cxx = canonical_kernel(v, x, x)?;
    let cyy = canonical_kernel(v, y, y)?;
    Ok(canonical_kernel(v, x, y)? / (cxx * cyy).sqrt())
}

/// `c(x,x)^(-1/2)`, the density of the invariant measure in the chart.
pub fn invariant_density(v: &TripleSystem, x: &Element) -> Result<f64> {
    Ok(canonical_kernel(v, x, x)?.powf(-0.5))
}

/// Torus density `D(a)` of the integration formula on the compact space.
pub fn torus_density(v: &TripleSystem, t: &TorusPoint) -> Result<f64> {
    let cd = v.table();
    if t.theta.len() != cd.r {
        return Err(Error::Dimension { expected: cd.r, got: t.theta.len() });
    }
    let th = &t.theta;
    let mut d = 1.0;
    for (i, &ti) in th.iter().enumerate() {
        d *= (2.0 * ti).sin().powi(cd.c as i32 - 1) * ti.sin().powi(cd.b as i32);
        for &tj in &th[i + 1..] {
            d *= (ti - tj).sin().powi(cd.a_plus as i32) * (ti + tj).sin().powi(cd.a_minus as i32);
        }
    }
    Ok(d.abs())
}

/// Exponent recovered by regressing `log c(x,x)` on `log prod(1+t_j^2)` at
/// seeded flat points.
pub fn fitted_genus(v: &TripleSystem, samples: usize, seed: u64) -> Result<f64> {
    let mut g = rng::seeded(seed);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for _ in 0..samples {
        let t: Vec<f64> = (0..v.rank()).map(|_| rng::normal(&mut g)).collect();
        let x = v.flat_point(&t)?;
        let lx: f64 = t.iter().map(|tj| (1.0 + tj * tj).ln()).sum();
        let ly = canonical_kernel(v, &x, &x)?.ln();
        sxy += lx * ly;
        sxx += lx * lx;
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, zoo, ModelSpec};

    #[test]
    fn kernel_basics() {
        let v = build_model(ModelSpec::Sym(2)).unwrap();
        let z = v.zero();
        assert_eq!(canonical_kernel(&v, &z, &z).unwrap(), 1.0);
        assert_eq!(invariant_density(&v, &z).unwrap(), 1.0);
        let t = [0.3, -1.4];
        let x = v.flat_point(&t).unwrap();
        let want: f64 = t.iter().map(|a| 1.0 + a * a).product::<f64>().powi(3);
        assert!((canonical_kernel(&v, &x, &x).unwrap() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn complex_line() {
        let v = build_model(ModelSpec::Cmat(1, 1)).unwrap();
        let one = Element::from_vec(vec![1.0, 0.0]);
        assert!((canonical_kernel(&v, &one, &one).unwrap() - 16.0).abs() < 1e-12);
        assert!((complex_canonical_kernel(&v, &one, &one).unwrap() - 4.0).norm() < 1e-12);
    }

    #[test]
    fn power_identity_all_cases() {
        for spec in zoo() {
            let v = build_model(spec).unwrap();
            let err = verify_power_identity(&v, 40, 17).unwrap();
            assert!(err < 1e-8, "{spec}: {err}");
        }
    }

    #[test]
    fn sphere_diagonal_values() {
        let v = build_model(ModelSpec::Sphere(4)).unwrap();
        let t = 0.7;
        let x = v.basis(0) * t;
        let c = canonical_kernel(&v, &x, &x).unwrap();
        assert!((c - (1.0 + t * t).powi(8)).abs() < 1e-10 * c);
        let x = (v.basis(1) + v.basis(2)) * std::f64::consts::FRAC_1_SQRT_2;
        assert!((invariant_density(&v, &x).unwrap() - 2f64.powi(-4)).abs() < 1e-14);
    }

    #[test]
    fn covariance_and_automorphisms() {
        let v = build_model(ModelSpec::Sym(2)).unwrap();
        let mut g = rng::seeded(5);
        let mut r = || rng::gaussian(&mut g, 3, 0.3);
        let (u, w, x, y) = (r(), r(), r(), r());
        assert_eq!(covariance_check(&v, &v.zero(), &v.zero(), &x, &y).unwrap(), 0.0);
        assert!(covariance_check(&v, &u, &w, &x, &y).unwrap() < 1e-8);
        let k = automorphism(&v, &u, &w).unwrap();
        assert!((k.transpose() * &k - LinOp::identity(3, 3)).amax() < 1e-12);
        let a = canonical_kernel(&v, &(&k * &x), &(&k * &y)).unwrap();
        let b = canonical_kernel(&v, &x, &y).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn peirce_restriction() {
        let v = build_model(ModelSpec::Rect(2, 3)).unwrap();
        let mut g = rng::seeded(6);
        let mut r = || rng::gaussian(&mut g, 6, 0.8);
        let (x1, x2, y2) = (r(), r(), r());
        let e = v.frame_sum();
        assert!(peirce_restriction_check(&v, &e, &x1, &x2, &y2).unwrap() < 1e-9);
        assert_eq!(peirce_restriction_check(&v, &e, &v.zero(), &x2, &y2).unwrap(), 0.0);
    }

    #[test]
    fn compact_picture() {
        let v = build_model(ModelSpec::Spin(2, 3)).unwrap();
        let th = TorusPoint { theta: vec![0.4, 1.1] };
        let x = v.flat_point(&[0.4f64.tan(), 1.1f64.tan()]).unwrap();
        let a = compact_kernel(&v, &th).unwrap();
        assert!((a - invariant_density(&v, &x).unwrap()).abs() < 1e-12 * a);
        assert!((compact_kernel_pair(&v, &x, &v.zero()).unwrap() - a).abs() < 1e-12 * a);
        assert!((compact_kernel_pair(&v, &x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(compact_kernel(&v, &TorusPoint { theta: vec![0.0, 0.0] }).unwrap(), 1.0);
        assert!(compact_kernel(&v, &TorusPoint { theta: vec![std::f64::consts::FRAC_PI_2, 0.3] }).unwrap() < 1e-30);
    }

    #[test]
    fn torus_density_vanishes_on_roots() {
        let v = build_model(ModelSpec::Spin(2, 3)).unwrap();
        let d = |a: f64, b: f64| torus_density(&v, &TorusPoint { theta: vec![a, b] }).unwrap();
        assert!(d(0.3, 1.2) > 0.0);
        assert!(d(0.7, 0.7) < 1e-15);
        assert!(d(0.7, std::f64::consts::PI - 0.7) < 1e-15);
    }

    #[test]
    fn genus_fit() {
        for spec in zoo() {
            let v = build_model(spec).unwrap();
            let p = fitted_genus(&v, 10, 3).unwrap();
            assert!((p - v.table().p as f64).abs() < 1e-9, "{spec}: {p}");
        }
    }
}
