//! Bernstein-Sato operators for the fundamental kernel.
//!
//! For a tube model with maximal tripotent `e`, `V(e,1)` is a Jordan algebra
//! `J` with product `x o y = {x,e,y}`, rank `rho` and degree `d`. With `Delta`
//! its determinant and `Delta(d)` the constant-coefficient operator whose
//! symbol, for the pairing `(x, xi) = tr(x o xi)`, is `Delta(xi)`:
//!
//! ```text
//! D_s = Delta^(1+s) Delta(d) Delta^(-s)
//! E_s = (-1)^rho D_(s*),   s* = s + d (rho - 1) / 2
//! E_s h(., y)^s = b(s) h(., y)^(s-1),   b(s) = prod_j (s + (j-1) d / 2)
//! ```
//!
//! On complex-structure models everything is holomorphic in the complex
//! coordinates `z_t = x_t + i x_{N+t}` and the antiholomorphic twin is the
//! coefficient-wise conjugate. All operators act on [`Jet`]s in the real
//! coordinates of the model; a jet of order `m` yields a jet of order
//! `m - rho`.
//!
//! Non-tube models are handled on the tube sub-model `V_2 = V(e,1)` of a
//! maximal tripotent, after checking that `h` restricts.

use crate::error::{Error, Result};
use crate::jets::{apply_const_op, apply_const_op_jet, jet_of_polynomial, Jet, Poly};
use crate::minpoly::{h_kernel, real_rank};
use crate::models::{build_model, matrix_entry_map, Case, Element, LinOp, ModelSpec, Origin, TripleSystem};
use crate::operators::l_op_unchecked;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Rational64;

type C = Complex64;

const ONE: C = C::new(1.0, 0.0);

fn re(v: f64) -> C {
    C::new(v, 0.0)
}

/// Determinant polynomial `b_(r,d)(s) = prod_(j=1..r) (s + (j-1) d/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BPoly {
    pub r: usize,
    pub d: usize,
}

pub fn b_poly(r: usize, d: usize) -> BPoly {
    BPoly { r, d }
}

impl BPoly {
    pub fn eval(&self, s: f64) -> f64 {
        (1..=self.r).map(|j| s + (j - 1) as f64 * self.d as f64 / 2.0).product()
    }

    pub fn roots(&self) -> Vec<Rational64> {
        (0..self.r).map(|j| Rational64::new(-((j * self.d) as i64), 2)).collect()
    }
}

/// `b(scale * s + shift)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BFactor {
    pub b: BPoly,
    pub scale: i64,
    pub shift: i64,
}

/// The Bernstein polynomial of `k^s` for a model, as a product of shifted
/// determinant polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseB {
    pub case: Case,
    pub factors: Vec<BFactor>,
}

impl CaseB {
    pub fn eval(&self, s: f64) -> f64 {
        self.factors.iter().map(|f| f.b.eval(f.scale as f64 * s + f.shift as f64)).product()
    }

    /// All roots with multiplicity, sorted decreasingly.
    pub fn roots(&self) -> Vec<Rational64> {
        let mut out: Vec<Rational64> =
            self.factors.iter().flat_map(|f| f.b.roots().into_iter().map(move |rt| (rt - f.shift) / f.scale)).collect();
        out.sort_by(|a, b| b.cmp(a));
        out
    }

    pub fn degree(&self) -> usize {
        self.factors.iter().map(|f| f.b.r).sum()
    }
}

pub fn case_b(v: &TripleSystem) -> CaseB {
    let cd = v.table();
    let factors = match v.case() {
        Case::ComplexStructure => {
            let b = b_poly(cd.r, cd.a_complex());
            vec![BFactor { b, scale: 1, shift: 0 }; 2]
        }
        Case::Reduced | Case::ReducedEuclidean => {
            let b = b_poly(cd.r, cd.a);
            vec![BFactor { b, scale: 2, shift: 0 }, BFactor { b, scale: 2, shift: -1 }]
        }
        Case::NonReduced => vec![BFactor { b: b_poly(2 * cd.r, cd.c - 2), scale: 1, shift: 0 }],
    };
    CaseB { case: v.case(), factors }
}

/// Jordan algebra `V(e,1)` of a tube model.
#[derive(Clone, Debug)]
pub struct EuclideanAlgebraData {
    pub spec: ModelSpec,
    /// number of real coordinates
    pub n: usize,
    pub rank: usize,
    pub d: usize,
    pub holomorphic: bool,
    pub unit: Element,
    /// `Delta` in the algebra coordinates (`z_t` for holomorphic models)
    pub delta_alg: Poly<C>,
    /// `Delta` as a function of the real coordinates
    pub delta: Poly<C>,
    /// symbol of `Delta(d)` in the real derivatives
    pub symbol: Poly<C>,
    /// Jordan trace as a linear form in the real coordinates
    pub trace: Vec<C>,
    /// Gram matrix `tr(u_i o u_j)` in the algebra coordinates
    pub gram: DMatrix<C>,
}

fn det_poly(m: &[Vec<Poly<C>>], n: usize) -> Poly<C> {
    let r = m.len();
    if r == 0 {
        return Poly::constant(n, ONE);
    }
    if r == 1 {
        return m[0][0].clone();
    }
    let mut acc = Poly::zero(n);
    for col in 0..r {
        let minor: Vec<Vec<Poly<C>>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(c, _)| c != col).map(|(_, p)| p.clone()).collect())
            .collect();
        let sign = if col % 2 == 0 { ONE } else { -ONE };
        acc = acc.add(&m[0][col].mul(&det_poly(&minor, n)).scale(sign));
    }
    acc
}

/// Builds `Delta`, the trace and the symbol of `Delta(d)` for a tube model.
pub fn delta_polynomial(v: &TripleSystem) -> Result<EuclideanAlgebraData> {
    let spec = match v.origin() {
        Origin::Base(s) => s,
        Origin::Hermitified(_) => {
            return Err(Error::Domain("Bernstein operators are built on base models".into()));
        }
    };
    if !spec.is_tube() {
        return Err(Error::Domain(format!("{spec} is not of tube type; use tube_reduction")));
    }
    let n = v.dim();
    let cd = v.table();
    let holomorphic = matches!(spec, ModelSpec::Cmat(..));
    let (rank, d) = match spec {
        ModelSpec::Spin(..) | ModelSpec::Sphere(_) => (2, n - 2),
        ModelSpec::Cmat(..) => (cd.r, cd.a_complex()),
        _ => (cd.r, cd.a),
    };
    let n_alg = if holomorphic { n / 2 } else { n };
    let delta_alg = match spec {
        ModelSpec::Spin(p, _) => {
            let terms = (0..n)
                .map(|i| {
                    let mut a = vec![0u8; n];
                    a[i] = 2;
                    (a, re(if i < p { 1.0 } else { -1.0 }))
                })
                .collect();
            Poly { n, terms }
        }
        ModelSpec::Sphere(_) => {
            let terms = (0..n)
                .map(|i| {
                    let mut a = vec![0u8; n];
                    a[i] = 2;
                    (a, ONE)
                })
                .collect();
            Poly { n, terms }
        }
        ModelSpec::Cmat(r, _) => {
            let m: Vec<Vec<Poly<C>>> =
                (0..r).map(|a| (0..r).map(|b| Poly::linear(n_alg, &[(a * r + b, ONE)])).collect()).collect();
            det_poly(&m, n_alg)
        }
        _ => {
            let map = matrix_entry_map(&spec).expect("matrix family");
            let m: Vec<Vec<Poly<C>>> =
                map.iter().map(|row| row.iter().map(|cell| Poly::linear(n, cell)).collect()).collect();
            let p = det_poly(&m, n);
            let worst = p.terms.iter().map(|(_, c)| c.im.abs()).fold(0.0, f64::max);
            if worst > 1e-12 {
                return Err(Error::Consistency(format!("{spec}: determinant is not real ({worst:e})")));
            }
            Poly { n, terms: p.terms.into_iter().map(|(a, c)| (a, re(c.re))).collect() }
        }
    };
    let delta = if holomorphic {
        let images: Vec<Poly<C>> =
            (0..n_alg).map(|t| Poly::linear(n, &[(t, ONE), (n_alg + t, C::new(0.0, 1.0))])).collect();
        delta_alg.substitute_linear(&images)
    } else {
        delta_alg.clone()
    };

    let e = v.frame_sum();
    let ee = e.dot(&e);
    let trace: Vec<C> = match v.complex_structure() {
        Some(j) if holomorphic => {
            let je = j.transpose() * &e;
            (0..n).map(|i| C::new(e[i], -je[i]) * (rank as f64 / ee)).collect()
        }
        _ => (0..n).map(|i| re(rank as f64 * e[i] / ee)).collect(),
    };
    let tr = |x: &Element| -> C { x.iter().zip(&trace).map(|(a, t)| t * *a).sum() };
    let gram = DMatrix::from_fn(n_alg, n_alg, |i, j| {
        tr(&v.product(v.basis(i).as_slice(), e.as_slice(), v.basis(j).as_slice()))
    });
    let ginv = gram
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate(format!("{spec}: trace form of V(e,1) is degenerate")))?;
    // derivative symbols in algebra coordinates, as linear forms in the real ones
    let w: Vec<Vec<(usize, C)>> = if holomorphic {
        (0..n_alg).map(|u| vec![(u, re(0.5)), (n_alg + u, C::new(0.0, -0.5))]).collect()
    } else {
        (0..n).map(|u| vec![(u, ONE)]).collect()
    };
    let images: Vec<Poly<C>> = (0..n_alg)
        .map(|i| {
            let mut terms = Vec::new();
            for (k, wk) in w.iter().enumerate() {
                for &(idx, c) in wk {
                    terms.push((idx, ginv[(i, k)] * c));
                }
            }
            Poly::linear(n, &terms)
        })
        .collect();
    let symbol = delta_alg.substitute_linear(&images);

    let data =
        EuclideanAlgebraData { spec, n, rank, d, holomorphic, unit: e.clone(), delta_alg, delta, symbol, trace, gram };
    let de = data.delta_at(e.as_slice());
    if (de - ONE).norm() > 1e-12 {
        return Err(Error::Consistency(format!("{spec}: Delta(e) = {de}")));
    }
    Ok(data)
}

impl EuclideanAlgebraData {
    /// `Delta` at a real coordinate vector.
    pub fn delta_at(&self, x: &[f64]) -> C {
        let xc: Vec<C> = x.iter().map(|&a| re(a)).collect();
        self.delta.eval(&xc)
    }

    pub fn trace_at(&self, x: &[f64]) -> C {
        x.iter().zip(&self.trace).map(|(a, t)| t * *a).sum()
    }

    /// Algebra coordinates of a real coordinate vector.
    pub fn algebra_coords(&self, x: &[f64]) -> Vec<C> {
        if self.holomorphic {
            let h = self.n / 2;
            (0..h).map(|t| C::new(x[t], x[h + t])).collect()
        } else {
            x.iter().map(|&a| re(a)).collect()
        }
    }

    pub fn b(&self) -> BPoly {
        b_poly(self.rank, self.d)
    }

    pub fn s_star(&self, s: f64) -> f64 {
        s + self.d as f64 * (self.rank as f64 - 1.0) / 2.0
    }

    /// Coefficients `a_0 = 1, a_1, ..., a_r` of
    /// `Delta(T e - xi) = sum_k (-1)^k a_k(xi) T^(r-k)`, `xi` in algebra
    /// coordinates.
    pub fn a_coefficients(&self, xi: &[C]) -> Result<Vec<C>> {
        let r = self.rank;
        let e = self.algebra_coords(self.unit.as_slice());
        let vals: Vec<C> = (0..=r)
            .map(|t| {
                let p: Vec<C> = e.iter().zip(xi).map(|(ei, xj)| ei * t as f64 - xj).collect();
                self.delta_alg.eval(&p)
            })
            .collect();
        // Vandermonde solve for the coefficients of T^0..T^r
        let vm = DMatrix::from_fn(r + 1, r + 1, |i, j| re((i as f64).powi(j as i32)));
        let sol =
            vm.lu().solve(&DVector::from_vec(vals)).ok_or_else(|| Error::Degenerate("Vandermonde system".into()))?;
        Ok((0..=r).map(|k| sol[r - k] * if k % 2 == 0 { 1.0 } else { -1.0 }).collect())
    }

    fn delta_jet(&self, x0: &[f64], order: usize, anti: bool) -> Result<Jet<C>> {
        let xc: Vec<C> = x0.iter().map(|&a| re(a)).collect();
        let j = jet_of_polynomial(&self.delta, &xc, order)?;
        Ok(if anti { j.conj() } else { j })
    }

    fn symbol_for(&self, anti: bool) -> Poly<C> {
        if anti {
            self.symbol.conj()
        } else {
            self.symbol.clone()
        }
    }

    fn check_jet(&self, f: &Jet<C>) -> Result<()> {
        if f.n_vars() != self.n {
            return Err(Error::Dimension { expected: self.n, got: f.n_vars() });
        }
        if f.order() < self.rank {
            return Err(Error::Domain(format!("jet order {} below operator order {}", f.order(), self.rank)));
        }
        Ok(())
    }

    /// `Delta(d) f` at the base point of `f`.
    pub fn apply_delta_dop(&self, f: &Jet<C>, anti: bool) -> Result<C> {
        self.check_jet(f)?;
        apply_const_op(&self.symbol_for(anti), f)
    }

    /// Jet of `D_s f`; `anti` selects the antiholomorphic twin.
    pub fn d_s_jet(&self, s: f64, f: &Jet<C>, x0: &[f64], anti: bool) -> Result<Jet<C>> {
        self.check_jet(f)?;
        let m = f.order();
        let dj = self.delta_jet(x0, m, anti)?;
        let g = dj.real_power(-s)?.mul(f)?;
        let pg = apply_const_op_jet(&self.symbol_for(anti), &g)?;
        dj.truncate(m - self.rank).real_power(1.0 + s)?.mul(&pg)
    }

    pub fn apply_d_s(&self, s: f64, f: &Jet<C>, x0: &[f64]) -> Result<C> {
        Ok(self.d_s_jet(s, &f.truncate(self.rank), x0, false)?.value())
    }

    /// Jet of `E_s f = (-1)^rho D_(s*) f`.
    pub fn e_s_jet(&self, s: f64, f: &Jet<C>, x0: &[f64], anti: bool) -> Result<Jet<C>> {
        let sign = if self.rank % 2 == 0 { 1.0 } else { -1.0 };
        Ok(self.d_s_jet(self.s_star(s), f, x0, anti)?.scale(re(sign)))
    }

    pub fn apply_e_s(&self, s: f64, f: &Jet<C>, x0: &[f64]) -> Result<C> {
        Ok(self.e_s_jet(s, &f.truncate(self.rank), x0, false)?.value())
    }

    /// Jet of the formal transpose `E_s^t f = Delta^(-s*) Delta(d) (Delta^(1+s*) f)`.
    pub fn e_s_transpose_jet(&self, s: f64, f: &Jet<C>, y0: &[f64]) -> Result<Jet<C>> {
        self.check_jet(f)?;
        let m = f.order();
        let st = self.s_star(s);
        let dj = self.delta_jet(y0, m, false)?;
        let inner = dj.real_power(1.0 + st)?.mul(f)?;
        let pg = apply_const_op_jet(&self.symbol, &inner)?;
        dj.truncate(m - self.rank).real_power(-st)?.mul(&pg)
    }

    pub fn apply_e_s_transpose(&self, s: f64, f: &Jet<C>, y0: &[f64]) -> Result<C> {
        Ok(self.e_s_transpose_jet(s, &f.truncate(self.rank), y0)?.value())
    }

    /// `[M_0 f, ..., M_r f]` at the base point, from
    /// `D_s = sum_k (-1)^k prod_(j<=k) (s - (j-1) d/2) M_(r-k)` at `s = 0..r`.
    pub fn extract_m_k(&self, f: &Jet<C>, x0: &[f64]) -> Result<Vec<C>> {
        let r = self.rank;
        let hd = self.d as f64 / 2.0;
        let coef = |s: f64, k: usize| -> f64 {
            let p: f64 = (1..=k).map(|j| s - (j - 1) as f64 * hd).product();
            if k % 2 == 0 {
                p
            } else {
                -p
            }
        };
        let vals: Vec<C> = (0..=r).map(|i| self.apply_d_s(i as f64, f, x0)).collect::<Result<_>>()?;
        // unknown column k holds M_(r-k)
        let a = DMatrix::from_fn(r + 1, r + 1, |i, k| re(coef(i as f64, k)));
        let sol =
            a.lu().solve(&DVector::from_vec(vals)).ok_or_else(|| Error::Degenerate("M_k extraction system".into()))?;
        Ok((0..=r).map(|k| sol[r - k]).collect())
    }

    /// `E_s f` reassembled from the `M_k f`.
    pub fn e_s_from_m(&self, s: f64, m: &[C]) -> C {
        let r = self.rank;
        let hd = self.d as f64 / 2.0;
        (0..=r)
            .map(|k| {
                let p: f64 = (1..=k).map(|j| s + hd * (r - j) as f64).product();
                let sign = if (r - k) % 2 == 0 { 1.0 } else { -1.0 };
                m[r - k] * (sign * p)
            })
            .sum()
    }

    /// Jet of `exp(tr(x o xi))`, `xi` in algebra coordinates.
    pub fn exponential_jet(&self, xi: &[C], x0: &[f64], order: usize) -> Result<Jet<C>> {
        let gx = &self.gram * DVector::from_column_slice(xi);
        let mut lin: Vec<(usize, C)> = Vec::new();
        if self.holomorphic {
            let h = self.n / 2;
            for t in 0..h {
                lin.push((t, gx[t]));
                lin.push((h + t, gx[t] * C::new(0.0, 1.0)));
            }
        } else {
            lin.extend((0..self.n).map(|t| (t, gx[t])));
        }
        let x0c: Vec<C> = x0.iter().map(|&a| re(a)).collect();
        Ok(jet_of_polynomial(&Poly::linear(self.n, &lin), &x0c, order)?.exp())
    }

    /// Largest `|M_k e^(x,xi) (e) - a_k(xi) e^(e,xi)|` relative to
    /// `max |a_k| e^(e,xi)`.
    pub fn symbol_residual(&self, xi: &[C]) -> Result<f64> {
        let e = self.unit.as_slice();
        let f = self.exponential_jet(xi, e, self.rank)?;
        let m = self.extract_m_k(&f, e)?;
        let a = self.a_coefficients(xi)?;
        let f0 = f.value();
        let scale = a.iter().map(|c| c.norm()).fold(1.0, f64::max) * f0.norm();
        Ok(m.iter().zip(&a).map(|(mk, ak)| (mk - ak * f0).norm()).fold(0.0, f64::max) / scale)
    }

    /// Jordan inverse, for algebras of rank 1 or 2.
    fn inverse_jets(&self, u0: &[f64], order: usize) -> Result<Vec<Jet<C>>> {
        let n = self.n;
        let uc: Vec<C> = u0.iter().map(|&a| re(a)).collect();
        let dinv = jet_of_polynomial(&self.delta, &uc, order)?.recip()?;
        let vars: Vec<Jet<C>> = (0..n).map(|i| Jet::variable(n, order, i, uc[i])).collect::<Result<_>>()?;
        match self.rank {
            // x = Delta(x) e on a rank one algebra
            1 => Ok((0..n).map(|i| dinv.scale(re(self.unit[i]))).collect()),
            2 => {
                let tr = jet_of_polynomial(
                    &Poly::linear(n, &self.trace.iter().copied().enumerate().collect::<Vec<_>>()),
                    &uc,
                    order,
                )?;
                (0..n).map(|i| tr.scale(re(self.unit[i])).sub(&vars[i])?.mul(&dinv)).collect()
            }
            r => Err(Error::Domain(format!("inverse map only for rank 1 or 2, got {r}"))),
        }
    }

    /// `|(D_s (f o inv)) (x^-1) - (-1)^rho D_t f (x)|` with
    /// `t = d (rho - 1)/2 - s`, relative to the larger side; real models of
    /// rank at most 2 and `f` a polynomial in the real coordinates.
    pub fn inversion_residual(&self, s: f64, f: &Poly<C>, x: &[f64]) -> Result<f64> {
        if self.holomorphic {
            return Err(Error::Domain("inversion check is implemented for real algebras".into()));
        }
        let r = self.rank;
        let xc: Vec<C> = x.iter().map(|&a| re(a)).collect();
        let x_inv: Vec<f64> = {
            let jets = self.inverse_jets(x, 0)?;
            jets.iter().map(|j| j.value().re).collect()
        };
        let inv = self.inverse_jets(&x_inv, r)?;
        let g = compose(f, &inv)?;
        let lhs = self.apply_d_s(s, &g, &x_inv)?;
        let t = self.d as f64 * (r as f64 - 1.0) / 2.0 - s;
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = self.apply_d_s(t, &jet_of_polynomial(f, &xc, r)?, x)? * sign;
        Ok((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-300))
    }
}

/// `p(g_1, ..., g_n)` for jets `g_i`.
pub fn compose(p: &Poly<C>, g: &[Jet<C>]) -> Result<Jet<C>> {
    let first = g.first().ok_or_else(|| Error::Domain("empty composition".into()))?;
    let (n, order) = (first.n_vars(), first.order());
    let mut acc = Jet::zero(n, order)?;
    for (a, c) in &p.terms {
        let mut t = Jet::constant(n, order, *c)?;
        for (i, &k) in a.iter().enumerate() {
            for _ in 0..k {
                t = t.mul(&g[i])?;
            }
        }
        acc = acc.add(&t)?;
    }
    Ok(acc)
}

/// `|Delta(d) Delta^s - b(s) Delta^(s-1)|` at `x`, relative to
/// `max(1, |b(s)|) |Delta(x)^(s-1)|`.
pub fn delta_power_residual(e: &EuclideanAlgebraData, s: f64, x: &[f64]) -> Result<f64> {
    let dj = e.delta_jet(x, e.rank, false)?;
    let lhs = e.apply_delta_dop(&dj.real_power(s)?, false)?;
    let base = dj.value().powf(s - 1.0);
    let b = e.b().eval(s);
    Ok((lhs - base * b).norm() / (b.abs().max(1.0) * base.norm()))
}

/// `|E_s Delta(e + .)^s - b(s) Delta(e + x)^(s-1)|` at `x`, same scaling as
/// [`delta_power_residual`].
pub fn shifted_bs_residual(e: &EuclideanAlgebraData, s: f64, x: &[f64]) -> Result<f64> {
    let shifted: Vec<C> = x.iter().zip(e.unit.iter()).map(|(a, u)| re(a + u)).collect();
    let dj = jet_of_polynomial(&e.delta, &shifted, e.rank)?;
    let lhs = e.apply_e_s(s, &dj.real_power(s)?, x)?;
    let base = dj.value().powf(s - 1.0);
    let b = e.b().eval(s);
    Ok((lhs - base * b).norm() / (b.abs().max(1.0) * base.norm()))
}

/// Jet in `x` at `x0` of the intrinsic `h(x, y)`: complex `h` on
/// complex-structure models, real otherwise.
pub fn h_jet(v: &TripleSystem, x0: &Element, y: &Element, order: usize) -> Result<Jet<C>> {
    v.check_dim(x0)?;
    v.check_dim(y)?;
    let n = v.dim();
    let complex = v.complex_structure().is_some();
    let rho = if complex { v.rank() } else { real_rank(v) };
    let lx: Vec<LinOp> = (0..n).map(|i| l_op_unchecked(v, &v.basis(i), y)).collect();
    let l0 = l_op_unchecked(v, x0, y);
    let lin = |l: usize, m: usize| -> Result<Option<Jet<f64>>> {
        let mut c = Jet::<f64>::constant(n, order, l0[(l, m)])?.coeffs().to_vec();
        if order >= 1 {
            for (i, a) in lx.iter().enumerate() {
                c[1 + i] = a[(l, m)];
            }
        }
        if c.iter().all(|&t| t == 0.0) {
            return Ok(None);
        }
        Ok(Some(Jet::from_coeffs(n, order, c)?))
    };
    let mut b_op: Vec<Vec<Option<Jet<f64>>>> = Vec::with_capacity(n);
    for l in 0..n {
        b_op.push((0..n).map(|m| lin(l, m)).collect::<Result<_>>()?);
    }
    let mut powers: Vec<Vec<Jet<f64>>> =
        vec![(0..n).map(|i| Jet::variable(n, order, i, x0[i])).collect::<Result<_>>()?];
    for _ in 0..rho {
        let prev = powers.last().expect("nonempty");
        let mut next = Vec::with_capacity(n);
        for row in &b_op {
            let mut acc = Jet::zero(n, order)?;
            for (bm, pm) in row.iter().zip(prev) {
                if let Some(bm) = bm {
                    acc = acc.add(&bm.mul(pm)?)?;
                }
            }
            next.push(acc);
        }
        powers.push(next);
    }
    // powers[k] = x^(k+1); rows in the coordinates of the minimal polynomial
    let rows: Vec<Vec<Jet<C>>> = if complex {
        let h = n / 2;
        powers
            .iter()
            .map(|p| {
                (0..h)
                    .map(|t| p[t].to_complex().add(&p[h + t].to_complex().scale(C::new(0.0, 1.0))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?
    } else {
        powers.iter().map(|p| p.iter().map(|j| j.to_complex()).collect()).collect()
    };
    let dim_rows = rows[0].len();
    // columns x^(rho), ..., x^(1); right-hand side -x^(rho+1)
    let col = |j: usize| &rows[rho - 1 - j];
    let base: Vec<Vec<C>> = (0..dim_rows).map(|i| (0..rho).map(|j| col(j)[i].value()).collect()).collect();
    let picked = select_rows(&base, rho)?;
    let a: Vec<Vec<Jet<C>>> = picked.iter().map(|&i| (0..rho).map(|j| col(j)[i].clone()).collect()).collect();
    let rhs: Vec<Jet<C>> = picked.iter().map(|&i| rows[rho][i].scale(-ONE)).collect();
    let c = solve_jets(a, rhs)?;
    let mut h = Jet::constant(n, order, ONE)?;
    for (j, cj) in c.iter().enumerate() {
        // c_j = (-1)^j m_j with j counted from one
        let sign = if j % 2 == 0 { -ONE } else { ONE };
        h = h.add(&cj.scale(sign))?;
    }
    Ok(h)
}

/// Greedy choice of `k` well-conditioned rows.
fn select_rows(a: &[Vec<C>], k: usize) -> Result<Vec<usize>> {
    let mut res: Vec<Vec<C>> = a.to_vec();
    let scale = a.iter().flat_map(|r| r.iter().map(|c| c.norm())).fold(0.0, f64::max);
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let (best, norm) = res
            .iter()
            .enumerate()
            .filter(|(i, _)| !picked.contains(i))
            .map(|(i, r)| (i, r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()))
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == usize::MAX || norm <= 1e-10 * scale {
            return Err(Error::RankDeficient("power matrix is rank deficient at the base pair".into()));
        }
        picked.push(best);
        let q: Vec<C> = res[best].iter().map(|c| c / norm).collect();
        for r in res.iter_mut() {
            let proj: C = r.iter().zip(&q).map(|(a, b)| a * b.conj()).sum();
            for (a, b) in r.iter_mut().zip(&q) {
                *a -= proj * b;
            }
        }
    }
    Ok(picked)
}

/// Gaussian elimination with partial pivoting on the constant terms.
fn solve_jets(mut a: Vec<Vec<Jet<C>>>, mut b: Vec<Jet<C>>) -> Result<Vec<Jet<C>>> {
    let k = b.len();
    for col in 0..k {
        let piv =
            (col..k).max_by(|&i, &j| a[i][col].value().norm().total_cmp(&a[j][col].value().norm())).expect("nonempty");
        if a[piv][col].value().norm() == 0.0 {
            return Err(Error::RankDeficient("singular jet system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip()?;
        for row in col + 1..k {
            let f = a[row][col].mul(&inv)?;
            for c in col..k {
                let t = f.mul(&a[col][c])?;
                a[row][c] = a[row][c].sub(&t)?;
            }
            let t = f.mul(&b[col])?;
            b[row] = b[row].sub(&t)?;
        }
    }
    let mut x: Vec<Jet<C>> = b.clone();
    for row in (0..k).rev() {
        let mut acc = b[row].clone();
        for c in row + 1..k {
            acc = acc.sub(&a[row][c].mul(&x[c])?)?;
        }
        x[row] = acc.mul(&a[row][row].recip()?)?;
    }
    Ok(x)
}

/// Jet of the fundamental kernel `k(., y)` at `x0`.
pub fn k_jet(v: &TripleSystem, x0: &Element, y: &Element, order: usize) -> Result<Jet<C>> {
    let h = h_jet(v, x0, y, order)?;
    match v.case() {
        Case::ComplexStructure => h.mul(&h.conj()),
        Case::Reduced | Case::ReducedEuclidean => h.mul(&h),
        Case::NonReduced => Ok(h),
    }
}

/// The square sub-model `V(e,1)` of a non-tube matrix model and its
/// coordinate embedding.
#[derive(Clone, Debug)]
pub struct TubeReduction {
    pub sub: TripleSystem,
    /// `dim V x dim V_2`; its transpose is the Peirce projection
    pub embed: LinOp,
}

pub fn tube_reduction(v: &TripleSystem) -> Result<Option<TubeReduction>> {
    let spec = v.spec();
    if spec.is_tube() {
        return Ok(None);
    }
    let (sub_spec, r, s, complex) = match spec {
        ModelSpec::Rect(r, s) => (ModelSpec::Rect(r, r), r, s, false),
        ModelSpec::Cmat(r, s) => (ModelSpec::Cmat(r, r), r, s, true),
        other => return Err(Error::Domain(format!("no tube reduction for {other}"))),
    };
    let sub = build_model(sub_spec)?;
    let mut embed = LinOp::zeros(v.dim(), sub.dim());
    for a in 0..r {
        for b in 0..r {
            embed[(a * s + b, a * r + b)] = 1.0;
            if complex {
                embed[(r * s + a * s + b, r * r + a * r + b)] = 1.0;
            }
        }
    }
    Ok(Some(TubeReduction { sub, embed }))
}

/// Outcome of a Bernstein-Sato identity check at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct BsCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `h` restriction defect when the check ran on `V_2`
    pub restriction: f64,
}

/// Checks the Bernstein-Sato identity of `k^s` at `(x, y)`:
/// complex structure `E_s conj(E_s) k^s = b(s)^2 k^(s-1)`, reduced
/// `E_(2s-1) E_(2s) k^s = b(2s) b(2s-1) k^(s-1)`, non-reduced
/// `E_s k^s = b(s) k^(s-1)`. Requires `k(x,y) > 0` and `Delta(x) != 0`.
pub fn bs_verify(v: &TripleSystem, s: f64, x: &Element, y: &Element) -> Result<BsCheck> {
    v.check_dim(x)?;
    v.check_dim(y)?;
    if let Some(red) = tube_reduction(v)? {
        let p = red.embed.transpose();
        let (x2, y2) = (&p * x, &p * y);
        let full = h_kernel(v, x, &(&red.embed * &y2))?;
        let sub = h_kernel(&red.sub, &x2, &y2)?;
        let restriction = (full - sub).norm() / sub.norm().max(1e-300);
        let mut out = bs_verify(&red.sub, s, &x2, &y2)?;
        out.restriction = restriction;
        return Ok(out);
    }
    let e = delta_polynomial(v)?;
    let xs = x.as_slice();
    let b = case_b(v).eval(s);
    let (lhs, k0) = match v.case() {
        Case::ComplexStructure => {
            let k = k_jet(v, x, y, 2 * e.rank)?;
            let k0 = k.value().re;
            check_positive(k0)?;
            let inner = e.e_s_jet(s, &k.real_power(s)?, xs, true)?;
            (e.e_s_jet(s, &inner, xs, false)?.value(), k0)
        }
        Case::Reduced | Case::ReducedEuclidean => {
            let k = k_jet(v, x, y, 2 * e.rank)?;
            let k0 = k.value().re;
            check_positive(k0)?;
            let inner = e.e_s_jet(2.0 * s, &k.real_power(s)?, xs, false)?;
            (e.e_s_jet(2.0 * s - 1.0, &inner, xs, false)?.value(), k0)
        }
        Case::NonReduced => {
            let k = k_jet(v, x, y, e.rank)?;
            let k0 = k.value().re;
            check_positive(k0)?;
            (e.e_s_jet(s, &k.real_power(s)?, xs, false)?.value(), k0)
        }
    };
    let base = k0.powf(s - 1.0);
    let rhs = b * base;
    let residual = (lhs - re(rhs)).norm() / (b.abs().max(1.0) * base);
    Ok(BsCheck { lhs: lhs.re, rhs, residual, restriction: 0.0 })
}

fn check_positive(k0: f64) -> Result<()> {
    if k0 <= 0.0 {
        return Err(Error::Domain(format!("k(x,y) = {k0} is not positive")));
    }
    Ok(())
}

/// A point `x^2 + eps e` of the symmetric cone of a Euclidean tube model.
pub fn cone_point(v: &TripleSystem, g: &Element, eps: f64) -> Element {
    let e = v.frame_sum();
    v.product(g.as_slice(), e.as_slice(), g.as_slice()) + e * eps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minpoly::{fundamental_kernel, minpoly_any};
    use crate::rng;

    fn near_unit(v: &TripleSystem, g: &mut rng::Rng, scale: f64) -> Element {
        v.frame_sum() + rng::gaussian(g, v.dim(), scale)
    }

    #[test]
    fn b_polynomials() {
        let b = b_poly(2, 1);
        assert_eq!(b.eval(1.0), 1.5);
        assert_eq!(b.roots(), vec![Rational64::new(0, 1), Rational64::new(-1, 2)]);
        let v = build_model(ModelSpec::Sym(1)).unwrap();
        let cb = case_b(&v);
        assert_eq!(cb.eval(1.5), 6.0);
        assert_eq!(cb.roots(), vec![Rational64::new(1, 2), Rational64::new(0, 1)]);
        let v = build_model(ModelSpec::Sphere(4)).unwrap();
        assert!((case_b(&v).eval(1.7) - 1.7 * 2.7).abs() < 1e-14);
        let v = build_model(ModelSpec::Cmat(2, 2)).unwrap();
        assert_eq!(case_b(&v).degree(), 4);
        assert!((case_b(&v).eval(0.5) - (0.5f64 * 1.5).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn delta_matches_minpoly() {
        let mut g = rng::seeded(11);
        for spec in [
            ModelSpec::Sym(2),
            ModelSpec::Sym(3),
            ModelSpec::Herm(2),
            ModelSpec::Rect(2, 2),
            ModelSpec::Spin(2, 3),
            ModelSpec::Sphere(4),
            ModelSpec::Cmat(2, 2),
            ModelSpec::Cmat(1, 1),
        ] {
            let v = build_model(spec).unwrap();
            let e = delta_polynomial(&v).unwrap();
            let x = rng::gaussian(&mut g, v.dim(), 1.0);
            let m = minpoly_any(&v, &x, &v.frame_sum()).unwrap();
            let top = *m.m.last().unwrap();
            assert!((top - e.delta_at(x.as_slice())).norm() < 1e-9, "{spec}");
            assert_eq!(e.symbol.degree(), e.rank);
        }
    }

    #[test]
    fn case_b_degree_matches_algebra() {
        for spec in [ModelSpec::Sym(2), ModelSpec::Spin(2, 3), ModelSpec::Sphere(5), ModelSpec::Cmat(2, 2)] {
            let v = build_model(spec).unwrap();
            let e = delta_polynomial(&v).unwrap();
            let cb = case_b(&v);
            assert_eq!(cb.factors[0].b, e.b(), "{spec}");
        }
    }

    #[test]
    fn laplacians() {
        // sphere: Delta(d) is a quarter of the Laplacian
        let v = build_model(ModelSpec::Sphere(3)).unwrap();
        let e = delta_polynomial(&v).unwrap();
        for (a, c) in &e.symbol.terms {
            assert_eq!(a.iter().map(|&k| k as usize).sum::<usize>(), 2);
            assert!((c - re(0.25)).norm() < 1e-14);
        }
        let v = build_model(ModelSpec::Sym(1)).unwrap();
        let e = delta_polynomial(&v).unwrap();
        assert_eq!(e.symbol, Poly::linear(1, &[(0, ONE)]));
    }

    #[test]
    fn determinant_identity_sym2() {
        // Delta(d) Delta^s = s (s + 1/2) Delta^(s-1)
        let v = build_model(ModelSpec::Sym(2)).unwrap();
        let e = delta_polynomial(&v).unwrap();
        let mut g = rng::seeded(3);
        for s in [0.5, 1.0, 2.3, -0.7] {
            let x = cone_point(&v, &rng::gaussian(&mut g, 3, 1.0), 0.2);
            assert!(delta_power_residual(&e, s, x.as_slice()).unwrap() < 1e-11);
            assert!(shifted_bs_residual(&e, s, x.as_slice()).unwrap() < 1e-11);
        }
        assert_eq!(e.b().eval(2.0), 5.0);
    }

    #[test]
    fn rank_one_operator() {
        // E_t f = t f - x f'
        let v = build_model(ModelSpec::Sym(1)).unwrap();
        let e = delta_polynomial(&v).unwrap();
        let f = jet_of_polynomial(&Poly::monomial(1, vec![3], ONE), &[re(0.7)], 1).unwrap();
        let got = e.apply_e_s(1.3, &f, &[0.7]).unwrap();
        let want = 1.3 * 0.7f64.powi(3) - 3.0 * 0.7f64.powi(3);
        assert!((got - re(want)).norm() < 1e-13);
        let t = e.apply_e_s_transpose(1.3, &f, &[0.7]).unwrap();
        let want = 2.3 * 0.7f64.powi(3) + 0.7 * 3.0 * 0.49;
        assert!((t - re(want)).norm() < 1e-13);
    }

    #[test]
    fn h_jet_value_and_gradient() {
        let mut g = rng::seeded(8);
        for spec in [ModelSpec::Sym(2), ModelSpec::Cmat(1, 2), ModelSpec::Sphere(4), ModelSpec::Spin(2, 3)] {
            let v = build_model(spec).unwrap();
            let x = rng::gaussian(&mut g, v.dim(), 0.7);
            let y = rng::gaussian(&mut g, v.dim(), 0.7);
            let j = h_jet(&v, &x, &y, 2).unwrap();
            let h0 = h_kernel(&v, &x, &y).unwrap();
            assert!((j.value() - h0).norm() < 1e-10, "{spec}");
            let step = 1e-5;
            for i in 0..v.dim() {
                let dx = v.basis(i) * step;
                let fd =
                    (h_kernel(&v, &(&x + &dx), &y).unwrap() - h_kernel(&v, &(&x - &dx), &y).unwrap()) / (2.0 * step);
                let mut a = vec![0u8; v.dim()];
                a[i] = 1;
                assert!((j.derivative(&a) - fd).norm() < 1e-6, "{spec} {i}");
            }
        }
    }

    #[test]
    fn identities_in_all_cases() {
        let mut g = rng::seeded(21);
        for spec in [
            ModelSpec::Sym(1),
            ModelSpec::Sym(2),
            ModelSpec::Herm(2),
            ModelSpec::Spin(2, 3),
            ModelSpec::Sphere(4),
            ModelSpec::Cmat(1, 1),
            ModelSpec::Cmat(2, 2),
            ModelSpec::Rect(2, 3),
            ModelSpec::Cmat(1, 2),
        ] {
            let v = build_model(spec).unwrap();
            for s in [1.0, 1.7, 2.5] {
                let (x, y) = loop {
                    let x = near_unit(&v, &mut g, 0.3);
                    let y = rng::gaussian(&mut g, v.dim(), 0.4);
                    if fundamental_kernel(&v, &x, &y).unwrap() > 1e-3 {
                        break (x, y);
                    }
                };
                let c = bs_verify(&v, s, &x, &y).unwrap();
                assert!(c.residual < 1e-8, "{spec} s={s}: {c:?}");
                assert!(c.restriction < 1e-9, "{spec}: {c:?}");
            }
        }
    }

    #[test]
    fn wrong_b_is_detected() {
        let v = build_model(ModelSpec::Sphere(4)).unwrap();
        let x = v.frame_sum() * 1.1;
        let y = v.basis(1) * 0.3;
        let c = bs_verify(&v, 1.7, &x, &y).unwrap();
        let s: f64 = 1.7;
        let wrong = s * (s + 0.5) * fundamental_kernel(&v, &x, &y).unwrap().powf(s - 1.0);
        assert!((c.lhs - wrong).abs() > 1e-3);
    }

    #[test]
    fn m_k_decomposition() {
        let mut g = rng::seeded(4);
        for spec in [ModelSpec::Sym(2), ModelSpec::Sym(3), ModelSpec::Herm(2), ModelSpec::Cmat(2, 2)] {
            let v = build_model(spec).unwrap();
            let e = delta_polynomial(&v).unwrap();
            let x = near_unit(&v, &mut g, 0.2);
            let y = rng::gaussian(&mut g, v.dim(), 0.3);
            let f = h_jet(&v, &x, &y, e.rank).unwrap().real_power(1.4).unwrap();
            let m = e.extract_m_k(&f, x.as_slice()).unwrap();
            assert!((m[0] - f.value()).norm() < 1e-10, "{spec}: M_0 is the identity");
            for s in [0.3, 2.2] {
                let direct = e.apply_e_s(s, &f, x.as_slice()).unwrap();
                assert!((direct - e.e_s_from_m(s, &m)).norm() < 1e-9 * direct.norm().max(1.0));
            }
            let xi: Vec<C> = e.algebra_coords(rng::gaussian(&mut g, v.dim(), 0.5).as_slice());
            assert!(e.symbol_residual(&xi).unwrap() < 1e-10, "{spec}");
        }
    }

    #[test]
    fn inversion() {
        let mut g = rng::seeded(9);
        let f = Poly::monomial(3, vec![2, 1, 0], ONE).add(&Poly::monomial(3, vec![0, 0, 3], re(-0.4)));
        let v = build_model(ModelSpec::Sym(2)).unwrap();
        let e = delta_polynomial(&v).unwrap();
        for s in [0.4, 1.3] {
            let x = cone_point(&v, &rng::gaussian(&mut g, 3, 1.0), 0.3);
            assert!(e.inversion_residual(s, &f, x.as_slice()).unwrap() < 1e-10);
        }
        let v = build_model(ModelSpec::Sym(1)).unwrap();
        let e = delta_polynomial(&v).unwrap();
        let f = Poly::monomial(1, vec![3], ONE).add(&Poly::constant(1, re(2.0)));
        assert!(e.inversion_residual(0.8, &f, &[1.7]).unwrap() < 1e-12);
    }

    #[test]
    fn non_tube_requires_reduction() {
        let v = build_model(ModelSpec::Rect(2, 3)).unwrap();
        assert!(delta_polynomial(&v).is_err());
        let red = tube_reduction(&v).unwrap().unwrap();
        assert_eq!(red.sub.spec(), ModelSpec::Rect(2, 2));
    }
}
