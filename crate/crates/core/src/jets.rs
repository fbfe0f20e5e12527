//! Truncated multivariate Taylor expansions.
//!
//! A [`Jet`] stores `f_alpha = d^alpha f(x0) / alpha!` for all multi-indices
//! with `|alpha| <= order`, in graded lexicographic order. Truncating to a
//! lower order is a prefix of the coefficient table.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

pub const MAX_ORDER: usize = 6;

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn norm(self) -> f64;
    fn exp(self) -> Self;
    /// Principal power; `None` where it is undefined for the scalar field.
    fn powf(self, s: f64) -> Option<Self>;
    fn conj(self) -> Self;
    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn norm(self) -> f64 {
        self.abs()
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn powf(self, s: f64) -> Option<Self> {
        (self > 0.0).then(|| f64::powf(self, s))
    }
    fn conj(self) -> Self {
        self
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn powf(self, s: f64) -> Option<Self> {
        (self != Complex64::new(0.0, 0.0)).then(|| Complex64::powf(self, s))
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Multi-index tables for a given `(n_vars, order)`.
#[derive(Debug)]
pub struct Layout {
    pub n: usize,
    pub order: usize,
    pub indices: Vec<Vec<u8>>,
    degrees: Vec<usize>,
    /// first position of each total degree, plus the total length
    degree_start: Vec<usize>,
    lookup: HashMap<Vec<u8>, usize>,
    /// for each target `gamma`, all `(alpha, beta)` with `alpha + beta = gamma`
    pairs: Vec<Vec<(u32, u32)>>,
    factorial: Vec<f64>,
}

fn monomials(n: usize, deg: usize) -> Vec<Vec<u8>> {
    // lexicographically decreasing exponent vectors of total degree `deg`
    if n == 0 {
        return if deg == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=deg).rev() {
        for mut rest in monomials(n - 1, deg - first) {
            rest.insert(0, first as u8);
            out.push(rest);
        }
    }
    out
}

impl Layout {
    fn build(n: usize, order: usize) -> Layout {
        let mut indices = Vec::new();
        let mut degree_start = Vec::new();
        let mut degrees = Vec::new();
        for d in 0..=order {
            degree_start.push(indices.len());
            for m in monomials(n, d) {
                indices.push(m);
                degrees.push(d);
            }
        }
        degree_start.push(indices.len());
        let lookup: HashMap<Vec<u8>, usize> = indices.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut pairs = vec![Vec::new(); indices.len()];
        for (ia, a) in indices.iter().enumerate() {
            for (ib, b) in indices.iter().enumerate() {
                if degrees[ia] + degrees[ib] > order {
                    if degrees[ib] > order - degrees[ia] {
                        break;
                    }
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                pairs[lookup[&sum]].push((ia as u32, ib as u32));
            }
        }
        let fact = |k: u8| (1..=k as u32).map(f64::from).product::<f64>();
        let factorial = indices.iter().map(|m| m.iter().map(|&k| fact(k)).product()).collect();
        Layout { n, order, indices, degrees, degree_start, lookup, pairs, factorial }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index_of(&self, alpha: &[u8]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    /// Number of coefficients of total degree at most `d`.
    pub fn prefix_len(&self, d: usize) -> usize {
        self.degree_start[d.min(self.order) + 1]
    }

    pub fn factorial(&self, i: usize) -> f64 {
        self.factorial[i]
    }
}

/// Shared layout for `(n, order)`.
pub fn layout(n: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("layout cache poisoned");
    guard.entry((n, order)).or_insert_with(|| Arc::new(Layout::build(n, order))).clone()
}

#[derive(Clone, Debug)]
pub struct Jet<T: Scalar> {
    layout: Arc<Layout>,
    coeffs: Vec<T>,
}

impl<T: Scalar> PartialEq for Jet<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n_vars() == other.n_vars() && self.order() == other.order() && self.coeffs == other.coeffs
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::Config(format!("jet order {order} exceeds {MAX_ORDER}")));
    }
    Ok(())
}

impl<T: Scalar> Jet<T> {
    pub fn zero(n: usize, order: usize) -> Result<Self> {
        check_order(order)?;
        let layout = layout(n, order);
        let coeffs = vec![T::zero(); layout.len()];
        Ok(Jet { layout, coeffs })
    }

    pub fn constant(n: usize, order: usize, v: T) -> Result<Self> {
        let mut j = Self::zero(n, order)?;
        j.coeffs[0] = v;
        Ok(j)
    }

    /// Jet of the coordinate function `x_i` at a base point with `x_i = x0`.
    pub fn variable(n: usize, order: usize, i: usize, x0: T) -> Result<Self> {
        if i >= n {
            return Err(Error::Dimension { expected: n, got: i + 1 });
        }
        let mut j = Self::constant(n, order, x0)?;
        if order >= 1 {
            let mut alpha = vec![0u8; n];
            alpha[i] = 1;
            let k = j.layout.index_of(&alpha).expect("degree one index");
            j.coeffs[k] = T::one();
        }
        Ok(j)
    }

    pub fn from_coeffs(n: usize, order: usize, coeffs: Vec<T>) -> Result<Self> {
        check_order(order)?;
        let layout = layout(n, order);
        if coeffs.len() != layout.len() {
            return Err(Error::Dimension { expected: layout.len(), got: coeffs.len() });
        }
        Ok(Jet { layout, coeffs })
    }

    pub fn n_vars(&self) -> usize {
        self.layout.n
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    /// Taylor coefficient at `alpha` (zero beyond the truncation order).
    pub fn coeff(&self, alpha: &[u8]) -> T {
        self.layout.index_of(alpha).map(|i| self.coeffs[i]).unwrap_or_else(T::zero)
    }

    /// `d^alpha f(x0)`.
    pub fn derivative(&self, alpha: &[u8]) -> T {
        match self.layout.index_of(alpha) {
            Some(i) => self.coeffs[i] * T::from_f64(self.layout.factorial(i)),
            None => T::zero(),
        }
    }

    pub fn truncate(&self, order: usize) -> Jet<T> {
        let order = order.min(self.order());
        let layout = layout(self.n_vars(), order);
        let coeffs = self.coeffs[..layout.len()].to_vec();
        Jet { layout, coeffs }
    }

    fn check_shape(&self, other: &Jet<T>) -> Result<()> {
        if self.n_vars() != other.n_vars() || self.order() != other.order() {
            return Err(Error::Config(format!(
                "jet shapes differ: ({}, {}) vs ({}, {})",
                self.n_vars(),
                self.order(),
                other.n_vars(),
                other.order()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet<T>) -> Result<Jet<T>> {
        self.check_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Jet<T>) -> Result<Jet<T>> {
        self.check_shape(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Jet<T>, f: impl Fn(T, T) -> T) -> Jet<T> {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect();
        Jet { layout: self.layout.clone(), coeffs }
    }

    pub fn scale(&self, s: T) -> Jet<T> {
        Jet { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(|&a| a * s).collect() }
    }

    pub fn add_constant(&self, s: T) -> Jet<T> {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Jet<T> {
        Jet { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(|&a| f(a)).collect() }
    }

    /// Truncated product.
    pub fn mul(&self, other: &Jet<T>) -> Result<Jet<T>> {
        self.check_shape(other)?;
        let coeffs = self
            .layout
            .pairs
            .iter()
            .map(|ps| {
                let mut acc = T::zero();
                for &(a, b) in ps {
                    acc += self.coeffs[a as usize] * other.coeffs[b as usize];
                }
                acc
            })
            .collect();
        Ok(Jet { layout: self.layout.clone(), coeffs })
    }

    /// `a^s` from `E(b) a = s b E(a)`, with `E` the Euler operator of the
    /// displacement.
    pub fn real_power(&self, s: f64) -> Result<Jet<T>> {
        let a0 = self.coeffs[0];
        let b0 = a0.powf(s).ok_or_else(|| Error::Domain(format!("power {s} of jet with constant term {a0:?}")))?;
        let lay = &self.layout;
        let mut b = vec![T::zero(); lay.len()];
        b[0] = b0;
        for g in 1..lay.len() {
            let k = lay.degrees[g] as f64;
            let mut acc = T::zero();
            for &(ia, ib) in &lay.pairs[g] {
                let (ia, ib) = (ia as usize, ib as usize);
                if ia == 0 {
                    continue;
                }
                let w = s * lay.degrees[ia] as f64 - lay.degrees[ib] as f64;
                acc += self.coeffs[ia] * b[ib] * T::from_f64(w);
            }
            b[g] = acc / (a0 * T::from_f64(k));
        }
        Ok(Jet { layout: self.layout.clone(), coeffs: b })
    }

    pub fn exp(&self) -> Jet<T> {
        let lay = &self.layout;
        let mut b = vec![T::zero(); lay.len()];
        b[0] = self.coeffs[0].exp();
        for g in 1..lay.len() {
            let k = lay.degrees[g] as f64;
            let mut acc = T::zero();
            for &(ia, ib) in &lay.pairs[g] {
                let (ia, ib) = (ia as usize, ib as usize);
                if ia == 0 {
                    continue;
                }
                acc += self.coeffs[ia] * b[ib] * T::from_f64(lay.degrees[ia] as f64);
            }
            b[g] = acc / T::from_f64(k);
        }
        Jet { layout: self.layout.clone(), coeffs: b }
    }

    pub fn recip(&self) -> Result<Jet<T>> {
        self.real_power(-1.0)
    }

    pub fn conj(&self) -> Jet<T> {
        self.map(T::conj)
    }

    pub fn to_complex(&self) -> Jet<Complex64> {
        Jet { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(|a| a.to_complex()).collect() }
    }

    /// Largest coefficient modulus.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
}

impl Jet<Complex64> {
    pub fn re(&self) -> Jet<f64> {
        Jet { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(|a| a.re).collect() }
    }
}

/// Sparse polynomial `sum c_alpha x^alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T: Scalar> {
    pub n: usize,
    pub terms: Vec<(Vec<u8>, T)>,
}

impl<T: Scalar> Poly<T> {
    pub fn zero(n: usize) -> Self {
        Poly { n, terms: Vec::new() }
    }

    pub fn constant(n: usize, c: T) -> Self {
        Poly { n, terms: vec![(vec![0; n], c)] }
    }

    /// `sum coef_i x_i`.
    pub fn linear(n: usize, coefs: &[(usize, T)]) -> Self {
        let terms = coefs
            .iter()
            .map(|&(i, c)| {
                let mut a = vec![0u8; n];
                a[i] = 1;
                (a, c)
            })
            .collect();
        Poly { n, terms }.normalized()
    }

    pub fn monomial(n: usize, alpha: Vec<u8>, c: T) -> Self {
        debug_assert_eq!(alpha.len(), n);
        Poly { n, terms: vec![(alpha, c)] }
    }

    fn normalized(self) -> Self {
        let mut map: BTreeMap<Vec<u8>, T> = BTreeMap::new();
        for (a, c) in self.terms {
            let e = map.entry(a).or_insert_with(T::zero);
            *e += c;
        }
        let terms = map.into_iter().filter(|(_, c)| c.norm() != 0.0).collect();
        Poly { n: self.n, terms }
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(a, _)| a.iter().map(|&k| k as usize).sum()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Poly<T>) -> Poly<T> {
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Poly { n: self.n, terms }.normalized()
    }

    pub fn scale(&self, s: T) -> Poly<T> {
        Poly { n: self.n, terms: self.terms.iter().map(|(a, c)| (a.clone(), *c * s)).collect() }.normalized()
    }

    pub fn mul(&self, other: &Poly<T>) -> Poly<T> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                terms.push((a.iter().zip(b).map(|(x, y)| x + y).collect(), *ca * *cb));
            }
        }
        Poly { n: self.n, terms }.normalized()
    }

    pub fn conj(&self) -> Poly<T> {
        Poly { n: self.n, terms: self.terms.iter().map(|(a, c)| (a.clone(), c.conj())).collect() }
    }

    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (a, c) in &self.terms {
            let mut t = *c;
            for (&k, &xi) in a.iter().zip(x) {
                for _ in 0..k {
                    t = t * xi;
                }
            }
            acc += t;
        }
        acc
    }

    /// `p(A y)` as a polynomial in `y`, for `A` given by the images of the
    /// coordinate functions.
    pub fn substitute_linear(&self, images: &[Poly<T>]) -> Poly<T> {
        let m = images.first().map(|p| p.n).unwrap_or(self.n);
        let mut acc = Poly::zero(m);
        for (a, c) in &self.terms {
            let mut t = Poly::constant(m, *c);
            for (i, &k) in a.iter().enumerate() {
                for _ in 0..k {
                    t = t.mul(&images[i]);
                }
            }
            acc = acc.add(&t);
        }
        acc
    }
}

/// Jet of a polynomial at `x0`.
pub fn jet_of_polynomial<T: Scalar>(p: &Poly<T>, x0: &[T], order: usize) -> Result<Jet<T>> {
    if x0.len() != p.n {
        return Err(Error::Dimension { expected: p.n, got: x0.len() });
    }
    let n = p.n;
    let vars: Vec<Jet<T>> = (0..n).map(|i| Jet::variable(n, order, i, x0[i])).collect::<Result<_>>()?;
    let maxdeg: Vec<usize> = (0..n).map(|i| p.terms.iter().map(|(a, _)| a[i] as usize).max().unwrap_or(0)).collect();
    let mut powers: Vec<Vec<Jet<T>>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = vec![Jet::constant(n, order, T::one())?];
        for k in 1..=maxdeg[i] {
            let next = row[k - 1].mul(&vars[i])?;
            row.push(next);
        }
        powers.push(row);
    }
    let mut acc = Jet::zero(n, order)?;
    for (a, c) in &p.terms {
        let mut t = Jet::constant(n, order, *c)?;
        for (i, &k) in a.iter().enumerate() {
            if k > 0 {
                t = t.mul(&powers[i][k as usize])?;
            }
        }
        acc = acc.add(&t)?;
    }
    Ok(acc)
}

/// `P(d) f (x0) = sum_alpha P_alpha alpha! f_alpha`.
pub fn apply_const_op<T: Scalar>(p: &Poly<T>, f: &Jet<T>) -> Result<T> {
    if p.n != f.n_vars() {
        return Err(Error::Dimension { expected: f.n_vars(), got: p.n });
    }
    if p.degree() > f.order() {
        return Err(Error::Domain(format!("operator order {} exceeds jet order {}", p.degree(), f.order())));
    }
    let mut acc = T::zero();
    for (a, c) in &p.terms {
        acc += *c * f.derivative(a);
    }
    Ok(acc)
}

/// Jet of `P(d) F` at the same base point, of order `order(F) - deg P`.
pub fn apply_const_op_jet<T: Scalar>(p: &Poly<T>, f: &Jet<T>) -> Result<Jet<T>> {
    if p.n != f.n_vars() {
        return Err(Error::Dimension { expected: f.n_vars(), got: p.n });
    }
    let dp = p.degree();
    if dp > f.order() {
        return Err(Error::Domain(format!("operator order {dp} exceeds jet order {}", f.order())));
    }
    let out_order = f.order() - dp;
    let mut out = Jet::zero(f.n_vars(), out_order)?;
    let lay_out = layout(f.n_vars(), out_order);
    let lay_in = f.layout();
    for (bi, beta) in lay_out.indices.iter().enumerate() {
        let mut acc = T::zero();
        for (a, c) in &p.terms {
            let ab: Vec<u8> = a.iter().zip(beta).map(|(x, y)| x + y).collect();
            if let Some(k) = lay_in.index_of(&ab) {
                let w = lay_in.factorial(k) / lay_out.factorial(bi);
                acc += *c * f.coeffs[k] * T::from_f64(w);
            }
        }
        out.coeffs[bi] = acc;
    }
    Ok(out)
}
