//! Concrete simple PJTS given by structure constants.
//!
//! Each model lives in "natural" coordinates: matrix entries (with the usual
//! `1/sqrt 2` scaling of symmetric off-diagonal pairs) or vector coordinates.
//! These coordinates are orthonormal for an inner product that is a constant
//! multiple `kappa` of the trace form, so the matrix transpose of an operator
//! is its trace-form adjoint.

use crate::error::{Error, Result};
use crate::rng;
use crate::spectral::CharacteristicData;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;

pub type Element = DVector<f64>;
pub type LinOp = DMatrix<f64>;

pub const MAX_DIM: usize = 64;
pub const MAX_RANK: usize = 4;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Sym,
    HermC,
    Cmat,
    Rect,
    Spin,
    Sphere,
}

/// A model from the supported zoo, e.g. `sym:3`, `cmat:2x3`, `spin:2,3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelSpec {
    Sym(usize),
    Herm(usize),
    Cmat(usize, usize),
    Rect(usize, usize),
    Spin(usize, usize),
    Sphere(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    ComplexStructure,
    ReducedEuclidean,
    Reduced,
    NonReduced,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Case::ComplexStructure => "complex_structure",
            Case::ReducedEuclidean => "reduced_euclidean",
            Case::Reduced => "reduced",
            Case::NonReduced => "non_reduced",
        };
        f.write_str(s)
    }
}

pub const GRAMMAR: &str = "sym:R | herm:R | cmat:RxS | rect:RxS | spin:P,Q | sphere:N";

impl ModelSpec {
    pub fn family(&self) -> Family {
        match self {
            ModelSpec::Sym(_) => Family::Sym,
            ModelSpec::Herm(_) => Family::HermC,
            ModelSpec::Cmat(..) => Family::Cmat,
            ModelSpec::Rect(..) => Family::Rect,
            ModelSpec::Spin(..) => Family::Spin,
            ModelSpec::Sphere(_) => Family::Sphere,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            ModelSpec::Sym(r) => r * (r + 1) / 2,
            ModelSpec::Herm(r) => r * r,
            ModelSpec::Cmat(r, s) => 2 * r * s,
            ModelSpec::Rect(r, s) => r * s,
            ModelSpec::Spin(p, q) => p + q,
            ModelSpec::Sphere(n) => n,
        }
    }

    pub fn rank(&self) -> usize {
        match *self {
            ModelSpec::Sym(r) | ModelSpec::Herm(r) => r,
            ModelSpec::Cmat(r, _) | ModelSpec::Rect(r, _) => r,
            ModelSpec::Spin(..) => 2,
            ModelSpec::Sphere(_) => 1,
        }
    }

    pub fn check_bounds(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match *self {
            ModelSpec::Sym(r) | ModelSpec::Herm(r) if r == 0 => return bad(format!("{self}: rank must be positive")),
            ModelSpec::Cmat(r, s) | ModelSpec::Rect(r, s) if r == 0 || r > s => {
                return bad(format!("{self}: need 1 <= R <= S"))
            }
            ModelSpec::Spin(p, q) if p == 0 || p > q || p + q < 3 => {
                return bad(format!("{self}: need 1 <= P <= Q and P+Q >= 3"))
            }
            ModelSpec::Sphere(n) if n < 3 => return bad(format!("{self}: need N >= 3")),
            _ => {}
        }
        if self.dim() > MAX_DIM {
            return bad(format!("{self}: dimension {} exceeds {MAX_DIM}", self.dim()));
        }
        if self.rank() > MAX_RANK {
            return bad(format!("{self}: rank {} exceeds {MAX_RANK}", self.rank()));
        }
        Ok(())
    }

    /// Characteristic numbers as listed in the classification tables.
    pub fn table_row(&self) -> CharacteristicData {
        let r = self.rank();
        let (a_plus, a_minus, b, c) = match *self {
            ModelSpec::Sym(r) => (usize::from(r >= 2), 0, 0, 1),
            ModelSpec::Herm(r) => (if r >= 2 { 2 } else { 0 }, 0, 0, 1),
            ModelSpec::Rect(r, s) => (usize::from(r >= 2), usize::from(r >= 2), s - r, 1),
            ModelSpec::Cmat(r, s) => {
                let h = if r >= 2 { 2 } else { 0 };
                (h, h, 2 * (s - r), 2)
            }
            ModelSpec::Spin(p, q) => (q - 1, p - 1, 0, 1),
            ModelSpec::Sphere(n) => (0, 0, 0, n),
        };
        CharacteristicData::new(r, a_plus, a_minus, b, c, matches!(self, ModelSpec::Cmat(..)))
    }

    pub fn case(&self) -> Case {
        self.table_row().case
    }

    pub fn is_tube(&self) -> bool {
        self.table_row().b == 0
    }
}

pub(crate) fn case_of(a_minus: usize, b: usize, c: usize, complex: bool) -> Case {
    if complex {
        Case::ComplexStructure
    } else if c == 1 && a_minus == 0 && b == 0 {
        Case::ReducedEuclidean
    } else if c == 1 {
        Case::Reduced
    } else {
        Case::NonReduced
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ModelSpec::Sym(r) => write!(f, "sym:{r}"),
            ModelSpec::Herm(r) => write!(f, "herm:{r}"),
            ModelSpec::Cmat(r, s) => write!(f, "cmat:{r}x{s}"),
            ModelSpec::Rect(r, s) => write!(f, "rect:{r}x{s}"),
            ModelSpec::Spin(p, q) => write!(f, "spin:{p},{q}"),
            ModelSpec::Sphere(n) => write!(f, "sphere:{n}"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::Config(format!("cannot parse model '{s}'; expected {GRAMMAR}"));
        let (fam, args) = s.trim().split_once(':').ok_or_else(err)?;
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| err());
        let pair = |sep: char| -> Result<(usize, usize)> {
            let (a, b) = args.split_once(sep).ok_or_else(err)?;
            Ok((num(a)?, num(b)?))
        };
        let spec = match fam.trim().to_ascii_lowercase().as_str() {
            "sym" => ModelSpec::Sym(num(args)?),
            "herm" => ModelSpec::Herm(num(args)?),
            "cmat" => {
                let (r, c) = pair('x')?;
                ModelSpec::Cmat(r, c)
            }
            "rect" => {
                let (r, c) = pair('x')?;
                ModelSpec::Rect(r, c)
            }
            "spin" => {
                let (p, q) = pair(',')?;
                ModelSpec::Spin(p, q)
            }
            "sphere" => ModelSpec::Sphere(num(args)?),
            _ => return Err(err()),
        };
        spec.check_bounds()?;
        Ok(spec)
    }
}

/// Where a triple system came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Base(ModelSpec),
    Hermitified(ModelSpec),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Base(s) => write!(f, "{s}"),
            Origin::Hermitified(s) => write!(f, "hermitify({s})"),
        }
    }
}

/// One structure constant: the `l`-th coordinate of `{e_i, e_j, e_k}`, stored
/// once for `i <= k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub i: u16,
    pub j: u16,
    pub k: u16,
    pub l: u16,
    pub v: f64,
}

#[derive(Clone, Debug)]
pub struct TripleSystem {
    origin: Origin,
    dim: usize,
    entries: Vec<Entry>,
    case: Case,
    j: Option<LinOp>,
    conj: Option<LinOp>,
    frame: Vec<Element>,
    kappa: f64,
    table: CharacteristicData,
    raw_asymmetry: f64,
}

impl TripleSystem {
    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn name(&self) -> String {
        self.origin.to_string()
    }

    /// The underlying spec (the source model for hermitifications).
    pub fn spec(&self) -> ModelSpec {
        match self.origin {
            Origin::Base(s) | Origin::Hermitified(s) => s,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn complex_structure(&self) -> Option<&LinOp> {
        self.j.as_ref()
    }

    /// Complex conjugation fixing the embedded real form (hermitified models only).
    pub fn conjugation(&self) -> Option<&LinOp> {
        self.conj.as_ref()
    }

    pub fn frame(&self) -> &[Element] {
        &self.frame
    }

    pub fn rank(&self) -> usize {
        self.frame.len()
    }

    /// Sum of the canonical frame, a maximal tripotent.
    pub fn frame_sum(&self) -> Element {
        self.frame.iter().fold(Element::zeros(self.dim), |acc, c| acc + c)
    }

    /// Ratio between the trace form and the coordinate inner product.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Characteristic numbers of the table row this model realizes.
    pub fn table(&self) -> &CharacteristicData {
        &self.table
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn zero(&self) -> Element {
        Element::zeros(self.dim)
    }

    pub fn basis(&self, i: usize) -> Element {
        let mut e = self.zero();
        e[i] = 1.0;
        e
    }

    pub(crate) fn check_dim(&self, x: &Element) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// `{x,y,z}` without dimension checks.
    pub fn product(&self, x: &[f64], y: &[f64], z: &[f64]) -> Element {
        let mut out = Element::zeros(self.dim);
        for e in &self.entries {
            let (i, j, k) = (e.i as usize, e.j as usize, e.k as usize);
            let yj = y[j];
            if yj == 0.0 {
                continue;
            }
            let xz = if i == k { x[i] * z[i] } else { x[i] * z[k] + x[k] * z[i] };
            out[e.l as usize] += e.v * yj * xz;
        }
        out
    }

    /// Point of the canonical flat `sum t_j c_j`.
    pub fn flat_point(&self, t: &[f64]) -> Result<Element> {
        if t.len() != self.rank() {
            return Err(Error::Dimension { expected: self.rank(), got: t.len() });
        }
        Ok(self.frame.iter().zip(t).fold(self.zero(), |acc, (c, &tj)| acc + c * tj))
    }

    /// Real coordinates to complex coordinates `z_t = x_t + i x_{N+t}`
    /// (complex-structure models only).
    pub fn to_complex(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        if self.j.is_none() {
            return Err(Error::Domain(format!("{} has no complex structure", self.name())));
        }
        let n = self.dim / 2;
        Ok((0..n).map(|t| Complex64::new(x[t], x[n + t])).collect())
    }

    /// Copy of the model with one structure constant shifted; used as a
    /// negative control for the axiom checks.
    pub fn perturbed(&self, index: usize, delta: f64) -> TripleSystem {
        let mut out = self.clone();
        if let Some(e) = out.entries.get_mut(index) {
            e.v += delta;
        }
        out
    }

    /// Embeds a vector of the source model into its hermitification.
    pub fn embed_real(&self, x: &Element) -> Result<Element> {
        if self.conj.is_none() {
            return Err(Error::Domain(format!("{} is not a hermitification", self.name())));
        }
        let n = self.dim / 2;
        if x.len() != n {
            return Err(Error::Dimension { expected: n, got: x.len() });
        }
        let mut out = self.zero();
        out.rows_mut(0, n).copy_from(x);
        Ok(out)
    }
}

/// Builds the structure constants of `f` on the standard basis.
fn tensor_from(dim: usize, f: &dyn Fn(&[f64], &[f64], &[f64]) -> Vec<f64>) -> (Vec<Entry>, f64) {
    let unit = |i: usize| {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    };
    let mut entries = Vec::new();
    let mut asym: f64 = 0.0;
    for i in 0..dim {
        for k in i..dim {
            for j in 0..dim {
                let (ei, ej, ek) = (unit(i), unit(j), unit(k));
                let out = f(&ei, &ej, &ek);
                if i != k {
                    let rev = f(&ek, &ej, &ei);
                    for (a, b) in out.iter().zip(&rev) {
                        asym = asym.max((a - b).abs());
                    }
                }
                for (l, &v) in out.iter().enumerate() {
                    if v != 0.0 {
                        entries.push(Entry { i: i as u16, j: j as u16, k: k as u16, l: l as u16, v });
                    }
                }
            }
        }
    }
    (entries, asym)
}

/// Trace-form Gram matrix `tr L(e_a, e_b)` read off the structure constants.
pub(crate) fn trace_gram(dim: usize, entries: &[Entry]) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(dim, dim);
    for e in entries {
        let (i, j, k, l) = (e.i as usize, e.j as usize, e.k as usize, e.l as usize);
        if l == k {
            g[(i, j)] += e.v;
        }
        if i != k && l == i {
            g[(k, j)] += e.v;
        }
    }
    g
}

fn kappa_of(dim: usize, entries: &[Entry], name: &str) -> Result<f64> {
    let g = trace_gram(dim, entries);
    let kappa = g[(0, 0)];
    let dev = (&g - DMatrix::identity(dim, dim) * kappa).amax();
    if kappa <= 0.0 || dev > 1e-12 * kappa {
        return Err(Error::Consistency(format!(
            "{name}: trace form is not a multiple of the coordinate inner product (deviation {dev:e})"
        )));
    }
    Ok(kappa)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum MatKind {
    Sym,
    Herm,
    Rect,
    Cmat,
}

/// Coordinates of the matrix families.
#[derive(Clone, Copy, Debug)]
struct MatLayout {
    kind: MatKind,
    r: usize,
    s: usize,
}

impl MatLayout {
    fn dim(&self) -> usize {
        match self.kind {
            MatKind::Sym => self.r * (self.r + 1) / 2,
            MatKind::Herm => self.r * self.r,
            MatKind::Rect => self.r * self.s,
            MatKind::Cmat => 2 * self.r * self.s,
        }
    }

    fn pair_index(&self, a: usize, b: usize) -> usize {
        // position of (a,b), a<b, in the lexicographic list of pairs
        let r = self.r;
        a * (2 * r - a - 1) / 2 + (b - a - 1)
    }

    /// For each entry `(a,b)` of the matrix, its expression as a linear
    /// combination of coordinates.
    fn entry_map(&self) -> Vec<Vec<Vec<(usize, Complex64)>>> {
        let (r, s) = (self.r, self.s);
        let re = |v: f64| Complex64::new(v, 0.0);
        let mut m = vec![vec![Vec::new(); s]; r];
        match self.kind {
            MatKind::Sym => {
                for (a, row) in m.iter_mut().enumerate() {
                    for (b, cell) in row.iter_mut().enumerate() {
                        if a == b {
                            cell.push((a, re(1.0)));
                        } else {
                            let p = self.pair_index(a.min(b), a.max(b));
                            cell.push((r + p, re(SQRT_HALF)));
                        }
                    }
                }
            }
            MatKind::Herm => {
                for (a, row) in m.iter_mut().enumerate() {
                    for (b, cell) in row.iter_mut().enumerate() {
                        if a == b {
                            cell.push((a, re(1.0)));
                        } else {
                            let p = self.pair_index(a.min(b), a.max(b));
                            let sign = if a < b { 1.0 } else { -1.0 };
                            cell.push((r + 2 * p, re(SQRT_HALF)));
                            cell.push((r + 2 * p + 1, Complex64::new(0.0, sign * SQRT_HALF)));
                        }
                    }
                }
            }
            MatKind::Rect => {
                for (a, row) in m.iter_mut().enumerate() {
                    for (b, cell) in row.iter_mut().enumerate() {
                        cell.push((a * s + b, re(1.0)));
                    }
                }
            }
            MatKind::Cmat => {
                let n = r * s;
                for (a, row) in m.iter_mut().enumerate() {
                    for (b, cell) in row.iter_mut().enumerate() {
                        cell.push((a * s + b, re(1.0)));
                        cell.push((n + a * s + b, Complex64::new(0.0, 1.0)));
                    }
                }
            }
        }
        m
    }

    fn to_matrix(&self, map: &[Vec<Vec<(usize, Complex64)>>], x: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.r, self.s, |a, b| map[a][b].iter().map(|&(t, c)| c * x[t]).sum())
    }

    fn from_matrix(&self, m: &DMatrix<Complex64>) -> Vec<f64> {
        let (r, s) = (self.r, self.s);
        let mut x = vec![0.0; self.dim()];
        match self.kind {
            MatKind::Sym => {
                for a in 0..r {
                    x[a] = m[(a, a)].re;
                    for b in a + 1..r {
                        x[r + self.pair_index(a, b)] = (m[(a, b)].re + m[(b, a)].re) * SQRT_HALF;
                    }
                }
            }
            MatKind::Herm => {
                for a in 0..r {
                    x[a] = m[(a, a)].re;
                    for b in a + 1..r {
                        let p = self.pair_index(a, b);
                        x[r + 2 * p] = (m[(a, b)].re + m[(b, a)].re) * SQRT_HALF;
                        x[r + 2 * p + 1] = (m[(a, b)].im - m[(b, a)].im) * SQRT_HALF;
                    }
                }
            }
            MatKind::Rect => {
                for a in 0..r {
                    for b in 0..s {
                        x[a * s + b] = m[(a, b)].re;
                    }
                }
            }
            MatKind::Cmat => {
                let n = r * s;
                for a in 0..r {
                    for b in 0..s {
                        x[a * s + b] = m[(a, b)].re;
                        x[n + a * s + b] = m[(a, b)].im;
                    }
                }
            }
        }
        x
    }

    fn diag_coord(&self, j: usize) -> usize {
        match self.kind {
            MatKind::Sym | MatKind::Herm => j,
            MatKind::Rect | MatKind::Cmat => j * self.s + j,
        }
    }
}

fn mat_layout(spec: &ModelSpec) -> Option<MatLayout> {
    let (kind, r, s) = match *spec {
        ModelSpec::Sym(r) => (MatKind::Sym, r, r),
        ModelSpec::Herm(r) => (MatKind::Herm, r, r),
        ModelSpec::Rect(r, s) => (MatKind::Rect, r, s),
        ModelSpec::Cmat(r, s) => (MatKind::Cmat, r, s),
        _ => return None,
    };
    Some(MatLayout { kind, r, s })
}

/// Matrix entries of a matrix-family model as linear forms in the coordinates:
/// `entry(a,b) = sum coef * x[index]`. `None` for vector models.
pub fn matrix_entry_map(spec: &ModelSpec) -> Option<Vec<Vec<Vec<(usize, Complex64)>>>> {
    mat_layout(spec).map(|l| l.entry_map())
}

/// Coordinates of the matrix with the given (complex) entries.
pub fn coords_of_matrix(spec: &ModelSpec, m: &DMatrix<Complex64>) -> Option<Element> {
    mat_layout(spec).map(|l| Element::from_vec(l.from_matrix(m)))
}

/// Matrix realization of a coordinate vector.
pub fn matrix_of_coords(spec: &ModelSpec, x: &[f64]) -> Option<DMatrix<Complex64>> {
    mat_layout(spec).map(|l| l.to_matrix(&l.entry_map(), x))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Builds a validated model with its canonical Jordan frame.
pub fn build_model(spec: ModelSpec) -> Result<TripleSystem> {
    spec.check_bounds()?;
    let dim = spec.dim();
    let name = spec.to_string();
    let (entries, asym, frame, j) = match spec {
        ModelSpec::Sym(_) | ModelSpec::Herm(_) | ModelSpec::Rect(..) | ModelSpec::Cmat(..) => {
            let lay = mat_layout(&spec).expect("matrix family");
            let map = lay.entry_map();
            let f = |x: &[f64], y: &[f64], z: &[f64]| {
                let (xm, ym, zm) = (lay.to_matrix(&map, x), lay.to_matrix(&map, y), lay.to_matrix(&map, z));
                let ya = ym.adjoint();
                let p = (&xm * &ya * &zm + &zm * &ya * &xm) * Complex64::new(0.5, 0.0);
                lay.from_matrix(&p)
            };
            let (entries, asym) = tensor_from(dim, &f);
            let frame = (0..spec.rank())
                .map(|jj| {
                    let mut c = Element::zeros(dim);
                    c[lay.diag_coord(jj)] = 1.0;
                    c
                })
                .collect();
            let j = if lay.kind == MatKind::Cmat {
                let n = dim / 2;
                let mut jm = LinOp::zeros(dim, dim);
                for t in 0..n {
                    jm[(t, n + t)] = -1.0;
                    jm[(n + t, t)] = 1.0;
                }
                Some(jm)
            } else {
                None
            };
            (entries, asym, frame, j)
        }
        ModelSpec::Spin(p, _) => {
            let sign: Vec<f64> = (0..dim).map(|i| if i < p { 1.0 } else { -1.0 }).collect();
            let f = |x: &[f64], y: &[f64], z: &[f64]| {
                let xy = dot(x, y);
                let zy = dot(z, y);
                let xsz: f64 = (0..dim).map(|i| sign[i] * x[i] * z[i]).sum();
                (0..dim).map(|i| xy * z[i] + zy * x[i] - xsz * sign[i] * y[i]).collect()
            };
            let (entries, asym) = tensor_from(dim, &f);
            let mut c1 = Element::zeros(dim);
            let mut c2 = Element::zeros(dim);
            c1[0] = 0.5;
            c1[p] = 0.5;
            c2[0] = 0.5;
            c2[p] = -0.5;
            (entries, asym, vec![c1, c2], None)
        }
        ModelSpec::Sphere(_) => {
            let f = |x: &[f64], y: &[f64], z: &[f64]| {
                let (xy, zy, xz) = (dot(x, y), dot(z, y), dot(x, z));
                (0..dim).map(|i| xy * z[i] + zy * x[i] - xz * y[i]).collect()
            };
            let (entries, asym) = tensor_from(dim, &f);
            let mut c = Element::zeros(dim);
            c[0] = 1.0;
            (entries, asym, vec![c], None)
        }
    };
    let kappa = kappa_of(dim, &entries, &name)?;
    let v = TripleSystem {
        origin: Origin::Base(spec),
        dim,
        entries,
        case: spec.case(),
        j,
        conj: None,
        frame,
        kappa,
        table: spec.table_row(),
        raw_asymmetry: asym,
    };
    check_frame(&v)?;
    Ok(v)
}

fn check_frame(v: &TripleSystem) -> Result<()> {
    for (a, c) in v.frame.iter().enumerate() {
        let ccc = v.product(c.as_slice(), c.as_slice(), c.as_slice());
        if (&ccc - c).amax() > 1e-12 {
            return Err(Error::Consistency(format!("{}: frame element {a} is not a tripotent", v.name())));
        }
    }
    Ok(())
}

/// Complexification of a PJTS, stored realified as `(Re, Im)` coordinates.
pub fn hermitify(v: &TripleSystem) -> Result<TripleSystem> {
    if v.j.is_some() {
        return Err(Error::Domain(format!("{} already has a complex structure", v.name())));
    }
    let spec = match v.origin {
        Origin::Base(s) => s,
        Origin::Hermitified(_) => unreachable!("hermitified models carry J"),
    };
    let n = v.dim;
    let dim = 2 * n;
    if dim > MAX_DIM {
        return Err(Error::Config(format!("hermitification of {} exceeds dimension {MAX_DIM}", v.name())));
    }
    let f = |x: &[f64], y: &[f64], z: &[f64]| {
        let (xr, xi) = x.split_at(n);
        let (yr, yi) = y.split_at(n);
        let (zr, zi) = z.split_at(n);
        let bi: Vec<f64> = yi.iter().map(|t| -t).collect();
        let t = |a: &[f64], b: &[f64], c: &[f64]| v.product(a, b, c);
        let re = t(xr, yr, zr) - t(xr, &bi, zi) - t(xi, yr, zi) - t(xi, &bi, zr);
        let im = t(xr, yr, zi) + t(xr, &bi, zr) + t(xi, yr, zr) - t(xi, &bi, zi);
        re.iter().chain(im.iter()).copied().collect::<Vec<f64>>()
    };
    let (entries, asym) = tensor_from(dim, &f);
    let kappa = kappa_of(dim, &entries, &format!("hermitify({})", v.name()))?;

    let mut jm = LinOp::zeros(dim, dim);
    let mut conj = LinOp::identity(dim, dim);
    for t in 0..n {
        jm[(t, n + t)] = -1.0;
        jm[(n + t, t)] = 1.0;
        conj[(n + t, n + t)] = -1.0;
    }

    let base = v.table();
    let table = match v.case {
        Case::NonReduced => {
            let ac = base.c - 2;
            CharacteristicData::new(2 * base.r, ac, ac, base.b, 2, true)
        }
        _ => CharacteristicData::new(base.r, base.a, base.a, 2 * base.b, 2, true),
    };

    let mut frame = Vec::new();
    for c in &v.frame {
        let mut up = Element::zeros(dim);
        up.rows_mut(0, n).copy_from(c);
        if v.case != Case::NonReduced {
            frame.push(up);
            continue;
        }
        // split c into (c + i w)/2 and (c - i w)/2 with w a tripotent in V^-(c,1)
        let l = crate::operators::l_op_unchecked(v, c, c);
        let id = LinOp::identity(n, n);
        let p1 = &l * (&l * 2.0 - &id);
        let q = crate::operators::q_op_unchecked(v, c);
        let m = &p1 * (&id - &q) * 0.5;
        let (col, _) =
            (0..n).map(|k| (k, m.column(k).norm())).fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let mut w: Element = m.column(col).into_owned();
        let www = v.product(w.as_slice(), w.as_slice(), w.as_slice());
        let lam = www.dot(&w) / w.dot(&w);
        if lam <= 0.0 || (&www - &w * lam).amax() > 1e-10 * www.amax() {
            return Err(Error::Consistency(format!("{}: no tripotent in V^-(c,1)", v.name())));
        }
        w /= lam.sqrt();
        for sign in [1.0, -1.0] {
            let mut cj = Element::zeros(dim);
            cj.rows_mut(0, n).copy_from(&(c * 0.5));
            cj.rows_mut(n, n).copy_from(&(&w * (0.5 * sign)));
            frame.push(cj);
        }
    }

    let out = TripleSystem {
        origin: Origin::Hermitified(spec),
        dim,
        entries,
        case: Case::ComplexStructure,
        j: Some(jm),
        conj: Some(conj),
        frame,
        kappa,
        table,
        raw_asymmetry: asym,
    };
    check_frame(&out)?;
    Ok(out)
}

/// `{x,y,z}` with dimension checks.
pub fn triple_product(v: &TripleSystem, x: &Element, y: &Element, z: &Element) -> Result<Element> {
    v.check_dim(x)?;
    v.check_dim(y)?;
    v.check_dim(z)?;
    Ok(v.product(x.as_slice(), y.as_slice(), z.as_slice()))
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct AxiomReport {
    /// max |{x,y,z} - {z,y,x}| over basis triples
    pub symmetry_residual: f64,
    /// max residual of the five-term Jordan identity
    pub jordan_residual: f64,
    pub gram_min_eig: f64,
    /// residual of `J^2 = -1`, `J{x,y,z} = {Jx,y,z} = -{x,Jy,z}`
    pub complex_structure_residual: Option<f64>,
    pub quintuples_checked: usize,
    pub exhaustive: bool,
}

impl AxiomReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.symmetry_residual <= tol
            && self.jordan_residual <= tol
            && self.gram_min_eig > 0.0
            && self.complex_structure_residual.is_none_or(|r| r <= tol)
    }
}

const EXHAUSTIVE_DIM: usize = 16;

/// Residuals of both triple-system axioms and the smallest eigenvalue of the
/// trace-form Gram matrix. Runs over all basis quintuples up to dimension 16
/// and over 1000 seeded random quintuples beyond.
pub fn validate_axioms(v: &TripleSystem) -> AxiomReport {
    let n = v.dim;
    let mut sym_res = v.raw_asymmetry;
    let mut jordan: f64 = 0.0;
    let mut checked = 0usize;
    let exhaustive = n <= EXHAUSTIVE_DIM;
    if exhaustive {
        let ls: Vec<LinOp> =
            (0..n * n).map(|ab| crate::operators::l_op_unchecked(v, &v.basis(ab / n), &v.basis(ab % n))).collect();
        let l = |a: usize, b: usize| &ls[a * n + b];
        for a in 0..n {
            for b in 0..n {
                let lab = l(a, b);
                let lba = l(b, a);
                for x in 0..n {
                    for y in 0..n {
                        let lxy = l(x, y);
                        let lhs = lab * lxy - lxy * lab;
                        let u = lab.column(x);
                        let w = lba.column(y);
                        let mut rhs = LinOp::zeros(n, n);
                        for m in 0..n {
                            if u[m] != 0.0 {
                                rhs += l(m, y) * u[m];
                            }
                            if w[m] != 0.0 {
                                rhs -= l(x, m) * w[m];
                            }
                        }
                        jordan = jordan.max((lhs - rhs).amax());
                        checked += n;
                    }
                }
            }
        }
    } else {
        let mut g = rng::seeded(0x5eed_0001 ^ n as u64);
        for _ in 0..1000 {
            let s: Vec<Element> = (0..5).map(|_| rng::gaussian(&mut g, n, 1.0)).collect();
            let (a, b, x, y, z) = (&s[0], &s[1], &s[2], &s[3], &s[4]);
            let p = |p: &Element, q: &Element, r: &Element| v.product(p.as_slice(), q.as_slice(), r.as_slice());
            let lhs = p(a, b, &p(x, y, z));
            let rhs = p(&p(a, b, x), y, z) - p(x, &p(b, a, y), z) + p(x, y, &p(a, b, z));
            let scale = a.norm() * b.norm() * x.norm() * y.norm() * z.norm();
            jordan = jordan.max((lhs - rhs).amax() / scale.max(1.0));
            let d = p(x, y, z) - p(z, y, x);
            sym_res = sym_res.max(d.amax());
            checked += 1;
        }
    }
    let gram = trace_gram(n, &v.entries);
    let gram_sym = (&gram + gram.transpose()) * 0.5;
    let asym = (&gram - gram.transpose()).amax();
    let eig = gram_sym.symmetric_eigenvalues();
    let min_eig = if asym > 1e-12 * gram.amax() { f64::NAN } else { eig.min() };

    let cs = v.j.as_ref().map(|j| {
        let mut res = (j * j + LinOp::identity(n, n)).amax();
        let mut g = rng::seeded(0x5eed_0002 ^ n as u64);
        for _ in 0..200 {
            let x = rng::gaussian(&mut g, n, 1.0);
            let y = rng::gaussian(&mut g, n, 1.0);
            let z = rng::gaussian(&mut g, n, 1.0);
            let p = |a: &Element, b: &Element, c: &Element| v.product(a.as_slice(), b.as_slice(), c.as_slice());
            let base = j * p(&x, &y, &z);
            let s = x.norm() * y.norm() * z.norm();
            res = res.max((&base - p(&(j * &x), &y, &z)).amax() / s);
            res = res.max((&base + p(&x, &(j * &y), &z)).amax() / s);
        }
        res
    });

    AxiomReport {
        symmetry_residual: sym_res,
        jordan_residual: jordan,
        gram_min_eig: min_eig,
        complex_structure_residual: cs,
        quintuples_checked: checked,
        exhaustive,
    }
}

/// The models used by the acceptance zoo.
pub fn zoo() -> Vec<ModelSpec> {
    vec![
        ModelSpec::Sym(1),
        ModelSpec::Sym(2),
        ModelSpec::Sym(3),
        ModelSpec::Herm(2),
        ModelSpec::Cmat(1, 1),
        ModelSpec::Cmat(1, 2),
        ModelSpec::Cmat(2, 2),
        ModelSpec::Rect(2, 3),
        ModelSpec::Spin(2, 3),
        ModelSpec::Sphere(3),
        ModelSpec::Sphere(4),
        ModelSpec::Sphere(5),
    ]
}
