//! Tripotents, Peirce decompositions and characteristic numbers.

use crate::error::{Error, Result};
use crate::models::{case_of, Case, Element, LinOp, TripleSystem};
use crate::operators::{l_op, l_op_unchecked, q_op_unchecked};
use serde::Serialize;

const CLUSTER_TOL: f64 = 1e-8;
const ORTHO_TOL: f64 = 1e-10;

/// Rank, Peirce multiplicities and genus `p = (r-1)a + b + 2c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CharacteristicData {
    pub r: usize,
    pub a: usize,
    pub a_plus: usize,
    pub a_minus: usize,
    pub b: usize,
    pub c: usize,
    pub p: usize,
    pub case: Case,
}

impl CharacteristicData {
    pub fn new(r: usize, a_plus: usize, a_minus: usize, b: usize, c: usize, complex: bool) -> Self {
        let a = a_plus + a_minus;
        let p = (r - 1) * a + b + 2 * c;
        CharacteristicData { r, a, a_plus, a_minus, b, c, p, case: case_of(a_minus, b, c, complex) }
    }

    /// Multiplicity over the complex numbers (complex-structure models).
    pub fn a_complex(&self) -> usize {
        self.a / 2
    }

    /// Dimension implied by the Peirce block sizes.
    pub fn implied_dim(&self) -> usize {
        self.r * self.c + self.r * (self.r - 1) / 2 * self.a + self.r * self.b
    }
}

pub fn is_tripotent(v: &TripleSystem, c: &Element, tol: f64) -> bool {
    if c.len() != v.dim() {
        return false;
    }
    let ccc = v.product(c.as_slice(), c.as_slice(), c.as_slice());
    (ccc - c).norm() <= tol * c.norm()
}

#[derive(Clone, Debug)]
pub struct PeirceData {
    pub tripotent: Element,
    pub p0: LinOp,
    pub p_half: LinOp,
    pub p1: LinOp,
    /// `+1` and `-1` eigenspaces of `Q(c)` inside `V(c,1)`
    pub p1_plus: LinOp,
    pub p1_minus: LinOp,
    pub d0: usize,
    pub d_half: usize,
    pub d1: usize,
    pub d1_plus: usize,
    pub d1_minus: usize,
    /// distance of the spectrum of `L(c,c)` from `{0, 1/2, 1}`
    pub cluster_deviation: f64,
}

fn proj_dim(p: &LinOp) -> usize {
    p.trace().round().max(0.0) as usize
}

/// Largest distance of the spectrum of `L(c,c)` from `{0, 1/2, 1}`.
pub fn cluster_deviation(l: &LinOp) -> f64 {
    let sym = (l + l.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .map(|&ev| [0.0, 0.5, 1.0].iter().map(|t| (ev - t).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

pub fn peirce(v: &TripleSystem, c: &Element) -> Result<PeirceData> {
    v.check_dim(c)?;
    if !is_tripotent(v, c, 1e-10) {
        return Err(Error::Domain("Peirce decomposition needs a tripotent".into()));
    }
    let l = l_op_unchecked(v, c, c);
    let dev = cluster_deviation(&l);
    if dev > CLUSTER_TOL {
        return Err(Error::Degenerate(format!("L(c,c) eigenvalue {dev:e} away from {{0, 1/2, 1}}")));
    }
    let n = v.dim();
    let id = LinOp::identity(n, n);
    // Lagrange interpolation on the spectrum {0, 1/2, 1}
    let p1 = &l * (&l * 2.0 - &id);
    let p_half = &l * (&id - &l) * 4.0;
    let p0 = (&id - &l) * (&id - &l * 2.0);
    let q = q_op_unchecked(v, c);
    let p1_plus = &p1 * (&id + &q) * 0.5;
    let p1_minus = &p1 * (&id - &q) * 0.5;
    Ok(PeirceData {
        tripotent: c.clone(),
        d0: proj_dim(&p0),
        d_half: proj_dim(&p_half),
        d1: proj_dim(&p1),
        d1_plus: proj_dim(&p1_plus),
        d1_minus: proj_dim(&p1_minus),
        p0,
        p_half,
        p1,
        p1_plus,
        p1_minus,
        cluster_deviation: dev,
    })
}

/// One block `V_ij` (`0 <= i <= j <= r`, indices 1-based, `i = 0` for the
/// part killed by every `L(c_k,c_k)` except `c_j`'s half).
#[derive(Clone, Debug)]
pub struct PeirceBlock {
    pub i: usize,
    pub j: usize,
    pub proj: LinOp,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct JointPeirce {
    pub frame: Vec<Element>,
    pub singles: Vec<PeirceData>,
    pub blocks: Vec<PeirceBlock>,
}

impl JointPeirce {
    pub fn block(&self, i: usize, j: usize) -> Option<&PeirceBlock> {
        self.blocks.iter().find(|b| b.i == i && b.j == j)
    }

    /// Projection onto `V_2 = V(c,1)` for `c` the sum of the frame.
    pub fn v2_projection(&self) -> LinOp {
        let n = self.frame[0].len();
        self.blocks.iter().filter(|b| b.i >= 1).fold(LinOp::zeros(n, n), |acc, b| acc + &b.proj)
    }

    /// Projection onto `V_1 = V(c,1/2)`.
    pub fn v1_projection(&self) -> LinOp {
        let n = self.frame[0].len();
        self.blocks.iter().filter(|b| b.i == 0).fold(LinOp::zeros(n, n), |acc, b| acc + &b.proj)
    }
}

/// Largest `|L(c_i,c_j)|` over distinct frame members.
pub fn frame_orthogonality(v: &TripleSystem, frame: &[Element]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, ci) in frame.iter().enumerate() {
        for (j, cj) in frame.iter().enumerate() {
            if i != j {
                worst = worst.max(l_op_unchecked(v, ci, cj).amax());
            }
        }
    }
    worst
}

pub fn joint_peirce(v: &TripleSystem, frame: &[Element]) -> Result<JointPeirce> {
    if frame.is_empty() {
        return Err(Error::Domain("empty frame".into()));
    }
    for c in frame {
        v.check_dim(c)?;
    }
    let orth = frame_orthogonality(v, frame);
    if orth > ORTHO_TOL {
        return Err(Error::Domain(format!("frame is not orthogonal: |L(c_i,c_j)| = {orth:e}")));
    }
    let singles = frame.iter().map(|c| peirce(v, c)).collect::<Result<Vec<_>>>()?;
    let r = frame.len();
    let mut blocks = Vec::new();
    for j in 0..r {
        blocks.push(PeirceBlock { i: j + 1, j: j + 1, dim: 0, proj: singles[j].p1.clone() });
        for i in 0..j {
            blocks.push(PeirceBlock { i: i + 1, j: j + 1, dim: 0, proj: &singles[i].p_half * &singles[j].p_half });
        }
        let mut p = singles[j].p_half.clone();
        for (k, s) in singles.iter().enumerate() {
            if k != j {
                p = p * &s.p0;
            }
        }
        blocks.push(PeirceBlock { i: 0, j: j + 1, dim: 0, proj: p });
    }
    for b in &mut blocks {
        b.dim = proj_dim(&b.proj);
    }
    let n = v.dim();
    let total = blocks.iter().fold(LinOp::zeros(n, n), |acc, b| acc + &b.proj);
    let defect = (total - LinOp::identity(n, n)).amax();
    if defect > 1e-8 {
        return Err(Error::Degenerate(format!("joint Peirce projections do not sum to Id ({defect:e})")));
    }
    blocks.sort_by_key(|b| (b.i, b.j));
    Ok(JointPeirce { frame: frame.to_vec(), singles, blocks })
}

/// Multiplicities read off the joint Peirce decomposition of the canonical
/// frame, checked against the stored table row.
pub fn characteristic_numbers(v: &TripleSystem) -> Result<CharacteristicData> {
    let jp = joint_peirce(v, v.frame())?;
    let r = jp.frame.len();
    let c = jp.block(1, 1).map(|b| b.dim).unwrap_or(0);
    let b = jp.block(0, 1).map(|b| b.dim).unwrap_or(0);
    let (a_plus, a_minus) = if r >= 2 {
        let blk = jp.block(1, 2).expect("r >= 2");
        let q = q_op_unchecked(v, &(&jp.frame[0] + &jp.frame[1]));
        let id = LinOp::identity(v.dim(), v.dim());
        let plus = &blk.proj * (&id + &q) * 0.5;
        let minus = &blk.proj * (&id - &q) * 0.5;
        (proj_dim(&plus), proj_dim(&minus))
    } else {
        (0, 0)
    };
    // every block of a simple system has the same size
    for blk in &jp.blocks {
        let expected = match (blk.i, blk.j) {
            (0, _) => b,
            (i, j) if i == j => c,
            _ => a_plus + a_minus,
        };
        if blk.dim != expected {
            return Err(Error::Consistency(format!(
                "{}: block V_{}{} has dimension {} (expected {expected})",
                v.name(),
                blk.i,
                blk.j,
                blk.dim
            )));
        }
    }
    let computed = CharacteristicData::new(r, a_plus, a_minus, b, c, v.complex_structure().is_some());
    if &computed != v.table() {
        return Err(Error::Consistency(format!(
            "{}: computed {computed:?} disagrees with table {:?}",
            v.name(),
            v.table()
        )));
    }
    Ok(computed)
}

/// Coefficients `t_j` of `x = sum t_j c_j` in the canonical flat.
pub fn flat_coefficients(v: &TripleSystem, x: &Element) -> Result<Vec<f64>> {
    v.check_dim(x)?;
    let t: Vec<f64> = v.frame().iter().map(|c| x.dot(c) / c.dot(c)).collect();
    let back = v.flat_point(&t)?;
    let scale = x.amax().max(1.0);
    if (&back - x).amax() > 1e-12 * scale {
        return Err(Error::Domain("element is not in the canonical flat".into()));
    }
    Ok(t)
}

/// `g = exp(-sum log|t_j| L(c_j,c_j))` over the nonzero `t_j`, together with
/// the tripotent `g x = sum sign(t_j) c_j`.
pub fn conjugate_to_tripotent(v: &TripleSystem, x: &Element) -> Result<(LinOp, Element)> {
    let t = flat_coefficients(v, x)?;
    let n = v.dim();
    let mut g = LinOp::identity(n, n);
    let mut trip = v.zero();
    for (c, &tj) in v.frame().iter().zip(&t) {
        if tj == 0.0 {
            continue;
        }
        let a = -tj.abs().ln();
        let pd = peirce(v, c)?;
        let step = &pd.p0 + &pd.p_half * (a / 2.0).exp() + &pd.p1 * a.exp();
        g = step * g;
        trip += c * tj.signum();
    }
    Ok((g, trip))
}

/// Largest component of `{V_i, V_j, V_k}` outside `V_{i-j+k}` for the Peirce
/// spaces of `c`, sampled on projected basis vectors.
pub fn peirce_calculus_residual(v: &TripleSystem, c: &Element) -> Result<f64> {
    let pd = peirce(v, c)?;
    let n = v.dim();
    let projs: [(f64, &LinOp); 3] = [(0.0, &pd.p0), (0.5, &pd.p_half), (1.0, &pd.p1)];
    let id = LinOp::identity(n, n);
    let mut worst: f64 = 0.0;
    for &(li, pi) in &projs {
        for &(lj, pj) in &projs {
            for &(lk, pk) in &projs {
                let target = li - lj + lk;
                let allowed = projs.iter().find(|(l, _)| (*l - target).abs() < 1e-12).map(|(_, p)| (*p).clone());
                let outside = match allowed {
                    Some(p) => &id - p,
                    None => id.clone(),
                };
                for a in 0..n {
                    let x: Element = pi.column(a).into_owned();
                    if x.amax() < 1e-12 {
                        continue;
                    }
                    for b in 0..n {
                        let y: Element = pj.column(b).into_owned();
                        if y.amax() < 1e-12 {
                            continue;
                        }
                        let lxy = l_op_unchecked(v, &x, &y) * pk;
                        worst = worst.max((&outside * lxy).amax());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// `|[L(c,c), L(d,d)]|` for a pair of tripotents.
pub fn commutator_norm(v: &TripleSystem, c: &Element, d: &Element) -> Result<f64> {
    let lc = l_op(v, c, c)?;
    let ld = l_op(v, d, d)?;
    Ok((&lc * &ld - &ld * &lc).amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, hermitify, zoo, ModelSpec};

    #[test]
    fn tripotent_examples() {
        let v = build_model(ModelSpec::Sphere(3)).unwrap();
        let c = v.basis(0);
        assert!(is_tripotent(&v, &c, 1e-12));
        assert!(!is_tripotent(&v, &(&c * 2.0), 1e-12));
        let d = (v.basis(0) + v.basis(1)) * std::f64::consts::FRAC_1_SQRT_2;
        assert!(is_tripotent(&v, &d, 1e-12));
    }

    #[test]
    fn sphere_peirce() {
        for n in 3..=5 {
            let v = build_model(ModelSpec::Sphere(n)).unwrap();
            let pd = peirce(&v, &v.basis(0)).unwrap();
            assert_eq!((pd.d1, pd.d_half, pd.d0), (n, 0, 0));
            assert_eq!((pd.d1_plus, pd.d1_minus), (1, n - 1));
        }
    }

    #[test]
    fn non_tripotent_rejected() {
        let v = build_model(ModelSpec::Sym(2)).unwrap();
        assert!(matches!(peirce(&v, &(v.basis(0) * 2.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn frame_elements_are_primitive() {
        for spec in zoo() {
            let v = build_model(spec).unwrap();
            for c in v.frame() {
                assert_eq!(peirce(&v, c).unwrap().d1_plus, 1, "{spec}");
            }
            let pd = peirce(&v, &v.frame_sum()).unwrap();
            assert_eq!(pd.d0, 0, "{spec}: frame sum must be maximal");
        }
    }

    #[test]
    fn table_rows_reproduced() {
        for spec in zoo() {
            let v = build_model(spec).unwrap();
            let cd = characteristic_numbers(&v).unwrap();
            assert_eq!(cd.implied_dim(), v.dim(), "{spec}");
        }
        let cd = characteristic_numbers(&build_model(ModelSpec::Spin(2, 3)).unwrap()).unwrap();
        assert_eq!((cd.r, cd.a_plus, cd.a_minus, cd.b, cd.c, cd.p), (2, 2, 1, 0, 1, 5));
        let cd = characteristic_numbers(&build_model(ModelSpec::Sphere(4)).unwrap()).unwrap();
        assert_eq!((cd.r, cd.a, cd.b, cd.c, cd.p), (1, 0, 0, 4, 8));
        let cd = characteristic_numbers(&build_model(ModelSpec::Cmat(1, 3)).unwrap()).unwrap();
        assert_eq!((cd.b, cd.c), (4, 2));
    }

    #[test]
    fn hermitified_table_rows() {
        for spec in [ModelSpec::Sym(2), ModelSpec::Sphere(3), ModelSpec::Spin(1, 2), ModelSpec::Rect(1, 2)] {
            let h = hermitify(&build_model(spec).unwrap()).unwrap();
            let cd = characteristic_numbers(&h).unwrap();
            assert_eq!(cd.case, Case::ComplexStructure);
            assert_eq!(cd.implied_dim(), h.dim());
        }
    }

    #[test]
    fn non_orthogonal_frame_rejected() {
        let v = build_model(ModelSpec::Sym(2)).unwrap();
        let c = v.basis(0);
        assert!(matches!(joint_peirce(&v, &[c.clone(), c]), Err(Error::Domain(_))));
    }

    #[test]
    fn sym2_off_diagonal_block() {
        let v = build_model(ModelSpec::Sym(2)).unwrap();
        let jp = joint_peirce(&v, v.frame()).unwrap();
        assert_eq!(jp.block(1, 2).unwrap().dim, 1);
        assert_eq!(jp.block(1, 1).unwrap().dim, 1);
    }

    #[test]
    fn conjugation_examples() {
        let v = build_model(ModelSpec::Sym(2)).unwrap();
        let (c1, c2) = (v.frame()[0].clone(), v.frame()[1].clone());
        let (g, t) = conjugate_to_tripotent(&v, &(&c1 * 3.0)).unwrap();
        assert!((&g * (&c1 * 3.0) - &c1).amax() < 1e-14);
        assert_eq!(t, c1);
        let (g, _) = conjugate_to_tripotent(&v, &(&c1 + &c2)).unwrap();
        assert!((g - LinOp::identity(3, 3)).amax() < 1e-15);
        let x = &c1 * 2.0 + &c2 * 0.5;
        let (g, t) = conjugate_to_tripotent(&v, &x).unwrap();
        let gx = &g * &x;
        assert!((&gx - &t).amax() < 1e-14);
        assert!(is_tripotent(&v, &gx, 1e-12));
        assert!(conjugate_to_tripotent(&v, &v.basis(2)).is_err());
    }

    #[test]
    fn peirce_calculus_holds() {
        for spec in [ModelSpec::Rect(2, 3), ModelSpec::Spin(2, 3), ModelSpec::Sphere(3)] {
            let v = build_model(spec).unwrap();
            assert!(peirce_calculus_residual(&v, &v.frame()[0]).unwrap() < 1e-12, "{spec}");
        }
    }
}
