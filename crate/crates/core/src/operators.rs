//! `L(x,y)`, `Q(x)`, the Bergman operators and the trace form.

use crate::error::Result;
use crate::models::{Element, LinOp, TripleSystem};

/// Matrix of `z -> {x,y,z}`.
pub fn l_op(v: &TripleSystem, x: &Element, y: &Element) -> Result<LinOp> {
    v.check_dim(x)?;
    v.check_dim(y)?;
    Ok(l_op_unchecked(v, x, y))
}

pub(crate) fn l_op_unchecked(v: &TripleSystem, x: &Element, y: &Element) -> LinOp {
    let mut m = LinOp::zeros(v.dim(), v.dim());
    for e in v.entries() {
        let (i, j, k, l) = (e.i as usize, e.j as usize, e.k as usize, e.l as usize);
        let w = e.v * y[j];
        if w == 0.0 {
            continue;
        }
        m[(l, k)] += w * x[i];
        if i != k {
            m[(l, i)] += w * x[k];
        }
    }
    m
}

/// Matrix of `y -> {x,y,x}`.
pub fn q_op(v: &TripleSystem, x: &Element) -> Result<LinOp> {
    v.check_dim(x)?;
    Ok(q_op_unchecked(v, x))
}

pub(crate) fn q_op_unchecked(v: &TripleSystem, x: &Element) -> LinOp {
    let mut m = LinOp::zeros(v.dim(), v.dim());
    for e in v.entries() {
        let (i, j, k, l) = (e.i as usize, e.j as usize, e.k as usize, e.l as usize);
        let xx = if i == k { x[i] * x[i] } else { 2.0 * x[i] * x[k] };
        m[(l, j)] += e.v * xx;
    }
    m
}

/// `B(x,y) = Id - 2L(x,y) + Q(x)Q(y)`.
pub fn bergman(v: &TripleSystem, x: &Element, y: &Element) -> Result<LinOp> {
    let l = l_op(v, x, y)?;
    let qq = q_op_unchecked(v, x) * q_op_unchecked(v, y);
    Ok(LinOp::identity(v.dim(), v.dim()) - l * 2.0 + qq)
}

/// `C(x,y) = B(x,-y) = Id + 2L(x,y) + Q(x)Q(y)`.
pub fn dual_bergman(v: &TripleSystem, x: &Element, y: &Element) -> Result<LinOp> {
    let l = l_op(v, x, y)?;
    let qq = q_op_unchecked(v, x) * q_op_unchecked(v, y);
    Ok(LinOp::identity(v.dim(), v.dim()) + l * 2.0 + qq)
}

/// `(x,y) = tr L(x,y)`, contracted directly from the structure constants.
pub fn trace_form(v: &TripleSystem, x: &Element, y: &Element) -> Result<f64> {
    v.check_dim(x)?;
    v.check_dim(y)?;
    let mut t = 0.0;
    for e in v.entries() {
        let (i, j, k, l) = (e.i as usize, e.j as usize, e.k as usize, e.l as usize);
        if l == k {
            t += e.v * y[j] * x[i];
        }
        if i != k && l == i {
            t += e.v * y[j] * x[k];
        }
    }
    Ok(t)
}

/// Trace-form Gram matrix of the coordinate basis.
pub fn trace_gram(v: &TripleSystem) -> LinOp {
    crate::models::trace_gram(v.dim(), v.entries())
}

/// `exp(L(u,v))`, an element of the identity component of the structure group.
pub fn structure_element(v: &TripleSystem, a: &Element, b: &Element) -> Result<LinOp> {
    Ok(l_op(v, a, b)?.exp())
}

/// `sigma(g) = (g^t)^{-1}`.
pub fn sigma(g: &LinOp) -> Option<LinOp> {
    g.transpose().try_inverse()
}
