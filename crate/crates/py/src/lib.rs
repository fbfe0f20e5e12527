//! Python bindings. Built as the extension module `pjts` with the
//! `extension-module` feature.

use pjts::analysis::{c_lambda_numeric, ln_c_lambda_closed, pole_ledger, threshold, QuadratureRule, QuadratureSpec};
use pjts::bernstein::{bs_verify, case_b};
use pjts::kernels::{canonical_kernel, compact_kernel_pair, verify_power_identity};
use pjts::minpoly::{fundamental_kernel, h_kernel, minpoly_any};
use pjts::models::{build_model, validate_axioms, zoo as model_zoo};
use pjts::spectral::characteristic_numbers;
use pjts::{Complex64, Element, ModelSpec, Rational64, TripleSystem};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::collections::BTreeMap;

fn err(e: pjts::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ratio(q: Rational64) -> (i64, i64) {
    (*q.numer(), *q.denom())
}

/// A simple positive Jordan triple system built from a model string such
/// as `sym:2`, `cmat:1x2` or `sphere:4`.
#[pyclass(name = "Model", module = "pjts", frozen)]
pub struct PyModel {
    inner: TripleSystem,
}

impl PyModel {
    fn element(&self, x: Vec<f64>) -> PyResult<Element> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!(
                "{} expects vectors of length {}, got {}",
                self.inner.name(),
                self.inner.dim(),
                x.len()
            )));
        }
        Ok(Element::from_vec(x))
    }

    pub fn system(&self) -> &TripleSystem {
        &self.inner
    }
}

#[pymethods]
impl PyModel {
    #[new]
    pub fn new(spec: &str) -> PyResult<Self> {
        let spec: ModelSpec = spec.parse().map_err(err)?;
        Ok(PyModel { inner: build_model(spec).map_err(err)? })
    }

    #[getter]
    pub fn name(&self) -> String {
        self.inner.name()
    }

    #[getter]
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    pub fn rank(&self) -> usize {
        self.inner.rank()
    }

    #[getter]
    pub fn case(&self) -> String {
        self.inner.case().to_string()
    }

    fn __repr__(&self) -> String {
        format!("Model('{}')", self.inner.name())
    }

    /// `r, a, a_plus, a_minus, b, c, p` from the stored table row.
    pub fn characteristic_numbers(&self) -> BTreeMap<String, usize> {
        let cd = self.inner.table();
        [
            ("r", cd.r),
            ("a", cd.a),
            ("a_plus", cd.a_plus),
            ("a_minus", cd.a_minus),
            ("b", cd.b),
            ("c", cd.c),
            ("p", cd.p),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Recomputes the numbers from the joint Peirce decomposition; raises if
    /// they disagree with the table.
    pub fn peirce_numbers(&self) -> PyResult<BTreeMap<String, usize>> {
        characteristic_numbers(&self.inner).map_err(err)?;
        Ok(self.characteristic_numbers())
    }

    pub fn validate_axioms(&self) -> BTreeMap<String, f64> {
        let rep = validate_axioms(&self.inner);
        let mut out = BTreeMap::new();
        out.insert("symmetry_residual".to_string(), rep.symmetry_residual);
        out.insert("jordan_residual".to_string(), rep.jordan_residual);
        out.insert("gram_min_eig".to_string(), rep.gram_min_eig);
        if let Some(cs) = rep.complex_structure_residual {
            out.insert("complex_structure_residual".to_string(), cs);
        }
        out
    }

    pub fn frame(&self) -> Vec<Vec<f64>> {
        self.inner.frame().iter().map(|c| c.as_slice().to_vec()).collect()
    }

    pub fn frame_sum(&self) -> Vec<f64> {
        self.inner.frame_sum().as_slice().to_vec()
    }

    /// The triple product `{x, y, z}`.
    pub fn product(&self, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> PyResult<Vec<f64>> {
        let (x, y, z) = (self.element(x)?, self.element(y)?, self.element(z)?);
        Ok(self.inner.product(x.as_slice(), y.as_slice(), z.as_slice()).as_slice().to_vec())
    }

    pub fn canonical_kernel(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        canonical_kernel(&self.inner, &self.element(x)?, &self.element(y)?).map_err(err)
    }

    pub fn fundamental_kernel(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        fundamental_kernel(&self.inner, &self.element(x)?, &self.element(y)?).map_err(err)
    }

    pub fn h(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Complex64> {
        h_kernel(&self.inner, &self.element(x)?, &self.element(y)?).map_err(err)
    }

    pub fn compact_kernel(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        compact_kernel_pair(&self.inner, &self.element(x)?, &self.element(y)?).map_err(err)
    }

    /// Coefficients `m_1 .. m_rho` of the generic minimal polynomial.
    pub fn minpoly(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<Complex64>> {
        Ok(minpoly_any(&self.inner, &self.element(x)?, &self.element(y)?).map_err(err)?.m)
    }

    /// Largest relative defect of `c = k^(p/2)` over seeded samples.
    #[pyo3(signature = (samples = 200, seed = 42))]
    pub fn power_identity(&self, samples: usize, seed: u64) -> PyResult<f64> {
        verify_power_identity(&self.inner, samples, seed).map_err(err)
    }

    /// Residual of the Bernstein-Sato identity of `k^s` at `(x, y)`.
    pub fn bernstein_sato(&self, s: f64, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        Ok(bs_verify(&self.inner, s, &self.element(x)?, &self.element(y)?).map_err(err)?.residual)
    }

    /// Roots of the case b-polynomial as `(numerator, denominator)`.
    pub fn b_roots(&self) -> Vec<(i64, i64)> {
        case_b(&self.inner).roots().into_iter().map(ratio).collect()
    }

    /// `(lambda_min, s_min)` as fractions.
    pub fn threshold(&self) -> ((i64, i64), (i64, i64)) {
        let t = threshold(&self.inner);
        (ratio(t.lambda_min), ratio(t.s_min))
    }

    /// The first `count` poles in the s-plane, decreasing, as fractions.
    #[pyo3(signature = (count = 10))]
    pub fn s_poles(&self, count: usize) -> Vec<(i64, i64)> {
        pole_ledger(&self.inner, count).s_poles().into_iter().take(count).map(ratio).collect()
    }

    /// `s = -p/4 + p lambda / 2`.
    pub fn lambda_to_s(&self, lambda: f64) -> f64 {
        let p = self.inner.table().p as f64;
        -p / 4.0 + p * lambda / 2.0
    }

    /// `(value, error_estimate)` of `c(lambda)` by tensor Gauss-Jacobi.
    #[pyo3(signature = (lam, nodes = 64))]
    pub fn c_lambda(&self, lam: f64, nodes: usize) -> PyResult<(f64, f64)> {
        let spec = QuadratureSpec { rule: QuadratureRule::TensorGaussJacobi { nodes } };
        let q = c_lambda_numeric(&self.inner, lam, &spec).map_err(err)?;
        Ok((q.value, q.error))
    }

    /// Closed form of `c(lambda)` where one is implemented.
    pub fn c_lambda_closed(&self, lam: f64) -> PyResult<f64> {
        Ok(ln_c_lambda_closed(&self.inner, lam).map_err(err)?.exp())
    }
}

/// Model strings of the reference zoo.
#[pyfunction]
pub fn zoo() -> Vec<String> {
    model_zoo().into_iter().map(|s| s.to_string()).collect()
}

#[pymodule]
#[pyo3(name = "pjts")]
pub fn pjts_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(zoo, m)?)?;
    m.add("GRAMMAR", pjts::models::GRAMMAR)?;
    Ok(())
}
