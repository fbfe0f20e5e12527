//! Verification suites run by `pjts verify`.

use crate::report::Record;
use pjts::analysis::{
    c_lambda_gamma_ratio, c_lambda_numeric, descent_shift, divergence_probe, lambda_to_s, ln_c_lambda_closed,
    pole_ledger, threshold, verify_descent, Bump, QuadratureRule, QuadratureSpec,
};
use pjts::bernstein::{
    bs_verify, cone_point, delta_polynomial, delta_power_residual, h_jet, shifted_bs_residual, tube_reduction,
};
use pjts::kernels::{canonical_kernel, covariance_check, verify_power_identity};
use pjts::minpoly::{flat_minpoly_oracle, fundamental_kernel, minpoly_any, minpoly_coeffs};
use pjts::models::validate_axioms;
use pjts::operators::{sigma, structure_element};
use pjts::rng;
use pjts::spectral::{characteristic_numbers, peirce, peirce_calculus_residual};
use pjts::{Case, Element, Error, Rational64, Result, TripleSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Axioms,
    Peirce,
    Kernels,
    Minpoly,
    Bernstein,
    Analysis,
    All,
}

impl Suite {
    pub fn expand(self) -> Vec<Suite> {
        use Suite::*;
        match self {
            All => vec![Axioms, Peirce, Kernels, Minpoly, Bernstein, Analysis],
            s => vec![s],
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    /// overrides every numeric tolerance; exact checks keep tolerance 0
    pub tol: Option<f64>,
    pub samples: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 42, tol: None, samples: 50 }
    }
}

struct Sink<'a> {
    opts: &'a SuiteOptions,
    out: Vec<Record>,
}

impl Sink<'_> {
    fn check(&mut self, name: &str, tag: &str, residual: f64, default_tol: f64) {
        let tol = self.opts.tol.unwrap_or(default_tol);
        self.out.push(Record::new(name, tag, residual, tol));
    }

    fn exact(&mut self, name: &str, tag: &str, ok: bool) {
        self.out.push(Record::exact(name, tag, ok));
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

pub fn run_suite(v: &TripleSystem, suite: Suite, opts: &SuiteOptions) -> Result<Vec<Record>> {
    let mut sink = Sink { opts, out: Vec::new() };
    for s in suite.expand() {
        match s {
            Suite::Axioms => axioms(v, &mut sink),
            Suite::Peirce => peirce_suite(v, &mut sink)?,
            Suite::Kernels => kernels(v, &mut sink)?,
            Suite::Minpoly => minpoly(v, &mut sink)?,
            Suite::Bernstein => bernstein(v, &mut sink)?,
            Suite::Analysis => analysis(v, &mut sink)?,
            Suite::All => unreachable!("expanded above"),
        }
    }
    let mut out = sink.out;
    out.sort_by(|a, b| a.check.cmp(&b.check));
    Ok(out)
}

fn axioms(v: &TripleSystem, sink: &mut Sink) {
    let rep = validate_axioms(v);
    sink.check("axioms.outer_symmetry", "outer-symmetry", rep.symmetry_residual, 1e-12);
    sink.check("axioms.jordan_identity", "jordan-identity", rep.jordan_residual, 1e-12);
    sink.exact("axioms.trace_form_positive", "trace-form-positivity", rep.gram_min_eig > 0.0);
    if let Some(cs) = rep.complex_structure_residual {
        sink.check("axioms.complex_structure", "complex-structure", cs, 1e-12);
    }
}

fn peirce_suite(v: &TripleSystem, sink: &mut Sink) -> Result<()> {
    let mut spectrum: f64 = 0.0;
    let mut calculus: f64 = 0.0;
    let mut partial = v.zero();
    for c in v.frame() {
        partial += c;
        for t in [c, &partial] {
            spectrum = nan_max(spectrum, peirce(v, t)?.cluster_deviation);
            calculus = nan_max(calculus, peirce_calculus_residual(v, t)?);
        }
    }
    sink.check("peirce.spectrum", "peirce-spectrum", spectrum, 1e-10);
    sink.check("peirce.calculus", "peirce-calculus", calculus, 1e-10);
    match characteristic_numbers(v) {
        Ok(cd) => {
            sink.exact("peirce.characteristic_numbers", "characteristic-numbers", true);
            sink.exact("peirce.genus", "genus-formula", cd.p == (cd.r - 1) * cd.a + cd.b + 2 * cd.c);
        }
        Err(Error::Consistency(_)) => sink.exact("peirce.characteristic_numbers", "characteristic-numbers", false),
        Err(e) => return Err(e),
    }
    Ok(())
}

fn kernels(v: &TripleSystem, sink: &mut Sink) -> Result<()> {
    let opts = sink.opts;
    let power = verify_power_identity(v, opts.samples, opts.seed)?;
    sink.check("kernels.power_identity", "kernel-power-identity", power, 1e-8);
    let mut g = rng::seeded(opts.seed ^ 0x11);
    let p = v.table().p as i32;
    let mut flats: f64 = 0.0;
    for _ in 0..opts.samples {
        let t: Vec<f64> = (0..v.rank()).map(|_| rng::normal(&mut g)).collect();
        let x = v.flat_point(&t)?;
        let c = canonical_kernel(v, &x, &x)?;
        let want = t.iter().map(|a| 1.0 + a * a).product::<f64>().powi(p);
        flats = nan_max(flats, (c - want).abs() / c);
    }
    sink.check("kernels.flats", "kernel-on-flats", flats, 1e-9);
    let mut cov: f64 = 0.0;
    for _ in 0..opts.samples.min(20) {
        let mut r = |s: f64| rng::gaussian(&mut g, v.dim(), s);
        let (u, w, x, y) = (r(0.3), r(0.3), r(0.5), r(0.5));
        cov = nan_max(cov, covariance_check(v, &u, &w, &x, &y)?);
    }
    sink.check("kernels.covariance", "kernel-covariance", cov, 1e-8);
    Ok(())
}

fn minpoly(v: &TripleSystem, sink: &mut Sink) -> Result<()> {
    let opts = sink.opts;
    let mut g = rng::seeded(opts.seed ^ 0x22);
    let (mut flats, mut resub, mut str_inv) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..opts.samples.min(50) {
        let t: Vec<f64> = (0..v.rank()).map(|_| rng::normal(&mut g)).collect();
        let x = v.flat_point(&t)?;
        let p = minpoly_any(v, &x, &x)?;
        for (a, b) in p.m.iter().zip(flat_minpoly_oracle(&t, p.rho)) {
            flats = nan_max(flats, (a - b).norm() / b.abs().max(1.0));
        }
        let x = rng::gaussian(&mut g, v.dim(), 1.0);
        let y = rng::gaussian(&mut g, v.dim(), 1.0);
        let a = minpoly_coeffs(v, &x, &y)?;
        resub = nan_max(resub, a.residual);
        let u = rng::gaussian(&mut g, v.dim(), 0.2);
        let w = rng::gaussian(&mut g, v.dim(), 0.2);
        let gop = structure_element(v, &u, &w)?;
        let sg = sigma(&gop).ok_or_else(|| Error::Degenerate("structure element not invertible".into()))?;
        let b = minpoly_coeffs(v, &(&gop * &x), &(&sg * &y))?;
        for (ma, mb) in a.m.iter().zip(&b.m) {
            str_inv = nan_max(str_inv, (ma - mb).abs() / ma.abs().max(1.0));
        }
    }
    sink.check("minpoly.flats", "minpoly-on-flats", flats, 1e-9);
    sink.check("minpoly.resubstitution", "minpoly-resubstitution", resub, 1e-9);
    sink.check("minpoly.structure_group", "minpoly-structure-group", str_inv, 1e-8);
    Ok(())
}

fn bernstein(v: &TripleSystem, sink: &mut Sink) -> Result<()> {
    let opts = sink.opts;
    let mut g = rng::seeded(opts.seed ^ 0x33);
    let euclidean = v.case() == Case::ReducedEuclidean;
    if euclidean {
        let e = delta_polynomial(v)?;
        let (mut direct, mut shifted) = (0.0f64, 0.0f64);
        for _ in 0..opts.samples.min(50) {
            let x = cone_point(v, &rng::gaussian(&mut g, v.dim(), 1.0), 0.2);
            let h = rng::gaussian(&mut g, v.dim(), 0.15);
            for s in [0.5, 1.7, 3.0, -0.3] {
                direct = nan_max(direct, delta_power_residual(&e, s, x.as_slice())?);
                shifted = nan_max(shifted, shifted_bs_residual(&e, s, h.as_slice())?);
            }
        }
        sink.check("bernstein.determinant", "determinant-bernstein-sato", direct, 1e-9);
        sink.check("bernstein.shifted", "shifted-bernstein-sato", shifted, 1e-8);
        if e.rank <= 3 {
            let (mut symbol, mut reassembly) = (0.0f64, 0.0f64);
            for _ in 0..10 {
                let xi = e.algebra_coords(rng::gaussian(&mut g, v.dim(), 0.5).as_slice());
                symbol = nan_max(symbol, e.symbol_residual(&xi)?);
                let x: Element = v.frame_sum() + rng::gaussian(&mut g, v.dim(), 0.2);
                let y = rng::gaussian(&mut g, v.dim(), 0.3);
                let f = h_jet(v, &x, &y, e.rank)?.real_power(1.4)?;
                let m = e.extract_m_k(&f, x.as_slice())?;
                for s in [0.3, 1.0, 2.2] {
                    let d = e.apply_e_s(s, &f, x.as_slice())?;
                    reassembly = nan_max(reassembly, (d - e.e_s_from_m(s, &m)).norm() / d.norm().max(1.0));
                }
            }
            sink.check("bernstein.m_k_symbol", "m_k-symbol", symbol, 1e-9);
            sink.check("bernstein.m_k_reassembly", "m_k-reassembly", reassembly, 1e-9);
        }
    }
    let reduced = tube_reduction(v)?.is_some();
    let (mut res, mut restriction) = (0.0f64, 0.0f64);
    for s in [1.0, 1.7, 2.5] {
        for _ in 0..3 {
            let (x, y) = sample_pair(v, &mut g)?;
            let c = bs_verify(v, s, &x, &y)?;
            res = nan_max(res, c.residual);
            restriction = nan_max(restriction, c.restriction);
        }
    }
    sink.check("bernstein.case_identity", "case-bernstein-sato", res, 1e-8);
    if reduced {
        sink.check("bernstein.tube_restriction", "tube-restriction", restriction, 1e-9);
    }
    Ok(())
}

fn sample_pair(v: &TripleSystem, g: &mut rng::Rng) -> Result<(Element, Element)> {
    for _ in 0..100 {
        let x: Element = v.frame_sum() + rng::gaussian(g, v.dim(), 0.3);
        let y = rng::gaussian(g, v.dim(), 0.4);
        if fundamental_kernel(v, &x, &y)? > 1e-3 {
            return Ok((x, y));
        }
    }
    Err(Error::Degenerate("no sample pair with k(x,y) > 0".into()))
}

fn analysis(v: &TripleSystem, sink: &mut Sink) -> Result<()> {
    let cd = v.table();
    let th = threshold(v);
    let p = Rational64::from(cd.p as i64);
    sink.exact(
        "analysis.threshold",
        "convergence-threshold",
        th.lambda_min == Rational64::new(1, 2) - Rational64::new(cd.c as i64, cd.p as i64)
            && lambda_to_s(p, th.lambda_min) == th.s_min,
    );
    if v.rank() <= 2 {
        let probe = divergence_probe(v, 7, 0.5, &QuadratureSpec::default())?;
        let monotone = probe.windows(2).all(|w| w[1].1 > w[0].1);
        sink.exact("analysis.divergence_monotone", "divergence-at-threshold", monotone);
        let growth = probe.last().map_or(0.0, |l| l.1) / probe[0].1;
        sink.check("analysis.divergence_growth", "divergence-at-threshold", 1.0 / growth, 0.1);
        if ln_c_lambda_closed(v, 1.0).is_ok() {
            let spec = QuadratureSpec { rule: QuadratureRule::TensorGaussJacobi { nodes: 96 } };
            let lm = th.lambda_f64();
            let (l1, l2) = (lm + 0.6, lm + 1.3);
            let n1 = c_lambda_numeric(v, l1, &spec)?.value;
            let n2 = c_lambda_numeric(v, l2, &spec)?.value;
            let closed = ln_c_lambda_closed(v, l1)?.exp();
            sink.check("analysis.c_lambda_closed_form", "c-lambda-closed-form", (n1 - closed).abs() / closed, 1e-6);
            let ratio = c_lambda_gamma_ratio(v, l1, l2)?;
            sink.check("analysis.c_lambda_ratio", "c-lambda-gamma-ratio", (n1 / n2 - ratio).abs() / ratio, 1e-4);
        }
    }
    let ledger = pole_ledger(v, 10);
    sink.exact("analysis.first_pole", "pole-ledger", ledger.first_pole() == th.s_min);
    let shifted = ledger.s_poles().into_iter().all(|s| descent_shift(v, s, 40).is_some());
    sink.exact("analysis.poles_are_shifted_roots", "pole-ledger", shifted);
    let images = ledger.s_poles().into_iter().zip(ledger.lambda_poles()).all(|(s, l)| lambda_to_s(p, l) == s);
    sink.exact("analysis.lambda_images", "pole-ledger", images);
    if v.dim() == 1 && matches!(v.case(), Case::Reduced | Case::ReducedEuclidean) {
        let f = Bump { lo: 0.5, hi: 2.0, scale: 1.0 };
        let mut worst: f64 = 0.0;
        for s in [1.5, 2.0, 3.0] {
            worst = nan_max(worst, verify_descent(v, s, &f, 0.7, 200)?.relative_error);
        }
        sink.check("analysis.descent", "descent-identity", worst, 1e-5);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pjts::models::build_model;
    use pjts::ModelSpec;

    #[test]
    fn every_suite_passes_on_small_models() {
        let opts = SuiteOptions { samples: 10, ..Default::default() };
        for spec in [ModelSpec::Sym(1), ModelSpec::Sphere(3), ModelSpec::Rect(2, 3)] {
            let v = build_model(spec).unwrap();
            let recs = run_suite(&v, Suite::All, &opts).unwrap();
            for r in &recs {
                assert!(r.pass, "{spec}: {r:?}");
            }
            let mut names: Vec<&str> = recs.iter().map(|r| r.check.as_str()).collect();
            let sorted = names.clone();
            names.sort();
            assert_eq!(names, sorted);
        }
    }

    #[test]
    fn tolerance_override() {
        let v = build_model(ModelSpec::Sym(2)).unwrap();
        let opts = SuiteOptions { tol: Some(-1.0), ..Default::default() };
        let recs = run_suite(&v, Suite::Axioms, &opts).unwrap();
        let exact = recs.iter().find(|r| r.check == "axioms.trace_form_positive").unwrap();
        assert!(exact.pass && exact.tolerance == 0.0);
        assert!(recs.iter().filter(|r| r.check != exact.check).all(|r| !r.pass));
    }
}
