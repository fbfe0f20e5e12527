//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails.

use num_complex::Complex64;
use num_rational::Rational64;
use pjts::analysis::{
    c_lambda_gamma_ratio, c_lambda_numeric, descent_model, descent_shift, divergence_probe, lambda_to_s, pole_ledger,
    threshold, verify_descent, Bump, QuadratureRule, QuadratureSpec,
};
use pjts::bernstein::{bs_verify, cone_point, delta_polynomial, delta_power_residual, h_jet, shifted_bs_residual};
use pjts::kernels::{canonical_kernel, complex_canonical_kernel, verify_power_identity};
use pjts::minpoly::{flat_minpoly_oracle, fundamental_kernel, minpoly_any, minpoly_coeffs};
use pjts::models::{build_model, validate_axioms, zoo};
use pjts::operators::{sigma, structure_element};
use pjts::rng;
use pjts::spectral::{characteristic_numbers, peirce};
use pjts::{Case, Element, ModelSpec, TripleSystem};
use std::process::ExitCode;
use std::time::Instant;

struct Outcome {
    worst: f64,
    tol: f64,
    /// sub-checks with their own bound
    extra: Vec<(&'static str, f64, f64)>,
    /// exact checks that failed
    mismatches: Vec<String>,
}

impl Outcome {
    fn new(tol: f64) -> Self {
        Outcome { worst: 0.0, tol, extra: Vec::new(), mismatches: Vec::new() }
    }

    fn residual(&mut self, r: f64) {
        // NaN must fail
        if !(r <= self.worst) {
            self.worst = r;
        }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.mismatches.push(what.into());
        }
    }

    fn bounded(&mut self, name: &'static str, r: f64, tol: f64) {
        self.extra.push((name, r, tol));
    }

    fn passed(&self) -> bool {
        self.worst <= self.tol && self.extra.iter().all(|&(_, r, t)| r <= t) && self.mismatches.is_empty()
    }
}

fn model(spec: ModelSpec) -> TripleSystem {
    build_model(spec).expect("zoo model builds")
}

/// Independent rows `(r, a+, a-, b, c, p)` for the zoo.
fn expected_row(spec: ModelSpec) -> (usize, usize, usize, usize, usize, usize) {
    match spec {
        ModelSpec::Sym(1) => (1, 0, 0, 0, 1, 2),
        ModelSpec::Sym(2) => (2, 1, 0, 0, 1, 3),
        ModelSpec::Sym(3) => (3, 1, 0, 0, 1, 4),
        ModelSpec::Herm(2) => (2, 2, 0, 0, 1, 4),
        ModelSpec::Cmat(1, 1) => (1, 0, 0, 0, 2, 4),
        ModelSpec::Cmat(1, 2) => (1, 0, 0, 2, 2, 6),
        ModelSpec::Cmat(2, 2) => (2, 2, 2, 0, 2, 8),
        ModelSpec::Rect(2, 3) => (2, 1, 1, 1, 1, 5),
        ModelSpec::Spin(2, 3) => (2, 2, 1, 0, 1, 5),
        ModelSpec::Sphere(n) => (1, 0, 0, 0, n, 2 * n),
        other => panic!("no reference row for {other}"),
    }
}

fn axioms() -> Outcome {
    let mut o = Outcome::new(1e-12);
    for spec in zoo() {
        let rep = validate_axioms(&model(spec));
        o.residual(rep.symmetry_residual);
        o.residual(rep.jordan_residual);
        if let Some(cs) = rep.complex_structure_residual {
            o.residual(cs);
        }
        o.require(rep.gram_min_eig > 0.0, format!("{spec}: Gram not positive definite"));
    }
    o
}

fn peirce_and_table() -> Outcome {
    let mut o = Outcome::new(1e-10);
    for spec in zoo() {
        let v = model(spec);
        let mut partial = v.zero();
        for c in v.frame() {
            partial += c;
            for t in [c, &partial] {
                match peirce(&v, t) {
                    Ok(pd) => o.residual(pd.cluster_deviation),
                    Err(e) => o.require(false, format!("{spec}: {e}")),
                }
            }
        }
        let (r, ap, am, b, c, p) = expected_row(spec);
        match characteristic_numbers(&v) {
            Ok(cd) => {
                o.require((cd.r, cd.a_plus, cd.a_minus, cd.b, cd.c) == (r, ap, am, b, c), format!("{spec}: {cd:?}"));
                o.require(cd.p == p && cd.p == (cd.r - 1) * cd.a + cd.b + 2 * cd.c, format!("{spec}: genus {}", cd.p));
            }
            Err(e) => o.require(false, format!("{spec}: {e}")),
        }
    }
    o
}

fn flat_kernels() -> Outcome {
    let mut o = Outcome::new(1e-9);
    let mut g = rng::seeded(301);
    for spec in zoo() {
        let v = model(spec);
        let p = v.table().p as i32;
        for _ in 0..500 {
            let t: Vec<f64> = (0..v.rank()).map(|_| rng::normal(&mut g)).collect();
            let x = v.flat_point(&t).unwrap();
            let c = canonical_kernel(&v, &x, &x).unwrap();
            let want = t.iter().map(|a| 1.0 + a * a).product::<f64>().powi(p);
            o.residual((c - want).abs() / c);
        }
    }
    // (1 + x conj(y))^2 on the complex line
    let v = model(ModelSpec::Cmat(1, 1));
    for _ in 0..500 {
        let x = rng::gaussian(&mut g, 2, 0.7);
        let y = rng::gaussian(&mut g, 2, 0.7);
        let got = complex_canonical_kernel(&v, &x, &y).unwrap();
        let w = Complex64::new(1.0, 0.0) + Complex64::new(x[0], x[1]) * Complex64::new(y[0], -y[1]);
        let want = w * w;
        o.residual((got - want).norm() / want.norm());
    }
    o
}

fn power_identity() -> Outcome {
    let mut o = Outcome::new(1e-8);
    let mut cases = Vec::new();
    for (i, spec) in zoo().into_iter().enumerate() {
        let v = model(spec);
        cases.push(v.case());
        match verify_power_identity(&v, 200, 400 + i as u64) {
            Ok(r) => o.residual(r),
            Err(e) => o.require(false, format!("{spec}: {e}")),
        }
    }
    for case in [Case::ComplexStructure, Case::NonReduced] {
        o.require(cases.contains(&case), format!("no {case} model"));
    }
    o.require(cases.iter().any(|c| matches!(c, Case::Reduced | Case::ReducedEuclidean)), "no reduced model");
    o
}

fn minimal_polynomial() -> Outcome {
    let mut o = Outcome::new(1e-9);
    let mut g = rng::seeded(501);
    let mut str_worst: f64 = 0.0;
    for spec in zoo() {
        let v = model(spec);
        for _ in 0..20 {
            let t: Vec<f64> = (0..v.rank()).map(|_| rng::normal(&mut g)).collect();
            let x = v.flat_point(&t).unwrap();
            let p = minpoly_any(&v, &x, &x).unwrap();
            for (a, b) in p.m.iter().zip(flat_minpoly_oracle(&t, p.rho)) {
                o.residual((a - b).norm() / b.abs().max(1.0));
            }
        }
        for _ in 0..20 {
            let x = rng::gaussian(&mut g, v.dim(), 1.0);
            let y = rng::gaussian(&mut g, v.dim(), 1.0);
            let a = minpoly_coeffs(&v, &x, &y).unwrap();
            o.residual(a.residual);
            let u = rng::gaussian(&mut g, v.dim(), 0.2);
            let w = rng::gaussian(&mut g, v.dim(), 0.2);
            let gop = structure_element(&v, &u, &w).unwrap();
            let sg = sigma(&gop).unwrap();
            let b = minpoly_coeffs(&v, &(&gop * &x), &(&sg * &y)).unwrap();
            for (ma, mb) in a.m.iter().zip(&b.m) {
                str_worst = str_worst.max((ma - mb).abs() / ma.abs().max(1.0));
            }
        }
    }
    o.bounded("structure_group", str_worst, 1e-8);
    o
}

fn euclidean_models() -> Vec<ModelSpec> {
    vec![ModelSpec::Sym(1), ModelSpec::Sym(2), ModelSpec::Sym(3), ModelSpec::Herm(2)]
}

fn euclidean_bs() -> Outcome {
    let mut o = Outcome::new(1e-9);
    let mut shifted: f64 = 0.0;
    let mut g = rng::seeded(601);
    for spec in euclidean_models() {
        let v = model(spec);
        let e = delta_polynomial(&v).unwrap();
        for _ in 0..50 {
            let x = cone_point(&v, &rng::gaussian(&mut g, v.dim(), 1.0), 0.2);
            let h = rng::gaussian(&mut g, v.dim(), 0.15);
            for s in [0.5, 1.7, 3.0, -0.3] {
                o.residual(delta_power_residual(&e, s, x.as_slice()).unwrap());
                shifted = shifted.max(shifted_bs_residual(&e, s, h.as_slice()).unwrap());
            }
        }
    }
    o.bounded("shifted", shifted, 1e-8);
    o
}

fn case_bs() -> Outcome {
    let mut o = Outcome::new(1e-8);
    let mut g = rng::seeded(701);
    let specs = [
        ModelSpec::Sym(2),
        ModelSpec::Cmat(1, 1),
        ModelSpec::Cmat(2, 2),
        ModelSpec::Cmat(1, 2),
        ModelSpec::Sphere(3),
        ModelSpec::Sphere(4),
        ModelSpec::Sphere(5),
    ];
    for spec in specs {
        let v = model(spec);
        for s in [1.0, 1.7, 2.5] {
            for _ in 0..3 {
                let (x, y) = loop {
                    let x: Element = v.frame_sum() + rng::gaussian(&mut g, v.dim(), 0.3);
                    let y = rng::gaussian(&mut g, v.dim(), 0.4);
                    if fundamental_kernel(&v, &x, &y).unwrap() > 1e-3 {
                        break (x, y);
                    }
                };
                match bs_verify(&v, s, &x, &y) {
                    Ok(c) => {
                        o.residual(c.residual);
                        o.residual(c.restriction);
                    }
                    Err(e) => o.require(false, format!("{spec}: {e}")),
                }
            }
        }
    }
    o
}

fn convergence() -> Outcome {
    let mut o = Outcome::new(1e-4);
    for spec in zoo() {
        let v = model(spec);
        let (_, _, _, _, c, p) = expected_row(spec);
        let th = threshold(&v);
        o.require(
            th.lambda_min == Rational64::new(1, 2) - Rational64::new(c as i64, p as i64),
            format!("{spec}: threshold {}", th.lambda_min),
        );
        if v.rank() > 2 {
            continue;
        }
        let probe = divergence_probe(&v, 7, 0.5, &QuadratureSpec::default()).unwrap();
        let monotone = probe.windows(2).all(|w| w[1].1 > w[0].1);
        let growth = probe.last().unwrap().1 / probe[0].1;
        o.require(monotone && growth >= 10.0, format!("{spec}: growth {growth}"));
    }
    let spec = QuadratureSpec { rule: QuadratureRule::TensorGaussJacobi { nodes: 64 } };
    for m in [ModelSpec::Sym(1), ModelSpec::Sphere(3)] {
        let v = model(m);
        let num = c_lambda_numeric(&v, 1.0, &spec).unwrap().value / c_lambda_numeric(&v, 1.5, &spec).unwrap().value;
        let closed = c_lambda_gamma_ratio(&v, 1.0, 1.5).unwrap();
        o.residual((num - closed).abs() / closed);
    }
    o
}

fn descent() -> Outcome {
    let mut o = Outcome::new(1e-5);
    let v = model(descent_model());
    let f = Bump { lo: 0.5, hi: 2.0, scale: 1.0 };
    for s in [1.5, 2.0, 3.0] {
        for x in [0.3, 0.7, 1.4] {
            match verify_descent(&v, s, &f, x, 200) {
                Ok(d) => o.residual(d.relative_error),
                Err(e) => o.require(false, format!("s={s}: {e}")),
            }
        }
    }
    o
}

fn pole_ledgers() -> Outcome {
    let mut o = Outcome::new(0.0);
    let q = Rational64::new;
    // hand-derived heads of the families
    let frozen: [(ModelSpec, Vec<Rational64>); 7] = [
        (ModelSpec::Sym(1), vec![q(-1, 2)]),
        (ModelSpec::Sym(3), vec![q(-1, 2), q(-3, 4)]),
        (ModelSpec::Spin(2, 3), vec![q(-1, 2), q(-5, 4)]),
        (ModelSpec::Rect(2, 3), vec![q(-1, 2)]),
        (ModelSpec::Cmat(2, 2), vec![q(-1, 1)]),
        (ModelSpec::Sphere(3), vec![q(-3, 2)]),
        (ModelSpec::Sphere(4), vec![q(-2, 1)]),
    ];
    for (spec, heads) in frozen {
        let l = pole_ledger(&model(spec), 4);
        let got: Vec<Rational64> = l.families.iter().map(|f| f.head).collect();
        o.require(got == heads, format!("{spec}: heads {got:?}"));
    }
    for spec in zoo() {
        let v = model(spec);
        let l = pole_ledger(&v, 8);
        let c = v.table().c as i64;
        o.require(l.first_pole() == q(-c, 2), format!("{spec}: first pole {}", l.first_pole()));
        let p = Rational64::from(l.p);
        for (s, lam) in l.s_poles().into_iter().zip(l.lambda_poles()) {
            o.require(descent_shift(&v, s, 40).is_some(), format!("{spec}: {s} is not a shifted b-root"));
            o.require(lambda_to_s(p, lam) == s, format!("{spec}: lambda image of {s}"));
        }
    }
    o
}

fn m_k_extraction() -> Outcome {
    let mut o = Outcome::new(1e-9);
    let mut g = rng::seeded(1101);
    for spec in euclidean_models() {
        let v = model(spec);
        let e = delta_polynomial(&v).unwrap();
        for _ in 0..10 {
            let xi = e.algebra_coords(rng::gaussian(&mut g, v.dim(), 0.5).as_slice());
            o.residual(e.symbol_residual(&xi).unwrap());
            let x: Element = v.frame_sum() + rng::gaussian(&mut g, v.dim(), 0.2);
            let y = rng::gaussian(&mut g, v.dim(), 0.3);
            let f = h_jet(&v, &x, &y, e.rank).unwrap().real_power(1.4).unwrap();
            let m = e.extract_m_k(&f, x.as_slice()).unwrap();
            for s in [0.3, 1.0, 2.2] {
                let direct = e.apply_e_s(s, &f, x.as_slice()).unwrap();
                o.residual((direct - e.e_s_from_m(s, &m)).norm() / direct.norm().max(1.0));
            }
        }
    }
    o
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("axioms", axioms),
        ("peirce_and_characteristic_numbers", peirce_and_table),
        ("canonical_kernel_on_flats", flat_kernels),
        ("power_identity", power_identity),
        ("minimal_polynomial", minimal_polynomial),
        ("euclidean_bernstein_sato", euclidean_bs),
        ("case_bernstein_sato", case_bs),
        ("convergence_threshold", convergence),
        ("descent_identity", descent),
        ("pole_ledgers", pole_ledgers),
        ("m_k_extraction", m_k_extraction),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let tag = if o.passed() { "PASS" } else { "FAIL" };
        let extra: String = o.extra.iter().map(|(n, r, t)| format!(" {n}: worst={r:.3e} tol={t:.0e}")).collect();
        println!(
            "[{tag}] {:>2} {name}: worst={:.3e} tol={:.0e}{extra} ({:.2}s)",
            i + 1,
            o.worst,
            o.tol,
            start.elapsed().as_secs_f64()
        );
        for m in &o.mismatches {
            println!("       mismatch: {m}");
        }
        if !o.passed() {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
