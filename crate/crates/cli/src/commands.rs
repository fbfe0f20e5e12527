//! Argument grammar and the four subcommands.

use crate::report::{Record, Report};
use crate::suites::{run_suite, Suite, SuiteOptions};
use crate::vectors::parse_vector;
use clap::{Parser, Subcommand};
use pjts::analysis::{
    c_lambda_numeric, ln_c_lambda_closed, pole_ledger, threshold, to_f64, QuadratureRule, QuadratureSpec,
};
use pjts::bernstein::case_b;
use pjts::kernels::{canonical_kernel, compact_kernel_pair, complex_canonical_kernel};
use pjts::minpoly::{fundamental_kernel, h_kernel};
use pjts::models::{build_model, GRAMMAR};
use pjts::spectral::characteristic_numbers;
use pjts::{ModelSpec, Rational64, Result};
use std::path::PathBuf;
use std::time::Instant;

fn parse_model(s: &str) -> std::result::Result<ModelSpec, String> {
    s.parse::<ModelSpec>().map_err(|e| match e {
        pjts::Error::Config(msg) if msg.contains(GRAMMAR) => msg,
        other => format!("{other}; grammar: {GRAMMAR}"),
    })
}

#[derive(Debug, Parser)]
#[command(name = "pjts", version, about = "Positive Jordan triple systems: kernels, Bernstein-Sato identities, poles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Override every numeric tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Random samples per sampled check
    #[arg(long, global = true, default_value_t = 50)]
    pub samples: usize,
    /// Write the report as JSON
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Write the check records as CSV
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Characteristic numbers, genus, case, threshold and first poles
    Classify {
        #[arg(value_parser = parse_model, help = GRAMMAR)]
        model: ModelSpec,
    },
    /// Run a verification suite
    Verify {
        #[arg(value_parser = parse_model, help = GRAMMAR)]
        model: ModelSpec,
        #[arg(value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Kernel values at a pair of points
    Kernel {
        #[arg(value_parser = parse_model, help = GRAMMAR)]
        model: ModelSpec,
        /// Coordinates, a multiple of the frame sum, or symbols such as e1, c1+c2
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        y: String,
    },
    /// The constant c(lambda) of the intertwining integral
    Clambda {
        #[arg(value_parser = parse_model, help = GRAMMAR)]
        model: ModelSpec,
        #[arg(allow_negative_numbers = true)]
        lambda: f64,
        /// Gauss-Jacobi nodes per axis
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        /// Use Monte Carlo with this many samples instead
        #[arg(long, value_name = "SAMPLES")]
        monte_carlo: Option<usize>,
    },
}

impl Command {
    fn model(&self) -> ModelSpec {
        match self {
            Command::Classify { model } | Command::Verify { model, .. } => *model,
            Command::Kernel { model, .. } | Command::Clambda { model, .. } => *model,
        }
    }
}

pub fn run(cli: &Cli, echo: &str) -> Result<Report> {
    let start = Instant::now();
    let spec = cli.command.model();
    let v = build_model(spec)?;
    let mut rep = Report::new(echo, spec.to_string(), cli.seed);
    match &cli.command {
        Command::Classify { .. } => classify(&v, &mut rep)?,
        Command::Verify { suite, .. } => {
            let opts = SuiteOptions { seed: cli.seed, tol: cli.tol, samples: cli.samples };
            rep.records = run_suite(&v, *suite, &opts)?;
        }
        Command::Kernel { x, y, .. } => kernel(&v, x, y, cli.tol, &mut rep)?,
        Command::Clambda { lambda, nodes, monte_carlo, .. } => {
            let rule = match monte_carlo {
                Some(samples) => QuadratureRule::MonteCarlo { samples: *samples, seed: cli.seed },
                None => QuadratureRule::TensorGaussJacobi { nodes: *nodes },
            };
            clambda(&v, *lambda, QuadratureSpec { rule }, cli.tol, &mut rep)?;
        }
    }
    rep.sort();
    rep.wall_time = start.elapsed().as_secs_f64();
    Ok(rep)
}

fn list(qs: &[Rational64]) -> String {
    let mut s: Vec<String> = qs.iter().map(|q| q.to_string()).collect();
    s.push("...".into());
    s.join(", ")
}

fn classify(v: &pjts::TripleSystem, rep: &mut Report) -> Result<()> {
    let cd = v.table();
    rep.quantity("dim", v.dim());
    for (k, val) in
        [("r", cd.r), ("a", cd.a), ("a+", cd.a_plus), ("a-", cd.a_minus), ("b", cd.b), ("c", cd.c), ("p", cd.p)]
    {
        rep.quantity(k, val);
    }
    rep.quantity("case", v.case());
    let th = threshold(v);
    rep.quantity("lambda_min", th.lambda_min);
    rep.quantity("s_min", th.s_min);
    let b = case_b(v);
    rep.quantity("b_roots", b.roots().iter().map(|q| q.to_string()).collect::<Vec<_>>().join(", "));
    let ledger = pole_ledger(v, 10);
    for f in &ledger.families {
        rep.quantity(format!("family {}", f.description), list(&f.poles[..3.min(f.poles.len())]));
    }
    let poles = ledger.s_poles();
    rep.quantity("s_poles", list(&poles[..10.min(poles.len())]));
    rep.quantity("lambda_poles", list(&ledger.lambda_poles()[..10.min(poles.len())]));
    let consistent = characteristic_numbers(v).is_ok();
    rep.records.push(Record::exact("classify.characteristic_numbers", "characteristic-numbers", consistent));
    rep.records.push(Record::exact("classify.first_pole", "pole-ledger", ledger.first_pole() == th.s_min));
    Ok(())
}

fn kernel(v: &pjts::TripleSystem, xs: &str, ys: &str, tol: Option<f64>, rep: &mut Report) -> Result<()> {
    let x = parse_vector(v, xs)?;
    let y = parse_vector(v, ys)?;
    let fmt = |e: &pjts::Element| e.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",");
    rep.quantity("x", fmt(&x));
    rep.quantity("y", fmt(&y));
    let c = canonical_kernel(v, &x, &y)?;
    rep.quantity("c(x,y)", c);
    if v.complex_structure().is_some() {
        rep.quantity("det_C(C(x,y))", complex_canonical_kernel(v, &x, &y)?);
    }
    rep.quantity("h(x,y)", h_kernel(v, &x, &y)?);
    let k = fundamental_kernel(v, &x, &y)?;
    let p = v.table().p as f64;
    rep.quantity("k(x,y)", k);
    rep.quantity("k^(p/2)", k.powf(p / 2.0));
    rep.quantity("compact(x,y)", compact_kernel_pair(v, &x, &y)?);
    let residual = if c == 0.0 { (k.powf(p / 2.0)).abs() } else { (c - k.powf(p / 2.0)).abs() / c };
    rep.records.push(Record::new("kernel.power_identity", "kernel-power-identity", residual, tol.unwrap_or(1e-8)));
    Ok(())
}

fn clambda(
    v: &pjts::TripleSystem,
    lambda: f64,
    spec: QuadratureSpec,
    tol: Option<f64>,
    rep: &mut Report,
) -> Result<()> {
    let th = threshold(v);
    rep.quantity("lambda", lambda);
    rep.quantity("lambda_min", format!("{} ({})", th.lambda_min, to_f64(th.lambda_min)));
    let q = c_lambda_numeric(v, lambda, &spec)?;
    rep.quantity("c(lambda)", q.value);
    rep.quantity("error_estimate", q.error);
    if let Ok(ln) = ln_c_lambda_closed(v, lambda) {
        let closed = ln.exp();
        rep.quantity("closed_form", closed);
        let (default_tol, tag) = match spec.rule {
            QuadratureRule::TensorGaussJacobi { .. } => (1e-6, "c-lambda-closed-form"),
            QuadratureRule::MonteCarlo { .. } => ((5.0 * q.error / closed).max(1e-12), "c-lambda-closed-form"),
        };
        let residual = (q.value - closed).abs() / closed;
        rep.records.push(Record::new("clambda.closed_form", tag, residual, tol.unwrap_or(default_tol)));
    }
    Ok(())
}
