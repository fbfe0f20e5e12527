//! Parsing of vectors given on the command line.
//!
//! Accepted forms:
//! - `dim` comma-separated real coordinates;
//! - on complex-structure models, `dim/2` coordinates for the real parts of
//!   the complex coordinates;
//! - a single number `t`, meaning `t` times the sum of the canonical frame;
//! - a sum of basis symbols with optional coefficients, `e1`, `c1+c2`,
//!   `0.5*e2-c1`, where `e<i>` is the i-th coordinate vector and `c<i>` the
//!   i-th frame tripotent (both 1-based).

use pjts::{Element, Error, Result, TripleSystem};

pub fn parse_vector(v: &TripleSystem, s: &str) -> Result<Element> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Config("empty vector".into()));
    }
    let numbers: std::result::Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    if let Ok(xs) = numbers {
        let n = v.dim();
        return match xs.len() {
            k if k == n => Ok(Element::from_vec(xs)),
            1 => Ok(v.frame_sum() * xs[0]),
            k if v.complex_structure().is_some() && 2 * k == n => {
                let mut full = xs;
                full.resize(n, 0.0);
                Ok(Element::from_vec(full))
            }
            k => Err(Error::Config(format!("{k} coordinates given, {} expects {n}", v.name()))),
        };
    }
    parse_symbolic(v, s)
}

fn parse_symbolic(v: &TripleSystem, s: &str) -> Result<Element> {
    let bad = |why: &str| Error::Config(format!("cannot parse vector '{s}': {why}"));
    let mut acc = v.zero();
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut terms = Vec::new();
    let mut start = 0;
    for (i, ch) in compact.char_indices() {
        // a sign splits terms unless it belongs to an exponent
        let after_exp = i > 0 && matches!(compact.as_bytes()[i - 1], b'e' | b'E') && {
            let prev = &compact[start..i - 1];
            prev.chars().last().is_some_and(|c| c.is_ascii_digit() || c == '.')
        };
        if (ch == '+' || ch == '-') && i > start && !after_exp {
            terms.push(&compact[start..i]);
            start = i;
        }
    }
    terms.push(&compact[start..]);
    for term in terms {
        let (sign, body) = match term.as_bytes().first() {
            Some(b'-') => (-1.0, &term[1..]),
            Some(b'+') => (1.0, &term[1..]),
            _ => (1.0, term),
        };
        let (coef, sym) = match body.split_once('*') {
            Some((c, sym)) => (c.parse::<f64>().map_err(|_| bad("bad coefficient"))?, sym),
            None => (1.0, body),
        };
        let (kind, idx) = sym.split_at(sym.len().min(1));
        let idx: usize = idx.parse().map_err(|_| bad("expected e<i> or c<i>"))?;
        if idx == 0 {
            return Err(bad("indices are 1-based"));
        }
        let basis = match kind {
            "e" if idx <= v.dim() => v.basis(idx - 1),
            "c" if idx <= v.rank() => v.frame()[idx - 1].clone(),
            "e" | "c" => return Err(bad("index out of range")),
            _ => return Err(bad("expected e<i> or c<i>")),
        };
        acc += basis * (sign * coef);
    }
    Ok(acc)
}
