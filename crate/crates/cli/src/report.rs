//! Flat check records and the report that carries them.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub check: String,
    pub equation_tag: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Record {
    pub fn new(check: impl Into<String>, tag: &str, residual: f64, tolerance: f64) -> Self {
        Record { check: check.into(), equation_tag: tag.into(), residual, tolerance, pass: residual <= tolerance }
    }

    /// An exact check: residual 0 on success, 1 on failure, tolerance 0.
    pub fn exact(check: impl Into<String>, tag: &str, ok: bool) -> Self {
        Record::new(check, tag, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

/// A named value printed alongside the checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub model: String,
    pub seed: u64,
    /// seconds
    pub wall_time: f64,
    pub quantities: Vec<Quantity>,
    pub records: Vec<Record>,
}

impl Report {
    pub fn new(command: impl Into<String>, model: impl Into<String>, seed: u64) -> Self {
        Report {
            command: command.into(),
            model: model.into(),
            seed,
            wall_time: 0.0,
            quantities: Vec::new(),
            records: Vec::new(),
        }
    }

    pub fn quantity(&mut self, name: impl Into<String>, value: impl ToString) {
        self.quantities.push(Quantity { name: name.into(), value: value.to_string() });
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    /// Canonical order: by check name, ties by tag.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| a.check.cmp(&b.check).then_with(|| a.equation_tag.cmp(&b.equation_tag)));
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Report> {
        serde_json::from_str(s)
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.records {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.command);
        let _ = writeln!(s, "model: {}  seed: {}  time: {:.3}s", self.model, self.seed, self.wall_time);
        let width = self.quantities.iter().map(|q| q.name.len()).max().unwrap_or(0);
        for q in &self.quantities {
            let _ = writeln!(s, "  {:width$}  {}", q.name, q.value);
        }
        if !self.records.is_empty() {
            let cw = self.records.iter().map(|r| r.check.len()).max().unwrap_or(0);
            let tw = self.records.iter().map(|r| r.equation_tag.len()).max().unwrap_or(0);
            for r in &self.records {
                let _ = writeln!(
                    s,
                    "{} {:cw$}  {:tw$}  residual={:.3e}  tol={:.1e}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.check,
                    r.equation_tag,
                    r.residual,
                    r.tolerance
                );
            }
            let failed = self.records.iter().filter(|r| !r.pass).count();
            let _ = writeln!(s, "{} checks, {} failed", self.records.len(), failed);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("pjts verify sym:2 all", "sym:2", 7);
        r.wall_time = 0.25;
        r.quantity("p", 3);
        r.records.push(Record::new("b", "tag-b", 1.0 / 3.0, 1e-9));
        r.records.push(Record::exact("a", "tag-a", true));
        r
    }

    #[test]
    fn pass_semantics() {
        assert!(Record::new("x", "t", 1e-9, 1e-9).pass);
        assert!(!Record::new("x", "t", 2e-9, 1e-9).pass);
        assert!(!Record::new("x", "t", f64::NAN, 1e-9).pass);
        assert!(!Record::exact("x", "t", false).pass);
        assert!(!sample().passed());
    }

    #[test]
    fn json_roundtrip_is_lossless() {
        let r = sample();
        let back = Report::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.records[0].residual.to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn sorted_csv() {
        let mut r = sample();
        r.sort();
        assert_eq!(r.records[0].check, "a");
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("check,equation_tag,residual,tolerance,pass"));
        assert!(lines.next().unwrap().starts_with("a,tag-a,0.0,0.0,true"));
    }
}
