//! Run summaries and convergence traces as plain text.

use std::fmt::Write as _;

use crate::trws::{relative_gap, TraceRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub model: String,
    pub energy: f64,
    pub lower_bound: Option<f64>,
    pub iterations: usize,
    pub wall_ms: f64,
    pub consistent: bool,
    pub seed: Option<u64>,
    /// Additional `key: value` lines appended after the standard fields.
    pub extra: Vec<(String, String)>,
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.17e}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl RunReport {
    pub fn relative_gap(&self) -> Option<f64> {
        self.lower_bound.map(|lb| relative_gap(self.energy, lb))
    }

    /// One `key: value` pair per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let none = || "none".to_string();
        let _ = writeln!(s, "command: {}", self.command);
        let _ = writeln!(s, "model: {}", self.model);
        let _ = writeln!(s, "energy: {}", num(self.energy));
        let _ = writeln!(s, "lower_bound: {}", self.lower_bound.map_or_else(none, num));
        let _ = writeln!(s, "relative_gap: {}", self.relative_gap().map_or_else(none, num));
        let _ = writeln!(s, "iterations: {}", self.iterations);
        let _ = writeln!(s, "wall_ms: {:.3}", self.wall_ms);
        let _ = writeln!(s, "consistent: {}", self.consistent);
        let _ = writeln!(s, "seed: {}", self.seed.map_or_else(none, |v| v.to_string()));
        for (k, v) in &self.extra {
            let _ = writeln!(s, "{k}: {v}");
        }
        s
    }
}

/// Looks up `key` in a `key: value` document.
pub fn report_field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix(": "))
}

/// `iter,lower_bound,energy,ms` with a header row.
pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut s = String::from("iter,lower_bound,energy,ms\n");
    for t in trace {
        let _ = writeln!(
            s,
            "{},{},{},{:.3}",
            t.iteration,
            t.lower_bound.map_or_else(String::new, num),
            num(t.energy),
            t.elapsed_ms
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_is_recomputable_from_text() {
        let r = RunReport {
            command: "segment".into(),
            model: "2x2".into(),
            energy: 10.5,
            lower_bound: Some(10.0),
            iterations: 3,
            wall_ms: 1.0,
            consistent: true,
            seed: None,
            extra: vec![("note".into(), "x".into())],
        };
        let t = r.to_text();
        let e: f64 = report_field(&t, "energy").unwrap().parse().unwrap();
        let lb: f64 = report_field(&t, "lower_bound").unwrap().parse().unwrap();
        let gap: f64 = report_field(&t, "relative_gap").unwrap().parse().unwrap();
        assert_eq!(gap, relative_gap(e, lb));
        assert_eq!(report_field(&t, "seed"), Some("none"));
        assert_eq!(report_field(&t, "note"), Some("x"));
    }

    #[test]
    fn trace_rows() {
        let t = [TraceRecord { iteration: 1, lower_bound: None, energy: 2.0, elapsed_ms: 0.5 }];
        assert_eq!(trace_csv(&t), "iter,lower_bound,energy,ms\n1,,2.00000000000000000e0,0.500\n");
    }
}
