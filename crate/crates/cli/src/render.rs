//! Text and JSON renderings of command outcomes.

use std::fmt::Write;

use algebroid::{Check, CheckKind, Flags, Report};
use serde::Serialize;

pub const SCHEMA: &str = "algebroid-report";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub count: usize,
    pub seed: u64,
    pub tol_eq: f64,
    pub tol_nonzero: f64,
}

/// Everything a command produced; serialized verbatim under `--json`.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub schema: &'static str,
    pub schema_version: u32,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
    pub grid: GridInfo,
    pub passed: bool,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<Flags>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub reports: Vec<Report>,
}

impl Outcome {
    pub fn new(command: &'static str, name: Option<String>, grid: GridInfo) -> Outcome {
        Outcome {
            schema: SCHEMA,
            schema_version: SCHEMA_VERSION,
            command,
            name,
            convention: None,
            grid,
            passed: false,
            exit_code: crate::exit::FAILURE,
            flags: None,
            error: None,
            reports: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("outcome serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let name = self.name.as_deref().unwrap_or("-");
        let _ = write!(out, "{} {}: {} points, seed {}, tol {:e}", self.command, name, self.grid.count, self.grid.seed, self.grid.tol_eq);
        if let Some(c) = &self.convention {
            let _ = write!(out, ", convention {}", c);
        }
        out.push('\n');
        if let Some(f) = &self.flags {
            out.push_str("\nflags\n");
            for (k, v) in f.entries() {
                let _ = writeln!(out, "  {:<20} {}", k, v);
            }
        }
        for r in &self.reports {
            out.push('\n');
            render_report(&mut out, r);
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "\nerror: {}", e);
        }
        let _ = writeln!(out, "\nresult: {} (exit {})", if self.passed { "PASS" } else { "FAIL" }, self.exit_code);
        out
    }
}

fn status(c: &Check) -> &'static str {
    if c.is_skipped() {
        "SKIP"
    } else if c.passed {
        "PASS"
    } else if c.informational {
        "INFO"
    } else {
        "FAIL"
    }
}

fn render_report(out: &mut String, r: &Report) {
    let _ = write!(out, "{} ({} points", r.title, r.grid_points);
    if let Some(c) = &r.convention {
        let _ = write!(out, ", {}", c);
    }
    out.push_str(")\n");
    let width = r.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &r.checks {
        let rel = match c.kind {
            CheckKind::Vanishing => "max",
            CheckKind::NonVanishing => "min",
            CheckKind::Implication => "violated",
        };
        let mut line = String::new();
        let _ = write!(line, "  {} {:<w$}  {} {:<10.3e} tol {:<8.1e}", status(c), c.name, rel, c.value, c.tolerance, w = width);
        if !c.passed {
            if let Some(p) = &c.worst_point {
                let coords: Vec<String> = p.iter().map(|v| format!("{:.6}", v)).collect();
                let _ = write!(line, "  at ({})", coords.join(", "));
            }
        }
        if let Some(n) = &c.note {
            let _ = write!(line, "  [{}]", n);
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}
