//! Per-identity residual reports.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// How a check's value is judged against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CheckKind {
    /// Passes when the largest residual is below tolerance.
    Vanishing,
    /// Passes when the smallest magnitude is above tolerance.
    NonVanishing,
    /// Logical implication between flags; value is 1 when violated.
    Implication,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    /// Max residual for vanishing claims, min magnitude for non-vanishing ones.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub worst_point: Option<Vec<f64>>,
    /// Informational checks are reported but never gate the overall verdict.
    pub informational: bool,
    pub note: Option<String>,
}

impl Check {
    pub fn implication(name: &str, premise: bool, conclusion: bool) -> Check {
        let passed = !premise || conclusion;
        Check {
            name: name.to_string(),
            kind: CheckKind::Implication,
            value: if passed { 0.0 } else { 1.0 },
            tolerance: 0.5,
            passed,
            worst_point: None,
            informational: false,
            note: if premise { None } else { Some("hypothesis false on this structure (vacuous)".into()) },
        }
    }

    /// Placeholder for an identity whose hypothesis does not hold here.
    pub fn skipped(name: &str, reason: impl Into<String>) -> Check {
        Check {
            name: name.to_string(),
            kind: CheckKind::Vanishing,
            value: 0.0,
            tolerance: 0.0,
            passed: true,
            worst_point: None,
            informational: true,
            note: Some(format!("skipped: {}", reason.into())),
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.informational && self.note.as_deref().is_some_and(|n| n.starts_with("skipped"))
    }

    pub fn informational(mut self) -> Check {
        self.informational = true;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Check {
        self.note = Some(note.into());
        self
    }

    /// True for an implication whose hypothesis was false.
    pub fn is_vacuous(&self) -> bool {
        self.kind == CheckKind::Implication && self.note.as_deref().is_some_and(|n| n.contains("vacuous"))
    }
}

/// Running max (or min) of a residual over grid points.
pub struct Tracker {
    name: String,
    kind: CheckKind,
    tolerance: f64,
    value: f64,
    worst_point: Option<Vec<f64>>,
    failure: Option<String>,
}

impl Tracker {
    pub fn vanishing(name: &str, tolerance: f64) -> Tracker {
        Tracker {
            name: name.to_string(),
            kind: CheckKind::Vanishing,
            tolerance,
            value: 0.0,
            worst_point: None,
            failure: None,
        }
    }

    pub fn nonvanishing(name: &str, tolerance: f64) -> Tracker {
        Tracker {
            name: name.to_string(),
            kind: CheckKind::NonVanishing,
            tolerance,
            value: f64::INFINITY,
            worst_point: None,
            failure: None,
        }
    }

    pub fn record(&mut self, point: &[f64], value: f64) {
        let nonvanishing = self.kind == CheckKind::NonVanishing;
        let value = match (value.is_nan(), nonvanishing) {
            (true, true) => 0.0,
            (true, false) => f64::INFINITY,
            _ => value.abs(),
        };
        let worse = if nonvanishing { value < self.value } else { value > self.value };
        if worse || self.worst_point.is_none() {
            self.value = value;
            self.worst_point = Some(point.to_vec());
        }
    }

    /// Marks the check failed at `point` (evaluation error, singular solve, ...).
    pub fn fail(&mut self, point: &[f64], reason: impl Into<String>) {
        if self.failure.is_none() {
            self.failure = Some(format!("at {:?}: {}", point, reason.into()));
            self.worst_point = Some(point.to_vec());
        }
        self.value = match self.kind {
            CheckKind::NonVanishing => 0.0,
            _ => f64::INFINITY,
        };
    }

    pub fn finish(self) -> Check {
        let passed = self.failure.is_none()
            && match self.kind {
                CheckKind::NonVanishing => self.value > self.tolerance,
                _ => self.value < self.tolerance,
            };
        Check {
            name: self.name,
            kind: self.kind,
            value: self.value,
            tolerance: self.tolerance,
            passed,
            worst_point: self.worst_point,
            informational: false,
            note: self.failure,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Report {
    pub title: String,
    pub convention: Option<String>,
    pub grid_points: usize,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(title: &str, grid_points: usize) -> Report {
        Report { title: title.to_string(), convention: None, grid_points, checks: Vec::new() }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// Appends the checks of `other`, prefixing their names.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            c.name = format!("{}.{}", prefix, c.name);
            self.checks.push(c);
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Whether the named check exists and passed.
    pub fn holds(&self, name: &str) -> bool {
        self.get(name).is_some_and(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed && !c.informational)
    }
}
