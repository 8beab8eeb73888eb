//! Per-identity check records and the accumulator that builds them.

use serde::{Deserialize, Serialize};

use crate::scalar::{scale_of, Real, C};

/// Outcome of one verified identity over all of its samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// The identity in plain text, so a failure can be traced to its formula.
    pub anchor: String,
    pub max_abs_err: f64,
    /// Largest error divided by the comparison scale (geometric mean of the
    /// compared magnitudes, floored at one).
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Accumulates comparisons for a single [`CheckRecord`].
#[derive(Debug, Clone)]
pub struct Check {
    name: String,
    anchor: String,
    tolerance: f64,
    max_abs: f64,
    max_rel: f64,
    samples: usize,
    failed: bool,
    notes: Vec<String>,
}

const MAX_NOTES: usize = 8;

impl Check {
    pub fn new(name: impl Into<String>, anchor: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            tolerance,
            max_abs: 0.0,
            max_rel: 0.0,
            samples: 0,
            failed: false,
            notes: Vec::new(),
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Compares two values at their own scale. Returns the scaled error.
    pub fn compare<T: Real>(&mut self, got: C<T>, want: C<T>) -> f64 {
        let scale = scale_of(&[got, want]).to_f64_lossy();
        self.compare_at(got, want, scale)
    }

    /// Compares at an externally chosen scale.
    pub fn compare_at<T: Real>(&mut self, got: C<T>, want: C<T>, scale: f64) -> f64 {
        let abs = (got - want).norm().to_f64_lossy();
        self.observe(abs, abs / scale.max(f64::MIN_POSITIVE))
    }

    /// Records a precomputed error pair.
    pub fn observe(&mut self, abs: f64, rel: f64) -> f64 {
        self.samples += 1;
        let abs = if abs.is_nan() { f64::INFINITY } else { abs };
        let rel = if rel.is_nan() { f64::INFINITY } else { rel };
        self.max_abs = self.max_abs.max(abs);
        self.max_rel = self.max_rel.max(rel);
        rel
    }

    /// A sample that must stay at or below the tolerance on its own (no comparison pair).
    pub fn bound(&mut self, value: f64) -> f64 {
        self.observe(value, value)
    }

    pub fn fail(&mut self, note: impl Into<String>) {
        self.failed = true;
        self.note(note);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        if self.notes.len() < MAX_NOTES {
            self.notes.push(note.into());
        }
    }

    /// Records the result of a fallible evaluation; an error fails the check.
    pub fn guard<V, E: std::fmt::Display>(&mut self, r: Result<V, E>) -> Option<V> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.samples += 1;
                self.fail(e.to_string());
                None
            }
        }
    }

    /// Folds in a partial accumulator of the same check.
    pub fn absorb(&mut self, other: Check) {
        self.max_abs = self.max_abs.max(other.max_abs);
        self.max_rel = self.max_rel.max(other.max_rel);
        self.samples += other.samples;
        self.failed |= other.failed;
        for n in other.notes {
            self.note(n);
        }
    }

    pub fn finish(self) -> CheckRecord {
        let pass = !self.failed && self.samples > 0 && self.max_rel <= self.tolerance;
        CheckRecord {
            name: self.name,
            anchor: self.anchor,
            max_abs_err: self.max_abs,
            max_rel_err: self.max_rel,
            tolerance: self.tolerance,
            samples: self.samples,
            pass,
            notes: self.notes,
        }
    }
}

impl CheckRecord {
    /// Folds in another record of the same check.
    pub fn merge(&mut self, other: CheckRecord) {
        self.max_abs_err = self.max_abs_err.max(other.max_abs_err);
        self.max_rel_err = self.max_rel_err.max(other.max_rel_err);
        self.samples += other.samples;
        self.pass &= other.pass;
        for n in other.notes {
            if self.notes.len() < MAX_NOTES {
                self.notes.push(n);
            }
        }
    }
}

/// Appends `records`, merging any whose name is already present. Keeps first-seen order.
pub fn merge_by_name(acc: &mut Vec<CheckRecord>, records: impl IntoIterator<Item = CheckRecord>) {
    for r in records {
        match acc.iter_mut().find(|a| a.name == r.name) {
            Some(a) => a.merge(r),
            None => acc.push(r),
        }
    }
}

/// Every record passes and there is at least one.
pub fn all_pass(records: &[CheckRecord]) -> bool {
    !records.is_empty() && records.iter().all(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c64;

    #[test]
    fn passes_within_tolerance() {
        let mut c = Check::new("x", "a = a", 1e-9);
        c.compare::<f64>(c64(1.0, 0.0), c64(1.0 + 1e-12, 0.0));
        let r = c.finish();
        assert!(r.pass);
        assert_eq!(r.samples, 1);
    }

    #[test]
    fn fails_on_error_or_nan_or_no_samples() {
        let mut c = Check::new("x", "", 1e-9);
        c.compare::<f64>(c64(f64::NAN, 0.0), c64(1.0, 0.0));
        assert!(!c.finish().pass);
        assert!(!Check::new("x", "", 1.0).finish().pass);
        let mut c = Check::new("x", "", 1.0);
        let r: Result<(), String> = Err("boom".into());
        assert!(c.guard(r).is_none());
        let rec = c.finish();
        assert!(!rec.pass);
        assert_eq!(rec.notes, vec!["boom".to_string()]);
    }

    #[test]
    fn merging_keeps_worst_error_and_order() {
        let rec = |name: &str, err: f64, pass: bool| CheckRecord {
            name: name.into(),
            anchor: String::new(),
            max_abs_err: err,
            max_rel_err: err,
            tolerance: 1.0,
            samples: 1,
            pass,
            notes: Vec::new(),
        };
        let mut acc = Vec::new();
        merge_by_name(
            &mut acc,
            [rec("a", 0.1, true), rec("b", 0.2, true), rec("a", 0.3, false)],
        );
        assert_eq!(acc.len(), 2);
        assert_eq!(acc[0].name, "a");
        assert_eq!(acc[0].max_rel_err, 0.3);
        assert_eq!(acc[0].samples, 2);
        assert!(!acc[0].pass);
        assert!(all_pass(&acc[1..]));
    }

    #[test]
    fn large_values_are_compared_relatively() {
        let mut c = Check::new("x", "", 1e-9);
        c.compare::<f64>(c64(1e12, 0.0), c64(1e12 + 1.0, 0.0));
        assert!(c.finish().pass);
    }
}
