use serde::{Deserialize, Serialize};

use crate::schedule::ScheduleMode;

/// Relative tolerance for floating comparisons.
pub const VERIFY_TOLERANCE: f64 = 1e-9;
/// Relative slack below which an exact re-check is attempted.
pub const EXACT_TRIGGER: f64 = 1e-7;
pub const MAX_WITNESSES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NotCertified,
}

/// One checked inequality `lhs <= rhs` (lower bounds are recorded with the
/// roles swapped so that slack is always `rhs - lhs`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub stage: usize,
    /// Point ids, set indices or a point and a stage, depending on the lemma.
    pub a: usize,
    pub b: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub relative: f64,
}

impl Witness {
    fn key(&self) -> (f64, usize, usize, usize, f64, f64) {
        (self.relative, self.stage, self.a, self.b, self.lhs, self.rhs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecheckOutcome {
    Confirmed,
    Refuted,
    Unavailable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactRecheck {
    pub outcome: RecheckOutcome,
    pub checks: usize,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub pass: bool,
    pub status: Status,
    /// Smallest `rhs - lhs` seen (absolute units of the check).
    #[serde(rename = "worstSlack")]
    pub worst_slack: f64,
    #[serde(rename = "worstRelativeSlack")]
    pub worst_relative: f64,
    pub pairs: usize,
    pub mode: ScheduleMode,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactRecheck>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl LemmaReport {
    pub fn not_certified(lemma: &str, mode: ScheduleMode, why: &str) -> Self {
        LemmaReport {
            lemma: lemma.to_string(),
            pass: false,
            status: Status::NotCertified,
            worst_slack: 0.0,
            worst_relative: 0.0,
            pairs: 0,
            mode,
            witnesses: Vec::new(),
            constant: None,
            notes: vec![why.to_string()],
            exact: None,
            details: serde_json::Value::Null,
        }
    }

    /// Smallest |relative slack| observed, used to decide on an exact re-check.
    pub fn needs_exact(&self, min_abs_relative: f64) -> bool {
        self.status != Status::NotCertified && min_abs_relative < EXACT_TRIGGER
    }

    pub(crate) fn apply_recheck(&mut self, r: ExactRecheck) {
        match r.outcome {
            RecheckOutcome::Refuted => {
                self.pass = false;
                self.status = Status::Fail;
            }
            // Only borderline float failures are overturned.
            RecheckOutcome::Confirmed if self.worst_relative >= -EXACT_TRIGGER => {
                self.pass = true;
                self.status = Status::Pass;
            }
            _ => {}
        }
        self.exact = Some(r);
    }
}

/// Running min-reduction over checks, mergeable across threads.
#[derive(Clone, Debug)]
pub(crate) struct Tally {
    pub pairs: usize,
    pub worst_slack: f64,
    pub worst_relative: f64,
    pub min_abs_relative: f64,
    pub witnesses: Vec<Witness>,
}

impl Default for Tally {
    fn default() -> Self {
        Tally { pairs: 0, worst_slack: f64::INFINITY, worst_relative: f64::INFINITY, min_abs_relative: f64::INFINITY, witnesses: Vec::new() }
    }
}

fn relative(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (rhs - lhs) / scale
    }
}

fn cmp_key(a: &Witness, b: &Witness) -> std::cmp::Ordering {
    a.key().partial_cmp(&b.key()).unwrap_or(std::cmp::Ordering::Equal)
}

impl Tally {
    /// Records `lhs <= rhs`.
    pub fn le(&mut self, stage: usize, a: usize, b: usize, lhs: f64, rhs: f64) {
        self.pairs += 1;
        let slack = rhs - lhs;
        let rel = relative(lhs, rhs);
        if rel < self.worst_relative || (rel == self.worst_relative && slack < self.worst_slack) {
            self.worst_relative = rel;
            self.worst_slack = slack;
        }
        // 0 <= 0 is exact and carries no rounding risk.
        if !(lhs == 0.0 && rhs == 0.0) {
            self.min_abs_relative = self.min_abs_relative.min(rel.abs());
        }
        let w = Witness { stage, a, b, lhs, rhs, slack, relative: rel };
        if self.witnesses.len() < MAX_WITNESSES || cmp_key(&w, self.witnesses.last().expect("nonempty")).is_lt() {
            let pos = self.witnesses.partition_point(|o| cmp_key(o, &w).is_le());
            self.witnesses.insert(pos, w);
            self.witnesses.truncate(MAX_WITNESSES);
        }
    }

    /// Records the lower bound `lhs >= rhs`.
    pub fn ge(&mut self, stage: usize, a: usize, b: usize, lhs: f64, rhs: f64) {
        self.le(stage, a, b, rhs, lhs);
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.pairs += other.pairs;
        if other.worst_relative < self.worst_relative || (other.worst_relative == self.worst_relative && other.worst_slack < self.worst_slack) {
            self.worst_relative = other.worst_relative;
            self.worst_slack = other.worst_slack;
        }
        self.min_abs_relative = self.min_abs_relative.min(other.min_abs_relative);
        self.witnesses.extend(other.witnesses);
        self.witnesses.sort_by(cmp_key);
        self.witnesses.truncate(MAX_WITNESSES);
        self
    }

    pub fn into_report(self, lemma: &str, mode: ScheduleMode) -> LemmaReport {
        let pass = self.worst_relative >= -VERIFY_TOLERANCE || self.pairs == 0;
        let (worst_slack, worst_relative) = if self.pairs == 0 { (0.0, 0.0) } else { (self.worst_slack, self.worst_relative) };
        let mut notes = Vec::new();
        if self.pairs == 0 {
            notes.push("vacuous: no pair satisfies the hypothesis".to_string());
        }
        LemmaReport {
            lemma: lemma.to_string(),
            pass,
            status: if pass { Status::Pass } else { Status::Fail },
            worst_slack,
            worst_relative,
            pairs: self.pairs,
            mode,
            witnesses: self.witnesses,
            constant: None,
            notes,
            exact: None,
            details: serde_json::Value::Null,
        }
    }
}
