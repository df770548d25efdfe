//! Checkers for every quantitative inequality of the construction.
//!
//! Each checker returns a [`LemmaReport`]. Floating checks pass within a
//! relative tolerance of 1e-9; checks whose slack comes within 1e-7 of zero
//! are replayed in rational arithmetic when the space allows it.

mod checks;
mod exact;
mod oracle;
mod qmeasure;
mod report;

pub use checks::simplex_minimum_grid;
pub use exact::{MAX_EXACT_POINTS, REPLAY_LEMMAS};
pub use oracle::{brute_force_oracle, image_matrix, DistortionProfile, OracleError, OraclePair, ORACLE_MAX_POINTS};
pub use qmeasure::QMeasureStage;
pub use report::{ExactRecheck, LemmaReport, RecheckOutcome, Status, Witness, EXACT_TRIGGER, MAX_WITNESSES, VERIFY_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::embedding::Construction;
use crate::metric::FiniteMetricSpace;
use crate::schedule::ScheduleMode;
use checks::Ctx;

/// Every lemma id in report order.
pub const LEMMA_IDS: [&str; 15] = [
    "local_lipschitz",
    "controlled_stretching",
    "separation",
    "edge_bound",
    "cauchy",
    "limit_tail",
    "limit_upper",
    "limit_lower",
    "coordinate_discipline",
    "convexity",
    "weight_lemmas",
    "simplex_count",
    "simplex_minimum",
    "qmeasure",
    "biholder",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// f64 checks, with a rational replay only for near-zero slack.
    #[default]
    Float64,
    /// Replay every supported lemma in rational arithmetic.
    Rational,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    /// Subset of [`LEMMA_IDS`]; all when `None`.
    pub lemmas: Option<Vec<String>>,
    pub precision: Precision,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("unknown lemma id {0:?}")]
    UnknownLemma(String),
    #[error("construction images do not match a space of {points} points ({stages} stages)")]
    Mismatch { stages: usize, points: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub mode: ScheduleMode,
    pub precision: Precision,
    pub depth: usize,
    pub reports: Vec<LemmaReport>,
    /// Every report passes or is honestly not certified.
    #[serde(rename = "allPass")]
    pub all_pass: bool,
}

impl VerificationReport {
    pub fn get(&self, lemma: &str) -> Option<&LemmaReport> {
        self.reports.iter().find(|r| r.lemma == lemma)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LemmaReport> {
        self.reports.iter().filter(|r| r.status == Status::Fail)
    }
}

fn run_one(ctx: &Ctx, lemma: &str) -> (LemmaReport, f64) {
    match lemma {
        "local_lipschitz" => checks::local_lipschitz(ctx),
        "controlled_stretching" => checks::controlled_stretching(ctx),
        "separation" => checks::separation(ctx),
        "edge_bound" => checks::edge_bound(ctx),
        "cauchy" => checks::cauchy(ctx),
        "limit_tail" => checks::limit_tail(ctx),
        "limit_upper" => checks::limit_upper(ctx),
        "limit_lower" => checks::limit_lower(ctx),
        "coordinate_discipline" => checks::coordinate_discipline(ctx),
        "convexity" => checks::convexity(ctx),
        "weight_lemmas" => checks::weight_lemmas(ctx),
        "simplex_count" => checks::simplex_count(ctx),
        "simplex_minimum" => checks::simplex_minimum(ctx),
        "qmeasure" if ctx.mode() == ScheduleMode::Relaxed => {
            (LemmaReport::not_certified("qmeasure", ctx.mode(), "the measure bound needs the exact schedule"), 1.0)
        }
        "qmeasure" => qmeasure::qmeasure(ctx),
        "biholder" => oracle::biholder(ctx),
        _ => unreachable!("ids are validated first"),
    }
}

/// Structural checks compare integers or exact equalities, so zero slack there is expected.
fn slack_sensitive(lemma: &str) -> bool {
    REPLAY_LEMMAS.contains(&lemma) || lemma == "qmeasure" || lemma == "biholder"
}

/// Runs the selected checkers on a built construction.
pub fn verify_construction(space: &FiniteMetricSpace, construction: &Construction, config: &VerifyConfig) -> Result<VerificationReport, VerifyError> {
    let ids: Vec<String> = match &config.lemmas {
        None => LEMMA_IDS.iter().map(|s| s.to_string()).collect(),
        Some(list) => {
            for l in list {
                if !LEMMA_IDS.contains(&l.as_str()) {
                    return Err(VerifyError::UnknownLemma(l.clone()));
                }
            }
            list.clone()
        }
    };
    if construction.stages.iter().any(|s| s.images.len() != space.len()) {
        return Err(VerifyError::Mismatch { stages: construction.stages.len(), points: space.len() });
    }
    let ctx = Ctx { space, c: construction };
    let mut replay: Option<Result<exact::ExactReplay, String>> = None;
    let mut reports = Vec::with_capacity(ids.len());
    for id in &ids {
        let (mut r, min_abs) = run_one(&ctx, id);
        let wanted = slack_sensitive(id) && r.status != Status::NotCertified && (config.precision == Precision::Rational || r.needs_exact(min_abs));
        if wanted {
            if REPLAY_LEMMAS.contains(&id.as_str()) {
                let rp = replay.get_or_insert_with(|| exact::ExactReplay::new(&ctx));
                let outcome = match rp {
                    Ok(rp) => rp.check(id),
                    Err(why) => ExactRecheck { outcome: RecheckOutcome::Unavailable, checks: 0, detail: why.clone() },
                };
                r.apply_recheck(outcome);
            } else {
                r.apply_recheck(ExactRecheck { outcome: RecheckOutcome::Unavailable, checks: 0, detail: format!("no rational replay for {id}") });
            }
        }
        reports.push(r);
    }
    let all_pass = reports.iter().all(|r| r.status != Status::Fail);
    Ok(VerificationReport { mode: construction.schedule.mode, precision: config.precision, depth: construction.depth(), reports, all_pass })
}
