//! Scale schedules: the coupled sequences of image scales ε_i, domain scales
//! δ_i and measure scales η_i, kept in the log2 domain throughout.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("invalid schedule parameters: {0}")]
    InvalidParams(String),
    #[error("constants out of range: {0}")]
    ConstantsOutOfRange(String),
    #[error("no admissible N found up to 2^62")]
    NoAdmissibleN,
    #[error("relaxed schedule rejected: {0}")]
    InvalidRelaxed(String),
}

/// Inputs of a schedule: dimension bound `n`, measure exponent `q > n`,
/// Lebesgue coefficient `sigma` and doubling constant `big_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub n: u32,
    pub q: f64,
    pub sigma: f64,
    #[serde(rename = "N")]
    pub big_n: u64,
}

impl ScheduleParams {
    pub fn new(n: u32, q: f64, sigma: f64, big_n: u64) -> Result<Self, ScheduleError> {
        let p = ScheduleParams { n, q, sigma, big_n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if !(self.q.is_finite() && self.q > self.n as f64) {
            return Err(ScheduleError::InvalidParams(format!("q = {} must exceed n = {}", self.q, self.n)));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(ScheduleError::InvalidParams(format!("sigma = {} must lie in (0, 1)", self.sigma)));
        }
        if self.big_n < 2 {
            return Err(ScheduleError::InvalidParams(format!("N = {} must be at least 2", self.big_n)));
        }
        Ok(())
    }

    fn gap(&self) -> f64 {
        self.q - self.n as f64
    }

    /// n·log2(8√n), with the n = 0 term taken as 0.
    fn log2_cube_factor(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            let n = self.n as f64;
            n * (8.0 * n.sqrt()).log2()
        }
    }
}

/// Derived constants, all logarithms base 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "L_log2")]
    pub log2_l: f64,
    #[serde(rename = "B1_log2")]
    pub log2_b1: f64,
    #[serde(rename = "B2")]
    pub b2: f64,
    #[serde(rename = "B3")]
    pub b3: f64,
    #[serde(rename = "C_log2")]
    pub log2_c: f64,
    #[serde(rename = "Q")]
    pub q_exp: f64,
    pub lambda_log2: f64,
}

impl Constants {
    /// The two exponents of the final sandwich: lower 2Q and upper 1/(4Q).
    pub fn holder_exponents(&self) -> (f64, f64) {
        (2.0 * self.q_exp, 1.0 / (4.0 * self.q_exp))
    }
}

/// L = 128 (n+1)^2 / sigma^2 and the remaining constants of the closed form.
pub fn compute_constants(params: &ScheduleParams) -> Result<Constants, ScheduleError> {
    params.validate()?;
    let n = params.n as f64;
    let gap = params.gap();
    let l = 128.0 * (n + 1.0) * (n + 1.0) / (params.sigma * params.sigma);
    let log2_l = l.log2();
    let log2_n = (params.big_n as f64).log2();
    let log2_two_over_sigma = 1.0 - params.sigma.log2();
    let log2_b1 = params.log2_cube_factor() / gap;
    let b2 = (n + 2.0) / gap * log2_two_over_sigma;
    let b3 = (n + 2.0) / gap * log2_l;
    let q_exp = (n + 2.0) / gap * log2_n;
    let log2_c = 3.0 + (params.log2_cube_factor() + (n + 2.0) * log2_n * log2_two_over_sigma) / gap;
    let lower = 4.5f64.log2() + log2_c / (2.0 * q_exp);
    let upper = (2.0 * (2.0 * (n + 1.0)).sqrt()).log2() + log2_c;
    Ok(Constants { l, log2_l, log2_b1, b2, b3, log2_c, q_exp, lambda_log2: lower.max(upper) })
}

/// log2 ε_{i+1} from log2 δ_i via the defining recurrence.
pub fn next_epsilon(params: &ScheduleParams, log2_delta_i: f64) -> f64 {
    let n = params.n as f64;
    let log2_n = (params.big_n as f64).log2();
    let log2_ratio = (1.0 - params.sigma.log2()) - log2_delta_i;
    -(3.0 + (params.log2_cube_factor() + (n + 2.0) * log2_n * log2_ratio) / params.gap())
}

/// log2 ε_{i+1} from log2 ε_i via the closed form in B1, B2, B3 and Q.
pub fn closed_form_next_epsilon(c: &Constants, params: &ScheduleParams, i: usize, log2_eps_i: f64) -> f64 {
    let log2_n = (params.big_n as f64).log2();
    -3.0 - c.log2_b1 - c.b2 * log2_n - (i as f64) * c.b3 * log2_n + c.q_exp * log2_eps_i
}

/// log2 δ_{i+1} = log2 δ_i - log2 ε_i + log2 ε_{i+1} - log2 L.
pub fn next_delta(log2_l: f64, log2_delta_i: f64, log2_eps_i: f64, log2_eps_next: f64) -> f64 {
    log2_delta_i - log2_eps_i + log2_eps_next - log2_l
}

/// Smallest power of two `N >= max(n_floor, 2)` making C >= 1, Q >= 1 and B1·N^B2 >= L.
pub fn choose_n(n: u32, q: f64, sigma: f64, n_floor: u64) -> Result<u64, ScheduleError> {
    let start = n_floor.max(2).next_power_of_two();
    let mut cand = start;
    loop {
        let params = ScheduleParams::new(n, q, sigma, cand)?;
        let c = compute_constants(&params)?;
        let log2_n = (cand as f64).log2();
        if admissible(&c, log2_n) {
            return Ok(cand);
        }
        cand = cand.checked_mul(2).filter(|&v| v <= 1u64 << 62).ok_or(ScheduleError::NoAdmissibleN)?;
    }
}

fn admissible(c: &Constants, log2_n: f64) -> bool {
    c.log2_c >= 0.0 && c.q_exp >= 1.0 && c.log2_b1 + c.b2 * log2_n >= c.log2_l
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    Exact,
    Relaxed,
}

impl ScheduleMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScheduleMode::Exact => "exact",
            ScheduleMode::Relaxed => "relaxed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxedInfo {
    pub l_user: f64,
    pub ratio: f64,
}

/// Log-domain values with the linear value attached only when it is representable.
pub const LINEAR_LOG2_LIMIT: f64 = 900.0;

/// The schedule. Arrays are indexed by stage: `log2_eps[i]` is ε_i with ε_0 = δ_0 = 1.
/// `log2_eta[j]` is η_j = 8 ε_{j+1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub mode: ScheduleMode,
    pub params: ScheduleParams,
    pub constants: Constants,
    /// The L used in the δ recurrence (the schedule constant, or the user's L in relaxed mode).
    pub recurrence_l_log2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxed: Option<RelaxedInfo>,
    pub stages: usize,
    pub log2_eps: Vec<f64>,
    pub log2_delta: Vec<f64>,
    pub log2_eta: Vec<f64>,
}

fn linear(v: f64) -> Option<f64> {
    (v.abs() <= LINEAR_LOG2_LIMIT).then(|| v.exp2())
}

impl ScaleSchedule {
    pub fn eps(&self, i: usize) -> Option<f64> {
        self.log2_eps.get(i).copied().and_then(linear)
    }

    pub fn delta(&self, i: usize) -> Option<f64> {
        self.log2_delta.get(i).copied().and_then(linear)
    }

    pub fn eta(&self, i: usize) -> Option<f64> {
        self.log2_eta.get(i).copied().and_then(linear)
    }

    pub fn lambda(&self) -> Option<f64> {
        linear(self.constants.lambda_log2)
    }

    /// Number of ε entries (stages + 2).
    pub fn horizon(&self) -> usize {
        self.log2_eps.len()
    }

    /// Same schedule recomputed for more stages.
    pub fn extended(&self, stages: usize) -> Self {
        if stages <= self.stages {
            return self.clone();
        }
        match (self.mode, self.relaxed) {
            (ScheduleMode::Relaxed, Some(r)) => relaxed_schedule(&self.params, r.l_user, r.ratio, stages).expect("already validated"),
            // Hand-built sequences cannot be continued.
            (ScheduleMode::Relaxed, None) => self.clone(),
            (ScheduleMode::Exact, _) => exact_schedule(&self.params, stages).expect("already validated"),
        }
    }

    /// Largest `i` in the stored horizon with `log2 d <= log2 δ_i`.
    pub fn scale_index(&self, log2_d: f64) -> usize {
        let mut idx = 0;
        for (i, &ld) in self.log2_delta.iter().enumerate() {
            if log2_d <= ld {
                idx = i;
            }
        }
        idx
    }
}

fn fill_eta(log2_eps: &[f64]) -> Vec<f64> {
    log2_eps.iter().skip(1).map(|e| 3.0 + e).collect()
}

/// Exact schedule for `stages` stages (ε and δ are stored through stage `stages + 1`).
pub fn exact_schedule(params: &ScheduleParams, stages: usize) -> Result<ScaleSchedule, ScheduleError> {
    let constants = compute_constants(params)?;
    let log2_n = (params.big_n as f64).log2();
    if !admissible(&constants, log2_n) {
        return Err(ScheduleError::ConstantsOutOfRange(format!(
            "N = {} does not give C >= 1, Q >= 1 and B1 N^B2 >= L; use choose_n",
            params.big_n
        )));
    }
    let len = stages + 2;
    let (mut eps, mut delta) = (vec![0.0f64], vec![0.0f64]);
    for i in 0..len - 1 {
        let e = next_epsilon(params, delta[i]);
        let d = next_delta(constants.log2_l, delta[i], eps[i], e);
        eps.push(e);
        delta.push(d);
    }
    let log2_eta = fill_eta(&eps);
    Ok(ScaleSchedule {
        mode: ScheduleMode::Exact,
        params: *params,
        constants,
        recurrence_l_log2: constants.log2_l,
        relaxed: None,
        stages,
        log2_eps: eps,
        log2_delta: delta,
        log2_eta,
    })
}

/// Relaxed schedule with ε_i = ratio^i and δ from the same recurrence using `l_user`.
/// Requires `1/C <= ratio <= min(1/l_user, 1/(8 sqrt(2(n+1))))` and `l_user >= L`.
pub fn relaxed_schedule(params: &ScheduleParams, l_user: f64, ratio: f64, stages: usize) -> Result<ScaleSchedule, ScheduleError> {
    let constants = compute_constants(params)?;
    if !(l_user.is_finite() && l_user >= constants.l) {
        return Err(ScheduleError::InvalidRelaxed(format!("L_user = {l_user} must be at least L = {}", constants.l)));
    }
    let cap = 1.0 / (8.0 * (2.0 * (params.n as f64 + 1.0)).sqrt());
    if !(ratio > 0.0 && ratio <= 1.0 / l_user && ratio <= cap) {
        return Err(ScheduleError::InvalidRelaxed(format!("ratio = {ratio} must lie in (0, min(1/L_user, {cap})]")));
    }
    let log2_r = ratio.log2();
    // Keeps the first relaxed scale no finer than the exact ε_1 = 1/C, which the
    // root bound between consecutive scales needs at stage 0.
    if log2_r + constants.log2_c < 0.0 {
        return Err(ScheduleError::InvalidRelaxed(format!("ratio = {ratio} is below 1/C = 2^{}", -constants.log2_c)));
    }
    let log2_l = l_user.log2();
    let len = stages + 2;
    let eps: Vec<f64> = (0..len).map(|i| i as f64 * log2_r).collect();
    let mut delta = vec![0.0f64];
    for i in 0..len - 1 {
        let d = next_delta(log2_l, delta[i], eps[i], eps[i + 1]);
        delta.push(d);
    }
    let log2_eta = fill_eta(&eps);
    Ok(ScaleSchedule {
        mode: ScheduleMode::Relaxed,
        params: *params,
        constants,
        recurrence_l_log2: log2_l,
        relaxed: Some(RelaxedInfo { l_user, ratio }),
        stages,
        log2_eps: eps,
        log2_delta: delta,
        log2_eta,
    })
}

/// Hand-specified scales, labeled relaxed and never extended. Meant for
/// exercising single stages at coarse scales; the constants still come from `params`.
pub fn custom_schedule(params: &ScheduleParams, log2_eps: Vec<f64>, log2_delta: Vec<f64>) -> Result<ScaleSchedule, ScheduleError> {
    let constants = compute_constants(params)?;
    if log2_eps.len() != log2_delta.len() || log2_eps.len() < 2 {
        return Err(ScheduleError::InvalidRelaxed("ε and δ sequences need equal length of at least 2".into()));
    }
    if log2_eps[0] != 0.0 || log2_delta[0] != 0.0 || log2_eps.iter().chain(&log2_delta).any(|v| !v.is_finite()) {
        return Err(ScheduleError::InvalidRelaxed("sequences must start at log2 = 0 and stay finite".into()));
    }
    let stages = log2_eps.len() - 2;
    let log2_eta = fill_eta(&log2_eps);
    Ok(ScaleSchedule {
        mode: ScheduleMode::Relaxed,
        params: *params,
        constants,
        recurrence_l_log2: constants.log2_l,
        relaxed: None,
        stages,
        log2_eps,
        log2_delta,
        log2_eta,
    })
}

/// Relative comparison used for log-domain identities.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub holds: bool,
    /// Worst violation margin in log2 units (negative or zero when the check holds).
    pub worst: f64,
    pub worst_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub checks: Vec<InvariantCheck>,
}

impl InvariantReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn get(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Tolerance for log-domain identities.
pub const LOG_TOLERANCE: f64 = 1e-12;

struct Tally {
    name: &'static str,
    worst: f64,
    idx: usize,
    holds: bool,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, worst: f64::NEG_INFINITY, idx: 0, holds: true }
    }

    /// Records an inequality `lhs <= rhs` in log2 units.
    fn le(&mut self, i: usize, lhs: f64, rhs: f64) {
        let margin = lhs - rhs;
        if margin > self.worst {
            self.worst = margin;
            self.idx = i;
        }
        if margin > LOG_TOLERANCE * lhs.abs().max(rhs.abs()).max(1.0) {
            self.holds = false;
        }
    }

    /// Records an identity `lhs == rhs` in log2 units.
    fn eq(&mut self, i: usize, lhs: f64, rhs: f64) {
        let margin = (lhs - rhs).abs();
        if margin > self.worst {
            self.worst = margin;
            self.idx = i;
        }
        if !rel_close(lhs, rhs, LOG_TOLERANCE) {
            self.holds = false;
        }
    }

    fn finish(self) -> InvariantCheck {
        InvariantCheck { name: self.name.to_string(), holds: self.holds, worst: if self.worst.is_finite() { self.worst } else { 0.0 }, worst_index: self.idx }
    }
}

/// Checks the structural identities and inequalities of a schedule.
///
/// The five core checks apply to both modes; exact schedules also compare the
/// recurrence against the closed form and check ε_1·C = 1.
pub fn verify_invariants(s: &ScaleSchedule) -> InvariantReport {
    let c = &s.constants;
    let mut delta_identity = Tally::new("delta_identity");
    let mut ratio = Tally::new("ratio_bound");
    let mut decay = Tally::new("eps_decay");
    let mut cauchy_gap = Tally::new("eps_root_bound");
    let mut eta = Tally::new("eta_definition");
    let mut init = Tally::new("initial_scales");
    init.eq(0, s.log2_eps[0], 0.0);
    init.eq(0, s.log2_delta[0], 0.0);
    let l = s.recurrence_l_log2;
    for i in 0..s.log2_eps.len() {
        delta_identity.eq(i, s.log2_delta[i], -(i as f64) * l + s.log2_eps[i]);
        decay.le(i, s.log2_eps[i], -(i as f64) * c.log2_l);
        if i + 1 < s.log2_eps.len() {
            ratio.le(i, s.log2_eps[i + 1] - s.log2_eps[i], -c.log2_l);
            cauchy_gap.le(i, s.log2_eps[i], (c.log2_c + s.log2_eps[i + 1]) / (2.0 * c.q_exp));
            eta.eq(i, s.log2_eta[i], 3.0 + s.log2_eps[i + 1]);
        }
    }
    let mut checks = vec![init.finish(), delta_identity.finish(), ratio.finish(), decay.finish(), cauchy_gap.finish(), eta.finish()];
    if s.mode == ScheduleMode::Exact {
        let mut closed = Tally::new("closed_form");
        for i in 0..s.log2_eps.len() - 1 {
            closed.eq(i, s.log2_eps[i + 1], closed_form_next_epsilon(c, &s.params, i, s.log2_eps[i]));
        }
        checks.push(closed.finish());
        let first = s.log2_eps[1] + c.log2_c;
        checks.push(InvariantCheck { name: "eps1_times_c".into(), holds: first == 0.0, worst: first.abs(), worst_index: 1 });
    }
    InvariantReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn preset() -> ScheduleParams {
        ScheduleParams::new(0, 1.0, 0.5, 8).unwrap()
    }

    #[test]
    fn two_point_preset_values() {
        let s = exact_schedule(&preset(), 3).unwrap();
        assert_eq!(s.constants.l, 512.0);
        assert_eq!(s.log2_eps[1], -15.0);
        assert_eq!(s.log2_delta[1], -24.0);
        assert_eq!(s.log2_eps[2], -159.0);
        assert_eq!(s.constants.q_exp, 6.0);
        // λ = 2√2 · 2^15
        let expect = (2.0 * 2f64.sqrt() * 32768.0).log2();
        assert!((s.constants.lambda_log2 - expect).abs() < 1e-12);
        assert_eq!(s.constants.holder_exponents(), (12.0, 1.0 / 24.0));
        assert!(verify_invariants(&s).all_hold());
    }

    #[test]
    fn choose_n_presets() {
        assert_eq!(choose_n(0, 1.0, 0.5, 2).unwrap(), 8);
        assert_eq!(choose_n(1, 2.0, 0.5, 2).unwrap(), 4);
        assert_eq!(choose_n(0, 0.5, 0.25, 2).unwrap(), 2);
        assert_eq!(choose_n(0, 1.0, 0.5, 9).unwrap(), 16);
    }

    #[test]
    fn dimension_one_constants() {
        let p = ScheduleParams::new(1, 2.0, 0.5, 4).unwrap();
        let c = compute_constants(&p).unwrap();
        assert_eq!(c.l, 2048.0);
        assert_eq!(c.log2_b1, 3.0);
        assert_eq!(c.b2, 6.0);
        assert!(c.log2_b1 + c.b2 * 2.0 >= c.log2_l);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ScheduleParams::new(1, 1.0, 0.5, 4).is_err());
        assert!(ScheduleParams::new(0, 1.0, 1.5, 4).is_err());
        assert!(ScheduleParams::new(0, 1.0, 0.5, 1).is_err());
        assert!(matches!(exact_schedule(&ScheduleParams::new(0, 1.0, 0.5, 2).unwrap(), 2), Err(ScheduleError::ConstantsOutOfRange(_))));
    }

    #[test]
    fn relaxed_cantor_preset() {
        let s = relaxed_schedule(&preset(), 512.0, 1.0 / 512.0, 4).unwrap();
        assert_eq!(s.log2_eps[3], -27.0);
        assert_eq!(s.log2_delta[2], -36.0);
        assert!(verify_invariants(&s).all_hold());
        assert!(relaxed_schedule(&preset(), 100.0, 0.001, 4).is_err());
        assert!(relaxed_schedule(&preset(), 512.0, 0.01, 4).is_err());
    }

    #[test]
    fn linear_values_only_when_representable() {
        let s = exact_schedule(&preset(), 4).unwrap();
        assert_eq!(s.eps(1), Some(2f64.powi(-15)));
        assert!(s.log2_eps[3] < -900.0);
        assert_eq!(s.eps(3), None);
    }

    #[test]
    fn extension_keeps_prefix() {
        let s = exact_schedule(&preset(), 2).unwrap();
        let t = s.extended(6);
        assert_eq!(&t.log2_eps[..s.log2_eps.len()], &s.log2_eps[..]);
        assert_eq!(t.stages, 6);
    }

    proptest! {
        #[test]
        fn exact_invariants_hold(n in 0u32..3, extra in 0.1f64..3.0, sigma in 0.05f64..0.95, stages in 1usize..40) {
            let q = n as f64 + extra;
            let big_n = choose_n(n, q, sigma, 2).unwrap();
            let s = exact_schedule(&ScheduleParams::new(n, q, sigma, big_n).unwrap(), stages).unwrap();
            let report = verify_invariants(&s);
            prop_assert!(report.all_hold(), "{:?}", report);
        }

        #[test]
        fn relaxed_invariants_hold(n in 0u32..3, sigma in 0.05f64..0.95, boost in 1.0f64..4.0, shrink in 1.0f64..8.0, stages in 1usize..30) {
            let q = n as f64 + 1.0;
            let big_n = choose_n(n, q, sigma, 2).unwrap();
            let p = ScheduleParams::new(n, q, sigma, big_n).unwrap();
            let l = compute_constants(&p).unwrap().l * boost;
            let s = relaxed_schedule(&p, l, 1.0 / (l * shrink), stages);
            prop_assume!(s.is_ok());
            prop_assert!(verify_invariants(&s.unwrap()).all_hold());
        }

        #[test]
        fn choose_n_is_minimal(n in 0u32..3, extra in 0.2f64..3.0, sigma in 0.05f64..0.95) {
            let q = n as f64 + extra;
            let big_n = choose_n(n, q, sigma, 2).unwrap();
            if big_n > 2 {
                let smaller = ScheduleParams::new(n, q, sigma, big_n / 2).unwrap();
                prop_assert!(exact_schedule(&smaller, 1).is_err());
            }
        }
    }
}
