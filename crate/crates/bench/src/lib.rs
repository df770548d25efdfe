//! Fixed workloads shared by the benchmarks.

use holdim::embedding::{run_construction, Construction, CoverSource, RunConfig};
use holdim::metric::{build_cantor, build_line, CantorSpec, Exact, FiniteMetricSpace};
use holdim::schedule::{exact_schedule, relaxed_schedule, ScheduleParams};

pub fn params() -> ScheduleParams {
    ScheduleParams::new(0, 1.0, 0.5, 8).expect("valid preset")
}

pub fn cantor(levels: u32) -> FiniteMetricSpace {
    build_cantor(&CantorSpec::middle_third(levels)).expect("cantor sample")
}

/// Six points in exact arithmetic.
pub fn six_points() -> FiniteMetricSpace {
    let pts = [(0, 1), (1, 7), (2, 7), (1, 2), (5, 6), (1, 1)].iter().map(|&(a, b)| Exact::new(a, b).0).collect();
    build_line(pts, "six").and_then(|s| s.normalize()).expect("line")
}

pub fn exact_run(space: &FiniteMetricSpace) -> Construction {
    let mut cfg = RunConfig::new(3, CoverSource::Structured);
    cfg.stop_on_stabilization = true;
    run_construction(space, &exact_schedule(&params(), 3).expect("schedule"), &cfg).expect("construction")
}

pub fn relaxed_run(space: &FiniteMetricSpace, stages: usize) -> Construction {
    let sched = relaxed_schedule(&params(), 512.0, 1.0 / 512.0, stages).expect("schedule");
    run_construction(space, &sched, &RunConfig::new(stages, CoverSource::Structured)).expect("construction")
}
