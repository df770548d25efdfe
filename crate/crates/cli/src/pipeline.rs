use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use holdim::cover::{build_greedy_cover, build_structured_cover, size_controlled_refine, verify_cover, ColoredCover, CoverScale};
use holdim::dimension::{
    box_dimension_with_measure, capacity_refuter, estimate_nu, fastgap_certificate, geometric_scales, hypercurve_certificate, hypercurve_sampled_check,
    identity_candidate, projection_surjectivity_check, snowflake, triadic_scales, DimensionReport,
};
use holdim::embedding::{run_construction, Construction, CoverSource, EmbeddingStage, RunConfig, StageDump, StopReason};
use holdim::metric::{
    build_cantor, build_cube_grid, build_harmonic, build_line, build_product_grid, build_random, doubling_estimate, dyadic_scales, CantorSpec, Exact,
    FiniteMetricSpace, GapRule, SpaceDump,
};
use holdim::schedule::{choose_n, exact_schedule, relaxed_schedule, verify_invariants, ScaleSchedule, ScheduleParams};
use holdim::verify::{verify_construction, Precision, Status, VerificationReport, VerifyConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::output::{envelope, load, write_file, CliError, RunOutput, Table};
use crate::{
    Cli, Command, CounterexampleArgs, CoverArgs, CoverMode, CoversArg, DemoArgs, DimsArgs, EmbedArgs, Format, ModeArg, Preset, PrecisionArg, ScheduleArgs,
    SpaceArgs, SpaceKind, VerifyArgs, Which,
};

/// What a subcommand computed, before it is written out.
struct Done {
    result: Value,
    table: Table,
    pass: bool,
    failures: Vec<String>,
    summary: Vec<(String, String)>,
    /// Files already written (directory outputs).
    artifacts: Vec<PathBuf>,
    /// Directory outputs keep `--out` for the artifacts; the result goes to stdout.
    wrote_dir: bool,
}

impl Done {
    fn new(result: Value, table: Table, pass: bool) -> Self {
        Done { result, table, pass, failures: Vec::new(), summary: Vec::new(), artifacts: Vec::new(), wrote_dir: false }
    }

    fn row(mut self, k: &str, v: impl ToString) -> Self {
        self.summary.push((k.to_string(), v.to_string()));
        self
    }
}

/// Runs one subcommand inside a thread pool capped by `--threads`.
pub fn run_pipeline(cli: &Cli) -> Result<RunOutput, CliError> {
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build().map_err(CliError::usage)?;
    let done = pool.install(|| match &cli.command {
        Command::Space(a) => space(cli, a),
        Command::Cover(a) => cover(a),
        Command::Schedule(a) => schedule(a),
        Command::Embed(a) => embed(cli, a),
        Command::Verify(a) => verify(cli, a),
        Command::Dims(a) => dims(a),
        Command::Counterexample(a) => counterexample(cli, a),
        Command::Demo(a) => demo(cli, a),
    })?;
    finish(cli, done)
}

fn finish(cli: &Cli, done: Done) -> Result<RunOutput, CliError> {
    let bytes = match cli.format {
        Format::Json => envelope(cli, &done.result)?,
        Format::Csv => done.table.to_csv()?,
    };
    let mut artifacts = done.artifacts;
    let stdout = match (&cli.out, done.wrote_dir) {
        (Some(path), false) => {
            write_file(path, &bytes)?;
            artifacts.push(path.clone());
            None
        }
        _ => Some(bytes),
    };
    Ok(RunOutput { command: cli.command_name(), pass: done.pass, failures: done.failures, summary: done.summary, stdout, artifacts })
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::usage(e)
}

fn to_value(v: &impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(usage)
}

fn parse_gaps(s: &str) -> Result<GapRule, CliError> {
    match s {
        "third" => Ok(GapRule::middle_third()),
        "fastgap" => Ok(GapRule::FastGap),
        _ => {
            if let Some(r) = s.strip_prefix("ratio:") {
                return Ok(GapRule::Ratio { ratio: r.parse().map_err(usage)? });
            }
            if let Some(file) = s.strip_prefix("custom:") {
                let gaps: Vec<Vec<Exact>> = load(Path::new(file), Some("gaps"))?;
                return Ok(GapRule::Custom { gaps });
            }
            Err(CliError::Usage(format!("unknown gap rule {s:?}; expected third, fastgap, ratio:<p/q> or custom:<file>")))
        }
    }
}

fn build_space(a: &SpaceArgs, seed: u64) -> Result<FiniteMetricSpace, CliError> {
    let cantor = || parse_gaps(&a.gaps).map(|gaps| CantorSpec { gaps, levels: a.levels });
    let s = match a.kind {
        SpaceKind::Cantor => build_cantor(&cantor()?),
        SpaceKind::Product => build_product_grid(&cantor()?, a.n, a.grid_res),
        SpaceKind::Cube => build_cube_grid(a.n, a.grid_res),
        SpaceKind::Harmonic => build_harmonic(a.m),
        SpaceKind::Random => build_random(a.count, a.dim, seed),
        SpaceKind::Line => {
            let raw = a.points.as_deref().ok_or_else(|| CliError::Usage("--kind line needs --points".into()))?;
            let pts = raw.split(',').map(|p| p.parse::<Exact>().map(|e| e.0)).collect::<Result<Vec<_>, _>>().map_err(usage)?;
            build_line(pts, "line")
        }
    }
    .and_then(|s| s.normalize())
    .map_err(usage)?;
    match a.power {
        Some(p) => s.powered(p).map_err(usage),
        None => Ok(s),
    }
}

fn load_space(path: &Path) -> Result<FiniteMetricSpace, CliError> {
    let dump: SpaceDump = load(path, None)?;
    FiniteMetricSpace::from_dump(dump).map_err(|e| CliError::io(path, e))
}

fn space(cli: &Cli, a: &SpaceArgs) -> Result<Done, CliError> {
    let s = build_space(a, cli.seed)?;
    let dump = s.to_dump();
    let mut table = Table::new(&["id"]);
    if let Some(coords) = &dump.coords {
        let d = coords.first().map_or(0, Vec::len);
        table = Table { headers: std::iter::once("id".to_string()).chain((0..d).map(|k| format!("x{k}"))).collect(), rows: Vec::new() };
        for (i, c) in coords.iter().enumerate() {
            table.push(std::iter::once(i.to_string()).chain(c.iter().map(|v| v.to_string())).collect());
        }
    } else {
        for i in 0..s.len() {
            table.push(vec![i.to_string()]);
        }
    }
    Ok(Done::new(to_value(&dump)?, table, true).row("points", s.len()).row("diameter", s.diameter()).row("exact", s.has_exact()))
}

fn cover(a: &CoverArgs) -> Result<Done, CliError> {
    let s = load_space(&a.space)?;
    let structured = || build_structured_cover(&s, CoverScale::Delta(a.delta), a.sigma);
    let (cover, refine): (ColoredCover, Option<Value>) = match a.mode {
        CoverMode::Greedy => (build_greedy_cover(&s, a.delta, a.sigma).map_err(usage)?, None),
        CoverMode::Structured => (structured().map_err(usage)?, None),
        CoverMode::Refine => {
            let base = match structured() {
                Ok(c) => c,
                Err(_) => build_greedy_cover(&s, a.delta, a.sigma).map_err(usage)?,
            };
            let out = size_controlled_refine(&s, &base, a.big_n).map_err(usage)?;
            let info = json!({
                "baseSets": base.len(),
                "netSize": out.net_size,
                "netExponent": out.net_exponent,
                "netBoundHolds": out.net_bound_holds,
                "boundLog2": out.bound_log2,
                "boundHolds": out.bound_holds,
            });
            (out.cover, Some(info))
        }
    };
    let report = verify_cover(&s, &cover);
    let mut failures = Vec::new();
    if !report.is_valid() {
        failures.push("cover report".to_string());
    }
    if !cover.is_certified() {
        failures.push(format!("certificates miss the targets: mesh {} lebesgue {}", cover.certs.mesh, cover.certs.lebesgue));
    }
    if let Some(r) = &refine {
        if r["boundHolds"] != true || r["netBoundHolds"] != true {
            failures.push("refinement size bound".to_string());
        }
    }
    let mut table = Table::new(&["set", "color", "anchor", "size"]);
    for (k, set) in cover.sets.iter().enumerate() {
        table.push(vec![k.to_string(), set.color.to_string(), set.anchor.to_string(), set.members.len().to_string()]);
    }
    let certs = cover.certs.clone();
    let result = json!({ "cover": cover, "report": report, "certified": cover.is_certified(), "refine": refine });
    let mut d = Done::new(result, table, failures.is_empty())
        .row("sets", cover.len())
        .row("mesh", certs.mesh)
        .row("lebesgue", certs.lebesgue)
        .row("multiplicity", certs.multiplicity)
        .row("colors", certs.color_count);
    d.failures = failures;
    Ok(d)
}

fn schedule(a: &ScheduleArgs) -> Result<Done, CliError> {
    let auto = a.big_n == "auto";
    let big_n = if auto {
        choose_n(a.n, a.q, a.sigma, 2).map_err(usage)?
    } else {
        a.big_n.parse::<u64>().map_err(|_| CliError::Usage(format!("--N must be auto or an integer, got {:?}", a.big_n)))?
    };
    let params = ScheduleParams::new(a.n, a.q, a.sigma, big_n).map_err(usage)?;
    let sched = match a.mode {
        ModeArg::Exact => exact_schedule(&params, a.stages),
        ModeArg::Relaxed => relaxed_schedule(&params, a.l_user, a.ratio, a.stages),
    }
    .map_err(usage)?;
    let inv = verify_invariants(&sched);
    let mut table = Table::new(&["i", "log2_eps", "log2_delta", "log2_eta"]);
    for i in 0..sched.log2_eps.len() {
        let eta = sched.log2_eta.get(i).map_or(String::new(), |v| v.to_string());
        table.push(vec![i.to_string(), sched.log2_eps[i].to_string(), sched.log2_delta[i].to_string(), eta]);
    }
    let failures: Vec<String> = inv.checks.iter().filter(|c| !c.holds).map(|c| c.name.clone()).collect();
    let k = &sched.constants;
    let mut d = Done::new(json!({ "schedule": sched, "invariants": inv, "autoN": auto }), table, failures.is_empty())
        .row("N", big_n)
        .row("L", k.l)
        .row("C_log2", k.log2_c)
        .row("Q", k.q_exp)
        .row("lambda_log2", k.lambda_log2)
        .row("invariants", if failures.is_empty() { "hold" } else { "FAIL" });
    d.failures = failures;
    Ok(d)
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    depth: usize,
    stop: StopReason,
    #[serde(rename = "stabilizedAt")]
    stabilized_at: Option<usize>,
    #[serde(rename = "tailBoundLog2")]
    tail_bound_log2: f64,
    space: String,
    schedule: String,
    stages: Vec<String>,
}

/// Writes the space, schedule, stage dumps and manifest of a run into `dir`.
fn write_run(cli: &Cli, dir: &Path, s: &FiniteMetricSpace, c: &Construction) -> Result<(Manifest, Vec<PathBuf>), CliError> {
    let mut written = Vec::new();
    let mut put = |name: &str, v: Value| -> Result<(), CliError> {
        let p = dir.join(name);
        write_file(&p, &envelope(cli, &v)?)?;
        written.push(p);
        Ok(())
    };
    put("space.json", to_value(&s.to_dump())?)?;
    put("schedule.json", json!({ "schedule": c.schedule }))?;
    let mut names = Vec::new();
    for st in &c.stages {
        let name = format!("stage_{:03}.json", st.index);
        put(&name, to_value(&st.to_dump())?)?;
        names.push(name);
    }
    let manifest = Manifest {
        depth: c.depth(),
        stop: c.stop.clone(),
        stabilized_at: c.stabilized_at,
        tail_bound_log2: c.log2_tail_bound(),
        space: "space.json".into(),
        schedule: "schedule.json".into(),
        stages: names,
    };
    put("manifest.json", to_value(&manifest)?)?;
    Ok((manifest, written))
}

fn stage_table(c: &Construction) -> Table {
    let mut t = Table::new(&["i", "m", "sets", "multiplicity", "mesh", "lebesgue", "log2_eps", "log2_delta"]);
    for st in &c.stages {
        let (sets, mesh, leb) = st.cover.as_ref().map_or((String::new(), String::new(), String::new()), |cv| {
            (cv.len().to_string(), cv.certs.mesh.to_string(), cv.certs.lebesgue.to_string())
        });
        t.push(vec![st.index.to_string(), st.coord_count.to_string(), sets, st.multiplicity().to_string(), mesh, leb, st.log2_eps.to_string(), st.log2_delta.to_string()]);
    }
    t
}

fn out_dir(cli: &Cli) -> Result<&Path, CliError> {
    cli.out.as_deref().ok_or_else(|| CliError::Usage(format!("{} writes a directory of artifacts; pass --out <dir>", cli.command_name())))
}

fn embed(cli: &Cli, a: &EmbedArgs) -> Result<Done, CliError> {
    let dir = out_dir(cli)?;
    let s = load_space(&a.space)?;
    let sched: ScaleSchedule = load(&a.schedule, Some("schedule"))?;
    let source = match a.covers {
        CoversArg::Structured => CoverSource::Structured,
        CoversArg::Greedy => CoverSource::Greedy,
    };
    let mut cfg = RunConfig::new(a.stages.unwrap_or(sched.stages), source);
    cfg.stop_on_stabilization = a.stop_on_stabilization;
    let c = run_construction(&s, &sched, &cfg).map_err(usage)?;
    let (manifest, written) = write_run(cli, dir, &s, &c)?;
    let mut d = Done::new(to_value(&manifest)?, stage_table(&c), true)
        .row("depth", c.depth())
        .row("stop", serde_json::to_string(&c.stop).map_err(usage)?)
        .row("stabilized at", c.stabilized_at.map_or("-".to_string(), |v| v.to_string()))
        .row("coordinates", c.last().coord_count)
        .row("tail bound log2", c.log2_tail_bound());
    d.artifacts = written;
    d.wrote_dir = true;
    Ok(d)
}

fn verify_config(lemmas: &str, p: PrecisionArg) -> VerifyConfig {
    let lemmas = (lemmas != "all").then(|| lemmas.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect());
    let precision = match p {
        PrecisionArg::Float64 => Precision::Float64,
        PrecisionArg::Rational => Precision::Rational,
    };
    VerifyConfig { lemmas, precision }
}

fn status_str(s: Status) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn report_table(r: &VerificationReport) -> Table {
    let mut t = Table::new(&["lemma", "status", "worst_slack", "worst_relative_slack", "pairs", "exact"]);
    for l in &r.reports {
        let exact = l.exact.as_ref().and_then(|e| serde_json::to_value(e.outcome).ok()).and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        t.push(vec![l.lemma.clone(), status_str(l.status), l.worst_slack.to_string(), l.worst_relative.to_string(), l.pairs.to_string(), exact]);
    }
    t
}

fn report_done(r: VerificationReport, result: Value) -> Done {
    let table = report_table(&r);
    let failures: Vec<String> = r.failures().map(|l| l.lemma.clone()).collect();
    let mut d = Done::new(result, table, r.all_pass);
    for l in &r.reports {
        d = d.row(&l.lemma, status_str(l.status));
    }
    d.failures = failures;
    d
}

fn verify(cli: &Cli, a: &VerifyArgs) -> Result<Done, CliError> {
    let dir = &a.stages;
    let manifest: Manifest = load(&dir.join("manifest.json"), None)?;
    let s = load_space(&a.space.clone().unwrap_or_else(|| dir.join(&manifest.space)))?;
    let sched: ScaleSchedule = load(&a.schedule.clone().unwrap_or_else(|| dir.join(&manifest.schedule)), Some("schedule"))?;
    let mut stages = Vec::new();
    for name in &manifest.stages {
        let p = dir.join(name);
        let dump: StageDump = load(&p, None)?;
        stages.push(EmbeddingStage::from_dump(dump).map_err(|e| CliError::io(&p, e))?);
    }
    let c = Construction { schedule: sched.extended(manifest.depth + 1), stages, stop: manifest.stop, stabilized_at: manifest.stabilized_at };
    let r = verify_construction(&s, &c, &verify_config(&a.lemmas, cli.precision)).map_err(usage)?;
    let v = to_value(&r)?;
    Ok(report_done(r, v))
}

/// `hi:lo:steps`, `triadic:a:b` or `dyadic:a:b`.
fn parse_scales(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("bad --scales {s:?}; expected hi:lo:steps, triadic:a:b or dyadic:a:b"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    match parts[0] {
        base @ ("triadic" | "dyadic") => {
            let a: i32 = parts[1].parse().map_err(|_| bad())?;
            let b: i32 = parts[2].parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok(if base == "triadic" { triadic_scales(a..=b) } else { (a..=b).map(|k| 2f64.powi(-k)).collect() })
        }
        _ => {
            let hi: f64 = parts[0].parse().map_err(|_| bad())?;
            let lo: f64 = parts[1].parse().map_err(|_| bad())?;
            let steps: usize = parts[2].parse().map_err(|_| bad())?;
            geometric_scales(hi, lo, steps).map_err(usage)
        }
    }
}

fn dimension_table(r: &DimensionReport) -> Table {
    let mut t = Table::new(&["scale", "count", "log_inv_scale", "log_count", "measure"]);
    for (k, (&sc, &n)) in r.scales.iter().zip(&r.counts).enumerate() {
        let m = r.measure_at_scale.as_ref().map_or(String::new(), |m| m[k].to_string());
        t.push(vec![sc.to_string(), n.to_string(), (-sc.ln()).to_string(), (n as f64).ln().to_string(), m]);
    }
    t
}

fn dims(a: &DimsArgs) -> Result<Done, CliError> {
    let mut s = load_space(&a.space)?;
    if let Some(p) = a.snowflake {
        s = snowflake(&s, p).map_err(usage)?;
    }
    let scales = parse_scales(&a.scales)?;
    let r = box_dimension_with_measure(&s, &scales, a.exponent).map_err(usage)?;
    let table = dimension_table(&r);
    let summary = [("method", to_value(&r.method)?.as_str().unwrap_or_default().to_string()), ("slope", r.slope.to_string()), ("residual", r.residual.to_string())];
    let warnings = r.warnings.len();
    let mut d = Done::new(to_value(&r)?, table, true).row("warnings", warnings);
    d.summary.splice(0..0, summary.into_iter().map(|(k, v)| (k.to_string(), v)));
    Ok(d)
}

/// `key=value` pairs; every key must be consumed.
struct Params(BTreeMap<String, String>);

impl Params {
    fn parse(s: &str) -> Result<Self, CliError> {
        let mut m = BTreeMap::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| CliError::Usage(format!("parameter {item:?} is not key=value")))?;
            m.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Params(m))
    }

    fn get<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, CliError> {
        match self.0.remove(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| CliError::Usage(format!("parameter {key}={v} is not valid"))),
        }
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn finish(self) -> Result<(), CliError> {
        match self.0.keys().next() {
            Some(k) => Err(CliError::Usage(format!("unknown parameter {k:?}"))),
            None => Ok(()),
        }
    }
}

fn counterexample(cli: &Cli, a: &CounterexampleArgs) -> Result<Done, CliError> {
    let mut p = Params::parse(&a.params)?;
    let (result, pass, mut summary): (Value, bool, Vec<(String, String)>) = match a.which {
        Which::Fastgap => {
            let levels = p.get("levels", 6u32)?;
            let (alpha, beta, lambda) = (p.get("alpha", 1.0f64)?, p.get("beta", 1.0f64)?, p.get("lambda", 1.0f64)?);
            p.finish()?;
            let c = fastgap_certificate(levels, alpha, beta, lambda).map_err(usage)?;
            let rows = vec![
                ("gap sum upper".to_string(), c.gap_sum.upper.to_string()),
                ("threshold k".to_string(), c.threshold.k.to_string()),
                ("image measure >=".to_string(), c.threshold.image_measure_lower.to_string()),
            ];
            (to_value(&c)?, c.holds, rows)
        }
        Which::Harmonic => {
            let sigma = p.get("sigma", 0.5f64)?;
            let n = if sigma > 0.0 && sigma < 1.0 { (2.0 / sigma).max(2.0).ceil() as usize + 1 } else { 2 };
            let m = p.get("m", 2 * n * (n - 1))?;
            p.finish()?;
            let r = capacity_refuter(sigma, m).map_err(usage)?;
            let rows = vec![
                ("n".to_string(), r.n.to_string()),
                ("delta".to_string(), r.delta.to_string()),
                ("merged diameter".to_string(), r.merged_diameter.to_string()),
            ];
            (to_value(&r)?, r.holds, rows)
        }
        Which::Hypercurve => {
            let lambda = p.get("lambda", 1.0f64)?;
            let alpha = p.get("alpha", 1.0f64)?;
            let n = p.get("n", 1u32)?;
            let nu_levels = p.get("nu_levels", 8u32)?;
            let check = p.get("check", true)?;
            let levels = p.get("levels", if n == 1 { 5u32 } else { 3 })?;
            let res = p.get("res", match n {
                1 => 243usize,
                2 => 27,
                _ => 9,
            })?;
            let pairs = p.get("pairs", 200_000usize)?;
            let nu_raw = p.take("nu");
            p.finish()?;
            let nu_est = estimate_nu(nu_levels).map_err(usage)?;
            let nu = match nu_raw.as_deref() {
                None | Some("auto") => nu_est.value,
                Some(v) => v.parse().map_err(|_| CliError::Usage(format!("parameter nu={v} is not valid")))?,
            };
            let cert = hypercurve_certificate(lambda, alpha, n, nu).map_err(usage)?;
            let mut pass = cert.lower_bound > n as f64;
            let mut out = json!({ "certificate": cert, "nuEstimate": nu_est });
            let mut rows = vec![("lower bound".to_string(), cert.lower_bound.to_string()), ("B/A".to_string(), cert.b_over_a.to_string())];
            if check {
                let s = build_product_grid(&CantorSpec::middle_third(levels), n, res).map_err(usage)?;
                let img = identity_candidate(&s).map_err(usage)?;
                let proj = projection_surjectivity_check(&s, &img, lambda, None, pairs, cli.seed).map_err(usage)?;
                let scales: Vec<f64> = (1..=4).map(|k| ((n + 1) as f64).sqrt() * 3f64.powi(-k)).collect();
                let sampled = hypercurve_sampled_check(&s, &cert, &scales).map_err(usage)?;
                pass &= proj.holds && sampled.holds;
                rows.push(("projection".to_string(), if proj.holds { "holds" } else { "FAIL" }.to_string()));
                rows.push(("sampled measure".to_string(), if sampled.holds { "holds" } else { "FAIL" }.to_string()));
                out["projection"] = to_value(&proj)?;
                out["sampledMeasure"] = to_value(&sampled)?;
            }
            (out, pass, rows)
        }
    };
    let table = Table::flattened(&result);
    summary.insert(0, ("holds".to_string(), pass.to_string()));
    let mut d = Done::new(result, table, pass);
    d.summary = summary;
    if !pass {
        d.failures.push(format!("{:?} certificate does not hold", a.which).to_lowercase());
    }
    Ok(d)
}

fn demo(cli: &Cli, a: &DemoArgs) -> Result<Done, CliError> {
    let (s, doubling) = match a.preset {
        Preset::TwoPoint => {
            let s = build_line(vec![Exact::zero().0, Exact::one().0], "two-point").and_then(|s| s.normalize()).map_err(usage)?;
            let d = doubling_estimate(&s, &dyadic_scales(4));
            (s, d)
        }
        Preset::CantorRelaxed => {
            let s = build_cantor(&CantorSpec::middle_third(4)).map_err(usage)?;
            let d = doubling_estimate(&s, &dyadic_scales(6));
            (s, d)
        }
    };
    let (big_n, sched, cfg, scales) = match a.preset {
        Preset::TwoPoint => {
            let big_n = choose_n(0, 1.0, 0.5, doubling.n_hat as u64).map_err(usage)?;
            let sched = exact_schedule(&ScheduleParams::new(0, 1.0, 0.5, big_n).map_err(usage)?, 3).map_err(usage)?;
            let mut cfg = RunConfig::new(3, CoverSource::Structured);
            cfg.stop_on_stabilization = true;
            (big_n, sched, cfg, geometric_scales(1.0, 0.125, 4).map_err(usage)?)
        }
        Preset::CantorRelaxed => {
            // Relaxed ratios decouple N from the constants, so only the doubling floor matters.
            let big_n = (doubling.n_hat as u64).next_power_of_two().max(8);
            let sched = relaxed_schedule(&ScheduleParams::new(0, 1.0, 0.5, big_n).map_err(usage)?, 512.0, 1.0 / 512.0, 3).map_err(usage)?;
            (big_n, sched, RunConfig::new(3, CoverSource::Structured), triadic_scales(1..=4))
        }
    };
    let c = run_construction(&s, &sched, &cfg).map_err(usage)?;
    let report = verify_construction(&s, &c, &verify_config("all", cli.precision)).map_err(usage)?;
    let dim = box_dimension_with_measure(&s, &scales, None).map_err(usage)?;
    let status = |id: &str| report.get(id).map(|r| status_str(r.status)).unwrap_or_default();
    let result = json!({
        "preset": a.preset,
        "points": s.len(),
        "doubling": doubling,
        "N": big_n,
        "mode": sched.mode,
        "depth": c.depth(),
        "stop": c.stop,
        "stabilizedAt": c.stabilized_at,
        "biholder": status("biholder"),
        "qmeasure": status("qmeasure"),
        "verification": report,
        "dimension": dim,
    });
    let mut artifacts = Vec::new();
    let wrote_dir = cli.out.is_some();
    if let Some(dir) = &cli.out {
        let (_, written) = write_run(cli, dir, &s, &c)?;
        artifacts = written;
        for (name, v) in [("verification.json", &result["verification"]), ("dimension.json", &result["dimension"])] {
            let p = dir.join(name);
            write_file(&p, &envelope(cli, v)?)?;
            artifacts.push(p);
        }
    }
    let mut d = report_done(report, result);
    d.summary.splice(0..0, [("N".to_string(), big_n.to_string()), ("depth".to_string(), c.depth().to_string()), ("slope".to_string(), dim.slope.to_string())]);
    d.artifacts = artifacts;
    d.wrote_dir = wrote_dir;
    Ok(d)
}
