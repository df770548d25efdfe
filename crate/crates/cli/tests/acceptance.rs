//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use holdim::cover::{build_structured_cover, size_controlled_refine, CoverScale};
use holdim::dimension::{
    box_dimension, capacity_refuter, estimate_nu, fastgap_certificate, geometric_scales, hypercurve_certificate, hypercurve_sampled_check,
    identity_candidate, projection_surjectivity_check, snowflake, triadic_scales, LOG2_OVER_LOG3,
};
use holdim::embedding::{run_construction, CoverSource, RunConfig};
use holdim::metric::{build_cantor, build_cube_grid, build_line, build_product_grid, CantorSpec, Exact};
use holdim::schedule::{choose_n, exact_schedule, relaxed_schedule, verify_invariants, ScheduleParams};
use holdim::verify::{brute_force_oracle, image_matrix, verify_construction, Status, VerifyConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn schedule_identities() -> Outcome {
    let presets: [(u32, f64, f64, Option<u64>); 3] = [(0, 1.0, 0.5, Some(8)), (0, 0.5, 0.25, None), (1, 2.0, 0.5, None)];
    let mut notes = Vec::new();
    for (n, q, sigma, big_n) in presets {
        let big_n = match big_n {
            Some(v) => v,
            None => choose_n(n, q, sigma, 2).map_err(|e| e.to_string())?,
        };
        let p = ScheduleParams::new(n, q, sigma, big_n).map_err(|e| e.to_string())?;
        let s = exact_schedule(&p, 51).map_err(|e| e.to_string())?;
        let inv = verify_invariants(&s);
        ensure(inv.all_hold(), || format!("({n},{q},{sigma},{big_n}): {:?}", inv.checks.iter().filter(|c| !c.holds).collect::<Vec<_>>()))?;
        let l = s.constants.log2_l;
        for i in 1..=51 {
            let want = -(i as f64) * l + s.log2_eps[i];
            let got = s.log2_delta[i];
            ensure((got - want).abs() <= 1e-12 * want.abs().max(1.0), || format!("delta identity at i={i}: {got} vs {want}"))?;
            if i < 51 {
                ensure(s.log2_eps[i + 1] - s.log2_eps[i] <= -l * (1.0 - 1e-12), || format!("ratio bound at i={i}"))?;
            }
        }
        ensure(s.log2_eps[1] + s.constants.log2_c == 0.0, || "eps1 * C != 1".into())?;
        notes.push(format!("N={big_n}"));
    }
    Ok(format!("3 presets, i <= 50 ({})", notes.join(", ")))
}

fn exact_small_spaces() -> Outcome {
    let sets: Vec<Vec<(i64, i64)>> = vec![
        vec![(0, 1), (1, 1)],
        vec![(0, 1), (1, 3), (1, 1)],
        vec![(0, 1), (1, 4), (1, 2), (1, 1)],
        vec![(0, 1), (1, 5), (1, 2), (2, 3), (1, 1)],
        vec![(0, 1), (1, 7), (2, 7), (1, 2), (5, 6), (1, 1)],
        vec![(0, 1), (1, 100), (99, 100), (1, 1)],
        vec![(0, 1), (3, 8), (5, 8), (1, 1), (1, 16)],
    ];
    let p = ScheduleParams::new(0, 1.0, 0.5, 8).unwrap();
    let mut pairs = 0;
    for pts in &sets {
        let s = build_line(pts.iter().map(|&(a, b)| Exact::new(a, b).0).collect(), "line").and_then(|s| s.normalize()).map_err(|e| e.to_string())?;
        let mut cfg = RunConfig::new(3, CoverSource::Structured);
        cfg.stop_on_stabilization = true;
        let c = run_construction(&s, &exact_schedule(&p, 3).unwrap(), &cfg).map_err(|e| e.to_string())?;
        ensure(c.stabilized_at.is_some(), || format!("{pts:?} did not stabilize"))?;
        let rep = verify_construction(&s, &c, &VerifyConfig::default()).map_err(|e| e.to_string())?;
        ensure(rep.reports.iter().all(|r| r.status == Status::Pass), || format!("{pts:?}: {:?}", rep.failures().map(|r| &r.lemma).collect::<Vec<_>>()))?;
        let q = rep.get("qmeasure").unwrap();
        ensure(q.pass, || format!("{pts:?}: q-measure sum exceeds 4^q"))?;
        // Independent sandwich on every pair, with f = f_I +- tail.
        let lambda = c.schedule.lambda().unwrap();
        let (a, b) = c.schedule.constants.holder_exponents();
        let img = image_matrix(&c.last().images);
        let t = c.tail_bound();
        for x in 0..s.len() {
            for y in x + 1..s.len() {
                let d = s.dist(x, y);
                let (lo, hi) = ((img[x][y] - 2.0 * t).max(0.0), img[x][y] + 2.0 * t);
                ensure(d.powf(a) / lambda <= lo * (1.0 + 1e-9) && hi <= lambda * d.powf(b) * (1.0 + 1e-9), || format!("{pts:?}: pair ({x},{y})"))?;
                pairs += 1;
            }
        }
        let prof = brute_force_oracle(&s, &img, t).map_err(|e| e.to_string())?;
        ensure(prof.within(lambda, a, b), || format!("{pts:?}: oracle envelope outside the certified one"))?;
    }
    Ok(format!("{} spaces, {pairs} pairs, all 15 lemma checks pass", sets.len()))
}

fn relaxed_cantor() -> Outcome {
    let mut notes = Vec::new();
    for levels in [4, 5] {
        let s = build_cantor(&CantorSpec::middle_third(levels)).unwrap();
        let p = ScheduleParams::new(0, 1.0, 0.5, 8).unwrap();
        let sched = relaxed_schedule(&p, 512.0, 1.0 / 512.0, 3).map_err(|e| e.to_string())?;
        let c = run_construction(&s, &sched, &RunConfig::new(3, CoverSource::Structured)).map_err(|e| e.to_string())?;
        ensure(c.depth() >= 3, || format!("only {} stages", c.depth()))?;
        let rep = verify_construction(&s, &c, &VerifyConfig::default()).map_err(|e| e.to_string())?;
        for id in ["local_lipschitz", "separation", "edge_bound", "cauchy", "limit_tail"] {
            let r = rep.get(id).unwrap();
            ensure(r.status == Status::Pass, || format!("level {levels}: {id} is {:?}", r.status))?;
            notes.push(format!("{id}={}", r.pairs));
        }
        ensure(rep.get("qmeasure").unwrap().status == Status::NotCertified, || "q-measure was certified in relaxed mode".into())?;
    }
    notes.truncate(5);
    // Cantor covers have multiplicity 1, so the edge check has no edges to test.
    Ok(format!("levels 4 and 5, 3 stages; pairs at level 4: {}; qmeasure not-certified", notes.join(" ")))
}

fn cover_certificates() -> Outcome {
    let s = build_cantor(&CantorSpec::middle_third(6)).unwrap();
    for k in 1..=5 {
        let c = build_structured_cover(&s, CoverScale::Level(k), 0.5).map_err(|e| e.to_string())?;
        let w = 3f64.powi(-(k as i32));
        ensure(c.certs.mesh <= w * (1.0 + 1e-12) && c.certs.multiplicity == 1 && c.certs.lebesgue >= w * (1.0 - 1e-12), || format!("Cantor level {k}: {:?}", c.certs))?;
    }
    let line = build_cube_grid(1, 65).unwrap();
    for delta in [0.5, 0.25, 0.125] {
        let c = build_structured_cover(&line, CoverScale::Delta(delta), 0.25).map_err(|e| e.to_string())?;
        ensure(c.certs.multiplicity == 2 && c.certs.lebesgue >= delta / 4.0 * (1.0 - 1e-12), || format!("interval delta={delta}: {:?}", c.certs))?;
    }
    let mut sizes = Vec::new();
    for (delta, big_n) in [(1.0 / 9.0, 4u64), (1.0 / 27.0, 4), (1.0 / 27.0, 8)] {
        let sigma_base = 1.0 / 3.0;
        let base = build_structured_cover(&s, CoverScale::Delta(delta), sigma_base).map_err(|e| e.to_string())?;
        let out = size_controlled_refine(&s, &base, big_n).map_err(|e| e.to_string())?;
        let sigma = sigma_base / 2.0;
        let bound = (big_n as f64).powf((2.0 / (sigma * delta)).log2());
        ensure((out.cover.len() as f64) <= bound && out.bound_holds, || format!("refine: {} sets > {bound}", out.cover.len()))?;
        sizes.push(format!("{}<={bound:.0}", out.cover.len()));
    }
    Ok(format!("Cantor levels 1-5, interval deltas 1/2..1/8, refine sizes {}", sizes.join(" ")))
}

fn dimension_estimates() -> Outcome {
    let cantor = build_cantor(&CantorSpec::middle_third(10)).unwrap();
    let c = box_dimension(&cantor, &triadic_scales(1..=8)).map_err(|e| e.to_string())?;
    ensure((c.slope - LOG2_OVER_LOG3).abs() <= 0.02, || format!("Cantor slope {}", c.slope))?;
    let interval = build_cube_grid(1, 1024).unwrap();
    let i = box_dimension(&interval, &geometric_scales(0.25, 1.0 / 256.0, 7).unwrap()).map_err(|e| e.to_string())?;
    ensure((i.slope - 1.0).abs() <= 0.02, || format!("interval slope {}", i.slope))?;
    let prod = build_product_grid(&CantorSpec::middle_third(5), 1, 243).unwrap();
    let ci = box_dimension(&prod, &triadic_scales(1..=4)).map_err(|e| e.to_string())?;
    ensure((ci.slope - (1.0 + LOG2_OVER_LOG3)).abs() <= 0.03, || format!("C x I slope {}", ci.slope))?;
    let sf = snowflake(&cantor, LOG2_OVER_LOG3).map_err(|e| e.to_string())?;
    let scales: Vec<f64> = (1..=8).map(|k| 2f64.powi(-k)).collect();
    let f = box_dimension(&sf, &scales).map_err(|e| e.to_string())?;
    ensure((f.slope - 1.0).abs() <= 0.03, || format!("snowflake slope {}", f.slope))?;
    Ok(format!("Cantor {:.4}, interval {:.4}, C x I {:.4}, snowflaked Cantor {:.4}", c.slope, i.slope, ci.slope, f.slope))
}

fn fastgap() -> Outcome {
    let mut notes = Vec::new();
    for (a, b, l) in [(1.0, 1.0, 1.0), (2.0, 0.5, 4.0)] {
        let c = fastgap_certificate(6, a, b, l).map_err(|e| e.to_string())?;
        let g = &c.gap_sum;
        ensure((g.partial - 0.1685).abs() < 1e-3 && g.upper < 0.5 && g.tail < 1e-3, || format!("gap sum {g:?}"))?;
        let ok = |k: u64| {
            let base = ((k + 1) as f64).powf(b);
            base >= 3.0 && k as f64 * (base.ln() - a * 3f64.ln()) > (2.0 * l * l / 10f64.powf(b)).ln()
        };
        let k = c.threshold.k;
        ensure(ok(k) && (1..k).all(|j| !ok(j)), || format!("k = {k} is not minimal"))?;
        let want = 1.0 / (2.0 * l * 3f64.powf(a * k as f64));
        ensure((c.threshold.image_measure_lower - want).abs() <= 1e-12 * want, || "image measure bound".into())?;
        ensure(c.interval_bound.iter().all(|x| x.1), || "interval width bound".into())?;
        notes.push(format!("({a},{b},{l}): k={k}, bound {want:.3e}"));
    }
    Ok(format!("partial 0.16853, upper < 1/2; {}", notes.join("; ")))
}

fn harmonic() -> Outcome {
    let mut notes = Vec::new();
    for sigma in [0.25, 0.5, 0.9] {
        let n = (2.0f64 / sigma).max(2.0).ceil() as usize + 1;
        let r = capacity_refuter(sigma, 2 * n * (n - 1)).map_err(|e| e.to_string())?;
        ensure(r.closeness && r.lebesgue_forcing && r.diameter_violation && r.holds, || format!("sigma={sigma}: {r:?}"))?;
        if sigma == 0.5 {
            ensure(r.n == 5 && r.delta == 0.2 && r.merged_diameter >= 0.25, || format!("sigma=0.5 witness {r:?}"))?;
        }
        notes.push(format!("sigma={sigma}: n={} delta={:.4}", r.n, r.delta));
    }
    Ok(notes.join(", "))
}

fn hypercurve() -> Outcome {
    for (n, alpha) in [(1u32, 1.0), (1, 2.0), (2, 1.0)] {
        let c = hypercurve_certificate(1.0, alpha, n, 1.0).map_err(|e| e.to_string())?;
        let want = n as f64 + LOG2_OVER_LOG3 / alpha;
        ensure(c.lower_bound > n as f64 && (c.lower_bound - want).abs() < 1e-12, || format!("({n},{alpha}): {}", c.lower_bound))?;
    }
    let s = build_product_grid(&CantorSpec::middle_third(5), 1, 243).unwrap();
    let img = identity_candidate(&s).map_err(|e| e.to_string())?;
    let proj = projection_surjectivity_check(&s, &img, 1.0, None, 200_000, 0).map_err(|e| e.to_string())?;
    ensure(proj.face_violations.is_empty(), || format!("{} face violations", proj.face_violations.len()))?;
    ensure(proj.big_psi_lipschitz <= 1.0 + 1e-9 && proj.holds, || format!("projection {proj:?}"))?;
    let nu = estimate_nu(8).map_err(|e| e.to_string())?;
    let cert = hypercurve_certificate(1.0, 1.0, 1, nu.value).map_err(|e| e.to_string())?;
    let scales: Vec<f64> = (1..=4).map(|k| 2f64.sqrt() * 3f64.powi(-k)).collect();
    let m = hypercurve_sampled_check(&s, &cert, &scales).map_err(|e| e.to_string())?;
    ensure(m.holds, || format!("sampled measure {m:?}"))?;
    let least = m.scales.iter().map(|x| x.corrected).fold(f64::INFINITY, f64::min);
    Ok(format!("bounds 1.6309/1.3155/2.6309; {} pairs, Psi Lipschitz {:.4}; min sum {least:.3} >= B/A {:.3}", proj.pairs, proj.big_psi_lipschitz, cert.b_over_a))
}

fn snapshot(dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            snapshot(&p, out);
        } else {
            out.insert(p.to_string_lossy().into_owned(), fs::read(&p).unwrap());
        }
    }
}

fn determinism() -> Outcome {
    let script: &[&[&str]] = &[
        &["space", "--kind", "cantor", "--levels", "4", "--out", "c.json"],
        &["space", "--kind", "random", "--count", "30", "--seed", "11", "--out", "r.json"],
        &["schedule", "--mode", "relaxed", "--stages", "3", "--N", "8", "--out", "s.json"],
        &["cover", "--space", "c.json", "--delta", "0.12", "--sigma", "0.5", "--mode", "refine", "--out", "cov.json"],
        &["cover", "--space", "r.json", "--delta", "0.3", "--sigma", "0.1", "--mode", "greedy", "--out", "g.json"],
        &["embed", "--space", "c.json", "--schedule", "s.json", "--out", "run"],
        &["verify", "--stages", "run", "--out", "v.json"],
        &["dims", "--space", "c.json", "--scales", "triadic:1:4", "--format", "csv", "--out", "d.csv"],
        &["counterexample", "--which", "hypercurve", "--params", "levels=3,res=27", "--out", "h.json"],
        &["counterexample", "--which", "harmonic", "--out", "hm.json"],
        &["demo", "--preset", "two-point", "--out", "demo2"],
        &["demo", "--preset", "cantor-relaxed", "--out", "democ"],
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let t = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut files = BTreeMap::new();
        for (k, args) in script.iter().enumerate() {
            let o = Command::new(env!("CARGO_BIN_EXE_holdim")).current_dir(t.path()).args(*args).output().map_err(|e| e.to_string())?;
            ensure(o.status.success(), || format!("{args:?} exited {:?}", o.status.code()))?;
            files.insert(format!("stdout#{k}"), o.stdout);
        }
        let mut disk = BTreeMap::new();
        snapshot(t.path(), &mut disk);
        let root = t.path().to_string_lossy().into_owned();
        files.extend(disk.into_iter().map(|(p, v)| (p.replacen(&root, "", 1), v)));
        runs.push(files);
    }
    let (a, b) = (&runs[0], &runs[1]);
    ensure(a.keys().eq(b.keys()), || "different artifact sets".into())?;
    let differing: Vec<&String> = a.iter().filter(|(k, v)| b[*k] != **v).map(|(k, _)| k).collect();
    ensure(differing.is_empty(), || format!("differing artifacts: {differing:?}"))?;
    Ok(format!("{} commands, {} artifacts byte-identical across two runs", script.len(), a.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("schedule identities", schedule_identities, Duration::from_secs(1)),
        ("exact-mode end-to-end", exact_small_spaces, Duration::from_secs(10)),
        ("relaxed Cantor multi-stage", relaxed_cantor, Duration::from_secs(60)),
        ("cover certificates", cover_certificates, Duration::from_secs(5)),
        ("dimension estimates", dimension_estimates, Duration::from_secs(30)),
        ("fast-gap certificate", fastgap, Duration::from_secs(1)),
        ("harmonic refuter", harmonic, Duration::from_secs(1)),
        ("hypercurve certificate", hypercurve, Duration::from_secs(30)),
        ("determinism", determinism, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (tag, detail) = match outcome {
            Ok(d) if took <= *limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; runtime {took:.2?} exceeds {limit:?}")),
            Err(e) => ("FAIL", e),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} {} {name} [{:.3}s / {}s]: {detail}", k + 1, took.as_secs_f64(), limit.as_secs());
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
