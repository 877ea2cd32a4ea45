//! Acceptance gate. Runs without the libtest harness so that every criterion
//! prints one PASS/FAIL line; exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use fvnc::cli::cmd_verify;
use fvnc::mesh::{generate_equilateral_mesh, Mesh};
use fvnc::verification::{
    bateman_checks, build_mms_case, consistency_study, max_principle_checks, mms_template, operator_identities, run_convergence,
    stability_check, upwind_checks, ConvergenceConfig, SuiteEntry,
};

const SEED: u64 = 0;

struct Outcome {
    passed: bool,
    summary: String,
}

fn from_entries(entries: &[SuiteEntry], properties: &[&str]) -> Outcome {
    let selected: Vec<&SuiteEntry> = entries.iter().filter(|e| properties.contains(&e.property)).collect();
    let passed = !selected.is_empty() && selected.iter().all(|e| e.passed);
    let summary = properties
        .iter()
        .map(|p| {
            let worst =
                selected
                    .iter()
                    .filter(|e| e.property == *p)
                    .fold(0.0f64, |m, e| if e.measured.is_nan() { f64::NAN } else { m.max(e.measured) });
            format!("{p} {worst:.2e}")
        })
        .collect::<Vec<_>>()
        .join(", ");
    let failures: Vec<String> = selected
        .iter()
        .filter(|e| !e.passed)
        .map(|e| format!("{} [{}] {}", e.property, e.case, e.detail))
        .collect();
    let summary = if failures.is_empty() {
        summary
    } else {
        format!("{summary}; failed: {}", failures.join("; "))
    };
    Outcome { passed, summary }
}

fn suite_meshes() -> Vec<Mesh> {
    [(1, 1), (2, 2), (4, 4)]
        .iter()
        .map(|&(r, c)| generate_equilateral_mesh(r, c, 1.0 / r as f64).expect("equilateral mesh"))
        .collect()
}

fn identities() -> Outcome {
    let entries = operator_identities(&suite_meshes(), SEED, 50);
    from_entries(&entries, &["adjoint grad/div", "laplacian coercivity", "laplacian symmetry"])
}

fn upwind_positivity() -> Outcome {
    let entries = upwind_checks(&suite_meshes(), SEED, 50);
    from_entries(&entries, &["divergence-free fields", "upwind positivity"])
}

fn maximum_principle(div_ratio: &mut f64) -> Outcome {
    let entries = max_principle_checks(8, 20, 10, SEED);
    if let Some(e) = entries.iter().find(|e| e.property == "divergence identity") {
        *div_ratio = div_ratio.max(e.measured);
    }
    from_entries(&entries, &["maximum principle"])
}

fn consistency() -> Outcome {
    match consistency_study(8, 4) {
        Ok(studies) => {
            let passed = studies.iter().all(|s| s.order.fit.is_some_and(|p| p >= 0.9));
            let summary = studies
                .iter()
                .map(|s| {
                    let fit = s.order.fit.map_or("none".into(), |p| format!("{p:.3}"));
                    let last = s.order.min_last(1).map_or("saturated".into(), |p| format!("{p:.3}"));
                    format!("{} fit {fit} last {last}", s.name)
                })
                .collect::<Vec<_>>()
                .join(", ");
            Outcome { passed, summary }
        }
        Err(e) => Outcome {
            passed: false,
            summary: e.to_string(),
        },
    }
}

fn convergence(div_ratio: &mut f64) -> Outcome {
    let result = build_mms_case("default", &mms_template(), 0.5)
        .map_err(|e| e.to_string())
        .and_then(|case| {
            let base = case.mesh(4).map_err(|e| e.to_string())?;
            let config = ConvergenceConfig {
                levels: 4,
                base_steps: 8,
                ..ConvergenceConfig::default()
            };
            run_convergence(&case, &base, &config).map_err(|e| e.to_string())
        });
    match result {
        Ok(report) => {
            *div_ratio = div_ratio.max(report.max_div_ratio());
            let tri: Vec<String> = report.levels.iter().map(|l| l.n_triangles.to_string()).collect();
            let show = |o: Option<f64>| o.map_or("saturated".into(), |v| format!("{v:.3}"));
            Outcome {
                passed: report.passed(),
                summary: format!(
                    "triangles {}; combined last-two min {} fit {}; flow last-two min {} fit {}",
                    tri.join("/"),
                    show(report.combined.min_last(2)),
                    show(report.combined.fit),
                    show(report.flow.min_last(2)),
                    show(report.flow.fit)
                ),
            }
        }
        Err(e) => Outcome { passed: false, summary: e },
    }
}

fn bateman() -> Outcome {
    let entries = bateman_checks(50, SEED);
    from_entries(&entries, &["bateman round trip", "bateman diagonal", "bateman off-diagonal"])
}

fn stability() -> Outcome {
    let entries = stability_check(8, 1000, SEED);
    let mut out = from_entries(&entries, &["stability"]);
    if let Some(e) = entries.first() {
        out.summary = format!("{}; {}", out.summary, e.detail);
    }
    out
}

fn determinism() -> Outcome {
    let run = || {
        let mut buf = Vec::new();
        let result = cmd_verify(SEED, None, None, &mut buf);
        (buf, result.map(|r| r.to_csv()).map_err(|e| e.to_string()))
    };
    let (a, ra) = run();
    let (b, rb) = run();
    let identical = a == b && ra == rb;
    Outcome {
        passed: identical && !a.is_empty(),
        summary: format!("{} bytes of report, identical: {identical}", a.len()),
    }
}

fn main() -> ExitCode {
    type Check<'a> = (&'static str, Duration, Box<dyn FnOnce() -> Outcome + 'a>);
    let mut convergence_ratio = 0.0f64;
    let mut max_principle_ratio = 0.0f64;
    let checks: Vec<Check> = vec![
        ("1 operator identities", Duration::from_secs(5), Box::new(identities)),
        ("2 upwind positivity", Duration::from_secs(5), Box::new(upwind_positivity)),
        (
            "3 maximum principle",
            Duration::from_secs(30),
            Box::new(|| maximum_principle(&mut max_principle_ratio)),
        ),
        ("5 consistency orders", Duration::from_secs(60), Box::new(consistency)),
        (
            "6 convergence",
            Duration::from_secs(600),
            Box::new(|| convergence(&mut convergence_ratio)),
        ),
        ("7 bateman transform", Duration::from_secs(1), Box::new(bateman)),
        ("8 stability", Duration::from_secs(120), Box::new(stability)),
        ("9 determinism", Duration::MAX, Box::new(determinism)),
    ];
    let mut lines = Vec::new();
    let mut all = true;
    for (name, limit, check) in checks {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let passed = outcome.passed && elapsed <= limit;
        all &= passed;
        let budget = if limit == Duration::MAX {
            String::new()
        } else {
            format!(" (limit {:.0} s)", limit.as_secs_f64())
        };
        lines.push((
            name,
            format!(
                "{} {name}: {}; {:.2} s{budget}",
                if passed { "PASS" } else { "FAIL" },
                outcome.summary,
                elapsed.as_secs_f64()
            ),
        ));
    }
    let div_ratio = convergence_ratio.max(max_principle_ratio);
    let passed = div_ratio <= 10.0;
    all &= passed;
    lines.push((
        "4 divergence identity",
        format!(
            "{} 4 divergence identity: max |div u - s| / (tolerance x scale) = {div_ratio:.3} over the maximum-principle and convergence runs (limit 10)",
            if passed { "PASS" } else { "FAIL" }
        ),
    ));
    lines.sort_by_key(|(name, _)| *name);
    for (_, line) in lines {
        println!("{line}");
    }
    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
