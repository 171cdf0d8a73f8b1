//! Acceptance criteria 1 through 11, one line of output per criterion.
//!
//! Runs as a plain binary: `cargo test -p kuznetsov-core --test acceptance`.

use std::time::Duration;

use kuznetsov_core::verify::{run, Suite, SuiteReport};

struct Criterion {
    id: u32,
    title: &'static str,
    suites: &'static [Suite],
    budget: Duration,
}

const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, title: "coefficient recurrences", suites: &[Suite::Recurrence], budget: Duration::from_secs(1) },
    Criterion { id: 2, title: "differential equations", suites: &[Suite::Ode], budget: Duration::from_secs(10) },
    Criterion { id: 3, title: "series vs Mellin-Barnes", suites: &[Suite::MbVsSeries], budget: Duration::from_secs(300) },
    Criterion { id: 4, title: "Whittaker identity", suites: &[Suite::Whittaker], budget: Duration::from_secs(30) },
    Criterion { id: 5, title: "Stade formula", suites: &[Suite::Stade], budget: Duration::from_secs(120) },
    Criterion { id: 6, title: "Barnes lemmas", suites: &[Suite::Barnes], budget: Duration::from_secs(30) },
    Criterion { id: 7, title: "Kloosterman oracles", suites: &[Suite::Kloosterman], budget: Duration::from_secs(60) },
    Criterion { id: 8, title: "Iwasawa closed forms", suites: &[Suite::Iwasawa], budget: Duration::from_secs(1) },
    Criterion { id: 9, title: "transform consistency", suites: &[Suite::Transforms], budget: Duration::from_secs(180) },
    Criterion { id: 10, title: "small-y asymptotic", suites: &[Suite::Asymptotic], budget: Duration::from_secs(5) },
    Criterion { id: 11, title: "geometric-sum determinism", suites: &[Suite::Determinism], budget: Duration::from_secs(120) },
];

fn line(c: &Criterion, reports: &[SuiteReport]) -> (bool, String) {
    let passed = reports.iter().all(SuiteReport::passed);
    let checks: usize = reports.iter().map(|r| r.checks.len()).sum();
    let failures: usize = reports.iter().map(SuiteReport::failures).sum();
    let worst = reports.iter().map(SuiteReport::max_residual).fold(0.0, f64::max);
    let elapsed: Duration = reports.iter().map(|r| r.elapsed).sum();
    let slow = if elapsed > c.budget { format!(" (over the {:?} budget)", c.budget) } else { String::new() };
    let text = format!(
        "criterion {:>2} {:<27} {} checks={checks} failures={failures} max_residual={worst:.3e} time={:.2}s{slow}",
        c.id,
        c.title,
        if passed { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
    );
    (passed, text)
}

fn main() {
    let mut failed = Vec::new();
    for c in &CRITERIA {
        let reports: Vec<SuiteReport> = c.suites.iter().map(|&s| run(s)).collect();
        let (passed, text) = line(c, &reports);
        println!("{text}");
        if !passed {
            for r in &reports {
                for check in r.checks.iter().filter(|k| !k.passed()) {
                    println!(
                        "    {} {}: residual {:?} tolerance {:e} {}",
                        r.suite,
                        check.name,
                        check.residual,
                        check.tolerance,
                        check.error.as_deref().unwrap_or("")
                    );
                }
            }
            failed.push(c.id);
        }
    }
    if !failed.is_empty() {
        println!("criteria failed: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria passed", CRITERIA.len());
}
