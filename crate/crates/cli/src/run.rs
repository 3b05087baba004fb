use iwasawa_core::cyclofield::SeedPolicy;
use iwasawa_core::suites::{self, SuiteReport};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::SuitePlan;
use crate::CliError;

pub const REPORT_SCHEMA: &str = "iwf.report/1";

fn run_one(plan: &SuitePlan, policy: SeedPolicy) -> iwasawa_core::Result<SuiteReport> {
    match plan {
        SuitePlan::Coleman(q) => suites::coleman_suite(q, policy),
        SuitePlan::Leopoldt(q) => suites::leopoldt_suite(q, policy),
        SuitePlan::Ex(q) => suites::ex_suite(q, policy),
        SuitePlan::Ezc(q) => suites::ezc_suite(q, policy),
    }
}

/// Runs the plans on a pool of `jobs` threads. Results come back in plan order.
pub fn run_plans(plans: &[SuitePlan], jobs: usize, policy: SeedPolicy) -> Result<Vec<SuiteReport>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} workers: {e}")))?;
    let results: Vec<_> = pool.install(|| plans.par_iter().map(|p| (p.name(), run_one(p, policy))).collect());
    results
        .into_iter()
        .map(|(name, r)| r.map_err(|e| CliError::Compute(format!("suite {name}: {e}"))))
        .collect()
}

pub fn report(reports: &[SuiteReport], policy: SeedPolicy) -> Value {
    json!({
        "schema": REPORT_SCHEMA,
        "tool": { "name": "iwf", "version": env!("CARGO_PKG_VERSION") },
        "seed_policy": policy.name(),
        "pass": !reports.is_empty() && reports.iter().all(|r| r.pass()),
        "suites": reports.iter().map(suites::to_json).collect::<Vec<_>>(),
    })
}

pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// One line per suite and one per failing check.
pub fn summary(reports: &[SuiteReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let failed: Vec<_> = r.checks.iter().filter(|c| !c.pass).collect();
        let verdict = if r.pass() { "PASS" } else { "FAIL" };
        out.push_str(&format!("{}: {verdict} ({} checks, {} failed)\n", r.suite, r.checks.len(), failed.len()));
        for c in failed {
            out.push_str(&format!(
                "  {}: residual {} < certificate {}\n",
                c.name, c.residual_valuation, c.certificate
            ));
        }
    }
    out
}
