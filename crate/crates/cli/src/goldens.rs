//! Frozen reports for each suite at its default parameters.

use std::path::{Path, PathBuf};

use iwasawa_core::cyclofield::SeedPolicy;

use crate::config::{self, RunConfig, SUITES};
use crate::run;
use crate::CliError;

pub fn default_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("goldens")
}

fn golden_path(dir: &Path, suite: &str) -> PathBuf {
    dir.join(format!("{suite}.json"))
}

fn actual_path(dir: &Path, suite: &str) -> PathBuf {
    dir.join(format!("{suite}.actual.json"))
}

fn render_all(jobs: usize, policy: SeedPolicy) -> Result<Vec<(&'static str, String)>, CliError> {
    let plans = config::plan(&RunConfig::default(), "all")?;
    let reports = run::run_plans(&plans, jobs, policy)?;
    Ok(SUITES
        .iter()
        .zip(reports)
        .map(|(&name, r)| (name, run::render(&run::report(std::slice::from_ref(&r), policy))))
        .collect())
}

pub fn update(dir: &Path, jobs: usize, policy: SeedPolicy) -> Result<String, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let mut log = String::new();
    for (name, text) in render_all(jobs, policy)? {
        let path = golden_path(dir, name);
        std::fs::write(&path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        let _ = std::fs::remove_file(actual_path(dir, name));
        log.push_str(&format!("wrote {}\n", path.display()));
    }
    Ok(log)
}

fn first_difference(a: &str, b: &str) -> usize {
    a.lines().zip(b.lines()).position(|(x, y)| x != y).unwrap_or(a.lines().count().min(b.lines().count())) + 1
}

/// Compares fresh reports against the store. Mismatches leave `<suite>.actual.json` next to the golden.
pub fn check(dir: &Path, jobs: usize, policy: SeedPolicy) -> Result<String, CliError> {
    for name in SUITES {
        let path = golden_path(dir, name);
        if !path.is_file() {
            return Err(CliError::Config(format!("golden {} is missing; run `iwf goldens update`", path.display())));
        }
    }
    let mut log = String::new();
    let mut mismatches = vec![];
    for (name, fresh) in render_all(jobs, policy)? {
        let path = golden_path(dir, name);
        let stored = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if stored == fresh {
            let _ = std::fs::remove_file(actual_path(dir, name));
            log.push_str(&format!("{name}: match\n"));
        } else {
            let actual = actual_path(dir, name);
            std::fs::write(&actual, &fresh)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", actual.display())))?;
            mismatches.push(format!(
                "{name}: golden mismatch at line {} of {}; actual report in {}",
                first_difference(&stored, &fresh),
                path.display(),
                actual.display()
            ));
        }
    }
    if mismatches.is_empty() {
        Ok(log)
    } else {
        Err(CliError::Golden(format!("{log}{}", mismatches.join("\n"))))
    }
}

