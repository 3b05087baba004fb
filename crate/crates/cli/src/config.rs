use std::path::{Path, PathBuf};

use iwasawa_core::suites::{CharSpec, ColemanParams, ExParams, EzcParams, LeopoldtParams, UnitData};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const CONFIG_SCHEMA: &str = "iwf.config/1";
pub const SUITES: [&str; 4] = ["coleman", "leopoldt", "ex", "ezc"];

/// A run description. Top-level fields override the per-suite sections.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: Option<String>,
    pub suites: Option<Vec<String>>,
    pub prime: Option<u64>,
    pub precision: Option<u32>,
    pub m_max: Option<u32>,
    pub character: Option<CharSpec>,
    /// p-stabilization for the `ex` suite, in the `PStabilization` JSON form.
    pub stabilization: Option<Value>,
    /// Path to a `UnitData` file for the `ezc` suite.
    pub unit_data: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub coleman: ColemanParams,
    #[serde(default)]
    pub leopoldt: LeopoldtParams,
    #[serde(default)]
    pub ex: ExParams,
    #[serde(default)]
    pub ezc: EzcParams,
}

/// Values given on the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub p: Option<u64>,
    pub precision: Option<u32>,
    pub m_max: Option<u32>,
    pub character: Option<String>,
    pub depth: Option<u32>,
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug)]
pub enum SuitePlan {
    Coleman(ColemanParams),
    Leopoldt(LeopoldtParams),
    Ex(ExParams),
    Ezc(EzcParams),
}

impl SuitePlan {
    pub fn name(&self) -> &'static str {
        match self {
            SuitePlan::Coleman(_) => "coleman",
            SuitePlan::Leopoldt(_) => "leopoldt",
            SuitePlan::Ex(_) => "ex",
            SuitePlan::Ezc(_) => "ezc",
        }
    }
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
    // relative file references are taken from the config's directory
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(RunConfig {
        unit_data: cfg.unit_data.as_ref().map(|u| rebase(base, u)),
        ..cfg
    })
}

fn rebase(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|k| k * k <= n).all(|k| !n.is_multiple_of(k))
}

fn check_prime(p: u64) -> Result<(), CliError> {
    if !is_prime(p) {
        return Err(CliError::Config(format!("p = {p} is not prime")));
    }
    if p == 2 {
        return Err(CliError::Config("p = 2 is not supported".into()));
    }
    Ok(())
}

fn check_char(c: &CharSpec) -> Result<(), CliError> {
    c.resolve().map(|_| ()).map_err(|e| CliError::Config(format!("bad character: {e}")))
}

/// Schema checks on the merged config. Runs before any computation.
pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(s) = &cfg.schema {
        if s != CONFIG_SCHEMA {
            return Err(CliError::Config(format!("unknown config schema {s:?}, expected {CONFIG_SCHEMA:?}")));
        }
    }
    if let Some(list) = &cfg.suites {
        if list.is_empty() {
            return Err(CliError::Config("empty suite selection".into()));
        }
        for s in list {
            if !SUITES.contains(&s.as_str()) {
                return Err(CliError::Config(format!("unknown suite {s:?}")));
            }
        }
    }
    if let Some(p) = cfg.prime {
        check_prime(p)?;
    }
    if cfg.precision.is_some_and(|k| k < 2) {
        return Err(CliError::Config("precision must be at least 2".into()));
    }
    if cfg.m_max == Some(0) {
        return Err(CliError::Config("m_max must be at least 1".into()));
    }
    if cfg.jobs == Some(0) {
        return Err(CliError::Config("jobs must be at least 1".into()));
    }
    if let Some(c) = &cfg.character {
        check_char(c)?;
    }
    if let Some(u) = &cfg.unit_data {
        if !u.is_file() {
            return Err(CliError::Config(format!("unit data file {} does not exist", u.display())));
        }
    }
    if let Some(st) = &cfg.stabilization {
        iwasawa_core::stark::PStabilization::from_json(st)
            .map_err(|e| CliError::Config(format!("bad stabilization: {e}")))?;
    }
    check_prime(cfg.coleman.p)?;
    for (p, c) in [
        (cfg.leopoldt.p, &cfg.leopoldt.character),
        (cfg.ex.p, &cfg.ex.character),
        (cfg.ezc.p, &cfg.ezc.character),
    ] {
        check_prime(p)?;
        check_char(c)?;
    }
    Ok(())
}

/// Folds the command-line overrides into the config.
pub fn merge(mut cfg: RunConfig, o: &Overrides) -> RunConfig {
    cfg.prime = o.p.or(cfg.prime);
    cfg.precision = o.precision.or(cfg.precision);
    cfg.m_max = o.m_max.or(cfg.m_max);
    cfg.jobs = o.jobs.or(cfg.jobs);
    if let Some(c) = &o.character {
        cfg.character = Some(CharSpec::builtin(c));
    }
    if let Some(d) = o.depth {
        cfg.coleman.depth = d;
    }
    cfg
}

fn read_unit_data(path: &Path) -> Result<UnitData, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid unit data {}: {e}", path.display())))
}

/// Resolves `selection` ("all" or one suite name) into parameter sets.
pub fn plan(cfg: &RunConfig, selection: &str) -> Result<Vec<SuitePlan>, CliError> {
    let names: Vec<String> = if selection == "all" {
        cfg.suites.clone().unwrap_or_else(|| SUITES.iter().map(|s| s.to_string()).collect())
    } else {
        vec![selection.to_string()]
    };
    if names.is_empty() {
        return Err(CliError::Config("empty suite selection".into()));
    }
    let mut out = vec![];
    for name in names {
        let plan = match name.as_str() {
            "coleman" => {
                let mut q = cfg.coleman.clone();
                q.p = cfg.prime.unwrap_or(q.p);
                q.precision = cfg.precision.unwrap_or(q.precision);
                SuitePlan::Coleman(q)
            }
            "leopoldt" => {
                let mut q = cfg.leopoldt.clone();
                q.p = cfg.prime.unwrap_or(q.p);
                q.precision = cfg.precision.unwrap_or(q.precision);
                q.m_max = cfg.m_max.unwrap_or(q.m_max);
                q.character = cfg.character.clone().unwrap_or(q.character);
                SuitePlan::Leopoldt(q)
            }
            "ex" => {
                let mut q = cfg.ex.clone();
                q.p = cfg.prime.unwrap_or(q.p);
                q.precision = cfg.precision.unwrap_or(q.precision);
                q.m_max = cfg.m_max.unwrap_or(q.m_max);
                q.character = cfg.character.clone().unwrap_or(q.character);
                q.stabilization = cfg.stabilization.clone().or(q.stabilization);
                SuitePlan::Ex(q)
            }
            "ezc" => {
                let mut q = cfg.ezc.clone();
                q.p = cfg.prime.unwrap_or(q.p);
                q.precision = cfg.precision.unwrap_or(q.precision);
                q.m_max = cfg.m_max.unwrap_or(q.m_max);
                q.character = cfg.character.clone().unwrap_or(q.character);
                if let Some(path) = &cfg.unit_data {
                    q.unit = Some(read_unit_data(path)?);
                }
                SuitePlan::Ezc(q)
            }
            other => return Err(CliError::Config(format!("unknown suite {other:?}"))),
        };
        out.push(plan);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let r: Result<RunConfig, _> = serde_json::from_str(r#"{"prime": 5, "primes": 7}"#);
        assert!(r.is_err());
    }

    #[test]
    fn empty_selection_is_a_config_error() {
        let cfg: RunConfig = serde_json::from_str(r#"{"suites": []}"#).unwrap();
        assert!(matches!(validate(&cfg), Err(CliError::Config(_))));
    }

    #[test]
    fn overrides_reach_every_suite() {
        let cfg = merge(RunConfig::default(), &Overrides { p: Some(7), precision: Some(9), ..Default::default() });
        for plan in plan(&cfg, "all").unwrap() {
            let (p, k) = match plan {
                SuitePlan::Coleman(q) => (q.p, q.precision),
                SuitePlan::Leopoldt(q) => (q.p, q.precision),
                SuitePlan::Ex(q) => (q.p, q.precision),
                SuitePlan::Ezc(q) => (q.p, q.precision),
            };
            assert_eq!((p, k), (7, 9));
        }
    }

    #[test]
    fn composite_prime_rejected() {
        let cfg = RunConfig { prime: Some(9), ..Default::default() };
        assert!(validate(&cfg).is_err());
    }
}
