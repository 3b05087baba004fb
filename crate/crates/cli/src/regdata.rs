//! Input files for `eval regulator` and `eval linv`.

use std::path::Path;
use std::sync::Arc;

use iwasawa_core::characters::{Cyclo, UnitTerm, UnitVector};
use iwasawa_core::cyclofield::{LocalRing, SeedPolicy};
use iwasawa_core::hpfloat::Real;
use iwasawa_core::padic::PadicValue;
use iwasawa_core::stark::{monomial_unit_projection, PStabilization, RegulatorInput};
use iwasawa_core::suites::{CharSpec, QuadraticSpec};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

pub const DEFAULT_REGULATOR: &str = include_str!("../data/mod5_regulator.json");

fn default_bits() -> u32 {
    128
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulatorData {
    pub p: u64,
    /// The local ring is R(d, 0); d must make every coefficient's root of unity available.
    pub d: u64,
    pub precision: u32,
    #[serde(default = "default_bits")]
    pub bits: u32,
    pub stabilization: Value,
    #[serde(default)]
    pub omega_inf: Vec<WedgeTerm>,
    /// ψ_j(t_i) as `psi[j][i]`.
    #[serde(default)]
    pub psi: Vec<Vec<UnitSpec>>,
    /// ψ'_j(t_i) as `psi_prime[j][i]`.
    #[serde(default)]
    pub psi_prime: Vec<Vec<UnitSpec>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WedgeTerm {
    pub indices: Vec<usize>,
    pub coeff: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum UnitSpec {
    Projected { projected: Projection },
    Terms { terms: Vec<TermSpec> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Projection {
    pub character: CharSpec,
    pub element: QuadraticSpec,
    pub group: Vec<u64>,
    #[serde(default)]
    pub companion: bool,
}

/// A unit given by its three invariants. Numbers are decimal or a/b strings.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default)]
    pub coeff: Option<Value>,
    pub log_abs: String,
    pub log_p: String,
    pub valuation: String,
    #[serde(default)]
    pub tag: String,
}

/// Parses "-3", "1/7" or "-0.125" exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, CliError> {
    let bad = || CliError::Config(format!("not a rational number: {s:?}"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars())).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let q = BigRational::new(digits, den);
    Ok(if neg { -q } else { q })
}

pub struct Prepared {
    pub ring: Arc<LocalRing>,
    pub bits: u32,
    pub stab: PStabilization,
    pub input: RegulatorInput,
    pub psi_prime: Vec<Vec<UnitVector>>,
}

pub fn load(path: Option<&Path>) -> Result<RegulatorData, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
        None => DEFAULT_REGULATOR.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid regulator data: {e}")))
}

impl RegulatorData {
    pub fn prepare(&self, policy: SeedPolicy) -> Result<Prepared, CliError> {
        let base = iwasawa_core::cyclofield::BaseRing::new(self.p, self.d, self.precision, policy)
            .map_err(|e| CliError::Config(format!("bad ring parameters: {e}")))?;
        let ring = LocalRing::new(&base, 0);
        let stab = PStabilization::from_json(&self.stabilization)
            .map_err(|e| CliError::Config(format!("bad stabilization: {e}")))?;
        let omega_inf = self
            .omega_inf
            .iter()
            .map(|w| Ok((w.indices.clone(), parse_rational(&w.coeff)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        let cols = |c: &[Vec<UnitSpec>]| -> Result<Vec<Vec<UnitVector>>, CliError> {
            c.iter()
                .map(|col| col.iter().map(|u| self.unit(u, &ring)).collect())
                .collect()
        };
        Ok(Prepared {
            input: RegulatorInput { omega_inf, columns: cols(&self.psi)? },
            psi_prime: cols(&self.psi_prime)?,
            ring,
            bits: self.bits,
            stab,
        })
    }

    fn unit(&self, spec: &UnitSpec, ring: &Arc<LocalRing>) -> Result<UnitVector, CliError> {
        let compute = |e: iwasawa_core::Error| CliError::Compute(e.to_string());
        match spec {
            UnitSpec::Projected { projected: q } => {
                let chi = q.character.resolve().map_err(|e| CliError::Config(format!("bad character: {e}")))?;
                let orbit = q.element.element().orbit(&chi, ring, self.bits).map_err(compute)?;
                let pu = monomial_unit_projection(&chi, &q.group, &orbit).map_err(compute)?;
                Ok(if q.companion { pu.companion } else { pu.unit })
            }
            UnitSpec::Terms { terms } => {
                let prec = ring.precision() as i64;
                let terms = terms
                    .iter()
                    .map(|t| {
                        let coeff = match &t.coeff {
                            Some(v) => Cyclo::from_json(v).map_err(|e| CliError::Config(e.to_string()))?,
                            None => Cyclo::from_int(1),
                        };
                        let log_p = PadicValue::from_rational(self.p, &parse_rational(&t.log_p)?, prec);
                        Ok(UnitTerm {
                            coeff,
                            log_abs: Real::from_rational(&parse_rational(&t.log_abs)?, self.bits),
                            log_p: ring.from_padic(&log_p),
                            valuation: parse_rational(&t.valuation)?,
                            tag: t.tag.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                Ok(UnitVector::new(terms))
            }
        }
    }
}
