//! Verification suites behind `iwf verify` and the acceptance run.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::characters::{l_value_at_one, DirichletData};
use crate::coleman::*;
use crate::cyclofield::{BaseRing, FiniteOrderCharacter, LocalRing, SeedPolicy};
use crate::hpfloat::Real;
use crate::lfunctions::{etas_with_conductors, verify_ex, verify_ezc_gross, verify_interpolation, DeligneRibetMeasure, OddTheta};
use crate::report::Check;
use crate::series::PowerSeries;
use crate::stark::{monomial_unit_projection, PStabilization, QuadraticElement};
use crate::{Error, Result};

/// Checks of one suite plus named side results (matched constants and the like).
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub params: Value,
    pub checks: Vec<Check>,
    pub notes: BTreeMap<String, String>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ColemanParams {
    pub p: u64,
    /// Working precision of the random-series run.
    pub precision: u32,
    /// Series truncation length N.
    pub truncation: usize,
    pub random_series: usize,
    pub seed: u64,
    /// Depth of the closed-form families.
    pub depth: u32,
    /// Precision of the closed-form families.
    pub family_precision: u32,
    /// Truncation for the distribution relation of the closed-form family. Each
    /// coefficient costs a digit there, so this stays well below N.
    pub family_truncation: usize,
}

impl Default for ColemanParams {
    fn default() -> Self {
        ColemanParams {
            p: 3,
            precision: 10,
            truncation: 27,
            random_series: 100,
            seed: 0,
            depth: 3,
            family_precision: 18,
            family_truncation: 8,
        }
    }
}

fn base_ring(p: u64, d: u64, prec: u32, policy: SeedPolicy) -> Result<Arc<BaseRing>> {
    BaseRing::new(p, d, prec, policy)
}

fn random_unit_series(ring: &Arc<LocalRing>, n: usize, rng: &mut ChaCha8Rng) -> PowerSeries {
    let p = ring.p();
    let m = num_traits::pow(BigInt::from(p), ring.precision() as usize);
    let bound = m.clone();
    let mut c: Vec<BigInt> = (0..n)
        .map(|_| BigInt::from(rng.gen::<u64>()).mod_floor(&bound))
        .collect();
    c[0] = BigInt::from(rng.gen_range(1..p)) + &c[0] * BigInt::from(p);
    PowerSeries::from_ints(ring, &c, n)
}

/// 𝓛-additivity and integrality on random unit series, the interpolation
/// property and distribution relation for the cyclotomic family, the special-value
/// lemma at conductor p^2 with its constant-term branch, and the extended map.
pub fn coleman_suite(params: &ColemanParams, policy: SeedPolicy) -> Result<SuiteReport> {
    let p = params.p;
    let mut checks = vec![];
    let mut notes = BTreeMap::new();

    let base = base_ring(p, 1, params.precision, policy)?;
    let r0 = LocalRing::new(&base, 0);
    let n = params.truncation;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut worst = i64::MAX;
    let mut cert = i64::MAX;
    let mut integral = 0usize;
    for _ in 0..params.random_series {
        let f = random_unit_series(&r0, n, &mut rng);
        let g = random_unit_series(&r0, n, &mut rng);
        let ops = [coleman_operator(&f), coleman_operator(&g), coleman_operator(&f.mul(&g))];
        if ops.iter().all(|o| o.is_ok()) {
            integral += 1;
        }
        match ops {
            [Ok(lf), Ok(lg), Ok(lfg)] => {
                let sum = lf.add(&lg);
                worst = worst.min(lfg.residual_valuation(&sum));
                cert = cert.min(lfg.precision().min(sum.precision()));
            }
            [a, b, c] => {
                for e in [a, b, c].into_iter().filter_map(|r| r.err()) {
                    if e != Error::IntegralityViolation {
                        return Err(e);
                    }
                }
                worst = i64::MIN;
            }
        }
    }
    let count = params.random_series;
    checks.push(Check::flag(
        format!("operator integrality [{count} series]"),
        integral == count,
        format!("{integral}/{count} integral"),
    ));
    if count > 0 {
        checks.push(Check::new(
            format!("operator additivity [{count} series]"),
            "L(fg)",
            "L(f)+L(g)",
            worst,
            if cert == i64::MAX { 0 } else { cert },
        ));
    }

    let fb = base_ring(p, 1, params.family_precision, policy)?;
    let cf = ClosedForm::cyclotomic_unit(&fb, 2);
    let v = NormCoherentSequence::from_closed_form(&fb, &cf, params.depth)?;
    for c in verify_coleman_series(&ColemanSeries::Closed(cf), &v, params.family_truncation)? {
        checks.push(Check { name: format!("cyclotomic family {}", c.name), ..c });
    }

    let avg = ClosedForm::cyclotomic_unit(&fb, 2).delta_norm();
    let u = NormCoherentSequence::from_closed_form(&fb, &avg, params.depth.max(2))?;
    for eta in etas_with_conductors(p, &[2]) {
        checks.push(special_value_check(&u, &eta, 2)?);
    }

    // constant-term branch needs Frobenius to act: d with f = 2 and u_0 ≠ 1
    let d = if p == 2 { 3 } else { (2..).find(|d| d % p != 0 && p % d != 1 && (p * p) % d == 1).unwrap() };
    let cb = base_ring(p, d, params.family_precision.min(12), policy)?;
    let sh = ClosedForm::shifted_unit(&cb, 1).delta_norm();
    let w = NormCoherentSequence::from_closed_form(&cb, &sh, 2)?;
    let w0 = w.entry_zero()?;
    checks.push(Check::flag(
        format!("constant-term family has u_0 != 1 (d={d})"),
        w0.residual_valuation(&w0.ring().one()) < w0.precision(),
        &w0,
    ));
    checks.push(special_value_check(&w, &FiniteOrderCharacter::trivial(p), 1)?);

    let eb = base_ring(p, 1, params.family_precision.min(16), policy)?;
    let pi = ClosedForm::uniformizer(&eb).delta_norm();
    let pv = NormCoherentSequence::from_closed_form(&eb, &pi, 2)?;
    let ord = ord_p_first(&pv)?;
    checks.push(Check::flag("p-unit family has ord_p(v_1) = 1", ord == 1, ord));
    let mu = coleman_map(&gamma_power_minus_one(&pv, 1)?, 1)?;
    let mass = mu.total_mass();
    let expect = extended_constant_term(&pv, 1)?;
    checks.push(Check::new(
        "extended map constant term",
        &mass,
        &expect,
        mass.residual_valuation(&expect),
        mass.precision().min(expect.precision()),
    ));
    let e1 = coleman_extended(&pv, 1, 1)?;
    let e2 = coleman_extended(&pv, 2, 1)?;
    let wp = e1.numerator.precision().min(e2.numerator.precision());
    checks.push(Check::new(
        "extended map gamma vs gamma^2",
        "c=1",
        "c=2",
        e1.residual_valuation(&e2),
        wp,
    ));
    notes.insert("constant_term_d".into(), d.to_string());

    Ok(SuiteReport {
        suite: "coleman".into(),
        params: serde_json::to_value(params).unwrap(),
        checks,
        notes,
    })
}

/// A Dirichlet character given by built-in name or by its images on the standard
/// generators of (Z/m)^×.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum CharSpec {
    Builtin(String),
    Explicit {
        modulus: u64,
        order: u64,
        generator_images: Vec<u64>,
        #[serde(default)]
        label: Option<String>,
    },
}

impl CharSpec {
    pub fn builtin(name: &str) -> Self {
        CharSpec::Builtin(name.to_string())
    }

    pub fn resolve(&self) -> Result<DirichletData> {
        match self {
            CharSpec::Builtin(name) => DirichletData::builtin(name),
            CharSpec::Explicit { modulus, order, generator_images, label } => DirichletData::new(
                *modulus,
                *order,
                generator_images.clone(),
                label.as_deref().unwrap_or("chi"),
            ),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LeopoldtParams {
    pub p: u64,
    pub character: CharSpec,
    pub precision: u32,
    pub m_max: u32,
    pub conductors: Vec<u32>,
    pub ns: Vec<i64>,
    pub regularizer: Option<u64>,
    /// Characters for the class number formula check.
    pub real_quadratic: Vec<String>,
    pub bits: u32,
}

impl Default for LeopoldtParams {
    fn default() -> Self {
        LeopoldtParams {
            p: 5,
            character: CharSpec::builtin("mod12_quadratic"),
            precision: 12,
            m_max: 7,
            conductors: vec![0, 2],
            ns: vec![1, 2, 3, 4],
            regularizer: None,
            real_quadratic: vec!["mod5_quadratic".into(), "mod12_quadratic".into()],
            bits: 256,
        }
    }
}

/// Ring R(d, 0) with d the smallest multiple of the modulus of χ and of p - 1.
pub fn even_ring(chi: &DirichletData, p: u64, precision: u32, policy: SeedPolicy) -> Result<Arc<LocalRing>> {
    let d = chi.modulus().lcm(&(p - 1));
    if d.is_multiple_of(p) {
        return Err(Error::RamifiedAtP);
    }
    Ok(LocalRing::new(&base_ring(p, d, precision, policy)?, 0))
}

/// Fundamental unit (as (a + b√D)/den) and class number for the built-in real quadratic
/// characters. The p-adic fields are unused here.
pub fn real_quadratic_data(name: &str) -> Result<(QuadraticElement, u64)> {
    let q = |disc, a, b, den| QuadraticElement { disc, a, b, den, p: 11, sqrt_residue: 4 };
    match name {
        "mod5_quadratic" => Ok((q(5, 1, 1, 2), 1)),
        "mod12_quadratic" => Ok((QuadraticElement { sqrt_residue: 1, ..q(12, 4, 1, 2) }, 1)),
        _ => Err(Error::MissingUnitData(format!("no fundamental unit stored for {name}"))),
    }
}

/// Largest k ≤ max with |x - y| ≤ 10^{-k}.
pub fn decimal_agreement(x: &Real, y: &Real, max: i64) -> i64 {
    let bits = x.bits();
    let mut k = 0;
    while k < max {
        let tol = Real::from_rational(
            &BigRational::new(BigInt::from(1), num_traits::pow(BigInt::from(10), (k + 1) as usize)),
            bits,
        );
        if !x.within(y, &tol) {
            break;
        }
        k += 1;
    }
    k
}

/// L(χ,1)·√D / (2h log ε) for an even real quadratic χ of conductor D.
pub fn class_number_ratio(name: &str, bits: u32) -> Result<Real> {
    let chi = DirichletData::builtin(name)?;
    let (eps, h) = real_quadratic_data(name)?;
    let l = l_value_at_one(&chi, bits)?;
    let (log_eps, _) = eps.log_abs_pair(bits)?;
    let sqrt_d = Real::from_i64(eps.disc, bits).sqrt()?;
    let den = log_eps.mul_int(&BigInt::from(2 * h));
    l.re.mul(&sqrt_d).div(&den)
}

/// Kubota-Leopoldt interpolation of θ^DR over the η grid, and the class number
/// formula for the real quadratic characters.
pub fn leopoldt_suite(params: &LeopoldtParams, policy: SeedPolicy) -> Result<SuiteReport> {
    let chi = params.character.resolve()?;
    let ring = even_ring(&chi, params.p, params.precision, policy)?;
    let dr = DeligneRibetMeasure::new(&chi, &ring, params.m_max, params.regularizer)?;
    let etas = etas_with_conductors(params.p, &params.conductors);
    let mut checks = verify_interpolation(&dr, &etas, &params.ns)?;
    let mut notes = BTreeMap::new();
    notes.insert("regularizer".into(), dr.regularizer().to_string());
    for name in &params.real_quadratic {
        let r = class_number_ratio(name, params.bits)?;
        let one = Real::one(params.bits);
        notes.insert(format!("error_bound_log2[{name}]"), r.err_log2().to_string());
        checks.push(Check::new(
            format!("class number formula [{name}]"),
            r.to_decimal(50),
            "1",
            decimal_agreement(&r, &one, 60),
            40,
        ));
    }
    Ok(SuiteReport {
        suite: "leopoldt".into(),
        params: serde_json::to_value(params).unwrap(),
        checks,
        notes,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExParams {
    pub p: u64,
    pub character: CharSpec,
    pub precision: u32,
    pub m_max: u32,
    pub conductors: Vec<u32>,
    pub regularizer: Option<u64>,
    pub bits: u32,
    /// W_p^+ in the JSON form of `PStabilization`; defaults to the σ_p-eigenline.
    pub stabilization: Option<Value>,
}

impl Default for ExParams {
    fn default() -> Self {
        ExParams {
            p: 5,
            character: CharSpec::builtin("mod12_quadratic"),
            precision: 14,
            m_max: 7,
            conductors: vec![0, 2],
            regularizer: None,
            bits: 128,
            stabilization: None,
        }
    }
}

/// Leopoldt's formula and the EX identity for the even character, stabilized by σ_p.
pub fn ex_suite(params: &ExParams, policy: SeedPolicy) -> Result<SuiteReport> {
    let chi = params.character.resolve()?;
    let ring = even_ring(&chi, params.p, params.precision, policy)?;
    let dr = DeligneRibetMeasure::new(&chi, &ring, params.m_max, params.regularizer)?;
    let stab = match &params.stabilization {
        Some(v) => PStabilization::from_json(v)?,
        None => PStabilization::pure(vec![chi.value(params.p as i64)], vec![0])?,
    };
    let rep = verify_ex(&dr, &stab, &etas_with_conductors(params.p, &params.conductors), params.bits)?;
    let mut notes = BTreeMap::new();
    notes.insert(
        "matched_constant".into(),
        rep.matched_constant.clone().unwrap_or_else(|| "none".into()),
    );
    notes.insert("regularizer".into(), dr.regularizer().to_string());
    Ok(SuiteReport {
        suite: "ex".into(),
        params: serde_json::to_value(params).unwrap(),
        checks: rep.checks,
        notes,
    })
}

/// A p-unit of an imaginary quadratic field and the coset representatives of ker χ.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UnitData {
    pub element: QuadraticSpec,
    pub group: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub disc: i64,
    pub a: i64,
    pub b: i64,
    pub den: i64,
    pub p: u64,
    pub sqrt_residue: u64,
}

impl QuadraticSpec {
    pub fn element(&self) -> QuadraticElement {
        QuadraticElement {
            disc: self.disc,
            a: self.a,
            b: self.b,
            den: self.den,
            p: self.p,
            sqrt_residue: self.sqrt_residue,
        }
    }
}

impl UnitData {
    /// α = (3 + √-11)/2 of norm 5, with √-11 ≡ 2 mod 5.
    pub fn mod11_default() -> Self {
        UnitData {
            element: QuadraticSpec { disc: -11, a: 3, b: 1, den: 2, p: 5, sqrt_residue: 2 },
            group: vec![1, 10],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EzcParams {
    pub p: u64,
    pub character: CharSpec,
    pub precision: u32,
    pub m_max: u32,
    pub regularizer: Option<u64>,
    pub bits: u32,
    pub unit: Option<UnitData>,
}

impl Default for EzcParams {
    fn default() -> Self {
        EzcParams {
            p: 5,
            character: CharSpec::builtin("mod11_odd"),
            precision: 12,
            m_max: 4,
            regularizer: None,
            bits: 128,
            unit: Some(UnitData::mod11_default()),
        }
    }
}

/// Ring R(d, 0) for the odd case: d = lcm(order χ, p - 1).
pub fn odd_ring(chi: &DirichletData, p: u64, precision: u32, policy: SeedPolicy) -> Result<Arc<LocalRing>> {
    if chi.modulus().is_multiple_of(p) {
        return Err(Error::RamifiedAtP);
    }
    let d = chi.order().lcm(&(p - 1));
    Ok(LocalRing::new(&base_ring(p, d, precision, policy)?, 0))
}

/// The trivial-zero derivative of θ for an odd χ against Gross's 𝓛-invariant.
pub fn ezc_suite(params: &EzcParams, policy: SeedPolicy) -> Result<SuiteReport> {
    let chi = params.character.resolve()?;
    let ring = odd_ring(&chi, params.p, params.precision, policy)?;
    let theta = OddTheta::new(&chi, &ring, params.m_max, params.regularizer)?;
    let unit = match &params.unit {
        Some(u) => {
            let orbit = u.element.element().orbit(&chi, &ring, params.bits)?;
            Some(monomial_unit_projection(&chi, &u.group, &orbit)?)
        }
        None => None,
    };
    let checks = verify_ezc_gross(&theta, unit.as_ref(), &ring)?;
    let mut notes = BTreeMap::new();
    notes.insert("regularizer".into(), theta.even_measure().regularizer().to_string());
    if let Some(u) = &unit {
        let ord = u.unit.ord_exact().as_rational().map(|q| q.to_string());
        notes.insert("unit_ord_p".into(), ord.unwrap_or_else(|| "irrational".into()));
    }
    Ok(SuiteReport {
        suite: "ezc".into(),
        params: serde_json::to_value(params).unwrap(),
        checks,
        notes,
    })
}

pub fn to_json(rep: &SuiteReport) -> Value {
    json!({
        "suite": rep.suite,
        "params": rep.params,
        "pass": rep.pass(),
        "checks": rep.checks,
        "notes": rep.notes,
    })
}
