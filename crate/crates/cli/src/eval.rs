use std::path::Path;

use iwasawa_core::characters::DirichletData;
use iwasawa_core::cyclofield::{FiniteOrderCharacter, LocalElem, SeedPolicy};
use iwasawa_core::lfunctions::{interpolation_value, DeligneRibetMeasure, OddTheta};
use iwasawa_core::padic::PadicValue;
use iwasawa_core::stark::{complex_regulator, is_admissible, l_invariant, padic_regulator, Admissibility};
use iwasawa_core::suites::{even_ring, odd_ring, CharSpec};
use iwasawa_core::Error;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::regdata::{self, parse_rational};
use crate::CliError;

/// Human-readable text for stdout plus the same content as JSON for `--out`.
pub struct Outcome {
    pub text: String,
    pub json: Value,
}

pub struct EvalArgs {
    pub p: u64,
    pub precision: u32,
    pub m_max: u32,
    pub character: CharSpec,
    pub s: Option<String>,
}

fn compute(e: Error) -> CliError {
    CliError::Compute(e.to_string())
}

fn character(spec: &CharSpec) -> Result<DirichletData, CliError> {
    spec.resolve().map_err(|e| CliError::Config(format!("bad character: {e}")))
}

fn show(x: &LocalElem) -> String {
    match x.to_padic() {
        Ok(v) => v.to_string(),
        Err(_) => x.to_string(),
    }
}

/// L_p(χ, s) for an even χ, with the Bernoulli value alongside when s = 1 - n ≤ 0.
pub fn lp(a: &EvalArgs, policy: SeedPolicy) -> Result<Outcome, CliError> {
    let chi = character(&a.character)?;
    if !chi.is_even() {
        return Err(CliError::Config(format!("{} is odd; L_p vanishes identically", chi.label())));
    }
    let s_text = a.s.as_deref().ok_or_else(|| CliError::Config("eval lp needs --s".into()))?;
    let s = parse_rational(s_text)?;
    if (s.denom() % a.p).is_zero() {
        return Err(CliError::Config(format!("s = {s} is not in Z_{}", a.p)));
    }
    let ring = even_ring(&chi, a.p, a.precision, policy).map_err(compute)?;
    let dr = DeligneRibetMeasure::new(&chi, &ring, a.m_max, None).map_err(compute)?;
    let sp = if s.is_zero() {
        PadicValue::exact_zero(a.p)
    } else {
        PadicValue::from_rational(a.p, &s, a.precision as i64)
    };
    let v = dr.lp_eval(&sp).map_err(compute)?;
    let name = chi.label().to_string();
    let mut text = format!("L_p({name}, {s}) at p = {} : {}\n", a.p, show(&v.value));
    text.push_str(&format!("certified to O({}^{})\n", a.p, v.certificate));
    let mut out = json!({
        "object": "lp",
        "character": name,
        "p": a.p,
        "s": s.to_string(),
        "value": show(&v.value),
        "certificate": v.certificate,
        "regularizer": dr.regularizer(),
    });
    if s.is_integer() && !s.is_positive() {
        let n = (num_bigint::BigInt::from(1) - s.to_integer()).to_string().parse::<u32>().map_err(|_| CliError::Config("s too large".into()))?;
        let psi = dr.twisted_character(&FiniteOrderCharacter::trivial(a.p), n as i64);
        let target = interpolation_value(&psi, n, a.p).map_err(compute)?;
        let local = target.to_local(v.value.ring()).map_err(compute)?;
        let residual = v.value.residual_valuation(&local);
        let exact = target
            .as_rational()
            .map(|q| q.to_string())
            .unwrap_or_else(|| serde_json::to_string(&target.to_json()).unwrap());
        text.push_str(&format!("-(1 - psi(p) p^{}) B_{{{n},psi}}/{n} = {exact}  (psi = chi omega^-{n})\n", n - 1));
        text.push_str(&format!("residual valuation: {residual}\n"));
        out["bernoulli"] = json!(exact);
        out["residual_valuation"] = json!(residual);
    }
    Ok(Outcome { text, json: out })
}

/// The measure θ in O[Γ_m], serialized level by level.
pub fn measure(a: &EvalArgs, policy: SeedPolicy) -> Result<Outcome, CliError> {
    let chi = character(&a.character)?;
    let (kind, c, mu) = if chi.is_even() {
        let ring = even_ring(&chi, a.p, a.precision, policy).map_err(compute)?;
        let dr = DeligneRibetMeasure::new(&chi, &ring, a.m_max, None).map_err(compute)?;
        ("theta_dr", dr.regularizer(), dr.theta().map_err(compute)?)
    } else {
        let ring = odd_ring(&chi, a.p, a.precision, policy).map_err(compute)?;
        let th = OddTheta::new(&chi, &ring, a.m_max, None).map_err(compute)?;
        ("theta_odd", th.even_measure().regularizer(), th.measure().map_err(compute)?)
    };
    let out = json!({
        "object": "measure",
        "kind": kind,
        "character": chi.to_json(),
        "regularizer": c,
        "measure": mu.to_json(),
    });
    let text = serde_json::to_string_pretty(&out).unwrap() + "\n";
    Ok(Outcome { text, json: out })
}

pub fn regulator(data: Option<&Path>, side: &str, policy: SeedPolicy) -> Result<Outcome, CliError> {
    let d = regdata::load(data)?.prepare(policy)?;
    match side {
        "p" => {
            let p = d.ring.p();
            let r = padic_regulator(&d.stab, &d.input, &d.ring).map_err(compute)?;
            match is_admissible(&d.stab, &d.input, &d.ring) {
                Admissibility::Admissible { valuation } => Ok(Outcome {
                    text: format!("R_p = {}\nvaluation: {valuation}\nadmissible: yes\n", show(&r)),
                    json: json!({"object": "regulator", "side": "p", "value": show(&r), "valuation": valuation, "admissible": true}),
                }),
                Admissibility::Unknown { zero_at } => Ok(Outcome {
                    text: format!("R_p: zero at precision O({p}^{zero_at})\nadmissible: unknown\n"),
                    json: json!({"object": "regulator", "side": "p", "zero_at": zero_at, "admissible": "unknown"}),
                }),
            }
        }
        "inf" => match complex_regulator(&d.input, d.bits) {
            Ok(z) => {
                let (re, im) = (z.re.to_decimal(40), z.im.to_decimal(40));
                let err = z.re.err_log2().max(z.im.err_log2());
                Ok(Outcome {
                    text: format!("R_inf = {re} + {im} i\nerror bound: 2^{err}\n"),
                    json: json!({"object": "regulator", "side": "inf", "re": re, "im": im, "error_bound_log2": err, "bits": d.bits}),
                })
            }
            Err(Error::SingularWithinBound) => Ok(Outcome {
                text: format!("R_inf: zero within the error bound at {} bits\n", d.bits),
                json: json!({"object": "regulator", "side": "inf", "zero_within_bound": true, "bits": d.bits}),
            }),
            Err(e) => Err(compute(e)),
        },
        other => Err(CliError::Config(format!("--side must be p or inf, got {other:?}"))),
    }
}

pub fn linv(data: Option<&Path>, policy: SeedPolicy) -> Result<Outcome, CliError> {
    let d = regdata::load(data)?.prepare(policy)?;
    let e = d.stab.e();
    let l = l_invariant(&d.stab, &d.input.columns, &d.psi_prime, &d.ring).map_err(compute)?;
    let mut text = format!("e = {e}\n");
    let value = if e == 0 && l.value.residual_valuation(&d.ring.one()) >= l.value.precision() {
        "1".to_string()
    } else {
        show(&l.value)
    };
    text.push_str(&format!("L-invariant: {value}\n"));
    let mut out = l.to_json();
    out["object"] = json!("linv");
    out["e"] = json!(e);
    out["value_display"] = json!(value);
    Ok(Outcome { text, json: out })
}
