//! Coleman power series, the operator 𝓛 and the Coleman map.
//!
//! Coleman series are supplied in closed form as products of atoms
//! (ξ(1+T)^x - 1)^e with ξ ∈ μ_d and x ∈ Z_p^×, times a root of unity and a
//! power of (1+T). This family is stable under φ, under the Γ_cyc action and
//! under products, and its values at ζ_{p^n} - 1 are exact.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::arith::{inv_mod_u64, modp, pow_big};
use crate::cyclofield::{
    e_eta_project, gauss_sum_local, valuation_in_uniformizers, BaseRing, FiniteOrderCharacter,
    LocalElem, LocalRing,
};
use crate::error::{Error, Result};
use crate::measures::{FractionalMeasure, IwasawaMeasure};
use crate::padic::PadicValue;
use crate::report::Check;
use crate::series::{lift_into, PowerSeries};

/// (ζ_d^xi (1+T)^x - 1)^e.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub xi: u64,
    pub x: BigInt,
    pub e: i64,
}

#[derive(Clone, Debug)]
pub struct ClosedForm {
    p: u64,
    d: u64,
    /// Exponents x are kept modulo p^xprec.
    xprec: u32,
    pub torsion: u64,
    pub cyc_power: BigInt,
    pub atoms: Vec<Atom>,
}

impl ClosedForm {
    pub fn one(base: &BaseRing) -> Self {
        ClosedForm {
            p: base.p(),
            d: base.d(),
            xprec: base.precision() + 16,
            torsion: 0,
            cyc_power: BigInt::zero(),
            atoms: Vec::new(),
        }
    }

    fn xmod(&self) -> BigInt {
        pow_big(self.p, self.xprec)
    }

    pub fn atom(base: &BaseRing, xi: u64, x: &BigInt, e: i64) -> Self {
        let mut c = Self::one(base);
        let x = modp(x, &c.xmod());
        assert!(!x.is_multiple_of(&BigInt::from(c.p)), "atom exponent must be a p-adic unit");
        c.atoms.push(Atom {
            xi: xi % c.d,
            x,
            e,
        });
        c
    }

    /// ((1+T)^a - 1)/T up to the unit T/((1+T) - 1) = 1: the series of (ζ_n^a - 1)/(ζ_n - 1).
    pub fn cyclotomic_unit(base: &BaseRing, a: i64) -> Self {
        Self::atom(base, 0, &BigInt::from(a), 1).mul(&Self::atom(base, 0, &BigInt::one(), -1))
    }

    /// T, the series of (ζ_n - 1).
    pub fn uniformizer(base: &BaseRing) -> Self {
        Self::atom(base, 0, &BigInt::one(), 1)
    }

    /// ξ(1+T) - 1 for ξ = ζ_d^k ≠ 1: the series of φ^{-n}(ξ)ζ_n - 1.
    pub fn shifted_unit(base: &BaseRing, k: u64) -> Self {
        Self::atom(base, k, &BigInt::one(), 1)
    }

    /// The constant root of unity ζ_d^k.
    pub fn torsion(base: &BaseRing, k: u64) -> Self {
        let mut c = Self::one(base);
        c.torsion = k % c.d;
        c
    }

    /// (1+T)^c, the series of (ζ_n^c).
    pub fn cyclotomic_power(base: &BaseRing, c: i64) -> Self {
        let mut s = Self::one(base);
        s.cyc_power = modp(&BigInt::from(c), &s.xmod());
        s
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.torsion = (self.torsion + o.torsion) % self.d;
        out.cyc_power = modp(&(&self.cyc_power + &o.cyc_power), &self.xmod());
        out.atoms.extend(o.atoms.iter().cloned());
        out.simplify();
        out
    }

    pub fn pow(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.torsion = (self.torsion as i128 * k as i128).rem_euclid(self.d as i128) as u64;
        out.cyc_power = modp(&(&self.cyc_power * k), &self.xmod());
        for a in out.atoms.iter_mut() {
            a.e *= k;
        }
        out.simplify();
        out
    }

    pub fn inv(&self) -> Self {
        self.pow(-1)
    }

    fn simplify(&mut self) {
        let mut merged: Vec<Atom> = Vec::new();
        for a in self.atoms.drain(..) {
            if let Some(b) = merged.iter_mut().find(|b| b.xi == a.xi && b.x == a.x) {
                b.e += a.e;
            } else {
                merged.push(a);
            }
        }
        merged.retain(|a| a.e != 0);
        merged.sort_by(|a, b| (a.xi, &a.x).cmp(&(b.xi, &b.x)));
        self.atoms = merged;
    }

    /// T-adic order.
    pub fn order(&self) -> i64 {
        self.atoms.iter().filter(|a| a.xi == 0).map(|a| a.e).sum()
    }

    /// φ applied to coefficients: ξ ↦ ξ^p.
    pub fn frobenius(&self) -> Self {
        let mut out = self.clone();
        out.torsion = self.torsion * self.p % self.d;
        for a in out.atoms.iter_mut() {
            a.xi = a.xi * self.p % self.d;
        }
        out.simplify();
        out
    }

    /// f((1+T)^c - 1): the series of σ_c v for c ∈ Z_p^×.
    pub fn twist(&self, c: &BigInt) -> Self {
        let m = self.xmod();
        let mut out = self.clone();
        out.cyc_power = modp(&(&self.cyc_power * c), &m);
        for a in out.atoms.iter_mut() {
            a.x = modp(&(&a.x * c), &m);
        }
        out.simplify();
        out
    }

    /// Product over δ ∈ Δ of the twists by the Teichmüller lifts.
    pub fn delta_norm(&self) -> Self {
        let mut out = ClosedForm {
            atoms: Vec::new(),
            torsion: 0,
            cyc_power: BigInt::zero(),
            ..self.clone()
        };
        for w in teichmuller_reps(self.p, self.xprec) {
            out = out.mul(&self.twist(&w));
        }
        out
    }

    fn x_mod(&self, x: &BigInt, pn: u64) -> u64 {
        (x % BigInt::from(pn)).try_into().unwrap()
    }

    /// f(ζ_{p^n} - 1) in R(d,n), n ≥ 1.
    pub fn value_at_zeta(&self, ring: &Arc<LocalRing>) -> Result<LocalElem> {
        let n = ring.level();
        assert!(n >= 1);
        let pn = ring.p_power();
        let mut val = ring
            .zeta_d(self.torsion)
            .mul_zeta_power(self.x_mod(&self.cyc_power, pn));
        let one = ring.one();
        let mut trivial: Vec<&Atom> = Vec::new();
        for a in &self.atoms {
            if a.xi == 0 {
                trivial.push(a);
                continue;
            }
            let t = ring.zeta_d(a.xi).mul_zeta_power(self.x_mod(&a.x, pn)).sub(&one);
            val = val.mul(&int_pow(&t, a.e)?);
        }
        if let Some(r) = trivial.first() {
            let xr = self.x_mod(&r.x, pn);
            let xr_inv = inv_mod_u64(xr, pn).unwrap();
            for a in &trivial {
                let k = (self.x_mod(&a.x, pn) as u128 * xr_inv as u128 % pn as u128) as u64;
                let k = if k == 0 { pn } else { k };
                let mut coeffs = vec![vec![BigInt::zero(); ring.f()]; pn as usize];
                for j in 0..k {
                    coeffs[(xr as u128 * j as u128 % pn as u128) as usize][0] += 1;
                }
                let ratio = ring.from_zeta_coeffs(&coeffs);
                val = val.mul(&int_pow(&ratio, a.e)?);
            }
            let ord = self.order();
            if ord != 0 {
                let base = ring.zeta_pn(xr).sub(&one);
                val = val.mul(&int_pow(&base, ord)?);
            }
        }
        Ok(val)
    }

    /// f(0) in R(d,0); requires T-order 0.
    pub fn value_at_zero(&self, ring: &Arc<LocalRing>) -> Result<LocalElem> {
        if self.order() != 0 {
            return Err(Error::DomainError("f(0) vanishes or has a pole".into()));
        }
        let mut val = ring.zeta_d(self.torsion);
        for a in &self.atoms {
            let t = if a.xi == 0 {
                ring.from_int(&a.x)
            } else {
                ring.zeta_d(a.xi).sub(&ring.one())
            };
            val = val.mul(&int_pow(&t, a.e)?);
        }
        Ok(val)
    }

    /// f(ζ_p^i (1+T) - 1) as T^order times a series with nonzero constant term.
    /// The ring must have level ≥ 1 unless i = 0.
    pub fn series_at(&self, ring: &Arc<LocalRing>, i: u64, n: usize) -> Result<(i64, PowerSeries)> {
        let p = self.p;
        let lvl = ring.level();
        let root = |k: u64| -> LocalElem {
            if lvl == 0 {
                ring.one()
            } else {
                ring.zeta_pn((k % p) * p.pow(lvl - 1))
            }
        };
        let pm = BigInt::from(p);
        let mut order = 0i64;
        let mut acc = PowerSeries::one(ring, n);
        let cp: u64 = (&self.cyc_power % &pm).try_into().unwrap();
        let c0 = ring.zeta_d(self.torsion).mul(&root(i * cp));
        acc = acc
            .mul(&PowerSeries::one_plus_t_pow(ring, &self.cyc_power, n))
            .scale(&c0);
        for a in &self.atoms {
            let xr: u64 = (&a.x % &pm).try_into().unwrap();
            let lead = ring.zeta_d(a.xi).mul(&root(i * xr));
            // one extra term so that dividing by T keeps n correct coefficients
            let mut s = PowerSeries::one_plus_t_pow(ring, &a.x, n + 1).scale(&lead);
            let mut cs = s.coeffs().to_vec();
            cs[0] = s.coeff(0).sub(&ring.one());
            s = PowerSeries::new(ring, cs, n + 1);
            if a.xi == 0 && (i * xr).is_multiple_of(p) {
                let (k, rest) = s.split_t();
                debug_assert_eq!(k, 1);
                order += a.e;
                s = rest;
            }
            s = PowerSeries::new(ring, s.coeffs()[..n].to_vec(), n);
            acc = acc.mul(&s.powi(a.e)?);
        }
        Ok((order, acc))
    }

    /// φ(f)((1+T)^p - 1) as T^order times a series.
    pub fn frobenius_composed(&self, ring: &Arc<LocalRing>, n: usize) -> Result<(i64, PowerSeries)> {
        let mut g = self.frobenius();
        let pb = BigInt::from(self.p);
        g.cyc_power = &g.cyc_power * &pb;
        for a in g.atoms.iter_mut() {
            a.x = &a.x * &pb;
        }
        g.series_at(ring, 0, n)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "torsion": self.torsion,
            "cyc_power": self.cyc_power.to_string(),
            "atoms": self.atoms.iter().map(|a| json!({"xi": a.xi, "x": a.x.to_string(), "e": a.e})).collect::<Vec<_>>(),
        })
    }
}

fn int_pow(x: &LocalElem, e: i64) -> Result<LocalElem> {
    if e >= 0 {
        Ok(x.pow(e as u64))
    } else {
        Ok(x.inv()?.pow((-e) as u64))
    }
}

/// Teichmüller lifts of 1..p-1 modulo p^prec.
pub fn teichmuller_reps(p: u64, prec: u32) -> Vec<BigInt> {
    (1..p)
        .map(|a| {
            PadicValue::teichmuller(p, &BigInt::from(a), prec as i64)
                .unwrap()
                .residue(prec)
                .unwrap()
        })
        .collect()
}

/// A Coleman power series given either in closed form or as a truncated series.
#[derive(Clone, Debug)]
pub enum ColemanSeries {
    Closed(ClosedForm),
    Truncated {
        series: PowerSeries,
        exact_polynomial: bool,
    },
}

/// (v_n) for 1 ≤ n ≤ depth, v_n ∈ R(d,n), optionally with its Coleman series.
#[derive(Clone, Debug)]
pub struct NormCoherentSequence {
    base: Arc<BaseRing>,
    entries: Vec<LocalElem>,
    pub series: Option<ClosedForm>,
}

impl NormCoherentSequence {
    pub fn from_entries(base: &Arc<BaseRing>, entries: Vec<LocalElem>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if e.ring().level() as usize != i + 1 {
                return Err(Error::LevelMismatch {
                    expected: i as u32 + 1,
                    found: e.ring().level(),
                });
            }
        }
        Ok(NormCoherentSequence {
            base: base.clone(),
            entries,
            series: None,
        })
    }

    /// v_n = φ^{-n}(f(ζ_n - 1)).
    pub fn from_closed_form(base: &Arc<BaseRing>, f: &ClosedForm, depth: u32) -> Result<Self> {
        let entries = (1..=depth)
            .map(|n| {
                let r = LocalRing::new(base, n);
                Ok(f.value_at_zeta(&r)?.frobenius_pow(-(n as i64)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NormCoherentSequence {
            base: base.clone(),
            entries,
            series: Some(f.clone()),
        })
    }

    pub fn base(&self) -> &Arc<BaseRing> {
        &self.base
    }
    pub fn depth(&self) -> u32 {
        self.entries.len() as u32
    }

    pub fn entry(&self, n: u32) -> Result<&LocalElem> {
        if n == 0 || n > self.depth() {
            return Err(Error::InsufficientDepth {
                have: self.depth(),
                need: n,
            });
        }
        Ok(&self.entries[n as usize - 1])
    }

    /// v_0 = N(v_1).
    pub fn entry_zero(&self) -> Result<LocalElem> {
        self.entry(1)?.norm_down()
    }

    pub fn with_series(mut self, f: ClosedForm) -> Self {
        self.series = Some(f);
        self
    }

    /// min_n v(N(v_{n+1}) - v_n).
    pub fn norm_coherence_residual(&self) -> Result<i64> {
        let mut r = i64::MAX;
        for w in self.entries.windows(2) {
            r = r.min(w[1].norm_down()?.residual_valuation(&w[0]));
        }
        Ok(r)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let depth = self.depth().min(o.depth()) as usize;
        NormCoherentSequence {
            base: self.base.clone(),
            entries: (0..depth).map(|i| self.entries[i].mul(&o.entries[i])).collect(),
            series: match (&self.series, &o.series) {
                (Some(a), Some(b)) => Some(a.mul(b)),
                _ => None,
            },
        }
    }

    /// γ·v for χ_cyc(γ) = c.
    pub fn twist(&self, c: &BigInt) -> Self {
        NormCoherentSequence {
            base: self.base.clone(),
            entries: self
                .entries
                .iter()
                .map(|v| {
                    let pn = v.ring().p_power();
                    let b: u64 = modp(c, &BigInt::from(pn)).try_into().unwrap();
                    v.galois_cyc(b)
                })
                .collect(),
            series: self.series.as_ref().map(|f| f.twist(c)),
        }
    }

    pub fn frobenius(&self) -> Self {
        NormCoherentSequence {
            base: self.base.clone(),
            entries: self.entries.iter().map(|v| v.frobenius()).collect(),
            series: self.series.as_ref().map(|f| f.frobenius()),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "p": self.base.p(),
            "d": self.base.d(),
            "depth": self.depth(),
            "entries": self.entries.iter().map(|e| {
                assert_eq!(e.denominator_power(), 0);
                e.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(base: &Arc<BaseRing>, v: &Value) -> Result<Self> {
        let bad = |s: &str| Error::Parse(s.to_string());
        if v["p"].as_u64() != Some(base.p()) || v["d"].as_u64() != Some(base.d()) {
            return Err(bad("p or d does not match the coefficient ring"));
        }
        let depth = v["depth"].as_u64().ok_or_else(|| bad("depth"))? as u32;
        let entries = v["entries"].as_array().ok_or_else(|| bad("entries"))?;
        if entries.len() != depth as usize {
            return Err(bad("entries length differs from depth"));
        }
        let mut out = Vec::new();
        for (i, e) in entries.iter().enumerate() {
            let ring = LocalRing::new(base, i as u32 + 1);
            let cs = e
                .as_array()
                .ok_or_else(|| bad("entry"))?
                .iter()
                .map(|c| {
                    c.as_str()
                        .ok_or_else(|| bad("coefficient"))?
                        .parse::<BigInt>()
                        .map_err(|e| Error::Parse(e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            let f = ring.f();
            if cs.len() != ring.ramification() * f {
                return Err(bad("entry has the wrong number of coefficients"));
            }
            let blocks: Vec<Vec<BigInt>> = cs.chunks(f).map(|c| c.to_vec()).collect();
            out.push(ring.from_zeta_coeffs(&blocks));
        }
        Self::from_entries(base, out)
    }
}

/// 𝓛(f) = (1/p) log(f^p / φ(f)((1+T)^p - 1)) for a unit series f over R(d,0).
pub fn coleman_operator(f: &PowerSeries) -> Result<PowerSeries> {
    let ring = f.ring().clone();
    if ring.level() != 0 {
        return Err(Error::DomainError("series must have coefficients in R(d,0)".into()));
    }
    if !f.coeff(0).is_unit() {
        return Err(Error::DomainError("constant term is not a unit".into()));
    }
    let n = f.len();
    let p = ring.p();
    let mut s = PowerSeries::one_plus_t_pow(&ring, &BigInt::from(p), n);
    s = s.sub(&PowerSeries::one(&ring, n));
    let denom = f.frobenius().compose(&s)?;
    let g = f.pow(p).mul(&denom.inverse()?);
    let l = g.log()?;
    let out = PowerSeries::new(
        &ring,
        l.coeffs().iter().map(|c| c.div_p_power(1)).collect(),
        n,
    );
    if !out.is_integral() {
        return Err(Error::IntegralityViolation);
    }
    Ok(out)
}

/// 𝓛(f) with a guarantee of absolute precision `m` on every coefficient.
pub fn coleman_operator_checked(f: &PowerSeries, m: i64) -> Result<PowerSeries> {
    let out = coleman_operator(f)?;
    if out.precision() < m {
        return Err(Error::TruncationTooShort(format!(
            "precision {} below requested {m}",
            out.precision()
        )));
    }
    Ok(out.truncate(m))
}

/// f(c + sT) for a truncated series, Horner in T.
fn taylor_shift(f: &PowerSeries, c: &LocalElem, s: &LocalElem) -> PowerSeries {
    let ring = c.ring().clone();
    let n = f.len();
    let lin = PowerSeries::new(&ring, vec![c.clone(), s.clone()], n);
    let mut acc = PowerSeries::zero(&ring, n);
    for k in (0..n).rev() {
        acc = acc.mul(&lin);
        let ck = lift_into(f.coeff(k), &ring);
        let mut cs = acc.coeffs().to_vec();
        cs[0] = cs[0].add(&ck);
        acc = PowerSeries::new(&ring, cs, n);
    }
    acc
}

/// Checks f(ζ_n - 1) = φ^n(v_n) for every stored level and the distribution
/// relation Π_i f(ζ_1^i(1+T) - 1) = φ(f)((1+T)^p - 1) modulo T^N.
pub fn verify_coleman_series(f: &ColemanSeries, v: &NormCoherentSequence, n_trunc: usize) -> Result<Vec<Check>> {
    let base = v.base().clone();
    let p = base.p();
    let wp = base.precision() as i64;
    let mut checks = Vec::new();
    for n in 1..=v.depth() {
        let ring = LocalRing::new(&base, n);
        let vn = v.entry(n)?.frobenius_pow(n as i64);
        let fv = match f {
            ColemanSeries::Closed(cf) => cf.value_at_zeta(&ring)?,
            ColemanSeries::Truncated {
                series,
                exact_polynomial,
            } => series.eval(&ring.zeta_pn(1).sub(&ring.one()), *exact_polynomial),
        };
        let cert = fv.precision().min(vn.precision()).min(wp);
        checks.push(Check::new(
            format!("value_at_level_{n}"),
            &fv,
            &vn,
            fv.residual_valuation(&vn),
            cert,
        ));
    }
    let r1 = LocalRing::new(&base, 1);
    let (lhs_ord, lhs, rhs_ord, rhs, cap) = match f {
        ColemanSeries::Closed(cf) => {
            let mut ord = 0i64;
            let mut acc = PowerSeries::one(&r1, n_trunc);
            for i in 0..p {
                let (o, s) = cf.series_at(&r1, i, n_trunc)?;
                ord += o;
                acc = acc.mul(&s);
            }
            let (ro, rs) = cf.frobenius_composed(&r1, n_trunc)?;
            (ord, acc, ro, rs, wp)
        }
        ColemanSeries::Truncated {
            series,
            exact_polynomial,
        } => {
            let mut acc = PowerSeries::one(&r1, n_trunc);
            for i in 0..p {
                let z = r1.zeta_pn(i);
                acc = acc.mul(&taylor_shift(series, &z.sub(&r1.one()), &z));
            }
            let mut s = PowerSeries::one_plus_t_pow(&r1, &BigInt::from(p), n_trunc);
            s = s.sub(&PowerSeries::one(&r1, n_trunc));
            let lifted = PowerSeries::new(
                &r1,
                series.coeffs().iter().map(|c| lift_into(&c.frobenius(), &r1)).collect(),
                n_trunc,
            );
            let rhs = lifted.compose(&s)?;
            // Each shift has v(ζ^i - 1) = 1/(p-1), so the dropped tail is O(p^{N/(p-1)}).
            let cap = if *exact_polynomial {
                wp
            } else {
                (series.len() as i64) / (p as i64 - 1)
            };
            let (lo, ls) = acc.split_t();
            let (ro, rs) = rhs.split_t();
            (lo as i64, ls, ro as i64, rs, cap)
        }
    };
    checks.push(Check::flag(
        "distribution_order",
        lhs_ord == rhs_ord,
        format!("{lhs_ord} vs {rhs_ord}"),
    ));
    let keep = n_trunc.saturating_sub(lhs_ord.max(0) as usize);
    let lhs = PowerSeries::new(&r1, lhs.coeffs()[..keep].to_vec(), keep);
    let rhs = PowerSeries::new(&r1, rhs.coeffs()[..keep].to_vec(), keep);
    let cert = cap.min(lhs.precision()).min(rhs.precision());
    checks.push(Check::new(
        "distribution_relation",
        format!("{} coefficients", keep),
        "",
        lhs.residual_valuation(&rhs).min(wp),
        cert,
    ));
    Ok(checks)
}

/// L(f)(ζ_n - 1) for n = 0..=top, the n-th in R(d,n).
fn amice_values(f: &ClosedForm, base: &Arc<BaseRing>, top: u32) -> Result<Vec<LocalElem>> {
    let r0 = LocalRing::new(base, 0);
    let f0 = f.value_at_zero(&r0)?;
    if !f0.is_unit() {
        return Err(Error::DomainError("not a unit sequence".into()));
    }
    let mut logs = vec![f0.log_iw()?];
    let mut out = vec![logs[0].sub(&logs[0].frobenius().div_p_power(1))];
    for n in 1..=top {
        let ring = LocalRing::new(base, n);
        let fz = f.value_at_zeta(&ring)?;
        if !fz.is_unit() {
            return Err(Error::DomainError("not a unit sequence".into()));
        }
        let l = fz.log_iw()?;
        let prev = logs[n as usize - 1].frobenius().embed_up(&ring);
        out.push(l.sub(&prev.div_p_power(1)));
        logs.push(l);
    }
    Ok(out)
}

/// The measure λ on Z_p/p^{m+1} with Amice transform 𝓛(f).
pub fn coleman_lambda(f: &ClosedForm, base: &Arc<BaseRing>, m: u32) -> Result<Vec<LocalElem>> {
    let p = base.p();
    let top = m + 1;
    let big = p.pow(top);
    let a_vals = amice_values(f, base, top)?;
    let mut out = Vec::with_capacity(big as usize);
    for a in 0..big {
        let mut acc = a_vals[0].clone();
        for n in 1..=top {
            let pn = p.pow(n);
            let sh = (pn - a % pn) % pn;
            acc = acc.add(&a_vals[n as usize].mul_zeta_power(sh).abs_trace());
        }
        let v = acc.div_p_power(top);
        if v.denominator_power() > 0 && !v.is_zero_at_precision() {
            return Err(Error::IntegralityViolation);
        }
        out.push(v);
    }
    Ok(out)
}

/// Col(u) restricted to Γ via (p-1)^{-1} times the push-forward along Z_p^× → Γ.
pub fn coleman_measure(f: &ClosedForm, base: &Arc<BaseRing>, m: u32) -> Result<IwasawaMeasure> {
    let p = base.p();
    let lam = coleman_lambda(f, base, m)?;
    let big = p.pow(m + 1);
    let r0 = LocalRing::new(base, 0);
    let teich: Vec<u64> = teichmuller_reps(p, m + 1)
        .iter()
        .map(|w| w.try_into().unwrap())
        .collect();
    let inv_pm1 = r0.from_int(&BigInt::from(p - 1)).inv()?;
    let mut coeffs = Vec::with_capacity(p.pow(m) as usize);
    let mut g = 1u64;
    for _ in 0..p.pow(m) {
        let mut acc = r0.zero();
        for w in &teich {
            let a = (*w as u128 * g as u128 % big as u128) as usize;
            acc = acc.add(&lam[a]);
        }
        coeffs.push(acc.mul(&inv_pm1));
        g = (g as u128 * (1 + p) as u128 % big as u128) as u64;
    }
    IwasawaMeasure::new(&r0, m, coeffs)
}

pub fn coleman_map(u: &NormCoherentSequence, m: u32) -> Result<IwasawaMeasure> {
    let f = u.series.as_ref().ok_or(Error::MissingSeries)?;
    coleman_measure(f, u.base(), m)
}

/// Δ-average of log u_n.
fn delta_avg_log(un: &LocalElem) -> Result<LocalElem> {
    let ring = un.ring().clone();
    let p = ring.p();
    let l = un.log_iw()?;
    let n = ring.level();
    let mut acc = ring.zero();
    for w in teichmuller_reps(p, n) {
        let b: u64 = w.try_into().unwrap();
        acc = acc.add(&l.galois_cyc(b));
    }
    acc.div(&ring.from_int(&BigInt::from(p - 1)))
}

/// p^{n-1} g(η^{-1})^{-1} φ^n(e_η log u_n) in R(d,n).
pub fn special_value_rhs(u: &NormCoherentSequence, eta: &FiniteOrderCharacter) -> Result<LocalElem> {
    let n = eta.conductor_exponent();
    let un = u.entry(n)?;
    let ring = un.ring().clone();
    let x = delta_avg_log(un)?;
    let proj = e_eta_project(eta, &x)?.frobenius_pow(n as i64);
    // g(η^{-1}) g(η) = η(-1) p^n and η is even.
    let g = gauss_sum_local(eta, &ring)?;
    Ok(proj.mul(&g).div_p_power(1))
}

/// The special-value lemma at η; for η trivial the constant-term law
/// (1 - φ^{-1}) ∫μ = (1 - φ/p) log u_1.
pub fn special_value_check(u: &NormCoherentSequence, eta: &FiniteOrderCharacter, m: u32) -> Result<Check> {
    if eta.level() > m {
        return Err(Error::LevelUnavailable(eta.level()));
    }
    let mu = coleman_map(u, m)?;
    if eta.is_trivial() {
        let lhs = mu.total_mass();
        let lhs = lhs.sub(&lhs.frobenius_pow(-1));
        let l1 = delta_avg_log(u.entry(1)?)?.abs_trace();
        let r0 = lhs.ring().clone();
        let l1 = l1.div(&r0.from_int(&BigInt::from(r0.p() - 1)))?;
        let rhs = l1.sub(&l1.frobenius().div_p_power(1));
        let cert = lhs.precision().min(rhs.precision());
        return Ok(Check::new(
            "constant_term",
            &lhs,
            &rhs,
            lhs.residual_valuation(&rhs),
            cert,
        ));
    }
    let lhs = mu.eval_character(eta)?;
    let rhs = special_value_rhs(u, eta)?;
    let cert = lhs.precision().min(rhs.precision());
    Ok(Check::new(
        format!("special_value_eta_{}_{}", eta.conductor_exponent(), eta.generator_exponent()),
        &lhs,
        &rhs,
        lhs.residual_valuation(&rhs),
        cert,
    ))
}

/// Col^δ for a character δ of Gal(K/Q_p) with δ(φ) = β ∈ {±1}.
pub fn coleman_isotypic(u: &NormCoherentSequence, beta: i64, trivial: bool, m: u32) -> Result<IwasawaMeasure> {
    if beta != 1 && beta != -1 {
        return Err(Error::DomainError("only β = ±1 is supported".into()));
    }
    if trivial != (beta == 1) {
        return Err(Error::NotInIsotypicPart);
    }
    for n in 1..=u.depth() {
        let l = u.entry(n)?.log_iw()?;
        let fl = l.frobenius();
        let target = if beta == 1 { l.clone() } else { l.neg() };
        if fl.residual_valuation(&target) < fl.precision().min(target.precision()) {
            return Err(Error::NotInIsotypicPart);
        }
    }
    coleman_map(u, m)
}

/// (1 - β/p)/(1 - β^{-1}) log u_1 for δ nontrivial.
pub fn isotypic_constant_term(u: &NormCoherentSequence, beta: i64) -> Result<LocalElem> {
    if beta == 1 {
        return Err(Error::TrivialCharacter);
    }
    let l1 = delta_avg_log(u.entry(1)?)?.abs_trace();
    let r0 = l1.ring().clone();
    let p = r0.p() as i64;
    let l1 = l1.div(&r0.from_int(&BigInt::from(p - 1)))?;
    // (1 - β/p)/(1 - 1/β) = (p - β)β / (p(β - 1)).
    let num = (p - beta) * beta;
    let den = p * (beta - 1);
    l1.mul(&r0.from_int(&BigInt::from(num)))
        .div(&r0.from_int(&BigInt::from(den)))
}

/// a·v for a = γ_0^c - 1, as a sequence with its series.
pub fn gamma_power_minus_one(v: &NormCoherentSequence, c: u64) -> Result<NormCoherentSequence> {
    let p = v.base().p();
    let g = BigInt::from(1 + p).pow(c as u32);
    let f = v.series.as_ref().ok_or(Error::MissingSeries)?;
    let tw = v.twist(&g);
    let inv_entries = (1..=v.depth())
        .map(|n| v.entry(n)?.inv())
        .collect::<Result<Vec<_>>>()?;
    let vinv = NormCoherentSequence::from_entries(v.base(), inv_entries)?.with_series(f.inv());
    Ok(tw.mul(&vinv))
}

/// (1/a) Col(a v) with a = γ_0^c - 1, reduced.
pub fn coleman_extended(v: &NormCoherentSequence, c: u64, m: u32) -> Result<FractionalMeasure> {
    let p = v.base().p();
    if c == 0 || c.is_multiple_of(p) {
        return Err(Error::NotStabilizable);
    }
    let av = gamma_power_minus_one(v, c)?;
    if av.series.as_ref().unwrap().order() != 0 {
        return Err(Error::NotStabilizable);
    }
    let num = coleman_map(&av, m)?;
    let r0 = num.ring().clone();
    let mut s = IwasawaMeasure::zero(&r0, m);
    for j in 0..c {
        s = s.add(&IwasawaMeasure::dirac(&r0, m, j as i64));
    }
    let sinv = s.inverse_unit()?;
    Ok(FractionalMeasure::new(num.mul(&sinv), 1).reduced())
}

/// ord_p(v_1) for v_1 ∈ K.
pub fn ord_p_first(v: &NormCoherentSequence) -> Result<i64> {
    let v1 = v.entry(1)?;
    let w = valuation_in_uniformizers(v1).ok_or(Error::PrecisionExhausted(v1.precision()))?;
    let e = v1.ring().ramification() as i64;
    if w % e != 0 {
        return Err(Error::DomainError("v_1 is not in K".into()));
    }
    Ok(w / e)
}

/// (1 - 1/p) log_p(1+p)^c ord_p(v_1) in R(d,0).
pub fn extended_constant_term(v: &NormCoherentSequence, c: u64) -> Result<LocalElem> {
    let p = v.base().p();
    let r0 = LocalRing::new(v.base(), 0);
    let wp = v.base().precision() as i64;
    let l = PadicValue::from_i64(p, 1 + p as i64, wp).log_iw()?;
    let ord = ord_p_first(v)?;
    let k = BigInt::from(c as i64 * ord * (p as i64 - 1));
    Ok(r0.from_padic(&l).scale_int(&k).div_p_power(1))
}

/// Determinant of d⁺×d⁺ matrix of Coleman evaluations at η, together with
/// (p^{n-1}/g(η^{-1}))^{d⁺} Π β_i^n det(e_η log Ψ_ij,n).
pub fn wedge_coleman_det(
    psi: &[Vec<NormCoherentSequence>],
    betas: &[i64],
    eta: &FiniteOrderCharacter,
    m: u32,
) -> Result<(LocalElem, LocalElem)> {
    let dp = psi.len();
    if betas.len() != dp || psi.iter().any(|r| r.len() != dp) {
        return Err(Error::DomainError("Ψ must be square with one β per row".into()));
    }
    if eta.is_trivial() {
        return Err(Error::TrivialCharacter);
    }
    let n = eta.conductor_exponent();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for row in psi {
        let mut ra = Vec::new();
        let mut rb = Vec::new();
        for u in row {
            ra.push(coleman_map(u, m)?.eval_character(eta)?);
            let x = delta_avg_log(u.entry(n)?)?;
            rb.push(e_eta_project(eta, &x)?);
        }
        a.push(ra);
        b.push(rb);
    }
    let det_a = crate::linalg::det_local(&a)?;
    let ring = det_a.ring().clone();
    let factor = gauss_sum_local(eta, &ring)?.div_p_power(1);
    let mut det_b = crate::linalg::det_local(&b)?;
    for beta in betas {
        if beta.abs() != 1 {
            return Err(Error::DomainError("only β = ±1 is supported".into()));
        }
        det_b = det_b.mul(&factor);
        if *beta == -1 && n % 2 == 1 {
            det_b = det_b.neg();
        }
    }
    Ok((det_a, det_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclofield::SeedPolicy;

    fn base(p: u64, d: u64, prec: u32) -> Arc<BaseRing> {
        BaseRing::new(p, d, prec, SeedPolicy::Smallest).unwrap()
    }

    #[test]
    fn cyclotomic_values_match_quotients() {
        let b = base(3, 1, 12);
        let f = ClosedForm::cyclotomic_unit(&b, 2);
        for n in 1..=3 {
            let r = LocalRing::new(&b, n);
            let z = r.zeta_pn(1);
            let direct = r.zeta_pn(2).sub(&r.one()).div(&z.sub(&r.one())).unwrap();
            let v = f.value_at_zeta(&r).unwrap();
            assert!(v.residual_valuation(&direct) >= v.precision().min(direct.precision()));
        }
    }

    #[test]
    fn norm_coherence_of_families() {
        let b = base(3, 1, 12);
        for f in [
            ClosedForm::cyclotomic_unit(&b, 2),
            ClosedForm::uniformizer(&b),
            ClosedForm::cyclotomic_unit(&b, 5).delta_norm(),
        ] {
            let v = NormCoherentSequence::from_closed_form(&b, &f, 3).unwrap();
            assert!(v.norm_coherence_residual().unwrap() >= 8);
        }
        let b5 = base(5, 3, 8);
        let f = ClosedForm::shifted_unit(&b5, 1);
        let v = NormCoherentSequence::from_closed_form(&b5, &f, 2).unwrap();
        assert!(v.norm_coherence_residual().unwrap() >= 6);
    }

    #[test]
    fn operator_on_basic_series() {
        let b = base(3, 1, 14);
        let r0 = LocalRing::new(&b, 0);
        let one_plus_t = PowerSeries::from_ints(&r0, &[BigInt::one(), BigInt::one()], 12);
        assert!(coleman_operator(&one_plus_t).unwrap().is_zero());
        let c = PowerSeries::from_ints(&r0, &[BigInt::from(4)], 12);
        let lc = coleman_operator(&c).unwrap();
        let l4 = r0.from_int(&BigInt::from(4)).log_iw().unwrap();
        let expect = l4.sub(&l4.div_p_power(1));
        assert!(lc.coeff(0).residual_valuation(&expect) >= 10);
        assert!(lc.coeffs()[1..].iter().all(|x| x.is_zero_at_precision()));
    }

    #[test]
    fn distribution_relation_keeps_top_coefficient() {
        // (1+T)^6 - 1 has a T^6 term that must survive division by T at N = 6
        let b = base(3, 1, 18);
        let f = ClosedForm::cyclotomic_unit(&b, 2);
        let v = NormCoherentSequence::from_closed_form(&b, &f, 2).unwrap();
        for n in [4, 6, 7] {
            let checks = verify_coleman_series(&ColemanSeries::Closed(f.clone()), &v, n).unwrap();
            assert!(checks.iter().all(|c| c.pass), "{checks:?}");
            assert!(checks.last().unwrap().certificate > 0);
        }
    }

    #[test]
    fn measure_is_supported_on_units() {
        let b = base(3, 1, 14);
        let f = ClosedForm::cyclotomic_unit(&b, 2).delta_norm();
        let lam = coleman_lambda(&f, &b, 2).unwrap();
        for (a, l) in lam.iter().enumerate() {
            if a % 3 == 0 {
                assert!(l.is_zero_at_precision(), "λ({a}) = {l}");
            }
        }
    }

    #[test]
    fn special_values_at_p3() {
        let b = base(3, 1, 18);
        let f = ClosedForm::cyclotomic_unit(&b, 2).delta_norm();
        let u = NormCoherentSequence::from_closed_form(&b, &f, 3).unwrap();
        for eta in FiniteOrderCharacter::all_through_level(3, 2) {
            if eta.is_trivial() {
                continue;
            }
            let c = special_value_check(&u, &eta, 2).unwrap();
            assert!(c.residual_valuation >= 8, "{c:?}");
        }
    }

    #[test]
    fn raw_cyclotomic_family_via_delta_average() {
        let b = base(3, 1, 16);
        let f = ClosedForm::cyclotomic_unit(&b, 2);
        let u = NormCoherentSequence::from_closed_form(&b, &f, 3).unwrap();
        let eta = FiniteOrderCharacter::new(3, 2, 1).unwrap();
        let c = special_value_check(&u, &eta, 1).unwrap();
        assert!(c.residual_valuation >= 8, "{c:?}");
    }

    #[test]
    fn constant_term_branch() {
        let b = base(5, 3, 12);
        let f = ClosedForm::shifted_unit(&b, 1).delta_norm();
        let u = NormCoherentSequence::from_closed_form(&b, &f, 2).unwrap();
        let u0 = u.entry_zero().unwrap();
        assert!(u0.residual_valuation(&u0.ring().one()) < u0.precision());
        let c = special_value_check(&u, &FiniteOrderCharacter::trivial(5), 1).unwrap();
        assert!(c.pass, "{c:?}");
    }

    #[test]
    fn torsion_and_additivity() {
        let b = base(3, 1, 20);
        let t = ClosedForm::cyclotomic_power(&b, 4).mul(&ClosedForm::torsion(&b, 0));
        let mu = coleman_measure(&t, &b, 2).unwrap();
        assert!(mu.coeffs().iter().all(|c| c.is_zero_at_precision()));
        let f = ClosedForm::cyclotomic_unit(&b, 2);
        let m1 = coleman_measure(&f, &b, 2).unwrap();
        let m2 = coleman_measure(&f.pow(2), &b, 2).unwrap();
        assert!(m2.residual_valuation(&m1.scale_int(&BigInt::from(2))) >= 10);
        let g = BigInt::from(4);
        let tw = coleman_measure(&f.twist(&g), &b, 2).unwrap();
        let shifted = IwasawaMeasure::dirac(m1.ring(), 2, 1).mul(&m1);
        assert!(tw.residual_valuation(&shifted) >= 10);
    }

    #[test]
    fn extended_map() {
        let b = base(5, 1, 16);
        let pi = ClosedForm::uniformizer(&b).delta_norm();
        let v = NormCoherentSequence::from_closed_form(&b, &pi, 2).unwrap();
        assert_eq!(ord_p_first(&v).unwrap(), 1);
        let av = gamma_power_minus_one(&v, 1).unwrap();
        let mu = coleman_map(&av, 1).unwrap();
        let expect = extended_constant_term(&v, 1).unwrap();
        assert!(mu.total_mass().residual_valuation(&expect) >= 9);
        let e1 = coleman_extended(&v, 1, 1).unwrap();
        let e2 = coleman_extended(&v, 2, 1).unwrap();
        assert_eq!(e1.pole_order, 1);
        assert!(e1.residual_valuation(&e2) >= 9);
    }

    #[test]
    fn isotypic_minus_one() {
        let b = base(5, 3, 12);
        let v = NormCoherentSequence::from_closed_form(&b, &ClosedForm::shifted_unit(&b, 1).delta_norm(), 2).unwrap();
        let vf = v.frobenius();
        let inv = NormCoherentSequence::from_entries(
            &b,
            (1..=2).map(|n| vf.entry(n).unwrap().inv().unwrap()).collect(),
        )
        .unwrap()
        .with_series(vf.series.clone().unwrap().inv());
        let u = v.mul(&inv);
        let mu = coleman_isotypic(&u, -1, false, 1).unwrap();
        let ct = isotypic_constant_term(&u, -1).unwrap();
        assert!(mu.total_mass().residual_valuation(&ct) >= 9);
        assert!(matches!(coleman_isotypic(&u, 1, false, 1), Err(Error::NotInIsotypicPart)));
        assert!(matches!(coleman_isotypic(&v, -1, false, 1), Err(Error::NotInIsotypicPart)));
    }
}
