//! Elements of O[[Γ]] stored at a top level Γ_{m_max}, with γ_0 ↦ 1 + p.
//!
//! Lower levels are projections of the top level, so level compatibility
//! holds by construction. Coefficients live in the unramified ring R(d,0).

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::arith::{binomial, modp, pow_big, val_p};
use crate::cyclofield::{FiniteOrderCharacter, LocalElem, LocalRing};
use crate::error::{Error, Result};
use crate::padic::PadicValue;

#[derive(Clone, Debug)]
pub struct IwasawaMeasure {
    ring: Arc<LocalRing>,
    m_max: u32,
    coeffs: Vec<LocalElem>,
    prec: i64,
}

/// A value together with the precision certified by the level it came from.
#[derive(Clone, Debug)]
pub struct Certified {
    pub value: LocalElem,
    pub certificate: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VanishingOrder {
    pub order: u32,
    /// False when every tested coefficient was zero at its precision.
    pub certain: bool,
}

impl IwasawaMeasure {
    /// `coeffs[j]` is the coefficient of γ_0^j in O[Γ_{m_max}].
    pub fn new(ring: &Arc<LocalRing>, m_max: u32, coeffs: Vec<LocalElem>) -> Result<Self> {
        assert_eq!(ring.level(), 0, "measures take coefficients in R(d,0)");
        let len = ring.p().pow(m_max) as usize;
        if coeffs.len() != len {
            return Err(Error::DomainError(format!(
                "expected {len} coefficients, got {}",
                coeffs.len()
            )));
        }
        let prec = coeffs
            .iter()
            .map(|c| c.precision())
            .min()
            .unwrap_or(ring.precision() as i64);
        Ok(IwasawaMeasure {
            ring: ring.clone(),
            m_max,
            coeffs,
            prec,
        })
    }

    pub fn from_ints(ring: &Arc<LocalRing>, m_max: u32, coeffs: &[BigInt]) -> Result<Self> {
        Self::new(ring, m_max, coeffs.iter().map(|c| ring.from_int(c)).collect())
    }

    pub fn zero(ring: &Arc<LocalRing>, m_max: u32) -> Self {
        let len = ring.p().pow(m_max) as usize;
        Self::new(ring, m_max, vec![ring.zero(); len]).unwrap()
    }

    /// The Dirac measure at γ_0^j.
    pub fn dirac(ring: &Arc<LocalRing>, m_max: u32, j: i64) -> Self {
        let mut z = Self::zero(ring, m_max);
        let idx = j.rem_euclid(z.coeffs.len() as i64) as usize;
        z.coeffs[idx] = ring.one();
        z
    }

    pub fn one(ring: &Arc<LocalRing>, m_max: u32) -> Self {
        Self::dirac(ring, m_max, 0)
    }

    /// γ_0 - 1.
    pub fn gamma_minus_one(ring: &Arc<LocalRing>, m_max: u32) -> Self {
        Self::dirac(ring, m_max, 1).sub(&Self::one(ring, m_max))
    }

    pub fn ring(&self) -> &Arc<LocalRing> {
        &self.ring
    }
    pub fn prime(&self) -> u64 {
        self.ring.p()
    }
    pub fn m_max(&self) -> u32 {
        self.m_max
    }
    /// Precision of evaluations derived from this measure.
    pub fn precision(&self) -> i64 {
        self.prec
    }
    pub fn coeff(&self, j: usize) -> &LocalElem {
        &self.coeffs[j]
    }
    pub fn coeffs(&self) -> &[LocalElem] {
        &self.coeffs
    }

    pub fn with_precision(mut self, prec: i64) -> Self {
        self.prec = self.prec.min(prec);
        self
    }

    fn same(&self, other: &Self) {
        assert!(self.ring.same(&other.ring) && self.m_max == other.m_max);
    }

    /// Projection to O[Γ_m].
    pub fn level(&self, m: u32) -> Result<Vec<LocalElem>> {
        if m > self.m_max {
            return Err(Error::LevelUnavailable(m));
        }
        let pm = self.prime().pow(m) as usize;
        let mut out = vec![self.ring.zero(); pm];
        for (j, c) in self.coeffs.iter().enumerate() {
            out[j % pm] = out[j % pm].add(c);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.same(other);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect();
        IwasawaMeasure {
            coeffs,
            prec: self.prec.min(other.prec),
            ..self.clone()
        }
    }

    pub fn neg(&self) -> Self {
        IwasawaMeasure {
            coeffs: self.coeffs.iter().map(|a| a.neg()).collect(),
            ..self.clone()
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &LocalElem) -> Self {
        let coeffs: Vec<LocalElem> = self.coeffs.iter().map(|a| a.mul(s)).collect();
        let prec = self.prec.min(
            coeffs
                .iter()
                .map(|c| c.precision())
                .min()
                .unwrap_or(self.prec),
        );
        IwasawaMeasure {
            coeffs,
            prec,
            ..self.clone()
        }
    }

    pub fn scale_int(&self, k: &BigInt) -> Self {
        self.scale(&self.ring.from_int(k))
    }

    /// Convolution product in O[Γ_{m_max}].
    pub fn mul(&self, other: &Self) -> Self {
        self.same(other);
        let n = self.coeffs.len();
        let mut out = vec![self.ring.zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero_at_precision() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero_at_precision() {
                    continue;
                }
                let k = (i + j) % n;
                out[k] = out[k].add(&a.mul(b));
            }
        }
        IwasawaMeasure {
            coeffs: out,
            prec: self.prec.min(other.prec),
            ..self.clone()
        }
    }

    /// Inverse of a measure with unit total mass, by Newton iteration.
    pub fn inverse_unit(&self) -> Result<Self> {
        let mass = self.total_mass();
        if !mass.is_unit() {
            return Err(Error::NotDivisible);
        }
        let one = Self::one(&self.ring, self.m_max);
        let two = one.scale_int(&BigInt::from(2));
        let mut x = one.scale(&mass.inv()?);
        for _ in 0..64 {
            let ax = self.mul(&x);
            if ax.residual_valuation_coeffs(&one) >= self.prec {
                return Ok(x);
            }
            x = x.mul(&two.sub(&ax));
        }
        Err(Error::PrecisionExhausted(self.prec))
    }

    /// Min over coefficients of v(self_j - other_j).
    pub fn residual_valuation_coeffs(&self, other: &Self) -> i64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.residual_valuation(b))
            .min()
            .unwrap_or(self.prec)
            .min(self.prec.min(other.prec))
    }

    /// Total mass Σ c_j, the value at the trivial character.
    pub fn total_mass(&self) -> LocalElem {
        self.coeffs
            .iter()
            .fold(self.ring.zero(), |acc, c| acc.add(c))
            .truncate(self.prec)
    }

    /// Amice polynomial Σ_j c_j (1+T)^j at level m, as coefficients of T^k.
    pub fn amice(&self, m: u32) -> Result<TruncatedSeries> {
        let lv = self.level(m)?;
        let pm = lv.len();
        let mut out = vec![self.ring.zero(); pm];
        for (j, c) in lv.iter().enumerate() {
            for (k, slot) in out.iter_mut().enumerate().take(j + 1) {
                *slot = slot.add(&c.scale_int(&binomial(j as u64, k as u64)));
            }
        }
        Ok(TruncatedSeries { coeffs: out })
    }

    /// Σ_j c_j η(γ_0)^j in R(d, n), n the conductor exponent of η.
    pub fn eval_character(&self, eta: &FiniteOrderCharacter) -> Result<LocalElem> {
        if eta.level() > self.m_max {
            return Err(Error::LevelUnavailable(eta.level()));
        }
        let lv = self.level(eta.level())?;
        Ok(self.pair_with(&lv, eta).truncate(self.prec))
    }

    /// Σ_r b_r η(γ_0)^r for level-η buckets b_r in R(d,0).
    fn pair_with(&self, buckets: &[LocalElem], eta: &FiniteOrderCharacter) -> LocalElem {
        let target = LocalRing::new(self.ring.base(), eta.conductor_exponent());
        let mut acc = target.zero();
        for (j, c) in buckets.iter().enumerate() {
            let b = c.base_part().expect("base coefficient");
            let term = target.from_base(&b).shift_valuation(-(c.denominator_power() as i64));
            acc = acc.add(&term.mul_zeta_power(eta.exponent_at(j as u64)));
        }
        acc
    }

    /// Σ_j c_j η(γ_0)^j (1+p)^{js}. Certified to p^{m_max+1+v(s)} for s ≠ 0.
    pub fn eval_kappa(&self, eta: &FiniteOrderCharacter, s: &PadicValue) -> Result<Certified> {
        let p = self.prime();
        if eta.level() > self.m_max {
            return Err(Error::LevelUnavailable(eta.level()));
        }
        let wp = self.ring.precision() as i64;
        let (u, cert) = match s.valuation() {
            None => (PadicValue::one(p, wp), self.prec),
            Some(vs) => {
                if vs < 0 {
                    return Err(Error::DomainError("s must lie in Z_p".into()));
                }
                let l = PadicValue::from_i64(p, 1 + p as i64, wp).log_iw()?;
                let u = s.try_mul(&l)?.exp_p()?;
                (u, self.m_max as i64 + 1 + vs)
            }
        };
        // fold in the base ring first; only p^level products happen upstairs
        let pl = p.pow(eta.level()) as usize;
        let mut buckets = vec![self.ring.zero(); pl];
        let mut uj = PadicValue::one(p, wp);
        for (j, c) in self.coeffs.iter().enumerate() {
            buckets[j % pl] = buckets[j % pl].add(&c.scale_padic(&uj));
            uj = uj.try_mul(&u)?;
        }
        let acc = self.pair_with(&buckets, eta);
        let cert = cert.min(self.prec);
        Ok(Certified {
            value: acc.truncate(cert),
            certificate: cert,
        })
    }

    /// Mahler coefficient Σ_j c_j binom(j, i) with the precision it is certified to.
    pub fn binomial_moment(&self, i: u64) -> (LocalElem, i64) {
        let p = self.prime();
        let mut acc = self.ring.zero();
        for (j, c) in self.coeffs.iter().enumerate() {
            let b = binomial(j as u64, i);
            if !b.is_zero() {
                acc = acc.add(&c.scale_int(&b));
            }
        }
        let drop = if i <= 1 { 0 } else { i.ilog(p) as i64 };
        let cert = if i == 0 {
            self.prec
        } else {
            (self.m_max as i64 - drop).min(self.prec)
        };
        (acc.truncate(cert), cert)
    }

    /// Order of vanishing at the trivial character (T-adic order of the Amice series).
    pub fn vanishing_order(&self, max: u32) -> VanishingOrder {
        for i in 0..=max {
            let (m, _) = self.binomial_moment(i as u64);
            if !m.is_zero_at_precision() {
                return VanishingOrder {
                    order: i,
                    certain: true,
                };
            }
        }
        VanishingOrder {
            order: max + 1,
            certain: false,
        }
    }

    /// (1/e!) d^e/ds^e κ^s at s = 0, i.e. Σ_j c_j (j log(1+p))^e / e!.
    pub fn derivative_at_trivial(&self, e: u32) -> Result<Certified> {
        let vo = self.vanishing_order(e.saturating_sub(1));
        if e > 0 && vo.certain && vo.order < e {
            return Err(Error::InsufficientVanishing(e));
        }
        let p = self.prime();
        let wp = self.ring.precision() as i64;
        let l = PadicValue::from_i64(p, 1 + p as i64, wp).log_iw()?;
        let le = l.pow(e as i64)?;
        let mut fact = BigInt::one();
        for k in 1..=e as u64 {
            fact *= k;
        }
        let vf = val_p(&fact, p).unwrap() as i64;
        let mut acc = self.ring.zero();
        for (j, c) in self.coeffs.iter().enumerate() {
            let je = num_traits::pow(BigInt::from(j), e as usize);
            if !je.is_zero() || e == 0 {
                acc = acc.add(&c.scale_int(&je));
            }
        }
        let factor = le.try_div(&PadicValue::from_int(p, &fact, wp))?;
        let value = acc.mul(&self.ring.from_padic(&factor));
        let cert = (self.m_max as i64 + e as i64 - vf).min(self.prec);
        let cert = if e == 0 { self.prec } else { cert };
        Ok(Certified {
            value: value.truncate(cert),
            certificate: cert,
        })
    }

    /// λ/(γ_0 - 1), defined up to multiples of the norm element; the
    /// representative has last coefficient 0, so its total mass is Σ j c_j.
    pub fn divide_gamma_minus_1(&self) -> Result<Self> {
        if !self.total_mass().is_zero_at_precision() {
            return Err(Error::NotDivisible);
        }
        let mut out = Vec::with_capacity(self.coeffs.len());
        let mut run = self.ring.zero();
        for c in &self.coeffs {
            run = run.add(c);
            out.push(run.neg());
        }
        let last = out.last().unwrap().clone();
        for c in out.iter_mut() {
            *c = c.sub(&last);
        }
        Ok(IwasawaMeasure {
            coeffs: out,
            prec: self.prec.min(self.m_max as i64),
            ..self.clone()
        })
    }

    /// ι: γ ↦ γ^{-1}.
    pub fn involution(&self) -> Self {
        let n = self.coeffs.len();
        let coeffs = (0..n).map(|j| self.coeffs[(n - j) % n].clone()).collect();
        IwasawaMeasure {
            coeffs,
            ..self.clone()
        }
    }

    /// c_j ↦ c_j κ(γ_0)^{k j}; exact only modulo p^{m_max+1}.
    pub fn twist(&self, k: i64) -> Self {
        if k == 0 {
            return self.clone();
        }
        let p = self.prime();
        let wp = self.ring.precision() as i64;
        let base = PadicValue::from_i64(p, 1 + p as i64, wp)
            .pow(k)
            .expect("unit");
        let mut u = PadicValue::one(p, wp);
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            coeffs.push(c.mul(&self.ring.from_padic(&u)));
            u = u.try_mul(&base).unwrap();
        }
        IwasawaMeasure {
            coeffs,
            prec: self.prec.min(self.m_max as i64 + 1),
            ..self.clone()
        }
    }

    pub fn twist_minus1(&self) -> Self {
        self.twist(-1)
    }

    /// Min over characters of Γ_{m_max} of v(η(self - other)).
    pub fn residual_valuation(&self, other: &Self) -> i64 {
        let d = self.sub(other);
        FiniteOrderCharacter::all_through_level(self.prime(), self.m_max)
            .iter()
            .map(|eta| {
                let v = d.eval_character(eta).unwrap();
                v.valuation_floor().unwrap_or(v.precision()).min(v.precision())
            })
            .min()
            .unwrap_or(d.prec)
    }

    pub fn to_json(&self) -> Value {
        let levels: Vec<Vec<String>> = (0..=self.m_max)
            .map(|m| {
                self.level(m)
                    .unwrap()
                    .iter()
                    .map(base_to_string)
                    .collect()
            })
            .collect();
        let base = self.ring.base();
        json!({
            "prime": self.prime(),
            "coeff_ring": {
                "d": base.d(),
                "f": base.degree(),
                "defining_poly": base.defining_poly().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "hensel_seed": base.seed(),
            },
            "m_max": self.m_max,
            "levels": levels,
            "precision": self.prec,
        })
    }

    pub fn from_json(ring: &Arc<LocalRing>, v: &Value) -> Result<Self> {
        let bad = |s: &str| Error::Parse(s.to_string());
        let p = v["prime"].as_u64().ok_or_else(|| bad("prime"))?;
        if p != ring.p() {
            return Err(Error::PrimeMismatch(p, ring.p()));
        }
        let m_max = v["m_max"].as_u64().ok_or_else(|| bad("m_max"))? as u32;
        let prec = v["precision"].as_i64().ok_or_else(|| bad("precision"))?;
        let top = v["levels"][m_max as usize]
            .as_array()
            .ok_or_else(|| bad("levels"))?;
        let coeffs = top
            .iter()
            .map(|s| base_from_string(ring, s.as_str().unwrap_or("")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(ring, m_max, coeffs)?.with_precision(prec))
    }
}

/// "a0,a1,..." (coefficients in ζ_d powers), with an optional "/p^k" suffix.
fn base_to_string(c: &LocalElem) -> String {
    let b = c.base_part().expect("base coefficient");
    let body = b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    if c.denominator_power() > 0 {
        format!("{body}/p^{}", c.denominator_power())
    } else {
        body
    }
}

fn base_from_string(ring: &Arc<LocalRing>, s: &str) -> Result<LocalElem> {
    let (body, den) = match s.split_once("/p^") {
        Some((b, d)) => (b, d.parse::<u32>().map_err(|e| Error::Parse(e.to_string()))?),
        None => (s, 0),
    };
    let b = body
        .split(',')
        .map(|t| t.trim().parse::<BigInt>().map_err(|e| Error::Parse(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    Ok(ring.from_base(&b).div_p_power(den))
}

/// A polynomial in T with coefficients in R(d,0).
#[derive(Clone, Debug)]
pub struct TruncatedSeries {
    pub coeffs: Vec<LocalElem>,
}

impl TruncatedSeries {
    /// Evaluates at a point of some R(d,n) over the same base.
    pub fn eval(&self, x: &LocalElem) -> LocalElem {
        let ring = x.ring();
        let mut acc = ring.zero();
        for c in self.coeffs.iter().rev() {
            let b = c.base_part().expect("base coefficient");
            let cc = ring.from_base(&b).shift_valuation(-(c.denominator_power() as i64));
            acc = acc.mul(x).add(&cc);
        }
        acc
    }
}

/// numerator / (γ_0 - 1)^pole_order.
#[derive(Clone, Debug)]
pub struct FractionalMeasure {
    pub numerator: IwasawaMeasure,
    pub pole_order: u32,
}

impl FractionalMeasure {
    pub fn from_measure(m: IwasawaMeasure) -> Self {
        FractionalMeasure {
            numerator: m,
            pole_order: 0,
        }
    }

    pub fn new(numerator: IwasawaMeasure, pole_order: u32) -> Self {
        FractionalMeasure {
            numerator,
            pole_order,
        }
    }

    /// Cancels factors of (γ_0 - 1) while the numerator vanishes at 𝟙.
    pub fn reduced(&self) -> Self {
        let mut out = self.clone();
        while out.pole_order > 0 && out.numerator.total_mass().is_zero_at_precision() {
            match out.numerator.divide_gamma_minus_1() {
                Ok(m) => {
                    out.numerator = m;
                    out.pole_order -= 1;
                }
                Err(_) => break,
            }
        }
        out
    }

    pub fn as_measure(&self) -> Option<IwasawaMeasure> {
        let r = self.reduced();
        (r.pole_order == 0).then_some(r.numerator)
    }

    /// (γ_0 - 1)^k times self, which is a measure once k ≥ pole order.
    pub fn times_gamma_minus_one_pow(&self, k: u32) -> Result<IwasawaMeasure> {
        if k < self.pole_order {
            return Err(Error::NotDivisible);
        }
        let g = IwasawaMeasure::gamma_minus_one(self.numerator.ring(), self.numerator.m_max());
        let mut acc = self.numerator.clone();
        for _ in 0..(k - self.pole_order) {
            acc = acc.mul(&g);
        }
        Ok(acc)
    }

    pub fn eval_character(&self, eta: &FiniteOrderCharacter) -> Result<LocalElem> {
        let r = self.reduced();
        let num = r.numerator.eval_character(eta)?;
        if r.pole_order == 0 {
            return Ok(num);
        }
        if eta.is_trivial() {
            return Err(Error::DomainError("pole at the trivial character".into()));
        }
        let ring = num.ring().clone();
        let g = eta.gamma_value(&ring).sub(&ring.one());
        let mut den = ring.one();
        for _ in 0..r.pole_order {
            den = den.mul(&g);
        }
        num.div(&den)
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.pole_order.max(other.pole_order);
        let a = self.times_gamma_minus_one_pow(k).unwrap();
        let b = other.times_gamma_minus_one_pow(k).unwrap();
        FractionalMeasure::new(a.add(&b), k)
    }

    pub fn scale(&self, s: &LocalElem) -> Self {
        FractionalMeasure::new(self.numerator.scale(s), self.pole_order)
    }

    /// Compares a/(γ-1)^k with b/(γ-1)^l by cross multiplication.
    pub fn residual_valuation(&self, other: &Self) -> i64 {
        let k = self.pole_order.max(other.pole_order);
        let a = self.times_gamma_minus_one_pow(k).unwrap();
        let b = other.times_gamma_minus_one_pow(k).unwrap();
        a.residual_valuation(&b)
    }
}

/// Integer representative of a base-ring coefficient when f = 1.
pub fn coeff_as_int(c: &LocalElem) -> BigInt {
    let m = pow_big(c.ring().p(), c.ring().precision());
    modp(&c.coeffs()[0], &m)
}
