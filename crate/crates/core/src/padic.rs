//! Elements of Q_p with absolute precision tracking.
//!
//! A value is `p^val * unit + O(p^prec)` with `unit` coprime to p and reduced
//! modulo `p^(prec - val)`. A zero mantissa means the value is `O(p^prec)`:
//! indistinguishable from zero, never asserted to be zero.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{inv_mod, modp, pow_big, split_p, val_p};
use crate::error::{Error, Result};

/// Sentinel precision of exact zeros.
const EXACT: i64 = i64::MAX / 4;

/// Outcome of comparing a value against zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroTest {
    /// Certainly nonzero, with this valuation.
    NonZero(i64),
    /// Exactly zero (only for values built as exact zeros).
    Zero,
    /// Zero modulo `p^M`; nothing more is known.
    Unknown(i64),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PadicValue {
    p: u64,
    unit: BigInt,
    val: i64,
    prec: i64,
}

impl PadicValue {
    /// `x * p^shift` known modulo `p^prec`.
    pub fn from_parts(p: u64, x: BigInt, shift: i64, prec: i64) -> Self {
        if shift >= prec {
            return Self::zero(p, prec);
        }
        match split_p(&x, p) {
            None => Self::zero(p, prec),
            Some((k, u)) => {
                let val = shift + k as i64;
                if val >= prec {
                    return Self::zero(p, prec);
                }
                if prec >= EXACT / 2 {
                    return PadicValue { p, unit: u, val, prec: EXACT };
                }
                let m = pow_big(p, (prec - val) as u32);
                PadicValue {
                    p,
                    unit: modp(&u, &m),
                    val,
                    prec,
                }
            }
        }
    }

    pub fn from_int(p: u64, x: &BigInt, prec: i64) -> Self {
        Self::from_parts(p, x.clone(), 0, prec)
    }

    pub fn from_i64(p: u64, x: i64, prec: i64) -> Self {
        Self::from_parts(p, BigInt::from(x), 0, prec)
    }

    pub fn from_rational(p: u64, q: &BigRational, prec: i64) -> Self {
        let (k, d) = split_p(q.denom(), p).expect("nonzero denominator");
        let k = k as i64;
        let w = prec + k;
        if w <= 0 {
            return Self::zero(p, prec);
        }
        let m = pow_big(p, w as u32);
        let dinv = inv_mod(&d, &m).expect("unit denominator");
        Self::from_parts(p, modp(&(q.numer() * dinv), &m), -k, prec)
    }

    pub fn zero(p: u64, prec: i64) -> Self {
        PadicValue {
            p,
            unit: BigInt::zero(),
            val: prec,
            prec,
        }
    }

    pub fn exact_zero(p: u64) -> Self {
        Self::zero(p, EXACT)
    }

    pub fn one(p: u64, prec: i64) -> Self {
        Self::from_i64(p, 1, prec)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Absolute precision M: the value is known modulo p^M.
    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec >= EXACT / 2
    }

    /// Valuation if the value is certainly nonzero.
    pub fn valuation(&self) -> Option<i64> {
        if self.unit.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Valuation, or the precision for an unresolved zero.
    pub fn valuation_or_precision(&self) -> i64 {
        self.val
    }

    pub fn unit_part(&self) -> &BigInt {
        &self.unit
    }

    pub fn zero_test(&self) -> ZeroTest {
        if !self.unit.is_zero() {
            ZeroTest::NonZero(self.val)
        } else if self.is_exact() {
            ZeroTest::Zero
        } else {
            ZeroTest::Unknown(self.prec)
        }
    }

    pub fn is_unit(&self) -> bool {
        !self.unit.is_zero() && self.val == 0
    }

    /// Drops precision to `prec` (never raises it).
    pub fn truncate(&self, prec: i64) -> Self {
        if prec >= self.prec {
            return self.clone();
        }
        if self.unit.is_zero() {
            return Self::zero(self.p, prec);
        }
        Self::from_parts(self.p, self.unit.clone(), self.val, prec)
    }

    /// Integer representative modulo `p^k`; requires nonnegative valuation.
    pub fn residue(&self, k: u32) -> Result<BigInt> {
        if self.unit.is_zero() {
            return Ok(BigInt::zero());
        }
        if self.val < 0 {
            return Err(Error::DomainError("negative valuation".into()));
        }
        let m = pow_big(self.p, k);
        Ok(modp(&(&self.unit * pow_big(self.p, self.val as u32)), &m))
    }

    /// Representative `r` with `self = r / p^s + O(p^prec)` and `s >= 0`.
    pub fn as_scaled_integer(&self) -> (BigInt, u32) {
        if self.unit.is_zero() {
            return (BigInt::zero(), 0);
        }
        if self.val >= 0 {
            (&self.unit * pow_big(self.p, self.val as u32), 0)
        } else {
            (self.unit.clone(), (-self.val) as u32)
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            Err(Error::PrimeMismatch(self.p, other.p))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let prec = self.prec.min(other.prec);
        if self.unit.is_zero() {
            return Ok(other.truncate(prec).with_zero_floor(prec));
        }
        if other.unit.is_zero() {
            return Ok(self.truncate(prec));
        }
        let v = self.val.min(other.val);
        let x = &self.unit * pow_big(self.p, (self.val - v) as u32)
            + &other.unit * pow_big(self.p, (other.val - v) as u32);
        Ok(Self::from_parts(self.p, x, v, prec))
    }

    fn with_zero_floor(self, prec: i64) -> Self {
        if self.unit.is_zero() {
            Self::zero(self.p, prec)
        } else {
            self
        }
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg_ref())
    }

    fn neg_ref(&self) -> Self {
        if self.unit.is_zero() {
            return self.clone();
        }
        if self.is_exact() {
            return PadicValue { unit: -&self.unit, ..self.clone() };
        }
        let m = pow_big(self.p, (self.prec - self.val) as u32);
        PadicValue {
            p: self.p,
            unit: modp(&(-&self.unit), &m),
            val: self.val,
            prec: self.prec,
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let va = self.val;
        let vb = other.val;
        let prec = if self.is_exact() && other.is_exact() {
            EXACT
        } else {
            (self.prec.saturating_add(vb))
                .min(other.prec.saturating_add(va))
                .min(EXACT)
        };
        if self.unit.is_zero() || other.unit.is_zero() {
            return Ok(Self::zero(self.p, prec));
        }
        Ok(Self::from_parts(self.p, &self.unit * &other.unit, va + vb, prec))
    }

    pub fn try_inv(&self) -> Result<Self> {
        if self.unit.is_zero() {
            return Err(Error::PrecisionExhausted(self.prec));
        }
        if self.is_exact() {
            if self.unit.abs().is_one() {
                return Ok(PadicValue { val: -self.val, ..self.clone() });
            }
            return Err(Error::DomainError("inverse of an exact value needs a precision".into()));
        }
        let r = self.prec - self.val;
        let m = pow_big(self.p, r as u32);
        let u = inv_mod(&self.unit, &m).expect("unit mantissa");
        Ok(PadicValue {
            p: self.p,
            unit: u,
            val: -self.val,
            prec: r - self.val,
        })
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.try_mul(&other.try_inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.try_inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::one(self.p, EXACT);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.try_mul(&b)?;
            }
            e >>= 1;
            if e > 0 {
                b = b.try_mul(&b)?;
            }
        }
        Ok(acc)
    }

    /// Multiplies by the integer `k` exactly.
    pub fn scale(&self, k: &BigInt) -> Self {
        let q = Self::from_parts(self.p, k.clone(), 0, EXACT);
        self.try_mul(&q).expect("same prime")
    }

    /// Valuation of `self - other`, capped at the common precision.
    pub fn residual_valuation(&self, other: &Self) -> Result<i64> {
        Ok(self.try_sub(other)?.valuation_or_precision())
    }

    /// Iwasawa logarithm: `log(p) = 0`, roots of unity map to 0.
    pub fn log_iw(&self) -> Result<Self> {
        if self.unit.is_zero() {
            return Err(Error::PrecisionExhausted(self.prec));
        }
        let p = self.p;
        let r = self.prec - self.val;
        let m = pow_big(p, r as u32);
        let t = self.unit.modpow(&BigInt::from(p - 1), &m);
        let z = modp(&(t - 1), &m);
        let s = log_one_plus(p, &z, r as u32);
        let inv = inv_mod(&BigInt::from(p - 1), &m).expect("p-1 is a unit");
        Ok(Self::from_parts(p, modp(&(s * inv), &m), 0, r))
    }

    /// p-adic exponential on `pZ_p`.
    pub fn exp_p(&self) -> Result<Self> {
        let p = self.p;
        if self.unit.is_zero() {
            return Ok(Self::one(p, self.prec));
        }
        if self.val < 1 {
            return Err(Error::DomainError("exp_p needs valuation >= 1".into()));
        }
        let mm = self.prec;
        let x = &self.unit * pow_big(p, self.val as u32);
        Ok(Self::from_parts(p, exp_series(p, &x, mm as u32), 0, mm))
    }

    /// Teichmüller lift of `a mod p` to precision `prec`.
    pub fn teichmuller(p: u64, a: &BigInt, prec: i64) -> Result<Self> {
        let pb = BigInt::from(p);
        if modp(a, &pb).is_zero() {
            return Err(Error::DomainError("teichmuller of 0 mod p".into()));
        }
        let m = pow_big(p, prec as u32);
        let mut x = modp(a, &m);
        for _ in 0..prec {
            x = x.modpow(&pb, &m);
        }
        Ok(Self::from_int(p, &x, prec))
    }

    /// Newton lift of a simple root of an integer polynomial.
    pub fn hensel_lift(p: u64, f: &[BigInt], a0: &BigInt, prec: i64) -> Result<Self> {
        let pb = BigInt::from(p);
        let df: Vec<BigInt> = f
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigInt::from(i))
            .collect();
        if !modp(&horner(f, a0), &pb).is_zero() || modp(&horner(&df, a0), &pb).is_zero() {
            return Err(Error::NotSimpleRoot);
        }
        let mut x = modp(a0, &pb);
        let mut k = 1i64;
        while k < prec {
            k = (2 * k).min(prec);
            let m = pow_big(p, k as u32);
            let d = inv_mod(&horner(&df, &x), &m).expect("simple root");
            x = modp(&(&x - horner(f, &x) * d), &m);
        }
        Ok(Self::from_int(p, &x, prec))
    }
}

pub(crate) fn horner(f: &[BigInt], x: &BigInt) -> BigInt {
    f.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
}

/// `log(1 + z)` modulo `p^r` for an integer `z` divisible by p.
pub(crate) fn log_one_plus(p: u64, z: &BigInt, r: u32) -> BigInt {
    let mut extra = 1u32;
    while (p as u128).pow(extra) <= (r as u128 + 4) {
        extra += 1;
    }
    let w = r + extra;
    let m = pow_big(p, w);
    let mr = pow_big(p, r);
    let mut kmax = 1u64;
    while (kmax as i64) - (val_p(&BigInt::from(kmax), p).unwrap() as i64) < r as i64 {
        kmax += 1;
    }
    let mut zk = BigInt::one();
    let mut sum = BigInt::zero();
    for k in 1..=kmax + 1 {
        zk = modp(&(zk * z), &m);
        if zk.is_zero() {
            break;
        }
        let (s, kp) = split_p(&BigInt::from(k), p).unwrap();
        let term = (&zk / pow_big(p, s)) * inv_mod(&kp, &m).unwrap();
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    modp(&sum, &mr)
}

/// `exp(x)` modulo `p^r` for an integer `x` divisible by p (p odd).
pub(crate) fn exp_series(p: u64, x: &BigInt, r: u32) -> BigInt {
    let kmax = (r as u64 * (p - 1)).div_ceil(p - 2) + 2;
    let vfact = (kmax - 1) / (p - 1) + 1;
    let w = r + vfact as u32 + 1;
    let m = pow_big(p, w);
    let mut sum = BigInt::one();
    let mut xk = BigInt::one();
    let mut vf = 0u32;
    let mut fu = BigInt::one();
    for k in 1..=kmax {
        xk = modp(&(xk * x), &m);
        let (s, kp) = split_p(&BigInt::from(k), p).unwrap();
        vf += s;
        fu = modp(&(fu * kp), &m);
        if xk.is_zero() {
            break;
        }
        sum += (&xk / pow_big(p, vf)) * inv_mod(&fu, &m).unwrap();
    }
    modp(&sum, &pow_big(p, r))
}

impl fmt::Display for PadicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tail = if self.is_exact() {
            String::new()
        } else {
            format!(" + O({}^{})", self.p, self.prec)
        };
        if self.unit.is_zero() {
            if self.is_exact() {
                return write!(f, "0");
            }
            return write!(f, "O({}^{})", self.p, self.prec);
        }
        let (r, s) = self.as_scaled_integer();
        if s == 0 {
            write!(f, "{}{}", r, tail)
        } else {
            write!(f, "{}/{}^{}{}", r, self.p, s, tail)
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl $tr for &PadicValue {
            type Output = PadicValue;
            fn $m(self, rhs: &PadicValue) -> PadicValue {
                self.$f(rhs).expect("operands share a prime")
            }
        }
        impl $tr for PadicValue {
            type Output = PadicValue;
            fn $m(self, rhs: PadicValue) -> PadicValue {
                (&self).$f(&rhs).expect("operands share a prime")
            }
        }
    };
}
binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Neg for &PadicValue {
    type Output = PadicValue;
    fn neg(self) -> PadicValue {
        self.neg_ref()
    }
}

impl Neg for PadicValue {
    type Output = PadicValue;
    fn neg(self) -> PadicValue {
        self.neg_ref()
    }
}

/// Signed representative of `x mod p^k` in `(-p^k/2, p^k/2]`.
pub fn balanced(x: &BigInt, m: &BigInt) -> BigInt {
    let r = modp(x, m);
    if &r * 2 > *m {
        r - m
    } else {
        r
    }
}
