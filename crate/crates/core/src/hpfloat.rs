//! Binary fixed-point reals with an absolute error bound.
//!
//! A `Real` is `m / 2^bits` together with `err`, a bound on the distance to the
//! true value in the same units. Transcendental functions work with 64 guard
//! bits and treat their input as exact, then add `|f'| * err`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

const GUARD: u32 = 64;

#[derive(Clone, PartialEq, Eq)]
pub struct Real {
    m: BigInt,
    bits: u32,
    err: BigInt,
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {}ulp", self.to_decimal(30), self.err)
    }
}

fn shr_round(x: &BigInt, k: u32) -> BigInt {
    if k == 0 {
        return x.clone();
    }
    let half = BigInt::one() << (k - 1);
    if x.is_negative() {
        -((-x + &half) >> k)
    } else {
        (x + &half) >> k
    }
}

/// Ceiling of a nonnegative x / 2^k.
fn shr_ceil(x: &BigInt, k: u32) -> BigInt {
    if k == 0 {
        return x.clone();
    }
    let one = BigInt::one() << k;
    (x + &one - 1) >> k
}

impl Real {
    pub fn zero(bits: u32) -> Self {
        Real { m: BigInt::zero(), bits, err: BigInt::zero() }
    }
    pub fn one(bits: u32) -> Self {
        Self::from_int(&BigInt::one(), bits)
    }
    pub fn from_int(k: &BigInt, bits: u32) -> Self {
        Real { m: k << bits, bits, err: BigInt::zero() }
    }
    pub fn from_i64(k: i64, bits: u32) -> Self {
        Self::from_int(&BigInt::from(k), bits)
    }
    pub fn from_rational(q: &BigRational, bits: u32) -> Self {
        let num = q.numer() << bits;
        let (d, r) = num.div_rem(q.denom());
        let exact = r.is_zero();
        // round half away from zero
        let twice = (r.abs() * 2u32).cmp(q.denom());
        let mut m = d;
        if twice != Ordering::Less {
            if num.is_negative() {
                m -= 1;
            } else {
                m += 1;
            }
        }
        Real { m, bits, err: if exact { BigInt::zero() } else { BigInt::one() } }
    }
    /// From raw parts: value m / 2^bits with error err / 2^bits.
    pub fn from_parts(m: BigInt, bits: u32, err: BigInt) -> Self {
        Real { m, bits, err: err.abs() }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }
    pub fn mantissa(&self) -> &BigInt {
        &self.m
    }
    /// Error bound in units of 2^-bits.
    pub fn err_ulps(&self) -> &BigInt {
        &self.err
    }
    /// Error bound as a power of two: the smallest k with err ≤ 2^k ulps, minus bits.
    pub fn err_log2(&self) -> i64 {
        if self.err.is_zero() {
            return -(self.bits as i64) - 1;
        }
        self.err.bits() as i64 - self.bits as i64
    }
    pub fn to_f64(&self) -> f64 {
        let sh = self.bits.saturating_sub(60);
        let m = shr_round(&self.m, sh).to_f64().unwrap_or(f64::NAN);
        m / 2f64.powi((self.bits - sh) as i32)
    }

    /// Re-express at another precision; shortening rounds and widens the bound.
    pub fn with_bits(&self, bits: u32) -> Self {
        match bits.cmp(&self.bits) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let k = bits - self.bits;
                Real { m: &self.m << k, bits, err: &self.err << k }
            }
            Ordering::Less => {
                let k = self.bits - bits;
                let exact = (&self.m % (BigInt::one() << k)).is_zero();
                let extra = if exact { 0 } else { 1 };
                Real {
                    m: shr_round(&self.m, k),
                    bits,
                    err: shr_ceil(&self.err, k) + extra,
                }
            }
        }
    }

    fn align(&self, other: &Self) -> (Self, Self) {
        let b = self.bits.max(other.bits);
        (self.with_bits(b), other.with_bits(b))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = self.align(other);
        Real { m: a.m + b.m, bits: a.bits, err: a.err + b.err }
    }
    pub fn neg(&self) -> Self {
        Real { m: -&self.m, bits: self.bits, err: self.err.clone() }
    }
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.align(other);
        let bits = a.bits;
        let prod = &a.m * &b.m;
        let m = shr_round(&prod, bits);
        let rounding = if (&prod % (BigInt::one() << bits)).is_zero() { 0 } else { 1 };
        let spread = a.m.abs() * &b.err + b.m.abs() * &a.err + &a.err * &b.err;
        Real { m, bits, err: shr_ceil(&spread, bits) + rounding }
    }
    pub fn mul_int(&self, k: &BigInt) -> Self {
        Real { m: &self.m * k, bits: self.bits, err: &self.err * k.abs() }
    }
    pub fn div_int(&self, k: &BigInt) -> Self {
        assert!(!k.is_zero());
        let (q, r) = self.m.div_rem(k);
        let extra = if r.is_zero() { 0 } else { 1 };
        Real {
            m: q,
            bits: self.bits,
            err: &self.err / k.abs() + 1 + extra,
        }
    }
    pub fn mul_rational(&self, q: &BigRational) -> Self {
        self.mul_int(q.numer()).div_int(q.denom())
    }
    /// Multiply by 2^k exactly.
    pub fn ldexp(&self, k: i32) -> Self {
        if k >= 0 {
            Real { m: &self.m << k as u32, bits: self.bits, err: &self.err << k as u32 }
        } else {
            let s = (-k) as u32;
            Real { m: shr_round(&self.m, s), bits: self.bits, err: shr_ceil(&self.err, s) + 1 }
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.align(other);
        let bits = a.bits;
        if b.m.abs() <= b.err {
            return Err(Error::SingularWithinBound);
        }
        let num = &a.m << bits;
        let q = &num / &b.m;
        // |a/b - ã/b̃| ≤ (e_a + |q| e_b) / (|b| - e_b)
        let spread = (&a.err << bits) + q.abs() * &b.err;
        let den = b.m.abs() - &b.err;
        let err = (spread + &den - 1) / den + 1;
        Ok(Real { m: q, bits, err })
    }
    pub fn inv(&self) -> Result<Self> {
        Self::one(self.bits).div(self)
    }

    pub fn abs(&self) -> Self {
        Real { m: self.m.abs(), bits: self.bits, err: self.err.clone() }
    }
    /// Sign when the interval excludes zero.
    pub fn sign(&self) -> Option<Sign> {
        if self.m.abs() <= self.err {
            None
        } else {
            Some(self.m.sign())
        }
    }
    /// True when |self| is within its own bound of zero.
    pub fn contains_zero(&self) -> bool {
        self.m.abs() <= self.err
    }
    /// True when |self - other| is within the combined bound plus |tol|.
    pub fn within(&self, other: &Self, tol: &Self) -> bool {
        let d = self.sub(other);
        let (d, t) = d.align(tol);
        d.m.abs() <= d.err + t.m.abs()
    }

    pub fn sqrt(&self) -> Result<Self> {
        if self.m.is_negative() {
            return Err(Error::DomainError("sqrt of a negative number".into()));
        }
        let bits = self.bits;
        let r = (&self.m << bits).sqrt();
        // d sqrt = dx / (2 sqrt x)
        let err = if self.err.is_zero() {
            BigInt::one()
        } else {
            let lower = (&self.m - &self.err).max(BigInt::zero());
            let lr = (&lower << bits).sqrt();
            if lr.is_zero() {
                (&self.err << bits).sqrt() + 1
            } else {
                ((&self.err << bits) + &lr) / (lr * 2u32) + 2
            }
        };
        Ok(Real { m: r, bits, err })
    }

    pub fn pi(bits: u32) -> Self {
        let w = bits + GUARD;
        let a = atan_inv(5, w);
        let b = atan_inv(239, w);
        let v = (a << 4) - (b << 2);
        Real { m: shr_round(&v, GUARD), bits, err: BigInt::from(2) }
    }

    pub fn ln2(bits: u32) -> Self {
        let w = bits + GUARD;
        let v = atanh_fixed(&(BigInt::one() << w), &BigInt::from(3), w) << 1;
        Real { m: shr_round(&v, GUARD), bits, err: BigInt::from(2) }
    }

    /// Natural logarithm of a positive number.
    pub fn ln(&self) -> Result<Self> {
        let bits = self.bits;
        if self.m.abs() <= self.err || self.m.is_negative() {
            return Err(Error::DomainError("log of a non-positive number".into()));
        }
        let w = bits + GUARD;
        let x = &self.m << GUARD;
        // x = y * 2^k with y in [1, 2)
        let k = x.bits() as i64 - 1 - w as i64;
        let y = if k >= 0 { &x >> k as u32 } else { &x << (-k) as u32 };
        let one = BigInt::one() << w;
        // ln y = 2 atanh((y-1)/(y+1))
        let num = &y - &one;
        let den = &y + &one;
        let z = (&num << w) / &den;
        let ly = atanh_series(&z, w) << 1;
        let l2 = atanh_fixed(&one, &BigInt::from(3), w) << 1;
        let v = ly + l2 * BigInt::from(k);
        let base = Real { m: shr_round(&v, GUARD), bits, err: BigInt::from(3) };
        // propagated: err / x
        let lower = &self.m - &self.err;
        let prop = ((&self.err << bits) + &lower - 1) / lower;
        Ok(Real { err: base.err + prop, ..base })
    }

    pub fn exp(&self) -> Result<Self> {
        let bits = self.bits;
        let w = bits + GUARD;
        let ln2 = Self::ln2(w);
        let x = self.with_bits(w);
        let kf = x.div(&ln2)?;
        let k = shr_round(&kf.m, w);
        let ki = k.to_i64().ok_or_else(|| Error::DomainError("exp overflow".into()))?;
        let r = x.m - &ln2.m * &k;
        // scale down by 2^16, sum the series, square back
        let s = 16u32;
        let rr = shr_round(&r, s);
        let one = BigInt::one() << w;
        let mut sum = one.clone();
        let mut term = one.clone();
        let mut i = 1u64;
        loop {
            term = shr_round(&(&term * &rr), w) / BigInt::from(i);
            if term.is_zero() {
                break;
            }
            sum += &term;
            i += 1;
        }
        for _ in 0..s {
            sum = shr_round(&(&sum * &sum), w);
        }
        let v = if ki >= 0 { sum << ki as u32 } else { shr_round(&sum, (-ki) as u32) };
        let m = shr_round(&v, GUARD);
        // relative error from squaring: ~2^s ulps at w, plus propagation
        let rel = (m.abs() >> (bits.saturating_sub(4))) + 4;
        let prop = shr_ceil(&(m.abs() * &self.err), bits) * 2;
        Ok(Real { m, bits, err: rel + prop })
    }

    /// (sin x, cos x).
    pub fn sin_cos(&self) -> (Self, Self) {
        let bits = self.bits;
        let w = bits + GUARD;
        let x = self.with_bits(w).m;
        let half_pi: BigInt = Self::pi(w + 8).m >> 9;
        // k = round(x / (π/2)), r = x - k π/2 with |r| ≤ π/4
        let k: BigInt = {
            let twice: BigInt = (&x << 1u32) + &half_pi;
            twice.div_floor(&(&half_pi << 1u32))
        };
        let r = &x - &half_pi * &k;
        let r2 = shr_round(&(&r * &r), w);
        let one = BigInt::one() << w;
        let mut s = r.clone();
        let mut c = one.clone();
        let mut ts = r.clone();
        let mut tc = one;
        let mut i = 1u64;
        loop {
            ts = -shr_round(&(&ts * &r2), w) / BigInt::from((2 * i) * (2 * i + 1));
            tc = -shr_round(&(&tc * &r2), w) / BigInt::from((2 * i - 1) * (2 * i));
            if ts.is_zero() && tc.is_zero() {
                break;
            }
            s += &ts;
            c += &tc;
            i += 1;
        }
        let q = k.mod_floor(&BigInt::from(4)).to_u32().unwrap();
        let (sv, cv) = match q {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        };
        let base_err = BigInt::from(3) + &self.err;
        (
            Real { m: shr_round(&sv, GUARD), bits, err: base_err.clone() },
            Real { m: shr_round(&cv, GUARD), bits, err: base_err },
        )
    }

    /// Decimal string with `digits` fractional digits, rounded.
    pub fn to_decimal(&self, digits: usize) -> String {
        let scale = num_traits::pow(BigInt::from(10), digits);
        let v = shr_round(&(&self.m * &scale), self.bits);
        let neg = v.is_negative();
        let s = v.abs().to_string();
        let s = if s.len() <= digits {
            format!("{}{}", "0".repeat(digits + 1 - s.len()), s)
        } else {
            s
        };
        let (ip, fp) = s.split_at(s.len() - digits);
        let sign = if neg { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{ip}")
        } else {
            format!("{sign}{ip}.{fp}")
        }
    }
}

/// Σ (-1)^i / ((2i+1) k^{2i+1}) scaled by 2^w.
fn atan_inv(k: u64, w: u32) -> BigInt {
    let k = BigInt::from(k);
    let k2 = &k * &k;
    let mut term = (BigInt::one() << w) / &k;
    let mut sum = BigInt::zero();
    let mut i = 0u64;
    while !term.is_zero() {
        let t = &term / BigInt::from(2 * i + 1);
        if i.is_multiple_of(2) {
            sum += t;
        } else {
            sum -= t;
        }
        term /= &k2;
        i += 1;
    }
    sum
}

/// atanh(num/den) scaled by 2^w, for num = 2^w.
fn atanh_fixed(num: &BigInt, den: &BigInt, w: u32) -> BigInt {
    atanh_series(&(num / den), w)
}

/// atanh(z / 2^w) scaled by 2^w, for |z| ≤ 2^w / 3.
fn atanh_series(z: &BigInt, w: u32) -> BigInt {
    let z2 = shr_round(&(z * z), w);
    let mut term = z.clone();
    let mut sum = BigInt::zero();
    let mut i = 0u64;
    while !term.is_zero() {
        sum += &term / BigInt::from(2 * i + 1);
        term = shr_round(&(&term * &z2), w);
        i += 1;
    }
    sum
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Complex {
    pub re: Real,
    pub im: Real,
}

impl Complex {
    pub fn new(re: Real, im: Real) -> Self {
        Complex { re, im }
    }
    pub fn zero(bits: u32) -> Self {
        Complex { re: Real::zero(bits), im: Real::zero(bits) }
    }
    pub fn one(bits: u32) -> Self {
        Complex { re: Real::one(bits), im: Real::zero(bits) }
    }
    pub fn from_real(re: Real) -> Self {
        let bits = re.bits();
        Complex { re, im: Real::zero(bits) }
    }
    pub fn i(bits: u32) -> Self {
        Complex { re: Real::zero(bits), im: Real::one(bits) }
    }
    /// e^{2πi k / n}.
    pub fn root_of_unity(k: i64, n: u64, bits: u32) -> Self {
        let n = n as i64;
        let k = k.rem_euclid(n);
        let w = bits + 16;
        let theta = Real::pi(w).mul_int(&BigInt::from(2 * k)).div_int(&BigInt::from(n));
        let (s, c) = theta.sin_cos();
        Complex { re: c.with_bits(bits), im: s.with_bits(bits) }
    }
    pub fn bits(&self) -> u32 {
        self.re.bits()
    }
    pub fn add(&self, o: &Self) -> Self {
        Complex { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }
    pub fn sub(&self, o: &Self) -> Self {
        Complex { re: self.re.sub(&o.re), im: self.im.sub(&o.im) }
    }
    pub fn neg(&self) -> Self {
        Complex { re: self.re.neg(), im: self.im.neg() }
    }
    pub fn conj(&self) -> Self {
        Complex { re: self.re.clone(), im: self.im.neg() }
    }
    pub fn mul(&self, o: &Self) -> Self {
        Complex {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }
    pub fn scale(&self, r: &Real) -> Self {
        Complex { re: self.re.mul(r), im: self.im.mul(r) }
    }
    pub fn mul_rational(&self, q: &BigRational) -> Self {
        Complex { re: self.re.mul_rational(q), im: self.im.mul_rational(q) }
    }
    pub fn norm_sqr(&self) -> Real {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }
    pub fn div(&self, o: &Self) -> Result<Self> {
        let d = o.norm_sqr();
        let n = self.mul(&o.conj());
        Ok(Complex { re: n.re.div(&d)?, im: n.im.div(&d)? })
    }
    /// Both parts within their bounds (plus tol) of the other's.
    pub fn within(&self, o: &Self, tol: &Real) -> bool {
        self.re.within(&o.re, tol) && self.im.within(&o.im, tol)
    }
    pub fn contains_zero(&self) -> bool {
        self.re.contains_zero() && self.im.contains_zero()
    }
    /// Largest of the two error bounds, as log2.
    pub fn err_log2(&self) -> i64 {
        self.re.err_log2().max(self.im.err_log2())
    }
}
