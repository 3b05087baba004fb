//! Power series in T over R(d,n), truncated modulo T^N.
//!
//! Truncation in T is exact: coefficient k of every result depends only on
//! coefficients ≤ k of the inputs. Loss of p-adic precision is tracked per
//! coefficient by `LocalElem`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;

use crate::cyclofield::{LocalElem, LocalRing};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct PowerSeries {
    ring: Arc<LocalRing>,
    c: Vec<LocalElem>,
}

impl PowerSeries {
    pub fn new(ring: &Arc<LocalRing>, mut c: Vec<LocalElem>, n: usize) -> Self {
        c.resize(n, ring.zero());
        PowerSeries {
            ring: ring.clone(),
            c,
        }
    }

    pub fn from_ints(ring: &Arc<LocalRing>, c: &[BigInt], n: usize) -> Self {
        Self::new(ring, c.iter().map(|x| ring.from_int(x)).collect(), n)
    }

    pub fn zero(ring: &Arc<LocalRing>, n: usize) -> Self {
        Self::new(ring, Vec::new(), n)
    }

    pub fn constant(c: &LocalElem, n: usize) -> Self {
        Self::new(c.ring(), vec![c.clone()], n)
    }

    pub fn one(ring: &Arc<LocalRing>, n: usize) -> Self {
        Self::constant(&ring.one(), n)
    }

    /// The series T.
    pub fn t(ring: &Arc<LocalRing>, n: usize) -> Self {
        Self::new(ring, vec![ring.zero(), ring.one()], n)
    }

    /// (1+T)^x for x ∈ Z_p given by a non-negative integer representative.
    pub fn one_plus_t_pow(ring: &Arc<LocalRing>, x: &BigInt, n: usize) -> Self {
        let mut c = Vec::with_capacity(n);
        let mut b = BigInt::one();
        let mut fact = BigInt::one();
        for k in 0..n {
            if k > 0 {
                b *= x - BigInt::from(k - 1);
                fact *= k;
            }
            c.push(ring.from_int(&(&b / &fact)));
        }
        Self::new(ring, c, n)
    }

    pub fn ring(&self) -> &Arc<LocalRing> {
        &self.ring
    }
    pub fn len(&self) -> usize {
        self.c.len()
    }
    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
    pub fn coeff(&self, k: usize) -> &LocalElem {
        &self.c[k]
    }
    pub fn coeffs(&self) -> &[LocalElem] {
        &self.c
    }

    /// Minimum coefficient precision.
    pub fn precision(&self) -> i64 {
        self.c.iter().map(|x| x.precision()).min().unwrap_or(i64::MAX)
    }

    pub fn add(&self, o: &Self) -> Self {
        PowerSeries {
            ring: self.ring.clone(),
            c: self.c.iter().zip(&o.c).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        PowerSeries {
            ring: self.ring.clone(),
            c: self.c.iter().zip(&o.c).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        PowerSeries {
            ring: self.ring.clone(),
            c: self.c.iter().map(|a| a.neg()).collect(),
        }
    }

    pub fn scale(&self, s: &LocalElem) -> Self {
        PowerSeries {
            ring: self.ring.clone(),
            c: self.c.iter().map(|a| a.mul(s)).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.c.len().min(o.c.len());
        let mut out = vec![self.ring.zero(); n];
        for (i, a) in self.c.iter().enumerate().take(n) {
            if a.is_zero_at_precision() && a.precision() >= self.ring.precision() as i64 {
                continue;
            }
            for (j, b) in o.c.iter().enumerate().take(n - i) {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        PowerSeries {
            ring: self.ring.clone(),
            c: out,
        }
    }

    pub fn pow(&self, mut k: u64) -> Self {
        let mut acc = Self::one(&self.ring, self.len());
        let mut b = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&b);
            }
            k >>= 1;
            if k > 0 {
                b = b.mul(&b);
            }
        }
        acc
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.len();
        let c0inv = self.c[0].inv()?;
        let mut out = vec![self.ring.zero(); n];
        out[0] = c0inv.clone();
        for k in 1..n {
            let mut s = self.ring.zero();
            for j in 1..=k {
                s = s.add(&self.c[j].mul(&out[k - j]));
            }
            out[k] = s.mul(&c0inv).neg();
        }
        Ok(PowerSeries {
            ring: self.ring.clone(),
            c: out,
        })
    }

    /// Raises to an integer power; negative powers need an invertible constant term.
    pub fn powi(&self, e: i64) -> Result<Self> {
        if e >= 0 {
            Ok(self.pow(e as u64))
        } else {
            Ok(self.inverse()?.pow((-e) as u64))
        }
    }

    pub fn derivative(&self) -> Self {
        let n = self.len();
        let mut out: Vec<LocalElem> = (1..n)
            .map(|k| self.c[k].scale_int(&BigInt::from(k)))
            .collect();
        out.push(self.ring.zero());
        PowerSeries {
            ring: self.ring.clone(),
            c: out,
        }
    }

    /// Antiderivative with zero constant term; the top coefficient is dropped.
    pub fn integral(&self) -> Self {
        let p = self.ring.p();
        let n = self.len();
        let mut out = vec![self.ring.zero(); n];
        for k in 1..n {
            let (s, u) = crate::arith::split_p(&BigInt::from(k), p).unwrap();
            let uinv = crate::arith::inv_mod(&u, self.ring.base().modulus()).unwrap();
            out[k] = self.c[k - 1].scale_int(&uinv).div_p_power(s);
        }
        PowerSeries {
            ring: self.ring.clone(),
            c: out,
        }
    }

    /// Iwasawa logarithm of a series with unit constant term.
    pub fn log(&self) -> Result<Self> {
        if !self.c[0].is_unit() {
            return Err(Error::DomainError("log of a non-unit series".into()));
        }
        let l0 = self.c[0].log_iw()?;
        let dl = self.derivative().mul(&self.inverse()?).integral();
        let mut out = dl;
        out.c[0] = l0;
        Ok(out)
    }

    /// φ on coefficients.
    pub fn frobenius(&self) -> Self {
        PowerSeries {
            ring: self.ring.clone(),
            c: self.c.iter().map(|a| a.frobenius()).collect(),
        }
    }

    /// self(g(T)) for g with zero constant term.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        if !g.c[0].is_zero_at_precision() {
            return Err(Error::DomainError("inner series must vanish at 0".into()));
        }
        let n = self.len();
        let mut acc = Self::zero(&self.ring, n);
        for k in (0..n).rev() {
            acc = acc.mul(g);
            acc.c[0] = acc.c[0].add(&self.c[k]);
        }
        Ok(acc)
    }

    /// Evaluates at x with v(x) > 0; the truncation tail costs precision
    /// ⌊N·v(x)⌋ unless `exact_polynomial` is set.
    pub fn eval(&self, x: &LocalElem, exact_polynomial: bool) -> LocalElem {
        let ring = x.ring().clone();
        let mut acc = ring.zero();
        for c in self.c.iter().rev() {
            let cc = lift_into(c, &ring);
            acc = acc.mul(x).add(&cc);
        }
        if exact_polynomial {
            return acc;
        }
        let e = ring.ramification() as i64;
        let vx = crate::cyclofield::valuation_in_uniformizers(x).unwrap_or(i64::MAX / 4);
        let cap = (self.len() as i64).saturating_mul(vx) / e;
        acc.truncate(cap)
    }

    /// T-adic order and the series divided by T^order. The top `order` coefficients
    /// are padded with zeros, so callers must drop them or start one term longer.
    pub fn split_t(&self) -> (usize, Self) {
        let n = self.len();
        let k = self
            .c
            .iter()
            .position(|x| !x.is_zero_at_precision())
            .unwrap_or(n);
        let mut c: Vec<LocalElem> = self.c[k.min(n)..].to_vec();
        c.resize(n, self.ring.zero());
        (
            k,
            PowerSeries {
                ring: self.ring.clone(),
                c,
            },
        )
    }

    /// Every coefficient lies in R(d,n) at its precision.
    pub fn is_integral(&self) -> bool {
        self.c
            .iter()
            .all(|x| x.denominator_power() == 0 || x.is_zero_at_precision())
    }

    pub fn truncate(&self, prec: i64) -> Self {
        PowerSeries {
            ring: self.ring.clone(),
            c: self.c.iter().map(|x| x.truncate(prec)).collect(),
        }
    }

    pub fn residual_valuation(&self, o: &Self) -> i64 {
        self.c
            .iter()
            .zip(&o.c)
            .map(|(a, b)| a.residual_valuation(b))
            .min()
            .unwrap_or(i64::MAX)
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero_at_precision())
    }
}

/// Moves an element of R(d,k) into R(d,n) for k ≤ n over the same base.
pub fn lift_into(x: &LocalElem, ring: &Arc<LocalRing>) -> LocalElem {
    let mut y = x.clone();
    while y.ring().level() < ring.level() {
        let up = LocalRing::new(ring.base(), y.ring().level() + 1);
        y = y.embed_up(&up);
    }
    assert_eq!(y.ring().level(), ring.level());
    y
}
