//! The rings R(d,n) = O_K[ζ_{p^n}] with K = Q_p(μ_d) unramified.
//!
//! Only the component of Z_p[μ_d] picked out by the chosen factor `h` of Φ_d
//! is modeled. Elements are stored in the power basis ζ^i x^j with
//! `i < φ(p^n)`, `j < f`, where `x = ζ_d` and `ζ = ζ_{p^n}`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::arith::{cyclotomic_poly, inv_mod, modp, mult_order, pow_big, pow_mod_u64, val_p};
use crate::error::{Error, Result};
use crate::padic::PadicValue;
use crate::polymod;

/// How the Hensel seed for `h` is chosen among the factors of Φ_d mod p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedPolicy {
    #[default]
    Smallest,
    Largest,
}

impl SeedPolicy {
    pub fn from_env() -> Self {
        match std::env::var("IWF_SEED_POLICY").as_deref() {
            Ok("largest") => SeedPolicy::Largest,
            _ => SeedPolicy::Smallest,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SeedPolicy::Smallest => "smallest",
            SeedPolicy::Largest => "largest",
        }
    }
}

/// The unramified ring Z_p[x]/(h(x)) modulo p^N.
#[derive(Debug)]
pub struct BaseRing {
    p: u64,
    d: u64,
    f: usize,
    prec: u32,
    modulus: BigInt,
    h: Vec<BigInt>,
    seed: Vec<u64>,
    /// `frob[j] = x^(p j) mod h`.
    frob: Vec<Vec<BigInt>>,
}

impl BaseRing {
    pub fn new(p: u64, d: u64, prec: u32, policy: SeedPolicy) -> Result<Arc<Self>> {
        if !crate::arith::is_prime(p) || p == 2 {
            return Err(Error::DomainError(format!("{p} is not an odd prime")));
        }
        if d == 0 || d.is_multiple_of(p) {
            return Err(Error::BadModulus(d));
        }
        let f = mult_order(p % d.max(1), d) as usize;
        let phi_d = cyclotomic_poly(d);
        let pb = BigInt::from(p);
        let mut candidates = Vec::new();
        let total = (p as u128).pow(f as u32);
        for code in 0..total {
            let mut c = code;
            let mut h = Vec::with_capacity(f + 1);
            for _ in 0..f {
                h.push(BigInt::from((c % p as u128) as u64));
                c /= p as u128;
            }
            h.push(BigInt::one());
            if polymod::degree(&polymod::rem(&phi_d, &h, &pb)).is_none() {
                candidates.push(h);
            }
        }
        if f == 1 {
            // Order by the root r of x - r, not by the constant term.
            candidates.sort_by_key(|h| modp(&(-&h[0]), &pb));
        }
        let hbar = match policy {
            SeedPolicy::Smallest => candidates.first(),
            SeedPolicy::Largest => candidates.last(),
        }
        .cloned()
        .ok_or_else(|| Error::DomainError("no factor of the cyclotomic polynomial".into()))?;
        let seed: Vec<u64> = hbar.iter().map(|c| c.try_into().unwrap()).collect();
        let modulus = pow_big(p, prec);
        let mut h = polymod::hensel_factor(&phi_d, &hbar, p, prec);
        h.resize(f + 1, BigInt::zero());
        let xp = polymod::powmod(&[BigInt::zero(), BigInt::one()], p, &h, &modulus);
        let mut frob = Vec::with_capacity(f);
        let mut cur = vec![BigInt::one()];
        for _ in 0..f {
            let mut v = cur.clone();
            v.resize(f, BigInt::zero());
            frob.push(v);
            cur = polymod::rem(&polymod::mul(&cur, &xp, &modulus), &h, &modulus);
        }
        Ok(Arc::new(BaseRing {
            p,
            d,
            f,
            prec,
            modulus,
            h,
            seed,
            frob,
        }))
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn d(&self) -> u64 {
        self.d
    }
    /// Residue degree f = ord_d(p).
    pub fn degree(&self) -> usize {
        self.f
    }
    pub fn precision(&self) -> u32 {
        self.prec
    }
    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }
    pub fn defining_poly(&self) -> &[BigInt] {
        &self.h
    }
    /// Coefficients of the chosen factor of Φ_d mod p (low to high).
    pub fn seed(&self) -> &[u64] {
        &self.seed
    }

    pub(crate) fn reduce_x(&self, c: &mut Vec<BigInt>) {
        let f = self.f;
        if c.len() > f {
            for j in (f..c.len()).rev() {
                let t = std::mem::take(&mut c[j]);
                if t.is_zero() {
                    continue;
                }
                for (k, hk) in self.h.iter().enumerate().take(f) {
                    c[j - f + k] -= &t * hk;
                }
            }
            c.truncate(f);
        }
        for x in c.iter_mut() {
            *x = modp(x, &self.modulus);
        }
        c.resize(f, BigInt::zero());
    }

    pub(crate) fn mul_base(&self, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let mut c = crate::arith::poly_mul(a, b);
        self.reduce_x(&mut c);
        c
    }

    pub(crate) fn frob_base(&self, a: &[BigInt], times: usize) -> Vec<BigInt> {
        let mut cur = a.to_vec();
        for _ in 0..times % self.f {
            let mut out = vec![BigInt::zero(); self.f];
            for (j, aj) in cur.iter().enumerate() {
                if aj.is_zero() {
                    continue;
                }
                for (k, fk) in self.frob[j].iter().enumerate() {
                    out[k] += aj * fk;
                }
            }
            for x in out.iter_mut() {
                *x = modp(x, &self.modulus);
            }
            cur = out;
        }
        cur
    }

    /// `x^k` as a base vector.
    pub(crate) fn x_power(&self, k: u64) -> Vec<BigInt> {
        let v = polymod::powmod(
            &[BigInt::zero(), BigInt::one()],
            k % self.d.max(1),
            &self.h,
            &self.modulus,
        );
        let mut v = v;
        v.resize(self.f, BigInt::zero());
        if self.d == 1 {
            let mut one = vec![BigInt::zero(); self.f];
            one[0] = BigInt::one();
            return one;
        }
        v
    }

    /// Inverse of a base unit modulo p^N (Newton from the residue field inverse).
    pub(crate) fn inv_base(&self, a: &[BigInt]) -> Option<Vec<BigInt>> {
        let pb = BigInt::from(self.p);
        let abar: Vec<BigInt> = a.iter().map(|c| modp(c, &pb)).collect();
        if abar.iter().all(|c| c.is_zero()) {
            return None;
        }
        let hbar: Vec<BigInt> = self.h.iter().map(|c| modp(c, &pb)).collect();
        let q = pow_big(self.p, self.f as u32);
        let e: u64 = (q - 2u32).try_into().ok()?;
        let mut y = polymod::powmod(&abar, e, &hbar, &pb);
        y.resize(self.f, BigInt::zero());
        let mut k = 1u32;
        let mut two = vec![BigInt::zero(); self.f];
        two[0] = BigInt::from(2);
        while k < self.prec {
            k *= 2;
            let ay = self.mul_base(a, &y);
            let t: Vec<BigInt> = two.iter().zip(&ay).map(|(u, v)| u - v).collect();
            y = self.mul_base(&y, &t);
        }
        Some(y)
    }
}

/// The ring R(d,n) over a fixed base ring.
#[derive(Debug)]
pub struct LocalRing {
    base: Arc<BaseRing>,
    n: u32,
    e: usize,
    pn: u64,
}

impl LocalRing {
    pub fn new(base: &Arc<BaseRing>, n: u32) -> Arc<Self> {
        let p = base.p;
        let pn = p.pow(n);
        let e = if n == 0 { 1 } else { ((p - 1) * p.pow(n - 1)) as usize };
        Arc::new(LocalRing {
            base: base.clone(),
            n,
            e,
            pn,
        })
    }

    /// Convenience constructor: a fresh base ring plus level n.
    pub fn make(p: u64, d: u64, n: u32, prec: u32) -> Result<Arc<Self>> {
        let base = BaseRing::new(p, d, prec, SeedPolicy::from_env())?;
        Ok(Self::new(&base, n))
    }

    pub fn base(&self) -> &Arc<BaseRing> {
        &self.base
    }
    pub fn p(&self) -> u64 {
        self.base.p
    }
    pub fn d(&self) -> u64 {
        self.base.d
    }
    pub fn level(&self) -> u32 {
        self.n
    }
    /// φ(p^n), the ζ-degree.
    pub fn ramification(&self) -> usize {
        self.e
    }
    pub fn p_power(&self) -> u64 {
        self.pn
    }
    pub fn f(&self) -> usize {
        self.base.f
    }
    fn width(&self) -> usize {
        self.e * self.base.f
    }
    pub fn precision(&self) -> u32 {
        self.base.prec
    }

    pub fn same(&self, other: &LocalRing) -> bool {
        Arc::ptr_eq(&self.base, &other.base) && self.n == other.n
    }

    pub fn zero(self: &Arc<Self>) -> LocalElem {
        LocalElem {
            ring: self.clone(),
            c: vec![BigInt::zero(); self.width()],
            den: 0,
            prec: self.base.prec as i64,
        }
    }

    pub fn one(self: &Arc<Self>) -> LocalElem {
        self.from_int(&BigInt::one())
    }

    pub fn from_int(self: &Arc<Self>, k: &BigInt) -> LocalElem {
        let mut z = self.zero();
        z.c[0] = modp(k, &self.base.modulus);
        z
    }

    pub fn from_padic(self: &Arc<Self>, x: &PadicValue) -> LocalElem {
        let (r, s) = x.as_scaled_integer();
        let mut z = self.zero();
        z.c[0] = modp(&r, &self.base.modulus);
        z.den = s;
        z.prec = x.precision().min(self.base.prec as i64 - s as i64);
        z.normalize();
        z
    }

    /// An element of the base ring given by coefficients in x = ζ_d.
    pub fn from_base(self: &Arc<Self>, b: &[BigInt]) -> LocalElem {
        let mut z = self.zero();
        for (j, bj) in b.iter().enumerate().take(self.base.f) {
            z.c[j] = modp(bj, &self.base.modulus);
        }
        z
    }

    /// ζ_d^k.
    pub fn zeta_d(self: &Arc<Self>, k: u64) -> LocalElem {
        let v = self.base.x_power(k);
        self.from_base(&v)
    }

    /// ζ_{p^n}^k.
    pub fn zeta_pn(self: &Arc<Self>, k: u64) -> LocalElem {
        let mut buf = self.buffer();
        let mut one = vec![BigInt::zero(); self.base.f];
        one[0] = BigInt::one();
        self.add_monomial(&mut buf, k, &one);
        self.finish(buf, 0, self.base.prec as i64)
    }

    /// ζ_d^a ζ_{p^n}^b: the image of a root of unity of order dividing d p^n.
    pub fn root_of_unity(self: &Arc<Self>, a: u64, b: u64) -> LocalElem {
        let mut buf = self.buffer();
        let v = self.base.x_power(a);
        self.add_monomial(&mut buf, b, &v);
        self.finish(buf, 0, self.base.prec as i64)
    }

    /// Element from ζ-power coefficients; each entry is a base vector.
    pub fn from_zeta_coeffs(self: &Arc<Self>, coeffs: &[Vec<BigInt>]) -> LocalElem {
        let mut buf = self.buffer();
        for (i, b) in coeffs.iter().enumerate() {
            self.add_monomial(&mut buf, i as u64, b);
        }
        self.finish(buf, 0, self.base.prec as i64)
    }

    fn buffer(&self) -> Vec<Vec<BigInt>> {
        let len = (2 * self.e).max(self.pn as usize).max(1);
        vec![vec![BigInt::zero(); self.base.f]; len]
    }

    fn add_monomial(&self, buf: &mut [Vec<BigInt>], k: u64, b: &[BigInt]) {
        let k = if self.n == 0 { 0 } else { (k % self.pn) as usize };
        for (x, y) in buf[k].iter_mut().zip(b) {
            *x += y;
        }
    }

    /// Folds ζ-exponents ≥ φ(p^n) using Φ_{p^n}(ζ) = 0 and builds an element.
    fn finish(self: &Arc<Self>, mut buf: Vec<Vec<BigInt>>, den: u32, prec: i64) -> LocalElem {
        let e = self.e;
        if self.n >= 1 {
            let s = (self.pn / self.base.p) as usize;
            let top = buf.len();
            for j in (e..top).rev() {
                let t = std::mem::replace(&mut buf[j], vec![BigInt::zero(); self.base.f]);
                if t.iter().all(|x| x.is_zero()) {
                    continue;
                }
                for i in 0..(self.base.p as usize - 1) {
                    let target = j - e + i * s;
                    for (x, y) in buf[target].iter_mut().zip(&t) {
                        *x -= y;
                    }
                }
            }
        }
        let mut c = Vec::with_capacity(self.width());
        for b in buf.into_iter().take(e) {
            let mut b = b;
            self.base.reduce_x(&mut b);
            c.extend(b);
        }
        let mut z = LocalElem {
            ring: self.clone(),
            c,
            den,
            prec,
        };
        z.normalize();
        z
    }
}

/// An element of R(d,n)[1/p] with an explicit denominator p^den and absolute precision.
#[derive(Clone)]
pub struct LocalElem {
    ring: Arc<LocalRing>,
    c: Vec<BigInt>,
    den: u32,
    prec: i64,
}

impl fmt::Debug for LocalElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for LocalElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fdeg = self.ring.base.f;
        let mut terms = Vec::new();
        for i in 0..self.ring.e {
            for j in 0..fdeg {
                let c = &self.c[i * fdeg + j];
                if c.is_zero() {
                    continue;
                }
                let mut t = c.to_string();
                if i > 0 {
                    t.push_str(&format!("*z^{i}"));
                }
                if j > 0 {
                    t.push_str(&format!("*x^{j}"));
                }
                terms.push(t);
            }
        }
        let body = if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        };
        if self.den > 0 {
            write!(f, "({body})/{}^{}", self.ring.p(), self.den)?;
        } else {
            write!(f, "{body}")?;
        }
        write!(f, " + O({}^{})", self.ring.p(), self.prec)
    }
}

impl LocalElem {
    pub fn ring(&self) -> &Arc<LocalRing> {
        &self.ring
    }
    pub fn precision(&self) -> i64 {
        self.prec
    }
    pub fn denominator_power(&self) -> u32 {
        self.den
    }
    pub fn coeffs(&self) -> &[BigInt] {
        &self.c
    }

    /// Coefficient of ζ^i as a base vector.
    pub fn zeta_coeff(&self, i: usize) -> &[BigInt] {
        let f = self.ring.base.f;
        &self.c[i * f..(i + 1) * f]
    }

    fn normalize(&mut self) {
        let m = &self.ring.base.modulus;
        for x in self.c.iter_mut() {
            *x = modp(x, m);
        }
        let p = BigInt::from(self.ring.p());
        while self.den > 0 && self.c.iter().all(|x| x.is_multiple_of(&p)) {
            for x in self.c.iter_mut() {
                *x /= &p;
            }
            self.den -= 1;
        }
        let cap = self.ring.base.prec as i64 - self.den as i64;
        self.prec = self.prec.min(cap);
        // Drop digits below the precision so equal values compare equal.
        if self.prec + (self.den as i64) < self.ring.base.prec as i64 {
            let w = self.prec + self.den as i64;
            if w <= 0 {
                self.c.iter_mut().for_each(|x| *x = BigInt::zero());
                self.den = 0;
            } else {
                let mw = pow_big(self.ring.p(), w as u32);
                for x in self.c.iter_mut() {
                    *x = modp(x, &mw);
                }
            }
        }
    }

    /// Lower bound on the valuation from the coefficients (exact when n = 0);
    /// None for an unresolved zero.
    pub fn valuation_floor(&self) -> Option<i64> {
        self.c
            .iter()
            .filter_map(|x| val_p(x, self.ring.p()))
            .min()
            .map(|v| v as i64 - self.den as i64)
    }

    fn val_or_prec(&self) -> i64 {
        self.valuation_floor().unwrap_or(self.prec).min(self.prec)
    }

    pub fn zero_test(&self) -> crate::padic::ZeroTest {
        match self.valuation_floor() {
            Some(v) if v < self.prec => crate::padic::ZeroTest::NonZero(v),
            _ => crate::padic::ZeroTest::Unknown(self.prec),
        }
    }

    pub fn is_zero_at_precision(&self) -> bool {
        matches!(self.zero_test(), crate::padic::ZeroTest::Unknown(_))
    }

    fn check(&self, other: &Self) {
        assert!(
            self.ring.same(&other.ring),
            "elements of different rings: R({}, {}) vs R({}, {})",
            self.ring.d(),
            self.ring.n,
            other.ring.d(),
            other.ring.n
        );
    }

    fn shifted(&self, den: u32) -> Vec<BigInt> {
        let s = pow_big(self.ring.p(), den - self.den);
        self.c.iter().map(|x| x * &s).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        let d = self.den.max(other.den);
        let a = self.shifted(d);
        let b = other.shifted(d);
        let mut z = LocalElem {
            ring: self.ring.clone(),
            c: a.into_iter().zip(b).map(|(x, y)| x + y).collect(),
            den: d,
            prec: self.prec.min(other.prec),
        };
        z.normalize();
        z
    }

    pub fn neg(&self) -> Self {
        let mut z = self.clone();
        z.c.iter_mut().for_each(|x| *x = -&*x);
        z.normalize();
        z
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        let r = &self.ring;
        let f = r.base.f;
        let e = r.e;
        let mut buf = r.buffer();
        let mut prod = vec![BigInt::zero(); 2 * f - 1];
        for i1 in 0..e {
            let a = &self.c[i1 * f..(i1 + 1) * f];
            if a.iter().all(|x| x.is_zero()) {
                continue;
            }
            for i2 in 0..e {
                let b = &other.c[i2 * f..(i2 + 1) * f];
                if b.iter().all(|x| x.is_zero()) {
                    continue;
                }
                prod.iter_mut().for_each(|x| x.set_zero());
                for (j1, x) in a.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (j2, y) in b.iter().enumerate() {
                        prod[j1 + j2] += x * y;
                    }
                }
                let mut pr = prod.clone();
                r.base.reduce_x(&mut pr);
                for (t, v) in buf[i1 + i2].iter_mut().zip(pr) {
                    *t += v;
                }
            }
        }
        let prec = (self.prec + other.val_or_prec()).min(other.prec + self.val_or_prec());
        r.finish(buf, self.den + other.den, prec)
    }

    pub fn square(&self) -> Self {
        self.mul(self)
    }

    pub fn pow(&self, mut k: u64) -> Self {
        let mut acc = self.ring.one();
        let mut b = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&b);
            }
            k >>= 1;
            if k > 0 {
                b = b.square();
            }
        }
        acc
    }

    pub fn scale_int(&self, k: &BigInt) -> Self {
        self.mul(&self.ring.from_int(k))
    }

    pub fn scale_padic(&self, k: &PadicValue) -> Self {
        self.mul(&self.ring.from_padic(k))
    }

    /// Divides by p^k (adjusts the denominator only).
    pub fn div_p_power(&self, k: u32) -> Self {
        let mut z = self.clone();
        z.den += k;
        z.prec -= k as i64;
        z.normalize();
        z
    }

    /// Multiplies by p^k exactly.
    pub fn mul_p_power(&self, k: u32) -> Self {
        let mut z = self.clone();
        let take = k.min(z.den);
        z.den -= take;
        let s = pow_big(self.ring.p(), k - take);
        z.c.iter_mut().for_each(|x| *x *= &s);
        z.prec += k as i64;
        z.normalize();
        z
    }

    pub fn truncate(&self, prec: i64) -> Self {
        let mut z = self.clone();
        z.prec = z.prec.min(prec);
        z.normalize();
        z
    }

    /// Valuation of `self - other`, capped by the joint precision.
    pub fn residual_valuation(&self, other: &Self) -> i64 {
        self.sub(other).val_or_prec()
    }

    /// Sum over ζ-coefficients: the image under ζ ↦ 1, as a base vector.
    fn residue_sum(&self) -> Vec<BigInt> {
        let f = self.ring.base.f;
        let mut s = vec![BigInt::zero(); f];
        for i in 0..self.ring.e {
            for j in 0..f {
                s[j] += &self.c[i * f + j];
            }
        }
        s
    }

    /// True when the element is a unit of R(d,n).
    pub fn is_unit(&self) -> bool {
        if self.den > 0 {
            return false;
        }
        let p = BigInt::from(self.ring.p());
        self.residue_sum().iter().any(|x| !x.is_multiple_of(&p))
    }

    /// Element of the base ring if only the ζ^0 coefficient is nonzero.
    pub fn base_part(&self) -> Option<Vec<BigInt>> {
        let f = self.ring.base.f;
        if self.c[f..].iter().all(|x| x.is_zero()) {
            Some(self.c[..f].to_vec())
        } else {
            None
        }
    }

    /// For R(1,0)-style values: the element as a PadicValue.
    pub fn to_padic(&self) -> Result<PadicValue> {
        let f = self.ring.base.f;
        if self.c[1..].iter().any(|x| !x.is_zero()) {
            return Err(Error::DomainError("element is not in Q_p".into()));
        }
        let _ = f;
        Ok(PadicValue::from_parts(
            self.ring.p(),
            self.c[0].clone(),
            -(self.den as i64),
            self.prec,
        ))
    }

    fn inverse_unit(&self) -> Self {
        let r = &self.ring;
        let y0 = r.base.inv_base(&self.residue_sum()).expect("unit");
        let mut y = r.from_base(&y0);
        let target = r.base.prec as u64 * r.e as u64;
        let mut reached = 1u64;
        let two = r.from_int(&BigInt::from(2));
        while reached < target {
            y = y.mul(&two.sub(&self.mul(&y)));
            reached *= 2;
        }
        y.prec = self.prec;
        y.normalize();
        y
    }

    pub fn inv(&self) -> Result<Self> {
        let Some(v) = self.valuation_floor() else {
            return Err(Error::PrecisionExhausted(self.prec));
        };
        if v >= self.prec {
            return Err(Error::PrecisionExhausted(self.prec));
        }
        let r = &self.ring;
        // Strip p-powers so the coefficients are not all divisible by p.
        let stripped = self.strip_p(v);
        if stripped.is_unit() {
            let mut y = stripped.inverse_unit();
            // Relative precision is preserved.
            y.prec = stripped.prec.min(r.base.prec as i64);
            return Ok(y.shift_valuation(-v));
        }
        // General case: x^k = p^w u with u a unit, so x^{-1} = x^{k-1} u^{-1} / p^w.
        let e = r.e as i64;
        let vpi = valuation_in_uniformizers(&stripped).ok_or(Error::PrecisionExhausted(self.prec))?;
        let k = e / vpi.gcd(&e);
        let w = vpi * k / e;
        let z = stripped.pow(k as u64);
        match z.valuation_floor() {
            Some(vz) if vz >= w => {}
            _ => return Err(Error::PrecisionExhausted(z.prec)),
        }
        let zu = z.shift_valuation(-w);
        if !zu.is_unit() {
            return Err(Error::PrecisionExhausted(z.prec));
        }
        let y = stripped.pow(k as u64 - 1).mul(&zu.inv()?).shift_valuation(-w);
        Ok(y.shift_valuation(-v))
    }

    /// Multiplies by p^s for any sign of s.
    pub fn shift_valuation(&self, s: i64) -> Self {
        if s >= 0 {
            self.mul_p_power(s as u32)
        } else {
            self.div_p_power((-s) as u32)
        }
    }

    fn strip_p(&self, v: i64) -> Self {
        self.shift_valuation(-v)
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    /// Frobenius: acts on base coefficients, fixes ζ_{p^n}.
    pub fn frobenius_pow(&self, k: i64) -> Self {
        let r = &self.ring;
        let f = r.base.f;
        let t = k.rem_euclid(f as i64) as usize;
        if t == 0 {
            return self.clone();
        }
        let mut z = self.clone();
        for i in 0..r.e {
            let v = r.base.frob_base(&self.c[i * f..(i + 1) * f], t);
            z.c[i * f..(i + 1) * f].clone_from_slice(&v);
        }
        z.normalize();
        z
    }

    pub fn frobenius(&self) -> Self {
        self.frobenius_pow(1)
    }

    /// σ_b for b ∈ (Z/p^n)^×, acting on ζ_{p^n} and fixing the base.
    pub fn galois_cyc(&self, b: u64) -> Self {
        let r = &self.ring;
        if r.n == 0 {
            return self.clone();
        }
        let f = r.base.f;
        let mut buf = r.buffer();
        for i in 0..r.e {
            let blk = &self.c[i * f..(i + 1) * f];
            if blk.iter().all(|x| x.is_zero()) {
                continue;
            }
            let k = (i as u128 * b as u128 % r.pn as u128) as u64;
            r.add_monomial(&mut buf, k, blk);
        }
        r.finish(buf, self.den, self.prec)
    }

    /// Multiplication by ζ_{p^n}^k.
    pub fn mul_zeta_power(&self, k: u64) -> Self {
        let r = &self.ring;
        if r.n == 0 {
            return self.clone();
        }
        let f = r.base.f;
        let mut buf = r.buffer();
        for i in 0..r.e {
            let blk = &self.c[i * f..(i + 1) * f];
            if blk.iter().all(|x| x.is_zero()) {
                continue;
            }
            r.add_monomial(&mut buf, i as u64 + k, blk);
        }
        r.finish(buf, self.den, self.prec)
    }

    /// Trace to R(d,0) over all of (Z/p^n)^×.
    pub fn abs_trace(&self) -> Self {
        let r = &self.ring;
        let lower = LocalRing::new(&r.base, 0);
        if r.n == 0 {
            return self.clone();
        }
        let f = r.base.f;
        let p = r.p();
        let s = (r.pn / p) as usize;
        let full = BigInt::from(r.e as u64);
        let neg = -BigInt::from(s as u64);
        let mut out = vec![BigInt::zero(); f];
        for i in 0..r.e {
            let w = if i == 0 {
                &full
            } else if i % s == 0 {
                &neg
            } else {
                continue;
            };
            for (o, x) in out.iter_mut().zip(&self.c[i * f..(i + 1) * f]) {
                *o += x * w;
            }
        }
        let mut z = lower.from_base(&out);
        z.den = self.den;
        z.prec = self.prec;
        z.normalize();
        z
    }

    /// σ_a for a coprime to d p: ζ_d ↦ ζ_d^a, ζ_{p^n} ↦ ζ_{p^n}^a.
    /// Requires a ≡ p^k mod d, otherwise σ_a does not preserve this component.
    pub fn galois(&self, a: u64) -> Result<Self> {
        let r = &self.ring;
        let p = r.p();
        let d = r.d();
        if a.gcd(&(d * p)) != 1 {
            return Err(Error::BadGaloisIndex(a));
        }
        let k = (0..r.base.f as u64)
            .find(|&k| pow_mod_u64(p, k, d) == a % d || d == 1)
            .ok_or(Error::BadGaloisIndex(a))?;
        Ok(self.frobenius_pow(k as i64).galois_cyc(a % r.pn.max(1)))
    }

    fn sub_group_elems(&self) -> Vec<u64> {
        let r = &self.ring;
        let p = r.p();
        if r.n == 1 {
            (1..p).collect()
        } else {
            let s = r.pn / p;
            (0..p).map(|k| 1 + k * s).collect()
        }
    }

    /// Extracts the level n-1 element from a Gal(K_n/K_{n-1})-invariant one.
    fn descend(&self, lower: &Arc<LocalRing>) -> Result<Self> {
        let r = &self.ring;
        let f = r.base.f;
        let p = r.p() as usize;
        let mut out = lower.zero();
        for i in 0..r.e {
            let blk = &self.c[i * f..(i + 1) * f];
            let keep = if r.n == 1 { i == 0 } else { i % p == 0 };
            if keep {
                let t = if r.n == 1 { 0 } else { i / p };
                out.c[t * f..(t + 1) * f].clone_from_slice(blk);
            } else if blk.iter().any(|x| {
                val_p(x, r.p()).is_some_and(|v| (v as i64) - (self.den as i64) < self.prec)
            }) {
                return Err(Error::DomainError("element is not fixed by the subgroup".into()));
            }
        }
        out.den = self.den;
        out.prec = self.prec;
        out.normalize();
        Ok(out)
    }

    fn lower_ring(&self) -> Result<Arc<LocalRing>> {
        if self.ring.n == 0 {
            return Err(Error::LevelMismatch {
                expected: 1,
                found: 0,
            });
        }
        Ok(LocalRing::new(&self.ring.base, self.ring.n - 1))
    }

    pub fn norm_down(&self) -> Result<Self> {
        let lower = self.lower_ring()?;
        let mut acc = self.ring.one();
        for b in self.sub_group_elems() {
            acc = acc.mul(&self.galois_cyc(b));
        }
        acc.descend(&lower)
    }

    pub fn trace_down(&self) -> Result<Self> {
        let lower = self.lower_ring()?;
        let mut acc = self.ring.zero();
        for b in self.sub_group_elems() {
            acc = acc.add(&self.galois_cyc(b));
        }
        acc.descend(&lower)
    }

    /// Inclusion R(d,n) ⊂ R(d,n+1).
    pub fn embed_up(&self, upper: &Arc<LocalRing>) -> Self {
        assert!(Arc::ptr_eq(&upper.base, &self.ring.base) && upper.n == self.ring.n + 1);
        let f = self.ring.base.f;
        let p = self.ring.p();
        let mut buf = upper.buffer();
        for i in 0..self.ring.e {
            let k = if self.ring.n == 0 { 0 } else { i as u64 * p };
            upper.add_monomial(&mut buf, k, &self.c[i * f..(i + 1) * f]);
        }
        upper.finish(buf, self.den, self.prec)
    }

    /// Iwasawa logarithm (log p = 0, roots of unity map to 0).
    pub fn log_iw(&self) -> Result<Self> {
        let Some(v) = self.valuation_floor() else {
            return Err(Error::PrecisionExhausted(self.prec));
        };
        if v >= self.prec {
            return Err(Error::PrecisionExhausted(self.prec));
        }
        let x = self.strip_p(v);
        if x.is_unit() {
            return Ok(x.log_unit());
        }
        let r = &self.ring;
        let e = r.e as u64;
        let z = x.pow(e);
        let w = z
            .valuation_floor()
            .ok_or(Error::PrecisionExhausted(z.prec))?;
        let u = z.strip_p(w);
        if !u.is_unit() {
            return Err(Error::DomainError("could not reach a unit".into()));
        }
        let l = u.log_unit();
        let (s, ep) = crate::arith::split_p(&BigInt::from(e), r.p()).unwrap();
        let inv = inv_mod(&ep, r.base.modulus()).unwrap();
        Ok(l.scale_int(&inv).div_p_power(s))
    }

    fn log_unit(&self) -> Self {
        let r = &self.ring;
        let p = r.p();
        let q = p.pow(r.base.f as u32);
        let mut t = self.pow(q - 1);
        let one = r.one();
        let pb = BigInt::from(p);
        let mut j = 0u32;
        loop {
            let z = t.sub(&one);
            if z.c.iter().all(|x| x.is_multiple_of(&pb)) || j > r.n + 2 {
                break;
            }
            t = t.pow(p);
            j += 1;
        }
        let z = t.sub(&one);
        let nprec = r.base.prec;
        let mut sum = r.zero();
        let mut zk = r.one();
        let mut smax = 0u32;
        let mut k = 1u64;
        loop {
            let sk = val_p(&BigInt::from(k), p).unwrap();
            if k as i64 - sk as i64 > nprec as i64 {
                break;
            }
            zk = zk.mul(&z);
            if zk.is_zero_at_precision() && zk.prec >= nprec as i64 - 1 {
                break;
            }
            smax = smax.max(sk);
            let kp = BigInt::from(k / p.pow(sk));
            let kinv = inv_mod(&kp, r.base.modulus()).unwrap();
            let mut term = zk.scale_int(&kinv);
            term.c.iter_mut().for_each(|x| *x /= pow_big(p, sk));
            term.prec -= sk as i64;
            if k % 2 == 1 {
                sum = sum.add(&term);
            } else {
                sum = sum.sub(&term);
            }
            k += 1;
        }
        sum.prec = sum.prec.min(self.prec).min(nprec as i64 - smax as i64);
        let qinv = inv_mod(&BigInt::from(q - 1), r.base.modulus()).unwrap();
        let mut out = sum.scale_int(&qinv).div_p_power(j);
        out.normalize();
        out
    }
}

/// Valuation of x in units of v(ζ_{p^n} - 1), read off the norm to R(d,0).
pub fn valuation_in_uniformizers(x: &LocalElem) -> Option<i64> {
    let mut y = x.clone();
    while y.ring().level() > 0 {
        y = y.norm_down().ok()?;
    }
    y.valuation_floor()
}

/// A character η of Γ = 1 + pZ_p of finite order, with η(γ_0) = ζ_{p^n}^{p k}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FiniteOrderCharacter {
    p: u64,
    n: u32,
    k: u64,
}

impl FiniteOrderCharacter {
    pub fn trivial(p: u64) -> Self {
        FiniteOrderCharacter { p, n: 0, k: 0 }
    }

    /// Character of conductor p^n (n ≥ 2) with η(γ_0) = ζ_{p^{n-1}}^k.
    pub fn new(p: u64, n: u32, k: u64) -> Result<Self> {
        if n <= 1 {
            return Ok(Self::trivial(p));
        }
        let m = p.pow(n - 1);
        if k.is_multiple_of(p) {
            return Err(Error::NotPrimitive);
        }
        Ok(FiniteOrderCharacter { p, n, k: k % m })
    }

    /// All characters of Γ_m = Γ/Γ^{p^m}, ordered by exponent t in η(γ_0) = ζ_{p^m}^t.
    pub fn all_through_level(p: u64, m: u32) -> Vec<Self> {
        let pm = p.pow(m);
        (0..pm)
            .map(|t| {
                if t == 0 {
                    return Self::trivial(p);
                }
                let g = t.gcd(&pm);
                let order = pm / g;
                let r = order.ilog(p);
                FiniteOrderCharacter {
                    p,
                    n: r + 1,
                    k: t / g,
                }
            })
            .collect()
    }

    pub fn prime(&self) -> u64 {
        self.p
    }
    pub fn is_trivial(&self) -> bool {
        self.n == 0
    }
    /// Conductor exponent n (0 for the trivial character).
    pub fn conductor_exponent(&self) -> u32 {
        self.n
    }
    /// Smallest m with η factoring through Γ_m.
    pub fn level(&self) -> u32 {
        self.n.saturating_sub(1)
    }
    pub fn generator_exponent(&self) -> u64 {
        self.k
    }

    pub fn inverse(&self) -> Self {
        if self.is_trivial() {
            return *self;
        }
        let m = self.p.pow(self.n - 1);
        FiniteOrderCharacter {
            p: self.p,
            n: self.n,
            k: (m - self.k) % m,
        }
    }

    /// Exponent t with η(γ_0^j) = ζ_{p^n}^t.
    pub fn exponent_at(&self, j: u64) -> u64 {
        if self.is_trivial() {
            return 0;
        }
        let pn = self.p.pow(self.n);
        ((self.p as u128 * self.k as u128 * j as u128) % pn as u128) as u64
    }

    /// Exponent of ζ_{p^N} (N ≥ n) for η(γ_0^j).
    pub fn exponent_at_level(&self, j: u64, big_n: u32) -> u64 {
        if self.is_trivial() {
            return 0;
        }
        self.exponent_at(j) * self.p.pow(big_n - self.n)
    }

    /// As a Dirichlet character mod p^n: the ζ_{p^n}-exponent of η(a), for p ∤ a.
    pub fn dirichlet_exponent(&self, a: u64) -> u64 {
        if self.is_trivial() {
            return 0;
        }
        self.exponent_at(gamma_log(self.p, a, self.n))
    }

    /// η(a) in the given ring (level ≥ n).
    pub fn value_at(&self, ring: &Arc<LocalRing>, a: u64) -> LocalElem {
        if self.is_trivial() {
            return ring.one();
        }
        let e = self.dirichlet_exponent(a) * self.p.pow(ring.level() - self.n);
        ring.zeta_pn(e)
    }

    /// η(γ_0) in the given ring.
    pub fn gamma_value(&self, ring: &Arc<LocalRing>) -> LocalElem {
        ring.zeta_pn(self.exponent_at_level(1, ring.level()))
    }
}

/// j mod p^{n-1} with ⟨a⟩ ≡ (1+p)^j mod p^n.
pub fn gamma_log(p: u64, a: u64, n: u32) -> u64 {
    if n <= 1 {
        return 0;
    }
    let prec = n as i64 + 2;
    let x = PadicValue::from_i64(p, a as i64, prec).log_iw().unwrap();
    let y = PadicValue::from_i64(p, 1 + p as i64, prec).log_iw().unwrap();
    let q = x.try_div(&y).unwrap();
    let m = p.pow(n - 1);
    let r = q.residue(n - 1).unwrap();
    let r: u64 = (r % BigInt::from(m)).try_into().unwrap();
    r
}

/// Gauss sum g(η) = Σ_a η(a) ζ_{p^n}^a in R(d, n) with n the conductor exponent.
pub fn gauss_sum_local(eta: &FiniteOrderCharacter, ring: &Arc<LocalRing>) -> Result<LocalElem> {
    if eta.is_trivial() {
        return Ok(ring.one());
    }
    if ring.level() < eta.n {
        return Err(Error::LevelMismatch {
            expected: eta.n,
            found: ring.level(),
        });
    }
    let p = eta.p;
    let pn = p.pow(eta.n);
    let scale = p.pow(ring.level() - eta.n);
    let mut acc = ring.zero();
    let mut buf = ring.buffer();
    let mut one = vec![BigInt::zero(); ring.f()];
    one[0] = BigInt::one();
    for a in 1..pn {
        if a % p == 0 {
            continue;
        }
        let t = (eta.dirichlet_exponent(a) + a) % pn;
        ring.add_monomial(&mut buf, t * scale, &one);
    }
    acc = acc.add(&ring.finish(buf, 0, ring.precision() as i64));
    Ok(acc)
}

/// e_η u in tensor form E ⊗ K_m, stored as components over the basis ζ_{p^m}^t of E.
#[derive(Clone, Debug)]
pub struct EtaTensor {
    pub eta: FiniteOrderCharacter,
    pub group_level: u32,
    pub components: Vec<LocalElem>,
}

fn cyclotomic_fold(p: u64, m: u32, exps: &mut Vec<Option<LocalElem>>) {
    // ζ_{p^m}^j with j ≥ φ(p^m) folded via Φ_{p^m}.
    if m == 0 {
        return;
    }
    let pm = p.pow(m) as usize;
    let e = pm - pm / p as usize;
    let s = pm / p as usize;
    for j in (e..exps.len()).rev() {
        if let Some(t) = exps[j].take() {
            for i in 0..(p as usize - 1) {
                let idx = j - e + i * s;
                exps[idx] = Some(match exps[idx].take() {
                    Some(x) => x.sub(&t),
                    None => t.neg(),
                });
            }
        }
    }
}

/// Applies e_η = p^{-m} Σ_{g ∈ Γ_m} η(g^{-1}) g on `u` in tensor form.
pub fn e_eta_tensor(eta: &FiniteOrderCharacter, u: &LocalElem, group_level: u32) -> Result<EtaTensor> {
    let m = group_level;
    if eta.level() > m {
        return Err(Error::LevelMismatch {
            expected: eta.level(),
            found: m,
        });
    }
    let ring = u.ring();
    if ring.level() < m + 1 && m > 0 {
        return Err(Error::LevelMismatch {
            expected: m + 1,
            found: ring.level(),
        });
    }
    let p = eta.p;
    let pm = p.pow(m);
    let pn_ring = ring.p_power().max(1);
    let mut slots: Vec<Option<LocalElem>> = vec![None; pm as usize];
    let mut g = 1u64;
    for j in 0..pm {
        // η(γ_0^{-j}) = ζ_{p^m}^{-t}.
        let t = if eta.is_trivial() {
            0
        } else {
            let q = p.pow(eta.n - 1);
            (eta.k as u128 * j as u128 % q as u128) as u64 * p.pow(m + 1 - eta.n)
        };
        let t_inv = (pm - t % pm) % pm;
        let gu = u.galois_cyc(g);
        let slot = &mut slots[t_inv as usize];
        *slot = Some(match slot.take() {
            Some(x) => x.add(&gu),
            None => gu,
        });
        g = (g as u128 * (1 + p) as u128 % pn_ring as u128) as u64;
    }
    cyclotomic_fold(p, m, &mut slots);
    let width = if m == 0 { 1 } else { (pm - pm / p) as usize };
    let components = slots
        .into_iter()
        .take(width)
        .map(|x| x.unwrap_or_else(|| ring.zero()).div_p_power(m))
        .collect();
    Ok(EtaTensor {
        eta: *eta,
        group_level: m,
        components,
    })
}

impl EtaTensor {
    /// The multiplication map E ⊗ K_m → E K_m.
    pub fn collapse(&self) -> LocalElem {
        let ring = self.components[0].ring().clone();
        let p = self.eta.p;
        let shift = p.pow(ring.level() - self.group_level.min(ring.level()));
        let mut acc = ring.zero();
        for (t, c) in self.components.iter().enumerate() {
            acc = acc.add(&c.mul(&ring.zeta_pn(t as u64 * shift)));
        }
        acc
    }

    /// e_η applied again, on the second factor.
    pub fn reapply(&self) -> Result<EtaTensor> {
        let m = self.group_level;
        let p = self.eta.p;
        let pm = p.pow(m);
        let width = self.components.len();
        let mut slots: Vec<Option<LocalElem>> = vec![None; 2 * pm as usize];
        for (t, c) in self.components.iter().enumerate() {
            let inner = e_eta_tensor(&self.eta, c, m)?;
            for (s, w) in inner.components.into_iter().enumerate() {
                let idx = ((t + s) as u64 % pm.max(1)) as usize;
                let slot = &mut slots[idx];
                *slot = Some(match slot.take() {
                    Some(x) => x.add(&w),
                    None => w,
                });
            }
        }
        slots.truncate(pm.max(1) as usize);
        cyclotomic_fold(p, m, &mut slots);
        let ring = self.components[0].ring().clone();
        Ok(EtaTensor {
            eta: self.eta,
            group_level: m,
            components: slots
                .into_iter()
                .take(width)
                .map(|x| x.unwrap_or_else(|| ring.zero()))
                .collect(),
        })
    }

    pub fn residual_valuation(&self, other: &EtaTensor) -> i64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.residual_valuation(b))
            .min()
            .unwrap_or(i64::MAX)
    }
}

/// e_η u collapsed into the ring; the group is Γ_{n-1} with p^n the conductor.
pub fn e_eta_project(eta: &FiniteOrderCharacter, u: &LocalElem) -> Result<LocalElem> {
    Ok(e_eta_tensor(eta, u, eta.level())?.collapse())
}
