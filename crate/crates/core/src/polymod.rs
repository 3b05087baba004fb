//! Dense polynomials over Z/p^k (coefficients low to high).

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{inv_mod, modp};

pub type Poly = Vec<BigInt>;

pub fn trim(mut a: Poly) -> Poly {
    while a.len() > 1 && a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    if a.is_empty() {
        a.push(BigInt::zero());
    }
    a
}

pub fn reduce(a: &[BigInt], m: &BigInt) -> Poly {
    trim(a.iter().map(|c| modp(c, m)).collect())
}

pub fn degree(a: &[BigInt]) -> Option<usize> {
    a.iter().rposition(|c| !c.is_zero())
}

pub fn add(a: &[BigInt], b: &[BigInt], m: &BigInt) -> Poly {
    let n = a.len().max(b.len());
    let z = BigInt::zero();
    let out: Poly = (0..n)
        .map(|i| a.get(i).unwrap_or(&z) + b.get(i).unwrap_or(&z))
        .collect();
    reduce(&out, m)
}

pub fn sub(a: &[BigInt], b: &[BigInt], m: &BigInt) -> Poly {
    let n = a.len().max(b.len());
    let z = BigInt::zero();
    let out: Poly = (0..n)
        .map(|i| a.get(i).unwrap_or(&z) - b.get(i).unwrap_or(&z))
        .collect();
    reduce(&out, m)
}

pub fn mul(a: &[BigInt], b: &[BigInt], m: &BigInt) -> Poly {
    reduce(&crate::arith::poly_mul(a, b), m)
}

pub fn scale(a: &[BigInt], c: &BigInt, m: &BigInt) -> Poly {
    reduce(&a.iter().map(|x| x * c).collect::<Vec<_>>(), m)
}

/// Division with remainder by a polynomial whose leading coefficient is a unit mod m.
pub fn divrem(a: &[BigInt], b: &[BigInt], m: &BigInt) -> (Poly, Poly) {
    let b = reduce(b, m);
    let db = degree(&b).expect("nonzero divisor");
    let lead_inv = inv_mod(&b[db], m).expect("unit leading coefficient");
    let mut r = reduce(a, m);
    let Some(da) = degree(&r) else {
        return (vec![BigInt::zero()], r);
    };
    if da < db {
        return (vec![BigInt::zero()], r);
    }
    let mut q = vec![BigInt::zero(); da - db + 1];
    for i in (0..=da - db).rev() {
        let c = modp(&(&r[i + db] * &lead_inv), m);
        if c.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(db + 1) {
            r[i + j] = modp(&(&r[i + j] - &c * bj), m);
        }
        q[i] = c;
    }
    (trim(q), trim(r))
}

pub fn rem(a: &[BigInt], b: &[BigInt], m: &BigInt) -> Poly {
    divrem(a, b, m).1
}

/// Bezout pair over F_p: s*a + t*b = 1 (a, b coprime).
pub fn bezout(a: &[BigInt], b: &[BigInt], p: &BigInt) -> Option<(Poly, Poly)> {
    let (mut r0, mut r1) = (reduce(a, p), reduce(b, p));
    let (mut s0, mut s1) = (vec![BigInt::one()], vec![BigInt::zero()]);
    let (mut t0, mut t1) = (vec![BigInt::zero()], vec![BigInt::one()]);
    while degree(&r1).is_some() {
        let (q, r) = divrem(&r0, &r1, p);
        let s = sub(&s0, &mul(&q, &s1, p), p);
        let t = sub(&t0, &mul(&q, &t1, p), p);
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
        t0 = std::mem::replace(&mut t1, t);
    }
    if degree(&r0) != Some(0) {
        return None;
    }
    let c = inv_mod(&r0[0], p)?;
    Some((scale(&s0, &c, p), scale(&t0, &c, p)))
}

pub fn powmod(base: &[BigInt], mut e: u64, modulus: &[BigInt], m: &BigInt) -> Poly {
    let mut acc = vec![BigInt::one()];
    let mut b = rem(base, modulus, m);
    while e > 0 {
        if e & 1 == 1 {
            acc = rem(&mul(&acc, &b, m), modulus, m);
        }
        e >>= 1;
        if e > 0 {
            b = rem(&mul(&b, &b, m), modulus, m);
        }
    }
    acc
}

/// Lifts a coprime factorization `F = h g (mod p)` with `h` monic to `mod p^n`.
pub fn hensel_factor(f: &[BigInt], h: &[BigInt], p: u64, n: u32) -> Poly {
    let pb = BigInt::from(p);
    let (g, r) = divrem(f, h, &pb);
    debug_assert!(degree(&r).is_none());
    let (s, t) = bezout(h, &g, &pb).expect("coprime factors");
    let mut h = reduce(h, &pb);
    let mut g = g;
    let mut pk = pb.clone();
    for _ in 1..n {
        let big_m = &pk * &pb;
        let diff = sub(f, &mul(&h, &g, &big_m), &big_m);
        let e: Poly = diff.iter().map(|c| modp(&(c / &pk), &pb)).collect();
        let (q, a) = divrem(&mul(&t, &e, &pb), &h, &pb);
        let b = add(&mul(&q, &g, &pb), &mul(&s, &e, &pb), &pb);
        h = add(&h, &scale(&a, &pk, &big_m), &big_m);
        g = add(&g, &scale(&b, &pk, &big_m), &big_m);
        pk = big_m;
    }
    h
}
