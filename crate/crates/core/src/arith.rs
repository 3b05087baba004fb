//! Small integer helpers shared by the algebraic modules.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub fn pow_big(p: u64, k: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), k as usize)
}

/// Least nonnegative residue.
pub fn modp(x: &BigInt, m: &BigInt) -> BigInt {
    let r = x % m;
    if r.is_negative() {
        r + m
    } else {
        r
    }
}

pub fn inv_mod(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = modp(a, m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(modp(&e.x, m))
    } else {
        None
    }
}

/// p-adic valuation of a nonzero integer.
pub fn val_p(x: &BigInt, p: u64) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut y = x.clone();
    loop {
        let (q, r) = y.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        y = q;
        v += 1;
    }
}

/// Splits `x = p^v * u` with `p ∤ u`.
pub fn split_p(x: &BigInt, p: u64) -> Option<(u32, BigInt)> {
    let v = val_p(x, p)?;
    Some((v, x / pow_big(p, v)))
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn pow_mod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let m128 = m as u128;
    let mut r = 1u128 % m128;
    let mut b128 = (b % m) as u128;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b128 % m128;
        }
        b128 = b128 * b128 % m128;
        e >>= 1;
    }
    b = r as u64;
    b
}

pub fn inv_mod_u64(a: u64, m: u64) -> Option<u64> {
    let e = (a as i128 % m as i128).extended_gcd(&(m as i128));
    if e.gcd == 1 {
        Some(e.x.rem_euclid(m as i128) as u64)
    } else {
        None
    }
}

/// Prime factorization by trial division; fine for the moduli used here.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut k = 0;
            while n.is_multiple_of(d) {
                n /= d;
                k += 1;
            }
            out.push((d, k));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factor(n).len() == 1 && factor(n)[0].1 == 1
}

pub fn euler_phi(n: u64) -> u64 {
    factor(n)
        .iter()
        .fold(n, |acc, &(q, _)| acc / q * (q - 1))
}

/// Multiplicative order of `a` modulo `m` (requires gcd = 1).
pub fn mult_order(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 1;
    }
    let phi = euler_phi(m);
    let mut ord = phi;
    for (q, _) in factor(phi) {
        while ord.is_multiple_of(q) && pow_mod_u64(a, ord / q, m) == 1 {
            ord /= q;
        }
    }
    ord
}

/// Smallest primitive root modulo an odd prime power, or modulo 2 / 4.
pub fn primitive_root(q: u64) -> u64 {
    if q <= 2 {
        return 1;
    }
    let phi = euler_phi(q);
    (2..q)
        .find(|&g| gcd_u64(g, q) == 1 && mult_order(g, q) == phi)
        .expect("prime power modulus has a primitive root")
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// Integer polynomial product (coefficients low to high).
pub fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact quotient of integer polynomials by a monic divisor.
pub fn poly_div_exact_monic(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let db = b.len() - 1;
    let mut rem = a.to_vec();
    if rem.len() <= db {
        return vec![BigInt::zero()];
    }
    let mut q = vec![BigInt::zero(); rem.len() - db];
    for i in (0..q.len()).rev() {
        let c = rem[i + db].clone();
        if c.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            rem[i + j] -= &c * bj;
        }
        q[i] = c;
    }
    debug_assert!(rem.iter().all(|x| x.is_zero()));
    q
}

/// The cyclotomic polynomial Φ_n with integer coefficients.
pub fn cyclotomic_poly(n: u64) -> Vec<BigInt> {
    let mut num = vec![BigInt::zero(); n as usize + 1];
    num[0] = -BigInt::one();
    num[n as usize] = BigInt::one();
    for d in 1..n {
        if n.is_multiple_of(d) {
            num = poly_div_exact_monic(&num, &cyclotomic_poly(d));
        }
    }
    num
}
