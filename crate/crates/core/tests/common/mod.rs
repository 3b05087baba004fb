//! Exact special values from the Bernoulli recursion, independent of the library's
//! own Bernoulli code. Shared with the CLI acceptance target.
#![allow(dead_code)]

use std::sync::Arc;

use iwasawa_core::characters::DirichletData;
use iwasawa_core::cyclofield::{FiniteOrderCharacter, LocalElem, LocalRing};
use iwasawa_core::padic::PadicValue;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Bernoulli numbers from the recursion Σ_{k<n+1} C(n+1,k) B_k = 0.
pub fn bernoulli(n: usize) -> Vec<BigRational> {
    let mut b = vec![BigRational::one()];
    for m in 1..=n {
        let mut s = BigRational::zero();
        let mut binom = BigInt::one();
        for (k, bk) in b.iter().enumerate() {
            s += BigRational::from_integer(binom.clone()) * bk;
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        b.push(-s / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// B_n(x) = Σ C(n,k) B_k x^{n-k}.
pub fn bernoulli_poly(n: usize, x: &BigRational, b: &[BigRational]) -> BigRational {
    let mut s = BigRational::zero();
    let mut binom = BigInt::one();
    for k in 0..=n {
        s += BigRational::from_integer(binom.clone()) * &b[k] * num_traits::pow(x.clone(), n - k);
        binom = binom * BigInt::from(n - k) / BigInt::from(k + 1);
    }
    s
}

/// -(1 - ψ(p)p^{n-1}) B_{n,ψ}/n for ψ = χ·ω^k·η, with ω taken from Teichmüller lifts
/// and B_{n,ψ} = F^{n-1} Σ_{a ≤ F} ψ(a) B_n(a/F) over the modulus F = lcm(d, p, p^r).
/// ψ(p) is nonzero only when ω^k and η are both trivial.
pub fn oracle(
    chi: &DirichletData,
    k: i64,
    eta: &FiniteOrderCharacter,
    n: usize,
    target: &Arc<LocalRing>,
) -> LocalElem {
    let p = target.p();
    let ring = &LocalRing::make(p, target.d(), target.level(), target.precision() + 6).unwrap();
    let prec = ring.precision() as i64 + 4;
    let b = bernoulli(n);
    let pk = p.pow(eta.conductor_exponent().max(1));
    let f = chi.modulus() * pk;
    let omega_trivial = k.rem_euclid(p as i64 - 1) == 0;
    let mut acc = ring.zero();
    for a in 1..=f {
        if chi.value_exp(a as i64).is_none() {
            continue;
        }
        if a % p == 0 && !(omega_trivial && eta.is_trivial()) {
            continue;
        }
        let mut v = chi.value(a as i64).to_local(ring).unwrap();
        if a % p != 0 {
            let w = PadicValue::teichmuller(p, &BigInt::from(a), prec).unwrap();
            v = v.mul(&ring.from_padic(&w.pow(k).unwrap()));
            v = v.mul(&eta.value_at(ring, a));
        }
        let bn = bernoulli_poly(n, &rat(a as i64, f as i64), &b)
            * BigRational::from_integer(num_traits::pow(BigInt::from(f), n - 1));
        acc = acc.add(&v.mul(&ring.from_padic(&PadicValue::from_rational(p, &bn, prec))));
    }
    // the sum over the imprimitive modulus already removes the Euler factor at p,
    // unless ψ is unramified at p
    let mut val = acc.mul(&ring.from_padic(&PadicValue::from_rational(p, &rat(-1, n as i64), prec)));
    if omega_trivial && eta.is_trivial() {
        let chip = chi.value(p as i64).to_local(ring).unwrap();
        let pp = ring.from_int(&num_traits::pow(BigInt::from(p), n - 1));
        // Σ over a ≤ F with p | a included gives B_{n,χ}; depleting it:
        val = val.mul(&ring.one().sub(&chip.mul(&pp)));
    }
    project(&val, target)
}

/// Reduce an integral element of a higher-precision copy of `target` into `target`.
pub fn project(x: &LocalElem, target: &Arc<LocalRing>) -> LocalElem {
    assert_eq!(x.denominator_power(), 0, "oracle value is not integral");
    let chunks: Vec<Vec<BigInt>> = x.coeffs().chunks(target.f()).map(|c| c.to_vec()).collect();
    target.from_zeta_coeffs(&chunks).truncate(x.precision())
}
