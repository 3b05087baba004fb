//! Small determinants over the local rings and over Q.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::cyclofield::LocalElem;
use crate::error::{Error, Result};

/// Permutations of 0..n with their signs, in lexicographic order.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<(Vec<usize>, i32)>) {
        let n = used.len();
        if cur.len() == n {
            let mut sign = 1;
            for i in 0..n {
                for j in i + 1..n {
                    if cur[i] > cur[j] {
                        sign = -sign;
                    }
                }
            }
            out.push((cur.clone(), sign));
            return;
        }
        for k in 0..n {
            if !used[k] {
                used[k] = true;
                cur.push(k);
                rec(cur, used, out);
                cur.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Leibniz expansion; division free, so precision is tracked exactly.
pub fn det_local(m: &[Vec<LocalElem>]) -> Result<LocalElem> {
    let n = m.len();
    if n == 0 {
        return Err(Error::DomainError("empty matrix".into()));
    }
    if m.iter().any(|r| r.len() != n) {
        return Err(Error::DomainError("matrix is not square".into()));
    }
    if n > 7 {
        return Err(Error::DomainError("matrix too large for Leibniz expansion".into()));
    }
    let ring = m[0][0].ring().clone();
    let mut acc = ring.zero();
    for (perm, sign) in permutations(n) {
        let mut t = ring.one();
        for (i, &j) in perm.iter().enumerate() {
            t = t.mul(&m[i][j]);
        }
        acc = if sign > 0 { acc.add(&t) } else { acc.sub(&t) };
    }
    Ok(acc)
}

/// Gaussian elimination over Q.
pub fn det_rational(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(piv) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return BigRational::zero();
        };
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        let pv = a[c][c].clone();
        det *= &pv;
        for r in c + 1..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &pv;
            for k in c..n {
                let t = &f * &a[c][k];
                a[r][k] -= t;
            }
        }
    }
    det
}

pub fn det_int(m: &[Vec<i64>]) -> BigInt {
    let q: Vec<Vec<BigRational>> = m
        .iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
        .collect();
    det_rational(&q).to_integer()
}
