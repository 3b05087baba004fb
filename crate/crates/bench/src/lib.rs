//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use iwasawa_core::characters::DirichletData;
use iwasawa_core::cyclofield::{BaseRing, LocalRing, SeedPolicy};
use iwasawa_core::PowerSeries;
use num_bigint::BigInt;

pub fn chi12() -> DirichletData {
    DirichletData::builtin("mod12_quadratic").unwrap()
}

/// R(12, 0) over Q_5 at precision 12, where χ mod 12 takes its values.
pub fn ring_5_12() -> Arc<LocalRing> {
    LocalRing::make(5, 12, 0, 12).unwrap()
}

/// A unit power series over Z_3 with `n` coefficients, from a fixed LCG.
pub fn unit_series(n: usize, seed: u64) -> PowerSeries {
    let ring = LocalRing::new(&BaseRing::new(3, 1, 10, SeedPolicy::Smallest).unwrap(), 0);
    let mut x = seed;
    let mut coeffs = Vec::with_capacity(n);
    for i in 0..n {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut c = (x >> 33) as i64 % 20_000;
        if i == 0 && c % 3 == 0 {
            c += 1;
        }
        coeffs.push(BigInt::from(c));
    }
    PowerSeries::from_ints(&ring, &coeffs, n)
}
