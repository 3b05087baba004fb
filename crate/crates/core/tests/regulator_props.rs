use std::sync::Arc;

use iwasawa_core::characters::{Cyclo, UnitTerm, UnitVector};
use iwasawa_core::cyclofield::{LocalElem, LocalRing};
use iwasawa_core::hpfloat::{Complex, Real};
use iwasawa_core::padic::PadicValue;
use iwasawa_core::stark::*;
use iwasawa_core::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

const BITS: u32 = 128;
const PREC: u32 = 30;

fn ring() -> Arc<LocalRing> {
    LocalRing::make(5, 1, 0, PREC).unwrap()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// (log|u|, log_p u, ord_p u) of a synthetic unit.
type Raw = (i64, i64, i64);

fn unit(ring: &Arc<LocalRing>, (la, lp, v): Raw) -> UnitVector {
    UnitVector::new(vec![UnitTerm {
        coeff: Cyclo::from_int(1),
        log_abs: Real::from_i64(la, BITS),
        log_p: ring.from_padic(&PadicValue::from_i64(5, lp, PREC as i64)),
        valuation: rat(v, 1),
        tag: "u".into(),
    }])
}

fn columns(ring: &Arc<LocalRing>, raw: &[Vec<Raw>]) -> Vec<Vec<UnitVector>> {
    raw.iter().map(|c| c.iter().map(|&r| unit(ring, r)).collect()).collect()
}

fn raw_entry() -> impl Strategy<Value = Raw> {
    (-30i64..30, -30i64..30, -3i64..3)
}

/// d, d⁺ and d⁺ random columns of length d.
fn setup() -> impl Strategy<Value = (usize, usize, Vec<Vec<Raw>>)> {
    (1usize..=4)
        .prop_flat_map(|d| (Just(d), 1usize..=d))
        .prop_flat_map(|(d, dp)| {
            (
                Just(d),
                Just(dp),
                prop::collection::vec(prop::collection::vec(raw_entry(), d), dp),
            )
        })
}

fn first_wedge(dp: usize) -> Vec<usize> {
    (0..dp).collect()
}

fn input(ring: &Arc<LocalRing>, dp: usize, raw: &[Vec<Raw>]) -> RegulatorInput {
    RegulatorInput {
        omega_inf: vec![(first_wedge(dp), rat(1, 1))],
        columns: columns(ring, raw),
    }
}

fn stab(d: usize, dp: usize) -> PStabilization {
    PStabilization::pure(vec![Cyclo::from_int(2); d], first_wedge(dp)).unwrap()
}

fn complex_or_zero(inp: &RegulatorInput) -> Option<Complex> {
    match complex_regulator(inp, BITS) {
        Ok(z) => Some(z),
        Err(Error::SingularWithinBound) => None,
        Err(e) => panic!("{e}"),
    }
}

fn close(a: &Complex, b: &Complex) -> bool {
    a.sub(b).contains_zero() || a.within(b, &Real::one(BITS).ldexp(-80))
}

fn padic_eq(a: &LocalElem, b: &LocalElem) -> bool {
    a.sub(b).is_zero_at_precision()
}

fn int(ring: &Arc<LocalRing>, k: i64) -> LocalElem {
    ring.from_int(&BigInt::from(k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn multilinear_in_each_column((d, dp, raw) in setup(), extra in prop::collection::vec(raw_entry(), 4), j in 0usize..4, k in -5i64..5) {
        let r = ring();
        let j = j % dp;
        let st = stab(d, dp);
        let base = input(&r, dp, &raw);
        let mut other = raw.clone();
        other[j] = extra[..d].to_vec();
        let other = input(&r, dp, &other);
        let mut sum = base.clone();
        for i in 0..d {
            sum.columns[j][i] = base.columns[j][i].add(&other.columns[j][i]);
        }
        let mut scaled = base.clone();
        for i in 0..d {
            scaled.columns[j][i] = base.columns[j][i].scale(&Cyclo::from_int(k));
        }
        let (pa, pb, ps) = (
            padic_regulator(&st, &base, &r).unwrap(),
            padic_regulator(&st, &other, &r).unwrap(),
            padic_regulator(&st, &sum, &r).unwrap(),
        );
        prop_assert!(padic_eq(&ps, &pa.add(&pb)));
        let pk = padic_regulator(&st, &scaled, &r).unwrap();
        prop_assert!(padic_eq(&pk, &pa.mul(&int(&r, k))));

        let z = Complex::zero(BITS);
        let ca = complex_or_zero(&base).unwrap_or_else(|| z.clone());
        let cb = complex_or_zero(&other).unwrap_or_else(|| z.clone());
        let cs = complex_or_zero(&sum).unwrap_or_else(|| z.clone());
        prop_assert!(close(&cs, &ca.add(&cb)));
        let ck = complex_or_zero(&scaled).unwrap_or_else(|| z.clone());
        prop_assert!(close(&ck, &ca.mul_rational(&rat(k, 1))));
    }

    #[test]
    fn alternating((d, dp, raw) in setup(), i in 0usize..4, j in 0usize..4) {
        prop_assume!(dp >= 2);
        let (i, j) = (i % dp, j % dp);
        prop_assume!(i != j);
        let r = ring();
        let st = stab(d, dp);
        let base = input(&r, dp, &raw);
        let mut swapped = raw.clone();
        swapped.swap(i, j);
        let swapped = input(&r, dp, &swapped);
        let pa = padic_regulator(&st, &base, &r).unwrap();
        let pb = padic_regulator(&st, &swapped, &r).unwrap();
        prop_assert!(padic_eq(&pa, &pb.neg()));
        let z = Complex::zero(BITS);
        let ca = complex_or_zero(&base).unwrap_or_else(|| z.clone());
        let cb = complex_or_zero(&swapped).unwrap_or_else(|| z.clone());
        prop_assert!(close(&ca, &cb.neg()));

        let mut dup = raw.clone();
        dup[j] = dup[i].clone();
        let dup = input(&r, dp, &dup);
        prop_assert!(padic_regulator(&st, &dup, &r).unwrap().is_zero_at_precision());
        prop_assert_eq!(complex_regulator(&dup, BITS).unwrap_err(), Error::SingularWithinBound);
        let adm = is_admissible(&st, &dup, &r);
        prop_assert!(matches!(adm, Admissibility::Unknown { .. }), "{:?}", adm);
    }

    #[test]
    fn basis_change_scales_both_sides_by_det((d, dp, raw) in setup(), m in prop::collection::vec(-3i64..=3, 16), w in 1i64..6) {
        let r = ring();
        let st = stab(d, dp);
        let base = input(&r, dp, &raw);
        // ψ'_j = Σ_k M_kj ψ_k
        let mat: Vec<Vec<i64>> = (0..dp).map(|k| (0..dp).map(|j| m[k * 4 + j]).collect()).collect();
        let det = int_det(&mat);
        prop_assume!(det != 0);
        let mut changed = base.clone();
        for j in 0..dp {
            for i in 0..d {
                let mut acc = UnitVector::zero();
                for k in 0..dp {
                    acc = acc.add(&base.columns[k][i].scale(&Cyclo::from_int(mat[k][j])));
                }
                changed.columns[j][i] = acc;
            }
        }
        let pa = padic_regulator(&st, &base, &r).unwrap();
        let pc = padic_regulator(&st, &changed, &r).unwrap();
        prop_assert!(padic_eq(&pc, &pa.mul(&int(&r, det))));
        // rescaling the rational structure ω_∞ by w scales only the complex side
        let mut rescaled = changed.clone();
        rescaled.omega_inf[0].1 = rat(w, 1);
        let z = Complex::zero(BITS);
        let ca = complex_or_zero(&base).unwrap_or_else(|| z.clone());
        let cc = complex_or_zero(&changed).unwrap_or_else(|| z.clone());
        let cr = complex_or_zero(&rescaled).unwrap_or_else(|| z.clone());
        prop_assert!(close(&cc, &ca.mul_rational(&rat(det, 1))));
        prop_assert!(close(&cr, &cc.mul_rational(&rat(w, 1))));
        // hence R_p / R_∞ moves only with ω_∞, never with the ψ basis
    }

    #[test]
    fn l_invariant_is_one_without_exceptional_zero((d, dp, raw) in setup(), eig in prop::collection::vec(prop::sample::select(vec![-1i64, 2, 3, 7]), 4), ones_in_plus in any::<bool>()) {
        let r = ring();
        let mut eigs: Vec<Cyclo> = eig[..d].iter().map(|&k| Cyclo::from_int(k)).collect();
        if ones_in_plus {
            eigs[0] = Cyclo::from_int(1);
        }
        let st = PStabilization::pure(eigs, first_wedge(dp)).unwrap();
        prop_assert_eq!(st.e(), 0);
        match l_invariant(&st, &columns(&r, &raw), &[], &r) {
            Ok(l) => prop_assert!(l.value.residual_valuation(&r.one()) >= PREC as i64 - 12),
            Err(Error::InadmissibleStabilization) => {
                let inp = input(&r, dp, &raw);
                let adm = is_admissible(&st, &inp, &r);
                prop_assert!(matches!(adm, Admissibility::Unknown { .. }), "{:?}", adm);
            }
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn stabilization_change_is_linear((d, dp, raw) in setup(), picks in prop::collection::vec((0u32..16, -6i64..6, 1i64..5), 1..4)) {
        let r = ring();
        let eigs = vec![Cyclo::from_int(3); d];
        let inp = input(&r, dp, &raw);
        let subsets = subsets_of_size(d, dp);
        let terms: Vec<(Vec<usize>, BigRational)> = picks
            .iter()
            .map(|&(s, a, b)| (subsets[s as usize % subsets.len()].clone(), rat(a, b)))
            .collect();
        let Ok(st) = PStabilization::new(eigs.clone(), terms.clone()) else {
            // every coefficient was zero
            prop_assume!(false);
            unreachable!()
        };
        let whole = padic_regulator(&st, &inp, &r).unwrap();
        let mut acc = r.zero();
        for (alpha, c) in stabilization_decompose(&st) {
            let pure = PStabilization::pure(eigs.clone(), alpha).unwrap();
            let q = r.from_padic(&PadicValue::from_rational(5, &c, PREC as i64));
            acc = acc.add(&padic_regulator(&pure, &inp, &r).unwrap().mul(&q));
        }
        prop_assert!(padic_eq(&whole, &acc));
    }
}

fn int_det(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<i64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, &x)| x).collect())
                .collect();
            let s = if j % 2 == 0 { 1 } else { -1 };
            s * m[0][j] * int_det(&minor)
        })
        .sum()
}

fn subsets_of_size(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    for mask in 0u32..(1 << d) {
        if mask.count_ones() as usize == k {
            out.push((0..d).filter(|i| mask >> i & 1 == 1).collect());
        }
    }
    out
}
