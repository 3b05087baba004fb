use std::collections::BTreeMap;
use std::sync::Arc;

use iwasawa_core::characters::{Cyclo, DirichletData, UnitTerm, UnitVector};
use iwasawa_core::cyclofield::{FiniteOrderCharacter, LocalRing};
use iwasawa_core::hpfloat::Real;
use iwasawa_core::measures::{FractionalMeasure, IwasawaMeasure};
use iwasawa_core::padic::PadicValue;
use iwasawa_core::stark::*;
use iwasawa_core::Error;
use num_bigint::BigInt;
use num_rational::BigRational;

const BITS: u32 = 160;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn c(k: i64) -> Cyclo {
    Cyclo::from_int(k)
}

fn ring5() -> Arc<LocalRing> {
    LocalRing::make(5, 1, 0, 20).unwrap()
}

/// A synthetic unit with log|u| = la, log_p u = lp and ord_p u = v.
fn term(ring: &Arc<LocalRing>, la: i64, lp: i64, v: i64) -> UnitTerm {
    UnitTerm {
        coeff: c(1),
        log_abs: Real::from_i64(la, BITS),
        log_p: ring.from_padic(&PadicValue::from_i64(ring.p(), lp, ring.precision() as i64)),
        valuation: rat(v, 1),
        tag: "u".into(),
    }
}

fn unit(ring: &Arc<LocalRing>, la: i64, lp: i64, v: i64) -> UnitVector {
    UnitVector::new(vec![term(ring, la, lp, v)])
}

fn golden_ratio() -> QuadraticElement {
    // (1 + √5)/2, with √5 ≡ 4 mod 11
    QuadraticElement { disc: 5, a: 1, b: 1, den: 2, p: 11, sqrt_residue: 4 }
}

#[test]
fn complex_regulator_mod5_is_twice_log_phi() {
    let ring = LocalRing::make(11, 2, 0, 10).unwrap();
    let chi = DirichletData::builtin("mod5_quadratic").unwrap();
    let orbit = golden_ratio().orbit(&chi, &ring, BITS).unwrap();
    let pu = monomial_unit_projection(&chi, &[1, 2], &orbit).unwrap();
    let input = RegulatorInput { omega_inf: vec![(vec![0], rat(1, 1))], columns: vec![vec![pu.unit]] };
    let r = complex_regulator(&input, BITS).unwrap();
    let phi = Real::from_i64(5, BITS).sqrt().unwrap().add(&Real::one(BITS)).ldexp(-1);
    let want = phi.ln().unwrap().ldexp(1).neg();
    assert!(r.within(&iwasawa_core::hpfloat::Complex::from_real(want), &Real::one(BITS).ldexp(-120)));
}

#[test]
fn column_swap_and_scaling() {
    let ring = ring5();
    let cols = vec![
        vec![unit(&ring, 3, 5, 0), unit(&ring, 1, 10, 0)],
        vec![unit(&ring, -2, 15, 0), unit(&ring, 7, 20, 0)],
    ];
    let stab = PStabilization::pure(vec![c(2), c(3)], vec![0, 1]).unwrap();
    let input = RegulatorInput { omega_inf: vec![(vec![0, 1], rat(1, 1))], columns: cols.clone() };
    let swapped = RegulatorInput {
        omega_inf: input.omega_inf.clone(),
        columns: vec![cols[1].clone(), cols[0].clone()],
    };
    let a = complex_regulator(&input, BITS).unwrap();
    let b = complex_regulator(&swapped, BITS).unwrap();
    assert!(a.add(&b).contains_zero());
    let pa = padic_regulator(&stab, &input, &ring).unwrap();
    let pb = padic_regulator(&stab, &swapped, &ring).unwrap();
    assert!(pa.add(&pb).is_zero_at_precision());
    // 3·ω_∞ triples the regulator
    let tripled = RegulatorInput { omega_inf: vec![(vec![0, 1], rat(3, 1))], columns: cols };
    let t = complex_regulator(&tripled, BITS).unwrap();
    assert!(t.sub(&a.mul_rational(&rat(3, 1))).contains_zero());
}

#[test]
fn l_invariant_trivial_without_exceptional_zero() {
    let ring = ring5();
    let stab = PStabilization::pure(vec![c(2), c(1)], vec![1]).unwrap();
    assert_eq!(stab.e(), 0);
    let psi = vec![vec![unit(&ring, 1, 5, 0), unit(&ring, 2, 25, 0)]];
    let l = l_invariant(&stab, &psi, &[], &ring).unwrap();
    assert!(l.value.residual_valuation(&ring.one()) >= 15);
}

#[test]
fn gross_l_invariant_is_log_over_ord() {
    let ring = ring5();
    let stab = PStabilization::pure(vec![c(1)], vec![]).unwrap();
    assert_eq!(stab.e(), 1);
    let u = unit(&ring, 0, 30, 2);
    let l = l_invariant(&stab, &[], &[vec![u]], &ring).unwrap();
    let want = ring.from_padic(&PadicValue::from_i64(5, 15, 20));
    assert!(l.value.residual_valuation(&want) >= 15);
    let j = l.to_json();
    assert!(j["O_minus"].is_array());
}

#[test]
fn block_diagonal_l_invariant_multiplies() {
    let ring = ring5();
    let stab = PStabilization::pure(vec![c(1), c(1)], vec![]).unwrap();
    let u = unit(&ring, 0, 10, 1);
    let v = unit(&ring, 0, 75, 3);
    let cols = vec![vec![u, UnitVector::zero()], vec![UnitVector::zero(), v]];
    let l = l_invariant(&stab, &[], &cols, &ring).unwrap();
    // (10/1)(75/3) = 250
    let want = ring.from_padic(&PadicValue::from_i64(5, 250, 20));
    assert!(l.value.residual_valuation(&want) >= 15);
}

#[test]
fn singular_o_minus_and_inadmissible() {
    let ring = ring5();
    let stab = PStabilization::pure(vec![c(1)], vec![]).unwrap();
    let u = unit(&ring, 0, 30, 0);
    assert_eq!(l_invariant(&stab, &[], &[vec![u]], &ring).unwrap_err(), Error::SingularOMinus);
    let stab = PStabilization::pure(vec![c(2)], vec![0]).unwrap();
    let z = vec![vec![unit(&ring, 1, 0, 0)]];
    assert_eq!(l_invariant(&stab, &z, &[], &ring).unwrap_err(), Error::InadmissibleStabilization);
}

#[test]
fn euler_factor_weight_one() {
    let ring = LocalRing::make(5, 4, 0, 12).unwrap();
    // χ(p) = 1 in W^- contributes nothing
    let e = euler_factor(&PStabilization::pure(vec![c(1)], vec![]).unwrap(), &ring).unwrap();
    assert!(e.residual_valuation(&ring.one()) >= 12);
    // χ(p) = -1 in W^-: 1 - (-1)^{-1} = 2
    let e = euler_factor(&PStabilization::pure(vec![c(-1)], vec![]).unwrap(), &ring).unwrap();
    assert!(e.residual_valuation(&ring.from_int(&2.into())) >= 12);
    // χ(p) = i, one in each part: (1 - i/5)(1 - i) with ζ_4 = i
    let i = Cyclo::root(4, 1);
    let st = PStabilization::pure(vec![i.clone(), i.clone()], vec![0]).unwrap();
    let e = euler_factor(&st, &ring).unwrap();
    let il = i.to_local(&ring).unwrap();
    let want = ring.one().sub(&il.div_p_power(1)).mul(&ring.one().sub(&il.inv().unwrap()));
    assert!(e.residual_valuation(&want) >= 10);
}

#[test]
fn decompose_merges_and_combine_is_linear() {
    let st = PStabilization::new(
        vec![c(2), c(2), c(2)],
        vec![(vec![0], rat(1, 2)), (vec![1], rat(1, 3)), (vec![0], rat(1, 2))],
    )
    .unwrap();
    let d = stabilization_decompose(&st);
    assert_eq!(d, vec![(vec![0], rat(1, 1)), (vec![1], rat(1, 3))]);

    let ring = LocalRing::make(5, 1, 0, 10).unwrap();
    let a = IwasawaMeasure::from_ints(&ring, 2, &(0..25).map(BigInt::from).collect::<Vec<_>>()).unwrap();
    let b = IwasawaMeasure::dirac(&ring, 2, 3);
    let (fa, fb) = (FractionalMeasure::from_measure(a), FractionalMeasure::from_measure(b));
    let comb = combine_theta(&[fa.clone(), fb.clone()], &[rat(2, 1), rat(-1, 3)]).unwrap();
    for eta in FiniteOrderCharacter::all_through_level(5, 2) {
        let lhs = comb.eval_character(&eta).unwrap();
        let two = lhs.ring().from_int(&2.into());
        let third = lhs.ring().from_padic(&PadicValue::from_rational(5, &rat(-1, 3), 10));
        let rhs = fa.eval_character(&eta).unwrap().mul(&two).add(&fb.eval_character(&eta).unwrap().mul(&third));
        assert!(lhs.residual_valuation(&rhs) >= 9);
    }
    assert!(combine_theta(&[fa], &[rat(1, 1), rat(1, 1)]).is_err());
}

#[test]
fn eigenvalue_mismatch_rejected() {
    let r = PStabilization::new(vec![c(2), c(3)], vec![(vec![0], rat(1, 1)), (vec![1], rat(1, 1))]);
    assert_eq!(r.unwrap_err(), Error::EigenvalueListMismatch);
    let st = PStabilization::new(vec![c(2), c(2)], vec![(vec![0], rat(1, 1)), (vec![1], rat(2, 1))]).unwrap();
    let back = PStabilization::from_json(&st.to_json()).unwrap();
    assert_eq!(back.terms(), st.terms());
}

#[test]
fn unit_projection_cases() {
    let ring = LocalRing::make(11, 2, 0, 10).unwrap();
    let chi = DirichletData::builtin("mod5_quadratic").unwrap();
    let orbit = golden_ratio().orbit(&chi, &ring, BITS).unwrap();
    assert_eq!(
        monomial_unit_projection(&DirichletData::trivial(), &[1], &orbit).unwrap_err(),
        Error::TrivialCharacter
    );
    let pu = monomial_unit_projection(&chi, &[1, 2], &orbit).unwrap();
    assert_eq!(pu.unit.terms.len(), 2);
    assert_eq!(pu.unit.terms[0].tag, "alpha");
    // 2^{-1} = 3 and χ(3) = -1
    assert_eq!(pu.unit.terms[1].tag, "alpha_bar");
    let mut partial: BTreeMap<u64, UnitTerm> = orbit.clone();
    partial.remove(&3);
    assert_eq!(monomial_unit_projection(&chi, &[1, 2], &partial).unwrap_err(), Error::IncompleteOrbit);

    // the mod 11 p-unit has nonzero ord_p after projection
    let ring = LocalRing::make(5, 4, 0, 12).unwrap();
    let chi = DirichletData::builtin("mod11_odd").unwrap();
    let q = QuadraticElement { disc: -11, a: 3, b: 1, den: 2, p: 5, sqrt_residue: 2 };
    let pu = monomial_unit_projection(&chi, &[1, 10], &q.orbit(&chi, &ring, BITS).unwrap()).unwrap();
    assert!(!pu.unit.ord_exact().is_zero());
    let j = q.to_json();
    assert_eq!(QuadraticElement::from_json(&j).unwrap().disc, -11);
}

#[test]
fn admissibility_proved_or_unknown() {
    let ring = ring5();
    let stab = PStabilization::pure(vec![c(2), c(3)], vec![0]).unwrap();
    let good = RegulatorInput {
        omega_inf: vec![(vec![0], rat(1, 1))],
        columns: vec![vec![unit(&ring, 1, 50, 0), unit(&ring, 1, 1, 0)]],
    };
    assert_eq!(is_admissible(&stab, &good, &ring), Admissibility::Admissible { valuation: 2 });
    let zero = RegulatorInput {
        omega_inf: vec![(vec![0], rat(1, 1))],
        columns: vec![vec![UnitVector::zero(), unit(&ring, 1, 1, 0)]],
    };
    assert!(matches!(is_admissible(&stab, &zero, &ring), Admissibility::Unknown { .. }));
}
