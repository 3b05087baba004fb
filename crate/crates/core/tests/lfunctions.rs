use iwasawa_core::characters::DirichletData;
use iwasawa_core::cyclofield::{FiniteOrderCharacter, LocalRing};
use iwasawa_core::lfunctions::*;
use iwasawa_core::padic::PadicValue;
use iwasawa_core::stark::{monomial_unit_projection, PStabilization, QuadraticElement};
use iwasawa_core::Error;

mod common;

use common::{bernoulli, oracle, rat};

fn chi12() -> DirichletData {
    DirichletData::builtin("mod12_quadratic").unwrap()
}

#[test]
fn bernoulli_recursion_sanity() {
    let b = bernoulli(4);
    assert_eq!(b[1], rat(-1, 2));
    assert_eq!(b[2], rat(1, 6));
    assert_eq!(b[4], rat(-1, 30));
}

#[test]
fn interpolation_mod12_level4_matches_oracle() {
    let ring = LocalRing::make(5, 12, 0, 12).unwrap();
    let dr = DeligneRibetMeasure::new(&chi12(), &ring, 4, None).unwrap();
    assert_eq!(dr.regularizer(), 7);
    for eta in etas_with_conductors(5, &[0, 2]) {
        for n in 1..=4i64 {
            let got = dr.eval(&eta, n).unwrap();
            let want = oracle(&chi12(), -n, &eta, n as usize, got.value.ring());
            let r = got.value.residual_valuation(&want);
            assert!(r >= got.certificate, "eta={eta:?} n={n}: {r} < {}", got.certificate);
            assert_eq!(got.certificate, if n == 1 { 12 } else { 5 });
        }
    }
}

#[test]
fn library_target_agrees_with_test_oracle() {
    let ring = LocalRing::make(5, 12, 2, 12).unwrap();
    let dr = DeligneRibetMeasure::new(&chi12(), &LocalRing::make(5, 12, 0, 12).unwrap(), 2, None).unwrap();
    for eta in etas_with_conductors(5, &[0, 2]) {
        for n in 1..=3i64 {
            let lib = interpolation_value(&dr.twisted_character(&eta, n), n as u32, 5).unwrap();
            let want = oracle(&chi12(), -n, &eta, n as usize, &ring);
            let lib = lib.to_local(&LocalRing::new(ring.base(), eta.conductor_exponent())).unwrap();
            let lib = iwasawa_core::characters::lift_to(&lib, &ring).unwrap();
            assert!(lib.residual_valuation(&want) >= 10, "eta={eta:?} n={n}");
        }
    }
}

#[test]
fn n_equals_one_is_exact_for_nontrivial_eta() {
    let ring = LocalRing::make(5, 12, 0, 12).unwrap();
    let dr = DeligneRibetMeasure::new(&chi12(), &ring, 2, None).unwrap();
    let eta = FiniteOrderCharacter::new(5, 2, 3).unwrap();
    let got = dr.eval(&eta, 1).unwrap();
    let want = oracle(&chi12(), -1, &eta, 1, got.value.ring());
    assert!(got.value.residual_valuation(&want) >= 12);
}

#[test]
fn regularizer_independence() {
    let ring = LocalRing::make(5, 12, 0, 12).unwrap();
    let a = DeligneRibetMeasure::new(&chi12(), &ring, 3, Some(7)).unwrap();
    let b = DeligneRibetMeasure::new(&chi12(), &ring, 3, Some(17)).unwrap();
    for eta in etas_with_conductors(5, &[0, 2, 3]) {
        let x = a.eval(&eta, 1).unwrap().value;
        let y = b.eval(&eta, 1).unwrap().value;
        assert!(x.residual_valuation(&y) >= 10);
        let x = a.eval(&eta, 3).unwrap();
        let y = b.eval(&eta, 3).unwrap();
        assert!(x.value.residual_valuation(&y.value) >= x.certificate);
    }
}

#[test]
fn degenerate_and_odd_inputs_rejected() {
    let ring = LocalRing::make(5, 12, 0, 12).unwrap();
    // χ(11) = 1
    assert_eq!(
        DeligneRibetMeasure::new(&chi12(), &ring, 2, Some(11)).unwrap_err(),
        Error::DegenerateRegularizer(11)
    );
    let odd = DirichletData::builtin("mod3_odd").unwrap();
    assert_eq!(DeligneRibetMeasure::new(&odd, &ring, 2, None).unwrap_err(), Error::OddCharacter);
}

#[test]
fn level_stability() {
    let ring = LocalRing::make(5, 12, 0, 12).unwrap();
    let lo = DeligneRibetMeasure::new(&chi12(), &ring, 3, None).unwrap();
    let hi = DeligneRibetMeasure::new(&chi12(), &ring, 4, None).unwrap();
    for eta in etas_with_conductors(5, &[0, 2]) {
        for n in [0i64, 2, 3] {
            let a = lo.eval(&eta, n).unwrap();
            let b = hi.eval(&eta, n).unwrap();
            assert!(a.value.residual_valuation(&b.value) >= a.certificate.min(b.certificate));
        }
    }
}

#[test]
fn lp_eval_conventions() {
    let ring = LocalRing::make(5, 12, 0, 12).unwrap();
    let dr = DeligneRibetMeasure::new(&chi12(), &ring, 4, None).unwrap();
    let triv = FiniteOrderCharacter::trivial(5);
    // s = -1 is κ^2
    let a = dr.lp_eval(&PadicValue::from_i64(5, -1, 12)).unwrap();
    let want = oracle(&chi12(), -2, &triv, 2, a.value.ring());
    assert!(a.value.residual_valuation(&want) >= a.certificate);
    // s = 0 is κ^1
    let b = dr.lp_eval(&PadicValue::exact_zero(5)).unwrap();
    let c = dr.eval(&triv, 1).unwrap();
    assert!(b.value.residual_valuation(&c.value) >= 12);
}

#[test]
fn theta_measure_agrees_with_evaluations() {
    let ring = LocalRing::make(5, 12, 0, 12).unwrap();
    let dr = DeligneRibetMeasure::new(&chi12(), &ring, 3, None).unwrap();
    let theta = dr.theta().unwrap();
    for eta in etas_with_conductors(5, &[0, 2, 3]) {
        let a = theta.eval_character(&eta).unwrap();
        let b = dr.eval(&eta, 0).unwrap();
        assert!(a.residual_valuation(&b.value) >= 4, "{eta:?}");
    }
    // Tw_1 ∘ Tw_{-1} = id on the stored level
    let nu = dr.stickelberger_measure();
    assert!(nu.twist(-1).twist(1).residual_valuation_coeffs(nu) >= 4);
}

#[test]
fn odd_theta_values_mod3() {
    let ring = LocalRing::make(5, 4, 0, 12).unwrap();
    let chi = DirichletData::builtin("mod3_odd").unwrap();
    let th = OddTheta::new(&chi, &ring, 3, None).unwrap();
    let mu = th.measure().unwrap();
    for eta in etas_with_conductors(5, &[2]) {
        // η(θ) = L(χ^{-1}η^{-1}, 0) = -B_{1, χ^{-1}η^{-1}}
        let got = mu.eval_character(&eta).unwrap();
        let want = oracle(&chi.inverse(), 0, &eta.inverse(), 1, got.ring());
        assert!(got.residual_valuation(&want) >= 12, "{eta:?}");
    }
    // κ^s(θ) = L_p(χ^{-1}ω, s): compare κ^0 from the measure
    let s0 = th.lp_eval(&PadicValue::exact_zero(5)).unwrap();
    assert!(mu.total_mass().residual_valuation(&s0.value) >= s0.certificate);
}

#[test]
fn gross_stark_mod11() {
    let ring = LocalRing::make(5, 4, 0, 12).unwrap();
    let chi = DirichletData::builtin("mod11_odd").unwrap();
    let th = OddTheta::new(&chi, &ring, 4, None).unwrap();
    assert_eq!(th.even_measure().regularizer(), 2);
    let q = QuadraticElement { disc: -11, a: 3, b: 1, den: 2, p: 5, sqrt_residue: 2 };
    let orbit = q.orbit(&chi, &ring, 128).unwrap();
    let pu = monomial_unit_projection(&chi, &[1, 10], &orbit).unwrap();
    let checks = verify_ezc_gross(&th, Some(&pu), &ring).unwrap();
    for c in &checks {
        assert!(c.pass, "{c:?}");
    }
    let der = checks.iter().find(|c| c.name.starts_with("derivative")).unwrap();
    assert!(der.residual_valuation >= 3);
    assert!(matches!(
        verify_ezc_gross(&th, None, &ring),
        Err(Error::MissingUnitData(_))
    ));
}

#[test]
fn gross_branch_without_trivial_zero() {
    // χ mod 3 has χ(5) = -1, so e = 0 and θ(𝟙) = (1 - χ(5)^{-1}) L(χ^{-1}, 0) = 2/3
    let ring = LocalRing::make(5, 4, 0, 12).unwrap();
    let chi = DirichletData::builtin("mod3_odd").unwrap();
    let th = OddTheta::new(&chi, &ring, 3, None).unwrap();
    let checks = verify_ezc_gross(&th, None, &ring).unwrap();
    assert_eq!(checks.len(), 1);
    assert!(checks[0].pass, "{:?}", checks[0]);
    let mass = th.measure().unwrap().total_mass();
    let want = ring.from_padic(&PadicValue::from_rational(5, &rat(2, 3), 12));
    assert!(mass.residual_valuation(&want) >= 12);
}

#[test]
fn ex_harness_level4() {
    let ring = LocalRing::make(5, 12, 0, 12).unwrap();
    let dr = DeligneRibetMeasure::new(&chi12(), &ring, 4, None).unwrap();
    let stab = PStabilization::pure(vec![chi12().value(5)], vec![0]).unwrap();
    let rep = verify_ex(&dr, &stab, &etas_with_conductors(5, &[0, 2]), 128).unwrap();
    assert!(rep.checks.iter().all(|c| c.pass), "{:?}", rep.checks);
    assert_eq!(rep.matched_constant.as_deref(), Some("-2"));

    // negative control: a wrong eigenvalue list
    let bad = PStabilization::pure(vec![iwasawa_core::characters::Cyclo::from_int(1)], vec![0]).unwrap();
    let rep = verify_ex(&dr, &bad, &etas_with_conductors(5, &[0]), 128).unwrap();
    assert!(!rep.checks[0].pass);
    assert!(rep.checks.iter().any(|c| !c.pass));
}

#[test]
fn ex_up_to_unit_mode() {
    // a unit multiple of θ still has the valuation of the Leopoldt side at every η
    let ring = LocalRing::make(5, 12, 0, 12).unwrap();
    let dr = DeligneRibetMeasure::new(&chi12(), &ring, 3, None).unwrap();
    let stab = PStabilization::pure(vec![chi12().value(5)], vec![0]).unwrap();
    let etas = etas_with_conductors(5, &[0, 2]);
    let rep = verify_ex(&dr, &stab, &etas, 128).unwrap();
    let unit = ring.from_padic(&PadicValue::from_i64(5, 3, 12));
    for (eta, c) in etas.iter().zip(rep.checks.iter().skip(1).step_by(2)) {
        let v = dr.eval(eta, 0).unwrap().value;
        let scaled = iwasawa_core::characters::lift_to(&unit, v.ring()).unwrap().mul(&v);
        assert_eq!(scaled.valuation_floor(), v.valuation_floor());
        assert!(c.name.starts_with("leopoldt"));
    }
}
