use std::sync::Arc;

use iwasawa_core::coleman::{coleman_operator, ClosedForm, NormCoherentSequence};
use iwasawa_core::cyclofield::{BaseRing, LocalRing, SeedPolicy};
use iwasawa_core::PowerSeries;
use num_bigint::BigInt;
use proptest::prelude::*;

const N: usize = 27;

fn r0() -> Arc<LocalRing> {
    LocalRing::new(&BaseRing::new(3, 1, 10, SeedPolicy::Smallest).unwrap(), 0)
}

fn unit_series(r: &Arc<LocalRing>, c0: i64, rest: &[i64]) -> PowerSeries {
    let mut c = vec![BigInt::from(c0)];
    c.extend(rest.iter().map(|&x| BigInt::from(x)));
    PowerSeries::from_ints(r, &c, N)
}

fn unit_const() -> impl Strategy<Value = i64> {
    (-20_000i64..20_000).prop_filter("unit", |x| x % 3 != 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operator_is_additive_and_integral(a0 in unit_const(), a in prop::collection::vec(-30_000i64..30_000, N - 1),
                                         b0 in unit_const(), b in prop::collection::vec(-30_000i64..30_000, N - 1)) {
        let r = r0();
        let f = unit_series(&r, a0, &a);
        let g = unit_series(&r, b0, &b);
        let lf = coleman_operator(&f).unwrap();
        let lg = coleman_operator(&g).unwrap();
        let lfg = coleman_operator(&f.mul(&g)).unwrap();
        prop_assert!(lf.is_integral() && lg.is_integral() && lfg.is_integral());
        let sum = lf.add(&lg);
        prop_assert!(lfg.residual_valuation(&sum) >= lfg.precision().min(sum.precision()));
        prop_assert!(lfg.precision() >= 7);
    }

    #[test]
    fn operator_kills_powers_of_one_plus_t(a0 in unit_const(), a in prop::collection::vec(-30_000i64..30_000, N - 1), k in 1i64..40) {
        let r = r0();
        let f = unit_series(&r, a0, &a);
        let shifted = f.mul(&PowerSeries::one_plus_t_pow(&r, &BigInt::from(k), N));
        let lf = coleman_operator(&f).unwrap();
        let ls = coleman_operator(&shifted).unwrap();
        prop_assert!(ls.residual_valuation(&lf) >= ls.precision().min(lf.precision()));
    }

    #[test]
    fn closed_form_families_are_norm_coherent(a in 2i64..12) {
        prop_assume!(a % 3 != 0);
        let b = BaseRing::new(3, 1, 12, SeedPolicy::Smallest).unwrap();
        let f = ClosedForm::cyclotomic_unit(&b, a);
        let v = NormCoherentSequence::from_closed_form(&b, &f, 3).unwrap();
        prop_assert!(v.norm_coherence_residual().unwrap() >= 8);
    }
}
