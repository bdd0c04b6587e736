use proptest::collection::vec;
use proptest::prelude::*;

use logdisc::blowup::{
    blow_down, blow_up, check_lemma_3b, crepant_a, model_from_solved_graph, negativity, Center,
};
use logdisc::complement::{
    dtau_transform, find_curve_complement, is_complement_p1, lc_level, BoundaryP1, StandardSet,
};
use logdisc::discrepancy::{residuals, solve_log_discrepancies};
use logdisc::dual_graph::{generate_chain, generate_fork};
use logdisc::oracle::is_unimodal;
use logdisc::rational::q;
use logdisc::Rational;

fn rational_in_unit(max_denom: i64) -> impl Strategy<Value = Rational> {
    (1..=max_denom).prop_flat_map(|d| (0..=d).prop_map(move |p| q(p, d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chains_solve_exactly_and_are_unimodal(ws in vec(2u32..9, 1..10)) {
        let g = generate_chain(&ws).unwrap();
        let p = solve_log_discrepancies(&g).unwrap();
        prop_assert!(residuals(&g, &p).iter().all(Rational::is_zero));
        let along = p.values_along(&g, &g.chain_order().unwrap());
        prop_assert!(is_unimodal(&along));
        prop_assert!(along.iter().all(|a| a.is_positive() && *a <= 1));
        prop_assert_eq!(p.mld(), along.iter().min().unwrap());
    }

    #[test]
    fn fork_discrepancies_stay_in_unit_interval(ws in vec(2u32..6, 1..6)) {
        let g = generate_fork(&ws).unwrap();
        if g.is_contractible() {
            let p = solve_log_discrepancies(&g).unwrap();
            prop_assert!(residuals(&g, &p).iter().all(Rational::is_zero));
            prop_assert!(p.values().iter().all(|a| a.is_positive() && *a <= 1));
        }
    }

    #[test]
    fn profile_csv_round_trips(ws in vec(2u32..7, 1..7)) {
        let g = generate_chain(&ws).unwrap();
        let p = solve_log_discrepancies(&g).unwrap();
        let back = logdisc::discrepancy::DiscrepancyProfile::from_csv(&p.to_csv()).unwrap();
        prop_assert_eq!(back.values(), p.values());
        prop_assert_eq!(back.mld(), p.mld());
        prop_assert_eq!(back.index(), p.index());
    }

    #[test]
    fn curve_complements_are_valid(
        coeffs in vec(rational_in_unit(10), 0..6),
        delta_denom in 2i64..6,
    ) {
        let delta = q(1, delta_denom);
        let cap = Rational::one() - &delta;
        let coeffs: Vec<Rational> = coeffs.into_iter().filter(|c| c.is_positive() && *c <= cap).collect();
        let boundary = BoundaryP1::new(coeffs);
        prop_assume!(boundary.sum() < 2);
        let m = lc_level(&delta).unwrap();
        let eps = q(1, m as i64 + 1);
        let result = find_curve_complement(&boundary, &delta).unwrap();
        prop_assert!(result.n >= 1 && result.n <= m + 1);
        prop_assert!(is_complement_p1(&boundary, &result, &eps));
        prop_assert_eq!(result.total(), Rational::from_integer(2));
    }

    #[test]
    fn dtau_is_idempotent_and_monotone(
        coeffs in vec(rational_in_unit(30), 1..8),
        tau in rational_in_unit(20).prop_map(|t| t / Rational::from_integer(2)),
    ) {
        let once = dtau_transform(&coeffs, &tau).unwrap();
        prop_assert_eq!(dtau_transform(&once, &tau).unwrap(), once.clone());
        for (b, d) in coeffs.iter().zip(&once) {
            prop_assert!(d >= b);
            if d != b {
                prop_assert!(StandardSet::contains(d));
                prop_assert!(&(d - &tau) <= b);
            }
        }
        let mut sorted = coeffs.clone();
        sorted.sort();
        let mapped = dtau_transform(&sorted, &tau).unwrap();
        prop_assert!(mapped.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn blow_up_then_down_is_identity(
        ws in vec(2u32..5, 2..6),
        at in 0usize..5,
        on_curve in any::<bool>(),
        a_num in 0i64..=24,
    ) {
        let g = generate_chain(&ws).unwrap();
        let p = solve_log_discrepancies(&g).unwrap();
        let model = model_from_solved_graph(&g, &p).unwrap();
        let order = g.chain_order().unwrap();
        let i = at % (order.len() - 1);
        let x = g.id(order[i]).to_string();
        let y = g.id(order[i + 1]).to_string();
        let center = if on_curve { Center::OnCurve(x) } else { Center::OnIntersection(x, y) };
        let a_new = q(a_num, 12);
        let up = blow_up(&model, &center, &a_new).unwrap();
        let mv = up.provenance().last().unwrap().clone();
        prop_assert!(check_lemma_3b(&model, &up, &mv).unwrap().all_hold());
        let new_id = up.curves().last().unwrap().id.clone();
        let down = blow_down(&up, &new_id).unwrap();
        prop_assert!(down.same_geometry(&model));
        if a_new == crepant_a(&model, &center).unwrap() {
            prop_assert!(negativity(&up, &new_id).unwrap().is_zero());
        }
    }
}
