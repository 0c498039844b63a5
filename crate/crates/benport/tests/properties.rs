//! Property-based checks on the structural model: budget feasibility,
//! wage-scale invariance of the retirement condition, and the directions
//! of the shock comparative statics over randomly drawn parameters.

use approx::assert_abs_diff_eq;
use benport::model::{
    self, LogWage, Preferences, Shock, Technology,
};
use benport::numerics::integrate;
use proptest::prelude::*;

fn prefs_strategy() -> impl Strategy<Value = Preferences> {
    (0.5..2.0f64, 0.8..1.5f64).prop_map(|(r, t)| Preferences::new(r, t).unwrap())
}

fn tech_strategy() -> impl Strategy<Value = Technology> {
    (2.5..6.0f64).prop_map(|m| Technology::new(LogWage::Linear { slope: m }, 1.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn budget_identity_holds_for_admissible_plans(
        prefs in prefs_strategy(),
        tech in tech_strategy(),
        s_frac in 0.0..0.5f64,
        r_frac in 0.1..0.95f64,
    ) {
        let s = s_frac * prefs.lifespan;
        let big_r = s + r_frac * (prefs.lifespan - s);
        let c = model::consumption(&prefs, &tech, s, big_r).unwrap();
        let r = prefs.r;
        let earnings =
            integrate(|u| (-r * u).exp() * tech.wage(s), s, big_r, 1e-12).unwrap();
        let outlay = integrate(|u| (-r * u).exp() * c, 0.0, prefs.lifespan, 1e-12).unwrap();
        prop_assert!((earnings - outlay).abs() < 1e-8);
    }

    #[test]
    fn retirement_condition_ignores_wage_level(
        prefs in prefs_strategy(),
        m1 in 2.5..6.0f64,
        m2 in 2.5..6.0f64,
        s in 0.05..0.3f64,
        r_frac in 0.3..0.9f64,
    ) {
        let t1 = Technology::new(LogWage::Linear { slope: m1 }, 1.0).unwrap();
        let t2 = Technology::new(LogWage::Linear { slope: m2 }, 1.0).unwrap();
        let big_r = s + r_frac * (prefs.lifespan - s);
        let a = model::eq2_residual(&prefs, &t1, s, big_r).unwrap();
        let b = model::eq2_residual(&prefs, &t2, s, big_r).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn injury_advances_and_captivity_postpones_retirement(
        kappa in 1.05..2.0f64,
        duration in 0.02..0.15f64,
    ) {
        let prefs = Preferences::figure_baseline();
        let tech = Technology::figure_baseline();
        let base = model::solve_ex_ante(&prefs, &tech, None).unwrap();
        let injured =
            model::solve_ex_post(&prefs, &tech, &Shock::Injury { kappa }, base.schooling).unwrap();
        prop_assert!(injured.retirement < base.retirement);
        let captive = model::solve_ex_post(
            &prefs,
            &tech,
            &Shock::Captivity { duration },
            base.schooling,
        )
        .unwrap();
        prop_assert!(captive.retirement > base.retirement);
    }

    #[test]
    fn wealth_loss_postpones_the_revised_exit(
        delta in 0.01..0.2f64,
        d_frac in 0.1..0.8f64,
    ) {
        let prefs = Preferences::figure_baseline();
        let tech = Technology::figure_baseline();
        let plan = model::solve_ex_ante(&prefs, &tech, None).unwrap();
        let d = plan.schooling + d_frac * (plan.retirement - plan.schooling);
        let hit =
            model::solve_post_displacement_retirement(&prefs, &tech, &plan, 1.0, delta, d)
                .unwrap();
        let spared =
            model::solve_post_displacement_retirement(&prefs, &tech, &plan, 1.0, 0.0, d)
                .unwrap();
        prop_assert!(hit.retirement > spared.retirement - 1e-9);
        prop_assert!(hit.consumption < spared.consumption);
    }
}

#[test]
fn ex_ante_plans_beat_perturbed_plans() {
    // the solver's plan should weakly dominate nearby feasible plans
    let prefs = Preferences::figure_baseline();
    let tech = Technology::figure_baseline();
    let plan = model::solve_ex_ante(&prefs, &tech, None).unwrap();
    let v = model::lifetime_utility(&prefs, &tech, plan.schooling, plan.retirement).unwrap();
    assert_abs_diff_eq!(v, plan.value, epsilon = 1e-10);
    for (ds, dr) in [(0.01, 0.0), (-0.01, 0.0), (0.0, 0.01), (0.0, -0.01), (0.01, 0.01)] {
        let alt = model::lifetime_utility(
            &prefs,
            &tech,
            plan.schooling + ds,
            plan.retirement + dr,
        )
        .unwrap();
        assert!(alt <= v + 1e-12);
    }
}
