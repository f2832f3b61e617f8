use igs_underlay::model::{db_to_linear, Node, Scenario, SignalDesign, BOUND_TOL};
use igs_underlay::oracle::feasible;
use igs_underlay::solver::{solve_igs, solve_pgs, PowerCurve, SolutionKind};
use proptest::prelude::*;

fn cnr() -> impl Strategy<Value = f64> {
    (-10.0..40.0f64).prop_map(db_to_linear)
}

fn pair() -> impl Strategy<Value = [f64; 2]> {
    (cnr(), cnr()).prop_map(|(a, b)| [a, b])
}

fn scenario() -> impl Strategy<Value = Scenario> {
    let rate = prop::sample::select(vec![0.25, 0.5, 1.0, 2.0, 3.0]);
    (
        ((0.1..10.0f64), (0.1..10.0f64)),
        (rate.clone(), rate),
        pair(),
        cnr(),
        pair(),
        pair(),
        pair(),
        0.05..100.0f64,
    )
        .prop_map(|(p, r, gp, gs, is, ip, rsi, pmax)| Scenario {
            pu_power: [p.0, p.1],
            pu_target_rate: [r.0, r.1],
            pu_direct_cnr: gp,
            su_direct_cnr: gs,
            su_to_pu_cnr: is,
            pu_to_su_cnr: ip,
            rsi_cnr: rsi,
            su_power_max: pmax,
        })
}

fn design(s: &Scenario) -> impl Strategy<Value = SignalDesign> {
    let pmax = s.su_power_max;
    (0.0..=pmax, 0.0..=1.0f64).prop_map(|(p, c)| SignalDesign::new(p, c))
}

fn scenario_and_design() -> impl Strategy<Value = (Scenario, SignalDesign)> {
    scenario().prop_flat_map(|s| {
        let d = design(&s);
        (Just(s), d)
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn circularity_coefficients_are_ordered((s, d) in scenario_and_design()) {
        for node in Node::BOTH {
            let (cy, ci) = s.circularity_coefficients(&d, node);
            prop_assert!(0.0 <= cy);
            prop_assert!(cy <= ci + 1e-15);
            prop_assert!(ci <= d.circularity + 1e-15);
        }
    }

    #[test]
    fn pu_rate_forms_agree((s, d) in scenario_and_design()) {
        for node in Node::BOTH {
            let a = s.pu_rate(&d, node);
            let b = s.pu_rate_from_circularity(&d, node);
            prop_assert!(close(a, b, 1e-9), "{a} vs {b}");
        }
    }

    #[test]
    fn proper_signaling_reduces((s, p) in scenario().prop_flat_map(|s| {
        let pmax = s.su_power_max;
        (Just(s), 0.0..=pmax)
    })) {
        let d = SignalDesign::proper(p);
        for node in Node::BOTH {
            prop_assert!(close(s.pu_rate(&d, node), s.pu_rate_proper(p, node), 1e-12));
        }
        prop_assert!(close(s.su_rate(&d), s.su_rate_proper(p), 1e-12));
    }

    #[test]
    fn rates_are_monotone((s, d) in scenario_and_design(), step in 0.0..0.5f64) {
        let more_improper = SignalDesign::new(d.power, (d.circularity + step).min(1.0));
        let more_power = SignalDesign::new(d.power * (1.0 + step) + 1e-6, d.circularity);
        for node in Node::BOTH {
            prop_assert!(s.pu_rate(&more_improper, node) >= s.pu_rate(&d, node) - 1e-12);
            prop_assert!(s.pu_rate(&more_power, node) <= s.pu_rate(&d, node) + 1e-12);
        }
        prop_assert!(s.su_rate(&more_improper) <= s.su_rate(&d) + 1e-12);
        prop_assert!(s.su_rate(&more_power) > s.su_rate(&d));
    }

    #[test]
    fn doubling_identities(s in scenario()) {
        for node in Node::BOTH {
            let g1 = s.gamma_target(node, 1.0);
            prop_assert!(close(s.gamma_target(node, 2.0), g1 * (g1 + 2.0), 1e-12));
            let f1 = s.phi_required(node, 1.0);
            prop_assert!(close(s.phi_required(node, 2.0), f1 * (f1 + 2.0), 1e-12));
        }
    }

    #[test]
    fn curve_solves_its_quadratic(s in scenario(), cx in 0.0..0.999f64) {
        for node in Node::BOTH {
            if s.margins(node).single <= 0.0 {
                continue;
            }
            let curve = PowerCurve::of(&s, node);
            let p = curve.at(cx);
            prop_assert!(p.is_finite() && p > 0.0);
            let i = curve.interference;
            let scale = (i * p).powi(2) + (2.0 * p * curve.beta * i * curve.margins.cross).abs()
                + (curve.beta.powi(2) * curve.margins.double).abs();
            prop_assert!(curve.quadratic(p, cx).abs() <= 1e-6 * scale);
            // on the curve the PU rate sits at its target
            let rate = s.pu_rate(&SignalDesign::new(p, cx), node);
            prop_assert!(close(rate, s.pu_target_rate[node.index()], 1e-7), "{rate}");
        }
    }

    #[test]
    fn curve_starts_at_proper_bound(s in scenario()) {
        for node in Node::BOTH {
            let curve = PowerCurve::of(&s, node);
            prop_assert!(close(curve.at(0.0), curve.proper_bound(), 1e-9));
        }
    }

    #[test]
    fn solutions_are_feasible_and_ordered(s in scenario()) {
        let pgs = solve_pgs(&s);
        let igs = solve_igs(&s);
        prop_assert_eq!(pgs.outage(), igs.outage());
        if igs.outage() {
            prop_assert_eq!(igs.kind, SolutionKind::Idle);
            prop_assert_eq!(igs.su_rate(), 0.0);
            return Ok(());
        }
        for sol in [&pgs, &igs] {
            prop_assert!(sol.design.is_idle() || feasible(&sol.design, &s), "{:?}", sol.design);
            prop_assert!(sol.design.power <= s.su_power_max);
        }
        prop_assert_eq!(pgs.design.circularity, 0.0);
        prop_assert!(igs.su_rate() >= pgs.su_rate() - BOUND_TOL);
    }
}
