use igs_underlay::model::{Node, Scenario, ScenarioStatistics};
use igs_underlay::oracle::{compare_solution, feasible, GridSpec};
use igs_underlay::solver::{
    breakpoints, monotonicity_condition, pgs_bound, solve_igs, solve_igs_with, solve_pgs,
    BreakpointKind, IgsOptions, Regime, SolutionKind,
};
use igs_underlay::Execution;

fn canonical() -> Scenario {
    ScenarioStatistics::default().mean_scenario()
}

/// Both PU links strong and the SU budget above both proper bounds, so all
/// three breakpoints fall inside `(0, 1)` and the curves cross first.
fn three_breakpoints() -> Scenario {
    Scenario {
        pu_power: [1.0, 1.0],
        pu_target_rate: [1.0, 1.0],
        pu_direct_cnr: [57.048646474690806, 43.204167933428145],
        su_direct_cnr: 40.6770884537805,
        su_to_pu_cnr: [32.70193691036033, 49.29609456317615],
        pu_to_su_cnr: [1.0, 1.0],
        rsi_cnr: [4.035881767750965, 0.7871786240207224],
        su_power_max: 2.8431963195560823,
    }
}

#[test]
fn budget_limited_pgs() {
    let mut s = canonical();
    s.su_power_max = 0.1;
    assert!(pgs_bound(&s, Node::First).min(pgs_bound(&s, Node::Second)) > 0.1);
    let pgs = solve_pgs(&s);
    assert_eq!(pgs.kind, SolutionKind::Proper);
    assert_eq!(pgs.design.power, 0.1);
    assert!(feasible(&pgs.design, &s));

    let igs = solve_igs(&s);
    assert!(igs.su_rate() >= pgs.su_rate() - 1e-12);
    assert!(compare_solution(0, &s, &GridSpec::default(), &igs, Execution::Sequential).pass);
}

#[test]
fn three_breakpoints_are_ordered() {
    let s = three_breakpoints();
    let set = breakpoints(&s);
    assert_eq!(set.k(), 3);
    let kinds: Vec<BreakpointKind> = set.points().iter().map(|b| b.kind).collect();
    assert_eq!(
        kinds,
        [
            BreakpointKind::Cross,
            BreakpointKind::Budget(Node::First),
            BreakpointKind::Budget(Node::Second)
        ]
    );
    let sol = solve_igs(&s);
    assert_eq!(sol.candidates.len(), 4);
    assert!(feasible(&sol.design, &s));
    assert!(compare_solution(0, &s, &GridSpec::default(), &sol, Execution::Sequential).pass);
}

#[test]
fn oracle_catches_missing_cross_intersection() {
    let s = three_breakpoints();
    let broken = solve_igs_with(
        &s,
        &IgsOptions {
            cross_intersection: false,
        },
    );
    assert_eq!(broken.breakpoints.k(), 2);
    let report = compare_solution(0, &s, &GridSpec::default(), &broken, Execution::Sequential);
    assert!(!report.pass, "{report:?}");
}

#[test]
fn decreasing_branch_takes_lower_endpoint() {
    let mut s = canonical();
    s.su_direct_cnr *= 1e4;
    let sol = solve_igs(&s);
    let constrained: Vec<_> = sol
        .candidates
        .iter()
        .filter_map(|c| match c.regime {
            Regime::Constraint(n) => Some((c, n)),
            Regime::Budget => None,
        })
        .collect();
    assert!(!constrained.is_empty());
    for (c, node) in constrained {
        assert!(!monotonicity_condition(&s, node));
        assert_eq!(c.design.circularity, c.lower);
    }
    assert!(compare_solution(0, &s, &GridSpec::default(), &sol, Execution::Sequential).pass);
}

#[test]
fn increasing_branch_takes_upper_endpoint() {
    let s = canonical();
    let sol = solve_igs(&s);
    let c = &sol.candidates[0];
    assert_eq!(c.regime, Regime::Constraint(Node::Second));
    assert!(monotonicity_condition(&s, Node::Second));
    assert_eq!(c.design.circularity, c.upper);
}

#[test]
fn outage_leaves_su_idle() {
    let mut s = canonical();
    s.pu_target_rate = [6.0, 1.0];
    for sol in [solve_igs(&s), solve_pgs(&s)] {
        assert_eq!(sol.kind, SolutionKind::Idle);
        assert!(sol.outage());
        assert_eq!(sol.working, [false, true]);
        assert_eq!(sol.su_rate(), 0.0);
    }
}
