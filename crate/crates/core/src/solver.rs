//! SU signal design under the PU rate constraints.
//!
//! For proper signaling the power is the smallest of the two per-constraint
//! bounds and the budget. For improper signaling each PU constraint yields a
//! power bound that grows with the circularity coefficient; the feasible power
//! is the pointwise minimum of those two curves and the budget. The
//! circularity axis is cut at every crossing of the three curves, and on each
//! piece the SU rate is monotone along the active curve, so the optimum of
//! each piece sits at one of its endpoints.

use crate::model::{Margins, Node, RateReport, Scenario, SignalDesign, BOUND_TOL};

/// Below this distance from 1 the circularity is treated as exactly 1.
pub const CIRCULARITY_EDGE: f64 = 1e-9;

/// Rate tie threshold for choosing between subproblem candidates.
const RATE_TIE: f64 = 1e-12;

/// The SU may transmit only when the interference margin of stream `i`
/// exceeds the residual self-interference at its receiver.
pub fn working_condition(scenario: &Scenario, node: Node) -> bool {
    let j = node.peer().index();
    scenario.i_max(node) > scenario.pu_power[j] * scenario.rsi_cnr[j]
}

fn both_working(scenario: &Scenario) -> [bool; 2] {
    [
        working_condition(scenario, Node::First),
        working_condition(scenario, Node::Second),
    ]
}

/// Largest proper-signaling SU power meeting the constraint of stream `i`.
/// Infinite when the SU does not reach the receiver of stream `i`.
pub fn pgs_bound(scenario: &Scenario, node: Node) -> f64 {
    PowerCurve::of(scenario, node).proper_bound()
}

/// Largest SU power meeting the constraint of stream `i` at circularity `cx`.
pub fn igs_power_bound(scenario: &Scenario, node: Node, cx: f64) -> f64 {
    PowerCurve::of(scenario, node).at(cx)
}

/// Power bound of one PU constraint as a function of the circularity.
///
/// The bound is the positive root of
/// `I^2 (1 - c^2) p^2 - 2 p beta I Psi(1,2) - beta^2 Psi(2,2) = 0`,
/// where `beta` and `I` belong to the receiver of the stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerCurve {
    pub node: Node,
    pub beta: f64,
    pub interference: f64,
    pub margins: Margins,
}

impl PowerCurve {
    pub fn of(scenario: &Scenario, node: Node) -> Self {
        let receiver = node.peer();
        PowerCurve {
            node,
            beta: scenario.beta(receiver),
            interference: scenario.su_to_pu_cnr[receiver.index()],
            margins: scenario.margins(node),
        }
    }

    pub fn proper_bound(&self) -> f64 {
        if self.interference <= 0.0 {
            return f64::INFINITY;
        }
        (self.beta * self.margins.single / self.interference).max(0.0)
    }

    pub fn at(&self, cx: f64) -> f64 {
        if self.interference <= 0.0 {
            return f64::INFINITY;
        }
        let Margins { cross, double, .. } = self.margins;
        if 1.0 - cx <= CIRCULARITY_EDGE {
            // the quadratic term vanishes and the constraint is linear in p
            if cross >= 0.0 {
                return f64::INFINITY;
            }
            return (-self.beta * double / (2.0 * self.interference * cross)).max(0.0);
        }
        let u = (1.0 - cx) * (1.0 + cx);
        let radicand = cross * cross + u * double;
        if radicand < 0.0 {
            return 0.0;
        }
        let root = radicand.sqrt();
        // (root + cross) / u, rationalized when cross < 0 to avoid cancellation
        let scaled = if cross >= 0.0 {
            (root + cross) / u
        } else {
            double / (root - cross)
        };
        (self.beta * scaled / self.interference).max(0.0)
    }

    /// Left-hand side of the constraint quadratic at `(power, cx)`.
    pub fn quadratic(&self, power: f64, cx: f64) -> f64 {
        let i = self.interference;
        i * i * (1.0 - cx * cx) * power * power
            - 2.0 * power * self.beta * i * self.margins.cross
            - self.beta * self.beta * self.margins.double
    }

    /// Ordering key of the curve as `cx -> 1`: the finite limit, or for an
    /// unbounded curve the coefficient of its `1 / (1 - cx^2)` growth.
    fn edge_key(&self) -> (bool, f64) {
        let limit = self.at(1.0);
        if limit.is_finite() {
            (false, limit)
        } else if self.interference <= 0.0 {
            (true, f64::INFINITY)
        } else {
            (
                true,
                2.0 * self.beta * self.margins.cross / self.interference,
            )
        }
    }

    fn same_as(&self, other: &PowerCurve) -> bool {
        let close =
            |a: f64, b: f64| (a - b).abs() <= BOUND_TOL * 1f64.max(a.abs()).max(b.abs()) || a == b;
        close(self.beta, other.beta)
            && close(self.interference, other.interference)
            && close(self.margins.cross, other.margins.cross)
            && close(self.margins.double, other.margins.double)
    }
}

/// Which pair of curves meets at a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BreakpointKind {
    /// Constraint curve of the node meets the power budget.
    Budget(Node),
    /// The two constraint curves meet.
    Cross,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Breakpoint {
    pub circularity: f64,
    pub kind: BreakpointKind,
}

/// Distinct curve intersections inside `(0, 1)`, strictly increasing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BreakpointSet {
    points: Vec<Breakpoint>,
}

impl BreakpointSet {
    pub fn new(mut candidates: Vec<Breakpoint>) -> Self {
        candidates.retain(|b| b.circularity > 0.0 && b.circularity < 1.0);
        candidates.sort_by(|a, b| a.circularity.total_cmp(&b.circularity));
        let mut points: Vec<Breakpoint> = Vec::with_capacity(candidates.len());
        for b in candidates {
            match points.last() {
                Some(last) if b.circularity - last.circularity <= BOUND_TOL => {}
                _ => points.push(b),
            }
        }
        BreakpointSet { points }
    }

    pub fn points(&self) -> &[Breakpoint] {
        &self.points
    }

    /// Number of distinct breakpoints.
    pub fn k(&self) -> usize {
        self.points.len()
    }

    /// Interval boundaries `0, c_1, .., c_k, 1`.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.points.len() + 2);
        out.push(0.0);
        out.extend(self.points.iter().map(|b| b.circularity));
        out.push(1.0);
        out
    }
}

/// Circularity where the constraint curve of `node` reaches the budget.
pub fn budget_intersection(scenario: &Scenario, node: Node) -> Option<f64> {
    let curve = PowerCurve::of(scenario, node);
    let budget = scenario.su_power_max;
    if !(curve.at(0.0) < budget && curve.at(1.0) > budget) {
        return None;
    }
    let scale = budget * curve.interference;
    let u = (curve.beta * curve.beta * curve.margins.double
        + 2.0 * budget * curve.beta * curve.interference * curve.margins.cross)
        / (scale * scale);
    let r2 = 1.0 - u;
    if !(r2.is_finite() && r2 >= 0.0) {
        return None;
    }
    let r = r2.sqrt();
    (r > 0.0 && r < 1.0).then_some(r)
}

/// Circularity where the two constraint curves cross, if they do in `(0, 1)`.
pub fn cross_intersection(scenario: &Scenario) -> Option<f64> {
    let first = PowerCurve::of(scenario, Node::First);
    let second = PowerCurve::of(scenario, Node::Second);
    if first.same_as(&second) {
        return None;
    }
    // the curves can meet at most once, so a swap of their order between
    // cx = 0 and cx = 1 is equivalent to a crossing
    let (f0, s0) = (first.at(0.0), second.at(0.0));
    let swapped = match first.edge_key().partial_cmp(&second.edge_key())? {
        std::cmp::Ordering::Greater => f0 < s0,
        std::cmp::Ordering::Less => f0 > s0,
        std::cmp::Ordering::Equal => false,
    };
    if !swapped {
        return None;
    }

    // bound of node 1 uses (beta_2, I_s2), bound of node 2 uses (beta_1, I_s1)
    let (b2, i2, a1, d1) = (
        first.beta,
        first.interference,
        first.margins.cross,
        first.margins.double,
    );
    let (b1, i1, a2, d2) = (
        second.beta,
        second.interference,
        second.margins.cross,
        second.margins.double,
    );
    let num = 4.0
        * b1
        * b2
        * i1
        * i2
        * (b1 * i2 * a2 - b2 * i1 * a1)
        * (b2 * i1 * a2 * d1 - b1 * i2 * a1 * d2);
    let den_root = b2 * b2 * i1 * i1 * d1 - b1 * b1 * i2 * i2 * d2;
    let r2 = 1.0 - num / (den_root * den_root);
    if !(r2.is_finite() && r2 >= 0.0) {
        return None;
    }
    let r = r2.sqrt();
    (r > 0.0 && r < 1.0).then_some(r)
}

/// Options for [`solve_igs_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IgsOptions {
    /// Include the crossing of the two constraint curves as a breakpoint.
    /// Only disabled to check that the oracle catches a broken solver.
    pub cross_intersection: bool,
}

impl Default for IgsOptions {
    fn default() -> Self {
        IgsOptions {
            cross_intersection: true,
        }
    }
}

pub fn breakpoints(scenario: &Scenario) -> BreakpointSet {
    breakpoints_with(scenario, &IgsOptions::default())
}

fn breakpoints_with(scenario: &Scenario, options: &IgsOptions) -> BreakpointSet {
    let mut found = Vec::with_capacity(3);
    for node in Node::BOTH {
        if let Some(c) = budget_intersection(scenario, node) {
            found.push(Breakpoint {
                circularity: c,
                kind: BreakpointKind::Budget(node),
            });
        }
    }
    if options.cross_intersection {
        if let Some(c) = cross_intersection(scenario) {
            found.push(Breakpoint {
                circularity: c,
                kind: BreakpointKind::Cross,
            });
        }
    }
    BreakpointSet::new(found)
}

/// Whether the SU rate strictly increases with the circularity while the
/// power tracks the constraint curve of stream `m`.
pub fn monotonicity_condition(scenario: &Scenario, binding: Node) -> bool {
    let curve = PowerCurve::of(scenario, binding);
    if curve.interference <= 0.0 {
        return true;
    }
    let lhs = curve.beta * scenario.su_direct_cnr * curve.margins.cross
        / (curve.interference * scenario.su_interference_plus_noise());
    lhs > -1.0
}

/// Which bound limits the SU power on an interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Budget,
    Constraint(Node),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubproblemCandidate {
    /// Interval index, starting at 1.
    pub interval: usize,
    pub lower: f64,
    pub upper: f64,
    pub design: SignalDesign,
    pub su_rate: f64,
    pub regime: Regime,
    /// The argmin at the interval midpoint was not unique.
    pub midpoint_tie: bool,
}

/// Best design on `[lower, upper]`, where a single bound is active.
pub fn solve_subproblem(
    scenario: &Scenario,
    interval: usize,
    lower: f64,
    upper: f64,
) -> SubproblemCandidate {
    let curves = [
        PowerCurve::of(scenario, Node::First),
        PowerCurve::of(scenario, Node::Second),
    ];
    solve_subproblem_on(scenario, &curves, interval, lower, upper)
}

fn solve_subproblem_on(
    scenario: &Scenario,
    curves: &[PowerCurve; 2],
    interval: usize,
    lower: f64,
    upper: f64,
) -> SubproblemCandidate {
    let budget = scenario.su_power_max;
    let mid = 0.5 * (lower + upper);
    let values = [budget, curves[0].at(mid), curves[1].at(mid)];

    // budget first, then the lower constraint index
    let mut active = 0;
    for (l, &v) in values.iter().enumerate().skip(1) {
        if v < values[active] {
            active = l;
        }
    }
    let best = values[active];
    let midpoint_tie = values
        .iter()
        .enumerate()
        .any(|(l, &v)| l != active && (v - best).abs() <= BOUND_TOL * best.abs().max(1.0));

    let (design, regime) = if active == 0 {
        (SignalDesign::new(budget, lower), Regime::Budget)
    } else {
        let curve = &curves[active - 1];
        let cx = if monotonicity_condition(scenario, curve.node) {
            upper
        } else {
            lower
        };
        let power = curve.at(cx).min(budget);
        (SignalDesign::new(power, cx), Regime::Constraint(curve.node))
    };
    SubproblemCandidate {
        interval,
        lower,
        upper,
        design,
        su_rate: scenario.su_rate(&design),
        regime,
        midpoint_tie,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolutionKind {
    /// The SU stays silent.
    Idle,
    Proper,
    Improper,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub kind: SolutionKind,
    pub design: SignalDesign,
    pub rates: RateReport,
    /// Working condition per PU stream.
    pub working: [bool; 2],
    pub breakpoints: BreakpointSet,
    /// Per-interval candidates; empty unless the improper design ran.
    pub candidates: Vec<SubproblemCandidate>,
}

impl Solution {
    fn idle(scenario: &Scenario, working: [bool; 2]) -> Self {
        Solution {
            kind: SolutionKind::Idle,
            design: SignalDesign::IDLE,
            rates: scenario.rate_report(&SignalDesign::IDLE),
            working,
            breakpoints: BreakpointSet::default(),
            candidates: Vec::new(),
        }
    }

    pub fn su_rate(&self) -> f64 {
        self.rates.su_rate
    }

    /// A PU stream cannot meet its target even without the SU.
    pub fn outage(&self) -> bool {
        !(self.working[0] && self.working[1])
    }
}

/// Proper-signaling design: the largest power all constraints allow.
pub fn solve_pgs(scenario: &Scenario) -> Solution {
    let working = both_working(scenario);
    if !(working[0] && working[1]) {
        return Solution::idle(scenario, working);
    }
    let power = pgs_bound(scenario, Node::First)
        .min(pgs_bound(scenario, Node::Second))
        .min(scenario.su_power_max);
    let design = SignalDesign::proper(power);
    Solution {
        kind: SolutionKind::Proper,
        design,
        rates: scenario.rate_report(&design),
        working,
        breakpoints: BreakpointSet::default(),
        candidates: Vec::new(),
    }
}

/// Joint power and circularity design.
pub fn solve_igs(scenario: &Scenario) -> Solution {
    solve_igs_with(scenario, &IgsOptions::default())
}

pub fn solve_igs_with(scenario: &Scenario, options: &IgsOptions) -> Solution {
    let working = both_working(scenario);
    if !(working[0] && working[1]) {
        return Solution::idle(scenario, working);
    }
    let curves = [
        PowerCurve::of(scenario, Node::First),
        PowerCurve::of(scenario, Node::Second),
    ];
    let breakpoints = breakpoints_with(scenario, options);
    let bounds = breakpoints.boundaries();
    let candidates: Vec<SubproblemCandidate> = bounds
        .windows(2)
        .enumerate()
        .map(|(z, w)| solve_subproblem_on(scenario, &curves, z + 1, w[0], w[1]))
        .collect();

    let mut best = &candidates[0];
    for c in &candidates[1..] {
        let better = c.su_rate > best.su_rate + RATE_TIE;
        let tie_smaller = (c.su_rate - best.su_rate).abs() <= RATE_TIE
            && c.design.circularity < best.design.circularity;
        if better || tie_smaller {
            best = c;
        }
    }
    let design = best.design;
    Solution {
        kind: SolutionKind::Improper,
        design,
        rates: scenario.rate_report(&design),
        working,
        breakpoints,
        candidates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScenarioStatistics;

    fn canonical() -> Scenario {
        ScenarioStatistics::default().mean_scenario()
    }

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "{actual} vs {expected} (tol {tol})"
        );
    }

    #[test]
    fn working_condition_cases() {
        let mut s = canonical();
        assert!(working_condition(&s, Node::First));
        assert!(working_condition(&s, Node::Second));
        s.rsi_cnr[1] = 40.0;
        assert!(!working_condition(&s, Node::First));
        let mut t = canonical();
        t.pu_direct_cnr[0] = 0.0;
        assert!(!working_condition(&t, Node::First));
    }

    #[test]
    fn proper_bounds() {
        let s = canonical();
        assert_close(pgs_bound(&s, Node::First), 2.06228, 1e-5);
        assert_close(pgs_bound(&s, Node::Second), 0.206228, 1e-6);
        let mut t = canonical();
        t.pu_direct_cnr[0] = 5.0;
        assert_eq!(pgs_bound(&t, Node::First), 0.0);
        t.su_to_pu_cnr[1] = 0.0;
        assert_eq!(pgs_bound(&t, Node::First), f64::INFINITY);
    }

    #[test]
    fn pgs_solutions() {
        let s = canonical();
        let sol = solve_pgs(&s);
        assert_eq!(sol.kind, SolutionKind::Proper);
        assert_close(sol.design.power, 0.206228, 1e-6);
        assert_eq!(sol.design.circularity, 0.0);
        assert_close(sol.su_rate(), 0.698453, 1e-6);

        let mut weak = canonical();
        weak.su_to_pu_cnr = [1e-3, 1e-3];
        assert_eq!(solve_pgs(&weak).design, SignalDesign::proper(1.0));

        let mut dead = canonical();
        dead.rsi_cnr = [40.0, 40.0];
        let idle = solve_pgs(&dead);
        assert_eq!(idle.kind, SolutionKind::Idle);
        assert_eq!(idle.su_rate(), 0.0);
        assert!(idle.outage());
    }

    #[test]
    fn improper_bound_endpoints() {
        let s = canonical();
        assert_close(igs_power_bound(&s, Node::Second, 0.0), 0.206228, 1e-6);
        assert_close(igs_power_bound(&s, Node::Second, 1.0), 4.838362, 1e-6);
        assert_close(
            igs_power_bound(&s, Node::Second, 1.0 - 1e-6),
            4.838362,
            1e-2,
        );
        assert_close(
            igs_power_bound(&s, Node::Second, 1.0 - 1e-8),
            4.838362,
            1e-4,
        );
        assert_close(igs_power_bound(&s, Node::First, 1.0), 48.38362, 1e-4);
    }

    #[test]
    fn improper_bound_clamps_negative_margins() {
        let mut s = canonical();
        s.pu_direct_cnr[1] = 0.5;
        let m = s.margins(Node::Second);
        assert!(m.cross < 0.0 && m.double < 0.0);
        for cx in [0.0, 0.3, 0.9, 1.0] {
            assert_eq!(igs_power_bound(&s, Node::Second, cx), 0.0);
        }
    }

    #[test]
    fn budget_intersections() {
        let s = canonical();
        let r2 = budget_intersection(&s, Node::Second).unwrap();
        assert_close(r2, 0.982221, 1e-6);
        assert_close(igs_power_bound(&s, Node::Second, r2), 1.0, 1e-6);
        assert_eq!(budget_intersection(&s, Node::First), None);
        let mut big = canonical();
        big.su_power_max = 1e3;
        assert_eq!(budget_intersection(&big, Node::Second), None);
    }

    #[test]
    fn cross_intersection_absent_for_canonical_and_symmetric() {
        let s = canonical();
        assert_eq!(cross_intersection(&s), None);
        let mut sym = canonical();
        sym.su_to_pu_cnr = [100.0, 100.0];
        assert_eq!(cross_intersection(&sym), None);
    }

    #[test]
    fn canonical_breakpoints() {
        let set = breakpoints(&canonical());
        assert_eq!(set.k(), 1);
        assert_close(set.points()[0].circularity, 0.982221, 1e-6);
        assert_eq!(set.points()[0].kind, BreakpointKind::Budget(Node::Second));
        assert_eq!(set.boundaries().len(), 3);
    }

    #[test]
    fn breakpoint_set_dedup() {
        let mk = |c| Breakpoint {
            circularity: c,
            kind: BreakpointKind::Cross,
        };
        let set = BreakpointSet::new(vec![mk(0.5), mk(0.2), mk(0.5 + 1e-12), mk(1.0), mk(0.0)]);
        let pts: Vec<f64> = set.points().iter().map(|b| b.circularity).collect();
        assert_eq!(pts, vec![0.2, 0.5]);
    }

    #[test]
    fn monotonicity_cases() {
        let s = canonical();
        assert!(monotonicity_condition(&s, Node::Second));
        assert!(monotonicity_condition(&s, Node::First));
        let mut strong = canonical();
        strong.su_direct_cnr = 1e4;
        assert!(!monotonicity_condition(&strong, Node::Second));
    }

    #[test]
    fn canonical_subproblems() {
        let s = canonical();
        let r2 = budget_intersection(&s, Node::Second).unwrap();
        let first = solve_subproblem(&s, 1, 0.0, r2);
        assert_eq!(first.regime, Regime::Constraint(Node::Second));
        assert_close(first.design.power, 1.0, 1e-9);
        assert_close(first.design.circularity, 0.982221, 1e-6);
        let second = solve_subproblem(&s, 2, r2, 1.0);
        assert_eq!(second.regime, Regime::Budget);
        assert_eq!(second.design, SignalDesign::new(1.0, r2));
    }

    #[test]
    fn decreasing_subproblem_takes_left_endpoint() {
        let mut s = canonical();
        s.su_direct_cnr = 1e4;
        let c = solve_subproblem(&s, 1, 0.2, 0.6);
        assert_eq!(c.regime, Regime::Constraint(Node::Second));
        assert_eq!(c.design.circularity, 0.2);
    }

    #[test]
    fn canonical_igs() {
        let s = canonical();
        let sol = solve_igs(&s);
        assert_eq!(sol.kind, SolutionKind::Improper);
        assert_close(sol.design.power, 1.0, 1e-9);
        assert_close(sol.design.circularity, 0.982221, 1e-6);
        assert_close(sol.su_rate(), 1.439946, 1e-6);
        assert_eq!(sol.candidates.len(), 2);
    }

    #[test]
    fn igs_idle_and_weak_interference() {
        let mut s = canonical();
        s.rsi_cnr = [40.0, 40.0];
        let sol = solve_igs(&s);
        assert_eq!(sol.design, SignalDesign::IDLE);
        assert!(sol.candidates.is_empty());

        let mut weak = canonical();
        weak.su_to_pu_cnr = [1e-3, 1e-3];
        let igs = solve_igs(&weak);
        assert_eq!(igs.design, SignalDesign::new(1.0, 0.0));
        assert_close(igs.su_rate(), solve_pgs(&weak).su_rate(), 1e-12);
    }
}
