//! Exhaustive grid search over `(power, circularity)` used to check the
//! closed-form solver.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Node, Scenario, ScenarioStatistics, SignalDesign, BOUND_TOL};
use crate::montecarlo::sample_scenario;
use crate::par::Execution;
use crate::solver::{solve_igs, Solution};

/// Rate slope used to turn grid spacing into a comparison tolerance, in
/// bits/s/Hz per unit of normalized cell diagonal. Chosen so that a 201x201
/// grid gets 0.02 bits/s/Hz.
pub const RATE_SLOPE: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Uniform grid over `[0, p_s,max] x [0, 1]`. A single circularity sample
/// restricts the search to proper signaling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub power_samples: usize,
    pub circularity_samples: usize,
}

impl GridSpec {
    pub fn new(power_samples: usize, circularity_samples: usize) -> Result<Self> {
        if power_samples < 2 || circularity_samples < 1 {
            return Err(Error::InvalidSpec(format!(
                "grid needs at least 2 power and 1 circularity samples, got {power_samples}x{circularity_samples}"
            )));
        }
        Ok(GridSpec {
            power_samples,
            circularity_samples,
        })
    }

    /// Parses `"201x201"`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("grid must look like 201x201, got {text:?}"));
        let (p, c) = text.split_once(['x', 'X']).ok_or_else(bad)?;
        let p = p.trim().parse().map_err(|_| bad())?;
        let c = c.trim().parse().map_err(|_| bad())?;
        GridSpec::new(p, c)
    }

    pub fn power(&self, scenario: &Scenario, k: usize) -> f64 {
        scenario.su_power_max * k as f64 / (self.power_samples - 1) as f64
    }

    pub fn circularity(&self, l: usize) -> f64 {
        if self.circularity_samples == 1 {
            0.0
        } else {
            l as f64 / (self.circularity_samples - 1) as f64
        }
    }

    /// Allowed shortfall of the solver against the grid:
    /// `RATE_SLOPE * hypot(1 / (n_p - 1), 1 / (n_c - 1))`.
    pub fn tolerance(&self) -> f64 {
        let dp = 1.0 / (self.power_samples - 1) as f64;
        let dc = if self.circularity_samples > 1 {
            1.0 / (self.circularity_samples - 1) as f64
        } else {
            0.0
        };
        RATE_SLOPE * dp.hypot(dc)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            power_samples: 201,
            circularity_samples: 201,
        }
    }
}

/// Both PU constraints hold (within `1e-9`), `0 < p <= p_s,max` and
/// `0 <= cx <= 1`.
pub fn feasible(design: &SignalDesign, scenario: &Scenario) -> bool {
    design.power > 0.0
        && design.power <= scenario.su_power_max
        && (0.0..=1.0).contains(&design.circularity)
        && Node::BOTH
            .iter()
            .all(|&n| scenario.pu_rate(design, n) >= scenario.pu_target_rate[n.index()] - BOUND_TOL)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridBest {
    /// `SignalDesign::IDLE` when no grid point is feasible.
    pub design: SignalDesign,
    pub su_rate: f64,
    pub found: bool,
}

pub fn grid_search(scenario: &Scenario, grid: &GridSpec) -> GridBest {
    grid_search_with(scenario, grid, Execution::default())
}

/// Best feasible grid point. Ties go to the smaller circularity, then the
/// smaller power, independently of the execution mode.
pub fn grid_search_with(scenario: &Scenario, grid: &GridSpec, exec: Execution) -> GridBest {
    let rows = exec.map_indexed(grid.circularity_samples, |l| {
        let cx = grid.circularity(l);
        let mut best: Option<(SignalDesign, f64)> = None;
        for k in 1..grid.power_samples {
            let design = SignalDesign::new(grid.power(scenario, k), cx);
            if !feasible(&design, scenario) {
                continue;
            }
            let rate = scenario.su_rate(&design);
            if best.is_none_or(|(_, r)| rate > r) {
                best = Some((design, rate));
            }
        }
        best
    });
    let mut best: Option<(SignalDesign, f64)> = None;
    for (design, rate) in rows.into_iter().flatten() {
        if best.is_none_or(|(_, r)| rate > r) {
            best = Some((design, rate));
        }
    }
    match best {
        Some((design, su_rate)) => GridBest {
            design,
            su_rate,
            found: true,
        },
        None => GridBest {
            design: SignalDesign::IDLE,
            su_rate: 0.0,
            found: false,
        },
    }
}

/// One row of a solver-versus-grid comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario_id: usize,
    pub alg_power: f64,
    pub alg_circularity: f64,
    pub alg_rate: f64,
    pub grid_power: f64,
    pub grid_circularity: f64,
    pub grid_rate: f64,
    /// `alg_rate - grid_rate`.
    pub gap: f64,
    /// Solver design is idle or satisfies every constraint.
    pub alg_feasible: bool,
    pub grid_found: bool,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn compare(id: usize, scenario: &Scenario, grid: &GridSpec) -> ComparisonReport {
    compare_solution(
        id,
        scenario,
        grid,
        &solve_igs(scenario),
        Execution::default(),
    )
}

/// Compares an already computed solution against the grid.
pub fn compare_solution(
    id: usize,
    scenario: &Scenario,
    grid: &GridSpec,
    solution: &Solution,
    exec: Execution,
) -> ComparisonReport {
    compare_with_tolerance(id, scenario, grid, solution, grid.tolerance(), exec)
}

pub fn compare_with_tolerance(
    id: usize,
    scenario: &Scenario,
    grid: &GridSpec,
    solution: &Solution,
    tolerance: f64,
    exec: Execution,
) -> ComparisonReport {
    let best = grid_search_with(scenario, grid, exec);
    let design = solution.design;
    let alg_rate = scenario.su_rate(&design);
    let alg_feasible = design.is_idle() || feasible(&design, scenario);
    let gap = alg_rate - best.su_rate;
    ComparisonReport {
        scenario_id: id,
        alg_power: design.power,
        alg_circularity: design.circularity,
        alg_rate,
        grid_power: best.design.power,
        grid_circularity: best.design.circularity,
        grid_rate: best.su_rate,
        gap,
        alg_feasible,
        grid_found: best.found,
        tolerance,
        pass: alg_feasible && gap >= -tolerance,
    }
}

/// Statistics whose CNR means are drawn uniformly in `[-10, 25]` dB with
/// targets from `{0.5, 1, 2}`; powers and budget stay at 1 W.
pub fn random_statistics<R: Rng + ?Sized>(rng: &mut R) -> ScenarioStatistics {
    let mut db = || rng.random_range(-10.0..=25.0);
    let pu_direct_cnr_db = [db(), db()];
    let su_direct_cnr_db = db();
    let su_to_pu_cnr_db = [db(), db()];
    let pu_to_su_cnr_db = [db(), db()];
    let rsi_cnr_db = [db(), db()];
    const TARGETS: [f64; 3] = [0.5, 1.0, 2.0];
    let pu_target_rate = [
        TARGETS[rng.random_range(0..3)],
        TARGETS[rng.random_range(0..3)],
    ];
    ScenarioStatistics {
        pu_power_w: [1.0, 1.0],
        pu_target_rate,
        pu_direct_cnr_db,
        su_direct_cnr_db,
        su_to_pu_cnr_db,
        pu_to_su_cnr_db,
        rsi_cnr_db,
        su_power_max_w: 1.0,
        pu_direct_correlation: 0.95,
    }
}

/// Scenario `index` of the random verification set for `seed`: random means,
/// then one fading realization. Each index has its own RNG stream.
pub fn random_scenario(seed: u64, index: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let stats = random_statistics(&mut rng);
    sample_scenario(&stats, &mut rng)
}

pub fn random_scenarios(count: usize, seed: u64) -> Vec<Scenario> {
    (0..count as u64)
        .map(|i| random_scenario(seed, i))
        .collect()
}
