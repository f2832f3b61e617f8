//! Rayleigh-fading sampling and averaged rate sweeps.
//!
//! Each trial owns a ChaCha8 stream (`seed`, stream = trial index) that draws
//! unit-mean fading powers once. Every sweep cell rescales the same draws by
//! its own means, so both schemes and all sweep points see common random
//! numbers, and results do not depend on thread count.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{db_to_linear, Scenario, ScenarioStatistics};
use crate::par::Execution;
use crate::solver::{solve_igs, solve_pgs, SolutionKind};

/// Desk-scale trial count used by the built-in examples.
pub const DESK_TRIALS: usize = 10_000;
/// Trial count of the full-scale experiments.
pub const FULL_TRIALS: usize = 100_000;

/// Slack allowed when checking that IGS never loses to PGS on a realization.
const DOMINANCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    fn standard<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex {
            re: re * std::f64::consts::FRAC_1_SQRT_2,
            im: im * std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// Unit-mean exponential channel powers `|u|^2` of one realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitFading {
    pub pu_direct: [f64; 2],
    pub su_direct: f64,
    pub su_to_pu: [f64; 2],
    pub pu_to_su: [f64; 2],
    pub rsi: [f64; 2],
}

impl UnitFading {
    /// Draws one realization. The PU direct gains are correlated complex
    /// Gaussians: `u_21 = rho u_12 + sqrt(1 - rho^2) w`.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, correlation: f64) -> Self {
        let u12 = Complex::standard(rng);
        let w = Complex::standard(rng);
        let spread = (1.0 - correlation * correlation).max(0.0).sqrt();
        let u21 = Complex {
            re: correlation * u12.re + spread * w.re,
            im: correlation * u12.im + spread * w.im,
        };
        let mut unit = || Complex::standard(rng).norm_sqr();
        UnitFading {
            pu_direct: [u12.norm_sqr(), u21.norm_sqr()],
            su_direct: unit(),
            su_to_pu: [unit(), unit()],
            pu_to_su: [unit(), unit()],
            rsi: [unit(), unit()],
        }
    }
}

fn scale(mean_db: [f64; 2], unit: [f64; 2]) -> [f64; 2] {
    [
        db_to_linear(mean_db[0]) * unit[0],
        db_to_linear(mean_db[1]) * unit[1],
    ]
}

impl ScenarioStatistics {
    /// Scales unit fading powers by the mean CNRs.
    pub fn realize(&self, fading: &UnitFading) -> Scenario {
        Scenario {
            pu_power: self.pu_power_w,
            pu_target_rate: self.pu_target_rate,
            pu_direct_cnr: scale(self.pu_direct_cnr_db, fading.pu_direct),
            su_direct_cnr: db_to_linear(self.su_direct_cnr_db) * fading.su_direct,
            su_to_pu_cnr: scale(self.su_to_pu_cnr_db, fading.su_to_pu),
            pu_to_su_cnr: scale(self.pu_to_su_cnr_db, fading.pu_to_su),
            rsi_cnr: scale(self.rsi_cnr_db, fading.rsi),
            su_power_max: self.su_power_max_w,
        }
    }
}

pub fn sample_scenario<R: Rng + ?Sized>(stats: &ScenarioStatistics, rng: &mut R) -> Scenario {
    stats.realize(&UnitFading::draw(rng, stats.pu_direct_correlation))
}

/// Fading of trial `index` under `seed`.
pub fn trial_fading(seed: u64, index: u64, correlation: f64) -> UnitFading {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    UnitFading::draw(&mut rng, correlation)
}

/// A statistic that a sweep can vary. Pair-valued parameters are set on both
/// PU nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    PuDirectCnrDb,
    SuDirectCnrDb,
    SuToPuCnrDb,
    PuToSuCnrDb,
    RsiCnrDb,
    PuTargetRate,
    SuPowerMaxW,
}

impl SweepParameter {
    pub fn apply(self, stats: &mut ScenarioStatistics, value: f64) {
        match self {
            SweepParameter::PuDirectCnrDb => stats.pu_direct_cnr_db = [value; 2],
            SweepParameter::SuDirectCnrDb => stats.su_direct_cnr_db = value,
            SweepParameter::SuToPuCnrDb => stats.su_to_pu_cnr_db = [value; 2],
            SweepParameter::PuToSuCnrDb => stats.pu_to_su_cnr_db = [value; 2],
            SweepParameter::RsiCnrDb => stats.rsi_cnr_db = [value; 2],
            SweepParameter::PuTargetRate => stats.pu_target_rate = [value; 2],
            SweepParameter::SuPowerMaxW => stats.su_power_max_w = value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ScenarioStatistics,
    pub axis: SweepAxis,
    pub family: SweepAxis,
    pub trials: usize,
    pub seed: u64,
}

fn db_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|k| start + step * k as f64).collect()
}

impl SweepSpec {
    /// Built-in experiment `n`:
    /// 1. SU rate vs mean SU direct CNR (0..30 dB) for PU direct CNR 10/15/20 dB;
    /// 2. vs mean SU-to-PU interference (-10..30 dB) for PU targets 0.5/1/2;
    /// 3. vs mean RSI (0..40 dB) for SU budgets 1/10/100 W.
    pub fn example(n: u8, trials: usize, seed: u64) -> Result<Self> {
        let (axis, family) = match n {
            1 => (
                SweepAxis {
                    parameter: SweepParameter::SuDirectCnrDb,
                    values: db_range(0.0, 30.0, 5.0),
                },
                SweepAxis {
                    parameter: SweepParameter::PuDirectCnrDb,
                    values: vec![10.0, 15.0, 20.0],
                },
            ),
            2 => (
                SweepAxis {
                    parameter: SweepParameter::SuToPuCnrDb,
                    values: db_range(-10.0, 30.0, 5.0),
                },
                SweepAxis {
                    parameter: SweepParameter::PuTargetRate,
                    values: vec![0.5, 1.0, 2.0],
                },
            ),
            3 => (
                SweepAxis {
                    parameter: SweepParameter::RsiCnrDb,
                    values: db_range(0.0, 40.0, 5.0),
                },
                SweepAxis {
                    parameter: SweepParameter::SuPowerMaxW,
                    values: vec![1.0, 10.0, 100.0],
                },
            ),
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "unknown example {n}, expected 1, 2 or 3"
                )))
            }
        };
        Ok(SweepSpec {
            base: ScenarioStatistics::default(),
            axis,
            family,
            trials,
            seed,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: SweepSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        for (name, axis) in [("axis", &self.axis), ("family", &self.family)] {
            if axis.values.is_empty() {
                return Err(Error::InvalidSpec(format!("{name} has no values")));
            }
            if axis.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("{name} values must be finite")));
            }
        }
        if self.axis.values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidSpec("axis values must be sorted".into()));
        }
        for &f in &self.family.values {
            for &x in &self.axis.values {
                self.cell_statistics(f, x).validate()?;
            }
        }
        Ok(())
    }

    pub fn cell_statistics(&self, family_value: f64, axis_value: f64) -> ScenarioStatistics {
        let mut stats = self.base.clone();
        self.family.parameter.apply(&mut stats, family_value);
        self.axis.parameter.apply(&mut stats, axis_value);
        stats
    }
}

/// Averages at one `(family, axis)` point. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family_value: f64,
    pub axis_value: f64,
    pub mean_rs_pgs: f64,
    pub mean_rs_igs: f64,
    pub mean_cx: f64,
    pub idle_frac: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub trials: usize,
    pub seed: u64,
    /// Sample correlation of the two PU direct envelopes `|u_12|`, `|u_21|`.
    pub envelope_correlation: f64,
}

impl SweepResult {
    pub fn row(&self, family_value: f64, axis_value: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.family_value == family_value && r.axis_value == axis_value)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_rows(&self.rows, writer)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

pub fn write_rows<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(reader: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()?;
    Ok(rows)
}

#[derive(Clone, Copy, Debug)]
struct TrialOutcome {
    rs_pgs: f64,
    rs_igs: f64,
    cx: f64,
    idle: bool,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, Execution::default())
}

pub fn run_sweep_with(spec: &SweepSpec, exec: Execution) -> Result<SweepResult> {
    spec.validate()?;
    let rho = spec.base.pu_direct_correlation;
    let fading = exec.map_indexed(spec.trials, |t| trial_fading(spec.seed, t as u64, rho));
    let n = spec.trials as f64;

    let mut rows = Vec::with_capacity(spec.family.values.len() * spec.axis.values.len());
    for &family_value in &spec.family.values {
        for &axis_value in &spec.axis.values {
            let stats = spec.cell_statistics(family_value, axis_value);
            let outcomes = exec.map_slice(&fading, |f| {
                let scenario = stats.realize(f);
                let pgs = solve_pgs(&scenario);
                let igs = solve_igs(&scenario);
                TrialOutcome {
                    rs_pgs: pgs.su_rate(),
                    rs_igs: igs.su_rate(),
                    cx: igs.design.circularity,
                    idle: igs.kind == SolutionKind::Idle,
                }
            });
            let (mut pgs, mut igs, mut cx, mut idle) = (0.0, 0.0, 0.0, 0usize);
            for (t, o) in outcomes.iter().enumerate() {
                if o.rs_igs < o.rs_pgs - DOMINANCE_TOL {
                    return Err(Error::Invariant(format!(
                        "IGS rate {} below PGS rate {} at trial {t} (family {family_value}, axis {axis_value})",
                        o.rs_igs, o.rs_pgs
                    )));
                }
                pgs += o.rs_pgs;
                igs += o.rs_igs;
                cx += o.cx;
                idle += o.idle as usize;
            }
            rows.push(SweepRow {
                family_value,
                axis_value,
                mean_rs_pgs: pgs / n,
                mean_rs_igs: igs / n,
                mean_cx: cx / n,
                idle_frac: idle as f64 / n,
                trials: spec.trials,
                seed: spec.seed,
            });
        }
    }

    Ok(SweepResult {
        rows,
        trials: spec.trials,
        seed: spec.seed,
        envelope_correlation: envelope_correlation(&fading),
    })
}

fn envelope_correlation(fading: &[UnitFading]) -> f64 {
    let n = fading.len() as f64;
    if fading.len() < 2 {
        return f64::NAN;
    }
    let a: Vec<f64> = fading.iter().map(|f| f.pu_direct[0].sqrt()).collect();
    let b: Vec<f64> = fading.iter().map(|f| f.pu_direct[1].sqrt()).collect();
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(&b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
