//! Scenario types and the closed-form rate expressions.
//!
//! Every quantity is a channel-to-noise ratio (CNR): the noise variance is
//! folded into the channel gains and never stored. PU stream `i` is received
//! at node `j = i.peer()`, so the terms that load stream `i` (RSI factor
//! `beta_j`, SU interference `I_s_j`) are indexed by the receiver.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for bound comparisons.
pub const BOUND_TOL: f64 = 1e-9;

const DEFAULT_STATS_JSON: &str = include_str!("../data/default_stats.json");

/// `10^(x/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// One of the two full-duplex PU nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    First,
    Second,
}

impl Node {
    pub const BOTH: [Node; 2] = [Node::First, Node::Second];

    pub fn index(self) -> usize {
        match self {
            Node::First => 0,
            Node::Second => 1,
        }
    }

    /// The node that receives this node's stream.
    pub fn peer(self) -> Node {
        match self {
            Node::First => Node::Second,
            Node::Second => Node::First,
        }
    }

    pub fn from_number(n: usize) -> Option<Node> {
        match n {
            1 => Some(Node::First),
            2 => Some(Node::Second),
            _ => None,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

/// One instantaneous channel realization. All CNRs and powers are linear.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// PU transmit powers `p_i` (W).
    pub pu_power: [f64; 2],
    /// PU minimum target rates `R_0,p_i` (bits/s/Hz).
    pub pu_target_rate: [f64; 2],
    /// Direct CNR `gamma_p_i` of the link from node `i` to its peer.
    pub pu_direct_cnr: [f64; 2],
    /// SU direct CNR `gamma_s`.
    pub su_direct_cnr: f64,
    /// Interference CNR `I_s_i` from the SU transmitter to PU node `i`.
    pub su_to_pu_cnr: [f64; 2],
    /// Interference CNR `I_p_i` from PU node `i` to the SU receiver.
    pub pu_to_su_cnr: [f64; 2],
    /// Residual self-interference CNR `upsilon_p_i` at PU node `i`.
    pub rsi_cnr: [f64; 2],
    /// SU power budget `p_s,max` (W).
    pub su_power_max: f64,
}

/// SU decision pair: transmit power and circularity coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SignalDesign {
    pub power: f64,
    pub circularity: f64,
}

impl SignalDesign {
    pub const IDLE: SignalDesign = SignalDesign {
        power: 0.0,
        circularity: 0.0,
    };

    pub fn new(power: f64, circularity: f64) -> Self {
        Self { power, circularity }
    }

    pub fn proper(power: f64) -> Self {
        Self::new(power, 0.0)
    }

    pub fn is_idle(&self) -> bool {
        self.power <= 0.0
    }
}

/// Rates and circularity coefficients induced by a design.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReport {
    /// PU stream rates `R_p_i`, indexed by transmitting node.
    pub pu_rate: [f64; 2],
    pub su_rate: f64,
    /// Circularity of the received signal carrying stream `i`.
    pub received_circularity: [f64; 2],
    /// Circularity of the interference-plus-noise affecting stream `i`.
    pub interference_circularity: [f64; 2],
}

/// The three PU-side SINR margins that drive every power bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Margins {
    /// `Psi_i(1,1)`
    pub single: f64,
    /// `Psi_i(1,2)`
    pub cross: f64,
    /// `Psi_i(2,2)`
    pub double: f64,
}

/// `(1 + s)^x - 1`, exact doubling for `x = 2`.
fn sinr_for_multiple(base: f64, x: f64) -> f64 {
    if x == 1.0 {
        base
    } else if x == 2.0 {
        base * (base + 2.0)
    } else {
        (x * base.ln_1p()).exp_m1()
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidScenario(format!(
                    "{name} must be finite and >= 0, got {v}"
                )))
            }
        };
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidScenario(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        };
        for k in 0..2 {
            positive("pu_power", self.pu_power[k])?;
            positive("pu_target_rate", self.pu_target_rate[k])?;
            finite_nonneg("pu_direct_cnr", self.pu_direct_cnr[k])?;
            finite_nonneg("su_to_pu_cnr", self.su_to_pu_cnr[k])?;
            finite_nonneg("pu_to_su_cnr", self.pu_to_su_cnr[k])?;
            finite_nonneg("rsi_cnr", self.rsi_cnr[k])?;
        }
        finite_nonneg("su_direct_cnr", self.su_direct_cnr)?;
        positive("su_power_max", self.su_power_max)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        let scenario = Scenario::from(&file);
        scenario.validate()?;
        Ok(scenario)
    }

    /// `beta_j = p_j * upsilon_p_j + 1` at receiving node `j`.
    pub fn beta(&self, receiver: Node) -> f64 {
        let j = receiver.index();
        self.pu_power[j] * self.rsi_cnr[j] + 1.0
    }

    /// Aggregate PU-to-SU interference plus noise, `p_1 I_p_1 + p_2 I_p_2 + 1`.
    pub fn su_interference_plus_noise(&self) -> f64 {
        self.pu_power[0] * self.pu_to_su_cnr[0] + self.pu_power[1] * self.pu_to_su_cnr[1] + 1.0
    }

    /// SINR `Gamma_i(x)` needed to reach `x` times the target rate of stream `i`.
    pub fn gamma_target(&self, node: Node, x: f64) -> f64 {
        let single = (self.pu_target_rate[node.index()] * std::f64::consts::LN_2).exp_m1();
        sinr_for_multiple(single, x)
    }

    /// SINR `phi_i(x)` reaching `x` times the SU-free rate of stream `i`.
    pub fn phi_required(&self, node: Node, x: f64) -> f64 {
        let i = node.index();
        let single = self.pu_power[i] * self.pu_direct_cnr[i] / self.beta(node.peer());
        sinr_for_multiple(single, x)
    }

    /// `Psi_i(x, y) = phi_i(x) / Gamma_i(y) - 1`.
    pub fn psi_margin(&self, node: Node, x: f64, y: f64) -> Result<f64> {
        let target = self.gamma_target(node, y);
        if target <= 0.0 {
            return Err(Error::DegenerateTarget(node));
        }
        Ok(self.phi_required(node, x) / target - 1.0)
    }

    /// The margins for stream `i`. Assumes a validated scenario (nonzero targets).
    pub fn margins(&self, node: Node) -> Margins {
        let g1 = self.gamma_target(node, 1.0);
        let g2 = self.gamma_target(node, 2.0);
        let f1 = self.phi_required(node, 1.0);
        let f2 = self.phi_required(node, 2.0);
        Margins {
            single: f1 / g1 - 1.0,
            cross: f1 / g2 - 1.0,
            double: f2 / g2 - 1.0,
        }
    }

    /// Largest interference-to-noise ratio stream `i` tolerates, clamped at zero.
    pub fn i_max(&self, node: Node) -> f64 {
        let i = node.index();
        (self.pu_power[i] * self.pu_direct_cnr[i] / self.gamma_target(node, 1.0) - 1.0).max(0.0)
    }

    /// `(C_y_i, C_I_i)`: circularity of the received and of the
    /// interference-plus-noise signal for stream `i`.
    pub fn circularity_coefficients(&self, design: &SignalDesign, node: Node) -> (f64, f64) {
        let i = node.index();
        let j = node.peer();
        let su = design.power * self.su_to_pu_cnr[j.index()];
        if su <= 0.0 || design.circularity <= 0.0 {
            return (0.0, 0.0);
        }
        let beta = self.beta(j);
        let improper = su * design.circularity;
        let received = improper / (self.pu_power[i] * self.pu_direct_cnr[i] + beta + su);
        let interference = improper / (beta + su);
        (received, interference)
    }

    /// Rate of PU stream `i` in the simplified single-logarithm form.
    pub fn pu_rate(&self, design: &SignalDesign, node: Node) -> f64 {
        let i = node.index();
        let j = node.peer();
        let signal = self.pu_power[i] * self.pu_direct_cnr[i];
        let su = design.power * self.su_to_pu_cnr[j.index()];
        let base = self.beta(j) + su;
        let improper = su * design.circularity;
        // (A^2 - X^2) / (B^2 - X^2) = 1 + signal (A + B) / ((B - X)(B + X)), A = B + signal
        let ratio = signal * (2.0 * base + signal) / ((base - improper) * (base + improper));
        0.5 * ratio.ln_1p() / std::f64::consts::LN_2
    }

    /// Rate of PU stream `i` composed from the proper-signaling SINR term and
    /// the circularity correction. Equal to [`Scenario::pu_rate`].
    pub fn pu_rate_from_circularity(&self, design: &SignalDesign, node: Node) -> f64 {
        let i = node.index();
        let j = node.peer();
        let sinr = self.pu_power[i] * self.pu_direct_cnr[i]
            / (self.beta(j) + design.power * self.su_to_pu_cnr[j.index()]);
        let (cy, ci) = self.circularity_coefficients(design, node);
        let correction = ((1.0 - cy) * (1.0 + cy)) / ((1.0 - ci) * (1.0 + ci));
        sinr.ln_1p() / std::f64::consts::LN_2 + 0.5 * correction.log2()
    }

    /// Rate of PU stream `i` when the SU is proper with power `power`.
    pub fn pu_rate_proper(&self, power: f64, node: Node) -> f64 {
        let i = node.index();
        let j = node.peer();
        let sinr = self.pu_power[i] * self.pu_direct_cnr[i]
            / (self.beta(j) + power * self.su_to_pu_cnr[j.index()]);
        sinr.ln_1p() / std::f64::consts::LN_2
    }

    pub fn su_rate(&self, design: &SignalDesign) -> f64 {
        let snr = design.power * self.su_direct_cnr / self.su_interference_plus_noise();
        let c = design.circularity;
        let inner = 2.0 * snr + snr * snr * ((1.0 - c) * (1.0 + c));
        0.5 * inner.ln_1p() / std::f64::consts::LN_2
    }

    pub fn su_rate_proper(&self, power: f64) -> f64 {
        let snr = power * self.su_direct_cnr / self.su_interference_plus_noise();
        snr.ln_1p() / std::f64::consts::LN_2
    }

    pub fn rate_report(&self, design: &SignalDesign) -> RateReport {
        let mut report = RateReport {
            pu_rate: [0.0; 2],
            su_rate: self.su_rate(design),
            received_circularity: [0.0; 2],
            interference_circularity: [0.0; 2],
        };
        for node in Node::BOTH {
            let k = node.index();
            report.pu_rate[k] = self.pu_rate(design, node);
            let (cy, ci) = self.circularity_coefficients(design, node);
            report.received_circularity[k] = cy;
            report.interference_circularity[k] = ci;
        }
        report
    }
}

/// JSON layout of a scenario file. CNRs are given in dB, powers in watts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub pu_power_w: [f64; 2],
    pub pu_target_rate: [f64; 2],
    pub pu_direct_cnr_db: [f64; 2],
    pub su_direct_cnr_db: f64,
    pub su_to_pu_cnr_db: [f64; 2],
    pub pu_to_su_cnr_db: [f64; 2],
    pub rsi_cnr_db: [f64; 2],
    pub su_power_max_w: f64,
}

fn pair_db(v: [f64; 2]) -> [f64; 2] {
    [db_to_linear(v[0]), db_to_linear(v[1])]
}

impl From<&ScenarioFile> for Scenario {
    fn from(f: &ScenarioFile) -> Self {
        Scenario {
            pu_power: f.pu_power_w,
            pu_target_rate: f.pu_target_rate,
            pu_direct_cnr: pair_db(f.pu_direct_cnr_db),
            su_direct_cnr: db_to_linear(f.su_direct_cnr_db),
            su_to_pu_cnr: pair_db(f.su_to_pu_cnr_db),
            pu_to_su_cnr: pair_db(f.pu_to_su_cnr_db),
            rsi_cnr: pair_db(f.rsi_cnr_db),
            su_power_max: f.su_power_max_w,
        }
    }
}

/// Mean CNRs (dB) of the exponential fading model, plus the correlation of the
/// two PU direct complex gains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioStatistics {
    pub pu_power_w: [f64; 2],
    pub pu_target_rate: [f64; 2],
    pub pu_direct_cnr_db: [f64; 2],
    pub su_direct_cnr_db: f64,
    pub su_to_pu_cnr_db: [f64; 2],
    pub pu_to_su_cnr_db: [f64; 2],
    pub rsi_cnr_db: [f64; 2],
    pub su_power_max_w: f64,
    pub pu_direct_correlation: f64,
}

impl Default for ScenarioStatistics {
    /// The bundled experiment defaults (`data/default_stats.json`).
    fn default() -> Self {
        serde_json::from_str(DEFAULT_STATS_JSON).expect("bundled default stats parse")
    }
}

impl ScenarioStatistics {
    pub fn bundled_json() -> &'static str {
        DEFAULT_STATS_JSON
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let stats: ScenarioStatistics = serde_json::from_str(&text)?;
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pu_direct_correlation) {
            return Err(Error::InvalidScenario(format!(
                "pu_direct_correlation must lie in [0, 1], got {}",
                self.pu_direct_correlation
            )));
        }
        let db = self
            .pu_direct_cnr_db
            .iter()
            .chain(&self.su_to_pu_cnr_db)
            .chain(&self.pu_to_su_cnr_db)
            .chain(&self.rsi_cnr_db)
            .chain(std::iter::once(&self.su_direct_cnr_db));
        for v in db {
            if !v.is_finite() {
                return Err(Error::InvalidScenario(format!(
                    "dB mean must be finite, got {v}"
                )));
            }
        }
        self.mean_scenario().validate()
    }

    /// The scenario whose CNRs equal the means.
    pub fn mean_scenario(&self) -> Scenario {
        Scenario::from(&self.mean_file())
    }

    pub fn mean_file(&self) -> ScenarioFile {
        ScenarioFile {
            pu_power_w: self.pu_power_w,
            pu_target_rate: self.pu_target_rate,
            pu_direct_cnr_db: self.pu_direct_cnr_db,
            su_direct_cnr_db: self.su_direct_cnr_db,
            su_to_pu_cnr_db: self.su_to_pu_cnr_db,
            pu_to_su_cnr_db: self.pu_to_su_cnr_db,
            rsi_cnr_db: self.rsi_cnr_db,
            su_power_max_w: self.su_power_max_w,
        }
    }
}
