//! Scenario files and the assembled game.
//!
//! A scenario is the JSON description a user hands us: prior, signal labels,
//! the two joint matrices, a population model, a resilience model, and the
//! participation cost. Loading is split in two phases so one file can feed
//! both the floating-point and the exact engines: parsing keeps every number
//! as a raw JSON literal, and `game()` / `exact_game()` convert on demand.

use std::path::Path;

use serde::Deserialize;
use serde_json::{Number, Value};

use crate::error::{Error, Result};
use crate::population::{
    pivotal_profile, PivotalProfile, Pmf, PopulationModel, ThresholdModel,
};
use crate::scalar::{exact_from_decimal, Exact, Scalar};
use crate::signal::{InfoStructure, SignalSpace};

/// Current schema version; files must carry `"version": 1`.
pub const SCHEMA_VERSION: u64 = 1;

/// Signal-space cap for the exact engine, where subset enumeration over
/// rational arithmetic gets expensive quickly.
pub const MAX_EXACT_SIGNALS: usize = 6;

/// Conversion from raw JSON literals into an engine scalar, plus the one
/// population model whose construction is scalar-specific: truncated
/// Poisson masses are irrational, so only the float engine offers them.
pub trait FromNumber: Scalar {
    fn from_number(n: &Number) -> Option<Self>;

    fn poisson_population(mean: f64) -> Result<PopulationModel<Self>>;
}

impl FromNumber for f64 {
    fn from_number(n: &Number) -> Option<Self> {
        n.as_f64()
    }

    fn poisson_population(mean: f64) -> Result<PopulationModel<f64>> {
        PopulationModel::poisson(mean)
    }
}

impl FromNumber for Exact {
    fn from_number(n: &Number) -> Option<Self> {
        exact_from_decimal(&n.to_string())
    }

    fn poisson_population(_mean: f64) -> Result<PopulationModel<Exact>> {
        Err(Error::ModelNotSupported {
            op: "exact_game",
            requirement: "an explicit population (Poisson masses are irrational)",
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PopulationSpec {
    Poisson { mean: Number },
    Explicit { outside: Vec<Number>, own: Vec<Number> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ThresholdSpec {
    Det { value: u64 },
    Explicit { pmf: Vec<Number> },
}

/// Parsed but not yet converted scenario file.
#[derive(Debug, Clone, Deserialize)]
pub struct Scenario {
    pub version: u64,
    pub prior: Number,
    pub signals: Vec<String>,
    pub joint1: Vec<Vec<Number>>,
    pub joint0: Vec<Vec<Number>>,
    pub population: PopulationSpec,
    pub threshold: ThresholdSpec,
    pub cost: Number,
    #[serde(default)]
    pub committee: Option<Value>,
    #[serde(default)]
    pub multigroup: Option<Value>,
    #[serde(default)]
    pub signed_state: Option<Value>,
}

impl Scenario {
    /// Structural parse. Missing or mistyped fields surface here; content
    /// problems (bad matrices, out-of-range prior) wait for `game()`.
    pub fn from_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ParseError(format!("{}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    /// Floating-point game.
    pub fn game(&self) -> Result<Game<f64>> {
        self.build()
    }

    /// Exact rational game. Poisson populations are rejected and the
    /// signal space is capped at [`MAX_EXACT_SIGNALS`].
    pub fn exact_game(&self) -> Result<Game<Exact>> {
        if matches!(self.population, PopulationSpec::Poisson { .. }) {
            return Err(Error::ModelNotSupported {
                op: "exact_game",
                requirement: "an explicit population (Poisson masses are irrational)",
            });
        }
        if self.signals.len() > MAX_EXACT_SIGNALS {
            return Err(Error::SizeCapExceeded {
                what: "exact-mode signals",
                got: self.signals.len(),
                cap: MAX_EXACT_SIGNALS,
            });
        }
        self.build()
    }

    fn build<S: FromNumber>(&self) -> Result<Game<S>> {
        let mut problems = Vec::new();

        if self.version != SCHEMA_VERSION {
            problems.push(format!(
                "unsupported scenario version {} (this build reads version {SCHEMA_VERSION})",
                self.version
            ));
        }

        let space = SignalSpace::new(self.signals.clone())
            .map_err(|e| problems.push(e.to_string()))
            .ok();

        let prior = convert::<S>(&self.prior, "prior", &mut problems);
        let cost = convert::<S>(&self.cost, "cost", &mut problems);
        if let Some(c) = &cost {
            if !(*c > S::zero()) {
                problems.push("cost must be positive".to_string());
            }
        }

        let joint1 = convert_matrix::<S>(&self.joint1, "joint1", &mut problems);
        let joint0 = convert_matrix::<S>(&self.joint0, "joint0", &mut problems);

        let info = match (space, prior, joint0, joint1) {
            (Some(space), Some(prior), Some(j0), Some(j1)) => {
                InfoStructure::build(prior, j0, j1, space)
                    .map_err(|e| problems.push(e.to_string()))
                    .ok()
            }
            _ => None,
        };

        let population = match &self.population {
            PopulationSpec::Poisson { mean } => match mean.as_f64() {
                Some(m) => S::poisson_population(m)
                    .map_err(|e| problems.push(e.to_string()))
                    .ok(),
                None => {
                    problems.push("population mean is not a finite number".to_string());
                    None
                }
            },
            PopulationSpec::Explicit { outside, own } => {
                let outside = convert_pmf::<S>(outside, "population.outside", &mut problems);
                let own = convert_pmf::<S>(own, "population.own", &mut problems);
                match (own, outside) {
                    (Some(own), Some(outside)) => Some(PopulationModel::explicit(own, outside)),
                    _ => None,
                }
            }
        };

        let threshold = match &self.threshold {
            ThresholdSpec::Det { value } => Some(ThresholdModel::deterministic(*value as usize)),
            ThresholdSpec::Explicit { pmf } => {
                convert_pmf::<S>(pmf, "threshold.pmf", &mut problems).map(ThresholdModel::explicit)
            }
        };

        match (info, population, threshold, cost) {
            (Some(info), Some(population), Some(threshold), Some(cost))
                if problems.is_empty() =>
            {
                Ok(Game::new(info, population, threshold, cost))
            }
            _ => Err(Error::ValidationError(problems)),
        }
    }
}

fn convert<S: FromNumber>(n: &Number, what: &str, problems: &mut Vec<String>) -> Option<S> {
    match S::from_number(n) {
        Some(v) => Some(v),
        None => {
            problems.push(format!("{what}: cannot represent {n} in this number mode"));
            None
        }
    }
}

fn convert_matrix<S: FromNumber>(
    rows: &[Vec<Number>],
    what: &str,
    problems: &mut Vec<String>,
) -> Option<Vec<Vec<S>>> {
    let before = problems.len();
    let out: Vec<Vec<S>> = rows
        .iter()
        .map(|row| {
            row.iter()
                .filter_map(|n| convert::<S>(n, what, problems))
                .collect()
        })
        .collect();
    (problems.len() == before).then_some(out)
}

fn convert_pmf<S: FromNumber>(
    raw: &[Number],
    what: &str,
    problems: &mut Vec<String>,
) -> Option<Pmf<S>> {
    let before = problems.len();
    let values: Vec<S> = raw
        .iter()
        .filter_map(|n| convert::<S>(n, what, problems))
        .collect();
    if problems.len() != before {
        return None;
    }
    match Pmf::new(values) {
        Ok(p) => Some(p),
        Err(e) => {
            problems.push(format!("{what}: {e}"));
            None
        }
    }
}

/// A fully assembled two-group game: information structure, pivotal
/// probabilities, and cost, plus the comparison tolerance every incentive
/// check in this crate uses.
#[derive(Debug, Clone)]
pub struct Game<S> {
    pub info: InfoStructure<S>,
    pub population: PopulationModel<S>,
    pub threshold: ThresholdModel<S>,
    pub pivot: PivotalProfile<S>,
    pub cost: S,
    pub tol: S,
}

impl<S: Scalar> Game<S> {
    pub fn new(
        info: InfoStructure<S>,
        population: PopulationModel<S>,
        threshold: ThresholdModel<S>,
        cost: S,
    ) -> Self {
        let pivot = pivotal_profile(&population, &threshold);
        Self {
            info,
            population,
            threshold,
            pivot,
            cost,
            tol: S::order_tol(),
        }
    }

    /// Replaces the comparison tolerance (the CLI's `--tol` lands here).
    pub fn with_tol(mut self, tol: S) -> Self {
        self.tol = tol;
        self
    }

    /// Swaps in a different information structure over the same signal
    /// space, keeping population, cost, and tolerance.
    pub fn with_info(&self, info: InfoStructure<S>) -> Self {
        Self {
            info,
            population: self.population.clone(),
            threshold: self.threshold.clone(),
            pivot: self.pivot.clone(),
            cost: self.cost.clone(),
            tol: self.tol.clone(),
        }
    }

    pub fn n_signals(&self) -> usize {
        self.info.len()
    }

    /// Mean group size as a float, for reporting.
    pub fn nbar(&self) -> f64 {
        self.population.mean().to_f64()
    }

    /// Human-readable caveats the caller should surface: currently only the
    /// pivotal-dominance condition (outside-only pivotality should not beat
    /// both within-group channels).
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.pivot.assumption1_holds {
            w.push(format!(
                "outside-only pivotal probability {:.3e} exceeds both own-group channels; \
                 comparative-statics results are not guaranteed here",
                self.pivot.lambda_o.to_f64()
            ));
        }
        w
    }
}

/// Ready-made games used across tests and the bundled scenario files.
pub mod presets {
    use super::*;
    use crate::signal::{eti, make_ci, SimilarityTransform, State};

    fn three_signal_info(extra_similarity: Option<f64>) -> InfoStructure<f64> {
        let space = SignalSpace::indexed(3);
        let m1 = vec![0.25, 0.30, 0.45];
        let m0 = vec![0.60, 0.35, 0.05];
        let mut j1 = make_ci(&m1).unwrap();
        let j0 = make_ci(&m0).unwrap();
        if let Some(alpha) = extra_similarity {
            j1 = eti(&j1, &SimilarityTransform::new(0, 1, alpha)).unwrap();
        }
        InfoStructure::from_joints(0.5, j0, j1, space).unwrap()
    }

    /// Three-signal game with conditionally independent signals in both
    /// states, Poisson sizes with mean 15, resilience 20, cost 0.009.
    pub fn b4_ci() -> Game<f64> {
        Game::new(
            three_signal_info(None),
            PopulationModel::poisson(15.0).unwrap(),
            ThresholdModel::deterministic(20),
            0.009,
        )
    }

    /// Same game after moving 0.005 of state-1 mass onto the diagonal of
    /// the two low signals.
    pub fn b4_eti() -> Game<f64> {
        Game::new(
            three_signal_info(Some(0.005)),
            PopulationModel::poisson(15.0).unwrap(),
            ThresholdModel::deterministic(20),
            0.009,
        )
    }

    /// Same marginals in an encouragement environment: smaller groups face
    /// a much harder regime, so pivotality rides on both groups showing up.
    pub fn encouragement() -> Game<f64> {
        Game::new(
            three_signal_info(None),
            PopulationModel::poisson(10.0).unwrap(),
            ThresholdModel::deterministic(25),
            0.01,
        )
    }

    /// State-1 joint of [`b4_ci`] after an arbitrary similarity transform,
    /// for tests that need a comparable pair on the same marginals.
    pub fn b4_transformed(i: usize, j: usize, alpha: f64) -> Game<f64> {
        let base = b4_ci();
        let info = base
            .info
            .apply_transform(State::One, &SimilarityTransform::new(i, j, alpha))
            .unwrap();
        base.with_info(info)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const B4_JSON: &str = r#"{
        "version": 1,
        "prior": 0.5,
        "signals": ["1", "2", "3"],
        "joint1": [[0.0625, 0.075, 0.1125],
                   [0.075, 0.09, 0.135],
                   [0.1125, 0.135, 0.2025]],
        "joint0": [[0.36, 0.21, 0.03],
                   [0.21, 0.1225, 0.0175],
                   [0.03, 0.0175, 0.0025]],
        "population": {"type": "poisson", "mean": 15},
        "threshold": {"type": "det", "value": 20},
        "cost": 0.009
    }"#;

    #[test]
    fn three_signal_file_round_trips() {
        let scn = Scenario::from_str(B4_JSON).unwrap();
        let game = scn.game().unwrap();
        let post = game.info.posteriors();
        assert!((post[0] - 0.29411764705882354).abs() < 1e-12);
        assert!((post[1] - 0.46153846153846156).abs() < 1e-12);
        assert!((post[2] - 0.9).abs() < 1e-12);
        assert_eq!(
            game.pivot.environment,
            crate::population::Environment::Discouragement
        );
        assert!(game.warnings().is_empty());
    }

    #[test]
    fn missing_cost_is_a_parse_error() {
        let broken = B4_JSON.replace(r#""cost": 0.009"#, r#""comment": "no cost""#);
        match Scenario::from_str(&broken) {
            Err(Error::ParseError(msg)) => assert!(msg.contains("cost"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_joint_is_a_validation_error() {
        let broken = B4_JSON.replace("0.075, 0.09, 0.135", "0.085, 0.09, 0.125");
        let scn = Scenario::from_str(&broken).unwrap();
        match scn.game() {
            Err(Error::ValidationError(list)) => {
                assert!(list.iter().any(|m| m.contains("exchangeable")), "{list:?}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_version_is_reported() {
        let broken = B4_JSON.replace(r#""version": 1"#, r#""version": 3"#);
        let scn = Scenario::from_str(&broken).unwrap();
        match scn.game() {
            Err(Error::ValidationError(list)) => {
                assert!(list.iter().any(|m| m.contains("version")), "{list:?}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn exact_mode_rejects_poisson_sizes() {
        let scn = Scenario::from_str(B4_JSON).unwrap();
        match scn.exact_game() {
            Err(Error::ModelNotSupported { .. }) => {}
            other => panic!("expected model rejection, got {other:?}"),
        }
    }

    #[test]
    fn exact_mode_reads_explicit_populations_exactly() {
        let text = r#"{
            "version": 1,
            "prior": 0.5,
            "signals": ["l", "h"],
            "joint1": [[0.16, 0.24], [0.24, 0.36]],
            "joint0": [[0.36, 0.24], [0.24, 0.16]],
            "population": {"type": "explicit", "outside": [0, 1], "own": [1]},
            "threshold": {"type": "explicit", "pmf": [0.3, 0.7]},
            "cost": 0.25
        }"#;
        let scn = Scenario::from_str(text).unwrap();
        let game = scn.exact_game().unwrap();
        assert_eq!(game.cost, Exact::from_ratio(1, 4));
        assert_eq!(game.pivot.lambda1, Exact::from_ratio(3, 10));
        assert_eq!(game.pivot.lambda2, Exact::from_ratio(7, 10));
        let float_game = scn.game().unwrap();
        assert!((float_game.pivot.lambda2 - 0.7).abs() < 1e-15);
    }

    #[test]
    fn presets_match_their_hand_built_values() {
        let game = presets::b4_ci();
        assert!((game.info.posteriors()[2] - 0.9).abs() < 1e-12);
        assert!((game.nbar() - 15.0).abs() < 1e-12);

        let shifted = presets::b4_eti();
        let j1 = shifted.info.joint(crate::signal::State::One);
        assert!((j1.entry(0, 0) - (0.0625 + 0.005)).abs() < 1e-12);
        assert!((j1.entry(0, 1) - (0.075 - 0.005)).abs() < 1e-12);
        assert_eq!(
            shifted.info.posteriors(),
            presets::b4_ci().info.posteriors()
        );

        let enc = presets::encouragement();
        assert_eq!(
            enc.pivot.environment,
            crate::population::Environment::Encouragement
        );
    }
}
