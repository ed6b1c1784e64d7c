//! Closed-form two-player benchmark.
//!
//! Two players each see a binary signal and decide whether to move against
//! the regime, which falls to a single mover with probability `q` and to
//! both movers for sure. Costs above one half keep the low signal out of
//! every equilibrium, so the whole analysis runs on two numbers: `q` and
//! the high signal's confidence `p_tilde` that the other player also saw a
//! high signal. The candidate strategies participate only on the high
//! signal: never (`sigma0`), one player only (`sigmaA`), both with an
//! interior mixing probability (`sigmaBeta`), or both for sure (`sigma1`).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::population::{Pmf, PopulationModel, ThresholdModel};
use crate::scenario::Game;
use crate::signal::{InfoStructure, SignalSpace};

pub const BOUNDARY_TOL: f64 = 1e-7;

/// The two-player primitives: solo success chance `q`, cost `c`, high-signal
/// marginal `p` in state 1, and similarity mass `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPlayerScenario {
    pub q: f64,
    pub c: f64,
    pub p: f64,
    pub alpha: f64,
}

impl TwoPlayerScenario {
    pub fn new(q: f64, c: f64, p: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::DomainError(format!("q = {q} must lie in [0, 1]")));
        }
        check_cost(c)?;
        if !(0.0 < p && p <= 1.0) {
            return Err(Error::DomainError(format!("p = {p} must lie in (0, 1]")));
        }
        if alpha < 0.0 || alpha > p * (1.0 - p) {
            return Err(Error::NonnegativityViolated {
                i: 0,
                j: 1,
                alpha,
                available: p * (1.0 - p),
            });
        }
        Ok(Self { q, c, p, alpha })
    }

    /// Probability the other player's signal is also high, given mine is:
    /// `p + alpha / p`.
    pub fn p_tilde(&self) -> f64 {
        self.p + self.alpha / self.p
    }
}

fn check_cost(c: f64) -> Result<()> {
    if !(0.5 < c && c < 1.0) {
        return Err(Error::DomainError(format!(
            "cost {c} must lie strictly between 1/2 and 1"
        )));
    }
    Ok(())
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Above this, both-always is the maximal equilibrium (given q > 1/2).
    pub q_star: f64,
    /// Below this, both-always is maximal even for q < 1/2.
    pub q_double_star: f64,
    /// Where the interior mixing probability passes 1/2, so mixing starts
    /// to beat the one-player equilibrium on expected effort.
    pub q_hat: f64,
}

/// The three cutoffs in `q` that organize the region map for a given cost
/// and signal confidence.
pub fn two_player_thresholds(c: f64, p_tilde: f64) -> Result<Thresholds> {
    check_cost(c)?;
    if !(0.0..=1.0).contains(&p_tilde) {
        return Err(Error::DomainError(format!(
            "p_tilde = {p_tilde} must lie in [0, 1]"
        )));
    }
    let q_star = if p_tilde > 1.0 - c {
        1.0
    } else {
        clamp01((c - p_tilde) / (1.0 - 2.0 * p_tilde))
    };
    let q_double_star = if p_tilde > c {
        clamp01((p_tilde - c) / (2.0 * p_tilde - 1.0))
    } else {
        0.0
    };
    let q_hat = if p_tilde >= 1.0 {
        1.0
    } else {
        clamp01((2.0 * c - p_tilde) / (2.0 * (1.0 - p_tilde)))
    };
    Ok(Thresholds {
        q_star,
        q_double_star,
        q_hat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoPlayerLabel {
    Sigma0,
    SigmaA,
    SigmaBeta,
    Sigma1,
    /// Within tolerance of a region edge; no side is claimed.
    Boundary,
}

impl std::fmt::Display for TwoPlayerLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TwoPlayerLabel::Sigma0 => "sigma0",
            TwoPlayerLabel::SigmaA => "sigmaA",
            TwoPlayerLabel::SigmaBeta => "sigmaBeta",
            TwoPlayerLabel::Sigma1 => "sigma1",
            TwoPlayerLabel::Boundary => "boundary",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPlayerOutcome {
    pub label: TwoPlayerLabel,
    /// The interior mixing probability, present exactly for `SigmaBeta`.
    pub beta: Option<f64>,
}

/// The high-signal participation bracket when the other player joins with
/// probability `weight` on a high signal: `q + weight * p_tilde * (1 - 2q)`
/// at weight 1 reduces to `q + p_tilde (1 - 2q)`.
pub fn high_signal_gain(q: f64, p_tilde: f64) -> f64 {
    q + p_tilde * (1.0 - 2.0 * q)
}

/// Interior mixing probability where high-signal holders are indifferent,
/// when one exists strictly inside (0, 1).
pub fn mixing_probability(q: f64, c: f64, p_tilde: f64) -> Option<f64> {
    let denom = (2.0 * q - 1.0) * p_tilde;
    if denom.abs() < f64::EPSILON {
        return None;
    }
    let beta = (q - c) / denom;
    (1e-9 < beta && beta < 1.0 - 1e-9).then_some(beta)
}

pub fn sigma1_is_equilibrium(q: f64, c: f64, p_tilde: f64) -> bool {
    high_signal_gain(q, p_tilde) >= c
}

pub fn sigma_a_is_equilibrium(q: f64, c: f64, p_tilde: f64) -> bool {
    q >= c && high_signal_gain(q, p_tilde) <= c
}

fn near_boundary(q: f64, c: f64, p_tilde: f64, t: &Thresholds, tol: f64) -> bool {
    [0.5, c, t.q_star, t.q_double_star, t.q_hat]
        .iter()
        .any(|b| (q - b).abs() < tol)
        || (p_tilde - c).abs() < tol
        || (p_tilde - (1.0 - c)).abs() < tol
}

/// Maximal equilibrium by region, following the closed-form map in `q` and
/// `p_tilde`. Points within `BOUNDARY_TOL` of a region edge come back as
/// `Boundary` rather than being assigned a side.
pub fn two_player_maximal(q: f64, c: f64, p_tilde: f64) -> Result<TwoPlayerOutcome> {
    check_cost(c)?;
    let t = two_player_thresholds(c, p_tilde)?;
    if near_boundary(q, c, p_tilde, &t, BOUNDARY_TOL) {
        return Ok(TwoPlayerOutcome {
            label: TwoPlayerLabel::Boundary,
            beta: None,
        });
    }
    let label = if q < 0.5 {
        if p_tilde > c && q < t.q_double_star {
            TwoPlayerLabel::Sigma1
        } else {
            TwoPlayerLabel::Sigma0
        }
    } else if q < c {
        TwoPlayerLabel::Sigma0
    } else if p_tilde < 1.0 - c {
        if q < t.q_hat {
            TwoPlayerLabel::SigmaA
        } else if q < t.q_star {
            TwoPlayerLabel::SigmaBeta
        } else {
            TwoPlayerLabel::Sigma1
        }
    } else if q < t.q_hat {
        TwoPlayerLabel::SigmaA
    } else {
        TwoPlayerLabel::SigmaBeta
    };
    let beta = match label {
        TwoPlayerLabel::SigmaBeta => mixing_probability(q, c, p_tilde),
        _ => None,
    };
    Ok(TwoPlayerOutcome { label, beta })
}

/// Maximal equilibrium by direct enumeration: check each candidate
/// strategy's equilibrium conditions and rank the survivors by expected
/// effort (2 for both-always, 1 for one-player, 2 beta for mixing). Used to
/// cross-check the region map.
pub fn maximal_by_enumeration(q: f64, c: f64, p_tilde: f64) -> Result<TwoPlayerOutcome> {
    check_cost(c)?;
    let t = two_player_thresholds(c, p_tilde)?;
    if near_boundary(q, c, p_tilde, &t, BOUNDARY_TOL) {
        return Ok(TwoPlayerOutcome {
            label: TwoPlayerLabel::Boundary,
            beta: None,
        });
    }
    let mut best = (TwoPlayerLabel::Sigma0, 0.0, None);
    if sigma_a_is_equilibrium(q, c, p_tilde) && 1.0 > best.1 {
        best = (TwoPlayerLabel::SigmaA, 1.0, None);
    }
    if let Some(beta) = mixing_probability(q, c, p_tilde) {
        if 2.0 * beta > best.1 {
            best = (TwoPlayerLabel::SigmaBeta, 2.0 * beta, Some(beta));
        }
    }
    if sigma1_is_equilibrium(q, c, p_tilde) && 2.0 > best.1 {
        best = (TwoPlayerLabel::Sigma1, 2.0, None);
    }
    Ok(TwoPlayerOutcome {
        label: best.0,
        beta: best.2,
    })
}

/// One row of the region map CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPoint {
    pub q: f64,
    pub p_tilde: f64,
    pub label: TwoPlayerLabel,
    pub beta: Option<f64>,
}

/// Classifies an `n x n` grid of cell midpoints in the unit square of
/// `(q, p_tilde)`.
pub fn region_map(c: f64, n: usize) -> Result<Vec<RegionPoint>> {
    check_cost(c)?;
    let coord = |i: usize| (i as f64 + 0.5) / n as f64;
    (0..n * n)
        .into_par_iter()
        .map(|cell| {
            let q = coord(cell / n);
            let p_tilde = coord(cell % n);
            let outcome = two_player_maximal(q, c, p_tilde)?;
            Ok(RegionPoint {
                q,
                p_tilde,
                label: outcome.label,
                beta: outcome.beta,
            })
        })
        .collect()
}

/// The same two-player game expressed for the general engine: group sizes
/// deterministically 1, resilience 0 with probability `q` and 1 otherwise,
/// binary signals with high-signal marginal `p` in state 1, and state 0
/// degenerate at the low signal. The prior of one half plus a cost above
/// one half keep the low signal out of every pure equilibrium, matching
/// the closed-form analysis.
pub fn embed_two_player(q: f64, p: f64, alpha: f64, c: f64) -> Result<Game<f64>> {
    let scenario = TwoPlayerScenario::new(q, c, p, alpha)?;
    let space = SignalSpace::new(vec!["low".to_string(), "high".to_string()])?;
    let lo = 1.0 - p;
    let joint1 = [
        [lo * lo + alpha, p * lo - alpha],
        [p * lo - alpha, p * p + alpha],
    ];
    let joint0 = [[1.0, 0.0], [0.0, 0.0]];
    let info = InfoStructure::build(
        0.5,
        joint0.map(|r| r.to_vec()).to_vec(),
        joint1.map(|r| r.to_vec()).to_vec(),
        space,
    )?;
    let population = PopulationModel::deterministic(1)?;
    let threshold = ThresholdModel::explicit(Pmf::new(vec![scenario.q, 1.0 - scenario.q])?);
    Ok(Game::new(info, population, threshold, c))
}
