//! Searching the admissible information family for maximal turnout.
//!
//! Fixing the state-0 joint and the state-1 marginals leaves a family of
//! state-1 joints ordered by similarity, from conditionally independent up
//! to fully correlated. Turnout at the best equilibrium is not monotone
//! along this family once discouragement effects enter, so the best
//! structure can sit strictly inside it. The search walks a per-pair grid
//! of similarity masses by coordinate ascent from several starts and keeps
//! the best profile it can certify.
//!
//! Ties are broken deterministically: an ascending scan keeps the smallest
//! similarity mass among maximizers, a coordinate is only moved on strict
//! improvement, and the earliest restart wins across restarts. Two runs
//! with the same configuration return bit-identical tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::equilibrium::{check_condition_m, enumerate_equilibria, StrategyProfile};
use crate::error::{Error, Result};
use crate::population::{Environment, PopulationModel, ThresholdModel};
use crate::scenario::Game;
use crate::signal::{eti, make_ci, InfoStructure, Joint, SignalSpace, SimilarityTransform};

const IMPROVEMENT_TOL: f64 = 1e-12;
const FEASIBILITY_TOL: f64 = 1e-12;
const MAX_PASSES: usize = 50;

#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Spacing of the per-pair similarity grid; each pair's cap is always
    /// included as a grid point.
    pub grid_step: f64,
    /// Number of ascent starts: all-zero, all-cap, then random tables.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_step: 1e-3,
            restarts: 10,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimalSearchResult {
    /// Symmetric table of pairwise similarity masses, zero on the diagonal.
    pub alpha: Vec<Vec<f64>>,
    pub s_star: f64,
    pub profile: StrategyProfile,
}

/// State-1 joint built from independent marginals by moving mass
/// `alpha[i][j]` from each signal pair onto its diagonal. Feasible exactly
/// when every entry stays within the independent mass of its pair.
pub fn pairwise_boost(marginal1: &[f64], alpha: &[Vec<f64>]) -> Result<Joint<f64>> {
    let n = marginal1.len();
    if alpha.len() != n || alpha.iter().any(|row| row.len() != n) {
        return Err(Error::DomainError(format!(
            "similarity table must be {n}x{n}"
        )));
    }
    for i in 0..n {
        if alpha[i][i] != 0.0 {
            return Err(Error::DomainError(format!(
                "similarity table has nonzero diagonal at {i}"
            )));
        }
        for j in (i + 1)..n {
            let a = alpha[i][j];
            if (a - alpha[j][i]).abs() > FEASIBILITY_TOL {
                return Err(Error::DomainError(format!(
                    "similarity table is not symmetric at ({i},{j})"
                )));
            }
            if a < 0.0 {
                return Err(Error::DomainError(format!(
                    "similarity mass at ({i},{j}) is negative"
                )));
            }
            let cap = marginal1[i] * marginal1[j];
            if a > cap + FEASIBILITY_TOL {
                return Err(Error::DomainError(format!(
                    "similarity mass {a} at ({i},{j}) exceeds the independent mass {cap}"
                )));
            }
        }
    }
    let mut joint = make_ci(marginal1)?;
    for i in 0..n {
        for j in (i + 1)..n {
            if alpha[i][j] > 0.0 {
                joint = eti(&joint, &SimilarityTransform::new(i, j, alpha[i][j]))?;
            }
        }
    }
    Ok(joint)
}

struct SearchSpace {
    prior: f64,
    joint0: Joint<f64>,
    marginal1: Vec<f64>,
    nbar: f64,
    theta_bar: usize,
    cost: f64,
    pairs: Vec<(usize, usize)>,
    grids: Vec<Vec<f64>>,
}

impl SearchSpace {
    fn evaluate(&self, alpha: &[Vec<f64>]) -> Result<(f64, StrategyProfile)> {
        let n = self.marginal1.len();
        let joint1 = pairwise_boost(&self.marginal1, alpha)?;
        let info = InfoStructure::from_joints(
            self.prior,
            self.joint0.clone(),
            joint1,
            SignalSpace::indexed(n),
        )?;
        let game = Game::new(
            info,
            PopulationModel::poisson(self.nbar)?,
            ThresholdModel::deterministic(self.theta_bar),
            self.cost,
        );
        let report = enumerate_equilibria(&game)?;
        Ok((report.s_star, report.canonical_maximal()))
    }

    fn zeros(&self) -> Vec<Vec<f64>> {
        let n = self.marginal1.len();
        vec![vec![0.0; n]; n]
    }

    fn caps(&self) -> Vec<Vec<f64>> {
        let mut table = self.zeros();
        for &(i, j) in &self.pairs {
            let cap = self.marginal1[i] * self.marginal1[j];
            table[i][j] = cap;
            table[j][i] = cap;
        }
        table
    }

    fn random(&self, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table = self.zeros();
        for (pi, &(i, j)) in self.pairs.iter().enumerate() {
            let a = self.grids[pi][rng.gen_range(0..self.grids[pi].len())];
            table[i][j] = a;
            table[j][i] = a;
        }
        table
    }

    fn ascend(&self, start: Vec<Vec<f64>>) -> Result<(Vec<Vec<f64>>, f64, StrategyProfile)> {
        let mut table = start;
        let (mut s, mut profile) = self.evaluate(&table)?;
        for _ in 0..MAX_PASSES {
            let mut improved = false;
            for (pi, &(i, j)) in self.pairs.iter().enumerate() {
                let committed = table[i][j];
                let mut best_a = committed;
                let mut best_s = f64::NEG_INFINITY;
                let mut best_profile = profile;
                for &a in &self.grids[pi] {
                    table[i][j] = a;
                    table[j][i] = a;
                    let (sa, pa) = self.evaluate(&table)?;
                    if sa > best_s + IMPROVEMENT_TOL || best_s == f64::NEG_INFINITY {
                        best_s = sa;
                        best_a = a;
                        best_profile = pa;
                    }
                }
                if best_s > s + IMPROVEMENT_TOL {
                    table[i][j] = best_a;
                    table[j][i] = best_a;
                    s = best_s;
                    profile = best_profile;
                    improved = true;
                } else {
                    table[i][j] = committed;
                    table[j][i] = committed;
                }
            }
            if !improved {
                break;
            }
        }
        Ok((table, s, profile))
    }
}

/// Finds the similarity table maximizing turnout at the best equilibrium,
/// holding the prior, the state-0 joint and the state-1 marginals fixed.
///
/// Under encouragement full correlation is returned directly, and under
/// discouragement independence is returned whenever the best equilibrium
/// there is already certified unique by the mixing condition. Every other
/// case runs the grid ascent.
pub fn optimal_info_search(
    marginal1: &[f64],
    joint0: &Joint<f64>,
    prior: f64,
    nbar: f64,
    theta_bar: usize,
    cost: f64,
    config: &SearchConfig,
) -> Result<OptimalSearchResult> {
    let n = marginal1.len();
    if joint0.n() != n {
        return Err(Error::DomainError(format!(
            "state-0 joint is {}x{} but there are {} state-1 marginals",
            joint0.n(),
            joint0.n(),
            n
        )));
    }
    if !(config.grid_step > 0.0) || !config.grid_step.is_finite() {
        return Err(Error::DomainError(format!(
            "grid step {} must be positive",
            config.grid_step
        )));
    }
    if config.restarts == 0 {
        return Err(Error::DomainError("at least one restart is needed".to_string()));
    }

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let grids: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(i, j)| {
            let cap = marginal1[i] * marginal1[j];
            let mut grid = Vec::new();
            let mut k = 0usize;
            while (k as f64) * config.grid_step < cap - FEASIBILITY_TOL {
                grid.push((k as f64) * config.grid_step);
                k += 1;
            }
            grid.push(cap);
            grid
        })
        .collect();
    let space = SearchSpace {
        prior,
        joint0: joint0.clone(),
        marginal1: marginal1.to_vec(),
        nbar,
        theta_bar,
        cost,
        pairs,
        grids,
    };

    let ci_table = space.zeros();
    let joint_ci = pairwise_boost(marginal1, &ci_table)?;
    let ci_info = InfoStructure::from_joints(
        prior,
        joint0.clone(),
        joint_ci,
        SignalSpace::indexed(n),
    )?;
    let ci_game = Game::new(
        ci_info,
        PopulationModel::poisson(nbar)?,
        ThresholdModel::deterministic(theta_bar),
        cost,
    );
    match ci_game.pivot.environment {
        Environment::Encouragement => {
            let table = space.caps();
            let (s_star, profile) = space.evaluate(&table)?;
            return Ok(OptimalSearchResult {
                alpha: table,
                s_star,
                profile,
            });
        }
        Environment::Discouragement => {
            if check_condition_m(&ci_game)?.holds {
                let (s_star, profile) = space.evaluate(&ci_table)?;
                return Ok(OptimalSearchResult {
                    alpha: ci_table,
                    s_star,
                    profile,
                });
            }
        }
        Environment::KnifeEdge => {}
    }

    let runs: Vec<(Vec<Vec<f64>>, f64, StrategyProfile)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let start = match r {
                0 => space.zeros(),
                1 => space.caps(),
                _ => space.random(config.seed + r as u64),
            };
            space.ascend(start)
        })
        .collect::<Result<_>>()?;

    let mut winner = &runs[0];
    for run in &runs[1..] {
        if run.1 > winner.1 + IMPROVEMENT_TOL {
            winner = run;
        }
    }
    Ok(OptimalSearchResult {
        alpha: winner.0.clone(),
        s_star: winner.1,
        profile: winner.2,
    })
}
