//! Similarity sweeps: reevaluate a game along a grid of transfer masses
//! and summarize how the headline quantities move.
//!
//! Each grid point applies a single transfer of mass `alpha` between one
//! off-diagonal pair of the state-1 joint, always starting from the base
//! game, so the points are themselves ordered by similarity: the joint at
//! a larger alpha is one further transfer beyond the joint at a smaller
//! one. That makes the monotonicity summary meaningful pointwise, not just
//! end to end.

use serde::Serialize;

use crate::equilibrium::{check_condition_m, enumerate_equilibria};
use crate::error::{Error, Result};
use crate::outcomes::{max_success, max_welfare};
use crate::population::Environment;
use crate::scenario::Game;
use crate::signal::{SimilarityTransform, State};

/// One grid point. Numeric fields are absent when the transfer was not
/// feasible at this alpha (the note says why) so a sweep over a range that
/// exits the feasible region still emits every row.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub s_star: Option<f64>,
    pub pi_star: Option<f64>,
    pub welfare_star: Option<f64>,
    pub env: String,
    pub n_equilibria: Option<usize>,
    pub condition_m: Option<bool>,
    pub note: Option<String>,
}

/// Direction a sweep is expected to move in, and what it actually did.
/// `expected` is derived from the environment: encouragement predicts a
/// nondecreasing maximal participation; discouragement predicts a
/// nonincreasing one provided every evaluated grid point satisfies
/// Condition M (each point is the "less similar" side of all later
/// points, so the premise has to hold along the whole path). Otherwise no
/// direction is claimed.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub env: String,
    pub expected: Option<String>,
    pub nondecreasing: bool,
    pub nonincreasing: bool,
    pub consistent: Option<bool>,
}

/// Evenly spaced grid over `[0, max]` with `steps` intervals, endpoints
/// included. `steps = 0` yields the single point 0; a negative or zero
/// `max` yields an empty grid.
pub fn alpha_grid(max: f64, steps: usize) -> Vec<f64> {
    if max <= 0.0 {
        return Vec::new();
    }
    if steps == 0 {
        return vec![0.0];
    }
    (0..=steps)
        .map(|k| max * k as f64 / steps as f64)
        .collect()
}

/// Evaluates the game with a transfer of each `alpha` in turn applied to
/// the `(i, j)` pair of the state-1 joint. Rows where the pair's mass
/// runs out are marked and the sweep continues; any other failure aborts.
pub fn similarity_sweep(
    game: &Game<f64>,
    i: usize,
    j: usize,
    alphas: &[f64],
) -> Result<Vec<SweepRow>> {
    let n = game.n_signals();
    if i >= n || j >= n || i == j {
        return Err(Error::DomainError(format!(
            "transfer pair ({i}, {j}) is not an off-diagonal pair of {n} signals"
        )));
    }
    let env = game.pivot.environment.to_string();
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let info = match game
            .info
            .apply_transform(State::One, &SimilarityTransform::new(i, j, alpha))
        {
            Ok(info) => info,
            Err(err @ Error::NonnegativityViolated { .. }) => {
                rows.push(SweepRow {
                    alpha,
                    s_star: None,
                    pi_star: None,
                    welfare_star: None,
                    env: env.clone(),
                    n_equilibria: None,
                    condition_m: None,
                    note: Some(err.to_string()),
                });
                continue;
            }
            Err(err) => return Err(err),
        };
        let point = game.with_info(info);
        let report = enumerate_equilibria(&point)?;
        let (_, pi) = max_success(&point)?;
        let (_, w) = max_welfare(&point)?;
        let m = check_condition_m(&point)?;
        rows.push(SweepRow {
            alpha,
            s_star: Some(report.s_star),
            pi_star: Some(pi),
            welfare_star: Some(w),
            env: env.clone(),
            n_equilibria: Some(report.equilibria.len()),
            condition_m: Some(m.holds),
            note: None,
        });
    }
    Ok(rows)
}

/// Monotonicity verdict over the evaluated rows, at tolerance 1e-9.
pub fn summarize_sweep(game: &Game<f64>, rows: &[SweepRow]) -> SweepSummary {
    let tol = 1e-9;
    let values: Vec<f64> = rows.iter().filter_map(|r| r.s_star).collect();
    let nondecreasing = values.windows(2).all(|w| w[1] >= w[0] - tol);
    let nonincreasing = values.windows(2).all(|w| w[1] <= w[0] + tol);
    let all_m = !rows.is_empty()
        && rows
            .iter()
            .filter(|r| r.s_star.is_some())
            .all(|r| r.condition_m == Some(true));
    let expected = match game.pivot.environment {
        Environment::Encouragement => Some("nondecreasing".to_string()),
        Environment::Discouragement if all_m => Some("nonincreasing".to_string()),
        _ => None,
    };
    let consistent = expected.as_deref().map(|dir| {
        if dir == "nondecreasing" {
            nondecreasing
        } else {
            nonincreasing
        }
    });
    SweepSummary {
        env: game.pivot.environment.to_string(),
        expected,
        nondecreasing,
        nonincreasing,
        consistent,
    }
}
