//! Symmetric profiles that mix on exactly one signal.
//!
//! The signal space splits into a pure participation set, a pure abstention
//! set, and one mixing signal whose holders participate with probability
//! beta. With Poisson sizes, thinning keeps every subgroup Poisson, so the
//! mixing signal's indifference condition is a smooth one-dimensional
//! equation in beta and roots can be located by scanning and bisection.

use crate::equilibrium::Constraint;
use crate::error::{Error, Result};
use crate::mask::{self, Mask};
use crate::population::{poisson_pmf, PopulationKind, ThresholdKind};
use crate::scenario::Game;
use crate::signal::State;
use crate::simulate::SimStrategy;

/// A symmetric strategy with one mixing signal: participate on `pure_in`,
/// stay out on `pure_out`, and participate with probability `beta` on
/// `mix_signal`. The three parts partition the signal space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedProfile {
    pub pure_in: Mask,
    pub pure_out: Mask,
    pub mix_signal: usize,
    pub beta: f64,
}

impl MixedProfile {
    pub fn new(
        n: usize,
        pure_in: Mask,
        pure_out: Mask,
        mix_signal: usize,
        beta: f64,
    ) -> Result<Self> {
        check_partition(n, pure_in, pure_out, mix_signal)?;
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::DomainError(format!(
                "mixing probability {beta} is outside [0, 1]"
            )));
        }
        Ok(Self {
            pure_in,
            pure_out,
            mix_signal,
            beta,
        })
    }

    /// Per-signal participation probabilities, identical for both groups.
    pub fn to_sim_strategy(&self, n: usize) -> SimStrategy {
        let mut probs = vec![0.0; n];
        for x in mask::members(self.pure_in) {
            probs[x] = 1.0;
        }
        probs[self.mix_signal] = self.beta;
        SimStrategy::Mixed {
            p1: probs.clone(),
            p2: probs,
        }
    }
}

fn check_partition(n: usize, pure_in: Mask, pure_out: Mask, mix_signal: usize) -> Result<()> {
    if mix_signal >= n {
        return Err(Error::DomainError(format!(
            "mixing signal {mix_signal} is out of range for {n} signals"
        )));
    }
    let star = 1u32 << mix_signal;
    if pure_in & pure_out != 0 || pure_in & star != 0 || pure_out & star != 0 {
        return Err(Error::DomainError(
            "participation, abstention, and mixing sets overlap".to_string(),
        ));
    }
    if pure_in | pure_out | star != mask::full(n) {
        return Err(Error::DomainError(
            "participation, abstention, and mixing sets must cover every signal".to_string(),
        ));
    }
    Ok(())
}

/// Status of one pure signal's constraint at a solved mixing profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcStatus {
    pub signal: usize,
    pub constraint: Constraint,
    /// Participation: posterior-weighted pivotal gain minus cost.
    /// Non-participation: cost minus the deviation gain.
    pub net_gain: f64,
    pub satisfied: bool,
}

/// One root of the mixing signal's indifference condition.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingRoot {
    pub beta: f64,
    /// Value of the indifference equation at the root, on the cost-over-
    /// posterior scale. Bisection leaves this at roundoff size.
    pub residual: f64,
    pub pure_ic: Vec<IcStatus>,
    /// True when every pure signal's constraint also holds, making the
    /// profile a full equilibrium.
    pub is_equilibrium: bool,
}

struct MixingSetup {
    nbar: f64,
    theta: usize,
    j_self: f64,
    j_in: f64,
    j_out: f64,
    rhs: f64,
}

fn setup(game: &Game<f64>, pure_in: Mask, pure_out: Mask, mix_signal: usize) -> Result<Option<MixingSetup>> {
    check_partition(game.n_signals(), pure_in, pure_out, mix_signal)?;
    let nbar = match game.population.kind() {
        PopulationKind::Poisson(mean) => *mean,
        _ => {
            return Err(Error::ModelNotSupported {
                op: "one-signal mixing",
                requirement: "Poisson group sizes",
            })
        }
    };
    let theta = match game.threshold.kind() {
        ThresholdKind::Deterministic(theta) => theta,
        ThresholdKind::Explicit => {
            return Err(Error::ModelNotSupported {
                op: "one-signal mixing",
                requirement: "deterministic resilience",
            })
        }
    };
    if game.info.marginal(State::One)[mix_signal] == 0.0 {
        return Ok(None);
    }
    let star = 1u32 << mix_signal;
    Ok(Some(MixingSetup {
        nbar,
        theta,
        j_self: game.info.conditional_mass(State::One, mix_signal, star)?,
        j_in: game.info.conditional_mass(State::One, mix_signal, pure_in)?,
        j_out: game.info.conditional_mass(State::One, mix_signal, pure_out)?,
        rhs: game.cost / game.info.posterior(mix_signal),
    }))
}

impl MixingSetup {
    fn curve(&self, beta: f64) -> f64 {
        self.j_self * poisson_pmf(self.theta, 2.0 * beta * self.nbar)
            + self.j_in * poisson_pmf(self.theta, (1.0 + beta) * self.nbar)
            + self.j_out * poisson_pmf(self.theta, beta * self.nbar)
            - self.rhs
    }
}

/// The mixing signal's indifference equation at `beta`, on the
/// cost-over-posterior scale: zero exactly at a candidate equilibrium
/// mixing probability.
pub fn mixing_curve(
    game: &Game<f64>,
    pure_in: Mask,
    pure_out: Mask,
    mix_signal: usize,
    beta: f64,
) -> Result<f64> {
    match setup(game, pure_in, pure_out, mix_signal)? {
        Some(s) => Ok(s.curve(beta)),
        None => Err(Error::ZeroMassSignal {
            x: mix_signal,
            state: Some("1"),
        }),
    }
}

const GRID: usize = 10_000;
const BISECT_WIDTH: f64 = 1e-10;

/// Finds every mixing probability in [0, 1] at which the holders of
/// `mix_signal` are exactly indifferent, given pure participation on
/// `pure_in` and pure abstention on `pure_out`. Roots are located by a
/// sign scan on a 10^4-point grid refined by bisection; an empty list
/// means the cost line never meets the pivotal-gain curve. Each root
/// reports the remaining pure signals' constraints, checked against the
/// mixed opponent profile.
pub fn solve_one_signal_mixing(
    game: &Game<f64>,
    pure_in: Mask,
    pure_out: Mask,
    mix_signal: usize,
) -> Result<Vec<MixingRoot>> {
    let s = match setup(game, pure_in, pure_out, mix_signal)? {
        Some(s) => s,
        None => return Ok(Vec::new()),
    };

    let grid_value = |i: usize| i as f64 / GRID as f64;
    let mut roots = Vec::new();
    let mut prev = s.curve(0.0);
    if prev == 0.0 {
        roots.push(0.0);
    }
    for i in 1..=GRID {
        let beta = grid_value(i);
        let here = s.curve(beta);
        if here == 0.0 {
            roots.push(beta);
        } else if prev != 0.0 && prev.signum() != here.signum() {
            let mut lo = grid_value(i - 1);
            let mut hi = beta;
            let mut f_lo = prev;
            while hi - lo > BISECT_WIDTH {
                let mid = 0.5 * (lo + hi);
                let f_mid = s.curve(mid);
                if f_mid == 0.0 {
                    lo = mid;
                    hi = mid;
                } else if f_mid.signum() == f_lo.signum() {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = here;
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < BISECT_WIDTH);

    Ok(roots
        .into_iter()
        .map(|beta| {
            let pure_ic = pure_constraints(game, &s, pure_in, pure_out, mix_signal, beta);
            let is_equilibrium = pure_ic.iter().all(|ic| ic.satisfied);
            MixingRoot {
                beta,
                residual: s.curve(beta),
                pure_ic,
                is_equilibrium,
            }
        })
        .collect())
}

fn pure_constraints(
    game: &Game<f64>,
    s: &MixingSetup,
    pure_in: Mask,
    pure_out: Mask,
    mix_signal: usize,
    beta: f64,
) -> Vec<IcStatus> {
    let star = 1u32 << mix_signal;
    let tol = game.tol;
    let mut out = Vec::new();
    for x in 0..game.n_signals() {
        if x == mix_signal {
            continue;
        }
        let mu = game.info.posterior(x);
        let participating = mask::contains(pure_in, x);
        if game.info.marginal(State::One)[x] == 0.0 {
            // No weight in state 1: participation nets exactly -c, staying
            // out nets 0.
            let (constraint, net_gain) = if participating {
                (Constraint::Participation, -game.cost)
            } else {
                (Constraint::NonParticipation, game.cost)
            };
            out.push(IcStatus {
                signal: x,
                constraint,
                net_gain,
                satisfied: net_gain >= -tol,
            });
            continue;
        }
        let j_in = game.info.conditional_mass(State::One, x, pure_in).expect("positive marginal");
        let j_star = game.info.conditional_mass(State::One, x, star).expect("positive marginal");
        let j_out = game.info.conditional_mass(State::One, x, pure_out).expect("positive marginal");
        let (constraint, net_gain) = if participating {
            let bracket = j_in * poisson_pmf(s.theta, 2.0 * s.nbar)
                + j_star * poisson_pmf(s.theta, (1.0 + beta) * s.nbar)
                + j_out * poisson_pmf(s.theta, s.nbar);
            (Constraint::Participation, mu * bracket - game.cost)
        } else {
            let bracket = j_in * poisson_pmf(s.theta, s.nbar)
                + j_star * poisson_pmf(s.theta, beta * s.nbar)
                + j_out * poisson_pmf(s.theta, 0.0);
            (Constraint::NonParticipation, game.cost - mu * bracket)
        };
        out.push(IcStatus {
            signal: x,
            constraint,
            net_gain,
            satisfied: net_gain >= -tol,
        });
    }
    out
}
