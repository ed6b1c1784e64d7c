//! Participation when the regime may be worth keeping.
//!
//! The base game treats the low state as inert: a participant pays the cost
//! and nothing more can happen. Here the second state is a regime the
//! players positively value, so a push that reaches the threshold by
//! mistake destroys something. Every incentive constraint nets the pivotal
//! upside in the plus state against the pivotal damage in the minus state,
//! weighted by the posterior that the push is worth joining.
//!
//! Internally a scenario is an ordinary [`Game`] whose state-0 joint holds
//! the minus-state signal law. As the prior mass on the minus state
//! vanishes, every constraint here collapses to the base engine's.

use crate::equilibrium::MAX_ENUM_SIGNALS;
use crate::error::{Error, Result};
use crate::mask::{self, Mask};
use crate::population::{PopulationModel, ThresholdModel};
use crate::scenario::Game;
use crate::signal::{InfoStructure, Joint, SignalSpace, State};

/// Two-state game in which a successful push is a loss when the state is
/// against it.
#[derive(Debug, Clone)]
pub struct SignedStateScenario {
    game: Game<f64>,
}

impl SignedStateScenario {
    pub fn new(
        prior: f64,
        joint_plus: Joint<f64>,
        joint_minus: Joint<f64>,
        population: PopulationModel<f64>,
        threshold: ThresholdModel<f64>,
        cost: f64,
    ) -> Result<Self> {
        let n = joint_plus.n();
        let info =
            InfoStructure::from_joints(prior, joint_minus, joint_plus, SignalSpace::indexed(n))?;
        Ok(Self {
            game: Game::new(info, population, threshold, cost),
        })
    }

    /// Reinterprets an existing game, reading its state-0 joint as the
    /// minus-state law rather than an inert background.
    pub fn from_game(game: Game<f64>) -> Self {
        Self { game }
    }

    pub fn game(&self) -> &Game<f64> {
        &self.game
    }

    pub fn n_signals(&self) -> usize {
        self.game.n_signals()
    }

    /// Conditional co-participation mass, zero when the state gives the
    /// signal no mass at all.
    fn cond_or_zero(&self, state: State, x: usize, t: Mask) -> f64 {
        self.game.info.conditional_mass(state, x, t).unwrap_or(0.0)
    }
}

/// Net payoff at signal `x` from participating against the symmetric
/// profile `p`, pricing both states.
///
/// When `x` lies in `p` the player moves with their own group, so the
/// within-group pivot channels apply in both states; otherwise joining
/// alone leaves only the outside channel.
pub fn signed_net_gain(scn: &SignedStateScenario, x: usize, p: Mask) -> f64 {
    let g = scn.game();
    let mu = *g.info.posterior(x);
    let jp = scn.cond_or_zero(State::One, x, p);
    let jm = scn.cond_or_zero(State::Zero, x, p);
    let piv = &g.pivot;
    let value = if mask::contains(p, x) {
        mu * (jp * piv.lambda2 + (1.0 - jp) * piv.lambda1)
            - (1.0 - mu) * (jm * piv.lambda2 + (1.0 - jm) * piv.lambda1)
    } else {
        mu * jp * piv.lambda_o - (1.0 - mu) * jm * piv.lambda_o
    };
    value - g.cost
}

/// Is the symmetric profile `p` an equilibrium of the signed-stakes game?
pub fn state_dependent_equilibrium(scn: &SignedStateScenario, p: Mask) -> bool {
    let g = scn.game();
    for x in 0..g.n_signals() {
        let gain = signed_net_gain(scn, x, p);
        let ok = if mask::contains(p, x) {
            gain >= -g.tol
        } else {
            gain <= g.tol
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Expected plus-state turnout of the symmetric profile `p`, both groups.
pub fn signed_turnout(scn: &SignedStateScenario, p: Mask) -> f64 {
    2.0 * scn.game.nbar() * scn.game.info.marginal_mass(State::One, p)
}

#[derive(Debug, Clone)]
pub struct SignedReport {
    /// Symmetric equilibria in ascending mask order.
    pub equilibria: Vec<Mask>,
    /// First profile attaining the largest plus-state turnout.
    pub maximal: Mask,
    pub s_star: f64,
}

/// Enumerates symmetric equilibria and ranks them by plus-state turnout.
pub fn signed_maximal(scn: &SignedStateScenario) -> Result<SignedReport> {
    let n = scn.n_signals();
    if n > MAX_ENUM_SIGNALS {
        return Err(Error::SizeCapExceeded {
            what: "signed-state enumeration",
            got: n,
            cap: MAX_ENUM_SIGNALS,
        });
    }
    let mut equilibria = Vec::new();
    let mut maximal = mask::EMPTY;
    let mut s_star = 0.0;
    for p in mask::subsets(n) {
        if !state_dependent_equilibrium(scn, p) {
            continue;
        }
        let s = signed_turnout(scn, p);
        if s > s_star + scn.game.tol {
            s_star = s;
            maximal = p;
        }
        equilibria.push(p);
    }
    Ok(SignedReport {
        equilibria,
        maximal,
        s_star,
    })
}

/// Checks that excluded signals stay out for lack of outside-pivot gains:
/// at every profile whose turnout weakly beats the maximal equilibrium's,
/// each signal off the profile earns strictly less than the cost from the
/// outside channel. The turnout comparison under more similar minus-state
/// information is only claimed under this condition.
pub fn assumption_no_np_violation(scn: &SignedStateScenario) -> Result<bool> {
    let g = scn.game();
    let n = scn.n_signals();
    let report = signed_maximal(scn)?;
    for q in mask::subsets(n) {
        if signed_turnout(scn, q) < report.s_star - g.tol {
            continue;
        }
        for x in 0..n {
            if mask::contains(q, x) {
                continue;
            }
            let mu = *g.info.posterior(x);
            let jp = scn.cond_or_zero(State::One, x, q);
            if mu * jp * g.pivot.lambda_o >= g.cost - g.tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
