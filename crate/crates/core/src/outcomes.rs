//! Success probability, welfare, and informativeness of a strategy profile.
//!
//! With Poisson group sizes and a deterministic resilience, success and
//! welfare of a symmetric profile have closed forms in the state-1 joint
//! masses. Everything else falls back to the seeded simulator and reports a
//! standard error alongside the estimate.

use crate::equilibrium::{enumerate_equilibria, StrategyProfile};
use crate::error::{Error, Result};
use crate::mask::{self, Mask};
use crate::population::{poisson_cdf, PopulationKind, ThresholdKind};
use crate::scalar::Scalar;
use crate::scenario::Game;
use crate::signal::State;
use crate::simulate::{run_trials, SimConfig, SimStrategy};

/// A quantity that either came from a closed form or from Monte Carlo, in
/// which case the standard error of the estimate is attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Closed(f64),
    Simulated { value: f64, se: f64 },
}

impl Outcome {
    pub fn value(&self) -> f64 {
        match self {
            Outcome::Closed(v) => *v,
            Outcome::Simulated { value, .. } => *value,
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, Outcome::Closed(_))
    }
}

fn closed_parameters(game: &Game<f64>) -> Option<(f64, usize)> {
    let nbar = match game.population.kind() {
        PopulationKind::Poisson(mean) => *mean,
        _ => return None,
    };
    match game.threshold.kind() {
        ThresholdKind::Deterministic(theta) => Some((nbar, theta)),
        ThresholdKind::Explicit => None,
    }
}

/// Success probability of the symmetric profile `p` in state 1, in closed
/// form. Needs Poisson sizes and a deterministic resilience.
pub fn closed_success(game: &Game<f64>, p: Mask) -> Result<f64> {
    let (nbar, theta) = closed_parameters(game).ok_or(Error::ModelNotSupported {
        op: "closed-form success probability",
        requirement: "Poisson group sizes and deterministic resilience",
    })?;
    let n = game.n_signals();
    let np = mask::complement(p, n);
    let joint1 = game.info.joint(State::One);
    let both = joint1.mass(p, p);
    let one = joint1.mass(p, np);
    Ok((1.0 - poisson_cdf(theta, 2.0 * nbar)) * both + 2.0 * (1.0 - poisson_cdf(theta, nbar)) * one)
}

fn closed_welfare(game: &Game<f64>, p: Mask) -> Result<f64> {
    let pi = closed_success(game, p)?;
    Ok(game.info.prior() * pi - game.cost * participation_mass(game, p))
}

/// Probability that a group's signal falls in `p` under the unconditional
/// signal distribution, which is also the expected per-agent effort of the
/// symmetric pure profile on `p`.
fn participation_mass(game: &Game<f64>, p: Mask) -> f64 {
    let prior = *game.info.prior();
    prior * game.info.marginal_mass(State::One, p)
        + (1.0 - prior) * game.info.marginal_mass(State::Zero, p)
}

/// State-1 probability of regime change under `sigma`: closed form when the
/// profile is symmetric and the model is Poisson with deterministic
/// resilience, otherwise a seeded Monte Carlo estimate.
pub fn success_probability(game: &Game<f64>, sigma: StrategyProfile) -> Result<Outcome> {
    success_probability_with(game, sigma, &SimConfig::default())
}

pub fn success_probability_with(
    game: &Game<f64>,
    sigma: StrategyProfile,
    cfg: &SimConfig,
) -> Result<Outcome> {
    if sigma.is_symmetric() {
        if let Ok(pi) = closed_success(game, sigma.p1) {
            return Ok(Outcome::Closed(pi));
        }
    }
    let report = run_trials(game, &SimStrategy::pure(sigma), cfg)?;
    Ok(Outcome::Simulated {
        value: report.pi.value,
        se: report.pi.se,
    })
}

/// Ex-ante per-agent welfare of `sigma`: the prior-weighted success payoff
/// net of expected participation cost. Falls back to Monte Carlo exactly
/// when success probability does.
pub fn welfare(game: &Game<f64>, sigma: StrategyProfile) -> Result<Outcome> {
    welfare_with(game, sigma, &SimConfig::default())
}

pub fn welfare_with(game: &Game<f64>, sigma: StrategyProfile, cfg: &SimConfig) -> Result<Outcome> {
    if sigma.is_symmetric() {
        if let Ok(w) = closed_welfare(game, sigma.p1) {
            return Ok(Outcome::Closed(w));
        }
    }
    let report = run_trials(game, &SimStrategy::pure(sigma), cfg)?;
    Ok(Outcome::Simulated {
        value: report.welfare.value,
        se: report.welfare.se,
    })
}

/// Success probability in state 1 given at least one participant. Undefined
/// for the empty profile, where turnout is never positive.
pub fn conditional_success_given_turnout(game: &Game<f64>, sigma: StrategyProfile) -> Result<f64> {
    if !sigma.is_symmetric() {
        return Err(Error::ModelNotSupported {
            op: "conditional success",
            requirement: "a symmetric profile",
        });
    }
    let pi = closed_success(game, sigma.p1)?;
    let n = game.n_signals();
    let np = mask::complement(sigma.p1, n);
    let silent = game.info.joint(State::One).mass(np, np);
    let turnout = 1.0 - silent;
    if turnout <= f64::EPSILON {
        return Err(Error::UndefinedConditional {
            what: "success conditional on turnout: the profile never mobilizes anyone in state 1"
                .to_string(),
        });
    }
    Ok(pi / turnout)
}

fn best_symmetric_equilibrium(
    game: &Game<f64>,
    score: impl Fn(&Game<f64>, Mask) -> Result<f64>,
) -> Result<(StrategyProfile, f64)> {
    let report = enumerate_equilibria(game)?;
    let mut best: Option<(StrategyProfile, f64)> = None;
    for eq in &report.equilibria {
        if !eq.is_symmetric() {
            continue;
        }
        let v = score(game, eq.p1)?;
        let better = match &best {
            None => true,
            Some((cur, cur_v)) => v > *cur_v || (v == *cur_v && eq.p1 < cur.p1),
        };
        if better {
            best = Some((*eq, v));
        }
    }
    best.ok_or(Error::DomainError(
        "no symmetric equilibrium found, yet staying out is always one".to_string(),
    ))
}

/// Highest closed-form success probability over the symmetric equilibria,
/// with the profile that attains it (smallest mask on ties).
pub fn max_success(game: &Game<f64>) -> Result<(StrategyProfile, f64)> {
    best_symmetric_equilibrium(game, closed_success)
}

/// Highest closed-form welfare over the symmetric equilibria.
pub fn max_welfare(game: &Game<f64>) -> Result<(StrategyProfile, f64)> {
    best_symmetric_equilibrium(game, closed_welfare)
}

/// How much observing "signal in `p`" separates the states:
/// `m1(p) - m0(p)`.
pub fn informativeness<S: Scalar>(game: &Game<S>, p: Mask) -> S {
    game.info.marginal_mass(State::One, p) - game.info.marginal_mass(State::Zero, p)
}

/// The set maximizing informativeness: signals whose state-1 marginal
/// strictly exceeds their state-0 marginal.
pub fn most_informative_set<S: Scalar>(game: &Game<S>) -> Mask {
    let mut p = mask::EMPTY;
    for x in 0..game.n_signals() {
        if game.info.marginal(State::One)[x] > game.info.marginal(State::Zero)[x] {
            p |= 1 << x;
        }
    }
    p
}

/// Change in closed-form success per unit of similarity mass placed on a
/// participation set: `2 Psi(theta, nbar) - Psi(theta, 2 nbar) - 1`.
/// Positive means concentrating information raises success for a fixed
/// profile. The sign is positive everywhere in encouragement and stays
/// positive a little past the boundary; it only turns negative deeper into
/// discouragement.
pub fn success_shift_factor(theta_bar: usize, nbar: f64) -> f64 {
    2.0 * poisson_cdf(theta_bar, nbar) - poisson_cdf(theta_bar, 2.0 * nbar) - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MPrimeWitness {
    pub profile: Mask,
    pub signal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionMPrimeReport {
    pub holds: bool,
    /// Best success probability over the symmetric equilibria.
    pub pi_bar: f64,
    /// For each symmetric profile beating `pi_bar`, a signal whose
    /// participation constraint fails strictly.
    pub witnesses: Vec<MPrimeWitness>,
    pub unwitnessed: Vec<Mask>,
}

/// Checks that every symmetric profile with higher success than the best
/// symmetric equilibrium contains a signal strictly unwilling to
/// participate. Profiles out of equilibrium for other reasons do not count.
pub fn check_condition_m_prime(game: &Game<f64>) -> Result<ConditionMPrimeReport> {
    let (_, pi_bar) = max_success(game)?;
    let n = game.n_signals();
    let lambda2 = game.pivot.lambda2;
    let lambda1 = game.pivot.lambda1;
    let mut witnesses = Vec::new();
    let mut unwitnessed = Vec::new();
    for p in mask::subsets(n) {
        let pi = closed_success(game, p)?;
        if pi <= pi_bar + game.tol {
            continue;
        }
        let mut witness = None;
        for x in mask::members(p) {
            let mu = game.info.posterior(x);
            if *mu == 0.0 {
                witness = Some(x);
                break;
            }
            let in_p = game.info.conditional_mass(State::One, x, p)?;
            let bracket = in_p * lambda2 + (1.0 - in_p) * lambda1;
            if bracket < game.cost / mu - game.tol {
                witness = Some(x);
                break;
            }
        }
        match witness {
            Some(x) => witnesses.push(MPrimeWitness { profile: p, signal: x }),
            None => unwitnessed.push(p),
        }
    }
    Ok(ConditionMPrimeReport {
        holds: unwitnessed.is_empty(),
        pi_bar,
        witnesses,
        unwitnessed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::PopulationModel;
    use crate::population::ThresholdModel;
    use crate::scenario::presets;
    use crate::signal::{make_ci, InfoStructure, SignalSpace};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn closed_forms_match_the_standing_scenarios() {
        let cases = [
            (presets::b4_ci(), 0b100u32, 0.23642547, 0.11596273, Some(0.33896124)),
            (presets::b4_eti(), 0b110, 0.57776036, 0.28370518, Some(0.61958216)),
            (
                presets::encouragement(),
                0b111,
                0.11218497271797234,
                0.04609248635898617,
                Some(0.11218497271797234),
            ),
        ];
        for (game, p, pi, w, cond) in cases {
            let sigma = StrategyProfile::symmetric(p);
            let got_pi = success_probability(&game, sigma).unwrap();
            assert!(got_pi.is_closed());
            assert_abs_diff_eq!(got_pi.value(), pi, epsilon = 1e-7);
            let got_w = welfare(&game, sigma).unwrap();
            assert!(got_w.is_closed());
            assert_abs_diff_eq!(got_w.value(), w, epsilon = 1e-7);
            if let Some(cond) = cond {
                let got = conditional_success_given_turnout(&game, sigma).unwrap();
                assert_abs_diff_eq!(got, cond, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn empty_profile_has_no_conditional_success() {
        let game = presets::b4_ci();
        let err = conditional_success_given_turnout(&game, StrategyProfile::new(0, 0)).unwrap_err();
        assert!(matches!(err, Error::UndefinedConditional { .. }));
    }

    #[test]
    fn similarity_shifts_success_by_alpha_times_the_factor() {
        let ci = presets::b4_ci();
        let eti = presets::b4_eti();
        let factor = success_shift_factor(20, 15.0);
        for p in mask::subsets(3) {
            let before = closed_success(&ci, p).unwrap();
            let after = closed_success(&eti, p).unwrap();
            let alpha_p = eti.info.joint(State::One).mass(p, p) - ci.info.joint(State::One).mass(p, p);
            assert_abs_diff_eq!(after - before, alpha_p * factor, epsilon = 1e-12);
        }
    }

    #[test]
    fn shift_factor_matches_reference_values_and_crosses_inside_discouragement() {
        let table = [
            (10usize, 7.0, 0.627277),
            (10, 8.0, 0.554376),
            (10, 9.0, 0.381610),
            (10, 12.0, -0.306626),
            (20, 15.0, 0.798774),
            (20, 14.0, 0.831442),
            (20, 17.0, 0.604210),
        ];
        for (theta, nbar, want) in table {
            assert_abs_diff_eq!(success_shift_factor(theta, nbar), want, epsilon = 1e-6);
        }
        // theta = 10 < nstar(7) ~ 10.1: discouragement, yet the factor is
        // still positive. Concentration can raise success slightly past the
        // environment boundary.
        assert!(10.0 < crate::population::poisson_nstar(7.0));
        assert!(success_shift_factor(10, 7.0) > 0.0);
    }

    #[test]
    fn best_equilibrium_success_tracks_the_similarity_transform() {
        let (p_ci, pi_ci) = max_success(&presets::b4_ci()).unwrap();
        assert_eq!(p_ci.p1, 0b100);
        assert_abs_diff_eq!(pi_ci, 0.23642547, epsilon = 1e-7);
        let (p_eti, pi_eti) = max_success(&presets::b4_eti()).unwrap();
        assert_eq!(p_eti.p1, 0b110);
        assert_abs_diff_eq!(pi_eti, 0.57776036, epsilon = 1e-7);

        let (w_profile, w) = max_welfare(&presets::b4_eti()).unwrap();
        assert_eq!(w_profile.p1, 0b110);
        assert_abs_diff_eq!(w, 0.28370518, epsilon = 1e-7);
    }

    #[test]
    fn asymmetric_profiles_are_simulated_and_agree_with_the_direct_sum() {
        let game = presets::b4_eti();
        let sigma = StrategyProfile::new(0b100, 0b110);
        let joint1 = game.info.joint(State::One);
        let nbar = game.nbar();
        let np1 = mask::complement(sigma.p1, 3);
        let np2 = mask::complement(sigma.p2, 3);
        let expected = (1.0 - poisson_cdf(20, 2.0 * nbar)) * joint1.mass(sigma.p1, sigma.p2)
            + (1.0 - poisson_cdf(20, nbar))
                * (joint1.mass(sigma.p1, np2) + joint1.mass(np1, sigma.p2));

        let got = success_probability(&game, sigma).unwrap();
        match got {
            Outcome::Simulated { value, se } => {
                assert!((value - expected).abs() <= 4.0 * se, "{value} vs {expected}");
            }
            Outcome::Closed(_) => panic!("asymmetric profile should simulate"),
        }

        let w = welfare(&game, sigma).unwrap();
        match w {
            Outcome::Simulated { value, se } => {
                assert!(se > 0.0);
                assert!(value <= game.info.prior() + 4.0 * se);
            }
            Outcome::Closed(_) => panic!("asymmetric profile should simulate"),
        }
    }

    #[test]
    fn condition_m_prime_fails_before_and_holds_after_the_transform() {
        let before = check_condition_m_prime(&presets::b4_ci()).unwrap();
        assert!(!before.holds);
        assert_eq!(before.unwitnessed, vec![0b110]);
        let witnessed: Vec<Mask> = before.witnesses.iter().map(|w| w.profile).collect();
        assert_eq!(witnessed, vec![0b011, 0b101, 0b111]);

        let after = check_condition_m_prime(&presets::b4_eti()).unwrap();
        assert!(after.holds);
        assert_eq!(after.witnesses, vec![MPrimeWitness { profile: 0b111, signal: 0 }]);
    }

    #[test]
    fn informativeness_peaks_at_the_likelihood_ratio_set() {
        let space = SignalSpace::indexed(2);
        let j1 = make_ci::<f64>(&[0.19, 0.81]).unwrap();
        let j0 = make_ci::<f64>(&[0.70, 0.30]).unwrap();
        let info = InfoStructure::from_joints(0.7, j0, j1, space).unwrap();
        let game = Game::new(
            info,
            PopulationModel::poisson(20.0).unwrap(),
            ThresholdModel::deterministic(28),
            0.0368,
        );
        let p_bar = most_informative_set(&game);
        assert_eq!(p_bar, 0b10);
        assert_abs_diff_eq!(informativeness(&game, p_bar), 0.51, epsilon = 1e-12);
        for p in mask::subsets(2) {
            assert!(informativeness(&game, p) <= 0.51 + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn closed_outcomes_stay_in_range(
            w1 in prop::array::uniform3(0.05f64..1.0),
            w0 in prop::array::uniform3(0.05f64..1.0),
            prior in 0.1f64..0.9,
            nbar in 5.0f64..25.0,
            theta in 3usize..45,
            cost in 0.001f64..0.5,
        ) {
            let norm = |w: [f64; 3]| {
                let s: f64 = w.iter().sum();
                [w[0] / s, w[1] / s, w[2] / s]
            };
            let m1 = norm(w1);
            let m0 = norm(w0);
            let space = SignalSpace::indexed(3);
            let j1 = make_ci::<f64>(&m1).unwrap();
            let j0 = make_ci::<f64>(&m0).unwrap();
            let info = match InfoStructure::from_joints(prior, j0, j1, space) {
                Ok(info) => info,
                Err(_) => return Ok(()),
            };
            let game = Game::new(
                info,
                PopulationModel::poisson(nbar).unwrap(),
                ThresholdModel::deterministic(theta),
                cost,
            );
            for p in mask::subsets(3) {
                let pi = closed_success(&game, p).unwrap();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&pi));
                let w = closed_welfare(&game, p).unwrap();
                prop_assert!(w <= prior + 1e-12);
                let i = informativeness(&game, p);
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&i));
            }
        }
    }
}
