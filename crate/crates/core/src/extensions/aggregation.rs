//! A policymaker who reads turnout before deciding whether to concede.
//!
//! Total participation is informative about the state because participants
//! condition on their signals. A threshold-k concession rule is consistent
//! when the belief that the push is justified, given turnout k, clears the
//! policymaker's cutoff exactly at k. Whether any such pair of cutoff
//! strategies exists depends on how similar the participants' information
//! is: independent signals talk through their marginals alone, while
//! correlated signals make large turnout spikes much more telling.
//!
//! Beliefs are manipulated in odds form throughout and only converted to
//! probabilities at the API boundary; the policymaker's cutoff is stated as
//! a probability.

use crate::equilibrium::{
    equilibrium_violation, is_equilibrium, Constraint, StrategyProfile, MAX_ENUM_SIGNALS,
};
use crate::error::{Error, Result};
use crate::mask::{self, Mask};
use crate::outcomes::{informativeness, most_informative_set};
use crate::population::{poisson_pmf, ThresholdModel};
use crate::scenario::Game;
use crate::signal::{make_ci, InfoStructure, Joint, State};

const ALPHA_GRID_STEP: f64 = 1e-3;
const LIMIT_MARGIN: f64 = 1e-9;
const BOUND_TOL: f64 = 1e-12;

/// Cutoff policymaker: concedes when the posterior that the push is
/// justified reaches `belief_cutoff`.
#[derive(Debug, Clone)]
pub struct PolicymakerModel {
    /// Probability-scale belief cutoff, strictly inside (0, 1).
    pub belief_cutoff: f64,
    /// Mean size of each group's crowd.
    pub nbar: f64,
    /// Largest turnout considered when hunting for a belief crossing.
    pub max_turnout: usize,
}

impl PolicymakerModel {
    pub fn new(belief_cutoff: f64, nbar: f64) -> Result<Self> {
        if !belief_cutoff.is_finite() || !(belief_cutoff > 0.0) || !(belief_cutoff < 1.0) {
            return Err(Error::DomainError(format!(
                "belief cutoff {belief_cutoff} must lie strictly between 0 and 1"
            )));
        }
        if !nbar.is_finite() || !(nbar > 0.0) {
            return Err(Error::DomainError(format!(
                "mean group size {nbar} must be positive"
            )));
        }
        Ok(Self {
            belief_cutoff,
            nbar,
            max_turnout: default_turnout_cap(nbar),
        })
    }

    pub fn with_max_turnout(mut self, cap: usize) -> Self {
        self.max_turnout = cap;
        self
    }

    pub fn cutoff_odds(&self) -> f64 {
        self.belief_cutoff / (1.0 - self.belief_cutoff)
    }
}

fn default_turnout_cap(nbar: f64) -> usize {
    (20.0 * nbar) as usize + 400
}

/// Belief odds after turnout `k`, for Poisson crowds of mean `nbar` and a
/// symmetric profile with state masses (`m1p`, `m0p`) and co-occurrence
/// masses (`j1pp`, `j0pp`).
///
/// The likelihood of turnout k under state s is proportional to
/// `m^s(P) + J^s(P,P)(t_k - 1)` with `t_k = e^{-nbar} 2^{k-1}`; for large k
/// the shared factor is pulled out to stay inside floating-point range.
fn belief_odds_raw(
    o: f64,
    m1p: f64,
    m0p: f64,
    j1pp: f64,
    j0pp: f64,
    nbar: f64,
    k: usize,
) -> f64 {
    let loge = (k as f64 - 1.0) * std::f64::consts::LN_2 - nbar;
    let (num, den) = if loge > 500.0 {
        let s = (-loge).exp();
        (m1p * s + j1pp * (1.0 - s), m0p * s + j0pp * (1.0 - s))
    } else {
        let t = loge.exp();
        (m1p + j1pp * (t - 1.0), m0p + j0pp * (t - 1.0))
    };
    if den <= 0.0 {
        return f64::INFINITY;
    }
    o * num / den
}

struct ProfileMasses {
    o: f64,
    m1p: f64,
    m0p: f64,
    j1pp: f64,
    j0pp: f64,
}

impl ProfileMasses {
    fn of(info: &InfoStructure<f64>, p: Mask) -> Self {
        let prior = *info.prior();
        Self {
            o: prior / (1.0 - prior),
            m1p: info.marginal_mass(State::One, p),
            m0p: info.marginal_mass(State::Zero, p),
            j1pp: info.joint(State::One).mass(p, p),
            j0pp: info.joint(State::Zero).mass(p, p),
        }
    }

    fn odds(&self, nbar: f64, k: usize) -> f64 {
        belief_odds_raw(self.o, self.m1p, self.m0p, self.j1pp, self.j0pp, nbar, k)
    }

    fn crossing(&self, nbar: f64, lambda: f64, cap: usize) -> Option<usize> {
        (0..=cap).find(|&k| self.odds(nbar, k) >= lambda)
    }
}

/// Policymaker's posterior that the push is justified after seeing total
/// turnout `k`, when play follows the symmetric profile `p`.
pub fn policymaker_belief(pm: &PolicymakerModel, game: &Game<f64>, p: Mask, k: usize) -> f64 {
    let odds = ProfileMasses::of(&game.info, p).odds(pm.nbar, k);
    if odds.is_infinite() {
        1.0
    } else {
        odds / (1.0 + odds)
    }
}

/// Large-turnout limit of the belief, in odds: the co-occurrence likelihood
/// ratio takes over once crowds of this size only happen when both groups
/// are in.
pub fn belief_limit_odds(game: &Game<f64>, p: Mask) -> f64 {
    let m = ProfileMasses::of(&game.info, p);
    if m.j0pp <= 0.0 {
        f64::INFINITY
    } else {
        m.o * m.j1pp / m.j0pp
    }
}

/// Odds window `(l_low, l_high)` for cutoffs the informative profile can
/// serve: below `l_low` independent signals already convince the
/// policymaker in the large-turnout limit, and no similarity level in the
/// admissible family pushes the limit to `l_high` or beyond.
pub fn aggregation_bounds(game: &Game<f64>) -> Result<(f64, f64)> {
    let p_bar = most_informative_set(game);
    bounds_at(game, p_bar)
}

fn bounds_at(game: &Game<f64>, p_bar: Mask) -> Result<(f64, f64)> {
    if p_bar == mask::EMPTY {
        return Err(Error::PremiseFailed(
            "no signal is more likely when the push is justified".to_string(),
        ));
    }
    let m = ProfileMasses::of(&game.info, p_bar);
    if m.j0pp <= 0.0 {
        return Err(Error::PremiseFailed(
            "state-0 co-occurrence mass on the informative set vanishes".to_string(),
        ));
    }
    if m.m0p <= 0.0 {
        return Err(Error::PremiseFailed(
            "the informative set has no state-0 mass".to_string(),
        ));
    }
    if m.m1p * m.m0p <= m.j0pp {
        return Err(Error::PremiseFailed(format!(
            "m1(P)*m0(P) = {:.6} does not exceed the state-0 co-occurrence mass {:.6}",
            m.m1p * m.m0p,
            m.j0pp
        )));
    }
    Ok((m.o * m.m1p * m.m1p / m.j0pp, m.o * m.m1p / m.j0pp))
}

/// State-1 joint that moves mass `alpha` onto the diagonal blocks of
/// `p_bar` and its complement, spread across signal pairs in proportion to
/// their independent mass. Marginals are preserved; the co-occurrence mass
/// on `p_bar` rises by exactly `alpha`.
pub fn similarity_boost_joint(
    marginal1: &[f64],
    p_bar: Mask,
    alpha: f64,
) -> Result<Joint<f64>> {
    let n = marginal1.len();
    let m_in: f64 = mask::members(p_bar).filter(|&x| x < n).map(|x| marginal1[x]).sum();
    let m_out = 1.0 - m_in;
    let cap = m_in * m_out;
    if alpha < 0.0 {
        return Err(Error::DomainError(format!(
            "similarity mass {alpha} must be nonnegative"
        )));
    }
    if alpha > cap + BOUND_TOL {
        return Err(Error::DomainError(format!(
            "similarity mass {alpha} exceeds the feasible maximum {cap}"
        )));
    }
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| marginal1[i] * marginal1[j]).collect())
        .collect();
    if alpha > 0.0 {
        for x in mask::members(p_bar).filter(|&x| x < n) {
            for y in (0..n).filter(|&y| !mask::contains(p_bar, y)) {
                let d = alpha * marginal1[x] * marginal1[y] / cap;
                rows[x][y] -= d;
                rows[y][x] -= d;
                rows[x][x] += d;
                rows[y][y] += d;
            }
        }
    }
    Joint::from_rows(rows, "similarity-boosted joint")
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationCertificate {
    /// Co-occurrence mass added to the informative set.
    pub alpha: f64,
    /// Participation cost the certified profile supports.
    pub cost: f64,
    /// Turnout cutoff at which the policymaker's belief crosses.
    pub k_star: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggregationVerdict {
    /// Independent signals already aggregate; `cost_supported` reports
    /// whether the profile is an equilibrium at the caller's cost with the
    /// crossing used as the resilience threshold.
    AggregatesUnderCi { k_star: usize, cost_supported: bool },
    /// Independence falls short but added similarity certifies a cutoff
    /// equilibrium pair.
    AchievableWithSimilarity(AggregationCertificate),
    /// The cutoff lies at or beyond the large-turnout limit of every
    /// admissible structure.
    NoAggregationForAnyCad,
}

#[derive(Debug, Clone)]
pub struct AggregationReport {
    pub p_bar: Mask,
    pub l_low: f64,
    pub l_high: f64,
    pub cutoff_odds: f64,
    pub verdict: AggregationVerdict,
}

/// Can turnout persuade a cutoff policymaker with this belief cutoff, and
/// what information structure does it take?
pub fn check_aggregation(
    game: &Game<f64>,
    beta_cutoff: f64,
    cost: f64,
) -> Result<AggregationReport> {
    if !beta_cutoff.is_finite() || !(beta_cutoff > 0.0) || !(beta_cutoff < 1.0) {
        return Err(Error::DomainError(format!(
            "belief cutoff {beta_cutoff} must lie strictly between 0 and 1"
        )));
    }
    let p_bar = most_informative_set(game);
    let (l_low, l_high) = bounds_at(game, p_bar)?;
    let lambda = beta_cutoff / (1.0 - beta_cutoff);
    let nbar = game.nbar();
    let cap = default_turnout_cap(nbar);

    if lambda >= l_high - BOUND_TOL {
        return Ok(AggregationReport {
            p_bar,
            l_low,
            l_high,
            cutoff_odds: lambda,
            verdict: AggregationVerdict::NoAggregationForAnyCad,
        });
    }

    let marginal1 = game.info.marginal(State::One).to_vec();
    if lambda < l_low - BOUND_TOL {
        let ci_joint = make_ci(&marginal1)?;
        let ci_info = InfoStructure::from_joints(
            *game.info.prior(),
            game.info.joint(State::Zero).clone(),
            ci_joint,
            game.info.space().clone(),
        )?;
        if let Some(k_star) = ProfileMasses::of(&ci_info, p_bar).crossing(nbar, lambda, cap) {
            let check = Game::new(
                ci_info,
                game.population.clone(),
                ThresholdModel::deterministic(k_star),
                cost,
            );
            let supported = is_equilibrium(&check, StrategyProfile::symmetric(p_bar));
            return Ok(AggregationReport {
                p_bar,
                l_low,
                l_high,
                cutoff_odds: lambda,
                verdict: AggregationVerdict::AggregatesUnderCi {
                    k_star,
                    cost_supported: supported,
                },
            });
        }
    }

    let certificate = certificate_search(game, p_bar, &marginal1, lambda, cap)?;
    Ok(AggregationReport {
        p_bar,
        l_low,
        l_high,
        cutoff_odds: lambda,
        verdict: AggregationVerdict::AchievableWithSimilarity(certificate),
    })
}

/// Walks the similarity grid upward until the belief limit clears the
/// cutoff with room to spare, the crossing lands beyond any turnout that a
/// single group could plausibly produce, and the engine confirms the
/// profile at a cost inside the incentive window.
fn certificate_search(
    game: &Game<f64>,
    p_bar: Mask,
    marginal1: &[f64],
    lambda: f64,
    cap: usize,
) -> Result<AggregationCertificate> {
    let info = &game.info;
    let nbar = game.nbar();
    let base = ProfileMasses::of(info, p_bar);
    let m_in = base.m1p;
    let alpha_cap = m_in * (1.0 - m_in);
    let mut i = 1usize;
    while (i as f64) * ALPHA_GRID_STEP < alpha_cap - BOUND_TOL {
        let alpha = (i as f64) * ALPHA_GRID_STEP;
        i += 1;
        let j1pp = m_in * m_in + alpha;
        let limit = base.o * j1pp / base.j0pp;
        if limit <= lambda + LIMIT_MARGIN {
            continue;
        }
        let boosted = ProfileMasses {
            j1pp,
            ..ProfileMasses::of(info, p_bar)
        };
        let Some(k_star) = boosted.crossing(nbar, lambda, cap) else {
            continue;
        };
        if k_star as f64 <= 2.0 * nbar {
            continue;
        }
        let joint = similarity_boost_joint(marginal1, p_bar, alpha)?;
        let psi1 = poisson_pmf(k_star, nbar);
        let psi2 = poisson_pmf(k_star, 2.0 * nbar);
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        for x in 0..marginal1.len() {
            if marginal1[x] <= 0.0 {
                continue;
            }
            let j1x = joint.conditional(x, p_bar)?;
            let mu = *info.posterior(x);
            if mask::contains(p_bar, x) {
                hi = hi.min(mu * (j1x * psi2 + (1.0 - j1x) * psi1));
            } else {
                lo = lo.max(mu * j1x * psi1);
            }
        }
        if !(hi > lo) {
            continue;
        }
        let cert_cost = if lo > 0.0 { (lo * hi).sqrt() } else { hi / 2.0 };
        let check = Game::new(
            InfoStructure::from_joints(
                *info.prior(),
                info.joint(State::Zero).clone(),
                joint,
                info.space().clone(),
            )?,
            game.population.clone(),
            ThresholdModel::deterministic(k_star),
            cert_cost,
        );
        if is_equilibrium(&check, StrategyProfile::symmetric(p_bar)) {
            return Ok(AggregationCertificate {
                alpha,
                cost: cert_cost,
                k_star,
            });
        }
    }
    Err(Error::PremiseFailed(
        "no similarity level on the grid certifies the cutoff".to_string(),
    ))
}

/// How the comparison between two belief crossings can come out.
#[derive(Debug, Clone, PartialEq)]
pub enum InfoBranch {
    /// The crossing sits where doubling the crowd more than doubles the
    /// pivot odds; maximal turnout informativeness survives any similarity
    /// gap up to `alpha_bound`.
    PreservedIfSmall {
        alpha_bound: f64,
        max_gap: f64,
        within_bound: bool,
    },
    /// Doubling the crowd dampens the pivot odds at the crossing, so more
    /// similarity can genuinely cost informativeness.
    PossiblyLower,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrokenIc {
    pub signal: usize,
    /// Pivotal value the constraint compares against the cost.
    pub lhs: f64,
    pub required: f64,
    pub constraint: Constraint,
}

#[derive(Debug, Clone)]
pub struct InformativenessReport {
    pub p_bar: Mask,
    pub theta_star_jhat: Option<usize>,
    pub theta_star_j: Option<usize>,
    pub informative_profile_equilibrium_jhat: bool,
    pub informative_profile_equilibrium_j: bool,
    pub broken_ic_jhat: Option<BrokenIc>,
    pub broken_ic_j: Option<BrokenIc>,
    /// Best turnout informativeness over policymaker-consistent equilibria.
    pub i_star_jhat: f64,
    pub i_star_j: f64,
    pub branch: InfoBranch,
}

/// Compares turnout informativeness across two structures that differ only
/// by added state-1 similarity.
pub fn informativeness_comparison(
    j: &Game<f64>,
    jhat: &Game<f64>,
    beta_cutoff: f64,
) -> Result<InformativenessReport> {
    if !beta_cutoff.is_finite() || !(beta_cutoff > 0.0) || !(beta_cutoff < 1.0) {
        return Err(Error::DomainError(format!(
            "belief cutoff {beta_cutoff} must lie strictly between 0 and 1"
        )));
    }
    let n = j.n_signals();
    if n != jhat.n_signals() {
        return Err(Error::DomainError(
            "the structures live on different signal spaces".to_string(),
        ));
    }
    if n > MAX_ENUM_SIGNALS {
        return Err(Error::SizeCapExceeded {
            what: "informativeness comparison",
            got: n,
            cap: MAX_ENUM_SIGNALS,
        });
    }
    if (j.info.prior() - jhat.info.prior()).abs() > BOUND_TOL {
        return Err(Error::DomainError("priors differ".to_string()));
    }
    if (j.nbar() - jhat.nbar()).abs() > BOUND_TOL {
        return Err(Error::DomainError("mean group sizes differ".to_string()));
    }
    if (j.cost - jhat.cost).abs() > BOUND_TOL {
        return Err(Error::DomainError("participation costs differ".to_string()));
    }
    let j0 = j.info.joint(State::Zero);
    let j0_hat = jhat.info.joint(State::Zero);
    for a in 0..n {
        for b in 0..n {
            if (j0.entry(a, b) - j0_hat.entry(a, b)).abs() > BOUND_TOL {
                return Err(Error::DomainError(format!(
                    "state-0 joints differ at ({a},{b})"
                )));
            }
        }
    }
    let ordered = match crate::signal::is_cad_geq(
        j.info.joint(State::One),
        jhat.info.joint(State::One),
        &j.tol,
    ) {
        Ok(v) => v,
        Err(Error::MarginalMismatch { x, left, right }) => {
            return Err(Error::NotCadComparable(format!(
                "state-1 marginals differ at signal {x}: {left} vs {right}"
            )))
        }
        Err(e) => return Err(e),
    };
    if !ordered {
        return Err(Error::NotCadComparable(
            "the state-1 joints are not similarity-ordered".to_string(),
        ));
    }

    let p_bar = most_informative_set(jhat);
    if p_bar == mask::EMPTY {
        return Err(Error::DomainError(
            "no signal is more likely when the push is justified".to_string(),
        ));
    }
    let lambda = beta_cutoff / (1.0 - beta_cutoff);
    let nbar = jhat.nbar();
    let cap = default_turnout_cap(nbar);

    let hat_masses = ProfileMasses::of(&jhat.info, p_bar);
    let theta_star_jhat = hat_masses.crossing(nbar, lambda, cap);
    let theta_star_j = ProfileMasses::of(&j.info, p_bar).crossing(nbar, lambda, cap);

    let (eq_jhat, broken_jhat) = profile_status(jhat, p_bar, theta_star_jhat)?;
    let (eq_j, broken_j) = profile_status(j, p_bar, theta_star_j)?;

    let i_star_jhat = consistent_informativeness(jhat, lambda, cap)?;
    let i_star_j = consistent_informativeness(j, lambda, cap)?;

    let branch = match theta_star_jhat {
        None => InfoBranch::Indeterminate,
        Some(k_hat) => {
            let psi2 = poisson_pmf(k_hat, 2.0 * nbar);
            let psi1 = poisson_pmf(k_hat, nbar);
            if psi2 > 2.0 * psi1 {
                let mut bound = f64::INFINITY;
                for k in 0..k_hat {
                    let t = ((k as f64 - 1.0) * std::f64::consts::LN_2 - nbar).exp();
                    if t <= 1.0 {
                        continue;
                    }
                    let den = hat_masses.m0p + hat_masses.j0pp * (t - 1.0);
                    let ak =
                        (lambda * den / hat_masses.o - hat_masses.m1p) / (t - 1.0) - hat_masses.j1pp;
                    bound = bound.min(ak);
                }
                let max_gap = mask::subsets(n)
                    .map(|t| {
                        j.info.joint(State::One).mass(t, t)
                            - jhat.info.joint(State::One).mass(t, t)
                    })
                    .fold(0.0f64, f64::max);
                InfoBranch::PreservedIfSmall {
                    alpha_bound: bound,
                    max_gap,
                    within_bound: max_gap <= bound,
                }
            } else if psi2 < psi1 {
                InfoBranch::PossiblyLower
            } else {
                InfoBranch::Indeterminate
            }
        }
    };

    Ok(InformativenessReport {
        p_bar,
        theta_star_jhat,
        theta_star_j,
        informative_profile_equilibrium_jhat: eq_jhat,
        informative_profile_equilibrium_j: eq_j,
        broken_ic_jhat: broken_jhat,
        broken_ic_j: broken_j,
        i_star_jhat,
        i_star_j,
        branch,
    })
}

fn at_threshold(game: &Game<f64>, k: usize) -> Game<f64> {
    Game::new(
        game.info.clone(),
        game.population.clone(),
        ThresholdModel::deterministic(k),
        game.cost,
    )
    .with_tol(game.tol)
}

fn profile_status(
    game: &Game<f64>,
    p_bar: Mask,
    crossing: Option<usize>,
) -> Result<(bool, Option<BrokenIc>)> {
    let Some(k) = crossing else {
        return Ok((false, None));
    };
    let pinned = at_threshold(game, k);
    let sigma = StrategyProfile::symmetric(p_bar);
    match equilibrium_violation(&pinned, sigma) {
        None => Ok((true, None)),
        Some(v) => {
            let net = crate::equilibrium::net_gain(&pinned, v.group, v.signal, sigma)?;
            Ok((
                false,
                Some(BrokenIc {
                    signal: v.signal,
                    lhs: net + pinned.cost,
                    required: pinned.cost,
                    constraint: v.constraint,
                }),
            ))
        }
    }
}

/// Largest turnout informativeness over profiles that are equilibria at
/// their own belief crossing.
fn consistent_informativeness(game: &Game<f64>, lambda: f64, cap: usize) -> Result<f64> {
    let n = game.n_signals();
    let nbar = game.nbar();
    let mut best = 0.0f64;
    for p in mask::subsets(n) {
        if p == mask::EMPTY {
            continue;
        }
        let Some(k) = ProfileMasses::of(&game.info, p).crossing(nbar, lambda, cap) else {
            continue;
        };
        if is_equilibrium(&at_threshold(game, k), StrategyProfile::symmetric(p)) {
            best = best.max(informativeness(game, p));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::PopulationModel;
    use crate::signal::{eti, make_fc, SignalSpace, SimilarityTransform};
    use approx::assert_abs_diff_eq;

    fn two_signal_game(joint1: Joint<f64>, joint0: Joint<f64>, prior: f64, nbar: f64) -> Game<f64> {
        let info = InfoStructure::from_joints(prior, joint0, joint1, SignalSpace::indexed(2))
            .unwrap();
        Game::new(
            info,
            PopulationModel::poisson(nbar).unwrap(),
            ThresholdModel::deterministic(1),
            0.01,
        )
    }

    fn benchmark_game() -> Game<f64> {
        two_signal_game(
            make_ci(&[0.2, 0.8]).unwrap(),
            make_ci(&[0.7, 0.3]).unwrap(),
            0.5,
            20.0,
        )
    }

    #[test]
    fn odds_window_for_the_two_signal_benchmark() {
        let (l_low, l_high) = aggregation_bounds(&benchmark_game()).unwrap();
        assert_abs_diff_eq!(l_low, 64.0 / 9.0, epsilon = 1e-9);
        assert_abs_diff_eq!(l_high, 80.0 / 9.0, epsilon = 1e-9);
    }

    #[test]
    fn concentrated_state_zero_mass_breaks_the_premise() {
        let game = two_signal_game(
            make_ci(&[0.2, 0.8]).unwrap(),
            make_fc(&[0.7, 0.3]).unwrap(),
            0.5,
            20.0,
        );
        assert!(matches!(
            aggregation_bounds(&game),
            Err(Error::PremiseFailed(_))
        ));
    }

    #[test]
    fn middle_cutoffs_need_similarity_and_get_a_certificate() {
        let report = check_aggregation(&benchmark_game(), 8.0 / 9.0, 0.01).unwrap();
        assert_eq!(report.p_bar, 0b10);
        let AggregationVerdict::AchievableWithSimilarity(cert) = report.verdict else {
            panic!("expected a similarity certificate, got {:?}", report.verdict);
        };
        assert_abs_diff_eq!(cert.alpha, 0.081, epsilon = 1e-12);
        assert_eq!(cert.k_star, 41);
        assert_abs_diff_eq!(cert.cost, 2.1880144275198568e-4, epsilon = 1e-12);

        let joint = similarity_boost_joint(&[0.2, 0.8], 0b10, cert.alpha).unwrap();
        let game = benchmark_game();
        let check = Game::new(
            InfoStructure::from_joints(
                0.5,
                game.info.joint(State::Zero).clone(),
                joint.clone(),
                SignalSpace::indexed(2),
            )
            .unwrap(),
            PopulationModel::poisson(20.0).unwrap(),
            ThresholdModel::deterministic(cert.k_star),
            cert.cost,
        );
        assert!(is_equilibrium(&check, StrategyProfile::symmetric(0b10)));
        assert!(
            crate::signal::is_cad_geq(&joint, &make_ci(&[0.2, 0.8]).unwrap(), &1e-9).unwrap()
        );
    }

    #[test]
    fn low_cutoffs_aggregate_under_independence() {
        let report = check_aggregation(&benchmark_game(), 6.0 / 7.0, 2.3035136483510123e-3)
            .unwrap();
        assert_eq!(
            report.verdict,
            AggregationVerdict::AggregatesUnderCi {
                k_star: 34,
                cost_supported: true
            }
        );
        let report = check_aggregation(&benchmark_game(), 6.0 / 7.0, 0.5).unwrap();
        assert_eq!(
            report.verdict,
            AggregationVerdict::AggregatesUnderCi {
                k_star: 34,
                cost_supported: false
            }
        );
    }

    #[test]
    fn cutoffs_beyond_the_limit_never_aggregate() {
        let report = check_aggregation(&benchmark_game(), 0.9, 0.01).unwrap();
        assert_eq!(report.verdict, AggregationVerdict::NoAggregationForAnyCad);
    }

    #[test]
    fn an_uninformative_signal_leaves_the_belief_at_the_prior() {
        let info = InfoStructure::build(
            0.5,
            vec![vec![1.0]],
            vec![vec![1.0]],
            SignalSpace::indexed(1),
        )
        .unwrap();
        let game = Game::new(
            info,
            PopulationModel::poisson(10.0).unwrap(),
            ThresholdModel::deterministic(1),
            0.01,
        );
        let pm = PolicymakerModel::new(0.75, 10.0).unwrap();
        for k in [0usize, 5, 50, 5000] {
            assert_abs_diff_eq!(policymaker_belief(&pm, &game, 0b1, k), 0.5, epsilon = 1e-12);
        }
    }

    fn printed_pair() -> (Game<f64>, Game<f64>) {
        let j0 = vec![vec![0.49, 0.21], vec![0.21, 0.09]];
        let jhat1 = vec![vec![0.04, 0.15], vec![0.15, 0.66]];
        let j1 = vec![vec![0.09, 0.10], vec![0.10, 0.71]];
        let build = |rows: Vec<Vec<f64>>| {
            let info =
                InfoStructure::build(0.7, j0.clone(), rows, SignalSpace::indexed(2)).unwrap();
            Game::new(
                info,
                PopulationModel::poisson(20.0).unwrap(),
                ThresholdModel::deterministic(28),
                0.0368,
            )
        };
        (build(j1), build(jhat1))
    }

    #[test]
    fn printed_beliefs_and_crossing() {
        let (_, jhat) = printed_pair();
        let pm = PolicymakerModel::new(0.7281, 20.0).unwrap();
        assert_abs_diff_eq!(
            policymaker_belief(&pm, &jhat, 0b10, 27),
            0.716793,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            policymaker_belief(&pm, &jhat, 0b10, 28),
            0.767641,
            epsilon = 1e-6
        );
        let limit = belief_limit_odds(&jhat, 0b10);
        assert_abs_diff_eq!(limit, (0.7 / 0.3) * (0.66 / 0.09), epsilon = 1e-9);
        assert_abs_diff_eq!(
            policymaker_belief(&pm, &jhat, 0b10, 10_000),
            limit / (1.0 + limit),
            epsilon = 1e-9
        );
    }

    #[test]
    fn printed_pair_crossing_is_consistent_but_not_incentive_compatible() {
        let (j, jhat) = printed_pair();
        let report = informativeness_comparison(&j, &jhat, 0.7281).unwrap();
        assert_eq!(report.p_bar, 0b10);
        assert_eq!(report.theta_star_jhat, Some(28));
        assert_eq!(report.theta_star_j, Some(28));
        assert!(!report.informative_profile_equilibrium_jhat);
        assert!(!report.informative_profile_equilibrium_j);
        let bh = report.broken_ic_jhat.expect("first structure witness");
        assert_eq!(bh.signal, 1);
        assert_eq!(bh.constraint, Constraint::Participation);
        assert_abs_diff_eq!(bh.lhs, 0.00996075, epsilon = 1e-6);
        assert_abs_diff_eq!(bh.required, 0.0368, epsilon = 1e-12);
        let bj = report.broken_ic_j.expect("second structure witness");
        assert_eq!(bj.signal, 1);
        assert_abs_diff_eq!(bj.lhs, 0.00952889, epsilon = 1e-6);
        assert_abs_diff_eq!(report.i_star_jhat, 0.0);
        assert_abs_diff_eq!(report.i_star_j, 0.0);
        assert_eq!(report.branch, InfoBranch::PossiblyLower);
    }

    #[test]
    fn small_similarity_gaps_preserve_informativeness() {
        let joint0 = make_ci(&[0.7, 0.3]).unwrap();
        let ci = make_ci(&[0.2, 0.8]).unwrap();
        let boosted = eti(&ci, &SimilarityTransform::new(0, 1, 0.01)).unwrap();
        let build = |j1: Joint<f64>| {
            let info =
                InfoStructure::from_joints(0.5, joint0.clone(), j1, SignalSpace::indexed(2))
                    .unwrap();
            Game::new(
                info,
                PopulationModel::poisson(10.0).unwrap(),
                ThresholdModel::deterministic(19),
                0.01,
            )
        };
        let report = informativeness_comparison(&build(boosted), &build(ci.clone()), 6.0 / 7.0)
            .unwrap();
        assert_eq!(report.theta_star_jhat, Some(19));
        assert_eq!(report.theta_star_j, Some(19));
        assert!(report.informative_profile_equilibrium_jhat);
        assert!(report.informative_profile_equilibrium_j);
        assert!(report.broken_ic_jhat.is_none());
        assert_abs_diff_eq!(report.i_star_jhat, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(report.i_star_j, 0.5, epsilon = 1e-12);
        let InfoBranch::PreservedIfSmall {
            alpha_bound,
            max_gap,
            within_bound,
        } = report.branch
        else {
            panic!("expected the preservation branch, got {:?}", report.branch);
        };
        assert_abs_diff_eq!(alpha_bound, 0.10199328615657988, epsilon = 1e-9);
        assert_abs_diff_eq!(max_gap, 0.01, epsilon = 1e-12);
        assert!(within_bound);
        assert!(report.i_star_j >= report.i_star_jhat);

        let same = informativeness_comparison(&build(ci.clone()), &build(ci), 6.0 / 7.0).unwrap();
        assert_eq!(same.i_star_j, same.i_star_jhat);
        assert_eq!(same.theta_star_j, same.theta_star_jhat);
    }

    #[test]
    fn reversed_order_is_rejected() {
        let joint0 = make_ci(&[0.7, 0.3]).unwrap();
        let ci = make_ci(&[0.2, 0.8]).unwrap();
        let boosted = eti(&ci, &SimilarityTransform::new(0, 1, 0.01)).unwrap();
        let build = |j1: Joint<f64>| {
            let info =
                InfoStructure::from_joints(0.5, joint0.clone(), j1, SignalSpace::indexed(2))
                    .unwrap();
            Game::new(
                info,
                PopulationModel::poisson(10.0).unwrap(),
                ThresholdModel::deterministic(19),
                0.01,
            )
        };
        assert!(matches!(
            informativeness_comparison(&build(ci), &build(boosted), 6.0 / 7.0),
            Err(Error::NotCadComparable(_))
        ));
    }
}
