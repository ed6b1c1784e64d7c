//! Comparative statics when the news itself changes, not just its
//! correlation.
//!
//! Dropping the shared-marginal requirement breaks the similarity order,
//! but a weaker comparison survives: if the posterior distribution spreads
//! out around a point no higher than the participation cost, the extra
//! mass lands where it recruits. Alongside it, this module carries the
//! cutoff structure of best equilibria under encouragement: when upper
//! sets of signals confirm each other at least as strongly as they confirm
//! outsiders, the largest equilibrium takes everyone above a posterior
//! cutoff.

use crate::equilibrium::{
    enumerate_equilibria, expected_participation, is_equilibrium, t_star, StrategyProfile,
};
use crate::error::{Error, Result};
use crate::mask::{self, Mask};
use crate::population::Environment;
use crate::scenario::Game;
use crate::signal::{Joint, State};

const SPREAD_TOL: f64 = 1e-9;
const ATOM_TOL: f64 = 1e-12;

fn validate_atoms(dist: &[(f64, f64)], what: &str) -> Result<()> {
    let mut sum = 0.0;
    for &(v, w) in dist {
        if !v.is_finite() || !w.is_finite() {
            return Err(Error::DomainError(format!(
                "{what} contains a non-finite atom ({v}, {w})"
            )));
        }
        if w < 0.0 {
            return Err(Error::DomainError(format!(
                "{what} gives weight {w} to the value {v}"
            )));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > SPREAD_TOL {
        return Err(Error::NotADistribution {
            what: what.to_string(),
            sum,
        });
    }
    Ok(())
}

fn cdf(dist: &[(f64, f64)], z: f64) -> f64 {
    dist.iter()
        .filter(|&&(v, _)| v <= z + ATOM_TOL)
        .map(|&(_, w)| w)
        .sum()
}

/// Is the atomic distribution `m` more spread out than `mhat` around `y`?
///
/// Holds when `m` carries at least as much mass as `mhat` below every
/// point up to `y` and at most as much below every point from `y` on, so
/// mass has only moved outward from `y`. Atoms are `(value, weight)`
/// pairs; each list must sum to one.
pub fn spread_out_geq(m: &[(f64, f64)], mhat: &[(f64, f64)], y: f64) -> Result<bool> {
    validate_atoms(m, "the first spread comparand")?;
    validate_atoms(mhat, "the second spread comparand")?;
    if !y.is_finite() {
        return Err(Error::DomainError(format!(
            "spread center {y} must be finite"
        )));
    }
    let points = m
        .iter()
        .chain(mhat)
        .map(|&(v, _)| v)
        .chain(std::iter::once(y));
    for z in points {
        let g = cdf(m, z);
        let ghat = cdf(mhat, z);
        if z <= y + SPREAD_TOL && g < ghat - SPREAD_TOL {
            return Ok(false);
        }
        if z >= y - SPREAD_TOL && g > ghat + SPREAD_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Unconditional distribution of the posterior a signal induces, as sorted
/// `(value, weight)` atoms.
pub fn posterior_distribution(game: &Game<f64>) -> Vec<(f64, f64)> {
    let info = &game.info;
    let prior = *info.prior();
    let m1 = info.marginal(State::One);
    let m0 = info.marginal(State::Zero);
    let mut atoms: Vec<(f64, f64)> = (0..info.len())
        .map(|x| {
            (
                *info.posterior(x),
                prior * m1[x] + (1.0 - prior) * m0[x],
            )
        })
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    atoms
}

/// Requires upper sets of signals to confirm their own members more
/// strongly the better the member's news: along ascending posteriors, the
/// conditional mass a member assigns to the set must not fall.
pub fn check_assumption_b2(game: &Game<f64>) -> Result<()> {
    let order = game.info.posterior_order();
    let n = game.n_signals();
    let joint = game.info.joint(State::One);
    let m1 = game.info.marginal(State::One);
    for start in 0..n {
        let upper = mask::from_indices(order[start..].iter().copied());
        let mut prev: Option<(usize, f64)> = None;
        for &x in &order[start..] {
            if !(m1[x] > 0.0) {
                continue;
            }
            let c = joint.conditional(x, upper)?;
            if let Some((x_lo, c_lo)) = prev {
                if c < c_lo - game.tol {
                    return Err(Error::AssumptionB2Failed(format!(
                        "conditional mass on the upper set {:?} falls from {:.6} at signal {} to {:.6} at signal {}",
                        mask::members(upper).collect::<Vec<_>>(),
                        c_lo,
                        x_lo,
                        c,
                        x
                    )));
                }
            }
            prev = Some((x, c));
        }
    }
    Ok(())
}

/// Smallest posterior-upper set containing `p`: everyone whose posterior
/// matches or beats the most pessimistic member.
pub fn cutoff_closure(game: &Game<f64>, p: Mask) -> Mask {
    if p == mask::EMPTY {
        return mask::EMPTY;
    }
    let order = game.info.posterior_order();
    let start = order
        .iter()
        .position(|&x| mask::contains(p, x))
        .expect("a nonempty profile has a least-posterior member");
    mask::from_indices(order[start..].iter().copied())
}

/// The best equilibrium as a posterior cutoff.
///
/// Needs encouragement and the upper-set condition; under those the best
/// equilibrium is symmetric and closed upward in the posterior, and this
/// returns its signal set. A non-cutoff best equilibrium is reported as an
/// error rather than silently rounded.
pub fn cutoff_maximal(game: &Game<f64>) -> Result<Mask> {
    if game.pivot.environment != Environment::Encouragement {
        return Err(Error::DomainError(format!(
            "cutoff structure needs encouragement, this game has {}",
            game.pivot.environment
        )));
    }
    check_assumption_b2(game)?;
    let report = enumerate_equilibria(game)?;
    let best = report.canonical_maximal();
    if !best.is_symmetric() {
        return Err(Error::DomainError(
            "the best equilibrium is not symmetric".to_string(),
        ));
    }
    let p = best.group(0);
    if p != cutoff_closure(game, p) {
        return Err(Error::DomainError(
            "the best equilibrium is not a posterior cutoff".to_string(),
        ));
    }
    Ok(p)
}

/// Similarity-order condition on conditionals alone, with no marginal
/// matching: every signal present in both structures must confirm each
/// subset it belongs to at least as strongly, and each subset it is
/// outside at most as strongly.
fn relaxed_cad_geq(j: &Joint<f64>, jhat: &Joint<f64>, tol: f64) -> Result<bool> {
    if j.n() != jhat.n() {
        return Err(Error::DomainError(
            "joints live on different signal spaces".to_string(),
        ));
    }
    let n = j.n();
    let m = j.marginal();
    let mhat = jhat.marginal();
    for y in 0..n {
        if !(m[y] > 0.0) || !(mhat[y] > 0.0) {
            continue;
        }
        for t in mask::subsets(n) {
            let c = j.conditional(y, t)?;
            let chat = jhat.conditional(y, t)?;
            let ok = if mask::contains(t, y) {
                c + tol >= chat
            } else {
                c <= chat + tol
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub struct ChangingMarginalReport {
    pub encouragement_both: bool,
    pub assumption_b2_both: bool,
    /// Conditional dominance of the first structure over the second,
    /// ignoring their differing marginals.
    pub relaxed_cad: bool,
    /// A point no higher than the cost around which the first posterior
    /// distribution is more spread out, if one exists.
    pub spread_around: Option<f64>,
    pub s_star_j: f64,
    pub s_star_jhat: f64,
    /// Whether the first structure's best turnout weakly dominates, stated
    /// only when every premise above holds.
    pub conclusion_holds: Option<bool>,
}

/// Compares best-equilibrium turnout across two structures whose state-1
/// marginals differ.
pub fn changing_marginal_compare(
    j: &Game<f64>,
    jhat: &Game<f64>,
) -> Result<ChangingMarginalReport> {
    if j.n_signals() != jhat.n_signals() {
        return Err(Error::DomainError(
            "the games live on different signal spaces".to_string(),
        ));
    }
    if (j.cost - jhat.cost).abs() > ATOM_TOL {
        return Err(Error::DomainError(
            "participation costs differ".to_string(),
        ));
    }
    let encouragement_both = j.pivot.environment == Environment::Encouragement
        && jhat.pivot.environment == Environment::Encouragement;
    let assumption_b2_both =
        check_assumption_b2(j).is_ok() && check_assumption_b2(jhat).is_ok();
    let relaxed_cad = relaxed_cad_geq(
        j.info.joint(State::One),
        jhat.info.joint(State::One),
        j.tol,
    )?;

    let dist_j = posterior_distribution(j);
    let dist_jhat = posterior_distribution(jhat);
    let cost = j.cost;
    let mut candidates: Vec<f64> = dist_j
        .iter()
        .chain(&dist_jhat)
        .map(|&(v, _)| v)
        .collect();
    candidates.sort_by(f64::total_cmp);
    let midpoints: Vec<f64> = candidates
        .windows(2)
        .map(|w| (w[0] + w[1]) / 2.0)
        .collect();
    candidates.extend(midpoints);
    candidates.push(cost);
    candidates.sort_by(f64::total_cmp);
    candidates.retain(|&y| y <= cost + ATOM_TOL);
    let mut spread_around = None;
    for &y in &candidates {
        if spread_out_geq(&dist_j, &dist_jhat, y)? {
            spread_around = Some(y);
            break;
        }
    }

    let s_star_j = enumerate_equilibria(j)?.s_star;
    let s_star_jhat = enumerate_equilibria(jhat)?.s_star;
    let premises =
        encouragement_both && assumption_b2_both && relaxed_cad && spread_around.is_some();
    Ok(ChangingMarginalReport {
        encouragement_both,
        assumption_b2_both,
        relaxed_cad,
        spread_around,
        s_star_j,
        s_star_jhat,
        conclusion_holds: premises.then(|| s_star_j + SPREAD_TOL >= s_star_jhat),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{PopulationModel, ThresholdModel};
    use crate::signal::{eti, make_ci, make_fc, InfoStructure, SignalSpace, SimilarityTransform};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_distributions_spread_around_every_point() {
        let d = [(0.2, 0.25), (0.5, 0.5), (0.9, 0.25)];
        for y in [0.0, 0.2, 0.37, 0.5, 0.9, 1.0] {
            assert!(spread_out_geq(&d, &d, y).unwrap());
        }
    }

    #[test]
    fn a_symmetric_widening_is_a_spread_around_the_center_only() {
        let wide = [(0.3, 0.5), (0.7, 0.5)];
        let narrow = [(0.4, 0.5), (0.6, 0.5)];
        assert!(spread_out_geq(&wide, &narrow, 0.5).unwrap());
        assert!(!spread_out_geq(&narrow, &wide, 0.5).unwrap());
        assert!(!spread_out_geq(&wide, &narrow, 0.2).unwrap());
        assert!(!spread_out_geq(&wide, &narrow, 0.8).unwrap());
    }

    #[test]
    fn bad_weights_are_rejected() {
        assert!(matches!(
            spread_out_geq(&[(0.5, 0.7)], &[(0.5, 1.0)], 0.5),
            Err(Error::NotADistribution { .. })
        ));
        assert!(matches!(
            spread_out_geq(&[(0.5, 1.2), (0.6, -0.2)], &[(0.5, 1.0)], 0.5),
            Err(Error::DomainError(_))
        ));
    }

    fn game_from(
        prior: f64,
        joint0: Joint<f64>,
        joint1: Joint<f64>,
        nbar: f64,
        theta_bar: usize,
        cost: f64,
    ) -> Game<f64> {
        let n = joint0.n();
        let info =
            InfoStructure::from_joints(prior, joint0, joint1, SignalSpace::indexed(n)).unwrap();
        Game::new(
            info,
            PopulationModel::poisson(nbar).unwrap(),
            ThresholdModel::deterministic(theta_bar),
            cost,
        )
    }

    #[test]
    fn upper_set_conditionals_vet_the_cutoff_structure() {
        let m1 = [0.2, 0.4, 0.4];
        let m0 = [0.6, 0.3, 0.1];
        let plain = game_from(
            0.5,
            make_ci(&m0).unwrap(),
            make_ci(&m1).unwrap(),
            8.0,
            14,
            0.01,
        );
        assert!(check_assumption_b2(&plain).is_ok());

        let skewed = game_from(
            0.5,
            make_ci(&m0).unwrap(),
            eti(&make_ci(&m1).unwrap(), &SimilarityTransform::new(0, 1, 0.05)).unwrap(),
            8.0,
            14,
            0.01,
        );
        assert!(matches!(
            check_assumption_b2(&skewed),
            Err(Error::AssumptionB2Failed(_))
        ));

        assert_eq!(cutoff_closure(&plain, mask::EMPTY), mask::EMPTY);
        assert_eq!(cutoff_closure(&plain, 0b100), 0b100);
        assert_eq!(cutoff_closure(&plain, 0b101), 0b111);
        assert_eq!(cutoff_closure(&plain, 0b010), 0b110);
    }

    fn posterior_consistent(m1: &[f64], vs: &[f64]) -> (f64, Vec<f64>) {
        let ratio: f64 = m1
            .iter()
            .zip(vs)
            .map(|(&m, &v)| m * (1.0 - v) / v)
            .sum();
        let prior = 1.0 / (1.0 + ratio);
        let m0 = m1
            .iter()
            .zip(vs)
            .map(|(&m, &v)| m * (1.0 - v) / v / ratio)
            .collect();
        (prior, m0)
    }

    #[test]
    fn symmetrizing_onto_the_cutoff_closure_never_shrinks_an_equilibrium() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut tested = 0usize;
        for _ in 0..400 {
            let n = *[2usize, 3, 4].iter().nth(rng.gen_range(0..3)).unwrap();
            let mut vs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.03..0.97)).collect();
            vs.sort_by(f64::total_cmp);
            if vs.windows(2).any(|w| w[1] - w[0] < 0.02) {
                continue;
            }
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let tot: f64 = w.iter().sum();
            let m1: Vec<f64> = w.iter().map(|x| x / tot).collect();
            let (prior, m0) = posterior_consistent(&m1, &vs);
            let mut joint1 = make_ci(&m1).unwrap();
            for _ in 0..rng.gen_range(0..4) {
                let a = rng.gen_range(0..n);
                let mut b = rng.gen_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                let (a, b) = (a.min(b), a.max(b));
                let room = *joint1.entry(a, b);
                if room <= 1e-9 {
                    continue;
                }
                joint1 = eti(
                    &joint1,
                    &SimilarityTransform::new(a, b, rng.gen_range(0.0..room)),
                )
                .unwrap();
            }
            let nbar = rng.gen_range(4.0..12.0);
            let theta_bar =
                (nbar / std::f64::consts::LN_2 * rng.gen_range(1.15..1.8)) as usize + 1;
            let cost = 10f64.powf(rng.gen_range(-4.0..-0.6));
            let game = game_from(prior, make_ci(&m0).unwrap(), joint1, nbar, theta_bar, cost);
            if game.pivot.environment != Environment::Encouragement {
                continue;
            }
            if check_assumption_b2(&game).is_err() {
                continue;
            }
            tested += 1;
            for p in mask::subsets(n) {
                let sigma = StrategyProfile::symmetric(p);
                if !is_equilibrium(&game, sigma) {
                    continue;
                }
                let closure = cutoff_closure(&game, p);
                let sym = t_star(&game, closure);
                let sym_sigma = StrategyProfile::symmetric(sym);
                assert!(
                    is_equilibrium(&game, sym_sigma),
                    "closure iterate is not an equilibrium: n={n} p={p:b} sym={sym:b}"
                );
                assert!(
                    expected_participation(&game, sym_sigma)
                        >= expected_participation(&game, sigma) - 1e-9,
                    "closure iterate shrank turnout: n={n} p={p:b} sym={sym:b}"
                );
            }
            let best = cutoff_maximal(&game).unwrap();
            let report = enumerate_equilibria(&game).unwrap();
            assert_abs_diff_eq!(
                expected_participation(&game, StrategyProfile::symmetric(best)),
                report.s_star,
                epsilon = 1e-9
            );
        }
        assert!(tested >= 100, "only {tested} draws survived the filters");
    }

    #[test]
    fn upward_marginal_transfers_with_full_correlation_never_lower_turnout() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut tested = 0usize;
        let mut concluded = 0usize;
        for _ in 0..300 {
            let n = *[2usize, 3, 4].iter().nth(rng.gen_range(0..3)).unwrap();
            let mut vs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
            vs.sort_by(f64::total_cmp);
            if vs.windows(2).any(|w| w[1] - w[0] < 0.03) {
                continue;
            }
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let tot: f64 = w.iter().sum();
            let mhat: Vec<f64> = w.iter().map(|x| x / tot).collect();
            let mut m1 = mhat.clone();
            for _ in 0..rng.gen_range(1..4) {
                let i = rng.gen_range(0..n - 1);
                let j = rng.gen_range(i + 1..n);
                let d = rng.gen_range(0.0..m1[i] * 0.8);
                m1[i] -= d;
                m1[j] += d;
            }
            let (prior_hat, m0_hat) = posterior_consistent(&mhat, &vs);
            let (prior_j, m0_j) = posterior_consistent(&m1, &vs);
            let nbar = rng.gen_range(4.0..10.0);
            let theta_bar =
                (nbar / std::f64::consts::LN_2 * rng.gen_range(1.2..1.8)) as usize + 1;
            let cost = 10f64.powf(rng.gen_range(-3.5..-0.8));
            let ehat = game_from(
                prior_hat,
                make_ci(&m0_hat).unwrap(),
                make_ci(&mhat).unwrap(),
                nbar,
                theta_bar,
                cost,
            );
            let ej = game_from(
                prior_j,
                make_ci(&m0_j).unwrap(),
                make_fc(&m1).unwrap(),
                nbar,
                theta_bar,
                cost,
            );
            if ehat.pivot.environment != Environment::Encouragement {
                continue;
            }
            tested += 1;
            let s_hat = enumerate_equilibria(&ehat).unwrap().s_star;
            let s_j = enumerate_equilibria(&ej).unwrap().s_star;
            assert!(
                s_j >= s_hat - 1e-9,
                "turnout fell: n={n} vs={vs:?} mhat={mhat:?} m1={m1:?} s_hat={s_hat} s_j={s_j}"
            );
            let report = changing_marginal_compare(&ej, &ehat).unwrap();
            assert_ne!(report.conclusion_holds, Some(false));
            assert_abs_diff_eq!(report.s_star_j, s_j);
            assert_abs_diff_eq!(report.s_star_jhat, s_hat);
            if report.conclusion_holds == Some(true) {
                concluded += 1;
            }
        }
        assert!(tested >= 100, "only {tested} draws survived the filters");
        assert!(concluded >= 1, "the premise machinery never engaged");
    }

    #[test]
    fn a_fully_premised_pair_reports_a_conclusion() {
        let vs = [0.2, 0.8];
        let mhat = [0.5, 0.5];
        let m1 = [0.3, 0.7];
        let (prior_hat, m0_hat) = posterior_consistent(&mhat, &vs);
        let (prior_j, m0_j) = posterior_consistent(&m1, &vs);
        let ehat = game_from(
            prior_hat,
            make_ci(&m0_hat).unwrap(),
            make_ci(&mhat).unwrap(),
            6.0,
            14,
            0.05,
        );
        let ej = game_from(
            prior_j,
            make_ci(&m0_j).unwrap(),
            make_fc(&m1).unwrap(),
            6.0,
            14,
            0.05,
        );
        let report = changing_marginal_compare(&ej, &ehat).unwrap();
        assert!(report.encouragement_both);
        assert!(report.assumption_b2_both);
        assert!(report.relaxed_cad);
        assert_eq!(report.spread_around, Some(0.05));
        assert_eq!(report.conclusion_holds, Some(true));
        assert_abs_diff_eq!(report.s_star_j, 8.4, epsilon = 1e-9);
        assert_abs_diff_eq!(report.s_star_jhat, 0.0, epsilon = 1e-12);
    }
}
