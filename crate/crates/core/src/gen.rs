//! Random instance generation for the verification suites.
//!
//! Every suite draws its instances here so the recipe lives in one place
//! and a (suite, instances, seed) triple pins down the exact sequence of
//! games tested. A two-group instance is built as follows:
//!
//! * signal count n uniform in {2, ..., 5};
//! * marginals m1, m0 from a flat Dirichlet on the n-simplex;
//! * joint1 starts conditionally independent and receives up to three
//!   random similarity transfers; joint0 stays conditionally independent;
//! * prior uniform in (0.1, 0.9);
//! * Poisson group sizes with N-bar uniform in [5, 25];
//! * deterministic resilience theta-bar uniform in {3, ..., 45};
//! * participation cost log-uniform over [1e-4, 0.5].
//!
//! Draws that trip a structural validation (posterior collisions, a signal
//! with mass in neither state) are discarded and redrawn, so the generators
//! always hand back a usable instance. Committee and multi-group pairs
//! follow the same spirit with their own small recipes, documented on the
//! respective functions.

use rand::Rng;
use rand_distr::{Dirichlet, Distribution};

use crate::committee::CommitteeModel;
use crate::multigroup::{ci_joint, fc_joint, meyer_transfer, MultiGroupScenario};
use crate::population::{Environment, PopulationModel, ThresholdModel};
use crate::scenario::Game;
use crate::signal::{
    eti, make_ci, InfoStructure, Joint, SignalSpace, SimilarityTransform, State,
};

/// A flat Dirichlet draw: a strictly positive vector summing to one.
pub fn random_marginal(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let dirichlet = Dirichlet::new_with_size(1.0, n).expect("flat Dirichlet is well formed");
    dirichlet.sample(rng)
}

/// Applies up to `transfers` random similarity transfers to `joint`,
/// each moving a uniform fraction of whatever off-diagonal mass the drawn
/// pair still holds. Returns the transformed joint together with the
/// (i, j, alpha) steps that were actually applied; a drawn pair whose mass
/// is already exhausted contributes no step.
pub fn random_eti_chain(
    rng: &mut impl Rng,
    joint: &Joint<f64>,
    transfers: usize,
) -> (Joint<f64>, Vec<(usize, usize, f64)>) {
    let n = joint.n();
    let mut out = joint.clone();
    let mut steps = Vec::new();
    if n < 2 {
        return (out, steps);
    }
    for _ in 0..transfers {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let available = *out.entry(i, j);
        if available <= 0.0 {
            continue;
        }
        let alpha = rng.gen_range(0.0..1.0) * available;
        if alpha <= 0.0 {
            continue;
        }
        out = eti(&out, &SimilarityTransform::new(i, j, alpha))
            .expect("transfer stays within the available off-diagonal mass");
        steps.push((i, j, alpha));
    }
    (out, steps)
}

fn cost_draw(rng: &mut impl Rng) -> f64 {
    let lo = (1e-4f64).ln();
    let hi = (0.5f64).ln();
    rng.gen_range(lo..hi).exp()
}

fn try_random_game(rng: &mut impl Rng) -> Option<Game<f64>> {
    let n = rng.gen_range(2..=5);
    let m1 = random_marginal(rng, n);
    let m0 = random_marginal(rng, n);
    let ci1 = make_ci(&m1).ok()?;
    let joint0 = make_ci(&m0).ok()?;
    let transfers = rng.gen_range(0..=3);
    let (joint1, _) = random_eti_chain(rng, &ci1, transfers);
    let prior = rng.gen_range(0.1..0.9);
    let nbar = rng.gen_range(5.0..25.0);
    let theta_bar = rng.gen_range(3..=45);
    let cost = cost_draw(rng);
    let info =
        InfoStructure::from_joints(prior, joint0, joint1, SignalSpace::indexed(n)).ok()?;
    let population = PopulationModel::poisson(nbar).ok()?;
    Some(Game::new(
        info,
        population,
        ThresholdModel::deterministic(theta_bar),
        cost,
    ))
}

/// One instance from the recipe in the module docs.
pub fn random_game(rng: &mut impl Rng) -> Game<f64> {
    loop {
        if let Some(game) = try_random_game(rng) {
            return game;
        }
    }
}

/// Rejection-samples [`random_game`] until the pivotal classification
/// matches `env`.
pub fn random_game_in(rng: &mut impl Rng, env: Environment) -> Game<f64> {
    loop {
        let game = random_game(rng);
        if game.pivot.environment == env {
            return game;
        }
    }
}

/// Draws a comparable committee pair `(more similar, base)`.
///
/// Both models share the vote threshold, prior, cost, low-signal marginal,
/// and mean vote count (hence the high-signal marginal too). The first
/// model's conditional vote-count law is the base law with a fraction of
/// the mass on counts in `[r0, kc)` pushed onto counts at or above `kc`,
/// where `kc` never exceeds the vote threshold. That makes the difference
/// of laws cross zero exactly once at an index below the threshold, and
/// the cost is drawn low enough that sincere voting is an equilibrium of
/// the base committee.
pub fn random_committee_pair(rng: &mut impl Rng) -> (CommitteeModel, CommitteeModel) {
    loop {
        if let Some(pair) = try_committee_pair(rng) {
            return pair;
        }
    }
}

fn try_committee_pair(rng: &mut impl Rng) -> Option<(CommitteeModel, CommitteeModel)> {
    let size = rng.gen_range(3..=5);
    let theta_bar = rng.gen_range(1..size);
    let gamma_hat = random_marginal(rng, size);
    let kc = rng.gen_range(1..=theta_bar);
    let r0 = rng.gen_range(0..kc);
    let low: f64 = gamma_hat[r0..kc].iter().sum();
    if low <= 1e-9 {
        return None;
    }
    let delta = rng.gen_range(0.1..0.9) * low;
    let upper_weights = random_marginal(rng, size - kc);
    let mut gamma = gamma_hat.clone();
    for k in r0..kc {
        gamma[k] -= gamma_hat[k] / low * delta;
    }
    for k in kc..size {
        gamma[k] += upper_weights[k - kc] * delta;
    }

    let cap: f64 = 1.0
        / gamma_hat
            .iter()
            .enumerate()
            .map(|(k, g)| g / (k + 1) as f64)
            .sum::<f64>();
    let mean_count = rng.gen_range(0.2..0.95) * cap;
    let prior = rng.gen_range(0.1..0.9);
    let marginal0 = rng.gen_range(0.02..0.98);
    let marginal1 = mean_count / size as f64;
    let posterior_high =
        prior * marginal1 / (prior * marginal1 + (1.0 - prior) * marginal0);
    let cost = rng.gen_range(0.1..0.95) * gamma_hat[theta_bar] * posterior_high;
    if cost <= 0.0 {
        return None;
    }

    let base = CommitteeModel::from_gamma_given_one(
        size, &gamma_hat, mean_count, prior, marginal0, cost, theta_bar,
    )
    .ok()?;
    let shifted = CommitteeModel::from_gamma_given_one(
        size, &gamma, mean_count, prior, marginal0, cost, theta_bar,
    )
    .ok()?;
    Some((shifted, base))
}

/// Draws a comparable multi-group pair `(more similar, base)`.
///
/// The base scenario mixes a conditionally independent joint with a fully
/// correlated one (mix weight uniform in [0, 0.5)) over 3 or 4 groups and
/// a 2- or 3-letter alphabet, then the more similar scenario moves a
/// uniform fraction of one non-constant permutation orbit's mass onto the
/// constant profiles. Group sizes run smaller than in the two-group recipe
/// (N-bar in [3, 10]) so both full-coalition regimes show up under the
/// same resilience range.
pub fn random_multigroup_pair(
    rng: &mut impl Rng,
) -> (MultiGroupScenario, MultiGroupScenario) {
    loop {
        if let Some(pair) = try_multigroup_pair(rng) {
            return pair;
        }
    }
}

fn try_multigroup_pair(
    rng: &mut impl Rng,
) -> Option<(MultiGroupScenario, MultiGroupScenario)> {
    let groups = rng.gen_range(3..=4);
    let n = rng.gen_range(2..=3);
    let m1 = random_marginal(rng, n);
    let mix = rng.gen_range(0.0..0.5);
    let ci = ci_joint(groups, &m1);
    let fc = fc_joint(groups, &m1);
    let joint_base: Vec<f64> = ci
        .iter()
        .zip(&fc)
        .map(|(a, b)| (1.0 - mix) * a + mix * b)
        .collect();
    let m0 = random_marginal(rng, n);
    let prior = rng.gen_range(0.1..0.9);
    let nbar = rng.gen_range(3.0..10.0);
    let theta_bar = rng.gen_range(3..=45);
    let cost = cost_draw(rng);
    let base = MultiGroupScenario::new(
        groups,
        joint_base,
        prior,
        m0,
        nbar,
        theta_bar,
        cost,
    )
    .ok()?;

    let pattern: Vec<usize> = loop {
        let p: Vec<usize> = (0..groups).map(|_| rng.gen_range(0..n)).collect();
        if p.iter().any(|d| *d != p[0]) {
            break p;
        }
    };
    let orbit = orbit_mass(base.joint1(), n, groups, &pattern);
    if orbit <= 1e-9 {
        return None;
    }
    let epsilon = rng.gen_range(0.1..0.9) * orbit;
    let shifted = meyer_transfer(&base, &pattern, epsilon).ok()?;
    Some((shifted, base))
}

fn orbit_mass(joint: &[f64], n: usize, groups: usize, pattern: &[usize]) -> f64 {
    let mut target = vec![0usize; n];
    for d in pattern {
        target[*d] += 1;
    }
    let mut mass = 0.0;
    for idx in 0..joint.len() {
        let mut rem = idx;
        let mut counts = vec![0usize; n];
        for _ in 0..groups {
            counts[rem % n] += 1;
            rem /= n;
        }
        if counts == target {
            mass += joint[idx];
        }
    }
    mass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::committee::{cad_sign_change, gamma_given_one, is_sigma1_equilibrium};
    use crate::multigroup::meyer_geq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn marginals_are_simplex_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=5 {
            let m = random_marginal(&mut rng, n);
            assert_eq!(m.len(), n);
            assert!(m.iter().all(|v| *v > 0.0));
            assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn games_come_out_valid_and_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g1 = random_game(&mut a);
            let g2 = random_game(&mut b);
            assert_eq!(g1.n_signals(), g2.n_signals());
            assert_eq!(g1.cost, g2.cost);
            assert_eq!(
                g1.info.joint(State::One).entry(0, 1),
                g2.info.joint(State::One).entry(0, 1)
            );
            assert!(g1.n_signals() >= 2 && g1.n_signals() <= 5);
            assert!(g1.nbar() >= 5.0 && g1.nbar() < 25.0);
            assert!(g1.cost >= 1e-4 && g1.cost <= 0.5);
            assert!(g1.pivot.assumption1_holds);
        }
    }

    #[test]
    fn environment_filter_is_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let g = random_game_in(&mut rng, Environment::Encouragement);
            assert_eq!(g.pivot.environment, Environment::Encouragement);
            let g = random_game_in(&mut rng, Environment::Discouragement);
            assert_eq!(g.pivot.environment, Environment::Discouragement);
        }
    }

    #[test]
    fn eti_chain_preserves_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_marginal(&mut rng, 4);
        let ci = make_ci(&m).unwrap();
        let (boosted, steps) = random_eti_chain(&mut rng, &ci, 3);
        assert!(!steps.is_empty());
        let got = boosted.marginal();
        for (a, b) in got.iter().zip(&m) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn committee_pairs_satisfy_their_advertised_premises() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..30 {
            let (shifted, base) = random_committee_pair(&mut rng);
            assert_eq!(shifted.size(), base.size());
            assert_eq!(shifted.theta_bar(), base.theta_bar());
            assert_eq!(shifted.cost(), base.cost());
            let change = cad_sign_change(&shifted, &base).unwrap().expect("one crossing");
            assert!(!change.equal);
            assert!(change.k_star < base.theta_bar());
            assert!(is_sigma1_equilibrium(&base).unwrap());
            let g = gamma_given_one(&shifted).unwrap();
            let ghat = gamma_given_one(&base).unwrap();
            assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((ghat.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn multigroup_pairs_are_meyer_ordered() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let (shifted, base) = random_multigroup_pair(&mut rng);
            assert!(meyer_geq(&shifted, &base).unwrap());
            assert!(!meyer_geq(&base, &shifted).unwrap());
        }
    }
}
