//! Incentive checks, exhaustive equilibrium enumeration, and the
//! participation-maximizing profile for the two-group game.
//!
//! A pure strategy for a group is the set of signals at which its members
//! participate. A profile is an equilibrium when no signal type wants to
//! flip its action: participating types must clear the cost from the two
//! within-group pivotal channels, and abstaining types must not profit from
//! the outside channel. Everything here quantifies over bitmask subsets of
//! the signal space, which caps the space at a desk-friendly size.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mask::{self, Mask};
use crate::scalar::Scalar;
use crate::scenario::Game;
use crate::signal::State;

/// Exhaustive enumeration walks `4^|X|` profiles; past eight signals that
/// stops being a desk-scale computation.
pub const MAX_ENUM_SIGNALS: usize = 8;

/// Per-group participation sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StrategyProfile {
    pub p1: Mask,
    pub p2: Mask,
}

impl StrategyProfile {
    pub fn new(p1: Mask, p2: Mask) -> Self {
        Self { p1, p2 }
    }

    pub fn symmetric(p: Mask) -> Self {
        Self { p1: p, p2: p }
    }

    /// Participation set of group `g` (0 or 1).
    pub fn group(&self, g: usize) -> Mask {
        if g == 0 {
            self.p1
        } else {
            self.p2
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.p1 == self.p2
    }

    pub fn union(&self) -> Mask {
        self.p1 | self.p2
    }
}

/// Which incentive constraint a deviation certificate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Participation,
    NonParticipation,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Participation => f.write_str("participation"),
            Constraint::NonParticipation => f.write_str("non-participation"),
        }
    }
}

/// First failed incentive constraint of a candidate profile: which group,
/// at which signal, in which direction, and by how much.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub group: usize,
    pub signal: usize,
    pub constraint: Constraint,
    pub shortfall: f64,
}

/// Net expected payoff from participating at signal `x` for a member of
/// group `g`, against the rest of the profile. Positive means the type
/// prefers to be in, negative out; an equilibrium keeps every prescribed
/// action on the weakly preferred side.
pub fn net_gain<S: Scalar>(
    game: &Game<S>,
    g: usize,
    x: usize,
    sigma: StrategyProfile,
) -> Result<S> {
    let info = &game.info;
    let m1x = &info.marginal(State::One)[x];
    if !(*m1x > S::zero()) {
        return Ok(S::zero() - game.cost.clone());
    }
    let other = sigma.group(1 - g);
    let j_other = info.conditional_mass(State::One, x, other)?;
    let mu = info.posterior(x).clone();
    let value = if mask::contains(sigma.group(g), x) {
        let bracket = j_other.clone() * game.pivot.lambda2.clone()
            + (S::one() - j_other) * game.pivot.lambda1.clone();
        mu * bracket
    } else {
        mu * j_other * game.pivot.lambda_o.clone()
    };
    Ok(value - game.cost.clone())
}

/// Precomputed per-signal data for the hot loops: posteriors, and the
/// conditional mass `J¹_x(T)` for every subset `T`, indexed `[x][T]`.
/// Signals with no state-1 mass get a flag instead of conditionals.
struct IcTables<S> {
    n: usize,
    mu: Vec<S>,
    m1_zero: Vec<bool>,
    cond1: Vec<Vec<S>>,
}

impl<S: Scalar> IcTables<S> {
    fn build(game: &Game<S>) -> Self {
        let info = &game.info;
        let n = info.len();
        let full = 1usize << n;
        let joint1 = info.joint(State::One);
        let m1 = info.marginal(State::One);
        let mut cond1 = Vec::with_capacity(n);
        let mut m1_zero = Vec::with_capacity(n);
        for x in 0..n {
            let zero = !(m1[x] > S::zero());
            m1_zero.push(zero);
            let mut row = vec![S::zero(); full];
            if !zero {
                for t in 1..full {
                    let low = t.trailing_zeros() as usize;
                    row[t] = row[t & (t - 1)].clone() + joint1.entry(x, low).clone();
                }
                for v in row.iter_mut() {
                    *v = v.clone() / m1[x].clone();
                }
            }
            cond1.push(row);
        }
        Self {
            n,
            mu: info.posteriors().to_vec(),
            m1_zero,
            cond1,
        }
    }

    fn violation(&self, game: &Game<S>, sigma: StrategyProfile) -> Option<Violation> {
        let tol = &game.tol;
        let c = &game.cost;
        for g in 0..2 {
            let own = sigma.group(g);
            let other = sigma.group(1 - g);
            for x in 0..self.n {
                let in_own = mask::contains(own, x);
                let value = if self.m1_zero[x] {
                    if !in_own {
                        continue;
                    }
                    S::zero()
                } else {
                    let j = &self.cond1[x][other as usize];
                    if in_own {
                        self.mu[x].clone()
                            * (j.clone() * game.pivot.lambda2.clone()
                                + (S::one() - j.clone()) * game.pivot.lambda1.clone())
                    } else {
                        self.mu[x].clone() * j.clone() * game.pivot.lambda_o.clone()
                    }
                };
                if in_own {
                    if value.clone() + tol.clone() < *c {
                        return Some(Violation {
                            group: g,
                            signal: x,
                            constraint: Constraint::Participation,
                            shortfall: (c.clone() - value).to_f64(),
                        });
                    }
                } else if value.clone() > c.clone() + tol.clone() {
                    return Some(Violation {
                        group: g,
                        signal: x,
                        constraint: Constraint::NonParticipation,
                        shortfall: (value - c.clone()).to_f64(),
                    });
                }
            }
        }
        None
    }
}

/// Checks both incentive constraints at every (group, signal) pair and
/// returns the first violation in scan order, or `None` for an equilibrium.
pub fn equilibrium_violation<S: Scalar>(
    game: &Game<S>,
    sigma: StrategyProfile,
) -> Option<Violation> {
    IcTables::build(game).violation(game, sigma)
}

pub fn is_equilibrium<S: Scalar>(game: &Game<S>, sigma: StrategyProfile) -> bool {
    equilibrium_violation(game, sigma).is_none()
}

/// Expected number of participants in state 1. Only the state-1 marginals
/// enter, so similarity transforms never move this for a fixed profile.
pub fn expected_participation<S: Scalar>(game: &Game<S>, sigma: StrategyProfile) -> S {
    let info = &game.info;
    let total = info.marginal_mass(State::One, sigma.p1)
        + info.marginal_mass(State::One, sigma.p2);
    game.population.mean().clone() * total
}

/// Everything the exhaustive search finds. `maximal` holds every profile
/// attaining `s_star`, in ascending `(p1, p2)` bitmask order, so the first
/// entry is the canonical representative.
#[derive(Debug, Clone)]
pub struct EquilibriumReport<S> {
    pub equilibria: Vec<StrategyProfile>,
    pub maximal: Vec<StrategyProfile>,
    pub s_star: S,
}

impl<S: Scalar> EquilibriumReport<S> {
    pub fn canonical_maximal(&self) -> StrategyProfile {
        self.maximal[0]
    }
}

/// Tests every pair of participation sets and ranks the survivors by
/// expected state-1 turnout.
pub fn enumerate_equilibria<S>(game: &Game<S>) -> Result<EquilibriumReport<S>>
where
    S: Scalar + Send + Sync,
{
    let n = game.n_signals();
    if n > MAX_ENUM_SIGNALS {
        return Err(Error::SizeCapExceeded {
            what: "signals for exhaustive enumeration",
            got: n,
            cap: MAX_ENUM_SIGNALS,
        });
    }
    let tables = IcTables::build(game);
    let full = 1u64 << (2 * n);
    let equilibria: Vec<StrategyProfile> = (0..full)
        .into_par_iter()
        .filter_map(|idx| {
            let sigma = StrategyProfile::new(
                (idx >> n) as Mask,
                (idx & ((1 << n) - 1)) as Mask,
            );
            tables.violation(game, sigma).is_none().then_some(sigma)
        })
        .collect();
    debug_assert!(!equilibria.is_empty(), "the empty profile always survives");

    let mut s_star = S::zero();
    let mut maximal = vec![StrategyProfile::new(0, 0)];
    for &sigma in &equilibria {
        let s = expected_participation(game, sigma);
        if s > s_star {
            s_star = s;
            maximal = vec![sigma];
        } else if s == s_star && sigma != maximal[0] {
            maximal.push(sigma);
        }
    }
    Ok(EquilibriumReport {
        equilibria,
        maximal,
        s_star,
    })
}

/// One round of the symmetrization map: keep `s`, and add every signal
/// whose outside-channel value against `s` already clears the cost.
pub fn t_operator<S: Scalar>(game: &Game<S>, s: Mask) -> Mask {
    let info = &game.info;
    let mut out = s;
    for x in 0..info.len() {
        if mask::contains(s, x) {
            continue;
        }
        let m1x = &info.marginal(State::One)[x];
        if !(*m1x > S::zero()) {
            continue;
        }
        let j = info
            .conditional_mass(State::One, x, s)
            .expect("positive state-1 mass");
        let value = info.posterior(x).clone() * j * game.pivot.lambda_o.clone();
        if value + game.tol.clone() >= game.cost {
            out |= 1 << x;
        }
    }
    out
}

/// Iterates [`t_operator`] to its fixed point (at most `|X|` rounds, since
/// the set can only grow).
pub fn t_star<S: Scalar>(game: &Game<S>, s: Mask) -> Mask {
    let mut cur = s;
    for _ in 0..game.n_signals() {
        let next = t_operator(game, cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

/// How a larger-than-maximal profile is ruled out: either some signal both
/// groups play fails the participation side for one of them, or some signal
/// played by exactly one group hands the other group's type a profitable
/// outside deviation.
#[derive(Debug, Clone, PartialEq)]
pub enum MWitness {
    Overlap {
        profile: StrategyProfile,
        signal: usize,
    },
    OneSided {
        profile: StrategyProfile,
        signal: usize,
        group: usize,
    },
}

#[derive(Debug, Clone)]
pub struct ConditionMReport {
    pub holds: bool,
    /// One witness per profile with turnout above the maximal equilibrium.
    pub witnesses: Vec<MWitness>,
    /// Profiles with larger turnout that no witness rules out; nonempty
    /// exactly when `holds` is false.
    pub unwitnessed: Vec<StrategyProfile>,
}

/// Verifies the ruling-out property behind the discouragement turnout
/// theorem: every profile with strictly larger expected turnout than the
/// maximal equilibrium must carry an [`MWitness`].
pub fn check_condition_m<S>(game: &Game<S>) -> Result<ConditionMReport>
where
    S: Scalar + Send + Sync,
{
    let report = enumerate_equilibria(game)?;
    let s_star = report.s_star;
    let tables = IcTables::build(game);
    let n = game.n_signals();
    let tol = &game.tol;

    let mut witnesses = Vec::new();
    let mut unwitnessed = Vec::new();
    for p1 in 0..(1u32 << n) {
        for p2 in 0..(1u32 << n) {
            let profile = StrategyProfile::new(p1, p2);
            let s = expected_participation(game, profile);
            if !(s > s_star.clone() + tol.clone()) {
                continue;
            }
            match find_m_witness(game, &tables, profile) {
                Some(w) => witnesses.push(w),
                None => unwitnessed.push(profile),
            }
        }
    }
    Ok(ConditionMReport {
        holds: unwitnessed.is_empty(),
        witnesses,
        unwitnessed,
    })
}

fn find_m_witness<S: Scalar>(
    game: &Game<S>,
    tables: &IcTables<S>,
    profile: StrategyProfile,
) -> Option<MWitness> {
    let tol = &game.tol;
    let overlap = profile.p1 & profile.p2;
    for x in mask::members(overlap) {
        if tables.m1_zero[x] {
            return Some(MWitness::Overlap { profile, signal: x });
        }
        let mut min_bracket: Option<S> = None;
        for g in 0..2 {
            let other = profile.group(1 - g);
            let j = &tables.cond1[x][other as usize];
            let bracket = j.clone() * game.pivot.lambda2.clone()
                + (S::one() - j.clone()) * game.pivot.lambda1.clone();
            if min_bracket.as_ref().map_or(true, |m| bracket < *m) {
                min_bracket = Some(bracket);
            }
        }
        let needed = game.cost.clone() / tables.mu[x].clone();
        if min_bracket.unwrap() < needed - tol.clone() {
            return Some(MWitness::Overlap { profile, signal: x });
        }
    }
    if !(game.pivot.lambda_o > S::zero()) {
        return None;
    }
    for x in mask::members(profile.p1 ^ profile.p2) {
        if tables.m1_zero[x] {
            continue;
        }
        let g = if mask::contains(profile.p1, x) { 0 } else { 1 };
        let j = &tables.cond1[x][profile.group(g) as usize];
        let needed = game.cost.clone()
            / (game.pivot.lambda_o.clone() * tables.mu[x].clone());
        if *j > needed + tol.clone() {
            return Some(MWitness::OneSided {
                profile,
                signal: x,
                group: g,
            });
        }
    }
    None
}

/// Cheap screen for the ruling-out property: build the posterior cutoff at
/// the smallest signal whose own-group channel alone clears the cost, and
/// test whether that symmetric cutoff profile is an equilibrium (when no
/// signal clears it, whether the empty profile is maximal).
///
/// This is faster than [`check_condition_m`] but not equivalent to it:
/// instances exist where the cutoff profile is an equilibrium yet some
/// larger profile slips past both witness conditions of the exhaustive
/// check.
pub fn sufficient_condition_m<S>(game: &Game<S>) -> Result<bool>
where
    S: Scalar + Send + Sync,
{
    let order = game.info.posterior_order();
    let cutoff = order.iter().position(|&x| {
        game.info.posterior(x).clone() * game.pivot.lambda1.clone() + game.tol.clone()
            >= game.cost
    });
    match cutoff {
        Some(pos) => {
            let p = mask::from_indices(order[pos..].iter().copied());
            Ok(is_equilibrium(game, StrategyProfile::symmetric(p)))
        }
        None => {
            let report = enumerate_equilibria(game)?;
            Ok(!(report.s_star > S::zero()))
        }
    }
}
