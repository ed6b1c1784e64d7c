//! Mobilization with more than two groups.
//!
//! Signals live on a common alphabet and the state-1 joint is an
//! exchangeable distribution over `X^G`, stored densely in mixed radix
//! with the first group's signal as the most significant digit. Group
//! sizes are Poisson with a common mean and the regime's resilience is a
//! fixed threshold, so a symmetric profile's incentive constraints reduce
//! to sums over how many other groups mobilize.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mask::{self, Mask};
use crate::population::poisson_pmf;

pub const MAX_GROUPS: usize = 6;
pub const MAX_GROUP_SIGNALS: usize = 5;

const MASS_TOL: f64 = 1e-12;
const MARGINAL_TOL: f64 = 1e-9;
const IC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiGroupScenario {
    groups: usize,
    n_signals: usize,
    joint1: Vec<f64>,
    marginal1: Vec<f64>,
    marginal0: Vec<f64>,
    prior: f64,
    nbar: f64,
    theta_bar: usize,
    cost: f64,
    tol: f64,
}

/// JSON form: the tensor is flattened with the first group's signal as
/// the most significant digit and the alphabet size read off `marginal0`.
#[derive(Debug, Clone, Deserialize)]
pub struct MultiGroupSpec {
    #[serde(rename = "G")]
    pub g: usize,
    pub joint1: Vec<f64>,
    pub prior: f64,
    pub marginal0: Vec<f64>,
    pub nbar: f64,
    pub theta_bar: usize,
    pub cost: f64,
}

fn decode(mut idx: usize, n: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
}

fn encode(digits: &[usize], n: usize) -> usize {
    digits.iter().fold(0, |acc, d| acc * n + d)
}

fn is_constant(mut idx: usize, n: usize, groups: usize) -> bool {
    let first = idx % n;
    for _ in 0..groups {
        if idx % n != first {
            return false;
        }
        idx /= n;
    }
    true
}

impl MultiGroupScenario {
    pub fn new(
        groups: usize,
        joint1: Vec<f64>,
        prior: f64,
        marginal0: Vec<f64>,
        nbar: f64,
        theta_bar: usize,
        cost: f64,
    ) -> Result<Self> {
        if groups > MAX_GROUPS {
            return Err(Error::SizeCapExceeded {
                what: "group count",
                got: groups,
                cap: MAX_GROUPS,
            });
        }
        let n_signals = marginal0.len();
        if n_signals > MAX_GROUP_SIGNALS {
            return Err(Error::SizeCapExceeded {
                what: "signal alphabet",
                got: n_signals,
                cap: MAX_GROUP_SIGNALS,
            });
        }
        let mut problems = Vec::new();
        if groups < 2 {
            problems.push(format!("group count {groups} must be at least 2"));
        }
        if n_signals == 0 {
            problems.push("signal alphabet is empty".to_string());
        }
        if !(0.0 < prior && prior < 1.0) {
            problems.push(format!("prior {prior} must lie strictly inside (0, 1)"));
        }
        if !(nbar > 0.0) {
            problems.push(format!("group size mean {nbar} must be positive"));
        }
        if theta_bar == 0 {
            problems.push("resilience threshold must be at least 1".to_string());
        }
        if cost <= 0.0 {
            problems.push(format!("cost {cost} must be positive"));
        }
        if marginal0.iter().any(|m| *m < 0.0) {
            problems.push("state-0 marginal has a negative entry".to_string());
        }
        if joint1.iter().any(|m| *m < 0.0) {
            problems.push("state-1 joint has a negative entry".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::ValidationError(problems));
        }
        let cells = n_signals.pow(groups as u32);
        if joint1.len() != cells {
            return Err(Error::ValidationError(vec![format!(
                "state-1 joint needs {cells} entries for {groups} groups over {n_signals} signals, got {}",
                joint1.len()
            )]));
        }
        let total: f64 = joint1.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::NotADistribution {
                what: "state-1 joint".to_string(),
                sum: total,
            });
        }
        let m0_total: f64 = marginal0.iter().sum();
        if (m0_total - 1.0).abs() > MASS_TOL {
            return Err(Error::NotADistribution {
                what: "state-0 marginal".to_string(),
                sum: m0_total,
            });
        }

        // Invariance under adjacent transpositions implies invariance
        // under every permutation, so this check is exhaustive.
        let mut digits = vec![0usize; groups];
        for swap_at in 0..groups.saturating_sub(1) {
            for idx in 0..cells {
                decode(idx, n_signals, &mut digits);
                digits.swap(swap_at, swap_at + 1);
                let other = encode(&digits, n_signals);
                let gap = (joint1[idx] - joint1[other]).abs();
                if gap > MASS_TOL {
                    return Err(Error::NotExchangeable {
                        state: "1",
                        i: idx,
                        j: other,
                        gap,
                    });
                }
            }
        }

        let mut marginal1 = vec![0.0; n_signals];
        let block = cells / n_signals;
        for (idx, mass) in joint1.iter().enumerate() {
            marginal1[idx / block] += mass;
        }
        for x in 0..n_signals {
            if marginal1[x] + marginal0[x] == 0.0 {
                return Err(Error::ValidationError(vec![format!(
                    "signal {x} occurs in neither state"
                )]));
            }
        }

        Ok(Self {
            groups,
            n_signals,
            joint1,
            marginal1,
            marginal0,
            prior,
            nbar,
            theta_bar,
            cost,
            tol: IC_TOL,
        })
    }

    pub fn from_spec(spec: &MultiGroupSpec) -> Result<Self> {
        Self::new(
            spec.g,
            spec.joint1.clone(),
            spec.prior,
            spec.marginal0.clone(),
            spec.nbar,
            spec.theta_bar,
            spec.cost,
        )
    }

    pub fn from_value(value: &serde_json::Value) -> Result<Self> {
        let spec: MultiGroupSpec = serde_json::from_value(value.clone())
            .map_err(|e| Error::ParseError(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn n_signals(&self) -> usize {
        self.n_signals
    }

    pub fn joint1(&self) -> &[f64] {
        &self.joint1
    }

    pub fn marginal1(&self) -> &[f64] {
        &self.marginal1
    }

    pub fn marginal0(&self) -> &[f64] {
        &self.marginal0
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    pub fn theta_bar(&self) -> usize {
        self.theta_bar
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Posterior that the state is 1 given one group's signal.
    pub fn posterior(&self, x: usize) -> f64 {
        let num = self.prior * self.marginal1[x];
        num / (num + (1.0 - self.prior) * self.marginal0[x])
    }

    /// State-1 mass of a signal set under the per-group marginal.
    pub fn set_mass(&self, t: Mask) -> f64 {
        mask::members(t).map(|x| self.marginal1[x]).sum()
    }

    /// Expected mobilization of a symmetric profile across all groups.
    pub fn participation(&self, p: Mask) -> f64 {
        self.groups as f64 * self.nbar * self.set_mass(p)
    }

    fn psi_table(&self) -> Vec<f64> {
        (0..=self.groups)
            .map(|j| poisson_pmf(self.theta_bar, j as f64 * self.nbar))
            .collect()
    }
}

/// Similarity comparison for many groups: `j1` counts as weakly more
/// similar than `jhat1` when it has no more mass on any profile whose
/// signals disagree somewhere. Requires identical per-group marginals.
pub fn meyer_geq(j1: &MultiGroupScenario, jhat1: &MultiGroupScenario) -> Result<bool> {
    if j1.groups != jhat1.groups || j1.n_signals != jhat1.n_signals {
        return Err(Error::DomainError(format!(
            "cannot compare shapes ({} groups, {} signals) and ({} groups, {} signals)",
            j1.groups, j1.n_signals, jhat1.groups, jhat1.n_signals
        )));
    }
    for x in 0..j1.n_signals {
        let (left, right) = (j1.marginal1[x], jhat1.marginal1[x]);
        if (left - right).abs() > MARGINAL_TOL {
            return Err(Error::MarginalMismatch { x, left, right });
        }
    }
    Ok(j1
        .joint1
        .iter()
        .zip(&jhat1.joint1)
        .enumerate()
        .all(|(idx, (a, b))| {
            is_constant(idx, j1.n_signals, j1.groups) || *a <= *b + MASS_TOL
        }))
}

/// Distribution of the number of other groups whose signal falls in `t`,
/// given one group's own signal `x`, in state 1.
pub fn count_conditional(sc: &MultiGroupScenario, x: usize, t: Mask) -> Result<Vec<f64>> {
    if sc.marginal1[x] == 0.0 {
        return Err(Error::ZeroMassSignal { x, state: Some("1") });
    }
    let n = sc.n_signals;
    let block = sc.joint1.len() / n;
    let mut pmf = vec![0.0; sc.groups];
    let mut digits = vec![0usize; sc.groups];
    for offset in 0..block {
        let idx = x * block + offset;
        decode(idx, n, &mut digits);
        let k = digits[1..]
            .iter()
            .filter(|d| mask::contains(t, **d))
            .count();
        pmf[k] += sc.joint1[idx];
    }
    for p in &mut pmf {
        *p /= sc.marginal1[x];
    }
    Ok(pmf)
}

fn participation_bracket(psi: &[f64], counts: &[f64], own_in: bool) -> f64 {
    counts
        .iter()
        .enumerate()
        .map(|(k, w)| w * psi[k + usize::from(own_in)])
        .sum()
}

/// Checks the two incentive constraints of a symmetric cutoff profile:
/// types inside `p` must clear the cost through the pivotal sum that
/// includes their own group, types outside must not want in through the
/// sum that excludes it.
pub fn is_symmetric_equilibrium_g(sc: &MultiGroupScenario, p: Mask) -> Result<bool> {
    if p >> sc.n_signals != 0 {
        return Err(Error::DomainError(format!(
            "profile {p:#b} uses signals beyond the {}-letter alphabet",
            sc.n_signals
        )));
    }
    let psi = sc.psi_table();
    for x in 0..sc.n_signals {
        let in_p = mask::contains(p, x);
        if sc.marginal1[x] == 0.0 {
            // Posterior zero: mobilizing burns the cost for nothing.
            if in_p {
                return Ok(false);
            }
            continue;
        }
        let counts = count_conditional(sc, x, p)?;
        let bracket = participation_bracket(&psi, &counts, in_p);
        let need = sc.cost / sc.posterior(x);
        if in_p {
            if bracket < need - sc.tol {
                return Ok(false);
            }
        } else if bracket > need + sc.tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest-turnout symmetric equilibrium: the cutoff set and its expected
/// mobilization, ties broken toward the smaller set.
pub fn maximal_symmetric_g(sc: &MultiGroupScenario) -> Result<(Mask, f64)> {
    let mut best: Option<(Mask, f64)> = None;
    for p in 0..(1u32 << sc.n_signals) {
        if !is_symmetric_equilibrium_g(sc, p)? {
            continue;
        }
        let s = sc.participation(p);
        let better = match best {
            None => true,
            Some((_, s_best)) => s > s_best + sc.tol,
        };
        if better {
            best = Some((p, s));
        }
    }
    best.ok_or_else(|| {
        Error::DegenerateModel("no symmetric equilibrium found".to_string())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupRegime {
    /// Full mobilization carries the largest pivotal weight.
    Encouragement,
    /// Full mobilization carries the smallest pivotal weight.
    Discouragement,
    /// All pivotal weights coincide within tolerance.
    KnifeEdge,
    /// Neither ranking holds; the comparative statics are silent here.
    Mixed,
}

/// Ranks the pivotal weight of full mobilization against every partial
/// count, which decides the direction similarity pushes turnout.
pub fn group_regime(sc: &MultiGroupScenario) -> GroupRegime {
    let psi = sc.psi_table();
    let full = psi[sc.groups];
    let partial = &psi[1..sc.groups];
    let geq = partial.iter().all(|v| full >= v - sc.tol);
    let leq = partial.iter().all(|v| full <= v + sc.tol);
    match (geq, leq) {
        (true, true) => GroupRegime::KnifeEdge,
        (true, false) => GroupRegime::Encouragement,
        (false, true) => GroupRegime::Discouragement,
        (false, false) => GroupRegime::Mixed,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupMWitness {
    pub profile: Mask,
    pub signal: usize,
}

#[derive(Debug, Clone)]
pub struct GroupConditionMReport {
    pub holds: bool,
    pub p_star: Mask,
    pub s_star: f64,
    pub witnesses: Vec<GroupMWitness>,
    pub unwitnessed: Vec<Mask>,
}

/// Symmetric-profile version of the ruling-out property: every cutoff set
/// with more turnout than the maximal equilibrium must contain a signal
/// whose participation constraint fails.
pub fn check_condition_m_g(sc: &MultiGroupScenario) -> Result<GroupConditionMReport> {
    let (p_star, s_star) = maximal_symmetric_g(sc)?;
    let m_star = sc.set_mass(p_star);
    let psi = sc.psi_table();
    let mut witnesses = Vec::new();
    let mut unwitnessed = Vec::new();
    for p in 0..(1u32 << sc.n_signals) {
        if sc.set_mass(p) <= m_star + sc.tol {
            continue;
        }
        let witness = mask::members(p).find(|&x| {
            if sc.marginal1[x] == 0.0 {
                return true;
            }
            let counts = count_conditional(sc, x, p).expect("positive marginal");
            let bracket = participation_bracket(&psi, &counts, true);
            bracket < sc.cost / sc.posterior(x) - sc.tol
        });
        match witness {
            Some(signal) => witnesses.push(GroupMWitness { profile: p, signal }),
            None => unwitnessed.push(p),
        }
    }
    Ok(GroupConditionMReport {
        holds: unwitnessed.is_empty(),
        p_star,
        s_star,
        witnesses,
        unwitnessed,
    })
}

/// Moves `epsilon` of probability off a non-constant signal pattern's
/// permutation orbit and onto the constant profiles, weighting each
/// constant by how often its letter appears in the pattern. Marginals and
/// exchangeability are preserved, and the result is weakly more similar.
pub fn meyer_transfer(
    sc: &MultiGroupScenario,
    pattern: &[usize],
    epsilon: f64,
) -> Result<MultiGroupScenario> {
    let (groups, n) = (sc.groups, sc.n_signals);
    if pattern.len() != groups {
        return Err(Error::DomainError(format!(
            "pattern length {} does not match {groups} groups",
            pattern.len()
        )));
    }
    if pattern.iter().any(|d| *d >= n) {
        return Err(Error::DomainError(format!(
            "pattern {pattern:?} uses signals beyond the {n}-letter alphabet"
        )));
    }
    if pattern.iter().all(|d| *d == pattern[0]) {
        return Err(Error::DomainError(
            "pattern is constant; there is no dissimilar mass to move".to_string(),
        ));
    }
    if epsilon < 0.0 {
        return Err(Error::DomainError(format!(
            "transfer amount {epsilon} must be nonnegative"
        )));
    }

    let mut letter_counts = vec![0usize; n];
    for d in pattern {
        letter_counts[*d] += 1;
    }
    let mut digits = vec![0usize; groups];
    let mut orbit = Vec::new();
    let mut orbit_mass = 0.0;
    for idx in 0..sc.joint1.len() {
        decode(idx, n, &mut digits);
        let mut counts = vec![0usize; n];
        for d in &digits {
            counts[*d] += 1;
        }
        if counts == letter_counts {
            orbit.push(idx);
            orbit_mass += sc.joint1[idx];
        }
    }
    if epsilon > orbit_mass + MASS_TOL {
        return Err(Error::DomainError(format!(
            "transfer amount {epsilon} exceeds the orbit mass {orbit_mass}"
        )));
    }

    let mut joint1 = sc.joint1.clone();
    let scale = if orbit_mass > 0.0 {
        (orbit_mass - epsilon).max(0.0) / orbit_mass
    } else {
        1.0
    };
    for idx in orbit {
        joint1[idx] *= scale;
    }
    for (a, count) in letter_counts.iter().enumerate() {
        if *count == 0 {
            continue;
        }
        let constant_idx = encode(&vec![a; groups], n);
        joint1[constant_idx] += epsilon * *count as f64 / groups as f64;
    }

    MultiGroupScenario::new(
        groups,
        joint1,
        sc.prior,
        sc.marginal0.clone(),
        sc.nbar,
        sc.theta_bar,
        sc.cost,
    )
}

/// Product joint: groups draw signals independently from `marginal1`.
pub fn ci_joint(groups: usize, marginal1: &[f64]) -> Vec<f64> {
    let n = marginal1.len();
    let mut digits = vec![0usize; groups];
    (0..n.pow(groups as u32))
        .map(|idx| {
            decode(idx, n, &mut digits);
            digits.iter().map(|d| marginal1[*d]).product()
        })
        .collect()
}

/// Lockstep joint: all groups share one signal drawn from `marginal1`.
pub fn fc_joint(groups: usize, marginal1: &[f64]) -> Vec<f64> {
    let n = marginal1.len();
    let mut joint = vec![0.0; n.pow(groups as u32)];
    for (a, m) in marginal1.iter().enumerate() {
        joint[encode(&vec![a; groups], n)] = *m;
    }
    joint
}
