//! Costly voting on a committee.
//!
//! G members each see a binary signal about the state and vote for a rate
//! hike or not; the hike passes with at least `theta_bar + 1` votes.
//! Exchangeability makes the state-1 vote-count distribution a sufficient
//! description: a voter with a high signal sizes up the other G-1 votes
//! through a tilted version of that count law, and the threshold rule's
//! incentive constraint reads straight off it.

use serde::Deserialize;

use crate::error::{Error, Result};

/// Cap on the explicit-joint constructor: 2^20 signal profiles.
pub const MAX_JOINT_PROFILES: usize = 1 << 20;

const COUNT_TOL: f64 = 1e-12;
const MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CommitteeModel {
    size: usize,
    count_pmf: Vec<f64>,
    prior: f64,
    marginal1: f64,
    marginal0: f64,
    cost: f64,
    theta_bar: usize,
}

/// JSON form of a committee model.
#[derive(Debug, Clone, Deserialize)]
pub struct CommitteeSpec {
    #[serde(rename = "G")]
    pub g: usize,
    pub count_pmf: Vec<f64>,
    pub prior: f64,
    pub marginal1: f64,
    pub marginal0: f64,
    pub cost: f64,
    pub theta_bar: usize,
}

impl CommitteeModel {
    /// Builds and validates a model from its canonical pieces: the state-1
    /// count distribution over {0..G} plus the scalar parameters.
    pub fn new(
        size: usize,
        count_pmf: Vec<f64>,
        prior: f64,
        marginal1: f64,
        marginal0: f64,
        cost: f64,
        theta_bar: usize,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if size <= 2 {
            problems.push(format!("committee size {size} must exceed 2"));
        }
        if count_pmf.len() != size + 1 {
            problems.push(format!(
                "count distribution needs {} entries for {size} members, got {}",
                size + 1,
                count_pmf.len()
            ));
        }
        if count_pmf.iter().any(|p| *p < 0.0) {
            problems.push("count distribution has a negative entry".to_string());
        }
        if !(0.0 < prior && prior < 1.0) {
            problems.push(format!("prior {prior} must lie strictly inside (0, 1)"));
        }
        for (name, m) in [("state-1", marginal1), ("state-0", marginal0)] {
            if !(0.0..=1.0).contains(&m) {
                problems.push(format!("{name} marginal {m} must lie in [0, 1]"));
            }
        }
        if cost <= 0.0 {
            problems.push(format!("cost {cost} must be positive"));
        }
        if theta_bar >= size.max(1) {
            problems.push(format!(
                "vote threshold {theta_bar} leaves no room among {size} members"
            ));
        }
        if !problems.is_empty() {
            return Err(Error::ValidationError(problems));
        }
        let total: f64 = count_pmf.iter().sum();
        if (total - 1.0).abs() > COUNT_TOL {
            return Err(Error::NotADistribution {
                what: "state-1 vote count distribution".to_string(),
                sum: total,
            });
        }
        let mean: f64 = count_pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        if (marginal1 - mean / size as f64).abs() > MARGINAL_TOL {
            return Err(Error::ValidationError(vec![format!(
                "state-1 marginal {marginal1} disagrees with the count mean {} over {size} members",
                mean / size as f64
            )]));
        }
        let model = Self {
            size,
            count_pmf,
            prior,
            marginal1,
            marginal0,
            cost,
            theta_bar,
        };
        let mu0 = model.mu0();
        if mu0 > 0.0 && cost / mu0 <= 1.0 {
            return Err(Error::DomainError(format!(
                "cost {cost} must exceed the low-signal posterior {mu0} so low signals stay home"
            )));
        }
        Ok(model)
    }

    pub fn from_spec(spec: &CommitteeSpec) -> Result<Self> {
        Self::new(
            spec.g,
            spec.count_pmf.clone(),
            spec.prior,
            spec.marginal1,
            spec.marginal0,
            spec.cost,
            spec.theta_bar,
        )
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: CommitteeSpec =
            serde_json::from_str(s).map_err(|e| Error::ParseError(e.to_string()))?;
        Self::from_spec(&spec)
    }

    /// Builds the model from an explicit state-1 distribution over all
    /// 2^G signal profiles, indexed by bitmask. The distribution must be
    /// exchangeable: profiles with the same number of high signals carry
    /// the same probability.
    pub fn from_joint(
        size: usize,
        joint: &[f64],
        prior: f64,
        marginal0: f64,
        cost: f64,
        theta_bar: usize,
    ) -> Result<Self> {
        let profiles = 1usize
            .checked_shl(size as u32)
            .filter(|p| *p <= MAX_JOINT_PROFILES)
            .ok_or(Error::SizeCapExceeded {
                what: "committee signal profiles",
                got: size,
                cap: 20,
            })?;
        if joint.len() != profiles {
            return Err(Error::ValidationError(vec![format!(
                "profile distribution needs {profiles} entries, got {}",
                joint.len()
            )]));
        }
        let mut class_rep: Vec<Option<(usize, f64)>> = vec![None; size + 1];
        let mut count_pmf = vec![0.0; size + 1];
        for (profile, &mass) in joint.iter().enumerate() {
            let k = profile.count_ones() as usize;
            match class_rep[k] {
                None => class_rep[k] = Some((profile, mass)),
                Some((first, first_mass)) => {
                    if (mass - first_mass).abs() > COUNT_TOL {
                        return Err(Error::NotExchangeable {
                            state: "1",
                            i: first,
                            j: profile,
                            gap: (mass - first_mass).abs(),
                        });
                    }
                }
            }
            count_pmf[k] += mass;
        }
        let mean: f64 = count_pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        Self::new(
            size,
            count_pmf,
            prior,
            mean / size as f64,
            marginal0,
            cost,
            theta_bar,
        )
    }

    /// Builds the count distribution backwards from a target conditional
    /// vote law `gamma` and a mean vote count: the class probabilities are
    /// `gamma[k] * mean / (k + 1)` with the remainder at zero votes.
    pub fn from_gamma_given_one(
        size: usize,
        gamma: &[f64],
        mean_count: f64,
        prior: f64,
        marginal0: f64,
        cost: f64,
        theta_bar: usize,
    ) -> Result<Self> {
        if gamma.len() != size {
            return Err(Error::ValidationError(vec![format!(
                "conditional vote law needs {size} entries, got {}",
                gamma.len()
            )]));
        }
        let mut count_pmf = vec![0.0; size + 1];
        for (k, g) in gamma.iter().enumerate() {
            count_pmf[k + 1] = g * mean_count / (k + 1) as f64;
        }
        let rest: f64 = count_pmf[1..].iter().sum();
        if rest > 1.0 + COUNT_TOL {
            return Err(Error::ValidationError(vec![format!(
                "mean count {mean_count} is too large for this vote law (mass {rest} above zero)"
            )]));
        }
        count_pmf[0] = (1.0 - rest).max(0.0);
        Self::new(
            size,
            count_pmf,
            prior,
            mean_count / size as f64,
            marginal0,
            cost,
            theta_bar,
        )
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn count_pmf(&self) -> &[f64] {
        &self.count_pmf
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn theta_bar(&self) -> usize {
        self.theta_bar
    }

    pub fn marginal1(&self) -> f64 {
        self.marginal1
    }

    pub fn marginal0(&self) -> f64 {
        self.marginal0
    }

    /// Posterior that the state is 1 after a high signal.
    pub fn mu1(&self) -> f64 {
        let num = self.prior * self.marginal1;
        let den = num + (1.0 - self.prior) * self.marginal0;
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Posterior that the state is 1 after a low signal.
    pub fn mu0(&self) -> f64 {
        let num = self.prior * (1.0 - self.marginal1);
        let den = num + (1.0 - self.prior) * (1.0 - self.marginal0);
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    fn mean_count(&self) -> f64 {
        self.count_pmf
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    pub fn with_theta_bar(&self, theta_bar: usize) -> Result<Self> {
        if theta_bar >= self.size {
            return Err(Error::ValidationError(vec![format!(
                "vote threshold {theta_bar} leaves no room among {} members",
                self.size
            )]));
        }
        let mut m = self.clone();
        m.theta_bar = theta_bar;
        Ok(m)
    }
}

/// Distribution of the other G-1 high-signal votes, seen by a member whose
/// own signal is high, in state 1: `(k+1) P(I = k+1) / E[I]`.
pub fn gamma_given_one(model: &CommitteeModel) -> Result<Vec<f64>> {
    let mean = model.mean_count();
    if mean == 0.0 {
        return Err(Error::DegenerateModel(
            "no member ever sees a high signal in state 1".to_string(),
        ));
    }
    Ok((0..model.size())
        .map(|k| (k + 1) as f64 * model.count_pmf()[k + 1] / mean)
        .collect())
}

fn ic_holds_at(model: &CommitteeModel, theta_bar: usize) -> Result<bool> {
    let gamma = gamma_given_one(model)?;
    let mu1 = model.mu1();
    if mu1 == 0.0 {
        return Ok(false);
    }
    Ok(gamma[theta_bar] >= model.cost() / mu1)
}

/// Whether sincere voting on the high signal is an equilibrium: the
/// pivotal-vote probability must cover the cost-to-posterior ratio.
pub fn is_sigma1_equilibrium(model: &CommitteeModel) -> Result<bool> {
    ic_holds_at(model, model.theta_bar())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignChange {
    /// Smallest valid split index.
    pub k_star: usize,
    /// Every index that splits the comparison correctly.
    pub valid: Vec<usize>,
    /// The two conditional vote laws coincide; any index splits them.
    pub equal: bool,
}

/// Looks for the single sign change that orders two committees'
/// conditional vote laws: below the index the first lies weakly under the
/// second, above it weakly over. Returns all valid split points, or `None`
/// when the difference changes sign more than once.
pub fn cad_sign_change(
    j1: &CommitteeModel,
    jhat1: &CommitteeModel,
) -> Result<Option<SignChange>> {
    if j1.size() != jhat1.size() {
        return Err(Error::DomainError(format!(
            "cannot compare committees of sizes {} and {}",
            j1.size(),
            jhat1.size()
        )));
    }
    let g = gamma_given_one(j1)?;
    let ghat = gamma_given_one(jhat1)?;
    let d: Vec<f64> = g.iter().zip(&ghat).map(|(a, b)| a - b).collect();
    if d.iter().all(|v| v.abs() <= COUNT_TOL) {
        let size = j1.size();
        return Ok(Some(SignChange {
            k_star: size - 2,
            valid: (0..=size - 2).collect(),
            equal: true,
        }));
    }
    let valid: Vec<usize> = (0..=j1.size() - 2)
        .filter(|&k| {
            d[..=k].iter().all(|v| *v <= COUNT_TOL)
                && d[k + 1..].iter().all(|v| *v >= -COUNT_TOL)
        })
        .collect();
    Ok(valid.first().copied().map(|k_star| SignChange {
        k_star,
        valid,
        equal: false,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityEffect {
    /// Sincere voting survives the move to the more similar committee.
    Preserved,
    /// The split point sits at or above the vote threshold, so the pivotal
    /// probability may have fallen; the direct re-check is attached.
    NotGuaranteed { sigma1_still_equilibrium: bool },
}

/// Effect of moving from committee `jhat1` to the more similar `j1` on the
/// sincere-voting equilibrium under the rule "hike with at least
/// `theta_bar + 1` votes".
pub fn similarity_effect(
    j1: &CommitteeModel,
    jhat1: &CommitteeModel,
    theta_bar: usize,
) -> Result<SimilarityEffect> {
    let change = cad_sign_change(j1, jhat1)?.ok_or_else(|| {
        Error::NotCadComparable(
            "the conditional vote laws cross more than once".to_string(),
        )
    })?;
    if change.equal || change.k_star < theta_bar {
        return Ok(SimilarityEffect::Preserved);
    }
    Ok(SimilarityEffect::NotGuaranteed {
        sigma1_still_equilibrium: ic_holds_at(j1, theta_bar)?,
    })
}

/// Smallest vote threshold at which sincere voting is an equilibrium, if
/// any.
pub fn optimal_threshold(model: &CommitteeModel) -> Result<Option<usize>> {
    let gamma = gamma_given_one(model)?;
    let mu1 = model.mu1();
    if mu1 == 0.0 {
        return Ok(None);
    }
    let need = model.cost() / mu1;
    Ok(gamma.iter().position(|g| *g >= need))
}
