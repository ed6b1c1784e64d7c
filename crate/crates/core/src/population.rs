//! Group sizes, regime resilience, and the three pivotal probabilities.
//!
//! An agent who joins changes the outcome exactly when turnout without her
//! equals the resilience draw. Weighting that event by the resilience pmf
//! gives three numbers: pivotal probability when both groups are in
//! (`lambda2`), when only her own group is in (`lambda1`), and when only the
//! other group is in (`lambda_o`). Whether `lambda2` or `lambda1` is larger
//! decides the whole comparative-statics story, so the classification lives
//! here too.

use std::f64::consts::LN_2;
use std::fmt;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probability mass function on the nonnegative integers, dense from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<S> {
    p: Vec<S>,
}

impl<S: Scalar> Pmf<S> {
    /// Validates nonnegativity and unit mass (within the validation
    /// tolerance, so truncated tails are acceptable).
    pub fn new(p: Vec<S>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::DomainError("pmf must have support".to_string()));
        }
        let mut total = S::zero();
        for (k, v) in p.iter().enumerate() {
            if *v < S::zero() {
                return Err(Error::NegativeMass {
                    i: k,
                    j: k,
                    value: v.to_f64(),
                });
            }
            total = total + v.clone();
        }
        if (total.clone() - S::one()).abs() > S::validation_tol() {
            return Err(Error::NotADistribution {
                what: "pmf".to_string(),
                sum: total.to_f64(),
            });
        }
        Ok(Self { p })
    }

    /// Point mass at `k`.
    pub fn delta(k: usize) -> Self {
        let mut p = vec![S::zero(); k + 1];
        p[k] = S::one();
        Self { p }
    }

    /// Mass at `k`; zero beyond the stored support.
    pub fn get(&self, k: usize) -> S {
        self.p.get(k).cloned().unwrap_or_else(S::zero)
    }

    pub fn support_len(&self) -> usize {
        self.p.len()
    }

    pub fn mean(&self) -> S {
        let mut m = S::zero();
        for (k, v) in self.p.iter().enumerate() {
            m = m + S::from_int(k as i64) * v.clone();
        }
        m
    }

    pub fn cdf_at(&self, k: usize) -> S {
        let mut c = S::zero();
        for v in self.p.iter().take(k + 1) {
            c = c + v.clone();
        }
        c
    }

    /// Distribution of the sum of two independent draws.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut out = vec![S::zero(); self.p.len() + other.p.len() - 1];
        for (i, a) in self.p.iter().enumerate() {
            for (j, b) in other.p.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self { p: out }
    }

    /// Does `self` first-order stochastically dominate `other`?
    /// True iff the cdf of `self` is pointwise ≤ the cdf of `other`.
    pub fn fosd_geq(&self, other: &Self, tol: &S) -> bool {
        let len = self.p.len().max(other.p.len());
        let mut c_self = S::zero();
        let mut c_other = S::zero();
        for k in 0..len {
            c_self = c_self + self.get(k);
            c_other = c_other + other.get(k);
            if c_self > c_other.clone() + tol.clone() {
                return false;
            }
        }
        true
    }
}

/// Poisson density, evaluated in log space so large counts stay finite.
pub fn poisson_pmf(k: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if k == 0 {
        return (-x).exp();
    }
    (k as f64 * x.ln() - x - ln_gamma(k as f64 + 1.0)).exp()
}

pub fn poisson_cdf(k: usize, x: f64) -> f64 {
    let mut c = 0.0;
    for i in 0..=k {
        c += poisson_pmf(i, x);
    }
    c.min(1.0)
}

/// Mean at which a deterministic resilience `theta` sits exactly on the
/// boundary between the two environments: encouragement iff `theta` exceeds
/// `nbar / ln 2`.
pub fn poisson_nstar(nbar: f64) -> f64 {
    nbar / LN_2
}

const TAIL_TARGET: f64 = 1e-12;
const MAX_SUPPORT: usize = 100_000;

/// Dense Poisson pmf, truncated once the captured mass reaches
/// `1 − 1e-12`, with a hard support cap of `10·mean + 200`.
pub fn poisson_pmf_vec(mean: f64) -> Result<Vec<f64>> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::DomainError(format!(
            "Poisson mean must be finite and nonnegative, got {mean}"
        )));
    }
    let cap = (10.0 * mean).ceil() as usize + 200;
    if cap > MAX_SUPPORT {
        return Err(Error::TruncationBudgetExceeded {
            target: 1.0 - TAIL_TARGET,
            cap: MAX_SUPPORT,
        });
    }
    let mut p = Vec::new();
    let mut cdf = 0.0;
    for k in 0..=cap {
        let v = poisson_pmf(k, mean);
        p.push(v);
        cdf += v;
        if cdf >= 1.0 - TAIL_TARGET {
            return Ok(p);
        }
    }
    Err(Error::TruncationBudgetExceeded {
        target: 1.0 - TAIL_TARGET,
        cap,
    })
}

/// How group sizes are drawn. `own` is the number of *other* members an
/// agent sees in her own group; `outside` is the size of the other group.
/// Under Poisson sizes the two coincide.
#[derive(Debug, Clone, PartialEq)]
pub enum PopulationKind {
    Poisson(f64),
    Deterministic(usize),
    Explicit,
}

#[derive(Debug, Clone)]
pub struct PopulationModel<S> {
    kind: PopulationKind,
    own: Pmf<S>,
    outside: Pmf<S>,
    mean: S,
}

impl PopulationModel<f64> {
    pub fn poisson(mean: f64) -> Result<Self> {
        if mean <= 0.0 {
            return Err(Error::DomainError(format!(
                "Poisson population mean must be positive, got {mean}"
            )));
        }
        let pmf = Pmf::new(poisson_pmf_vec(mean)?)?;
        Ok(Self {
            kind: PopulationKind::Poisson(mean),
            own: pmf.clone(),
            outside: pmf,
            mean,
        })
    }
}

impl<S: Scalar> PopulationModel<S> {
    /// Every group has exactly `n ≥ 1` members.
    pub fn deterministic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DomainError(
                "deterministic group size must be at least 1".to_string(),
            ));
        }
        Ok(Self {
            kind: PopulationKind::Deterministic(n),
            own: Pmf::delta(n - 1),
            outside: Pmf::delta(n),
            mean: S::from_int(n as i64),
        })
    }

    /// User-supplied pair of pmfs. The engine cannot derive one from the
    /// other outside the Poisson case, so both are required and taken on
    /// trust.
    pub fn explicit(own: Pmf<S>, outside: Pmf<S>) -> Self {
        let mean = outside.mean();
        Self {
            kind: PopulationKind::Explicit,
            own,
            outside,
            mean,
        }
    }

    pub fn kind(&self) -> &PopulationKind {
        &self.kind
    }

    pub fn own(&self) -> &Pmf<S> {
        &self.own
    }

    pub fn outside(&self) -> &Pmf<S> {
        &self.outside
    }

    /// Mean group size as seen from outside.
    pub fn mean(&self) -> &S {
        &self.mean
    }
}

/// Distribution of the resilience draw: the regime survives any turnout up
/// to and including it.
#[derive(Debug, Clone)]
pub struct ThresholdModel<S> {
    kind: ThresholdKind,
    rho: Pmf<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    Deterministic(usize),
    Explicit,
}

impl<S: Scalar> ThresholdModel<S> {
    pub fn deterministic(theta: usize) -> Self {
        Self {
            kind: ThresholdKind::Deterministic(theta),
            rho: Pmf::delta(theta),
        }
    }

    pub fn explicit(rho: Pmf<S>) -> Self {
        Self {
            kind: ThresholdKind::Explicit,
            rho,
        }
    }

    pub fn kind(&self) -> ThresholdKind {
        self.kind
    }

    pub fn rho(&self) -> &Pmf<S> {
        &self.rho
    }
}

/// Which pivotal channel dominates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Environment {
    Encouragement,
    Discouragement,
    KnifeEdge,
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Environment::Encouragement => "encouragement",
            Environment::Discouragement => "discouragement",
            Environment::KnifeEdge => "knife-edge",
        };
        f.write_str(s)
    }
}

/// The three pivotal probabilities and their classification.
#[derive(Debug, Clone)]
pub struct PivotalProfile<S> {
    pub lambda2: S,
    pub lambda1: S,
    pub lambda_o: S,
    pub environment: Environment,
    /// max{Λ₁, Λ₂} ≥ Λₒ. Computation proceeds either way, but theorem
    /// suites skip instances where this fails.
    pub assumption1_holds: bool,
}

/// Weighted sums of the size pmfs against the resilience pmf.
///
/// For Poisson sizes with a deterministic threshold this reproduces the
/// closed form (ψ(θ̄,2N̄), ψ(θ̄,N̄), ψ(θ̄,N̄)) to within 1e-12.
pub fn pivotal_profile<S: Scalar>(
    pop: &PopulationModel<S>,
    thr: &ThresholdModel<S>,
) -> PivotalProfile<S> {
    let rho = thr.rho();
    let both = pop.own().convolve(pop.outside());
    let mut lambda2 = S::zero();
    let mut lambda1 = S::zero();
    let mut lambda_o = S::zero();
    for k in 0..rho.support_len() {
        let w = rho.get(k);
        lambda2 = lambda2 + w.clone() * both.get(k);
        lambda1 = lambda1 + w.clone() * pop.own().get(k);
        lambda_o = lambda_o + w * pop.outside().get(k);
    }
    let environment = classify(&lambda2, &lambda1);
    let max = if lambda1 > lambda2 {
        lambda1.clone()
    } else {
        lambda2.clone()
    };
    let assumption1_holds = max + S::order_tol() >= lambda_o;
    PivotalProfile {
        lambda2,
        lambda1,
        lambda_o,
        environment,
        assumption1_holds,
    }
}

fn classify<S: Scalar>(lambda2: &S, lambda1: &S) -> Environment {
    let tol = S::order_tol();
    if (lambda2.clone() - lambda1.clone()).abs() <= tol {
        Environment::KnifeEdge
    } else if *lambda2 > *lambda1 {
        Environment::Encouragement
    } else {
        Environment::Discouragement
    }
}

/// Scans a resilience ladder (sorted by first-order stochastic dominance)
/// and reports whether `Λ₂ − Λ₁` crosses from negative to nonnegative at
/// most once — i.e. once the sum channel dominates, it keeps dominating as
/// the regime hardens.
pub fn check_single_crossing<S: Scalar>(
    pop: &PopulationModel<S>,
    thresholds: &[ThresholdModel<S>],
) -> Result<bool> {
    let tol = S::order_tol();
    for i in 1..thresholds.len() {
        if !thresholds[i].rho().fosd_geq(thresholds[i - 1].rho(), &tol) {
            return Err(Error::NotFOSDOrdered { index: i });
        }
    }
    let mut crossed = false;
    for thr in thresholds {
        let p = pivotal_profile(pop, thr);
        let d = p.lambda2 - p.lambda1;
        if d >= -tol.clone() {
            crossed = true;
        } else if crossed {
            return Ok(false);
        }
    }
    Ok(true)
}
