//! Seeded Monte Carlo oracle for the analytic quantities.
//!
//! Every closed form in this crate has a sampling counterpart here: draw the
//! state, the signal pair, the group sizes, and the resilience, then tally
//! turnout, success, and realized welfare. Each trial owns a counter-derived
//! RNG stream and trials are reduced in fixed-size chunks, so reports are
//! bit-identical for a given `(scenario, strategy, config)` regardless of
//! how many worker threads happen to run them.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Poisson};
use rayon::prelude::*;

use crate::equilibrium::StrategyProfile;
use crate::error::{Error, Result};
use crate::mask;
use crate::population::{PopulationKind, ThresholdKind};
use crate::scenario::Game;
use crate::signal::State;

/// Participation rule handed to the simulator: either a bitmask profile or
/// per-signal participation probabilities for each group.
#[derive(Debug, Clone)]
pub enum SimStrategy {
    Pure(StrategyProfile),
    Mixed { p1: Vec<f64>, p2: Vec<f64> },
}

impl SimStrategy {
    pub fn pure(sigma: StrategyProfile) -> Self {
        SimStrategy::Pure(sigma)
    }

    fn prob(&self, g: usize, x: usize) -> f64 {
        match self {
            SimStrategy::Pure(sigma) => {
                if mask::contains(sigma.group(g), x) {
                    1.0
                } else {
                    0.0
                }
            }
            SimStrategy::Mixed { p1, p2 } => {
                if g == 0 {
                    p1[x]
                } else {
                    p2[x]
                }
            }
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if let SimStrategy::Mixed { p1, p2 } = self {
            for probs in [p1, p2] {
                if probs.len() != n {
                    return Err(Error::DomainError(format!(
                        "mixed strategy needs one probability per signal ({n}), got {}",
                        probs.len()
                    )));
                }
                if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(Error::DomainError(format!(
                        "participation probability {bad} is outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    /// When set (the default), turnout and success are sampled directly in
    /// state 1 and a separate prior-weighted pass estimates welfare. When
    /// clear, a single ex-ante pass feeds all estimators, conditioning on
    /// the state-1 trials it happens to draw.
    pub condition_on_state1: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 0,
            condition_on_state1: true,
        }
    }
}

/// Sample mean with its standard error and the number of samples behind it.
/// `n = 0` leaves `value` and `se` as NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Turnout in state 1.
    pub s: Estimate,
    /// Success probability in state 1.
    pub pi: Estimate,
    /// Success probability in state 1 among trials with positive turnout.
    pub cond: Estimate,
    /// Ex-ante per-agent welfare.
    pub welfare: Estimate,
}

struct Samplers {
    joint: [WeightedIndex<f64>; 2],
    n_signals: usize,
    prior: f64,
    size: SizeSampler,
    thr: ThrSampler,
    cost: f64,
}

enum SizeSampler {
    Poisson(Poisson<f64>),
    Fixed(u64),
    Table(WeightedIndex<f64>),
}

enum ThrSampler {
    Fixed(u64),
    Table(WeightedIndex<f64>),
}

impl Samplers {
    fn build(game: &Game<f64>) -> Result<Self> {
        let info = &game.info;
        let n = info.len();
        let cells = |state: State| -> Result<WeightedIndex<f64>> {
            let j = info.joint(state);
            let flat: Vec<f64> = (0..n * n).map(|i| *j.entry(i / n, i % n)).collect();
            WeightedIndex::new(flat)
                .map_err(|e| Error::DomainError(format!("cannot sample joint: {e}")))
        };
        let size = match game.population.kind() {
            PopulationKind::Poisson(mean) => SizeSampler::Poisson(
                Poisson::new(*mean)
                    .map_err(|e| Error::DomainError(format!("cannot sample sizes: {e}")))?,
            ),
            PopulationKind::Deterministic(n) => SizeSampler::Fixed(*n as u64),
            PopulationKind::Explicit => {
                let pmf = game.population.outside();
                let w: Vec<f64> = (0..pmf.support_len()).map(|k| pmf.get(k)).collect();
                SizeSampler::Table(
                    WeightedIndex::new(w)
                        .map_err(|e| Error::DomainError(format!("cannot sample sizes: {e}")))?,
                )
            }
        };
        let thr = match game.threshold.kind() {
            ThresholdKind::Deterministic(t) => ThrSampler::Fixed(t as u64),
            ThresholdKind::Explicit => {
                let pmf = game.threshold.rho();
                let w: Vec<f64> = (0..pmf.support_len()).map(|k| pmf.get(k)).collect();
                ThrSampler::Table(
                    WeightedIndex::new(w)
                        .map_err(|e| Error::DomainError(format!("cannot sample resilience: {e}")))?,
                )
            }
        };
        Ok(Self {
            joint: [cells(State::Zero)?, cells(State::One)?],
            n_signals: n,
            prior: *info.prior(),
            size,
            thr,
            cost: game.cost,
        })
    }

    fn signals(&self, state: usize, rng: &mut ChaCha8Rng) -> (usize, usize) {
        let cell = self.joint[state].sample(rng);
        (cell / self.n_signals, cell % self.n_signals)
    }

    fn size(&self, rng: &mut ChaCha8Rng) -> u64 {
        match &self.size {
            SizeSampler::Poisson(d) => d.sample(rng) as u64,
            SizeSampler::Fixed(n) => *n,
            SizeSampler::Table(t) => t.sample(rng) as u64,
        }
    }

    fn resilience(&self, rng: &mut ChaCha8Rng) -> u64 {
        match &self.thr {
            ThrSampler::Fixed(t) => *t,
            ThrSampler::Table(t) => t.sample(rng) as u64,
        }
    }

    /// Realized turnout and success for one draw of signals, sizes, and
    /// resilience in the given state.
    fn outcome(&self, state: usize, strat: &SimStrategy, rng: &mut ChaCha8Rng) -> (u64, bool) {
        let (x1, x2) = self.signals(state, rng);
        let mut turnout = 0u64;
        for (g, x) in [(0usize, x1), (1usize, x2)] {
            let members = self.size(rng);
            let p = strat.prob(g, x);
            turnout += if p == 0.0 {
                0
            } else if p == 1.0 {
                members
            } else {
                Binomial::new(members, p).expect("validated probability").sample(rng)
            };
        }
        let t = self.resilience(rng);
        (turnout, turnout >= t + 1)
    }

    /// One ex-ante draw: state, outcome, and the representative agent's
    /// realized value. The cost term uses participation probabilities, which
    /// keeps the estimator unbiased with less noise than realized shares.
    fn welfare_draw(&self, strat: &SimStrategy, rng: &mut ChaCha8Rng) -> (bool, u64, bool, f64) {
        let state1 = rng.gen_bool(self.prior);
        let state = usize::from(state1);
        let (x1, x2) = self.signals(state, rng);
        let mut turnout = 0u64;
        for (g, x) in [(0usize, x1), (1usize, x2)] {
            let members = self.size(rng);
            let p = strat.prob(g, x);
            turnout += if p == 0.0 {
                0
            } else if p == 1.0 {
                members
            } else {
                Binomial::new(members, p).expect("validated probability").sample(rng)
            };
        }
        let t = self.resilience(rng);
        let success = turnout >= t + 1;
        let effort = (strat.prob(0, x1) + strat.prob(1, x2)) / 2.0;
        let value = if state1 && success { 1.0 } else { 0.0 } - self.cost * effort;
        (state1, turnout, success, value)
    }
}

/// Neumaier-compensated accumulator, so chunk reductions lose nothing to
/// cancellation regardless of trial counts.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: Kahan) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    n1: u64,
    turnout: Kahan,
    turnout_sq: Kahan,
    successes: u64,
    positive: u64,
    successes_positive: u64,
    n_welfare: u64,
    welfare: Kahan,
    welfare_sq: Kahan,
}

impl Tally {
    fn state1_outcome(&mut self, turnout: u64, success: bool) {
        self.n1 += 1;
        let a = turnout as f64;
        self.turnout.add(a);
        self.turnout_sq.add(a * a);
        if success {
            self.successes += 1;
        }
        if turnout > 0 {
            self.positive += 1;
            if success {
                self.successes_positive += 1;
            }
        }
    }

    fn welfare_value(&mut self, w: f64) {
        self.n_welfare += 1;
        self.welfare.add(w);
        self.welfare_sq.add(w * w);
    }

    fn merge(&mut self, other: Tally) {
        self.n1 += other.n1;
        self.turnout.merge(other.turnout);
        self.turnout_sq.merge(other.turnout_sq);
        self.successes += other.successes;
        self.positive += other.positive;
        self.successes_positive += other.successes_positive;
        self.n_welfare += other.n_welfare;
        self.welfare.merge(other.welfare);
        self.welfare_sq.merge(other.welfare_sq);
    }
}

fn mean_estimate(n: u64, sum: f64, sum_sq: f64) -> Estimate {
    if n == 0 {
        return Estimate {
            value: f64::NAN,
            se: f64::NAN,
            n,
        };
    }
    let nf = n as f64;
    let mean = sum / nf;
    let se = if n >= 2 {
        let var = ((sum_sq - sum * mean) / (nf - 1.0)).max(0.0);
        (var / nf).sqrt()
    } else {
        f64::NAN
    };
    Estimate { value: mean, se, n }
}

fn count_estimate(n: u64, hits: u64) -> Estimate {
    mean_estimate(n, hits as f64, hits as f64)
}

const CHUNK: u64 = 4096;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Estimates turnout, success, conditional success, and welfare for a
/// strategy. The report is bit-identical for identical inputs, including
/// across different thread counts.
pub fn run_trials(game: &Game<f64>, strat: &SimStrategy, cfg: &SimConfig) -> Result<SimReport> {
    if cfg.trials == 0 {
        return Err(Error::DomainError("at least one trial required".to_string()));
    }
    strat.validate(game.n_signals())?;
    let samplers = Samplers::build(game)?;

    let n_chunks = (cfg.trials + CHUNK - 1) / CHUNK;
    let run_chunk = |chunk: u64, phase: u64| -> Tally {
        let mut tally = Tally::default();
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(cfg.trials);
        for t in start..end {
            let mut rng = stream_rng(cfg.seed, phase * cfg.trials + t);
            if cfg.condition_on_state1 {
                if phase == 0 {
                    let (a, success) = samplers.outcome(1, strat, &mut rng);
                    tally.state1_outcome(a, success);
                } else {
                    let (_, _, _, w) = samplers.welfare_draw(strat, &mut rng);
                    tally.welfare_value(w);
                }
            } else {
                let (state1, a, success, w) = samplers.welfare_draw(strat, &mut rng);
                if state1 {
                    tally.state1_outcome(a, success);
                }
                tally.welfare_value(w);
            }
        }
        tally
    };

    let phases: &[u64] = if cfg.condition_on_state1 { &[0, 1] } else { &[0] };
    let mut total = Tally::default();
    for &phase in phases {
        let partials: Vec<Tally> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| run_chunk(chunk, phase))
            .collect();
        for p in partials {
            total.merge(p);
        }
    }

    Ok(SimReport {
        s: mean_estimate(total.n1, total.turnout.value(), total.turnout_sq.value()),
        pi: count_estimate(total.n1, total.successes),
        cond: count_estimate(total.positive, total.successes_positive),
        welfare: mean_estimate(
            total.n_welfare,
            total.welfare.value(),
            total.welfare_sq.value(),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::presets;

    fn cfg(trials: u64, seed: u64) -> SimConfig {
        SimConfig {
            trials,
            seed,
            condition_on_state1: true,
        }
    }

    fn within(est: &Estimate, target: f64, sigmas: f64) -> bool {
        (est.value - target).abs() <= sigmas * est.se
    }

    #[test]
    fn empty_profile_estimates_zero_turnout_exactly() {
        let game = presets::b4_ci();
        let strat = SimStrategy::pure(StrategyProfile::new(0, 0));
        let r = run_trials(&game, &strat, &cfg(10_000, 7)).unwrap();
        assert_eq!(r.s.value, 0.0);
        assert_eq!(r.s.se, 0.0);
        assert_eq!(r.pi.value, 0.0);
        assert_eq!(r.cond.n, 0);
        assert!(r.cond.value.is_nan());
    }

    #[test]
    fn standing_scenarios_match_their_analytic_values() {
        let checks = [
            (presets::b4_ci(), 0b100u32, 13.5, 0.23642547, 0.33896124, 0.11596273),
            (presets::b4_eti(), 0b110, 22.5, 0.57776036, 0.61958216, 0.28370518),
            (
                presets::encouragement(),
                0b111,
                20.0,
                0.11218497271797234,
                0.11218497271797234,
                0.04609248635898617,
            ),
        ];
        for (game, p, s, pi, cond, w) in checks {
            let strat = SimStrategy::pure(StrategyProfile::symmetric(p));
            let r = run_trials(&game, &strat, &cfg(100_000, 42)).unwrap();
            assert!(within(&r.s, s, 3.0), "turnout {:?} vs {s}", r.s);
            assert!(within(&r.pi, pi, 3.0), "success {:?} vs {pi}", r.pi);
            assert!(within(&r.cond, cond, 3.0), "conditional {:?} vs {cond}", r.cond);
            assert!(within(&r.welfare, w, 3.0), "welfare {:?} vs {w}", r.welfare);
        }
    }

    #[test]
    fn reports_are_reproducible_and_thread_count_independent() {
        let game = presets::b4_ci();
        let strat = SimStrategy::pure(StrategyProfile::symmetric(0b100));
        let c = cfg(20_000, 123);
        let a = run_trials(&game, &strat, &c).unwrap();
        let b = run_trials(&game, &strat, &c).unwrap();
        assert_eq!(a, b);

        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_trials(&game, &strat, &c).unwrap());
        assert_eq!(a, single);

        let quad = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_trials(&game, &strat, &c).unwrap());
        assert_eq!(a, quad);
    }

    #[test]
    fn standard_errors_shrink_like_root_n() {
        let game = presets::b4_ci();
        let strat = SimStrategy::pure(StrategyProfile::symmetric(0b100));
        let mut points = Vec::new();
        for trials in [1_000u64, 10_000, 100_000] {
            let r = run_trials(&game, &strat, &cfg(trials, 5)).unwrap();
            points.push(((trials as f64).log10(), r.pi.se.log10()));
        }
        let slope = (points[2].1 - points[0].1) / (points[2].0 - points[0].0);
        assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn degenerate_mixing_probabilities_reproduce_the_pure_report() {
        let game = presets::b4_ci();
        let c = cfg(20_000, 9);
        let pure = run_trials(
            &game,
            &SimStrategy::pure(StrategyProfile::symmetric(0b100)),
            &c,
        )
        .unwrap();
        let mixed = run_trials(
            &game,
            &SimStrategy::Mixed {
                p1: vec![0.0, 0.0, 1.0],
                p2: vec![0.0, 0.0, 1.0],
            },
            &c,
        )
        .unwrap();
        assert_eq!(pure, mixed);
    }

    #[test]
    fn interior_mixing_thins_turnout_to_its_mean() {
        let game = presets::b4_ci();
        let strat = SimStrategy::Mixed {
            p1: vec![0.0, 0.0, 0.5],
            p2: vec![0.0, 0.0, 0.5],
        };
        let r = run_trials(&game, &strat, &cfg(50_000, 11)).unwrap();
        assert!(within(&r.s, 6.75, 3.0), "{:?}", r.s);
    }

    #[test]
    fn ex_ante_sampling_agrees_with_the_conditioned_pass() {
        let game = presets::b4_ci();
        let strat = SimStrategy::pure(StrategyProfile::symmetric(0b100));
        let c = SimConfig {
            trials: 50_000,
            seed: 3,
            condition_on_state1: false,
        };
        let r = run_trials(&game, &strat, &c).unwrap();
        assert!(r.s.n > 20_000, "state-1 trials {}", r.s.n);
        assert!(within(&r.s, 13.5, 3.0), "{:?}", r.s);
        assert!(within(&r.welfare, 0.11596273, 3.0), "{:?}", r.welfare);
    }

    #[test]
    fn malformed_mixed_strategies_are_rejected() {
        let game = presets::b4_ci();
        let short = SimStrategy::Mixed {
            p1: vec![0.5],
            p2: vec![0.0, 0.0, 1.0],
        };
        assert!(run_trials(&game, &short, &cfg(10, 1)).is_err());
        let out_of_range = SimStrategy::Mixed {
            p1: vec![0.0, 0.0, 1.5],
            p2: vec![0.0, 0.0, 1.0],
        };
        assert!(run_trials(&game, &out_of_range, &cfg(10, 1)).is_err());
    }
}
