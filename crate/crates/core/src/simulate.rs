//! Sampling worst-case adversary paths and evaluating the game loss
//! `g(S_n) - sum_m (S_m/S_{m-1} - 1) Delta_m` for pluggable investor
//! strategies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardUniform};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::AdversaryPolicy;
use crate::math::{normal_cdf, McStats};
use crate::payoff::{PayoffKind, PayoffSpec};
use crate::scalar::{real, Scalar};
use crate::stochastic::DiscretePath;

/// Continuous-time view of a discrete path: linear interpolation of the log
/// prices, so `X(m/n) = S_m` exactly and `X` is multiplicative in between.
#[derive(Debug, Clone)]
pub struct InterpolatedPath<F> {
    pub base: DiscretePath<F>,
}

impl<F: Scalar> InterpolatedPath<F> {
    pub fn at(&self, t: F) -> Result<F> {
        if !(t >= F::zero() && t <= F::one()) {
            return Err(Error::Domain(format!("time t = {t} outside [0, 1]")));
        }
        let n = self.base.n_steps();
        let pos = t * real(n as f64);
        let m = pos.floor().to_usize().unwrap_or(0).min(n - 1);
        let alpha = pos - real(m as f64);
        let log_lo = self.base.values[m].ln();
        let log_hi = self.base.values[m + 1].ln();
        Ok(((F::one() - alpha) * log_lo + alpha * log_hi).exp())
    }
}

/// Log-linear interpolation of a discrete path.
pub fn interpolate<F: Scalar>(path: &DiscretePath<F>) -> InterpolatedPath<F> {
    InterpolatedPath { base: path.clone() }
}

type Rule<F> = Box<dyn Fn(usize, usize, &[F]) -> F + Send + Sync>;

/// Investor strategy: a predictable rule mapping (round `m`, horizon `n`,
/// observed prefix `S_0..S_{m-1}`) to the invested amount `Delta_m` in
/// currency units (negative = short).
pub struct Strategy<F> {
    pub name: String,
    rule: Rule<F>,
}

impl<F: Scalar> Strategy<F> {
    pub fn new(name: impl Into<String>, rule: Rule<F>) -> Self {
        Strategy {
            name: name.into(),
            rule,
        }
    }

    /// Never invests; the loss is the raw payoff.
    pub fn zero() -> Self {
        Strategy::new("zero", Box::new(|_, _, _| F::zero()))
    }

    /// Keeps one share: `Delta_m = S_{m-1}`, so the trading gains telescope
    /// to `S_n - 1`.
    pub fn buy_and_hold() -> Self {
        Strategy::new(
            "buy-and-hold",
            Box::new(|m, _, prefix: &[F]| prefix[m - 1]),
        )
    }

    /// Black–Scholes delta hedge for a call under variance `c`:
    /// `Delta_m = S_{m-1} Phi(d1(S_{m-1}, tau))` with `tau` the time left.
    pub fn bs_delta(payoff: &PayoffSpec<F>, c: F) -> Result<Self> {
        if payoff.kind() != PayoffKind::Call {
            return Err(Error::UnsupportedStrategy(
                "the Black-Scholes delta hedge is implemented for calls only".into(),
            ));
        }
        let strike = payoff.strike().unwrap();
        if !(strike > F::zero() && c > F::zero()) {
            return Err(Error::UnsupportedStrategy(
                "the delta hedge needs a positive strike and variance".into(),
            ));
        }
        Ok(Strategy::new(
            "bs-delta",
            Box::new(move |m, n, prefix: &[F]| {
                let s = prefix[m - 1];
                let tau = F::one() - real::<F>((m - 1) as f64) / real(n as f64);
                let denom = (c * tau).sqrt();
                let d1 = ((s / strike).ln() + c * tau / real(2.0)) / denom;
                s * normal_cdf(d1)
            }),
        ))
    }

    pub fn delta(&self, m: usize, n: usize, prefix: &[F]) -> F {
        (self.rule)(m, n, prefix)
    }
}

impl<F> std::fmt::Debug for Strategy<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Strategy").field("name", &self.name).finish()
    }
}

fn draw_from_law<F: Scalar>(law: &crate::moment::FiniteLaw<F>, u: F) -> F {
    let mut acc = F::zero();
    for &(t, p) in &law.atoms {
        acc += p;
        if u < acc {
            return t;
        }
    }
    law.atoms.last().map(|&(t, _)| t).unwrap_or(F::zero())
}

fn adversary_path<F: Scalar>(policy: &AdversaryPolicy<F>, rng: &mut ChaCha8Rng) -> Result<DiscretePath<F>>
where
    StandardUniform: Distribution<F>,
{
    let n = policy.n;
    let mut values = Vec::with_capacity(n + 1);
    let mut s = F::one();
    values.push(s);
    for m in 1..=n {
        let law = policy.law_at(m, s)?;
        let u: F = rng.sample(StandardUniform);
        let t = draw_from_law(law, u);
        s = s * (F::one() + t);
        values.push(s);
    }
    Ok(DiscretePath { values })
}

/// Sample one worst-case path from the policy, snapping the current price to
/// the nearest grid node to pick each round's law.
pub fn sample_adversary_path<F: Scalar>(
    policy: &AdversaryPolicy<F>,
    seed: u64,
) -> Result<DiscretePath<F>>
where
    StandardUniform: Distribution<F>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    adversary_path(policy, &mut rng)
}

/// Sample `count` independent adversary paths (stream per path index).
pub fn sample_adversary_paths<F: Scalar>(
    policy: &AdversaryPolicy<F>,
    count: usize,
    seed: u64,
) -> Result<Vec<DiscretePath<F>>>
where
    StandardUniform: Distribution<F>,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            adversary_path(policy, &mut rng)
        })
        .collect()
}

/// Realized loss of a strategy on one path: payoff minus trading gains.
pub fn loss<F: Scalar>(
    strategy: &Strategy<F>,
    path: &DiscretePath<F>,
    payoff: &PayoffSpec<F>,
) -> Result<F> {
    let n = path.n_steps();
    let mut gains = F::zero();
    for m in 1..=n {
        let delta = strategy.delta(m, n, &path.values[..m]);
        let ratio = path.values[m] / path.values[m - 1] - F::one();
        gains += ratio * delta;
    }
    Ok(payoff.eval(path.terminal())? - gains)
}

/// Per-path loss decomposition used by the CSV dumps.
#[derive(Debug, Clone, Copy)]
pub struct LossRecord<F> {
    pub terminal: F,
    pub payoff: F,
    pub trading_gain: F,
    pub loss: F,
}

pub fn loss_record<F: Scalar>(
    strategy: &Strategy<F>,
    path: &DiscretePath<F>,
    payoff: &PayoffSpec<F>,
) -> Result<LossRecord<F>> {
    let terminal = path.terminal();
    let pay = payoff.eval(terminal)?;
    let l = loss(strategy, path, payoff)?;
    Ok(LossRecord {
        terminal,
        payoff: pay,
        trading_gain: pay - l,
        loss: l,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LossStats<F> {
    pub mean: F,
    pub stderr: F,
    pub min: F,
    pub max: F,
    pub count: u64,
}

/// Loss statistics of a strategy over a shared set of paths.
pub fn loss_stats<F: Scalar>(
    strategy: &Strategy<F>,
    paths: &[DiscretePath<F>],
    payoff: &PayoffSpec<F>,
) -> Result<LossStats<F>> {
    let mut acc = McStats::new();
    for path in paths {
        acc.push(loss(strategy, path, payoff)?);
    }
    Ok(LossStats {
        mean: acc.mean(),
        stderr: acc.stderr(),
        min: acc.min(),
        max: acc.max(),
        count: acc.count(),
    })
}

/// Monte Carlo expected loss of a strategy against the optimal adversary.
pub fn expected_loss<F: Scalar>(
    strategy: &Strategy<F>,
    policy: &AdversaryPolicy<F>,
    payoff: &PayoffSpec<F>,
    paths: usize,
    seed: u64,
) -> Result<LossStats<F>>
where
    StandardUniform: Distribution<F>,
{
    let sampled = sample_adversary_paths(policy, paths, seed)?;
    loss_stats(strategy, &sampled, payoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{solve_game, GameConfig, ZetaRule};
    use proptest::prelude::*;
    use super::Strategy;

    type P = PayoffSpec<f64>;

    fn policy_16() -> AdversaryPolicy<f64> {
        let mut cfg = GameConfig::new(16, 0.04, ZetaRule::Power { delta: 0.25 });
        cfg.grid_size = 513;
        cfg.moment_grid_size = 129;
        solve_game(&cfg, &P::call(1.0).unwrap()).unwrap().policy
    }

    #[test]
    fn interpolation_hits_grid_times_exactly() {
        let path = DiscretePath::new(vec![1.0, 1.2, 0.9, 1.05]).unwrap();
        let x = interpolate(&path);
        for (m, &s) in path.values.iter().enumerate() {
            let t = m as f64 / 3.0;
            assert!((x.at(t).unwrap() - s).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolation_is_geometric_between_nodes() {
        let path = DiscretePath::<f64>::new(vec![1.0, 4.0]).unwrap();
        let x = interpolate(&path);
        assert!((x.at(0.5).unwrap() - 2.0).abs() < 1e-12);
        for &t in &[0.0, 0.25, 0.5, 1.0] {
            let want = 4.0f64.powf(t);
            assert!((x.at(t).unwrap() - want).abs() < 1e-12, "t = {t}");
        }
        assert!(x.at(-0.01).is_err());
        assert!(x.at(1.01).is_err());
    }

    #[test]
    fn constant_path_interpolates_to_constant() {
        let path = DiscretePath::new(vec![1.0; 5]).unwrap();
        let x = interpolate(&path);
        for i in 0..=20 {
            assert_eq!(x.at(i as f64 / 20.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn zero_strategy_loss_is_the_payoff() {
        let path = DiscretePath::new(vec![1.0, 1.1, 1.3]).unwrap();
        let g = P::call(1.0).unwrap();
        let l = loss(&Strategy::zero(), &path, &g).unwrap();
        assert!((l - 0.3).abs() < 1e-15);
    }

    #[test]
    fn buy_and_hold_telescopes_for_the_identity_payoff() {
        let path = DiscretePath::new(vec![1.0, 1.07, 0.93, 1.21, 1.02]).unwrap();
        let l = loss(&Strategy::buy_and_hold(), &path, &P::identity()).unwrap();
        assert!((l - 1.0).abs() < 1e-12, "telescoping loss {l}");
    }

    #[test]
    fn constant_payoff_zero_strategy() {
        let path = DiscretePath::new(vec![1.0, 0.8, 1.5]).unwrap();
        let g = P::constant(0.42).unwrap();
        assert_eq!(loss(&Strategy::zero(), &path, &g).unwrap(), 0.42);
    }

    #[test]
    fn bs_delta_examples() {
        let g = P::call(1.0).unwrap();
        let strat = Strategy::bs_delta(&g, 0.04).unwrap();
        // at the money, full horizon: Phi(0.1)
        let d = strat.delta(1, 16, &[1.0]);
        assert!((d - 0.53982783727702898147).abs() < 1e-12);
        // deep out of the money
        assert!(strat.delta(1, 16, &[0.01]) < 1e-8);
        // deep in the money: delta tends to the full spot
        let deep = strat.delta(1, 16, &[100.0]);
        assert!((deep - 100.0).abs() < 1e-6);
        // non-call payoffs are unsupported
        assert!(Strategy::bs_delta(&P::put(1.0).unwrap(), 0.04).is_err());
        assert!(Strategy::bs_delta(&P::identity(), 0.04).is_err());
    }

    #[test]
    fn predictability_only_the_prefix_matters() {
        let g = P::call(1.0).unwrap();
        let strat = Strategy::bs_delta(&g, 0.04).unwrap();
        let a = [1.0, 1.1, 0.9, 1.3];
        let b = [1.0, 1.1, 2.0, 0.5]; // same prefix up to m = 2
        for m in 1..=2 {
            assert_eq!(strat.delta(m, 4, &a[..m]), strat.delta(m, 4, &b[..m]));
        }
    }

    #[test]
    fn sampled_paths_respect_the_hard_ratio_bound() {
        let policy = policy_16();
        let paths = sample_adversary_paths(&policy, 2000, 77).unwrap();
        for p in &paths {
            assert!(p.max_abs_return() <= policy.zeta + 1e-12);
            assert_eq!(p.values[0], 1.0);
        }
    }

    #[test]
    fn sampled_paths_are_martingale_like() {
        let policy = policy_16();
        let paths = sample_adversary_paths(&policy, 50_000, 31).unwrap();
        let mut acc = McStats::new();
        for p in &paths {
            acc.push(p.terminal());
        }
        assert!(
            (acc.mean() - 1.0).abs() <= 5.0 * acc.stderr(),
            "terminal mean {} +- {}",
            acc.mean(),
            acc.stderr()
        );
    }

    #[test]
    fn trading_gains_have_zero_mean_against_the_optimal_adversary() {
        let policy = policy_16();
        let g = P::call(1.0).unwrap();
        let paths = sample_adversary_paths(&policy, 50_000, 13).unwrap();
        let zero = loss_stats(&Strategy::zero(), &paths, &g).unwrap();
        let hedged = loss_stats(&Strategy::bs_delta(&g, 0.04).unwrap(), &paths, &g).unwrap();
        // the expected loss is strategy-independent; on shared paths the
        // difference is exactly the trading gain of the hedge
        let diff = (zero.mean - hedged.mean).abs();
        let se = (zero.stderr.powi(2) + hedged.stderr.powi(2)).sqrt();
        assert!(diff <= 5.0 * se, "difference {diff} vs stderr {se}");
    }

    #[test]
    fn path_sampling_is_deterministic() {
        let policy = policy_16();
        let a = sample_adversary_path(&policy, 5).unwrap();
        let b = sample_adversary_path(&policy, 5).unwrap();
        assert_eq!(a, b);
        let batch1 = sample_adversary_paths(&policy, 8, 5).unwrap();
        let batch2 = sample_adversary_paths(&policy, 8, 5).unwrap();
        assert_eq!(batch1, batch2);
        assert_eq!(batch1[0], a);
    }

    proptest! {
        #[test]
        fn log_linear_interpolation_is_multiplicative(r in 0.2f64..5.0, t in 0.0f64..1.0) {
            let path = DiscretePath::new(vec![1.0, r]).unwrap();
            let x = interpolate(&path);
            let want = r.powf(t);
            prop_assert!((x.at(t).unwrap() - want).abs() < 1e-12 * want.max(1.0));
        }
    }
}
