//! Geometric Brownian motion sampling and Black–Scholes pricing.
//!
//! All sampling uses ChaCha8 streams keyed by `(seed, chunk or path index)`,
//! so results are bit-identical across platforms and worker counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::{normal_cdf, McStats};
use crate::payoff::PayoffSpec;
use crate::scalar::{real, Scalar};

/// Samples per RNG stream in parallel Monte Carlo loops.
const CHUNK: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmParams<F> {
    /// Variance parameter (volatility squared per unit time).
    pub c: F,
    /// Number of discretization steps on `[0, 1]`.
    pub n_steps: usize,
    pub seed: u64,
}

impl<F: Scalar> GbmParams<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > F::zero()) {
            return Err(Error::InvalidParameter(format!(
                "variance parameter c = {} must be positive",
                self.c
            )));
        }
        if self.n_steps < 1 {
            return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Realized discrete price sequence `S_0..S_n` with `S_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath<F> {
    pub values: Vec<F>,
}

impl<F: Scalar> DiscretePath<F> {
    pub fn new(values: Vec<F>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter(
                "a path needs at least two points".into(),
            ));
        }
        if values[0] != F::one() {
            return Err(Error::InvalidParameter(format!(
                "paths start at S_0 = 1, got {}",
                values[0]
            )));
        }
        if values.iter().any(|&s| !(s > F::zero())) {
            return Err(Error::InvalidParameter("prices must stay positive".into()));
        }
        Ok(DiscretePath { values })
    }

    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn terminal(&self) -> F {
        *self.values.last().unwrap()
    }

    /// Step ratios `S_{m+1}/S_m - 1`.
    pub fn returns(&self) -> impl Iterator<Item = F> + '_ {
        self.values.windows(2).map(|w| w[1] / w[0] - F::one())
    }

    /// Largest step-ratio magnitude.
    pub fn max_abs_return(&self) -> F {
        self.returns().fold(F::zero(), |acc, r| acc.max(r.abs()))
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gbm_path<F: Scalar>(params: &GbmParams<F>, rng: &mut ChaCha8Rng) -> DiscretePath<F>
where
    StandardNormal: Distribution<F>,
{
    let n = params.n_steps;
    let sqrt_c = params.c.sqrt();
    let sqrt_dt = (F::one() / real(n as f64)).sqrt();
    let drift = params.c / (real::<F>(2.0) * real(n as f64));
    let mut values = Vec::with_capacity(n + 1);
    values.push(F::one());
    let mut log_s = F::zero();
    for _ in 0..n {
        let z: F = rng.sample(StandardNormal);
        log_s = log_s + sqrt_c * sqrt_dt * z - drift;
        values.push(log_s.exp());
    }
    DiscretePath { values }
}

/// Sample one GBM path `S_m = exp(sqrt(c) B_{m/n} - c m / 2n)` at the grid
/// times; deterministic given the seed.
pub fn sample_gbm<F: Scalar>(params: &GbmParams<F>) -> Result<DiscretePath<F>>
where
    StandardNormal: Distribution<F>,
{
    params.validate()?;
    let mut rng = stream_rng(params.seed, 0);
    Ok(gbm_path(params, &mut rng))
}

/// Sample `count` independent GBM paths (stream per path).
pub fn sample_gbm_paths<F: Scalar>(params: &GbmParams<F>, count: usize) -> Result<Vec<DiscretePath<F>>>
where
    StandardNormal: Distribution<F>,
{
    params.validate()?;
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(params.seed, i as u64);
            gbm_path(params, &mut rng)
        })
        .collect())
}

/// Closed-form Black–Scholes price of a call with unit spot, unit horizon and
/// zero rate: `Phi(d1) - K Phi(d2)` with `d1 = (-ln K + c/2)/sqrt(c)`.
pub fn bs_price_closed_form<F: Scalar>(strike: F, c: F) -> Result<F> {
    if !(strike > F::zero()) {
        return Err(Error::InvalidParameter(format!(
            "strike K = {strike} must be positive; the call degenerates at K <= 0 \
             (price tends to the unit spot as K -> 0)"
        )));
    }
    if !(c > F::zero()) {
        return Err(Error::InvalidParameter(format!(
            "variance parameter c = {c} must be positive"
        )));
    }
    let sqrt_c = c.sqrt();
    let d1 = (-strike.ln() + c / real(2.0)) / sqrt_c;
    let d2 = d1 - sqrt_c;
    Ok(normal_cdf(d1) - strike * normal_cdf(d2))
}

/// Exact lognormal expectation `E[g(G(1))]` for any representable payoff,
/// via the decomposition `g(x) = a + s x + sum w_i (x - k_i)+` and the call
/// closed form (a martingale has `E[G(1)] = 1`).
pub fn bs_price_exact<F: Scalar>(payoff: &PayoffSpec<F>, c: F) -> Result<F> {
    if !(c > F::zero()) {
        return Err(Error::InvalidParameter(format!(
            "variance parameter c = {c} must be positive"
        )));
    }
    let (intercept, base_slope, terms) = payoff.call_decomposition();
    let mut price = intercept + base_slope;
    for (k, w) in terms {
        let call = if k > F::zero() {
            bs_price_closed_form(k, c)?
        } else {
            // (x - 0)+ = x on the domain, and E[G(1)] = 1
            F::one()
        };
        price += w * call;
    }
    Ok(price)
}

/// Monte Carlo Black–Scholes price: sample mean and standard error of
/// `g(G(1))` over lognormal draws with log-mean `-c/2` and log-variance `c`.
pub fn bs_price_mc<F: Scalar>(
    payoff: &PayoffSpec<F>,
    c: F,
    samples: usize,
    seed: u64,
) -> Result<(F, F)>
where
    StandardNormal: Distribution<F>,
{
    if samples < 1 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    if !(c > F::zero()) {
        return Err(Error::InvalidParameter(format!(
            "variance parameter c = {c} must be positive"
        )));
    }
    let sqrt_c = c.sqrt();
    let half_c = c / real(2.0);
    let chunks = (samples as u64).div_ceil(CHUNK);
    let stats: Vec<McStats<F>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk);
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(samples as u64);
            let mut acc = McStats::new();
            for _ in lo..hi {
                let z: F = rng.sample(StandardNormal);
                let terminal = (sqrt_c * z - half_c).exp();
                acc.push(payoff.eval(terminal).expect("lognormal draws are positive"));
            }
            acc
        })
        .collect();
    let total = stats.iter().fold(McStats::new(), |acc, s| acc.merge(s));
    Ok((total.mean(), total.stderr()))
}

/// Clip a path to the hard ratio constraint: unchanged when every step ratio
/// satisfies `|S_{m+1}/S_m - 1| <= zeta`, otherwise the constant-1 path.
pub fn clip_to_zc<F: Scalar>(path: &DiscretePath<F>, zeta: F) -> DiscretePath<F> {
    if path.max_abs_return() <= zeta {
        path.clone()
    } else {
        DiscretePath {
            values: vec![F::one(); path.values.len()],
        }
    }
}

/// Fraction of GBM paths whose every step ratio satisfies the hard bound,
/// with a binomial standard error.
pub fn estimate_zc_violation<F: Scalar>(
    c: F,
    n: usize,
    zeta: F,
    samples: usize,
    seed: u64,
) -> Result<(F, F)>
where
    StandardNormal: Distribution<F>,
{
    if samples < 1 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let params = GbmParams { c, n_steps: n, seed };
    params.validate()?;
    let ok: u64 = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let path = gbm_path(&params, &mut rng);
            u64::from(path.max_abs_return() <= zeta)
        })
        .sum();
    let p = real::<F>(ok as f64) / real(samples as f64);
    let stderr = (p * (F::one() - p) / real(samples as f64)).sqrt();
    Ok((p, stderr))
}
