//! Machine checks of the quantitative bounds the solver output must satisfy:
//! Taylor bounds on log returns of the optimal transition laws, martingale and
//! variance identities along sampled adversary paths, payoff-truncation and
//! Gaussian-tail bounds, hard-bound violation probabilities for GBM, and the
//! distributional convergence of the adversary's terminal law.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal, StandardUniform};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{solve_game, AdversaryPolicy, GameConfig, ZetaRule};
use crate::math::{ks_statistic, normal_cdf, normal_tail, McStats};
use crate::moment::FiniteLaw;
use crate::payoff::PayoffSpec;
use crate::scalar::{real, to_f64, Scalar};
use crate::simulate::sample_adversary_paths;
use crate::stochastic::{bs_price_exact, estimate_zc_violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Preconditions for the bound do not hold at these parameters.
    Skipped,
}

/// One verified bound: `margin >= 0` if and only if the check passed.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub status: CheckStatus,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("check report serializes")
    }
}

fn params_map(entries: &[(&str, String)]) -> BTreeMap<String, String> {
    entries
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Exact per-law moments of `log(1 + T)`; errors out on atoms at `t <= -1`.
fn log_moments<F: Scalar>(law: &FiniteLaw<F>) -> Result<(F, F)> {
    let mut e1 = F::zero();
    let mut e2 = F::zero();
    for &(t, p) in &law.atoms {
        if t <= -F::one() {
            return Err(Error::Domain(format!(
                "law atom t = {t} <= -1: log(1 + t) undefined"
            )));
        }
        let l = t.ln_1p();
        e1 += p * l;
        e2 += p * l * l;
    }
    Ok((e1, e2))
}

#[derive(Clone, Copy)]
enum TaylorKind {
    LogMean,
    LogSecondMoment,
    ConditionalVariance,
}

fn taylor_check<'a, F: Scalar + 'a>(
    kind: TaylorKind,
    c: F,
    n: usize,
    zeta: F,
    laws: impl IntoIterator<Item = &'a FiniteLaw<F>>,
) -> Result<CheckReport> {
    let n_f = real::<F>(n as f64);
    let step_v = (c / n_f).exp() - F::one();
    let czn = c * zeta / n_f;
    let c2n2 = c * c / (n_f * n_f);
    let (name, bound) = match kind {
        TaylorKind::LogMean => ("taylor_log_mean", real::<F>(2.0) * czn + c2n2),
        TaylorKind::LogSecondMoment => (
            "taylor_log_second_moment",
            real::<F>(4.0) * czn + real::<F>(2.0) * c2n2,
        ),
        TaylorKind::ConditionalVariance => (
            "conditional_variance",
            real::<F>(4.0) * czn + real::<F>(3.0) * c2n2,
        ),
    };

    let mut worst = F::zero();
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for law in laws {
        for &(t, _) in &law.atoms {
            if t <= -F::one() {
                return Err(Error::Domain(format!(
                    "law atom t = {t} <= -1: log(1 + t) undefined"
                )));
            }
        }
        // the bounds hold for laws saturating the variance constraint
        if (law.second_moment() - step_v).abs() > real(1e-9) {
            skipped += 1;
            continue;
        }
        let (e1, e2) = log_moments(law)?;
        let measured = match kind {
            TaylorKind::LogMean => (e1 + c / (real::<F>(2.0) * n_f)).abs(),
            TaylorKind::LogSecondMoment => (e2 - c / n_f).abs(),
            TaylorKind::ConditionalVariance => {
                let var = e2 - e1 * e1;
                (var - c / n_f).abs()
            }
        };
        worst = worst.max(measured);
        checked += 1;
    }

    let status = if checked == 0 {
        CheckStatus::Skipped
    } else if worst <= bound + real(1e-12) {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(CheckReport {
        name: name.into(),
        params: params_map(&[
            ("n", n.to_string()),
            ("c", to_f64(c).to_string()),
            ("zeta", to_f64(zeta).to_string()),
            ("laws_checked", checked.to_string()),
            ("laws_skipped", skipped.to_string()),
        ]),
        measured: to_f64(worst),
        bound: to_f64(bound),
        margin: to_f64(bound - worst),
        status,
    })
}

/// `|E[log(1+T)] + c/2n| <= 2 c zeta / n + c^2 / n^2` for every law.
pub fn check_taylor_log_mean<'a, F: Scalar + 'a>(
    c: F,
    n: usize,
    zeta: F,
    laws: impl IntoIterator<Item = &'a FiniteLaw<F>>,
) -> Result<CheckReport> {
    taylor_check(TaylorKind::LogMean, c, n, zeta, laws)
}

/// `|E[log^2(1+T)] - c/n| <= 4 c zeta / n + 2 c^2 / n^2` for every law.
pub fn check_taylor_log_second_moment<'a, F: Scalar + 'a>(
    c: F,
    n: usize,
    zeta: F,
    laws: impl IntoIterator<Item = &'a FiniteLaw<F>>,
) -> Result<CheckReport> {
    taylor_check(TaylorKind::LogSecondMoment, c, n, zeta, laws)
}

/// `|Var(log(1+T)) - c/n| <= 4 c zeta / n + 3 c^2 / n^2` for every law.
pub fn check_conditional_variance<'a, F: Scalar + 'a>(
    c: F,
    n: usize,
    zeta: F,
    laws: impl IntoIterator<Item = &'a FiniteLaw<F>>,
) -> Result<CheckReport> {
    taylor_check(TaylorKind::ConditionalVariance, c, n, zeta, laws)
}

/// `E[S_n] = 1` along sampled adversary paths, within 5 standard errors.
pub fn check_martingale<F: Scalar>(
    policy: &AdversaryPolicy<F>,
    paths: usize,
    seed: u64,
) -> Result<CheckReport>
where
    StandardUniform: Distribution<F>,
{
    let sampled = sample_adversary_paths(policy, paths, seed)?;
    let mut acc = McStats::new();
    for p in &sampled {
        acc.push(p.terminal());
    }
    let measured = (acc.mean() - F::one()).abs();
    let bound = real::<F>(5.0) * acc.stderr();
    Ok(CheckReport {
        name: "martingale_terminal_mean".into(),
        params: params_map(&[
            ("n", policy.n.to_string()),
            ("c", to_f64(policy.c).to_string()),
            ("paths", paths.to_string()),
            ("seed", seed.to_string()),
        ]),
        measured: to_f64(measured),
        bound: to_f64(bound),
        margin: to_f64(bound - measured),
        status: if measured <= bound {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
    })
}

/// `E[S_m^2] = exp(c m / n)` at `m = ceil(n/4), ceil(n/2), n`, within 5
/// standard errors, along sampled adversary paths.
pub fn check_variance_identity<F: Scalar>(
    policy: &AdversaryPolicy<F>,
    paths: usize,
    seed: u64,
) -> Result<Vec<CheckReport>>
where
    StandardUniform: Distribution<F>,
{
    let n = policy.n;
    let sampled = sample_adversary_paths(policy, paths, seed)?;
    let mut ms: Vec<usize> = vec![n.div_ceil(4), n.div_ceil(2), n];
    ms.dedup();
    let mut reports = Vec::new();
    for m in ms {
        let target = (policy.c * real(m as f64) / real(n as f64)).exp();
        let mut acc = McStats::new();
        for p in &sampled {
            acc.push(p.values[m] * p.values[m]);
        }
        let measured = (acc.mean() - target).abs();
        let bound = real::<F>(5.0) * acc.stderr();
        reports.push(CheckReport {
            name: "variance_identity".into(),
            params: params_map(&[
                ("n", n.to_string()),
                ("m", m.to_string()),
                ("c", to_f64(policy.c).to_string()),
                ("target", to_f64(target).to_string()),
                ("paths", paths.to_string()),
                ("seed", seed.to_string()),
            ]),
            measured: to_f64(measured),
            bound: to_f64(bound),
            margin: to_f64(bound - measured),
            status: if measured <= bound {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
        });
    }
    Ok(reports)
}

/// Truncation bound: `E[g(S_n)] - E[min(g(S_n), M)] <= L^{3/2} exp(c/2) /
/// sqrt(M)` (plus 5 standard errors of the empirical gap), with the payoff
/// shifted so `g(0) = 0`.
pub fn check_truncation_bound<F: Scalar>(
    policy: &AdversaryPolicy<F>,
    payoff: &PayoffSpec<F>,
    m_list: &[F],
    paths: usize,
    seed: u64,
) -> Result<Vec<CheckReport>>
where
    StandardUniform: Distribution<F>,
{
    let shift = payoff.eval(F::zero())?;
    let sampled = sample_adversary_paths(policy, paths, seed)?;
    let payoffs: Vec<F> = sampled
        .iter()
        .map(|p| payoff.eval(p.terminal()).map(|y| y - shift))
        .collect::<Result<_>>()?;
    let lip = payoff.lipschitz();
    let scale = lip.powf(real(1.5)) * (policy.c / real(2.0)).exp();
    let mut reports = Vec::new();
    for &m in m_list {
        let mut acc = McStats::new();
        for &y in &payoffs {
            acc.push((y - m).max(F::zero()));
        }
        let measured = acc.mean();
        let bound = scale / m.sqrt() + real::<F>(5.0) * acc.stderr();
        reports.push(CheckReport {
            name: "truncation_bound".into(),
            params: params_map(&[
                ("n", policy.n.to_string()),
                ("c", to_f64(policy.c).to_string()),
                ("M", to_f64(m).to_string()),
                ("lipschitz", to_f64(lip).to_string()),
                ("paths", paths.to_string()),
                ("seed", seed.to_string()),
            ]),
            measured: to_f64(measured),
            bound: to_f64(bound),
            margin: to_f64(bound - measured),
            status: if measured <= bound {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
        });
    }
    Ok(reports)
}

/// Gaussian tail bound `1 - Phi(sqrt(n) zeta / (2 sqrt(c))) <= 1/(2 n^2)` at
/// every `n` where the preconditions hold; others are reported as skipped.
pub fn check_gaussian_tail<F: Scalar>(n_list: &[usize], c: F, rule: ZetaRule<F>) -> Vec<CheckReport> {
    let mut reports = Vec::new();
    for &n in n_list {
        let n_f = real::<F>(n as f64);
        let zeta = rule.zeta(n);
        let x = n_f.sqrt() * zeta / (real::<F>(2.0) * c.sqrt());
        let mut failed_pre: Vec<&str> = Vec::new();
        if !(zeta.ln_1p() >= zeta / real(2.0)) {
            failed_pre.push("log(1+zeta) >= zeta/2");
        }
        if !((n_f / c).sqrt() * zeta >= (c / n_f).sqrt()) {
            failed_pre.push("sqrt(n/c) zeta >= sqrt(c/n)");
        }
        if !(x >= real::<F>(std::f64::consts::FRAC_2_PI).sqrt()) {
            failed_pre.push("sqrt(n) zeta / (2 sqrt(c)) >= sqrt(2/pi)");
        }
        if !(n > 1 && n_f * zeta * zeta / n_f.ln() >= real::<F>(16.0) * c) {
            failed_pre.push("n zeta^2 / log n >= 16 c");
        }
        let params = params_map(&[
            ("n", n.to_string()),
            ("c", to_f64(c).to_string()),
            ("zeta", to_f64(zeta).to_string()),
            ("preconditions_failed", failed_pre.join("; ")),
        ]);
        if !failed_pre.is_empty() {
            reports.push(CheckReport {
                name: "gaussian_tail".into(),
                params,
                measured: f64::NAN,
                bound: f64::NAN,
                margin: f64::NAN,
                status: CheckStatus::Skipped,
            });
            continue;
        }
        let measured = normal_tail(x);
        let bound = F::one() / (real::<F>(2.0) * n_f * n_f);
        reports.push(CheckReport {
            name: "gaussian_tail".into(),
            params,
            measured: to_f64(measured),
            bound: to_f64(bound),
            margin: to_f64(bound - measured),
            status: if measured <= bound + real(1e-12) {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
        });
    }
    reports
}

/// GBM hard-bound compliance: the Monte Carlo no-violation frequency must be
/// at least `(1 - 1/n^2)^n` minus 3 standard errors.
pub fn check_probconv<F: Scalar>(
    c: F,
    n_list: &[usize],
    rule: ZetaRule<F>,
    samples: usize,
    seed: u64,
) -> Result<Vec<CheckReport>>
where
    StandardNormal: Distribution<F>,
{
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "probconv check needs at least 10^4 samples, got {samples}"
        )));
    }
    let mut reports = Vec::new();
    for &n in n_list {
        let zeta = rule.zeta(n);
        let (estimate, stderr) =
            estimate_zc_violation(c, n, zeta, samples, seed.wrapping_add(n as u64))?;
        let n_f = n as f64;
        let rhs = (1.0 - 1.0 / (n_f * n_f)).powi(n as i32);
        let bound = real::<F>(rhs) - real::<F>(3.0) * stderr;
        reports.push(CheckReport {
            name: "zc_violation_probability".into(),
            params: params_map(&[
                ("n", n.to_string()),
                ("c", to_f64(c).to_string()),
                ("zeta", to_f64(zeta).to_string()),
                ("rhs", rhs.to_string()),
                ("stderr", to_f64(stderr).to_string()),
                ("samples", samples.to_string()),
                ("seed", seed.to_string()),
            ]),
            measured: to_f64(estimate),
            bound: to_f64(bound),
            margin: to_f64(estimate - bound),
            status: if estimate >= bound {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
        });
    }
    Ok(reports)
}

#[derive(Debug, Clone)]
pub struct KsConvergence {
    /// `(n, KS distance)` per policy, in input order.
    pub distances: Vec<(usize, f64)>,
    pub report: CheckReport,
}

/// Kolmogorov–Smirnov distance between the law of `log S_n + c/2` under the
/// optimal adversary and `Normal(0, c)`, per policy; the distances must be
/// strictly decreasing along the list.
pub fn ks_terminal_convergence<F: Scalar>(
    policies: &[&AdversaryPolicy<F>],
    samples: usize,
    seed: u64,
) -> Result<KsConvergence>
where
    StandardUniform: Distribution<F>,
{
    if policies.len() < 2 {
        return Err(Error::InvalidParameter(
            "KS convergence needs at least two solved policies".into(),
        ));
    }
    let mut distances = Vec::new();
    for policy in policies {
        let c = policy.c;
        let sqrt_c = c.sqrt();
        let paths = sample_adversary_paths(policy, samples, seed.wrapping_add(policy.n as u64))?;
        let xs: Vec<F> = paths
            .iter()
            .map(|p| p.terminal().ln() + c / real(2.0))
            .collect();
        let d = ks_statistic(&xs, |x| normal_cdf(x / sqrt_c));
        distances.push((policy.n, to_f64(d)));
    }
    let mut worst_ratio = 0.0f64;
    let mut decreasing = true;
    for w in distances.windows(2) {
        let ratio = w[1].1 / w[0].1;
        worst_ratio = worst_ratio.max(ratio);
        if w[1].1 >= w[0].1 {
            decreasing = false;
        }
    }
    let ns: Vec<String> = distances.iter().map(|(n, _)| n.to_string()).collect();
    let ds: Vec<String> = distances.iter().map(|(_, d)| d.to_string()).collect();
    let report = CheckReport {
        name: "ks_terminal_convergence".into(),
        params: params_map(&[
            ("n_list", ns.join(",")),
            ("distances", ds.join(",")),
            ("samples", samples.to_string()),
            ("seed", seed.to_string()),
        ]),
        measured: worst_ratio,
        bound: 1.0,
        margin: 1.0 - worst_ratio,
        status: if decreasing {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
    };
    Ok(KsConvergence { distances, report })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub zeta: f64,
    pub feasible: bool,
    pub value: Option<f64>,
    pub beta: f64,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub report: CheckReport,
}

/// Tolerance below which a sweep gap is treated as converged rather than a
/// monotonicity violation (exact payoffs sit at gap 0 up to grid noise).
const SWEEP_TOL: f64 = 1e-6;

/// Assemble a sweep table from pre-solved game values and assert that the
/// gaps to the limit price are nonnegative and nonincreasing.
pub fn sweep_from_values(values: &[(usize, f64, Option<f64>)], beta: f64) -> SweepTable {
    let rows: Vec<SweepRow> = values
        .iter()
        .map(|&(n, zeta, value)| SweepRow {
            n,
            zeta,
            feasible: value.is_some(),
            value,
            beta,
            gap: value.map(|v| v - beta),
        })
        .collect();
    let mut ok = true;
    let mut prev: Option<f64> = None;
    for row in rows.iter().filter(|r| r.feasible) {
        let gap = row.gap.unwrap();
        if gap < -SWEEP_TOL {
            ok = false;
        }
        if let Some(p) = prev {
            if gap > p + SWEEP_TOL {
                ok = false;
            }
        }
        prev = Some(gap);
    }
    let feasible_gaps: Vec<String> = rows
        .iter()
        .filter_map(|r| r.gap)
        .map(|g| g.to_string())
        .collect();
    let worst = rows
        .iter()
        .filter_map(|r| r.gap)
        .fold(f64::NEG_INFINITY, f64::max);
    let report = CheckReport {
        name: "convergence_sweep".into(),
        params: params_map(&[
            ("beta", beta.to_string()),
            ("gaps", feasible_gaps.join(",")),
        ]),
        measured: worst,
        bound: f64::INFINITY,
        margin: if ok { 0.0 } else { -1.0 },
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
    };
    SweepTable { rows, report }
}

/// Solve the game for every `n` in the list and tabulate `(n, zeta_n,
/// feasible, V_0(1), beta, gap)`. Infeasible rows are excluded from the
/// monotonicity assertion.
pub fn convergence_sweep<F: Scalar>(
    payoff: &PayoffSpec<F>,
    c: F,
    n_list: &[usize],
    rule: ZetaRule<F>,
    grid_size: usize,
    moment_grid_size: usize,
) -> Result<SweepTable> {
    let beta = to_f64(bs_price_exact(payoff, c)?);
    let mut values = Vec::new();
    for &n in n_list {
        let mut config = GameConfig::new(n, c, rule);
        config.grid_size = grid_size;
        config.moment_grid_size = moment_grid_size;
        let value = match config.validate() {
            Ok(()) => Some(to_f64(solve_game(&config, payoff)?.value)),
            Err(Error::Infeasible(_)) | Err(Error::InvalidParameter(_)) => None,
            Err(e) => return Err(e),
        };
        values.push((n, to_f64(config.zeta()), value));
    }
    Ok(sweep_from_values(&values, beta))
}
