//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see them all). The call benchmark is K = 1,
//! c = 0.04, zeta_n = n^(-1/4), price grid 1025, solved once and shared.

use std::collections::BTreeMap;

use once_cell::sync::Lazy;

use robust_pricing::game::{solve_game, GameConfig, GameSolution, ZetaRule};
use robust_pricing::math::McStats;
use robust_pricing::moment::{
    check_dual_certificate, moment_grid, oracle_on_grid, solve_on_grid, PwlObjective,
};
use robust_pricing::payoff::PayoffSpec;
use robust_pricing::simulate::{loss_stats, sample_adversary_paths, Strategy};
use robust_pricing::stochastic::{bs_price_closed_form, bs_price_mc, estimate_zc_violation};
use robust_pricing::verify::{
    check_conditional_variance, check_gaussian_tail, check_taylor_log_mean,
    check_taylor_log_second_moment, check_truncation_bound, ks_terminal_convergence, CheckStatus,
};

const C: f64 = 0.04;
const NS: [usize; 4] = [4, 16, 64, 256];

fn benchmark_config(n: usize) -> GameConfig<f64> {
    let mut cfg = GameConfig::new(n, C, ZetaRule::Power { delta: 0.25 });
    cfg.grid_size = 1025;
    cfg.moment_grid_size = 513;
    cfg
}

static SOLVED: Lazy<BTreeMap<usize, GameSolution<f64>>> = Lazy::new(|| {
    let g = PayoffSpec::call(1.0).unwrap();
    NS.iter()
        .map(|&n| (n, solve_game(&benchmark_config(n), &g).unwrap()))
        .collect()
});

fn report(num: u32, name: &str, pass: bool, details: &str) {
    println!(
        "acceptance {num:2} {name}: {} ({details})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance criterion {num} ({name}) failed: {details}");
}

#[test]
fn criterion_01_convergence_to_black_scholes() {
    let beta = bs_price_closed_form(1.0, C).unwrap();

    // closed form cross-checked by Monte Carlo at 1e6 samples
    let (mc, se) = bs_price_mc(&PayoffSpec::call(1.0).unwrap(), C, 1_000_000, 41).unwrap();
    assert!(
        (mc - beta).abs() <= 3.0 * se,
        "beta closed form {beta} vs MC {mc} +- {se}"
    );

    let gaps: Vec<(usize, f64)> = NS.iter().map(|&n| (n, SOLVED[&n].value - beta)).collect();
    let all_above = gaps.iter().all(|&(_, g)| g > 0.0);
    let strictly_decreasing = gaps.windows(2).all(|w| w[1].1 < w[0].1);
    let ratio = gaps[3].1 / gaps[0].1;
    let pass = all_above && strictly_decreasing && ratio <= 0.5;
    report(
        1,
        "convergence_to_black_scholes",
        pass,
        &format!(
            "beta = {beta:.6}, gaps = {:?}, ratio(256/4) = {ratio:.3}; require all > 0, \
             strictly decreasing, ratio <= 0.5",
            gaps.iter().map(|&(n, g)| format!("n={n}:{g:.6}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_02_single_step_closed_form() {
    let mut cfg = GameConfig::new(1, C, ZetaRule::Explicit { zeta: 0.5 });
    cfg.grid_size = 1025;
    cfg.moment_grid_size = 513;
    let g = PayoffSpec::call(1.0).unwrap();
    let sol = solve_game(&cfg, &g).unwrap();
    let v = (C_EXP - 1.0).sqrt() / 2.0;
    let rel_closed = ((sol.value - v) / v).abs();

    // the single-step game is one moment problem with objective (1 + t - 1)+
    let oracle = robust_pricing::moment::brute_force_oracle(
        |t: f64| t.max(0.0),
        &[0.0],
        C_EXP - 1.0,
        0.5,
        200,
    )
    .unwrap();
    let rel_oracle = ((sol.value - oracle) / oracle).abs();
    let pass = rel_closed <= 1e-5 && rel_oracle <= 1e-5;
    report(
        2,
        "single_step_closed_form",
        pass,
        &format!(
            "solver {:.9} vs sqrt(exp(c)-1)/2 = {v:.9} (rel {rel_closed:.2e}) and oracle \
             {oracle:.9} (rel {rel_oracle:.2e})",
            sol.value
        ),
    );
}

const C_EXP: f64 = 1.0408107741923882; // exp(0.04)

#[test]
fn criterion_03_moment_solver_vs_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut worst_rel = 0.0f64;
    let mut worst_cert = 0.0f64;
    for round in 0..100 {
        let zeta: f64 = rng.random_range(0.08..0.75);
        let v = rng.random_range(0.02..0.98) * zeta * zeta;
        let f = PwlObjective::random(&mut rng, zeta);
        let atoms = moment_grid(v, zeta, &f.kinks(), 101);
        let costs: Vec<f64> = atoms.iter().map(|&t| f.eval(t)).collect();
        let sol = solve_on_grid(&atoms, &costs, v, zeta).unwrap();
        let oracle = oracle_on_grid(&atoms, &costs, v, zeta).unwrap();
        let rel = (sol.value - oracle).abs() / (1.0 + oracle.abs());
        worst_rel = worst_rel.max(rel);
        let check = check_dual_certificate(|t| f.eval(t), &atoms, &sol.law, &sol.certificate);
        worst_cert = worst_cert.max(check.max_violation());
        assert!(check.ok, "round {round}: certificate failed {check:?}");
        sol.law.validate().unwrap();
    }
    let pass = worst_rel <= 1e-5 && worst_cert <= 1e-8;
    report(
        3,
        "moment_solver_vs_oracle",
        pass,
        &format!("100 random objectives: worst relative disagreement {worst_rel:.2e}, worst certificate violation {worst_cert:.2e}"),
    );
}

#[test]
fn criterion_04_martingale_and_variance_identity() {
    let policy = &SOLVED[&64].policy;
    let paths = sample_adversary_paths(policy, 100_000, 91).unwrap();

    let mut mean = McStats::new();
    for p in &paths {
        mean.push(p.terminal());
    }
    let mut lines = vec![format!(
        "E[S_nn] = {:.6} +- {:.6}",
        mean.mean(),
        mean.stderr()
    )];
    let mut pass = (mean.mean() - 1.0).abs() <= 5.0 * mean.stderr();

    for m in [16usize, 32, 64] {
        let target = (C * m as f64 / 64.0).exp();
        let mut acc = McStats::new();
        for p in &paths {
            acc.push(p.values[m] * p.values[m]);
        }
        pass &= (acc.mean() - target).abs() <= 5.0 * acc.stderr();
        lines.push(format!(
            "E[S_{m}^2] = {:.6} vs {target:.6} (+- {:.6})",
            acc.mean(),
            acc.stderr()
        ));
    }
    report(4, "martingale_variance_identity", pass, &lines.join("; "));
}

#[test]
fn criterion_05_taylor_bounds_for_every_policy_law() {
    let mut pass = true;
    let mut lines = Vec::new();
    for &n in &NS {
        let sol = &SOLVED[&n];
        let zeta = (n as f64).powf(-0.25);
        let laws: Vec<_> = sol.policy.all_laws().collect();
        for rep in [
            check_taylor_log_mean(C, n, zeta, laws.iter().copied()).unwrap(),
            check_taylor_log_second_moment(C, n, zeta, laws.iter().copied()).unwrap(),
            check_conditional_variance(C, n, zeta, laws.iter().copied()).unwrap(),
        ] {
            pass &= rep.status == CheckStatus::Pass;
            lines.push(format!("n={n} {}: margin {:.3e}", rep.name, rep.margin));
        }
    }
    report(5, "taylor_log_bounds", pass, &lines.join("; "));
}

#[test]
fn criterion_06_zc_violation_probability() {
    let mut pass = true;
    let mut lines = Vec::new();
    for n in [64usize, 256] {
        let zeta = (n as f64).powf(-0.25);
        let (est, se) = estimate_zc_violation(C, n, zeta, 100_000, 7 + n as u64).unwrap();
        let rhs = (1.0 - 1.0 / (n as f64).powi(2)).powi(n as i32);
        pass &= est >= rhs - 3.0 * se;
        lines.push(format!("n={n}: estimate {est:.5} vs (1-1/n^2)^n = {rhs:.5} - 3se"));
    }
    report(6, "zc_violation_probability", pass, &lines.join("; "));
}

#[test]
fn criterion_07_gaussian_tail() {
    let reports = check_gaussian_tail(&[16, 64, 256, 1024], C, ZetaRule::Power { delta: 0.25 });
    let pass = reports.iter().all(|r| r.status == CheckStatus::Pass);
    let details: Vec<String> = reports
        .iter()
        .map(|r| {
            format!(
                "n={}: tail {:.3e} <= {:.3e} [{:?}]",
                r.params["n"], r.measured, r.bound, r.status
            )
        })
        .collect();
    report(7, "gaussian_tail", pass, &details.join("; "));
}

#[test]
fn criterion_08_truncation_bound() {
    let policy = &SOLVED[&64].policy;
    let g = PayoffSpec::call(1.0).unwrap();
    let reports = check_truncation_bound(policy, &g, &[10.0, 100.0, 1000.0], 100_000, 17).unwrap();
    let pass = reports.iter().all(|r| r.status == CheckStatus::Pass);
    let details: Vec<String> = reports
        .iter()
        .map(|r| format!("M={}: gap {:.3e} <= {:.3e}", r.params["M"], r.measured, r.bound))
        .collect();
    report(8, "truncation_bound", pass, &details.join("; "));
}

#[test]
fn criterion_09_distributional_convergence() {
    let policies = [&SOLVED[&16].policy, &SOLVED[&64].policy, &SOLVED[&256].policy];
    let ks = ks_terminal_convergence(&policies, 100_000, 2024).unwrap();
    let d: Vec<f64> = ks.distances.iter().map(|&(_, d)| d).collect();
    let decreasing = d[1] < d[0] && d[2] < d[1];
    let ratio = d[2] / d[0];
    let pass = decreasing && ratio <= 0.5;
    report(
        9,
        "distributional_convergence",
        pass,
        &format!(
            "KS distances {:?}; strictly decreasing = {decreasing}, KS(256)/KS(16) = {ratio:.3} \
             (require <= 0.5)",
            ks.distances
        ),
    );
}

#[test]
fn criterion_10_investor_irrelevance() {
    let sol = &SOLVED[&64];
    let g = PayoffSpec::call(1.0).unwrap();
    let paths = sample_adversary_paths(&sol.policy, 100_000, 91).unwrap();
    let zero = loss_stats(&Strategy::zero(), &paths, &g).unwrap();
    let hedge = loss_stats(&Strategy::bs_delta(&g, C).unwrap(), &paths, &g).unwrap();

    // shared paths: the difference of the losses is the hedge's trading gain
    let strategies_agree = {
        let se = (zero.stderr.powi(2) + hedge.stderr.powi(2)).sqrt();
        (zero.mean - hedge.mean).abs() <= 5.0 * se
    };
    let zero_matches_value = (zero.mean - sol.value).abs() <= 5.0 * zero.stderr;
    let hedge_matches_value = (hedge.mean - sol.value).abs() <= 5.0 * hedge.stderr;
    let pass = strategies_agree && zero_matches_value && hedge_matches_value;
    report(
        10,
        "investor_irrelevance",
        pass,
        &format!(
            "zero {:.6} +- {:.6}, bs-delta {:.6} +- {:.6}, V0(1) = {:.6}",
            zero.mean, zero.stderr, hedge.mean, hedge.stderr, sol.value
        ),
    );
}

#[test]
fn criterion_11_exactness_sentinels() {
    let mut pass = true;
    let mut lines = Vec::new();

    // identity payoff: martingale fixed point at every n
    for &n in &NS {
        let mut cfg = GameConfig::new(n, C, ZetaRule::Power { delta: 0.25 });
        cfg.grid_size = 513;
        cfg.moment_grid_size = 257;
        let sol = solve_game(&cfg, &PayoffSpec::identity()).unwrap();
        pass &= (sol.value - 1.0).abs() <= 1e-6;
        lines.push(format!("identity n={n}: {:.9}", sol.value));
    }

    // constant payoff solves exactly
    let mut cfg = GameConfig::new(16, C, ZetaRule::Power { delta: 0.25 });
    cfg.grid_size = 257;
    cfg.moment_grid_size = 129;
    let sol = solve_game(&cfg, &PayoffSpec::constant(0.37).unwrap()).unwrap();
    pass &= sol.value == 0.37;
    lines.push(format!("constant: {:?}", sol.value));

    // determinism: bit-identical re-runs across worker counts
    let g = PayoffSpec::call(1.0).unwrap();
    let cfg = {
        let mut cfg = GameConfig::new(16, C, ZetaRule::Power { delta: 0.25 });
        cfg.grid_size = 513;
        cfg.moment_grid_size = 257;
        cfg
    };
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| solve_game(&cfg, &g).unwrap());
    let two = rayon::ThreadPoolBuilder::new()
        .num_threads(2)
        .build()
        .unwrap()
        .install(|| solve_game(&cfg, &g).unwrap());
    let rerun = solve_game(&cfg, &g).unwrap();
    let identical = one.value.to_bits() == two.value.to_bits()
        && one.value.to_bits() == rerun.value.to_bits()
        && one
            .stages
            .iter()
            .zip(&two.stages)
            .all(|(a, b)| a.values == b.values)
        && one
            .policy
            .stages
            .iter()
            .zip(&rerun.policy.stages)
            .all(|(a, b)| a == b);
    pass &= identical;
    lines.push(format!("determinism across workers/reruns: {identical}"));

    // sampling determinism at fixed seed
    let a = sample_adversary_paths(&SOLVED[&16].policy, 64, 5).unwrap();
    let b = sample_adversary_paths(&SOLVED[&16].policy, 64, 5).unwrap();
    pass &= a == b;

    report(11, "exactness_sentinels", pass, &lines.join("; "));
}
