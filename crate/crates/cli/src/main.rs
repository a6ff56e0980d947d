//! `robust-pricing`: pricing, game solving, adversary sampling, hedging
//! simulation and verification for the discrete minimax option-pricing game.
//!
//! Exit codes: 0 on success, 1 if any requested check failed, 2 on
//! configuration or input errors.

mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{parse_f64_list, parse_usize_list, FileConfig};
use robust_pricing::game::{solve_game, GameConfig, GameSolution, ZetaRule};
use robust_pricing::io;
use robust_pricing::moment;
use robust_pricing::payoff::PayoffSpec;
use robust_pricing::simulate::{
    loss_record, sample_adversary_paths, LossRecord, Strategy,
};
use robust_pricing::stochastic::{bs_price_closed_form, bs_price_exact, bs_price_mc};
use robust_pricing::verify::{self, CheckReport, CheckStatus};
use robust_pricing::{Error, Policy, Result};

const WORKERS_ENV: &str = "ROBUST_PRICING_WORKERS";

#[derive(Parser)]
#[command(
    name = "robust-pricing",
    about = "Minimax option pricing: exact game values, worst-case adversaries, and \
             verification of their quantitative properties",
    version
)]
struct Cli {
    /// Flat key = value configuration file; flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Print the fully resolved run configuration as JSON and exit.
    #[arg(long, global = true)]
    dry_run: bool,

    /// Worker-thread cap for intra-stage and per-path parallelism
    /// (default: ROBUST_PRICING_WORKERS or all cores). Results are
    /// identical for every worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PayoffArgs {
    /// Payoff kind: call | put | identity | constant | csv.
    #[arg(long)]
    payoff: Option<String>,

    /// Strike for call/put payoffs.
    #[arg(long)]
    k: Option<f64>,

    /// Value of the constant payoff.
    #[arg(long)]
    c0: Option<f64>,

    /// Two-column CSV (x,g with a header row) for generic payoffs.
    #[arg(long)]
    payoff_csv: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct GameArgs {
    /// Variance parameter (per-unit-time log variance).
    #[arg(long)]
    c: Option<f64>,

    /// Number of trading rounds.
    #[arg(long)]
    n: Option<usize>,

    /// Explicit hard bound on step ratios (mutually exclusive with --delta).
    #[arg(long)]
    zeta: Option<f64>,

    /// Power-rule exponent: zeta_n = n^(-1/2 + delta), 0 < delta < 1/2.
    #[arg(long)]
    delta: Option<f64>,

    /// Price-grid resolution.
    #[arg(long)]
    grid_size: Option<usize>,

    /// Uniform resolution of the per-step candidate-atom grid.
    #[arg(long)]
    moment_grid: Option<usize>,

    /// Grid half-width in terminal-sigma units.
    #[arg(long)]
    tail_sigmas: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Black-Scholes price of a call (closed form, optionally Monte Carlo).
    ///
    /// Prints a JSON record {schema_version, method, k, c, value, stderr,
    /// samples, seed}.
    PriceBs {
        /// Strike.
        #[arg(long)]
        k: Option<f64>,
        /// Variance parameter.
        #[arg(long)]
        c: Option<f64>,
        /// Also estimate by Monte Carlo over lognormal draws.
        #[arg(long)]
        mc: bool,
        /// Monte Carlo sample count.
        #[arg(long)]
        samples: Option<usize>,
        /// RNG seed.
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Solve one per-step moment problem and dump (law, value, certificate)
    /// as JSON (debugging aid).
    SolveMoment {
        /// Objective: tplus | abs | square | linear.
        #[arg(long)]
        objective: Option<String>,
        /// Second-moment budget.
        #[arg(long)]
        v: Option<f64>,
        /// Hard support bound.
        #[arg(long)]
        zeta: Option<f64>,
        /// Uniform candidate-grid resolution.
        #[arg(long)]
        moment_grid: Option<usize>,
    },

    /// Solve the n-round game by backward induction.
    ///
    /// Prints {schema_version, n, c, zeta, v, grid_size, value}. With
    /// --out-values, writes CSV rows `stage,node,price,value`; with
    /// --out-policy, writes the versioned JSON policy file.
    SolveGame {
        #[command(flatten)]
        payoff: PayoffArgs,
        #[command(flatten)]
        game: GameArgs,
        /// Write the optimal transition laws (JSON policy file).
        #[arg(long)]
        out_policy: Option<PathBuf>,
        /// Also embed every stage value surface in the policy file.
        #[arg(long)]
        store_values: bool,
        /// Write stage value surfaces as CSV: stage,node,price,value.
        #[arg(long)]
        out_values: Option<PathBuf>,
    },

    /// Sample worst-case adversary paths from a solved policy.
    ///
    /// Writes CSV with one row per path: `path,S_0,...,S_n`.
    SampleAdversary {
        /// Policy file produced by solve-game --out-policy; if absent, the
        /// game is solved in-process from the game/payoff flags.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[command(flatten)]
        payoff: PayoffArgs,
        #[command(flatten)]
        game: GameArgs,
        /// Number of paths.
        #[arg(long)]
        paths: Option<usize>,
        /// RNG seed (path i uses stream i).
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Simulate an investor strategy against the worst-case adversary.
    ///
    /// Prints {strategy, paths, seed, mean, stderr, min, max, solver_value}.
    /// With --out, writes per-path CSV rows
    /// `seed,path,terminal_price,payoff,trading_gain,loss`.
    HedgeSim {
        /// Strategy name: zero | buy-and-hold | bs-delta.
        #[arg(long)]
        strategy: Option<String>,
        /// Policy file; if absent the game is solved in-process.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[command(flatten)]
        payoff: PayoffArgs,
        #[command(flatten)]
        game: GameArgs,
        /// Number of paths.
        #[arg(long)]
        paths: Option<usize>,
        /// RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Per-path loss CSV output.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Run the full verification battery against solved policies.
    ///
    /// Prints one line per check plus a summary; with --out, writes one JSON
    /// CheckReport per line. Exits 1 if any non-skipped check fails.
    Verify {
        #[command(flatten)]
        payoff: PayoffArgs,
        #[command(flatten)]
        game: GameArgs,
        /// Comma-separated list of round counts.
        #[arg(long)]
        n_list: Option<String>,
        /// Monte Carlo sample count per statistical check.
        #[arg(long)]
        samples: Option<usize>,
        /// RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Truncation levels for the payoff-truncation check.
        #[arg(long)]
        m_list: Option<String>,
        /// JSON-lines output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Solve the game across an n-list and tabulate the gap to the
    /// Black-Scholes limit.
    ///
    /// Prints the table (text or JSON rows with --format json); with --out,
    /// writes CSV `n,zeta,feasible,value,beta,gap`. Exits 1 if a gap is
    /// negative or the gaps increase.
    Sweep {
        #[command(flatten)]
        payoff: PayoffArgs,
        #[command(flatten)]
        game: GameArgs,
        /// Comma-separated list of round counts.
        #[arg(long)]
        n_list: Option<String>,
        /// Output CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stdout format: text | json.
        #[arg(long)]
        format: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };

    let workers = match cli.workers {
        Some(w) => Some(w),
        None => match file.get("workers") {
            Some(raw) => Some(raw.parse::<usize>().map_err(|_| {
                Error::Parse(format!("config key 'workers': cannot parse '{raw}'"))
            })?),
            None => std::env::var(WORKERS_ENV)
                .ok()
                .map(|raw| {
                    raw.parse::<usize>().map_err(|_| {
                        Error::Parse(format!("{WORKERS_ENV}: cannot parse '{raw}'"))
                    })
                })
                .transpose()?,
        },
    };

    let body = || dispatch(&cli, &file);
    match workers {
        Some(w) if w > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?
            .install(body),
        _ => body(),
    }
}

fn resolve_payoff(args: &PayoffArgs, file: &FileConfig) -> Result<(String, PayoffSpec<f64>)> {
    let kind = file
        .resolve(args.payoff.clone(), "payoff", "call".to_string())?
        .to_lowercase();
    let payoff = match kind.as_str() {
        "call" => PayoffSpec::call(file.resolve(args.k, "k", 1.0)?)?,
        "put" => PayoffSpec::put(file.resolve(args.k, "k", 1.0)?)?,
        "identity" => PayoffSpec::identity(),
        "constant" => PayoffSpec::constant(file.resolve(args.c0, "c0", 1.0)?)?,
        "csv" => {
            let path = file
                .resolve_opt(args.payoff_csv.clone(), "payoff-csv")?
                .ok_or_else(|| {
                    Error::InvalidParameter("--payoff csv needs --payoff-csv <file>".into())
                })?;
            PayoffSpec::from_csv(path)?
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown payoff '{other}' (expected call | put | identity | constant | csv)"
            )))
        }
    };
    Ok((kind, payoff))
}

#[derive(Serialize)]
struct ResolvedGame {
    n: usize,
    c: f64,
    zeta: f64,
    grid_size: usize,
    moment_grid_size: usize,
    tail_sigmas: f64,
}

fn resolve_game(args: &GameArgs, file: &FileConfig, n: usize) -> Result<GameConfig<f64>> {
    let c = file.resolve(args.c, "c", 0.04)?;
    let zeta = file.resolve_opt(args.zeta, "zeta")?;
    let delta = file.resolve_opt(args.delta, "delta")?;
    let rule = match (zeta, delta) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidParameter(
                "--zeta and --delta are mutually exclusive".into(),
            ))
        }
        (Some(z), None) => ZetaRule::Explicit { zeta: z },
        (None, Some(d)) => ZetaRule::Power { delta: d },
        (None, None) => ZetaRule::Power { delta: 0.25 },
    };
    let mut config = GameConfig::new(n, c, rule);
    config.grid_size = file.resolve(args.grid_size, "grid-size", config.grid_size)?;
    config.moment_grid_size =
        file.resolve(args.moment_grid, "moment-grid", config.moment_grid_size)?;
    config.tail_sigmas = file.resolve(args.tail_sigmas, "tail-sigmas", config.tail_sigmas)?;
    Ok(config)
}

fn dry_run_print<T: Serialize>(resolved: &T) -> Result<i32> {
    println!("{}", serde_json::to_string_pretty(resolved)?);
    Ok(0)
}

fn solve_or_load(
    policy_path: &Option<PathBuf>,
    payoff_args: &PayoffArgs,
    game_args: &GameArgs,
    file: &FileConfig,
) -> Result<(Policy, Option<f64>, PayoffSpec<f64>)> {
    let (_, payoff) = resolve_payoff(payoff_args, file)?;
    match file.resolve_opt(policy_path.clone(), "policy")? {
        Some(path) => {
            let loaded = io::PolicyFile::load(path)?;
            let value = loaded.value;
            Ok((loaded.to_policy()?, Some(value), payoff))
        }
        None => {
            let n = file.resolve(game_args.n, "n", 64)?;
            let config = resolve_game(game_args, file, n)?;
            let solution = solve_game(&config, &payoff)?;
            Ok((solution.policy, Some(solution.value), payoff))
        }
    }
}

fn dispatch(cli: &Cli, file: &FileConfig) -> Result<i32> {
    match &cli.command {
        Command::PriceBs {
            k,
            c,
            mc,
            samples,
            seed,
        } => {
            #[derive(Serialize)]
            struct Resolved {
                subcommand: &'static str,
                k: f64,
                c: f64,
                method: &'static str,
                samples: Option<usize>,
                seed: Option<u64>,
            }
            let k = file.resolve(*k, "k", 1.0)?;
            let c = file.resolve(*c, "c", 0.04)?;
            let mc = *mc || file.get("mc").is_some_and(|v| v == "true" || v == "1");
            let samples = file.resolve(*samples, "samples", 1_000_000)?;
            let seed = file.resolve(*seed, "seed", 0)?;
            let method = if mc { "monte_carlo" } else { "closed_form" };
            let resolved = Resolved {
                subcommand: "price-bs",
                k,
                c,
                method,
                samples: mc.then_some(samples),
                seed: mc.then_some(seed),
            };
            if cli.dry_run {
                return dry_run_print(&resolved);
            }

            #[derive(Serialize)]
            struct Record {
                schema_version: u32,
                method: &'static str,
                k: f64,
                c: f64,
                value: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                stderr: Option<f64>,
                #[serde(skip_serializing_if = "Option::is_none")]
                samples: Option<usize>,
                #[serde(skip_serializing_if = "Option::is_none")]
                seed: Option<u64>,
            }
            let record = if mc {
                let (value, stderr) = bs_price_mc(&PayoffSpec::call(k)?, c, samples, seed)?;
                Record {
                    schema_version: io::SCHEMA_VERSION,
                    method,
                    k,
                    c,
                    value,
                    stderr: Some(stderr),
                    samples: Some(samples),
                    seed: Some(seed),
                }
            } else {
                Record {
                    schema_version: io::SCHEMA_VERSION,
                    method,
                    k,
                    c,
                    value: bs_price_closed_form(k, c)?,
                    stderr: None,
                    samples: None,
                    seed: None,
                }
            };
            println!("{}", serde_json::to_string(&record)?);
            Ok(0)
        }

        Command::SolveMoment {
            objective,
            v,
            zeta,
            moment_grid,
        } => {
            let objective = file.resolve(objective.clone(), "objective", "tplus".to_string())?;
            let v = file.resolve(*v, "v", 0.01)?;
            let zeta = file.resolve(*zeta, "zeta", 0.5)?;
            let grid = file.resolve(*moment_grid, "moment-grid", moment::DEFAULT_GRID_SIZE)?;
            #[derive(Serialize)]
            struct Resolved<'a> {
                subcommand: &'static str,
                objective: &'a str,
                v: f64,
                zeta: f64,
                moment_grid: usize,
            }
            let resolved = Resolved {
                subcommand: "solve-moment",
                objective: &objective,
                v,
                zeta,
                moment_grid: grid,
            };
            if cli.dry_run {
                return dry_run_print(&resolved);
            }
            let (f, kinks): (Box<dyn Fn(f64) -> f64>, Vec<f64>) = match objective.as_str() {
                "tplus" => (Box::new(|t: f64| t.max(0.0)), vec![0.0]),
                "abs" => (Box::new(|t: f64| t.abs()), vec![0.0]),
                "square" => (Box::new(|t: f64| t * t), vec![]),
                "linear" => (Box::new(|t: f64| t), vec![]),
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown objective '{other}' (expected tplus | abs | square | linear)"
                    )))
                }
            };
            let sol = moment::solve_moment_problem(&f, &kinks, v, zeta, grid)?;
            #[derive(Serialize)]
            struct Dump {
                schema_version: u32,
                objective: String,
                v: f64,
                zeta: f64,
                value: f64,
                law: Vec<(f64, f64)>,
                certificate: Certificate,
            }
            #[derive(Serialize)]
            struct Certificate {
                a: f64,
                b: f64,
                cq: f64,
            }
            println!(
                "{}",
                serde_json::to_string(&Dump {
                    schema_version: io::SCHEMA_VERSION,
                    objective,
                    v,
                    zeta,
                    value: sol.value,
                    law: sol.law.atoms.clone(),
                    certificate: Certificate {
                        a: sol.certificate.a,
                        b: sol.certificate.b,
                        cq: sol.certificate.cq,
                    },
                })?
            );
            Ok(0)
        }

        Command::SolveGame {
            payoff,
            game,
            out_policy,
            store_values,
            out_values,
        } => {
            let (payoff_kind, payoff_spec) = resolve_payoff(payoff, file)?;
            let n = file.resolve(game.n, "n", 64)?;
            let config = resolve_game(game, file, n)?;
            let out_policy = file.resolve_opt(out_policy.clone(), "out-policy")?;
            let out_values = file.resolve_opt(out_values.clone(), "out-values")?;
            let store_values =
                *store_values || file.get("store-values").is_some_and(|v| v == "true");
            #[derive(Serialize)]
            struct Resolved {
                subcommand: &'static str,
                payoff: String,
                game: ResolvedGame,
                out_policy: Option<PathBuf>,
                out_values: Option<PathBuf>,
                store_values: bool,
            }
            let resolved = Resolved {
                subcommand: "solve-game",
                payoff: payoff_kind,
                game: ResolvedGame {
                    n,
                    c: config.c,
                    zeta: config.zeta(),
                    grid_size: config.grid_size,
                    moment_grid_size: config.moment_grid_size,
                    tail_sigmas: config.tail_sigmas,
                },
                out_policy: out_policy.clone(),
                out_values: out_values.clone(),
                store_values,
            };
            if cli.dry_run {
                return dry_run_print(&resolved);
            }
            config.validate()?;
            let solution: GameSolution<f64> = solve_game(&config, &payoff_spec)?;
            if let Some(path) = &out_policy {
                io::PolicyFile::from_solution(&solution, store_values).save(path)?;
            }
            if let Some(path) = &out_values {
                io::write_values_csv(path, &solution.stages)?;
            }
            #[derive(Serialize)]
            struct Record {
                schema_version: u32,
                n: usize,
                c: f64,
                zeta: f64,
                v: f64,
                grid_size: usize,
                value: f64,
                zeta_condition_holds: bool,
            }
            println!(
                "{}",
                serde_json::to_string(&Record {
                    schema_version: io::SCHEMA_VERSION,
                    n,
                    c: config.c,
                    zeta: config.zeta(),
                    v: config.step_variance(),
                    grid_size: config.grid_size,
                    value: solution.value,
                    zeta_condition_holds: config.zeta_condition_holds(),
                })?
            );
            Ok(0)
        }

        Command::SampleAdversary {
            policy,
            payoff,
            game,
            paths,
            seed,
            out,
        } => {
            let paths_n = file.resolve(*paths, "paths", 1000)?;
            let seed = file.resolve(*seed, "seed", 0)?;
            let out = file
                .resolve_opt(out.clone(), "out")?
                .ok_or_else(|| Error::InvalidParameter("sample-adversary needs --out".into()))?;
            #[derive(Serialize)]
            struct Resolved {
                subcommand: &'static str,
                policy: Option<PathBuf>,
                paths: usize,
                seed: u64,
                out: PathBuf,
            }
            let resolved = Resolved {
                subcommand: "sample-adversary",
                policy: file.resolve_opt(policy.clone(), "policy")?,
                paths: paths_n,
                seed,
                out: out.clone(),
            };
            if cli.dry_run {
                return dry_run_print(&resolved);
            }
            let (policy, _, _) = solve_or_load(policy, payoff, game, file)?;
            let sampled = sample_adversary_paths(&policy, paths_n, seed)?;
            io::write_paths_csv(&out, &sampled)?;
            println!(
                "{}",
                serde_json::to_string(&serde_json::json!({
                    "schema_version": io::SCHEMA_VERSION,
                    "paths": paths_n,
                    "n": policy.n,
                    "seed": seed,
                    "out": out,
                }))?
            );
            Ok(0)
        }

        Command::HedgeSim {
            strategy,
            policy,
            payoff,
            game,
            paths,
            seed,
            out,
        } => {
            let strategy_name = file.resolve(strategy.clone(), "strategy", "zero".to_string())?;
            let paths_n = file.resolve(*paths, "paths", 10_000)?;
            let seed = file.resolve(*seed, "seed", 0)?;
            let out = file.resolve_opt(out.clone(), "out")?;
            #[derive(Serialize)]
            struct Resolved {
                subcommand: &'static str,
                strategy: String,
                paths: usize,
                seed: u64,
                out: Option<PathBuf>,
            }
            let resolved = Resolved {
                subcommand: "hedge-sim",
                strategy: strategy_name.clone(),
                paths: paths_n,
                seed,
                out: out.clone(),
            };
            if cli.dry_run {
                return dry_run_print(&resolved);
            }
            let (policy, solver_value, payoff_spec) = solve_or_load(policy, payoff, game, file)?;
            let c = policy.c;
            let strategy = match strategy_name.as_str() {
                "zero" => Strategy::zero(),
                "buy-and-hold" => Strategy::buy_and_hold(),
                "bs-delta" => Strategy::bs_delta(&payoff_spec, c)?,
                other => {
                    return Err(Error::UnsupportedStrategy(format!(
                        "unknown strategy '{other}' (expected zero | buy-and-hold | bs-delta)"
                    )))
                }
            };
            let sampled = sample_adversary_paths(&policy, paths_n, seed)?;
            let records: Vec<LossRecord<f64>> = sampled
                .iter()
                .map(|p| loss_record(&strategy, p, &payoff_spec))
                .collect::<Result<_>>()?;
            if let Some(path) = &out {
                io::write_losses_csv(path, seed, &records)?;
            }
            let mut acc = robust_pricing::math::McStats::new();
            for r in &records {
                acc.push(r.loss);
            }
            println!(
                "{}",
                serde_json::to_string(&serde_json::json!({
                    "schema_version": io::SCHEMA_VERSION,
                    "strategy": strategy.name,
                    "paths": paths_n,
                    "seed": seed,
                    "mean": acc.mean(),
                    "stderr": acc.stderr(),
                    "min": acc.min(),
                    "max": acc.max(),
                    "solver_value": solver_value,
                }))?
            );
            Ok(0)
        }

        Command::Verify {
            payoff,
            game,
            n_list,
            samples,
            seed,
            m_list,
            out,
        } => {
            let n_list = parse_usize_list(&file.resolve(
                n_list.clone(),
                "n-list",
                "16,64,256".to_string(),
            )?)?;
            let samples = file.resolve(*samples, "samples", 100_000)?;
            let seed = file.resolve(*seed, "seed", 0)?;
            let m_list = parse_f64_list(&file.resolve(
                m_list.clone(),
                "m-list",
                "10,100,1000".to_string(),
            )?)?;
            let (payoff_kind, payoff_spec) = resolve_payoff(payoff, file)?;
            let probe = resolve_game(game, file, *n_list.first().unwrap_or(&16))?;
            #[derive(Serialize)]
            struct Resolved {
                subcommand: &'static str,
                payoff: String,
                n_list: Vec<usize>,
                c: f64,
                samples: usize,
                seed: u64,
                m_list: Vec<f64>,
                out: Option<PathBuf>,
            }
            let resolved = Resolved {
                subcommand: "verify",
                payoff: payoff_kind,
                n_list: n_list.clone(),
                c: probe.c,
                samples,
                seed,
                m_list: m_list.clone(),
                out: file.resolve_opt(out.clone(), "out")?,
            };
            if cli.dry_run {
                return dry_run_print(&resolved);
            }
            let reports = run_verification(
                &payoff_spec,
                game,
                file,
                &n_list,
                samples,
                seed,
                &m_list,
            )?;
            if let Some(path) = &resolved.out {
                let mut text = String::new();
                for r in &reports {
                    text.push_str(&r.to_json_line());
                    text.push('\n');
                }
                std::fs::write(path, text)?;
            }
            let mut passed = 0;
            let mut failed = 0;
            let mut skipped = 0;
            for r in &reports {
                let tag = match r.status {
                    CheckStatus::Pass => {
                        passed += 1;
                        "PASS"
                    }
                    CheckStatus::Fail => {
                        failed += 1;
                        "FAIL"
                    }
                    CheckStatus::Skipped => {
                        skipped += 1;
                        "SKIP"
                    }
                };
                let params: Vec<String> = r
                    .params
                    .iter()
                    .filter(|(k, _)| ["n", "m", "M"].contains(&k.as_str()))
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect();
                println!(
                    "{tag} {name:<28} {params:<18} measured {measured:>13.6e}  bound {bound:>13.6e}",
                    name = r.name,
                    params = params.join(" "),
                    measured = r.measured,
                    bound = r.bound,
                );
            }
            println!("verify: {passed} passed, {failed} failed, {skipped} skipped");
            Ok(if failed > 0 { 1 } else { 0 })
        }

        Command::Sweep {
            payoff,
            game,
            n_list,
            out,
            format,
        } => {
            let n_list = parse_usize_list(&file.resolve(
                n_list.clone(),
                "n-list",
                "4,16,64".to_string(),
            )?)?;
            let (payoff_kind, payoff_spec) = resolve_payoff(payoff, file)?;
            let probe = resolve_game(game, file, *n_list.first().unwrap_or(&16))?;
            let format = file.resolve(format.clone(), "format", "text".to_string())?;
            let out = file.resolve_opt(out.clone(), "out")?;
            #[derive(Serialize)]
            struct Resolved {
                subcommand: &'static str,
                payoff: String,
                n_list: Vec<usize>,
                c: f64,
                grid_size: usize,
                moment_grid_size: usize,
                format: String,
                out: Option<PathBuf>,
            }
            let resolved = Resolved {
                subcommand: "sweep",
                payoff: payoff_kind,
                n_list: n_list.clone(),
                c: probe.c,
                grid_size: probe.grid_size,
                moment_grid_size: probe.moment_grid_size,
                format: format.clone(),
                out: out.clone(),
            };
            if cli.dry_run {
                return dry_run_print(&resolved);
            }
            let table = verify::convergence_sweep(
                &payoff_spec,
                probe.c,
                &n_list,
                probe.zeta_rule,
                probe.grid_size,
                probe.moment_grid_size,
            )?;
            if let Some(path) = &out {
                io::write_sweep_csv(path, &table)?;
            }
            match format.as_str() {
                "json" => {
                    for row in &table.rows {
                        println!("{}", serde_json::to_string(row)?);
                    }
                }
                _ => {
                    println!(
                        "{:>6} {:>10} {:>9} {:>12} {:>12} {:>13}",
                        "n", "zeta", "feasible", "value", "beta", "gap"
                    );
                    for row in &table.rows {
                        println!(
                            "{:>6} {:>10.6} {:>9} {:>12} {:>12.6} {:>13}",
                            row.n,
                            row.zeta,
                            row.feasible,
                            row.value.map(|v| format!("{v:.6}")).unwrap_or_default(),
                            row.beta,
                            row.gap.map(|g| format!("{g:+.6}")).unwrap_or_default(),
                        );
                    }
                }
            }
            let ok = table.report.status != CheckStatus::Fail;
            if !ok {
                eprintln!("sweep: gaps are not nonnegative and nonincreasing");
            }
            Ok(if ok { 0 } else { 1 })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_verification(
    payoff: &PayoffSpec<f64>,
    game: &GameArgs,
    file: &FileConfig,
    n_list: &[usize],
    samples: usize,
    seed: u64,
    m_list: &[f64],
) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    let mut solved: Vec<(usize, GameConfig<f64>, GameSolution<f64>)> = Vec::new();
    for &n in n_list {
        let config = resolve_game(game, file, n)?;
        config.validate()?;
        let solution = solve_game(&config, payoff)?;
        solved.push((n, config, solution));
    }

    for (n, config, solution) in &solved {
        let laws: Vec<_> = solution.policy.all_laws().collect();
        reports.push(verify::check_taylor_log_mean(
            config.c,
            *n,
            config.zeta(),
            laws.iter().copied(),
        )?);
        reports.push(verify::check_taylor_log_second_moment(
            config.c,
            *n,
            config.zeta(),
            laws.iter().copied(),
        )?);
        reports.push(verify::check_conditional_variance(
            config.c,
            *n,
            config.zeta(),
            laws.iter().copied(),
        )?);
    }

    // sampling-based identities on the largest solved game
    if let Some((_, _, solution)) = solved.last() {
        reports.push(verify::check_martingale(&solution.policy, samples, seed)?);
        reports.extend(verify::check_variance_identity(
            &solution.policy,
            samples,
            seed.wrapping_add(1),
        )?);
        reports.extend(verify::check_truncation_bound(
            &solution.policy,
            payoff,
            m_list,
            samples,
            seed.wrapping_add(2),
        )?);
    }

    let probe = resolve_game(game, file, *n_list.first().unwrap())?;
    reports.extend(verify::check_gaussian_tail(n_list, probe.c, probe.zeta_rule));
    reports.extend(verify::check_probconv(
        probe.c,
        n_list,
        probe.zeta_rule,
        samples.max(10_000),
        seed.wrapping_add(3),
    )?);

    if solved.len() >= 2 {
        let policies: Vec<&Policy> = solved.iter().map(|(_, _, s)| &s.policy).collect();
        let ks = verify::ks_terminal_convergence(&policies, samples, seed.wrapping_add(4))?;
        reports.push(ks.report);
    }

    let beta = bs_price_exact(payoff, probe.c)?;
    let values: Vec<(usize, f64, Option<f64>)> = solved
        .iter()
        .map(|(n, config, s)| (*n, config.zeta(), Some(s.value)))
        .collect();
    reports.push(verify::sweep_from_values(&values, beta).report);

    Ok(reports)
}
