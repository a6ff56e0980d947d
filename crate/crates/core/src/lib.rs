//! Numerical laboratory for the discrete minimax option-pricing game.
//!
//! An adversary ("Nature") picks a randomized price path for an asset under
//! three constraints: each step ratio `S_{m}/S_{m-1} - 1` has conditional mean
//! zero (martingale), conditional second moment exactly `exp(c/n) - 1`
//! (saturated variance budget), and is hard-bounded by `zeta_n`. The investor
//! hedges a convex payoff `g` at `n` trading dates. Against a martingale
//! adversary the investor's trades are irrelevant in expectation, so the game
//! value is `sup E[g(S_n)]` over Nature's constrained laws, computed here
//! exactly by backward induction over per-step moment problems.
//!
//! The crate provides:
//!
//! * [`payoff`] — convex Lipschitz payoff specifications (call/put/piecewise
//!   linear) with validation and CSV loading.
//! * [`moment`] — the per-step moment problem: maximize `E[f(T)]` over laws on
//!   `[-zeta, zeta]` with `E[T] = 0`, `E[T^2] = v`, solved by a dense
//!   three-row simplex with a quadratic dual certificate, plus an independent
//!   brute-force oracle.
//! * [`game`] — backward induction on a geometric price grid, producing the
//!   game value, per-node optimal laws and per-stage value functions.
//! * [`stochastic`] — geometric Brownian motion sampling and Black–Scholes
//!   pricing (closed form and Monte Carlo).
//! * [`simulate`] — sampling worst-case adversary paths and evaluating the
//!   game loss for pluggable investor strategies.
//! * [`verify`] — machine checks of the quantitative bounds the solver output
//!   is expected to satisfy (Taylor bounds on log returns, variance
//!   identities, Gaussian tails, truncation bounds, distributional
//!   convergence).
//!
//! All numerics are generic over the scalar type through [`scalar::Scalar`]
//! (any `num_traits::Float`); the aliases below fix `f64` for ordinary use.

pub mod error;
pub mod game;
pub mod io;
pub mod math;
pub mod moment;
pub mod payoff;
pub mod scalar;
pub mod simulate;
pub mod stochastic;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type used by the concrete aliases and the CLI.
pub type Real = f64;

pub type Payoff = payoff::PayoffSpec<Real>;
pub type Law = moment::FiniteLaw<Real>;
pub type Certificate = moment::DualCertificate<Real>;
pub type Config = game::GameConfig<Real>;
pub type Value = game::ValueFunction<Real>;
pub type Policy = game::AdversaryPolicy<Real>;
pub type Solution = game::GameSolution<Real>;
pub type Path = stochastic::DiscretePath<Real>;
pub type Gbm = stochastic::GbmParams<Real>;
pub type Strategy = simulate::Strategy<Real>;
