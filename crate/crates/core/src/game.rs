//! Exact value of the discrete pricing game by backward induction.
//!
//! Stage values live on a geometric price grid wide enough to contain every
//! price reachable by `n` ratio-bounded steps. The recursion is
//! `V_{m-1}(s) = max E[V_m(s(1+T))]` over laws with mean zero, second moment
//! `exp(c/n) - 1` and support in `[-zeta_n, zeta_n]`; each node is one moment
//! problem. Because the grid is uniform in log-price, the kinks of the
//! interpolated objective sit at the same ratio offsets for every node, so a
//! single candidate-atom grid serves the whole solve and the per-atom
//! interpolation weights are node-independent.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moment::{self, FiniteLaw};
use crate::payoff::PayoffSpec;
use crate::scalar::{real, Scalar};

/// Price-grid margin factor.
const GRID_MARGIN: f64 = 1.05;

/// Default half-width of the grid in units of the terminal log standard
/// deviation `sqrt(c)`. Mass beyond this many sigmas is far below every
/// tolerance in use, and the linear edge extension is exact for
/// piecewise-linear payoff tails, so the grid concentrates its nodes where
/// the value function has curvature instead of stretching across the full
/// reachability envelope.
pub const DEFAULT_TAIL_SIGMAS: f64 = 8.0;

/// Tolerance scale for the per-stage convexity assertion on slopes.
const CONVEXITY_TOL: f64 = 1e-9;

pub const DEFAULT_GRID_SIZE: usize = 513;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaRule<F> {
    /// `zeta_n = n^(-1/2 + delta)` with `0 < delta < 1/2`.
    Power { delta: F },
    Explicit { zeta: F },
}

impl<F: Scalar> ZetaRule<F> {
    pub fn zeta(&self, n: usize) -> F {
        match *self {
            ZetaRule::Power { delta } => real::<F>(n as f64).powf(delta - real(0.5)),
            ZetaRule::Explicit { zeta } => zeta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConfig<F> {
    /// Number of trading rounds.
    pub n: usize,
    /// Variance parameter: per-unit-time log-variance scale.
    pub c: F,
    pub zeta_rule: ZetaRule<F>,
    /// Number of price-grid nodes.
    pub grid_size: usize,
    /// Resolution of the uniform part of the per-step candidate-atom grid.
    pub moment_grid_size: usize,
    /// Grid half-width in terminal-sigma units (see [`DEFAULT_TAIL_SIGMAS`]).
    pub tail_sigmas: F,
    /// Optional price-grid truncation overrides. Must still cover the
    /// reachability envelope.
    pub s_min: Option<F>,
    pub s_max: Option<F>,
}

impl<F: Scalar> GameConfig<F> {
    pub fn new(n: usize, c: F, zeta_rule: ZetaRule<F>) -> Self {
        GameConfig {
            n,
            c,
            zeta_rule,
            grid_size: DEFAULT_GRID_SIZE,
            moment_grid_size: moment::DEFAULT_GRID_SIZE,
            tail_sigmas: real(DEFAULT_TAIL_SIGMAS),
            s_min: None,
            s_max: None,
        }
    }

    pub fn zeta(&self) -> F {
        self.zeta_rule.zeta(self.n)
    }

    /// Per-step second moment `exp(c/n) - 1` (the variance constraint held
    /// with equality).
    pub fn step_variance(&self) -> F {
        (self.c / real(self.n as f64)).exp() - F::one()
    }

    /// Whether `n zeta_n^2 / log n > 16 c` holds at this `n` (the asymptotic
    /// condition on the zeta sequence).
    pub fn zeta_condition_holds(&self) -> bool {
        if self.n <= 1 {
            return false;
        }
        let n = real::<F>(self.n as f64);
        let z = self.zeta();
        n * z * z / n.ln() > real::<F>(16.0) * self.c
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !(self.c > F::zero()) {
            return Err(Error::InvalidParameter(format!(
                "variance parameter c = {} must be positive",
                self.c
            )));
        }
        if let ZetaRule::Power { delta } = self.zeta_rule {
            if !(delta > F::zero() && delta < real(0.5)) {
                return Err(Error::InvalidParameter(format!(
                    "power-rule delta = {delta} must lie in (0, 1/2)"
                )));
            }
        }
        let zeta = self.zeta();
        if !(zeta > F::zero() && zeta < F::one()) {
            return Err(Error::InvalidParameter(format!(
                "zeta_n = {zeta} must lie in (0, 1); at n = {} pick an explicit zeta",
                self.n
            )));
        }
        if self.grid_size < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid_size = {} is too small",
                self.grid_size
            )));
        }
        if self.moment_grid_size < 2 {
            return Err(Error::InvalidParameter(format!(
                "moment_grid_size = {} is too small",
                self.moment_grid_size
            )));
        }
        if !(self.tail_sigmas >= real(3.0)) {
            return Err(Error::InvalidParameter(format!(
                "tail_sigmas = {} must be at least 3",
                self.tail_sigmas
            )));
        }
        let v = self.step_variance();
        if v > zeta * zeta {
            return Err(Error::Infeasible(format!(
                "exp(c/n) - 1 = {v} exceeds zeta_n^2 = {}: the per-step moment problem is \
                 infeasible; increase n or loosen zeta",
                zeta * zeta
            )));
        }
        let n_f = real::<F>(self.n as f64);
        if let Some(s_min) = self.s_min {
            if !(s_min > F::zero()) || s_min.ln() > n_f * (F::one() - zeta).ln() {
                return Err(Error::GridExtent(format!(
                    "s_min = {s_min} truncates the reachability envelope (1 - zeta)^n = {}",
                    ((F::one() - zeta).ln() * n_f).exp()
                )));
            }
        }
        if let Some(s_max) = self.s_max {
            if s_max.ln() < n_f * (F::one() + zeta).ln() {
                return Err(Error::GridExtent(format!(
                    "s_max = {s_max} truncates the reachability envelope (1 + zeta)^n = {}",
                    ((F::one() + zeta).ln() * n_f).exp()
                )));
            }
        }
        Ok(())
    }
}

/// Geometric price grid `s_j = exp((j - zero_pos) h)`: uniform in log-price
/// with `s = 1` exactly on the ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceGrid<F> {
    pub log_step: F,
    /// Index of the node at `s = 1`.
    pub zero_pos: usize,
    pub nodes: Vec<F>,
}

impl<F: Scalar> PriceGrid<F> {
    /// Build the grid for a payoff: the probabilistic core (`TAIL_SIGMAS`
    /// terminal standard deviations around `s = 1` and every payoff kink),
    /// clipped to the reachability envelope `(1 +- zeta)^n` whenever that is
    /// narrower.
    pub fn build(config: &GameConfig<F>, payoff: &PayoffSpec<F>) -> Result<Self> {
        let zeta = config.zeta();
        let n = real::<F>(config.n as f64);
        let margin = real::<F>(GRID_MARGIN).ln();

        let env_hi = n * (F::one() + zeta).ln();
        let env_lo = -(n * (F::one() - zeta).ln());
        let spread = config.tail_sigmas * config.c.sqrt();
        let mut kink_hi = F::zero();
        let mut kink_lo = F::zero();
        for k in payoff.kinks() {
            if k > F::zero() {
                kink_hi = kink_hi.max(k.ln());
                kink_lo = kink_lo.max(-k.ln());
            }
        }
        let mut log_hi = env_hi.min(kink_hi + spread) + margin;
        let mut log_lo = -(env_lo.min(kink_lo + spread) + margin);

        if let Some(s_min) = config.s_min {
            log_lo = s_min.ln();
        }
        if let Some(s_max) = config.s_max {
            log_hi = s_max.ln();
        }
        let size = config.grid_size;
        let mut h = (log_hi - log_lo) / real((size - 2) as f64);
        // place the ladder so that one node is exactly at log s = 0, then
        // nudge the step until both ends stay covered
        for _ in 0..8 {
            let k_lo = (-log_lo / h).ceil();
            let k_hi = real::<F>((size - 1) as f64) - k_lo;
            if k_lo * h >= -log_lo && k_hi * h >= log_hi && k_lo >= F::zero() {
                let zero_pos = k_lo
                    .to_usize()
                    .ok_or_else(|| Error::GridExtent("price grid cannot bracket s = 1".into()))?;
                if h > (F::one() + zeta).ln() {
                    return Err(Error::GridExtent(format!(
                        "grid too coarse to bracket single steps: log-step {h} exceeds \
                         ln(1 + zeta) = {}; increase grid_size",
                        (F::one() + zeta).ln()
                    )));
                }
                let nodes = (0..size)
                    .map(|j| (real::<F>(j as f64 - zero_pos as f64) * h).exp())
                    .collect();
                return Ok(PriceGrid {
                    log_step: h,
                    zero_pos,
                    nodes,
                });
            }
            h = h * (F::one() + real(1e-12));
        }
        Err(Error::GridExtent(
            "price grid construction failed to cover the reachability envelope".into(),
        ))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node nearest to `s` in log-price.
    pub fn nearest(&self, s: F) -> Result<usize> {
        let last = self.nodes.len() - 1;
        if !(s > F::zero()) || s < self.nodes[0] || s > self.nodes[last] {
            return Err(Error::GridExtent(format!(
                "price {s} is outside the grid [{}, {}]",
                self.nodes[0], self.nodes[last]
            )));
        }
        let pos = s.ln() / self.log_step + real(self.zero_pos as f64);
        let j = pos.round().to_usize().unwrap_or(0).min(last);
        Ok(j)
    }
}

/// Per-stage value surface over the price grid.
#[derive(Debug, Clone)]
pub struct ValueFunction<F> {
    pub stage: usize,
    pub grid: Arc<PriceGrid<F>>,
    pub values: Vec<F>,
}

impl<F: Scalar> ValueFunction<F> {
    /// Linear interpolation in `s` between adjacent grid nodes.
    pub fn value_at(&self, s: F) -> Result<F> {
        let nodes = &self.grid.nodes;
        let last = nodes.len() - 1;
        if !(s >= nodes[0]) || s > nodes[last] {
            return Err(Error::GridExtent(format!(
                "price {s} is outside the grid [{}, {}]",
                nodes[0], nodes[last]
            )));
        }
        let pos = s.ln() / self.grid.log_step + real(self.grid.zero_pos as f64);
        let j = pos
            .floor()
            .to_isize()
            .unwrap_or(0)
            .clamp(0, last as isize - 1) as usize;
        let (s0, s1) = (nodes[j], nodes[j + 1]);
        let w = ((s - s0) / (s1 - s0)).max(F::zero()).min(F::one());
        Ok(self.values[j] + w * (self.values[j + 1] - self.values[j]))
    }

    /// Largest violation of convexity across nodes, as a second difference in
    /// value units normalized by the local value scale (zero for a convex
    /// surface).
    pub fn convexity_violation(&self) -> F {
        let nodes = &self.grid.nodes;
        let mut worst = F::zero();
        for j in 1..nodes.len() - 1 {
            let left = (self.values[j] - self.values[j - 1]) / (nodes[j] - nodes[j - 1]);
            let right = (self.values[j + 1] - self.values[j]) / (nodes[j + 1] - nodes[j]);
            let span = (nodes[j + 1] - nodes[j - 1]) / real(2.0);
            let scale = F::one().max(self.values[j].abs());
            worst = worst.max((left - right) * span / scale);
        }
        worst
    }
}

/// Nature's optimal transition law at every stage and grid node.
#[derive(Debug, Clone)]
pub struct AdversaryPolicy<F> {
    pub grid: Arc<PriceGrid<F>>,
    pub n: usize,
    pub c: F,
    pub zeta: F,
    pub v: F,
    /// `stages[m - 1][j]` is the law of the step ratio at round `m` from
    /// node `j`.
    pub stages: Vec<Vec<FiniteLaw<F>>>,
}

impl<F: Scalar> AdversaryPolicy<F> {
    /// Law governing round `m` (1-based) at the grid node nearest to `s`.
    pub fn law_at(&self, m: usize, s: F) -> Result<&FiniteLaw<F>> {
        if m == 0 || m > self.stages.len() {
            return Err(Error::InvalidParameter(format!(
                "round {m} outside 1..={}",
                self.stages.len()
            )));
        }
        let j = self.grid.nearest(s)?;
        Ok(&self.stages[m - 1][j])
    }

    pub fn all_laws(&self) -> impl Iterator<Item = &FiniteLaw<F>> {
        self.stages.iter().flat_map(|stage| stage.iter())
    }
}

#[derive(Debug, Clone)]
pub struct GameSolution<F> {
    /// Game value `V_0(1)`.
    pub value: F,
    pub policy: AdversaryPolicy<F>,
    /// Value functions for stages `0..=n`.
    pub stages: Vec<ValueFunction<F>>,
}

struct AtomInterp<F> {
    /// Index offset of the node just below `s_j (1 + t)`.
    offset: isize,
    /// Interpolation weight toward the upper node; node-independent because
    /// the grid is geometric.
    weight: F,
}

/// Solve the game: `V_n = g` on the grid, then `n` backward-induction sweeps
/// of per-node moment problems. Returns the value `V_0(1)`, the optimal
/// transition laws and all stage value functions.
pub fn solve_game<F: Scalar>(
    config: &GameConfig<F>,
    payoff: &PayoffSpec<F>,
) -> Result<GameSolution<F>> {
    config.validate()?;
    payoff
        .validate()
        .map_err(|v| Error::InvalidParameter(format!("invalid payoff: {v}")))?;

    let grid = Arc::new(PriceGrid::build(config, payoff)?);
    let zeta = config.zeta();
    let v = config.step_variance();
    let n = config.n;
    let size = grid.len();
    let h = grid.log_step;

    // candidate atoms: every ratio offset between grid nodes within
    // [-zeta, zeta] is a kink of the interpolated objective
    let mut kinks: Vec<F> = Vec::new();
    let mut i = 1i64;
    loop {
        let t = (real::<F>(i as f64) * h).exp() - F::one();
        if t > zeta {
            break;
        }
        kinks.push(t);
        i += 1;
    }
    i = -1;
    loop {
        let t = (real::<F>(i as f64) * h).exp() - F::one();
        if t < -zeta {
            break;
        }
        kinks.push(t);
        i -= 1;
    }
    let atoms = moment::moment_grid(v, zeta, &kinks, config.moment_grid_size);

    // node-independent interpolation data per atom
    let interp: Vec<AtomInterp<F>> = atoms
        .iter()
        .map(|&t| {
            let pos = t.ln_1p() / h;
            let mut offset = pos.floor().to_isize().unwrap_or(0);
            let r_lo = (real::<F>(offset as f64) * h).exp();
            let r_hi = (real::<F>((offset + 1) as f64) * h).exp();
            let mut weight = ((F::one() + t - r_lo) / (r_hi - r_lo))
                .max(F::zero())
                .min(F::one());
            // snap kink atoms exactly onto their node
            if weight > F::one() - real(1e-9) {
                offset += 1;
                weight = F::zero();
            }
            AtomInterp { offset, weight }
        })
        .collect();

    let mut values: Vec<F> = grid
        .nodes
        .iter()
        .map(|&s| payoff.eval(s))
        .collect::<Result<_>>()?;
    let mut stages: Vec<ValueFunction<F>> = Vec::with_capacity(n + 1);
    stages.push(ValueFunction {
        stage: n,
        grid: Arc::clone(&grid),
        values: values.clone(),
    });
    let mut policy_stages: Vec<Vec<FiniteLaw<F>>> = Vec::with_capacity(n);

    let conv_tol = real::<F>(CONVEXITY_TOL) * F::one().max(payoff.lipschitz());

    for stage in (0..n).rev() {
        // edge slopes for queries beyond the grid
        let slope_lo = (values[1] - values[0]) / (grid.nodes[1] - grid.nodes[0]);
        let slope_hi =
            (values[size - 1] - values[size - 2]) / (grid.nodes[size - 1] - grid.nodes[size - 2]);

        let results: Vec<(F, FiniteLaw<F>)> = (0..size)
            .into_par_iter()
            .map(|j| {
                let s = grid.nodes[j];
                let costs: Vec<F> = atoms
                    .iter()
                    .zip(&interp)
                    .map(|(&t, ai)| {
                        let idx = j as isize + ai.offset;
                        if idx < 0 {
                            let x = s * (F::one() + t);
                            values[0] + slope_lo * (x - grid.nodes[0])
                        } else if idx as usize + 1 >= size {
                            let x = s * (F::one() + t);
                            values[size - 1] + slope_hi * (x - grid.nodes[size - 1])
                        } else {
                            let idx = idx as usize;
                            values[idx] + ai.weight * (values[idx + 1] - values[idx])
                        }
                    })
                    .collect();
                let sol = moment::solve_on_grid(&atoms, &costs, v, zeta)?;
                Ok((sol.value, sol.law))
            })
            .collect::<Result<_>>()?;

        values = results.iter().map(|(val, _)| *val).collect();
        let laws: Vec<FiniteLaw<F>> = results.into_iter().map(|(_, law)| law).collect();
        policy_stages.push(laws);

        let vf = ValueFunction {
            stage,
            grid: Arc::clone(&grid),
            values: values.clone(),
        };
        let violation = vf.convexity_violation();
        if violation > conv_tol {
            return Err(Error::Solver(format!(
                "stage {stage} value surface lost convexity: slope violation {violation} \
                 exceeds {conv_tol}; n = {n}, grid_size = {size}, zeta = {zeta}, v = {v}"
            )));
        }
        stages.push(vf);
    }

    policy_stages.reverse();
    stages.reverse();
    let value = values[grid.zero_pos];
    Ok(GameSolution {
        value,
        policy: AdversaryPolicy {
            grid,
            n,
            c: config.c,
            zeta,
            v,
            stages: policy_stages,
        },
        stages,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct RefineReport<F> {
    pub coarse_value: F,
    pub fine_value: F,
    /// `|fine - coarse|`: a discretization-error estimate.
    pub gap: F,
}

/// Re-solve with the price and atom grids refined by `factor` and report the
/// value gap as a discretization-error estimate.
pub fn refine_and_estimate_error<F: Scalar>(
    config: &GameConfig<F>,
    payoff: &PayoffSpec<F>,
    factor: usize,
) -> Result<RefineReport<F>> {
    if factor < 2 {
        return Err(Error::InvalidParameter(format!(
            "refinement factor {factor} must be at least 2"
        )));
    }
    let coarse = solve_game(config, payoff)?.value;
    let mut fine_config = *config;
    fine_config.grid_size = (config.grid_size - 1) * factor + 1;
    fine_config.moment_grid_size = (config.moment_grid_size - 1) * factor + 1;
    let fine = solve_game(&fine_config, payoff)?.value;
    Ok(RefineReport {
        coarse_value: coarse,
        fine_value: fine,
        gap: (fine - coarse).abs(),
    })
}
