//! Special functions and small statistical helpers shared across modules.
//!
//! The normal CDF goes through `erfc` computed with W. J. Cody's rational
//! Chebyshev approximations (Math. Comp. 23, 1969; the SPECFUN `calerf`
//! coefficient tables). Relative accuracy is ~1e-16 in `f64` across the full
//! range, which the far-tail comparisons in the verification module rely on.

use crate::scalar::{real, Scalar};

const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const INV_SQRT_PI: f64 = 5.6418958354775628695e-1;
const ERFC_XBIG: f64 = 26.543;

/// Complementary error function.
pub fn erfc<F: Scalar>(x: F) -> F {
    let y = x.abs();
    let thresh = real::<F>(0.46875);
    let result = if y <= thresh {
        // erfc = 1 - erf on the central interval
        let ysq = y * y;
        let mut num = real::<F>(ERF_A[4]) * ysq;
        let mut den = ysq;
        for i in 0..3 {
            num = (num + real(ERF_A[i])) * ysq;
            den = (den + real(ERF_B[i])) * ysq;
        }
        let erf = x * (num + real(ERF_A[3])) / (den + real(ERF_B[3]));
        return F::one() - erf;
    } else if y <= real(4.0) {
        let mut num = real::<F>(ERF_C[8]) * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + real(ERF_C[i])) * y;
            den = (den + real(ERF_D[i])) * y;
        }
        let r = (num + real(ERF_C[7])) / (den + real(ERF_D[7]));
        scaled_exp_mul(y, r)
    } else if y < real(ERFC_XBIG) {
        let ysq = F::one() / (y * y);
        let mut num = real::<F>(ERF_P[5]) * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + real(ERF_P[i])) * ysq;
            den = (den + real(ERF_Q[i])) * ysq;
        }
        let mut r = ysq * (num + real(ERF_P[4])) / (den + real(ERF_Q[4]));
        r = (real::<F>(INV_SQRT_PI) - r) / y;
        scaled_exp_mul(y, r)
    } else {
        F::zero()
    };
    if x < F::zero() {
        real::<F>(2.0) - result
    } else {
        result
    }
}

// exp(-y^2) * r, with the argument split to avoid cancellation in y*y for
// large y (the SPECFUN trick: round y to a multiple of 1/16 first).
fn scaled_exp_mul<F: Scalar>(y: F, r: F) -> F {
    let sixteen = real::<F>(16.0);
    let ysq = (y * sixteen).trunc() / sixteen;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp() * r
}

/// Error function.
pub fn erf<F: Scalar>(x: F) -> F {
    F::one() - erfc(x)
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf<F: Scalar>(x: F) -> F {
    let half = real::<F>(0.5);
    half * erfc(-x / real::<F>(std::f64::consts::SQRT_2))
}

/// Upper tail `1 - Phi(x)`, accurate for large positive `x`.
pub fn normal_tail<F: Scalar>(x: F) -> F {
    let half = real::<F>(0.5);
    half * erfc(x / real::<F>(std::f64::consts::SQRT_2))
}

/// Two-sided one-sample Kolmogorov–Smirnov statistic of `samples` against the
/// continuous CDF `cdf`. Sorts a copy of the input.
pub fn ks_statistic<F: Scalar>(samples: &[F], cdf: impl Fn(F) -> F) -> F {
    assert!(!samples.is_empty(), "KS statistic of an empty sample");
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("NaN in KS sample"));
    let n = real::<F>(xs.len() as f64);
    let mut d = F::zero();
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let lo = real::<F>(i as f64) / n;
        let hi = real::<F>((i + 1) as f64) / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Streaming mean/variance accumulator (Welford), mergeable so that parallel
/// chunked sampling stays deterministic under any worker count when chunks
/// are merged in index order.
#[derive(Debug, Clone, Copy)]
pub struct McStats<F> {
    count: u64,
    mean: F,
    m2: F,
    min: F,
    max: F,
}

impl<F: Scalar> Default for McStats<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> McStats<F> {
    pub fn new() -> Self {
        McStats {
            count: 0,
            mean: F::zero(),
            m2: F::zero(),
            min: F::infinity(),
            max: F::neg_infinity(),
        }
    }

    pub fn push(&mut self, x: F) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean = self.mean + delta / real(self.count as f64);
        self.m2 = self.m2 + delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n1 = real::<F>(self.count as f64);
        let n2 = real::<F>(other.count as f64);
        let n = n1 + n2;
        let delta = other.mean - self.mean;
        McStats {
            count: self.count + other.count,
            mean: self.mean + delta * n2 / n,
            m2: self.m2 + other.m2 + delta * delta * n1 * n2 / n,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> F {
        self.mean
    }

    pub fn variance(&self) -> F {
        if self.count < 2 {
            F::zero()
        } else {
            self.m2 / real((self.count - 1) as f64)
        }
    }

    pub fn std_dev(&self) -> F {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> F {
        if self.count == 0 {
            F::zero()
        } else {
            self.std_dev() / real((self.count as f64).sqrt())
        }
    }

    pub fn min(&self) -> F {
        self.min
    }

    pub fn max(&self) -> F {
        self.max
    }
}
