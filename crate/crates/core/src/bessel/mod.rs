//! Modified Bessel functions of the first kind at integer order.
//!
//! Values are carried as `I_k(β) e^{-β}`, which lies in `[0, 1]` and is the
//! probability that the difference of two independent Poisson(β/2)
//! variables equals `k`.

mod yk;

pub use yk::YkDistribution;

use crate::scalar::{ln_factorial, CompensatedSum, Real};

/// Root of `I_1(β)/I_0(β) = 1/2`.
pub const LAMMERS_THRESHOLD: f64 = 1.159_319_920_750_138_4;
/// Root of `(I_1(β/2)/I_0(β/2))² = 1/2`.
pub const TRIANGULATION_THRESHOLD: f64 = 4.116_430_791_816_708_6;

/// Relative size below which series terms are dropped.
const SERIES_EPS: f64 = 1e-18;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselEval<T> {
    pub k: i64,
    pub beta: T,
    /// `I_k(β) e^{-β}`
    pub value_scaled: T,
    /// `log I_k(β)`
    pub log_value: T,
}

impl<T: Real> BesselEval<T> {
    pub fn new(k: i64, beta: T) -> Self {
        let ls = log_bessel_i_scaled(k, beta);
        BesselEval {
            k,
            beta,
            value_scaled: ls.exp(),
            log_value: ls + beta,
        }
    }
}

/// Index of the largest term of the series for `I_k(2x)`.
fn series_mode<T: Real>(k: u64, x: T) -> u64 {
    let kf = T::from_u64(k).unwrap();
    let four = T::lit(4.0);
    let two = T::lit(2.0);
    let root = ((kf * kf + four * x * x).sqrt() - (kf + two)) / two;
    if root <= T::zero() {
        0
    } else {
        root.ceil().to_u64().unwrap_or(0)
    }
}

/// `log(I_k(β) e^{-β})`, summing the power series outward from its largest term.
pub fn log_bessel_i_scaled<T: Real>(k: i64, beta: T) -> T {
    assert!(beta >= T::zero(), "Bessel argument must be nonnegative");
    let k = k.unsigned_abs();
    if beta == T::zero() {
        return if k == 0 { T::zero() } else { T::neg_infinity() };
    }
    let x = beta / T::lit(2.0);
    let x2 = x * x;
    let m = series_mode(k, x);
    let kf = T::from_u64(k).unwrap();
    let mf = T::from_u64(m).unwrap();
    let log_mode = (T::lit(2.0) * mf + kf) * x.ln() - ln_factorial::<T>(m) - ln_factorial::<T>(m + k);
    let eps = T::lit(SERIES_EPS).max(T::epsilon() * T::lit(1e-3));
    let mut sum = CompensatedSum::new();
    sum.add(T::one());
    let mut t = T::one();
    let mut i = m;
    loop {
        let ip = T::from_u64(i + 1).unwrap();
        t = t * x2 / (ip * (ip + kf));
        sum.add(t);
        i += 1;
        if t < eps * sum.value() {
            break;
        }
    }
    t = T::one();
    let mut i = m;
    while i > 0 {
        let fi = T::from_u64(i).unwrap();
        t = t * fi * (fi + kf) / x2;
        sum.add(t);
        i -= 1;
        if t < eps * sum.value() {
            break;
        }
    }
    log_mode + sum.value().ln() - beta
}

/// `I_k(β) e^{-β}`; `k` may be negative (`I_{-k} = I_k`).
pub fn bessel_i_scaled<T: Real>(k: i64, beta: T) -> T {
    log_bessel_i_scaled(k, beta).exp()
}

/// `log I_k(β)`.
pub fn log_bessel_i<T: Real>(k: i64, beta: T) -> T {
    log_bessel_i_scaled(k, beta) + beta
}

/// Height-function potential `V(k) = -log I_k(βJ)`.
pub fn potential<T: Real>(k: i64, beta_j: T) -> T {
    -log_bessel_i(k, beta_j)
}

/// `I_{k+1}(β) / I_k(β)`.
pub fn bessel_ratio<T: Real>(k: i64, beta: T) -> T {
    (log_bessel_i_scaled(k + 1, beta) - log_bessel_i_scaled(k, beta)).exp()
}

/// `I_k² − I_{k−1} I_{k+1}` in scaled form (multiplied by `e^{-2β}`).
pub fn turan_margin<T: Real>(k: i64, beta: T) -> T {
    let a = bessel_i_scaled(k, beta);
    a * a - bessel_i_scaled(k - 1, beta) * bessel_i_scaled(k + 1, beta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvolutionCheck<T> {
    /// `|Σ_{|m|≤M} Ĩ_{k−m}(β) Ĩ_{m−l}(β′) − Ĩ_{k−l}(β+β′)|` with `Ĩ` scaled.
    pub residual: T,
    /// Upper bound on the omitted terms `|m| > M`.
    pub tail_bound: T,
    pub within_tolerance: bool,
}

/// Tolerance used to flag [`ConvolutionCheck::within_tolerance`].
pub const CONVOLUTION_TOLERANCE: f64 = 1e-10;

/// Truncated check of `Σ_m I_{k−m}(β) I_{m−l}(β′) = I_{k−l}(β+β′)`, in scaled form.
pub fn convolution_residual<T: Real>(k: i64, l: i64, beta: T, beta2: T, m_cutoff: i64) -> ConvolutionCheck<T> {
    let mut sum = CompensatedSum::new();
    for m in -m_cutoff..=m_cutoff {
        sum.add(bessel_i_scaled(k - m, beta) * bessel_i_scaled(m - l, beta2));
    }
    let target = bessel_i_scaled(k - l, beta + beta2);
    let residual = (sum.value() - target).abs();
    // Omitted m satisfy |k−m| ≥ M+1−|k| and |m−l| ≥ M+1−|l|; bound one
    // factor by x^j/j! and the other by 1, using the smaller of the two.
    let tail_a = poisson_tail_bound(beta / T::lit(2.0), m_cutoff + 1 - k.abs());
    let tail_b = poisson_tail_bound(beta2 / T::lit(2.0), m_cutoff + 1 - l.abs());
    let tail_bound = T::lit(2.0) * tail_a.min(tail_b);
    ConvolutionCheck {
        residual,
        tail_bound,
        within_tolerance: residual + tail_bound <= T::lit(CONVOLUTION_TOLERANCE),
    }
}

/// Upper bound on `Σ_{j ≥ j0} x^j / j!`.
pub fn poisson_tail_bound<T: Real>(x: T, j0: i64) -> T {
    if j0 <= 0 {
        return x.exp();
    }
    let j0u = j0 as u64;
    let jf = T::from_u64(j0u).unwrap();
    let ratio = x / (jf + T::one());
    let lead = (jf * x.ln() - ln_factorial::<T>(j0u)).exp();
    if ratio < T::one() {
        lead / (T::one() - ratio)
    } else {
        x.exp()
    }
}

/// `I_1(β)/I_0(β) − 1/2`.
pub fn lammers_margin<T: Real>(beta: T) -> T {
    if beta == T::zero() {
        return -T::lit(0.5);
    }
    bessel_ratio(0, beta) - T::lit(0.5)
}

/// `(I_1(β/2)/I_0(β/2))² − 1/2`.
pub fn lammers_triangulation_margin<T: Real>(beta: T) -> T {
    if beta == T::zero() {
        return -T::lit(0.5);
    }
    let r = bessel_ratio(0, beta / T::lit(2.0));
    r * r - T::lit(0.5)
}

/// Root of an increasing function by bisection, to absolute width `tol`.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    assert!(f(lo) < 0.0 && f(hi) > 0.0, "root not bracketed");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root of [`lammers_margin`], computed afresh by bisection.
pub fn lammers_threshold() -> f64 {
    bisect_increasing(lammers_margin::<f64>, 1e-6, 10.0, 1e-14)
}

/// Root of [`lammers_triangulation_margin`], computed afresh by bisection.
pub fn lammers_triangulation_threshold() -> f64 {
    bisect_increasing(lammers_triangulation_margin::<f64>, 1e-6, 20.0, 1e-14)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioChainRow {
    pub k: u32,
    /// `r_k = I_k / (β I_{k−1})`
    pub r: f64,
    /// `r_{k−1} r_{k+1} − r_k²`, nonnegative when the chain is log-convex
    pub log_convexity_margin: f64,
    /// `|r_k − 1/(2k + β² r_{k+1})|`
    pub recurrence_residual: f64,
    /// `β²/(2k+2) − ε_{k+1}` with `ε_{k+1} = β² r_{k+1}`
    pub epsilon_margin: f64,
    /// `4(k+1) ε_{k+1} + ε_{k+1}² − 4`
    pub big_r: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioChainReport {
    pub beta: f64,
    pub rows: Vec<RatioChainRow>,
    pub failures: Vec<String>,
}

impl RatioChainReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks the ratio chain `r_k = I_k/(β I_{k−1})` for `1 ≤ k ≤ k_max`.
///
/// `R_k ≤ 0` is only required when `β ≤ 1`.
pub fn ratio_chain_check(k_max: u32, beta: f64) -> RatioChainReport {
    const TOL: f64 = 1e-12;
    let r = |k: i64| bessel_ratio::<f64>(k - 1, beta) / beta;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for k in 1..=k_max {
        let ki = k as i64;
        let (rm, r0, rp) = (r(ki - 1), r(ki), r(ki + 1));
        let eps = beta * beta * rp;
        let row = RatioChainRow {
            k,
            r: r0,
            log_convexity_margin: rm * rp - r0 * r0,
            recurrence_residual: (r0 - 1.0 / (2.0 * k as f64 + beta * beta * rp)).abs(),
            epsilon_margin: beta * beta / (2.0 * k as f64 + 2.0) - eps,
            big_r: 4.0 * (k as f64 + 1.0) * eps + eps * eps - 4.0,
        };
        if row.log_convexity_margin < -TOL * r0 * r0 {
            failures.push(format!("k={k}: r_k^2 > r_(k-1) r_(k+1)"));
        }
        if row.recurrence_residual > TOL * r0 {
            failures.push(format!("k={k}: recurrence residual {:e}", row.recurrence_residual));
        }
        if row.epsilon_margin < -TOL {
            failures.push(format!("k={k}: epsilon bound violated by {:e}", -row.epsilon_margin));
        }
        if beta <= 1.0 && row.big_r > TOL {
            failures.push(format!("k={k}: R_k = {:e} > 0", row.big_r));
        }
        rows.push(row);
    }
    RatioChainReport { beta, rows, failures }
}

/// Cached `log(I_k(β) e^{-β})` for one argument.
#[derive(Clone, Debug)]
pub struct BesselTable {
    beta: f64,
    log_scaled: Vec<f64>,
}

impl BesselTable {
    pub fn new(beta: f64, k_max: usize) -> Self {
        let log_scaled = (0..=k_max as i64).map(|k| log_bessel_i_scaled(k, beta)).collect();
        BesselTable { beta, log_scaled }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn log_scaled(&self, k: i64) -> f64 {
        let a = k.unsigned_abs() as usize;
        match self.log_scaled.get(a) {
            Some(&v) => v,
            None => log_bessel_i_scaled(k, self.beta),
        }
    }

    pub fn scaled(&self, k: i64) -> f64 {
        self.log_scaled(k).exp()
    }
}
