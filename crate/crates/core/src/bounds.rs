//! Closed-form stability and concentration bounds.
//!
//! `b_n = prod_{j<n} (1 + L^2 a_j^2)` is carried in log space throughout.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::sgd::Schedule;
use crate::special::hurwitz_zeta;

/// Iterations summed exactly before the analytic tail of an infinite horizon.
pub const INFINITE_HORIZON_TERMS: usize = 200_000;
/// Absolute resolution of the `max_a` bisection (relative above 1).
pub const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HorizonRepr", into = "HorizonRepr")]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum HorizonRepr {
    Steps(usize),
    Marker(String),
}

impl TryFrom<HorizonRepr> for Horizon {
    type Error = String;
    fn try_from(r: HorizonRepr) -> std::result::Result<Self, String> {
        match r {
            HorizonRepr::Steps(n) => Ok(Horizon::Finite(n)),
            HorizonRepr::Marker(s) if s == "infinity" => Ok(Horizon::Infinite),
            HorizonRepr::Marker(s) => Err(format!("horizon must be a positive integer or \"infinity\", got \"{s}\"")),
        }
    }
}

impl From<Horizon> for HorizonRepr {
    fn from(h: Horizon) -> Self {
        match h {
            Horizon::Finite(n) => HorizonRepr::Steps(n),
            Horizon::Infinite => HorizonRepr::Marker("infinity".into()),
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(n) => write!(f, "{n}"),
            Horizon::Infinite => f.write_str("infinity"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    /// `dist(x_1, X)`.
    pub dist1: f64,
    pub r: f64,
    /// Gradient Lipschitz constant on `N_r(X)`.
    pub lipschitz: f64,
    /// Single-sample noise second moment bound on `N_r(X)`.
    pub sigma_r: f64,
    pub batch_size: usize,
    pub schedule: Schedule,
    pub horizon: Horizon,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(param(name, format!("must be a non-negative finite number, got {v}")))
            }
        };
        nonneg("dist1", self.dist1)?;
        nonneg("lipschitz", self.lipschitz)?;
        nonneg("sigma_r", self.sigma_r)?;
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(param("r", format!("must be positive, got {}", self.r)));
        }
        if self.batch_size == 0 {
            return Err(param("batch_size", "must be at least 1"));
        }
        if self.horizon == Horizon::Finite(0) {
            return Err(param("horizon", "must be at least 1"));
        }
        self.schedule.validate()?;
        if self.dist1 > self.r {
            return Err(Error::Premise(format!(
                "dist(x1, X) = {} exceeds the radius r = {}",
                self.dist1, self.r
            )));
        }
        Ok(())
    }

    fn noise_weight(&self) -> f64 {
        self.sigma_r / self.batch_size as f64
    }

    pub fn with_horizon(&self, horizon: Horizon) -> Self {
        Self { horizon, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BValue {
    pub n: usize,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    /// `b_n` at geometrically spaced `n` up to the horizon (finite horizons only).
    pub b_values: Vec<BValue>,
    pub b_n: f64,
    pub c_n: f64,
    /// `1 - C_N`; negative values are reported as they are.
    pub stability_lower_bound: f64,
    pub vacuous: bool,
    /// For infinite horizons: the enclosure `[lower, upper]` of `C_inf`; `c_n` is the upper end.
    pub c_n_enclosure: Option<(f64, f64)>,
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `b_n = exp(sum_{j=1}^{n-1} log1p(L^2 a_j^2))`.
pub fn compute_bn(lipschitz: f64, schedule: &Schedule, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(param("n", "must be at least 1"));
    }
    Ok(log_bn(lipschitz, schedule, n).exp())
}

fn log_bn(lipschitz: f64, schedule: &Schedule, n: usize) -> f64 {
    let l2 = lipschitz * lipschitz;
    let mut s = Kahan::default();
    for j in 1..n {
        let a = schedule.rate(j);
        s.add((l2 * a * a).ln_1p());
    }
    s.value()
}

fn is_sampled(n: usize) -> bool {
    if n <= 10 {
        return true;
    }
    let mag = 10usize.pow(n.ilog10());
    n % (mag / 10).max(1) == 0 && n / (mag / 10).max(1) % 5 == 0
}

/// Running sums over `n = 1..=upto`: returns `(log b_{upto+1}, sum a_n^2/b_{n+1}, sum a_n/b_{n+1})`,
/// sampling `b` along the way.
fn partial_sums(inputs: &BoundInputs, upto: usize, samples: Option<&mut Vec<BValue>>) -> (f64, f64, f64) {
    let l2 = inputs.lipschitz * inputs.lipschitz;
    let mut log_b = Kahan::default();
    let mut sq = Kahan::default();
    let mut lin = Kahan::default();
    let mut samples = samples;
    if let Some(v) = samples.as_deref_mut() {
        v.push(BValue { n: 1, b: 1.0 });
    }
    for n in 1..=upto {
        let a = inputs.schedule.rate(n);
        log_b.add((l2 * a * a).ln_1p());
        let inv_b = (-log_b.value()).exp();
        sq.add(a * a * inv_b);
        lin.add(a * inv_b);
        if let Some(v) = samples.as_deref_mut() {
            if is_sampled(n + 1) || n == upto {
                v.push(BValue {
                    n: n + 1,
                    b: log_b.value().exp(),
                });
            }
        }
    }
    (log_b.value(), sq.value(), lin.value())
}

fn report(c_n: f64, b_n: f64, b_values: Vec<BValue>, enclosure: Option<(f64, f64)>) -> BoundReport {
    BoundReport {
        b_values,
        b_n,
        c_n,
        stability_lower_bound: 1.0 - c_n,
        vacuous: !(c_n < 1.0),
        c_n_enclosure: enclosure,
    }
}

/// `C_N = (b_N / r^2) (dist1^2 + (sigma_r/I) sum_{n=1}^{N-1} a_n^2 / b_{n+1})`.
pub fn compute_cn(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let r2 = inputs.r * inputs.r;
    let d2 = inputs.dist1 * inputs.dist1;
    match inputs.horizon {
        Horizon::Finite(n) => {
            let mut b_values = Vec::new();
            let (log_b, sq, _) = partial_sums(inputs, n - 1, Some(&mut b_values));
            let b_n = log_b.exp();
            let c = b_n / r2 * (d2 + inputs.noise_weight() * sq);
            Ok(report(c, b_n, b_values, None))
        }
        Horizon::Infinite => infinite_cn(inputs),
    }
}

fn infinite_cn(inputs: &BoundInputs) -> Result<BoundReport> {
    let r2 = inputs.r * inputs.r;
    let d2 = inputs.dist1 * inputs.dist1;
    let w = inputs.noise_weight();
    let a = inputs.schedule.damping();
    let l2 = inputs.lipschitz * inputs.lipschitz;
    let beta = match inputs.schedule {
        _ if a == 0.0 => {
            let c = d2 / r2;
            return Ok(report(c, 1.0, Vec::new(), Some((c, c))));
        }
        Schedule::Constant { .. } => {
            // the product diverges when L > 0 and the noise sum diverges when sigma_r > 0
            let c = if l2 == 0.0 && w == 0.0 { d2 / r2 } else { f64::INFINITY };
            let b = if l2 == 0.0 { 1.0 } else { f64::INFINITY };
            return Ok(report(c, b, Vec::new(), Some((c, c))));
        }
        Schedule::Decreasing { beta, .. } => beta,
    };
    let m = INFINITE_HORIZON_TERMS;
    // log b_{M+1} and sum_{n<=M} a_n^2 / b_{n+1}
    let (log_b, sq, _) = partial_sums(inputs, m, None);
    let z = hurwitz_zeta(2.0 * beta, (m + 1) as f64);
    let z4 = hurwitz_zeta(4.0 * beta, (m + 1) as f64);
    let a2 = a * a;
    // sum_{n>M} log1p(x_n) lies in [sum x_n - sum x_n^2 / 2, sum x_n]
    let log_b_hi = log_b + l2 * a2 * z;
    let log_b_lo = log_b + l2 * a2 * z - 0.5 * l2 * l2 * a2 * a2 * z4;
    // sum_{n>M} a_n^2 / b_{n+1} lies between a^2 zeta / b_inf and a^2 zeta / b_{M+1}
    let upper = log_b_hi.exp() / r2 * (d2 + w * (sq + a2 * z * (-log_b).exp()));
    let lower = log_b_lo.exp() / r2 * (d2 + w * (sq + a2 * z * (-log_b_hi).exp()));
    Ok(report(upper, log_b_hi.exp(), Vec::new(), Some((lower, upper))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecreasingCheck {
    pub holds: bool,
    pub lhs: f64,
    /// `r^2 - lhs`.
    pub margin: f64,
    /// Supremum of damping parameters `a` for which the inequality holds.
    pub max_a: f64,
}

fn decreasing_params(inputs: &BoundInputs) -> Result<(f64, f64)> {
    match inputs.schedule {
        Schedule::Decreasing { a, beta } => {
            if !(beta > 0.5 && beta <= 1.0) {
                return Err(param("beta", format!("must lie in (1/2, 1], got {beta}")));
            }
            Ok((a, beta))
        }
        Schedule::Constant { .. } => Err(param("schedule", "a decreasing schedule is required")),
    }
}

/// `exp(2 beta L^2 a^2 / (2 beta - 1)) (dist1^2 + 2 beta sigma_r a^2 / ((2 beta - 1) I))`.
pub fn decreasing_lhs(inputs: &BoundInputs, a: f64, beta: f64) -> f64 {
    let k = 2.0 * beta / (2.0 * beta - 1.0);
    let l2 = inputs.lipschitz * inputs.lipschitz;
    (k * l2 * a * a).exp() * (inputs.dist1 * inputs.dist1 + k * inputs.noise_weight() * a * a)
}

/// Sufficient condition on `(a, beta)` for `C_inf < 1`.
pub fn check_decreasing_lr_bound(inputs: &BoundInputs) -> Result<DecreasingCheck> {
    let (a, beta) = decreasing_params(inputs)?;
    inputs.validate()?;
    let r2 = inputs.r * inputs.r;
    let lhs = decreasing_lhs(inputs, a, beta);
    let accept = |a: f64| decreasing_lhs(inputs, a, beta) < r2;
    let max_a = if !accept(0.0) {
        0.0
    } else if inputs.lipschitz == 0.0 && inputs.sigma_r == 0.0 {
        f64::INFINITY
    } else {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while accept(hi) {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > BISECTION_TOL * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if accept(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(DecreasingCheck {
        holds: lhs < r2,
        lhs,
        margin: r2 - lhs,
        max_a,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantCheck {
    pub holds: bool,
    pub lhs: f64,
    pub margin: f64,
}

/// `(1 + L^2 a^2)^{N-1} (dist1^2 + sigma_r/(I L^2) (1 - (1 + L^2 a^2)^{-(N-1)}))`.
pub fn check_constant_lr_bound(inputs: &BoundInputs) -> Result<ConstantCheck> {
    let a = match inputs.schedule {
        Schedule::Constant { a } => a,
        Schedule::Decreasing { .. } => return Err(param("schedule", "a constant schedule is required")),
    };
    let n = match inputs.horizon {
        Horizon::Finite(n) => n,
        Horizon::Infinite => return Err(param("horizon", "a finite horizon is required")),
    };
    inputs.validate()?;
    let steps = (n - 1) as f64;
    let x = inputs.lipschitz * inputs.lipschitz * a * a;
    let log_q = x.ln_1p();
    let noise = if x == 0.0 {
        inputs.noise_weight() * a * a * steps
    } else {
        // (1 - q^{-(N-1)}) / L^2, written so that small L^2 a^2 keeps full precision
        inputs.noise_weight() * a * a * (-(-steps * log_q).exp_m1()) / x
    };
    let lhs = (steps * log_q).exp() * (inputs.dist1 * inputs.dist1 + noise);
    let r2 = inputs.r * inputs.r;
    Ok(ConstantCheck {
        holds: lhs < r2,
        lhs,
        margin: r2 - lhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationRhs {
    /// `(1/eps) (dist1^2 + (sigma_r/I) sum a_n^2/b_{n+1}) / (2 sum a_n/b_{n+1})`.
    pub leading: f64,
    /// `C_{N+1}`.
    pub c_next: f64,
    pub total: f64,
}

/// Right-hand side bounding `P{min_{n<=N} h(x_n) > eps}`.
pub fn concentration_rhs(inputs: &BoundInputs, epsilon: f64) -> Result<ConcentrationRhs> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(param("epsilon", format!("must be positive, got {epsilon}")));
    }
    let n = match inputs.horizon {
        Horizon::Finite(n) => n,
        Horizon::Infinite => return Err(param("horizon", "a finite horizon is required")),
    };
    inputs.validate()?;
    let r2 = inputs.r * inputs.r;
    let d2 = inputs.dist1 * inputs.dist1;
    // one pass to N gives both the N-term sums and log b_{N+1}
    let (log_b, sq, lin) = partial_sums(inputs, n, None);
    let num = d2 + inputs.noise_weight() * sq;
    let leading = if num == 0.0 {
        0.0
    } else if lin == 0.0 {
        f64::INFINITY
    } else {
        num / (2.0 * lin) / epsilon
    };
    // C_{N+1} sums to N - 1 + 1 = N, i.e. the same squared sum
    let c_next = log_b.exp() / r2 * num;
    Ok(ConcentrationRhs {
        leading,
        c_next,
        total: leading + c_next,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// Decay of `min_{n<=N} h(x_n)` under WQC.
    Wqc,
    /// Decay of the last-iterate gap under HCPRC or LRSI.
    HcprcOrLrsi,
}

/// Exponent `p` in the predicted `O(1 / (eps N^p))` rate.
pub fn predicted_rate(kind: RateKind, beta: f64) -> Result<f64> {
    if !(beta > 0.5 && beta < 1.0) {
        return Err(param("beta", format!("must lie in (1/2, 1), got {beta}")));
    }
    Ok(match kind {
        RateKind::Wqc => 1.0 - beta,
        RateKind::HcprcOrLrsi => beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(schedule: Schedule, horizon: Horizon) -> BoundInputs {
        BoundInputs {
            dist1: 0.1,
            r: 0.5,
            lipschitz: 2.0,
            sigma_r: 0.01,
            batch_size: 1,
            schedule,
            horizon,
        }
    }

    #[test]
    fn bn_basics() {
        let s = Schedule::Constant { a: 0.1 };
        assert_eq!(compute_bn(3.0, &s, 1).unwrap(), 1.0);
        assert!((compute_bn(1.0, &s, 3).unwrap() - 1.0201).abs() < 1e-15);
        assert_eq!(compute_bn(5.0, &Schedule::Constant { a: 0.0 }, 100).unwrap(), 1.0);
        assert!(compute_bn(1.0, &s, 0).is_err());
    }

    #[test]
    fn cn_trivial_cases() {
        let mut i = inputs(Schedule::Constant { a: 0.0 }, Horizon::Finite(50));
        i.dist1 = 0.3;
        let rep = compute_cn(&i).unwrap();
        assert!((rep.c_n - 0.36).abs() < 1e-15);
        assert!((rep.stability_lower_bound - 0.64).abs() < 1e-15);
        assert!(!rep.vacuous);

        let mut i = inputs(Schedule::Decreasing { a: 0.3, beta: 0.7 }, Horizon::Finite(1000));
        i.dist1 = 0.0;
        i.sigma_r = 0.0;
        let rep = compute_cn(&i).unwrap();
        assert_eq!(rep.c_n, 0.0);
        assert_eq!(rep.stability_lower_bound, 1.0);

        let mut i = inputs(Schedule::Constant { a: 0.1 }, Horizon::Finite(10));
        i.dist1 = 0.6;
        assert!(matches!(compute_cn(&i), Err(Error::Premise(_))));
    }

    #[test]
    fn vacuous_is_reported_not_clamped() {
        let mut i = inputs(Schedule::Constant { a: 0.5 }, Horizon::Finite(100));
        i.sigma_r = 1.0;
        let rep = compute_cn(&i).unwrap();
        assert!(rep.vacuous && rep.c_n > 1.0 && rep.stability_lower_bound < 0.0);
    }

    #[test]
    fn cn_matches_extended_precision_oracle() {
        // 60-digit evaluation of the defining product and sum
        let i = inputs(Schedule::Decreasing { a: 0.05, beta: 0.8 }, Horizon::Finite(10_000));
        let rep = compute_cn(&i).unwrap();
        assert!((rep.c_n - CN_ORACLE).abs() <= 1e-13 * CN_ORACLE, "{}", rep.c_n);
    }

    const CN_ORACLE: f64 = 0.041_149_684_049_305_33;

    #[test]
    fn b_samples_are_monotone_and_end_at_horizon() {
        let i = inputs(Schedule::Decreasing { a: 0.4, beta: 0.6 }, Horizon::Finite(12_345));
        let rep = compute_cn(&i).unwrap();
        assert_eq!(rep.b_values[0], BValue { n: 1, b: 1.0 });
        assert_eq!(rep.b_values.last().unwrap().n, 12_345);
        assert_eq!(rep.b_values.last().unwrap().b, rep.b_n);
        assert!(rep.b_values.windows(2).all(|w| w[0].n < w[1].n && w[0].b <= w[1].b));
    }

    #[test]
    fn infinite_horizon_enclosure() {
        let i = inputs(Schedule::Decreasing { a: 0.05, beta: 0.8 }, Horizon::Infinite);
        let rep = compute_cn(&i).unwrap();
        let (lo, hi) = rep.c_n_enclosure.unwrap();
        assert!(lo <= hi && hi == rep.c_n);
        assert!((hi - lo) / hi < 1e-9);
        let finite = compute_cn(&i.with_horizon(Horizon::Finite(1_000_000))).unwrap().c_n;
        // the tail beyond 10^6 still moves log b by about L^2 a^2 zeta(1.6, 10^6) = 2.6e-6
        assert!(finite <= hi && finite > lo * (1.0 - 1e-5));
        let c = compute_cn(&inputs(Schedule::Constant { a: 0.01 }, Horizon::Infinite)).unwrap();
        assert!(c.c_n.is_infinite() && c.vacuous);
    }

    #[test]
    fn decreasing_bound_limits() {
        let mut i = inputs(Schedule::Decreasing { a: 1e-9, beta: 0.8 }, Horizon::Infinite);
        i.dist1 = 0.0;
        assert!(check_decreasing_lr_bound(&i).unwrap().holds);
        i.dist1 = 0.5;
        let c = check_decreasing_lr_bound(&i).unwrap();
        assert!(!c.holds && c.max_a == 0.0);
        let bad = inputs(Schedule::Constant { a: 0.1 }, Horizon::Infinite);
        assert!(check_decreasing_lr_bound(&bad).is_err());
    }

    #[test]
    fn max_a_straddles_the_radius() {
        let i = inputs(Schedule::Decreasing { a: 0.05, beta: 0.8 }, Horizon::Infinite);
        let c = check_decreasing_lr_bound(&i).unwrap();
        assert!(c.holds && c.max_a > 0.05);
        let r2 = 0.25;
        assert!(decreasing_lhs(&i, c.max_a - 1e-8, 0.8) < r2);
        assert!(decreasing_lhs(&i, c.max_a + 1e-8, 0.8) > r2);
    }

    #[test]
    fn constant_bound_limits() {
        let i = inputs(Schedule::Constant { a: 0.3 }, Horizon::Finite(1));
        let c = check_constant_lr_bound(&i).unwrap();
        assert_eq!(c.lhs, 0.1 * 0.1);
        assert!(c.holds);
        let i = inputs(Schedule::Constant { a: 1e-12 }, Horizon::Finite(500));
        assert!((check_constant_lr_bound(&i).unwrap().lhs - 0.01).abs() < 1e-15);
        let mut i = inputs(Schedule::Constant { a: 0.2 }, Horizon::Finite(500));
        i.lipschitz = 0.0;
        let c = check_constant_lr_bound(&i).unwrap();
        assert!((c.lhs - (0.01 + 0.01 * 0.04 * 499.0)).abs() < 1e-15);
    }

    #[test]
    fn constant_bound_matches_direct_sum() {
        let mut i = inputs(Schedule::Constant { a: 0.01 }, Horizon::Finite(1000));
        i.batch_size = 10;
        let lhs = check_constant_lr_bound(&i).unwrap().lhs;
        let c = compute_cn(&i).unwrap().c_n;
        assert!((lhs / 0.25 - c).abs() <= 1e-10 * c);
    }

    #[test]
    fn concentration_trivial_and_scaling() {
        let mut i = inputs(Schedule::Decreasing { a: 0.2, beta: 0.8 }, Horizon::Finite(1000));
        i.dist1 = 0.0;
        i.sigma_r = 0.0;
        assert_eq!(concentration_rhs(&i, 0.01).unwrap().total, 0.0);
        let i = inputs(Schedule::Decreasing { a: 0.2, beta: 0.8 }, Horizon::Finite(1000));
        let one = concentration_rhs(&i, 0.01).unwrap();
        let two = concentration_rhs(&i, 0.02).unwrap();
        assert!((one.leading - 2.0 * two.leading).abs() <= 1e-14 * one.leading);
        assert_eq!(one.c_next, two.c_next);
        assert!(concentration_rhs(&i, 0.0).is_err());
        let c_next = compute_cn(&i.with_horizon(Horizon::Finite(1001))).unwrap().c_n;
        assert!((one.c_next - c_next).abs() <= 1e-14 * c_next);
    }

    #[test]
    fn concentration_leading_term_decays_like_n_to_minus_one_minus_beta() {
        let i = inputs(Schedule::Decreasing { a: 0.05, beta: 0.8 }, Horizon::Finite(100_000));
        let big = i.with_horizon(Horizon::Finite(1_600_000));
        let ratio = concentration_rhs(&big, 0.01).unwrap().leading / concentration_rhs(&i, 0.01).unwrap().leading;
        let expected = 16f64.powf(-0.2);
        assert!((ratio / expected - 1.0).abs() < 0.05, "ratio {ratio} vs {expected}");
    }

    #[test]
    fn rate_exponents() {
        assert!((predicted_rate(RateKind::Wqc, 0.6).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(predicted_rate(RateKind::HcprcOrLrsi, 0.6).unwrap(), 0.6);
        assert_eq!(predicted_rate(RateKind::HcprcOrLrsi, 0.999).unwrap(), 0.999);
        assert!(predicted_rate(RateKind::Wqc, 0.5).is_err());
        assert!(predicted_rate(RateKind::Wqc, 1.0).is_err());
    }

    #[test]
    fn horizon_json() {
        let h: Horizon = serde_json::from_str("\"infinity\"").unwrap();
        assert_eq!(h, Horizon::Infinite);
        assert_eq!(serde_json::from_str::<Horizon>("42").unwrap(), Horizon::Finite(42));
        assert!(serde_json::from_str::<Horizon>("\"forever\"").is_err());
        assert_eq!(serde_json::to_string(&Horizon::Infinite).unwrap(), "\"infinity\"");
    }

    fn schedule_strategy() -> impl Strategy<Value = Schedule> {
        prop_oneof![
            (0.0..0.5f64).prop_map(|a| Schedule::Constant { a }),
            (0.0..1.0f64, 0.51..1.0f64).prop_map(|(a, beta)| Schedule::Decreasing { a, beta }),
        ]
    }

    proptest! {
        #[test]
        fn bn_log_space_agrees_with_direct_product(l in 0.0..3.0f64, s in schedule_strategy(), n in 1usize..1000) {
            let mut direct = 1.0;
            for j in 1..n {
                let a = s.rate(j);
                direct *= 1.0 + l * l * a * a;
            }
            prop_assume!(direct.is_finite());
            let b = compute_bn(l, &s, n).unwrap();
            prop_assert!((b - direct).abs() <= 1e-12 * direct);
            prop_assert!(compute_bn(l, &s, n + 1).unwrap() >= b);
        }

        #[test]
        fn cn_monotone_in_each_argument(
            s in schedule_strategy(),
            n in 1usize..500,
            l in 0.0..3.0f64,
            sigma in 0.0..1.0f64,
            d in 0.0..0.4f64,
            bump in 0.0..0.1f64,
        ) {
            let base = BoundInputs { dist1: d, r: 0.5, lipschitz: l, sigma_r: sigma, batch_size: 2, schedule: s, horizon: Horizon::Finite(n) };
            let c = compute_cn(&base).unwrap().c_n;
            let tol = 1e-12 * c;
            prop_assert!(compute_cn(&base.with_horizon(Horizon::Finite(n + 7))).unwrap().c_n >= c - tol);
            let bumped = [
                BoundInputs { lipschitz: l + bump, ..base },
                BoundInputs { sigma_r: sigma + bump, ..base },
                BoundInputs { dist1: d + bump, ..base },
            ];
            for b in &bumped {
                prop_assert!(compute_cn(b).unwrap().c_n >= c - tol);
            }
        }

        #[test]
        fn constant_closed_form_matches_summation(
            a in 0.0..0.2f64,
            n in 1usize..10_000,
            l in 0.0..3.0f64,
            sigma in 0.0..1.0f64,
            d in 0.0..0.5f64,
            batch in 1usize..20,
        ) {
            // keep b_N representable
            prop_assume!((n - 1) as f64 * (l * l * a * a).ln_1p() < 700.0);
            let i = BoundInputs { dist1: d, r: 0.5, lipschitz: l, sigma_r: sigma, batch_size: batch, schedule: Schedule::Constant { a }, horizon: Horizon::Finite(n) };
            let lhs = check_constant_lr_bound(&i).unwrap().lhs / 0.25;
            let c = compute_cn(&i).unwrap().c_n;
            prop_assert!((lhs - c).abs() <= 1e-10 * c.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn accepted_decreasing_rates_give_stable_infinite_horizon(
            beta in 0.51..1.0f64,
            frac in 0.0..1.0f64,
            l in 0.1..3.0f64,
            sigma in 0.0..1.0f64,
            d in 0.0..0.45f64,
        ) {
            let probe = BoundInputs { dist1: d, r: 0.5, lipschitz: l, sigma_r: sigma, batch_size: 1, schedule: Schedule::Decreasing { a: 1.0, beta }, horizon: Horizon::Infinite };
            let max_a = check_decreasing_lr_bound(&probe).unwrap().max_a;
            let i = BoundInputs { schedule: Schedule::Decreasing { a: frac * max_a, beta }, ..probe };
            prop_assert!(check_decreasing_lr_bound(&i).unwrap().holds);
            prop_assert!(compute_cn(&i).unwrap().c_n < 1.0);
        }
    }
}
