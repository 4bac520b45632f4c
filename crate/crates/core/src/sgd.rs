//! The SGD iteration `x_{n+1} = x_n - a_n (grad f(x_n) + xi_n)` with
//! mini-batch noise and stopped-process bookkeeping.
//!
//! Random draws per step, in order: for each of the `I` batch members, either
//! `d` standard normals (Gaussian models) or one component index (finite
//! sums). Nothing else touches the stream.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::landscape::{Family, Landscape, PointState};
use crate::minima::{check_point, NeighborhoodSpec};
use crate::rng::{stream, Rng};
use crate::vecops::{all_finite, dist_sq, norm_sq};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `a_n = a / n^beta`.
    Decreasing { a: f64, beta: f64 },
    Constant { a: f64 },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let a = self.damping();
        if !(a >= 0.0 && a.is_finite()) {
            return Err(param("a", format!("must be a non-negative finite number, got {a}")));
        }
        if let Schedule::Decreasing { beta, .. } = *self {
            if !(beta > 0.5 && beta <= 1.0) {
                return Err(param("beta", format!("must lie in (1/2, 1], got {beta}")));
            }
        }
        Ok(())
    }

    /// Learning rate at step `n >= 1`.
    #[inline]
    pub fn rate(&self, n: usize) -> f64 {
        match *self {
            Schedule::Decreasing { a, beta } => a / (n as f64).powf(beta),
            Schedule::Constant { a } => a,
        }
    }

    pub fn damping(&self) -> f64 {
        match *self {
            Schedule::Decreasing { a, .. } | Schedule::Constant { a } => a,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match *self {
            Schedule::Decreasing { beta, .. } => Some(beta),
            Schedule::Constant { .. } => None,
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Decreasing { a, beta } => write!(f, "a_n = {a}/n^{beta}"),
            Schedule::Constant { a } => write!(f, "a_n = {a}"),
        }
    }
}

/// A stochastic gradient field `x -> grad f(x; omega)` for one component.
pub trait GradientField: Send + Sync + fmt::Debug {
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// `grad f(x) + shift`.
#[derive(Debug, Clone)]
pub struct ShiftedGradient {
    landscape: Landscape,
    shift: Vec<f64>,
}

impl GradientField for ShiftedGradient {
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let mut proj = vec![0.0; x.len()];
        self.landscape.eval_into(x, out, &mut proj);
        for (o, s) in out.iter_mut().zip(&self.shift) {
            *o += s;
        }
    }
}

#[derive(Debug, Clone)]
pub struct FiniteSum {
    components: Vec<Arc<dyn GradientField>>,
}

impl FiniteSum {
    /// The caller is responsible for the components averaging to `grad f`.
    pub fn new(components: Vec<Arc<dyn GradientField>>) -> Result<Self> {
        if components.is_empty() {
            return Err(param("components", "need at least one component"));
        }
        Ok(Self { components })
    }

    /// Components `grad f + c_k` with shifts that must average to zero.
    pub fn shifted(landscape: &Landscape, shifts: Vec<Vec<f64>>) -> Result<Self> {
        if shifts.is_empty() {
            return Err(param("shifts", "need at least one component"));
        }
        let d = landscape.dim();
        let mut mean = vec![0.0; d];
        for s in &shifts {
            check_point(s, d)?;
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v / shifts.len() as f64;
            }
        }
        let scale = shifts.iter().map(|s| norm_sq(s)).fold(1.0, f64::max).sqrt();
        if norm_sq(&mean).sqrt() > 1e-12 * scale {
            return Err(param("shifts", "must average to zero so the noise is unbiased"));
        }
        Ok(Self {
            components: shifts
                .into_iter()
                .map(|shift| {
                    Arc::new(ShiftedGradient {
                        landscape: landscape.clone(),
                        shift,
                    }) as Arc<dyn GradientField>
                })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

#[derive(Debug, Clone)]
pub enum NoiseModel {
    /// Isotropic, state-independent: `xi ~ N(0, sigma^2 I_d)`, so `E|xi|^2 = sigma^2 d`.
    Gaussian { sigma: f64 },
    /// Per-coordinate standard deviation `sigma * scale * (1 + dist(x, X))`.
    ScaledGaussian { sigma: f64, scale: f64 },
    /// `xi = grad f(x; omega) - grad f(x)` with `omega` uniform over components.
    FiniteSum(FiniteSum),
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(param("sigma", format!("must be non-negative, got {sigma}")))
            }
            NoiseModel::ScaledGaussian { sigma, scale }
                if !(sigma >= 0.0 && sigma.is_finite() && scale >= 0.0 && scale.is_finite()) =>
            {
                Err(param("sigma", "sigma and scale must be non-negative"))
            }
            _ => Ok(()),
        }
    }

    /// Bound on the single-sample second moment `E|xi|^2` over `N_r(X)`.
    /// Exact for the Gaussian models; for finite sums the largest exact
    /// second moment over `samples` points of the neighborhood.
    pub fn sigma_r(&self, landscape: &Landscape, spec: &NeighborhoodSpec, samples: usize, seed: u64) -> Result<f64> {
        let d = landscape.dim() as f64;
        match self {
            NoiseModel::Gaussian { sigma } => Ok(sigma * sigma * d),
            NoiseModel::ScaledGaussian { sigma, scale } => {
                let s = sigma * scale * (1.0 + spec.radius);
                Ok(s * s * d)
            }
            NoiseModel::FiniteSum(fs) => {
                let pts = crate::conditions::sample_neighborhood(spec, samples, seed)?;
                let mut g = vec![0.0; landscape.dim()];
                let mut p = vec![0.0; landscape.dim()];
                let mut c = vec![0.0; landscape.dim()];
                let mut worst: f64 = 0.0;
                for x in &pts {
                    landscape.eval_into(x, &mut g, &mut p);
                    let mut m = 0.0;
                    for comp in &fs.components {
                        comp.gradient(x, &mut c);
                        m += dist_sq(&c, &g);
                    }
                    worst = worst.max(m / fs.len() as f64);
                }
                Ok(worst)
            }
        }
    }

    /// Adds one single-sample draw of `xi` at `x` into `acc`.
    fn accumulate(&self, x: &[f64], state: &PointState, grad: &[f64], rng: &mut Rng, scratch: &mut [f64], acc: &mut [f64]) {
        match self {
            NoiseModel::Gaussian { sigma } => {
                for a in acc.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *a += sigma * z;
                }
            }
            NoiseModel::ScaledGaussian { sigma, scale } => {
                let s = sigma * scale * (1.0 + state.distance);
                for a in acc.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *a += s * z;
                }
            }
            NoiseModel::FiniteSum(fs) => {
                let k = rng.random_range(0..fs.len());
                fs.components[k].gradient(x, scratch);
                for ((a, c), g) in acc.iter_mut().zip(scratch.iter()).zip(grad) {
                    *a += c - g;
                }
            }
        }
    }
}

/// Reusable buffers for the hot loop.
#[derive(Debug)]
pub struct Stepper<'a> {
    landscape: &'a Landscape,
    noise: &'a NoiseModel,
    batch: usize,
    grad: Vec<f64>,
    proj: Vec<f64>,
    xi: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(landscape: &'a Landscape, noise: &'a NoiseModel, batch: usize) -> Self {
        let d = landscape.dim();
        Self {
            landscape,
            noise,
            batch,
            grad: vec![0.0; d],
            proj: vec![0.0; d],
            xi: vec![0.0; d],
            scratch: vec![0.0; d],
        }
    }

    /// Evaluates the landscape at `x`, keeping the gradient for [`Self::advance`].
    #[inline]
    pub fn observe(&mut self, x: &[f64]) -> PointState {
        self.landscape.eval_into(x, &mut self.grad, &mut self.proj)
    }

    /// Applies one update using the gradient from the last [`Self::observe`] at `x`.
    pub fn advance(&mut self, x: &mut [f64], state: &PointState, a: f64, rng: &mut Rng, step: usize) -> Result<()> {
        if !all_finite(&self.grad) {
            return Err(Error::NonFinite {
                step,
                detail: format!("gradient {:?} at {:?}", self.grad, x),
            });
        }
        self.xi.fill(0.0);
        for _ in 0..self.batch {
            self.noise
                .accumulate(x, state, &self.grad, rng, &mut self.scratch, &mut self.xi);
        }
        let inv = 1.0 / self.batch as f64;
        for ((xi, g), e) in x.iter_mut().zip(&self.grad).zip(&self.xi) {
            *xi -= a * (g + e * inv);
        }
        if !all_finite(x) {
            return Err(Error::NonFinite {
                step,
                detail: format!("iterate {x:?} after a step of size {a}"),
            });
        }
        Ok(())
    }

    /// Support value `h(x)`: the registered one, else the raw inner product.
    #[inline]
    fn support(&self, x: &[f64], state: &PointState) -> f64 {
        match self.landscape.family() {
            Family::PowerBasin { .. } => state.value - self.landscape.f_star(),
            Family::Custom(obj) => obj.support(x).unwrap_or(state.inner),
        }
    }
}

/// One SGD step from `x`.
pub fn sgd_step(x: &[f64], landscape: &Landscape, noise: &NoiseModel, a_n: f64, batch: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    check_point(x, landscape.dim())?;
    if !(a_n >= 0.0 && a_n.is_finite()) {
        return Err(param("a_n", format!("must be non-negative, got {a_n}")));
    }
    if batch == 0 {
        return Err(param("batch_size", "must be at least 1"));
    }
    let mut s = Stepper::new(landscape, noise, batch);
    let mut out = x.to_vec();
    let st = s.observe(x);
    s.advance(&mut out, &st, a_n, rng, 1)?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SgdConfig {
    pub landscape: Landscape,
    pub spec: NeighborhoodSpec,
    pub schedule: Schedule,
    pub noise: NoiseModel,
    pub batch_size: usize,
    /// Number of iterates `N`; the run performs `N - 1` updates.
    pub horizon: usize,
    pub x1: Vec<f64>,
    pub seed: u64,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        check_point(&self.x1, self.landscape.dim())?;
        self.schedule.validate()?;
        self.noise.validate()?;
        if self.batch_size == 0 {
            return Err(param("batch_size", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(param("horizon", "must be at least 1"));
        }
        if self.spec.minima != *self.landscape.minima() {
            return Err(param("neighborhood", "minima set differs from the landscape's"));
        }
        let d1 = self.landscape.distance(&self.x1);
        if d1 > self.spec.radius {
            return Err(Error::Premise(format!(
                "x1 lies at distance {d1} from X, outside the radius {}",
                self.spec.radius
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub n: usize,
    pub dist: f64,
    pub gap: f64,
    pub h: f64,
    pub a_n: f64,
    pub stopped_flag: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    /// First `n >= 2` with `dist(x_n, X) > r`, if any within the horizon.
    pub exit_time: Option<usize>,
    pub stayed: bool,
    pub final_x: Vec<f64>,
}

/// Per-trajectory quantities kept by the O(1)-memory mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub exit_time: Option<usize>,
    pub stayed: bool,
    /// `min_{n <= N} h` along the stopped process.
    pub min_h: f64,
    /// `f - f*` at the last (stopped) iterate.
    pub final_gap: f64,
    /// `f(x_n) - f*` at each requested checkpoint `n`.
    pub checkpoint_gaps: Vec<f64>,
}

/// Drives the stopped process and hands every record to `visit`.
fn drive(config: &SgdConfig, index: u64, mut visit: impl FnMut(&StepRecord)) -> Result<(Option<usize>, Vec<f64>)> {
    let mut rng = stream(config.seed, index);
    let mut s = Stepper::new(&config.landscape, &config.noise, config.batch_size);
    let mut x = config.x1.clone();
    let f_star = config.landscape.f_star();
    let r = config.spec.radius;
    let mut frozen: Option<StepRecord> = None;
    let mut exit_time = None;
    for n in 1..=config.horizon {
        let a_n = config.schedule.rate(n);
        let rec = match frozen {
            Some(f) => StepRecord { n, a_n, ..f },
            None => {
                let st = s.observe(&x);
                let exited = n >= 2 && st.distance > r;
                let rec = StepRecord {
                    n,
                    dist: st.distance,
                    gap: st.value - f_star,
                    h: s.support(&x, &st),
                    a_n,
                    stopped_flag: exited,
                };
                if exited {
                    exit_time = Some(n);
                    frozen = Some(rec);
                } else if n < config.horizon {
                    s.advance(&mut x, &st, a_n, &mut rng, n)?;
                }
                rec
            }
        };
        visit(&rec);
    }
    Ok((exit_time, x))
}

/// Full trajectory for stream `index` of the master seed.
pub fn run_trajectory_indexed(config: &SgdConfig, index: u64) -> Result<Trajectory> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.horizon);
    let (exit_time, final_x) = drive(config, index, |r| records.push(*r))?;
    Ok(Trajectory {
        records,
        stayed: exit_time.is_none(),
        exit_time,
        final_x,
    })
}

pub fn run_trajectory(config: &SgdConfig) -> Result<Trajectory> {
    run_trajectory_indexed(config, 0)
}

/// Summary of trajectory `index` without storing records. `checkpoints`
/// must be sorted and lie in `1..=horizon`. Does not re-validate `config`.
pub fn run_summary(config: &SgdConfig, index: u64, checkpoints: &[usize]) -> Result<TrajectorySummary> {
    let mut min_h = f64::INFINITY;
    let mut final_gap = f64::NAN;
    let mut gaps = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    let (exit_time, _) = drive(config, index, |r| {
        min_h = min_h.min(r.h);
        final_gap = r.gap;
        while next < checkpoints.len() && checkpoints[next] == r.n {
            gaps.push(r.gap);
            next += 1;
        }
    })?;
    Ok(TrajectorySummary {
        stayed: exit_time.is_none(),
        exit_time,
        min_h,
        final_gap,
        checkpoint_gaps: gaps,
    })
}

/// Writes the records as CSV with columns `n,dist,gap,h,a_n,stopped_flag`.
pub fn write_trajectory_csv<W: Write>(trajectory: &Trajectory, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in &trajectory.records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeResult {
    pub lhs_estimate: f64,
    pub rhs: f64,
    pub margin: f64,
    pub stderr: f64,
}

/// Minimum number of one-step samples accepted by the probe.
pub const PROBE_MIN_SAMPLES: usize = 100;

/// Monte Carlo check of the one-step recursion
/// `E[dist(x',X)^2 | x] <= (1 + L^2 a^2) dist(x,X)^2 - 2a (grad f(x), x - x_p) + sigma_r a^2 / I`.
#[allow(clippy::too_many_arguments)]
pub fn supermartingale_probe(
    landscape: &Landscape,
    spec: &NeighborhoodSpec,
    x: &[f64],
    noise: &NoiseModel,
    batch: usize,
    a_n: f64,
    lipschitz: f64,
    sigma_r: f64,
    m: usize,
    seed: u64,
) -> Result<ProbeResult> {
    if m < PROBE_MIN_SAMPLES {
        return Err(param("m", format!("need at least {PROBE_MIN_SAMPLES} samples, got {m}")));
    }
    if batch == 0 {
        return Err(param("batch_size", "must be at least 1"));
    }
    check_point(x, landscape.dim())?;
    if !spec.contains(x) {
        return Err(Error::Premise("probe state lies outside N_r(X)".into()));
    }
    let mut s = Stepper::new(landscape, noise, batch);
    let st = s.observe(x);
    let d2 = st.distance * st.distance;
    let rhs = (1.0 + lipschitz * lipschitz * a_n * a_n) * d2 - 2.0 * a_n * st.inner + sigma_r * a_n * a_n / batch as f64;

    let mut rng = stream(seed, 0);
    let mut y = x.to_vec();
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 1..=m {
        y.copy_from_slice(x);
        s.advance(&mut y, &st, a_n, &mut rng, 1)?;
        let v = landscape.distance(&y).powi(2);
        let delta = v - mean;
        mean += delta / k as f64;
        m2 += delta * (v - mean);
    }
    let stderr = (m2 / (m - 1) as f64 / m as f64).sqrt();
    Ok(ProbeResult {
        lhs_estimate: mean,
        rhs,
        margin: rhs - mean,
        stderr,
    })
}
