//! Loss landscapes whose global-minimum set is known exactly.
//!
//! The built-in family is the power basin `f(x) = C * dist(x, X)^q`, which for
//! `q > 2` is flat enough near `X` to break PL* and QG* while staying weakly
//! quasar-convex. Arbitrary losses plug in through [`Objective`].

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::minima::{check_point, MinimaSet, NeighborhoodSpec, ProjectionResult};
use crate::rng::{stream, unit_direction};
use crate::vecops::{dist, norm};

/// Number of random points used by the construction-time gradient check.
pub const SELF_CHECK_POINTS: usize = 100;
/// Maximum accepted relative gradient error against central differences.
pub const GRADIENT_TOLERANCE: f64 = 1e-5;

/// User-supplied loss with an analytic gradient.
pub trait Objective: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Support function `h` with `(grad f(x), x - x_p) >= h(x) >= 0`, if known.
    fn support(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

#[derive(Clone, Debug)]
pub enum Family {
    /// `f(x) = scale * dist(x, X)^degree`.
    PowerBasin { degree: f64, scale: f64 },
    Custom(Arc<dyn Objective>),
}

#[derive(Clone, Debug)]
pub struct Landscape {
    dim: usize,
    minima: MinimaSet,
    family: Family,
    f_star: f64,
    validity_radius: f64,
}

/// Value and gradient at a point, plus where the point sits relative to `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub distance: f64,
    /// False when the point lies beyond the validity radius and the value was
    /// obtained by extending the formula.
    pub inside_validity: bool,
}

/// Per-point quantities used on the hot path of the SGD engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub value: f64,
    pub distance: f64,
    /// `(grad f(x), x - x_p)`.
    pub inner: f64,
}

impl Landscape {
    pub fn power_basin(dim: usize, minima: MinimaSet, degree: f64, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(param("dimension", "must be at least 1"));
        }
        if !(degree >= 2.0 && degree.is_finite()) {
            return Err(param("degree", format!("power basin needs q >= 2, got {degree}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(param("scale", format!("must be positive, got {scale}")));
        }
        minima.validate(dim)?;
        Ok(Self {
            dim,
            minima,
            family: Family::PowerBasin { degree, scale },
            f_star: 0.0,
            validity_radius: f64::INFINITY,
        })
    }

    pub fn custom(dim: usize, minima: MinimaSet, f_star: f64, objective: Arc<dyn Objective>) -> Result<Self> {
        if dim == 0 {
            return Err(param("dimension", "must be at least 1"));
        }
        if !f_star.is_finite() {
            return Err(param("f_star", "must be finite"));
        }
        minima.validate(dim)?;
        Ok(Self {
            dim,
            minima,
            family: Family::Custom(objective),
            f_star,
            validity_radius: f64::INFINITY,
        })
    }

    /// Restricts `oracle_eval` to `dist(x, X) <= radius`.
    pub fn with_validity_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(param("validity_radius", format!("must be positive, got {radius}")));
        }
        self.validity_radius = radius;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn minima(&self) -> &MinimaSet {
        &self.minima
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn validity_radius(&self) -> f64 {
        self.validity_radius
    }

    /// Power-basin degree, if this is a power basin.
    pub fn degree(&self) -> Option<f64> {
        match self.family {
            Family::PowerBasin { degree, .. } => Some(degree),
            Family::Custom(_) => None,
        }
    }

    pub fn project(&self, x: &[f64]) -> ProjectionResult {
        self.minima.project(x)
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        self.minima.distance(x)
    }

    /// `f(x)`, extending the formula beyond the validity radius.
    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::PowerBasin { degree, scale } => scale * self.minima.distance(x).powf(*degree),
            Family::Custom(obj) => obj.value(x),
        }
    }

    /// Fills `grad` with `grad f(x)` and `proj` with a projection of `x`.
    /// No validity check and no allocation for non-union minima sets.
    pub fn eval_into(&self, x: &[f64], grad: &mut [f64], proj: &mut [f64]) -> PointState {
        let (distance, _) = self.minima.project_into(x, proj);
        let value = match &self.family {
            Family::PowerBasin { degree, scale } => {
                if distance > 0.0 {
                    // C q dist^{q-1} * (x - x_p)/dist
                    let coef = scale * degree * distance.powf(degree - 2.0);
                    for ((g, xi), pi) in grad.iter_mut().zip(x).zip(proj.iter()) {
                        *g = coef * (xi - pi);
                    }
                } else {
                    grad.fill(0.0);
                }
                scale * distance.powf(*degree)
            }
            Family::Custom(obj) => {
                obj.gradient(x, grad);
                obj.value(x)
            }
        };
        let inner = grad.iter().zip(x.iter().zip(proj.iter())).map(|(g, (xi, pi))| g * (xi - pi)).sum();
        PointState { value, distance, inner }
    }

    /// Value and gradient, extending beyond the validity radius and flagging it.
    pub fn evaluate_extended(&self, x: &[f64]) -> Evaluation {
        let mut gradient = vec![0.0; self.dim];
        let mut proj = vec![0.0; self.dim];
        let s = self.eval_into(x, &mut gradient, &mut proj);
        Evaluation {
            value: s.value,
            gradient,
            distance: s.distance,
            inside_validity: s.distance <= self.validity_radius,
        }
    }

    /// Value and gradient inside the validity region.
    pub fn oracle_eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_point(x, self.dim)?;
        let e = self.evaluate_extended(x);
        if !e.inside_validity {
            return Err(Error::Region {
                distance: e.distance,
                radius: self.validity_radius,
            });
        }
        Ok((e.value, e.gradient))
    }

    /// Registered support function `h(x)`. Power basins use `h = f - f*`,
    /// i.e. the weak quasar-convex support with `zeta = 1`.
    pub fn support(&self, x: &[f64]) -> Option<f64> {
        match &self.family {
            Family::PowerBasin { .. } => Some(self.value(x) - self.f_star),
            Family::Custom(obj) => obj.support(x),
        }
    }

    pub fn has_support(&self) -> bool {
        match &self.family {
            Family::PowerBasin { .. } => true,
            Family::Custom(obj) => obj.support(&vec![0.0; self.dim]).is_some(),
        }
    }

    /// Default gradient finite-difference step at `x`.
    pub fn gradient_step(x: &[f64]) -> f64 {
        1e-6 * (1.0 + norm(x))
    }

    /// Default Hessian finite-difference step at `x`.
    pub fn hessian_step(x: &[f64]) -> f64 {
        1e-4 * (1.0 + norm(x))
    }

    /// Central-difference gradient.
    pub fn fd_gradient(&self, x: &[f64], step: f64) -> Vec<f64> {
        let mut probe = x.to_vec();
        (0..self.dim)
            .map(|i| {
                probe[i] = x[i] + step;
                let fp = self.value(&probe);
                probe[i] = x[i] - step;
                let fm = self.value(&probe);
                probe[i] = x[i];
                (fp - fm) / (2.0 * step)
            })
            .collect()
    }

    /// Relative error `|g - g_fd| / max(|g|, 1)` of the declared gradient, or
    /// `None` when `x` is too close to a non-smooth point for the comparison
    /// to mean anything (on `X`, or where the projection jumps).
    pub fn gradient_error(&self, x: &[f64]) -> Option<f64> {
        let h = Self::gradient_step(x);
        let base = self.project(x);
        if base.distance < 1e-4 || !base.unique {
            return None;
        }
        let mut probe = x.to_vec();
        for i in 0..self.dim {
            for s in [h, -h] {
                probe[i] = x[i] + s;
                if dist(&self.project(&probe).projection, &base.projection) > h.sqrt() {
                    return None;
                }
            }
            probe[i] = x[i];
        }
        let g = self.evaluate_extended(x).gradient;
        let fd = self.fd_gradient(x, h);
        let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        Some(diff / norm(&g).max(1.0))
    }

    /// Compares the declared gradient with central differences at `n` points
    /// of `N_radius(X)`. Returns the worst relative error seen.
    pub fn self_check(&self, radius: f64, n: usize, seed: u64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let mut rng = stream(seed, i as u64);
            let z = self.minima.sample_point(&mut rng);
            let t: f64 = rand::Rng::random::<f64>(&mut rng) * radius;
            let u = unit_direction(&mut rng, self.dim);
            let x: Vec<f64> = z.iter().zip(&u).map(|(zi, ui)| zi + t * ui).collect();
            if let Some(err) = self.gradient_error(&x) {
                if !(err < GRADIENT_TOLERANCE) {
                    return Err(param(
                        "gradient",
                        format!("declared gradient disagrees with finite differences at {x:?} (relative error {err:e})"),
                    ));
                }
                worst = worst.max(err);
            }
        }
        Ok(worst)
    }
}

/// Symmetric finite-difference Hessian.
pub fn hessian_fd(landscape: &Landscape, x: &[f64], step: f64) -> Result<DMatrix<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(param("step", format!("must be positive, got {step}")));
    }
    check_point(x, landscape.dim())?;
    let d = landscape.dim();
    let f = |p: &[f64]| landscape.value(p);
    let f0 = f(x);
    let mut h = DMatrix::zeros(d, d);
    let mut p = x.to_vec();
    for i in 0..d {
        p[i] = x[i] + step;
        let fp = f(&p);
        p[i] = x[i] - step;
        let fm = f(&p);
        p[i] = x[i];
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (step * step);
        for j in (i + 1)..d {
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * step;
                p[j] = x[j] + sj * step;
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * step * step);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// Configuration record for a landscape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LandscapeSpec {
    PowerBasin {
        dimension: usize,
        degree: f64,
        scale: f64,
        minima: MinimaSet,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        validity_radius: Option<f64>,
    },
}

/// Seed of the construction-time gradient self-check.
const SELF_CHECK_SEED: u64 = 0x5eed_1a2d;

/// Builds a landscape from its record and runs the gradient self-check.
pub fn make_landscape(spec: &LandscapeSpec) -> Result<Landscape> {
    let LandscapeSpec::PowerBasin {
        dimension,
        degree,
        scale,
        minima,
        validity_radius,
    } = spec;
    let mut l = Landscape::power_basin(*dimension, minima.clone(), *degree, *scale)?;
    if let Some(v) = validity_radius {
        l = l.with_validity_radius(*v)?;
    }
    let check_radius = l.validity_radius.min(1.0);
    l.self_check(check_radius, SELF_CHECK_POINTS, SELF_CHECK_SEED)?;
    Ok(l)
}

/// The neighborhood an experiment certifies and simulates in.
pub fn neighborhood(landscape: &Landscape, radius: f64) -> Result<NeighborhoodSpec> {
    NeighborhoodSpec::new(radius, landscape.minima().clone())
}

impl fmt::Display for Landscape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::PowerBasin { degree, scale } => write!(f, "PowerBasin(q={degree}, C={scale}, d={})", self.dim),
            Family::Custom(_) => write!(f, "Custom(d={})", self.dim),
        }
    }
}
