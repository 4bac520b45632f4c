//! Compact sets of global minimizers and their metric projection.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::rng::{unit_direction, Rng};
use crate::vecops::{all_finite, dist, dot, lex_cmp, norm_sq};

/// Relative tolerance for deciding that two components of a union are
/// equidistant from a query point.
const TIE_TOL: f64 = 1e-12;

/// A compact set `X` of global minimizers with a closed-form projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MinimaSet {
    Point { center: Vec<f64> },
    /// Sphere of the given radius embedded in the full space, so its
    /// intrinsic dimension is `d - 1`.
    Sphere { center: Vec<f64>, radius: f64 },
    Segment { start: Vec<f64>, end: Vec<f64> },
    Union { parts: Vec<MinimaSet> },
}

/// Distance to `X` together with a minimizing point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub distance: f64,
    pub projection: Vec<f64>,
    /// False when the metric projection has more than one element; the
    /// returned `projection` is then the canonical representative.
    pub unique: bool,
}

/// Neighborhood `N_r(X) = {x : dist(x, X) <= r}` (closed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    pub radius: f64,
    pub minima: MinimaSet,
}

impl NeighborhoodSpec {
    pub fn new(radius: f64, minima: MinimaSet) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(param("radius", format!("must be positive, got {radius}")));
        }
        Ok(Self { radius, minima })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.minima.distance(x) <= self.radius
    }
}

struct Candidates {
    distance: f64,
    points: Vec<Vec<f64>>,
    /// Set for minimizer sets that are a continuum (sphere center).
    continuum: bool,
}

impl MinimaSet {
    pub fn point(center: Vec<f64>) -> Self {
        MinimaSet::Point { center }
    }

    pub fn sphere(center: Vec<f64>, radius: f64) -> Self {
        MinimaSet::Sphere { center, radius }
    }

    /// Unit circle (or unit sphere) centered at the origin of `R^dim`.
    pub fn unit_sphere(dim: usize) -> Self {
        MinimaSet::Sphere {
            center: vec![0.0; dim],
            radius: 1.0,
        }
    }

    pub fn segment(start: Vec<f64>, end: Vec<f64>) -> Self {
        MinimaSet::Segment { start, end }
    }

    /// Ambient dimension `d`.
    pub fn ambient_dim(&self) -> usize {
        match self {
            MinimaSet::Point { center } | MinimaSet::Sphere { center, .. } => center.len(),
            MinimaSet::Segment { start, .. } => start.len(),
            MinimaSet::Union { parts } => parts.first().map_or(0, MinimaSet::ambient_dim),
        }
    }

    /// Intrinsic dimension of the minimizer manifold.
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            MinimaSet::Point { .. } => 0,
            MinimaSet::Sphere { center, .. } => center.len().saturating_sub(1),
            MinimaSet::Segment { start, end } => usize::from(start != end),
            MinimaSet::Union { parts } => parts.iter().map(MinimaSet::intrinsic_dim).max().unwrap_or(0),
        }
    }

    /// Checks finiteness, positive radii and a common ambient dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let check_vec = |name: &'static str, v: &[f64]| -> Result<()> {
            if v.len() != dim {
                return Err(param(name, format!("expected dimension {dim}, got {}", v.len())));
            }
            if !all_finite(v) {
                return Err(param(name, "contains non-finite coordinates"));
            }
            Ok(())
        };
        match self {
            MinimaSet::Point { center } => check_vec("center", center),
            MinimaSet::Sphere { center, radius } => {
                check_vec("center", center)?;
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(param("radius", format!("sphere radius must be positive, got {radius}")));
                }
                Ok(())
            }
            MinimaSet::Segment { start, end } => {
                check_vec("start", start)?;
                check_vec("end", end)
            }
            MinimaSet::Union { parts } => {
                if parts.is_empty() {
                    return Err(param("parts", "union must have at least one component"));
                }
                parts.iter().try_for_each(|p| p.validate(dim))
            }
        }
    }

    /// `dist(x, X)`.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            MinimaSet::Point { center } => dist(x, center),
            MinimaSet::Sphere { center, radius } => (dist(x, center) - radius).abs(),
            MinimaSet::Segment { start, end } => {
                let t = segment_param(x, start, end);
                x.iter()
                    .zip(start.iter().zip(end))
                    .map(|(xi, (s, e))| {
                        let p = s + t * (e - s);
                        (xi - p) * (xi - p)
                    })
                    .sum::<f64>()
                    .sqrt()
            }
            MinimaSet::Union { parts } => parts.iter().map(|p| p.distance(x)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Writes a minimizing point into `out` and returns `(distance, unique)`.
    /// Allocation free except for unions.
    pub fn project_into(&self, x: &[f64], out: &mut [f64]) -> (f64, bool) {
        match self {
            MinimaSet::Point { center } => {
                out.copy_from_slice(center);
                (dist(x, center), true)
            }
            MinimaSet::Sphere { center, radius } => {
                let rho = dist(x, center);
                if rho == 0.0 {
                    out.copy_from_slice(center);
                    out[0] += radius;
                    return (*radius, false);
                }
                let s = radius / rho;
                for ((o, xi), c) in out.iter_mut().zip(x).zip(center) {
                    *o = c + s * (xi - c);
                }
                ((rho - radius).abs(), true)
            }
            MinimaSet::Segment { start, end } => {
                let t = segment_param(x, start, end);
                for ((o, s), e) in out.iter_mut().zip(start).zip(end) {
                    *o = s + t * (e - s);
                }
                (dist(x, out), true)
            }
            MinimaSet::Union { .. } => {
                let r = self.project(x);
                out.copy_from_slice(&r.projection);
                (r.distance, r.unique)
            }
        }
    }

    /// Metric projection of `x` onto `X`.
    pub fn project(&self, x: &[f64]) -> ProjectionResult {
        let mut c = self.candidates(x);
        c.points.sort_by(|a, b| lex_cmp(a, b));
        let unique = !c.continuum && c.points.len() == 1;
        ProjectionResult {
            distance: c.distance,
            projection: c.points.swap_remove(0),
            unique,
        }
    }

    fn candidates(&self, x: &[f64]) -> Candidates {
        match self {
            MinimaSet::Union { parts } => {
                let per: Vec<Candidates> = parts.iter().map(|p| p.candidates(x)).collect();
                let best = per.iter().map(|c| c.distance).fold(f64::INFINITY, f64::min);
                let tol = TIE_TOL * best.max(1.0);
                let mut points: Vec<Vec<f64>> = Vec::new();
                let mut continuum = false;
                for c in per.into_iter().filter(|c| c.distance - best <= tol) {
                    continuum |= c.continuum;
                    for p in c.points {
                        if !points.iter().any(|q| dist(q, &p) <= tol) {
                            points.push(p);
                        }
                    }
                }
                Candidates {
                    distance: best,
                    points,
                    continuum,
                }
            }
            _ => {
                let mut out = vec![0.0; x.len()];
                let (distance, unique) = self.project_into(x, &mut out);
                Candidates {
                    distance,
                    points: vec![out],
                    continuum: !unique,
                }
            }
        }
    }

    /// Draws a point of `X`: uniform on spheres and segments, uniform over
    /// components for unions.
    pub fn sample_point(&self, rng: &mut Rng) -> Vec<f64> {
        match self {
            MinimaSet::Point { center } => center.clone(),
            MinimaSet::Sphere { center, radius } => {
                let u = unit_direction(rng, center.len());
                center.iter().zip(&u).map(|(c, ui)| c + radius * ui).collect()
            }
            MinimaSet::Segment { start, end } => {
                let t: f64 = rng.random();
                start.iter().zip(end).map(|(s, e)| s + t * (e - s)).collect()
            }
            MinimaSet::Union { parts } => {
                let k = rng.random_range(0..parts.len());
                parts[k].sample_point(rng)
            }
        }
    }
}

fn segment_param(x: &[f64], start: &[f64], end: &[f64]) -> f64 {
    let dir: Vec<f64> = end.iter().zip(start).map(|(e, s)| e - s).collect();
    let len_sq = norm_sq(&dir);
    if len_sq == 0.0 {
        return 0.0;
    }
    let rel: Vec<f64> = x.iter().zip(start).map(|(xi, s)| xi - s).collect();
    (dot(&rel, &dir) / len_sq).clamp(0.0, 1.0)
}

/// Validates an input vector for projection.
pub fn check_point(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::Domain(format!("expected dimension {dim}, got {}", x.len())));
    }
    if !all_finite(x) {
        return Err(Error::Domain("point has non-finite coordinates".into()));
    }
    Ok(())
}

/// Distance and projection with input validation.
pub fn dist_and_project(x: &[f64], set: &MinimaSet) -> Result<ProjectionResult> {
    check_point(x, set.ambient_dim())?;
    Ok(set.project(x))
}
