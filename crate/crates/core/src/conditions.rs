//! Sampled certification of local convexity conditions on `N_r(X)`.
//!
//! Every condition has the shape `lhs(x) >= c * rhs(x)`. For the ratio-type
//! conditions (LRSI, PL*, QG*, QC, WQC) the certifier reports the smallest
//! attainable constant over the sample; for the pointwise ones (*C, NNS) it
//! checks the inequality directly. Random samples are supplemented by a
//! geometric ladder of points along rays toward `X`, which is what exposes
//! flat basins: their ratios only vanish in the limit `dist -> 0`.

use std::fmt;

use nalgebra::SymmetricEigen;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::landscape::{hessian_fd, Landscape};
use crate::minima::{MinimaSet, NeighborhoodSpec};
use crate::rng::{stream, unit_direction};
use crate::vecops::{dot, norm_sq};

/// Points closer than this to `X` are skipped in ratio-type constants.
pub const EXCLUSION_RADIUS: f64 = 1e-8;
/// A ratio-type constant `mu` must exceed this for the condition to hold.
pub const MU_TOLERANCE: f64 = 1e-6;
/// Smallest quasar constant accepted for QC/WQC.
pub const ZETA_MIN: f64 = 1e-3;
/// Relative singular-value threshold for Hessian rank.
pub const RANK_RELATIVE_TOL: f64 = 1e-6;
/// Absolute singular-value floor for Hessian rank; finite-difference
/// Hessians of flat basins are O(step^2) rather than exactly zero.
pub const RANK_ABSOLUTE_FLOOR: f64 = 1e-6;
/// Safety factor applied to sampled Lipschitz constants before they feed bounds.
pub const LIPSCHITZ_SAFETY: f64 = 1.1;
/// Number of random samples that get a refinement ladder toward `X`.
const LADDER_RAYS: usize = 32;
const POINTWISE_TOL: f64 = 1e-12;
const EXTENDED_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConditionKind {
    Lrsi,
    PlStar,
    QgStar,
    StarC,
    Qc,
    Wqc,
    Nns,
    Hcprc,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 8] = [
        ConditionKind::Lrsi,
        ConditionKind::PlStar,
        ConditionKind::QgStar,
        ConditionKind::StarC,
        ConditionKind::Qc,
        ConditionKind::Wqc,
        ConditionKind::Nns,
        ConditionKind::Hcprc,
    ];

    fn is_quasar(self) -> bool {
        matches!(self, ConditionKind::Qc | ConditionKind::Wqc)
    }

    fn is_ratio(self) -> bool {
        matches!(
            self,
            ConditionKind::Lrsi | ConditionKind::PlStar | ConditionKind::QgStar | ConditionKind::Qc | ConditionKind::Wqc
        )
    }

    /// Conditions stated against a single minimizer `x*`.
    fn needs_single_minimizer(self) -> bool {
        matches!(self, ConditionKind::StarC | ConditionKind::Qc)
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConditionKind::Lrsi => "LRSI",
            ConditionKind::PlStar => "PL*",
            ConditionKind::QgStar => "QG*",
            ConditionKind::StarC => "*C",
            ConditionKind::Qc => "QC",
            ConditionKind::Wqc => "WQC",
            ConditionKind::Nns => "NNS",
            ConditionKind::Hcprc => "HCPRC",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub kind: ConditionKind,
    pub holds: bool,
    /// `mu` for LRSI/PL*/QG*, `zeta` (clipped to 1) for QC/WQC.
    pub best_constant: Option<f64>,
    pub violation_witness: Option<Vec<f64>>,
    pub n_samples: usize,
    pub region: NeighborhoodSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HcprcReport {
    pub holds: bool,
    pub expected_codim: usize,
    pub points: Vec<Vec<f64>>,
    /// Singular values per point, descending.
    pub singular_values: Vec<Vec<f64>>,
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalConstants {
    /// Sampled gradient Lipschitz constant on `N_r` (a lower bound).
    pub lipschitz: f64,
    /// Same on `N_{r+delta}`.
    pub lipschitz_extended: f64,
    /// Largest sampled gradient norm on `N_r`.
    pub grad_sup: f64,
    pub delta: f64,
    pub safety_factor: f64,
    /// `L_{r+delta}/2 + grad_sup/delta` with the inflated `L_{r+delta}`.
    pub c_patel: f64,
}

impl LocalConstants {
    /// Inflated Lipschitz constant to feed into the stability bound.
    pub fn lipschitz_for_bounds(&self) -> f64 {
        self.safety_factor * self.lipschitz
    }
}

/// `C = L/2 + sup|grad f| / delta`.
pub fn patel_constant(lipschitz_extended: f64, grad_sup: f64, delta: f64) -> f64 {
    lipschitz_extended / 2.0 + grad_sup / delta
}

/// Draws `n` points of `N_r(X)`: a point of `X`, a radial offset uniform on
/// `[0, r]` and a uniform direction, rejected if it lands outside `N_r`.
/// Point `i` only depends on `(seed, i)`.
pub fn sample_neighborhood(spec: &NeighborhoodSpec, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(param("n", "must be at least 1"));
    }
    if !(spec.radius > 0.0) {
        return Err(param("radius", "must be positive"));
    }
    let dim = spec.minima.ambient_dim();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            loop {
                let z = spec.minima.sample_point(&mut rng);
                let t = rng.random::<f64>() * spec.radius;
                let u = unit_direction(&mut rng, dim);
                let x: Vec<f64> = z.iter().zip(&u).map(|(zi, ui)| zi + t * ui).collect();
                if spec.minima.distance(&x) <= spec.radius {
                    break x;
                }
            }
        })
        .collect())
}

/// Points along the rays from the projection of each of the first sampled
/// points, at distances `dist * 10^-k` down to the exclusion radius.
fn refinement_ladder(landscape: &Landscape, anchor: Option<&[f64]>, samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for x in samples.iter().take(LADDER_RAYS) {
        let p = match anchor {
            Some(a) => a.to_vec(),
            None => landscape.project(x).projection,
        };
        let d = crate::vecops::dist(x, &p);
        if d <= EXCLUSION_RADIUS {
            continue;
        }
        let v: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| (xi - pi) / d).collect();
        let mut t = d / 10.0;
        while t >= EXCLUSION_RADIUS {
            out.push(p.iter().zip(&v).map(|(pi, vi)| pi + t * vi).collect());
            t /= 10.0;
        }
    }
    out
}

fn single_minimizer(landscape: &Landscape, kind: ConditionKind) -> Result<Option<Vec<f64>>> {
    if !kind.needs_single_minimizer() {
        return Ok(None);
    }
    match landscape.minima() {
        MinimaSet::Point { center } => Ok(Some(center.clone())),
        _ => Err(Error::Kind {
            kind: kind.to_string(),
            reason: "defined against a single minimizer; the minima set is not a point".into(),
        }),
    }
}

enum Pointwise {
    /// Attainable constant at this point (ratio kinds).
    Ratio(f64),
    /// Pointwise verdict (*C, NNS).
    Verdict(bool),
    /// Excluded from the constant (too close to `X`, or holds for every constant).
    Skip,
}

fn evaluate_point(landscape: &Landscape, kind: ConditionKind, anchor: Option<&[f64]>, x: &[f64]) -> Result<Pointwise> {
    let e = landscape.evaluate_extended(x);
    let p = match anchor {
        Some(a) => a.to_vec(),
        None => landscape.project(x).projection,
    };
    let diff: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
    let d2 = norm_sq(&diff);
    let inner = dot(&e.gradient, &diff);
    let gap = e.value - landscape.f_star();
    let (lhs, rhs) = match kind {
        ConditionKind::Lrsi => (inner, d2),
        ConditionKind::PlStar => (norm_sq(&e.gradient), gap),
        ConditionKind::QgStar => (gap, d2),
        ConditionKind::Qc | ConditionKind::Wqc => (inner, gap),
        ConditionKind::StarC => {
            let ok = inner - gap >= -POINTWISE_TOL * (1.0 + inner.abs() + gap.abs());
            return Ok(Pointwise::Verdict(ok));
        }
        ConditionKind::Nns => {
            let h = landscape.support(x).ok_or_else(|| Error::Kind {
                kind: kind.to_string(),
                reason: "landscape registers no support function h".into(),
            })?;
            let ok = h >= -POINTWISE_TOL && inner - h >= -POINTWISE_TOL * (1.0 + inner.abs() + h.abs());
            return Ok(Pointwise::Verdict(ok));
        }
        ConditionKind::Hcprc => unreachable!("HCPRC has its own check"),
    };
    if d2.sqrt() < EXCLUSION_RADIUS {
        return Ok(Pointwise::Skip);
    }
    if rhs > 0.0 {
        Ok(Pointwise::Ratio(lhs / rhs))
    } else if lhs >= 0.0 {
        Ok(Pointwise::Skip)
    } else {
        Ok(Pointwise::Ratio(f64::NEG_INFINITY))
    }
}

fn ratio_passes(kind: ConditionKind, ratio: f64) -> bool {
    if kind.is_quasar() {
        ratio >= ZETA_MIN
    } else {
        ratio > MU_TOLERANCE
    }
}

/// Re-evaluates the acceptance test of `kind` at the single point `x`.
pub fn satisfied_at(landscape: &Landscape, kind: ConditionKind, x: &[f64]) -> Result<bool> {
    if kind == ConditionKind::Hcprc {
        return Err(Error::Kind {
            kind: kind.to_string(),
            reason: "use check_hcprc_rank".into(),
        });
    }
    let anchor = single_minimizer(landscape, kind)?;
    Ok(match evaluate_point(landscape, kind, anchor.as_deref(), x)? {
        Pointwise::Ratio(r) => ratio_passes(kind, r),
        Pointwise::Verdict(ok) => ok,
        Pointwise::Skip => true,
    })
}

/// Certifies (or falsifies) `kind` over sampled points of `N_r(X)`.
pub fn check_condition(
    landscape: &Landscape,
    spec: &NeighborhoodSpec,
    kind: ConditionKind,
    samples: usize,
    seed: u64,
) -> Result<ConditionReport> {
    if kind == ConditionKind::Hcprc {
        return Err(Error::Kind {
            kind: kind.to_string(),
            reason: "use check_hcprc_rank".into(),
        });
    }
    let anchor = single_minimizer(landscape, kind)?;
    if kind == ConditionKind::Nns && !landscape.has_support() {
        return Err(Error::Kind {
            kind: kind.to_string(),
            reason: "landscape registers no support function h".into(),
        });
    }
    let mut points = sample_neighborhood(spec, samples, seed)?;
    let ladder = refinement_ladder(landscape, anchor.as_deref(), &points);
    points.extend(ladder);

    let evals = points
        .par_iter()
        .map(|x| evaluate_point(landscape, kind, anchor.as_deref(), x))
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<(f64, usize)> = None;
    let mut first_violation: Option<usize> = None;
    for (i, ev) in evals.iter().enumerate() {
        match *ev {
            Pointwise::Ratio(r) => {
                if best.is_none_or(|(b, _)| r < b) {
                    best = Some((r, i));
                }
            }
            Pointwise::Verdict(false) if first_violation.is_none() => first_violation = Some(i),
            _ => {}
        }
    }

    let (holds, best_constant, witness) = if kind.is_ratio() {
        match best {
            Some((r, i)) => {
                let holds = ratio_passes(kind, r);
                let reported = if kind.is_quasar() { r.min(1.0) } else { r };
                (holds, Some(reported), (!holds).then(|| points[i].clone()))
            }
            // every sampled point satisfies the inequality for any constant
            None => (true, None, None),
        }
    } else {
        (first_violation.is_none(), None, first_violation.map(|i| points[i].clone()))
    };

    Ok(ConditionReport {
        kind,
        holds,
        best_constant,
        violation_witness: witness,
        n_samples: points.len(),
        region: spec.clone(),
    })
}

/// Numerical rank of the finite-difference Hessian at points sampled on `X`.
pub fn check_hcprc_rank(
    landscape: &Landscape,
    spec: &NeighborhoodSpec,
    expected_codim: usize,
    n_points: usize,
    seed: u64,
) -> Result<HcprcReport> {
    let d = landscape.dim();
    if expected_codim > d {
        return Err(param("expected_codim", format!("cannot exceed the dimension {d}")));
    }
    if n_points == 0 {
        return Err(param("n_points", "must be at least 1"));
    }
    let points: Vec<Vec<f64>> = (0..n_points)
        .map(|i| spec.minima.sample_point(&mut stream(seed, i as u64)))
        .collect();
    let singular_values = points
        .par_iter()
        .map(|x| {
            let h = hessian_fd(landscape, x, Landscape::hessian_step(x))?;
            let mut sv: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().map(|v| v.abs()).collect();
            sv.sort_by(|a, b| b.total_cmp(a));
            Ok(sv)
        })
        .collect::<Result<Vec<_>>>()?;
    let ranks: Vec<usize> = singular_values.iter().map(|sv| numerical_rank(sv)).collect();
    Ok(HcprcReport {
        holds: ranks.iter().all(|&r| r == expected_codim),
        expected_codim,
        points,
        singular_values,
        ranks,
    })
}

/// Rank from descending singular values.
pub fn numerical_rank(singular_values: &[f64]) -> usize {
    let top = singular_values.first().copied().unwrap_or(0.0);
    let cut = (RANK_RELATIVE_TOL * top).max(RANK_ABSOLUTE_FLOOR);
    singular_values.iter().filter(|&&s| s > cut).count()
}

/// Largest `|grad f(x) - grad f(y)| / |x - y|` over all sampled pairs.
fn pairwise_lipschitz(landscape: &Landscape, points: &[Vec<f64>]) -> f64 {
    let grads: Vec<Vec<f64>> = points.iter().map(|x| landscape.evaluate_extended(x).gradient).collect();
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut best: f64 = 0.0;
            for j in (i + 1)..points.len() {
                let dx = crate::vecops::dist(&points[i], &points[j]);
                if dx > 0.0 {
                    best = best.max(crate::vecops::dist(&grads[i], &grads[j]) / dx);
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Samples the local constants feeding the stability bound and the
/// descent-lemma constant `C`.
pub fn estimate_local_constants(
    landscape: &Landscape,
    spec: &NeighborhoodSpec,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<LocalConstants> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(param("delta", format!("must be positive, got {delta}")));
    }
    if samples < 2 {
        return Err(param("samples", "need at least two points to form a pair"));
    }
    let inner = sample_neighborhood(spec, samples, seed)?;
    let wider = NeighborhoodSpec::new(spec.radius + delta, spec.minima.clone())?;
    let mut outer = sample_neighborhood(&wider, samples, seed ^ EXTENDED_STREAM)?;
    let lipschitz = pairwise_lipschitz(landscape, &inner);
    outer.extend(inner.iter().cloned());
    let lipschitz_extended = pairwise_lipschitz(landscape, &outer).max(lipschitz);
    let grad_sup = inner
        .iter()
        .map(|x| crate::vecops::norm(&landscape.evaluate_extended(x).gradient))
        .fold(0.0, f64::max);
    Ok(LocalConstants {
        lipschitz,
        lipschitz_extended,
        grad_sup,
        delta,
        safety_factor: LIPSCHITZ_SAFETY,
        c_patel: patel_constant(LIPSCHITZ_SAFETY * lipschitz_extended, grad_sup, delta),
    })
}

/// Smallest 1D quasar constant of the radial slice `t -> f(x_p + t v)` on
/// `(0, t_max]`, with minimizer `t = 0`.
pub fn radial_quasar_constant(landscape: &Landscape, base: &[f64], direction: &[f64], t_max: f64, n: usize) -> Result<f64> {
    if n == 0 || !(t_max > 0.0) {
        return Err(param("n", "need n >= 1 and t_max > 0"));
    }
    let mut zeta = f64::INFINITY;
    for k in 1..=n {
        let t = t_max * k as f64 / n as f64;
        let x: Vec<f64> = base.iter().zip(direction).map(|(b, v)| b + t * v).collect();
        let e = landscape.evaluate_extended(&x);
        let gap = e.value - landscape.f_star();
        if gap > 0.0 {
            let slope = dot(&e.gradient, direction);
            zeta = zeta.min(slope * t / gap);
        }
    }
    Ok(zeta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImplicationStatus {
    Consistent,
    /// Antecedent certified while the consequent was falsified: a checker bug.
    Inconsistent,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Implication {
    pub label: u8,
    pub from: ConditionKind,
    pub to: ConditionKind,
    pub status: ImplicationStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationMatrix {
    pub reports: Vec<ConditionReport>,
    pub hcprc: Option<HcprcReport>,
    pub implications: Vec<Implication>,
    /// Pairs whose relationship is open; recorded, never asserted.
    pub unconstrained: Vec<(ConditionKind, ConditionKind)>,
    /// True when the sample shows WQC holding while PL* and QG* both fail.
    pub flat_basin_separation: bool,
}

impl ImplicationMatrix {
    pub fn consistent(&self) -> bool {
        self.implications.iter().all(|i| i.status != ImplicationStatus::Inconsistent)
    }

    pub fn holds(&self, kind: ConditionKind) -> Option<bool> {
        if kind == ConditionKind::Hcprc {
            return self.hcprc.as_ref().map(|h| h.holds);
        }
        self.reports.iter().find(|r| r.kind == kind).map(|r| r.holds)
    }

    pub fn report(&self, kind: ConditionKind) -> Option<&ConditionReport> {
        self.reports.iter().find(|r| r.kind == kind)
    }
}

const ARROWS: [(u8, ConditionKind, ConditionKind); 6] = [
    (1, ConditionKind::Hcprc, ConditionKind::Lrsi),
    (2, ConditionKind::Lrsi, ConditionKind::Nns),
    (3, ConditionKind::Lrsi, ConditionKind::PlStar),
    (4, ConditionKind::Wqc, ConditionKind::Nns),
    (5, ConditionKind::Qc, ConditionKind::Wqc),
    (6, ConditionKind::StarC, ConditionKind::Qc),
];

/// Runs every applicable check and tests the implication diagram on the
/// sampled evidence.
pub fn implication_matrix(landscape: &Landscape, spec: &NeighborhoodSpec, samples: usize, seed: u64) -> Result<ImplicationMatrix> {
    let mut reports = Vec::new();
    for kind in ConditionKind::ALL {
        if kind == ConditionKind::Hcprc {
            continue;
        }
        match check_condition(landscape, spec, kind, samples, seed) {
            Ok(r) => reports.push(r),
            Err(Error::Kind { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let hcprc = match landscape.minima() {
        MinimaSet::Point { .. } | MinimaSet::Sphere { .. } => {
            let codim = landscape.dim() - landscape.minima().intrinsic_dim();
            Some(check_hcprc_rank(landscape, spec, codim, samples.clamp(1, 100), seed)?)
        }
        _ => None,
    };
    let lookup = |k: ConditionKind| -> Option<bool> {
        if k == ConditionKind::Hcprc {
            hcprc.as_ref().map(|h| h.holds)
        } else {
            reports.iter().find(|r| r.kind == k).map(|r| r.holds)
        }
    };
    let implications = ARROWS
        .iter()
        .map(|&(label, from, to)| {
            let status = match (lookup(from), lookup(to)) {
                (Some(true), Some(false)) => ImplicationStatus::Inconsistent,
                (Some(_), Some(_)) => ImplicationStatus::Consistent,
                _ => ImplicationStatus::NotApplicable,
            };
            Implication { label, from, to, status }
        })
        .collect();
    let flat_basin_separation = lookup(ConditionKind::Wqc) == Some(true)
        && lookup(ConditionKind::PlStar) == Some(false)
        && lookup(ConditionKind::QgStar) == Some(false);
    Ok(ImplicationMatrix {
        reports,
        hcprc,
        implications,
        unconstrained: vec![
            (ConditionKind::QgStar, ConditionKind::Lrsi),
            (ConditionKind::Lrsi, ConditionKind::Wqc),
        ],
        flat_basin_separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::Objective;
    use std::sync::Arc;

    fn circle(q: f64) -> (Landscape, NeighborhoodSpec) {
        let l = Landscape::power_basin(2, MinimaSet::unit_sphere(2), q, 1.0).unwrap();
        let spec = NeighborhoodSpec::new(0.5, MinimaSet::unit_sphere(2)).unwrap();
        (l, spec)
    }

    #[test]
    fn ball_samples_stay_in_ball_and_are_reproducible() {
        let spec = NeighborhoodSpec::new(1.0, MinimaSet::point(vec![0.0, 0.0, 0.0])).unwrap();
        let a = sample_neighborhood(&spec, 100, 7).unwrap();
        assert_eq!(a.len(), 100);
        assert!(a.iter().all(|x| crate::vecops::norm(x) <= 1.0));
        assert_eq!(a, sample_neighborhood(&spec, 100, 7).unwrap());
        assert!(sample_neighborhood(&spec, 0, 7).is_err());
    }

    #[test]
    fn annulus_samples_recheck() {
        let (_, spec) = circle(2.0);
        let pts = sample_neighborhood(&spec, 10_000, 1).unwrap();
        assert!(pts.iter().all(|x| (crate::vecops::norm(x) - 1.0).abs() <= 0.5));
    }

    #[test]
    fn quadratic_circle_lrsi_constant_is_two() {
        let (l, spec) = circle(2.0);
        let r = check_condition(&l, &spec, ConditionKind::Lrsi, 500, 3).unwrap();
        assert!(r.holds);
        assert!((r.best_constant.unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn flat_basin_breaks_pl_and_qg_but_keeps_wqc() {
        let (l, spec) = circle(4.0);
        let pl = check_condition(&l, &spec, ConditionKind::PlStar, 500, 3).unwrap();
        assert!(!pl.holds);
        let w = pl.violation_witness.clone().unwrap();
        assert!(!satisfied_at(&l, ConditionKind::PlStar, &w).unwrap());
        let qg = check_condition(&l, &spec, ConditionKind::QgStar, 500, 3).unwrap();
        assert!(!qg.holds);
        let wqc = check_condition(&l, &spec, ConditionKind::Wqc, 500, 3).unwrap();
        assert!(wqc.holds);
        assert_eq!(wqc.best_constant, Some(1.0));
        let nns = check_condition(&l, &spec, ConditionKind::Nns, 500, 3).unwrap();
        assert!(nns.holds);
    }

    #[test]
    fn single_minimizer_conditions_reject_spheres() {
        let (l, spec) = circle(2.0);
        for kind in [ConditionKind::StarC, ConditionKind::Qc] {
            assert!(matches!(check_condition(&l, &spec, kind, 10, 0), Err(Error::Kind { .. })));
        }
        assert!(matches!(check_condition(&l, &spec, ConditionKind::Hcprc, 10, 0), Err(Error::Kind { .. })));
    }

    #[test]
    fn hessian_rank_on_circle_and_ball() {
        let (l, spec) = circle(2.0);
        let r = check_hcprc_rank(&l, &spec, 1, 20, 5).unwrap();
        assert!(r.holds);
        for sv in &r.singular_values {
            assert!((sv[0] - 2.0).abs() < 1e-4 && sv[1] < 1e-4);
        }
        let (l4, spec4) = circle(4.0);
        let r = check_hcprc_rank(&l4, &spec4, 1, 20, 5).unwrap();
        assert!(!r.holds);
        assert!(r.ranks.iter().all(|&k| k == 0));

        let ball = Landscape::power_basin(3, MinimaSet::point(vec![0.0; 3]), 2.0, 1.0).unwrap();
        let bspec = NeighborhoodSpec::new(1.0, MinimaSet::point(vec![0.0; 3])).unwrap();
        assert!(check_hcprc_rank(&ball, &bspec, 3, 5, 0).unwrap().holds);
    }

    #[test]
    fn isolated_quadratic_has_exact_lipschitz_two() {
        let ball = Landscape::power_basin(3, MinimaSet::point(vec![0.0; 3]), 2.0, 1.0).unwrap();
        let spec = NeighborhoodSpec::new(0.7, MinimaSet::point(vec![0.0; 3])).unwrap();
        let c = estimate_local_constants(&ball, &spec, 0.2, 50, 1).unwrap();
        assert!((c.lipschitz - 2.0).abs() < 1e-9);
        assert!((c.lipschitz_for_bounds() - 2.2).abs() < 1e-9);
        assert!(estimate_local_constants(&ball, &spec, 0.0, 50, 1).is_err());
        assert!(estimate_local_constants(&ball, &spec, 0.1, 1, 1).is_err());
    }

    #[test]
    fn patel_constant_arithmetic() {
        assert_eq!(patel_constant(2.0, 1.0, 0.5), 3.0);
    }

    #[test]
    fn radial_slices_are_quasar_convex() {
        for q in [2.0, 3.0, 4.0, 6.5] {
            let (l, _) = circle(q);
            let zeta = radial_quasar_constant(&l, &[0.0, 1.0], &[0.0, 1.0], 0.5, 200).unwrap();
            assert!((zeta - q).abs() < 1e-9, "q={q} zeta={zeta}");
            assert!(zeta >= 1.0);
        }
    }

    #[derive(Debug)]
    struct Zero;
    impl Objective for Zero {
        fn value(&self, _x: &[f64]) -> f64 {
            0.0
        }
        fn gradient(&self, _x: &[f64], out: &mut [f64]) {
            out.fill(0.0);
        }
        fn support(&self, _x: &[f64]) -> Option<f64> {
            Some(0.0)
        }
    }

    #[test]
    fn constant_landscape_is_consistent() {
        let l = Landscape::custom(2, MinimaSet::unit_sphere(2), 0.0, Arc::new(Zero)).unwrap();
        let spec = NeighborhoodSpec::new(0.5, MinimaSet::unit_sphere(2)).unwrap();
        let m = implication_matrix(&l, &spec, 100, 2).unwrap();
        assert!(m.consistent());
        assert_eq!(m.holds(ConditionKind::Nns), Some(true));
        assert_eq!(m.holds(ConditionKind::Wqc), Some(true));
        assert_eq!(m.holds(ConditionKind::PlStar), Some(true));
    }

    #[test]
    fn quadratic_ball_certifies_everything() {
        let ball = Landscape::power_basin(2, MinimaSet::point(vec![0.0, 0.0]), 2.0, 1.0).unwrap();
        let spec = NeighborhoodSpec::new(1.0, MinimaSet::point(vec![0.0, 0.0])).unwrap();
        let m = implication_matrix(&ball, &spec, 200, 4).unwrap();
        assert!(m.consistent());
        for k in ConditionKind::ALL {
            assert_eq!(m.holds(k), Some(true), "{k}");
        }
    }
}
