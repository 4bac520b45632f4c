//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each and exits non-zero if any failed.

use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;

use sgdlab::bounds::{check_constant_lr_bound, check_decreasing_lr_bound, compute_cn, BoundInputs, Horizon};
use sgdlab::cli::simulate_to_dir;
use sgdlab::conditions::{check_condition, check_hcprc_rank, estimate_local_constants, sample_neighborhood, ConditionKind};
use sgdlab::montecarlo::{
    concentration_from_runs, fit_rate_slope, simulate, stability_from_runs, Dominance, RateFit, EVENT_MIN_SUPPORT,
};
use sgdlab::rng::{stream, unit_direction};
use sgdlab::sgd::{supermartingale_probe, NoiseModel, Schedule, SgdConfig};
use sgdlab::vecops::dist;
use sgdlab::{Landscape, MinimaSet, NeighborhoodSpec};

const SEED: u64 = 20_240_601;
const RATE_HORIZONS: [usize; 5] = [100, 316, 1000, 3162, 10_000];

type Outcome = Result<String, String>;

fn circle(degree: f64) -> Landscape {
    Landscape::power_basin(2, MinimaSet::unit_sphere(2), degree, 1.0).unwrap()
}

fn annulus() -> NeighborhoodSpec {
    NeighborhoodSpec::new(0.5, MinimaSet::unit_sphere(2)).unwrap()
}

fn bounds_lipschitz(l: &Landscape) -> f64 {
    estimate_local_constants(l, &annulus(), 0.1, 400, SEED).unwrap().lipschitz_for_bounds()
}

struct GridCase {
    schedule: Schedule,
    horizon: usize,
    dist1: f64,
    sigma: f64,
    batch: usize,
}

fn grid() -> Vec<GridCase> {
    let c = |schedule, horizon, dist1, sigma, batch| GridCase {
        schedule,
        horizon,
        dist1,
        sigma,
        batch,
    };
    vec![
        c(Schedule::Constant { a: 0.01 }, 1000, 0.1, 0.3, 1),
        c(Schedule::Constant { a: 0.003 }, 10_000, 0.1, 0.3, 1),
        c(Schedule::Constant { a: 0.01 }, 1000, 0.15, 0.5, 4),
        c(Schedule::Decreasing { a: 0.05, beta: 0.8 }, 2000, 0.3, 0.5, 1),
        c(Schedule::Decreasing { a: 0.1, beta: 0.7 }, 1000, 0.2, 0.4, 1),
        c(Schedule::Decreasing { a: 0.2, beta: 0.9 }, 2000, 0.35, 0.3, 1),
    ]
}

struct GridRun {
    label: String,
    c_n: f64,
    stability: sgdlab::montecarlo::MCResult,
    concentration: Vec<sgdlab::montecarlo::MCResult>,
}

fn run_grid() -> Vec<GridRun> {
    let l = circle(2.0);
    let spec = annulus();
    let lip = bounds_lipschitz(&l);
    grid()
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let sgd = SgdConfig {
                landscape: l.clone(),
                spec: spec.clone(),
                schedule: g.schedule,
                noise: NoiseModel::Gaussian { sigma: g.sigma },
                batch_size: g.batch,
                horizon: g.horizon,
                x1: vec![1.0 + g.dist1, 0.0],
                seed: SEED + i as u64,
            };
            let inputs = BoundInputs {
                dist1: l.distance(&sgd.x1),
                r: spec.radius,
                lipschitz: lip,
                sigma_r: g.sigma * g.sigma * 2.0,
                batch_size: g.batch,
                schedule: g.schedule,
                horizon: Horizon::Finite(g.horizon),
            };
            let runs = simulate(&sgd, 10_000, &[]).unwrap();
            GridRun {
                label: format!("{}, N={}, I={}, sigma={}", g.schedule, g.horizon, g.batch, g.sigma),
                c_n: compute_cn(&inputs).unwrap().c_n,
                stability: stability_from_runs(&runs, &inputs).unwrap(),
                concentration: concentration_from_runs(&runs, &inputs, &[1e-2, 1e-3]).unwrap(),
            }
        })
        .collect()
}

fn criterion_1(grid: &[GridRun], seconds: f64) -> Outcome {
    let mut detail = Vec::new();
    let mut ok = grid.len() >= 5;
    for g in grid {
        let in_range = (0.05..=0.8).contains(&g.c_n);
        let dominated = g.stability.empirical_p >= (1.0 - g.c_n) - g.stability.half_width();
        ok &= in_range && dominated && g.stability.dominated == Dominance::Holds;
        detail.push(format!(
            "[{}] C_N={:.3} p={:.4}{}",
            g.label,
            g.c_n,
            g.stability.empirical_p,
            if in_range && dominated { "" } else { " !" }
        ));
    }
    let msg = format!("{} configs, M=1e4 each in {seconds:.1}s: {}", grid.len(), detail.join("; "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_2(grid: &[GridRun]) -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for g in grid {
        for r in g.concentration.iter().filter(|r| r.event == EVENT_MIN_SUPPORT) {
            let bound = r.theoretical_bound.unwrap();
            if bound >= 1.0 {
                continue;
            }
            checked += 1;
            if r.empirical_p > bound + r.half_width() {
                bad.push(format!("[{}] eps={:?} p={} > {bound}", g.label, r.parameter, r.empirical_p));
            }
        }
    }
    let msg = format!("{checked} non-vacuous (config, eps) cases checked");
    if bad.is_empty() && checked > 0 {
        Ok(msg)
    } else {
        Err(format!("{msg}; violations: {}", bad.join("; ")))
    }
}

fn rate_fit(degree: f64, beta: f64) -> RateFit {
    let l = circle(degree);
    let sgd = SgdConfig {
        spec: annulus(),
        landscape: l,
        schedule: Schedule::Decreasing { a: 0.5, beta },
        noise: NoiseModel::Gaussian { sigma: 0.1 },
        batch_size: 1,
        horizon: 1,
        x1: vec![1.3, 0.0],
        seed: SEED,
    };
    fit_rate_slope(&sgd, 1000, &RATE_HORIZONS).unwrap()
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [0.6, 0.8] {
        let f = rate_fit(2.0, beta);
        let pass = (f.slope + beta).abs() <= 0.15;
        ok &= pass;
        parts.push(format!("beta={beta}: slope {:.3} +- {:.3} (target {:.1})", f.slope, f.stderr, -beta));
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_4() -> Outcome {
    let beta = 0.8;
    let q2 = rate_fit(2.0, beta).slope;
    let q4 = rate_fit(4.0, beta).slope;
    let msg = format!("beta={beta}: q=2 slope {q2:.3}, q=4 slope {q4:.3}, difference {:.3}", q4 - q2);
    if q4 - q2 >= 0.1 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_5() -> Outcome {
    let spec = annulus();
    let flat = circle(4.0);
    let n = 2000;
    let wqc = check_condition(&flat, &spec, ConditionKind::Wqc, n, SEED).unwrap();
    let nns = check_condition(&flat, &spec, ConditionKind::Nns, n, SEED).unwrap();
    let pl = check_condition(&flat, &spec, ConditionKind::PlStar, n, SEED).unwrap();
    let qg = check_condition(&flat, &spec, ConditionKind::QgStar, n, SEED).unwrap();
    let zeta = wqc.best_constant.unwrap_or(0.0);
    let flat_ok = wqc.holds && zeta >= 0.9 && nns.holds && !pl.holds && !qg.holds;

    let quad = circle(2.0);
    let lrsi = check_condition(&quad, &spec, ConditionKind::Lrsi, n, SEED).unwrap();
    let mu = lrsi.best_constant.unwrap_or(0.0);
    let lrsi_ok = lrsi.holds && (mu - 2.0).abs() <= 0.05 * 2.0;
    let rank = check_hcprc_rank(&quad, &spec, 1, 100, SEED).unwrap();
    let rank_ok = rank.holds && rank.ranks.len() == 100 && rank.ranks.iter().all(|&r| r == 1);

    let msg = format!(
        "q=4: WQC {} (zeta {zeta}), NNS {}, PL* {}, QG* {}; q=2: LRSI {} (mu {mu:.6}), HCPRC rank 1 at {}/100 points",
        wqc.holds,
        nns.holds,
        pl.holds,
        qg.holds,
        lrsi.holds,
        rank.ranks.iter().filter(|&&r| r == 1).count()
    );
    if flat_ok && lrsi_ok && rank_ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_6() -> Outcome {
    let sets = [
        MinimaSet::unit_sphere(2),
        MinimaSet::sphere(vec![0.5, -1.0, 2.0], 1.5),
        MinimaSet::point(vec![0.3, 0.7]),
        MinimaSet::segment(vec![-1.0, 0.0, 1.0], vec![2.0, 1.0, -1.0]),
        MinimaSet::segment(vec![0.0, 0.0], vec![1.0, 1.0]),
    ];
    let cases = 10_000;
    let failures: usize = (0..cases as u64)
        .into_par_iter()
        .map(|i| {
            let set = &sets[i as usize % sets.len()];
            let mut rng = stream(SEED, i);
            let d = set.ambient_dim();
            let z = set.sample_point(&mut rng);
            let u = unit_direction(&mut rng, d);
            let t = 2.0 * rng.random::<f64>();
            let x: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a + t * b).collect();
            let px = set.project(&x);
            if !px.unique {
                return 0;
            }
            let lam = rng.random::<f64>();
            let y: Vec<f64> = px.projection.iter().zip(&x).map(|(p, xi)| p + lam * (xi - p)).collect();
            let py = set.project(&y);
            let ok = py.unique && dist(&py.projection, &px.projection) <= 1e-9;
            usize::from(!ok)
        })
        .sum();

    let center = MinimaSet::unit_sphere(3).project(&[0.0, 0.0, 0.0]);
    let two_points = MinimaSet::Union {
        parts: vec![MinimaSet::point(vec![-1.0, 0.0]), MinimaSet::point(vec![1.0, 0.0])],
    }
    .project(&[0.0, 0.7]);
    let parallel = MinimaSet::Union {
        parts: vec![
            MinimaSet::segment(vec![-1.0, 1.0], vec![1.0, 1.0]),
            MinimaSet::segment(vec![-1.0, -1.0], vec![1.0, -1.0]),
        ],
    }
    .project(&[0.4, 0.0]);
    let flagged = !center.unique && !two_points.unique && !parallel.unique;
    let msg = format!(
        "{cases} betweenness cases, {failures} failures; non-unique flags: sphere center {}, point-pair bisector {}, parallel-segment midline {}",
        !center.unique, !two_points.unique, !parallel.unique
    );
    if failures == 0 && flagged {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_7() -> Outcome {
    let l = circle(2.0);
    let spec = annulus();
    let lip = bounds_lipschitz(&l);
    let sigma = 0.1;
    let noise = NoiseModel::Gaussian { sigma };
    let states = sample_neighborhood(&spec, 100, SEED).unwrap();
    let worst = states
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let a_n = 0.05 + 0.25 * (i as f64 / 100.0);
            let p = supermartingale_probe(&l, &spec, x, &noise, 1, a_n, lip, sigma * sigma * 2.0, 100_000, SEED + i as u64).unwrap();
            p.margin / p.stderr
        })
        .reduce(|| f64::INFINITY, f64::min);
    let msg = format!("100 states, m=1e5 each: smallest margin {worst:.2} stderr");
    if worst >= -3.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_8() -> Outcome {
    let base = BoundInputs {
        dist1: 0.1,
        r: 0.5,
        lipschitz: 2.2,
        sigma_r: 0.02,
        batch_size: 1,
        schedule: Schedule::Decreasing { a: 1.0, beta: 0.8 },
        horizon: Horizon::Infinite,
    };
    let mut accepted = 0;
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for beta in [0.55, 0.6, 0.7, 0.8, 0.9, 1.0] {
        for (lip, sigma) in [(0.5, 0.01), (2.2, 0.02), (4.0, 0.1)] {
            let probe = BoundInputs {
                lipschitz: lip,
                sigma_r: sigma,
                schedule: Schedule::Decreasing { a: 1.0, beta },
                ..base
            };
            let max_a = check_decreasing_lr_bound(&probe).unwrap().max_a;
            for frac in [0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999_999] {
                let i = BoundInputs {
                    schedule: Schedule::Decreasing { a: frac * max_a, beta },
                    ..probe
                };
                if !check_decreasing_lr_bound(&i).unwrap().holds {
                    continue;
                }
                accepted += 1;
                let c = compute_cn(&i).unwrap().c_n;
                worst = worst.max(c);
                if !(c < 1.0) {
                    bad.push(format!("beta={beta} a={} C_inf={c}", frac * max_a));
                }
            }
        }
    }
    let radii = [0.3, 0.4, 0.5, 0.6, 0.7];
    let max_as: Vec<f64> = radii
        .iter()
        .map(|&r| check_decreasing_lr_bound(&BoundInputs { r, ..base }).unwrap().max_a)
        .collect();
    let monotone = max_as.windows(2).all(|w| w[1] >= w[0]);
    let msg = format!(
        "{accepted} accepted (a, beta), largest C_inf {worst:.6}; max_a over r={radii:?}: {:?}",
        max_as.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>()
    );
    if bad.is_empty() && monotone && accepted > 0 {
        Ok(msg)
    } else {
        Err(format!("{msg}; violations: {}", bad.join("; ")))
    }
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in [1, 2, 3, 10, 100, 1000, 5000, 10_000] {
        for a in [0.0, 1e-4, 0.001, 0.01, 0.05] {
            for lip in [0.0, 0.5, 2.0, 4.0] {
                for (sigma, batch, dist1) in [(0.0, 1, 0.1), (0.01, 1, 0.0), (0.5, 10, 0.3)] {
                    let i = BoundInputs {
                        dist1,
                        r: 0.5,
                        lipschitz: lip,
                        sigma_r: sigma,
                        batch_size: batch,
                        schedule: Schedule::Constant { a },
                        horizon: Horizon::Finite(n),
                    };
                    let direct = compute_cn(&i).unwrap().c_n;
                    let closed = check_constant_lr_bound(&i).unwrap().lhs / (i.r * i.r);
                    if direct == 0.0 && closed == 0.0 {
                        count += 1;
                        continue;
                    }
                    worst = worst.max((direct - closed).abs() / direct.abs());
                    count += 1;
                }
            }
        }
    }
    let msg = format!("{count} (N, a, L, sigma_r, I, dist1) combinations, worst relative difference {worst:.2e}");
    if worst <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_10() -> Outcome {
    let text = include_str!("../configs/reference.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = simulate_to_dir(text, None, a.path()).map_err(|e| e.to_string())?;
    // second run on a single worker
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let second = pool
        .install(|| simulate_to_dir(text, None, b.path()))
        .map_err(|e| e.to_string())?;
    let mut compared = 0;
    let mut differing = Vec::new();
    for path in first.files.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")) {
        let name = path.file_name().unwrap();
        let x = std::fs::read(path).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        compared += 1;
        if x != y {
            differing.push(name.to_string_lossy().to_string());
        }
    }
    let msg = format!(
        "{compared} CSVs compared between a parallel and a single-worker run; exit code {}",
        first.exit_code()
    );
    if compared == 4 && differing.is_empty() && second.files.len() == first.files.len() {
        Ok(msg)
    } else {
        Err(format!("{msg}; differing: {differing:?}"))
    }
}

fn main() {
    let start = Instant::now();
    let grid = run_grid();
    let grid_seconds = start.elapsed().as_secs_f64();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("stability dominance", Box::new(|| criterion_1(&grid, grid_seconds))),
        ("concentration dominance", Box::new(|| criterion_2(&grid))),
        ("rate exponents", Box::new(criterion_3)),
        ("flat-basin slowdown", Box::new(criterion_4)),
        ("condition classification", Box::new(criterion_5)),
        ("projection betweenness", Box::new(criterion_6)),
        ("one-step supermartingale", Box::new(criterion_7)),
        ("decreasing-rate chain", Box::new(criterion_8)),
        ("constant-rate consistency", Box::new(criterion_9)),
        ("determinism", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, msg) = match f() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {:>2} {tag} {name} ({:.1}s): {msg}", i + 1, t.elapsed().as_secs_f64());
    }
    println!(
        "acceptance: {} of {} passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
