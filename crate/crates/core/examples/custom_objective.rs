//! A user-defined loss with finite-sum noise.
//!
//! f(x) = (x_1^2 + x_2^2 - 1)^2 / 4 vanishes on the unit circle but is not a
//! power of the distance to it.

use std::sync::Arc;

use sgdlab::conditions::{check_condition, ConditionKind};
use sgdlab::sgd::{run_trajectory, FiniteSum, NoiseModel, Schedule, SgdConfig};
use sgdlab::{Landscape, MinimaSet, NeighborhoodSpec, Objective};

#[derive(Debug)]
struct Quartic;

impl Objective for Quartic {
    fn value(&self, x: &[f64]) -> f64 {
        let s: f64 = x.iter().map(|v| v * v).sum::<f64>() - 1.0;
        0.25 * s * s
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let s: f64 = x.iter().map(|v| v * v).sum::<f64>() - 1.0;
        for (o, v) in out.iter_mut().zip(x) {
            *o = s * v;
        }
    }
}

fn main() -> sgdlab::Result<()> {
    let l = Landscape::custom(2, MinimaSet::unit_sphere(2), 0.0, Arc::new(Quartic))?;
    println!("gradient self-check: {:.2e}", l.self_check(0.5, 100, 0)?);
    let spec = NeighborhoodSpec::new(0.5, l.minima().clone())?;
    for kind in [ConditionKind::Lrsi, ConditionKind::PlStar, ConditionKind::Wqc] {
        let r = check_condition(&l, &spec, kind, 1000, 0)?;
        println!("{kind}: holds {} constant {:?}", r.holds, r.best_constant);
    }
    let noise = NoiseModel::FiniteSum(FiniteSum::shifted(
        &l,
        vec![vec![0.2, 0.0], vec![-0.2, 0.0], vec![0.0, 0.2], vec![0.0, -0.2]],
    )?);
    println!("sigma_r = {}", noise.sigma_r(&l, &spec, 100, 0)?);
    let t = run_trajectory(&SgdConfig {
        landscape: l,
        spec,
        schedule: Schedule::Decreasing { a: 0.2, beta: 0.75 },
        noise,
        batch_size: 2,
        horizon: 2000,
        x1: vec![0.0, 1.4],
        seed: 8,
    })?;
    let last = t.records.last().unwrap();
    println!("after {} iterates: dist {:.2e}, gap {:.2e}, stayed {}", last.n, last.dist, last.gap, t.stayed);
    Ok(())
}
