//! Monte Carlo stay-probability against the lower bound 1 - C_N.

use sgdlab::bounds::{BoundInputs, Horizon};
use sgdlab::conditions::estimate_local_constants;
use sgdlab::montecarlo::{estimate_stability, ExperimentConfig};
use sgdlab::sgd::{NoiseModel, Schedule, SgdConfig};
use sgdlab::{Landscape, MinimaSet, NeighborhoodSpec};

fn main() -> sgdlab::Result<()> {
    let l = Landscape::power_basin(2, MinimaSet::unit_sphere(2), 2.0, 1.0)?;
    let spec = NeighborhoodSpec::new(0.5, l.minima().clone())?;
    let lip = estimate_local_constants(&l, &spec, 0.1, 400, 0)?.lipschitz_for_bounds();
    for (schedule, horizon, dist1, sigma) in [
        (Schedule::Constant { a: 0.01 }, 1000, 0.1, 0.3),
        (Schedule::Decreasing { a: 0.1, beta: 0.7 }, 1000, 0.2, 0.4),
        (Schedule::Decreasing { a: 0.2, beta: 0.9 }, 2000, 0.35, 0.3),
    ] {
        let sgd = SgdConfig {
            landscape: l.clone(),
            spec: spec.clone(),
            schedule,
            noise: NoiseModel::Gaussian { sigma },
            batch_size: 1,
            horizon,
            x1: vec![1.0 + dist1, 0.0],
            seed: 42,
        };
        let bound_inputs = BoundInputs {
            dist1,
            r: 0.5,
            lipschitz: lip,
            sigma_r: sigma * sigma * 2.0,
            batch_size: 1,
            schedule,
            horizon: Horizon::Finite(horizon),
        };
        let cfg = ExperimentConfig {
            sgd,
            trials: 10_000,
            epsilon_grid: vec![],
            bound_inputs,
            config_hash: String::new(),
        };
        let r = estimate_stability(&cfg)?;
        println!(
            "{schedule}, N = {horizon}: stayed {:.4} [{:.4}, {:.4}]  bound {:.4}  dominated {}",
            r.empirical_p,
            r.ci_low,
            r.ci_high,
            r.theoretical_bound.unwrap(),
            r.dominated
        );
    }
    Ok(())
}
