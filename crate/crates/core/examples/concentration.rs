//! Frequency of min_n h(x_n) > eps against its explicit bound.

use sgdlab::bounds::{BoundInputs, Horizon};
use sgdlab::montecarlo::{estimate_concentration, ExperimentConfig};
use sgdlab::sgd::{NoiseModel, Schedule, SgdConfig};
use sgdlab::{Landscape, MinimaSet, NeighborhoodSpec};

fn main() -> sgdlab::Result<()> {
    let l = Landscape::power_basin(2, MinimaSet::unit_sphere(2), 2.0, 1.0)?;
    let spec = NeighborhoodSpec::new(0.5, l.minima().clone())?;
    let schedule = Schedule::Constant { a: 0.003 };
    let sigma = 0.3;
    let horizon = 10_000;
    let cfg = ExperimentConfig {
        sgd: SgdConfig {
            landscape: l,
            spec,
            schedule,
            noise: NoiseModel::Gaussian { sigma },
            batch_size: 1,
            horizon,
            x1: vec![1.1, 0.0],
            seed: 3,
        },
        trials: 2000,
        epsilon_grid: vec![1e-2, 1e-3, 1e-4],
        bound_inputs: BoundInputs {
            dist1: 0.1,
            r: 0.5,
            lipschitz: 2.2,
            sigma_r: sigma * sigma * 2.0,
            batch_size: 1,
            schedule,
            horizon: Horizon::Finite(horizon),
        },
        config_hash: String::new(),
    };
    for r in estimate_concentration(&cfg)? {
        println!(
            "{:<20} eps = {:e}: {:.4} [{:.4}, {:.4}]  bound {:?}  dominated {}",
            r.event,
            r.parameter.unwrap(),
            r.empirical_p,
            r.ci_low,
            r.ci_high,
            r.theoretical_bound,
            r.dominated
        );
    }
    Ok(())
}
