//! Log-log decay of the mean gap: quadratic basin against a flat one.

use sgdlab::bounds::{predicted_rate, RateKind};
use sgdlab::montecarlo::fit_rate_slope;
use sgdlab::sgd::{NoiseModel, Schedule, SgdConfig};
use sgdlab::{Landscape, MinimaSet, NeighborhoodSpec};

fn main() -> sgdlab::Result<()> {
    let horizons = [100, 316, 1000, 3162, 10_000];
    for beta in [0.6, 0.8] {
        for degree in [2.0, 4.0] {
            let l = Landscape::power_basin(2, MinimaSet::unit_sphere(2), degree, 1.0)?;
            let sgd = SgdConfig {
                spec: NeighborhoodSpec::new(0.5, l.minima().clone())?,
                landscape: l,
                schedule: Schedule::Decreasing { a: 0.5, beta },
                noise: NoiseModel::Gaussian { sigma: 0.1 },
                batch_size: 1,
                horizon: 1,
                x1: vec![1.3, 0.0],
                seed: 5,
            };
            let fit = fit_rate_slope(&sgd, 1000, &horizons)?;
            println!(
                "beta = {beta}, q = {degree}: slope {:.3} +- {:.3}  (quadratic prediction {:.1})",
                fit.slope,
                fit.stderr,
                -predicted_rate(RateKind::HcprcOrLrsi, beta)?
            );
        }
    }
    Ok(())
}
