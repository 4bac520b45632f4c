//! One-step check of E[dist(x', X)^2 | x] against its recursive upper bound.

use sgdlab::conditions::{estimate_local_constants, sample_neighborhood};
use sgdlab::sgd::{supermartingale_probe, NoiseModel};
use sgdlab::{Landscape, MinimaSet, NeighborhoodSpec};

fn main() -> sgdlab::Result<()> {
    let l = Landscape::power_basin(2, MinimaSet::unit_sphere(2), 2.0, 1.0)?;
    let spec = NeighborhoodSpec::new(0.5, l.minima().clone())?;
    let lip = estimate_local_constants(&l, &spec, 0.1, 400, 0)?.lipschitz_for_bounds();
    let sigma = 0.1;
    let noise = NoiseModel::Gaussian { sigma };
    let sigma_r = sigma * sigma * 2.0;
    for (i, x) in sample_neighborhood(&spec, 5, 3)?.iter().enumerate() {
        let p = supermartingale_probe(&l, &spec, x, &noise, 1, 0.1, lip, sigma_r, 100_000, i as u64)?;
        println!(
            "x = {x:.4?}  E dist^2 = {:.6e}  bound = {:.6e}  margin = {:.3e} ({:.1} stderr)",
            p.lhs_estimate,
            p.rhs,
            p.margin,
            p.margin / p.stderr
        );
    }
    Ok(())
}
