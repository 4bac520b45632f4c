//! One SGD run with stopped-process bookkeeping, written as CSV to stdout.

use sgdlab::sgd::{run_trajectory, write_trajectory_csv, NoiseModel, Schedule, SgdConfig};
use sgdlab::{Landscape, MinimaSet, NeighborhoodSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let l = Landscape::power_basin(2, MinimaSet::unit_sphere(2), 2.0, 1.0)?;
    let cfg = SgdConfig {
        spec: NeighborhoodSpec::new(0.5, l.minima().clone())?,
        landscape: l,
        schedule: Schedule::Decreasing { a: 0.3, beta: 0.7 },
        noise: NoiseModel::Gaussian { sigma: 0.2 },
        batch_size: 4,
        horizon: 20,
        x1: vec![1.3, 0.2],
        seed: 1,
    };
    let t = run_trajectory(&cfg)?;
    eprintln!("exit time {:?}, stayed {}", t.exit_time, t.stayed);
    write_trajectory_csv(&t, std::io::stdout())?;
    Ok(())
}
