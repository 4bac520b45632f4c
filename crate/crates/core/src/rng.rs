//! Deterministic random streams.
//!
//! One master seed per experiment. Each trajectory (or sample index) gets its
//! own ChaCha stream selected by index, so results never depend on how work is
//! split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream `index` of the generator keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Unit vector uniformly distributed on the sphere S^{d-1}.
pub fn unit_direction(rng: &mut Rng, dim: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = crate::vecops::norm(&v);
        if n > 1e-300 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}
