//! Power-basin landscapes: values, gradients, finite-difference checks and Hessians.

use sgdlab::{hessian_fd, make_landscape, LandscapeSpec, MinimaSet};

fn main() -> sgdlab::Result<()> {
    for degree in [2.0, 4.0] {
        let spec = LandscapeSpec::PowerBasin {
            dimension: 2,
            degree,
            scale: 1.0,
            minima: MinimaSet::unit_sphere(2),
            validity_radius: None,
        };
        // construction runs the gradient self-check against central differences
        let l = make_landscape(&spec)?;
        let x = [1.4, 0.0];
        let (v, g) = l.oracle_eval(&x)?;
        println!("{l}: f({x:?}) = {v:.6}  grad = {g:.6?}");
        println!("   worst relative gradient error on N_1: {:.2e}", l.self_check(1.0, 100, 1)?);
        let on_set = [0.0, 1.0];
        let h = hessian_fd(&l, &on_set, 1e-4)?;
        println!("   Hessian at {on_set:?}: {:.6}", h);
    }
    Ok(())
}
