//! Certifies local convexity conditions on a quadratic and a flat basin around the unit circle.

use sgdlab::conditions::{check_condition, check_hcprc_rank, implication_matrix, ConditionKind};
use sgdlab::{Landscape, MinimaSet, NeighborhoodSpec};

fn main() -> sgdlab::Result<()> {
    let spec = NeighborhoodSpec::new(0.5, MinimaSet::unit_sphere(2))?;
    for degree in [2.0, 4.0] {
        let l = Landscape::power_basin(2, MinimaSet::unit_sphere(2), degree, 1.0)?;
        println!("{l} on N_0.5(circle)");
        let m = implication_matrix(&l, &spec, 2000, 1)?;
        for r in &m.reports {
            println!(
                "   {:<5} {:<5} constant {:?}",
                r.kind.to_string(),
                if r.holds { "holds" } else { "fails" },
                r.best_constant
            );
        }
        let h = check_hcprc_rank(&l, &spec, 1, 100, 1)?;
        println!("   HCPRC {} (ranks seen: {:?})", h.holds, &h.ranks[..5]);
        println!("   implication diagram consistent: {}", m.consistent());
    }

    // a failing condition comes with a point that violates it
    let flat = Landscape::power_basin(2, MinimaSet::unit_sphere(2), 4.0, 1.0)?;
    let pl = check_condition(&flat, &spec, ConditionKind::PlStar, 500, 2)?;
    println!("PL* witness on the flat basin: {:?}", pl.violation_witness);
    Ok(())
}
