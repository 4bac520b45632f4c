//! Metric projection onto sets of minimizers, including where it stops being unique.

use sgdlab::{dist_and_project, MinimaSet};

fn main() -> sgdlab::Result<()> {
    let circle = MinimaSet::unit_sphere(2);
    for x in [[1.5, 0.0], [0.3, -0.4], [0.0, 0.0]] {
        let p = dist_and_project(&x, &circle)?;
        println!(
            "circle   x = {x:?}  dist = {:.6}  x_p = {:?}  unique = {}",
            p.distance, p.projection, p.unique
        );
    }

    // points strictly between x and its projection keep the same projection
    let x = [1.8, 0.6];
    let p = dist_and_project(&x, &circle)?.projection;
    for t in [0.25, 0.5, 0.75] {
        let y: Vec<f64> = p.iter().zip(&x).map(|(pi, xi)| pi + t * (xi - pi)).collect();
        let q = dist_and_project(&y, &circle)?;
        println!("between  t = {t}  y = {y:.4?}  x_p(y) = {:.6?}", q.projection);
    }

    let seg = MinimaSet::segment(vec![-1.0, 0.0], vec![1.0, 0.0]);
    let p = dist_and_project(&[2.0, 1.0], &seg)?;
    println!("segment  x = [2, 1]  dist = {:.6}  x_p = {:?}", p.distance, p.projection);

    // two parallel segments: the midline is equidistant from both
    let pair = MinimaSet::Union {
        parts: vec![
            MinimaSet::segment(vec![-1.0, 1.0], vec![1.0, 1.0]),
            MinimaSet::segment(vec![-1.0, -1.0], vec![1.0, -1.0]),
        ],
    };
    let p = dist_and_project(&[0.3, 0.0], &pair)?;
    println!(
        "union    x = [0.3, 0]  dist = {:.6}  canonical x_p = {:?}  unique = {}",
        p.distance, p.projection, p.unique
    );
    Ok(())
}
