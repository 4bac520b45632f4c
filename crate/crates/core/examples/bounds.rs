//! Closed-form stability and concentration bounds.

use sgdlab::bounds::{
    check_constant_lr_bound, check_decreasing_lr_bound, compute_cn, concentration_rhs, predicted_rate, BoundInputs, Horizon,
    RateKind,
};
use sgdlab::sgd::Schedule;

fn main() -> sgdlab::Result<()> {
    let inputs = BoundInputs {
        dist1: 0.1,
        r: 0.5,
        lipschitz: 2.0,
        sigma_r: 0.01,
        batch_size: 1,
        schedule: Schedule::Decreasing { a: 0.05, beta: 0.8 },
        horizon: Horizon::Finite(10_000),
    };
    let rep = compute_cn(&inputs)?;
    println!("C_N = {:.12}  stability >= {:.6}", rep.c_n, rep.stability_lower_bound);
    let inf = compute_cn(&inputs.with_horizon(Horizon::Infinite))?;
    println!("C_inf in {:?}", inf.c_n_enclosure.unwrap());
    let d = check_decreasing_lr_bound(&inputs)?;
    println!("decreasing-rate inequality holds: {}  lhs = {:.6}  max_a = {:.8}", d.holds, d.lhs, d.max_a);

    let constant = BoundInputs {
        schedule: Schedule::Constant { a: 0.01 },
        horizon: Horizon::Finite(1000),
        batch_size: 10,
        ..inputs
    };
    let c = check_constant_lr_bound(&constant)?;
    println!(
        "constant rate: lhs / r^2 = {:.12}  C_N = {:.12}",
        c.lhs / 0.25,
        compute_cn(&constant)?.c_n
    );

    for eps in [1e-2, 1e-3] {
        let rhs = concentration_rhs(&inputs, eps)?;
        println!("P(min h > {eps}) <= {:.6} (+ C_N+1 = {:.6})", rhs.leading, rhs.c_next);
    }
    println!(
        "predicted exponents at beta = 0.8: WQC {:.1}, HCPRC/LRSI {:.1}",
        predicted_rate(RateKind::Wqc, 0.8)?,
        predicted_rate(RateKind::HcprcOrLrsi, 0.8)?
    );
    Ok(())
}
