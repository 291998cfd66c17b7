//! The learning bounds next to exact values for i.i.d. binary signals: the
//! estimator moments, the variance and action bounds, and the exact error and
//! mean squared belief error of the pooled decision.
//!
//!     cargo run --example bounds

use agreement_lab::bounds::{estimator_moments, theorem2_bounds};
use agreement_lab::harness::exact_iid_pooled;
use agreement_lab::rational::{ratio, to_f64};
use agreement_lab::SignalModel;

fn main() -> agreement_lab::Result<()> {
    let model = SignalModel::symmetric_binary(ratio(2, 3))?;
    let d = model.noise_to_signal_ratio()?;
    println!("accuracy 2/3, D = {:.4}\n", d.value());

    println!("{:>4} {:>10} {:>10} {:>10} {:>10}", "n", "Var(Y-S)", "D/(4n)", "Cov(S,Y)", "Var(Y)");
    for n in [1usize, 2, 5, 10] {
        let m = estimator_moments(&model, n)?;
        println!("{n:>4} {:>10.6} {:>10.6} {:>10.6} {:>10.6}", m.var_y_minus_s, d.value() / (4.0 * n as f64), m.cov_s_y, m.var_y);
    }

    println!("\n{:>5} {:>11} {:>11} {:>11} {:>11}", "n", "msbe", "var bound", "error", "4D/(n+D)");
    for n in [4usize, 8, 16, 32, 64, 128, 256] {
        let law = exact_iid_pooled(&model, n);
        let b = theorem2_bounds(n, d);
        let flag = if b.is_vacuous() { "  (vacuous)" } else { "" };
        println!(
            "{n:>5} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e}{flag}",
            to_f64(&law.msbe),
            b.var_bound,
            to_f64(&law.error()),
            1.0 - b.action_bound
        );
    }
    Ok(())
}
