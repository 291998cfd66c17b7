//! The lower-tail bound on `q_n = P(agreed action wrong | S = 0)` for a
//! geometric-tail signal family, against a Monte Carlo estimate.
//!
//!     cargo run --release --example unbounded_beliefs

use agreement_lab::bounds::{qn_bound_for_model, EpsGrid};
use agreement_lab::harness::{run_monte_carlo_with, McOptions, Mode};
use agreement_lab::rational::ratio;
use agreement_lab::scenarios::geometric_tail;

fn main() -> agreement_lab::Result<()> {
    let grid = EpsGrid::default();
    println!("{:>6} {:>12} {:>10} {:>10} {:>10}", "n", "q_n (mc)", "stderr", "bound", "eps*");
    for n in [10usize, 22, 46, 100, 215, 464, 1000] {
        let s = geometric_tail(n, 12, ratio(7, 10))?;
        let model = s.marginal_model().expect("i.i.d. family");
        let q = qn_bound_for_model(&model, n, &grid)?;
        let options = McOptions { trials: 50_000, seed: 11, condition: Some(0) };
        let r = run_monte_carlo_with(&s, &Mode::Pooled, &options)?;
        println!("{n:>6} {:>12.4e} {:>10.2e} {:>10.4} {:>10.3e}", r.error_rate(), r.stderr, q.value, q.eps);
    }
    Ok(())
}
