//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Oracles are computed here, independently of the library code
//! under test, wherever that is practical.

use std::process::Command;
use std::time::{Duration, Instant};

use agreement_lab::bounds::{
    chebyshev_sum_gaps, conditional_expectation_interval, estimator_moments, qn_bound, qn_bound_for_model, EpsGrid,
};
use agreement_lab::dynamics::{analyze_staged, common_belief_is_pooled, run_protocol, ProtocolKind};
use agreement_lab::harness::{binomial_stderr, exact_iid_pooled, run_monte_carlo, run_monte_carlo_with, McOptions, Mode};
use agreement_lab::knowledge::{belief_calibration, lower_tail, InformationPartition, OutcomeSpace};
use agreement_lab::rational::{ratio, to_f64};
use agreement_lab::scenarios::{geometric_tail, iid_binary, parity, senate, tight_accuracy, uncorrelated_tight, Scenario, Structure};
use agreement_lab::signal::{belief_from_llr, symmetrized_divergence, LlrValue};
use agreement_lab::{Ratio, SignalModel};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn criterion(number: usize, title: &str, limit_secs: u64, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = body();
    let elapsed = start.elapsed();
    let in_time = elapsed <= Duration::from_secs(limit_secs);
    let ok = out.ok && in_time;
    println!(
        "criterion {number} {title}: {} ({:.2}s / {limit_secs}s) {}{}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        out.detail,
        if in_time { "" } else { " [over time limit]" }
    );
    ok
}

fn own_partitions(space: &OutcomeSpace) -> Vec<InformationPartition> {
    (0..space.n()).map(|u| InformationPartition::own_signal(space, u)).collect()
}

fn random_model(rng: &mut ChaCha8Rng, k: usize) -> SignalModel {
    loop {
        let w0: Vec<i64> = (0..k).map(|_| rng.random_range(1..=12)).collect();
        let w1: Vec<i64> = (0..k).map(|_| rng.random_range(1..=12)).collect();
        let (t0, t1): (i64, i64) = (w0.iter().sum(), w1.iter().sum());
        let mu0: Vec<Ratio> = w0.iter().map(|&w| ratio(w, t0)).collect();
        let mu1: Vec<Ratio> = w1.iter().map(|&w| ratio(w, t1)).collect();
        if mu0 == mu1 {
            continue;
        }
        let alphabet = (0..k).map(|i| format!("s{i}")).collect();
        return SignalModel::new(alphabet, mu0, mu1).expect("valid random model");
    }
}

fn iid(name: &str, n: usize, model: SignalModel) -> Scenario {
    Scenario::new(format!("{name}(n={n})"), n, Structure::Iid(model)).unwrap()
}

/// Beliefs announced publicly until nothing changes reproduce the pooled
/// posterior exactly, and are common knowledge.
fn c1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = 0;
    let mut bad = Vec::new();
    for n in 2..=4 {
        let mut scenarios = vec![iid_binary(n, ratio(2, 3)).unwrap()];
        for _ in 0..4 {
            scenarios.push(iid("ternary", n, random_model(&mut rng, 3)));
        }
        for s in scenarios {
            let space = OutcomeSpace::build(&s).unwrap();
            let here = space.profile(0).to_vec();
            let out = run_protocol(&ProtocolKind::PublicBelief.into(), &space, own_partitions(&space), &here).unwrap();
            // oracle: P(S=1 | profile) = prod mu1 / (prod mu1 + prod mu0), from the model directly
            let model = match s.structure() {
                Structure::Iid(m) => m.clone(),
                _ => unreachable!(),
            };
            let mut all_equal = out.beliefs_common_knowledge;
            for i in 0..space.len() {
                let prof = space.profile(i);
                let l1: Ratio = prof.iter().map(|&x| model.mu1()[x as usize].clone()).product();
                let l0: Ratio = prof.iter().map(|&x| model.mu0()[x as usize].clone()).product();
                let pooled = &l1 / (&l1 + &l0);
                let beliefs = out.beliefs_at(&space, i).unwrap();
                all_equal &= beliefs.iter().all(|b| *b == pooled);
            }
            all_equal &= common_belief_is_pooled(&space, &out.partitions).unwrap() == Some(true);
            cases += 1;
            if !all_equal {
                bad.push(s.name().to_string());
            }
        }
    }
    Outcome { ok: bad.is_empty(), detail: format!("{cases} scenarios, mismatches: {bad:?}") }
}

/// Exact error and squared belief error of pooled i.i.d. bits against the
/// learning bounds with D = 8.
fn c2() -> Outcome {
    let model = SignalModel::symmetric_binary(ratio(2, 3)).unwrap();
    let mut ok = true;
    let mut rows = Vec::new();
    for n in [10i64, 20, 50, 100, 200] {
        let law = exact_iid_pooled(&model, n as usize);
        // oracle: pooled majority of n bits; success iff correct bits > n/2
        let mut success = Ratio::zero();
        for k in 0..=n {
            let term = Ratio::from_integer(binom(n, k)) * pow(ratio(2, 3), k) * pow(ratio(1, 3), n - k);
            if 2 * k > n {
                success += term;
            }
        }
        ok &= law.success == success;
        let error = Ratio::one() - &success;
        let err_bound = ratio(32, n + 8);
        let vacuous = err_bound >= Ratio::one();
        if !vacuous {
            ok &= error <= err_bound;
        }
        ok &= law.msbe <= ratio(8, n + 8);
        rows.push(format!(
            "n={n} err={:.4}{} msbe={:.4}<={:.4}",
            to_f64(&error),
            if vacuous { "(vacuous)".to_string() } else { format!("<={:.4}", to_f64(&err_bound)) },
            to_f64(&law.msbe),
            8.0 / (n as f64 + 8.0)
        ));
    }
    Outcome { ok, detail: rows.join("; ") }
}

fn binom(n: i64, k: i64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn pow(x: Ratio, e: i64) -> Ratio {
    (0..e).fold(Ratio::one(), |acc, _| acc * &x)
}

/// Uncorrelated signals whose aggregate error decays only like 1/n.
fn c3() -> Outcome {
    let mut ok = true;
    let mut rows = Vec::new();
    for n in [8usize, 16, 32, 64, 128] {
        let s = uncorrelated_tight(n).unwrap();
        let r = run_monte_carlo(&s, &Mode::Pooled, 100_000, 31 + n as u64).unwrap();
        // oracle: p(n) = 1/2 + 1/2 sqrt(1 - 3/(n-1))
        let p = 0.5 + 0.5 * (1.0 - 3.0 / (n as f64 - 1.0)).sqrt();
        let (p_lib, _) = tight_accuracy(n).unwrap();
        ok &= (to_f64(&p_lib) - p).abs() < 1e-15;
        let expect = 1.0 - p;
        let err = r.error_rate();
        let sigma = binomial_stderr(expect, r.trials);
        ok &= (err - expect).abs() <= 3.0 * sigma;
        let scaled = err * (n as f64 - 1.0);
        if n >= 32 {
            ok &= (0.6..=0.9).contains(&scaled);
        }
        rows.push(format!("n={n} err={err:.5} 1-p={expect:.5} err*(n-1)={scaled:.3}"));
    }
    Outcome { ok, detail: rows.join("; ") }
}

/// Moments of the estimator Y by brute force over all 2^n bit profiles.
fn c4() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut lib_gap: f64 = 0.0;
    for (num, den) in [(3i64, 5i64), (2, 3), (3, 4)] {
        let p = num as f64 / den as f64;
        let l = (p / (1.0 - p)).ln();
        let d = 4.0 * p * (1.0 - p) / (2.0 * p - 1.0).powi(2);
        let (e0, e1) = (-(2.0 * p - 1.0) * l, (2.0 * p - 1.0) * l);
        let model = SignalModel::symmetric_binary(ratio(num, den)).unwrap();
        for n in 1..=10usize {
            let (mut ey, mut ey2, mut esy, mut err2) = (0.0, 0.0, 0.0, 0.0);
            for mask in 0u32..(1 << n) {
                let ones = mask.count_ones() as usize;
                let z_sum = l * ones as f64 - l * (n - ones) as f64;
                let y = (z_sum / n as f64 - e0) / (e1 - e0);
                for s in 0..2 {
                    let q = if s == 1 { p } else { 1.0 - p };
                    let w = 0.5 * q.powi(ones as i32) * (1.0 - q).powi((n - ones) as i32);
                    ey += w * y;
                    ey2 += w * y * y;
                    esy += w * s as f64 * y;
                    err2 += w * (y - s as f64).powi(2);
                }
            }
            let var_y = ey2 - ey * ey;
            let cov = esy - 0.5 * ey;
            worst = worst
                .max((err2 - d / (4.0 * n as f64)).abs())
                .max((cov - 0.25).abs())
                .max((var_y - 0.25 * (1.0 + d / n as f64)).abs());
            let m = estimator_moments(&model, n).unwrap();
            lib_gap = lib_gap
                .max((m.var_y_minus_s - err2).abs())
                .max((m.cov_s_y - cov).abs())
                .max((m.var_y - var_y).abs())
                .max((m.d - d).abs());
        }
    }
    Outcome {
        ok: worst <= 1e-10 && lib_gap <= 1e-10,
        detail: format!("max identity deviation {worst:.2e}, library vs brute force {lib_gap:.2e}"),
    }
}

/// Lemmas on single signals, calibration, lower tails and the two
/// Chebyshev-type inequalities.
fn c5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut notes = Vec::new();
    let mut ok = true;

    // Cov(S, z) = (KL(mu1||mu0) + KL(mu0||mu1)) / 4
    let mut cov_gap: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.random_range(2..=6);
        let m = random_model(&mut rng, k);
        let mu0: Vec<f64> = m.mu0().iter().map(to_f64).collect();
        let mu1: Vec<f64> = m.mu1().iter().map(to_f64).collect();
        let z: Vec<f64> = mu0.iter().zip(&mu1).map(|(a, b)| (b / a).ln()).collect();
        let ez: f64 = (0..k).map(|i| 0.5 * (mu0[i] + mu1[i]) * z[i]).sum();
        let esz: f64 = (0..k).map(|i| 0.5 * mu1[i] * z[i]).sum();
        let cov = esz - 0.5 * ez;
        let kl10: f64 = (0..k).map(|i| mu1[i] * (mu1[i] / mu0[i]).ln()).sum();
        let kl01: f64 = (0..k).map(|i| mu0[i] * (mu0[i] / mu1[i]).ln()).sum();
        cov_gap = cov_gap.max((cov - 0.25 * (kl10 + kl01)).abs());
        cov_gap = cov_gap.max((0.25 * symmetrized_divergence(&m) - 0.25 * (kl10 + kl01)).abs());
    }
    ok &= cov_gap <= 1e-12;
    notes.push(format!("cov gap {cov_gap:.1e}"));

    // calibration and lower tails, exact
    let mut calibrated = true;
    let mut tails = 0;
    for _ in 0..30 {
        let k = rng.random_range(2..=4);
        let n = rng.random_range(1..=3);
        let model = random_model(&mut rng, k);
        let s = iid("random", n, model.clone());
        let space = OutcomeSpace::build(&s).unwrap();
        for row in belief_calibration(&space, 0).unwrap() {
            calibrated &= row.state_one == row.belief;
        }
        // oracle: group profiles by the private belief of agent 0 computed from the model
        let private = |x: u16| &model.mu1()[x as usize] / (&model.mu0()[x as usize] + &model.mu1()[x as usize]);
        let mut groups: std::collections::BTreeMap<Ratio, (Ratio, Ratio)> = Default::default();
        for i in 0..space.len() {
            let e = groups.entry(private(space.profile(i)[0])).or_insert((Ratio::zero(), Ratio::zero()));
            e.0 += space.weight(1, i);
            e.1 += space.weight(0, i) + space.weight(1, i);
        }
        for (b, (w1, total)) in groups {
            calibrated &= w1 / total == b;
        }
        for eps in [ratio(1, 10), ratio(1, 5), ratio(1, 3), ratio(1, 2), ratio(2, 3)] {
            if let Some((_, p0)) = lower_tail(&space, 0, &eps).unwrap() {
                calibrated &= p0 > Ratio::one() - &eps;
                tails += 1;
            }
        }
    }
    ok &= calibrated;
    notes.push(format!("calibration+tails ok={calibrated} ({tails} nonnull tails)"));

    // conditional Chebyshev interval
    let mut contained = 0;
    for _ in 0..1000 {
        let k = rng.random_range(2..=8);
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let z: Vec<f64> = (0..k).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mut a: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
        if !a.iter().any(|&x| x) {
            a[0] = true;
        }
        let mean: f64 = (0..k).map(|i| p[i] * z[i]).sum();
        let var: f64 = (0..k).map(|i| p[i] * (z[i] - mean).powi(2)).sum();
        let pa: f64 = (0..k).filter(|&i| a[i]).map(|i| p[i]).sum();
        let cond: f64 = (0..k).filter(|&i| a[i]).map(|i| p[i] * z[i]).sum::<f64>() / pa;
        if conditional_expectation_interval(mean, var, pa).unwrap().contains(cond) {
            contained += 1;
        }
    }
    ok &= contained == 1000;
    notes.push(format!("interval {contained}/1000"));

    // E[Z g(Z) | X] >= E[g(Z) | X] E[Z | X], equality iff Z constant given X
    let mut sums_ok = 0;
    for _ in 0..200 {
        let classes = rng.random_range(1..=4);
        let rows: Vec<(usize, f64, f64)> = (0..rng.random_range(2..=10))
            .map(|_| (rng.random_range(0..classes), rng.random_range(-6..=6) as f64 * 0.5, rng.random_range(0.01..1.0)))
            .collect();
        let g = |z: f64| belief_from_llr(LlrValue(z)).value();
        let gaps = chebyshev_sum_gaps(&rows, g);
        if gaps.iter().all(|&(_, gap, constant)| if constant { gap.abs() < 1e-12 } else { gap > 1e-12 }) {
            sums_ok += 1;
        }
    }
    ok &= sums_ok == 200;
    notes.push(format!("sum inequality {sums_ok}/200"));
    Outcome { ok, detail: notes.join("; ") }
}

/// Parity: nobody ever learns anything, although the pooled signals reveal S.
fn c6() -> Outcome {
    let mut ok = true;
    let mut rows = Vec::new();
    for n in 2..=6usize {
        let s = parity(n).unwrap();
        let space = OutcomeSpace::build(&s).unwrap();
        let here = space.profile(0).to_vec();
        let out = run_protocol(&ProtocolKind::PublicBelief.into(), &space, own_partitions(&space), &here).unwrap();
        let half = ratio(1, 2);
        let mut all_half = out.trace.rounds_to_fixed_point == 0 && out.beliefs_common_knowledge;
        for i in 0..space.len() {
            all_half &= out.beliefs_at(&space, i).unwrap().iter().all(|b| *b == half);
        }
        // oracle: the pooled posterior is the parity of the bits
        let deterministic = (0..space.len()).all(|i| {
            let parity = space.profile(i).iter().map(|&b| b as u32).sum::<u32>() % 2;
            space.pooled_posterior(space.profile(i)).unwrap() == Ratio::from_integer(BigInt::from(parity))
        });
        let r = run_monte_carlo(&s, &Mode::Protocol(ProtocolKind::PublicBelief), 20_000, 60 + n as u64).unwrap();
        let acc = r.action_accuracy();
        let within = (acc - 0.5).abs() <= 3.0 * binomial_stderr(0.5, r.trials);
        ok &= all_half && deterministic && within;
        rows.push(format!("n={n} rounds={} acc={acc:.4} pooled-deterministic={deterministic}", out.trace.rounds_to_fixed_point));
    }
    Outcome { ok, detail: rows.join("; ") }
}

/// Senate: followers copy the senate's announced action, so the error is the
/// senate's own error whatever the population size.
fn c7() -> Outcome {
    // oracle: P(at most 50 of 100 senators correct), each correct w.p. 2/3
    let mut tail = Ratio::zero();
    for k in 0..=50 {
        tail += Ratio::from_integer(binom(100, k)) * pow(ratio(2, 3), k) * pow(ratio(1, 3), 100 - k);
    }
    let mut ok = true;
    let mut errors = Vec::new();
    for n in [200usize, 400, 800] {
        let a = analyze_staged(&senate(n, 100, ratio(2, 3)).unwrap(), &ProtocolKind::PublicAction).unwrap();
        ok &= a.agrees_off_ties() && a.rounds_to_fixed_point == 1;
        ok &= a.outcome.error() == tail;
        errors.push(a.outcome.error());
    }
    ok &= errors.windows(2).all(|w| w[0] == w[1]);
    Outcome {
        ok,
        detail: format!(
            "error={:.6e} at n=200,400,800 (exact tail {:.6e}); common action sets off the 50-50 tie event",
            to_f64(&errors[0]),
            to_f64(&tail)
        ),
    }
}

/// Unbounded-looking beliefs: q_n falls with n and stays under its bound.
fn c8() -> Outcome {
    let (k, rho) = (12u32, 0.7f64);
    let ns = [10usize, 22, 46, 100, 215, 464, 1000];
    // oracle cdf of the private belief given S=0
    let z: f64 = (1..=k).map(|j| rho.powi(j as i32) + rho.powi(2 * j as i32)).sum();
    let cdf0 = |eps: f64| -> f64 {
        (1..=k as i32)
            .map(|j| {
                let low = rho.powi(j) / (1.0 + rho.powi(j));
                let high = 1.0 / (1.0 + rho.powi(j));
                let mut t = 0.0;
                if low < eps {
                    t += rho.powi(j) / z;
                }
                if high < eps {
                    t += rho.powi(2 * j) / z;
                }
                t
            })
            .sum()
    };
    let cdf_marg = |eps: f64| -> f64 {
        // mirrored law under S=1
        let cdf1: f64 = (1..=k as i32)
            .map(|j| {
                let low = rho.powi(j) / (1.0 + rho.powi(j));
                let high = 1.0 / (1.0 + rho.powi(j));
                let mut t = 0.0;
                if low < eps {
                    t += rho.powi(2 * j) / z;
                }
                if high < eps {
                    t += rho.powi(j) / z;
                }
                t
            })
            .sum();
        0.5 * (cdf0(eps) + cdf1)
    };
    let grid = EpsGrid::default();
    let mut ok = true;
    let mut rows = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &n in &ns {
        let s = geometric_tail(n, k, ratio(7, 10)).unwrap();
        let bound = qn_bound(n, cdf0, cdf_marg, &grid.values()).unwrap();
        let lib = qn_bound_for_model(&s.marginal_model().unwrap(), n, &grid).unwrap();
        ok &= (bound.value - lib.value).abs() < 1e-9;
        let r = run_monte_carlo_with(&s, &Mode::Pooled, &McOptions { trials: 50_000, seed: 800 + n as u64, condition: Some(0) }).unwrap();
        let q = r.error_rate();
        let sigma = binomial_stderr(q, r.trials);
        ok &= q <= bound.value + 3.0 * sigma;
        if let Some((pq, ps)) = prev {
            ok &= q <= pq + 3.0 * (sigma * sigma + ps * ps).sqrt();
        }
        prev = Some((q, sigma));
        rows.push(format!("n={n} q={q:.5} bound={:.4}", bound.value));
    }
    Outcome { ok, detail: rows.join("; ") }
}

/// The same sweep twice gives byte-identical CSV.
fn c9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{"scenario": "iid_binary", "params": {"p": "2/3"}, "protocol": "pooled", "n": [10, 20, 50, 100, 200], "trials": 20000, "seed": 12345, "format": "csv"}"#,
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_agreement-lab"))
            .args(["--config", cfg.to_str().unwrap(), "sweep", "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        (status.success(), std::fs::read(out).unwrap_or_default())
    };
    let (ok_a, a) = run("a.csv");
    let (ok_b, b) = run("b.csv");
    let header_ok = a.starts_with(b"n,trials,successes,ties,failures,success_rate,stderr,msbe,D,var_bound,action_bound,qn_bound,seed\n");
    Outcome {
        ok: ok_a && ok_b && !a.is_empty() && a == b && header_ok && !a.contains(&b'\r'),
        detail: format!("{} bytes, identical={}", a.len(), a == b),
    }
}

fn main() {
    let results = [
        criterion(1, "agreement equals pooled posterior", 10, c1),
        criterion(2, "i.i.d. learning bound, exact", 5, c2),
        criterion(3, "uncorrelated signals, tight rate", 60, c3),
        criterion(4, "estimator identities", 5, c4),
        criterion(5, "lemma suite", 20, c5),
        criterion(6, "parity non-learning", 10, c6),
        criterion(7, "senate non-learning", 30, c7),
        criterion(8, "lower-tail trend and q_n bound", 120, c8),
        criterion(9, "sweep determinism", 60, c9),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
