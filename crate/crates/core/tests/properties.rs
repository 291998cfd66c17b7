use agreement_lab::bounds::{qn_bound, state_llr_covariance, theorem2_bounds, EpsGrid};
use agreement_lab::dynamics::{run_protocol, Digraph, ProtocolKind};
use agreement_lab::knowledge::{is_common_knowledge, meet, InformationPartition, OutcomeSpace};
use agreement_lab::rational::ratio;
use agreement_lab::scenarios::{Scenario, Structure};
use agreement_lab::signal::{belief_from_llr, kl_divergence, symmetrized_divergence, LlrValue};
use agreement_lab::{NoiseToSignal, Ratio, SignalModel};
use num_traits::Zero;
use proptest::prelude::*;

fn weights(k: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(1i64..20, k)
}

fn model_strategy() -> impl Strategy<Value = SignalModel> {
    (2usize..=4)
        .prop_flat_map(|k| (weights(k), weights(k)))
        .prop_filter_map("informative", |(w0, w1)| {
            let (t0, t1): (i64, i64) = (w0.iter().sum(), w1.iter().sum());
            let mu0: Vec<Ratio> = w0.iter().map(|&w| ratio(w, t0)).collect();
            let mu1: Vec<Ratio> = w1.iter().map(|&w| ratio(w, t1)).collect();
            if mu0 == mu1 {
                return None;
            }
            let alphabet = (0..mu0.len()).map(|i| format!("x{i}")).collect();
            SignalModel::new(alphabet, mu0, mu1).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn belief_map_is_antisymmetric(z in -40.0f64..40.0) {
        let b = belief_from_llr(LlrValue(z)).value();
        let c = belief_from_llr(LlrValue(-z)).value();
        prop_assert!((b + c - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&b));
    }

    #[test]
    fn divergences_are_positive(m in model_strategy()) {
        prop_assert!(kl_divergence(m.mu1(), m.mu0()).unwrap() > 0.0);
        prop_assert!(kl_divergence(m.mu0(), m.mu1()).unwrap() > 0.0);
        prop_assert!(kl_divergence(m.mu0(), m.mu0()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn relabeling_symbols_changes_nothing(m in model_strategy(), shift in 1usize..4) {
        let k = m.len();
        let perm: Vec<usize> = (0..k).map(|i| (i + shift) % k).collect();
        let p = SignalModel::new(
            perm.iter().map(|&i| m.alphabet()[i].clone()).collect(),
            perm.iter().map(|&i| m.mu0()[i].clone()).collect(),
            perm.iter().map(|&i| m.mu1()[i].clone()).collect(),
        ).unwrap();
        let d = m.noise_to_signal_ratio().unwrap().value();
        prop_assert!((d - p.noise_to_signal_ratio().unwrap().value()).abs() <= 1e-9 * d.max(1.0));
        prop_assert!((symmetrized_divergence(&m) - symmetrized_divergence(&p)).abs() < 1e-12);
    }

    #[test]
    fn swapping_states_keeps_d(m in model_strategy()) {
        let d = m.noise_to_signal_ratio().unwrap().value();
        let s = m.swapped().noise_to_signal_ratio().unwrap().value();
        prop_assert!((d - s).abs() <= 1e-9 * d.max(1.0));
    }

    #[test]
    fn state_llr_covariance_is_quarter_divergence(m in model_strategy()) {
        let cov = state_llr_covariance(&m).unwrap();
        prop_assert!((cov - 0.25 * symmetrized_divergence(&m)).abs() < 1e-12);
    }

    #[test]
    fn posterior_beliefs_average_to_the_prior(m in model_strategy(), n in 1usize..=3) {
        // tower property: E[P(S=1 | F)] = P(S=1) for any information F
        let s = Scenario::new("m", n, Structure::Iid(m)).unwrap();
        let space = OutcomeSpace::build(&s).unwrap();
        for u in 0..n {
            let beliefs = InformationPartition::own_signal(&space, u).beliefs(&space).unwrap();
            let mut mean = Ratio::zero();
            for (i, b) in beliefs.iter().enumerate() {
                mean += (space.weight(0, i) + space.weight(1, i)) * b;
            }
            prop_assert_eq!(mean, ratio(1, 2));
        }
    }

    #[test]
    fn network_fixed_points_agree(m in model_strategy()) {
        let s = Scenario::new("m", 3, Structure::Iid(m)).unwrap();
        let space = OutcomeSpace::build(&s).unwrap();
        let own: Vec<_> = (0..3).map(|u| InformationPartition::own_signal(&space, u)).collect();
        let here = space.profile(0).to_vec();
        let out = run_protocol(&ProtocolKind::NetworkBelief(Digraph::ring(3)).into(), &space, own, &here).unwrap();
        for i in 0..space.len() {
            let b = out.beliefs_at(&space, i).unwrap();
            prop_assert!(b.iter().all(|x| *x == b[0]));
        }
    }

    #[test]
    fn every_public_protocol_ends_in_common_knowledge(m in model_strategy(), which in 0usize..3) {
        let kind = [ProtocolKind::PublicBelief, ProtocolKind::PublicAction, ProtocolKind::PublicStatistic][which].clone();
        let s = Scenario::new("m", 3, Structure::Iid(m)).unwrap();
        let space = OutcomeSpace::build(&s).unwrap();
        let own: Vec<_> = (0..3).map(|u| InformationPartition::own_signal(&space, u)).collect();
        let here = space.profile(0).to_vec();
        let out = run_protocol(&kind.clone().into(), &space, own.clone(), &here).unwrap();
        // partitions only get finer, and the number of refining rounds is bounded
        for (a, b) in out.partitions.iter().zip(&own) {
            prop_assert!(a.refines(b));
        }
        prop_assert!(out.trace.rounds_to_fixed_point <= 3 * space.len());
        match kind {
            ProtocolKind::PublicAction => prop_assert!(out.actions_common_knowledge),
            ProtocolKind::PublicBelief => prop_assert!(out.beliefs_common_knowledge),
            _ => {
                let beliefs: Vec<Vec<Ratio>> = out.partitions.iter().map(|p| p.beliefs(&space).unwrap()).collect();
                let mean: Vec<Ratio> = (0..space.len()).map(|i| beliefs.iter().map(|b| b[i].clone()).sum::<Ratio>() / Ratio::from_integer(3.into())).collect();
                prop_assert!(is_common_knowledge(&out.partitions, &[mean]));
            }
        }
    }

    #[test]
    fn meet_is_coarser_than_every_partition(m in model_strategy()) {
        let s = Scenario::new("m", 2, Structure::Iid(m)).unwrap();
        let space = OutcomeSpace::build(&s).unwrap();
        let parts: Vec<_> = (0..2).map(|u| InformationPartition::own_signal(&space, u)).collect();
        let comp = meet(&parts);
        let as_partition = InformationPartition::from_keys(0, comp.iter().copied());
        for p in &parts {
            prop_assert!(p.refines(&as_partition));
        }
    }

    #[test]
    fn learning_bounds_are_monotone(d in 0.1f64..50.0, n in 1usize..10_000) {
        let a = theorem2_bounds(n, NoiseToSignal(d));
        let b = theorem2_bounds(n + 1, NoiseToSignal(d));
        prop_assert!(b.var_bound < a.var_bound);
        prop_assert!(b.action_bound > a.action_bound);
        prop_assert!(a.var_bound > 0.0 && a.var_bound < 1.0 && a.action_bound < 1.0);
    }

    #[test]
    fn qn_bound_does_not_grow_with_n(c in 0.5f64..4.0, n in 1usize..5000) {
        let grid = EpsGrid::new(1e-4, 0.5, 64).unwrap().values();
        let cdf = |e: f64| (c * e).min(1.0);
        let marg = |e: f64| (c * e).min(1.0);
        let a = qn_bound(n, cdf, marg, &grid).unwrap().value;
        let b = qn_bound(n + 10, cdf, marg, &grid).unwrap().value;
        prop_assert!(b <= a);
    }
}
