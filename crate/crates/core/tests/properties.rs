use proptest::prelude::*;

use pidm_core::gridworld::{observe, reset, step, TaskName, TaskSpec};
use pidm_core::policies::Algo;
use pidm_core::rng::seeded;
use pidm_core::theory::{
    empirical_efficiency, exact_gap, kmeans, pearson_correlation, predicted_efficiency_ratio, CurvePoint, TabularMdp,
    THRESHOLDS,
};

fn task_name() -> impl Strategy<Value = TaskName> {
    prop_oneof![
        Just(TaskName::FourRoom),
        Just(TaskName::Zigzag),
        Just(TaskName::Maze),
        Just(TaskName::Multiroom),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_mdps_are_stochastic_and_have_a_nonnegative_gap(
        ns in 1usize..9, na in 1usize..5, k in 1usize..4, seed in any::<u64>()
    ) {
        let mdp = TabularMdp::random(ns, na, k, &mut seeded(seed)).unwrap();
        for row in mdp.expert.iter().chain(mdp.transition.iter().flatten()) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for row in mdp.future_kernel().unwrap().iter().flatten() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let g = exact_gap(&mdp).unwrap();
        prop_assert!(g.delta >= -1e-12);
        prop_assert!(g.delta_per_state.iter().all(|d| *d >= -1e-12));
        prop_assert!((g.epe_bc - g.epe_idm - g.delta).abs() < 1e-12);
        prop_assert!((g.delta - g.delta_variance).abs() < 1e-12);
    }

    #[test]
    fn kmeans_is_deterministic_and_monotone(
        pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 5..60),
        k in 1usize..5,
        seed in any::<u64>(),
    ) {
        let a = kmeans(&pts, k, seed).unwrap();
        prop_assert_eq!(&a, &kmeans(&pts, k, seed).unwrap());
        prop_assert!(a.objective.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12));
        prop_assert_eq!(a.centroids.len(), k);
        prop_assert!(a.assignment.iter().all(|c| *c < k));
    }

    #[test]
    fn identical_curves_give_unit_efficiency(means in prop::collection::vec(0.01f64..1.0, 1..8)) {
        let grid = [1usize, 2, 5, 10, 20, 30, 40, 50];
        let curves: Vec<CurvePoint> = Algo::ALL
            .iter()
            .flat_map(|&algo| means.iter().zip(grid).map(move |(&mean, n)| CurvePoint { algo, n, mean, std: 0.0 }))
            .collect();
        let eff = empirical_efficiency(&curves, &THRESHOLDS);
        for row in &eff.rows {
            prop_assert_eq!(row.eta, Some(1.0));
        }
    }

    #[test]
    fn pearson_is_bounded_symmetric_and_affine_invariant(
        xy in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        if let Ok(r) = pearson_correlation(&x, &y) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            prop_assert!((r - pearson_correlation(&y, &x).unwrap()).abs() < 1e-12);
            let x2: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            prop_assert!((r - pearson_correlation(&x2, &y).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn predicted_efficiency_is_at_least_one_without_a_bias_penalty(
        ns in 1usize..6, na in 2usize..4, seed in any::<u64>(), margin in 0.01f64..2.0
    ) {
        let mdp = TabularMdp::random(ns, na, 1, &mut seeded(seed)).unwrap();
        let g = exact_gap(&mdp).unwrap();
        let eta = predicted_efficiency_ratio(&g, g.irreducible_bc + margin, None).unwrap();
        prop_assert!(eta >= 1.0 - 1e-12);
        prop_assert!(predicted_efficiency_ratio(&g, g.irreducible_bc - margin, None).is_err());
    }

    #[test]
    fn environment_keeps_goal_flags_a_prefix(
        name in task_name(),
        seed in any::<u64>(),
        actions in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..80),
    ) {
        let task = TaskSpec::builtin(name);
        let mut rng = seeded(seed);
        let mut s = reset(&task, &mut rng);
        for (ax, ay) in actions {
            if s.is_done(&task) {
                break;
            }
            s = step(&s, [ax, ay], &task, &mut rng).unwrap().0;
            let g = s.current_goal();
            prop_assert!(s.reached[..g].iter().all(|r| *r) && s.reached[g..].iter().all(|r| !*r));
            prop_assert!(task.inside_world(s.agent));
            let o = observe(&s, &task);
            prop_assert_eq!(o.len(), name.obs_dim());
            prop_assert!(o[0] >= 0.0 && o[0] <= 1.0 && o[1] >= 0.0 && o[1] <= 1.0);
        }
    }
}
