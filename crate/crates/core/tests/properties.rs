use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vaxtender::analysis::cosine_similarity;
use vaxtender::bnb::{solve_milp, SolveParams};
use vaxtender::exec;
use vaxtender::forecast::ses_forecast;
use vaxtender::instance::{instance_from_json, instance_to_json};
use vaxtender::lp::{solve_lp, LpStatus};
use vaxtender::model::mps::{export_mps, parse_mps};
use vaxtender::model::{build_model, BuildOptions, Sense};
use vaxtender_oracles::instances::{random_instance, TINY_SHAPES};
use vaxtender_oracles::vertex::{vertex_optimum, DenseLp};

fn vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, 1..12)
}

/// LP around a known interior point, so it is always feasible and bounded.
fn feasible_lp(seed: u64) -> (DenseLp, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=5);
    let m = rng.gen_range(0..=5);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
    let lower = x0.iter().map(|v| v - rng.gen_range(0..=3) as f64).collect();
    let upper = x0.iter().map(|v| v + rng.gen_range(0..=3) as f64).collect();
    let rows = (0..m)
        .map(|_| {
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-4..=4) as f64).collect();
            let act: f64 = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
            match rng.gen_range(0..3) {
                0 => (a, Sense::Le, act + rng.gen_range(0..=3) as f64),
                1 => (a, Sense::Ge, act - rng.gen_range(0..=3) as f64),
                _ => (a, Sense::Eq, act),
            }
        })
        .collect();
    let cost = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
    (DenseLp { cost, rows, lower, upper }, x0)
}

proptest! {
    #[test]
    fn cosine_is_symmetric_bounded_and_scale_free(u in vector(), seed in any::<u64>(), k in 0.01..50.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = u.iter().map(|_| rng.gen_range(-100.0..100.0)).collect();
        prop_assume!(u.iter().any(|&x| x != 0.0) && v.iter().any(|&x| x != 0.0));
        let c = cosine_similarity(&u, &v).unwrap();
        prop_assert!((-1.0..=1.0).contains(&c));
        prop_assert_eq!(c, cosine_similarity(&v, &u).unwrap());
        let scaled: Vec<f64> = u.iter().map(|x| x * k).collect();
        assert_relative_eq!(cosine_similarity(&scaled, &v).unwrap(), c, epsilon = 1e-12);
        prop_assert_eq!(cosine_similarity(&u, &u).unwrap(), 1.0);
    }

    #[test]
    fn ses_levels_stay_within_observed_range(obs in prop::collection::vec(0.0..1e6f64, 1..30), alpha in 0.01..=1.0f64, h in 0usize..8) {
        let f = ses_forecast(&obs, alpha, h, None).unwrap();
        let lo = obs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = obs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for &l in &f.levels {
            prop_assert!(l >= lo * (1.0 - 1e-12) && l <= hi * (1.0 + 1e-12));
        }
        prop_assert!(f.forecast.iter().all(|&v| v == *f.levels.last().unwrap()));
    }

    #[test]
    fn lp_optimum_is_feasible_and_beats_the_seed_point(seed in any::<u64>()) {
        let (lp, x0) = feasible_lp(seed);
        let sol = solve_lp(&lp.to_model()).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        prop_assert!(lp.feasible(&sol.x, 1e-9));
        let z0: f64 = lp.cost.iter().zip(&x0).map(|(c, x)| c * x).sum();
        prop_assert!(sol.objective <= z0 + 1e-9 * z0.abs().max(1.0));
        let (z, _) = vertex_optimum(&lp).unwrap();
        prop_assert!((sol.objective - z).abs() <= 1e-9 * z.abs().max(1.0), "{} vs {}", sol.objective, z);
    }

    #[test]
    fn instance_json_round_trips(seed in 0u64..1000, shape in 0usize..TINY_SHAPES.len()) {
        let mut inst = random_instance(seed, TINY_SHAPES[shape]);
        let text = serde_json::to_string(&instance_to_json(&inst)).unwrap();
        // Entries for producers that do not make the vaccine are not stored.
        for v in 0..inst.vaccines.len() {
            for p in 0..inst.producers.len() {
                if !inst.vaccine_producers[v].contains(&p) {
                    inst.roi[v][p] = 0.0;
                    inst.setup_cost[v][p].fill(0.0);
                    inst.reservation_price[v][p].fill(0.0);
                }
            }
        }
        prop_assert_eq!(instance_from_json(&text).unwrap(), inst);
    }

    #[test]
    fn built_models_round_trip_through_mps(seed in 0u64..1000, shape in 0usize..TINY_SHAPES.len(), strict in any::<bool>()) {
        let inst = random_instance(seed, TINY_SHAPES[shape]);
        let model = build_model(&inst, BuildOptions { strict_coverage: strict }).unwrap();
        let back = parse_mps(&export_mps(&model).unwrap()).unwrap();
        prop_assert_eq!(&back.rows, &model.rows);
        prop_assert_eq!(&back.objective, &model.objective);
    }

    #[test]
    fn binary_columns_have_unit_bounds_and_costs_are_discounted(seed in 0u64..1000, shape in 0usize..TINY_SHAPES.len()) {
        let inst = random_instance(seed, TINY_SHAPES[shape]);
        let model = build_model(&inst, BuildOptions::default()).unwrap();
        for c in model.columns.iter().filter(|c| c.is_binary()) {
            prop_assert_eq!((c.lower, c.upper), (0.0, 1.0));
        }
        let mut undiscounted = inst.clone();
        undiscounted.discount = 1.0;
        let plain = build_model(&undiscounted, BuildOptions::default()).unwrap();
        let (a, b) = (model.cost_vector(), plain.cost_vector());
        for (j, key) in model.var_index.iter() {
            let t = match *key {
                vaxtender::model::VarKey::Tender { t, .. } => t,
                vaxtender::model::VarKey::Delivery { t, .. }
                | vaxtender::model::VarKey::Inventory { t, .. }
                | vaxtender::model::VarKey::Unvaccinated { t, .. }
                | vaxtender::model::VarKey::Extend { t, .. } => t,
                _ => { prop_assert_eq!(a[j], 0.0); continue; }
            };
            assert_relative_eq!(a[j], inst.discount.powi(t as i32) * b[j], max_relative = 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn search_does_not_depend_on_thread_count(seed in 0u64..500, shape in 0usize..TINY_SHAPES.len()) {
        let model = build_model(&random_instance(seed, TINY_SHAPES[shape]), BuildOptions::default()).unwrap();
        let params = SolveParams::default();
        let one = exec::with_threads(1, || solve_milp(&model, &params).unwrap());
        let four = exec::with_threads(4, || solve_milp(&model, &params).unwrap());
        prop_assert_eq!(one.status, four.status);
        prop_assert_eq!(one.nodes, four.nodes);
        prop_assert_eq!(one.objective.to_bits(), four.objective.to_bits());
        prop_assert_eq!(&one.x, &four.x);
    }
}
