mod common;

use dsop_core::instances::{generate_oracle_instance, generate_synthetic, GeneratorConfig, OracleConfig};
use dsop_core::probability::{MatrixPropagator, PathEdit, PrefixProductCache, Propagator, SamplingPropagator};
use dsop_core::solver::{self, evaluate_insertion, Solver};
use dsop_core::{
    is_feasible, Algorithm, DsopError, Estimator, InsertionMetric, Instance, PruneRule, SearchConfig, SolveRequest,
    VertexId,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_force_best, complete_points, discrete, ids, instance, point};

fn matrix_config() -> SearchConfig {
    SearchConfig::default().with_estimator(Estimator::Matrix)
}

/// v1 reward 10 costs a quarter of the on-time mass, v2 reward 9 is free.
fn lossy_and_free() -> Instance {
    let mut edges = vec![discrete(0, 1, &[(1.0, 0.75), (10.0, 0.25)])];
    for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3), (2, 1), (2, 3)] {
        edges.push(point(i, j, 1.0));
    }
    instance(&[0.0, 10.0, 9.0, 0.0], edges)
}

#[test]
fn lossless_candidate_beats_the_bigger_reward() {
    let inst = lossy_and_free();
    let req = SolveRequest::new(5.0, 0.3, 0.0).unwrap();
    let cfg = matrix_config();
    let prop = MatrixPropagator::new(&inst, &req, &cfg).unwrap();
    let solver = Solver::new(&prop, req, cfg).unwrap();
    let cache = solver.start_cache().unwrap();

    let v1 = evaluate_insertion(&prop, &cache, VertexId(1), 1);
    let v2 = evaluate_insertion(&prop, &cache, VertexId(2), 1);
    assert!((v1.delta_prob - 0.25).abs() < 1e-12);
    assert!((v1.score(InsertionMetric::RatioRP) - 8.0).abs() < 1e-9);
    assert_eq!(v2.score(InsertionMetric::RatioRP), 9.0);

    let first = solver.best_insertion(&cache, InsertionMetric::RatioRP).unwrap();
    assert_eq!((first.vertex, first.position), (VertexId(2), 1));
    // v1 then fits losslessly after v2
    let path = solver.construction_heuristic(InsertionMetric::RatioRP).unwrap().path;
    assert_eq!(path.vertices(), &ids(&[0, 2, 1, 3])[..]);
}

#[test]
fn construction_stops_at_the_direct_path_when_nothing_fits() {
    let inst = complete_points(&[0.0, 5.0, 7.0, 0.0], |i, j| if i == 0 && j == 3 { 1.0 } else { 3.0 });
    let req = SolveRequest::new(4.0, 0.1, 0.0).unwrap();
    let path = solver::construction_heuristic(&inst, &req, &matrix_config(), InsertionMetric::RatioRP).unwrap();
    assert_eq!(path.vertices(), &ids(&[0, 3])[..]);
}

#[test]
fn construction_takes_the_only_candidate() {
    let inst = complete_points(&[0.0, 5.0, 0.0], |_, _| 1.0);
    let req = SolveRequest::new(4.0, 0.1, 0.0).unwrap();
    for estimator in [Estimator::Matrix, Estimator::Sampling] {
        let cfg = SearchConfig::default().with_estimator(estimator);
        let path = solver::construction_heuristic(&inst, &req, &cfg, InsertionMetric::RatioRP).unwrap();
        assert_eq!(path.vertices(), &ids(&[0, 1, 2])[..]);
    }
}

#[test]
fn infeasible_direct_path_is_reported() {
    let inst = complete_points(&[0.0, 5.0, 0.0], |_, _| 3.0);
    let req = SolveRequest::new(2.0, 0.1, 0.0).unwrap();
    for algo in [
        Algorithm::Construction,
        Algorithm::LocalSearch,
        Algorithm::BranchAndBound,
    ] {
        let err = solver::solve(&inst, &req, &matrix_config(), algo).unwrap_err();
        assert!(matches!(err, DsopError::NoFeasibleSolution), "{algo}: {err}");
    }
}

#[test]
fn branch_and_bound_keeps_the_better_of_two_exclusive_vertices() {
    // either vertex alone takes 2, both take 3; width 0.5 keeps unit hops on the grid
    let inst = complete_points(&[0.0, 40.0, 60.0, 0.0], |_, _| 1.0);
    let cfg = |h: f64| SearchConfig {
        range_count: (2.0 * h) as usize,
        ..matrix_config()
    };
    let req = SolveRequest::new(2.5, 0.1, 0.0).unwrap();
    let best = solver::branch_and_bound(&inst, &req, &cfg(2.5)).unwrap();
    assert_eq!(best.path.vertices(), &ids(&[0, 2, 3])[..]);
    assert_eq!(best.reward, 60.0);

    let req = SolveRequest::new(1.5, 0.1, 0.0).unwrap();
    let direct = solver::branch_and_bound(&inst, &req, &cfg(1.5)).unwrap();
    assert_eq!(direct.path.vertices(), &ids(&[0, 3])[..]);
}

#[test]
fn node_budget_returns_the_incumbent() {
    let inst = complete_points(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 0.0], |_, _| 1.0);
    let req = SolveRequest::new(20.0, 0.1, 0.0).unwrap();
    let cfg = SearchConfig {
        node_budget: 4,
        ..matrix_config()
    };
    match solver::branch_and_bound(&inst, &req, &cfg) {
        Err(DsopError::Timeout {
            budget: 4,
            best: Some(best),
        }) => {
            assert!(best.reward > 0.0);
            assert!(is_feasible(&best.estimate, 0.1));
        }
        other => panic!("expected a timeout, got {other:?}"),
    }
}

#[test]
fn two_opt_examples() {
    let inst = complete_points(&[0.0, 1.0, 2.0, 3.0, 0.0], |_, _| 1.0);
    let req = SolveRequest::new(20.0, 0.1, 0.0).unwrap();
    let cfg = matrix_config();
    let prop = MatrixPropagator::new(&inst, &req, &cfg).unwrap();
    let solver = Solver::new(&prop, req, cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let mut one = PrefixProductCache::new(&prop, ids(&[0, 1, 4]));
    assert_eq!(solver.two_opt(&mut one, &mut rng), None);
    assert_eq!(one.route(), &ids(&[0, 1, 4])[..]);

    let mut two = PrefixProductCache::new(&prop, ids(&[0, 1, 2, 4]));
    let swapped = solver.two_opt(&mut two, &mut rng).unwrap();
    assert!(swapped == (1, 2) || swapped == (2, 1));
    assert_eq!(two.route(), &ids(&[0, 2, 1, 4])[..]);

    let run = |seed| {
        let mut cache = PrefixProductCache::new(&prop, ids(&[0, 1, 2, 3, 4]));
        solver.two_opt(&mut cache, &mut ChaCha8Rng::seed_from_u64(seed));
        cache.route().to_vec()
    };
    let swapped = run(11);
    assert_eq!(swapped, run(11));
    let mut sorted = swapped.clone();
    sorted.sort();
    assert_eq!(sorted, ids(&[0, 1, 2, 3, 4]));
    assert_eq!(
        swapped
            .iter()
            .zip(ids(&[0, 1, 2, 3, 4]))
            .filter(|(a, b)| *a != b)
            .count(),
        2
    );
}

#[test]
fn removal_examples() {
    // each interior hop costs 1 and the exit hop 1: ⟨0,1,2,3⟩ arrives at 3
    let inst = complete_points(&[0.0, 5.0, 6.0, 0.0], |_, _| 1.0);
    let cfg = matrix_config();

    let req = SolveRequest::new(2.5, 0.1, 0.0).unwrap();
    let prop = MatrixPropagator::new(&inst, &req, &cfg).unwrap();
    let solver = Solver::new(&prop, req, cfg.clone()).unwrap();
    let mut cache = PrefixProductCache::new(&prop, ids(&[0, 1, 2, 3]));
    assert!(!solver.feasible(&cache.estimate()));
    let removed = solver
        .removal_phase(&mut cache, 0.0, &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    assert_eq!(removed, 1);
    assert_eq!(cache.route(), &ids(&[0, 1, 3])[..]);

    let req = SolveRequest::new(10.0, 0.1, 0.0).unwrap();
    let prop = MatrixPropagator::new(&inst, &req, &cfg).unwrap();
    let solver = Solver::new(&prop, req, cfg).unwrap();
    let mut cache = PrefixProductCache::new(&prop, ids(&[0, 1, 2, 3]));
    let removed = solver
        .removal_phase(&mut cache, 0.0, &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    assert_eq!(removed, 0);

    // a stream whose first two draws are 0.3-like and 0.7-like
    let seed = (0u64..)
        .find(|&s| {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            let (a, b): (f64, f64) = (r.random(), r.random());
            a <= 0.5 && b > 0.5
        })
        .unwrap();
    let mut cache = PrefixProductCache::new(&prop, ids(&[0, 1, 2, 3]));
    let removed = solver
        .removal_phase(&mut cache, 0.5, &mut ChaCha8Rng::seed_from_u64(seed))
        .unwrap();
    assert_eq!(removed, 1);
    assert_eq!(cache.route(), &ids(&[0, 1, 3])[..]);
}

#[test]
fn stagnation_sets_the_removal_probability() {
    let inst = generate_synthetic(&GeneratorConfig {
        vertex_count: 8,
        seed: 4,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let req = SolveRequest::new(30.0, 0.2, 0.0).unwrap();
    let cfg = SearchConfig {
        range_count: 30,
        ..matrix_config()
    };
    let prop = MatrixPropagator::new(&inst, &req, &cfg).unwrap();
    let solver = Solver::new(&prop, req, cfg).unwrap();
    let mut state = solver.search_state().unwrap();
    state.num_iter_no_improve = 50;
    solver.step(&mut state).unwrap();
    assert_eq!(state.z, 0.5);
}

#[test]
fn temperature_follows_geometric_cooling() {
    let inst = generate_synthetic(&GeneratorConfig {
        vertex_count: 8,
        seed: 9,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let req = SolveRequest::new(30.0, 0.2, 0.0).unwrap();
    let cfg = SearchConfig {
        range_count: 30,
        ..matrix_config()
    };
    let prop = MatrixPropagator::new(&inst, &req, &cfg).unwrap();
    let solver = Solver::new(&prop, req, cfg.clone()).unwrap();
    let mut state = solver.search_state().unwrap();
    let mut best = state.best_reward;
    for t in 1..=300 {
        solver.step(&mut state).unwrap();
        let expected = cfg.initial_temperature * cfg.cooling.powi(t);
        assert!((state.temperature - expected).abs() <= 1e-12);
        assert!(state.z <= 0.5);
        assert!(state.best_reward >= best);
        best = state.best_reward;
    }
}

/// Found by scanning oracle seeds for a case where the search has to move
/// past its construction to reach the optimum.
#[test]
fn local_search_reaches_the_optimum_on_a_recorded_instance() {
    let inst = generate_oracle_instance(&OracleConfig {
        vertex_count: 8,
        outcomes_per_edge: 2,
        band_count: 2,
        seed: REGRESSION_SEED,
    })
    .unwrap();
    let req = SolveRequest::new(REGRESSION_DEADLINE, 0.2, 0.0).unwrap();
    // width 0.05 divides the quarter-unit travel times
    let cfg = SearchConfig {
        range_count: 140,
        ..matrix_config().with_seed(1)
    };
    let ls = solver::local_search(&inst, &req, &cfg).unwrap();
    let bnb = solver::branch_and_bound(&inst, &req, &cfg).unwrap();
    assert_eq!(ls.construction.reward, 268.0);
    assert_eq!(ls.best.reward, 395.0);
    assert_eq!(bnb.reward, 395.0);
    assert_eq!(ls.iterations, cfg.max_iterations);
}

const REGRESSION_SEED: u64 = 0;
const REGRESSION_DEADLINE: f64 = 7.0;

fn check_solution<P: Propagator>(prop: &P, sol: &dsop_core::Solution, eps: f64) -> Result<(), TestCaseError> {
    sol.path
        .check(prop.instance())
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let fresh = prop.evaluate(sol.path.vertices());
    prop_assert_eq!(fresh, sol.estimate);
    prop_assert!(is_feasible(&fresh, eps));
    prop_assert_eq!(sol.reward, sol.path.reward(prop.instance()));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn branch_and_bound_is_optimal_on_small_instances(
        seed in any::<u64>(),
        n in 3usize..=8,
        outcomes in 1usize..=2,
        deadline in 2u32..=8,
        eps in prop::sample::select(vec![0.05, 0.2, 0.4]),
    ) {
        let inst = generate_oracle_instance(&OracleConfig { vertex_count: n, outcomes_per_edge: outcomes, band_count: 2, seed }).unwrap();
        let req = SolveRequest::new(deadline as f64, eps, 0.0).unwrap();
        let cfg = SearchConfig { max_iterations: 300, range_count: 20 * deadline as usize, ..matrix_config().with_seed(seed) };
        let prop = MatrixPropagator::new(&inst, &req, &cfg).unwrap();
        let oracle = brute_force_best(&prop, eps);
        match solver::branch_and_bound(&inst, &req, &cfg) {
            Ok(best) => {
                check_solution(&prop, &best, eps)?;
                prop_assert_eq!(Some(best.reward), oracle);
                // a detour can be feasible when the direct path is not, and
                // local search has to start from the direct path
                match solver::local_search(&inst, &req, &cfg) {
                    Ok(ls) => {
                        prop_assert!(ls.best.reward <= best.reward);
                        prop_assert!(ls.best.reward >= ls.construction.reward);
                    }
                    Err(DsopError::NoFeasibleSolution) => {
                        let direct = prop.evaluate(&[inst.start(), inst.exit()]);
                        prop_assert!(!is_feasible(&direct, eps));
                    }
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
                let cut = SearchConfig { prune_rule: PruneRule::ExitAppended, ..cfg.clone() };
                if let Ok(cut_best) = solver::branch_and_bound(&inst, &req, &cut) {
                    prop_assert!(cut_best.reward <= best.reward);
                }
            }
            Err(DsopError::NoFeasibleSolution) => prop_assert_eq!(oracle, None),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn solutions_are_feasible_deterministic_and_improve_on_construction(
        seed in any::<u64>(),
        h in prop::sample::select(vec![15.0, 30.0, 45.0]),
        eps in prop::sample::select(vec![0.1, 0.3, 0.5]),
        sampling in any::<bool>(),
    ) {
        let inst = generate_synthetic(&GeneratorConfig { vertex_count: 10, seed, ..GeneratorConfig::default() }).unwrap();
        let req = SolveRequest::new(h, eps, 0.0).unwrap();
        let estimator = if sampling { Estimator::Sampling } else { Estimator::Matrix };
        let cfg = SearchConfig { max_iterations: 150, sample_count: 200, range_count: 50, ..SearchConfig::default() }
            .with_seed(seed)
            .with_estimator(estimator);
        let run = solver::local_search(&inst, &req, &cfg);
        let Ok(ls) = run else {
            prop_assert!(matches!(run, Err(DsopError::NoFeasibleSolution)));
            return Ok(());
        };
        prop_assert_eq!(&ls, &solver::local_search(&inst, &req, &cfg).unwrap());
        prop_assert!(ls.best.reward >= ls.construction.reward);
        if sampling {
            let prop = SamplingPropagator::new(&inst, &req, cfg.sample_count, cfg.sampler_seed);
            check_solution(&prop, &ls.best, eps)?;
            check_solution(&prop, &ls.construction, eps)?;
        } else {
            let prop = MatrixPropagator::new(&inst, &req, &cfg).unwrap();
            check_solution(&prop, &ls.best, eps)?;
            check_solution(&prop, &ls.construction, eps)?;
        }
    }

    #[test]
    fn pruned_insertion_scan_matches_the_exhaustive_one(
        seed in any::<u64>(),
        h in 10.0f64..50.0,
        eps in 0.05f64..0.5,
    ) {
        let inst = generate_synthetic(&GeneratorConfig { vertex_count: 12, seed, ..GeneratorConfig::default() }).unwrap();
        let req = SolveRequest::new(h, eps, 0.0).unwrap();
        let cfg = SearchConfig::default();
        let prop = SamplingPropagator::new(&inst, &req, 150, seed);
        let solver = Solver::new(&prop, req, cfg).unwrap();
        for metric in InsertionMetric::ALL {
            let Ok(mut cache) = solver.start_cache() else { return Ok(()) };
            loop {
                let fast = solver.best_insertion(&cache, metric);
                let slow = solver.best_insertion_exhaustive(&cache, metric);
                prop_assert_eq!(fast.map(|e| (e.vertex, e.position)), slow.map(|e| (e.vertex, e.position)));
                let Some(ev) = fast else { break };
                cache.apply(&prop, PathEdit::Insert { vertex: ev.vertex, position: ev.position });
            }
        }
    }

    #[test]
    fn search_phases_keep_paths_valid(seed in any::<u64>(), steps in 1usize..40) {
        let inst = generate_synthetic(&GeneratorConfig { vertex_count: 9, seed, hard: true, ..GeneratorConfig::default() }).unwrap();
        let req = SolveRequest::new(25.0, 0.3, 0.0).unwrap();
        let cfg = SearchConfig::default().with_seed(seed);
        let prop = SamplingPropagator::new(&inst, &req, 100, seed);
        let solver = Solver::new(&prop, req, cfg).unwrap();
        let Ok(mut state) = solver.search_state() else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..steps {
            let check = |c: &PrefixProductCache<_>| dsop_core::Path::new(c.route().to_vec()).check(&inst).is_ok();
            solver.two_opt(&mut state.current, &mut rng);
            prop_assert!(check(&state.current));
            solver.removal_phase(&mut state.current, 0.3, &mut rng).unwrap();
            prop_assert!(check(&state.current));
            prop_assert!(solver.feasible(&state.current.estimate()));
            solver.insertion_phase(&mut state.current, InsertionMetric::ALL[rng.random_range(0..5)]);
            prop_assert!(check(&state.current));
            prop_assert!(solver.feasible(&state.current.estimate()));
        }
    }
}
