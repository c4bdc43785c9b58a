mod common;

use dsop_core::instances::{generate_synthetic, GeneratorConfig};
use dsop_core::probability::{MatrixPropagator, PathEdit, PrefixProductCache, Propagator, SamplingPropagator};
use dsop_core::{Instance, SearchConfig, SolveRequest, VertexId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::random_route;

fn random_edit<R: Rng>(inst: &Instance, route: &[VertexId], rng: &mut R) -> PathEdit {
    let unvisited: Vec<VertexId> = inst.interior_vertices().filter(|v| !route.contains(v)).collect();
    let interior = route.len() - 2;
    match rng.random_range(0..3) {
        0 if interior >= 1 => PathEdit::Swap(1 + rng.random_range(0..interior), 1 + rng.random_range(0..interior)),
        1 if interior >= 1 => PathEdit::RemoveSecondLast,
        _ if !unvisited.is_empty() => PathEdit::Insert {
            vertex: unvisited[rng.random_range(0..unvisited.len())],
            position: 1 + rng.random_range(0..route.len() - 1),
        },
        _ => PathEdit::RemoveSecondLast,
    }
}

fn edited(route: &[VertexId], edit: PathEdit) -> Vec<VertexId> {
    let mut r = route.to_vec();
    match edit {
        PathEdit::Swap(i, j) => r.swap(i, j),
        PathEdit::RemoveSecondLast => {
            if r.len() > 2 {
                r.remove(r.len() - 2);
            }
        }
        PathEdit::Insert { vertex, position } => r.insert(position, vertex),
    }
    r
}

fn check_edits<P: Propagator>(prop: &P, seed: u64, edits: usize) -> Result<(), TestCaseError> {
    let inst = prop.instance();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache = PrefixProductCache::new(prop, random_route(inst, &mut rng));
    for _ in 0..edits {
        let edit = random_edit(inst, cache.route(), &mut rng);
        let expected_route = edited(cache.route(), edit);
        if let PathEdit::Insert { vertex, position } = edit {
            let probe = cache.probe_insert(prop, vertex, position, None).unwrap();
            prop_assert_eq!(probe, prop.evaluate(&expected_route));
        }
        let est = cache.apply(prop, edit);
        prop_assert_eq!(cache.route(), &expected_route[..]);
        let fresh = prop.evaluate(cache.route());
        prop_assert_eq!(est, cache.estimate());
        prop_assert!(
            (est.value - fresh.value).abs() <= 1e-12,
            "cache {} fresh {}",
            est.value,
            fresh.value
        );
        for t in 0..cache.len() - 1 {
            let again = PrefixProductCache::new(prop, cache.route().to_vec());
            prop_assert!(prop.estimate(cache.state(t)).value == prop.estimate(again.state(t)).value);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn matrix_cache_matches_from_scratch(seed in any::<u64>(), edits in 1usize..=100, h in prop::sample::select(vec![12.0, 30.0, 60.0])) {
        let inst = generate_synthetic(&GeneratorConfig { vertex_count: 9, seed, ..GeneratorConfig::default() }).unwrap();
        let req = SolveRequest::new(h, 0.1, 0.0).unwrap();
        let cfg = SearchConfig { range_count: 40, ..SearchConfig::default() };
        let prop = MatrixPropagator::new(&inst, &req, &cfg).unwrap();
        check_edits(&prop, seed, edits)?;
    }

    #[test]
    fn sampling_cache_is_bit_identical_to_from_scratch(seed in any::<u64>(), edits in 1usize..=100, h in 8.0f64..60.0) {
        let inst = generate_synthetic(&GeneratorConfig { vertex_count: 12, seed, ..GeneratorConfig::default() }).unwrap();
        let req = SolveRequest::new(h, 0.1, 0.0).unwrap();
        let prop = SamplingPropagator::new(&inst, &req, 200, seed ^ 1);
        let inst = prop.instance();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cache = PrefixProductCache::new(&prop, random_route(inst, &mut rng));
        for _ in 0..edits {
            let edit = random_edit(inst, cache.route(), &mut rng);
            let est = cache.apply(&prop, edit);
            prop_assert_eq!(est, prop.evaluate(cache.route()));
        }
    }
}

#[test]
fn removing_the_second_last_vertex_recomputes_one_edge() {
    let inst = generate_synthetic(&GeneratorConfig {
        vertex_count: 8,
        seed: 2,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let req = SolveRequest::new(40.0, 0.1, 0.0).unwrap();
    let prop = SamplingPropagator::new(&inst, &req, 100, 0);
    let mut cache = PrefixProductCache::new(&prop, (0..8).map(VertexId).collect());
    cache.apply(&prop, PathEdit::RemoveSecondLast);
    assert_eq!(cache.last_recomputed(), 0);
    cache.apply(&prop, PathEdit::Swap(2, 4));
    // seven vertices: states at positions 2..=5 depend on the swap, 0 and 1 are kept
    assert_eq!(cache.last_recomputed(), 4);
}
