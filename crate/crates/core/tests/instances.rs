use dsop_core::instances::{
    find_violated_triangle, generate_oracle_instance, generate_synthetic, GeneratorConfig, OracleConfig, ScaleSetting,
};
use dsop_core::io::{load_instance, read_instance_file, save_instance};
use dsop_core::{validate_instance, DistributionSpec, DsopError};
use proptest::prelude::*;

fn gamma_means_are_consistent(inst: &dsop_core::Instance) -> bool {
    inst.edges().iter().flat_map(|e| &e.bands).all(|b| match b.dist {
        DistributionSpec::Gamma { shape, scale } => {
            (2.0..=9.0).contains(&shape) && (shape * scale - b.dist.mean()).abs() <= 1e-9
        }
        _ => false,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn simple_instances_are_valid_and_metric(seed in any::<u64>(), n in 2usize..20, theta in 1.0f64..=4.0) {
        let cfg = GeneratorConfig { vertex_count: n, theta: ScaleSetting::Fixed(theta), seed, ..GeneratorConfig::default() };
        let inst = generate_synthetic(&cfg).unwrap();
        prop_assert!(validate_instance(&inst).is_empty());
        prop_assert_eq!(inst.edges().len(), n * (n - 1));
        prop_assert!(gamma_means_are_consistent(&inst));
        prop_assert!(find_violated_triangle(&inst).is_none());
        for v in inst.vertices() {
            prop_assert!((1.0..=100.0).contains(&v.reward) && v.reward.fract() == 0.0);
        }
        // later bands stay within the drift of the first
        for e in inst.edges() {
            let base = e.bands[0].dist.mean();
            for b in &e.bands[1..] {
                prop_assert!((b.dist.mean() / base - 1.0).abs() <= 0.1 + 1e-9);
            }
        }
    }

    #[test]
    fn hard_instances_break_the_triangle_inequality(seed in any::<u64>(), n in 4usize..16) {
        let cfg = GeneratorConfig { vertex_count: n, hard: true, seed, ..GeneratorConfig::default() };
        let inst = generate_synthetic(&cfg).unwrap();
        prop_assert!(validate_instance(&inst).is_empty());
        prop_assert!(gamma_means_are_consistent(&inst));
        let (i, j, l) = find_violated_triangle(&inst).unwrap();
        let mean = |a, b| inst.edge(a, b).unwrap().bands[0].dist.mean();
        prop_assert!(mean(i, l) > mean(i, j) + mean(j, l));
    }

    #[test]
    fn oracle_instances_meet_their_contract(seed in any::<u64>(), n in 2usize..=8, k in 1usize..=3, bands in 1usize..=2) {
        let inst = generate_oracle_instance(&OracleConfig { vertex_count: n, outcomes_per_edge: k, band_count: bands, seed }).unwrap();
        prop_assert!(validate_instance(&inst).is_empty());
        prop_assert!(inst.all_discrete());
        prop_assert_eq!(inst.edges().iter().any(|e| e.is_dynamic()), bands == 2);
        for e in inst.edges() {
            prop_assert!(e.to != inst.start() && e.from != inst.exit());
            for b in &e.bands {
                let DistributionSpec::Discrete { outcomes } = &b.dist else { unreachable!() };
                prop_assert_eq!(outcomes.len(), k);
                for o in outcomes {
                    prop_assert!((0.25..=3.0).contains(&o.time) && (o.time * 4.0).fract() == 0.0);
                }
            }
        }
    }

    #[test]
    fn instance_files_round_trip(seed in any::<u64>(), hard in any::<bool>()) {
        let inst = generate_synthetic(&GeneratorConfig { seed, hard, ..GeneratorConfig::default() }).unwrap();
        let text = save_instance(&inst);
        let back = load_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(save_instance(&back), text);
    }
}

#[test]
fn thirty_two_vertex_instance_survives_a_file() {
    let inst = generate_synthetic(&GeneratorConfig {
        seed: 2024,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let dir = std::env::temp_dir().join(format!("dsop-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("synthetic.json");
    std::fs::write(&path, save_instance(&inst)).unwrap();
    assert_eq!(read_instance_file(&path).unwrap(), inst);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn oracle_size_caps_are_enforced() {
    let too_big = OracleConfig {
        vertex_count: 9,
        outcomes_per_edge: 1,
        band_count: 1,
        seed: 0,
    };
    assert!(matches!(generate_oracle_instance(&too_big), Err(DsopError::Config(_))));
    let tiny = generate_oracle_instance(&OracleConfig {
        vertex_count: 2,
        outcomes_per_edge: 1,
        band_count: 1,
        seed: 0,
    })
    .unwrap();
    assert_eq!(tiny.edges().len(), 1);
}

#[test]
fn generation_is_reproducible() {
    for hard in [false, true] {
        let cfg = GeneratorConfig {
            seed: 77,
            hard,
            ..GeneratorConfig::default()
        };
        assert_eq!(
            save_instance(&generate_synthetic(&cfg).unwrap()),
            save_instance(&generate_synthetic(&cfg).unwrap())
        );
    }
}
