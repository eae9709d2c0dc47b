use penum::energy::{decode, encode, restrict, FactorGraph};
use proptest::prelude::*;

fn random_graph() -> impl Strategy<Value = FactorGraph> {
    let counts = prop::collection::vec(1usize..4, 1..7);
    counts.prop_flat_map(|counts| {
        let n = counts.len();
        let scopes = prop::collection::vec(prop::collection::btree_set(0..n, 1..=n.min(3)), 0..5);
        (Just(counts), scopes).prop_flat_map(|(counts, scopes)| {
            let sizes: Vec<usize> = scopes.iter().map(|s| s.iter().map(|&v| counts[v]).product()).collect();
            let tables = sizes
                .iter()
                .map(|&k| prop::collection::vec(prop_oneof![9 => -5.0f64..5.0, 1 => Just(f64::INFINITY)], k))
                .collect::<Vec<_>>();
            (Just(counts), Just(scopes), tables).prop_map(|(counts, scopes, tables)| {
                let mut g = FactorGraph::new(counts).unwrap();
                for (s, t) in scopes.into_iter().zip(tables) {
                    g.add_factor(s.into_iter().collect(), t).unwrap();
                }
                g
            })
        })
    })
}

fn labeling(g: &FactorGraph, seed: &[usize]) -> Vec<usize> {
    g.label_counts().iter().zip(seed.iter().cycle()).map(|(&k, &s)| s % k).collect()
}

proptest! {
    #[test]
    fn evaluation_is_additive(g in random_graph(), seed in prop::collection::vec(0usize..100, 1..8)) {
        let x = labeling(&g, &seed);
        let total = g.evaluate(&x).unwrap();
        let mut parts = 0.0;
        for f in g.factors() {
            let mut single = FactorGraph::new(g.label_counts().to_vec()).unwrap();
            single.add_factor(f.scope().to_vec(), f.table().to_vec()).unwrap();
            parts += single.evaluate(&x).unwrap();
        }
        if total.is_infinite() {
            prop_assert!(parts.is_infinite());
        } else {
            prop_assert!((total - parts).abs() < 1e-9);
        }
    }

    #[test]
    fn evaluate_matches_table_lookups(g in random_graph(), seed in prop::collection::vec(0usize..100, 1..8)) {
        let x = labeling(&g, &seed);
        let mut sum = 0.0;
        for f in g.factors() {
            let local = restrict(&x, f.scope());
            let radices: Vec<usize> = f.scope().iter().map(|&v| g.label_counts()[v]).collect();
            let mut idx = 0;
            for (l, r) in local.iter().zip(&radices) {
                idx = idx * r + l;
            }
            sum += f.table()[idx];
        }
        let e = g.evaluate(&x).unwrap();
        prop_assert!(e == sum || (e - sum).abs() < 1e-9);
    }

    #[test]
    fn brute_force_is_a_lower_bound(g in random_graph(), seeds in prop::collection::vec(prop::collection::vec(0usize..100, 7), 50)) {
        let (xm, em) = g.brute_force_min().unwrap();
        prop_assert_eq!(g.evaluate(&xm).unwrap(), em);
        for s in &seeds {
            prop_assert!(em <= g.evaluate(&labeling(&g, s)).unwrap());
        }
    }

    #[test]
    fn binary_codes_round_trip(bits in prop::collection::vec(0usize..2, 0..=25)) {
        let radices = vec![2; bits.len()];
        let code = encode(&bits, &radices);
        prop_assert!(code < 1 << bits.len());
        prop_assert_eq!(decode(code, &radices), bits);
    }

    #[test]
    fn restrict_picks_scope_entries(x in prop::collection::vec(0usize..5, 1..10), mask in any::<u16>()) {
        let scope: Vec<usize> = (0..x.len()).filter(|i| mask >> i & 1 == 1).collect();
        let r = restrict(&x, &scope);
        prop_assert_eq!(r.len(), scope.len());
        for (v, &i) in r.iter().zip(&scope) {
            prop_assert_eq!(*v, x[i]);
        }
    }
}

#[test]
fn brute_force_over_random_labelings() {
    // 1000 random labelings never beat the exhaustive minimum.
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let mut g = FactorGraph::binary(10);
    for i in 0..10 {
        g.add_unary(i, vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).unwrap();
    }
    for i in 0..8 {
        let t = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        g.add_factor(vec![i, i + 1, i + 2], t).unwrap();
    }
    let (_, best) = g.brute_force_min().unwrap();
    for _ in 0..1000 {
        let x: Vec<usize> = (0..10).map(|_| rng.random_range(0..2)).collect();
        assert!(best <= g.evaluate(&x).unwrap());
    }
}

#[test]
fn curvature_factor_with_one_pixel() {
    let t = penum::curvature::two_by_two_costs();
    let mut g = FactorGraph::binary(4);
    // Scope order is top-left first, which is the most significant digit.
    let table = (0..16u32).map(|code| t.cost(code.reverse_bits() >> 28).unwrap()).collect();
    g.add_factor(vec![0, 1, 2, 3], table).unwrap();
    assert_eq!(g.evaluate(&[0, 0, 1, 0]).unwrap(), std::f64::consts::FRAC_PI_2);
}
