mod common;

use common::{draw_query, RandomDag};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn bayes_ball_matches_path_enumeration_on_random_dags() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut disagreements = 0;
    let mut separated = 0;
    for _ in 0..1000 {
        let g = RandomDag::draw(&mut rng);
        let dag = g.build();
        let (a, b, z) = draw_query(&mut rng, g.names.len());
        let zn: Vec<&str> = z.iter().map(|&v| g.names[v].as_str()).collect();
        let fast = dag.d_separated(&g.names[a], &g.names[b], &zn).unwrap();
        let slow = g.separated_by_enumeration(a, b, &z);
        if fast != slow {
            disagreements += 1;
        }
        separated += usize::from(slow);
    }
    assert_eq!(disagreements, 0);
    assert!(separated > 100 && separated < 900, "query mix too lopsided: {separated}");
}

#[test]
fn witness_trail_exists_exactly_when_connected() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..300 {
        let g = RandomDag::draw(&mut rng);
        let dag = g.build();
        let (a, b, z) = draw_query(&mut rng, g.names.len());
        let zn: Vec<&str> = z.iter().map(|&v| g.names[v].as_str()).collect();
        let sep = dag.d_separated(&g.names[a], &g.names[b], &zn).unwrap();
        let trail = dag.active_trail(&g.names[a], &g.names[b], &zn).unwrap();
        assert_eq!(sep, trail.is_none());
        if let Some(t) = trail {
            let idx: Vec<usize> = t.nodes.iter().map(|s| g.names.iter().position(|n| n == s).unwrap()).collect();
            assert_eq!(idx.first(), Some(&a));
            assert_eq!(idx.last(), Some(&b));
            assert!(g.trail_active(&idx, &z));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn separation_is_symmetric_and_matches_moral_route(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = RandomDag::draw(&mut rng);
        let dag = g.build();
        let (a, b, z) = draw_query(&mut rng, g.names.len());
        let zn: Vec<&str> = z.iter().map(|&v| g.names[v].as_str()).collect();
        let ab = dag.d_separated(&g.names[a], &g.names[b], &zn).unwrap();
        let ba = dag.d_separated(&g.names[b], &g.names[a], &zn).unwrap();
        let moral = dag.d_separated_moral(&g.names[a], &g.names[b], &zn).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(ab, moral);
    }
}
