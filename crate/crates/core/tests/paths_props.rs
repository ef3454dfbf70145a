mod common;

use common::{chain, path_of, split3};
use proptest::prelude::*;
use regrasp::geometry::Transform;
use regrasp::paths::{CompositeConfig, ManipulationPath, Mode};

fn alternation_blocks(kinds: &[Mode]) -> usize {
    if kinds.is_empty() {
        return 0;
    }
    1 + kinds.windows(2).filter(|w| w[0] != w[1]).count()
}

fn spec() -> impl Strategy<Value = Vec<(bool, usize)>> {
    prop::collection::vec((any::<bool>(), 1usize..4), 0..9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn composition_is_associative(s in spec(), seed in any::<u64>(), i in 0usize..9, j in 0usize..9) {
        let [a, b, c] = split3(&s, seed, i, j);
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn domain_length_follows_the_junction_rule(s in spec(), seed in any::<u64>(), i in 0usize..9) {
        let [a, b, _] = split3(&s, seed, i, 9);
        let ab = a.compose(&b).unwrap();
        let fused = match (a.kinds().last(), b.kinds().first()) {
            (Some(x), Some(y)) if x == y => 1,
            _ => 0,
        };
        prop_assert_eq!(ab.domain_length(), a.domain_length() + b.domain_length() - fused);
    }

    #[test]
    fn reduce_is_idempotent_and_irreducible(s in spec(), seed in any::<u64>()) {
        let segs = chain(&s, seed);
        let m = path_of(&segs, &CompositeConfig::new(vec![0.0; 3], Transform::identity()));
        let r = m.reduce();
        prop_assert!(r.is_irreducible());
        prop_assert_eq!(r.reduce(), r.clone());
        prop_assert!(r.start().same_as(m.start()));
        prop_assert!(r.end().same_as(m.end()));
        let kinds: Vec<Mode> = segs.iter().map(|x| x.kind).collect();
        prop_assert_eq!(r.domain_length(), alternation_blocks(&kinds));
    }

    #[test]
    fn transitions_are_domain_length_minus_one(s in spec(), seed in any::<u64>()) {
        let segs = chain(&s, seed);
        let r = path_of(&segs, &CompositeConfig::new(vec![0.0; 3], Transform::identity())).reduce();
        let expect = r.domain_length().saturating_sub(1);
        prop_assert_eq!(r.transitions().unwrap(), expect);
    }

    #[test]
    fn evaluation_hits_both_ends(s in spec(), seed in any::<u64>()) {
        let segs = chain(&s, seed);
        let m = path_of(&segs, &CompositeConfig::new(vec![0.0; 3], Transform::identity()));
        prop_assert!(m.evaluate(0.0).unwrap().same_as(m.start()));
        prop_assert!(m.evaluate(m.domain_length() as f64).unwrap().same_as(m.end()));
        prop_assert!(m.evaluate(m.domain_length() as f64 + 0.5).is_err());
    }

    #[test]
    fn json_round_trip_preserves_paths(s in spec(), seed in any::<u64>()) {
        let segs = chain(&s, seed);
        let anchor = CompositeConfig::new(vec![0.0; 3], Transform::identity());
        let m = path_of(&segs, &anchor);
        let back = ManipulationPath::from_json(&m.to_json(), Some(anchor)).unwrap();
        prop_assert_eq!(back, m);
    }
}
