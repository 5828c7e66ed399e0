//! Property-based checks for the geometric primitives: metric projections
//! and norm axioms under randomized inputs.

use proptest::prelude::*;
use viscofix::{ConvexSet, NormSpec, Point};

fn pt(coords: &[f64]) -> Point {
    Point::new(coords.to_vec()).expect("finite coordinates")
}

fn coord() -> impl Strategy<Value = f64> {
    -50.0..50.0_f64
}

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(coord(), 3)
}

/// Box, ball, and halfspace instances in R^3 with nondegenerate parameters.
fn set3() -> impl Strategy<Value = ConvexSet> {
    prop_oneof![
        (vec3(), prop::collection::vec(0.1..20.0_f64, 3)).prop_map(|(lo, w)| {
            let hi: Vec<f64> = lo.iter().zip(&w).map(|(l, w)| l + w).collect();
            ConvexSet::boxed(lo, hi).expect("valid box")
        }),
        (vec3(), 0.1..20.0_f64)
            .prop_map(|(c, r)| ConvexSet::ball(c, r).expect("valid ball")),
        (vec3(), coord())
            .prop_filter("nonzero normal", |(a, _)| a.iter().any(|v| v.abs() > 0.1))
            .prop_map(|(a, b)| ConvexSet::halfspace(a, b).expect("valid halfspace")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn projection_is_nonexpansive(set in set3(), x in vec3(), y in vec3()) {
        let (x, y) = (pt(&x), pt(&y));
        let px = set.project(&x).unwrap();
        let py = set.project(&y).unwrap();
        prop_assert!(px.sub(&py).norm2() <= x.sub(&y).norm2() + 1e-9);
    }

    #[test]
    fn projection_is_nearest_feasible_point(set in set3(), x in vec3(), z in vec3()) {
        let x = pt(&x);
        let px = set.project(&x).unwrap();
        prop_assert!(set.membership(&px, 1e-7));
        // no feasible point is closer than the projection
        let pz = set.project(&pt(&z)).unwrap();
        prop_assert!(x.sub(&px).norm2() <= x.sub(&pz).norm2() + 1e-9);
    }

    #[test]
    fn projection_is_idempotent(set in set3(), x in vec3()) {
        let px = set.project(&pt(&x)).unwrap();
        let ppx = set.project(&px).unwrap();
        prop_assert!(px.sub(&ppx).norm2() <= 1e-9);
    }

    #[test]
    fn norm_axioms(p in prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0)],
                   x in vec3(), y in vec3(), t in -10.0..10.0_f64) {
        let norm = NormSpec::new(p).unwrap();
        let (x, y) = (pt(&x), pt(&y));
        let nx = norm.norm(&x);
        prop_assert!(nx >= 0.0);
        if x.coords().iter().all(|c| *c == 0.0) {
            prop_assert!(nx == 0.0);
        } else {
            prop_assert!(nx > 0.0);
        }
        // triangle inequality and absolute homogeneity
        prop_assert!(norm.norm(&x.add(&y)) <= nx + norm.norm(&y) + 1e-9);
        let scaled = norm.norm(&x.scale(t));
        prop_assert!((scaled - t.abs() * nx).abs() <= 1e-9 * (1.0 + scaled));
    }

    #[test]
    fn infinity_norm_axioms(x in vec3(), y in vec3(), t in -10.0..10.0_f64) {
        let norm = NormSpec::Infinity;
        let (x, y) = (pt(&x), pt(&y));
        prop_assert!(norm.norm(&x.add(&y)) <= norm.norm(&x) + norm.norm(&y) + 1e-9);
        let scaled = norm.norm(&x.scale(t));
        prop_assert!((scaled - t.abs() * norm.norm(&x)).abs() <= 1e-9 * (1.0 + scaled));
    }
}
