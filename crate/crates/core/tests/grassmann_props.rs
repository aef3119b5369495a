mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn kernel_exhaustive_up_to_four_generators() {
    let (checked, bad) = common::exhaustive(4);
    assert!(checked > 4000);
    assert!(bad.is_empty(), "{:?}", &bad[..bad.len().min(5)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_random_up_to_eight_generators(seed in any::<u64>(), pairs in 1usize..=4, density in 0.05f64..0.6) {
        let n = 2 * pairs;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_element(&mut rng, n, density);
        let b = common::random_element(&mut rng, n, density);
        let c = common::random_element(&mut rng, n, density);
        let bad = common::failures(&a, &b, &c, false);
        prop_assert!(bad.is_empty(), "{:?}", bad);
        let (ha, hb) = (a.grade(1), b.grade(2));
        let bad = common::failures(&ha, &hb, &c.grade(3), true);
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn supertranspose_reverses_products(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens = 4;
        let even_odd = |rng: &mut ChaCha8Rng, odd: bool| {
            let e = common::random_element(rng, gens, 0.5);
            e.filter(|m| (m.count_ones() % 2 == 1) == odd)
        };
        let build = |rng: &mut ChaCha8Rng| {
            let rows = (0..3).map(|i| (0..3).map(|j| even_odd(rng, (i < 1) != (j < 1))).collect()).collect();
            uosp::SuperMatrix::from_rows(1, 1, 1, 1, rows).unwrap()
        };
        let (a, b) = (build(&mut rng), build(&mut rng));
        prop_assert!(a.grading_consistent() && b.grading_consistent());
        let lhs = a.matmul(&b).unwrap().superadjoint();
        let rhs = b.superadjoint().matmul(&a.superadjoint()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        let lhs = a.matmul(&b).unwrap().supertranspose();
        let rhs = b.supertranspose().matmul(&a.supertranspose()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }
}
