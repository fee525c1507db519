mod common;

use common::enumerate_belief;
use num_complex::Complex64;
use proptest::prelude::*;
use turboce::constellation::{bit_prob_one, make_constellation, Constellation, LlrVector};

fn llr_entry() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => -60.0..60.0f64,
        1 => Just(f64::INFINITY),
        1 => Just(f64::NEG_INFINITY),
    ]
}

fn order_and_llrs() -> impl Strategy<Value = (usize, Vec<f64>)> {
    prop_oneof![Just(2usize), Just(4), Just(6)]
        .prop_flat_map(|q| (Just(q), prop::collection::vec(llr_entry(), q)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn node_probabilities_normalised((q, llrs) in order_and_llrs()) {
        let c = Constellation::new(q).unwrap();
        let p = c.node_probabilities(&LlrVector::new(llrs).unwrap()).unwrap();
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn variance_consistent_and_bounded((q, llrs) in order_and_llrs()) {
        let c = Constellation::new(q).unwrap();
        let b = c.symbol_belief(&LlrVector::new(llrs).unwrap()).unwrap();
        prop_assert!((b.second_moment - b.mean.norm_sqr() - b.variance).abs() <= 1e-9);
        prop_assert!(b.variance >= -1e-12);
        prop_assert!(b.mean.norm() <= c.max_modulus() + 1e-12);
    }

    #[test]
    fn certainty_collapse(
        (q, signs) in prop_oneof![Just(2usize), Just(4), Just(6)]
            .prop_flat_map(|q| (Just(q), prop::collection::vec(any::<bool>(), q))),
        mags in prop::collection::vec(40.0..1e6f64, 6),
    ) {
        let c = Constellation::new(q).unwrap();
        let llrs: Vec<f64> = signs.iter().zip(&mags).map(|(&s, &m)| if s { m } else { -m }).collect();
        let b = c.symbol_belief(&LlrVector::new(llrs).unwrap()).unwrap();
        prop_assert!(b.variance <= 1e-15, "variance {}", b.variance);
        prop_assert!((b.mean - b.hard_point).norm() <= 1e-15);
    }

    #[test]
    fn qpsk_second_moment_is_one(llrs in prop::collection::vec(llr_entry(), 2)) {
        let c = Constellation::new(2).unwrap();
        let b = c.symbol_belief(&LlrVector::new(llrs).unwrap()).unwrap();
        prop_assert!((b.second_moment - 1.0).abs() <= 1e-12, "{}", b.second_moment);
    }

    #[test]
    fn belief_matches_enumeration((q, llrs) in order_and_llrs()) {
        let c = Constellation::new(q).unwrap();
        let b = c.symbol_belief(&LlrVector::new(llrs.clone()).unwrap()).unwrap();
        let (probs, mean, second) = enumerate_belief(&c, &llrs);
        prop_assert!((b.mean - mean).norm() <= 1e-12);
        prop_assert!((b.second_moment - second).abs() <= 1e-12);
        for (a, e) in b.node_probs.iter().zip(&probs) {
            prop_assert!((a - e).abs() <= 1e-12);
        }
        // Hard point: first index attaining the maximum probability.
        let best = (0..probs.len()).fold(0, |bi, j| if b.node_probs[j] > b.node_probs[bi] { j } else { bi });
        prop_assert_eq!(b.hard_point, c.points()[best]);
    }
}

#[test]
fn qam16_mixed_llrs_match_product_enumeration() {
    let c = make_constellation(4).unwrap();
    let llrs = vec![3f64.ln(), 0.0, -(3f64.ln()), f64::INFINITY];
    let p = c.node_probabilities(&LlrVector::new(llrs.clone()).unwrap()).unwrap();
    let (oracle, _, _) = enumerate_belief(&c, &llrs);
    for (a, b) in p.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-15);
    }
    assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    // Bit 3 is certainly 0: half the nodes are impossible.
    assert_eq!(p.iter().filter(|&&x| x == 0.0).count(), 8);
}

#[test]
fn qam16_finite_llrs_match_enumeration() {
    let c = make_constellation(4).unwrap();
    let llrs = vec![1.0, -1.0, 2.0, 0.5];
    let b = c.symbol_belief(&LlrVector::new(llrs.clone()).unwrap()).unwrap();
    let (_, mean, second) = enumerate_belief(&c, &llrs);
    assert!((b.mean - mean).norm() <= 1e-12);
    assert!((b.second_moment - second).abs() <= 1e-12);
}

#[test]
fn qam64_labels_distinct_and_gray() {
    let c = make_constellation(6).unwrap();
    let labels: Vec<Vec<u8>> = (0..64).map(|j| c.label(j)).collect();
    let mut sorted = labels.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), 64);

    // Grid neighbours: equal on one axis, adjacent levels on the other.
    let step = 2.0 / 42f64.sqrt();
    let mut pairs = 0;
    for i in 0..64 {
        for j in 0..64 {
            let d = c.points()[i] - c.points()[j];
            let horizontal = d.im.abs() < 1e-9 && (d.re.abs() - step).abs() < 1e-9;
            let vertical = d.re.abs() < 1e-9 && (d.im.abs() - step).abs() < 1e-9;
            if horizontal || vertical {
                let diff = labels[i].iter().zip(&labels[j]).filter(|(a, b)| a != b).count();
                assert_eq!(diff, 1, "points {i} and {j}");
                // The differing bit belongs to the axis that moved.
                let k = (0..6).find(|&k| labels[i][k] != labels[j][k]).unwrap();
                assert_eq!(k < 3, horizontal);
                pairs += 1;
            }
        }
    }
    // 8 rows of 7 adjacent pairs, both axes, both orderings.
    assert_eq!(pairs, 2 * 2 * 8 * 7);
}

#[test]
fn qpsk_reference_points() {
    let c = make_constellation(2).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut expected = vec![
        Complex64::new(s, s),
        Complex64::new(s, -s),
        Complex64::new(-s, s),
        Complex64::new(-s, -s),
    ];
    let mut got = c.points().to_vec();
    let key = |z: &Complex64| (z.re.to_bits(), z.im.to_bits());
    expected.sort_by_key(key);
    got.sort_by_key(key);
    assert_eq!(got, expected);
}

#[test]
fn bit_probability_stable_for_huge_llrs() {
    assert_eq!(bit_prob_one(800.0).unwrap(), 0.0);
    assert_eq!(bit_prob_one(-800.0).unwrap(), 1.0);
    assert!((bit_prob_one(3f64.ln()).unwrap() - 0.25).abs() < 1e-15);
}
