use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use turboce::harness::{wilson_interval, Z_95};
use turboce::ldpc::{load_code, LdpcCode, MinSumConfig};
use turboce::rng::seeded;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");

fn toy() -> LdpcCode {
    load_code(format!("{DATA}/toy.alist")).unwrap()
}

/// Dense parity rows of the toy code, written out by hand.
const TOY_H: [[u8; 6]; 3] = [
    [1, 0, 1, 1, 1, 0],
    [1, 1, 0, 1, 1, 1],
    [0, 1, 1, 1, 0, 1],
];

fn toy_syndrome(word: &[u8]) -> [u8; 3] {
    let mut s = [0u8; 3];
    for (r, row) in TOY_H.iter().enumerate() {
        s[r] = row.iter().zip(word).fold(0, |acc, (h, b)| acc ^ (h & b));
    }
    s
}

fn all_words() -> impl Iterator<Item = Vec<u8>> {
    (0..64u8).map(|v| (0..6).map(|i| (v >> (5 - i)) & 1).collect())
}

#[test]
fn toy_code_encodes_into_the_brute_force_null_space() {
    let code = toy();
    let codewords: Vec<Vec<u8>> = all_words().filter(|w| toy_syndrome(w) == [0; 3]).collect();
    assert_eq!(codewords.len(), 8);
    for v in 0..8u8 {
        let info: Vec<u8> = (0..3).map(|i| (v >> i) & 1).collect();
        let cw = code.encode(&info).unwrap();
        assert!(codewords.contains(&cw), "{cw:?}");
        assert_eq!(code.extract_info(&cw), info);
        assert!(code.is_codeword(&cw));
        assert_eq!(cw, code.encode(&info).unwrap());
    }
}

#[test]
fn shipped_code_dimensions_and_syndromes() {
    let code = LdpcCode::shipped();
    assert_eq!((code.n(), code.k(), code.m()), (288, 144, 144));
    assert!(code.vars().iter().all(|c| c.len() == 3));
    assert!(code.checks().iter().all(|r| r.len() == 6));
    let mut rng = seeded(31);
    for _ in 0..20 {
        let info: Vec<u8> = (0..144).map(|_| u8::from(rng.random::<bool>())).collect();
        let cw = code.encode(&info).unwrap();
        for row in code.checks() {
            assert_eq!(row.iter().fold(0, |a, &c| a ^ cw[c]), 0);
        }
    }
}

#[test]
fn truncated_and_corrupt_files_are_reported() {
    let err = load_code(format!("{DATA}/truncated.alist")).unwrap_err();
    assert!(err.to_string().contains("unexpected end of alist"), "{err}");
    let err = load_code(format!("{DATA}/corrupt.alist")).unwrap_err();
    assert!(err.to_string().contains("malformed alist"), "{err}");
}

#[test]
fn single_flip_is_corrected_to_the_ml_codeword() {
    let code = toy();
    let cfg = MinSumConfig::default();
    let codewords: Vec<Vec<u8>> = all_words().filter(|w| toy_syndrome(w) == [0; 3]).collect();
    for cw in &codewords {
        for flip in 0..6 {
            let llrs: Vec<f64> = (0..6)
                .map(|i| {
                    let mag = if i == flip { -3.0 } else { 6.0 };
                    if cw[i] == 0 { mag } else { -mag }
                })
                .collect();
            // Exhaustive ML: maximise sum of signed LLR agreement.
            let score = |w: &Vec<u8>| -> f64 {
                w.iter().zip(&llrs).map(|(&b, &l)| if b == 0 { l } else { -l }).sum()
            };
            let best = codewords
                .iter()
                .max_by(|a, b| score(a).total_cmp(&score(b)))
                .unwrap();
            let runner_up = codewords
                .iter()
                .filter(|w| *w != best)
                .map(score)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(score(best) > runner_up, "ML codeword not unique");
            assert_eq!(best, cw);

            let res = code.decode_min_sum(&llrs, &cfg);
            assert!(res.converged);
            assert_eq!(&res.hard_bits, cw);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn negating_channel_llrs_negates_posteriors(seed in any::<u64>(), iters in 1usize..30) {
        let code = LdpcCode::shipped();
        let mut rng = seeded(seed);
        let noise = Normal::new(0.0, 2.0).unwrap();
        let llrs: Vec<f64> = (0..code.n()).map(|_| noise.sample(&mut rng)).collect();
        let neg: Vec<f64> = llrs.iter().map(|l| -l).collect();
        let cfg = MinSumConfig { max_iters: iters, scale: 0.75 };
        let a = code.decode_min_sum(&llrs, &cfg);
        let b = code.decode_min_sum(&neg, &cfg);
        prop_assert_eq!(a.iterations_used, b.iterations_used);
        for (x, y) in a.posterior_llrs.iter().zip(&b.posterior_llrs) {
            prop_assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn codeword_is_a_fixed_point(seed in any::<u64>(), iters in 1usize..30, floor in 1.0..20.0f64) {
        let code = LdpcCode::shipped();
        let mut rng = seeded(seed);
        let info: Vec<u8> = (0..code.k()).map(|_| u8::from(rng.random::<bool>())).collect();
        let cw = code.encode(&info).unwrap();
        let llrs: Vec<f64> = cw
            .iter()
            .map(|&b| {
                let m = floor + rng.random_range(0.0..10.0);
                if b == 0 { m } else { -m }
            })
            .collect();
        let res = code.decode_min_sum(&llrs, &MinSumConfig { max_iters: iters, scale: 0.75 });
        prop_assert_eq!(res.hard_bits, cw);
        prop_assert!(res.converged);
    }

    #[test]
    fn hard_bits_follow_posterior_signs(seed in any::<u64>()) {
        let code = LdpcCode::shipped();
        let mut rng = seeded(seed);
        let noise = Normal::new(0.5, 1.5).unwrap();
        let llrs: Vec<f64> = (0..code.n()).map(|_| noise.sample(&mut rng)).collect();
        let res = code.decode_min_sum(&llrs, &MinSumConfig::default());
        for (b, l) in res.hard_bits.iter().zip(&res.posterior_llrs) {
            prop_assert_eq!(*b, u8::from(*l < 0.0));
        }
        if res.converged {
            prop_assert!(code.is_codeword(&res.hard_bits));
        }
    }
}

/// Frame errors of BPSK over AWGN at `ebn0_db`, all-random information.
fn bpsk_frame_errors(code: &LdpcCode, ebn0_db: f64, trials: usize, seed: u64) -> usize {
    let rate = code.k() as f64 / code.n() as f64;
    let sigma = (1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt();
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rng = seeded(seed);
    let cfg = MinSumConfig::default();
    (0..trials)
        .filter(|_| {
            let info: Vec<u8> = (0..code.k()).map(|_| u8::from(rng.random::<bool>())).collect();
            let cw = code.encode(&info).unwrap();
            let llrs: Vec<f64> = cw
                .iter()
                .map(|&b| {
                    let x = if b == 0 { 1.0 } else { -1.0 };
                    2.0 * (x + noise.sample(&mut rng)) / (sigma * sigma)
                })
                .collect();
            let res = code.decode_min_sum(&llrs, &cfg);
            code.extract_info(&res.hard_bits) != info
        })
        .count()
}

#[test]
fn fer_drops_with_two_db_more_snr() {
    let code = LdpcCode::shipped();
    let trials = 2000;
    let lo = bpsk_frame_errors(&code, 1.0, trials, 41);
    let hi = bpsk_frame_errors(&code, 3.0, trials, 42);
    let (lo_l, _) = wilson_interval(lo, trials, Z_95);
    let (_, hi_u) = wilson_interval(hi, trials, Z_95);
    assert!(hi <= lo, "{hi} > {lo}");
    assert!(hi_u < lo_l, "intervals overlap: {lo}/{trials} vs {hi}/{trials}");
}
