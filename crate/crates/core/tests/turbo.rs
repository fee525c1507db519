use num_complex::Complex64;
use turboce::channel::{
    draw_channel, modulate_frame, random_info_bits, transmit, ChannelRealization, FrameConfig,
    ReceivedGrid, TxFrame,
};
use turboce::constellation::Constellation;
use turboce::estimation::EstimatorKind;
use turboce::ldpc::LdpcCode;
use turboce::rng::seeded;
use turboce::turbo::{
    demap_symbol, dft_denoise, equalize_and_demap, pilot_estimate, run_receiver,
    run_receiver_seeded, BeliefSource, ChannelEstimate, DemapMode, ReceiverConfig,
};

fn trial(cfg: &FrameConfig, code: &LdpcCode, taps: usize, noise: f64, seed: u64) -> (TxFrame, ChannelRealization, ReceivedGrid) {
    let mut rng = seeded(seed);
    let info = random_info_bits(cfg, code, &mut rng).unwrap();
    let tx = modulate_frame(cfg, code, &info, &mut rng).unwrap();
    let ch = draw_channel(cfg, taps, noise, &mut rng).unwrap();
    let grid = transmit(&tx, &ch, &mut rng).unwrap();
    (tx, ch, grid)
}

fn lse(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[test]
fn qam16_exact_llr_matches_brute_force() {
    let c = Constellation::new(4).unwrap();
    let mut rng = seeded(61);
    for _ in 0..200 {
        let z = turboce_test_cgauss(&mut rng);
        let nu: f64 = 0.05 + rand::Rng::random::<f64>(&mut rng);
        let got = demap_symbol(&c, z, nu, DemapMode::ExactLogSumExp);
        for k in 0..4 {
            let (mut zero, mut one) = (Vec::new(), Vec::new());
            for (j, q) in c.points().iter().enumerate() {
                let metric = -(z - q).norm_sqr() / nu;
                if c.label(j)[k] == 0 { zero.push(metric) } else { one.push(metric) }
            }
            let want = lse(&zero) - lse(&one);
            assert!((got[k] - want).abs() <= 1e-12 * (1.0 + want.abs()), "{} vs {want}", got[k]);
        }
    }
}

fn turboce_test_cgauss(rng: &mut turboce::rng::SimRng) -> Complex64 {
    use rand_distr::{Distribution, StandardNormal};
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

#[test]
fn qpsk_max_log_equals_exact() {
    let c = Constellation::new(2).unwrap();
    let mut rng = seeded(62);
    for _ in 0..200 {
        let z = turboce_test_cgauss(&mut rng);
        let a = demap_symbol(&c, z, 0.3, DemapMode::ExactLogSumExp);
        let b = demap_symbol(&c, z, 0.3, DemapMode::MaxLog);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn qpsk_noiseless_llr_signs_match_bits() {
    let cfg = FrameConfig { modulation_order: 2, ..FrameConfig::default() };
    let code = LdpcCode::shipped();
    let (tx, ch, grid) = trial(&cfg, &code, 4, 0.0, 63);
    let est = ChannelEstimate { n_used: ch.n_used, n_rx: ch.n_rx, h: ch.h.clone() };
    let c = Constellation::new(2).unwrap();
    let out = equalize_and_demap(&grid, &est, 0.0, &tx.layout, &c, DemapMode::MaxLog);
    for (cw, llrs) in tx.coded_bits.iter().zip(&out.codeword_llrs) {
        for (&b, &l) in cw.iter().zip(llrs) {
            assert!(l != 0.0 && (l < 0.0) == (b == 1));
        }
    }
}

#[test]
fn zero_channel_subcarrier_gives_neutral_llrs() {
    let cfg = FrameConfig::default();
    let code = LdpcCode::shipped();
    let (tx, ch, grid) = trial(&cfg, &code, 4, 0.1, 64);
    let mut est = ChannelEstimate { n_used: ch.n_used, n_rx: ch.n_rx, h: ch.h.clone() };
    for a in 0..ch.n_rx {
        est.h[3 * ch.n_rx + a] = Complex64::new(0.0, 0.0);
    }
    let c = Constellation::new(4).unwrap();
    let out = equalize_and_demap(&grid, &est, 0.1, &tx.layout, &c, DemapMode::ExactLogSumExp);
    assert_eq!(out.degenerate_subcarriers, 1);
    for (re, &(_, f)) in tx.layout.data_res.iter().enumerate() {
        for src in tx.layout.re_bits(re) {
            if let turboce::channel::BitSource::Coded { codeword, index } = *src {
                assert_eq!(out.codeword_llrs[codeword][index] == 0.0, f == 3);
            }
        }
    }
}

#[test]
fn denoising_recovers_short_channels_exactly() {
    let cfg = FrameConfig { rb_num: 2, ..FrameConfig::default() };
    let code = LdpcCode::shipped();
    for taps in 1..=6 {
        let (tx, ch, grid) = trial(&cfg, &code, taps, 0.0, 65 + taps as u64);
        let est = pilot_estimate(&grid, &tx.layout, tx.pilot_amp).unwrap();
        for a in 0..ch.n_rx {
            let row: Vec<Complex64> = (0..ch.n_used).map(|f| est.at(f, a)).collect();
            let den = dft_denoise(&row, 6);
            for (f, v) in den.iter().enumerate() {
                assert!((v - ch.at(f, a)).norm() <= 1e-10);
            }
        }
    }
}

#[test]
fn non_turbo_trace_ignores_estimator() {
    let cfg = FrameConfig::default();
    let code = LdpcCode::shipped();
    let (tx, ch, grid) = trial(&cfg, &code, 4, 0.5, 71);
    let traces: Vec<_> = EstimatorKind::ALL
        .iter()
        .map(|&k| {
            let rc = ReceiverConfig { estimator_kind: k, outer_iterations: 0, ..Default::default() };
            run_receiver(&grid, &tx, &ch, &code, &rc).unwrap()
        })
        .collect();
    assert_eq!(traces[0].records.len(), 1);
    assert!(traces.iter().all(|t| t == &traces[0]));
}

#[test]
fn noiseless_grid_decodes_for_every_estimator() {
    let cfg = FrameConfig::default();
    let code = LdpcCode::shipped();
    let (tx, ch, grid) = trial(&cfg, &code, 4, 0.0, 72);
    for kind in EstimatorKind::ALL {
        let rc = ReceiverConfig { estimator_kind: kind, outer_iterations: 2, ..Default::default() };
        let trace = run_receiver(&grid, &tx, &ch, &code, &rc).unwrap();
        assert_eq!(trace.records.len(), 3);
        assert!(trace.records.iter().all(|r| !r.frame_error), "{kind}");
        assert!(trace.records[1].channel_mse <= 1e-20, "{kind}: {}", trace.records[1].channel_mse);
    }
}

#[test]
fn oracle_beliefs_beat_pilots_on_average() {
    let cfg = FrameConfig::default();
    let code = LdpcCode::shipped();
    let rc = ReceiverConfig {
        estimator_kind: EstimatorKind::SoftParam,
        belief_source: BeliefSource::Oracle,
        ..Default::default()
    };
    let (mut pilot, mut aided) = (0.0, 0.0);
    for t in 0..500 {
        let (tx, ch, grid) = trial(&cfg, &code, 4, 0.3, 1000 + t);
        let trace = run_receiver(&grid, &tx, &ch, &code, &rc).unwrap();
        pilot += trace.records[0].channel_mse;
        aided += trace.records[1].channel_mse;
    }
    assert!(aided < pilot, "{aided} vs {pilot}");
}

#[test]
fn traces_are_deterministic() {
    let cfg = FrameConfig::default();
    let code = LdpcCode::shipped();
    let rc = ReceiverConfig {
        belief_source: BeliefSource::Corrupted { flip_prob: 0.1 },
        outer_iterations: 2,
        dft_denoise: true,
        ..Default::default()
    };
    let run = || {
        let (tx, ch, grid) = trial(&cfg, &code, 4, 0.4, 73);
        run_receiver_seeded(&grid, &tx, &ch, &code, &rc, 99).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn invalid_cutoff_is_rejected() {
    let cfg = FrameConfig::default();
    let code = LdpcCode::shipped();
    let (tx, ch, grid) = trial(&cfg, &code, 4, 0.4, 74);
    let rc = ReceiverConfig { dft_denoise: true, tap_cutoff: 13, ..Default::default() };
    assert!(run_receiver(&grid, &tx, &ch, &code, &rc).is_err());
}
