use super::LdpcCode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinSumConfig {
    pub max_iters: usize,
    /// Check-message normalisation factor in (0, 1].
    pub scale: f64,
}

impl Default for MinSumConfig {
    fn default() -> Self {
        Self {
            max_iters: 25,
            scale: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Channel LLR plus all incoming check messages, `ln(P(0)/P(1))`.
    pub posterior_llrs: Vec<f64>,
    /// 1 iff the posterior LLR is negative.
    pub hard_bits: Vec<u8>,
    /// All checks satisfied and no posterior LLR exactly zero.
    pub converged: bool,
    pub iterations_used: usize,
}

pub(super) fn decode(code: &LdpcCode, channel: &[f64], cfg: &MinSumConfig) -> DecodeResult {
    assert_eq!(channel.len(), code.n(), "channel LLR length");
    assert!(cfg.max_iters >= 1, "max_iters must be at least 1");
    assert!(cfg.scale > 0.0 && cfg.scale <= 1.0, "scale must lie in (0, 1]");

    let n_edges: usize = code.checks().iter().map(Vec::len).sum();
    let mut check_msgs = vec![0.0f64; n_edges];
    let mut posterior = channel.to_vec();
    let mut next = vec![0.0f64; code.n()];
    let mut incoming: Vec<f64> = Vec::new();
    let mut hard = vec![0u8; code.n()];
    let mut converged = false;
    let mut iterations_used = 0;

    for iter in 1..=cfg.max_iters {
        next.copy_from_slice(channel);
        let mut edge = 0;
        for row in code.checks() {
            // Variable-to-check messages exclude this check's previous output.
            incoming.clear();
            incoming.extend(
                row.iter()
                    .zip(&check_msgs[edge..edge + row.len()])
                    .map(|(&v, &r)| posterior[v] - r),
            );

            let mut min1 = f64::INFINITY;
            let mut min2 = f64::INFINITY;
            let mut min_idx = 0;
            let mut negative = false;
            for (i, &q) in incoming.iter().enumerate() {
                let mag = q.abs();
                if mag < min1 {
                    min2 = min1;
                    min1 = mag;
                    min_idx = i;
                } else if mag < min2 {
                    min2 = mag;
                }
                negative ^= q < 0.0;
            }

            for (i, (&v, &q)) in row.iter().zip(&incoming).enumerate() {
                let mag = if i == min_idx { min2 } else { min1 };
                let flip = negative ^ (q < 0.0);
                let msg = if flip { -cfg.scale * mag } else { cfg.scale * mag };
                check_msgs[edge + i] = msg;
                next[v] += msg;
            }
            edge += row.len();
        }
        std::mem::swap(&mut posterior, &mut next);
        iterations_used = iter;

        for (h, &l) in hard.iter_mut().zip(&posterior) {
            *h = u8::from(l < 0.0);
        }
        if code.is_codeword(&hard) && posterior.iter().all(|&l| l != 0.0) {
            converged = true;
            break;
        }
    }

    DecodeResult {
        posterior_llrs: posterior,
        hard_bits: hard,
        converged,
        iterations_used,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = super::super::tests::TOY;

    #[test]
    fn clean_zero_word_converges_in_one_iteration() {
        let code = LdpcCode::from_alist_str(TOY).unwrap();
        let res = code.decode_min_sum(&[10.0; 6], &MinSumConfig::default());
        assert!(res.converged);
        assert_eq!(res.iterations_used, 1);
        assert!(res.hard_bits.iter().all(|&b| b == 0));
    }

    #[test]
    fn zero_llrs_are_a_fixed_point() {
        let code = LdpcCode::shipped();
        let res = code.decode_min_sum(
            &vec![0.0; code.n()],
            &MinSumConfig {
                max_iters: 7,
                scale: 0.75,
            },
        );
        assert!(!res.converged);
        assert_eq!(res.iterations_used, 7);
        assert!(res.posterior_llrs.iter().all(|&l| l == 0.0));
    }
}
