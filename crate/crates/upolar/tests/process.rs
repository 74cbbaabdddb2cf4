use upolar::contraction::NonnegMatrix;
use upolar::hmm::{kaijser, GilbertElliott, HiddenMarkovModel};
use upolar::process::*;
use upolar::util::{child_seed, h2};

fn ge_noisy() -> FaimModel {
    gilbert_elliott_model(&GilbertElliott { p: 0.1, q: 0.2, gamma: 0.05, beta: 0.3 })
}

#[test]
fn label_decomposition() {
    let m = bsc_model(0.1);
    assert_eq!(m.state_count(), 4);
    assert_eq!(m.y_count(), 2);
    assert_eq!(m.y_labels(), &["0".to_string(), "1".to_string()]);
    for s in 0..4 {
        // States were built in (x, y) lexicographic order.
        assert_eq!(m.x_of_state(s), (s / 2) as u8);
        assert_eq!(m.y_of_state(s), s % 2);
    }
    // Labels must start with a bit character.
    let chain = NonnegMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
    let hmm = HiddenMarkovModel::new(chain, &["a".into(), "b".into()]).unwrap();
    assert!(matches!(FaimModel::new(hmm), Err(ProcessError::BadLabel(_))));
}

#[test]
fn memoryless_window_probabilities() {
    let p = 0.1;
    let m = bsc_model(p);
    // Single-step joint law of (X, Y).
    for x in 0..2u8 {
        for y in 0..2usize {
            let want = 0.5 * if usize::from(x) == y { 1.0 - p } else { p };
            let got = m.window_prob(&[Some(x)], &[Some(y)]);
            assert!((got - want).abs() < 1e-14, "x={x} y={y}");
        }
    }
    // Unconstrained windows have probability one.
    assert!((m.window_prob(&[None, None, None], &[None, None, None]) - 1.0).abs() < 1e-12);
    // Independence across positions for the memoryless channel.
    let one = m.window_prob(&[Some(1)], &[Some(0)]);
    let twice = m.window_prob(&[Some(1), Some(1)], &[Some(0), Some(0)]);
    assert!((twice - one * one).abs() < 1e-14);
}

#[test]
fn window_entropy_closed_forms() {
    let p = 0.1;
    let m = bsc_model(p);
    // Memoryless: the window length does not matter.
    assert!((window_entropy(&m, 0).unwrap() - h2(p)).abs() < 1e-12);
    assert!((window_entropy(&m, 2).unwrap() - h2(p)).abs() < 1e-12);
    // Noiseless channel: nothing left to guess.
    assert!(window_entropy(&bsc_model(0.0), 1).unwrap().abs() < 1e-12);
    // Burst channel with equal crossover in both states is a disguised
    // memoryless channel.
    let flat = gilbert_elliott_model(&GilbertElliott { p: 0.1, q: 0.2, gamma: 0.07, beta: 0.07 });
    assert!((window_entropy(&flat, 2).unwrap() - h2(0.07)).abs() < 1e-12);
    // A genuinely bursty channel gains from context: the conditional entropy
    // drops as the window grows.
    let m = ge_noisy();
    let h0 = window_entropy(&m, 0).unwrap();
    let h3 = window_entropy(&m, 3).unwrap();
    assert!(h3 < h0 - 1e-4, "h0={h0} h3={h3}");
    // Oversized windows are refused, not attempted.
    assert!(matches!(window_entropy(&m, 9), Err(ProcessError::TooLarge(_))));
}

#[test]
fn window_entropy_mc_agrees_with_exact() {
    let m = ge_noisy();
    let exact = window_entropy(&m, 2).unwrap();
    let (est, se) = window_entropy_mc(&m, 2, 4000, 42);
    assert!(se > 0.0);
    assert!((est - exact).abs() < 4.0 * se + 1e-6, "est={est} exact={exact} se={se}");
}

#[test]
fn sampling_is_consistent_and_deterministic() {
    let m = ge_noisy();
    let b1 = sample_block(&m, 200, 9);
    let b2 = sample_block(&m, 200, 9);
    assert_eq!(b1, b2);
    let b3 = sample_block(&m, 200, 10);
    assert_ne!(b1, b3);
    assert_eq!(b1.x.len(), 200);
    assert_eq!(b1.y.len(), 200);
    let s = b1.s.as_ref().unwrap();
    assert_eq!(s.len(), 201);
    for t in 0..200 {
        assert_eq!(b1.x[t], m.x_of_state(s[t + 1]));
        assert_eq!(b1.y[t], m.y_of_state(s[t + 1]));
    }
}

#[test]
fn sample_marginals_match_the_law() {
    let p = 0.1;
    let m = bsc_model(p);
    let n = 20_000;
    let b = sample_block(&m, n, 123);
    let mean_x = b.x.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let flips = b
        .x
        .iter()
        .zip(&b.y)
        .filter(|(&x, &y)| usize::from(x) != y)
        .count() as f64
        / n as f64;
    // 4-sigma binomial bands.
    assert!((mean_x - 0.5).abs() < 4.0 * 0.5 / (n as f64).sqrt(), "mean_x = {mean_x}");
    assert!((flips - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "flips = {flips}");
}

#[test]
fn block_independent_surrogate_reuses_per_block_seeds() {
    let m = ge_noisy();
    let bi = sample_bi_block(&m, 16, 8, 77);
    assert_eq!(bi.x.len(), 128);
    assert_eq!(bi.s.as_ref().unwrap().len(), 8 * 17);
    for t in 0..8u64 {
        let single = sample_block(&m, 16, child_seed(77, t));
        let off = 16 * t as usize;
        assert_eq!(&bi.x[off..off + 16], single.x.as_slice());
        assert_eq!(&bi.y[off..off + 16], single.y.as_slice());
    }
}

#[test]
fn burst_channel_is_certified_on_both_sides() {
    let m = ge_noisy();
    let report = forgetfulness_report(&m, 1e-3).unwrap();
    assert!(report.certified());
    assert!(report.xy_side.certificate.is_some());
    assert!(report.y_side.certificate.is_some());
    let aleph = report.recollection.unwrap();
    assert_eq!(
        aleph,
        report
            .xy_side
            .recollection
            .unwrap()
            .max(report.y_side.recollection.unwrap())
    );
    // Tighter epsilon cannot shrink the recollection.
    let tighter = forgetfulness_report(&m, 1e-6).unwrap();
    assert!(tighter.recollection.unwrap() >= aleph);
}

#[test]
fn observed_state_chain_fails_on_the_hidden_side() {
    // Fully observed state (distinct labels), but the observation-only
    // channel collapses onto the classic counterexample partition.
    let t = kaijser().transition().clone();
    let labels = ["0a", "1a", "0b", "1b"].map(String::from);
    let m = FaimModel::new(HiddenMarkovModel::new(t, &labels).unwrap()).unwrap();
    let report = forgetfulness_report(&m, 1e-2).unwrap();
    assert!(!report.certified());
    assert!(report.xy_side.certificate.is_some());
    assert!(report.y_side.certificate.is_none());
    assert!(report.y_side.definitive_none);
}

#[test]
fn counterexample_partition_fails_on_both_sides() {
    let t = kaijser().transition().clone();
    let labels = ["0a", "0a", "0b", "0b"].map(String::from);
    let m = FaimModel::new(HiddenMarkovModel::new(t, &labels).unwrap()).unwrap();
    let report = forgetfulness_report(&m, 1e-2).unwrap();
    assert!(!report.certified());
    assert!(report.xy_side.definitive_none);
    assert!(report.y_side.definitive_none);
}

#[test]
fn entropy_rate_bracketing_memoryless() {
    // The memoryless channel certifies a tiny epsilon at a tiny window, and
    // the true entropy rate h2(p) must land inside the bracket.
    let m = bsc_model(0.1);
    let eps = 1e-6;
    let report = forgetfulness_report(&m, eps).unwrap();
    let aleph = report.recollection.unwrap();
    assert!(aleph <= 6, "recollection = {aleph}");
    let (lo, hi) = entropy_rate_bracket(&m, aleph, &report).unwrap();
    let truth = h2(0.1);
    assert!(lo <= truth && truth <= hi, "[{lo}, {hi}] vs {truth}");
    assert!(hi - lo <= 4.0 * eps + 1e-12);
    // A window shorter than the recollection is refused.
    assert!(entropy_rate_bracket(&m, aleph - 1, &report).is_err());
}

#[test]
fn entropy_rate_bracketing_with_sampled_window() {
    // The burst channel's certified horizon exceeds the exact-enumeration
    // gate, exercising the Monte-Carlo fallback.
    let m = ge_noisy();
    let report = forgetfulness_report(&m, 0.05).unwrap();
    let aleph = report.recollection.unwrap();
    assert!(aleph > 8, "recollection = {aleph}");
    let (lo, hi) = entropy_rate_bracket(&m, aleph, &report).unwrap();
    assert!(0.0 <= lo && lo < hi && hi <= 1.0);
    // Window entropies shrink with context, so the short-window exact value
    // sits above the bracket's lower end.
    let h3 = window_entropy(&m, 3).unwrap();
    assert!(lo <= h3 + 1e-9, "lo = {lo} vs h3 = {h3}");
}

#[test]
fn smallest_epsilon_for_a_window() {
    let m = ge_noisy();
    let e30 = min_epsilon_for_l0(&m, 30).unwrap();
    let e45 = min_epsilon_for_l0(&m, 45).unwrap();
    assert!(e45 <= e30, "e30={e30} e45={e45}");
    // The returned value actually fits.
    let report = forgetfulness_report(&m, e30).unwrap();
    assert!(report.recollection.unwrap() <= 30);
    // An uncertifiable process yields an error, not a value.
    let t = kaijser().transition().clone();
    let labels = ["0a", "0a", "0b", "0b"].map(String::from);
    let bad = FaimModel::new(HiddenMarkovModel::new(t, &labels).unwrap()).unwrap();
    assert!(min_epsilon_for_l0(&bad, 5).is_err());
}

#[test]
fn mixing_sandwich_on_small_windows() {
    // Probabilities of events separated by a gap factorize up to the mixing
    // coefficients of the underlying chain.
    let m = ge_noisy();
    let mix = m.hmm().mixing_sequences(10);
    let left_len = 2usize;
    let gap = 3usize;
    let right_len = 2usize;
    let total = left_len + gap + right_len;
    for word in 0..(1u32 << (left_len + right_len)) {
        let mut x = vec![None; total];
        let y = vec![None; total];
        for t in 0..left_len {
            x[t] = Some(((word >> t) & 1) as u8);
        }
        for t in 0..right_len {
            x[left_len + gap + t] = Some(((word >> (left_len + t)) & 1) as u8);
        }
        let joint = m.window_prob(&x, &y);
        let p_left = m.window_prob(&x[..left_len], &y[..left_len]);
        let p_right = m.window_prob(&x[left_len + gap..], &y[left_len + gap..]);
        let prod = p_left * p_right;
        assert!(
            joint <= mix.psi[gap] * prod + 1e-12,
            "upper fails for word {word:b}: {joint} vs {}",
            mix.psi[gap] * prod
        );
        assert!(
            joint + 1e-12 >= mix.phi[gap] * prod,
            "lower fails for word {word:b}: {joint} vs {}",
            mix.phi[gap] * prod
        );
    }
}

#[test]
fn transmit_conditions_on_the_input() {
    // Noiseless channel echoes the input exactly.
    let clean = gilbert_elliott_model(&GilbertElliott { p: 0.1, q: 0.2, gamma: 0.0, beta: 0.0 });
    let x: Vec<u8> = (0..64).map(|t| (t % 3 == 0) as u8).collect();
    let y = transmit(&clean, &x, 5);
    assert_eq!(y.len(), 64);
    for (xb, ys) in x.iter().zip(&y) {
        assert_eq!(clean.y_labels()[*ys], xb.to_string());
    }
    // Noisy channel: the empirical flip rate matches the stationary average
    // crossover pi_G*gamma + pi_B*beta.
    let ge = GilbertElliott { p: 0.1, q: 0.2, gamma: 0.05, beta: 0.3 };
    let m = gilbert_elliott_model(&ge);
    let n = 40_000usize;
    let x: Vec<u8> = (0..n).map(|t| ((t * 2654435761) >> 7) as u8 & 1).collect();
    let y = transmit(&m, &x, 11);
    let flips = x
        .iter()
        .zip(&y)
        .filter(|(&xb, &ys)| m.y_labels()[ys] != xb.to_string())
        .count() as f64
        / n as f64;
    let pi_g = ge.q / (ge.p + ge.q);
    let avg = pi_g * ge.gamma + (1.0 - pi_g) * ge.beta;
    assert!((flips - avg).abs() < 4.0 * (avg * (1.0 - avg) / n as f64).sqrt(), "flips = {flips} vs {avg}");
}

#[test]
fn derived_observation_model() {
    let m = bsc_model(0.1);
    let y_hmm = m.y_side_hmm().unwrap();
    assert_eq!(y_hmm.obs_labels(), &["0".to_string(), "1".to_string()]);
    // Output marginal of the symmetric channel is uniform.
    let p0 = y_hmm.seq_prob(&[0]);
    assert!((p0 - 0.5).abs() < 1e-12);
}
