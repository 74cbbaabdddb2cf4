use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use upolar::codec::*;
use upolar::hmm::GilbertElliott;
use upolar::process::{bsc_model, gilbert_elliott_model, sample_block, transmit, FaimModel};
use upolar::slowstage::{bst_forward, envelope, make_plan};
use upolar::util::h2;

fn ge_noisy() -> FaimModel {
    gilbert_elliott_model(&GilbertElliott { p: 0.1, q: 0.2, gamma: 0.05, beta: 0.3 })
}

fn ge_clean() -> FaimModel {
    gilbert_elliott_model(&GilbertElliott { p: 0.1, q: 0.2, gamma: 0.0, beta: 0.0 })
}

/// Observation index whose label equals the given bit, for echo channels.
fn y_of_bit(m: &FaimModel, b: u8) -> usize {
    m.y_labels().iter().position(|l| *l == b.to_string()).unwrap()
}

#[test]
fn spec_construction() {
    // Plan (0,4,1): length 8, laterals {1, 8}, combined (minus) {2,4,6},
    // passthrough (plus) {3,5,7}.
    let plan = make_plan(0, 4, 1).unwrap();
    let spec = CodeSpec::uniform(plan.clone(), 2, TargetSide::Low, vec![1, 0]).unwrap();
    assert_eq!(spec.copies(), 4);
    assert_eq!(spec.total_len(), 32);
    assert_eq!(spec.designs.keys().copied().collect::<Vec<_>>(), vec![3, 5, 7]);
    assert_eq!(spec.message_len(), 6);
    assert!((spec.rate() - 6.0 / 32.0).abs() < 1e-15);
    assert!(spec.is_unfrozen(3, 2) && spec.is_unfrozen(3, 3));
    assert!(!spec.is_unfrozen(3, 0) && !spec.is_unfrozen(3, 1));
    // Laterals and the other side are entirely frozen.
    assert!(!spec.is_unfrozen(1, 2));
    assert!(!spec.is_unfrozen(2, 2));

    let high = CodeSpec::uniform(plan.clone(), 2, TargetSide::High, vec![]).unwrap();
    assert_eq!(high.designs.keys().copied().collect::<Vec<_>>(), vec![2, 4, 6]);

    assert!(CodeSpec::uniform(plan, 2, TargetSide::Low, vec![4]).is_err());
}

#[test]
fn spec_json_roundtrip() {
    let plan = make_plan(0, 4, 1).unwrap();
    let spec = CodeSpec::uniform(plan, 2, TargetSide::Low, vec![0, 2]).unwrap();
    let back = CodeSpec::from_json(&spec.to_json()).unwrap();
    assert_eq!(back.nhat, spec.nhat);
    assert_eq!(back.target_side, spec.target_side);
    assert_eq!(back.designs, spec.designs);
    assert_eq!(back.frozen_fill, spec.frozen_fill);
    assert_eq!(back.plan.block_len(), spec.plan.block_len());

    // Designs on non-medial positions are rejected.
    let bad = r#"{"l0":0,"m0":4,"n":1,"nhat":1,"target_side":"low",
                  "frozen":[[1,[0]]],"frozen_fill":0}"#;
    assert!(matches!(CodeSpec::from_json(bad), Err(CodecError::BadSpec(_))));
}

#[test]
fn encode_layouts() {
    let plan = make_plan(0, 4, 1).unwrap();
    // Fully frozen code with zero fill emits the all-zero word.
    let frozen = CodeSpec::uniform(plan.clone(), 2, TargetSide::Low, (0..4).collect()).unwrap();
    assert_eq!(frozen.message_len(), 0);
    assert_eq!(encode(&frozen, &[]).unwrap(), vec![0u8; 32]);

    // Wrong message length is rejected.
    let spec = CodeSpec::uniform(plan.clone(), 2, TargetSide::Low, vec![0]).unwrap();
    assert!(encode(&spec, &[0]).is_err());

    // Single-copy code: the forward transform of the codeword is the frozen
    // fill everywhere except the message positions.
    let single = CodeSpec::uniform(plan.clone(), 0, TargetSide::Low, vec![]).unwrap();
    assert_eq!(single.message_len(), 3);
    let x = encode(&single, &[1, 0, 1]).unwrap();
    let f = bst_forward(&plan, &x).unwrap();
    assert_eq!(f, vec![0, 0, 1, 0, 0, 0, 1, 0]);
}

#[test]
fn encode_roundtrip_through_forward_transforms() {
    let plan = make_plan(0, 4, 1).unwrap();
    let spec = CodeSpec::uniform(plan.clone(), 2, TargetSide::Low, vec![0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let message: Vec<u8> = (0..spec.message_len()).map(|_| rng.gen_range(0..2u8)).collect();
        let x = encode(&spec, &message).unwrap();
        assert_eq!(x.len(), spec.total_len());
        // Undo the slow stage per copy, then the fast stage per position.
        let n = plan.block_len();
        let cols: Vec<Vec<u8>> = (0..spec.copies())
            .map(|t| bst_forward(&plan, &x[t * n..(t + 1) * n]).unwrap())
            .collect();
        let mut msg = Vec::new();
        for j in 1..=n {
            let v: Vec<u8> = cols.iter().map(|c| c[j - 1]).collect();
            let u = upolar::faststage::arikan(&v).unwrap();
            for (k, &b) in u.iter().enumerate() {
                if spec.is_unfrozen(j, k) {
                    msg.push(b);
                } else {
                    assert_eq!(b, spec.frozen_fill, "frozen slot ({j},{k}) disturbed");
                }
            }
        }
        assert_eq!(msg, message);
    }
}

#[test]
fn noiseless_decoding_is_exact() {
    let model = ge_clean();
    let plan = make_plan(0, 4, 1).unwrap();
    let spec = CodeSpec::uniform(plan, 2, TargetSide::Low, vec![0, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let message: Vec<u8> = (0..spec.message_len()).map(|_| rng.gen_range(0..2u8)).collect();
        let x = encode(&spec, &message).unwrap();
        let y: Vec<usize> = x.iter().map(|&b| y_of_bit(&model, b)).collect();
        let out = sc_decode(&spec, &model, &y).unwrap();
        assert_eq!(out.message, message);
        assert_eq!(out.x_hat, x);
        for p in &out.posteriors {
            assert!(*p < 1e-9 || *p > 1.0 - 1e-9, "posterior {p} not degenerate");
        }
    }
}

#[test]
fn slow_stage_posteriors_match_the_oracle() {
    // Single block, no fast stage: the trellis posterior at every position
    // must equal the brute-force enumeration, for arbitrary forced prefixes.
    let model = ge_noisy();
    let plan = make_plan(0, 4, 1).unwrap();
    let spec = CodeSpec::uniform(plan.clone(), 0, TargetSide::Low, vec![]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..10u64 {
        let y = sample_block(&model, plan.block_len(), 100 + trial).y;
        let mut dec = ComposedDecoder::new(&spec, &model, &y).unwrap();
        let mut priors = Vec::new();
        while !dec.done() {
            let (j, _) = dec.position();
            let p_dec = dec.posterior();
            let p_oracle = exact_posterior_slow(&model, &plan, j, &priors, &y).unwrap();
            assert!((p_dec - p_oracle).abs() < 1e-9, "j={j}: {p_dec} vs {p_oracle}");
            let bit = rng.gen_range(0..2u8);
            priors.push(bit);
            dec.push(bit);
        }
    }
}

#[test]
fn composed_posteriors_match_the_oracle() {
    // Small composed instances spanning copies 1, 2, 4 at block lengths 4
    // and 8, two-state and eight-state models.
    let cases: [(FaimModel, usize, usize, usize); 4] = [
        (bsc_model(0.12), 0, 2, 0),
        (bsc_model(0.12), 0, 0, 2),
        (ge_noisy(), 0, 0, 1),
        (ge_noisy(), 0, 0, 2),
    ];
    for (case, (model, l0, n, nhat)) in cases.into_iter().enumerate() {
        let plan = make_plan(l0, 4, n).unwrap();
        let spec = CodeSpec::uniform(plan.clone(), nhat, TargetSide::Low, vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(777 + case as u64);
        let y = sample_block(&model, spec.total_len(), 31 + case as u64).y;
        let mut dec = ComposedDecoder::new(&spec, &model, &y).unwrap();
        let mut priors = Vec::new();
        while !dec.done() {
            let idx = priors.len();
            let p_dec = dec.posterior();
            let p_oracle = exact_posterior_composed(&model, &spec, idx, &priors, &y).unwrap();
            assert!(
                (p_dec - p_oracle).abs() < 1e-9,
                "case {case} idx {idx}: {p_dec} vs {p_oracle}"
            );
            let bit = rng.gen_range(0..2u8);
            priors.push(bit);
            dec.push(bit);
        }
    }
}

#[test]
fn memoryless_minus_combination_law() {
    // At the first combined position of a level-1 block over a memoryless
    // channel, the posterior follows the xor-convolution of the per-bit
    // posteriors.
    let p = 0.15;
    let model = bsc_model(p);
    let plan = make_plan(0, 4, 1).unwrap();
    // F_2 = X_2 xor X_5; F_1 = X_1.
    for (y2, y5) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
        let y = vec![0, y2, 0, 0, y5, 0, 0, 0];
        let post = exact_posterior_slow(&model, &plan, 2, &[0], &y).unwrap();
        // P(xor = 0) when both bits are read off their own observations.
        let want = if y2 == y5 {
            (1.0 - p) * (1.0 - p) + p * p
        } else {
            2.0 * p * (1.0 - p)
        };
        assert!((post - want).abs() < 1e-12, "y2={y2} y5={y5}: {post} vs {want}");
    }
}

#[test]
fn uniform_channel_posteriors_are_flat() {
    // Crossover 1/2 disconnects y from x: every posterior is exactly 1/2.
    let model = bsc_model(0.5);
    let plan = make_plan(0, 4, 1).unwrap();
    let y = vec![0, 1, 1, 0, 1, 0, 0, 1];
    let mut priors = Vec::new();
    for i in 1..=8 {
        let post = exact_posterior_slow(&model, &plan, i, &priors, &y).unwrap();
        assert!((post - 0.5).abs() < 1e-12, "i={i}: {post}");
        priors.push((i % 2) as u8);
    }
}

#[test]
fn chain_rule_ties_transform_entropies_to_the_block() {
    let model = bsc_model(0.1);
    let plan = make_plan(0, 4, 1).unwrap();
    let chain = exact_chain_entropies(&model, &plan).unwrap();
    assert_eq!(chain.len(), 8);
    for h in &chain {
        assert!(*h >= -1e-12 && *h <= 1.0 + 1e-12);
    }
    let total: f64 = chain.iter().sum();
    let block = exact_conditional_block_entropy(&model, 8).unwrap();
    assert!((total - block).abs() < 1e-9, "{total} vs {block}");
    // Memoryless: the block entropy is just 8 copies of the bit entropy.
    assert!((block - 8.0 * h2(0.1)).abs() < 1e-9);
    // The transform polarizes: combined positions sit above passthroughs.
    assert!(chain[1] > chain[2] && chain[3] > chain[4] && chain[5] > chain[6]);
}

#[test]
fn genie_entropy_matches_exact_chain() {
    let model = ge_noisy();
    let plan = make_plan(0, 4, 0).unwrap();
    let chain = exact_chain_entropies(&model, &plan).unwrap();
    for i in [1usize, 3] {
        let (est, se) = genie_entropy(&model, &plan, i, 4000, 50 + i as u64);
        assert!(
            (est - chain[i - 1]).abs() < 4.0 * se + 1e-9,
            "i={i}: {est} vs {} (se {se})",
            chain[i - 1]
        );
    }
}

#[test]
fn genie_estimator_closed_forms() {
    let p = 0.1;
    let bsc = bsc_model(p);
    let plan0 = make_plan(0, 4, 0).unwrap();
    // Identity transform over a memoryless channel: bit entropy h2(p).
    let (e, se) = genie_entropy(&bsc, &plan0, 1, 4000, 9);
    assert!((e - h2(p)).abs() < 4.0 * se, "{e} vs {}", h2(p));
    // Bhattacharyya of a BSC.
    let (z, zse) = genie_bhattacharyya(&bsc, &plan0, 1, 4000, 10);
    let want = 2.0 * (p * (1.0 - p)).sqrt();
    assert!((z - want).abs() < 4.0 * zse + 1e-9, "{z} vs {want}");
    // Uniform channel: posteriors always 1/2, Bhattacharyya exactly 1.
    let (z_flat, _) = genie_bhattacharyya(&bsc_model(0.5), &plan0, 1, 200, 11);
    assert!((z_flat - 1.0).abs() < 1e-12);
    // Noiseless channel: everything is determined.
    let clean = ge_clean();
    let (e0, _) = genie_entropy(&clean, &plan0, 1, 200, 12);
    assert!(e0.abs() < 1e-9);
    let (z0, _) = genie_bhattacharyya(&clean, &plan0, 1, 200, 13);
    assert!(z0.abs() < 1e-9);
}

#[test]
fn genie_pair_identity_and_ordering() {
    // One split over a memoryless channel: the combined/passthrough pair
    // shares 2 h2(p) of entropy, with the combined side on top.
    let p = 0.1;
    let model = bsc_model(p);
    let plan = make_plan(0, 4, 1).unwrap();
    let trials = 20_000;
    let (e_minus, s_minus) = genie_entropy(&model, &plan, 2, trials, 17);
    let (e_plus, s_plus) = genie_entropy(&model, &plan, 3, trials, 17);
    let s = (s_minus * s_minus + s_plus * s_plus).sqrt();
    assert!((e_minus + e_plus - 2.0 * h2(p)).abs() < 3.0 * s, "{e_minus}+{e_plus}");
    assert!(e_minus > e_plus + 3.0 * s, "no separation: {e_minus} vs {e_plus}");
    // Exact values for the memoryless case: h2(p*p) and the complement.
    let pp = 2.0 * p * (1.0 - p);
    assert!((e_minus - h2(pp)).abs() < 4.0 * s_minus);
}

#[test]
fn block_independent_genie_estimates() {
    let p = 0.1;
    let model = bsc_model(p);
    let plan = make_plan(0, 4, 1).unwrap();
    assert!(matches!(
        bi_genie_entropy(&model, &plan, 1, 10, 0),
        Err(CodecError::NotMedial(1))
    ));
    let trials = 20_000;
    let (e_minus, s_minus) = bi_genie_entropy(&model, &plan, 2, trials, 19).unwrap();
    let (e_plus, s_plus) = bi_genie_entropy(&model, &plan, 3, trials, 19).unwrap();
    // Memoryless: the block-independent surrogate IS the process, so the
    // single-split envelope brackets the two estimates.
    let env = envelope(h2(p), 1);
    let (lo_m, hi_m) = env.med_minus_bracket(1);
    let (lo_p, hi_p) = env.med_plus_bracket(1);
    assert!(e_minus > lo_m - 3.0 * s_minus && e_minus < hi_m + 3.0 * s_minus, "{e_minus} vs [{lo_m},{hi_m}]");
    assert!(e_plus > lo_p - 3.0 * s_plus && e_plus < hi_p + 3.0 * s_plus, "{e_plus} vs [{lo_p},{hi_p}]");
    // Pair sum conserves the window entropy.
    let s = (s_minus * s_minus + s_plus * s_plus).sqrt();
    assert!((e_minus + e_plus - 2.0 * h2(p)).abs() < 3.0 * s);
}

#[test]
fn freezing_more_positions_never_hurts() {
    // Matched seeds: a code that keeps only the better half of the message
    // slots makes no more block errors than the fuller code.
    let model = ge_noisy();
    let plan = make_plan(0, 4, 1).unwrap();
    let loose = CodeSpec::uniform(plan.clone(), 3, TargetSide::Low, vec![0, 1]).unwrap();
    let tight = CodeSpec::uniform(plan.clone(), 3, TargetSide::Low, vec![0, 1, 2, 4]).unwrap();
    let mut errs = [0usize; 2];
    let trials = 60;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + t);
        for (which, spec) in [&loose, &tight].into_iter().enumerate() {
            let message: Vec<u8> =
                (0..spec.message_len()).map(|_| rng.gen_range(0..2u8)).collect();
            let x = encode(spec, &message).unwrap();
            let y = transmit(&model, &x, 3000 + t);
            let out = sc_decode(spec, &model, &y).unwrap();
            if out.message != message {
                errs[which] += 1;
            }
        }
    }
    assert!(errs[1] <= errs[0], "tight {} vs loose {}", errs[1], errs[0]);
}
