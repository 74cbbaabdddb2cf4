//! The composed code: slow-stage blocks copied across time with a fast-stage
//! Arıkan transform per slow position, the successive-cancellation trellis
//! decoder, brute-force posterior oracles, and genie-aided estimators.

use std::collections::BTreeMap;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contraction::{NonnegMatrix, NonnegVector, ScaledMatrix};
use crate::faststage::arikan;
use crate::process::FaimModel;
use crate::slowstage::{bst_forward, bst_inverse, make_plan, BstPlan, IndexClass, SlowStageError};
use crate::util::{child_seed, mean_stderr};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("length {got} does not match expected {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("enumeration space too large: {0}")]
    TooLarge(String),
    #[error("invalid code spec: {0}")]
    BadSpec(String),
    #[error("conditioning event has probability zero")]
    ImpossibleEvidence,
    #[error("index {0} is not medial")]
    NotMedial(usize),
    #[error(transparent)]
    Slow(#[from] SlowStageError),
}

/// Which medial side carries the code: `Low` targets the positions whose
/// conditional entropy drifts down (channel coding), `High` the ones drifting
/// up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSide {
    Low,
    High,
}

/// Full code description: a slow-stage plan, `2^nhat` copies combined by the
/// fast stage, and per-target-position frozen sets. Positions absent from
/// `designs` (laterals and the whole non-target side) are fully frozen.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    pub plan: BstPlan,
    pub nhat: usize,
    pub target_side: TargetSide,
    /// Frozen fast-stage indices (0-based, sorted) per target slow position.
    pub designs: BTreeMap<usize, Vec<usize>>,
    pub frozen_fill: u8,
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    l0: usize,
    m0: usize,
    n: usize,
    nhat: usize,
    target_side: TargetSide,
    frozen: Vec<(usize, Vec<usize>)>,
    frozen_fill: u8,
}

impl CodeSpec {
    /// Applies the same frozen set to every medial position of the target
    /// side — the universal design, where one bound recursion serves all
    /// positions.
    pub fn uniform(
        plan: BstPlan,
        nhat: usize,
        target_side: TargetSide,
        frozen: Vec<usize>,
    ) -> Result<Self, CodecError> {
        let nhat_len = 1usize << nhat;
        let mut sorted = frozen;
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.iter().any(|&k| k >= nhat_len) {
            return Err(CodecError::BadSpec("frozen index out of range".into()));
        }
        let want = match target_side {
            TargetSide::Low => IndexClass::MedPlus,
            TargetSide::High => IndexClass::MedMinus,
        };
        let mut designs = BTreeMap::new();
        for i in plan.medial_indices() {
            if plan.classify(plan.n, i) == want {
                designs.insert(i, sorted.clone());
            }
        }
        Ok(CodeSpec { plan, nhat, target_side, designs, frozen_fill: 0 })
    }

    pub fn copies(&self) -> usize {
        1usize << self.nhat
    }

    pub fn total_len(&self) -> usize {
        self.plan.block_len() * self.copies()
    }

    pub fn message_len(&self) -> usize {
        self.designs.values().map(|f| self.copies() - f.len()).sum()
    }

    pub fn rate(&self) -> f64 {
        self.message_len() as f64 / self.total_len() as f64
    }

    pub fn is_unfrozen(&self, slow: usize, fast: usize) -> bool {
        match self.designs.get(&slow) {
            Some(frozen) => frozen.binary_search(&fast).is_err(),
            None => false,
        }
    }

    pub fn to_json(&self) -> String {
        let file = SpecFile {
            l0: self.plan.l0,
            m0: self.plan.m0,
            n: self.plan.n,
            nhat: self.nhat,
            target_side: self.target_side,
            frozen: self.designs.iter().map(|(k, v)| (*k, v.clone())).collect(),
            frozen_fill: self.frozen_fill,
        };
        serde_json::to_string_pretty(&file).expect("spec serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, CodecError> {
        let file: SpecFile =
            serde_json::from_str(text).map_err(|e| CodecError::BadSpec(e.to_string()))?;
        let plan = make_plan(file.l0, file.m0, file.n)?;
        let nhat_len = 1usize << file.nhat;
        let mut designs = BTreeMap::new();
        for (i, mut frozen) in file.frozen {
            if !plan.is_medial(plan.n, i) {
                return Err(CodecError::BadSpec(format!("design position {i} is not medial")));
            }
            frozen.sort_unstable();
            frozen.dedup();
            if frozen.iter().any(|&k| k >= nhat_len) {
                return Err(CodecError::BadSpec("frozen index out of range".into()));
            }
            designs.insert(i, frozen);
        }
        Ok(CodeSpec {
            plan,
            nhat: file.nhat,
            target_side: file.target_side,
            designs,
            frozen_fill: file.frozen_fill,
        })
    }
}

/// Encodes a message: unfrozen fast-stage slots (lexicographic in slow
/// position, then fast index) carry the message, everything else takes the
/// fill value; each fast transform and each slow block is then inverted.
pub fn encode(spec: &CodeSpec, message: &[u8]) -> Result<Vec<u8>, CodecError> {
    if message.len() != spec.message_len() {
        return Err(CodecError::LengthMismatch { got: message.len(), want: spec.message_len() });
    }
    let n = spec.plan.block_len();
    let copies = spec.copies();
    let mut msg = message.iter();
    let mut f_cols: Vec<Vec<u8>> = vec![Vec::with_capacity(n); copies];
    for j in 1..=n {
        let mut u = vec![spec.frozen_fill; copies];
        if spec.designs.contains_key(&j) {
            for (k, slot) in u.iter_mut().enumerate() {
                if spec.is_unfrozen(j, k) {
                    *slot = *msg.next().expect("message length checked");
                }
            }
        }
        let v = arikan(&u).expect("copies is a power of two");
        for (t, col) in f_cols.iter_mut().enumerate() {
            col.push(v[t]);
        }
    }
    let mut x = Vec::with_capacity(spec.total_len());
    for col in &f_cols {
        x.extend(bst_inverse(&spec.plan, col)?);
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Trellis machinery: per-copy slow-stage nodes with matrix beliefs.
// ---------------------------------------------------------------------------

/// Level-0 segment: one base block with its received observations. Tracks the
/// product of decided steps and precomputed marginalized suffixes, so the
/// belief of the next bit is three matrix products.
struct LeafBlock {
    step: Vec<[NonnegMatrix; 2]>,
    /// `suffix[d]` = marginalized product of steps `d+1..n0`; `suffix[n0]` is
    /// the identity.
    suffix: Vec<ScaledMatrix>,
    prefix: ScaledMatrix,
    decided: usize,
}

impl LeafBlock {
    fn new(model: &FaimModel, y: &[usize]) -> Self {
        let n0 = y.len();
        let dim = model.state_count();
        let step: Vec<[NonnegMatrix; 2]> = y
            .iter()
            .map(|&ys| {
                [model.step_matrix(Some(0), Some(ys)), model.step_matrix(Some(1), Some(ys))]
            })
            .collect();
        let mut suffix = vec![ScaledMatrix::identity(dim); n0 + 1];
        for t in (0..n0).rev() {
            let marg = step[t][0].add(&step[t][1]);
            suffix[t] = ScaledMatrix::new(marg).matmul_scaled(&suffix[t + 1]);
        }
        LeafBlock { step, suffix, prefix: ScaledMatrix::identity(dim), decided: 0 }
    }

    fn query(&self, i: usize) -> [ScaledMatrix; 2] {
        assert_eq!(i, self.decided + 1, "bits must be queried in order");
        [0, 1].map(|b| {
            self.prefix.matmul(&self.step[i - 1][b]).matmul_scaled(&self.suffix[i])
        })
    }

    fn decide(&mut self, i: usize, bit: u8) {
        assert_eq!(i, self.decided + 1, "bits must be decided in order");
        self.prefix = self.prefix.matmul(&self.step[i - 1][bit as usize]);
        self.decided += 1;
    }

    fn evidence(&self) -> ScaledMatrix {
        self.prefix.matmul_scaled(&self.suffix[self.decided])
    }
}

/// A slow-stage segment decoder: answers belief queries for its transformed
/// bits in index order, absorbs decisions, and reports its total evidence as
/// a boundary-state matrix.
enum MatNode {
    Leaf(LeafBlock),
    Inner {
        level: usize,
        u: Box<MatNode>,
        v: Box<MatNode>,
        /// A decided combined bit whose passthrough partner is still open:
        /// `(pair index j, xor value)`.
        pending: Option<(usize, u8)>,
    },
}

impl MatNode {
    fn build(plan: &BstPlan, model: &FaimModel, level: usize, y: &[usize]) -> MatNode {
        if level == 0 {
            return MatNode::Leaf(LeafBlock::new(model, y));
        }
        let half = y.len() / 2;
        MatNode::Inner {
            level,
            u: Box::new(MatNode::build(plan, model, level - 1, &y[..half])),
            v: Box::new(MatNode::build(plan, model, level - 1, &y[half..])),
            pending: None,
        }
    }

    /// Belief of bit `i` (the node's next undecided index) for both values.
    fn query(&self, plan: &BstPlan, i: usize) -> [ScaledMatrix; 2] {
        match self {
            MatNode::Leaf(lb) => lb.query(i),
            MatNode::Inner { level, u, v, pending } => {
                match plan.classify(*level, i) {
                    IndexClass::LatPlus | IndexClass::LatMinus => {
                        if i % 2 == 1 {
                            let ev = v.evidence(plan);
                            u.query(plan, (i + 1) / 2).map(|m| m.matmul_scaled(&ev))
                        } else {
                            let ev = u.evidence(plan);
                            v.query(plan, i / 2).map(|m| ev.matmul_scaled(&m))
                        }
                    }
                    _ if i % 2 == 0 => {
                        // Combined bit of the pair (U_{j+1}, V_j).
                        let j = i / 2;
                        let qu = u.query(plan, j + 1);
                        let qv = v.query(plan, j);
                        [
                            qu[0].matmul_scaled(&qv[0]).add(&qu[1].matmul_scaled(&qv[1])),
                            qu[0].matmul_scaled(&qv[1]).add(&qu[1].matmul_scaled(&qv[0])),
                        ]
                    }
                    _ => {
                        // Passthrough bit, conditioned on the decided xor.
                        let j = i / 2;
                        let (pj, c) = pending.expect("combined bit decided before passthrough");
                        debug_assert_eq!(pj, j);
                        let qu = u.query(plan, j + 1);
                        let qv = v.query(plan, j);
                        let c = c as usize;
                        if plan.classify(level - 1, j) == IndexClass::MedMinus {
                            [
                                qu[c].matmul_scaled(&qv[0]),
                                qu[1 ^ c].matmul_scaled(&qv[1]),
                            ]
                        } else {
                            [
                                qu[0].matmul_scaled(&qv[c]),
                                qu[1].matmul_scaled(&qv[1 ^ c]),
                            ]
                        }
                    }
                }
            }
        }
    }

    fn decide(&mut self, plan: &BstPlan, i: usize, bit: u8) {
        match self {
            MatNode::Leaf(lb) => lb.decide(i, bit),
            MatNode::Inner { level, u, v, pending } => match plan.classify(*level, i) {
                IndexClass::LatPlus | IndexClass::LatMinus => {
                    if i % 2 == 1 {
                        u.decide(plan, (i + 1) / 2, bit);
                    } else {
                        v.decide(plan, i / 2, bit);
                    }
                }
                _ if i % 2 == 0 => {
                    *pending = Some((i / 2, bit));
                }
                _ => {
                    let j = i / 2;
                    let (pj, c) = pending.take().expect("combined bit decided first");
                    debug_assert_eq!(pj, j);
                    let (ub, vb) = if plan.classify(*level - 1, j) == IndexClass::MedMinus {
                        (c ^ bit, bit)
                    } else {
                        (bit, c ^ bit)
                    };
                    u.decide(plan, j + 1, ub);
                    v.decide(plan, j, vb);
                }
            },
        }
    }

    /// Total evidence of the segment given everything decided so far, with
    /// undecided bits marginalized (respecting a pending xor constraint).
    fn evidence(&self, plan: &BstPlan) -> ScaledMatrix {
        match self {
            MatNode::Leaf(lb) => lb.evidence(),
            MatNode::Inner { u, v, pending, .. } => {
                if let Some((j, c)) = pending {
                    let qu = u.query(plan, j + 1);
                    let qv = v.query(plan, *j);
                    let c = *c as usize;
                    qu[0].matmul_scaled(&qv[c]).add(&qu[1].matmul_scaled(&qv[1 ^ c]))
                } else {
                    u.evidence(plan).matmul_scaled(&v.evidence(plan))
                }
            }
        }
    }
}

/// Fast-stage segment-tree node over a range of copies; combines per-copy
/// beliefs by matrix products that chain the boundary states.
enum FastNode {
    Leaf {
        copy: usize,
    },
    Inner {
        left: Box<FastNode>,
        right: Box<FastNode>,
        cache: Option<([ScaledMatrix; 2], [ScaledMatrix; 2])>,
        pending: Option<u8>,
    },
}

impl FastNode {
    fn build(lo: usize, hi: usize) -> FastNode {
        if hi - lo == 1 {
            FastNode::Leaf { copy: lo }
        } else {
            let mid = (lo + hi) / 2;
            FastNode::Inner {
                left: Box::new(FastNode::build(lo, mid)),
                right: Box::new(FastNode::build(mid, hi)),
                cache: None,
                pending: None,
            }
        }
    }

    fn belief(&mut self, copies: &[MatNode], plan: &BstPlan, j: usize) -> [ScaledMatrix; 2] {
        match self {
            FastNode::Leaf { copy } => copies[*copy].query(plan, j),
            FastNode::Inner { left, right, cache, pending } => {
                if cache.is_none() {
                    let l = left.belief(copies, plan, j);
                    let r = right.belief(copies, plan, j);
                    *cache = Some((l, r));
                }
                let (l, r) = cache.as_ref().unwrap();
                match pending {
                    None => [
                        l[0].matmul_scaled(&r[0]).add(&l[1].matmul_scaled(&r[1])),
                        l[0].matmul_scaled(&r[1]).add(&l[1].matmul_scaled(&r[0])),
                    ],
                    Some(c) => {
                        let c = *c as usize;
                        [l[c].matmul_scaled(&r[0]), l[1 ^ c].matmul_scaled(&r[1])]
                    }
                }
            }
        }
    }

    fn push(&mut self, copies: &mut [MatNode], plan: &BstPlan, j: usize, bit: u8) {
        match self {
            FastNode::Leaf { copy } => copies[*copy].decide(plan, j, bit),
            FastNode::Inner { left, right, cache, pending } => match pending.take() {
                None => *pending = Some(bit),
                Some(c) => {
                    left.push(copies, plan, j, c ^ bit);
                    right.push(copies, plan, j, bit);
                    *cache = None;
                }
            },
        }
    }
}

/// Stepwise decoder exposing the per-bit posteriors of the composed
/// transform, in decode order (slow position, then fast index). Callers may
/// push arbitrary bits, which makes this double as a conditional-posterior
/// oracle.
pub struct ComposedDecoder<'a> {
    spec: &'a CodeSpec,
    copies: Vec<MatNode>,
    fast: FastNode,
    pi: NonnegVector,
    slow_j: usize,
    fast_k: usize,
    u_current: Vec<u8>,
    /// Decided slow-stage bits per copy, filled as positions complete.
    pub f_cols: Vec<Vec<u8>>,
}

impl<'a> ComposedDecoder<'a> {
    pub fn new(spec: &'a CodeSpec, model: &'a FaimModel, y: &[usize]) -> Result<Self, CodecError> {
        if y.len() != spec.total_len() {
            return Err(CodecError::LengthMismatch { got: y.len(), want: spec.total_len() });
        }
        let n = spec.plan.block_len();
        let copies: Vec<MatNode> = (0..spec.copies())
            .map(|t| MatNode::build(&spec.plan, model, spec.plan.n, &y[t * n..(t + 1) * n]))
            .collect();
        Ok(ComposedDecoder {
            spec,
            copies,
            fast: FastNode::build(0, 1usize << spec.nhat),
            pi: NonnegVector::new(model.hmm().stationary().to_vec()),
            slow_j: 1,
            fast_k: 0,
            u_current: Vec::new(),
            f_cols: vec![Vec::with_capacity(n); 1usize << spec.nhat],
        })
    }

    pub fn debug_leaf_belief(&self, t: usize, j: usize) -> [ScaledMatrix; 2] {
        self.copies[t].query(&self.spec.plan, j)
    }

    /// `(slow position, fast index)` of the next bit, 1-based slow.
    pub fn position(&self) -> (usize, usize) {
        (self.slow_j, self.fast_k)
    }

    pub fn done(&self) -> bool {
        self.slow_j > self.spec.plan.block_len()
    }

    /// `P(next composed bit = 0 | everything pushed so far, y)`.
    pub fn posterior(&mut self) -> f64 {
        let bel = self.fast.belief(&self.copies, &self.spec.plan, self.slow_j);
        let lp0 = bel[0].log_weight(&self.pi);
        let lp1 = bel[1].log_weight(&self.pi);
        if lp0 == f64::NEG_INFINITY && lp1 == f64::NEG_INFINITY {
            return 0.5;
        }
        1.0 / (1.0 + (lp1 - lp0).exp())
    }

    pub fn push(&mut self, bit: u8) {
        let plan = &self.spec.plan;
        self.fast.push(&mut self.copies, plan, self.slow_j, bit);
        self.u_current.push(bit);
        self.fast_k += 1;
        if self.u_current.len() == self.spec.copies() {
            let v = arikan(&self.u_current).expect("power of two");
            for (t, col) in self.f_cols.iter_mut().enumerate() {
                col.push(v[t]);
            }
            self.u_current.clear();
            self.slow_j += 1;
            self.fast_k = 0;
            self.fast = FastNode::build(0, self.spec.copies());
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub message: Vec<u8>,
    /// `P(bit = 0 | decisions so far)` per message bit, aligned with `message`.
    pub posteriors: Vec<f64>,
    /// Estimated channel input.
    pub x_hat: Vec<u8>,
}

/// Successive-cancellation decoding: frozen bits forced to the fill value,
/// message bits decided by posterior (ties to 0).
pub fn sc_decode(
    spec: &CodeSpec,
    model: &FaimModel,
    y: &[usize],
) -> Result<DecodeResult, CodecError> {
    let mut dec = ComposedDecoder::new(spec, model, y)?;
    let mut message = Vec::with_capacity(spec.message_len());
    let mut posteriors = Vec::with_capacity(spec.message_len());
    while !dec.done() {
        let (j, k) = dec.position();
        if spec.is_unfrozen(j, k) {
            let p0 = dec.posterior();
            let bit = u8::from(p0 < 0.5);
            message.push(bit);
            posteriors.push(p0);
            dec.push(bit);
        } else {
            dec.push(spec.frozen_fill);
        }
    }
    let mut x_hat = Vec::with_capacity(spec.total_len());
    for col in &dec.f_cols {
        x_hat.extend(bst_inverse(&spec.plan, col)?);
    }
    Ok(DecodeResult { message, posteriors, x_hat })
}

// ---------------------------------------------------------------------------
// Brute-force oracles.
// ---------------------------------------------------------------------------

const ORACLE_MAX_BITS: usize = 20;

/// Exact `P(F_i = 0 | F_1^{i-1} = priors, Y = y)` on a single slow block, by
/// enumerating all channel inputs.
pub fn exact_posterior_slow(
    model: &FaimModel,
    plan: &BstPlan,
    i: usize,
    priors: &[u8],
    y: &[usize],
) -> Result<f64, CodecError> {
    let n = plan.block_len();
    if n > ORACLE_MAX_BITS {
        return Err(CodecError::TooLarge(format!("{n} input bits")));
    }
    if priors.len() != i - 1 || y.len() != n {
        return Err(CodecError::LengthMismatch { got: priors.len(), want: i - 1 });
    }
    let yc: Vec<Option<usize>> = y.iter().map(|&v| Some(v)).collect();
    let mut p = [0.0f64; 2];
    for word in 0..(1u64 << n) {
        let x: Vec<u8> = (0..n).map(|t| ((word >> t) & 1) as u8).collect();
        let f = bst_forward(plan, &x)?;
        if f[..i - 1] != *priors {
            continue;
        }
        let xc: Vec<Option<u8>> = x.iter().map(|&v| Some(v)).collect();
        p[f[i - 1] as usize] += model.window_prob(&xc, &yc);
    }
    let tot = p[0] + p[1];
    if tot <= 0.0 {
        return Err(CodecError::ImpossibleEvidence);
    }
    Ok(p[0] / tot)
}

/// Exact posterior of composed bit `idx` (0-based decode order) given the
/// composed prefix, by enumerating all channel inputs of all copies.
pub fn exact_posterior_composed(
    model: &FaimModel,
    spec: &CodeSpec,
    idx: usize,
    priors: &[u8],
    y: &[usize],
) -> Result<f64, CodecError> {
    let total = spec.total_len();
    if total > ORACLE_MAX_BITS {
        return Err(CodecError::TooLarge(format!("{total} input bits")));
    }
    if priors.len() != idx || y.len() != total {
        return Err(CodecError::LengthMismatch { got: priors.len(), want: idx });
    }
    let n = spec.plan.block_len();
    let copies = spec.copies();
    let yc: Vec<Option<usize>> = y.iter().map(|&v| Some(v)).collect();
    let mut p = [0.0f64; 2];
    'words: for word in 0..(1u64 << total) {
        let x: Vec<u8> = (0..total).map(|t| ((word >> t) & 1) as u8).collect();
        let f_cols: Vec<Vec<u8>> = (0..copies)
            .map(|t| bst_forward(&spec.plan, &x[t * n..(t + 1) * n]))
            .collect::<Result<_, _>>()?;
        let mut composed = Vec::with_capacity(total);
        for j in 0..n {
            let col: Vec<u8> = (0..copies).map(|t| f_cols[t][j]).collect();
            composed.extend(arikan(&col).expect("power of two"));
        }
        for (k, &b) in priors.iter().enumerate() {
            if composed[k] != b {
                continue 'words;
            }
        }
        let xc: Vec<Option<u8>> = x.iter().map(|&v| Some(v)).collect();
        p[composed[idx] as usize] += model.window_prob(&xc, &yc);
    }
    let tot = p[0] + p[1];
    if tot <= 0.0 {
        return Err(CodecError::ImpossibleEvidence);
    }
    Ok(p[0] / tot)
}

// ---------------------------------------------------------------------------
// Genie-aided estimators.
// ---------------------------------------------------------------------------

fn genie_posterior_true(
    model: &FaimModel,
    plan: &BstPlan,
    i: usize,
    seed: u64,
) -> (f64, f64) {
    let block = crate::process::sample_block(model, plan.block_len(), seed);
    let f = bst_forward(plan, &block.x).expect("sampled length matches");
    let mut root = MatNode::build(plan, model, plan.n, &block.y);
    for j in 1..i {
        root.decide(plan, j, f[j - 1]);
    }
    let pi = NonnegVector::new(model.hmm().stationary().to_vec());
    let bel = root.query(plan, i);
    let lp0 = bel[0].log_weight(&pi);
    let lp1 = bel[1].log_weight(&pi);
    let p0 = 1.0 / (1.0 + (lp1 - lp0).exp());
    let p_true = if f[i - 1] == 0 { p0 } else { 1.0 - p0 };
    (p_true, p0)
}

/// Monte-Carlo plug-in estimate of `H(F_i | F_1^{i-1}, Y_1^N)` in bits, with
/// all prior bits revealed correctly. Returns `(estimate, standard_error)`.
pub fn genie_entropy(
    model: &FaimModel,
    plan: &BstPlan,
    i: usize,
    trials: usize,
    seed: u64,
) -> (f64, f64) {
    let vals: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (p_true, _) = genie_posterior_true(model, plan, i, child_seed(seed, t as u64));
            -p_true.log2()
        })
        .collect();
    mean_stderr(&vals)
}

/// Monte-Carlo estimate of the Bhattacharyya parameter
/// `2 E[sqrt(P(0|G) P(1|G))]` of the same genie-aided bit channel.
pub fn genie_bhattacharyya(
    model: &FaimModel,
    plan: &BstPlan,
    i: usize,
    trials: usize,
    seed: u64,
) -> (f64, f64) {
    let vals: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (_, p0) = genie_posterior_true(model, plan, i, child_seed(seed, t as u64));
            2.0 * (p0 * (1.0 - p0)).max(0.0).sqrt()
        })
        .collect();
    mean_stderr(&vals)
}

// ---------------------------------------------------------------------------
// Block-independent genie entropy via truncated observations.
// ---------------------------------------------------------------------------

/// Posterior of the centered bit of a stationary window given the bit prefix
/// and the full observation window, plus the true bit.
fn leaf_posterior(model: &FaimModel, x: &[u8], y: &[usize], l0: usize) -> ([f64; 2], u8) {
    let mut fwd = NonnegVector::new(model.hmm().stationary().to_vec());
    for t in 0..l0 {
        fwd = model.step_matrix(Some(x[t]), Some(y[t])).left_mul(&fwd);
    }
    let mut q = [0.0f64; 2];
    for b in 0..2u8 {
        let mut v = model.step_matrix(Some(b), Some(y[l0])).left_mul(&fwd);
        for t in (l0 + 1)..y.len() {
            v = model.step_matrix(None, Some(y[t])).left_mul(&v);
        }
        q[b as usize] = v.l1_norm();
    }
    let z = q[0] + q[1];
    ([q[0] / z, q[1] / z], x[l0])
}

fn bi_combine(
    plan: &BstPlan,
    level: usize,
    i: usize,
    leaves: &[([f64; 2], u8)],
) -> ([f64; 2], u8) {
    if level == 0 {
        return leaves[0];
    }
    let j = i / 2;
    let half = leaves.len() / 2;
    let (qu, bu) = bi_combine(plan, level - 1, j + 1, &leaves[..half]);
    let (qv, bv) = bi_combine(plan, level - 1, j, &leaves[half..]);
    if i % 2 == 0 {
        let q = [qu[0] * qv[0] + qu[1] * qv[1], qu[0] * qv[1] + qu[1] * qv[0]];
        (q, bu ^ bv)
    } else {
        let c = (bu ^ bv) as usize;
        let (raw, bit) = if plan.classify(level - 1, j) == IndexClass::MedMinus {
            ([qu[c] * qv[0], qu[1 ^ c] * qv[1]], bv)
        } else {
            ([qu[0] * qv[c], qu[1] * qv[1 ^ c]], bu)
        };
        let z = raw[0] + raw[1];
        ([raw[0] / z, raw[1] / z], bit)
    }
}

/// Monte-Carlo plug-in estimate of the truncated-observation conditional
/// entropy of medial index `i` on the block-independent process: leaves are
/// independent stationary windows, combined with genie-revealed sibling bits.
/// Returns `(estimate, standard_error)`.
pub fn bi_genie_entropy(
    model: &FaimModel,
    plan: &BstPlan,
    i: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64), CodecError> {
    if !plan.is_medial(plan.n, i) {
        return Err(CodecError::NotMedial(i));
    }
    let leaf_count = 1usize << plan.n;
    let w = 2 * plan.l0 + 1;
    let vals: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ts = child_seed(seed, t as u64);
            let leaves: Vec<([f64; 2], u8)> = (0..leaf_count)
                .map(|l| {
                    let block =
                        crate::process::sample_block(model, w, child_seed(ts, l as u64));
                    leaf_posterior(model, &block.x, &block.y, plan.l0)
                })
                .collect();
            let (q, bit) = bi_combine(plan, plan.n, i, &leaves);
            -q[bit as usize].log2()
        })
        .collect();
    Ok(mean_stderr(&vals))
}

// ---------------------------------------------------------------------------
// Exact small-scale entropies.
// ---------------------------------------------------------------------------

fn entropy_of_map(map: &HashMap<(u64, u64), f64>) -> f64 {
    map.values().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// Exact `H(F_i | F_1^{i-1}, Y_1^N)` for every index of a small slow block,
/// by full enumeration of `(x, y)`.
pub fn exact_chain_entropies(
    model: &FaimModel,
    plan: &BstPlan,
) -> Result<Vec<f64>, CodecError> {
    let n = plan.block_len();
    let space = 2f64.powi(n as i32) * (model.y_count() as f64).powi(n as i32);
    if space > 2e7 {
        return Err(CodecError::TooLarge(format!("{space:.0} joint realizations")));
    }
    let mut maps: Vec<HashMap<(u64, u64), f64>> = vec![HashMap::new(); n + 1];
    let y_count = model.y_count();
    for word in 0..(1u64 << n) {
        let x: Vec<u8> = (0..n).map(|t| ((word >> t) & 1) as u8).collect();
        let f = bst_forward(plan, &x)?;
        let mut yv = vec![0usize; n];
        loop {
            let xc: Vec<Option<u8>> = x.iter().map(|&v| Some(v)).collect();
            let yc: Vec<Option<usize>> = yv.iter().map(|&v| Some(v)).collect();
            let p = model.window_prob(&xc, &yc);
            if p > 0.0 {
                let ykey = yv.iter().fold(0u64, |acc, &d| acc * y_count as u64 + d as u64);
                for (i, map) in maps.iter_mut().enumerate() {
                    let fkey = f[..i].iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
                    *map.entry((fkey, ykey)).or_insert(0.0) += p;
                }
            }
            // Next observation word.
            let mut pos = n;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                yv[pos] += 1;
                if yv[pos] < y_count {
                    break;
                }
                yv[pos] = 0;
            }
            if yv.iter().all(|&d| d == 0) {
                break;
            }
        }
    }
    let h: Vec<f64> = maps.iter().map(entropy_of_map).collect();
    Ok((1..=n).map(|i| h[i] - h[i - 1]).collect())
}

/// Exact `H(X_1^N | Y_1^N)` by direct enumeration (no transform involved).
pub fn exact_conditional_block_entropy(
    model: &FaimModel,
    n: usize,
) -> Result<f64, CodecError> {
    let space = 2f64.powi(n as i32) * (model.y_count() as f64).powi(n as i32);
    if space > 2e7 {
        return Err(CodecError::TooLarge(format!("{space:.0} joint realizations")));
    }
    let y_count = model.y_count();
    let mut h = 0.0;
    let mut yv = vec![0usize; n];
    loop {
        let yc: Vec<Option<usize>> = yv.iter().map(|&v| Some(v)).collect();
        let p_y = model.window_prob(&vec![None; n], &yc);
        if p_y > 0.0 {
            for word in 0..(1u64 << n) {
                let xc: Vec<Option<u8>> =
                    (0..n).map(|t| Some(((word >> t) & 1) as u8)).collect();
                let p = model.window_prob(&xc, &yc);
                if p > 0.0 {
                    h += p * (p_y / p).log2();
                }
            }
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(h);
            }
            pos -= 1;
            yv[pos] += 1;
            if yv[pos] < y_count {
                break;
            }
            yv[pos] = 0;
        }
    }
}
