//! The basic slow transform (BST): recursive plans, index classification,
//! forward/inverse transforms, base vectors, the observation-truncated
//! variant, and the entropy-evolution envelope used to pick the number of
//! levels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::{bconv, h2, h2_inv};

#[derive(Debug, Error, PartialEq)]
pub enum SlowStageError {
    #[error("base block needs an even medial count of at least 4, got {0}")]
    BadM0(usize),
    #[error("index {index} is lateral at level {level}; operation requires a medial index")]
    LateralIndex { level: usize, index: usize },
    #[error("input length {got} does not match block length {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("threshold {0} is infeasible for this entropy")]
    InfeasibleThreshold(f64),
}

/// Classification of a position within a level-`n` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexClass {
    /// Leading lateral positions (`1..=L_n`).
    LatPlus,
    /// Trailing lateral positions (`L_n+M_n+1..=N_n`).
    LatMinus,
    /// Medial positions at odd offsets from `L_n`; entropy drifts up.
    MedMinus,
    /// Medial positions at even offsets from `L_n`; entropy drifts down.
    MedPlus,
}

impl IndexClass {
    pub fn is_medial(self) -> bool {
        matches!(self, IndexClass::MedMinus | IndexClass::MedPlus)
    }
}

/// A fully derived level-`n` transform plan.
///
/// Sizes follow `L_{k+1} = 2L_k + 1`, `M_{k+1} = 2(M_k - 1)`,
/// `N_k = 2^k (2 L_0 + M_0)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BstPlan {
    pub l0: usize,
    pub m0: usize,
    pub n: usize,
    /// `(L_k, M_k, N_k)` for `k = 0..=n`.
    sizes: Vec<(usize, usize, usize)>,
}

pub fn make_plan(l0: usize, m0: usize, n: usize) -> Result<BstPlan, SlowStageError> {
    if m0 % 2 != 0 || m0 < 4 {
        return Err(SlowStageError::BadM0(m0));
    }
    let mut sizes = Vec::with_capacity(n + 1);
    let (mut l, mut m) = (l0, m0);
    let n0 = 2 * l0 + m0;
    sizes.push((l, m, n0));
    for k in 1..=n {
        l = 2 * l + 1;
        m = 2 * (m - 1);
        if m < 2 {
            return Err(SlowStageError::BadM0(m0));
        }
        sizes.push((l, m, n0 << k));
    }
    Ok(BstPlan { l0, m0, n, sizes })
}

impl BstPlan {
    /// `(L_k, M_k, N_k)` at level `k <= n`.
    pub fn sizes(&self, level: usize) -> (usize, usize, usize) {
        self.sizes[level]
    }

    pub fn block_len(&self) -> usize {
        self.sizes[self.n].2
    }

    pub fn base_len(&self) -> usize {
        self.sizes[0].2
    }

    /// Classifies 1-based index `i` at `level`.
    pub fn classify(&self, level: usize, i: usize) -> IndexClass {
        let (l, m, nn) = self.sizes[level];
        assert!((1..=nn).contains(&i), "index out of range");
        if i <= l {
            IndexClass::LatPlus
        } else if i > l + m {
            IndexClass::LatMinus
        } else if (i - l) % 2 == 1 {
            IndexClass::MedMinus
        } else {
            IndexClass::MedPlus
        }
    }

    pub fn is_medial(&self, level: usize, i: usize) -> bool {
        self.classify(level, i).is_medial()
    }

    /// All medial indices at the top level, in order.
    pub fn medial_indices(&self) -> impl Iterator<Item = usize> {
        let (l, m, _) = self.sizes[self.n];
        (l + 1)..=(l + m)
    }

    /// Fraction of medial positions at the top level.
    pub fn medial_fraction(&self) -> f64 {
        let (_, m, nn) = self.sizes[self.n];
        m as f64 / nn as f64
    }
}

/// Smallest even `M_0` guaranteeing a medial fraction of at least `alpha` at
/// every level: `M_0 >= 2 (1 + alpha L_0) / (1 - alpha)`, rounded up to even
/// (and at least 4).
pub fn medial_fraction_min_m0(l0: usize, alpha: f64) -> usize {
    assert!(alpha > 0.0 && alpha < 1.0);
    let raw = 2.0 * (1.0 + alpha * l0 as f64) / (1.0 - alpha);
    // Tolerate rounding noise so exact-ratio inputs don't bump up a step.
    let mut m0 = (raw - 1e-9).ceil() as usize;
    if m0 % 2 == 1 {
        m0 += 1;
    }
    m0.max(4)
}

/// Applies the level-`n` transform to a full block.
pub fn bst_forward(plan: &BstPlan, x: &[u8]) -> Result<Vec<u8>, SlowStageError> {
    if x.len() != plan.block_len() {
        return Err(SlowStageError::LengthMismatch { got: x.len(), want: plan.block_len() });
    }
    Ok(forward_rec(plan, plan.n, x))
}

fn forward_rec(plan: &BstPlan, level: usize, x: &[u8]) -> Vec<u8> {
    if level == 0 {
        return x.to_vec();
    }
    let half = x.len() / 2;
    let u = forward_rec(plan, level - 1, &x[..half]);
    let v = forward_rec(plan, level - 1, &x[half..]);
    let mut f = vec![0u8; x.len()];
    for i in 1..=x.len() {
        f[i - 1] = if plan.is_medial(level, i) {
            let j = i / 2;
            if i % 2 == 0 {
                // Combined output of the pair (U_{j+1}, V_j).
                u[j] ^ v[j - 1]
            } else if plan.classify(level - 1, j) == IndexClass::MedMinus {
                v[j - 1]
            } else {
                u[j]
            }
        } else if i % 2 == 1 {
            u[(i + 1) / 2 - 1]
        } else {
            v[i / 2 - 1]
        };
    }
    f
}

/// Inverts the transform; `bst_inverse(bst_forward(x)) == x` for all `x`.
pub fn bst_inverse(plan: &BstPlan, f: &[u8]) -> Result<Vec<u8>, SlowStageError> {
    if f.len() != plan.block_len() {
        return Err(SlowStageError::LengthMismatch { got: f.len(), want: plan.block_len() });
    }
    Ok(inverse_rec(plan, plan.n, f))
}

fn inverse_rec(plan: &BstPlan, level: usize, f: &[u8]) -> Vec<u8> {
    if level == 0 {
        return f.to_vec();
    }
    let half = f.len() / 2;
    let mut u = vec![0u8; half];
    let mut v = vec![0u8; half];
    for i in 1..=f.len() {
        if !plan.is_medial(level, i) {
            if i % 2 == 1 {
                u[(i + 1) / 2 - 1] = f[i - 1];
            } else {
                v[i / 2 - 1] = f[i - 1];
            }
        }
    }
    let (lp, mp, _) = plan.sizes(level - 1);
    for j in (lp + 1)..(lp + mp) {
        let c = f[2 * j - 1]; // combined bit at index 2j
        let o = f[2 * j]; // passthrough bit at index 2j+1
        if plan.classify(level - 1, j) == IndexClass::MedMinus {
            v[j - 1] = o;
            u[j] = c ^ o;
        } else {
            u[j] = o;
            v[j - 1] = c ^ o;
        }
    }
    let mut out = inverse_rec(plan, level - 1, &u);
    out.extend(inverse_rec(plan, level - 1, &v));
    out
}

/// The level-0 ancestors of a medial index: absolute positions into the
/// length-`N_n` block, one per base block, and the per-block (modulo) form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseVector {
    /// Absolute positions `b_1..b_{2^n}`.
    pub absolute: Vec<usize>,
    /// Per-block positions `b̄_ℓ = b_ℓ - (ℓ-1) N_0`.
    pub modulo: Vec<usize>,
}

pub fn base_vector(plan: &BstPlan, i: usize) -> Result<BaseVector, SlowStageError> {
    if !plan.is_medial(plan.n, i) {
        return Err(SlowStageError::LateralIndex { level: plan.n, index: i });
    }
    let modulo = bvec_rec(plan.n, i);
    let n0 = plan.base_len();
    let absolute = modulo.iter().enumerate().map(|(l, &b)| b + l * n0).collect();
    Ok(BaseVector { absolute, modulo })
}

fn bvec_rec(level: usize, i: usize) -> Vec<usize> {
    if level == 0 {
        return vec![i];
    }
    let j = i / 2;
    let mut out = bvec_rec(level - 1, j + 1);
    out.extend(bvec_rec(level - 1, j));
    out
}

/// Absolute base positions whose inputs XOR to the transformed bit at a
/// medial index (each base block contributes at most one position).
pub fn medial_xor_support(plan: &BstPlan, i: usize) -> Result<Vec<usize>, SlowStageError> {
    if !plan.is_medial(plan.n, i) {
        return Err(SlowStageError::LateralIndex { level: plan.n, index: i });
    }
    let mut out = Vec::new();
    xor_support_rec(plan, plan.n, i, 0, &mut out);
    out.sort_unstable();
    Ok(out)
}

fn xor_support_rec(plan: &BstPlan, level: usize, i: usize, block_off: usize, out: &mut Vec<usize>) {
    if level == 0 {
        out.push(i + block_off * plan.base_len());
        return;
    }
    let j = i / 2;
    let half = 1usize << (level - 1);
    if i % 2 == 0 {
        xor_support_rec(plan, level - 1, j + 1, block_off, out);
        xor_support_rec(plan, level - 1, j, block_off + half, out);
    } else if plan.classify(level - 1, j) == IndexClass::MedMinus {
        xor_support_rec(plan, level - 1, j, block_off + half, out);
    } else {
        xor_support_rec(plan, level - 1, j + 1, block_off, out);
    }
}

/// One base block's truncated observation: the symbol-prefix and observation
/// window centered on the block's ancestor position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafWindow {
    /// `x` at positions `b-L0 ..= b` (the last entry is the symbol itself).
    pub x: Vec<u8>,
    /// `y` at positions `b-L0 ..= b+L0`.
    pub y: Vec<usize>,
}

/// The truncated observation of a medial index, in its recursive form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObsTree {
    /// Initialization: the symbol prefix (excluding the symbol itself) and
    /// the observation window of one base block.
    Leaf { x_prefix: Vec<u8>, y_window: Vec<usize> },
    /// Combined node: both halves' truncated observations.
    Pair { u: Box<ObsTree>, v: Box<ObsTree> },
    /// Passthrough node: the combined sibling's bit plus its observation.
    Guided { sibling_bit: u8, inner: Box<ObsTree> },
}

impl ObsTree {
    /// Reads back the symbol prefixes `x_{b-L0}^{b-1}` of every base block,
    /// in time order.
    pub fn recover_x_prefixes(&self) -> Vec<Vec<u8>> {
        match self {
            ObsTree::Leaf { x_prefix, .. } => vec![x_prefix.clone()],
            ObsTree::Pair { u, v } => {
                let mut out = u.recover_x_prefixes();
                out.extend(v.recover_x_prefixes());
                out
            }
            ObsTree::Guided { inner, .. } => inner.recover_x_prefixes(),
        }
    }
}

/// Evaluates the observation-truncated transform at medial index `i`:
/// returns the transformed bit and its truncated observation. `windows`
/// holds one [`LeafWindow`] per base block of the index's base vector, in
/// time order.
pub fn otbst_eval(
    plan: &BstPlan,
    i: usize,
    windows: &[LeafWindow],
) -> Result<(u8, ObsTree), SlowStageError> {
    if !plan.is_medial(plan.n, i) {
        return Err(SlowStageError::LateralIndex { level: plan.n, index: i });
    }
    let want = 1usize << plan.n;
    if windows.len() != want {
        return Err(SlowStageError::LengthMismatch { got: windows.len(), want });
    }
    Ok(otbst_rec(plan, plan.n, i, windows))
}

fn otbst_rec(plan: &BstPlan, level: usize, i: usize, windows: &[LeafWindow]) -> (u8, ObsTree) {
    if level == 0 {
        let w = &windows[0];
        let bit = *w.x.last().expect("window holds the symbol");
        let tree = ObsTree::Leaf {
            x_prefix: w.x[..w.x.len() - 1].to_vec(),
            y_window: w.y.clone(),
        };
        return (bit, tree);
    }
    let j = i / 2;
    let half = windows.len() / 2;
    let (bu, tu) = otbst_rec(plan, level - 1, j + 1, &windows[..half]);
    let (bv, tv) = otbst_rec(plan, level - 1, j, &windows[half..]);
    if i % 2 == 0 {
        (bu ^ bv, ObsTree::Pair { u: Box::new(tu), v: Box::new(tv) })
    } else {
        let sibling_bit = bu ^ bv;
        let inner = ObsTree::Pair { u: Box::new(tu), v: Box::new(tv) };
        let bit = if plan.classify(level - 1, j) == IndexClass::MedMinus { bv } else { bu };
        (bit, ObsTree::Guided { sibling_bit, inner: Box::new(inner) })
    }
}

/// Entropy-evolution envelope: per level `n`, the deviation of medial
/// entropies from the base entropy `H0` lies between `C_n` and `D_n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyEnvelope {
    pub h0: f64,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl EntropyEnvelope {
    /// `[H0 + C_n, H0 + D_n]` — the bracket for upward-drifting medial
    /// entropies at level `n`.
    pub fn med_minus_bracket(&self, n: usize) -> (f64, f64) {
        (self.h0 + self.c[n], self.h0 + self.d[n])
    }

    /// `[H0 - D_n, H0 - C_n]` — the bracket for downward-drifting medial
    /// entropies at level `n`.
    pub fn med_plus_bracket(&self, n: usize) -> (f64, f64) {
        (self.h0 - self.d[n], self.h0 - self.c[n])
    }
}

fn envelope_c_step(x: f64, y: f64) -> f64 {
    let hi = h2_inv((y + x).min(1.0));
    let lo = h2_inv((y - x).max(0.0));
    h2(bconv(hi, lo)) - y
}

fn envelope_d_step(x: f64, y: f64) -> f64 {
    y - (y + x) * (y - x)
}

/// Iterates the envelope from `C_0 = D_0 = 0` up to level `n_max`.
pub fn envelope(h0: f64, n_max: usize) -> EntropyEnvelope {
    assert!((0.0..=1.0).contains(&h0));
    let mut c = Vec::with_capacity(n_max + 1);
    let mut d = Vec::with_capacity(n_max + 1);
    c.push(0.0);
    d.push(0.0);
    for _ in 1..=n_max {
        c.push(envelope_c_step(*c.last().unwrap(), h0));
        d.push(envelope_d_step(*d.last().unwrap(), h0));
    }
    EntropyEnvelope { h0, c, d }
}

/// One-step entropy-gain floor `Delta(xi1, xi2) = h2(h2^{-1}(xi1) * h2^{-1}(xi2)) - xi2`
/// together with its analytic lower bound
/// `(1/ln 2) h2^{-1}(xi1) (1 - 2 h2^{-1}(xi2))^2`.
pub fn delta_lower(xi1: f64, xi2: f64) -> (f64, f64) {
    assert!(xi1 > 0.0 && xi1 < 1.0 && xi2 > 0.0 && xi2 < 1.0);
    let a = h2_inv(xi1);
    let b = h2_inv(xi2);
    let delta = h2(bconv(a, b)) - xi2;
    let floor = (1.0 / std::f64::consts::LN_2) * a * (1.0 - 2.0 * b) * (1.0 - 2.0 * b);
    (delta, floor)
}

/// Crude threshold level: `1 + floor((min{H0, 1-H0} - xi) / Delta(xi, 1-xi))`.
pub fn nth_crude(h0: f64, xi: f64) -> Result<usize, SlowStageError> {
    let margin = h0.min(1.0 - h0);
    if xi <= 0.0 || xi >= margin {
        return Err(SlowStageError::InfeasibleThreshold(xi));
    }
    let (delta, _) = delta_lower(xi, 1.0 - xi);
    Ok(1 + ((margin - xi) / delta).floor() as usize)
}

/// Refined threshold level: the smallest `n` with `min{H0,1-H0} - C_n <= xi`,
/// where the envelope is iterated on the folded entropy.
pub fn nth_refined(h0: f64, xi: f64) -> Result<usize, SlowStageError> {
    let margin = h0.min(1.0 - h0);
    if xi <= 0.0 || xi >= margin {
        return Err(SlowStageError::InfeasibleThreshold(xi));
    }
    let mut c = 0.0;
    for n in 0..100_000 {
        if margin - c <= xi {
            return Ok(n);
        }
        c = envelope_c_step(c, margin);
    }
    Err(SlowStageError::InfeasibleThreshold(xi))
}
