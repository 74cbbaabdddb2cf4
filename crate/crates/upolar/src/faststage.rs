//! Fast stage: the Arıkan transform, the universal Bhattacharyya-bound
//! recursion used to pick frozen sets, and the fast-polarization constants
//! `(r, η, n_a)` with their Monte-Carlo checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::{child_seed, mean_stderr};

#[derive(Debug, Error, PartialEq)]
pub enum FastStageError {
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("check window [{n_a}, {nhat}] is empty")]
    EmptyWindow { n_a: usize, nhat: usize },
}

/// The length-`2^n` transform `u ↦ u · B_N G₂^{⊗n}` over GF(2): bit reversal
/// composed with the Kronecker-power kernel. An involution.
pub fn arikan(u: &[u8]) -> Result<Vec<u8>, FastStageError> {
    if !u.len().is_power_of_two() {
        return Err(FastStageError::NotPowerOfTwo(u.len()));
    }
    Ok(arikan_rec(u))
}

fn arikan_rec(u: &[u8]) -> Vec<u8> {
    let n = u.len();
    if n == 1 {
        return u.to_vec();
    }
    let half = n / 2;
    let mut odd_xor = Vec::with_capacity(half);
    let mut even = Vec::with_capacity(half);
    for k in 0..half {
        odd_xor.push(u[2 * k] ^ u[2 * k + 1]);
        even.push(u[2 * k + 1]);
    }
    let mut out = arikan_rec(&odd_xor);
    out.extend(arikan_rec(&even));
    out
}

/// Universal Bhattacharyya-bound design: per decoder-order index, the
/// natural-log bound produced by the recursion
/// `Z̄ ↦ Z̄ + ln κ` (first/odd child) or `Z̄ ↦ 2Z̄ + ln κ` (second/even child).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZDesign {
    pub kappa: f64,
    pub nhat: usize,
    /// Unclipped `ln Z̄` per index, in decoder (bit-reversed transform) order.
    pub log_z: Vec<f64>,
}

impl ZDesign {
    /// Bound for 0-based decoder index `i`, clipped at 1.
    pub fn bound(&self, i: usize) -> f64 {
        self.log_z[i].min(0.0).exp()
    }

    pub fn bounds(&self) -> Vec<f64> {
        (0..self.log_z.len()).map(|i| self.bound(i)).collect()
    }
}

pub fn z_evolution(z0: f64, kappa: f64, nhat: usize) -> Result<ZDesign, FastStageError> {
    if !(z0 > 0.0 && z0 <= 1.0) {
        return Err(FastStageError::BadParam(format!("z0 = {z0} not in (0,1]")));
    }
    if kappa <= 1.0 {
        return Err(FastStageError::BadParam(format!("kappa = {kappa} must exceed 1")));
    }
    let lk = kappa.ln();
    let mut level = vec![z0.ln()];
    for _ in 0..nhat {
        let mut next = Vec::with_capacity(level.len() * 2);
        for &z in &level {
            next.push(z + lk); // first child: worse (linear) branch
            next.push(2.0 * z + lk); // second child: better (squaring) branch
        }
        level = next;
    }
    Ok(ZDesign { kappa, nhat, log_z: level })
}

/// Frozen/unfrozen split of the fast-stage indices (decoder order, 0-based).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrozenSelection {
    pub frozen: Vec<usize>,
    pub unfrozen: Vec<usize>,
    pub threshold: f64,
    pub rate: f64,
}

/// Unfreezes exactly the indices whose clipped bound is at most `threshold`.
pub fn select_frozen(design: &ZDesign, threshold: f64) -> FrozenSelection {
    let log_t = threshold.ln();
    let mut frozen = Vec::new();
    let mut unfrozen = Vec::new();
    for (i, &z) in design.log_z.iter().enumerate() {
        if z.min(0.0) <= log_t {
            unfrozen.push(i);
        } else {
            frozen.push(i);
        }
    }
    let rate = unfrozen.len() as f64 / design.log_z.len() as f64;
    FrozenSelection { frozen, unfrozen, threshold, rate }
}

/// Unfreezes the `k` indices with the smallest bounds (ties by index).
pub fn select_best_k(design: &ZDesign, k: usize) -> FrozenSelection {
    let mut order: Vec<usize> = (0..design.log_z.len()).collect();
    order.sort_by(|&a, &b| {
        design.log_z[a].partial_cmp(&design.log_z[b]).unwrap().then(a.cmp(&b))
    });
    let mut unfrozen: Vec<usize> = order[..k.min(order.len())].to_vec();
    unfrozen.sort_unstable();
    let unfrozen_set: std::collections::HashSet<usize> = unfrozen.iter().copied().collect();
    let frozen: Vec<usize> =
        (0..design.log_z.len()).filter(|i| !unfrozen_set.contains(i)).collect();
    let threshold = unfrozen.iter().map(|&i| design.bound(i)).fold(0.0, f64::max);
    let rate = unfrozen.len() as f64 / design.log_z.len() as f64;
    FrozenSelection { frozen, unfrozen, threshold, rate }
}

/// Fast-polarization constants: if the initial bound is at most `eta`, then
/// with probability at least `1 - delta_prime` over a uniformly random branch
/// the bound stays below `eps_a` from level `n_a` on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniversalParams {
    pub kappa: f64,
    pub delta_prime: f64,
    pub eps_a: f64,
    /// Largest root of `κ^r + (2κ)^{-r} = 2`.
    pub r: f64,
    pub zeta: f64,
    pub theta: f64,
    pub eta: f64,
    pub n_a: usize,
}

fn root_r(kappa: f64) -> f64 {
    let g = |r: f64| kappa.powf(r) + (2.0 * kappa).powf(-r) - 2.0;
    // g < 0 just right of 0 and g → ∞; bracket the unique positive root.
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 1e-12;
    debug_assert!(g(lo) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn universal_params(
    kappa: f64,
    delta_prime: f64,
    eps_a: f64,
) -> Result<UniversalParams, FastStageError> {
    if kappa <= 1.0 {
        return Err(FastStageError::BadParam(format!("kappa = {kappa} must exceed 1")));
    }
    if !(0.0..1.0).contains(&delta_prime) || delta_prime == 0.0 {
        return Err(FastStageError::BadParam("delta' must be in (0,1)".into()));
    }
    if !(0.0..1.0).contains(&eps_a) || eps_a == 0.0 {
        return Err(FastStageError::BadParam("eps_a must be in (0,1)".into()));
    }
    let r = root_r(kappa);
    let zeta = 1.0 / (2.0 * kappa * kappa);
    let theta = std::f64::consts::LN_2 / (2.0 * (2.0 * kappa * kappa).ln());
    let eta = zeta * (delta_prime / 2.0).powf(1.0 / r);
    let ln2 = std::f64::consts::LN_2;
    let a = (4.0 / ln2) * (eta.ln() - eps_a.ln());
    let b = (2.0 / (theta * theta))
        * (2.0 / (delta_prime * (1.0 - (-theta * theta / 2.0).exp()))).ln();
    let n_a = a.max(b).ceil() as usize;
    Ok(UniversalParams { kappa, delta_prime, eps_a, r, zeta, theta, eta, n_a })
}

/// Monte-Carlo check of the fast-polarization guarantee: the fraction of
/// uniformly random branch sequences whose bound exceeds `2^{-2^{βn}}` at some
/// level `n ∈ [n_a, nhat]`. Returns `(rate, standard_error)`.
pub fn fast_polarization_check(
    params: &UniversalParams,
    z0: f64,
    nhat: usize,
    beta: f64,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64), FastStageError> {
    if !(0.0..0.5).contains(&beta) || beta == 0.0 {
        return Err(FastStageError::BadParam("beta must be in (0, 1/2)".into()));
    }
    if nhat < params.n_a {
        return Err(FastStageError::EmptyWindow { n_a: params.n_a, nhat });
    }
    let lk = params.kappa.ln();
    let ln2 = std::f64::consts::LN_2;
    let mut hits = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, t as u64));
        let mut z = z0.ln();
        let mut violated = false;
        for n in 1..=nhat {
            z = if rng.gen::<bool>() { z + lk } else { 2.0 * z + lk };
            if n >= params.n_a && z > -(2f64.powf(beta * n as f64)) * ln2 {
                violated = true;
                break;
            }
        }
        hits.push(if violated { 1.0 } else { 0.0 });
    }
    Ok(mean_stderr(&hits))
}

/// Monte-Carlo frequency that the two-point random walk with steps
/// `+ln κ` and `ln(ζκ)` (each with probability 1/2) ever reaches level
/// `alpha` within `steps` steps. Bounded above by `e^{-r·alpha}`.
pub fn first_passage_frequency(
    kappa: f64,
    alpha: f64,
    steps: usize,
    trials: usize,
    seed: u64,
) -> (f64, f64) {
    let zeta = 1.0 / (2.0 * kappa * kappa);
    let up = kappa.ln();
    let down = (zeta * kappa).ln();
    let mut hits = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, t as u64));
        let mut j = 0.0f64;
        let mut hit = false;
        for _ in 0..steps {
            j += if rng.gen::<bool>() { up } else { down };
            if j >= alpha {
                hit = true;
                break;
            }
        }
        hits.push(if hit { 1.0 } else { 0.0 });
    }
    mean_stderr(&hits)
}
