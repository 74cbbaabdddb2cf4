//! Hidden Markov models with deterministic observation maps: decomposition
//! into per-observation matrices, stationary analysis, forgetfulness
//! certification via subrectangular observation words, and the resulting
//! mutual-information decay bounds.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contraction::{
    birkhoff, is_subrectangular, NonnegMatrix, NonnegVector, ScaledMatrix, ZERO_TOL,
};

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HmmError {
    #[error("row {0} of the transition matrix does not sum to 1")]
    NotStochastic(usize),
    #[error("transition matrix is not primitive (aperiodic + irreducible)")]
    NotPrimitive,
    #[error("observation map length {got} does not match state count {want}")]
    ObsMapLength { got: usize, want: usize },
    #[error("emission table is invalid: {0}")]
    BadEmissions(String),
    #[error("enumeration space too large: {0}")]
    TooLarge(String),
    #[error("model file malformed: {0}")]
    BadModelFile(String),
}

/// A finite-state Markov chain with a deterministic observation of each state.
///
/// The chain must be primitive (aperiodic and irreducible), which guarantees
/// a unique positive stationary distribution. The observation alphabet is
/// exactly the set of symbols attained by the observation map.
#[derive(Debug, Clone)]
pub struct HiddenMarkovModel {
    transition: NonnegMatrix,
    obs_map: Vec<usize>,
    obs_labels: Vec<String>,
    stationary: Vec<f64>,
}

/// The per-observation decomposition: `M(b)` keeps exactly the columns `j`
/// of the transition matrix with `f(j) = b`; summing over `b` recovers `M`.
#[derive(Debug, Clone)]
pub struct ObsMatrixSet {
    mats: Vec<NonnegMatrix>,
}

impl ObsMatrixSet {
    pub fn get(&self, b: usize) -> &NonnegMatrix {
        &self.mats[b]
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    /// Product `M(b_1) M(b_2) ... M(b_n)` with log-scale protection.
    pub fn word_product(&self, word: &[usize]) -> ScaledMatrix {
        let n = self.mats[0].rows();
        let mut acc = ScaledMatrix::identity(n);
        for &b in word {
            acc = acc.matmul(&self.mats[b]);
        }
        acc
    }
}

/// Certificate that the model is a `(n*, delta*, tau*)`-contracting HMM:
/// from any start state, with probability at least `1 - delta*` the first
/// `n*` observations form a word whose matrix product has Birkhoff
/// coefficient at most `tau*`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KhmmParams {
    pub n_star: usize,
    pub delta_star: f64,
    pub tau_star: f64,
    pub witness_word: Vec<usize>,
}

impl KhmmParams {
    pub fn gamma(&self) -> f64 {
        1.0 / self.delta_star
    }

    pub fn rho(&self) -> f64 {
        self.delta_star.powf(1.0 / self.n_star as f64)
    }
}

/// Outcome of the subrectangular-word search.
#[derive(Debug, Clone)]
pub enum ConditionKResult {
    /// A subrectangular observation word exists; certificate attached.
    Certified(KhmmParams),
    /// The support-pattern automaton closed with no subrectangular pattern:
    /// a definitive negative.
    DefinitelyNone,
    /// Budget exhausted before the automaton closed.
    Indeterminate,
}

/// Mixing coefficients `psi_k` (ratio upper bounds, nonincreasing to 1) and
/// `phi_k` (lower bounds, nondecreasing to 1) of the state chain.
#[derive(Debug, Clone)]
pub struct MixingSequences {
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    states: usize,
    transition: Vec<f64>,
    obs_map: Vec<String>,
    #[serde(default)]
    labels: Vec<String>,
}

impl HiddenMarkovModel {
    /// Builds and validates a model from a row-stochastic transition matrix
    /// and per-state observation labels.
    pub fn new(transition: NonnegMatrix, obs_labels_per_state: &[String]) -> Result<Self, HmmError> {
        let n = transition.rows();
        if obs_labels_per_state.len() != n {
            return Err(HmmError::ObsMapLength { got: obs_labels_per_state.len(), want: n });
        }
        for i in 0..n {
            let s: f64 = transition.row(i).iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(HmmError::NotStochastic(i));
            }
        }
        if primitivity_index(&transition).is_none() {
            return Err(HmmError::NotPrimitive);
        }
        // Observation alphabet = symbols attained, in order of first appearance.
        let mut obs_labels: Vec<String> = Vec::new();
        let mut obs_map = Vec::with_capacity(n);
        for label in obs_labels_per_state {
            let idx = match obs_labels.iter().position(|l| l == label) {
                Some(i) => i,
                None => {
                    obs_labels.push(label.clone());
                    obs_labels.len() - 1
                }
            };
            obs_map.push(idx);
        }
        let stationary = stationary_distribution(&transition);
        Ok(HiddenMarkovModel { transition, obs_map, obs_labels, stationary })
    }

    pub fn state_count(&self) -> usize {
        self.transition.rows()
    }

    pub fn transition(&self) -> &NonnegMatrix {
        &self.transition
    }

    pub fn obs_count(&self) -> usize {
        self.obs_labels.len()
    }

    pub fn obs_of_state(&self, state: usize) -> usize {
        self.obs_map[state]
    }

    pub fn obs_labels(&self) -> &[String] {
        &self.obs_labels
    }

    /// The unique positive stationary distribution of the chain.
    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Re-observes the same chain through a relabeling of the observation
    /// symbols (a function of the current observation).
    pub fn with_obs_relabel(&self, relabel: impl Fn(usize) -> String) -> Result<Self, HmmError> {
        let labels: Vec<String> =
            self.obs_map.iter().map(|&b| relabel(b)).collect();
        HiddenMarkovModel::new(self.transition.clone(), &labels)
    }

    pub fn decompose(&self) -> ObsMatrixSet {
        let n = self.state_count();
        let mut mats = vec![NonnegMatrix::zeros(n, n); self.obs_count()];
        for j in 0..n {
            let b = self.obs_map[j];
            for i in 0..n {
                mats[b].set(i, j, self.transition.get(i, j));
            }
        }
        ObsMatrixSet { mats }
    }

    /// `P(B_1^n = b_1^n)` under the stationary start.
    pub fn seq_prob(&self, word: &[usize]) -> f64 {
        self.seq_prob_from(&NonnegVector::new(self.stationary.clone()), word)
    }

    /// `P(B_1^n = b_1^n | A_0 = a0)`.
    pub fn seq_prob_given(&self, a0: usize, word: &[usize]) -> f64 {
        self.seq_prob_from(&NonnegVector::basis(self.state_count(), a0), word)
    }

    fn seq_prob_from(&self, init: &NonnegVector, word: &[usize]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        let mats = self.decompose();
        let prod = mats.word_product(word);
        prod.log_l1_of_left_mul(init).exp()
    }

    /// Posterior `P(A_{n+1} = a | B_1^n = b_1^n)` for all `a`, from an
    /// arbitrary initial row vector (stationary or a basis vector).
    pub fn state_posterior(&self, init: &NonnegVector, word: &[usize]) -> Vec<f64> {
        let mats = self.decompose();
        let prod = mats.word_product(word);
        let fwd = prod.mat.left_mul(init);
        let next = self.transition.left_mul(&fwd);
        let z = next.l1_norm();
        next.entries().iter().map(|v| v / z).collect()
    }

    /// Mixing coefficients up to lag `k_max`.
    pub fn mixing_sequences(&self, k_max: usize) -> MixingSequences {
        let n = self.state_count();
        let pi = &self.stationary;
        let mut psi = Vec::with_capacity(k_max + 1);
        let mut phi = Vec::with_capacity(k_max + 1);
        psi.push(pi.iter().map(|p| 1.0 / p).fold(f64::MIN, f64::max));
        phi.push(0.0);
        let mut pow = NonnegMatrix::identity(n);
        for _ in 1..=k_max {
            pow = pow.matmul(&self.transition);
            let mut hi = f64::MIN;
            let mut lo = f64::MAX;
            for s in 0..n {
                for t in 0..n {
                    // P(S_0=s, S_k=t) / (P(S_0=s) P(S_k=t)) = (M^k)_{s,t} / pi_t.
                    let r = pow.get(s, t) / pi[t];
                    hi = hi.max(r);
                    lo = lo.min(r);
                }
            }
            psi.push(hi);
            phi.push(lo);
        }
        MixingSequences { psi, phi }
    }

    /// Searches for an observation word whose matrix product is nonzero and
    /// subrectangular, by breadth-first search over the support patterns of
    /// the products. The pattern automaton is finite, so the search either
    /// finds a shortest witness, closes with a definitive negative, or runs
    /// out of budget (`Indeterminate`).
    pub fn find_condition_k(&self, search_budget: usize) -> ConditionKResult {
        let n = self.state_count();
        let mats = self.decompose();
        let obs_supports: Vec<Vec<bool>> =
            (0..self.obs_count()).map(|b| mats.get(b).support_pattern()).collect();

        // BFS over boolean support patterns; parents kept for word recovery.
        let mut queue: std::collections::VecDeque<usize> = Default::default();
        let mut patterns: Vec<Vec<bool>> = Vec::new();
        let mut parent: Vec<Option<(usize, usize)>> = Vec::new(); // (parent idx, obs)
        let mut seen: HashMap<Vec<bool>, usize> = HashMap::new();
        let mut witness_idx = None;

        for b in 0..self.obs_count() {
            let p = obs_supports[b].clone();
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(p.clone()) {
                e.insert(patterns.len());
                patterns.push(p);
                parent.push(None);
                queue.push_back(patterns.len() - 1);
                // Record which observation created this root.
                parent[patterns.len() - 1] = Some((usize::MAX, b));
            }
        }

        'bfs: while let Some(cur) = queue.pop_front() {
            if pattern_is_subrectangular(&patterns[cur], n) && patterns[cur].iter().any(|&v| v) {
                witness_idx = Some(cur);
                break 'bfs;
            }
            if patterns.len() > search_budget {
                return ConditionKResult::Indeterminate;
            }
            for b in 0..self.obs_count() {
                let next = bool_matmul(&patterns[cur], &obs_supports[b], n);
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(next.clone()) {
                    e.insert(patterns.len());
                    patterns.push(next);
                    parent.push(Some((cur, b)));
                    queue.push_back(patterns.len() - 1);
                }
            }
        }

        let Some(mut idx) = witness_idx else {
            return ConditionKResult::DefinitelyNone;
        };

        // Reconstruct the witness word.
        let mut word = Vec::new();
        loop {
            match parent[idx] {
                Some((p, b)) if p != usize::MAX => {
                    word.push(b);
                    idx = p;
                }
                Some((_, b)) => {
                    word.push(b);
                    break;
                }
                None => break,
            }
        }
        word.reverse();

        self.certify_witness(&word)
            .map(ConditionKResult::Certified)
            .unwrap_or(ConditionKResult::Indeterminate)
    }

    /// Builds the `(n*, delta*, tau*)` certificate for a given witness word.
    fn certify_witness(&self, word: &[usize]) -> Option<KhmmParams> {
        let n = self.state_count();
        let mats = self.decompose();
        let prod = mats.word_product(word).mat;
        if prod.is_zero() || !is_subrectangular(&prod) {
            return None;
        }
        let tau_star = birkhoff(&prod);
        let k0 = primitivity_index(&self.transition)?;
        let n_star = k0 + word.len();

        // Constructive certificate: delta* = 1 - alpha0 * gamma0, where gamma0
        // is the least entry of M^{k0} and alpha0 the least positive row mass
        // of the witness product.
        let mut mk = NonnegMatrix::identity(n);
        for _ in 0..k0 {
            mk = mk.matmul(&self.transition);
        }
        let gamma0 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| mk.get(i, j))
            .fold(f64::MAX, f64::min);
        let alpha0 = (0..n)
            .map(|a| prod.row(a).iter().sum::<f64>())
            .filter(|&s| s > ZERO_TOL)
            .fold(f64::MAX, f64::min);
        let mut delta_star = (1.0 - alpha0 * gamma0).clamp(0.0, 1.0);

        // Tightening: when the word space at length n* is small enough,
        // replace the conservative value by the exact complement of the
        // per-start-state probability of hitting coefficient <= tau*.
        if (self.obs_count() as f64).powi(n_star as i32) <= 1e6 {
            let mut worst = f64::MAX;
            for a0 in 0..n {
                let init = NonnegVector::basis(n, a0);
                let mut good = 0.0;
                let mut stack = vec![(ScaledMatrix::identity(n), 0usize)];
                while let Some((acc, depth)) = stack.pop() {
                    if depth == n_star {
                        if birkhoff(&acc.mat) <= tau_star + 1e-12 {
                            let lp = acc.log_l1_of_left_mul(&init);
                            if lp.is_finite() {
                                good += lp.exp();
                            }
                        }
                        continue;
                    }
                    for b in 0..self.obs_count() {
                        stack.push((acc.matmul(mats.get(b)), depth + 1));
                    }
                }
                worst = worst.min(good);
            }
            let exact = (1.0 - worst).clamp(0.0, 1.0);
            if exact < delta_star {
                delta_star = exact;
            }
        }

        Some(KhmmParams { n_star, delta_star, tau_star, witness_word: word.to_vec() })
    }

    /// Exact `I(A_0; A_{k+1} | B_1^k)` in bits, by exhaustive enumeration of
    /// observation words. Usable when `|B|^k` is small.
    pub fn exact_state_mi(&self, k: usize) -> Result<f64, HmmError> {
        let words = (self.obs_count() as f64).powi(k as i32);
        if words > 1e6 {
            return Err(HmmError::TooLarge(format!(
                "{} observation words of length {k}",
                words
            )));
        }
        let n = self.state_count();
        let mats = self.decompose();
        let pi = NonnegVector::new(self.stationary.clone());
        let mut mi = 0.0;
        let mut word = vec![0usize; k];
        loop {
            let prod = mats.word_product(&word).mat;
            // Unscaled is fine here: k is small by the size gate.
            let fwd_pi = self.transition.left_mul(&prod.left_mul(&pi));
            let z_pi = prod.left_mul(&pi).l1_norm();
            if z_pi > 0.0 {
                for a0 in 0..n {
                    let e = NonnegVector::basis(n, a0);
                    let fwd_e = self.transition.left_mul(&prod.left_mul(&e));
                    let z_e = prod.left_mul(&e).l1_norm();
                    if z_e <= 0.0 {
                        continue;
                    }
                    for a in 0..n {
                        let p_joint = self.stationary[a0] * fwd_e.entries()[a];
                        if p_joint <= 0.0 {
                            continue;
                        }
                        let p_cond_e = fwd_e.entries()[a] / z_e;
                        let p_cond_pi = fwd_pi.entries()[a] / z_pi;
                        mi += p_joint * (p_cond_e / p_cond_pi).log2();
                    }
                }
            }
            // Next word in lexicographic order.
            let mut pos = k;
            loop {
                if pos == 0 {
                    return Ok(mi.max(0.0));
                }
                pos -= 1;
                word[pos] += 1;
                if word[pos] < self.obs_count() {
                    break;
                }
                word[pos] = 0;
            }
        }
    }

    /// Serializes to the JSON model format.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            states: self.state_count(),
            transition: self.transition.data().to_vec(),
            obs_map: self.obs_map.iter().map(|&b| self.obs_labels[b].clone()).collect(),
            labels: Vec::new(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, HmmError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| HmmError::BadModelFile(e.to_string()))?;
        if file.transition.len() != file.states * file.states {
            return Err(HmmError::BadModelFile("transition size mismatch".into()));
        }
        let m = NonnegMatrix::new(file.states, file.states, file.transition);
        HiddenMarkovModel::new(m, &file.obs_map)
    }
}

/// Converts a probabilistic-emission model (chain plus emission table
/// `q(b|j)`) into an equivalent deterministic-observation model whose states
/// are the viable `(state, observation)` pairs.
pub fn det_from_prob(
    state_chain: &NonnegMatrix,
    emissions: &[Vec<f64>],
    obs_labels: &[String],
) -> Result<(HiddenMarkovModel, Vec<(usize, usize)>), HmmError> {
    let n = state_chain.rows();
    if emissions.len() != n {
        return Err(HmmError::BadEmissions("one emission row per state required".into()));
    }
    for (j, row) in emissions.iter().enumerate() {
        if row.len() != obs_labels.len() {
            return Err(HmmError::BadEmissions(format!("emission row {j} has wrong length")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(HmmError::BadEmissions(format!("emission row {j} does not sum to 1")));
        }
    }
    if primitivity_index(state_chain).is_none() {
        return Err(HmmError::NotPrimitive);
    }
    let mut pairs = Vec::new();
    for j in 0..n {
        for (b, &q) in emissions[j].iter().enumerate() {
            if q > 0.0 {
                pairs.push((j, b));
            }
        }
    }
    let m = pairs.len();
    let mut t = NonnegMatrix::zeros(m, m);
    for (r, &(i, _)) in pairs.iter().enumerate() {
        for (c, &(j, b)) in pairs.iter().enumerate() {
            t.set(r, c, state_chain.get(i, j) * emissions[j][b]);
        }
    }
    let labels: Vec<String> = pairs.iter().map(|&(_, b)| obs_labels[b].clone()).collect();
    let model = HiddenMarkovModel::new(t, &labels)?;
    Ok((model, pairs))
}

/// Upper bound on `I(A_0; A_{n+1} | B_1^n)` in bits from a contraction
/// certificate: `4 log2((1+tau)/(1-tau)) tau^m + alpha (gamma n)^m rho^{n+1} / m!`.
pub fn mi_upper_bound(k: &KhmmParams, state_count: usize, n: usize, m: usize) -> f64 {
    assert!(m <= n, "requires m <= n");
    assert!(k.delta_star > 0.0, "delta* = 0 has a simpler bound; see recollection");
    let tau = k.tau_star;
    let gamma = k.gamma();
    let rho = k.rho();
    let alpha = gamma * (state_count as f64).log2();
    let head = if tau > 0.0 {
        4.0 * ((1.0 + tau) / (1.0 - tau)).log2() * tau.powi(m as i32)
    } else if m == 0 {
        0.0 // log term is 4*log2(1) = 0 when tau = 0
    } else {
        0.0
    };
    // (gamma n)^m / m! in log space to avoid overflow for large m.
    let log_poisson = if m == 0 {
        0.0
    } else {
        m as f64 * (gamma * n as f64).ln() - ln_factorial(m)
    };
    let tail = alpha * (log_poisson + (n as f64 + 1.0) * rho.ln()).exp();
    head + tail
}

/// The recollection: the smallest horizon after which the mutual-information
/// bound drops below `eps` bits.
pub fn recollection(k: &KhmmParams, state_count: usize, eps: f64) -> usize {
    assert!(eps > 0.0);
    let tau = k.tau_star;
    if tau <= 0.0 && k.delta_star == 0.0 {
        return k.n_star; // a single guaranteed witness already zeroes the bound
    }
    let m = if tau <= 0.0 {
        1
    } else {
        let target = (eps / 2.0) / (4.0 * ((1.0 + tau) / (1.0 - tau)).log2());
        if target >= 1.0 {
            0
        } else {
            (target.ln() / tau.ln()).ceil() as usize
        }
    };
    if k.delta_star == 0.0 {
        return (m + 1) * k.n_star;
    }
    let gamma = k.gamma();
    let rho = k.rho();
    let alpha = gamma * (state_count as f64).log2();
    let mut n = m.max(1);
    loop {
        let log_poisson = if m == 0 {
            0.0
        } else {
            m as f64 * (gamma * n as f64).ln() - ln_factorial(m)
        };
        let tail = alpha * (log_poisson + (n as f64 + 1.0) * rho.ln()).exp();
        if tail <= eps / 2.0 {
            return n;
        }
        n += 1;
    }
}

fn ln_factorial(m: usize) -> f64 {
    (1..=m).map(|i| (i as f64).ln()).sum()
}

/// Least `k` with `M^k > 0` entrywise (checked on support patterns), up to
/// the Wielandt bound `(n-1)^2 + 1`; `None` if the matrix is not primitive.
pub fn primitivity_index(m: &NonnegMatrix) -> Option<usize> {
    let n = m.rows();
    let base = m.support_pattern();
    let mut pow = base.clone();
    let bound = (n - 1) * (n - 1) + 1;
    for k in 1..=bound {
        if pow.iter().all(|&v| v) {
            return Some(k);
        }
        pow = bool_matmul(&pow, &base, n);
    }
    if pow.iter().all(|&v| v) {
        return Some(bound);
    }
    None
}

fn bool_matmul(a: &[bool], b: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for i in 0..n {
        for k in 0..n {
            if a[i * n + k] {
                for j in 0..n {
                    if b[k * n + j] {
                        out[i * n + j] = true;
                    }
                }
            }
        }
    }
    out
}

fn pattern_is_subrectangular(p: &[bool], n: usize) -> bool {
    let row_nz: Vec<bool> = (0..n).map(|i| (0..n).any(|j| p[i * n + j])).collect();
    let col_nz: Vec<bool> = (0..n).map(|j| (0..n).any(|i| p[i * n + j])).collect();
    for i in 0..n {
        for j in 0..n {
            if !p[i * n + j] && row_nz[i] && col_nz[j] {
                return false;
            }
        }
    }
    true
}

/// Solves `pi^T M = pi^T`, `sum pi = 1` by Gaussian elimination, refined by
/// power iteration.
fn stationary_distribution(m: &NonnegMatrix) -> Vec<f64> {
    let n = m.rows();
    // System: (M^T - I) pi = 0 with the last equation replaced by sum = 1.
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = m.get(j, i) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[n - 1][j] = 1.0;
    }
    a[n - 1][n] = 1.0;
    // Partial-pivot elimination.
    for col in 0..n {
        let piv = (col..n).max_by(|&r1, &r2| {
            a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap()
        });
        if let Some(p) = piv {
            a.swap(col, p);
        }
        if a[col][col].abs() < 1e-300 {
            continue;
        }
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut pi: Vec<f64> = (0..n).map(|i| (a[i][n] / a[i][i]).max(0.0)).collect();
    let z: f64 = pi.iter().sum();
    for v in pi.iter_mut() {
        *v /= z;
    }
    // Power-iteration polish to absorb any elimination round-off.
    for _ in 0..10_000 {
        let mut next = vec![0.0; n];
        for (s, &p) in pi.iter().enumerate() {
            for t in 0..n {
                next[t] += p * m.get(s, t);
            }
        }
        let diff: f64 = next.iter().zip(&pi).map(|(x, y)| (x - y).abs()).sum();
        pi = next;
        if diff < 1e-15 {
            break;
        }
    }
    pi
}

/// The four-state chain with a two-symbol observation that is the classic
/// example of a regular chain that never forgets its start state.
pub fn kaijser() -> HiddenMarkovModel {
    let half = 0.5;
    let m = NonnegMatrix::from_rows(&[
        vec![half, 0.0, half, 0.0],
        vec![0.0, half, 0.0, half],
        vec![half, 0.0, 0.0, half],
        vec![0.0, half, half, 0.0],
    ]);
    let labels = ["a", "a", "b", "b"].map(String::from);
    HiddenMarkovModel::new(m, &labels).expect("kaijser model is valid")
}

/// Parameters of a two-state burst-noise channel: a good state behaving as a
/// binary symmetric channel with crossover `gamma`, a bad state with
/// crossover `beta`, and transition probabilities `p` (good→bad) and `q`
/// (bad→good).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GilbertElliott {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl GilbertElliott {
    /// The eight-state deterministic model with uniform channel input: states
    /// are (channel state, input bit, output bit); the observation is the
    /// (input, output) pair labeled `"xy"`.
    pub fn model(&self) -> HiddenMarkovModel {
        let GilbertElliott { p, q, gamma, beta } = *self;
        let chain = NonnegMatrix::from_rows(&[vec![1.0 - p, p], vec![q, 1.0 - q]]);
        // Emissions q((x,y) | channel state) under a uniform input bit.
        let mut emissions = Vec::new();
        for flip in [gamma, beta] {
            let mut row = Vec::new();
            for x in 0..2u8 {
                for y in 0..2u8 {
                    let pe = if x == y { 1.0 - flip } else { flip };
                    row.push(0.5 * pe);
                    let _ = (x, y);
                }
            }
            emissions.push(row);
        }
        let labels: Vec<String> =
            (0..2).flat_map(|x| (0..2).map(move |y| format!("{x}{y}"))).collect();
        let (model, _) = det_from_prob(&chain, &emissions, &labels)
            .expect("gilbert-elliott construction is valid");
        model
    }
}
