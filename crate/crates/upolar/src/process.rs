//! Finite-state processes emitting (symbol, observation) pairs: stationary
//! and block-independent sampling, exact window entropies, and forgetfulness
//! reports built from the contraction certificates of [`crate::hmm`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::contraction::{NonnegMatrix, NonnegVector};
use crate::hmm::{recollection, ConditionKResult, HiddenMarkovModel, HmmError, KhmmParams};
use crate::util::{child_seed, mean_stderr};

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error("observation label {0:?} does not start with a bit character")]
    BadLabel(String),
    #[error("enumeration space too large: {0}")]
    TooLarge(String),
    #[error("no forgetfulness certificate covers window length {0}")]
    NoCertificate(usize),
}

/// A finite-state process whose observation symbols decompose into a bit
/// `x` and a side observation `y`.
///
/// The decomposition is read off the observation labels: the first character
/// must be `0` or `1` (the bit), the remainder names the side symbol.
#[derive(Debug, Clone)]
pub struct FaimModel {
    hmm: HiddenMarkovModel,
    /// Per observation symbol: its bit.
    x_of_obs: Vec<u8>,
    /// Per observation symbol: index into `y_labels`.
    y_of_obs: Vec<usize>,
    y_labels: Vec<String>,
}

/// A sampled length-`N` window of the process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoBlockSample {
    pub x: Vec<u8>,
    pub y: Vec<usize>,
    /// State trace `S_0..S_N` when retained.
    pub s: Option<Vec<usize>>,
}

/// Certification outcome for one of the two observation channels.
#[derive(Debug, Clone)]
pub struct SideOutcome {
    pub certificate: Option<KhmmParams>,
    /// True when the search closed with a definitive negative (as opposed to
    /// running out of budget).
    pub definitive_none: bool,
    pub recollection: Option<usize>,
}

/// Joint forgetfulness report: both the (symbol, observation) channel and the
/// observation-only channel must carry a certificate; the recollection is the
/// larger of the two.
#[derive(Debug, Clone)]
pub struct ForgetfulnessReport {
    pub epsilon: f64,
    pub xy_side: SideOutcome,
    pub y_side: SideOutcome,
    pub recollection: Option<usize>,
}

impl ForgetfulnessReport {
    pub fn certified(&self) -> bool {
        self.recollection.is_some()
    }
}

impl FaimModel {
    pub fn new(hmm: HiddenMarkovModel) -> Result<Self, ProcessError> {
        let mut x_of_obs = Vec::new();
        let mut y_of_obs = Vec::new();
        let mut y_labels: Vec<String> = Vec::new();
        for label in hmm.obs_labels() {
            let mut chars = label.chars();
            let x = match chars.next() {
                Some('0') => 0u8,
                Some('1') => 1u8,
                _ => return Err(ProcessError::BadLabel(label.clone())),
            };
            let y: String = chars.collect();
            let yi = match y_labels.iter().position(|l| *l == y) {
                Some(i) => i,
                None => {
                    y_labels.push(y);
                    y_labels.len() - 1
                }
            };
            x_of_obs.push(x);
            y_of_obs.push(yi);
        }
        Ok(FaimModel { hmm, x_of_obs, y_of_obs, y_labels })
    }

    pub fn hmm(&self) -> &HiddenMarkovModel {
        &self.hmm
    }

    pub fn state_count(&self) -> usize {
        self.hmm.state_count()
    }

    pub fn y_count(&self) -> usize {
        self.y_labels.len()
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn x_of_state(&self, s: usize) -> u8 {
        self.x_of_obs[self.hmm.obs_of_state(s)]
    }

    pub fn y_of_state(&self, s: usize) -> usize {
        self.y_of_obs[self.hmm.obs_of_state(s)]
    }

    /// One-step matrix keeping only transitions consistent with the given
    /// constraints on the emitted pair; `None` leaves a coordinate free.
    pub fn step_matrix(&self, x: Option<u8>, y: Option<usize>) -> NonnegMatrix {
        let n = self.state_count();
        let mut m = NonnegMatrix::zeros(n, n);
        for j in 0..n {
            let ok = x.map_or(true, |xb| self.x_of_state(j) == xb)
                && y.map_or(true, |ys| self.y_of_state(j) == ys);
            if ok {
                for i in 0..n {
                    m.set(i, j, self.hmm.transition().get(i, j));
                }
            }
        }
        m
    }

    /// Exact probability of a window realization with optional per-position
    /// constraints, under the stationary start.
    pub fn window_prob(&self, x: &[Option<u8>], y: &[Option<usize>]) -> f64 {
        assert_eq!(x.len(), y.len());
        let mut fwd = NonnegVector::new(self.hmm.stationary().to_vec());
        for (xc, yc) in x.iter().zip(y) {
            fwd = self.step_matrix(*xc, *yc).left_mul(&fwd);
        }
        fwd.l1_norm()
    }

    /// The derived observation-only model (drops the bit from each label).
    pub fn y_side_hmm(&self) -> Result<HiddenMarkovModel, HmmError> {
        let labels: Vec<String> = self
            .hmm
            .obs_labels()
            .iter()
            .map(|l| l.chars().skip(1).collect())
            .collect();
        self.hmm.with_obs_relabel(|b| labels[b].clone())
    }
}

/// Samples `N` steps of the stationary process. The state trace `S_0..S_N`
/// is retained.
pub fn sample_block(m: &FaimModel, n: usize, seed: u64) -> SoBlockSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with_rng(m, n, &mut rng)
}

fn sample_with_rng(m: &FaimModel, n: usize, rng: &mut ChaCha8Rng) -> SoBlockSample {
    let mut s = Vec::with_capacity(n + 1);
    s.push(sample_index(m.hmm.stationary(), rng));
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for t in 0..n {
        let row = m.hmm.transition().row(s[t]).to_vec();
        let next = sample_index(&row, rng);
        s.push(next);
        x.push(m.x_of_state(next));
        y.push(m.y_of_state(next));
    }
    SoBlockSample { x, y, s: Some(s) }
}

fn sample_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let mut u: f64 = rng.gen();
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Samples an observation sequence conditioned on a chosen input bit
/// sequence — channel use of the process. The state advances by the one-step
/// conditional law given the current input bit; for models whose state
/// evolution does not depend on the inputs (e.g. burst-noise channels) this
/// is the exact conditional distribution of `Y` given `X = x`.
pub fn transmit(m: &FaimModel, x: &[u8], seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = m.state_count();
    let mut cur = sample_index(m.hmm.stationary(), &mut rng);
    let mut y = Vec::with_capacity(x.len());
    for &xb in x {
        let mut row: Vec<f64> = (0..states)
            .map(|j| {
                if m.x_of_state(j) == xb {
                    m.hmm.transition().get(cur, j)
                } else {
                    0.0
                }
            })
            .collect();
        let tot: f64 = row.iter().sum();
        assert!(tot > 0.0, "input bit has probability zero from the current state");
        for w in &mut row {
            *w /= tot;
        }
        cur = sample_index(&row, &mut rng);
        y.push(m.y_of_state(cur));
    }
    y
}

/// Samples `block_count` independent length-`n0` windows of the stationary
/// marginal and concatenates them: the block-independent surrogate process.
pub fn sample_bi_block(m: &FaimModel, n0: usize, block_count: usize, seed: u64) -> SoBlockSample {
    let mut x = Vec::with_capacity(n0 * block_count);
    let mut y = Vec::with_capacity(n0 * block_count);
    let mut s = Vec::with_capacity((n0 + 1) * block_count);
    for t in 0..block_count {
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, t as u64));
        let block = sample_with_rng(m, n0, &mut rng);
        x.extend(block.x);
        y.extend(block.y);
        s.extend(block.s.unwrap());
    }
    SoBlockSample { x, y, s: Some(s) }
}

/// Exact window conditional entropy
/// `H0 = H(X_i | X_{i-L0}^{i-1}, Y_{i-L0}^{i+L0})` in bits.
pub fn window_entropy(m: &FaimModel, l0: usize) -> Result<f64, ProcessError> {
    let space = 2f64.powi(l0 as i32) * (m.y_count() as f64).powi(2 * l0 as i32 + 1);
    if space > 1e7 {
        return Err(ProcessError::TooLarge(format!("{space:.0} windows at L0 = {l0}")));
    }
    let mut h = 0.0;
    // Enumerate the bit prefix and the full observation window; the two
    // hypotheses for the current bit share every forward product.
    let mut xp = vec![0u8; l0];
    loop {
        let mut yv = vec![0usize; 2 * l0 + 1];
        loop {
            let mut fwd = NonnegVector::new(m.hmm.stationary().to_vec());
            for t in 0..l0 {
                fwd = m.step_matrix(Some(xp[t]), Some(yv[t])).left_mul(&fwd);
            }
            let mut p = [0.0f64; 2];
            for xi in 0..2u8 {
                let mut v = m.step_matrix(Some(xi), Some(yv[l0])).left_mul(&fwd);
                for t in (l0 + 1)..(2 * l0 + 1) {
                    v = m.step_matrix(None, Some(yv[t])).left_mul(&v);
                }
                p[xi as usize] = v.l1_norm();
            }
            let tot = p[0] + p[1];
            for pv in p {
                if pv > 0.0 {
                    h += pv * (tot / pv).log2();
                }
            }
            if !next_digits(&mut yv, m.y_count()) {
                break;
            }
        }
        if !next_digits_u8(&mut xp, 2) {
            break;
        }
    }
    Ok(h)
}

fn next_digits(v: &mut [usize], radix: usize) -> bool {
    for d in v.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

fn next_digits_u8(v: &mut [u8], radix: u8) -> bool {
    for d in v.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

/// Monte-Carlo plug-in estimate of the window entropy for windows too large
/// to enumerate: the per-trial probability is still computed exactly, so all
/// bias comes from sampling. Returns `(estimate, standard_error)`.
pub fn window_entropy_mc(
    m: &FaimModel,
    l0: usize,
    trials: usize,
    seed: u64,
) -> (f64, f64) {
    let w = 2 * l0 + 1;
    let mut vals = Vec::with_capacity(trials);
    for t in 0..trials {
        let block = sample_block(m, w, child_seed(seed, t as u64));
        let mut fwd = NonnegVector::new(m.hmm.stationary().to_vec());
        for i in 0..l0 {
            fwd = m.step_matrix(Some(block.x[i]), Some(block.y[i])).left_mul(&fwd);
        }
        let mut p = [0.0f64; 2];
        for xi in 0..2u8 {
            let mut v = m.step_matrix(Some(xi), Some(block.y[l0])).left_mul(&fwd);
            for i in (l0 + 1)..w {
                v = m.step_matrix(None, Some(block.y[i])).left_mul(&v);
            }
            p[xi as usize] = v.l1_norm();
        }
        let p_true = p[block.x[l0] as usize] / (p[0] + p[1]);
        vals.push(-p_true.log2());
    }
    mean_stderr(&vals)
}

/// Runs the contraction-certificate search on both derived observation
/// channels and combines the recollections.
pub fn forgetfulness_report(m: &FaimModel, epsilon: f64) -> Result<ForgetfulnessReport, ProcessError> {
    let budget = 200_000;
    let xy_side = side_outcome(&m.hmm, epsilon, budget);
    let y_hmm = m.y_side_hmm()?;
    let y_side = side_outcome(&y_hmm, epsilon, budget);
    let recollection = match (xy_side.recollection, y_side.recollection) {
        (Some(a), Some(b)) => Some(a.max(b)),
        _ => None,
    };
    Ok(ForgetfulnessReport { epsilon, xy_side, y_side, recollection })
}

fn side_outcome(hmm: &HiddenMarkovModel, epsilon: f64, budget: usize) -> SideOutcome {
    match hmm.find_condition_k(budget) {
        ConditionKResult::Certified(params) => {
            let aleph = recollection(&params, hmm.state_count(), epsilon);
            SideOutcome { certificate: Some(params), definitive_none: false, recollection: Some(aleph) }
        }
        ConditionKResult::DefinitelyNone => {
            SideOutcome { certificate: None, definitive_none: true, recollection: None }
        }
        ConditionKResult::Indeterminate => {
            SideOutcome { certificate: None, definitive_none: false, recollection: None }
        }
    }
}

/// Smallest `epsilon` (up to a multiplicative factor of ~2) whose
/// recollection is at most `l0`, by bisection on `log epsilon`.
pub fn min_epsilon_for_l0(m: &FaimModel, l0: usize) -> Result<f64, ProcessError> {
    let report = forgetfulness_report(m, 1.0)?;
    if report.recollection.is_none() {
        return Err(ProcessError::NoCertificate(l0));
    }
    let fits = |eps: f64| -> bool {
        forgetfulness_report(m, eps).map(|r| r.recollection.unwrap_or(usize::MAX) <= l0).unwrap_or(false)
    };
    if !fits(1.0) {
        return Err(ProcessError::NoCertificate(l0));
    }
    let (mut lo, mut hi) = (1e-12f64, 1.0f64);
    if fits(lo) {
        return Ok(lo);
    }
    for _ in 0..60 {
        let mid = (lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp();
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Bracket `[H0 - 2 eps, H0 + 2 eps]` on the conditional entropy rate, valid
/// when `report` certifies recollection at most `l0` for `eps`.
///
/// Windows too large to enumerate fall back to the Monte-Carlo estimate of
/// the window entropy, with the bracket widened by three standard errors.
pub fn entropy_rate_bracket(
    m: &FaimModel,
    l0: usize,
    report: &ForgetfulnessReport,
) -> Result<(f64, f64), ProcessError> {
    let aleph = report.recollection.ok_or(ProcessError::NoCertificate(l0))?;
    if aleph > l0 {
        return Err(ProcessError::NoCertificate(l0));
    }
    let eps = report.epsilon;
    let (h0, slack) = match window_entropy(m, l0) {
        Ok(h) => (h, 0.0),
        Err(ProcessError::TooLarge(_)) => {
            let (est, se) = window_entropy_mc(m, l0, 50_000, 0x0b5e55ed);
            (est, 3.0 * se)
        }
        Err(e) => return Err(e),
    };
    Ok(((h0 - 2.0 * eps - slack).max(0.0), (h0 + 2.0 * eps + slack).min(1.0)))
}

/// Memoryless binary symmetric channel with uniform input, as a process:
/// states are the viable (input, output) pairs of a single-state chain.
pub fn bsc_model(crossover: f64) -> FaimModel {
    let chain = NonnegMatrix::from_rows(&[vec![1.0]]);
    let mut emissions_row = Vec::new();
    let mut labels = Vec::new();
    for x in 0..2u8 {
        for y in 0..2u8 {
            let pe = if x == y { 1.0 - crossover } else { crossover };
            emissions_row.push(0.5 * pe);
            labels.push(format!("{x}{y}"));
        }
    }
    let (hmm, _) = crate::hmm::det_from_prob(&chain, &[emissions_row], &labels)
        .expect("single-state construction is valid");
    FaimModel::new(hmm).expect("labels decompose by construction")
}

/// The burst-noise channel as a process.
pub fn gilbert_elliott_model(ge: &crate::hmm::GilbertElliott) -> FaimModel {
    FaimModel::new(ge.model()).expect("labels decompose by construction")
}
