//! Command-line harness: certification reports, plan/envelope tables, code
//! design, encode/decode, and Monte-Carlo simulations with CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use upolar::codec::{
    bi_genie_entropy, encode, sc_decode, CodeSpec, TargetSide,
};
use upolar::contraction::{birkhoff, is_subrectangular, phi, NonnegMatrix};
use upolar::faststage::{select_frozen, universal_params, z_evolution};
use upolar::hmm::{ConditionKResult, GilbertElliott, HiddenMarkovModel};
use upolar::process::{
    bsc_model, forgetfulness_report, gilbert_elliott_model, transmit, window_entropy,
    window_entropy_mc, FaimModel, ProcessError,
};
use upolar::slowstage::{
    base_vector, envelope, make_plan, medial_fraction_min_m0, nth_refined, IndexClass,
};
use upolar::util::child_seed;

/// Exit codes: 2 validation, 3 indeterminate certification, 4 size limits.
const EXIT_VALIDATION: u8 = 2;
const EXIT_INDETERMINATE: u8 = 3;
const EXIT_TOO_LARGE: u8 = 4;

#[derive(Debug)]
struct CodedError {
    code: u8,
    message: String,
}

impl std::fmt::Display for CodedError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CodedError {}

fn coded(code: u8, message: impl Into<String>) -> anyhow::Error {
    anyhow!(CodedError { code, message: message.into() })
}

#[derive(Parser)]
#[command(name = "upolar", version, about = "Universal polar codes for processes with memory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Forgetfulness certification report for a model.
    Forget(ForgetArgs),
    /// Slow-stage plan and envelope reports.
    Bst {
        #[command(subcommand)]
        cmd: BstCmd,
    },
    /// Run the full design pipeline and write a code spec.
    Design(DesignArgs),
    /// Encode and decode codewords.
    Codec {
        #[command(subcommand)]
        cmd: CodecCmd,
    },
    /// Monte-Carlo simulations (CSV output).
    Simulate {
        #[command(subcommand)]
        cmd: SimCmd,
    },
    /// Matrix contraction diagnostics.
    Contraction {
        #[command(subcommand)]
        cmd: ContractionCmd,
    },
}

#[derive(Args)]
struct ForgetArgs {
    /// Model: `bsc:P`, `ge:P,Q,GAMMA,BETA`, `kaijser`, or a JSON file path.
    #[arg(long)]
    model: String,
    /// Comma-separated epsilon values for the recollection table.
    #[arg(long, default_value = "1e-1,1e-2,1e-3")]
    eps: String,
    /// Largest horizon for the exact state-information cross-check.
    #[arg(long, default_value_t = 6)]
    mi_max: usize,
}

#[derive(Subcommand)]
enum BstCmd {
    /// Plan sizes, classification, and base vectors.
    Info(BstInfoArgs),
    /// Entropy envelope table as CSV.
    Envelope(BstEnvelopeArgs),
}

#[derive(Args)]
struct BstInfoArgs {
    #[arg(long)]
    l0: usize,
    #[arg(long)]
    m0: usize,
    #[arg(long)]
    level: usize,
    /// Optional index to classify (1-based, top level).
    #[arg(long)]
    index: Option<usize>,
}

#[derive(Args)]
struct BstEnvelopeArgs {
    #[arg(long)]
    h0: f64,
    #[arg(long)]
    levels: usize,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit a truncation certificate for the given slack pair.
    #[arg(long, num_args = 2, value_names = ["EPS1", "EPS2"])]
    certify: Option<Vec<f64>>,
}

#[derive(Args, Clone, Default)]
struct DesignArgs {
    /// JSON config file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// Forgetfulness target.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Minimum medial fraction.
    #[arg(long)]
    alpha: Option<f64>,
    /// Target entropy threshold for the level count.
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    nhat: Option<usize>,
    /// Fast-stage selection threshold; defaults to 2^-ceil(Nhat^beta).
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    delta_prime: Option<f64>,
    #[arg(long)]
    eps_a: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Starting bound for the fast-stage recursion; defaults to eta.
    #[arg(long)]
    z0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct DesignConfig {
    model: Option<String>,
    epsilon: Option<f64>,
    alpha: Option<f64>,
    xi: Option<f64>,
    target: Option<String>,
    nhat: Option<usize>,
    threshold: Option<f64>,
    kappa: Option<f64>,
    delta_prime: Option<f64>,
    eps_a: Option<f64>,
    beta: Option<f64>,
    z0: Option<f64>,
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CodecCmd {
    Encode(EncodeArgs),
    Decode(DecodeArgs),
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Message bits as a 0/1 string; mutually exclusive with --random.
    #[arg(long)]
    message: Option<String>,
    /// Draw a random message (requires --seed).
    #[arg(long, default_value_t = false)]
    random: bool,
    /// Also pass the codeword through this channel and print the labels.
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    model: String,
    /// File of whitespace-separated observation labels.
    #[arg(long)]
    y_file: PathBuf,
}

#[derive(Subcommand)]
enum SimCmd {
    /// Genie entropies per level against the envelope.
    Entropy(SimEntropyArgs),
    /// End-to-end block/bit error rates over a channel set.
    Ber(SimBerArgs),
}

#[derive(Args, Clone, Default)]
struct SimEntropyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    l0: Option<usize>,
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimEntropyConfig {
    model: Option<String>,
    l0: Option<usize>,
    m0: Option<usize>,
    levels: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct SimBerArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Semicolon-separated list of channel models sharing the observation
    /// alphabet; one spec serves the whole set.
    #[arg(long)]
    models: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimBerConfig {
    spec: Option<PathBuf>,
    models: Option<String>,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ContractionCmd {
    /// Birkhoff contraction coefficient of a matrix (JSON rows).
    Birkhoff {
        #[arg(long)]
        matrix: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<CodedError>()
                .map(|c| c.code)
                .unwrap_or(EXIT_VALIDATION);
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Forget(a) => cmd_forget(a),
        Cmd::Bst { cmd: BstCmd::Info(a) } => cmd_bst_info(a),
        Cmd::Bst { cmd: BstCmd::Envelope(a) } => cmd_bst_envelope(a),
        Cmd::Design(a) => cmd_design(a),
        Cmd::Codec { cmd: CodecCmd::Encode(a) } => cmd_encode(a),
        Cmd::Codec { cmd: CodecCmd::Decode(a) } => cmd_decode(a),
        Cmd::Simulate { cmd: SimCmd::Entropy(a) } => cmd_sim_entropy(a),
        Cmd::Simulate { cmd: SimCmd::Ber(a) } => cmd_sim_ber(a),
        Cmd::Contraction { cmd: ContractionCmd::Birkhoff { matrix } } => cmd_birkhoff(matrix),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing.
// ---------------------------------------------------------------------------

fn coded_process(e: ProcessError) -> anyhow::Error {
    let code = match &e {
        ProcessError::TooLarge(_) => EXIT_TOO_LARGE,
        _ => EXIT_VALIDATION,
    };
    coded(code, e.to_string())
}

fn load_model(spec: &str) -> Result<FaimModel> {
    let from = |r: Result<FaimModel, ProcessError>| {
        r.map_err(|e| coded(EXIT_VALIDATION, format!("model {spec:?}: {e}")))
    };
    if let Some(p) = spec.strip_prefix("bsc:") {
        let p: f64 = p.parse().map_err(|_| coded(EXIT_VALIDATION, "bad bsc parameter"))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(coded(EXIT_VALIDATION, "bsc crossover must be in [0,1]"));
        }
        return Ok(bsc_model(p));
    }
    if let Some(rest) = spec.strip_prefix("ge:") {
        let parts: Vec<f64> = rest
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| coded(EXIT_VALIDATION, "bad ge parameters"))?;
        if parts.len() != 4 {
            return Err(coded(EXIT_VALIDATION, "ge takes p,q,gamma,beta"));
        }
        let ge = GilbertElliott { p: parts[0], q: parts[1], gamma: parts[2], beta: parts[3] };
        return Ok(gilbert_elliott_model(&ge));
    }
    if spec == "kaijser" {
        // The counterexample chain with the state parity as the symbol and the
        // pair partition as the observation.
        let t = upolar::hmm::kaijser().transition().clone();
        let labels = ["0a", "1a", "0b", "1b"].map(String::from);
        let hmm = HiddenMarkovModel::new(t, &labels)
            .map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
        return from(FaimModel::new(hmm));
    }
    let text = fs::read_to_string(spec)
        .map_err(|e| coded(EXIT_VALIDATION, format!("reading model {spec:?}: {e}")))?;
    let hmm = HiddenMarkovModel::from_json(&text)
        .map_err(|e| coded(EXIT_VALIDATION, format!("model {spec:?}: {e}")))?;
    from(FaimModel::new(hmm))
}

/// FNV-1a over the canonical config string: every CSV row carries it.
fn config_hash(canonical: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in canonical.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {path:?}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pick<T: Clone>(flag: &Option<T>, cfg: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| cfg.clone())
}

fn require<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| coded(EXIT_VALIDATION, format!("missing required parameter: {name}")))
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| coded(EXIT_VALIDATION, format!("{e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| coded(EXIT_VALIDATION, format!("config {p:?}: {e}")))
        }
    }
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(0u8),
            '1' => Ok(1u8),
            _ => Err(coded(EXIT_VALIDATION, format!("bad bit character {c:?}"))),
        })
        .collect()
}

fn bits_string(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

fn y_indices(model: &FaimModel, labels: &[&str]) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|l| {
            model
                .y_labels()
                .iter()
                .position(|k| k == l)
                .ok_or_else(|| coded(EXIT_VALIDATION, format!("unknown observation label {l:?}")))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

fn cmd_forget(a: ForgetArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let eps_list: Vec<f64> = a
        .eps
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| coded(EXIT_VALIDATION, "bad epsilon list"))?;
    let budget = 200_000;

    let sides = [("xy", model.hmm().clone()), ("y", model.y_side_hmm()?)];
    let mut failed_side: Option<&str> = None;
    for (name, hmm) in &sides {
        match hmm.find_condition_k(budget) {
            ConditionKResult::Certified(p) => {
                println!(
                    "side {name}: certified  n*={} delta*={:.6e} tau*={:.6} witness={:?}",
                    p.n_star, p.delta_star, p.tau_star, p.witness_word
                );
            }
            ConditionKResult::DefinitelyNone => {
                println!("side {name}: no subrectangular word exists (definitive)");
                failed_side.get_or_insert(name);
            }
            ConditionKResult::Indeterminate => {
                return Err(coded(
                    EXIT_INDETERMINATE,
                    format!("side {name}: search budget exhausted without a verdict"),
                ));
            }
        }
    }
    if let Some(side) = failed_side {
        println!("verdict: not forgetful ({side} side)");
        return Ok(());
    }

    println!("recollection table:");
    for &eps in &eps_list {
        let report = forgetfulness_report(&model, eps)?;
        match report.recollection {
            Some(aleph) => println!("  eps={eps:e} -> aleph={aleph}"),
            None => println!("  eps={eps:e} -> not certified"),
        }
    }

    // Exact state-information curve where enumeration is feasible.
    let obs = model.hmm().obs_count() as f64;
    println!("exact state information:");
    for k in 1..=a.mi_max {
        if obs.powi(k as i32) > 1e6 {
            break;
        }
        let mi = model.hmm().exact_state_mi(k)?;
        println!("  k={k} -> I={mi:.6}");
    }
    println!("verdict: forgetful");
    Ok(())
}

fn cmd_bst_info(a: BstInfoArgs) -> Result<()> {
    let plan =
        make_plan(a.l0, a.m0, a.level).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    println!("level  lateral  medial  total");
    for k in 0..=a.level {
        let (l, m, n) = plan.sizes(k);
        println!("{k:>5}  {l:>7}  {m:>6}  {n:>5}");
    }
    if let Some(i) = a.index {
        if i == 0 || i > plan.block_len() {
            return Err(coded(EXIT_VALIDATION, format!("index {i} out of range")));
        }
        let cls = plan.classify(a.level, i);
        println!("index {i}: {cls:?}");
        if cls.is_medial() {
            let bv = base_vector(&plan, i).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
            println!("base vector (modulo):   {:?}", bv.modulo);
            println!("base vector (absolute): {:?}", bv.absolute);
        }
    }
    Ok(())
}

fn cmd_bst_envelope(a: BstEnvelopeArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.h0) {
        return Err(coded(EXIT_VALIDATION, "h0 must be in [0,1]"));
    }
    let canon = format!("envelope h0={:.12e} levels={}", a.h0, a.levels);
    let hash = config_hash(&canon);
    let env = envelope(a.h0, a.levels);
    let mut csv = String::from(
        "config_hash,n,c_n,d_n,med_minus_lo,med_minus_hi,med_plus_lo,med_plus_hi\n",
    );
    for n in 0..=a.levels {
        let (mlo, mhi) = env.med_minus_bracket(n);
        let (plo, phi_) = env.med_plus_bracket(n);
        writeln!(
            csv,
            "{hash},{n},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            env.c[n], env.d[n], mlo, mhi, plo, phi_
        )
        .unwrap();
    }
    write_output(&a.out, &csv)?;
    if let Some(pair) = &a.certify {
        let (e1, e2) = (pair[0], pair[1]);
        if e1 < 0.0 || e2 < 0.0 {
            return Err(coded(EXIT_VALIDATION, "certificate slacks must be nonnegative"));
        }
        // Deviation bound between the truncated-observation and full chains.
        let bound = 2.0 * e1 + (8.0 * e2).sqrt();
        println!("certificate: eps1={e1:e} eps2={e2:e} deviation_bound={bound:e}");
    }
    Ok(())
}

fn cmd_design(a: DesignArgs) -> Result<()> {
    let cfg: DesignConfig = load_config(&a.config)?;
    let model_spec = require(pick(&a.model, &cfg.model), "model")?;
    let epsilon = require(pick(&a.epsilon, &cfg.epsilon), "epsilon")?;
    let alpha = pick(&a.alpha, &cfg.alpha).unwrap_or(0.5);
    let xi = require(pick(&a.xi, &cfg.xi), "xi")?;
    let target = pick(&a.target, &cfg.target).unwrap_or_else(|| "low".into());
    let nhat = require(pick(&a.nhat, &cfg.nhat), "nhat")?;
    let delta_prime = pick(&a.delta_prime, &cfg.delta_prime).unwrap_or(0.1);
    let eps_a = pick(&a.eps_a, &cfg.eps_a).unwrap_or(1e-4);
    let beta = pick(&a.beta, &cfg.beta).unwrap_or(0.3);
    let out = require(pick(&a.out, &cfg.out), "out")?;

    let side = match target.as_str() {
        "low" => TargetSide::Low,
        "high" => TargetSide::High,
        other => return Err(coded(EXIT_VALIDATION, format!("unknown target side {other:?}"))),
    };
    let model = load_model(&model_spec)?;

    // 1. Forgetfulness fixes the slow-stage window.
    let report = forgetfulness_report(&model, epsilon)
        .map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    let l0 = report.recollection.ok_or_else(|| {
        coded(EXIT_INDETERMINATE, "model is not certified forgetful; cannot design")
    })?;
    println!("forgetfulness: eps={epsilon:e} -> L0={l0}");

    // 2. Medial fraction fixes M0.
    let m0 = medial_fraction_min_m0(l0, alpha);
    println!("medial fraction >= {alpha}: M0={m0}");

    // 3. Window entropy (exact when enumerable, Monte-Carlo otherwise).
    let h0 = match window_entropy(&model, l0) {
        Ok(h) => h,
        Err(ProcessError::TooLarge(_)) => window_entropy_mc(&model, l0, 50_000, 0x0b5e55ed).0,
        Err(e) => return Err(coded_process(e)),
    };
    println!("window entropy: H0={h0:.6}");

    // 4. Margin check for the chosen side.
    let margin = (h0 - 0.5).abs();
    if margin < xi {
        return Err(coded(
            EXIT_VALIDATION,
            format!("H0={h0:.6} is within {margin:.6} of 1/2; need at least xi={xi:e}"),
        ));
    }
    if side == TargetSide::Low && h0 > 0.5 {
        return Err(coded(
            EXIT_VALIDATION,
            format!("low-side design needs entropy below 1/2 (H0={h0:.6})"),
        ));
    }

    // 5. Slow-stage level count from the envelope.
    let n = nth_refined(h0, xi).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    println!("levels: n={n}");

    // 6. Fast-stage universal constants; kappa defaults to twice the upper
    //    mixing coefficient of the chain.
    let kappa = match pick(&a.kappa, &cfg.kappa) {
        Some(k) => k,
        None => {
            let mix = model.hmm().mixing_sequences(0);
            2.0 * mix.psi[0]
        }
    };
    let params = universal_params(kappa, delta_prime, eps_a)
        .map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    println!(
        "universal constants: kappa={kappa:.4} r={:.6} eta={:.4e} n_a={}",
        params.r, params.eta, params.n_a
    );

    // 7. Bound evolution and frozen selection.
    let z0 = pick(&a.z0, &cfg.z0).unwrap_or(params.eta);
    let design = z_evolution(z0, kappa, nhat).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    let nhat_len = (1usize << nhat) as f64;
    let threshold = pick(&a.threshold, &cfg.threshold)
        .unwrap_or_else(|| 2f64.powf(-nhat_len.powf(beta).ceil()));
    let sel = select_frozen(&design, threshold);
    println!(
        "fast stage: nhat={nhat} threshold={threshold:.4e} unfrozen {}/{}",
        sel.unfrozen.len(),
        1usize << nhat
    );

    let plan = make_plan(l0, m0, n).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    let spec = CodeSpec::uniform(plan, nhat, side, sel.frozen)
        .map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    println!(
        "code: N={} Nhat={} rate={:.6}",
        spec.plan.block_len(),
        spec.copies(),
        spec.rate()
    );
    fs::write(&out, spec.to_json()).with_context(|| format!("writing {out:?}"))?;
    println!("spec written to {}", out.display());
    Ok(())
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let text = fs::read_to_string(&a.spec).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    let spec = CodeSpec::from_json(&text).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    let message = match (&a.message, a.random) {
        (Some(_), true) => {
            return Err(coded(EXIT_VALIDATION, "--message and --random are mutually exclusive"))
        }
        (Some(s), false) => parse_bits(s)?,
        (None, true) => {
            let seed = require(a.seed, "seed (random message)")?;
            (0..spec.message_len())
                .map(|k| (child_seed(seed, k as u64) & 1) as u8)
                .collect()
        }
        (None, false) => return Err(coded(EXIT_VALIDATION, "provide --message or --random")),
    };
    let x = encode(&spec, &message).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    println!("message: {}", bits_string(&message));
    println!("codeword: {}", bits_string(&x));
    if let Some(channel) = &a.channel {
        let seed = require(a.seed, "seed (channel use)")?;
        let model = load_model(channel)?;
        let y = transmit(&model, &x, child_seed(seed, 0x7ca11));
        let labels: Vec<&str> =
            y.iter().map(|&i| model.y_labels()[i].as_str()).collect();
        println!("received: {}", labels.join(" "));
    }
    Ok(())
}

fn cmd_decode(a: DecodeArgs) -> Result<()> {
    let text = fs::read_to_string(&a.spec).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    let spec = CodeSpec::from_json(&text).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    let model = load_model(&a.model)?;
    let y_text =
        fs::read_to_string(&a.y_file).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    let labels: Vec<&str> = y_text.split_whitespace().collect();
    let y = y_indices(&model, &labels)?;
    let out = sc_decode(&spec, &model, &y).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    println!("message: {}", bits_string(&out.message));
    println!("input_estimate: {}", bits_string(&out.x_hat));
    Ok(())
}

fn cmd_sim_entropy(a: SimEntropyArgs) -> Result<()> {
    let cfg: SimEntropyConfig = load_config(&a.config)?;
    let model_spec = require(pick(&a.model, &cfg.model), "model")?;
    let l0 = require(pick(&a.l0, &cfg.l0), "l0")?;
    let m0 = require(pick(&a.m0, &cfg.m0), "m0")?;
    let levels = require(pick(&a.levels, &cfg.levels), "levels")?;
    let trials = require(pick(&a.trials, &cfg.trials), "trials")?;
    let seed = require(pick(&a.seed, &cfg.seed), "seed")?;
    let out = pick(&a.out, &cfg.out);

    let model = load_model(&model_spec)?;
    let canon = format!(
        "sim-entropy model={model_spec} l0={l0} m0={m0} levels={levels} trials={trials} seed={seed}"
    );
    let hash = config_hash(&canon);
    let h0 = match window_entropy(&model, l0) {
        Ok(h) => h,
        Err(ProcessError::TooLarge(_)) => window_entropy_mc(&model, l0, 50_000, seed).0,
        Err(e) => return Err(coded_process(e)),
    };
    let env = envelope(h0, levels);
    let mut csv =
        String::from("config_hash,level,index,side,estimate,stderr,env_lo,env_hi\n");
    for n in 1..=levels {
        let plan = make_plan(l0, m0, n).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
        // One representative per side: the first index of each kind.
        let mut reps = Vec::new();
        for i in plan.medial_indices() {
            let cls = plan.classify(n, i);
            if !reps.iter().any(|&(_, c)| c == cls) {
                reps.push((i, cls));
            }
            if reps.len() == 2 {
                break;
            }
        }
        for (i, cls) in reps {
            let (est, se) = bi_genie_entropy(&model, &plan, i, trials, child_seed(seed, n as u64))
                .map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
            let (side, (lo, hi)) = match cls {
                IndexClass::MedMinus => ("minus", env.med_minus_bracket(n)),
                _ => ("plus", env.med_plus_bracket(n)),
            };
            writeln!(
                csv,
                "{hash},{n},{i},{side},{est:.12e},{se:.12e},{lo:.12e},{hi:.12e}"
            )
            .unwrap();
        }
    }
    write_output(&out, &csv)
}

fn cmd_sim_ber(a: SimBerArgs) -> Result<()> {
    let cfg: SimBerConfig = load_config(&a.config)?;
    let spec_path = require(pick(&a.spec, &cfg.spec), "spec")?;
    let models = require(pick(&a.models, &cfg.models), "models")?;
    let trials = require(pick(&a.trials, &cfg.trials), "trials")?;
    let seed = require(pick(&a.seed, &cfg.seed), "seed")?;
    let out = pick(&a.out, &cfg.out);

    let text =
        fs::read_to_string(&spec_path).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    let spec = CodeSpec::from_json(&text).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    let canon = format!(
        "sim-ber spec={} models={models} trials={trials} seed={seed}",
        spec_path.display()
    );
    let hash = config_hash(&canon);
    let mut csv = String::from(
        "config_hash,model,trials,block_errors,bler,bit_errors,ber\n",
    );
    for (mi, model_spec) in models.split(';').enumerate() {
        let model = load_model(model_spec.trim())?;
        let mut block_errors = 0usize;
        let mut bit_errors = 0usize;
        for t in 0..trials {
            let ts = child_seed(seed, (mi * trials + t) as u64);
            let message: Vec<u8> = (0..spec.message_len())
                .map(|k| (child_seed(ts, k as u64) & 1) as u8)
                .collect();
            let x = encode(&spec, &message).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
            let y = transmit(&model, &x, child_seed(ts, 0x7ca11));
            let got = sc_decode(&spec, &model, &y)
                .map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
            let wrong = message
                .iter()
                .zip(&got.message)
                .filter(|(a, b)| a != b)
                .count();
            bit_errors += wrong;
            block_errors += usize::from(wrong > 0);
        }
        let denom = (trials * spec.message_len().max(1)) as f64;
        writeln!(
            csv,
            "{hash},{},{trials},{block_errors},{:.6e},{bit_errors},{:.6e}",
            model_spec.trim(),
            block_errors as f64 / trials as f64,
            bit_errors as f64 / denom
        )
        .unwrap();
    }
    write_output(&out, &csv)
}

fn cmd_birkhoff(path: PathBuf) -> Result<()> {
    let text = fs::read_to_string(&path).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(&text).map_err(|e| coded(EXIT_VALIDATION, e.to_string()))?;
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(coded(EXIT_VALIDATION, "matrix rows must be nonempty and equal length"));
    }
    if rows.iter().flatten().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(coded(EXIT_VALIDATION, "matrix entries must be finite and nonnegative"));
    }
    let m = NonnegMatrix::from_rows(&rows);
    let sub = is_subrectangular(&m);
    println!("subrectangular: {sub}");
    match phi(&m) {
        Ok(p) => println!("cross_ratio_min: {p:.12}"),
        Err(_) => println!("cross_ratio_min: undefined (zero matrix)"),
    }
    println!("birkhoff: {:.12}", birkhoff(&m));
    Ok(())
}
