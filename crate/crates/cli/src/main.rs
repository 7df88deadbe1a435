//! `loqc`: run teleportation, CSIGN and preparation protocols and detector
//! error sweeps from the command line.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use loqc::analysis::{
    mc_estimate, sweep, ErrorReport, SweepGrid, DEFAULT_DARK, DEFAULT_ETA, ERROR_FIDELITY,
    MAX_TRUNCATION,
};
use loqc::protocols::{
    bell_pair, bell_to_ghz, build_t_prime_1_klm_via_ns, build_t_prime_1_pol_via_encoders,
    build_t_prime_n, cluster_to_t_prime, csign, csign_minimal, ghz_state, ghz_to_cluster,
    t_prime_1_fidelity, teleport, ClusterClass, CsignReport, TeleportClass,
    DEFAULT_ENCODER_PROBABILITY, DEFAULT_NS_PROBABILITY,
};
use loqc::{DetectorModel, Encoding, FockState, InputQubit, LoqcError};
use num_complex::Complex64;

use config::{parse_list, ConfigFile};
use output::{emit, fmt_complex, Format, Table, Value};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Precision(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Precision(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Precision(m) => write!(f, "precision error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<LoqcError> for CliError {
    fn from(e: LoqcError) -> Self {
        match e {
            LoqcError::InvalidArgument(m) => CliError::Usage(m),
            e @ LoqcError::Precision { .. } => CliError::Precision(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "loqc",
    version,
    about = "Linear-optics gate teleportation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Teleport one qubit through |t_n> and list every outcome.
    Teleport(Common),
    /// Teleported CSIGN on a product input.
    Csign(CsignArgs),
    /// Heralded resource-state preparation chains.
    Prep(PrepArgs),
    /// Sweep p_f and p_e over encodings, n, efficiency and dark counts.
    ErrorAnalysis(SweepArgs),
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Flat key = value file; flags override it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// klm or pol (comma-separated list for error-analysis).
    #[arg(long)]
    encoding: Option<String>,
    /// Teleporter size (comma-separated list for error-analysis).
    #[arg(long)]
    n: Option<String>,
    /// Detector efficiency in [0, 1].
    #[arg(long)]
    eta: Option<String>,
    /// Mean dark counts per detector and gate window.
    #[arg(long)]
    dark: Option<String>,
    /// Amplitude of |0> as re[,im].
    #[arg(long, value_name = "RE[,IM]", allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Amplitude of |1> as re[,im].
    #[arg(long, value_name = "RE[,IM]", allow_hyphen_values = true)]
    beta: Option<String>,
    /// Perfect detectors: eta = 1, no dark counts.
    #[arg(long, conflicts_with_all = ["eta", "dark"])]
    ideal: bool,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Seed for the Monte-Carlo cross-check.
    #[arg(long)]
    seed: Option<u64>,
    /// Adds a Monte-Carlo estimate with this many samples.
    #[arg(long)]
    mc_samples: Option<u64>,
}

#[derive(Args, Clone, Debug)]
struct CsignArgs {
    #[command(flatten)]
    common: Common,
    /// Amplitude of |0> for the second qubit.
    #[arg(long, value_name = "RE[,IM]", allow_hyphen_values = true)]
    alpha_b: Option<String>,
    /// Amplitude of |1> for the second qubit.
    #[arg(long, value_name = "RE[,IM]", allow_hyphen_values = true)]
    beta_b: Option<String>,
    /// Four-mode setup with two single-photon Fourier steps (polarization, n = 1).
    #[arg(long)]
    minimal: bool,
    /// Click-only detectors in the minimal setup.
    #[arg(long, requires = "minimal")]
    no_number_resolving: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Chain {
    #[value(name = "tprime1_klm")]
    TPrime1Klm,
    #[value(name = "tprime1_pol")]
    TPrime1Pol,
    BellToGhz,
    GhzToCluster,
}

impl std::str::FromStr for Chain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Chain as ValueEnum>::from_str(s.trim(), true)
    }
}

#[derive(Args, Clone, Debug)]
struct PrepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    chain: Option<Chain>,
    /// Also list every amplitude of the heralded state.
    #[arg(long)]
    dump: bool,
}

#[derive(Args, Clone, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Directory for fig2.dat, fig3.dat and fig4.dat.
    #[arg(long, value_name = "DIR")]
    plot_data: Option<PathBuf>,
}

/// Parameters after merging flags, config file and defaults.
struct Settings {
    encodings: Vec<Encoding>,
    ns: Vec<usize>,
    etas: Vec<f64>,
    darks: Vec<f64>,
    input: InputQubit,
    format: Format,
    out: Option<PathBuf>,
    seed: u64,
    mc_samples: Option<u64>,
    file: ConfigFile,
}

impl Settings {
    fn resolve(c: &Common, default_encodings: &str, default_ns: &str) -> Result<Self, CliError> {
        let file = match &c.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let pick = |flag: &Option<String>, key: &str, default: &str| -> String {
            flag.clone()
                .or_else(|| file.get(key).map(str::to_string))
                .unwrap_or_else(|| default.to_string())
        };
        let usage = |key: &'static str| move |e: String| CliError::Usage(format!("--{key}: {e}"));

        let encodings = parse_list::<String>(&pick(&c.encoding, "encoding", default_encodings))
            .map_err(usage("encoding"))?
            .iter()
            .map(|s| s.parse::<Encoding>().map_err(CliError::from))
            .collect::<Result<Vec<_>, _>>()?;
        let ns = parse_list::<usize>(&pick(&c.n, "n", default_ns)).map_err(usage("n"))?;
        if let Some(bad) = ns.iter().find(|&&n| n == 0) {
            return Err(CliError::Usage(format!("--n must be >= 1, got {bad}")));
        }

        let flag_detector = c.ideal || c.eta.is_some() || c.dark.is_some();
        let ideal = c.ideal || (!flag_detector && file.flag("ideal")?);
        let (etas, darks) = if ideal {
            if !c.ideal && (file.get("eta").is_some() || file.get("dark").is_some()) {
                return Err(CliError::Usage(
                    "config sets ideal together with eta or dark".into(),
                ));
            }
            (vec![1.0], vec![0.0])
        } else {
            let etas = parse_list::<f64>(&pick(&c.eta, "eta", &DEFAULT_ETA.to_string()))
                .map_err(usage("eta"))?;
            let darks = parse_list::<f64>(&pick(&c.dark, "dark", &DEFAULT_DARK.to_string()))
                .map_err(usage("dark"))?;
            (etas, darks)
        };
        for &eta in &etas {
            if !(0.0..=1.0).contains(&eta) {
                return Err(CliError::Usage(format!(
                    "--eta must be in [0, 1], got {eta}"
                )));
            }
        }
        for &d in &darks {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(CliError::Usage(format!("--dark must be >= 0, got {d}")));
            }
        }

        let input = qubit(
            pick(&c.alpha, "alpha", "").as_str(),
            pick(&c.beta, "beta", "").as_str(),
            "alpha",
            "beta",
        )?;
        let format = match c.format {
            Some(f) => f,
            None => file.parsed("format", |s| s.parse())?.unwrap_or(Format::Csv),
        };
        let out = c.out.clone().or_else(|| file.get("out").map(PathBuf::from));
        let seed = match c.seed {
            Some(s) => s,
            None => file
                .parsed("seed", |s| s.parse::<u64>().map_err(|e| e.to_string()))?
                .unwrap_or(2024),
        };
        let mc_samples = match c.mc_samples {
            Some(s) => Some(s),
            None => file.parsed("mc_samples", |s| {
                s.parse::<u64>().map_err(|e| e.to_string())
            })?,
        };
        if mc_samples == Some(0) {
            return Err(CliError::Usage("--mc-samples must be >= 1".into()));
        }
        Ok(Settings {
            encodings,
            ns,
            etas,
            darks,
            input,
            format,
            out,
            seed,
            mc_samples,
            file,
        })
    }

    fn single<T: Copy>(values: &[T], name: &str) -> Result<T, CliError> {
        match values {
            [v] => Ok(*v),
            _ => Err(CliError::Usage(format!(
                "--{name} takes a single value here"
            ))),
        }
    }

    fn encoding(&self) -> Result<Encoding, CliError> {
        Self::single(&self.encodings, "encoding")
    }

    fn n(&self) -> Result<usize, CliError> {
        Self::single(&self.ns, "n")
    }

    fn detector(&self) -> Result<DetectorModel, CliError> {
        let eta = Self::single(&self.etas, "eta")?;
        let dark = Self::single(&self.darks, "dark")?;
        Ok(DetectorModel::new(eta, dark)?)
    }

    fn emit(&self, table: &Table) -> Result<(), CliError> {
        emit(table, self.format, self.out.as_deref())
    }
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts = parse_list::<f64>(s)?;
    match parts[..] {
        [re] => Ok(Complex64::new(re, 0.0)),
        [re, im] => Ok(Complex64::new(re, im)),
        _ => Err(format!("expected re[,im], got {s:?}")),
    }
}

/// Both amplitudes or neither (the default is `(|0⟩+|1⟩)/√2`). The norm must
/// be 1 within 1e-6; the pair is then renormalized exactly.
fn qubit(alpha: &str, beta: &str, a_name: &str, b_name: &str) -> Result<InputQubit, CliError> {
    match (alpha.is_empty(), beta.is_empty()) {
        (true, true) => return Ok(InputQubit::plus()),
        (false, false) => {}
        _ => {
            return Err(CliError::Usage(format!(
                "--{a_name} and --{b_name} must be given together"
            )))
        }
    }
    let a = parse_complex(alpha).map_err(|e| CliError::Usage(format!("--{a_name}: {e}")))?;
    let b = parse_complex(beta).map_err(|e| CliError::Usage(format!("--{b_name}: {e}")))?;
    let norm = a.norm_sqr() + b.norm_sqr();
    if !((norm - 1.0).abs() <= 1e-6) {
        return Err(CliError::Usage(format!(
            "|{a_name}|^2 + |{b_name}|^2 = {norm}, expected 1"
        )));
    }
    Ok(InputQubit::normalized(a, b)?)
}

fn check_truncation(bound: f64) -> Result<(), CliError> {
    if bound > MAX_TRUNCATION {
        return Err(CliError::Precision(format!(
            "truncation bound {bound:e} exceeds {MAX_TRUNCATION:e}"
        )));
    }
    Ok(())
}

fn reject_mc(s: &Settings, command: &str) -> Result<(), CliError> {
    if s.mc_samples.is_some() {
        return Err(CliError::Usage(format!(
            "--mc-samples is not available for {command}"
        )));
    }
    Ok(())
}

const TELEPORT_COLUMNS: &[&str] = &[
    "record",
    "encoding",
    "n",
    "eta",
    "dark",
    "alpha",
    "beta",
    "outcome",
    "k",
    "correction",
    "true_pattern",
    "probability",
    "sigma",
    "fidelity",
    "trunc_bound",
];

fn cmd_teleport(c: &Common) -> Result<(), CliError> {
    let s = Settings::resolve(c, "pol", "1")?;
    let (enc, n, det) = (s.encoding()?, s.n()?, s.detector()?);
    let dist = teleport(&s.input, n, enc, &det)?;
    check_truncation(dist.truncation_bound)?;

    let mut t = Table::new(TELEPORT_COLUMNS);
    let base = || {
        vec![
            ("encoding", Value::str(enc.to_string())),
            ("n", Value::Int(n as i64)),
            ("eta", Value::Num(det.eta())),
            ("dark", Value::Num(det.dark_mean())),
            ("alpha", Value::str(fmt_complex(s.input.alpha()))),
            ("beta", Value::str(fmt_complex(s.input.beta()))),
            ("trunc_bound", Value::Num(dist.truncation_bound)),
        ]
    };
    for o in &dist.outcomes {
        let mut row = base();
        row.push(("record", Value::str("branch")));
        row.push(("outcome", Value::str(o.class.label())));
        if let TeleportClass::Success { k, correction } = o.class {
            row.push(("k", Value::Int(k as i64)));
            row.push(("correction", Value::Int(correction as i64)));
        }
        row.push(("true_pattern", Value::str(o.true_pattern.to_string())));
        row.push(("probability", Value::Num(o.probability)));
        row.push(("fidelity", Value::opt(o.fidelity)));
        t.push(row);
    }
    let totals = [
        ("success", dist.success_probability()),
        (
            "failure_all_h",
            dist.probability_where(|c| *c == TeleportClass::FailureAllH),
        ),
        (
            "failure_all_v",
            dist.probability_where(|c| *c == TeleportClass::FailureAllV),
        ),
        (
            "loss_detected",
            dist.probability_where(|c| *c == TeleportClass::LossDetected),
        ),
    ];
    let min_fidelity = dist
        .outcomes
        .iter()
        .filter_map(|o| o.fidelity)
        .fold(None, |m: Option<f64>, f| Some(m.map_or(f, |m| m.min(f))));
    for (label, p) in totals {
        let mut row = base();
        row.push(("record", Value::str("total")));
        row.push(("outcome", Value::str(label)));
        row.push(("probability", Value::Num(p)));
        if label == "success" {
            row.push(("fidelity", Value::opt(min_fidelity)));
        }
        t.push(row);
    }
    if let Some(samples) = s.mc_samples {
        let mc = mc_estimate(enc, n, &det, &s.input, samples, s.seed)?;
        for (label, p, sigma) in [
            ("detected_failure", mc.p_f, mc.p_f_sigma),
            ("non_detected_error", mc.p_nde, mc.p_nde_sigma),
        ] {
            let mut row = base();
            row.push(("record", Value::str("mc")));
            row.push(("outcome", Value::str(label)));
            row.push(("probability", Value::Num(p)));
            row.push(("sigma", Value::Num(sigma)));
            t.push(row);
        }
    }
    s.emit(&t)
}

const CSIGN_COLUMNS: &[&str] = &[
    "record",
    "encoding",
    "n",
    "eta",
    "dark",
    "input",
    "class_a",
    "class_b",
    "true_pattern",
    "probability",
    "fidelity",
    "p_false_success",
    "trunc_bound",
];

fn cmd_csign(a: &CsignArgs) -> Result<(), CliError> {
    let s = Settings::resolve(&a.common, "pol", "1")?;
    reject_mc(&s, "csign")?;
    let det = s.detector()?;
    let qb = qubit(
        a.alpha_b
            .clone()
            .or_else(|| s.file.get("alpha_b").map(str::to_string))
            .unwrap_or_default()
            .as_str(),
        a.beta_b
            .clone()
            .or_else(|| s.file.get("beta_b").map(str::to_string))
            .unwrap_or_default()
            .as_str(),
        "alpha-b",
        "beta-b",
    )?;
    let minimal = a.minimal || s.file.flag("minimal")?;
    let number_resolving = !(a.no_number_resolving || s.file.flag("no_number_resolving")?);
    if !minimal && !number_resolving {
        return Err(CliError::Usage(
            "--no-number-resolving needs --minimal".into(),
        ));
    }
    let qa = s.input;
    let amps = [
        qa.alpha() * qb.alpha(),
        qa.alpha() * qb.beta(),
        qa.beta() * qb.alpha(),
        qa.beta() * qb.beta(),
    ];

    let (report, label): (CsignReport, &str) = if minimal {
        let enc = s.encoding()?;
        if enc != Encoding::Polarization || s.n()? != 1 {
            return Err(CliError::Usage(
                "--minimal runs the polarization setup with n = 1".into(),
            ));
        }
        let input = enc.encode_two(amps)?;
        let ancilla = build_t_prime_n(1, enc)?;
        let r = csign_minimal(&input, &ancilla, &det, number_resolving)?;
        (
            r,
            if number_resolving {
                "minimal"
            } else {
                "minimal_click"
            },
        )
    } else {
        let enc = s.encoding()?;
        let input = enc.encode_two(amps)?;
        (csign(&input, s.n()?, enc, &det)?, "teleported")
    };
    check_truncation(report.truncation_bound)?;

    let mut t = Table::new(CSIGN_COLUMNS);
    let base = || {
        vec![
            ("encoding", Value::str(report.encoding.to_string())),
            ("n", Value::Int(report.n as i64)),
            ("eta", Value::Num(det.eta())),
            ("dark", Value::Num(det.dark_mean())),
            (
                "input",
                Value::str(format!(
                    "{};{};{};{}",
                    fmt_complex(qa.alpha()),
                    fmt_complex(qa.beta()),
                    fmt_complex(qb.alpha()),
                    fmt_complex(qb.beta())
                )),
            ),
            ("trunc_bound", Value::Num(report.truncation_bound)),
        ]
    };
    for b in &report.branches {
        let mut row = base();
        row.push(("record", Value::str(format!("{label}_branch"))));
        row.push(("class_a", Value::str(class_text(b.class_a))));
        row.push(("class_b", Value::str(class_text(b.class_b))));
        row.push(("true_pattern", Value::str(b.true_pattern.to_string())));
        row.push(("probability", Value::Num(b.probability)));
        row.push(("fidelity", Value::opt(b.fidelity)));
        t.push(row);
    }
    let mut row = base();
    row.push(("record", Value::str(format!("{label}_total"))));
    row.push(("class_a", Value::str("success")));
    row.push(("class_b", Value::str("success")));
    row.push(("probability", Value::Num(report.success_probability())));
    row.push(("fidelity", Value::Num(report.min_success_fidelity())));
    row.push((
        "p_false_success",
        Value::Num(report.false_success_probability(ERROR_FIDELITY)),
    ));
    t.push(row);
    s.emit(&t)
}

fn class_text(c: TeleportClass) -> String {
    match c {
        TeleportClass::Success { k, correction } => format!("success(k={k};m={correction})"),
        other => other.label().to_string(),
    }
}

const PREP_COLUMNS: &[&str] = &[
    "record",
    "chain",
    "eta",
    "dark",
    "probability",
    "fidelity",
    "p_false_success",
    "key",
    "re",
    "im",
];

/// Most likely heralded state, herald probability, mean fidelity given the
/// herald and the probability of a heralded but wrong state.
struct PrepResult {
    state: FockState,
    probability: f64,
    fidelity: f64,
    p_false: f64,
}

fn run_chain(chain: Chain, det: &DetectorModel) -> Result<PrepResult, CliError> {
    let from_post = |state: FockState, probability: f64, enc: Encoding| {
        let fidelity = t_prime_1_fidelity(&state, enc)?;
        Ok::<_, CliError>(PrepResult {
            state,
            probability,
            fidelity,
            p_false: 0.0,
        })
    };
    // (probability, fidelity, state) of every heralded branch
    let heralded: Vec<(f64, f64, FockState)> = match chain {
        Chain::TPrime1Klm => {
            let r = build_t_prime_1_klm_via_ns(DEFAULT_NS_PROBABILITY)?;
            return from_post(r.state, r.probability, Encoding::DualRailKlm);
        }
        Chain::TPrime1Pol => {
            let r = build_t_prime_1_pol_via_encoders(
                DEFAULT_NS_PROBABILITY,
                DEFAULT_ENCODER_PROBABILITY,
            )?;
            return from_post(r.state, r.probability, Encoding::Polarization);
        }
        Chain::BellToGhz => bell_to_ghz(&bell_pair(), &bell_pair(), det)?
            .into_iter()
            .filter(|b| b.heralded)
            .map(|b| (b.probability, b.fidelity.unwrap_or(0.0), b.output_state))
            .collect(),
        Chain::GhzToCluster => {
            let target = build_t_prime_n(1, Encoding::Polarization)?;
            let mut out = Vec::new();
            for b in ghz_to_cluster(&ghz_state(), &ghz_state(), det)? {
                if b.class == ClusterClass::Success {
                    let st = cluster_to_t_prime(&b.output_state)?;
                    out.push((b.probability, st.fidelity(&target)?, st));
                }
            }
            out
        }
    };
    let Some(best) = heralded
        .iter()
        .max_by(|x, y| x.0.total_cmp(&y.0))
        .map(|b| b.2.clone())
    else {
        return Err(CliError::Usage(
            "the chain never heralds with these detectors".into(),
        ));
    };
    let probability: f64 = heralded.iter().map(|b| b.0).sum();
    Ok(PrepResult {
        state: best,
        probability,
        fidelity: heralded.iter().map(|b| b.0 * b.1).sum::<f64>() / probability,
        p_false: heralded
            .iter()
            .filter(|b| b.1 < ERROR_FIDELITY)
            .map(|b| b.0)
            .sum(),
    })
}

fn cmd_prep(a: &PrepArgs) -> Result<(), CliError> {
    let s = Settings::resolve(&a.common, "pol", "1")?;
    reject_mc(&s, "prep")?;
    let det = s.detector()?;
    let chain = match a.chain {
        Some(c) => c,
        None => s
            .file
            .parsed("chain", |v| v.parse::<Chain>())?
            .ok_or_else(|| CliError::Usage("--chain is required".into()))?,
    };
    let dump = a.dump || s.file.flag("dump")?;
    let r = run_chain(chain, &det)?;
    let name = chain.to_possible_value().expect("named chain");
    let name = name.get_name();

    let mut t = Table::new(PREP_COLUMNS);
    let base = || {
        vec![
            ("chain", Value::str(name)),
            ("eta", Value::Num(det.eta())),
            ("dark", Value::Num(det.dark_mean())),
        ]
    };
    let mut row = base();
    row.push(("record", Value::str("summary")));
    row.push(("probability", Value::Num(r.probability)));
    row.push(("fidelity", Value::Num(r.fidelity)));
    row.push(("p_false_success", Value::Num(r.p_false)));
    t.push(row);
    if dump {
        for (k, amp) in r.state.terms() {
            let mut row = base();
            row.push(("record", Value::str("amplitude")));
            row.push(("key", Value::str(k.to_string())));
            row.push(("re", Value::Fixed(amp.re)));
            row.push(("im", Value::Fixed(amp.im)));
            t.push(row);
        }
    }
    s.emit(&t)
}

const SWEEP_COLUMNS: &[&str] = &[
    "encoding",
    "n",
    "eta",
    "dark",
    "p_success",
    "p_f",
    "p_nde",
    "p_e",
    "trunc_bound",
    "alpha",
    "beta",
];

const MC_COLUMNS: &[&str] = &["mc_p_f", "mc_p_f_sigma", "mc_p_nde", "mc_p_nde_sigma"];

fn cmd_error_analysis(a: &SweepArgs) -> Result<(), CliError> {
    let s = Settings::resolve(&a.common, "klm,pol", "1,2,3,4")?;
    if let Some(bad) = s.ns.iter().find(|&&n| n > 6) {
        return Err(CliError::Usage(format!(
            "error-analysis supports n up to 6, got {bad}"
        )));
    }
    let grid = SweepGrid {
        encodings: s.encodings.clone(),
        ns: s.ns.clone(),
        etas: s.etas.clone(),
        darks: s.darks.clone(),
    };
    let reports = sweep(&grid, &s.input)?;

    let mut columns = SWEEP_COLUMNS.to_vec();
    if s.mc_samples.is_some() {
        columns.extend_from_slice(MC_COLUMNS);
    }
    let mut t = Table::new(&columns);
    for r in &reports {
        let mut row = vec![
            ("encoding", Value::str(r.encoding.to_string())),
            ("n", Value::Int(r.n as i64)),
            ("eta", Value::Num(r.eta)),
            ("dark", Value::Num(r.dark_mean)),
            ("p_success", Value::Num(r.p_success)),
            ("p_f", Value::Num(r.p_f)),
            ("p_nde", Value::Num(r.p_nde)),
            ("p_e", Value::Num(r.p_e)),
            ("trunc_bound", Value::Num(r.truncation_bound)),
            ("alpha", Value::str(fmt_complex(r.input.alpha()))),
            ("beta", Value::str(fmt_complex(r.input.beta()))),
        ];
        if let Some(samples) = s.mc_samples {
            let det = DetectorModel::new(r.eta, r.dark_mean)?;
            let mc = mc_estimate(r.encoding, r.n, &det, &r.input, samples, s.seed)?;
            row.extend([
                ("mc_p_f", Value::Num(mc.p_f)),
                ("mc_p_f_sigma", Value::Num(mc.p_f_sigma)),
                ("mc_p_nde", Value::Num(mc.p_nde)),
                ("mc_p_nde_sigma", Value::Num(mc.p_nde_sigma)),
            ]);
        }
        t.push(row);
    }
    s.emit(&t)?;

    let plot_dir = a
        .plot_data
        .clone()
        .or_else(|| s.file.get("plot_data").map(PathBuf::from));
    if let Some(dir) = plot_dir {
        write_plot_data(&dir, &reports, &s)?;
    }
    Ok(())
}

/// Figure series at the first η and λτ of the grid: `fig2.dat` holds the
/// KLM `p_f` and `p_e`, `fig3.dat` `p_f` and `fig4.dat` `p_e` for both
/// encodings. Missing points are written as `nan`.
fn write_plot_data(dir: &Path, reports: &[ErrorReport], s: &Settings) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let (eta, dark) = (s.etas[0], s.darks[0]);
    let find = |enc: Encoding, n: usize| {
        reports
            .iter()
            .find(|r| r.encoding == enc && r.n == n && r.eta == eta && r.dark_mean == dark)
    };
    let num = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), output::fmt_sig);
    let header = format!(
        "# eta={} dark={}\n",
        output::fmt_sig(eta),
        output::fmt_sig(dark)
    );
    let (klm, pol) = (Encoding::DualRailKlm, Encoding::Polarization);

    let mut fig2 = header.clone() + "# n p_f p_e (klm)\n";
    let mut fig3 = header.clone() + "# n p_f_klm p_f_pol\n";
    let mut fig4 = header + "# n p_e_klm p_e_pol\n";
    for &n in &s.ns {
        let (k, p) = (find(klm, n), find(pol, n));
        if k.is_some() {
            fig2 += &format!("{n} {} {}\n", num(k.map(|r| r.p_f)), num(k.map(|r| r.p_e)));
        }
        fig3 += &format!("{n} {} {}\n", num(k.map(|r| r.p_f)), num(p.map(|r| r.p_f)));
        fig4 += &format!("{n} {} {}\n", num(k.map(|r| r.p_e)), num(p.map(|r| r.p_e)));
    }
    for (name, body) in [("fig2.dat", fig2), ("fig3.dat", fig3), ("fig4.dat", fig4)] {
        let path = dir.join(name);
        std::fs::write(&path, body)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Teleport(c) => cmd_teleport(c),
        Command::Csign(a) => cmd_csign(a),
        Command::Prep(a) => cmd_prep(a),
        Command::ErrorAnalysis(a) => cmd_error_analysis(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
