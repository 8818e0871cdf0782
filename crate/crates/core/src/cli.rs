//! Command-line front end.
//!
//! Every command takes its settings from flags, from a JSON file given with
//! `--config`, or both; flags win. Exit codes: 0 success, 2 bad
//! configuration, 3 solver failure, 4 precondition violation.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channels::pauli_transfer;
use crate::channels::{
    channel_from_json, depolarizing, flip_channel, ChannelSpec, FlipAxis, KrausChannel,
};
use crate::circuit::{figure3, Figure3Config, Panel, FIGURE3_COLUMNS};
use crate::discrim::{optimal_discrimination, povm_bloch_decompose};
use crate::ensembles::{
    apply_channel_to_ensemble, builtin, ensemble_from_json, matrix_to_json, Builtin, Ensemble,
};
use crate::error::Error;
use crate::protocol::{run_exact, run_sampled, Mode};
use crate::twirl::{
    default_probes, fit_depolarizing, fit_transfer, tetrahedral_design, twirl_channel,
    verify_two_design, TwoDesign,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;

/// Significant digits used for CSV numbers.
pub const CSV_DIGITS: usize = 12;

#[derive(Debug, Parser)]
#[command(
    name = "chancode",
    version,
    about = "Twirling, optimal discrimination and channel-coding experiments for qubits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Twirl a channel and fit it to a depolarizing channel.
    Twirl(RunArgs),
    /// Optimal minimum-error measurement of an ensemble, optionally after a channel.
    Discriminate(RunArgs),
    /// Run the channel-coding protocol.
    Protocol(RunArgs),
    /// Reproduce the flip-channel experiment sweep.
    Figure3(RunArgs),
    /// Check that the tetrahedral set twirls probe channels to depolarizing form.
    DesignCheck(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignName {
    Tetrahedral,
    Pauli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PanelArg {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON file with any of the settings below; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Builtin name (SZ, SBB84, TRINE_MOD) or path to an ensemble JSON file.
    #[arg(long)]
    pub ensemble: Option<String>,
    /// Channel as inline JSON, a JSON file, or shorthand such as `flip:x:0.5`,
    /// `depolarizing:0.3` or `identity`.
    #[arg(long)]
    pub channel: Option<String>,
    /// Explicit flip probabilities (comma separated); replaces the sweep.
    #[arg(long, value_delimiter = ',')]
    pub pf: Option<Vec<f64>>,
    /// Sweep as `start:stop:step` or a comma-separated list.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Readout noise used for the noise columns.
    #[arg(long)]
    pub noise_eta: Option<f64>,
    #[arg(long, value_enum)]
    pub panel: Option<PanelArg>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Where to write the per-round JSON-lines transcript of a sampled run.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub design: Option<DesignName>,
}

/// Settings file; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ensemble: Option<String>,
    /// Either a channel object or a string accepted by `--channel`.
    pub channel: Option<Value>,
    pub pf: Option<Vec<f64>>,
    /// Either `start:stop:step` or an explicit list.
    pub sweep: Option<Value>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub noise_eta: Option<f64>,
    pub panel: Option<PanelArg>,
    pub mode: Option<ModeArg>,
    pub rounds: Option<usize>,
    pub transcript: Option<PathBuf>,
    pub design: Option<DesignName>,
}

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ConvergenceFailure(_) => EXIT_SOLVER,
            Error::NotEqualPriors => EXIT_PRECONDITION,
            _ => EXIT_CONFIG,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Flags merged over the config file.
#[derive(Debug, Clone, Default)]
struct Settings {
    ensemble: Option<String>,
    channel: Option<Value>,
    pf: Option<Vec<f64>>,
    sweep: Option<Value>,
    shots: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    noise_eta: Option<f64>,
    panel: Option<PanelArg>,
    mode: Option<ModeArg>,
    rounds: Option<usize>,
    transcript: Option<PathBuf>,
    design: Option<DesignName>,
}

fn settings(args: &RunArgs) -> CliResult<Settings> {
    let file = match &args.config {
        Some(path) => {
            let text = read(path)?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    Ok(Settings {
        ensemble: args.ensemble.clone().or(file.ensemble),
        channel: args.channel.clone().map(Value::String).or(file.channel),
        pf: args.pf.clone().or(file.pf),
        sweep: args.sweep.clone().map(Value::String).or(file.sweep),
        shots: args.shots.or(file.shots),
        seed: args.seed.or(file.seed),
        out: args.out.clone().or(file.out),
        format: args.format.or(file.format),
        noise_eta: args.noise_eta.or(file.noise_eta),
        panel: args.panel.or(file.panel),
        mode: args.mode.or(file.mode),
        rounds: args.rounds.or(file.rounds),
        transcript: args.transcript.clone().or(file.transcript),
        design: args.design.or(file.design),
    })
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

/// Parses `--channel` text: inline JSON, a file, or shorthand.
pub fn parse_channel(text: &str) -> std::result::Result<KrausChannel, Error> {
    let t = text.trim();
    if t.starts_with('{') {
        return channel_from_json(t);
    }
    let lower = t.to_ascii_lowercase();
    let parts: Vec<&str> = lower.split(':').collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number '{s}' in channel '{t}'")))
    };
    match parts.as_slice() {
        ["identity"] | ["id"] => return Ok(KrausChannel::identity(2)),
        ["flip", axis, p] => return flip_channel(axis.parse::<FlipAxis>()?, num(p)?),
        ["depolarizing", eta] | ["dep", eta] => return depolarizing(num(eta)?, 2),
        _ => {}
    }
    let path = Path::new(t);
    if path.is_file() {
        let body = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {t}: {e}")))?;
        return channel_from_json(&body);
    }
    Err(Error::Parse(format!(
        "channel '{t}' is neither JSON, a file, nor one of identity, flip:<x|y>:<p>, depolarizing:<eta>"
    )))
}

fn channel_setting(v: &Value) -> CliResult<KrausChannel> {
    match v {
        Value::String(s) => Ok(parse_channel(s)?),
        other => {
            let spec: ChannelSpec = serde_json::from_value(other.clone())
                .map_err(|e| CliError::config(format!("channel: {e}")))?;
            Ok(spec.build()?)
        }
    }
}

/// Builtin name or path to an ensemble file.
pub fn parse_ensemble(text: &str) -> std::result::Result<Ensemble, Error> {
    if let Ok(b) = text.parse::<Builtin>() {
        return Ok(builtin(b));
    }
    let path = Path::new(text);
    if path.is_file() {
        let body = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {text}: {e}")))?;
        return ensemble_from_json(&body);
    }
    Err(Error::Parse(format!(
        "ensemble '{text}' is neither a builtin (SZ, SBB84, TRINE_MOD) nor a file"
    )))
}

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_sweep(text: &str) -> std::result::Result<Vec<f64>, Error> {
    let bad = || Error::Parse(format!("bad sweep '{text}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, step] = parts.as_slice() else {
            return Err(bad());
        };
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step).round() as usize;
        if n > 1_000_000 {
            return Err(bad());
        }
        (0..=n)
            .map(|k| {
                if n == 0 {
                    a
                } else {
                    a + (b - a) * k as f64 / n as f64
                }
            })
            .collect()
    } else {
        text.split(',')
            .map(num)
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    check_probabilities(&values)?;
    Ok(values)
}

fn check_probabilities(values: &[f64]) -> std::result::Result<(), Error> {
    if values.is_empty() {
        return Err(Error::Parse("empty sweep".into()));
    }
    match values
        .iter()
        .find(|p| !(0.0..=1.0).contains(*p) || p.is_nan())
    {
        Some(&p) => Err(Error::ProbOutOfRange(p)),
        None => Ok(()),
    }
}

fn sweep_setting(s: &Settings) -> CliResult<Vec<f64>> {
    if let Some(pf) = &s.pf {
        check_probabilities(pf)?;
        return Ok(pf.clone());
    }
    match &s.sweep {
        None => Ok(crate::circuit::default_sweep()),
        Some(Value::String(t)) => Ok(parse_sweep(t)?),
        Some(other) => {
            let v: Vec<f64> = serde_json::from_value(other.clone())
                .map_err(|e| CliError::config(format!("sweep: {e}")))?;
            check_probabilities(&v)?;
            Ok(v)
        }
    }
}

/// Rounds to `digits` significant digits and prints the shortest form.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("formatted float parses");
    format!("{rounded}")
}

fn csv_pairs(rows: &[(String, f64)]) -> String {
    let mut out = String::from("quantity,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{}", fmt_sig(*v, CSV_DIGITS));
    }
    out
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

/// Explicit `--format`, else the `--out` extension, else the command default.
fn output_format(s: &Settings, default: Format) -> Format {
    let by_extension = s
        .out
        .as_deref()
        .and_then(|p| p.extension())
        .and_then(|e| e.to_str())
        .and_then(|e| match e.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        });
    s.format.or(by_extension).unwrap_or(default)
}

fn design(s: &Settings) -> TwoDesign {
    match s.design.unwrap_or(DesignName::Tetrahedral) {
        DesignName::Tetrahedral => tetrahedral_design(),
        DesignName::Pauli => TwoDesign::pauli_group(),
    }
}

fn require_channel(s: &Settings) -> CliResult<KrausChannel> {
    match &s.channel {
        Some(v) => channel_setting(v),
        None => Err(CliError::config("--channel is required")),
    }
}

fn require_ensemble(s: &Settings) -> CliResult<Ensemble> {
    match &s.ensemble {
        Some(t) => Ok(parse_ensemble(t)?),
        None => Err(CliError::config("--ensemble is required")),
    }
}

fn cmd_twirl(s: &Settings) -> CliResult<String> {
    let n = require_channel(s)?;
    let before = pauli_transfer(&n)?;
    let twirled = twirl_channel(&n, &design(s))?;
    let after = pauli_transfer(&twirled)?;
    let fit = fit_depolarizing(&twirled)?;
    let raw_fit = fit_transfer(&before);
    Ok(match output_format(s, Format::Json) {
        Format::Json => pretty(&json!({
            "eta": fit.eta,
            "residual": fit.residual,
            "shrink": fit.shrink(),
            "residual_before": raw_fit.residual,
            "pauli_transfer_before": before.t,
            "pauli_transfer_after": after.t,
        })),
        Format::Csv => {
            let mut rows = vec![
                ("eta".to_string(), fit.eta),
                ("residual".to_string(), fit.residual),
                ("shrink".to_string(), fit.shrink()),
                ("residual_before".to_string(), raw_fit.residual),
            ];
            for (name, t) in [("before", before.t), ("after", after.t)] {
                for (i, row) in t.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        rows.push((format!("{name}_t{i}{j}"), *v));
                    }
                }
            }
            csv_pairs(&rows)
        }
    })
}

fn cmd_discriminate(s: &Settings) -> CliResult<String> {
    let mut e = require_ensemble(s)?;
    if let Some(v) = &s.channel {
        e = apply_channel_to_ensemble(&e, &channel_setting(v)?)?;
    }
    let r = optimal_discrimination(&e)?;
    let bloch = povm_bloch_decompose(&r.povm)?;
    Ok(match output_format(s, Format::Json) {
        Format::Json => pretty(&json!({
            "p_guess": r.p_guess,
            "trivial": r.trivial,
            "certificate_residual": r.certificate_residual,
            "povm": r.povm.elements().iter().map(matrix_to_json).collect::<Vec<_>>(),
            "povm_bloch": bloch.items.iter().map(|(w, m)| json!({"weight": w, "bloch": m.as_array()})).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let mut rows = vec![
                ("p_guess".to_string(), r.p_guess),
                ("trivial".to_string(), if r.trivial { 1.0 } else { 0.0 }),
                ("certificate_residual".to_string(), r.certificate_residual),
            ];
            for (k, m) in r.povm.elements().iter().enumerate() {
                for i in 0..m.dim() {
                    for j in 0..m.dim() {
                        rows.push((format!("M{k}_{i}{j}_re"), m[(i, j)].re));
                        rows.push((format!("M{k}_{i}{j}_im"), m[(i, j)].im));
                    }
                }
            }
            csv_pairs(&rows)
        }
    })
}

/// Default transcript location next to the report.
fn transcript_path(s: &Settings) -> Option<PathBuf> {
    s.transcript
        .clone()
        .or_else(|| s.out.as_ref().map(|p| p.with_extension("transcript.jsonl")))
}

fn cmd_protocol(s: &Settings) -> CliResult<String> {
    let e = require_ensemble(s)?;
    let n = require_channel(s)?;
    let w = design(s);
    if !e.has_equal_priors() {
        return Err(Error::NotEqualPriors.into());
    }
    let fixed = optimal_discrimination(&e)?.povm;
    let mode = s.mode.unwrap_or(ModeArg::Exact);
    let seed = s.seed.unwrap_or(0);
    let rounds = s.rounds.unwrap_or(10_000);
    let (report, meta) = match mode {
        ModeArg::Exact => (run_exact(&e, &n, &w, &fixed)?, json!({"mode": Mode::Exact})),
        ModeArg::Sampled => {
            let (t, r) = run_sampled(&e, &n, &w, &fixed, rounds, seed)?;
            if let Some(path) = transcript_path(s) {
                write_file(&path, &t.to_jsonl())?;
            }
            (
                r,
                json!({"mode": Mode::Sampled, "rounds": rounds, "seed": seed}),
            )
        }
    };
    Ok(match output_format(s, Format::Json) {
        Format::Json => {
            let mut v = serde_json::to_value(&report).expect("report serializes");
            if let (Value::Object(obj), Value::Object(extra)) = (&mut v, meta) {
                obj.extend(extra);
            }
            pretty(&v)
        }
        Format::Csv => csv_pairs(&[
            ("p_id".into(), report.p_id),
            ("p_N".into(), report.p_n),
            ("p_N_fixed".into(), report.p_n_fixed),
            ("p_TN".into(), report.p_tn),
            ("eta_fit".into(), report.eta_fit),
            (
                "measurement_updated".into(),
                if report.measurement_updated { 1.0 } else { 0.0 },
            ),
        ]),
    })
}

fn cmd_figure3(s: &Settings) -> CliResult<String> {
    let panel = match s.panel.unwrap_or(PanelArg::A) {
        PanelArg::A => Panel::A,
        PanelArg::B => Panel::B,
    };
    let mut cfg = Figure3Config::new(panel);
    cfg.sweep = sweep_setting(s)?;
    if let Some(shots) = s.shots {
        if shots == 0 {
            return Err(CliError::config("shots must be at least 1"));
        }
        cfg.shots = shots;
    }
    cfg.seed = s.seed.unwrap_or(0);
    if let Some(eta) = s.noise_eta {
        cfg.noise_eta = eta;
    }
    let rows = figure3(&cfg, &design(s))?;
    Ok(match output_format(s, Format::Csv) {
        Format::Csv => {
            let mut out = FIGURE3_COLUMNS.join(",");
            out.push('\n');
            for r in &rows {
                let cells: Vec<String> = r
                    .columns()
                    .iter()
                    .map(|v| fmt_sig(*v, CSV_DIGITS))
                    .collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => pretty(&json!({
            "panel": panel,
            "shots": cfg.shots,
            "seed": cfg.seed,
            "noise_eta": cfg.noise_eta,
            "rows": rows,
        })),
    })
}

fn cmd_design_check(s: &Settings) -> CliResult<String> {
    let name = s.design.unwrap_or(DesignName::Tetrahedral);
    let w = design(s);
    let ok = verify_two_design(&w, &default_probes());
    let label = match name {
        DesignName::Tetrahedral => "tetrahedral",
        DesignName::Pauli => "pauli",
    };
    Ok(match output_format(s, Format::Json) {
        Format::Json => pretty(&json!({"design": label, "elements": w.len(), "two_design": ok})),
        Format::Csv => format!("design,elements,two_design\n{label},{},{ok}\n", w.len()),
    })
}

/// Runs one parsed command, returning the text it produced.
pub fn execute(cli: &Cli) -> CliResult<String> {
    let (args, f): (&RunArgs, fn(&Settings) -> CliResult<String>) = match &cli.command {
        Command::Twirl(a) => (a, cmd_twirl),
        Command::Discriminate(a) => (a, cmd_discriminate),
        Command::Protocol(a) => (a, cmd_protocol),
        Command::Figure3(a) => (a, cmd_figure3),
        Command::DesignCheck(a) => (a, cmd_design_check),
    };
    let s = settings(args)?;
    let text = f(&s)?;
    match &s.out {
        Some(path) => write_file(path, &text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::config(format!("cannot write output: {e}")))?;
        }
    }
    Ok(text)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
