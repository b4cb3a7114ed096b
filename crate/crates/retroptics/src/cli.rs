//! Command-line front end. The binary only forwards to [`run`].

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    estimate_elements, estimate_moments, read_csv, reconstruct_from_records, write_reconstruction_csv, ElementAnalysis, ProjectionRecord,
    ReferenceCoherence, ScanRecord,
};
use crate::engineer::{characteristic_roots, design, DetectionPattern, EngineeredTarget, FirstColumnOptimum};
use crate::error::{Error, Result};
use crate::experiments::{monte_carlo, write_counts_csv, write_histogram_csv, ElementMode, ExperimentConfig};
use crate::fock::FockVector;
use crate::multiport::{dft_matrix, realize, reck_decompose, MultiportPlan, UnitaryMatrix};
use crate::phase::DEFAULT_GRID;
use crate::presets::{design_preset, optimal_design, simulation_preset};

const DESIGN_HELP: &str = "\
Target file: JSON array of real amplitudes [1, 1, 1], of [re, im] pairs, or {\"psi\": ...}.
--unitary: `dft`, `optimize`, or a JSON file holding a unitary {\"dim\", \"entries\"} or a plan.
Outputs: --out writes the design record (target, betas, alphas, kappa_bar, efficiency, unitary, plan);
--netlist writes CSV columns kind,p,q,theta,phi (kind = beam_splitter | output_phase).";

const SIMULATE_HELP: &str = "\
Writes into --out:
  histogram.csv  theta_bin,density,stderr,analytic,ideal,canonical,count,retained
  counts.csv     phase,pattern,count,analytic_prob   (pattern as n0-n1-n2-n3)
  analytic.json  exact ideal and detected pattern distributions per phase setting
The seed comes from --seed, then RETROPTICS_SEED, then the config file.";

const ANALYZE_HELP: &str = "\
Input CSV columns by mode (each row has `probability`, or `count` and `trials`):
  phase-dist  gamma,probability,count,trials           2N+2 rows at gamma = 2πm/(2N+2)
  moments     lambda,n,phase,pattern,probability,count,trials
  dmelem      same as moments; pattern is n0-N-n2 (double-bs) or n0-n1 (sv)
Output CSV:
  phase-dist  theta,density,stderr
  moments     lambda,cos_mean,sin_mean,cos_stderr,sin_stderr
  dmelem      n,lambda,re,im,re_stderr,im_stderr";

#[derive(Parser, Debug)]
#[command(name = "retroptics", version, about = "Design and simulate retrodictive photocounting experiments")]
pub struct Cli {
    /// Print a machine-readable result object on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Coherent reference amplitudes that make a pattern project onto a target state.
    #[command(after_help = DESIGN_HELP)]
    Design(DesignArgs),
    /// Monte Carlo photocounting for the four-port single-shot phase measurement.
    #[command(after_help = SIMULATE_HELP)]
    Simulate(SimulateArgs),
    /// Estimate P(θ), trig moments or density-matrix elements from recorded probabilities.
    #[command(after_help = ANALYZE_HELP)]
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    /// Target state JSON file.
    pub target: Option<PathBuf>,
    /// simple-config, dft3, optimal3 or zero-minus-Nplus1.
    #[arg(long, conflicts_with = "target")]
    pub preset: Option<String>,
    /// Multiport: dft, optimize, or a unitary/plan JSON file.
    #[arg(long, default_value = "dft")]
    pub unitary: String,
    /// Comma-separated counts, e.g. 0,1,1. Defaults to no photon at output 0 and one elsewhere.
    #[arg(long, value_delimiter = ',')]
    pub pattern: Option<Vec<usize>>,
    /// N for the zero-minus-Nplus1 preset.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Write the design record as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the beam-splitter netlist as CSV.
    #[arg(long)]
    pub netlist: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Experiment config JSON file.
    pub config: Option<PathBuf>,
    /// fig5_3 or fig5_5.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Total number of runs, split over the phase settings.
    #[arg(long)]
    pub trials: Option<u64>,
    /// RNG seed.
    #[arg(long, env = "RETROPTICS_SEED")]
    pub seed: Option<u64>,
    /// Detector efficiency in (0, 1].
    #[arg(long)]
    pub eta: Option<f64>,
    /// Undo detector loss on the counts before building the histogram.
    #[arg(long)]
    pub correct_efficiency: bool,
    /// Output directory.
    #[arg(long, default_value = "retroptics-out")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyzeMode {
    PhaseDist,
    Moments,
    Dmelem,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    DoubleBs,
    Sv,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Recorded counts or probabilities (CSV).
    pub counts: PathBuf,
    #[arg(long, value_enum)]
    pub mode: AnalyzeMode,
    #[arg(long, value_enum, default_value = "double-bs")]
    pub scheme: Scheme,
    /// Angle γ of the first beam splitter (double-bs).
    #[arg(long)]
    pub bs1_theta: Option<f64>,
    /// Use only patterns with this many counts at output 0 (required for sv).
    #[arg(long)]
    pub n0: Option<usize>,
    /// Reference coherence ϱ_{λ,0} as `re,im` (double-bs).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "alpha")]
    pub coherence: Option<String>,
    /// Amplitude |α| of a phase-averaged coherent reference (double-bs).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of θ points for phase-dist.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Results CSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Outcome of one command.
#[derive(Clone, Debug, Serialize)]
pub struct CommandResult {
    pub status: Status,
    pub summary: String,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub data: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

impl CommandResult {
    fn ok(summary: String, outputs: Vec<String>, data: Value) -> Self {
        Self { status: Status::Ok, summary, outputs, data }
    }
}

/// Parses `args`, runs the command, prints the result and returns the exit
/// code: 0 ok, 1 internal error, 2 user error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let json = cli.json;
    let outcome = std::panic::catch_unwind(|| execute(&cli.command)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(Error::Internal(msg.unwrap_or_else(|| "panic".into())))
    });
    match outcome {
        Ok(res) => {
            if json {
                emit(&serde_json::to_string_pretty(&res).expect("result serializes"));
            } else if !res.summary.is_empty() {
                emit(&res.summary);
            }
            0
        }
        Err(e) => {
            let code = if e.is_user_error() { 2 } else { 1 };
            if json {
                let v = json!({ "status": Status::Error, "summary": e.to_string(), "outputs": [], "exit_code": code });
                emit(&serde_json::to_string_pretty(&v).expect("error serializes"));
            } else {
                eprintln!("error: {e}");
            }
            code
        }
    }
}

/// Writes a line to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(io::stdout().lock(), "{text}");
}

pub fn execute(cmd: &Command) -> Result<CommandResult> {
    match cmd {
        Command::Design(a) => cmd_design(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Analyze(a) => cmd_analyze(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

// ---------------------------------------------------------------------------
// design

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum Amplitudes {
    Real(Vec<f64>),
    Pairs(Vec<[f64; 2]>),
    Fock(FockVector),
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum TargetFile {
    Wrapped { psi: Amplitudes },
    Bare(Amplitudes),
}

/// Parses a target state from JSON text.
pub fn parse_target(text: &str) -> Result<FockVector> {
    let amps = match serde_json::from_str::<TargetFile>(text)? {
        TargetFile::Wrapped { psi } | TargetFile::Bare(psi) => psi,
    };
    Ok(match amps {
        Amplitudes::Real(v) => FockVector::from_real(&v),
        Amplitudes::Pairs(v) => FockVector::new(v.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()),
        Amplitudes::Fock(f) => f,
    })
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum DeviceFile {
    Plan(MultiportPlan),
    Matrix(UnitaryMatrix),
}

/// Full output of `design`.
#[derive(Clone, Debug, Serialize)]
pub struct DesignRecord {
    #[serde(flatten)]
    pub target: EngineeredTarget,
    pub roots: Vec<Complex64>,
    pub unitary: UnitaryMatrix,
    pub plan: MultiportPlan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimum: Option<FirstColumnOptimum>,
}

fn fmt_c(z: Complex64) -> String {
    if z.im >= 0.0 {
        format!("{:.4}+{:.4}i", z.re, z.im)
    } else {
        format!("{:.4}-{:.4}i", z.re, -z.im)
    }
}

fn cmd_design(a: &DesignArgs) -> Result<CommandResult> {
    let (psi, unitary, pattern, optimum, name) = if let Some(p) = &a.preset {
        let pre = design_preset(p, a.n)?;
        (pre.psi, pre.unitary, pre.pattern, pre.optimum, pre.name)
    } else {
        let path = a.target.as_ref().ok_or_else(|| Error::InvalidConfig("give a target file or --preset".into()))?;
        let psi = parse_target(&fs::read_to_string(path)?)?;
        let degree = match psi.degree(1e-12) {
            None => return Err(Error::ZeroTarget),
            Some(0) => {
                return Ok(CommandResult::ok(
                    "no roots: zero-photon target (vacuum needs no reference fields)".into(),
                    vec![],
                    json!({ "roots": [] }),
                ))
            }
            Some(d) => d,
        };
        let pattern = DetectionPattern::new(a.pattern.clone().unwrap_or_else(|| DetectionPattern::canonical(degree + 1).counts().to_vec()));
        let psi = psi.with_cutoff(degree);
        match a.unitary.as_str() {
            "dft" => (psi, dft_matrix(pattern.modes()), pattern, None, "dft".to_string()),
            "optimize" => {
                let pre = optimal_design("optimize", psi, pattern)?;
                (pre.psi, pre.unitary, pre.pattern, pre.optimum, pre.name)
            }
            file => {
                let u = match serde_json::from_str::<DeviceFile>(&fs::read_to_string(file)?)? {
                    DeviceFile::Plan(p) => realize(&p)?,
                    DeviceFile::Matrix(m) => UnitaryMatrix::new(m.entries().clone())?,
                };
                (psi, u, pattern, None, file.to_string())
            }
        }
    };
    let roots = characteristic_roots(&psi)?;
    let target = design(&psi, &unitary, &pattern)?;
    let plan = reck_decompose(&unitary)?;
    let mut outputs = Vec::new();
    if let Some(path) = &a.netlist {
        plan.write_netlist(create(path)?)?;
        outputs.push(path.display().to_string());
    }
    let record = DesignRecord { target, roots, unitary, plan, optimum };
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &record)?;
        writeln!(w)?;
        w.flush()?;
        outputs.push(path.display().to_string());
    }
    let t = &record.target;
    let alphas: Vec<String> = t.alphas.iter().skip(1).map(|z| fmt_c(*z)).collect();
    let summary = format!(
        "{name}: pattern {:?}, P_ψ = {:.4}, |κ̄|² = {:.4e}, α = ({})",
        t.pattern.counts(),
        t.efficiency,
        t.kappa_bar.norm_sqr(),
        alphas.join(", ")
    );
    Ok(CommandResult::ok(summary, outputs, serde_json::to_value(&record)?))
}

// ---------------------------------------------------------------------------
// simulate

fn cmd_simulate(a: &SimulateArgs) -> Result<CommandResult> {
    let mut cfg: ExperimentConfig = match (&a.preset, &a.config) {
        (Some(p), _) => simulation_preset(p)?,
        (None, Some(path)) => serde_json::from_str(&fs::read_to_string(path)?)?,
        (None, None) => return Err(Error::InvalidConfig("give a config file or --preset".into())),
    };
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(e) = a.eta {
        cfg.detector_efficiency = e;
    }
    cfg.correct_efficiency |= a.correct_efficiency;
    let result = monte_carlo(&cfg)?;
    fs::create_dir_all(&a.out)?;
    let hist = a.out.join("histogram.csv");
    let counts = a.out.join("counts.csv");
    let analytic = a.out.join("analytic.json");
    write_histogram_csv(&result, create(&hist)?)?;
    write_counts_csv(&result, create(&counts)?)?;
    let comparison = json!({
        "config": cfg,
        "settings": result.settings.iter().map(|s| json!({
            "phase": s.phase,
            "trials": s.trials,
            "truncated_mass": s.truncated_mass,
            "ideal": pattern_map(&s.ideal),
            "detected": pattern_map(&s.detected),
        })).collect::<Vec<_>>(),
        "histogram": result.histogram,
    });
    let mut w = create(&analytic)?;
    serde_json::to_writer_pretty(&mut w, &comparison)?;
    writeln!(w)?;
    w.flush()?;
    let worst = result.histogram.iter().filter(|h| h.stderr > 0.0).map(|h| (h.density - h.analytic).abs() / h.stderr).fold(0.0, f64::max);
    let summary = format!(
        "{} trials over {} settings, seed {}: {} histogram rows, largest deviation {:.2} standard errors",
        cfg.trials,
        cfg.phase_settings.len(),
        cfg.seed,
        result.histogram.len(),
        worst
    );
    let outputs = [hist, counts, analytic].iter().map(|p| p.display().to_string()).collect();
    Ok(CommandResult::ok(summary, outputs, json!({ "histogram": result.histogram })))
}

fn pattern_map(d: &crate::experiments::PatternProbabilities) -> Value {
    Value::Object(d.iter().map(|(k, v)| (crate::experiments::pattern_label(k), json!(v))).collect())
}

// ---------------------------------------------------------------------------
// analyze

fn parse_complex(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| Error::InvalidConfig(format!("bad number `{t}` in `{s}`")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Error::InvalidConfig(format!("expected `re,im`, got `{s}`"))),
    }
}

fn element_config(a: &AnalyzeArgs, records: &[ScanRecord]) -> Result<ElementAnalysis> {
    let mode = match a.scheme {
        Scheme::DoubleBs => ElementMode::DoubleBs {
            bs1_theta: a.bs1_theta.ok_or_else(|| Error::InvalidConfig("double-bs needs --bs1-theta".into()))?,
            n0: a.n0,
        },
        Scheme::Sv => {
            let n0 = match a.n0 {
                Some(k) => k,
                None => {
                    let mut firsts: Vec<usize> =
                        records.iter().filter_map(|r| crate::experiments::parse_pattern_label(&r.pattern).ok()?.first().copied()).collect();
                    firsts.dedup();
                    match firsts.as_slice() {
                        [k] => *k,
                        _ => return Err(Error::InvalidConfig("sv table mixes several n0; pass --n0".into())),
                    }
                }
            };
            ElementMode::SteuernagelVaccaro { n0 }
        }
    };
    let reference = match (&a.coherence, a.alpha) {
        (Some(s), _) => {
            let z = parse_complex(s)?;
            ReferenceCoherence::Value { re: z.re, im: z.im }
        }
        (None, Some(alpha_mag)) => ReferenceCoherence::MixedCoherent { alpha_mag },
        (None, None) if a.scheme == Scheme::Sv => ReferenceCoherence::Value { re: 0.0, im: 0.0 },
        (None, None) => return Err(Error::InvalidConfig("double-bs needs --coherence or --alpha".into())),
    };
    Ok(ElementAnalysis { mode, reference })
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<CommandResult> {
    let file = File::open(&a.counts)?;
    let mut buf: Vec<u8> = Vec::new();
    let (summary, data) = match a.mode {
        AnalyzeMode::PhaseDist => {
            let records: Vec<ProjectionRecord> = read_csv(file)?;
            let rec = reconstruct_from_records(&records, a.grid)?;
            write_reconstruction_csv(&rec, &mut buf)?;
            let peak = rec.distribution.density.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (
                format!("P(θ) from {} projections on {} grid points, peak density {:.6}", records.len(), a.grid, peak),
                serde_json::to_value(&rec)?,
            )
        }
        AnalyzeMode::Moments => {
            let records: Vec<ScanRecord> = read_csv(file)?;
            let est = estimate_moments(&records, &element_config(a, &records)?)?;
            let mut wtr = csv::Writer::from_writer(&mut buf);
            wtr.write_record(["lambda", "cos_mean", "sin_mean", "cos_stderr", "sin_stderr"])?;
            let mut lines = Vec::new();
            for m in &est {
                wtr.write_record([
                    m.lambda.to_string(),
                    format!("{:.12e}", m.cos_mean),
                    format!("{:.12e}", m.sin_mean),
                    format!("{:.6e}", m.cos_stderr),
                    format!("{:.6e}", m.sin_stderr),
                ])?;
                lines.push(format!(
                    "λ = {}: ⟨cos⟩ = {:.6} ± {:.2e}, ⟨sin⟩ = {:.6} ± {:.2e}",
                    m.lambda, m.cos_mean, m.cos_stderr, m.sin_mean, m.sin_stderr
                ));
            }
            wtr.flush()?;
            drop(wtr);
            (lines.join("\n"), serde_json::to_value(&est)?)
        }
        AnalyzeMode::Dmelem => {
            let records: Vec<ScanRecord> = read_csv(file)?;
            let est = estimate_elements(&records, &element_config(a, &records)?)?;
            let mut wtr = csv::Writer::from_writer(&mut buf);
            wtr.write_record(["n", "lambda", "re", "im", "re_stderr", "im_stderr"])?;
            let mut lines = Vec::new();
            for e in &est {
                wtr.write_record([
                    e.n.to_string(),
                    e.lambda.to_string(),
                    format!("{:.12e}", e.value.re),
                    format!("{:.12e}", e.value.im),
                    format!("{:.6e}", e.stderr_re),
                    format!("{:.6e}", e.stderr_im),
                ])?;
                lines.push(format!("ρ[{},{}] = {}", e.n, e.n + e.lambda, fmt_c(e.value)));
            }
            wtr.flush()?;
            drop(wtr);
            (lines.join("\n"), serde_json::to_value(&est)?)
        }
    };
    let mut outputs = Vec::new();
    match &a.out {
        Some(path) => {
            fs::write(path, &buf)?;
            outputs.push(path.display().to_string());
        }
        None => {
            let _ = io::stdout().lock().write_all(&buf);
        }
    }
    Ok(CommandResult::ok(summary, outputs, data))
}
