use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use mblo::format::{cmatrix_from_json, fmt_f64, num, to_json_string};
use mblo::graph::brickwork_graph;
use mblo::io_relation::{assemble_mblo_gram, eval_gram};
use mblo::noise::{report_from_gram, haar_sweep};
use mblo::numerics::{haar_unitary, symplectic_of_unitary};
use mblo::sampling::{
    distribution_tvd, empirical_frequencies, output_state_from, patterns_up_to, sample, simulable,
    summary_json, write_samples_csv, write_samples_jsonl, GaussianState,
};
use mblo::synthesis::{clements_decompose, schedule_from_plan};
use mblo::ComplexMatrix;
use serde_json::{json, Value};

const EXIT_COMPUTE: u8 = 2;
const EXIT_REFUSED: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// Largest mode count accepted by `sample --oracle`.
const ORACLE_MAX_MODES: usize = 3;
/// Photon-number cutoff of the oracle comparison.
const ORACLE_CUTOFF: usize = 6;
const RECONSTRUCTION_TOL: f64 = 1e-7;

#[derive(Parser, Debug)]
#[command(name = "mblo", version, about = "Measurement-based linear optics on CV cluster states")]
struct Cli {
    /// Output file for the main artifact (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and sampling.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a unitary into a brickwork phase schedule.
    Synthesize {
        #[command(flatten)]
        source: UnitarySource,
    },
    /// Easiness and hardness squeezing thresholds for a unitary.
    Threshold {
        #[command(flatten)]
        source: UnitarySource,
        /// TVD targets for hardness levels.
        #[arg(long, value_delimiter = ',')]
        beta: Vec<f64>,
        /// Input state: `vacuum` or `squeezed:R0:K`.
        #[arg(long, default_value = "vacuum")]
        state: String,
    },
    /// Easiness thresholds over Haar-random unitaries.
    Sweep {
        /// Mode counts.
        #[arg(long = "M", value_delimiter = ',', required = true)]
        modes: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, env = "MBLO_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Sample photon counts from the noisy output state.
    Sample {
        #[command(flatten)]
        source: UnitarySource,
        /// Cluster squeezing parameter.
        #[arg(long)]
        r: f64,
        /// Input state: `vacuum` or `squeezed:R0:K`.
        #[arg(long, default_value = "vacuum")]
        state: String,
        #[arg(long, default_value_t = 10_000)]
        shots: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Compare against exact pattern probabilities (small M only).
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Args, Debug)]
#[group(skip)]
#[command(group(ArgGroup::new("unitary").required(true).args(["haar", "input"])))]
struct UnitarySource {
    /// Haar-random unitary on this many modes.
    #[arg(long)]
    haar: Option<usize>,
    /// JSON file holding a complex matrix (rows of `[re, im]` pairs or reals).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, env = "MBLO_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    #[value(alias = "json")]
    Jsonl,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute(String),
    Refused(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Compute(_) => EXIT_COMPUTE,
            Failure::Refused(_) => EXIT_REFUSED,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Compute(m) | Failure::Refused(m) => m,
        }
    }
}

fn compute(e: mblo::Error) -> Failure {
    Failure::Compute(e.to_string())
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_COMPUTE);
        }
    }
    let out = cli.out.as_deref();
    let result = match &cli.command {
        Command::Synthesize { source } => synthesize(source, out),
        Command::Threshold { source, beta, state } => threshold(source, beta, state, out),
        Command::Sweep {
            modes,
            trials,
            seed,
        } => sweep(modes, *trials, *seed, out),
        Command::Sample {
            source,
            r,
            state,
            shots,
            format,
            oracle,
        } => sample_cmd(source, *r, state, *shots, *format, *oracle, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load_unitary(src: &UnitarySource) -> Result<ComplexMatrix, Failure> {
    if let Some(m) = src.haar {
        return haar_unitary::<f64>(m, src.seed).map_err(|e| Failure::Usage(e.to_string()));
    }
    let path = src
        .input
        .as_ref()
        .ok_or_else(|| Failure::Usage("one of --haar or --input is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: invalid JSON: {e}", path.display())))?;
    let matrix = value.get("matrix").unwrap_or(&value);
    cmatrix_from_json(matrix).ok_or_else(|| {
        Failure::Usage(format!(
            "{}: expected a matrix as rows of [re, im] pairs or reals",
            path.display()
        ))
    })
}

/// Parses `vacuum` or `squeezed:R0:K`.
fn parse_state(desc: &str, modes: usize) -> Result<GaussianState, Failure> {
    let bad = || Failure::Usage(format!("bad state {desc:?}; expected vacuum or squeezed:R0:K"));
    let parts: Vec<&str> = desc.split(':').collect();
    let state = match parts.as_slice() {
        ["vacuum"] => GaussianState::vacuum(modes),
        ["squeezed", r0, k] => {
            let r0: f64 = r0.parse().map_err(|_| bad())?;
            let k: usize = k.parse().map_err(|_| bad())?;
            if !r0.is_finite() {
                return Err(bad());
            }
            GaussianState::squeezed(modes, k, r0)
        }
        _ => return Err(bad()),
    };
    state.map_err(|e| Failure::Usage(e.to_string()))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, bytes)
            .map_err(|e| Failure::Compute(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Compute(e.to_string())),
    }
}

/// Writes a status line to stdout, ignoring a closed pipe.
fn say(text: &str) {
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn emit_json(out: Option<&Path>, v: &Value) -> Result<(), Failure> {
    let mut text = to_json_string(v);
    text.push('\n');
    emit(out, text.as_bytes())
}

fn synthesize(src: &UnitarySource, out: Option<&Path>) -> Outcome {
    let u = load_unitary(src)?;
    let plan = clements_decompose(&u).map_err(compute)?;
    let mesh_error = (plan.reconstruct() - &u).norm();
    let schedule = schedule_from_plan(&plan).map_err(compute)?;
    let m = plan.modes;
    let term = brickwork_graph(m, m / 2 + 1).map_err(compute)?.term;
    let rel = eval_gram(&term, &schedule).map_err(compute)?;
    let target = symplectic_of_unitary(&u).map_err(compute)?;
    let error = (&rel.g - &target).norm();
    let report = json!({
        "M": m,
        "depth": m / 2 + 1,
        "plan": plan.to_json(),
        "schedule": schedule.to_json(),
        "mesh_error": num(mesh_error),
        "reconstruction_error": num(error),
    });
    emit_json(out, &report)?;
    if out.is_some() {
        say(&format!("reconstruction error {}", fmt_f64(error)));
    }
    if error < RECONSTRUCTION_TOL {
        Ok(0)
    } else {
        Err(Failure::Compute(format!(
            "reconstruction error {} exceeds {RECONSTRUCTION_TOL:e}",
            fmt_f64(error)
        )))
    }
}

fn threshold(src: &UnitarySource, betas: &[f64], state: &str, out: Option<&Path>) -> Outcome {
    let u = load_unitary(src)?;
    let v_in = parse_state(state, u.nrows().max(1))?;
    if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
        return Err(Failure::Usage(format!("beta {b} outside (0, 1)")));
    }
    let rel = assemble_mblo_gram(&u).map_err(compute)?;
    let report = report_from_gram(&rel.gram, Some(&v_in.cov), betas).map_err(compute)?;
    emit_json(out, &report.to_json())?;
    Ok(0)
}

fn sweep(modes: &[usize], trials: usize, seed: u64, out: Option<&Path>) -> Outcome {
    if trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    if let Some(m) = modes.iter().find(|&&m| m < 2 || m % 2 == 1) {
        return Err(Failure::Usage(format!("mode count {m} must be even and at least 2")));
    }
    let res = haar_sweep(modes, trials, seed).map_err(compute)?;
    let mut csv = Vec::new();
    res.write_csv(&mut csv).map_err(compute)?;
    emit(out, &csv)?;
    let summary = to_json_string(&res.to_json());
    if out.is_some() {
        say(&summary);
    } else {
        eprintln!("{summary}");
    }
    Ok(0)
}

fn sample_cmd(
    src: &UnitarySource,
    r: f64,
    state: &str,
    shots: usize,
    format: Format,
    oracle: bool,
    out: Option<&Path>,
) -> Outcome {
    if !r.is_finite() || r < 0.0 {
        return Err(Failure::Usage(format!("squeezing r = {r} must be finite and non-negative")));
    }
    let u = load_unitary(src)?;
    let m = u.nrows();
    if oracle && m > ORACLE_MAX_MODES {
        return Err(Failure::Refused(format!(
            "exact oracle limited to M <= {ORACLE_MAX_MODES} (got M = {m})"
        )));
    }
    let rho_in = parse_state(state, m)?;
    let rel = assemble_mblo_gram(&u).map_err(compute)?;
    let rho_out = output_state_from(&rel, &rho_in, r).map_err(compute)?;
    if !simulable(&rho_out) {
        let report = report_from_gram(&rel.gram, None, &[]).map_err(compute)?;
        let excess = rho_out.excess_min_eigenvalue().map_err(compute)?;
        return Err(Failure::Refused(format!(
            "non-simulable regime: lambda_min(V - I/2) = {} must be positive \
             (easiness condition G V_in G^T + e^(-2r) N N^T / 2 > I/2; \
             for vacuum input r < {} = 1/2 ln lambda_min(N N^T))",
            fmt_f64(excess),
            fmt_f64(report.r_easiness)
        )));
    }
    let seed = src.seed;
    let samples = sample(&rho_out, shots, seed).map_err(compute)?;
    let mut bytes = Vec::new();
    match format {
        Format::Csv => write_samples_csv(&mut bytes, &samples),
        Format::Jsonl => write_samples_jsonl(&mut bytes, &samples),
    }
    .map_err(compute)?;
    emit(out, &bytes)?;

    let mut summary = summary_json(&samples);
    summary["M"] = json!(m);
    summary["r"] = num(r);
    summary["seed"] = json!(seed);
    summary["margin"] = num(rho_out.excess_min_eigenvalue().map_err(compute)?);
    if oracle {
        let patterns = patterns_up_to(m, ORACLE_CUTOFF);
        let mut exact = Vec::with_capacity(patterns.len());
        for p in &patterns {
            exact.push(rho_out.pattern_probability(p).map_err(compute)?);
        }
        let lookup = |n: &[usize]| {
            patterns
                .iter()
                .position(|p| p.as_slice() == n)
                .map(|i| exact[i])
                .unwrap_or(0.0)
        };
        let tvd = distribution_tvd(&empirical_frequencies(&samples), lookup, &patterns);
        summary["oracle"] = json!({
            "cutoff": ORACLE_CUTOFF,
            "mass": num(exact.iter().sum()),
            "tvd": num(tvd),
        });
    }
    let text = to_json_string(&summary);
    if out.is_some() {
        say(&text);
    } else {
        eprintln!("{text}");
    }
    Ok(0)
}
