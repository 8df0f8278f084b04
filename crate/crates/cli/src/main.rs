use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmle_core::candec::{self, numeric_generic_candec, CanDec};
use qmle_core::harness::{self, IntRange, SweepConfig, SweepReport, Tolerances, OUTCOMES};
use qmle_core::mle::{self, ConcentrationPair, MleOptions, ProbeOutcome};
use qmle_core::stability::{classify_stability, star_exact_stability, Certificate, QuiverKind, ScalingOptions};
use qmle_core::thresholds::{self, Model};
use qmle_core::{seeding, AnyRep, Error, Field, FieldKind, RepInput, RepTuple};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "qmle", version, about = "Maximum likelihood thresholds for matrix normal models")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Mnm,
    Propcov,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Mnm => Model::MatrixNormal,
            ModelArg::Propcov => Model::ProportionalCovariance,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FieldArg {
    Real,
    Complex,
}

impl From<FieldArg> for FieldKind {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::Real => FieldKind::Real,
            FieldArg::Complex => FieldKind::Complex,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample-size thresholds mlt_b, mlt_e, mlt_u.
    Thresholds {
        #[arg(long, value_enum, default_value_t = ModelArg::Mnm)]
        model: ModelArg,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
    },
    /// Likelihood behavior for m samples.
    Classify {
        #[arg(long, value_enum, default_value_t = ModelArg::Mnm)]
        model: ModelArg,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        m: u64,
    },
    /// Canonical decomposition of (p, q) for m arrows.
    Candec {
        #[arg(long, value_enum, default_value_t = ModelArg::Mnm)]
        model: ModelArg,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        /// Decompose generic samples even when a closed form exists.
        #[arg(long)]
        numeric: bool,
        #[arg(long, env = "QMLE_SEED", default_value_t = seeding::DEFAULT_SEED)]
        seed: u64,
    },
    /// Stability verdict for a sample tuple read from a JSON file.
    Stability {
        #[arg(long)]
        input: PathBuf,
        /// Read the tuple against the star quiver and decide exactly.
        #[arg(long)]
        exact_star: bool,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long, env = "QMLE_SEED", default_value_t = seeding::DEFAULT_SEED)]
        seed: u64,
    },
    /// Flip-flop MLE for a sample tuple read from a JSON file.
    Mle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ModelArg::Mnm)]
        model: ModelArg,
        /// Random starts for the uniqueness probe.
        #[arg(long, default_value_t = 10)]
        starts: usize,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tau_stat: Option<f64>,
        #[arg(long)]
        tau_unique: Option<f64>,
        #[arg(long, env = "QMLE_SEED", default_value_t = seeding::DEFAULT_SEED)]
        seed: u64,
    },
    /// Monte Carlo comparison of theory and numerics over a grid.
    Sweep(SweepArgs),
    /// The (5,4), (6,4), (7,4), (8,4) table at m = 2 over the reals.
    Dkh {
        #[arg(long, default_value_t = harness::DKH_TRIALS)]
        trials: usize,
        #[arg(long, env = "QMLE_SEED", default_value_t = seeding::DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep configuration; the grid flags are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelArg::Mnm)]
    model: ModelArg,
    #[arg(long, value_enum, default_value_t = FieldArg::Complex)]
    field: FieldArg,
    #[arg(long, default_value_t = 4)]
    p_max: u64,
    #[arg(long, default_value_t = 4)]
    q_max: u64,
    #[arg(long, default_value_t = 4)]
    m_max: u64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, env = "QMLE_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    alarm_rate: Option<f64>,
    #[arg(long)]
    n_starts: Option<usize>,
    #[arg(long)]
    tau_unique: Option<f64>,
    #[arg(long)]
    tau_stat: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Check a one-parameter subgroup for each unstable sample.
    #[arg(long)]
    certify: bool,
    /// Record per-cell wall-clock time.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to dump samples that disagree with theory.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Mismatch(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let format = cli.format;
    match cli.command {
        Command::Thresholds { model, p, q } => {
            check_positive(&[("p", p), ("q", q)])?;
            let r = thresholds::thresholds(model.into(), p, q);
            emit_row(
                format,
                &serde_json::to_value(r).expect("serializable"),
                &["model", "p", "q", "mlt_b", "mlt_e", "mlt_u"],
            )
        }
        Command::Classify { model, p, q, m } => {
            check_positive(&[("p", p), ("q", q), ("m", m)])?;
            let model: Model = model.into();
            let v = thresholds::classify(model, p, q, m);
            let row = json!({
                "model": model,
                "p": p,
                "q": q,
                "m": m,
                "behavior": v.behavior.to_string(),
                "indeterminate_real_case": v.indeterminate_real_case,
                "holds_for_all_inputs": v.holds_for_all_inputs,
            });
            emit_row(
                format,
                &row,
                &["model", "p", "q", "m", "behavior", "indeterminate_real_case", "holds_for_all_inputs"],
            )
        }
        Command::Candec {
            model,
            m,
            p,
            q,
            numeric,
            seed,
        } => {
            check_positive(&[("p", p), ("q", q), ("m", m)])?;
            let kind = QuiverKind::from(Model::from(model));
            let dec = if numeric {
                numeric_generic_candec(kind, p as usize, q as usize, m as usize, seed)?
            } else {
                match kind {
                    QuiverKind::Kronecker => candec::candec_kronecker_seeded(m, p, q, seed)?,
                    QuiverKind::Star => candec::candec_star_seeded(p, q, m, seed)?,
                }
            };
            emit_candec(format, &dec)
        }
        Command::Stability {
            input,
            exact_star,
            max_iter,
            seed,
        } => {
            let rep = read_rep(&input)?;
            let mut opts = ScalingOptions::default();
            if let Some(k) = max_iter {
                opts.max_iter = k;
            }
            let value = match rep {
                AnyRep::Real(y) => stability_json(&y, exact_star, &opts, seed)?,
                AnyRep::Complex(y) => stability_json(&y, exact_star, &opts, seed)?,
            };
            emit_row(
                format,
                &value,
                &["level", "polystability_decided", "certificate_kind", "iterations"],
            )
        }
        Command::Mle {
            input,
            model,
            starts,
            tol,
            max_iter,
            tau_stat,
            tau_unique,
            seed,
        } => {
            if starts < 2 {
                return Err(Failure::Config("--starts must be at least 2".into()));
            }
            let rep = read_rep(&input)?;
            let overrides = Tolerances {
                tol,
                tau_stat,
                tau_unique,
                max_iter,
                n_starts: Some(starts),
            };
            let opts = overrides.apply(MleOptions::default());
            let value = match rep {
                AnyRep::Real(y) => mle_json(&y, model.into(), &opts, seed)?,
                AnyRep::Complex(y) => mle_json(&y, model.into(), &opts, seed)?,
            };
            emit_row(
                format,
                &value,
                &["status", "loglik", "iterations", "stationarity_residual", "probe", "behavior"],
            )
        }
        Command::Sweep(args) => {
            let cfg = sweep_config(&args)?;
            let report = harness::run_sweep(&cfg)?;
            finish_report(format, &report, args.out.as_deref(), args.diagnostics.as_deref())
        }
        Command::Dkh {
            trials,
            seed,
            out,
            diagnostics,
        } => {
            let report = harness::dkh_table(trials, seed)?;
            finish_report(format, &report, out.as_deref(), diagnostics.as_deref())
        }
    }
}

fn check_positive(values: &[(&str, u64)]) -> CliResult {
    for (name, v) in values {
        if *v == 0 {
            return Err(Failure::Config(format!("--{name} must be positive")));
        }
    }
    Ok(())
}

fn read_rep(path: &Path) -> Result<AnyRep, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let input: RepInput =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(input.to_rep()?)
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn print_csv(header: &[&str], rows: &[Vec<String>]) -> CliResult {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    let io = |e: csv::Error| Failure::Config(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn emit_row(format: Format, value: &Value, columns: &[&str]) -> CliResult {
    match format {
        Format::Json => {
            println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
            Ok(())
        }
        Format::Csv => {
            let row = columns.iter().map(|c| csv_cell(&value[*c])).collect();
            print_csv(columns, &[row])
        }
    }
}

fn emit_candec(format: Format, dec: &CanDec) -> CliResult {
    match format {
        Format::Json => {
            let summands: Vec<Value> = dec
                .summands
                .iter()
                .map(|(d, k)| json!({"dim": d, "multiplicity": k}))
                .collect();
            let value = json!({
                "summands": summands,
                "display": dec.to_string(),
                "exactness": dec.exactness,
                "confidence": dec.confidence,
            });
            println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
            Ok(())
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = dec
                .summands
                .iter()
                .map(|(d, k)| vec![d.to_string(), k.to_string(), format!("{:?}", dec.exactness)])
                .collect();
            print_csv(&["summand", "multiplicity", "exactness"], &rows)
        }
    }
}

fn stability_json<T: Field>(y: &RepTuple<T>, exact_star: bool, opts: &ScalingOptions, seed: u64) -> Result<Value, Failure> {
    let verdict = if exact_star {
        star_exact_stability(y)?
    } else {
        let mut rng = seeding::rng_for(seed, &[]);
        classify_stability(y, QuiverKind::Kronecker, opts, &mut rng)?
    };
    let kind = match &verdict.certificate {
        None => "none",
        Some(Certificate::OnePs(_)) => "one_ps",
        Some(Certificate::Subset { .. }) => "subset",
        Some(Certificate::Summands(_)) => "summands",
    };
    let mut value = serde_json::to_value(&verdict).expect("serializable");
    value["certificate_kind"] = json!(kind);
    value["iterations"] = json!(verdict.diagnostics.iterations);
    Ok(value)
}

/// Real parts as nested rows, plus imaginary parts for complex matrices.
fn matrix_json<T: Field>(m: &qmle_core::DMatrix<T>) -> Value {
    let rows = |f: &dyn Fn(T) -> f64| -> Value {
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| f(m[(r, c)])).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .into()
    };
    match T::KIND {
        FieldKind::Real => json!({"re": rows(&|z| z.to_c64().re)}),
        FieldKind::Complex => json!({"re": rows(&|z| z.to_c64().re), "im": rows(&|z| z.to_c64().im)}),
    }
}

fn mle_json<T: Field>(y: &RepTuple<T>, model: Model, opts: &MleOptions, seed: u64) -> Result<Value, Failure> {
    let init = ConcentrationPair::identity(y.p(), y.q());
    let run = mle::flip_flop(y, model, &init, opts)?;
    let probe = if run.status == mle::MleStatus::Diverged {
        None
    } else {
        Some(mle::uniqueness_probe(y, model, opts.n_starts, seed, opts)?)
    };
    let empirical = mle::classify_empirical(y, model, seed, opts)?;
    let mut value = json!({
        "model": model,
        "status": run.status.to_string(),
        "loglik": run.loglik,
        "iterations": run.iterations,
        "stationarity_residual": run.stationarity_residual,
        "probe": probe.as_ref().map(ProbeOutcome::label),
        "behavior": empirical.behavior.to_string(),
        "empirical": empirical,
    });
    if let Some(pair) = &run.pair {
        value["psi1"] = matrix_json(&pair.psi1);
        value["psi2"] = matrix_json(&pair.psi2);
    }
    if let Some(ProbeOutcome::Disagree { distance, .. }) = probe {
        value["probe_distance"] = json!(distance);
    }
    Ok(value)
}

fn sweep_config(args: &SweepArgs) -> Result<SweepConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => SweepConfig::new(
            args.model.into(),
            IntRange::upto(args.p_max),
            IntRange::upto(args.q_max),
            IntRange::upto(args.m_max),
            args.trials,
            args.field.into(),
        ),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(rate) = args.alarm_rate {
        cfg.alarm_rate = rate;
    }
    let t = &mut cfg.tolerances;
    t.n_starts = args.n_starts.or(t.n_starts);
    t.tau_unique = args.tau_unique.or(t.tau_unique);
    t.tau_stat = args.tau_stat.or(t.tau_stat);
    t.max_iter = args.max_iter.or(t.max_iter);
    cfg.certify |= args.certify;
    cfg.timing |= args.timing;
    cfg.validate()?;
    Ok(cfg)
}

fn report_csv(report: &SweepReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["p", "q", "m", "theory", "informational"];
    header.extend(OUTCOMES);
    header.extend(["matches", "match_rate", "inconsistent", "mean_iterations", "certified", "runtime_ms"]);
    w.write_record(&header).expect("in-memory write");
    for c in &report.cells {
        let mut row = vec![
            c.p.to_string(),
            c.q.to_string(),
            c.m.to_string(),
            c.theory.to_string(),
            c.informational.to_string(),
        ];
        row.extend(OUTCOMES.iter().map(|k| c.counts.get(*k).copied().unwrap_or(0).to_string()));
        row.extend([
            c.matches.to_string(),
            c.match_rate.to_string(),
            c.inconsistent.to_string(),
            c.mean_iterations.to_string(),
            c.certified.map(|v| v.to_string()).unwrap_or_default(),
            c.runtime_ms.map(|v| v.to_string()).unwrap_or_default(),
        ]);
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

fn finish_report(format: Format, report: &SweepReport, out: Option<&Path>, diagnostics: Option<&Path>) -> CliResult {
    let bytes = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("serializable");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => report_csv(report),
    };
    match out {
        Some(path) => fs::write(path, &bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    let diag_path = diagnostics
        .map(Path::to_path_buf)
        .or_else(|| out.map(|p| p.with_extension("diagnostics.json")));
    if let Some(path) = diag_path {
        if !report.diagnostics.is_empty() {
            let text = serde_json::to_string_pretty(&report.diagnostics).expect("serializable");
            fs::write(&path, text)?;
            eprintln!("{} disagreeing samples written to {}", report.diagnostics.len(), path.display());
        }
    }
    if report.alarm() {
        return Err(Failure::Mismatch(format!(
            "mismatch rate {:.4} exceeds alarm rate {:.4} ({} of {} scored trials)",
            report.mismatch_rate, report.alarm_rate, report.mismatches, report.scored_trials
        )));
    }
    Ok(())
}
