use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::process::ExitCode;
use std::sync::mpsc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use uosp::gt_core::{assemble_element, GtChart};
use uosp::measure::{coset_density, super_density, super_prefactor, usp_density};
use uosp::pattern::{enumerate_integer_patterns, sample_interlacing_spectra, GelfandPattern, PatternKind, TopSpectrum};
use uosp::verify::{
    check_all, check_defining_properties, check_gt_residuals, check_recursion_spectrum, haar_moment_test,
    verify_appendix_a, worst, Report,
};

const RESIDUAL_LIMIT: f64 = 1e-8;
const EXIT_VIOLATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "uosp", about = "UOSp(k1/2k2) elements in Gelfand-Tzetlin coordinates", version)]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random admissible charts, one JSON document per line.
    Sample(SampleArgs),
    /// Group element of each chart.
    Assemble(Input),
    /// Residual reports; exit 2 if any residual exceeds 1e-8.
    Verify(VerifyArgs),
    /// Invariant-measure density of each chart.
    Density(DensityArgs),
    /// Gelfand pattern tools.
    #[command(subcommand)]
    Patterns(PatternCommand),
    /// GT sampler vs Gaussian-QR Haar oracle for SO(k).
    HaarTest(HaarArgs),
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    k1: usize,
    #[arg(long)]
    k2: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Bosonic top spectrum, comma separated (default m, ..., 1).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    top_bosonic: Option<Vec<f64>>,
    /// Fermionic spectrum, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    top_fermionic: Option<Vec<f64>>,
}

#[derive(Args)]
struct Input {
    /// Line-delimited chart JSON; standard input when omitted.
    #[arg(long)]
    chart: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    all: bool,
    #[arg(long)]
    gt: bool,
    #[arg(long)]
    recursion: bool,
    #[arg(long)]
    appendix_a: bool,
    #[arg(long)]
    defining: bool,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    per_level: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Unitary,
    Orthogonal,
    Uosp,
}

#[derive(Subcommand)]
enum PatternCommand {
    /// Check betweenness conditions of line-delimited patterns.
    Validate {
        #[arg(long)]
        pattern: Option<String>,
    },
    /// All integer patterns below a top row.
    Enumerate {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        top: Vec<f64>,
        /// N of SO(N) for the orthogonal kind.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        count_only: bool,
    },
    /// Patterns induced by random admissible charts.
    Sample(SampleArgs),
}

#[derive(Args)]
struct HaarArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Violation(String),
    Infeasible(String),
}

impl From<uosp::Error> for Failure {
    fn from(e: uosp::Error) -> Self {
        Failure::Infeasible(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Infeasible(format!("i/o: {e}"))
    }
}

type Out = Box<dyn Write>;

fn emit(out: &mut Out, v: &Value) -> Result<(), Failure> {
    writeln!(out, "{v}")?;
    Ok(())
}

fn read_lines(path: &Option<String>) -> Result<Vec<String>, Failure> {
    let reader: Box<dyn BufRead> = match path {
        Some(p) => Box::new(BufReader::new(File::open(p).map_err(|e| Failure::Infeasible(format!("{p}: {e}")))?)),
        None => Box::new(BufReader::new(io::stdin())),
    };
    let mut lines = vec![];
    for l in reader.lines() {
        let l = l?;
        if !l.trim().is_empty() {
            lines.push(l);
        }
    }
    Ok(lines)
}

/// Charts with their index: taken from an "index" field when present,
/// otherwise the line number.
fn read_charts(input: &Input) -> Result<Vec<(u64, GtChart)>, Failure> {
    let mut out = vec![];
    for (i, line) in read_lines(&input.chart)?.iter().enumerate() {
        let v: Value = serde_json::from_str(line).map_err(|e| Failure::Infeasible(format!("line {}: malformed JSON: {e}", i + 1)))?;
        let index = v.get("index").and_then(Value::as_u64).unwrap_or(i as u64);
        let chart: GtChart = serde_json::from_value(v).map_err(|e| Failure::Infeasible(format!("line {}: not a chart: {e}", i + 1)))?;
        chart.validate().map_err(|e| Failure::Infeasible(format!("line {}: {e}", i + 1)))?;
        out.push((index, chart));
    }
    Ok(out)
}

fn with_index(mut v: Value, index: u64) -> Value {
    if let Value::Object(m) = &mut v {
        m.insert("index".into(), json!(index));
    }
    v
}

fn top_spectrum(a: &SampleArgs) -> TopSpectrum {
    let d = TopSpectrum::default_for(a.k1, a.k2);
    TopSpectrum {
        bosonic: a.top_bosonic.clone().unwrap_or(d.bosonic),
        fermionic: a.top_fermionic.clone().unwrap_or(d.fermionic),
    }
}

/// Charts for seeds seed, seed+1, … sharded over threads; results arrive in
/// completion order and carry their index.
fn sample_charts(a: &SampleArgs, mut sink: impl FnMut(u64, GtChart) -> Result<(), Failure>) -> Result<(), Failure> {
    if a.k1 == 0 {
        return Err(Failure::Infeasible("k1 must be at least 1".into()));
    }
    let top = top_spectrum(a);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(a.count.max(1));
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|s| {
        for w in 0..workers {
            let tx = tx.clone();
            let top = &top;
            s.spawn(move || {
                for i in (w..a.count).step_by(workers) {
                    let r = sample_interlacing_spectra(a.k1, a.k2, top, a.seed.wrapping_add(i as u64));
                    if tx.send((i as u64, r)).is_err() {
                        return;
                    }
                }
            });
        }
        drop(tx);
        for (i, r) in rx {
            sink(i, r?)?;
        }
        Ok(())
    })
}

fn run_sample(a: &SampleArgs, out: &mut Out) -> Result<(), Failure> {
    sample_charts(a, |i, c| emit(out, &with_index(serde_json::to_value(&c).expect("chart serializes"), i)))
}

fn run_assemble(input: &Input, out: &mut Out) -> Result<(), Failure> {
    for (i, c) in read_charts(input)? {
        let u = assemble_element(&c)?;
        emit(out, &with_index(serde_json::to_value(&u).expect("matrix serializes"), i))?;
    }
    Ok(())
}

fn run_verify(a: &VerifyArgs, out: &mut Out) -> Result<(), Failure> {
    let all = a.all || !(a.gt || a.recursion || a.appendix_a || a.defining);
    let mut worst_seen: f64 = 0.0;
    for (i, c) in read_charts(&a.input)? {
        let mut reports: Vec<Report> = vec![];
        if all {
            reports = check_all(&c)?;
        } else {
            if a.defining {
                reports.extend(check_defining_properties(&assemble_element(&c)?));
            }
            for n in 1..=c.k1 {
                if a.gt {
                    reports.extend(check_gt_residuals(&c, n)?);
                }
                if a.recursion {
                    reports.extend(check_recursion_spectrum(&c, n)?);
                }
                if a.appendix_a && c.is_even_level(n) {
                    reports.extend(verify_appendix_a(&c, n)?);
                }
            }
        }
        let w = worst(&reports);
        worst_seen = worst_seen.max(w);
        emit(out, &json!({"index": i, "max_residual": w, "pass": w <= RESIDUAL_LIMIT, "reports": reports}))?;
    }
    if worst_seen > RESIDUAL_LIMIT {
        return Err(Failure::Violation(format!("residual {worst_seen:e} exceeds {RESIDUAL_LIMIT:e}")));
    }
    Ok(())
}

fn run_density(a: &DensityArgs, out: &mut Out) -> Result<(), Failure> {
    for (i, c) in read_charts(&a.input)? {
        let full = super_density(&c)?;
        let mut doc = json!({
            "index": i,
            "body": full.body(),
            "density": full.value,
            "prefactor": super_prefactor(&c)?.value,
            "usp": usp_density(&c.usp)?,
        });
        if a.per_level {
            let levels = (1..=c.k1)
                .map(|n| coset_density(&c, n).map(|d| json!({"level": n, "body": d.body(), "density": d.value})))
                .collect::<uosp::Result<Vec<_>>>()?;
            doc["per_level"] = json!(levels);
        }
        emit(out, &doc)?;
    }
    Ok(())
}

fn run_patterns(cmd: &PatternCommand, out: &mut Out) -> Result<(), Failure> {
    match cmd {
        PatternCommand::Validate { pattern } => {
            let mut invalid = 0;
            for (i, line) in read_lines(pattern)?.iter().enumerate() {
                let p: GelfandPattern = serde_json::from_str(line).map_err(|e| Failure::Infeasible(format!("line {}: malformed pattern: {e}", i + 1)))?;
                let v = p.validate()?;
                invalid += usize::from(!v.valid);
                emit(out, &json!({"index": i, "valid": v.valid, "violation": v.violation}))?;
            }
            if invalid > 0 {
                return Err(Failure::Violation(format!("{invalid} pattern(s) violate betweenness")));
            }
            Ok(())
        }
        PatternCommand::Enumerate { kind, top, dim, count_only } => {
            let kind = match kind {
                KindArg::Unitary => PatternKind::Unitary,
                KindArg::Orthogonal => PatternKind::Orthogonal,
                KindArg::Uosp => PatternKind::Uosp,
            };
            let patterns = enumerate_integer_patterns(kind, top, *dim)?;
            let mut doc = json!({"kind": kind, "top": top, "count": patterns.len()});
            if !count_only {
                doc["patterns"] = json!(patterns);
            }
            emit(out, &doc)
        }
        PatternCommand::Sample(a) => sample_charts(a, |i, c| {
            emit(out, &with_index(serde_json::to_value(GelfandPattern::from_chart(&c)).expect("pattern serializes"), i))
        }),
    }
}

fn run_haar(a: &HaarArgs, out: &mut Out) -> Result<(), Failure> {
    let r = haar_moment_test(a.k, a.samples, a.seed)?;
    emit(out, &serde_json::to_value(&r).expect("report serializes"))?;
    if r.max_abs_z >= 4.0 {
        return Err(Failure::Violation(format!("moment z-score {:.2} reaches 4", r.max_abs_z)));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out: Out = match &cli.output {
        Some(p) => match File::create(p) {
            Ok(f) => Box::new(io::BufWriter::new(f)),
            Err(e) => {
                eprintln!("{}", json!({"error": format!("{p}: {e}")}));
                return ExitCode::from(EXIT_INFEASIBLE);
            }
        },
        None => Box::new(io::stdout().lock()),
    };
    let result = match &cli.command {
        Command::Sample(a) => run_sample(a, &mut out),
        Command::Assemble(i) => run_assemble(i, &mut out),
        Command::Verify(a) => run_verify(a, &mut out),
        Command::Density(a) => run_density(a, &mut out),
        Command::Patterns(p) => run_patterns(p, &mut out),
        Command::HaarTest(a) => run_haar(a, &mut out),
    };
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(m)) => {
            eprintln!("{}", json!({"error": m, "kind": "invariant violation"}));
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(Failure::Infeasible(m)) => {
            eprintln!("{}", json!({"error": m, "kind": "infeasible input"}));
            ExitCode::from(EXIT_INFEASIBLE)
        }
    }
}
