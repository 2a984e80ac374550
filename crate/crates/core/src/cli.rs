//! The `smoothcp` command line: exact criteria of idealised predictors,
//! optimality checks, and nearest-neighbour experiments.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::criteria::{evaluate_empirical, evaluate_idealized, CriterionId};
use crate::domain::{CriterionValue, FiniteJoint, LabelId, WeakOrder};
use crate::error::{Error, Result};
use crate::formats::{csv_field, format_f64, parse_joint, parse_scores, parse_usps, read_file};
use crate::idealized::{cp_measure, mcp_measures, msp_measure, sp_measures, IdealizedTransducer, Mode};
use crate::knn::{normalize_object, FeatureVector, KnnConfig, KnnScorer, KnnVariant};
use crate::numeric::{Rational, Scalar};
use crate::oracle::{
    random_binary_distinct, random_joint, verify_counterexample, verify_theorem, VerificationReport,
    COUNTEREXAMPLE_IDS, DEFAULT_CAP,
};
use crate::transducer::{predict_batch, BatchConfig, Example};

#[derive(Debug, Parser)]
#[command(name = "smoothcp", version, about = "Smoothed conformal prediction and its efficiency criteria")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact criterion values of idealised conformity measures under a known Q.
    Idealized(IdealizedArgs),
    /// Brute-force optimality checks and the built-in counterexamples.
    Verify(VerifyArgs),
    /// Nearest-neighbour conformal predictors on a train/test split.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct IdealizedArgs {
    /// Distribution file with rows `x,y,prob`.
    #[arg(long = "q", value_name = "FILE")]
    pub q: PathBuf,
    /// cp, sp, mcp, msp, or a score file with rows `x,y,score`.
    #[arg(long, value_delimiter = ',', default_value = "cp")]
    pub measure: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "S,N,U,F,M,E,OU,OF,OM,OE")]
    pub criterion: Vec<String>,
    /// Significance levels for N, M, E, OM, OE (fractions allowed).
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Vec<String>,
    #[arg(long)]
    pub label_conditional: bool,
    /// Exact output as p/q instead of floating point.
    #[arg(long)]
    pub rational: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Runs the built-in counterexamples.
    #[arg(long)]
    pub paper_examples: bool,
    /// Checks theorems on this distribution.
    #[arg(long = "q", value_name = "FILE")]
    pub q: Option<PathBuf>,
    /// Number of random distributions to check.
    #[arg(long, value_name = "N")]
    pub random_q: Option<usize>,
    /// Shape of the random distributions, objects x labels.
    #[arg(long, value_name = "AxB", default_value = "2x2")]
    pub size: String,
    #[arg(long, value_delimiter = ',')]
    pub theorem: Vec<u8>,
    /// δ for the counterexamples that depend on it.
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest |X|·|Y| for exhaustive checks.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Training examples, one `label v1 v2 …` line each.
    #[arg(long, value_name = "FILE")]
    pub train: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub test: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "cp,sp")]
    pub variant: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    /// Criteria, plus ERR for the error rate at each ε.
    #[arg(long, value_delimiter = ',', default_value = "U,OF")]
    pub criterion: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub label_conditional: bool,
    /// Uses the vectors as given instead of normalising each object.
    #[arg(long)]
    pub raw: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Parses arguments and runs; returns the process exit code
/// (0 success, 1 a check failed, 2 bad input).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Idealized(a) => cmd_idealized(a).and_then(|csv| emit(&a.out, &csv)).map(|_| true),
        Command::Verify(a) => cmd_verify(a).and_then(|(csv, ok)| emit(&a.out, &csv).map(|_| ok)),
        Command::Eval(a) => cmd_eval(a).and_then(|csv| emit(&a.out, &csv)).map(|_| true),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn parse_criteria(list: &[String]) -> Result<Vec<CriterionId>> {
    list.iter().map(|s| s.parse()).collect()
}

fn load_joint(path: &Path) -> Result<FiniteJoint<Rational>> {
    parse_joint(&read_file(path)?)
}

/// Weak orders for the requested measures, named as given.
fn measure_orders(joint: &FiniteJoint<Rational>, names: &[String]) -> Result<Vec<(String, WeakOrder)>> {
    names
        .iter()
        .map(|name| {
            let order = match name.to_ascii_lowercase().as_str() {
                "cp" => cp_measure(joint).order_of(),
                "sp" => sp_measures(joint).swap_remove(0).order_of(),
                "mcp" => mcp_measures(joint).swap_remove(0).order_of(),
                "msp" => msp_measure(joint).order_of(),
                _ => {
                    let table = parse_scores(&read_file(Path::new(name))?)?;
                    if table.n_objects() != joint.n_objects() || table.n_labels() != joint.n_labels() {
                        return Err(Error::ShapeMismatch(format!(
                            "{name} is {}x{}, distribution is {}x{}",
                            table.n_objects(),
                            table.n_labels(),
                            joint.n_objects(),
                            joint.n_labels()
                        )));
                    }
                    table.order_of()
                }
            };
            Ok((name.clone(), order))
        })
        .collect()
}

fn value_cells<T: Scalar>(v: &CriterionValue<T>, show: impl Fn(&T) -> String) -> String {
    format!("{},{}", show(&v.primary), v.secondary.as_ref().map(&show).unwrap_or_default())
}

fn idealized_rows<T: Scalar>(
    transducer: &IdealizedTransducer<T>,
    measure: &str,
    criteria: &[CriterionId],
    eps: &[(String, T)],
    show: impl Fn(&T) -> String + Copy,
    out: &mut String,
) -> Result<()> {
    for c in criteria {
        if c.needs_epsilon() {
            if eps.is_empty() {
                return Err(Error::MissingEpsilon(c.name()));
            }
            for (label, e) in eps {
                let v = evaluate_idealized(transducer, c, Some(e))?;
                out.push_str(&format!("{},{},{label},{}\n", csv_field(measure), csv_field(&c.name()), value_cells(&v, show)));
            }
        } else {
            let v = evaluate_idealized(transducer, c, None)?;
            out.push_str(&format!("{},{},,{}\n", csv_field(measure), csv_field(&c.name()), value_cells(&v, show)));
        }
    }
    Ok(())
}

/// CSV `measure,criterion,epsilon,primary,secondary`.
pub fn cmd_idealized(args: &IdealizedArgs) -> Result<String> {
    let joint = load_joint(&args.q)?;
    let mode = if args.label_conditional {
        joint.validate_label_conditional()?;
        Mode::LabelConditional
    } else {
        Mode::Unconditional
    };
    let criteria = parse_criteria(&args.criterion)?;
    let eps: Vec<(String, Rational)> = args
        .epsilon
        .iter()
        .map(|s| {
            let e: Rational = s.parse()?;
            if e <= <Rational as Scalar>::zero() || e >= Rational::from_integer(1) {
                return Err(Error::InvalidEpsilon(s.clone()));
            }
            Ok((s.clone(), e))
        })
        .collect::<Result<_>>()?;
    let orders = measure_orders(&joint, &args.measure)?;
    let mut out = String::from("measure,criterion,epsilon,primary,secondary\n");
    if args.rational {
        let exact = Arc::new(joint);
        for (name, order) in orders {
            let t = IdealizedTransducer::new(exact.clone(), order, mode)?;
            idealized_rows(&t, &name, &criteria, &eps, |v: &Rational| v.to_string(), &mut out)?;
        }
    } else {
        let approx = Arc::new(joint.to_f64());
        let eps: Vec<(String, f64)> = eps.into_iter().map(|(s, e)| (s, e.to_f64())).collect();
        for (name, order) in orders {
            let t = IdealizedTransducer::new(approx.clone(), order, mode)?;
            idealized_rows(&t, &name, &criteria, &eps, |v: &f64| format_f64(*v), &mut out)?;
        }
    }
    Ok(out)
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidParameter(format!("size `{s}` is not AxB"));
    let (a, b) = s.to_ascii_lowercase().split_once('x').map(|(a, b)| (a.to_string(), b.to_string())).ok_or_else(bad)?;
    let a = a.trim().parse().map_err(|_| bad())?;
    let b = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn report_lines(out: &mut String, ok: &mut bool, id: &str, source: &str, report: Result<VerificationReport>) {
    match report {
        Ok(r) => {
            *ok &= r.passed();
            for line in r.lines(source) {
                out.push_str(&line);
                out.push('\n');
            }
        }
        Err(e) => {
            *ok = false;
            out.push_str(&format!("{id},{source},error,{}\n", e.to_string().replace(',', ";")));
        }
    }
}

/// CSV `id,source,status,detail` and whether every check passed.
pub fn cmd_verify(args: &VerifyArgs) -> Result<(String, bool)> {
    if !args.paper_examples && args.q.is_none() && args.random_q.is_none() {
        return Err(Error::InvalidParameter("nothing to verify: give --paper-examples, --q or --random-q".into()));
    }
    if (args.q.is_some() || args.random_q.is_some()) && args.theorem.is_empty() {
        return Err(Error::InvalidParameter("--theorem is required with --q and --random-q".into()));
    }
    if let Some(t) = args.theorem.iter().find(|t| !(1..=6).contains(*t)) {
        return Err(Error::InvalidParameter(format!("no theorem {t}")));
    }
    let delta = args.delta.as_deref().map(str::parse::<Rational>).transpose()?;
    let mut out = String::from("id,source,status,detail\n");
    let mut ok = true;
    if args.paper_examples {
        for id in COUNTEREXAMPLE_IDS {
            report_lines(&mut out, &mut ok, id, "builtin", verify_counterexample(id, delta.as_ref()));
        }
    }
    if let Some(path) = &args.q {
        let joint = load_joint(path)?;
        let source = path.display().to_string();
        for &t in &args.theorem {
            let id = format!("theorem-{t}");
            report_lines(&mut out, &mut ok, &id, &csv_field(&source), verify_theorem(&joint, t, args.cap));
        }
    }
    if let Some(n) = args.random_q {
        let (nx, ny) = parse_size(&args.size)?;
        for &t in &args.theorem {
            if t == 6 && ny != 2 {
                return Err(Error::InvalidParameter(format!("theorem 6 needs 2 labels, size is {}", args.size)));
            }
            let mut rng = stream_rng(args.seed, t as u64);
            for i in 0..n {
                let joint = if t == 6 { random_binary_distinct(nx, &mut rng) } else { random_joint(nx, ny, &mut rng) };
                let id = format!("theorem-{t}");
                let source = format!("random-{}-{i}", args.seed);
                report_lines(&mut out, &mut ok, &id, &source, verify_theorem(&joint, t, args.cap));
            }
        }
    }
    Ok((out, ok))
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn load_examples(path: &Path, raw: bool) -> Result<Vec<Example<FeatureVector>>> {
    let data = parse_usps(&read_file(path)?, None)?;
    if raw {
        return Ok(data);
    }
    data.into_iter().map(|z| Ok(Example::new(normalize_object(&z.object)?, z.label))).collect()
}

enum EvalItem {
    Criterion(CriterionId),
    ErrorRate,
}

/// CSV `variant,K,criterion,epsilon,primary,secondary`; a K that cannot be
/// run gets a single `skipped` row per criterion.
pub fn cmd_eval(args: &EvalArgs) -> Result<String> {
    let train = load_examples(&args.train, args.raw)?;
    let test = load_examples(&args.test, args.raw)?;
    if let (Some(a), Some(b)) = (train.first(), test.first()) {
        if a.object.dim() != b.object.dim() {
            return Err(Error::DimensionMismatch { expected: a.object.dim(), got: b.object.dim() });
        }
    }
    if args.k_min == 0 || args.k_min > args.k_max {
        return Err(Error::InvalidParameter(format!("bad K range {}..={}", args.k_min, args.k_max)));
    }
    let variants: Vec<KnnVariant> = args.variant.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    let items: Vec<EvalItem> = args
        .criterion
        .iter()
        .map(|s| if s.eq_ignore_ascii_case("err") { Ok(EvalItem::ErrorRate) } else { s.parse().map(EvalItem::Criterion) })
        .collect::<Result<_>>()?;
    for e in &args.epsilon {
        if !(*e > 0.0 && *e < 1.0) {
            return Err(Error::InvalidEpsilon(e.to_string()));
        }
    }
    let needs_eps = items.iter().any(|i| match i {
        EvalItem::Criterion(c) => c.needs_epsilon(),
        EvalItem::ErrorRate => true,
    });
    if needs_eps && args.epsilon.is_empty() {
        return Err(Error::MissingEpsilon("the requested criteria".into()));
    }
    let n_labels = train.iter().chain(&test).map(|z| z.label.0 + 1).max().unwrap_or(0);
    let objects: Vec<FeatureVector> = test.iter().map(|z| z.object.clone()).collect();
    let truth: Vec<LabelId> = test.iter().map(|z| z.label).collect();
    let mode = if args.label_conditional { Mode::LabelConditional } else { Mode::Unconditional };
    let mut out = String::from("variant,K,criterion,epsilon,primary,secondary\n");
    for &variant in &variants {
        for k in args.k_min..=args.k_max {
            let prediction = KnnConfig::new(k, variant, args.seed).and_then(|config| {
                let mut batch = BatchConfig::new(n_labels, args.seed);
                batch.mode = mode;
                predict_batch(&train, &objects, &KnnScorer::new(config), &batch)
            });
            for item in &items {
                let (name, eps): (String, Vec<Option<f64>>) = match item {
                    EvalItem::Criterion(c) if c.needs_epsilon() => (c.name(), args.epsilon.iter().map(|e| Some(*e)).collect()),
                    EvalItem::Criterion(c) => (c.name(), vec![None]),
                    EvalItem::ErrorRate => ("ERR".into(), args.epsilon.iter().map(|e| Some(*e)).collect()),
                };
                for e in eps {
                    let e_cell = e.map(format_f64).unwrap_or_default();
                    let prefix = format!("{variant},{k},{},{e_cell}", csv_field(&name));
                    let p = match &prediction {
                        Ok(p) => p,
                        Err(err) => {
                            out.push_str(&format!("{prefix},skipped,{}\n", csv_field(&err.to_string())));
                            continue;
                        }
                    };
                    let cells = match item {
                        EvalItem::Criterion(c) => {
                            let v = evaluate_empirical(c, &p.pvalues, Some(&truth), e)?;
                            value_cells(&v, |x: &f64| format_f64(*x))
                        }
                        EvalItem::ErrorRate => {
                            let sets = p.pvalues.prediction_sets(e.expect("ERR has ε"));
                            let errors = sets.iter().zip(&truth).filter(|(s, y)| !s.contains(y)).count();
                            format!("{},", format_f64(errors as f64 / truth.len().max(1) as f64))
                        }
                    };
                    out.push_str(&format!("{prefix},{cells}\n"));
                }
            }
        }
    }
    Ok(out)
}
