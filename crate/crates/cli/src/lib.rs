//! Command-line front end.  [`run`] parses arguments, dispatches and maps
//! errors to exit codes: 0 success, 2 invalid input, 3 exhausted budget,
//! 4 failed inequality gate.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use arith_okounkov::experiments::{
    run_inequality_suite, run_theorem_a, run_theorem_b, verify_compatibility, verify_fujita_finite,
    verify_reduction, verify_rescaling, ExperimentConfig,
};
use arith_okounkov::intersect::{corollary_checks, intersection_number, mixed_numbers, Method};
use arith_okounkov::numeric::fmt_sig12;
use arith_okounkov::okounkov::{okounkov_run, polytope_svg};
use arith_okounkov::sections::{enumerate_effective, hzero_band, DEFAULT_NODE_BUDGET};
use arith_okounkov::valuation::{valuation_image_exact, valuation_image_lattice, Flag, FlagPoint};
use arith_okounkov::{make_bundle, make_model, Error, HermitianLineBundle, MetricSpec, ModelKind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

/// Environment variable giving the default for `--threads`.
pub const THREADS_ENV: &str = "OKOUNKOV_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_GATE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "okounkov",
    version,
    about = "Arithmetic Okounkov bodies and volumes on P1 and P2 over Z"
)]
struct Cli {
    /// Worker threads (default from OKOUNKOV_THREADS, else all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Write results to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// ĥ⁰(mL̄) as a CSV row: exact when enumeration is in scope, else a band.
    Hzero(BundleArgs),
    /// The effective sections of mL̄ as JSON.
    Sections(BundleArgs),
    /// The valuation image of mL̄ along a flag.
    Valimage {
        #[command(flatten)]
        bundle: BundleArgs,
        #[command(flatten)]
        flag: FlagArgs,
        #[arg(long, value_enum, default_value = "lattice")]
        mode: ImageMode,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
    /// Hull of the scaled valuation images over a schedule of m.
    Okounkov(OkounkovArgs),
    /// Mixed intersection numbers L̄₁^{d−j}·L̄₂^j and the inequality checks.
    Intersect {
        #[command(flatten)]
        bundle: BundleArgs,
        #[command(flatten)]
        second: SecondBundleArgs,
        #[arg(long, value_enum, default_value = "closed-form")]
        method: MethodArg,
    },
    /// Volume of the Okounkov body against vol(L̄)/d! as p grows.
    TheoremA {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Log-concavity of the volume for the pair (bundle, bundle2).
    TheoremB {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exact checks of the auxiliary estimates.
    Verify {
        #[arg(value_enum)]
        check: Check,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for the inequality sweeps.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// SVG drawing of the Okounkov hull of a bundle on P1.
    EmitSvg(OkounkovArgs),
}

#[derive(Debug, Args)]
struct BundleArgs {
    #[arg(long, value_enum, default_value = "p1z")]
    model: ModelArg,
    #[arg(long, default_value_t = 1)]
    degree: i64,
    #[arg(long, value_enum, default_value = "canonical")]
    metric: MetricArg,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    c_num: i64,
    #[arg(long, default_value_t = 1)]
    c_den: i64,
    #[arg(long, default_value_t = 1)]
    m: u32,
}

#[derive(Debug, Args)]
struct SecondBundleArgs {
    #[arg(long)]
    degree2: Option<i64>,
    #[arg(long, value_enum)]
    metric2: Option<MetricArg>,
    #[arg(long, allow_negative_numbers = true)]
    c_num2: Option<i64>,
    #[arg(long)]
    c_den2: Option<i64>,
}

#[derive(Debug, Args)]
struct FlagArgs {
    /// Residue characteristic of the flag.
    #[arg(long, default_value_t = 2)]
    p: u64,
    /// Point t = alpha on P1.
    #[arg(long, conflicts_with_all = ["infinity", "line"])]
    alpha: Option<u64>,
    /// Point at infinity on P1.
    #[arg(long)]
    infinity: bool,
    /// Line of P2 as three residues, e.g. 0,1,0.
    #[arg(long, value_delimiter = ',', num_args = 3, requires = "point")]
    line: Option<Vec<u64>>,
    /// Point of P2 on the line, as three residues.
    #[arg(long, value_delimiter = ',', num_args = 3, requires = "line")]
    point: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
struct OkounkovArgs {
    #[command(flatten)]
    bundle: BundleArgs,
    #[command(flatten)]
    flag: FlagArgs,
    /// Increasing list of levels, e.g. 5,10,20.
    #[arg(long, value_delimiter = ',', required = true)]
    schedule: Vec<u32>,
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    P1z,
    P2z,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Canonical,
    FubiniStudy,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ImageMode {
    Exact,
    Lattice,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Check {
    Rescaling,
    Reduction,
    Compatibility,
    Fujita,
    Inequalities,
}

enum Failure {
    Invalid(String),
    Budget(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExhausted(_) => Failure::Budget(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<Output, Failure>;

/// Rendered result plus whether every gated inequality held.
struct Output {
    text: String,
    gate_ok: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output {
            text,
            gate_ok: true,
        }
    }
}

fn rational(num: i64, den: i64) -> std::result::Result<BigRational, Failure> {
    if den <= 0 {
        return Err(Failure::Invalid(format!(
            "denominator must be positive, got {den}"
        )));
    }
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

fn metric(family: MetricArg, c: BigRational) -> MetricSpec {
    match family {
        MetricArg::Canonical => MetricSpec::canonical(c),
        MetricArg::FubiniStudy => MetricSpec::fubini_study(c),
    }
}

fn kind(m: ModelArg) -> ModelKind {
    match m {
        ModelArg::P1z => ModelKind::P1Z,
        ModelArg::P2z => ModelKind::P2Z,
    }
}

impl BundleArgs {
    fn bundle(&self) -> std::result::Result<HermitianLineBundle, Failure> {
        let c = rational(self.c_num, self.c_den)?;
        Ok(make_bundle(
            make_model(kind(self.model)),
            self.degree,
            metric(self.metric, c),
        )?)
    }

    fn level(&self) -> std::result::Result<u32, Failure> {
        if self.m == 0 {
            return Err(Failure::Invalid("--m must be at least 1".into()));
        }
        Ok(self.m)
    }
}

impl FlagArgs {
    fn flag(&self, kind: ModelKind) -> std::result::Result<Flag, Failure> {
        let point = match (&self.line, &self.point) {
            (Some(l), Some(q)) => FlagPoint::Plane {
                line: [l[0], l[1], l[2]],
                point: [q[0], q[1], q[2]],
            },
            _ if self.infinity => FlagPoint::Infinity,
            _ => match kind {
                ModelKind::P1Z => FlagPoint::Affine {
                    alpha: self.alpha.unwrap_or(0),
                },
                ModelKind::P2Z => FlagPoint::Plane {
                    line: [0, 1, 0],
                    point: [1, 0, 0],
                },
            },
        };
        Ok(Flag::new(kind, self.p, point)?)
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn read_config(path: &PathBuf) -> std::result::Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(ExperimentConfig::from_json(&text)?)
}

fn hzero(args: &BundleArgs) -> Outcome {
    let bundle = args.bundle()?;
    let m = args.level()?;
    let mut text = String::from("m,rank,count,hzero_lo,hzero_hi\n");
    match enumerate_effective(&bundle, m, DEFAULT_NODE_BUDGET) {
        Ok(set) if set.ambiguous_count == 0 => {
            let h = fmt_sig12((set.len() as f64).ln());
            text += &format!("{m},{},{},{h},{h}\n", set.rank, set.len());
        }
        _ => {
            let (lo, hi) = hzero_band(&bundle, m);
            text += &format!(
                "{m},{},,{},{}\n",
                bundle.rank(m),
                fmt_sig12(lo),
                fmt_sig12(hi)
            );
        }
    }
    Ok(Output::ok(text))
}

fn sections(args: &BundleArgs) -> Outcome {
    let set = enumerate_effective(&args.bundle()?, args.level()?, DEFAULT_NODE_BUDGET)?;
    Ok(Output::ok(json(&set)))
}

fn okounkov(args: &OkounkovArgs, svg: bool) -> Outcome {
    let bundle = args.bundle.bundle()?;
    let flag = args.flag.flag(bundle.model().kind())?;
    let approx = okounkov_run(&bundle, &flag, &args.schedule, args.budget)?;
    if !svg {
        return Ok(Output::ok(json(&approx)));
    }
    if flag.dimension() != 2 {
        return Err(Failure::Invalid("SVG output needs a bundle on P1".into()));
    }
    let bb = &approx.bound_box;
    let bound = Some((
        arith_okounkov::numeric::ratio_to_f64(&bb[0]),
        arith_okounkov::numeric::ratio_to_f64(&bb[1]),
    ));
    Ok(Output::ok(polytope_svg(&approx.polytope, bound, None)))
}

#[derive(Serialize)]
struct IntersectReport {
    method: Method,
    mixed: Vec<f64>,
    error: Vec<f64>,
    checks: arith_okounkov::intersect::CorollaryReport,
}

fn intersect(bundle: &BundleArgs, second: &SecondBundleArgs, method: MethodArg) -> Outcome {
    let b1 = bundle.bundle()?;
    let b2 = match (second.degree2, second.metric2, second.c_num2, second.c_den2) {
        (None, None, None, None) => b1.clone(),
        (d, f, n, q) => {
            let c = rational(n.unwrap_or(bundle.c_num), q.unwrap_or(bundle.c_den))?;
            make_bundle(
                b1.model(),
                d.unwrap_or(bundle.degree),
                metric(f.unwrap_or(bundle.metric), c),
            )?
        }
    };
    let method = match method {
        MethodArg::ClosedForm => Method::ClosedForm,
        MethodArg::Quadrature => Method::Quadrature,
    };
    let d = b1.model().dimension();
    let mut mixed = Vec::new();
    let mut error = Vec::new();
    for j in 0..=d {
        let list: Vec<&HermitianLineBundle> =
            (0..d).map(|i| if i < d - j { &b1 } else { &b2 }).collect();
        let v = intersection_number(&list, method)?;
        mixed.push(v.value);
        error.push(v.error);
    }
    debug_assert_eq!(mixed.len(), mixed_numbers(&b1, &b2)?.len());
    let checks = corollary_checks(&b1, &b2)?;
    let gate_ok = checks.all_hold();
    Ok(Output {
        text: json(&IntersectReport {
            method,
            mixed,
            error,
            checks,
        }),
        gate_ok,
    })
}

fn theorem_a(path: &PathBuf, format: Format) -> Outcome {
    let report = run_theorem_a(&read_config(path)?)?;
    let s = &report.summary;
    let gate_ok = s.gap_within_envelope && s.count_within_envelope;
    let text = match format {
        Format::Csv => report.to_csv(),
        Format::Json => json(&report),
    };
    Ok(Output { text, gate_ok })
}

fn theorem_b(path: &PathBuf) -> Outcome {
    let cfg = read_config(path)?;
    let b2 = cfg
        .bundle2
        .clone()
        .ok_or_else(|| Failure::Invalid("theorem-b needs bundle2 in the config".into()))?;
    let m = *cfg.m_schedule.last().expect("validated schedule");
    let mut reports = Vec::new();
    for &p in &cfg.primes {
        reports.push(run_theorem_b(
            &cfg.bundle,
            &b2,
            &cfg.flag_for(p)?,
            m,
            cfg.budget,
        )?);
    }
    let gate_ok = reports.iter().all(|r| r.holds());
    Ok(Output {
        text: json(&reports),
        gate_ok,
    })
}

fn verify(check: Check, config: Option<&PathBuf>, seed: u64) -> Outcome {
    if let Check::Inequalities = check {
        let rep = run_inequality_suite(seed, 100, 50, 50)?;
        return Ok(Output {
            gate_ok: rep.holds(),
            text: json(&rep),
        });
    }
    let cfg = read_config(config.ok_or_else(|| Failure::Invalid("--config is required".into()))?)?;
    let b = &cfg.bundle;
    let (text, gate_ok) = match check {
        Check::Rescaling => {
            let alphas = cfg
                .alphas
                .iter()
                .map(|a| a.value())
                .collect::<arith_okounkov::Result<Vec<_>>>()?;
            let reps = cfg
                .m_schedule
                .iter()
                .map(|&m| verify_rescaling(b, m, &alphas))
                .collect::<arith_okounkov::Result<Vec<_>>>()?;
            (json(&reps), reps.iter().all(|r| r.holds()))
        }
        Check::Reduction => {
            if cfg.n_list.is_empty() {
                return Err(Failure::Invalid(
                    "reduction needs n_list in the config".into(),
                ));
            }
            let mut reps = Vec::new();
            for &m in &cfg.m_schedule {
                for &n in &cfg.n_list {
                    reps.push(verify_reduction(b, m, n as u64)?);
                }
            }
            (json(&reps), reps.iter().all(|r| r.holds()))
        }
        Check::Compatibility => {
            let mut reps = Vec::new();
            for &p in &cfg.primes {
                let flag = cfg.flag_for(p)?;
                for &m in &cfg.m_schedule {
                    reps.push(verify_compatibility(b, m, &flag)?);
                }
            }
            (json(&reps), reps.iter().all(|r| r.holds))
        }
        Check::Fujita => {
            let k_max = cfg
                .k_max
                .ok_or_else(|| Failure::Invalid("fujita needs k_max in the config".into()))?;
            let n_list = if cfg.n_list.is_empty() {
                vec![1]
            } else {
                cfg.n_list.clone()
            };
            let rep = verify_fujita_finite(
                b,
                &cfg.flag_for(cfg.primes[0])?,
                &n_list,
                k_max,
                cfg.budget,
                cfg.epsilon,
            )?;
            let ok = rep.inclusion_holds && rep.nondecreasing.iter().all(|(_, ok)| *ok);
            (json(&rep), ok)
        }
        Check::Inequalities => unreachable!(),
    };
    Ok(Output { text, gate_ok })
}

fn valimage(bundle: &BundleArgs, flag: &FlagArgs, mode: ImageMode, budget: usize) -> Outcome {
    let b = bundle.bundle()?;
    let m = bundle.level()?;
    let flag = flag.flag(b.model().kind())?;
    let image = match mode {
        ImageMode::Exact => valuation_image_exact(&b, m, &flag)?,
        ImageMode::Lattice => valuation_image_lattice(&b, m, &flag, budget)?,
    };
    Ok(Output::ok(json(&image)))
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Hzero(a) => hzero(a),
        Command::Sections(a) => sections(a),
        Command::Valimage {
            bundle,
            flag,
            mode,
            budget,
        } => valimage(bundle, flag, *mode, *budget),
        Command::Okounkov(a) => okounkov(a, false),
        Command::EmitSvg(a) => okounkov(a, true),
        Command::Intersect {
            bundle,
            second,
            method,
        } => intersect(bundle, second, *method),
        Command::TheoremA { config, format } => theorem_a(config, *format),
        Command::TheoremB { config } => theorem_b(config),
        Command::Verify {
            check,
            config,
            seed,
        } => verify(*check, config.as_ref(), *seed),
    }
}

fn emit(cli: &Cli, text: &str, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    match &cli.out {
        Some(path) => std::fs::write(path, text),
        None => stdout.write_all(text.as_bytes()),
    }
    .map_err(|e| Failure::Io(e.to_string()))
}

/// Runs the command line `argv` (program name first), writing results to
/// `stdout` or `--out` and diagnostics to `stderr`.  Returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Failure::Invalid("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Invalid(e.to_string()))
            .and_then(|pool| pool.install(|| dispatch(&cli))),
        None => dispatch(&cli),
    };
    let (code, message) =
        match result.and_then(|out| emit(&cli, &out.text, stdout).map(|_| out.gate_ok)) {
            Ok(true) => (EXIT_OK, None),
            Ok(false) => (EXIT_GATE, Some("inequality gate failed".to_string())),
            Err(Failure::Invalid(m)) | Err(Failure::Io(m)) => (EXIT_INVALID, Some(m)),
            Err(Failure::Budget(m)) => (EXIT_BUDGET, Some(m)),
        };
    if let Some(m) = message {
        let _ = writeln!(stderr, "okounkov: {m}");
    }
    code
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}
