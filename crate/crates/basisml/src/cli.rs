//! Command-line interface: basis classification, basis-to-basis translation
//! with optional semantic verification, S5 balancing, equivalence checking,
//! the diamond-count lower-bound search, and model checking.
//!
//! Reports go to standard output as single-line JSON by default; `--format
//! text` switches to a line-per-field rendering. Exit codes: 0 on success,
//! 1 on domain errors (reported as `{"error", "message"}` objects in JSON
//! mode), 2 on usage errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::boolfn::Basis;
use crate::formula::{parse, Formula, Metrics};
use crate::s5::{balance, eliminate_iff_balanced};
use crate::semantics::{
    min_diamond_search, model_check, phi_n, Decider, FrameClass, KripkeModel, DEFAULT_BUDGET,
};
use crate::translate::{translate_pipeline, TranslationReport};

/// Environment variable overriding the default decider budget.
pub const BUDGET_ENV: &str = "BASISML_BUDGET";

#[derive(Parser)]
#[command(
    name = "basisml",
    version,
    about = "Boolean basis analysis and succinctness-preserving translation of modal formulae"
)]
pub struct RunConfig {
    /// Node budget for the modal deciders (default 1000000; $BASISML_BUDGET overrides).
    #[arg(long, global = true)]
    pub budget: Option<u64>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Seed for randomized searches.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
pub enum Command {
    /// Classify a basis: completeness plus per-function local monotonicity and affinity.
    Basis {
        /// Basis file (one `name arity bits` line per function).
        #[arg(long)]
        file: Option<PathBuf>,

        /// Built-in basis name: dm or extdm.
        #[arg(long)]
        name: Option<String>,
    },

    /// Translate a formula between bases, reporting rank, constant, and size bound.
    Translate {
        /// Source basis: dm, extdm, or a basis file path.
        #[arg(long)]
        from: String,

        /// Target basis: dm, extdm, or a basis file path.
        #[arg(long)]
        to: String,

        /// Formula text over the source basis.
        #[arg(long)]
        formula: Option<String>,

        /// File containing the formula.
        #[arg(long)]
        formula_file: Option<PathBuf>,

        /// Check input/output equivalence over this frame class; failure is a hard error.
        #[arg(long, value_parser = frame_class_value)]
        verify: Option<FrameClass>,
    },

    /// Rebalance a formula to logarithmic depth, preserving S5 equivalence.
    Balance {
        /// Formula text over the extended De Morgan basis.
        #[arg(long)]
        formula: Option<String>,

        /// File containing the formula.
        #[arg(long)]
        formula_file: Option<PathBuf>,

        /// Also eliminate bi-implications, landing in the De Morgan basis.
        #[arg(long)]
        to_dm: bool,
    },

    /// Decide whether two formulae are equivalent over a frame class.
    Equiv {
        /// Left formula text.
        #[arg(long)]
        left: Option<String>,

        /// File containing the left formula.
        #[arg(long)]
        left_file: Option<PathBuf>,

        /// Right formula text.
        #[arg(long)]
        right: Option<String>,

        /// File containing the right formula.
        #[arg(long)]
        right_file: Option<PathBuf>,

        /// Frame class: K, T, or S5.
        #[arg(long, value_parser = frame_class_value)]
        class: FrameClass,

        /// Basis the formulae are written in: dm, extdm, or a basis file path.
        #[arg(long, default_value = "extdm")]
        basis: String,
    },

    /// Search for a small equivalent of the n-th diamond-family formula.
    Lowerbound {
        /// Index into the diamond family.
        #[arg(long)]
        n: usize,

        /// Largest diamond count admitted in candidates.
        #[arg(long)]
        max_diamonds: usize,

        /// Largest candidate size.
        #[arg(long)]
        max_size: usize,

        /// Frame class for the equivalence checks.
        #[arg(long, value_parser = frame_class_value, default_value = "T")]
        class: FrameClass,
    },

    /// Evaluate a formula at a world of a Kripke model.
    CheckModel {
        /// Model file.
        #[arg(long)]
        model: PathBuf,

        /// Formula text.
        #[arg(long)]
        formula: Option<String>,

        /// File containing the formula.
        #[arg(long)]
        formula_file: Option<PathBuf>,

        /// World to evaluate at (default: the model's initial world).
        #[arg(long)]
        world: Option<usize>,

        /// Reject models whose relation lacks the declared frame's closure
        /// instead of closing it.
        #[arg(long)]
        strict: bool,

        /// Basis the formula is written in: dm, extdm, or a basis file path.
        #[arg(long, default_value = "extdm")]
        basis: String,
    },
}

fn frame_class_value(tag: &str) -> Result<FrameClass, String> {
    FrameClass::parse(tag).ok_or_else(|| format!("expected K, T, or S5, got '{tag}'"))
}

enum Failure {
    Usage(String),
    Domain { name: String, message: String },
}

/// The variant name of a derived Debug rendering: everything before the
/// first space, parenthesis, or brace.
fn variant_name(debug: &str) -> &str {
    debug
        .split([' ', '(', '{'])
        .next()
        .filter(|s| !s.is_empty())
        .unwrap_or("Error")
}

fn domain<E: std::fmt::Debug + std::fmt::Display>(e: E) -> Failure {
    Failure::Domain {
        name: variant_name(&format!("{e:?}")).to_string(),
        message: e.to_string(),
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: &'a str,
}

#[derive(Serialize)]
struct FunctionReport {
    name: String,
    arity: usize,
    table: String,
    locally_monotone: bool,
    affine: bool,
}

#[derive(Serialize)]
struct BasisReport {
    basis: String,
    complete: bool,
    functions: Vec<FunctionReport>,
}

#[derive(Serialize)]
struct TranslateOutput {
    formula: String,
    report: TranslationReport,
}

#[derive(Serialize)]
struct BalanceOutput {
    formula: String,
    input: Metrics,
    output: Metrics,
}

#[derive(Serialize)]
struct EquivOutput {
    left: String,
    right: String,
    frame_class: String,
    equivalent: bool,
}

#[derive(Serialize)]
struct LowerboundOutput {
    n: usize,
    frame_class: String,
    max_diamonds: usize,
    max_size: usize,
    target: String,
    found: Option<String>,
}

#[derive(Serialize)]
struct CheckModelOutput {
    worlds: usize,
    frame_class: String,
    world: usize,
    formula: String,
    holds: bool,
}

/// Parses `argv` and runs the selected subcommand, printing the report to
/// standard output. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(argv) {
        Ok(config) => config,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let format = config.format;
    match execute(&config) {
        Ok(report) => {
            println!("{report}");
            0
        }
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            2
        }
        Err(Failure::Domain { name, message }) => {
            match format {
                Format::Json => {
                    let object = ErrorReport {
                        error: &name,
                        message: &message,
                    };
                    println!("{}", serde_json::to_string(&object).expect("error serializes"));
                }
                Format::Text => eprintln!("error ({name}): {message}"),
            }
            1
        }
    }
}

/// Entry point for the binary: runs on the process arguments.
pub fn run_from_env() -> i32 {
    run(std::env::args_os())
}

fn execute(config: &RunConfig) -> Result<String, Failure> {
    let budget = resolve_budget(config.budget)?;
    let format = config.format;
    match &config.command {
        Command::Basis { file, name } => run_basis(format, file.as_deref(), name.as_deref()),
        Command::Translate {
            from,
            to,
            formula,
            formula_file,
            verify,
        } => run_translate(format, budget, from, to, formula, formula_file, *verify),
        Command::Balance {
            formula,
            formula_file,
            to_dm,
        } => run_balance(format, formula, formula_file, *to_dm),
        Command::Equiv {
            left,
            left_file,
            right,
            right_file,
            class,
            basis,
        } => run_equiv(format, budget, left, left_file, right, right_file, *class, basis),
        Command::Lowerbound {
            n,
            max_diamonds,
            max_size,
            class,
        } => run_lowerbound(format, budget, *n, *max_diamonds, *max_size, *class),
        Command::CheckModel {
            model,
            formula,
            formula_file,
            world,
            strict,
            basis,
        } => run_check_model(format, model, formula, formula_file, *world, *strict, basis),
    }
}

fn resolve_budget(flag: Option<u64>) -> Result<u64, Failure> {
    let budget = match flag {
        Some(value) => value,
        None => match std::env::var(BUDGET_ENV) {
            Ok(text) => text.trim().parse::<u64>().map_err(|_| {
                Failure::Usage(format!("{BUDGET_ENV} must be an integer, got '{text}'"))
            })?,
            Err(std::env::VarError::NotPresent) => DEFAULT_BUDGET,
            Err(e) => return Err(Failure::Usage(format!("{BUDGET_ENV}: {e}"))),
        },
    };
    if budget == 0 {
        return Err(Failure::Usage("budget must be positive".to_string()));
    }
    Ok(budget)
}

fn builtin_basis(name: &str) -> Option<Basis> {
    match name {
        "dm" => Some(Basis::de_morgan()),
        "extdm" => Some(Basis::extended_de_morgan()),
        _ => None,
    }
}

fn load_basis_file(path: &Path) -> Result<Basis, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::Usage(format!("cannot read basis file '{}': {e}", path.display()))
    })?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("basis");
    Basis::parse(&text, name).map_err(domain)
}

/// `dm` and `extdm` name the built-in bases; anything else is a file path.
fn resolve_basis(spec: &str) -> Result<Basis, Failure> {
    match builtin_basis(spec) {
        Some(basis) => Ok(basis),
        None => load_basis_file(Path::new(spec)),
    }
}

fn read_formula_text(
    text: &Option<String>,
    file: &Option<PathBuf>,
    flag: &str,
) -> Result<String, Failure> {
    match (text, file) {
        (Some(t), None) => Ok(t.clone()),
        (None, Some(path)) => std::fs::read_to_string(path)
            .map(|s| s.trim().to_string())
            .map_err(|e| {
                Failure::Usage(format!("cannot read formula file '{}': {e}", path.display()))
            }),
        _ => Err(Failure::Usage(format!(
            "provide exactly one of --{flag} and --{flag}-file"
        ))),
    }
}

fn parse_formula(text: &str, basis: &Basis) -> Result<Formula, Failure> {
    parse(text, basis).map_err(domain)
}

fn emit<R: Serialize>(format: Format, report: &R, text: impl FnOnce() -> String) -> String {
    match format {
        Format::Json => serde_json::to_string(report).expect("reports serialize"),
        Format::Text => text(),
    }
}

fn metrics_line(m: &Metrics) -> String {
    format!(
        "size={} norm={} depth={} diamonds={}",
        m.size, m.norm, m.depth, m.diamond_count
    )
}

fn run_basis(
    format: Format,
    file: Option<&Path>,
    name: Option<&str>,
) -> Result<String, Failure> {
    let basis = match (file, name) {
        (Some(path), None) => load_basis_file(path)?,
        (None, Some(n)) => builtin_basis(n).ok_or_else(|| {
            Failure::Usage(format!("unknown built-in basis '{n}' (expected dm or extdm)"))
        })?,
        _ => {
            return Err(Failure::Usage(
                "provide exactly one of --file and --name".to_string(),
            ))
        }
    };
    let functions: Vec<FunctionReport> = basis
        .functions()
        .iter()
        .map(|f| FunctionReport {
            name: f.name().to_string(),
            arity: f.arity(),
            table: f.bit_string(),
            locally_monotone: f.is_locally_monotone(),
            affine: f.is_affine(),
        })
        .collect();
    let report = BasisReport {
        basis: basis.name().to_string(),
        complete: basis.is_complete(),
        functions,
    };
    Ok(emit(format, &report, || {
        let mut out = format!("basis: {}\ncomplete: {}", report.basis, report.complete);
        for f in &report.functions {
            let _ = write!(
                out,
                "\nfunction {}: arity={} table={} locally_monotone={} affine={}",
                f.name, f.arity, f.table, f.locally_monotone, f.affine
            );
        }
        out
    }))
}

fn union_basis(source: &Basis, target: &Basis) -> Result<Basis, Failure> {
    source
        .union(target, &format!("{}+{}", source.name(), target.name()))
        .map_err(domain)
}

#[allow(clippy::too_many_arguments)]
fn run_translate(
    format: Format,
    budget: u64,
    from: &str,
    to: &str,
    formula: &Option<String>,
    formula_file: &Option<PathBuf>,
    verify: Option<FrameClass>,
) -> Result<String, Failure> {
    let source = resolve_basis(from)?;
    let target = resolve_basis(to)?;
    let text = read_formula_text(formula, formula_file, "formula")?;
    let input = parse_formula(&text, &source)?;
    let (output, mut report) = translate_pipeline(&input, &source, &target).map_err(domain)?;
    if let Some(class) = verify {
        let decider = Decider::new(union_basis(&source, &target)?, budget);
        let ok = decider.equivalent(&input, &output, class).map_err(domain)?;
        report.verified = Some(ok);
        report.frame_class = Some(class.to_string());
        if !ok {
            return Err(Failure::Domain {
                name: "VerificationFailed".to_string(),
                message: format!(
                    "translated formula is not {class}-equivalent to the input: {}",
                    output.render()
                ),
            });
        }
    }
    let out = TranslateOutput {
        formula: output.render(),
        report,
    };
    Ok(emit(format, &out, || {
        let r = &out.report;
        let mut lines = format!(
            "formula: {}\nsource_basis: {}\ntarget_basis: {}\nrank: {}\nkappa_constant: {}\nbound: {}\ninput: {}\noutput: {}\nintroduced_z: {}",
            out.formula,
            r.source_basis,
            r.target_basis,
            r.rank,
            r.kappa_constant,
            r.bound,
            metrics_line(&r.input),
            metrics_line(&r.output),
            r.introduced_z,
        );
        if let (Some(ok), Some(class)) = (r.verified, &r.frame_class) {
            let _ = write!(lines, "\nverified: {ok} over {class}");
        }
        lines
    }))
}

fn run_balance(
    format: Format,
    formula: &Option<String>,
    formula_file: &Option<PathBuf>,
    to_dm: bool,
) -> Result<String, Failure> {
    let basis = Basis::extended_de_morgan();
    let text = read_formula_text(formula, formula_file, "formula")?;
    let input = parse_formula(&text, &basis)?;
    let output = if to_dm {
        eliminate_iff_balanced(&input)
    } else {
        balance(&input)
    };
    let out = BalanceOutput {
        formula: output.render(),
        input: input.metrics(),
        output: output.metrics(),
    };
    Ok(emit(format, &out, || {
        format!(
            "formula: {}\ninput: {}\noutput: {}",
            out.formula,
            metrics_line(&out.input),
            metrics_line(&out.output)
        )
    }))
}

#[allow(clippy::too_many_arguments)]
fn run_equiv(
    format: Format,
    budget: u64,
    left: &Option<String>,
    left_file: &Option<PathBuf>,
    right: &Option<String>,
    right_file: &Option<PathBuf>,
    class: FrameClass,
    basis_spec: &str,
) -> Result<String, Failure> {
    let basis = resolve_basis(basis_spec)?;
    let left_text = read_formula_text(left, left_file, "left")?;
    let right_text = read_formula_text(right, right_file, "right")?;
    let left_formula = parse_formula(&left_text, &basis)?;
    let right_formula = parse_formula(&right_text, &basis)?;
    let decider = Decider::new(basis, budget);
    let equivalent = decider
        .equivalent(&left_formula, &right_formula, class)
        .map_err(domain)?;
    let out = EquivOutput {
        left: left_formula.render(),
        right: right_formula.render(),
        frame_class: class.to_string(),
        equivalent,
    };
    Ok(emit(format, &out, || {
        format!(
            "left: {}\nright: {}\nframe_class: {}\nequivalent: {}",
            out.left, out.right, out.frame_class, out.equivalent
        )
    }))
}

fn run_lowerbound(
    format: Format,
    budget: u64,
    n: usize,
    max_diamonds: usize,
    max_size: usize,
    class: FrameClass,
) -> Result<String, Failure> {
    let target = phi_n(n);
    let decider = Decider::new(Basis::extended_de_morgan(), budget);
    let found = min_diamond_search(&decider, &target, class, max_diamonds, max_size)
        .map_err(domain)?;
    let out = LowerboundOutput {
        n,
        frame_class: class.to_string(),
        max_diamonds,
        max_size,
        target: target.render(),
        found: found.map(|f| f.render()),
    };
    Ok(emit(format, &out, || {
        let verdict = match &out.found {
            Some(f) => format!("found {f}"),
            None => "none found".to_string(),
        };
        format!("target: {}\nverdict: {verdict}", out.target)
    }))
}

#[allow(clippy::too_many_arguments)]
fn run_check_model(
    format: Format,
    model_path: &Path,
    formula: &Option<String>,
    formula_file: &Option<PathBuf>,
    world: Option<usize>,
    strict: bool,
    basis_spec: &str,
) -> Result<String, Failure> {
    let model_text = std::fs::read_to_string(model_path).map_err(|e| {
        Failure::Usage(format!(
            "cannot read model file '{}': {e}",
            model_path.display()
        ))
    })?;
    let (model, class) = KripkeModel::load(&model_text, !strict).map_err(domain)?;
    let basis = resolve_basis(basis_spec)?;
    let text = read_formula_text(formula, formula_file, "formula")?;
    let input = parse_formula(&text, &basis)?;
    let world = world.unwrap_or_else(|| model.initial());
    let holds = model_check(&model, world, &input, &basis).map_err(domain)?;
    let out = CheckModelOutput {
        worlds: model.worlds(),
        frame_class: class.to_string(),
        world,
        formula: input.render(),
        holds,
    };
    Ok(emit(format, &out, || {
        format!(
            "worlds: {}\nframe_class: {}\nworld: {}\nformula: {}\nholds: {}",
            out.worlds, out.frame_class, out.world, out.formula, out.holds
        )
    }))
}
