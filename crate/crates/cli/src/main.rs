//! Command-line front end: reproducible solves, verifications, and
//! structure extractions with JSON artifacts.
//!
//! Exit codes are stable: 0 success, 2 verification failure, 3 inconsistent
//! system, 4 I/O, parse, or configuration error. Identical flags (including
//! `--seed`) produce byte-identical output files; wall-clock timing goes to
//! stderr only.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lieder::json::{
    self, algebra_from_dto, algebra_to_dto, classification_to_dto, decomposition_to_dto,
    deltas_from_dto, deltas_to_dto, family_from_dto, family_to_dto, solution_to_dto, AlgebraDto,
    DeltaSequenceDto, MapFamilyDto,
};
use lieder::maps::{
    check_higher_derivation, check_lie_higher_derivation, check_xi_condition_on_pairs, MapFamily,
};
use lieder::solver::{
    sample_zero_product_pairs, zero_product_span, ExtensionChoice, LevelSolver, SolverError,
};
use lieder::structure::{
    classify_xi_family, decompose_family, rebuild_from_delta, transfer_to_delta, DeltaOrdering,
    StructureError, XiVerdict,
};
use lieder::{format_scalar, parse_scalar, Algebra, Element, Scalar};

#[derive(Parser)]
#[command(name = "lieder", version, about = "Exact workbench for bracket conditions on block matrix algebras", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the zero-product bracket condition level by level and grow a family.
    Solve(SolveArgs),
    /// Check a family file against the definitional identities.
    Verify(VerifyArgs),
    /// Decompose a ξ=1 family into per-block generators plus functionals.
    Decompose(DecomposeArgs),
    /// Transfer a family to its delta sequence.
    Transfer(TransferArgs),
    /// Rebuild a family from a delta sequence file.
    Rebuild(RebuildArgs),
    /// Classify a solved family at ξ ≠ 1.
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Algebra: `matrix:<d>`, `blocks:<d1,d2,...>`, or `file:<path>`.
    #[arg(long)]
    algebra: String,
    /// Seed for span saturation, sampling, and random choices.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of independently sampled zero-product verification pairs.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// The ξ parameter, as an exact rational `p/q`.
    #[arg(long, allow_hyphen_values = true)]
    xi: String,
    /// Number of levels to solve.
    #[arg(long)]
    levels: usize,
    /// How to pick each level map out of its solution space.
    #[arg(long, value_enum, default_value_t = ChoiceArg::Random)]
    choice: ChoiceArg,
    /// Optional family file to extend instead of starting from the identity.
    #[arg(long)]
    family: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChoiceArg {
    Particular,
    Random,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, allow_hyphen_values = true)]
    xi: String,
    /// Family file to verify.
    #[arg(long)]
    family: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    family: PathBuf,
}

#[derive(Args)]
struct TransferArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    family: PathBuf,
    /// Recursion ordering: `a` composes family-then-delta, `b` the reverse.
    #[arg(long, value_enum)]
    ordering: OrderingArg,
    /// ξ used when checking the transferred deltas on sampled pairs.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    xi: String,
}

#[derive(Args)]
struct RebuildArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Delta sequence file produced by `transfer`.
    #[arg(long)]
    deltas: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, allow_hyphen_values = true)]
    xi: String,
    #[arg(long)]
    family: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderingArg {
    A,
    B,
}

impl From<OrderingArg> for DeltaOrdering {
    fn from(o: OrderingArg) -> Self {
        match o {
            OrderingArg::A => DeltaOrdering::A,
            OrderingArg::B => DeltaOrdering::B,
        }
    }
}

/// Failure classes mapped onto the stable exit codes.
enum CliError {
    /// exit 2: a checked identity failed
    Verification(String),
    /// exit 3: a level system has no solution
    Inconsistent(String),
    /// exit 4: i/o, parse, or configuration problem
    Config(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 2,
            CliError::Inconsistent(_) => 3,
            CliError::Config(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Verification(m) | CliError::Inconsistent(m) | CliError::Config(m) => m,
        }
    }
}

impl From<json::JsonError> for CliError {
    fn from(e: json::JsonError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match &e {
            SolverError::Inconsistent { .. } => CliError::Inconsistent(e.to_string()),
            SolverError::ExplicitNotASolution { .. } => CliError::Verification(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<StructureError> for CliError {
    fn from(e: StructureError) -> Self {
        match &e {
            StructureError::XiOneRejected => CliError::Config(e.to_string()),
            StructureError::Map(_) | StructureError::Algebra(_) => CliError::Config(e.to_string()),
            _ => CliError::Verification(e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct ConfigEcho {
    algebra: String,
    xi: Option<String>,
    levels: Option<usize>,
    seed: u64,
    samples: usize,
    choice: Option<String>,
    ordering: Option<String>,
    family: Option<String>,
    out: String,
}

#[derive(Serialize)]
struct SpanInfo {
    dim: usize,
    draws: usize,
    seed: u64,
}

#[derive(Serialize)]
struct LevelRow {
    level: usize,
    solution_dim: usize,
    constraints: usize,
    particular_zero: bool,
}

#[derive(Serialize)]
struct CheckRow {
    name: String,
    level: Option<usize>,
    pass: bool,
    witness: Option<String>,
}

#[derive(Serialize)]
struct Report {
    command: String,
    config: ConfigEcho,
    span: Option<SpanInfo>,
    levels: Vec<LevelRow>,
    checks: Vec<CheckRow>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            };
        }
    };
    let start = Instant::now();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Decompose(args) => cmd_decompose(args),
        Command::Transfer(args) => cmd_transfer(args),
        Command::Rebuild(args) => cmd_rebuild(args),
        Command::Classify(args) => cmd_classify(args),
    };
    eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn load_algebra(spec: &str) -> Result<Algebra, CliError> {
    if let Some(d) = spec.strip_prefix("matrix:") {
        let d: usize = d
            .parse()
            .map_err(|_| CliError::Config(format!("bad matrix size in `{spec}`")))?;
        return Algebra::matrix(d).map_err(|e| CliError::Config(e.to_string()));
    }
    if let Some(sizes) = spec.strip_prefix("blocks:") {
        let sizes: Vec<usize> = sizes
            .split(',')
            .map(|s| s.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Config(format!("bad block sizes in `{spec}`")))?;
        return Algebra::block_diagonal(&sizes).map_err(|e| CliError::Config(e.to_string()));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let dto: AlgebraDto = json::read_json(Path::new(path))?;
        return Ok(algebra_from_dto(&dto)?);
    }
    Err(CliError::Config(format!(
        "algebra spec `{spec}` is not matrix:<d>, blocks:<d1,d2,...>, or file:<path>"
    )))
}

fn parse_xi(text: &str) -> Result<Scalar, CliError> {
    parse_scalar(text).map_err(|e| CliError::Config(format!("bad --xi value: {e}")))
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create output directory: {e}")))
}

fn load_family(path: &Path, alg: &Algebra) -> Result<MapFamily, CliError> {
    let dto: MapFamilyDto = json::read_json(path)?;
    Ok(family_from_dto(&dto, alg)?)
}

fn config_echo(common: &CommonArgs) -> ConfigEcho {
    ConfigEcho {
        algebra: common.algebra.clone(),
        xi: None,
        levels: None,
        seed: common.seed,
        samples: common.samples,
        choice: None,
        ordering: None,
        family: None,
        out: common.out.display().to_string(),
    }
}

fn write_report(dir: &Path, report: &Report) -> Result<(), CliError> {
    json::write_json(&dir.join("report.json"), report)?;
    println!("report: {}", dir.join("report.json").display());
    Ok(())
}

/// Sampled verification pairs, seeded away from the span seed.
fn verification_pairs(alg: &Algebra, samples: usize, seed: u64) -> Vec<(Element, Element)> {
    sample_zero_product_pairs(alg, samples, seed ^ 0x5eed_5eed_5eed_5eed)
}

fn witness_string(alg: &Algebra, v: &lieder::Violation) -> String {
    format!(
        "level {}, pair ({}, {}), discrepancy {}",
        v.level,
        v.left,
        v.right,
        alg.format_element(&v.discrepancy)
    )
}

fn unit_centrality_rows(alg: &Algebra, fam: &MapFamily) -> Vec<CheckRow> {
    let unit = alg.unit();
    (1..=fam.order())
        .map(|n| {
            let image = fam.level(n).apply(&unit).expect("dims match");
            let central = alg.is_central(&image);
            CheckRow {
                name: "unit_image_central".to_owned(),
                level: Some(n),
                pass: central,
                witness: (!central).then(|| alg.format_element(&image)),
            }
        })
        .collect()
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let alg = load_algebra(&args.common.algebra)?;
    let xi = parse_xi(&args.xi)?;
    if args.levels == 0 {
        return Err(CliError::Config("--levels must be at least 1".into()));
    }
    prepare_out(&args.common.out)?;
    let span = zero_product_span(&alg, args.common.seed);
    let solver = LevelSolver::new(&alg, &xi, &span)?;
    let mut family = match &args.family {
        Some(path) => load_family(path, &alg)?,
        None => MapFamily::identity_family(alg.dim(), 0),
    };
    let mut level_rows = Vec::new();
    for _ in 0..args.levels {
        let n = family.order() + 1;
        let space = solver.solve_for_prefix(&family)?;
        level_rows.push(LevelRow {
            level: n,
            solution_dim: space.dimension(),
            constraints: space.constraint_count,
            particular_zero: space.particular.is_zero(),
        });
        json::write_json(
            &args.common.out.join(format!("level{n}.json")),
            &solution_to_dto(&space),
        )?;
        let choice = match args.choice {
            ChoiceArg::Particular => ExtensionChoice::Particular,
            ChoiceArg::Random => ExtensionChoice::Random {
                seed: args.common.seed.wrapping_add(n as u64),
            },
        };
        family = solver.extend(&family, &choice)?;
        let row = level_rows.last().expect("just pushed");
        println!(
            "level {n}: solution dimension {}, constraints {}",
            row.solution_dim, row.constraints
        );
    }
    json::write_json(
        &args.common.out.join("family.json"),
        &family_to_dto(&family, alg.name()),
    )?;
    json::write_json(
        &args.common.out.join("algebra.json"),
        &algebra_to_dto(&alg),
    )?;

    // Soundness: the grown family must satisfy the condition on fresh pairs.
    let pairs = verification_pairs(&alg, args.common.samples, args.common.seed);
    let check = check_xi_condition_on_pairs(&alg, &family, &xi, &pairs)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut checks = vec![CheckRow {
        name: "xi_condition_sampled_pairs".to_owned(),
        level: None,
        pass: check.is_ok(),
        witness: check.as_ref().err().map(|v| witness_string(&alg, v)),
    }];
    checks.extend(unit_centrality_rows(&alg, &family));
    let all_pass = checks.iter().all(|c| c.pass);

    let mut config = config_echo(&args.common);
    config.xi = Some(format_scalar(&xi));
    config.levels = Some(args.levels);
    config.family = args.family.as_ref().map(|p| p.display().to_string());
    config.choice = Some(
        match args.choice {
            ChoiceArg::Particular => "particular",
            ChoiceArg::Random => "random",
        }
        .to_owned(),
    );
    let report = Report {
        command: "solve".to_owned(),
        config,
        span: Some(SpanInfo {
            dim: span.len(),
            draws: span.draws(),
            seed: span.seed(),
        }),
        levels: level_rows,
        checks,
    };
    write_report(&args.common.out, &report)?;
    if !all_pass {
        return Err(CliError::Verification(
            "solved family failed a verification check; see report".into(),
        ));
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let alg = load_algebra(&args.common.algebra)?;
    let xi = parse_xi(&args.xi)?;
    prepare_out(&args.common.out)?;
    let family = load_family(&args.family, &alg)?;
    let span = zero_product_span(&alg, args.common.seed);
    let span_pairs: Vec<(Element, Element)> = span
        .vectors()
        .iter()
        .map(|v| (v.left.clone(), v.right.clone()))
        .collect();
    let sampled = verification_pairs(&alg, args.common.samples, args.common.seed);

    let mut checks = Vec::new();
    // Exact: the span pairs generate the whole zero-product constraint space.
    let on_span = check_xi_condition_on_pairs(&alg, &family, &xi, &span_pairs)
        .map_err(|e| CliError::Config(e.to_string()))?;
    checks.push(CheckRow {
        name: "xi_condition_span_pairs".to_owned(),
        level: None,
        pass: on_span.is_ok(),
        witness: on_span.as_ref().err().map(|v| witness_string(&alg, v)),
    });
    let on_sampled = check_xi_condition_on_pairs(&alg, &family, &xi, &sampled)
        .map_err(|e| CliError::Config(e.to_string()))?;
    checks.push(CheckRow {
        name: "xi_condition_sampled_pairs".to_owned(),
        level: None,
        pass: on_sampled.is_ok(),
        witness: on_sampled.as_ref().err().map(|v| witness_string(&alg, v)),
    });
    let higher = check_higher_derivation(&alg, &family);
    checks.push(CheckRow {
        name: "higher_derivation".to_owned(),
        level: None,
        pass: higher.is_ok(),
        witness: higher.as_ref().err().map(|v| witness_string(&alg, v)),
    });
    let lie = check_lie_higher_derivation(&alg, &family);
    checks.push(CheckRow {
        name: "lie_higher_derivation".to_owned(),
        level: None,
        pass: lie.is_ok(),
        witness: lie.as_ref().err().map(|v| witness_string(&alg, v)),
    });
    checks.extend(unit_centrality_rows(&alg, &family));

    for row in &checks {
        println!(
            "check {}: {}{}",
            row.name,
            if row.pass { "pass" } else { "FAIL" },
            row.witness
                .as_deref()
                .map(|w| format!(" ({w})"))
                .unwrap_or_default()
        );
    }
    let defining_ok = checks[0].pass && checks[1].pass;

    let mut config = config_echo(&args.common);
    config.xi = Some(format_scalar(&xi));
    config.family = Some(args.family.display().to_string());
    let report = Report {
        command: "verify".to_owned(),
        config,
        span: Some(SpanInfo {
            dim: span.len(),
            draws: span.draws(),
            seed: span.seed(),
        }),
        levels: Vec::new(),
        checks,
    };
    write_report(&args.common.out, &report)?;
    if !defining_ok {
        return Err(CliError::Verification(
            "family violates the zero-product bracket condition; see report".into(),
        ));
    }
    Ok(())
}

fn cmd_decompose(args: DecomposeArgs) -> Result<(), CliError> {
    let alg = load_algebra(&args.common.algebra)?;
    prepare_out(&args.common.out)?;
    let family = load_family(&args.family, &alg)?;
    let pairs = verification_pairs(&alg, args.common.samples.max(1), args.common.seed);
    let decomposition = decompose_family(&alg, &family, &pairs)?;
    json::write_json(
        &args.common.out.join("decomposition.json"),
        &decomposition_to_dto(&decomposition),
    )?;
    // The decomposition must rebuild the family exactly.
    let rebuilt = decomposition.reconstruct(&alg)?;
    let exact = rebuilt == family;
    let checks = vec![CheckRow {
        name: "reconstruction_exact".to_owned(),
        level: None,
        pass: exact,
        witness: None,
    }];
    let mut config = config_echo(&args.common);
    config.family = Some(args.family.display().to_string());
    let report = Report {
        command: "decompose".to_owned(),
        config,
        span: None,
        levels: Vec::new(),
        checks,
    };
    write_report(&args.common.out, &report)?;
    if !exact {
        return Err(CliError::Verification(
            "decomposition does not rebuild the family exactly".into(),
        ));
    }
    println!(
        "decomposition: {} blocks, {} verified pairs",
        decomposition.blocks.len(),
        decomposition.verified_pairs
    );
    Ok(())
}

fn cmd_transfer(args: TransferArgs) -> Result<(), CliError> {
    let alg = load_algebra(&args.common.algebra)?;
    let xi = parse_xi(&args.xi)?;
    prepare_out(&args.common.out)?;
    let family = load_family(&args.family, &alg)?;
    let ordering: DeltaOrdering = args.ordering.into();
    let seq = transfer_to_delta(&family, ordering);
    json::write_json(
        &args.common.out.join("deltas.json"),
        &deltas_to_dto(&seq, alg.name()),
    )?;
    let pairs = verification_pairs(&alg, args.common.samples, args.common.seed);
    let verified = seq
        .verify_on_pairs(&alg, &xi, &pairs)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let checks = vec![CheckRow {
        name: "deltas_satisfy_level_one_rule".to_owned(),
        level: None,
        pass: verified.is_ok(),
        witness: verified
            .as_ref()
            .err()
            .map(|(idx, v)| format!("delta {idx}: {}", witness_string(&alg, v))),
    }];
    let pass = verified.is_ok();
    let mut config = config_echo(&args.common);
    config.xi = Some(format_scalar(&xi));
    config.family = Some(args.family.display().to_string());
    config.ordering = Some(
        match ordering {
            DeltaOrdering::A => "a",
            DeltaOrdering::B => "b",
        }
        .to_owned(),
    );
    let report = Report {
        command: "transfer".to_owned(),
        config,
        span: None,
        levels: Vec::new(),
        checks,
    };
    write_report(&args.common.out, &report)?;
    if !pass {
        return Err(CliError::Verification(
            "a transferred delta violates the level-one rule on sampled pairs".into(),
        ));
    }
    Ok(())
}

fn cmd_rebuild(args: RebuildArgs) -> Result<(), CliError> {
    let alg = load_algebra(&args.common.algebra)?;
    prepare_out(&args.common.out)?;
    let dto: DeltaSequenceDto = json::read_json(&args.deltas)?;
    let seq = deltas_from_dto(&dto, &alg)?;
    let family = rebuild_from_delta(&seq).map_err(|e| CliError::Config(e.to_string()))?;
    json::write_json(
        &args.common.out.join("family.json"),
        &family_to_dto(&family, alg.name()),
    )?;
    let mut config = config_echo(&args.common);
    config.family = Some(args.deltas.display().to_string());
    config.ordering = Some(dto.ordering.clone());
    let report = Report {
        command: "rebuild".to_owned(),
        config,
        span: None,
        levels: Vec::new(),
        checks: Vec::new(),
    };
    write_report(&args.common.out, &report)?;
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), CliError> {
    let alg = load_algebra(&args.common.algebra)?;
    let xi = parse_xi(&args.xi)?;
    prepare_out(&args.common.out)?;
    let family = load_family(&args.family, &alg)?;
    let pairs = verification_pairs(&alg, args.common.samples.max(1), args.common.seed);
    let classification = classify_xi_family(&alg, &family, &xi, &pairs)?;
    json::write_json(
        &args.common.out.join("classification.json"),
        &classification_to_dto(&classification, alg.name()),
    )?;
    let verdict_name = match classification.verdict {
        XiVerdict::HigherDerivation => "HigherDerivation",
        XiVerdict::GeneralizedHigherDerivation => "GeneralizedHigherDerivation",
        XiVerdict::NotClassified => "NotClassified",
    };
    println!("verdict: {verdict_name}");
    let checks = vec![CheckRow {
        name: "classification".to_owned(),
        level: None,
        pass: classification.verdict != XiVerdict::NotClassified,
        witness: classification
            .witness
            .as_ref()
            .map(|v| witness_string(&alg, v))
            .or(classification.note.clone()),
    }];
    let pass = checks[0].pass;
    let mut config = config_echo(&args.common);
    config.xi = Some(format_scalar(&xi));
    config.family = Some(args.family.display().to_string());
    let report = Report {
        command: "classify".to_owned(),
        config,
        span: None,
        levels: Vec::new(),
        checks,
    };
    write_report(&args.common.out, &report)?;
    if !pass {
        return Err(CliError::Verification(
            "family could not be classified; see report".into(),
        ));
    }
    Ok(())
}
