//! Batch front end: type enumeration, structure-constant tables, polynomial
//! fits, range verification, and the edge-replacement property suite.
//!
//! Every subcommand prints one artifact to stdout (text, JSON, or CSV; JSON
//! carries `schema_version`) and reserves stderr for diagnostics.  The exit
//! status is 0 exactly when every assertion of the invoked suite passed.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use wreath_hecke::cosets::{minimal_closed_representative, minimal_representative};
use wreath_hecke::evolution::{
    check_weight_inequality, end_points, evolution_from_pair, support_inclusions,
};
use wreath_hecke::hecke::{Engine, StructureTable};
use wreath_hecke::polyfit::{
    fit_structure_polynomial, render_stability_table, verify_stability, FitResult,
    StabilityReport, Verdict,
};
use wreath_hecke::type_graph::{enumerate_modified_types, enumerate_types_up_to_weight};
use wreath_hecke::{configure_workers, Error, Permutation, WreathContext, SCHEMA_VERSION};

const EVOLVE_DEFAULT_PAIRS: usize = 1000;
const VERIFY_EVOLUTION_PAIRS: usize = 120;

#[derive(Parser)]
#[command(
    name = "wreath-hecke",
    version,
    about = "Double-coset algebras of wreath products inside symmetric groups"
)]
struct Cli {
    /// Worker threads for parallel scans (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List modified types with vertex count, weight, and component partition.
    Types(TypesArgs),
    /// Compute the structure-constant table at one level.
    Table(TableArgs),
    /// Fit structure constants as exact polynomials in the level.
    Fit(FitArgs),
    /// Verify filtration, stability, and fits over a level range, plus the
    /// evolution property suite.
    Verify(VerifyArgs),
    /// Run the edge-replacement property suite on random pairs.
    Evolve(EvolveArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineChoice {
    Oracle,
    Centralizer,
    Both,
}

impl EngineChoice {
    fn engines(self) -> Vec<Engine> {
        match self {
            EngineChoice::Oracle => vec![Engine::Oracle],
            EngineChoice::Centralizer => vec![Engine::Centralizer],
            EngineChoice::Both => vec![Engine::Oracle, Engine::Centralizer],
        }
    }

    fn single(self) -> anyhow::Result<Engine> {
        match self {
            EngineChoice::Oracle => Ok(Engine::Oracle),
            EngineChoice::Centralizer => Ok(Engine::Centralizer),
            EngineChoice::Both => bail!("this command fits with one engine; pick oracle or centralizer"),
        }
    }
}

#[derive(Args)]
struct TypesArgs {
    /// Block size k ≥ 2.
    #[arg(long)]
    k: usize,
    /// List every type with at most this many vertices.
    #[arg(long, conflicts_with = "max_weight", required_unless_present = "max_weight")]
    max_vertices: Option<usize>,
    /// List every type of weight at most this bound.
    #[arg(long)]
    max_weight: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct TableArgs {
    /// Block size k ≥ 2.
    #[arg(long)]
    k: usize,
    /// Level: the table lives at S_{kn} over S_k ≀ S_n.
    #[arg(long)]
    n: usize,
    /// Engine selection; `both` cross-checks every entry.
    #[arg(long, value_enum, default_value_t = EngineChoice::Both)]
    engine: EngineChoice,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Reuse and populate rendered artifacts under this directory.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Block size k ≥ 2.
    #[arg(long)]
    k: usize,
    /// Fit all pairs (M, N) of weight at most this bound.
    #[arg(long)]
    max_weight: usize,
    /// Vertex cap for the output types L (default: 4 · max-weight).
    #[arg(long)]
    max_vertices: Option<usize>,
    #[arg(long, value_enum, default_value_t = EngineChoice::Centralizer)]
    engine: EngineChoice,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    /// Block size k ≥ 2.
    #[arg(long)]
    k: usize,
    /// Weight bound for the pair types (M, N).
    #[arg(long)]
    max_weight: usize,
    /// Inclusive level range `A:B` to sample.
    #[arg(long, value_parser = parse_level_range)]
    n_range: (usize, usize),
    #[arg(long, value_enum, default_value_t = EngineChoice::Centralizer)]
    engine: EngineChoice,
    /// Seed for the randomized evolution suite.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct EvolveArgs {
    /// Block size k ≥ 2.
    #[arg(long)]
    k: usize,
    /// Level: pairs are drawn from S_{kn}.
    #[arg(long)]
    n: usize,
    /// Seed for drawing the random pairs.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn parse_level_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected A:B, got {s:?}"))?;
    let lo: usize = a.trim().parse().map_err(|e| format!("bad lower level: {e}"))?;
    let hi: usize = b.trim().parse().map_err(|e| format!("bad upper level: {e}"))?;
    if lo < 1 || lo > hi {
        return Err(format!("invalid level range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_workers(cli.workers) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::Types(args) => cmd_types(args),
        Command::Table(args) => cmd_table(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Evolve(args) => cmd_evolve(args),
    };
    match outcome {
        Ok(passed) => exit_for(passed),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// 0 exactly when every assertion of the invoked suite passed.
fn exit_for(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn partition_label(sizes: &[usize]) -> String {
    if sizes.is_empty() {
        "-".into()
    } else {
        sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("+")
    }
}

fn cmd_types(args: TypesArgs) -> anyhow::Result<bool> {
    let types = match (args.max_vertices, args.max_weight) {
        (Some(v), None) => enumerate_modified_types(args.k, v)?,
        (None, Some(w)) => enumerate_types_up_to_weight(args.k, w)?,
        _ => unreachable!("clap enforces exactly one bound"),
    };
    match args.format {
        Format::Text => {
            let width = types.iter().map(|t| t.key().len()).max().unwrap_or(0);
            for ty in &types {
                println!(
                    "{:width$}  vertices={} weight={} partition={}",
                    ty.key(),
                    ty.vertex_count(),
                    ty.weight(),
                    partition_label(&ty.component_sizes()),
                );
            }
        }
        Format::Csv => {
            println!("key,vertices,components,weight,partition");
            for ty in &types {
                println!(
                    "{},{},{},{},{}",
                    ty.key(),
                    ty.vertex_count(),
                    ty.component_count(),
                    ty.weight(),
                    partition_label(&ty.component_sizes()),
                );
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                key: String,
                vertices: usize,
                components: usize,
                weight: usize,
                partition: Vec<usize>,
            }
            #[derive(Serialize)]
            struct Listing {
                schema_version: u32,
                k: usize,
                count: usize,
                types: Vec<Row>,
            }
            let rows: Vec<Row> = types
                .iter()
                .map(|ty| Row {
                    key: ty.key(),
                    vertices: ty.vertex_count(),
                    components: ty.component_count(),
                    weight: ty.weight(),
                    partition: ty.component_sizes(),
                })
                .collect();
            let listing =
                Listing { schema_version: SCHEMA_VERSION, k: args.k, count: rows.len(), types: rows };
            println!("{}", serde_json::to_string_pretty(&listing)?);
        }
    }
    Ok(true)
}

fn cmd_table(args: TableArgs) -> anyhow::Result<bool> {
    let engines = args.engine.engines();
    let tag = match args.engine {
        EngineChoice::Oracle => "oracle",
        EngineChoice::Centralizer => "centralizer",
        EngineChoice::Both => "both",
    };
    let ext = match args.format {
        Format::Text => "txt",
        Format::Json => "json",
        Format::Csv => "csv",
    };
    let cache_path = args.cache_dir.as_ref().map(|dir| {
        dir.join(format!("table-k{}-n{}-{tag}-v{SCHEMA_VERSION}.{ext}", args.k, args.n))
    });
    if let Some(path) = &cache_path {
        if path.exists() {
            let artifact = fs::read_to_string(path)
                .with_context(|| format!("reading cached table {}", path.display()))?;
            print!("{artifact}");
            return Ok(true);
        }
    }

    let ctx = WreathContext::new(args.k, args.n)?;
    let table = StructureTable::compute(&ctx, &engines)?;
    let artifact = match args.format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let mut s = table.to_json()?;
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = format!(
                "# structure constants at k = {}, n = {} ({tag})\n",
                args.k, args.n
            );
            for row in table.rows() {
                s.push_str(&format!(
                    "{} * {} -> {} = {}  [{}]\n",
                    row.m_key, row.n_key, row.l_key, row.value, row.engine
                ));
            }
            s
        }
    };
    if let Some(path) = &cache_path {
        fs::create_dir_all(path.parent().expect("cache path has a directory"))?;
        fs::write(path, &artifact)
            .with_context(|| format!("writing cached table {}", path.display()))?;
    }
    print!("{artifact}");
    Ok(true)
}

/// One fitted triple, or the reason the engines could not reach it.
enum FitRow {
    Done(FitResult),
    Skipped { m_key: String, n_key: String, l_key: String, reason: String },
}

fn cmd_fit(args: FitArgs) -> anyhow::Result<bool> {
    let engine = args.engine.single()?;
    let pair_types = enumerate_types_up_to_weight(args.k, args.max_weight)?;
    let cap = args.max_vertices.unwrap_or(4 * args.max_weight);
    let out_types = enumerate_modified_types(args.k, cap)?;

    let mut rows = Vec::new();
    let mut failed = 0usize;
    for m in &pair_types {
        for n_ty in &pair_types {
            for l in &out_types {
                match fit_structure_polynomial(m, n_ty, l, engine) {
                    Ok(fit) => {
                        if !fit.validated {
                            failed += 1;
                        }
                        rows.push(FitRow::Done(fit));
                    }
                    Err(Error::SizeLimit(reason)) => rows.push(FitRow::Skipped {
                        m_key: m.key(),
                        n_key: n_ty.key(),
                        l_key: l.key(),
                        reason,
                    }),
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }

    match args.format {
        Format::Text => {
            for row in &rows {
                match row {
                    FitRow::Done(fit) => {
                        let holdouts = fit
                            .holdouts
                            .iter()
                            .map(|(n, _)| n.to_string())
                            .collect::<Vec<_>>()
                            .join(",");
                        println!(
                            "M={} N={} L={}  c(n) = {}  [{}]  {} at n={holdouts}",
                            fit.m_key,
                            fit.n_key,
                            fit.l_key,
                            fit.polynomial,
                            fit.polynomial.falling_factorial_string(),
                            if fit.validated { "validated" } else { "MISMATCH" },
                        );
                    }
                    FitRow::Skipped { m_key, n_key, l_key, reason } => {
                        println!("M={m_key} N={n_key} L={l_key}  skipped: {reason}");
                    }
                }
            }
            let done = rows.iter().filter(|r| matches!(r, FitRow::Done(_))).count();
            println!(
                "fits: {} validated, {failed} failed, {} skipped",
                done - failed,
                rows.len() - done,
            );
        }
        Format::Csv => {
            println!("k,M_key,N_key,L_key,degree_bound,polynomial,falling_factorial,status");
            for row in &rows {
                match row {
                    FitRow::Done(fit) => println!(
                        "{},{},{},{},{},{},{},{}",
                        args.k,
                        fit.m_key,
                        fit.n_key,
                        fit.l_key,
                        fit.degree_bound,
                        fit.polynomial,
                        fit.polynomial.falling_factorial_string(),
                        if fit.validated { "validated" } else { "mismatch" },
                    ),
                    FitRow::Skipped { m_key, n_key, l_key, .. } => println!(
                        "{},{m_key},{n_key},{l_key},,,,skipped",
                        args.k
                    ),
                }
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Skip<'a> {
                m_key: &'a str,
                n_key: &'a str,
                l_key: &'a str,
                reason: &'a str,
            }
            #[derive(Serialize)]
            struct Document<'a> {
                schema_version: u32,
                k: usize,
                engine: Engine,
                fits: Vec<&'a FitResult>,
                skipped: Vec<Skip<'a>>,
            }
            let mut fits = Vec::new();
            let mut skipped = Vec::new();
            for row in &rows {
                match row {
                    FitRow::Done(fit) => fits.push(fit),
                    FitRow::Skipped { m_key, n_key, l_key, reason } => {
                        skipped.push(Skip { m_key, n_key, l_key, reason })
                    }
                }
            }
            let doc =
                Document { schema_version: SCHEMA_VERSION, k: args.k, engine, fits, skipped };
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
    }
    Ok(failed == 0)
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<bool> {
    let engine = args.engine.single()?;
    let (lo, hi) = args.n_range;
    let reports = verify_stability(args.k, args.max_weight, lo..=hi, engine)?;
    let stability_ok = reports.iter().all(|r| r.ok);

    let mut evolution = Vec::new();
    for n in lo..=hi {
        let ctx = WreathContext::new(args.k, n)?;
        evolution.push(run_evolution_suite(
            &ctx,
            VERIFY_EVOLUTION_PAIRS,
            args.seed.wrapping_add(n as u64),
        )?);
    }
    let evolution_ok = evolution.iter().all(|s| s.failures.is_empty());
    let ok = stability_ok && evolution_ok;

    match args.format {
        Format::Text => {
            print!("{}", render_stability_table(&reports));
            let census = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
            println!(
                "triples: {}  vanishes: {}  constant: {}  polynomial: {}",
                reports.len(),
                census(Verdict::Vanishes),
                census(Verdict::Constant),
                census(Verdict::Polynomial),
            );
            for summary in &evolution {
                println!(
                    "evolution at n = {}: {} pairs, {} aggregate-equality cases, {}",
                    summary.n,
                    summary.pairs,
                    summary.equality_cases,
                    if summary.failures.is_empty() { "ok" } else { "FAILED" },
                );
                for f in &summary.failures {
                    println!("  {f}");
                }
            }
            println!("verify: {}", if ok { "ok" } else { "FAILED" });
        }
        Format::Csv => {
            println!("k,M_key,N_key,L_key,weight_M,weight_N,weight_L,verdict,ok");
            for r in &reports {
                println!(
                    "{},{},{},{},{},{},{},{},{}",
                    r.k,
                    r.m_key,
                    r.n_key,
                    r.l_key,
                    r.weight_m,
                    r.weight_n,
                    r.weight_l,
                    format!("{:?}", r.verdict).to_lowercase(),
                    r.ok,
                );
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Document<'a> {
                schema_version: u32,
                k: usize,
                max_weight: usize,
                n_range: [usize; 2],
                engine: Engine,
                ok: bool,
                reports: &'a [StabilityReport],
                evolution: &'a [EvolveSummary],
            }
            let doc = Document {
                schema_version: SCHEMA_VERSION,
                k: args.k,
                max_weight: args.max_weight,
                n_range: [lo, hi],
                engine,
                ok,
                reports: &reports,
                evolution: &evolution,
            };
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
    }
    Ok(ok)
}

fn cmd_evolve(args: EvolveArgs) -> anyhow::Result<bool> {
    let ctx = WreathContext::new(args.k, args.n)?;
    let summary = run_evolution_suite(&ctx, EVOLVE_DEFAULT_PAIRS, args.seed)?;
    let ok = summary.failures.is_empty();
    match args.format {
        Format::Text => {
            println!(
                "evolution suite: k = {}, n = {}, pairs = {}, seed = {}",
                summary.k, summary.n, summary.pairs, summary.seed
            );
            println!(
                "aggregate-equality cases: {} (merge and support inclusions verified on each)",
                summary.equality_cases
            );
            if summary.resampled_identities > 0 {
                println!("resampled {} identity first factors", summary.resampled_identities);
            }
            for f in &summary.failures {
                println!("{f}");
            }
            println!("evolve: {}", if ok { "ok" } else { "FAILED" });
        }
        Format::Csv => {
            println!("k,n,pairs,seed,equality_cases,failures");
            println!(
                "{},{},{},{},{},{}",
                summary.k,
                summary.n,
                summary.pairs,
                summary.seed,
                summary.equality_cases,
                summary.failures.len(),
            );
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Document<'a> {
                schema_version: u32,
                #[serde(flatten)]
                summary: &'a EvolveSummary,
            }
            let doc = Document { schema_version: SCHEMA_VERSION, summary: &summary };
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
    }
    Ok(ok)
}

/// Outcome of one randomized edge-replacement sweep at a fixed level.
#[derive(Serialize)]
struct EvolveSummary {
    k: usize,
    n: usize,
    pairs: usize,
    seed: u64,
    /// Pairs whose chain met the aggregate weight bound with equality; the
    /// merge property and the support inclusions are asserted on each.
    equality_cases: usize,
    /// Draws whose first factor normalized to the identity (no replacement
    /// pairs to build); redrawn, not counted.
    resampled_identities: usize,
    failures: Vec<String>,
}

fn random_permutation(degree: usize, rng: &mut ChaCha8Rng) -> anyhow::Result<Permutation> {
    let mut images: Vec<usize> = (1..=degree).collect();
    images.shuffle(rng);
    Ok(Permutation::from_images(images)?)
}

/// Draws random pairs, normalizes the first factor to minimal closed form
/// and the product to minimal form, then checks: replacement pairs span
/// equal end-point sets, the stepwise and aggregate weight bounds hold, and
/// under aggregate equality the initial components merge and the support
/// inclusions of the pair hold.
fn run_evolution_suite(
    ctx: &WreathContext,
    pairs: usize,
    seed: u64,
) -> anyhow::Result<EvolveSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = EvolveSummary {
        k: ctx.k(),
        n: ctx.n(),
        pairs,
        seed,
        equality_cases: 0,
        resampled_identities: 0,
        failures: Vec::new(),
    };
    for index in 0..pairs {
        let g1 = loop {
            let raw = random_permutation(ctx.degree(), &mut rng)?;
            let candidate = minimal_closed_representative(ctx, &raw)?.minimal;
            if !candidate.is_identity() {
                break candidate;
            }
            summary.resampled_identities += 1;
        };
        let raw2 = random_permutation(ctx.degree(), &mut rng)?;
        let product = minimal_representative(ctx, &g1.compose(&raw2))?.minimal;
        let g2 = g1.inverse().compose(&product);

        let mut fail = |what: &str| summary.failures.push(format!("pair {index}: {what}"));
        let chain = match evolution_from_pair(ctx, &g1, &g2) {
            Ok(chain) => chain,
            Err(e) => {
                fail(&format!("chain construction failed: {e}"));
                continue;
            }
        };
        if chain
            .pairs()
            .iter()
            .any(|(removed, inserted)| end_points(removed) != end_points(inserted))
        {
            fail("replacement pair spans unequal end-point sets");
        }
        let report = check_weight_inequality(&chain);
        if !report.holds {
            fail("weight bound violated");
        }
        if report.aggregate_equality {
            summary.equality_cases += 1;
            if !report.components_merge {
                fail("aggregate equality without component merging");
            }
            if !support_inclusions(ctx, &g1, &g2)?.all() {
                fail("aggregate equality without the support inclusions");
            }
        }
    }
    Ok(summary)
}
