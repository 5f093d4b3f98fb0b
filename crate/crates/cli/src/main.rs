//! Batch command-line surface over the scenery reconstruction toolkit.
//!
//! Exit codes are a stable contract: 0 = success / Reconstructive,
//! 10 = NotReconstructive (or a verdict-driven refusal / singular system),
//! 20 = Unknown, 1 = error.

use clap::{Parser, Subcommand, ValueEnum};
use scenerylab_core::error::Error;
use scenerylab_core::formats;
use scenerylab_core::group::is_prime;
use scenerylab_core::oracle;
use scenerylab_core::scenery::{build_pair_cycle, build_pair_product, build_pair_stay_put, build_pair_torus};
use scenerylab_core::sim;
use scenerylab_core::spectral;
use scenerylab_core::walk::{self, StepDistribution, Verdict};
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_NOT_RECONSTRUCTIVE: u8 = 10;
const EXIT_UNKNOWN: u8 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "scenerylab", version, about = "Reconstructibility analysis for random walks on finite abelian groups")]
struct Cli {
    /// Optional TOML config with defaults for precision-bits, max-order,
    /// threads and format. Flags win over the config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Working precision in bits for the numeric path.
    #[arg(long, global = true)]
    precision_bits: Option<u32>,

    /// Cap on the group order for oracle certification in `pair`.
    #[arg(long, global = true)]
    max_order: Option<u64>,

    /// Thread cap for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output path (stdout when omitted; `simulate` requires it).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format where both are meaningful (e.g. class reports).
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// Seed for simulation commands.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide reconstructibility of a walk; exit 0/10/20 by verdict.
    Analyze {
        #[arg(long)]
        walk: PathBuf,
        /// Include the exact cyclotomic rendering of the Fourier table.
        #[arg(long)]
        explain: bool,
    },
    /// Construct an indistinguishable scenery pair from a collision.
    Pair {
        #[arg(long)]
        walk: PathBuf,
        /// Proceed on Unknown verdicts that still carry an explicit collision.
        #[arg(long)]
        force: bool,
    },
    /// Simulate a labeled walk; writes packed observations plus a sidecar.
    Simulate {
        #[arg(long)]
        walk: PathBuf,
        #[arg(long)]
        scenery: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        /// Additionally write a CSV of positions.
        #[arg(long)]
        emit_positions: bool,
    },
    /// Recover a hidden scenery from its exact temporal multispectrum.
    Reconstruct {
        #[arg(long)]
        walk: PathBuf,
        #[arg(long)]
        scenery: PathBuf,
        /// Also write the exact lag table as CSV.
        #[arg(long)]
        emit_btable: Option<PathBuf>,
        /// Also write the sparse spatial multispectrum as JSON.
        #[arg(long)]
        emit_multispectrum: Option<PathBuf>,
    },
    /// Enumerate observation-equivalence classes of all sceneries.
    Classes {
        #[arg(long)]
        walk: PathBuf,
    },
    /// Bounded-support criterion for an integer multiset, with verification.
    BoundedN {
        /// Comma-separated integers, e.g. "1,2" or "-1,1".
        #[arg(long, allow_hyphen_values = true)]
        multiset: String,
    },
    /// Cross-validate the analysis verdict against the equivalence oracle.
    Verify {
        #[arg(long)]
        walk: PathBuf,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    precision_bits: Option<u32>,
    max_order: Option<u64>,
    threads: Option<usize>,
    format: Option<String>,
}

struct Settings {
    precision_bits: u32,
    max_order: u64,
    format: OutputFormat,
    seed: u64,
    out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> anyhow::Result<ConfigFile> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok(toml::from_str(&text)?)
        }
    }
}

fn emit(settings: &Settings, content: &str) -> anyhow::Result<()> {
    match &settings.out {
        Some(path) => std::fs::write(path, content)?,
        None => println!("{content}"),
    }
    Ok(())
}

fn emit_json(settings: &Settings, value: &Value) -> anyhow::Result<()> {
    emit(settings, &serde_json::to_string_pretty(value)?)
}

fn error_exit(err: &anyhow::Error) -> u8 {
    eprintln!("error: {err}");
    EXIT_ERROR
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => ExitCode::from(error_exit(&err)),
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let config = load_config(cli.config.as_deref())?;
    if let Some(threads) = cli.threads.or(config.threads) {
        // A second initialization in one process is fine to ignore.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let format = cli.format.or(match config.format.as_deref() {
        Some("csv") => Some(OutputFormat::Csv),
        Some("json") => Some(OutputFormat::Json),
        _ => None,
    });
    let settings = Settings {
        precision_bits: cli
            .precision_bits
            .or(config.precision_bits)
            .unwrap_or(walk::DEFAULT_PRECISION_BITS),
        max_order: cli.max_order.or(config.max_order).unwrap_or(256),
        format: format.unwrap_or(OutputFormat::Json),
        seed: cli.seed.unwrap_or(0),
        out: cli.out.clone(),
    };
    match cli.command {
        Command::Analyze { walk, explain } => cmd_analyze(&settings, &walk, explain),
        Command::Pair { walk, force } => cmd_pair(&settings, &walk, force),
        Command::Simulate { walk, scenery, steps, emit_positions } => {
            cmd_simulate(&settings, &walk, &scenery, steps, emit_positions)
        }
        Command::Reconstruct { walk, scenery, emit_btable, emit_multispectrum } => {
            cmd_reconstruct(&settings, &walk, &scenery, emit_btable, emit_multispectrum)
        }
        Command::Classes { walk } => cmd_classes(&settings, &walk),
        Command::BoundedN { multiset } => cmd_bounded_n(&settings, &multiset),
        Command::Verify { walk } => cmd_verify(&settings, &walk),
    }
}

fn load_walk_file(path: &Path) -> anyhow::Result<StepDistribution> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    Ok(formats::load_walk(&text)?)
}

fn load_scenery_file(path: &Path) -> anyhow::Result<scenerylab_core::scenery::Scenery> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    Ok(formats::load_scenery(&text)?)
}

fn verdict_exit(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Reconstructive => EXIT_OK,
        Verdict::NotReconstructive => EXIT_NOT_RECONSTRUCTIVE,
        Verdict::Unknown => EXIT_UNKNOWN,
    }
}

fn cmd_analyze(settings: &Settings, walk_path: &Path, explain: bool) -> anyhow::Result<u8> {
    let dist = load_walk_file(walk_path)?;
    let verdict = walk::analyze(&dist, settings.precision_bits)?;
    emit_json(settings, &formats::verdict_to_json(&verdict, dist.group(), explain))?;
    Ok(verdict_exit(verdict.verdict))
}

fn cmd_pair(settings: &Settings, walk_path: &Path, force: bool) -> anyhow::Result<u8> {
    let dist = load_walk_file(walk_path)?;
    let group = dist.group().clone();
    let verdict = walk::analyze(&dist, settings.precision_bits)?;
    let proceed = match verdict.verdict {
        Verdict::NotReconstructive => true,
        Verdict::Unknown => force && !verdict.collisions.is_empty(),
        Verdict::Reconstructive => false,
    };
    if !proceed {
        let message = match verdict.verdict {
            Verdict::Reconstructive => {
                "walk is reconstructive: no indistinguishable pair exists".to_string()
            }
            Verdict::Unknown => format!(
                "verdict unknown ({}); rerun with --force to build from a detected collision",
                verdict.reason.as_ref().map(|r| r.to_string()).unwrap_or_default()
            ),
            Verdict::NotReconstructive => unreachable!(),
        };
        emit_json(
            settings,
            &json!({
                "refused": true,
                "verdict": formats::verdict_to_json(&verdict, &group, false),
                "message": message,
            }),
        )?;
        return Ok(EXIT_NOT_RECONSTRUCTIVE);
    }
    let collision = &verdict.collisions[0];
    let x = group.element_at(collision.x);
    let y = group.element_at(collision.y);

    let factors = group.factors().to_vec();
    let all_large_prime = factors.iter().all(|&(n, _)| n > 5 && is_prime(n));
    let pair = if !all_large_prime {
        anyhow::bail!(
            "no pair construction for {group}: every factor must be a prime larger than 5"
        );
    } else if factors.len() == 1 && factors[0].1 == 1 {
        let p = factors[0].0;
        if collision.x == 0 || collision.y == 0 {
            build_pair_stay_put(&group)?
        } else {
            let v = collision
                .multiplier
                .map(Ok::<u64, Error>)
                .unwrap_or_else(|| {
                    Ok(scenerylab_core::group::inverse_mod(collision.x, p)? * collision.y % p)
                })?;
            build_pair_cycle(p, v as i64)?
        }
    } else if factors.len() == 1 {
        build_pair_torus(factors[0].0, factors[0].1, &x, &y)?
    } else {
        build_pair_product(&group, &x, &y)?
    };

    // Oracle certification, capped by group order.
    let oracle_outcome = if group.order() <= settings.max_order {
        let p1 = oracle::ObservationProcess::new(dist.clone(), pair.f1.clone())?;
        let p2 = oracle::ObservationProcess::new(dist.clone(), pair.f2.clone())?;
        let outcome = oracle::processes_equivalent(&p1, &p2, settings.precision_bits)?;
        if matches!(outcome, oracle::Equivalence::NotEquivalent(_)) {
            anyhow::bail!("constructed pair failed oracle certification (internal error)");
        }
        Some(outcome)
    } else {
        None
    };
    emit_json(settings, &formats::pair_to_json(&pair, oracle_outcome.as_ref()))?;
    Ok(EXIT_OK)
}

fn cmd_simulate(
    settings: &Settings,
    walk_path: &Path,
    scenery_path: &Path,
    steps: usize,
    emit_positions: bool,
) -> anyhow::Result<u8> {
    let dist = load_walk_file(walk_path)?;
    let scenery = load_scenery_file(scenery_path)?;
    let out = settings
        .out
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("simulate requires --out PREFIX"))?;
    let trace = sim::simulate(&dist, &scenery, steps, settings.seed)?;
    let prefix = out.to_string_lossy();
    std::fs::write(format!("{prefix}.bits"), formats::pack_observations(&trace))?;
    std::fs::write(
        format!("{prefix}.json"),
        serde_json::to_string_pretty(&formats::trace_sidecar_json(&trace, &dist, &scenery))?,
    )?;
    if emit_positions {
        std::fs::write(
            format!("{prefix}.positions.csv"),
            formats::positions_csv(&trace, dist.group()),
        )?;
    }
    Ok(EXIT_OK)
}

fn cmd_reconstruct(
    settings: &Settings,
    walk_path: &Path,
    scenery_path: &Path,
    emit_btable: Option<PathBuf>,
    emit_multispectrum: Option<PathBuf>,
) -> anyhow::Result<u8> {
    let dist = load_walk_file(walk_path)?;
    let hidden = load_scenery_file(scenery_path)?;
    match spectral::full_pipeline(&dist, &hidden) {
        Ok(recovered) => {
            let shift = recovered.is_shift_of(&hidden).map(|s| s.to_string());
            if shift.is_none() {
                anyhow::bail!("recovered scenery is not a shift of the input (internal error)");
            }
            if let Some(path) = emit_btable {
                let n = dist.group().order() as usize;
                let b = spectral::temporal_autocorrelation_exact(&dist, &hidden, 2 * n)?;
                std::fs::write(path, formats::temporal_autocorrelation_csv(&b))?;
            }
            if let Some(path) = emit_multispectrum {
                let a = spectral::spatial_multispectrum(&hidden)?;
                std::fs::write(
                    path,
                    serde_json::to_string_pretty(&formats::spatial_multispectrum_to_json(&a))?,
                )?;
            }
            emit_json(
                settings,
                &json!({
                    "recovered": formats::scenery_to_json(&recovered),
                    "hidden": formats::scenery_to_json(&hidden),
                    "shift": shift,
                    "matches_up_to_shift": true,
                }),
            )?;
            Ok(EXIT_OK)
        }
        Err(Error::Singular(detail)) => {
            emit_json(
                settings,
                &json!({
                    "error": "singular_system",
                    "collisions": detail,
                }),
            )?;
            Ok(EXIT_NOT_RECONSTRUCTIVE)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_classes(settings: &Settings, walk_path: &Path) -> anyhow::Result<u8> {
    let dist = load_walk_file(walk_path)?;
    let report = oracle::enumerate_classes(&dist, settings.precision_bits)?;
    match settings.format {
        OutputFormat::Json => {
            emit_json(settings, &formats::class_report_to_json(&report))?;
        }
        OutputFormat::Csv => {
            emit(settings, &formats::class_histogram_csv(&report))?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_bounded_n(settings: &Settings, multiset: &str) -> anyhow::Result<u8> {
    let entries: Vec<i64> = multiset
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<i64>()
                .map_err(|_| anyhow::anyhow!("bad multiset entry `{v}`"))
        })
        .collect::<anyhow::Result<_>>()?;
    let report = walk::bounded_support_bound(&entries)?;
    let mut verification = Vec::new();
    if !report.symmetric {
        let mut n = report.n_bound + 1;
        let mut checked = 0;
        while checked < 3 {
            if is_prime(n) {
                let dist = walk::embed_mod_n(&entries, n)?;
                let verdict = walk::analyze(&dist, settings.precision_bits)?;
                verification.push(json!({
                    "n": n,
                    "verdict": match verdict.verdict {
                        Verdict::Reconstructive => "reconstructive",
                        Verdict::NotReconstructive => "not_reconstructive",
                        Verdict::Unknown => "unknown",
                    },
                }));
                checked += 1;
            }
            n += 1;
        }
    }
    emit_json(
        settings,
        &json!({
            "report": formats::bounded_report_to_json(&report),
            "note": if report.symmetric {
                Some("symmetric, never reconstructive")
            } else {
                None
            },
            "verification": verification,
        }),
    )?;
    Ok(EXIT_OK)
}

fn cmd_verify(settings: &Settings, walk_path: &Path) -> anyhow::Result<u8> {
    let dist = load_walk_file(walk_path)?;
    let verdict = walk::analyze(&dist, settings.precision_bits)?;
    let report = oracle::verify_verdict(&verdict, &dist, settings.precision_bits)?;
    emit_json(settings, &formats::consistency_report_to_json(&report))?;
    Ok(EXIT_OK)
}
