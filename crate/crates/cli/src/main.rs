use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pasldpc::constellation::CodeRate;
use pasldpc::lifting::{girth, lift, load_code};
use pasldpc::optimizer::{DeConfig, DifferentialEvolution, FitnessMode, GenerationLog};
use pasldpc::protograph::{threshold_report, BaseMatrix, OperatingContext, ThresholdSearch};
use pasldpc::sim::{
    gap_at_target, read_csv, run_fer, write_csv, write_json, SimConfig, SimReport, SCHEMA_VERSION,
};
use pasldpc::surrogate::{fit_at_operating_point, ordering_signature};
use pasldpc::{parse_grid, Error};

#[derive(Parser)]
#[command(
    name = "pasldpc",
    version,
    about = "PAS with robust protograph LDPC codes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Modcod {
    /// Code rate as num/den.
    #[arg(long = "c", alias = "rate", default_value = "13/16")]
    rate: CodeRate,
    /// Bits per ASK symbol.
    #[arg(long, default_value_t = 4)]
    m: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Shaped and uniform required SNR over a grid of spectral efficiencies (CSV).
    Rates {
        #[command(flatten)]
        modcod: Modcod,
        #[arg(long, default_value = "0.7:2.7:0.1")]
        rgrid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Surrogate channel parameters (CSV, one row per R).
    Surrogate {
        #[command(flatten)]
        modcod: Modcod,
        #[arg(long = "R", alias = "rgrid")]
        r: String,
        /// SNR in dB; defaults to the SNR the BMD rate requires.
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// PEXIT threshold of a base matrix (JSON).
    Threshold {
        #[arg(long)]
        matrix: PathBuf,
        /// Spectral efficiency, or a comma separated list.
        #[arg(long = "R")]
        r: String,
        #[command(flatten)]
        modcod: Modcod,
        #[arg(long, default_value_t = 0.01)]
        resolution: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Differential evolution over base matrices.
    Optimize(OptimizeArgs),
    /// Two-stage lifting of a base matrix to an alist code.
    Lift {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        f: usize,
        #[arg(long = "Q")]
        q: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the binary edge list here.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Monte Carlo FER sweep of the PAS chain (CSV).
    Simulate(SimulateArgs),
    /// SNR gap to capacity at a target FER from simulation CSV.
    Gap {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        target: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long = "rate", alias = "c", default_value = "13/16")]
    rate: CodeRate,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long = "D", default_value_t = 4)]
    d: usize,
    #[arg(long, default_value = "0.7,1.1,2.1,2.7")]
    pset: String,
    #[arg(long, value_enum, default_value_t = Mode::Robust)]
    mode: Mode,
    #[arg(long, default_value_t = 200)]
    generations: usize,
    #[arg(long, default_value_t = 30)]
    np: usize,
    #[arg(long = "F", default_value_t = 0.8)]
    scale_f: f64,
    #[arg(long = "CR", default_value_t = 0.88)]
    cr: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Per-generation CSV log (default: stdout).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Robust,
    Single,
}

#[derive(Args)]
struct SimulateArgs {
    /// Flat key-value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    code: Option<PathBuf>,
    #[arg(long = "R")]
    r: Option<String>,
    #[arg(long)]
    snr: Option<String>,
    #[arg(long = "c", alias = "rate")]
    rate: Option<CodeRate>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    max_frames: Option<u64>,
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    target_fer: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Versioned JSON report with config, results and gaps.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> pasldpc::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_list(text: &str) -> pasldpc::Result<Vec<f64>> {
    if text.contains(':') {
        return parse_grid(text);
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad number {t:?}")))
        })
        .collect()
}

fn write_csv_rows<T: Serialize>(rows: &[T], out: impl Write) -> pasldpc::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json_value<T: Serialize>(value: &T, mut out: impl Write) -> pasldpc::Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn read_matrix(path: &Path) -> pasldpc::Result<BaseMatrix> {
    std::fs::read_to_string(path)?.parse()
}

#[derive(Serialize)]
struct SurrogateRow {
    #[serde(rename = "R")]
    se: f64,
    snr_db: f64,
    sigma1: f64,
    sigma2: f64,
    sigma3: f64,
    sigma4: f64,
    ordering: String,
}

#[derive(Serialize)]
struct LiftSummary {
    rows: usize,
    cols: usize,
    edges: usize,
    girth: usize,
    base_id: String,
}

#[derive(Serialize)]
struct GapRow {
    #[serde(rename = "R")]
    se: f64,
    gap_db: f64,
}

fn run(cli: Cli) -> pasldpc::Result<()> {
    match cli.command {
        Command::Rates { modcod, rgrid, out } => {
            let rows = pasldpc::rates::curve_rows(modcod.rate, modcod.m, &parse_grid(&rgrid)?)?;
            write_csv_rows(&rows, output(out.as_deref())?)
        }
        Command::Surrogate {
            modcod,
            r,
            snr,
            out,
        } => {
            let mut rows = Vec::new();
            for se in parse_list(&r)? {
                let snr_db = match snr {
                    Some(s) => s,
                    None => OperatingContext::new(se, modcod.rate, modcod.m)?.required_snr_db()?,
                };
                let set = fit_at_operating_point(se, modcod.rate, modcod.m, snr_db)?;
                let sig = |i: usize| set.sigmas.get(i).copied().unwrap_or(f64::NAN);
                let ordering = ordering_signature(&set)
                    .iter()
                    .map(|l| l.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                rows.push(SurrogateRow {
                    se,
                    snr_db,
                    sigma1: sig(0),
                    sigma2: sig(1),
                    sigma3: sig(2),
                    sigma4: sig(3),
                    ordering,
                });
            }
            write_csv_rows(&rows, output(out.as_deref())?)
        }
        Command::Threshold {
            matrix,
            r,
            modcod,
            resolution,
            out,
        } => {
            let base = read_matrix(&matrix)?;
            let search = ThresholdSearch {
                resolution_db: resolution,
                ..ThresholdSearch::default()
            };
            let reports = parse_list(&r)?
                .into_iter()
                .map(|se| {
                    threshold_report(
                        &base,
                        &OperatingContext::new(se, modcod.rate, modcod.m)?,
                        &search,
                    )
                })
                .collect::<pasldpc::Result<Vec<_>>>()?;
            match &reports[..] {
                [one] => write_json_value(one, output(out.as_deref())?),
                many => write_json_value(&many, output(out.as_deref())?),
            }
        }
        Command::Optimize(a) => {
            let mut config = DeConfig::new(a.rate, a.m, a.d, parse_list(&a.pset)?);
            config.mode = match a.mode {
                Mode::Robust => FitnessMode::Robust,
                Mode::Single => FitnessMode::SingleRate,
            };
            config.generations = a.generations;
            config.population = a.np;
            config.scale_f = a.scale_f;
            config.crossover_cr = a.cr;
            config.seed = a.seed;
            let de = DifferentialEvolution::new(config)?;
            let mut log = csv::Writer::from_writer(output(a.log.as_deref())?);
            let mut log_error = None;
            let outcome = de.run_with(|entry: &GenerationLog| {
                if let Err(e) = log
                    .serialize(entry)
                    .and_then(|_| log.flush().map_err(csv::Error::from))
                {
                    log_error.get_or_insert(e);
                }
            })?;
            if let Some(e) = log_error {
                return Err(Error::Io(e.to_string()));
            }
            std::fs::write(&a.out, outcome.best.matrix.to_string())?;
            Ok(())
        }
        Command::Lift {
            input,
            f,
            q,
            seed,
            out,
            edges,
        } => {
            let base = read_matrix(&input)?;
            let h = lift(&base, f, q, seed)?;
            h.save_alist(&out)?;
            if let Some(path) = edges {
                h.write_edge_list(BufWriter::new(File::create(path)?))?;
            }
            let summary = LiftSummary {
                rows: h.rows(),
                cols: h.cols(),
                edges: h.edge_count(),
                girth: girth(&h, 12),
                base_id: h
                    .origin
                    .as_ref()
                    .map(|o| o.base_id.clone())
                    .unwrap_or_default(),
            };
            write_json_value(&summary, output(None)?)
        }
        Command::Simulate(a) => {
            let mut config = match &a.config {
                Some(p) => SimConfig::from_toml_str(&std::fs::read_to_string(p)?)?,
                None => SimConfig::default(),
            };
            config.apply_env()?;
            if let Some(v) = a.code {
                config.code = v;
            }
            if let Some(v) = &a.r {
                config.rates = parse_list(v)?;
            }
            if let Some(v) = &a.snr {
                config.set_snr(v)?;
            }
            config.code_rate = a.rate.unwrap_or(config.code_rate);
            config.m = a.m.unwrap_or(config.m);
            config.max_frames = a.max_frames.unwrap_or(config.max_frames);
            config.min_errors = a.min_errors.unwrap_or(config.min_errors);
            config.max_iter = a.max_iter.unwrap_or(config.max_iter);
            config.target_fer = a.target_fer.unwrap_or(config.target_fer);
            config.master_seed = a.seed.unwrap_or(config.master_seed);
            config.workers = a.workers.unwrap_or(config.workers);
            config.record_timing |= a.timing;
            if config.code.as_os_str().is_empty() {
                return Err(Error::InvalidConfig(
                    "no code given (--code or `code` in the config file)".into(),
                ));
            }
            // fail on a bad code before any simulation starts
            load_code(&config.code)?;
            let results = run_fer(&config)?;
            write_csv(&results, output(a.out.as_deref())?)?;
            if let Some(path) = a.json {
                let gaps = gap_at_target(&results, config.target_fer).unwrap_or_default();
                let report = SimReport {
                    schema_version: SCHEMA_VERSION,
                    config,
                    results,
                    gaps,
                };
                write_json(&report, BufWriter::new(File::create(path)?))?;
            }
            Ok(())
        }
        Command::Gap {
            results,
            target,
            out,
        } => {
            let rows = read_csv(File::open(results)?)?;
            let gaps: Vec<GapRow> = gap_at_target(&rows, target)?
                .into_iter()
                .map(|(se, gap_db)| GapRow { se, gap_db })
                .collect();
            write_csv_rows(&gaps, output(out.as_deref())?)
        }
    }
}

/// 2 for bad input or configuration, 3 for numerical failures.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NumericFailure(_)
        | Error::DegenerateChannel { .. }
        | Error::DivergedEnsemble { .. }
        | Error::InfeasibleConstraints
        | Error::InsufficientSweep { .. }
        | Error::EncoderConstruction(_)
        | Error::CompositionMismatch => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
