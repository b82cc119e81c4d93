//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 verification failure (or I/O failure while
//! writing results), 2 usage/config error. All randomness flows from
//! `--seed`; identical invocations reproduce identical outputs apart from
//! timing columns.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use linescan::bench::{run_sweep, BenchConfig, SweepEntry};
use linescan::config::{
    parse_c_proxy, parse_config_file, parse_dims_list, parse_directions, parse_precision,
    parse_stages, ConfigError,
};
use linescan::pool::resolve_workers;
use linescan::report::{
    ladders_json, read_measurements, render_ladders, ReportFormat, ReportWriter,
};
use linescan::verify::{run_verify, Scope};

#[derive(Parser)]
#[command(
    name = "linescan",
    version,
    about = "Four-directional line-scan propagation: verification and benchmarking"
)]
struct Cli {
    /// Base seed for all generated inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (falls back to LINESCAN_WORKERS, then logical cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the seeded verification suites (exit 1 on any failure).
    Verify {
        /// all | oracle | grad | stages
        #[arg(long, default_value = "all")]
        scope: String,
    },
    /// Run a sweep described by a `key = value` config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a sweep described entirely by flags.
    Sweep {
        /// Semicolon-separated NxCxHxW quadruples.
        #[arg(long)]
        dims: String,
        /// Comma-separated stage list (S0..S5).
        #[arg(long)]
        stages: String,
        /// Comma-separated directions (T2B,B2T,L2R,R2L,ALL).
        #[arg(long, default_value = "L2R")]
        directions: String,
        /// f32 | f64
        #[arg(long, default_value = "f32")]
        precision: String,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 2)]
        warmup: usize,
        /// Segment length along the scan axis (0 = global).
        #[arg(long, default_value_t = 0)]
        kchunk: usize,
        /// Channels per worker tile for the tiled stages.
        #[arg(long = "c-slice", default_value_t = 4)]
        c_slice: usize,
        /// Proxy channel count; bare flag selects the default (8).
        #[arg(long = "c-proxy", num_args = 0..=1, default_missing_value = "default")]
        c_proxy: Option<String>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv | json (default: from --out extension, else csv).
        #[arg(long)]
        format: Option<String>,
    },
    /// Render the stage ladder from a saved sweep report.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// text | json
        #[arg(long, default_value = "text")]
        format: String,
    },
}

fn main() {
    std::process::exit(run());
}

fn usage_error(err: &ConfigError) -> i32 {
    eprintln!("error: {err}");
    2
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let workers = resolve_workers(cli.workers);

    match cli.cmd {
        Cmd::Verify { scope } => {
            let Some(scope) = Scope::parse_token(&scope) else {
                return usage_error(&ConfigError {
                    token: scope,
                    message: "unknown scope (expected all, oracle, grad or stages)".into(),
                });
            };
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            match run_verify(scope, cli.seed, workers, &mut lock) {
                Ok(true) => 0,
                Ok(false) => 1,
                Err(e) => {
                    eprintln!("error: {e}");
                    1
                }
            }
        }
        Cmd::Bench { config } => {
            let mut defaults = BenchConfig::with_defaults();
            defaults.seed = cli.seed;
            defaults.workers = workers;
            let cfg = match parse_config_file(&config, defaults) {
                Ok(cfg) => cfg,
                Err(e) => return usage_error(&e),
            };
            execute_sweep(cfg, None)
        }
        Cmd::Sweep {
            dims,
            stages,
            directions,
            precision,
            repeats,
            warmup,
            kchunk,
            c_slice,
            c_proxy,
            out,
            format,
        } => {
            let cfg = (|| -> Result<BenchConfig, ConfigError> {
                let mut cfg = BenchConfig::with_defaults();
                cfg.dims = parse_dims_list(&dims)?;
                cfg.stages = parse_stages(&stages)?;
                cfg.directions = parse_directions(&directions)?;
                cfg.precision = parse_precision(&precision)?;
                cfg.repeats = repeats;
                cfg.warmup = warmup;
                cfg.kchunk = kchunk;
                cfg.c_slice = c_slice;
                cfg.c_proxy = match &c_proxy {
                    Some(v) => Some(parse_c_proxy(v)?),
                    None => None,
                };
                cfg.seed = cli.seed;
                cfg.workers = workers;
                cfg.out = out;
                Ok(cfg)
            })();
            let cfg = match cfg {
                Ok(cfg) => cfg,
                Err(e) => return usage_error(&e),
            };
            let format = match format.as_deref() {
                Some(f) => match ReportFormat::parse_token(f) {
                    Some(f) => Some(f),
                    None => {
                        return usage_error(&ConfigError {
                            token: f.to_string(),
                            message: "unknown format (expected csv or json)".into(),
                        })
                    }
                },
                None => None,
            };
            execute_sweep(cfg, format)
        }
        Cmd::Report { input, format } => {
            let measurements = match read_measurements(&input) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return 2;
                }
            };
            match format.as_str() {
                "text" => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    match render_ladders(&measurements, &mut lock) {
                        Ok(()) => 0,
                        Err(e) => {
                            eprintln!("error: {e:#}");
                            2
                        }
                    }
                }
                "json" => match ladders_json(&measurements) {
                    Ok(v) => {
                        println!("{v}");
                        0
                    }
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        2
                    }
                },
                other => usage_error(&ConfigError {
                    token: other.to_string(),
                    message: "unknown format (expected text or json)".into(),
                }),
            }
        }
    }
}

fn echo_config(cfg: &BenchConfig) {
    let dims: Vec<String> = cfg
        .dims
        .iter()
        .map(|d| format!("{}x{}x{}x{}", d[0], d[1], d[2], d[3]))
        .collect();
    let stages: Vec<&str> = cfg.stages.iter().map(|s| s.token()).collect();
    let dirs: Vec<&str> = cfg.directions.iter().map(|d| d.token()).collect();
    eprintln!(
        "config: dims={} stages={} directions={} precision={} repeats={} warmup={} \
         kchunk={} c_slice={} c_proxy={} seed={} workers={} out={}",
        dims.join(";"),
        stages.join(","),
        dirs.join(","),
        cfg.precision,
        cfg.repeats,
        cfg.warmup,
        cfg.kchunk,
        cfg.c_slice,
        cfg.c_proxy
            .map(|v| v.to_string())
            .unwrap_or_else(|| "off".into()),
        cfg.seed,
        cfg.workers,
        cfg.out
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "stdout".into()),
    );
}

/// Run a sweep and stream results to the output file (or stdout). Exit 0 on
/// completion even when individual measurements aborted; their diagnostics
/// are in the output.
fn execute_sweep(cfg: BenchConfig, format_flag: Option<ReportFormat>) -> i32 {
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e:#}");
        return 2;
    }
    echo_config(&cfg);

    let result = match &cfg.out {
        Some(path) => {
            let format = format_flag.unwrap_or_else(|| ReportFormat::from_path(path));
            match ReportWriter::create(path, format) {
                Ok(mut writer) => {
                    let mut sink_err = None;
                    run_sweep(&cfg, |entry| {
                        if sink_err.is_none() {
                            if let Err(e) = writer.record(entry) {
                                sink_err = Some(e);
                            }
                        }
                    });
                    match sink_err {
                        Some(e) => Err(e),
                        None => writer.finish(),
                    }
                }
                Err(e) => Err(e),
            }
        }
        None => {
            // No output path: buffer and print CSV (or JSON) to stdout.
            let entries = run_sweep(&cfg, |_| {});
            let format = format_flag.unwrap_or(ReportFormat::Csv);
            print_entries(&entries, format)
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn print_entries(entries: &[SweepEntry], format: ReportFormat) -> anyhow::Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(Vec::new());
            w.write_record(linescan::report::CSV_HEADER)?;
            for e in entries {
                if let SweepEntry::Ok(m) = e {
                    w.serialize(m)?;
                }
            }
            lock.write_all(&w.into_inner()?)?;
        }
        ReportFormat::Json => {
            let text = serde_json::to_string_pretty(entries)?;
            writeln!(lock, "{text}")?;
        }
    }
    Ok(())
}
