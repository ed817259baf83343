use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skymatte::config::{Preset, RunConfig};
use skymatte::driver::{self, BenchParams};
use skymatte::error::Error;
use skymatte::io::Transfer;

/// Sky alpha mattes: refine annotations, upsample network output, grade
/// images, evaluate and benchmark.
#[derive(Parser)]
#[command(name = "skymatte", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON run config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parameter preset (overrides the config's).
    #[arg(long, global = true)]
    preset: Option<Preset>,
    /// Worker threads (overrides the config's).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Random seed (overrides the config's).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Treat PNG colors as sRGB-encoded and work in linear light.
    #[arg(long, global = true)]
    linear: bool,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Refine coarse annotations listed in a JSON manifest.
    Refine { manifest: PathBuf },
    /// Upsample a low-resolution sky probability map to a reference image.
    Upsample {
        #[arg(long)]
        probability: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Apply a grading config to an image through its sky matte.
    Grade {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        matte: PathBuf,
        #[arg(long)]
        grading: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Compare predicted mattes with same-named ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Time the upsampling path and a grading chain.
    Bench {
        /// Image sizes as WxH, comma separated.
        #[arg(long, value_delimiter = ',', value_parser = parse_size, default_value = "1024x768")]
        sizes: Vec<(usize, usize)>,
        /// Downsampling factors, comma separated.
        #[arg(long = "s", value_delimiter = ',', default_value = "64")]
        s_values: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
        #[arg(long, default_value_t = 256)]
        probability_size: usize,
        /// CSV destination; stdout when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic scene with known alpha.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 384)]
        height: usize,
    },
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let num = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
    Ok((num(w)?, num(h)?))
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => 2,
        _ => 1,
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    let g = &cli.global;
    let file = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let config = file.overlay(&RunConfig {
        preset: g.preset,
        seed: g.seed,
        threads: g.threads,
        ..Default::default()
    });
    let transfer = if g.linear {
        Transfer::Linear
    } else {
        Transfer::Encoded
    };

    driver::with_threads(config.threads, || match cli.command {
        Command::Refine { manifest } => {
            let report = driver::cmd_refine(&manifest, &config, transfer)?;
            log::info!(
                "{} of {} images refined",
                report.items.len() - report.failures(),
                report.items.len()
            );
            Ok(report.exit_code())
        }
        Command::Upsample {
            probability,
            reference,
            output,
        } => driver::cmd_upsample(&probability, &reference, &output, &config, transfer).map(|_| 0),
        Command::Grade {
            image,
            matte,
            grading,
            output,
        } => driver::cmd_grade(&image, &matte, &grading, &output, transfer).map(|_| 0),
        Command::Eval {
            pred,
            gt,
            csv,
            json,
        } => {
            let report = driver::cmd_eval(&pred, &gt)?;
            write_or_print(csv.as_deref(), &report.to_csv()?)?;
            if let Some(j) = json {
                write_or_print(Some(&j), &report.to_json())?;
            }
            Ok(report.status.exit_code())
        }
        Command::Bench {
            sizes,
            s_values,
            repetitions,
            probability_size,
            output,
        } => {
            let params = BenchParams {
                sizes,
                s_values,
                repetitions,
                probability_size,
                seed: config.seed.unwrap_or(0),
            };
            let rows = driver::cmd_bench(&params, &config)?;
            write_or_print(output.as_deref(), &driver::bench_csv(&rows)?)?;
            Ok(0)
        }
        Command::Synth { out, width, height } => {
            driver::cmd_synth(&out, width, height, config.seed.unwrap_or(0)).map(|_| 0)
        }
    })?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
