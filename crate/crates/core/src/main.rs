use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::Rng;

use bcode::bench::{
    decode, emit_report, noise_rng, run_experiment, trial_rng, DecodeOptions, DecoderKind,
    ExperimentConfig, ReportFormat,
};
use bcode::coding::{build_decoding_instance, ChannelModel, CodeKind, CodeSpec, GeneratorMatrix};
use bcode::elimination::Limits;
use bcode::Error;

#[derive(Parser)]
#[command(
    name = "bcode",
    version,
    about = "Probabilistic decoding of linear block codes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generator matrix.
    Gen {
        /// hamming-7-4, hamming-15-11, structured or random
        #[arg(long)]
        kind: CodeKind,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Send one random word through the channel and decode it.
    Decode {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        sigma: f64,
        /// elim-bel, elim-mpe, elim-map, approx-mpe or ibp
        #[arg(long)]
        decoder: String,
        /// i for approx-mpe, iteration count for ibp
        #[arg(long)]
        param: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_table_entries: Option<usize>,
    },
    /// Run a Monte-Carlo experiment described by a config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Draw a fresh random code on every trial.
        #[arg(long)]
        code_per_trial: bool,
    },
}

enum Failure {
    Config(String),
    Decoder(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn bits(v: &[u8]) -> String {
    v.iter().map(|b| char::from(b'0' + b)).collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen {
            kind,
            k,
            p,
            seed,
            output,
        } => {
            let spec = match kind {
                CodeKind::Hamming74 => CodeSpec::hamming_7_4(),
                CodeKind::Hamming1511 => CodeSpec::hamming_15_11(),
                CodeKind::Structured => CodeSpec::structured(k, p),
                CodeKind::Random => CodeSpec::random(k, p, seed),
            };
            write_or_print(output.as_deref(), &spec.generator()?.to_text())
        }
        Command::Decode {
            code,
            sigma,
            decoder,
            param,
            seed,
            max_table_entries,
        } => {
            let g = GeneratorMatrix::from_text(&read(&code)?)?;
            let decoder = DecoderKind::from_parts(&decoder, param)?;
            let channel = ChannelModel::new(sigma)?;
            let mut rng = trial_rng(seed, 0);
            let u: Vec<u8> = (0..g.k()).map(|_| u8::from(rng.random_bool(0.5))).collect();
            let y = channel.transmit(&g.encode(&u)?, &mut noise_rng(seed, 0, 0));
            let instance = build_decoding_instance(&g, &y, sigma)?;
            let mut options = DecodeOptions::for_instance(&instance);
            if let Some(m) = max_table_entries {
                options.limits = Limits {
                    max_table_entries: m,
                };
            }
            let decoded = decode(&instance, decoder, &options)
                .map_err(|e| Failure::Decoder(e.to_string()))?;
            let errors = u.iter().zip(&decoded).filter(|(a, b)| a != b).count();
            println!("sent     {}", bits(&u));
            println!("decoded  {}", bits(&decoded));
            println!("bit errors {errors} of {}", u.len());
            Ok(())
        }
        Command::Bench {
            config,
            output,
            format,
            code_per_trial,
        } => {
            let mut cfg = ExperimentConfig::parse(&read(&config)?)?;
            cfg.code_per_trial |= code_per_trial;
            let rows = run_experiment(&cfg)?;
            write_or_print(output.as_deref(), &emit_report(&rows, format))?;
            let failed: Vec<String> = rows
                .iter()
                .filter(|r| r.failed())
                .map(|r| {
                    let why = r
                        .first_error
                        .as_ref()
                        .map(Error::to_string)
                        .unwrap_or_default();
                    format!(
                        "{} at sigma {} failed on {} trials: {why}",
                        r.decoder, r.sigma, r.failures
                    )
                })
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Decoder(failed.join("\n")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Decoder(m)) => {
            eprintln!("decoder failure: {m}");
            ExitCode::from(2)
        }
    }
}
