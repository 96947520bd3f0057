use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fracks::cli::{load_config_with, report_index, run, Experiment, Overrides};
use fracks::model::GammaSign;

#[derive(Parser)]
#[command(name = "fracks", version, about = "Run one numerical experiment and write its report")]
struct Args {
    /// ml-eval, mainardi-moments, decay-heat, decay-ml, yamazaki, product,
    /// bilinear, linear-op, solve, selfsim or uniqueness
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// paper or damped
    #[arg(long)]
    gamma_sign: Option<GammaSign>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let ov = Overrides { experiment: Some(args.experiment), seed: args.seed, output_dir: args.out, gamma_sign: args.gamma_sign };
    let cfg = match load_config_with(&args.config, &ov) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{} failed in {}: {e}", cfg.experiment, cfg.experiment.module());
            return ExitCode::from(1);
        }
    };
    for line in outcome.summary_lines() {
        println!("{line}");
    }
    match report_index(&cfg.output_dir) {
        Ok(p) => println!("index: {}", p.display()),
        Err(e) => eprintln!("index not written: {e}"),
    }
    ExitCode::from(outcome.exit_code() as u8)
}
