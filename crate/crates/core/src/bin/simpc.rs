use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use simpc::pipeline::{
    cmd_ablate, cmd_denoise, cmd_eval, cmd_eval_files, cmd_generate, cmd_theory, cmd_train, EvalFiles, RunConfig, MODEL_FILE,
};

/// Unsupervised point-cloud denoising.
#[derive(Parser, Debug)]
#[command(name = "simpc", version)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for data-parallel kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Places data, checkpoints and reports under this directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write clean meshes, clean clouds, noisy variants and a manifest.
    Generate,
    /// Train on a generated dataset.
    Train,
    /// Denoise one cloud with a checkpoint.
    Denoise {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        iterations: usize,
        /// Also write every intermediate pass.
        #[arg(long)]
        intermediates: bool,
    },
    /// Score a checkpoint on the held-out suite, or a single denoised file.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, requires = "clean")]
        denoised: Option<PathBuf>,
        #[arg(long)]
        clean: Option<PathBuf>,
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        noisy: Option<PathBuf>,
    },
    /// Train and score the loss-type and extension-distance variants.
    Ablate,
    /// Run the Monte-Carlo checks and write a JSON report.
    Theory,
}

/// Exit code for checks that ran but did not pass.
const EXIT_CHECK_FAILED: u8 = 5;

fn fail(reason: &str, code: u8, msg: impl std::fmt::Display) -> ExitCode {
    let msg = msg.to_string().replace('\n', " ");
    eprintln!("error[{reason}]: {msg}");
    ExitCode::from(code)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg = cfg.rooted_at(out);
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| simpc::Error::Config(format!("thread pool: {e}")))?;
    }
    let default_ckpt = cfg.paths.checkpoint_dir.join(MODEL_FILE);
    match cli.command {
        Command::Generate => {
            let m = cmd_generate(&cfg)?;
            let files: usize = m.entries.iter().map(|e| e.variants.len()).sum();
            println!(
                "wrote {} entries ({files} noisy clouds) to {}",
                m.entries.len(),
                cfg.paths.data_dir.display()
            );
        }
        Command::Train => {
            let out = cmd_train(&cfg)?;
            if let Some(last) = out.logs.last() {
                println!("epoch {} loss {:.6e}", last.epoch, last.loss_total);
            }
        }
        Command::Denoise {
            checkpoint,
            input,
            output,
            iterations,
            intermediates,
        } => {
            let ckpt = checkpoint.unwrap_or(default_ckpt);
            cmd_denoise(&cfg, &ckpt, &input, &output, iterations, intermediates)?;
        }
        Command::Eval {
            checkpoint,
            denoised,
            clean,
            mesh,
            noisy,
        } => match (denoised, clean) {
            (Some(denoised), Some(clean)) => {
                print!(
                    "{}",
                    cmd_eval_files(&EvalFiles {
                        denoised,
                        clean,
                        mesh,
                        noisy
                    })?
                );
            }
            _ => {
                let rows = cmd_eval(&cfg, &checkpoint.unwrap_or(default_ckpt))?;
                print!("{}", simpc::pipeline::eval_csv(&rows));
            }
        },
        Command::Ablate => {
            let rows = cmd_ablate(&cfg)?;
            print!("{}", simpc::pipeline::ablation_csv(&cfg.eval.noise_scales, &rows));
        }
        Command::Theory => {
            let report = cmd_theory(&cfg)?;
            for r in &report.records {
                println!(
                    "{} {} rel_error={:.3e} tol={:e}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.check,
                    r.rel_error,
                    r.tolerance
                );
            }
            if !report.all_pass {
                return Ok(fail("check", EXIT_CHECK_FAILED, "one or more theory checks failed"));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            return fail("config", 2, e.to_string().lines().next().unwrap_or("invalid arguments"));
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => match e.downcast_ref::<simpc::Error>() {
            Some(err) => fail(err.reason(), err.exit_code() as u8, err),
            None => fail("internal", 1, e),
        },
    }
}
