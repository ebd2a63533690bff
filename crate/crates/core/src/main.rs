use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eigencorr::experiment::{
    read_profile_csv, resolve_grid, resolve_model, run_compare, run_oracle, run_predict, run_sample, write_predict_csv,
    write_profile_csv, write_sample_dump, ExperimentConfig, ExperimentError,
};
use eigencorr::stats::ProfileEstimates;

#[derive(Parser)]
#[command(name = "eigencorr", version, about = "Eigenvector overlaps of biunitarily invariant random matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the ensemble and write the radial profile.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Also write every eigenvalue and overlap to samples.csv.
        #[arg(long)]
        dump: bool,
    },
    /// Tabulate F, rho, O and c for the configured model.
    Predict {
        #[command(flatten)]
        common: Common,
    },
    /// Compare a profile with the model; exit status 1 if thresholds are exceeded.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Profile written by `sample`; sampled afresh when omitted.
        #[arg(long, conflicts_with = "analytic")]
        profile: Option<PathBuf>,
        /// Compare the model's own analytic profile (a self-check).
        #[arg(long)]
        analytic: bool,
    },
    /// Run the deterministic invariant suite.
    Oracle,
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    c_edge: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, ExperimentError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(workers) = self.workers {
            cfg.workers = Some(workers);
        }
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = dir.clone();
        }
        if let Some(bins) = self.bins {
            cfg.grid.bins = bins;
        }
        if let Some(c_edge) = self.c_edge {
            cfg.compare.c_edge = c_edge;
        }
        std::fs::create_dir_all(&cfg.out_dir)?;
        Ok(cfg)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, ExperimentError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn run(cli: Cli) -> Result<ExitCode, ExperimentError> {
    match cli.command {
        Command::Sample { common, dump } => {
            let mut cfg = common.load()?;
            cfg.dump_samples |= dump;
            let run = run_sample(&cfg)?;
            let est = run.profile.estimates();
            let report = run_compare(&est, &run.model, &cfg.compare).ok().map(|o| o.report);
            write_profile_csv(create(&cfg.out_dir, "profile.csv")?, &est, &run.model, report.as_ref())?;
            if let Some(d) = &run.dump {
                write_sample_dump(create(&cfg.out_dir, "samples.csv")?, d)?;
            }
            let diag = run.diagnostics;
            eprintln!(
                "{}: N = {}, M = {}, draws = {}, rejected = {} (singular {}, ill-conditioned {}), \
                 max biorthogonality defect {:.2e}, min O_ii {:.6}",
                run.model.label(),
                run.spec.dimension(),
                diag.accepted,
                diag.draws,
                diag.rejected(),
                diag.singular_factors,
                diag.ill_conditioned,
                diag.max_biorthogonality_defect,
                diag.min_overlap,
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict { common } => {
            let cfg = common.load()?;
            let spec = cfg.ensemble.as_ref().map(|_| cfg.ensemble_spec()).transpose()?;
            let model = resolve_model(&cfg.model, spec.as_ref())?;
            let grid = resolve_grid(&cfg.grid, &model)?;
            write_predict_csv(create(&cfg.out_dir, "predict.csv")?, &run_predict(&model, &grid))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { common, profile, analytic } => {
            let cfg = common.load()?;
            let spec = cfg.ensemble.as_ref().map(|_| cfg.ensemble_spec()).transpose()?;
            let model = resolve_model(&cfg.model, spec.as_ref())?;
            let est = if let Some(path) = profile {
                read_profile_csv(BufReader::new(File::open(path)?))?
            } else if analytic {
                let n = spec.as_ref().map_or(1 << 20, |s| s.dimension());
                ProfileEstimates::analytic(&model, resolve_grid(&cfg.grid, &model)?, n)
            } else {
                let run = run_sample(&cfg)?;
                let est = run.profile.estimates();
                write_profile_csv(create(&cfg.out_dir, "profile.csv")?, &est, &model, None)?;
                est
            };
            let outcome = run_compare(&est, &model, &cfg.compare)?;
            write_profile_csv(create(&cfg.out_dir, "comparison.csv")?, &est, &model, Some(&outcome.report))?;
            let json = outcome.summary.to_json();
            let mut f = create(&cfg.out_dir, "summary.json")?;
            writeln!(f, "{json}")?;
            f.flush()?;
            println!("{json}");
            Ok(if outcome.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Oracle => {
            let checks = run_oracle();
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {} (expected {})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.actual, c.expected);
                failed += usize::from(!c.pass);
            }
            println!("{} checks, {} failed", checks.len(), failed);
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
