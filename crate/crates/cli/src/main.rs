use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flexkrylov::experiments::{
    emit_report, read_config_file, render_audit, run_experiment_with, EmitFlags, ExperimentConfig, RunReport,
};
use flexkrylov::FlexError;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(name = "flexkrylov", version, about = "Flexible preconditioned CG experiments and audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write the requested artefacts.
    Run(ExperimentArgs),
    /// Run an experiment with every trace audited; exits 2 if any audit is flagged.
    Audit(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// fig1, fig2, fig3 or custom.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "kappa-max")]
    kappa_max: Option<String>,
    /// Comma-separated inner tolerances.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    /// Number of coarse points.
    #[arg(long)]
    coarse: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    audit: bool,
    /// Flat key=value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ExperimentArgs {
    fn to_config(&self) -> Result<ExperimentConfig, FlexError> {
        let mut map = match &self.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("experiment", &self.experiment),
            ("n", &self.n),
            ("kappa_max", &self.kappa_max),
            ("eta", &self.eta),
            ("coarse", &self.coarse),
            ("iters", &self.iters),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        if let Some(out) = &self.out {
            map.insert("out".into(), out.to_string_lossy().into_owned());
        }
        for (key, on) in [("csv", self.csv), ("svg", self.svg), ("audit", self.audit)] {
            if on {
                map.insert(key.into(), "true".into());
            }
        }
        ExperimentConfig::from_map(&map)
    }
}

fn summary(report: &RunReport) {
    for h in &report.histories {
        let last = h.error_a_norms.last().copied().unwrap_or(f64::NAN);
        let mean = h.mean_reduction().map_or("-".to_string(), |q| format!("{q:.6}"));
        let status = match &h.failure {
            Some(f) => format!("failed: {f}"),
            None => "ok".into(),
        };
        println!("{:<28} iters {:>4}  final {:.6e}  mean factor {mean}  {status}", h.label(), h.iterations(), last);
    }
}

fn usage_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_USAGE)
}

fn execute(args: &ExperimentArgs, audit_only: bool) -> ExitCode {
    let config = match args.to_config() {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    let report = match run_experiment_with(&config, audit_only || config.emit.audit) {
        Ok(r) => r,
        Err(FlexError::InvalidInput(msg)) => return usage_error(msg),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };

    let flags = if audit_only { EmitFlags { csv: false, svg: false, audit: true } } else { config.emit };
    if let Some(dir) = &config.out_dir {
        if flags.any() {
            match emit_report(&report, flags, dir) {
                Ok(files) => files.iter().for_each(|f| println!("wrote {}", f.display())),
                Err(e) => return usage_error(e),
            }
        }
    }

    if audit_only {
        print!("{}", render_audit(&report));
    } else {
        summary(&report);
    }
    for h in report.failures() {
        eprintln!("numerical failure in {}: {}", h.label(), h.failure.as_deref().unwrap_or_default());
    }
    let failed = report.failures().next().is_some();
    if failed || (audit_only && !report.audits_passed()) {
        ExitCode::from(EXIT_NUMERICAL)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match &cli.command {
        Command::Run(args) => execute(args, false),
        Command::Audit(args) => execute(args, true),
    }
}
