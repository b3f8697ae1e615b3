use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pinchopt::channel::bpcu_to_nats;
use pinchopt_cli::config::KEYS;
use pinchopt_cli::instance::load_layout;
use pinchopt_cli::single::{self, Report};
use pinchopt_cli::{run_samples, write_csv, CliError, CsvRow, Entries, ExperimentConfig, Result, Scheme};

fn config_help() -> String {
    let mut s = String::from("Config keys (file lines `key = value`, or --set key=value):\n");
    for (k, d) in KEYS {
        s.push_str(&format!("  {k:<14} {d}\n"));
    }
    s.push_str("\nSchemes:\n  ");
    s.push_str(&Scheme::ALL.map(Scheme::label).join(", "));
    s.push_str("\n\nExit codes: 0 ok, 2 config/parse error, 3 infeasible instance, 4 certification failure.");
    s
}

#[derive(Parser)]
#[command(name = "pinchopt", version, about = "Pinching-antenna placement and power allocation", after_help = config_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key = value config file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (experiment rows, or the report's values).
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
    /// Compare against the brute-force oracle; exit 4 if it loses.
    #[arg(long)]
    certify: bool,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct Operating {
    /// Total power (per-user budget for outage).
    #[arg(long, allow_negative_numbers = true)]
    power_dbm: Option<f64>,
    #[arg(long, conflicts_with = "rate_nats")]
    rate_bpcu: Option<f64>,
    #[arg(long)]
    rate_nats: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Max-min rate placement for an instance file of `x y` lines.
    Maxmin {
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        op: Operating,
    },
    /// Minimum total power for a common rate target.
    Powermin {
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        op: Operating,
    },
    /// Power outage probability; an instance adds per-user outage flags.
    Outage {
        instance: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        op: Operating,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Two-user throughput maximization with rate floors.
    Greedy {
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        op: Operating,
    },
    /// Two-user NOMA power minimization.
    Noma {
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        op: Operating,
    },
    /// Seeded scheme-comparison sweep written as CSV.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Comma-separated scheme labels.
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        trials: Option<u64>,
    },
}

fn load_config(common: &Common, extra: &[(&str, Option<String>)]) -> Result<ExperimentConfig> {
    let mut entries = match &common.config {
        Some(path) => Entries::parse(&read(path)?)?,
        None => Entries::default(),
    };
    for pair in &common.set {
        entries.set_pair(pair)?;
    }
    let flags = [("seed", common.seed.map(|v| v.to_string())), ("threads", common.threads.map(|v| v.to_string()))];
    for (k, v) in flags.iter().chain(extra) {
        if let Some(v) = v {
            entries.set(k, v.clone())?;
        }
    }
    ExperimentConfig::from_entries(&entries)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn rate_nats(op: &Operating, cfg: &ExperimentConfig) -> f64 {
    op.rate_nats.unwrap_or_else(|| bpcu_to_nats(op.rate_bpcu.unwrap_or(cfg.rate_bpcu)))
}

fn write_rows(rows: &[CsvRow], out: Option<&Path>) -> Result<()> {
    fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io { path: path.display().to_string(), source }
    }
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
            write_csv(rows, &mut w).and_then(|_| w.flush()).map_err(io_err(path))
        }
        None => write_csv(rows, std::io::stdout().lock()).map_err(io_err(Path::new("<stdout>"))),
    }
}

fn finish_report(report: Report, out: Option<&Path>) -> Result<()> {
    print!("{}", report.render());
    if let Some(path) = out {
        write_rows(&report.rows, Some(path))?;
    }
    match report.certification {
        Some(c) if !c.passed => Err(CliError::Certification(format!("{} gap {:e} > {:e}", c.what, c.gap, c.tolerance))),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Maxmin { instance, common, op } => {
            let cfg = load_config(&common, &[])?;
            let layout = load_layout(&instance, &cfg.params)?;
            let report = single::maxmin(&cfg, &layout, op.power_dbm.unwrap_or(cfg.power_dbm), common.certify)?;
            finish_report(report, common.out.as_deref())
        }
        Command::Powermin { instance, common, op } => {
            let cfg = load_config(&common, &[])?;
            let layout = load_layout(&instance, &cfg.params)?;
            let report = single::powermin(&cfg, &layout, rate_nats(&op, &cfg), common.certify)?;
            finish_report(report, common.out.as_deref())
        }
        Command::Greedy { instance, common, op } => {
            let cfg = load_config(&common, &[])?;
            let layout = load_layout(&instance, &cfg.params)?;
            let power = op.power_dbm.unwrap_or(cfg.power_dbm);
            let report = single::greedy(&cfg, &layout, power, rate_nats(&op, &cfg), common.certify)?;
            finish_report(report, common.out.as_deref())
        }
        Command::Noma { instance, common, op } => {
            let cfg = load_config(&common, &[])?;
            let layout = load_layout(&instance, &cfg.params)?;
            let report = single::noma(&cfg, &layout, rate_nats(&op, &cfg), common.certify)?;
            finish_report(report, common.out.as_deref())
        }
        Command::Outage { instance, common, op, users, trials } => {
            let extra = [("users", users.map(|v| v.to_string())), ("trials", trials.map(|v| v.to_string()))];
            let cfg = load_config(&common, &extra)?;
            let layout = instance.map(|p| load_layout(&p, &cfg.params)).transpose()?;
            let power = op.power_dbm.unwrap_or(cfg.power_dbm);
            let report = single::outage(&cfg, layout.as_ref(), power, rate_nats(&op, &cfg), common.certify)?;
            finish_report(report, common.out.as_deref())
        }
        Command::Experiment { common, schemes, users, trials } => {
            let extra = [
                ("schemes", schemes),
                ("users", users.map(|v| v.to_string())),
                ("trials", trials.map(|v| v.to_string())),
            ];
            let cfg = load_config(&common, &extra)?;
            let samples = run_samples(&cfg, common.certify)?;
            write_rows(&pinchopt_cli::experiment::summarize(&samples), common.out.as_deref())?;
            if common.certify {
                let failures = &samples.certification_failures;
                for f in failures.iter().take(10) {
                    eprintln!("{f}");
                }
                if !failures.is_empty() {
                    return Err(CliError::Certification(format!("{} trial checks lost to the oracle", failures.len())));
                }
                eprintln!("certify: all closed-form trials match their oracles");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pinchopt: {e}");
            e.exit_code()
        }
    }
}
