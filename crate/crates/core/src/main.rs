use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use seafdm_core::harness::config::{preset, ExperimentConfig, Scenario, PRESETS};
use seafdm_core::harness::engine::{run, ScenarioOutput, TrialRecord};
use seafdm_core::harness::output::{
    emit_csv, emit_search_space_csv, emit_sinr_csv, write_metadata, BER_HEADER,
};
use seafdm_core::keystream::{build_codebook, search_space_bits};
use seafdm_core::{Error, Result};

/// Link-level simulator for secure AFDM with keystream-driven chirp schedules.
#[derive(Parser)]
#[command(name = "seafdm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a BER scenario (bob-vs-afdm-ber, eve-ber, csi-error-ber, bias-sweep).
    Simulate(RunArgs),
    /// Closed-form average Eve SINR against c2max.
    SinrCurve(RunArgs),
    /// Eve BER against the bias between her schedule and Alice's.
    BiasSweep(RunArgs),
    /// Size of the brute-force schedule space, in bits.
    SearchSpace {
        /// Subcarrier count.
        #[arg(long, default_value_t = 1024)]
        n: usize,
        /// Codebook size (power of two).
        #[arg(long, default_value_t = 4)]
        m: usize,
    },
    /// Quick end-to-end sanity checks.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Built-in configuration, used when no file is given.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: Option<String>,
    /// Output CSV; a `.meta.toml` sidecar is written next to it. Prints to stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override frames per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the worker thread count (0 = automatic).
    #[arg(long)]
    workers: Option<usize>,
    /// Override the subcarrier count.
    #[arg(long)]
    n: Option<usize>,
    /// Override the codebook bound c2max.
    #[arg(long)]
    c2max: Option<f64>,
    /// Override the sweep values (comma separated).
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

impl RunArgs {
    fn resolve(&self, default_preset: &str) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => preset(default_preset)?,
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.n {
            cfg.frame.n = v;
        }
        if let Some(v) = self.c2max {
            cfg.codebook.c2max = v;
        }
        if let Some(v) = &self.values {
            cfg.sweep.values = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_records(records: &[TrialRecord]) {
    println!("{BER_HEADER}");
    for r in records {
        let opt = |v: Option<String>| v.unwrap_or_default();
        println!(
            "{},{},{},{},{},{},{},{},{}",
            r.point,
            r.bob_errors,
            r.eve_errors,
            opt(r.ref_errors.map(|v| v.to_string())),
            r.bit_count,
            r.bob_ber,
            r.eve_ber,
            opt(r.ref_ber.map(|v| v.to_string())),
            r.seed
        );
    }
}

fn execute(args: &RunArgs, default_preset: &str, expect: impl Fn(Scenario) -> bool) -> Result<()> {
    let cfg = args.resolve(default_preset)?;
    if !expect(cfg.scenario) {
        return Err(Error::Config(format!(
            "scenario {:?} is not valid for this subcommand",
            cfg.scenario
        )));
    }
    if args.dump_config {
        print!("{}", cfg.to_toml_string());
        return Ok(());
    }
    let start = Instant::now();
    let output = run(&cfg)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match (output, &args.out) {
        (ScenarioOutput::Ber(recs), Some(path)) => {
            emit_csv(&recs, path)?;
            let meta = write_metadata(&cfg, &recs, wall_ms, path)?;
            eprintln!("wrote {} and {}", path.display(), meta.display());
        }
        (ScenarioOutput::Ber(recs), None) => print_records(&recs),
        (ScenarioOutput::Sinr(curve), Some(path)) => emit_sinr_csv(&curve, path)?,
        (ScenarioOutput::Sinr(curve), None) => {
            println!("c2max,sinr_linear,sinr_db");
            for i in 0..curve.abscissa.len() {
                println!("{},{},{}", curve.abscissa[i], curve.sinr_linear[i], curve.sinr_db[i]);
            }
        }
        (ScenarioOutput::SearchSpace(rows), Some(path)) => emit_search_space_csv(&rows, path)?,
        (ScenarioOutput::SearchSpace(rows), None) => {
            for r in rows {
                println!("n={} m={} bits={}", r.n, r.m, r.bits);
            }
        }
    }
    Ok(())
}

fn selftest() -> Result<bool> {
    use seafdm_core::harness::config::ChannelModel;
    use seafdm_core::security::{sinr_eve_average, to_db};

    let mut ok = true;
    let mut check = |name: &str, pass: bool, detail: String| {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };

    let mut cfg = preset("eve-ber")?;
    cfg.frame.n = 64;
    cfg.trials = 10;
    cfg.channel.model = ChannelModel::Identity;
    cfg.sweep.values = vec![60.0];
    let r = &seafdm_core::harness::run_scenario(&cfg)?[0];
    check("noiseless loopback", r.bob_errors == 0, format!("bob errors {}", r.bob_errors));

    let mut cfg = preset("eve-ber")?;
    cfg.trials = 2;
    cfg.sweep.values = vec![25.0];
    let r = &seafdm_core::harness::run_scenario(&cfg)?[0];
    check(
        "eve collapse (N=1024, 25 dB)",
        (0.45..=0.55).contains(&r.eve_ber),
        format!("bob {:.2e}, eve {:.3}", r.bob_ber, r.eve_ber),
    );

    let v = to_db(sinr_eve_average(1024, 10f64.powf(2.5), 5.0));
    check("SINR endpoint", (v + 0.93).abs() < 0.1, format!("{v:.3} dB"));
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => execute(a, "eve-ber", |s| s.is_ber()),
        Command::SinrCurve(a) => execute(a, "sinr-curve", |s| s == Scenario::SinrVsC2max),
        Command::BiasSweep(a) => execute(a, "bias-sweep", |s| s == Scenario::BiasSweep),
        Command::SearchSpace { n, m } => build_codebook(0.0, *m).map(|book| {
            println!("n={n} m={m} bits={}", search_space_bits(&book, *n));
        }),
        Command::Selftest => match selftest() {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
