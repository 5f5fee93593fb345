//! `pasm`: command-line front end for the PASM link simulator.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pasm_core::analysis::{flop_estimate, PepMethod};
use pasm_core::detect::DetectorKind;
use pasm_core::harness::{
    compare, run_bound, run_pssm_baseline, run_sweep, to_csv, write_csv, write_metadata, BerRecord, SweepConfig,
    PROFILES,
};

#[derive(Parser)]
#[command(name = "pasm", version, about = "Link-level simulator for pinching-antenna spatial multiplexing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER sweep over transmit power.
    Sweep(RunArgs),
    /// Analytical ML union bound over transmit power.
    Bound {
        #[command(flatten)]
        run: RunArgs,
        /// PEP evaluator: `exact` or `approx`.
        #[arg(long)]
        method: Option<String>,
        /// Large-scale draws to average (0 = one per simulation block).
        #[arg(long)]
        draws: Option<usize>,
        /// Keep only the closest codeword pairs when over budget.
        #[arg(long)]
        truncate: bool,
    },
    /// Sweep with the fixed phase-shifter array at the region center.
    Pssm(RunArgs),
    /// PASM and PSSM sweeps plus the gap between their BER crossings.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// BER level at which the horizontal gap is measured.
        #[arg(long, default_value_t = 0.1)]
        target: f64,
    },
    /// Dominant-term operation counts per detector.
    Flops {
        #[command(flatten)]
        source: Source,
        /// VAMP iteration count.
        #[arg(long, default_value_t = 20)]
        iters: usize,
    },
    /// Print the resolved configuration as TOML.
    Show(RunArgs),
}

#[derive(Args, Clone)]
struct Source {
    /// Built-in profile (fig4, fig5, fig6a, fig6b, fig9).
    #[arg(long, conflicts_with = "config")]
    profile: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    seed: Option<u64>,
    /// Frames per power point.
    #[arg(long)]
    frames: Option<u64>,
    /// Comma-separated transmit powers in dBm.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    powers: Option<Vec<f64>>,
    /// Comma-separated detectors (ml, zf, mmse, sic-zf, sic-mmse, vamp).
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<String>>,
    /// Record per-detector wall time in the CSV.
    #[arg(long)]
    timing: bool,
    /// CSV output path; prints to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(source: &Source) -> Result<SweepConfig> {
    match (&source.profile, &source.config) {
        (Some(p), _) => Ok(SweepConfig::profile(p)?),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(SweepConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?)
        }
        (None, None) => bail!("pass --profile <{}> or --config <file>", PROFILES.join("|")),
    }
}

impl RunArgs {
    fn resolve(&self) -> Result<SweepConfig> {
        let mut cfg = load(&self.source)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(f) = self.frames {
            cfg.frames = f;
        }
        if let Some(p) = &self.powers {
            cfg.powers_dbm = p.clone();
        }
        if let Some(d) = &self.detectors {
            cfg.detectors = d.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
        }
        cfg.timing |= self.timing;
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit(&self, command: &str, cfg: &SweepConfig, records: &[BerRecord], started: Instant) -> Result<()> {
        match &self.out {
            Some(path) => {
                write_csv(path, records).with_context(|| format!("writing {}", path.display()))?;
                let meta = write_metadata(path, command, cfg, started.elapsed().as_secs_f64())?;
                eprintln!("wrote {} and {}", path.display(), meta.display());
            }
            None => print!("{}", to_csv(records)),
        }
        Ok(())
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let started = Instant::now();
    match cli.command {
        Command::Sweep(run) => {
            let cfg = run.resolve()?;
            let rec = run_sweep(&cfg)?;
            run.emit("sweep", &cfg, &rec, started)?;
        }
        Command::Pssm(run) => {
            let cfg = run.resolve()?;
            let rec = run_pssm_baseline(&cfg)?;
            run.emit("pssm", &cfg, &rec, started)?;
        }
        Command::Bound { run, method, draws, truncate } => {
            let mut cfg = run.resolve()?;
            if let Some(m) = method {
                cfg.bound.method = match m.as_str() {
                    "exact" => PepMethod::Exact,
                    "approx" => PepMethod::Approx,
                    other => bail!("unknown method '{other}' (exact or approx)"),
                };
            }
            if let Some(d) = draws {
                cfg.bound.draws = d;
            }
            cfg.bound.truncate |= truncate;
            let rec = run_bound(&cfg)?;
            run.emit("bound", &cfg, &rec, started)?;
        }
        Command::Compare { run, target } => {
            let cfg = run.resolve()?;
            let cmp = compare(&cfg)?;
            run.emit("compare", &cfg, &cmp.records(), started)?;
            for d in &cfg.detectors {
                match cmp.gap_db(d.name(), target) {
                    Some(g) => eprintln!("{}: PSSM needs {g:.1} dB more power at BER {target}", d.name()),
                    None => eprintln!("{}: a curve does not cross BER {target} on this grid", d.name()),
                }
            }
        }
        Command::Flops { source, iters } => {
            let cfg = load(&source)?;
            println!("detector,flops");
            for kind in [DetectorKind::Mmse, DetectorKind::SicMmse, DetectorKind::Vamp, DetectorKind::Ml] {
                println!("{},{:.6e}", kind.name(), flop_estimate(kind, &cfg.system, iters));
            }
        }
        Command::Show(run) => print!("{}", run.resolve()?.to_toml()),
    }
    Ok(())
}
