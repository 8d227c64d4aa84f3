use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bflab::{preset, run_experiment, CodeSource, ExperimentConfig, ExperimentKind, LabError, PairPolicy, PRESETS};
use bflab_core::OracleMetric;

#[derive(Parser)]
#[command(name = "bflab", version, about = "Bit-flipping decoder side-channel laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key file.
    Keygen(Plain),
    /// Failure rate against initial syndrome weight.
    DfrVsWs(Plain),
    /// Scan fixed-pair ensembles and classify intersection counts.
    Pairwise(Plain),
    /// Pair statistics over uniform queries.
    Gsa(Plain),
    /// Distance statistics over uniform queries on a quasi-cyclic code.
    Exgjs(Plain),
    /// First-iteration model predictions.
    Model(Plain),
    /// Distance spectra or intersection histogram of a key.
    Spectrum(Plain),
    /// Check a key and summarise it.
    Validate(Plain),
    /// Run a named configuration; flags override its settings.
    Preset {
        /// One of fig1a, fig1b, fig2a, fig2b, fig3a, fig3b, fig4a, fig4b,
        /// table1a, table1b.
        name: Option<String>,
        /// List the preset names.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct Plain {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Default)]
struct CodeArgs {
    /// Key file to load instead of generating a code.
    #[arg(long)]
    key: Option<PathBuf>,
    /// Code length of a generated regular code.
    #[arg(long)]
    n: Option<usize>,
    /// Redundancy of a generated regular code (default n/2).
    #[arg(long)]
    r: Option<usize>,
    /// Column weight.
    #[arg(long)]
    v: Option<usize>,
    /// Row weight of a generated regular code.
    #[arg(long)]
    w: Option<usize>,
    /// Circulant size of a generated quasi-cyclic code.
    #[arg(long)]
    p: Option<usize>,
    /// Number of circulant blocks (default 2).
    #[arg(long)]
    n0: Option<usize>,
    /// Seed of the generated code.
    #[arg(long)]
    code_seed: Option<u64>,
}

#[derive(Args, Default)]
struct RunArgs {
    /// Master seed for queries and target selection.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Primary output file; extra files go next to it. Stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Total queries, or queries per pair for pairwise scans.
    #[arg(long)]
    budget: Option<u64>,
    /// failure, iterations, syndrome-weight, residual-errors,
    /// syndrome-weight-iter1 or flips-iter1.
    #[arg(long)]
    metric: Option<String>,
    /// Error weight.
    #[arg(long)]
    t: Option<usize>,
    /// Flip threshold.
    #[arg(long)]
    b: Option<u32>,
    /// Maximum decoder iterations.
    #[arg(long)]
    imax: Option<u32>,
    /// Number of stratified pairs for pairwise scans.
    #[arg(long)]
    pairs: Option<usize>,
    /// Largest intersection count for model tables and classification.
    #[arg(long)]
    gamma_max: Option<u8>,
}

fn code_source(c: &CodeArgs) -> Result<Option<CodeSource>, LabError> {
    let seed = c.code_seed.unwrap_or(0);
    let missing = |what: &str| LabError::Config(format!("missing --{what}"));
    if let Some(path) = &c.key {
        return Ok(Some(CodeSource::KeyFile(path.clone())));
    }
    if let Some(p) = c.p {
        let v = c.v.ok_or_else(|| missing("v"))?;
        return Ok(Some(CodeSource::Qc { p, n0: c.n0.unwrap_or(2), v, seed }));
    }
    if let Some(n) = c.n {
        let v = c.v.ok_or_else(|| missing("v"))?;
        let w = c.w.ok_or_else(|| missing("w"))?;
        return Ok(Some(CodeSource::Regular { n, r: c.r.unwrap_or(n / 2), v, w, seed }));
    }
    Ok(None)
}

fn apply(config: &mut ExperimentConfig, run: &RunArgs) -> Result<(), LabError> {
    if let Some(s) = run.seed {
        config.seed = s;
    }
    if let Some(w) = run.workers {
        config.workers = w;
    }
    if let Some(o) = &run.out {
        config.out = Some(o.clone());
    }
    if let Some(b) = run.budget {
        config.budget = b;
    }
    if let Some(m) = &run.metric {
        config.metric = m.parse::<OracleMetric>()?;
    }
    if let Some(t) = run.t {
        config.t = t;
    }
    if let Some(b) = run.b {
        config.decoder.b = b;
    }
    if let Some(i) = run.imax {
        config.decoder.i_max = i;
    }
    if let Some(p) = run.pairs {
        let cap = match config.pairs {
            PairPolicy::Stratified { gamma_max, .. } => gamma_max,
            _ => None,
        };
        config.pairs = PairPolicy::Stratified { pairs: p, gamma_max: cap };
    }
    if let Some(g) = run.gamma_max {
        config.gamma_max = Some(g);
    }
    Ok(())
}

fn build(cli: Cli) -> Result<Option<ExperimentConfig>, LabError> {
    let (kind, plain) = match cli.command {
        Command::Preset { name, list, code, run } => {
            if list {
                println!("{}", PRESETS.join("\n"));
                return Ok(None);
            }
            let name = name.ok_or_else(|| LabError::Config("missing preset name".into()))?;
            let mut config = preset(&name)?;
            if let Some(source) = code_source(&code)? {
                config.code = source;
            }
            apply(&mut config, &run)?;
            return Ok(Some(config));
        }
        Command::Keygen(p) => (ExperimentKind::KeyGen, p),
        Command::DfrVsWs(p) => (ExperimentKind::DfrVsWs, p),
        Command::Pairwise(p) => (ExperimentKind::Pairwise, p),
        Command::Gsa(p) => (ExperimentKind::Gsa, p),
        Command::Exgjs(p) => (ExperimentKind::ExGjs, p),
        Command::Model(p) => (ExperimentKind::Model, p),
        Command::Spectrum(p) => (ExperimentKind::Spectrum, p),
        Command::Validate(p) => (ExperimentKind::Validate, p),
    };
    let source = code_source(&plain.code)?
        .ok_or_else(|| LabError::Config("give --key, --p with --v, or --n with --v and --w".into()))?;
    let mut config = ExperimentConfig::new(kind, source);
    apply(&mut config, &plain.run)?;
    Ok(Some(config))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build(cli).and_then(|config| match config {
        None => Ok(()),
        Some(config) => {
            let outcome = run_experiment(&config)?;
            if config.out.is_none() {
                print!("{}", outcome.primary());
            }
            for path in &outcome.written {
                eprintln!("wrote {}", path.display());
            }
            if let Some(report) = &outcome.report {
                eprint!("{}", report.to_text());
            }
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
