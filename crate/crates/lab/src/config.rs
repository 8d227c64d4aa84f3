//! Experiment configuration.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use bflab_core::{gen_qc, gen_regular, keyfile, DecoderConfig, OracleMetric, ParityCheckMatrix};

use crate::error::{config_err, LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    KeyGen,
    DfrVsWs,
    Pairwise,
    Gsa,
    ExGjs,
    Model,
    Spectrum,
    Validate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::KeyGen,
        ExperimentKind::DfrVsWs,
        ExperimentKind::Pairwise,
        ExperimentKind::Gsa,
        ExperimentKind::ExGjs,
        ExperimentKind::Model,
        ExperimentKind::Spectrum,
        ExperimentKind::Validate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::KeyGen => "keygen",
            ExperimentKind::DfrVsWs => "dfr-vs-ws",
            ExperimentKind::Pairwise => "pairwise",
            ExperimentKind::Gsa => "gsa",
            ExperimentKind::ExGjs => "exgjs",
            ExperimentKind::Model => "model",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Validate => "validate",
        }
    }

    /// Whether the experiment issues oracle queries.
    pub fn queries_oracle(&self) -> bool {
        matches!(
            self,
            ExperimentKind::DfrVsWs | ExperimentKind::Pairwise | ExperimentKind::Gsa | ExperimentKind::ExGjs
        )
    }

    /// Default budget: total queries, or queries per pair for scans.
    pub fn default_budget(&self) -> u64 {
        match self {
            ExperimentKind::Pairwise => 10_000,
            k if k.queries_oracle() => 1_000_000,
            _ => 1,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| config_err(format!("unknown experiment kind {s:?}")))
    }
}

/// Where the parity-check matrix comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodeSource {
    /// Gallager `(v, w)`-regular code.
    Regular { n: usize, r: usize, v: usize, w: usize, seed: u64 },
    /// Quasi-cyclic code with `n0` circulant blocks of size `p`.
    Qc { p: usize, n0: usize, v: usize, seed: u64 },
    KeyFile(PathBuf),
}

impl CodeSource {
    pub fn load(&self) -> Result<ParityCheckMatrix> {
        Ok(match self {
            CodeSource::Regular { n, r, v, w, seed } => gen_regular(*n, *r, *v, *w, *seed)?,
            CodeSource::Qc { p, n0, v, seed } => gen_qc(*p, *n0, *v, *seed)?,
            CodeSource::KeyFile(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| LabError::Io { path: path.clone(), source })?;
                keyfile::parse_key(&text)?
            }
        })
    }

    fn header(&self, out: &mut String) {
        match self {
            CodeSource::Regular { n, r, v, w, seed } => {
                let _ = write!(out, "# code=regular\n# n={n}\n# r={r}\n# v={v}\n# w={w}\n# code_seed={seed}\n");
            }
            CodeSource::Qc { p, n0, v, seed } => {
                let _ = write!(out, "# code=qc\n# p={p}\n# n0={n0}\n# v={v}\n# code_seed={seed}\n");
            }
            CodeSource::KeyFile(path) => {
                let _ = writeln!(out, "# code=keyfile\n# key={}", path.display());
            }
        }
    }
}

/// Which pairs a pairwise scan targets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairPolicy {
    /// Uniform weight-`t` queries, no fixed pair.
    Uniform,
    /// `pairs` pairs (same-block shift classes for quasi-cyclic codes) spread
    /// evenly over the intersection counts present, optionally capped at
    /// `gamma_max`. Selection uses the secret key and belongs to the
    /// evaluator.
    Stratified { pairs: usize, gamma_max: Option<u8> },
    Explicit(Vec<(u32, u32)>),
}

impl fmt::Display for PairPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairPolicy::Uniform => f.write_str("uniform"),
            PairPolicy::Stratified { pairs, gamma_max: None } => write!(f, "stratified:{pairs}"),
            PairPolicy::Stratified { pairs, gamma_max: Some(g) } => write!(f, "stratified:{pairs}:max{g}"),
            PairPolicy::Explicit(pairs) => {
                let list: Vec<String> = pairs.iter().map(|(i, j)| format!("{i}-{j}")).collect();
                write!(f, "explicit:{}", list.join(";"))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub code: CodeSource,
    pub decoder: DecoderConfig,
    pub t: usize,
    pub pairs: PairPolicy,
    /// Total queries, or queries per pair for pairwise scans.
    pub budget: u64,
    pub metric: OracleMetric,
    pub workers: usize,
    pub seed: u64,
    /// Largest `γ` for model tables and classification; chosen from the code
    /// when `None`.
    pub gamma_max: Option<u8>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults: `t = 58`, `i_max = 5`, `b = 15`, failure metric, one
    /// worker, seed 0.
    pub fn new(kind: ExperimentKind, code: CodeSource) -> Self {
        let pairs = match kind {
            ExperimentKind::Pairwise => PairPolicy::Stratified { pairs: 200, gamma_max: None },
            _ => PairPolicy::Uniform,
        };
        ExperimentConfig {
            kind,
            code,
            decoder: DecoderConfig::new(5, 15),
            t: 58,
            pairs,
            budget: kind.default_budget(),
            metric: OracleMetric::Failure,
            workers: 1,
            seed: 0,
            gamma_max: None,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(config_err("budget must be positive"));
        }
        if self.workers == 0 {
            return Err(config_err("worker count must be positive"));
        }
        if self.decoder.i_max == 0 || self.decoder.b == 0 {
            return Err(config_err("--imax and --b must be positive"));
        }
        match self.kind {
            ExperimentKind::DfrVsWs if self.metric != OracleMetric::Failure => {
                return Err(config_err("dfr-vs-ws measures failures; use --metric failure"));
            }
            ExperimentKind::Pairwise if self.pairs == PairPolicy::Uniform => {
                return Err(config_err("pairwise scans need a stratified or explicit pair policy"));
            }
            ExperimentKind::Pairwise if self.t < 2 => {
                return Err(config_err("pairwise scans need t ≥ 2"));
            }
            _ => {}
        }
        match &self.pairs {
            PairPolicy::Stratified { pairs: 0, .. } => Err(config_err("stratified policy needs at least one pair")),
            PairPolicy::Explicit(p) if p.is_empty() => Err(config_err("explicit pair list is empty")),
            _ => Ok(()),
        }
    }

    /// `# key=value` lines describing everything that determines the output.
    /// The worker count is left out since it does not affect results.
    pub fn header(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# experiment={}", self.kind);
        self.code.header(&mut out);
        if self.kind.queries_oracle() || self.kind == ExperimentKind::Model {
            let _ = write!(out, "# t={}\n# b={}\n# i_max={}\n", self.t, self.decoder.b, self.decoder.i_max);
        }
        if self.kind.queries_oracle() {
            let _ = write!(
                out,
                "# metric={}\n# budget={}\n# pairs={}\n# seed={}\n",
                self.metric, self.budget, self.pairs, self.seed
            );
        }
        if let Some(g) = self.gamma_max {
            let _ = writeln!(out, "# gamma_max={g}");
        }
        out
    }
}
