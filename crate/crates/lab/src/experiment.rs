//! Running one configured experiment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bflab_core::attack::classify::{mean_overlap_qc, mean_overlap_regular, poisson_prior};
use bflab_core::attack::{
    calibrate_predictions, classify_gamma, classify_gamma_kmeans, dfr_vs_syndrome_weight, reconstruct_spectra_partial,
    run_exgjs, run_gsa, run_pair_scan, Calibration, Campaign, GammaEstimates, PairIndex, PairStats,
    ScanAccumulation, DEFAULT_MIN_SAMPLES,
};
use bflab_core::keyfile::write_key;
use bflab_core::model::{prediction_table, PredictionTable};
use bflab_core::{
    spectrum_from_gamma, EnsembleSpec, GammaMatrix, OracleMetric, ParityCheckMatrix, SimulatedOracle, Structure,
};

use crate::config::{ExperimentConfig, ExperimentKind, PairPolicy};
use crate::error::{config_err, LabError, Result};
use crate::report::{AttackReport, BlockDiff, ClassMean};
use crate::select::stratified_pairs;

/// Pair-level CSVs are skipped above this many slots.
pub const MAX_PAIR_ROWS: usize = 1 << 20;

/// Minimum trials for a syndrome-weight bin to count as populated.
pub const MIN_BIN_TRIALS: u64 = 1000;

/// One output file. The primary file has no suffix; the others are written
/// next to it as `<stem>.<suffix>.csv`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub suffix: Option<&'static str>,
    pub contents: String,
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub files: Vec<OutputFile>,
    pub report: Option<AttackReport>,
    /// Paths written, when the configuration names an output.
    pub written: Vec<PathBuf>,
}

impl Outcome {
    pub fn primary(&self) -> &str {
        self.file(None).unwrap_or("")
    }

    pub fn file(&self, suffix: Option<&str>) -> Option<&str> {
        self.files.iter().find(|f| f.suffix == suffix).map(|f| f.contents.as_str())
    }

    /// Writes every file relative to the primary path `out`.
    pub fn write(&self, out: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for f in &self.files {
            let path = output_path(out, f.suffix);
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|source| LabError::Io { path: dir.to_path_buf(), source })?;
            }
            std::fs::write(&path, &f.contents).map_err(|source| LabError::Io { path: path.clone(), source })?;
            written.push(path);
        }
        Ok(written)
    }
}

/// `runs/x.csv` with suffix `classes` becomes `runs/x.classes.csv`.
pub fn output_path(out: &Path, suffix: Option<&str>) -> PathBuf {
    match suffix {
        None => out.to_path_buf(),
        Some(s) => {
            let stem = out.file_stem().map_or_else(|| "out".into(), |x| x.to_string_lossy().into_owned());
            out.with_file_name(format!("{stem}.{s}.csv"))
        }
    }
}

/// Runs the experiment and writes its files when `config.out` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    let h = config.code.load()?;
    let mut outcome = match config.kind {
        ExperimentKind::KeyGen => Outcome { files: vec![primary(write_key(&h))], ..Default::default() },
        ExperimentKind::Validate => validate(config, &h)?,
        ExperimentKind::Spectrum => spectrum(config, &h)?,
        ExperimentKind::Model => model(config, &h)?,
        ExperimentKind::DfrVsWs => dfr(config, &h)?,
        ExperimentKind::Gsa => gsa(config, &h)?,
        ExperimentKind::ExGjs => exgjs(config, &h)?,
        ExperimentKind::Pairwise => pairwise(config, &h)?,
    };
    if let Some(out) = &config.out {
        outcome.written = outcome.write(out)?;
    }
    Ok(outcome)
}

fn primary(contents: String) -> OutputFile {
    OutputFile { suffix: None, contents }
}

fn with_header(config: &ExperimentConfig, suffix: Option<&'static str>, body: &str) -> OutputFile {
    OutputFile { suffix, contents: format!("{}{body}", config.header()) }
}

fn campaign(config: &ExperimentConfig) -> Campaign {
    Campaign::new(config.seed, config.workers)
}

fn validate(config: &ExperimentConfig, h: &ParityCheckMatrix) -> Result<Outcome> {
    let mut body = String::from("property,value\n");
    let _ = write!(body, "n,{}\nr,{}\nv,{}\nw,{}\n", h.n(), h.r(), h.v(), h.w());
    match h.structure() {
        Structure::General => body.push_str("structure,general\n"),
        Structure::QuasiCyclic { p, n0, .. } => {
            let _ = write!(body, "structure,qc\np,{p}\nn0,{n0}\n");
        }
    }
    let col_ok = h.cols().all(|c| c.len() == h.v());
    let row_ok = h.rows().all(|r| r.len() == h.w());
    let _ = write!(body, "column_weights_regular,{col_ok}\nrow_weights_regular,{row_ok}\n");
    let gamma = GammaMatrix::from_matrix(h)?;
    for (g, count) in gamma.histogram().iter().enumerate().filter(|(_, &c)| c > 0) {
        let _ = writeln!(body, "pairs_gamma_{g},{count}");
    }
    if !(col_ok && row_ok) {
        return Err(config_err("matrix is not regular"));
    }
    Ok(Outcome { files: vec![with_header(config, None, &body)], ..Default::default() })
}

fn spectrum(config: &ExperimentConfig, h: &ParityCheckMatrix) -> Result<Outcome> {
    let gamma = GammaMatrix::from_matrix(h)?;
    let body = if gamma.is_folded() {
        let mut body = String::from("block,distance,multiplicity\n");
        for (b, s) in gamma.block_spectra()?.iter().enumerate() {
            for (d, mu) in s.iter() {
                let _ = writeln!(body, "{b},{d},{mu}");
            }
        }
        body
    } else {
        let mut body = String::from("gamma,pairs\n");
        for (g, c) in gamma.histogram().iter().enumerate() {
            let _ = writeln!(body, "{g},{c}");
        }
        body
    };
    Ok(Outcome { files: vec![with_header(config, None, &body)], ..Default::default() })
}

fn model_gamma_max(config: &ExperimentConfig, h: &ParityCheckMatrix) -> usize {
    config.gamma_max.map_or(5, |g| g as usize).min(h.v())
}

fn model_table(config: &ExperimentConfig, h: &ParityCheckMatrix, gamma_max: usize) -> Result<PredictionTable> {
    Ok(prediction_table(h.n(), h.v(), h.w(), config.t, config.decoder.b as usize, gamma_max)?)
}

fn model(config: &ExperimentConfig, h: &ParityCheckMatrix) -> Result<Outcome> {
    let table = model_table(config, h, model_gamma_max(config, h))?;
    Ok(Outcome { files: vec![with_header(config, None, &table.to_csv())], ..Default::default() })
}

fn dfr(config: &ExperimentConfig, h: &ParityCheckMatrix) -> Result<Outcome> {
    let weight = SimulatedOracle::new(h, config.decoder, OracleMetric::InitialSyndromeWeight)?;
    let failure = SimulatedOracle::new(h, config.decoder, OracleMetric::Failure)?;
    let start = Instant::now();
    let profile = dfr_vs_syndrome_weight(&weight, &failure, config.t, config.budget, campaign(config))?;
    let wall_time = start.elapsed();
    let populated = profile.populated(MIN_BIN_TRIALS);
    let dfr_ratio = match (populated.first(), populated.last()) {
        (Some(lo), Some(hi)) if populated.len() >= 2 => {
            let (a, b) = (lo.1.min(hi.1), lo.1.max(hi.1));
            Some(if a > 0.0 { b / a } else if b > 0.0 { f64::INFINITY } else { 1.0 })
        }
        _ => None,
    };
    let report = AttackReport {
        queries: profile.trials(),
        expected_queries: config.budget,
        wall_time,
        correlation: profile.correlation(MIN_BIN_TRIALS),
        dfr_ratio,
        ..Default::default()
    };
    Ok(Outcome { files: vec![with_header(config, None, &profile.to_csv())], report: Some(report), written: vec![] })
}

/// Largest `γ` worth a mixture component: beyond it fewer than half a slot
/// is expected under a Poisson law with mean `lambda`.
fn poisson_gamma_max(lambda: f64, slots: usize, v: usize) -> usize {
    let mut term = (-lambda).exp();
    let mut tail = 1.0 - term;
    let mut g = 0;
    while g < v && tail * slots as f64 >= 0.5 {
        g += 1;
        term *= lambda / g as f64;
        tail -= term;
    }
    g.max(1)
}

struct Classified {
    estimates: GammaEstimates,
    calibration: Option<Calibration>,
    table: Option<PredictionTable>,
    gamma_max: usize,
}

/// Attacker-side classification. Uses only `stats`, the public code
/// parameters and the model.
fn classify(config: &ExperimentConfig, h: &ParityCheckMatrix, stats: &PairStats, prior_known: bool) -> Result<Classified> {
    let lambda = match h.qc_shape() {
        Some((p, _)) => mean_overlap_qc(p, h.v()),
        None => mean_overlap_regular(h.n(), h.v(), h.w()),
    };
    let slots = stats.counts().iter().filter(|&&b| b > 0).count();
    let gamma_max = config
        .gamma_max
        .map_or_else(|| poisson_gamma_max(lambda, slots, h.v()), |g| g as usize)
        .min(h.v());
    let table = model_table(config, h, gamma_max).ok();
    let predictions = table.as_ref().and_then(|t| t.metric_column(config.metric));
    if let Some(pred) = predictions {
        let prior = if prior_known { poisson_prior(lambda, gamma_max) } else { vec![1.0; gamma_max + 1] };
        if let Ok(cal) = calibrate_predictions(stats, &pred, &prior, DEFAULT_MIN_SAMPLES) {
            if let Ok(estimates) = classify_gamma(stats, &cal.predictions, DEFAULT_MIN_SAMPLES) {
                return Ok(Classified { estimates, calibration: Some(cal), table, gamma_max });
            }
        }
        if let Ok(estimates) = classify_gamma(stats, &pred, DEFAULT_MIN_SAMPLES) {
            return Ok(Classified { estimates, calibration: None, table, gamma_max });
        }
    }
    // Too few well-sampled slots to cluster leaves everything unclassified.
    let estimates = classify_gamma_kmeans(stats, gamma_max + 1, DEFAULT_MIN_SAMPLES, config.seed)
        .map_or_else(|_| GammaEstimates::unassigned(stats), |fit| fit.estimates);
    Ok(Classified { estimates, calibration: None, table, gamma_max })
}

fn class_means(stats: &PairStats, gamma: &GammaMatrix, metric: OracleMetric, table: Option<&PredictionTable>) -> Result<Vec<ClassMean>> {
    let column = table.and_then(|t| t.metric_column(metric));
    Ok(stats
        .aggregate_by_gamma(gamma)?
        .into_iter()
        .enumerate()
        .filter(|(_, (_, b))| *b > 0)
        .map(|(g, (a, b))| ClassMean {
            gamma: g as u8,
            samples: b,
            metric_sum: a,
            mean: a as f64 / b as f64,
            predicted: column.as_ref().and_then(|c| c.get(g).copied()),
        })
        .collect())
}

fn classes_csv(classes: &[ClassMean]) -> String {
    let mut out = String::from("gamma,samples,metric_sum,mean,predicted\n");
    for c in classes {
        let pred = c.predicted.map_or(String::new(), |p| format!("{p:.6}"));
        let _ = writeln!(out, "{},{},{},{:.6},{pred}", c.gamma, c.samples, c.metric_sum, c.mean);
    }
    out
}

/// Per-block comparison of reconstructed and true spectra. `scanned`
/// lists directly scanned `(block, distance)` classes.
fn spectra_diff(estimates: &GammaEstimates, gamma: &GammaMatrix, scanned: &[(usize, usize)]) -> Result<(Vec<BlockDiff>, String)> {
    let (p, _) = gamma.qc_shape().ok_or(bflab_core::Error::NotQuasiCyclic)?;
    let truth = gamma.block_spectra()?;
    let partial = reconstruct_spectra_partial(estimates)?;
    let mut diffs = Vec::new();
    let mut csv = String::from("block,distance,true_multiplicity,estimated_multiplicity,scanned\n");
    for (block, classes) in partial.iter().enumerate() {
        let missing = classes.iter().filter(|c| c.is_none()).count();
        let gammas: Vec<u32> = classes.iter().map(|c| c.unwrap_or(0) as u32).collect();
        let recon = spectrum_from_gamma(&gammas, p)?;
        let wrong: Vec<usize> = (1..=p / 2)
            .filter(|&d| classes[d - 1].is_none() || recon.multiplicity(d) != truth[block].multiplicity(d))
            .collect();
        let in_block: Vec<usize> = scanned.iter().filter(|s| s.0 == block).map(|s| s.1).collect();
        let wrong_scanned = wrong.iter().copied().filter(|d| in_block.contains(d)).collect();
        for d in 1..=p / 2 {
            let est = classes[d - 1].map_or(String::new(), |_| recon.multiplicity(d).to_string());
            let _ = writeln!(csv, "{block},{d},{},{est},{}", truth[block].multiplicity(d), in_block.contains(&d) as u8);
        }
        diffs.push(BlockDiff { block, missing, wrong, scanned: in_block.len(), wrong_scanned });
    }
    Ok((diffs, csv))
}

/// Attack outputs shared by the GSA, Ex-GJS and pairwise experiments.
#[allow(clippy::too_many_arguments)]
fn evaluate(
    config: &ExperimentConfig,
    h: &ParityCheckMatrix,
    gamma: &GammaMatrix,
    stats: &PairStats,
    prior_known: bool,
    scanned: &[(u32, u32)],
    report: &mut AttackReport,
    files: &mut Vec<OutputFile>,
) -> Result<()> {
    let classified = classify(config, h, stats, prior_known)?;
    let gmax = classified.gamma_max as u8;
    report.gamma_max = Some(gmax);
    report.classes = class_means(stats, gamma, config.metric, classified.table.as_ref())?;
    report.calibration = classified.calibration.clone();
    report.overall_accuracy = Some(classified.estimates.accuracy(gamma, gmax)?);
    if !scanned.is_empty() {
        let mut acc = (0, 0);
        for &(i, j) in scanned {
            let truth = gamma.get(i as usize, j as usize)?;
            let slot = stats.index().slot(i, j).ok_or_else(|| config_err("scanned pair not tracked"))?;
            let est = classified.estimates.entries.iter().find(|e| e.slot == slot).and_then(|e| e.gamma);
            if truth <= gmax {
                acc.1 += 1;
                acc.0 += (est == Some(truth)) as usize;
            }
        }
        report.scanned_accuracy = Some(acc);
    }
    files.push(with_header(config, Some("classes"), &classes_csv(&report.classes)));
    files.push(with_header(config, Some("estimates"), &classified.estimates.to_csv(Some(gamma))?));
    if let Some((p, _)) = gamma.qc_shape() {
        if matches!(stats.index(), PairIndex::QcFolded { .. }) {
            let scanned_classes: Vec<(usize, usize)> = scanned
                .iter()
                .filter(|(i, j)| (*i as usize) / p == (*j as usize) / p)
                .map(|&(i, j)| {
                    let d = (j as usize).abs_diff(i as usize);
                    ((i as usize) / p, d.min(p - d))
                })
                .collect();
            let (diffs, csv) = spectra_diff(&classified.estimates, gamma, &scanned_classes)?;
            report.spectra = diffs;
            files.push(with_header(config, Some("spectra"), &csv));
        }
    }
    Ok(())
}

fn gsa(config: &ExperimentConfig, h: &ParityCheckMatrix) -> Result<Outcome> {
    let gamma = GammaMatrix::from_matrix(h)?;
    let index = match h.qc_shape() {
        Some((p, n0)) => PairIndex::qc_folded(p, n0)?,
        None => PairIndex::dense(h.n())?,
    };
    let oracle = SimulatedOracle::new(h, config.decoder, config.metric)?;
    let spec = EnsembleSpec::uniform(h.n(), config.t);
    let start = Instant::now();
    let stats = run_gsa(&oracle, &spec, config.budget, index, campaign(config))?;
    let mut report = AttackReport {
        queries: stats.queries(),
        expected_queries: config.budget,
        wall_time: start.elapsed(),
        ..Default::default()
    };
    let mut files = Vec::new();
    evaluate(config, h, &gamma, &stats, true, &[], &mut report, &mut files)?;
    let classes = files.remove(0);
    files.insert(0, OutputFile { suffix: None, contents: classes.contents });
    if stats.index().len() <= MAX_PAIR_ROWS {
        files.push(with_header(config, Some("pairs"), &stats.to_csv(Some(&gamma))?));
    }
    Ok(Outcome { files, report: Some(report), written: vec![] })
}

fn exgjs(config: &ExperimentConfig, h: &ParityCheckMatrix) -> Result<Outcome> {
    let (p, n0) = h.qc_shape().ok_or(bflab_core::Error::NotQuasiCyclic)?;
    let gamma = GammaMatrix::from_matrix(h)?;
    let oracle = SimulatedOracle::new(h, config.decoder, config.metric)?;
    let spec = EnsembleSpec::uniform(h.n(), config.t);
    let start = Instant::now();
    let stats = run_exgjs(&oracle, &spec, config.budget, p, n0, campaign(config))?;
    let mut report = AttackReport {
        queries: stats.queries(),
        expected_queries: config.budget,
        wall_time: start.elapsed(),
        ..Default::default()
    };
    let mut files = vec![with_header(config, None, &stats.to_csv(Some(&gamma.block_spectra()?))?)];
    evaluate(config, h, &gamma, &stats.to_pair_stats()?, true, &[], &mut report, &mut files)?;
    Ok(Outcome { files, report: Some(report), written: vec![] })
}

fn pairwise(config: &ExperimentConfig, h: &ParityCheckMatrix) -> Result<Outcome> {
    let gamma = GammaMatrix::from_matrix(h)?;
    let pairs = match &config.pairs {
        PairPolicy::Stratified { pairs, gamma_max } => stratified_pairs(&gamma, *pairs, *gamma_max, config.seed)?,
        PairPolicy::Explicit(p) => p.clone(),
        PairPolicy::Uniform => unreachable!("rejected by validate"),
    };
    let oracle = SimulatedOracle::new(h, config.decoder, config.metric)?;
    // On quasi-cyclic codes every support pair of every query is credited to
    // its shift class; otherwise only the scanned pair is.
    let (accumulation, prior_known) = match h.qc_shape() {
        Some((p, n0)) => (ScanAccumulation::AllPairs(PairIndex::qc_folded(p, n0)?), true),
        None => (ScanAccumulation::Anchored, false),
    };
    let start = Instant::now();
    let stats = run_pair_scan(&oracle, config.t, &pairs, config.budget, accumulation, campaign(config))?;
    let mut report = AttackReport {
        queries: stats.queries(),
        expected_queries: config.budget * pairs.len() as u64,
        wall_time: start.elapsed(),
        ..Default::default()
    };
    let mut files = vec![with_header(config, None, &stats.to_csv(Some(&gamma))?)];
    evaluate(config, h, &gamma, &stats, prior_known, &pairs, &mut report, &mut files)?;
    Ok(Outcome { files, report: Some(report), written: vec![] })
}
