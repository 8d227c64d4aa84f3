//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion numbers to run a subset, e.g.
//! `cargo test -p bflab --test acceptance -- 1 5 7`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use bflab::select::stratified_pairs;
use bflab::{preset, run_experiment, CodeSource, ExperimentConfig, ExperimentKind, PairPolicy};
use bflab_core::attack::{run_gsa, Campaign, PairIndex};
use bflab_core::model::{expected_flips, expected_residual, partition_law, predict, ModelParams};
use bflab_core::rng::{stream, Domain};
use bflab_core::{
    decode, distance_spectrum, gen_qc, gen_regular, sample_error, spectrum_from_gamma, DecodeTrace, DecoderConfig,
    DecryptionOracle, EnsembleSpec, ErrorVector, GammaMatrix, IterationRecord, OracleMetric, ParityCheckMatrix,
    SimulatedOracle,
};

type Outcome = Result<String, String>;

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {:.1} s, limit {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

fn strictly(xs: &[f64], increasing: bool) -> bool {
    xs.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

const TABLE_THEORY_A: [f64; 5] = [48.98, 48.76, 48.55, 48.34, 48.15];
const TABLE_THEORY_B: [f64; 4] = [33.64, 33.73, 33.80, 33.86];
const TABLE_SIM_A: [f64; 5] = [49.59, 49.33, 49.07, 48.81, 48.55];
const TABLE_SIM_B: [f64; 4] = [33.63, 33.72, 33.80, 33.86];

fn table_theory() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for ((v, w), expected) in [((25, 50), &TABLE_THEORY_A[..]), ((20, 40), &TABLE_THEORY_B[..])] {
        for (g, &want) in expected.iter().enumerate() {
            let got = expected_residual(&ModelParams::new(5000, v, w, 58, 15, g)).map_err(|e| e.to_string())?;
            let rounded = (got * 100.0).round() / 100.0;
            if (rounded - want).abs() > 0.01 + 1e-9 {
                return Err(format!("({v},{w}) γ={g}: {got:.4} vs {want}"));
            }
            worst = worst.max((got - want).abs());
        }
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("9 values, largest deviation {worst:.4}, {:.2} s", start.elapsed().as_secs_f64()))
}

fn table_simulated() -> Outcome {
    let start = Instant::now();
    let mut summary = Vec::new();
    let mut gap: f64 = 0.0;
    for (name, (v, w), sim, theory, increasing) in [
        ("table1a", (25, 50), &TABLE_SIM_A[..], &TABLE_THEORY_A[..], false),
        ("table1b", (20, 40), &TABLE_SIM_B[..], &TABLE_THEORY_B[..], true),
    ] {
        let mut c = preset(name).map_err(|e| e.to_string())?;
        c.workers = workers();
        let report = run_experiment(&c).map_err(|e| e.to_string())?.report.ok_or("no report")?;
        let means: Vec<f64> = report.classes.iter().map(|c| c.mean).collect();
        if report.classes.len() != sim.len() || report.classes.iter().any(|c| c.samples != 1_000_000) {
            let got: Vec<(u8, u64)> = report.classes.iter().map(|c| (c.gamma, c.samples)).collect();
            return Err(format!("{name}: expected 10⁶ samples for γ = 0..{}, got {got:?}", sim.len() - 1));
        }
        for (g, &m) in means.iter().enumerate() {
            if (m - sim[g]).abs() > 0.3 || (m - theory[g]).abs() > 0.8 {
                return Err(format!("{name} γ={g}: simulated {m:.3}, published {}, model {}", sim[g], theory[g]));
            }
            // The model itself, unrounded, must stay within 0.7 of the simulation.
            let model = expected_residual(&ModelParams::new(5000, v, w, 58, 15, g)).map_err(|e| e.to_string())?;
            if (m - model).abs() > 0.7 {
                return Err(format!("{name} γ={g}: simulated {m:.3}, model {model:.3}, gap above 0.7"));
            }
            gap = gap.max((m - model).abs());
        }
        if !strictly(&means, increasing) {
            return Err(format!("{name}: trend broken in {}", fmt_list(&means)));
        }
        summary.push(format!("{name} {}", fmt_list(&means)));
    }
    within(start.elapsed(), Duration::from_secs(30 * 60))?;
    Ok(format!("{}, model gap {gap:.3}, {:.0} s", summary.join("; "), start.elapsed().as_secs_f64()))
}

/// Indices `0..xs.len()` sorted by value.
fn ranks(xs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    idx
}

fn failure_ordering() -> Outcome {
    let h = bflab::preset::code_b().load().map_err(|e| e.to_string())?;
    let gamma = GammaMatrix::from_matrix(&h).map_err(|e| e.to_string())?;
    let spec = EnsembleSpec::uniform(h.n(), 58);
    let campaign = Campaign::new(3, workers());
    let mut means = Vec::new();
    for metric in [OracleMetric::Failure, OracleMetric::ResidualErrorsAfterIter1] {
        let oracle = SimulatedOracle::new(&h, DecoderConfig::new(5, 15), metric).map_err(|e| e.to_string())?;
        let index = PairIndex::dense(h.n()).map_err(|e| e.to_string())?;
        let stats = run_gsa(&oracle, &spec, 1_000_000, index, campaign).map_err(|e| e.to_string())?;
        means.push(stats.aggregate_by_gamma(&gamma).map_err(|e| e.to_string())?);
    }
    let classes: Vec<usize> = (0..means[0].len()).filter(|&g| means[0][g].1 >= 1000).collect();
    if classes.len() < 2 {
        return Err(format!("only {} classes with 10³ samples", classes.len()));
    }
    let col = |k: usize| -> Vec<f64> { classes.iter().map(|&g| means[k][g].0 as f64 / means[k][g].1 as f64).collect() };
    let (dfr, residual) = (col(0), col(1));
    let counts: Vec<u64> = classes.iter().map(|&g| means[0][g].1).collect();
    let detail = format!("γ {classes:?}, samples {counts:?}: DFR {} t′ {}", fmt_list(&dfr), fmt_list(&residual));
    if ranks(&dfr) == ranks(&residual) {
        Ok(detail)
    } else {
        Err(format!("rank orders differ; {detail}"))
    }
}

fn syndrome_weight_trends() -> Outcome {
    let mut parts = Vec::new();
    let mut signs = Vec::new();
    for name in ["fig1a", "fig1b"] {
        let mut c = preset(name).map_err(|e| e.to_string())?;
        c.workers = workers();
        let report = run_experiment(&c).map_err(|e| e.to_string())?.report.ok_or("no report")?;
        let r = report.correlation.ok_or(format!("{name}: no correlation"))?;
        let ratio = report.dfr_ratio.ok_or(format!("{name}: fewer than two populated bins"))?;
        if ratio < 2.0 {
            return Err(format!("{name}: extreme-bin ratio {ratio:.2} below 2"));
        }
        signs.push(r.signum());
        parts.push(format!("{name} r={r:.3} ratio={ratio:.2}"));
    }
    if signs[0] == signs[1] || signs.contains(&0.0) {
        return Err(format!("correlations share a sign: {}", parts.join(", ")));
    }
    Ok(parts.join(", "))
}

fn gamma_distance_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(5, Domain::Synthetic, 0);
    for k in 0..100u64 {
        let v = rng.gen_range(1..=15);
        let p = rng.gen_range(v + 1..=499);
        let h = gen_qc(p, 1, v, k).map_err(|e| e.to_string())?;
        let gammas: Vec<u32> =
            (1..=p / 2).map(|d| h.column_intersection(0, d).map(|g| g as u32)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let from_gamma = spectrum_from_gamma(&gammas, p).map_err(|e| e.to_string())?;
        let direct = distance_spectrum(h.col(0), p).map_err(|e| e.to_string())?;
        if let Some(d) = (1..=p / 2).find(|&d| from_gamma.multiplicity(d) != direct.multiplicity(d)) {
            return Err(format!("circulant {k} (p={p}, v={v}) differs at distance {d}"));
        }
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("100 circulants, {:.2} s", start.elapsed().as_secs_f64()))
}

fn qc_attack() -> Outcome {
    let start = Instant::now();
    let mut c: ExperimentConfig = preset("fig4a").map_err(|e| e.to_string())?;
    c.pairs = PairPolicy::Stratified { pairs: 200, gamma_max: Some(5) };
    c.gamma_max = Some(5);
    c.budget = 10_000;
    c.workers = workers();
    let report = run_experiment(&c).map_err(|e| e.to_string())?.report.ok_or("no report")?;
    let (correct, total) = report.scanned_accuracy.ok_or("no accuracy")?;
    let wrong: usize = report.spectra.iter().map(|b| b.wrong_scanned.len()).sum();
    let scanned: usize = report.spectra.iter().map(|b| b.scanned).sum();
    let detail = format!(
        "{correct}/{total} scanned classes correct, {wrong} of {scanned} scanned spectrum entries wrong, {:.0} s",
        start.elapsed().as_secs_f64()
    );
    if total < 200 || scanned < 200 {
        return Err(format!("too few classes; {detail}"));
    }
    if (correct as f64) < 0.95 * total as f64 || wrong > 0 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(2 * 3600))?;
    Ok(detail)
}

/// Bit flipping on a dense 0/1 matrix, written out step by step.
fn interpret(h: &[Vec<u8>], n: usize, e: &[usize], i_max: u32, b: u32, with_truth: bool) -> DecodeTrace {
    let r = h.len();
    let mut err = vec![0u8; n];
    for &j in e {
        err[j] = 1;
    }
    let mut s = vec![0u8; r];
    for l in 0..r {
        for j in 0..n {
            s[l] ^= h[l][j] & err[j];
        }
    }
    let initial = s.iter().filter(|&&x| x == 1).count();
    let mut est = vec![0u8; n];
    let mut iterations = Vec::new();
    let mut it = 0;
    while s.iter().any(|&x| x == 1) && it < i_max {
        let mut sigma = vec![0u32; n];
        for j in 0..n {
            for l in 0..r {
                sigma[j] += (h[l][j] & s[l]) as u32;
            }
        }
        let flips: Vec<u32> = (0..n).filter(|&j| sigma[j] >= b).map(|j| j as u32).collect();
        for &j in &flips {
            est[j as usize] ^= 1;
            for l in 0..r {
                s[l] ^= h[l][j as usize];
            }
        }
        let residual = (0..n).filter(|&j| err[j] != est[j]).count();
        iterations.push(IterationRecord {
            flips,
            syndrome_weight: s.iter().filter(|&&x| x == 1).count(),
            residual_errors: with_truth.then_some(residual),
        });
        it += 1;
    }
    DecodeTrace {
        failure: s.iter().any(|&x| x == 1),
        initial_syndrome_weight: initial,
        iterations,
        estimate: (0..n).filter(|&j| est[j] == 1).map(|j| j as u32).collect(),
        true_weight: with_truth.then_some(e.len()),
    }
}

fn dense(h: &ParityCheckMatrix) -> Vec<Vec<u8>> {
    h.rows()
        .map(|row| {
            let mut d = vec![0u8; h.n()];
            for &j in row {
                d[j as usize] = 1;
            }
            d
        })
        .collect()
}

fn decoder_equivalence() -> Outcome {
    let codes = [
        gen_regular(12, 6, 3, 6, 1),
        gen_regular(16, 8, 2, 4, 2),
        gen_regular(12, 6, 2, 4, 3),
        gen_regular(16, 12, 3, 4, 4),
        gen_qc(7, 2, 3, 5),
    ];
    let mut traces = 0;
    for h in codes {
        let h = h.map_err(|e| e.to_string())?;
        let n = h.n();
        let d = dense(&h);
        let mut patterns: Vec<Vec<usize>> = vec![vec![]];
        patterns.extend((0..n).map(|i| vec![i]));
        patterns.extend((0..n).flat_map(|i| (i + 1..n).map(move |j| vec![i, j])));
        for pattern in &patterns {
            let e = ErrorVector::new(n, pattern.iter().map(|&j| j as u32).collect()).map_err(|e| e.to_string())?;
            let s = bflab_core::syndrome(&h, &e).map_err(|e| e.to_string())?;
            for i_max in [1, 2, 5] {
                for b in 1..=h.v() as u32 {
                    for with_truth in [false, true] {
                        let cfg = DecoderConfig::new(i_max, b);
                        let got = decode(&h, &s, cfg, with_truth.then_some(&e)).map_err(|e| e.to_string())?;
                        let want = interpret(&d, n, pattern, i_max, b, with_truth);
                        if got != want {
                            return Err(format!("n={n} e={pattern:?} i_max={i_max} b={b}: {got:?} vs {want:?}"));
                        }
                        traces += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{traces} traces identical"))
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn model_consistency() -> Outcome {
    let mut rng = stream(8, Domain::Synthetic, 0);
    let (mut points, mut worst) = (0, 0f64);
    while points < 10_000 {
        let w = rng.gen_range(3..60usize);
        let v = rng.gen_range(1..40usize);
        let n = 2 * v * (w - 1) + w + 3 + rng.gen_range(0..5000usize);
        let t = rng.gen_range(2..=n.min(150));
        let b = rng.gen_range(1..=v);
        let gamma = rng.gen_range(0..=v);
        let params = ModelParams::new(n, v, w, t, b, gamma);
        if params.validate().is_err() {
            continue;
        }
        points += 1;
        let pred = predict(&params).map_err(|e| e.to_string())?;
        if pred.sizes.total() != n - 2 {
            return Err(format!("{params:?}: partition sizes sum to {}", pred.sizes.total()));
        }
        let probs = pred.unsat.p.iter().flatten().chain(&pred.unsat.p_e).chain(pred.flip.p.iter().flatten()).chain([&pred.flip.p_e]);
        if let Some(x) = probs.copied().find(|&x| !unit(x)) {
            return Err(format!("{params:?}: probability {x}"));
        }
        let law = partition_law(&pred.sizes, t);
        if law.iter().any(|term| !unit(term.prob) || term.t.iter().sum::<usize>() != t - 2) {
            return Err(format!("{params:?}: bad partition term"));
        }
        let total: f64 = law.iter().map(|term| term.prob).sum();
        worst = worst.max((total - 1.0).abs());
        if (total - 1.0).abs() > 1e-12 {
            return Err(format!("{params:?}: hypergeometric law sums to {total}"));
        }
    }
    Ok(format!("{points} parameter sets, largest normalisation error {worst:.1e}"))
}

fn flip_count_model() -> Outcome {
    let h = bflab::preset::code_a().load().map_err(|e| e.to_string())?;
    let gamma = GammaMatrix::from_matrix(&h).map_err(|e| e.to_string())?;
    let pairs = stratified_pairs(&gamma, 25, Some(4), 9).map_err(|e| e.to_string())?;
    let oracle =
        SimulatedOracle::new(&h, DecoderConfig::new(5, 15), OracleMetric::FlipCountIter1).map_err(|e| e.to_string())?;
    let per_pair = 20_000u64;
    let mut rows = Vec::new();
    let mut ok = true;
    for g in 0..=4u8 {
        let chosen: Vec<(u32, u32)> =
            pairs.iter().copied().filter(|&(i, j)| gamma.get(i as usize, j as usize).unwrap() == g).collect();
        let (mut sum, mut sq, mut count) = (0f64, 0f64, 0u64);
        for (k, &(i, j)) in chosen.iter().enumerate() {
            let spec = EnsembleSpec::fixed_pair(h.n(), 58, i, j);
            for q in 0..per_pair {
                let e = sample_error(&spec, 9, (g as u64 * 10 + k as u64) * per_pair + q).map_err(|e| e.to_string())?;
                let y = oracle.query(&e).map_err(|e| e.to_string())? as f64;
                sum += y;
                sq += y * y;
                count += 1;
            }
        }
        if count != 100_000 {
            return Err(format!("γ={g}: {count} samples"));
        }
        let mean = sum / count as f64;
        let se = ((sq / count as f64 - mean * mean) * count as f64 / (count - 1) as f64 / count as f64).sqrt();
        let model = expected_flips(&ModelParams::new(h.n(), h.v(), h.w(), 58, 15, g as usize)).map_err(|e| e.to_string())?;
        let z = (mean - model) / se;
        ok &= z.abs() <= 3.0;
        rows.push(format!("γ{g} MC {mean:.3}±{se:.3} model {model:.3} z={z:.1}"));
    }
    if ok {
        Ok(rows.join("; "))
    } else {
        Err(rows.join("; "))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let codes = [
        CodeSource::Regular { n: 240, r: 120, v: 3, w: 6, seed: 2 },
        CodeSource::Qc { p: 101, n0: 2, v: 5, seed: 2 },
    ];
    let mut runs = 0;
    for (ci, code) in codes.iter().enumerate() {
        for kind in ExperimentKind::ALL {
            if kind == ExperimentKind::ExGjs && ci == 0 {
                continue;
            }
            let mut base: Option<Vec<Vec<u8>>> = None;
            for (attempt, w) in [1, 1, 2, 8].into_iter().enumerate() {
                let mut c = ExperimentConfig::new(kind, code.clone());
                c.t = 12;
                c.decoder = DecoderConfig::new(3, 2);
                c.seed = 77;
                c.workers = w;
                c.budget = if kind == ExperimentKind::Pairwise { 500 } else { 5000 };
                if kind == ExperimentKind::Pairwise {
                    c.pairs = PairPolicy::Stratified { pairs: 10, gamma_max: None };
                    c.metric = OracleMetric::ResidualErrorsAfterIter1;
                }
                c.out = Some(dir.path().join(format!("{ci}-{kind}-{attempt}.csv")));
                let outcome = run_experiment(&c).map_err(|e| format!("{kind}: {e}"))?;
                let bytes: Vec<Vec<u8>> =
                    outcome.written.iter().map(|p| std::fs::read(p)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
                match &base {
                    None => base = Some(bytes),
                    Some(b) if *b == bytes => {}
                    Some(_) => return Err(format!("{kind} on code {ci} differs with {w} workers (run {attempt})")),
                }
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} runs over 15 experiment/code combinations byte-identical"))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "model table values", table_theory),
    (2, "simulated residual errors", table_simulated),
    (3, "failure rate follows residual errors", failure_ordering),
    (4, "syndrome-weight dependence", syndrome_weight_trends),
    (5, "intersection/distance equivalence", gamma_distance_equivalence),
    (6, "quasi-cyclic attack", qc_attack),
    (7, "decoder trace equivalence", decoder_equivalence),
    (8, "model consistency", model_consistency),
    (9, "flip-count model", flip_count_model),
    (10, "determinism", determinism),
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} ({secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name} ({secs:.1} s): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
