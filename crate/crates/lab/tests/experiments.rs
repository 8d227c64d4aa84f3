use bflab::{preset, run_experiment, CodeSource, ExperimentConfig, ExperimentKind, Outcome, PairPolicy};
use bflab_core::{DecoderConfig, OracleMetric};

fn small_regular() -> CodeSource {
    CodeSource::Regular { n: 240, r: 120, v: 3, w: 6, seed: 5 }
}

fn small_qc() -> CodeSource {
    CodeSource::Qc { p: 101, n0: 2, v: 5, seed: 5 }
}

fn config(kind: ExperimentKind, code: CodeSource) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind, code);
    c.t = 12;
    c.decoder = DecoderConfig::new(3, 2);
    c.seed = 11;
    c.budget = match kind {
        ExperimentKind::Pairwise => 300,
        _ => 4000,
    };
    if kind == ExperimentKind::Pairwise {
        c.pairs = PairPolicy::Stratified { pairs: 12, gamma_max: None };
        c.metric = OracleMetric::ResidualErrorsAfterIter1;
    }
    if matches!(kind, ExperimentKind::Gsa | ExperimentKind::ExGjs) {
        c.metric = OracleMetric::IterationCount;
    }
    c
}

fn applicable(kind: ExperimentKind, code: &CodeSource) -> bool {
    kind != ExperimentKind::ExGjs || matches!(code, CodeSource::Qc { .. })
}

fn files(o: &Outcome) -> Vec<(Option<&'static str>, String)> {
    o.files.iter().map(|f| (f.suffix, f.contents.clone())).collect()
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    for code in [small_regular(), small_qc()] {
        for kind in ExperimentKind::ALL {
            if !applicable(kind, &code) {
                continue;
            }
            let mut c = config(kind, code.clone());
            let base = files(&run_experiment(&c).unwrap());
            assert!(!base.is_empty());
            for workers in [2, 8] {
                c.workers = workers;
                assert_eq!(files(&run_experiment(&c).unwrap()), base, "{kind} on {code:?} with {workers} workers");
            }
        }
    }
}

#[test]
fn seed_changes_oracle_outputs() {
    let mut c = config(ExperimentKind::Gsa, small_regular());
    let a = run_experiment(&c).unwrap();
    c.seed += 1;
    let b = run_experiment(&c).unwrap();
    assert_ne!(a.file(Some("pairs")), b.file(Some("pairs")));
}

#[test]
fn keygen_round_trips_through_key_file() {
    let dir = tempfile::tempdir().unwrap();
    let key = dir.path().join("k.key");
    let mut c = config(ExperimentKind::KeyGen, small_qc());
    c.out = Some(key.clone());
    let first = run_experiment(&c).unwrap();
    assert_eq!(first.written, vec![key.clone()]);
    let again = run_experiment(&c).unwrap();
    assert_eq!(first.primary(), again.primary());
    assert_eq!(std::fs::read_to_string(&key).unwrap(), first.primary());

    // The loaded key yields the same spectra as the generated one.
    let generated = run_experiment(&config(ExperimentKind::Spectrum, small_qc())).unwrap();
    let loaded = run_experiment(&config(ExperimentKind::Spectrum, CodeSource::KeyFile(key))).unwrap();
    let body = |s: &str| s.lines().filter(|l| !l.starts_with('#')).map(String::from).collect::<Vec<_>>();
    assert_eq!(body(generated.primary()), body(loaded.primary()));
}

#[test]
fn query_budgets_are_spent_exactly() {
    for kind in [ExperimentKind::Gsa, ExperimentKind::ExGjs, ExperimentKind::DfrVsWs] {
        let c = config(kind, small_qc());
        let report = run_experiment(&c).unwrap().report.unwrap();
        assert_eq!((report.queries, report.expected_queries), (4000, 4000), "{kind}");
    }
    let c = config(ExperimentKind::Pairwise, small_regular());
    let report = run_experiment(&c).unwrap().report.unwrap();
    assert_eq!(report.queries, 12 * 300);
    assert_eq!(report.expected_queries, 12 * 300);
}

#[test]
fn extra_files_sit_next_to_the_primary_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs").join("scan.csv");
    let mut c = config(ExperimentKind::Pairwise, small_qc());
    c.out = Some(out.clone());
    let o = run_experiment(&c).unwrap();
    let names: Vec<String> =
        o.written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["scan.csv", "scan.classes.csv", "scan.estimates.csv", "scan.spectra.csv"]);
    for p in &o.written {
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with("# experiment=pairwise\n"), "{}", p.display());
        assert!(text.contains("# seed=11\n") && !text.contains("workers"));
    }
}

fn model_column(csv: &str, column: &str) -> Vec<f64> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == column).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn model_table_reproduces_published_predictions() {
    let expected: [(&str, &[f64]); 2] = [
        ("table1a", &[48.98, 48.76, 48.55, 48.34, 48.15]),
        ("table1b", &[33.64, 33.73, 33.80, 33.86]),
    ];
    for (name, values) in expected {
        let mut c = preset(name).unwrap();
        c.kind = ExperimentKind::Model;
        let csv = run_experiment(&c).unwrap().primary().to_owned();
        let got = model_column(&csv, "E_t_prime");
        assert_eq!(got.len(), values.len(), "{name}");
        for (g, (a, b)) in got.iter().zip(values).enumerate() {
            assert!((a - b).abs() <= 0.01, "{name} γ={g}: {a} vs {b}");
        }
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let mut c = config(ExperimentKind::DfrVsWs, small_regular());
    c.metric = OracleMetric::IterationCount;
    assert!(run_experiment(&c).unwrap_err().to_string().contains("failure"));

    let c = config(ExperimentKind::ExGjs, small_regular());
    assert!(run_experiment(&c).is_err());

    let mut c = config(ExperimentKind::Gsa, small_regular());
    c.budget = 0;
    assert!(run_experiment(&c).is_err());

    let c = config(ExperimentKind::Validate, CodeSource::KeyFile("/nonexistent/key".into()));
    assert!(run_experiment(&c).unwrap_err().to_string().contains("/nonexistent/key"));
}
