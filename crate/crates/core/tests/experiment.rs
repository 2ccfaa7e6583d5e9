use std::path::Path;

use tvhsgt::algorithms::Method;
use tvhsgt::data::{Sample, SyntheticSpec};
use tvhsgt::experiment::{
    encode_libsvm, read_manifest, replay, run_experiment, DatasetKind, ExperimentConfig,
};
use tvhsgt::Error;

fn small(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.output = out.to_path_buf();
    cfg.dataset.agents = 3;
    cfg.dataset.batch_size = 10;
    cfg.dataset.synthetic = SyntheticSpec {
        samples_per_agent: 60,
        dim: 4,
        ..SyntheticSpec::default()
    };
    cfg.run.rounds = 10;
    cfg
}

#[test]
fn minimal_config_writes_one_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&small(dir.path())).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("tv_hsgt_b0.01_s0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert!(csv.starts_with("t,regret_inc,regret_avg"));
    let csvs = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            let name = e.as_ref().unwrap().file_name().into_string().unwrap();
            name.ends_with(".csv") && name != "summary.csv"
        })
        .count();
    assert_eq!(csvs, 1);
    let manifest = read_manifest(&dir.path().join("manifest.txt")).unwrap();
    let names: Vec<&str> = manifest.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["config.toml", "summary.csv", "tv_hsgt_b0.01_s0.csv"]);
    assert_eq!(out.cells.len(), 1);
}

#[test]
fn rerun_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = small(a.path());
    cfg.run.methods = vec![Method::TvHsgt, Method::Dsgt];
    cfg.run.seeds = vec![4, 5];
    cfg.run.workers = 2;
    let first = run_experiment(&cfg).unwrap();
    cfg.output = b.path().to_path_buf();
    cfg.run.workers = 1;
    let second = run_experiment(&cfg).unwrap();
    assert_eq!(first.files, second.files);
    let m1 = std::fs::read(a.path().join("manifest.txt")).unwrap();
    let m2 = std::fs::read(b.path().join("manifest.txt")).unwrap();
    assert_eq!(m1, m2);
}

#[test]
fn beta_sweep_gives_one_curve_per_beta() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.run.betas = vec![0.01, 0.1, 0.2, 0.3, 0.4, 0.5];
    cfg.run.charts = true;
    let out = run_experiment(&cfg).unwrap();
    for b in &cfg.run.betas {
        let rows = out.summary.iter().filter(|r| r.beta == Some(*b)).count();
        assert_eq!(rows, 10);
        assert!(out.final_regret(Method::TvHsgt, Some(*b)).unwrap().is_finite());
    }
    let svg = std::fs::read_to_string(dir.path().join("chart_regret_avg.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 6);
}

#[test]
fn replay_reproduces_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let scratch = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.certificate = true;
    cfg.topology.export = true;
    cfg.run.betas = vec![0.5];
    run_experiment(&cfg).unwrap();
    assert!(dir.path().join("certificate_b0.5_s0.txt").exists());
    assert!(dir.path().join("graphs_s0.txt").exists());
    assert_eq!(replay(dir.path(), scratch.path()).unwrap(), Vec::<String>::new());

    std::fs::write(dir.path().join("summary.csv"), "tampered").unwrap();
    let mut lines = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    lines = lines.replace("file ", "file 0");
    std::fs::write(dir.path().join("manifest.txt"), lines).unwrap();
    assert!(!replay(dir.path(), scratch.path()).unwrap().is_empty());
}

#[test]
fn libsvm_dataset_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let samples: Vec<Sample> = (0..90)
        .map(|k| {
            let x = (k as f64 * 0.37).sin();
            Sample {
                a: vec![x, 0.0, (k % 3) as f64, 1.0],
                b: if x > 0.0 { 1.0 } else { 0.0 },
            }
        })
        .collect();
    let data = dir.path().join("train.svm");
    std::fs::write(&data, encode_libsvm(&samples)).unwrap();
    let cfg_path = dir.path().join("exp.toml");
    std::fs::write(
        &cfg_path,
        "version = 1\noutput = \"out\"\n[dataset]\nkind = \"libsvm\"\npath = \"train.svm\"\ndim = 4\n\
         agents = 3\nbatch_size = 5\n[run]\nrounds = 12\nmethods = [\"tv_hsgt\", \"dsgd\"]\n",
    )
    .unwrap();
    let mut cfg = ExperimentConfig::load(&cfg_path).unwrap();
    assert_eq!(cfg.dataset.kind, DatasetKind::Libsvm);
    cfg.output = dir.path().join("out");
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.cells.len(), 2);
    let acc = out.cells[0].metrics.last().unwrap().accuracy;
    assert!((0.0..=1.0).contains(&acc));
}

#[test]
fn malformed_data_is_an_ingestion_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.svm");
    std::fs::write(&data, "+1 1:0.5\n-1 2:0.1 3:oops\n").unwrap();
    let mut cfg = small(dir.path());
    cfg.dataset.kind = DatasetKind::Libsvm;
    cfg.dataset.path = Some(data);
    match run_experiment(&cfg).unwrap_err() {
        e @ Error::Ingestion { line: 2, column: 12, .. } => assert_eq!(e.exit_code(), 3),
        e => panic!("{e}"),
    }
}

#[test]
fn invalid_config_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(&dir.path().join("never"));
    cfg.run.betas = vec![0.5, -0.1];
    match run_experiment(&cfg).unwrap_err() {
        Error::Config { path, .. } => assert_eq!(path, "run.betas[1]"),
        e => panic!("{e}"),
    }
    assert!(!dir.path().join("never").exists());
}

#[test]
fn exported_topology_replays_the_same_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = small(a.path());
    cfg.run.rounds = 40;
    cfg.topology.export = true;
    let first = run_experiment(&cfg).unwrap();
    cfg.output = b.path().to_path_buf();
    cfg.topology.export = false;
    cfg.topology.graph_file = Some(a.path().join("graphs_s0.txt"));
    let second = run_experiment(&cfg).unwrap();
    assert_eq!(
        std::fs::read(a.path().join("tv_hsgt_b0.01_s0.csv")).unwrap(),
        std::fs::read(b.path().join("tv_hsgt_b0.01_s0.csv")).unwrap()
    );
    assert_eq!(first.summary, second.summary);
}
