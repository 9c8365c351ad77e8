use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mvcca::{Matrix, ModelKind, View};
use mvcca_cli::archive::{load_model, parse_archive, save_model, to_archive};
use mvcca_cli::commands::Metrics;
use mvcca_cli::io::{read_csv_matrix, read_table};
use mvcca_cli::manifest::{load_dataset, DatasetManifest};
use mvcca_cli::models::{fit, FitRequest, Projector};
use mvcca_cli::{EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn mvcca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvcca"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit status")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth-gen", "--out", s(dir)];
    args.extend_from_slice(extra);
    let o = mvcca(&args);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
}

#[test]
fn pgm_fixture_loads_into_unit_interval() {
    let ds = load_dataset(&fixture("pgm2/manifest.json")).unwrap();
    assert_eq!(ds.data.len(), 2);
    assert_eq!(ds.data.shape(View::First), (32, 32));
    assert_eq!(ds.labels, ["alice", "bob"]);
    for v in [View::First, View::Second] {
        for x in ds.view(v) {
            assert!(x.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }
    // row 1, column 2 of a1 holds 8 + 2
    assert_eq!(ds.view(View::First)[0][(1, 2)], 10.0 / 255.0);
}

#[test]
fn csv_fixture_matches_hand_entries() {
    let ds = load_dataset(&fixture("csv2/manifest.json")).unwrap();
    let x2 = Matrix::from_row_slice(2, 3, &[0.0, 1.0, 2.0, -1.75, 4.5, 100.0]);
    let y1 = Matrix::from_row_slice(3, 2, &[0.5, 1.0, 2.0, -3.0, 4.0, 8.0]);
    assert_eq!(ds.view(View::First)[1], x2);
    assert_eq!(ds.view(View::Second)[0], y1);
    assert_eq!(ds.view(View::First)[0][(1, 2)], -7e-3);
    assert_eq!(ds.ids, ["a", "b"]);
}

#[test]
fn missing_file_is_named_and_is_a_usage_error() {
    let err = load_dataset(&fixture("missing/manifest.json")).unwrap_err();
    assert!(err.to_string().contains("absent.csv"), "{err}");
    assert_eq!(err.exit_code(), EXIT_USAGE);

    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m.json");
    let o = mvcca(&["fit", "--manifest", s(&fixture("missing/manifest.json")), "--model", "cca", "--out", s(&out)]);
    assert_eq!(code(&o), EXIT_USAGE);
    let msg = stderr(&o);
    assert!(msg.contains("absent.csv"));
    assert_eq!(msg.trim_end().lines().count(), 1, "{msg}");
}

#[test]
fn mismatched_dims_name_the_file() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("a.csv"), "1,2\n3,4\n").unwrap();
    fs::write(dir.path().join("b.csv"), "1,2,3\n").unwrap();
    fs::write(
        dir.path().join("m.json"),
        r#"{"format_version":1,"matrix_format":"csv","pairs":[
            {"id":"x","view1":"a.csv","view2":"a.csv","label":"l"},
            {"id":"y","view1":"b.csv","view2":"a.csv","label":"l"}]}"#,
    )
    .unwrap();
    let err = load_dataset(&dir.path().join("m.json")).unwrap_err();
    assert!(err.to_string().contains("b.csv"), "{err}");
}

#[test]
fn duplicate_ids_are_rejected() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("a.csv"), "1\n").unwrap();
    fs::write(
        dir.path().join("m.json"),
        r#"{"format_version":1,"matrix_format":"csv","pairs":[
            {"id":"x","view1":"a.csv","view2":"a.csv","label":"l"},
            {"id":"x","view1":"a.csv","view2":"a.csv","label":"l"}]}"#,
    )
    .unwrap();
    assert!(load_dataset(&dir.path().join("m.json")).unwrap_err().to_string().contains("duplicate"));
}

#[test]
fn minimal_archive_projects_by_hand_solution() {
    let t = load_model(&fixture("minimal_bmvcca.json")).unwrap();
    let p = Projector::new(&t.model, mvcca::SpdPolicy::exact()).unwrap();
    let x = read_csv_matrix(&fixture("probe3.csv")).unwrap();
    // latent precision 1 + 1 + 1, evidence 3 from the present view
    let single = p.project(Some(&x), None).unwrap();
    assert!((single[(0, 0)] - 1.0).abs() < 1e-15);
    let pair = p.project(Some(&x), Some(&x)).unwrap();
    assert!((pair[(0, 0)] - 2.0).abs() < 1e-15);
    let back = t.model.reconstruct(&pair, View::Second).unwrap();
    assert!((back[(0, 0)] - 2.0).abs() < 1e-15);
}

#[test]
fn unknown_archive_version_is_reported() {
    let err = load_model(&fixture("future_version.json")).unwrap_err();
    assert!(err.to_string().contains("format_version 99"), "{err}");
    assert_eq!(err.exit_code(), EXIT_USAGE);
}

#[test]
fn schema_mismatch_is_reported() {
    let text = fs::read_to_string(fixture("minimal_bmvcca.json")).unwrap();
    let bad = text.replacen("\"psi_r2\"", "\"psi_r3\"", 1);
    assert!(parse_archive(&bad).unwrap_err().contains("psi_r2"));
    let bad = text.replacen("\"model_kind\": \"bmvcca\"", "\"model_kind\": \"pca\"", 1);
    assert!(parse_archive(&bad).unwrap_err().contains("model_kind"));
}

fn small_dataset(dir: &Path) -> mvcca_cli::manifest::LoadedDataset {
    synth(dir, &["--size", "6", "--d1", "2", "--d2", "2", "--samples", "60", "--seed", "5"]);
    load_dataset(&dir.join("manifest.json")).unwrap()
}

#[test]
fn every_model_survives_save_and_load() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let probe = ds.data.pair(7);
    for (kind, pca) in [
        (ModelKind::Cca, Some(20)),
        (ModelKind::Pcca, None),
        (ModelKind::Tdcca, None),
        (ModelKind::Umvcca, None),
        (ModelKind::Bmvcca, None),
    ] {
        let mut req = FitRequest::new(kind, 2, 2);
        req.pca_pre = pca;
        req.max_iters = Some(30);
        let (trained, _) = fit(&ds.data, &req).unwrap();
        let path = dir.path().join(format!("{}.json", kind.name()));
        save_model(&trained, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(to_archive(&back), to_archive(&trained), "{}", kind.name());
        let policy = mvcca::SpdPolicy::default();
        let a = Projector::new(&trained.model, policy).unwrap().project(Some(probe.0), Some(probe.1)).unwrap();
        let b = Projector::new(&back.model, policy).unwrap().project(Some(probe.0), Some(probe.1)).unwrap();
        assert!((a - b).amax() < 1e-12, "{}", kind.name());
    }
}

#[test]
fn bmvcca_on_pgm_fixture_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let manifest = fixture("pgm2/manifest.json");
    let mut outputs = Vec::new();
    for run in 0..2 {
        let model = dir.path().join(format!("m{run}.json"));
        let codes = dir.path().join(format!("codes{run}"));
        let o = mvcca(&["fit", "--manifest", s(&manifest), "--model", "bmvcca", "--seed", "11", "--max-iters", "15", "--jitter", "1e-4", "--out", s(&model)]);
        assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
        let o = mvcca(&["project", "--model", s(&model), "--manifest", s(&manifest), "--out", s(&codes)]);
        assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
        outputs.push(["p1", "p2"].map(|id| fs::read(codes.join(format!("{id}.csv"))).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn pca_pre_rescues_small_sample_baselines() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--size", "6", "--samples", "20", "--seed", "3"]);
    let manifest = dir.path().join("manifest.json");
    let out = dir.path().join("m.json");
    for model in ["cca", "pcca"] {
        let o = mvcca(&["fit", "--manifest", s(&manifest), "--model", model, "--out", s(&out)]);
        assert_eq!(code(&o), EXIT_NUMERICAL, "{model}: {}", stderr(&o));
        assert!(stderr(&o).contains("singular"));
        let o = mvcca(&["fit", "--manifest", s(&manifest), "--model", model, "--pca-pre", "19", "--out", s(&out)]);
        assert_eq!(code(&o), EXIT_OK, "{model}: {}", stderr(&o));
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    assert_eq!(code(&mvcca(&["--help"])), EXIT_OK);
    assert_eq!(code(&mvcca(&["fit", "--bogus"])), EXIT_USAGE);
    assert_eq!(code(&mvcca(&["teleport"])), EXIT_USAGE);
    assert_eq!(code(&mvcca(&["fit", "--manifest", "/nonexistent/m.json", "--model", "cca", "--out", "x.json"])), EXIT_USAGE);
    let o = mvcca(&["eval", "--model", s(&fixture("minimal_bmvcca.json")), "--gallery", s(&fixture("csv2/manifest.json")),
        "--probe", s(&fixture("csv2/manifest.json")), "--out", "/nonexistent/never.json"]);
    assert_eq!(code(&o), EXIT_USAGE, "{}", stderr(&o));
}

#[test]
fn emitted_files_parse_back() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--size", "6", "--d1", "2", "--d2", "2", "--classes", "3", "--class-offset", "8", "--split", "train=30", "--split", "test=12", "--seed", "9"]);
    let train = DatasetManifest::read(&d.join("train.json")).unwrap();
    assert_eq!(train.pairs.len(), 30);
    assert_eq!(train.pairs[4].label, "c1");

    let model = d.join("u.json");
    let o = mvcca(&["fit", "--manifest", s(&d.join("train.json")), "--model", "umvcca", "--features", "13", "--out", s(&model)]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let trained = load_model(&model).unwrap();
    assert_eq!(trained.model.feature_count(), 12);
    let trace = read_table(&d.join("u.trace.csv")).unwrap();
    assert_eq!(trace.columns, ["iteration", "objective", "delta_R1", "delta_R2"]);
    assert_eq!(trace.rows.len(), trained.fit.iterations);

    let codes = d.join("codes");
    let o = mvcca(&["project", "--model", s(&model), "--manifest", s(&d.join("test.json")), "--view", "1", "--out", s(&codes)]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let c = read_csv_matrix(&codes.join("s00030.csv")).unwrap();
    assert_eq!(c.shape(), (6, 2));
    let rec = d.join("rec.csv");
    let o = mvcca(&["reconstruct", "--model", s(&model), "--code", s(&codes.join("s00030.csv")), "--view", "2", "--out", s(&rec)]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    assert_eq!(read_csv_matrix(&rec).unwrap().shape(), (6, 6));

    let metrics = d.join("metrics.json");
    let o = mvcca(&["eval", "--model", s(&model), "--gallery", s(&d.join("train.json")), "--probe", s(&d.join("test.json")), "--out", s(&metrics)]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let m: Metrics = serde_json::from_str(&fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(m.probes, 12);
    assert_eq!(m.per_class.values().map(|c| c.total).sum::<usize>(), 12);
    assert_eq!(m.feature_count, 12);

    let o = mvcca(&["eval", "--model", s(&model), "--gallery", s(&d.join("train.json")), "--probe", s(&d.join("test.json")), "--criterion", "ptest", "--out", s(&metrics)]);
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(stderr(&o).contains("bmvcca"));

    let preds = d.join("pred.csv");
    let o = mvcca(&["classify", "--model", s(&model), "--gallery", s(&d.join("train.json")), "--probe", s(&d.join("test.json")), "--out", s(&preds)]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let text = fs::read_to_string(&preds).unwrap();
    assert_eq!(text.lines().next(), Some("id,label,predicted"));
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn pgm_output_round_trips_through_manifest() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--size", "5", "--samples", "3", "--format", "pgm8", "--noise", "0.01"]);
    let ds = load_dataset(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(ds.data.len(), 3);
    assert!(ds.view(View::Second)[2].iter().all(|&p| (0.0..=1.0).contains(&p)));
}

#[test]
fn ptest_eval_on_classification_fixture() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--size", "16", "--d1", "3", "--d2", "3", "--noise", "0.1", "--seed", "1101", "--classes", "20", "--class-offset", "12",
        "--split", "train=200", "--split", "test=200"]);
    let model = d.join("b.json");
    let o = mvcca(&["fit", "--manifest", s(&d.join("train.json")), "--model", "bmvcca", "--d1", "3", "--d2", "3", "--max-iters", "50", "--seed", "1101", "--out", s(&model)]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let metrics = d.join("m.json");
    let o = mvcca(&["eval", "--model", s(&model), "--gallery", s(&d.join("train.json")), "--probe", s(&d.join("test.json")), "--criterion", "ptest", "--out", s(&metrics)]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let m: Metrics = serde_json::from_str(&fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(m.probes, 200);
    assert!(m.error_rate < 0.05, "error rate {}", m.error_rate);
}
