use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn mece(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mece")).args(args).output().expect("binary runs")
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend(extra);
    mece(&args)
}

fn small_landscape(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(configs().join("landscape.toml"))
        .unwrap()
        .replace("elements = 100", "elements = 20")
        .replace("count = 41", "count = 5");
    let path = dir.join("landscape.toml");
    fs::write(&path, text).unwrap();
    path
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn landscape_header_is_fixed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("landscape", &small_landscape(tmp.path()), &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("landscape.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "E1,E2,kappa,lambda,ece,misfit");
    assert_eq!(text.lines().count(), 1 + 5 * 5 * 2);
}

#[test]
fn reruns_are_byte_identical_and_manifest_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_landscape(tmp.path());
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(run("landscape", &cfg, &a, &["--seed", "7"]).status.success());
    assert!(run("landscape", &cfg, &b, &["--seed", "7"]).status.success());
    assert_eq!(csv_files(&a), csv_files(&b));

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 7);
    for entry in manifest["outputs"].as_array().unwrap() {
        let bytes = fs::read(a.join(entry["file"].as_str().unwrap())).unwrap();
        assert_eq!(entry["sha256"].as_str().unwrap(), mece_cli::output::sha256_hex(&bytes));
    }
    let o = run("landscape", &a.join("manifest.json"), &c, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_files(&a), csv_files(&c));
}

#[test]
fn replay_refuses_another_command() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    assert!(run("landscape", &small_landscape(tmp.path()), &a, &[]).status.success());
    let o = run("invert", &a.join("manifest.json"), &tmp.path().join("b"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_mesh_is_a_config_error_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("empty.toml");
    fs::write(
        &cfg,
        "[problem]\nmesh = { kind = \"bar\", elements = 0 }\nfrequency_hz = 1.0\nmaterial = { young = 1.0 }\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = run("forward", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_keys_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("typo.toml");
    let text = fs::read_to_string(configs().join("forward.toml")).unwrap().replace("frequency_hz", "frequncy_hz");
    fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("out");
    let o = run("forward", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("frequncy_hz"));
    assert!(!out.exists());
}

#[test]
fn failing_diagnostic_exits_three_unless_overridden() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("diagnose_zeros.toml");
    let out = tmp.path().join("fail");
    let o = run("diagnose", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    let report = fs::read_to_string(out.join("diagnose.csv")).unwrap();
    assert!(report.lines().nth(1).unwrap().ends_with(",FAIL"));

    let o = run("diagnose", &cfg, &tmp.path().join("over"), &["--override-diagnostics"]);
    assert!(o.status.success());
    let manifest = fs::read_to_string(tmp.path().join("over/manifest.json")).unwrap();
    assert!(manifest.contains("overridden"));

    assert!(run("diagnose", &configs().join("diagnose_random.toml"), &tmp.path().join("pass"), &[]).status.success());
}

#[test]
fn asymptotics_reports_the_slope_in_a_footer() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert!(run("asymptotics", &configs().join("asymptotics_small.toml"), &out, &[]).status.success());
    let text = fs::read_to_string(out.join("asymptotics.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kappa,error");
    assert_eq!(lines.len(), 1 + 9 + 1);
    let slope: f64 = lines[10].strip_prefix("# fitted_slope,").unwrap().parse().unwrap();
    assert!((slope - 1.0).abs() < 0.1, "{slope}");
}

#[test]
fn bar_inversion_writes_trace_and_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("invert", &configs().join("invert_bar.toml"), &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(out.join("invert_trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "iteration,value,ece,misfit,grad_norm,step");
    let field = fs::read_to_string(out.join("invert_material.csv")).unwrap();
    assert_eq!(field.lines().next().unwrap(), "element,cx,cy,E");
    for line in field.lines().skip(1) {
        let young: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((young - 1.0).abs() < 0.02, "{line}");
    }
}

#[test]
fn infsup_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("infsup.toml");
    let text = fs::read_to_string(configs().join("infsup.toml"))
        .unwrap()
        .replace("elements = 400", "elements = 50")
        .replace("[100, 200, 400]", "[25, 50]");
    fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("out");
    assert!(run("infsup", &cfg, &out, &[]).status.success());
    let text = fs::read_to_string(out.join("infsup.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "frequency_hz,h,beta_h");
    assert_eq!(text.lines().count(), 21);
}
