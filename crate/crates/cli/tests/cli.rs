use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn semisup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semisup"))
        .args(args)
        .current_dir(repo_root())
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn two_cluster_csv(dir: &Path) -> PathBuf {
    let o = semisup(&["--out", dir.to_str().unwrap(), "--seed", "5", "simulate", "--n", "40"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("simulated_two_cluster.csv")
}

#[test]
fn relevance_spec_files_give_expected_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let standard = semisup(&["--out", out, "analyze-relevance", "--spec", "configs/relevance_standard.toml"]);
    assert_eq!(standard.status.code(), Some(0));
    assert!(stdout(&standard).starts_with("irrelevant"));
    let dependent = semisup(&["--out", out, "analyze-relevance", "--spec", "configs/relevance_dependent.toml"]);
    assert_eq!(dependent.status.code(), Some(0));
    assert!(stdout(&dependent).starts_with("relevant"));
    assert!(dir.path().join("relevance_verdicts.csv").exists());
}

#[test]
fn relevance_catalogue_lists_every_case() {
    let dir = tempfile::tempdir().unwrap();
    let o = semisup(&["--out", dir.path().to_str().unwrap(), "analyze-relevance"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().count() >= 4);
    assert!(text.contains("irrelevant") && text.lines().any(|l| l.ends_with(" relevant")));
}

#[test]
fn binary_cell_counts_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let base = semisup(&["--out", out, "binary-cell", "--unlabeled", "0,0"]);
    assert!(base.status.success());
    let lines: Vec<String> = stdout(&base).lines().map(String::from).collect();
    assert_eq!(lines[0], "x_star,p_labeled_only,method_labeled_only,p_with_unlabeled,method_with_unlabeled");
    for row in &lines[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[1], f[3], "no unlabeled counts means identical predictions");
    }
    let changed = semisup(&["--out", out, "binary-cell", "--unlabeled", "12,4"]);
    assert_ne!(stdout(&changed), stdout(&base));
}

#[test]
fn malformed_counts_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = semisup(&["--out", dir.path().to_str().unwrap(), "binary-cell", "--counts", "1,2,3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn digits_without_images_names_the_missing_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = semisup(&["--out", dir.path().to_str().unwrap(), "scenario", "digits-6v9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--idx-images"));
}

#[test]
fn unknown_scenario_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = semisup(&["--out", dir.path().to_str().unwrap(), "scenario", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "scenario = \"relevance\"\nbogus = 1\n").unwrap();
    let o =
        semisup(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "scenario", "relevance"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn singular_laprls_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_cluster_csv(dir.path());
    let o = semisup(&[
        "--out",
        dir.path().to_str().unwrap(),
        "fit-kernel",
        "--data",
        data.to_str().unwrap(),
        "--mode",
        "laprls",
        "--gamma-a",
        "0",
        "--gamma-i",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn laprls_fit_writes_predictions_and_contour() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_cluster_csv(dir.path());
    let o = semisup(&[
        "--out",
        dir.path().to_str().unwrap(),
        "fit-kernel",
        "--data",
        data.to_str().unwrap(),
        "--mode",
        "laprls",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let preds = std::fs::read_to_string(dir.path().join("kernel_predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 41);
    assert!(dir.path().join("kernel_grid.csv").exists());
    assert!(dir.path().join("kernel_contour.csv").exists());
}

#[test]
fn scenario_manifest_replays_to_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = semisup(&["--out", a.path().to_str().unwrap(), "--seed", "11", "scenario", "binary-cell"]);
    assert!(first.status.success());
    let manifest = a.path().join("manifest.json");
    let replay = semisup(&[
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        b.path().to_str().unwrap(),
        "scenario",
        "binary-cell",
    ]);
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
    for name in ["binary_cell.csv", "manifest.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        if name == "manifest.json" {
            let strip = |v: &[u8]| {
                String::from_utf8_lossy(v).lines().filter(|l| !l.contains("\"output\"")).collect::<Vec<_>>().join("\n")
            };
            assert_eq!(strip(&x), strip(&y));
        } else {
            assert_eq!(x, y);
        }
    }
}
