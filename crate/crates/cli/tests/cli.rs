use std::process::Command;

fn mplab(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mplab"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn law_prints_one_row_per_point() {
    let (ok, out, _) = mplab(&["law", "--y", "1", "--x", "2,5"]);
    assert!(ok);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 3);
    let density: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((density - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
    assert!(rows[2].starts_with("5,0,1,"));
}

#[test]
fn sweep_csv_is_reproducible() {
    let args = [
        "sweep",
        "--n-list",
        "16,32",
        "--trials",
        "2",
        "--seed",
        "7",
        "--measure",
        "distance,deloc",
    ];
    let (ok, first, err) = mplab(&args);
    assert!(ok, "{err}");
    assert!(err.contains("rate fit"));
    assert_eq!(first.lines().count(), 5);
    assert!(first.starts_with("n,p,y,trial,seed,dist,"));
    let (_, second, _) = mplab(&args);
    assert_eq!(first, second);
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile_dir();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# small run\ny = 1\nn = 24\nformat = json\n").unwrap();
    let out = dir.join("run.json");
    let (ok, _, err) = mplab(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(ok, "{err}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["records"][0]["p"], 24);
    assert_eq!(json["config"]["trials"], 1);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn bad_input_fails_cleanly() {
    let (ok, _, err) = mplab(&["sample", "--n", "8", "--y", "1.5"]);
    assert!(!ok);
    assert!(err.contains("Error"));
    let (ok, _, _) = mplab(&["distance", "--n-list", "8,16"]);
    assert!(!ok);
}

#[test]
fn verify_passes() {
    let (ok, out, _) = mplab(&["verify"]);
    assert!(ok);
    assert!(out.lines().all(|l| l.starts_with("PASS")));
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("mplab-cli-it-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
