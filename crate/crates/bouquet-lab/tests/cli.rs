use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bouquet-lab"))
        .env_remove("BOUQUET_LAB_OUT")
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn binary")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn sha256_of(path: &Path) -> String {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).unwrap();
    format!("{:x}", Sha256::digest(bytes))
}

#[test]
fn zeros_writes_csv_and_matching_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["zeros", "--m", "5..9"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("zeros.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "ray_index,m,r,re,im,residual,winding");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.ends_with(",1")));
    let meta = json(&dir.path().join("zeros.csv.meta.json"));
    assert_eq!(meta["sha256"].as_str().unwrap(), sha256_of(&csv));
    assert_eq!(meta["config"]["command"], "zeros");
    assert_eq!(meta["config"]["m"], serde_json::json!([5, 9]));
}

#[test]
fn all_rays_multiply_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--p", "4", "zeros", "--m", "3..8", "--rays", "all"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("zeros.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 6);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["--p", "2", "zeros"])), 2);
    assert_eq!(code(&run(dir.path(), &["zeros", "--m", "3"])), 2);
    assert_eq!(code(&run(dir.path(), &["no-such-command"])), 2);
    assert_eq!(code(&run(dir.path(), &["render", "--size", "16", "--radius", "10"])), 2);
    assert_eq!(code(&run(dir.path(), &["hair", "--s", "0"])), 2);
}

#[test]
fn render_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for workers in ["1", "3", "8"] {
        let o = run(dir.path(), &["render", "--size", "96x64", "--workers", workers]);
        assert_eq!(code(&o), 0);
        let ppm = dir.path().join("render.ppm");
        let bytes = std::fs::read(&ppm).unwrap();
        assert!(bytes.starts_with(b"P6\n96 64\n255\n"));
        hashes.push(sha256_of(&ppm));
    }
    assert!(hashes.windows(2).all(|w| w[0] == w[1]), "{hashes:?}");
}

#[test]
fn png_output_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["render", "--size", "32"])), 0);
    assert!(!dir.path().join("render.png").exists());
    assert_eq!(code(&run(dir.path(), &["render", "--size", "32", "--png"])), 0);
    let png = std::fs::read(dir.path().join("render.png")).unwrap();
    assert!(png.starts_with(b"\x89PNG"));
}

#[test]
fn hair_endpoint_is_the_periodic_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["hair", "--s", "2", "--s", "1,-1", "--tmax", "6", "--samples", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(dir.path(), &["periodic", "--s", "2", "--s", "1,-1"]);
    assert_eq!(code(&o), 0);
    let manifest = json(&dir.path().join("hair_manifest.json"));
    let periodic = json(&dir.path().join("periodic.json"));
    for (curve, point) in manifest["curves"].as_array().unwrap().iter().zip(periodic.as_array().unwrap()) {
        let e = curve["endpoint"].as_array().unwrap();
        let z = point["z"].as_array().unwrap();
        let d = (e[0].as_f64().unwrap() - z[0].as_f64().unwrap())
            .hypot(e[1].as_f64().unwrap() - z[1].as_f64().unwrap());
        assert!(d < 1e-8, "{} vs {}", curve["itinerary"], point["itinerary"]);
        let file = dir.path().join(curve["file"].as_str().unwrap());
        let text = std::fs::read_to_string(file).unwrap();
        let ts: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert_eq!(ts.len() as u64, curve["samples"].as_u64().unwrap());
        assert!(ts.len() >= 5);
        assert_eq!((ts[0], *ts.last().unwrap()), (1.0, 6.0));
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
    }
    assert!(dir.path().join("hair_1_m1.csv").exists());
}

#[test]
fn itinerary_reports_escape() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["itinerary", "--z", "1,0.5"]);
    assert_eq!(code(&o), 0);
    let v = json(&dir.path().join("itinerary.json"));
    assert_eq!(v["result"]["status"]["kind"], "Escaped");
    assert_eq!(v["result"]["digits"][0], 0);
}

#[test]
fn verify_passes_and_detects_a_bad_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&dir.path().join("verify.json"));
    assert_eq!(report["pass"], true);
    let o = run(dir.path(), &["verify", "--tau", "1.0"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&dir.path().join("verify.json"))["pass"], false);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"p": 5, "m": "4..6", "seed": 11}"#).unwrap();
    let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "--p", "4", "zeros"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let meta = json(&dir.path().join("zeros.csv.meta.json"));
    assert_eq!(meta["config"]["params"]["p"], 4);
    assert_eq!(meta["config"]["m"], serde_json::json!([4, 6]));
    assert_eq!(meta["config"]["seed"], 11);

    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "zeros"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn output_directory_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_bouquet-lab"))
        .env("BOUQUET_LAB_OUT", &target)
        .args(["zeros", "--m", "1..2"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(target.join("zeros.csv").exists());
}
