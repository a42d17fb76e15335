use bosonize::energy::EnergyReport;
use bosonize_cli::output::sha256_hex;
use bosonize_cli::RunManifest;
use std::path::Path;
use std::process::{Command, Output};

fn bosonize(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bosonize"));
    cmd.args(args).env_remove("BOSONIZE_OUT");
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn unit_ball_holds_seven_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = bosonize(&["ball", "--set", "ball.k_f=[1.0, 2.0]"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&std::fs::read(dir.path().join("ball.json")).unwrap()).unwrap();
    assert_eq!(rows[0]["n"], 7);
    assert_eq!(rows[1]["n"], 33);
}

#[test]
fn manifest_hashes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = bosonize(&["patches"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(dir.path());
    assert!(m.pass && m.failing.is_empty());
    assert!(m.outputs.iter().any(|f| f.file == "patches.json"));
    for f in &m.outputs {
        let bytes = std::fs::read(dir.path().join(&f.file)).unwrap();
        assert_eq!(f.sha256, sha256_hex(&bytes), "{}", f.file);
        assert_eq!(f.bytes, bytes.len() as u64);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["rpa", "--set", "patches.m=16", "--set", "cache.enabled=false"];
    assert_eq!(bosonize(&args, Some(a.path())).status.code(), Some(0));
    let mut with_threads = args.to_vec();
    with_threads.extend(["--threads", "1"]);
    assert_eq!(bosonize(&with_threads, Some(b.path())).status.code(), Some(0));
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma.outputs, mb.outputs);
}

#[test]
fn zero_potential_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = bosonize(&["rpa", "--set", "potential.family=zero"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("rpa.json")).unwrap();
    let r: EnergyReport = serde_json::from_str(&text).unwrap();
    assert_eq!(r.n, 2109);
    assert_eq!((r.e_corr_trace, r.e_rpa_closed, r.e_rpa_full), (0.0, 0.0, Some(0.0)));
    assert!(r.e_hf > 0.0);
    assert_eq!(bosonize_cli::output::to_json(&r), text.into_bytes());
}

#[test]
fn config_errors_exit_two_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[physics]\nk_f = 3\n[potential]\nbogus = 1\n").unwrap();
    let o = bosonize(&["rpa", "--config", cfg.to_str().unwrap()], Some(&dir.path().join("out")));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
    assert!(stderr(&o).contains("bogus"));

    let o = bosonize(&["rpa", "--set", "patches.nope=1"], Some(&dir.path().join("out")));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("patches.nope"), "{}", stderr(&o));
}

#[test]
fn empty_schedule_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = bosonize(&["converge", "--set", "converge.k_f=[]"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("converge.k_f"));
    let o = bosonize(&["converge", "--set", "converge.k_f=[8.0]"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_verdicts_exit_one_and_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = bosonize(&["converge", "--set", "converge.final_max=1e-30"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("converge/final-gap"), "{}", stderr(&o));
    let m = manifest(dir.path());
    assert!(!m.pass);
    assert_eq!(m.failing, ["converge/final-gap"]);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_bosonize"))
        .args(["ball"])
        .env("BOSONIZE_OUT", &env_out)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(env_out.join("manifest.json").exists());
    assert!(!dir.path().join("bosonize-out").exists());

    let flag_out = dir.path().join("from-flag");
    let o = Command::new(env!("CARGO_BIN_EXE_bosonize"))
        .args(["ball", "--out"])
        .arg(&flag_out)
        .env("BOSONIZE_OUT", &env_out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_out.join("ball.json").exists());
}

#[test]
fn seed_flag_sets_the_verify_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = bosonize(
        &["verify", "--seed", "7", "--set", "verify.instances=5", "--set", "verify.checks=[\"matrix\"]"],
        Some(dir.path()),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(dir.path());
    assert_eq!(m.resolved.verify.seed, 7);
    assert!(m.overrides.contains(&"verify.seed=7".to_string()));
}
