use std::path::Path;
use std::process::{Command, Output};

use polwork_cli::RunConfig;

const SHORT: [&str; 10] = ["--nu", "0.5", "--t-i", "-10", "--t-f", "10", "--eta-max", "20", "--delta-eta", "0.1"];

fn polwork(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polwork")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = polwork(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn with_out<'a>(dir: &'a Path, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v: Vec<&str> = extra.to_vec();
    v.extend_from_slice(&SHORT);
    v.extend_from_slice(&["--out", dir.to_str().unwrap()]);
    v
}

#[test]
fn kappa_without_coupling_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["kappa", "--alpha", "0", "--beta", "0.5", "--out", dir.path().to_str().unwrap()]);
    assert!(text.lines().next().unwrap().ends_with("1.000000000000"), "{text}");
    assert_eq!(text.matches("Pass").count(), 4, "{text}");
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("kappa.json")).unwrap()).unwrap();
    assert_eq!(json["kappa"], 1.0);
    assert_eq!(json["config"]["bath"]["alpha"], 0.0);
}

#[test]
fn cf_then_dist_writes_outputs_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    ok(&with_out(dir.path(), &["cf"]));
    let text = ok(&with_out(dir.path(), &["dist", "--delta-w", "0.1"]));
    assert!(text.contains("PME") && text.contains("WCME"));
    for name in ["cf_pme.csv", "cf_wcme.csv", "dist_pme.csv", "dist_wcme.csv"] {
        let p = dir.path().join(name);
        assert!(p.exists(), "{name}");
        let sidecar: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join(format!("{name}.json"))).unwrap()).unwrap();
        assert!(sidecar.to_string().contains("\"version\""), "{name}");
    }
    assert!(dir.path().join("dist_pme.density.dat").exists());
    let persisted = RunConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(persisted.cf.eta_max, 20.0);
    assert_eq!(persisted.dist.delta_w, 0.1);
}

#[test]
fn persisted_config_reproduces_outputs_bitwise() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&with_out(a.path(), &["cf", "--frame", "polaron", "--threads", "1"]));
    let cfg = a.path().join("config.toml");
    ok(&["cf", "--config", cfg.to_str().unwrap(), "--threads", "3", "--out", b.path().to_str().unwrap()]);
    for name in ["cf_pme.csv", "cf_pme.csv.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    assert!(!b.path().join("cf_wcme.csv").exists());
}

#[test]
fn moment_sweep_has_one_row_per_point_and_frame() {
    let dir = tempfile::tempdir().unwrap();
    ok(&with_out(dir.path(), &["moments", "--alphas", "0.05,0.1,0.2", "--betas", "0.5,1,2"]));
    let text = std::fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.iter().filter(|r| r.starts_with("polaron,")).count(), 9);
    assert_eq!(rows.iter().filter(|r| r.starts_with("weak-coupling,")).count(), 9);
    assert!(text.starts_with("frame,alpha,beta,mean,variance,mean_over_kt,variance_over_kt2"));
}

#[test]
fn remaining_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let j = ok(&with_out(dir.path(), &["jarzynski"]));
    assert_eq!(j.lines().count(), 2);
    ok(&with_out(dir.path(), &["closed-lz"]));
    ok(&with_out(dir.path(), &["bath-tables"]));
    let v = ok(&with_out(dir.path(), &["validate"]));
    assert!(!v.contains("FAIL"), "{v}");
    let d = ok(&with_out(dir.path(), &["dynamics"]));
    assert_eq!(d.lines().count(), 3);
    for name in ["jarzynski.json", "closed_lz.json", "rates_pme.csv", "rates_pme.csv.json", "validate.json", "dynamics.json", "sigma_z_pme.csv.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let reference = dir.path().join("sigma_z_pme.csv");
    let d = ok(&with_out(dir.path(), &["dynamics", "--reference", reference.to_str().unwrap()]));
    assert!(d.contains("PME vs external max |d sigma_z| = 0.0000e0"), "{d}");
}

#[test]
fn shipped_config_matches_builtin_default() {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/fig1.toml");
    assert_eq!(RunConfig::load(&file).unwrap(), RunConfig::default());
    let printed = ok(&["config"]);
    assert_eq!(RunConfig::parse(&printed).unwrap(), RunConfig::default());
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[bath]\nalpha = 0.4\nomega_c = 10\nbeta = 1\ncutoff = 3\n[protocol]\nnu = 0.1\nt_i = -1\nt_f = 1\n").unwrap();
    let out = polwork(&["kappa", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cutoff"));

    let out = polwork(&["kappa", "--beta", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bath.beta"));

    let out = polwork(&with_out(dir.path(), &["dist", "--input", "/nonexistent/cf.csv"]));
    assert_eq!(out.status.code(), Some(4));

    let out = polwork(&with_out(dir.path(), &["dist"]));
    assert_eq!(out.status.code(), Some(4), "no CF written yet");
}
