use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqkd"))
        .args(args)
        .output()
        .expect("spawn sqkd")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const BASIC: &str = "protocol = \"protocol2\"\nn_codes = 2000\nseed = 7\n\n[channel.rotation]\ntheta = 0.3\n";

#[test]
fn version_flag() {
    let out = sqkd(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("sqkd "));
}

#[test]
fn simulate_csv_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", BASIC);
    let out = sqkd(&["simulate", "--config", &cfg, "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "theta,sent,delivered,accepted,r_b,r_b_se,t_p,t_p_se,key_rate");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0.3,2000,2000,"));
}

#[test]
fn simulate_to_file_is_deterministic_and_seed_override_changes_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", BASIC);
    let p = dir.path().join("r.json");
    let run = |extra: &[&str]| {
        let mut args = vec!["simulate", "--config", &cfg, "--out", p.to_str().unwrap()];
        args.extend_from_slice(extra);
        let out = sqkd(&args);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
        fs::read(&p).unwrap()
    };
    let a = run(&[]);
    let b = run(&[]);
    let c = run(&["--seed", "8"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(String::from_utf8(a).unwrap().contains("\"seed\": 7"));
}

#[test]
fn sweep_emits_one_row_per_theta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", BASIC);
    let out = sqkd(&["sweep", "--config", &cfg, "--theta", "0,0.3,0.7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<_> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("0,"));
    assert!(rows[2].starts_with("0.7,"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_loss = write_config(
        dir.path(),
        "loss.toml",
        "protocol = \"protocol2\"\nn_codes = 10\nseed = 1\n[channel]\nloss_prob = 1.5\n",
    );
    let out = sqkd(&["simulate", "--config", &bad_loss]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("loss_prob"));

    let six = write_config(dir.path(), "six.toml", "protocol = \"six_state\"\nn_codes = 10\nseed = 1\n");
    let out = sqkd(&["simulate", "--config", &six]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not implemented"));
}

#[test]
fn insufficient_data_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // every photon lost
    let cfg = write_config(
        dir.path(),
        "lost.toml",
        "protocol = \"protocol2\"\nn_codes = 50\nseed = 1\n[channel]\nloss_prob = 1.0\n",
    );
    let out = sqkd(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_config_file_exits_with_1() {
    let out = sqkd(&["simulate", "--config", "/nonexistent/sqkd.toml"]);
    assert_eq!(out.status.code(), Some(1));
}
