use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn genvar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genvar"))
        .args(args)
        .env("GENVAR_OUT", dir)
        .current_dir(dir)
        .output()
        .expect("spawn genvar")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn meta(dir: &Path, name: &str) -> Vec<(String, String)> {
    read(dir, name)
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('=').expect("key=value");
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn get<'a>(m: &'a [(String, String)], key: &str) -> &'a str {
    &m.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("missing {key}")).1
}

#[test]
fn ho_table_has_twelve_rows() {
    let d = TempDir::new().unwrap();
    let o = genvar(d.path(), &["ho-table", "--eps", "1,0.5,0.1,0.01"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(d.path(), "ho-table.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "kind,eps,mollifier,S,dS,d2S,d2S_half,d2S_oracle,error");
    assert_eq!(lines.len(), 13);
    let kinds: Vec<&str> = lines[1..4].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(kinds, ["quad", "oc", "holo"]);
    let m = meta(d.path(), "ho-table.meta");
    assert_eq!(get(&m, "command"), "ho-table");
    assert_eq!(get(&m, "genvar_version"), env!("CARGO_PKG_VERSION"));
    assert_eq!(get(&m, "config.eps"), "1.0,0.5,0.1,0.01");
    assert!(get(&m, "elapsed_ms").parse::<f64>().is_ok());
}

#[test]
fn mollifier_family_columns() {
    let d = TempDir::new().unwrap();
    let o = genvar(d.path(), &["mollifier", "--kind", "gaussian", "--q", "8", "--samples", "41"]);
    assert!(o.status.success());
    let csv = read(d.path(), "mollifier.csv");
    assert_eq!(csv.lines().next().unwrap(), "x,eta_q0,eta_q2,eta_q4,eta_q6,eta_q8");
    assert_eq!(csv.lines().count(), 42);
    // x = 0 sits in the middle row; η_0(0) = 1/√(2π) for σ = 1, ε = 1
    let mid: Vec<f64> = csv.lines().nth(21).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(mid[0], 0.0);
    assert!((mid[1] - 1.0 / std::f64::consts::TAU.sqrt()).abs() < 1e-12);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let d = TempDir::new().unwrap();
    let o = genvar(d.path(), &["ho-table", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(genvar(d.path(), &["nonsense"]).status.code(), Some(1));
    assert_eq!(genvar(d.path(), &[]).status.code(), Some(1));
}

#[test]
fn invalid_values_exit_one() {
    let d = TempDir::new().unwrap();
    assert_eq!(genvar(d.path(), &["order", "--eps", "0.1,0.2,0.3"]).status.code(), Some(1));
    assert_eq!(genvar(d.path(), &["ho-extremal", "--kind", "second"]).status.code(), Some(1));
    assert_eq!(genvar(d.path(), &["propagate", "--beta-i", "1,2,3"]).status.code(), Some(1));
    assert_eq!(genvar(d.path(), &["mollifier", "--kind", "triangle"]).status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two() {
    let d = TempDir::new().unwrap();
    let o = genvar(d.path(), &["quad-pi", "--mass", "0", "--k", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("singular matrix"));
}

#[test]
fn help_and_version_succeed() {
    let d = TempDir::new().unwrap();
    let o = genvar(d.path(), &["--help"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("quad-pi"));
    assert!(genvar(d.path(), &["--version"]).status.success());
}

#[test]
fn csv_bodies_are_deterministic() {
    let d = TempDir::new().unwrap();
    for args in [
        &["propagate"][..],
        &["lie-check", "--pairs", "5"][..],
        &["scalar-check", "--zeta-scale", "1.2"][..],
        &["order", "--q", "3"][..],
    ] {
        assert!(genvar(d.path(), args).status.success());
        let name = format!("{}.csv", args[0]);
        let first = read(d.path(), &name);
        assert!(genvar(d.path(), args).status.success());
        assert_eq!(first, read(d.path(), &name), "{args:?}");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("run.cfg");
    std::fs::write(&cfg, "# order sweep\nexperiment = order\nq = 3\neps = 0.4,0.2,0.1\nout = from-config\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    // GENVAR_OUT beats the config's out
    let o = genvar(d.path(), &["--config", cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = meta(d.path(), "order.meta");
    assert_eq!(get(&m, "config.q"), "3");
    assert_eq!(get(&m, "rows"), "3");
    // flags beat the config
    let o = genvar(d.path(), &["order", "--config", cfg, "--q", "1"]);
    assert!(o.status.success());
    assert_eq!(get(&meta(d.path(), "order.meta"), "config.q"), "1");
    // --out beats GENVAR_OUT
    let sub = d.path().join("flagged");
    assert!(genvar(d.path(), &["propagate", "--out", sub.to_str().unwrap()]).status.success());
    assert!(sub.join("propagate.csv").exists());
}

#[test]
fn config_out_used_without_env() {
    let d = TempDir::new().unwrap();
    std::fs::write(d.path().join("c.cfg"), "experiment=propagate\nout=cfg-out\nn=11,101\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_genvar"))
        .args(["--config", "c.cfg"])
        .env_remove("GENVAR_OUT")
        .current_dir(d.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&d.path().join("cfg-out"), "propagate.csv").lines().count(), 3);
}

#[test]
fn config_rejects_unknown_keys() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("bad.cfg");
    std::fs::write(&cfg, "experiment=ho-table\nepsilon=0.1\n").unwrap();
    let o = genvar(d.path(), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `epsilon`"));
    std::fs::write(&cfg, "experiment=order\n").unwrap();
    assert_eq!(genvar(d.path(), &["propagate", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn boolean_config_keys() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("b.cfg");
    std::fs::write(&cfg, "experiment=quad-pi\nno_oracle=true\nn=2\n").unwrap();
    assert!(genvar(d.path(), &["--config", cfg.to_str().unwrap()]).status.success());
    let csv = read(d.path(), "quad-pi.csv");
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[7], "");
    assert_eq!(get(&meta(d.path(), "quad-pi.meta"), "config.no-oracle"), "true");
}

#[test]
fn euler_propagator_slope_in_sidecar() {
    let d = TempDir::new().unwrap();
    assert!(genvar(d.path(), &["propagate", "--n", "101,1001,10001"]).status.success());
    let s: f64 = get(&meta(d.path(), "propagate.meta"), "slope").parse().unwrap();
    assert!((s - 1.0).abs() < 0.1);
}
