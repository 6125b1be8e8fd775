use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qrpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrpm")).args(args).output().expect("spawn qrpm")
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("cfg.toml");
    fs::write(
        &path,
        r#"
seed = 3
output_dir = "ignored"
replicas = 4

[model]
model = "tfim"
n = 2
j = 1.0
d = 0.8

[filter]
f_ub = 0.2
f_lb = 0.2
degree = 3

[oracle]
regime = "hadamard_block"
shots = 1000

[engine]
m_r = 1
m_c = 1
a0 = 1.0
iterations = 30

[sweep]
parameter = "d"
values = [0.6, 1.2]
"#,
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let o = qrpm(&["--threads", threads, "run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (read_tree(&a), read_tree(&b));
    assert!(ta.iter().any(|(name, _)| name.ends_with("trace_3.csv")));
    assert!(ta.iter().any(|(name, _)| name == "summary.csv"));
    assert_eq!(ta, tb);
}

#[test]
fn seed_override_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(qrpm(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(qrpm(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "4"]).status.success());
    let (ca, cb) = (fs::read(a.join("d_0.6/cache.csv")).unwrap(), fs::read(b.join("d_0.6/cache.csv")).unwrap());
    assert_ne!(ca, cb);
}

#[test]
fn table_expand_and_cache_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("t");
    let out_s = out.to_str().unwrap();
    assert!(qrpm(&["table", "--config", &cfg, "--out", out_s]).status.success());
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    assert!(table.starts_with("parameter,lhs,rhs,lam1_tilde,lam2_tilde,lam1_minus_lhs,lam1_plus_lhs,overlap\n"));
    assert_eq!(table.lines().count(), 3);

    assert!(qrpm(&["expand", "--config", &cfg, "--out", out_s]).status.success());
    assert!(out.join("d_1.2/expansion.csv").exists());

    let fill = qrpm(&["cache", "fill", "--config", &cfg, "--out", out_s]);
    assert!(fill.status.success());
    assert!(String::from_utf8_lossy(&fill.stdout).contains("sha256="));
    let inspect = qrpm(&["cache", "inspect", out.join("d_0.6/cache.csv").to_str().unwrap()]);
    assert!(inspect.status.success());
    assert!(String::from_utf8_lossy(&inspect.stdout).contains("\"entries\": 16"));
}

#[test]
fn check_weyl_passes() {
    let o = qrpm(&["check", "weyl"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("suite=weyl verdict=pass"));
}

#[test]
fn unknown_suite_lists_available() {
    let o = qrpm(&["check", "nonsense"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    for suite in ["weyl", "estimator", "fejer", "trotter", "recursion", "unbiasedness"] {
        assert!(err.contains(suite), "{err}");
    }
}

#[test]
fn invalid_config_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    fs::write(&path, "seed = 1\n[model]\nmodel = \"tfim\"\nn = 2\nj = 1.0\nd = 1.0\n[engine]\nm_r = 9\nm_c = 1\niterations = 1\n").unwrap();
    let o = qrpm(&["run", "--config", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}
