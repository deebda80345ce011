use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_mhpm");

fn mhpm(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("MHPM_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn gradcheck_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("gc");
    let o = mhpm(&["gradcheck", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("tick,scope,metric,value\n"));
    assert!(csv.ends_with("# end\n"));
    assert!(csv.contains(",gradcheck,max_rel_error,"));
    let echo = std::fs::read_to_string(out.join("config-echo.txt")).unwrap();
    assert!(echo.contains(&format!("out_dir = {}", out.display())));
    assert!(out.join("checkpoint.txt").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for exp in ["gradcheck", "skinner"] {
        let a = tmp.path().join(format!("{exp}-a"));
        let b = tmp.path().join(format!("{exp}-b"));
        for d in [&a, &b] {
            assert_eq!(code(&mhpm(&[exp, "--seed", "5", "--out", d.to_str().unwrap()], &[])), 0);
        }
        let read = |d: &Path| std::fs::read(d.join("metrics.csv")).unwrap();
        assert_eq!(read(&a), read(&b), "{exp}");
    }
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write(tmp.path(), "a.ini", "[graph]\nwidth = 3\n");
    let badtype = write(tmp.path(), "b.ini", "[general]\nseed = many\n");
    let nosection = write(tmp.path(), "c.ini", "seed = 1\n");
    for cfg in [&unknown, &badtype, &nosection] {
        let o = mhpm(&["gradcheck", "--config", cfg], &[]);
        assert_eq!(code(&o), 2, "{cfg}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(code(&mhpm(&["nosuch"], &[])), 2);
    let resume = write(tmp.path(), "d.ini", "[general]\nresume = x.txt\n");
    assert_eq!(code(&mhpm(&["skinner", "--config", &resume], &[])), 2);
}

#[test]
fn type_error_names_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "a.ini", "[modulation]\ntau = soon\n");
    let o = mhpm(&["gradcheck", "--config", &cfg], &[]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("tau") && err.contains("real"), "{err}");
}

#[test]
fn contract_violation_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    // A finite-difference step this large cannot meet the tolerance.
    let cfg = write(tmp.path(), "a.ini", "[env]\ngc_step = 0.5\n");
    let out = tmp.path().join("o");
    let o = mhpm(&["gradcheck", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn io_errors_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write(tmp.path(), "plain", "x");
    let under_file = format!("{file}/out");
    assert_eq!(code(&mhpm(&["gradcheck", "--out", &under_file], &[])), 4);
    let missing = tmp.path().join("missing.ini");
    assert_eq!(code(&mhpm(&["gradcheck", "--config", missing.to_str().unwrap()], &[])), 4);
}

#[test]
fn out_dir_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let env_dir = tmp.path().join("env");
    let o = mhpm(&["gradcheck"], &[("MHPM_OUT", env_dir.to_str().unwrap())]);
    assert_eq!(code(&o), 0);
    assert!(env_dir.join("metrics.csv").exists());

    let cfg_dir = tmp.path().join("cfg");
    let cfg = write(tmp.path(), "a.ini", &format!("[general]\nout_dir = {}\n", cfg_dir.display()));
    let other = tmp.path().join("other");
    assert_eq!(code(&mhpm(&["gradcheck", "--config", &cfg], &[("MHPM_OUT", other.to_str().unwrap())])), 0);
    assert!(cfg_dir.join("metrics.csv").exists());
    assert!(!other.exists());

    let flag_dir = tmp.path().join("flag");
    let o = mhpm(&["gradcheck", "--config", &cfg, "--out", flag_dir.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    assert!(flag_dir.join("metrics.csv").exists());
}

#[test]
fn charlm_resume_from_checkpoint_file() {
    let tmp = tempfile::tempdir().unwrap();
    let base = "[env]\ncorpus_len = 2000\nlog_every = 20\n";
    let cfg = write(tmp.path(), "base.ini", base);
    let full = tmp.path().join("full");
    let half = tmp.path().join("half");
    let rest = tmp.path().join("rest");
    assert_eq!(code(&mhpm(&["charlm", "--config", &cfg, "--ticks", "160", "--out", full.to_str().unwrap()], &[])), 0);
    assert_eq!(code(&mhpm(&["charlm", "--config", &cfg, "--ticks", "80", "--out", half.to_str().unwrap()], &[])), 0);
    let resume_cfg = write(
        tmp.path(),
        "resume.ini",
        &format!("{base}[general]\nresume = {}\n", half.join("checkpoint.txt").display()),
    );
    let o = mhpm(&["charlm", "--config", &resume_cfg, "--ticks", "160", "--out", rest.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ck = |d: &Path| std::fs::read_to_string(d.join("checkpoint.txt")).unwrap();
    assert_eq!(ck(&full), ck(&rest));
    let rows = |d: &Path, from: u64| -> Vec<String> {
        std::fs::read_to_string(d.join("metrics.csv"))
            .unwrap()
            .lines()
            .filter(|l| l.split(',').next().and_then(|t| t.parse::<u64>().ok()).is_some_and(|t| t > from))
            .map(String::from)
            .collect()
    };
    assert_eq!(rows(&full, 80), rows(&rest, 0));
}
