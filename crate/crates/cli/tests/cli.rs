use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const SMALL_FIG2: &str = "experiment = \"fig2\"\nN = 100\nbatches = 2\nt_grid = [0.5, 1.0]\nphi_values = [0.3]\n";

fn qpsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpsr")).args(args).output().expect("spawn qpsr")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qpsr-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn config(name: &str, text: &str) -> String {
    let path = scratch(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn validate_prints_hash() {
    let cfg = config("ok.toml", SMALL_FIG2);
    let out = qpsr(&["validate", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let hash = text.trim().strip_prefix("ok: fig2 config ").expect(&text);
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
}

#[test]
fn config_errors_exit_2_with_diagnostics() {
    let cfg = config("bad.toml", "experiment = \"fig2\"\nN = 0\nt_grid = [2.0, 1.0]\n");
    let out = qpsr(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("samples") && err.contains("t_grid"), "{err}");

    let out = qpsr(&["run", "--experiment", "fig9"]);
    assert_eq!(out.status.code(), Some(2));

    let pole = config("pole.toml", "experiment = \"fig3b\"\nmu = 0.7853981633974483\nt_grid = [2.0]\n");
    assert_eq!(qpsr(&["run", "--experiment", "fig3b", "--config", &pole]).status.code(), Some(2));
}

#[test]
fn csv_output_gets_a_sidecar() {
    let cfg = config("run.toml", SMALL_FIG2);
    let csv = scratch("fig2.csv");
    let out = qpsr(&["run", "--experiment", "fig2", "--config", &cfg, "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = fs::read_to_string(&csv).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("experiment,t,phi,gamma,p,method,value,stat_err,N,mu,seed"));
    assert_eq!(lines.count(), 2 * 3);
    let sidecar = fs::read_to_string(scratch("fig2.csv.json")).unwrap();
    assert!(sidecar.contains("config_hash"));
}

#[test]
fn json_format_and_seed_override() {
    let cfg = config("json.toml", SMALL_FIG2);
    let a = qpsr(&["run", "--experiment", "fig2", "--config", &cfg, "--format", "json", "--seed", "3"]);
    let b = qpsr(&["run", "--experiment", "fig2", "--config", &cfg, "--format", "json", "--seed", "4"]);
    assert!(a.status.success() && b.status.success());
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert!(text.trim_start().starts_with('{') && text.contains("\"rows\""));
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn unwritable_output_exits_1() {
    let cfg = config("io.toml", SMALL_FIG2);
    let missing = scratch("no/such/dir/out.csv");
    let out = qpsr(&["run", "--experiment", "fig2", "--config", &cfg, "--out", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn custom_hamiltonian_run() {
    let cfg = config(
        "custom.toml",
        "experiment = \"custom\"\nn_qubits = 1\ngenerators = [\"pauli:x:0\", \"pauli:z:0\"]\n\
         params = [0.4, 0.9]\nprobe = \"zero\"\nt_grid = [0.5, 1.0]\nN = 200\nbatches = 2\n",
    );
    let out = qpsr(&["run", "--experiment", "custom", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("custom,")).count(), 2 * 3);
}
