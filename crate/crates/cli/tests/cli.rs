//! End-to-end tests against the compiled binary: flag handling, exit codes,
//! output formats, and schema conformance of every JSON report shape.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use serde_json::Value;

fn run_with(args: &[&str], envs: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_growthgauge"));
    cmd.args(args);
    // Keep the host environment from leaking into precision resolution.
    cmd.env_remove("GG_PRECISION_BITS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    (
        out.status.code().expect("no signal"),
        String::from_utf8(out.stdout).expect("stdout is utf-8"),
        String::from_utf8(out.stderr).expect("stderr is utf-8"),
    )
}

fn gg(args: &[&str]) -> (i32, String, String) {
    run_with(args, &[])
}

fn schema() -> &'static jsonschema::Validator {
    static VALIDATOR: OnceLock<jsonschema::Validator> = OnceLock::new();
    VALIDATOR.get_or_init(|| {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../report.schema.json");
        let text = std::fs::read_to_string(path).expect("schema file exists");
        let doc: Value = serde_json::from_str(&text).expect("schema is valid JSON");
        jsonschema::validator_for(&doc).expect("schema compiles")
    })
}

/// Parses stdout as JSON and checks it against the published schema.
fn checked_json(stdout: &str) -> Value {
    let v: Value = serde_json::from_str(stdout).expect("stdout is JSON");
    if let Err(e) = schema().validate(&v) {
        panic!("schema violation: {e}\nreport was: {stdout}");
    }
    v
}

fn write_temp(name: &str, contents: &str) -> String {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).expect("temp file writes");
    path.to_string_lossy().into_owned()
}

#[test]
fn derive_prints_the_bare_canonical_derivative() {
    let (code, stdout, _) = gg(&["derive", "x*log(x)", "--order", "2"]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "1/x\n");
}

#[test]
fn taylor_csv_lists_exact_exp_coefficients() {
    let (code, stdout, _) = gg(&[
        "taylor", "exp(x)", "--x0", "0", "--order", "4", "--output", "csv",
    ]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "k,a_k\n0,1\n1,1\n2,1/2\n3,1/6\n4,1/24\n");
}

#[test]
fn classify_exponential_exits_one_with_verdict() {
    let (code, stdout, _) = gg(&["classify", "2^x", "--output", "json"]);
    assert_eq!(code, 1);
    let v = checked_json(&stdout);
    assert_eq!(v["classification"]["verdict"], "NotPolynomialTime");
    assert_eq!(v["classification"]["degree_estimate"], Value::Null);
}

#[test]
fn classify_quasilinear_exits_zero_with_degree() {
    let (code, stdout, _) = gg(&["classify", "x*ln(x)", "--output", "json"]);
    assert_eq!(code, 0);
    let v = checked_json(&stdout);
    assert_eq!(v["classification"]["verdict"], "PolynomialTimeCandidate");
    assert_eq!(v["classification"]["degree_estimate"], 2);
}

#[test]
fn classify_multivariate_reports_each_variable() {
    let (code, stdout, _) = gg(&["classify", "x*ln(x) + y^2", "--output", "json"]);
    assert_eq!(code, 0);
    let v = checked_json(&stdout);
    assert_eq!(v["variables"], serde_json::json!(["x", "y"]));
    assert_eq!(v["classification"]["per_variable"].as_array().unwrap().len(), 2);
}

#[test]
fn json_reports_are_byte_identical_across_runs() {
    let args = ["classify", "x*ln(x) + y^2", "--output", "json"];
    let (_, first, _) = gg(&args);
    let (_, second, _) = gg(&args);
    assert_eq!(first, second);
}

#[test]
fn derive_json_tree_conforms_to_schema() {
    // x^x lowers through exp/ln/mul/add, covering every tree node kind.
    let (code, stdout, _) = gg(&["derive", "x^x + x^2", "--output", "json"]);
    assert_eq!(code, 0);
    let v = checked_json(&stdout);
    assert_eq!(v["command"], "derive");
    assert_eq!(v["order"], 1);
}

#[test]
fn taylor_json_with_plot_conforms_to_schema() {
    let (code, stdout, _) = gg(&[
        "taylor", "exp(x)", "--order", "4", "--plot-to", "1", "--plot-points", "8",
        "--output", "json",
    ]);
    assert_eq!(code, 0);
    let v = checked_json(&stdout);
    assert_eq!(v["plot"].as_array().unwrap().len(), 8);
    // The remainder bound must dominate the actual truncation error.
    for row in v["plot"].as_array().unwrap() {
        let (f, t_n, bound) = (
            row["f"].as_f64().unwrap(),
            row["t_n"].as_f64().unwrap(),
            row["bound"].as_f64().unwrap(),
        );
        assert!((f - t_n).abs() <= bound * (1.0 + 1e-12));
    }
}

#[test]
fn radius_json_covers_both_verdict_shapes() {
    let (code, stdout, _) = gg(&["radius", "2^x", "--order", "16", "--output", "json"]);
    assert_eq!(code, 0);
    let v = checked_json(&stdout);
    assert_eq!(v["verdict"]["kind"], "Infinite");

    let (code, stdout, _) = gg(&[
        "radius", "1/(1-x)", "--order", "16", "--method", "root", "--output", "json",
    ]);
    assert_eq!(code, 0);
    let v = checked_json(&stdout);
    assert_eq!(v["verdict"]["kind"], "Finite");
    assert!((v["verdict"]["radius"].as_f64().unwrap() - 1.0).abs() < 1e-2);
}

#[test]
fn bound_json_conforms_to_schema() {
    let (code, stdout, _) = gg(&["bound", "x*ln(x)", "--output", "json"]);
    assert_eq!(code, 0);
    let v = checked_json(&stdout);
    assert_eq!(v["report"]["bounding_order"], 2);
}

#[test]
fn fit_roundtrip_from_csv_file() {
    let mut csv = String::from("size,seconds\n");
    for k in 4..16u32 {
        let n = f64::from(2u32.pow(k));
        csv.push_str(&format!("{},{}\n", n, 3.5e-9 * n * n.ln()));
    }
    let path = write_temp("fit_xlogx.csv", &csv);
    let (code, stdout, _) = gg(&["fit", "--input", &path, "--output", "json"]);
    assert_eq!(code, 0);
    let v = checked_json(&stdout);
    assert_eq!(v["ranking"][0]["family"], "x_log_x");
    assert_eq!(v["classification"]["verdict"], "PolynomialTimeCandidate");
}

#[test]
fn fit_with_too_few_samples_is_a_data_error() {
    let path = write_temp(
        "fit_short.csv",
        "size,seconds\n16,0.001\n32,0.002\n64,0.005\n128,0.011\n",
    );
    let (code, _, stderr) = gg(&["fit", "--input", &path]);
    assert_eq!(code, 65);
    assert!(stderr.contains("4"), "stderr names the sample count: {stderr}");
}

#[test]
fn fit_missing_file_is_a_data_error() {
    let (code, _, stderr) = gg(&["fit", "--input", "/nonexistent/samples.csv"]);
    assert_eq!(code, 65);
    assert!(stderr.contains("cannot read"));
}

#[test]
fn help_exits_zero_for_every_subcommand() {
    for sub in ["derive", "taylor", "radius", "bound", "classify", "fit"] {
        let (code, stdout, _) = gg(&[sub, "--help"]);
        assert_eq!(code, 0, "{sub} --help");
        assert!(stdout.contains("Usage"), "{sub} --help prints usage");
    }
    let (code, _, _) = gg(&["--help"]);
    assert_eq!(code, 0);
}

#[test]
fn usage_errors_exit_64() {
    let (code, _, _) = gg(&["derive", "x", "--bogus"]);
    assert_eq!(code, 64, "unknown flag");

    let (code, _, stderr) = gg(&["derive", "x", "--n-max", "0"]);
    assert_eq!(code, 64, "invalid config: {stderr}");

    let (code, _, stderr) = gg(&["taylor", "exp(x)", "--order", "12", "--n-max", "4"]);
    assert_eq!(code, 64, "order over explicit cap: {stderr}");

    let (code, _, stderr) = run_with(&["derive", "x"], &[("GG_PRECISION_BITS", "abc")]);
    assert_eq!(code, 64, "bad env value: {stderr}");
    assert!(stderr.contains("GG_PRECISION_BITS"));

    // Names the expression language can never bind are typos, not requests
    // to differentiate with respect to nothing.
    let (code, _, stderr) = gg(&["derive", "x^2", "--var", ""]);
    assert_eq!(code, 64, "empty variable name: {stderr}");

    let (code, _, stderr) = gg(&["classify", "x*y", "--vars", "x,,y"]);
    assert_eq!(code, 64, "empty list element: {stderr}");
}

#[test]
fn syntax_errors_exit_65() {
    let (code, _, stderr) = gg(&["derive", "x*"]);
    assert_eq!(code, 65);
    assert!(stderr.contains("syntax error"));

    let (code, _, stderr) = gg(&["classify", "frob(x)"]);
    assert_eq!(code, 65);
    assert!(stderr.contains("frob"));
}

#[test]
fn node_cap_overflow_exits_70() {
    let (code, _, stderr) = gg(&[
        "derive", "exp(exp(x))", "--order", "8", "--node-cap", "50",
    ]);
    assert_eq!(code, 70);
    assert!(stderr.contains("cap"));
}

#[test]
fn precision_env_var_is_honored() {
    let (code, stdout, _) = run_with(
        &["derive", "x^3", "--order", "2"],
        &[("GG_PRECISION_BITS", "256")],
    );
    assert_eq!(code, 0);
    assert_eq!(stdout, "6 * x\n");
}

#[cfg(unix)]
#[test]
fn closed_stdout_pipe_dies_quietly_instead_of_panicking() {
    use std::io::Read;
    use std::os::unix::process::ExitStatusExt;
    use std::process::Stdio;

    // Close the read end before the binary ever writes, so the first write
    // hits EPIPE deterministically. The process must die of SIGPIPE (13),
    // not panic with a backtrace the way EPIPE-through-println does.
    let (rx, tx) = std::io::pipe().expect("pipe");
    drop(rx);
    let mut child = Command::new(env!("CARGO_BIN_EXE_growthgauge"))
        .args(["radius", "2^x", "--order", "24", "--output", "json"])
        .env_remove("GG_PRECISION_BITS")
        .stdout(tx)
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    let status = child.wait().expect("child exits");
    let mut stderr = String::new();
    child
        .stderr
        .take()
        .expect("stderr piped")
        .read_to_string(&mut stderr)
        .expect("stderr is utf-8");

    assert_eq!(status.signal(), Some(13), "died of SIGPIPE, not {status:?}");
    assert!(!stderr.contains("panicked"), "no panic on stderr: {stderr}");
}
