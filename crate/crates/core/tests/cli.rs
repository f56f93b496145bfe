use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_laplace-cert");
const HEADER: &str = "N,leading,oracle,abs_error,remainder_magnitude,bound_ok,mgf_x_residual,mgf_y_residual,ks_stat";

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("LAPLACE_CERT_OUT").output().unwrap()
}

fn csv_rows(dir: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(dir.join("convergence.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn laplace_sweep_on_gauss1d() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = cli(&["run", "--problem", "gauss1d", "--checks", "laplace", "--n-sweep", "25,100,400,1600", "--output-path", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["25", "100", "400", "1600"]);
    assert!(rows.iter().all(|r| r[5] == "true"));
    assert!(rows.iter().all(|r| r[6].is_empty() && r[8].is_empty()));
    assert_eq!(report(&out)["passed"], true);
}

#[test]
fn fluctuations_on_exp1d_fill_ks_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = cli(&["run", "--problem", "exp1d", "--checks", "fluctuations", "--sample-count", "5000", "--output-path", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let ks: f64 = r[8].parse().unwrap();
        assert!(ks > 0.0 && ks < 0.05);
        assert!(!r[7].is_empty());
    }
}

#[test]
fn unknown_check_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = cli(&["run", "--problem", "gauss1d", "--checks", "laplace,bogus", "--output-path", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    assert!(!out.exists());
}

#[test]
fn bad_sweeps_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    for sweep in ["100,25", "1,25"] {
        let o = cli(&["run", "--problem", "gauss1d", "--n-sweep", sweep, "--output-path", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{sweep}");
    }
    assert!(!out.exists());
}

#[test]
fn degenerate_maximum_is_an_assumption_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("flat.toml");
    fs::write(
        &cfg,
        "[problem]\nlower = [-1.0]\nupper = [1.0]\nf = { kind = \"poly\", terms = [{ coef = -1.0, powers = [4] }] }\n",
    )
    .unwrap();
    let out = tmp.path().join("run");
    let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--output-path", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn list_names_the_catalog() {
    let o = cli(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() >= 7);
    assert!(lines[0].starts_with("name"));
    for name in ["gauss1d", "exp1d", "quartic1d", "gauss2d", "mixed2d", "gauss3d"] {
        assert!(lines.iter().any(|l| l.split_whitespace().next() == Some(name)), "{name}");
    }
    assert_eq!(text, String::from_utf8(cli(&["list"]).stdout).unwrap());
}

#[test]
fn flags_override_config_file_and_env_sets_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "problem = \"gauss2d\"\nn_sweep = [25, 100]\nseed = 5\ngrid_res = 32\nchecks = [\"laplace\"]\n").unwrap();
    let out = tmp.path().join("from-env");
    let o = Command::new(BIN)
        .args(["run", "--config", cfg.to_str().unwrap(), "--n-sweep", "100,400,1600"])
        .env("LAPLACE_CERT_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["config"]["n_sweep"], serde_json::json!([100, 400, 1600]));
    assert_eq!(r["config"]["seed"], 5);
    assert_eq!(r["config"]["grid_res"], 32);
    assert_eq!(r["problem"]["name"], "gauss2d");
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "problem = \"gauss1d\"\nsweep = [25]\n").unwrap();
    let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--output-path", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = cli(&[
            "run", "--problem", "mixed2d", "--checks", "laplace,sampler", "--n-sweep", "25,100",
            "--sample-count", "2000", "--seed", "42", "--output-path", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let mut r = report(&out);
        r["config"]["output_path"] = serde_json::Value::Null;
        (r, fs::read_to_string(out.join("convergence.csv")).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    assert!(a == b, "reports differ between identical runs");
}

#[test]
fn plotdata_from_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = cli(&["run", "--problem", "quartic1d", "--checks", "laplace,lln", "--output-path", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let p = cli(&["plotdata", out.to_str().unwrap()]);
    assert_eq!(p.status.code(), Some(0));
    let text = String::from_utf8(p.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,log_N,log_rel_error,log_mgf_x_residual,log_mgf_y_residual");
    assert_eq!(lines.len(), 5);
    let cols: Vec<&str> = lines[4].split(',').collect();
    assert_eq!(cols[0], "1600");
    assert!(cols[2].parse::<f64>().unwrap() < cols[1].parse::<f64>().unwrap() * -0.9);
    assert!(cols[4].is_empty());

    let empty = tmp.path().join("empty.json");
    fs::write(&empty, "{\"rows\": []}").unwrap();
    let p = cli(&["plotdata", empty.to_str().unwrap()]);
    assert_eq!(p.status.code(), Some(0));
    assert_eq!(String::from_utf8(p.stdout).unwrap().lines().count(), 1);

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"rows\": [{\"N\": \"x\"}]}").unwrap();
    assert_eq!(cli(&["plotdata", bad.to_str().unwrap()]).status.code(), Some(2));
}
