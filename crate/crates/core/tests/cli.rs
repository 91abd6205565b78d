use std::path::Path;
use std::process::{Command, Output};

fn jnsc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jnsc"))
        .current_dir(dir)
        .env_remove("JNSC_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_example_matrix(dir: &Path) {
    let c = (2.0_f64 / 101.01).sqrt();
    let text = format!(
        "2,3\n{:e},0,{:e}\n{:e},{:e},0\n",
        0.1 * c,
        10.0 * c,
        c,
        -10.0 * c
    );
    std::fs::write(dir.join("example.csv"), text).unwrap();
}

fn number_after(text: &str, key: &str) -> f64 {
    let start = text
        .find(key)
        .unwrap_or_else(|| panic!("{key} not in {text}"))
        + key.len();
    text[start..]
        .split(|c: char| c.is_whitespace() || c == ',' || c == ')')
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn exact_ric_on_example_matrix() {
    let dir = tempfile::tempdir().unwrap();
    write_example_matrix(dir.path());
    let o = jnsc(
        dir.path(),
        &["exact", "ric", "--matrix", "example.csv", "--k", "2"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let delta = number_after(&stdout(&o), "delta_2 = ");
    assert!((delta - 0.9998).abs() < 5e-4);
    assert!(dir.path().join("exact_ric.json").exists());
}

#[test]
fn exact_spark_and_nsc_on_example_matrix() {
    let dir = tempfile::tempdir().unwrap();
    write_example_matrix(dir.path());
    let o = jnsc(dir.path(), &["exact", "spark", "--matrix", "example.csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "spark = 3");
    let o = jnsc(
        dir.path(),
        &[
            "exact",
            "nsc",
            "--matrix",
            "example.csv",
            "--k",
            "1",
            "--p",
            "0.5",
            "--family",
            "lorentzian",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let gamma = number_after(&stdout(&o), "gamma = ");
    assert!((gamma - 2.402530733520421).abs() < 1e-8);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("exact_nsc.json")).unwrap())
            .unwrap();
    let numeric = json["gamma_numeric"].as_f64().unwrap();
    assert!((numeric - 2.4025).abs() < 0.003);
}

#[test]
fn bound_nsc_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = jnsc(
        dir.path(),
        &[
            "bound",
            "nsc",
            "--family",
            "lorentzian",
            "--p",
            "0.5",
            "--k",
            "1",
            "--k0",
            "1",
            "--delta",
            "0.5",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let g = number_after(&stdout(&o), "gamma_star = ");
    assert!((g - 0.8685860569).abs() < 1e-8);
}

#[test]
fn delta_out_of_range_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = jnsc(
        dir.path(),
        &[
            "bound",
            "nsc",
            "--family",
            "lorentzian",
            "--p",
            "0.5",
            "--k",
            "1",
            "--k0",
            "1",
            "--delta",
            "1.5",
        ],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("delta must lie in [0,1)"));
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["bound", "nsc", "--bogus", "1"],
        vec![
            "bound",
            "nsc",
            "--family",
            "lorentzian",
            "--k",
            "1",
            "--k0",
            "1",
            "--delta",
            "0.5",
        ],
        vec!["bound", "nsc", "--family", "nope", "--p", "0.5"],
        vec!["fig3", "--gaussian", "8x9"],
        vec!["exact", "spark", "--matrix", "missing.csv"],
    ] {
        let o = jnsc(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = jnsc(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("phase-diagram"));
}

#[test]
fn bound_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str, f64); 4] = [
        (
            &[
                "bound", "ric", "--family", "log_exp", "--k", "1", "--k0", "1", "--p", "0.5",
            ],
            "f1 = ",
            0.7260999469,
        ),
        (
            &[
                "bound",
                "ric",
                "--family",
                "mixed_norm",
                "--k",
                "1",
                "--k0",
                "1",
                "--p",
                "0.5",
            ],
            "f2 = ",
            0.6544034870,
        ),
        (
            &[
                "bound", "max-p", "--family", "log_exp", "--k", "1", "--k0", "1", "--delta", "0.5",
            ],
            "max_p = ",
            0.6275567454,
        ),
        (
            &[
                "gaussian-rows",
                "--n",
                "100",
                "--k0",
                "4",
                "--epsilon",
                "0.01",
                "--ric-bound",
                "0.5",
            ],
            "rows = ",
            7105.0,
        ),
    ];
    for (args, key, want) in cases {
        let o = jnsc(dir.path(), args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        assert!(
            (number_after(&stdout(&o), key) - want).abs() < 1e-8,
            "{args:?}"
        );
    }
    let o = jnsc(
        dir.path(),
        &[
            "bound", "max-k", "--family", "log_exp", "--k0", "4", "--delta", "0.9999", "--p", "1",
        ],
    );
    assert_eq!(stdout(&o).trim(), "max_k = 0");
}

#[test]
fn config_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"family": "lorentzian", "p": 0.5, "k": 1, "k0": 1, "delta": 0.9, "out": "from_config"}"#,
    )
    .unwrap();
    let o = jnsc(
        dir.path(),
        &["bound", "nsc", "--config", "run.json", "--delta", "0.5"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((number_after(&stdout(&o), "gamma_star = ") - 0.8685860569).abs() < 1e-8);
    assert!(dir.path().join("from_config/bound_nsc.json").exists());
    let o = jnsc(dir.path(), &["bound", "nsc", "--config", "run.json"]);
    assert!(number_after(&stdout(&o), "gamma_star = ") > 1.0);
}

#[test]
fn randomized_runs_need_a_seed_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let o = jnsc(dir.path(), &["fig4", "--gaussian", "8x9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
    for out in ["a", "b"] {
        let o = jnsc(
            dir.path(),
            &[
                "fig3",
                "--gaussian",
                "8x9",
                "--seed",
                "5",
                "--p-points",
                "20",
                "--out",
                out,
                "--threads",
                "2",
            ],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("K0 = 4"));
    }
    for k in 1..=4 {
        let name = format!("fig3_k{k}.csv");
        let a = std::fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b);
    }
    let head = std::fs::read_to_string(dir.path().join("a/fig3_k1.csv")).unwrap();
    assert!(head.starts_with("p,gamma_exact,gamma1_star,gamma2_star,gamma1f_star,gamma2f_star\n"));
}

#[test]
fn env_var_sets_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_jnsc"))
        .current_dir(dir.path())
        .env("JNSC_OUT_DIR", "env_out")
        .args(["fig5", "--k-max", "3", "--ratio", "equal"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("env_out/fig5_k0_eq_k.csv")).unwrap();
    assert!(csv.starts_with("K,K0,p,f1,f2\n1,1,0.05,"));
    assert_eq!(csv.lines().count(), 1 + 3 * 96);
}

#[test]
fn phase_diagram_from_vector_and_matrix_agree() {
    let dir = tempfile::tempdir().unwrap();
    write_example_matrix(dir.path());
    let common = ["--family", "lorentzian", "--lambda-points", "30"];
    let mut a = vec!["phase-diagram", "--v", "100,10,-1", "--out", "v"];
    a.extend(common);
    let mut b = vec!["phase-diagram", "--matrix", "example.csv", "--out", "m"];
    b.extend(common);
    for args in [a, b] {
        let o = jnsc(dir.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let v = std::fs::read_to_string(dir.path().join("v/phase_lorentzian.csv")).unwrap();
    let m = std::fs::read_to_string(dir.path().join("m/phase_lorentzian.csv")).unwrap();
    assert_eq!(v, m);
    assert_eq!(v.lines().count(), 1 + 30 * 100);
}
