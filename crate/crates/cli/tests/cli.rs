use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_excursions"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(o: &Output) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn density_starts_at_zero_and_integrates_to_n() {
    let o = run(&["density", "--n", "1", "--points", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("kind,x,value\n"));
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[11][0], "integral");
    let meta: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(meta["diagnostics"]["normalization_error"].as_f64().unwrap() < 1e-8);

    let o = run(&["density", "--n", "4", "--tau", "0.3", "--format", "json"]);
    let v = json(&o);
    assert!((v["meta"]["diagnostics"]["integral_over_n"].as_f64().unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn single_path_areas_coincide() {
    let o = run(&["areas", "1..1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let row = &json(&o)["rows"][0];
    let (b, t) = (row["bottom"].as_f64().unwrap(), row["top"].as_f64().unwrap());
    assert!((b - t).abs() < 1e-12);
    assert!((b - (std::f64::consts::PI / 8.0).sqrt()).abs() < 1e-9);
}

#[test]
fn areas_flag_and_positional_range_agree() {
    let a = run(&["areas", "1..2"]);
    let b = run(&["areas", "--n", "1..2"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let rows = csv_rows(&a);
    let top2: f64 = rows[1][2].parse().unwrap();
    assert!((top2 - 0.625 * std::f64::consts::PI.sqrt()).abs() < 1e-9);
}

#[test]
fn cdf_methods_agree_through_the_cli() {
    let mut values = Vec::new();
    for m in ["finite", "fredholm", "painleve"] {
        let o = run(&["cdf", "--n", "3", "--s-range", "0.5:2:0.5", "--method", m]);
        assert_eq!(o.status.code(), Some(0), "{m}");
        let col: Vec<f64> = csv_rows(&o).iter().map(|r| r[6].parse().unwrap()).collect();
        assert_eq!(col.len(), 4);
        values.push(col);
    }
    for v in &values[1..] {
        for (a, b) in v.iter().zip(&values[0]) {
            assert!((a - b).abs() < 1e-8);
        }
    }
    let o = run(&[
        "cdf", "--n", "2", "--s", "0.1,0.2", "--method", "series", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = json(&o)["rows"].as_array().unwrap().clone();
    assert!(rows.iter().all(|r| r["error_estimate"].as_f64().unwrap() > 0.0));
}

#[test]
fn joint_reports_a_single_row() {
    let o = run(&["joint", "--n", "2", "--times", "0.4,0.6", "--thresholds", "0.5,0.6"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 1);
    let v: f64 = rows[0][4].parse().unwrap();
    assert!(v > 0.0 && v < 1.0);
    assert!(rows[0][5].parse::<f64>().unwrap() < 1e-9);
}

#[test]
fn invalid_input_exits_with_2() {
    for args in [
        vec!["density", "--n", "1", "--tau", "1.5"],
        vec!["density", "--n", "0"],
        vec!["joint", "--n", "2", "--times", "0.6,0.4", "--thresholds", "1,1"],
        vec!["joint", "--n", "2", "--times", "0.4,0.6", "--thresholds", "1"],
        vec!["cdf", "--n", "2", "--side", "top", "--method", "series"],
        vec!["cdf", "--n", "2", "--s", "0.9", "--method", "series"],
        vec!["cdf", "--n", "2", "--method", "spline"],
        vec!["areas", "3..1"],
        vec!["simulate", "--observable", "joint", "--n", "2"],
        vec![
            "simulate",
            "--observable",
            "cdf",
            "--n",
            "4",
            "--sampler",
            "rejection",
            "--thresholds",
            "1",
        ],
        vec!["frobnicate"],
    ] {
        let o = run(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn simulation_is_reproducible_and_thread_independent() {
    let args = [
        "simulate",
        "--observable",
        "cdf",
        "--n",
        "2",
        "--thresholds",
        "0.2,0.4",
        "--samples",
        "20000",
        "--chunk",
        "1000",
    ];
    let a = run(&[&args[..], &["--threads", "1"]].concat());
    let b = run(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[&args[..], &["--seed", "2"]].concat());
    assert_ne!(a.stdout, c.stdout);
    for r in csv_rows(&a) {
        let z: f64 = r[7].parse().unwrap();
        assert!(z < 4.0, "{r:?}");
    }
}

#[test]
fn output_file_gets_a_metadata_sidecar() {
    let dir = std::env::temp_dir().join(format!("excursions-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("limits.csv");
    let dump = dir.join("paths.csv");
    let o = run(&["limits", "--n-list", "8,16", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("n,kernel_error,excursion,bessel,difference\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("limits.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["diagnostics"]["kernel_error_decreasing"], true);
    assert_eq!(meta["config"]["box_size"], 5.0);

    let o = run(&[
        "simulate",
        "--observable",
        "areas",
        "--n",
        "2",
        "--grid-steps",
        "16",
        "--samples",
        "2000",
        "--dump",
        dump.to_str().unwrap(),
        "--dump-count",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let lines = std::fs::read_to_string(&dump).unwrap().lines().count();
    assert_eq!(lines, 1 + 2 * 2 * 17);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn histogram_matches_the_density() {
    let o = run(&[
        "simulate",
        "--observable",
        "histogram",
        "--n",
        "2",
        "--samples",
        "100000",
        "--bins",
        "20",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!(v["meta"]["diagnostics"]["p_value"].as_f64().unwrap() > 1e-3);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 21);
    let total: u64 = rows.iter().map(|r| r["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 100_000);
}

#[test]
fn constants_report() {
    let o = run(&["constants", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = json(&o)["rows"].as_array().unwrap().clone();
    let get = |q: &str| {
        rows.iter().find(|r| r["quantity"] == q).unwrap()["value"]
            .as_f64()
            .unwrap()
    };
    assert!((get("c_l") - std::f64::consts::PI / (16.0 * 2f64.sqrt()) * get("bessel_integral")).abs() < 1e-14);
    assert!(get("c_h") < 0.0);
    assert_eq!(rows.len(), 4 + 2 * 5);
}

#[test]
fn selfcheck_passes() {
    let o = run(&["selfcheck", "--samples", "2000"]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(o.status.code(), Some(0), "{err}");
    assert_eq!(err.lines().filter(|l| l.starts_with("PASS")).count(), 7);
    assert!(csv_rows(&o).iter().all(|r| r[3] == "PASS"));
}
