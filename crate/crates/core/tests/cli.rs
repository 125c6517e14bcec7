use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cusp-reflect")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

#[test]
fn reflect_a_piece() {
    let out = run(&["reflect", "--scheme", "r1-outer", "--n", "3", "--s", "2", "--point", "-0.25,0.1,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "0.25,0.00416666666667,0\n");
}

#[test]
fn jacobian_d_piece() {
    let out = run(&["jacobian", "--scheme", "r2-outer", "--n", "3", "--s", "2", "--point", "-0.25,0.01,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "opnorm=1 det=-0.25\n");
}

#[test]
fn boundary_points_echo() {
    for chart in ["r1-outer", "r1-inner", "r2-outer"] {
        let out = run(&["reflect", "--scheme", chart, "--point", "0.25,0.0625,0"]);
        assert_eq!(stdout(&out), "0.25,0.0625,0\n", "{chart}");
    }
}

#[test]
fn classify_prints_label() {
    let out = run(&["classify", "--scheme", "r2", "--point", "0.1,0.2,0"]);
    assert_eq!(stdout(&out), "RegionE\n");
    let out = run(&["classify", "--scheme", "r1", "--point", "0,0,0"]);
    assert_eq!(stdout(&out), "Origin\n");
}

#[test]
fn parse_errors_exit_2() {
    for args in [
        vec!["classify", "--scheme", "r1", "--point", "-0.25,0.1"],
        vec!["classify", "--scheme", "r1", "--point", "x,0,0"],
        vec!["classify", "--scheme", "r3", "--point", "0,0,0"],
        vec!["sweep", "--shells", "5-30"],
        vec!["extendnorm", "--u", "cube:2"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(stdout(&out).is_empty());
    }
}

#[test]
fn domain_errors_exit_3_and_name_the_region() {
    let out = run(&["reflect", "--scheme", "r2-outer", "--point", "-0.25,0.3,0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("OutsideNeighborhood"));
    let out = run(&["jacobian", "--scheme", "r1-outer", "--point", "0.25,0.0625,0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("BoundaryCusp"));
    let out = run(&["classify", "--scheme", "r1", "--n", "2", "--point", "0,0"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["extendnorm", "--scheme", "r2", "--direction", "outside"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_rejects_s_one() {
    let out = run(&["verify", "--s", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("window error"));
    assert!(stdout(&out).is_empty());
}

#[test]
fn verify_passes_and_fault_injection_fails_fd_rows() {
    let ok = run(&["verify"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let text = stdout(&ok);
    assert!(text.starts_with("name,samples,worst_error,threshold,pass\n"));
    assert!(!text.contains(",false"));

    let bad = run(&["verify", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(1));
    for line in stdout(&bad).lines().skip(1) {
        let failed = line.ends_with(",false");
        assert_eq!(failed, line.starts_with("fd_agreement_"), "{line}");
    }
}

#[test]
fn sweep_example_cells() {
    let out = run(&["sweep", "--scheme", "r1", "--p", "2", "--q", "1.0,1.1,1.3,1.5", "--samples", "1024"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some(
            "n,s,scheme,region,p,q,q_max_theory,admissible_theory,e_predicted,k_min,k_max,partial_sum,last_ratio,verdict,agrees,seed"
        )
    );
    for line in lines {
        assert!(line.ends_with(",true,42"), "{line}");
    }

    let out = run(&["sweep", "--scheme", "r2", "--p", "2", "--q", "1.3", "--samples", "256"]);
    let all = stdout(&out).lines().find(|l| l.contains(",all,")).expect("all row").to_string();
    let fields: Vec<&str> = all.split(',').collect();
    assert_eq!(fields[6], "1.42857142857");
    assert_eq!(fields[7], "true");
}

#[test]
fn sweep_window_error_rows() {
    let out = run(&["sweep", "--p", "2", "--q", "2,2.5", "--samples", "64", "--shells", "5..10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row.contains(",all,") && row.contains(",WindowError,na,"), "{row}");
    }
}

#[test]
fn scaling_on_a() {
    let out = run(&["scaling", "--region", "A", "--shells", "5..20"]);
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).expect("row").split(',').collect();
    let slope: f64 = row[4].parse().unwrap();
    assert!((slope - 2.0).abs() < 1e-9);
    assert_eq!(row[5], "2");
    assert_eq!(text.lines().count(), 17);
}

#[test]
fn extendnorm_brackets_the_threshold() {
    let last = |q: &str| {
        let out = run(&["extendnorm", "--u", "power:1.4", "--p", "2", "--q", q, "--samples", "1024"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        stdout(&out).lines().last().unwrap().rsplit(',').next().unwrap().to_string()
    };
    assert_eq!(last("1.3"), "Divergent");
    assert_eq!(last("1.1"), "Convergent");
}

#[test]
fn holder_fits_one_over_s() {
    let out = run(&["holder", "--s", "2"]);
    let text = stdout(&out);
    assert!(text.starts_with("t,osc,diam,fitted_exponent\n"));
    let fitted: f64 = text.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((fitted - 0.5).abs() < 1e-9);
}

#[test]
fn outputs_are_deterministic_and_carry_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["sweep", "--grid", "4", "--samples", "256"],
        &["scaling", "--shells", "5..15"],
        &["extendnorm", "--u", "clamp", "--q", "1.5", "--samples", "256"],
        &["holder", "--s", "3"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let mut texts = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("run{i}_{rep}.csv"));
            let mut full: Vec<&str> = args.to_vec();
            let p = path.to_str().unwrap().to_string();
            full.extend(["--out", &p]);
            let out = run(&full);
            assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
            assert!(stdout(&out).is_empty());
            texts.push(std::fs::read(&path).unwrap());
            let manifest: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(format!("{p}.manifest.json")).unwrap()).unwrap();
            assert_eq!(manifest["command"], args[0]);
            assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
            assert!(manifest["version"].is_string());
        }
        assert_eq!(texts[0], texts[1], "{args:?}");
    }
    let seeded = run(&["sweep", "--grid", "2", "--samples", "64", "--seed", "7"]);
    assert!(stdout(&seeded).lines().skip(1).all(|l| l.ends_with(",7")));
}
