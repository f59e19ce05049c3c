use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vandconv")).args(args).env_remove("VANDCONV_CACHE_DIR").output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn uniform_multiplicative_formulas() {
    let out = stdout(&["formula", "--expr", "D1 V1' V1", "--order", "4", "--phase", "V1=uniform", "--format", "latex"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "M_{1} = D_{1}");
    assert_eq!(lines[1], "M_{2} = D_{2} + D_{1}^{2}");
    assert_eq!(lines[2], "M_{3} = D_{3} + 3D_{2}D_{1} + D_{1}^{3}");
    assert_eq!(lines[3], "M_{4} = D_{4} + \\frac{8}{3}D_{2}^{2} + 4D_{3}D_{1} + 6D_{2}D_{1}^{2} + D_{1}^{4}");
}

#[test]
fn json_formula_is_parseable() {
    let out = stdout(&["formula", "--expr", "V1' V1 + V2' V2", "--order", "2", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["formulas"].as_array().unwrap().len(), 2);
}

#[test]
fn ensemble_and_partition_counts() {
    assert_eq!(stdout(&["ensemble-moments", "--kind", "toeplitz", "--orders", "3"]), "M_1 = 1\nM_2 = 8/3\nM_3 = 11\n");
    let stats = stdout(&["partition-stats", "--n", "8"]);
    assert!(stats.contains("partitions 4140\n") && stats.contains("alternating 66\n") && stats.contains("cyclic_classes 14\n"));
}

#[test]
fn classification_lines() {
    assert_eq!(stdout(&["classify", "--expr", "D1 V1' V1"]), "SpectraOnly\n");
    let out = stdout(&["classify", "--expr", "V1' V2 V2' V1"]);
    assert!(out.starts_with("PhaseDependent: "), "{out}");
}

#[test]
fn exit_codes() {
    let bad = run(&["formula", "--expr", "V1 V1"]);
    assert_eq!(bad.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert_eq!(run(&["formula", "--expr", "D1 V1' V1", "--nope"]).status.code(), Some(2));
    assert_eq!(run(&["ensemble-moments", "--kind", "hankel", "--orders", "9"]).status.code(), Some(3));
    assert_eq!(run(&["simulate", "decay", "--trials", "10"]).status.code(), Some(2));
}

#[test]
fn convolve_then_deconvolve() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d.json");
    std::fs::write(&d, r#"{"normalization": "raw", "c": "1/2", "values": ["1", "7/6", "3/2"]}"#).unwrap();
    let m = dir.path().join("m.json");
    let out = stdout(&["convolve", "--model", "multiplicative", "--d", d.to_str().unwrap(), "--c-v", "1/2", "--orders", "3"]);
    std::fs::write(&m, &out).unwrap();
    let back = stdout(&["deconvolve", "--model", "multiplicative", "--m", m.to_str().unwrap(), "--v", "uniform", "--c-v", "1/2"]);
    let doc: serde_json::Value = serde_json::from_str(&back).unwrap();
    assert_eq!(doc["normalization"], "dndef");
    let values: Vec<&str> = doc["values"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(values, ["1/2", "7/12", "3/4"]);
}

#[test]
fn simulations_are_byte_identical() {
    let args = ["simulate", "moments", "--expr", "V1' V1", "--size", "V1=64x64", "--trials", "3", "--seed", "9"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    assert!(a.starts_with("order,N,estimate,stderr\n1,64,"));
}

#[test]
fn cache_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["formula", "--expr", "V1' V1", "--order", "5", "--format", "text"];
    let run_cached = || {
        let out = Command::new(env!("CARGO_BIN_EXE_vandconv"))
            .args(args)
            .env("VANDCONV_CACHE_DIR", dir.path())
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let cold = run_cached();
    assert!(dir.path().join("coefficients.cache").exists());
    assert_eq!(cold, run_cached());
    assert_eq!(cold, stdout(&args).into_bytes());
}
