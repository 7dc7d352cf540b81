use std::process::{Command, Output};

fn toric_lg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toric-lg")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn potential_csv_for_f2() {
    let out = toric_lg(&["potential", "--model", "f2(1/4)", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rows = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = rows.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["monomial", "exponents", "coefficient", "valuation"]);
    let rows: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().any(|r| r[2].contains("T^(3/8)") && r[2].contains("T^(7/8)")));
}

#[test]
fn critical_json_lists_points() {
    let out = toric_lg(&["critical", "--model", "cpn(2)", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "critical");
    assert_eq!(v["critical_points"].as_array().unwrap().len(), 3);
    assert_eq!(v["parameters"]["seed"], 7);
}

#[test]
fn verify_reports_verdicts() {
    let out = toric_lg(&["verify", "--model", "blowup_cp2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for name in ["count", "sum_formula", "blowup_quartic", "qsr_negative_control", "c1_match@t=0.05"] {
        let line = text.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap();
        assert!(line.contains(",true,"), "{line}");
    }
}

#[test]
fn qsr_relations_for_f2() {
    let out = toric_lg(&["qsr", "--model", "f2(1/4)", "--format", "csv"]);
    let text = stdout(&out);
    assert!(text.contains("linear,Z1 - Z3 = 0"));
    assert!(text.contains("linear,Z2 - 2*Z3 - Z4 = 0"));
}

#[test]
fn model_from_file() {
    let path = std::env::temp_dir().join("toric-lg-square.json");
    std::fs::write(
        &path,
        r#"{"name": "square", "dim": 2, "facets": [
            {"normal": [1, 0], "lambda": "0"}, {"normal": [0, 1], "lambda": "0"},
            {"normal": [-1, 0], "lambda": "-1"}, {"normal": [0, -1], "lambda": "-1"}]}"#,
    )
    .unwrap();
    let out = toric_lg(&["info", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["info"]["facets"].as_array().unwrap().len(), 4);
}

#[test]
fn bulk_and_basepoint_flags() {
    let out = toric_lg(&["critical", "--model", "cpn(2)", "--bulk", "1=0.1,0", "--u", "1/4,1/4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["parameters"]["bulk"][0]["facet"], 1);
}

#[test]
fn exit_codes() {
    assert_eq!(toric_lg(&["info", "--model", "nonsense"]).status.code(), Some(2));
    assert_eq!(toric_lg(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(toric_lg(&["info", "--model", "cpn(1)", "--input", "x.json"]).status.code(), Some(2));
    assert_eq!(toric_lg(&["--help"]).status.code(), Some(0));
    let bad = toric_lg(&["c1check", "--model", "cpn(2)", "--bulk", "1=0.5,0"]);
    assert_eq!(bad.status.code(), Some(1));
}
