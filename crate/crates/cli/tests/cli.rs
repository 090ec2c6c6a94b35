use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eqsym::linalg::{identity, kron, nullspace, permutation_matrix, unvec, vstack, Mat, C64};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_eqsym");

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("specs")
        .join(name)
}

fn tmp(name: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn eqsym(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run(cmd: &str, file: &str, extra: &[&str]) -> (i32, String, String) {
    let path = spec(file);
    let mut args = vec!["run", cmd, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = eqsym(&args);
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn report(cmd: &str, file: &str) -> (i32, Value) {
    let (code, stdout, stderr) = run(cmd, file, &[]);
    assert!(code == 0 || code == 2, "{cmd} {file}: {stderr}");
    (code, serde_json::from_str(&stdout).unwrap())
}

fn read_mat(v: &Value) -> Mat {
    if let Some(p) = v.get("permutation") {
        let p: Vec<usize> = serde_json::from_value(p.clone()).unwrap();
        return permutation_matrix(&p);
    }
    let rows = v.as_array().unwrap();
    Mat::from_fn(rows.len(), rows[0].as_array().unwrap().len(), |i, j| {
        let e = &rows[i][j];
        match e.as_array() {
            Some(pair) => C64::new(pair[0].as_f64().unwrap(), pair[1].as_f64().unwrap()),
            None => C64::new(e.as_f64().unwrap(), 0.0),
        }
    })
}

#[test]
fn intertwiner_is_the_centering_map() {
    let (code, r) = report("intertwiners", "ex53.json");
    assert_eq!(code, 0);
    let res = &r["results"][0];
    assert_eq!(res["dim"]["value"], 1);
    let l = read_mat(&res["basis"][0]);
    let scale = l[(0, 0)] / C64::new(2.0 / 3.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 2.0 / 3.0 } else { -1.0 / 3.0 };
            assert!((l[(i, j)] / scale - C64::new(want, 0.0)).norm() < 1e-9);
        }
    }
}

/// Pair-space dimension from the spec's generators alone: intertwiners by
/// a nullspace, then pairs commuting with each of them by a second one.
fn pair_dim_oracle(path: &Path) -> usize {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let pairs: Vec<(Mat, Mat)> = v["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (read_mat(&p["u"]), read_mat(&p["v"])))
        .collect();
    let (du, dv) = (pairs[0].0.nrows(), pairs[0].1.nrows());
    let hom_rows: Vec<Mat> = pairs
        .iter()
        .map(|(a, b)| kron(&a.transpose(), &identity(dv)) - kron(&identity(du), b))
        .collect();
    let hom = nullspace(&vstack(&hom_rows), 1e-9);
    let rows: Vec<Mat> = hom
        .basis()
        .iter()
        .map(|x| {
            let l = unvec(&x.column(0).into_owned(), dv, du);
            let mut row = Mat::zeros(du * dv, du * du + dv * dv);
            row.view_mut((0, 0), (du * dv, du * du))
                .copy_from(&(-kron(&identity(du), &l)));
            row.view_mut((0, du * du), (du * dv, dv * dv))
                .copy_from(&kron(&l.transpose(), &identity(dv)));
            row
        })
        .collect();
    nullspace(&vstack(&rows), 1e-9).dim()
}

#[test]
fn nonuniq_flags_degenerate_blocks() {
    let (code, r) = report("nonuniq", "ex53.json");
    assert_eq!(code, 2);
    assert_eq!(r["exit_code"], 2);
    let res = &r["results"][0];
    assert_eq!(res["pair_space_dim"]["value"], 10);
    assert_eq!(pair_dim_oracle(&spec("ex53.json")), 10);
    let blocks: Vec<(String, String)> = res["degeneracy_blocks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| {
            (
                b["label"].as_str().unwrap().into(),
                b["presence"].as_str().unwrap().into(),
            )
        })
        .collect();
    assert_eq!(
        blocks,
        vec![
            ("W0".into(), "only_in_u".into()),
            ("W1".into(), "only_in_v".into())
        ]
    );
    assert!(
        res["witness"]["algebra_residual"]["value"]
            .as_f64()
            .unwrap()
            > 1e-3
    );
}

#[test]
fn identity_generator_closes_to_order_one() {
    let (code, r) = report("close", "id.json");
    assert_eq!(code, 0);
    assert_eq!(r["results"][0]["order"], 1);
}

#[test]
fn conv_audits_match_group_images() {
    for (file, dim, survivors) in [("z4_regular.json", 4, 4), ("z2_two_orbits.json", 4, 2)] {
        let (code, r) = report("conv-audit", file);
        assert_eq!(code, 0, "{file}");
        let res = &r["results"][0];
        assert_eq!(res["completeness"]["complete"]["value"], true);
        assert_eq!(res["completeness"]["equivariant_dim"]["value"], dim);
        assert_eq!(res["enumeration"]["survivor_count"], survivors);
    }
}

#[test]
fn tradeoff_reports_unlearnable_pairs() {
    let (code, r) = report("tradeoff", "learn.json");
    assert_eq!(code, 2);
    assert_eq!(r["results"][0]["unlearnable"][0]["symmetry"], "shift");
}

const ALL: [(&str, &str); 13] = [
    ("close", "id.json"),
    ("close", "s3.json"),
    ("decompose", "s3.json"),
    ("decompose", "ex53.json"),
    ("intertwiners", "ex53.json"),
    ("pair-space", "ex53.json"),
    ("nonuniq", "ex53.json"),
    ("conv-audit", "z4_regular.json"),
    ("semiconv-audit", "max3.json"),
    ("net-audit", "gated.json"),
    ("tradeoff", "learn.json"),
    ("converge", "generators.json"),
    ("spiral", "spiral.json"),
];

fn without_wall_time(s: &str) -> &str {
    // keys are sorted, so the wall time closes the report
    &s[..s.find("\"wall_time_s\"").expect("wall time present")]
}

#[test]
fn reports_are_deterministic() {
    for (cmd, file) in ALL {
        let (_, a, _) = run(cmd, file, &[]);
        let (_, b, _) = run(cmd, file, &[]);
        assert_eq!(without_wall_time(&a), without_wall_time(&b), "{cmd} {file}");
    }
}

#[test]
fn reports_round_trip_through_validation() {
    for (i, (cmd, file)) in ALL.iter().enumerate() {
        let out = tmp(&format!("report_{i}.json"));
        let (code, _, stderr) = run(cmd, file, &["--out", out.to_str().unwrap()]);
        assert!(code == 0 || code == 2, "{cmd}: {stderr}");
        let v = eqsym(&["validate", out.to_str().unwrap()]);
        assert!(
            v.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&v.stderr)
        );
        // floats re-parse to the values written
        let text = std::fs::read_to_string(&out).unwrap();
        let parsed: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["tolerances"]["tol"].as_f64(), Some(1e-9));
    }
}

#[test]
fn tampered_report_fails_validation() {
    let out = tmp("tampered.json");
    run("close", "id.json", &["--out", out.to_str().unwrap()]);
    let text = std::fs::read_to_string(&out)
        .unwrap()
        .replace("\"seed\"", "\"sead\"");
    std::fs::write(&out, text).unwrap();
    assert_eq!(
        eqsym(&["validate", out.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn parse_errors_carry_line_and_column() {
    let bad = tmp("bad.json");
    std::fs::write(
        &bad,
        "{\n  \"kind\": \"group\",\n  \"generators\": {\"permutations\": [[0, 2]]}\n}\n",
    )
    .unwrap();
    let out = eqsym(&["run", "close", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3, column"), "{err}");
}

#[test]
fn module_errors_name_their_module() {
    let (code, _, err) = run("close", "s3.json", &["--cap", "2"]);
    assert_eq!(code, 1);
    assert!(
        err.contains("[algebra-core] closure exceeded the cap of 2"),
        "{err}"
    );
}

#[test]
fn mismatched_spec_kind_is_an_error() {
    let (code, _, err) = run("nonuniq", "s3.json", &[]);
    assert_eq!(code, 1);
    assert!(err.contains("does not accept a `group` spec"), "{err}");
}

#[test]
fn csv_series() {
    let (code, out, _) = run("converge", "generators.json", &["--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "input,step,metric,value");
    // three steps, two metrics
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("0,0,generator_gap,"));

    let (_, out, _) = run("spiral", "spiral.json", &["--format", "csv"]);
    assert_eq!(out.lines().count(), 65);

    let (code, _, _) = run("close", "id.json", &["--format", "csv"]);
    assert_eq!(code, 1);
}

#[test]
fn several_specs_share_one_report() {
    let (a, b) = (spec("id.json"), spec("s3.json"));
    let out = eqsym(&["run", "close", a.to_str().unwrap(), b.to_str().unwrap()]);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    let orders: Vec<u64> = r["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["order"].as_u64().unwrap())
        .collect();
    assert_eq!(orders, vec![1, 6]);
}
