use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hrdea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrdea"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = "dmu,x1,x2,y\nA,2,3,1\nB,4,1,1\nC,4,4,1\nD,3,2,1.5\nE,5,5,2\n";
const SETS: &str = "\
# boxes around two DMUs
dmu=A shape=box semi_axes=0.5,0.5,0.1
dmu=C shape=ellipsoid semi_axes=1,1,0.2 xi=triangular
";

#[test]
fn solve_two_dmu_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "dmu,x,y\nA,1,1\nB,2,1\n");
    let out = dir.path().join("solve.csv");
    let o = hrdea(&["solve", "--data", &data, "--orientation", "input", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out).unwrap();
    assert!(text.starts_with("# command=solve\n"));
    let rows = data_rows(&text);
    assert_eq!(rows[0][0], "A");
    assert!(rows[0][1].parse::<f64>().unwrap().abs() < 1e-9);
    assert!((rows[1][1].parse::<f64>().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", SMALL);
    let sets = write(dir.path(), "sets.txt", SETS);
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let o = hrdea(&[
            "run", "--data", &data, "--sets", &sets, "--t", "10", "--seed", "7",
            "--threads", threads, "--out-dir", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read(out.join("distances.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.contains("# seed=7\n"));
    assert!(text.contains("# set.A=box center=2,3,1 semi_axes=0.5,0.5,0.1\n"));
    assert!(text.contains("# xi.C=triangular\n"));
}

#[test]
fn run_then_analyze_matches_fused() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", SMALL);
    let sets = write(dir.path(), "sets.txt", SETS);
    let split = dir.path().join("split");
    let fused = dir.path().join("fused");
    let common = ["--data", &data, "--sets", &sets, "--t", "200", "--seed", "3"];
    let mut args = vec!["run"];
    args.extend(common);
    args.extend(["--out-dir", split.to_str().unwrap()]);
    assert!(hrdea(&args).status.success());
    let o = hrdea(&["analyze", "--out-dir", split.to_str().unwrap(), "--tau", "0.9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut args = vec!["run"];
    args.extend(common);
    args.extend(["--out-dir", fused.to_str().unwrap(), "--analyze", "--tau", "0.9"]);
    assert!(hrdea(&args).status.success());

    for f in ["distances.csv", "report.csv", "histograms/A.csv", "histograms/E.csv"] {
        assert_eq!(fs::read(split.join(f)).unwrap(), fs::read(fused.join(f)).unwrap(), "{f}");
    }
    let report = fs::read_to_string(split.join("report.csv")).unwrap();
    assert!(report.starts_with("# seed=3\n"));
    assert!(report.contains("dmu,ERII0,E(D),LB,UB,sqrt(Var(D)),E(Theta),Category\n"));
}

#[test]
fn analyze_all_zero_row_is_c1() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = String::from("# seed=0\n# t=40\ndmu,d0");
    for l in 1..=40 {
        m.push_str(&format!(",it{l}"));
    }
    m.push_str("\nZ,0");
    m.push_str(&",0".repeat(40));
    m.push_str("\nW,0.3");
    for l in 1..=40 {
        m.push_str(&format!(",{}", 0.2 + l as f64 * 0.005));
    }
    m.push('\n');
    let matrix = write(dir.path(), "m.csv", &m);
    let out = dir.path().join("a");
    let o = hrdea(&["analyze", "--matrix", &matrix, "--tau", "0.95", "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&fs::read_to_string(out.join("report.csv")).unwrap());
    assert_eq!(rows[0][0], "Z");
    assert_eq!(rows[0][1], "1");
    assert_eq!(rows[0][7], "C1");
    assert_eq!(rows[1][7], "C4");
    let hist = fs::read_to_string(out.join("histograms/Z.csv")).unwrap();
    assert!(hist.contains("x,y\n0,1\n"));
}

#[test]
fn density_writes_fit_and_curve() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", SMALL);
    let sets = write(dir.path(), "sets.txt", SETS);
    let out = dir.path().join("r");
    assert!(hrdea(&[
        "run", "--data", &data, "--sets", &sets, "--t", "400", "--out-dir", out.to_str().unwrap(),
    ])
    .status
    .success());
    let curve = dir.path().join("c.csv");
    let matrix = out.join("distances.csv");
    let o = hrdea(&[
        "density", "--matrix", matrix.to_str().unwrap(), "--dmu", "C", "--points", "50",
        "--out", curve.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(curve).unwrap();
    assert!(text.contains("# alpha="));
    assert_eq!(data_rows(&text).len(), 50);
    // B has a point set, so its distances are constant.
    let o = hrdea(&["density", "--matrix", matrix.to_str().unwrap(), "--dmu", "B"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = hrdea(&[
        "bench", "--n", "20", "--reps", "1", "--gaps", "5", "--t", "10", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out).unwrap();
    assert!(text.contains("metric,alternative,I,II,III,mean\n"));
    assert_eq!(data_rows(&text).len(), 28);
}

#[test]
fn exit_codes() {
    assert_eq!(hrdea(&["solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(hrdea(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", SMALL);
    let o = hrdea(&["run", "--data", &data, "--t", "0", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--t"));
    let o = hrdea(&["analyze", "--tau", "1.5", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--tau"));
    let bad = write(dir.path(), "bad.csv", "dmu,x,y\nA,1,-2\n");
    let o = hrdea(&["solve", "--data", &bad]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn explicit_schema_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "firms.csv", "name,labour,capital,sales\nP,2,3,1\nQ,4,1,1\nR,4,4,1\n");
    let o = hrdea(&[
        "solve", "--data", &data, "--id", "name", "--inputs", "labour,capital", "--outputs", "sales",
        "--orientation", "input",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let flags = String::from_utf8(o.stdout).unwrap();
    write(dir.path(), "firms.csv.schema", "id=name\ninputs=labour,capital\noutputs=sales\n");
    let o = hrdea(&["solve", "--data", &data, "--orientation", "input"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), flags);
    let rows = data_rows(&flags);
    assert!(rows[2][1].parse::<f64>().unwrap() > 0.0);
}
