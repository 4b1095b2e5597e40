use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kprod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kprod"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_record(o: &Output) -> serde_json::Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(err.trim()).expect("stderr holds one JSON record")
}

#[test]
fn square_pair_bound() {
    let o = kprod(&["bound", "--model", "heisenberg", "--lattice", "square2d", "--k", "2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["e_kp"].as_f64().unwrap() + 13.0 / 12.0).abs() < 1e-12);
    assert_eq!(v["k"], 2);

    let o = kprod(&["bound", "--model", "heisenberg", "--lattice", "square2d", "--k", "2", "--format", "csv"]);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("model,lattice,k,B,E_kp,best_shape"));
    assert!(lines.next().unwrap().contains(",-1.08333333,"));
}

#[test]
fn block_cap_is_reported() {
    let o = kprod(&["bound", "--model", "heisenberg", "--lattice", "square2d", "--k", "7"]);
    assert_eq!(o.status.code(), Some(4));
    let rec = error_record(&o);
    assert!(rec["message"].as_str().unwrap().contains("k = 7 exceeds cap 6"));
    assert_eq!(rec["error"], "unsupported");
}

#[test]
fn distinct_exit_codes() {
    let unknown_flag = kprod(&["bound", "--bogus"]);
    assert_eq!(unknown_flag.status.code(), Some(2));
    assert_eq!(error_record(&unknown_flag)["error"], "usage");

    let odd_chain = kprod(&["witness", "--n", "7"]);
    assert_eq!(odd_chain.status.code(), Some(3));

    let no_reference = kprod(&["reference", "--model", "ising", "--lattice", "cubic3d", "--field", "1"]);
    assert_eq!(no_reference.status.code(), Some(4));

    let field_on_heisenberg = kprod(&["bound", "--model", "heisenberg", "--lattice", "chain1d", "--k", "1", "--field", "1"]);
    assert_eq!(field_on_heisenberg.status.code(), Some(4));
}

#[test]
fn lemma_table() {
    let o = kprod(&["verify-lemmas", "--gammas", "1.5", "--restarts", "10"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("lemma,gamma,analytic,numeric,abs_diff\n"));
    assert!(out.lines().any(|l| l.starts_with("1,1.50000000,4.33333333,4.33333333,")));
    assert!(out.lines().any(|l| l.starts_with("2b,,4.00000000,4.00000000,")));
}

#[test]
fn sweep_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = kprod(&[
            "sweep", "--model", "ising", "--k", "2", "--bmin", "0.9", "--bmax", "1.2", "--step", "0.01", "--seed", "5",
            "--out", path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(path).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next(), Some("B,E_kp,E_0,E_g,F"));
    assert_eq!(text.lines().count(), 32);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["common"]["seed"], 5);
    assert!(meta["elapsed_seconds"].as_f64().is_some());
}

#[test]
fn regions_write_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("xx.csv");
    let o = kprod(&[
        "regions", "--model", "xx", "--k", "1", "--tmin", "0.1", "--tmax", "0.3", "--tstep", "0.1", "--bmin", "0",
        "--bmax", "0.2", "--bstep", "0.1", "--out", path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let body = fs::read_to_string(&path).unwrap();
    assert_eq!(body.lines().count(), 1 + 3 * 3);
    assert!(body.contains("0.100000000,0.00000000,1"));
    let summary = fs::read_to_string(Path::new(&format!("{}.tstar.csv", path.display()))).unwrap();
    assert!(summary.starts_with("B,E_kp,T_star\n"));
}

#[test]
fn reference_rows() {
    let o = kprod(&["reference", "--model", "xx", "--lattice", "chain1d"]);
    assert!(stdout(&o).contains("-1.27323954,free_fermion"));
    let o = kprod(&["reference", "--model", "heisenberg", "--lattice", "chain1d", "--temp", "0.1", "--sites", "10"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains(",exact_diag,10"));
}

#[test]
fn witness_and_shapes() {
    let o = kprod(&["witness", "--n", "8"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["saturated"], true);
    let o = kprod(&["shapes", "--lattice", "square2d", "--k", "4"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 9);
}
