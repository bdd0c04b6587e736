use std::fs;
use std::path::Path;

use logdisc::cli::run;
use logdisc::complement::{is_complement_p1, BoundaryP1, ComplementResult};
use logdisc::discrepancy::DiscrepancyProfile;
use logdisc::rational::{parse_list, q};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("logdisc").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn chain34(dir: &Path) -> String {
    write(
        dir,
        "chain34.graph",
        "curve E1 w=3\ncurve E2 w=4\nedge E1 E2\n",
    )
}

#[test]
fn solve_prints_profile_csv() {
    let dir = tempfile::tempdir().unwrap();
    let g = chain34(dir.path());
    let (code, out, err) = call(&["solve", &g]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out, "id,a\nE1,5/11\nE2,4/11\nmld,4/11\nindex,11\n");
    let profile = DiscrepancyProfile::from_csv(&out).unwrap();
    assert_eq!(profile.mld(), &q(4, 11));
    assert_eq!(call(&["solve", "--graph", &g]).1, out);
}

#[test]
fn scalar_commands() {
    let dir = tempfile::tempdir().unwrap();
    let g = chain34(dir.path());
    assert_eq!(call(&["classify", &g]).1, "class=A(2)\n");
    assert_eq!(call(&["mld", &g]).1, "mld=4/11\n");
    assert_eq!(call(&["index", &g]).1, "index=11\n");
    assert_eq!(call(&["index", &g, "--format", "csv"]).1, "index\n11\n");
    let fork = write(
        dir.path(),
        "d4.graph",
        "curve C w=2\ncurve L w=2\ncurve M w=2\ncurve R w=2\nedge C L\nedge C M\nedge C R\n",
    );
    let (code, out, _) = call(&["classify", &fork]);
    assert_eq!(code, 0);
    assert!(out.starts_with("class=D("), "{out}");
}

#[test]
fn empty_boundary_complement() {
    let (code, out, _) = call(&["complement", "--b", "", "--delta", "1/3"]);
    assert_eq!(code, 0);
    assert_eq!(out, "n=2\nplus=\npadding=1/2,1/2,1/2,1/2\neps=1/2\n");
}

#[test]
fn complement_record_is_a_valid_complement() {
    let (code, out, _) = call(&["complement", "--b", "2/3,1/2", "--delta", "1/3"]);
    assert_eq!(code, 0);
    let field = |key: &str| {
        out.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .unwrap()
            .to_string()
    };
    let result = ComplementResult::new(
        field("n").parse().unwrap(),
        parse_list(&field("plus")).unwrap(),
        parse_list(&field("padding")).unwrap(),
    );
    assert_eq!(
        result.eps_achieved,
        field("eps").parse::<logdisc::Rational>().unwrap()
    );
    let boundary = BoundaryP1::new(vec![q(2, 3), q(1, 2)]);
    assert!(is_complement_p1(&boundary, &result, &q(1, 4)));
}

#[test]
fn precondition_failures_exit_two() {
    let (code, out, err) = call(&["complement", "--b", "1,1/2", "--delta", "1/3"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.starts_with("error: kind=precondition reason="));
    assert_eq!(err.lines().count(), 1);

    let dir = tempfile::tempdir().unwrap();
    let g = write(
        dir.path(),
        "bad.graph",
        "curve A w=1\ncurve B w=1\nedge A B\n",
    );
    assert_eq!(call(&["solve", &g]).0, 2);
    assert_eq!(
        call(&["complement", "--b", "3/2,1/2", "--delta", "1/3"]).0,
        2
    );
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["frobnicate"],
        vec!["complement", "--delta", "1/3"],
        vec!["complement", "--b", "x", "--delta", "1/3"],
        vec!["solve", "/nonexistent/graph"],
        vec!["dtau", "--b", "1/2", "--tau", "1/10", "--mode", "biggest-a"],
        vec!["verify", "--suite", "nope"],
    ] {
        let (code, _, err) = call(&args);
        assert_eq!(code, 1, "{args:?}");
        assert!(err.starts_with("error: kind=usage"), "{err}");
        assert_eq!(err.lines().count(), 1);
    }
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "syntax.graph", "curve E1 w=x\n");
    assert_eq!(call(&["solve", &g]).0, 1);
    assert_eq!(call(&["--help"]).0, 0);
}

#[test]
fn dtau_modes() {
    let (code, out, _) = call(&["dtau", "--b", "2/5,1/4,3/4", "--tau", "1/10"]);
    assert_eq!(code, 0);
    assert_eq!(out, "b=2/5,1/4,3/4\ndtau=1/2,1/4,3/4\n");
    let (_, out, _) = call(&[
        "dtau",
        "--b",
        "2/5",
        "--tau",
        "1/5",
        "--mode",
        "biggest-a",
        "--set",
        "1/2,3/5",
    ]);
    assert_eq!(out, "b=2/5\ndtau=3/5\n");
    let (_, out, _) = call(&["dtau", "--b", "2/5", "--tau", "1/10", "--format", "csv"]);
    assert_eq!(out, "b,dtau\n2/5,1/2\n");
}

#[test]
fn subboundary_record() {
    let dir = tempfile::tempdir().unwrap();
    let g = chain34(dir.path());
    let (code, out, _) = call(&["subboundary", &g, "--delta", "1/3"]);
    assert_eq!(code, 0);
    assert!(out.contains("denominator_bound="));
    let (_, out, _) = call(&["subboundary", &g, "--delta", "0"]);
    assert!(out.starts_with("path=zero\n"));
}

#[test]
fn tower_trace_returns_to_start() {
    let dir = tempfile::tempdir().unwrap();
    let g = chain34(dir.path());
    let s = write(dir.path(), "t.script", "up-between E1 E2 a=1/2\ndown G1\n");
    let (code, out, err) = call(&["tower", &s, "--graph", &g]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "step,move,curve,N,total");
    assert!(lines
        .iter()
        .any(|l| l.starts_with("1,up-between E1 E2 a=1/2,G1,")));
    assert!(lines
        .iter()
        .filter(|l| l.starts_with("2,"))
        .all(|l| l.ends_with(",0/1,0/1")));

    let crepant = write(dir.path(), "c.script", "up-between E1 E2 a=9/11\n");
    let (_, out, _) = call(&["tower", &crepant, "--graph", &g, "--format", "record"]);
    assert!(out.ends_with("total=0/1\n"), "{out}");

    let bad = write(dir.path(), "bad.script", "down E1\n");
    assert_eq!(call(&["tower", &bad, "--graph", &g]).0, 2);
}

#[test]
fn atlas_table() {
    let (code, out, _) = call(&["atlas", "--p-max", "3"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "family,p,contractible,mld,index");
    assert_eq!(lines.len(), 1 + 15 * 2);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let g = chain34(dir.path());
    let target = dir.path().join("profile.csv");
    let (code, out, _) = call(&["solve", &g, "--out", target.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    assert_eq!(fs::read_to_string(target).unwrap(), call(&["solve", &g]).1);
}

#[test]
fn verify_quick_suite_is_deterministic() {
    let args = [
        "verify",
        "--suite",
        "quick",
        "--property",
        "residual",
        "--property",
        "dtau",
        "--property",
        "lemma3b",
    ];
    let (code, first, err) = call(&args);
    assert_eq!(code, 0, "{err}");
    assert!(first.starts_with("property,instances,failures,status\n"));
    assert!(first.lines().skip(1).all(|l| l.ends_with(",0,pass")));
    assert_eq!(call(&args).1, first);
    let (_, rec, _) = call(&[
        "verify",
        "--suite",
        "quick",
        "--property",
        "closed-form",
        "--format",
        "record",
    ]);
    assert!(rec.ends_with("status=pass\n"));
}

#[test]
fn verify_failure_exits_three() {
    // Above δ = 1/2 the index bound is m + 1 = 2, but five points at 1/3
    // need index 3.
    let (code, out, err) = call(&[
        "verify",
        "--suite",
        "quick",
        "--property",
        "curve-complement-theorem",
        "--delta",
        "2/3",
        "--max-points",
        "5",
    ]);
    assert_eq!(code, 3);
    assert!(out.contains("curve-complement-theorem,"));
    assert!(out.contains("b=1/3,1/3,1/3,1/3,1/3 delta=2/3"), "{out}");
    assert_eq!(
        err,
        "error: kind=verification reason=failed properties: curve-complement-theorem\n"
    );
    assert_eq!(
        call(&["verify", "--suite", "quick", "--property", "bogus"]).0,
        1
    );
}
