use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_identset"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    p: String,
    grid: String,
    family_p: String,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", "outcome,mass\n00,3/4\n11,1/4\n");
    let grid = write(
        dir.path(),
        "grid.json",
        r#"{"theta": {"min": 0, "max": 1, "steps": 100}}"#,
    );
    let family_p = write(
        dir.path(),
        "fp.csv",
        "outcome,mass\n00,0.125\n01,0.375\n10,0.375\n11,0.125\n",
    );
    Fixture {
        p: p.to_string_lossy().into(),
        grid: grid.to_string_lossy().into(),
        family_p: family_p.to_string_lossy().into(),
        _dir: dir,
    }
}

#[test]
fn identify_sweep_emits_one_record_per_point() {
    let f = fixture();
    let out = run(&["identify", "--builtin", "jovanovic", "--p", &f.p, "--grid", &f.grid]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 101);
    for (k, rec) in lines.iter().enumerate() {
        assert_eq!(rec["index"], k);
        let expected = if k >= 50 { "in" } else { "out" };
        assert_eq!(rec["verdict"], expected, "point {k}");
    }
    assert_eq!(lines[0]["witness"], serde_json::json!(["11"]));
}

#[test]
fn identify_output_is_reproducible_and_resumable() {
    let f = fixture();
    let args = [
        "identify",
        "--builtin",
        "jovanovic",
        "--p",
        &f.p,
        "--grid",
        &f.grid,
        "--format",
        "csv",
    ];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(a, b);
    assert!(a.starts_with("index,theta,verdict,witness,method\n"));
    let mut resumed = args.to_vec();
    resumed.extend(["--start", "60"]);
    let tail = stdout(&run(&resumed));
    let expected: Vec<&str> = a.lines().skip(61).collect();
    let got: Vec<&str> = tail.lines().skip(1).collect();
    assert_eq!(got, expected);
}

#[test]
fn methods_agree_on_pure_games() {
    let f = fixture();
    let verdicts = |m: &str| -> Vec<String> {
        let out = run(&[
            "identify",
            "--builtin",
            "jovanovic",
            "--p",
            &f.p,
            "--grid",
            &f.grid,
            "--method",
            m,
        ]);
        assert!(out.status.success());
        stdout(&out)
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["verdict"].to_string())
            .collect()
    };
    let reference = verdicts("brute");
    for m in ["submodular", "maxflow", "cd"] {
        assert_eq!(verdicts(m), reference, "{m}");
    }
}

#[test]
fn mixed_method_on_non_2x2_game_exits_3() {
    let f = fixture();
    let out = run(&[
        "check",
        "--builtin",
        "oligopoly-2type",
        "--theta",
        "-0.25,-0.5,-0.4",
        "--p",
        &f.p,
        "--method",
        "mixed-convex",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn bad_inputs_exit_2() {
    let f = fixture();
    let out = run(&["identify", "--builtin", "nope", "--p", &f.p, "--grid", &f.grid]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "outcome,mass\n00,0.7\n11,0.7\n");
    let out = run(&[
        "identify",
        "--builtin",
        "jovanovic",
        "--p",
        bad.to_str().unwrap(),
        "--grid",
        &f.grid,
    ]);
    assert_eq!(out.status.code(), Some(2));
    let grid = write(dir.path(), "g.json", r#"{"alpha": {"min": 0, "max": 1, "steps": 3}}"#);
    let out = run(&[
        "identify",
        "--builtin",
        "jovanovic",
        "--p",
        &f.p,
        "--grid",
        grid.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_mixed_methods_on_family_game() {
    let f = fixture();
    for method in ["mixed-submodular", "mixed-convex"] {
        let out = run(&[
            "check",
            "--builtin",
            "family-bargaining",
            "--theta",
            "0.5",
            "--p",
            &f.family_p,
            "--method",
            method,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let rec: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
        assert_eq!(rec["verdict"], "in", "{method}");
    }
    let out = run(&[
        "check",
        "--builtin",
        "family-bargaining",
        "--theta",
        "0.5",
        "--p",
        &f.p,
        "--method",
        "mixed-convex",
    ]);
    let rec: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(rec["verdict"], "out");
    let witness = rec["witness"].as_array().unwrap();
    assert_eq!(witness.len(), 4);
}

#[test]
fn custom_game_file() {
    let dir = tempfile::tempdir().unwrap();
    let game = write(
        dir.path(),
        "game.json",
        r#"{"custom": {"actions": [2, 2], "payoffs": [[0, 0], [0, -1], [-1, 0], [-1, -1]]}}"#,
    );
    let f = fixture();
    let out = run(&["check", "--game", game.to_str().unwrap(), "--p", &f.family_p]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn core_vertices_and_scatter() {
    let out = run(&["core-vertices", "--builtin", "jovanovic", "--theta", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let vertices: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!vertices.is_empty());
    for v in &vertices {
        let total: f64 = v["vertex"]
            .as_object()
            .unwrap()
            .values()
            .map(|x| x.as_f64().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
    let args = [
        "mc-scatter",
        "--builtin",
        "family-bargaining",
        "--theta",
        "0.25",
        "--samples",
        "300",
        "--format",
        "csv",
        "--seed",
        "7",
    ];
    let a = run(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&run(&args)));
    assert_eq!(stdout(&a).lines().count(), 1 + 285);
}

#[test]
fn out_file_and_bench() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("res.csv");
    let out = run(&[
        "bench",
        "--builtin",
        "jovanovic",
        "--p",
        &f.p,
        "--grid",
        &f.grid,
        "--methods",
        "maxflow,submodular",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "game,method,points,seconds,per_second,inside");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains(",maxflow,101,") && lines[1].ends_with(",51"));
}
