use std::path::Path;
use std::process::Command;

fn recover(args: &[&str]) -> (i32, String) {
    recover_with_threads(args, "1")
}

fn recover_with_threads(args: &[&str], threads: &str) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_recover"))
        .args(args)
        .env("RECOVER_THREADS", threads)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn writes_one_row_per_sweep_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let (code, err) = recover(&[
        "--algo", "bamram", "--matrix", "banded:64,2,0.5", "--function", "exp", "--sweep", "5,9,13", "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("s,relative_error,delta_RE,matvecs"));
    let s: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(s, ["5", "9", "13"]);
}

#[test]
fn same_seed_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let (code, err) = recover(&[
            "--algo", "spamram", "--matrix", "sparse:128,1/128,0.5", "--function", "exp", "--sweep", "16,32",
            "--seed", "3", "--out", path_str(&out),
        ]);
        assert_eq!(code, 0, "{err}");
        // drop the seconds column
        std::fs::read_to_string(&out)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let out = path_str(&out);
    let cases: [&[&str]; 5] = [
        &["--algo", "nope", "--matrix", "banded:64,2,0.5", "--sweep", "5", "--out", out],
        &["--algo", "bamram", "--matrix", "banded:64,2,0.5", "--sweep", "9,5", "--out", out],
        &["--algo", "bamram", "--matrix", "banded:64,2,0.5", "--sweep", "65", "--out", out],
        &["--algo", "bamram", "--matrix", "mm:/nonexistent.mtx", "--sweep", "5", "--out", out],
        &["--algo", "bamram", "--matrix", "sparse:64,2,0.5", "--sweep", "5", "--out", out],
    ];
    for args in cases {
        let (code, err) = recover(args);
        assert_eq!(code, 1, "{args:?}: {err}");
    }
}

#[test]
fn thread_count_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let args = ["--algo", "bamram", "--matrix", "banded:32,1,0.5", "--sweep", "3", "--out", path_str(&out)];
    for threads in ["0", "many"] {
        let (code, err) = recover_with_threads(&args, threads);
        assert_eq!(code, 1, "{threads}: {err}");
        assert!(err.contains("RECOVER_THREADS"));
    }
}

#[test]
fn numerical_failure_exits_with_two() {
    // log of an indefinite matrix has no real value
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let (code, err) = recover(&[
        "--algo", "bamram", "--matrix", "banded:64,2,0.5", "--function", "log", "--sweep", "5", "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 2, "{err}");
}
