use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::Value;

fn tagmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tagmax"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = tagmax(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn worked_csv(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("worked.csv");
    ok(&["gen", "--worked-example", "-o", p(&path)]);
    path
}

fn without_time(mut v: Value) -> Value {
    v["stats"].as_object_mut().unwrap().remove("wall_time_s");
    v
}

#[test]
fn naive_solve_on_the_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let csv = worked_csv(dir.path());
    let text = ok(&[
        "solve",
        "--data",
        p(&csv),
        "--algo",
        "naive",
        "-k",
        "1",
        "--tags",
        "T1,T2",
    ]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["entries"][0]["bits"], "1110");
    assert_eq!(v["stats"]["algorithm"], "naive");
    assert_eq!(v["stats"]["candidates_examined"], 16);
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a.csv"),
        dir.path().join("b.csv"),
        dir.path().join("c.csv"),
    );
    for (path, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        ok(&[
            "gen",
            "--n",
            "100",
            "--m",
            "8",
            "--r",
            "4",
            "--seed",
            seed,
            "-o",
            p(path),
        ]);
    }
    let read = |x: &Path| std::fs::read(x).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let first = String::from_utf8(read(&a)).unwrap();
    assert!(first.starts_with("id,a:A1,"));
    assert_eq!(first.lines().count(), 101);
}

#[test]
fn trained_model_solves_like_one_shot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let model = dir.path().join("m.json");
    ok(&[
        "gen",
        "--n",
        "300",
        "--m",
        "10",
        "--r",
        "5",
        "--seed",
        "3",
        "-o",
        p(&csv),
    ]);
    ok(&["train", "--data", p(&csv), "-o", p(&model)]);
    let args = [
        "--algo",
        "ett",
        "-k",
        "4",
        "--tags",
        "T1,T3=2,!T5",
        "--group-size",
        "3",
    ];
    let from_model: Value =
        serde_json::from_str(&ok(&[&["solve", "--model", p(&model)], &args[..]].concat())).unwrap();
    let one_shot: Value =
        serde_json::from_str(&ok(&[&["solve", "--data", p(&csv)], &args[..]].concat())).unwrap();
    assert_eq!(without_time(from_model), without_time(one_shot));
}

#[test]
fn every_algorithm_and_trace_flag() {
    let dir = tempfile::tempdir().unwrap();
    let csv = worked_csv(dir.path());
    for algo in ["naive", "ett", "pa", "hc"] {
        let v: Value = serde_json::from_str(&ok(&[
            "solve",
            "--data",
            p(&csv),
            "--algo",
            algo,
            "-k",
            "2",
            "--tags",
            "T1,T2",
            "--trace",
            "--pretty",
        ]))
        .unwrap();
        assert_eq!(v["entries"].as_array().unwrap().len(), 2, "{algo}");
        if algo != "naive" {
            assert_eq!(v["trace"]["kind"], algo);
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = worked_csv(dir.path());
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "id,a:x,t:y\n1,2,0\n").unwrap();
    let code = |args: &[&str]| tagmax(args).status.code().unwrap();
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["solve", "--tags", "T1"]), 1);
    assert_eq!(code(&["solve", "--data", p(&csv), "--tags", "T9"]), 1);
    assert_eq!(
        code(&["solve", "--data", p(&csv), "--tags", "T1", "-k", "0"]),
        1
    );
    assert_eq!(
        code(&[
            "solve",
            "--data",
            p(&csv),
            "--tags",
            "T1",
            "--algo",
            "pa",
            "--epsilon",
            "-1"
        ]),
        1
    );
    assert_eq!(
        code(&["solve", "--data", "/nonexistent.csv", "--tags", "T1"]),
        1
    );
    assert_eq!(
        code(&[
            "train",
            "--data",
            p(&bad),
            "-o",
            p(&dir.path().join("m.json"))
        ]),
        1
    );
    let out = tagmax(&["solve", "--data", p(&bad), "--tags", "y"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));
    // an unwritable output path is not the caller's data problem
    assert_eq!(
        code(&["gen", "--worked-example", "-o", "/nonexistent-dir/x.csv"]),
        2
    );
}

fn read_jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn bench_sweep_over_m_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (jsonl, csv) = (dir.path().join("r.jsonl"), dir.path().join("r.csv"));
    let args = [
        "bench",
        "--source-n",
        "1200",
        "--source-m",
        "12",
        "--source-r",
        "8",
        "--sweep",
        "m",
        "--values",
        "6,8,10",
        "--algos",
        "naive,ett,pa,hc",
        "--z",
        "6",
        "--reps",
        "2",
    ];
    let summary = ok(&[&args[..], &["-o", p(&jsonl), "--csv", p(&csv)]].concat());
    assert!(summary.contains("sweep m over 6,8,10"));
    let rows = read_jsonl(&jsonl);
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert_eq!(r["reps"], 2);
        assert_eq!(r["timed_out"], false);
        let m = r["m"].as_u64().unwrap();
        match r["algorithm"].as_str().unwrap() {
            "ett" => {
                assert_eq!(r["matches_oracle"], true);
                assert!(r["candidates_examined"].as_u64().unwrap() < 1 << m);
                assert_eq!(r["ratio"], 1.0);
            }
            "pa" => assert!(r["ratio"].as_f64().unwrap() >= r["bound"].as_f64().unwrap()),
            "hc" => assert!(r["bound"].is_null() && r["ratio"].as_f64().unwrap() <= 1.0),
            _ => assert_eq!(r["candidates_examined"].as_u64().unwrap(), 1 << m),
        }
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("sweep,value,algorithm,n,m,z,k,group_size"));
    assert_eq!(text.lines().count(), 13);

    // same sweep and seeds: identical counts and scores
    let again = dir.path().join("again.jsonl");
    ok(&[&args[..], &["-o", p(&again), "--parallel"]].concat());
    let strip = |rows: Vec<Value>| -> Vec<Value> {
        rows.into_iter()
            .map(|mut r| {
                let o = r.as_object_mut().unwrap();
                o.remove("times_s");
                o.remove("mean_time_s");
                r
            })
            .collect()
    };
    assert_eq!(strip(read_jsonl(&jsonl)), strip(read_jsonl(&again)));
}

#[test]
fn bench_timeouts_mark_rows_and_continue() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("r.jsonl");
    let summary = ok(&[
        "bench",
        "--source-n",
        "500",
        "--source-m",
        "18",
        "--source-r",
        "4",
        "--n",
        "500",
        "--z",
        "4",
        "--sweep",
        "algorithm",
        "--values",
        "naive,ett",
        "--m",
        "18",
        "--timeout",
        "0",
        "-o",
        p(&jsonl),
    ]);
    assert!(summary.contains("timed-out"));
    let rows = read_jsonl(&jsonl);
    assert_eq!(rows.len(), 2);
    assert!(rows
        .iter()
        .all(|r| r["timed_out"] == true && r["reps"] == 0));
}

#[test]
fn bench_group_size_and_n_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("g.jsonl");
    ok(&[
        "bench",
        "--source-n",
        "1000",
        "--source-m",
        "12",
        "--source-r",
        "8",
        "--sweep",
        "group-size",
        "--values",
        "2,3,4,6",
        "--algos",
        "ett",
        "--m",
        "12",
        "--z",
        "4",
        "--n",
        "500",
        "--reps",
        "1",
        "-o",
        p(&jsonl),
    ]);
    let rows = read_jsonl(&jsonl);
    assert_eq!(
        rows.iter()
            .map(|r| r["group_size"].as_u64().unwrap())
            .collect::<Vec<_>>(),
        [2, 3, 4, 6]
    );
    // the tier-2 count does not depend on how attributes are grouped
    assert!(rows
        .windows(2)
        .all(|w| w[0]["candidates_examined"] == w[1]["candidates_examined"]));
    assert!(rows.iter().all(|r| r["matches_oracle"] == true));

    let out = tagmax(&[
        "bench",
        "--source-n",
        "100",
        "--sweep",
        "n",
        "--values",
        "50,5000",
        "--reps",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("slice"));
}

#[test]
fn serve_answers_http() {
    let dir = tempfile::tempdir().unwrap();
    let csv = worked_csv(dir.path());
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_tagmax"))
        .args(["serve", "--data", p(&csv), "--port", &port.to_string()])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let stream = loop {
        match TcpStream::connect(("127.0.0.1", port)) {
            Ok(s) => break s,
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => panic!("server did not start: {e}"),
        }
    };
    let body = r#"{"tags":["T1","T2"],"algorithm":"ett","group_size":2}"#;
    let mut stream = stream;
    write!(
        stream,
        "POST /solve HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut text = String::new();
    stream.read_to_string(&mut text).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(text.starts_with("HTTP/1.1 200"), "{text}");
    assert!(text.contains(r#""bits":"1110""#));
}
