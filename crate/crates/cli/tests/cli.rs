use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hlv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlv"))
        .args(args)
        .output()
        .expect("run hlv")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn frames_prints_one_index_per_line() {
    let o = hlv(&["frames", "--total", "300", "--fps", "30", "--max", "20"]);
    assert!(o.status.success());
    let expected: String = (0..10).map(|k| format!("{}\n", k * 30)).collect();
    assert_eq!(stdout(&o), expected);

    let o = hlv(&["frames", "--total", "1000", "--fps", "10", "--max", "20"]);
    assert_eq!(stdout(&o).lines().count(), 20);
    assert_eq!(stdout(&o).lines().last(), Some("950"));
}

#[test]
fn frames_rejects_bad_input() {
    let o = hlv(&["frames", "--total", "0", "--fps", "30", "--max", "20"]);
    assert_eq!(o.status.code(), Some(1));
    let o = hlv(&["frames", "--total", "10", "--fps=-1", "--max", "20"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reliability_and_partition() {
    let ann = fixture("bundle/annotations.csv");
    let o = hlv(&["reliability", s(&ann)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("question\talpha\tunits\tpairable\n"));
    assert!(out.contains("is_political\t0.77\t"));

    let o = hlv(&["reliability", s(&ann), "--fleiss", "--precision", "3"]);
    let out = stdout(&o);
    // The fixture has missing cells, so kappa is not defined.
    assert!(out.contains("is_saxony\t0.735\tn/a"), "{out}");

    let o = hlv(&["partition", s(&ann)]);
    let out = stdout(&o);
    assert!(out.contains("is_political\t0.77\tagreement"));
    assert!(out.contains("is_intolerant\t0.45\tdisagreement"));

    let o = hlv(&["partition", s(&ann), "--threshold", "0.3"]);
    assert!(!stdout(&o).contains("disagreement"));
}

#[test]
fn parse_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = hlv(&["reliability", s(&empty)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no records"));

    let o = hlv(&["reliability", s(&dir.path().join("absent.csv"))]);
    assert_eq!(o.status.code(), Some(1));

    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "jsd_log_base = 10\n[[questions]]\nid = \"q\"\n").unwrap();
    let ann = fixture("bundle/annotations.csv");
    let pred = fixture("bundle/gemma-3-4b.jsonl");
    let o = hlv(&["evaluate", s(&ann), s(&pred), "--config", s(&bad_cfg)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn nothing_evaluable_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[[questions]]\nid = \"q\"\n").unwrap();
    let ann = dir.path().join("a.csv");
    std::fs::write(&ann, "item_id,question_id,annotator_id,label\nx,q,a,yes\nx,q,b,yes\n").unwrap();
    let pred = dir.path().join("m.jsonl");
    std::fs::write(&pred, "{\"item\":\"other\",\"run\":\"1\",\"q\":true}\n").unwrap();
    let o = hlv(&["evaluate", s(&ann), s(&pred), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_converts_machine_to_table() {
    let golden = fixture("golden/report.json");
    let o = hlv(&["report", s(&golden), "--format", "table"]);
    assert!(o.status.success());
    let table = std::fs::read_to_string(fixture("golden/report.txt")).unwrap();
    assert_eq!(stdout(&o), table);

    let o = hlv(&["report", s(&golden), "--format", "machine"]);
    assert_eq!(stdout(&o), std::fs::read_to_string(&golden).unwrap());
}

#[test]
fn golden_table_marks_one_best_per_family_column() {
    let table = std::fs::read_to_string(fixture("golden/report.txt")).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| l.starts_with("gemma-3")).collect();
    // Agreement and disagreement sections each list both gemma models.
    assert_eq!(rows.len(), 4);
    for pair in rows.chunks(2) {
        let cells: Vec<Vec<&str>> = pair.iter().map(|l| l.split_whitespace().skip(2).collect()).collect();
        for col in 0..cells[0].len() {
            let marked = cells.iter().filter(|r| r[col].ends_with('*')).count();
            assert_eq!(marked, 1, "column {col} in {pair:?}");
        }
    }
}

#[test]
fn synth_writes_ingestible_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let o = hlv(&[
        "synth",
        "--out",
        s(&out),
        "--items",
        "30",
        "--question",
        "a=1.0",
        "--question",
        "b=0.2",
        "--model",
        "m1",
        "--seed",
        "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["annotations.csv", "m1.jsonl", "config.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let o = hlv(&[
        "evaluate",
        s(&out.join("annotations.csv")),
        s(&out.join("m1.jsonl")),
        "--config",
        s(&out.join("config.toml")),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("a         1.00   agreement"), "{text}");
    assert!(text.contains("Diagnostics: 0"));

    let o = hlv(&["synth", "--out", s(&out), "--question", "a=2"]);
    assert_eq!(o.status.code(), Some(1));
}
