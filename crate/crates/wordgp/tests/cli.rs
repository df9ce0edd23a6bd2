use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn wordgp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wordgp"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .env_remove("WORDGP_DATA_DIR")
        .output()
        .expect("run wordgp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a two-relation fixture as `fx.bin`, `fx.txt` and `fx.questions`.
fn fixture(dir: &Path) {
    let o = wordgp(
        &["synth", "--groups", "2", "--pairs", "6", "--dim", "8", "--distractors", "40", "--seed", "3", "--out", "fx"],
        dir,
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn synth_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    for ext in ["bin", "txt", "questions"] {
        assert!(dir.path().join(format!("fx.{ext}")).exists());
    }
    let q = fs::read_to_string(dir.path().join("fx.questions")).unwrap();
    assert_eq!(q.lines().filter(|l| l.starts_with(':')).count(), 2);
    // Same seed, same bytes.
    let first = fs::read(dir.path().join("fx.bin")).unwrap();
    fixture(dir.path());
    assert_eq!(fs::read(dir.path().join("fx.bin")).unwrap(), first);
}

#[test]
fn eval_rule_and_program_file() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let o = wordgp(&["eval", "--rule", "--embeddings", "fx.bin", "--questions", "fx.questions"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.last().unwrap() == "1.0"), "{rows:?}");

    fs::write(
        dir.path().join("progs.txt"),
        "# candidates\nadd(ARG2,sub(ARG1,ARG0))\nadd(ARG0)\nADD(arg2, SUB(arg1, arg0))\nbogus(ARG1)\n",
    )
    .unwrap();
    let o = wordgp(
        &["eval", "progs.txt", "--embeddings", "fx.txt", "--questions", "fx.questions", "--groups", "rel2", "--out", "eval.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.lines().any(|l| l.starts_with("error: ") && l.contains("line 3") && l.contains("line 5")), "{err}");
    let out = stdout(&o);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "2");
    assert_eq!(rows[1][0], "4");
    assert_eq!(rows[0].last(), rows[1].last());
    assert_eq!(fs::read_to_string(dir.path().join("eval.csv")).unwrap(), out);
}

#[test]
fn nearest_listing() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let o = wordgp(&["nearest", "r1a0", "--embeddings", "fx.bin", "-k", "3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("r1a0\t1.000000"));

    let o = wordgp(&["nearest", "r1a0", "--embeddings", "fx.bin", "-k", "1", "--exclude", "r1a0"], dir.path());
    assert_eq!(stdout(&o).lines().next().map(|l| l.split('\t').next().unwrap().to_string()), Some(lines[1].split('\t').next().unwrap().to_string()));

    let o = wordgp(&["nearest", "v:1,0,0,0,0,0,0,0", "--embeddings", "fx.bin", "-k", "1000"], dir.path());
    assert_eq!(stdout(&o).lines().count(), 64);

    let o = wordgp(&["nearest", "nosuchword", "--embeddings", "fx.bin"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: "));
}

fn evolve(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "evolve", "--embeddings", "fx.bin", "--questions", "fx.questions", "--pop", "30", "--gens", "3",
        "--survivors", "10", "--runs", "2", "--out", out,
    ];
    args.extend_from_slice(extra);
    wordgp(&args, dir)
}

#[test]
fn evolve_layout_report_and_transfer() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let o = evolve(dir.path(), "out", &["--groups", "2", "--seed", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let group = out.join("group-02-rel2");
    for f in ["train.txt", "test.txt", "run-00.json", "run-01.json", "run-00.log.csv", "run-01.log.csv", "aggregate.csv"] {
        assert!(group.join(f).exists(), "{f}");
    }
    assert!(out.join("manifest.json").exists());
    assert!(!out.join("group-01-rel1").exists());
    let log = fs::read_to_string(group.join("run-01.log.csv")).unwrap();
    assert!(log.starts_with("# manifest {"));
    assert_eq!(data_rows(&log).len(), 4);
    let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(group.join("run-01.json")).unwrap()).unwrap();
    assert_eq!(record["seed"], 6);
    assert_eq!(record["split_seed"], 5);
    assert_eq!(record["manifest"]["config"]["population_size"], 30);

    let report = wordgp(&["report", "out"], dir.path());
    assert!(report.status.success());
    assert_eq!(stdout(&report), stdout(&o));

    let t = wordgp(&["transfer", "out", "--embeddings", "fx.txt", "--questions", "fx.questions", "--out", "tr"], dir.path());
    assert!(t.status.success(), "{}", stderr(&t));
    let matrix = fs::read_to_string(dir.path().join("tr/transfer-matrix.csv")).unwrap();
    let rows = data_rows(&matrix);
    assert_eq!(rows.len(), 3);
    assert!(rows[2][0] == "rule");
    let best = fs::read_to_string(dir.path().join("tr/transfer-best.csv")).unwrap();
    assert_eq!(data_rows(&best).len(), 2);
    assert!(stdout(&t).contains("source_group"));

    fs::create_dir(dir.path().join("empty")).unwrap();
    let t = wordgp(&["transfer", "empty", "--embeddings", "fx.txt", "--questions", "fx.questions"], dir.path());
    assert_eq!(t.status.code(), Some(1));
}

#[test]
fn config_file_resume_and_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir(&data).unwrap();
    fixture(&data);
    let work = dir.path().join("work");
    fs::create_dir(&work).unwrap();
    fs::write(work.join("exp.cfg"), "# small\npop = 20\ngens = 2\nsurvivors = 5\nruns = 2\ngroups = rel1\n").unwrap();

    let run = |extra: &[&str]| {
        let mut args = vec!["evolve", "--config", "exp.cfg", "--embeddings", "fx.bin", "--questions", "fx.questions", "--out", "o"];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_wordgp"))
            .args(&args)
            .current_dir(&work)
            .env("RUST_LOG", "info")
            .env("WORDGP_DATA_DIR", &data)
            .output()
            .unwrap()
    };
    let first = run(&["--runs", "1"]);
    assert!(first.status.success(), "{}", stderr(&first));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(work.join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"], 1);
    assert_eq!(manifest["config"]["population_size"], 20);
    assert_eq!(PathBuf::from(manifest["embeddings"].as_str().unwrap()), data.join("fx.bin").canonicalize().unwrap());

    let again = run(&["--runs", "1", "--resume"]);
    assert!(again.status.success());
    assert!(stderr(&again).contains("reusing"), "{}", stderr(&again));
    assert_eq!(stdout(&again), stdout(&first));
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    fs::write(dir.path().join("bad.questions"), ": g\na b c\n").unwrap();
    let o = wordgp(&["eval", "--rule", "--embeddings", "fx.bin", "--questions", "bad.questions"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = wordgp(
        &["evolve", "--embeddings", "fx.bin", "--questions", "fx.questions", "--pop", "30", "--survivors", "100"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("survivors"), "{}", stderr(&o));
    let o = wordgp(&["evolve", "--embeddings", "missing.bin", "--questions", "fx.questions"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: "));
}
