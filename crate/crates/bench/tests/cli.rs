use std::path::Path;
use std::process::{Command, Output};

use wfst::oracle::graphs_equivalent;
use wfst::read_text;

fn wfst_cmd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfst"))
        .current_dir(dir)
        .env_remove("WFST_WORKERS")
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const A: &str = "nodes 2\nstart 0\naccept 1\narc 0 1 0 1 1\n";
const B: &str = "nodes 2\nstart 0\naccept 1\narc 0 1 1 2 2\n";

#[test]
fn compose_single_pair() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.txt", A);
    write(dir.path(), "b.txt", B);
    let out = wfst_cmd(dir.path(), &["compose", "a.txt", "b.txt", "-o", "c.txt"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let c = read_text(std::fs::read_to_string(dir.path().join("c.txt")).unwrap().as_bytes()).unwrap();
    assert_eq!(c.num_arcs(), 1);
    assert_eq!(c.weights(), &[3.0]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nodes 2 arcs 1"));
}

#[test]
fn mismatched_alphabets_give_empty_graph() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.txt", A);
    write(dir.path(), "b.txt", "nodes 2\nstart 0\naccept 1\narc 0 1 5 2 2\n");
    let out = wfst_cmd(
        dir.path(),
        &["compose", "a.txt", "b.txt", "-o", "c.txt", "--algo", "par"],
    );
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("c.txt")).unwrap(), "nodes 0\n");
}

#[test]
fn seq_and_par_files_agree() {
    let dir = tempfile::tempdir().unwrap();
    let a = wfst::gen::random_dag(30, 3, 3, 0.2, 1).unwrap();
    let b = wfst::gen::random_dag(30, 3, 3, 0.2, 2).unwrap();
    write(dir.path(), "a.txt", &wfst::to_text(&a));
    write(dir.path(), "b.txt", &wfst::to_text(&b));
    for algo in ["seq", "par"] {
        let out = wfst_cmd(
            dir.path(),
            &[
                "compose",
                "a.txt",
                "b.txt",
                "-o",
                &format!("{algo}.txt"),
                "--algo",
                algo,
                "--verify",
                "--workers",
                "3",
            ],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let s = read_text(std::fs::read_to_string(dir.path().join("seq.txt")).unwrap().as_bytes()).unwrap();
    let p = read_text(std::fs::read_to_string(dir.path().join("par.txt")).unwrap().as_bytes()).unwrap();
    // Files carry no pair keys, so compare against fresh compositions.
    let seq = wfst::compose_sequential(&a, &b, Default::default()).unwrap();
    let par = wfst::compose_parallel(&a, &b, Default::default(), 3).unwrap();
    assert_eq!(s, seq.graph);
    assert_eq!((p.num_nodes(), p.num_arcs()), (s.num_nodes(), s.num_arcs()));
    assert!(graphs_equivalent(&seq, &par).unwrap());
}

#[test]
fn parse_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.txt", "nodes 2\narc 0 5 0 0 0\n");
    write(dir.path(), "b.txt", B);
    let out = wfst_cmd(dir.path(), &["compose", "a.txt", "b.txt", "-o", "c.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let out = wfst_cmd(dir.path(), &["compose", "missing.txt", "b.txt", "-o", "c.txt"]);
    assert_eq!(out.status.code(), Some(1));
    let out = wfst_cmd(dir.path(), &["bench", "rand-nodes", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    let out = wfst_cmd(dir.path(), &["bench", "rand-nodes", "--algos", "gpu"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pair_space_cap_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let big = "nodes 20000\nstart 0\naccept 1\narc 0 1 0 0 0\n";
    write(dir.path(), "a.txt", big);
    write(dir.path(), "b.txt", big);
    let out = wfst_cmd(dir.path(), &["compose", "a.txt", "b.txt", "-o", "c.txt"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>().join(","),
        wfst_bench::CSV_HEADER
    );
    r.records().map(|x| x.unwrap()).collect()
}

#[test]
fn rand_nodes_row_count_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "bench",
        "rand-nodes",
        "--min-nodes",
        "16",
        "--max-nodes",
        "128",
        "--trials",
        "3",
        "--seed",
        "4",
        "--verify",
    ];
    let mut runs = Vec::new();
    for name in ["r1.csv", "r2.csv"] {
        let mut full = args.to_vec();
        full.extend(["--csv", name]);
        let out = wfst_cmd(dir.path(), &full);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        runs.push(csv_rows(&dir.path().join(name)));
    }
    // 4 sizes x 2 algorithms x 3 trials
    assert_eq!(runs[0].len(), 24);
    let counts = |rows: &[csv::StringRecord]| -> Vec<(String, String)> {
        rows.iter().map(|r| (r[11].to_string(), r[12].to_string())).collect()
    };
    assert_eq!(counts(&runs[0]), counts(&runs[1]));
    assert!(runs[0].iter().all(|r| r[10].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn rand_arcs_doubles_degree_with_twice_the_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let out = wfst_cmd(
        dir.path(),
        &[
            "bench",
            "rand-arcs",
            "--nodes",
            "32",
            "--min-degree",
            "0",
            "--max-degree",
            "8",
            "--trials",
            "1",
            "--algos",
            "seq",
            "--csv",
            "arcs.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("arcs.csv"));
    let pts: Vec<(usize, usize)> = rows
        .iter()
        .map(|r| (r[4].parse().unwrap(), r[5].parse().unwrap()))
        .collect();
    assert_eq!(pts, vec![(0, 1), (1, 2), (2, 4), (4, 8), (8, 16)]);
    assert_eq!(&rows[0][11], "0");
}

#[test]
fn workers_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |env: Option<&str>, flag: Option<&str>| -> String {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_wfst"));
        cmd.current_dir(dir.path()).env_remove("WFST_WORKERS");
        if let Some(e) = env {
            cmd.env("WFST_WORKERS", e);
        }
        cmd.args([
            "bench",
            "rand-nodes",
            "--min-nodes",
            "8",
            "--max-nodes",
            "8",
            "--trials",
            "1",
            "--algos",
            "par",
        ]);
        if let Some(f) = flag {
            cmd.args(["--workers", f]);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let row = text.lines().nth(1).unwrap().to_string();
        row.split(',').nth(8).unwrap().to_string()
    };
    assert_eq!(run(Some("3"), None), "3");
    assert_eq!(run(Some("3"), Some("2")), "2");
}

#[test]
fn lexicon_from_file() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "lex.txt",
        "cat k ae t\ncap k ae p\n# comment\ntack t ae k\npat p ae t\n",
    );
    let out = wfst_cmd(
        dir.path(),
        &[
            "bench",
            "lexicon",
            "--lexicon",
            "lex.txt",
            "--words",
            "2,4",
            "--frames",
            "6",
            "--trials",
            "1",
            "--verify",
            "--csv",
            "lex.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("lex.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows
        .iter()
        .all(|r| &r[0] == "lexicon" && &r[7] == "6" && r[11].parse::<usize>().unwrap() > 0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("emissions: 7 nodes, 24 arcs"));

    let out = wfst_cmd(
        dir.path(),
        &[
            "bench",
            "lexicon",
            "--lexicon",
            "lex.txt",
            "--words",
            "5",
            "--frames",
            "2",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}
