use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use regmatch_bench::config::ExperimentConfig;
use regmatch_bench::report::{aggregate, Aggregate};
use regmatch_bench::run_experiment;

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_text(text).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_regmatch"))
}

#[test]
fn validate_c4() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("c4.edges");
    fs::write(&f, "4 4\n0 1\n1 2\n2 3\n3 0\n").unwrap();
    let r = run_experiment(&cfg(&format!("kind = validate\ngraph = file\nfile = {}\nseed = 0\n", f.display()))).unwrap();
    assert!(r.passed);
    assert_eq!(r.records[0].get("is_regular"), Some(1.0));
    assert_eq!(r.records[0].get("degree"), Some(2.0));
    assert_eq!(r.records[0].get("is_bipartite"), Some(1.0));
}

/// Probability that each edge of `P_3` joins under uniformly random distinct
/// ranks: count the orders in which it is the smaller.
fn p3_edge_frequencies() -> [f64; 2] {
    let orders = [[0usize, 1], [1, 0]];
    let mut hits = [0.0; 2];
    for o in orders {
        hits[o[0]] += 1.0;
    }
    hits.map(|h| h / orders.len() as f64)
}

#[test]
fn luby_one_round_on_p3() {
    let r = run_experiment(&cfg("kind = luby_one_round\ngraph = path\nn = 3\ntrials = 10000\nseed = 11\n")).unwrap();
    let exact = p3_edge_frequencies();
    assert_eq!(exact, [0.5, 0.5]);
    for (e, p) in exact.iter().enumerate() {
        let f = r.aggregates[&format!("edge_{e:02}")].mean;
        assert!((f - p).abs() <= 0.02, "edge {e}: {f}");
    }
    assert_eq!(r.records.len(), 10_000);
}

#[test]
fn preservation_persists_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pres");
    let c = cfg(&format!(
        "kind = preservation\ngraph = bipartite\nn = 600\ndegree = 512\nrounds = 4\ntrials = 2\nseed = 4\nout = {}\n",
        out.display()
    ));
    let r = run_experiment(&c).unwrap();
    let text = fs::read_to_string(out.join("rounds.csv")).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let mut per: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for row in rd.records() {
        let row = row.unwrap();
        let key = (row[0].parse().unwrap(), row[1].parse().unwrap());
        *per.entry(key).or_default() += row[3].parse::<usize>().unwrap();
    }
    let keys: Vec<_> = per.keys().copied().collect();
    assert_eq!(keys, (0..2).flat_map(|t| (1..=4).map(move |i| (t, i))).collect::<Vec<_>>());
    for rec in &r.records {
        for i in 1..=4 {
            assert_eq!(per[&(rec.trial, i)] as f64, rec.get(&format!("survivors_r{i}")).unwrap());
        }
    }
}

fn run_into(dir: &Path, workers: usize) -> (Vec<u8>, Vec<u8>) {
    let c = cfg(&format!(
        "kind = fast\ngraph = bipartite\nn = 300\ndegree = 8\neps = 0.1\ntrials = 6\nseed = 99\nworkers = {workers}\nout = {}\n",
        dir.display()
    ));
    run_experiment(&c).unwrap();
    (fs::read(dir.join("trials.csv")).unwrap(), fs::read(dir.join("report.json")).unwrap())
}

#[test]
fn reports_do_not_depend_on_scheduling() {
    let d = tempfile::tempdir().unwrap();
    let (csv1, _) = run_into(&d.path().join("a"), 1);
    let (csv3, _) = run_into(&d.path().join("b"), 3);
    let (csv1b, _) = run_into(&d.path().join("c"), 1);
    assert_eq!(csv1, csv3);
    assert_eq!(csv1, csv1b);
    // The JSON echoes the config, so it differs exactly in `workers` and `out`.
    let strip = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_slice(&fs::read(p.join("report.json")).unwrap()).unwrap();
        v["config"]["workers"] = 0.into();
        v["config"]["out"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(&d.path().join("a")), strip(&d.path().join("b")));
}

#[test]
fn csv_and_json_agree() {
    let d = tempfile::tempdir().unwrap();
    let (csv_bytes, json_bytes) = run_into(d.path(), 2);
    let json: serde_json::Value = serde_json::from_slice(&json_bytes).unwrap();
    let mut rd = csv::Reader::from_reader(csv_bytes.as_slice());
    let headers: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    for (i, h) in headers.iter().enumerate().skip(3) {
        let vals: Vec<f64> = rows.iter().map(|r| r[i].parse().unwrap()).collect();
        let from_csv = aggregate(&vals);
        let from_json: Aggregate = serde_json::from_value(json["aggregates"][h].clone()).unwrap();
        assert_eq!(from_csv, from_json, "{h}");
    }
    // Trial seeds are recorded and distinct.
    let seeds: std::collections::HashSet<&str> = rows.iter().map(|r| r.get(1).unwrap()).collect();
    assert_eq!(seeds.len(), 6);
    let names: Vec<String> = fs::read_dir(d.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    let mut names = names;
    names.sort();
    assert_eq!(names, ["report.json", "trials.csv"]);
}

#[test]
fn martingale_examples() {
    let r = run_experiment(&cfg("kind = martingale\nprocess = iid_bernoulli\ntail = lower\nt = 1000\ntrials = 4000\nseed = 1\n"))
        .unwrap();
    assert!(r.passed);
    assert!(!r.records.is_empty());
    let r = run_experiment(&cfg("kind = martingale\nprocess = zero\ntail = upper\nt = 1000\ntrials = 500\nseed = 1\n")).unwrap();
    assert!(r.passed);
    assert!(r.records.iter().all(|x| x.get("empirical") == Some(0.0)));
    let r = run_experiment(&cfg(
        "kind = martingale\nprocess = alternating\ntail = upper\np = 0.1666666\nt = 1000\ntrials = 4000\nseed = 2\n",
    ))
    .unwrap();
    assert!(r.passed);
}

#[test]
fn cli_round_trip_and_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let gen = bin()
        .args(["generate", "--seed", "3", "--trials", "1", "--set", "n=40", "--set", "degree=5", "--out"])
        .arg(d.path())
        .output()
        .unwrap();
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let edges = d.path().join("graph_0.edges");
    let val = bin().args(["validate", "--seed", "0"]).arg(&edges).output().unwrap();
    assert!(val.status.success());
    assert!(String::from_utf8_lossy(&val.stdout).contains("PASS is_regular"));

    let star = d.path().join("star.edges");
    fs::write(&star, "4 3\n0 1\n0 2\n0 3\n").unwrap();
    let val = bin().args(["validate", "--seed", "0"]).arg(&star).output().unwrap();
    assert_eq!(val.status.code(), Some(1));

    let bad = bin().args(["fast", "--seed", "1", "--set", "eps=3"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("`eps`"));
    let noseed = bin().args(["warmup"]).output().unwrap();
    assert_eq!(noseed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&noseed.stderr).contains("`seed`"));
    let wrong = bin().args(["warmup", "--seed", "1", "--set", "kind=fast"]).output().unwrap();
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn cli_config_file_and_lowerbound_sidecar() {
    let d = tempfile::tempdir().unwrap();
    let conf = d.path().join("lb.conf");
    fs::write(&conf, "# cycle gadgets\nfamily = cycle\nr = 2\nk = 6\nbudget = 2\ntrials = 30\nseed = 8\n").unwrap();
    let out = d.path().join("lb");
    let run = bin().arg("lowerbound").arg("--config").arg(&conf).arg("--out").arg(&out).output().unwrap();
    assert!(run.status.code() == Some(0) || run.status.code() == Some(1));
    let meta: regmatch::lowerbound::InstanceMetadata =
        serde_json::from_slice(&fs::read(out.join("instance.json")).unwrap()).unwrap();
    assert_eq!(meta.node_count, 6 * 6);
    let g = regmatch::graph::read_edge_list(std::io::BufReader::new(fs::File::open(out.join("instance.edges")).unwrap()))
        .unwrap();
    assert_eq!(g.node_count(), 36);
    let json = d.path().join("lb.json");
    fs::write(&json, r#"{"family": "cycle", "r": 2, "k": 6, "budget": 2, "trials": 30, "seed": 8}"#).unwrap();
    let out2 = d.path().join("lb2");
    bin().arg("lowerbound").arg("--config").arg(&json).arg("--out").arg(&out2).output().unwrap();
    assert_eq!(fs::read(out.join("trials.csv")).unwrap(), fs::read(out2.join("trials.csv")).unwrap());
}
