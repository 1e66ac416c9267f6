use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ordseq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordseq"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = ordseq(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("report is json")
}

fn put(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

const ANTICHAIN2: &str = "elem u\nelem v\n";
const ANTICHAIN3: &str = "elem u\nelem v\nelem w\n";
const B2_FIELD: &str = "ideal,add,value\n-,u,1\n-,v,2\nu,v,3\nv,u,5\n";

#[test]
fn lattice_counts() {
    let dir = TempDir::new().unwrap();
    put(&dir, "chain.txt", "elem a\nelem b\nelem c\ncover a b\ncover b c\n");
    put(&dir, "anti.txt", ANTICHAIN3);
    let r = ok(dir.path(), &["lattice", "--poset", "chain.txt", "--depth", "3"]);
    assert_eq!((r["result"]["nodes"].as_u64(), r["result"]["edges"].as_u64()), (Some(4), Some(3)));
    let r = ok(dir.path(), &["lattice", "--poset", "anti.txt", "--depth", "3"]);
    assert_eq!((r["result"]["nodes"].as_u64(), r["result"]["edges"].as_u64()), (Some(8), Some(12)));
    assert_eq!(fs::read_to_string(dir.path().join("edges.csv")).unwrap().lines().count(), 13);
}

#[test]
fn bad_input_exits_with_2() {
    let dir = TempDir::new().unwrap();
    put(&dir, "bad.txt", "elem a\ncover a nowhere\n");
    let out = ordseq(dir.path(), &["lattice", "--poset", "bad.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));
    let out = ordseq(dir.path(), &["lattice"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_verdicts() {
    let dir = TempDir::new().unwrap();
    put(&dir, "p.txt", ANTICHAIN3);
    // Gradient of Φ(I) = |I|².
    let mut grad = String::from("ideal,add,value\n");
    let sets = [("-", 0), ("u", 1), ("v", 1), ("w", 1), ("u+v", 2), ("u+w", 2), ("v+w", 2)];
    for (ideal, n) in sets {
        for a in ["u", "v", "w"] {
            if !ideal.contains(a) {
                grad.push_str(&format!("{ideal},{a},{}\n", (n + 1) * (n + 1) - n * n));
            }
        }
    }
    put(&dir, "grad.csv", &grad);
    let r = ok(dir.path(), &["check", "--poset", "p.txt", "--field", "grad.csv"]);
    assert_eq!(r["result"]["path_independence"]["independent"], Value::Bool(true));
    assert_eq!(r["result"]["bianchi_max_defect"].as_f64(), Some(0.0));
    assert!(dir.path().join("potential.csv").exists());
    assert!(dir.path().join("theta.csv").exists());

    // Perturb one face of the exported curvature.
    let kappa = fs::read_to_string(dir.path().join("kappa.csv")).unwrap();
    let perturbed = kappa.replacen("-,u,v,0", "-,u,v,1", 1);
    assert_ne!(perturbed, kappa);
    put(&dir, "bumped.csv", &perturbed);
    let r = ok(dir.path(), &["check", "--poset", "p.txt", "--kappa", "bumped.csv"]);
    assert_eq!(r["result"]["cube_consistency"]["consistent"], Value::Bool(false));
    assert_eq!(r["result"]["cube_consistency"]["witness"]["cube"], "-; u, v, w");
}

#[test]
fn reconstruct_round_trip_and_failures() {
    let dir = TempDir::new().unwrap();
    put(&dir, "p.txt", ANTICHAIN3);
    let mut field = String::from("ideal,add,value\n");
    let mut k = 0;
    for ideal in ["-", "u", "v", "w", "u+v", "u+w", "v+w"] {
        for a in ["u", "v", "w"] {
            if !ideal.split('+').any(|x| x == a) {
                k += 1;
                field.push_str(&format!("{ideal},{a},{}\n", (k * 7) % 11 - 5));
            }
        }
    }
    put(&dir, "g.csv", &field);
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    ok(dir.path(), &["check", "--poset", "p.txt", "--field", "g.csv", "--out", out]);
    let exported = fs::read_to_string(dir.path().join("out/kappa.csv")).unwrap();
    ok(
        dir.path(),
        &["reconstruct", "--poset", "p.txt", "--kappa", "out/kappa.csv", "--alpha", "out/alpha.csv", "--out", out],
    );
    assert_eq!(fs::read_to_string(dir.path().join("out/field.csv")).unwrap(), field);

    let zeros: String = exported
        .lines()
        .enumerate()
        .map(|(n, line)| {
            if n == 0 {
                format!("{line}\n")
            } else {
                let (head, _) = line.rsplit_once(',').unwrap();
                format!("{head},0\n")
            }
        })
        .collect();
    put(&dir, "zero.csv", &zeros);
    ok(dir.path(), &["reconstruct", "--poset", "p.txt", "--kappa", "zero.csv"]);
    let g = fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(g.lines().skip(1).all(|l| l.ends_with(",0")));

    put(&dir, "bad_kappa.csv", &zeros.replacen("-,u,v,0", "-,u,v,2", 1));
    let out = ordseq(dir.path(), &["reconstruct", "--poset", "p.txt", "--kappa", "bad_kappa.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cube"));
}

#[test]
fn plan_b2_fixture() {
    let dir = TempDir::new().unwrap();
    put(&dir, "p.txt", ANTICHAIN2);
    put(&dir, "g.csv", B2_FIELD);
    let r = ok(dir.path(), &["plan", "--poset", "p.txt", "--field", "g.csv"]);
    assert_eq!(r["result"]["dp"]["path"], "-:(v,u)");
    assert_eq!(r["result"]["dp"]["value"].as_f64(), Some(7.0));
    assert_eq!(r["result"]["equal"], Value::Bool(true));
    let table = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
    assert_eq!(table.lines().nth(1), Some("field,-:(v,u),-:(v,u),true,7"));
}

#[test]
fn unsupported_endpoint_is_a_precondition_failure() {
    let dir = TempDir::new().unwrap();
    put(&dir, "p.txt", "elem a\nelem b\ncover a b\n");
    put(&dir, "g.csv", "ideal,add,value\n-,a,1\na,b,1\n");
    let out = ordseq(dir.path(), &["plan", "--poset", "p.txt", "--field", "g.csv", "--endpoint", "b"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn empty_log_is_unidentified() {
    let dir = TempDir::new().unwrap();
    put(&dir, "log.csv", "case_id,activity,timestamp,outcome\n");
    let r = ok(dir.path(), &["estimate", "--log", "log.csv", "--family", "u,w,v"]);
    let est = &r["result"]["families"][0]["estimate"];
    assert_eq!(est["kappa"]["status"], "unidentified");
    assert_eq!(est["ci"]["status"], "unidentified");
    assert_eq!(est["classes"]["empty"]["count"].as_u64(), Some(0));
    let support = &r["result"]["families"][0]["support"];
    assert_eq!(support["diamonds"][0]["two_sided"], Value::Bool(false));
}

#[test]
fn simulated_pipeline_recovers_truth_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let sim = ok(dir.path(), &["simulate", "--episodes", "6000", "--seed", "11", "--out", "a"]);
    let truth = sim["result"]["order_effects"][0]["kappa"].as_f64().unwrap();
    assert_eq!(truth, 0.3125);
    let args = ["estimate", "--log", "a/log.csv", "--family", "u,w,v", "--seed", "5", "--out", "a"];
    let r = ok(dir.path(), &args);
    let kappa = r["result"]["families"][0]["estimate"]["kappa"]["value"].as_f64().unwrap();
    assert!((kappa - truth).abs() < 0.1, "kappa {kappa}");
    let first = fs::read(dir.path().join("a/estimate.json")).unwrap();
    ok(dir.path(), &args);
    assert_eq!(fs::read(dir.path().join("a/estimate.json")).unwrap(), first);

    ok(dir.path(), &["simulate", "--episodes", "6000", "--seed", "11", "--out", "b"]);
    assert_eq!(
        fs::read(dir.path().join("a/log.csv")).unwrap(),
        fs::read(dir.path().join("b/log.csv")).unwrap()
    );

    let r = ok(dir.path(), &["policy", "--log", "a/log.csv", "--family", "u,w,v", "--resplits", "5", "--out", "a"]);
    assert_eq!(r["result"]["families"][0]["tables"].as_array().unwrap().len(), 4);
    let sweep = fs::read_to_string(dir.path().join("a/lambda_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 4);
    let table3 = fs::read_to_string(dir.path().join("a/table3.csv")).unwrap();
    assert!(table3.lines().nth(1).unwrap().starts_with("F1,w->u,"));
}

#[test]
fn model_file_is_accepted() {
    let dir = TempDir::new().unwrap();
    let model = r#"{
        "poset": "elem a\nelem b\n",
        "horizon": 2,
        "contexts": ["only"],
        "propensity": [
            {"ideal": "-", "context": "only", "probs": {"a": 0.5, "b": 0.5}},
            {"ideal": "a", "context": "only", "probs": {"b": 1.0}},
            {"ideal": "b", "context": "only", "probs": {"a": 1.0}}
        ],
        "edge_reward": [{"context": "only", "ideal": "b", "action": "a", "value": -1.0}]
    }"#;
    put(&dir, "m.json", model);
    let r = ok(dir.path(), &["simulate", "--model", "m.json", "--episodes", "10"]);
    assert_eq!(r["result"]["order_effects"][0]["kappa"].as_f64(), Some(-1.0));
    put(&dir, "broken.json", "{\"poset\": 3}");
    assert_eq!(ordseq(dir.path(), &["simulate", "--model", "broken.json"]).status.code(), Some(2));
}
