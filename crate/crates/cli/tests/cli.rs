use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn straus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_straus"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn color_is_deterministic_json() {
    let args = ["color", "--group", "Zm:9", "--b", "3", "--n", "1"];
    let a = straus(&args);
    let b = straus(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["k"], 3);
    assert_eq!(v["case"]["odd"], 3);
}

#[test]
fn parity_verifies_on_integers() {
    let out = straus(&[
        "verify",
        "--group",
        "Z",
        "--b",
        "1",
        "--n",
        "2",
        "--coloring",
        "parity",
        "--window",
        "300",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"], "none");
    assert_eq!(v["window"]["kind"], "interval");
    assert_eq!(v["window"]["hi"], 300);
}

#[test]
fn product_coloring_file_round_trip_and_found_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    let out = straus(&[
        "color",
        "--group",
        "Zm:12",
        "--b",
        "3",
        "--maps",
        "id,x2",
        "--out",
        path_str(&file),
    ]);
    assert_eq!(code(&out), 0);
    // ord(3) = 4 gives 2 base colors, squared for two maps.
    assert_eq!(json(&out)["k"], 4);

    let ok = straus(&[
        "verify",
        "--group",
        "Zm:12",
        "--b",
        "3",
        "--maps",
        "x2",
        "--coloring",
        path_str(&file),
    ]);
    assert_eq!(code(&ok), 0);
    assert_eq!(json(&ok)["result"], "none");

    // Built for n = 1, so an n = 2 solution exists.
    let wrong_n = straus(&[
        "verify",
        "--group",
        "Zm:12",
        "--b",
        "3",
        "--n",
        "2",
        "--maps",
        "id,x2",
        "--coloring",
        path_str(&file),
    ]);
    assert_eq!(code(&wrong_n), 1);
    let v = json(&wrong_n);
    assert_eq!(v["result"], "found");
    assert_eq!(v["witness"]["pairs"].as_array().unwrap().len(), 2);
}

#[test]
fn rado_constant_solution_and_certificate() {
    let out = straus(&["rado", "--system", path_str(&fixture("system_4x4.txt"))]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["pr"], true);
    assert_eq!(v["t"], "3");

    let out = straus(&[
        "rado",
        "--system",
        path_str(&fixture("pair_sum.txt")),
        "--radius",
        "100",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["pr"], false);
    assert_eq!(v["certificate"]["coloring"]["k"], 2);
    assert_eq!(v["certificate"]["report"]["result"], "none");
}

#[test]
fn greedy_table_feeds_verify() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("g.csv");
    let out = straus(&[
        "greedy",
        "--group",
        "Z",
        "--b",
        "5",
        "--count",
        "41",
        "--out",
        path_str(&table),
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(v["used_colors"].as_u64().unwrap() <= 3);
    assert_eq!(v["report"]["result"], "none");

    let out = straus(&[
        "verify",
        "--group",
        "Z",
        "--b",
        "5",
        "--coloring",
        path_str(&table),
        "--window",
        "20",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"], "none");
}

#[test]
fn tree_death_is_a_negative_result() {
    let died = straus(&[
        "tree", "--group", "Zm:9", "--b", "3", "--k", "2", "--depth", "9",
    ]);
    assert_eq!(code(&died), 1);
    let v = json(&died);
    assert_eq!(v["died_at"], 7);
    assert!(v.get("path").is_none());

    let alive = straus(&[
        "tree", "--group", "Zm:9", "--b", "3", "--k", "3", "--depth", "9",
    ]);
    assert_eq!(code(&alive), 0);
    let v = json(&alive);
    assert_eq!(v["path"].as_array().unwrap().len(), 9);
    assert_eq!(v["levels"].as_array().unwrap().len(), 10);
}

#[test]
fn diagonalize_exports_a_verifiable_group() {
    let dir = tempfile::tempdir().unwrap();
    let group = dir.path().join("group.csv");
    let colors = dir.path().join("colors.csv");
    let events = dir.path().join("events.jsonl");
    let out = straus(&[
        "diagonalize",
        "--mode",
        "31",
        "--fixture",
        path_str(&fixture("mode31.txt")),
        "--fuel",
        "1000",
        "--group-csv",
        path_str(&group),
        "--coloring-csv",
        path_str(&colors),
        "--dump-events",
        path_str(&events),
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(v["audit"]["violations"].as_array().unwrap().is_empty());
    let stage = v["stage"].as_u64().unwrap();
    let lines = std::fs::read_to_string(&events).unwrap();
    assert_eq!(lines.lines().count() as u64, stage);
    for line in lines.lines() {
        serde_json::from_str::<Value>(line).unwrap();
    }

    let free = format!("free:{}", path_str(&group));
    let out = straus(&[
        "verify",
        "--group",
        &free,
        "--b",
        "1",
        "--coloring",
        path_str(&colors),
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"], "none");
    assert_eq!(v["window"]["kind"], "explicit");
}

#[test]
fn extractions() {
    let pa = straus(&[
        "extract",
        "--mode",
        "31",
        "--fixture",
        path_str(&fixture("mode31.txt")),
        "--kind",
        "pa",
    ]);
    assert_eq!(code(&pa), 0);
    let v = json(&pa);
    assert_eq!(v["extends_diagonal"], true);
    assert_eq!(v["g"].as_object().unwrap().len(), 20);

    let dnc = straus(&[
        "extract",
        "--mode",
        "32",
        "--fixture",
        path_str(&fixture("mode32.txt")),
        "--kind",
        "dnc",
        "--period",
        "2",
    ]);
    assert_eq!(code(&dnc), 0);
    let v = json(&dnc);
    assert_eq!(v["dnc"], true);
    assert!(v["g"]
        .as_object()
        .unwrap()
        .values()
        .all(|g| g.as_u64().unwrap() < 10));

    let sep = straus(&[
        "extract",
        "--mode",
        "31",
        "--events",
        path_str(&fixture("events.txt")),
        "--kind",
        "separator",
    ]);
    assert_eq!(code(&sep), 0);
    let x: Vec<u64> = json(&sep)["separator"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e.as_u64().unwrap())
        .collect();
    assert!(
        !x.contains(&0) && !x.contains(&3),
        "phi0 events lie outside"
    );
    assert!(x.contains(&1), "phi1 events lie inside");
}

#[test]
fn jockusch_reduction() {
    let out = straus(&[
        "jockusch",
        "--fixture",
        path_str(&fixture("jockusch_base.txt")),
        "--k",
        "2",
        "--fuel",
        "50",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["dnc"], true);
    assert_eq!(v["oracle_bound"], 4);
    assert_eq!(v["h"].as_object().unwrap().len(), 5);
}

#[test]
fn bad_input_exits_2() {
    assert_eq!(code(&straus(&["verify", "--group", "Q", "--b", "1"])), 2);
    assert_eq!(code(&straus(&["verify", "--b", "1"])), 2);
    assert_eq!(
        code(&straus(&[
            "greedy",
            "--group",
            "Z",
            "--b",
            "1",
            "--count",
            "5",
            "--palette",
            "2"
        ])),
        2
    );
    assert_eq!(
        code(&straus(&[
            "tree", "--group", "Zm:4", "--b", "1", "--k", "2", "--depth", "5"
        ])),
        2
    );
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.txt");
    assert_eq!(code(&straus(&["rado", "--system", path_str(&missing)])), 2);
}
