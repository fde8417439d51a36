use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hostcap::demo::three_bus_instance;
use serde_json::Value;
use tempfile::TempDir;

fn hostcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hostcap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
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

struct Inputs {
    dir: TempDir,
    network: PathBuf,
    scenarios: PathBuf,
}

impl Inputs {
    fn new(k: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let (net, scen) = three_bus_instance(k, 11).unwrap();
        let network = dir.path().join("network.json");
        let scenarios = dir.path().join("scenarios.csv");
        net.save(&network).unwrap();
        scen.save(&scenarios).unwrap();
        Inputs {
            dir,
            network,
            scenarios,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cvar_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("v.csv");
    std::fs::write(&file, "loss\n1\n2\n3\n4\n").unwrap();
    let out = hostcap(&["--json", "cvar", "--input", s(&file), "--delta", "0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["cvar"], 2.5);
    let out = hostcap(&["cvar", "--input", s(&file), "--delta", "0.5", "--column", "loss"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "3.5");
    let out = hostcap(&["cvar", "--input", s(&file), "--delta", "1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn usage_and_data_errors() {
    let inp = Inputs::new(10);
    assert_eq!(code(&hostcap(&["frobnicate"])), 2);
    let bad_nu = hostcap(&[
        "maximize", "--network", s(&inp.network), "--scenarios", s(&inp.scenarios), "--nu", "1.2", "--gamma", "0.5",
    ]);
    assert_eq!(code(&bad_nu), 2);
    let no_risk = hostcap(&["maximize", "--network", s(&inp.network), "--scenarios", s(&inp.scenarios)]);
    assert_eq!(code(&no_risk), 2);
    let missing = hostcap(&[
        "maximize", "--network", "/nonexistent.json", "--scenarios", s(&inp.scenarios), "--nu", "0.8", "--gamma", "0.8",
    ]);
    assert_eq!(code(&missing), 5);
    let garbled = inp.path("garbled.csv");
    std::fs::write(&garbled, "0.1,0.2\n").unwrap();
    let out = hostcap(&[
        "maximize", "--network", s(&inp.network), "--scenarios", s(&garbled), "--nu", "0.8", "--gamma", "0.8",
    ]);
    assert_eq!(code(&out), 5);
}

#[test]
fn maximize_is_byte_stable_and_validates() {
    let inp = Inputs::new(40);
    let run = |name: &str| {
        let out_path = inp.path(name);
        let out = hostcap(&[
            "maximize", "--network", s(&inp.network), "--scenarios", s(&inp.scenarios),
            "--nu", "0.8", "--gamma", "0.8", "--out", s(&out_path),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        out_path
    };
    let (a, b) = (run("a.json"), run("b.json"));
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(inp.path("a.json.manifest.json").exists());

    let result: Value = serde_json::from_str(&text).unwrap();
    let psi: Vec<f64> = serde_json::from_value(result["psi_star"].clone()).unwrap();
    let objective = result["objective"].as_f64().unwrap();
    assert!((psi.iter().sum::<f64>() - objective).abs() < 1e-6);
    assert!(psi.iter().all(|v| (-1e-9..=4.0 + 1e-6).contains(v)));

    let csv = inp.path("fractions.csv");
    let out = hostcap(&[
        "--json", "validate", "--result", s(&a), "--network", s(&inp.network), "--scenarios", s(&inp.scenarios),
        "--out-csv", s(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(csv.exists());
    assert!(inp.path("fractions.csv.py").exists());
}

#[test]
fn validate_rejects_mismatched_data() {
    let inp = Inputs::new(20);
    let result = inp.path("r.json");
    let out = hostcap(&[
        "maximize", "--network", s(&inp.network), "--scenarios", s(&inp.scenarios), "--nu", "0.8", "--gamma", "0.8",
        "--out", s(&result),
    ]);
    assert_eq!(code(&out), 0);
    let (_, other) = three_bus_instance(20, 12).unwrap();
    let other_path = inp.path("other.csv");
    other.save(&other_path).unwrap();
    let out = hostcap(&["validate", "--result", s(&result), "--network", s(&inp.network), "--scenarios", s(&other_path)]);
    assert_ne!(code(&out), 0);
}

#[test]
fn test_subcommand_learns_and_persists() {
    let inp = Inputs::new(30);
    let psi = inp.path("psi.txt");
    std::fs::write(&psi, "# candidates\n0.5, 0.5\n4 4\n0.25,0.25\n").unwrap();
    let kb = inp.path("kb.json");
    let args = [
        "--json", "test", "--network", s(&inp.network), "--scenarios", s(&inp.scenarios),
        "--nu", "0.8", "--gamma", "0.8", "--psi", s(&psi), "--kb", s(&kb),
    ];
    let first = hostcap(&args);
    assert_eq!(code(&first), 3, "{}", String::from_utf8_lossy(&first.stderr));
    let rows = json(&first)["results"].as_array().unwrap().clone();
    let decisions: Vec<&str> = rows.iter().map(|r| r["decision"].as_str().unwrap()).collect();
    assert_eq!(decisions, ["Acceptable", "Unacceptable", "Acceptable"]);
    assert!(kb.exists());

    let again = hostcap(&args);
    assert_eq!(code(&again), 3);
    let methods: Vec<String> = json(&again)["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["method"].as_str().unwrap().to_string())
        .collect();
    assert!(methods.iter().all(|m| m != "FullSolve"), "{methods:?}");

    let inspect = hostcap(&["--json", "kb-inspect", "--kb", s(&kb)]);
    assert_eq!(code(&inspect), 0);
    let v = json(&inspect);
    assert_eq!(v["accepted"], 2);
    assert_eq!(v["cuts"], 1);

    // a knowledge base is tied to its risk levels
    let other = hostcap(&[
        "test", "--network", s(&inp.network), "--scenarios", s(&inp.scenarios),
        "--nu", "0.7", "--gamma", "0.7", "--psi", s(&psi), "--kb", s(&kb),
    ]);
    assert_ne!(code(&other), 0);
    assert_ne!(code(&other), 3);
}

#[test]
fn config_file_supplies_defaults() {
    let inp = Inputs::new(20);
    let cfg = inp.path("run.toml");
    std::fs::write(&cfg, "nu = 0.9\ngamma = 0.9\n").unwrap();
    let from_cfg = hostcap(&[
        "--json", "--config", s(&cfg), "maximize", "--network", s(&inp.network), "--scenarios", s(&inp.scenarios),
    ]);
    assert_eq!(code(&from_cfg), 0);
    assert_eq!(json(&from_cfg)["nu"], 0.9);
    let flag_wins = hostcap(&[
        "--json", "--config", s(&cfg), "maximize", "--network", s(&inp.network), "--scenarios", s(&inp.scenarios),
        "--nu", "0.6",
    ]);
    assert_eq!(json(&flag_wins)["nu"], 0.6);
    assert_eq!(json(&flag_wins)["gamma"], 0.9);

    std::fs::write(&cfg, "nu = 0.9\ncolour = \"red\"\n").unwrap();
    let unknown = hostcap(&["--config", s(&cfg), "cvar", "--input", s(&inp.scenarios), "--delta", "0.5"]);
    assert_ne!(code(&unknown), 0);
}
