//! End-to-end runs of the binary on the sample configs and on broken inputs.

use measex::action::{ActionModel, Transform};
use measex::approx::from_distance_csv;
use measex::group::GroupModel;
use measex::measure::{Space, WeightedAtomSpace};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_measex")).args(args).output().unwrap()
}

fn run_config(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn profile_writes_csv_and_report() {
    let out = TempDir::new().unwrap();
    let o = run_config("profile", &configs().join("torus-profile.toml"), out.path(), &["--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.path().join("profile.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("alpha,k,c_star,witness"));
    assert!(csv.lines().count() > 1);
    let r = report(out.path());
    assert_eq!(r["schema"], "v1");
    assert_eq!(r["command"], "profile");
    assert_eq!(r["passed"], true);
    assert_eq!(r["provenance"]["seed"], 7);
    assert_eq!(r["provenance"]["scenario"]["name"], "sl2-torus");
    assert_eq!(r["operations"][0]["name"], "profile");
}

#[test]
fn export_dot_and_csv_round_trip() {
    let out = TempDir::new().unwrap();
    let o = run_config("export", &configs().join("rotation-export.toml"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dot = fs::read_to_string(out.path().join("graph.dot")).unwrap();
    assert!(dot.trim_start().starts_with("graph"));
    assert_eq!(dot.matches("--").count(), 3);
    let csv = fs::read_to_string(out.path().join("distances.csv")).unwrap();
    let space = from_distance_csv(&csv).unwrap();
    assert_eq!(space.len(), 3);
    assert_eq!(space.d(0, 1), Some(1));
}

#[test]
fn infinite_distances_survive_export() {
    let dir = TempDir::new().unwrap();
    // a swap of {0,1} and of {2,3}: the two pairs never meet
    let swap = Transform::Permutation(vec![1, 0, 3, 2]);
    let w = WeightedAtomSpace::uniform(4).unwrap();
    let action = ActionModel::new(GroupModel::free(1), Space::Atoms(w), vec![swap.clone(), swap]).unwrap();
    fs::write(dir.path().join("model.json"), action.to_json()).unwrap();
    let cfg = write_config(&dir, "model = \"model.json\"\n[export]\npartition = { kind = \"atoms\" }\nformats = [\"csv\"]\n");
    let out = dir.path().join("out");
    let o = run_config("export", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("distances.csv")).unwrap();
    assert!(csv.contains("inf"));
    let space = from_distance_csv(&csv).unwrap();
    assert_eq!(space.d(0, 2), None);
    assert_eq!(space.d(0, 1), Some(1));
}

#[test]
fn scenario_runs_listed_operations() {
    let out = TempDir::new().unwrap();
    let o = run_config("scenario", &configs().join("schmidt-exhaust.toml"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.path().join("model.json").exists());
    assert!(out.path().join("exhaustion.json").exists());
    assert!(out.path().join("profile.csv").exists());
    let r = report(out.path());
    let names: Vec<&str> = r["operations"].as_array().unwrap().iter().map(|o| o["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"exhaust") && names.contains(&"profile"));
}

#[test]
fn every_sample_config_passes() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let out = TempDir::new().unwrap();
        let o = run_config("scenario", &path, out.path(), &[]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), stderr(&o));
    }
}

#[test]
fn nasty_z_refutation_is_reported() {
    let out = TempDir::new().unwrap();
    let o = run_config("admissible", &configs().join("nasty-z.toml"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = fs::read_to_string(out.path().join("admissibility.txt")).unwrap();
    assert!(!table.is_empty());
}

#[test]
fn wrong_expectation_is_a_verification_failure() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(configs().join("nasty-z.toml")).unwrap().replace("\"refuted\"", "\"supported\"");
    let cfg = write_config(&dir, &text);
    let o = run_config("admissible", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert_eq!(report(&dir.path().join("out"))["passed"], false);
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[scenario]\nname = \"klein-bottle\"\n[profile]\nalphas = [\"1/4\"]\nks = [1]\n");
    let o = run_config("profile", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("klein-bottle"));
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(configs().join("torus-profile.toml")).unwrap() + "\ncolour = \"blue\"\n";
    let cfg = write_config(&dir, &text);
    let o = run_config("profile", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn bad_rational_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(configs().join("torus-profile.toml")).unwrap().replace("\"1/8\"", "\"1/0\"");
    let cfg = write_config(&dir, &text);
    let o = run_config("profile", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bad_flags_are_usage_errors() {
    let cfg = configs().join("torus-profile.toml");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(run(&["profile", "--config", cfg, "--frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["profile"]).status.code(), Some(2));
    assert_eq!(run(&["transmogrify", "--config", cfg]).status.code(), Some(2));
    let out = TempDir::new().unwrap();
    let o = run_config("profile", Path::new(cfg), out.path(), &["--strategy", "annealing"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn local_search_strategy_is_recorded() {
    let out = TempDir::new().unwrap();
    let o = run_config("cheeger", &configs().join("torus-cheeger.toml"), out.path(), &["--strategy", "local-search"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(out.path());
    assert_eq!(r["provenance"]["strategy"], "local-search");
    assert_eq!(r["provenance"]["exact"], false);
}
