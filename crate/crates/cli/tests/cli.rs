use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use charmer_cli::output::Table;
use charmer_cli::scene::Scene;

fn scenes() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes")
}

fn charmer(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_charmer"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn scene_arg(name: &str) -> String {
    scenes().join(name).to_string_lossy().into_owned()
}

fn read_table(path: &Path) -> Table {
    Table::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_scene(dir: &Path, text: &str) -> String {
    let path = dir.join("scene.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn every_shipped_scene_round_trips() {
    for entry in std::fs::read_dir(scenes()).unwrap() {
        let path = entry.unwrap().path();
        let s = Scene::load(&path).unwrap();
        assert_eq!(Scene::parse(&s.to_toml().unwrap()).unwrap(), s, "{}", path.display());
    }
}

#[test]
fn figure_lift_writes_csv_and_frames() {
    let dir = tempfile::tempdir().unwrap();
    let out = charmer(&["lift", &scene_arg("figure_a.toml")], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = read_table(&dir.path().join("trajectory.csv"));
    assert_eq!(traj.header.join(","), "t,gamma_1,gamma_2,defect,v_1,v_2,theta");
    // 1000 steps, every 10th kept
    assert_eq!(traj.rows.len(), 101);
    assert!(traj.column("defect").unwrap().iter().all(|d| *d < 1e-6));
    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let first_value = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(first_value, "2.0000000000000000e0");
    let frames = (0..5).filter(|i| dir.path().join(format!("frame_{i:04}.svg")).exists()).count();
    assert_eq!(frames, 5);
    let svg = std::fs::read_to_string(dir.path().join("frame_0004.svg")).unwrap();
    assert!(svg.contains("class=\"snake\"") && svg.contains("class=\"target\"") && svg.contains("class=\"snout\""));
    let turns = read_table(&dir.path().join("turns.csv"));
    assert_eq!(turns.rows.len(), 1);
    assert!(turns.rows[0][1] > 0.0);
}

#[test]
fn per_turn_chart_has_one_row_per_turn() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenes().join("figure_a.toml"))
        .unwrap()
        .replace("turns = 1", "turns = 326")
        .replace("frames = 5", "frames = 0")
        .replace("record_every = 10", "record_every = 1000");
    let scene = write_scene(dir.path(), &text);
    let out = charmer(&["lift", &scene], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let turns = read_table(&dir.path().join("turns.csv"));
    assert_eq!(turns.header, vec!["n", "distance", "v_1", "v_2", "theta"]);
    assert_eq!(turns.rows.len(), 326);
    let last = turns.rows.last().unwrap();
    assert!(last[1] < 0.01, "{last:?}");
}

#[test]
fn holonomy_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = charmer(&["holonomy", &scene_arg("figure_a.toml")], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let d: f64 = stdout.split("= ").nth(1).unwrap().trim().parse().unwrap();
    assert!(d > 0.01, "{stdout}");
    assert!(dir.path().join("z0.csv").exists() && dir.path().join("z1.csv").exists());

    let constant = std::fs::read_to_string(scenes().join("figure_a.toml"))
        .unwrap()
        .replace("kind = \"circle\"\ncenter = [2.1875, 0.0]", "kind = \"constant\"");
    let scene = write_scene(dir.path(), &constant);
    let out = charmer(&["holonomy", &scene], dir.path());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("sup_distance(z1, z0) = 0.0000000000000000e0"));

    let out = charmer(&["holonomy", &scene_arg("bivalued.toml")], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("2 component(s)"), "{stdout}");
    let mirror: f64 = stdout.lines().last().unwrap().split("= ").nth(1).unwrap().parse().unwrap();
    assert!(mirror < 1e-8);
}

#[test]
fn orbit_reports_rank_and_frames() {
    let dir = tempfile::tempdir().unwrap();
    let out = charmer(&["orbit", &scene_arg("polygon_3d.toml")], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("estimated rank: 3"), "{stdout}");
    let table = read_table(&dir.path().join("orbit.csv"));
    assert_eq!(table.header.len(), 4 + 3 * 3);
    assert!(table.column("fit_residual").unwrap().iter().all(|r| *r < 1e-6));

    let out = charmer(&["orbit", &scene_arg("bivalued.toml")], dir.path());
    assert!(String::from_utf8_lossy(&out.stdout).contains("classification: Bivalued"));
}

#[test]
fn zero_turns_is_distance_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = charmer(&["turns", &scene_arg("figure_a.toml"), "-n", "0"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_table(&dir.path().join("turns.csv"));
    assert_eq!(t.rows, vec![vec![0.0, 0.0, 0.0, 0.0, 0.0]]);
}

#[test]
fn flags_override_the_scene() {
    let dir = tempfile::tempdir().unwrap();
    let out = charmer(&["lift", &scene_arg("figure_a.toml"), "--step", "0.01", "--snap"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("steps: 100") && stdout.contains("snapped: true"), "{stdout}");
    let out = charmer(&["lift", &scene_arg("figure_a.toml"), "--step", "-1"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn errors_are_json_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = charmer(&["lift", &scene_arg("leaves_ball.toml")], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["status"], "error");
    assert_eq!(record["kind"], "outside_admissible_ball");
    assert_eq!(record["precondition"], "admissible_ball");
    assert!(record["message"].as_str().unwrap().contains("L - 2 sed"));

    let out = charmer(&["lift", "/nonexistent.toml"], dir.path());
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["kind"], "io");
}
