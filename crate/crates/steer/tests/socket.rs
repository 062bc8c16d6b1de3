use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::Path;

use charmer_cli::commands::lift;
use charmer_cli::output::Table;
use charmer_cli::scene::Scene;
use charmer_steer::server::spawn;
use charmer_steer::{Session, SessionOptions, TargetEntry};
use serde_json::{json, Value};

struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    seq: u64,
    last_reply: u64,
}

impl Client {
    fn connect(addr: SocketAddr) -> Self {
        let writer = TcpStream::connect(addr).unwrap();
        Self { reader: BufReader::new(writer.try_clone().unwrap()), writer, seq: 0, last_reply: 0 }
    }

    fn send(&mut self, kind: &str, payload: Value) -> Value {
        self.seq += 1;
        let line = json!({ "type": kind, "seq": self.seq, "payload": payload }).to_string();
        writeln!(self.writer, "{line}").unwrap();
        let mut reply = String::new();
        self.reader.read_line(&mut reply).unwrap();
        let v: Value = serde_json::from_str(&reply).unwrap();
        let seq = v["seq"].as_u64().unwrap();
        assert!(seq > self.last_reply, "reply seq went from {} to {seq}", self.last_reply);
        self.last_reply = seq;
        v
    }

    fn init(&mut self, scene: &str) -> Value {
        self.send("init", json!({ "scene": scene }))
    }

    fn target(&mut self, p: &[f64], timestamp: f64) -> Value {
        self.send("target", json!({ "point": p, "timestamp": timestamp }))
    }
}

fn server() -> SocketAddr {
    spawn("127.0.0.1:0", SessionOptions::default()).unwrap()
}

fn scene_text(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/scenes").join(name);
    std::fs::read_to_string(path).unwrap()
}

const HALF: &str = "dimension = 2\n[snake]\nkind = \"preset\"\nname = \"half_circle\"\n[curve]\nkind = \"constant\"\n";

/// Points of the circle through (2, 0) centred at (2.1875, 0), counterclockwise,
/// ending back at (2, 0).
fn circle_targets(n: usize) -> Vec<[f64; 2]> {
    let (c, r) = (2.1875, 0.1875);
    (1..=n)
        .map(|k| {
            let a = PI + 2.0 * PI * k as f64 / n as f64;
            let p = [c + r * a.cos(), r * a.sin()];
            if k == n { [2.0, 0.0] } else { p }
        })
        .collect()
}

fn drag_circle(c: &mut Client, n: usize) -> Value {
    let mut last = Value::Null;
    for (k, p) in circle_targets(n).iter().enumerate() {
        last = c.target(p, k as f64 * 0.01);
        assert_eq!(last["type"], "state", "{last}");
    }
    last
}

fn vec_of(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn init_states() {
    let mut c = Client::connect(server());
    let s = c.init(HALF);
    assert_eq!(s["type"], "state");
    let snout = vec_of(&s["payload"]["snout"]);
    assert!((snout[0] - 2.0).abs() < 1e-10 && snout[1].abs() < 1e-10, "{snout:?}");
    assert!((s["payload"]["ball_radius"].as_f64().unwrap() - PI).abs() < 1e-12);
    assert_eq!(s["payload"]["bivalued"], false);
    assert!(s["payload"]["chart"]["theta"].is_number());

    let s = c.init(&scene_text("bivalued.toml"));
    assert_eq!(s["payload"]["ball_radius"].as_f64().unwrap(), 0.0);
    assert_eq!(s["payload"]["bivalued"], true);
    let snout = vec_of(&s["payload"]["snout"]);
    assert_eq!(snout, vec![2.0, 0.0]);

    let s = c.init(&scene_text("half_circle_3d.toml"));
    let poly = s["payload"]["polyline"].as_array().unwrap();
    assert!(poly.len() > 2 && poly.iter().all(|p| p.as_array().unwrap().len() == 3));
}

#[test]
fn invalid_scene_gives_error_and_no_session() {
    let mut c = Client::connect(server());
    let r = c.init("dimension = 2\n[snake]\nkind = \"nonsense\"\n");
    assert_eq!(r["type"], "error");
    assert!(!r["payload"]["message"].as_str().unwrap().is_empty());
    let r = c.init(&scene_text("leaves_ball.toml").replace("2.8", "x"));
    assert_eq!(r["type"], "error");
    let r = c.target(&[2.0, 0.1], 0.0);
    assert_eq!(r["payload"]["kind"], "no_session");
}

#[test]
fn target_at_the_snout_is_a_noop() {
    let mut c = Client::connect(server());
    let init = c.init(HALF);
    let r = c.target(&[2.0, 0.0], 0.0);
    assert_eq!(r["payload"]["noop"], true);
    assert_eq!(r["payload"]["steps"], 0);
    assert_eq!(r["payload"]["polyline"], init["payload"]["polyline"]);
}

#[test]
fn one_dragged_circle_moves_the_snake_and_counts_a_loop() {
    let mut c = Client::connect(server());
    let init = c.init(HALF);
    let end = drag_circle(&mut c, 64);
    let p = &end["payload"];
    assert_eq!(p["loops"], 1);
    assert_eq!(p["segments"], 64);
    assert!(p["defect"].as_f64().unwrap() < 1e-6);
    assert_eq!(p["degraded"], false);
    let snout = vec_of(&p["snout"]);
    assert!((snout[0] - 2.0).abs() < 1e-8 && snout[1].abs() < 1e-8);
    assert!(p["holonomy_distance"].as_f64().unwrap() > 1e-3, "{}", p["holonomy_distance"]);
    assert_ne!(p["polyline"], init["payload"]["polyline"]);
}

#[test]
fn outside_targets_are_clamped() {
    let mut c = Client::connect(server());
    c.init(HALF);
    let r = c.target(&[0.0, 5.0], 0.0);
    assert_eq!(r["payload"]["clamped"], true);
    let t = vec_of(&r["payload"]["target"]);
    assert!((t[1] - 0.99 * PI).abs() < 1e-12);
    let r = c.target(&[0.0, 1.0], 1.0);
    assert_eq!(r["payload"]["clamped"], false);
}

#[test]
fn export_and_reset() {
    let mut c = Client::connect(server());
    let init = c.init(HALF);
    let e = c.send("export", json!({}));
    assert_eq!(e["type"], "export");
    assert_eq!(e["payload"]["csv"], "t,gamma_1,gamma_2,defect,v_1,v_2,theta\n");
    assert_eq!(e["payload"]["targets"], json!([]));

    drag_circle(&mut c, 16);
    let r = c.send("reset", json!({}));
    for key in ["polyline", "snout", "steps", "segments", "loops", "chart", "defect"] {
        assert_eq!(r["payload"][key], init["payload"][key], "{key}");
    }
    let e = c.send("export", json!({}));
    assert_eq!(e["payload"]["csv"], "t,gamma_1,gamma_2,defect,v_1,v_2,theta\n");
}

#[test]
fn export_matches_the_cli_lift() {
    let mut c = Client::connect(server());
    c.init(HALF);
    drag_circle(&mut c, 32);
    let e = c.send("export", json!({}));
    let csv = e["payload"]["csv"].as_str().unwrap();
    let session = Table::parse(csv).unwrap();
    let scene = Scene::parse(e["payload"]["scene"].as_str().unwrap()).unwrap();
    let cli = lift(&scene, None).unwrap();
    assert_eq!(cli.trajectory.header, session.header);
    assert_eq!(cli.trajectory.rows.len(), session.rows.len());
    let mut worst = 0.0f64;
    for (a, b) in cli.trajectory.rows.iter().zip(&session.rows) {
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).abs());
        }
    }
    assert!(worst < 1e-8, "largest difference {worst:e}");
    // every number is in the CLI format
    let first = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(first, "2.0000000000000000e0");
}

#[test]
fn replaying_the_log_reproduces_the_final_configuration() {
    let mut c = Client::connect(server());
    c.init(HALF);
    let last = drag_circle(&mut c, 24);
    c.target(&[1.7, 0.4], 1.0);
    let end = c.target(&[1.9, -0.2], 2.0);
    assert_ne!(end["payload"]["snout"], last["payload"]["snout"]);
    let e = c.send("export", json!({}));
    let log: Vec<TargetEntry> = serde_json::from_value(e["payload"]["targets"].clone()).unwrap();
    assert_eq!(log.len(), 26);

    let mut again = Client::connect(server());
    again.init(HALF);
    let mut replayed = Value::Null;
    for t in &log {
        replayed = again.target(&t.point, t.timestamp);
    }
    let (a, b) = (vec_of(&end["payload"]["snout"]), vec_of(&replayed["payload"]["snout"]));
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-8));

    let direct = Session::replay(Scene::parse(HALF).unwrap(), SessionOptions::default(), &log).unwrap();
    let once = Session::replay(Scene::parse(HALF).unwrap(), SessionOptions::default(), &log).unwrap();
    assert!(direct.configuration().sup_distance(once.configuration()).unwrap() < 1e-8);
    let snout = direct.configuration().endpoint();
    assert!((snout[0] - a[0]).abs() < 1e-8 && (snout[1] - a[1]).abs() < 1e-8);
}

#[test]
fn sessions_are_isolated() {
    let addr = server();
    let handles: Vec<_> = (0..4)
        .map(|i| {
            std::thread::spawn(move || {
                let mut c = Client::connect(addr);
                let s = c.init(HALF);
                let id = s["payload"]["session"].as_u64().unwrap();
                let r = 0.05 * (i + 1) as f64;
                let end = c.target(&[2.0 - r, r], 0.0);
                assert_eq!(end["payload"]["session"].as_u64().unwrap(), id);
                assert_eq!(end["payload"]["segments"], 1);
                (id, vec_of(&end["payload"]["snout"]), r)
            })
        })
        .collect();
    let mut ids = Vec::new();
    for h in handles {
        let (id, snout, r) = h.join().unwrap();
        assert!((snout[0] - (2.0 - r)).abs() < 1e-8 && (snout[1] - r).abs() < 1e-8);
        ids.push(id);
    }
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 4);
}
