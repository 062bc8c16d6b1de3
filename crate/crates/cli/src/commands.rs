//! The four batch commands. Each returns a summary and, given an output
//! directory, writes its files there.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use charmer_core::bivalued::{horb_bivalued, lift_bivalued, BivaluedConfig, BivaluedOrbit, BivaluedOrbitShape};
use charmer_core::config::Configuration;
use charmer_core::curve::{CircleArc, Curve, SharedCurve};
use charmer_core::error::CharmerError;
use charmer_core::mobius::MobiusElement;
use charmer_core::orbit::{
    orbit_sample, orbit_tangent_rank, procrustes, random_rotation, rotation_orbit_sample, stiefel_frame, Classification,
    Connection, OrbitReport, RankEstimate,
};
use charmer_core::solver::{continue_lift, continue_lift_su11, holonomy, iterate_holonomy, iterate_holonomy_su11, LiftStatus};
use charmer_core::su11::Su11Element;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliResult;
use crate::output::{
    bivalued_header, configuration_table, ensure_dir, frame_svg, sample_curve, trajectory_header, append_lift,
    append_su11_lift, write_text, Table,
};
use crate::scene::Scene;

/// Points of the target curve drawn in each frame.
const TARGET_SAMPLES: usize = 400;

/// Snout within this fraction of `L` of the origin counts as `f = 0`.
const ORIGIN_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LiftSummary {
    pub trajectory: Table,
    /// One row per completed turn: `n, distance, chart…`.
    pub turns: Table,
    pub final_config: Configuration,
    pub max_defect: f64,
    pub steps: usize,
    pub status: LiftStatus,
    pub snapped: bool,
    pub files: Vec<PathBuf>,
}

fn turns_header(d: usize, chart: bool) -> Vec<String> {
    let mut h = vec!["n".to_string(), "distance".to_string()];
    if chart {
        h.extend((1..=d).map(|i| format!("v_{i}")));
        if d == 2 {
            h.push("theta".into());
        }
    }
    h
}

enum Group {
    Lorentz(MobiusElement),
    Cover(Su11Element),
}

struct FramePlan {
    times: Vec<f64>,
    next: usize,
}

impl FramePlan {
    fn new(frames: usize, turns: usize) -> Self {
        let times = match frames {
            0 => vec![],
            1 => vec![turns as f64],
            k => (0..k).map(|i| turns as f64 * i as f64 / (k - 1) as f64).collect(),
        };
        Self { times, next: 0 }
    }

    /// Recorded indices of the points due in `[offset, offset + 1]`.
    fn take(&mut self, times: &[f64], offset: f64) -> Vec<usize> {
        let mut out = Vec::new();
        while self.next < self.times.len() && self.times[self.next] <= offset + 1.0 + 1e-12 {
            let local = self.times[self.next] - offset;
            let i = (0..times.len())
                .min_by(|a, b| (times[*a] - local).abs().total_cmp(&(times[*b] - local).abs()))
                .unwrap_or(0);
            out.push(i);
            self.next += 1;
        }
        out
    }
}

pub fn lift(scene: &Scene, out: Option<&Path>) -> CliResult<LiftSummary> {
    let z0 = scene.configuration()?;
    let curve = scene.curve(&z0)?;
    let opts = scene.lift_options();
    let d = z0.dim();
    let turns = scene.output.turns.max(1);
    let mut files = Vec::new();
    if let Some(dir) = out {
        ensure_dir(dir)?;
    }
    let target = sample_curve(curve.as_ref(), TARGET_SAMPLES);
    let ball = scene.admissible_radius(&z0);
    let mut frames = FramePlan::new(scene.output.frames, turns);
    let mut frame_no = 0;
    let mut emit_frame = |z: &Configuration, files: &mut Vec<PathBuf>| -> CliResult<()> {
        if let Some(dir) = out {
            let path = dir.join(format!("frame_{frame_no:04}.svg"));
            write_text(&path, &frame_svg(z, &target, ball, scene.output.polyline_points)?)?;
            files.push(path);
        }
        frame_no += 1;
        Ok(())
    };

    if let Some(c0) = scene.bivalued()? {
        return lift_two_valued(scene, &z0, c0, curve.as_ref(), out, files);
    }

    let mut trajectory = Table::new(trajectory_header(d));
    let mut per_turn = Table::new(turns_header(d, true));
    let mut g = if d == 2 {
        Group::Cover(Su11Element::identity())
    } else {
        Group::Lorentz(MobiusElement::identity(d))
    };
    let (mut max_defect, mut steps, mut snapped) = (0.0f64, 0, false);
    let mut status = LiftStatus::Complete;
    let mut final_config = z0.clone();
    for n in 0..turns {
        let offset = n as f64;
        let (lift, end) = match &g {
            Group::Cover(h) => {
                let l = continue_lift_su11(&z0, h, curve.as_ref(), &opts)?;
                append_su11_lift(&mut trajectory, &l, curve.as_ref(), offset, n > 0);
                let end = *l.cover_path.last().unwrap();
                (l.lift, Group::Cover(end))
            }
            Group::Lorentz(h) => {
                let l = continue_lift(&z0, h, curve.as_ref(), &opts)?;
                append_lift(&mut trajectory, &l, curve.as_ref(), offset, n > 0);
                let end = l.final_group().clone();
                (l, Group::Lorentz(end))
            }
        };
        for i in frames.take(&lift.times, offset) {
            emit_frame(&lift.config_path[i], &mut files)?;
        }
        max_defect = max_defect.max(lift.max_defect());
        steps += lift.steps;
        snapped |= lift.snapped;
        status = lift.status;
        final_config = lift.final_config().clone();
        if status != LiftStatus::Complete {
            break;
        }
        let distance = final_config.sup_distance(&z0)?;
        per_turn.push(turn_row(n + 1, distance, &end));
        g = end;
    }
    if let Some(dir) = out {
        for (name, table) in [("trajectory.csv", &trajectory), ("turns.csv", &per_turn)] {
            let path = dir.join(name);
            table.write(&path)?;
            files.push(path);
        }
        let path = dir.join("final_config.csv");
        configuration_table(&final_config).write(&path)?;
        files.push(path);
    }
    Ok(LiftSummary {
        trajectory,
        turns: per_turn,
        final_config,
        max_defect,
        steps,
        status,
        snapped,
        files,
    })
}

fn turn_row(n: usize, distance: f64, g: &Group) -> Vec<f64> {
    let mut row = vec![n as f64, distance];
    match g {
        Group::Cover(h) => {
            let (v, theta) = h.cover_chart();
            row.extend(v.iter());
            row.push(theta);
        }
        Group::Lorentz(h) => row.extend(h.chart_coordinates().0.iter()),
    }
    row
}

fn lift_two_valued(
    scene: &Scene,
    z0: &Configuration,
    c0: BivaluedConfig,
    curve: &dyn Curve,
    out: Option<&Path>,
    mut files: Vec<PathBuf>,
) -> CliResult<LiftSummary> {
    let d = c0.dim();
    let opts = scene.lift_options();
    let mut trajectory = Table::new(bivalued_header(d));
    let mut per_turn = Table::new(turns_header(d, false));
    let mut c = c0;
    let mut max_defect = 0.0f64;
    let mut steps = 0;
    let mut status = LiftStatus::Complete;
    for n in 0..scene.output.turns.max(1) {
        let lift = lift_bivalued(&c, curve, &opts)?;
        for (i, (t, ci)) in lift.times.iter().zip(&lift.configs).enumerate() {
            if n > 0 && i == 0 {
                continue;
            }
            let gamma = curve.eval(*t);
            let defect = (ci.w_endpoint() - &gamma).norm();
            max_defect = max_defect.max(defect);
            if i % scene.output.record_every == 0 || i + 1 == lift.times.len() {
                let mut row = vec![n as f64 + t];
                row.extend(gamma.iter());
                row.push(defect);
                row.extend(ci.p().coords().iter());
                row.extend(ci.q().coords().iter());
                trajectory.push(row);
            }
        }
        steps += lift.times.len().saturating_sub(1);
        status = lift.status;
        c = lift.final_config().clone();
        if status != LiftStatus::Complete {
            break;
        }
        per_turn.push(vec![(n + 1) as f64, c.to_configuration().sup_distance(z0)?]);
    }
    let final_config = c.to_configuration();
    if let Some(dir) = out {
        for (name, table) in [("trajectory.csv", &trajectory), ("turns.csv", &per_turn)] {
            let path = dir.join(name);
            table.write(&path)?;
            files.push(path);
        }
        let path = dir.join("final_config.csv");
        configuration_table(&final_config).write(&path)?;
        files.push(path);
    }
    Ok(LiftSummary {
        trajectory,
        turns: per_turn,
        final_config,
        max_defect,
        steps,
        status,
        snapped: false,
        files,
    })
}

#[derive(Debug, Clone)]
pub struct HolonomySummary {
    pub z0: Configuration,
    pub z1: Configuration,
    pub distance: f64,
    /// Two-valued scenes: the orbit, and the distance from `z₁` to the
    /// mirror image of `z₀` in the line through its snout (planar only).
    pub bivalued: Option<(BivaluedOrbit, Option<f64>)>,
}

impl HolonomySummary {
    pub fn text(&self) -> String {
        let mut s = format!("sup_distance(z1, z0) = {:.16e}\n", self.distance);
        if let Some((orbit, mirror)) = &self.bivalued {
            let shape = match orbit.shape {
                BivaluedOrbitShape::Point => "point".to_string(),
                BivaluedOrbitShape::Sphere(k) => format!("{k}-sphere"),
            };
            writeln!(s, "bivalued orbit: {} component(s), shape {shape}", orbit.components).unwrap();
            if let Some(m) = mirror {
                writeln!(s, "sup_distance(z1, mirror(z0)) = {m:.16e}").unwrap();
            }
        }
        s
    }
}

/// Reflection of the plane in the line spanned by `b`.
pub fn mirror_in_line(z: &Configuration, b: &DVector<f64>) -> Option<Configuration> {
    if z.dim() != 2 || b.norm() == 0.0 {
        return None;
    }
    let u = b.normalize();
    let rot = nalgebra::DMatrix::from_row_slice(2, 2, &[u[0], -u[1], u[1], u[0]]);
    let flip = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let m = &rot * flip * rot.transpose();
    Some(z.map_values(|p| charmer_core::sphere::SpherePoint::new(&m * p.coords()).expect("reflection keeps norms")))
}

pub fn holonomy_cmd(scene: &Scene, out: Option<&Path>) -> CliResult<HolonomySummary> {
    let z0 = scene.configuration()?;
    let curve = scene.curve(&z0)?;
    let z1 = holonomy(&z0, curve.as_ref(), &scene.lift_options())?;
    let distance = z1.sup_distance(&z0)?;
    let bivalued = match scene.bivalued()? {
        Some(c0) => {
            let orbit = horb_bivalued(&c0, 16, scene.orbit.seed);
            let mirror = mirror_in_line(&z0, &z0.endpoint()).map(|m| z1.sup_distance(&m)).transpose()?;
            Some((orbit, mirror))
        }
        None => None,
    };
    let summary = HolonomySummary { z0, z1, distance, bivalued };
    if let Some(dir) = out {
        ensure_dir(dir)?;
        configuration_table(&summary.z0).write(&dir.join("z0.csv"))?;
        configuration_table(&summary.z1).write(&dir.join("z1.csv"))?;
        write_text(&dir.join("holonomy.txt"), &summary.text())?;
    }
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct OrbitSummary {
    pub classification: Classification,
    pub spdim: usize,
    pub expected_dim: usize,
    pub rank: Option<RankEstimate>,
    pub report: Option<OrbitReport>,
    /// Largest rotation-fit residual over the sampled points, at `f = 0`.
    pub max_fit_residual: Option<f64>,
    pub bivalued: Option<BivaluedOrbit>,
    pub table: Table,
}

impl OrbitSummary {
    pub fn text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "classification: {:?}", self.classification).unwrap();
        writeln!(s, "spherical dimension: {}", self.spdim).unwrap();
        writeln!(s, "expected orbit dimension: {}", self.expected_dim).unwrap();
        if let Some(r) = &self.rank {
            writeln!(s, "estimated rank: {}", r.rank).unwrap();
            let sv: Vec<String> = r.singular_values.iter().map(|x| format!("{x:.3e}")).collect();
            writeln!(s, "singular values: {}", sv.join(" ")).unwrap();
        }
        if let Some(rep) = &self.report {
            writeln!(s, "points: {} ({} failed loops)", rep.points.len(), rep.failures.len()).unwrap();
            writeln!(s, "fiber defect: {:.3e}", rep.fiber_defect()).unwrap();
            for (i, e) in &rep.failures {
                writeln!(s, "  loop {i}: {e}").unwrap();
            }
        }
        if let Some(r) = self.max_fit_residual {
            writeln!(s, "max rotation-fit residual: {r:.3e}").unwrap();
        }
        if let Some(b) = &self.bivalued {
            writeln!(s, "bivalued components: {} ({:?})", b.components, b.shape).unwrap();
        }
        s
    }
}

/// Circles through the snout in random planes, inside the admissible ball.
pub fn random_loops(z0: &Configuration, ball: f64, n: usize, seed: u64) -> CliResult<Vec<SharedCurve>> {
    let b = z0.endpoint();
    let room = ball - b.norm();
    if room <= 0.0 {
        return Err(CharmerError::OutsideAdmissibleBall { radius: ball, t: 0.0, norm: b.norm() }.into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = random_rotation(z0.dim(), &mut rng);
            let radius = rng.gen_range(0.1..0.45) * room;
            let c = CircleArc::loop_through(&b, r.column(0).into_owned(), r.column(1).into_owned(), radius)?;
            Ok(Arc::new(c) as SharedCurve)
        })
        .collect()
}

pub fn orbit_cmd(scene: &Scene, out: Option<&Path>) -> CliResult<OrbitSummary> {
    let z0 = scene.configuration()?;
    let opts = scene.lift_options();
    let d = z0.dim();
    let spec = &scene.orbit;
    if let Some(c0) = scene.bivalued()? {
        let orbit = horb_bivalued(&c0, spec.loops.max(2), spec.seed);
        let mut header = vec!["index".to_string()];
        header.extend((1..=d).map(|i| format!("p_{i}")));
        header.extend((1..=d).map(|i| format!("q_{i}")));
        let mut table = Table::new(header);
        for (i, w) in orbit.witnesses.iter().enumerate() {
            let mut row = vec![i as f64];
            row.extend(w.p().coords().iter());
            row.extend(w.q().coords().iter());
            table.push(row);
        }
        let summary = OrbitSummary {
            classification: Classification::Bivalued,
            spdim: z0.spherical_dimension(1e-8),
            expected_dim: 0,
            rank: None,
            report: None,
            max_fit_residual: None,
            bivalued: Some(orbit),
            table,
        };
        write_orbit(out, &summary)?;
        return Ok(summary);
    }
    let loops = random_loops(&z0, scene.admissible_radius(&z0), spec.loops, spec.seed)?;
    let mut report = orbit_sample(&z0, &loops, &opts);
    let rank = if report.spdim > 0 {
        Some(orbit_tangent_rank(&z0, spec.probe_radius * z0.length(), spec.probes, spec.seed, &opts)?)
    } else {
        None
    };
    report.estimated_rank = rank.as_ref().map(|r| r.rank);
    let at_origin = z0.endpoint().norm() <= ORIGIN_TOL * z0.length();
    let k1 = report.spdim + 1;
    let mut header: Vec<String> = ["index", "connected", "fiber_defect", "fit_residual"].iter().map(|s| s.to_string()).collect();
    if at_origin {
        for i in 1..=d {
            for j in 1..=k1 {
                header.push(format!("frame_{i}_{j}"));
            }
        }
    }
    let mut table = Table::new(header);
    let mut max_fit = None;
    if at_origin {
        let rot = rotation_orbit_sample(&z0, spec.rotations, spec.seed)?;
        report.points.extend(rot.points.into_iter().skip(1));
        report.connections.extend(rot.connections.into_iter().skip(1));
    }
    let b = z0.endpoint();
    for (i, (z, conn)) in report.points.iter().zip(&report.connections).enumerate() {
        let mut row = vec![i as f64, f64::from(u8::from(*conn == Connection::Connected)), (z.endpoint() - &b).norm()];
        if at_origin {
            let (_, residual) = procrustes(z, &z0)?;
            max_fit = Some(max_fit.unwrap_or(0.0f64).max(residual));
            row.push(residual);
            match stiefel_frame(z, &z0) {
                Ok(f) => row.extend((0..d).flat_map(|r| (0..k1).map(move |c| (r, c))).map(|(r, c)| f[(r, c)])),
                Err(_) => row.extend(std::iter::repeat_n(f64::NAN, d * k1)),
            }
        } else {
            row.push(f64::NAN);
        }
        table.push(row);
    }
    let summary = OrbitSummary {
        classification: report.classification,
        spdim: report.spdim,
        expected_dim: report.expected_dim,
        rank,
        report: Some(report),
        max_fit_residual: max_fit,
        bivalued: None,
        table,
    };
    write_orbit(out, &summary)?;
    Ok(summary)
}

fn write_orbit(out: Option<&Path>, summary: &OrbitSummary) -> CliResult<()> {
    if let Some(dir) = out {
        ensure_dir(dir)?;
        summary.table.write(&dir.join("orbit.csv"))?;
        write_text(&dir.join("orbit.txt"), &summary.text())?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TurnsSummary {
    /// Rows `n = 0..=N`: `n, distance, chart…`.
    pub table: Table,
    pub window: (usize, usize),
    /// Smallest distance inside the window.
    pub argmin: Option<(usize, f64)>,
    pub max_distance: f64,
}

impl TurnsSummary {
    pub fn distances(&self) -> Vec<f64> {
        self.table.column("distance").unwrap_or_default()
    }

    /// `argmin` is a strict local minimum below `ratio · max`.
    pub fn pronounced(&self, ratio: f64) -> bool {
        let Some((n, dmin)) = self.argmin else { return false };
        let ds = self.distances();
        let local = (n == 0 || ds[n - 1] > dmin) && (n + 1 >= ds.len() || ds[n + 1] > dmin);
        local && dmin < ratio * self.max_distance
    }

    pub fn text(&self) -> String {
        let mut s = format!("turns: {}\nmax distance: {:.6e}\n", self.table.rows.len().saturating_sub(1), self.max_distance);
        if let Some((n, d)) = self.argmin {
            writeln!(s, "argmin over [{}, {}]: n = {n}, distance = {d:.6e}", self.window.0, self.window.1).unwrap();
        }
        s
    }
}

/// Distances `sup_distance(z_n, z₀)` for `n = 0..=N` and the argmin over
/// `[from, N]` (default `from = max(1, N/2)`).
pub fn turns_cmd(scene: &Scene, n: usize, from: Option<usize>, out: Option<&Path>) -> CliResult<TurnsSummary> {
    let z0 = scene.configuration()?;
    let curve = scene.curve(&z0)?;
    let opts = scene.lift_options();
    let d = z0.dim();
    let mut table;
    if scene.is_bivalued() {
        table = Table::new(turns_header(d, false));
        let mut z = z0.clone();
        table.push(vec![0.0, 0.0]);
        for i in 1..=n {
            z = holonomy(&z, curve.as_ref(), &opts)?;
            table.push(vec![i as f64, z.sup_distance(&z0)?]);
        }
    } else if d == 2 {
        table = Table::new(turns_header(d, true));
        for (i, g) in iterate_holonomy_su11(&z0, curve.as_ref(), n, &opts)?.iter().enumerate() {
            let dist = z0.act(&g.to_mobius()).sup_distance(&z0)?;
            table.push(turn_row(i, dist, &Group::Cover(*g)));
        }
    } else {
        table = Table::new(turns_header(d, true));
        for (i, g) in iterate_holonomy(&z0, curve.as_ref(), n, &opts)?.into_iter().enumerate() {
            let dist = z0.act(&g).sup_distance(&z0)?;
            table.push(turn_row(i, dist, &Group::Lorentz(g)));
        }
    }
    let ds = table.column("distance").unwrap();
    let start = from.unwrap_or((n / 2).max(1)).min(n);
    let argmin = (start..=n)
        .filter(|i| *i > 0 || n == 0)
        .map(|i| (i, ds[i]))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let max_distance = ds.iter().copied().fold(0.0, f64::max);
    let summary = TurnsSummary { table, window: (start, n), argmin, max_distance };
    if let Some(dir) = out {
        ensure_dir(dir)?;
        summary.table.write(&dir.join("turns.csv"))?;
        write_text(&dir.join("turns.txt"), &summary.text())?;
    }
    Ok(summary)
}
