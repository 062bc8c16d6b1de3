//! One steering session: dragged targets become a C¹ curve, lifted one
//! segment at a time.
//!
//! Segment `k` joins target `k − 1` to target `k` as a cubic Hermite piece on
//! its own unit parameter. Its start tangent is the end tangent of segment
//! `k − 1` (zero for the first), and its end tangent is the chord, shortened
//! to at most `max_speed · L`. A segment is lifted as soon as its target
//! arrives; nothing already lifted is revised.

use charmer_cli::output::{bivalued_header, trajectory_header, trajectory_row, Table};
use charmer_cli::scene::{CurveSpec, Scene};
use charmer_core::bivalued::{lift_bivalued, BivaluedConfig};
use charmer_core::config::Configuration;
use charmer_core::curve::{Curve, HermiteSpline};
use charmer_core::mobius::MobiusElement;
use charmer_core::solver::{continue_lift, continue_lift_su11, LiftOptions, LiftStatus};
use charmer_core::su11::Su11Element;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{SessionError, SessionResult};

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOptions {
    /// Targets are clamped to `(1 − margin)` times the admissible radius.
    pub margin: f64,
    /// Largest end tangent of a segment, as a fraction of `L`.
    pub max_speed: f64,
    /// Points per polyline in state updates.
    pub polyline_points: usize,
    /// The snout has left the start once farther than `leave · L`...
    pub leave: f64,
    /// ...and closes a loop on coming back within `close · L`.
    pub close: f64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            margin: 0.01,
            max_speed: 0.25,
            polyline_points: 100,
            leave: 1e-2,
            close: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEntry {
    pub point: Vec<f64>,
    pub timestamp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub v: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub polyline: Vec<Vec<f64>>,
    pub snout: Vec<f64>,
    /// The clamped target of the last update, if any.
    pub target: Option<Vec<f64>>,
    pub clamped: bool,
    pub noop: bool,
    pub defect: f64,
    pub chart: Option<Chart>,
    pub steps: usize,
    pub segments: usize,
    pub loops: usize,
    /// `sup_distance(z, z₀)` when the last loop closed.
    pub holonomy_distance: Option<f64>,
    pub ball_radius: f64,
    pub bivalued: bool,
    pub degraded: bool,
    pub paused: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Export {
    /// Trajectory in the `charmer lift` CSV format, `t` rescaled to `[0, 1]`.
    pub csv: String,
    /// A scene whose `charmer lift` reproduces the trajectory.
    pub scene: String,
    pub targets: Vec<TargetEntry>,
}

#[derive(Debug, Clone)]
enum Lifted {
    Lorentz(MobiusElement),
    Cover(Su11Element),
    Bivalued(BivaluedConfig),
}

#[derive(Debug, Clone)]
pub struct Session {
    scene: Scene,
    opts: LiftOptions,
    session_opts: SessionOptions,
    z0: Configuration,
    start: Lifted,
    length: f64,
    ball_radius: f64,
    clamp_radius: f64,
    // mutable part
    lifted: Lifted,
    current: Configuration,
    points: Vec<DVector<f64>>,
    tangents: Vec<DVector<f64>>,
    rows: Vec<Vec<f64>>,
    log: Vec<TargetEntry>,
    steps: usize,
    loops: usize,
    away: bool,
    holonomy_distance: Option<f64>,
    defect: f64,
    degraded: bool,
    paused: bool,
    last_target: Option<Vec<f64>>,
    clamped: bool,
}

impl Session {
    pub fn new(scene: Scene, session_opts: SessionOptions) -> SessionResult<Self> {
        let z0 = scene.configuration()?;
        let mut opts = scene.lift_options();
        // every step is kept so the export lines up with `charmer lift`
        opts.record_every = 1;
        let length = z0.length();
        let (start, ball_radius, clamp_radius) = match scene.bivalued()? {
            Some(c) => (Lifted::Bivalued(c), 0.0, (1.0 - session_opts.margin) * length),
            None => {
                if z0.distinct_values(3) < 3 {
                    return Err(SessionError::Rejected("the snake needs at least three distinct values".into()));
                }
                let radius = scene.admissible_radius(&z0);
                let snout = z0.endpoint().norm();
                if snout >= (1.0 - session_opts.margin) * radius {
                    return Err(SessionError::Rejected(format!(
                        "snout |f| = {snout:.6} is not inside the admissible ball of radius {radius:.6}"
                    )));
                }
                let start = if z0.dim() == 2 {
                    Lifted::Cover(Su11Element::identity())
                } else {
                    Lifted::Lorentz(MobiusElement::identity(z0.dim()))
                };
                (start, radius, (1.0 - session_opts.margin) * radius)
            }
        };
        let b = z0.endpoint();
        let d = z0.dim();
        Ok(Self {
            scene,
            opts,
            session_opts,
            current: z0.clone(),
            z0,
            lifted: start.clone(),
            start,
            length,
            ball_radius,
            clamp_radius,
            points: vec![b],
            tangents: vec![DVector::zeros(d)],
            rows: Vec::new(),
            log: Vec::new(),
            steps: 0,
            loops: 0,
            away: false,
            holonomy_distance: None,
            defect: 0.0,
            degraded: false,
            paused: false,
            last_target: None,
            clamped: false,
        })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn dim(&self) -> usize {
        self.z0.dim()
    }

    pub fn configuration(&self) -> &Configuration {
        &self.current
    }

    pub fn initial(&self) -> &Configuration {
        &self.z0
    }

    pub fn is_bivalued(&self) -> bool {
        matches!(self.start, Lifted::Bivalued(_))
    }

    pub fn log(&self) -> &[TargetEntry] {
        &self.log
    }

    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    /// Back to the initial state; the target log is cleared.
    pub fn reset(&mut self) {
        let fresh = Session::new(self.scene.clone(), self.session_opts.clone()).expect("scene was accepted before");
        *self = fresh;
    }

    /// Radial clamp into the ball of radius `clamp_radius`.
    fn clamp(&self, p: DVector<f64>) -> (DVector<f64>, bool) {
        let n = p.norm();
        if n > self.clamp_radius {
            (p * (self.clamp_radius / n), true)
        } else {
            (p, false)
        }
    }

    pub fn on_target(&mut self, point: &[f64], timestamp: f64) -> SessionResult<State> {
        if self.paused {
            return Err(SessionError::Paused);
        }
        if point.len() != self.dim() || point.iter().any(|x| !x.is_finite()) {
            return Err(SessionError::BadMessage(format!("target must be {} finite numbers", self.dim())));
        }
        if let Some(last) = self.log.last() {
            if timestamp < last.timestamp {
                return Err(SessionError::BadMessage(format!(
                    "timestamp {timestamp} is older than the previous {}",
                    last.timestamp
                )));
            }
        }
        let (p, clamped) = self.clamp(DVector::from_column_slice(point));
        self.clamped = clamped;
        self.last_target = Some(p.iter().copied().collect());
        let from = self.points.last().unwrap().clone();
        let chord = &p - &from;
        if chord.norm() <= 1e-12 * self.length {
            let mut s = self.state();
            s.noop = true;
            return Ok(s);
        }
        let vmax = self.session_opts.max_speed * self.length;
        let end_tangent = if chord.norm() > vmax { &chord * (vmax / chord.norm()) } else { chord };
        let start_tangent = self.tangents.last().unwrap().clone();
        let segment = HermiteSpline::new(vec![from, p.clone()], vec![start_tangent, end_tangent.clone()])?;
        let offset = self.segments() as f64;
        match self.advance(&segment, offset) {
            Ok(()) => {
                self.points.push(p.clone());
                self.tangents.push(end_tangent);
                self.log.push(TargetEntry { point: point.to_vec(), timestamp });
                self.count_loops(&p)?;
                Ok(self.state())
            }
            Err(e) => {
                self.paused = true;
                self.degraded = true;
                Err(e)
            }
        }
    }

    fn advance(&mut self, segment: &HermiteSpline, offset: f64) -> SessionResult<()> {
        let skip = usize::from(!self.rows.is_empty());
        match &self.lifted {
            Lifted::Bivalued(c) => {
                let lift = lift_bivalued(c, segment, &self.opts)?;
                if lift.status != LiftStatus::Complete {
                    return Err(SessionError::Stopped(format!("{:?}", lift.status)));
                }
                for (t, ci) in lift.times.iter().zip(&lift.configs).skip(skip) {
                    let gamma = segment.eval(*t);
                    let defect = (ci.w_endpoint() - &gamma).norm();
                    let mut row = vec![offset + t];
                    row.extend(gamma.iter());
                    row.push(defect);
                    row.extend(ci.p().coords().iter());
                    row.extend(ci.q().coords().iter());
                    self.rows.push(row);
                    self.defect = defect;
                }
                self.steps += lift.times.len() - 1;
                let end = lift.final_config().clone();
                self.current = end.to_configuration();
                self.lifted = Lifted::Bivalued(end);
            }
            Lifted::Cover(g) => {
                let lift = continue_lift_su11(&self.z0, g, segment, &self.opts)?;
                if lift.lift.status != LiftStatus::Complete {
                    return Err(SessionError::Stopped(format!("{:?}", lift.lift.status)));
                }
                let charts = lift.charts();
                for i in skip..lift.lift.times.len() {
                    let t = lift.lift.times[i];
                    let (v, theta) = &charts[i];
                    self.rows.push(trajectory_row(offset + t, &segment.eval(t), lift.lift.defects[i], v, Some(*theta)));
                }
                self.steps += lift.lift.steps;
                self.defect = *lift.lift.defects.last().unwrap();
                self.current = lift.lift.final_config().clone();
                self.lifted = Lifted::Cover(*lift.cover_path.last().unwrap());
            }
            Lifted::Lorentz(g) => {
                let lift = continue_lift(&self.z0, g, segment, &self.opts)?;
                if lift.status != LiftStatus::Complete {
                    return Err(SessionError::Stopped(format!("{:?}", lift.status)));
                }
                for i in skip..lift.times.len() {
                    let t = lift.times[i];
                    let (v, _) = lift.group_path[i].chart_coordinates();
                    self.rows.push(trajectory_row(offset + t, &segment.eval(t), lift.defects[i], &v, None));
                }
                self.steps += lift.steps;
                self.defect = *lift.defects.last().unwrap();
                self.current = lift.final_config().clone();
                self.lifted = Lifted::Lorentz(lift.final_group().clone());
            }
        }
        if self.defect > self.opts.defect_tolerance {
            self.degraded = true;
        }
        Ok(())
    }

    fn count_loops(&mut self, p: &DVector<f64>) -> SessionResult<()> {
        let dist = (p - &self.points[0]).norm();
        if dist > self.session_opts.leave * self.length {
            self.away = true;
        } else if self.away && dist <= self.session_opts.close * self.length {
            self.away = false;
            self.loops += 1;
            self.holonomy_distance = Some(self.current.sup_distance(&self.z0)?);
        }
        Ok(())
    }

    pub fn state(&self) -> State {
        let polyline = self
            .current
            .integrate_snake(self.session_opts.polyline_points)
            .map(|s| s.samples.iter().map(|(_, p)| p.iter().copied().collect()).collect())
            .unwrap_or_default();
        let chart = match &self.lifted {
            Lifted::Cover(g) => {
                let (v, theta) = g.cover_chart();
                Some(Chart { v: v.iter().copied().collect(), theta: Some(theta) })
            }
            Lifted::Lorentz(g) => Some(Chart { v: g.chart_coordinates().0.iter().copied().collect(), theta: None }),
            Lifted::Bivalued(_) => None,
        };
        State {
            polyline,
            snout: self.current.endpoint().iter().copied().collect(),
            target: self.last_target.clone(),
            clamped: self.clamped,
            noop: false,
            defect: self.defect,
            chart,
            steps: self.steps,
            segments: self.segments(),
            loops: self.loops,
            holonomy_distance: self.holonomy_distance,
            ball_radius: self.ball_radius,
            bivalued: self.is_bivalued(),
            degraded: self.degraded,
            paused: self.paused,
        }
    }

    /// Same columns and number format as `charmer lift`.
    pub fn trajectory(&self) -> Table {
        let d = self.dim();
        let header = if self.is_bivalued() { bivalued_header(d) } else { trajectory_header(d) };
        let mut table = Table::new(header);
        let n = self.segments().max(1) as f64;
        for row in &self.rows {
            let mut r = row.clone();
            r[0] /= n;
            table.push(r);
        }
        table
    }

    /// The scene `charmer lift` needs to reproduce this session.
    pub fn equivalent_scene(&self) -> Scene {
        let mut scene = self.scene.clone();
        let n = self.segments();
        scene.curve = if n == 0 {
            CurveSpec::Constant
        } else {
            CurveSpec::Hermite {
                points: self.points[1..].iter().map(|p| p.iter().copied().collect()).collect(),
                tangents: self.tangents.iter().map(|m| m.iter().copied().collect()).collect(),
            }
        };
        scene.solver.step = self.opts.step / n.max(1) as f64;
        scene.output.turns = 1;
        scene.output.record_every = 1;
        scene.output.frames = 0;
        scene
    }

    pub fn export(&self) -> SessionResult<Export> {
        Ok(Export {
            csv: self.trajectory().to_csv(),
            scene: self.equivalent_scene().to_toml()?,
            targets: self.log.clone(),
        })
    }

    /// A fresh session fed the targets of `log` in order.
    pub fn replay(scene: Scene, session_opts: SessionOptions, log: &[TargetEntry]) -> SessionResult<Session> {
        let mut s = Session::new(scene, session_opts)?;
        for entry in log {
            s.on_target(&entry.point, entry.timestamp)?;
        }
        Ok(s)
    }
}
