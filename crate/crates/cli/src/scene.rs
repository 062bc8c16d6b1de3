//! Scene files: a snake, a snout curve, solver options and requested outputs.

use std::path::Path;
use std::sync::Arc;

use charmer_core::bivalued::BivaluedConfig;
use charmer_core::config::{Configuration, Partition};
use charmer_core::curve::{CircleArc, Composite, ConstantCurve, HermiteSpline, Segment, SharedCurve};
use charmer_core::solver::{parallel_transport_to, LiftOptions};
use charmer_core::sphere::SpherePoint;
use charmer_core::word::{close_word, Letter, Profile, WordCurve};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub dimension: usize,
    pub snake: SnakeSpec,
    pub curve: CurveSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub orbit: OrbitSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SnakeSpec {
    /// Piecewise-constant configuration, one unit value per segment.
    Polygonal {
        lengths: Vec<f64>,
        values: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transport_to: Option<Vec<f64>>,
    },
    /// A named analytic configuration; see [`PRESETS`].
    Preset {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transport_to: Option<Vec<f64>>,
    },
    /// Two values `p`, `q` on consecutive runs of length `lp` and `lq`, or on
    /// an explicit pattern of segments.
    Bivalued {
        p: Vec<f64>,
        q: Vec<f64>,
        lp: f64,
        lq: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pattern: Option<Pattern>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pattern {
    pub lengths: Vec<f64>,
    /// `true` where the segment takes the value `p`.
    pub on_p: Vec<bool>,
}

pub const PRESETS: [&str; 1] = ["half_circle"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    /// Stays at the snout.
    Constant,
    /// Circle through the current point. `plane` gives a second direction
    /// (required when `dimension > 2`); in the plane the loop runs
    /// counterclockwise.
    Circle {
        center: Vec<f64>,
        #[serde(default = "one")]
        turns: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        plane: Option<Vec<f64>>,
    },
    Segment {
        to: Vec<f64>,
    },
    /// Pieces run one after the other, each starting where the last ended.
    Composite {
        pieces: Vec<CurveSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        durations: Option<Vec<f64>>,
    },
    /// Catmull–Rom spline from the current point through `points`.
    Spline {
        points: Vec<Vec<f64>>,
    },
    /// Cubic Hermite spline from the current point through `points`, with
    /// one tangent per node (the first at the current point), in units of
    /// the segment parameter.
    Hermite {
        points: Vec<Vec<f64>>,
        tangents: Vec<Vec<f64>>,
    },
    /// Snout path of a product of boosts applied to the snake. Only valid as
    /// the first piece.
    Word {
        letters: Vec<LetterSpec>,
        #[serde(default)]
        close: bool,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LetterSpec {
    pub v: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub step: f64,
    pub tolerance: f64,
    pub snap: bool,
    pub sigma_min: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = LiftOptions::default();
        Self {
            step: o.step,
            tolerance: o.defect_tolerance,
            snap: o.snap,
            sigma_min: o.sigma_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Number of loop repetitions for `lift`.
    pub turns: usize,
    /// Keep every n-th step in the trajectory CSV.
    pub record_every: usize,
    /// SVG frames per run; 0 disables them.
    pub frames: usize,
    /// Points per snake polyline in frames.
    pub polyline_points: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            turns: 1,
            record_every: 1,
            frames: 0,
            polyline_points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitSpec {
    /// Random loops for `orbit`.
    pub loops: usize,
    /// Probe circles for the tangent rank.
    pub probes: usize,
    /// Probe radius as a fraction of the snake length.
    pub probe_radius: f64,
    /// Random rotations sampled when the snout is at the origin.
    pub rotations: usize,
    pub seed: u64,
}

impl Default for OrbitSpec {
    fn default() -> Self {
        Self {
            loops: 8,
            probes: 8,
            probe_radius: 1e-2,
            rotations: 8,
            seed: 0,
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Scene(msg.into())
}

fn vector(d: usize, v: &[f64], what: &str) -> CliResult<DVector<f64>> {
    if v.len() != d {
        return Err(bad(format!("{what} has {} coordinates, the scene has dimension {d}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(bad(format!("{what} is not finite")));
    }
    Ok(DVector::from_column_slice(v))
}

fn unit(d: usize, v: &[f64], what: &str) -> CliResult<SpherePoint> {
    Ok(SpherePoint::new(vector(d, v, what)?)?)
}

impl Scene {
    pub fn parse(text: &str) -> CliResult<Self> {
        let scene: Scene = toml::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Scene(e.to_string()))
    }

    /// Shape checks that need no numerics: dimensions, presets, counts.
    pub fn validate(&self) -> CliResult<()> {
        let d = self.dimension;
        if d < 2 {
            return Err(bad(format!("dimension must be at least 2, got {d}")));
        }
        match &self.snake {
            SnakeSpec::Polygonal { lengths, values, transport_to } => {
                if lengths.len() != values.len() || lengths.is_empty() {
                    return Err(bad("a polygonal snake needs one value per length"));
                }
                for (i, v) in values.iter().enumerate() {
                    vector(d, v, &format!("snake value {i}"))?;
                }
                if let Some(t) = transport_to {
                    vector(d, t, "transport_to")?;
                }
            }
            SnakeSpec::Preset { name, transport_to } => {
                if !PRESETS.contains(&name.as_str()) {
                    return Err(bad(format!("unknown preset `{name}` (known: {})", PRESETS.join(", "))));
                }
                if let Some(t) = transport_to {
                    vector(d, t, "transport_to")?;
                }
            }
            SnakeSpec::Bivalued { p, q, pattern, .. } => {
                vector(d, p, "p")?;
                vector(d, q, "q")?;
                if let Some(pat) = pattern {
                    if pat.lengths.len() != pat.on_p.len() {
                        return Err(bad("pattern needs one flag per length"));
                    }
                }
            }
        }
        validate_curve(d, &self.curve, true)?;
        if self.solver.step <= 0.0 || self.solver.step > 0.5 {
            return Err(bad(format!("solver.step must lie in (0, 0.5], got {}", self.solver.step)));
        }
        if self.output.record_every == 0 {
            return Err(bad("output.record_every must be positive"));
        }
        Ok(())
    }

    pub fn lift_options(&self) -> LiftOptions {
        LiftOptions {
            step: self.solver.step,
            defect_tolerance: self.solver.tolerance,
            snap: self.solver.snap,
            sigma_min: self.solver.sigma_min,
            record_every: self.output.record_every,
            ..LiftOptions::default()
        }
    }

    pub fn is_bivalued(&self) -> bool {
        matches!(self.snake, SnakeSpec::Bivalued { .. })
    }

    pub fn bivalued(&self) -> CliResult<Option<BivaluedConfig>> {
        let SnakeSpec::Bivalued { p, q, lp, lq, pattern } = &self.snake else {
            return Ok(None);
        };
        let d = self.dimension;
        let (p, q) = (unit(d, p, "p")?, unit(d, q, "q")?);
        let c = match pattern {
            None => BivaluedConfig::new(p, q, *lp, *lq)?,
            Some(pat) => {
                let c = BivaluedConfig::with_pattern(p, q, Partition::from_lengths(&pat.lengths)?, pat.on_p.clone())?;
                if (c.lp() - lp).abs() > 1e-12 * c.length() || (c.lq() - lq).abs() > 1e-12 * c.length() {
                    return Err(bad(format!("pattern gives lp = {}, lq = {}", c.lp(), c.lq())));
                }
                c
            }
        };
        Ok(Some(c))
    }

    /// The initial configuration `z₀`.
    pub fn configuration(&self) -> CliResult<Configuration> {
        let d = self.dimension;
        let (z, target) = match &self.snake {
            SnakeSpec::Polygonal { lengths, values, transport_to } => {
                let values = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| unit(d, v, &format!("snake value {i}")))
                    .collect::<CliResult<Vec<_>>>()?;
                (Configuration::polygonal(lengths, values)?, transport_to)
            }
            SnakeSpec::Preset { name, transport_to } => (preset(name, d)?, transport_to),
            SnakeSpec::Bivalued { .. } => return Ok(self.bivalued()?.expect("bivalued").to_configuration()),
        };
        match target {
            Some(t) => Ok(parallel_transport_to(&z, &vector(d, t, "transport_to")?, &self.lift_options())?),
            None => Ok(z),
        }
    }

    pub fn curve(&self, z0: &Configuration) -> CliResult<SharedCurve> {
        build_curve(&self.curve, z0, &z0.endpoint(), true)
    }

    /// Radius `L − 2·sed(z₀)` of the ball the snout must stay in.
    pub fn admissible_radius(&self, z0: &Configuration) -> f64 {
        z0.length() - 2.0 * z0.sedentariness()
    }
}

/// `half_circle`: `z(s) = (sin s, cos s, 0, …)` on `[0, π]`.
pub fn preset(name: &str, d: usize) -> CliResult<Configuration> {
    match name {
        "half_circle" if d == 2 => Ok(Configuration::half_circle()),
        "half_circle" => {
            let partition = Partition::new(vec![0.0, std::f64::consts::PI])?;
            Ok(Configuration::from_fn(partition, |s| {
                let mut v = DVector::zeros(d);
                v[0] = s.sin();
                v[1] = s.cos();
                v
            })?)
        }
        other => Err(bad(format!("unknown preset `{other}`"))),
    }
}

fn validate_curve(d: usize, spec: &CurveSpec, first: bool) -> CliResult<()> {
    match spec {
        CurveSpec::Constant => {}
        CurveSpec::Circle { center, turns, plane } => {
            vector(d, center, "circle center")?;
            if !(*turns > 0.0) {
                return Err(bad("circle turns must be positive"));
            }
            match plane {
                Some(p) => {
                    vector(d, p, "circle plane")?;
                }
                None if d > 2 => return Err(bad("a circle in dimension > 2 needs `plane`")),
                None => {}
            }
        }
        CurveSpec::Segment { to } => {
            vector(d, to, "segment end")?;
        }
        CurveSpec::Composite { pieces, durations } => {
            if pieces.is_empty() {
                return Err(bad("a composite curve needs pieces"));
            }
            if let Some(du) = durations {
                if du.len() != pieces.len() || du.iter().any(|x| !(*x > 0.0)) {
                    return Err(bad("one positive duration per piece"));
                }
            }
            for (i, p) in pieces.iter().enumerate() {
                validate_curve(d, p, first && i == 0)?;
            }
        }
        CurveSpec::Spline { points } => {
            if points.is_empty() {
                return Err(bad("a spline needs points"));
            }
            for (i, p) in points.iter().enumerate() {
                vector(d, p, &format!("spline point {i}"))?;
            }
        }
        CurveSpec::Hermite { points, tangents } => {
            if points.is_empty() || tangents.len() != points.len() + 1 {
                return Err(bad("a hermite curve needs points and one more tangent than points"));
            }
            for (i, p) in points.iter().chain(tangents).enumerate() {
                vector(d, p, &format!("hermite entry {i}"))?;
            }
        }
        CurveSpec::Word { letters, .. } => {
            if !first {
                return Err(bad("a word curve must come first"));
            }
            for (i, l) in letters.iter().enumerate() {
                vector(d, &l.v, &format!("letter {i}"))?;
            }
        }
    }
    Ok(())
}

fn build_curve(spec: &CurveSpec, z0: &Configuration, start: &DVector<f64>, first: bool) -> CliResult<SharedCurve> {
    let d = z0.dim();
    let curve: SharedCurve = match spec {
        CurveSpec::Constant => Arc::new(ConstantCurve::new(start.clone())),
        CurveSpec::Circle { center, turns, plane } => {
            let c = vector(d, center, "circle center")?;
            let radial = start - &c;
            let radius = radial.norm();
            if radius == 0.0 {
                return Err(bad("the circle center is the start point"));
            }
            let u = radial / radius;
            let w = match plane {
                Some(p) => {
                    let p = vector(d, p, "circle plane")?;
                    let w = &p - &u * u.dot(&p);
                    if w.norm() < 1e-9 * p.norm().max(1e-300) {
                        return Err(bad("circle plane is parallel to the radius"));
                    }
                    w.normalize()
                }
                None => DVector::from_vec(vec![-u[1], u[0]]),
            };
            Arc::new(CircleArc::new(c, radius, u, w, 0.0, turns * std::f64::consts::TAU)?)
        }
        CurveSpec::Segment { to } => Arc::new(Segment::new(start.clone(), vector(d, to, "segment end")?)?),
        CurveSpec::Composite { pieces, durations } => {
            let mut built = Vec::with_capacity(pieces.len());
            let mut at = start.clone();
            for (i, p) in pieces.iter().enumerate() {
                let c = build_curve(p, z0, &at, first && i == 0)?;
                at = c.eval(1.0);
                built.push(c);
            }
            let durations = durations.clone().unwrap_or_else(|| vec![1.0; pieces.len()]);
            Arc::new(Composite::new(built, &durations)?)
        }
        CurveSpec::Spline { points } => {
            let mut pts = vec![start.clone()];
            for (i, p) in points.iter().enumerate() {
                pts.push(vector(d, p, &format!("spline point {i}"))?);
            }
            Arc::new(HermiteSpline::catmull_rom(pts)?)
        }
        CurveSpec::Hermite { points, tangents } => {
            let mut pts = vec![start.clone()];
            for (i, p) in points.iter().enumerate() {
                pts.push(vector(d, p, &format!("hermite point {i}"))?);
            }
            let tangents = tangents
                .iter()
                .enumerate()
                .map(|(i, m)| vector(d, m, &format!("hermite tangent {i}")))
                .collect::<CliResult<Vec<_>>>()?;
            Arc::new(HermiteSpline::new(pts, tangents)?)
        }
        CurveSpec::Word { letters, close } => {
            if !first {
                return Err(bad("a word curve must come first"));
            }
            let mut word: Vec<Letter> = letters
                .iter()
                .enumerate()
                .map(|(i, l)| Ok(Letter::new(vector(d, &l.v, &format!("letter {i}"))?, l.lambda)))
                .collect::<CliResult<_>>()?;
            if *close {
                word = close_word(&word, z0)?;
            }
            Arc::new(WordCurve::new(z0.clone(), word, Profile::Smooth)?)
        }
    };
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIGURE: &str = r#"
dimension = 2

[snake]
kind = "preset"
name = "half_circle"

[curve]
kind = "circle"
center = [2.1875, 0.0]
"#;

    #[test]
    fn defaults_fill_in() {
        let s = Scene::parse(FIGURE).unwrap();
        assert_eq!(s.output.turns, 1);
        assert_eq!(s.solver.step, 1e-3);
        let z0 = s.configuration().unwrap();
        let c = s.curve(&z0).unwrap();
        assert!((c.eval(0.0) - z0.endpoint()).norm() < 1e-12);
        assert!((c.eval(0.25) - DVector::from_vec(vec![2.1875, -0.1875])).norm() < 1e-12);
    }

    #[test]
    fn round_trip_is_identity() {
        let s = Scene::parse(FIGURE).unwrap();
        let again = Scene::parse(&s.to_toml().unwrap()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn shape_errors_are_reported() {
        let wrong_dim = FIGURE.replace("[2.1875, 0.0]", "[2.1875, 0.0, 0.0]");
        assert!(matches!(Scene::parse(&wrong_dim), Err(CliError::Scene(_))));
        let unknown = FIGURE.replace("half_circle", "full_circle");
        assert!(Scene::parse(&unknown).unwrap_err().to_string().contains("unknown preset"));
        let typo = FIGURE.replace("center", "centre");
        assert!(Scene::parse(&typo).is_err());
    }

    #[test]
    fn composite_pieces_chain() {
        let text = r#"
dimension = 2
[snake]
kind = "polygonal"
lengths = [1.0, 1.0, 1.0]
values = [[1.0, 0.0], [0.0, 1.0], [-1.0, 1.0]]
[curve]
kind = "composite"
durations = [1.0, 2.0]
[[curve.pieces]]
kind = "segment"
to = [0.0, 1.5]
[[curve.pieces]]
kind = "spline"
points = [[0.3, 1.8], [0.2929, 1.7071]]
"#;
        let s = Scene::parse(text).unwrap();
        let z0 = s.configuration().unwrap();
        let c = s.curve(&z0).unwrap();
        assert!((c.eval(0.0) - z0.endpoint()).norm() < 1e-12);
        assert!((c.eval(1.0) - DVector::from_vec(vec![0.2929, 1.7071])).norm() < 1e-12);
        assert_eq!(Scene::parse(&s.to_toml().unwrap()).unwrap(), s);
    }

    #[test]
    fn word_only_first() {
        let text = r#"
dimension = 2
[snake]
kind = "preset"
name = "half_circle"
[curve]
kind = "composite"
[[curve.pieces]]
kind = "segment"
to = [1.9, 0.0]
[[curve.pieces]]
kind = "word"
letters = [{ v = [1.0, 0.0], lambda = 0.1 }]
"#;
        assert!(Scene::parse(text).unwrap_err().to_string().contains("must come first"));
    }
}
