//! Target curves `γ: [0,1] → R^d` for the snout, with analytic derivatives.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{CharmerError, Result};

/// Regularity class of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Smoothness {
    /// Continuous, C¹ away from finitely many junctions.
    PiecewiseC1,
    C1,
    C2,
    CInfinity,
}

/// A parameterized curve on `[0, 1]`.
pub trait Curve: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64) -> DVector<f64>;
    fn velocity(&self, t: f64) -> DVector<f64>;

    /// Second derivative when available in closed form.
    fn acceleration(&self, _t: f64) -> Option<DVector<f64>> {
        None
    }

    fn smoothness(&self) -> Smoothness;

    /// Interior parameters where higher derivatives may jump; integrators
    /// place grid points on them.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

pub type SharedCurve = Arc<dyn Curve>;

/// Largest `|γ̇ − finite difference| / (1 + |γ̇|)` on an interior probe grid.
pub fn derivative_defect(curve: &dyn Curve, probes: usize) -> f64 {
    let h = 1e-6;
    (1..probes)
        .map(|i| {
            let t = i as f64 / probes as f64;
            let fd = (curve.eval(t + h) - curve.eval(t - h)) / (2.0 * h);
            let v = curve.velocity(t);
            (v.clone() - fd).norm() / (1.0 + v.norm())
        })
        .fold(0.0, f64::max)
}

/// `max |γ(t)|` over `n + 1` equally spaced parameters.
pub fn max_norm(curve: &dyn Curve, n: usize) -> (f64, f64) {
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            (curve.eval(t).norm(), t)
        })
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a })
}

#[derive(Debug, Clone)]
pub struct ConstantCurve {
    point: DVector<f64>,
}

impl ConstantCurve {
    pub fn new(point: DVector<f64>) -> Self {
        Self { point }
    }
}

impl Curve for ConstantCurve {
    fn dim(&self) -> usize {
        self.point.len()
    }
    fn eval(&self, _t: f64) -> DVector<f64> {
        self.point.clone()
    }
    fn velocity(&self, _t: f64) -> DVector<f64> {
        DVector::zeros(self.point.len())
    }
    fn acceleration(&self, _t: f64) -> Option<DVector<f64>> {
        Some(DVector::zeros(self.point.len()))
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::CInfinity
    }
}

/// Linear parameterization of `[a, b]`.
#[derive(Debug, Clone)]
pub struct Segment {
    a: DVector<f64>,
    b: DVector<f64>,
}

impl Segment {
    pub fn new(a: DVector<f64>, b: DVector<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(CharmerError::DimensionMismatch { expected: a.len(), got: b.len() });
        }
        Ok(Self { a, b })
    }
}

impl Curve for Segment {
    fn dim(&self) -> usize {
        self.a.len()
    }
    fn eval(&self, t: f64) -> DVector<f64> {
        &self.a + (&self.b - &self.a) * t
    }
    fn velocity(&self, _t: f64) -> DVector<f64> {
        &self.b - &self.a
    }
    fn acceleration(&self, _t: f64) -> Option<DVector<f64>> {
        Some(DVector::zeros(self.a.len()))
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::CInfinity
    }
}

/// `c + r (cos θ e₁ + sin θ e₂)` with `θ = θ₀ + sweep·t`, in the plane spanned
/// by the orthonormal pair `(e₁, e₂)`.
#[derive(Debug, Clone)]
pub struct CircleArc {
    center: DVector<f64>,
    radius: f64,
    e1: DVector<f64>,
    e2: DVector<f64>,
    start_angle: f64,
    sweep: f64,
}

impl CircleArc {
    pub fn new(
        center: DVector<f64>,
        radius: f64,
        e1: DVector<f64>,
        e2: DVector<f64>,
        start_angle: f64,
        sweep: f64,
    ) -> Result<Self> {
        let d = center.len();
        if e1.len() != d || e2.len() != d {
            return Err(CharmerError::DimensionMismatch { expected: d, got: e1.len().max(e2.len()) });
        }
        if (e1.norm() - 1.0).abs() > 1e-12 || (e2.norm() - 1.0).abs() > 1e-12 || e1.dot(&e2).abs() > 1e-12 {
            return Err(CharmerError::InvalidArgument("circle plane basis must be orthonormal".into()));
        }
        if !(radius > 0.0) {
            return Err(CharmerError::InvalidArgument("circle radius must be positive".into()));
        }
        Ok(Self {
            center,
            radius,
            e1,
            e2,
            start_angle,
            sweep,
        })
    }

    /// Planar circle through `start`, centered at `center`, run `turns` times
    /// (counterclockwise for positive `turns`).
    pub fn planar_loop(center: [f64; 2], start: [f64; 2], turns: f64) -> Result<Self> {
        let dx = start[0] - center[0];
        let dy = start[1] - center[1];
        let radius = dx.hypot(dy);
        Self::new(
            DVector::from_vec(center.to_vec()),
            radius,
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
            dy.atan2(dx),
            turns * 2.0 * std::f64::consts::PI,
        )
    }

    /// Loop in the plane `(u, w)` through `base`: `base + r((cos θ − 1) u + sin θ w)`.
    pub fn loop_through(base: &DVector<f64>, u: DVector<f64>, w: DVector<f64>, radius: f64) -> Result<Self> {
        let center = base - &u * radius;
        Self::new(center, radius, u, w, 0.0, 2.0 * std::f64::consts::PI)
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn angle(&self, t: f64) -> f64 {
        self.start_angle + self.sweep * t
    }
}

impl Curve for CircleArc {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn eval(&self, t: f64) -> DVector<f64> {
        let (s, c) = self.angle(t).sin_cos();
        &self.center + (&self.e1 * c + &self.e2 * s) * self.radius
    }
    fn velocity(&self, t: f64) -> DVector<f64> {
        let (s, c) = self.angle(t).sin_cos();
        (&self.e2 * c - &self.e1 * s) * (self.radius * self.sweep)
    }
    fn acceleration(&self, t: f64) -> Option<DVector<f64>> {
        let (s, c) = self.angle(t).sin_cos();
        Some((&self.e1 * c + &self.e2 * s) * (-self.radius * self.sweep * self.sweep))
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::CInfinity
    }
}

/// Concatenation of curves, piece `i` running over a share of `[0,1]`
/// proportional to its duration.
#[derive(Debug, Clone)]
pub struct Composite {
    pieces: Vec<SharedCurve>,
    knots: Vec<f64>,
}

impl Composite {
    pub fn new(pieces: Vec<SharedCurve>, durations: &[f64]) -> Result<Self> {
        if pieces.is_empty() || pieces.len() != durations.len() {
            return Err(CharmerError::InvalidArgument("one positive duration per piece".into()));
        }
        if durations.iter().any(|d| !(*d > 0.0)) {
            return Err(CharmerError::InvalidArgument("durations must be positive".into()));
        }
        let d = pieces[0].dim();
        if let Some(p) = pieces.iter().find(|p| p.dim() != d) {
            return Err(CharmerError::DimensionMismatch { expected: d, got: p.dim() });
        }
        let total: f64 = durations.iter().sum();
        let mut knots = vec![0.0];
        let mut acc = 0.0;
        for dur in durations {
            acc += dur / total;
            knots.push(acc);
        }
        *knots.last_mut().unwrap() = 1.0;
        Ok(Self { pieces, knots })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn locate(&self, t: f64) -> (usize, f64, f64) {
        let n = self.pieces.len();
        let mut i = self.knots[1..n].partition_point(|k| *k <= t);
        i = i.min(n - 1);
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        let scale = 1.0 / (b - a);
        (i, ((t - a) * scale).clamp(0.0, 1.0), scale)
    }

    /// Largest jump of position and velocity across interior junctions.
    pub fn junction_defects(&self) -> (f64, f64) {
        let mut pos: f64 = 0.0;
        let mut vel: f64 = 0.0;
        for i in 0..self.pieces.len() - 1 {
            let s_left = 1.0 / (self.knots[i + 1] - self.knots[i]);
            let s_right = 1.0 / (self.knots[i + 2] - self.knots[i + 1]);
            let (l, r) = (&self.pieces[i], &self.pieces[i + 1]);
            pos = pos.max((l.eval(1.0) - r.eval(0.0)).norm());
            vel = vel.max((l.velocity(1.0) * s_left - r.velocity(0.0) * s_right).norm());
        }
        (pos, vel)
    }
}

impl Curve for Composite {
    fn dim(&self) -> usize {
        self.pieces[0].dim()
    }
    fn eval(&self, t: f64) -> DVector<f64> {
        let (i, u, _) = self.locate(t);
        self.pieces[i].eval(u)
    }
    fn velocity(&self, t: f64) -> DVector<f64> {
        let (i, u, scale) = self.locate(t);
        self.pieces[i].velocity(u) * scale
    }
    fn acceleration(&self, t: f64) -> Option<DVector<f64>> {
        let (i, u, scale) = self.locate(t);
        self.pieces[i].acceleration(u).map(|a| a * (scale * scale))
    }
    fn smoothness(&self) -> Smoothness {
        let base = self
            .pieces
            .iter()
            .map(|p| p.smoothness())
            .min()
            .unwrap_or(Smoothness::CInfinity);
        let (pos, vel) = self.junction_defects();
        if pos > 1e-9 {
            // not even continuous; callers reject such curves on their own
            Smoothness::PiecewiseC1
        } else if vel > 1e-7 {
            Smoothness::PiecewiseC1
        } else {
            base.min(Smoothness::C1)
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            let (a, b) = (self.knots[i], self.knots[i + 1]);
            if i > 0 {
                out.push(a);
            }
            out.extend(p.breakpoints().into_iter().map(|u| a + (b - a) * u));
        }
        out
    }
}

/// Cubic Hermite interpolation through points with prescribed tangents,
/// segment `k` covering `[k/n, (k+1)/n]`.
#[derive(Debug, Clone)]
pub struct HermiteSpline {
    points: Vec<DVector<f64>>,
    tangents: Vec<DVector<f64>>,
}

impl HermiteSpline {
    /// Tangents are derivatives with respect to the local segment parameter.
    pub fn new(points: Vec<DVector<f64>>, tangents: Vec<DVector<f64>>) -> Result<Self> {
        if points.len() < 2 || points.len() != tangents.len() {
            return Err(CharmerError::InvalidArgument("need >= 2 points with one tangent each".into()));
        }
        let d = points[0].len();
        if points.iter().chain(&tangents).any(|p| p.len() != d) {
            return Err(CharmerError::DimensionMismatch { expected: d, got: 0 });
        }
        Ok(Self { points, tangents })
    }

    /// Catmull-Rom tangents (one-sided at the ends).
    pub fn catmull_rom(points: Vec<DVector<f64>>) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(CharmerError::InvalidArgument("need >= 2 points".into()));
        }
        let tangents = (0..n)
            .map(|k| {
                if k == 0 {
                    &points[1] - &points[0]
                } else if k == n - 1 {
                    &points[n - 1] - &points[n - 2]
                } else {
                    (&points[k + 1] - &points[k - 1]) * 0.5
                }
            })
            .collect();
        Self::new(points, tangents)
    }

    fn segments(&self) -> usize {
        self.points.len() - 1
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.segments() as f64;
        let x = (t * n).clamp(0.0, n);
        let k = (x.floor() as usize).min(self.segments() - 1);
        (k, x - k as f64)
    }
}

impl Curve for HermiteSpline {
    fn dim(&self) -> usize {
        self.points[0].len()
    }
    fn eval(&self, t: f64) -> DVector<f64> {
        let (k, u) = self.locate(t);
        let (u2, u3) = (u * u, u * u * u);
        &self.points[k] * (2.0 * u3 - 3.0 * u2 + 1.0)
            + &self.tangents[k] * (u3 - 2.0 * u2 + u)
            + &self.points[k + 1] * (-2.0 * u3 + 3.0 * u2)
            + &self.tangents[k + 1] * (u3 - u2)
    }
    fn velocity(&self, t: f64) -> DVector<f64> {
        let (k, u) = self.locate(t);
        let n = self.segments() as f64;
        let u2 = u * u;
        (&self.points[k] * (6.0 * u2 - 6.0 * u)
            + &self.tangents[k] * (3.0 * u2 - 4.0 * u + 1.0)
            + &self.points[k + 1] * (-6.0 * u2 + 6.0 * u)
            + &self.tangents[k + 1] * (3.0 * u2 - 2.0 * u))
            * n
    }
    fn acceleration(&self, t: f64) -> Option<DVector<f64>> {
        let (k, u) = self.locate(t);
        let n = self.segments() as f64;
        Some(
            (&self.points[k] * (12.0 * u - 6.0)
                + &self.tangents[k] * (6.0 * u - 4.0)
                + &self.points[k + 1] * (-12.0 * u + 6.0)
                + &self.tangents[k + 1] * (6.0 * u - 2.0))
                * (n * n),
        )
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::C1
    }
    fn breakpoints(&self) -> Vec<f64> {
        let n = self.segments();
        (1..n).map(|k| k as f64 / n as f64).collect()
    }
}

/// `γ(φ(u))` for an increasing reparameterization `φ` of `[0,1]`.
pub struct Reparameterized {
    base: SharedCurve,
    phi: Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>,
    smoothness: Smoothness,
}

impl fmt::Debug for Reparameterized {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reparameterized").field("base", &self.base).finish_non_exhaustive()
    }
}

impl Reparameterized {
    /// `phi` returns `(φ(u), φ'(u), φ''(u))`.
    pub fn new(
        base: SharedCurve,
        phi: impl Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static,
        smoothness: Smoothness,
    ) -> Self {
        let smoothness = smoothness.min(base.smoothness());
        Self {
            base,
            phi: Arc::new(phi),
            smoothness,
        }
    }

    /// `φ(u) = u²`.
    pub fn squared(base: SharedCurve) -> Self {
        Self::new(base, |u| (u * u, 2.0 * u, 2.0), Smoothness::CInfinity)
    }
}

impl Curve for Reparameterized {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn eval(&self, t: f64) -> DVector<f64> {
        self.base.eval((self.phi)(t).0)
    }
    fn velocity(&self, t: f64) -> DVector<f64> {
        let (p, dp, _) = (self.phi)(t);
        self.base.velocity(p) * dp
    }
    fn acceleration(&self, t: f64) -> Option<DVector<f64>> {
        let (p, dp, ddp) = (self.phi)(t);
        let a = self.base.acceleration(p)?;
        Some(a * (dp * dp) + self.base.velocity(p) * ddp)
    }
    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }
}

/// `γ(1 − t)`.
#[derive(Debug, Clone)]
pub struct Reversed(pub SharedCurve);

impl Curve for Reversed {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, t: f64) -> DVector<f64> {
        self.0.eval(1.0 - t)
    }
    fn velocity(&self, t: f64) -> DVector<f64> {
        -self.0.velocity(1.0 - t)
    }
    fn acceleration(&self, t: f64) -> Option<DVector<f64>> {
        self.0.acceleration(1.0 - t)
    }
    fn smoothness(&self) -> Smoothness {
        self.0.smoothness()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.0.breakpoints().into_iter().rev().map(|t| 1.0 - t).collect()
    }
}

/// `(1 − s) γ(0) + s γ(t)`: the loop shrunk towards its base point.
#[derive(Debug, Clone)]
pub struct Shrunk {
    base: SharedCurve,
    anchor: DVector<f64>,
    s: f64,
}

impl Shrunk {
    pub fn new(base: SharedCurve, s: f64) -> Self {
        let anchor = base.eval(0.0);
        Self { base, anchor, s }
    }
}

impl Curve for Shrunk {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn eval(&self, t: f64) -> DVector<f64> {
        &self.anchor * (1.0 - self.s) + self.base.eval(t) * self.s
    }
    fn velocity(&self, t: f64) -> DVector<f64> {
        self.base.velocity(t) * self.s
    }
    fn acceleration(&self, t: f64) -> Option<DVector<f64>> {
        self.base.acceleration(t).map(|a| a * self.s)
    }
    fn smoothness(&self) -> Smoothness {
        self.base.smoothness()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.base.breakpoints()
    }
}

type VecFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// Curve from closures, for ad-hoc analytic paths.
#[derive(Clone)]
pub struct FnCurve {
    dim: usize,
    eval: VecFn,
    velocity: VecFn,
    acceleration: Option<VecFn>,
    smoothness: Smoothness,
}

impl fmt::Debug for FnCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnCurve").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl FnCurve {
    pub fn new(
        dim: usize,
        eval: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        velocity: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        smoothness: Smoothness,
    ) -> Self {
        Self {
            dim,
            eval: Arc::new(eval),
            velocity: Arc::new(velocity),
            acceleration: None,
            smoothness,
        }
    }

    pub fn with_acceleration(mut self, acc: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.acceleration = Some(Arc::new(acc));
        self
    }
}

impl Curve for FnCurve {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64) -> DVector<f64> {
        (self.eval)(t)
    }
    fn velocity(&self, t: f64) -> DVector<f64> {
        (self.velocity)(t)
    }
    fn acceleration(&self, t: f64) -> Option<DVector<f64>> {
        self.acceleration.as_ref().map(|a| a(t))
    }
    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }
}
