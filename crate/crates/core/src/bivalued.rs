//! Configurations with exactly two values `p ≠ q`, modelled by the pair
//! `(p, q)` with endpoint `f̂(p, q) = L_p p + L_q q`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Configuration, Partition, Piece};
use crate::curve::Curve;
use crate::error::{CharmerError, Result};
use crate::numerics;
use crate::solver::{time_grid, LiftOptions, LiftStatus};
use crate::sphere::SpherePoint;

/// Tolerance of the crossing gate, on `⟨γ̇, p⟩/|γ̇|` and on the curvature.
pub const HAIRER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BivaluedConfig {
    p: SpherePoint,
    q: SpherePoint,
    lp: f64,
    lq: f64,
    partition: Partition,
    on_p: Vec<bool>,
}

impl BivaluedConfig {
    /// `p` on `[0, L_p]`, `q` on `[L_p, L_p + L_q]`.
    pub fn new(p: SpherePoint, q: SpherePoint, lp: f64, lq: f64) -> Result<Self> {
        let partition = Partition::from_lengths(&[lp, lq])?;
        Self::with_pattern(p, q, partition, vec![true, false])
    }

    /// Interval `i` of `partition` carries `p` iff `on_p[i]`.
    pub fn with_pattern(p: SpherePoint, q: SpherePoint, partition: Partition, on_p: Vec<bool>) -> Result<Self> {
        if p.dim() != q.dim() {
            return Err(CharmerError::DimensionMismatch { expected: p.dim(), got: q.dim() });
        }
        if on_p.len() != partition.n_pieces() {
            return Err(CharmerError::InvalidArgument("one p/q flag per interval".into()));
        }
        if p.chordal_distance(&q) < numerics::CLUSTER_TOL {
            return Err(CharmerError::NotBivalued);
        }
        let (mut lp, mut lq) = (0.0, 0.0);
        for (i, flag) in on_p.iter().enumerate() {
            let (a, b) = partition.bounds(i);
            if *flag {
                lp += b - a;
            } else {
                lq += b - a;
            }
        }
        if lp == 0.0 || lq == 0.0 {
            return Err(CharmerError::NotBivalued);
        }
        Ok(Self {
            p,
            q,
            lp,
            lq,
            partition,
            on_p,
        })
    }

    /// Reads a piecewise-constant configuration taking exactly two values;
    /// `p` is the value on the first interval.
    pub fn from_configuration(z: &Configuration) -> Result<Self> {
        let mut values = Vec::with_capacity(z.pieces().len());
        for piece in z.pieces() {
            match piece {
                Piece::Constant(v) => values.push(v.clone()),
                Piece::Sampled(_) => return Err(CharmerError::NotBivalued),
            }
        }
        let p = values[0].clone();
        let q = values
            .iter()
            .find(|v| v.chordal_distance(&p) >= numerics::CLUSTER_TOL)
            .cloned()
            .ok_or(CharmerError::NotBivalued)?;
        let mut on_p = Vec::with_capacity(values.len());
        for v in &values {
            if v.chordal_distance(&p) < numerics::CLUSTER_TOL {
                on_p.push(true);
            } else if v.chordal_distance(&q) < numerics::CLUSTER_TOL {
                on_p.push(false);
            } else {
                return Err(CharmerError::NotBivalued);
            }
        }
        Self::with_pattern(p, q, z.partition().clone(), on_p)
    }

    pub fn to_configuration(&self) -> Configuration {
        let pieces = self
            .on_p
            .iter()
            .map(|f| Piece::Constant(if *f { self.p.clone() } else { self.q.clone() }))
            .collect();
        Configuration::new(self.partition.clone(), pieces).expect("pattern validated on construction")
    }

    /// Same pattern, new values.
    pub fn with_values(&self, p: SpherePoint, q: SpherePoint) -> Self {
        Self {
            p,
            q,
            ..self.clone()
        }
    }

    pub fn p(&self) -> &SpherePoint {
        &self.p
    }
    pub fn q(&self) -> &SpherePoint {
        &self.q
    }
    pub fn lp(&self) -> f64 {
        self.lp
    }
    pub fn lq(&self) -> f64 {
        self.lq
    }
    pub fn length(&self) -> f64 {
        self.partition.length()
    }
    pub fn dim(&self) -> usize {
        self.p.dim()
    }
    pub fn partition(&self) -> &Partition {
        &self.partition
    }
    pub fn pattern(&self) -> &[bool] {
        &self.on_p
    }

    /// `p = −q` within `tol` (chordal).
    pub fn is_lined(&self, tol: f64) -> bool {
        self.p.chordal_distance(&self.q.neg()) <= tol
    }

    /// `f̂(p, q) = L_p p + L_q q`.
    pub fn w_endpoint(&self) -> DVector<f64> {
        self.p.coords() * self.lp + self.q.coords() * self.lq
    }

    /// `M = L I − L_p p pᵀ − L_q q qᵀ`.
    fn gram_defect(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::identity(d, d) * self.length()
            - self.p.coords() * self.p.coords().transpose() * self.lp
            - self.q.coords() * self.q.coords().transpose() * self.lq
    }
}

fn perp(b: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![-b[1], b[0]])
}

/// Planar fiber point `(p, q)` over `b` on branch `sigma = ±1`, where `p`
/// lies on the side of `J b` given by `sigma`.
pub fn fiber_solve(lp: f64, lq: f64, b: &DVector<f64>, sigma: f64) -> Option<(SpherePoint, SpherePoint)> {
    let r = b.norm();
    if b.len() != 2 || r < 1e-300 {
        return None;
    }
    let cos = (r * r + lp * lp - lq * lq) / (2.0 * lp * r);
    if cos.abs() > 1.0 + 1e-12 {
        return None;
    }
    let cos = cos.clamp(-1.0, 1.0);
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    let p = (b * cos + perp(b) * (sigma * sin)) / r;
    let q = (b - &p * lp) / lq;
    Some((SpherePoint::new(p).ok()?, SpherePoint::new(q).ok()?))
}

/// Both planar fiber points over `f̂(c)`, the branch of `c` first.
pub fn fiber_points(c: &BivaluedConfig) -> Result<Vec<BivaluedConfig>> {
    if c.dim() != 2 {
        return Err(CharmerError::DimensionMismatch { expected: 2, got: c.dim() });
    }
    let b = c.w_endpoint();
    let sigma = branch_of(c.p(), &b).unwrap_or(1.0);
    let mut out = Vec::new();
    for s in [sigma, -sigma] {
        if let Some((p, q)) = fiber_solve(c.lp, c.lq, &b, s) {
            if out.iter().all(|o: &BivaluedConfig| o.p.chordal_distance(&p) > 1e-9) {
                out.push(c.with_values(p, q));
            }
        }
    }
    Ok(out)
}

fn branch_of(p: &SpherePoint, b: &DVector<f64>) -> Option<f64> {
    let s = p.coords().dot(&perp(b)) / b.norm();
    (s.abs() > 1e-12).then_some(s.signum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HairerReport {
    /// `⟨γ̇(t₀), p₀⟩ / |γ̇(t₀)|`.
    pub orthogonality: f64,
    /// Signed curvature `−⟨γ̈, p₀⟩/|γ̇|²`, i.e. `det(γ̇, γ̈)/|γ̇|³` in the frame
    /// `(p₀, γ̇)` once `γ̇ ⊥ p₀`.
    pub kappa: f64,
    /// `(L_p − L_q)/L²`.
    pub required: f64,
    pub admissible: bool,
}

/// Second derivative: analytic when available, else Richardson-extrapolated
/// central differences of the velocity.
fn second_derivative(curve: &dyn Curve, t: f64) -> Result<DVector<f64>> {
    if curve.breakpoints().iter().any(|k| (k - t).abs() < 1e-9) {
        return Err(CharmerError::NotC2 { t });
    }
    if let Some(a) = curve.acceleration(t) {
        return Ok(a);
    }
    let h = 1e-4;
    let d = |h: f64| (curve.velocity(t + h) - curve.velocity(t - h)) / (2.0 * h);
    Ok((d(h / 2.0) * 4.0 - d(h)) / 3.0)
}

/// Whether a lift may pass through the lined configuration `c` (with
/// `p = −q`) at time `t₀`.
pub fn hairer_admissible(curve: &dyn Curve, t0: f64, c: &BivaluedConfig, tol: f64) -> Result<HairerReport> {
    let v = curve.velocity(t0);
    let speed = v.norm();
    if speed < 1e-14 {
        return Err(CharmerError::DegenerateTangency { t0 });
    }
    let acc = second_derivative(curve, t0)?;
    let p0 = c.p().coords();
    let orthogonality = v.dot(p0) / speed;
    let kappa = -acc.dot(p0) / (speed * speed);
    let required = (c.lp - c.lq) / (c.length() * c.length());
    let admissible = orthogonality.abs() <= tol && (kappa - required).abs() <= tol;
    Ok(HairerReport {
        orthogonality,
        kappa,
        required,
        admissible,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub t0: f64,
    pub report: HairerReport,
}

#[derive(Debug, Clone)]
pub struct BivaluedLift {
    pub times: Vec<f64>,
    pub configs: Vec<BivaluedConfig>,
    pub crossings: Vec<CrossingReport>,
    pub status: LiftStatus,
}

impl BivaluedLift {
    pub fn final_config(&self) -> &BivaluedConfig {
        self.configs.last().expect("a lift records its start")
    }
}

/// Unique lifting of `curve` through `c₀`.
///
/// In the plane the fiber is solved exactly at every step; the branch
/// switches only at admissible passages through lined configurations. In
/// higher dimension the horizontal ODE is integrated and projected back onto
/// the fiber, stopping before lined configurations.
pub fn lift_bivalued(c0: &BivaluedConfig, curve: &dyn Curve, opts: &LiftOptions) -> Result<BivaluedLift> {
    opts.validate()?;
    if curve.dim() != c0.dim() {
        return Err(CharmerError::DimensionMismatch { expected: c0.dim(), got: curve.dim() });
    }
    let distance = (c0.w_endpoint() - curve.eval(0.0)).norm();
    if distance > opts.defect_tolerance {
        return Err(CharmerError::StartMismatch { distance });
    }
    if c0.dim() == 2 {
        lift_planar(c0, curve, opts)
    } else {
        lift_ode(c0, curve, opts)
    }
}

fn lift_planar(c0: &BivaluedConfig, curve: &dyn Curve, opts: &LiftOptions) -> Result<BivaluedLift> {
    let (lp, lq, l) = (c0.lp, c0.lq, c0.length());
    let gap = (lp - lq).abs();
    let mut sigma = branch_of(c0.p(), &curve.eval(0.0)).ok_or(CharmerError::DegenerateTangency { t0: 0.0 })?;
    let radial = |t: f64| curve.eval(t).dot(&curve.velocity(t));
    let grid = time_grid(curve, opts.step);
    let mut out = BivaluedLift {
        times: vec![0.0],
        configs: vec![c0.clone()],
        crossings: Vec::new(),
        status: LiftStatus::Complete,
    };
    let mut last_lined: Option<(f64, BivaluedConfig)> = None;
    for (n, pair) in grid.windows(2).enumerate() {
        let (t0, t1) = (pair[0], pair[1]);
        if radial(t0) < 0.0 && radial(t1) >= 0.0 {
            let (mut a, mut b) = (t0, t1);
            while b - a > 1e-12 {
                let m = 0.5 * (a + b);
                if radial(m) < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            let tc = 0.5 * (a + b);
            let bc = curve.eval(tc);
            if bc.norm() - gap <= 1e-8 * l {
                // the lined configuration reached from the current branch
                let p = if bc.norm() > 1e-6 * l {
                    &bc * ((lp - lq).signum() / bc.norm())
                } else {
                    let v = curve.velocity(tc);
                    -perp(&v) * (sigma / v.norm())
                };
                let p = SpherePoint::new(p)?;
                let lined = c0.with_values(p.clone(), p.neg());
                let report = hairer_admissible(curve, tc, &lined, HAIRER_TOL)?;
                if !report.admissible {
                    return Err(CharmerError::InadmissibleCrossing {
                        t0: tc,
                        kappa: report.kappa,
                        required: report.required,
                        orthogonality: report.orthogonality,
                    });
                }
                out.crossings.push(CrossingReport { t0: tc, report });
                last_lined = Some((tc, lined));
                sigma = -sigma;
            }
        }
        let b = curve.eval(t1);
        let next = match (fiber_solve(lp, lq, &b, sigma), &last_lined) {
            (Some((p, q)), _) => c0.with_values(p, q),
            // a grid point sitting on the crossing itself
            (None, Some((tc, lined))) if (tc - t1).abs() < 1e-9 => lined.clone(),
            (None, _) => return Err(CharmerError::OutsideBivaluedImage { t: t1, norm: b.norm() }),
        };
        if (n + 1) % opts.record_every == 0 || n + 2 == grid.len() {
            out.times.push(t1);
            out.configs.push(next);
        }
    }
    Ok(out)
}

fn lift_ode(c0: &BivaluedConfig, curve: &dyn Curve, opts: &LiftOptions) -> Result<BivaluedLift> {
    let l = c0.length();
    let d = c0.dim();
    let field = |c: &BivaluedConfig, t: f64| -> Option<(DVector<f64>, DVector<f64>)> {
        let m = c.gram_defect();
        if m.clone().symmetric_eigenvalues().min() < opts.sigma_min * l {
            return None;
        }
        let u = m.cholesky()?.solve(&curve.velocity(t));
        let (p, q) = (c.p.coords(), c.q.coords());
        Some((&u - p * p.dot(&u), &u - q * q.dot(&u)))
    };
    let shift = |c: &BivaluedConfig, dp: &DVector<f64>, dq: &DVector<f64>, h: f64| -> Result<BivaluedConfig> {
        Ok(c.with_values(
            SpherePoint::new(c.p.coords() + dp * h)?,
            SpherePoint::new(c.q.coords() + dq * h)?,
        ))
    };
    let grid = time_grid(curve, opts.step);
    let mut out = BivaluedLift {
        times: vec![0.0],
        configs: vec![c0.clone()],
        crossings: Vec::new(),
        status: LiftStatus::Complete,
    };
    let mut c = c0.clone();
    for (n, pair) in grid.windows(2).enumerate() {
        let (t0, t1) = (pair[0], pair[1]);
        let h = t1 - t0;
        let step = (|| {
            let k1 = field(&c, t0)?;
            let c2 = shift(&c, &k1.0, &k1.1, h / 2.0).ok()?;
            let k2 = field(&c2, t0 + h / 2.0)?;
            let c3 = shift(&c, &k2.0, &k2.1, h / 2.0).ok()?;
            let k3 = field(&c3, t0 + h / 2.0)?;
            let c4 = shift(&c, &k3.0, &k3.1, h).ok()?;
            let k4 = field(&c4, t1)?;
            let dp = (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) / 6.0;
            let dq = (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) / 6.0;
            shift(&c, &dp, &dq, h).ok()
        })();
        let Some(mut next) = step else {
            out.status = LiftStatus::StoppedNearLined;
            out.times.push(t0);
            out.configs.push(c);
            return Ok(out);
        };
        // Newton back onto the fiber over γ(t₁)
        let target = curve.eval(t1);
        for _ in 0..3 {
            let r = &target - next.w_endpoint();
            if r.norm() < 1e-15 * l {
                break;
            }
            let Some(ch) = next.gram_defect().cholesky() else { break };
            let u = ch.solve(&r);
            let (p, q) = (next.p.coords().clone(), next.q.coords().clone());
            next = shift(&next, &(&u - &p * p.dot(&u)), &(&u - &q * q.dot(&u)), 1.0)?;
        }
        c = next;
        if (n + 1) % opts.record_every == 0 || n + 2 == grid.len() {
            out.times.push(t1);
            out.configs.push(c.clone());
        }
    }
    debug_assert_eq!(c.dim(), d);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BivaluedOrbitShape {
    /// A round sphere of the given dimension (two points when 0).
    Sphere(usize),
    Point,
}

#[derive(Debug, Clone)]
pub struct BivaluedOrbit {
    pub shape: BivaluedOrbitShape,
    pub components: usize,
    pub witnesses: Vec<BivaluedConfig>,
}

/// Holonomy orbit of a two-valued configuration, with sampled witnesses
/// (`samples` of them where the orbit is a positive-dimensional sphere).
pub fn horb_bivalued(c0: &BivaluedConfig, samples: usize, seed: u64) -> BivaluedOrbit {
    let d = c0.dim();
    let l = c0.length();
    let b = c0.w_endpoint();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussian = |n: usize| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    if c0.is_lined(numerics::CLUSTER_TOL) {
        if b.norm() > numerics::CLUSTER_TOL * l {
            return BivaluedOrbit {
                shape: BivaluedOrbitShape::Point,
                components: 1,
                witnesses: vec![c0.clone()],
            };
        }
        let mut witnesses = vec![c0.clone()];
        while witnesses.len() < samples.max(1) {
            if let Ok(p) = SpherePoint::new(gaussian(d)) {
                witnesses.push(c0.with_values(p.clone(), p.neg()));
            }
        }
        return BivaluedOrbit {
            shape: BivaluedOrbitShape::Sphere(d - 1),
            components: 1,
            witnesses,
        };
    }
    // p ranges over {⟨p, b⟩ = c} ∩ S^{d−1}, a sphere of dimension d − 2
    let r = b.norm();
    let bhat = &b / r;
    let cos = ((r * r + c0.lp * c0.lp - c0.lq * c0.lq) / (2.0 * c0.lp * r)).clamp(-1.0, 1.0);
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    let on_fiber = |e: &DVector<f64>| {
        let p = &bhat * cos + e * sin;
        let q = (&b - &p * c0.lp) / c0.lq;
        Some(c0.with_values(SpherePoint::new(p).ok()?, SpherePoint::new(q).ok()?))
    };
    let mut witnesses = vec![c0.clone()];
    if d == 2 {
        // reflection of p across the line through b
        let mirror = &bhat * (2.0 * c0.p.coords().dot(&bhat)) - c0.p.coords();
        let e = perp(&bhat) * (mirror.dot(&perp(&bhat))).signum();
        witnesses.extend(on_fiber(&e));
    } else {
        while witnesses.len() < samples.max(2) {
            let g = gaussian(d);
            let e = &g - &bhat * g.dot(&bhat);
            if e.norm() > 1e-6 {
                if let Some(w) = on_fiber(&(&e / e.norm())) {
                    witnesses.push(w);
                }
            }
        }
    }
    BivaluedOrbit {
        shape: BivaluedOrbitShape::Sphere(d - 2),
        components: if d == 2 { 2 } else { 1 },
        witnesses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{CircleArc, Composite, ConstantCurve, FnCurve, Segment, SharedCurve, Smoothness};
    use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
    use std::sync::Arc;

    fn v2(x: f64, y: f64) -> DVector<f64> {
        DVector::from_vec(vec![x, y])
    }

    pub(crate) fn example() -> BivaluedConfig {
        // normalizing (1, ±1) makes √2·p + √2·q exactly (2, 0)
        let p = SpherePoint::from_slice(&[1.0, 1.0]).unwrap();
        let q = SpherePoint::from_slice(&[1.0, -1.0]).unwrap();
        BivaluedConfig::new(p, q, SQRT_2, SQRT_2).unwrap()
    }

    /// Half-turn of the radius-2 circle, then the diameter back through 0.
    pub(crate) fn example_loop() -> Composite {
        let arc: SharedCurve = Arc::new(CircleArc::planar_loop([0.0, 0.0], [2.0, 0.0], 0.5).unwrap());
        let back: SharedCurve = Arc::new(Segment::new(v2(-2.0, 0.0), v2(2.0, 0.0)).unwrap());
        Composite::new(vec![arc, back], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn endpoints() {
        assert_eq!(example().w_endpoint(), v2(2.0, 0.0));
        assert_eq!(example().to_configuration().endpoint(), example().w_endpoint());
        let c = BivaluedConfig::new(SpherePoint::basis(2, 0), SpherePoint::basis(2, 1), 2.0, 1.0).unwrap();
        assert_eq!(c.w_endpoint(), v2(2.0, 1.0));
        let lined = BivaluedConfig::new(SpherePoint::basis(2, 0), SpherePoint::from_angle(PI), 1.0, 1.0).unwrap();
        assert!(lined.w_endpoint().norm() < 1e-15);
        assert!(lined.is_lined(1e-12));
    }

    #[test]
    fn round_trips_through_configuration() {
        let z = example().to_configuration();
        assert_eq!(BivaluedConfig::from_configuration(&z).unwrap(), example());
        assert_eq!(z.sedentariness(), SQRT_2);
        assert_eq!(z.spherical_dimension(1e-8), 0);
        assert!(BivaluedConfig::from_configuration(&Configuration::half_circle()).is_err());
    }

    #[test]
    fn regular_values_have_two_preimages() {
        let c = example();
        let pts = fiber_points(&c).unwrap();
        assert_eq!(pts.len(), 2);
        for w in &pts {
            assert!((w.w_endpoint() - c.w_endpoint()).norm() < 1e-12);
        }
        assert!(pts[0].p().chordal_distance(c.p()) < 1e-15);
    }

    #[test]
    fn constant_curve_keeps_configuration() {
        let c = example();
        let lift = lift_bivalued(&c, &ConstantCurve::new(c.w_endpoint()), &LiftOptions::default()).unwrap();
        for w in &lift.configs {
            assert!(w.p().chordal_distance(c.p()) < 1e-12 && w.q().chordal_distance(c.q()) < 1e-12);
        }
    }

    #[test]
    fn example_loop_conjugates() {
        let c = example();
        let lift = lift_bivalued(&c, &example_loop(), &LiftOptions::default()).unwrap();
        assert_eq!(lift.crossings.len(), 1);
        assert!((lift.crossings[0].t0 - 0.75).abs() < 1e-9);
        let end = lift.final_config();
        assert!(end.p().chordal_distance(&SpherePoint::from_angle(-FRAC_PI_4)) < 1e-8);
        assert!(end.q().chordal_distance(&SpherePoint::from_angle(FRAC_PI_4)) < 1e-8);
        // the fiber equation holds at every recorded time
        let curve = example_loop();
        for (t, w) in lift.times.iter().zip(&lift.configs) {
            assert!((w.w_endpoint() - curve.eval(*t)).norm() < 1e-10);
            assert_eq!(w.pattern(), c.pattern());
        }
        // and the passage is continuous
        for pair in lift.configs.windows(2) {
            assert!(pair[0].p().chordal_distance(pair[1].p()) < 0.02);
        }
    }

    fn tangent_circle(kappa: f64, lp: f64, lq: f64) -> (BivaluedConfig, FnCurve) {
        // circle of curvature κ through (L_p − L_q, 0) at t = 1/2, tangent to e₂
        let x0 = lp - lq;
        let rad = 1.0 / kappa;
        let centre = x0 - rad;
        let speed = 1.0;
        let ang = move |t: f64| speed * (t - 0.5) / rad;
        let curve = FnCurve::new(
            2,
            move |t| v2(centre + rad * ang(t).cos(), rad * ang(t).sin()),
            move |t| v2(-speed * ang(t).sin(), speed * ang(t).cos()),
            Smoothness::CInfinity,
        )
        .with_acceleration(move |t| v2(-speed * speed / rad * ang(t).cos(), -speed * speed / rad * ang(t).sin()));
        let b = curve.eval(0.0);
        let (p, q) = fiber_solve(lp, lq, &b, 1.0).unwrap();
        (BivaluedConfig::new(p, q, lp, lq).unwrap(), curve)
    }

    #[test]
    fn hairer_gate() {
        let (lp, lq) = (2.0, 1.0);
        let required = 1.0 / 9.0;
        let (c, curve) = tangent_circle(required, lp, lq);
        let lift = lift_bivalued(&c, &curve, &LiftOptions::default()).unwrap();
        assert_eq!(lift.crossings.len(), 1);
        assert!((lift.crossings[0].report.required - required).abs() < 1e-15);
        for pair in lift.configs.windows(2) {
            assert!(pair[0].p().chordal_distance(pair[1].p()) < 0.01);
        }
        let (c, curve) = tangent_circle(required + 0.1, lp, lq);
        assert!(matches!(
            lift_bivalued(&c, &curve, &LiftOptions::default()),
            Err(CharmerError::InadmissibleCrossing { .. })
        ));
    }

    #[test]
    fn hairer_orthogonality_is_necessary() {
        let c = BivaluedConfig::new(SpherePoint::basis(2, 0), SpherePoint::from_angle(PI), 2.0, 1.0).unwrap();
        let seg = Segment::new(v2(0.0, 0.0), v2(2.0, 0.0)).unwrap();
        let r = hairer_admissible(&seg, 0.5, &c, 1e-6).unwrap();
        assert!(!r.admissible);
        assert!((r.orthogonality - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hairer_needs_second_derivative() {
        let a: SharedCurve = Arc::new(Segment::new(v2(0.0, -1.0), v2(0.0, 0.0)).unwrap());
        let b: SharedCurve = Arc::new(Segment::new(v2(0.0, 0.0), v2(1.0, 1.0)).unwrap());
        let kink = Composite::new(vec![a, b], &[1.0, 1.0]).unwrap();
        let c = BivaluedConfig::new(SpherePoint::basis(2, 0), SpherePoint::from_angle(PI), 1.0, 1.0).unwrap();
        assert!(matches!(hairer_admissible(&kink, 0.5, &c, 1e-6), Err(CharmerError::NotC2 { .. })));
    }

    #[test]
    fn straight_passage_through_origin() {
        let c = BivaluedConfig::new(SpherePoint::from_angle(2.0), SpherePoint::from_angle(-2.0), 1.0, 1.0).unwrap();
        let start = c.w_endpoint();
        let seg = Segment::new(start.clone(), -start).unwrap();
        let lift = lift_bivalued(&c, &seg, &LiftOptions::default()).unwrap();
        assert_eq!(lift.crossings.len(), 1);
        assert!(lift.crossings[0].report.kappa.abs() < 1e-12);
        for pair in lift.configs.windows(2) {
            assert!(pair[0].p().chordal_distance(pair[1].p()) < 0.01);
        }
    }

    #[test]
    fn orbit_shapes() {
        let orbit = horb_bivalued(&example(), 10, 1);
        assert_eq!(orbit.shape, BivaluedOrbitShape::Sphere(0));
        assert_eq!(orbit.components, 2);
        assert_eq!(orbit.witnesses.len(), 2);
        let conj = &orbit.witnesses[1];
        assert!(conj.p().chordal_distance(&SpherePoint::from_angle(-FRAC_PI_4)) < 1e-12);

        let lined = BivaluedConfig::new(SpherePoint::basis(2, 0), SpherePoint::from_angle(PI), 2.0, 1.0).unwrap();
        assert_eq!(horb_bivalued(&lined, 10, 1).shape, BivaluedOrbitShape::Point);

        let p = SpherePoint::basis(3, 2);
        let centred = BivaluedConfig::new(p.clone(), p.neg(), 1.0, 1.0).unwrap();
        let orbit = horb_bivalued(&centred, 20, 1);
        assert_eq!(orbit.shape, BivaluedOrbitShape::Sphere(2));
        for w in &orbit.witnesses {
            assert!(w.w_endpoint().norm() < 1e-14);
            assert!(w.is_lined(1e-12));
        }

        let generic = BivaluedConfig::new(SpherePoint::basis(3, 0), SpherePoint::basis(3, 1), 1.5, 1.0).unwrap();
        let orbit = horb_bivalued(&generic, 20, 2);
        assert_eq!(orbit.shape, BivaluedOrbitShape::Sphere(1));
        for w in &orbit.witnesses {
            assert!((w.w_endpoint() - generic.w_endpoint()).norm() < 1e-12);
        }
    }

    #[test]
    fn spatial_lift_stays_on_fiber() {
        let c = BivaluedConfig::new(SpherePoint::basis(3, 0), SpherePoint::basis(3, 1), 1.5, 1.0).unwrap();
        let b = c.w_endpoint();
        let curve = CircleArc::loop_through(&b, SpherePoint::from_slice(&[1.0, 1.0, 0.0]).unwrap().into_inner(), SpherePoint::basis(3, 2).into_inner(), 0.2).unwrap();
        let lift = lift_bivalued(&c, &curve, &LiftOptions::default()).unwrap();
        assert_eq!(lift.status, LiftStatus::Complete);
        for (t, w) in lift.times.iter().zip(&lift.configs) {
            assert!((w.w_endpoint() - curve.eval(*t)).norm() < 1e-10);
        }
    }
}
