//! Horizontal lifting: `ġ = χ(M⁻¹(g·z₀) γ̇) g` on the Möbius group.
//!
//! Steps use the fourth-order commutator-free exponential scheme of
//! Celledoni, Marthinsen and Owren. Every stage direction lies in the boost
//! subspace, so each exponential is a closed-form boost.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::{gram_defect_from, Configuration};
use crate::curve::Curve;
use crate::error::{CharmerError, Result};
use crate::mobius::{boost, MobiusElement};
use crate::numerics;
use crate::su11::Su11Element;

#[derive(Debug, Clone, PartialEq)]
pub struct LiftOptions {
    /// Maximal step in curve time.
    pub step: f64,
    pub renorm_cadence: usize,
    /// Stop when the smallest eigenvalue of `M` drops below `sigma_min · L`.
    pub sigma_min: f64,
    pub defect_tolerance: f64,
    /// Require the curve to stay in the ball of radius `L − 2 sed(z₀)`.
    pub enforce_sedentary_ball: bool,
    /// Lift configurations with fewer than three values anyway, stopping if
    /// they become lined.
    pub allow_degenerate: bool,
    /// Push `f(z_t)` back onto `γ(t)` after every step.
    pub snap: bool,
    /// Keep every n-th step in the output (the last one always).
    pub record_every: usize,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            renorm_cadence: numerics::RENORM_CADENCE,
            sigma_min: 1e-6,
            defect_tolerance: 1e-6,
            enforce_sedentary_ball: true,
            allow_degenerate: false,
            snap: false,
            record_every: 1,
        }
    }
}

impl LiftOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step > 0.0
            && self.step <= 1.0
            && self.renorm_cadence > 0
            && self.sigma_min > 0.0
            && self.defect_tolerance > 0.0
            && self.record_every > 0;
        if ok {
            Ok(())
        } else {
            Err(CharmerError::InvalidArgument(
                "lift options: step in (0,1], cadence, sigma_min, tolerance and record_every must be positive"
                    .into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftStatus {
    Complete,
    StoppedNearLined,
    StoppedOutOfBall,
}

#[derive(Debug, Clone)]
pub struct LiftResult {
    pub times: Vec<f64>,
    pub group_path: Vec<MobiusElement>,
    pub config_path: Vec<Configuration>,
    /// `|f(z_t) − γ(t)|` at every recorded time.
    pub defects: Vec<f64>,
    pub status: LiftStatus,
    pub snapped: bool,
    /// Integration steps actually taken.
    pub steps: usize,
}

impl LiftResult {
    pub fn final_config(&self) -> &Configuration {
        self.config_path.last().expect("a lift records its start")
    }

    pub fn final_group(&self) -> &MobiusElement {
        self.group_path.last().expect("a lift records its start")
    }

    pub fn max_defect(&self) -> f64 {
        self.defects.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_complete(&self) -> bool {
        self.status == LiftStatus::Complete
    }
}

/// A lift run in the double cover; `lift` holds the projected path.
#[derive(Debug, Clone)]
pub struct Su11LiftResult {
    pub lift: LiftResult,
    pub cover_path: Vec<Su11Element>,
}

impl Su11LiftResult {
    /// `(v, θ)` chart of every recorded cover element.
    pub fn charts(&self) -> Vec<(DVector<f64>, f64)> {
        self.cover_path.iter().map(Su11Element::cover_chart).collect()
    }
}

/// Group in which the lift ODE is integrated.
pub(crate) trait LiftGroup: Clone {
    /// `exp(h χ(w))`, or its lift.
    fn flow(w: &DVector<f64>, h: f64) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn renormalize(&self) -> Result<Self>;
    fn projection(&self) -> MobiusElement;
}

impl LiftGroup for MobiusElement {
    fn flow(w: &DVector<f64>, h: f64) -> Self {
        boost(w, h)
    }
    fn mul(&self, rhs: &Self) -> Self {
        self.compose(rhs)
    }
    fn renormalize(&self) -> Result<Self> {
        MobiusElement::renormalize(self)
    }
    fn projection(&self) -> MobiusElement {
        self.clone()
    }
}

impl LiftGroup for Su11Element {
    fn flow(w: &DVector<f64>, h: f64) -> Self {
        Su11Element::exp_offdiag(Complex64::new(w[0], w[1]) * (0.5 * h))
    }
    fn mul(&self, rhs: &Self) -> Self {
        self.compose(rhs)
    }
    fn renormalize(&self) -> Result<Self> {
        Su11Element::renormalize(self)
    }
    fn projection(&self) -> MobiusElement {
        self.to_mobius()
    }
}

/// The configuration came too close to a lined one.
struct NearLined;

struct Field<'a> {
    z0: &'a Configuration,
    curve: &'a dyn Curve,
    length: f64,
    sigma_min: f64,
}

impl Field<'_> {
    fn moments(&self, g: &MobiusElement) -> (DVector<f64>, DMatrix<f64>) {
        let (f, gram) = self.z0.moments_under(g);
        (f, gram_defect_from(self.length, &gram).matrix().clone())
    }

    /// `w = M⁻¹(g·z₀) γ̇(t)`.
    fn eval(&self, t: f64, g: &MobiusElement) -> std::result::Result<DVector<f64>, NearLined> {
        let (_, m) = self.moments(g);
        if m.clone().symmetric_eigenvalues().min() < self.sigma_min * self.length {
            return Err(NearLined);
        }
        Ok(m.cholesky().ok_or(NearLined)?.solve(&self.curve.velocity(t)))
    }
}

/// Uniform steps of size at most `h` on each interval between breakpoints.
pub(crate) fn time_grid(curve: &dyn Curve, h: f64) -> Vec<f64> {
    let mut knots: Vec<f64> = curve
        .breakpoints()
        .into_iter()
        .filter(|t| *t > 0.0 && *t < 1.0)
        .collect();
    knots.push(0.0);
    knots.push(1.0);
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut grid = vec![0.0];
    for pair in knots.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let n = ((b - a) / h - 1e-9).ceil().max(1.0) as usize;
        for k in 1..=n {
            grid.push(if k == n { b } else { a + (b - a) * k as f64 / n as f64 });
        }
    }
    grid
}

pub(crate) struct RawLift<G> {
    pub times: Vec<f64>,
    pub path: Vec<G>,
    pub defects: Vec<f64>,
    pub status: LiftStatus,
    pub snapped: bool,
    pub steps: usize,
}

fn check_preconditions(z0: &Configuration, g_start: &MobiusElement, curve: &dyn Curve, opts: &LiftOptions) -> Result<()> {
    opts.validate()?;
    if curve.dim() != z0.dim() {
        return Err(CharmerError::DimensionMismatch { expected: z0.dim(), got: curve.dim() });
    }
    let l = z0.length();
    let start = z0.moments_under(g_start).0;
    let distance = (start - curve.eval(0.0)).norm();
    if distance > opts.defect_tolerance {
        return Err(CharmerError::StartMismatch { distance });
    }
    let distinct = z0.distinct_values(3);
    if distinct < 3 && !opts.allow_degenerate {
        return Err(CharmerError::TooFewValues(distinct));
    }
    if opts.enforce_sedentary_ball {
        let radius = l - 2.0 * z0.sedentariness();
        let mut probes = time_grid(curve, 1e-3);
        probes.extend(curve.breakpoints());
        for t in probes {
            let norm = curve.eval(t).norm();
            if norm >= radius {
                return Err(CharmerError::OutsideAdmissibleBall { radius, t, norm });
            }
        }
    }
    let (_, gram) = z0.moments_under(g_start);
    let sigma = gram_defect_from(l, &gram).eigenvalues().min();
    if sigma < opts.sigma_min * l {
        return Err(CharmerError::Lined { sigma_min: sigma });
    }
    Ok(())
}

/// Integrates from `g_start` along the whole of `curve`.
pub(crate) fn integrate<G: LiftGroup>(
    z0: &Configuration,
    g_start: G,
    curve: &dyn Curve,
    opts: &LiftOptions,
) -> Result<RawLift<G>> {
    check_preconditions(z0, &g_start.projection(), curve, opts)?;
    let field = Field {
        z0,
        curve,
        length: z0.length(),
        sigma_min: opts.sigma_min,
    };
    let ball_edge = field.length * (1.0 - 1e-9);
    let grid = time_grid(curve, opts.step);
    let defect_at = |t: f64, g: &G| (field.moments(&g.projection()).0 - curve.eval(t)).norm();

    let mut raw = RawLift {
        times: vec![0.0],
        path: vec![g_start.clone()],
        defects: vec![defect_at(0.0, &g_start)],
        status: LiftStatus::Complete,
        snapped: false,
        steps: 0,
    };
    let mut y = g_start;
    let n_steps = grid.len() - 1;
    for n in 0..n_steps {
        let (t0, t1) = (grid[n], grid[n + 1]);
        let h = t1 - t0;
        if curve.eval(t1).norm() >= ball_edge {
            raw.status = LiftStatus::StoppedOutOfBall;
            break;
        }
        match cf4_step(&field, &y, t0, h) {
            Ok(next) => y = next,
            Err(NearLined) => {
                raw.status = LiftStatus::StoppedNearLined;
                break;
            }
        }
        raw.steps += 1;
        if opts.snap {
            y = snap_onto(&field, y, curve.eval(t1));
            raw.snapped = true;
        }
        if raw.steps % opts.renorm_cadence == 0 {
            y = y.renormalize().map_err(|e| CharmerError::LiftStopped {
                t: t1,
                reason: format!("group drift: {e}"),
            })?;
        }
        if raw.steps % opts.record_every == 0 || n + 1 == n_steps {
            raw.times.push(t1);
            raw.defects.push(defect_at(t1, &y));
            raw.path.push(y.clone());
        }
    }
    if raw.status != LiftStatus::Complete && raw.times.last() != Some(&grid[raw.steps]) {
        let t = grid[raw.steps];
        raw.times.push(t);
        raw.defects.push(defect_at(t, &y));
        raw.path.push(y);
    }
    Ok(raw)
}

fn cf4_step<G: LiftGroup>(field: &Field<'_>, y: &G, t0: f64, h: f64) -> std::result::Result<G, NearLined> {
    let half = t0 + 0.5 * h;
    let w1 = field.eval(t0, &y.projection())?;
    let y2 = G::flow(&w1, 0.5 * h).mul(y);
    let w2 = field.eval(half, &y2.projection())?;
    let y3 = G::flow(&w2, 0.5 * h).mul(y);
    let w3 = field.eval(half, &y3.projection())?;
    let y4 = G::flow(&(&w3 - &w1 * 0.5), h).mul(&y2);
    let w4 = field.eval(t0 + h, &y4.projection())?;
    let a = (&w1 * 3.0 + &w2 * 2.0 + &w3 * 2.0 - &w4) / 12.0;
    let b = (-&w1 + &w2 * 2.0 + &w3 * 2.0 + &w4 * 3.0) / 12.0;
    Ok(G::flow(&b, h).mul(&G::flow(&a, h).mul(y)))
}

/// Two Newton corrections by boosts so that `f(g·z₀)` lands on `target`.
fn snap_onto<G: LiftGroup>(field: &Field<'_>, mut y: G, target: DVector<f64>) -> G {
    for _ in 0..2 {
        let (f, m) = field.moments(&y.projection());
        let r = &target - f;
        if r.norm() < 1e-15 * field.length {
            break;
        }
        match m.cholesky() {
            Some(ch) => y = G::flow(&ch.solve(&r), 1.0).mul(&y),
            None => break,
        }
    }
    y
}

fn assemble(z0: &Configuration, raw: RawLift<MobiusElement>) -> LiftResult {
    let config_path = raw.path.iter().map(|g| z0.act(g)).collect();
    LiftResult {
        times: raw.times,
        group_path: raw.path,
        config_path,
        defects: raw.defects,
        status: raw.status,
        snapped: raw.snapped,
        steps: raw.steps,
    }
}

/// Horizontal lift of `curve` through `z₀`, starting at the identity.
pub fn horizontal_lift(z0: &Configuration, curve: &dyn Curve, opts: &LiftOptions) -> Result<LiftResult> {
    continue_lift(z0, &MobiusElement::identity(z0.dim()), curve, opts)
}

/// Lift of `curve` through `g_start·z₀`; the group path starts at `g_start`.
pub fn continue_lift(
    z0: &Configuration,
    g_start: &MobiusElement,
    curve: &dyn Curve,
    opts: &LiftOptions,
) -> Result<LiftResult> {
    let raw = integrate(z0, g_start.clone(), curve, opts)?;
    Ok(assemble(z0, raw))
}

/// Planar lift integrated in `SU(1,1)`.
pub fn lift_su11(z0: &Configuration, curve: &dyn Curve, opts: &LiftOptions) -> Result<Su11LiftResult> {
    continue_lift_su11(z0, &Su11Element::identity(), curve, opts)
}

pub fn continue_lift_su11(
    z0: &Configuration,
    g_start: &Su11Element,
    curve: &dyn Curve,
    opts: &LiftOptions,
) -> Result<Su11LiftResult> {
    if z0.dim() != 2 {
        return Err(CharmerError::DimensionMismatch { expected: 2, got: z0.dim() });
    }
    let raw = integrate(z0, *g_start, curve, opts)?;
    let projected = RawLift {
        path: raw.path.iter().map(Su11Element::to_mobius).collect(),
        times: raw.times,
        defects: raw.defects,
        status: raw.status,
        snapped: raw.snapped,
        steps: raw.steps,
    };
    Ok(Su11LiftResult {
        lift: assemble(z0, projected),
        cover_path: raw.path,
    })
}

fn require_closed(curve: &dyn Curve, tol: f64) -> Result<()> {
    let gap = (curve.eval(1.0) - curve.eval(0.0)).norm();
    if gap > tol {
        return Err(CharmerError::NotClosed { gap });
    }
    Ok(())
}

fn require_complete(lift: &LiftResult) -> Result<()> {
    match lift.status {
        LiftStatus::Complete => Ok(()),
        status => Err(CharmerError::LiftStopped {
            t: *lift.times.last().unwrap_or(&0.0),
            reason: format!("{status:?}"),
        }),
    }
}

/// `z₁` for a closed loop. Two-valued configurations go through the
/// bivalued model, where the group ODE does not apply.
pub fn holonomy(z0: &Configuration, curve: &dyn Curve, opts: &LiftOptions) -> Result<Configuration> {
    require_closed(curve, opts.defect_tolerance)?;
    if z0.is_piecewise_constant() && z0.distinct_values(3) == 2 {
        let c0 = crate::bivalued::BivaluedConfig::from_configuration(z0)?;
        let lift = crate::bivalued::lift_bivalued(&c0, curve, opts)?;
        return Ok(lift.final_config().to_configuration());
    }
    let lift = horizontal_lift(z0, curve, &LiftOptions { record_every: usize::MAX, ..opts.clone() })?;
    require_complete(&lift)?;
    Ok(lift.final_config().clone())
}

/// Group element after each of `turns` repetitions of a closed loop.
pub fn iterate_holonomy(
    z0: &Configuration,
    curve: &dyn Curve,
    turns: usize,
    opts: &LiftOptions,
) -> Result<Vec<MobiusElement>> {
    iterate(z0, MobiusElement::identity(z0.dim()), curve, turns, opts)
}

/// As [`iterate_holonomy`], in the double cover.
pub fn iterate_holonomy_su11(
    z0: &Configuration,
    curve: &dyn Curve,
    turns: usize,
    opts: &LiftOptions,
) -> Result<Vec<Su11Element>> {
    if z0.dim() != 2 {
        return Err(CharmerError::DimensionMismatch { expected: 2, got: z0.dim() });
    }
    iterate(z0, Su11Element::identity(), curve, turns, opts)
}

fn iterate<G: LiftGroup>(
    z0: &Configuration,
    start: G,
    curve: &dyn Curve,
    turns: usize,
    opts: &LiftOptions,
) -> Result<Vec<G>> {
    require_closed(curve, opts.defect_tolerance)?;
    let opts = LiftOptions {
        record_every: usize::MAX,
        ..opts.clone()
    };
    let mut out = Vec::with_capacity(turns + 1);
    out.push(start);
    for turn in 0..turns {
        let raw = integrate(z0, out[turn].clone(), curve, &opts)?;
        if raw.status != LiftStatus::Complete {
            return Err(CharmerError::LiftStopped {
                t: turn as f64 + raw.times.last().copied().unwrap_or(0.0),
                reason: format!("{:?}", raw.status),
            });
        }
        out.push(raw.path.last().unwrap().clone());
    }
    Ok(out)
}

/// Transport along the straight segment from `f(z)` to `target`.
pub fn parallel_transport_to(z: &Configuration, target: &DVector<f64>, opts: &LiftOptions) -> Result<Configuration> {
    let start = z.endpoint();
    if target.len() != start.len() {
        return Err(CharmerError::DimensionMismatch { expected: start.len(), got: target.len() });
    }
    if (target - &start).norm() == 0.0 {
        return Ok(z.clone());
    }
    let radius = z.length() - 2.0 * z.sedentariness();
    // the ball is convex, so the ends decide
    for (t, p) in [(0.0, &start), (1.0, target)] {
        if p.norm() >= radius {
            return Err(CharmerError::OutsideAdmissibleBall { radius, t, norm: p.norm() });
        }
    }
    let segment = crate::curve::Segment::new(start, target.clone())?;
    let lift = horizontal_lift(z, &segment, &LiftOptions { record_every: usize::MAX, ..opts.clone() })?;
    require_complete(&lift)?;
    Ok(lift.final_config().clone())
}

/// Largest relative residual of fitting the finite-difference velocity of a
/// lift by a horizontal field `s ↦ u − ⟨z_t(s), u⟩ z_t(s)`.
pub fn check_horizontal(lift: &LiftResult) -> Result<f64> {
    let n = lift.config_path.len();
    if n < 3 {
        return Err(CharmerError::InvalidArgument("need at least 3 samples".into()));
    }
    let d = lift.config_path[0].dim();
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        let (h1, h2) = (lift.times[i] - lift.times[i - 1], lift.times[i + 1] - lift.times[i]);
        let c = [-h2 * h2 / (h1 * h2 * (h1 + h2)), h1 * h1 / (h1 * h2 * (h1 + h2))];
        let entries: Vec<(f64, DVector<f64>, DVector<f64>)> = lift.config_path[i - 1]
            .weighted_values()
            .zip(lift.config_path[i].weighted_values())
            .zip(lift.config_path[i + 1].weighted_values())
            .map(|(((w, a), (_, b)), (_, e))| {
                // weights sum to zero, so difference against the centre value
                let vel = (a.coords() - b.coords()) * c[0] + (e.coords() - b.coords()) * c[1];
                (w, b.coords().clone(), vel)
            })
            .collect();
        // normal equations: (∫ P_z) u = ∫ P_z ż
        let mut lhs = DMatrix::zeros(d, d);
        let mut rhs = DVector::zeros(d);
        let mut total = 0.0;
        for (w, z, vel) in &entries {
            lhs += (DMatrix::identity(d, d) - z * z.transpose()) * *w;
            rhs += (vel - z * z.dot(vel)) * *w;
            total += w * vel.norm_squared();
        }
        if total < 1e-30 {
            continue;
        }
        let u = lhs.clone().pseudo_inverse(1e-12).map_err(|e| CharmerError::InvalidArgument(e.into()))? * rhs;
        let mut resid = 0.0;
        for (w, z, vel) in &entries {
            let fit = &u - z * z.dot(&u);
            resid += w * (vel - fit).norm_squared();
        }
        worst = worst.max((resid / total).sqrt());
    }
    Ok(worst)
}

/// Largest entry of `J − M(g·z₀)`, where column `j` of `J` is the central
/// difference of `ε ↦ f(exp(ε χ(e_j)) g·z₀)`.
pub fn linmap_matrix_check(z0: &Configuration, g: &MobiusElement) -> Result<f64> {
    let d = z0.dim();
    let l = z0.length();
    let (_, gram) = z0.moments_under(g);
    let m = gram_defect_from(l, &gram);
    if m.smallest_singular_value() <= numerics::LINED_TOL * l {
        return Err(CharmerError::Lined { sigma_min: m.smallest_singular_value() });
    }
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for j in 0..d {
        let mut e = DVector::zeros(d);
        e[j] = 1.0;
        let plus = z0.moments_under(&boost(&e, eps).compose(g)).0;
        let minus = z0.moments_under(&boost(&e, -eps).compose(g)).0;
        let col = (plus - minus) / (2.0 * eps);
        for i in 0..d {
            worst = worst.max((col[i] - m.matrix()[(i, j)]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{CircleArc, ConstantCurve, Reparameterized, Segment, SharedCurve};
    use crate::sphere::SpherePoint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn figure_circle() -> CircleArc {
        CircleArc::planar_loop([2.1875, 0.0], [2.0, 0.0], 1.0).unwrap()
    }

    fn polygon(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Configuration {
        let values = (0..n)
            .map(|_| SpherePoint::new(DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0))).unwrap())
            .collect();
        let lengths: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        Configuration::polygonal(&lengths, values).unwrap()
    }

    #[test]
    fn constant_curve_leaves_everything_fixed() {
        let z0 = Configuration::half_circle();
        let lift = horizontal_lift(&z0, &ConstantCurve::new(z0.endpoint()), &LiftOptions::default()).unwrap();
        assert!(lift.is_complete());
        for g in &lift.group_path {
            assert_eq!(g.distance(&MobiusElement::identity(2)), 0.0);
        }
        assert_eq!(check_horizontal(&lift).unwrap(), 0.0);
    }

    #[test]
    fn time_grid_hits_breakpoints() {
        let a: SharedCurve = Arc::new(Segment::new(DVector::from_vec(vec![0.0, 0.0]), DVector::from_vec(vec![1.0, 0.0])).unwrap());
        let b: SharedCurve = Arc::new(Segment::new(DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![1.0, 1.0])).unwrap());
        let c = crate::curve::Composite::new(vec![a, b], &[1.0, 2.0]).unwrap();
        let grid = time_grid(&c, 0.1);
        assert!(grid.iter().any(|t| *t == 1.0 / 3.0));
        assert_eq!(*grid.last().unwrap(), 1.0);
        assert!(grid.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.1 + 1e-15));
    }

    #[test]
    fn figure_turn_tracks_the_curve_and_moves_the_snake() {
        let z0 = Configuration::half_circle();
        let lift = horizontal_lift(&z0, &figure_circle(), &LiftOptions::default()).unwrap();
        assert!(lift.is_complete());
        assert!(lift.max_defect() < 1e-6, "defect {}", lift.max_defect());
        let moved = lift.final_config().sup_distance(&z0).unwrap();
        assert!(moved > 10.0 * 1e-6, "moved {moved}");
        // sedentariness and spherical dimension are holonomy invariants
        assert_eq!(lift.final_config().spherical_dimension(1e-8), 1);
    }

    #[test]
    fn runs_are_bitwise_reproducible() {
        let z0 = Configuration::half_circle();
        let opts = LiftOptions { step: 1e-2, ..Default::default() };
        let a = horizontal_lift(&z0, &figure_circle(), &opts).unwrap();
        let b = horizontal_lift(&z0, &figure_circle(), &opts).unwrap();
        assert_eq!(a.final_group().matrix(), b.final_group().matrix());
    }

    #[test]
    fn cover_lift_projects_onto_lorentz_lift() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z0 = Configuration::half_circle();
        for _ in 0..10 {
            let dir = rng.gen_range(0.0..std::f64::consts::TAU);
            let len = rng.gen_range(0.05..0.4);
            let end = z0.endpoint() + DVector::from_vec(vec![dir.cos(), dir.sin()]) * len;
            let seg = Segment::new(z0.endpoint(), end).unwrap();
            let opts = LiftOptions { step: 1e-2, ..Default::default() };
            let a = horizontal_lift(&z0, &seg, &opts).unwrap();
            let b = lift_su11(&z0, &seg, &opts).unwrap();
            let dist = a.final_config().sup_distance(b.lift.final_config()).unwrap();
            assert!(dist < 1e-8, "{dist}");
        }
    }

    #[test]
    fn rejects_bad_starts() {
        let z0 = Configuration::half_circle();
        let off = ConstantCurve::new(DVector::from_vec(vec![1.0, 0.0]));
        assert!(matches!(
            horizontal_lift(&z0, &off, &LiftOptions::default()),
            Err(CharmerError::StartMismatch { .. })
        ));
        let out = Segment::new(z0.endpoint(), DVector::from_vec(vec![4.0, 0.0])).unwrap();
        assert!(matches!(
            horizontal_lift(&z0, &out, &LiftOptions::default()),
            Err(CharmerError::OutsideAdmissibleBall { .. })
        ));
        let two = Configuration::polygonal(
            &[1.0, 1.0],
            vec![SpherePoint::basis(2, 0), SpherePoint::basis(2, 1)],
        )
        .unwrap();
        let still = ConstantCurve::new(two.endpoint());
        assert!(matches!(
            horizontal_lift(&two, &still, &LiftOptions::default()),
            Err(CharmerError::TooFewValues(2))
        ));
    }

    #[test]
    fn stops_when_the_curve_leaves_the_ball() {
        let z0 = Configuration::half_circle();
        let out = Segment::new(z0.endpoint(), DVector::from_vec(vec![4.0, 0.0])).unwrap();
        let opts = LiftOptions {
            enforce_sedentary_ball: false,
            step: 1e-2,
            ..Default::default()
        };
        let lift = horizontal_lift(&z0, &out, &opts).unwrap();
        assert_ne!(lift.status, LiftStatus::Complete);
        assert!(lift.times.last().unwrap() < &1.0);
    }

    #[test]
    fn reparameterized_curve_gives_reparameterized_lift() {
        let z0 = Configuration::half_circle();
        let base: SharedCurve = Arc::new(figure_circle());
        let opts = LiftOptions { step: 2e-3, ..Default::default() };
        let plain = horizontal_lift(&z0, base.as_ref(), &opts).unwrap();
        let squared = horizontal_lift(&z0, &Reparameterized::squared(base), &opts).unwrap();
        for (u, z) in squared.times.iter().zip(&squared.config_path).step_by(50) {
            let t = u * u;
            let i = plain.times.iter().position(|s| (s - t).abs() < 1e-12);
            if let Some(i) = i {
                assert!(z.sup_distance(&plain.config_path[i]).unwrap() < 1e-6);
            }
        }
        let last = squared.final_config().sup_distance(plain.final_config()).unwrap();
        assert!(last < 1e-6, "{last}");
    }

    #[test]
    fn horizontality_detector() {
        let z0 = Configuration::half_circle();
        let lift = horizontal_lift(&z0, &figure_circle(), &LiftOptions::default()).unwrap();
        let r = check_horizontal(&lift).unwrap();
        assert!(r < 1e-4, "{r}");
        // a fast rigid rotation of every z_t is far from horizontal
        let mut bent = lift.clone();
        for (t, z) in bent.times.iter().zip(bent.config_path.iter_mut()) {
            *z = z.act(&MobiusElement::planar_rotation(5.0 * t));
        }
        assert!(check_horizontal(&bent).unwrap() > 0.1);
    }

    #[test]
    fn vertical_directions_add_energy() {
        let z0 = Configuration::half_circle();
        let m = z0.gram_defect();
        let u = m.solve(&DVector::from_vec(vec![0.3, -0.7])).unwrap();
        let horizontal = |x: &DVector<f64>, u: &DVector<f64>| u - x * x.dot(u);
        // tangent field a(s) Jz(s) minus its L² projection onto the horizontal fields
        let raw = |x: &DVector<f64>| DVector::from_vec(vec![-x[1], x[0]]) * (3.0 * x[0]).cos();
        let mut rhs = DVector::zeros(2);
        for (w, z) in z0.weighted_values() {
            let x = z.coords();
            rhs += horizontal(x, &raw(x)) * w;
        }
        let c = m.solve(&rhs).unwrap();
        let (mut base, mut perturbed, mut cross) = (0.0, 0.0, 0.0);
        for (w, z) in z0.weighted_values() {
            let x = z.coords();
            let zdot = horizontal(x, &u);
            let vert = raw(x) - horizontal(x, &c);
            base += w * zdot.norm_squared();
            perturbed += w * (&zdot + &vert).norm_squared();
            cross += w * zdot.dot(&vert);
        }
        assert!(cross.abs() < 1e-12);
        assert!(perturbed > base + 1e-3);
    }

    #[test]
    fn linmap_matches_gram_defect() {
        let z0 = Configuration::half_circle();
        let err = linmap_matrix_check(&z0, &MobiusElement::identity(2)).unwrap();
        assert!(err < 1e-6, "{err}");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2, 3] {
            for _ in 0..5 {
                let z = polygon(&mut rng, d, 5);
                let v = DVector::from_fn(d, |_, _| rng.gen_range(-0.7..0.7));
                let g = boost(&v, 1.0);
                assert!(linmap_matrix_check(&z, &g).unwrap() < 1e-5);
            }
        }
        let lined = Configuration::constant(2.0, SpherePoint::basis(2, 0)).unwrap();
        assert!(linmap_matrix_check(&lined, &MobiusElement::identity(2)).is_err());
    }

    #[test]
    fn transport_round_trip() {
        let z0 = Configuration::half_circle();
        let opts = LiftOptions::default();
        let origin = DVector::zeros(2);
        let z = parallel_transport_to(&z0, &origin, &opts).unwrap();
        assert!(z.endpoint().norm() < 1e-6);
        let back = parallel_transport_to(&z, &z0.endpoint(), &opts).unwrap();
        assert!(back.sup_distance(&z0).unwrap() < 2e-6);
        assert!(parallel_transport_to(&z0, &z0.endpoint(), &opts).unwrap().sup_distance(&z0).unwrap() == 0.0);
    }

    #[test]
    fn constant_loop_has_trivial_holonomy() {
        let z0 = Configuration::half_circle();
        let z1 = holonomy(&z0, &ConstantCurve::new(z0.endpoint()), &LiftOptions::default()).unwrap();
        assert_eq!(z1.sup_distance(&z0).unwrap(), 0.0);
    }
}
