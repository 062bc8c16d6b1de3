//! Holonomy orbits: sampling, tangent rank, rotation fits at `f = 0`, and
//! connectivity witnesses for nomadic configurations.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Configuration;
use crate::curve::{CircleArc, SharedCurve, Shrunk};
use crate::error::{CharmerError, Result};
use crate::mobius::MobiusElement;
use crate::numerics;
use crate::solver::{holonomy, LiftOptions};
use crate::word::{Letter, Profile, WordCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Components modelled on `SO(d)/SO(d−k−1)`.
    Stiefel,
    /// Planar case: a disjoint union of circles.
    Circles,
    /// Two-valued configuration; see [`crate::bivalued::horb_bivalued`].
    Bivalued,
    Point,
}

/// Connection of an orbit point to the base. Absence of a witness is never
/// read as disconnection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connection {
    Connected,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct OrbitReport {
    pub base: Configuration,
    /// Orbit points, the base first.
    pub points: Vec<Configuration>,
    /// `(loop index, error)` for loops whose lift failed.
    pub failures: Vec<(usize, String)>,
    pub estimated_rank: Option<usize>,
    pub expected_dim: usize,
    pub spdim: usize,
    /// One entry per point.
    pub connections: Vec<Connection>,
    pub classification: Classification,
}

impl OrbitReport {
    /// Largest `|f(z) − f(z₀)|` over the points.
    pub fn fiber_defect(&self) -> f64 {
        let b = self.base.endpoint();
        self.points.iter().map(|z| (z.endpoint() - &b).norm()).fold(0.0, f64::max)
    }
}

/// `Σ_{i=1}^{k+1} (d − i)`.
pub fn expected_dimension(d: usize, k: usize) -> usize {
    (1..=k + 1).map(|i| d.saturating_sub(i)).sum()
}

pub fn classify(z0: &Configuration) -> Classification {
    match z0.distinct_values(3) {
        1 => Classification::Point,
        2 => Classification::Bivalued,
        _ if z0.dim() == 2 => Classification::Circles,
        _ => Classification::Stiefel,
    }
}

fn report(z0: &Configuration, points: Vec<Configuration>, connections: Vec<Connection>, failures: Vec<(usize, String)>) -> OrbitReport {
    let spdim = z0.spherical_dimension(numerics::LINED_TOL);
    OrbitReport {
        base: z0.clone(),
        points,
        failures,
        estimated_rank: None,
        expected_dim: expected_dimension(z0.dim(), spdim),
        spdim,
        connections,
        classification: classify(z0),
    }
}

/// Holonomies of `loops` (in parallel); failed lifts are recorded, not fatal.
pub fn orbit_sample(z0: &Configuration, loops: &[SharedCurve], opts: &LiftOptions) -> OrbitReport {
    let results: Vec<Result<Configuration>> = loops.par_iter().map(|c| holonomy(z0, c.as_ref(), opts)).collect();
    let mut points = vec![z0.clone()];
    let mut connections = vec![Connection::Connected];
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(z) => {
                points.push(z);
                connections.push(Connection::Unknown);
            }
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    report(z0, points, connections, failures)
}

/// Uniformly random rotation (QR of a Gaussian matrix, sign-fixed, det +1).
pub fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let qr = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal)).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    if q.determinant() < 0.0 {
        let col = -q.column(0);
        q.set_column(0, &col);
    }
    q
}

/// At `f(z₀) = 0` the orbit is `SO(d)·z₀`; samples `n` random rotations of it.
pub fn rotation_orbit_sample(z0: &Configuration, n: usize, seed: u64) -> Result<OrbitReport> {
    require_origin(z0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![z0.clone()];
    for _ in 0..n {
        let r = random_rotation(z0.dim(), &mut rng);
        points.push(z0.act(&MobiusElement::rotation(&r)?));
    }
    // SO(d) is connected, so every rotation image is joined to z₀ in the fiber
    let connections = vec![Connection::Connected; points.len()];
    Ok(report(z0, points, connections, Vec::new()))
}

fn require_origin(z: &Configuration) -> Result<()> {
    let norm = z.endpoint().norm();
    if norm > 1e-6 * z.length() {
        return Err(CharmerError::NotAtOrigin { norm });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RankEstimate {
    pub rank: usize,
    /// Singular values of the displacement matrix, decreasing.
    pub singular_values: Vec<f64>,
}

/// Grid used to embed configurations for displacement vectors.
pub const RANK_GRID: usize = 64;

/// Ratio between consecutive singular values that separates the rank.
pub const RANK_GAP: f64 = 100.0;

/// Numerical dimension of the orbit at `z₀` from `n_probes` holonomies of
/// circles of radius `eps` in random 2-planes through `f(z₀)`.
pub fn orbit_tangent_rank(z0: &Configuration, eps: f64, n_probes: usize, seed: u64, opts: &LiftOptions) -> Result<RankEstimate> {
    if z0.spherical_dimension(numerics::LINED_TOL) == 0 {
        return Err(CharmerError::ZeroSphericalDimension);
    }
    let d = z0.dim();
    let b = z0.endpoint();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loops: Vec<SharedCurve> = (0..n_probes)
        .map(|_| {
            let r = random_rotation(d, &mut rng);
            let curve = CircleArc::loop_through(&b, r.column(0).into_owned(), r.column(1).into_owned(), eps)?;
            Ok(Arc::new(curve) as SharedCurve)
        })
        .collect::<Result<_>>()?;
    let base = z0.grid_embedding(RANK_GRID);
    let rows: Vec<DVector<f64>> = loops
        .par_iter()
        .map(|c| holonomy(z0, c.as_ref(), opts).map(|z1| z1.grid_embedding(RANK_GRID) - &base))
        .collect::<Result<_>>()?;
    let m = DMatrix::from_fn(rows.len(), base.len(), |i, j| rows[i][j]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let rank = numerical_rank(&sv);
    Ok(RankEstimate { rank, singular_values: sv })
}

/// Position of the first gap larger than [`RANK_GAP`]; all values count when
/// there is none.
pub fn numerical_rank(sv: &[f64]) -> usize {
    if sv.first().is_none_or(|s| *s == 0.0) {
        return 0;
    }
    for k in 1..sv.len() {
        if sv[k] == 0.0 || sv[k - 1] / sv[k] > RANK_GAP {
            return k;
        }
    }
    sv.len()
}

/// Best rotation `R` with `R·z₀ ≈ z` over matched values (orthogonal
/// Procrustes), and the largest pointwise mismatch.
pub fn procrustes(z: &Configuration, z0: &Configuration) -> Result<(DMatrix<f64>, f64)> {
    if z.dim() != z0.dim() {
        return Err(CharmerError::DimensionMismatch { expected: z0.dim(), got: z.dim() });
    }
    if !z.partition().approx_eq(z0.partition()) {
        return Err(CharmerError::PartitionMismatch);
    }
    let d = z.dim();
    let pairs: Vec<(f64, DVector<f64>, DVector<f64>)> = z0
        .weighted_values()
        .zip(z.weighted_values())
        .map(|((w, x), (_, y))| (w, x.coords().clone(), y.coords().clone()))
        .collect();
    let mut cross = DMatrix::zeros(d, d);
    for (w, x, y) in &pairs {
        cross += y * x.transpose() * *w;
    }
    let svd = cross.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut fix = DMatrix::identity(d, d);
    if (&u * &vt).determinant() < 0.0 {
        fix[(d - 1, d - 1)] = -1.0;
    }
    let r = u * fix * vt;
    let residual = pairs.iter().map(|(_, x, y)| (&r * x - y).norm()).fold(0.0, f64::max);
    Ok((r, residual))
}

/// Orthonormal basis of the span of the values of `z₀` (at `f = 0` this span
/// cuts out the smallest sub-sphere containing them).
pub fn reference_frame(z0: &Configuration) -> Result<DMatrix<f64>> {
    require_origin(z0)?;
    let k = z0.spherical_dimension(numerics::LINED_TOL);
    let d = z0.dim();
    let mut scatter = DMatrix::zeros(d, d);
    for (w, x) in z0.weighted_values() {
        scatter += x.coords() * x.coords().transpose() * w;
    }
    let eig = scatter.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].partial_cmp(&eig.eigenvalues[*a]).unwrap());
    let mut frame = DMatrix::zeros(d, k + 1);
    for (j, i) in order.iter().take(k + 1).enumerate() {
        frame.set_column(j, &eig.eigenvectors.column(*i));
    }
    Ok(frame)
}

/// Image under the fitted rotation of the reference frame of `z₀`.
pub fn stiefel_frame(z: &Configuration, z0: &Configuration) -> Result<DMatrix<f64>> {
    require_origin(z)?;
    let frame = reference_frame(z0)?;
    let (r, residual) = procrustes(z, z0)?;
    if residual > 1e-6 {
        return Err(CharmerError::NoRotationFit { residual });
    }
    Ok(r * frame)
}

/// The configuration a frame determines: `R·z₀` for any rotation `R` taking
/// the reference frame to `frame`.
pub fn config_from_frame(z0: &Configuration, frame: &DMatrix<f64>) -> Result<Configuration> {
    let reference = reference_frame(z0)?;
    let d = z0.dim();
    if frame.shape() != reference.shape() {
        return Err(CharmerError::DimensionMismatch { expected: reference.ncols(), got: frame.ncols() });
    }
    let orth = (frame.transpose() * frame - DMatrix::identity(frame.ncols(), frame.ncols())).amax();
    if orth > 1e-9 {
        return Err(CharmerError::NotOrthogonal { residual: orth });
    }
    let complete = |f: &DMatrix<f64>| {
        // Gram–Schmidt against the standard basis
        let mut cols: Vec<DVector<f64>> = f.column_iter().map(|c| c.into_owned()).collect();
        for i in 0..d {
            if cols.len() == d {
                break;
            }
            let mut e = DVector::zeros(d);
            e[i] = 1.0;
            for c in &cols {
                e -= c * c.dot(&e);
            }
            if e.norm() > 1e-6 {
                cols.push(e.normalize());
            }
        }
        DMatrix::from_columns(&cols)
    };
    let (a, mut b) = (complete(&reference), complete(frame));
    if (b.determinant() * a.determinant()) < 0.0 {
        let col = -b.column(d - 1);
        b.set_column(d - 1, &col);
    }
    let r = b * a.transpose();
    Ok(z0.act(&MobiusElement::rotation(&r)?))
}

#[derive(Debug, Clone)]
pub struct WitnessPath {
    /// Shrinking parameters, from 1 (the point) down to 0 (the base).
    pub s: Vec<f64>,
    pub points: Vec<Configuration>,
    /// Largest sup-distance between consecutive points.
    pub max_gap: f64,
}

/// Grid size of the first pass of [`connectivity_probe`].
pub const PROBE_GRID: usize = 32;

/// Gap below which consecutive witness points count as joined.
pub const PROBE_GAP: f64 = 0.2;

/// Joins `z = γ̃(1)` to `z₀` inside the orbit by lifting the shrinking loops
/// `γ_s(t) = (1 − s)γ(0) + sγ(t)` of the word curve `γ`.
pub fn connectivity_probe(z0: &Configuration, z: &Configuration, word: &[Letter], opts: &LiftOptions) -> Result<WitnessPath> {
    let sed = z0.sedentariness();
    if sed > 0.0 {
        return Err(CharmerError::NotNomadic { sed });
    }
    if word.is_empty() {
        let dist = z.sup_distance(z0)?;
        if dist > opts.defect_tolerance {
            return Err(CharmerError::InvalidArgument(format!(
                "an empty word only reaches the base (distance {dist:.3e})"
            )));
        }
        return Ok(WitnessPath {
            s: vec![1.0, 0.0],
            points: vec![z0.clone(), z0.clone()],
            max_gap: 0.0,
        });
    }
    let curve: SharedCurve = Arc::new(WordCurve::new(z0.clone(), word.to_vec(), Profile::Smooth)?);
    let gap = (curve.eval(1.0) - curve.eval(0.0)).norm();
    if gap > opts.defect_tolerance {
        return Err(CharmerError::NotClosed { gap });
    }
    let lift_at = |s: f64| -> Result<Configuration> {
        if s == 0.0 {
            return Ok(z0.clone());
        }
        holonomy(z0, &Shrunk::new(curve.clone(), s), opts).map_err(|e| CharmerError::ProbeFailed { s, reason: e.to_string() })
    };
    let grid: Vec<f64> = (0..=PROBE_GRID).map(|i| 1.0 - i as f64 / PROBE_GRID as f64).collect();
    let first: Vec<Result<Configuration>> = grid.par_iter().map(|s| lift_at(*s)).collect();
    let mut s = grid;
    let mut points = first.into_iter().collect::<Result<Vec<_>>>()?;
    let dist = points[0].sup_distance(z)?;
    if dist > 1e-6 {
        return Err(CharmerError::InvalidArgument(format!(
            "the word's holonomy misses the given point by {dist:.3e}"
        )));
    }
    // bisect any gap that is still too wide
    let mut i = 0;
    while i + 1 < points.len() {
        let gap = points[i].sup_distance(&points[i + 1])?;
        if gap > PROBE_GAP && s[i] - s[i + 1] > 1e-6 {
            let mid = 0.5 * (s[i] + s[i + 1]);
            let p = lift_at(mid)?;
            s.insert(i + 1, mid);
            points.insert(i + 1, p);
        } else {
            i += 1;
        }
    }
    let max_gap = points
        .windows(2)
        .map(|w| w[0].sup_distance(&w[1]).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    if max_gap > PROBE_GAP {
        return Err(CharmerError::ProbeFailed {
            s: 0.0,
            reason: format!("witness path has a jump of {max_gap:.3e}"),
        });
    }
    Ok(WitnessPath { s, points, max_gap })
}
