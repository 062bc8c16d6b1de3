//! Configurations `z: [0,L] → S^{d-1}`, their snakes and the endpoint map.
//!
//! A configuration is piecewise continuous for a partition of `[0,L]`. Each
//! piece is either a constant unit vector (polygonal snakes) or a smooth piece
//! stored by its values at the nodes of a composite Gauss-Legendre rule. All
//! integrals (`f(z)`, the Gram matrix) are exact on constant pieces and use that
//! rule on sampled ones.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{CharmerError, Result};
use crate::mobius::MobiusElement;
use crate::numerics;
use crate::quadrature::{self, lagrange_weights};
use crate::sphere::SpherePoint;
use crate::su11::Su11Element;

/// `0 = s_0 < s_1 < … < s_N = L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    breakpoints: Vec<f64>,
}

impl Partition {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(CharmerError::InvalidPartition("need at least two breakpoints".into()));
        }
        if breakpoints[0] != 0.0 {
            return Err(CharmerError::InvalidPartition("first breakpoint must be 0".into()));
        }
        if !breakpoints.iter().all(|b| b.is_finite()) {
            return Err(CharmerError::InvalidPartition("non-finite breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CharmerError::InvalidPartition("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breakpoints })
    }

    /// Partition whose pieces have the given lengths.
    pub fn from_lengths(lengths: &[f64]) -> Result<Self> {
        let mut b = Vec::with_capacity(lengths.len() + 1);
        b.push(0.0);
        let mut acc = 0.0;
        for l in lengths {
            acc += l;
            b.push(acc);
        }
        Self::new(b)
    }

    pub fn uniform(length: f64, pieces: usize) -> Result<Self> {
        if pieces == 0 || !(length > 0.0) {
            return Err(CharmerError::InvalidPartition("need a positive length and at least one piece".into()));
        }
        Self::new((0..=pieces).map(|i| length * i as f64 / pieces as f64).collect())
    }

    pub fn length(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn n_pieces(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (self.breakpoints[i], self.breakpoints[i + 1])
    }

    /// Index of the piece containing `s` (pieces are right-continuous, the last
    /// one is closed at `L`).
    pub fn locate(&self, s: f64) -> usize {
        let n = self.n_pieces();
        match self.breakpoints[1..n].binary_search_by(|b| b.partial_cmp(&s).unwrap()) {
            Ok(i) => i + 1,
            Err(i) => i,
        }
    }

    pub fn approx_eq(&self, other: &Partition) -> bool {
        let tol = 1e-12 * self.length().max(1.0);
        self.breakpoints.len() == other.breakpoints.len()
            && self
                .breakpoints
                .iter()
                .zip(&other.breakpoints)
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// A smooth piece known at the nodes of a composite Gauss-Legendre rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPiece {
    start: f64,
    end: f64,
    subintervals: usize,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<SpherePoint>,
}

impl SampledPiece {
    /// Values must be given at the nodes of `composite(start, end, subintervals, order)`.
    pub fn from_values(
        start: f64,
        end: f64,
        subintervals: usize,
        order: usize,
        values: Vec<SpherePoint>,
    ) -> Result<Self> {
        if subintervals == 0 || order == 0 || subintervals * order < 2 {
            return Err(CharmerError::InvalidArgument("sampled piece needs at least 2 nodes".into()));
        }
        if values.len() != subintervals * order {
            return Err(CharmerError::InvalidArgument(format!(
                "expected {} values, got {}",
                subintervals * order,
                values.len()
            )));
        }
        let (nodes, weights) = quadrature::composite(start, end, subintervals, order);
        Ok(Self {
            start,
            end,
            subintervals,
            order,
            nodes,
            weights,
            values,
        })
    }

    /// Samples `f` on `[start, end]`, doubling the number of sub-intervals until
    /// the endpoint and Gram integrals of two successive rules agree.
    pub fn adaptive<F>(start: f64, end: f64, f: &F) -> Result<Self>
    where
        F: Fn(f64) -> DVector<f64>,
    {
        let order = numerics::GL_ORDER;
        let build = |m: usize| -> Result<Self> {
            let (nodes, _) = quadrature::composite(start, end, m, order);
            let values = nodes
                .iter()
                .map(|s| SpherePoint::new(f(*s)))
                .collect::<Result<Vec<_>>>()?;
            Self::from_values(start, end, m, order, values)
        };
        let mut m = numerics::MIN_SUBINTERVALS;
        let mut coarse = build(m)?;
        loop {
            let fine = build(2 * m)?;
            let (fc, gc) = coarse.moments();
            let (ff, gf) = fine.moments();
            let diff = (fc - ff).amax().max((gc - gf).amax());
            if diff < numerics::QUADRATURE_TOL || 2 * m >= numerics::MAX_SUBINTERVALS {
                return Ok(fine);
            }
            m *= 2;
            coarse = fine;
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn values(&self) -> &[SpherePoint] {
        &self.values
    }

    pub fn subintervals(&self) -> usize {
        self.subintervals
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.values[0].dim();
        let mut f = DVector::zeros(d);
        let mut g = DMatrix::zeros(d, d);
        for (w, v) in self.weights.iter().zip(&self.values) {
            f.axpy(*w, v.coords(), 1.0);
            g.ger(*w, v.coords(), v.coords(), 1.0);
        }
        (f, g)
    }

    fn sub_index(&self, s: f64) -> usize {
        let h = (self.end - self.start) / self.subintervals as f64;
        (((s - self.start) / h).floor().max(0.0) as usize).min(self.subintervals - 1)
    }

    /// Polynomial interpolant on the sub-interval containing `s` (not renormalized).
    fn interpolate(&self, s: f64) -> DVector<f64> {
        let j = self.sub_index(s);
        let range = j * self.order..(j + 1) * self.order;
        let l = lagrange_weights(&self.nodes[range.clone()], s);
        let d = self.values[0].dim();
        let mut out = DVector::zeros(d);
        for (li, v) in l.iter().zip(&self.values[range]) {
            out.axpy(*li, v.coords(), 1.0);
        }
        out
    }

    fn eval(&self, s: f64) -> SpherePoint {
        SpherePoint::from_unit({
            let v = self.interpolate(s);
            let n = v.norm();
            v / n
        })
    }

    /// `∫_{start}^{s} z` using the interpolant on the last partial sub-interval.
    fn partial_integral(&self, s: f64) -> DVector<f64> {
        let d = self.values[0].dim();
        let mut out = DVector::zeros(d);
        if s <= self.start {
            return out;
        }
        let j = self.sub_index(s);
        for k in 0..j * self.order {
            out.axpy(self.weights[k], self.values[k].coords(), 1.0);
        }
        let h = (self.end - self.start) / self.subintervals as f64;
        let lo = self.start + j as f64 * h;
        let hi = s.min(self.end);
        if hi > lo {
            let (x, w) = quadrature::composite(lo, hi, 1, self.order);
            for (xi, wi) in x.iter().zip(&w) {
                out.axpy(*wi, &self.interpolate(*xi), 1.0);
            }
        }
        out
    }

    fn map_values(&self, f: impl Fn(&SpherePoint) -> SpherePoint) -> Self {
        Self {
            values: self.values.iter().map(f).collect(),
            ..self.clone()
        }
    }
}

/// One piece of a configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    Constant(SpherePoint),
    Sampled(SampledPiece),
}

/// A configuration (the hodograph of a snake).
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    dim: usize,
    partition: Partition,
    pieces: Vec<Piece>,
}

/// `M(z) = L·I − G(z)` where `G_{jk} = ∫ z_j z_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramDefectMatrix(DMatrix<f64>);

impl GramDefectMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        SymmetricEigen::new(self.0.clone()).eigenvalues
    }

    /// Smallest singular value (the matrix is symmetric PSD).
    pub fn smallest_singular_value(&self) -> f64 {
        self.eigenvalues().iter().fold(f64::INFINITY, |a, b| a.min(b.abs()))
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        self.0.clone().cholesky().map(|c| c.solve(rhs))
    }
}

/// Points `(s, S(s))` of a snake, tail at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SnakePolyline {
    pub samples: Vec<(f64, DVector<f64>)>,
}

impl SnakePolyline {
    pub fn snout(&self) -> &DVector<f64> {
        &self.samples.last().unwrap().1
    }
}

impl Configuration {
    pub fn new(partition: Partition, pieces: Vec<Piece>) -> Result<Self> {
        if pieces.len() != partition.n_pieces() {
            return Err(CharmerError::InvalidArgument(format!(
                "{} pieces for a partition with {} intervals",
                pieces.len(),
                partition.n_pieces()
            )));
        }
        let dim = match &pieces[0] {
            Piece::Constant(p) => p.dim(),
            Piece::Sampled(s) => s.values[0].dim(),
        };
        for (i, piece) in pieces.iter().enumerate() {
            let (a, b) = partition.bounds(i);
            match piece {
                Piece::Constant(p) => {
                    if p.dim() != dim {
                        return Err(CharmerError::DimensionMismatch { expected: dim, got: p.dim() });
                    }
                }
                Piece::Sampled(sp) => {
                    let tol = 1e-12 * b.max(1.0);
                    if (sp.start - a).abs() > tol || (sp.end - b).abs() > tol {
                        return Err(CharmerError::InvalidArgument(format!(
                            "sampled piece {i} spans [{}, {}] instead of [{a}, {b}]",
                            sp.start, sp.end
                        )));
                    }
                    if let Some(bad) = sp.values.iter().find(|v| v.dim() != dim) {
                        return Err(CharmerError::DimensionMismatch { expected: dim, got: bad.dim() });
                    }
                }
            }
        }
        Ok(Self { dim, partition, pieces })
    }

    /// Piecewise-constant configuration (polygonal snake).
    pub fn polygonal(lengths: &[f64], values: Vec<SpherePoint>) -> Result<Self> {
        if lengths.len() != values.len() {
            return Err(CharmerError::InvalidArgument("one value per segment".into()));
        }
        Self::new(
            Partition::from_lengths(lengths)?,
            values.into_iter().map(Piece::Constant).collect(),
        )
    }

    pub fn constant(length: f64, value: SpherePoint) -> Result<Self> {
        Self::polygonal(&[length], vec![value])
    }

    /// Samples a smooth map on every piece of `partition`.
    pub fn from_fn<F>(partition: Partition, f: F) -> Result<Self>
    where
        F: Fn(f64) -> DVector<f64>,
    {
        let pieces = (0..partition.n_pieces())
            .map(|i| {
                let (a, b) = partition.bounds(i);
                SampledPiece::adaptive(a, b, &f).map(Piece::Sampled)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(partition, pieces)
    }

    /// `z(s) = (sin s, cos s)` on `[0, π]`: the upper half circle from `0` to `(2, 0)`.
    pub fn half_circle() -> Self {
        let partition = Partition::new(vec![0.0, std::f64::consts::PI]).unwrap();
        Self::from_fn(partition, |s| DVector::from_vec(vec![s.sin(), s.cos()])).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> f64 {
        self.partition.length()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.pieces.iter().all(|p| matches!(p, Piece::Constant(_)))
    }

    /// Every stored value with its quadrature weight.
    pub fn weighted_values(&self) -> impl Iterator<Item = (f64, &SpherePoint)> + '_ {
        self.pieces.iter().enumerate().flat_map(move |(i, piece)| {
            let (a, b) = self.partition.bounds(i);
            let items: Box<dyn Iterator<Item = (f64, &SpherePoint)>> = match piece {
                Piece::Constant(p) => Box::new(std::iter::once((b - a, p))),
                Piece::Sampled(sp) => Box::new(sp.weights.iter().copied().zip(sp.values.iter())),
            };
            items
        })
    }

    /// Stored values with the arc-length parameter they sit at (piece midpoint
    /// for constants).
    pub fn positioned_values(&self) -> Vec<(f64, &SpherePoint)> {
        let mut out = Vec::new();
        for (i, piece) in self.pieces.iter().enumerate() {
            let (a, b) = self.partition.bounds(i);
            match piece {
                Piece::Constant(p) => out.push((0.5 * (a + b), p)),
                Piece::Sampled(sp) => out.extend(sp.nodes.iter().copied().zip(sp.values.iter())),
            }
        }
        out
    }

    /// `z(s)`; at a breakpoint the right limit, at `L` the left one.
    pub fn eval(&self, s: f64) -> SpherePoint {
        let i = self.partition.locate(s.clamp(0.0, self.length()));
        match &self.pieces[i] {
            Piece::Constant(p) => p.clone(),
            Piece::Sampled(sp) => sp.eval(s),
        }
    }

    /// `f(z) = ∫_0^L z(s) ds`.
    pub fn endpoint(&self) -> DVector<f64> {
        self.moments().0
    }

    /// `(f(z), G(z))` in one pass.
    pub fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let mut f = DVector::zeros(self.dim);
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for (w, v) in self.weighted_values() {
            f.axpy(w, v.coords(), 1.0);
            g.ger(w, v.coords(), v.coords(), 1.0);
        }
        (f, g)
    }

    /// `(f(g·z), G(g·z))` without materializing `g·z`.
    pub fn moments_under(&self, g: &MobiusElement) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dim;
        let mut f = vec![0.0; d];
        let mut gram = vec![0.0; d * d];
        let mut y = vec![0.0; d];
        for (w, v) in self.weighted_values() {
            g.apply_into(v.coords().as_slice(), &mut y);
            for j in 0..d {
                f[j] += w * y[j];
                let wy = w * y[j];
                for k in j..d {
                    gram[j * d + k] += wy * y[k];
                }
            }
        }
        for j in 0..d {
            for k in 0..j {
                gram[j * d + k] = gram[k * d + j];
            }
        }
        (DVector::from_vec(f), DMatrix::from_row_slice(d, d, &gram))
    }

    /// `M(z)`.
    pub fn gram_defect(&self) -> GramDefectMatrix {
        let (_, g) = self.moments();
        gram_defect_from(self.length(), &g)
    }

    /// Snake `S_z(s) = ∫_0^s z`, sampled at `n` equally spaced points plus the
    /// interior breakpoints.
    pub fn integrate_snake(&self, n: usize) -> Result<SnakePolyline> {
        if n < 2 {
            return Err(CharmerError::InvalidArgument("need at least 2 samples".into()));
        }
        let l = self.length();
        let mut params: Vec<f64> = (0..n).map(|i| l * i as f64 / (n - 1) as f64).collect();
        params.extend_from_slice(&self.partition.breakpoints()[1..self.partition.n_pieces()]);
        params.sort_by(|a, b| a.partial_cmp(b).unwrap());
        params.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * l.max(1.0));

        // integral up to the start of every piece
        let mut starts = Vec::with_capacity(self.pieces.len() + 1);
        let mut acc = DVector::zeros(self.dim);
        starts.push(acc.clone());
        for (i, piece) in self.pieces.iter().enumerate() {
            let (a, b) = self.partition.bounds(i);
            match piece {
                Piece::Constant(p) => acc.axpy(b - a, p.coords(), 1.0),
                Piece::Sampled(sp) => acc += sp.partial_integral(b),
            }
            starts.push(acc.clone());
        }
        let mut samples = Vec::with_capacity(params.len());
        for s in params {
            let point = if s >= l {
                starts[self.pieces.len()].clone()
            } else {
                let i = self.partition.locate(s);
                let (a, _) = self.partition.bounds(i);
                let base = &starts[i];
                match &self.pieces[i] {
                    Piece::Constant(p) => base + p.coords() * (s - a),
                    Piece::Sampled(sp) => base + sp.partial_integral(s),
                }
            };
            samples.push((s, point));
        }
        Ok(SnakePolyline { samples })
    }

    /// All values within `tol` (chordal) of `{p, −p}` for a single `p`.
    pub fn is_lined(&self, tol: f64) -> bool {
        let mut it = self.weighted_values();
        let p = match it.next() {
            Some((_, p)) => p.clone(),
            None => return true,
        };
        self.weighted_values()
            .all(|(_, x)| x.chordal_distance(&p).min(x.chordal_distance(&p.neg())) <= tol)
    }

    /// Groups values closer than [`numerics::CLUSTER_TOL`]; returns
    /// `(representative, total weight)` per cluster. Stops after `limit` clusters.
    fn clusters(&self, limit: usize) -> Vec<(SpherePoint, f64)> {
        let mut clusters: Vec<(SpherePoint, f64)> = Vec::new();
        for (w, v) in self.weighted_values() {
            match clusters
                .iter_mut()
                .find(|(rep, _)| rep.chordal_distance(v) < numerics::CLUSTER_TOL)
            {
                Some(c) => c.1 += w,
                None => {
                    clusters.push((v.clone(), w));
                    if clusters.len() >= limit {
                        break;
                    }
                }
            }
        }
        clusters
    }

    /// Number of distinct values, saturating at `limit`.
    pub fn distinct_values(&self, limit: usize) -> usize {
        self.clusters(limit).len()
    }

    /// `sed(z)`: the largest total length on which `z` takes a single value.
    ///
    /// Exact for constant pieces; a sampled piece only counts when all its
    /// node values coincide.
    pub fn sedentariness(&self) -> f64 {
        let mut clusters: Vec<(SpherePoint, f64)> = Vec::new();
        for (i, piece) in self.pieces.iter().enumerate() {
            let (a, b) = self.partition.bounds(i);
            let value = match piece {
                Piece::Constant(p) => Some(p),
                Piece::Sampled(sp) => {
                    let first = &sp.values[0];
                    sp.values
                        .iter()
                        .all(|v| v.chordal_distance(first) < numerics::CLUSTER_TOL)
                        .then_some(first)
                }
            };
            if let Some(v) = value {
                match clusters
                    .iter_mut()
                    .find(|(rep, _)| rep.chordal_distance(v) < numerics::CLUSTER_TOL)
                {
                    Some(c) => c.1 += b - a,
                    None => clusters.push((v.clone(), b - a)),
                }
            }
        }
        clusters.iter().fold(0.0, |m, c| m.max(c.1))
    }

    /// Dimension of the smallest sub-sphere containing the values of `z`.
    pub fn spherical_dimension(&self, tol: f64) -> usize {
        let reps: Vec<DVector<f64>> = self
            .clusters(usize::MAX)
            .into_iter()
            .map(|(p, _)| p.into_inner())
            .collect();
        if reps.len() <= 2 {
            return 0;
        }
        let n = reps.len();
        let mean = reps.iter().fold(DVector::zeros(self.dim), |a, b| a + b) / n as f64;
        let centred = DMatrix::from_fn(n, self.dim, |i, j| reps[i][j] - mean[j]);
        let sv = centred.singular_values();
        let scale = (n as f64).sqrt();
        let rank = sv.iter().filter(|s| **s / scale > tol).count();
        rank.saturating_sub(1).min(self.dim - 1)
    }

    /// `g·z`, pointwise.
    pub fn act(&self, g: &MobiusElement) -> Configuration {
        assert_eq!(g.dim(), self.dim, "dimension mismatch in act");
        self.map_values(|p| g.apply(p))
    }

    /// Action of the double cover (planar configurations only).
    pub fn act_su11(&self, g: &Su11Element) -> Configuration {
        assert_eq!(self.dim, 2, "SU(1,1) acts on planar configurations");
        self.map_values(|p| {
            let w = g.apply(num_complex::Complex64::new(p.coords()[0], p.coords()[1]));
            SpherePoint::from_unit(DVector::from_vec(vec![w.re, w.im]))
        })
    }

    /// Applies `f` to every stored value, keeping partition and piece kinds.
    pub fn map_values(&self, f: impl Fn(&SpherePoint) -> SpherePoint) -> Configuration {
        let pieces = self
            .pieces
            .iter()
            .map(|piece| match piece {
                Piece::Constant(p) => Piece::Constant(f(p)),
                Piece::Sampled(sp) => Piece::Sampled(sp.map_values(&f)),
            })
            .collect();
        Configuration {
            dim: self.dim,
            partition: self.partition.clone(),
            pieces,
        }
    }

    /// Uniform chordal distance over a grid shared by both configurations.
    pub fn sup_distance(&self, other: &Configuration) -> Result<f64> {
        if self.dim != other.dim {
            return Err(CharmerError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if !self.partition.approx_eq(&other.partition) {
            return Err(CharmerError::PartitionMismatch);
        }
        let mut worst: f64 = 0.0;
        for (i, (pa, pb)) in self.pieces.iter().zip(&other.pieces).enumerate() {
            let (a, b) = self.partition.bounds(i);
            match (pa, pb) {
                (Piece::Constant(x), Piece::Constant(y)) => worst = worst.max(x.chordal_distance(y)),
                (Piece::Sampled(x), Piece::Sampled(y)) if x.nodes == y.nodes => {
                    for (u, v) in x.values.iter().zip(&y.values) {
                        worst = worst.max(u.chordal_distance(v));
                    }
                }
                _ => {
                    let mut grid = vec![a, 0.5 * (a + b)];
                    for p in [pa, pb] {
                        if let Piece::Sampled(sp) = p {
                            grid.extend_from_slice(&sp.nodes);
                        }
                    }
                    for s in grid {
                        worst = worst.max(self.eval(s).chordal_distance(&other.eval(s)));
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Flattened values of `z` at `n` midpoints of `[0,L]` (used to embed
    /// configurations in a fixed Euclidean space).
    pub fn grid_embedding(&self, n: usize) -> DVector<f64> {
        let l = self.length();
        let mut out = DVector::zeros(n * self.dim);
        for i in 0..n {
            let s = l * (i as f64 + 0.5) / n as f64;
            let v = self.eval(s);
            for j in 0..self.dim {
                out[i * self.dim + j] = v.coords()[j];
            }
        }
        out
    }
}

pub(crate) fn gram_defect_from(length: f64, gram: &DMatrix<f64>) -> GramDefectMatrix {
    let d = gram.nrows();
    GramDefectMatrix(DMatrix::identity(d, d) * length - gram)
}
