//! Möbius transformations of `S^{d-1}` in the Lorentz model.
//!
//! An element is a `(d+1)x(d+1)` matrix `g` in the identity component of
//! `O(d,1)` (metric `J = diag(1,…,1,-1)`). A point `x` of the sphere is the
//! light ray through `(x, 1)`; `g` acts by `x ↦ (gX)_{0..d} / (gX)_d`.
//!
//! The Lie algebra `so(d,1)` splits as boosts (the image `H` of [`chi`]) plus
//! the rotations `so(d)`.

use std::ops::Mul;

use nalgebra::{DMatrix, DVector};

use crate::error::{CharmerError, Result};
use crate::numerics;
use crate::sphere::SpherePoint;

/// Element of the Möbius group `Möb(d-1)` as a Lorentz matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusElement {
    matrix: DMatrix<f64>,
    dim: usize,
}

/// Element of the Lie algebra, stored as (boost part, rotation part).
#[derive(Debug, Clone, PartialEq)]
pub struct LieVector {
    pub boost: DVector<f64>,
    pub rotation: DMatrix<f64>,
}

/// A point of `R^d ∪ {∞}` produced by a stereographic chart.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartPoint {
    Finite(DVector<f64>),
    Infinity,
}

fn lorentz_metric(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::identity(n, n);
    j[(n - 1, n - 1)] = -1.0;
    j
}

/// `‖gᵀ J g − J‖_max`.
fn lorentz_residual(m: &DMatrix<f64>) -> f64 {
    let j = lorentz_metric(m.nrows());
    (m.transpose() * &j * m - j).amax()
}

impl MobiusElement {
    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim + 1, dim + 1),
            dim,
        }
    }

    /// Wraps a Lorentz matrix, checking the group constraints.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() || n < 3 {
            return Err(CharmerError::InvalidArgument(format!(
                "Lorentz matrix must be square of size >= 3, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        let residual = lorentz_residual(&matrix);
        if residual > numerics::GROUP_RESIDUAL
            || matrix[(n - 1, n - 1)] <= 0.0
            || matrix.determinant() <= 0.0
        {
            return Err(CharmerError::NotInGroup { residual });
        }
        Ok(Self { matrix, dim: n - 1 })
    }

    /// Trusted constructor for matrices produced by group operations.
    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        let dim = matrix.nrows() - 1;
        Self { matrix, dim }
    }

    /// Embeds a rotation of `R^d` (must be in `SO(d)`).
    pub fn rotation(rot: &DMatrix<f64>) -> Result<Self> {
        check_rotation(rot)?;
        let d = rot.nrows();
        let mut m = DMatrix::identity(d + 1, d + 1);
        m.view_mut((0, 0), (d, d)).copy_from(rot);
        Ok(Self { matrix: m, dim: d })
    }

    /// Planar rotation by `theta` embedded in `Möb(1)`.
    pub fn planar_rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        Self::rotation(&rot).expect("planar rotation is orthogonal")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn compose(&self, other: &MobiusElement) -> MobiusElement {
        assert_eq!(self.dim, other.dim, "composing elements of different dimension");
        Self::from_matrix_unchecked(&self.matrix * &other.matrix)
    }

    /// `g⁻¹ = J gᵀ J`.
    pub fn inverse(&self) -> MobiusElement {
        let j = lorentz_metric(self.dim + 1);
        Self::from_matrix_unchecked(&j * self.matrix.transpose() * &j)
    }

    pub fn group_residual(&self) -> f64 {
        lorentz_residual(&self.matrix)
    }

    pub fn apply(&self, x: &SpherePoint) -> SpherePoint {
        assert_eq!(x.dim(), self.dim, "dimension mismatch in apply");
        let mut out = DVector::zeros(self.dim);
        self.apply_into(x.coords().as_slice(), out.as_mut_slice());
        SpherePoint::from_unit(out)
    }

    /// Projective action on raw coordinates; `out` receives a unit vector.
    #[inline]
    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let m = &self.matrix;
        let mut w = m[(d, d)];
        for k in 0..d {
            w += m[(d, k)] * x[k];
        }
        let mut norm2 = 0.0;
        for j in 0..d {
            let mut y = m[(j, d)];
            for k in 0..d {
                y += m[(j, k)] * x[k];
            }
            out[j] = y / w;
            norm2 += out[j] * out[j];
        }
        let inv = 1.0 / norm2.sqrt();
        for o in out.iter_mut() {
            *o *= inv;
        }
    }

    /// Projects back onto the group after integrator drift.
    ///
    /// The hyperbolic part is read off the last column and pushed back onto the
    /// hyperboloid; the remaining rotation block is replaced by its polar factor.
    /// Exact group elements are returned unchanged up to rounding.
    pub fn renormalize(&self) -> Result<MobiusElement> {
        let residual = self.group_residual();
        let d = self.dim;
        if !(residual < numerics::GROUP_BLOWUP) || self.matrix[(d, d)] <= 0.0 {
            return Err(CharmerError::NotInGroup { residual });
        }
        let x = self.matrix.view((0, d), (d, 1)).clone_owned();
        let b = boost_to_hyperboloid_point(&DVector::from_column_slice(x.as_slice()));
        let rest = b.inverse().matrix * &self.matrix;
        let block = rest.view((0, 0), (d, d)).clone_owned();
        let rot = polar_rotation(&block)?;
        let mut r = DMatrix::identity(d + 1, d + 1);
        r.view_mut((0, 0), (d, d)).copy_from(&rot);
        Ok(Self::from_matrix_unchecked(b.matrix * r))
    }

    /// Max-entry distance between the matrices.
    pub fn distance(&self, other: &MobiusElement) -> f64 {
        (&self.matrix - &other.matrix).amax()
    }

    /// Inverse of [`psi`]: returns `(v, rho)` with `g = boost(v,1)·rho`.
    pub fn chart_coordinates(&self) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dim;
        let x = DVector::from_iterator(d, (0..d).map(|i| self.matrix[(i, d)]));
        let sinh = x.norm();
        let eta = sinh.asinh();
        let v = if sinh > 0.0 { x * (eta / sinh) } else { x };
        let b_inv = boost(&v, -1.0);
        let rest = b_inv.matrix * &self.matrix;
        (v, rest.view((0, 0), (d, d)).clone_owned())
    }
}

impl Mul for &MobiusElement {
    type Output = MobiusElement;

    fn mul(self, rhs: &MobiusElement) -> MobiusElement {
        self.compose(rhs)
    }
}

/// Boost whose last column is `(x, sqrt(1+|x|²))`.
fn boost_to_hyperboloid_point(x: &DVector<f64>) -> MobiusElement {
    let sinh = x.norm();
    if sinh == 0.0 {
        return MobiusElement::identity(x.len());
    }
    let eta = sinh.asinh();
    boost(&(x * (eta / sinh)), 1.0)
}

fn check_rotation(rot: &DMatrix<f64>) -> Result<()> {
    let d = rot.nrows();
    if d != rot.ncols() {
        return Err(CharmerError::NotOrthogonal { residual: f64::INFINITY });
    }
    let residual = (rot.transpose() * rot - DMatrix::identity(d, d)).amax();
    if residual > numerics::ROTATION_TOL || rot.determinant() <= 0.0 {
        return Err(CharmerError::NotOrthogonal { residual });
    }
    Ok(())
}

/// Nearest proper rotation (polar factor `U Vᵀ`).
pub(crate) fn polar_rotation(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = m.clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(CharmerError::NotOrthogonal { residual: f64::NAN }),
    };
    let r = &u * &vt;
    if r.determinant() < 0.0 {
        return Err(CharmerError::NotOrthogonal { residual: f64::NAN });
    }
    Ok(r)
}

/// The hyperbolic flow `Γ^v_t`: stable fixed point `v/|v|`, rate `e^{t|v|}`.
///
/// Closed form `I + sinh η (u e_dᵀ + e_d uᵀ) + (cosh η − 1)(u uᵀ + e_d e_dᵀ)`
/// with `η = t|v|`, `u = v/|v|`.
pub fn boost(v: &DVector<f64>, t: f64) -> MobiusElement {
    let d = v.len();
    let norm = v.norm();
    let mut m = DMatrix::identity(d + 1, d + 1);
    let eta = t * norm;
    if norm == 0.0 || eta == 0.0 {
        return MobiusElement::from_matrix_unchecked(m);
    }
    let (sh, ch) = (eta.sinh(), eta.cosh());
    let cm1 = ch - 1.0;
    for i in 0..d {
        let ui = v[i] / norm;
        m[(i, d)] = sh * ui;
        m[(d, i)] = sh * ui;
        for j in 0..d {
            m[(i, j)] += cm1 * ui * v[j] / norm;
        }
    }
    m[(d, d)] = ch;
    MobiusElement::from_matrix_unchecked(m)
}

/// `χ(v)`: the generator with `exp(t·χ(v)) = Γ^v_t`.
pub fn chi(v: &DVector<f64>) -> LieVector {
    let d = v.len();
    LieVector {
        boost: v.clone(),
        rotation: DMatrix::zeros(d, d),
    }
}

impl LieVector {
    pub fn zero(d: usize) -> Self {
        Self {
            boost: DVector::zeros(d),
            rotation: DMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.boost.len()
    }

    /// The `so(d,1)` matrix `[[Ω, b], [bᵀ, 0]]`.
    pub fn ambient(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d + 1, d + 1);
        m.view_mut((0, 0), (d, d)).copy_from(&self.rotation);
        for i in 0..d {
            m[(i, d)] = self.boost[i];
            m[(d, i)] = self.boost[i];
        }
        m
    }

    /// Splits an `so(d,1)` matrix back into boost and rotation parts.
    pub fn from_ambient(m: &DMatrix<f64>) -> Self {
        let d = m.nrows() - 1;
        let boost = DVector::from_iterator(d, (0..d).map(|i| 0.5 * (m[(i, d)] + m[(d, i)])));
        let block = m.view((0, 0), (d, d));
        let rotation = 0.5 * (&block - block.transpose());
        Self { boost, rotation }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            boost: &self.boost * a,
            rotation: &self.rotation * a,
        }
    }

    /// Generic matrix exponential (Padé); the closed-form [`boost`] is used on
    /// the hot path.
    pub fn exp(&self) -> MobiusElement {
        MobiusElement::from_matrix_unchecked(self.ambient().exp())
    }

    /// Velocity of the flow of this generator at a point of the sphere.
    pub fn velocity_at(&self, x: &SpherePoint) -> DVector<f64> {
        let c = x.coords();
        &self.boost - c * c.dot(&self.boost) + &self.rotation * c
    }
}

/// Stereographic projection sending `v/|v|` to ∞ and `−v/|v|` to 0.
///
/// The image lies in the hyperplane `v⊥`.
pub fn stereo_project(v: &DVector<f64>, x: &SpherePoint) -> Result<ChartPoint> {
    let u = unit(v)?;
    let c = x.coords();
    let a = c.dot(&u);
    let denom = 1.0 - a;
    if denom <= 1e-300 {
        return Ok(ChartPoint::Infinity);
    }
    Ok(ChartPoint::Finite((c - &u * a) / denom))
}

/// Inverse of [`stereo_project`].
pub fn stereo_unproject(v: &DVector<f64>, y: &ChartPoint) -> Result<SpherePoint> {
    let u = unit(v)?;
    match y {
        ChartPoint::Infinity => SpherePoint::new(u),
        ChartPoint::Finite(y) => {
            let y = y - &u * y.dot(&u);
            let r2 = y.norm_squared();
            SpherePoint::new((y * 2.0 + &u * (r2 - 1.0)) / (r2 + 1.0))
        }
    }
}

fn unit(v: &DVector<f64>) -> Result<DVector<f64>> {
    let n = v.norm();
    if n == 0.0 {
        return Err(CharmerError::ZeroVector);
    }
    Ok(v / n)
}

/// `Ψ(v, ρ) = Γ^v_1 · ρ` for a rotation `ρ ∈ SO(d)`.
pub fn psi(v: &DVector<f64>, rho: &DMatrix<f64>) -> Result<MobiusElement> {
    if rho.nrows() != v.len() {
        return Err(CharmerError::DimensionMismatch {
            expected: v.len(),
            got: rho.nrows(),
        });
    }
    let r = MobiusElement::rotation(rho)?;
    Ok(boost(v, 1.0).compose(&r))
}
