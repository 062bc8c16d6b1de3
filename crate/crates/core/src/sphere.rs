use nalgebra::DVector;

use crate::error::{CharmerError, Result};

/// A point of the unit sphere `S^{d-1}` in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint(DVector<f64>);

impl SpherePoint {
    /// Normalizes `coords` onto the sphere.
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(CharmerError::DimensionTooSmall(coords.len()));
        }
        let n = coords.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(CharmerError::NotOnSphere);
        }
        Ok(Self(coords / n))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    /// Planar point `(cos a, sin a)`.
    pub fn from_angle(angle: f64) -> Self {
        Self(DVector::from_vec(vec![angle.cos(), angle.sin()]))
    }

    /// The `i`-th standard basis vector of `R^d`.
    pub fn basis(d: usize, i: usize) -> Self {
        assert!(d >= 2 && i < d, "basis index out of range");
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        Self(v)
    }

    /// Wraps coordinates already known to be unit length (renormalizes if
    /// drift exceeds [`crate::numerics::SPHERE_TOL`]).
    pub(crate) fn from_unit(mut coords: DVector<f64>) -> Self {
        let n = coords.norm();
        if (n - 1.0).abs() > crate::numerics::SPHERE_TOL {
            coords /= n;
        }
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn chordal_distance(&self, other: &SpherePoint) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn neg(&self) -> SpherePoint {
        SpherePoint(-&self.0)
    }

    /// Angle in the plane (only meaningful for `d = 2`).
    pub fn angle(&self) -> f64 {
        self.0[1].atan2(self.0[0])
    }
}

impl AsRef<DVector<f64>> for SpherePoint {
    fn as_ref(&self) -> &DVector<f64> {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_on_construction() {
        let p = SpherePoint::from_slice(&[3.0, 4.0]).unwrap();
        assert!((p.coords().norm() - 1.0).abs() < 1e-15);
        assert!((p.coords()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_zero_and_low_dimension() {
        assert!(SpherePoint::from_slice(&[0.0, 0.0, 0.0]).is_err());
        assert!(SpherePoint::from_slice(&[1.0]).is_err());
    }
}
