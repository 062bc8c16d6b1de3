//! `SU(1,1)`, the double cover of `Möb(1)` acting on the unit circle by
//! homographies `w ↦ (a w + b) / (b̄ w + ā)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CharmerError, Result};
use crate::mobius::MobiusElement;

/// Tolerance on `|a|² − |b|² = 1` for user-supplied elements.
const DET_TOL: f64 = 1e-10;

/// `[[a, b], [b̄, ā]]` with `|a|² − |b|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su11Element {
    a: Complex64,
    b: Complex64,
}

impl Su11Element {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let value = a.norm_sqr() - b.norm_sqr();
        if (value - 1.0).abs() > DET_TOL {
            return Err(CharmerError::Su11Constraint { value });
        }
        Ok(Self { a, b })
    }

    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    pub fn det(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr()
    }

    /// `exp([[0, c], [c̄, 0]])`.
    pub fn exp_offdiag(c: Complex64) -> Self {
        let r = c.norm();
        if r == 0.0 {
            return Self::identity();
        }
        Self {
            a: Complex64::new(r.cosh(), 0.0),
            b: c * (r.sinh() / r),
        }
    }

    /// Lift of the rotation `w ↦ e^{iθ} w`.
    pub fn rotation(theta: f64) -> Self {
        Self {
            a: Complex64::from_polar(1.0, theta / 2.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    pub fn compose(&self, other: &Su11Element) -> Su11Element {
        Su11Element {
            a: self.a * other.a + self.b * other.b.conj(),
            b: self.a * other.b + self.b * other.a.conj(),
        }
    }

    pub fn neg(&self) -> Su11Element {
        Su11Element { a: -self.a, b: -self.b }
    }

    pub fn inverse(&self) -> Su11Element {
        Su11Element {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    /// Homographic action on a point of the unit circle.
    #[inline]
    pub fn apply(&self, w: Complex64) -> Complex64 {
        let z = (self.a * w + self.b) / (self.b.conj() * w + self.a.conj());
        z / z.norm()
    }

    /// Rescales back onto `|a|² − |b|² = 1`.
    pub fn renormalize(&self) -> Result<Su11Element> {
        let det = self.det();
        if !(det > 0.9 && det < 1.1) {
            return Err(CharmerError::Su11Constraint { value: det });
        }
        let s = det.sqrt();
        Ok(Su11Element {
            a: self.a / s,
            b: self.b / s,
        })
    }

    /// Chart of the covering `SU(1,1) → R² × S¹`:
    /// `θ = 2 arg a`, `v = 2 arccosh|a| · e^{i arg(ab)}`.
    pub fn cover_chart(&self) -> (DVector<f64>, f64) {
        let theta = 2.0 * self.a.arg();
        // arccosh|a| = arcsinh|b| on the group, and the latter is well conditioned
        let r = 2.0 * self.b.norm().asinh();
        let phase = (self.a * self.b).arg();
        (DVector::from_vec(vec![r * phase.cos(), r * phase.sin()]), theta)
    }

    /// Inverse of [`Self::cover_chart`] (one of the two lifts).
    pub fn from_chart(v: &DVector<f64>, theta: f64) -> Self {
        let c = Complex64::new(v[0], v[1]) / 2.0;
        Self::exp_offdiag(c).compose(&Self::rotation(theta))
    }

    /// Projection to `Möb(1)` in the Lorentz model, via `x ↦ g H(x) g†` on
    /// `H(x) = [[x₃, x₁ + i x₂], [x₁ − i x₂, x₃]]`.
    pub fn to_mobius(&self) -> MobiusElement {
        let (a, b) = (self.a, self.b);
        let mut m = DMatrix::zeros(3, 3);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        // H(e_j) as (diagonal entry, off-diagonal entry)
        let columns = [(zero, one), (zero, Complex64::new(0.0, 1.0)), (one, zero)];
        for (j, (h, c)) in columns.into_iter().enumerate() {
            // entries (0,0) and (0,1) of g H g†, with g = [[a, b], [b̄, ā]]
            let r0 = a * h + b * c.conj();
            let r1 = a * c + b * h;
            let d = r0 * a.conj() + r1 * b.conj();
            let off = r0 * b + r1 * a;
            m[(0, j)] = off.re;
            m[(1, j)] = off.im;
            m[(2, j)] = d.re;
        }
        MobiusElement::from_matrix_unchecked(m)
    }
}

/// Checked constructor mirroring the chart operation: `(v, θ)` for `(a, b)`.
pub fn su11_cover_chart(a: Complex64, b: Complex64) -> Result<(DVector<f64>, f64)> {
    Ok(Su11Element::new(a, b)?.cover_chart())
}
