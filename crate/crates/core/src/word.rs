//! Curves generated by words of boosts: `g(t) = Γ^{v_r}_{φ_r(t)λ_r} ⋯ Γ^{v_1}_{φ_1(t)λ_1}`
//! and `γ(t) = f(g(t)·z₀)`, whose horizontal lift is `g(t)·z₀` itself.

use nalgebra::{DMatrix, DVector};

use crate::config::{gram_defect_from, Configuration};
use crate::curve::{Curve, Smoothness};
use crate::error::{CharmerError, Result};
use crate::mobius::{boost, MobiusElement};
use crate::numerics;
use crate::solver::{LiftResult, LiftStatus};

/// One factor `Γ^v_λ` of a word.
#[derive(Debug, Clone, PartialEq)]
pub struct Letter {
    pub v: DVector<f64>,
    pub lambda: f64,
}

impl Letter {
    pub fn new(v: DVector<f64>, lambda: f64) -> Self {
        Self { v, lambda }
    }
}

/// How each letter is switched on over its time window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `C^∞` step, flat at both ends.
    Smooth,
    /// Constant speed; a single linear letter is a reparameterized gradient flow.
    Linear,
}

/// `C^∞` step `φ(x) = ψ(x)/(ψ(x) + ψ(1−x))`, `ψ(x) = e^{−1/x}`, and `φ'`.
pub fn smooth_step(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    let (da, db) = (a / (x * x), b / ((1.0 - x) * (1.0 - x)));
    let s = a + b;
    (a / s, (da * b + a * db) / (s * s))
}

/// The boost commutator `Γ^u_a Γ^w_a Γ^u_{−a} Γ^w_{−a}` (applied right to left).
pub fn boost_commutator(u: &DVector<f64>, w: &DVector<f64>, a: f64) -> Vec<Letter> {
    vec![
        Letter::new(w.clone(), -a),
        Letter::new(u.clone(), -a),
        Letter::new(w.clone(), a),
        Letter::new(u.clone(), a),
    ]
}

/// Letter `i` acts on the window `[i/r, (i+1)/r]`; letters apply in order,
/// the first one rightmost in the product.
#[derive(Debug, Clone)]
pub struct WordCurve {
    z0: Configuration,
    letters: Vec<Letter>,
    prefixes: Vec<MobiusElement>,
    profile: Profile,
}

impl WordCurve {
    pub fn new(z0: Configuration, letters: Vec<Letter>, profile: Profile) -> Result<Self> {
        let d = z0.dim();
        if let Some(l) = letters.iter().find(|l| l.v.len() != d) {
            return Err(CharmerError::DimensionMismatch { expected: d, got: l.v.len() });
        }
        let mut prefixes = vec![MobiusElement::identity(d)];
        for l in &letters {
            let next = boost(&l.v, l.lambda).compose(prefixes.last().unwrap());
            prefixes.push(next);
        }
        Ok(Self {
            z0,
            letters,
            prefixes,
            profile,
        })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn base(&self) -> &Configuration {
        &self.z0
    }

    fn phase(&self, x: f64) -> (f64, f64) {
        match self.profile {
            Profile::Smooth => smooth_step(x),
            Profile::Linear => (x.clamp(0.0, 1.0), if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 }),
        }
    }

    /// `(letter index, φ, φ' in curve time)` at `t`.
    fn locate(&self, t: f64) -> Option<(usize, f64, f64)> {
        let r = self.letters.len();
        if r == 0 {
            return None;
        }
        let x = t.clamp(0.0, 1.0) * r as f64;
        let i = (x.floor() as usize).min(r - 1);
        let (phi, dphi) = self.phase(x - i as f64);
        Some((i, phi, dphi * r as f64))
    }

    /// `g(t)`.
    pub fn group_at(&self, t: f64) -> MobiusElement {
        match self.locate(t) {
            None => MobiusElement::identity(self.z0.dim()),
            Some((i, phi, _)) => {
                let l = &self.letters[i];
                boost(&l.v, phi * l.lambda).compose(&self.prefixes[i])
            }
        }
    }

    /// `g(1)`.
    pub fn element(&self) -> &MobiusElement {
        self.prefixes.last().unwrap()
    }

    pub fn closing_gap(&self) -> f64 {
        (self.eval(1.0) - self.eval(0.0)).norm()
    }
}

impl Curve for WordCurve {
    fn dim(&self) -> usize {
        self.z0.dim()
    }

    fn eval(&self, t: f64) -> DVector<f64> {
        self.z0.moments_under(&self.group_at(t)).0
    }

    /// `M(g(t)·z₀) φ'λ v`, since `d/dτ f(Γ^v_τ y) = M(Γ^v_τ y) v`.
    fn velocity(&self, t: f64) -> DVector<f64> {
        match self.locate(t) {
            None => DVector::zeros(self.z0.dim()),
            Some((i, _, dphi)) => {
                let l = &self.letters[i];
                if dphi == 0.0 {
                    return DVector::zeros(self.z0.dim());
                }
                let (_, gram) = self.z0.moments_under(&self.group_at(t));
                gram_defect_from(self.z0.length(), &gram).matrix() * &l.v * (dphi * l.lambda)
            }
        }
    }

    fn smoothness(&self) -> Smoothness {
        match self.profile {
            Profile::Smooth => Smoothness::CInfinity,
            Profile::Linear if self.letters.len() <= 1 => Smoothness::CInfinity,
            Profile::Linear => Smoothness::PiecewiseC1,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let r = self.letters.len();
        (1..r).map(|i| i as f64 / r as f64).collect()
    }
}

fn require_unlined(z0: &Configuration) -> Result<()> {
    let sigma = z0.gram_defect().smallest_singular_value();
    if sigma <= numerics::LINED_TOL * z0.length() {
        return Err(CharmerError::Lined { sigma_min: sigma });
    }
    Ok(())
}

/// The `C^∞` word curve and its trajectory `z_t = g(t)·z₀`, sampled every `step`.
pub fn smooth_loop_from_word(word: &[Letter], z0: &Configuration, step: f64) -> Result<(WordCurve, LiftResult)> {
    require_unlined(z0)?;
    if !(step > 0.0 && step <= 1.0) {
        return Err(CharmerError::InvalidArgument("step must lie in (0, 1]".into()));
    }
    let curve = WordCurve::new(z0.clone(), word.to_vec(), Profile::Smooth)?;
    let n = (1.0 / step).ceil() as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let group_path: Vec<MobiusElement> = times.iter().map(|t| curve.group_at(*t)).collect();
    let config_path = group_path.iter().map(|g| z0.act(g)).collect();
    let lift = LiftResult {
        defects: vec![0.0; times.len()],
        times,
        group_path,
        config_path,
        status: LiftStatus::Complete,
        snapped: false,
        steps: n,
    };
    Ok((curve, lift))
}

/// Appends a letter `(v, 1)` found by Newton's method so that the word's
/// curve returns to `f(z₀)`.
pub fn close_word(word: &[Letter], z0: &Configuration) -> Result<Vec<Letter>> {
    require_unlined(z0)?;
    let d = z0.dim();
    let target = z0.endpoint();
    let g = WordCurve::new(z0.clone(), word.to_vec(), Profile::Smooth)?.element().clone();
    let residual = |v: &DVector<f64>| z0.moments_under(&boost(v, 1.0).compose(&g)).0 - &target;
    let mut v = DVector::zeros(d);
    let tol = 1e-13 * z0.length();
    for _ in 0..60 {
        let r = residual(&v);
        if r.norm() < tol {
            let mut out = word.to_vec();
            out.push(Letter::new(v, 1.0));
            return Ok(out);
        }
        let eps = 1e-6;
        let mut jac = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut e = DVector::zeros(d);
            e[j] = eps;
            jac.set_column(j, &((residual(&(&v + &e)) - residual(&(&v - &e))) / (2.0 * eps)));
        }
        let dv = jac
            .lu()
            .solve(&r)
            .ok_or_else(|| CharmerError::InvalidArgument("closing search hit a singular Jacobian".into()))?;
        v -= dv;
    }
    Err(CharmerError::InvalidArgument("closing search did not converge".into()))
}

/// `t ↦ f(Γ^v_{λt}·z₀)`: the gradient flow of `⟨f, v⟩` run for time `λ`.
pub fn gradient_flow_curve(z0: &Configuration, v: DVector<f64>, lambda: f64) -> Result<WordCurve> {
    WordCurve::new(z0.clone(), vec![Letter::new(v, lambda)], Profile::Linear)
}
