//! Gauss-Legendre rules and the composite rule used by sampled pieces.

use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// The order-8 rule used everywhere in the crate, computed once.
pub fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(crate::numerics::GL_ORDER))
}

/// Composite rule on `[a, b]` with `m` equal sub-intervals, `order` nodes each.
pub fn composite(a: f64, b: f64, m: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = if order == crate::numerics::GL_ORDER {
        gl8().clone()
    } else {
        gauss_legendre(order)
    };
    let h = (b - a) / m as f64;
    let mut nodes = Vec::with_capacity(m * order);
    let mut weights = Vec::with_capacity(m * order);
    for j in 0..m {
        let lo = a + j as f64 * h;
        for k in 0..order {
            nodes.push(lo + 0.5 * h * (x[k] + 1.0));
            weights.push(0.5 * h * w[k]);
        }
    }
    (nodes, weights)
}

/// Barycentric Lagrange interpolation through `(xs, ys)` at `x`.
pub(crate) fn lagrange_weights(xs: &[f64], x: f64) -> Vec<f64> {
    let n = xs.len();
    let mut out = vec![0.0; n];
    for (i, xi) in xs.iter().enumerate() {
        if x == *xi {
            out[i] = 1.0;
            return out;
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        let mut wi = 1.0;
        for j in 0..n {
            if i != j {
                wi /= xs[i] - xs[j];
            }
        }
        out[i] = wi / (x - xs[i]);
        total += out[i];
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    out
}
