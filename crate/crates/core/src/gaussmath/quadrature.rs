use std::f64::consts::PI;

use super::KernelError;

/// Node count used for every σ average unless configured otherwise.
pub const DEFAULT_NODES: usize = 64;

/// Fixed-node quadrature rule on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    a: f64,
    b: f64,
}

impl QuadratureRule {
    /// Validating constructor for an arbitrary rule.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, a: f64, b: f64) -> Result<Self, KernelError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(KernelError::InvalidRule(format!("interval [{a}, {b}] is empty")));
        }
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(KernelError::InvalidRule(format!(
                "{} nodes and {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) || nodes.iter().any(|&x| !(a <= x && x <= b)) {
            return Err(KernelError::InvalidRule("nodes must be strictly increasing inside [a, b]".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(KernelError::InvalidRule("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if ((total - (b - a)) / (b - a)).abs() > 1e-12 {
            return Err(KernelError::InvalidRule(format!("weights sum to {total}, expected {}", b - a)));
        }
        Ok(Self { nodes, weights, a, b })
    }

    /// `n`-point Gauss-Legendre rule mapped onto `[a, b]`; exact for polynomials of degree `2n - 1`.
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Self, KernelError> {
        if n == 0 {
            return Err(KernelError::InvalidRule("zero nodes".into()));
        }
        let (x, w) = legendre_nodes(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = x.iter().map(|&t| mid + half * t).collect();
        let weights = w.iter().map(|&wi| half * wi).collect();
        Self::new(nodes, weights, a, b)
    }

    /// Default rule on the unit interval; callers rescale it onto the σ range.
    pub fn default_rule() -> Self {
        Self::gauss_legendre(DEFAULT_NODES, 0.0, 1.0).expect("default rule is valid")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Nodes and weights rescaled onto `[lo, hi]` with weights normalized to sum to one,
    /// i.e. the rule for an average against the uniform law. `lo == hi` collapses to a point mass.
    pub fn averaging_nodes(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let width = self.b - self.a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| {
                let s = (t - self.a) / width;
                (lo + s * (hi - lo), w / width)
            })
            .collect()
    }
}

/// Gauss-Legendre abscissae and weights on [-1, 1] by Newton iteration on P_n.
fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// `Σ wᵢ f(xᵢ)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, rule: &QuadratureRule) -> f64 {
    rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * f(x)).sum()
}
