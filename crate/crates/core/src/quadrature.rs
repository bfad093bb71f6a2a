//! Gauss-Hermite quadrature for expectations over a zero-mean normal
//! distribution.

/// Nodes and weights for `∫ exp(-t²) f(t) dt ≈ Σ wᵢ f(tᵢ)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const NEWTON_TOL: f64 = 1e-14;
/// Above this the normalized recurrence underflows in `f64`.
pub const MAX_NODES: usize = 160;
const NEWTON_MAX_ITER: usize = 100;
/// π^(-1/4)
const PI_M4: f64 = 0.751_125_544_464_942_5;

impl GaussHermite {
    /// Builds an `n`-point rule (`1 <= n <= MAX_NODES`) by Newton iteration on the normalized
    /// Hermite recurrence, seeded with the usual asymptotic root guesses.
    pub fn new(n: usize) -> Self {
        assert!(
            (1..=MAX_NODES).contains(&n),
            "Gauss-Hermite rule supports 1..={MAX_NODES} nodes, got {n}"
        );
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0_f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut deriv = 0.0;
            for _ in 0..NEWTON_MAX_ITER {
                let mut p1 = PI_M4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let j1 = (j + 1) as f64;
                    p1 = z * (2.0 / j1).sqrt() * p2 - (j as f64 / j1).sqrt() * p3;
                }
                deriv = (2.0 * nf).sqrt() * p2;
                let prev = z;
                z = prev - p1 / deriv;
                if (z - prev).abs() <= NEWTON_TOL {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (deriv * deriv);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            // Middle root is exactly zero; Newton leaves it at ~1e-17.
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(θ)]` for `θ ~ N(0, sigma²)`, normalized by the weight sum.
    pub fn normal_expectation(&self, sigma: f64, f: impl Fn(f64) -> f64) -> f64 {
        let scale = std::f64::consts::SQRT_2 * sigma;
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(scale * t);
            wsum += w;
        }
        acc / wsum
    }
}
