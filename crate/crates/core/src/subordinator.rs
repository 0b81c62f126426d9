//! The unit-mean subordinator `G` with Laplace exponent `ψ(·; k, α)`.
//!
//! Closed-form densities exist for `α = 0` (gamma, shape `1/k`, scale `k`) and
//! `α = 1/2` (inverse Gaussian, mean 1, shape `1/k`). Expectations are
//! computed in the variable `u = ln G`, where both log-densities are concave.

use serde::{Deserialize, Serialize};

use crate::chf::{Alpha, VolOfVol};
use crate::error::{Error, Result};
use crate::normal::call_kernel;
use crate::quad::{self, gk15, kronrod_nodes, Tolerance};

/// Family of the subordinator law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GFamily {
    Gamma,
    InverseGaussian,
    /// Any other `α`: only the Laplace transform is available.
    TemperedStable,
}

/// Law of `G`: mean 1, variance `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GDistribution {
    pub k: f64,
    pub alpha: Alpha,
    pub family: GFamily,
}

/// Log-density drop (from the mode, in `u = ln G`) that delimits the
/// integration range by default.
pub const DEFAULT_DEPTH: f64 = 50.0;

impl GDistribution {
    pub fn new(k: f64, alpha: Alpha) -> Result<Self> {
        VolOfVol::new(k)?;
        let family = if alpha.value() == 0.0 {
            GFamily::Gamma
        } else if alpha.value() == 0.5 {
            GFamily::InverseGaussian
        } else {
            GFamily::TemperedStable
        };
        Ok(Self { k, alpha, family })
    }

    pub fn mean(&self) -> f64 {
        1.0
    }

    pub fn variance(&self) -> f64 {
        self.k
    }

    fn require_density(&self) -> Result<()> {
        if self.family == GFamily::TemperedStable {
            Err(Error::UnsupportedAlpha {
                alpha: self.alpha.value(),
            })
        } else {
            Ok(())
        }
    }

    /// Log-density of `G` at `g > 0`.
    pub fn ln_density(&self, g: f64) -> Result<f64> {
        self.require_density()?;
        Ok(self.ln_density_u(g.ln()) - g.ln())
    }

    /// Log-density of `u = ln G`.
    pub(crate) fn ln_density_u(&self, u: f64) -> f64 {
        let k = self.k;
        match self.family {
            GFamily::Gamma => {
                let a = 1.0 / k;
                a * u - u.exp() / k - libm::lgamma(a) - a * k.ln()
            }
            GFamily::InverseGaussian => {
                let lambda = 1.0 / k;
                // λ(cosh u − 1) written to stay accurate near u = 0
                let c = 2.0 * (0.5 * u).sinh().powi(2);
                0.5 * (lambda / (2.0 * std::f64::consts::PI)).ln() - 0.5 * u - lambda * c
            }
            GFamily::TemperedStable => f64::NAN,
        }
    }

    fn d_ln_density_u(&self, u: f64) -> f64 {
        match self.family {
            GFamily::Gamma => (1.0 - u.exp()) / self.k,
            GFamily::InverseGaussian => -0.5 - u.sinh() / self.k,
            GFamily::TemperedStable => f64::NAN,
        }
    }

    /// Mode of the density of `u`.
    pub(crate) fn mode_u(&self) -> f64 {
        match self.family {
            GFamily::Gamma => 0.0,
            GFamily::InverseGaussian => -(0.5 * self.k).asinh(),
            GFamily::TemperedStable => 0.0,
        }
    }

    /// Curvature scale `1/√(−ℓ''(u*))` at the mode.
    pub(crate) fn width_u(&self) -> f64 {
        let u = self.mode_u();
        let curvature = match self.family {
            GFamily::Gamma => u.exp() / self.k,
            GFamily::InverseGaussian => u.cosh() / self.k,
            GFamily::TemperedStable => 1.0,
        };
        1.0 / curvature.sqrt()
    }

    /// Range of `u` outside which the log-density is more than `depth` below
    /// its peak.
    pub(crate) fn range_u(&self, depth: f64) -> (f64, f64) {
        let m = self.mode_u();
        let peak = self.ln_density_u(m);
        let s = self.width_u();
        let find = |dir: f64| -> f64 {
            // expand then bisect on the concave log-density
            let mut near = m;
            let mut step = s;
            let mut far = m + dir * step;
            while self.ln_density_u(far) > peak - depth {
                near = far;
                step *= 2.0;
                far = m + dir * step;
                if step > 1e6 {
                    return far;
                }
            }
            for _ in 0..80 {
                let mid = 0.5 * (near + far);
                if self.ln_density_u(mid) > peak - depth {
                    near = mid;
                } else {
                    far = mid;
                }
            }
            far
        };
        (find(-1.0), find(1.0))
    }

    /// Initial partition of the `u` range: panels no wider than `max_width`
    /// and no wider than the curvature scale near the mode.
    fn breaks(&self, depth: f64, max_width: f64) -> Vec<f64> {
        let (lo, hi) = self.range_u(depth);
        let m = self.mode_u();
        let s = self.width_u().min(max_width);
        let mut pts = vec![m];
        // inside ±4 curvature scales use the local scale, then widen
        let mut x = m;
        while x > lo {
            let w = if m - x < 4.0 * self.width_u() {
                s
            } else {
                max_width.min(1.0 / self.d_ln_density_u(x).abs().max(1e-300)).max(s)
            };
            x = (x - w).max(lo);
            pts.push(x);
        }
        x = m;
        while x < hi {
            let w = if x - m < 4.0 * self.width_u() {
                s
            } else {
                max_width.min(1.0 / self.d_ln_density_u(x).abs().max(1e-300)).max(s)
            };
            x = (x + w).min(hi);
            pts.push(x);
        }
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        pts
    }

    /// `E[f(G)]` by adaptive quadrature in `u = ln G`, with the integration
    /// range extending `depth` log-units below the peak density.
    pub fn expectation<F: FnMut(f64) -> f64>(&self, mut f: F, depth: f64, tol: Tolerance) -> Result<quad::Integral> {
        self.require_density()?;
        let breaks = self.breaks(depth, 1.0);
        let dist = *self;
        Ok(quad::adaptive(
            |u| {
                let w = dist.ln_density_u(u).exp();
                if w == 0.0 {
                    0.0
                } else {
                    w * f(u.exp())
                }
            },
            &breaks,
            tol,
        ))
    }
}

/// Precomputed quadrature rule `E[f(G)] ≈ Σ wᵢ·f(gᵢ)`.
///
/// Built once per `(k, α)` by adaptive refinement on a family of test
/// functions that includes normalized-call shapes at several scales, then
/// reused for every strike in a calibration.
#[derive(Debug, Clone)]
pub struct GRule {
    pub dist: GDistribution,
    nodes: Vec<f64>,
    sqrt_nodes: Vec<f64>,
    weights: Vec<f64>,
}

const TEST_SCALES: [f64; 7] = [1e-3, 1e-2, 0.1, 0.3, 1.0, 3.0, 10.0];

fn test_values(g: f64) -> [f64; 4 + TEST_SCALES.len()] {
    let sg = g.sqrt();
    let mut v = [0.0; 4 + TEST_SCALES.len()];
    v[0] = 1.0;
    v[1] = g;
    v[2] = g * g;
    v[3] = sg;
    for (i, &c) in TEST_SCALES.iter().enumerate() {
        v[4 + i] = sg * call_kernel(c / sg);
    }
    v
}

impl GRule {
    /// Rule for the default range and accuracy.
    pub fn new(dist: GDistribution) -> Result<Self> {
        Self::with_depth(dist, DEFAULT_DEPTH, 1e-13)
    }

    pub fn with_depth(dist: GDistribution, depth: f64, tol: f64) -> Result<Self> {
        dist.require_density()?;
        let breaks = dist.breaks(depth, 4.0);
        // totals of the test functions, used to normalize panel errors
        let scale = {
            let mut t = test_values(1.0);
            t[2] = 1.0 + dist.k;
            t
        };
        let eval_panel = |a: f64, b: f64| -> f64 {
            let mut worst = 0.0_f64;
            for j in 0..scale.len() {
                let mut f = |u: f64| dist.ln_density_u(u).exp() * test_values(u.exp())[j];
                let (_, e) = gk15(&mut f, a, b);
                worst = worst.max(e / scale[j].max(1e-6));
            }
            worst
        };
        let mut panels: Vec<(f64, f64, f64)> = breaks.windows(2).map(|w| (w[0], w[1], eval_panel(w[0], w[1]))).collect();
        for _ in 0..4000 {
            let total: f64 = panels.iter().map(|p| p.2).sum();
            if total <= tol {
                break;
            }
            let (i, _) = panels
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .2.total_cmp(&b.1 .2))
                .expect("non-empty panel list");
            let (a, b, _) = panels[i];
            let m = 0.5 * (a + b);
            panels[i] = (a, m, eval_panel(a, m));
            panels.push((m, b, eval_panel(m, b)));
        }
        panels.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for &(a, b, _) in &panels {
            for (u, w) in kronrod_nodes(a, b) {
                let wd = w * dist.ln_density_u(u).exp();
                // nodes whose weight cannot move any bounded-growth integrand
                let g = u.exp();
                if wd * (1.0 + g) < 1e-20 {
                    continue;
                }
                nodes.push(g);
                weights.push(wd);
            }
        }
        let sqrt_nodes = nodes.iter().map(|g| g.sqrt()).collect();
        Ok(Self {
            dist,
            nodes,
            sqrt_nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ wᵢ·f(gᵢ, √gᵢ)`.
    pub fn expect<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> f64 {
        let mut s = 0.0;
        for i in 0..self.nodes.len() {
            s += self.weights[i] * f(self.nodes[i], self.sqrt_nodes[i]);
        }
        s
    }

    /// Normalized time value `E[cb(y + η(G−1), √G)] − max(−y, 0)` computed
    /// without cancellation by reflecting in-the-money strikes.
    pub fn time_value(&self, y: f64, eta: f64) -> f64 {
        let (y, eta) = if y < 0.0 { (-y, -eta) } else { (y, eta) };
        let c = y - eta;
        self.expect(|g, sg| {
            if sg > 0.0 {
                sg * call_kernel((c + eta * g) / sg)
            } else {
                // nodes that underflow to G = 0 contribute the intrinsic value
                (-c).max(0.0)
            }
        })
    }
}
