//! Numerical integration: adaptive Gauss–Kronrod, Wynn's epsilon algorithm and
//! an accelerated integrator for slowly decaying (possibly oscillating) tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// Kronrod abscissae on [-1, 1]; odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of an integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Nodes and weights of the 15-point Kronrod rule mapped to `[a, b]`.
pub fn kronrod_nodes(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (0..15).map(move |i| {
        let (j, sign) = if i < 8 { (i, -1.0) } else { (14 - i, 1.0) };
        (c + sign * h * XGK[j], h * WGK[j])
    })
}

/// Single G7–K15 panel: `(kronrod, |kronrod − gauss|)`.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-13,
            rel: 1e-12,
            max_panels: 2000,
        }
    }
}

/// Globally adaptive G7–K15 integration over the union of the intervals
/// defined by consecutive `breaks`.
///
/// Returns the best estimate even when the panel budget is exhausted; callers
/// compare `error` against their own acceptance threshold.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: Tolerance) -> Integral {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    for w in breaks.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        total += v;
        err += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    while err > tol.abs.max(tol.rel * total.abs()) && heap.len() < tol.max_panels {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed accumulated rounding from the running updates
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Integral {
        value,
        error,
        evaluations: evals,
    }
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums.
///
/// Returns `(estimate, error)` where the error is the distance between the
/// two most recent extrapolations.
pub fn wynn_epsilon(partial: &[f64]) -> (f64, f64) {
    let n = partial.len();
    if n < 3 {
        let last = *partial.last().unwrap_or(&0.0);
        let prev = if n == 2 { partial[0] } else { 0.0 };
        return (last, (last - prev).abs());
    }
    // eps[k] holds the column k of the table along the current diagonal
    let mut estimates = Vec::with_capacity(n);
    let mut prev_col = vec![0.0; n + 1]; // epsilon_{-1}
    let mut col: Vec<f64> = partial.to_vec(); // epsilon_0
    let mut best = *partial.last().unwrap();
    estimates.push(best);
    let mut k = 0;
    while col.len() > 1 {
        let mut next = Vec::with_capacity(col.len() - 1);
        for i in 0..col.len() - 1 {
            let diff = col[i + 1] - col[i];
            let v = if diff == 0.0 || !diff.is_finite() {
                f64::INFINITY
            } else {
                prev_col[i + 1] + 1.0 / diff
            };
            next.push(v);
        }
        k += 1;
        prev_col = col;
        col = next;
        if k % 2 == 0 {
            match col.last() {
                Some(&v) if v.is_finite() => {
                    best = v;
                    estimates.push(v);
                }
                _ => break,
            }
        }
        if col.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    let err = if estimates.len() >= 2 {
        (estimates[estimates.len() - 1] - estimates[estimates.len() - 2]).abs()
    } else {
        (partial[n - 1] - partial[n - 2]).abs()
    };
    (best, err)
}

/// Panel layout for [`tail`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailPanels {
    /// Equal panels, typically one half-period of the oscillation.
    Periodic(f64),
    /// Panels `[x, 2x]`, suited to monotone algebraic decay.
    Geometric,
}

/// Integral of `f` over `[start, ∞)` summed panel by panel and accelerated
/// with the epsilon algorithm.
pub fn tail<F: FnMut(f64) -> f64>(
    mut f: F,
    start: f64,
    panels: TailPanels,
    abs_tol: f64,
    max_panels: usize,
) -> Integral {
    let mut partial = Vec::new();
    let mut sum = 0.0;
    let mut a = start;
    let mut evals = 0;
    let mut last_est = f64::NAN;
    let mut stable = 0;
    let panel_tol = Tolerance {
        abs: abs_tol * 0.05,
        rel: 1e-13,
        max_panels: 200,
    };
    for _ in 0..max_panels {
        let b = match panels {
            TailPanels::Periodic(len) => a + len,
            TailPanels::Geometric => 2.0 * a.max(1e-3),
        };
        let piece = adaptive(&mut f, &[a, b], panel_tol);
        evals += piece.evaluations;
        sum += piece.value;
        partial.push(sum);
        a = b;
        if partial.len() >= 4 {
            let (est, _) = wynn_epsilon(&partial);
            if (est - last_est).abs() <= abs_tol {
                stable += 1;
                if stable >= 2 {
                    return Integral {
                        value: est,
                        error: (est - last_est).abs(),
                        evaluations: evals,
                    };
                }
            } else {
                stable = 0;
            }
            last_est = est;
        }
        if piece.value.abs() < abs_tol * 1e-3 && piece.error < abs_tol * 1e-3 && partial.len() >= 2 {
            return Integral {
                value: sum,
                error: piece.value.abs(),
                evaluations: evals,
            };
        }
    }
    let (est, err) = wynn_epsilon(&partial);
    Integral {
        value: est,
        error: err.max(abs_tol * 10.0),
        evaluations: evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = adaptive(|x| x.powi(5) - 3.0 * x * x, &[0.0, 2.0], Tolerance::default());
        assert_relative_eq!(r.value, 64.0 / 6.0 - 8.0, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_integral() {
        let r = adaptive(|x| (-x * x).exp(), &[-10.0, 0.0, 10.0], Tolerance::default());
        assert_relative_eq!(r.value, std::f64::consts::PI.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn kronrod_nodes_integrate_constant() {
        let s: f64 = kronrod_nodes(1.0, 4.0).map(|(_, w)| w).sum();
        assert_relative_eq!(s, 3.0, max_relative = 1e-15);
    }

    #[test]
    fn epsilon_accelerates_alternating_series() {
        // ln 2 = 1 − 1/2 + 1/3 − …
        let mut partial = Vec::new();
        let mut s = 0.0;
        for n in 1..=20 {
            s += if n % 2 == 1 { 1.0 } else { -1.0 } / n as f64;
            partial.push(s);
        }
        let (est, _) = wynn_epsilon(&partial);
        assert!((est - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn oscillating_algebraic_tail() {
        // ∫_1^∞ cos(x)/x² dx = cos 1 − (π/2 − Si(1)), mpmath
        let exact = -0.084_410_950_559_573_886_9_f64;
        let r = tail(|x| x.cos() / (x * x), 1.0, TailPanels::Periodic(std::f64::consts::PI), 1e-13, 500);
        assert!((r.value - exact).abs() < 1e-11, "{} vs {}", r.value, exact);
    }

    #[test]
    fn algebraic_tail_geometric_panels() {
        // ∫_2^∞ x^{-2.5} dx = 2^{-1.5}/1.5
        let r = tail(|x| x.powf(-2.5), 2.0, TailPanels::Geometric, 1e-14, 200);
        assert_relative_eq!(r.value, 2f64.powf(-1.5) / 1.5, max_relative = 1e-11);
    }
}
