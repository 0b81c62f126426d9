//! Box-constrained Nelder–Mead.
//!
//! Trial points are projected onto the box, so the simplex can collapse onto
//! a face when the minimum lies on the boundary.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    /// Stop once the largest vertex distance drops below this.
    pub diameter_tol: f64,
    pub max_evaluations: usize,
    /// Edge length of the initial simplex along each axis.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            diameter_tol: 1e-6,
            max_evaluations: 2000,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<const N: usize> {
    pub x: [f64; N],
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn project<const N: usize>(mut x: [f64; N], lower: &[f64; N], upper: &[f64; N]) -> [f64; N] {
    for i in 0..N {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
    x
}

fn diameter<const N: usize>(simplex: &[([f64; N], f64)]) -> f64 {
    let mut d = 0.0_f64;
    for a in simplex {
        for b in simplex {
            let s: f64 = (0..N).map(|i| (a.0[i] - b.0[i]).powi(2)).sum();
            d = d.max(s.sqrt());
        }
    }
    d
}

fn combine<const N: usize>(a: &[f64; N], b: &[f64; N], t: f64) -> [f64; N] {
    // a + t·(b − a)
    let mut r = [0.0; N];
    for i in 0..N {
        r[i] = a[i] + t * (b[i] - a[i]);
    }
    r
}

/// Minimizes `f` over the box `[lower, upper]` starting from `x0`.
///
/// Non-finite objective values are treated as `+∞`.
pub fn minimize<const N: usize, F: FnMut(&[f64; N]) -> f64>(
    mut f: F,
    x0: [f64; N],
    lower: [f64; N],
    upper: [f64; N],
    opts: &NelderMeadOptions,
) -> Minimum<N> {
    let evaluations = std::cell::Cell::new(0_usize);
    let mut eval = |x: &[f64; N]| {
        evaluations.set(evaluations.get() + 1);
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let x0 = project(x0, &lower, &upper);
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, eval(&x0)));
    for i in 0..N {
        let mut x = x0;
        // step away from the nearer bound so the simplex is not degenerate
        x[i] += if x0[i] + opts.initial_step <= upper[i] {
            opts.initial_step
        } else {
            -opts.initial_step
        };
        let x = project(x, &lower, &upper);
        simplex.push((x, eval(&x)));
    }
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&simplex) < opts.diameter_tol {
            converged = true;
            break;
        }
        if evaluations.get() >= opts.max_evaluations {
            break;
        }
        let mut centroid = [0.0; N];
        for v in &simplex[..N] {
            for i in 0..N {
                centroid[i] += v.0[i] / N as f64;
            }
        }
        let worst = simplex[N];
        let reflected = project(combine(&centroid, &worst.0, -1.0), &lower, &upper);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = project(combine(&centroid, &worst.0, -2.0), &lower, &upper);
            let fe = eval(&expanded);
            simplex[N] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[N - 1].1 {
            simplex[N] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let c = project(combine(&centroid, &reflected, 0.5), &lower, &upper);
            (c, eval(&c))
        } else {
            let c = combine(&centroid, &worst.0, 0.5);
            (c, eval(&c))
        };
        if fc < worst.1.min(fr) {
            simplex[N] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0;
        for v in simplex.iter_mut().skip(1) {
            let x = combine(&best, &v.0, 0.5);
            *v = (x, eval(&x));
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Minimum {
        x: simplex[0].0,
        value: simplex[0].1,
        evaluations: evaluations.get(),
        converged,
    }
}
