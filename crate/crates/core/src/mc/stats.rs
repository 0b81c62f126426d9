//! Sample statistics used to check and report simulations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Running sums with Neumaier compensation, mergeable across blocks.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    n: usize,
    sum: f64,
    sum_c: f64,
    sq: f64,
    sq_c: f64,
}

#[inline]
fn neumaier(sum: &mut f64, c: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *c += (*sum - t) + x;
    } else {
        *c += (x - t) + *sum;
    }
    *sum = t;
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        neumaier(&mut self.sum, &mut self.sum_c, x);
        neumaier(&mut self.sq, &mut self.sq_c, x * x);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.n += other.n;
        neumaier(&mut self.sum, &mut self.sum_c, other.sum);
        neumaier(&mut self.sum, &mut self.sum_c, other.sum_c);
        neumaier(&mut self.sq, &mut self.sq_c, other.sq);
        neumaier(&mut self.sq, &mut self.sq_c, other.sq_c);
    }

    pub fn estimate(&self) -> MeanEstimate {
        if self.n == 0 {
            return MeanEstimate {
                mean: f64::NAN,
                std_error: f64::NAN,
                n: 0,
            };
        }
        let n = self.n as f64;
        let mean = (self.sum + self.sum_c) / n;
        let var = if self.n > 1 {
            ((self.sq + self.sq_c) - n * mean * mean).max(0.0) / (n - 1.0)
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            std_error: (var / n).sqrt(),
            n: self.n,
        }
    }
}

/// Mean and standard error of a sample.
pub fn mean_estimate(xs: &[f64]) -> MeanEstimate {
    let mut acc = Accumulator::default();
    xs.iter().for_each(|&x| acc.push(x));
    acc.estimate()
}

/// Two-sample Kolmogorov–Smirnov statistic and its 1% critical value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
}

impl KsResult {
    pub fn passes(&self) -> bool {
        self.statistic < self.critical
    }
}

/// Asymptotic coefficient `c(α)` of the two-sample test at α = 0.01.
pub const KS_C_001: f64 = 1.628;

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    KsResult {
        statistic: d,
        critical: KS_C_001 * ((nf + mf) / (nf * mf)).sqrt(),
    }
}

/// Empirical characteristic function `mean(e^{iux})`.
pub fn empirical_cf(xs: &[f64], u: f64) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &x in xs {
        let (s, c) = (u * x).sin_cos();
        re += c;
        im += s;
    }
    Complex64::new(re, im) / xs.len() as f64
}
