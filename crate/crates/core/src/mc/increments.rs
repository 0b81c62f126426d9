//! Tabulated laws of the independent increments `f_{t₂} − f_{t₁}`.
//!
//! The characteristic function of an increment is `φ_{t₂}(u)/φ_{t₁}(u)`. Its
//! CDF is obtained on a uniform grid by Gil–Pelaez inversion,
//!
//! ```text
//! F(x) = 1/2 − (1/π) ∫₀^∞ Im(e^{−iux}·φ(u))/u du,
//! ```
//!
//! evaluated for all grid points at once with one FFT (midpoint rule in `u`,
//! `Δu·Δx = 2π/N`). In the gamma case with constant `k` the increment has an
//! atom at `δ = η(s₂ − s₁)` (`s = σ_t√t`) of mass `(s₁/s₂)^{2/k}`, where the
//! characteristic function does not decay; it is removed before inversion
//! and sampled separately.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::chf::{AdditiveLaw, SliceParams, VolOfVol};
use crate::error::{Error, Result};
use crate::interp::Pchip;

/// Knots of the stored inverse CDF per unit of probability and per range.
pub const TABLE_POINTS: usize = 2048;
/// Minimum half-width of the tabulated range in increment standard deviations.
pub const SPAN_SDS: f64 = 12.0;
/// FFT points per stored knot at the starting resolution.
const OVERSAMPLING: usize = 8;
/// Largest acceptable Gil–Pelaez truncation and monotonicity defect.
const CDF_TOLERANCE: f64 = 1e-4;
/// Tail mass allowed outside the tabulated range.
const TAIL_MASS: f64 = 1e-9;
const MAX_WIDENINGS: usize = 4;
/// Largest FFT the refinement may reach.
const MAX_FFT_POINTS: usize = 1 << 21;

/// Sampler for one increment.
#[derive(Debug, Clone)]
pub enum IncrementLaw {
    /// `N(0, variance)`: the Bachelier limit.
    Gaussian { sd: f64 },
    Tabulated(TabulatedLaw),
}

#[derive(Debug, Clone)]
pub struct TabulatedLaw {
    /// Inverse of the continuous part's CDF (normalized to total mass one).
    inverse: Pchip,
    u_min: f64,
    u_max: f64,
    x_min: f64,
    x_max: f64,
    /// Atom location and mass (`mass = 0` when there is none).
    pub atom: (f64, f64),
    /// Largest detected CDF defect.
    pub defect: f64,
    /// FFT size that met the tolerance.
    pub fft_points: usize,
}

impl TabulatedLaw {
    /// Increment from a uniform `v` (atom check) and a uniform `w`.
    #[inline]
    pub fn sample(&self, v: f64, w: f64) -> f64 {
        if v < self.atom.1 {
            return self.atom.0;
        }
        if w <= self.u_min {
            return self.x_min;
        }
        if w >= self.u_max {
            return self.x_max;
        }
        self.inverse.eval(w)
    }

    /// Tabulated range of the continuous part.
    pub fn range(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }
}

impl IncrementLaw {
    pub fn variance(&self) -> Option<f64> {
        match self {
            IncrementLaw::Gaussian { sd } => Some(sd * sd),
            IncrementLaw::Tabulated(_) => None,
        }
    }
}

fn slice_variance(s: &SliceParams) -> f64 {
    // Var(z) = E[G] + η²·Var(G)
    let k = s.vol_of_vol.value().unwrap_or(0.0);
    s.scale * s.scale * (1.0 + s.eta * s.eta * k)
}

/// Atom of the increment law, if any.
fn atom(a: &SliceParams, b: &SliceParams) -> (f64, f64) {
    match (a.vol_of_vol, b.vol_of_vol) {
        (VolOfVol::Value(k1), VolOfVol::Value(k2)) if a.alpha.value() == 0.0 && k1 == k2 => {
            let mass = (a.scale / b.scale).powf(2.0 / k1);
            (b.eta * b.scale - a.eta * a.scale, mass)
        }
        _ => (0.0, 0.0),
    }
}

/// Chernoff bound on the point beyond which at most [`TAIL_MASS`] lies:
/// `P(X > x) ≤ M(θ)·e^{−θx}` minimized over a few `θ` inside the strip.
/// `sign = 1` bounds the upper tail, `−1` the lower one.
fn chernoff_edge(a: &SliceParams, b: &SliceParams, sign: f64) -> Option<f64> {
    let (sa, sb) = (a.strip(), b.strip());
    let theta_max = if sign > 0.0 {
        sa.p_minus_t.min(sb.p_minus_t)
    } else {
        sa.p_plus_t.min(sb.p_plus_t)
    };
    if !theta_max.is_finite() || !(theta_max > 0.0) {
        return None;
    }
    [0.2, 0.4, 0.6, 0.8, 0.95]
        .iter()
        .filter_map(|f| {
            let theta = f * theta_max;
            let u = Complex64::new(0.0, -sign * theta);
            let ln_m = (b.log_cf(u).ok()? - a.log_cf(u).ok()?).re;
            let x = (ln_m - TAIL_MASS.ln()) / theta;
            x.is_finite().then_some(x)
        })
        .min_by(f64::total_cmp)
}

/// Tabulates the law of `f_{t₂} − f_{t₁}` for `0 < t₁ < t₂`.
pub fn increment_law<L: AdditiveLaw>(law: &L, t1: f64, t2: f64) -> Result<IncrementLaw> {
    if !(t1 > 0.0 && t2 > t1) {
        return Err(Error::invalid("times", format!("need 0 < t1 < t2, got {t1}, {t2}")));
    }
    let (a, b) = (law.slice(t1), law.slice(t2));
    if a.vol_of_vol.is_bachelier_limit() && b.vol_of_vol.is_bachelier_limit() {
        let v = b.scale * b.scale - a.scale * a.scale;
        if !(v >= 0.0) {
            return Err(Error::CdfTabulationFailed {
                reason: format!("negative increment variance {v}"),
            });
        }
        return Ok(IncrementLaw::Gaussian { sd: v.sqrt() });
    }
    let variance = slice_variance(&b) - slice_variance(&a);
    if !(variance > 0.0) {
        return Err(Error::CdfTabulationFailed {
            reason: format!("increment variance {variance} is not positive"),
        });
    }
    let sd = variance.sqrt();
    let (delta, mass) = atom(&a, &b);
    let log_cf = |u: f64| -> Result<Complex64> {
        let z = Complex64::new(u, 0.0);
        Ok(b.log_cf(z)? - a.log_cf(z)?)
    };
    // continuous part of the characteristic function
    let cont = |u: f64| -> Result<Complex64> {
        let phi = log_cf(u)?.exp();
        Ok(phi - mass * Complex64::new(0.0, u * delta).exp())
    };

    let base = SPAN_SDS * sd;
    let mut lo = -chernoff_edge(&a, &b, -1.0).unwrap_or(base).max(base);
    let mut hi = chernoff_edge(&a, &b, 1.0).unwrap_or(base).max(base);
    if mass > 0.0 {
        lo = lo.min(delta - base);
        hi = hi.max(delta + base);
    }
    // starting resolution: TABLE_POINTS·OVERSAMPLING points across ±SPAN_SDS sd
    let dx0 = 2.0 * base / (TABLE_POINTS * OVERSAMPLING) as f64;
    let mut n = ((hi - lo) / dx0).ceil().max(1.0) as usize;
    n = n.next_power_of_two().min(MAX_FFT_POINTS);
    let mut widenings = 0;
    loop {
        let (xs, cdf, defect) = gil_pelaez(&cont, lo, hi, n, 1.0 - mass)?;
        let lower_tail = cdf[0];
        let upper_tail = 1.0 - cdf[cdf.len() - 1];
        if defect <= CDF_TOLERANCE {
            if lower_tail <= TAIL_MASS && upper_tail <= TAIL_MASS {
                return Ok(IncrementLaw::Tabulated(build_inverse(&xs, &cdf, (delta, mass), defect)?));
            }
            if widenings == MAX_WIDENINGS || n == MAX_FFT_POINTS {
                return Err(Error::CdfTabulationFailed {
                    reason: format!("tail mass {:.1e} outside the widened grid", lower_tail.max(upper_tail)),
                });
            }
            let w = hi - lo;
            if lower_tail > TAIL_MASS {
                lo -= w / 2.0;
            }
            if upper_tail > TAIL_MASS {
                hi += w / 2.0;
            }
            widenings += 1;
            n *= 2;
            continue;
        }
        if n >= MAX_FFT_POINTS {
            return Err(Error::CdfTabulationFailed {
                reason: format!("Gil-Pelaez defect {defect:e} on a grid of {n} points"),
            });
        }
        n *= 2;
    }
}

/// CDF of the (normalized) continuous part on `n` points spanning
/// `[lo, hi)`, with a defect estimate combining truncation and
/// monotonicity violations.
fn gil_pelaez<F: Fn(f64) -> Result<Complex64>>(
    phi: &F,
    lo: f64,
    hi: f64,
    n: usize,
    total: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let dx = (hi - lo) / n as f64;
    let du = 2.0 * PI / (n as f64 * dx);
    let mut buf: Vec<Complex64> = Vec::with_capacity(n);
    for j in 0..n {
        let u = (j as f64 + 0.5) * du;
        let p = phi(u)? / total;
        buf.push(p * Complex64::new(0.0, -u * lo).exp() / u);
    }
    // the neglected tail ∫_U^∞ |φ(u)|/u du is at most |φ(U)| when |φ| decays
    // at least like 1/u
    let truncation = (phi(n as f64 * du)? / total).norm() / PI;
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut xs = Vec::with_capacity(n);
    let mut cdf = Vec::with_capacity(n);
    let mut monotone_defect = 0.0_f64;
    for (m, s) in buf.iter().enumerate() {
        let shift = Complex64::new(0.0, -PI * m as f64 / n as f64).exp();
        let f = 0.5 - du / PI * (s * shift).im;
        if let Some(&prev) = cdf.last() {
            monotone_defect = monotone_defect.max(prev - f);
        }
        xs.push(lo + m as f64 * dx);
        cdf.push(f);
    }
    let range_defect = cdf.iter().map(|&f| (-f).max(f - 1.0)).fold(0.0_f64, f64::max);
    let defect = truncation.max(monotone_defect).max(range_defect);
    Ok((xs, cdf, defect))
}

/// Keeps a knot whenever the CDF or `x` has moved far enough since the last
/// one, so both the body and long tails are resolved.
fn build_inverse(xs: &[f64], cdf: &[f64], atom: (f64, f64), defect: f64) -> Result<TabulatedLaw> {
    let df = 1.0 / (4 * TABLE_POINTS) as f64;
    let step_x = (xs[xs.len() - 1] - xs[0]) / TABLE_POINTS as f64;
    let mut us = Vec::new();
    let mut vs = Vec::new();
    let mut running = f64::NEG_INFINITY;
    let mut last_x = f64::NEG_INFINITY;
    let last = xs.len() - 1;
    for i in 0..xs.len() {
        // small negative wiggles are flattened, then only strict increases kept
        let f = cdf[i].clamp(0.0, 1.0).max(running);
        let due = us.is_empty() || i == last || f - running >= df || xs[i] - last_x >= step_x;
        if due && f > running {
            us.push(f);
            vs.push(xs[i]);
            running = f;
            last_x = xs[i];
        }
    }
    if us.len() < 2 {
        return Err(Error::CdfTabulationFailed {
            reason: "tabulated CDF is flat".into(),
        });
    }
    Ok(TabulatedLaw {
        u_min: us[0],
        u_max: us[us.len() - 1],
        x_min: vs[0],
        x_max: vs[vs.len() - 1],
        inverse: Pchip::new(us, vs)?,
        atom,
        defect,
        fft_points: xs.len(),
    })
}
