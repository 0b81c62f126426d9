//! Laplace exponent of the subordinator, the Additive Bachelier characteristic
//! function, analyticity strips and the additivity validator.
//!
//! The forward is `F_t = F_0 + f_t` where `f_t` has log-characteristic function
//!
//! ```text
//! ln φ_t(u) = ψ(i·u·η·σ_t√t + u²/2·σ_t²t; k, α) + i·u·η·σ_t√t
//! ```
//!
//! and `ψ` is the tempered-stable Laplace exponent indexed by `α ∈ [0, 1)`.
//! Everything that only depends on the "slice" `(σ_t√t, η_t, k_t, α)` at a
//! fixed maturity lives on [`SliceParams`]; models provide slices through the
//! [`AdditiveLaw`] trait.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyper-parameter selecting the subordinator family; `0` is the gamma
/// (variance-gamma-like) case, `1/2` the inverse-Gaussian (NIG-like) case.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const GAMMA: Alpha = Alpha(0.0);
    pub const INVERSE_GAUSSIAN: Alpha = Alpha(0.5);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..1.0).contains(&value) {
            Ok(Alpha(value))
        } else {
            Err(Error::invalid("alpha", format!("must lie in [0, 1), got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `true` for the two families with a closed-form subordinator density.
    pub fn has_closed_form_density(self) -> bool {
        self.0 == 0.0 || self.0 == 0.5
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// Vol-of-vol `k > 0`, or the Bachelier limit `k → 0⁺` where the subordinator
/// collapses to `G ≡ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VolOfVolRepr", into = "VolOfVolRepr")]
pub enum VolOfVol {
    Value(f64),
    BachelierLimit,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum VolOfVolRepr {
    Number(f64),
    Tag(String),
}

const BACHELIER_LIMIT_TAG: &str = "bachelier_limit";

impl TryFrom<VolOfVolRepr> for VolOfVol {
    type Error = Error;
    fn try_from(r: VolOfVolRepr) -> Result<Self> {
        match r {
            VolOfVolRepr::Number(k) => VolOfVol::new(k),
            VolOfVolRepr::Tag(s) if s == BACHELIER_LIMIT_TAG => Ok(VolOfVol::BachelierLimit),
            VolOfVolRepr::Tag(s) => Err(Error::invalid("k", format!("unknown tag `{s}`"))),
        }
    }
}

impl From<VolOfVol> for VolOfVolRepr {
    fn from(v: VolOfVol) -> Self {
        match v {
            VolOfVol::Value(k) => VolOfVolRepr::Number(k),
            VolOfVol::BachelierLimit => VolOfVolRepr::Tag(BACHELIER_LIMIT_TAG.to_string()),
        }
    }
}

impl VolOfVol {
    pub fn new(k: f64) -> Result<Self> {
        if k > 0.0 && k.is_finite() {
            Ok(VolOfVol::Value(k))
        } else {
            Err(Error::invalid("k", format!("must be positive and finite, got {k}")))
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            VolOfVol::Value(k) => Some(k),
            VolOfVol::BachelierLimit => None,
        }
    }

    pub fn is_bachelier_limit(self) -> bool {
        matches!(self, VolOfVol::BachelierLimit)
    }
}

/// `ln(1 + z)` without cancellation for small `|z|`.
fn ln_1p(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        z - z2 / 2.0 + z2 * z / 3.0 - z2 * z2 / 4.0 + z2 * z2 * z / 5.0
    } else {
        (Complex64::new(1.0, 0.0) + z).ln()
    }
}

/// `exp(w) − 1` without cancellation for small `|w|`.
fn exp_m1(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        let w2 = w * w;
        w + w2 / 2.0 + w2 * w / 6.0 + w2 * w2 / 24.0 + w2 * w2 * w / 120.0
    } else {
        w.exp() - 1.0
    }
}

fn check_cut(z: Complex64) -> Result<()> {
    // principal branch: the cut of ln/pow is the closed negative real axis
    if z.im == 0.0 && z.re <= 0.0 {
        Err(Error::BranchCutViolation { re: z.re, im: z.im })
    } else {
        Ok(())
    }
}

/// Laplace exponent `ψ(u; k, α)` of the subordinator `G`, so that
/// `E[exp(−u·G)] = exp(ψ(u))`.
///
/// In the Bachelier limit `ψ(u) = −u`.
pub fn psi(u: Complex64, vol_of_vol: VolOfVol, alpha: Alpha) -> Result<Complex64> {
    let k = match vol_of_vol {
        VolOfVol::BachelierLimit => return Ok(-u),
        VolOfVol::Value(k) => k,
    };
    let a = alpha.value();
    if a == 0.0 {
        let x = u * k;
        check_cut(Complex64::new(1.0, 0.0) + x)?;
        Ok(-ln_1p(x) / k)
    } else {
        let x = u * (k / (1.0 - a));
        check_cut(Complex64::new(1.0, 0.0) + x)?;
        // 1 − (1 + x)^α = −expm1(α·ln(1 + x))
        Ok(-exp_m1(ln_1p(x) * a) * ((1.0 - a) / (a * k)))
    }
}

/// Upper bound `p⁺` and lower bound `p⁻` of the strip in normalized units.
///
/// `p± = ∓η + √(η² + 2(1−α)/k)`; infinite in the Bachelier limit.
pub fn normalized_strip(eta: f64, vol_of_vol: VolOfVol, alpha: Alpha) -> (f64, f64) {
    match vol_of_vol {
        VolOfVol::BachelierLimit => (f64::INFINITY, f64::INFINITY),
        VolOfVol::Value(k) => {
            let root = (eta * eta + 2.0 * (1.0 - alpha.value()) / k).sqrt();
            // (p⁻, p⁺)
            (eta + root, -eta + root)
        }
    }
}

/// Analyticity strip of the characteristic function at one maturity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripBounds {
    /// `p⁻` in normalized (moneyness-degree) units.
    pub p_minus: f64,
    /// `p⁺` in normalized units.
    pub p_plus: f64,
    /// `p⁻_t = p⁻/(σ_t√t)` in inverse price units.
    pub p_minus_t: f64,
    /// `p⁺_t = p⁺/(σ_t√t)`.
    pub p_plus_t: f64,
}

/// Model parameters frozen at one maturity: the scale `σ_t√t`, skew `η_t`,
/// vol-of-vol `k_t` and the family `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceParams {
    pub scale: f64,
    pub eta: f64,
    pub vol_of_vol: VolOfVol,
    pub alpha: Alpha,
}

impl SliceParams {
    pub fn smile(&self) -> SmileParams {
        SmileParams {
            eta: self.eta,
            vol_of_vol: self.vol_of_vol,
            alpha: self.alpha,
        }
    }

    pub fn strip(&self) -> StripBounds {
        let (p_minus, p_plus) = normalized_strip(self.eta, self.vol_of_vol, self.alpha);
        StripBounds {
            p_minus,
            p_plus,
            p_minus_t: p_minus / self.scale,
            p_plus_t: p_plus / self.scale,
        }
    }

    /// `ln φ_t(u)` with `u` in inverse price units.
    pub fn log_cf(&self, u: Complex64) -> Result<Complex64> {
        let strip = self.strip();
        if !(u.im > -strip.p_minus_t && u.im < strip.p_plus_t) {
            return Err(Error::OutsideStrip {
                im: u.im,
                lower: -strip.p_minus_t,
                upper: strip.p_plus_t,
            });
        }
        self.smile().log_cf_unchecked(u * self.scale)
    }
}

/// The maturity-free part of the model: skew, vol-of-vol and family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmileParams {
    pub eta: f64,
    #[serde(rename = "k")]
    pub vol_of_vol: VolOfVol,
    pub alpha: Alpha,
}

impl SmileParams {
    pub fn new(eta: f64, k: f64, alpha: f64) -> Result<Self> {
        if !eta.is_finite() {
            return Err(Error::invalid("eta", "must be finite"));
        }
        Ok(Self {
            eta,
            vol_of_vol: VolOfVol::new(k)?,
            alpha: Alpha::new(alpha)?,
        })
    }

    pub fn bachelier_limit(alpha: Alpha) -> Self {
        Self {
            eta: 0.0,
            vol_of_vol: VolOfVol::BachelierLimit,
            alpha,
        }
    }

    /// `(p⁻, p⁺)` in normalized units.
    pub fn strip(&self) -> (f64, f64) {
        normalized_strip(self.eta, self.vol_of_vol, self.alpha)
    }

    /// Log-characteristic function of the unit-scale variable
    /// `z = η(1 − G) − √G·g`, checked against the strip.
    pub fn log_cf(&self, u: Complex64) -> Result<Complex64> {
        let (pm, pp) = self.strip();
        if !(u.im > -pm && u.im < pp) {
            return Err(Error::OutsideStrip {
                im: u.im,
                lower: -pm,
                upper: pp,
            });
        }
        self.log_cf_unchecked(u)
    }

    pub(crate) fn log_cf_unchecked(&self, u: Complex64) -> Result<Complex64> {
        let drift = Complex64::i() * u * self.eta;
        let arg = drift + u * u * 0.5;
        Ok(psi(arg, self.vol_of_vol, self.alpha)? + drift)
    }

    /// Real function `a ↦ ln E[exp(a·z)]`, finite for `a ∈ (−p⁺, p⁻)`.
    pub fn log_mgf(&self, a: f64) -> Result<f64> {
        // E[e^{a z}] = φ(−i a)
        Ok(self.log_cf(Complex64::new(0.0, -a))?.re)
    }
}

/// Source of per-maturity slices. Implemented by the constant-parameter model
/// and by the time-dependent benchmark parametrizations.
pub trait AdditiveLaw {
    fn alpha(&self) -> Alpha;
    fn slice(&self, t: f64) -> SliceParams;

    fn log_cf(&self, u: Complex64, t: f64) -> Result<Complex64> {
        self.slice(t).log_cf(u)
    }

    fn strip_bounds(&self, t: f64) -> StripBounds {
        self.slice(t).strip()
    }
}

/// Interpolation rule of a [`VolCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolInterpolation {
    /// Linear in total variance `σ_t²·t`, flat `σ` beyond the last knot and
    /// flat `σ` from `t = 0` to the first knot.
    #[default]
    LinearTotalVariance,
}

/// Term structure `σ_t` given at knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VolCurveRepr", into = "VolCurveRepr")]
pub struct VolCurve {
    knots: Vec<(f64, f64)>,
    interpolation: VolInterpolation,
}

#[derive(Serialize, Deserialize)]
struct VolCurveRepr {
    knots: Vec<(f64, f64)>,
    #[serde(default)]
    interpolation: VolInterpolation,
}

impl TryFrom<VolCurveRepr> for VolCurve {
    type Error = Error;
    // decreasing total variance is accepted here so that stored curves can
    // be loaded and handed to the validator
    fn try_from(r: VolCurveRepr) -> Result<Self> {
        VolCurve::new_unchecked_variance(r.knots)
    }
}

impl From<VolCurve> for VolCurveRepr {
    fn from(c: VolCurve) -> Self {
        VolCurveRepr {
            knots: c.knots,
            interpolation: c.interpolation,
        }
    }
}

impl VolCurve {
    /// Builds a curve, rejecting knots whose total variance decreases.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        let curve = Self::new_unchecked_variance(knots)?;
        for w in curve.knots.windows(2) {
            let (v0, v1) = (w[0].1 * w[0].1 * w[0].0, w[1].1 * w[1].1 * w[1].0);
            if v1 < v0 {
                return Err(Error::invalid(
                    "sigma",
                    format!("total variance decreases between t = {} and t = {}", w[0].0, w[1].0),
                ));
            }
        }
        Ok(curve)
    }

    /// Same as [`VolCurve::new`] but accepts decreasing total variance. Only
    /// meant for feeding [`validate_additivity`], which reports the violation.
    pub fn new_unchecked_variance(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::invalid("sigma", "at least one knot required"));
        }
        for &(t, s) in &knots {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid("sigma", format!("knot time must be positive, got {t}")));
            }
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("sigma", format!("volatility must be positive, got {s}")));
            }
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("sigma", "knot times must be strictly increasing"));
        }
        Ok(Self {
            knots,
            interpolation: VolInterpolation::LinearTotalVariance,
        })
    }

    pub fn flat(sigma: f64) -> Result<Self> {
        Self::new(vec![(1.0, sigma)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn interpolation(&self) -> VolInterpolation {
        self.interpolation
    }

    /// `σ_t²·t`.
    pub fn total_variance(&self, t: f64) -> f64 {
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        if t <= first.0 {
            return first.1 * first.1 * t;
        }
        if t >= last.0 {
            return last.1 * last.1 * t;
        }
        let i = self.knots.partition_point(|&(tk, _)| tk <= t);
        let (t0, s0) = self.knots[i - 1];
        let (t1, s1) = self.knots[i];
        let (w0, w1) = (s0 * s0 * t0, s1 * s1 * t1);
        w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    }

    pub fn sigma(&self, t: f64) -> f64 {
        (self.total_variance(t) / t).sqrt()
    }

    /// `σ_t·√t`.
    pub fn scale(&self, t: f64) -> f64 {
        self.total_variance(t).sqrt()
    }

    pub fn is_variance_monotone(&self) -> bool {
        self.knots
            .windows(2)
            .all(|w| w[1].1 * w[1].1 * w[1].0 >= w[0].1 * w[0].1 * w[0].0)
    }
}

/// The constant-`(η, k)` Additive Bachelier model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sigma: VolCurve,
    pub eta: f64,
    #[serde(rename = "k")]
    pub vol_of_vol: VolOfVol,
    pub alpha: Alpha,
}

impl ModelParams {
    pub fn new(sigma: VolCurve, smile: SmileParams) -> Self {
        Self {
            sigma,
            eta: smile.eta,
            vol_of_vol: smile.vol_of_vol,
            alpha: smile.alpha,
        }
    }

    pub fn smile(&self) -> SmileParams {
        SmileParams {
            eta: self.eta,
            vol_of_vol: self.vol_of_vol,
            alpha: self.alpha,
        }
    }
}

impl AdditiveLaw for ModelParams {
    fn alpha(&self) -> Alpha {
        self.alpha
    }

    fn slice(&self, t: f64) -> SliceParams {
        SliceParams {
            scale: self.sigma.scale(t),
            eta: self.eta,
            vol_of_vol: self.vol_of_vol,
            alpha: self.alpha,
        }
    }
}

/// `ln φ_t(u)` of the constant-parameter model.
pub fn log_cf(u: Complex64, t: f64, params: &ModelParams) -> Result<Complex64> {
    params.log_cf(u, t)
}

/// Strip bounds of the constant-parameter model at maturity `t`.
pub fn strip_bounds(t: f64, params: &ModelParams) -> StripBounds {
    params.strip_bounds(t)
}

/// Piecewise-linear function of time with flat extrapolation, used for the
/// time-dependent `η_t`, `k_t` curves of the general additive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeCurve {
    pub knots: Vec<(f64, f64)>,
}

impl TimeCurve {
    pub fn constant(v: f64) -> Self {
        Self {
            knots: vec![(1.0, v)],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        if t >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|&(tk, _)| tk <= t);
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// General member of the additive class: `σ_t`, `η_t`, `k_t` all curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    pub sigma: VolCurve,
    pub eta: TimeCurve,
    pub k: TimeCurve,
    pub alpha: Alpha,
}

impl AdditiveLaw for CurveParams {
    fn alpha(&self) -> Alpha {
        self.alpha
    }

    fn slice(&self, t: f64) -> SliceParams {
        SliceParams {
            scale: self.sigma.scale(t),
            eta: self.eta.eval(t),
            vol_of_vol: VolOfVol::Value(self.k.eval(t)),
            alpha: self.alpha,
        }
    }
}

/// Conditions checked by [`validate_additivity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdditivityCondition {
    /// `p⁺_t` and `p⁻_t` non-increasing.
    StripNonIncreasing,
    /// `p*_t` non-increasing.
    PStarNonIncreasing,
    /// `√t·σ_t·η_t` and `√t·σ_t·η_t·k_t^{(α−1)/α}` vanish as `t → 0⁺`.
    SmallTimeLimit,
    /// `σ_t²·t` non-decreasing.
    VarianceNonDecreasing,
}

/// One violated condition, located on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: AdditivityCondition,
    pub t_from: f64,
    pub t_to: f64,
    pub detail: String,
}

/// Outcome of [`validate_additivity`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditivityReport {
    pub grid_points: usize,
    pub violations: Vec<Violation>,
    /// `p±_t` constant on the grid (the Lévy case).
    pub strip_constant: bool,
    /// Conditions that could not be evaluated, with the reason.
    pub undetermined: Vec<(AdditivityCondition, String)>,
    /// Threshold used for the small-time limit test, relative to the largest
    /// absolute value of the same quantity on the grid.
    pub limit_threshold: f64,
}

impl AdditivityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated(&self, c: AdditivityCondition) -> bool {
        self.violations.iter().any(|v| v.condition == c)
    }
}

/// Relative tolerance for the monotonicity comparisons on the grid.
const MONOTONE_RTOL: f64 = 1e-12;
/// Small-time limit threshold (heuristic; the limits themselves are not
/// decidable on a finite grid).
pub const LIMIT_THRESHOLD: f64 = 1e-6;

fn increases(prev: f64, next: f64) -> bool {
    next > prev + MONOTONE_RTOL * prev.abs().max(next.abs()).max(f64::MIN_POSITIVE)
}

/// Checks the sufficient conditions for the process with curves `σ_t`, `η_t`,
/// `k_t` to be additive, on a strictly increasing positive time grid.
///
/// For `α = 0` the factor `k_t^{(1−α)/α}` is degenerate; the `p*_t` and second
/// limit conditions are then evaluated only when `k_t` is constant on the grid
/// (the factor is a constant and drops out) and reported as undetermined
/// otherwise.
pub fn validate_additivity(
    sigma: impl Fn(f64) -> f64,
    eta: impl Fn(f64) -> f64,
    k: impl Fn(f64) -> f64,
    alpha: Alpha,
    grid: &[f64],
) -> Result<AdditivityReport> {
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "must be strictly increasing and positive"));
    }
    let a = alpha.value();
    let mut violations = Vec::new();
    let mut undetermined = Vec::new();

    let scale: Vec<f64> = grid.iter().map(|&t| sigma(t) * t.sqrt()).collect();
    let etas: Vec<f64> = grid.iter().map(|&t| eta(t)).collect();
    let ks: Vec<f64> = grid.iter().map(|&t| k(t)).collect();
    let k_constant = ks.windows(2).all(|w| w[0] == w[1]);

    let root: Vec<f64> = etas
        .iter()
        .zip(&ks)
        .map(|(&e, &kk)| (e * e + 2.0 * (1.0 - a) / kk).sqrt())
        .collect();
    let p_plus: Vec<f64> = (0..grid.len()).map(|i| (-etas[i] + root[i]) / scale[i]).collect();
    let p_minus: Vec<f64> = (0..grid.len()).map(|i| (etas[i] + root[i]) / scale[i]).collect();

    let mut strip_constant = true;
    for i in 1..grid.len() {
        let (t0, t1) = (grid[i - 1], grid[i]);
        for (name, v) in [("p+_t", &p_plus), ("p-_t", &p_minus)] {
            if increases(v[i - 1], v[i]) {
                violations.push(Violation {
                    condition: AdditivityCondition::StripNonIncreasing,
                    t_from: t0,
                    t_to: t1,
                    detail: format!("{name} increases from {} to {}", v[i - 1], v[i]),
                });
            }
            let tol = 1e-10 * v[i].abs().max(v[i - 1].abs());
            if (v[i] - v[i - 1]).abs() > tol {
                strip_constant = false;
            }
        }
    }

    // p*_t = −σ_t√t · k_t^{−(1−α)/α} · √(η_t² + 2(1−α)/k_t)
    let k_factor: Option<Vec<f64>> = if a > 0.0 {
        Some(ks.iter().map(|&kk| kk.powf(-(1.0 - a) / a)).collect())
    } else if k_constant {
        Some(vec![1.0; grid.len()])
    } else {
        None
    };
    match &k_factor {
        Some(kf) => {
            let p_star: Vec<f64> = (0..grid.len()).map(|i| -scale[i] * kf[i] * root[i]).collect();
            for i in 1..grid.len() {
                if increases(p_star[i - 1], p_star[i]) {
                    violations.push(Violation {
                        condition: AdditivityCondition::PStarNonIncreasing,
                        t_from: grid[i - 1],
                        t_to: grid[i],
                        detail: format!("p*_t increases from {} to {}", p_star[i - 1], p_star[i]),
                    });
                }
            }
        }
        None => undetermined.push((
            AdditivityCondition::PStarNonIncreasing,
            "alpha = 0 with time-varying k_t: k_t^((1-alpha)/alpha) undefined".to_string(),
        )),
    }

    // small-time limits, scale-free: value at the first grid point relative
    // to the largest magnitude on the grid
    let first_limit: Vec<f64> = (0..grid.len()).map(|i| scale[i] * etas[i]).collect();
    let mut limits = vec![("sqrt(t)*sigma_t*eta_t", first_limit.clone())];
    match &k_factor {
        Some(kf) => limits.push((
            "sqrt(t)*sigma_t*eta_t*k_t^((alpha-1)/alpha)",
            (0..grid.len()).map(|i| first_limit[i] * kf[i]).collect(),
        )),
        None => undetermined.push((
            AdditivityCondition::SmallTimeLimit,
            "alpha = 0 with time-varying k_t: second limit undefined".to_string(),
        )),
    }
    for (name, values) in limits {
        let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if peak > 0.0 && values[0].abs() / peak >= LIMIT_THRESHOLD {
            violations.push(Violation {
                condition: AdditivityCondition::SmallTimeLimit,
                t_from: 0.0,
                t_to: grid[0],
                detail: format!(
                    "{name} at t = {} is {:e} of its grid maximum (threshold {:e})",
                    grid[0],
                    values[0].abs() / peak,
                    LIMIT_THRESHOLD
                ),
            });
        }
    }

    for i in 1..grid.len() {
        let (v0, v1) = (scale[i - 1] * scale[i - 1], scale[i] * scale[i]);
        if v1 < v0 * (1.0 - MONOTONE_RTOL) {
            violations.push(Violation {
                condition: AdditivityCondition::VarianceNonDecreasing,
                t_from: grid[i - 1],
                t_to: grid[i],
                detail: format!("sigma_t^2 t decreases from {v0} to {v1}"),
            });
        }
    }

    Ok(AdditivityReport {
        grid_points: grid.len(),
        violations,
        strip_constant,
        undetermined,
        limit_threshold: LIMIT_THRESHOLD,
    })
}

/// Validates any [`AdditiveLaw`] on a grid.
pub fn validate_law<L: AdditiveLaw>(law: &L, grid: &[f64]) -> Result<AdditivityReport> {
    let vol = |t: f64| law.slice(t).scale / t.sqrt();
    let eta = |t: f64| law.slice(t).eta;
    let k = |t: f64| match law.slice(t).vol_of_vol {
        VolOfVol::Value(k) => k,
        VolOfVol::BachelierLimit => f64::INFINITY,
    };
    if law.slice(grid.first().copied().unwrap_or(1.0)).vol_of_vol.is_bachelier_limit() {
        // Gaussian additive process: only the variance condition is meaningful
        let scale: Vec<f64> = grid.iter().map(|&t| law.slice(t).scale).collect();
        let mut violations = Vec::new();
        for i in 1..grid.len() {
            if scale[i] < scale[i - 1] * (1.0 - MONOTONE_RTOL) {
                violations.push(Violation {
                    condition: AdditivityCondition::VarianceNonDecreasing,
                    t_from: grid[i - 1],
                    t_to: grid[i],
                    detail: format!("sigma_t^2 t decreases from {} to {}", scale[i - 1].powi(2), scale[i].powi(2)),
                });
            }
        }
        return Ok(AdditivityReport {
            grid_points: grid.len(),
            violations,
            strip_constant: true,
            undetermined: vec![],
            limit_threshold: LIMIT_THRESHOLD,
        });
    }
    validate_additivity(vol, eta, k, law.alpha(), grid)
}

/// Default validation grid: geometric from `1e-14` up to `t_max` merged with
/// the supplied knot times.
pub fn default_grid(t_max: f64, knots: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=80)
        .map(|i| 1e-14 * (t_max / 1e-14).powf(i as f64 / 80.0))
        .collect();
    g.extend(knots.iter().copied().filter(|&t| t > 0.0 && t <= t_max));
    g.sort_by(|a, b| a.total_cmp(b));
    g.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn psi_reference_values() {
        let z = psi(c(0.0, 0.0), VolOfVol::Value(1.0), Alpha::new(0.5).unwrap()).unwrap();
        assert_eq!(z, c(0.0, 0.0));
        let v = psi(c(1.0, 0.0), VolOfVol::Value(1.0), Alpha::GAMMA).unwrap();
        assert_relative_eq!(v.re, -std::f64::consts::LN_2, max_relative = 1e-15);
        let v = psi(c(1.0, 0.0), VolOfVol::Value(1.0), Alpha::INVERSE_GAUSSIAN).unwrap();
        assert_relative_eq!(v.re, -0.732_050_807_568_877_3, max_relative = 1e-15);
        // mpmath at a complex point, general alpha
        let v = psi(c(0.5, 0.25), VolOfVol::Value(0.7), Alpha::new(0.3).unwrap()).unwrap();
        assert_relative_eq!(v.re, -0.442_021_397_002_859_94, max_relative = 1e-14);
        assert_relative_eq!(v.im, -0.187_201_649_832_493_34, max_relative = 1e-14);
    }

    #[test]
    fn psi_bachelier_limit_is_minus_u() {
        let u = c(0.3, -1.7);
        assert_eq!(psi(u, VolOfVol::BachelierLimit, Alpha::GAMMA).unwrap(), -u);
    }

    #[test]
    fn psi_small_argument_has_no_cancellation() {
        // ψ(u) ≈ −u for |u k| ≪ 1
        for alpha in [Alpha::GAMMA, Alpha::INVERSE_GAUSSIAN] {
            let v = psi(c(1e-12, 0.0), VolOfVol::Value(2.0), alpha).unwrap();
            assert_relative_eq!(v.re, -1e-12, max_relative = 1e-10);
        }
    }

    #[test]
    fn psi_rejects_branch_cut() {
        let r = psi(c(-2.0, 0.0), VolOfVol::Value(1.0), Alpha::GAMMA);
        assert!(matches!(r, Err(Error::BranchCutViolation { .. })));
        let r = psi(c(-1.0, 0.0), VolOfVol::Value(1.0), Alpha::INVERSE_GAUSSIAN);
        assert!(matches!(r, Err(Error::BranchCutViolation { .. })));
    }

    #[test]
    fn alpha_and_k_reject_out_of_range() {
        assert!(Alpha::new(1.0).is_err());
        assert!(Alpha::new(-0.1).is_err());
        assert!(VolOfVol::new(0.0).is_err());
        assert!(VolOfVol::new(-1.0).is_err());
    }

    #[test]
    fn strip_reference_cases() {
        // η = 0, α = 1/2, k = 1 → √(2·(1/2)/1) = 1
        let (pm, pp) = normalized_strip(0.0, VolOfVol::Value(1.0), Alpha::INVERSE_GAUSSIAN);
        assert_relative_eq!(pm, 1.0);
        assert_relative_eq!(pp, 1.0);
        let (pm, pp) = normalized_strip(0.4, VolOfVol::Value(1.0), Alpha::INVERSE_GAUSSIAN);
        assert!(pp < pm);
        let model = ModelParams::new(
            VolCurve::flat(10.0).unwrap(),
            SmileParams::new(0.0, 1.0, 0.5).unwrap(),
        );
        let s = strip_bounds(0.25, &model);
        assert_relative_eq!(s.p_plus_t, 1.0 / 5.0, max_relative = 1e-15);
    }

    #[test]
    fn log_cf_outside_strip_is_rejected() {
        let model = ModelParams::new(
            VolCurve::flat(10.0).unwrap(),
            SmileParams::new(0.0, 1.0, 0.5).unwrap(),
        );
        // p⁺_t = 1/(10·1) at t = 1
        assert!(log_cf(c(0.0, 0.09), 1.0, &model).is_ok());
        assert!(matches!(log_cf(c(0.0, 0.11), 1.0, &model), Err(Error::OutsideStrip { .. })));
    }

    #[test]
    fn vol_curve_interpolates_total_variance() {
        let curve = VolCurve::new(vec![(0.5, 10.0), (1.0, 9.0)]).unwrap();
        assert_relative_eq!(curve.total_variance(0.25), 25.0);
        let mid = 0.5 * (50.0 + 81.0);
        assert_relative_eq!(curve.total_variance(0.75), mid);
        assert_relative_eq!(curve.sigma(3.0), 9.0);
        assert!(VolCurve::new(vec![(0.5, 10.0), (1.0, 5.0)]).is_err());
        assert!(VolCurve::new(vec![(1.0, 10.0), (0.5, 12.0)]).is_err());
    }

    #[test]
    fn serde_round_trip_of_params() {
        let model = ModelParams::new(
            VolCurve::new(vec![(0.5, 10.0), (1.0, 9.5)]).unwrap(),
            SmileParams::new(-0.6, 1.1, 0.5).unwrap(),
        );
        let json = serde_json::to_string(&model).unwrap();
        let back: ModelParams = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);
        let limit = ModelParams::new(model.sigma.clone(), SmileParams::bachelier_limit(Alpha::GAMMA));
        let json = serde_json::to_string(&limit).unwrap();
        assert!(json.contains("bachelier_limit"));
        assert_eq!(serde_json::from_str::<ModelParams>(&json).unwrap(), limit);
        assert!(serde_json::from_str::<ModelParams>(&json.replace("0.0", "1.5")).is_err());
    }
}
