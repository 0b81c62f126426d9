//! Seedable Monte Carlo for the Additive Bachelier model.
//!
//! Marginals are sampled exactly from `f_t = σ_t√t·(η(1 − G) − √G·g)`.
//! Paths use that exact draw for the first monitoring date and independent
//! tabulated increments ([`increments`]) afterwards.
//!
//! Paths are generated in fixed-size blocks; block `b` draws from the ChaCha
//! stream `(stream << 32) | b` of the user seed, so results do not depend on
//! how blocks are scheduled across threads.

pub mod increments;
pub mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bachelier::bachelier_call;
use crate::chf::{AdditiveLaw, Alpha, SliceParams, VolCurve, VolOfVol};
use crate::error::{Error, Result};
use crate::subordinator::{GDistribution, GFamily};

pub use increments::{increment_law, IncrementLaw};
pub use stats::{empirical_cf, ks_two_sample, mean_estimate, KsResult, MeanEstimate};

/// Paths per RNG block.
pub const BLOCK_SIZE: usize = 4096;

/// Seed and stream of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Generator of block `block`.
    pub fn block_rng(&self, block: usize) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream((self.stream << 32) | block as u64);
        r
    }
}

fn blocks(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(BLOCK_SIZE))
        .map(|b| (b, BLOCK_SIZE.min(n - b * BLOCK_SIZE)))
        .collect()
}

/// Per-path draw of `G`.
#[derive(Debug, Clone, Copy)]
enum GSampler {
    One,
    Gamma(Gamma<f64>),
    InverseGaussian(InverseGaussian<f64>),
}

impl GSampler {
    fn new(vol_of_vol: VolOfVol, alpha: Alpha) -> Result<Self> {
        let k = match vol_of_vol {
            VolOfVol::BachelierLimit => return Ok(GSampler::One),
            VolOfVol::Value(k) => k,
        };
        let unsupported = || Error::UnsupportedAlpha { alpha: alpha.value() };
        match GDistribution::new(k, alpha)?.family {
            GFamily::Gamma => Ok(GSampler::Gamma(Gamma::new(1.0 / k, k).map_err(|_| unsupported())?)),
            GFamily::InverseGaussian => Ok(GSampler::InverseGaussian(
                InverseGaussian::new(1.0, 1.0 / k).map_err(|_| unsupported())?,
            )),
            GFamily::TemperedStable => Err(unsupported()),
        }
    }

    #[inline]
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            GSampler::One => 1.0,
            GSampler::Gamma(d) => d.sample(rng),
            GSampler::InverseGaussian(d) => d.sample(rng),
        }
    }
}

/// `n` draws of `G` (unit mean, variance `k`).
pub fn sample_g(n: usize, dist: &GDistribution, rng: RngSpec) -> Result<Vec<f64>> {
    let sampler = GSampler::new(VolOfVol::new(dist.k)?, dist.alpha)?;
    Ok(blocks(n)
        .into_par_iter()
        .map(|(b, len)| {
            let mut r = rng.block_rng(b);
            (0..len).map(|_| sampler.sample(&mut r)).collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>()
        .concat())
}

/// Exact sampler of `f_t` for one slice.
#[derive(Debug, Clone, Copy)]
struct MarginalSampler {
    scale: f64,
    eta: f64,
    g: GSampler,
}

impl MarginalSampler {
    fn new(slice: &SliceParams) -> Result<Self> {
        Ok(Self {
            scale: slice.scale,
            eta: slice.eta,
            g: GSampler::new(slice.vol_of_vol, slice.alpha)?,
        })
    }

    #[inline]
    fn sample<R: Rng>(&self, rng: &mut R, antithetic: Option<&mut Option<(f64, f64)>>) -> f64 {
        let (g, n) = match antithetic {
            // reuse the previous path's draws with the normal reflected
            Some(slot) => match slot.take() {
                Some((g, n)) => (g, -n),
                None => {
                    let g = self.g.sample(rng);
                    let n: f64 = StandardNormal.sample(rng);
                    *slot = Some((g, n));
                    (g, n)
                }
            },
            None => (self.g.sample(rng), StandardNormal.sample(rng)),
        };
        self.scale * (self.eta * (1.0 - g) - g.sqrt() * n)
    }
}

/// `n` draws of `f_t = F_t − F_0`.
pub fn sample_marginal<L: AdditiveLaw>(t: f64, law: &L, n: usize, rng: RngSpec) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("must be positive, got {t}")));
    }
    let sampler = MarginalSampler::new(&law.slice(t))?;
    Ok(blocks(n)
        .into_par_iter()
        .map(|(b, len)| {
            let mut r = rng.block_rng(b);
            (0..len).map(|_| sampler.sample(&mut r, None)).collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>()
        .concat())
}

/// Monitoring dates and path count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    pub times: Vec<f64>,
    pub n_paths: usize,
}

impl PathGrid {
    pub fn new(times: Vec<f64>, n_paths: usize) -> Result<Self> {
        if times.is_empty() || !(times[0] > 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("times", "must be strictly increasing and positive"));
        }
        if n_paths == 0 {
            return Err(Error::invalid("n_paths", "at least one path required"));
        }
        Ok(Self { times, n_paths })
    }

    /// `n` equally spaced dates ending at `maturity`.
    pub fn uniform(maturity: f64, n: usize, n_paths: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| maturity * i as f64 / n as f64).collect(), n_paths)
    }

    pub fn maturity(&self) -> f64 {
        self.times[self.times.len() - 1]
    }
}

/// Path-simulation switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct McOptions {
    /// Pair consecutive paths with reflected normals / uniforms.
    pub antithetic: bool,
}

/// Simulated forward values, row-major (`path × time`).
#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    pub times: Vec<f64>,
    pub n_paths: usize,
    pub values: Vec<f64>,
}

impl Paths {
    pub fn path(&self, i: usize) -> &[f64] {
        let m = self.times.len();
        &self.values[i * m..(i + 1) * m]
    }

    /// Values at monitoring date `j` across paths.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.path(i)[j]).collect()
    }
}

/// Everything needed to draw paths on a grid, built once.
struct PathSampler {
    first: MarginalSampler,
    steps: Vec<IncrementLaw>,
    f0: f64,
    options: McOptions,
}

impl PathSampler {
    fn new<L: AdditiveLaw>(grid: &PathGrid, law: &L, f0: f64, options: McOptions) -> Result<Self> {
        let first = MarginalSampler::new(&law.slice(grid.times[0]))?;
        let steps = grid
            .times
            .windows(2)
            .map(|w| increment_law(law, w[0], w[1]))
            .collect::<Result<_>>()?;
        Ok(Self {
            first,
            steps,
            f0,
            options,
        })
    }

    fn fill_block(&self, rng: &mut ChaCha8Rng, len: usize, out: &mut Vec<f64>) {
        let mut first_slot = None;
        let mut uniforms: Vec<(f64, f64)> = Vec::new();
        for p in 0..len {
            let anti = self.options.antithetic && p % 2 == 1;
            let slot = self.options.antithetic.then_some(&mut first_slot);
            let mut f = self.f0 + self.first.sample(rng, slot);
            out.push(f);
            if !anti {
                uniforms.clear();
            }
            for (j, step) in self.steps.iter().enumerate() {
                let inc = match step {
                    IncrementLaw::Gaussian { sd } => {
                        let (v, _) = self.uniform_pair(rng, anti, &mut uniforms, j, true);
                        sd * v
                    }
                    IncrementLaw::Tabulated(t) => {
                        let (v, w) = self.uniform_pair(rng, anti, &mut uniforms, j, false);
                        t.sample(v, w)
                    }
                };
                f += inc;
                out.push(f);
            }
        }
    }

    /// Draws (or, for the antithetic partner, reflects) the random inputs of
    /// step `j`. Gaussian steps store a normal in the first slot.
    fn uniform_pair(
        &self,
        rng: &mut ChaCha8Rng,
        anti: bool,
        store: &mut Vec<(f64, f64)>,
        j: usize,
        gaussian: bool,
    ) -> (f64, f64) {
        if anti {
            let (v, w) = store[j];
            return if gaussian { (-v, w) } else { (v, 1.0 - w) };
        }
        let pair = if gaussian {
            (StandardNormal.sample(rng), 0.0)
        } else {
            (rng.random::<f64>(), rng.random::<f64>())
        };
        store.push(pair);
        pair
    }
}

/// Simulates `grid.n_paths` paths of `F_t` started at `f0`.
pub fn sample_paths<L: AdditiveLaw>(grid: &PathGrid, law: &L, f0: f64, rng: RngSpec) -> Result<Paths> {
    sample_paths_with(grid, law, f0, rng, McOptions::default())
}

pub fn sample_paths_with<L: AdditiveLaw>(
    grid: &PathGrid,
    law: &L,
    f0: f64,
    rng: RngSpec,
    options: McOptions,
) -> Result<Paths> {
    let sampler = PathSampler::new(grid, law, f0, options)?;
    let m = grid.times.len();
    let values = blocks(grid.n_paths)
        .into_par_iter()
        .map(|(b, len)| {
            let mut r = rng.block_rng(b);
            let mut out = Vec::with_capacity(len * m);
            sampler.fill_block(&mut r, len, &mut out);
            out
        })
        .collect::<Vec<_>>()
        .concat();
    Ok(Paths {
        times: grid.times.clone(),
        n_paths: grid.n_paths,
        values,
    })
}

/// Path functionals with a closed list of shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Payoff {
    /// `(F_T − K)⁺` at the last monitoring date.
    EuropeanCall { strike: f64 },
    /// `(mean_j F_{t_j} − K)⁺`.
    AsianCall { strike: f64 },
    /// `(F_T − K)⁺` unless some monitored `F_{t_j} ≤ barrier`.
    BarrierKoCall { strike: f64, barrier: f64 },
    /// Pays the constant at maturity.
    Constant { amount: f64 },
}

impl Payoff {
    pub fn value(&self, path: &[f64]) -> f64 {
        let last = path[path.len() - 1];
        match *self {
            Payoff::EuropeanCall { strike } => (last - strike).max(0.0),
            Payoff::AsianCall { strike } => (path.iter().sum::<f64>() / path.len() as f64 - strike).max(0.0),
            Payoff::BarrierKoCall { strike, barrier } => {
                if path.iter().any(|&f| f <= barrier) {
                    0.0
                } else {
                    (last - strike).max(0.0)
                }
            }
            Payoff::Constant { amount } => amount,
        }
    }
}

/// Discounted Monte Carlo price `B₀(T)·mean(payoff)` and its standard error.
pub fn price_exotic<L: AdditiveLaw>(
    payoff: &Payoff,
    grid: &PathGrid,
    law: &L,
    f0: f64,
    discount: f64,
    rng: RngSpec,
    options: McOptions,
) -> Result<MeanEstimate> {
    let sampler = PathSampler::new(grid, law, f0, options)?;
    let m = grid.times.len();
    let partials: Vec<stats::Accumulator> = blocks(grid.n_paths)
        .into_par_iter()
        .map(|(b, len)| {
            let mut r = rng.block_rng(b);
            let mut out = Vec::with_capacity(len * m);
            sampler.fill_block(&mut r, len, &mut out);
            let mut acc = stats::Accumulator::default();
            if options.antithetic {
                // pair averages are the independent samples
                for pair in out.chunks(2 * m) {
                    let v: f64 = pair.chunks(m).map(|p| payoff.value(p)).sum::<f64>() / (pair.len() / m) as f64;
                    acc.push(v);
                }
            } else {
                for p in out.chunks(m) {
                    acc.push(payoff.value(p));
                }
            }
            acc
        })
        .collect();
    let mut total = stats::Accumulator::default();
    for p in &partials {
        total.merge(p);
    }
    let est = total.estimate();
    Ok(MeanEstimate {
        mean: discount * est.mean,
        std_error: discount * est.std_error,
        n: est.n,
    })
}

/// Arithmetic-average Asian call when `F` is Gaussian (Bachelier limit):
/// the average is normal with variance `n⁻²·Σᵢⱼ σ²_{min(tᵢ,tⱼ)}·min(tᵢ,tⱼ)`,
/// so the Bachelier formula prices it exactly.
pub fn asian_call_gaussian(times: &[f64], sigma: &VolCurve, f0: f64, strike: f64, discount: f64) -> f64 {
    let n = times.len() as f64;
    let mut var = 0.0;
    for &a in times {
        for &b in times {
            var += sigma.total_variance(a.min(b));
        }
    }
    var /= n * n;
    bachelier_call(strike - f0, 1.0, discount, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chf::{ModelParams, SmileParams};

    #[test]
    fn identical_specs_give_identical_draws() {
        let d = GDistribution::new(0.7, Alpha::INVERSE_GAUSSIAN).unwrap();
        let a = sample_g(10_000, &d, RngSpec::new(42)).unwrap();
        let b = sample_g(10_000, &d, RngSpec::new(42)).unwrap();
        assert_eq!(a, b);
        let c = sample_g(10_000, &d, RngSpec::new(42).with_stream(1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn general_alpha_is_unsupported() {
        let d = GDistribution::new(0.7, Alpha::new(0.3).unwrap()).unwrap();
        assert!(matches!(sample_g(10, &d, RngSpec::new(1)), Err(Error::UnsupportedAlpha { .. })));
    }

    #[test]
    fn constant_payoff_is_the_discount_factor() {
        let p = ModelParams::new(VolCurve::flat(10.0).unwrap(), SmileParams::new(-0.3, 0.5, 0.5).unwrap());
        let grid = PathGrid::uniform(1.0, 4, 1000).unwrap();
        let e = price_exotic(
            &Payoff::Constant { amount: 1.0 },
            &grid,
            &p,
            20.0,
            0.97,
            RngSpec::new(3),
            McOptions::default(),
        )
        .unwrap();
        assert_eq!(e.mean, 0.97);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn asian_formula_with_one_date_is_european() {
        let s = VolCurve::flat(8.0).unwrap();
        let a = asian_call_gaussian(&[0.5], &s, 20.0, 21.0, 0.99);
        assert!((a - bachelier_call(1.0, 0.5, 0.99, 8.0)).abs() < 1e-14);
    }
}
