//! Monte Carlo against the Fourier pricer, the Laplace transform of `G` and
//! the characteristic function.

use additive_bachelier::chf::{psi, Alpha, AdditiveLaw, ModelParams, SmileParams, VolCurve};
use additive_bachelier::mc::{
    asian_call_gaussian, ks_two_sample, mean_estimate, price_exotic, sample_g, sample_marginal, sample_paths,
    McOptions, PathGrid, Payoff, RngSpec,
};
use additive_bachelier::pricer::{lewis_call, QuadratureConfig};
use additive_bachelier::subordinator::GDistribution;
use num_complex::Complex64;

fn model(sigma: f64, eta: f64, k: f64, alpha: f64) -> ModelParams {
    ModelParams::new(VolCurve::flat(sigma).unwrap(), SmileParams::new(eta, k, alpha).unwrap())
}

fn within(est: f64, target: f64, se: f64, n_se: f64) -> bool {
    (est - target).abs() <= n_se * se
}

#[test]
fn gamma_moments() {
    let d = GDistribution::new(1.0, Alpha::GAMMA).unwrap();
    let g = sample_g(1_000_000, &d, RngSpec::new(11)).unwrap();
    let m = mean_estimate(&g);
    assert!((m.mean - 1.0).abs() < 0.004, "mean {}", m.mean);
    let var = g.iter().map(|x| (x - m.mean).powi(2)).sum::<f64>() / (g.len() - 1) as f64;
    assert!((var - 1.0).abs() < 0.01, "variance {var}");
    assert!(g.iter().all(|&x| x > 0.0));
}

#[test]
fn laplace_transform_of_g() {
    for (alpha, k) in [(Alpha::GAMMA, 0.8), (Alpha::INVERSE_GAUSSIAN, 1.5)] {
        let d = GDistribution::new(k, alpha).unwrap();
        let g = sample_g(200_000, &d, RngSpec::new(5)).unwrap();
        for u in [0.5, 1.0, 2.0] {
            let e = mean_estimate(&g.iter().map(|x| (-u * x).exp()).collect::<Vec<_>>());
            let exact = psi(Complex64::new(u, 0.0), d_vol(k), alpha).unwrap().re.exp();
            assert!(within(e.mean, exact, e.std_error, 3.0), "α={alpha:?} u={u}: {} vs {exact}", e.mean);
        }
    }
}

fn d_vol(k: f64) -> additive_bachelier::VolOfVol {
    additive_bachelier::VolOfVol::new(k).unwrap()
}

#[test]
fn small_k_concentrates_at_one() {
    let d = GDistribution::new(1e-4, Alpha::INVERSE_GAUSSIAN).unwrap();
    let g = sample_g(100_000, &d, RngSpec::new(9)).unwrap();
    let m = mean_estimate(&g);
    let var = g.iter().map(|x| (x - m.mean).powi(2)).sum::<f64>() / (g.len() - 1) as f64;
    assert!((m.mean - 1.0).abs() < 1e-3);
    assert!((var / 1e-4 - 1.0).abs() < 0.05, "variance {var}");
}

#[test]
fn marginal_european_matches_fourier_price() {
    let cfg = QuadratureConfig::default();
    let (x, t) = (5.0, 0.5);
    for p in [model(10.0, -0.6, 1.1, 0.5), model(10.0, 0.4, 0.5, 0.0)] {
        let f = sample_marginal(t, &p, 1_000_000, RngSpec::new(21)).unwrap();
        let e = mean_estimate(&f.iter().map(|v| (v - x).max(0.0)).collect::<Vec<_>>());
        let exact = lewis_call(x, t, 1.0, &p, &cfg).unwrap();
        assert!(within(e.mean, exact, e.std_error, 3.0), "{} ± {} vs {exact}", e.mean, e.std_error);
        // martingale
        let m = mean_estimate(&f);
        assert!(within(m.mean, 0.0, m.std_error, 3.0));
    }
}

#[test]
fn marginal_characteristic_function() {
    let p = model(1.0, -0.5, 1.0, 0.5);
    let t = 1.0;
    let f = sample_marginal(t, &p, 400_000, RngSpec::new(3)).unwrap();
    for u in [0.5, 1.0] {
        let exact = p.log_cf(Complex64::new(u, 0.0), t).unwrap().exp();
        let re = mean_estimate(&f.iter().map(|x| (u * x).cos()).collect::<Vec<_>>());
        let im = mean_estimate(&f.iter().map(|x| (u * x).sin()).collect::<Vec<_>>());
        assert!(within(re.mean, exact.re, re.std_error, 3.0), "Re at u={u}");
        assert!(within(im.mean, exact.im, im.std_error, 3.0), "Im at u={u}");
    }
}

#[test]
fn bachelier_limit_marginal_is_gaussian() {
    let p = ModelParams::new(VolCurve::flat(4.0).unwrap(), SmileParams::bachelier_limit(Alpha::GAMMA));
    let n = 400_000;
    let f = sample_marginal(1.0, &p, n, RngSpec::new(8)).unwrap();
    let m = f.iter().sum::<f64>() / n as f64;
    let c = |k: i32| f.iter().map(|x| (x - m).powi(k)).sum::<f64>() / n as f64;
    let (m2, m3, m4) = (c(2), c(3), c(4));
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2) - 3.0;
    assert!(skew.abs() < 3.0 * (6.0 / n as f64).sqrt(), "skew {skew}");
    assert!(kurt.abs() < 3.0 * (24.0 / n as f64).sqrt(), "excess kurtosis {kurt}");
}

#[test]
fn terminal_path_law_matches_marginal() {
    for p in [model(8.0, -0.6, 1.1, 0.5), model(8.0, 0.3, 0.6, 0.0)] {
        let grid = PathGrid::new(vec![0.25, 0.5, 1.0], 100_000).unwrap();
        let paths = sample_paths(&grid, &p, 0.0, RngSpec::new(1)).unwrap();
        let marg = sample_marginal(1.0, &p, 100_000, RngSpec::new(2)).unwrap();
        let ks = ks_two_sample(&paths.column(2), &marg);
        assert!(ks.passes(), "KS {} ≥ {}", ks.statistic, ks.critical);
        let mid = sample_marginal(0.5, &p, 100_000, RngSpec::new(4)).unwrap();
        assert!(ks_two_sample(&paths.column(1), &mid).passes());
    }
}

#[test]
fn single_date_paths_match_marginal() {
    let p = model(8.0, -0.6, 1.1, 0.5);
    let grid = PathGrid::new(vec![0.7], 100_000).unwrap();
    let paths = sample_paths(&grid, &p, 0.0, RngSpec::new(6)).unwrap();
    let marg = sample_marginal(0.7, &p, 100_000, RngSpec::new(6)).unwrap();
    // one monitoring date draws the exact marginal from the same streams
    assert_eq!(paths.values, marg);
}

#[test]
fn paths_are_martingales() {
    let p = model(8.0, -0.6, 1.1, 0.5);
    let grid = PathGrid::uniform(1.0, 6, 100_000).unwrap();
    let paths = sample_paths(&grid, &p, 20.0, RngSpec::new(13)).unwrap();
    for j in 0..grid.times.len() {
        let m = mean_estimate(&paths.column(j));
        assert!(within(m.mean, 20.0, m.std_error, 3.0), "date {j}: {}", m.mean);
        if j > 0 {
            let prev = paths.column(j - 1);
            let inc: Vec<f64> = paths.column(j).iter().zip(&prev).map(|(a, b)| a - b).collect();
            let m = mean_estimate(&inc);
            assert!(within(m.mean, 0.0, m.std_error, 3.0), "increment {j}: {}", m.mean);
        }
    }
}

#[test]
fn path_european_matches_fourier_price() {
    let cfg = QuadratureConfig::default();
    let p = model(10.0, -0.6, 1.1, 0.5);
    let grid = PathGrid::uniform(0.5, 4, 200_000).unwrap();
    let e = price_exotic(
        &Payoff::EuropeanCall { strike: 25.0 },
        &grid,
        &p,
        20.0,
        0.98,
        RngSpec::new(17),
        McOptions::default(),
    )
    .unwrap();
    let exact = lewis_call(5.0, 0.5, 0.98, &p, &cfg).unwrap();
    assert!(within(e.mean, exact, e.std_error, 3.0), "{} ± {} vs {exact}", e.mean, e.std_error);
}

#[test]
fn antithetic_estimate_is_consistent_and_tighter() {
    let cfg = QuadratureConfig::default();
    let p = model(10.0, 0.0, 0.5, 0.0);
    let grid = PathGrid::uniform(0.5, 2, 200_000).unwrap();
    let pay = Payoff::EuropeanCall { strike: 20.0 };
    let plain = price_exotic(&pay, &grid, &p, 20.0, 1.0, RngSpec::new(2), McOptions::default()).unwrap();
    let anti = price_exotic(&pay, &grid, &p, 20.0, 1.0, RngSpec::new(2), McOptions { antithetic: true }).unwrap();
    let exact = lewis_call(0.0, 0.5, 1.0, &p, &cfg).unwrap();
    assert!(within(anti.mean, exact, anti.std_error, 3.0));
    assert!(anti.std_error < plain.std_error);
}

#[test]
fn gaussian_asian_matches_closed_form() {
    let sigma = VolCurve::flat(6.0).unwrap();
    let p = ModelParams::new(sigma.clone(), SmileParams::bachelier_limit(Alpha::INVERSE_GAUSSIAN));
    let mut exact_by_n = Vec::new();
    for n in [2, 4, 8] {
        let grid = PathGrid::uniform(1.0, n, 200_000).unwrap();
        let exact = asian_call_gaussian(&grid.times, &sigma, 50.0, 51.0, 0.99);
        let e = price_exotic(
            &Payoff::AsianCall { strike: 51.0 },
            &grid,
            &p,
            50.0,
            0.99,
            RngSpec::new(n as u64),
            McOptions::default(),
        )
        .unwrap();
        assert!(within(e.mean, exact, e.std_error, 3.0), "n={n}: {} vs {exact}", e.mean);
        exact_by_n.push(exact);
    }
    // discretization bias toward the continuous average shrinks like 1/n
    let d1 = exact_by_n[0] - exact_by_n[1];
    let d2 = exact_by_n[1] - exact_by_n[2];
    assert!(d1 > 0.0 && d2 > 0.0);
    assert!((d1 / d2 - 2.0).abs() < 0.3, "ratio {}", d1 / d2);
}

#[test]
fn barrier_is_cheaper_than_european() {
    let p = model(10.0, -0.6, 1.1, 0.5);
    let grid = PathGrid::uniform(0.5, 8, 50_000).unwrap();
    let run = |pay: Payoff| price_exotic(&pay, &grid, &p, 20.0, 1.0, RngSpec::new(4), McOptions::default()).unwrap();
    let eu = run(Payoff::EuropeanCall { strike: 20.0 });
    let ko = run(Payoff::BarrierKoCall {
        strike: 20.0,
        barrier: 15.0,
    });
    assert!(ko.mean < eu.mean);
    assert!(ko.mean > 0.0);
}

#[test]
fn standard_error_scales_with_root_n() {
    let p = model(10.0, -0.6, 1.1, 0.5);
    let pay = Payoff::EuropeanCall { strike: 22.0 };
    let se = |n| {
        let grid = PathGrid::uniform(0.5, 2, n).unwrap();
        price_exotic(&pay, &grid, &p, 20.0, 1.0, RngSpec::new(99), McOptions::default())
            .unwrap()
            .std_error
    };
    let ratio = se(50_000) / se(200_000);
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn fixed_seed_is_reproducible() {
    let p = model(10.0, 0.3, 0.6, 0.0);
    let grid = PathGrid::uniform(1.0, 3, 20_000).unwrap();
    let a = sample_paths(&grid, &p, 10.0, RngSpec::new(77)).unwrap();
    let b = sample_paths(&grid, &p, 10.0, RngSpec::new(77)).unwrap();
    assert_eq!(
        a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = pool.install(|| sample_paths(&grid, &p, 10.0, RngSpec::new(77)).unwrap());
    assert_eq!(a.values, c.values);
}
