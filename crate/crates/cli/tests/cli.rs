//! End-to-end runs of the `abach` binary on the shipped fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use additive_bachelier::smile::atm_level;
use additive_bachelier::marketio::load_result;
use additive_bachelier::{bachelier_call, lewis_call, ModelParams, QuadratureConfig, SmileParams, VolCurve};
use additive_bachelier_cli::config::RunConfig;
use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn abach(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abach")).args(args).output().unwrap()
}

fn ok_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}, stderr {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_code(out: &Output) -> (i32, String) {
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    let e = &v["error"];
    assert_eq!(e["exit_code"].as_i64().unwrap() as i32, out.status.code().unwrap());
    (out.status.code().unwrap(), e["code"].as_str().unwrap().to_string())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// Non-comment lines of a CSV output.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const MODEL: &str = r#"{"sigma":{"knots":[[0.25,12.0],[0.5,11.0],[1.0,10.0]]},"eta":-0.6,"k":1.1,"alpha":0.5}"#;

fn model() -> ModelParams {
    ModelParams::new(
        VolCurve::new(vec![(0.25, 12.0), (0.5, 11.0), (1.0, 10.0)]).unwrap(),
        SmileParams::new(-0.6, 1.1, 0.5).unwrap(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn calibrate_recovers_the_fixture_parameters() {
    let dir = TempDir::new().unwrap();
    let out = abach(&[
        "calibrate",
        "--chain",
        s(&fixture("chain_spread2.csv")),
        "--ois",
        s(&fixture("ois.csv")),
        "--out",
        s(dir.path()),
    ]);
    let v = ok_json(&out);
    assert!((v["eta"].as_f64().unwrap() + 0.6).abs() < 1e-3, "{}", v["eta"]);
    assert!((v["k"].as_f64().unwrap() - 1.1).abs() < 1e-3, "{}", v["k"]);
    assert_eq!(v["config"]["alpha"], 0.5);
    assert_eq!(v["config"]["window"], 30.0);
    assert_eq!(v["config"]["spread_threshold_bps"], 20.0);

    let r = load_result(dir.path().join("result.json")).unwrap();
    assert_eq!(r.eta, v["eta"].as_f64().unwrap());
    assert_eq!(r.expiries.len(), 9);
    for e in &r.expiries {
        let rows = csv_rows(&dir.path().join(format!("smile_{}.csv", e.quotes.expiry)));
        assert_eq!(rows.len(), e.quotes.len());
        for row in rows {
            let (market, model): (f64, f64) = (row[5].parse().unwrap(), row[6].parse().unwrap());
            assert!((market / model - 1.0).abs() < 1e-4, "{row:?}");
        }
    }
    let atm = csv_rows(&dir.path().join("atm_term_structure.csv"));
    assert_eq!(atm.len(), 9);
    let saved = RunConfig::default().to_key_value();
    assert_eq!(std::fs::read_to_string(dir.path().join("run_config.txt")).unwrap(), saved);
}

#[test]
fn missing_ois_curve_has_its_own_exit_code() {
    let dir = TempDir::new().unwrap();
    let chain = fixture("chain_spread2.csv");
    for extra in [vec![], vec!["--ois", "/nonexistent/ois.csv"]] {
        let mut args = vec!["calibrate", "--chain", s(&chain), "--out", s(dir.path())];
        args.extend(extra);
        let out = abach(&args);
        assert_eq!(error_code(&out), (42, "calib.MissingOisCurve".to_string()));
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn both_alphas_calibrate_and_reruns_are_byte_identical() {
    let run = |alpha: &str| {
        let dir = TempDir::new().unwrap();
        let out = abach(&[
            "calibrate",
            "--chain",
            s(&fixture("chain_spread300.csv")),
            "--ois",
            s(&fixture("ois.csv")),
            "--alpha",
            alpha,
            "--window",
            "8",
            "--out",
            s(dir.path()),
        ]);
        let v = ok_json(&out);
        (v, out.stdout, dir)
    };
    let (half, stdout_a, dir_a) = run("0.5");
    let (gamma, _, _) = run("0");
    assert_eq!(half["alpha"], 0.5);
    assert_eq!(gamma["alpha"], 0.0);
    assert!(half["eta"] != gamma["eta"] && half["k"] != gamma["k"]);
    for v in [&half, &gamma] {
        // the wide first-expiry spread drops one expiry
        assert_eq!(v["excluded"].as_array().unwrap().len(), 1);
        let expiries = v["expiries"].as_array().unwrap();
        assert_eq!(expiries.len(), 8);
        assert!(expiries.iter().all(|e| e["mse"].as_f64().unwrap() >= 0.0));
    }

    let (_, stdout_b, dir_b) = run("0.5");
    assert_eq!(stdout_a, stdout_b);
    let names: Vec<String> = half["outputs"].as_array().unwrap().iter().map(|n| n.as_str().unwrap().to_string()).collect();
    for name in names {
        let a = std::fs::read(dir_a.path().join(&name)).unwrap();
        let b = std::fs::read(dir_b.path().join(&name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn bachelier_limit_prices_match_the_closed_form() {
    let dir = TempDir::new().unwrap();
    let params = write(dir.path(), "p.json", r#"{"sigma":{"knots":[[1.0,10.0]]},"eta":0.0,"k":"bachelier_limit","alpha":0.5}"#);
    let mut list = String::from("t,strike,forward,discount\n");
    for t in [0.1, 0.5, 1.0, 2.0] {
        for i in -12..=12 {
            list.push_str(&format!("{t},{},20,0.97\n", 20.0 + 2.5 * i as f64));
        }
    }
    let list = write(dir.path(), "list.csv", &list);
    ok_json(&abach(&["price", "--params", &params, "--list", &list, "--out", s(dir.path())]));
    let rows = csv_rows(&dir.path().join("prices.csv"));
    assert_eq!(rows.len(), 100);
    for row in rows {
        let f = |i: usize| row[i].parse::<f64>().unwrap();
        let (t, x, call, iv) = (f(0), f(4), f(5), f(7));
        let exact = bachelier_call(x, t, 0.97, 10.0);
        assert!((call / exact - 1.0).abs() < 1e-6, "{row:?}");
        assert!((iv - 10.0).abs() < 1e-6, "{row:?}");
        assert!(row[11].is_empty());
    }
}

#[test]
fn empty_price_list_gives_an_empty_table() {
    let dir = TempDir::new().unwrap();
    let params = write(dir.path(), "p.json", MODEL);
    let list = write(dir.path(), "list.csv", "t,strike\n");
    let v = ok_json(&abach(&["price", "--params", &params, "--list", &list, "--out", s(dir.path())]));
    assert_eq!(v["rows"], 0);
    let text = std::fs::read_to_string(dir.path().join("prices.csv")).unwrap();
    assert_eq!(text, RunConfig::default().csv_comment() + "t,strike,forward,discount,x,call,put,implied_vol,delta,gamma,vega,error\n");
}

#[test]
fn at_the_money_implied_vol_is_sigma_times_i0() {
    let dir = TempDir::new().unwrap();
    let params = write(dir.path(), "p.json", MODEL);
    let list = write(dir.path(), "list.csv", "t,strike,forward\n0.1,3,3\n0.25,0,0\n0.7,-2,-2\n1.5,50,50\n");
    ok_json(&abach(&["price", "--params", &params, "--list", &list, "--out", s(dir.path())]));
    let p = model();
    let i0 = atm_level(&p.smile()).unwrap();
    for row in csv_rows(&dir.path().join("prices.csv")) {
        let t: f64 = row[0].parse().unwrap();
        let iv: f64 = row[7].parse().unwrap();
        let expected = p.sigma.sigma(t) * i0;
        assert!((iv / expected - 1.0).abs() < 1e-9, "t = {t}: {iv} vs {expected}");
    }
}

#[test]
fn contour_outside_the_strip_is_reported_per_row() {
    let dir = TempDir::new().unwrap();
    let params = write(dir.path(), "p.json", MODEL);
    let config = write(dir.path(), "run.cfg", "# far outside the strip\nquadrature.contour = fixed:100\n");
    let list = write(dir.path(), "list.csv", "t,strike\n0.5,1\n0.5,2\n");
    let v = ok_json(&abach(&[
        "price", "--params", &params, "--list", &list, "--config", &config, "--out", s(dir.path()),
    ]));
    assert_eq!(v["row_errors"], 2);
    for row in csv_rows(&dir.path().join("prices.csv")) {
        assert_eq!(row[11], "corechf.OutsideStrip");
        assert!(row[5].is_empty());
    }
}

#[test]
fn simulated_european_call_matches_the_lewis_price() {
    let dir = TempDir::new().unwrap();
    let params = write(dir.path(), "p.json", MODEL);
    let v = ok_json(&abach(&[
        "simulate", "--params", &params, "--payoff", "european_call", "--strike", "5", "--maturity", "0.5",
        "--dates", "6", "--paths", "400000", "--discount", "0.98", "--out", s(dir.path()),
    ]));
    let exact = lewis_call(5.0, 0.5, 0.98, &model(), &QuadratureConfig::default()).unwrap();
    let (price, se) = (v["price"].as_f64().unwrap(), v["std_error"].as_f64().unwrap());
    assert!((price - exact).abs() < 3.0 * se, "{price} ± {se} vs {exact}");
    let conv = v["convergence"].as_array().unwrap();
    assert_eq!(conv.last().unwrap()["n_paths"], 400_000);
    // standard errors roughly halve as the path count quadruples
    for w in conv.windows(2) {
        let r = w[0]["std_error"].as_f64().unwrap() / w[1]["std_error"].as_f64().unwrap();
        assert!((r - 2.0).abs() < 0.4, "SE ratio {r}");
    }
}

#[test]
fn simulation_is_deterministic_and_an_inactive_barrier_changes_nothing() {
    let dir = TempDir::new().unwrap();
    let params = write(dir.path(), "p.json", MODEL);
    let run = |payoff: &[&str], out: &str| {
        let out_dir = dir.path().join(out);
        let mut args = vec!["simulate", "--params", &params, "--strike", "4", "--maturity", "1", "--dates", "12"];
        args.extend_from_slice(&["--paths", "50000", "--out", out_dir.to_str().unwrap()]);
        args.extend_from_slice(payoff);
        let o = abach(&args);
        let v = ok_json(&o);
        (v, o.stdout, std::fs::read(out_dir.join("simulation.json")).unwrap())
    };
    let (euro, a, file_a) = run(&["--payoff", "european_call", "--seed", "9"], "a");
    let (_, b, file_b) = run(&["--payoff", "european_call", "--seed", "9"], "b");
    assert_eq!(a, b);
    assert_eq!(file_a, file_b);
    let (barrier, _, _) = run(&["--payoff", "barrier_ko_call", "--barrier=-inf", "--seed", "9"], "c");
    let se = euro["std_error"].as_f64().unwrap();
    assert!((barrier["price"].as_f64().unwrap() - euro["price"].as_f64().unwrap()).abs() <= se);
    let (seeded, _, _) = run(&["--payoff", "european_call", "--seed", "10"], "d");
    assert_ne!(seeded["price"], euro["price"]);
}

fn validate(dir: &Path, params: &str) -> Value {
    let p = write(dir, "v.json", params);
    ok_json(&abach(&["validate", "--params", &p, "--json", "--out", s(dir)]))
}

#[test]
fn validation_reports() {
    let dir = TempDir::new().unwrap();
    let clean = validate(dir.path(), MODEL);
    assert_eq!(clean["clean"], true);
    assert_eq!(clean["butterfly"]["findings"].as_array().unwrap().len(), 0);
    assert_eq!(clean["strips"].as_array().unwrap().len(), 3);

    let decreasing = validate(
        dir.path(),
        r#"{"sigma":{"knots":[[0.25,12.0],[0.5,8.0],[1.0,10.0]]},"eta":-0.6,"k":1.1,"alpha":0.5}"#,
    );
    assert_eq!(decreasing["clean"], false);
    let conditions: Vec<&str> = decreasing["additivity"]["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["condition"].as_str().unwrap())
        .collect();
    assert!(conditions.contains(&"variance_non_decreasing"), "{conditions:?}");

    let levy = validate(dir.path(), r#"{"sigma_hat":10.0,"eta_hat":-0.4,"k_hat":0.8,"alpha":0.5}"#);
    assert_eq!(levy["clean"], true);
    assert_eq!(levy["additivity"]["strip_constant"], true);
    assert!(levy["notes"][0].as_str().unwrap().contains("constant in time"));

    let text = abach(&["validate", "--params", s(&dir.path().join("v.json")), "--out", s(dir.path())]);
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.starts_with("validation: clean\n"));
    assert!(text.contains("note: p+_t and p-_t are constant in time"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let params = write(dir.path(), "p.json", MODEL);
    let list = write(dir.path(), "list.csv", "t,strike\n");
    let config = write(dir.path(), "run.cfg", "alpha = 0\nwindow = 12\nseed = 5\n");
    let v = ok_json(&abach(&[
        "price", "--params", &params, "--list", &list, "--config", &config, "--alpha", "0.5", "--out", s(dir.path()),
    ]));
    assert_eq!(v["config"]["alpha"], 0.5);
    assert_eq!(v["config"]["window"], 12.0);
    assert_eq!(v["config"]["seed"], 5);

    let bad = write(dir.path(), "bad.cfg", "alpha = 0.5\nwindw = 3\n");
    let out = abach(&["price", "--params", &params, "--list", &list, "--config", &bad, "--out", s(dir.path())]);
    assert_eq!(error_code(&out), (70, "cli.ConfigError".to_string()));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2: unknown key `windw`"));

    let out = abach(&["price", "--params", &params, "--list", &list, "--alpha", "1.5", "--out", s(dir.path())]);
    assert_eq!(error_code(&out), (10, "corechf.InvalidParameter".to_string()));
}

#[test]
fn malformed_inputs_map_to_marketio_codes() {
    let dir = TempDir::new().unwrap();
    let params = write(dir.path(), "p.json", "{\"sigma\": 3}");
    let list = write(dir.path(), "list.csv", "t,strike\n");
    let out = abach(&["price", "--params", &params, "--list", &list, "--out", s(dir.path())]);
    assert_eq!(error_code(&out), (60, "marketio.SchemaError".to_string()));

    let params = write(dir.path(), "p.json", MODEL);
    let list = write(dir.path(), "list.csv", "t,strike\n0.5,abc\n");
    let out = abach(&["price", "--params", &params, "--list", &list, "--out", s(dir.path())]);
    assert_eq!(error_code(&out), (61, "marketio.ValueError".to_string()));

    let chain = write(dir.path(), "chain.csv", "date,expiry,strike,call,put\n");
    let out = abach(&["calibrate", "--chain", &chain, "--ois", s(&fixture("ois.csv")), "--out", s(dir.path())]);
    assert_eq!(error_code(&out), (60, "marketio.SchemaError".to_string()));
}
