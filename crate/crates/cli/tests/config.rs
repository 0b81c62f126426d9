//! The key-value run configuration format.

use additive_bachelier::calib::Weighting;
use additive_bachelier::Contour;
use additive_bachelier_cli::config::{Overrides, RunConfig};
use additive_bachelier_cli::error::{exit_code_for, CliError, EXIT_CODES};

#[test]
fn defaults_are_the_empirical_choices() {
    let c = RunConfig::default();
    assert_eq!(c.alpha, 0.5);
    assert_eq!(c.window, 30.0);
    assert_eq!(c.spread_threshold_bps, 20.0);
}

#[test]
fn written_config_reads_back_identically() {
    let mut c = RunConfig::default();
    c.apply_text(
        "alpha = 0\nweighting = vega\nquadrature.contour = strip_fraction:-0.25\nquadrature.rel_tol = 3e-13\n\
         optimizer.eta_bounds = -2.5, 2.5\noptimizer.ln_k_grid = -3,1,5\noptimizer.max_evaluations = 99\n",
        "inline",
    )
    .unwrap();
    assert_eq!(c.weighting, Weighting::Vega);
    assert_eq!(c.quadrature.contour, Contour::StripFraction(-0.25));
    assert_eq!(c.optimizer.ln_k_grid, (-3.0, 1.0, 5));

    let text = c.to_key_value();
    let mut back = RunConfig::default();
    back.apply_text(&text, "echo").unwrap();
    assert_eq!(back, c);
    assert_eq!(back.to_key_value(), text);
}

#[test]
fn every_key_is_written() {
    let text = RunConfig::default().to_key_value();
    assert_eq!(text.lines().count(), 18);
    assert!(text.contains("quadrature.contour = saddle\n"));
    assert!(text.contains("quadrature.rel_tol = 1e-12\n"));
}

#[test]
fn comments_blank_lines_and_spacing_are_ignored() {
    let mut c = RunConfig::default();
    c.apply_text("# header\n\n   seed=42   \n\t# indented comment\n", "x").unwrap();
    assert_eq!(c.seed, 42);
}

#[test]
fn errors_carry_the_line_number() {
    for (text, line, fragment) in [
        ("alpha = 0.5\nalpha = 0\n", 2, "duplicate key"),
        ("seed 3\n", 1, "expected `key = value`"),
        ("\n\nwindow = wide\n", 3, "not a number"),
        ("optimizer.eta_grid = 1,2\n", 1, "lo,hi,points"),
        ("quadrature.contour = spiral\n", 1, "saddle"),
    ] {
        let err = RunConfig::default().apply_text(text, "f.cfg").unwrap_err();
        match &err {
            CliError::Config { line: l, message, .. } => {
                assert_eq!(*l, line, "{text:?}");
                assert!(message.contains(fragment), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(err.exit_code(), 70);
    }
}

#[test]
fn overrides_win_and_validation_rejects_bad_ranges() {
    let mut c = RunConfig::default();
    c.apply_overrides(&Overrides {
        window: Some(-1.0),
        ..Default::default()
    });
    assert!(matches!(c.validate(), Err(CliError::InvalidInput(_))));
    c.window = 10.0;
    c.alpha = 1.0;
    assert_eq!(c.validate().unwrap_err().code(), "corechf.InvalidParameter");
}

#[test]
fn exit_codes_are_distinct_and_avoid_reserved_values() {
    let mut codes: Vec<i32> = EXIT_CODES.iter().map(|&(_, c)| c).collect();
    codes.sort();
    codes.dedup();
    assert_eq!(codes.len(), EXIT_CODES.len());
    assert!(codes.iter().all(|&c| c > 2 && c < 126));
    assert_eq!(exit_code_for("calib.MissingOisCurve"), 42);
    assert_eq!(exit_code_for("no.SuchCode"), 1);
}
