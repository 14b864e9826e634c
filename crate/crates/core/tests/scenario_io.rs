//! Scenario configuration parsing, echo, report determinism, and CSV export.

use qfluct_core::scenario::config::{CheckKind, ConfigError, ModeSpec};
use qfluct_core::scenario::run::run_scenario_detailed;
use qfluct_core::scenario::write_trajectory_csv;
use qfluct_core::{run_scenario, ScenarioConfig};

const BELL_SWAP: &str = r#"{
    "name": "bell-swap",
    "dims": { "d_a": 2, "d_b": 2, "d_r": 2 },
    "beta": 2.0,
    "initial_state": { "preset": "bell" },
    "reservoir_hamiltonian": { "preset": "ladder", "step": 1.0 },
    "unitary": { "preset": "swap-ar", "angle": 0.9 }
}"#;

#[test]
fn config_json_round_trip_is_stable() {
    let config = ScenarioConfig::from_json(BELL_SWAP).unwrap();
    let text = config.to_json();
    let reparsed = ScenarioConfig::from_json(&text).unwrap();
    assert_eq!(config, reparsed);
    assert_eq!(text, reparsed.to_json());
}

#[test]
fn defaults_and_aliases_parse() {
    let config = ScenarioConfig::from_json(BELL_SWAP).unwrap();
    assert_eq!(config.mode, ModeSpec::Exact);
    assert_eq!(config.effective_checks(), CheckKind::DEFAULT_SET.to_vec());

    // "n" is an alias for the sample count, "swap_AR" for the preset name.
    let text = r#"{
        "name": "aliased",
        "dims": { "d_a": 2, "d_b": 2, "d_r": 2 },
        "beta": 1.0,
        "initial_state": { "preset": "bell" },
        "reservoir_hamiltonian": { "preset": "zero" },
        "unitary": { "preset": "swap_AR", "angle": 0.3 },
        "mode": { "sample": { "n": 5000, "seed": 9 } },
        "checks": ["ift", "crooks"]
    }"#;
    let config = ScenarioConfig::from_json(text).unwrap();
    match config.mode {
        ModeSpec::Sample {
            samples,
            seed,
            workers,
        } => {
            assert_eq!(samples, 5000);
            assert_eq!(seed, 9);
            assert_eq!(workers, 1);
        }
        other => panic!("expected sample mode, got {other:?}"),
    }
    assert_eq!(
        config.effective_checks(),
        vec![CheckKind::Ift, CheckKind::Crooks]
    );
}

#[test]
fn unknown_fields_and_preset_requirements_are_rejected() {
    let extra_field = BELL_SWAP.replace("\"beta\": 2.0", "\"beta\": 2.0, \"betta\": 1.0");
    assert!(matches!(
        ScenarioConfig::from_json(&extra_field),
        Err(ConfigError::Parse(_))
    ));

    // The doubly-controlled-flip preset pins its bipartition.
    let wrong_dims = r#"{
        "name": "bad",
        "dims": { "d_a": 2, "d_b": 4, "d_r": 1 },
        "beta": 1.0,
        "initial_state": { "preset": "superposed-toffoli-input" },
        "reservoir_hamiltonian": { "preset": "zero" },
        "unitary": { "preset": "toffoli" }
    }"#;
    let config = ScenarioConfig::from_json(wrong_dims).unwrap();
    match run_scenario::<f64>(&config) {
        Err(err) => {
            let text = err.to_string();
            assert!(text.contains("superposed-toffoli-input"), "got: {text}");
        }
        Ok(_) => panic!("mismatched preset dimensions must be rejected"),
    }

    let bad_profile = BELL_SWAP.replace(
        "\"beta\": 2.0",
        "\"beta\": 2.0, \"tolerance_profile\": \"lenient\"",
    );
    let config = ScenarioConfig::from_json(&bad_profile).unwrap();
    assert!(matches!(
        config.tolerance_profile(),
        Err(ConfigError::UnknownProfile(_))
    ));
}

#[test]
fn preset_expansion_is_echoed_in_report() {
    let config = ScenarioConfig::from_json(BELL_SWAP).unwrap();
    let report = run_scenario::<f64>(&config).unwrap();

    // The echo must contain the fully expanded inputs, not the preset names.
    let state = &report.resolved.initial_state;
    assert_eq!(state.len(), 4);
    for (i, row) in state.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            let expected = if (i == 0 || i == 3) && (j == 0 || j == 3) {
                0.5
            } else {
                0.0
            };
            assert_eq!(entry[0], expected, "entry ({i},{j})");
            assert_eq!(entry[1], 0.0, "entry ({i},{j}) imaginary part");
        }
    }
    assert_eq!(report.resolved.reservoir_energies, vec![0.0, 1.0]);
    assert_eq!(report.resolved.unitary.len(), 8);
    assert!(report.passed, "all default checks pass on this scenario");
    assert!(report.tool.starts_with("qfluct "));
}

#[test]
fn serialized_reports_are_byte_identical_across_runs() {
    let config = ScenarioConfig::from_json(BELL_SWAP).unwrap();
    let first = serde_json::to_string_pretty(&run_scenario::<f64>(&config).unwrap()).unwrap();
    let second = serde_json::to_string_pretty(&run_scenario::<f64>(&config).unwrap()).unwrap();
    assert_eq!(first, second);

    let sampled_text = BELL_SWAP.replace(
        "\"beta\": 2.0",
        "\"beta\": 2.0, \"mode\": { \"sample\": { \"samples\": 20000, \"seed\": 5, \"workers\": 3 } }",
    );
    let sampled = ScenarioConfig::from_json(&sampled_text).unwrap();
    let first = serde_json::to_string_pretty(&run_scenario::<f64>(&sampled).unwrap()).unwrap();
    let second = serde_json::to_string_pretty(&run_scenario::<f64>(&sampled).unwrap()).unwrap();
    assert_eq!(first, second);
    assert!(first.contains("standard_errors"));
}

#[test]
fn trajectory_csv_lists_the_forward_support() {
    let config = ScenarioConfig::from_json(BELL_SWAP).unwrap();
    let output = run_scenario_detailed::<f64>(&config).unwrap();
    let mut bytes = Vec::new();
    write_trajectory_csv(&output.frame, &output.ensemble, &mut bytes).unwrap();
    let text = String::from_utf8(bytes).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "m,a,b,r,m',a',b',r',p_forward,p_reverse,ds_A,ds_B,dI,dJ,betaQ"
    );

    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), output.report.report.support_size);
    let mut forward_total = 0.0f64;
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 15);
        forward_total += fields[8].parse::<f64>().unwrap();
    }
    assert!((forward_total - output.report.report.total_forward).abs() <= 1e-12);
}
