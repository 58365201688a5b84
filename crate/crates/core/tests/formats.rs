//! JSON shapes of the file formats and reports.

use aqec::attacks::{build_phase_partition, exact_impossibility_witness, GridMode};
use aqec::boolfn::{tribes, BoolFn};
use aqec::codespace::{sample_codeword, CodeParams, CodewordCoeffs};
use aqec::noise::ErrorOperator;
use aqec::verify::{
    check_immunity, random_orthonormal_pair, TrendRow, VerificationConfig, VerificationReport,
};
use serde_json::{json, Value};

fn keys(v: &Value) -> Vec<&str> {
    let mut k: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    k.sort_unstable();
    k
}

#[test]
fn function_table() {
    let f = tribes(6, None).unwrap().balance();
    let v = serde_json::to_value(&f).unwrap();
    assert_eq!(keys(&v), ["signs", "width"]);
    assert_eq!(v["width"], 6);
    let back: BoolFn = serde_json::from_value(v).unwrap();
    assert_eq!(back, f);

    // x = 0 negative, x = 1 positive, x = 2, 3 negative: bit 1 of the first byte.
    let g: BoolFn = serde_json::from_value(json!({"width": 2, "signs": "Ag=="})).unwrap();
    assert!(!g.is_positive(0) && g.is_positive(1) && !g.is_positive(2) && !g.is_positive(3));
    assert!(serde_json::from_value::<BoolFn>(json!({"width": 2, "signs": "!!"})).is_err());
}

#[test]
fn codeword() {
    let c = sample_codeword(&CodeParams::new(8, 2).unwrap(), 5);
    let v = serde_json::to_value(&c).unwrap();
    assert_eq!(keys(&v), ["B", "alpha", "n"]);
    assert_eq!(v["alpha"].as_array().unwrap().len(), 4);
    let back: CodewordCoeffs = serde_json::from_value(v).unwrap();
    assert_eq!(back, c);

    let bad = json!({"n": 8, "B": 3, "alpha": [[1.0, 0.0]]});
    assert!(serde_json::from_value::<CodewordCoeffs>(bad).is_err());
    let short = json!({"n": 8, "B": 2, "alpha": [[1.0, 0.0]]});
    assert!(serde_json::from_value::<CodewordCoeffs>(short).is_err());
}

#[test]
fn error_specs() {
    let specs = [
        json!({"type": "bitflip", "i": 2, "controls": {"kind": "all"}}),
        json!({"type": "bitflip", "i": 1, "controls": {"kind": "empty"}}),
        json!({"type": "bitflip", "i": 3, "controls": {"kind": "singleton", "j": "0110"}}),
        json!({"type": "bitflip", "i": 1, "controls": {"kind": "seeded", "density": 0.25, "seed": 4}}),
        json!({"type": "phase", "theta": 0.5, "set": {"kind": "all"}}),
        json!({"type": "phase", "theta": 1.0, "set": {"kind": "seeded", "density": 0.5, "seed": 1}}),
    ];
    for spec in specs {
        let e: ErrorOperator = serde_json::from_value(spec.clone()).unwrap();
        e.validate(5).unwrap();
        assert_eq!(serde_json::to_value(&e).unwrap(), spec);
    }
    let wide: ErrorOperator =
        serde_json::from_value(json!({"type": "bitflip", "i": 9, "controls": {"kind": "all"}}))
            .unwrap();
    assert!(wide.validate(5).is_err());
    let big_angle: ErrorOperator =
        serde_json::from_value(json!({"type": "phase", "theta": 7.0, "set": {"kind": "all"}}))
            .unwrap();
    assert!(big_angle.validate(5).is_err());
}

#[test]
fn report_and_trend_row() {
    let f = tribes(2, None).unwrap().balance();
    let params = CodeParams::new(8, 2).unwrap();
    let cfg = VerificationConfig {
        seed: 1,
        codewords: 3,
        error_draws: 3,
        ..Default::default()
    };
    let r = check_immunity(&f, &params, &cfg).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for key in [
        "kind",
        "n",
        "B",
        "s",
        "epsilon_measured",
        "epsilon_bound",
        "alpha_measured",
        "pass",
        "witness",
        "seed",
        "runtime_ms",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["kind"], "immunity");
    assert_eq!(v["witness"]["type"], "immunity");
    let back: VerificationReport = serde_json::from_value(v).unwrap();
    assert_eq!(back, r);

    let row = TrendRow::from_report(&r).unwrap();
    assert_eq!(
        TrendRow::CSV_HEADER.split(',').count(),
        row.to_csv().split(',').count()
    );
    assert!(row.to_csv().starts_with("8,2,"));
}

#[test]
fn attack_artifacts() {
    let (phi, psi) = random_orthonormal_pair(4, 2).unwrap();
    let atk = build_phase_partition(&phi, &psi, 2, GridMode::Paper, 24).unwrap();
    let v = serde_json::to_value(&atk).unwrap();
    assert_eq!(v["grid"], "paper");
    assert_eq!(
        serde_json::from_value::<aqec::attacks::PhaseAttack>(v).unwrap(),
        atk
    );

    let w = exact_impossibility_witness(&phi, &psi, 1e-6)
        .unwrap()
        .unwrap();
    let v = serde_json::to_value(&w).unwrap();
    assert_eq!(v["error"]["controls"]["kind"], "singleton");
}
