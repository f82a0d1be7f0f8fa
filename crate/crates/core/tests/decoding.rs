use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singleshot::fitting::{fit_threshold, FitConfig, ThresholdPoint};
use singleshot::gf2::BitVector;
use singleshot::lattice::{check_locality, embed};
use singleshot::matching::{MatchingConfig, MwpmRepair};
use singleshot::montecarlo::{records_from_csv, run_campaign, CampaignSpec};
use singleshot::noise::NoiseModel;
use singleshot::product_code::{CodeBundle, ProductCode};
use singleshot::single_shot::{run_trial, ProtocolConfig, Strategy};

#[test]
fn matching_repairs_planted_syndrome_errors() {
    let code = ProductCode::toric(5).unwrap();
    let meta = code.meta();
    let mut matcher = MwpmRepair::new(meta, MatchingConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(345);
    let trials = 10_000;
    let mut no_heavier = 0;
    for _ in 0..trials {
        let w = rng.random_range(1..=4);
        let mut support = Vec::new();
        while support.len() < w {
            let i = rng.random_range(0..meta.cols());
            if !support.contains(&i) {
                support.push(i);
            }
        }
        let planted = BitVector::from_support(meta.cols(), support).unwrap();
        let m = meta.mat_vec(&planted).unwrap();
        let r = matcher.repair(&m).unwrap();
        assert_eq!(meta.mat_vec(&r).unwrap(), m);
        if r.weight() <= planted.weight() {
            no_heavier += 1;
        }
    }
    assert!(no_heavier * 100 >= 99 * trials, "{no_heavier}/{trials}");
}

#[test]
fn low_noise_rarely_fails() {
    let code = ProductCode::toric(3).unwrap();
    let cfg = ProtocolConfig::new(Strategy::MwpmBposd, 1, NoiseModel::new(0.0, 0.0).unwrap());
    let out = run_trial(&code, &cfg, 1, 0).unwrap();
    assert!(out.success);
    let cfg = ProtocolConfig::new(Strategy::MwpmBposd, 3, NoiseModel::new(0.005, 0.005).unwrap());
    let big = ProductCode::toric(5).unwrap();
    let failures = (0..200).filter(|&t| !run_trial(&big, &cfg, 9, t).unwrap().success).count();
    assert!(failures <= 2, "{failures}");
}

#[test]
fn strategies_agree_at_low_noise() {
    let code = ProductCode::surface(4).unwrap();
    for strategy in [Strategy::MwpmBposd, Strategy::BposdX2, Strategy::CodeCapacity] {
        let cfg = ProtocolConfig::new(strategy, 2, NoiseModel::new(0.003, 0.003).unwrap()).normalised();
        let failures = (0..100).filter(|&t| !run_trial(&code, &cfg, 4, t).unwrap().success).count();
        assert!(failures <= 2, "{strategy:?}: {failures}");
    }
}

#[test]
fn bundle_round_trip_preserves_embedding() {
    let code = ProductCode::surface(3).unwrap();
    let json = serde_json::to_string(&code.to_bundle()).unwrap();
    let bundle: CodeBundle = serde_json::from_str(&json).unwrap();
    let back = ProductCode::from_bundle(&bundle).unwrap();
    assert_eq!(back.params, code.params);
    let coords = embed(&back);
    assert!(check_locality(&back, &coords, 2));
    assert_eq!(coords.export().qubits.len(), 51);
}

#[test]
fn campaign_csv_feeds_threshold_fit() {
    let spec: CampaignSpec = serde_json::from_str(
        r#"{
            "codes": ["toric:3", "toric:4", "toric:5"],
            "p": [0.16, 0.2, 0.24, 0.28],
            "q_rule": {"kind": "zero"},
            "cycles": [0],
            "strategy": "code_capacity",
            "max_trials": 300,
            "min_failures": null,
            "seed": 21
        }"#,
    )
    .unwrap();
    let data = run_campaign(&spec, None).unwrap();
    let records = records_from_csv(&data.to_csv()).unwrap();
    assert_eq!(records, data.records);
    // failure rates grow with p for every size
    for l in [3, 4, 5] {
        let rates: Vec<f64> = records.iter().filter(|r| r.l == l).map(|r| r.p_fail).collect();
        assert!(rates.first() < rates.last(), "L={l}: {rates:?}");
    }
    let pts: Vec<ThresholdPoint> = records.iter().map(ThresholdPoint::from).collect();
    let fit = fit_threshold(&pts, &FitConfig { bootstrap: 0, ..FitConfig::default() }).unwrap();
    let pth = fit.get("p_th").unwrap();
    assert!(pth > 0.12 && pth < 0.32, "{pth}");
}
