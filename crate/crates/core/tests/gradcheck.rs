use krnet_core::gradcheck::{run_gradcheck, GradcheckOptions, LayerClass, MAX_PARAMS};
use krnet_core::{Error, NetworkConfig};

fn class_tolerance(class: LayerClass) -> f64 {
    match class {
        LayerClass::Conv | LayerClass::TransposedConv | LayerClass::BatchNorm => 1e-5,
        LayerClass::PRelu => 1e-6,
        LayerClass::EltwiseAdd => 1e-6,
        LayerClass::Network => 1e-4,
    }
}

#[test]
fn every_class_matches_finite_differences_over_twenty_seeds() {
    let report = run_gradcheck(&GradcheckOptions::default()).unwrap();
    assert_eq!(report.seeds, 20);
    assert_eq!(report.classes.len(), LayerClass::ALL.len());
    for c in &report.classes {
        assert!(c.entries > 0, "{} checked nothing", c.class.name());
        assert!(
            c.worst_rel_err < class_tolerance(c.class),
            "{}: worst relative error {:e}",
            c.class.name(),
            c.worst_rel_err
        );
    }
    assert!(report.passed());
}

#[test]
fn corrupted_backward_is_caught() {
    let opts = GradcheckOptions {
        seeds: 2,
        corrupt_backward: true,
        ..Default::default()
    };
    let report = run_gradcheck(&opts).unwrap();
    assert!(!report.passed());
    assert!(report.classes.iter().all(|c| c.worst_rel_err > 1e-3));
}

#[test]
fn unreachable_tolerance_fails() {
    let opts = GradcheckOptions {
        seeds: 1,
        tolerance: 1e-12,
        ..Default::default()
    };
    assert!(!run_gradcheck(&opts).unwrap().passed());
}

#[test]
fn color_mini_network_checks_too() {
    let opts = GradcheckOptions {
        network: NetworkConfig::mini(3),
        seeds: 2,
        seed: 11,
        ..Default::default()
    };
    assert!(run_gradcheck(&opts).unwrap().passed());
}

#[test]
fn large_networks_are_refused() {
    let opts = GradcheckOptions {
        network: NetworkConfig::default(),
        seeds: 1,
        ..Default::default()
    };
    match run_gradcheck(&opts) {
        Err(Error::Config(msg)) => assert!(msg.contains(&MAX_PARAMS.to_string()), "{msg}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}
