use nlsist::experiment::{verify_bounds, ExperimentConfig, GridSpec, InitialData, Suite, EXPONENT_WINDOW};

fn sech_config(l: f64, times: Vec<f64>) -> ExperimentConfig {
    ExperimentConfig {
        initial: InitialData::Sech { amplitude: 0.3 },
        z: GridSpec { min: -10.0, max: 10.0, count: 1024 },
        epsilon: 1e-3,
        l,
        times,
        ..Default::default()
    }
}

#[test]
fn f_decay_for_l5() {
    let rows = verify_bounds(Suite::Fdecay, &sech_config(5.0, vec![1.0, 2.0, 4.0, 8.0, 16.0])).unwrap();
    let f: Vec<_> = rows.iter().filter(|r| r.quantity == "F_h11").collect();
    assert_eq!(f.len(), 5);
    assert!(f.iter().all(|r| r.pass && r.value > 0.0));
    assert!((f[0].fitted_exponent - 2.0).abs() <= EXPONENT_WINDOW);
    let df: Vec<_> = rows.iter().filter(|r| r.quantity == "DeltaF_h11").collect();
    assert_eq!(df.len(), 5);
    // ΔF is Lipschitz in r: it sits well below F itself.
    for (a, b) in f.iter().zip(&df) {
        assert!(b.value < a.value, "t = {}", a.t);
    }
}

#[test]
fn ltilde_g_decay_for_l4() {
    let rows = verify_bounds(Suite::Ltg, &sech_config(4.0, vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0])).unwrap();
    assert_eq!(rows.len(), 14);
    for row in &rows {
        assert!(row.pass, "{row:?}");
        assert_eq!(row.target_exponent, 1.5);
    }
}
