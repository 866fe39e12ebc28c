use pasldpc_demo::api;

#[test]
fn pmf_is_normalised_and_symmetric() {
    let p = api::mb_pmf(2.1, 13, 16, 4).unwrap();
    assert_eq!(p.points.len(), 16);
    assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((p.entropy - 2.85).abs() < 1e-9);
    for i in 0..8 {
        assert!((p.probs[i] - p.probs[15 - i]).abs() < 1e-15);
    }
    assert!(api::mb_pmf(3.5, 13, 16, 4).is_err());
}

#[test]
fn rate_curve_json() {
    let text = api::rate_curve(13, 16, 4, 1.0, 2.0, 0.5).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r["gap_shaped_db"].as_f64().unwrap() < r["gap_uniform_db"].as_f64().unwrap());
    }
}

#[test]
fn threshold_curve_for_builtin_matrix() {
    let text =
        api::threshold_curve(&pasldpc_demo::robust_matrix(), 13, 16, 4, 1.1, 2.1, 1.0).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for p in v.as_array().unwrap() {
        let gap = p["gap_db"].as_f64().unwrap();
        assert!(gap > 0.0 && gap < 1.1, "{gap}");
    }
    assert!(api::threshold_curve("2 2\n1 1\n", 13, 16, 4, 1.0, 1.0, 0.1).is_err());
}
