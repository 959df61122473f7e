use compgeo_core::*;

#[test]
fn cmc_acceptance_values() {
    let p = CmcParams::new(2, 0.5).unwrap();
    let c = integrate_profile(&p, 5.0, 0.01).unwrap();
    let worst = c.samples.iter().map(|s| (s.u - 2.0 * ((0.5 * s.r).cosh() - 1.0)).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst:e}");
    let r0 = critical_radius(&CmcParams::new(2, 1.0).unwrap()).unwrap();
    assert!((r0 - 3f64.ln()).abs() <= 1e-8);
    for (n, h) in [(2, 0.4), (2, 0.5), (2, 1.0), (3, 0.9), (4, 0.75)] {
        let p = CmcParams::new(n, h).unwrap();
        let c = integrate_profile(&p, 4.0, 0.01).unwrap();
        assert!(c.flux_drift() <= tolerances::FLUX, "n={n} H={h}");
        let v = verify_profile_mean_curvature(&c.samples, &p, tolerances::CMC_MEAN_CURVATURE).unwrap();
        assert!(v.pass, "n={n} H={h}: {v:?}");
    }
}

#[test]
fn cmc_csv_and_json() {
    let c = build_cmc_sphere(&CmcParams::new(2, 1.0).unwrap(), 0.05).unwrap();
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("r,u,du,flux\n"));
    assert_eq!(text.lines().count(), 1 + c.samples.len() + c.mirrored.len());
    let back: ProfileCurve = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.samples.last().unwrap().du, f64::INFINITY);
    assert_eq!(back.mirrored[0].du, f64::NEG_INFINITY);
}

#[test]
fn verifier_acceptance_cases() {
    for chart in [ChartId::WarpedExp, ChartId::WarpedCosh] {
        let r = verify_forward_inequality(chart, PatchSpec::equidistant(0.25), 128).unwrap();
        assert!(r.max_abs_laplacian <= 10.0 * r.h_grid * r.h_grid);
        assert!(r.pass);
    }
    let cfg = VerifyConfig::new(ChartId::H2xrHorocylinder, PatchSpec::tilted(1.0), Form::Reverse, 128);
    let r = verify_with_refinement(&cfg, &[128, 256]).unwrap();
    assert!(r.margin_min >= -1e-2);
    assert!(r.convergence.unwrap().improving);
    let mut neg = VerifyConfig::new(ChartId::WarpedExp, PatchSpec::equidistant(0.0), Form::Forward, 128);
    neg.mean_curvature_scale = 0.5;
    assert!(!verify_inequality(&neg).unwrap().pass);
    let forward = verify_forward_inequality(ChartId::H2xrHorocylinder, PatchSpec::tilted(1.0), 128).unwrap();
    assert!(forward.pass);
}
