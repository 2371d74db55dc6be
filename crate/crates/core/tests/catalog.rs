use vi_probe_core::catalog::{
    generate_variant, inducer_ids, list_cases, map_alpha, measured_settings, Alpha, CatalogError, StyleParams,
    VariantKind,
};
use vi_probe_core::scene::{measure, MeasureKind, Role};

fn alpha_for(kind: VariantKind, a: f64) -> f64 {
    if kind.is_perturbed() {
        a
    } else {
        0.0
    }
}

#[test]
fn every_case_and_kind_generates_valid_scenes() {
    for desc in list_cases() {
        for seed in [0u64, 17, 613, 1999] {
            let style = StyleParams::from_seed(seed);
            for kind in VariantKind::ALL {
                for a in [-1.0, -0.2, 0.2, 1.0] {
                    let alpha = alpha_for(kind, a);
                    let (scene, gt) = generate_variant(desc.case_id, kind, alpha, &style)
                        .unwrap_or_else(|e| panic!("case {} {kind} {alpha}: {e}", desc.case_id));
                    assert!(gt.is_consistent());
                    scene.validate().unwrap();
                    if kind != VariantKind::IND {
                        let expected = map_alpha(desc.case_id, alpha).unwrap();
                        for m in measured_settings(desc.case_id, &scene).unwrap() {
                            assert!(
                                m.approx_eq(&expected),
                                "case {} {kind}: {m:?} vs {expected:?}",
                                desc.case_id
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn ebbinghaus_original_has_equal_circles_and_surrounds() {
    let (scene, gt) = generate_variant(5, VariantKind::O, 0.0, &StyleParams::default()).unwrap();
    let da = measure(&scene, "c05.target.target-a", MeasureKind::Diameter)
        .unwrap()
        .value;
    let db = measure(&scene, "c05.target.target-b", MeasureKind::Diameter)
        .unwrap()
        .value;
    assert_eq!(da, db);
    assert!(scene.count_role(Role::Inducer) > 0);
    assert_eq!(gt.y_forward, 1);
}

#[test]
fn muller_lyer_inducers_are_four_arrowheads() {
    let (scene, _) = generate_variant(1, VariantKind::O, 0.0, &StyleParams::default()).unwrap();
    let ids = inducer_ids(1, &scene).unwrap();
    assert_eq!(ids.len(), 4);
    assert!(ids.iter().all(|id| id.contains("fin-")));

    let (ind, gt) = generate_variant(1, VariantKind::IND, 0.0, &StyleParams::default()).unwrap();
    assert_eq!(ind.count_role(Role::Target), 0);
    assert_eq!(inducer_ids(1, &ind).unwrap().len(), ind.elements.len());
    assert_eq!(gt.y_forward, 1);

    let (oc, _) = generate_variant(1, VariantKind::OC, 0.0, &StyleParams::default()).unwrap();
    assert!(inducer_ids(1, &oc).unwrap().is_empty());
}

#[test]
fn perturbed_muller_lyer_has_ratio_one_and_a_half() {
    let (scene, gt) = generate_variant(1, VariantKind::P, 1.0, &StyleParams::from_seed(5)).unwrap();
    let la = measure(&scene, "c01.target.target-a", MeasureKind::Length)
        .unwrap()
        .value;
    let lb = measure(&scene, "c01.target.target-b", MeasureKind::Length)
        .unwrap()
        .value;
    assert!((la / lb - 1.5).abs() < 1e-12);
    assert_eq!(gt.y_forward, 0);
}

#[test]
fn hering_perturbation_injects_curvature() {
    let (scene, gt) = generate_variant(19, VariantKind::P, -0.8, &StyleParams::default()).unwrap();
    let c = measure(&scene, "c19.target.target-a", MeasureKind::CurvatureMax)
        .unwrap()
        .value;
    assert!(c.abs() > 0.0);
    assert!((c - (-0.8 * 24.0)).abs() < 1e-9);
    assert_eq!(gt.y_forward, 0);
}

#[test]
fn hints_leave_targets_and_inducers_untouched() {
    for desc in list_cases() {
        let style = StyleParams::from_seed(77);
        for (plain, hinted, alpha) in [
            (VariantKind::O, VariantKind::OH, 0.0),
            (VariantKind::P, VariantKind::PH, 0.6),
        ] {
            let (a, _) = generate_variant(desc.case_id, plain, alpha, &style).unwrap();
            let (b, _) = generate_variant(desc.case_id, hinted, alpha, &style).unwrap();
            let keep = [Role::Target, Role::Inducer];
            assert_eq!(a.restricted_to(&keep), b.restricted_to(&keep));
            assert!(b.count_role(Role::Hint) > 0, "case {} has no hints", desc.case_id);
        }
    }
}

#[test]
fn generation_is_deterministic() {
    let style = StyleParams::from_seed(1234);
    let a = generate_variant(14, VariantKind::PH, -0.4, &style).unwrap();
    let b = generate_variant(14, VariantKind::PH, -0.4, &style).unwrap();
    assert_eq!(a.0.to_canonical_json(), b.0.to_canonical_json());
}

#[test]
fn invalid_requests_rejected() {
    let style = StyleParams::default();
    assert!(matches!(
        generate_variant(1, VariantKind::P, 0.0, &style),
        Err(CatalogError::InvalidCombination { .. })
    ));
    assert!(matches!(
        generate_variant(1, VariantKind::IND, 0.4, &style),
        Err(CatalogError::InvalidCombination { .. })
    ));
    let mut bad = style;
    bad.scale = 1.5;
    assert!(matches!(
        generate_variant(1, VariantKind::O, 0.0, &bad),
        Err(CatalogError::InvalidStyle(_))
    ));
    let (scene, _) = generate_variant(2, VariantKind::O, 0.0, &style).unwrap();
    assert!(matches!(inducer_ids(1, &scene), Err(CatalogError::ForeignScene(1))));
    assert!(Alpha::new(-1.01).is_err());
}
