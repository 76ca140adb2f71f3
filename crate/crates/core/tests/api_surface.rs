//! Exercises the public API the way an external consumer would: declarative
//! JSON models through the certifier pipeline, report serialization schema,
//! and the typed error surface.

use serde_json::Value;

use varcert_core::envelope::{envelope_gradient, moreau_envelope};
use varcert_core::models::json::model_from_json_str;
use varcert_core::models::{SubdiffSet, Window};
use varcert_core::norm_space::NormModel;
use varcert_core::plan::SamplePlan;
use varcert_core::second_order::{psd_certify, PsdFlavor};
use varcert_core::varconvex::certify_variational_convexity;
use varcert_core::Error;

const VEE: &str = r#"{
    "name": "vee",
    "dim": 1,
    "convex": true,
    "pieces": [
        {"region": [-4.0, 0.0], "formula": {"poly": [0.0, -1.0]}},
        {"region": [0.0, 4.0], "formula": {"poly": [0.0, 1.0]}}
    ],
    "subdiff": []
}"#;

const WSHAPE: &str = r#"{
    "name": "wshape",
    "dim": 1,
    "convex": false,
    "pieces": [
        {"region": [-4.0, 0.0], "formula": {"poly": [0.0, 1.0, 1.0]}},
        {"region": [0.0, 4.0], "formula": {"poly": [0.0, -1.0, 1.0]}}
    ],
    "subdiff": []
}"#;

fn e1() -> NormModel {
    NormModel::euclidean(1)
}

#[test]
fn json_kink_subdifferential_is_derived_from_the_pieces() {
    let phi = model_from_json_str(VEE).expect("valid document");
    assert_eq!(phi.eval(&[2.0]), 2.0);
    assert_eq!(phi.eval(&[-3.0]), 3.0);
    // Convexly ordered one-sided slopes at the shared boundary produce the
    // full interval; a downward kink produces the two isolated slopes.
    match phi.subdiff(&[0.0]).unwrap() {
        SubdiffSet::Intervals(iv) => assert_eq!(iv, vec![(-1.0, 1.0)]),
        other => panic!("vee kink: {other:?}"),
    }
    let w = model_from_json_str(WSHAPE).expect("valid document");
    match w.subdiff(&[0.0]).unwrap() {
        SubdiffSet::Points(ps) => {
            assert_eq!(ps.len(), 2);
            assert!(ps.contains(&vec![1.0]) && ps.contains(&vec![-1.0]));
        }
        other => panic!("wshape kink: {other:?}"),
    }
}

#[test]
fn json_model_envelope_and_certificate_pipeline() {
    let phi = model_from_json_str(VEE).expect("valid document");
    let m = e1();
    let plan = SamplePlan::line(11, 65, -4.0, 4.0).expect("valid plan");
    let env = moreau_envelope(&phi, 1.0, &[2.0], &m, &plan).expect("envelope computes");
    assert!((env.value - 1.5).abs() < 1e-9);
    assert!((env.minimizers[0][0] - 1.0).abs() < 1e-6);

    let w = Window::new(vec![0.0], vec![0.0], 0.5, 0.5, 0.5).expect("valid window");
    let cert_plan = SamplePlan::centered(3, 33, 8, &[0.0], 0.5).expect("valid plan");
    let rep = certify_variational_convexity(&phi, &[0.0], &[0.0], 0.0, &w, &m, &cert_plan)
        .expect("certifier runs");
    assert!(rep.is_certified(), "a convex kink is variationally convex at its minimum");

    // Serialized report schema: stable key sets, deterministic ordering.
    let doc = rep.to_json();
    let keys: Vec<&str> = doc.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        ["check", "margin", "notes", "params", "vacuous", "verdict", "witnesses"]
    );
    let witnesses = doc["witnesses"].as_array().unwrap();
    assert!(!witnesses.is_empty(), "closest-call witnesses are always recorded");
    let wkeys: Vec<&str> = witnesses[0].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(wkeys, ["inputs", "lhs", "rhs", "slack"]);
    assert_eq!(doc["verdict"], Value::String("CERTIFIED_ON_SAMPLES".into()));
}

#[test]
fn declarative_models_carry_no_second_order_patches() {
    let phi = model_from_json_str(VEE).expect("valid document");
    let w = Window::new(vec![0.0], vec![0.0], 0.5, 0.5, 0.5).expect("valid window");
    let plan = SamplePlan::centered(3, 33, 8, &[0.0], 0.5).expect("valid plan");
    match psd_certify(&phi, &w, 0.0, PsdFlavor::Combined, &plan) {
        Err(Error::Capability(msg)) => {
            assert!(msg.contains("carry no patch"), "unexpected message: {msg}")
        }
        other => panic!("expected a capability error, got {other:?}"),
    }
}

#[test]
fn multivalued_proximal_points_surface_as_nonsmooth_errors() {
    // 2w^2 - |w| has the two symmetric proximal points +-1/4 at x = 0.
    let phi = model_from_json_str(WSHAPE).expect("valid document");
    let m = e1();
    let plan = SamplePlan::line(11, 65, -4.0, 4.0).expect("valid plan");
    match envelope_gradient(&phi, 0.5, &[0.0], &[0.0], &m, &plan) {
        Err(Error::NonSmooth { diameter, cluster }) => {
            assert!((diameter - 0.5).abs() < 1e-6, "tie diameter {diameter}");
            assert_eq!(cluster.len(), 2, "both proximal points reported");
        }
        other => panic!("expected a nonsmooth error, got {other:?}"),
    }
    // Away from the tie the gradient exists and matches the formula.
    let g = envelope_gradient(&phi, 0.5, &[0.0], &[2.0], &m, &plan).expect("smooth point");
    assert_eq!(g.len(), 1);
}

#[test]
fn malformed_documents_are_rejected_with_input_errors() {
    let overlapping = r#"{
        "dim": 1,
        "convex": false,
        "pieces": [
            {"region": [-1.0, 0.5], "formula": {"poly": [0.0, 1.0]}},
            {"region": [0.0, 1.0], "formula": {"poly": [0.0, 2.0]}}
        ],
        "subdiff": []
    }"#;
    assert!(matches!(model_from_json_str(overlapping), Err(Error::Input(_))));

    let planar = r#"{
        "dim": 2,
        "convex": true,
        "pieces": [{"formula": {"poly": [0.0, 1.0]}}],
        "subdiff": []
    }"#;
    assert!(matches!(model_from_json_str(planar), Err(Error::Capability(_))));
}

#[test]
fn dimension_mismatches_are_typed_errors() {
    let phi = model_from_json_str(VEE).expect("valid document");
    let plan = SamplePlan::line(11, 33, -4.0, 4.0).expect("valid plan");
    match moreau_envelope(&phi, 1.0, &[0.0, 0.0], &e1(), &plan) {
        Err(Error::Dimension { expected, got }) => {
            assert_eq!((expected, got), (1, 2));
        }
        other => panic!("expected a dimension error, got {other:?}"),
    }
    assert!(Window::new(vec![0.0], vec![0.0], -1.0, 0.5, 0.5).is_err());
}
