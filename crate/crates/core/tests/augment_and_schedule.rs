use proptest::prelude::*;
use spectral_curriculum::augment::{apply_op, draw_ops, magnitude_at, randaug, AugOp, AugPolicy};
use spectral_curriculum::curriculum::{
    efficienttrain_schedule, relative_cost, relative_cost_of_stages, Schedule, Stage, TransformSpec,
};
use spectral_curriculum::Image;

fn sample_image() -> Image {
    let planes = (0..3)
        .map(|c| Image::from_fn(24, 24, |r, col| ((r * 5 + col * 3 + c * 7) % 17) as f64 / 16.0).unwrap())
        .collect();
    Image::from_planes(planes).unwrap()
}

#[test]
fn magnitude_ramp_endpoints() {
    assert_eq!(magnitude_at(0, 300, 9.0).unwrap(), 0.0);
    assert_eq!(magnitude_at(150, 300, 9.0).unwrap(), 4.5);
    assert_eq!(magnitude_at(300, 300, 9.0).unwrap(), 9.0);
    assert!(magnitude_at(301, 300, 9.0).is_err());
    assert!(magnitude_at(0, 0, 9.0).is_err());
}

#[test]
fn draws_depend_only_on_seed_and_index() {
    let policy = AugPolicy::baseline(11);
    let forward: Vec<_> = (0..64).map(|i| draw_ops(&policy, i).unwrap()).collect();
    let backward: Vec<_> = (0..64).rev().map(|i| draw_ops(&policy, i).unwrap()).collect();
    for (i, d) in forward.iter().enumerate() {
        assert_eq!(d, &backward[63 - i]);
    }
    assert_ne!(
        draw_ops(&policy, 0).unwrap(),
        draw_ops(&AugPolicy::baseline(12), 0).unwrap()
    );
    let threaded: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..8u64)
            .map(|i| s.spawn(move || draw_ops(&AugPolicy::baseline(11), i).unwrap()))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(&threaded[..], &forward[..8]);
}

#[test]
fn zero_magnitude_is_identity() {
    let img = sample_image();
    let policy = AugPolicy::baseline(3).with_magnitude(0.0);
    for i in 0..10 {
        assert_eq!(randaug(&img, &policy, i).unwrap(), img);
    }
    for op in AugOp::ALL {
        assert_eq!(apply_op(&img, op, 0.0, true).unwrap(), img);
    }
}

#[test]
fn ops_keep_shape_and_range() {
    let img = sample_image();
    for op in AugOp::ALL {
        for m in [1.0, 9.0, 30.0] {
            for negate in [false, true] {
                let out = apply_op(&img, op, m, negate).unwrap();
                assert_eq!((out.channels(), out.height(), out.width()), (3, 24, 24));
                assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)), "{op:?} m={m}");
            }
        }
    }
    assert!(apply_op(&img, AugOp::Rotate, 31.0, false).is_err());
}

#[test]
fn schedule_json_roundtrip_and_validation() {
    let et = efficienttrain_schedule(300).unwrap();
    let back: Schedule = serde_json::from_str(&et.to_json_pretty().unwrap()).unwrap();
    assert_eq!(back, et);

    let gap = r#"{"total_epochs":10,"base_resolution":224,"stages":[
        {"start":1,"end":4,"transform":{"kind":"crop","B":96}},
        {"start":6,"end":10,"transform":{"kind":"identity"}}],
        "magnitude":{"kind":"linear","m0":9.0}}"#;
    assert!(serde_json::from_str::<Schedule>(gap).is_err());
    let not_identity = r#"{"total_epochs":10,"base_resolution":224,"stages":[
        {"start":1,"end":10,"transform":{"kind":"lowpass","r":30.0}}],
        "magnitude":{"kind":"linear","m0":9.0}}"#;
    assert!(serde_json::from_str::<Schedule>(not_identity).is_err());
}

#[test]
fn cost_model_examples() {
    let two_stage = [
        Stage::new(1, 225, TransformSpec::Crop { bandwidth: 96 }),
        Stage::new(226, 300, TransformSpec::Crop { bandwidth: 224 }),
    ];
    let c = relative_cost_of_stages(&two_stage, 300, 224).cost;
    assert!((c - (0.75 * (96.0f64 / 224.0).powi(2) + 0.25)).abs() < 1e-12);
    assert!((c - 0.38).abs() <= 0.03);

    let et = relative_cost(&efficienttrain_schedule(300).unwrap());
    assert!((et.cost - (0.6 * (160.0f64 / 224.0).powi(2) + 0.2 * (192.0f64 / 224.0).powi(2) + 0.2)).abs() < 1e-12);
    assert!((et.speedup - 1.0 / et.cost).abs() < 1e-12);
}

proptest! {
    #[test]
    fn magnitude_is_linear_in_epoch(total in 1u32..2000, m0 in 0.0f64..30.0, a in 0u32..2000, b in 0u32..2000) {
        let (a, b) = (a % (total + 1), b % (total + 1));
        let ma = magnitude_at(a, total, m0).unwrap();
        let mb = magnitude_at(b, total, m0).unwrap();
        prop_assert!((ma - a as f64 / total as f64 * m0).abs() < 1e-12);
        if a <= b {
            prop_assert!(ma <= mb + 1e-12);
        }
    }

    #[test]
    fn et_schedule_is_well_formed(total in 1u32..3000) {
        let et = efficienttrain_schedule(total).unwrap();
        let stages = et.stages();
        prop_assert_eq!(stages[0].start, 1);
        prop_assert_eq!(stages.last().unwrap().end, total);
        prop_assert!(stages.last().unwrap().transform.is_identity_at(224));
        for w in stages.windows(2) {
            prop_assert_eq!(w[0].end + 1, w[1].start);
        }
        let c = relative_cost(&et).cost;
        prop_assert!(c > 0.0 && c <= 1.0 + 1e-12);
    }
}
