use nalgebra::DMatrix;
use simplexslice::geometry::{ln_factorial, Body, Ellipsoid, Halfspace, Side};
use simplexslice::rng::stream_rng;
use simplexslice::walk::{ray_body_intersection, volume_hnr, WalkConfig, WalkState};

#[test]
fn ray_endpoints_on_the_simplex() {
    let body = Body::simplex_only(4);
    let p = [0.1, 0.2, 0.3, 0.1];
    for k in 0..4 {
        let (lo, hi) = ray_body_intersection(&p, k, &body).unwrap();
        assert!((lo + p[k]).abs() < 1e-12);
        assert!((hi - 0.3).abs() < 1e-12);
    }
}

#[test]
fn ray_endpoints_with_a_sphere() {
    let body = Body::new(
        2,
        vec![],
        vec![(
            Ellipsoid::new(DMatrix::identity(2, 2), vec![0.25, 0.25], 0.01).unwrap(),
            Side::Inside,
        )],
    )
    .unwrap();
    let (lo, hi) = ray_body_intersection(&[0.25, 0.25], 0, &body).unwrap();
    assert!((lo + 0.1).abs() < 1e-12 && (hi - 0.1).abs() < 1e-12);
}

#[test]
fn walk_points_stay_inside() {
    let body = Body::new(
        3,
        vec![Halfspace::new(vec![1.0, -1.0, 0.5], 0.2).unwrap()],
        vec![],
    )
    .unwrap();
    let mut w = WalkState::new(&body, vec![0.1, 0.2, 0.1], None, stream_rng(3, 0)).unwrap();
    for _ in 0..2000 {
        w.walk(5);
        assert!(body.contains_with_tol(w.point(), 1e-12));
    }
    assert_eq!(w.steps(), 10_000);
}

#[test]
fn bare_simplex_volumes() {
    for d in [5usize, 10, 20] {
        let mut logs: Vec<f64> = (0..3)
            .map(|seed| {
                volume_hnr(
                    &Body::simplex_only(d),
                    &WalkConfig::new(seed).with_epsilon(0.5),
                )
                .unwrap()
                .log_value
            })
            .collect();
        logs.sort_by(f64::total_cmp);
        let err = (logs[1] + ln_factorial(d)).exp_m1().abs();
        assert!(err < 0.1, "d={d}: median off by {err}");
    }
}
