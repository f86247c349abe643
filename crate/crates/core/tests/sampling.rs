mod common;

use simplexslice::exact::varsi_fraction;
use simplexslice::geometry::{Body, Halfspace, Simplex};
use simplexslice::sampling::{
    rejection_volume, sample_simplex, sample_unit_simplex, SamplerConfig, SamplerMethod,
};

use common::uniform_vec;

#[test]
fn samplers_are_seeded_and_in_the_simplex() {
    for method in [SamplerMethod::Exponential, SamplerMethod::SortedIntegers] {
        let cfg = SamplerConfig::new(7, 4).with_method(method);
        let a = sample_unit_simplex(500, &cfg).unwrap();
        assert_eq!(a, sample_unit_simplex(500, &cfg).unwrap());
        assert_ne!(
            a,
            sample_unit_simplex(500, &cfg.clone().with_stream(1)).unwrap()
        );
        for x in &a {
            assert!(x.iter().all(|&v| v >= 0.0) && x.iter().sum::<f64>() <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn general_simplex_points_average_to_the_centroid() {
    let verts = vec![
        vec![1.0, 1.0, 0.0],
        vec![3.0, 1.0, 0.5],
        vec![1.0, 4.0, 0.0],
        vec![1.5, 1.5, 2.0],
    ];
    let s = Simplex::new(verts.clone()).unwrap();
    let n = 200_000;
    let pts = sample_simplex(n, &s, &SamplerConfig::new(3, 5)).unwrap();
    for k in 0..3 {
        let mean = pts.iter().map(|p| p[k]).sum::<f64>() / n as f64;
        let centroid = verts.iter().map(|v| v[k]).sum::<f64>() / 4.0;
        assert!(
            (mean - centroid).abs() < 0.01,
            "axis {k}: {mean} vs {centroid}"
        );
    }
}

#[test]
fn rejection_matches_varsi_and_reports_its_error() {
    let d = 8;
    let a = uniform_vec(d, -1.0, 1.0, 41, 0);
    let p = varsi_fraction(&a, 0.1);
    let body = Body::new(d, vec![Halfspace::new(a, 0.1).unwrap()], vec![]).unwrap();
    let est = rejection_volume(&body, 400_000, &SamplerConfig::new(d, 6), Some(2.0)).unwrap();
    assert!((est.volume_fraction - p).abs() < 4.0 * est.std_error);
    assert_eq!(est.abs_volume, Some(2.0 * est.volume_fraction));
    assert_eq!(est.hits as f64 / est.trials as f64, est.volume_fraction);
}
