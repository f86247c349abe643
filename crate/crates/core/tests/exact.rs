mod common;

use simplexslice::exact::{
    band_fraction, bisect_level_for_fraction, lawrence_volume, varsi_fraction, LawrenceProblem,
};
use simplexslice::geometry::{ln_factorial, Body, Halfspace};
use simplexslice::sampling::{rejection_volume, SamplerConfig};

use common::uniform_vec;

fn band(a: &[f64], lo: f64, hi: f64) -> Vec<Halfspace> {
    let neg: Vec<f64> = a.iter().map(|x| -x).collect();
    vec![
        Halfspace::new(a.to_vec(), hi).unwrap(),
        Halfspace::new(neg, -lo).unwrap(),
    ]
}

fn both_backends(body: &Body) -> (f64, f64) {
    let f = LawrenceProblem::<f64>::from_body(body).unwrap();
    let r = LawrenceProblem::from_body_exact(body).unwrap();
    (
        lawrence_volume(&f, None, 1).unwrap().value,
        lawrence_volume(&r, None, 1).unwrap().value,
    )
}

/// Area of `{x in unit triangle : all halfspaces}` from its vertices.
fn polygon_area(hs: &[Halfspace]) -> f64 {
    let mut all = vec![
        Halfspace::new(vec![-1.0, 0.0], 0.0).unwrap(),
        Halfspace::new(vec![0.0, -1.0], 0.0).unwrap(),
        Halfspace::new(vec![1.0, 1.0], 1.0).unwrap(),
    ];
    all.extend(hs.iter().cloned());
    let mut pts = Vec::new();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let (a, b) = (&all[i], &all[j]);
            let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
            if det.abs() < 1e-14 {
                continue;
            }
            let x = (a.offset * b.normal[1] - a.normal[1] * b.offset) / det;
            let y = (a.normal[0] * b.offset - a.offset * b.normal[0]) / det;
            if all.iter().all(|h| h.slack(&[x, y]) >= -1e-12) {
                pts.push([x, y]);
            }
        }
    }
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / pts.len() as f64;
    pts.sort_by(|p, q| {
        (p[1] - cy)
            .atan2(p[0] - cx)
            .total_cmp(&(q[1] - cy).atan2(q[0] - cx))
    });
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (p, q) = (pts[i], pts[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        .abs()
        / 2.0
}

#[test]
fn one_family_matches_varsi_difference() {
    for d in 2..=8 {
        let a = uniform_vec(d, -1.0, 1.0, 21, d as u64);
        let lo = bisect_level_for_fraction(&a, 0.3, 1e-12).unwrap().level;
        let hi = bisect_level_for_fraction(&a, 0.45, 1e-12).unwrap().level;
        let body = Body::new(d, band(&a, lo, hi), vec![]).unwrap();
        let expect = band_fraction(&a, lo, hi) * (-ln_factorial(d)).exp();
        let (f, r) = both_backends(&body);
        assert!(
            (f / expect - 1.0).abs() < 1e-9,
            "d={d}: float {f} vs {expect}"
        );
        assert!(
            (r / expect - 1.0).abs() < 1e-9,
            "d={d}: rational {r} vs {expect}"
        );
    }
}

#[test]
fn two_families_in_the_plane_match_polygon_area() {
    for seed in 0..10 {
        let a = uniform_vec(2, -1.0, 1.0, 22, seed);
        let b = uniform_vec(2, -1.0, 1.0, 23, seed);
        let mut hs = band(
            &a,
            bisect_level_for_fraction(&a, 0.2, 1e-12).unwrap().level,
            bisect_level_for_fraction(&a, 0.7, 1e-12).unwrap().level,
        );
        hs.extend(band(
            &b,
            bisect_level_for_fraction(&b, 0.1, 1e-12).unwrap().level,
            bisect_level_for_fraction(&b, 0.8, 1e-12).unwrap().level,
        ));
        let body = Body::new(2, hs.clone(), vec![]).unwrap();
        let area = polygon_area(&hs);
        let (f, r) = both_backends(&body);
        assert!((f - area).abs() < 1e-12, "seed {seed}: {f} vs {area}");
        assert!((r - area).abs() < 1e-12, "seed {seed}: {r} vs {area}");
    }
}

#[test]
fn two_families_in_five_dimensions_match_rejection() {
    let d = 5;
    let a = uniform_vec(d, -1.0, 1.0, 24, 0);
    let b = uniform_vec(d, -1.0, 1.0, 24, 1);
    let lvl = |v: &[f64], p| bisect_level_for_fraction(v, p, 1e-12).unwrap().level;
    let mut hs = band(&a, lvl(&a, 0.2), lvl(&a, 0.6));
    hs.extend(band(&b, lvl(&b, 0.3), lvl(&b, 0.9)));
    let body = Body::new(d, hs, vec![]).unwrap();
    let (f, r) = both_backends(&body);
    assert!((f / r - 1.0).abs() < 1e-9);
    let est = rejection_volume(&body, 1_000_000, &SamplerConfig::new(d, 3), None).unwrap();
    let frac = r * 120.0;
    assert!(
        (est.volume_fraction - frac).abs() < 4.0 * est.std_error,
        "{} vs {frac}",
        est.volume_fraction
    );
}

#[test]
fn varsi_limits_and_symmetry() {
    let a = uniform_vec(6, -1.0, 1.0, 25, 0);
    assert_eq!(varsi_fraction(&a, -2.0), 0.0);
    assert_eq!(varsi_fraction(&a, 2.0), 1.0);
    let neg: Vec<f64> = a.iter().map(|x| -x).collect();
    for z in [-0.3, 0.0, 0.2] {
        let sum = varsi_fraction(&a, z) + varsi_fraction(&neg, -z);
        assert!((sum - 1.0).abs() < 1e-12);
    }
    let s = bisect_level_for_fraction(&a, 0.25, 1e-12).unwrap();
    assert!(!s.warning && (varsi_fraction(&a, s.level) - 0.25).abs() <= 1e-12);
}
