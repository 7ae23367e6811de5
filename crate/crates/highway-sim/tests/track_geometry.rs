//! Reference-line geometry: generation, conversions, round trips.

use highway_sim::{generate_track, SimError, TrackMap};
use proptest::prelude::*;

#[test]
fn bundled_track_has_exact_length() {
    let track = generate_track(0, 6946.0).unwrap();
    assert_eq!(track.total_length(), 6946.0);
    assert!(track.waypoints().len() >= 256);
}

#[test]
fn generation_is_deterministic() {
    let a = generate_track(3, 6946.0).unwrap();
    let b = generate_track(3, 6946.0).unwrap();
    assert_eq!(a.waypoints(), b.waypoints());
    let c = generate_track(4, 6946.0).unwrap();
    assert_ne!(a.waypoints()[10], c.waypoints()[10]);
}

#[test]
fn degenerate_lengths_are_rejected() {
    assert!(matches!(generate_track(0, 0.0), Err(SimError::InvalidArgument(_))));
    assert!(matches!(generate_track(0, -5.0), Err(SimError::InvalidArgument(_))));
    assert!(matches!(generate_track(0, f64::NAN), Err(SimError::InvalidArgument(_))));
    assert!(matches!(generate_track(0, 999.0), Err(SimError::InvalidArgument(_))));
}

#[test]
fn loop_closes_at_total_length() {
    let track = generate_track(7, 2000.0).unwrap();
    let start = track.frenet_to_cartesian(0.0, 0.0).unwrap();
    let end = track.frenet_to_cartesian(2000.0, 0.0).unwrap();
    let gap = ((end.0 - start.0).powi(2) + (end.1 - start.1).powi(2)).sqrt();
    assert!(gap < 1e-6, "loop closure gap {gap}");

    // Continuity approaching the wrap from below.
    let near = track.frenet_to_cartesian(2000.0 - 1e-7, 3.0).unwrap();
    let wrapped = track.frenet_to_cartesian(0.0, 3.0).unwrap();
    let jump = ((near.0 - wrapped.0).powi(2) + (near.1 - wrapped.1).powi(2)).sqrt();
    assert!(jump < 1e-5, "wrap discontinuity {jump}");
}

#[test]
fn zero_offset_hits_the_reference_line() {
    let track = generate_track(0, 6946.0).unwrap();
    let wp0 = track.waypoints()[0];
    let p = track.frenet_to_cartesian(0.0, 0.0).unwrap();
    assert!((p.0 - wp0.x).abs() < 1e-12 && (p.1 - wp0.y).abs() < 1e-12);
}

#[test]
fn offset_point_lies_along_the_stored_normal() {
    // Independent check: differentiate the reference line numerically and
    // rebuild the offset point from the finite-difference normal.
    let track = generate_track(0, 6946.0).unwrap();
    for &(s, d) in &[(100.0, 2.0), (2500.0, 10.0), (6900.0, -3.0)] {
        let h = 1e-3;
        let ahead = track.reference_point(s + h);
        let behind = track.reference_point(s - h);
        let (tx, ty) = (ahead.0 - behind.0, ahead.1 - behind.1);
        let norm = (tx * tx + ty * ty).sqrt();
        let n = (ty / norm, -tx / norm);
        let base = track.reference_point(s);
        let expected = (base.0 + d * n.0, base.1 + d * n.1);
        let got = track.frenet_to_cartesian(s, d).unwrap();
        let err = ((got.0 - expected.0).powi(2) + (got.1 - expected.1).powi(2)).sqrt();
        assert!(err < 1e-6, "offset point error {err} at s={s} d={d}");
    }
}

#[test]
fn round_trip_of_known_point() {
    let track = generate_track(0, 6946.0).unwrap();
    let (x, y) = track.frenet_to_cartesian(500.0, 6.0).unwrap();
    let (s, d) = track.cartesian_to_frenet(x, y).unwrap();
    assert!((s - 500.0).abs() < 1e-6, "s error {}", (s - 500.0).abs());
    assert!((d - 6.0).abs() < 1e-6, "d error {}", (d - 6.0).abs());
}

#[test]
fn reference_start_projects_to_origin() {
    let track = generate_track(0, 6946.0).unwrap();
    let wp0 = track.waypoints()[0];
    let (s, d) = track.cartesian_to_frenet(wp0.x, wp0.y).unwrap();
    let s_dist = s.min(track.total_length() - s);
    assert!(s_dist < 1e-6 && d.abs() < 1e-6, "got ({s}, {d})");
}

#[test]
fn far_points_are_out_of_corridor() {
    let track = generate_track(0, 6946.0).unwrap();
    let base = track.reference_point(1000.0);
    let n = track.normal(1000.0);
    let far = (base.0 + 50.0 * n.0, base.1 + 50.0 * n.1);
    match track.cartesian_to_frenet(far.0, far.1) {
        Err(SimError::OutOfCorridor { distance, .. }) => {
            assert!(distance > 20.0, "distance {distance}")
        }
        other => panic!("expected out-of-corridor, got {other:?}"),
    }
}

#[test]
fn csv_round_trip_preserves_geometry() {
    let track = generate_track(11, 3000.0).unwrap();
    let mut buf = Vec::new();
    track.to_csv(&mut buf).unwrap();
    let reread = TrackMap::from_csv(buf.as_slice()).unwrap();
    assert_eq!(reread.waypoints().len(), track.waypoints().len());
    assert!((reread.total_length() - track.total_length()).abs() < 1e-6);
    for s in [0.0, 123.0, 1500.5, 2999.0] {
        let a = track.frenet_to_cartesian(s, 6.0).unwrap();
        let b = reread.frenet_to_cartesian(s, 6.0).unwrap();
        let err = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        assert!(err < 1e-6, "csv geometry drift {err} at s={s}");
    }
}

#[test]
fn csv_import_accepts_headerless_files() {
    let track = generate_track(11, 3000.0).unwrap();
    let mut buf = Vec::new();
    track.to_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let headerless: String = text.lines().skip(1).collect::<Vec<_>>().join("\n");
    let reread = TrackMap::from_csv(headerless.as_bytes()).unwrap();
    assert_eq!(reread.waypoints().len(), track.waypoints().len());
}

#[test]
fn csv_import_rejects_garbage() {
    assert!(TrackMap::from_csv("x,y\n1,2\n".as_bytes()).is_err());
    assert!(TrackMap::from_csv("1,2,3,4,oops\n".as_bytes()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn frenet_round_trip_under_a_micron(s in 0.0..6946.0f64, d in -10.0..10.0f64) {
        let track = generate_track(0, 6946.0).unwrap();
        let (x, y) = track.frenet_to_cartesian(s, d).unwrap();
        let (s2, d2) = track.cartesian_to_frenet(x, y).unwrap();
        let ds = track.signed_s_distance(s, s2).abs();
        prop_assert!(ds < 1e-6, "s error {ds}");
        prop_assert!((d2 - d).abs() < 1e-6, "d error {}", (d2 - d).abs());
    }
}
