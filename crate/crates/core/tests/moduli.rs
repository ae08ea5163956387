use num_complex::Complex64;
use thetaforge::harness::sample_tau;
use thetaforge::moduli::{
    direct_constants, jacobian_det, phi_map, pluecker, reconstruct_constants, separation_probe, ProjectivePoint,
};
use thetaforge::{theta_jet, RationalVector, ThetaError, TruncationPolicy};

#[test]
fn reconstruction_matches_direct_evaluation() {
    let p = TruncationPolicy::default();
    let n = 2;
    for g in 1..=2usize {
        let tau = sample_tau(g, 77, 0);
        let frame = phi_map(&tau, n, &p).unwrap();
        for gamma in RationalVector::half_integers(g) {
            for delta in RationalVector::half_integers(g) {
                let got = reconstruct_constants(&frame, &gamma, &delta, n, &p).unwrap();
                let want = ProjectivePoint::new(direct_constants(&tau, &gamma, &delta, n, &p).unwrap()).unwrap();
                let d = got.chordal_distance(&want).unwrap();
                assert!(d < 1e-6, "g={g} gamma={gamma} delta={delta}: {d:e}");
            }
        }
    }
}

#[test]
fn reconstruction_needs_level_two() {
    let p = TruncationPolicy::default();
    let tau = sample_tau(2, 1, 0);
    let frame = phi_map(&tau, 1, &p).unwrap();
    let h = RationalVector::zeros(2);
    assert!(matches!(reconstruct_constants(&frame, &h, &h, 1, &p), Err(ThetaError::InvalidArgument(_))));
}

#[test]
fn genus_one_jacobian_is_product_of_even_constants() {
    // pi^-1 theta_11'(0) = -theta_00 theta_01 theta_10
    let p = TruncationPolicy::default();
    let zero = RationalVector::zeros(1);
    let half: RationalVector = "1/2".parse().unwrap();
    let z = [Complex64::new(0.0, 0.0)];
    for i in 0..10 {
        let tau = sample_tau(1, 8, i);
        let d = jacobian_det(&tau, &[(half.clone(), half.clone())], &p).unwrap();
        let prod = theta_jet(&tau, &z, &zero, &zero, &p).unwrap().value
            * theta_jet(&tau, &z, &zero, &half, &p).unwrap().value
            * theta_jet(&tau, &z, &half, &zero, &p).unwrap().value;
        assert!((d + prod).norm() < 1e-12 * prod.norm().max(1.0), "{d} vs {}", -prod);
    }
}

#[test]
fn separation_distinguishes_samples() {
    let p = TruncationPolicy::default();
    for g in 1..=2 {
        let (t1, t2) = (sample_tau(g, 5, 0), sample_tau(g, 5, 1));
        let same = separation_probe(&t1, &t1, 2, &p).unwrap();
        assert!(same.distance < 1e-12 && same.report.pass);
        let diff = separation_probe(&t1, &t2, 2, &p).unwrap();
        assert!(diff.distance > 1e-6 && diff.report.pass);
        let pl = pluecker(&phi_map(&t1, 2, &p).unwrap()).unwrap();
        assert_eq!(pl.point.len(), pl.subsets.len());
    }
}
