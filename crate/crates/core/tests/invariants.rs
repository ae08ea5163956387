use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use thetaforge::harness::sample_tau;
use thetaforge::identities::{build_a, build_c};
use thetaforge::moduli::{jacobian_det_from_rows, minors, ProjectivePoint};
use thetaforge::{
    theta_jet, theta_jet_lifted, LiftedVector, PeriodMatrix, Rational, RationalVector, ThetaJet, TruncationPolicy,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

fn rational() -> impl Strategy<Value = Rational> {
    (-12i64..12, 1i64..=6).prop_map(|(p, q)| Rational::new(p, q))
}

fn rationals(g: usize) -> impl Strategy<Value = Vec<Rational>> {
    proptest::collection::vec(rational(), g)
}

fn point(g: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-0.5f64..0.5, -0.4f64..0.4).prop_map(|(a, b)| c(a, b)), g)
}

fn integers(g: usize) -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::vec(-2i64..=2, g)
}

fn complex_matrix(r: usize, k: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    proptest::collection::vec((-1f64..1.0, -1f64..1.0), r * k)
        .prop_map(move |v| DMatrix::from_iterator(r, k, v.into_iter().map(|(a, b)| c(a, b))))
}

fn jet(tau: &PeriodMatrix, z: &[Complex64], eps: &RationalVector, delta: &RationalVector) -> ThetaJet {
    theta_jet(tau, z, eps, delta, &TruncationPolicy::default()).unwrap()
}

fn ints_to_lifted(m: &[i64]) -> LiftedVector {
    LiftedVector::new(m.iter().map(|&k| Rational::from_integer(k)).collect())
}

fn real_dot(a: &[f64], m: &[i64]) -> f64 {
    a.iter().zip(m).map(|(x, &k)| x * k as f64).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn half_integer_parity(g in 1usize..=2, seed in 0u64..1000, e in integers(2), d in integers(2), z in point(2)) {
        let half = |v: &[i64]| RationalVector::new(v[..g].iter().map(|&k| Rational::new(k.rem_euclid(2), 2)).collect());
        let (eps, delta) = (half(&e), half(&d));
        let tau = sample_tau(g, seed, 0);
        let plus = jet(&tau, &z[..g], &eps, &delta).value;
        let minus_z: Vec<Complex64> = z[..g].iter().map(|x| -x).collect();
        let minus = jet(&tau, &minus_z, &eps, &delta).value;
        let sign = if RationalVector::parity(&eps, &delta) == 1 { -1.0 } else { 1.0 };
        prop_assert!(close(minus, plus * sign, 1e-12));
    }

    #[test]
    fn quasi_periodicity(g in 1usize..=2, seed in 0u64..1000, e in rationals(2), d in rationals(2), z in point(2), m in integers(2)) {
        let (eps, delta) = (RationalVector::new(e[..g].to_vec()), RationalVector::new(d[..g].to_vec()));
        let m = &m[..g];
        let tau = sample_tau(g, seed, 1);
        let z = &z[..g];
        let base = jet(&tau, z, &eps, &delta).value;

        let shifted: Vec<Complex64> = z.iter().zip(m).map(|(x, &k)| x + k as f64).collect();
        let want = (c(0.0, 2.0 * PI) * real_dot(&eps.to_f64(), m)).exp() * base;
        prop_assert!(close(jet(&tau, &shifted, &eps, &delta).value, want, 1e-11));

        let tau_m: Vec<Complex64> = (0..g).map(|j| (0..g).map(|k| tau.entry(j, k) * m[k] as f64).sum()).collect();
        let moved: Vec<Complex64> = z.iter().zip(&tau_m).map(|(x, t)| x + t).collect();
        let quad: Complex64 = (0..g).map(|j| tau_m[j] * m[j] as f64).sum();
        let lin: Complex64 = (0..g).map(|j| (z[j] + delta.to_f64()[j]) * m[j] as f64).sum();
        let factor = (c(0.0, 2.0 * PI) * (-0.5 * quad - lin)).exp();
        prop_assert!(close(jet(&tau, &moved, &eps, &delta).value, factor * base, 1e-10));
    }

    #[test]
    fn lifting_characteristics(g in 1usize..=2, seed in 0u64..1000, e in rationals(2), d in rationals(2), m in integers(2), z in point(2)) {
        let (eps, delta) = (RationalVector::new(e[..g].to_vec()), RationalVector::new(d[..g].to_vec()));
        let shift = ints_to_lifted(&m[..g]);
        let tau = sample_tau(g, seed, 2);
        let p = TruncationPolicy::default();
        let base = jet(&tau, &z[..g], &eps, &delta).value;
        let upper = theta_jet_lifted(&tau, &z[..g], &eps.lift().add(&shift), &delta.lift(), &p).unwrap().value;
        prop_assert!(close(upper, base, 1e-12));
        let lower = theta_jet_lifted(&tau, &z[..g], &eps.lift(), &delta.lift().add(&shift), &p).unwrap().value;
        let phase = (c(0.0, 2.0 * PI) * real_dot(&eps.to_f64(), &m[..g])).exp();
        prop_assert!(close(lower, phase * base, 1e-12));
    }

    #[test]
    fn heat_equation(g in 1usize..=3, seed in 0u64..1000, e in rationals(3), d in rationals(3), z in point(3)) {
        let (eps, delta) = (RationalVector::new(e[..g].to_vec()), RationalVector::new(d[..g].to_vec()));
        let tau = sample_tau(g, seed, 3);
        let j = jet(&tau, &z[..g], &eps, &delta);
        let heat = j.heat_tau_deriv();
        let scale = j.tau_deriv.iter().map(|x| x.norm()).fold(j.value.norm().max(1.0), f64::max);
        for (a, b) in j.tau_deriv.iter().zip(heat.iter()) {
            prop_assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn doubling_the_radius_stays_within_the_tail(g in 1usize..=2, seed in 0u64..1000, e in rationals(2), z in point(2)) {
        let eps = RationalVector::new(e[..g].to_vec());
        let delta = RationalVector::zeros(g);
        let tau = sample_tau(g, seed, 4);
        let p = TruncationPolicy::default();
        let wide = TruncationPolicy { radius_factor: 2, ..p };
        let a = theta_jet(&tau, &z[..g], &eps, &delta, &p).unwrap();
        let b = theta_jet(&tau, &z[..g], &eps, &delta, &wide).unwrap();
        prop_assert!(b.radius >= a.radius);
        prop_assert!((a.value - b.value).norm() <= a.tail + 1e-15 * a.value.norm().max(1.0));
    }

    #[test]
    fn a_pairing_is_antisymmetric_and_c_symmetric(g in 1usize..=2, seed in 0u64..1000, ka in integers(2), kb in integers(2), ke in integers(2)) {
        let n = 2u64;
        let grid = |k: &[i64], m: i64| RationalVector::new(k[..g].iter().map(|&x| Rational::new(x.rem_euclid(m), m)).collect());
        let (a, b) = (grid(&ka, 2 * n as i64), grid(&kb, 2 * n as i64));
        let eps = grid(&ke, 2);
        let tau = sample_tau(g, seed, 5);
        let p = TruncationPolicy::default();
        let ab = build_a(&tau, &a, &b, &eps, n, &p).unwrap().entries;
        let ba = build_a(&tau, &b, &a, &eps, n, &p).unwrap().entries;
        let scale = ab.iter().map(|x| x.norm()).fold(1.0, f64::max);
        for (x, y) in ab.iter().zip(ba.iter()) {
            prop_assert!((x + y).norm() <= 1e-12 * scale);
        }
        let cab = build_c(&tau, &a, &b, n, &p).unwrap().entries;
        let cba = build_c(&tau, &b, &a, n, &p).unwrap().entries;
        let scale = cab.iter().map(|x| x.norm()).fold(1.0, f64::max);
        for (x, y) in cab.iter().zip(cba.iter()) {
            prop_assert!((x - y).norm() <= 1e-12 * scale);
        }
        prop_assert!((&cab - cab.transpose()).iter().all(|x| x.norm() <= 1e-12 * scale));
    }

    #[test]
    fn pluecker_point_depends_only_on_the_row_space(frame in complex_matrix(2, 5), mix in complex_matrix(2, 2)) {
        prop_assume!(mix.determinant().norm() > 1e-2);
        let before = ProjectivePoint::new(minors(&frame));
        prop_assume!(before.is_ok());
        let after = ProjectivePoint::new(minors(&(&mix * &frame))).unwrap();
        prop_assert!(before.unwrap().chordal_distance(&after).unwrap() < 1e-10);
    }

    #[test]
    fn column_swaps_permute_minors_up_to_sign(frame in complex_matrix(2, 4), i in 0usize..4, j in 0usize..4) {
        let mut swapped = frame.clone();
        swapped.swap_columns(i, j);
        let mut m1: Vec<f64> = minors(&frame).iter().map(|x| x.norm()).collect();
        let mut m2: Vec<f64> = minors(&swapped).iter().map(|x| x.norm()).collect();
        m1.sort_by(f64::total_cmp);
        m2.sort_by(f64::total_cmp);
        for (x, y) in m1.iter().zip(&m2) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn jacobian_is_multilinear_and_alternating(rows in complex_matrix(3, 3), other in complex_matrix(1, 3), s in -2f64..2.0, t in -2f64..2.0) {
        let mut mixed = rows.clone();
        let mut replaced = rows.clone();
        for k in 0..3 {
            mixed[(1, k)] = rows[(1, k)] * s + other[(0, k)] * t;
            replaced[(1, k)] = other[(0, k)];
        }
        let lhs = jacobian_det_from_rows(&mixed);
        let rhs = jacobian_det_from_rows(&rows) * s + jacobian_det_from_rows(&replaced) * t;
        prop_assert!(close(lhs, rhs, 1e-12));
        let mut swapped = rows.clone();
        swapped.swap_rows(0, 2);
        prop_assert!(close(jacobian_det_from_rows(&swapped), -jacobian_det_from_rows(&rows), 1e-12));
    }

    #[test]
    fn chordal_distance_is_a_symmetric_projective_metric(u in point(4), v in point(4), w in point(4), phase in 0f64..6.3, r in 0.1f64..10.0) {
        let (Ok(pu), Ok(pv), Ok(pw)) = (ProjectivePoint::new(u.clone()), ProjectivePoint::new(v), ProjectivePoint::new(w)) else {
            return Ok(());
        };
        let duv = pu.chordal_distance(&pv).unwrap();
        prop_assert!((duv - pv.chordal_distance(&pu).unwrap()).abs() < 1e-12);
        prop_assert!(duv <= pu.chordal_distance(&pw).unwrap() + pw.chordal_distance(&pv).unwrap() + 1e-12);
        let scaled = ProjectivePoint::new(u.iter().map(|x| x * Complex64::from_polar(r, phase)).collect()).unwrap();
        prop_assert!(pu.chordal_distance(&scaled).unwrap() < 1e-12);
    }
}
