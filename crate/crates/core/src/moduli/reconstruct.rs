//! Recovering theta constants from a gradient frame.
//!
//! The frame gives every `C^{pq}` at level `4n`, hence every `A^{pq}_gamma`
//! at level `2n`, and the cyclic relations between the `A`'s cut out the
//! vector of level-`2n` theta constants as a kernel.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::maps::{phi_map, pluecker, GradientFrame};
use super::projective::{ProjectivePoint, ZERO_FLOOR};
use crate::error::{Result, ThetaError};
use crate::identities::{c_from_gradients, IdentityReport};
use crate::numeric::{singular_values, smallest_right_singular_vector};
use crate::period::PeriodMatrix;
use crate::rational::{cexp, LiftedVector, Rational, RationalVector};
use crate::theta::theta_jet_lifted;
use crate::truncation::TruncationPolicy;

/// Pass threshold for `sigma_min / sigma_max` in [`rank_check`].
pub const RANK_RATIO_FLOOR: f64 = 1e-8;
/// Required separation of the two smallest singular values of the cyclic system.
pub const KERNEL_GAP: f64 = 1e4;
/// Chordal agreement required of a genus-one preimage under the gradient map.
pub const PREIMAGE_MATCH: f64 = 1e-9;
/// Relative residual allowed for the preimage constants in the cyclic system.
pub const KERNEL_RESIDUAL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankCheck {
    pub singular_values: Vec<f64>,
    pub ratio: f64,
    pub pass: bool,
}

fn zero_point(g: usize) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); g]
}

fn require_half(name: &str, v: &RationalVector) -> Result<()> {
    if v.is_half_integer() {
        Ok(())
    } else {
        Err(ThetaError::InvalidArgument(format!("{name} = {v} must be half-integral")))
    }
}

fn require_reconstruction_level(n: u64) -> Result<()> {
    if n < 2 {
        return Err(ThetaError::InvalidArgument(format!("reconstruction needs n > 1, got {n}")));
    }
    Ok(())
}

/// Upper characteristics `a + delta/2n`, `a` over `((1/2n) Z / Z)^g`.
fn shifted_grid(delta: &RationalVector, n: u64) -> Vec<LiftedVector> {
    let shift = delta.lift().scale(Rational::new(1, 2 * n as i64));
    RationalVector::grid(2 * n, delta.genus())
        .iter()
        .map(|a| a.lift().add(&shift))
        .collect()
}

/// Rank of the matrix with rows `(theta, d_i d_j theta)_{i <= j}` of
/// `theta[a + delta/2n, eps](2n tau)` over `a` in `((1/2n) Z / Z)^g`.
pub fn rank_check(
    tau: &PeriodMatrix,
    n: u64,
    eps: &RationalVector,
    delta: &RationalVector,
    policy: &TruncationPolicy,
) -> Result<RankCheck> {
    if n == 0 {
        return Err(ThetaError::InvalidArgument("level n must be at least 1".into()));
    }
    require_half("eps", eps)?;
    require_half("delta", delta)?;
    let g = tau.genus();
    let rows = (2 * n as usize).pow(g as u32);
    let cols = g * (g + 1) / 2 + 1;
    if rows < cols {
        return Err(ThetaError::DimensionShortfall { rows, cols });
    }
    let scaled = tau.scaled(2.0 * n as f64);
    let mut m = DMatrix::zeros(rows, cols);
    for (r, p) in shifted_grid(delta, n).iter().enumerate() {
        let jet = theta_jet_lifted(&scaled, &zero_point(g), p, &eps.lift(), policy)?;
        m[(r, 0)] = jet.value;
        let mut c = 1;
        for i in 0..g {
            for j in i..g {
                m[(r, c)] = jet.hessian[(i, j)];
                c += 1;
            }
        }
    }
    let singular_values = singular_values(&m);
    let ratio = singular_values[cols - 1] / singular_values[0];
    Ok(RankCheck {
        pass: ratio > RANK_RATIO_FLOOR,
        singular_values,
        ratio,
    })
}

/// `A^{pq}_gamma` from frame columns.
fn a_from_frame(frame: &GradientFrame, p: &LiftedVector, q: &LiftedVector, gamma: &LiftedVector) -> Result<DMatrix<Complex64>> {
    let g = frame.genus();
    let sum = p.add(q);
    let (half_sum, half_diff) = (sum.half(), p.sub(q).half());
    let mut out = DMatrix::zeros(g, g);
    for eps in RationalVector::half_integers(g) {
        let e = eps.lift();
        let phase = cexp(sum.add(&e.scale(Rational::from_integer(2))).dot(gamma));
        let c = c_from_gradients(&frame.column(&e.add(&half_sum))?, &frame.column(&e.add(&half_diff))?);
        out += c * phase;
    }
    Ok(out)
}

/// Stacked cyclic relations in the unknowns `theta[p, gamma](2n tau)`, one
/// block of upper-triangle entries per unordered triple of indices.
pub fn cyclic_system(frame: &GradientFrame, gamma: &RationalVector, delta: &RationalVector) -> Result<DMatrix<Complex64>> {
    let g = frame.genus();
    let pts = shifted_grid(delta, frame.level());
    let big_n = pts.len();
    let gl = gamma.lift();
    let mut a = vec![vec![None; big_n]; big_n];
    for i in 0..big_n {
        for j in i + 1..big_n {
            let m = a_from_frame(frame, &pts[i], &pts[j], &gl)?;
            a[j][i] = Some(-m.clone());
            a[i][j] = Some(m);
        }
    }
    let tri: Vec<(usize, usize)> = (0..g).flat_map(|i| (i..g).map(move |j| (i, j))).collect();
    let triples = super::maps::subsets(big_n, 3);
    let mut system = DMatrix::zeros(triples.len() * tri.len(), big_n);
    for (t, ijk) in triples.iter().enumerate() {
        let (i, j, k) = (ijk[0], ijk[1], ijk[2]);
        for (r, &(u, v)) in tri.iter().enumerate() {
            let row = t * tri.len() + r;
            system[(row, k)] += a[i][j].as_ref().expect("i < j")[(u, v)];
            system[(row, i)] += a[j][k].as_ref().expect("j < k")[(u, v)];
            system[(row, j)] += a[k][i].as_ref().expect("k > i")[(u, v)];
        }
    }
    Ok(system)
}

/// Directly evaluated `[theta[a + delta/2n, gamma](2n tau)]_a`.
pub fn direct_constants(
    tau: &PeriodMatrix,
    gamma: &RationalVector,
    delta: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<Vec<Complex64>> {
    let g = tau.genus();
    let scaled = tau.scaled(2.0 * n as f64);
    shifted_grid(delta, n)
        .iter()
        .map(|p| theta_jet_lifted(&scaled, &zero_point(g), p, &gamma.lift(), policy).map(|j| j.value))
        .collect()
}

/// Projective point `[theta[a + delta/2n, gamma](2n tau)]_a` recovered from
/// the gradient frame at level `4n`.
///
/// In genus one the cyclic relations only confine the constants to a plane,
/// so the frame is first inverted numerically for `tau` and the constants at
/// the preimage are required to lie in that plane.
pub fn reconstruct_constants(
    frame: &GradientFrame,
    gamma: &RationalVector,
    delta: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<ProjectivePoint> {
    require_reconstruction_level(n)?;
    require_half("gamma", gamma)?;
    require_half("delta", delta)?;
    if frame.level() != n {
        return Err(ThetaError::InvalidArgument(format!("frame has level {}, expected {n}", frame.level())));
    }
    let system = cyclic_system(frame, gamma, delta)?;
    let (s, kernel) = smallest_right_singular_vector(&system);
    let k = s.len();
    // Exact zeros happen; measure both against a noise floor tied to sigma_max.
    let floor = s[0] * 1e-15;
    let gap = s[k - 2] / s[k - 1].max(floor);
    if gap >= KERNEL_GAP {
        return ProjectivePoint::new(kernel.iter().cloned().collect());
    }
    if frame.genus() != 1 {
        return Err(ThetaError::AmbiguousReconstruction { gap, required: KERNEL_GAP });
    }
    let tau = invert_phi_genus_one(frame, policy)?;
    let x = direct_constants(&tau, gamma, delta, n, policy)?;
    let xn = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mx = &system * nalgebra::DVector::from_vec(x.clone());
    let relative = mx.norm() / (s[0] * xn);
    if !(relative < KERNEL_RESIDUAL) {
        return Err(ThetaError::CrossCheck { relative });
    }
    ProjectivePoint::new(x)
}

/// A genus-one `tau` whose gradient frame matches `frame` projectively.
///
/// Seeded by a grid search over `Re tau in [-1, 1]`, `Im tau in [0.2, 4]`,
/// refined by Gauss-Newton on the holomorphic coordinate ratios.
pub fn invert_phi_genus_one(frame: &GradientFrame, policy: &TruncationPolicy) -> Result<PeriodMatrix> {
    if frame.genus() != 1 {
        return Err(ThetaError::DimensionMismatch { expected: 1, got: frame.genus() });
    }
    let n = frame.level();
    let target = pluecker(frame)?;
    let pivot = target.point.normalization();
    let t = target.point.coordinates().to_vec();
    let ratios = |tau: Complex64| -> Result<Vec<Complex64>> {
        let f = phi_map(&PeriodMatrix::scalar(tau)?, n, policy)?;
        let row: Vec<Complex64> = f.matrix().row(0).iter().cloned().collect();
        let d = row[pivot];
        Ok(row.iter().map(|c| c / d).collect())
    };
    let misfit = |r: &[Complex64]| r.iter().zip(&t).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>();

    let mut best = (f64::INFINITY, Complex64::new(0.0, 1.0));
    for i in 0..=40 {
        for j in 0..=40 {
            let tau = Complex64::new(-1.0 + 0.05 * i as f64, 0.2 * (20.0f64).powf(j as f64 / 40.0));
            if let Ok(r) = ratios(tau) {
                let m = misfit(&r);
                if m < best.0 {
                    best = (m, tau);
                }
            }
        }
    }
    let mut tau = best.1;
    let h = 1e-6;
    for _ in 0..60 {
        let r = ratios(tau)?;
        let fp = ratios(tau + h)?;
        let fm = ratios(tau - h)?;
        let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
        for k in 0..t.len() {
            let d = (fp[k] - fm[k]) / (2.0 * h);
            num += d.conj() * (r[k] - t[k]);
            den += d.norm_sqr();
        }
        if den == 0.0 {
            break;
        }
        let mut step = -num / den;
        while tau.im + step.im <= 0.05 * tau.im {
            step *= 0.5;
        }
        tau += step;
        if step.norm() < 1e-15 * tau.norm() {
            break;
        }
    }
    let tau = PeriodMatrix::scalar(tau)?;
    let found = pluecker(&phi_map(&tau, n, policy)?)?;
    let distance = found.chordal_distance(&target)?;
    if !(distance < PREIMAGE_MATCH) {
        return Err(ThetaError::CrossCheck { relative: distance });
    }
    Ok(tau)
}

/// `a + b - delta/n` must lie in `((1/n) Z / Z)^g`, and `a` in `((1/2n) Z / Z)^g`.
pub fn product_admissible(a: &RationalVector, b: &RationalVector, delta: &RationalVector, n: u64) -> bool {
    let shift = delta.scale(Rational::new(1, n as i64));
    a.add(b).sub(&shift).divides(n) && a.divides(2 * n)
}

fn check_products(a: &RationalVector, b: &RationalVector, delta: &RationalVector, n: u64) -> Result<()> {
    if !product_admissible(a, b, delta, n) {
        return Err(ThetaError::Inadmissible(format!(
            "a = {a}, b = {b}: a + b - delta/{n} must lie in (1/{n}) Z and a in (1/{}) Z",
            2 * n
        )));
    }
    Ok(())
}

/// `[theta[a, gamma+sigma](n tau) theta[b, gamma](n tau)]_gamma` by direct evaluation.
pub fn direct_products(
    tau: &PeriodMatrix,
    a: &RationalVector,
    b: &RationalVector,
    sigma: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<Vec<Complex64>> {
    let g = tau.genus();
    let scaled = tau.scaled(n as f64);
    let z = zero_point(g);
    RationalVector::half_integers(g)
        .iter()
        .map(|gamma| {
            let gl = gamma.lift();
            let u = theta_jet_lifted(&scaled, &z, &a.lift(), &gl.add(&sigma.lift()), policy)?.value;
            let v = theta_jet_lifted(&scaled, &z, &b.lift(), &gl, policy)?.value;
            Ok(u * v)
        })
        .collect()
}

/// Products `theta[a, gamma+sigma](n tau) theta[b, gamma](n tau)` over all
/// half-integral `gamma`, from level-`2n` constants reconstructed out of the frame.
#[allow(clippy::too_many_arguments)]
pub fn product_reconstruction(
    frame: &GradientFrame,
    a: &RationalVector,
    b: &RationalVector,
    sigma: &RationalVector,
    delta: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<ProjectivePoint> {
    require_reconstruction_level(n)?;
    require_half("sigma", sigma)?;
    check_products(a, b, delta, n)?;
    let g = frame.genus();
    let x = reconstruct_constants(frame, sigma, delta, n, policy)?;
    let shift = delta.lift().scale(Rational::new(1, 2 * n as i64));
    let lookup = |q: &LiftedVector| -> Result<Complex64> {
        let idx = q.sub(&shift).reduce().grid_index(2 * n).ok_or_else(|| {
            ThetaError::Inadmissible(format!("index {} off the level-{} grid", q.reduce(), 2 * n))
        })?;
        Ok(x.coordinates()[idx])
    };
    let (al, bl) = (a.lift(), b.lift());
    let sum = al.add(&bl);
    let (half_sum, half_diff) = (sum.half(), al.sub(&bl).half());
    let mut products = Vec::new();
    for gamma in RationalVector::half_integers(g) {
        let gl = gamma.lift();
        let mut total = Complex64::new(0.0, 0.0);
        for eps in RationalVector::half_integers(g) {
            let e = eps.lift();
            let phase = cexp(sum.add(&e.scale(Rational::from_integer(2))).dot(&gl));
            total += phase * lookup(&e.add(&half_sum))? * lookup(&e.add(&half_diff))?;
        }
        products.push(total);
    }
    let max_modulus = products.iter().map(|c| c.norm()).fold(0.0, f64::max);
    ProjectivePoint::new(products).map_err(|_| ThetaError::DegenerateProducts { max_modulus })
}

/// An admissible `(a, b)` with `theta[a, gamma+sigma](n tau) theta[b, gamma](n tau)`
/// above the zero floor, searched in lexicographic order.
pub fn product_witness(
    tau: &PeriodMatrix,
    gamma: &RationalVector,
    sigma: &RationalVector,
    delta: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<Option<(RationalVector, RationalVector)>> {
    let g = tau.genus();
    let scaled = tau.scaled(n as f64);
    let z = zero_point(g);
    let grid = RationalVector::grid(2 * n, g);
    let (gl, upper) = (gamma.lift(), gamma.lift().add(&sigma.lift()));
    for a in &grid {
        for b in &grid {
            if !product_admissible(a, b, delta, n) {
                continue;
            }
            let u = theta_jet_lifted(&scaled, &z, &a.lift(), &upper, policy)?.value;
            let v = theta_jet_lifted(&scaled, &z, &b.lift(), &gl, policy)?.value;
            if (u * v).norm() > ZERO_FLOOR {
                return Ok(Some((a.clone(), b.clone())));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationProbe {
    /// Chordal distance between the Pluecker points of the two frames.
    pub distance: f64,
    /// Chordal distance between the reconstructed level-`2n` constants.
    pub constants_distance: f64,
    pub report: IdentityReport,
}

/// Compares the gradient-map images of two period matrices. Identical inputs
/// must give distance below `1e-12`; distinct ones above `1e-6`.
pub fn separation_probe(tau1: &PeriodMatrix, tau2: &PeriodMatrix, n: u64, policy: &TruncationPolicy) -> Result<SeparationProbe> {
    if tau1.genus() != tau2.genus() {
        return Err(ThetaError::DimensionMismatch { expected: tau1.genus(), got: tau2.genus() });
    }
    let (f1, f2) = (phi_map(tau1, n, policy)?, phi_map(tau2, n, policy)?);
    let distance = pluecker(&f1)?.chordal_distance(&pluecker(&f2)?)?;
    let zero = RationalVector::zeros(tau1.genus());
    let c1 = reconstruct_constants(&f1, &zero, &zero, n, policy)?;
    let c2 = reconstruct_constants(&f2, &zero, &zero, n, policy)?;
    let constants_distance = c1.chordal_distance(&c2)?;
    let report = if tau1 == tau2 {
        IdentityReport::below("separation:identical", tau1.genus(), n, distance, 1.0, 1e-12)
    } else {
        IdentityReport::above("separation", tau1.genus(), n, distance, 1e-6)
    };
    let report = report
        .with_input("tau1_digest", tau1.digest())
        .with_input("tau2_digest", tau2.digest())
        .with_input("constants_distance", constants_distance)
        .with_degraded(f1.degraded() || f2.degraded());
    Ok(SeparationProbe { distance, constants_distance, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rv(pairs: &[(i64, i64)]) -> RationalVector {
        RationalVector::from_pairs(pairs).unwrap()
    }

    fn tau2() -> PeriodMatrix {
        PeriodMatrix::new(2, vec![c(0.2, 1.1), c(0.1, 0.3), c(0.1, 0.3), c(-0.3, 0.9)]).unwrap()
    }

    #[test]
    fn rank_is_full() {
        let p = Default::default();
        let r = rank_check(&PeriodMatrix::identity_times_i(1), 2, &rv(&[(0, 1)]), &rv(&[(0, 1)]), &p).unwrap();
        assert_eq!(r.singular_values.len(), 2);
        assert!(r.pass);
        let r = rank_check(&tau2(), 2, &rv(&[(1, 2), (0, 1)]), &rv(&[(0, 1), (1, 2)]), &p).unwrap();
        assert_eq!(r.singular_values.len(), 4);
        assert!(r.pass);
        let odd = rank_check(&PeriodMatrix::identity_times_i(1), 1, &rv(&[(1, 2)]), &rv(&[(1, 2)]), &p).unwrap();
        assert_eq!(odd.singular_values.len(), 2);
    }

    #[test]
    fn genus_two_kernel_recovers_constants() {
        let p = Default::default();
        let frame = phi_map(&tau2(), 2, &p).unwrap();
        for (gamma, delta) in [(rv(&[(0, 1), (0, 1)]), rv(&[(0, 1), (0, 1)])), (rv(&[(1, 2), (0, 1)]), rv(&[(0, 1), (1, 2)]))] {
            let got = reconstruct_constants(&frame, &gamma, &delta, 2, &p).unwrap();
            let want = ProjectivePoint::new(direct_constants(&tau2(), &gamma, &delta, 2, &p).unwrap()).unwrap();
            assert!(got.chordal_distance(&want).unwrap() < 1e-6);
        }
    }

    #[test]
    fn genus_one_uses_preimage() {
        let p = Default::default();
        let tau = PeriodMatrix::scalar(c(0.2, 1.3)).unwrap();
        let frame = phi_map(&tau, 2, &p).unwrap();
        let half = rv(&[(1, 2)]);
        let pre = invert_phi_genus_one(&frame, &p).unwrap();
        assert!((pre.entry(0, 0) - tau.entry(0, 0)).norm() < 1e-8);
        let got = reconstruct_constants(&frame, &half, &half, 2, &p).unwrap();
        let want = ProjectivePoint::new(direct_constants(&tau, &half, &half, 2, &p).unwrap()).unwrap();
        assert!(got.chordal_distance(&want).unwrap() < 1e-6);
    }

    #[test]
    fn products_match_direct() {
        let p = Default::default();
        let frame = phi_map(&tau2(), 2, &p).unwrap();
        let (a, b) = (rv(&[(1, 4), (0, 1)]), rv(&[(1, 2), (1, 2)]));
        let (sigma, delta) = (rv(&[(1, 2), (0, 1)]), rv(&[(1, 2), (0, 1)]));
        let got = product_reconstruction(&frame, &a, &b, &sigma, &delta, 2, &p).unwrap();
        let want = ProjectivePoint::new(direct_products(&tau2(), &a, &b, &sigma, 2, &p).unwrap()).unwrap();
        assert!(got.chordal_distance(&want).unwrap() < 1e-6);
        assert!(matches!(
            product_reconstruction(&frame, &a, &a, &sigma, &delta, 2, &p),
            Err(ThetaError::Inadmissible(_))
        ));
    }

    #[test]
    fn separation() {
        let p = Default::default();
        let t1 = PeriodMatrix::identity_times_i(1);
        let same = separation_probe(&t1, &t1, 2, &p).unwrap();
        assert!(same.distance < 1e-12 && same.report.pass);
        let t2 = PeriodMatrix::scalar(c(0.0, 1.1)).unwrap();
        let diff = separation_probe(&t1, &t2, 2, &p).unwrap();
        assert!(diff.distance > 1e-6 && diff.report.pass);
    }
}
