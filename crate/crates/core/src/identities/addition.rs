//! Shift formula, doubling identity and both forms of the bilinear addition
//! theorem, each checked by evaluating both sides.

use num_complex::Complex64;

use super::report::IdentityReport;
use crate::error::{Result, ThetaError};
use crate::numeric::residual_scale;
use crate::period::PeriodMatrix;
use crate::rational::{cexp, LiftedVector, Rational, RationalVector};
use crate::theta::theta_jet_lifted;
use crate::truncation::TruncationPolicy;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Running evaluation state: tracks degradation across all theta calls.
pub(crate) struct Evaluator<'a> {
    pub policy: &'a TruncationPolicy,
    pub degraded: bool,
}

impl<'a> Evaluator<'a> {
    pub fn new(policy: &'a TruncationPolicy) -> Self {
        Self {
            policy,
            degraded: false,
        }
    }

    pub fn value(
        &mut self,
        tau: &PeriodMatrix,
        z: &[Complex64],
        upper: &LiftedVector,
        lower: &LiftedVector,
    ) -> Result<Complex64> {
        let jet = theta_jet_lifted(tau, z, upper, lower, self.policy)?;
        self.degraded |= jet.degraded;
        Ok(jet.value)
    }
}

fn scale_point(z: &[Complex64], s: f64) -> Vec<Complex64> {
    z.iter().map(|c| c * s).collect()
}

fn combine(a: &[Complex64], b: &[Complex64], sign: f64) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + y * sign).collect()
}

fn require_half_integer(name: &str, v: &RationalVector) -> Result<()> {
    if v.is_half_integer() {
        Ok(())
    } else {
        Err(ThetaError::InvalidArgument(format!(
            "{name} = {v} must lie in (1/2 Z / Z)^g"
        )))
    }
}

fn check_genus(tau: &PeriodMatrix, z: &[Complex64], chars: &[&RationalVector]) -> Result<()> {
    let g = tau.genus();
    if z.len() != g {
        return Err(ThetaError::DimensionMismatch { expected: g, got: z.len() });
    }
    for c in chars {
        if c.genus() != g {
            return Err(ThetaError::DimensionMismatch { expected: g, got: c.genus() });
        }
    }
    Ok(())
}

fn finish(report: IdentityReport, lhs: Complex64, rhs: Complex64, terms: &[f64]) -> IdentityReport {
    let scale = residual_scale(terms);
    let mut report = report;
    report.residual = (lhs - rhs).norm() / scale;
    report.scale = scale;
    let threshold = report.threshold;
    report.rejudge(threshold);
    report
}

/// Quasi-periodicity under a rational shift:
///
/// `theta[a,b](tau, z + tau c + d) = e(-1/2 c^t tau c - c^t (z + d + b)) theta[a+c, b+d](tau, z)`
pub fn verify_shift(
    tau: &PeriodMatrix,
    z: &[Complex64],
    a: &RationalVector,
    b: &RationalVector,
    c: &RationalVector,
    d: &RationalVector,
    policy: &TruncationPolicy,
) -> Result<IdentityReport> {
    check_genus(tau, z, &[a, b, c, d])?;
    let g = tau.genus();
    let mut ev = Evaluator::new(policy);
    let (cf, df) = (c.to_f64(), d.to_f64());

    let shifted: Vec<Complex64> = (0..g)
        .map(|j| {
            let tau_c: Complex64 = (0..g).map(|k| tau.entry(j, k) * cf[k]).sum();
            z[j] + tau_c + df[j]
        })
        .collect();
    let lhs = ev.value(tau, &shifted, &a.lift(), &b.lift())?;

    let mut float_part = Complex64::new(0.0, 0.0);
    for j in 0..g {
        float_part += z[j] * cf[j];
        for k in 0..g {
            float_part += tau.entry(j, k) * (0.5 * cf[j] * cf[k]);
        }
    }
    let exact_part = c.lift().dot(&d.lift().add(&b.lift()));
    let phase = crate::rational::cexp_complex(-float_part) * cexp(-exact_part);
    let theta = ev.value(tau, z, &a.lift().add(&c.lift()), &b.lift().add(&d.lift()))?;
    let rhs = phase * theta;

    let report = IdentityReport::below("shift", g, 1, 0.0, 1.0, DEFAULT_TOLERANCE)
        .with_tau(tau)
        .with_point("z", z)
        .with_char("a", a)
        .with_char("b", b)
        .with_char("c", c)
        .with_char("d", d)
        .with_degraded(ev.degraded);
    Ok(finish(report, lhs, rhs, &[lhs.norm(), rhs.norm()]))
}

/// Doubling identity:
///
/// `theta[a, beta](tau, 2z) = sum_eps e(beta^t (2 eps + a)) theta[eps + a/2, 0](4 tau, 4 z)`
pub fn verify_doubling(
    tau: &PeriodMatrix,
    z: &[Complex64],
    a: &RationalVector,
    beta: &RationalVector,
    policy: &TruncationPolicy,
) -> Result<IdentityReport> {
    check_genus(tau, z, &[a, beta])?;
    require_half_integer("beta", beta)?;
    let g = tau.genus();
    let mut ev = Evaluator::new(policy);
    let a_l = a.lift();
    let zero = LiftedVector::zeros(g);

    let lhs = ev.value(tau, &scale_point(z, 2.0), &a_l, &beta.lift())?;
    let tau4 = tau.scaled(4.0);
    let z4 = scale_point(z, 4.0);
    let mut rhs = Complex64::new(0.0, 0.0);
    let mut terms = vec![lhs.norm()];
    for eps in RationalVector::half_integers(g) {
        let e_l = eps.lift();
        let phase = cexp(beta.lift().dot(&e_l.scale(Rational::from_integer(2)).add(&a_l)));
        let term = phase * ev.value(&tau4, &z4, &e_l.add(&a_l.half()), &zero)?;
        terms.push(term.norm());
        rhs += term;
    }

    let report = IdentityReport::below("doubling", g, 1, 0.0, 1.0, DEFAULT_TOLERANCE)
        .with_tau(tau)
        .with_point("z", z)
        .with_char("a", a)
        .with_char("beta", beta)
        .with_degraded(ev.degraded);
    Ok(finish(report, lhs, rhs, &terms))
}

/// Bilinear addition theorem, halving form:
///
/// `theta[a,eps](4n tau, 4n z) theta[b,eps](4n tau, 4n w)
///   = 2^-g sum_sigma e(-2 a^t sigma) theta[a+b, sigma+eps](2n tau, 2n(z+w)) theta[a-b, sigma](2n tau, 2n(z-w))`
#[allow(clippy::too_many_arguments)]
pub fn verify_addition_forward(
    tau: &PeriodMatrix,
    z: &[Complex64],
    w: &[Complex64],
    a: &RationalVector,
    b: &RationalVector,
    eps: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<IdentityReport> {
    check_genus(tau, z, &[a, b, eps])?;
    check_genus(tau, w, &[])?;
    require_half_integer("eps", eps)?;
    require_level(n)?;
    let g = tau.genus();
    let nf = n as f64;
    let mut ev = Evaluator::new(policy);
    let (a_l, b_l, e_l) = (a.lift(), b.lift(), eps.lift());

    let tau4 = tau.scaled(4.0 * nf);
    let lhs = ev.value(&tau4, &scale_point(z, 4.0 * nf), &a_l, &e_l)?
        * ev.value(&tau4, &scale_point(w, 4.0 * nf), &b_l, &e_l)?;

    let tau2 = tau.scaled(2.0 * nf);
    let zp = scale_point(&combine(z, w, 1.0), 2.0 * nf);
    let zm = scale_point(&combine(z, w, -1.0), 2.0 * nf);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut terms = vec![lhs.norm()];
    let norm = 0.5f64.powi(g as i32);
    for sigma in RationalVector::half_integers(g) {
        let s_l = sigma.lift();
        let phase = cexp(-a_l.dot(&s_l) * Rational::from_integer(2));
        let term = phase
            * ev.value(&tau2, &zp, &a_l.add(&b_l), &s_l.add(&e_l))?
            * ev.value(&tau2, &zm, &a_l.sub(&b_l), &s_l)?;
        terms.push(term.norm() * norm);
        sum += term;
    }
    let rhs = sum * norm;

    let report = IdentityReport::below("addition-forward", g, n, 0.0, 1.0, DEFAULT_TOLERANCE)
        .with_tau(tau)
        .with_point("z", z)
        .with_point("w", w)
        .with_char("a", a)
        .with_char("b", b)
        .with_char("eps", eps)
        .with_degraded(ev.degraded);
    Ok(finish(report, lhs, rhs, &terms))
}

/// Bilinear addition theorem, doubling form:
///
/// `theta[a, gamma+sigma](2n tau, 2n z) theta[b, gamma](2n tau, 2n w)
///   = sum_eps e((a+b+2eps)^t gamma) theta[eps+(a+b)/2, sigma](4n tau, 2n(z+w)) theta[eps+(a-b)/2, sigma](4n tau, 2n(z-w))`
#[allow(clippy::too_many_arguments)]
pub fn verify_addition_converse(
    tau: &PeriodMatrix,
    z: &[Complex64],
    w: &[Complex64],
    a: &RationalVector,
    b: &RationalVector,
    gamma: &RationalVector,
    sigma: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<IdentityReport> {
    check_genus(tau, z, &[a, b, gamma, sigma])?;
    check_genus(tau, w, &[])?;
    require_half_integer("gamma", gamma)?;
    require_half_integer("sigma", sigma)?;
    require_level(n)?;
    let g = tau.genus();
    let nf = n as f64;
    let mut ev = Evaluator::new(policy);
    let (a_l, b_l, ga_l, si_l) = (a.lift(), b.lift(), gamma.lift(), sigma.lift());

    let tau2 = tau.scaled(2.0 * nf);
    let lhs = ev.value(&tau2, &scale_point(z, 2.0 * nf), &a_l, &ga_l.add(&si_l))?
        * ev.value(&tau2, &scale_point(w, 2.0 * nf), &b_l, &ga_l)?;

    let tau4 = tau.scaled(4.0 * nf);
    let zp = scale_point(&combine(z, w, 1.0), 2.0 * nf);
    let zm = scale_point(&combine(z, w, -1.0), 2.0 * nf);
    let sum_ab = a_l.add(&b_l);
    let half_sum = sum_ab.half();
    let half_diff = a_l.sub(&b_l).half();
    let mut rhs = Complex64::new(0.0, 0.0);
    let mut terms = vec![lhs.norm()];
    for eps in RationalVector::half_integers(g) {
        let e_l = eps.lift();
        let phase = cexp(sum_ab.add(&e_l.scale(Rational::from_integer(2))).dot(&ga_l));
        let term = phase
            * ev.value(&tau4, &zp, &e_l.add(&half_sum), &si_l)?
            * ev.value(&tau4, &zm, &e_l.add(&half_diff), &si_l)?;
        terms.push(term.norm());
        rhs += term;
    }

    let report = IdentityReport::below("addition-converse", g, n, 0.0, 1.0, DEFAULT_TOLERANCE)
        .with_tau(tau)
        .with_point("z", z)
        .with_point("w", w)
        .with_char("a", a)
        .with_char("b", b)
        .with_char("gamma", gamma)
        .with_char("sigma", sigma)
        .with_degraded(ev.degraded);
    Ok(finish(report, lhs, rhs, &terms))
}

pub(crate) fn require_level(n: u64) -> Result<()> {
    if n == 0 {
        Err(ThetaError::InvalidArgument("level n must be at least 1".into()))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::cexp_complex;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rv(pairs: &[(i64, i64)]) -> RationalVector {
        RationalVector::from_pairs(pairs).unwrap()
    }

    fn tau2() -> PeriodMatrix {
        PeriodMatrix::new(2, vec![c(0.2, 1.1), c(0.1, 0.3), c(0.1, 0.3), c(-0.3, 0.9)]).unwrap()
    }

    /// Independent summation oracle for genus one over |n| <= 40.
    fn oracle(tau: Complex64, z: Complex64, eps: f64, delta: f64) -> Complex64 {
        (-40..=40)
            .map(|n| {
                let x = n as f64 + eps;
                cexp_complex(0.5 * x * x * tau + x * (z + delta))
            })
            .sum()
    }

    #[test]
    fn shift_trivial_case() {
        let tau = tau2();
        let z = [c(0.1, 0.2), c(-0.3, 0.05)];
        let zero = RationalVector::zeros(2);
        let r = verify_shift(&tau, &z, &rv(&[(1, 3), (1, 8)]), &rv(&[(1, 4), (0, 1)]), &zero, &zero, &Default::default())
            .unwrap();
        assert!(r.residual < 1e-15, "{}", r.residual);
    }

    #[test]
    fn shift_half_period_genus_one() {
        let tau = PeriodMatrix::identity_times_i(1);
        let z = [c(0.2, 0.0)];
        let zero = rv(&[(0, 1)]);
        let half = rv(&[(1, 2)]);
        let r = verify_shift(&tau, &z, &zero, &zero, &half, &zero, &Default::default()).unwrap();
        assert!(r.pass && r.residual < 1e-10);
        // Oracle: both sides by direct summation.
        let i = c(0.0, 1.0);
        let lhs = oracle(i, z[0] + 0.5 * i, 0.0, 0.0);
        let rhs = cexp_complex(-(0.125 * i) - 0.5 * z[0]) * oracle(i, z[0], 0.5, 0.0);
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn shift_genus_two_eighths() {
        let z = [c(0.1, 0.2), c(-0.3, 0.05)];
        let r = verify_shift(
            &tau2(),
            &z,
            &rv(&[(1, 4), (3, 8)]),
            &rv(&[(1, 2), (1, 8)]),
            &rv(&[(1, 8), (1, 2)]),
            &rv(&[(1, 2), (3, 4)]),
            &Default::default(),
        )
        .unwrap();
        assert!(r.residual < 1e-9, "{}", r.residual);
    }

    #[test]
    fn doubling_examples() {
        let tau = PeriodMatrix::identity_times_i(1);
        let zero = rv(&[(0, 1)]);
        let r = verify_doubling(&tau, &[c(0.0, 0.0)], &zero, &zero, &Default::default()).unwrap();
        assert!(r.residual < 1e-10);
        let i = c(0.0, 1.0);
        let lhs = oracle(i, c(0.0, 0.0), 0.0, 0.0);
        let rhs = oracle(4.0 * i, c(0.0, 0.0), 0.0, 0.0) + oracle(4.0 * i, c(0.0, 0.0), 0.5, 0.0);
        assert!((lhs - rhs).norm() < 1e-13);

        let r = verify_doubling(&tau, &[c(0.1, 0.0)], &rv(&[(1, 3)]), &rv(&[(1, 2)]), &Default::default()).unwrap();
        assert!(r.residual < 1e-9);
        let r = verify_doubling(
            &tau2(),
            &[c(0.3, -0.1), c(0.05, 0.2)],
            &rv(&[(1, 4), (1, 2)]),
            &rv(&[(1, 2), (0, 1)]),
            &Default::default(),
        )
        .unwrap();
        assert!(r.residual < 1e-9);
        assert!(verify_doubling(&tau, &[c(0.0, 0.0)], &zero, &rv(&[(1, 4)]), &Default::default()).is_err());
    }

    #[test]
    fn addition_forward_examples() {
        let tau = PeriodMatrix::identity_times_i(1);
        let zero = rv(&[(0, 1)]);
        let o = [c(0.0, 0.0)];
        let r = verify_addition_forward(&tau, &o, &o, &rv(&[(1, 4)]), &rv(&[(1, 4)]), &zero, 1, &Default::default())
            .unwrap();
        assert!(r.residual < 1e-10);
        let r = verify_addition_forward(
            &tau,
            &[c(0.1, 0.0)],
            &[c(-0.05, 0.2)],
            &rv(&[(1, 8)]),
            &rv(&[(3, 8)]),
            &rv(&[(1, 2)]),
            2,
            &Default::default(),
        )
        .unwrap();
        assert!(r.residual < 1e-9, "{}", r.residual);
        let r = verify_addition_forward(
            &tau2(),
            &[c(0.1, 0.2), c(-0.3, 0.05)],
            &[c(-0.2, 0.1), c(0.25, -0.15)],
            &rv(&[(1, 4), (3, 4)]),
            &rv(&[(1, 2), (1, 4)]),
            &rv(&[(0, 1), (1, 2)]),
            1,
            &Default::default(),
        )
        .unwrap();
        assert!(r.residual < 1e-9);
    }

    #[test]
    fn addition_converse_examples() {
        let tau = PeriodMatrix::identity_times_i(1);
        let zero = rv(&[(0, 1)]);
        let o = [c(0.0, 0.0)];
        let r = verify_addition_converse(&tau, &o, &o, &zero, &zero, &zero, &zero, 1, &Default::default()).unwrap();
        assert!(r.residual < 1e-10);
        let half = rv(&[(1, 2)]);
        let r = verify_addition_converse(
            &PeriodMatrix::scalar(c(0.3, 1.1)).unwrap(),
            &[c(0.12, -0.3)],
            &[c(-0.4, 0.22)],
            &rv(&[(1, 4)]),
            &rv(&[(3, 4)]),
            &half,
            &half,
            2,
            &Default::default(),
        )
        .unwrap();
        assert!(r.residual < 1e-9, "{}", r.residual);
        let r = verify_addition_converse(
            &tau2(),
            &[c(0.1, 0.2), c(-0.3, 0.05)],
            &[c(-0.2, 0.1), c(0.25, -0.15)],
            &rv(&[(1, 4), (3, 4)]),
            &rv(&[(1, 2), (1, 4)]),
            &rv(&[(1, 2), (1, 2)]),
            &rv(&[(1, 2), (0, 1)]),
            1,
            &Default::default(),
        )
        .unwrap();
        assert!(r.residual < 1e-9);
    }
}
