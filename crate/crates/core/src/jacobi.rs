//! Jacobi's derivative formula and its generalization to arbitrary level.
//!
//! Conventions, fixed once: `D` is the matrix of tau-partials with weight 1
//! on the diagonal and 1/2 off it, taken with respect to `tau` itself, so a
//! function of `2n tau` picks up the chain-rule factor `2n`.
//!
//! The generalized formula reads
//!
//! `c theta[0,d](2n tau)^{2g} det D(theta[a,d](2n tau) / theta[0,d](2n tau))
//!     = sum_{eps_1..eps_g} e(2 d^t (eps_1 + .. + eps_g)) D([a/2+eps_1, 0], .., [a/2+eps_g, 0])^2 (4n tau)`
//!
//! with the constant `c` estimated numerically.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThetaError};
use crate::identities::IdentityReport;
use crate::moduli::jacobian_det_from_rows;
use crate::numeric::{matrix_max_abs, max_diff, residual_scale, serde_complex};
use crate::period::PeriodMatrix;
use crate::rational::{cexp, LiftedVector, Rational, RationalVector};
use crate::theta::{theta_jet_lifted, ThetaJet};
use crate::truncation::TruncationPolicy;

/// Heat-equation and direct tau-derivatives must agree to this, relatively.
pub const ROUTE_AGREEMENT: f64 = 1e-9;
/// Denominators below this modulus are rejected.
pub const DENOMINATOR_FLOOR: f64 = 1e-10;
/// Samples where either side is below this are not used for estimation.
pub const USABLE_FLOOR: f64 = 1e-12;
pub const MIN_SAMPLES: usize = 10;
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DOperatorResult {
    #[serde(with = "serde_complex::matrix")]
    pub matrix: DMatrix<Complex64>,
    #[serde(with = "serde_complex")]
    pub det: Complex64,
    /// Largest relative disagreement between the two derivative routes.
    pub route_disagreement: f64,
    pub degraded: bool,
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

/// Disagreement between the heat-equation and direct `D theta` of a jet,
/// on the residual scale `max(1, |theta|, |D theta|)`. The tail is only
/// controlled in absolute terms, so a purely relative measure is meaningless
/// when `D theta` itself is tiny.
pub fn heat_disagreement(jet: &ThetaJet) -> f64 {
    let heat = jet.heat_tau_deriv();
    max_diff(&heat, &jet.tau_deriv) / derivative_scale(jet)
}

/// `max(1, |theta|, max |D theta|)`.
pub fn derivative_scale(jet: &ThetaJet) -> f64 {
    residual_scale(&[jet.value.norm(), matrix_max_abs(&jet.tau_deriv)])
}

/// `D` of `theta[a, delta](2n tau) / theta[0, delta](2n tau)` by the quotient rule.
pub fn d_operator_quotient(
    tau: &PeriodMatrix,
    a: &RationalVector,
    delta: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<DOperatorResult> {
    if n == 0 {
        return Err(ThetaError::InvalidArgument("level n must be at least 1".into()));
    }
    require_half("delta", delta)?;
    let g = tau.genus();
    let scaled = tau.scaled(2.0 * n as f64);
    let z = zero_point(g);
    let num = theta_jet_lifted(&scaled, &z, &a.lift(), &delta.lift(), policy)?;
    let den = theta_jet_lifted(&scaled, &z, &LiftedVector::zeros(g), &delta.lift(), policy)?;
    if !(den.value.norm() > DENOMINATOR_FLOOR) {
        return Err(ThetaError::VanishingDenominator { modulus: den.value.norm() });
    }
    let route_disagreement = heat_disagreement(&num).max(heat_disagreement(&den));
    if !(route_disagreement < ROUTE_AGREEMENT) {
        return Err(ThetaError::CrossCheck { relative: route_disagreement });
    }
    let chain = 2.0 * n as f64;
    let matrix = (&num.tau_deriv * den.value - &den.tau_deriv * num.value) * (chain / (den.value * den.value));
    let det = matrix.determinant();
    Ok(DOperatorResult {
        matrix,
        det,
        route_disagreement,
        degraded: num.degraded || den.degraded,
    })
}

/// `theta[0, delta](2n tau)^{2g} det D(quotient)`: the left side without its constant.
pub fn lhs_without_constant(
    tau: &PeriodMatrix,
    a: &RationalVector,
    delta: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<(Complex64, bool)> {
    let g = tau.genus();
    let d = d_operator_quotient(tau, a, delta, n, policy)?;
    let den = theta_jet_lifted(
        &tau.scaled(2.0 * n as f64),
        &zero_point(g),
        &LiftedVector::zeros(g),
        &delta.lift(),
        policy,
    )?
    .value;
    Ok((den.powi(2 * g as i32) * d.det, d.degraded))
}

/// Phased sum of squared Jacobian determinants at `4n tau`.
pub fn rhs_sum(
    tau: &PeriodMatrix,
    a: &RationalVector,
    delta: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<Complex64> {
    Ok(rhs_sum_flagged(tau, a, delta, n, policy)?.0)
}

fn rhs_sum_flagged(
    tau: &PeriodMatrix,
    a: &RationalVector,
    delta: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<(Complex64, bool)> {
    if n == 0 || !a.divides(2 * n) {
        return Err(ThetaError::OrderMismatch { order: a.order(), modulus: 2 * n });
    }
    require_half("delta", delta)?;
    let g = tau.genus();
    let scaled = tau.scaled(4.0 * n as f64);
    let half_a = a.lift().half();
    let eps_all = RationalVector::half_integers(g);
    let jets = eps_all
        .iter()
        .map(|e| theta_jet_lifted(&scaled, &zero_point(g), &half_a.add(&e.lift()), &LiftedVector::zeros(g), policy))
        .collect::<Result<Vec<_>>>()?;
    let degraded = jets.iter().any(|j| j.degraded);
    let grads: Vec<&Vec<Complex64>> = jets.iter().map(|j| &j.gradient).collect();
    let k = eps_all.len();
    let mut total = Complex64::new(0.0, 0.0);
    for t in 0..k.pow(g as u32) {
        let choice: Vec<usize> = (0..g).map(|i| (t / k.pow((g - 1 - i) as u32)) % k).collect();
        let mut eps_sum = LiftedVector::zeros(g);
        for &c in &choice {
            eps_sum = eps_sum.add(&eps_all[c].lift());
        }
        let phase = cexp(delta.lift().dot(&eps_sum) * Rational::from_integer(2));
        let rows = DMatrix::from_fn(g, g, |i, j| grads[choice[i]][j]);
        let d = jacobian_det_from_rows(&rows);
        total += phase * d * d;
    }
    Ok((total, degraded))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    #[serde(with = "serde_complex")]
    pub estimate: Complex64,
    #[serde(with = "serde_complex::vec")]
    pub ratios: Vec<Complex64>,
    pub relative_std: f64,
    pub samples: usize,
    pub a: RationalVector,
    pub delta: RationalVector,
    pub n: u64,
    pub genus: usize,
    pub degraded: bool,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Both sides at one `tau`, without the constant, and the degradation flag.
pub fn formula_sides(
    tau: &PeriodMatrix,
    a: &RationalVector,
    delta: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<(Complex64, Complex64, bool)> {
    let (lhs, d1) = lhs_without_constant(tau, a, delta, n, policy)?;
    let (rhs, d2) = rhs_sum_flagged(tau, a, delta, n, policy)?;
    Ok((lhs, rhs, d1 || d2))
}

/// Index tuples `(a, delta)` with `a != 0` at level `2n`. Pairs whose
/// numerator `theta[a, delta]` is an odd theta constant vanish identically
/// on both sides and carry no information, so they are left out.
pub fn index_tuples(g: usize, n: u64) -> Vec<(RationalVector, RationalVector)> {
    let mut out = Vec::new();
    for a in RationalVector::grid(2 * n, g).into_iter().filter(|a| !a.is_zero()) {
        for delta in RationalVector::half_integers(g) {
            if a.is_half_integer() && RationalVector::parity(&a, &delta) == 1 {
                continue;
            }
            out.push((a.clone(), delta));
        }
    }
    out
}

/// Median (coordinatewise) of `rhs / lhs` over the usable samples.
pub fn estimate_constant(
    samples: &[PeriodMatrix],
    a: &RationalVector,
    delta: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<ConstantEstimate> {
    let sides = samples
        .par_iter()
        .map(|tau| formula_sides(tau, a, delta, n, policy))
        .collect::<Vec<_>>();
    let mut ratios = Vec::new();
    let mut degraded = false;
    for s in sides {
        match s {
            Ok((lhs, rhs, flag)) if lhs.norm() > USABLE_FLOOR && rhs.norm() > USABLE_FLOOR => {
                degraded |= flag;
                ratios.push(rhs / lhs)
            }
            Ok(_) | Err(ThetaError::VanishingDenominator { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if ratios.len() < MIN_SAMPLES {
        return Err(ThetaError::InsufficientData { usable: ratios.len(), required: MIN_SAMPLES });
    }
    let estimate = Complex64::new(
        median(ratios.iter().map(|r| r.re).collect()),
        median(ratios.iter().map(|r| r.im).collect()),
    );
    let mean: Complex64 = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
    let var = ratios.iter().map(|r| (r - mean).norm_sqr()).sum::<f64>() / ratios.len() as f64;
    Ok(ConstantEstimate {
        estimate,
        relative_std: var.sqrt() / mean.norm(),
        samples: ratios.len(),
        ratios,
        a: a.clone(),
        delta: delta.clone(),
        n,
        genus: a.genus(),
        degraded,
    })
}

/// The generalized formula with a fitted constant at one (held-out) `tau`.
pub fn generalized_residual(
    tau: &PeriodMatrix,
    estimate: &ConstantEstimate,
    policy: &TruncationPolicy,
    tol: f64,
) -> Result<IdentityReport> {
    let (lhs, rhs, degraded) = formula_sides(tau, &estimate.a, &estimate.delta, estimate.n, policy)?;
    let lhs = lhs * estimate.estimate;
    let scale = lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE);
    Ok(IdentityReport::below("jacobi-generalized", tau.genus(), estimate.n, (lhs - rhs).norm() / scale, scale, tol)
        .with_tau(tau)
        .with_char("a", &estimate.a)
        .with_char("delta", &estimate.delta)
        .with_input("constant", vec![estimate.estimate.re, estimate.estimate.im])
        .with_degraded(degraded))
}

fn genus_one(tau: &PeriodMatrix) -> Result<()> {
    if tau.genus() != 1 {
        return Err(ThetaError::DimensionMismatch { expected: 1, got: tau.genus() });
    }
    Ok(())
}

/// `theta00 theta10 theta01` at `tau` (genus one) and the degradation flag.
fn even_product(tau: &PeriodMatrix, policy: &TruncationPolicy) -> Result<(Complex64, ThetaJet)> {
    let h = |k: i64| LiftedVector::new(vec![Rational::new(k, 2)]);
    let z = zero_point(1);
    let t00 = theta_jet_lifted(tau, &z, &h(0), &h(0), policy)?;
    let t10 = theta_jet_lifted(tau, &z, &h(1), &h(0), policy)?;
    let t01 = theta_jet_lifted(tau, &z, &h(0), &h(1), policy)?;
    let odd = theta_jet_lifted(tau, &z, &h(1), &h(1), policy)?;
    let mut odd_flagged = odd;
    odd_flagged.degraded |= t00.degraded || t10.degraded || t01.degraded;
    Ok((t00.value * t10.value * t01.value, odd_flagged))
}

/// `theta'[1/2,1/2](tau, 0) = -pi theta[0,0] theta[1/2,0] theta[0,1/2]`.
pub fn classical_jacobi_residual(tau: &PeriodMatrix, policy: &TruncationPolicy) -> Result<IdentityReport> {
    genus_one(tau)?;
    let (prod, odd) = even_product(tau, policy)?;
    let lhs = odd.gradient[0];
    let rhs = -PI * prod;
    let scale = lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE);
    Ok(IdentityReport::below("jacobi-classical", 1, 1, (lhs - rhs).norm() / scale, scale, 1e-9)
        .with_tau(tau)
        .with_degraded(odd.degraded))
}

/// Genus one, level one, `a = 1/2`, `delta = 0`: the generalized right side
/// against twice the square of `i theta00 theta10 theta01 / 4`, its value
/// predicted by the classical formula.
pub fn classical_consistency_residual(tau: &PeriodMatrix, policy: &TruncationPolicy) -> Result<IdentityReport> {
    genus_one(tau)?;
    let half = RationalVector::constant(1, 1, 2);
    let rhs = rhs_sum(tau, &half, &RationalVector::zeros(1), 1, policy)?;
    let (prod, odd) = even_product(tau, policy)?;
    let root = Complex64::new(0.0, 0.25) * prod;
    let predicted = root * root * 2.0;
    let scale = rhs.norm().max(predicted.norm()).max(f64::MIN_POSITIVE);
    Ok(IdentityReport::below("jacobi-classical:consistency", 1, 1, (rhs - predicted).norm() / scale, scale, 1e-8)
        .with_tau(tau)
        .with_degraded(odd.degraded))
}

/// Central difference in the symmetric variable `tau_jk` with step `h`
/// plus one Richardson level.
pub fn finite_difference<F>(f: &F, tau: &PeriodMatrix, j: usize, k: usize, h: f64) -> Result<Complex64>
where
    F: Fn(&PeriodMatrix) -> Result<Complex64>,
{
    let central = |h: f64| -> Result<Complex64> {
        let step = Complex64::new(h, 0.0);
        Ok((f(&tau.perturbed(j, k, step)?)? - f(&tau.perturbed(j, k, -step)?)?) / (2.0 * h))
    };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// `D f` (weights 1 and 1/2) by finite differences.
pub fn finite_difference_d<F>(f: &F, tau: &PeriodMatrix) -> Result<DMatrix<Complex64>>
where
    F: Fn(&PeriodMatrix) -> Result<Complex64>,
{
    let g = tau.genus();
    let mut out = DMatrix::zeros(g, g);
    for j in 0..g {
        for k in j..g {
            let d = finite_difference(f, tau, j, k, FD_STEP)?;
            let w = if j == k { d } else { d * 0.5 };
            out[(j, k)] = w;
            out[(k, j)] = w;
        }
    }
    Ok(out)
}
