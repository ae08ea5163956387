//! The pairing matrices
//!
//! `C^{ab}   = (2 d_i theta[a,0](4n tau) d_j theta[b,0](4n tau) + (i <-> j))`
//! `A^{ab}_e = (d_i d_j theta[a,e](2n tau) theta[b,e](2n tau) - theta[a,e](2n tau) d_i d_j theta[b,e](2n tau))`
//!
//! and the two ways of expressing one through the other:
//!
//! `C^{ab}   = 2^-g sum_sigma e(-2 a^t sigma) A^{a+b, a-b}_sigma`
//! `A^{ab}_d = sum_eps e((a+b+2eps)^t d) C^{eps+(a+b)/2, eps+(a-b)/2}`

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::addition::{require_level, DEFAULT_TOLERANCE};
use super::report::IdentityReport;
use crate::error::{Result, ThetaError};
use crate::numeric::{matrix_max_abs, max_diff, residual_scale, serde_complex, singular_values};
use crate::period::PeriodMatrix;
use crate::rational::{cexp, LiftedVector, Rational, RationalVector};
use crate::theta::{theta_jet_lifted, ThetaJet};
use crate::truncation::TruncationPolicy;

/// Multiplier on the right side of the A-from-C relation. The derivation
/// (second z-derivatives of the doubling-form addition theorem) gives
/// exactly one; a factor of two would break the round trip with the
/// C-from-A relation.
pub const A_FROM_C_FACTOR: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairingKind {
    C,
    A,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingMatrix {
    #[serde(with = "serde_complex::matrix")]
    pub entries: DMatrix<Complex64>,
    pub kind: PairingKind,
    pub index_a: RationalVector,
    pub index_b: RationalVector,
    /// Lower characteristic, for kind A only.
    pub lower_char: Option<RationalVector>,
    pub order_n: u64,
    pub tau_ref: PeriodMatrix,
}

/// Jets at `z = 0` of theta functions at `m tau`, memoized per characteristic.
pub struct JetCache<'a> {
    tau: &'a PeriodMatrix,
    policy: &'a TruncationPolicy,
    scaled: HashMap<u64, PeriodMatrix>,
    jets: HashMap<(u64, RationalVector, LiftedVector), ThetaJet>,
    pub degraded: bool,
}

impl<'a> JetCache<'a> {
    pub fn new(tau: &'a PeriodMatrix, policy: &'a TruncationPolicy) -> Self {
        Self {
            tau,
            policy,
            scaled: HashMap::new(),
            jets: HashMap::new(),
            degraded: false,
        }
    }

    pub fn tau(&self) -> &PeriodMatrix {
        self.tau
    }

    pub fn genus(&self) -> usize {
        self.tau.genus()
    }

    /// Jet of `theta[upper, lower](mult * tau, 0)`.
    pub fn jet(&mut self, mult: u64, upper: &LiftedVector, lower: &LiftedVector) -> Result<ThetaJet> {
        let key = (mult, upper.reduce(), lower.clone());
        if let Some(jet) = self.jets.get(&key) {
            return Ok(jet.clone());
        }
        let tau = self
            .scaled
            .entry(mult)
            .or_insert_with(|| self.tau.scaled(mult as f64))
            .clone();
        let zero = vec![Complex64::new(0.0, 0.0); tau.genus()];
        let jet = theta_jet_lifted(&tau, &zero, upper, lower, self.policy)?;
        self.degraded |= jet.degraded;
        self.jets.insert(key, jet.clone());
        Ok(jet)
    }
}

fn outer_sym(u: &[Complex64], v: &[Complex64]) -> DMatrix<Complex64> {
    let g = u.len();
    DMatrix::from_fn(g, g, |i, j| (u[i] * v[j] + u[j] * v[i]) * 2.0)
}

/// `C^{ab}` from two gradient vectors.
pub fn c_from_gradients(ga: &[Complex64], gb: &[Complex64]) -> DMatrix<Complex64> {
    outer_sym(ga, gb)
}

pub(crate) fn c_matrix(cache: &mut JetCache, n: u64, a: &LiftedVector, b: &LiftedVector) -> Result<DMatrix<Complex64>> {
    let zero = LiftedVector::zeros(cache.genus());
    let ja = cache.jet(4 * n, a, &zero)?;
    let jb = cache.jet(4 * n, b, &zero)?;
    Ok(c_from_gradients(&ja.gradient, &jb.gradient))
}

pub(crate) fn a_matrix(
    cache: &mut JetCache,
    n: u64,
    a: &LiftedVector,
    b: &LiftedVector,
    eps: &LiftedVector,
) -> Result<DMatrix<Complex64>> {
    let ja = cache.jet(2 * n, a, eps)?;
    let jb = cache.jet(2 * n, b, eps)?;
    Ok(&ja.hessian * jb.value - &jb.hessian * ja.value)
}

/// `C^{ab}` at `4n tau`.
pub fn build_c(
    tau: &PeriodMatrix,
    a: &RationalVector,
    b: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<PairingMatrix> {
    require_level(n)?;
    let mut cache = JetCache::new(tau, policy);
    let entries = c_matrix(&mut cache, n, &a.lift(), &b.lift())?;
    Ok(PairingMatrix {
        entries,
        kind: PairingKind::C,
        index_a: a.clone(),
        index_b: b.clone(),
        lower_char: None,
        order_n: n,
        tau_ref: tau.clone(),
    })
}

/// `A^{ab}_eps` at `2n tau`.
pub fn build_a(
    tau: &PeriodMatrix,
    a: &RationalVector,
    b: &RationalVector,
    eps: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<PairingMatrix> {
    require_level(n)?;
    if !eps.is_half_integer() {
        return Err(ThetaError::InvalidArgument(format!("eps = {eps} must be half-integral")));
    }
    let mut cache = JetCache::new(tau, policy);
    let entries = a_matrix(&mut cache, n, &a.lift(), &b.lift(), &eps.lift())?;
    Ok(PairingMatrix {
        entries,
        kind: PairingKind::A,
        index_a: a.clone(),
        index_b: b.clone(),
        lower_char: Some(eps.clone()),
        order_n: n,
        tau_ref: tau.clone(),
    })
}

/// Right side of the C-from-A relation, with the largest term modulus.
pub(crate) fn c_via_a(
    cache: &mut JetCache,
    n: u64,
    a: &LiftedVector,
    b: &LiftedVector,
) -> Result<(DMatrix<Complex64>, f64)> {
    let g = cache.genus();
    let norm = 0.5f64.powi(g as i32);
    let mut sum = DMatrix::from_element(g, g, Complex64::new(0.0, 0.0));
    let mut largest = 0.0f64;
    for sigma in RationalVector::half_integers(g) {
        let s = sigma.lift();
        let phase = cexp(-a.dot(&s) * Rational::from_integer(2));
        let term = a_matrix(cache, n, &a.add(b), &a.sub(b), &s)? * (phase * norm);
        largest = largest.max(matrix_max_abs(&term));
        sum += term;
    }
    Ok((sum, largest))
}

/// Right side of the A-from-C relation, with the largest term modulus.
pub(crate) fn a_via_c(
    cache: &mut JetCache,
    n: u64,
    a: &LiftedVector,
    b: &LiftedVector,
    delta: &LiftedVector,
    factor: f64,
) -> Result<(DMatrix<Complex64>, f64)> {
    let g = cache.genus();
    let sum_ab = a.add(b);
    let half_sum = sum_ab.half();
    let half_diff = a.sub(b).half();
    let mut sum = DMatrix::from_element(g, g, Complex64::new(0.0, 0.0));
    let mut largest = 0.0f64;
    for eps in RationalVector::half_integers(g) {
        let e = eps.lift();
        let phase = cexp(sum_ab.add(&e.scale(Rational::from_integer(2))).dot(delta));
        let term = c_matrix(cache, n, &e.add(&half_sum), &e.add(&half_diff))? * (phase * factor);
        largest = largest.max(matrix_max_abs(&term));
        sum += term;
    }
    Ok((sum, largest))
}

/// The A-from-C right side, computed from theta-core gradients, with an
/// explicit multiplier (see [`A_FROM_C_FACTOR`]).
pub fn a_from_c_matrix(
    tau: &PeriodMatrix,
    a: &RationalVector,
    b: &RationalVector,
    delta: &RationalVector,
    n: u64,
    factor: f64,
    policy: &TruncationPolicy,
) -> Result<DMatrix<Complex64>> {
    let mut cache = JetCache::new(tau, policy);
    Ok(a_via_c(&mut cache, n, &a.lift(), &b.lift(), &delta.lift(), factor)?.0)
}

fn matrix_report(
    name: &str,
    tau: &PeriodMatrix,
    n: u64,
    lhs: &DMatrix<Complex64>,
    rhs: &DMatrix<Complex64>,
    largest_term: f64,
    degraded: bool,
) -> IdentityReport {
    let scale = residual_scale(&[matrix_max_abs(lhs), matrix_max_abs(rhs), largest_term]);
    IdentityReport::below(name, tau.genus(), n, max_diff(lhs, rhs) / scale, scale, DEFAULT_TOLERANCE)
        .with_tau(tau)
        .with_degraded(degraded)
}

/// C-from-A for one index pair.
pub fn verify_ac_a(
    tau: &PeriodMatrix,
    a: &RationalVector,
    b: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<IdentityReport> {
    require_level(n)?;
    let mut cache = JetCache::new(tau, policy);
    ac_a(&mut cache, n, a, b)
}

fn ac_a(cache: &mut JetCache, n: u64, a: &RationalVector, b: &RationalVector) -> Result<IdentityReport> {
    let lhs = c_matrix(cache, n, &a.lift(), &b.lift())?;
    let (rhs, largest) = c_via_a(cache, n, &a.lift(), &b.lift())?;
    Ok(matrix_report("ac-theorem:a", cache.tau(), n, &lhs, &rhs, largest, cache.degraded)
        .with_char("a", a)
        .with_char("b", b))
}

/// `a + b` must lie in `((1/2n) Z / Z)^g` for the C-indices to stay at level `4n`.
pub fn ac_admissible(a: &RationalVector, b: &RationalVector, n: u64) -> bool {
    a.add(b).divides(2 * n)
}

/// A-from-C for one admissible index pair.
pub fn verify_ac_b(
    tau: &PeriodMatrix,
    a: &RationalVector,
    b: &RationalVector,
    delta: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<IdentityReport> {
    require_level(n)?;
    let mut cache = JetCache::new(tau, policy);
    ac_b(&mut cache, n, a, b, delta)
}

fn check_ac_b_args(a: &RationalVector, b: &RationalVector, delta: &RationalVector, n: u64) -> Result<()> {
    if !delta.is_half_integer() {
        return Err(ThetaError::InvalidArgument(format!("delta = {delta} must be half-integral")));
    }
    if !ac_admissible(a, b, n) {
        return Err(ThetaError::Inadmissible(format!("a + b = {} not in (1/{}) Z", a.add(b), 2 * n)));
    }
    Ok(())
}

fn ac_b(cache: &mut JetCache, n: u64, a: &RationalVector, b: &RationalVector, delta: &RationalVector) -> Result<IdentityReport> {
    check_ac_b_args(a, b, delta, n)?;
    let lhs = a_matrix(cache, n, &a.lift(), &b.lift(), &delta.lift())?;
    let (rhs, largest) = a_via_c(cache, n, &a.lift(), &b.lift(), &delta.lift(), A_FROM_C_FACTOR)?;
    Ok(matrix_report("ac-theorem:b", cache.tau(), n, &lhs, &rhs, largest, cache.degraded)
        .with_char("a", a)
        .with_char("b", b)
        .with_char("delta", delta))
}

/// Substitutes the C-from-A relation into the A-from-C relation and compares
/// with the directly evaluated `A^{ab}_delta`. Exercises both normalizations.
pub fn verify_ac_round_trip(
    tau: &PeriodMatrix,
    a: &RationalVector,
    b: &RationalVector,
    delta: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<IdentityReport> {
    require_level(n)?;
    let mut cache = JetCache::new(tau, policy);
    round_trip(&mut cache, n, a, b, delta)
}

fn round_trip(cache: &mut JetCache, n: u64, a: &RationalVector, b: &RationalVector, delta: &RationalVector) -> Result<IdentityReport> {
    check_ac_b_args(a, b, delta, n)?;
    let g = cache.genus();
    let (a_l, b_l, d_l) = (a.lift(), b.lift(), delta.lift());
    let lhs = a_matrix(cache, n, &a_l, &b_l, &d_l)?;
    let sum_ab = a_l.add(&b_l);
    let (half_sum, half_diff) = (sum_ab.half(), a_l.sub(&b_l).half());
    let mut rhs = DMatrix::from_element(g, g, Complex64::new(0.0, 0.0));
    let mut largest = 0.0f64;
    for eps in RationalVector::half_integers(g) {
        let e = eps.lift();
        let phase = cexp(sum_ab.add(&e.scale(Rational::from_integer(2))).dot(&d_l));
        let (c, inner) = c_via_a(cache, n, &e.add(&half_sum), &e.add(&half_diff))?;
        largest = largest.max(inner);
        rhs += c * (phase * A_FROM_C_FACTOR);
    }
    Ok(matrix_report("ac-theorem:round-trip", cache.tau(), n, &lhs, &rhs, largest, cache.degraded)
        .with_char("a", a)
        .with_char("b", b)
        .with_char("delta", delta))
}

/// Cyclic relation `A^{ab}_e theta[c,e] + A^{bc}_e theta[a,e] + A^{ca}_e theta[b,e] = 0`
/// with all theta constants at `2n tau`.
#[allow(clippy::too_many_arguments)]
pub fn verify_cyclic(
    tau: &PeriodMatrix,
    a: &RationalVector,
    b: &RationalVector,
    c: &RationalVector,
    eps: &RationalVector,
    n: u64,
    policy: &TruncationPolicy,
) -> Result<IdentityReport> {
    require_level(n)?;
    if !eps.is_half_integer() {
        return Err(ThetaError::InvalidArgument(format!("eps = {eps} must be half-integral")));
    }
    let mut cache = JetCache::new(tau, policy);
    cyclic(&mut cache, n, a, b, c, eps)
}

fn cyclic(
    cache: &mut JetCache,
    n: u64,
    a: &RationalVector,
    b: &RationalVector,
    c: &RationalVector,
    eps: &RationalVector,
) -> Result<IdentityReport> {
    let (a_l, b_l, c_l, e_l) = (a.lift(), b.lift(), c.lift(), eps.lift());
    let va = cache.jet(2 * n, &a_l, &e_l)?.value;
    let vb = cache.jet(2 * n, &b_l, &e_l)?.value;
    let vc = cache.jet(2 * n, &c_l, &e_l)?.value;
    let t1 = a_matrix(cache, n, &a_l, &b_l, &e_l)? * vc;
    let t2 = a_matrix(cache, n, &b_l, &c_l, &e_l)? * va;
    let t3 = a_matrix(cache, n, &c_l, &a_l, &e_l)? * vb;
    let largest = [&t1, &t2, &t3].iter().map(|m| matrix_max_abs(m)).fold(0.0, f64::max);
    let sum = &t1 + &t2 + &t3;
    let zero = DMatrix::from_element(sum.nrows(), sum.ncols(), Complex64::new(0.0, 0.0));
    Ok(matrix_report("cyclic", cache.tau(), n, &sum, &zero, largest, cache.degraded)
        .with_char("a", a)
        .with_char("b", b)
        .with_char("c", c)
        .with_char("eps", eps))
}

/// `sigma_2 / sigma_1` of `C^{aa}`, or `None` when the gradient is below
/// `1e-10` (the ratio is then meaningless). Genus one reports 0.
pub fn c_rank_one_ratio(tau: &PeriodMatrix, a: &RationalVector, n: u64, policy: &TruncationPolicy) -> Result<Option<f64>> {
    let c = build_c(tau, a, a, n, policy)?;
    let zero = LiftedVector::zeros(tau.genus());
    let grad = JetCache::new(tau, policy).jet(4 * n, &a.lift(), &zero)?.gradient;
    let norm = grad.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 1e-10 {
        return Ok(None);
    }
    let s = singular_values(&c.entries);
    Ok(Some(if s.len() < 2 { 0.0 } else { s[1] / s[0] }))
}

/// Which relation `verify_ac` checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcDirection {
    /// C from A
    A,
    /// A from C
    B,
}

/// Index coverage for families of identity instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexPlan {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

impl IndexPlan {
    /// Exhaustive for genus one at `n <= 2`, otherwise a seeded subset.
    pub fn default_for(genus: usize, n: u64, count: usize, seed: u64) -> Self {
        if genus == 1 && n <= 2 {
            IndexPlan::Exhaustive
        } else {
            IndexPlan::Sampled { count, seed }
        }
    }

    fn select<T: Clone>(&self, all: impl Fn() -> Vec<T>, sample: impl Fn(&mut ChaCha8Rng) -> T) -> Vec<T> {
        match *self {
            IndexPlan::Exhaustive => all(),
            IndexPlan::Sampled { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count).map(|_| sample(&mut rng)).collect()
            }
        }
    }
}

pub(crate) fn random_grid_point(rng: &mut ChaCha8Rng, m: u64, g: usize) -> RationalVector {
    RationalVector::new((0..g).map(|_| Rational::new(rng.gen_range(0..m as i64), m as i64)).collect())
}

/// `(a, b)` with `a` at level `4n` and `a + b` at level `2n`.
pub fn admissible_pair(rng: &mut ChaCha8Rng, n: u64, g: usize) -> (RationalVector, RationalVector) {
    let a = random_grid_point(rng, 4 * n, g);
    let s = random_grid_point(rng, 2 * n, g);
    let b = s.sub(&a);
    (a, b)
}

fn all_admissible_pairs(n: u64, g: usize) -> Vec<(RationalVector, RationalVector)> {
    let mut out = Vec::new();
    for a in RationalVector::grid(4 * n, g) {
        for b in RationalVector::grid(4 * n, g) {
            if ac_admissible(&a, &b, n) {
                out.push((a.clone(), b));
            }
        }
    }
    out
}

/// Checks one direction of the A/C correspondence over an index plan.
pub fn verify_ac(
    tau: &PeriodMatrix,
    n: u64,
    policy: &TruncationPolicy,
    direction: AcDirection,
    plan: IndexPlan,
) -> Result<Vec<IdentityReport>> {
    require_level(n)?;
    let g = tau.genus();
    let mut cache = JetCache::new(tau, policy);
    match direction {
        AcDirection::A => {
            let pairs = plan.select(
                || {
                    let grid = RationalVector::grid(4 * n, g);
                    grid.iter()
                        .flat_map(|a| grid.iter().map(move |b| (a.clone(), b.clone())))
                        .collect()
                },
                |rng| (random_grid_point(rng, 4 * n, g), random_grid_point(rng, 4 * n, g)),
            );
            pairs.iter().map(|(a, b)| ac_a(&mut cache, n, a, b)).collect()
        }
        AcDirection::B => {
            let tuples = plan.select(
                || {
                    all_admissible_pairs(n, g)
                        .into_iter()
                        .flat_map(|(a, b)| {
                            RationalVector::half_integers(g)
                                .into_iter()
                                .map(move |d| (a.clone(), b.clone(), d))
                        })
                        .collect()
                },
                |rng| {
                    let (a, b) = admissible_pair(rng, n, g);
                    (a, b, random_grid_point(rng, 2, g))
                },
            );
            tuples.iter().map(|(a, b, d)| ac_b(&mut cache, n, a, b, d)).collect()
        }
    }
}

/// Round trip over an index plan.
pub fn verify_ac_round_trips(tau: &PeriodMatrix, n: u64, policy: &TruncationPolicy, plan: IndexPlan) -> Result<Vec<IdentityReport>> {
    require_level(n)?;
    let g = tau.genus();
    let mut cache = JetCache::new(tau, policy);
    let tuples = plan.select(
        || {
            all_admissible_pairs(n, g)
                .into_iter()
                .flat_map(|(a, b)| RationalVector::half_integers(g).into_iter().map(move |d| (a.clone(), b.clone(), d)))
                .collect()
        },
        |rng| {
            let (a, b) = admissible_pair(rng, n, g);
            (a, b, random_grid_point(rng, 2, g))
        },
    );
    tuples.iter().map(|(a, b, d)| round_trip(&mut cache, n, a, b, d)).collect()
}

/// Cyclic relation over admissible triples (`a + b`, `a + c` at level `2n`).
pub fn verify_cyclic_family(tau: &PeriodMatrix, n: u64, policy: &TruncationPolicy, plan: IndexPlan) -> Result<Vec<IdentityReport>> {
    require_level(n)?;
    let g = tau.genus();
    let mut cache = JetCache::new(tau, policy);
    let triples = plan.select(
        || {
            let mut out = Vec::new();
            for a in RationalVector::grid(4 * n, g) {
                for s1 in RationalVector::grid(2 * n, g) {
                    for s2 in RationalVector::grid(2 * n, g) {
                        for e in RationalVector::half_integers(g) {
                            out.push((a.clone(), s1.sub(&a), s2.sub(&a), e));
                        }
                    }
                }
            }
            out
        },
        |rng| {
            let a = random_grid_point(rng, 4 * n, g);
            let b = random_grid_point(rng, 2 * n, g).sub(&a);
            let c = random_grid_point(rng, 2 * n, g).sub(&a);
            (a, b, c, random_grid_point(rng, 2, g))
        },
    );
    triples.iter().map(|(a, b, c, e)| cyclic(&mut cache, n, a, b, c, e)).collect()
}
