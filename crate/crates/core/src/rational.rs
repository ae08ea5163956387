//! Exact rational characteristics and the phase map `e(t) = exp(2 pi i t)`.
//!
//! A [`RationalVector`] is an element of `(Q/Z)^g`: every entry is kept in
//! lowest terms and reduced into `[0, 1)`. Upper characteristics only matter
//! modulo 1, so the evaluator reduces them on entry. Lower characteristics do
//! not: `theta[e, d + m] = e(e^t m) theta[e, d]` for integral `m`. Sums such as
//! `sigma + eps` that feed a lower slot are therefore carried as a
//! [`LiftedVector`], which keeps the exact unreduced representative.

use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThetaError};

pub type Rational = Ratio<i64>;

/// Fractional part in `[0, 1)`.
pub fn fract(r: Rational) -> Rational {
    r - r.floor()
}

/// `e(t) = exp(2 pi i t)` for an exact rational, evaluated from the reduced
/// residue `t mod 1`. Quarter turns are returned exactly.
pub fn cexp(t: Rational) -> Complex64 {
    let r = fract(t);
    let (p, q) = (*r.numer(), *r.denom());
    match (p, q) {
        (0, _) => Complex64::new(1.0, 0.0),
        (1, 2) => Complex64::new(-1.0, 0.0),
        (1, 4) => Complex64::new(0.0, 1.0),
        (3, 4) => Complex64::new(0.0, -1.0),
        _ => {
            // Symmetric residue keeps the angle in [-pi, pi].
            let s = if 2 * p > q { p - q } else { p };
            let angle = std::f64::consts::TAU * (s as f64) / (q as f64);
            let (sin, cos) = angle.sin_cos();
            Complex64::new(cos, sin)
        }
    }
}

/// `e(t)` for a real argument.
pub fn cexp_real(t: f64) -> Complex64 {
    let (sin, cos) = (std::f64::consts::TAU * t).sin_cos();
    Complex64::new(cos, sin)
}

/// `e(t)` for a complex argument: `exp(2 pi i t)`.
pub fn cexp_complex(t: Complex64) -> Complex64 {
    (Complex64::new(0.0, std::f64::consts::TAU) * t).exp()
}

/// An element of `(Q/Z)^g`, every entry reduced into `[0, 1)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalVector {
    entries: Vec<Rational>,
}

impl RationalVector {
    pub fn new(entries: Vec<Rational>) -> Self {
        Self {
            entries: entries.into_iter().map(fract).collect(),
        }
    }

    pub fn zeros(g: usize) -> Self {
        Self {
            entries: vec![Rational::from_integer(0); g],
        }
    }

    /// Build from `(numerator, denominator)` pairs.
    pub fn from_pairs(pairs: &[(i64, i64)]) -> Result<Self> {
        let mut entries = Vec::with_capacity(pairs.len());
        for &(p, q) in pairs {
            if q == 0 {
                return Err(ThetaError::InvalidArgument("zero denominator".into()));
            }
            entries.push(Rational::new(p, q));
        }
        Ok(Self::new(entries))
    }

    /// Every entry equal to `k / m`, i.e. `k/m * (1, ..., 1)`.
    pub fn constant(g: usize, k: i64, m: i64) -> Self {
        Self::new(vec![Rational::new(k, m); g])
    }

    pub fn genus(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|r| *r.numer() == 0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self::new(self.entries.iter().map(|a| -a).collect())
    }

    pub fn scale(&self, s: Rational) -> Self {
        Self::new(self.entries.iter().map(|a| a * s).collect())
    }

    /// Least common multiple of the denominators.
    pub fn order(&self) -> u64 {
        self.entries
            .iter()
            .fold(1i64, |acc, r| acc.lcm(r.denom())) as u64
    }

    /// True when every entry lies in `(1/m) Z / Z`.
    pub fn divides(&self, m: u64) -> bool {
        m.is_multiple_of(self.order())
    }

    pub fn is_half_integer(&self) -> bool {
        self.divides(2)
    }

    /// Exact dot product of the stored representatives.
    pub fn dot(&self, other: &Self) -> Rational {
        dot(&self.entries, &other.entries)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(to_f64).collect()
    }

    pub fn lift(&self) -> LiftedVector {
        LiftedVector::new(self.entries.clone())
    }

    /// All of `((1/m) Z / Z)^g` in lexicographic order (first coordinate most
    /// significant).
    pub fn grid(m: u64, g: usize) -> Vec<RationalVector> {
        let m = m as i64;
        let total = (m as usize).pow(g as u32);
        let mut out = Vec::with_capacity(total);
        let mut digits = vec![0i64; g];
        for _ in 0..total {
            out.push(Self {
                entries: digits.iter().map(|&k| Rational::new(k, m)).collect(),
            });
            for pos in (0..g).rev() {
                digits[pos] += 1;
                if digits[pos] < m {
                    break;
                }
                digits[pos] = 0;
            }
        }
        out
    }

    /// All of `((1/2) Z / Z)^g`.
    pub fn half_integers(g: usize) -> Vec<RationalVector> {
        Self::grid(2, g)
    }

    /// Index of this vector within [`RationalVector::grid`]`(m, g)`.
    pub fn grid_index(&self, m: u64) -> Option<usize> {
        let mut idx = 0usize;
        for r in &self.entries {
            let scaled = r * Rational::from_integer(m as i64);
            if !scaled.is_integer() {
                return None;
            }
            idx = idx * m as usize + scaled.to_integer() as usize;
        }
        Some(idx)
    }

    /// `4 eps^t delta mod 2`: 1 for odd half-integer pairs.
    pub fn parity(eps: &Self, delta: &Self) -> u8 {
        let four_dot = eps.dot(delta) * Rational::from_integer(4);
        (four_dot.to_integer().rem_euclid(2)) as u8
    }
}

impl fmt::Debug for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_entries(f, &self.entries)
    }
}

impl Serialize for RationalVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RationalVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for RationalVector {
    type Err = ThetaError;

    /// Parses `"(1/4, 0)"`, `"1/4,0"` or `"1/2"`.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let mut entries = Vec::new();
        for part in body.split(',') {
            entries.push(parse_rational(part.trim())?);
        }
        Ok(Self::new(entries))
    }
}

fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || ThetaError::InvalidArgument(format!("cannot parse rational '{s}'"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

fn write_entries(f: &mut fmt::Formatter<'_>, entries: &[Rational]) -> fmt::Result {
    write!(f, "(")?;
    for (i, r) in entries.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{r}")?;
    }
    write!(f, ")")
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .fold(Rational::from_integer(0), |acc, (x, y)| acc + x * y)
}

fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// An exact rational vector that is not reduced modulo 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LiftedVector {
    entries: Vec<Rational>,
}

impl LiftedVector {
    pub fn new(entries: Vec<Rational>) -> Self {
        Self { entries }
    }

    pub fn zeros(g: usize) -> Self {
        Self::new(vec![Rational::from_integer(0); g])
    }

    pub fn genus(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, s: Rational) -> Self {
        Self::new(self.entries.iter().map(|a| a * s).collect())
    }

    pub fn half(&self) -> Self {
        self.scale(Rational::new(1, 2))
    }

    pub fn dot(&self, other: &Self) -> Rational {
        dot(&self.entries, &other.entries)
    }

    pub fn reduce(&self) -> RationalVector {
        RationalVector::new(self.entries.clone())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(to_f64).collect()
    }
}

impl From<&RationalVector> for LiftedVector {
    fn from(v: &RationalVector) -> Self {
        v.lift()
    }
}

impl From<RationalVector> for LiftedVector {
    fn from(v: RationalVector) -> Self {
        v.lift()
    }
}

impl fmt::Debug for LiftedVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_entries(f, &self.entries)
    }
}

impl fmt::Display for LiftedVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_entries(f, &self.entries)
    }
}
