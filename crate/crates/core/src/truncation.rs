//! Truncation radius selection and a proven bound on the omitted lattice tail.
//!
//! Terms are summed over the box `||n + eps||_inf <= R`. Every omitted point
//! `x = n + eps` has `|x|_2 >= |x|_inf > R`, and its term (times any derivative
//! factor up to order `k`) is bounded by
//!
//! `c_k r^k exp(-pi lambda r^2 + 2 pi r s)`,  `r = |x|_2`, `s = |Im z|_2`,
//!
//! with `c_k = 1, 2 pi, 4 pi^2`. The shell `t < ||x||_inf <= t + 1` contains at
//! most `(2t + 3)^g` points, and on it the bound is at most its supremum over
//! `r > t`. Summing shells from `t = R` gives the tail bound.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThetaError};
use crate::period::PeriodMatrix;
use crate::rational::RationalVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Target bound on the omitted tail.
    pub tail_bound: f64,
    /// Radius cap; hitting it marks the result as degraded.
    pub max_radius: u32,
    /// Highest derivative order the bound must cover (0, 1 or 2).
    pub deriv_order: u8,
    /// Multiplies the selected radius. Used to certify that residuals do not
    /// depend on truncation.
    pub radius_factor: u32,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            tail_bound: 1e-13,
            max_radius: 60,
            deriv_order: 2,
            radius_factor: 1,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_bound > 0.0 && self.tail_bound.is_finite()) {
            return Err(ThetaError::InvalidArgument("tail bound must be positive".into()));
        }
        if self.max_radius == 0 {
            return Err(ThetaError::InvalidArgument("radius cap must be positive".into()));
        }
        if self.deriv_order > 2 {
            return Err(ThetaError::InvalidArgument("derivative order must be 0, 1 or 2".into()));
        }
        if self.radius_factor == 0 {
            return Err(ThetaError::InvalidArgument("radius factor must be positive".into()));
        }
        Ok(())
    }

    /// The same policy with the radius doubled.
    pub fn doubled(&self) -> Self {
        Self {
            radius_factor: self.radius_factor * 2,
            ..*self
        }
    }

    /// Smallest radius meeting the target, times `radius_factor`. The flag is
    /// set when the cap had to be applied.
    pub fn select_radius(&self, lambda_min: f64, imag_z_norm: f64, genus: usize) -> (u32, bool) {
        let mut radius = 1;
        loop {
            if shell_sum(lambda_min, imag_z_norm, genus, radius, self.deriv_order) <= self.tail_bound {
                break;
            }
            if radius >= self.max_radius {
                return (self.max_radius.saturating_mul(self.radius_factor), true);
            }
            radius += 1;
        }
        (radius.saturating_mul(self.radius_factor), false)
    }
}

/// Euclidean norm of `Im z`.
pub fn imag_norm(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.im * c.im).sum::<f64>().sqrt()
}

/// Upper bound on the tail omitted by the box of the given radius.
pub fn tail_bound(
    tau: &PeriodMatrix,
    z: &[Complex64],
    _eps: &RationalVector,
    radius: u32,
    deriv_order: u8,
) -> f64 {
    shell_sum(tau.lambda_min(), imag_norm(z), tau.genus(), radius.max(1), deriv_order)
}

fn derivative_constant(order: u8) -> f64 {
    match order {
        0 => 1.0,
        1 => 2.0 * PI,
        _ => 4.0 * PI * PI,
    }
}

/// Location of the maximum of `r^k exp(-pi lambda r^2 + 2 pi s r)`.
fn peak(lambda: f64, s: f64, k: u8) -> f64 {
    let k = k as f64;
    (2.0 * PI * s + (4.0 * PI * PI * s * s + 8.0 * PI * lambda * k).sqrt()) / (4.0 * PI * lambda)
}

fn log_term(lambda: f64, s: f64, k: u8, r: f64) -> f64 {
    let poly = if k == 0 { 0.0 } else { (k as f64) * r.ln() };
    derivative_constant(k).ln() + poly - PI * lambda * r * r + 2.0 * PI * s * r
}

fn shell_sum(lambda: f64, s: f64, genus: usize, radius: u32, k: u8) -> f64 {
    let r_peak = peak(lambda, s, k);
    let shell = |t: f64| -> f64 {
        let r = t.max(r_peak);
        let count = (genus as f64) * (2.0 * t + 3.0).ln();
        (count + log_term(lambda, s, k, r)).exp()
    };
    let mut total = 0.0;
    let mut t = radius as f64;
    let mut prev = shell(t);
    total += prev;
    // Shell bounds decay like exp(-pi lambda t^2) once past the peak; sum
    // until the ratio is small, then close with a geometric remainder.
    for _ in 0..10_000 {
        t += 1.0;
        let cur = shell(t);
        if t > r_peak + 1.0 && cur <= prev {
            let ratio = if prev > 0.0 { cur / prev } else { 0.0 };
            if ratio < 0.5 && cur <= total * 1e-20 {
                total += cur / (1.0 - ratio);
                return total;
            }
        }
        total += cur;
        prev = cur;
    }
    total
}
