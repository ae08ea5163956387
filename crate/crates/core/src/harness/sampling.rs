//! Seeded sampling of period matrices, points and characteristics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::period::PeriodMatrix;
use crate::rational::{Rational, RationalVector};

/// Generator for one labelled stream of samples under a run seed.
pub fn stream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&d);
    ChaCha8Rng::from_seed(bytes)
}

/// `Re tau` symmetric with entries in `[-0.5, 0.5]`;
/// `Im tau = y0 I + W W^t`, `y0` in `[0.5, 1.5]`, `W` entries in `[-0.3, 0.3]`.
pub fn sample_tau(genus: usize, seed: u64, index: u64) -> PeriodMatrix {
    let mut rng = stream(seed, &format!("tau/{genus}"), index);
    let g = genus;
    let mut re = vec![0.0; g * g];
    for j in 0..g {
        for k in j..g {
            let x = rng.gen_range(-0.5..=0.5);
            re[j * g + k] = x;
            re[k * g + j] = x;
        }
    }
    let y0 = rng.gen_range(0.5..=1.5);
    let w: Vec<f64> = (0..g * g).map(|_| rng.gen_range(-0.3..=0.3)).collect();
    let mut entries = Vec::with_capacity(g * g);
    for j in 0..g {
        for k in 0..g {
            let mut y: f64 = (0..g).map(|l| w[j * g + l] * w[k * g + l]).sum();
            if j == k {
                y += y0;
            }
            entries.push(Complex64::new(re[j * g + k], y));
        }
    }
    PeriodMatrix::new(g, entries).expect("Im tau >= 0.5 I by construction")
}

/// Genus one, `Re tau` in `[-0.5, 0.5]`, `Im tau` in `[im_lo, im_hi]`.
pub fn sample_tau_box(seed: u64, index: u64, im_lo: f64, im_hi: f64) -> PeriodMatrix {
    let mut rng = stream(seed, "tau-box", index);
    let t = Complex64::new(rng.gen_range(-0.5..=0.5), rng.gen_range(im_lo..=im_hi));
    PeriodMatrix::scalar(t).expect("Im tau bounded below")
}

/// Point with real and imaginary parts in `[-0.5, 0.5]`.
pub fn sample_point(rng: &mut ChaCha8Rng, genus: usize) -> Vec<Complex64> {
    (0..genus)
        .map(|_| Complex64::new(rng.gen_range(-0.5..=0.5), rng.gen_range(-0.5..=0.5)))
        .collect()
}

/// Uniform point of `((1/m) Z / Z)^g`.
pub fn sample_char(rng: &mut ChaCha8Rng, m: u64, genus: usize) -> RationalVector {
    RationalVector::new((0..genus).map(|_| Rational::new(rng.gen_range(0..m as i64), m as i64)).collect())
}

pub fn sample_half(rng: &mut ChaCha8Rng, genus: usize) -> RationalVector {
    sample_char(rng, 2, genus)
}
