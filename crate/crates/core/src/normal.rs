//! Standard normal helpers shared by the density and risk code.

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density φ(x).
#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Density of N(0, variance) at x.
#[inline]
pub fn pdf_var(x: f64, variance: f64) -> f64 {
    pdf(x / variance.sqrt()) / variance.sqrt()
}
