//! Compensated accumulation.

use num_complex::Complex64;

/// Neumaier-compensated sum of complex values, real and imaginary parts
/// carried separately.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: f64,
    im: f64,
    re_c: f64,
    im_c: f64,
    abs_sum: f64,
}

#[inline]
fn two_sum(acc: &mut f64, comp: &mut f64, x: f64) {
    let t = *acc + x;
    if acc.abs() >= x.abs() {
        *comp += (*acc - t) + x;
    } else {
        *comp += (x - t) + *acc;
    }
    *acc = t;
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        two_sum(&mut self.re, &mut self.re_c, z.re);
        two_sum(&mut self.im, &mut self.im_c, z.im);
        self.abs_sum += z.norm();
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }

    /// Sum of the moduli of every added term; scales the rounding error.
    pub fn abs_sum(&self) -> f64 {
        self.abs_sum
    }
}

impl std::iter::FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for z in iter {
            s.add(z);
        }
        s
    }
}

/// Fixed-order pairwise reduction; the result depends only on the input order.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    match xs.len() {
        0 => Complex64::new(0.0, 0.0),
        n if n <= 32 => xs.iter().copied().collect::<CompensatedSum>().value(),
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(Complex64::new(1e16, 0.0));
        for _ in 0..1000 {
            s.add(Complex64::new(1.0, 0.0));
        }
        s.add(Complex64::new(-1e16, 0.0));
        assert_eq!(s.value().re, 1000.0);
    }

    #[test]
    fn pairwise_matches_plain_sum_on_integers() {
        let xs: Vec<_> = (0..1000).map(|k| Complex64::new(k as f64, -(k as f64))).collect();
        let s = pairwise_sum(&xs);
        assert_eq!(s, Complex64::new(499500.0, -499500.0));
    }
}
