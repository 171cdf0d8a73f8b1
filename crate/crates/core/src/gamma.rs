//! Complex gamma function and the gamma-integral identities used to validate
//! the contour engine.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::contour::{quad_contour, Contour, GammaTerm, MBIntegrand, QuadRule};
use crate::error::{Error, Result};
use crate::quad::adaptive;

type C64 = Complex64;

const LN_PI: f64 = 1.1447298858494002;
const HALF_LN_2PI: f64 = 0.9189385332046728;

// B_{2k} / (2k (2k − 1)).
const STIRLING: [f64; 20] = [
    0.08333333333333333,
    -0.002777777777777778,
    0.0007936507936507937,
    -0.0005952380952380953,
    0.0008417508417508417,
    -0.0019175269175269176,
    0.00641025641025641,
    -0.029550653594771242,
    0.17964437236883057,
    -1.3924322169059011,
    13.402864044168393,
    -156.84828462600203,
    2193.1033333333335,
    -36108.77125372499,
    691472.268851313,
    -15238221.539407415,
    382900751.39141417,
    -10882266035.784391,
    347320283765.00226,
    -12369602142269.275,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaConfig {
    /// Arguments are lifted by recurrence until Re z reaches this bound.
    pub shift_threshold: f64,
    /// Number of Stirling correction terms.
    pub asymptotic_terms: usize,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig { shift_threshold: 10.0, asymptotic_terms: 12 }
    }
}

impl GammaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.shift_threshold >= 8.0) {
            return Err(Error::Domain(format!("shift_threshold {} < 8", self.shift_threshold)));
        }
        if !(6..=20).contains(&self.asymptotic_terms) {
            return Err(Error::Domain(format!("asymptotic_terms {} outside 6..=20", self.asymptotic_terms)));
        }
        Ok(())
    }
}

/// True when z is within `tol` of 0, −1, −2, ...
pub fn near_nonpositive_integer(z: C64, tol: f64) -> bool {
    let r = z.re.round();
    r <= 0.0 && (z.re - r).abs() <= tol && z.im.abs() <= tol
}

fn stirling(z: C64, terms: usize) -> C64 {
    let zi = z.inv();
    let zi2 = zi * zi;
    let mut series = C64::new(STIRLING[terms - 1], 0.0);
    for k in (0..terms - 1).rev() {
        series = series * zi2 + STIRLING[k];
    }
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + series * zi
}

/// Principal log sin(πz) for Im z ≥ 0.
fn ln_sinpi_upper(z: C64) -> C64 {
    let x = z.re - 2.0 * (0.5 * z.re).round();
    let y = z.im;
    if y < 8.0 {
        let px = PI * x;
        let py = PI * y;
        C64::new(px.sin() * py.cosh(), px.cos() * py.sinh()).ln()
    } else {
        // sin(πz) = (i/2) e^{−iπz} (1 − e^{2πiz})
        let w = C64::new(x, y);
        let e = (C64::new(0.0, 2.0 * PI) * w).exp();
        let mut v = C64::new(PI * y, -PI * x) + (C64::new(1.0, 0.0) - e).ln() + C64::new(-std::f64::consts::LN_2, 0.5 * PI);
        v.im -= 2.0 * PI * (v.im / (2.0 * PI)).round();
        v
    }
}

/// Principal branch of log Γ(z) with an explicit configuration; +∞ at poles.
pub fn ln_gamma_with(z: C64, cfg: &GammaConfig) -> C64 {
    if z.im < 0.0 {
        return ln_gamma_with(z.conj(), cfg).conj();
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return C64::new(f64::INFINITY, 0.0);
    }
    if z.re < 0.5 {
        let branch = 2.0 * PI * (0.5 * z.re + 0.25).floor();
        return C64::new(LN_PI, branch) - ln_sinpi_upper(z) - ln_gamma_with(1.0 - z, cfg);
    }
    if z.norm() >= cfg.shift_threshold {
        return stirling(z, cfg.asymptotic_terms);
    }
    let n = (cfg.shift_threshold - z.re).ceil().max(0.0) as usize;
    // Each factor has Re ≥ 0.5 and Im ≥ 0, so a product of two has argument
    // in [0, π) and one principal log per pair is exact.
    let mut acc = C64::new(0.0, 0.0);
    let mut w = z;
    for _ in 0..n / 2 {
        acc += (w * (w + 1.0)).ln();
        w += 2.0;
    }
    if n % 2 == 1 {
        acc += w.ln();
        w += 1.0;
    }
    stirling(w, cfg.asymptotic_terms) - acc
}

/// Principal branch of log Γ(z); +∞ at the poles. Hot-path variant of
/// [`log_gamma`].
#[inline]
pub fn ln_gamma(z: C64) -> C64 {
    ln_gamma_with(z, &GammaConfig::default())
}

/// Principal branch of log Γ(z), continuous on the plane cut along the
/// negative real axis.
pub fn log_gamma(z: C64) -> Result<C64> {
    if near_nonpositive_integer(z, crate::spectral::POLE_TOL) {
        return Err(Error::Pole(format!("Γ has a pole at {z}")));
    }
    Ok(ln_gamma(z))
}

pub fn gamma(z: C64) -> Result<C64> {
    log_gamma(z).map(|l| l.exp())
}

/// 1/Γ(z), an entire function; exactly zero at the poles of Γ.
pub fn rgamma(z: C64) -> C64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return C64::new(0.0, 0.0);
    }
    (-ln_gamma(z)).exp()
}

/// Beta function Γ(a)Γ(b)/Γ(a+b).
pub fn beta(a: C64, b: C64) -> Result<C64> {
    Ok((log_gamma(a)? + log_gamma(b)? - ln_gamma(a + b)).exp())
}

/// Height beyond which |f(sigma + it)| stays below `rel` times |f(sigma)|.
pub(crate) fn vertical_truncation<F: Fn(C64) -> C64>(f: F, sigma: f64, rel: f64, t_max: f64) -> f64 {
    let f0 = f(C64::new(sigma, 0.0)).norm().max(f64::MIN_POSITIVE);
    let mut t = 8.0;
    while t < t_max {
        let a = f(C64::new(sigma, t)).norm().max(f(C64::new(sigma, -t)).norm());
        if a < rel * f0 {
            return t;
        }
        t *= 1.25;
    }
    t_max
}

/// K_ν(2x) from the Mellin-Barnes representation
/// (1/4)(1/2πi)∫ Γ((s+ν)/2) Γ((s−ν)/2) x^{−s} ds.
/// The line is placed at Re s = max(1, 2x), the saddle of the integrand, so
/// that the exponentially small values at large x are not lost to
/// cancellation. Returns (value, error estimate).
pub fn kbessel_mb(nu: C64, x: f64) -> Result<(C64, f64)> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x = {x} must be positive")));
    }
    if nu.re.abs() >= 1.0 {
        return Err(Error::Domain(format!("|Re ν| = {} must be < 1", nu.re.abs())));
    }
    let f = MBIntegrand::new(vec![GammaTerm::new(0.5, 0.5 * nu), GammaTerm::new(0.5, -0.5 * nu)], vec![])
        .with_power(x.ln(), C64::new(0.0, 0.0), -1.0)
        .with_scale(C64::new(0.25, 0.0));
    let sigma = (2.0 * x).max(1.0);
    let t = vertical_truncation(|s| f.eval(s), sigma, 1e-18, 4000.0) + nu.im.abs();
    let c = Contour::vertical(sigma, t);
    let (v, e) = quad_contour(&f, &c, &QuadRule::default())?;
    if e > 1e-10 * v.norm() {
        return Err(Error::Convergence(format!("K-Bessel quadrature error {e:e} for ν={nu}, x={x}")));
    }
    Ok((v, e))
}

/// Outcome of comparing a contour integral with its closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: C64,
    pub rhs: C64,
    pub residual: f64,
    pub err_estimate: f64,
}

impl IdentityCheck {
    pub fn new(lhs: C64, rhs: C64, err: f64) -> IdentityCheck {
        IdentityCheck { lhs, rhs, residual: (lhs - rhs).norm() / rhs.norm(), err_estimate: err }
    }
}

/// Line integral at Re s = sigma plus the residues of every pole that sits on
/// the wrong side of the line, which equals the integral over a contour
/// separating the two pole families. Every gamma term must have coefficient ±1.
fn separated_integral(f: &MBIntegrand, sigma: f64, t: f64) -> Result<(C64, f64)> {
    let c = Contour::vertical(sigma, t);
    let sing: Vec<C64> = f.poles_near(&c, 4.0);
    let (mut v, err) = crate::contour::quad_contour_fn(|s| f.eval(s), &c, &sing, &QuadRule::default())?;
    for (idx, g) in f.numer.iter().enumerate() {
        let mut rest = f.clone();
        rest.numer.remove(idx);
        let (head, _) = g.family();
        let mut k = 0usize;
        let mut fact = 1.0;
        loop {
            let p = if g.coeff > 0.0 { head - k as f64 } else { head + k as f64 };
            let misplaced = if g.coeff > 0.0 { p.re > sigma } else { p.re < sigma };
            if !misplaced {
                break;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            v += rest.eval(p) * (sign / fact);
            k += 1;
            fact *= k as f64;
        }
    }
    Ok((v, err))
}

fn separating_sigma(left_heads: &[C64], right_heads: &[C64]) -> f64 {
    let l = left_heads.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    let r = right_heads.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
    let mut sigma = 0.5 * (l + r);
    // Keep the line away from every pole's real part.
    let all: Vec<f64> = left_heads.iter().chain(right_heads).map(|p| p.re).collect();
    for _ in 0..16 {
        let close = all.iter().any(|&x| ((sigma - x) - (sigma - x).round()).abs() < 0.05);
        if !close {
            break;
        }
        sigma += 0.0731;
    }
    sigma
}

/// (1/2πi)∫Γ(a+s)Γ(b+s)Γ(c−s)Γ(d−s) ds against
/// Γ(a+c)Γ(b+c)Γ(a+d)Γ(b+d)/Γ(a+b+c+d).
pub fn barnes_first_check(a: C64, b: C64, c: C64, d: C64) -> Result<IdentityCheck> {
    let rhs = (log_gamma(a + c)? + log_gamma(b + c)? + log_gamma(a + d)? + log_gamma(b + d)? - ln_gamma(a + b + c + d)).exp();
    let f =
        MBIntegrand::new(vec![GammaTerm::new(1.0, a), GammaTerm::new(1.0, b), GammaTerm::new(-1.0, c), GammaTerm::new(-1.0, d)], vec![]);
    let sigma = separating_sigma(&[-a, -b], &[c, d]);
    let t = 30.0 + [a, b, c, d].iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let (lhs, err) = separated_integral(&f, sigma, t)?;
    Ok(IdentityCheck::new(lhs, rhs, err))
}

/// (1/2πi)∫Γ(a+s)Γ(b+s)Γ(c+s)Γ(d−s)Γ(e−s)/Γ(f+s) ds against the six-gamma
/// closed form; requires f = a+b+c+d+e.
pub fn barnes_second_check(a: C64, b: C64, c: C64, d: C64, e: C64, f: C64) -> Result<IdentityCheck> {
    let gap = (a + b + c + d + e - f).norm();
    if gap > 1e-12 {
        return Err(Error::Constraint(format!("a+b+c+d+e−f = {gap:e}, expected 0")));
    }
    let rhs = (log_gamma(a + d)? + log_gamma(b + d)? + log_gamma(c + d)? + log_gamma(a + e)? + log_gamma(b + e)? + log_gamma(c + e)?
        - ln_gamma(f - a)
        - ln_gamma(f - b)
        - ln_gamma(f - c))
    .exp();
    let g = MBIntegrand::new(
        vec![GammaTerm::new(1.0, a), GammaTerm::new(1.0, b), GammaTerm::new(1.0, c), GammaTerm::new(-1.0, d), GammaTerm::new(-1.0, e)],
        vec![GammaTerm::new(1.0, f)],
    );
    let sigma = separating_sigma(&[-a, -b, -c], &[d, e]);
    let t = 30.0 + [a, b, c, d, e, f].iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let (lhs, err) = separated_integral(&g, sigma, t)?;
    Ok(IdentityCheck::new(lhs, rhs, err))
}

/// ∫_0^∞ (1+x²)^u x^{s−1} dx against ½B(s/2, (−2u−s)/2). The integral is
/// taken in the variable v = ln x, where both tails decay exponentially.
pub fn mellin_beta_check(u: C64, s: C64) -> Result<f64> {
    if !(s.re > 0.0 && s.re < -2.0 * u.re) {
        return Err(Error::Domain(format!("need 0 < Re s < −2 Re u, got s={s}, u={u}")));
    }
    let lo = -40.0 / s.re;
    let hi = 40.0 / (-2.0 * u.re - s.re);
    let integrand = |v: f64| {
        let l1p = if v > 0.0 { 2.0 * v + (-2.0 * v).exp().ln_1p() } else { (2.0 * v).exp().ln_1p() };
        (u * l1p + s * v).exp()
    };
    let (lhs, _) = adaptive(integrand, lo, hi, 1e-13, 0.0, 20_000)?;
    let rhs = 0.5 * beta(0.5 * s, 0.5 * (-2.0 * u - s))?;
    Ok((lhs - rhs).norm() / rhs.norm())
}

/// ∫_0^∞ cos(x) x^{s−1} dx against Γ(s)cos(πs/2), 0 < Re s < 1. The range is
/// split at 1 and at A = 40π; [0, 1] uses x = u^{1/Re s} to remove the endpoint
/// singularity and the tail beyond A is rotated onto the rays A ± it.
pub fn mellin_cos_check(s: C64) -> Result<f64> {
    if !(s.re > 0.0 && s.re < 1.0) {
        return Err(Error::Domain(format!("need 0 < Re s < 1, got {s}")));
    }
    let p = 1.0 / s.re;
    let head = |u: f64| {
        if u <= 0.0 {
            return C64::new(0.0, 0.0);
        }
        let x = u.powf(p);
        // x^{s−1} dx = p u^{ps−1} du
        p * x.cos() * ((p * s - 1.0) * u.ln()).exp()
    };
    let (v0, _) = adaptive(head, 0.0, 1.0, 1e-13, 0.0, 20_000)?;
    let a = 40.0 * PI;
    let middle = |x: f64| x.cos() * ((s - 1.0) * x.ln()).exp();
    let (v1, _) = adaptive(middle, 1.0, a, 1e-13, 0.0, 20_000)?;
    let i = C64::new(0.0, 1.0);
    // ∫_A^∞ e^{±ix} x^{s−1} dx = ±i e^{±iA} ∫_0^∞ e^{−t} (A ± it)^{s−1} dt
    let tail = |sign: f64| -> Result<C64> {
        let g = |t: f64| (-t as f64).exp() * ((s - 1.0) * C64::new(a, sign * t).ln()).exp();
        let (w, _) = crate::quad::adaptive_semi_infinite(g, 0.0, 1e-13, 0.0, 20_000)?;
        Ok(sign * i * (sign * i * a).exp() * w)
    };
    let v2 = 0.5 * (tail(1.0)? + tail(-1.0)?);
    let lhs = v0 + v1 + v2;
    let rhs = gamma(s)? * (0.5 * PI * s).cos();
    Ok((lhs - rhs).norm() / rhs.norm())
}
