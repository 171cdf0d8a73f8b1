//! Spectral parameters μ = (μ1, μ2, μ3) with μ1 + μ2 + μ3 = 0, the Weyl group,
//! and the scalar functions of μ that appear in every kernel.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::gamma::log_gamma;

type C64 = Complex64;

/// Below this gap two components of μ count as equal.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Distance to a gamma or tangent pole treated as hitting it.
pub const POLE_TOL: f64 = 1e-10;

/// μ stored through (μ1, μ2); μ3 = −μ1 − μ2 is derived so the sum is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    mu1: C64,
    mu2: C64,
}

impl SpectralParams {
    pub fn new(mu1: C64, mu2: C64) -> SpectralParams {
        SpectralParams { mu1, mu2 }
    }

    /// Purely imaginary μ = (i t1, i t2, −i t1 − i t2).
    pub fn imaginary(t1: f64, t2: f64) -> SpectralParams {
        SpectralParams::new(C64::new(0.0, t1), C64::new(0.0, t2))
    }

    /// Real μ = (a, b, −a − b).
    pub fn real(a: f64, b: f64) -> SpectralParams {
        SpectralParams::new(C64::new(a, 0.0), C64::new(b, 0.0))
    }

    /// From a full triple; the sum must vanish to 1e-14.
    pub fn from_triple(mu1: C64, mu2: C64, mu3: C64) -> Result<SpectralParams> {
        let s = (mu1 + mu2 + mu3).norm();
        if s > 1e-14 {
            return Err(Error::Constraint(format!("μ1+μ2+μ3 = {s:e}, expected 0")));
        }
        Ok(SpectralParams::new(mu1, mu2))
    }

    /// [re μ1, im μ1, re μ2, im μ2].
    pub fn from_array(a: [f64; 4]) -> SpectralParams {
        SpectralParams::new(C64::new(a[0], a[1]), C64::new(a[2], a[3]))
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.mu1.re, self.mu1.im, self.mu2.re, self.mu2.im]
    }

    pub fn mu1(&self) -> C64 {
        self.mu1
    }
    pub fn mu2(&self) -> C64 {
        self.mu2
    }
    pub fn mu3(&self) -> C64 {
        -self.mu1 - self.mu2
    }

    pub fn components(&self) -> [C64; 3] {
        [self.mu1, self.mu2, self.mu3()]
    }

    /// Permutes the stored components; used by the Weyl action.
    fn permuted(&self, idx: [usize; 3]) -> SpectralParams {
        let c = self.components();
        SpectralParams::new(c[idx[0]], c[idx[1]])
    }

    pub fn neg(&self) -> SpectralParams {
        SpectralParams::new(-self.mu1, -self.mu2)
    }

    pub fn scale(&self, k: f64) -> SpectralParams {
        SpectralParams::new(self.mu1 * k, self.mu2 * k)
    }

    /// min_{j<k} |μ_j − μ_k|.
    pub fn min_gap(&self) -> f64 {
        let [a, b, c] = self.components();
        (a - b).norm().min((a - c).norm()).min((b - c).norm())
    }

    pub fn is_degenerate(&self, tol: f64) -> bool {
        self.min_gap() < tol
    }

    pub fn require_distinct(&self, tol: f64) -> Result<()> {
        let g = self.min_gap();
        if g < tol {
            Err(Error::DegenerateMu(g))
        } else {
            Ok(())
        }
    }

    /// max_i |Re μ_i|.
    pub fn max_abs_re(&self) -> f64 {
        self.components().iter().map(|z| z.re.abs()).fold(0.0, f64::max)
    }

    /// max_i |Im μ_i|.
    pub fn max_abs_im(&self) -> f64 {
        self.components().iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Differences (μ1−μ2, μ1−μ3, μ2−μ3).
    pub fn differences(&self) -> [C64; 3] {
        let [a, b, c] = self.components();
        [a - b, a - c, b - c]
    }
}

impl fmt::Display for SpectralParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.components();
        write!(f, "({a}, {b}, {c})")
    }
}

/// The six Weyl elements with the labeling of the Kuznetsov formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WeylElement {
    I,
    W2,
    W3,
    W4,
    W5,
    Wl,
}

impl WeylElement {
    pub const ALL: [WeylElement; 6] = [WeylElement::I, WeylElement::W2, WeylElement::W3, WeylElement::W4, WeylElement::W5, WeylElement::Wl];
    /// The cyclic subgroup {I, w4, w5}.
    pub const CYCLIC: [WeylElement; 3] = [WeylElement::I, WeylElement::W4, WeylElement::W5];

    pub fn label(&self) -> &'static str {
        match self {
            WeylElement::I => "I",
            WeylElement::W2 => "w2",
            WeylElement::W3 => "w3",
            WeylElement::W4 => "w4",
            WeylElement::W5 => "w5",
            WeylElement::Wl => "wl",
        }
    }

    pub fn parse(s: &str) -> Option<WeylElement> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "id" => Some(WeylElement::I),
            "w2" => Some(WeylElement::W2),
            "w3" => Some(WeylElement::W3),
            "w4" => Some(WeylElement::W4),
            "w5" => Some(WeylElement::W5),
            "wl" | "w6" => Some(WeylElement::Wl),
            _ => None,
        }
    }

    /// Signed permutation matrix.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        match self {
            WeylElement::I => [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            WeylElement::W2 => [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            WeylElement::W3 => [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]],
            WeylElement::W4 => [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
            WeylElement::W5 => [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            WeylElement::Wl => [[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]],
        }
    }

    /// Label of the element whose matrix agrees with `m` up to signs.
    pub fn from_pattern(m: &[[f64; 3]; 3]) -> Option<WeylElement> {
        WeylElement::ALL.into_iter().find(|w| {
            let p = w.matrix();
            (0..3).all(|i| (0..3).all(|j| (p[i][j] != 0.0) == (m[i][j] != 0.0)))
        })
    }

    /// Product self·other, modulo signs.
    pub fn compose(&self, other: &WeylElement) -> WeylElement {
        let a = self.matrix();
        let b = other.matrix();
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        WeylElement::from_pattern(&m).expect("Weyl group is closed")
    }

    /// Index map of the action on μ: (μ^w)_i = μ_{idx[i]}.
    pub fn mu_indices(&self) -> [usize; 3] {
        match self {
            WeylElement::I => [0, 1, 2],
            WeylElement::W2 => [1, 0, 2],
            WeylElement::W3 => [0, 2, 1],
            WeylElement::W4 => [2, 0, 1],
            WeylElement::W5 => [1, 2, 0],
            WeylElement::Wl => [2, 1, 0],
        }
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// μ^w; for example μ^{w4} = (μ3, μ1, μ2).
pub fn weyl_act_mu(mu: &SpectralParams, w: WeylElement) -> SpectralParams {
    mu.permuted(w.mu_indices())
}

fn near_odd_integer(z: C64, tol: f64) -> bool {
    let r = z.re.round();
    (r as i64).rem_euclid(2) == 1 && (z.re - r).abs() <= tol && z.im.abs() <= tol
}

/// spec(μ) = −∏_{j<k} (μ_j − μ_k) tan(π(μ_j − μ_k)/2).
pub fn spec_measure(mu: &SpectralParams) -> Result<C64> {
    let mut p = C64::new(-1.0, 0.0);
    for d in mu.differences() {
        if near_odd_integer(d, POLE_TOL) {
            return Err(Error::Pole(format!("tan(π(μ_j−μ_k)/2) has a pole at μ_j−μ_k = {d}")));
        }
        p *= d * (0.5 * PI * d).tan();
    }
    Ok(p)
}

/// ∏_{j<k} sin(π(μ_j − μ_k)/2).
pub fn sin_mu(mu: &SpectralParams) -> C64 {
    mu.differences().iter().map(|d| (0.5 * PI * d).sin()).product()
}

/// ∏_{j<k} cos(π(μ_j − μ_k)/2).
pub fn cos_mu(mu: &SpectralParams) -> C64 {
    mu.differences().iter().map(|d| (0.5 * PI * d).cos()).product()
}

/// spec(μ)/sin_mu(μ) = −∏_{j<k} (μ_j − μ_k)/cos(π(μ_j − μ_k)/2), free of the
/// removable 0/0 at coincident components.
pub fn spec_over_sin(mu: &SpectralParams) -> C64 {
    -mu.differences().iter().map(|d| d / (0.5 * PI * d).cos()).product::<C64>()
}

/// Λ(μ) = π^{−3/2+μ3−μ1} Γ((1+μ1−μ2)/2) Γ((1+μ1−μ3)/2) Γ((1+μ2−μ3)/2).
pub fn lambda_norm(mu: &SpectralParams) -> Result<C64> {
    let [d12, d13, d23] = mu.differences();
    let l = (-1.5 - d13) * PI.ln() + log_gamma(0.5 * (1.0 + d12))? + log_gamma(0.5 * (1.0 + d13))? + log_gamma(0.5 * (1.0 + d23))?;
    Ok(l.exp())
}

/// C1(μ) = π^{μ1−μ3} ∏_{i<j} Γ((μ_j − μ_i)/2), the coefficient of the leading
/// power p_{ρ+μ} in the small-y expansion of W*.
pub fn c1_asymp(mu: &SpectralParams) -> Result<C64> {
    mu.require_distinct(DEGENERACY_TOL)?;
    let [d12, d13, d23] = mu.differences();
    let l = d13 * PI.ln() + log_gamma(-0.5 * d12)? + log_gamma(-0.5 * d13)? + log_gamma(-0.5 * d23)?;
    Ok(l.exp())
}

/// (λ1, λ2) = (1 − (μ1²+μ2²+μ3²)/2, −μ1μ2μ3).
pub fn eigenvalues(mu: &SpectralParams) -> (C64, C64) {
    let [a, b, c] = mu.components();
    (1.0 - 0.5 * (a * a + b * b + c * c), -a * b * c)
}

/// |x|^z for real x ≠ 0 through the real logarithm, the absolute-value
/// convention of every power factor.
#[inline]
pub(crate) fn abs_pow(x: f64, z: C64) -> C64 {
    (z * x.abs().ln()).exp()
}
