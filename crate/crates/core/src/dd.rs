//! Double-double arithmetic (about 32 significant digits) for the
//! ill-conditioned symmetrized series. Transcendental functions are a double
//! approximation followed by one Newton step carried out in double-double.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

pub const DD_PI: Dd = Dd { hi: 3.141592653589793, lo: 1.2246467991473532e-16 };
const DD_LN2: Dd = Dd { hi: 0.6931471805599453, lo: 2.3190468138462996e-17 };
const PI_2_PARTS: [f64; 3] = [1.5707963267948966, 6.123233995736766e-17, -1.4973849048591698e-33];

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn from_i128(n: i128) -> Dd {
        let hi = n as f64;
        let lo = (n - hi as i128) as f64;
        let (h, l) = quick_two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (h, l) = quick_two_sum(p, e + self.lo * b);
        Dd { hi: h, lo: l }
    }

    #[inline]
    pub fn sqr(self) -> Dd {
        self * self
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (p, e) = two_prod(ax, ax);
        let diff = (self - Dd { hi: p, lo: e }).hi * (x * 0.5);
        let (h, l) = two_sum(ax, diff);
        Dd { hi: h, lo: l }
    }

    /// Exponential by reduction x = k ln 2 + r, r scaled by 2^-10, Taylor series
    /// for expm1, then ten doublings of expm1.
    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / DD_LN2.hi).round();
        let r = (self - DD_LN2.mul_f64(k)).mul_f64(1.0 / 1024.0);
        let mut term = r;
        let mut s = r;
        for n in 2..=14 {
            term = (term * r) / Dd::from_f64(n as f64);
            s = s + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            s = s.mul_f64(2.0) + s.sqr();
        }
        let e = s + Dd::ONE;
        let scale = 2f64.powi(k as i32);
        Dd { hi: e.hi * scale, lo: e.lo * scale }
    }

    pub fn ln(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::from_f64(f64::NAN);
        }
        let y0 = Dd::from_f64(self.hi.ln());
        y0 + self * (-y0).exp() - Dd::ONE
    }

    fn sin_cos_taylor(r: Dd) -> (Dd, Dd) {
        let r2 = r.sqr();
        let mut s = r;
        let mut c = Dd::ONE;
        let mut ts = r;
        let mut tc = Dd::ONE;
        let mut n = 1.0;
        loop {
            tc = -(tc * r2) / Dd::from_f64(n * (n + 1.0));
            ts = -(ts * r2) / Dd::from_f64((n + 1.0) * (n + 2.0));
            c = c + tc;
            s = s + ts;
            n += 2.0;
            if ts.hi.abs() < 1e-36 && tc.hi.abs() < 1e-36 {
                break;
            }
        }
        (s, c)
    }

    pub fn sin_cos(self) -> (Dd, Dd) {
        let k = (self.hi / PI_2_PARTS[0]).round();
        let mut r = self;
        for p in PI_2_PARTS {
            let (a, b) = two_prod(k, p);
            r = r - Dd { hi: a, lo: b };
        }
        let (s, c) = Self::sin_cos_taylor(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn atan2(y: Dd, x: Dd) -> Dd {
        let t0 = Dd::from_f64(y.hi.atan2(x.hi));
        let (s, c) = t0.sin_cos();
        t0 + (y * c - x * s) / (x * c + y * s)
    }

    pub fn sinh_cosh(self) -> (Dd, Dd) {
        if self.hi.abs() < 0.5 {
            let x2 = self.sqr();
            let mut t = self;
            let mut s = self;
            let mut n = 1.0;
            loop {
                t = (t * x2) / Dd::from_f64((n + 1.0) * (n + 2.0));
                s = s + t;
                n += 2.0;
                if t.hi.abs() < 1e-36 {
                    break;
                }
            }
            (s, (Dd::ONE + s.sqr()).sqrt())
        } else {
            let e = self.exp();
            let ei = Dd::ONE / e;
            ((e - ei).mul_f64(0.5), (e + ei).mul_f64(0.5))
        }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd::from_f64(x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (h, l) = quick_two_sum(s1, s2 + t2);
        Dd { hi: h, lo: l }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let (h, l) = quick_two_sum(p, e + (self.hi * b.lo + self.lo * b.hi));
        Dd { hi: h, lo: l }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (h, l) = quick_two_sum(q1, q2);
        Dd { hi: h, lo: l } + Dd::from_f64(q3)
    }
}

/// Complex double-double.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd { re: Dd::ZERO, im: Dd::ZERO };
    pub const ONE: Cdd = Cdd { re: Dd::ONE, im: Dd::ZERO };

    pub fn new(re: Dd, im: Dd) -> Cdd {
        Cdd { re, im }
    }

    pub fn from_c64(z: Complex64) -> Cdd {
        Cdd { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    pub fn from_real(x: Dd) -> Cdd {
        Cdd { re: x, im: Dd::ZERO }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn conj(self) -> Cdd {
        Cdd { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(self) -> Dd {
        self.re.sqr() + self.im.sqr()
    }

    /// Modulus as a plain double, enough for magnitude bookkeeping.
    pub fn norm_f64(self) -> f64 {
        self.re.hi.hypot(self.im.hi)
    }

    pub fn scale(self, s: Dd) -> Cdd {
        Cdd { re: self.re * s, im: self.im * s }
    }

    pub fn mul_i(self) -> Cdd {
        Cdd { re: -self.im, im: self.re }
    }

    pub fn exp(self) -> Cdd {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Cdd { re: m * c, im: m * s }
    }

    /// Principal logarithm.
    pub fn ln(self) -> Cdd {
        Cdd { re: self.norm_sqr().ln().mul_f64(0.5), im: Dd::atan2(self.im, self.re) }
    }

    pub fn sin(self) -> Cdd {
        let (s, c) = self.re.sin_cos();
        let (sh, ch) = self.im.sinh_cosh();
        Cdd { re: s * ch, im: c * sh }
    }

    pub fn recip(self) -> Cdd {
        let d = self.norm_sqr();
        Cdd { re: self.re / d, im: -self.im / d }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    #[inline]
    fn add(self, b: Cdd) -> Cdd {
        Cdd { re: self.re + b.re, im: self.im + b.im }
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    #[inline]
    fn sub(self, b: Cdd) -> Cdd {
        Cdd { re: self.re - b.re, im: self.im - b.im }
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    fn neg(self) -> Cdd {
        Cdd { re: -self.re, im: -self.im }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    #[inline]
    fn mul(self, b: Cdd) -> Cdd {
        Cdd { re: self.re * b.re - self.im * b.im, im: self.re * b.im + self.im * b.re }
    }
}

impl Div for Cdd {
    type Output = Cdd;
    fn div(self, b: Cdd) -> Cdd {
        self * b.recip()
    }
}

// B_{2k} / (2k (2k - 1)) as exact rationals.
const STIRLING_RATIONAL: [(i128, i128); 24] = [
    (1, 12),
    (-1, 360),
    (1, 1260),
    (-1, 1680),
    (1, 1188),
    (-691, 360360),
    (1, 156),
    (-3617, 122400),
    (43867, 244188),
    (-174611, 125400),
    (77683, 5796),
    (-236364091, 1506960),
    (657931, 300),
    (-3392780147, 93960),
    (1723168255201, 2492028),
    (-7709321041217, 505920),
    (151628697551, 396),
    (-26315271553053477373, 2418179400),
    (154210205991661, 444),
    (-261082718496449122051, 21106800),
    (1520097643918070802691, 3109932),
    (-2530297234481911294093, 118680),
    (25932657025822267968607, 25380),
    (-5609403368997817686249127547, 104700960),
];

const DD_SHIFT: f64 = 30.0;

fn ln_gamma_stirling(z: Cdd) -> Cdd {
    let half_ln_2pi = (DD_PI.mul_f64(2.0)).ln().mul_f64(0.5);
    let lz = z.ln();
    let mut v = (z - Cdd::from_real(Dd::from_f64(0.5))) * lz - z + Cdd::from_real(half_ln_2pi);
    let zi = z.recip();
    let zi2 = zi * zi;
    let mut pow = zi;
    for &(n, d) in STIRLING_RATIONAL.iter() {
        let c = Dd::from_i128(n) / Dd::from_i128(d);
        let t = pow.scale(c);
        v = v + t;
        if t.norm_f64() < 1e-36 * v.norm_f64().max(1.0) {
            break;
        }
        pow = pow * zi2;
    }
    v
}

/// Principal-branch log Γ in double-double.
pub fn ln_gamma_dd(z: Cdd) -> Cdd {
    if z.im.hi < 0.0 {
        return ln_gamma_dd(z.conj()).conj();
    }
    if z.re.hi < 0.5 {
        let branch = 2.0 * (0.5 * z.re.hi + 0.25).floor();
        let ln_sin = (Cdd::from_real(DD_PI) * z).sin().ln();
        let lpi = DD_PI.ln();
        let one_minus = Cdd::ONE - z;
        return Cdd::from_real(lpi) + Cdd::new(Dd::ZERO, DD_PI.mul_f64(branch)) - ln_sin - ln_gamma_dd(one_minus);
    }
    let mut shifted = z;
    let mut acc = Cdd::ZERO;
    while shifted.re.hi < DD_SHIFT {
        acc = acc + shifted.ln();
        shifted = shifted + Cdd::ONE;
    }
    ln_gamma_stirling(shifted) - acc
}

/// 1/Γ(z) in double-double; zero at the poles.
pub fn rgamma_dd(z: Cdd) -> Cdd {
    if z.im.hi == 0.0 && z.im.lo == 0.0 && z.re.hi <= 0.0 {
        let r = z.re.to_f64();
        if r == r.round() {
            return Cdd::ZERO;
        }
    }
    (-ln_gamma_dd(z)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Dd, hi: f64, lo: f64) -> f64 {
        ((a - Dd { hi, lo }).to_f64() / hi).abs()
    }

    // Reference values split as (hi, lo) from a 40-digit evaluation.
    #[test]
    fn transcendental_reference_values() {
        let x = Dd::from_f64(0.7);
        assert!(rel(x.exp(), 2.0137527074704766, -2.0058243549764793e-16) < 1e-30);
        assert!(rel(x.ln(), -0.35667494393873245, 4.82556379937662e-18) < 1e-30);
        let (s, c) = x.sin_cos();
        assert!(rel(s, 0.644217687237691, 2.8740567927338755e-18) < 1e-30);
        assert!(rel(c, 0.7648421872844885, -4.013780434022238e-17) < 1e-30);
        let a = Dd::atan2(Dd::from_f64(0.3), Dd::from_f64(0.7));
        assert!(rel(a, 0.40489178628508343, 2.7690323179934683e-19) < 1e-30);
        assert!(rel(Dd::from_f64(20.5).exp(), 799902177.4755054, 5.468433516540899e-08) < 1e-30);
        let (s, _) = Dd::from_f64(30.3).sin_cos();
        assert!(rel(s, -0.8983182425573547, 1.098767801291798e-17) < 1e-30);
    }

    #[test]
    fn division_and_sqrt_round_trip() {
        let a = Dd::from_f64(2.0).sqrt();
        assert!((a * a - Dd::from_f64(2.0)).to_f64().abs() < 1e-31);
        let q = Dd::ONE / Dd::from_f64(3.0);
        assert!((q.mul_f64(3.0) - Dd::ONE).to_f64().abs() < 1e-31);
    }

    #[test]
    fn ln_gamma_half_is_half_ln_pi() {
        let v = ln_gamma_dd(Cdd::from_c64(Complex64::new(0.5, 0.0)));
        let expect = DD_PI.ln().mul_f64(0.5);
        assert!((v.re - expect).to_f64().abs() < 1e-30);
        assert!(v.im.to_f64().abs() < 1e-30);
    }

    #[test]
    fn ln_gamma_recurrence_in_dd() {
        for &(a, b) in &[(0.3, 0.7), (1.0, 5.0), (-2.3, 0.4), (0.7, -12.0)] {
            let z = Cdd::from_c64(Complex64::new(a, b));
            let lhs = ln_gamma_dd(z + Cdd::ONE);
            let rhs = ln_gamma_dd(z) + z.ln();
            let d = (lhs - rhs).to_c64();
            // equal modulo 2πi
            let k = (d.im / (2.0 * std::f64::consts::PI)).round();
            assert!(d.re.abs() < 1e-29, "{d}");
            assert!((d.im - 2.0 * std::f64::consts::PI * k).abs() < 1e-28, "{d}");
        }
    }
}
