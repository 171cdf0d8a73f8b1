//! Power series for J_{w4}, J_{wl} and their Weyl-symmetrized combinations.
//!
//! With X_i = 4π² y_i the long-element series is
//! |X1|^{1−μ3} |X2|^{1+μ1} Σ a(n1, n2) X1^{n1} X2^{n2} and the coefficients
//! obey the two one-step recurrences
//!
//! ```text
//! n1 (n1 + μ1 − μ3)(n1 + μ2 − μ3) a(n1, n2) = (n1 + n2 + μ1 − μ3) a(n1 − 1, n2)
//! n2 (n2 + μ1 − μ2)(n2 + μ1 − μ3) a(n1, n2) = (n1 + n2 + μ1 − μ3) a(n1, n2 − 1)
//! ```
//!
//! so each term is one multiply away from a neighbour on the previous
//! anti-diagonal. Sums run anti-diagonal by anti-diagonal.
//!
//! The symmetrized kernels cancel badly once |X| grows: at X = (30, 30) the
//! largest addend exceeds the result by ~1e24. Under [`Precision::Auto`] the
//! whole computation is redone in double-double when the measured condition
//! number passes the policy threshold.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::dd::{ln_gamma_dd, Cdd, Dd, DD_PI};
use crate::error::{Error, Result};
use crate::gamma::{ln_gamma, near_nonpositive_integer, rgamma};
use crate::spectral::{SpectralParams, WeylElement, DEGENERACY_TOL, POLE_TOL};
use crate::sum::CompensatedSum;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Auto,
    Double,
    DoubleDouble,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesPolicy {
    /// Stop once an anti-diagonal is below `rel_tol` times the running sum.
    pub rel_tol: f64,
    pub max_terms: usize,
    /// Consecutive small anti-diagonals required before stopping.
    pub tail_guard: usize,
    /// Largest |4π² y_i| accepted by the long-element series.
    pub series_domain_bound: f64,
    pub precision: Precision,
    pub cancellation_threshold: f64,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        SeriesPolicy {
            rel_tol: 1e-17,
            max_terms: 1_000_000,
            tail_guard: 3,
            series_domain_bound: 30.0,
            precision: Precision::Auto,
            cancellation_threshold: 1e6,
        }
    }
}

impl SeriesPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-6) {
            return Err(Error::Domain(format!("rel_tol {} outside (0, 1e-6]", self.rel_tol)));
        }
        if self.max_terms == 0 || self.max_terms > 1_000_000 {
            return Err(Error::Domain(format!("max_terms {} outside [1, 1e6]", self.max_terms)));
        }
        if self.tail_guard < 3 {
            return Err(Error::Domain("tail_guard must be at least 3".into()));
        }
        if self.series_domain_bound.is_nan() || self.series_domain_bound <= 0.0 {
            return Err(Error::Domain("series_domain_bound must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Series,
    MellinBarnes,
    WhittakerIdentity,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Representation::Series => "series",
            Representation::MellinBarnes => "mellin_barnes",
            Representation::WhittakerIdentity => "whittaker_identity",
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KernelResult {
    pub value: C64,
    pub err_estimate: f64,
    /// Series terms or quadrature nodes used.
    pub n_terms: usize,
    pub representation: Representation,
    /// Largest-addend-to-result ratio; 1 when nothing cancels.
    pub condition: f64,
    pub cancellation_warning: bool,
    pub double_double: bool,
}

impl KernelResult {
    pub fn rel_err(&self) -> f64 {
        self.err_estimate / self.value.norm().max(f64::MIN_POSITIVE)
    }
}

/// Sign pattern of (y1, y2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignCase {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
}

impl SignCase {
    pub fn of(y: (f64, f64)) -> SignCase {
        match (y.0 > 0.0, y.1 > 0.0) {
            (true, true) => SignCase::PlusPlus,
            (true, false) => SignCase::PlusMinus,
            (false, true) => SignCase::MinusPlus,
            (false, false) => SignCase::MinusMinus,
        }
    }

    pub fn parse(s: &str) -> Option<SignCase> {
        match s {
            "++" => Some(SignCase::PlusPlus),
            "+-" => Some(SignCase::PlusMinus),
            "-+" => Some(SignCase::MinusPlus),
            "--" => Some(SignCase::MinusMinus),
            _ => None,
        }
    }

    /// The Weyl element w with K^{±±} = J(μ) − J(μ^w).
    pub fn partner(&self) -> Option<WeylElement> {
        match self {
            SignCase::PlusPlus => None,
            SignCase::PlusMinus => Some(WeylElement::W3),
            SignCase::MinusPlus => Some(WeylElement::W2),
            SignCase::MinusMinus => Some(WeylElement::Wl),
        }
    }
}

impl fmt::Display for SignCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignCase::PlusPlus => "++",
            SignCase::PlusMinus => "+-",
            SignCase::MinusPlus => "-+",
            SignCase::MinusMinus => "--",
        })
    }
}

/// Arithmetic the series walk needs; implemented for doubles and
/// double-doubles.
trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self> {
    type Acc: Default;
    /// Relative rounding unit used in error estimates.
    const EPS: f64;
    fn from_c64(z: C64) -> Self;
    fn norm(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn ln_gamma(self) -> Self;
    fn pi() -> Self;
    fn acc_add(acc: &mut Self::Acc, v: Self);
    fn acc_get(acc: &Self::Acc) -> Self;
    fn int(n: usize) -> Self {
        Self::from_c64(C64::new(n as f64, 0.0))
    }
    fn real(x: f64) -> Self {
        Self::from_c64(C64::new(x, 0.0))
    }
}

impl Scalar for C64 {
    type Acc = CompensatedSum;
    const EPS: f64 = 1.2e-16;
    fn from_c64(z: C64) -> Self {
        z
    }
    fn norm(self) -> f64 {
        C64::norm(self)
    }
    fn exp(self) -> Self {
        C64::exp(self)
    }
    fn ln(self) -> Self {
        C64::ln(self)
    }
    fn sin(self) -> Self {
        C64::sin(self)
    }
    fn ln_gamma(self) -> Self {
        ln_gamma(self)
    }
    fn pi() -> Self {
        C64::new(PI, 0.0)
    }
    fn acc_add(acc: &mut CompensatedSum, v: Self) {
        acc.add(v);
    }
    fn acc_get(acc: &CompensatedSum) -> Self {
        acc.value()
    }
}

#[derive(Default)]
struct DdAcc(Cdd);

impl Scalar for Cdd {
    type Acc = DdAcc;
    const EPS: f64 = 1e-31;
    fn from_c64(z: C64) -> Self {
        Cdd::from_c64(z)
    }
    fn norm(self) -> f64 {
        self.norm_f64()
    }
    fn exp(self) -> Self {
        Cdd::exp(self)
    }
    fn ln(self) -> Self {
        Cdd::ln(self)
    }
    fn sin(self) -> Self {
        Cdd::sin(self)
    }
    fn ln_gamma(self) -> Self {
        ln_gamma_dd(self)
    }
    fn pi() -> Self {
        Cdd::from_real(DD_PI)
    }
    fn acc_add(acc: &mut DdAcc, v: Self) {
        acc.0 = acc.0 + v;
    }
    fn acc_get(acc: &DdAcc) -> Self {
        acc.0
    }
    fn real(x: f64) -> Self {
        Cdd::from_real(Dd::from_f64(x))
    }
}

/// μ as three components of the working scalar, μ3 formed from μ1, μ2 in
/// that arithmetic so every permutation sees the same numbers.
#[derive(Clone, Copy)]
struct Mu<T>([T; 3]);

impl<T: Scalar> Mu<T> {
    fn of(mu: &SpectralParams) -> Mu<T> {
        let a = T::from_c64(mu.mu1());
        let b = T::from_c64(mu.mu2());
        Mu([a, b, -(a + b)])
    }

    fn permuted(&self, w: WeylElement) -> Mu<T> {
        let i = w.mu_indices();
        Mu([self.0[i[0]], self.0[i[1]], self.0[i[2]]])
    }

    fn sin_half(&self, j: usize, k: usize) -> T {
        (T::pi() * (self.0[j] - self.0[k]) * T::real(0.5)).sin()
    }

    fn sin_mu(&self) -> T {
        self.sin_half(0, 1) * self.sin_half(0, 2) * self.sin_half(1, 2)
    }
}

struct SeriesSum<T> {
    value: T,
    /// Σ |term| times the prefactor modulus.
    abs_sum: f64,
    trunc: f64,
    n_terms: usize,
}

fn int_pole(z: C64) -> bool {
    near_nonpositive_integer(z, POLE_TOL)
}

/// |X|^{e} in the working scalar.
fn abs_pow_t<T: Scalar>(x_abs: T, e: T) -> T {
    (e * x_abs.ln()).exp()
}

fn four_pi_sq<T: Scalar>(y: f64) -> T {
    T::pi() * T::pi() * T::real(4.0 * y)
}

fn eight_pi_cubed<T: Scalar>(y: f64) -> T {
    T::pi() * T::pi() * T::pi() * T::real(8.0 * y)
}

/// Direct long-element coefficient from gamma values; used when a μ
/// difference sits on a negative integer and the running product would
/// stall at a reciprocal-gamma zero, and as an oracle in tests.
pub fn wl_coefficient_direct(n1: usize, n2: usize, mu: &SpectralParams) -> Result<C64> {
    let [d12, d13, d23] = mu.differences();
    let (a, b) = (n1 as f64, n2 as f64);
    let top = a + b + d13 + 1.0;
    if int_pole(top) {
        return Err(Error::Pole(format!("Γ({top}) in a({n1}, {n2})")));
    }
    let bottom = [a + d13 + 1.0, a + d23 + 1.0, C64::new(a + 1.0, 0.0), C64::new(b + 1.0, 0.0), b + d12 + 1.0, b + d13 + 1.0];
    if bottom.iter().any(|&z| int_pole(z)) {
        return Ok(C64::new(0.0, 0.0));
    }
    let ln: C64 = ln_gamma(top) - bottom.iter().map(|&z| ln_gamma(z)).sum::<C64>();
    Ok(ln.exp())
}

/// Direct w4 coefficient 1/(n! Γ(n+1+μ1−μ3) Γ(n+1+μ2−μ3)).
pub fn w4_coefficient_direct(n: usize, mu: &SpectralParams) -> C64 {
    let [_, d13, d23] = mu.differences();
    let a = n as f64 + 1.0;
    rgamma(C64::new(a, 0.0)) * rgamma(a + d13) * rgamma(a + d23)
}

/// Coefficient table a(n1, n2) for n1 + n2 ≤ nmax built by running products.
pub fn wl_coefficients(mu: &SpectralParams, nmax: usize) -> Result<Vec<Vec<C64>>> {
    let [d12, d13, d23] = mu.differences();
    if [d12, d13, d23].iter().any(|&d| int_pole(d + 1.0)) {
        return (0..=nmax).map(|n1| (0..=nmax - n1).map(|n2| wl_coefficient_direct(n1, n2, mu)).collect()).collect();
    }
    let mut a = vec![Vec::new(); nmax + 1];
    a[0].push(wl_coefficient_direct(0, 0, mu)?);
    for n2 in 1..=nmax {
        let b = n2 as f64;
        let prev = a[0][n2 - 1];
        a[0].push(prev * (b + d13) / (b * (b + d12) * (b + d13)));
    }
    for n1 in 1..=nmax {
        let x = n1 as f64;
        for n2 in 0..=nmax - n1 {
            let prev = a[n1 - 1][n2];
            a[n1].push(prev * (x + n2 as f64 + d13) / (x * (x + d13) * (x + d23)));
        }
    }
    Ok(a)
}

fn wl_series<T: Scalar>(x: (f64, f64), mu: &Mu<T>, tol: f64, policy: &SeriesPolicy) -> Result<SeriesSum<T>> {
    let [m1, m2, m3] = mu.0;
    let (d12, d13, d23) = (m1 - m2, m1 - m3, m2 - m3);
    let one = T::int(1);
    let x1: T = four_pi_sq(x.0);
    let x2: T = four_pi_sq(x.1);
    let pref = abs_pow_t(four_pi_sq::<T>(x.0.abs()), one - m3) * abs_pow_t(four_pi_sq::<T>(x.1.abs()), one + m1);
    let a00 = (-((one + d12).ln_gamma() + (one + d13).ln_gamma() + (one + d23).ln_gamma())).exp();
    let pref_abs = pref.norm();

    // X1/(n(n+d13)(n+d23)) and X2/(n(n+d12)(n+d13)), grown on demand.
    let mut step1: Vec<T> = vec![T::int(0)];
    let mut step2: Vec<T> = vec![T::int(0)];
    let mut acc = T::Acc::default();
    let mut diag = vec![a00];
    T::acc_add(&mut acc, a00);
    let mut abs_sum = a00.norm();
    let mut n_terms = 1usize;
    let mut small = 0usize;
    let mut last_max = a00.norm();
    let mut n = 0usize;
    while small < policy.tail_guard {
        n += 1;
        let k = T::int(n);
        step1.push(x1 / (k * (k + d13) * (k + d23)));
        step2.push(x2 / (k * (k + d12) * (k + d13)));
        let c = k + d13;
        let mut next = Vec::with_capacity(n + 1);
        next.push(diag[0] * c * step2[n]);
        for n1 in 1..=n {
            next.push(diag[n1 - 1] * c * step1[n1]);
        }
        let mut dmax = 0.0f64;
        for &t in &next {
            T::acc_add(&mut acc, t);
            let a = t.norm();
            abs_sum += a;
            dmax = dmax.max(a);
        }
        n_terms += n + 1;
        diag = next;
        let scale = T::acc_get(&acc).norm().max(abs_sum * 1e-300);
        if dmax <= tol * scale && dmax <= last_max {
            small += 1;
        } else {
            small = 0;
        }
        last_max = dmax;
        if n_terms > policy.max_terms {
            return Err(Error::NonConvergence(n_terms));
        }
    }
    Ok(SeriesSum {
        value: pref * T::acc_get(&acc),
        abs_sum: pref_abs * abs_sum,
        trunc: pref_abs * last_max * 2.0 * (n as f64 + 2.0),
        n_terms,
    })
}

fn wl_series_direct(x: (f64, f64), mu: &SpectralParams, tol: f64, policy: &SeriesPolicy) -> Result<SeriesSum<C64>> {
    let pref =
        crate::spectral::abs_pow(4.0 * PI * PI * x.0, 1.0 - mu.mu3()) * crate::spectral::abs_pow(4.0 * PI * PI * x.1, 1.0 + mu.mu1());
    let (x1, x2) = (4.0 * PI * PI * x.0, 4.0 * PI * PI * x.1);
    let mut acc = CompensatedSum::new();
    let mut small = 0;
    let mut n = 0;
    let mut n_terms = 0;
    let mut last_max = 0.0f64;
    loop {
        let mut dmax = 0.0f64;
        for n1 in 0..=n {
            let n2 = n - n1;
            let t = wl_coefficient_direct(n1, n2, mu)? * x1.powi(n1 as i32) * x2.powi(n2 as i32);
            acc.add(t);
            dmax = dmax.max(t.norm());
        }
        n_terms += n + 1;
        if n > 0 && dmax <= tol * acc.value().norm() && dmax <= last_max {
            small += 1;
        } else {
            small = 0;
        }
        last_max = dmax;
        if small >= policy.tail_guard {
            break;
        }
        if n_terms > policy.max_terms {
            return Err(Error::NonConvergence(n_terms));
        }
        n += 1;
    }
    Ok(SeriesSum {
        value: pref * acc.value(),
        abs_sum: pref.norm() * acc.abs_sum(),
        trunc: pref.norm() * last_max * 2.0 * (n as f64 + 2.0),
        n_terms,
    })
}

fn w4_series<T: Scalar>(y1: f64, mu: &Mu<T>, tol: f64, policy: &SeriesPolicy) -> Result<SeriesSum<T>> {
    let [m1, m2, m3] = mu.0;
    let (d13, d23) = (m1 - m3, m2 - m3);
    let one = T::int(1);
    let x: T = eight_pi_cubed(y1);
    let ix = T::from_c64(C64::new(0.0, 1.0)) * x;
    let pref = abs_pow_t(eight_pi_cubed::<T>(y1.abs()), one - m3);
    let mut t = (-((one + d13).ln_gamma() + (one + d23).ln_gamma())).exp();
    let mut acc = T::Acc::default();
    T::acc_add(&mut acc, t);
    let mut abs_sum = t.norm();
    let mut last = t.norm();
    let mut small = 0;
    let mut n = 0usize;
    while small < policy.tail_guard {
        n += 1;
        let k = T::int(n);
        t = t * ix / (k * (k + d13) * (k + d23));
        T::acc_add(&mut acc, t);
        let a = t.norm();
        abs_sum += a;
        if a <= tol * T::acc_get(&acc).norm() && a <= last {
            small += 1;
        } else {
            small = 0;
        }
        last = a;
        if n > policy.max_terms {
            return Err(Error::NonConvergence(n));
        }
    }
    let pn = pref.norm();
    Ok(SeriesSum { value: pref * T::acc_get(&acc), abs_sum: pn * abs_sum, trunc: pn * last * 4.0, n_terms: n + 1 })
}

fn w4_series_direct(y1: f64, mu: &SpectralParams, tol: f64, policy: &SeriesPolicy) -> Result<SeriesSum<C64>> {
    let x = 8.0 * PI * PI * PI * y1;
    let pref = crate::spectral::abs_pow(x, 1.0 - mu.mu3());
    let mut acc = CompensatedSum::new();
    let mut pow = C64::new(1.0, 0.0);
    let mut small = 0;
    let mut last = 0.0f64;
    let mut n = 0;
    loop {
        let t = w4_coefficient_direct(n, mu) * pow;
        acc.add(t);
        let a = t.norm();
        if n > 0 && a <= tol * acc.value().norm() && a <= last {
            small += 1;
        } else {
            small = 0;
        }
        last = a;
        if small >= policy.tail_guard {
            break;
        }
        if n > policy.max_terms {
            return Err(Error::NonConvergence(n));
        }
        pow *= C64::new(0.0, x);
        n += 1;
    }
    Ok(SeriesSum { value: pref * acc.value(), abs_sum: pref.norm() * acc.abs_sum(), trunc: pref.norm() * last * 4.0, n_terms: n + 1 })
}

fn check_y(y: f64) -> Result<()> {
    if y == 0.0 || !y.is_finite() {
        return Err(Error::Domain(format!("y = {y} must be finite and nonzero")));
    }
    Ok(())
}

fn has_integer_gap(mu: &SpectralParams) -> bool {
    mu.differences().iter().any(|&d| int_pole(d + 1.0) || int_pole(1.0 - d))
}

/// One linear combination Σ c_w J(μ^w), evaluated in the working scalar.
trait Combination {
    fn eval<T: Scalar>(&self, tol: f64, policy: &SeriesPolicy) -> Result<(T, f64, f64, usize)>;
    fn eval_direct(&self, tol: f64, policy: &SeriesPolicy) -> Result<(C64, f64, f64, usize)>;
}

enum Kind {
    Wl((f64, f64)),
    W4(f64),
}

enum Coef {
    One,
    MinusOne,
    /// −π³/32 / sin_mu(μ^w)
    WlSym,
    /// 1/(512 sin(π(μ1−μ3)/2) sin(π(μ2−μ3)/2)) at μ^w
    W4Sym,
}

struct Combo {
    kind: Kind,
    mu: SpectralParams,
    terms: Vec<(WeylElement, Coef)>,
}

impl Combo {
    fn coef<T: Scalar>(c: &Coef, m: &Mu<T>) -> T {
        match c {
            Coef::One => T::int(1),
            Coef::MinusOne => -T::int(1),
            Coef::WlSym => -(T::pi() * T::pi() * T::pi() / T::int(32)) / m.sin_mu(),
            Coef::W4Sym => T::int(1) / (T::int(512) * m.sin_half(0, 2) * m.sin_half(1, 2)),
        }
    }
}

impl Combination for Combo {
    fn eval<T: Scalar>(&self, tol: f64, policy: &SeriesPolicy) -> Result<(T, f64, f64, usize)> {
        let base: Mu<T> = Mu::of(&self.mu);
        let mut total = T::int(0);
        let (mut abs, mut trunc, mut n) = (0.0, 0.0, 0);
        for (w, c) in &self.terms {
            let m = base.permuted(*w);
            let s = match self.kind {
                Kind::Wl(y) => wl_series(y, &m, tol, policy)?,
                Kind::W4(y1) => w4_series(y1, &m, tol, policy)?,
            };
            let k = Self::coef(c, &m);
            total = total + k * s.value;
            abs += k.norm() * s.abs_sum;
            trunc += k.norm() * s.trunc;
            n += s.n_terms;
        }
        Ok((total, abs, trunc, n))
    }

    fn eval_direct(&self, tol: f64, policy: &SeriesPolicy) -> Result<(C64, f64, f64, usize)> {
        let mut total = C64::new(0.0, 0.0);
        let (mut abs, mut trunc, mut n) = (0.0, 0.0, 0);
        for (w, c) in &self.terms {
            let mw = crate::spectral::weyl_act_mu(&self.mu, *w);
            let s = match self.kind {
                Kind::Wl(y) => wl_series_direct(y, &mw, tol, policy)?,
                Kind::W4(y1) => w4_series_direct(y1, &mw, tol, policy)?,
            };
            let k = Self::coef::<C64>(c, &Mu::of(&mw));
            total += k * s.value;
            abs += k.norm() * s.abs_sum;
            trunc += k.norm() * s.trunc;
            n += s.n_terms;
        }
        Ok((total, abs, trunc, n))
    }
}

fn finish(value: C64, abs: f64, trunc: f64, n: usize, eps: f64, dd: bool, policy: &SeriesPolicy) -> KernelResult {
    let mag = value.norm();
    let condition = if mag > 0.0 { (abs / mag).max(1.0) } else { f64::INFINITY };
    KernelResult {
        value,
        err_estimate: trunc + 8.0 * eps * abs,
        n_terms: n,
        representation: Representation::Series,
        condition,
        cancellation_warning: condition > policy.cancellation_threshold,
        double_double: dd,
    }
}

fn run(combo: &Combo, policy: &SeriesPolicy) -> Result<KernelResult> {
    policy.validate()?;
    if has_integer_gap(&combo.mu) {
        let (v, a, t, n) = combo.eval_direct(policy.rel_tol, policy)?;
        return Ok(finish(v, a, t, n, C64::EPS, false, policy));
    }
    let double = || -> Result<KernelResult> {
        let (v, a, t, n) = combo.eval::<C64>(policy.rel_tol, policy)?;
        Ok(finish(v, a, t, n, C64::EPS, false, policy))
    };
    let quad = || -> Result<KernelResult> {
        let (v, a, t, n) = combo.eval::<Cdd>(policy.rel_tol * 1e-17, policy)?;
        Ok(finish(v.to_c64(), a, t, n, Cdd::EPS, true, policy))
    };
    match policy.precision {
        Precision::Double => double(),
        Precision::DoubleDouble => quad(),
        Precision::Auto => {
            let r = double()?;
            if r.condition > policy.cancellation_threshold {
                quad()
            } else {
                Ok(r)
            }
        }
    }
}

fn check_wl_domain(y: (f64, f64), policy: &SeriesPolicy) -> Result<()> {
    check_y(y.0)?;
    check_y(y.1)?;
    let b = policy.series_domain_bound;
    if 4.0 * PI * PI * y.0.abs() > b || 4.0 * PI * PI * y.1.abs() > b {
        return Err(Error::Domain(format!("|4π² y| beyond the series bound {b} at y = ({}, {})", y.0, y.1)));
    }
    Ok(())
}

/// J_{wl}(y, μ).
pub fn j_wl(y: (f64, f64), mu: &SpectralParams, policy: &SeriesPolicy) -> Result<KernelResult> {
    check_wl_domain(y, policy)?;
    run(&Combo { kind: Kind::Wl(y), mu: *mu, terms: vec![(WeylElement::I, Coef::One)] }, policy)
}

/// J_{w4}(y1, μ).
pub fn j_w4(y1: f64, mu: &SpectralParams, policy: &SeriesPolicy) -> Result<KernelResult> {
    check_y(y1)?;
    run(&Combo { kind: Kind::W4(y1), mu: *mu, terms: vec![(WeylElement::I, Coef::One)] }, policy)
}

/// The two-variable solution |8π³y1|^{1−μ3} Σ (8π³ i y1 y2)^n / (n! Γ(n+1+μ1−μ3) Γ(n+1+μ2−μ3))
/// of the w4 equation in y1 at fixed y2; equal to |y2|^{μ3−1} J_{w4}(y1 y2, μ).
pub fn j_w4_xy(y: (f64, f64), mu: &SpectralParams, policy: &SeriesPolicy) -> Result<KernelResult> {
    check_y(y.1)?;
    let mut r = j_w4(y.0 * y.1, mu, policy)?;
    let k = crate::spectral::abs_pow(y.1, mu.mu3() - 1.0);
    r.value *= k;
    r.err_estimate *= k.norm();
    Ok(r)
}

/// K_{wl}(y, μ) = −(π³/32) Σ_{w ∈ W} J_{wl}(y, μ^w) / sin_mu(μ^w).
pub fn k_wl_sym(y: (f64, f64), mu: &SpectralParams, policy: &SeriesPolicy) -> Result<KernelResult> {
    check_wl_domain(y, policy)?;
    mu.require_distinct(DEGENERACY_TOL)?;
    let terms = WeylElement::ALL.iter().map(|&w| (w, Coef::WlSym)).collect();
    run(&Combo { kind: Kind::Wl(y), mu: *mu, terms }, policy)
}

/// K^{+−}, K^{−+}, K^{−−}: J_{wl}(y, μ) − J_{wl}(y, μ^w) for the matching w.
pub fn k_wl_signed(y: (f64, f64), mu: &SpectralParams, case: SignCase, policy: &SeriesPolicy) -> Result<KernelResult> {
    check_wl_domain(y, policy)?;
    mu.require_distinct(DEGENERACY_TOL)?;
    let w = case.partner().ok_or_else(|| Error::SignMismatch("the ++ case has no two-term kernel; use k_wl_sym".into()))?;
    run(&Combo { kind: Kind::Wl(y), mu: *mu, terms: vec![(WeylElement::I, Coef::One), (w, Coef::MinusOne)] }, policy)
}

/// K_{w4}(y1, μ) = (1/512) Σ_{w ∈ W3} J_{w4}(y1, μ^w) / [sin(π(μ1^w−μ3^w)/2) sin(π(μ2^w−μ3^w)/2)].
pub fn k_w4_sym(y1: f64, mu: &SpectralParams, policy: &SeriesPolicy) -> Result<KernelResult> {
    check_y(y1)?;
    mu.require_distinct(DEGENERACY_TOL)?;
    let terms = WeylElement::CYCLIC.iter().map(|&w| (w, Coef::W4Sym)).collect();
    run(&Combo { kind: Kind::W4(y1), mu: *mu, terms }, policy)
}
