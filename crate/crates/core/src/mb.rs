//! Mellin-Barnes evaluation of the kernels and of the completed Whittaker
//! function W*.
//!
//! Exponentially decaying integrands (W*, K-Bessel) run on vertical lines
//! moved right toward the real saddle, which costs nothing because every pole
//! is in a left family. The sign-case integrals of K_{wl} and both w4
//! integrals have no net exponential decay; they use the box contour
//! (Re s = η near the real axis, Re s = −2η beyond) whose tails are then bent
//! left with slope `tail_slope`. Left of the box the integrands decay like
//! 1/Γ(1 − s)², so the bend crosses no pole and the tails become absolutely
//! convergent.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::contour::{
    quad_contour, quad_contour_2d_ordered, quad_contour_2d_with_abs, Contour, CouplingTerm, GammaTerm, MB2Integrand, MBIntegrand, QuadRule,
};
use crate::error::{Error, Result};
use crate::gamma::IdentityCheck;
use crate::geometry::{power_fn_normalized, DiagY};
use crate::series::{KernelResult, Representation, SignCase};
use crate::spectral::{c1_asymp, cos_mu, weyl_act_mu, SpectralParams, WeylElement};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MbConfig {
    /// Panel rule for 1-D integrals.
    pub rule: QuadRule,
    /// Panel rule for each direction of a 2-D integral.
    pub rule_2d: QuadRule,
    /// Box half-width; the box runs at Re s = η and the tails at −2η.
    pub eta: f64,
    /// Leftward drift of the tails per unit height.
    pub tail_slope: f64,
    /// Truncate once the integrand is this many nats below its peak.
    pub decay_nats: f64,
    pub max_height: f64,
    /// Multiplies every automatically chosen truncation height.
    pub height_scale: f64,
}

impl Default for MbConfig {
    fn default() -> Self {
        MbConfig {
            rule: QuadRule::default(),
            rule_2d: QuadRule { order: 16, max_panel: 2.0, grading: 1.0, max_nodes: 200_000 },
            eta: 0.05,
            tail_slope: 1.0,
            decay_nats: 40.0,
            max_height: 200.0,
            height_scale: 1.0,
        }
    }
}

/// Variant selector for [`k_wl_mb`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MbVariant {
    Auto,
    Fixed(SignCase),
}

/// The box contour: Re s = η for |Im s| ≤ max|Im μ| + η, Re s = −2η beyond,
/// joined by horizontal segments, truncated at the default height h + 30.
pub fn build_contour_box(mu: &SpectralParams, eta: f64) -> Result<Contour> {
    box_with_height(mu, eta, f64::NAN)
}

fn box_height(mu: &SpectralParams, eta: f64) -> f64 {
    mu.max_abs_im() + eta
}

fn box_with_height(mu: &SpectralParams, eta: f64, t: f64) -> Result<Contour> {
    if !(eta > 0.0) {
        return Err(Error::Geometry(format!("eta = {eta} must be positive")));
    }
    if mu.max_abs_re() >= eta {
        return Err(Error::Geometry(format!("max |Re μ| = {} is not below eta = {eta}", mu.max_abs_re())));
    }
    let h = box_height(mu, eta);
    let t = if t.is_nan() { h + 30.0 } else { t.max(h + 1.0) };
    Contour::new(vec![c(-2.0 * eta, -t), c(-2.0 * eta, -h), c(eta, -h), c(eta, h), c(-2.0 * eta, h), c(-2.0 * eta, t)], 16)
}

/// Scans upward from `t0` until `logmag` has fallen `drop` nats below its
/// running maximum.
fn height_by_decay<F: Fn(f64) -> f64>(logmag: F, t0: f64, drop: f64, max_height: f64) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    let mut t = t0;
    while t <= max_height {
        let v = logmag(t);
        if v.is_nan() {
            return Err(Error::Convergence(format!("integrand is NaN at height {t}")));
        }
        best = best.max(v);
        if t > t0 + 2.0 && v < best - drop {
            return Ok(t + 1.0);
        }
        t += 0.5;
    }
    Err(Error::Convergence(format!("integrand still above tolerance at height {max_height}")))
}

fn log_abs(z: C64) -> f64 {
    z.norm().ln()
}

/// Point at height t on a box contour with bent tails.
fn bent_point(t: f64, right: f64, left: f64, h: f64, kappa: f64) -> C64 {
    if t.abs() <= h {
        c(right, t)
    } else {
        c(left - kappa * (t.abs() - h), t)
    }
}

fn bent_box(mu: &SpectralParams, cfg: &MbConfig, t: f64) -> Result<Contour> {
    Ok(box_with_height(mu, cfg.eta, t)?.with_tail_slope(cfg.tail_slope))
}

fn finish_2d(value: C64, err: f64, nodes: usize, abs: f64, rep: Representation) -> KernelResult {
    let condition = if value.norm() > 0.0 { (abs / value.norm()).max(1.0) } else { f64::INFINITY };
    KernelResult {
        value,
        err_estimate: err,
        n_terms: nodes,
        representation: rep,
        condition,
        cancellation_warning: false,
        double_double: false,
    }
}

fn approx_nodes(c: &Contour, rule: &QuadRule) -> usize {
    (c.length() / rule.max_panel).ceil() as usize * rule.order
}

// ---------------------------------------------------------------------------
// W*

/// (1/4π²) G(s, μ) (π y1)^{1−s1} (π y2)^{1−s2}.
pub fn wstar_integrand(y: (f64, f64), mu: &SpectralParams) -> MB2Integrand {
    let m = mu.components();
    let f1 = MBIntegrand::new(m.iter().map(|&mj| GammaTerm::new(0.5, -0.5 * mj)).collect(), vec![]).with_power(
        (PI * y.0).ln(),
        c(1.0, 0.0),
        -1.0,
    );
    let f2 = MBIntegrand::new(m.iter().map(|&mj| GammaTerm::new(0.5, 0.5 * mj)).collect(), vec![]).with_power(
        (PI * y.1).ln(),
        c(1.0, 0.0),
        -1.0,
    );
    MB2Integrand {
        f1,
        f2,
        coupling_numer: vec![],
        coupling_denom: vec![CouplingTerm { a1: 0.5, a2: 0.5, shift: ZERO }],
        scale: c(1.0 / (4.0 * PI * PI), 0.0),
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
        if b - a < 1e-3 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Real lines (σ1, σ2) minimizing |integrand| on the real axis, kept at
/// least `gap` right of every pole.
fn saddle_lines(f: &MB2Integrand, lo: (f64, f64)) -> (f64, f64) {
    let hi = 80.0;
    let mut s = (lo.0.max(2.0).min(hi), lo.1.max(2.0).min(hi));
    for _ in 0..4 {
        let s2 = s.1;
        s.0 = golden_min(|x| log_abs(f.eval(c(x, 0.0), c(s2, 0.0))), lo.0, hi);
        let s1 = s.0;
        s.1 = golden_min(|x| log_abs(f.eval(c(s1, 0.0), c(x, 0.0))), lo.1, hi);
    }
    s
}

/// Iterated quadrature on the vertical lines Re s = σ, with σ chosen by
/// [`saddle_lines`] and heights by decay.
fn wstar_with(y: (f64, f64), mu: &SpectralParams, cfg: &MbConfig, swap: bool) -> Result<KernelResult> {
    if !(y.0 > 0.0 && y.1 > 0.0) || !y.0.is_finite() || !y.1.is_finite() {
        return Err(Error::Domain(format!("W* needs y1, y2 > 0, got ({}, {})", y.0, y.1)));
    }
    let f = wstar_integrand(y, mu);
    let gap = 0.5;
    let lo = (2.0 * mu.max_abs_re() + gap, 2.0 * mu.max_abs_re() + gap);
    let (s1, s2) = saddle_lines(&f, lo);
    let drop = cfg.decay_nats;
    let t1 = height_by_decay(|t| log_abs(f.eval(c(s1, t), c(s2, 0.0))), 0.0, drop, cfg.max_height)? * cfg.height_scale;
    let t2 = height_by_decay(|t| log_abs(f.eval(c(s1, 0.0), c(s2, t))), 0.0, drop, cfg.max_height)? * cfg.height_scale;
    let (c1, c2) = (Contour::vertical(s1, t1), Contour::vertical(s2, t2));
    let rule = QuadRule { max_panel: 3.0, ..cfg.rule_2d };
    let (v, e) = quad_contour_2d_ordered(&f, &c1, &c2, &rule, swap)?;
    Ok(finish_2d(v, e, approx_nodes(&c1, &rule) * approx_nodes(&c2, &rule), v.norm(), Representation::MellinBarnes))
}

/// W*(y, μ, ψ_{1,1}) for y1, y2 > 0.
pub fn whittaker_wstar(y: (f64, f64), mu: &SpectralParams, cfg: &MbConfig) -> Result<KernelResult> {
    wstar_with(y, mu, cfg, false)
}

/// Same integral with the s1 quadrature innermost.
pub fn whittaker_wstar_swapped(y: (f64, f64), mu: &SpectralParams, cfg: &MbConfig) -> Result<KernelResult> {
    wstar_with(y, mu, cfg, true)
}

/// Σ_w C1(μ^w) p_{ρ+μ^w}(y), the small-y asymptotic of W*.
pub fn whittaker_asymptotic(y: (f64, f64), mu: &SpectralParams) -> Result<C64> {
    let yy = DiagY::new(y.0, y.1)?;
    let mut acc = ZERO;
    for w in WeylElement::ALL {
        let m = weyl_act_mu(mu, w);
        acc += c1_asymp(&m)? * power_fn_normalized(&m, &yy);
    }
    Ok(acc)
}

pub fn whittaker_asymp_check(y: (f64, f64), mu: &SpectralParams, cfg: &MbConfig) -> Result<IdentityCheck> {
    let w = whittaker_wstar(y, mu, cfg)?;
    let a = whittaker_asymptotic(y, mu)?;
    Ok(IdentityCheck::new(w.value, a, w.err_estimate))
}

/// Stade's formula at s = 1 with μ' = −μ:
/// ∫∫ W*(t, μ) W*(t, −μ) t1² t2 dt1 dt2 / (t1 t2)³ = π / (2 cos_mu(μ)).
///
/// W* is tabulated on a Gauss grid in u = ln t from one fixed-line Mellin
/// table at Re s = (1, 1), so the whole grid costs two matrix products.
/// G(s, −μ) is G(s, μ) with s1 and s2 exchanged, which gives
/// W*((y1, y2), −μ) = W*((y2, y1), μ) and the second factor for free.
pub fn stade_check(mu: &SpectralParams, cfg: &MbConfig) -> Result<IdentityCheck> {
    const SIGMA: f64 = 1.0;
    const U_MIN: f64 = -20.0;
    const U_MAX: f64 = 3.0;
    if mu.max_abs_re() >= SIGMA {
        return Err(Error::Geometry(format!("max |Re μ| = {} must be below {SIGMA}", mu.max_abs_re())));
    }
    // With πy = 1 the power factors drop out and only G remains.
    let g = wstar_integrand((1.0 / PI, 1.0 / PI), mu);
    let s0 = c(SIGMA, 0.0);
    let t =
        height_by_decay(|t| log_abs(g.eval(c(SIGMA, t), s0)).max(log_abs(g.eval(s0, c(SIGMA, t)))), 0.0, cfg.decay_nats, cfg.max_height)?
            * cfg.height_scale;
    let rule = QuadRule { max_panel: 1.0, ..cfg.rule_2d };
    let line = Contour::vertical(SIGMA, t).node_set(&[], &rule);
    let n = line.s.len();
    let pre1: Vec<C64> = line.s.iter().map(|&s| g.f1.log_core(s)).collect();
    let pre2: Vec<C64> = line.s.iter().map(|&s| g.f2.log_core(s)).collect();
    let gm = nalgebra::DMatrix::<C64>::from_fn(n, n, |j, k| {
        let l = pre1[j] + pre2[k] - crate::gamma::ln_gamma(0.5 * (line.s[j] + line.s[k]));
        g.scale * l.exp()
    });

    let gl = crate::quad::gauss_legendre(16);
    let mut u = Vec::new();
    let mut v = Vec::new();
    let mut a = U_MIN;
    while a < U_MAX - 1e-12 {
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            u.push(a + 0.5 + 0.5 * x);
            v.push(0.5 * w);
        }
        a += 1.0;
    }
    let m = u.len();
    // A[a][j] = w_j (π e^{u_a})^{1 − s_j}
    let am = nalgebra::DMatrix::<C64>::from_fn(m, n, |i, j| line.w[j] * ((1.0 - line.s[j]) * (u[i] + PI.ln())).exp());
    let wg = &am * (&gm * am.transpose());

    let mut acc = ZERO;
    let mut edge = 0.0;
    for i in 0..m {
        for j in 0..m {
            let term = v[i] * v[j] * wg[(i, j)] * wg[(j, i)] * (-u[j]).exp();
            acc += term;
            if j < 16 || i < 16 {
                edge += term.norm();
            }
        }
    }
    let rhs = PI / (2.0 * cos_mu(mu));
    // The integrand grows like e^{2u1 + u2} toward the lower cutoff, so the
    // omitted tail is at most about the first panel's contribution.
    Ok(IdentityCheck::new(acc, rhs, edge))
}

// ---------------------------------------------------------------------------
// Long element

fn x_abs(y: f64) -> f64 {
    4.0 * PI * PI * y.abs()
}

/// Integrand of the double Barnes integral for one sign case.
pub fn sign_case_integrand(y: (f64, f64), mu: &SpectralParams, case: SignCase) -> Result<MB2Integrand> {
    let [m1, m2, m3] = mu.components();
    let one = c(1.0, 0.0);
    let g = GammaTerm::new;
    let (l1, l2) = (x_abs(y.0).ln(), x_abs(y.1).ln());
    let (n1, d1, n2, d2, cn, cd, pref) = match case {
        SignCase::MinusMinus => (
            vec![g(1.0, -m3), g(1.0, -m1)],
            vec![g(-1.0, one + m2)],
            vec![g(1.0, m1), g(1.0, m3)],
            vec![g(-1.0, one - m2)],
            vec![],
            vec![CouplingTerm { a1: 1.0, a2: 1.0, shift: ZERO }],
            (PI * (m1 - m3)).sin(),
        ),
        SignCase::MinusPlus => (
            vec![g(1.0, -m3)],
            vec![g(-1.0, one + m1), g(-1.0, one + m2)],
            vec![g(1.0, m1), g(1.0, m2)],
            vec![g(-1.0, one - m3)],
            vec![CouplingTerm { a1: -1.0, a2: -1.0, shift: one }],
            vec![],
            (PI * (m1 - m2)).sin(),
        ),
        SignCase::PlusMinus => (
            vec![g(1.0, -m2), g(1.0, -m3)],
            vec![g(-1.0, one + m1)],
            vec![g(1.0, m1)],
            vec![g(-1.0, one - m2), g(-1.0, one - m3)],
            vec![CouplingTerm { a1: -1.0, a2: -1.0, shift: one }],
            vec![],
            (PI * (m2 - m3)).sin(),
        ),
        SignCase::PlusPlus => return Err(Error::SignMismatch("the ++ case is the Whittaker identity, not a sign-case integral".into())),
    };
    Ok(MB2Integrand {
        f1: MBIntegrand::new(n1, d1).with_power(l1, one, -1.0),
        f2: MBIntegrand::new(n2, d2).with_power(l2, one, -1.0),
        coupling_numer: cn,
        coupling_denom: cd,
        scale: -pref / PI,
    })
}

fn sign_case_mb(y: (f64, f64), mu: &SpectralParams, case: SignCase, cfg: &MbConfig) -> Result<KernelResult> {
    let f = sign_case_integrand(y, mu, case)?;
    let eta = cfg.eta;
    let h = box_height(mu, eta);
    let k = cfg.tail_slope;
    let p = |t: f64| bent_point(t, eta, -2.0 * eta, h, k);
    let drop = cfg.decay_nats;
    let t1 = height_by_decay(|t| log_abs(f.eval(p(t), p(0.0))).max(log_abs(f.eval(p(-t), p(0.0)))), h, drop, cfg.max_height)?;
    let t2 = height_by_decay(|t| log_abs(f.eval(p(0.0), p(t))).max(log_abs(f.eval(p(0.0), p(-t)))), h, drop, cfg.max_height)?;
    let c1 = bent_box(mu, cfg, t1 * cfg.height_scale)?;
    let c2 = bent_box(mu, cfg, t2 * cfg.height_scale)?;
    let (v, e, abs) = quad_contour_2d_with_abs(&f, &c1, &c2, &cfg.rule_2d, false)?;
    Ok(finish_2d(v, e, approx_nodes(&c1, &cfg.rule_2d) * approx_nodes(&c2, &cfg.rule_2d), abs, Representation::MellinBarnes))
}

/// K_{wl} through its Mellin-Barnes forms: the Whittaker identity
/// π⁴ cos_mu(μ) √(y1 y2) W*((2√y1, 2√y2), 2μ) for y1, y2 > 0, and the double
/// Barnes integrals for K^{−−}, K^{−+}, K^{+−} otherwise.
pub fn k_wl_mb(y: (f64, f64), mu: &SpectralParams, variant: MbVariant, cfg: &MbConfig) -> Result<KernelResult> {
    if y.0 == 0.0 || y.1 == 0.0 || !y.0.is_finite() || !y.1.is_finite() {
        return Err(Error::Domain(format!("y = ({}, {}) needs nonzero finite entries", y.0, y.1)));
    }
    let actual = SignCase::of(y);
    let case = match variant {
        MbVariant::Auto => actual,
        MbVariant::Fixed(v) if v == actual => v,
        MbVariant::Fixed(v) => {
            return Err(Error::SignMismatch(format!("variant {v} requested at y = ({}, {}) of sign {actual}", y.0, y.1)))
        }
    };
    if case == SignCase::PlusPlus {
        let w = whittaker_wstar((2.0 * y.0.sqrt(), 2.0 * y.1.sqrt()), &mu.scale(2.0), cfg)?;
        let k = PI.powi(4) * cos_mu(mu) * (y.0 * y.1).sqrt();
        return Ok(KernelResult {
            value: k * w.value,
            err_estimate: k.norm() * w.err_estimate,
            representation: Representation::WhittakerIdentity,
            ..w
        });
    }
    sign_case_mb(y, mu, case, cfg)
}

// ---------------------------------------------------------------------------
// w4

fn w4_contour(mu: &SpectralParams, cfg: &MbConfig, t: f64) -> Result<Contour> {
    let sigma = w4_sigma(mu);
    let h = box_height(mu, cfg.eta);
    let t = t.max(h + 1.0);
    Ok(Contour::new(vec![c(sigma, -t), c(sigma, -h), c(sigma, h), c(sigma, t)], 16)?.with_tail_slope(cfg.tail_slope))
}

fn w4_sigma(mu: &SpectralParams) -> f64 {
    mu.components().iter().map(|m| m.re).fold(f64::NEG_INFINITY, f64::max) + 0.125
}

fn check_y1(y1: f64) -> Result<f64> {
    if y1 == 0.0 || !y1.is_finite() {
        return Err(Error::Domain(format!("y1 = {y1} must be finite and nonzero")));
    }
    Ok(y1.signum())
}

/// The integrand of the w4 Mellin-Barnes representation.
pub fn w4_integrand(y1: f64, mu: &SpectralParams) -> Result<MBIntegrand> {
    let eps = check_y1(y1)?;
    let m = mu.components();
    let sum: C64 = m.iter().map(|&mj| (c(0.0, PI * eps) * mj).exp()).sum();
    Ok(MBIntegrand::new(m.iter().map(|&mj| GammaTerm::new(1.0, -mj)).collect(), vec![])
        .with_power((8.0 * PI.powi(3) * y1.abs()).ln(), c(1.0, 0.0), -1.0)
        .with_phases(vec![(c(1.0, 0.0), c(0.0, -1.5 * PI * eps)), (sum, c(0.0, 0.5 * PI * eps))])
        .with_scale(c(1.0 / (512.0 * PI * PI), 0.0)))
}

/// The two gamma products of the Voronoi-type representation.
pub fn w4_voronoi_integrands(y1: f64, mu: &SpectralParams) -> Result<[MBIntegrand; 2]> {
    let eps = check_y1(y1)?;
    let m = mu.components();
    let lnx = (PI.powi(3) * y1.abs()).ln();
    let k = c(1.0 / (128.0 * PI.sqrt()), 0.0);
    let a = MBIntegrand::new(
        m.iter().map(|&mj| GammaTerm::new(0.5, -0.5 * mj)).collect(),
        m.iter().map(|&mj| GammaTerm::new(-0.5, 0.5 + 0.5 * mj)).collect(),
    )
    .with_power(lnx, c(1.0, 0.0), -1.0)
    .with_scale(k);
    let b = MBIntegrand::new(
        m.iter().map(|&mj| GammaTerm::new(0.5, 0.5 - 0.5 * mj)).collect(),
        m.iter().map(|&mj| GammaTerm::new(-0.5, 1.0 + 0.5 * mj)).collect(),
    )
    .with_power(lnx, c(1.0, 0.0), -1.0)
    .with_scale(k * c(0.0, eps));
    Ok([a, b])
}

fn w4_quad(parts: &[MBIntegrand], mu: &SpectralParams, cfg: &MbConfig) -> Result<KernelResult> {
    let sigma = w4_sigma(mu);
    let h = box_height(mu, cfg.eta);
    let k = cfg.tail_slope;
    let total = |s: C64| parts.iter().map(|f| f.eval(s)).sum::<C64>();
    let p = |t: f64| bent_point(t, sigma, sigma, h, k);
    let t = height_by_decay(|t| log_abs(total(p(t))).max(log_abs(total(p(-t)))), h, cfg.decay_nats, cfg.max_height)?;
    let contour = w4_contour(mu, cfg, t * cfg.height_scale)?;
    let mut value = ZERO;
    let mut err = 0.0;
    for f in parts {
        let (v, e) = quad_contour(f, &contour, &cfg.rule)?;
        value += v;
        err += e;
    }
    let nodes = approx_nodes(&contour, &cfg.rule) * parts.len();
    Ok(finish_2d(value, err, nodes, value.norm(), Representation::MellinBarnes))
}

/// K_{w4}(y1, μ) from the single Mellin-Barnes integral with the
/// exp(−3πiεs/2) + exp(πiεs/2) Σ_j exp(πiεμ_j) phase, ε = sgn y1.
pub fn k_w4_mb(y1: f64, mu: &SpectralParams, cfg: &MbConfig) -> Result<KernelResult> {
    w4_quad(&[w4_integrand(y1, mu)?], mu, cfg)
}

/// K_{w4}(y1, μ) from the Voronoi-type representation.
pub fn k_w4_voronoi(y1: f64, mu: &SpectralParams, cfg: &MbConfig) -> Result<KernelResult> {
    w4_quad(&w4_voronoi_integrands(y1, mu)?, mu, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{k_w4_sym, k_wl_signed, k_wl_sym, SeriesPolicy};

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn cfg() -> MbConfig {
        MbConfig::default()
    }

    #[test]
    fn box_contour_geometry() {
        let k = build_contour_box(&SpectralParams::real(0.0, 0.0), 0.05).unwrap();
        assert_eq!(k.vertices.len(), 6);
        assert!((k.vertices[2].im + 0.05).abs() < 1e-15 && (k.vertices[0].re + 0.1).abs() < 1e-15);
        let mu = SpectralParams::imaginary(0.4, 0.1);
        let k = build_contour_box(&mu, 0.05).unwrap();
        assert!((k.vertices[3].im - 0.55).abs() < 1e-12);
        let bad = SpectralParams::new(c(0.1, 0.2), c(0.0, 0.0));
        assert!(matches!(build_contour_box(&bad, 0.05), Err(Error::Geometry(_))));
    }

    #[test]
    fn box_separates_sign_case_poles() {
        let mu = SpectralParams::imaginary(0.4, 0.1);
        let k = build_contour_box(&mu, 0.05).unwrap();
        for case in [SignCase::MinusMinus, SignCase::MinusPlus, SignCase::PlusMinus] {
            let f = sign_case_integrand((-0.01, 0.02), &mu, case).unwrap();
            k.certify(&f.f1.left_families(), &f.f1.right_families()).unwrap();
            k.certify(&f.f2.left_families(), &f.f2.right_families()).unwrap();
        }
    }

    #[test]
    fn wstar_symmetric_in_mu() {
        let mu = SpectralParams::imaginary(0.4, 0.1);
        let y = (1.3, 0.7);
        let base = whittaker_wstar(y, &mu, &cfg()).unwrap();
        for w in WeylElement::ALL {
            let v = whittaker_wstar(y, &weyl_act_mu(&mu, w), &cfg()).unwrap();
            assert!((v.value - base.value).norm() < 1e-9 * base.value.norm(), "{w}");
        }
    }

    #[test]
    fn wstar_order_swap() {
        let mu = SpectralParams::imaginary(0.3, -0.2);
        let a = whittaker_wstar((0.8, 0.4), &mu, &cfg()).unwrap();
        let b = whittaker_wstar_swapped((0.8, 0.4), &mu, &cfg()).unwrap();
        assert!((a.value - b.value).norm() <= 2.0 * (a.err_estimate + b.err_estimate) + 1e-14 * a.value.norm());
    }

    #[test]
    fn plus_plus_identity_against_series() {
        let mu = SpectralParams::imaginary(0.4, 0.1);
        let y = (0.01, 0.02);
        let s = k_wl_sym(y, &mu, &SeriesPolicy::default()).unwrap();
        let m = k_wl_mb(y, &mu, MbVariant::Auto, &cfg()).unwrap();
        assert_eq!(m.representation, Representation::WhittakerIdentity);
        assert!(rel(m.value, s.value) < 1e-8, "{} {}", m.value, s.value);
    }

    #[test]
    fn sign_cases_against_series() {
        let mu = SpectralParams::imaginary(0.4, 0.1);
        for (y, case) in
            [((-0.01, -0.02), SignCase::MinusMinus), ((-0.01, 0.02), SignCase::MinusPlus), ((0.01, -0.02), SignCase::PlusMinus)]
        {
            let s = k_wl_signed(y, &mu, case, &SeriesPolicy::default()).unwrap();
            let m = k_wl_mb(y, &mu, MbVariant::Auto, &cfg()).unwrap();
            assert!(rel(m.value, s.value) < 1e-7, "{case}: {} {}", m.value, s.value);
        }
    }

    #[test]
    fn sign_mismatch() {
        let mu = SpectralParams::imaginary(0.4, 0.1);
        let r = k_wl_mb((0.1, 0.1), &mu, MbVariant::Fixed(SignCase::MinusMinus), &cfg());
        assert!(matches!(r, Err(Error::SignMismatch(_))));
    }

    #[test]
    fn w4_routes_agree_with_series() {
        let mu = SpectralParams::imaginary(0.4, 0.1);
        for y1 in [0.05, -0.05] {
            let s = k_w4_sym(y1, &mu, &SeriesPolicy::default()).unwrap();
            let a = k_w4_mb(y1, &mu, &cfg()).unwrap();
            let b = k_w4_voronoi(y1, &mu, &cfg()).unwrap();
            assert!(rel(a.value, s.value) < 1e-7, "{y1}: {} {}", a.value, s.value);
            assert!(rel(b.value, s.value) < 1e-7, "{y1}: {} {}", b.value, s.value);
            assert!(rel(a.value, b.value) < 1e-7);
        }
    }

    #[test]
    fn stade_formula() {
        let mu = SpectralParams::imaginary(0.3, 0.1);
        let r = stade_check(&mu, &cfg()).unwrap();
        assert!(r.residual < 1e-4, "{r:?}");
    }

    #[test]
    fn small_y_asymptotic() {
        let mu = SpectralParams::imaginary(0.6, 0.2);
        let r = whittaker_asymp_check((1e-3, 1e-3), &mu, &cfg()).unwrap();
        assert!(r.residual < 1e-2, "{r:?}");
    }

    #[test]
    fn minus_minus_antisymmetric_under_mu1_mu3() {
        let mu = SpectralParams::imaginary(0.4, 0.1);
        let sw = SpectralParams::new(mu.mu3(), mu.mu2());
        let y = (-0.01, -0.02);
        let a = k_wl_mb(y, &mu, MbVariant::Auto, &cfg()).unwrap();
        let b = k_wl_mb(y, &sw, MbVariant::Auto, &cfg()).unwrap();
        assert!((a.value + b.value).norm() < 1e-9 * a.value.norm());
    }

    #[test]
    fn eta_perturbation() {
        let mu = SpectralParams::imaginary(0.3, -0.2);
        let y = (0.02, -0.01);
        let base = k_wl_mb(y, &mu, MbVariant::Auto, &cfg()).unwrap();
        for eta in [0.0375, 0.0625] {
            let r = k_wl_mb(y, &mu, MbVariant::Auto, &MbConfig { eta, ..cfg() }).unwrap();
            assert!((r.value - base.value).norm() < base.err_estimate + r.err_estimate + 1e-13 * base.value.norm());
        }
    }

    #[test]
    fn truncation_height_doubling() {
        let mu = SpectralParams::imaginary(0.4, 0.1);
        let y = (-0.01, 0.02);
        let a = k_wl_mb(y, &mu, MbVariant::Auto, &cfg()).unwrap();
        let b = k_wl_mb(y, &mu, MbVariant::Auto, &MbConfig { height_scale: 2.0, ..cfg() }).unwrap();
        assert!((a.value - b.value).norm() < 2.0 * b.err_estimate.max(1e-14 * b.value.norm()));
    }
}
