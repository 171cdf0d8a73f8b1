//! Contours, gamma-quotient integrand descriptors and the panel quadrature used
//! by every Mellin-Barnes evaluation. Integrals are normalized as
//! (1/2πi) ∫ f(s) ds along the contour, oriented from Im s = −T to +T.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gamma::ln_gamma;
use crate::quad::gauss_legendre;
use crate::sum::CompensatedSum;
use rayon::prelude::*;

type C64 = Complex64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Panel layout for the composite Gauss-Legendre rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadRule {
    /// Gauss-Legendre points per panel.
    pub order: usize,
    /// Longest admissible panel.
    pub max_panel: f64,
    /// Panels are split until length ≤ grading × distance to the nearest pole.
    pub grading: f64,
    /// Hard cap on integrand evaluations for one 1-D rule.
    pub max_nodes: usize,
}

impl Default for QuadRule {
    fn default() -> Self {
        QuadRule { order: 16, max_panel: 1.0, grading: 0.5, max_nodes: 200_000 }
    }
}

/// Piecewise-linear path in C running upward from −iT to +iT.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub vertices: Vec<C64>,
    pub truncation_height: f64,
    pub nodes_per_unit: usize,
}

/// Quadrature nodes with weights that already include the 1/(2πi) factor.
#[derive(Debug, Clone, Default)]
pub struct NodeSet {
    pub s: Vec<C64>,
    pub w: Vec<C64>,
}

fn dist_to_segment(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

impl Contour {
    pub fn new(vertices: Vec<C64>, nodes_per_unit: usize) -> Result<Contour> {
        if vertices.len() < 2 || vertices.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Geometry("contour needs at least two finite vertices".into()));
        }
        let t = vertices.last().unwrap().im;
        if t <= 0.0 || (vertices[0].im + t).abs() > 1e-12 * t.max(1.0) {
            return Err(Error::Geometry("contour endpoints must sit at Im s = ±T".into()));
        }
        Ok(Contour { vertices, truncation_height: t, nodes_per_unit })
    }

    /// The straight line Re s = sigma, |Im s| ≤ t.
    pub fn vertical(sigma: f64, t: f64) -> Contour {
        Contour { vertices: vec![C64::new(sigma, -t), C64::new(sigma, t)], truncation_height: t, nodes_per_unit: QuadRule::default().order }
    }

    /// Moves the two tail endpoints left by `kappa` per unit of height above
    /// the adjacent vertex, so that the tails run up and to the left.
    pub fn with_tail_slope(mut self, kappa: f64) -> Contour {
        let n = self.vertices.len();
        if n >= 2 {
            let t = self.truncation_height;
            let lo = self.vertices[1];
            let hi = self.vertices[n - 2];
            self.vertices[0] = C64::new(lo.re - kappa * (t - lo.im.abs()), -t);
            self.vertices[n - 1] = C64::new(hi.re - kappa * (t - hi.im.abs()), t);
        }
        self
    }

    pub fn segments(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn min_re(&self) -> f64 {
        self.vertices.iter().map(|v| v.re).fold(f64::INFINITY, f64::min)
    }

    pub fn max_re(&self) -> f64 {
        self.vertices.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    /// True when the tails end strictly left of the rightmost point of the
    /// path, i.e. the path is bent toward the left family of poles.
    pub fn tails_bend_left(&self) -> bool {
        let m = self.max_re();
        let n = self.vertices.len();
        self.vertices[0].re < m && self.vertices[n - 1].re < m
    }

    pub fn distance_to(&self, p: C64) -> f64 {
        self.segments().map(|(a, b)| dist_to_segment(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// Signed number of upward crossings of the ray {Re > Re p, Im = Im p}:
    /// 1 when p lies left of the path, 0 when right.
    pub fn winding_side(&self, p: C64) -> i32 {
        let mut count = 0;
        for (a, b) in self.segments() {
            let up = a.im <= p.im && p.im < b.im;
            let down = b.im <= p.im && p.im < a.im;
            if up || down {
                let t = (p.im - a.im) / (b.im - a.im);
                let x = a.re + t * (b.re - a.re);
                if x > p.re {
                    count += if up { 1 } else { -1 };
                }
            }
        }
        count
    }

    /// Checks that every pole p − k·step (left families) lies left of the
    /// path and every q + k·step (right families) lies right, for all poles
    /// within the truncation height.
    pub fn certify(&self, left: &[(C64, f64)], right: &[(C64, f64)]) -> Result<()> {
        let lo = self.min_re() - 1.0;
        let hi = self.max_re() + 1.0;
        let t = self.truncation_height;
        for &(head, step) in left {
            if head.im.abs() >= t {
                continue;
            }
            let mut p = head;
            while p.re >= lo {
                if self.winding_side(p) != 1 || self.distance_to(p) < 1e-12 {
                    return Err(Error::Geometry(format!("left-family pole {p} is not left of the contour")));
                }
                p -= step;
            }
        }
        for &(head, step) in right {
            if head.im.abs() >= t {
                continue;
            }
            let mut q = head;
            while q.re <= hi {
                if self.winding_side(q) != 0 || self.distance_to(q) < 1e-12 {
                    return Err(Error::Geometry(format!("right-family pole {q} is not right of the contour")));
                }
                q += step;
            }
        }
        Ok(())
    }

    /// Composite panels: each segment is bisected until panels are no longer
    /// than `rule.max_panel` and no longer than `rule.grading` times their
    /// distance to the nearest listed singular point.
    pub fn panels(&self, singular: &[C64], rule: &QuadRule) -> Vec<(C64, C64)> {
        let mut out = Vec::new();
        for (a, b) in self.segments() {
            split_panel(a, b, singular, rule, 0, &mut out);
        }
        out
    }

    pub fn node_set(&self, singular: &[C64], rule: &QuadRule) -> NodeSet {
        nodes_from_panels(&self.panels(singular, rule), rule.order)
    }
}

fn split_panel(a: C64, b: C64, singular: &[C64], rule: &QuadRule, depth: u32, out: &mut Vec<(C64, C64)>) {
    let len = (b - a).norm();
    if len == 0.0 {
        return;
    }
    let d = singular.iter().map(|&p| dist_to_segment(p, a, b)).fold(f64::INFINITY, f64::min);
    if depth < 48 && (len > rule.max_panel || len > rule.grading * d) {
        let m = 0.5 * (a + b);
        split_panel(a, m, singular, rule, depth + 1, out);
        split_panel(m, b, singular, rule, depth + 1, out);
    } else {
        out.push((a, b));
    }
}

/// Halves every panel.
pub fn refine_panels(panels: &[(C64, C64)]) -> Vec<(C64, C64)> {
    panels
        .iter()
        .flat_map(|&(a, b)| {
            let m = 0.5 * (a + b);
            [(a, m), (m, b)]
        })
        .collect()
}

pub fn nodes_from_panels(panels: &[(C64, C64)], order: usize) -> NodeSet {
    let gl = gauss_legendre(order);
    let mut ns = NodeSet { s: Vec::with_capacity(panels.len() * order), w: Vec::with_capacity(panels.len() * order) };
    let norm = 1.0 / (2.0 * PI * I);
    for &(a, b) in panels {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            ns.s.push(c + h * *x);
            ns.w.push(h * *w * norm);
        }
    }
    ns
}

/// Γ(coeff·s + shift).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaTerm {
    pub coeff: f64,
    pub shift: C64,
}

impl GammaTerm {
    pub fn new(coeff: f64, shift: C64) -> GammaTerm {
        GammaTerm { coeff, shift }
    }

    /// Pole family as (first pole, spacing); spacing is toward −∞ for
    /// coeff > 0 and toward +∞ for coeff < 0.
    pub fn family(&self) -> (C64, f64) {
        (-self.shift / self.coeff, 1.0 / self.coeff.abs())
    }
}

/// X^{offset + slope·s} with X > 0 given through ln X.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFactor {
    pub ln_base: f64,
    pub offset: C64,
    pub slope: f64,
}

/// Product of gamma functions, a real power and a sum of exponentials:
/// scale · ∏Γ(numer) / ∏Γ(denom) · X^{a + b s} · Σ_k c_k e^{α_k s}.
#[derive(Debug, Clone, PartialEq)]
pub struct MBIntegrand {
    pub numer: Vec<GammaTerm>,
    pub denom: Vec<GammaTerm>,
    pub power: Option<PowerFactor>,
    pub phases: Vec<(C64, C64)>,
    pub scale: C64,
}

impl MBIntegrand {
    pub fn new(numer: Vec<GammaTerm>, denom: Vec<GammaTerm>) -> MBIntegrand {
        MBIntegrand { numer, denom, power: None, phases: Vec::new(), scale: C64::new(1.0, 0.0) }
    }

    pub fn with_power(mut self, ln_base: f64, offset: C64, slope: f64) -> MBIntegrand {
        self.power = Some(PowerFactor { ln_base, offset, slope });
        self
    }

    pub fn with_phases(mut self, phases: Vec<(C64, C64)>) -> MBIntegrand {
        self.phases = phases;
        self
    }

    pub fn with_scale(mut self, scale: C64) -> MBIntegrand {
        self.scale = scale;
        self
    }

    /// Log of the gamma quotient and power factor.
    #[inline]
    pub fn log_core(&self, s: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for g in &self.numer {
            acc += ln_gamma(s * g.coeff + g.shift);
        }
        for g in &self.denom {
            acc -= ln_gamma(s * g.coeff + g.shift);
        }
        if let Some(p) = self.power {
            acc += (p.offset + s * p.slope) * p.ln_base;
        }
        acc
    }

    #[inline]
    pub fn phase(&self, s: C64) -> C64 {
        if self.phases.is_empty() {
            C64::new(1.0, 0.0)
        } else {
            self.phases.iter().map(|&(c, a)| c * (a * s).exp()).sum()
        }
    }

    pub fn eval(&self, s: C64) -> C64 {
        let core = self.log_core(s);
        if !core.re.is_finite() {
            return C64::new(0.0, 0.0);
        }
        self.scale * core.exp() * self.phase(s)
    }

    pub fn left_families(&self) -> Vec<(C64, f64)> {
        self.numer.iter().filter(|g| g.coeff > 0.0).map(|g| g.family()).collect()
    }

    pub fn right_families(&self) -> Vec<(C64, f64)> {
        self.numer.iter().filter(|g| g.coeff < 0.0).map(|g| g.family()).collect()
    }

    /// Exponential rate of |integrand| along Re s fixed as |Im s| → ∞:
    /// negative means exponential decay, zero means at best polynomial decay.
    pub fn vertical_decay_rate(&self) -> f64 {
        let n: f64 = self.numer.iter().map(|g| g.coeff.abs()).sum();
        let d: f64 = self.denom.iter().map(|g| g.coeff.abs()).sum();
        let phase = self.phases.iter().map(|(_, a)| a.im.abs()).fold(0.0, f64::max);
        -0.5 * PI * (n - d) + phase
    }

    /// Poles of the numerator within `radius` of the contour.
    pub fn poles_near(&self, c: &Contour, radius: f64) -> Vec<C64> {
        let lo = c.min_re() - radius;
        let hi = c.max_re() + radius;
        let mut out = Vec::new();
        for g in &self.numer {
            let (head, step) = g.family();
            let dir = if g.coeff > 0.0 { -1.0 } else { 1.0 };
            let mut p = head;
            for _ in 0..100_000 {
                if (dir < 0.0 && p.re < lo) || (dir > 0.0 && p.re > hi) {
                    break;
                }
                if p.re >= lo && p.re <= hi && c.distance_to(p) < radius {
                    out.push(p);
                }
                p += dir * step;
            }
        }
        out
    }
}

/// Composite Gauss-Legendre quadrature of (1/2πi)∫ f ds along `c`, with a
/// bisection-refined second pass. The error estimate is the difference of
/// the two passes plus the integrand size at the truncation points.
pub fn quad_contour_fn<F: Fn(C64) -> C64>(f: F, c: &Contour, singular: &[C64], rule: &QuadRule) -> Result<(C64, f64)> {
    let panels = c.panels(singular, rule);
    if 2 * panels.len() * rule.order > rule.max_nodes {
        return Err(Error::Convergence(format!("contour needs {} nodes, budget is {}", 2 * panels.len() * rule.order, rule.max_nodes)));
    }
    let coarse = nodes_from_panels(&panels, rule.order);
    let fine = nodes_from_panels(&refine_panels(&panels), rule.order);
    let sum = |ns: &NodeSet| -> C64 {
        let mut acc = CompensatedSum::new();
        for (s, w) in ns.s.iter().zip(&ns.w) {
            acc.add(f(*s) * *w);
        }
        acc.value()
    };
    let v1 = sum(&coarse);
    let v2 = sum(&fine);
    let n = c.vertices.len();
    let tail = (f(c.vertices[0]).norm() + f(c.vertices[n - 1]).norm()) / (2.0 * PI);
    let err = (v2 - v1).norm() + tail;
    if !v2.re.is_finite() || !v2.im.is_finite() {
        return Err(Error::Convergence("non-finite integrand on contour".into()));
    }
    Ok((v2, err))
}

/// Quadrature of a gamma-quotient integrand. Refuses non-decaying integrands
/// on contours whose tails are not bent to the left.
pub fn quad_contour(f: &MBIntegrand, c: &Contour, rule: &QuadRule) -> Result<(C64, f64)> {
    if f.vertical_decay_rate() >= 0.0 && !c.tails_bend_left() {
        return Err(Error::Convergence("integrand has no exponential decay and the contour tails are not bent left".into()));
    }
    c.certify(&f.left_families(), &f.right_families())?;
    let sing = f.poles_near(c, 4.0 * rule.max_panel);
    quad_contour_fn(|s| f.eval(s), c, &sing, rule)
}

/// Γ(a1·s1 + a2·s2 + b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingTerm {
    pub a1: f64,
    pub a2: f64,
    pub shift: C64,
}

/// Double integrand f1(s1)·f2(s2)·∏Γ(coupling numer)/∏Γ(coupling denom).
#[derive(Debug, Clone, PartialEq)]
pub struct MB2Integrand {
    pub f1: MBIntegrand,
    pub f2: MBIntegrand,
    pub coupling_numer: Vec<CouplingTerm>,
    pub coupling_denom: Vec<CouplingTerm>,
    pub scale: C64,
}

impl MB2Integrand {
    #[inline]
    fn log_coupling(&self, s1: C64, s2: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for g in &self.coupling_numer {
            acc += ln_gamma(s1 * g.a1 + s2 * g.a2 + g.shift);
        }
        for g in &self.coupling_denom {
            acc -= ln_gamma(s1 * g.a1 + s2 * g.a2 + g.shift);
        }
        acc
    }

    pub fn eval(&self, s1: C64, s2: C64) -> C64 {
        let l = self.f1.log_core(s1) + self.f2.log_core(s2) + self.log_coupling(s1, s2);
        if !l.re.is_finite() {
            return C64::new(0.0, 0.0);
        }
        self.scale * l.exp() * self.f1.phase(s1) * self.f2.phase(s2)
    }

    /// Iterated sum over two node sets, s2 innermost (or s1 innermost when
    /// `swap` is set; only the summation order changes).
    pub fn sum_on(&self, n1: &NodeSet, n2: &NodeSet, swap: bool) -> C64 {
        self.sum_on_with_abs(n1, n2, swap).0
    }

    /// [`Self::sum_on`] together with the sum of the moduli of the terms.
    /// Inner sums run in parallel; the outer sum is taken in index order.
    pub fn sum_on_with_abs(&self, n1: &NodeSet, n2: &NodeSet, swap: bool) -> (C64, f64) {
        let pre1: Vec<(C64, C64)> = n1.s.iter().zip(&n1.w).map(|(s, w)| (self.f1.log_core(*s), *w * self.f1.phase(*s))).collect();
        let pre2: Vec<(C64, C64)> = n2.s.iter().zip(&n2.w).map(|(s, w)| (self.f2.log_core(*s), *w * self.f2.phase(*s))).collect();
        let term = |i: usize, j: usize| -> C64 {
            let (l1, w1) = pre1[i];
            let (l2, w2) = pre2[j];
            let l = l1 + l2 + self.log_coupling(n1.s[i], n2.s[j]);
            if l.re < -745.0 || !l.re.is_finite() {
                C64::new(0.0, 0.0)
            } else {
                l.exp() * w1 * w2
            }
        };
        let (outer_len, inner_len) = if swap { (pre2.len(), pre1.len()) } else { (pre1.len(), pre2.len()) };
        let inner: Vec<CompensatedSum> = (0..outer_len)
            .into_par_iter()
            .map(|a| {
                let mut acc = CompensatedSum::new();
                for b in 0..inner_len {
                    acc.add(if swap { term(b, a) } else { term(a, b) });
                }
                acc
            })
            .collect();
        let mut outer = CompensatedSum::new();
        let mut abs = 0.0;
        for acc in &inner {
            outer.add(acc.value());
            abs += acc.abs_sum();
        }
        (self.scale * outer.value(), self.scale.norm() * abs)
    }
}

/// Iterated composite quadrature of a double Mellin-Barnes integral with a
/// refined second pass for the error estimate.
pub fn quad_contour_2d(f: &MB2Integrand, c1: &Contour, c2: &Contour, rule: &QuadRule) -> Result<(C64, f64)> {
    quad_contour_2d_ordered(f, c1, c2, rule, false)
}

pub fn quad_contour_2d_ordered(f: &MB2Integrand, c1: &Contour, c2: &Contour, rule: &QuadRule, swap: bool) -> Result<(C64, f64)> {
    quad_contour_2d_with_abs(f, c1, c2, rule, swap).map(|(v, e, _)| (v, e))
}

/// As [`quad_contour_2d_ordered`], also returning the sum of the moduli of
/// the refined-pass terms, from which the cancellation ratio follows.
pub fn quad_contour_2d_with_abs(f: &MB2Integrand, c1: &Contour, c2: &Contour, rule: &QuadRule, swap: bool) -> Result<(C64, f64, f64)> {
    c1.certify(&f.f1.left_families(), &f.f1.right_families())?;
    c2.certify(&f.f2.left_families(), &f.f2.right_families())?;
    let p1 = c1.panels(&f.f1.poles_near(c1, 4.0 * rule.max_panel), rule);
    let p2 = c2.panels(&f.f2.poles_near(c2, 4.0 * rule.max_panel), rule);
    let n_fine = 2 * rule.order * (p1.len() + p2.len());
    if n_fine > rule.max_nodes {
        return Err(Error::Convergence(format!("double integral needs {n_fine} nodes, budget is {}", rule.max_nodes)));
    }
    let v1 = f.sum_on(&nodes_from_panels(&p1, rule.order), &nodes_from_panels(&p2, rule.order), swap);
    let (v2, abs) =
        f.sum_on_with_abs(&nodes_from_panels(&refine_panels(&p1), rule.order), &nodes_from_panels(&refine_panels(&p2), rule.order), swap);
    if !v2.re.is_finite() || !v2.im.is_finite() {
        return Err(Error::Convergence("non-finite double integral".into()));
    }
    Ok((v2, (v2 - v1).norm(), abs))
}
