//! Weight transforms H_w(f; y) against Weyl-symmetric test functions and the
//! truncated geometric side of the Kuznetsov formula.
//!
//! All spectral integrals run over Re μ = 0 with the real measure dt1 dt2,
//! μ = (i t1, i t2, −i(t1 + t2)).

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kloosterman::{s_weyl, CharIndex, Modulus};
use crate::quad::{adaptive, gauss_legendre};
use crate::series::{j_w4, j_wl, k_w4_sym, k_wl_signed, k_wl_sym, SeriesPolicy, SignCase};
use crate::spectral::{spec_measure, spec_over_sin, weyl_act_mu, SpectralParams, WeylElement, DEGENERACY_TOL};
use crate::sum::CompensatedSum;

/// f(μ) = Σ_{w ∈ W} Σ_c exp(Σ_i (μ_i^w − c_i)² / width²).
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    centers: Vec<SpectralParams>,
    width: f64,
}

impl TestFunction {
    pub fn gaussian(centers: Vec<SpectralParams>, width: f64) -> Result<TestFunction> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::Domain(format!("test function width {width} must be positive")));
        }
        if centers.is_empty() {
            return Err(Error::Domain("test function needs at least one center".into()));
        }
        if centers.iter().any(|c| c.to_array().iter().any(|x| !x.is_finite())) {
            return Err(Error::Domain("test function center is not finite".into()));
        }
        Ok(TestFunction { centers, width })
    }

    /// f ≡ 0: no centers. Every transform of it is exactly zero.
    pub fn zero() -> TestFunction {
        TestFunction { centers: Vec::new(), width: 1.0 }
    }

    pub fn centers(&self) -> &[SpectralParams] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Beyond this distance from every Weyl image of a center, |f| < e^{−144}.
    pub fn decay_radius(&self) -> f64 {
        12.0 * self.width
    }

    fn exponents(&self, mu: &SpectralParams) -> impl Iterator<Item = C64> + '_ {
        let s = 1.0 / (self.width * self.width);
        let mu = *mu;
        WeylElement::ALL.into_iter().flat_map(move |w| {
            let m = weyl_act_mu(&mu, w).components();
            self.centers.iter().map(move |c| {
                let c = c.components();
                (0..3).map(|i| (m[i] - c[i]) * (m[i] - c[i])).sum::<C64>() * s
            })
        })
    }

    pub fn eval(&self, mu: &SpectralParams) -> C64 {
        self.exponents(mu).map(|e| e.exp()).sum()
    }

    /// Largest Re of the Gaussian exponents: log of the dominant term.
    pub fn log_peak(&self, mu: &SpectralParams) -> f64 {
        self.exponents(mu).map(|e| e.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// f̃(μ) = f(−μ).
    pub fn reflected(&self) -> TestFunction {
        TestFunction { centers: self.centers.iter().map(|c| c.neg()).collect(), width: self.width }
    }

    /// (1/6) Σ_w f(μ^w); equal to f(μ) since f is already symmetric.
    pub fn symmetrized(&self, mu: &SpectralParams) -> C64 {
        WeylElement::ALL.iter().map(|&w| self.eval(&weyl_act_mu(mu, w))).sum::<C64>() / 6.0
    }
}

/// Which pair of components carries the integration variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parametrization {
    /// μ = (i a, i b, −i(a + b)).
    Mu12,
    /// μ = (i a, −i(a + b), i b).
    Mu13,
}

impl Parametrization {
    fn point(&self, a: f64, b: f64) -> SpectralParams {
        match self {
            Parametrization::Mu12 => SpectralParams::imaginary(a, b),
            Parametrization::Mu13 => SpectralParams::imaginary(a, -a - b),
        }
    }

    fn coords(&self, mu: &SpectralParams) -> (f64, f64) {
        let [m1, m2, m3] = mu.components();
        match self {
            Parametrization::Mu12 => (m1.im, m2.im),
            Parametrization::Mu13 => (m1.im, m3.im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Panel length in each coordinate. The integrands have poles half a unit
    /// off the real plane, so panels much longer than 1 lose accuracy quickly.
    pub panel_len: f64,
    pub order: usize,
    /// Order of the comparison rule on the same panels; the error estimate is
    /// the difference of the two.
    pub check_order: usize,
    /// Shift of the b-panels, in panel lengths, keeping nodes off the
    /// degenerate lines a = b, a = −2b, b = −2a.
    pub offset: f64,
    /// Nodes where every Gaussian term is below e^{−mask} are dropped.
    pub mask: f64,
    pub param: Parametrization,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { panel_len: 1.0, order: 16, check_order: 12, offset: 1.0 / 32.0, mask: 46.0, param: Parametrization::Mu12 }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.panel_len > 0.0 && self.panel_len <= 4.0) {
            return Err(Error::Constraint(format!("panel length {} outside (0, 4]", self.panel_len)));
        }
        for o in [self.order, self.check_order] {
            if !(2..=64).contains(&o) {
                return Err(Error::Constraint(format!("grid order {o} outside 2..=64")));
            }
        }
        if !(0.0..1.0).contains(&self.offset) {
            return Err(Error::Constraint(format!("grid offset {} outside [0, 1)", self.offset)));
        }
        if !(self.mask >= 10.0 && self.mask <= 144.0) {
            return Err(Error::Constraint(format!("mask exponent {} outside [10, 144]", self.mask)));
        }
        Ok(())
    }
}

/// Tensor Gauss-Legendre nodes over the region where f is not negligible.
#[derive(Debug, Clone)]
pub struct MuGrid {
    pub nodes: Vec<SpectralParams>,
    pub weights: Vec<f64>,
    /// f at each node.
    pub f_values: Vec<C64>,
    pub masked: usize,
}

impl MuGrid {
    pub fn build(f: &TestFunction, cfg: &GridConfig) -> Result<MuGrid> {
        Self::with_order(f, cfg, cfg.order)
    }

    fn with_order(f: &TestFunction, cfg: &GridConfig, order: usize) -> Result<MuGrid> {
        cfg.validate()?;
        let mut grid = MuGrid { nodes: Vec::new(), weights: Vec::new(), f_values: Vec::new(), masked: 0 };
        if f.centers().is_empty() {
            return Ok(grid);
        }
        let r = f.decay_radius();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for c in f.centers() {
            for w in WeylElement::ALL {
                let (a, b) = cfg.param.coords(&weyl_act_mu(c, w));
                for (k, x) in [a, b].into_iter().enumerate() {
                    lo[k] = lo[k].min(x - r);
                    hi[k] = hi[k].max(x + r);
                }
            }
        }
        let l = cfg.panel_len;
        let axis = |lo: f64, hi: f64, shift: f64| -> (Vec<f64>, Vec<f64>) {
            let gl = gauss_legendre(order);
            let start = (lo / l).floor() * l - shift * l;
            let panels = ((hi - start) / l).ceil() as usize;
            let mut xs = Vec::with_capacity(panels * order);
            let mut ws = Vec::with_capacity(panels * order);
            for p in 0..panels {
                let a = start + p as f64 * l;
                for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                    xs.push(a + 0.5 * l * (x + 1.0));
                    ws.push(0.5 * l * w);
                }
            }
            (xs, ws)
        };
        let (xa, wa) = axis(lo[0], hi[0], 0.0);
        let (xb, wb) = axis(lo[1], hi[1], cfg.offset);
        for (a, wa) in xa.iter().zip(&wa) {
            for (b, wb) in xb.iter().zip(&wb) {
                let mu = cfg.param.point(*a, *b);
                if f.log_peak(&mu) < -cfg.mask {
                    grid.masked += 1;
                    continue;
                }
                if mu.min_gap() < DEGENERACY_TOL {
                    return Err(Error::DegenerateGrid);
                }
                grid.nodes.push(mu);
                grid.weights.push(wa * wb);
                grid.f_values.push(f.eval(&mu));
            }
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ w_i f(μ_i) g(μ_i) and the propagated kernel error Σ w_i |f(μ_i)| err_i.
    /// Nodes are evaluated in parallel and summed in grid order.
    fn integrate<G>(&self, g: &G) -> Result<(C64, f64)>
    where
        G: Fn(&SpectralParams) -> Result<(C64, f64)> + Sync,
    {
        let vals: Vec<Result<(C64, f64)>> = self.nodes.par_iter().map(g).collect();
        let mut acc = CompensatedSum::new();
        let mut err = 0.0;
        for ((v, w), fv) in vals.into_iter().zip(&self.weights).zip(&self.f_values) {
            let (gv, ge) = v?;
            let t = fv * gv * *w;
            if !t.re.is_finite() || !t.im.is_finite() {
                return Err(Error::Convergence("non-finite transform integrand".into()));
            }
            acc.add(t);
            err += w * fv.norm() * ge;
        }
        Ok((acc.value(), err))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformConfig {
    pub grid: GridConfig,
    pub policy: SeriesPolicy,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig { grid: GridConfig::default(), policy: SeriesPolicy::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformResult {
    pub value: C64,
    /// Quadrature difference between the two rules plus the propagated kernel error.
    pub err_estimate: f64,
    pub nodes: usize,
}

/// Which kernel the long-element transform integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlForm {
    /// −1/(2⁹π³|y1y2|) ∫ f J_wl spec/sin_mu.
    J,
    /// 1/(96π⁶|y1y2|) ∫ f K_wl spec.
    K,
    /// −1/(2¹⁰π³|y1y2|) ∫ f K^{±±} spec/sin_mu, for y outside the ++ quadrant.
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum W4Form {
    /// 1/(2¹⁴π⁶|y1|) ∫ f J_w4 sin(π(μ1−μ2)/2) spec/sin_mu.
    J,
    /// 1/(96π⁶|y1|) ∫ f K_w4 spec.
    K,
}

fn transform<G>(f: &TestFunction, cfg: &TransformConfig, prefactor: f64, g: G) -> Result<TransformResult>
where
    G: Fn(&SpectralParams) -> Result<(C64, f64)> + Sync,
{
    let fine = MuGrid::build(f, &cfg.grid)?;
    let coarse = MuGrid::with_order(f, &cfg.grid, cfg.grid.check_order)?;
    let (v, ke) = fine.integrate(&g)?;
    let (vc, _) = coarse.integrate(&g)?;
    Ok(TransformResult { value: v * prefactor, err_estimate: ((v - vc).norm() + ke) * prefactor.abs(), nodes: fine.len() })
}

/// H_I(f) = 1/(192π⁵) ∫ f spec.
pub fn h_trivial(f: &TestFunction, cfg: &TransformConfig) -> Result<TransformResult> {
    transform(f, cfg, 1.0 / (192.0 * PI.powi(5)), |mu| Ok((spec_measure(mu)?, 0.0)))
}

/// H_I by nested adaptive Gauss-Kronrod over the bounding box of f; slow,
/// kept as an independent check of the tensor grid.
pub fn h_trivial_adaptive(f: &TestFunction, rel_tol: f64) -> Result<(C64, f64)> {
    let r = f.decay_radius();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in f.centers() {
        for w in WeylElement::ALL {
            let m = weyl_act_mu(c, w).components();
            for x in [m[0].im, m[1].im] {
                lo = lo.min(x - r);
                hi = hi.max(x + r);
            }
        }
    }
    let inner = |a: f64| {
        adaptive(
            |b| {
                let mu = SpectralParams::imaginary(a, b);
                f.eval(&mu) * spec_measure(&mu).unwrap_or_default()
            },
            lo,
            hi,
            rel_tol,
            1e-300,
            4000,
        )
    };
    let outer_err = std::cell::Cell::new(0.0f64);
    let failed = std::cell::Cell::new(None);
    let (v, e) = adaptive(
        |a| match inner(a) {
            Ok((v, e)) => {
                outer_err.set(outer_err.get().max(e));
                v
            }
            Err(err) => {
                failed.set(Some(err));
                C64::new(0.0, 0.0)
            }
        },
        lo,
        hi,
        rel_tol,
        1e-300,
        4000,
    )?;
    if let Some(err) = failed.take() {
        return Err(err);
    }
    let k = 1.0 / (192.0 * PI.powi(5));
    Ok((v * k, (e + outer_err.get() * (hi - lo)) * k))
}

fn check_y(y: f64, name: &str) -> Result<()> {
    if !y.is_finite() || y == 0.0 {
        return Err(Error::Domain(format!("{name} = {y} must be finite and nonzero")));
    }
    Ok(())
}

/// H_wl(f; y).
pub fn h_wl(f: &TestFunction, y: (f64, f64), form: WlForm, cfg: &TransformConfig) -> Result<TransformResult> {
    check_y(y.0, "y1")?;
    check_y(y.1, "y2")?;
    let pol = &cfg.policy;
    let a = (y.0 * y.1).abs();
    match form {
        WlForm::J => transform(f, cfg, -1.0 / (512.0 * PI.powi(3) * a), |mu| {
            let j = j_wl(y, mu, pol)?;
            let s = spec_over_sin(mu);
            Ok((j.value * s, j.err_estimate * s.norm()))
        }),
        WlForm::K => transform(f, cfg, 1.0 / (96.0 * PI.powi(6) * a), |mu| {
            let k = k_wl_sym(y, mu, pol)?;
            let s = spec_measure(mu)?;
            Ok((k.value * s, k.err_estimate * s.norm()))
        }),
        WlForm::Signed => {
            let case = SignCase::of(y);
            if case == SignCase::PlusPlus {
                return Err(Error::SignMismatch("the signed form needs y outside the ++ quadrant".into()));
            }
            transform(f, cfg, -1.0 / (1024.0 * PI.powi(3) * a), |mu| {
                let k = k_wl_signed(y, mu, case, pol)?;
                let s = spec_over_sin(mu);
                Ok((k.value * s, k.err_estimate * s.norm()))
            })
        }
    }
}

fn w4_integrand(y1: f64, mu: &SpectralParams, form: W4Form, pol: &SeriesPolicy) -> Result<(C64, f64)> {
    match form {
        W4Form::J => {
            let j = j_w4(y1, mu, pol)?;
            let s = (0.5 * PI * (mu.mu1() - mu.mu2())).sin() * spec_over_sin(mu);
            Ok((j.value * s, j.err_estimate * s.norm()))
        }
        W4Form::K => {
            let k = k_w4_sym(y1, mu, pol)?;
            let s = spec_measure(mu)?;
            Ok((k.value * s, k.err_estimate * s.norm()))
        }
    }
}

fn w4_prefactor(y1: f64, form: W4Form) -> f64 {
    match form {
        W4Form::J => 1.0 / (16384.0 * PI.powi(6) * y1.abs()),
        W4Form::K => 1.0 / (96.0 * PI.powi(6) * y1.abs()),
    }
}

/// H_w4(f; (y1, −1)).
pub fn h_w4(f: &TestFunction, y1: f64, form: W4Form, cfg: &TransformConfig) -> Result<TransformResult> {
    check_y(y1, "y1")?;
    transform(f, cfg, w4_prefactor(y1, form), |mu| w4_integrand(y1, mu, form, &cfg.policy))
}

/// H_w5(f; (−1, y2)), evaluated as H_w4(f̃; (−y2, −1)) after the substitution
/// μ → −μ, so f is sampled on its own grid and the kernel at −μ.
pub fn h_w5(f: &TestFunction, y2: f64, form: W4Form, cfg: &TransformConfig) -> Result<TransformResult> {
    check_y(y2, "y2")?;
    // The Jacobian of μ → −μ is 1 and the integration domain is symmetric.
    transform(f, cfg, w4_prefactor(y2, form), |mu| w4_integrand(-y2, &mu.neg(), form, &cfg.policy))
}

/// Which representation the geometric side uses for each weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelForm {
    J,
    K,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricConfig {
    pub cmax: u64,
    pub form: KernelForm,
    pub transform: TransformConfig,
}

impl GeometricConfig {
    pub fn new(cmax: u64) -> GeometricConfig {
        // The weights are needed at |4π² y| well past the default series
        // bound; the series reports its own error there.
        let policy = SeriesPolicy { series_domain_bound: 1e4, ..SeriesPolicy::default() };
        GeometricConfig { cmax, form: KernelForm::J, transform: TransformConfig { grid: GridConfig::default(), policy } }
    }
}

/// One (c, ε) term S_w(ψ_m, ψ_{εn}; c)/(c1 c2) · H_w(f; y).
#[derive(Debug, Clone, PartialEq)]
pub struct TermRecord {
    pub w: WeylElement,
    pub c1: u64,
    pub c2: u64,
    pub eps: (i8, i8),
    pub kloosterman: C64,
    pub y: (f64, f64),
    /// None when the Kloosterman factor vanishes identically and the weight
    /// is not evaluated.
    pub weight: Option<TransformResult>,
    pub contribution: C64,
    pub err_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricSum {
    pub w: WeylElement,
    pub terms: Vec<TermRecord>,
    pub value: C64,
    pub err_estimate: f64,
}

impl GeometricSum {
    /// Every record with its floating-point values as raw bit patterns, one
    /// line per term and the total last; equal strings mean bit-equal results.
    pub fn canonical_text(&self) -> String {
        let bits = |z: C64| format!("{:016x}:{:016x}", z.re.to_bits(), z.im.to_bits());
        let mut out = String::new();
        for t in &self.terms {
            let weight = match &t.weight {
                Some(h) => format!("{} {:016x} {}", bits(h.value), h.err_estimate.to_bits(), h.nodes),
                None => "none".to_string(),
            };
            out.push_str(&format!(
                "{} {} {} {} {} {} {:016x} {:016x} {} {} {:016x}\n",
                t.w,
                t.c1,
                t.c2,
                t.eps.0,
                t.eps.1,
                bits(t.kloosterman),
                t.y.0.to_bits(),
                t.y.1.to_bits(),
                weight,
                bits(t.contribution),
                t.err_estimate.to_bits()
            ));
        }
        out.push_str(&format!("sum {} {:016x}\n", bits(self.value), self.err_estimate.to_bits()));
        out
    }
}

struct Candidate {
    c: Modulus,
    eps: (i8, i8),
    s: C64,
    y: (f64, f64),
}

/// Truncated geometric sum over 1 ≤ c1, c2 ≤ cmax for w ∈ {wl, w4, w5}.
pub fn geometric_sum(w: WeylElement, f: &TestFunction, m: CharIndex, n: CharIndex, cfg: &GeometricConfig) -> Result<GeometricSum> {
    if [m.m1, m.m2, n.m1, n.m2].contains(&0) {
        return Err(Error::Domain("character indices must be nonzero".into()));
    }
    if cfg.cmax == 0 {
        return Err(Error::Domain("cmax must be at least 1".into()));
    }
    let (m1, m2, n1, n2) = (m.m1 as f64, m.m2 as f64, n.m1 as f64, n.m2 as f64);
    let mut cands = Vec::new();
    for c1 in 1..=cfg.cmax {
        for c2 in 1..=cfg.cmax {
            let c = Modulus::new(c1, c2)?;
            let (c1f, c2f) = (c1 as f64, c2 as f64);
            match w {
                WeylElement::Wl => {
                    for eps in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)] {
                        let en = CharIndex::new(eps.0 as i64 * n.m1, eps.1 as i64 * n.m2);
                        let s = s_weyl(w, m, en, c)?;
                        let (e1, e2) = (eps.0 as f64, eps.1 as f64);
                        let y = (-e2 * m1 * n2 * c1f / (c2f * c2f), -e1 * m2 * n1 * c2f / (c1f * c1f));
                        cands.push(Candidate { c, eps, s, y });
                    }
                }
                WeylElement::W4 => {
                    if m.m2 as i128 * c1 as i128 != n.m1 as i128 * (c2 * c2) as i128 {
                        continue;
                    }
                    for e in [1i8, -1] {
                        let s = s_weyl(w, m, CharIndex::new(n.m1, e as i64 * n.m2), c)?;
                        let y1 = e as f64 * m1 * m2 * m2 * n2 / (c2f.powi(3) * n1);
                        cands.push(Candidate { c, eps: (1, e), s, y: (y1, -1.0) });
                    }
                }
                WeylElement::W5 => {
                    if m.m1 as i128 * c2 as i128 != n.m2 as i128 * (c1 * c1) as i128 {
                        continue;
                    }
                    for e in [1i8, -1] {
                        let s = s_weyl(w, m, CharIndex::new(e as i64 * n.m1, n.m2), c)?;
                        let y2 = e as f64 * m1 * m1 * m2 * n1 / (c1f.powi(3) * n2);
                        cands.push(Candidate { c, eps: (e, 1), s, y: (-1.0, y2) });
                    }
                }
                other => return Err(Error::UnsupportedWeyl(other.label().to_string())),
            }
        }
    }

    let mut terms = Vec::with_capacity(cands.len());
    let mut acc = CompensatedSum::new();
    let mut err = 0.0;
    for cand in cands {
        let Candidate { c, eps, s, y } = cand;
        let weight = if s == C64::new(0.0, 0.0) {
            None
        } else {
            let tc = &cfg.transform;
            let r = match (w, cfg.form) {
                (WeylElement::Wl, KernelForm::J) => h_wl(f, y, WlForm::J, tc),
                (WeylElement::Wl, KernelForm::K) => h_wl(f, y, WlForm::K, tc),
                (WeylElement::W4, form) => h_w4(f, y.0, w4_form(form), tc),
                (_, form) => h_w5(f, y.1, w4_form(form), tc),
            };
            Some(r.map_err(|e| Error::Convergence(format!("weight at modulus ({}, {}): {e}", c.c1, c.c2)))?)
        };
        let k = 1.0 / (c.c1 * c.c2) as f64;
        let (contribution, e) = match &weight {
            Some(h) => (s * h.value * k, s.norm() * h.err_estimate * k),
            None => (C64::new(0.0, 0.0), 0.0),
        };
        acc.add(contribution);
        err += e;
        terms.push(TermRecord { w, c1: c.c1, c2: c.c2, eps, kloosterman: s, y, weight, contribution, err_estimate: e });
    }
    Ok(GeometricSum { w, terms, value: acc.value(), err_estimate: err })
}

fn w4_form(form: KernelForm) -> W4Form {
    match form {
        KernelForm::J => W4Form::J,
        KernelForm::K => W4Form::K,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn narrow() -> TestFunction {
        TestFunction::gaussian(vec![SpectralParams::imaginary(1.5, 0.5)], 0.5).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn test_function_is_weyl_invariant(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -3.0..3.0f64, w in 0.3..2.0f64) {
            let f = TestFunction::gaussian(vec![SpectralParams::imaginary(c, 0.7 * c + 0.4)], w).unwrap();
            let mu = SpectralParams::imaginary(a, b);
            let v = f.eval(&mu);
            // The exponent is a difference of squares of size (|μ|² + |c|²)/w².
            let scale = (a * a + b * b + 3.0 * c * c + 2.0) / (w * w);
            let tol = 2e-15 * scale * v.norm() + 1e-290;
            for g in WeylElement::ALL {
                prop_assert!((f.eval(&weyl_act_mu(&mu, g)) - v).norm() <= tol);
            }
            prop_assert!((f.symmetrized(&mu) - v).norm() <= tol);
        }

        #[test]
        fn test_function_decays(theta in 0.0..std::f64::consts::TAU, w in 0.3..2.0f64, extra in 0.0..5.0f64) {
            let f = TestFunction::gaussian(vec![SpectralParams::imaginary(1.0, -0.5)], w).unwrap();
            let r = f.decay_radius() + extra;
            // Every Weyl image of the center lies within 2 of the origin.
            let mu = SpectralParams::imaginary((r + 2.0) * theta.cos(), (r + 2.0) * theta.sin());
            prop_assert!(f.eval(&mu).norm() < 1e-16 * f.eval(&SpectralParams::imaginary(1.0, -0.5)).norm());
        }
    }

    #[test]
    fn grid_without_offset_hits_the_diagonal() {
        let cfg = GridConfig { offset: 0.0, ..GridConfig::default() };
        assert_eq!(MuGrid::build(&narrow(), &cfg).unwrap_err(), Error::DegenerateGrid);
        let g = MuGrid::build(&narrow(), &GridConfig::default()).unwrap();
        assert!(g.nodes.iter().all(|m| m.min_gap() > DEGENERACY_TOL));
        assert!(g.masked > 0);
    }

    #[test]
    fn trivial_transform_matches_adaptive_quadrature() {
        let f = TestFunction::gaussian(vec![SpectralParams::imaginary(2.0, 0.0)], 1.0).unwrap();
        let h = h_trivial(&f, &TransformConfig::default()).unwrap();
        let (o, _) = h_trivial_adaptive(&f, 1e-11).unwrap();
        assert!(h.value.re > 0.0);
        assert!(rel(h.value, o) < 1e-10, "{} {}", h.value, o);
    }

    #[test]
    fn parametrization_does_not_matter() {
        let f = narrow();
        let a = TransformConfig::default();
        let b = TransformConfig { grid: GridConfig { param: Parametrization::Mu13, ..GridConfig::default() }, ..a.clone() };
        assert!(rel(h_trivial(&f, &a).unwrap().value, h_trivial(&f, &b).unwrap().value) < 1e-10);
        let y = (0.02, -0.03);
        assert!(rel(h_wl(&f, y, WlForm::J, &a).unwrap().value, h_wl(&f, y, WlForm::J, &b).unwrap().value) < 1e-10);
    }

    #[test]
    fn doubling_the_density_stays_within_the_estimate() {
        let f = narrow();
        let a = TransformConfig::default();
        let b = TransformConfig { grid: GridConfig { panel_len: 0.5, ..GridConfig::default() }, ..a.clone() };
        for y in [(0.03, 0.01), (-0.2, 0.1)] {
            let h = h_wl(&f, y, WlForm::J, &a).unwrap();
            let h2 = h_wl(&f, y, WlForm::J, &b).unwrap();
            assert!((h.value - h2.value).norm() <= h.err_estimate + 1e-14 * h.value.norm(), "{y:?}");
        }
    }

    #[test]
    fn wl_forms_agree() {
        let f = narrow();
        let cfg = TransformConfig::default();
        for y in [(0.01, 0.02), (-0.03, 0.01), (-0.02, -0.02)] {
            let j = h_wl(&f, y, WlForm::J, &cfg).unwrap();
            let k = h_wl(&f, y, WlForm::K, &cfg).unwrap();
            assert!(rel(j.value, k.value) < 1e-8, "{y:?} {} {}", j.value, k.value);
            if y.0 < 0.0 || y.1 < 0.0 {
                let s = h_wl(&f, y, WlForm::Signed, &cfg).unwrap();
                assert!(rel(s.value, j.value) < 1e-8, "{y:?}");
            }
        }
        assert!(matches!(h_wl(&f, (0.1, 0.1), WlForm::Signed, &cfg), Err(Error::SignMismatch(_))));
        assert!(matches!(h_wl(&f, (0.0, 0.1), WlForm::J, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn w4_forms_and_involution() {
        let f = narrow();
        let g = f.reflected();
        assert_ne!(f.eval(&SpectralParams::imaginary(1.5, 0.5)), g.eval(&SpectralParams::imaginary(1.5, 0.5)));
        let cfg = TransformConfig::default();
        for y in [0.02, -0.05, 0.3] {
            let j = h_w4(&f, y, W4Form::J, &cfg).unwrap();
            let k = h_w4(&f, y, W4Form::K, &cfg).unwrap();
            assert!(rel(j.value, k.value) < 1e-8, "{y}");
            let w5 = h_w5(&f, -y, W4Form::J, &cfg).unwrap();
            let w4 = h_w4(&g, y, W4Form::J, &cfg).unwrap();
            assert!(rel(w5.value, w4.value) < 1e-8, "{y}");
        }
    }

    #[test]
    fn w4_moduli_follow_the_gate() {
        let f = narrow();
        for (m, n) in [((1, 1), (1, 1)), ((2, 1), (1, 2)), ((1, 2), (2, 1))] {
            let (m, n) = (CharIndex::new(m.0, m.1), CharIndex::new(n.0, n.1));
            let mut cfg = GeometricConfig::new(6);
            cfg.transform.grid.order = 4;
            cfg.transform.grid.check_order = 2;
            let g = geometric_sum(WeylElement::W4, &f, m, n, &cfg).unwrap();
            let mut want = Vec::new();
            for c1 in 1..=6i64 {
                for c2 in 1..=6i64 {
                    if m.m2 * c1 == n.m1 * c2 * c2 {
                        want.push((c1 as u64, c2 as u64));
                    }
                }
            }
            let got: Vec<_> = g.terms.iter().filter(|t| t.eps.1 == 1).map(|t| (t.c1, t.c2)).collect();
            assert_eq!(got, want);
            // With positive indices the ε = −1 gate n2 c1 = m1 c2² cannot hold.
            assert!(g.terms.iter().filter(|t| t.eps.1 == -1).all(|t| t.kloosterman == C64::new(0.0, 0.0) && t.weight.is_none()));
        }
    }

    #[test]
    fn geometric_side_errors() {
        let f = narrow();
        let one = CharIndex::new(1, 1);
        let cfg = GeometricConfig::new(1);
        assert!(matches!(geometric_sum(WeylElement::W2, &f, one, one, &cfg), Err(Error::UnsupportedWeyl(_))));
        assert!(matches!(geometric_sum(WeylElement::Wl, &f, CharIndex::new(0, 1), one, &cfg), Err(Error::Domain(_))));
        assert!(matches!(geometric_sum(WeylElement::Wl, &f, one, one, &GeometricConfig::new(0)), Err(Error::Domain(_))));
    }

    #[test]
    fn w4_and_w5_sums_are_conjugate() {
        let f = narrow();
        let one = CharIndex::new(1, 1);
        let cfg = GeometricConfig::new(4);
        let a = geometric_sum(WeylElement::W4, &f, one, one, &cfg).unwrap();
        let b = geometric_sum(WeylElement::W5, &f, one, one, &cfg).unwrap();
        assert_eq!(a.terms.len(), 4);
        assert!((a.value - b.value.conj()).norm() <= 1e-12 * a.value.norm() + a.err_estimate + b.err_estimate);
    }

    #[test]
    fn zero_function_transforms_vanish() {
        let z = TestFunction::zero();
        let cfg = TransformConfig::default();
        assert!(MuGrid::build(&z, &cfg.grid).unwrap().is_empty());
        let zero = C64::new(0.0, 0.0);
        assert_eq!(h_trivial(&z, &cfg).unwrap().value, zero);
        assert_eq!(h_wl(&z, (0.01, -0.02), WlForm::J, &cfg).unwrap().value, zero);
        assert_eq!(h_w4(&z, 0.02, W4Form::K, &cfg).unwrap().value, zero);
        assert_eq!(h_w5(&z, -0.02, W4Form::J, &cfg).unwrap().value, zero);
        let one = CharIndex::new(1, 1);
        let g = geometric_sum(WeylElement::Wl, &z, one, one, &GeometricConfig::new(1)).unwrap();
        assert_eq!((g.value, g.err_estimate), (zero, 0.0));
    }

    #[test]
    fn trivial_transform_is_real() {
        let h = h_trivial(&narrow(), &TransformConfig::default()).unwrap();
        assert!(h.value.im.abs() < 1e-8 * h.value.norm(), "{}", h.value);
    }

    #[test]
    fn gate_empty_sum_is_zero() {
        let (m, n) = (CharIndex::new(1, 1), CharIndex::new(2, 1));
        let g = geometric_sum(WeylElement::W4, &narrow(), m, n, &GeometricConfig::new(3)).unwrap();
        assert!(g.terms.iter().all(|t| t.weight.is_none()));
        assert_eq!(g.value, C64::new(0.0, 0.0));
    }
}
