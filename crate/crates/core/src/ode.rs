//! Finite-difference residuals of the differential equations satisfied by
//! the kernels, and the coefficient recurrences of the long-element series.

use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::series::wl_coefficients;
use crate::spectral::{eigenvalues, SpectralParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilConfig {
    /// Accuracy order of the central differences: 4, 6 or 8.
    pub order: usize,
    /// Step as a fraction of |y_i|. Third derivatives lose about ε/h_rel³
    /// to rounding, so steps much below 1e-2 hurt the Δ̃2 and w4 residuals.
    pub h_rel: f64,
    /// Number of step sizes h, h/2, ... fed to Richardson extrapolation.
    pub richardson_levels: usize,
}

impl Default for StencilConfig {
    fn default() -> Self {
        StencilConfig { order: 6, h_rel: 1e-2, richardson_levels: 2 }
    }
}

impl StencilConfig {
    pub fn validate(&self) -> Result<()> {
        if ![4, 6, 8].contains(&self.order) {
            return Err(Error::Constraint(format!("stencil order {} not in {{4, 6, 8}}", self.order)));
        }
        if !(1e-5..=1e-2).contains(&self.h_rel) {
            return Err(Error::Constraint(format!("h_rel {} outside [1e-5, 1e-2]", self.h_rel)));
        }
        if !(1..=4).contains(&self.richardson_levels) {
            return Err(Error::Constraint(format!("richardson_levels {} outside 1..=4", self.richardson_levels)));
        }
        Ok(())
    }
}

/// Fornberg's weights for the `deriv`-th derivative at 0 on the integer
/// nodes −r..=r.
fn fornberg(deriv: usize, r: usize) -> Vec<f64> {
    let x: Vec<f64> = (-(r as i64)..=r as i64).map(|k| k as f64).collect();
    let n = x.len();
    let mut c = vec![vec![0.0; deriv + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        let mn = i.min(deriv);
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - x[i - 1] * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * x[i - 1] * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (x[i] * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = x[i] * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[deriv]).collect()
}

/// Central stencil radius for a derivative of order `deriv` at accuracy `order`.
fn radius(deriv: usize, order: usize) -> usize {
    if deriv == 0 {
        0
    } else {
        (deriv + 1) / 2 + order / 2 - 1
    }
}

/// Samples of F on a tensor grid around y, memoized per integer offset.
struct Grid<'a, F> {
    f: &'a F,
    y: (f64, f64),
    h: (f64, f64),
    cache: HashMap<(i64, i64), C64>,
    max_abs: f64,
}

impl<'a, F: Fn(f64, f64) -> Result<C64>> Grid<'a, F> {
    fn at(&mut self, i: i64, j: i64) -> Result<C64> {
        if let Some(v) = self.cache.get(&(i, j)) {
            return Ok(*v);
        }
        let (a, b) = (self.y.0 + i as f64 * self.h.0, self.y.1 + j as f64 * self.h.1);
        if a == 0.0 || b == 0.0 || a.signum() != self.y.0.signum() || b.signum() != self.y.1.signum() {
            return Err(Error::Stencil);
        }
        let v = (self.f)(a, b)?;
        self.max_abs = self.max_abs.max(v.norm());
        self.cache.insert((i, j), v);
        Ok(v)
    }

    /// ∂^a_{y1} ∂^b_{y2} F at y.
    fn partial(&mut self, a: usize, b: usize, order: usize) -> Result<C64> {
        let (ra, rb) = (radius(a, order), radius(b, order));
        let (wa, wb) = (fornberg(a, ra), fornberg(b, rb));
        let mut acc = C64::new(0.0, 0.0);
        for (i, &u) in wa.iter().enumerate() {
            if u == 0.0 {
                continue;
            }
            for (j, &v) in wb.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                acc += u * v * self.at(i as i64 - ra as i64, j as i64 - rb as i64)?;
            }
        }
        Ok(acc / (self.h.0.powi(a as i32) * self.h.1.powi(b as i32)))
    }
}

/// Richardson extrapolation of estimates at h, h/2, ... whose errors run in
/// h^p, h^{p+2}, ...
fn richardson(mut table: Vec<C64>, p: usize) -> C64 {
    let mut e = p as i32;
    while table.len() > 1 {
        let k = 2f64.powi(e);
        table = table.windows(2).map(|w| (k * w[1] - w[0]) / (k - 1.0)).collect();
        e += 2;
    }
    table[0]
}

/// Evaluates `combine` on the derivatives listed in `needed` at each step
/// level, extrapolates, and returns it together with the sample scale.
fn extrapolated<F, G>(
    f: &F,
    y: (f64, f64),
    cfg: &StencilConfig,
    needed: &[(usize, usize)],
    steps: (bool, bool),
    combine: G,
) -> Result<(Vec<C64>, f64)>
where
    F: Fn(f64, f64) -> Result<C64>,
    G: Fn(&HashMap<(usize, usize), C64>) -> Vec<C64>,
{
    cfg.validate()?;
    if y.0 == 0.0 || y.1 == 0.0 {
        return Err(Error::Stencil);
    }
    let mut levels: Vec<Vec<C64>> = Vec::new();
    let mut scale = 0.0f64;
    for level in 0..cfg.richardson_levels {
        let k = 0.5f64.powi(level as i32);
        let h = (if steps.0 { cfg.h_rel * y.0.abs() * k } else { 1.0 }, if steps.1 { cfg.h_rel * y.1.abs() * k } else { 1.0 });
        let mut g = Grid { f, y, h, cache: HashMap::new(), max_abs: 0.0 };
        let mut d = HashMap::new();
        for &(a, b) in needed {
            d.insert((a, b), g.partial(a, b, cfg.order)?);
        }
        scale = scale.max(g.max_abs);
        levels.push(combine(&d));
    }
    let n = levels[0].len();
    let out = (0..n).map(|i| richardson(levels.iter().map(|l| l[i]).collect(), cfg.order)).collect();
    Ok((out, scale))
}

/// Normalized residuals (r1, r2) of (Δ̃1 + λ1) F and (Δ̃2 + λ2) F at y, with
/// Δ̃1 = y1²∂1² + y2²∂2² − y1y2∂1∂2 + (2πi)²(y1+y2) and
/// Δ̃2 = −y1²y2∂1²∂2 + y1y2²∂1∂2² + (2πi)² y1y2 (∂1 − ∂2) + y1²∂1² − y2²∂2² + (2πi)²(y1 − y2).
pub fn residual_wl<F>(f: F, y: (f64, f64), mu: &SpectralParams, cfg: &StencilConfig) -> Result<(f64, f64)>
where
    F: Fn(f64, f64) -> Result<C64>,
{
    let (l1, l2) = eigenvalues(mu);
    let tpi2 = -4.0 * PI * PI;
    let (y1, y2) = y;
    let needed = [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1), (2, 1), (1, 2)];
    let (r, scale) = extrapolated(&f, y, cfg, &needed, (true, true), |d| {
        let g = |a, b| d[&(a, b)];
        let d1 = y1 * y1 * g(2, 0) + y2 * y2 * g(0, 2) - y1 * y2 * g(1, 1) + tpi2 * (y1 + y2) * g(0, 0) + l1 * g(0, 0);
        let d2 = -y1 * y1 * y2 * g(2, 1) + y1 * y2 * y2 * g(1, 2) + tpi2 * y1 * y2 * (g(1, 0) - g(0, 1)) + y1 * y1 * g(2, 0)
            - y2 * y2 * g(0, 2)
            + tpi2 * (y1 - y2) * g(0, 0)
            + l2 * g(0, 0);
        vec![d1, d2]
    })?;
    if scale == 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok((r[0].norm() / scale, r[1].norm() / scale))
}

/// Normalized residual of Δ̂3 F at y1 with y2 held at `y2_fixed`, where
/// Δ̂3 = λ1 + λ2 + 8π³ i y1 y2 − λ1 y1∂1 − y1³∂1³.
pub fn residual_w4<F>(f: F, y1: f64, y2_fixed: f64, mu: &SpectralParams, cfg: &StencilConfig) -> Result<f64>
where
    F: Fn(f64) -> Result<C64>,
{
    let (l1, l2) = eigenvalues(mu);
    let g2 = |a: f64, _b: f64| f(a);
    let i8pi3 = C64::new(0.0, 8.0 * PI.powi(3));
    let (r, scale) = extrapolated(&g2, (y1, y2_fixed), cfg, &[(0, 0), (1, 0), (3, 0)], (true, false), |d| {
        let g = |a| d[&(a, 0)];
        vec![(l1 + l2 + i8pi3 * y1 * y2_fixed) * g(0) - l1 * y1 * g(1) - y1.powi(3) * g(3)]
    })?;
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(r[0].norm() / scale)
}

fn int_at_most(z: C64, n: usize) -> bool {
    z.im.abs() < 1e-12 && (z.re - z.re.round()).abs() < 1e-12 && z.re.round() <= -1.0 && z.re.round() >= -(n as f64)
}

/// Largest relative residual, over n1 + n2 ≤ N, of the two two-term
/// relations and the two eliminated one-term relations satisfied by the
/// long-element coefficients a(n1, n2).
pub fn recurrence_check(mu: &SpectralParams, n: usize) -> Result<f64> {
    let [d12, d13, d23] = mu.differences();
    for (d, name) in [(d12, "μ1−μ2"), (d13, "μ1−μ3"), (d23, "μ2−μ3")] {
        if int_at_most(d, n) {
            return Err(Error::Pole(format!("{name} = {d} makes a recurrence denominator vanish")));
        }
    }
    let [m1, m2, m3] = mu.components();
    let a = wl_coefficients(mu, n)?;
    let at = |i: i64, j: i64| if i < 0 || j < 0 { C64::new(0.0, 0.0) } else { a[i as usize][j as usize] };
    let rel = |terms: &[C64]| {
        let s: C64 = terms.iter().sum();
        let m: f64 = terms.iter().map(|t| t.norm()).sum();
        if m == 0.0 {
            0.0
        } else {
            s.norm() / m
        }
    };
    let mut worst = 0.0f64;
    for i in 0..=n as i64 {
        for j in 0..=(n as i64 - i) {
            if i == 0 && j == 0 {
                continue;
            }
            let (x, y) = (i as f64, j as f64);
            let a0 = at(i, j);
            let (l, d) = (at(i - 1, j), at(i, j - 1));
            let p1 = x * x - x * y + y * y + m2 * (x - 2.0 * y) - m3 * (x + y);
            let p2 = (x - m3) * y * y - x * x * (y + m1) - 2.0 * m2 * x * y - m1 * (m2 - m3) * x + m3 * (m2 - m1) * y;
            let s = x + y + d13;
            let r = [
                rel(&[p1 * a0, -l, -d]),
                rel(&[p2 * a0, -(x - m3) * d, (y + m1) * l]),
                rel(&[x * (x + d13) * (x + d23) * a0, -s * l]),
                rel(&[y * (y + d12) * (y + d13) * a0, -s * d]),
            ];
            worst = r.iter().fold(worst, |w, &v| w.max(v));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{j_w4_xy, j_wl, SeriesPolicy};
    use crate::spectral::{weyl_act_mu, WeylElement};

    fn jwl(mu: SpectralParams) -> impl Fn(f64, f64) -> Result<C64> {
        move |a, b| Ok(j_wl((a, b), &mu, &SeriesPolicy::default())?.value)
    }

    #[test]
    fn fornberg_known_weights() {
        let w = fornberg(2, 1);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
        let w = fornberg(1, 2);
        let want = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = fornberg(3, 2);
        let want = [-0.5, 1.0, 0.0, -1.0, 0.5];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn config_limits() {
        assert!(StencilConfig { order: 5, ..Default::default() }.validate().is_err());
        assert!(StencilConfig { h_rel: 0.1, ..Default::default() }.validate().is_err());
        assert!(StencilConfig::default().validate().is_ok());
    }

    #[test]
    fn long_element_series_solves_both_equations() {
        let mu = SpectralParams::real(0.3, 0.1);
        for w in WeylElement::ALL {
            let (r1, r2) = residual_wl(jwl(weyl_act_mu(&mu, w)), (0.05, 0.07), &mu, &StencilConfig::default()).unwrap();
            assert!(r1 < 1e-6 && r2 < 1e-6, "{w}: {r1:e} {r2:e}");
        }
    }

    #[test]
    fn zero_function() {
        let mu = SpectralParams::real(0.3, 0.1);
        let z = |_: f64, _: f64| Ok(C64::new(0.0, 0.0));
        assert_eq!(residual_wl(z, (0.05, 0.07), &mu, &StencilConfig::default()).unwrap(), (0.0, 0.0));
        assert_eq!(residual_w4(|_| Ok(C64::new(0.0, 0.0)), 0.1, -1.0, &mu, &StencilConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn w4_series_solves_third_order_equation() {
        let mu = SpectralParams::imaginary(0.4, 0.1);
        for y2 in [-1.0, 1.0] {
            for w in WeylElement::CYCLIC {
                let m = weyl_act_mu(&mu, w);
                let f = |a: f64| Ok(j_w4_xy((a, y2), &m, &SeriesPolicy::default())?.value);
                let r = residual_w4(f, 0.1, y2, &mu, &StencilConfig::default()).unwrap();
                assert!(r < 1e-6, "{w} y2={y2}: {r:e}");
            }
        }
    }

    #[test]
    fn wrong_eigenvalue_is_detected() {
        let mu = SpectralParams::real(0.3, 0.1);
        let other = SpectralParams::real(0.35, 0.1);
        let (r1, r2) = residual_wl(jwl(other), (0.05, 0.07), &mu, &StencilConfig::default()).unwrap();
        assert!(r1.max(r2) > 1e-3);
    }

    #[test]
    fn stencil_crossing_axis() {
        let mu = SpectralParams::real(0.3, 0.1);
        let cfg = StencilConfig { h_rel: 1e-2, order: 8, richardson_levels: 1 };
        // Fine while the step stays inside the half-plane.
        assert!(residual_wl(jwl(mu), (0.05, 0.07), &mu, &cfg).is_ok());
        assert!(matches!(residual_wl(jwl(mu), (0.0, 0.07), &mu, &cfg), Err(Error::Stencil)));
    }

    #[test]
    fn observed_convergence_order() {
        let mu = SpectralParams::real(0.3, 0.1);
        let r = |h: f64| {
            let cfg = StencilConfig { order: 4, h_rel: h, richardson_levels: 1 };
            // Δ̃2 carries third derivatives and hits its rounding floor first.
            residual_wl(jwl(mu), (0.05, 0.07), &mu, &cfg).unwrap().0
        };
        let (coarse, fine) = (r(1e-2), r(5e-3));
        let observed = (coarse / fine).log2();
        assert!(observed >= 3.0, "observed order {observed}");
    }

    #[test]
    fn linear_combinations_are_solutions() {
        let mu = SpectralParams::real(0.3, 0.1);
        let cs =
            [C64::new(0.3, -1.2), C64::new(-0.7, 0.4), C64::new(1.1, 0.9), C64::new(0.2, 0.5), C64::new(-1.3, -0.1), C64::new(0.6, 0.6)];
        let f = |a: f64, b: f64| -> Result<C64> {
            let mut acc = C64::new(0.0, 0.0);
            for (w, c) in WeylElement::ALL.iter().zip(cs) {
                acc += c * j_wl((a, b), &weyl_act_mu(&mu, *w), &SeriesPolicy::default())?.value;
            }
            Ok(acc)
        };
        let (r1, r2) = residual_wl(f, (0.05, 0.07), &mu, &StencilConfig::default()).unwrap();
        assert!(r1 < 1e-5 && r2 < 1e-5, "{r1:e} {r2:e}");
    }

    #[test]
    fn recurrences_hold() {
        let mu = SpectralParams::real(0.3, 0.1);
        assert!(recurrence_check(&mu, 40).unwrap() < 1e-12);
        assert_eq!(recurrence_check(&mu, 0).unwrap(), 0.0);
        let int = SpectralParams::real(1.0, 0.0);
        assert!(recurrence_check(&int, 10).unwrap() < 1e-12);
        let imag = SpectralParams::imaginary(0.4, 0.1);
        assert!(recurrence_check(&imag, 40).unwrap() < 1e-12);
    }

    #[test]
    fn resonant_mu_is_rejected() {
        // μ1 − μ2 = −2
        let mu = SpectralParams::real(-0.9, 1.1);
        assert!(matches!(recurrence_check(&mu, 5), Err(Error::Pole(_))));
        assert!(recurrence_check(&mu, 1).is_ok());
    }
}
