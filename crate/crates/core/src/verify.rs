//! Verification suites. Every check compares two independent evaluations of
//! the same quantity and records the observed residual against a tolerance.
//! Draws come from fixed seeds, so a suite is reproducible run to run.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::gamma::{barnes_first_check, barnes_second_check};
use crate::geometry::{xy_star_closed, xy_star_numeric, UpperX};
use crate::kloosterman::{naive, s_big, s_tilde, s_weyl, CharIndex, Modulus};
use crate::kuznetsov::{geometric_sum, h_w4, h_w5, h_wl, GeometricConfig, TestFunction, TransformConfig, W4Form, WlForm};
use crate::mb::{k_w4_mb, k_w4_voronoi, k_wl_mb, stade_check, whittaker_asymp_check, whittaker_wstar, MbConfig, MbVariant};
use crate::ode::{recurrence_check, residual_w4, residual_wl, StencilConfig};
use crate::series::{j_w4_xy, j_wl, k_w4_sym, k_wl_signed, k_wl_sym, Precision, SeriesPolicy, SignCase};
use crate::spectral::{cos_mu, weyl_act_mu, SpectralParams, WeylElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Recurrence,
    Ode,
    MbVsSeries,
    Whittaker,
    Barnes,
    Kloosterman,
    Stade,
    Iwasawa,
    Transforms,
    Asymptotic,
    Determinism,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Recurrence,
        Suite::Ode,
        Suite::MbVsSeries,
        Suite::Whittaker,
        Suite::Barnes,
        Suite::Kloosterman,
        Suite::Stade,
        Suite::Iwasawa,
        Suite::Transforms,
        Suite::Asymptotic,
        Suite::Determinism,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Recurrence => "recurrence",
            Suite::Ode => "ode",
            Suite::MbVsSeries => "mb-vs-series",
            Suite::Whittaker => "whittaker",
            Suite::Barnes => "barnes",
            Suite::Kloosterman => "kloosterman",
            Suite::Stade => "stade",
            Suite::Iwasawa => "iwasawa",
            Suite::Transforms => "transforms",
            Suite::Asymptotic => "asymptotic",
            Suite::Determinism => "determinism",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One comparison. `residual` is None when either side failed to evaluate,
/// in which case `error` says why.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub tolerance: f64,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

impl Check {
    fn from_result(name: String, tolerance: f64, r: Result<f64>) -> Check {
        match r {
            Ok(v) => Check { name, tolerance, residual: Some(v), error: None },
            Err(e) => Check { name, tolerance, residual: None, error: Some(e.to_string()) },
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self.residual, Some(r) if r.is_finite() && r <= self.tolerance)
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed()).count()
    }

    /// Largest residual over the checks that evaluated; NaN when none did.
    pub fn max_residual(&self) -> f64 {
        self.checks.iter().filter_map(|c| c.residual).fold(f64::NAN, f64::max)
    }
}

pub fn run(suite: Suite) -> SuiteReport {
    let t = Instant::now();
    let checks = match suite {
        Suite::Recurrence => recurrence(),
        Suite::Ode => ode(),
        Suite::MbVsSeries => mb_vs_series(),
        Suite::Whittaker => whittaker(),
        Suite::Barnes => barnes(),
        Suite::Kloosterman => kloosterman(),
        Suite::Stade => stade(),
        Suite::Iwasawa => iwasawa(),
        Suite::Transforms => transforms(),
        Suite::Asymptotic => asymptotic(),
        Suite::Determinism => determinism(),
    };
    SuiteReport { suite, checks, elapsed: t.elapsed() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

fn draw_mu(r: &mut ChaCha8Rng, re: f64, im: f64) -> SpectralParams {
    let mut z = || c(if re > 0.0 { r.gen_range(-re..re) } else { 0.0 }, r.gen_range(-im..im));
    SpectralParams::new(z(), z())
}

fn fmt_mu(mu: &SpectralParams) -> String {
    let a = mu.to_array();
    format!("μ=({:.4}{:+.4}i, {:.4}{:+.4}i)", a[0], a[1], a[2], a[3])
}

fn recurrence() -> Vec<Check> {
    let mut r = rng(11);
    (0..10)
        .map(|_| {
            let mu = draw_mu(&mut r, 0.5, 3.0);
            Check::from_result(format!("a(n1,n2), n1+n2 ≤ 40, {}", fmt_mu(&mu)), 1e-12, recurrence_check(&mu, 40))
        })
        .collect()
}

fn ode() -> Vec<Check> {
    let mut r = rng(12);
    let cfg = StencilConfig::default();
    // Third differences amplify the relative noise of the samples by 1/h³;
    // double-double samples keep that below the truncation error.
    let pol = SeriesPolicy { precision: Precision::DoubleDouble, ..SeriesPolicy::default() };
    let mut checks = Vec::new();
    for _ in 0..5 {
        let mu = draw_mu(&mut r, 0.3, 1.0);
        let mut coord = || if r.gen_bool(0.5) { 1.0 } else { -1.0 } * r.gen_range(0.02..0.2);
        let y = (coord(), coord());
        for w in WeylElement::ALL {
            let m = weyl_act_mu(&mu, w);
            let f = move |a: f64, b: f64| Ok(j_wl((a, b), &m, &pol)?.value);
            let res = residual_wl(f, y, &mu, &cfg).map(|(r1, r2)| r1.max(r2));
            checks.push(Check::from_result(format!("J_wl(·, μ^{w}) at y=({:.3}, {:.3}), {}", y.0, y.1, fmt_mu(&mu)), 1e-6, res));
        }
        let y2 = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        let y1 = y.0;
        for w in WeylElement::CYCLIC {
            let m = weyl_act_mu(&mu, w);
            let f = move |a: f64| Ok(j_w4_xy((a, y2), &m, &pol)?.value);
            let res = residual_w4(f, y1, y2, &mu, &cfg);
            checks.push(Check::from_result(format!("J_w4(·, μ^{w}) at y=({y1:.3}, {y2}), {}", fmt_mu(&mu)), 1e-6, res));
        }
    }
    checks
}

/// |4π² y| = 1e-3 … 30, logarithmically spaced.
fn mb_grid() -> [f64; 5] {
    std::array::from_fn(|i| 1e-3 * 3e4f64.powf(i as f64 / 4.0))
}

fn mb_vs_series() -> Vec<Check> {
    let mut r = rng(13);
    let mus: Vec<SpectralParams> = (0..3).map(|_| draw_mu(&mut r, 0.02, 2.0)).collect();
    let cfg = MbConfig::default();
    let pol = SeriesPolicy::default();
    let k = 4.0 * PI * PI;
    let mut jobs: Vec<(SpectralParams, (f64, f64), &'static str)> = Vec::new();
    for mu in &mus {
        for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            for a in mb_grid() {
                for b in mb_grid() {
                    jobs.push((*mu, (s1 * a / k, s2 * b / k), "wl"));
                }
            }
        }
        for s in [1.0, -1.0] {
            for a in mb_grid() {
                let y1 = s * a / (8.0 * PI.powi(3));
                jobs.push((*mu, (y1, 0.0), "w4 Mellin-Barnes"));
                jobs.push((*mu, (y1, 0.0), "w4 Voronoi"));
            }
        }
    }
    jobs.par_iter()
        .map(|(mu, y, route)| {
            let (name, res) = match *route {
                "wl" => {
                    let case = SignCase::of(*y);
                    let res = k_wl_mb(*y, mu, MbVariant::Auto, &cfg).and_then(|m| {
                        let s = if case == SignCase::PlusPlus { k_wl_sym(*y, mu, &pol) } else { k_wl_signed(*y, mu, case, &pol) }?;
                        Ok(rel(m.value, s.value))
                    });
                    (format!("K^{case} at 4π²y=({:.3e}, {:.3e}), {}", y.0 * k, y.1 * k, fmt_mu(mu)), res)
                }
                route => {
                    let m = if route == "w4 Voronoi" { k_w4_voronoi(y.0, mu, &cfg) } else { k_w4_mb(y.0, mu, &cfg) };
                    let res = m.and_then(|m| Ok(rel(m.value, k_w4_sym(y.0, mu, &pol)?.value)));
                    (format!("K_w4 {route} at 8π³y1={:.3e}, {}", y.0 * 8.0 * PI.powi(3), fmt_mu(mu)), res)
                }
            };
            Check::from_result(name, 1e-6, res)
        })
        .collect()
}

fn whittaker() -> Vec<Check> {
    let mut r = rng(14);
    let cfg = MbConfig::default();
    let pol = SeriesPolicy::default();
    let k = 4.0 * PI * PI;
    let pts: Vec<(SpectralParams, (f64, f64))> = (0..10)
        .map(|_| {
            let mu = draw_mu(&mut r, 0.0, 1.5);
            let mut x = || 10f64.powf(r.gen_range(-3.0..1.0)) / k;
            let y = (x(), x());
            (mu, y)
        })
        .collect();
    pts.par_iter()
        .map(|(mu, y)| {
            let res = whittaker_wstar((2.0 * y.0.sqrt(), 2.0 * y.1.sqrt()), &mu.scale(2.0), &cfg).and_then(|w| {
                let rhs = PI.powi(4) * cos_mu(mu) * (y.0 * y.1).sqrt() * w.value;
                Ok(rel(rhs, k_wl_sym(*y, mu, &pol)?.value))
            });
            Check::from_result(format!("K_wl = π⁴cos_mu √(y1y2) W* at y=({:.3e}, {:.3e}), {}", y.0, y.1, fmt_mu(mu)), 1e-8, res)
        })
        .collect()
}

fn barnes() -> Vec<Check> {
    let mut r = rng(15);
    let z = |r: &mut ChaCha8Rng| c(r.gen_range(0.05..1.0), r.gen_range(-1.0..1.0));
    let h = c(0.5, 0.0);
    let mut checks = vec![
        Check::from_result("first lemma at a=b=c=d=1/2".into(), 1e-8, barnes_first_check(h, h, h, h).map(|x| x.residual)),
        Check::from_result("second lemma at a=…=e=1/2".into(), 1e-8, barnes_second_check(h, h, h, h, h, c(2.5, 0.0)).map(|x| x.residual)),
    ];
    for i in 0..50 {
        let (a, b, cc, d) = (z(&mut r), z(&mut r), z(&mut r), z(&mut r));
        checks.push(Check::from_result(format!("first lemma draw {i}"), 1e-8, barnes_first_check(a, b, cc, d).map(|x| x.residual)));
    }
    for i in 0..50 {
        let (a, b, cc, d, e) = (z(&mut r), z(&mut r), z(&mut r), z(&mut r), z(&mut r));
        let res = barnes_second_check(a, b, cc, d, e, a + b + cc + d + e).map(|x| x.residual);
        checks.push(Check::from_result(format!("second lemma draw {i}"), 1e-8, res));
    }
    checks
}

/// Index tuples with entries in −3..=3, enumerated in a fixed order.
fn tuple(k: usize) -> (i64, i64, i64, i64) {
    let d = |j: usize| ((k / 7usize.pow(j as u32)) % 7) as i64 - 3;
    (d(0), d(1), d(2), d(3))
}

fn kloosterman() -> Vec<Check> {
    let max_diff = |pairs: Vec<Result<(C64, C64)>>| -> Result<f64> {
        let mut m = 0.0f64;
        for p in pairs {
            let (a, b) = p?;
            m = m.max((a - b).norm());
        }
        Ok(m)
    };
    let moduli: Vec<(u64, u64)> = (1..=30u64).flat_map(|a| (1..=30u64).map(move |b| (a, b))).collect();

    // Every modulus pair meets 8 index tuples; consecutive pairs advance
    // through all 7⁴ tuples, so each tuple is used at least twice.
    let big: Vec<Result<(C64, C64)>> = moduli
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, &(d1, d2))| {
            (0..8).map(move |j| {
                let (m1, m2, n1, n2) = tuple((8 * i + j) * 1201 % 2401);
                Ok((s_big(m1, m2, n1, n2, d1, d2)?, naive::s_big(m1, m2, n1, n2, d1, d2)?))
            })
        })
        .collect();
    let divisor_pairs: Vec<(u64, u64)> = moduli.iter().copied().filter(|(a, b)| b % a == 0).collect();
    let tilde: Vec<Result<(C64, C64)>> = divisor_pairs
        .par_iter()
        .flat_map_iter(|&(d1, d2)| {
            (0..343).map(move |k| {
                let (m1, n1, n2, _) = tuple(k);
                Ok((s_tilde(m1, n1, n2, d1, d2)?, naive::s_tilde(m1, n1, n2, d1, d2)?))
            })
        })
        .collect();
    // The gated wrappers against the gate written out by hand.
    let gates: Vec<Result<(C64, C64)>> = moduli
        .par_iter()
        .flat_map_iter(|&(c1, c2)| {
            [(1, 1, 1, 1), (1, 2, 2, 1), (2, 1, 1, 3), (-1, 3, 2, -2)].into_iter().flat_map(move |(m1, m2, n1, n2)| {
                let (m, n) = (CharIndex::new(m1, m2), CharIndex::new(n1, n2));
                let c = Modulus { c1, c2 };
                let zero = C64::new(0.0, 0.0);
                let w5 = || -> Result<(C64, C64)> {
                    let want =
                        if n1 * c2 as i64 == m2 * (c1 * c1) as i64 && c2 % c1 == 0 { naive::s_tilde(n1, m1, m2, c1, c2)? } else { zero };
                    Ok((s_weyl(WeylElement::W5, m, n, c)?, want))
                };
                let w4 = || -> Result<(C64, C64)> {
                    let want =
                        if n2 * c1 as i64 == m1 * (c2 * c2) as i64 && c1 % c2 == 0 { naive::s_tilde(-n2, m2, m1, c2, c1)? } else { zero };
                    Ok((s_weyl(WeylElement::W4, m, n, c)?, want))
                };
                let wl = || -> Result<(C64, C64)> { Ok((s_weyl(WeylElement::Wl, m, n, c)?, naive::s_big(n2, n1, m1, m2, c1, c2)?)) };
                [w5(), w4(), wl()]
            })
        })
        .collect();
    let one = c(1.0, 0.0);
    let trivial: Vec<Result<(C64, C64)>> = (0..2401)
        .flat_map(|k| {
            let (m1, m2, n1, n2) = tuple(k);
            [s_big(m1, m2, n1, n2, 1, 1).map(|v| (v, one)), s_tilde(m1, n1, n2, 1, 1).map(|v| (v, one))]
        })
        .collect();
    vec![
        Check::from_result(format!("S vs oracle, D1, D2 ≤ 30 ({} sums)", big.len()), 1e-12, max_diff(big)),
        Check::from_result(format!("S̃ vs oracle, D1 | D2 ≤ 30 ({} sums)", tilde.len()), 1e-12, max_diff(tilde)),
        Check::from_result(format!("S_w gates vs oracle ({} sums)", gates.len()), 1e-12, max_diff(gates)),
        // Exactly 1, so the tolerance is 0.
        Check::from_result("S(…; 1, 1) = S̃(…; 1, 1) = 1".into(), 0.0, max_diff(trivial)),
    ]
}

fn stade() -> Vec<Check> {
    let mut r = rng(17);
    let cfg = MbConfig::default();
    let mus: Vec<SpectralParams> = (0..3).map(|_| draw_mu(&mut r, 0.0, 1.0)).collect();
    mus.par_iter()
        .map(|mu| Check::from_result(format!("Stade at {}", fmt_mu(mu)), 1e-4, stade_check(mu, &cfg).map(|x| x.residual)))
        .collect()
}

fn iwasawa() -> Vec<Check> {
    let mut r = rng(18);
    let mut worst = Ok(0.0f64);
    for _ in 0..1000 {
        let x = UpperX::new(r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        let a = xy_star_closed(&x);
        match xy_star_numeric(&x) {
            Ok(b) => {
                let d = [a.xstar1 - b.xstar1, a.xstar2 - b.xstar2, a.ystar1 - b.ystar1, a.ystar2 - b.ystar2]
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()));
                worst = worst.map(|w| w.max(d));
            }
            Err(e) => {
                worst = Err(e);
                break;
            }
        }
    }
    vec![Check::from_result("x*, y* closed form vs QR on 1000 draws".into(), 1e-10, worst)]
}

fn transform_configs() -> Vec<(TestFunction, f64, f64)> {
    let g = |a: f64, b: f64, w: f64| TestFunction::gaussian(vec![SpectralParams::imaginary(a, b)], w).expect("valid test function");
    vec![(g(1.5, 0.5, 0.5), 0.01, 0.02), (g(0.8, -1.6, 0.6), -0.03, 0.01), (g(2.0, 1.0, 0.5), 0.02, -0.05)]
}

fn transforms() -> Vec<Check> {
    let cfg = TransformConfig::default();
    let mut checks = Vec::new();
    for (f, y1, y2) in transform_configs() {
        let c0 = f.centers()[0];
        let res = h_wl(&f, (y1, y2), WlForm::J, &cfg).and_then(|j| Ok(rel(j.value, h_wl(&f, (y1, y2), WlForm::K, &cfg)?.value)));
        checks.push(Check::from_result(
            format!("H_wl J-form vs K-form at y=({y1}, {y2}), center {}, width {}", fmt_mu(&c0), f.width()),
            1e-6,
            res,
        ));
    }
    for (f, y, _) in transform_configs() {
        let c0 = f.centers()[0];
        let res = h_w5(&f, y, W4Form::J, &cfg).and_then(|a| Ok(rel(a.value, h_w4(&f.reflected(), -y, W4Form::J, &cfg)?.value)));
        checks.push(Check::from_result(format!("H_w5(f; (−1, {y})) vs H_w4(f̃; ({}, −1)), center {}", -y, fmt_mu(&c0)), 1e-8, res));
    }
    checks
}

fn asymptotic() -> Vec<Check> {
    let cfg = MbConfig::default();
    let mut r = rng(20);
    (0..3)
        .map(|_| {
            let mu = draw_mu(&mut r, 0.0, 1.0);
            let res = whittaker_asymp_check((1e-3, 1e-3), &mu, &cfg).map(|x| x.residual);
            Check::from_result(format!("six-term power sum vs W* at y=(1e-3, 1e-3), {}", fmt_mu(&mu)), 1e-2, res)
        })
        .collect()
}

/// Test function and configuration of the determinism rerun.
pub fn determinism_setup() -> (TestFunction, GeometricConfig) {
    let f = TestFunction::gaussian(vec![SpectralParams::imaginary(1.5, 0.5)], 0.5).expect("valid test function");
    (f, GeometricConfig::new(1))
}

fn determinism() -> Vec<Check> {
    let (f, cfg) = determinism_setup();
    let one = CharIndex::new(1, 1);
    let run = || geometric_sum(WeylElement::Wl, &f, one, one, &cfg).map(|g| g.canonical_text());
    let res = run().and_then(|a| {
        let b = run()?;
        Ok(if a == b { 0.0 } else { 1.0 })
    });
    vec![Check::from_result("long-element geometric sum, Cmax = 1, two runs byte-identical".into(), 0.0, res)]
}
