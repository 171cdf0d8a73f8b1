//! One entry point over the series and Mellin-Barnes evaluators.

use std::fmt;

use crate::error::{Error, Result};
use crate::mb::{k_w4_mb, k_wl_mb, MbConfig, MbVariant};
use crate::series::{j_w4, j_wl, k_w4_sym, k_wl_signed, k_wl_sym, KernelResult, SeriesPolicy, SignCase};
use crate::spectral::SpectralParams;

const FOUR_PI2: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Jwl,
    Jw4,
    Kwl,
    KwlSigned,
    Kw4,
}

impl KernelKind {
    pub const ALL: [KernelKind; 5] = [KernelKind::Jwl, KernelKind::Jw4, KernelKind::Kwl, KernelKind::KwlSigned, KernelKind::Kw4];

    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Jwl => "jwl",
            KernelKind::Jw4 => "jw4",
            KernelKind::Kwl => "kwl",
            KernelKind::KwlSigned => "kwl-signed",
            KernelKind::Kw4 => "kw4",
        }
    }

    pub fn parse(s: &str) -> Option<KernelKind> {
        KernelKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// True for the kinds that take a single coordinate y1.
    pub fn is_w4(&self) -> bool {
        matches!(self, KernelKind::Jw4 | KernelKind::Kw4)
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Series,
    Mb,
    Auto,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::Series => "series",
            Route::Mb => "mb",
            Route::Auto => "auto",
        }
    }

    pub fn parse(s: &str) -> Option<Route> {
        [Route::Series, Route::Mb, Route::Auto].into_iter().find(|r| r.name() == s)
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Evaluates `kind` at `y`; the w4 kinds read only `y.0`.
///
/// `Auto` takes the Whittaker identity for K_{wl} at (+,+), the series
/// inside the series domain, and Mellin-Barnes outside it. The unsymmetrized
/// J kernels only have a series.
pub fn evaluate(
    kind: KernelKind,
    route: Route,
    y: (f64, f64),
    mu: &SpectralParams,
    policy: &SeriesPolicy,
    mb: &MbConfig,
) -> Result<KernelResult> {
    let inside = |t: f64| FOUR_PI2 * t.abs() <= policy.series_domain_bound;
    let route = match route {
        Route::Auto => match kind {
            KernelKind::Jwl | KernelKind::Jw4 => Route::Series,
            KernelKind::Kwl if SignCase::of(y) == SignCase::PlusPlus => Route::Mb,
            KernelKind::Kw4 if !inside(y.0) => Route::Mb,
            KernelKind::Kw4 => Route::Series,
            _ if inside(y.0) && inside(y.1) => Route::Series,
            _ => Route::Mb,
        },
        r => r,
    };
    match (kind, route) {
        (KernelKind::Jwl, Route::Series) => j_wl(y, mu, policy),
        (KernelKind::Jw4, Route::Series) => j_w4(y.0, mu, policy),
        (KernelKind::Kwl, Route::Series) => k_wl_sym(y, mu, policy),
        (KernelKind::KwlSigned, Route::Series) => k_wl_signed(y, mu, SignCase::of(y), policy),
        (KernelKind::Kw4, Route::Series) => k_w4_sym(y.0, mu, policy),
        (KernelKind::Kwl, Route::Mb) => k_wl_mb(y, mu, MbVariant::Auto, mb),
        (KernelKind::KwlSigned, Route::Mb) => {
            if SignCase::of(y) == SignCase::PlusPlus {
                return Err(Error::SignMismatch("the ++ case has no two-term kernel; use kwl".into()));
            }
            k_wl_mb(y, mu, MbVariant::Auto, mb)
        }
        (KernelKind::Kw4, Route::Mb) => k_w4_mb(y.0, mu, mb),
        (k, r) => Err(Error::Domain(format!("kernel {k} has no {r} representation"))),
    }
}
