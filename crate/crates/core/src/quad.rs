//! Real-line quadrature shared by the contour engine and the verification checks:
//! cached Gauss-Legendre rules and a globally adaptive Gauss-Kronrod integrator.

use num_complex::Complex64;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_GL_ORDER: usize = 128;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn compute_gauss_legendre(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (p, pm1) = if n == 1 { (x, 1.0) } else { (p1, p0) };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussLegendre { nodes, weights }
}

/// Gauss-Legendre rule of order `n` (1..=128), computed once and cached.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<OnceLock<GaussLegendre>>> = OnceLock::new();
    assert!((1..=MAX_GL_ORDER).contains(&n), "Gauss-Legendre order out of range");
    let table = RULES.get_or_init(|| (0..=MAX_GL_ORDER).map(|_| OnceLock::new()).collect());
    table[n].get_or_init(|| compute_gauss_legendre(n))
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).norm())
}

struct Interval {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Interval {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Interval {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive 7/15-point Gauss-Kronrod integration of a complex-valued
/// function over a finite interval.
pub fn adaptive<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<(Complex64, f64)> {
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Interval { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    let mut count = 1;
    loop {
        if total_err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok((total, total_err));
        }
        if count >= max_intervals {
            return Err(Error::Convergence(format!("adaptive quadrature on [{a}, {b}] stalled at error {total_err:e}")));
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&f, worst.a, m);
        let (v2, e2) = gk15(&f, m, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Interval { a: worst.a, b: m, value: v1, err: e1 });
        heap.push(Interval { a: m, b: worst.b, value: v2, err: e2 });
        count += 1;
        // Re-sum periodically so the running totals do not drift.
        if count % 64 == 0 {
            total = heap.iter().map(|i| i.value).sum();
            total_err = heap.iter().map(|i| i.err).sum();
        }
    }
}

/// Adaptive integration over [a, ∞) through the map x = a + t/(1 − t).
pub fn adaptive_semi_infinite<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<(Complex64, f64)> {
    adaptive(
        |t| {
            let u = 1.0 - t;
            f(a + t / u) / (u * u)
        },
        0.0,
        1.0,
        rel_tol,
        abs_tol,
        max_intervals,
    )
}
