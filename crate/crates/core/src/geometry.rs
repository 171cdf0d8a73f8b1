//! The 3×3 matrix layer: Iwasawa coordinates, the closed forms for x* and y*,
//! power functions, the Weyl action on y, and additive characters.
//!
//! An x-matrix is `[[1, x2, x3], [0, 1, x1], [0, 0, 1]]` and a y-matrix is
//! `diag(y1 y2, y1, 1)`.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{abs_pow, SpectralParams, WeylElement};

pub type Mat3 = [[f64; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct UpperX {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl UpperX {
    pub fn new(x1: f64, x2: f64, x3: f64) -> UpperX {
        UpperX { x1, x2, x3 }
    }

    pub fn matrix(&self) -> Mat3 {
        [[1.0, self.x2, self.x3], [0.0, 1.0, self.x1], [0.0, 0.0, 1.0]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagY {
    pub y1: f64,
    pub y2: f64,
}

impl DiagY {
    pub fn new(y1: f64, y2: f64) -> Result<DiagY> {
        if y1 == 0.0 || y2 == 0.0 || !y1.is_finite() || !y2.is_finite() {
            return Err(Error::Domain(format!("y = ({y1}, {y2}) needs y1 y2 != 0")));
        }
        Ok(DiagY { y1, y2 })
    }

    pub fn matrix(&self) -> Mat3 {
        [[self.y1 * self.y2, 0.0, 0.0], [0.0, self.y1, 0.0], [0.0, 0.0, 1.0]]
    }
}

/// g = r x y k with r > 0, y1, y2 > 0 and k orthogonal.
#[derive(Clone, Copy, Debug)]
pub struct Iwasawa {
    pub r: f64,
    pub x: UpperX,
    pub y: DiagY,
    pub k: Mat3,
}

impl Iwasawa {
    pub fn reconstruct(&self) -> Mat3 {
        let s = [[self.r, 0.0, 0.0], [0.0, self.r, 0.0], [0.0, 0.0, self.r]];
        matmul(&matmul(&matmul(&s, &self.x.matrix()), &self.y.matrix()), &self.k)
    }
}

pub fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    c
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn frobenius(a: &Mat3) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn to_na(a: &Mat3) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| a[i][j])
}

fn from_na(m: &Matrix3<f64>) -> Mat3 {
    let mut a = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = m[(i, j)];
        }
    }
    a
}

/// Iwasawa decomposition by QR of the row-reversed transpose.
///
/// With J the antidiagonal flip, (J g)ᵀ = Q R gives g = (J Rᵀ J)(J Qᵀ), an
/// upper-triangular factor times an orthogonal one.
pub fn iwasawa(g: &Mat3) -> Result<Iwasawa> {
    let gm = to_na(g);
    let det = gm.determinant();
    let scale = frobenius(g);
    if !det.is_finite() || scale == 0.0 || det.abs() <= 1e-14 * scale.powi(3) {
        return Err(Error::Singular);
    }
    let flip = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
    let qr = (flip * gm).transpose().qr();
    let mut t = flip * qr.r().transpose() * flip;
    let mut k = flip * qr.q().transpose();
    for i in 0..3 {
        if t[(i, i)] < 0.0 {
            // T D and D k with D = D⁻¹ a sign flip leave the product unchanged.
            for row in 0..3 {
                t[(row, i)] = -t[(row, i)];
            }
            for col in 0..3 {
                k[(i, col)] = -k[(i, col)];
            }
        }
    }
    let d = [t[(0, 0)], t[(1, 1)], t[(2, 2)]];
    Ok(Iwasawa {
        r: d[2],
        x: UpperX { x1: t[(1, 2)] / d[2], x2: t[(0, 1)] / d[1], x3: t[(0, 2)] / d[2] },
        y: DiagY { y1: d[1] / d[2], y2: d[0] / d[1] },
        k: from_na(&k),
    })
}

/// Rational u·diag·v factorization of a generic matrix, valid for
/// c ≠ 0 and ce − bf ≠ 0 (bottom rows `[d, e, f]`, `[a, b, c]`).
#[derive(Clone, Copy, Debug)]
pub struct UyvDecomposition {
    pub u: UpperX,
    pub diag: [f64; 3],
    /// Lower unipotent entries (v1 at (2,1), v2 at (3,2), v3 at (3,1)).
    pub v: [f64; 3],
}

impl UyvDecomposition {
    pub fn reconstruct(&self) -> Mat3 {
        let d = [[self.diag[0], 0.0, 0.0], [0.0, self.diag[1], 0.0], [0.0, 0.0, self.diag[2]]];
        let v = [[1.0, 0.0, 0.0], [self.v[0], 1.0, 0.0], [self.v[2], self.v[1], 1.0]];
        matmul(&matmul(&self.u.matrix(), &d), &v)
    }
}

pub fn g_decomp(s: &Mat3) -> Result<UyvDecomposition> {
    let [[_g, h, i], [d, e, f], [a, b, c]] = *s;
    let m = c * e - b * f;
    let scale = frobenius(s);
    if c.abs() <= 1e-14 * scale || m.abs() <= 1e-14 * scale * scale {
        return Err(Error::Geometry("c or ce - bf vanishes".into()));
    }
    let det = from_det(s);
    Ok(UyvDecomposition {
        u: UpperX { x1: f / c, x2: (c * h - b * i) / m, x3: i / c },
        diag: [det / m, m / c, c],
        v: [(c * d - a * f) / m, b / c, a / c],
    })
}

fn from_det(s: &Mat3) -> f64 {
    to_na(s).determinant()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XyStar {
    pub xstar1: f64,
    pub xstar2: f64,
    pub ystar1: f64,
    pub ystar2: f64,
}

/// x*, y* with x* y* ≡ w_l x modulo the scalars and orthogonal group.
pub fn xy_star_closed(x: &UpperX) -> XyStar {
    let UpperX { x1, x2, x3 } = *x;
    let a = 1.0 + x2 * x2 + x3 * x3;
    let t = x1 * x2 - x3;
    let b = 1.0 + x1 * x1 + t * t;
    XyStar { xstar1: -(x2 + x1 * x3) / a, xstar2: -(x1 + x2 * t) / b, ystar1: b.sqrt() / a, ystar2: a.sqrt() / b }
}

/// x*, y* through the numerical decomposition of w_l x.
pub fn xy_star_numeric(x: &UpperX) -> Result<XyStar> {
    let dec = iwasawa(&matmul(&WeylElement::Wl.matrix(), &x.matrix()))?;
    Ok(XyStar { xstar1: dec.x.x1, xstar2: dec.x.x2, ystar1: dec.y.y1, ystar2: dec.y.y2 })
}

/// p_μ(y) = |y1 y2|^{μ1} |y1|^{μ2}.
pub fn power_fn(mu: &SpectralParams, y: &DiagY) -> C64 {
    abs_pow(y.y1, -mu.mu3()) * abs_pow(y.y2, mu.mu1())
}

/// p_{ρ+μ}(y) = |y1|^{1−μ3} |y2|^{1+μ1}.
pub fn power_fn_normalized(mu: &SpectralParams, y: &DiagY) -> C64 {
    abs_pow(y.y1, 1.0 - mu.mu3()) * abs_pow(y.y2, 1.0 + mu.mu1())
}

/// p_μ of an arbitrary invertible matrix through its Iwasawa y-part.
pub fn power_fn_matrix(mu: &SpectralParams, g: &Mat3) -> Result<C64> {
    Ok(power_fn(mu, &iwasawa(g)?.y))
}

/// y^w = w y w⁻¹ read modulo ± and positive scalars.
pub fn weyl_act_y(y: &DiagY, w: WeylElement) -> DiagY {
    let DiagY { y1, y2 } = *y;
    let (a, b) = match w {
        WeylElement::I => (y1, y2),
        WeylElement::W2 => (y1 * y2, 1.0 / y2),
        WeylElement::W3 => (1.0 / y1, y1 * y2),
        WeylElement::W4 => (1.0 / (y1 * y2), y1),
        WeylElement::W5 => (y2, 1.0 / (y1 * y2)),
        WeylElement::Wl => (1.0 / y2, 1.0 / y1),
    };
    DiagY { y1: a, y2: b }
}

/// ψ_m(x) = e(m1 x1 + m2 x2).
pub fn psi_char(m: (i64, i64), x: &UpperX) -> C64 {
    let t = (m.0 as f64 * x.x1 + m.1 as f64 * x.x2).rem_euclid(1.0);
    C64::from_polar(1.0, 2.0 * PI * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
    }

    const ID: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    #[test]
    fn identity_and_upper_triangular() {
        let d = iwasawa(&ID).unwrap();
        assert!((d.r - 1.0).abs() < 1e-15 && close(&d.k, &ID, 1e-15));
        assert!(d.x.x1.abs() + d.x.x2.abs() + d.x.x3.abs() < 1e-15);
        assert!((d.y.y1 - 1.0).abs() < 1e-15 && (d.y.y2 - 1.0).abs() < 1e-15);
        let g = [[6.0, 2.0, -1.0], [0.0, 3.0, 4.0], [0.0, 0.0, 1.5]];
        let d = iwasawa(&g).unwrap();
        assert!(close(&d.k, &ID, 1e-14));
        assert!((d.r - 1.5).abs() < 1e-14);
        assert!((d.y.y1 - 2.0).abs() < 1e-14 && (d.y.y2 - 2.0).abs() < 1e-14);
        assert!((d.x.x1 - 4.0 / 1.5).abs() < 1e-14);
        assert!((d.x.x2 - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_rejected() {
        let g = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]];
        assert!(matches!(iwasawa(&g), Err(Error::Singular)));
    }

    #[test]
    fn random_reconstruction_and_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut g = [[0.0; 3]; 3];
            for row in g.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.gen_range(-3.0..3.0);
                }
            }
            let d = iwasawa(&g).unwrap();
            assert!(d.y.y1 > 0.0 && d.y.y2 > 0.0 && d.r > 0.0);
            let kkt = matmul(&d.k, &transpose(&d.k));
            assert!(close(&kkt, &ID, 1e-12));
            let rec = d.reconstruct();
            let err: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| rec[i][j] - g[i][j]));
            assert!(frobenius(&err) < 1e-11 * frobenius(&g));
        }
    }

    #[test]
    fn right_orthogonal_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let g: Mat3 = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
            let h: Mat3 = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
            let k0 = iwasawa(&h).unwrap().k;
            let a = iwasawa(&g).unwrap();
            let b = iwasawa(&matmul(&g, &k0)).unwrap();
            assert!((a.r - b.r).abs() < 1e-10 * a.r);
            for (p, q) in [(a.x.x1, b.x.x1), (a.x.x2, b.x.x2), (a.x.x3, b.x.x3), (a.y.y1, b.y.y1), (a.y.y2, b.y.y2)] {
                assert!((p - q).abs() < 1e-10 * (1.0 + p.abs()));
            }
        }
    }

    #[test]
    fn closed_forms_at_small_points() {
        let s = xy_star_closed(&UpperX::default());
        assert_eq!(s, XyStar { xstar1: 0.0, xstar2: 0.0, ystar1: 1.0, ystar2: 1.0 });
        let s = xy_star_closed(&UpperX::new(1.0, 0.0, 0.0));
        assert_eq!(s.xstar1, 0.0);
        assert!((s.xstar2 + 0.5).abs() < 1e-15);
        assert!((s.ystar1 - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.ystar2 - 0.5).abs() < 1e-15);
        let n = xy_star_numeric(&UpperX::new(1.0, 0.0, 0.0)).unwrap();
        assert!((n.ystar2 - 0.5).abs() < 1e-13);
    }

    #[test]
    fn closed_forms_match_decomposition_at_123() {
        let x = UpperX::new(1.0, 2.0, 3.0);
        let (a, b) = (xy_star_closed(&x), xy_star_numeric(&x).unwrap());
        for (p, q) in [(a.xstar1, b.xstar1), (a.xstar2, b.xstar2), (a.ystar1, b.ystar1), (a.ystar2, b.ystar2)] {
            assert!((p - q).abs() < 1e-11, "{p} {q}");
        }
        assert!((a.xstar1 + 5.0 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn g_decomp_agrees_with_iwasawa_y_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let s: Mat3 = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
            let dec = g_decomp(&s).unwrap();
            let rec = dec.reconstruct();
            assert!(close(&rec, &s, 1e-10 * frobenius(&s).max(1.0)));
        }
        let s = [[1.0, 2.0, 3.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];
        assert!(g_decomp(&s).is_err());
    }

    #[test]
    fn power_function_values() {
        let mu = SpectralParams::imaginary(0.3, 0.1);
        let one = DiagY::new(1.0, 1.0).unwrap();
        assert!((power_fn(&mu, &one) - 1.0).norm() < 1e-15);
        let y = DiagY::new(2.0, 3.0).unwrap();
        let zero = SpectralParams::real(0.0, 0.0);
        assert!((power_fn_normalized(&zero, &y) - 6.0).norm() < 1e-14);
        // sign lifts
        let ym = DiagY::new(-2.0, 3.0).unwrap();
        assert!((power_fn(&mu, &y) - power_fn(&mu, &ym)).norm() < 1e-15);
        // through the matrix, p_mu(r x y k) = p_mu(y)
        let g = matmul(&UpperX::new(0.4, -1.0, 2.0).matrix(), &y.matrix());
        assert!((power_fn_matrix(&mu, &g).unwrap() - power_fn(&mu, &y)).norm() < 1e-13);
    }

    #[test]
    fn weyl_action_on_mu_through_power_function() {
        let mu = SpectralParams::imaginary(0.3, 0.1);
        let y = DiagY::new(2.0, 3.0).unwrap();
        for w in WeylElement::ALL {
            let lhs = power_fn(&crate::spectral::weyl_act_mu(&mu, w), &y);
            let rhs = power_fn(&mu, &weyl_act_y(&y, w));
            assert!((lhs - rhs).norm() < 1e-12, "{w}");
        }
    }

    #[test]
    fn weyl_action_on_y_matches_conjugation() {
        let y = DiagY::new(2.0, 3.0).unwrap();
        for w in WeylElement::ALL {
            let m = w.matrix();
            let c = matmul(&matmul(&m, &y.matrix()), &transpose(&m));
            let (a0, a1, a2) = (c[0][0].abs(), c[1][1].abs(), c[2][2].abs());
            let yw = weyl_act_y(&y, w);
            assert!((yw.y1 - a1 / a2).abs() < 1e-14 && (yw.y2 - a0 / a1).abs() < 1e-14, "{w}");
        }
        let yl = weyl_act_y(&y, WeylElement::Wl);
        assert!((yl.y1 - 1.0 / 3.0).abs() < 1e-16 && (yl.y2 - 0.5).abs() < 1e-16);
        let back = weyl_act_y(&yl, WeylElement::Wl);
        assert!((back.y1 - 2.0).abs() < 1e-15 && (back.y2 - 3.0).abs() < 1e-15);
    }

    #[test]
    fn characters() {
        assert_eq!(psi_char((0, 0), &UpperX::new(0.3, 0.2, 5.0)), C64::new(1.0, 0.0));
        let v = psi_char((1, 1), &UpperX::new(0.5, 0.5, 7.0));
        assert_eq!(v, C64::new(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let x = UpperX::new(rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0), 0.0);
            let m = (rng.gen_range(-5..5), rng.gen_range(-5..5));
            assert!((psi_char(m, &x).norm() - 1.0).abs() < 1e-15);
        }
    }
}
