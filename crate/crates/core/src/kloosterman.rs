//! SL(3, Z) Kloosterman sums S̃ and S and their Weyl-element wrappers.
//!
//! Every summand is e(k / D) for an integer k and one common denominator D,
//! so the sums are built as a histogram of k mod D and only then weighted
//! by the roots of unity. The brute-force oracles in [`naive`] use the same
//! final step, which makes the two agree bit for bit.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::WeylElement;
use crate::sum::CompensatedSum;

/// Denominators above this stream into a compensated sum instead of a
/// residue histogram.
const HISTOGRAM_LIMIT: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Modulus {
    pub c1: u64,
    pub c2: u64,
}

impl Modulus {
    pub fn new(c1: u64, c2: u64) -> Result<Modulus> {
        if c1 == 0 || c2 == 0 {
            return Err(Error::Domain(format!("modulus ({c1}, {c2}) needs positive entries")));
        }
        Ok(Modulus { c1, c2 })
    }
}

/// Index m = (m1, m2) of the character ψ_m.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CharIndex {
    pub m1: i64,
    pub m2: i64,
}

impl CharIndex {
    pub fn new(m1: i64, m2: i64) -> CharIndex {
        CharIndex { m1, m2 }
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// (g, x, y) with a x + b y = g = gcd(a, b).
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Inverse of a modulo m (m ≥ 1); 0 when m = 1.
pub fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    if m == 1 {
        return Some(0);
    }
    let (g, x, _) = ext_gcd(a.rem_euclid(m), m);
    (g == 1).then(|| x.rem_euclid(m))
}

/// Some (Y, Z) with Y B + Z C ≡ 1 (mod D), given gcd(B, C, D) = 1.
fn solve_yz(b: i64, c: i64, d: i64) -> Option<(i64, i64)> {
    if d == 1 {
        return Some((0, 0));
    }
    let (g, x, _) = ext_gcd(b.rem_euclid(d), d);
    for z in 0..d {
        let r = (1 - z * c).rem_euclid(d);
        if r % g == 0 {
            let y = ((x as i128 * (r / g) as i128).rem_euclid((d / g) as i128)) as i64;
            return Some((y, z));
        }
    }
    None
}

/// Residue counts of the exponent numerators, or a streamed sum when the
/// denominator is too large for a table.
enum Accum {
    Counts(Vec<u64>),
    Stream(CompensatedSum),
}

struct Exponents {
    den: u64,
    acc: Accum,
}

impl Exponents {
    fn new(den: u64) -> Exponents {
        let acc = if den <= HISTOGRAM_LIMIT { Accum::Counts(vec![0; den as usize]) } else { Accum::Stream(CompensatedSum::new()) };
        Exponents { den, acc }
    }

    #[inline]
    fn push(&mut self, k: i128) {
        let r = k.rem_euclid(self.den as i128) as u64;
        match &mut self.acc {
            Accum::Counts(c) => c[r as usize] += 1,
            Accum::Stream(s) => s.add(root(r, self.den)),
        }
    }

    fn value(self) -> C64 {
        match self.acc {
            Accum::Counts(c) => {
                let mut s = CompensatedSum::new();
                for (k, &n) in c.iter().enumerate() {
                    if n > 0 {
                        s.add(root(k as u64, self.den) * n as f64);
                    }
                }
                s.value()
            }
            Accum::Stream(s) => s.value(),
        }
    }
}

/// e(k / d) with k already reduced to [0, d).
fn root(k: u64, d: u64) -> C64 {
    let t = 2.0 * PI * (k as f64 / d as f64);
    C64::new(t.cos(), t.sin())
}

fn check_pos(d1: u64, d2: u64) -> Result<()> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::Domain(format!("moduli ({d1}, {d2}) must be positive")));
    }
    Ok(())
}

/// S̃(m1, n1, n2; D1, D2) for D1 | D2: the sum over C1 mod D1, C2 mod D2 with
/// (C1, D1) = (C2, D2/D1) = 1 of e(n1 C̄1 C2 / D1 + n2 C̄2 / (D2/D1) + m1 C1 / D1).
pub fn s_tilde(m1: i64, n1: i64, n2: i64, d1: u64, d2: u64) -> Result<C64> {
    check_pos(d1, d2)?;
    if d2 % d1 != 0 {
        return Err(Error::Divisibility(d1, d2));
    }
    let (d1i, d2i) = (d1 as i64, d2 as i64);
    let q = d2i / d1i;
    // Common denominator D2: the three fractions become numerators over D2.
    let mut ex = Exponents::new(d2);
    let units2: Vec<(i64, i64)> = (0..d2i).filter_map(|c2| mod_inverse(c2, q).map(|inv| (c2, inv))).collect();
    for c1 in 0..d1i {
        let Some(c1bar) = mod_inverse(c1, d1i) else { continue };
        let base = m1 as i128 * c1 as i128 * q as i128;
        let k1 = n1 as i128 * c1bar as i128 * q as i128;
        for &(c2, c2bar) in &units2 {
            ex.push(base + k1 * c2 as i128 + n2 as i128 * c2bar as i128 * d1i as i128);
        }
    }
    Ok(ex.value())
}

/// S(m1, m2, n1, n2; D1, D2): the sum over B1, C1 mod D1 and B2, C2 mod D2
/// with D1C2 + B1B2 + D2C1 ≡ 0 (mod D1D2) and (B1, C1, D1) = (B2, C2, D2) = 1
/// of e((m1B1 + n1(Y1D2 − Z1B2))/D1 + (m2B2 + n2(Y2D1 − Z2B1))/D2), where
/// Y_iB_i + Z_iC_i ≡ 1 (mod D_i).
///
/// For fixed (B1, C1, B2) the congruence forces D1 | B1B2 + D2C1 and then
/// fixes C2 mod D2, so only three loops run.
pub fn s_big(m1: i64, m2: i64, n1: i64, n2: i64, d1: u64, d2: u64) -> Result<C64> {
    check_pos(d1, d2)?;
    let (d1i, d2i) = (d1 as i64, d2 as i64);
    let mut ex = Exponents::new(d1 * d2);
    for b1 in 0..d1i {
        for c1 in 0..d1i {
            if gcd(gcd(b1, c1), d1i) != 1 {
                continue;
            }
            let (y1, z1) = solve_yz(b1, c1, d1i).expect("gcd(B1, C1, D1) = 1");
            for b2 in 0..d2i {
                let t = b1 as i128 * b2 as i128 + d2i as i128 * c1 as i128;
                if t % d1i as i128 != 0 {
                    continue;
                }
                let c2 = ((-t / d1i as i128).rem_euclid(d2i as i128)) as i64;
                if gcd(gcd(b2, c2), d2i) != 1 {
                    continue;
                }
                let (y2, z2) = solve_yz(b2, c2, d2i).expect("gcd(B2, C2, D2) = 1");
                ex.push(big_numerator((m1, m2, n1, n2), (d1i, d2i), (b1, b2), (y1, z1), (y2, z2)));
            }
        }
    }
    Ok(ex.value())
}

/// Numerator over D1D2 of one summand of S.
fn big_numerator(mn: (i64, i64, i64, i64), d: (i64, i64), b: (i64, i64), yz1: (i64, i64), yz2: (i64, i64)) -> i128 {
    let (m1, m2, n1, n2) = (mn.0 as i128, mn.1 as i128, mn.2 as i128, mn.3 as i128);
    let (d1, d2) = (d.0 as i128, d.1 as i128);
    let (b1, b2) = (b.0 as i128, b.1 as i128);
    let (y1, z1) = (yz1.0 as i128, yz1.1 as i128);
    let (y2, z2) = (yz2.0 as i128, yz2.1 as i128);
    (m1 * b1 + n1 * (y1 * d2 - z1 * b2)) * d2 + (m2 * b2 + n2 * (y2 * d1 - z2 * b1)) * d1
}

/// S_w(ψ_m, ψ_n; c) for w ∈ {w4, w5, wl}:
/// S_wl = S(n2, n1, m1, m2; c1, c2),
/// S_w5 = δ(n1c2 = m2c1², c1 | c2) S̃(n1, m1, m2; c1, c2),
/// S_w4 = δ(n2c1 = m1c2², c2 | c1) S̃(−n2, m2, m1; c2, c1).
pub fn s_weyl(w: WeylElement, m: CharIndex, n: CharIndex, c: Modulus) -> Result<C64> {
    let (c1, c2) = (c.c1 as i128, c.c2 as i128);
    let zero = C64::new(0.0, 0.0);
    match w {
        WeylElement::Wl => s_big(n.m2, n.m1, m.m1, m.m2, c.c1, c.c2),
        WeylElement::W5 => {
            if n.m1 as i128 * c2 == m.m2 as i128 * c1 * c1 && c.c2 % c.c1 == 0 {
                s_tilde(n.m1, m.m1, m.m2, c.c1, c.c2)
            } else {
                Ok(zero)
            }
        }
        WeylElement::W4 => {
            if n.m2 as i128 * c1 == m.m1 as i128 * c2 * c2 && c.c1 % c.c2 == 0 {
                s_tilde(-n.m2, m.m2, m.m1, c.c2, c.c1)
            } else {
                Ok(zero)
            }
        }
        other => Err(Error::UnsupportedWeyl(other.label().to_string())),
    }
}

/// Brute-force oracles: every loop runs over the full residue ranges and
/// every filter and inverse is found by search.
pub mod naive {
    use super::*;

    fn inverse_by_search(a: i64, m: i64) -> Option<i64> {
        (0..m).find(|&x| (a * x - 1).rem_euclid(m) == 0)
    }

    pub fn s_tilde(m1: i64, n1: i64, n2: i64, d1: u64, d2: u64) -> Result<C64> {
        check_pos(d1, d2)?;
        if d2 % d1 != 0 {
            return Err(Error::Divisibility(d1, d2));
        }
        let (d1, d2) = (d1 as i64, d2 as i64);
        let q = d2 / d1;
        let mut ex = Exponents::new(d2 as u64);
        for c1 in 0..d1 {
            for c2 in 0..d2 {
                if gcd(c1, d1) != 1 || gcd(c2, q) != 1 {
                    continue;
                }
                let c1bar = inverse_by_search(c1, d1).unwrap();
                let c2bar = if q == 1 { 0 } else { inverse_by_search(c2, q).unwrap() };
                let k = n1 as i128 * (c1bar * c2) as i128 * q as i128 + (n2 * c2bar) as i128 * d1 as i128 + (m1 * c1) as i128 * q as i128;
                ex.push(k);
            }
        }
        Ok(ex.value())
    }

    fn yz_by_search(b: i64, c: i64, d: i64) -> (i64, i64) {
        for y in 0..d {
            for z in 0..d {
                if (y * b + z * c - 1).rem_euclid(d) == 0 {
                    return (y, z);
                }
            }
        }
        (0, 0)
    }

    pub fn s_big(m1: i64, m2: i64, n1: i64, n2: i64, d1: u64, d2: u64) -> Result<C64> {
        check_pos(d1, d2)?;
        let (d1, d2) = (d1 as i64, d2 as i64);
        let mut ex = Exponents::new((d1 * d2) as u64);
        for b1 in 0..d1 {
            for c1 in 0..d1 {
                for b2 in 0..d2 {
                    for c2 in 0..d2 {
                        if (d1 * c2 + b1 * b2 + d2 * c1).rem_euclid(d1 * d2) != 0 {
                            continue;
                        }
                        if gcd(gcd(b1, c1), d1) != 1 || gcd(gcd(b2, c2), d2) != 1 {
                            continue;
                        }
                        let yz1 = yz_by_search(b1, c1, d1);
                        let yz2 = yz_by_search(b2, c2, d2);
                        ex.push(big_numerator((m1, m2, n1, n2), (d1, d2), (b1, b2), yz1, yz2));
                    }
                }
            }
        }
        Ok(ex.value())
    }

    /// Σ_{B mod D, (B, D) = 1} e((m B + n B̄)/D).
    pub fn classical(m: i64, n: i64, d: u64) -> C64 {
        let d = d as i64;
        let mut ex = Exponents::new(d as u64);
        for b in 0..d {
            if let Some(bbar) = inverse_by_search(b, d).or(if d == 1 { Some(0) } else { None }) {
                if gcd(b, d) == 1 {
                    ex.push((m * b + n * bbar) as i128);
                }
            }
        }
        ex.value()
    }

    /// Every (Y, Z) mod D with Y B + Z C ≡ 1 (mod D).
    pub fn all_yz(b: i64, c: i64, d: i64) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for y in 0..d {
            for z in 0..d {
                if (y * b + z * c - 1).rem_euclid(d) == 0 {
                    out.push((y, z));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trivial_moduli() {
        for (m1, n1, n2) in [(0, 0, 0), (3, -2, 5)] {
            assert_eq!(s_tilde(m1, n1, n2, 1, 1).unwrap(), C64::new(1.0, 0.0));
        }
        assert_eq!(s_big(1, 2, 3, 4, 1, 1).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(
            s_weyl(WeylElement::Wl, CharIndex::new(1, 1), CharIndex::new(1, 1), Modulus::new(1, 1).unwrap()).unwrap(),
            C64::new(1.0, 0.0)
        );
    }

    #[test]
    fn divisibility() {
        assert_eq!(s_tilde(1, 1, 1, 2, 3), Err(Error::Divisibility(2, 3)));
    }

    #[test]
    fn small_cases_match_oracle() {
        assert_eq!(s_tilde(1, 1, 1, 2, 4).unwrap(), naive::s_tilde(1, 1, 1, 2, 4).unwrap());
        assert_eq!(s_big(1, 1, 1, 1, 2, 3).unwrap(), naive::s_big(1, 1, 1, 1, 2, 3).unwrap());
        for p in [2u64, 3, 5, 7, 11] {
            assert_eq!(s_tilde(0, 0, 0, p, p).unwrap(), naive::s_tilde(0, 0, 0, p, p).unwrap());
        }
    }

    #[test]
    fn reduces_to_classical_kloosterman() {
        for d in 1..=50u64 {
            for (m, n) in [(1, 1), (2, -3), (0, 5)] {
                let s = s_big(m, 7, n, -4, d, 1).unwrap();
                let k = naive::classical(m, n, d);
                assert!((s - k).norm() < 1e-10, "D1={d}: {s} vs {k}");
            }
        }
    }

    #[test]
    fn weyl_gates() {
        let m = CharIndex::new(1, 1);
        let z = C64::new(0.0, 0.0);
        assert_eq!(s_weyl(WeylElement::W5, m, m, Modulus::new(2, 3).unwrap()).unwrap(), z);
        let (m, n) = (CharIndex::new(2, 1), CharIndex::new(1, 8));
        assert_eq!(s_weyl(WeylElement::W4, m, n, Modulus::new(4, 2).unwrap()).unwrap(), z);
        assert_eq!(s_weyl(WeylElement::W4, m, n, Modulus::new(2, 1).unwrap()).unwrap(), z);
        for w in [WeylElement::I, WeylElement::W2, WeylElement::W3] {
            assert!(matches!(s_weyl(w, m, n, Modulus::new(1, 1).unwrap()), Err(Error::UnsupportedWeyl(_))));
        }
    }

    #[test]
    fn passing_gates_match_oracle() {
        let mut found = (0, 0);
        for c1 in 1..=12u64 {
            for c2 in 1..=12u64 {
                for m1 in -3..=3i64 {
                    for m2 in -3..=3i64 {
                        for n1 in -3..=3i64 {
                            for n2 in -3..=3i64 {
                                let (m, n, c) = (CharIndex::new(m1, m2), CharIndex::new(n1, n2), Modulus::new(c1, c2).unwrap());
                                if n2 as i128 * c1 as i128 == m1 as i128 * (c2 * c2) as i128 && c1 % c2 == 0 && c2 > 1 {
                                    let v = s_weyl(WeylElement::W4, m, n, c).unwrap();
                                    assert_eq!(v, naive::s_tilde(-n2, m2, m1, c2, c1).unwrap());
                                    found.0 += 1;
                                }
                                if n1 as i128 * c2 as i128 == m2 as i128 * (c1 * c1) as i128 && c2 % c1 == 0 && c1 > 1 {
                                    let v = s_weyl(WeylElement::W5, m, n, c).unwrap();
                                    assert_eq!(v, naive::s_tilde(n1, m1, m2, c1, c2).unwrap());
                                    found.1 += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        assert!(found.0 > 0 && found.1 > 0);
    }

    #[test]
    fn conjugation() {
        for d1 in 1..=20u64 {
            for d2 in [1u64, 2, 3, 6, 7, 12, 20] {
                let a = s_big(1, -2, 3, 1, d1, d2).unwrap();
                let b = s_big(-1, 2, -3, -1, d1, d2).unwrap();
                assert!((a.conj() - b).norm() < 1e-9, "({d1}, {d2})");
            }
        }
    }

    #[test]
    fn trivial_bound() {
        for d1 in 1..=12u64 {
            for k in 1..=4u64 {
                let d2 = d1 * k;
                let s = s_tilde(2, -1, 3, d1, d2).unwrap();
                assert!(s.norm() <= (d1 * d2) as f64 + 1e-9);
            }
        }
    }

    #[test]
    fn oracle_sweep_all_moduli() {
        for d1 in 1..=30u64 {
            for d2 in 1..=30u64 {
                for (m1, m2, n1, n2) in [(1, 1, 1, 1), (-3, 2, 0, 3), (2, -1, -3, 1)] {
                    assert_eq!(s_big(m1, m2, n1, n2, d1, d2).unwrap(), naive::s_big(m1, m2, n1, n2, d1, d2).unwrap());
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn summand_independent_of_congruence_solution(
            d1 in 1i64..=12, d2 in 1i64..=12, pick in 0usize..10_000,
            m1 in -3i64..=3, m2 in -3i64..=3, n1 in -3i64..=3, n2 in -3i64..=3,
        ) {
            let mut admissible = Vec::new();
            for b1 in 0..d1 {
                for c1 in 0..d1 {
                    for b2 in 0..d2 {
                        let t = b1 * b2 + d2 * c1;
                        if t % d1 != 0 {
                            continue;
                        }
                        let c2 = (-t / d1).rem_euclid(d2);
                        if gcd(gcd(b1, c1), d1) == 1 && gcd(gcd(b2, c2), d2) == 1 {
                            admissible.push((b1, c1, b2, c2));
                        }
                    }
                }
            }
            let (b1, c1, b2, c2) = admissible[pick % admissible.len()];
            let den = (d1 * d2) as i128;
            let mut seen = None;
            for yz1 in naive::all_yz(b1, c1, d1) {
                for yz2 in naive::all_yz(b2, c2, d2) {
                    let k = big_numerator((m1, m2, n1, n2), (d1, d2), (b1, b2), yz1, yz2).rem_euclid(den);
                    prop_assert_eq!(*seen.get_or_insert(k), k);
                }
            }
        }

        #[test]
        fn optimized_equals_oracle(d1 in 1u64..=30, d2 in 1u64..=30, m1 in -3i64..=3, m2 in -3i64..=3, n1 in -3i64..=3, n2 in -3i64..=3) {
            prop_assert_eq!(s_big(m1, m2, n1, n2, d1, d2).unwrap(), naive::s_big(m1, m2, n1, n2, d1, d2).unwrap());
            let d2t = d1 * (1 + d2 % 4);
            prop_assert_eq!(s_tilde(m1, n1, n2, d1, d2t).unwrap(), naive::s_tilde(m1, n1, n2, d1, d2t).unwrap());
        }
    }
}
