//! Angular-momentum algebra: Wigner 3j symbols, unit spherical-tensor matrix
//! elements and squared dipole matrix elements.
//!
//! 3j symbols are evaluated with the Racah sum in exact rational arithmetic
//! and only rounded to `f64` at the very end.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::constants::{C, EPSILON0, HBAR};
use crate::species::{SpeciesData, SublevelRef};

#[derive(Debug, Error, PartialEq)]
pub enum AngularError {
    #[error("{0} is not a half-integer")]
    NotHalfInteger(f64),
    #[error("negative angular momentum j = {0}")]
    NegativeJ(HalfInt),
    #[error("projection m = {m} is not valid for j = {j}")]
    BadProjection { j: HalfInt, m: HalfInt },
    #[error("spherical component q = {0} outside {{-1, 0, +1}}")]
    BadComponent(i32),
    #[error("no dipole transition {upper} -> {lower} in the species data")]
    MissingTransition { upper: String, lower: String },
    #[error("{0} is not above {1}; dipole elements are indexed (upper, lower)")]
    NotUpper(String, String),
}

/// A half-integer stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_doubled(two_x: i32) -> Self {
        HalfInt(two_x)
    }

    pub fn from_f64(x: f64) -> Result<Self, AngularError> {
        let doubled = 2.0 * x;
        let rounded = doubled.round();
        if !x.is_finite() || (doubled - rounded).abs() > 1e-9 || rounded.abs() > i32::MAX as f64 {
            return Err(AngularError::NotHalfInteger(x));
        }
        Ok(HalfInt(rounded as i32))
    }

    pub const fn doubled(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

fn factorial(n: i32) -> BigInt {
    debug_assert!(n >= 0);
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Sign and exact square of a 3j symbol on doubled arguments. Arguments are
/// otherwise unchecked: any invalid (j, m) pair gives zero.
pub fn wigner3j_exact(tj: [i32; 3], tm: [i32; 3]) -> (i32, BigRational) {
    let zero = (0, BigRational::zero());
    let valid = |j: i32, m: i32| j >= 0 && m.abs() <= j && (j - m) % 2 == 0;
    if tm.iter().sum::<i32>() != 0 || !(0..3).all(|i| valid(tj[i], tm[i])) {
        return zero;
    }
    let [a, b, c] = tj;
    // triangle rule and integer j1+j2+j3
    if (a + b + c) % 2 != 0 || c > a + b || c < (a - b).abs() {
        return zero;
    }
    // every factorial argument below is (doubled quantity)/2 with even numerator
    let h = |x: i32| x / 2;
    let [ma, mb, mc] = tm;
    let delta = BigRational::new(
        factorial(h(a + b - c)) * factorial(h(a - b + c)) * factorial(h(-a + b + c)),
        factorial(h(a + b + c) + 1),
    );
    let proj = factorial(h(a + ma))
        * factorial(h(a - ma))
        * factorial(h(b + mb))
        * factorial(h(b - mb))
        * factorial(h(c + mc))
        * factorial(h(c - mc));

    let t_min = 0.max(h(b - c - ma)).max(h(a - c + mb));
    let t_max = h(a + b - c).min(h(a - ma)).min(h(b + mb));
    let mut sum = BigRational::zero();
    for t in t_min..=t_max {
        let den = factorial(t)
            * factorial(h(c - b + ma) + t)
            * factorial(h(c - a - mb) + t)
            * factorial(h(a + b - c) - t)
            * factorial(h(a - ma) - t)
            * factorial(h(b + mb) - t);
        let term = BigRational::new(BigInt::one(), den);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return zero;
    }
    // (-1)^(j1 - j2 - m3)
    let phase = if h(a - b - mc).rem_euclid(2) == 0 { 1 } else { -1 };
    let sign = if sum.is_negative() { -phase } else { phase };
    let sq = delta * BigRational::from_integer(proj) * &sum * &sum;
    (sign, sq)
}

fn check_jm(j: HalfInt, m: HalfInt) -> Result<(), AngularError> {
    if j.0 < 0 {
        return Err(AngularError::NegativeJ(j));
    }
    if m.0.abs() > j.0 || (j.0 - m.0) % 2 != 0 {
        return Err(AngularError::BadProjection { j, m });
    }
    Ok(())
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3).
///
/// Zero when m1 + m2 + m3 ≠ 0 or the triangle rule fails. Each (j, m) pair must
/// satisfy j ≥ 0, |m| ≤ j and j − m integer.
pub fn wigner3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<f64, AngularError> {
    check_jm(j1, m1)?;
    check_jm(j2, m2)?;
    check_jm(j3, m3)?;
    Ok(w3j(j1.0, j2.0, j3.0, m1.0, m2.0, m3.0))
}

/// [`wigner3j`] for floating-point arguments; rejects non-half-integers.
pub fn wigner3j_f64(j1: f64, j2: f64, j3: f64, m1: f64, m2: f64, m3: f64) -> Result<f64, AngularError> {
    let h = HalfInt::from_f64;
    wigner3j(h(j1)?, h(j2)?, h(j3)?, h(m1)?, h(m2)?, h(m3)?)
}

/// Unchecked 3j on doubled arguments; callers guarantee valid (j, m) pairs.
pub(crate) fn w3j(tj1: i32, tj2: i32, tj3: i32, tm1: i32, tm2: i32, tm3: i32) -> f64 {
    let (sign, sq) = wigner3j_exact([tj1, tj2, tj3], [tm1, tm2, tm3]);
    if sign == 0 {
        return 0.0;
    }
    let v = sq.to_f64().expect("3j magnitude is a small rational").sqrt();
    sign as f64 * v
}

/// Exact square of a 3j symbol as a rational, for identity checks.
pub fn wigner3j_squared_exact(tj: [i32; 3], tm: [i32; 3]) -> BigRational {
    wigner3j_exact(tj, tm).1
}

/// ⟨a|T¹_q|b⟩ = (−1)^(J_a−m_a) (−1)^(L_a+S+J_b+1) (J_a 1 J_b; −m_a q m_b), on doubled
/// quantum numbers (`two_s` = 2S etc.).
pub fn tensor_element_raw(
    l_a: u32,
    two_s: u32,
    two_ja: u32,
    two_ma: i32,
    q: i32,
    two_jb: u32,
    two_mb: i32,
) -> Result<f64, AngularError> {
    if !(-1..=1).contains(&q) {
        return Err(AngularError::BadComponent(q));
    }
    check_jm(HalfInt(two_ja as i32), HalfInt(two_ma))?;
    check_jm(HalfInt(two_jb as i32), HalfInt(two_mb))?;
    Ok(tensor_unchecked(l_a, two_s, two_ja, two_ma, q, two_jb, two_mb))
}

fn tensor_unchecked(l_a: u32, two_s: u32, two_ja: u32, two_ma: i32, q: i32, two_jb: u32, two_mb: i32) -> f64 {
    if two_ma != two_mb + 2 * q {
        return 0.0;
    }
    let three_j = w3j(two_ja as i32, 2, two_jb as i32, -two_ma, 2 * q, two_mb);
    if three_j == 0.0 {
        return 0.0;
    }
    // (J_a - m_a) and (L_a + S + J_b + 1) are integers
    let p1 = (two_ja as i32 - two_ma) / 2;
    let p2 = (2 * l_a as i32 + two_s as i32 + two_jb as i32 + 2) / 2;
    let sign = if (p1 + p2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * three_j
}

/// Dense per-species cache of ⟨a|T¹_q|b⟩ over every pair of sublevels.
#[derive(Debug)]
pub struct TensorTable {
    offsets: Vec<usize>,
    n: usize,
    values: Vec<f64>,
}

impl TensorTable {
    pub(crate) fn build(s: &SpeciesData) -> Self {
        let mut offsets = Vec::with_capacity(s.levels.len());
        let mut n = 0;
        for lv in &s.levels {
            offsets.push(n);
            n += lv.multiplicity();
        }
        let mut values = vec![0.0; n * n * 3];
        for (ia, la) in s.levels.iter().enumerate() {
            for (ib, lb) in s.levels.iter().enumerate() {
                if (la.two_j as i32 - lb.two_j as i32).abs() > 2 {
                    continue;
                }
                for a in s.sublevels_of(ia) {
                    for b in s.sublevels_of(ib) {
                        let q = (a.two_m - b.two_m) / 2;
                        if a.two_m - b.two_m != 2 * q || !(-1..=1).contains(&q) {
                            continue;
                        }
                        let v = tensor_unchecked(la.l, la.two_s, la.two_j, a.two_m, q, lb.two_j, b.two_m);
                        let fa = offsets[ia] + ((a.two_m + la.two_j as i32) / 2) as usize;
                        let fb = offsets[ib] + ((b.two_m + lb.two_j as i32) / 2) as usize;
                        values[(fa * 3 + (q + 1) as usize) * n + fb] = v;
                    }
                }
            }
        }
        TensorTable { offsets, n, values }
    }

    #[inline]
    pub(crate) fn get(&self, s: &SpeciesData, a: SublevelRef, q: i32, b: SublevelRef) -> f64 {
        let fa = self.offsets[a.level] + ((a.two_m + s.levels[a.level].two_j as i32) / 2) as usize;
        let fb = self.offsets[b.level] + ((b.two_m + s.levels[b.level].two_j as i32) / 2) as usize;
        self.values[(fa * 3 + (q + 1) as usize) * self.n + fb]
    }
}

/// ⟨a|T¹_q|b⟩ for two sublevels of a species (cached).
pub fn tensor_element(s: &SpeciesData, a: SublevelRef, q: i32, b: SublevelRef) -> Result<f64, AngularError> {
    if !(-1..=1).contains(&q) {
        return Err(AngularError::BadComponent(q));
    }
    Ok(s.tensor_table().get(s, a, q, b))
}

#[inline]
pub(crate) fn tensor(s: &SpeciesData, a: SublevelRef, q: i32, b: SublevelRef) -> f64 {
    s.tensor_table().get(s, a, q, b)
}

/// Σ_q ε_q ⟨a|T¹_q|b⟩.
#[inline]
pub(crate) fn tensor_dot(
    s: &SpeciesData,
    a: SublevelRef,
    eps: &[num_complex::Complex64; 3],
    b: SublevelRef,
) -> num_complex::Complex64 {
    let q = (a.two_m - b.two_m) / 2;
    if a.two_m - b.two_m != 2 * q || !(-1..=1).contains(&q) {
        return num_complex::Complex64::new(0.0, 0.0);
    }
    eps[(q + 1) as usize] * tensor(s, a, q, b)
}

/// |⟨k|μ_q|i⟩|² = (3πε₀ħc³/ω_ki³)·A_{J_kJ_i}·(2J_k+1)·(J_i 1 J_k; m_i q −m_k)², in (C·m)².
///
/// `k` must be the upper level of a listed dipole transition to the level of `i`;
/// missing data is an error rather than a silent zero.
pub fn dipole_moment_sq(s: &SpeciesData, k: SublevelRef, i: SublevelRef, q: i32) -> Result<f64, AngularError> {
    if !(-1..=1).contains(&q) {
        return Err(AngularError::BadComponent(q));
    }
    let (lk, li) = (&s.levels[k.level], &s.levels[i.level]);
    if lk.energy_cm <= li.energy_cm {
        return Err(AngularError::NotUpper(lk.label.clone(), li.label.clone()));
    }
    let a = s
        .einstein_a(k.level, i.level)
        .ok_or_else(|| AngularError::MissingTransition {
            upper: lk.label.clone(),
            lower: li.label.clone(),
        })?;
    if k.two_m != i.two_m + 2 * q {
        return Ok(0.0);
    }
    let omega = s.omega(k.level, i.level);
    // (J_i 1 J_k; m_i q -m_k)^2 equals the square of ⟨k|T_q|i⟩'s 3j by column exchange
    let t = tensor(s, k, q, i);
    Ok(3.0 * std::f64::consts::PI * EPSILON0 * HBAR * C.powi(3) / omega.powi(3) * a * (lk.two_j as f64 + 1.0) * t * t)
}
