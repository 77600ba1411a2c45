//! Exact p-adic rationals, vectors, balls and spheres.
//!
//! A [`PadicRational`] stores `n / (u * p^K)` with `u` a positive integer
//! prime to `p`. Lattice points only ever need `u = 1`; the unit
//! denominator keeps ordinary rationals such as `5/6` representable so
//! their fractional parts can be taken exactly.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

/// p-adic valuation of a nonzero integer.
pub fn valuation_int(n: &BigInt, p: u64) -> Option<u32> {
    if n.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        m = q;
        v += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicRational {
    p: u64,
    num: BigInt,
    unit: BigInt,
    scale: u32,
}

impl PadicRational {
    /// `n * p^{-k}`.
    pub fn new(p: u64, n: impl Into<BigInt>, k: u32) -> Result<Self> {
        check_prime(p)?;
        Ok(Self::reduced(p, n.into(), BigInt::one(), k))
    }

    pub fn from_integer(p: u64, n: impl Into<BigInt>) -> Result<Self> {
        Self::new(p, n, 0)
    }

    pub fn zero(p: u64) -> Result<Self> {
        Self::new(p, 0, 0)
    }

    /// The rational `num / den`, `den != 0`.
    pub fn from_ratio(p: u64, num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self> {
        check_prime(p)?;
        let mut num = num.into();
        let mut den = den.into();
        if den.is_zero() {
            return Err(Error::Invalid("zero denominator".into()));
        }
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        let pb = BigInt::from(p);
        let mut k = 0u32;
        loop {
            let (q, r) = den.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            den = q;
            k += 1;
        }
        Ok(Self::reduced(p, num, den, k))
    }

    fn reduced(p: u64, mut num: BigInt, mut unit: BigInt, mut scale: u32) -> Self {
        if num.is_zero() {
            return Self { p, num, unit: BigInt::one(), scale: 0 };
        }
        let pb = BigInt::from(p);
        while scale > 0 {
            let (q, r) = num.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            num = q;
            scale -= 1;
        }
        let g = num.gcd(&unit);
        if !g.is_one() {
            num /= &g;
            unit /= &g;
        }
        Self { p, num, unit, scale }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Numerator over the p-power scale, when the unit denominator is 1.
    pub fn scaled_numerator(&self) -> Option<(&BigInt, u32)> {
        self.unit.is_one().then_some((&self.num, self.scale))
    }

    /// `ord(x)`, `None` for zero.
    pub fn ord(&self) -> Option<i64> {
        valuation_int(&self.num, self.p).map(|v| v as i64 - self.scale as i64)
    }

    /// `|x|_p = p^{-ord(x)}`.
    pub fn norm(&self) -> f64 {
        match self.ord() {
            None => 0.0,
            Some(o) => (self.p as f64).powi(-(o as i32)),
        }
    }

    /// `{x}_p` as an exact rational in `[0, 1)` whose denominator is a power of `p`.
    pub fn fractional_part(&self) -> BigRational {
        if self.num.is_zero() || self.scale == 0 {
            return BigRational::zero();
        }
        let modulus = BigInt::from(self.p).pow(self.scale);
        let inv = mod_inverse(&self.unit, &modulus);
        let a = (&self.num * inv).mod_floor(&modulus);
        BigRational::new(a, modulus)
    }

    /// `chi_p(x) = exp(2 pi i {x}_p)`.
    pub fn character(&self) -> Complex64 {
        let r = self.fractional_part();
        let (a, m) = (r.numer(), r.denom());
        let turn = a.to_f64().unwrap_or(0.0) / m.to_f64().unwrap_or(1.0);
        let phase = std::f64::consts::TAU * turn;
        Complex64::new(phase.cos(), phase.sin())
    }

    pub fn to_f64(&self) -> f64 {
        let den = &self.unit * BigInt::from(self.p).pow(self.scale);
        BigRational::new(self.num.clone(), den).to_f64().unwrap_or(f64::NAN)
    }

    fn combine(&self, other: &Self, f: impl Fn(BigInt, BigInt) -> BigInt) -> Self {
        assert_eq!(self.p, other.p, "prime mismatch");
        let k = self.scale.max(other.scale);
        let pb = BigInt::from(self.p);
        let a = &self.num * pb.pow(k - self.scale) * &other.unit;
        let b = &other.num * pb.pow(k - other.scale) * &self.unit;
        Self::reduced(self.p, f(a, b), &self.unit * &other.unit, k)
    }
}

fn mod_inverse(u: &BigInt, m: &BigInt) -> BigInt {
    let e = u.mod_floor(m).extended_gcd(m);
    e.x.mod_floor(m)
}

impl fmt::Display for PadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let den = &self.unit * BigInt::from(self.p).pow(self.scale);
        if den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, den)
        }
    }
}

impl Add for &PadicRational {
    type Output = PadicRational;
    fn add(self, rhs: Self) -> PadicRational {
        self.combine(rhs, |a, b| a + b)
    }
}

impl Sub for &PadicRational {
    type Output = PadicRational;
    fn sub(self, rhs: Self) -> PadicRational {
        self.combine(rhs, |a, b| a - b)
    }
}

impl Mul for &PadicRational {
    type Output = PadicRational;
    fn mul(self, rhs: Self) -> PadicRational {
        assert_eq!(self.p, rhs.p, "prime mismatch");
        PadicRational::reduced(self.p, &self.num * &rhs.num, &self.unit * &rhs.unit, self.scale + rhs.scale)
    }
}

impl Neg for &PadicRational {
    type Output = PadicRational;
    fn neg(self) -> PadicRational {
        PadicRational { num: -&self.num, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicVector {
    p: u64,
    coords: Vec<PadicRational>,
}

impl PadicVector {
    pub fn new(p: u64, coords: Vec<PadicRational>) -> Result<Self> {
        check_prime(p)?;
        if let Some(c) = coords.iter().find(|c| c.p != p) {
            return Err(Error::PrimeMismatch(p, c.p));
        }
        Ok(Self { p, coords })
    }

    /// Coordinates `n_i * p^{-k}`.
    pub fn from_scaled(p: u64, numerators: &[i64], k: u32) -> Result<Self> {
        let coords = numerators.iter().map(|&n| PadicRational::new(p, n, k)).collect::<Result<Vec<_>>>()?;
        Self::new(p, coords)
    }

    pub fn zero(p: u64, dim: usize) -> Result<Self> {
        Self::from_scaled(p, &vec![0; dim], 0)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[PadicRational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(PadicRational::is_zero)
    }

    /// `min_i ord(x_i)`, `None` for the zero vector.
    pub fn ord(&self) -> Option<i64> {
        self.coords.iter().filter_map(PadicRational::ord).min()
    }

    /// Sup norm `max_i |x_i|_p`.
    pub fn norm(&self) -> f64 {
        match self.ord() {
            None => 0.0,
            Some(o) => (self.p as f64).powi(-(o as i32)),
        }
    }

    /// Bilinear pairing `sum_i x_i y_i`.
    pub fn dot(&self, other: &Self) -> PadicRational {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let mut acc = PadicRational::reduced(self.p, BigInt::zero(), BigInt::one(), 0);
        for (a, b) in self.coords.iter().zip(&other.coords) {
            acc = &acc + &(a * b);
        }
        acc
    }

    pub fn scale(&self, lambda: &PadicRational) -> Self {
        Self { p: self.p, coords: self.coords.iter().map(|c| c * lambda).collect() }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&PadicRational, &PadicRational) -> PadicRational) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Self { p: self.p, coords: self.coords.iter().zip(&other.coords).map(|(a, b)| f(a, b)).collect() }
    }
}

impl Add for &PadicVector {
    type Output = PadicVector;
    fn add(self, rhs: Self) -> PadicVector {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &PadicVector {
    type Output = PadicVector;
    fn sub(self, rhs: Self) -> PadicVector {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &PadicVector {
    type Output = PadicVector;
    fn neg(self) -> PadicVector {
        PadicVector { p: self.p, coords: self.coords.iter().map(|c| -c).collect() }
    }
}

/// Compare two norms exactly via their exponents; zero is smallest.
pub fn cmp_norm(a: &PadicVector, b: &PadicVector) -> Ordering {
    match (a.ord(), b.ord()) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => y.cmp(&x),
    }
}

/// Haar volume of `B_r^N`, normalized by `vol(Z_p^N) = 1`.
pub fn ball_volume(p: u64, n: usize, r: i64) -> f64 {
    (p as f64).powf((r * n as i64) as f64)
}

/// Haar volume of `S_r^N`.
pub fn sphere_volume(p: u64, n: usize, r: i64) -> f64 {
    ball_volume(p, n, r) * (1.0 - (p as f64).powi(-(n as i32)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Ball,
    Sphere,
}

/// `B_r^N(a)` or `S_r^N(a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallSpec {
    pub center: PadicVector,
    pub radius: i64,
    pub region: Region,
}

impl BallSpec {
    pub fn volume(&self) -> f64 {
        let (p, n) = (self.center.p(), self.center.dim());
        match self.region {
            Region::Ball => ball_volume(p, n, self.radius),
            Region::Sphere => sphere_volume(p, n, self.radius),
        }
    }

    pub fn contains(&self, x: &PadicVector) -> bool {
        let d = x - &self.center;
        match (d.ord(), self.region) {
            (None, Region::Ball) => true,
            (None, Region::Sphere) => false,
            (Some(o), Region::Ball) => -o <= self.radius,
            (Some(o), Region::Sphere) => -o == self.radius,
        }
    }
}

/// `int_{S_j^N} chi_p(xi . x) d^N xi` in closed form.
pub fn sphere_character_integral(j: i64, x: &PadicVector) -> f64 {
    let (p, n) = (x.p(), x.dim());
    let e = match x.ord() {
        None => return sphere_volume(p, n, j),
        Some(o) => -o,
    };
    match e.cmp(&(1 - j)) {
        Ordering::Less => sphere_volume(p, n, j),
        Ordering::Equal => -ball_volume(p, n, j - 1),
        Ordering::Greater => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: u64, n: i64, k: u32) -> PadicRational {
        PadicRational::new(p, n, k).unwrap()
    }

    #[test]
    fn norms() {
        assert_eq!(q(5, 50, 0).norm(), 0.04);
        assert_eq!(q(5, 0, 0).norm(), 0.0);
        assert_eq!(q(3, 1, 1).norm(), 3.0);
        assert_eq!(q(3, 9, 2).ord(), Some(0));
    }

    #[test]
    fn fractional_parts() {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(q(5, 7, 2).fractional_part(), r(7, 25));
        assert_eq!(q(7, 3, 0).fractional_part(), r(0, 1));
        assert_eq!(PadicRational::from_ratio(3, 5, 6).unwrap().fractional_part(), r(1, 3));
        assert_eq!(q(3, -1, 1).fractional_part(), r(2, 3));
    }

    #[test]
    fn characters() {
        let c = q(2, 1, 1).character();
        assert!((c - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((q(5, 35, 0).character() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let t = std::f64::consts::TAU * 7.0 / 25.0;
        assert!((q(5, 7, 2).character() - Complex64::new(t.cos(), t.sin())).norm() < 1e-15);
    }

    #[test]
    fn vector_norms() {
        let x = PadicVector::new(3, vec![q(3, 1, 1), q(3, 9, 0)]).unwrap();
        assert_eq!(x.norm(), 3.0);
        assert_eq!(PadicVector::zero(3, 2).unwrap().norm(), 0.0);
        assert_eq!(PadicVector::from_scaled(2, &[1, 2], 2).unwrap().norm(), 4.0);
    }

    #[test]
    fn sphere_integral_cases() {
        let x = PadicVector::from_scaled(2, &[1], 0).unwrap();
        assert_eq!(sphere_character_integral(0, &x), 0.5);
        let x = PadicVector::from_scaled(2, &[1], 1).unwrap();
        assert_eq!(sphere_character_integral(0, &x), -0.5);
        let x = PadicVector::from_scaled(3, &[1, 0], 2).unwrap();
        assert_eq!(sphere_character_integral(1, &x), 0.0);
    }

    #[test]
    fn rejects_composite() {
        assert!(matches!(PadicRational::new(6, 1, 0), Err(Error::NotPrime(6))));
    }

    #[test]
    fn ball_membership() {
        let a = PadicVector::from_scaled(3, &[1], 0).unwrap();
        let ball = BallSpec { center: a.clone(), radius: -1, region: Region::Ball };
        assert!(ball.contains(&PadicVector::from_scaled(3, &[4], 0).unwrap()));
        assert!(!ball.contains(&PadicVector::from_scaled(3, &[2], 0).unwrap()));
        assert!((ball.volume() - 1.0 / 3.0).abs() < 1e-15);
    }
}
