//! Functions on the finite window `B_K^N / B_{-K}^N`, identified with
//! `(Z/p^{2K})^N` through `x = n * p^{-K}`.
//!
//! The frequency grid is the same set, so [`dft`] maps a field to a field.
//! With the conventions here the lattice transform of a step function is
//! its continuum Fourier transform, not an approximation of it.

mod fft;

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{check_prime, PadicRational, PadicVector};

pub use fft::{naive_dft, Direction, FftPlan};

/// Largest window the crate will allocate, in grid points.
pub const MAX_POINTS: usize = 1 << 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeGeometry {
    p: u64,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "K")]
    k: u32,
}

impl LatticeGeometry {
    pub fn new(p: u64, n: usize, k: u32) -> Result<Self> {
        check_prime(p)?;
        if n == 0 || k == 0 {
            return Err(Error::Invalid(format!("need N >= 1 and K >= 1, got N={n} K={k}")));
        }
        let side = (p as u128).checked_pow(2 * k);
        let len = side.and_then(|s| s.checked_pow(n as u32));
        match len {
            Some(m) if m <= MAX_POINTS as u128 => Ok(Self { p, n, k }),
            _ => Err(Error::Invalid(format!("window p={p} N={n} K={k} exceeds {MAX_POINTS} grid points"))),
        }
    }

    /// Re-validates a deserialized geometry.
    pub fn validated(self) -> Result<Self> {
        Self::new(self.p, self.n, self.k)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Points per axis, `p^{2K}`.
    pub fn side(&self) -> usize {
        (self.p as usize).pow(2 * self.k)
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `p^{-KN}`.
    pub fn cell_volume(&self) -> f64 {
        (self.p as f64).powi(-((self.k as usize * self.n) as i32))
    }

    /// Row-major coordinates, last axis fastest.
    pub fn coords(&self, index: usize) -> Vec<u64> {
        let side = self.side();
        let mut c = vec![0u64; self.n];
        let mut r = index;
        for slot in c.iter_mut().rev() {
            *slot = (r % side) as u64;
            r /= side;
        }
        c
    }

    pub fn index(&self, coords: &[u64]) -> usize {
        let side = self.side() as u64;
        coords.iter().fold(0usize, |acc, &c| acc * side as usize + (c % side) as usize)
    }

    fn combine(&self, a: usize, b: usize, f: impl Fn(u64, u64, u64) -> u64) -> usize {
        let side = self.side() as u64;
        let (ca, cb) = (self.coords(a), self.coords(b));
        let c: Vec<u64> = ca.iter().zip(&cb).map(|(&x, &y)| f(x, y, side)).collect();
        self.index(&c)
    }

    pub fn add_index(&self, a: usize, b: usize) -> usize {
        self.combine(a, b, |x, y, s| (x + y) % s)
    }

    pub fn sub_index(&self, a: usize, b: usize) -> usize {
        self.combine(a, b, |x, y, s| (x + s - y) % s)
    }

    pub fn neg_index(&self, a: usize) -> usize {
        self.sub_index(0, a)
    }

    /// `e` with `||x||_p = p^e` for the cell at `index`; `None` for the zero cell.
    pub fn norm_exponent(&self, index: usize) -> Option<i64> {
        let p = self.p;
        self.coords(index)
            .into_iter()
            .filter(|&c| c != 0)
            .map(|mut c| {
                let mut v = 0i64;
                while c % p == 0 {
                    c /= p;
                    v += 1;
                }
                v
            })
            .min()
            .map(|v| self.k as i64 - v)
    }

    /// `[xi]_p = max(1, ||xi||_p)`, equal to 1 on the zero cell.
    pub fn bracket(&self, index: usize) -> f64 {
        match self.norm_exponent(index) {
            Some(e) if e > 0 => (self.p as f64).powi(e as i32),
            _ => 1.0,
        }
    }

    /// Cell representative `n * p^{-K}`.
    pub fn point(&self, index: usize) -> PadicVector {
        let coords =
            self.coords(index).into_iter().map(|c| PadicRational::new(self.p, c, self.k).expect("prime checked")).collect();
        PadicVector::new(self.p, coords).expect("prime checked")
    }

    /// Grid index of a point that is a multiple of `p^{-K}`; the
    /// coordinates are reduced into the window modulo `p^K`.
    pub fn index_of(&self, x: &PadicVector) -> Result<usize> {
        if x.p() != self.p {
            return Err(Error::PrimeMismatch(self.p, x.p()));
        }
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.dim() });
        }
        let side = BigInt::from(self.side());
        let mut c = Vec::with_capacity(self.n);
        for coord in x.coords() {
            let (num, scale) =
                coord.scaled_numerator().ok_or_else(|| Error::Invalid(format!("{coord} is not a multiple of p^-K")))?;
            if scale > self.k {
                return Err(Error::Invalid(format!("{coord} is finer than the cell size p^-{}", self.k)));
            }
            let n = num * BigInt::from(self.p).pow(self.k - scale);
            let r = ((n % &side) + &side) % &side;
            c.push(r.to_u64().expect("reduced below side"));
        }
        Ok(self.index(&c))
    }

    /// Radius exponent of the largest ball on which the periodic
    /// convolution agrees with the group convolution. `B_K^N` is a
    /// subgroup, so this is the whole window.
    pub fn alias_free_radius(&self) -> i64 {
        self.k as i64
    }
}

impl fmt::Display for LatticeGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} N={} K={}", self.p, self.n, self.k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeField {
    geometry: LatticeGeometry,
    values: Vec<Complex64>,
}

impl LatticeField {
    pub fn new(geometry: LatticeGeometry, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::DimensionMismatch { expected: geometry.len(), got: values.len() });
        }
        Ok(Self { geometry, values })
    }

    pub fn from_real(geometry: LatticeGeometry, values: &[f64]) -> Result<Self> {
        Self::new(geometry, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(geometry: LatticeGeometry) -> Self {
        Self { geometry, values: vec![Complex64::zero(); geometry.len()] }
    }

    pub fn from_fn(geometry: LatticeGeometry, mut f: impl FnMut(usize) -> Complex64) -> Self {
        Self { geometry, values: (0..geometry.len()).map(&mut f).collect() }
    }

    /// Indicator of `B_r^N(a)`, `a` given by its grid index.
    pub fn ball_indicator(geometry: LatticeGeometry, r: i64, center: usize) -> Self {
        Self::from_fn(geometry, |i| {
            let d = geometry.sub_index(i, center);
            let inside = geometry.norm_exponent(d).map_or(true, |e| e <= r);
            Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0)
        })
    }

    /// Indicator of the cell at `index` divided by its volume, the lattice
    /// stand-in for a delta distribution.
    pub fn delta(geometry: LatticeGeometry, index: usize) -> Self {
        let mut f = Self::zeros(geometry);
        f.values[index] = Complex64::new(1.0 / geometry.cell_volume(), 0.0);
        f
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { geometry: self.geometry, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn pointwise(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.geometry, other.geometry, "geometry mismatch");
        Self { geometry: self.geometry, values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect() }
    }

    /// `g(x) = f(x - a)` for the lattice vector with grid index `shift`.
    pub fn translate(&self, shift: usize) -> Self {
        let g = self.geometry;
        Self::from_fn(g, |i| self.values[g.sub_index(i, shift)])
    }

    /// `g(x) = f(-x)`.
    pub fn reflect(&self) -> Self {
        let g = self.geometry;
        Self::from_fn(g, |i| self.values[g.neg_index(i)])
    }

    /// Hermitian `<f, g>_0 = p^{-KN} sum conj(f) g`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.geometry, other.geometry, "geometry mismatch");
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        s * self.geometry.cell_volume()
    }

    /// Bilinear `<f, g> = p^{-KN} sum f g`, the dual pairing.
    pub fn pairing(&self, other: &Self) -> Complex64 {
        assert_eq!(self.geometry, other.geometry, "geometry mismatch");
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        s * self.geometry.cell_volume()
    }

    /// `||f||_0`.
    pub fn norm0(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.geometry.cell_volume()).sqrt()
    }

    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.geometry.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    /// Radius exponent of the smallest centred ball containing the support;
    /// `None` for the zero field.
    pub fn support_radius(&self) -> Option<i64> {
        let g = self.geometry;
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, _)| g.norm_exponent(i).unwrap_or(-(g.k() as i64)))
            .max()
    }
}

impl Add for &LatticeField {
    type Output = LatticeField;
    fn add(self, rhs: Self) -> LatticeField {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &LatticeField {
    type Output = LatticeField;
    fn sub(self, rhs: Self) -> LatticeField {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul<Complex64> for &LatticeField {
    type Output = LatticeField;
    fn mul(self, c: Complex64) -> LatticeField {
        self.map(|v| v * c)
    }
}

impl Mul<f64> for &LatticeField {
    type Output = LatticeField;
    fn mul(self, c: f64) -> LatticeField {
        self.map(|v| v * c)
    }
}

/// `F[f](xi) = p^{-KN} sum_x chi_p(xi.x) f(x)`.
pub fn dft(f: &LatticeField) -> LatticeField {
    FftPlan::new(*f.geometry()).execute(f, Direction::Forward)
}

/// Inverse of [`dft`], kernel `chi_p(-xi.x)`.
pub fn idft(f: &LatticeField) -> LatticeField {
    FftPlan::new(*f.geometry()).execute(f, Direction::Inverse)
}

fn same_geometry(f: &LatticeField, g: &LatticeField) -> Result<()> {
    if f.geometry() != g.geometry() {
        return Err(Error::GeometryMismatch(f.geometry().to_string(), g.geometry().to_string()));
    }
    Ok(())
}

/// Group convolution over the window, `(f*g)(x) = int f(x-y) g(y) dy`.
pub fn convolve(f: &LatticeField, g: &LatticeField) -> Result<LatticeField> {
    same_geometry(f, g)?;
    let plan = FftPlan::new(*f.geometry());
    let prod = plan.execute(f, Direction::Forward).pointwise(&plan.execute(g, Direction::Forward));
    Ok(plan.execute(&prod, Direction::Inverse))
}

/// Multiplies `dft(f)` by `multiplier` cell by cell and transforms back.
pub fn apply_multiplier(f: &LatticeField, multiplier: &[f64]) -> LatticeField {
    assert_eq!(multiplier.len(), f.geometry().len(), "multiplier length");
    let plan = FftPlan::new(*f.geometry());
    let mut hat = plan.execute(f, Direction::Forward);
    for (v, m) in hat.values_mut().iter_mut().zip(multiplier) {
        *v *= m;
    }
    plan.execute(&hat, Direction::Inverse)
}

/// Per-cell quadrature weights `p^{-KN} [xi]_p^l`.
pub fn sobolev_weights(geometry: &LatticeGeometry, l: i32) -> Vec<f64> {
    let vol = geometry.cell_volume();
    (0..geometry.len()).map(|i| vol * geometry.bracket(i).powi(l)).collect()
}

/// `<f, g>_l = int [xi]_p^l conj(f^(xi)) g^(xi) d^N xi`.
pub fn sobolev_inner(f: &LatticeField, g: &LatticeField, l: i32) -> Result<Complex64> {
    same_geometry(f, g)?;
    let (fh, gh) = (dft(f), dft(g));
    let w = sobolev_weights(f.geometry(), l);
    Ok(fh.values().iter().zip(gh.values()).zip(&w).map(|((a, b), w)| a.conj() * b * w).sum())
}

/// `||f||_l`.
pub fn sobolev_norm(f: &LatticeField, l: i32) -> f64 {
    let fh = dft(f);
    let w = sobolev_weights(f.geometry(), l);
    fh.values().iter().zip(&w).map(|(a, w)| a.norm_sqr() * w).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(p: u64, n: usize, k: u32) -> LatticeGeometry {
        LatticeGeometry::new(p, n, k).unwrap()
    }

    #[test]
    fn geometry_basics() {
        let g = geom(3, 2, 1);
        assert_eq!(g.side(), 9);
        assert_eq!(g.len(), 81);
        assert!((g.cell_volume() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(g.coords(g.index(&[4, 7])), vec![4, 7]);
        assert_eq!(g.norm_exponent(0), None);
        assert_eq!(g.norm_exponent(g.index(&[3, 0])), Some(0));
        assert_eq!(g.norm_exponent(g.index(&[3, 1])), Some(1));
        assert!(LatticeGeometry::new(4, 1, 1).is_err());
    }

    #[test]
    fn index_of_round_trips() {
        let g = geom(5, 2, 2);
        for i in [0, 7, 300, g.len() - 1] {
            assert_eq!(g.index_of(&g.point(i)).unwrap(), i);
        }
        let neg = PadicVector::from_scaled(5, &[-1, 0], 2).unwrap();
        assert_eq!(g.index_of(&neg).unwrap(), g.neg_index(g.index(&[1, 0])));
    }

    #[test]
    fn unit_ball_is_fixed_by_dft() {
        let g = geom(2, 1, 1);
        let f = LatticeField::ball_indicator(g, 0, 0);
        assert_eq!(f.real_parts(), vec![1.0, 0.0, 1.0, 0.0]);
        assert!(dft(&f).max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn constant_transforms_to_delta() {
        let g = geom(3, 1, 1);
        let c = Complex64::new(2.5, 0.0);
        let f = LatticeField::from_fn(g, |_| c);
        let expected = &LatticeField::delta(g, 0) * c;
        assert!(dft(&f).max_abs_diff(&expected) < 1e-12);
        assert!(idft(&LatticeField::delta(g, 0)).max_abs_diff(&LatticeField::from_fn(g, |_| Complex64::new(1.0, 0.0))) < 1e-12);
    }

    #[test]
    fn delta_is_convolution_identity() {
        let g = geom(2, 2, 1);
        let f = LatticeField::from_fn(g, |i| Complex64::new(i as f64, -(i as f64) / 3.0));
        let h = convolve(&f, &LatticeField::delta(g, 0)).unwrap();
        assert!(h.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn sobolev_of_unit_ball() {
        for (p, n, k) in [(2, 1, 2), (3, 2, 1)] {
            let g = geom(p, n, k);
            let f = LatticeField::ball_indicator(g, 0, 0);
            for l in [-3, 0, 2, 5] {
                assert!((sobolev_norm(&f, l) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn support_radius_of_balls() {
        let g = geom(3, 1, 2);
        assert_eq!(LatticeField::ball_indicator(g, -1, 0).support_radius(), Some(-1));
        assert_eq!(LatticeField::delta(g, 0).support_radius(), Some(-2));
        assert_eq!(LatticeField::zeros(g).support_radius(), None);
    }
}
