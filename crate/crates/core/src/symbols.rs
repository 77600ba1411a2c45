//! Homogeneous polynomials over `Z`, their p-adic absolute values,
//! ellipticity certification, and the operator symbols built from them.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{apply_multiplier, LatticeField, LatticeGeometry};
use crate::padic::{check_prime, valuation_int, PadicVector};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: i64,
    pub exponents: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EllipticPolynomial {
    p: u64,
    #[serde(rename = "N")]
    n: usize,
    degree: u32,
    terms: Vec<Term>,
}

/// Largest modulus used by the residue scans; keeps products inside `u128`.
const MAX_MODULUS: u128 = 1 << 62;

impl EllipticPolynomial {
    /// Validates homogeneity; zero coefficients are dropped.
    pub fn new(p: u64, terms: Vec<Term>) -> Result<Self> {
        check_prime(p)?;
        let terms: Vec<Term> = terms.into_iter().filter(|t| t.coeff != 0).collect();
        let first = terms.first().ok_or_else(|| Error::Invalid("polynomial has no nonzero term".into()))?;
        let n = first.exponents.len();
        let degree: u32 = first.exponents.iter().sum();
        if n == 0 || degree == 0 {
            return Err(Error::Invalid("need N >= 1 and degree >= 1".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.exponents.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: t.exponents.len() });
            }
            let got = t.exponents.iter().sum();
            if got != degree {
                return Err(Error::NotHomogeneous { term: i, expected: degree, got });
            }
        }
        Ok(Self { p, n, degree, terms })
    }

    /// Parses the JSON list `[{"coeff": c, "exponents": [e1, ..., eN]}, ...]`.
    pub fn from_json(p: u64, json: &str) -> Result<Self> {
        Self::new(p, serde_json::from_str(json)?)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval_big(&self, x: &[BigInt]) -> BigInt {
        self.terms.iter().map(|t| t.exponents.iter().zip(x).fold(BigInt::from(t.coeff), |acc, (&e, xi)| acc * xi.pow(e))).sum()
    }

    fn eval_i128(&self, x: &[i128]) -> Option<i128> {
        let mut acc: i128 = 0;
        for t in &self.terms {
            let mut v = t.coeff as i128;
            for (&e, &xi) in t.exponents.iter().zip(x) {
                for _ in 0..e {
                    v = v.checked_mul(xi)?;
                }
            }
            acc = acc.checked_add(v)?;
        }
        Some(acc)
    }

    fn eval_mod(&self, x: &[u128], m: u128) -> u128 {
        let mut acc = 0u128;
        for t in &self.terms {
            let mut v = (t.coeff as i128).rem_euclid(m as i128) as u128;
            for (&e, &xi) in t.exponents.iter().zip(x) {
                for _ in 0..e {
                    v = v * (xi % m) % m;
                }
            }
            acc = (acc + v) % m;
        }
        acc
    }

    fn partial_mod(&self, i: usize, x: &[u128], m: u128) -> u128 {
        let mut acc = 0u128;
        for t in &self.terms {
            let ei = t.exponents[i];
            if ei == 0 {
                continue;
            }
            let c = (t.coeff as i128 * ei as i128).rem_euclid(m as i128) as u128;
            let mut v = c;
            for (j, (&e, &xj)) in t.exponents.iter().zip(x).enumerate() {
                let e = if j == i { e - 1 } else { e };
                for _ in 0..e {
                    v = v * (xj % m) % m;
                }
            }
            acc = (acc + v) % m;
        }
        acc
    }

    /// `|l(x)|_p` for integer `x` scaled by `p^{-k}`: `p^{dk - v_p(l(x))}`.
    fn abs_scaled_i128(&self, x: &[i128], k: u32) -> f64 {
        let v = match self.eval_i128(x) {
            Some(0) => return 0.0,
            Some(val) => valuation_i128(val, self.p),
            None => {
                let big: Vec<BigInt> = x.iter().map(|&c| BigInt::from(c)).collect();
                match valuation_int(&self.eval_big(&big), self.p) {
                    None => return 0.0,
                    Some(v) => v,
                }
            }
        };
        (self.p as f64).powi(self.degree as i32 * k as i32 - v as i32)
    }

    /// `|l(xi)|_p` computed exactly from the scaled numerators of `xi`.
    pub fn padic_abs(&self, xi: &PadicVector) -> Result<f64> {
        if xi.p() != self.p {
            return Err(Error::PrimeMismatch(self.p, xi.p()));
        }
        if xi.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: xi.dim() });
        }
        let mut parts = Vec::with_capacity(self.n);
        for c in xi.coords() {
            let (num, k) = c.scaled_numerator().ok_or_else(|| Error::Invalid(format!("{c} is not lattice-representable")))?;
            parts.push((num.clone(), k));
        }
        let k = parts.iter().map(|(_, k)| *k).max().unwrap_or(0);
        let pb = BigInt::from(self.p);
        let nums: Vec<BigInt> = parts.into_iter().map(|(n, ki)| n * pb.pow(k - ki)).collect();
        let val = self.eval_big(&nums);
        Ok(match valuation_int(&val, self.p) {
            None => 0.0,
            Some(v) => (self.p as f64).powi(self.degree as i32 * k as i32 - v as i32),
        })
    }

    /// `|l(xi)|_p` at every cell representative of `geometry`.
    pub fn abs_on_grid(&self, geometry: &LatticeGeometry) -> Result<Vec<f64>> {
        self.check_geometry(geometry)?;
        let k = geometry.k();
        Ok((0..geometry.len())
            .map(|i| {
                let x: Vec<i128> = geometry.coords(i).into_iter().map(|c| c as i128).collect();
                self.abs_scaled_i128(&x, k)
            })
            .collect())
    }

    fn check_geometry(&self, geometry: &LatticeGeometry) -> Result<()> {
        if geometry.p() != self.p {
            return Err(Error::PrimeMismatch(self.p, geometry.p()));
        }
        if geometry.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: geometry.dim() });
        }
        Ok(())
    }

    /// Scans primitive residues level by level. `R_k` holds the primitive
    /// vectors mod `p^k` with `l = 0 mod p^k`; the scan ends when a level
    /// is empty, when a simple root mod `p` is found, or at `depth`.
    fn scan(&self, depth: u32) -> Scan {
        let p = self.p as u128;
        let n = self.n;
        let mut counts = Vec::new();
        let mut level: Vec<Vec<u128>> = Vec::new();
        for x in odometer(n, p) {
            if x.iter().all(|&c| c == 0) {
                continue;
            }
            if self.eval_mod(&x, p) == 0 {
                level.push(x);
            }
        }
        if let Some(root) = level.iter().find(|x| (0..n).any(|i| self.partial_mod(i, x, p) != 0)) {
            return Scan::SimpleRoot(root.clone());
        }
        counts.push(level.len());
        let mut modulus = p;
        for _ in 1..depth {
            if level.is_empty() {
                break;
            }
            let next_mod = modulus * p;
            if next_mod > MAX_MODULUS {
                return Scan::Open;
            }
            let mut next = Vec::new();
            for x in &level {
                for t in odometer(n, p) {
                    let y: Vec<u128> = x.iter().zip(&t).map(|(&a, &b)| a + b * modulus).collect();
                    if self.eval_mod(&y, next_mod) == 0 {
                        next.push(y);
                    }
                }
            }
            level = next;
            modulus = next_mod;
            counts.push(level.len());
        }
        if level.is_empty() {
            Scan::Closed { counts }
        } else {
            Scan::Open
        }
    }

    /// Decides ellipticity from primitive residues modulo `p^depth`.
    pub fn ellipticity_check(&self, depth: u32) -> Result<Ellipticity> {
        if depth == 0 {
            return Err(Error::Invalid("depth must be at least 1".into()));
        }
        Ok(match self.scan(depth) {
            Scan::SimpleRoot(root) => {
                let witness = self.hensel_lift(&root, depth.max(2));
                Ellipticity::NotElliptic { witness, precision: depth.max(2) }
            }
            Scan::Closed { counts } => {
                let profile = SphereProfile::from_counts(self.p, self.n, &counts);
                Ellipticity::Elliptic { certified_depth: counts.len() as u32, c0: profile.min_abs(), profile }
            }
            Scan::Open => Ellipticity::Inconclusive { depth },
        })
    }

    /// Distribution of `|l|_p` over the unit sphere; fails unless the scan
    /// closes within `max_depth` levels.
    pub fn sphere_profile(&self, max_depth: u32) -> Result<SphereProfile> {
        match self.ellipticity_check(max_depth)? {
            Ellipticity::Elliptic { profile, .. } => Ok(profile),
            Ellipticity::NotElliptic { witness, .. } => Err(Error::NotElliptic(format!("primitive zero near {witness:?}"))),
            Ellipticity::Inconclusive { depth } => Err(Error::Inconclusive(depth)),
        }
    }

    /// Lifts a simple root mod `p` to a root mod `p^precision`, one digit at
    /// a time along a coordinate with unit partial derivative.
    fn hensel_lift(&self, root: &[u128], precision: u32) -> Vec<u64> {
        let p = self.p as u128;
        let axis = (0..self.n).find(|&i| self.partial_mod(i, root, p) != 0).expect("simple root");
        let mut x = root.to_vec();
        let mut modulus = p;
        for _ in 1..precision {
            let next = modulus * p;
            if next > MAX_MODULUS {
                break;
            }
            let digit = (0..p)
                .find(|&c| {
                    let mut y = x.clone();
                    y[axis] += c * modulus;
                    self.eval_mod(&y, next) == 0
                })
                .expect("unique digit exists for a simple root");
            x[axis] += digit * modulus;
            modulus = next;
        }
        x.into_iter().map(|c| c as u64).collect()
    }

    /// Product polynomial `self * other`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.p != other.p || self.n != other.n {
            return Err(Error::Invalid("factors must share p and N".into()));
        }
        let mut terms: Vec<Term> = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                let exponents: Vec<u32> = a.exponents.iter().zip(&b.exponents).map(|(x, y)| x + y).collect();
                match terms.iter_mut().find(|t| t.exponents == exponents) {
                    Some(t) => t.coeff += a.coeff * b.coeff,
                    None => terms.push(Term { coeff: a.coeff * b.coeff, exponents }),
                }
            }
        }
        Self::new(self.p, terms)
    }
}

fn valuation_i128(mut v: i128, p: u64) -> u32 {
    let p = p as i128;
    let mut k = 0;
    while v % p == 0 {
        v /= p;
        k += 1;
    }
    k
}

fn odometer(n: usize, base: u128) -> impl Iterator<Item = Vec<u128>> {
    let total = base.pow(n as u32);
    (0..total).map(move |mut i| {
        let mut x = vec![0u128; n];
        for slot in x.iter_mut().rev() {
            *slot = i % base;
            i /= base;
        }
        x
    })
}

enum Scan {
    SimpleRoot(Vec<u128>),
    Closed { counts: Vec<usize> },
    Open,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ellipticity {
    /// No primitive residue mod `p^certified_depth` is a root, so `l` has
    /// no nontrivial zero in `Z_p^N`.
    Elliptic { certified_depth: u32, c0: f64, profile: SphereProfile },
    /// `witness` is a primitive root mod `p^precision` lifting a simple
    /// root mod `p`; Hensel's lemma extends it to a zero in `Z_p^N`.
    NotElliptic { witness: Vec<u64>, precision: u32 },
    /// Roots survive to `depth` but none is simple.
    Inconclusive { depth: u32 },
}

/// Exact distribution of `|l(eta)|_p` over `S_0^N`: `|l| = p^{-v}` on a set
/// of Haar measure `w`, for each `(v, w)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SphereProfile {
    p: u64,
    #[serde(rename = "N")]
    n: usize,
    levels: Vec<(u32, f64)>,
}

impl SphereProfile {
    fn from_counts(p: u64, n: usize, counts: &[usize]) -> Self {
        let pf = p as f64;
        let nn = n as i32;
        let mut ge = vec![1.0 - pf.powi(-nn)];
        ge.extend(counts.iter().enumerate().map(|(k, &c)| c as f64 * pf.powi(-nn * (k as i32 + 1))));
        let levels = (0..counts.len()).map(|v| (v as u32, ge[v] - ge[v + 1])).filter(|&(_, w)| w > 0.0).collect();
        Self { p, n, levels }
    }

    pub fn levels(&self) -> &[(u32, f64)] {
        &self.levels
    }

    pub fn is_radial(&self) -> bool {
        self.levels.len() == 1
    }

    /// `min |l|_p` on the unit sphere.
    pub fn min_abs(&self) -> f64 {
        let v = self.levels.iter().map(|l| l.0).max().unwrap_or(0);
        (self.p as f64).powi(-(v as i32))
    }

    /// `max |l|_p` on the unit sphere.
    pub fn max_abs(&self) -> f64 {
        let v = self.levels.iter().map(|l| l.0).min().unwrap_or(0);
        (self.p as f64).powi(-(v as i32))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `|l|^alpha + m^2`
    LPower,
    /// `(|l| + m^2)^alpha`
    ShiftedPower,
    /// `(|l|^alpha + m^2)^beta`
    Bessel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolSpec {
    polynomial: EllipticPolynomial,
    alpha: f64,
    m: f64,
    beta: f64,
    variant: Variant,
    #[serde(skip)]
    profile: SphereProfile,
}

/// Scan depth used when a symbol certifies its polynomial.
pub const PROFILE_DEPTH: u32 = 16;

/// `C0 ||xi||^{alpha d} <= |l(xi)|^alpha <= C1 ||xi||^{alpha d}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundConstants {
    pub c0: f64,
    pub c1: f64,
}

impl SymbolSpec {
    pub fn new(polynomial: EllipticPolynomial, alpha: f64, m: f64, beta: f64, variant: Variant) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("m", m), ("beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let profile = polynomial.sphere_profile(PROFILE_DEPTH)?;
        Ok(Self { polynomial, alpha, m, beta, variant, profile })
    }

    pub fn l_power(polynomial: EllipticPolynomial, alpha: f64, m: f64) -> Result<Self> {
        Self::new(polynomial, alpha, m, 1.0, Variant::LPower)
    }

    pub fn bessel(polynomial: EllipticPolynomial, alpha: f64, m: f64, beta: f64) -> Result<Self> {
        Self::new(polynomial, alpha, m, beta, Variant::Bessel)
    }

    pub fn shifted_power(polynomial: EllipticPolynomial, alpha: f64, m: f64) -> Result<Self> {
        Self::new(polynomial, alpha, m, 1.0, Variant::ShiftedPower)
    }

    pub fn polynomial(&self) -> &EllipticPolynomial {
        &self.polynomial
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn profile(&self) -> &SphereProfile {
        &self.profile
    }

    pub fn p(&self) -> u64 {
        self.polynomial.p
    }

    pub fn dim(&self) -> usize {
        self.polynomial.n
    }

    /// Symbol as a function of `a = |l(xi)|_p`.
    pub fn value_from_abs(&self, a: f64) -> f64 {
        let m2 = self.m * self.m;
        match self.variant {
            Variant::LPower => a.powf(self.alpha) + m2,
            Variant::ShiftedPower => (a + m2).powf(self.alpha),
            Variant::Bessel => (a.powf(self.alpha) + m2).powf(self.beta),
        }
    }

    /// Value at `xi = 0`, the global minimum.
    pub fn floor(&self) -> f64 {
        self.value_from_abs(0.0)
    }

    /// Exponent `e` with symbol `~ ||xi||^e` at large `||xi||`.
    pub fn growth_exponent(&self) -> f64 {
        let d = self.polynomial.degree as f64;
        match self.variant {
            Variant::LPower | Variant::ShiftedPower => self.alpha * d,
            Variant::Bessel => self.alpha * self.beta * d,
        }
    }

    pub fn eval(&self, xi: &PadicVector) -> Result<f64> {
        Ok(self.value_from_abs(self.polynomial.padic_abs(xi)?))
    }

    /// Symbol at every frequency cell; the zero cell gets the `xi = 0` value.
    pub fn grid(&self, geometry: &LatticeGeometry) -> Result<Vec<f64>> {
        Ok(self.polynomial.abs_on_grid(geometry)?.into_iter().map(|a| self.value_from_abs(a)).collect())
    }

    /// `(symbol, measure)` pairs describing the sphere `S_j^N`.
    pub fn sphere_values(&self, j: i64) -> Vec<(f64, f64)> {
        let p = self.p() as f64;
        let d = self.polynomial.degree as i32;
        let n = self.dim() as i32;
        self.profile
            .levels
            .iter()
            .map(|&(v, w)| (self.value_from_abs(p.powi(j as i32 * d - v as i32)), w * p.powi(j as i32 * n)))
            .collect()
    }

    pub fn bound_constants(&self) -> BoundConstants {
        BoundConstants { c0: self.profile.min_abs().powf(self.alpha), c1: self.profile.max_abs().powf(self.alpha) }
    }

    /// `F^{-1}(symbol * F f)`.
    pub fn apply(&self, f: &LatticeField) -> Result<LatticeField> {
        Ok(apply_multiplier(f, &self.grid(f.geometry())?))
    }
}

/// Smallest positive quadratic non-residue mod an odd prime.
pub fn least_nonresidue(p: u64) -> Option<u64> {
    if p == 2 {
        return None;
    }
    (2..p).find(|&s| pow_mod(s, (p - 1) / 2, p) == p - 1)
}

fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let m = m as u128;
    let (mut r, mut b) = (1u128, b as u128 % m);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r as u64
}

/// Curated elliptic polynomials.
pub mod catalog {
    use super::*;

    fn term(coeff: i64, exponents: &[u32]) -> Term {
        Term { coeff, exponents: exponents.to_vec() }
    }

    /// `xi^d` in one variable.
    pub fn power(p: u64, d: u32) -> Result<EllipticPolynomial> {
        EllipticPolynomial::new(p, vec![term(1, &[d])])
    }

    /// Anisotropic binary form with `|l(xi)|_p = ||xi||_p^2`:
    /// `xi1^2 - s xi2^2` for odd `p`, `xi1^2 + xi1 xi2 + xi2^2` for `p = 2`.
    pub fn binary(p: u64) -> Result<EllipticPolynomial> {
        match least_nonresidue(p) {
            Some(s) => EllipticPolynomial::new(p, vec![term(1, &[2, 0]), term(-(s as i64), &[0, 2])]),
            None => EllipticPolynomial::new(p, vec![term(1, &[2, 0]), term(1, &[1, 1]), term(1, &[0, 2])]),
        }
    }

    /// Anisotropic quaternary form `xi1^2 - s xi2^2 - p xi3^2 + s p xi4^2`, odd `p`.
    pub fn quaternary(p: u64) -> Result<EllipticPolynomial> {
        let s = least_nonresidue(p).ok_or_else(|| Error::Invalid("quaternary catalog form needs odd p".into()))? as i64;
        let pi = p as i64;
        EllipticPolynomial::new(
            p,
            vec![term(1, &[2, 0, 0, 0]), term(-s, &[0, 2, 0, 0]), term(-pi, &[0, 0, 2, 0]), term(s * pi, &[0, 0, 0, 2])],
        )
    }

    /// Sum of squares `xi1^2 + ... + xiN^2`; elliptic only in special cases.
    pub fn sum_of_squares(p: u64, n: usize) -> Result<EllipticPolynomial> {
        let terms = (0..n)
            .map(|i| {
                let mut e = vec![0; n];
                e[i] = 2;
                Term { coeff: 1, exponents: e }
            })
            .collect();
        EllipticPolynomial::new(p, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inhomogeneous() {
        let t = vec![Term { coeff: 1, exponents: vec![2, 0] }, Term { coeff: 1, exponents: vec![0, 1] }];
        assert!(matches!(EllipticPolynomial::new(3, t), Err(Error::NotHomogeneous { term: 1, .. })));
    }

    #[test]
    fn json_input() {
        let l = EllipticPolynomial::from_json(5, r#"[{"coeff": 1, "exponents": [2]}]"#).unwrap();
        assert_eq!(l.degree(), 2);
    }

    #[test]
    fn sum_of_two_squares_mod_five() {
        let l = catalog::sum_of_squares(5, 2).unwrap();
        let xi = PadicVector::from_scaled(5, &[2, 1], 0).unwrap();
        assert!((l.padic_abs(&xi).unwrap() - 0.2).abs() < 1e-15);
        match l.ellipticity_check(4).unwrap() {
            Ellipticity::NotElliptic { witness, precision } => {
                let big: Vec<BigInt> = witness.iter().map(|&w| BigInt::from(w)).collect();
                let v = l.eval_big(&big);
                assert!(valuation_int(&v, 5).map_or(true, |v| v >= precision));
                assert!(witness.iter().any(|w| w % 5 != 0));
            }
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn cube_is_elliptic_with_unit_constant() {
        match catalog::power(3, 3).unwrap().ellipticity_check(3).unwrap() {
            Ellipticity::Elliptic { c0, .. } => assert_eq!(c0, 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quaternary_profile() {
        for p in [3, 5, 7] {
            let l = catalog::quaternary(p).unwrap();
            match l.ellipticity_check(4).unwrap() {
                Ellipticity::Elliptic { certified_depth, c0, profile } => {
                    assert_eq!(certified_depth, 2);
                    assert!((c0 - 1.0 / p as f64).abs() < 1e-15);
                    assert_eq!(profile.levels().len(), 2);
                }
                other => panic!("p={p}: {other:?}"),
            }
        }
    }

    #[test]
    fn binary_forms_are_radial() {
        for p in [2, 3, 5, 7] {
            let prof = catalog::binary(p).unwrap().sphere_profile(4).unwrap();
            assert!(prof.is_radial(), "p={p}");
            assert_eq!(prof.min_abs(), 1.0);
        }
    }

    #[test]
    fn symbol_values() {
        let s = SymbolSpec::l_power(catalog::power(3, 2).unwrap(), 1.0, 1.0).unwrap();
        assert_eq!(s.eval(&PadicVector::zero(3, 1).unwrap()).unwrap(), 1.0);
        let xi = PadicVector::from_scaled(3, &[1], 1).unwrap();
        assert!((s.eval(&xi).unwrap() - 10.0).abs() < 1e-12);
        let b = SymbolSpec::bessel(catalog::power(3, 2).unwrap(), 1.0, 1.0, 1.0).unwrap();
        assert_eq!(b.eval(&xi).unwrap(), s.eval(&xi).unwrap());
    }

    #[test]
    fn nonresidues() {
        assert_eq!(least_nonresidue(3), Some(2));
        assert_eq!(least_nonresidue(7), Some(3));
        assert_eq!(least_nonresidue(5), Some(2));
        assert_eq!(least_nonresidue(2), None);
    }
}
