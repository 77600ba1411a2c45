//! Lévy characteristics, the interaction `H`, the positive-definiteness
//! validator, and white-noise samplers on the lattice window.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::green::GreenFunction;
use crate::lattice::{LatticeField, LatticeGeometry};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub s: f64,
    pub mass: f64,
}

/// `F(t) = i a t - sigma^2 t^2 / 2 + sum_k m_k (e^{i s_k t} - 1 - i s_k t / (1 + s_k^2))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevySpec {
    pub a: f64,
    pub sigma: f64,
    #[serde(default)]
    pub atoms: Vec<Atom>,
}

impl LevySpec {
    pub fn new(a: f64, sigma: f64, atoms: Vec<Atom>) -> Result<Self> {
        let spec = Self { a, sigma, atoms };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self { a: 0.0, sigma, atoms: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() || !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Invalid(format!("need finite a and sigma >= 0, got a={} sigma={}", self.a, self.sigma)));
        }
        for at in &self.atoms {
            if !(at.s.is_finite() && at.s != 0.0 && at.mass.is_finite() && at.mass > 0.0) {
                return Err(Error::Invalid(format!("atom {at:?} needs s != 0 and mass > 0")));
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let i = Complex64::i();
        let mut v = i * self.a * t - self.sigma * self.sigma * t * t / 2.0;
        for at in &self.atoms {
            v += at.mass * ((i * at.s * t).exp() - 1.0 - i * at.s * t / (1.0 + at.s * at.s));
        }
        v
    }

    /// `c_n = F^{(n)}(0) / i^n`.
    pub fn cumulant(&self, n: usize) -> f64 {
        let jumps = |k: i32| self.atoms.iter().map(|at| at.mass * at.s.powi(k)).sum::<f64>();
        match n {
            0 => 0.0,
            1 => self.a + self.atoms.iter().map(|at| at.mass * at.s.powi(3) / (1.0 + at.s * at.s)).sum::<f64>(),
            2 => self.sigma * self.sigma + jumps(2),
            _ => jumps(n as i32),
        }
    }
}

/// Coefficients `H_1..H_n` of `H(z) = sum_k H_k z^k / k!`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractionH {
    coeffs: Vec<Complex64>,
    convention: Convention,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `H(z) = sum H_k z^k / k!`.
    Factorial,
    /// `H(z) = sum H_k z^k`; converted to factorial form on load.
    Plain,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Coeff {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Deserialize)]
struct RawH {
    coeffs: Vec<Coeff>,
    convention: Convention,
    #[serde(default)]
    radius: Option<f64>,
}

impl<'de> Deserialize<'de> for InteractionH {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawH::deserialize(d)?;
        let coeffs = raw
            .coeffs
            .into_iter()
            .map(|c| match c {
                Coeff::Real(r) => Complex64::new(r, 0.0),
                Coeff::Complex([r, i]) => Complex64::new(r, i),
            })
            .collect();
        let h = match raw.convention {
            Convention::Factorial => InteractionH::new(coeffs),
            Convention::Plain => InteractionH::from_plain(coeffs),
        };
        Ok(InteractionH { radius: raw.radius, ..h })
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl InteractionH {
    /// `coeffs[k-1] = H_k` in the factorial convention.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs, convention: Convention::Factorial, radius: None }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// From power-series coefficients `h_k` of `H(z) = sum h_k z^k`.
    pub fn from_plain(coeffs: Vec<Complex64>) -> Self {
        Self::new(coeffs.into_iter().enumerate().map(|(i, c)| c * factorial(i + 1)).collect())
    }

    pub fn zero() -> Self {
        Self::new(Vec::new())
    }

    /// The `H` with `-H(it) - t^2/2 = F(t)` for a Lévy spec, truncated at
    /// order `n_max`: `H_2 = 1 - c_2` and `H_n = -c_n` otherwise.
    pub fn from_levy(spec: &LevySpec, n_max: usize) -> Self {
        Self::from_real(&(1..=n_max).map(|n| if n == 2 { 1.0 - spec.cumulant(2) } else { -spec.cumulant(n) }).collect::<Vec<_>>())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `H_k`, zero beyond the stored order.
    pub fn coeff(&self, k: usize) -> Complex64 {
        if k == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs.get(k - 1).copied().unwrap_or_default()
    }

    /// Highest `k` with `H_k != 0`.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| c.norm() > 0.0).map_or(0, |i| i + 1)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate() {
            term *= z / (k + 1) as f64;
            sum += c * term;
        }
        sum
    }

    /// Cumulant `c_n` of the candidate exponent `-H(it) - t^2/2`:
    /// `1 - H_2` for `n = 2`, `-H_n` otherwise.
    pub fn cumulant(&self, n: usize) -> Complex64 {
        match n {
            0 => Complex64::new(0.0, 0.0),
            2 => 1.0 - self.coeff(2),
            _ => -self.coeff(n),
        }
    }
}

/// A candidate Lévy exponent `t -> F(t)`.
pub trait Exponent {
    fn eval(&self, t: f64) -> Complex64;
    /// Degree when the exponent is a polynomial in `t`.
    fn polynomial_degree(&self) -> Option<usize> {
        None
    }
}

impl Exponent for LevySpec {
    fn eval(&self, t: f64) -> Complex64 {
        LevySpec::eval(self, t)
    }
}

/// `t -> -H(it) - t^2/2`.
#[derive(Clone, Debug)]
pub struct CandidateExponent<'a>(pub &'a InteractionH);

impl Exponent for CandidateExponent<'_> {
    fn eval(&self, t: f64) -> Complex64 {
        -self.0.eval(Complex64::new(0.0, t)) - t * t / 2.0
    }
    fn polynomial_degree(&self) -> Option<usize> {
        Some(self.0.degree().max(2))
    }
}

pub fn h_to_levy(h: &InteractionH) -> CandidateExponent<'_> {
    CandidateExponent(h)
}

/// Wraps a closure as an [`Exponent`].
pub struct FnExponent<F>(pub F);

impl<F: Fn(f64) -> Complex64> Exponent for FnExponent<F> {
    fn eval(&self, t: f64) -> Complex64 {
        (self.0)(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum BochnerVerdict {
    Plausible {
        min_eigenvalue: f64,
    },
    /// A polynomial exponent of degree above 2 is never a Lévy characteristic.
    RejectedDegree {
        degree: usize,
    },
    RejectedEigenvalue {
        min_eigenvalue: f64,
    },
}

impl BochnerVerdict {
    pub fn is_plausible(&self) -> bool {
        matches!(self, BochnerVerdict::Plausible { .. })
    }
}

/// 21 points spaced by 0.5 on `[-5, 5]`.
pub fn default_grid() -> Vec<f64> {
    (0..21).map(|i| -5.0 + 0.5 * i as f64).collect()
}

/// Checks that `[exp F(t_i - t_j)]` is positive semidefinite on `grid`.
pub fn bochner_validate(exponent: &dyn Exponent, grid: &[f64], tol: f64) -> BochnerVerdict {
    if let Some(degree) = exponent.polynomial_degree() {
        if degree > 2 {
            return BochnerVerdict::RejectedDegree { degree };
        }
    }
    let n = grid.len();
    let a = DMatrix::from_fn(n, n, |i, j| exponent.eval(grid[i] - grid[j]).exp());
    let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let min_eigenvalue = h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -tol {
        BochnerVerdict::RejectedEigenvalue { min_eigenvalue }
    } else {
        BochnerVerdict::Plausible { min_eigenvalue }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    GaussianWhite,
    LevyWhite { spec: LevySpec },
    Convolved { spec: LevySpec },
}

/// One realization of a field restricted to the window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSample {
    pub geometry: LatticeGeometry,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl FieldSample {
    /// `<W, f> = p^{-KN} sum W(x) f(x)` for a real test function.
    pub fn pairing(&self, f: &LatticeField) -> f64 {
        assert_eq!(&self.geometry, f.geometry(), "geometry mismatch");
        self.values.iter().zip(f.values()).map(|(w, v)| w * v.re).sum::<f64>() * self.geometry.cell_volume()
    }

    pub fn to_field(&self) -> LatticeField {
        LatticeField::from_real(self.geometry, &self.values).expect("length matches")
    }

    /// `X_c = vol * W(c)`, the integral of the noise over each cell.
    pub fn cell_variables(&self) -> Vec<f64> {
        let vol = self.geometry.cell_volume();
        self.values.iter().map(|w| w * vol).collect()
    }
}

/// Independent stream for one cell of one replica.
fn cell_rng(seed: u64, replica: u64, cell: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replica.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(cell as u64);
    rng
}

/// The white noise behind a sample.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseSource {
    Gaussian,
    Levy(LevySpec),
}

impl NoiseSource {
    pub fn draw(&self, geometry: LatticeGeometry, seed: u64, replica: u64) -> FieldSample {
        let vol = geometry.cell_volume();
        let values = (0..geometry.len())
            .map(|c| {
                let mut rng = cell_rng(seed, replica, c);
                match self {
                    NoiseSource::Gaussian => {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z / vol.sqrt()
                    }
                    NoiseSource::Levy(spec) => levy_cell(spec, vol, &mut rng) / vol,
                }
            })
            .collect();
        let provenance = match self {
            NoiseSource::Gaussian => Provenance::GaussianWhite,
            NoiseSource::Levy(spec) => Provenance::LevyWhite { spec: spec.clone() },
        };
        FieldSample { geometry, values, provenance }
    }

    /// Replicas `0..n`, drawn in parallel; identical for any thread count.
    pub fn draw_ensemble(&self, geometry: LatticeGeometry, seed: u64, n: usize) -> Vec<FieldSample> {
        (0..n as u64).into_par_iter().map(|r| self.draw(geometry, seed, r)).collect()
    }
}

/// A variable with characteristic function `exp(vol * F(t))`.
fn levy_cell(spec: &LevySpec, vol: f64, rng: &mut ChaCha8Rng) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    let mut x = spec.a * vol + spec.sigma * vol.sqrt() * z;
    for at in &spec.atoms {
        let mean = vol * at.mass;
        let count = Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(0.0);
        x += at.s * count - mean * at.s / (1.0 + at.s * at.s);
    }
    x
}

pub fn sample_gaussian_white(geometry: LatticeGeometry, seed: u64) -> FieldSample {
    NoiseSource::Gaussian.draw(geometry, seed, 0)
}

pub fn sample_levy_white(spec: &LevySpec, geometry: LatticeGeometry, seed: u64) -> FieldSample {
    NoiseSource::Levy(spec.clone()).draw(geometry, seed, 0)
}

/// `G * W` for Lévy white noise `W`.
pub fn sample_convolved(spec: &LevySpec, green: &GreenFunction, seed: u64, replica: u64) -> FieldSample {
    let w = NoiseSource::Levy(spec.clone()).draw(*green.geometry(), seed, replica);
    convolve_sample(spec, green, &w)
}

fn convolve_sample(spec: &LevySpec, green: &GreenFunction, w: &FieldSample) -> FieldSample {
    let values = green.apply(&w.to_field()).expect("same geometry").real_parts();
    FieldSample { geometry: w.geometry, values, provenance: Provenance::Convolved { spec: spec.clone() } }
}

/// Replicas `0..n` of [`sample_convolved`], in parallel.
pub fn convolved_ensemble(spec: &LevySpec, green: &GreenFunction, seed: u64, n: usize) -> Vec<FieldSample> {
    (0..n as u64).into_par_iter().map(|r| sample_convolved(spec, green, seed, r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_basics() {
        let g = LevySpec::gaussian(1.5);
        assert!((g.eval(2.0) - Complex64::new(-4.5, 0.0)).norm() < 1e-15);
        let p = LevySpec::new(0.3, 0.2, vec![Atom { s: 1.0, mass: 0.7 }]).unwrap();
        assert_eq!(p.eval(0.0), Complex64::new(0.0, 0.0));
        for t in [0.3, 1.7] {
            assert!((p.eval(-t) - p.eval(t).conj()).norm() < 1e-15);
            assert!(p.eval(t).re <= 0.0);
        }
        assert!(LevySpec::new(0.0, 1.0, vec![Atom { s: 0.0, mass: 1.0 }]).is_err());
    }

    #[test]
    fn single_atom_cumulants() {
        let lam = 0.8;
        let spec = LevySpec::new(0.0, 0.0, vec![Atom { s: 1.0, mass: lam }]).unwrap();
        for n in 2..6 {
            assert_eq!(spec.cumulant(n), lam);
        }
    }

    #[test]
    fn cumulant_bridge() {
        let h = InteractionH::zero();
        assert_eq!(h.cumulant(2), Complex64::new(1.0, 0.0));
        assert_eq!(h.cumulant(3), Complex64::new(0.0, 0.0));
        assert_eq!(InteractionH::from_real(&[1.0]).cumulant(1), Complex64::new(-1.0, 0.0));
        let spec = LevySpec::new(0.1, 0.5, vec![Atom { s: 2.0, mass: 0.3 }, Atom { s: -1.0, mass: 0.4 }]).unwrap();
        let h = InteractionH::from_levy(&spec, 6);
        for n in 1..=6 {
            assert!((h.cumulant(n).re - spec.cumulant(n)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn json_conventions() {
        let h = InteractionH::from_json(r#"{"coeffs": [0, 0, 0, 24], "convention": "factorial"}"#).unwrap();
        assert!((h.eval(Complex64::new(2.0, 0.0)) - Complex64::new(16.0, 0.0)).norm() < 1e-12);
        let q = InteractionH::from_json(r#"{"coeffs": [0, 0, 0, 1], "convention": "plain"}"#).unwrap();
        assert_eq!(q, h);
        let c = InteractionH::from_json(r#"{"coeffs": [[1, 2]], "convention": "factorial"}"#).unwrap();
        assert_eq!(c.coeff(1), Complex64::new(1.0, 2.0));
    }

    #[test]
    fn validator_cases() {
        let grid = default_grid();
        let gauss = FnExponent(|t: f64| Complex64::new(-t * t / 2.0, 0.0));
        assert!(bochner_validate(&gauss, &grid, 1e-10).is_plausible());
        let poisson = FnExponent(|t: f64| 2.0 * (Complex64::new(0.0, t).exp() - 1.0));
        assert!(bochner_validate(&poisson, &grid, 1e-10).is_plausible());
        let quartic = InteractionH::from_real(&[0.0, 0.0, 0.0, 24.0]);
        assert_eq!(bochner_validate(&h_to_levy(&quartic), &grid, 1e-10), BochnerVerdict::RejectedDegree { degree: 4 });
        let bad = FnExponent(|t: f64| Complex64::new(-t.powi(4), 0.0));
        assert!(!bochner_validate(&bad, &grid, 1e-10).is_plausible());
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = LatticeGeometry::new(3, 1, 1).unwrap();
        let spec = LevySpec::new(0.0, 1.0, vec![Atom { s: 1.0, mass: 0.5 }]).unwrap();
        let a = sample_levy_white(&spec, g, 7);
        assert_eq!(a, sample_levy_white(&spec, g, 7));
        assert_ne!(a.values, sample_levy_white(&spec, g, 8).values);
    }
}
