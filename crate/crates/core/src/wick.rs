//! Truncated chaos expansions over Gaussian white noise on the window.
//!
//! A [`ChaosVector`] stores each kernel `Phi_n` as a weighted list of
//! elementary tensors `g_1 (x) ... (x) g_n`, symmetrized implicitly. All
//! pairings are the bilinear window pairing `<f, g> = int f g`.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::GreenFunction;
use crate::lattice::{dft, sobolev_weights, LatticeField, LatticeGeometry};
use crate::noise::{FieldSample, InteractionH};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A lattice function shared between terms, tagged with a content hash
/// so equal factors can be merged.
#[derive(Clone, Debug)]
pub struct Factor {
    id: u64,
    field: Arc<LatticeField>,
}

impl Factor {
    pub fn new(field: LatticeField) -> Self {
        let mut h = DefaultHasher::new();
        let g = field.geometry();
        (g.p(), g.dim(), g.k()).hash(&mut h);
        for v in field.values() {
            (v.re.to_bits(), v.im.to_bits()).hash(&mut h);
        }
        Self { id: h.finish(), field: Arc::new(field) }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn field(&self) -> &LatticeField {
        &self.field
    }
}

#[derive(Clone, Debug)]
pub struct Term {
    pub weight: Complex64,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn new(weight: Complex64, factors: Vec<Factor>) -> Self {
        Self { weight, factors }
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    fn key(&self) -> Vec<u64> {
        let mut k: Vec<u64> = self.factors.iter().map(Factor::id).collect();
        k.sort_unstable();
        k
    }
}

#[derive(Clone, Debug)]
pub struct ChaosVector {
    geometry: LatticeGeometry,
    n_max: usize,
    kernels: Vec<Vec<Term>>,
    truncated: bool,
}

impl ChaosVector {
    pub fn constant(geometry: LatticeGeometry, n_max: usize, z: Complex64) -> Self {
        let mut v = Self::zero(geometry, n_max);
        v.kernels[0].push(Term::new(z, Vec::new()));
        v
    }

    pub fn vacuum(geometry: LatticeGeometry, n_max: usize) -> Self {
        Self::constant(geometry, n_max, ONE)
    }

    pub fn zero(geometry: LatticeGeometry, n_max: usize) -> Self {
        Self { geometry, n_max, kernels: vec![Vec::new(); n_max + 1], truncated: false }
    }

    /// `<g, :W:>`.
    pub fn first_order(g: &LatticeField, n_max: usize) -> Self {
        Self::from_terms(*g.geometry(), n_max, vec![Term::new(ONE, vec![Factor::new(g.clone())])])
    }

    /// Terms above `n_max` are dropped and flag the result as truncated.
    pub fn from_terms(geometry: LatticeGeometry, n_max: usize, terms: Vec<Term>) -> Self {
        let mut v = Self::zero(geometry, n_max);
        for t in terms {
            assert!(t.factors.iter().all(|f| f.field().geometry() == &geometry), "geometry mismatch");
            if t.order() > n_max {
                v.truncated |= t.weight != ZERO;
            } else {
                v.kernels[t.order()].push(t);
            }
        }
        v.compacted()
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn kernel(&self, n: usize) -> &[Term] {
        self.kernels.get(n).map_or(&[], Vec::as_slice)
    }

    pub fn term_count(&self) -> usize {
        self.kernels.iter().map(Vec::len).sum()
    }

    /// The order-0 kernel, which is `E_mu(Phi)`.
    pub fn expectation(&self) -> Complex64 {
        self.kernels[0].iter().map(|t| t.weight).sum()
    }

    /// Highest order with a term.
    pub fn order(&self) -> usize {
        self.kernels.iter().rposition(|k| !k.is_empty()).unwrap_or(0)
    }

    fn check_geometry(&self, other: &Self) -> Result<()> {
        if self.geometry != other.geometry {
            return Err(Error::GeometryMismatch(self.geometry.to_string(), other.geometry.to_string()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_geometry(other)?;
        let n_max = self.n_max.max(other.n_max);
        let mut v = Self::zero(self.geometry, n_max);
        v.truncated = self.truncated || other.truncated;
        for src in [self, other] {
            for (n, k) in src.kernels.iter().enumerate() {
                v.kernels[n].extend(k.iter().cloned());
            }
        }
        Ok(v.compacted())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut v = self.clone();
        for t in v.kernels.iter_mut().flatten() {
            t.weight *= c;
        }
        v.compacted()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    /// Same kernels with a larger or smaller order bound.
    pub fn with_n_max(&self, n_max: usize) -> Self {
        let terms = self.kernels.iter().flatten().cloned().collect();
        let mut v = Self::from_terms(self.geometry, n_max, terms);
        v.truncated |= self.truncated;
        v
    }

    /// Merges terms with the same factor multiset and drops weights below
    /// `1e-15` of the largest weight of their order.
    fn compacted(mut self) -> Self {
        for kernel in &mut self.kernels {
            let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
            let mut merged: Vec<Term> = Vec::with_capacity(kernel.len());
            for t in kernel.drain(..) {
                match index.get(&t.key()) {
                    Some(&i) => merged[i].weight += t.weight,
                    None => {
                        index.insert(t.key(), merged.len());
                        merged.push(t);
                    }
                }
            }
            let max = merged.iter().map(|t| t.weight.norm()).fold(0.0, f64::max);
            merged.retain(|t| t.weight.norm() > 1e-15 * max);
            *kernel = merged;
        }
        self
    }

    /// `<Phi_n, f^{(x)n}>` for `n = 0..=n_max`.
    pub fn s_by_order(&self, f: &LatticeField) -> Vec<Complex64> {
        let mut cache: HashMap<u64, Complex64> = HashMap::new();
        self.kernels
            .iter()
            .map(|k| {
                k.iter()
                    .map(|t| {
                        t.factors.iter().fold(t.weight, |acc, g| acc * *cache.entry(g.id).or_insert_with(|| g.field().pairing(f)))
                    })
                    .sum()
            })
            .collect()
    }

    /// `S Phi(f) = sum_n <Phi_n, f^{(x)n}>`.
    pub fn s_transform(&self, f: &LatticeField) -> Complex64 {
        self.s_by_order(f).into_iter().sum()
    }

    /// `T Phi(g) = E_mu[e^{i<W,g>} Phi]`. Pairings are taken on the
    /// Fourier side, so this shares no arithmetic with [`Self::s_transform`].
    pub fn t_transform(&self, g: &LatticeField) -> Complex64 {
        let geom = self.geometry;
        let vol = geom.cell_volume();
        let gh = dft(g);
        let fourier_pairing = |ah: &LatticeField| -> Complex64 {
            (0..geom.len()).map(|xi| ah.values()[xi] * gh.values()[geom.neg_index(xi)]).sum::<Complex64>() * vol
        };
        let q = fourier_pairing(&gh);
        let mut cache: HashMap<u64, Complex64> = HashMap::new();
        let mut total = ZERO;
        for (n, k) in self.kernels.iter().enumerate() {
            let mut s = ZERO;
            for t in k {
                let mut prod = t.weight;
                for f in &t.factors {
                    prod *= *cache.entry(f.id).or_insert_with(|| fourier_pairing(&dft(f.field())));
                }
                s += prod;
            }
            total += s * I.powu(n as u32);
        }
        (-q / 2.0).exp() * total
    }

    /// Taylor coefficients `0..=order` of `lambda -> T Phi(lambda g)`.
    pub fn t_taylor(&self, g: &LatticeField, order: usize) -> Result<Vec<Complex64>> {
        if order > self.n_max {
            return Err(Error::OrderTooHigh { requested: order, n_max: self.n_max });
        }
        let a = self.s_by_order(g);
        let q = g.pairing(g);
        let mut gauss = vec![ZERO; order + 1];
        let mut c = ONE;
        for j in 0..=order / 2 {
            gauss[2 * j] = c;
            c *= -q / 2.0 / (j + 1) as f64;
        }
        Ok((0..=order).map(|m| (0..=m).map(|n| gauss[m - n] * I.powu(n as u32) * a[n]).sum()).collect())
    }

    /// `Phi(W) = sum_n <Phi_n, :W^{(x)n}:>` on one Gaussian sample.
    pub fn evaluate(&self, sample: &FieldSample) -> Complex64 {
        let vol = self.geometry.cell_volume();
        let pair_w = |g: &LatticeField| -> Complex64 {
            g.values().iter().zip(&sample.values).map(|(a, w)| a * w).sum::<Complex64>() * vol
        };
        let mut total = ZERO;
        for t in self.kernels.iter().flatten() {
            let x: Vec<Complex64> = t.factors.iter().map(|f| pair_w(f.field())).collect();
            let n = x.len();
            let gram: Vec<Vec<Complex64>> =
                (0..n).map(|a| (0..n).map(|b| t.factors[a].field().pairing(t.factors[b].field())).collect()).collect();
            total += t.weight * wick_ordered(&x, &gram, (1u64 << n) - 1);
        }
        total
    }

    /// `E_mu[Phi prod_i <W, f_i>]` by exact polarization of `T Phi`.
    pub fn polarized_moment(&self, fs: &[LatticeField]) -> Result<Complex64> {
        let n = fs.len();
        if n > self.n_max {
            return Err(Error::OrderTooHigh { requested: n, n_max: self.n_max });
        }
        let alg = SquareFree::new(n);
        let mut quad = alg.zero();
        for a in 0..n {
            for b in a + 1..n {
                quad[(1 << a) | (1 << b)] = -fs[a].pairing(&fs[b]);
            }
        }
        let gauss = alg.exp_nilpotent(&quad);
        let mut poly = alg.zero();
        let mut cache: HashMap<u64, Vec<Complex64>> = HashMap::new();
        for (m, k) in self.kernels.iter().enumerate().take(n + 1) {
            let phase = I.powu(m as u32);
            for t in k {
                let mut prod = alg.one();
                for f in &t.factors {
                    let lin = cache.entry(f.id).or_insert_with(|| fs.iter().map(|fb| f.field().pairing(fb)).collect());
                    prod = alg.mul(&prod, &alg.linear(lin));
                }
                for (p, v) in poly.iter_mut().zip(&prod) {
                    *p += t.weight * phase * v;
                }
            }
        }
        let full = alg.mul(&gauss, &poly)[(1 << n) - 1];
        Ok((-I).powu(n as u32) * full)
    }
}

/// `:prod_{i in mask} x_i:` with covariance `gram`, summed over partial
/// matchings of the remaining indices.
fn wick_ordered(x: &[Complex64], gram: &[Vec<Complex64>], mask: u64) -> Complex64 {
    if mask == 0 {
        return ONE;
    }
    let a = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << a);
    let mut s = x[a] * wick_ordered(x, gram, rest);
    let mut r = rest;
    while r != 0 {
        let b = r.trailing_zeros() as usize;
        r &= r - 1;
        s -= gram[a][b] * wick_ordered(x, gram, rest & !(1 << b));
    }
    s
}

/// Polynomials in nilpotent commuting variables `t_1..t_n` with
/// `t_i^2 = 0`, indexed by subset bitmask.
struct SquareFree {
    n: usize,
}

impl SquareFree {
    fn new(n: usize) -> Self {
        Self { n }
    }

    fn zero(&self) -> Vec<Complex64> {
        vec![ZERO; 1 << self.n]
    }

    fn one(&self) -> Vec<Complex64> {
        let mut v = self.zero();
        v[0] = ONE;
        v
    }

    fn linear(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut v = self.zero();
        for (i, c) in coeffs.iter().enumerate() {
            v[1 << i] = *c;
        }
        v
    }

    fn mul(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.zero();
        for (i, x) in a.iter().enumerate().filter(|(_, x)| **x != ZERO) {
            let free = (out.len() - 1) & !i;
            let mut j = free;
            loop {
                out[i | j] += x * b[j];
                if j == 0 {
                    break;
                }
                j = (j - 1) & free;
            }
        }
        out
    }

    /// `exp(q)` for `q` without constant term.
    fn exp_nilpotent(&self, q: &[Complex64]) -> Vec<Complex64> {
        let mut sum = self.one();
        let mut term = self.one();
        for k in 1..=self.n {
            term = self.mul(&term, q);
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t / (1..=k).product::<usize>() as f64;
            }
        }
        sum
    }
}

/// Cauchy product of kernel series, kept up to `cap`.
pub fn wick_product_truncated(a: &ChaosVector, b: &ChaosVector, cap: usize) -> Result<ChaosVector> {
    a.check_geometry(b)?;
    let mut v = ChaosVector::zero(a.geometry, cap);
    v.truncated = a.truncated || b.truncated;
    for (i, ka) in a.kernels.iter().enumerate() {
        for (j, kb) in b.kernels.iter().enumerate() {
            if ka.is_empty() || kb.is_empty() {
                continue;
            }
            if i + j > cap {
                v.truncated = true;
                continue;
            }
            for ta in ka {
                for tb in kb {
                    let mut factors = ta.factors.clone();
                    factors.extend(tb.factors.iter().cloned());
                    v.kernels[i + j].push(Term::new(ta.weight * tb.weight, factors));
                }
            }
        }
    }
    Ok(v.compacted())
}

/// `Phi <> Psi`, never truncating.
pub fn wick_product(a: &ChaosVector, b: &ChaosVector) -> Result<ChaosVector> {
    wick_product_truncated(a, b, a.n_max + b.n_max)
}

/// `Phi^{<>n}` kept up to `cap`.
pub fn wick_power(phi: &ChaosVector, n: usize, cap: usize) -> Result<ChaosVector> {
    let mut acc = ChaosVector::vacuum(phi.geometry, cap);
    for _ in 0..n {
        acc = wick_product_truncated(&acc, phi, cap)?;
    }
    Ok(acc)
}

/// `F^<>(Phi) = sum_n c_n (Phi - z0)^{<>n}` up to the order bound of `Phi`.
pub fn wick_analytic(coeffs: &[Complex64], z0: Complex64, phi: &ChaosVector) -> Result<ChaosVector> {
    let mean = phi.expectation();
    if (mean - z0).norm() > 1e-12 * z0.norm().max(1.0) {
        return Err(Error::ExpansionPoint { z0: z0.to_string(), mean: mean.to_string() });
    }
    let cap = phi.n_max;
    let centred = phi.sub(&ChaosVector::constant(phi.geometry, cap, mean))?;
    let used = coeffs.len().min(cap + 1);
    let mut acc = ChaosVector::zero(phi.geometry, cap);
    for c in coeffs[..used].iter().rev() {
        acc = wick_product_truncated(&acc, &centred, cap)?.add(&ChaosVector::constant(phi.geometry, cap, *c))?;
    }
    acc.truncated |= coeffs[used..].iter().any(|c| *c != ZERO) && centred.term_count() > 0;
    Ok(acc)
}

/// `exp^<>(Phi)`.
pub fn wick_exp(phi: &ChaosVector) -> Result<ChaosVector> {
    let z0 = phi.expectation();
    let mut coeffs = Vec::with_capacity(phi.n_max + 1);
    let mut c = z0.exp();
    for n in 0..=phi.n_max {
        coeffs.push(c);
        c /= (n + 1) as f64;
    }
    let mut v = wick_analytic(&coeffs, z0, phi)?;
    v.truncated |= phi.order() > 0;
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KondratievParams {
    pub l: i32,
    pub k: i32,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `(n!)^{1+beta} 2^{nk} ||Phi_n||_l^2`.
    Test,
    /// `(n!)^{1-beta} 2^{-nk} ||Phi_n||_{-l}^2`.
    Distribution,
}

/// Permanent by Ryser's formula.
fn permanent(m: &[Vec<Complex64>]) -> Complex64 {
    let n = m.len();
    match n {
        0 => ONE,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] + m[0][1] * m[1][0],
        _ => {
            let mut total = ZERO;
            for s in 1u32..(1 << n) {
                let mut prod = ONE;
                for row in m {
                    prod *= (0..n).filter(|j| s & (1 << j) != 0).map(|j| row[j]).sum::<Complex64>();
                }
                if (n as u32 - s.count_ones()) % 2 == 1 {
                    total -= prod;
                } else {
                    total += prod;
                }
            }
            total
        }
    }
}

/// `||Phi_n||^2` in the Sobolev index `l`, from the term Gram matrix.
fn kernel_norms_sq(phi: &ChaosVector, l: i32) -> Vec<f64> {
    let geom = phi.geometry;
    let w = sobolev_weights(&geom, l);
    let mut hats: HashMap<u64, LatticeField> = HashMap::new();
    for f in phi.kernels.iter().flatten().flat_map(|t| &t.factors) {
        hats.entry(f.id).or_insert_with(|| dft(f.field()));
    }
    let ids: Vec<u64> = hats.keys().copied().collect();
    let mut gram: HashMap<(u64, u64), Complex64> = HashMap::new();
    for a in &ids {
        for b in &ids {
            let (ha, hb) = (&hats[a], &hats[b]);
            let v = ha.values().iter().zip(hb.values()).zip(&w).map(|((x, y), w)| x.conj() * y * w).sum();
            gram.insert((*a, *b), v);
        }
    }
    phi.kernels
        .iter()
        .enumerate()
        .map(|(n, k)| {
            let rows: Vec<Complex64> = k
                .par_iter()
                .map(|ta| {
                    let row: Complex64 = k
                        .iter()
                        .map(|tb| {
                            let m: Vec<Vec<Complex64>> =
                                ta.factors.iter().map(|fa| tb.factors.iter().map(|fb| gram[&(fa.id, fb.id)]).collect()).collect();
                            tb.weight * permanent(&m)
                        })
                        .sum();
                    ta.weight.conj() * row
                })
                .collect();
            let fact: f64 = (1..=n).map(|i| i as f64).product();
            rows.iter().sum::<Complex64>().re / fact
        })
        .collect()
}

/// Per-order contributions to the squared Kondratiev norm.
pub fn kondratiev_terms(phi: &ChaosVector, params: KondratievParams, side: Side) -> Vec<f64> {
    let (l, sign) = match side {
        Side::Test => (params.l, 1.0),
        Side::Distribution => (-params.l, -1.0),
    };
    kernel_norms_sq(phi, l)
        .into_iter()
        .enumerate()
        .map(|(n, norm)| {
            let fact: f64 = (1..=n).map(|i| i as f64).product();
            fact.powf(1.0 + sign * params.beta) * 2f64.powf(sign * (n as i32 * params.k) as f64) * norm
        })
        .collect()
}

/// Squared norm `sum_n (n!)^{1 +- beta} 2^{+-nk} ||Phi_n||_{+-l}^2`.
pub fn kondratiev_norm_sq(phi: &ChaosVector, params: KondratievParams, side: Side) -> f64 {
    kondratiev_terms(phi, params, side).iter().sum()
}

pub fn kondratiev_norm(phi: &ChaosVector, params: KondratievParams, side: Side) -> f64 {
    kondratiev_norm_sq(phi, params, side).sqrt()
}

/// Kernels `g^{(x)n} / n!` for `n <= n_max`.
pub fn wick_exponential_vector(g: &LatticeField, n_max: usize) -> ChaosVector {
    let f = Factor::new(g.clone());
    let mut terms = Vec::new();
    let mut c = ONE;
    for n in 0..=n_max {
        terms.push(Term::new(c, vec![f.clone(); n]));
        c /= (n + 1) as f64;
    }
    let mut v = ChaosVector::from_terms(*g.geometry(), n_max, terms);
    v.truncated = true;
    v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormSeries {
    /// `(n!)^2 2^{nk} ||g^{(x)n}/n!||_l^2` for each order.
    pub terms: Vec<f64>,
    /// `2^k ||g||_l^2`.
    pub ratio: f64,
    pub divergent: bool,
}

/// Test-side `beta = 1` norm series of the Wick exponential of `g`.
pub fn wick_exponential_norm(g: &LatticeField, l: i32, k: i32, n_max: usize) -> NormSeries {
    let terms = kondratiev_terms(&wick_exponential_vector(g, n_max), KondratievParams { l, k, beta: 1.0 }, Side::Test);
    let ratio = 2f64.powi(k) * crate::lattice::sobolev_norm(g, l).powi(2);
    NormSeries { terms, ratio, divergent: ratio >= 1.0 }
}

/// Probabilists' Hermite polynomial `He_n(x)`.
pub fn hermite_he(n: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        (a, b) = (b, x * b - k as f64 * a);
    }
    b
}

/// `:<W, f>^n: = ||f||_0^n He_n(<W, f> / ||f||_0)` for real `f`.
pub fn wick_monomial_eval(f: &LatticeField, n: usize, w: &FieldSample) -> f64 {
    let norm = f.norm0();
    if norm == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    norm.powi(n as i32) * hermite_he(n, w.pairing(f) / norm)
}

/// Modified Bessel function `I_0` by its power series.
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Os1Row {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Os1Report {
    pub i0: f64,
    pub i0_below_1_3: bool,
    pub k_const: f64,
    pub c_const: f64,
    pub rows: Vec<Os1Row>,
}

impl Os1Report {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.slack >= 0.0)
    }
}

/// Checks `|S_n(f_1..f_n)| <= K C^n n! prod ||f_i||_l` with
/// `K = sqrt(I_0(2^{-k})) ||Phi||_{-l,-k,-1}` and `C = e 2^{k/2}`.
pub fn os1_bound_check(phi: &ChaosVector, l: i32, k: i32, tuples: &[Vec<LatticeField>]) -> Result<Os1Report> {
    let i0 = bessel_i0(2f64.powi(-k));
    let k_const = i0.sqrt() * kondratiev_norm(phi, KondratievParams { l, k, beta: 1.0 }, Side::Distribution);
    let c_const = std::f64::consts::E * 2f64.powf(k as f64 / 2.0);
    let mut rows = Vec::with_capacity(tuples.len());
    for fs in tuples {
        let n = fs.len();
        let lhs = phi.polarized_moment(fs)?.norm();
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        let prod: f64 = fs.iter().map(|f| crate::lattice::sobolev_norm(f, l)).product();
        let rhs = k_const * c_const.powi(n as i32) * fact * prod;
        rows.push(Os1Row { n, lhs, rhs, slack: rhs - lhs });
    }
    Ok(Os1Report { i0, i0_below_1_3: i0 < 1.3, k_const, c_const, rows })
}

fn cell_potential(h: &InteractionH, factors: &[Factor], vol: f64, n_max: usize) -> (Vec<Term>, bool) {
    let mut terms = Vec::new();
    let mut dropped = false;
    let mut fact = 1.0;
    for k in 1..=h.degree() {
        fact *= k as f64;
        let c = h.coeff(k);
        if c == ZERO {
            continue;
        }
        if k > n_max {
            dropped = true;
            continue;
        }
        for f in factors {
            terms.push(Term::new(-c * vol / fact, vec![f.clone(); k]));
        }
    }
    (terms, dropped)
}

/// `Phi_H = exp^<>(-V)` with `V = sum_cells vol sum_k H_k/k! delta_c^{(x)k}`.
pub fn phi_h(h: &InteractionH, geometry: LatticeGeometry, n_max: usize) -> Result<ChaosVector> {
    let deltas: Vec<Factor> = (0..geometry.len()).map(|c| Factor::new(LatticeField::delta(geometry, c))).collect();
    let (terms, dropped) = cell_potential(h, &deltas, geometry.cell_volume(), n_max);
    let mut v = wick_exp(&ChaosVector::from_terms(geometry, n_max, terms))?;
    v.truncated |= dropped;
    Ok(v)
}

fn smeared_deltas(green: &GreenFunction) -> Result<Vec<Factor>> {
    let g = *green.geometry();
    (0..g.len())
        .map(|c| {
            let f = green.apply(&LatticeField::delta(g, c))?;
            Ok(Factor::new(LatticeField::from_real(g, &f.real_parts())?))
        })
        .collect()
}

/// Order-2 vector `sum_c vol (G delta_c (x) G delta_c - delta_c (x) delta_c)`,
/// whose pairing with `f (x) g` is `<G*f, G*g>_0 - <f, g>_0`.
pub fn trace_correction(green: &GreenFunction, n_max: usize) -> Result<ChaosVector> {
    let g = *green.geometry();
    let vol = g.cell_volume();
    let smeared = smeared_deltas(green)?;
    let mut terms = Vec::with_capacity(2 * g.len());
    for (c, gd) in smeared.into_iter().enumerate() {
        let d = Factor::new(LatticeField::delta(g, c));
        terms.push(Term::new(Complex64::new(vol, 0.0), vec![gd.clone(), gd]));
        terms.push(Term::new(Complex64::new(-vol, 0.0), vec![d.clone(), d]));
    }
    Ok(ChaosVector::from_terms(g, n_max, terms))
}

/// `Phi_H^G = exp^<>(-sum_c vol sum_k H_k/k! (G delta_c)^{(x)k} + trace/2)`.
pub fn phi_h_convolved(h: &InteractionH, green: &GreenFunction, n_max: usize) -> Result<ChaosVector> {
    let g = *green.geometry();
    let smeared = smeared_deltas(green)?;
    let (terms, dropped) = cell_potential(h, &smeared, g.cell_volume(), n_max);
    let exponent = ChaosVector::from_terms(g, n_max, terms).add(&trace_correction(green, n_max)?.scale(ONE * 0.5))?;
    let mut v = wick_exp(&exponent)?;
    v.truncated |= dropped;
    Ok(v)
}

/// Taylor coefficients `0..=order` of `lambda -> exp(-int (H(i lambda g) + lambda^2 g^2 / 2) dx)`,
/// the closed form of `T Phi_H(lambda g)`; pass `G * g` for `Phi_H^G`.
pub fn closed_form_taylor(h: &InteractionH, g: &LatticeField, order: usize) -> Vec<Complex64> {
    let vol = g.geometry().cell_volume();
    let moment = |k: i32| g.values().iter().map(|v| v.powi(k)).sum::<Complex64>() * vol;
    // Exponent coefficients b_k, then e = exp(b) by k e_k = sum_j j b_j e_{k-j}.
    let mut b = vec![ZERO; order + 1];
    let mut fact = 1.0;
    for (k, bk) in b.iter_mut().enumerate().skip(1) {
        fact *= k as f64;
        *bk = -h.coeff(k) * I.powu(k as u32) / fact * moment(k as i32);
        if k == 2 {
            *bk -= moment(2) / 2.0;
        }
    }
    let mut e = vec![ZERO; order + 1];
    e[0] = ONE;
    for k in 1..=order {
        e[k] = (1..=k).map(|j| b[j] * j as f64 * e[k - j]).sum::<Complex64>() / k as f64;
    }
    e
}
