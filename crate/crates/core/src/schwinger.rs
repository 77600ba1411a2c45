//! Schwinger functions of the convolved field `G * W`: truncated functions
//! from the cumulants of `H`, the partition expansion, Monte Carlo and
//! chaos routes, and the symmetry, invariance and cluster checks.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::green::GreenFunction;
use crate::lattice::{LatticeField, LatticeGeometry};
use crate::noise::{sample_convolved, InteractionH, LevySpec};
use crate::padic::PadicVector;
use crate::stats::{jackknife_mean, linear_fit, Estimate};
use crate::symbols::EllipticPolynomial;
use crate::wick::ChaosVector;

/// Largest order accepted by the partition enumerator.
pub const MAX_PARTITION_ORDER: usize = 12;

/// Bell numbers by the triangle recurrence.
pub fn bell_number(n: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for v in &row {
            next.push(next.last().unwrap() + v);
        }
        row = next;
    }
    row[0]
}

/// All set partitions of `{0..n}`, blocks listed in order of first element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionTable {
    pub n: usize,
    pub partitions: Vec<Vec<Vec<usize>>>,
}

impl PartitionTable {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_PARTITION_ORDER {
            return Err(Error::TooManyPartitions(n));
        }
        let mut partitions = Vec::new();
        let mut rgs = vec![0usize; n];
        loop {
            let blocks = rgs.iter().copied().max().map_or(0, |m| m + 1);
            let mut p = vec![Vec::new(); blocks];
            for (i, &b) in rgs.iter().enumerate() {
                p[b].push(i);
            }
            partitions.push(p);
            // Next restricted-growth string: bump the last position that
            // may grow and reset everything after it.
            let mut i = n;
            loop {
                if i <= 1 {
                    return Ok(Self { n, partitions });
                }
                i -= 1;
                let prefix_max = rgs[..i].iter().copied().max().unwrap_or(0);
                if rgs[i] <= prefix_max {
                    rgs[i] += 1;
                    for r in &mut rgs[i + 1..] {
                        *r = 0;
                    }
                    break;
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }
}

/// `S_n = sum_{partitions} prod_{blocks} S_{|B|,T}(f_B)`.
pub fn partition_expand(n: usize, mut truncated: impl FnMut(&[usize]) -> Result<f64>) -> Result<f64> {
    let table = PartitionTable::new(n)?;
    let mut total = 0.0;
    for p in &table.partitions {
        let mut prod = 1.0;
        for block in p {
            prod *= truncated(block)?;
        }
        total += prod;
    }
    Ok(total)
}

fn same_geometry(geometry: &LatticeGeometry, fs: &[LatticeField]) -> Result<()> {
    match fs.iter().find(|f| f.geometry() != geometry) {
        Some(f) => Err(Error::GeometryMismatch(geometry.to_string(), f.geometry().to_string())),
        None => Ok(()),
    }
}

/// Real cumulant `c_n` of the candidate exponent of `h`.
fn cumulant(h: &InteractionH, n: usize) -> Result<f64> {
    let c = h.cumulant(n);
    if c.im != 0.0 {
        return Err(Error::Invalid(format!("cumulant c_{n} = {c} is not real")));
    }
    Ok(c.re)
}

/// `c_n int prod_i (G * f_i)(x) dx` from precomputed `G * f_i`.
fn truncated_from_smeared(h: &InteractionH, smeared: &[&[f64]], vol: f64) -> Result<f64> {
    let n = smeared.len();
    if n == 0 {
        return Ok(1.0);
    }
    let c = cumulant(h, n)?;
    let len = smeared[0].len();
    let integral: f64 = (0..len).map(|x| smeared.iter().map(|s| s[x]).product::<f64>()).sum::<f64>() * vol;
    Ok(c * integral)
}

fn smear(green: &GreenFunction, fs: &[LatticeField]) -> Result<Vec<Vec<f64>>> {
    same_geometry(green.geometry(), fs)?;
    fs.iter().map(|f| Ok(green.apply(f)?.real_parts())).collect()
}

/// `S_{n,T}(f_1..f_n) = c_n int prod (G * f_i)` with `c_2 = 1 - H_2` and
/// `c_n = -H_n` otherwise.
pub fn truncated_schwinger(h: &InteractionH, green: &GreenFunction, fs: &[LatticeField]) -> Result<f64> {
    if fs.is_empty() {
        return Err(Error::Invalid("truncated Schwinger function needs n >= 1".into()));
    }
    let smeared = smear(green, fs)?;
    let refs: Vec<&[f64]> = smeared.iter().map(Vec::as_slice).collect();
    truncated_from_smeared(h, &refs, green.geometry().cell_volume())
}

/// Full `S_n` by expanding the truncated functions over set partitions.
pub fn analytic_schwinger(h: &InteractionH, green: &GreenFunction, fs: &[LatticeField]) -> Result<f64> {
    let smeared = smear(green, fs)?;
    let vol = green.geometry().cell_volume();
    partition_expand(fs.len(), |block| {
        let refs: Vec<&[f64]> = block.iter().map(|&i| smeared[i].as_slice()).collect();
        truncated_from_smeared(h, &refs, vol)
    })
}

/// `S_n^Phi = (-i)^n d^n/dt_1..dt_n T Phi(sum t_i f_i)` at `t = 0`.
pub fn t_transform_derivative_schwinger(phi: &ChaosVector, fs: &[LatticeField]) -> Result<num_complex::Complex64> {
    phi.polarized_moment(fs)
}

/// `<G * W, f_i>` for each replica and test function.
pub fn mc_pairings(
    spec: &LevySpec,
    green: &GreenFunction,
    fs: &[LatticeField],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    same_geometry(green.geometry(), fs)?;
    Ok((0..n_samples as u64)
        .into_par_iter()
        .map(|r| {
            let phi = sample_convolved(spec, green, seed, r);
            fs.iter().map(|f| phi.pairing(f)).collect()
        })
        .collect())
}

/// Sample mean of `prod_i <G * W, f_i>` with jackknife error.
pub fn mc_schwinger(
    spec: &LevySpec,
    green: &GreenFunction,
    fs: &[LatticeField],
    n_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let rows = mc_pairings(spec, green, fs, n_samples, seed)?;
    Ok(moment_from_pairings(&rows, &(0..fs.len()).collect::<Vec<_>>()))
}

/// Moment of the selected columns of [`mc_pairings`] output.
pub fn moment_from_pairings(rows: &[Vec<f64>], cols: &[usize]) -> Estimate {
    let prods: Vec<f64> = rows.iter().map(|r| cols.iter().map(|&c| r[c]).product()).collect();
    jackknife_mean(&prods)
}

/// Where the Schwinger functions come from.
#[derive(Clone, Copy)]
pub enum Source<'a> {
    Analytic { h: &'a InteractionH, green: &'a GreenFunction },
    MonteCarlo { spec: &'a LevySpec, green: &'a GreenFunction, n_samples: usize, seed: u64 },
    Chaos(&'a ChaosVector),
}

impl Source<'_> {
    pub fn is_exact(&self) -> bool {
        !matches!(self, Source::MonteCarlo { .. })
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        match self {
            Source::Analytic { green, .. } | Source::MonteCarlo { green, .. } => green.geometry(),
            Source::Chaos(phi) => phi.geometry(),
        }
    }

    /// `S_n(f_1..f_n)`; exact sources report zero error.
    pub fn schwinger(&self, fs: &[LatticeField]) -> Result<Estimate> {
        match *self {
            Source::Analytic { h, green } => Ok(Estimate { value: analytic_schwinger(h, green, fs)?, stderr: 0.0 }),
            Source::MonteCarlo { spec, green, n_samples, seed } => mc_schwinger(spec, green, fs, n_samples, seed),
            Source::Chaos(phi) => {
                same_geometry(phi.geometry(), fs)?;
                Ok(Estimate { value: t_transform_derivative_schwinger(phi, fs)?.re, stderr: 0.0 })
            }
        }
    }
}

/// A Schwinger function request: test functions plus their source.
#[derive(Clone)]
pub struct SchwingerRequest<'a> {
    pub funcs: Vec<LatticeField>,
    pub source: Source<'a>,
}

impl SchwingerRequest<'_> {
    pub fn evaluate(&self) -> Result<Estimate> {
        self.source.schwinger(&self.funcs)
    }
}

fn agrees(a: &Estimate, b: &Estimate) -> bool {
    let sigma = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    if sigma == 0.0 {
        (a.value - b.value).abs() <= 1e-10 * (1.0 + a.value.abs())
    } else {
        (a.value - b.value).abs() <= 3.0 * sigma
    }
}

/// Every permutation of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryRow {
    pub permutation: Vec<usize>,
    pub value: f64,
    pub stderr: f64,
    pub discrepancy: f64,
    pub pass: bool,
}

/// `S_n` is unchanged under permuting its arguments.
pub fn os4_symmetry_check(source: &Source, fs: &[LatticeField], permutations: &[Vec<usize>]) -> Result<Vec<SymmetryRow>> {
    let base = source.schwinger(fs)?;
    permutations
        .iter()
        .map(|perm| {
            let permuted: Vec<LatticeField> = perm.iter().map(|&i| fs[i].clone()).collect();
            let e = source.schwinger(&permuted)?;
            Ok(SymmetryRow {
                permutation: perm.clone(),
                value: e.value,
                stderr: e.stderr,
                discrepancy: (e.value - base.value).abs(),
                pass: agrees(&base, &e),
            })
        })
        .collect()
}

/// `x -> Lambda x + a` with `Lambda` a signed permutation matrix:
/// `(Lambda x)_i = sign_i x_{perm_i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanTransform {
    pub translation: PadicVector,
    pub perm: Vec<usize>,
    pub signs: Vec<i8>,
    pub preserves_q: bool,
    pub preserves_l: bool,
    pub measure_preserving: bool,
}

impl EuclideanTransform {
    /// Validates the matrix and certifies its flags against `l`.
    pub fn new(translation: PadicVector, perm: Vec<usize>, signs: Vec<i8>, l: &EllipticPolynomial) -> Result<Self> {
        let n = l.dim();
        let mut seen = vec![false; n];
        if perm.len() != n || signs.len() != n || translation.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: perm.len().max(signs.len()) });
        }
        for &i in &perm {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Invalid(format!("{perm:?} is not a permutation")));
            }
        }
        if signs.iter().any(|s| s.abs() != 1) {
            return Err(Error::Invalid(format!("signs must be +-1, got {signs:?}")));
        }
        let preserves_l = preserves_polynomial(l, &perm, &signs);
        // Signed permutations fix sum x_i^2 and have unit determinant.
        Ok(Self { translation, perm, signs, preserves_q: true, preserves_l, measure_preserving: true })
    }

    pub fn translation(translation: PadicVector, l: &EllipticPolynomial) -> Result<Self> {
        let n = translation.dim();
        Self::new(translation, (0..n).collect(), vec![1; n], l)
    }

    pub fn negation(l: &EllipticPolynomial) -> Result<Self> {
        let n = l.dim();
        Self::new(PadicVector::zero(l.p(), n)?, (0..n).collect(), vec![-1; n], l)
    }

    pub fn label(&self) -> String {
        format!(
            "a={:?} perm={:?} signs={:?}",
            self.translation.coords().iter().map(ToString::to_string).collect::<Vec<_>>(),
            self.perm,
            self.signs
        )
    }

    fn map_index(&self, geometry: &LatticeGeometry, shift: usize, idx: usize) -> usize {
        let side = geometry.side() as u64;
        let c = geometry.coords(idx);
        let mapped: Vec<u64> = (0..c.len())
            .map(|i| {
                let v = c[self.perm[i]];
                if self.signs[i] < 0 {
                    (side - v) % side
                } else {
                    v
                }
            })
            .collect();
        geometry.add_index(geometry.index(&mapped), shift)
    }

    /// `((a, Lambda) f)(x) = f(Lambda^{-1}(x - a))`.
    pub fn apply(&self, f: &LatticeField) -> Result<LatticeField> {
        let g = *f.geometry();
        let shift = g.index_of(&self.translation)?;
        let mut out = LatticeField::zeros(g);
        for (i, v) in f.values().iter().enumerate() {
            out.values_mut()[self.map_index(&g, shift, i)] = *v;
        }
        Ok(out)
    }

    /// Largest `| |l(Lambda xi)| - |l(xi)| |` over the grid.
    pub fn abs_l_discrepancy(&self, l: &EllipticPolynomial, geometry: &LatticeGeometry) -> Result<f64> {
        let abs = l.abs_on_grid(geometry)?;
        let zero = geometry.index(&vec![0; geometry.dim()]);
        Ok((0..geometry.len()).map(|i| (abs[self.map_index(geometry, zero, i)] - abs[i]).abs()).fold(0.0, f64::max))
    }
}

/// `l(Lambda xi) = l(xi)` as polynomials.
fn preserves_polynomial(l: &EllipticPolynomial, perm: &[usize], signs: &[i8]) -> bool {
    let mut original: Vec<(Vec<u32>, i64)> = l.terms().iter().map(|t| (t.exponents.clone(), t.coeff)).collect();
    let mut mapped: Vec<(Vec<u32>, i64)> = l
        .terms()
        .iter()
        .map(|t| {
            let mut e = vec![0u32; t.exponents.len()];
            let mut sign = 1i64;
            for (i, &ei) in t.exponents.iter().enumerate() {
                e[perm[i]] += ei;
                if signs[i] < 0 && ei % 2 == 1 {
                    sign = -sign;
                }
            }
            (e, sign * t.coeff)
        })
        .collect();
    let normalize = |v: &mut Vec<(Vec<u32>, i64)>| {
        v.sort();
        let mut merged: Vec<(Vec<u32>, i64)> = Vec::new();
        for (e, c) in v.drain(..) {
            match merged.last_mut() {
                Some(last) if last.0 == e => last.1 += c,
                _ => merged.push((e, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0);
        *v = merged;
    };
    normalize(&mut original);
    normalize(&mut mapped);
    original == mapped
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceRow {
    pub transform: String,
    pub tuple: usize,
    pub original: f64,
    pub transformed: f64,
    pub discrepancy: f64,
    pub pass: bool,
}

/// Compares `S_n(f)` with `S_n((a, Lambda) f)` for every transform and tuple.
pub fn invariance_check(
    source: &Source,
    transforms: &[EuclideanTransform],
    tuples: &[Vec<LatticeField>],
) -> Result<Vec<InvarianceRow>> {
    let mut rows = Vec::new();
    for t in transforms {
        for (k, fs) in tuples.iter().enumerate() {
            let a = source.schwinger(fs)?;
            let moved = fs.iter().map(|f| t.apply(f)).collect::<Result<Vec<_>>>()?;
            let b = source.schwinger(&moved)?;
            rows.push(InvarianceRow {
                transform: t.label(),
                tuple: k,
                original: a.value,
                transformed: b.value,
                discrepancy: (a.value - b.value).abs(),
                pass: agrees(&a, &b),
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterRow {
    pub step: u32,
    /// `|lambda|_p = p^step`.
    pub lambda_norm: f64,
    /// `||lambda a||_p`.
    pub distance: f64,
    pub deviation: f64,
    pub truncated: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterReport {
    pub rows: Vec<ClusterRow>,
    pub fitted_slope: Option<f64>,
    /// `-(alpha d + N)`.
    pub expected_slope: f64,
    pub monotone: bool,
    /// Whether `alpha d > N`, the regime where decay is a theorem.
    pub theorem_applies: bool,
    pub warning: Option<String>,
}

impl ClusterReport {
    /// Monotone decay with the expected slope within `rel_tol`.
    pub fn passes(&self, rel_tol: f64) -> bool {
        self.theorem_applies
            && self.monotone
            && self.rows.len() >= 3
            && self.fitted_slope.is_some_and(|s| ((s - self.expected_slope) / self.expected_slope).abs() <= rel_tol)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda_norm,deviation\n");
        for r in &self.rows {
            s.push_str(&format!("{},{}\n", crate::io::fmt_f64(r.lambda_norm), crate::io::fmt_f64(r.deviation)));
        }
        s
    }
}

/// Tabulates `|S_{m+n}(f, T_{lambda a} g) - S_m(f) S_n(T_{lambda a} g)|` for
/// `lambda = p^{-1}, .., p^{-max_step}`, stopping at the window edge.
pub fn cluster_check(
    h: &InteractionH,
    green: &GreenFunction,
    f_block: &[LatticeField],
    g_block: &[LatticeField],
    direction: &PadicVector,
    max_step: u32,
) -> Result<ClusterReport> {
    let geom = *green.geometry();
    let p = geom.p();
    let spec = green.spec();
    let growth = spec.alpha() * spec.polynomial().degree() as f64;
    let n = geom.dim() as f64;
    let s_f = analytic_schwinger(h, green, f_block)?;
    let mut rows = Vec::new();
    let mut warning = None;
    for step in 1..=max_step {
        let shift = direction.scale(&crate::padic::PadicRational::new(p, 1, step)?);
        let dist = shift.norm();
        // Beyond p^{K-1} the translate wraps onto the window's edge cells.
        if shift.ord().is_some_and(|o| -o > geom.k() as i64 - 1) {
            warning = Some(format!("window exhausted at step {step}: ||lambda a|| = {dist}"));
            break;
        }
        let idx = match geom.index_of(&shift) {
            Ok(i) => i,
            Err(e) => {
                warning = Some(format!("window exhausted at step {step}: {e}"));
                break;
            }
        };
        let moved: Vec<LatticeField> = g_block.iter().map(|g| g.translate(idx)).collect();
        let mut joint = f_block.to_vec();
        joint.extend(moved.iter().cloned());
        let deviation = (analytic_schwinger(h, green, &joint)? - s_f * analytic_schwinger(h, green, &moved)?).abs();
        let truncated = truncated_schwinger(h, green, &joint)?.abs();
        rows.push(ClusterRow { step, lambda_norm: (p as f64).powi(step as i32), distance: dist, deviation, truncated });
    }
    let monotone = rows.windows(2).all(|w| w[1].deviation <= w[0].deviation);
    let fitted_slope = (rows.len() >= 2 && rows.iter().all(|r| r.deviation > 0.0)).then(|| {
        let x: Vec<f64> = rows.iter().map(|r| r.lambda_norm.ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.deviation.ln()).collect();
        linear_fit(&x, &y).slope
    });
    Ok(ClusterReport { rows, fitted_slope, expected_slope: -(growth + n), monotone, theorem_applies: growth > n, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::Atom;
    use crate::symbols::{catalog, SymbolSpec};

    fn green(k: u32) -> GreenFunction {
        let g = LatticeGeometry::new(3, 1, k).unwrap();
        GreenFunction::build(&SymbolSpec::l_power(catalog::power(3, 2).unwrap(), 1.0, 1.0).unwrap(), g).unwrap()
    }

    fn bump(g: LatticeGeometry, seed: usize) -> LatticeField {
        LatticeField::from_fn(g, |i| num_complex::Complex64::new(((i * 5 + seed * 3) % 7) as f64 / 7.0 - 0.3, 0.0))
    }

    #[test]
    fn bell_counts() {
        for (n, b) in [1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975].into_iter().enumerate() {
            assert_eq!(PartitionTable::new(n + 1).unwrap().len() as u128, b);
            assert_eq!(bell_number(n + 1), b);
        }
        assert!(PartitionTable::new(13).is_err());
        assert_eq!(PartitionTable::new(0).unwrap().len(), 1);
    }

    #[test]
    fn free_field_truncated() {
        let gr = green(1);
        let g = *gr.geometry();
        let (f1, f2, f3) = (bump(g, 1), bump(g, 2), bump(g, 3));
        let h = InteractionH::zero();
        let cov = gr.apply(&f1).unwrap().pairing(&gr.apply(&f2).unwrap()).re;
        assert!((truncated_schwinger(&h, &gr, &[f1.clone(), f2.clone()]).unwrap() - cov).abs() < 1e-14);
        assert_eq!(truncated_schwinger(&h, &gr, &[f1.clone(), f2.clone(), f3]).unwrap(), 0.0);
    }

    #[test]
    fn poisson_third_cumulant() {
        let gr = green(1);
        let g = *gr.geometry();
        let lam = 0.7;
        let spec = LevySpec::new(0.0, 0.0, vec![Atom { s: 1.0, mass: lam }]).unwrap();
        let h = InteractionH::from_levy(&spec, 4);
        let fs: Vec<LatticeField> = (0..3).map(|s| bump(g, s)).collect();
        let sm: Vec<Vec<f64>> = fs.iter().map(|f| gr.apply(f).unwrap().real_parts()).collect();
        let integral: f64 = (0..g.len()).map(|x| sm[0][x] * sm[1][x] * sm[2][x]).sum::<f64>() * g.cell_volume();
        assert!((truncated_schwinger(&h, &gr, &fs).unwrap() - lam * integral).abs() < 1e-14);
    }

    #[test]
    fn permutations_enumerated() {
        assert_eq!(all_permutations(3).len(), 6);
        assert_eq!(all_permutations(4).len(), 24);
    }

    #[test]
    fn swap_on_anisotropic_form() {
        let l = catalog::binary(3).unwrap();
        let t = EuclideanTransform::new(PadicVector::zero(3, 2).unwrap(), vec![1, 0], vec![1, 1], &l).unwrap();
        assert!(!t.preserves_l);
        assert!(EuclideanTransform::negation(&l).unwrap().preserves_l);
    }

    #[test]
    fn free_cluster_decays() {
        let gr = green(5);
        let g = *gr.geometry();
        let f = LatticeField::ball_indicator(g, 0, 0);
        let a = PadicVector::from_scaled(3, &[1], 0).unwrap();
        let rep = cluster_check(&InteractionH::zero(), &gr, std::slice::from_ref(&f), std::slice::from_ref(&f), &a, 6).unwrap();
        assert!(rep.monotone);
        assert_eq!(rep.rows.len(), 4);
        assert!(rep.warning.is_some());
    }
}
