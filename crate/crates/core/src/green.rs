//! Green functions of `L + m^2` on the lattice window.
//!
//! The lattice Green function is the inverse transform of the reciprocal
//! symbol sampled on frequency cells, so `(L + m^2) G = delta` holds
//! exactly on the lattice. Against the continuum kernel it differs in two
//! ways only: the zero frequency cell is integrated with the value at
//! `xi = 0`, which shifts every spatial value by the same constant
//! ([`GreenFunction::zero_cell_correction`]), and frequencies beyond the
//! window are dropped, which only affects points within `p^{-K+1+v}` of
//! the origin, `v` being the deepest valuation of `l` on the unit sphere.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{apply_multiplier, idft, LatticeField, LatticeGeometry};
use crate::stats::linear_fit;
use crate::symbols::SymbolSpec;

#[derive(Clone, Debug)]
pub struct GreenFunction {
    spec: SymbolSpec,
    geometry: LatticeGeometry,
    spectral: Vec<f64>,
    spatial: Vec<f64>,
    zero_cell_correction: f64,
    tail_bound: f64,
    roundoff_bound: f64,
}

const SERIES_REL_TOL: f64 = 1e-18;

impl GreenFunction {
    pub fn build(spec: &SymbolSpec, geometry: LatticeGeometry) -> Result<Self> {
        let spectral: Vec<f64> = spec.grid(&geometry)?.into_iter().map(|s| 1.0 / s).collect();
        let hat = LatticeField::from_real(geometry, &spectral)?;
        let field = idft(&hat);
        let spatial = field.real_parts();
        // Worst-case growth of a radix-p transform is one rounding per stage
        // and butterfly input, on top of the l1 mass of the spectrum.
        let stages = (geometry.len() as f64).log(geometry.p() as f64).ceil();
        let mass: f64 = spectral.iter().sum::<f64>() * geometry.cell_volume();
        let roundoff_bound = 4.0 * f64::EPSILON * stages * geometry.p() as f64 * mass;
        Ok(Self {
            roundoff_bound,
            spec: spec.clone(),
            geometry,
            zero_cell_correction: zero_cell_correction(spec, &geometry),
            tail_bound: high_frequency_tail(spec, &geometry),
            spectral,
            spatial,
        })
    }

    pub fn spec(&self) -> &SymbolSpec {
        &self.spec
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    /// Reciprocal symbol per frequency cell.
    pub fn spectral(&self) -> &[f64] {
        &self.spectral
    }

    /// Lattice values per spatial cell.
    pub fn spatial(&self) -> &[f64] {
        &self.spatial
    }

    pub fn spatial_field(&self) -> LatticeField {
        LatticeField::from_real(self.geometry, &self.spatial).expect("length matches")
    }

    /// `int_{B_{-K}} 1/symbol - p^{-KN}/symbol(0)`: the amount by which the
    /// one-point quadrature of the zero frequency cell undershoots.
    pub fn zero_cell_correction(&self) -> f64 {
        self.zero_cell_correction
    }

    /// Bound on the frequencies beyond the window,
    /// `sum_{j>K} vol(S_j) / min_{S_j} symbol`; infinite unless the symbol
    /// grows faster than `||xi||^N`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Absolute floating-point error bound for every lattice value. Far
    /// from the origin `G` falls below this floor, and relative accuracy
    /// there is limited by cancellation in the transform, not by `K`.
    pub fn roundoff_bound(&self) -> f64 {
        self.roundoff_bound
    }

    /// Smallest norm exponent from which the high-frequency tail vanishes.
    pub fn exact_radius(&self) -> i64 {
        let vmax = self.spec.profile().levels().iter().map(|l| l.0).max().unwrap_or(0) as i64;
        -(self.geometry.k() as i64) + 1 + vmax
    }

    /// Continuum value `G(x)` at the cell `index`.
    pub fn continuum_value(&self, index: usize) -> f64 {
        self.spatial[index] + self.zero_cell_correction
    }

    /// Error bound for [`continuum_value`](Self::continuum_value).
    pub fn continuum_error_bound(&self, index: usize) -> f64 {
        match self.geometry.norm_exponent(index) {
            Some(e) if e >= self.exact_radius() => 0.0,
            _ => self.tail_bound,
        }
    }

    /// `G * f` by spectral division.
    pub fn apply(&self, f: &LatticeField) -> Result<LatticeField> {
        if f.geometry() != &self.geometry {
            return Err(Error::GeometryMismatch(self.geometry.to_string(), f.geometry().to_string()));
        }
        Ok(apply_multiplier(f, &self.spectral))
    }

    /// Nonzero cells where the lattice value is not positive.
    pub fn positivity_report(&self) -> PositivityReport {
        let violations: Vec<(usize, f64)> =
            self.spatial.iter().enumerate().skip(1).filter(|(_, &v)| v <= 0.0).map(|(i, &v)| (i, v)).collect();
        let worst = violations.iter().map(|v| -v.1).fold(0.0, f64::max);
        let scale = self.spatial.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        PositivityReport { explained: worst <= self.zero_cell_correction.abs() + 1e-12 * scale, worst, violations }
    }

    /// Per-sphere averages of the continuum values, with regressions.
    pub fn decay_scan(&self) -> Result<DecayScan> {
        let k = self.geometry.k() as i64;
        if 2 * k < 3 {
            return Err(Error::WindowTooSmall(format!("K={k} gives fewer than 3 spheres")));
        }
        let spheres = 2 * k as usize;
        let mut sum = vec![0.0; spheres];
        let mut count = vec![0usize; spheres];
        for i in 1..self.geometry.len() {
            if let Some(e) = self.geometry.norm_exponent(i) {
                let s = (e + k - 1) as usize;
                sum[s] += self.continuum_value(i);
                count[s] += 1;
            }
        }
        let lnp = (self.geometry.p() as f64).ln();
        let rows: Vec<DecayRow> = (0..spheres)
            .map(|s| {
                let mean = sum[s] / count[s] as f64;
                DecayRow {
                    r: s as i64 - k + 1,
                    log_norm: (s as i64 - k + 1) as f64 * lnp,
                    mean,
                    log_g: mean.ln(),
                    count: count[s],
                }
            })
            .collect();
        let growth = self.spec.growth_exponent();
        let n = self.geometry.dim() as f64;
        Ok(DecayScan::new(rows, growth, n, k))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub violations: Vec<(usize, f64)>,
    pub worst: f64,
    /// Violations are no larger than the zero-cell quadrature error.
    pub explained: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayRow {
    pub r: i64,
    pub log_norm: f64,
    pub mean: f64,
    pub log_g: f64,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModelComparison {
    /// RMS residual of `G = c0 - c1 ln||x||`.
    pub log_residual: f64,
    /// RMS residual, in `G`, of `G = c ||x||^s`.
    pub power_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayScan {
    pub rows: Vec<DecayRow>,
    /// `-(alpha d + N)`, the expected far-field slope.
    pub expected_far_slope: f64,
    /// `alpha d - N`, the expected short-distance slope when negative.
    pub expected_near_slope: f64,
    pub far_slope: Option<f64>,
    pub near_slope: Option<f64>,
    pub near_models: Option<ModelComparison>,
}

impl DecayScan {
    fn new(rows: Vec<DecayRow>, growth: f64, n: f64, k: i64) -> Self {
        let gmax = rows.iter().map(|r| r.mean.abs()).fold(0.0, f64::max);
        let usable = |r: &&DecayRow| r.mean > 1e-12 * gmax && r.mean.is_finite();
        let far: Vec<&DecayRow> = rows.iter().filter(|r| r.r >= ((k + 1) / 2).max(1)).filter(usable).collect();
        let near: Vec<&DecayRow> = rows.iter().filter(|r| r.r <= -1).filter(usable).collect();
        let slope = |pts: &[&DecayRow]| {
            (pts.len() >= 3).then(|| {
                let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().map(|r| (r.log_norm, r.log_g)).unzip();
                linear_fit(&x, &y).slope
            })
        };
        let near_models = (near.len() >= 3).then(|| {
            let x: Vec<f64> = near.iter().map(|r| r.log_norm).collect();
            let g: Vec<f64> = near.iter().map(|r| r.mean).collect();
            let lg: Vec<f64> = near.iter().map(|r| r.log_g).collect();
            let lin = linear_fit(&x, &g);
            let pow = linear_fit(&x, &lg);
            let rms = |f: &dyn Fn(f64) -> f64| {
                (x.iter().zip(&g).map(|(&xi, &gi)| (f(xi) - gi).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
            };
            ModelComparison {
                log_residual: rms(&|xi| lin.intercept + lin.slope * xi),
                power_residual: rms(&|xi| (pow.intercept + pow.slope * xi).exp()),
            }
        });
        Self {
            far_slope: slope(&far),
            near_slope: slope(&near),
            near_models,
            expected_far_slope: -(growth + n),
            expected_near_slope: growth - n,
            rows,
        }
    }

    /// CSV with header `r,lognorm,logG,sphere_count`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,lognorm,logG,sphere_count\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.r, crate::io::fmt_f64(r.log_norm), crate::io::fmt_f64(r.log_g), r.count);
        }
        s
    }
}

/// `int_{B_{-K}} 1/symbol - p^{-KN}/symbol(0)` from the sphere profile.
fn zero_cell_correction(spec: &SymbolSpec, geometry: &LatticeGeometry) -> f64 {
    let k = geometry.k() as i64;
    let mut total = 0.0;
    let mut j = -k;
    loop {
        let term: f64 = spec.sphere_values(j).iter().map(|(s, w)| w / s).sum();
        total += term;
        if term <= SERIES_REL_TOL * total || j < -k - 4000 {
            break;
        }
        j -= 1;
    }
    total - geometry.cell_volume() / spec.floor()
}

fn high_frequency_tail(spec: &SymbolSpec, geometry: &LatticeGeometry) -> f64 {
    if spec.growth_exponent() <= geometry.dim() as f64 {
        return f64::INFINITY;
    }
    let k = geometry.k() as i64;
    let mut total = 0.0;
    for j in k + 1..k + 100_000 {
        let vals = spec.sphere_values(j);
        let smin = vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
        let vol: f64 = vals.iter().map(|v| v.1).sum();
        let term = vol / smin;
        total += term;
        if term <= SERIES_REL_TOL * total {
            break;
        }
    }
    total
}

/// `(1 - p^{-N}) sum_{j <= -r} p^{jN}/sigma_j - p^{-rN}/sigma_{1-r}`, the
/// continuum Green function on the sphere `||x||_p = p^r` of a radial
/// symbol with profile `sigma`. `floor` must bound `sigma` from below; the
/// infinite sum is truncated once its remainder is below `tol`.
pub fn radial_oracle(p: u64, n: usize, sigma: &dyn Fn(i64) -> f64, floor: f64, r: i64, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 || floor.is_nan() || floor <= 0.0 {
        return Err(Error::Invalid("tolerance and floor must be positive".into()));
    }
    let pf = p as f64;
    let nn = n as f64;
    let shell = 1.0 - pf.powf(-nn);
    let mut sum = 0.0;
    let mut j = -r;
    loop {
        sum += shell * pf.powf(j as f64 * nn) / sigma(j);
        // remainder over j' < j is at most p^{(j-1)N}/floor
        if pf.powf((j - 1) as f64 * nn) / floor <= tol {
            break;
        }
        j -= 1;
        if j < -r - 100_000 {
            return Err(Error::ToleranceUnreachable(tol));
        }
    }
    let value = sum - pf.powf(-(r as f64) * nn) / sigma(1 - r);
    if tol < f64::EPSILON * sum.abs() {
        return Err(Error::ToleranceUnreachable(tol));
    }
    Ok(value)
}

/// [`radial_oracle`] for a symbol whose sphere profile is radial.
pub fn radial_oracle_for(spec: &SymbolSpec, r: i64, tol: f64) -> Result<f64> {
    if !spec.profile().is_radial() {
        return Err(Error::Invalid("symbol is not radial".into()));
    }
    let sigma = |j: i64| spec.sphere_values(j)[0].0;
    radial_oracle(spec.p(), spec.dim(), &sigma, spec.floor(), r, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::catalog;

    fn spec(p: u64, alpha: f64, m: f64) -> SymbolSpec {
        SymbolSpec::l_power(catalog::power(p, 2).unwrap(), alpha, m).unwrap()
    }

    #[test]
    fn oracle_matches_lattice_far_from_origin() {
        let s = spec(2, 1.0, 1.0);
        let g = LatticeGeometry::new(2, 1, 4).unwrap();
        let green = GreenFunction::build(&s, g).unwrap();
        for i in 1..g.len() {
            if green.continuum_error_bound(i) == 0.0 {
                let r = g.norm_exponent(i).unwrap();
                let want = radial_oracle_for(&s, r, 1e-15).unwrap();
                assert!((green.continuum_value(i) - want).abs() < 1e-9 * want.abs(), "r={r}");
            }
        }
    }

    #[test]
    fn integral_is_reciprocal_mass() {
        let s = spec(3, 1.0, 0.7);
        let g = LatticeGeometry::new(3, 1, 2).unwrap();
        let green = GreenFunction::build(&s, g).unwrap();
        let total: f64 = green.spatial().iter().sum::<f64>() * g.cell_volume();
        assert!((total - 1.0 / 0.49).abs() < 1e-12);
    }

    #[test]
    fn large_mass_suppresses_off_origin_values() {
        let s_small = |m: f64| radial_oracle_for(&spec(2, 1.0, m), 1, 1e-16).unwrap();
        let ratio = s_small(20.0) / s_small(40.0);
        assert!((ratio - 16.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn rejects_unreachable_tolerance() {
        assert!(matches!(radial_oracle_for(&spec(2, 1.0, 1.0), 0, 1e-40), Err(Error::ToleranceUnreachable(_))));
    }

    #[test]
    fn tail_is_infinite_for_slow_symbols() {
        let g = LatticeGeometry::new(3, 1, 2).unwrap();
        let green = GreenFunction::build(&spec(3, 0.25, 1.0), g).unwrap();
        assert!(green.tail_bound().is_infinite());
        let green = GreenFunction::build(&spec(3, 1.0, 1.0), g).unwrap();
        assert!(green.tail_bound().is_finite() && green.tail_bound() > 0.0);
    }
}
