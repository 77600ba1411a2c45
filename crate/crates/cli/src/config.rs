use std::fs;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use padic_qft::green::GreenFunction;
use padic_qft::io::read_field;
use padic_qft::lattice::{LatticeField, LatticeGeometry};
use padic_qft::noise::{InteractionH, LevySpec};
use padic_qft::symbols::{catalog, EllipticPolynomial, SymbolSpec, Term, Variant};
use serde::{Deserialize, Serialize};

/// Inline JSON when `arg` starts with `{` or `[`, otherwise a file path.
pub fn json_arg(arg: &str) -> Result<String> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        Ok(arg.to_string())
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading {arg}"))
    }
}

fn default_beta() -> f64 {
    1.0
}

/// Everything needed to build a Green function.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenConfig {
    pub p: u64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: u32,
    pub alpha: f64,
    pub m: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub variant: Option<Variant>,
    /// Terms of `l`; the catalog form for `N` when absent.
    #[serde(default)]
    pub poly: Option<Vec<Term>>,
}

impl GreenConfig {
    pub fn load(arg: &str) -> Result<Self> {
        serde_json::from_str(&json_arg(arg)?).context("parsing Green config")
    }

    pub fn polynomial(&self) -> Result<EllipticPolynomial> {
        let l = match &self.poly {
            Some(terms) => EllipticPolynomial::new(self.p, terms.clone())?,
            None => default_polynomial(self.p, self.n)?,
        };
        if l.dim() != self.n {
            bail!("polynomial has {} variables but N = {}", l.dim(), self.n);
        }
        Ok(l)
    }

    pub fn geometry(&self) -> Result<LatticeGeometry> {
        Ok(LatticeGeometry::new(self.p, self.n, self.k)?)
    }

    pub fn spec(&self) -> Result<SymbolSpec> {
        let variant = self.variant.unwrap_or(Variant::LPower);
        Ok(SymbolSpec::new(self.polynomial()?, self.alpha, self.m, self.beta, variant)?)
    }

    pub fn build(&self) -> Result<GreenFunction> {
        Ok(GreenFunction::build(&self.spec()?, self.geometry()?)?)
    }
}

/// `xi^2`, the binary form, or the quaternary form for `N = 1, 2, 4`.
pub fn default_polynomial(p: u64, n: usize) -> Result<EllipticPolynomial> {
    Ok(match n {
        1 => catalog::power(p, 2)?,
        2 => catalog::binary(p)?,
        4 => catalog::quaternary(p)?,
        _ => bail!("no catalog elliptic form for N = {n}; pass one with --poly"),
    })
}

pub fn load_h(arg: Option<&str>) -> Result<InteractionH> {
    match arg {
        Some(a) => InteractionH::from_json(&json_arg(a)?).context("parsing H"),
        None => Ok(InteractionH::zero()),
    }
}

pub fn load_levy(arg: &str) -> Result<LevySpec> {
    let spec: LevySpec = serde_json::from_str(&json_arg(arg)?).context("parsing Levy spec")?;
    spec.validate()?;
    Ok(spec)
}

/// `(1 + i/2)` times the indicator of `i + Z_p^N`, for `i = 0..count`.
pub fn default_funcs(geometry: LatticeGeometry, count: usize) -> Vec<LatticeField> {
    let unit = geometry.p().pow(geometry.k()) % geometry.side() as u64;
    (0..count)
        .map(|i| {
            let mut coords = vec![0u64; geometry.dim()];
            coords[0] = (i as u64 * unit) % geometry.side() as u64;
            let ball = LatticeField::ball_indicator(geometry, 0, geometry.index(&coords));
            &ball * Complex64::new(1.0 + i as f64 / 2.0, 0.0)
        })
        .collect()
}

/// Comma-separated field CSVs, or `count` default functions.
pub fn load_funcs(list: Option<&str>, geometry: LatticeGeometry, count: usize) -> Result<Vec<LatticeField>> {
    let Some(list) = list else {
        return Ok(default_funcs(geometry, count));
    };
    let fs = list
        .split(',')
        .map(|p| {
            let f = read_field(std::path::Path::new(p.trim())).with_context(|| format!("reading test function {p}"))?;
            if f.geometry() != &geometry {
                bail!("{p} lives on {} but the run uses {geometry}", f.geometry());
            }
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;
    if fs.len() < count {
        bail!("need {count} test functions, got {}", fs.len());
    }
    Ok(fs)
}

pub fn parse_ints(s: &str) -> Result<Vec<i64>> {
    s.split(',').map(|v| v.trim().parse::<i64>().with_context(|| format!("bad integer {v:?}"))).collect()
}
