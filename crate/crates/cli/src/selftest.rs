//! Fast invariant checks over every layer, one PASS/FAIL line each.

use std::fmt::Write as _;

use anyhow::Result;
use num_complex::Complex64;
use padic_qft::green::{radial_oracle_for, GreenFunction};
use padic_qft::lattice::{dft, idft, naive_dft, Direction, LatticeField, LatticeGeometry};
use padic_qft::noise::{bochner_validate, default_grid, h_to_levy, sample_gaussian_white, InteractionH, LevySpec};
use padic_qft::padic::PadicVector;
use padic_qft::schwinger::{
    all_permutations, analytic_schwinger, bell_number, invariance_check, os4_symmetry_check, EuclideanTransform, Source,
};
use padic_qft::symbols::{catalog, EllipticPolynomial, Ellipticity, SymbolSpec, Term};
use padic_qft::wick::{self, ChaosVector};
use serde_json::json;

use crate::output::{Run, Status};

type Check = (&'static str, Result<(bool, String)>);

fn random_field(g: LatticeGeometry, seed: u64) -> LatticeField {
    let s = sample_gaussian_white(g, seed).to_field();
    &s * g.cell_volume().sqrt()
}

fn fourier() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (p, n, k) in [(2, 1, 2), (3, 1, 2), (5, 1, 1), (3, 2, 1)] {
        let g = LatticeGeometry::new(p, n, k)?;
        let f = random_field(g, p);
        let fh = dft(&f);
        worst = worst.max((f.norm0() - fh.norm0()).abs() / f.norm0());
        worst = worst.max(dft(&fh).max_abs_diff(&f.reflect()) / f.max_abs());
        worst = worst.max(idft(&fh).max_abs_diff(&f) / f.max_abs());
        worst = worst.max(fh.max_abs_diff(&naive_dft(&f, Direction::Forward)) / fh.max_abs());
    }
    Ok((worst < 1e-10, format!("worst relative error {worst:.2e}")))
}

fn green_oracle() -> Result<(bool, String)> {
    let spec = SymbolSpec::l_power(catalog::power(3, 2)?, 1.0, 1.0)?;
    let g = GreenFunction::build(&spec, LatticeGeometry::new(3, 1, 4)?)?;
    let mut worst: f64 = 0.0;
    for r in 1..=3 {
        let idx = g.geometry().index_of(&PadicVector::from_scaled(3, &[3i64.pow(4 - r as u32)], 4)?)?;
        let want = radial_oracle_for(&spec, r, 1e-14)?;
        worst = worst.max((g.continuum_value(idx) - want).abs() / want.abs());
    }
    Ok((worst < 1e-8, format!("worst relative error {worst:.2e}")))
}

fn catalog_forms() -> Result<(bool, String)> {
    let q = catalog::quaternary(3)?.ellipticity_check(4)?;
    let bad =
        EllipticPolynomial::new(5, vec![Term { coeff: 1, exponents: vec![2, 0] }, Term { coeff: 1, exponents: vec![0, 2] }])?
            .ellipticity_check(4)?;
    let ok = matches!(q, Ellipticity::Elliptic { .. }) && matches!(bad, Ellipticity::NotElliptic { .. });
    Ok((ok, "quaternary form at p=3 certified, x^2+y^2 at p=5 has a witness".into()))
}

fn bell() -> Result<(bool, String)> {
    let got: Vec<u128> = (1..=5).map(bell_number).collect();
    Ok((got == [1, 2, 5, 15, 52], format!("{got:?}")))
}

fn homomorphism() -> Result<(bool, String)> {
    let g = LatticeGeometry::new(3, 1, 1)?;
    let mut worst: f64 = 0.0;
    for s in 0..10 {
        let a =
            ChaosVector::first_order(&random_field(g, 3 * s), 3).add(&ChaosVector::constant(g, 3, Complex64::new(0.4, 0.0)))?;
        let b = wick::wick_product(&ChaosVector::first_order(&random_field(g, 3 * s + 1), 1), &a)?;
        let f = random_field(g, 3 * s + 2);
        let lhs = wick::wick_product(&a, &b)?.s_transform(&f);
        let rhs = a.s_transform(&f) * b.s_transform(&f);
        worst = worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
    }
    Ok((worst < 1e-10, format!("worst error {worst:.2e}")))
}

fn levy() -> Result<(bool, String)> {
    let gauss = bochner_validate(&LevySpec::gaussian(1.0), &default_grid(), 1e-10);
    let quartic = InteractionH::from_real(&[0.0, 0.0, 0.0, 24.0]);
    let rejected = bochner_validate(&h_to_levy(&quartic), &default_grid(), 1e-10);
    Ok((gauss.is_plausible() && !rejected.is_plausible(), format!("{gauss:?}; {rejected:?}")))
}

fn schwinger_routes() -> Result<(bool, String)> {
    let g = LatticeGeometry::new(3, 1, 1)?;
    let green = GreenFunction::build(&SymbolSpec::l_power(catalog::power(3, 2)?, 1.0, 1.0)?, g)?;
    let h = InteractionH::from_real(&[0.1, -0.2, 0.3]);
    let fs: Vec<LatticeField> = (0..3).map(|s| random_field(g, 40 + s)).collect();
    let phi = wick::phi_h_convolved(&h, &green, 3)?;
    let a = analytic_schwinger(&h, &green, &fs)?;
    let c = phi.polarized_moment(&fs)?.re;
    let src = Source::Analytic { h: &h, green: &green };
    let os4 = os4_symmetry_check(&src, &fs, &all_permutations(3))?.iter().all(|r| r.pass);
    let l = green.spec().polynomial().clone();
    let shift = PadicVector::from_scaled(3, &[1], 0)?;
    let transforms = [EuclideanTransform::translation(shift, &l)?, EuclideanTransform::negation(&l)?];
    let os2 = invariance_check(&src, &transforms, std::slice::from_ref(&fs))?.iter().all(|r| r.pass);
    let diff = (a - c).abs() / (1.0 + a.abs());
    Ok((diff < 1e-10 && os4 && os2, format!("analytic vs chaos {diff:.2e}, OS4 {os4}, OS2 {os2}")))
}

fn phi_h_mean() -> Result<(bool, String)> {
    let g = LatticeGeometry::new(2, 1, 1)?;
    let phi = wick::phi_h(&InteractionH::from_real(&[0.5, 0.25, -0.1]), g, 4)?;
    let e = phi.expectation();
    Ok((e == Complex64::new(1.0, 0.0), format!("E(Phi_H) = {e}")))
}

pub fn run(run: &mut Run) -> Result<Status> {
    let checks: Vec<Check> = vec![
        ("fourier", fourier()),
        ("green-oracle", green_oracle()),
        ("elliptic-catalog", catalog_forms()),
        ("bell-numbers", bell()),
        ("s-homomorphism", homomorphism()),
        ("levy-validator", levy()),
        ("schwinger-routes", schwinger_routes()),
        ("phi-h-mean", phi_h_mean()),
    ];
    let mut csv = String::from("check,pass,detail\n");
    let mut all = true;
    let mut report = Vec::new();
    for (name, res) in checks {
        let (pass, detail) = res.unwrap_or_else(|e| (false, format!("error: {e:#}")));
        all &= pass;
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        let _ = writeln!(csv, "{name},{pass},\"{}\"", detail.replace('"', "'"));
        report.push(json!({ "check": name, "pass": pass, "detail": detail }));
    }
    run.write(None, "selftest.csv", &csv)?;
    run.finish(json!({}), json!({}), json!(report), Status::from_pass(all))
}
