use num_complex::Complex64;
use padic_qft::green::GreenFunction;
use padic_qft::lattice::{convolve, dft, LatticeField, LatticeGeometry};
use padic_qft::noise::{Atom, InteractionH, LevySpec};
use padic_qft::padic::{PadicRational, PadicVector};
use padic_qft::schwinger::{analytic_schwinger, bell_number, PartitionTable};
use padic_qft::symbols::{catalog, SymbolSpec};
use padic_qft::wick::{self, ChaosVector, Factor, Term};
use proptest::prelude::*;

fn primes() -> impl Strategy<Value = u64> {
    prop_oneof![Just(2u64), Just(3), Just(5), Just(7)]
}

fn odd_primes() -> impl Strategy<Value = u64> {
    prop_oneof![Just(3u64), Just(5), Just(7), Just(11)]
}

fn rational(p: u64) -> impl Strategy<Value = PadicRational> {
    (-10_000i64..10_000, 0u32..5).prop_map(move |(n, k)| PadicRational::new(p, n, k).unwrap())
}

fn field(g: LatticeGeometry) -> impl Strategy<Value = LatticeField> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), g.len())
        .prop_map(move |v| LatticeField::new(g, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap())
}

fn real_field(g: LatticeGeometry) -> impl Strategy<Value = LatticeField> {
    prop::collection::vec(-1.0f64..1.0, g.len()).prop_map(move |v| LatticeField::from_real(g, &v).unwrap())
}

fn small() -> LatticeGeometry {
    LatticeGeometry::new(3, 1, 1).unwrap()
}

fn chaos(g: LatticeGeometry, max_order: usize, n_max: usize) -> impl Strategy<Value = ChaosVector> {
    let term = (1..=max_order, -1.0f64..1.0, prop::collection::vec(real_field(g), max_order));
    (-1.0f64..1.0, prop::collection::vec(term, 0..4)).prop_map(move |(c0, ts)| {
        let mut terms = vec![Term::new(Complex64::new(c0, 0.0), Vec::new())];
        for (order, w, fs) in ts {
            terms.push(Term::new(Complex64::new(w, 0.0), fs.into_iter().take(order).map(Factor::new).collect()));
        }
        ChaosVector::from_terms(g, n_max, terms)
    })
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_ultrametric_and_multiplicative((x, y) in primes().prop_flat_map(|p| (rational(p), rational(p)))) {
        prop_assert!((&x + &y).norm() <= x.norm().max(y.norm()));
        prop_assert_eq!((&x * &y).norm(), x.norm() * y.norm());
        if x.norm() != y.norm() {
            prop_assert_eq!((&x + &y).norm(), x.norm().max(y.norm()));
        }
    }

    #[test]
    fn character_is_additive((x, y) in primes().prop_flat_map(|p| (rational(p), rational(p)))) {
        prop_assert!(close((&x + &y).character(), x.character() * y.character(), 1e-12));
        let frac = x.fractional_part();
        prop_assert!(frac >= num_rational::BigRational::from_integer(0.into()));
        prop_assert!(frac < num_rational::BigRational::from_integer(1.into()));
    }

    #[test]
    fn character_is_trivial_on_integers(p in primes(), n in -100_000i64..100_000) {
        prop_assert_eq!(PadicRational::from_integer(p, n).unwrap().character(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn parseval_and_convolution((f, h) in (field(LatticeGeometry::new(3, 1, 2).unwrap()), field(LatticeGeometry::new(3, 1, 2).unwrap()))) {
        let (fh, hh) = (dft(&f), dft(&h));
        prop_assert!((fh.norm0() - f.norm0()).abs() <= 1e-12 * f.norm0());
        let lhs = dft(&convolve(&f, &h).unwrap());
        prop_assert!(lhs.max_abs_diff(&fh.pointwise(&hh)) <= 1e-12 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn translation_is_a_phase(f in field(LatticeGeometry::new(2, 2, 1).unwrap()), shift in 0usize..16) {
        let g = *f.geometry();
        let moved = dft(&f.translate(shift));
        let a = g.point(shift);
        let fh = dft(&f);
        // f(x - a) has transform chi(xi . a) f^(xi).
        for xi in 0..g.len() {
            let want = fh.values()[xi] * g.point(xi).dot(&a).character();
            prop_assert!(close(moved.values()[xi], want, 1e-12));
        }
    }

    #[test]
    fn binary_form_is_norm_squared(p in odd_primes(), a in -500i64..500, b in -500i64..500, k in 0u32..4) {
        prop_assume!(a != 0 || b != 0);
        let l = catalog::binary(p).unwrap();
        let x = PadicVector::from_scaled(p, &[a, b], k).unwrap();
        prop_assert_eq!(l.padic_abs(&x).unwrap(), x.norm().powi(2));
    }

    #[test]
    fn symbol_is_homogeneous(p in odd_primes(), a in 1i64..500, b in -500i64..500, j in 0u32..3) {
        let l = catalog::binary(p).unwrap();
        let x = PadicVector::from_scaled(p, &[a, b], 0).unwrap();
        let lam = PadicRational::new(p, 1, j).unwrap();
        let scaled = l.padic_abs(&x.scale(&lam)).unwrap();
        prop_assert_eq!(scaled, lam.norm().powi(2) * l.padic_abs(&x).unwrap());
    }

    #[test]
    fn green_inverts_the_operator(alpha in 0.5f64..2.5, m in 0.2f64..2.0, f in real_field(LatticeGeometry::new(3, 1, 2).unwrap())) {
        let spec = SymbolSpec::l_power(catalog::power(3, 2).unwrap(), alpha, m).unwrap();
        let green = GreenFunction::build(&spec, *f.geometry()).unwrap();
        let back = spec.apply(&green.apply(&f).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&f) <= 1e-10);
        let g = *f.geometry();
        for x in 0..g.len() {
            let (a, b) = (green.spatial()[x], green.spatial()[g.neg_index(x)]);
            prop_assert!((a - b).abs() <= 1e-12 * green.spatial()[0].abs());
        }
    }

    #[test]
    fn cumulant_bridge(a in -2.0f64..2.0, sigma in 0.0f64..2.0, atoms in prop::collection::vec((-2.0f64..2.0, 0.0f64..3.0), 0..4)) {
        let spec = LevySpec::new(a, sigma, atoms.into_iter().map(|(s, mass)| Atom { s, mass }).collect()).unwrap();
        let h = InteractionH::from_levy(&spec, 6);
        for n in 1..=6 {
            prop_assert!((h.cumulant(n).re - spec.cumulant(n)).abs() <= 1e-12 * (1.0 + spec.cumulant(n).abs()));
        }
        prop_assert_eq!(spec.eval(0.0), Complex64::new(0.0, 0.0));
        for t in [-3.0, -0.5, 0.7, 2.0] {
            prop_assert!(spec.eval(t).re <= 1e-12);
        }
    }

    #[test]
    fn s_transform_is_multiplicative(a in chaos(small(), 3, 6), b in chaos(small(), 3, 6), f in real_field(small())) {
        let lhs = wick::wick_product(&a, &b).unwrap().s_transform(&f);
        prop_assert!(close(lhs, a.s_transform(&f) * b.s_transform(&f), 1e-10));
    }

    #[test]
    fn wick_polynomial_maps_through_s(phi in chaos(small(), 2, 6), c in prop::collection::vec(-1.0f64..1.0, 4), f in real_field(small())) {
        let coeffs: Vec<Complex64> = c.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        let z0 = phi.expectation();
        let lifted = wick::wick_analytic(&coeffs[..3], z0, &phi).unwrap();
        let s = phi.s_transform(&f) - z0;
        let want = coeffs[0] + coeffs[1] * s + coeffs[2] * s * s;
        prop_assert!(close(lifted.s_transform(&f), want, 1e-10));
    }

    #[test]
    fn t_and_s_transforms_agree(phi in chaos(small(), 3, 3), g in real_field(small())) {
        let ig = &g * Complex64::i();
        let q = g.pairing(&g);
        let via_s = phi.s_transform(&ig) * (-q / 2.0).exp();
        prop_assert!(close(phi.t_transform(&g), via_s, 1e-10));
    }

    #[test]
    fn schwinger_is_symmetric_and_translation_invariant(
        fs in prop::collection::vec(real_field(LatticeGeometry::new(3, 1, 2).unwrap()), 4),
        h in prop::collection::vec(-0.5f64..0.5, 4),
        shift in 0usize..81,
    ) {
        let g = *fs[0].geometry();
        let green = GreenFunction::build(&SymbolSpec::l_power(catalog::power(3, 2).unwrap(), 1.0, 1.0).unwrap(), g).unwrap();
        let h = InteractionH::from_real(&h);
        let s = analytic_schwinger(&h, &green, &fs).unwrap();
        let rev: Vec<LatticeField> = fs.iter().rev().cloned().collect();
        prop_assert!((analytic_schwinger(&h, &green, &rev).unwrap() - s).abs() <= 1e-12 * (1.0 + s.abs()));
        let moved: Vec<LatticeField> = fs.iter().map(|f| f.translate(shift)).collect();
        prop_assert!((analytic_schwinger(&h, &green, &moved).unwrap() - s).abs() <= 1e-10 * (1.0 + s.abs()));
    }
}

#[test]
fn partition_tables_match_bell_numbers() {
    for n in 1..=8 {
        let table = PartitionTable::new(n).unwrap();
        assert_eq!(table.len() as u128, bell_number(n));
        for part in &table.partitions {
            let mut seen: Vec<usize> = part.iter().flatten().copied().collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
        }
    }
    assert!(PartitionTable::new(13).is_err());
}
