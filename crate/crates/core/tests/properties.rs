use proptest::prelude::*;
use radial_nodal::shooting::filter_admissible_with;
use radial_nodal::{c1_norm, phi, Nonlinearity, RadialProblem, SolutionProfile, SourceTerm};

fn power() -> impl Strategy<Value = Nonlinearity> {
    (1.05f64..4.0, 1.05f64..8.0, 0.2f64..3.0)
        .prop_map(|(p, q, a)| Nonlinearity::power_with_threshold(p, q, a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn inverse_branches_round_trip(nl in power(), x in 0.0f64..50.0) {
        let a = x;
        let up = nl.inverse_plus(nl.plus_domain() + a).unwrap();
        prop_assert!(up >= 0.0);
        prop_assert!((nl.eval(up) - (nl.plus_domain() + a)).abs() <= 1e-10 * (1.0 + nl.eval(up).abs()));
        let down = nl.inverse_minus(nl.minus_domain() + a).unwrap();
        prop_assert!(down <= 0.0);
        prop_assert!((nl.eval(down) - (nl.minus_domain() + a)).abs() <= 1e-10 * (1.0 + nl.eval(down).abs()));
    }

    #[test]
    fn inverse_plus_is_increasing_and_concave(nl in power(), y in 0.0f64..1e4, h in 1e-3f64..10.0) {
        let y0 = nl.plus_domain() + y;
        let (a, b, c) = (
            nl.inverse_plus(y0).unwrap(),
            nl.inverse_plus(y0 + h).unwrap(),
            nl.inverse_plus(y0 + 2.0 * h).unwrap(),
        );
        prop_assert!(b >= a && c >= b);
        prop_assert!(a - 2.0 * b + c <= 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn c1_norm_is_absolutely_homogeneous(
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..5),
        scale in -5.0f64..5.0,
        cosine in any::<bool>(),
    ) {
        let f = if cosine { SourceTerm::Cosine(coeffs) } else { SourceTerm::Polynomial(coeffs) };
        let base = c1_norm(&f);
        let scaled = c1_norm(&f.scaled(scale));
        prop_assert!((scaled - scale.abs() * base).abs() <= 1e-9 * (1.0 + scale.abs() * base));
    }

    #[test]
    fn csv_round_trip_preserves_nodes(amp in -5.0f64..5.0, k in 1u32..4, nodes in 8usize..200) {
        let p = RadialProblem::new(2, 40.0, SourceTerm::Zero, Nonlinearity::default()).unwrap();
        let w = k as f64 * std::f64::consts::PI;
        let prof = SolutionProfile::from_fn(
            &p,
            nodes,
            move |t| amp * (w * t).cos(),
            move |t| -amp * w * (w * t).sin(),
            move |t| -amp * w * w * (w * t).cos(),
        );
        let back = SolutionProfile::from_csv(&p, prof.to_csv().as_bytes()).unwrap();
        prop_assert_eq!(&back.t, &prof.t);
        prop_assert_eq!(&back.u, &prof.u);
        prop_assert_eq!(&back.du, &prof.du);
        // Hermite interpolation between nodes agrees to interpolation accuracy
        let mid = 0.5 * (prof.t[1] + prof.t[2]);
        prop_assert!((back.value(mid) - prof.value(mid)).abs() <= 1e-2 * (1.0 + amp.abs()));
    }

    #[test]
    fn phi_of_constant_profile_is_constant(c in -5.0f64..20.0, lambda in 2.0f64..500.0) {
        let p = RadialProblem::new(1, lambda, SourceTerm::Zero, Nonlinearity::default()).unwrap();
        let prof = SolutionProfile::from_fn(&p, 64, move |_| c, |_| 0.0, |_| 0.0);
        let level = lambda.sqrt().max(1.0);
        for t in [0.0, 0.123, 0.5, 0.999, 1.0] {
            prop_assert!((phi(t, &prof).unwrap() - (c - level)).abs() <= 1e-12 * (1.0 + level));
        }
    }

    #[test]
    fn admissibility_matches_curvature_sign(s in -5.0f64..30.0, lambda in 2.0f64..500.0, n in 1u32..4) {
        let p = RadialProblem::new(n, lambda, SourceTerm::Zero, Nonlinearity::default()).unwrap();
        let flat = SolutionProfile::from_fn(&p, 16, move |_| s, |_| 0.0, |_| 0.0);
        prop_assert_eq!(filter_admissible_with(&flat, 0.0), p.forcing(0.0, s) <= 0.0);
        let tilted = SolutionProfile::from_fn(&p, 16, move |t| s + t, |_| 1.0, |_| 0.0);
        prop_assert!(!filter_admissible_with(&tilted, 1e9));
    }
}
