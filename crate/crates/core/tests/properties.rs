use proptest::prelude::*;

use theta_expansions::complex_core::ZERO;
use theta_expansions::elliptic::{cn_theta, dn_theta, modulus_pair, sn_theta, EllipticPoint};
use theta_expansions::report_io::{
    aggregate_reports, deserialize_report, serialize_report, Deviation, DeviationScale, Expectation, ReportFormat,
};
use theta_expansions::theta_classical::{theta_constants, theta_series};
use theta_expansions::theta_expansion::{theta_via_expansion_with, ExpansionOptions, Summation};
use theta_expansions::trig_coefficients::{coefficients_closed_form, extract_coefficients_oracle};
use theta_expansions::zeta::{zeta, ZetaRoute};
use theta_expansions::{
    Complex, LatticeParameter, Measurement, StripDomain, ThetaKind, TruncationPolicy, Verdict, VerificationReport,
};

fn policy() -> TruncationPolicy {
    TruncationPolicy::default()
}

fn kind() -> impl Strategy<Value = ThetaKind> {
    prop::sample::select(ThetaKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn theta_period_one(q in 0.01f64..0.5, re in -1.0f64..1.0, im in -0.3f64..0.3, k in kind()) {
        let lat = LatticeParameter::from_nome(q).unwrap();
        let v = Complex::new(re, im);
        let a = theta_series(k, v, &lat, &policy()).unwrap();
        let b = theta_series(k, v + 1.0, &lat, &policy()).unwrap();
        let sign = if matches!(k, ThetaKind::Theta1 | ThetaKind::Theta2) { -1.0 } else { 1.0 };
        prop_assert!((b - sign * a).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn jacobi_quartic_identity(q in 0.0f64..0.6) {
        let lat = LatticeParameter::from_nome(q).unwrap();
        if lat.is_degenerate() {
            return Ok(());
        }
        let c = theta_constants(&lat, &policy()).unwrap();
        let lhs = c.theta3_0.powi(4);
        let rhs = c.theta2_0.powi(4) + c.theta4_0.powi(4);
        prop_assert!((lhs - rhs).norm() < 1e-13 * lhs.norm());
    }

    #[test]
    fn resummed_expansion_matches_series(q in 0.02f64..0.45, re in 0.01f64..0.99, frac in -0.9f64..0.9, k in kind()) {
        let lat = LatticeParameter::from_nome(q).unwrap();
        let v = Complex::new(re, frac * StripDomain::for_theta(k).bound(&lat));
        let table = coefficients_closed_form(&lat, 16, &policy()).unwrap();
        let opts = ExpansionOptions::default().with_summation(Summation::Resummed);
        let a = theta_via_expansion_with(k, v, &lat, &table, &policy(), opts).unwrap();
        let b = theta_series(k, v, &lat, &policy()).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * b.norm().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn squared_elliptic_relations(q in 0.01f64..0.4, u in -6.0f64..6.0) {
        let lat = LatticeParameter::from_nome(q).unwrap();
        let pt = EllipticPoint::from_u(Complex::new(u, 0.0), &lat, &policy()).unwrap();
        let sn = sn_theta(&pt, &policy()).unwrap();
        let cn = cn_theta(&pt, &policy()).unwrap();
        let dn = dn_theta(&pt, &policy()).unwrap();
        let (k, _) = modulus_pair(&lat, &policy()).unwrap();
        prop_assert!((sn * sn + cn * cn - 1.0).norm() < 1e-12);
        prop_assert!((dn * dn + k * k * sn * sn - 1.0).norm() < 1e-12);
    }

    #[test]
    fn zeta_is_odd(q in 0.01f64..0.4, u in 0.05f64..3.0) {
        let lat = LatticeParameter::from_nome(q).unwrap();
        let table = coefficients_closed_form(&lat, 32, &policy()).unwrap();
        let z = Complex::new(u, 0.0);
        let a = zeta(z, &lat, ZetaRoute::Fourier, &table, &policy()).unwrap();
        let b = zeta(-z, &lat, ZetaRoute::Fourier, &table, &policy()).unwrap();
        prop_assert!((a + b).norm() < 1e-13);
    }

    #[test]
    fn report_json_round_trip(devs in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..6), tol in 1e-12f64..1.0) {
        let mut rep = VerificationReport::new("round trip").subject("serialization");
        for (i, (a, b)) in devs.iter().enumerate() {
            let mut d = Deviation::new();
            d.add_real(*a, *b);
            let expectation = match i % 3 {
                0 => Measurement::within(tol, DeviationScale::Absolute),
                1 => Expectation::Discrepancy,
                _ => Expectation::Informational,
            };
            rep.push(Measurement::new(format!("m{i}"), "a", "b", &d, expectation));
        }
        rep.set_number("tol", tol);
        let back = deserialize_report(&serialize_report(&rep, ReportFormat::Json)).unwrap();
        prop_assert_eq!(back, rep);
    }

    #[test]
    fn aggregate_verdict_is_the_worst(verdicts in prop::collection::vec(0u8..3, 0..6)) {
        let reps: Vec<VerificationReport> = verdicts
            .iter()
            .map(|&v| {
                let mut rep = VerificationReport::new(format!("r{v}"));
                let mut d = Deviation::new();
                d.add_real(1.0, 0.0);
                let e = match v {
                    0 => Measurement::within(2.0, DeviationScale::Absolute),
                    1 => Expectation::Discrepancy,
                    _ => Measurement::within(0.5, DeviationScale::Absolute),
                };
                rep.push(Measurement::new("m", "a", "b", &d, e));
                rep
            })
            .collect();
        let expected = if verdicts.contains(&2) {
            Verdict::Fail
        } else if verdicts.contains(&1) {
            Verdict::DocumentedDiscrepancy
        } else {
            Verdict::Pass
        };
        prop_assert_eq!(aggregate_reports(&reps).verdict, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_form_matches_contour_oracle(q in 0.03f64..0.35) {
        let lat = LatticeParameter::from_nome(q).unwrap();
        let closed = coefficients_closed_form(&lat, 8, &policy()).unwrap();
        let oracle = extract_coefficients_oracle(&lat, 8, &policy()).unwrap();
        for (a, b) in closed.values().iter().zip(oracle.values()) {
            prop_assert!((a - b).norm() < 1e-8);
        }
        prop_assert_eq!(closed.values()[0].im, ZERO.im);
    }
}
