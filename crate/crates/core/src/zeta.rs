//! The Jacobi zeta function `Zn(z)`, `v = z/(2K)`.
//!
//! ```text
//! fourier            (2π/K) Σ_{n≥1} q^n/(1-q^{2n}) sin(nπz/K)
//! rational_form      (π/2K) sin(2πv) Σ_k 1/(sin²πv - sin²((k+½)πτ))
//! theorem6_canonical (π/2K) sin(2πv) Σ_p p c_{2p} sin^{2p-2}(πv)
//! theorem6_literal   (π/2K) sin(2πv) Σ_k Σ_p (sin πv / sin((k+½)πτ))^{2p}
//! log_derivative     (1/2K) d/dz log θ4(z/(2K)), by central differences
//! ```
//!
//! The Fourier series is authoritative. The canonical form is the derivative
//! of the θ4 expansion; the literal one equals `-sin²(πv)` times it. The
//! literal log-derivative carries one factor `1/(2K)` more than the other
//! routes, which the consistency report measures by a least-squares fit.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::complex_core::{complex_log_principal, sum_until_negligible, Complex, TruncationPolicy, ZERO};
use crate::elliptic::{double_quarter_period, modulus_pair, sn_theta, EllipticPoint};
use crate::error::{Error, Result};
use crate::report_io::{Deviation, DeviationScale, Expectation, Measurement, VerificationReport};
use crate::theta_classical::{in_strip, theta4_series, LatticeParameter, StripDomain};
use crate::theta_expansion::{exponent_sum, Summation};
use crate::trig_coefficients::{convergence_ratio, CoefficientTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZetaRoute {
    LogDerivative,
    Fourier,
    RationalForm,
    Theorem6Literal,
    Theorem6Canonical,
}

impl ZetaRoute {
    pub const ALL: [ZetaRoute; 5] = [
        ZetaRoute::LogDerivative,
        ZetaRoute::Fourier,
        ZetaRoute::RationalForm,
        ZetaRoute::Theorem6Literal,
        ZetaRoute::Theorem6Canonical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ZetaRoute::LogDerivative => "log_derivative",
            ZetaRoute::Fourier => "fourier",
            ZetaRoute::RationalForm => "rational_form",
            ZetaRoute::Theorem6Literal => "theorem6_literal",
            ZetaRoute::Theorem6Canonical => "theorem6_canonical",
        }
    }
}

/// Step of the central difference in the log-derivative route.
pub const LOG_DERIVATIVE_STEP: f64 = 1e-5;

pub fn zeta(
    z: Complex,
    lat: &LatticeParameter,
    route: ZetaRoute,
    table: &CoefficientTable,
    policy: &TruncationPolicy,
) -> Result<Complex> {
    if lat.is_degenerate() {
        return Ok(ZERO);
    }
    let two_k = double_quarter_period(lat, policy)?;
    let big_k = 0.5 * two_k;
    let v = z / two_k;
    match route {
        ZetaRoute::Fourier => zeta_fourier(z, lat, big_k, policy),
        ZetaRoute::LogDerivative => {
            let h = LOG_DERIVATIVE_STEP;
            let up = theta4_series((z + h) / two_k, lat, policy)?;
            let down = theta4_series((z - h) / two_k, lat, policy)?;
            let d = complex_log_principal(up / down)? / (2.0 * h);
            Ok(d / two_k)
        }
        ZetaRoute::RationalForm => {
            check_half_strip(v, lat)?;
            let s2 = (PI * v).sin().powi(2);
            let mut pole = None;
            let sum: Complex = sum_until_negligible(
                |k| {
                    let sk = ((k as f64 + 0.5) * PI * lat.tau()).sin();
                    if !(sk.re.is_finite() && sk.im.is_finite()) {
                        return ZERO;
                    }
                    let den = s2 - sk * sk;
                    if den.norm() < 1e-300 {
                        pole.get_or_insert(k);
                        return ZERO;
                    }
                    1.0 / den
                },
                policy,
                "zeta rational form",
            )?;
            if let Some(k) = pole {
                return Err(Error::PoleEncountered(format!(
                    "denominator {k} of the rational zeta form vanishes at z = {z}"
                )));
            }
            Ok(PI / two_k * (2.0 * PI * v).sin() * sum)
        }
        ZetaRoute::Theorem6Canonical | ZetaRoute::Theorem6Literal => {
            check_half_strip(v, lat)?;
            let s2 = (PI * v).sin().powi(2);
            let pre = PI / two_k * (2.0 * PI * v).sin();
            // Σ_p p c_{2p} X^{p-1}, from the same table as the θ4 expansion
            let weighted: Vec<Complex> = table
                .values()
                .iter()
                .enumerate()
                .map(|(i, c)| (i + 1) as f64 * c)
                .collect();
            let weighted = CoefficientTable::from_values(*lat, weighted, table.method(), None)?;
            let series = exponent_sum(&weighted, s2, Summation::Adaptive, policy)?;
            if route == ZetaRoute::Theorem6Canonical {
                if s2 == ZERO {
                    return Ok(ZERO);
                }
                // series = Σ p c_{2p} X^p; divide one power back out
                Ok(pre * series / s2)
            } else {
                // Σ_k Σ_p (X x_k)^p = -Σ_p p c_{2p} X^p
                Ok(-pre * series)
            }
        }
    }
}

fn check_half_strip(v: Complex, lat: &LatticeParameter) -> Result<()> {
    if in_strip(v, lat, &StripDomain::half()) {
        Ok(())
    } else {
        Err(Error::OutsideStrip {
            v: v.to_string(),
            bound: StripDomain::half().bound(lat),
        })
    }
}

fn zeta_fourier(z: Complex, lat: &LatticeParameter, big_k: Complex, policy: &TruncationPolicy) -> Result<Complex> {
    let w = PI * z / big_k;
    let sum: Complex = sum_until_negligible(
        |i| {
            let n = (i + 1) as f64;
            let qn = lat.nome_power(n);
            qn / (1.0 - qn * qn) * (n * w).sin()
        },
        policy,
        "zeta Fourier series",
    )?;
    Ok(2.0 * PI / big_k * sum)
}

/// `Z(u+w) - Z(u) - Z(w) + k² sn(u) sn(w) sn(u+w)` with the Fourier route.
pub fn zeta_addition_residual(
    u: Complex,
    w: Complex,
    lat: &LatticeParameter,
    policy: &TruncationPolicy,
) -> Result<Complex> {
    if lat.is_degenerate() {
        return Ok(ZERO);
    }
    let big_k = 0.5 * double_quarter_period(lat, policy)?;
    let z = |x: Complex| zeta_fourier(x, lat, big_k, policy);
    let sn = |x: Complex| -> Result<Complex> { sn_theta(&EllipticPoint::from_u(x, lat, policy)?, policy) };
    let (k, _) = modulus_pair(lat, policy)?;
    Ok(z(u + w)? - z(u)? - z(w)? + k * k * sn(u)? * sn(w)? * sn(u + w)?)
}

/// `n` real points spread over `(0, 2K)`, endpoints excluded.
pub fn zeta_grid(lat: &LatticeParameter, n: usize, policy: &TruncationPolicy) -> Result<Vec<Complex>> {
    let two_k = double_quarter_period(lat, policy)?.re;
    Ok((1..=n).map(|i| Complex::new(two_k * i as f64 / (n + 1) as f64, 0.0)).collect())
}

/// Least-squares `λ` with `b ≈ λ·a`.
fn fit_scale(a: &[Complex], b: &[Complex]) -> Option<Complex> {
    let num: Complex = a.iter().zip(b).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = a.iter().map(|a| a.norm_sqr()).sum();
    if den > 0.0 {
        Some(num / den)
    } else {
        None
    }
}

/// Every route against the Fourier series on `grid`, plus periodicity,
/// oddness, the addition theorem and the log-derivative scale fit.
pub fn zeta_consistency_report(
    lat: &LatticeParameter,
    grid: &[Complex],
    table: &CoefficientTable,
    policy: &TruncationPolicy,
) -> Result<VerificationReport> {
    let q = lat.real_nome().ok_or_else(|| Error::InvalidParameter("zeta report needs a real nome".into()))?;
    if !(q <= 0.5) {
        return Err(Error::InvalidParameter(format!("q must be <= 0.5, got {q}")));
    }
    let mut rep = VerificationReport::new("zeta routes")
        .subject("Jacobi zeta function routes")
        .param("q", q)
        .param("n_points", grid.len())
        .param("P", table.max_order_p());
    let values: Vec<Vec<Option<Complex>>> = ZetaRoute::ALL
        .iter()
        .map(|&r| grid.iter().map(|&z| zeta(z, lat, r, table, policy).ok()).collect())
        .collect();
    let idx = |r: ZetaRoute| ZetaRoute::ALL.iter().position(|&x| x == r).unwrap();
    let fourier = &values[idx(ZetaRoute::Fourier)];
    let compare = |a: &[Option<Complex>], b: &[Option<Complex>], scale: Complex| {
        let mut d = Deviation::new();
        for (x, y) in a.iter().zip(b) {
            match (x, y) {
                (Some(x), Some(y)) => d.add(scale * x, *y),
                _ => d.add_failure(),
            }
        }
        d
    };
    let one = Complex::new(1.0, 0.0);

    let mut max_ratio: f64 = 0.0;
    for z in grid {
        let two_k = if lat.is_degenerate() { Complex::new(PI, 0.0) } else { double_quarter_period(lat, policy)? };
        max_ratio = max_ratio.max(convergence_ratio(lat, (PI * z / two_k).sin().powi(2)));
    }
    rep.set_number("theorem6_convergence_ratio_max", max_ratio);

    for (route, expectation) in [
        (ZetaRoute::RationalForm, Measurement::within(1e-10, DeviationScale::Absolute)),
        (ZetaRoute::Theorem6Canonical, Measurement::within(1e-9, DeviationScale::Absolute)),
        (ZetaRoute::Theorem6Literal, Expectation::Discrepancy),
    ] {
        let d = compare(&values[idx(route)], fourier, one);
        let expectation = if route == ZetaRoute::Theorem6Literal && d.max_abs <= 1e-10 {
            Expectation::Informational
        } else {
            expectation
        };
        rep.push(Measurement::new(format!("{} vs fourier", route.name()), route.name(), "fourier", &d, expectation));
    }
    let d = compare(&values[idx(ZetaRoute::Theorem6Canonical)], &values[idx(ZetaRoute::RationalForm)], one);
    rep.push(Measurement::new(
        "theorem6_canonical vs rational_form",
        "theorem6_canonical",
        "rational_form",
        &d,
        Measurement::within(1e-12, DeviationScale::Absolute),
    ));

    let log_d = &values[idx(ZetaRoute::LogDerivative)];
    let uncal = compare(log_d, fourier, one);
    let pairs: Vec<(Complex, Complex)> = log_d
        .iter()
        .zip(fourier)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .collect();
    let (a, b): (Vec<Complex>, Vec<Complex>) = pairs.into_iter().unzip();
    let lambda = fit_scale(&a, &b);
    rep.push(Measurement::new(
        "log_derivative vs fourier, uncalibrated",
        "log_derivative",
        "fourier",
        &uncal,
        if uncal.max_abs <= 1e-7 { Expectation::Informational } else { Expectation::Discrepancy },
    ));
    if lat.is_degenerate() {
        rep.set_param("log_derivative_scale", Value::Null);
    } else {
        let two_k = double_quarter_period(lat, policy)?;
        match lambda {
            Some(l) => {
                rep.set_number("log_derivative_scale", l.re);
                rep.set_number("log_derivative_scale_over_2K", (l / two_k).re);
                rep.set_number("two_K", two_k.re);
                let cal = compare(log_d, fourier, l);
                rep.push(Measurement::new(
                    "log_derivative vs fourier, calibrated",
                    "scale * log_derivative",
                    "fourier",
                    &cal,
                    Measurement::within(1e-7, DeviationScale::Absolute),
                ));
                let mut dl = Deviation::new();
                dl.add(l, two_k);
                rep.push(Measurement::new(
                    "log_derivative scale vs 2K",
                    "fitted scale",
                    "2K",
                    &dl,
                    Measurement::within(1e-6, DeviationScale::Relative),
                ));
            }
            None => rep.set_param("log_derivative_scale", Value::Null),
        }
    }

    if !lat.is_degenerate() {
        let two_k = double_quarter_period(lat, policy)?;
        let mut period = Deviation::new();
        let mut odd = Deviation::new();
        for &z in grid {
            let a = zeta(z, lat, ZetaRoute::Fourier, table, policy)?;
            period.add(zeta(z + two_k, lat, ZetaRoute::Fourier, table, policy)?, a);
            odd.add(-zeta(-z, lat, ZetaRoute::Fourier, table, policy)?, a);
        }
        rep.push(Measurement::new("period 2K", "Z(z+2K)", "Z(z)", &period, Measurement::within(1e-12, DeviationScale::Absolute)));
        rep.push(Measurement::new("oddness", "-Z(-z)", "Z(z)", &odd, Measurement::within(1e-12, DeviationScale::Absolute)));

        let mut add = Deviation::with_relative_floor(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..50 {
            let u = Complex::new(rng.gen_range(-1.0..1.0) * two_k.re, 0.0);
            let w = Complex::new(rng.gen_range(-1.0..1.0) * two_k.re, 0.0);
            match zeta_addition_residual(u, w, lat, policy) {
                Ok(r) => add.add(r, ZERO),
                Err(_) => add.add_failure(),
            }
        }
        rep.push(Measurement::new(
            "addition theorem",
            "Z(u+w) - Z(u) - Z(w)",
            "-k^2 sn u sn w sn(u+w)",
            &add,
            Measurement::within(1e-10, DeviationScale::Absolute),
        ));
    }
    Ok(rep)
}
