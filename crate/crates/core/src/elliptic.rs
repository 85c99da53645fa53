//! Jacobi elliptic functions.
//!
//! Ground truth is the theta quotient with `v = u/(2K)`:
//!
//! ```text
//! sn u = θ3(0)θ1(v) / (θ2(0)θ4(v))
//! cn u = θ4(0)θ2(v) / (θ2(0)θ4(v))
//! dn u = θ4(0)θ3(v) / (θ3(0)θ4(v))
//! ```
//!
//! The expansions write each quotient as a phase times `exp` of a signed
//! combination of `S(X) = Σ_p c_{2p} X^p` at
//! `A = sin²π(v+τ/2)`, `B = sin²πv`, `C = cos²(πτ/2)`, `D = cos²π(v+τ/2)`,
//! `E = cos²πv` and `1`. [`FormVariant::PaperLiteral`] uses the brackets as
//! printed, [`FormVariant::CanonicalDerived`] the ones obtained by dividing
//! the single-theta expansions:
//!
//! ```text
//! sn     = exp[iπv - iπ/2 + S(1) + S(A) - S(C) - S(B)]
//! cn     = exp[iπv        + S(D) - S(C) - S(B)]
//! dn     = exp[S(E) - S(1) - S(B)]
//! sn/cn  = exp[-iπ/2 + S(1) + S(A) - S(D)]
//! sn'    = cn · dn
//! ```

use std::f64::consts::PI;

use crate::complex_core::{complex_exp, Complex, TruncationPolicy, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::report_io::{Deviation, DeviationScale, Expectation, Measurement, VerificationReport};
use crate::theta_classical::{
    agm_k, elliptic_moduli, in_strip, theta1_series, theta2_series, theta3_series, theta4_series,
    theta_constants, LatticeParameter, StripDomain,
};
use crate::theta_expansion::{exponent_sum, Summation};
use crate::trig_coefficients::CoefficientTable;

/// An elliptic argument together with its theta argument `v = u/(2K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticPoint {
    pub u: Complex,
    pub v: Complex,
    pub lat: LatticeParameter,
}

/// `2K = πθ3(0)²`.
pub fn double_quarter_period(lat: &LatticeParameter, policy: &TruncationPolicy) -> Result<Complex> {
    let t3 = theta3_series(ZERO, lat, policy)?;
    Ok(PI * t3 * t3)
}

impl EllipticPoint {
    pub fn from_u(u: Complex, lat: &LatticeParameter, policy: &TruncationPolicy) -> Result<Self> {
        let two_k = double_quarter_period(lat, policy)?;
        Ok(Self { u, v: u / two_k, lat: *lat })
    }

    pub fn from_v(v: Complex, lat: &LatticeParameter, policy: &TruncationPolicy) -> Result<Self> {
        let two_k = double_quarter_period(lat, policy)?;
        Ok(Self { u: v * two_k, v, lat: *lat })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormVariant {
    PaperLiteral,
    CanonicalDerived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllipticFunction {
    Sn,
    Cn,
    Dn,
    SnOverCn,
    SnDerivative,
}

impl EllipticFunction {
    pub const ALL: [EllipticFunction; 5] = [
        EllipticFunction::Sn,
        EllipticFunction::Cn,
        EllipticFunction::Dn,
        EllipticFunction::SnOverCn,
        EllipticFunction::SnDerivative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EllipticFunction::Sn => "sn",
            EllipticFunction::Cn => "cn",
            EllipticFunction::Dn => "dn",
            EllipticFunction::SnOverCn => "sn/cn",
            EllipticFunction::SnDerivative => "sn'",
        }
    }
}

fn pole_guard(theta4_v: Complex, numerator: Complex, u: Complex) -> Result<()> {
    if theta4_v.norm() < 1e-13 * numerator.norm().max(1.0) {
        return Err(Error::PoleEncountered(format!("theta4(v) vanishes at u = {u}")));
    }
    Ok(())
}

pub fn sn_theta(pt: &EllipticPoint, policy: &TruncationPolicy) -> Result<Complex> {
    if pt.lat.is_degenerate() {
        return Ok((PI * pt.v).sin());
    }
    let c = theta_constants(&pt.lat, policy)?;
    let t1 = theta1_series(pt.v, &pt.lat, policy)?;
    let t4 = theta4_series(pt.v, &pt.lat, policy)?;
    pole_guard(t4, t1, pt.u)?;
    Ok(c.theta3_0 * t1 / (c.theta2_0 * t4))
}

pub fn cn_theta(pt: &EllipticPoint, policy: &TruncationPolicy) -> Result<Complex> {
    if pt.lat.is_degenerate() {
        return Ok((PI * pt.v).cos());
    }
    let c = theta_constants(&pt.lat, policy)?;
    let t2 = theta2_series(pt.v, &pt.lat, policy)?;
    let t4 = theta4_series(pt.v, &pt.lat, policy)?;
    pole_guard(t4, t2, pt.u)?;
    Ok(c.theta4_0 * t2 / (c.theta2_0 * t4))
}

pub fn dn_theta(pt: &EllipticPoint, policy: &TruncationPolicy) -> Result<Complex> {
    if pt.lat.is_degenerate() {
        return Ok(ONE);
    }
    let c = theta_constants(&pt.lat, policy)?;
    let t3 = theta3_series(pt.v, &pt.lat, policy)?;
    let t4 = theta4_series(pt.v, &pt.lat, policy)?;
    pole_guard(t4, t3, pt.u)?;
    Ok(c.theta4_0 * t3 / (c.theta3_0 * t4))
}

/// The reference value of `f` from theta quotients; `sn'` is `cn·dn`.
pub fn elliptic_theta(f: EllipticFunction, pt: &EllipticPoint, policy: &TruncationPolicy) -> Result<Complex> {
    match f {
        EllipticFunction::Sn => sn_theta(pt, policy),
        EllipticFunction::Cn => cn_theta(pt, policy),
        EllipticFunction::Dn => dn_theta(pt, policy),
        EllipticFunction::SnOverCn => Ok(sn_theta(pt, policy)? / cn_theta(pt, policy)?),
        EllipticFunction::SnDerivative => Ok(cn_theta(pt, policy)? * dn_theta(pt, policy)?),
    }
}

fn is_real_integer(x: Complex) -> bool {
    x.im == 0.0 && x.re.fract() == 0.0
}

/// Expansion of `f` with the chosen bracket and summation.
pub fn elliptic_expansion(
    f: EllipticFunction,
    pt: &EllipticPoint,
    table: &CoefficientTable,
    form: FormVariant,
    summation: Summation,
    policy: &TruncationPolicy,
) -> Result<Complex> {
    let lat = &pt.lat;
    if !table.lat().same_lattice(lat) {
        return Err(Error::InvalidParameter(
            "coefficient table belongs to a different lattice".into(),
        ));
    }
    if !lat.is_degenerate() && !in_strip(pt.v, lat, &StripDomain::half()) {
        return Err(Error::OutsideStrip {
            v: pt.v.to_string(),
            bound: StripDomain::half().bound(lat),
        });
    }
    let v = pt.v;
    let numerator_vanishes = match f {
        EllipticFunction::Sn | EllipticFunction::SnOverCn => is_real_integer(v),
        EllipticFunction::Cn => is_real_integer(v - 0.5),
        _ => false,
    };
    if numerator_vanishes {
        return Err(Error::NearZeroOfNumerator(format!("{} at u = {}", f.name(), pt.u)));
    }
    if lat.is_degenerate() {
        let s = (PI * v).sin();
        let c = (PI * v).cos();
        return Ok(match f {
            EllipticFunction::Sn => s,
            EllipticFunction::Cn | EllipticFunction::SnDerivative => c,
            EllipticFunction::Dn => ONE,
            EllipticFunction::SnOverCn => s / c,
        });
    }
    let half_tau = 0.5 * lat.tau();
    let sq = |z: Complex| z * z;
    let big_s = |x: Complex| exponent_sum(table, x, summation, policy);
    let a = || big_s(sq((PI * (v + half_tau)).sin()));
    let b = || big_s(sq((PI * v).sin()));
    let c = || big_s(sq((PI * half_tau).cos()));
    let d = || big_s(sq((PI * (v + half_tau)).cos()));
    let e = || big_s(sq((PI * v).cos()));
    let one = || big_s(ONE);
    let ipv = I * PI * v;
    let half_i = I * 0.5 * PI;
    let exponent = match (f, form) {
        (EllipticFunction::Sn, FormVariant::PaperLiteral) => ipv + a()? + b()? - c()? + one()?,
        (EllipticFunction::Sn, FormVariant::CanonicalDerived) => {
            ipv - half_i + one()? + a()? - c()? - b()?
        }
        (EllipticFunction::Cn, FormVariant::PaperLiteral) => -ipv + b()? - d()? - c()?,
        (EllipticFunction::Cn, FormVariant::CanonicalDerived) => ipv + d()? - c()? - b()?,
        (EllipticFunction::Dn, _) => e()? - b()? - one()?,
        (EllipticFunction::SnOverCn, FormVariant::PaperLiteral) => one()? + a()? - d()?,
        (EllipticFunction::SnOverCn, FormVariant::CanonicalDerived) => -half_i + one()? + a()? - d()?,
        (EllipticFunction::SnDerivative, FormVariant::PaperLiteral) => {
            -ipv + e()? - d()? - c()? - one()?
        }
        (EllipticFunction::SnDerivative, FormVariant::CanonicalDerived) => {
            // cn · dn
            ipv + d()? - c()? - b()? + e()? - b()? - one()?
        }
    };
    complex_exp(exponent)
}

pub fn sn_expansion(pt: &EllipticPoint, table: &CoefficientTable, form: FormVariant, policy: &TruncationPolicy) -> Result<Complex> {
    elliptic_expansion(EllipticFunction::Sn, pt, table, form, Summation::Adaptive, policy)
}

pub fn cn_expansion(pt: &EllipticPoint, table: &CoefficientTable, form: FormVariant, policy: &TruncationPolicy) -> Result<Complex> {
    elliptic_expansion(EllipticFunction::Cn, pt, table, form, Summation::Adaptive, policy)
}

pub fn dn_expansion(pt: &EllipticPoint, table: &CoefficientTable, form: FormVariant, policy: &TruncationPolicy) -> Result<Complex> {
    elliptic_expansion(EllipticFunction::Dn, pt, table, form, Summation::Adaptive, policy)
}

pub fn sn_over_cn_expansion(pt: &EllipticPoint, table: &CoefficientTable, form: FormVariant, policy: &TruncationPolicy) -> Result<Complex> {
    elliptic_expansion(EllipticFunction::SnOverCn, pt, table, form, Summation::Adaptive, policy)
}

pub fn sn_derivative_expansion(pt: &EllipticPoint, table: &CoefficientTable, form: FormVariant, policy: &TruncationPolicy) -> Result<Complex> {
    elliptic_expansion(EllipticFunction::SnDerivative, pt, table, form, Summation::Adaptive, policy)
}

/// `k`, `k'` with the degenerate lattice mapped to `(0, 1)`.
pub fn modulus_pair(lat: &LatticeParameter, policy: &TruncationPolicy) -> Result<(Complex, Complex)> {
    if lat.is_degenerate() {
        return Ok((ZERO, ONE));
    }
    let m = elliptic_moduli(&theta_constants(lat, policy)?)?;
    Ok((m.k, m.k_prime))
}

/// Residuals of `sn²+cn²=1`, `dn²+k²sn²=1` and `k²cn²+k'²=dn²` over `grid`.
pub fn identity_suite_algebraic(
    lat: &LatticeParameter,
    grid: &[Complex],
    policy: &TruncationPolicy,
) -> Result<VerificationReport> {
    let (k, kp) = modulus_pair(lat, policy)?;
    let k2 = k * k;
    let mut devs = [Deviation::new(), Deviation::new(), Deviation::new()];
    for &u in grid {
        let pt = EllipticPoint::from_u(u, lat, policy)?;
        let sn = sn_theta(&pt, policy)?;
        let cn = cn_theta(&pt, policy)?;
        let dn = dn_theta(&pt, policy)?;
        devs[0].add(sn * sn + cn * cn, ONE);
        devs[1].add(dn * dn + k2 * sn * sn, ONE);
        devs[2].add(k2 * cn * cn + kp * kp, dn * dn);
    }
    let mut rep = VerificationReport::new("elliptic algebraic identities")
        .subject("squared relations between sn, cn and dn")
        .param("n_points", grid.len());
    rep.set_number("k", k.re);
    if let Some(q) = lat.real_nome() {
        rep.set_number("q", q);
    }
    let names = [
        ("sn^2 + cn^2 = 1", "sn^2 + cn^2", "1"),
        ("dn^2 + k^2 sn^2 = 1", "dn^2 + k^2 sn^2", "1"),
        ("k^2 cn^2 + k'^2 = dn^2", "k^2 cn^2 + k'^2", "dn^2"),
    ];
    for (d, (name, a, b)) in devs.iter().zip(names) {
        rep.push(Measurement::new(name, a, b, d, Measurement::within(1e-11, DeviationScale::Absolute)));
    }
    Ok(rep)
}

/// Central differences of the theta quotients against the product forms
/// `sn' = cn·dn`, `cn' = -sn·dn`, `dn' = -k²·sn·cn`.
pub fn identity_suite_derivative(
    lat: &LatticeParameter,
    grid: &[Complex],
    h: f64,
    policy: &TruncationPolicy,
) -> Result<VerificationReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step h must be positive, got {h}")));
    }
    let (k, _) = modulus_pair(lat, policy)?;
    let k2 = k * k;
    let mut devs = [Deviation::new(), Deviation::new(), Deviation::new()];
    let at = |u: Complex| -> Result<[Complex; 3]> {
        let pt = EllipticPoint::from_u(u, lat, policy)?;
        Ok([sn_theta(&pt, policy)?, cn_theta(&pt, policy)?, dn_theta(&pt, policy)?])
    };
    for &u in grid {
        let [sn, cn, dn] = at(u)?;
        let up = at(u + h)?;
        let down = at(u - h)?;
        let fd: Vec<Complex> = (0..3).map(|i| (up[i] - down[i]) / (2.0 * h)).collect();
        devs[0].add(fd[0], cn * dn);
        devs[1].add(fd[1], -sn * dn);
        devs[2].add(fd[2], -k2 * sn * cn);
    }
    let mut rep = VerificationReport::new("elliptic derivative identities")
        .subject("first derivatives of sn, cn and dn")
        .param("n_points", grid.len());
    rep.set_number("h", h);
    if let Some(q) = lat.real_nome() {
        rep.set_number("q", q);
    }
    for (d, (name, b)) in devs.iter().zip([
        ("sn' = cn dn", "cn dn"),
        ("cn' = -sn dn", "-sn dn"),
        ("dn' = -k^2 sn cn", "-k^2 sn cn"),
    ]) {
        rep.push(Measurement::new(
            name,
            "central difference",
            b,
            d,
            Measurement::within(1e-8, DeviationScale::Absolute),
        ));
    }
    Ok(rep)
}

/// `n` equally spaced real points covering `[0, 4K)`.
pub fn real_period_grid(lat: &LatticeParameter, n: usize, policy: &TruncationPolicy) -> Result<Vec<Complex>> {
    let four_k = 2.0 * double_quarter_period(lat, policy)?.re;
    Ok((0..n).map(|i| Complex::new(four_k * i as f64 / n as f64, 0.0)).collect())
}

/// Expansions against theta quotients at theta arguments `points`.
/// Truncated canonical brackets get `truncated` as expectation, resummed
/// ones `1e-9`; the printed brackets are recorded as discrepancies except
/// for `dn`, whose two brackets coincide.
pub fn expansion_report(
    lat: &LatticeParameter,
    points: &[Complex],
    table: &CoefficientTable,
    truncated: Expectation,
    policy: &TruncationPolicy,
) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new("elliptic expansions")
        .subject("sn, cn, dn, sn/cn and sn' as exponentials of coefficient series")
        .param("n_points", points.len())
        .param("P", table.max_order_p());
    if let Some(q) = lat.real_nome() {
        rep.set_number("q", q);
    }
    let pts: Vec<EllipticPoint> = points
        .iter()
        .map(|&v| EllipticPoint::from_v(v, lat, policy))
        .collect::<Result<_>>()?;
    let tol = Measurement::within(1e-9, DeviationScale::Relative);
    let runs = [
        (FormVariant::CanonicalDerived, Summation::Adaptive, "canonical truncated"),
        (FormVariant::CanonicalDerived, Summation::Resummed, "canonical resummed"),
        (FormVariant::PaperLiteral, Summation::Adaptive, "literal truncated"),
    ];
    let mut first_error: Option<Error> = None;
    for (form, summation, label) in runs {
        for f in EllipticFunction::ALL {
            let mut d = Deviation::with_relative_floor(1.0);
            for pt in &pts {
                match (
                    elliptic_expansion(f, pt, table, form, summation, policy),
                    elliptic_theta(f, pt, policy),
                ) {
                    (Ok(a), Ok(b)) => d.add(a, b),
                    (Err(e), _) | (_, Err(e)) => {
                        first_error.get_or_insert(e);
                        d.add_failure()
                    }
                }
            }
            let expectation = match (form, summation) {
                (FormVariant::PaperLiteral, _) if f != EllipticFunction::Dn => Expectation::Discrepancy,
                (_, Summation::Resummed) => tol,
                _ => truncated,
            };
            rep.push(Measurement::new(format!("{} {label}", f.name()), label, "theta quotient", &d, expectation));
        }
    }
    if let Some(e) = first_error {
        rep.set_param("first_error", e.to_string());
    }
    Ok(rep)
}

/// Small-modulus, zero-modulus and near-unit-modulus limits.
pub fn limit_report(policy: &TruncationPolicy) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new("elliptic limits")
        .subject("trigonometric and hyperbolic limits of sn, cn, dn and K");
    let us: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();

    let k_small = 1e-3;
    let lat = LatticeParameter::from_modulus(k_small)?;
    let mut d = Deviation::new();
    for &u in &us {
        let pt = EllipticPoint::from_u(Complex::new(u, 0.0), &lat, policy)?;
        d.add(sn_theta(&pt, policy)?, Complex::new(u.sin(), 0.0));
    }
    rep.set_number("small_modulus", k_small);
    rep.push(Measurement::new(
        "sn(u, 1e-3) = sin u",
        "sn",
        "sin u",
        &d,
        Measurement::within(5.0 * k_small * k_small, DeviationScale::Absolute),
    ));

    let mut d = Deviation::new();
    d.add(agm_k(ZERO)?, Complex::new(0.5 * PI, 0.0));
    d.add(
        0.5 * double_quarter_period(&LatticeParameter::from_nome(0.0)?, policy)?,
        Complex::new(0.5 * PI, 0.0),
    );
    rep.push(Measurement::new("K(0) = pi/2", "AGM and theta constants", "pi/2", &d, Measurement::within(1e-12, DeviationScale::Absolute)));

    let k_big = 1.0 - 1e-6;
    let lat = LatticeParameter::from_modulus(k_big)?;
    rep.set_number("near_unit_modulus", k_big);
    let mut devs = [Deviation::new(), Deviation::new(), Deviation::new()];
    for &u in &us {
        let pt = EllipticPoint::from_u(Complex::new(u, 0.0), &lat, policy)?;
        let sech = Complex::new(1.0 / u.cosh(), 0.0);
        devs[0].add(sn_theta(&pt, policy)?, Complex::new(u.tanh(), 0.0));
        devs[1].add(cn_theta(&pt, policy)?, sech);
        devs[2].add(dn_theta(&pt, policy)?, sech);
    }
    for (d, (name, a, b)) in devs.iter().zip([
        ("sn(u, 1-1e-6) = tanh u", "sn", "tanh u"),
        ("cn(u, 1-1e-6) = sech u", "cn", "sech u"),
        ("dn(u, 1-1e-6) = sech u", "dn", "sech u"),
    ]) {
        rep.push(Measurement::new(name, a, b, d, Measurement::within(1e-2, DeviationScale::Absolute)));
    }
    Ok(rep)
}
