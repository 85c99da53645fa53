//! Theta functions from the coefficient expansion.
//!
//! ```text
//! θ4(v) = θ4(0) exp[Σ c_{2p} sin^{2p}(πv)]
//! θ3(v) = θ4(0) exp[Σ c_{2p} cos^{2p}(πv)]
//! θ1(v) = θ4(0) exp[iπ(v + τ/4) - iπ/2 + Σ c_{2p} sin^{2p}(π(v + τ/2))]
//! θ2(v) = θ4(0) exp[iπ(v + τ/4)        + Σ c_{2p} cos^{2p}(π(v + τ/2))]
//! ```
//!
//! The `-iπ/2` in θ1 is required for agreement with the q-series; without it
//! the formula yields `i·θ1` ([`PhaseConvention::Printed`]).
//!
//! The p-series in `X = basis²` converges only where `|X| < |sin²(πτ/2)|`
//! (see [`crate::trig_coefficients::convergence_ratio`]). For θ1 and θ2 that
//! excludes the whole real axis; [`Summation::Resummed`] evaluates the same
//! formula through the product form and works everywhere.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex_core::{complex_exp, Complex, TruncationPolicy, I, ZERO};
use crate::error::{Error, Result};
use crate::report_io::{Deviation, DeviationScale, Expectation, Measurement, VerificationReport};
use crate::theta_classical::{
    in_strip, theta4_series, theta_constants, theta_series, LatticeParameter, StripDomain,
    ThetaKind,
};
use crate::trig_coefficients::{convergence_ratio, resummed_exponent, CoefficientTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Sin,
    Cos,
}

/// How the phase of the shifted forms is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseConvention {
    /// Agrees with the q-series.
    Canonical,
    /// The θ1 formula without the `-iπ/2`.
    Printed,
}

/// How `Σ_p c_{2p} X^p` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summation {
    /// Stop once terms are negligible under the policy; `NonConvergence` if
    /// the table runs out first.
    Adaptive,
    /// All table entries, no convergence test.
    Truncated,
    /// `Σ_k log(1 - X x_k)`, independent of the table.
    Resummed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionOptions {
    pub phase: PhaseConvention,
    pub summation: Summation,
    pub enforce_strip: bool,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self {
            phase: PhaseConvention::Canonical,
            summation: Summation::Adaptive,
            enforce_strip: true,
        }
    }
}

impl ExpansionOptions {
    pub fn with_summation(mut self, summation: Summation) -> Self {
        self.summation = summation;
        self
    }

    pub fn with_phase(mut self, phase: PhaseConvention) -> Self {
        self.phase = phase;
        self
    }

    pub fn unchecked_strip(mut self) -> Self {
        self.enforce_strip = false;
        self
    }
}

/// Structure of one theta expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionForm {
    pub which: ThetaKind,
    /// Argument shifted by `τ/2`.
    pub half_tau_shift: bool,
    /// Phase `iπ(v + τ/4)` present.
    pub phase: bool,
    pub basis: Basis,
}

impl ExpansionForm {
    pub fn for_theta(which: ThetaKind) -> Self {
        let (half_tau_shift, basis) = match which {
            ThetaKind::Theta1 => (true, Basis::Sin),
            ThetaKind::Theta2 => (true, Basis::Cos),
            ThetaKind::Theta3 => (false, Basis::Cos),
            ThetaKind::Theta4 => (false, Basis::Sin),
        };
        Self {
            which,
            half_tau_shift,
            phase: half_tau_shift,
            basis,
        }
    }

    /// `sin` or `cos` of `π(v + shift)`.
    pub fn basis_value(&self, v: Complex, lat: &LatticeParameter) -> Complex {
        let arg = if self.half_tau_shift {
            PI * (v + 0.5 * lat.tau())
        } else {
            PI * v
        };
        match self.basis {
            Basis::Sin => arg.sin(),
            Basis::Cos => arg.cos(),
        }
    }

    /// The variable `X = basis²` of the coefficient series.
    pub fn series_variable(&self, v: Complex, lat: &LatticeParameter) -> Complex {
        let b = self.basis_value(v, lat);
        b * b
    }

    fn phase_exponent(&self, v: Complex, lat: &LatticeParameter, convention: PhaseConvention) -> Complex {
        if !self.phase {
            return ZERO;
        }
        let mut e = I * PI * (v + 0.25 * lat.tau());
        if self.which == ThetaKind::Theta1 && convention == PhaseConvention::Canonical {
            e -= I * 0.5 * PI;
        }
        e
    }
}

/// `Σ_p c_{2p} X^p` under the chosen summation.
pub fn exponent_sum(
    table: &CoefficientTable,
    x: Complex,
    summation: Summation,
    policy: &TruncationPolicy,
) -> Result<Complex> {
    match summation {
        Summation::Resummed => resummed_exponent(table.lat(), x, policy),
        Summation::Truncated => {
            let mut acc = ZERO;
            let mut xp = x;
            for c in table.values() {
                acc += c * xp;
                xp *= x;
            }
            Ok(acc)
        }
        Summation::Adaptive => {
            let mut acc = ZERO;
            let mut xp = x;
            let mut small = 0;
            let mut last = f64::INFINITY;
            for c in table.values() {
                let t = c * xp;
                if !(t.re.is_finite() && t.im.is_finite()) {
                    return Err(Error::Overflow(format!("coefficient series at X = {x}")));
                }
                acc += t;
                last = t.norm();
                if last < policy.term_tolerance {
                    small += 1;
                    if small >= 3 {
                        return Ok(acc);
                    }
                } else {
                    small = 0;
                }
                xp *= x;
            }
            if last >= policy.term_tolerance {
                return Err(Error::NonConvergence {
                    context: format!(
                        "coefficient series at X = {x} (convergence ratio {:.3})",
                        convergence_ratio(table.lat(), x)
                    ),
                    terms: table.max_order_p(),
                    last_term: last,
                });
            }
            Ok(acc)
        }
    }
}

fn check_table(lat: &LatticeParameter, table: &CoefficientTable) -> Result<()> {
    if !table.lat().same_lattice(lat) {
        return Err(Error::InvalidParameter(
            "coefficient table belongs to a different lattice".into(),
        ));
    }
    Ok(())
}

fn check_strip(v: Complex, lat: &LatticeParameter, strip: &StripDomain) -> Result<()> {
    if lat.is_degenerate() || in_strip(v, lat, strip) {
        Ok(())
    } else {
        Err(Error::OutsideStrip {
            v: v.to_string(),
            bound: strip.bound(lat),
        })
    }
}

fn is_real_integer(v: Complex) -> bool {
    v.im == 0.0 && v.re.fract() == 0.0
}

/// Canonical evaluation with adaptive summation inside the stated strip.
pub fn theta_via_expansion(
    which: ThetaKind,
    v: Complex,
    lat: &LatticeParameter,
    table: &CoefficientTable,
    policy: &TruncationPolicy,
) -> Result<Complex> {
    theta_via_expansion_with(which, v, lat, table, policy, ExpansionOptions::default())
}

pub fn theta_via_expansion_with(
    which: ThetaKind,
    v: Complex,
    lat: &LatticeParameter,
    table: &CoefficientTable,
    policy: &TruncationPolicy,
    options: ExpansionOptions,
) -> Result<Complex> {
    check_table(lat, table)?;
    if options.enforce_strip {
        check_strip(v, lat, &StripDomain::for_theta(which))?;
    }
    if lat.is_degenerate() {
        return Ok(match which {
            ThetaKind::Theta1 | ThetaKind::Theta2 => ZERO,
            ThetaKind::Theta3 | ThetaKind::Theta4 => Complex::new(1.0, 0.0),
        });
    }
    // the simple zeros of θ1 on the real axis; the exponential cannot vanish
    if which == ThetaKind::Theta1 && is_real_integer(v) {
        return Ok(ZERO);
    }
    let form = ExpansionForm::for_theta(which);
    let theta4_0 = theta4_series(ZERO, lat, policy)?;
    let x = form.series_variable(v, lat);
    let s = exponent_sum(table, x, options.summation, policy)?;
    let value = theta4_0 * complex_exp(form.phase_exponent(v, lat, options.phase) + s)?;
    Ok(value)
}

/// Prefactor of the product formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductPrefactor {
    /// `exp[iπ(v + τ/4)]`, from multiplying the three single-theta forms.
    Composed,
    /// `exp[v + τ/4]`, as printed.
    Printed,
}

/// `θ2(v)θ3(v)θ4(v)/θ4(0)³` from the expansion.
pub fn theta_product_formula(
    v: Complex,
    lat: &LatticeParameter,
    table: &CoefficientTable,
    policy: &TruncationPolicy,
) -> Result<Complex> {
    theta_product_formula_with(v, lat, table, policy, ProductPrefactor::Composed, Summation::Adaptive)
}

pub fn theta_product_formula_with(
    v: Complex,
    lat: &LatticeParameter,
    table: &CoefficientTable,
    policy: &TruncationPolicy,
    prefactor: ProductPrefactor,
    summation: Summation,
) -> Result<Complex> {
    check_table(lat, table)?;
    check_strip(v, lat, &StripDomain::half())?;
    if lat.is_degenerate() {
        return Ok(ZERO);
    }
    let s = PI * v;
    let c = (PI * (v + 0.5 * lat.tau())).cos();
    let sum = exponent_sum(table, s.sin() * s.sin(), summation, policy)?
        + exponent_sum(table, s.cos() * s.cos(), summation, policy)?
        + exponent_sum(table, c * c, summation, policy)?;
    let pre = match prefactor {
        ProductPrefactor::Composed => I * PI * (v + 0.25 * lat.tau()),
        ProductPrefactor::Printed => v + 0.25 * lat.tau(),
    };
    complex_exp(pre + sum)
}

/// `πθ4(0)³q^{1/4} exp[Σ c_{2p}(1 + cos^{2p}(πτ/2))]` under the given summation.
pub fn theta1_prime_formula(
    lat: &LatticeParameter,
    table: &CoefficientTable,
    summation: Summation,
    policy: &TruncationPolicy,
) -> Result<Complex> {
    check_table(lat, table)?;
    if lat.is_degenerate() {
        return Ok(ZERO);
    }
    let theta4_0 = theta4_series(ZERO, lat, policy)?;
    let c = (0.5 * PI * lat.tau()).cos();
    let sum = exponent_sum(table, Complex::new(1.0, 0.0), summation, policy)?
        + exponent_sum(table, c * c, summation, policy)?;
    Ok(PI * theta4_0.powi(3) * lat.nome_power(0.25) * complex_exp(sum)?)
}

/// Compares the `θ1'(0)` formula with the differentiated q-series.
///
/// The cosine term has `|cos²(πτ/2)| > |sin²(πτ/2)|` for every lattice, so
/// its coefficient series diverges; the truncated form is therefore reported
/// as a discrepancy and the resummed form is held to tolerance.
pub fn theta1_prime_identity(
    lat: &LatticeParameter,
    table: &CoefficientTable,
    policy: &TruncationPolicy,
) -> Result<VerificationReport> {
    let q = lat.real_nome().ok_or_else(|| {
        Error::InvalidParameter("theta1'(0) identity needs a real nome".into())
    })?;
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::InvalidParameter(format!("q must lie in (0, 0.5], got {q}")));
    }
    let consts = theta_constants(lat, policy)?;
    let mut rep = VerificationReport::new("theta1 derivative identity")
        .subject("theta1'(0) product identity")
        .param("q", q)
        .param("P", table.max_order_p());
    rep.set_number("theta1_d_0", consts.theta1_d_0.re);
    rep.set_number(
        "cosine_term_convergence_ratio",
        convergence_ratio(lat, (0.5 * PI * lat.tau()).cos().powi(2)),
    );
    for (name, summation, expectation) in [
        ("truncated series", Summation::Truncated, Expectation::Discrepancy),
        (
            "resummed exponent",
            Summation::Resummed,
            Measurement::within(1e-9, DeviationScale::Relative),
        ),
    ] {
        let mut d = Deviation::new();
        match theta1_prime_formula(lat, table, summation, policy) {
            Ok(value) => d.add(value, consts.theta1_d_0),
            Err(_) => d.add_failure(),
        }
        rep.push(Measurement::new(name, "expansion", "q-series", &d, expectation));
    }
    Ok(rep)
}

/// Largest convergence ratio of the coefficient series used by `which` at `v`.
pub fn expansion_convergence_ratio(which: ThetaKind, v: Complex, lat: &LatticeParameter) -> f64 {
    convergence_ratio(lat, ExpansionForm::for_theta(which).series_variable(v, lat))
}

/// Deviation of the expansion from the q-series over `points`.
pub fn compare_with_classical(
    which: ThetaKind,
    points: &[Complex],
    lat: &LatticeParameter,
    table: &CoefficientTable,
    policy: &TruncationPolicy,
    options: ExpansionOptions,
) -> Deviation {
    let mut d = Deviation::with_relative_floor(1.0);
    for &v in points {
        let a = theta_via_expansion_with(which, v, lat, table, policy, options);
        let b = theta_series(which, v, lat, policy);
        match (a, b) {
            (Ok(a), Ok(b)) => d.add(a, b),
            _ => d.add_failure(),
        }
    }
    d
}

/// `n` points strictly inside the stated strip of `which`, half on the real
/// axis and half off it, drawn from a seeded generator.
pub fn sample_strip_points(which: ThetaKind, lat: &LatticeParameter, n: usize, seed: u64) -> Vec<Complex> {
    let bound = StripDomain::for_theta(which).bound(lat);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let re = rng.gen_range(0.0..1.0);
            let im = if i % 2 == 0 || !bound.is_finite() {
                0.0
            } else {
                rng.gen_range(-0.95..0.95) * bound
            };
            Complex::new(re, im)
        })
        .collect()
}

/// Like [`sample_strip_points`] but keeping only points whose coefficient
/// series converges with ratio at most `max_ratio`. Fewer than `n` points may
/// come back if the region is thin.
pub fn sample_convergent_points(
    which: ThetaKind,
    lat: &LatticeParameter,
    n: usize,
    max_ratio: f64,
    seed: u64,
) -> Vec<Complex> {
    let bound = StripDomain::for_theta(which).bound(lat);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let accept = |v: Complex| {
        expansion_convergence_ratio(which, v, lat) <= max_ratio
            && !(which == ThetaKind::Theta1 && is_real_integer(v))
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // even slots prefer the real axis, which θ1 and θ2 never accept
        let mut found = None;
        if i % 2 == 0 || !bound.is_finite() {
            for _ in 0..20 {
                let v = Complex::new(rng.gen_range(0.0..1.0), 0.0);
                if accept(v) {
                    found = Some(v);
                    break;
                }
            }
        }
        if found.is_none() && bound.is_finite() {
            for _ in 0..10_000 {
                let v = Complex::new(rng.gen_range(0.0..1.0), rng.gen_range(-0.95..0.95) * bound);
                if accept(v) {
                    found = Some(v);
                    break;
                }
            }
        }
        match found {
            Some(v) => out.push(v),
            None => break,
        }
    }
    out
}

/// Expansions against the q-series for all four thetas and the product
/// formula. `strip` is the expectation for truncated sums on the stated
/// strips, where the coefficient series generally diverges; resummed sums
/// and truncated sums on points with convergence ratio at most `1/2` are
/// expected within `1e-9`.
pub fn expansion_accuracy_report(
    lat: &LatticeParameter,
    table: &CoefficientTable,
    n_points: usize,
    seed: u64,
    strip: Expectation,
    policy: &TruncationPolicy,
) -> Result<VerificationReport> {
    let tol = Measurement::within(1e-9, DeviationScale::Relative);
    let mut rep = VerificationReport::new("theta expansions")
        .subject("theta functions as exponentials of sin^2 series")
        .param("P", table.max_order_p())
        .param("n_points", n_points)
        .param("seed", seed);
    if let Some(q) = lat.real_nome() {
        rep.set_number("q", q);
    }
    let truncated = ExpansionOptions::default();
    let resummed = ExpansionOptions::default().with_summation(Summation::Resummed);
    for (i, kind) in ThetaKind::ALL.into_iter().enumerate() {
        let pts = sample_strip_points(kind, lat, n_points, seed.wrapping_add(i as u64));
        let ratio = pts
            .iter()
            .map(|&v| expansion_convergence_ratio(kind, v, lat))
            .fold(0.0, f64::max);
        rep.set_number(format!("{kind}_strip_ratio_max"), ratio);
        let d = compare_with_classical(kind, &pts, lat, table, policy, truncated);
        rep.push(Measurement::new(format!("{kind} strip truncated"), "expansion", "q-series", &d, strip));
        let d = compare_with_classical(kind, &pts, lat, table, policy, resummed);
        rep.push(Measurement::new(format!("{kind} strip resummed"), "expansion", "q-series", &d, tol));
        let conv = sample_convergent_points(kind, lat, n_points, 0.5, seed.wrapping_add(100 + i as u64));
        rep.set_param(format!("{kind}_convergent_points"), conv.len());
        let d = compare_with_classical(kind, &conv, lat, table, policy, truncated);
        rep.push(Measurement::new(format!("{kind} convergent truncated"), "expansion", "q-series", &d, tol));
    }
    let pts = sample_strip_points(ThetaKind::Theta4, lat, n_points, seed.wrapping_add(10));
    let t4_0 = theta4_series(ZERO, lat, policy)?;
    for (name, prefactor, expectation) in [
        ("product formula resummed", ProductPrefactor::Composed, tol),
        ("product formula printed prefactor", ProductPrefactor::Printed, Expectation::Discrepancy),
    ] {
        let mut d = Deviation::with_relative_floor(1.0);
        for &v in &pts {
            let classical = theta_series(ThetaKind::Theta2, v, lat, policy).and_then(|a| {
                Ok(a * theta_series(ThetaKind::Theta3, v, lat, policy)? * theta4_series(v, lat, policy)? / t4_0.powi(3))
            });
            match (theta_product_formula_with(v, lat, table, policy, prefactor, Summation::Resummed), classical) {
                (Ok(a), Ok(b)) => d.add(a, b),
                _ => d.add_failure(),
            }
        }
        rep.push(Measurement::new(name, "expansion", "theta2 theta3 theta4 / theta4(0)^3", &d, expectation));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta_classical::{theta1_series, theta2_series, theta3_series};
    use crate::trig_coefficients::coefficients_closed_form;

    fn policy() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    fn setup(q: f64, p: usize) -> (LatticeParameter, CoefficientTable) {
        let lat = LatticeParameter::from_nome(q).unwrap();
        let t = coefficients_closed_form(&lat, p, &policy()).unwrap();
        (lat, t)
    }

    fn re(x: f64) -> Complex {
        Complex::new(x, 0.0)
    }

    #[test]
    fn theta4_at_zero_is_exact() {
        let (lat, t) = setup(0.1, 20);
        let a = theta_via_expansion(ThetaKind::Theta4, ZERO, &lat, &t, &policy()).unwrap();
        assert_eq!(a, theta4_series(ZERO, &lat, &policy()).unwrap());
    }

    #[test]
    fn theta4_at_three_tenths() {
        let (lat, t) = setup(0.1, 12);
        let classical = theta4_series(re(0.3), &lat, &policy()).unwrap();
        // twelve orders leave a tail of about (X x_0)^13 / 13 with X x_0 ≈ 0.323
        let a = theta_via_expansion_with(
            ThetaKind::Theta4,
            re(0.3),
            &lat,
            &t,
            &policy(),
            ExpansionOptions::default().with_summation(Summation::Truncated),
        )
        .unwrap();
        let ratio = expansion_convergence_ratio(ThetaKind::Theta4, re(0.3), &lat);
        assert!((ratio - 0.3232).abs() < 1e-3);
        let predicted = classical.norm() * ratio.powi(13) / 13.0 / (1.0 - ratio);
        let dev = (a - classical).norm();
        assert!(dev < predicted && dev > 0.1 * predicted, "dev={dev} predicted={predicted}");
        assert!(matches!(
            theta_via_expansion(ThetaKind::Theta4, re(0.3), &lat, &t, &policy()),
            Err(Error::NonConvergence { .. })
        ));
        let (lat, t) = setup(0.1, 40);
        let a = theta_via_expansion(ThetaKind::Theta4, re(0.3), &lat, &t, &policy()).unwrap();
        assert!((a - classical).norm() < 1e-10);
    }

    #[test]
    fn theta3_at_zero_is_ratio_of_constants() {
        let (lat, t) = setup(0.1, 64);
        let a = theta_via_expansion(ThetaKind::Theta3, ZERO, &lat, &t, &policy()).unwrap();
        let b = theta3_series(ZERO, &lat, &policy()).unwrap();
        assert!((a - b).norm() < 1e-12);
        let r = a / theta4_series(ZERO, &lat, &policy()).unwrap();
        assert!((r.re - 1.499875).abs() < 1e-5);
    }

    #[test]
    fn theta1_zero_is_exact() {
        let (lat, t) = setup(0.1, 20);
        assert_eq!(theta_via_expansion(ThetaKind::Theta1, ZERO, &lat, &t, &policy()).unwrap(), ZERO);
    }

    #[test]
    fn shifted_forms_converge_near_the_half_period_line() {
        let (lat, t) = setup(0.1, 60);
        let v = Complex::new(0.37, -0.5 * lat.tau_im() + 0.05);
        let a = theta_via_expansion(ThetaKind::Theta1, v, &lat, &t, &policy()).unwrap();
        let b = theta1_series(v, &lat, &policy()).unwrap();
        assert!((a - b).norm() < 1e-12 * b.norm().max(1.0));
        let v2 = Complex::new(0.45, -0.4 * lat.tau_im());
        let a = theta_via_expansion(ThetaKind::Theta2, v2, &lat, &t, &policy()).unwrap();
        let b = theta2_series(v2, &lat, &policy()).unwrap();
        assert!((a - b).norm() < 1e-12 * b.norm().max(1.0));
    }

    #[test]
    fn printed_theta1_phase_is_off_by_i() {
        let (lat, t) = setup(0.1, 60);
        let v = Complex::new(0.37, -0.5 * lat.tau_im() + 0.05);
        let opts = ExpansionOptions::default().with_phase(PhaseConvention::Printed);
        let a = theta_via_expansion_with(ThetaKind::Theta1, v, &lat, &t, &policy(), opts).unwrap();
        let b = theta1_series(v, &lat, &policy()).unwrap();
        assert!((a / b - I).norm() < 1e-12);
    }

    #[test]
    fn resummation_works_on_the_real_axis() {
        let (lat, t) = setup(0.3, 40);
        let opts = ExpansionOptions::default().with_summation(Summation::Resummed);
        for kind in ThetaKind::ALL {
            for v in [0.13, 0.3, 0.5, 0.77] {
                let a = theta_via_expansion_with(kind, re(v), &lat, &t, &policy(), opts).unwrap();
                let b = theta_series(kind, re(v), &lat, &policy()).unwrap();
                assert!((a - b).norm() < 1e-12 * b.norm().max(1.0), "{kind} v={v}");
            }
        }
    }

    #[test]
    fn truncated_real_theta1_diverges() {
        let (lat, t) = setup(0.1, 40);
        assert!(expansion_convergence_ratio(ThetaKind::Theta1, re(0.3), &lat) > 1.0);
        assert!(theta_via_expansion(ThetaKind::Theta1, re(0.3), &lat, &t, &policy()).is_err());
    }

    #[test]
    fn strips_are_enforced() {
        let (lat, t) = setup(0.1, 20);
        let b = lat.tau_im();
        for (kind, factor) in [
            (ThetaKind::Theta1, 1.0),
            (ThetaKind::Theta2, 0.5),
            (ThetaKind::Theta3, 1.0),
            (ThetaKind::Theta4, 0.5),
        ] {
            for sign in [1.0, -1.0] {
                let v = Complex::new(0.2, sign * factor * b);
                assert!(matches!(
                    theta_via_expansion(kind, v, &lat, &t, &policy()),
                    Err(Error::OutsideStrip { .. })
                ));
            }
        }
    }

    #[test]
    fn accuracy_report_verdicts() {
        let (lat, t) = setup(0.1, 64);
        let rep = expansion_accuracy_report(&lat, &t, 12, 5, Expectation::Discrepancy, &policy()).unwrap();
        for m in &rep.measurements {
            assert_ne!(m.verdict(), crate::report_io::Verdict::Fail, "{m:?}");
        }
    }

    #[test]
    fn product_formula() {
        let (lat, t) = setup(0.1, 60);
        let v = Complex::new(0.45, -0.4 * lat.tau_im());
        let classical = theta2_series(v, &lat, &policy()).unwrap()
            * theta3_series(v, &lat, &policy()).unwrap()
            * theta4_series(v, &lat, &policy()).unwrap()
            / theta4_series(ZERO, &lat, &policy()).unwrap().powi(3);
        let opts = [Summation::Resummed];
        for s in opts {
            let a = theta_product_formula_with(v, &lat, &t, &policy(), ProductPrefactor::Composed, s).unwrap();
            assert!((a - classical).norm() < 1e-9 * classical.norm(), "{s:?}");
            let p = theta_product_formula_with(v, &lat, &t, &policy(), ProductPrefactor::Printed, s).unwrap();
            assert!((p - classical).norm() > 1e-3);
        }
        let zero = theta_product_formula_with(ZERO, &lat, &t, &policy(), ProductPrefactor::Composed, Summation::Resummed).unwrap();
        assert!((zero.re - 2.12909).abs() < 1e-4);
    }

    #[test]
    fn theta1_prime() {
        let (lat, t) = setup(0.1, 40);
        let rep = theta1_prime_identity(&lat, &t, &policy()).unwrap();
        let m = rep.measurement("resummed exponent").unwrap();
        assert!(m.max_rel_deviation < 1e-12);
        let tiny = LatticeParameter::from_nome(1e-8).unwrap();
        let tt = coefficients_closed_form(&tiny, 40, &policy()).unwrap();
        let a = theta1_prime_formula(&tiny, &tt, Summation::Resummed, &policy()).unwrap();
        let b = theta_constants(&tiny, &policy()).unwrap().theta1_d_0;
        assert!((a / b - 1.0).norm() < 1e-12);
    }

    #[test]
    fn convergent_sampler_respects_ratio() {
        let lat = LatticeParameter::from_nome(0.3).unwrap();
        for kind in ThetaKind::ALL {
            let pts = sample_convergent_points(kind, &lat, 50, 0.5, 7);
            assert_eq!(pts.len(), 50, "{kind}");
            for v in pts {
                assert!(expansion_convergence_ratio(kind, v, &lat) <= 0.5);
                assert!(in_strip(v, &lat, &StripDomain::for_theta(kind)));
            }
        }
    }

    #[test]
    fn doubling_order_does_not_hurt_inside_domain() {
        let lat = LatticeParameter::from_nome(0.2).unwrap();
        for kind in ThetaKind::ALL {
            let pts = sample_convergent_points(kind, &lat, 20, 0.5, 3);
            let mut prev = f64::INFINITY;
            for p in [10, 20, 40] {
                let t = coefficients_closed_form(&lat, p, &policy()).unwrap();
                let opts = ExpansionOptions::default().with_summation(Summation::Truncated);
                let d = compare_with_classical(kind, &pts, &lat, &t, &policy(), opts).max_abs;
                assert!(d <= prev * 1.0001 + 1e-15, "{kind} P={p}");
                prev = d;
            }
            assert!(prev < 1e-9, "{kind} {prev}");
        }
    }
}
