//! The coefficients `c_{2p}(τ)` of `log θ4(v)/θ4(0) = Σ_p c_{2p} sin^{2p}(πv)`.
//!
//! Closed form, with `x_k = 1/sin²((k+½)πτ) = -4q^{2k+1}/(1-q^{2k+1})²`:
//!
//! ```text
//! c_{2p} = -(1/p) Σ_{k≥0} x_k^p
//! ```
//!
//! Summing over `p` first gives `Σ_p c_{2p} X^p = Σ_k log(1 - X x_k)`, which
//! converges only for `|X·x_0| < 1`, i.e. `|X| < |sin²(πτ/2)|`. Outside that
//! disk the truncated power series diverges even though the product on the
//! right stays finite; see [`resummed_exponent`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::complex_core::{
    complex_log_principal, sum_until_negligible, Complex, TruncationPolicy, I, ONE, ZERO,
};
use crate::error::{Error, Result};
use crate::report_io::{Deviation, DeviationScale, Expectation, Measurement, VerificationReport};
use crate::theta_classical::{theta4_series, theta_constants, LatticeParameter, ThetaConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMethod {
    ClosedForm,
    RecurrencePaperSeeds,
    RecurrenceCalibrated,
    ExtractedOracle,
}

impl CoefficientMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CoefficientMethod::ClosedForm => "closed_form",
            CoefficientMethod::RecurrencePaperSeeds => "recurrence_paper_seeds",
            CoefficientMethod::RecurrenceCalibrated => "recurrence_calibrated",
            CoefficientMethod::ExtractedOracle => "extracted_oracle",
        }
    }
}

/// `c_2 … c_{2P}` for one lattice. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    lat: LatticeParameter,
    values: Vec<Complex>,
    method: CoefficientMethod,
    seed_c0: Option<Complex>,
}

impl CoefficientTable {
    /// `values[i]` is `c_{2(i+1)}`.
    pub fn from_values(
        lat: LatticeParameter,
        values: Vec<Complex>,
        method: CoefficientMethod,
        seed_c0: Option<Complex>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("coefficient table needs P >= 1".into()));
        }
        Ok(Self {
            lat,
            values,
            method,
            seed_c0,
        })
    }

    pub fn lat(&self) -> &LatticeParameter {
        &self.lat
    }

    pub fn max_order_p(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex] {
        &self.values
    }

    pub fn method(&self) -> CoefficientMethod {
        self.method
    }

    pub fn seed_c0(&self) -> Option<Complex> {
        self.seed_c0
    }

    /// `c_{2p}` for `1 ≤ p ≤ P`.
    pub fn get(&self, p: usize) -> Option<Complex> {
        if p == 0 {
            None
        } else {
            self.values.get(p - 1).copied()
        }
    }

    /// Same table with `c_{2p}` replaced.
    pub fn with_entry(&self, p: usize, value: Complex, method: CoefficientMethod) -> Result<Self> {
        if p == 0 || p > self.values.len() {
            return Err(Error::InvalidParameter(format!("no entry c_{}", 2 * p)));
        }
        let mut out = self.clone();
        out.values[p - 1] = value;
        out.method = method;
        Ok(out)
    }

    pub fn truncated(&self, p_max: usize) -> Result<Self> {
        let n = p_max.min(self.values.len());
        Self::from_values(self.lat, self.values[..n].to_vec(), self.method, self.seed_c0)
    }

    /// `{"tau_im", "q", "P", "method", "c"}`; entries are numbers when every
    /// imaginary part vanishes, `[re, im]` pairs otherwise.
    pub fn to_json(&self) -> Value {
        let real = self.values.iter().all(|c| c.im == 0.0);
        let c: Vec<Value> = self
            .values
            .iter()
            .map(|c| if real { json!(c.re) } else { json!([c.re, c.im]) })
            .collect();
        let tau_im = if self.lat.is_degenerate() {
            Value::Null
        } else {
            json!(self.lat.tau_im())
        };
        let mut obj = json!({
            "tau_im": tau_im,
            "q": self.lat.real_nome(),
            "P": self.values.len(),
            "method": self.method.as_str(),
            "c": c,
        });
        if !self.lat.is_degenerate() && self.lat.tau().re != 0.0 {
            obj["tau_re"] = json!(self.lat.tau().re);
        }
        obj
    }
}

/// `x_k = -4q^{2k+1}/(1-q^{2k+1})²`.
pub fn inverse_sine_square(lat: &LatticeParameter, k: usize) -> Complex {
    let qk = lat.nome_power(2.0 * k as f64 + 1.0);
    let d = ONE - qk;
    -4.0 * qk / (d * d)
}

/// `1/sin²((k+½)πτ)` computed from the sine directly; vanishes once the sine overflows.
fn inverse_sine_square_direct(lat: &LatticeParameter, k: usize) -> Complex {
    let z = (k as f64 + 0.5) * PI * lat.tau();
    if z.im.abs() > 700.0 {
        return ZERO;
    }
    let s = z.sin();
    ONE / (s * s)
}

/// The q form and the sine form of `c_{2p}`, before the cross-check.
pub fn closed_form_pair(lat: &LatticeParameter, p: usize, policy: &TruncationPolicy) -> Result<(Complex, Complex)> {
    let pi = p as i32;
    let q_form: Complex = sum_until_negligible(
        |k| inverse_sine_square(lat, k).powi(pi),
        policy,
        &format!("closed-form c_{} (q form)", 2 * p),
    )?;
    let sine_form: Complex = sum_until_negligible(
        |k| inverse_sine_square_direct(lat, k).powi(pi),
        policy,
        &format!("closed-form c_{} (sine form)", 2 * p),
    )?;
    let scale = -1.0 / p as f64;
    Ok((scale * q_form, scale * sine_form))
}

const DUAL_FORM_TOLERANCE: f64 = 1e-13;

/// Single closed-form coefficient `c_{2p}`, `p ≥ 1`.
pub fn closed_form_coefficient(lat: &LatticeParameter, p: usize, policy: &TruncationPolicy) -> Result<Complex> {
    if p == 0 {
        return Err(Error::InvalidParameter("order p must be positive".into()));
    }
    if lat.is_degenerate() {
        return Ok(ZERO);
    }
    let (a, b) = closed_form_pair(lat, p, policy)?;
    let scale = a.norm().max(b.norm());
    if scale > 0.0 && (a - b).norm() > DUAL_FORM_TOLERANCE * scale {
        return Err(Error::SelfCheck(format!(
            "sine and q forms of c_{} differ: {a} vs {b}",
            2 * p
        )));
    }
    Ok(a)
}

pub fn coefficients_closed_form(
    lat: &LatticeParameter,
    max_order_p: usize,
    policy: &TruncationPolicy,
) -> Result<CoefficientTable> {
    if max_order_p == 0 {
        return Err(Error::InvalidParameter("P must be positive".into()));
    }
    let values = (1..=max_order_p)
        .map(|p| closed_form_coefficient(lat, p, policy))
        .collect::<Result<Vec<_>>>()?;
    CoefficientTable::from_values(*lat, values, CoefficientMethod::ClosedForm, None)
}

/// `Σ_k log(1 - X x_k)`: the analytic continuation of `Σ_p c_{2p} X^p` to
/// every `X` that is not a zero of the product.
pub fn resummed_exponent(lat: &LatticeParameter, x: Complex, policy: &TruncationPolicy) -> Result<Complex> {
    if lat.is_degenerate() {
        return Ok(ZERO);
    }
    let mut err = None;
    let s = sum_until_negligible(
        |k| {
            let w = ONE - x * inverse_sine_square(lat, k);
            match complex_log_principal(w) {
                Ok(l) => l,
                Err(_) => {
                    err.get_or_insert(Error::PoleEncountered(format!(
                        "1 - X x_{k} vanishes at X = {x}"
                    )));
                    ZERO
                }
            }
        },
        policy,
        "resummed coefficient exponent",
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(s),
    }
}

/// Ratio `|X| / |sin²(πτ/2)|`; the coefficient series in `X` converges iff it is below 1.
pub fn convergence_ratio(lat: &LatticeParameter, x: Complex) -> f64 {
    if lat.is_degenerate() {
        return 0.0;
    }
    (x * inverse_sine_square(lat, 0)).norm()
}

const EXTRACTION_RADII: [f64; 2] = [0.8, 0.6];
const EXTRACTION_LIMIT: f64 = 1e-8;

/// Recovers `c_2 … c_{2P}` from classical θ4 values alone.
///
/// `g(X) = log θ4(v)/θ4(0)` with `sin²(πv) = X` is analytic on the disk
/// `|X| < |sin²(πτ/2)|`, and its Taylor coefficients are the `c_{2p}`. They are
/// read off by trapezoidal Cauchy integrals on two circles inside that disk;
/// the disagreement between the two circles is the error estimate.
pub fn extract_coefficients_oracle(
    lat: &LatticeParameter,
    max_order_p: usize,
    policy: &TruncationPolicy,
) -> Result<CoefficientTable> {
    if max_order_p == 0 {
        return Err(Error::InvalidParameter("P must be positive".into()));
    }
    let q = lat.real_nome().ok_or_else(|| {
        Error::InvalidParameter("coefficient extraction needs a real nome".into())
    })?;
    if q > 0.5 {
        return Err(Error::InvalidParameter(format!(
            "coefficient extraction needs q <= 0.5, got {q}"
        )));
    }
    if lat.is_degenerate() {
        return CoefficientTable::from_values(
            *lat,
            vec![ZERO; max_order_p],
            CoefficientMethod::ExtractedOracle,
            None,
        );
    }
    let theta4_0 = theta4_series(ZERO, lat, policy)?;
    let radius = 1.0 / inverse_sine_square(lat, 0).norm();
    let n = (8 * max_order_p).max(256);
    let mut estimates = Vec::with_capacity(EXTRACTION_RADII.len());
    for rho in EXTRACTION_RADII {
        let r = rho * radius;
        let samples = (0..n)
            .map(|j| {
                let phi = 2.0 * PI * j as f64 / n as f64;
                let x = Complex::from_polar(r, phi);
                let v = x.sqrt().asin() / PI;
                let ratio = theta4_series(v, lat, policy)? / theta4_0;
                Ok((phi, complex_log_principal(ratio)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let coeffs: Vec<Complex> = (1..=max_order_p)
            .map(|p| {
                let acc: Complex = samples
                    .iter()
                    .map(|&(phi, g)| g * Complex::from_polar(1.0, -(p as f64) * phi))
                    .sum();
                acc / (n as f64 * r.powi(p as i32))
            })
            .collect();
        estimates.push(coeffs);
    }
    let residual = estimates[0]
        .iter()
        .zip(&estimates[1])
        .map(|(a, b)| (a - b).norm() / a.norm().max(1.0))
        .fold(0.0, f64::max);
    if !(residual <= EXTRACTION_LIMIT) {
        return Err(Error::IllConditioned {
            residual,
            limit: EXTRACTION_LIMIT,
        });
    }
    // the imaginary parts are rounding noise for a real nome
    let values = estimates
        .swap_remove(0)
        .into_iter()
        .map(|c| Complex::new(c.re, 0.0))
        .collect();
    CoefficientTable::from_values(*lat, values, CoefficientMethod::ExtractedOracle, None)
}

/// Solves `Σ_{p≤P} c_{2p} sin^{2p}(πv_j) = log θ4(v_j)/θ4(0)` at `P` real
/// sample points. Truncation biases the result; it is exact only when the
/// neglected orders vanish.
pub fn fit_coefficients_real_samples(
    lat: &LatticeParameter,
    samples: &[f64],
    policy: &TruncationPolicy,
) -> Result<CoefficientTable> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    for (i, &v) in samples.iter().enumerate() {
        if !(v > 0.0 && v < 0.5) {
            return Err(Error::InvalidParameter(format!("sample {v} outside (0, 1/2)")));
        }
        if samples[..i].contains(&v) {
            return Err(Error::InvalidParameter(format!("duplicate sample {v}")));
        }
    }
    let q = lat.real_nome().ok_or_else(|| {
        Error::InvalidParameter("real-sample fit needs a real nome".into())
    })?;
    let p = samples.len();
    if q == 0.0 {
        return CoefficientTable::from_values(*lat, vec![ZERO; p], CoefficientMethod::ExtractedOracle, None);
    }
    let theta4_0 = theta4_series(ZERO, lat, policy)?.re;
    let a = DMatrix::from_fn(p, p, |j, i| {
        let s2 = (PI * samples[j]).sin().powi(2);
        s2.powi(i as i32 + 1)
    });
    let b = samples
        .iter()
        .map(|&v| {
            let t = theta4_series(Complex::new(v, 0.0), lat, policy)?.re;
            if t <= 0.0 {
                return Err(Error::Domain(format!("theta4({v}) is not positive")));
            }
            Ok((t / theta4_0).ln())
        })
        .collect::<Result<Vec<_>>>()?;
    let b = DVector::from_vec(b);
    let c = a.clone().lu().solve(&b).ok_or(Error::IllConditioned {
        residual: f64::INFINITY,
        limit: EXTRACTION_LIMIT,
    })?;
    let residual = (&a * &c - &b).amax();
    if !(residual <= EXTRACTION_LIMIT) {
        return Err(Error::IllConditioned {
            residual,
            limit: EXTRACTION_LIMIT,
        });
    }
    let values = c.iter().map(|&x| Complex::new(x, 0.0)).collect();
    CoefficientTable::from_values(*lat, values, CoefficientMethod::ExtractedOracle, None)
}

/// The three seed values as printed: `c_0 = -4(θ2⁴+θ3⁴)`,
/// `c_2 = θ4''(0)/(2π²θ4(0))`, `c_4 = ⅓θ2⁴θ3⁴ + ⅓c_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperSeeds {
    pub c0: Complex,
    pub c2: Complex,
    pub c4: Complex,
}

pub fn seeds_from_paper(consts: &ThetaConstants) -> PaperSeeds {
    let t2 = consts.theta2_0.powi(4);
    let t3 = consts.theta3_0.powi(4);
    let c0 = -4.0 * (t2 + t3);
    let c2 = consts.theta4_dd_0 / (2.0 * PI * PI * consts.theta4_0);
    let c4 = t2 * t3 / 3.0 + c2 / 3.0;
    PaperSeeds { c0, c2, c4 }
}

/// `(2p+4)(2p+3)(2p+2)(2p+1)`, the factor multiplying `c_{2p+4}`.
pub fn recurrence_lhs_factor(p: usize) -> f64 {
    let p = p as f64;
    (2.0 * p + 4.0) * (2.0 * p + 3.0) * (2.0 * p + 2.0) * (2.0 * p + 1.0)
}

/// Right-hand side of the recurrence for `c_{2p+4}`, exactly as printed.
/// `c[i]` is `c_{2(i+1)}` and must reach `c_{2p+2}`.
pub fn recurrence_rhs(c: &[Complex], c0: Complex, p: usize) -> Result<Complex> {
    if p == 0 || c.len() < p + 1 {
        return Err(Error::InvalidParameter(format!(
            "recurrence at p = {p} needs c_2 … c_{}",
            2 * p + 2
        )));
    }
    let pf = p as f64;
    let at = |k: usize| c[k - 1];
    let a = (2.0 * pf + 1.0) * (2.0 * pf + 2.0);
    let linear = a * ((2.0 * pf + 2.0) * (2.0 * pf + 3.0) + 4.0 * pf * pf - c0) * at(p + 1)
        + (2.0 * pf).powi(2) * (c0 - (2.0 * pf).powi(2)) * at(p);
    let partial: Complex = (1..=p).map(|k| 2.0 * k as f64 * at(k)).sum();
    let bracket = a * at(p + 1) - 2.0 * at(1) - partial;
    Ok(linear - 6.0 * bracket * bracket)
}

/// `c_{2p+4}` as prescribed by the printed recurrence.
pub fn recurrence_step_a(table: &CoefficientTable, seed_c0: Complex, p: usize) -> Result<Complex> {
    Ok(recurrence_rhs(table.values(), seed_c0, p)? / recurrence_lhs_factor(p))
}

/// Generates `c_6 … c_{2P}` from `c_2`, `c_4` and `c_0` by the recurrence.
pub fn coefficients_by_recurrence(
    lat: &LatticeParameter,
    c0: Complex,
    c2: Complex,
    c4: Complex,
    max_order_p: usize,
    method: CoefficientMethod,
) -> Result<CoefficientTable> {
    if max_order_p == 0 {
        return Err(Error::InvalidParameter("P must be positive".into()));
    }
    let mut values = vec![c2, c4];
    while values.len() < max_order_p {
        let p = values.len() - 1;
        let next = recurrence_rhs(&values, c0, p)? / recurrence_lhs_factor(p);
        values.push(next);
    }
    values.truncate(max_order_p);
    CoefficientTable::from_values(*lat, values, method, Some(c0))
}

/// `LHS - RHS` of the recurrence at order `p` for the given table.
pub fn recurrence_residual(c: &[Complex], c0: Complex, p: usize) -> Result<Complex> {
    if c.len() < p + 2 {
        return Err(Error::InvalidParameter(format!("residual at p = {p} needs c_{}", 2 * p + 4)));
    }
    Ok(recurrence_lhs_factor(p) * c[p + 1] - recurrence_rhs(c, c0, p)?)
}

/// Least-squares `c_0` for the recurrence residuals `p = 1 … p_max`.
/// The residual is affine in `c_0`; `None` when it does not depend on `c_0`.
pub fn fit_recurrence_c0(c: &[Complex], p_max: usize) -> Result<Option<Complex>> {
    let mut num = ZERO;
    let mut den = 0.0;
    for p in 1..=p_max {
        let r0 = recurrence_residual(c, ZERO, p)?;
        let r1 = recurrence_residual(c, ONE, p)?;
        // residual(c0) = r0 + c0 * (r1 - r0)
        let d = r1 - r0;
        num += d.conj() * (-r0);
        den += d.norm_sqr();
    }
    Ok(if den > 0.0 { Some(num / den) } else { None })
}

const RECURRENCE_QUIET: f64 = 1e-10;

/// Compares the printed recurrence with the closed-form coefficients.
///
/// Mode (i) uses the printed `c_0` and the printed `c_4`, mode (ii) the
/// closed-form table with a least-squares `c_0`, mode (iii) the closed-form
/// table with the printed `c_0`.
pub fn calibrate_recurrence(
    lat: &LatticeParameter,
    max_order_p: usize,
    policy: &TruncationPolicy,
) -> Result<VerificationReport> {
    let q = lat.real_nome().ok_or_else(|| {
        Error::InvalidParameter("recurrence calibration needs a real nome".into())
    })?;
    if !(q <= 0.5) {
        return Err(Error::InvalidParameter(format!("q must be <= 0.5, got {q}")));
    }
    if max_order_p < 3 {
        return Err(Error::InvalidParameter("calibration needs P >= 3".into()));
    }
    let consts = theta_constants(lat, policy)?;
    let seeds = seeds_from_paper(&consts);
    let closed = coefficients_closed_form(lat, max_order_p, policy)?;
    let c = closed.values();
    let p_max = max_order_p - 2;

    let mut rep = VerificationReport::new("recurrence calibration")
        .subject("coefficient recurrence and its seeds")
        .subject("closed-form coefficients")
        .param("q", q)
        .param("P", max_order_p);
    rep.set_number("c0_printed", seeds.c0.re);
    rep.set_number("c4_printed", seeds.c4.re);
    rep.set_number("c4_closed_form", c[1].re);

    let mut d = Deviation::new();
    d.add(seeds.c2, c[0]);
    rep.push(Measurement::new(
        "seed c2",
        "printed seed",
        "closed form",
        &d,
        Measurement::within(1e-10, DeviationScale::Relative),
    ));
    let mut d = Deviation::new();
    d.add(seeds.c4, c[1]);
    rep.push(Measurement::new(
        "seed c4",
        "printed seed",
        "closed form",
        &d,
        quiet_or_discrepancy(d.max_abs),
    ));

    let printed_table = closed.with_entry(2, seeds.c4, CoefficientMethod::RecurrencePaperSeeds)?;
    let modes: [(&str, &[Complex], Option<Complex>); 3] = [
        ("mode i printed c0 and c4", printed_table.values(), Some(seeds.c0)),
        ("mode ii fitted c0", c, fit_recurrence_c0(c, p_max)?),
        ("mode iii printed c0", c, Some(seeds.c0)),
    ];
    for (i, (label, table, c0)) in modes.into_iter().enumerate() {
        let fitted = i == 1;
        let c0_used = c0.unwrap_or(ZERO);
        if fitted {
            rep.set_number("c0_fitted", c0_used.re);
            rep.set_param("c0_fit_defined", c0.is_some());
        }
        let mut total = Deviation::with_relative_floor(1.0);
        for p in 1..=p_max {
            let r = recurrence_residual(table, c0_used, p)?;
            total.add(r, ZERO);
            rep.set_number(format!("{label}.residual_p{p}"), r.norm());
        }
        let expectation = if fitted {
            Expectation::Informational
        } else {
            quiet_or_discrepancy(total.max_abs)
        };
        rep.push(Measurement::new(
            format!("{label} residual"),
            "recurrence",
            "closed form",
            &total,
            expectation,
        ));
    }
    Ok(rep)
}

fn quiet_or_discrepancy(dev: f64) -> Expectation {
    if dev <= RECURRENCE_QUIET {
        Expectation::Informational
    } else {
        Expectation::Discrepancy
    }
}

/// Central difference of the closed-form `c_{2p}` along `τ ↦ τ + i·h`,
/// returned as `dc/dτ`. With `richardson`, the `h` and `h/2` estimates are
/// combined to cancel the `h²` term.
pub fn tau_derivative(
    lat: &LatticeParameter,
    p: usize,
    h: f64,
    richardson: bool,
    policy: &TruncationPolicy,
) -> Result<Complex> {
    if lat.is_degenerate() {
        return Ok(ZERO);
    }
    if !(h > 0.0 && h < lat.tau_im() / 10.0) {
        return Err(Error::InvalidParameter(format!(
            "step h = {h} must lie in (0, Im τ / 10)"
        )));
    }
    let central = |h: f64| -> Result<Complex> {
        let up = closed_form_coefficient(&lat.shifted(I * h)?, p, policy)?;
        let down = closed_form_coefficient(&lat.shifted(-I * h)?, p, policy)?;
        Ok((up - down) / (2.0 * I * h))
    };
    let d1 = central(h)?;
    if !richardson {
        return Ok(d1);
    }
    let d2 = central(h / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Printed right-hand side of the differential system at order `p`.
/// `c[i]` is `c_{2(i+1)}` and must reach `c_{2p+2}`; `c_0` never enters.
pub fn system_s_rhs(c: &[Complex], p: usize) -> Result<Complex> {
    if p == 0 || c.len() < p + 1 {
        return Err(Error::InvalidParameter(format!("system at p = {p} needs c_{}", 2 * p + 2)));
    }
    let pf = p as f64;
    let at = |k: usize| if k == 0 { ZERO } else { c[k - 1] };
    let mut sum = ZERO;
    for m in 1..p {
        let mf = m as f64;
        sum += mf * at(m) * ((pf - mf) * at(p - m) - (pf - mf + 1.0) * at(p - m + 1));
    }
    Ok((2.0 * pf + 2.0) * (2.0 * pf + 1.0) * at(p + 1) - 4.0 * pf * pf * at(p) - 4.0 * sum)
}

fn system_inputs(
    lat: &LatticeParameter,
    max_order_p: usize,
    p: usize,
    policy: &TruncationPolicy,
) -> Result<Vec<Complex>> {
    if p == 0 || p + 1 > max_order_p {
        return Err(Error::InvalidParameter(format!(
            "system residual needs 1 <= p <= P-1, got p = {p}, P = {max_order_p}"
        )));
    }
    Ok(coefficients_closed_form(lat, max_order_p, policy)?.values().to_vec())
}

/// `(4/π)·dc_{2p}/dτ - RHS`, the system exactly as printed.
pub fn system_s_residual(
    lat: &LatticeParameter,
    max_order_p: usize,
    p: usize,
    policy: &TruncationPolicy,
    h: f64,
) -> Result<Complex> {
    if lat.is_degenerate() {
        return Ok(ZERO);
    }
    let c = system_inputs(lat, max_order_p, p, policy)?;
    let d = tau_derivative(lat, p, h, false, policy)?;
    Ok(4.0 / PI * d - system_s_rhs(&c, p)?)
}

/// Residual of the form that the closed-form coefficients do satisfy:
/// `(4i/π)·dc_{2p}/dτ = RHS + 4p·c_2·c_{2p}`, i.e. the printed system with
/// an extra factor `i` on the left and the `m`-sum extended to `m = p`.
pub fn system_s_residual_corrected(
    lat: &LatticeParameter,
    max_order_p: usize,
    p: usize,
    policy: &TruncationPolicy,
    h: f64,
    richardson: bool,
) -> Result<Complex> {
    if lat.is_degenerate() {
        return Ok(ZERO);
    }
    let c = system_inputs(lat, max_order_p, p, policy)?;
    let d = tau_derivative(lat, p, h, richardson, policy)?;
    let extra = 4.0 * p as f64 * c[0] * c[p - 1];
    Ok(4.0 * I / PI * d - system_s_rhs(&c, p)? - extra)
}

/// Closed form against the contour oracle and between its two printed
/// representations, the printed recurrence seeds, and the differential
/// system both as printed and in the corrected form, at orders `1..=p_max`.
pub fn coefficient_report(lat: &LatticeParameter, p_max: usize, policy: &TruncationPolicy) -> Result<VerificationReport> {
    let q = lat.real_nome().ok_or_else(|| Error::InvalidParameter("coefficient checks need a real nome".into()))?;
    let mut rep = VerificationReport::new("coefficients")
        .subject("closed form of the sin^2 coefficients and their recurrences")
        .param("P", p_max);
    rep.set_number("q", q);
    let closed = coefficients_closed_form(lat, p_max, policy)?;
    let mut d = Deviation::new();
    match extract_coefficients_oracle(lat, p_max, policy) {
        Ok(oracle) => {
            for (a, b) in closed.values().iter().zip(oracle.values()) {
                d.add(*a, *b);
            }
        }
        Err(e) => {
            rep.set_param("oracle.error", e.to_string());
            d.add_failure();
        }
    }
    rep.push(Measurement::new("closed form vs contour oracle", "closed form", "contour oracle", &d, Measurement::within(1e-8, DeviationScale::Absolute)));

    let mut d = Deviation::new();
    for p in 1..=p_max {
        match closed_form_pair(lat, p, policy) {
            Ok((a, b)) => d.add(a, b),
            Err(_) => d.add_failure(),
        }
    }
    rep.push(Measurement::new("q form vs sine form", "q form", "sine form", &d, Measurement::within(1e-13, DeviationScale::Relative)));

    match calibrate_recurrence(lat, 8, policy) {
        Ok(cal) => {
            for (k, v) in &cal.parameters {
                rep.set_param(format!("recurrence.{k}"), v.clone());
            }
            for m in cal.measurements {
                rep.push(m);
            }
        }
        Err(e) => rep.push_error("recurrence calibration", &e),
    }

    let h = 1e-4;
    let mut literal = Deviation::with_relative_floor(1.0);
    let mut corrected = Deviation::with_relative_floor(1.0);
    let orders = 6.min(p_max.saturating_sub(1)).max(1);
    let table_p = orders + 1;
    for p in 1..=orders {
        match system_s_residual(lat, table_p, p, policy, h) {
            Ok(r) => {
                rep.set_number(format!("system_printed_residual_p{p}"), r.norm());
                literal.add(r, ZERO)
            }
            Err(_) => literal.add_failure(),
        }
        match system_s_residual_corrected(lat, table_p, p, policy, h, true) {
            Ok(r) => {
                rep.set_number(format!("system_corrected_residual_p{p}"), r.norm());
                corrected.add(r, ZERO)
            }
            Err(_) => corrected.add_failure(),
        }
    }
    rep.set_number("system_fd_step", h);
    rep.push(Measurement::new("differential system as printed", "(4/pi) dc/dtau", "printed right-hand side", &literal, Expectation::Discrepancy));
    rep.push(Measurement::new(
        "differential system corrected",
        "(4i/pi) dc/dtau",
        "right-hand side with m = p term",
        &corrected,
        Measurement::within(1e-6, DeviationScale::Absolute),
    ));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn policy() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    fn lat(q: f64) -> LatticeParameter {
        LatticeParameter::from_nome(q).unwrap()
    }

    #[test]
    fn closed_form_values_at_one_tenth() {
        let t = coefficients_closed_form(&lat(0.1), 4, &policy()).unwrap();
        assert!((t.get(1).unwrap().re - 0.4978762).abs() < 1e-6);
        assert!((t.get(2).unwrap().re + 0.1219407).abs() < 1e-6);
        assert_eq!(t.max_order_p(), 4);
        assert_eq!(t.method(), CoefficientMethod::ClosedForm);
    }

    #[test]
    fn degenerate_lattice_gives_zero_table() {
        let t = coefficients_closed_form(&lat(0.0), 5, &policy()).unwrap();
        assert!(t.values().iter().all(|c| *c == ZERO));
        let o = extract_coefficients_oracle(&lat(0.0), 5, &policy()).unwrap();
        assert!(o.values().iter().all(|c| *c == ZERO));
    }

    #[test]
    fn sign_pattern_and_decay() {
        for q in [0.01, 0.1, 0.2, 0.29] {
            let t = coefficients_closed_form(&lat(q), 12, &policy()).unwrap();
            // successive ratios approach |x_0| = 4q/(1-q)², below 1 only for q < 3 - 2√2
            let x0 = 4.0 * q / (1.0 - q).powi(2);
            for p in 1..=12 {
                let c = t.get(p).unwrap();
                assert_eq!(c.im, 0.0);
                let expected = if p % 2 == 1 { 1.0 } else { -1.0 };
                assert_eq!(c.re.signum(), expected, "q={q} p={p}");
            }
            for p in 2..12 {
                let ratio = (t.get(p + 1).unwrap() / t.get(p).unwrap()).norm();
                assert!(ratio < x0, "q={q} p={p}");
                if q < 0.17 {
                    assert!(ratio < 1.0, "q={q} p={p}");
                }
            }
        }
    }

    #[test]
    fn oracle_matches_closed_form() {
        for q in [0.05, 0.1, 0.2, 0.3] {
            let l = lat(q);
            let a = extract_coefficients_oracle(&l, 10, &policy()).unwrap();
            let b = coefficients_closed_form(&l, 10, &policy()).unwrap();
            for p in 1..=10 {
                let d = (a.get(p).unwrap() - b.get(p).unwrap()).norm();
                assert!(d < 1e-8, "q={q} p={p} d={d}");
            }
        }
    }

    #[test]
    fn oracle_rejects_complex_nome_and_large_q() {
        let l = LatticeParameter::from_tau(Complex::new(0.2, 0.8)).unwrap();
        assert!(extract_coefficients_oracle(&l, 4, &policy()).is_err());
        assert!(extract_coefficients_oracle(&lat(0.6), 4, &policy()).is_err());
    }

    #[test]
    fn single_point_fit_carries_truncation_bias() {
        let l = lat(0.1);
        let fit = fit_coefficients_real_samples(&l, &[0.25], &policy()).unwrap();
        let c = coefficients_closed_form(&l, 40, &policy()).unwrap();
        // at v = 1/4, X = 1/2: the fit absorbs Σ_{p≥2} c_{2p} 2^{1-p}
        let tail: f64 = (2..=40).map(|p| c.get(p).unwrap().re * 0.5f64.powi(p as i32 - 1)).sum();
        let d = fit.get(1).unwrap().re - c.get(1).unwrap().re;
        assert!((d - tail).abs() < 1e-12, "d={d} tail={tail}");
        assert!(d.abs() > 5e-3);
    }

    #[test]
    fn real_sample_fit_validation() {
        let l = lat(0.1);
        assert!(fit_coefficients_real_samples(&l, &[], &policy()).is_err());
        assert!(fit_coefficients_real_samples(&l, &[0.1, 0.1], &policy()).is_err());
        assert!(fit_coefficients_real_samples(&l, &[0.6], &policy()).is_err());
    }

    #[test]
    fn printed_seeds() {
        let l = lat(0.1);
        let s = seeds_from_paper(&theta_constants(&l, &policy()).unwrap());
        let c = coefficients_closed_form(&l, 2, &policy()).unwrap();
        assert!((s.c2 - c.get(1).unwrap()).norm() < 1e-10 * s.c2.norm());
        assert!((s.c4.re - 1.31749).abs() < 1e-4);
        assert!((s.c4 - c.get(2).unwrap()).norm() > 1.0);
        let small = seeds_from_paper(&theta_constants(&lat(1e-8), &policy()).unwrap());
        assert!((small.c0.re + 4.0).abs() < 1e-6);
    }

    #[test]
    fn recurrence_algebra() {
        let l = lat(0.1);
        let zero = CoefficientTable::from_values(l, vec![ZERO; 4], CoefficientMethod::ClosedForm, None).unwrap();
        assert_eq!(recurrence_step_a(&zero, ZERO, 1).unwrap(), ZERO);
        let t = coefficients_closed_form(&l, 4, &policy()).unwrap();
        let once = recurrence_step_a(&t, Complex::new(-4.0, 0.0), 1).unwrap();
        let doubled: Vec<Complex> = t.values().iter().map(|c| 2.0 * c).collect();
        let doubled = CoefficientTable::from_values(l, doubled, CoefficientMethod::ClosedForm, None).unwrap();
        let twice = recurrence_step_a(&doubled, Complex::new(-4.0, 0.0), 1).unwrap();
        assert!((twice - 2.0 * once).norm() > 1e-6);
        assert!(recurrence_step_a(&t.truncated(1).unwrap(), ZERO, 1).is_err());
    }

    #[test]
    fn recurrence_residual_is_affine_in_c0() {
        let t = coefficients_closed_form(&lat(0.2), 8, &policy()).unwrap();
        let c = t.values();
        let fit = fit_recurrence_c0(c, 6).unwrap().unwrap();
        let at = |c0: Complex| -> f64 {
            (1..=6).map(|p| recurrence_residual(c, c0, p).unwrap().norm_sqr()).sum()
        };
        let best = at(fit);
        for delta in [1e-3, -1e-3] {
            assert!(at(fit + delta) >= best);
        }
    }

    #[test]
    fn recurrence_generation_starts_from_seeds() {
        let l = lat(0.1);
        let t = coefficients_by_recurrence(&l, ONE, Complex::new(0.5, 0.0), Complex::new(-0.1, 0.0), 5, CoefficientMethod::RecurrenceCalibrated).unwrap();
        assert_eq!(t.max_order_p(), 5);
        assert_eq!(t.seed_c0(), Some(ONE));
        let c6 = recurrence_step_a(&t.truncated(2).unwrap(), ONE, 1).unwrap();
        assert_eq!(t.get(3).unwrap(), c6);
    }

    #[test]
    fn calibration_report() {
        let rep = calibrate_recurrence(&lat(0.1), 8, &policy()).unwrap();
        let bytes = crate::report_io::serialize_report(&rep, crate::report_io::ReportFormat::Json);
        assert_eq!(crate::report_io::deserialize_report(&bytes).unwrap(), rep);
        assert_eq!(rep.measurement("seed c2").unwrap().verdict(), crate::report_io::Verdict::Pass);
        let r0 = calibrate_recurrence(&lat(0.0), 8, &policy()).unwrap();
        for m in r0.measurements.iter().filter(|m| m.name.contains("residual")) {
            assert_eq!(m.max_abs_deviation, 0.0);
        }
    }

    #[test]
    fn printed_system_fails_and_corrected_form_holds() {
        let l = lat(0.1);
        let printed = system_s_residual(&l, 6, 1, &policy(), 1e-4).unwrap();
        assert!(printed.norm() > 1.0);
        for p in 1..=4 {
            let r = system_s_residual_corrected(&l, 6, p, &policy(), 1e-4, true).unwrap();
            assert!(r.norm() < 1e-8, "p={p} r={r}");
        }
        assert_eq!(system_s_residual(&lat(0.0), 6, 1, &policy(), 1e-4).unwrap(), ZERO);
        assert!(system_s_residual(&l, 6, 6, &policy(), 1e-4).is_err());
    }

    #[test]
    fn finite_difference_is_second_order() {
        let l = lat(0.1);
        let exact = tau_derivative(&l, 2, 1e-3, true, &policy()).unwrap();
        let e1 = (tau_derivative(&l, 2, 2e-3, false, &policy()).unwrap() - exact).norm();
        let e2 = (tau_derivative(&l, 2, 1e-3, false, &policy()).unwrap() - exact).norm();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.2, "ratio={ratio}");
    }

    #[test]
    fn resummation_matches_series_inside_disk() {
        let l = lat(0.2);
        let t = coefficients_closed_form(&l, 80, &policy()).unwrap();
        let x = Complex::new(0.3, 0.1);
        assert!(convergence_ratio(&l, x) < 0.5);
        let series: Complex = (1..=80).map(|p| t.get(p).unwrap() * x.powi(p as i32)).sum();
        let resummed = resummed_exponent(&l, x, &policy()).unwrap();
        assert!((series - resummed).norm() < 1e-13);
    }

    #[test]
    fn json_layout() {
        let t = coefficients_closed_form(&lat(0.1), 3, &policy()).unwrap();
        let v = t.to_json();
        assert_eq!(v["P"], 3);
        assert_eq!(v["method"], "closed_form");
        assert_eq!(v["c"].as_array().unwrap().len(), 3);
        assert!((v["q"].as_f64().unwrap() - 0.1).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn dual_forms_agree(q in 0.01f64..0.5, p in 1usize..=20) {
            let (a, b) = closed_form_pair(&lat(q), p, &policy()).unwrap();
            prop_assert!((a - b).norm() <= 1e-13 * a.norm().max(b.norm()));
        }

        #[test]
        fn complex_lattice_dual_forms(re in -0.5f64..0.5, im in 0.4f64..2.0, p in 1usize..8) {
            let l = LatticeParameter::from_tau(Complex::new(re, im)).unwrap();
            prop_assert!(closed_form_coefficient(&l, p, &policy()).is_ok());
        }
    }

    #[test]
    fn coefficient_report_at_one_tenth() {
        let rep = coefficient_report(&lat(0.1), 10, &policy()).unwrap();
        assert_eq!(rep.verdict, crate::report_io::Verdict::DocumentedDiscrepancy, "{rep:?}");
        assert!(rep.measurement("seed c4").is_some());
    }
}
