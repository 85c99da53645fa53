//! Classical q-series for the four theta functions.
//!
//! These series are the ground truth every other route is judged against.
//! With `q = exp(iπτ)`:
//!
//! ```text
//! θ1(v) = 2 Σ_{n≥0} (-1)^n q^{(n+1/2)²} sin((2n+1)πv)
//! θ2(v) = 2 Σ_{n≥0}        q^{(n+1/2)²} cos((2n+1)πv)
//! θ3(v) = 1 + 2 Σ_{n≥1}        q^{n²} cos(2nπv)
//! θ4(v) = 1 + 2 Σ_{n≥1} (-1)^n q^{n²} cos(2nπv)
//! ```

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::complex_core::{sum_until_negligible, Complex, TruncationPolicy, I, ONE, ZERO};
use crate::error::{Error, Result};

/// Which of the four Jacobi theta functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ThetaKind {
    Theta1,
    Theta2,
    Theta3,
    Theta4,
}

impl ThetaKind {
    pub const ALL: [ThetaKind; 4] = [
        ThetaKind::Theta1,
        ThetaKind::Theta2,
        ThetaKind::Theta3,
        ThetaKind::Theta4,
    ];

    pub fn index(self) -> u8 {
        match self {
            ThetaKind::Theta1 => 1,
            ThetaKind::Theta2 => 2,
            ThetaKind::Theta3 => 3,
            ThetaKind::Theta4 => 4,
        }
    }
}

impl TryFrom<u8> for ThetaKind {
    type Error = Error;

    fn try_from(which: u8) -> Result<Self> {
        match which {
            1 => Ok(ThetaKind::Theta1),
            2 => Ok(ThetaKind::Theta2),
            3 => Ok(ThetaKind::Theta3),
            4 => Ok(ThetaKind::Theta4),
            other => Err(Error::InvalidParameter(format!("no theta function {other}"))),
        }
    }
}

impl fmt::Display for ThetaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "theta{}", self.index())
    }
}

/// Half-period ratio `τ` with `Im τ > 0`, and the nome `q = exp(iπτ)` derived from it.
///
/// `q = 0` is admitted as the degenerate lattice `τ = i∞`, where every
/// q-series collapses to its constant term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParameter {
    tau: Complex,
    log_nome: Complex,
    degenerate: bool,
    real_q: Option<f64>,
}

impl LatticeParameter {
    pub fn from_tau(tau: Complex) -> Result<Self> {
        if !(tau.re.is_finite() && tau.im.is_finite()) || tau.im <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "half-period ratio must have positive finite imaginary part, got {tau}"
            )));
        }
        Ok(Self {
            tau,
            log_nome: I * PI * tau,
            degenerate: false,
            real_q: None,
        })
    }

    /// Real nome `q ∈ [0, 1)`, i.e. `τ = -i ln(q)/π`.
    pub fn from_nome(q: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "real nome must lie in [0, 1), got {q}"
            )));
        }
        if q == 0.0 {
            return Ok(Self {
                tau: Complex::new(0.0, f64::INFINITY),
                log_nome: Complex::new(f64::NEG_INFINITY, 0.0),
                degenerate: true,
                real_q: Some(0.0),
            });
        }
        let ln_q = q.ln();
        Ok(Self {
            tau: Complex::new(0.0, -ln_q / PI),
            log_nome: Complex::new(ln_q, 0.0),
            degenerate: false,
            real_q: Some(q),
        })
    }

    /// Lattice whose modulus `θ2(0)²/θ3(0)²` equals `k ∈ [0, 1)`, via `τ = iK'/K`.
    pub fn from_modulus(k: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&k) {
            return Err(Error::DegenerateModulus(format!(
                "real modulus must lie in [0, 1), got {k}"
            )));
        }
        if k == 0.0 {
            return Self::from_nome(0.0);
        }
        let big_k = agm_k(Complex::new(k, 0.0))?;
        let big_k_prime = PI / (2.0 * agm(ONE, Complex::new(k, 0.0))?);
        Self::from_tau(I * big_k_prime / big_k)
    }

    pub fn tau(&self) -> Complex {
        self.tau
    }

    pub fn tau_im(&self) -> f64 {
        self.tau.im
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// True when `τ` is purely imaginary, so that `q` is real.
    pub fn has_real_nome(&self) -> bool {
        self.tau.re == 0.0
    }

    pub fn real_nome(&self) -> Option<f64> {
        if self.real_q.is_some() {
            self.real_q
        } else if self.has_real_nome() {
            Some(self.log_nome.re.exp())
        } else {
            None
        }
    }

    pub fn nome(&self) -> Complex {
        self.nome_power(1.0)
    }

    /// `q^e = exp(iπτ e)`.
    pub fn nome_power(&self, e: f64) -> Complex {
        if self.degenerate {
            if e == 0.0 {
                ONE
            } else {
                ZERO
            }
        } else {
            (self.log_nome * e).exp()
        }
    }

    /// The lattice `τ + δ`, used for derivatives in `τ`.
    pub fn shifted(&self, delta: Complex) -> Result<Self> {
        if self.degenerate {
            return Err(Error::InvalidParameter(
                "cannot shift the degenerate lattice".into(),
            ));
        }
        Self::from_tau(self.tau + delta)
    }

    pub fn same_lattice(&self, other: &LatticeParameter) -> bool {
        self.degenerate == other.degenerate && (self.degenerate || self.tau == other.tau)
    }
}

pub(crate) fn theta_term(kind: ThetaKind, n: usize, v: Complex, lat: &LatticeParameter) -> Complex {
    let nf = n as f64;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    match kind {
        ThetaKind::Theta1 => {
            let e = (nf + 0.5) * (nf + 0.5);
            2.0 * sign * lat.nome_power(e) * (PI * (2.0 * nf + 1.0) * v).sin()
        }
        ThetaKind::Theta2 => {
            let e = (nf + 0.5) * (nf + 0.5);
            2.0 * lat.nome_power(e) * (PI * (2.0 * nf + 1.0) * v).cos()
        }
        ThetaKind::Theta3 => {
            if n == 0 {
                return ONE;
            }
            2.0 * lat.nome_power(nf * nf) * (2.0 * PI * nf * v).cos()
        }
        ThetaKind::Theta4 => {
            if n == 0 {
                return ONE;
            }
            2.0 * sign * lat.nome_power(nf * nf) * (2.0 * PI * nf * v).cos()
        }
    }
}

pub fn theta_series(
    kind: ThetaKind,
    v: Complex,
    lat: &LatticeParameter,
    policy: &TruncationPolicy,
) -> Result<Complex> {
    let context = format!("{kind} q-series at v = {v}");
    sum_until_negligible(|n| theta_term(kind, n, v, lat), policy, &context)
}

pub fn theta1_series(v: Complex, lat: &LatticeParameter, policy: &TruncationPolicy) -> Result<Complex> {
    theta_series(ThetaKind::Theta1, v, lat, policy)
}

pub fn theta2_series(v: Complex, lat: &LatticeParameter, policy: &TruncationPolicy) -> Result<Complex> {
    theta_series(ThetaKind::Theta2, v, lat, policy)
}

pub fn theta3_series(v: Complex, lat: &LatticeParameter, policy: &TruncationPolicy) -> Result<Complex> {
    theta_series(ThetaKind::Theta3, v, lat, policy)
}

pub fn theta4_series(v: Complex, lat: &LatticeParameter, policy: &TruncationPolicy) -> Result<Complex> {
    theta_series(ThetaKind::Theta4, v, lat, policy)
}

/// Theta values at `v = 0` together with the derivatives the expansions need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaConstants {
    pub theta2_0: Complex,
    pub theta3_0: Complex,
    pub theta4_0: Complex,
    /// `∂²θ4/∂v²` at `v = 0`.
    pub theta4_dd_0: Complex,
    /// `∂θ1/∂v` at `v = 0`.
    pub theta1_d_0: Complex,
}

pub fn theta_constants(lat: &LatticeParameter, policy: &TruncationPolicy) -> Result<ThetaConstants> {
    let theta2_0 = theta2_series(ZERO, lat, policy)?;
    let theta3_0 = theta3_series(ZERO, lat, policy)?;
    let theta4_0 = theta4_series(ZERO, lat, policy)?;
    // θ4''(0) = -8π² Σ_{n≥1} (-1)^n n² q^{n²}
    let theta4_dd_0 = sum_until_negligible(
        |i| {
            let n = (i + 1) as f64;
            let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
            -8.0 * PI * PI * sign * n * n * lat.nome_power(n * n)
        },
        policy,
        "theta4''(0)",
    )?;
    // θ1'(0) = 2π Σ_{n≥0} (-1)^n (2n+1) q^{(n+1/2)²}
    let theta1_d_0 = sum_until_negligible(
        |n| {
            let nf = n as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            2.0 * PI * sign * (2.0 * nf + 1.0) * lat.nome_power((nf + 0.5) * (nf + 0.5))
        },
        policy,
        "theta1'(0)",
    )?;
    Ok(ThetaConstants {
        theta2_0,
        theta3_0,
        theta4_0,
        theta4_dd_0,
        theta1_d_0,
    })
}

/// Modulus, complementary modulus and the two quarter periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModuli {
    pub k: Complex,
    pub k_prime: Complex,
    /// `K`, the real quarter period.
    pub quarter_period: Complex,
    /// `K'`, the imaginary quarter period.
    pub quarter_period_prime: Complex,
}

/// `K = (π/2)θ3(0)²`, the quarter period in the theta normalization.
pub fn quarter_period(consts: &ThetaConstants) -> Complex {
    0.5 * PI * consts.theta3_0 * consts.theta3_0
}

pub fn elliptic_moduli(consts: &ThetaConstants) -> Result<EllipticModuli> {
    if consts.theta3_0 == ZERO {
        return Err(Error::DegenerateModulus("theta3(0) vanishes".into()));
    }
    let t3sq = consts.theta3_0 * consts.theta3_0;
    let k = consts.theta2_0 * consts.theta2_0 / t3sq;
    let k_prime = consts.theta4_0 * consts.theta4_0 / t3sq;
    if k.im == 0.0 && k.re >= 1.0 {
        return Err(Error::DegenerateModulus(format!("real modulus {} ≥ 1", k.re)));
    }
    if k == ZERO {
        return Err(Error::DegenerateModulus(
            "k = 0: the imaginary quarter period is infinite".into(),
        ));
    }
    // K' = K(k'), and the complementary modulus of k' is k itself.
    let quarter_period_prime = PI / (2.0 * agm(ONE, k)?);
    Ok(EllipticModuli {
        k,
        k_prime,
        quarter_period: quarter_period(consts),
        quarter_period_prime,
    })
}

/// `K' = (π/2)θ3(0, -1/τ)²`, the modular-transformation route to the imaginary quarter period.
pub fn quarter_period_prime_modular(lat: &LatticeParameter, policy: &TruncationPolicy) -> Result<Complex> {
    if lat.is_degenerate() {
        return Err(Error::DegenerateModulus("K' is infinite at q = 0".into()));
    }
    let dual = LatticeParameter::from_tau(-ONE / lat.tau())?;
    let t3 = theta3_series(ZERO, &dual, policy)?;
    Ok(0.5 * PI * t3 * t3)
}

/// Arithmetic-geometric mean of `a` and `b`.
///
/// For complex inputs the square root is chosen at every step so that the new
/// pair stays on the "right" side, `|a' - b'| ≤ |a' + b'|`.
pub fn agm(a: Complex, b: Complex) -> Result<Complex> {
    let (mut a, mut b) = (a, b);
    for _ in 0..64 {
        if (a - b).norm() <= 4.0 * f64::EPSILON * a.norm() {
            return Ok(a);
        }
        let next_a = 0.5 * (a + b);
        let mut next_b = (a * b).sqrt();
        if (next_a - next_b).norm() > (next_a + next_b).norm() {
            next_b = -next_b;
        }
        a = next_a;
        b = next_b;
    }
    if (a - b).norm() <= 1e-14 * a.norm() {
        Ok(a)
    } else {
        Err(Error::NonConvergence {
            context: "arithmetic-geometric mean".into(),
            terms: 64,
            last_term: (a - b).norm(),
        })
    }
}

/// Complete elliptic integral of the first kind, `K(k) = π / (2 agm(1, k'))`.
pub fn agm_k(k: Complex) -> Result<Complex> {
    let one_minus_k2 = (ONE - k) * (ONE + k);
    if one_minus_k2 == ZERO {
        return Err(Error::DegenerateModulus("K(±1) is infinite".into()));
    }
    let kc = one_minus_k2.sqrt();
    let m = agm(ONE, kc)?;
    if m == ZERO {
        return Err(Error::DegenerateModulus(format!("agm(1, k') vanishes at k = {k}")));
    }
    Ok(PI / (2.0 * m))
}

/// A horizontal band `|Im(v - shift)| < factor · Im τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripDomain {
    half_width_factor: f64,
    shift: Complex,
}

impl StripDomain {
    pub fn new(half_width_factor: f64, shift: Complex) -> Result<Self> {
        if half_width_factor != 0.5 && half_width_factor != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "strip half-width factor must be 1/2 or 1, got {half_width_factor}"
            )));
        }
        Ok(Self {
            half_width_factor,
            shift,
        })
    }

    pub fn half() -> Self {
        Self {
            half_width_factor: 0.5,
            shift: ZERO,
        }
    }

    pub fn full() -> Self {
        Self {
            half_width_factor: 1.0,
            shift: ZERO,
        }
    }

    /// Stated validity strips: factor 1 for θ1 and θ3, 1/2 for θ2 and θ4.
    pub fn for_theta(kind: ThetaKind) -> Self {
        match kind {
            ThetaKind::Theta1 | ThetaKind::Theta3 => Self::full(),
            ThetaKind::Theta2 | ThetaKind::Theta4 => Self::half(),
        }
    }

    pub fn half_width_factor(&self) -> f64 {
        self.half_width_factor
    }

    pub fn shift(&self) -> Complex {
        self.shift
    }

    pub fn bound(&self, lat: &LatticeParameter) -> f64 {
        self.half_width_factor * lat.tau_im()
    }
}

pub fn in_strip(v: Complex, lat: &LatticeParameter, strip: &StripDomain) -> bool {
    (v - strip.shift).im.abs() < strip.bound(lat)
}
