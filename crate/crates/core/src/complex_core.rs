//! Complex arithmetic helpers and the truncation rule shared by every series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Double-precision complex number used for every argument and value.
pub type Complex = num_complex::Complex64;

pub const I: Complex = Complex::new(0.0, 1.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);
pub const ZERO: Complex = Complex::new(0.0, 0.0);

/// Where an infinite series is cut off.
///
/// A series stops at the first index after which three consecutive terms have
/// magnitude below `term_tolerance`. Theta series are lacunary, so one small
/// term says nothing about the tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub term_tolerance: f64,
    pub max_terms: usize,
    pub max_order_p: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            term_tolerance: 1e-17,
            max_terms: 10_000,
            max_order_p: 128,
        }
    }
}

impl TruncationPolicy {
    pub fn new(term_tolerance: f64, max_terms: usize, max_order_p: usize) -> Result<Self> {
        let policy = Self {
            term_tolerance,
            max_terms,
            max_order_p,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.term_tolerance >= 0.0 && self.term_tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "term_tolerance must lie in [0, 1), got {}",
                self.term_tolerance
            )));
        }
        if self.max_terms < 8 {
            return Err(Error::InvalidParameter(format!(
                "max_terms must be at least 8, got {}",
                self.max_terms
            )));
        }
        if self.max_order_p < 4 {
            return Err(Error::InvalidParameter(format!(
                "max_order_p must be at least 4, got {}",
                self.max_order_p
            )));
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, term_tolerance: f64) -> Self {
        self.term_tolerance = term_tolerance;
        self
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms;
        self
    }
}

/// Scalars that can be summed by [`sum_until_negligible`].
pub trait SeriesTerm: Copy + std::ops::AddAssign {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl SeriesTerm for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl SeriesTerm for Complex {
    fn zero() -> Self {
        ZERO
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Partial sum together with the number of terms that went into it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum<T> {
    pub value: T,
    pub terms: usize,
}

const CONSECUTIVE_SMALL: usize = 3;

/// Sums `term(0) + term(1) + ...` under `policy`, reporting the term count.
pub fn sum_until_negligible_counted<T, F>(
    mut term: F,
    policy: &TruncationPolicy,
    context: &str,
) -> Result<SeriesSum<T>>
where
    T: SeriesTerm,
    F: FnMut(usize) -> T,
{
    let mut acc = T::zero();
    let mut small_run = 0;
    let mut last = f64::INFINITY;
    for n in 0..policy.max_terms {
        let t = term(n);
        if !t.is_finite_value() {
            return Err(Error::Overflow(format!("{context}, term {n}")));
        }
        acc += t;
        last = t.magnitude();
        if last < policy.term_tolerance {
            small_run += 1;
            if small_run >= CONSECUTIVE_SMALL {
                return finish(acc, n + 1, context);
            }
        } else {
            small_run = 0;
        }
    }
    if last >= policy.term_tolerance {
        return Err(Error::NonConvergence {
            context: context.to_string(),
            terms: policy.max_terms,
            last_term: last,
        });
    }
    finish(acc, policy.max_terms, context)
}

fn finish<T: SeriesTerm>(acc: T, terms: usize, context: &str) -> Result<SeriesSum<T>> {
    if !acc.is_finite_value() {
        return Err(Error::Overflow(context.to_string()));
    }
    Ok(SeriesSum { value: acc, terms })
}

/// Sums an indexed sequence until its terms become negligible under `policy`.
pub fn sum_until_negligible<T, F>(term: F, policy: &TruncationPolicy, context: &str) -> Result<T>
where
    T: SeriesTerm,
    F: FnMut(usize) -> T,
{
    sum_until_negligible_counted(term, policy, context).map(|s| s.value)
}

pub fn ensure_finite(z: Complex, context: &str) -> Result<Complex> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::Overflow(context.to_string()))
    }
}

pub fn complex_sin(z: Complex) -> Result<Complex> {
    ensure_finite(z.sin(), "complex_sin")
}

pub fn complex_cos(z: Complex) -> Result<Complex> {
    ensure_finite(z.cos(), "complex_cos")
}

pub fn complex_exp(z: Complex) -> Result<Complex> {
    ensure_finite(z.exp(), "complex_exp")
}

/// Principal branch, `Im` in `(-π, π]`.
pub fn complex_log_principal(z: Complex) -> Result<Complex> {
    if z == ZERO {
        return Err(Error::Domain("logarithm of zero".into()));
    }
    ensure_finite(z.ln(), "complex_log_principal")
}

/// `|a - b| / max(1, |b|)`, the mixed deviation used throughout the reports.
pub fn mixed_deviation(a: Complex, b: Complex) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}
