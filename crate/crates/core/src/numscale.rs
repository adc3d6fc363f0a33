//! Extended-range signed scalar arithmetic.
//!
//! An [`XScalar`] stores a sign and the natural log of its magnitude, so
//! quantities like `z = exp(-10000)` survive far past f64 underflow while
//! multiplication and division stay exact in the log domain. Addition uses
//! log-sum-exp; subtraction of nearly equal magnitudes (relative difference
//! below ~1e-14) deliberately collapses to zero instead of producing noise.
//!
//! There is no NaN state: operations that would produce one return
//! [`NumError`].

use std::cmp::Ordering;
use thiserror::Error;

/// Relative cancellation floor for opposite-sign addition: when
/// `|a| - |b|` is below this fraction of `|a|`, the sum is zero.
const CANCEL_REL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("ln of a non-positive value")]
    LnNonPositive,
    #[error("square root of a negative value")]
    SqrtNegative,
    #[error("zero raised to a non-positive power")]
    ZeroToNonPositivePower,
    #[error("result exceeds representable range")]
    Overflow,
}

/// Signed scalar stored as sign plus natural-log magnitude.
#[derive(Debug, Clone, Copy)]
pub struct XScalar {
    sign: i8,
    /// ln |x|; meaningless (kept at 0) when `sign == 0`.
    logmag: f64,
}

#[allow(clippy::should_implement_trait)] // named methods keep Result-based div/ln explicit
impl XScalar {
    pub const ZERO: XScalar = XScalar { sign: 0, logmag: 0.0 };
    pub const ONE: XScalar = XScalar { sign: 1, logmag: 0.0 };

    /// Build from an explicit sign and log-magnitude. `sign` is clamped to
    /// {-1, 0, +1}; a zero sign ignores `logmag`.
    pub fn from_log(sign: i8, logmag: f64) -> XScalar {
        assert!(logmag.is_finite() || sign == 0, "non-finite log magnitude");
        match sign.cmp(&0) {
            Ordering::Equal => XScalar::ZERO,
            Ordering::Greater => XScalar { sign: 1, logmag },
            Ordering::Less => XScalar { sign: -1, logmag },
        }
    }

    /// Convert a finite f64. Panics on NaN or infinity (no NaN state).
    pub fn from_float(v: f64) -> XScalar {
        assert!(v.is_finite(), "XScalar::from_float on non-finite value");
        if v == 0.0 {
            XScalar::ZERO
        } else {
            XScalar { sign: if v > 0.0 { 1 } else { -1 }, logmag: v.abs().ln() }
        }
    }

    /// Back to f64. Saturates: deep underflow returns signed zero, deep
    /// overflow returns `±f64::MAX`.
    pub fn to_float(self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        let mag = if self.logmag > 709.0 { f64::MAX } else { self.logmag.exp() };
        if self.sign > 0 { mag } else { -mag }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// ln |x|, or None for zero.
    pub fn logmag(self) -> Option<f64> {
        if self.sign == 0 { None } else { Some(self.logmag) }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn neg(self) -> XScalar {
        XScalar { sign: -self.sign, logmag: self.logmag }
    }

    pub fn abs(self) -> XScalar {
        XScalar { sign: self.sign.abs(), logmag: self.logmag }
    }

    pub fn add(self, other: XScalar) -> XScalar {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        // Order by magnitude so the formulas below see big first. Ties keep
        // the left operand first; both branches are symmetric under swap, so
        // a + b and b + a agree bit for bit.
        let (big, small) = if self.logmag >= other.logmag { (self, other) } else { (other, self) };
        let d = big.logmag - small.logmag; // >= 0
        if self.sign == other.sign {
            XScalar { sign: big.sign, logmag: big.logmag + (-d).exp().ln_1p() }
        } else if d < CANCEL_REL {
            XScalar::ZERO
        } else {
            // ln(1 - e^{-d}) via expm1 for small d
            XScalar { sign: big.sign, logmag: big.logmag + (-(-d).exp_m1()).ln() }
        }
    }

    pub fn sub(self, other: XScalar) -> XScalar {
        self.add(other.neg())
    }

    pub fn mul(self, other: XScalar) -> XScalar {
        if self.sign == 0 || other.sign == 0 {
            return XScalar::ZERO;
        }
        XScalar { sign: self.sign * other.sign, logmag: self.logmag + other.logmag }
    }

    pub fn div(self, other: XScalar) -> Result<XScalar, NumError> {
        if other.sign == 0 {
            return Err(NumError::DivisionByZero);
        }
        if self.sign == 0 {
            return Ok(XScalar::ZERO);
        }
        Ok(XScalar { sign: self.sign * other.sign, logmag: self.logmag - other.logmag })
    }

    /// Natural log; requires a positive operand. The result is an ordinary
    /// signed value (the log-magnitude reinterpreted through `from_float`).
    pub fn ln(self) -> Result<XScalar, NumError> {
        if self.sign <= 0 {
            return Err(NumError::LnNonPositive);
        }
        Ok(XScalar::from_float(self.logmag))
    }

    /// e^x. Errors when ln of the result would leave f64 range (i.e. |x|
    /// itself exceeds ~1.8e308), which requires |x| to be astronomically
    /// large; the argument's real value becomes the result's log-magnitude.
    pub fn exp(self) -> Result<XScalar, NumError> {
        if self.sign == 0 {
            return Ok(XScalar::ONE);
        }
        if self.logmag > 709.0 {
            return Err(NumError::Overflow);
        }
        let val = self.to_float();
        Ok(XScalar { sign: 1, logmag: val })
    }

    pub fn sqrt(self) -> Result<XScalar, NumError> {
        match self.sign.cmp(&0) {
            Ordering::Less => Err(NumError::SqrtNegative),
            Ordering::Equal => Ok(XScalar::ZERO),
            Ordering::Greater => Ok(XScalar { sign: 1, logmag: 0.5 * self.logmag }),
        }
    }

    /// Integer power; exact in the log domain.
    pub fn powi(self, n: i64) -> Result<XScalar, NumError> {
        if self.sign == 0 {
            return if n > 0 {
                Ok(XScalar::ZERO)
            } else {
                Err(NumError::ZeroToNonPositivePower)
            };
        }
        let sign = if n % 2 == 0 { 1 } else { self.sign };
        Ok(XScalar { sign, logmag: self.logmag * n as f64 })
    }

    /// Sine, computed through f64 (adequate for moderate arguments).
    pub fn sin(self) -> XScalar {
        XScalar::from_float(self.to_float().sin())
    }

    /// Total order consistent with the represented reals.
    pub fn cmp_total(self, other: XScalar) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return ord,
        }
        match self.sign {
            0 => Ordering::Equal,
            1 => self.logmag.partial_cmp(&other.logmag).unwrap(),
            _ => other.logmag.partial_cmp(&self.logmag).unwrap(),
        }
    }
}

impl PartialEq for XScalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_total(*other) == Ordering::Equal
    }
}

impl PartialOrd for XScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_total(*other))
    }
}

/// Arithmetic shared by f64 and [`XScalar`], so jets and the regularity
/// quantities can be evaluated in either scalar system.
pub trait Scalar: Copy + std::fmt::Debug {
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Build exp(logmag)·sign directly; this is how flat probe curves
    /// construct z far below f64 underflow.
    fn from_log_parts(sign: i8, logmag: f64) -> Self;
    fn zero() -> Self;
    fn one() -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn div(self, o: Self) -> Result<Self, NumError>;
    fn ln(self) -> Result<Self, NumError>;
    fn exp(self) -> Result<Self, NumError>;
    fn sqrt(self) -> Result<Self, NumError>;
    fn powi(self, n: i64) -> Result<Self, NumError>;
    /// x^e for real e; requires x >= 0 (0^e = 0 for e > 0).
    fn powf_pos(self, e: f64) -> Result<Self, NumError>;
    fn abs(self) -> Self;
    fn sin(self) -> Self;
    fn is_zero(self) -> bool;
    /// False when a standard-mode value has overflowed (extended scalars
    /// are finite by construction).
    fn is_finite_val(self) -> bool;
    fn cmp_total(self, o: Self) -> Ordering;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn from_log_parts(sign: i8, logmag: f64) -> Self {
        // Underflows to zero gracefully; flat curves must use XScalar.
        sign as f64 * logmag.exp()
    }
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
    fn div(self, o: Self) -> Result<Self, NumError> {
        if o == 0.0 {
            return Err(NumError::DivisionByZero);
        }
        let v = self / o;
        if v.is_infinite() {
            return Err(NumError::Overflow);
        }
        Ok(v)
    }
    fn ln(self) -> Result<Self, NumError> {
        if self <= 0.0 {
            return Err(NumError::LnNonPositive);
        }
        Ok(self.ln())
    }
    fn exp(self) -> Result<Self, NumError> {
        let v = self.exp();
        if v.is_infinite() {
            return Err(NumError::Overflow);
        }
        Ok(v)
    }
    fn sqrt(self) -> Result<Self, NumError> {
        if self < 0.0 {
            return Err(NumError::SqrtNegative);
        }
        Ok(self.sqrt())
    }
    fn powi(self, n: i64) -> Result<Self, NumError> {
        if self == 0.0 && n <= 0 {
            return Err(NumError::ZeroToNonPositivePower);
        }
        let v = self.powi(n as i32);
        if v.is_infinite() {
            return Err(NumError::Overflow);
        }
        Ok(v)
    }
    fn powf_pos(self, e: f64) -> Result<Self, NumError> {
        if self < 0.0 {
            return Err(NumError::LnNonPositive);
        }
        if self == 0.0 {
            return if e > 0.0 { Ok(0.0) } else { Err(NumError::ZeroToNonPositivePower) };
        }
        Ok(self.powf(e))
    }
    fn abs(self) -> Self {
        self.abs()
    }
    fn sin(self) -> Self {
        self.sin()
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
    fn is_finite_val(self) -> bool {
        self.is_finite()
    }
    fn cmp_total(self, o: Self) -> Ordering {
        self.partial_cmp(&o).expect("NaN escaped into Scalar::cmp_total")
    }
}

impl Scalar for XScalar {
    fn from_f64(v: f64) -> Self {
        XScalar::from_float(v)
    }
    fn to_f64(self) -> f64 {
        self.to_float()
    }
    fn from_log_parts(sign: i8, logmag: f64) -> Self {
        XScalar::from_log(sign, logmag)
    }
    fn zero() -> Self {
        XScalar::ZERO
    }
    fn one() -> Self {
        XScalar::ONE
    }
    fn add(self, o: Self) -> Self {
        XScalar::add(self, o)
    }
    fn sub(self, o: Self) -> Self {
        XScalar::sub(self, o)
    }
    fn mul(self, o: Self) -> Self {
        XScalar::mul(self, o)
    }
    fn neg(self) -> Self {
        XScalar::neg(self)
    }
    fn div(self, o: Self) -> Result<Self, NumError> {
        XScalar::div(self, o)
    }
    fn ln(self) -> Result<Self, NumError> {
        XScalar::ln(self)
    }
    fn exp(self) -> Result<Self, NumError> {
        XScalar::exp(self)
    }
    fn sqrt(self) -> Result<Self, NumError> {
        XScalar::sqrt(self)
    }
    fn powi(self, n: i64) -> Result<Self, NumError> {
        XScalar::powi(self, n)
    }
    fn powf_pos(self, e: f64) -> Result<Self, NumError> {
        match self.sign() {
            -1 => Err(NumError::LnNonPositive),
            0 => {
                if e > 0.0 {
                    Ok(XScalar::ZERO)
                } else {
                    Err(NumError::ZeroToNonPositivePower)
                }
            }
            _ => Ok(XScalar::from_log(1, e * self.logmag().unwrap())),
        }
    }
    fn abs(self) -> Self {
        XScalar::abs(self)
    }
    fn sin(self) -> Self {
        XScalar::sin(self)
    }
    fn is_zero(self) -> bool {
        XScalar::is_zero(self)
    }
    fn is_finite_val(self) -> bool {
        true
    }
    fn cmp_total(self, o: Self) -> Ordering {
        XScalar::cmp_total(self, o)
    }
}

/// Euclidean norm scaled by the largest component, so vectors whose entries
/// span hundreds of orders of magnitude neither overflow nor underflow:
/// `m * sqrt(sum (v_i/m)^2)` with `m = max |v_i|`.
pub fn vector_norm<S: Scalar>(v: &[S]) -> S {
    let mut m = S::zero();
    for &c in v {
        if c.abs().cmp_total(m) == Ordering::Greater {
            m = c.abs();
        }
    }
    if m.is_zero() {
        return S::zero();
    }
    let mut sum = 0.0;
    for &c in v {
        let r = c.div(m).expect("max component nonzero").to_f64();
        sum += r * r;
    }
    m.mul(S::from_f64(sum.sqrt()))
}

/// Dot product in the given scalar system.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc = acc.add(x.mul(y));
    }
    acc
}
