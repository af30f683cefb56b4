//! Probability mass kept in the log domain.
//!
//! Every mass in this crate is a `LogMass`: the natural logarithm of a value
//! in [0, 1], with -inf standing for mass exactly zero. Keeping the log form
//! everywhere lets sequence masses like theta^5000 survive far below the
//! smallest positive f64, and makes products and ratios exact additions.
//!
//! Sums of masses go through [`LogMass::log_sum`] / [`LogMass::log_sum_all`],
//! the usual max-shifted log-sum-exp.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Product;
use std::ops::{Div, Mul, MulAssign};

/// Rounding slack tolerated above log 1 = 0 before a value is treated as a
/// contract violation rather than float noise.
const POSITIVE_SLACK: f64 = 1e-6;

/// Natural log of a mass in [0, 1]; `NEG_INFINITY` is mass zero.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
pub struct LogMass(f64);

impl LogMass {
    /// Mass 0.
    pub const ZERO: LogMass = LogMass(f64::NEG_INFINITY);
    /// Mass 1.
    pub const ONE: LogMass = LogMass(0.0);

    /// Wraps a natural-log value. Values in (0, `POSITIVE_SLACK`] are clamped
    /// to 0 as accumulated rounding; larger positive values panic because a
    /// mass above one is always a caller bug, not noise.
    #[must_use]
    pub fn from_ln(ln: f64) -> Self {
        assert!(
            ln <= POSITIVE_SLACK,
            "log-mass {ln} exceeds 0 beyond rounding slack"
        );
        assert!(!ln.is_nan(), "log-mass is NaN");
        LogMass(ln.min(0.0))
    }

    /// Wraps a linear probability in [0, 1].
    #[must_use]
    pub fn from_prob(p: f64) -> Self {
        assert!(
            (-1e-12..=1.0 + 1e-12).contains(&p),
            "probability {p} outside [0, 1]"
        );
        if p <= 0.0 {
            LogMass::ZERO
        } else {
            LogMass(p.min(1.0).ln())
        }
    }

    /// The stored natural log.
    #[must_use]
    pub fn ln(self) -> f64 {
        self.0
    }

    /// Back to the linear domain. Underflows to 0.0 for very negative logs.
    #[must_use]
    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    #[must_use]
    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// log(exp a + exp b), stable under large magnitude differences.
    /// The sum may exceed mass one only by rounding slack; anything larger
    /// panics in `from_ln`.
    #[must_use]
    pub fn log_sum(a: LogMass, b: LogMass) -> LogMass {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        let (hi, lo) = if a.0 >= b.0 { (a.0, b.0) } else { (b.0, a.0) };
        LogMass::from_ln(hi + (lo - hi).exp().ln_1p())
    }

    /// Log-sum-exp over any number of masses.
    #[must_use]
    pub fn log_sum_all<I: IntoIterator<Item = LogMass>>(terms: I) -> LogMass {
        let logs: Vec<f64> = terms
            .into_iter()
            .filter(|m| !m.is_zero())
            .map(LogMass::ln)
            .collect();
        if logs.is_empty() {
            return LogMass::ZERO;
        }
        let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs.iter().map(|l| (l - hi).exp()).sum();
        LogMass::from_ln(hi + sum.ln())
    }

    /// Ratio of two masses as a conditional mass. The caller must rule out a
    /// zero denominator first; conditional masses above one are clamped as
    /// rounding noise (a real excess panics in `from_ln`).
    #[must_use]
    pub fn ratio(num: LogMass, den: LogMass) -> LogMass {
        assert!(!den.is_zero(), "ratio denominator has mass zero");
        if num.is_zero() {
            return LogMass::ZERO;
        }
        LogMass::from_ln(num.0 - den.0)
    }
}

impl Mul for LogMass {
    type Output = LogMass;
    fn mul(self, rhs: LogMass) -> LogMass {
        if self.is_zero() || rhs.is_zero() {
            return LogMass::ZERO;
        }
        LogMass(self.0 + rhs.0)
    }
}

impl MulAssign for LogMass {
    fn mul_assign(&mut self, rhs: LogMass) {
        *self = *self * rhs;
    }
}

impl Div for LogMass {
    type Output = LogMass;
    fn div(self, rhs: LogMass) -> LogMass {
        LogMass::ratio(self, rhs)
    }
}

impl Product for LogMass {
    fn product<I: Iterator<Item = LogMass>>(iter: I) -> LogMass {
        iter.fold(LogMass::ONE, |acc, m| acc * m)
    }
}

impl Eq for LogMass {}

impl Ord for LogMass {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("log-mass is never NaN")
    }
}

impl fmt::Debug for LogMass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogMass(ln={}, p={})", self.0, self.prob())
    }
}

/// Display shows the linear probability; the log form is a storage detail.
impl fmt::Display for LogMass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.prob())
    }
}
