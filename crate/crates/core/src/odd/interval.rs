//! Interval boundaries for ODD attributes.
//!
//! The textual form follows the European bracket convention used for ODD
//! attribute tables: `[a, b[` is closed at `a` and open at `b`. A `+` upper
//! bound (or `-` lower bound) means the side is unbounded. The parser also
//! accepts the Anglo-American spellings `[a, b)` and `(a, b]` and always
//! prints the European form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::OddError;

/// A real interval with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: Option<f64>,
    hi: Option<f64>,
    lo_inclusive: bool,
    hi_inclusive: bool,
}

impl Interval {
    /// Build an interval, `None` meaning unbounded on that side.
    pub fn new(
        lo: Option<f64>,
        lo_inclusive: bool,
        hi: Option<f64>,
        hi_inclusive: bool,
    ) -> Result<Self, OddError> {
        let text = || Self::render(lo, lo_inclusive, hi, hi_inclusive);
        if lo.is_some_and(|v| !v.is_finite()) || hi.is_some_and(|v| !v.is_finite()) {
            return Err(OddError::MalformedInterval {
                text: text(),
                reason: "bounds must be finite numbers".into(),
            });
        }
        if (lo.is_none() && lo_inclusive) || (hi.is_none() && hi_inclusive) {
            return Err(OddError::MalformedInterval {
                text: text(),
                reason: "an unbounded side cannot be inclusive".into(),
            });
        }
        if let (Some(a), Some(b)) = (lo, hi) {
            if a > b || (a == b && !(lo_inclusive && hi_inclusive)) {
                return Err(OddError::EmptyInterval(text()));
            }
        }
        Ok(Self {
            lo,
            hi,
            lo_inclusive,
            hi_inclusive,
        })
    }

    /// `[lo, hi]`
    pub fn closed(lo: f64, hi: f64) -> Result<Self, OddError> {
        Self::new(Some(lo), true, Some(hi), true)
    }

    /// `[lo, hi[`
    pub fn half_open(lo: f64, hi: f64) -> Result<Self, OddError> {
        Self::new(Some(lo), true, Some(hi), false)
    }

    /// `[lo, +[`
    pub fn at_least(lo: f64) -> Result<Self, OddError> {
        Self::new(Some(lo), true, None, false)
    }

    /// `]lo, +[`
    pub fn greater_than(lo: f64) -> Result<Self, OddError> {
        Self::new(Some(lo), false, None, false)
    }

    /// `]-, hi]`
    pub fn at_most(hi: f64) -> Result<Self, OddError> {
        Self::new(None, false, Some(hi), true)
    }

    /// `]-, hi[`
    pub fn below(hi: f64) -> Result<Self, OddError> {
        Self::new(None, false, Some(hi), false)
    }

    /// The whole real line.
    pub fn unbounded() -> Self {
        Self {
            lo: None,
            hi: None,
            lo_inclusive: false,
            hi_inclusive: false,
        }
    }

    pub fn lo(&self) -> Option<f64> {
        self.lo
    }

    pub fn hi(&self) -> Option<f64> {
        self.hi
    }

    pub fn lo_inclusive(&self) -> bool {
        self.lo_inclusive
    }

    pub fn hi_inclusive(&self) -> bool {
        self.hi_inclusive
    }

    /// Exact membership test; no tolerance is applied.
    pub fn contains(&self, value: f64) -> bool {
        if value.is_nan() {
            return false;
        }
        let above_lo = match self.lo {
            None => true,
            Some(lo) if self.lo_inclusive => value >= lo,
            Some(lo) => value > lo,
        };
        let below_hi = match self.hi {
            None => true,
            Some(hi) if self.hi_inclusive => value <= hi,
            Some(hi) => value < hi,
        };
        above_lo && below_hi
    }

    /// True when the two intervals share at least one point.
    pub fn intersects(&self, other: &Interval) -> bool {
        // Greatest lower end against least upper end.
        let (lo, lo_incl) = match (self.lo, other.lo) {
            (None, None) => (None, false),
            (Some(a), None) => (Some(a), self.lo_inclusive),
            (None, Some(b)) => (Some(b), other.lo_inclusive),
            (Some(a), Some(b)) if a > b => (Some(a), self.lo_inclusive),
            (Some(a), Some(b)) if b > a => (Some(b), other.lo_inclusive),
            (Some(a), Some(_)) => (Some(a), self.lo_inclusive && other.lo_inclusive),
        };
        let (hi, hi_incl) = match (self.hi, other.hi) {
            (None, None) => (None, false),
            (Some(a), None) => (Some(a), self.hi_inclusive),
            (None, Some(b)) => (Some(b), other.hi_inclusive),
            (Some(a), Some(b)) if a < b => (Some(a), self.hi_inclusive),
            (Some(a), Some(b)) if b < a => (Some(b), other.hi_inclusive),
            (Some(a), Some(_)) => (Some(a), self.hi_inclusive && other.hi_inclusive),
        };
        match (lo, hi) {
            (Some(a), Some(b)) => a < b || (a == b && lo_incl && hi_incl),
            _ => true,
        }
    }

    /// Smallest interval covering both, provided they overlap or touch at a
    /// point included by at least one of them.
    pub fn union_if_connected(&self, other: &Interval) -> Option<Interval> {
        let touching = |a: &Interval, b: &Interval| match (a.hi, b.lo) {
            (Some(h), Some(l)) => h == l && (a.hi_inclusive || b.lo_inclusive),
            _ => false,
        };
        if !(self.intersects(other) || touching(self, other) || touching(other, self)) {
            return None;
        }
        let (lo, lo_inclusive) = match (self.lo, other.lo) {
            (None, _) | (_, None) => (None, false),
            (Some(a), Some(b)) if a < b => (Some(a), self.lo_inclusive),
            (Some(a), Some(b)) if b < a => (Some(b), other.lo_inclusive),
            (Some(a), Some(_)) => (Some(a), self.lo_inclusive || other.lo_inclusive),
        };
        let (hi, hi_inclusive) = match (self.hi, other.hi) {
            (None, _) | (_, None) => (None, false),
            (Some(a), Some(b)) if a > b => (Some(a), self.hi_inclusive),
            (Some(a), Some(b)) if b > a => (Some(b), other.hi_inclusive),
            (Some(a), Some(_)) => (Some(a), self.hi_inclusive || other.hi_inclusive),
        };
        Some(Interval {
            lo,
            hi,
            lo_inclusive,
            hi_inclusive,
        })
    }

    fn render(lo: Option<f64>, lo_incl: bool, hi: Option<f64>, hi_incl: bool) -> String {
        let open = if lo_incl { '[' } else { ']' };
        let close = if hi_incl { ']' } else { '[' };
        let lo = lo.map_or_else(|| "-".to_string(), |v| v.to_string());
        let hi = hi.map_or_else(|| "+".to_string(), |v| v.to_string());
        format!("{open}{lo}, {hi}{close}")
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&Self::render(
            self.lo,
            self.lo_inclusive,
            self.hi,
            self.hi_inclusive,
        ))
    }
}

/// Parse the bracket notation, e.g. `"[0.25, 0.77["` or `"[0, +["`.
pub fn parse_interval(text: &str) -> Result<Interval, OddError> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let malformed = |reason: &str| OddError::MalformedInterval {
        text: text.to_string(),
        reason: reason.to_string(),
    };

    let mut chars = compact.chars();
    let lo_inclusive = match chars.next() {
        Some('[') => true,
        Some(']') | Some('(') => false,
        _ => return Err(malformed("expected '[', ']' or '(' at start")),
    };
    let hi_inclusive = match chars.next_back() {
        Some(']') => true,
        Some('[') | Some(')') => false,
        _ => return Err(malformed("expected ']', '[' or ')' at end")),
    };
    let body = chars.as_str();
    let (lo_text, hi_text) = body
        .split_once(',')
        .ok_or_else(|| malformed("expected ',' between bounds"))?;
    if hi_text.contains(',') {
        return Err(malformed("more than one ','"));
    }

    let lo = match lo_text {
        "-" | "-inf" | "-∞" | "−∞" => None,
        t => Some(parse_number(t).ok_or_else(|| malformed("lower bound is not a number"))?),
    };
    let hi = match hi_text {
        "+" | "+inf" | "inf" | "+∞" | "∞" => None,
        t => Some(parse_number(t).ok_or_else(|| malformed("upper bound is not a number"))?),
    };
    if (lo.is_none() && lo_inclusive) || (hi.is_none() && hi_inclusive) {
        return Err(malformed("an unbounded side cannot be inclusive"));
    }
    Interval::new(lo, lo_inclusive, hi, hi_inclusive).map_err(|e| match e {
        OddError::EmptyInterval(_) => OddError::EmptyInterval(text.to_string()),
        other => other,
    })
}

/// Inverse of [`parse_interval`], in European notation.
pub fn format_interval(interval: &Interval) -> String {
    interval.to_string()
}

fn parse_number(text: &str) -> Option<f64> {
    // `f64::from_str` also accepts "inf" and "NaN"; only plain decimals are bounds.
    let plain = !text.is_empty()
        && text
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
    if !plain {
        return None;
    }
    f64::from_str(text).ok().filter(|v| v.is_finite())
}

impl FromStr for Interval {
    type Err = OddError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_interval(s)
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_interval(&text).map_err(serde::de::Error::custom)
    }
}
