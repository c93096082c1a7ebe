//! Outward-rounded interval arithmetic on `f64` endpoints.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_traits::Signed;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::rational::{from_f64, to_f64, Rational};
use super::round::*;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriBool {
    True,
    False,
    Indeterminate,
}

impl TriBool {
    pub fn is_true(self) -> bool {
        self == TriBool::True
    }

    pub fn and(self, other: TriBool) -> TriBool {
        match (self, other) {
            (TriBool::False, _) | (_, TriBool::False) => TriBool::False,
            (TriBool::True, TriBool::True) => TriBool::True,
            _ => TriBool::Indeterminate,
        }
    }
}

impl fmt::Display for TriBool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TriBool::True => "true",
            TriBool::False => "false",
            TriBool::Indeterminate => "indeterminate",
        };
        f.write_str(s)
    }
}

/// Closed interval `[lo, hi]`. Every operation returns an enclosure of the
/// exact real result over all members of its operands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IvKind {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidArgument(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Interval `[x - r, x + r]` rounded outward.
    pub fn centered(x: f64, r: f64) -> Self {
        let r = r.abs();
        Interval {
            lo: sub_down(x, r),
            hi: add_up(x, r),
        }
    }

    /// The tightest pair of doubles around `r`.
    pub fn from_rational(r: &Rational) -> Self {
        let f = to_f64(r);
        if !f.is_finite() {
            return if r.is_negative() {
                Interval {
                    lo: f64::NEG_INFINITY,
                    hi: f64::MIN,
                }
            } else {
                Interval {
                    lo: f64::MAX,
                    hi: f64::INFINITY,
                }
            };
        }
        let ef = from_f64(f);
        if &ef == r {
            Interval::point(f)
        } else if &ef < r {
            Interval {
                lo: f,
                hi: f.next_up(),
            }
        } else {
            Interval {
                lo: f.next_down(),
                hi: f,
            }
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        0.5 * self.lo + 0.5 * self.hi
    }

    /// Upper bound on the radius about `mid()`.
    pub fn rad(&self) -> f64 {
        let m = self.mid();
        sub_up(self.hi, m).max(sub_up(m, self.lo))
    }

    pub fn width(&self) -> f64 {
        sub_up(self.hi, self.lo)
    }

    /// Largest absolute value of a member.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value of a member.
    pub fn mig(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_rational(&self, r: &Rational) -> bool {
        self.lo.is_finite()
            && self.hi.is_finite()
            && from_f64(self.lo) <= *r
            && *r <= from_f64(self.hi)
            || (self.lo == f64::NEG_INFINITY && from_f64(self.hi.min(f64::MAX)) >= *r)
            || (self.hi == f64::INFINITY && from_f64(self.lo.max(f64::MIN)) <= *r)
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn sign(&self) -> TriBool {
        iv_sign(*self)
    }

    pub fn square(self) -> Interval {
        if self.lo >= 0.0 {
            Interval {
                lo: mul_down(self.lo, self.lo),
                hi: mul_up(self.hi, self.hi),
            }
        } else if self.hi <= 0.0 {
            Interval {
                lo: mul_down(self.hi, self.hi),
                hi: mul_up(self.lo, self.lo),
            }
        } else {
            let m = self.mag();
            Interval {
                lo: 0.0,
                hi: mul_up(m, m),
            }
        }
    }

    pub fn scale(self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval {
                lo: mul_down(self.lo, c),
                hi: mul_up(self.hi, c),
            }
        } else {
            Interval {
                lo: mul_down(self.hi, c),
                hi: mul_up(self.lo, c),
            }
        }
    }

    pub fn checked_div(self, rhs: Interval) -> Result<Interval> {
        if rhs.contains(0.0) {
            return Err(Error::DivisionByZeroInterval {
                lo: rhs.lo,
                hi: rhs.hi,
            });
        }
        let cands_lo = [
            div_down(self.lo, rhs.lo),
            div_down(self.lo, rhs.hi),
            div_down(self.hi, rhs.lo),
            div_down(self.hi, rhs.hi),
        ];
        let cands_hi = [
            div_up(self.lo, rhs.lo),
            div_up(self.lo, rhs.hi),
            div_up(self.hi, rhs.lo),
            div_up(self.hi, rhs.hi),
        ];
        Ok(Interval {
            lo: cands_lo.iter().copied().fold(f64::INFINITY, f64::min),
            hi: cands_hi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    pub fn checked_sqrt(self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::NegativeSqrt {
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(Interval {
            lo: sqrt_down(self.lo),
            hi: sqrt_up(self.hi),
        })
    }

    pub fn recip(self) -> Result<Interval> {
        Interval::ONE.checked_div(self)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, rhs.lo),
            hi: add_up(self.hi, rhs.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: sub_down(self.lo, rhs.hi),
            hi: sub_up(self.hi, rhs.lo),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let lo = mul_down(a, c)
            .min(mul_down(a, d))
            .min(mul_down(b, c))
            .min(mul_down(b, d));
        let hi = mul_up(a, c)
            .max(mul_up(a, d))
            .max(mul_up(b, c))
            .max(mul_up(b, d));
        Interval { lo, hi }
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        self.scale(rhs)
    }
}

impl AddAssign for Interval {
    fn add_assign(&mut self, rhs: Interval) {
        *self = *self + rhs;
    }
}

impl SubAssign for Interval {
    fn sub_assign(&mut self, rhs: Interval) {
        *self = *self - rhs;
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

/// Generic entry point mirroring the five primitive operations.
pub fn iv_op(kind: IvKind, a: Interval, b: Option<Interval>) -> Result<Interval> {
    let need_b =
        || b.ok_or_else(|| Error::InvalidArgument("binary interval op needs two operands".into()));
    match kind {
        IvKind::Add => Ok(a + need_b()?),
        IvKind::Sub => Ok(a - need_b()?),
        IvKind::Mul => Ok(a * need_b()?),
        IvKind::Div => a.checked_div(need_b()?),
        IvKind::Sqrt => a.checked_sqrt(),
    }
}

pub fn iv_sign(a: Interval) -> TriBool {
    if a.lo > 0.0 {
        TriBool::True
    } else if a.hi < 0.0 {
        TriBool::False
    } else {
        TriBool::Indeterminate
    }
}

/// Lossless hexadecimal float text, e.g. `0x1.8p+1` for 3.0.
pub fn to_hex_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let mant = bits & ((1u64 << 52) - 1);
    if exp_bits == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp_bits == 0 {
        (0, -1022)
    } else {
        (1, exp_bits - 1023)
    };
    let mut frac = format!("{mant:013x}");
    while frac.ends_with('0') {
        frac.pop();
    }
    let exp_sign = if exp >= 0 { "+" } else { "-" };
    if frac.is_empty() {
        format!("{sign}0x{lead}p{exp_sign}{}", exp.abs())
    } else {
        format!("{sign}0x{lead}.{frac}p{exp_sign}{}", exp.abs())
    }
}

pub fn parse_hex_float(s: &str) -> Result<f64> {
    let t = s.trim();
    match t {
        "inf" | "+inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let bad = || Error::Parse(format!("not a hex float: {s}"));
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let body = body
        .strip_prefix("0x")
        .or_else(|| body.strip_prefix("0X"))
        .ok_or_else(bad)?;
    let (mantissa, exp) = body.split_once(['p', 'P']).ok_or_else(bad)?;
    let exp: i32 = exp.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if frac_part.len() > 13 || int_part.len() != 1 {
        return Err(bad());
    }
    let lead = u64::from_str_radix(int_part, 16).map_err(|_| bad())?;
    let frac = if frac_part.is_empty() {
        0
    } else {
        u64::from_str_radix(&format!("{frac_part:0<13}"), 16).map_err(|_| bad())?
    };
    let value = match lead {
        0 if frac == 0 => 0.0,
        0 => {
            if exp != -1022 {
                return Err(bad());
            }
            f64::from_bits(frac)
        }
        1 => {
            let e = exp + 1023;
            if !(1..=2046).contains(&e) {
                return Err(bad());
            }
            f64::from_bits(((e as u64) << 52) | frac)
        }
        _ => return Err(bad()),
    };
    Ok(if neg { -value } else { value })
}

/// `#[serde(with = "serde_hexf")]` for bit-exact `f64` fields.
pub mod serde_hexf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&super::to_hex_float(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_hex_float(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    lo: String,
    hi: String,
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IntervalRepr {
            lo: to_hex_float(self.lo),
            hi: to_hex_float(self.hi),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Interval, D::Error> {
        let r = IntervalRepr::deserialize(d)?;
        let lo = parse_hex_float(&r.lo).map_err(serde::de::Error::custom)?;
        let hi = parse_hex_float(&r.hi).map_err(serde::de::Error::custom)?;
        Interval::new(lo, hi).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational::rat;

    #[test]
    fn add_of_points_is_tight() {
        let r = iv_op(
            IvKind::Add,
            Interval::point(1.0),
            Some(Interval::point(2.0)),
        )
        .unwrap();
        assert!(r.contains(3.0));
        assert!(r.width() <= 2.0 * f64::EPSILON * 3.0);
    }

    #[test]
    fn one_third_strictly_inside() {
        let r = iv_op(
            IvKind::Div,
            Interval::point(1.0),
            Some(Interval::point(3.0)),
        )
        .unwrap();
        let third = rat(1, 3).unwrap();
        assert!(from_f64(r.lo()) < third && third < from_f64(r.hi()));
    }

    #[test]
    fn alpha_squared_enclosed() {
        let a = Interval::from_rational(&rat(93, 128).unwrap());
        let sq = iv_op(IvKind::Mul, a, Some(a)).unwrap();
        assert!(sq.contains_rational(&rat(8649, 16384).unwrap()));
    }

    #[test]
    fn rational_enclosure_contains_value() {
        for (p, q) in [(1, 3), (-2, 7), (3139, 256), (1, 10)] {
            let r = rat(p, q).unwrap();
            let iv = Interval::from_rational(&r);
            assert!(iv.contains_rational(&r), "{p}/{q}");
            assert!(iv.width() <= f64::EPSILON * iv.mag() * 2.0);
        }
    }

    #[test]
    fn errors() {
        let z = Interval::new(-1.0, 1.0).unwrap();
        assert!(matches!(
            iv_op(IvKind::Div, Interval::ONE, Some(z)),
            Err(Error::DivisionByZeroInterval { .. })
        ));
        assert!(matches!(
            iv_op(IvKind::Sqrt, Interval::new(-0.5, 1.0).unwrap(), None),
            Err(Error::NegativeSqrt { .. })
        ));
    }

    #[test]
    fn signs() {
        assert_eq!(iv_sign(Interval::new(0.5, 0.7).unwrap()), TriBool::True);
        assert_eq!(
            iv_sign(Interval::new(-0.1, 0.1).unwrap()),
            TriBool::Indeterminate
        );
        assert_eq!(iv_sign(Interval::new(-2.0, -1.0).unwrap()), TriBool::False);
        assert_eq!(iv_sign(Interval::ZERO), TriBool::Indeterminate);
    }

    #[test]
    fn hex_float_roundtrip() {
        for x in [
            0.0,
            -0.0,
            1.0,
            3.0,
            0.1,
            -1.0 / 3.0,
            f64::MAX,
            f64::MIN_POSITIVE,
            5e-324,
            12.328_089_37,
        ] {
            let s = to_hex_float(x);
            let y = parse_hex_float(&s).unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{s}");
        }
        assert_eq!(to_hex_float(3.0), "0x1.8p+1");
        assert_eq!(to_hex_float(1.0), "0x1p+0");
    }

    #[test]
    fn json_is_bit_exact() {
        let iv = Interval::new(0.1, 0.30000000000000004).unwrap();
        let s = serde_json::to_string(&iv).unwrap();
        let back: Interval = serde_json::from_str(&s).unwrap();
        assert_eq!(back, iv);
        assert!(s.contains("0x1.999999999999ap-4"));
    }
}
