//! Exact rational numbers used for program values and simulated time.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `12`, `-3`, `0.25` or `7/3`.
pub fn parse(text: &str) -> Option<Rat> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit() || c == '.') {
        return None;
    }
    let value = match body.split_once('.') {
        None => Rat::from_integer(body.parse().ok()?),
        Some((whole, frac)) => {
            if frac.contains('.') || (whole.is_empty() && frac.is_empty()) {
                return None;
            }
            let whole: BigInt = if whole.is_empty() { BigInt::zero() } else { whole.parse().ok()? };
            let frac_num: BigInt = if frac.is_empty() { BigInt::zero() } else { frac.parse().ok()? };
            let scale = num_traits::pow(BigInt::from(10), frac.len());
            Rat::from_integer(whole) + Rat::new(frac_num, scale)
        }
    };
    Some(if neg { -value } else { value })
}

/// Finite decimals print as decimals, everything else as `n/d`.
pub fn format(value: &Rat) -> String {
    if value.is_integer() {
        return value.numer().to_string();
    }
    let mut d = value.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let digits = twos.max(fives);
    let scaled = value.abs() * Rat::from_integer(num_traits::pow(BigInt::from(10), digits));
    let s = scaled.to_integer().to_string();
    let s = format!("{:0>width$}", s, width = digits + 1);
    let (whole, frac) = s.split_at(s.len() - digits);
    let sign = if value.is_negative() { "-" } else { "" };
    format!("{sign}{whole}.{frac}")
}

/// Lossless text form used in trace files: `n` or `n/d`.
pub fn to_exact(value: &Rat) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub mod serde_rat {
    use super::Rat;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::to_exact(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let text = String::deserialize(d)?;
        super::parse(&text).ok_or_else(|| serde::de::Error::custom(format!("bad rational `{text}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse("1.1"), Some(ratio(11, 10)));
        assert_eq!(parse("-0.25"), Some(ratio(-1, 4)));
        assert_eq!(parse("7/3"), Some(ratio(7, 3)));
        assert_eq!(parse("1."), Some(int(1)));
        assert_eq!(parse("abc"), None);
        assert_eq!(format(&ratio(11, 10)), "1.1");
        assert_eq!(format(&ratio(-1, 4)), "-0.25");
        assert_eq!(format(&ratio(1, 1000)), "0.001");
        assert_eq!(format(&ratio(1, 3)), "1/3");
        assert_eq!(format(&int(20)), "20");
        assert_eq!(to_exact(&ratio(11, 10)), "11/10");
    }
}
