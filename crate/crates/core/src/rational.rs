//! Exact rational helpers shared by every module.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::FanError;

/// Exact rational number, always in lowest terms with a positive denominator.
pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

pub fn half() -> Q {
    q(1, 2)
}

/// `base^exp` for a non-negative exponent.
pub fn pow(base: &Q, exp: u64) -> Q {
    let mut acc = Q::one();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    acc
}

/// `3^{-k}`.
pub fn third_pow(k: u64) -> Q {
    BigRational::new(BigInt::one(), BigInt::from(3u32).pow(k as u32))
}

/// Formats as `p/q`, or `p` when the denominator is one.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p/q` or an integer.
pub fn parse_q(s: &str) -> Result<Q, FanError> {
    let s = s.trim();
    let bad = || FanError::Parse { pos: 0, msg: format!("invalid rational `{s}`") };
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(n))
        }
    }
}

/// Fixed-point decimal with `digits` fractional digits, rounded half away from zero.
pub fn to_decimal(x: &Q, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = x.numer() * &scale;
    let d = x.denom();
    let (mut quo, rem) = scaled.abs().div_rem(d);
    if rem * BigInt::from(2) >= *d {
        quo += 1;
    }
    let neg = x.is_negative() && !quo.is_zero();
    let mut s = quo.to_string();
    if digits > 0 {
        let w = digits as usize + 1;
        if s.len() < w {
            s = format!("{}{}", "0".repeat(w - s.len()), s);
        }
        let split = s.len() - digits as usize;
        s = format!("{}.{}", &s[..split], &s[split..]);
    }
    if neg {
        format!("-{s}")
    } else {
        s
    }
}

/// Nearest `f64`; saturates to `0.0` on underflow.
pub fn to_f64(x: &Q) -> f64 {
    if let Some(v) = x.to_f64() {
        if v.is_finite() && (v != 0.0 || x.is_zero()) {
            return v;
        }
    }
    let n = x.numer().magnitude();
    let d = x.denom().magnitude();
    let kn = n.bits().saturating_sub(64);
    let kd = d.bits().saturating_sub(64);
    let n2 = (n >> kn).to_f64().unwrap_or(0.0);
    let d2 = (d >> kd).to_f64().unwrap_or(1.0);
    let e = kn as i64 - kd as i64;
    let v = n2 / d2 * 2f64.powi(e.clamp(-2000, 2000) as i32);
    if x.is_negative() {
        -v
    } else {
        v
    }
}

/// Exponent of 3 in the denominator if the denominator is a pure power of 3.
pub fn ternary_exponent(x: &Q) -> Option<u32> {
    let mut d: BigUint = x.denom().magnitude().clone();
    let three = BigUint::from(3u32);
    let mut k = 0u32;
    while !d.is_one() {
        let (quo, rem) = d.div_rem(&three);
        if !rem.is_zero() {
            return None;
        }
        d = quo;
        k += 1;
    }
    Some(k)
}

/// Ternary digits `d_1..d_L` of a rational `p/3^L` in `[0,1)`.
pub fn ternary_digits(x: &Q) -> Option<Vec<u8>> {
    if x.is_negative() || *x >= Q::one() {
        return None;
    }
    let l = ternary_exponent(x)?;
    let mut n: BigUint = match x.numer().sign() {
        Sign::Minus => return None,
        _ => x.numer().magnitude().clone(),
    };
    let three = BigUint::from(3u32);
    let mut digits = vec![0u8; l as usize];
    for i in (0..l as usize).rev() {
        let (quo, rem) = n.div_rem(&three);
        digits[i] = rem.to_u8().unwrap_or(0);
        n = quo;
    }
    Some(digits)
}

/// Rational with the given ternary digits after the point.
pub fn from_ternary_digits(digits: &[u8]) -> Q {
    let mut n = BigInt::zero();
    for &d in digits {
        n = n * 3 + BigInt::from(d);
    }
    BigRational::new(n, BigInt::from(3u32).pow(digits.len() as u32))
}

/// True when `x` is a left endpoint of a basic Cantor interval: finite ternary expansion in {0,2}.
pub fn is_cantor_left_endpoint(x: &Q) -> bool {
    ternary_digits(x).is_some_and(|d| d.iter().all(|&v| v == 0 || v == 2))
}

/// Length of the finite ternary expansion of a Cantor left endpoint.
pub fn ternary_len(x: &Q) -> Option<u32> {
    ternary_exponent(x)
}

pub fn min_q<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max_q<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a >= b {
        a
    } else {
        b
    }
}
