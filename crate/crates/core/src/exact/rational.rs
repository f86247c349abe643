//! Arbitrary-precision helpers for the exact backend.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Parses a decimal literal such as `-12.5e-3` exactly.
pub fn parse_decimal(text: &str) -> Result<BigRational> {
    let bad = || Error::invalid(format!("'{text}' is not a decimal number"));
    let s = text.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let mut num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    if neg {
        num = -num;
    }
    let scale = exp - frac.len() as i64;
    if scale.unsigned_abs() > 100_000 {
        return Err(Error::invalid(format!(
            "exponent of '{text}' is out of range"
        )));
    }
    let ten = BigInt::from(10u32);
    Ok(if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// The exact rational value of a finite double.
pub fn f64_to_rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::invalid(format!("{x} is not finite")))
}

/// `x * 2^e` without intermediate under- or overflow.
fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Nearest double to `num / den`, correct to about one ulp even when both
/// operands have millions of bits.
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if den.is_zero() {
        return f64::NAN;
    }
    if num.is_zero() {
        return 0.0;
    }
    let negative = (num.sign() == Sign::Minus) != (den.sign() == Sign::Minus);
    let n = num.magnitude();
    let d = den.magnitude();
    let shift = d.bits() as i64 - n.bits() as i64 + 128;
    let q = if shift >= 0 {
        (n << shift as usize) / d
    } else {
        n / (d << (-shift) as usize)
    };
    let v = ldexp(q.to_f64().unwrap_or(f64::INFINITY), -shift);
    if negative {
        -v
    } else {
        v
    }
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    ratio_to_f64(x.numer(), x.denom())
}

/// `num / den` in scientific notation with `digits` significant digits.
pub fn ratio_to_decimal(num: &BigInt, den: &BigInt, digits: usize) -> String {
    if num.is_zero() {
        return "0".into();
    }
    let digits = digits.max(1);
    let negative = (num.sign() == Sign::Minus) != (den.sign() == Sign::Minus);
    let n = BigInt::from_biguint(Sign::Plus, num.magnitude().clone());
    let d = BigInt::from_biguint(Sign::Plus, den.magnitude().clone());
    // log10 estimate from bit lengths, corrected below
    let approx = (n.bits() as f64 - d.bits() as f64) * std::f64::consts::LOG10_2;
    let mut e10 = approx.floor() as i64;
    let ten = BigInt::from(10u32);
    let scaled = |e10: i64| -> BigInt {
        let p = digits as i64 - 1 - e10;
        let (a, b) = if p >= 0 {
            (&n * num_traits::pow(ten.clone(), p as usize), d.clone())
        } else {
            (n.clone(), &d * num_traits::pow(ten.clone(), (-p) as usize))
        };
        let (q, r) = a.div_rem(&b);
        if (r << 1usize) >= b {
            q + 1
        } else {
            q
        }
    };
    let lower = num_traits::pow(ten.clone(), digits - 1);
    let upper = num_traits::pow(ten.clone(), digits);
    let mut q = scaled(e10);
    for _ in 0..4 {
        if q >= upper {
            e10 += 1;
        } else if q < lower {
            e10 -= 1;
        } else {
            break;
        }
        q = scaled(e10);
    }
    let s = q.to_string();
    let (head, tail) = s.split_at(1);
    let sign = if negative { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{e10}")
    } else {
        format!("{sign}{head}.{tail}e{e10}")
    }
}

/// A fraction kept unreduced; sums of many such fractions stay cheap because
/// no gcd is ever taken.
#[derive(Debug, Clone)]
pub struct Fraction {
    pub num: BigInt,
    pub den: BigInt,
}

impl Fraction {
    pub fn zero() -> Self {
        Fraction {
            num: BigInt::zero(),
            den: BigInt::one(),
        }
    }

    pub fn add(&self, other: &Fraction) -> Fraction {
        if self.num.is_zero() {
            return other.clone();
        }
        if other.num.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return Fraction {
                num: &self.num + &other.num,
                den: self.den.clone(),
            };
        }
        Fraction {
            num: &self.num * &other.den + &other.num * &self.den,
            den: &self.den * &other.den,
        }
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.num, &self.den)
    }

    pub fn to_decimal(&self, digits: usize) -> String {
        ratio_to_decimal(&self.num, &self.den, digits)
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.num.clone(), self.den.clone())
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative() != self.den.is_negative() && !self.num.is_zero()
    }
}

/// Pairwise-tree sum; the reduction order depends only on the input order.
pub fn tree_sum(mut terms: Vec<Fraction>) -> Fraction {
    if terms.is_empty() {
        return Fraction::zero();
    }
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut it = terms.chunks(2);
        for pair in &mut it {
            next.push(if pair.len() == 2 {
                pair[0].add(&pair[1])
            } else {
                pair[0].clone()
            });
        }
        terms = next;
    }
    terms.pop().expect("nonempty")
}

/// Determinant of an integer matrix by fraction-free (Bareiss) elimination.
pub fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    if n == 0 {
        return BigInt::one();
    }
    sign * &m[n - 1][n - 1]
}

/// Determinant of a rational matrix: rows are cleared of denominators and
/// passed to [`bareiss_det`].
pub fn rational_det(m: &[Vec<BigRational>]) -> BigRational {
    let mut scale = BigInt::one();
    let rows: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            scale *= &l;
            row.iter().map(|x| x.numer() * (&l / x.denom())).collect()
        })
        .collect();
    BigRational::new(bareiss_det(rows), scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_decimal("0.1").unwrap(), q(1, 10));
        assert_eq!(parse_decimal("-12.5e-3").unwrap(), q(-1, 80));
        assert_eq!(parse_decimal("3E2").unwrap(), q(300, 1));
        assert_eq!(parse_decimal(".5").unwrap(), q(1, 2));
        assert_eq!(parse_decimal("7.").unwrap(), q(7, 1));
        assert!(parse_decimal("1.2.3").is_err());
        assert!(parse_decimal("e5").is_err());
        assert!(parse_decimal("0x10").is_err());
    }

    #[test]
    fn huge_ratio_to_f64() {
        let big = num_traits::pow(BigInt::from(3u32), 5000);
        let num = &big * 7;
        assert_eq!(ratio_to_f64(&num, &big), 7.0);
        let tiny = ratio_to_f64(&BigInt::one(), &num_traits::pow(BigInt::from(10u32), 160));
        assert!((tiny / 1e-160 - 1.0).abs() < 1e-15);
        assert_eq!(ratio_to_f64(&BigInt::from(-1), &BigInt::from(4)), -0.25);
    }

    #[test]
    fn decimal_strings() {
        assert_eq!(
            ratio_to_decimal(&BigInt::from(1), &BigInt::from(3), 5),
            "3.3333e-1"
        );
        assert_eq!(
            ratio_to_decimal(&BigInt::from(-2), &BigInt::from(3), 3),
            "-6.67e-1"
        );
        assert_eq!(
            ratio_to_decimal(&BigInt::from(1000), &BigInt::from(1), 2),
            "1.0e3"
        );
        assert_eq!(
            ratio_to_decimal(&BigInt::from(999_999), &BigInt::from(1), 2),
            "1.0e6"
        );
    }

    #[test]
    fn tree_sum_matches_rational_sum() {
        let terms: Vec<Fraction> = (1..40i64)
            .map(|k| Fraction {
                num: BigInt::from(if k % 2 == 0 { 1 } else { -1 }),
                den: BigInt::from(k * k),
            })
            .collect();
        let exact: BigRational = terms.iter().map(|f| f.to_rational()).sum();
        assert_eq!(tree_sum(terms).to_rational(), exact);
    }

    #[test]
    fn determinants() {
        let m = vec![vec![q(2, 1), q(1, 2)], vec![q(1, 3), q(1, 1)]];
        assert_eq!(rational_det(&m), q(2, 1) - q(1, 6));
        let z = vec![
            vec![BigInt::from(0), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(0)],
        ];
        assert_eq!(bareiss_det(z), BigInt::from(-1));
    }
}
