//! Exact arithmetic in `Q(sqrt 2)`, enough to evaluate real characters of
//! groups whose exponents divide 8.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `a + b sqrt(2)` with rational `a`, `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QSqrt2 {
    pub a: BigRational,
    pub b: BigRational,
}

impl QSqrt2 {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        QSqrt2 { a, b }
    }

    pub fn rational(a: BigRational) -> Self {
        QSqrt2 { a, b: BigRational::zero() }
    }

    pub fn int(a: i64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(a)))
    }

    pub fn sqrt2() -> Self {
        QSqrt2 {
            a: BigRational::zero(),
            b: BigRational::one(),
        }
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Exact sign: compares `a` with `-b sqrt 2` through squares.
    pub fn signum(&self) -> Ordering {
        let (sa, sb) = (sign(&self.a), sign(&self.b));
        if sa == sb || sb == Ordering::Equal {
            return sa;
        }
        if sa == Ordering::Equal {
            return sb;
        }
        let two = BigRational::from_integer(BigInt::from(2));
        match (&self.a * &self.a).cmp(&(&two * &self.b * &self.b)) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => Ordering::Equal,
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        let f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
        f(&self.a) + f(&self.b) * std::f64::consts::SQRT_2
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        QSqrt2 {
            a: &self.a * r,
            b: &self.b * r,
        }
    }
}

fn sign(r: &BigRational) -> Ordering {
    if r.is_positive() {
        Ordering::Greater
    } else if r.is_negative() {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

impl PartialOrd for QSqrt2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QSqrt2 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*sqrt2", self.a, self.b)
    }
}

impl Add for &QSqrt2 {
    type Output = QSqrt2;
    fn add(self, o: &QSqrt2) -> QSqrt2 {
        QSqrt2 {
            a: &self.a + &o.a,
            b: &self.b + &o.b,
        }
    }
}

impl Sub for &QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, o: &QSqrt2) -> QSqrt2 {
        QSqrt2 {
            a: &self.a - &o.a,
            b: &self.b - &o.b,
        }
    }
}

impl Mul for &QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, o: &QSqrt2) -> QSqrt2 {
        let two = BigRational::from_integer(BigInt::from(2));
        QSqrt2 {
            a: &self.a * &o.a + two * &self.b * &o.b,
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }
}

impl Add for QSqrt2 {
    type Output = QSqrt2;
    fn add(self, o: QSqrt2) -> QSqrt2 {
        &self + &o
    }
}

impl Sub for QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, o: QSqrt2) -> QSqrt2 {
        &self - &o
    }
}

impl Mul for QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, o: QSqrt2) -> QSqrt2 {
        &self * &o
    }
}

impl Neg for QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        QSqrt2 { a: -self.a, b: -self.b }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> QSqrt2 {
        let r = |v: i64| BigRational::from_integer(BigInt::from(v));
        QSqrt2::new(r(a), r(b))
    }

    #[test]
    fn sqrt2_squares_to_two() {
        assert_eq!(QSqrt2::sqrt2() * QSqrt2::sqrt2(), QSqrt2::int(2));
    }

    #[test]
    fn signs_near_zero() {
        // 3 - 2 sqrt 2 ~ 0.17, 99 - 70 sqrt 2 ~ 0.005, 140 - 99 sqrt 2 ~ -0.007
        assert_eq!(q(3, -2).signum(), Ordering::Greater);
        assert_eq!(q(99, -70).signum(), Ordering::Greater);
        assert_eq!(q(-99, 70).signum(), Ordering::Less);
        assert_eq!(q(140, -99).signum(), Ordering::Less);
        assert_eq!(q(0, 0).signum(), Ordering::Equal);
    }

    proptest! {
        #[test]
        fn sign_matches_float(a in -10_000i64..10_000, b in -10_000i64..10_000) {
            let x = q(a, b);
            let f = a as f64 + b as f64 * std::f64::consts::SQRT_2;
            prop_assume!(f.abs() > 1e-6);
            prop_assert_eq!(x.signum(), if f > 0.0 { Ordering::Greater } else { Ordering::Less });
        }

        #[test]
        fn ring_laws(a in -50i64..50, b in -50i64..50, c in -50i64..50, d in -50i64..50) {
            let (x, y) = (q(a, b), q(c, d));
            prop_assert_eq!(&x * &y, &y * &x);
            prop_assert_eq!(&(&x + &y) - &y, x.clone());
            prop_assert!(x.abs().signum() != Ordering::Less);
        }
    }
}
