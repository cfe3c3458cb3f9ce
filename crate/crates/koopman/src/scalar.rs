//! Scalar fields used by the workbench.
//!
//! Everything downstream is generic over [`Scalar`]. Floating complex types
//! give the quadrature paths; [`Surd`] gives exact arithmetic in Q(√d), which
//! is all the full shift ever needs (entries are rationals times powers of √N).

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;

/// A field with involution, enough for operator compressions and exact elimination.
pub trait Scalar:
    nalgebra::Scalar
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
{
    /// True when equality is literal (no rounding anywhere).
    const EXACT: bool;

    fn conj(&self) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// √n for a natural number n.
    fn sqrt_nat(n: u64) -> Self;
    fn inv(&self) -> Option<Self>;
    fn to_c64(&self) -> C64;
    /// `None` for exact types, which cannot hold transcendental values.
    fn try_from_c64(c: C64) -> Option<Self>;
    /// A random entry for test operators: complex Gaussian for floats,
    /// small rationals for exact types.
    fn random(rng: &mut ChaCha8Rng) -> Self;

    fn abs_f64(&self) -> f64 {
        self.to_c64().norm()
    }

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }
}

/// Scalars that can represent arbitrary complex values (up to rounding).
pub trait FloatScalar: Scalar + nalgebra::ComplexField + Copy {
    fn from_c64(c: C64) -> Self;
}

macro_rules! impl_complex_scalar {
    ($t:ty) => {
        impl Scalar for Complex<$t> {
            const EXACT: bool = false;

            fn conj(&self) -> Self {
                Complex::conj(self)
            }

            fn from_ratio(num: i64, den: i64) -> Self {
                Complex::new((num as f64 / den as f64) as $t, 0.0)
            }

            fn sqrt_nat(n: u64) -> Self {
                Complex::new((n as f64).sqrt() as $t, 0.0)
            }

            fn inv(&self) -> Option<Self> {
                if self.norm_sqr() == 0.0 {
                    None
                } else {
                    Some(Complex::new(1.0, 0.0) / *self)
                }
            }

            fn to_c64(&self) -> C64 {
                C64::new(self.re as f64, self.im as f64)
            }

            fn try_from_c64(c: C64) -> Option<Self> {
                Some(Complex::new(c.re as $t, c.im as $t))
            }

            fn random(rng: &mut ChaCha8Rng) -> Self {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new((re / 2f64.sqrt()) as $t, (im / 2f64.sqrt()) as $t)
            }
        }

        impl FloatScalar for Complex<$t> {
            fn from_c64(c: C64) -> Self {
                Complex::new(c.re as $t, c.im as $t)
            }
        }
    };
}

impl_complex_scalar!(f32);
impl_complex_scalar!(f64);

/// An element a + b√d of the real quadratic field Q(√d), d squarefree.
///
/// Values with b = 0 are plain rationals and combine with any radicand; two
/// genuine surds must share d. Mixing radicands is a programming error and
/// panics.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Surd {
    a: BigRational,
    b: BigRational,
    d: u64,
}

fn squarefree_split(n: u64) -> (u64, u64) {
    // n = s^2 * d with d squarefree
    let mut s = 1u64;
    let mut d = 1u64;
    let mut rest = n;
    let mut p = 2u64;
    while p * p <= rest {
        let mut e = 0;
        while rest.is_multiple_of(p) {
            rest /= p;
            e += 1;
        }
        s *= p.pow(e / 2);
        if e % 2 == 1 {
            d *= p;
        }
        p += 1;
    }
    (s, d * rest)
}

impl Surd {
    pub fn new(a: BigRational, b: BigRational, d: u64) -> Self {
        let (s, d) = squarefree_split(d.max(1));
        let b = b * BigRational::from_integer(BigInt::from(s));
        Surd { a, b, d }.normalized()
    }

    pub fn rational(a: BigRational) -> Self {
        Surd { a, b: BigRational::zero(), d: 1 }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.b
    }

    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn normalized(mut self) -> Self {
        if self.d == 1 {
            self.a += std::mem::replace(&mut self.b, BigRational::zero());
        }
        if self.b.is_zero() {
            self.d = 1;
        }
        self
    }

    fn radicand_with(&self, other: &Surd) -> u64 {
        match (self.b.is_zero(), other.b.is_zero()) {
            (true, _) => other.d,
            (_, true) => self.d,
            _ => {
                assert_eq!(self.d, other.d, "surds over different quadratic fields");
                self.d
            }
        }
    }

    /// Galois conjugate a − b√d.
    pub fn galois(&self) -> Surd {
        Surd { a: self.a.clone(), b: -self.b.clone(), d: self.d }
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN)
            + self.b.to_f64().unwrap_or(f64::NAN) * (self.d as f64).sqrt()
    }

    /// Sign of the real number a + b√d.
    pub fn signum(&self) -> i32 {
        let sa = sign(&self.a);
        let sb = sign(&self.b);
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        // opposite signs: compare a^2 with b^2 d
        let a2 = &self.a * &self.a;
        let b2d = &self.b * &self.b * BigRational::from_integer(BigInt::from(self.d));
        if a2 > b2d {
            sa
        } else {
            sb
        }
    }
}

fn sign(q: &BigRational) -> i32 {
    if q.is_zero() {
        0
    } else if q.is_positive() {
        1
    } else {
        -1
    }
}

impl fmt::Debug for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.a.is_zero() {
            write!(f, "{}√{}", self.b, self.d)
        } else {
            write!(f, "{}+{}√{}", self.a, self.b, self.d)
        }
    }
}

impl Zero for Surd {
    fn zero() -> Self {
        Surd::rational(BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

impl One for Surd {
    fn one() -> Self {
        Surd::rational(BigRational::one())
    }
}

impl Add for Surd {
    type Output = Surd;
    fn add(self, rhs: Surd) -> Surd {
        let d = self.radicand_with(&rhs);
        Surd { a: self.a + rhs.a, b: self.b + rhs.b, d }.normalized()
    }
}

impl Sub for Surd {
    type Output = Surd;
    fn sub(self, rhs: Surd) -> Surd {
        let d = self.radicand_with(&rhs);
        Surd { a: self.a - rhs.a, b: self.b - rhs.b, d }.normalized()
    }
}

impl Mul for Surd {
    type Output = Surd;
    fn mul(self, rhs: Surd) -> Surd {
        let d = self.radicand_with(&rhs);
        if self.b.is_zero() {
            return Surd { a: &self.a * &rhs.a, b: &self.a * &rhs.b, d }.normalized();
        }
        if rhs.b.is_zero() {
            return Surd { a: &self.a * &rhs.a, b: &self.b * &rhs.a, d }.normalized();
        }
        let dq = BigRational::from_integer(BigInt::from(d));
        let a = &self.a * &rhs.a + &self.b * &rhs.b * dq;
        let b = &self.a * &rhs.b + &self.b * &rhs.a;
        Surd { a, b, d }.normalized()
    }
}

impl Div for Surd {
    type Output = Surd;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Surd) -> Surd {
        self * rhs.inv().expect("division by zero surd")
    }
}

impl Neg for Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd { a: -self.a, b: -self.b, d: self.d }
    }
}

impl AddAssign for Surd {
    fn add_assign(&mut self, rhs: Surd) {
        *self = std::mem::replace(self, Surd::zero()) + rhs;
    }
}

impl SubAssign for Surd {
    fn sub_assign(&mut self, rhs: Surd) {
        *self = std::mem::replace(self, Surd::zero()) - rhs;
    }
}

impl MulAssign for Surd {
    fn mul_assign(&mut self, rhs: Surd) {
        *self = std::mem::replace(self, Surd::zero()) * rhs;
    }
}

impl Scalar for Surd {
    const EXACT: bool = true;

    fn conj(&self) -> Self {
        self.clone()
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Surd::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn sqrt_nat(n: u64) -> Self {
        let (s, d) = squarefree_split(n);
        let s = BigRational::from_integer(BigInt::from(s));
        if d == 1 {
            Surd::rational(s)
        } else {
            Surd { a: BigRational::zero(), b: s, d }
        }
    }

    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.b.is_zero() {
            return Some(Surd::rational(self.a.recip()));
        }
        let dq = BigRational::from_integer(BigInt::from(self.d));
        let norm = &self.a * &self.a - &self.b * &self.b * dq;
        Some(Surd { a: &self.a / &norm, b: -(&self.b / &norm), d: self.d }.normalized())
    }

    fn to_c64(&self) -> C64 {
        C64::new(self.to_f64(), 0.0)
    }

    fn try_from_c64(_c: C64) -> Option<Self> {
        None
    }

    fn random(rng: &mut ChaCha8Rng) -> Self {
        let num = rng.random_range(-6i64..=6);
        let den = rng.random_range(1i64..=4);
        Surd::from_ratio(num, den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn squarefree_parts() {
        assert_eq!(squarefree_split(8), (2, 2));
        assert_eq!(squarefree_split(12), (2, 3));
        assert_eq!(squarefree_split(9), (3, 1));
        assert_eq!(squarefree_split(6), (1, 6));
    }

    #[test]
    fn sqrt_squares_back() {
        for n in 1..40u64 {
            let r = Surd::sqrt_nat(n);
            assert_eq!(r.clone() * r, Surd::from_int(n as i64), "n = {n}");
        }
    }

    #[test]
    fn inverse_of_surd() {
        let x = Surd::new(q(3, 2), q(-5, 7), 2);
        let y = x.inv().unwrap();
        assert_eq!(x * y, Surd::one());
    }

    #[test]
    fn rational_mixes_with_any_radicand() {
        let half = Surd::from_ratio(1, 2);
        let r3 = Surd::sqrt_nat(3);
        let s = half + r3.clone();
        assert_eq!(s.radicand(), 3);
        assert!((s.to_f64() - (0.5 + 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn signum_matches_float() {
        let cases = [(1, -1), (-3, 2), (7, -5), (0, 1), (2, 0), (-1, 1)];
        for (a, b) in cases {
            let s = Surd::new(q(a, 1), q(b, 1), 2);
            let f = s.to_f64();
            assert_eq!(s.signum(), if f > 0.0 { 1 } else if f < 0.0 { -1 } else { 0 });
        }
    }

    #[test]
    #[should_panic(expected = "different quadratic fields")]
    fn mixing_radicands_panics() {
        let _ = Surd::sqrt_nat(2) + Surd::sqrt_nat(3);
    }
}
