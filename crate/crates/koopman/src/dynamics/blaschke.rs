//! Finite Blaschke products on the unit circle, in turn coordinates θ ∈ [0, 1).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scalar::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct BlaschkeMap {
    zeros: Vec<C64>,
}

fn unit(theta: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * theta)
}

impl BlaschkeMap {
    pub fn new(zeros: Vec<C64>) -> Self {
        BlaschkeMap { zeros }
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    /// Direct evaluation of Π (z − a)/(1 − ā z).
    pub fn eval(&self, z: C64) -> C64 {
        self.zeros
            .iter()
            .fold(C64::new(1.0, 0.0), |acc, a| acc * (z - a) / (C64::new(1.0, 0.0) - a.conj() * z))
    }

    /// Boundary angle map by direct evaluation, reduced to [0, 1).
    pub fn angle_map(&self, theta: f64) -> f64 {
        let w = self.eval(unit(theta));
        (w.arg() / (2.0 * PI)).rem_euclid(1.0)
    }

    /// Continuous lift Θ with Θ(θ + 1) = Θ(θ) + N.
    ///
    /// Each Möbius factor contributes θ + arg(1 − a e^{−2πiθ})/π; the
    /// argument stays in (−π/2, π/2) because |a| < 1, so no unwrapping is needed.
    pub fn lift(&self, theta: f64) -> f64 {
        let z_bar = unit(-theta);
        let n = self.zeros.len() as f64;
        let phase: f64 = self.zeros.iter().map(|a| (C64::new(1.0, 0.0) - a * z_bar).arg()).sum();
        n * theta + phase / PI
    }

    /// dΘ/dθ = Σ (1 − |a|²)/|1 − a e^{−2πiθ}|², i.e. |φ′| on the circle.
    pub fn lift_derivative(&self, theta: f64) -> f64 {
        let z_bar = unit(-theta);
        self.zeros
            .iter()
            .map(|a| (1.0 - a.norm_sqr()) / (C64::new(1.0, 0.0) - a * z_bar).norm_sqr())
            .sum()
    }

    /// Solve Θ(θ) = target for θ ∈ [lo, hi]: Newton steps kept inside a
    /// shrinking bracket, falling back to bisection when a step leaves it.
    pub fn invert_lift(&self, target: f64, lo: f64, hi: f64) -> Result<f64> {
        let (mut a, mut b) = (lo, hi);
        let (fa, fb) = (self.lift(a) - target, self.lift(b) - target);
        let slack = 1e-12;
        if fa > slack || fb < -slack {
            return Err(Error::BracketFailure { y: target });
        }
        if fa >= 0.0 {
            return Ok(a);
        }
        if fb <= 0.0 {
            return Ok(b);
        }
        let mut x = a + (b - a) * (-fa) / (fb - fa);
        for _ in 0..100 {
            let fx = self.lift(x) - target;
            if fx.abs() < 1e-15 {
                return Ok(x);
            }
            if fx < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let step = fx / self.lift_derivative(x);
            let next = x - step;
            let next = if next > a && next < b { next } else { 0.5 * (a + b) };
            if (next - x).abs() < 1e-16 || b - a < 1e-15 {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }
}
