//! Second-order dual numbers: forward-mode carrier for one directional
//! derivative and its second derivative along the same direction.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value plus first and second directional derivatives.
///
/// Arithmetic is closed under +, −, ×, ÷ and the elementary functions below
/// with the exact second-order chain rule: for y = f(x),
/// y.d1 = f′·x.d1 and y.d2 = f″·x.d1² + f′·x.d2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Dual2 {
    pub const fn constant(v: f64) -> Self {
        Self { v, d1: 0.0, d2: 0.0 }
    }

    /// Seeds the differentiation direction: unit first derivative.
    pub const fn variable(v: f64) -> Self {
        Self { v, d1: 1.0, d2: 0.0 }
    }

    fn unary(self, f: f64, df: f64, ddf: f64) -> Self {
        Self { v: f, d1: df * self.d1, d2: ddf * self.d1 * self.d1 + df * self.d2 }
    }

    pub fn tanh(self) -> Self {
        let t = self.v.tanh();
        let s = 1.0 - t * t;
        self.unary(t, s, -2.0 * t * s)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.unary(e, e, e)
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.unary(r, 0.5 / r, -0.25 / (r * self.v))
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.unary(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.unary(c, -s, -c)
    }
}

impl Add for Dual2 {
    type Output = Dual2;
    fn add(self, rhs: Dual2) -> Dual2 {
        Dual2 { v: self.v + rhs.v, d1: self.d1 + rhs.d1, d2: self.d2 + rhs.d2 }
    }
}

impl Sub for Dual2 {
    type Output = Dual2;
    fn sub(self, rhs: Dual2) -> Dual2 {
        Dual2 { v: self.v - rhs.v, d1: self.d1 - rhs.d1, d2: self.d2 - rhs.d2 }
    }
}

impl Mul for Dual2 {
    type Output = Dual2;
    fn mul(self, rhs: Dual2) -> Dual2 {
        Dual2 {
            v: self.v * rhs.v,
            d1: self.d1 * rhs.v + self.v * rhs.d1,
            d2: self.d2 * rhs.v + 2.0 * self.d1 * rhs.d1 + self.v * rhs.d2,
        }
    }
}

impl Div for Dual2 {
    type Output = Dual2;
    fn div(self, rhs: Dual2) -> Dual2 {
        let v = self.v / rhs.v;
        let d1 = (self.d1 - v * rhs.d1) / rhs.v;
        let d2 = (self.d2 - 2.0 * d1 * rhs.d1 - v * rhs.d2) / rhs.v;
        Dual2 { v, d1, d2 }
    }
}

impl Neg for Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        Dual2 { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

impl Add<f64> for Dual2 {
    type Output = Dual2;
    fn add(self, rhs: f64) -> Dual2 {
        Dual2 { v: self.v + rhs, ..self }
    }
}

impl Sub<f64> for Dual2 {
    type Output = Dual2;
    fn sub(self, rhs: f64) -> Dual2 {
        Dual2 { v: self.v - rhs, ..self }
    }
}

impl Mul<f64> for Dual2 {
    type Output = Dual2;
    fn mul(self, rhs: f64) -> Dual2 {
        Dual2 { v: self.v * rhs, d1: self.d1 * rhs, d2: self.d2 * rhs }
    }
}

impl Mul<Dual2> for f64 {
    type Output = Dual2;
    fn mul(self, rhs: Dual2) -> Dual2 {
        rhs * self
    }
}

impl Div<f64> for Dual2 {
    type Output = Dual2;
    fn div(self, rhs: f64) -> Dual2 {
        Dual2 { v: self.v / rhs, d1: self.d1 / rhs, d2: self.d2 / rhs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_has_exact_derivatives() {
        let x = Dual2::variable(3.0);
        let y = x * x;
        assert_eq!(y.v, 9.0);
        assert_eq!(y.d1, 6.0);
        assert_eq!(y.d2, 2.0);
    }

    #[test]
    fn division_roundtrips() {
        let x = Dual2::variable(0.7);
        let y = (x * x) / x;
        assert!((y.v - 0.7).abs() < 1e-15);
        assert!((y.d1 - 1.0).abs() < 1e-15);
        assert!(y.d2.abs() < 1e-15);
    }

    #[test]
    fn chain_rule_matches_symbolic_polynomial() {
        // f(g(x)) with f(u) = u² + u, g(x) = 2x³ − x.
        // f∘g = (2x³−x)² + 2x³ − x; derivatives at x = 1.3 from the
        // symbolic expansion.
        let x = 1.3;
        let d = Dual2::variable(x);
        let g = Dual2::constant(2.0) * d * d * d - d;
        let f = g * g + g;
        let gv = 2.0 * x.powi(3) - x;
        let dg = 6.0 * x * x - 1.0;
        let ddg = 12.0 * x;
        let want_v = gv * gv + gv;
        let want_d1 = (2.0 * gv + 1.0) * dg;
        let want_d2 = 2.0 * dg * dg + (2.0 * gv + 1.0) * ddg;
        assert!((f.v - want_v).abs() <= 1e-12 * want_v.abs());
        assert!((f.d1 - want_d1).abs() <= 1e-12 * want_d1.abs());
        assert!((f.d2 - want_d2).abs() <= 1e-12 * want_d2.abs());
    }

    #[test]
    fn tanh_second_derivative() {
        let x = Dual2::variable(0.4);
        let y = x.tanh();
        let t = 0.4f64.tanh();
        assert!((y.d1 - (1.0 - t * t)).abs() < 1e-15);
        assert!((y.d2 - (-2.0 * t * (1.0 - t * t))).abs() < 1e-15);
    }
}
