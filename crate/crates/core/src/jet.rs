//! Forward-mode jets in four ambient variables.
//!
//! Harmonic bases are polynomials built by recurrences, so evaluating the
//! recurrences on jets yields exact ambient gradients and Hessians.

use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::vec4::{M4, V4};
use num_traits::Float;

pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn cst(c: f64) -> Self;
    fn scale(self, c: f64) -> Self;
    fn value(&self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn cst(c: f64) -> Self {
        c
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
}

/// Value and ambient gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet1 {
    pub v: f64,
    pub g: V4,
}

impl Jet1 {
    pub fn var(x: f64, i: usize) -> Self {
        let mut g = [0.0; 4];
        g[i] = 1.0;
        Jet1 { v: x, g }
    }
}

impl Add for Jet1 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Jet1 {
            v: self.v + o.v,
            g: [
                self.g[0] + o.g[0],
                self.g[1] + o.g[1],
                self.g[2] + o.g[2],
                self.g[3] + o.g[3],
            ],
        }
    }
}

impl Sub for Jet1 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Jet1 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Jet1 {
            v: -self.v,
            g: [-self.g[0], -self.g[1], -self.g[2], -self.g[3]],
        }
    }
}

impl Mul for Jet1 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut g = [0.0; 4];
        for (i, gi) in g.iter_mut().enumerate() {
            *gi = self.v * o.g[i] + o.v * self.g[i];
        }
        Jet1 { v: self.v * o.v, g }
    }
}

impl Scalar for Jet1 {
    #[inline]
    fn cst(c: f64) -> Self {
        Jet1 { v: c, g: [0.0; 4] }
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        Jet1 {
            v: self.v * c,
            g: [self.g[0] * c, self.g[1] * c, self.g[2] * c, self.g[3] * c],
        }
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
}

/// Value, ambient gradient and ambient Hessian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: V4,
    pub h: M4,
}

impl Jet2 {
    pub fn var(x: f64, i: usize) -> Self {
        let mut g = [0.0; 4];
        g[i] = 1.0;
        Jet2 {
            v: x,
            g,
            h: [[0.0; 4]; 4],
        }
    }
}

impl Add for Jet2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let mut r = self;
        r.v += o.v;
        for i in 0..4 {
            r.g[i] += o.g[i];
            for j in 0..4 {
                r.h[i][j] += o.h[i][j];
            }
        }
        r
    }
}

impl Sub for Jet2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut r = Jet2 {
            v: self.v * o.v,
            g: [0.0; 4],
            h: [[0.0; 4]; 4],
        };
        for i in 0..4 {
            r.g[i] = self.v * o.g[i] + o.v * self.g[i];
            for j in 0..4 {
                r.h[i][j] = self.v * o.h[i][j]
                    + o.v * self.h[i][j]
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i];
            }
        }
        r
    }
}

impl Scalar for Jet2 {
    #[inline]
    fn cst(c: f64) -> Self {
        Jet2 {
            v: c,
            g: [0.0; 4],
            h: [[0.0; 4]; 4],
        }
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        let mut r = self;
        r.v *= c;
        for i in 0..4 {
            r.g[i] *= c;
            for j in 0..4 {
                r.h[i][j] *= c;
            }
        }
        r
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
}

/// Lifts a point to independent jet variables.
pub trait Lift: Scalar {
    fn lift(x: &V4) -> [Self; 4];
}

impl Lift for f64 {
    fn lift(x: &V4) -> [Self; 4] {
        *x
    }
}

impl Lift for Jet1 {
    fn lift(x: &V4) -> [Self; 4] {
        [
            Jet1::var(x[0], 0),
            Jet1::var(x[1], 1),
            Jet1::var(x[2], 2),
            Jet1::var(x[3], 3),
        ]
    }
}

impl Lift for Jet2 {
    fn lift(x: &V4) -> [Self; 4] {
        [
            Jet2::var(x[0], 0),
            Jet2::var(x[1], 1),
            Jet2::var(x[2], 2),
            Jet2::var(x[3], 3),
        ]
    }
}

/// Scalars with division and the elementary functions the area integrand
/// needs.
pub trait Real: Scalar + Div<Output = Self> {
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn sqrt(self) -> Self {
        Float::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        Float::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        Float::cos(self)
    }
}

/// First-order dual number `re + ε·du`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub du: f64,
}

impl Dual {
    pub fn new(re: f64, du: f64) -> Self {
        Dual { re, du }
    }
}

impl Add for Dual {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.du + o.du)
    }
}

impl Sub for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.du - o.du)
    }
}

impl Mul for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.du + self.du * o.re)
    }
}

impl Div for Dual {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Dual::new(q, (self.du - q * o.du) / o.re)
    }
}

impl Neg for Dual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.du)
    }
}

impl Scalar for Dual {
    #[inline]
    fn cst(c: f64) -> Self {
        Dual::new(c, 0.0)
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        Dual::new(self.re * c, self.du * c)
    }
    #[inline]
    fn value(&self) -> f64 {
        self.re
    }
}

impl Real for Dual {
    #[inline]
    fn sqrt(self) -> Self {
        let r = Float::sqrt(self.re);
        Dual::new(r, 0.5 * self.du / r)
    }
    #[inline]
    fn sin(self) -> Self {
        let (s, c) = Float::sin_cos(self.re);
        Dual::new(s, c * self.du)
    }
    #[inline]
    fn cos(self) -> Self {
        let (s, c) = Float::sin_cos(self.re);
        Dual::new(c, -s * self.du)
    }
}
