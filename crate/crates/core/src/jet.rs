//! Truncated Taylor series in one variable, used to differentiate the smooth
//! window tapers without finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const JET_ORDER: usize = 8;

/// c[k] = f^{(k)}(t0) / k!.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [f64; JET_ORDER],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; JET_ORDER];
        c[0] = v;
        Self { c }
    }

    /// The identity function expanded at t0.
    pub fn variable(t0: f64) -> Self {
        let mut c = [0.0; JET_ORDER];
        c[0] = t0;
        c[1] = 1.0;
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut f = 1.0;
        for i in 2..=k {
            f *= i as f64;
        }
        self.c[k] * f
    }

    pub fn scale(self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|x| *x *= s);
        Self { c }
    }

    pub fn recip(self) -> Self {
        let a0 = self.c[0];
        let mut r = [0.0; JET_ORDER];
        r[0] = 1.0 / a0;
        for k in 1..JET_ORDER {
            let mut s = 0.0;
            for i in 1..=k {
                s += self.c[i] * r[k - i];
            }
            r[k] = -s / a0;
        }
        Self { c: r }
    }

    pub fn exp(self) -> Self {
        // e' = a' e, coefficientwise: k e_k = Σ_{i=1..k} i a_i e_{k-i}.
        let mut e = [0.0; JET_ORDER];
        e[0] = self.c[0].exp();
        for k in 1..JET_ORDER {
            let mut s = 0.0;
            for i in 1..=k {
                s += i as f64 * self.c[i] * e[k - i];
            }
            e[k] = s / k as f64;
        }
        Self { c: e }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        for (x, y) in c.iter_mut().zip(o.c) {
            *x += y;
        }
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; JET_ORDER];
        for i in 0..JET_ORDER {
            for j in 0..JET_ORDER - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}
