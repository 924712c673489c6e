//! The annular window system Ψ̂_j and the partition symbol ã built from it.

use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::jet::Jet;

/// Windows Ψ̂_j, j ∈ {−M..−1, 1..M}. Ψ̂_j ≡ 1 on its unit core ([j−1, j] for
/// j > 0, [j, j+1] for j < 0) and is supported in the core enlarged about its
/// center by `enlargement` (10/9 by default), with C^∞ tapers of width
/// (enlargement−1)/2 on each side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSystem {
    m: usize,
    q: usize,
    enlargement: f64,
}

pub const DEFAULT_ENLARGEMENT: f64 = 10.0 / 9.0;

/// At most this many windows overlap at a point for enlargement ≤ 3.
const MAX_ACTIVE: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct Active {
    items: [(i64, f64); MAX_ACTIVE],
    len: usize,
}

impl Active {
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.items[..self.len].iter().copied()
    }
}

impl WindowSystem {
    pub fn new(m: usize, q: usize) -> Result<Self> {
        Self::with_enlargement(m, q, DEFAULT_ENLARGEMENT)
    }

    pub fn with_enlargement(m: usize, q: usize, enlargement: f64) -> Result<Self> {
        if m < 2 {
            return Err(FppError::InvalidConfig(format!("window count M={m} must be >= 2")));
        }
        if q == 0 {
            return Err(FppError::InvalidConfig(
                "quadrature needs Q >= 1 nodes per unit scale".into(),
            ));
        }
        if !(enlargement > 1.0 && enlargement <= 3.0) {
            return Err(FppError::InvalidConfig(format!(
                "enlargement {enlargement} outside (1, 3]"
            )));
        }
        Ok(Self { m, q, enlargement })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn enlargement(&self) -> f64 {
        self.enlargement
    }

    /// Taper width on each side of a core.
    pub fn margin(&self) -> f64 {
        (self.enlargement - 1.0) / 2.0
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        let m = self.m as i64;
        (-m..=-1).chain(1..=m)
    }

    pub fn core(&self, j: i64) -> (f64, f64) {
        debug_assert!(j != 0 && j.unsigned_abs() as usize <= self.m);
        if j > 0 {
            ((j - 1) as f64, j as f64)
        } else {
            (j as f64, (j + 1) as f64)
        }
    }

    pub fn support(&self, j: i64) -> (f64, f64) {
        let (lo, hi) = self.core(j);
        (lo - self.margin(), hi + self.margin())
    }

    /// Period cell: the enlarged core, of length `enlargement`.
    pub fn cell(&self, j: i64) -> (f64, f64) {
        self.support(j)
    }

    pub fn window(&self, j: i64, u: f64) -> f64 {
        let (lo, hi) = self.core(j);
        let d = self.margin();
        if u < lo - d || u > hi + d {
            0.0
        } else if u >= lo && u <= hi {
            1.0
        } else if u < lo {
            smoothstep((u - (lo - d)) / d)
        } else {
            smoothstep(((hi + d) - u) / d)
        }
    }

    /// Taylor jet of Ψ̂_j at u (derivatives up to the jet order).
    pub fn window_jet(&self, j: i64, u: f64) -> Jet {
        let (lo, hi) = self.core(j);
        let d = self.margin();
        if u <= lo - d || u >= hi + d {
            Jet::constant(0.0)
        } else if u >= lo && u <= hi {
            Jet::constant(1.0)
        } else if u < lo {
            smoothstep_jet(Jet::variable(u).scale(1.0 / d) - Jet::constant((lo - d) / d))
        } else {
            smoothstep_jet(Jet::constant((hi + d) / d) - Jet::variable(u).scale(1.0 / d))
        }
    }

    /// Windows that are nonzero at u, with their values.
    pub fn active(&self, u: f64) -> Active {
        let mut out = Active {
            items: [(0, 0.0); MAX_ACTIVE],
            len: 0,
        };
        let m = self.m as i64;
        let d = self.margin();
        let lo = (u - d).floor() as i64 - 1;
        let hi = (u + d).ceil() as i64 + 1;
        for c in lo..=hi {
            // cores [c, c+1) belong to j = c+1 (c >= 0) or j = c (c < 0)
            let j = if c >= 0 { c + 1 } else { c };
            if j.abs() > m {
                continue;
            }
            let w = self.window(j, u);
            if w > 0.0 && out.len < MAX_ACTIVE {
                out.items[out.len] = (j, w);
                out.len += 1;
            }
        }
        out
    }

    /// Scale 2^{−λ} at node q, λ = q/Q, split as 2^{−k}·2^{−κ} so that
    /// shifting q by Q rescales by exactly 2.
    pub fn node_factor(&self, q: i64) -> f64 {
        let qq = self.q as i64;
        let k = q.div_euclid(qq);
        let r = q.rem_euclid(qq);
        let frac = (-(r as f64) / self.q as f64).exp2();
        frac * 2f64.powi(-(k as i32))
    }

    pub fn node_lambda(&self, q: i64) -> f64 {
        q as f64 / self.q as f64
    }

    /// Nodes at which a window of index ±M can be active for a point with
    /// max(|ξ₁|,|ξ₂|) = r.
    pub fn nodes_for_radius(&self, r: f64) -> std::ops::RangeInclusive<i64> {
        if r <= 0.0 {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        let m = self.m as f64;
        let d = self.margin();
        let lo = (r / (m + d)).log2() * self.q as f64;
        let hi = (r / (m - 1.0 - d)).log2() * self.q as f64;
        (lo.ceil() as i64 - 1)..=(hi.floor() as i64 + 1)
    }

    /// ã(ξ) = (1/Q) Σ_q Σ_{max(|j₁|,|j₂|)=M} Ψ̂_{j₁}(2^{−λ_q}ξ₁)·Ψ̂_{j₂}(2^{−λ_q}ξ₂).
    pub fn atilde(&self, x1: f64, x2: f64) -> f64 {
        let r = x1.abs().max(x2.abs());
        let m = self.m as i64;
        let mut acc = 0.0;
        for q in self.nodes_for_radius(r) {
            let s = self.node_factor(q);
            let a1 = self.active(x1 * s);
            let a2 = self.active(x2 * s);
            for (j1, w1) in a1.iter() {
                for (j2, w2) in a2.iter() {
                    if j1.abs().max(j2.abs()) == m {
                        acc += w1 * w2;
                    }
                }
            }
        }
        acc / self.q as f64
    }

    /// ã₂: the same construction with squared windows Ψ̂², which are again
    /// ≡ 1 on the cores with the same supports.
    pub fn atilde_squared(&self, x1: f64, x2: f64) -> f64 {
        let r = x1.abs().max(x2.abs());
        let m = self.m as i64;
        let mut acc = 0.0;
        for q in self.nodes_for_radius(r) {
            let s = self.node_factor(q);
            let a1 = self.active(x1 * s);
            let a2 = self.active(x2 * s);
            for (j1, w1) in a1.iter() {
                for (j2, w2) in a2.iter() {
                    if j1.abs().max(j2.abs()) == m {
                        acc += (w1 * w2).powi(2);
                    }
                }
            }
        }
        acc / self.q as f64
    }

    /// One member (1/Q) Σ_q Ψ̂_{j₁}Ψ̂_{j₂} of the partition; needs max(|j₁|,|j₂|) = M.
    pub fn member(&self, j1: i64, j2: i64, x1: f64, x2: f64) -> f64 {
        debug_assert_eq!(j1.abs().max(j2.abs()), self.m as i64);
        let r = x1.abs().max(x2.abs());
        let mut acc = 0.0;
        for q in self.nodes_for_radius(r) {
            let s = self.node_factor(q);
            acc += self.window(j1, x1 * s) * self.window(j2, x2 * s);
        }
        acc / self.q as f64
    }

    /// All (j₁, j₂) with max(|j₁|,|j₂|) = M.
    pub fn pairs(&self) -> Vec<(i64, i64)> {
        let m = self.m as i64;
        let mut out = Vec::new();
        for j1 in self.indices() {
            for j2 in self.indices() {
                if j1.abs().max(j2.abs()) == m {
                    out.push((j1, j2));
                }
            }
        }
        out
    }
}

fn bump_half(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C^∞ step: 0 for s ≤ 0, 1 for s ≥ 1.
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = bump_half(s);
    let b = bump_half(1.0 - s);
    a / (a + b)
}

fn smoothstep_jet(s: Jet) -> Jet {
    let v = s.value();
    if v <= 0.0 {
        return Jet::constant(0.0);
    }
    if v >= 1.0 {
        return Jet::constant(1.0);
    }
    let a = (-s.recip()).exp();
    let b = (-(Jet::constant(1.0) - s).recip()).exp();
    a / (a + b)
}
