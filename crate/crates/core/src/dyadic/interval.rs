use std::fmt;

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::grid::TorusGrid;

/// [2^k·n, 2^k·(n+1)) with k ≤ 0, inside the unit torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub k: i32,
    pub n: i64,
}

impl DyadicInterval {
    pub fn new(k: i32, n: i64) -> Self {
        Self { k, n }
    }

    pub fn unit() -> Self {
        Self { k: 0, n: 0 }
    }

    pub fn fits_torus(&self) -> bool {
        self.k <= 0 && self.k > -62 && self.n >= 0 && self.n < (1i64 << (-self.k))
    }

    pub fn length(&self) -> f64 {
        2f64.powi(self.k)
    }

    pub fn left(&self) -> f64 {
        self.n as f64 * self.length()
    }

    pub fn right(&self) -> f64 {
        (self.n + 1) as f64 * self.length()
    }

    pub fn center(&self) -> f64 {
        (self.n as f64 + 0.5) * self.length()
    }

    /// J ⊆ self, decided on (k, n).
    pub fn contains(&self, other: &DyadicInterval) -> bool {
        other.k <= self.k && (other.n >> (self.k - other.k)) == self.n
    }

    pub fn disjoint(&self, other: &DyadicInterval) -> bool {
        !self.contains(other) && !other.contains(self)
    }

    pub fn parent(&self) -> DyadicInterval {
        DyadicInterval {
            k: self.k + 1,
            n: self.n >> 1,
        }
    }

    /// Ancestor of length 2^k (k ≥ self.k).
    pub fn ancestor(&self, k: i32) -> DyadicInterval {
        DyadicInterval {
            k,
            n: self.n >> (k - self.k),
        }
    }

    pub fn children(&self) -> [DyadicInterval; 2] {
        [
            DyadicInterval {
                k: self.k - 1,
                n: 2 * self.n,
            },
            DyadicInterval {
                k: self.k - 1,
                n: 2 * self.n + 1,
            },
        ]
    }

    /// Grid cells covered by the interval; requires |I| ≥ 1/N.
    pub fn cells(&self, grid: TorusGrid) -> Result<std::ops::Range<usize>> {
        let log_n = grid.log2_n() as i32;
        if self.k + log_n < 0 {
            return Err(FppError::Precondition(format!(
                "interval 2^{} finer than the grid 1/{}",
                self.k,
                grid.n()
            )));
        }
        let per = 1usize << (self.k + log_n);
        let start = self.n as usize * per;
        Ok(start..start + per)
    }

    /// All intervals of length 2^k.
    pub fn level(k: i32) -> impl Iterator<Item = DyadicInterval> {
        (0..(1i64 << (-k))).map(move |n| DyadicInterval { k, n })
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}·2^{}, {}·2^{})", self.n, self.k, self.n + 1, self.k)
    }
}

/// Closed interval with rational endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RatInterval {
    pub lo: Rational64,
    pub hi: Rational64,
}

impl RatInterval {
    pub fn new(lo: Rational64, hi: Rational64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn length(&self) -> Rational64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> Rational64 {
        (self.lo + self.hi) / 2
    }

    pub fn intersects(&self, other: &RatInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn contains(&self, x: Rational64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// c·ω: same center, length multiplied by c.
    pub fn enlarge(&self, c: Rational64) -> RatInterval {
        let mid = self.center();
        let half = self.length() * c / 2;
        RatInterval {
            lo: mid - half,
            hi: mid + half,
        }
    }

    pub fn scale(&self, s: Rational64) -> RatInterval {
        if s.is_negative() {
            RatInterval {
                lo: self.hi * s,
                hi: self.lo * s,
            }
        } else {
            RatInterval {
                lo: self.lo * s,
                hi: self.hi * s,
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (self.lo + self.hi).is_zero()
    }

    /// dist(0, ω), zero when 0 ∈ ω.
    pub fn dist_to_zero(&self) -> Rational64 {
        if self.contains(Rational64::zero()) {
            Rational64::zero()
        } else if self.lo.is_positive() {
            self.lo
        } else {
            -self.hi
        }
    }

    pub fn lo_f64(&self) -> f64 {
        *self.lo.numer() as f64 / *self.lo.denom() as f64
    }

    pub fn hi_f64(&self) -> f64 {
        *self.hi.numer() as f64 / *self.hi.denom() as f64
    }
}

impl Serialize for RatInterval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo.to_string(), self.hi.to_string()].serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatInterval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let [a, b] = <[String; 2]>::deserialize(d)?;
        let lo: Rational64 = a.parse().map_err(|_| D::Error::custom(format!("bad rational {a}")))?;
        let hi: Rational64 = b.parse().map_err(|_| D::Error::custom(format!("bad rational {b}")))?;
        if lo > hi {
            return Err(D::Error::custom("interval endpoints out of order"));
        }
        Ok(RatInterval { lo, hi })
    }
}

/// 2^{−k} as a rational (k ≤ 0).
pub fn inv_length(k: i32) -> Rational64 {
    Rational64::from_integer(1i64 << (-k))
}
