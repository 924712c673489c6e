//! Finite unions of grid cells and the restricted classes X(E).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicInterval;
use crate::error::{FppError, Result};
use crate::grid::{SampledFunction, TorusGrid};

/// Union of grid cells [k/N, (k+1)/N); measure = cell count / N.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurableSet {
    grid: TorusGrid,
    cells: Vec<bool>,
}

impl MeasurableSet {
    pub fn empty(grid: TorusGrid) -> Self {
        Self {
            grid,
            cells: vec![false; grid.n()],
        }
    }

    pub fn full(grid: TorusGrid) -> Self {
        Self {
            grid,
            cells: vec![true; grid.n()],
        }
    }

    pub fn from_mask(grid: TorusGrid, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != grid.n() {
            return Err(FppError::GridMismatch {
                expected: grid.n(),
                got: cells.len(),
            });
        }
        Ok(Self { grid, cells })
    }

    pub fn from_intervals(grid: TorusGrid, ivs: &[DyadicInterval]) -> Result<Self> {
        let mut s = Self::empty(grid);
        for iv in ivs {
            for c in iv.cells(grid)? {
                s.cells[c] = true;
            }
        }
        Ok(s)
    }

    /// Each interval of length 2^k is kept with probability `density`.
    pub fn random_dyadic_union(grid: TorusGrid, k: i32, density: f64, rng: &mut impl Rng) -> Result<Self> {
        let kept: Vec<DyadicInterval> = DyadicInterval::level(k)
            .filter(|_| rng.gen_bool(density.clamp(0.0, 1.0)))
            .collect();
        Self::from_intervals(grid, &kept)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.cells
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells[cell]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 / self.grid.n() as f64
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    fn combine(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            cells: self.cells.iter().zip(&other.cells).map(|(&a, &b)| op(a, b)).collect(),
        })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> Self {
        Self {
            grid: self.grid,
            cells: self.cells.iter().map(|c| !c).collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.grid == other.grid && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    pub fn indicator(&self) -> SampledFunction {
        SampledFunction::from_fn_index(self.grid, |k| {
            Complex64::new(if self.cells[k] { 1.0 } else { 0.0 }, 0.0)
        })
    }

    /// ∫_E g = (1/N) Σ_{cells in E} g.
    pub fn integrate(&self, g: &[f64]) -> f64 {
        let s: f64 = self.cells.iter().zip(g).filter(|(c, _)| **c).map(|(_, v)| v).sum();
        s / self.grid.n() as f64
    }

    /// Member of X(E): modulus one with a uniform random phase on E, zero off E.
    pub fn sample_x(&self, rng: &mut impl Rng) -> SampledFunction {
        SampledFunction::from_fn_index(self.grid, |k| {
            if self.cells[k] {
                Complex64::from_polar(1.0, 2.0 * PI * rng.gen::<f64>())
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// |f| ≤ 1 everywhere and f = 0 off E.
    pub fn admits(&self, f: &SampledFunction) -> bool {
        f.grid() == self.grid
            && f.values().iter().zip(&self.cells).all(|(v, &c)| {
                let m = v.norm();
                m <= 1.0 + 1e-12 && (c || m == 0.0)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng;

    #[test]
    fn measures_are_cell_counts() {
        let g = TorusGrid::new(64).unwrap();
        let s = MeasurableSet::from_intervals(g, &[DyadicInterval::new(-2, 1), DyadicInterval::new(-4, 0)]).unwrap();
        assert_eq!(s.measure(), 0.25 + 1.0 / 16.0);
        assert_eq!(s.complement().measure(), 1.0 - s.measure());
        assert!(MeasurableSet::empty(g).is_subset(&s));
        assert!(s.is_subset(&MeasurableSet::full(g)));
    }

    #[test]
    fn sampled_members_are_admitted() {
        let g = TorusGrid::new(128).unwrap();
        let mut r = rng(5);
        let e = MeasurableSet::random_dyadic_union(g, -4, 0.5, &mut r).unwrap();
        let f = e.sample_x(&mut r);
        assert!(e.admits(&f));
        assert!(!e.complement().admits(&f) || e.is_empty());
        let on: usize = f.values().iter().filter(|v| v.norm() > 0.0).count();
        assert_eq!(on, e.count());
    }
}
