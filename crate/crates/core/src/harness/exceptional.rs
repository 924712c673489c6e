//! Exceptional sets Ω = ⋃_{j≠d} {M(χ_{E_j}/|E_j|) > C/|E_d|} and major subsets.
//!
//! Written in the scale-invariant form: with |E_d| rescaled to 1 this is the
//! usual {M(χ_{E_j}/|E_j|) > C}, and the calibration target |Ω| < 1/2 becomes
//! |Ω| < |E_d|/2.

use serde::{Deserialize, Serialize};

use super::sets::MeasurableSet;
use crate::error::{FppError, Result};
use crate::grid::maximal_of;

pub const MAX_CONSTANT: f64 = (1u64 << 20) as f64;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExceptionalSet {
    pub omega: MeasurableSet,
    pub calibrated_c: f64,
    pub doublings: u32,
}

/// Normalized maximal functions M(χ_{E_j})/|E_j| of the non-designated sets.
struct Levels {
    maxima: Vec<Vec<f64>>,
    designated_measure: f64,
}

fn levels(sets: &[MeasurableSet], designated: usize) -> Result<Levels> {
    if designated >= sets.len() {
        return Err(FppError::InvalidConfig(format!(
            "designated index {designated} out of range"
        )));
    }
    let grid = sets[designated].grid();
    let mut maxima = Vec::new();
    for (j, e) in sets.iter().enumerate() {
        grid.check_same(&e.grid())?;
        if e.is_empty() {
            return Err(FppError::Degenerate(format!("set {} is empty", j + 1)));
        }
        if j == designated {
            continue;
        }
        let chi: Vec<f64> = e.mask().iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
        let m = e.measure();
        maxima.push(maximal_of(&chi).into_iter().map(|v| v / m).collect());
    }
    Ok(Levels {
        maxima,
        designated_measure: sets[designated].measure(),
    })
}

impl Levels {
    fn omega(&self, grid: crate::grid::TorusGrid, c: f64) -> MeasurableSet {
        let t = c / self.designated_measure;
        let mask = (0..grid.n()).map(|x| self.maxima.iter().any(|m| m[x] > t)).collect();
        MeasurableSet::from_mask(grid, mask).expect("mask sized from the grid")
    }
}

/// Ω for a fixed constant C (no calibration). `designated` is 0-based.
pub fn exceptional_set_at(sets: &[MeasurableSet], designated: usize, c: f64) -> Result<MeasurableSet> {
    let lv = levels(sets, designated)?;
    Ok(lv.omega(sets[designated].grid(), c))
}

/// Ω with C doubled from `c_start` until |Ω| < |E_d|/2.
pub fn exceptional_set(sets: &[MeasurableSet], designated: usize, c_start: f64) -> Result<ExceptionalSet> {
    if !(c_start > 0.0) {
        return Err(FppError::InvalidConfig(format!("C must be positive, got {c_start}")));
    }
    let lv = levels(sets, designated)?;
    let grid = sets[designated].grid();
    let half = 0.5 * lv.designated_measure;
    let mut c = c_start;
    let mut doublings = 0;
    loop {
        let omega = lv.omega(grid, c);
        if omega.measure() < half {
            return Ok(ExceptionalSet {
                omega,
                calibrated_c: c,
                doublings,
            });
        }
        c *= 2.0;
        doublings += 1;
        if c > MAX_CONSTANT {
            return Err(FppError::Degenerate(format!(
                "|Ω| ≥ |E_d|/2 for every C ≤ 2^20 (|E_d| = {})",
                lv.designated_measure
            )));
        }
    }
}

/// E′ = E ∖ Ω, checked to be a major subset: |E′| > |E|/2 and E′ ∩ Ω = ∅.
pub fn major_subset(e: &MeasurableSet, omega: &MeasurableSet) -> Result<MeasurableSet> {
    let sub = e.difference(omega)?;
    if !sub.intersection(omega)?.is_empty() || 2 * sub.count() <= e.count() {
        return Err(FppError::Postcondition(format!(
            "major subset has measure {} of {}",
            sub.measure(),
            e.measure()
        )));
    }
    Ok(sub)
}
