use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::windows::WindowSystem;
use crate::error::Result;
use crate::grid::TorusGrid;
use crate::symbols::{mihlin_check_on, Formula, MihlinReport, SymbolSpec, SymbolTable, MIHLIN_EXCLUDED};

/// Lower bound expected of ã for M = 8, Q = 8 away from the origin cells.
pub const C0_EXPECTED: f64 = 0.1;

/// Mihlin budget for ã. The 10/9 tapers have width 1/18, so second-order
/// constants of ã sit near 700 for M = 8.
pub const PARTITION_MIHLIN_BUDGET: f64 = 1000.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagonalSample {
    pub k: i32,
    pub xi: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionReport {
    pub m: usize,
    pub q: usize,
    pub enlargement: f64,
    /// Box {−half..half−1}².
    pub half: i64,
    pub excluded: i64,
    /// min ã over the box minus {|ξ|_∞ < excluded}.
    pub c0: f64,
    pub c0_at: (i64, i64),
    pub max: f64,
    pub nonnegative: bool,
    /// ã at ξ₁ = ξ₂ = 2^k(M − 1/2).
    pub diagonal: Vec<DiagonalSample>,
    /// (max − min)/max over the diagonal samples.
    pub diagonal_spread: f64,
    pub mihlin: MihlinReport,
    pub pass: bool,
}

/// Tabulate ã on the frequency box of `grid` and measure its lower bound,
/// dilation stability and Mihlin constants.
pub fn build_partition(ws: &WindowSystem, grid: TorusGrid) -> Result<(SymbolTable, PartitionReport)> {
    let half = grid.n() / 2;
    let table = SymbolTable::tabulate(2, half, |xi| Complex64::new(ws.atilde(xi[0] as f64, xi[1] as f64), 0.0))?;
    let h = half as i64;
    let mut c0 = f64::INFINITY;
    let mut c0_at = (0, 0);
    let mut max = 0.0_f64;
    let mut nonnegative = true;
    for (flat, v) in table.values().iter().enumerate() {
        let x1 = (flat / (2 * half)) as i64 - h;
        let x2 = (flat % (2 * half)) as i64 - h;
        let v = v.re;
        nonnegative &= v >= 0.0;
        max = max.max(v);
        if x1.abs().max(x2.abs()) >= MIHLIN_EXCLUDED && v < c0 {
            c0 = v;
            c0_at = (x1, x2);
        }
    }
    let m = ws.m() as f64;
    let diagonal: Vec<DiagonalSample> = (-3..=8)
        .map(|k| {
            let xi = 2f64.powi(k) * (m - 0.5);
            DiagonalSample {
                k,
                xi,
                value: ws.atilde(xi, xi),
            }
        })
        .collect();
    let (dmin, dmax) = diagonal.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| {
        (lo.min(d.value), hi.max(d.value))
    });
    let diagonal_spread = (dmax - dmin) / dmax;
    let spec = SymbolSpec::formula(Formula::Atilde(*ws));
    let mihlin = mihlin_check_on(&spec, 2, PARTITION_MIHLIN_BUDGET, (h - 1).min(64), MIHLIN_EXCLUDED)?;
    let pass = nonnegative && c0 > 0.0 && diagonal_spread <= 0.1 && mihlin.pass;
    let report = PartitionReport {
        m: ws.m(),
        q: ws.q(),
        enlargement: ws.enlargement(),
        half: h,
        excluded: MIHLIN_EXCLUDED,
        c0,
        c0_at,
        max,
        nonnegative,
        diagonal,
        diagonal_spread,
        mihlin,
        pass,
    };
    Ok((table, report))
}
