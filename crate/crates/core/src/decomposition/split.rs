use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coefficients::{coefficients_at_scale, modes, CoefficientMode, CoefficientSlice};
use super::windows::WindowSystem;
use crate::error::{FppError, Result};
use crate::symbols::{mihlin_check_on, MihlinReport, SymbolSpec, SymbolTable, MIHLIN_EXCLUDED};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// The separation #.
    pub sep: u32,
    pub n_range: usize,
    /// Tables live on {−half..half−1}³.
    pub half: usize,
    pub mode: CoefficientMode,
    pub samples: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            sep: 3,
            n_range: 20,
            half: 16,
            mode: CoefficientMode::Restriction,
            samples: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitError {
    pub max_error: f64,
    pub max_target: f64,
    pub relative: f64,
}

/// m₁ collects k′ ≥ k″+#, m₂ collects k″ ≥ k′+#, m₃ the band |k′−k″| < #.
#[derive(Debug, Clone)]
pub struct SplitSymbols {
    pub config: SplitConfig,
    pub m1: SymbolTable,
    pub m2: SymbolTable,
    pub m3: SymbolTable,
    /// Window-support pairs in the shared variable ξ₂ that intersect / do not.
    pub kept_pairs: u64,
    pub dropped_pairs: u64,
    pub reconstruction: SplitError,
}

impl SplitSymbols {
    pub fn m3_spec(&self) -> SymbolSpec {
        SymbolSpec::table(self.m3.clone())
    }
}

/// One expanded cell: window pair, node and coefficients at full n-range.
#[derive(Debug, Clone)]
struct Cell {
    q: i64,
    j1: i64,
    j2: i64,
    slice: CoefficientSlice,
}

fn node_range(ws: &WindowSystem, half: usize) -> (i64, i64) {
    let lo = *ws.nodes_for_radius(1.0).start();
    let hi = *ws.nodes_for_radius(half as f64).end();
    (lo, hi)
}

/// Does the support of the pair at node q meet the box?
fn cell_meets_box(ws: &WindowSystem, q: i64, j1: i64, j2: i64, half: usize) -> bool {
    let s = 1.0 / ws.node_factor(q);
    let h = half as f64;
    [j1, j2].iter().all(|&j| {
        let (lo, hi) = ws.support(j);
        let (lo, hi) = (lo * s, hi * s);
        // some integer in (lo, hi) ∩ [−h, h−1]
        let first = (lo.floor() as i64 + 1).max(-(half as i64));
        (first as f64) < hi && (first as f64) <= h - 1.0
    })
}

fn expand_cells(a: &SymbolSpec, ws: &WindowSystem, cfg: &SplitConfig) -> Result<Vec<Cell>> {
    let (qlo, qhi) = node_range(ws, cfg.half);
    let pairs = ws.pairs();
    let qq = ws.q() as i64;
    let mut jobs = Vec::new();
    for q in qlo..=qhi {
        for &(j1, j2) in &pairs {
            if cell_meets_box(ws, q, j1, j2, cfg.half) {
                jobs.push((q, j1, j2));
            }
        }
    }
    let compute = |q: i64, j1: i64, j2: i64| {
        coefficients_at_scale(
            a,
            ws,
            j1,
            j2,
            ws.node_lambda(q),
            1.0 / ws.node_factor(q),
            cfg.n_range,
            cfg.mode,
            cfg.samples,
        )
    };
    if a.is_dilation_invariant() {
        // C(n) is unchanged when the node moves by Q: the cell and the
        // function both rescale by exactly 2.
        let mut base_jobs: Vec<(i64, i64, i64)> = jobs.iter().map(|&(q, j1, j2)| (q.rem_euclid(qq), j1, j2)).collect();
        base_jobs.sort_unstable();
        base_jobs.dedup();
        let base: Vec<Result<((i64, i64, i64), CoefficientSlice)>> = base_jobs
            .par_iter()
            .map(|&(r, j1, j2)| compute(r, j1, j2).map(|s| ((r, j1, j2), s)))
            .collect();
        let mut map = BTreeMap::new();
        for b in base {
            let (key, s) = b?;
            map.insert(key, s);
        }
        Ok(jobs
            .into_iter()
            .map(|(q, j1, j2)| {
                let r = q.rem_euclid(qq);
                let f = 2f64.powi(q.div_euclid(qq) as i32);
                let mut slice = map[&(r, j1, j2)].clone();
                slice.lambda = ws.node_lambda(q);
                slice.period *= f;
                slice.origin = (slice.origin.0 * f, slice.origin.1 * f);
                Cell { q, j1, j2, slice }
            })
            .collect())
    } else {
        jobs.par_iter()
            .map(|&(q, j1, j2)| compute(q, j1, j2).map(|slice| Cell { q, j1, j2, slice }))
            .collect()
    }
}

/// A_k(ξ) = (1/Q) Σ_{q: ⌊q/Q⌋ = k} Σ_j S_{j,q}(ξ)·Ψ̂_{j₁}Ψ̂_{j₂}(2^{−λ_q}ξ) on the 2-D box,
/// S the series truncated at n_range.
fn level_tables(ws: &WindowSystem, cells: &[Cell], half: usize, n_range: usize) -> BTreeMap<i64, Vec<Complex64>> {
    let side = 2 * half;
    let h = half as i64;
    let qq = ws.q() as i64;
    let parts: Vec<(i64, Vec<(usize, Complex64)>)> = cells
        .par_iter()
        .map(|c| {
            let slice = c.slice.truncated(n_range);
            let nf = ws.node_factor(c.q);
            let pts = |j: i64| -> Vec<(i64, f64)> {
                let (lo, hi) = ws.support(j);
                let (lo, hi) = (lo / nf, hi / nf);
                let start = (lo.floor() as i64 + 1).max(-h);
                let end = (hi.ceil() as i64 - 1).min(h - 1);
                (start..=end)
                    .map(|x| (x, ws.window(j, x as f64 * nf)))
                    .filter(|p| p.1 > 0.0)
                    .collect()
            };
            let p1 = pts(c.j1);
            let p2 = pts(c.j2);
            let r = n_range as i64;
            let w = 2 * n_range + 1;
            let e2: Vec<Vec<Complex64>> = p2.iter().map(|&(x, _)| modes(x as f64 / slice.period, r)).collect();
            let mut out = Vec::with_capacity(p1.len() * p2.len());
            for &(x1, w1) in &p1 {
                let e1 = modes(x1 as f64 / slice.period, r);
                // t[n₂] = Σ_{n₁} e1[n₁]·C(n₁, n₂)
                let mut t = vec![Complex64::new(0.0, 0.0); w];
                for (i, a) in e1.iter().enumerate() {
                    let row = &slice.values()[i * w..(i + 1) * w];
                    for (tk, c) in t.iter_mut().zip(row) {
                        *tk += a * c;
                    }
                }
                for ((x2, w2), e) in p2.iter().zip(&e2) {
                    let s: Complex64 = t.iter().zip(e).map(|(a, b)| a * b).sum();
                    let idx = (x1 + h) as usize * side + (*x2 + h) as usize;
                    out.push((idx, s * (w1 * w2 / ws.q() as f64)));
                }
            }
            (c.q.div_euclid(qq), out)
        })
        .collect();
    let mut levels: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
    for (k, contrib) in parts {
        let t = levels
            .entry(k)
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); side * side]);
        for (idx, v) in contrib {
            t[idx] += v;
        }
    }
    levels
}

/// Level tables plus running sums Σ_{k ≤ K} over a common level axis.
struct Levels {
    kmin: i64,
    tables: Vec<Vec<Complex64>>,
    cumulative: Vec<Vec<Complex64>>,
}

impl Levels {
    fn new(map: BTreeMap<i64, Vec<Complex64>>, kmin: i64, kmax: i64, len: usize) -> Self {
        let mut tables = Vec::new();
        for k in kmin..=kmax {
            tables.push(
                map.get(&k)
                    .cloned()
                    .unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); len]),
            );
        }
        let mut cumulative = Vec::with_capacity(tables.len());
        let mut run = vec![Complex64::new(0.0, 0.0); len];
        for t in &tables {
            for (r, v) in run.iter_mut().zip(t) {
                *r += v;
            }
            cumulative.push(run.clone());
        }
        Self {
            kmin,
            tables,
            cumulative,
        }
    }

    /// Σ_{k ≤ upto} table_k at idx.
    fn cum(&self, upto: i64, idx: usize) -> Complex64 {
        let i = upto - self.kmin;
        if i < 0 {
            Complex64::new(0.0, 0.0)
        } else {
            let i = (i as usize).min(self.cumulative.len() - 1);
            self.cumulative[i][idx]
        }
    }
}

fn dropped_pairs(ws: &WindowSystem, a_cells: &[Cell], b_cells: &[Cell]) -> (u64, u64) {
    // Supports in ξ₂: j₂ of the a-cell against j₁ of the b-cell.
    let interval = |q: i64, j: i64| {
        let s = 1.0 / ws.node_factor(q);
        let (lo, hi) = ws.support(j);
        (lo * s, hi * s)
    };
    let a_iv: Vec<(f64, f64)> = a_cells.iter().map(|c| interval(c.q, c.j2)).collect();
    let b_iv: Vec<(f64, f64)> = b_cells.iter().map(|c| interval(c.q, c.j1)).collect();
    let mut kept = 0u64;
    let mut dropped = 0u64;
    for x in &a_iv {
        for y in &b_iv {
            if x.0 < y.1 && y.0 < x.1 {
                kept += 1;
            } else {
                dropped += 1;
            }
        }
    }
    (kept, dropped)
}

fn check_inputs(a: &SymbolSpec, b: &SymbolSpec, cfg: &SplitConfig) -> Result<()> {
    if a.arity() != 2 || b.arity() != 2 {
        return Err(FppError::InvalidConfig(
            "split_product needs two arity-2 symbols".into(),
        ));
    }
    if cfg.sep < 2 {
        return Err(FppError::InvalidConfig(format!("separation {} must be >= 2", cfg.sep)));
    }
    if cfg.half < 2 {
        return Err(FppError::InvalidConfig("box too small".into()));
    }
    Ok(())
}

struct Expanded {
    a_cells: Vec<Cell>,
    b_cells: Vec<Cell>,
}

fn expand(a: &SymbolSpec, b: &SymbolSpec, ws: &WindowSystem, cfg: &SplitConfig) -> Result<Expanded> {
    check_inputs(a, b, cfg)?;
    let a_cells = expand_cells(a, ws, cfg)?;
    let b_cells = if a == b {
        a_cells.clone()
    } else {
        expand_cells(b, ws, cfg)?
    };
    Ok(Expanded { a_cells, b_cells })
}

fn assemble(
    a: &SymbolSpec,
    b: &SymbolSpec,
    ws: &WindowSystem,
    cfg: &SplitConfig,
    ex: &Expanded,
    n_range: usize,
) -> Result<SplitSymbols> {
    let half = cfg.half;
    let side = 2 * half;
    let h = half as i64;
    let la = level_tables(ws, &ex.a_cells, half, n_range);
    let lb = level_tables(ws, &ex.b_cells, half, n_range);
    let kmin = *la.keys().chain(lb.keys()).min().unwrap_or(&0);
    let kmax = *la.keys().chain(lb.keys()).max().unwrap_or(&0);
    let la = Levels::new(la, kmin, kmax, side * side);
    let lb = Levels::new(lb, kmin, kmax, side * side);
    let sep = cfg.sep as i64;
    let len = side * side * side;
    let zero = Complex64::new(0.0, 0.0);
    let mut m1 = vec![zero; len];
    let mut m2 = vec![zero; len];
    let mut m3 = vec![zero; len];
    let mut max_error = 0.0_f64;
    let mut max_target = 0.0_f64;
    for x1 in -h..h {
        for x2 in -h..h {
            let ia = (x1 + h) as usize * side + (x2 + h) as usize;
            let a_val = a.eval_real(&[x1 as f64, x2 as f64]);
            for x3 in -h..h {
                let ib = (x2 + h) as usize * side + (x3 + h) as usize;
                let (mut v1, mut v2, mut v3) = (zero, zero, zero);
                for (i, k) in (kmin..=kmax).enumerate() {
                    let ak = la.tables[i][ia];
                    let bk = lb.tables[i][ib];
                    v1 += ak * lb.cum(k - sep, ib);
                    v2 += bk * la.cum(k - sep, ia);
                    v3 += ak * (lb.cum(k + sep - 1, ib) - lb.cum(k - sep, ib));
                }
                let flat = ((x1 + h) as usize * side + (x2 + h) as usize) * side + (x3 + h) as usize;
                m1[flat] = v1;
                m2[flat] = v2;
                m3[flat] = v3;
                if (x1 == 0 && x2 == 0) || (x2 == 0 && x3 == 0) {
                    continue;
                }
                let target = a_val.clone()? * b.eval_real(&[x2 as f64, x3 as f64])?;
                max_target = max_target.max(target.norm());
                max_error = max_error.max((v1 + v2 + v3 - target).norm());
            }
        }
    }
    let (kept_pairs, dropped_pairs) = dropped_pairs(ws, &ex.a_cells, &ex.b_cells);
    let shape = vec![side; 3];
    Ok(SplitSymbols {
        config: SplitConfig { n_range, ..*cfg },
        m1: SymbolTable::new(shape.clone(), m1)?,
        m2: SymbolTable::new(shape.clone(), m2)?,
        m3: SymbolTable::new(shape, m3)?,
        kept_pairs,
        dropped_pairs,
        reconstruction: SplitError {
            max_error,
            max_target,
            relative: max_error / max_target.max(1e-300),
        },
    })
}

/// Tabulate m₁, m₂, m₃ on the box and measure |m₁+m₂+m₃ − a·b| there, away
/// from the points where a or b sits at the origin.
pub fn split_product(a: &SymbolSpec, b: &SymbolSpec, ws: &WindowSystem, cfg: &SplitConfig) -> Result<SplitSymbols> {
    let ex = expand(a, b, ws, cfg)?;
    assemble(a, b, ws, cfg, &ex, cfg.n_range)
}

/// Relative reconstruction error for each truncation in `n_ranges`, from a
/// single expansion at the largest one.
pub fn reconstruction_sweep(
    a: &SymbolSpec,
    b: &SymbolSpec,
    ws: &WindowSystem,
    cfg: &SplitConfig,
    n_ranges: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let top = n_ranges.iter().copied().max().unwrap_or(cfg.n_range);
    let full = SplitConfig { n_range: top, ..*cfg };
    let ex = expand(a, b, ws, &full)?;
    n_ranges
        .iter()
        .map(|&n| Ok((n, assemble(a, b, ws, &full, &ex, n)?.reconstruction.relative)))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct M3Mihlin {
    pub sep: u32,
    pub report: MihlinReport,
}

/// Mihlin constants of m₃ for each separation.
pub fn m3_mihlin_sweep(
    a: &SymbolSpec,
    b: &SymbolSpec,
    ws: &WindowSystem,
    cfg: &SplitConfig,
    seps: &[u32],
    budget: f64,
) -> Result<Vec<M3Mihlin>> {
    let ex = expand(a, b, ws, cfg)?;
    seps.iter()
        .map(|&sep| {
            let c = SplitConfig { sep, ..*cfg };
            check_inputs(a, b, &c)?;
            let s = assemble(a, b, ws, &c, &ex, cfg.n_range)?;
            let report = mihlin_check_on(&s.m3_spec(), 1, budget, cfg.half as i64 - 2, MIHLIN_EXCLUDED)?;
            Ok(M3Mihlin { sep, report })
        })
        .collect()
}

/// m₁ can be nonzero only where max(|ξ₁|,|ξ₂|) > ρ·max(|ξ₂|,|ξ₃|),
/// ρ = 2^{#−1}(M−1−δ)/(M+δ); m₂ is the mirror.
pub fn separation_ratio(ws: &WindowSystem, sep: u32) -> f64 {
    let m = ws.m() as f64;
    let d = ws.margin();
    2f64.powi(sep as i32 - 1) * (m - 1.0 - d) / (m + d)
}
