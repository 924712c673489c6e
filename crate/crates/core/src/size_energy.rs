//! Sizes and energies of coefficient families over finite dyadic collections,
//! the stopping-time tree decomposition, and the size/energy bound on the
//! reordered form Λ₁ measured as ratios.
//!
//! Two kinds of size exist. For the non-lacunary slot (i = j) the local
//! quantity of J is |a_J|/|J|^{1/2}; for the other slots it is the weak-L¹
//! average (1/|J|)‖(Σ_{J′⊆J} |a_{J′}|²/|J′| χ_{J′})^{1/2}‖_{1,∞}. The square
//! function is constant on the cells of the finest scale below J, so the
//! weak-L¹ norm is evaluated exactly on those cells.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{
    ladder, lambda1_coefficients, BumpFamily, CoefficientFamily, DyadicInterval, Flavor, ModelConfig, ModelKind,
};
use crate::error::{FppError, Result};
use crate::grid::{approx_cutoff, dft, weak_l1_of, SampledFunction};
use crate::harness::sets::MeasurableSet;
use crate::sampling::substream;

/// Recorded constant C in Σ_T |J_T| ≤ C·2^{n₀}. Tops exceed 2^{-n₀-1}·energy
/// and are disjoint, so the energy at the dyadic level just below the
/// threshold bounds their total by less than 4·2^{n₀}.
pub const TOP_CONSTANT: f64 = 4.0;

/// Largest family accepted by [`energy_exhaustive`].
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Decay exponent N in χ̃_J^N; χ̃_J = (1 + dist(x,J)/|J|)^{-10}.
pub const DEFAULT_DECAY: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizeKind {
    /// |a_J| / |J|^{1/2}
    Sup,
    /// weak-L¹ localized square function
    SquareFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeEnergyParams {
    /// Position of the non-lacunary 𝓙-family.
    pub j: usize,
    /// Coefficient slot.
    pub i: usize,
    /// Marks the k₀-variant of slot 3; it changes the coefficients, not the
    /// formulas.
    pub k0: Option<u32>,
    pub theta: [Rational64; 3],
}

impl SizeEnergyParams {
    pub fn new(j: usize, i: usize, k0: Option<u32>, theta: [Rational64; 3]) -> Result<Self> {
        let p = Self { j, i, k0, theta };
        p.validate()?;
        Ok(p)
    }

    /// θ = (1/3, 1/3, 1/3).
    pub fn uniform(j: usize, i: usize) -> Result<Self> {
        Self::new(j, i, None, [Rational64::new(1, 3); 3])
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.j) || !(1..=3).contains(&self.i) {
            return Err(FppError::InvalidConfig(format!(
                "slots must lie in 1..=3 (j={}, i={})",
                self.j, self.i
            )));
        }
        if let Some(k0) = self.k0 {
            if self.i != 3 || k0 == 0 {
                return Err(FppError::InvalidConfig(
                    "the k0 variant exists for slot 3 and k0 >= 1 only".into(),
                ));
            }
        }
        let one = Rational64::from_integer(1);
        if self.theta.iter().any(|t| *t < Rational64::zero() || *t >= one) {
            return Err(FppError::InvalidConfig("each theta must lie in [0, 1)".into()));
        }
        if self.theta.iter().sum::<Rational64>() != one {
            return Err(FppError::InvalidConfig("theta must sum to exactly 1".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> SizeKind {
        self.kind_for(self.i)
    }

    pub fn kind_for(&self, slot: usize) -> SizeKind {
        if slot == self.j {
            SizeKind::Sup
        } else {
            SizeKind::SquareFunction
        }
    }

    pub fn theta_f64(&self) -> [f64; 3] {
        self.theta.map(|t| t.to_f64().unwrap_or(f64::NAN))
    }
}

/// "1/3,1/3,1/3" or "0.5,0.25,0.25" (decimals are read exactly).
pub fn parse_theta(s: &str) -> Result<[Rational64; 3]> {
    let parts: Vec<Rational64> = s.split(',').map(|p| parse_rational(p.trim())).collect::<Result<_>>()?;
    parts
        .try_into()
        .map_err(|_| FppError::Parse(format!("expected three theta values in {s:?}")))
}

pub fn parse_rational(s: &str) -> Result<Rational64> {
    let bad = || FppError::Parse(format!("not a rational number: {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(a, b));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if frac.len() > 15 || (int.is_empty() && frac.is_empty()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num: i64 = digits.parse().map_err(|_| bad())?;
    let r = Rational64::new(num, 10i64.pow(frac.len() as u32));
    Ok(if neg { -r } else { r })
}

fn inv_sqrt_len(j: &DyadicInterval) -> f64 {
    2f64.powf(-0.5 * j.k as f64)
}

/// Largest n with 2^n ≤ q (q > 0).
fn floor_log2(q: f64) -> i32 {
    let mut n = q.log2().floor() as i32;
    while 2f64.powi(n + 1) <= q {
        n += 1;
    }
    while 2f64.powi(n) > q {
        n -= 1;
    }
    n
}

/// (1/|J|)·‖(Σ w_{J′} χ_{J′})^{1/2}‖_{1,∞} for J′ ⊆ J, w = |a|²/|J′|.
fn square_average(j: &DyadicInterval, sub: &[(DyadicInterval, f64)]) -> f64 {
    let Some(kf) = sub.iter().map(|(i, _)| i.k).min() else {
        return 0.0;
    };
    let depth = j.k - kf;
    let cells = 1usize << depth;
    let mut vals = vec![0.0_f64; cells];
    let base = j.n << depth;
    for (i, a2) in sub {
        let shift = i.k - kf;
        let start = ((i.n << shift) - base) as usize;
        let w = a2 * 2f64.powi(-i.k);
        for v in &mut vals[start..start + (1usize << shift)] {
            *v += w;
        }
    }
    for v in &mut vals {
        *v = v.sqrt();
    }
    weak_l1_of(&vals)
}

/// |a|² entries of a family, for repeated square-function evaluation.
fn squared(fam: &CoefficientFamily) -> Vec<(DyadicInterval, f64)> {
    fam.iter().map(|(j, a)| (*j, a.norm_sqr())).collect()
}

fn quantity_in(j: &DyadicInterval, a: Complex64, entries: &[(DyadicInterval, f64)], kind: SizeKind) -> f64 {
    match kind {
        SizeKind::Sup => a.norm() / j.length().sqrt(),
        SizeKind::SquareFunction => {
            let sub: Vec<(DyadicInterval, f64)> = entries.iter().filter(|(i, _)| j.contains(i)).copied().collect();
            square_average(j, &sub)
        }
    }
}

/// Local quantity of J within the family (the term under the sup in the size).
pub fn local_size(fam: &CoefficientFamily, j: &DyadicInterval, kind: SizeKind) -> f64 {
    quantity_in(j, fam.get(j), &squared(fam), kind)
}

fn quantities(fam: &CoefficientFamily, kind: SizeKind) -> Vec<(DyadicInterval, f64)> {
    let entries = squared(fam);
    fam.iter()
        .map(|(j, a)| (*j, quantity_in(j, *a, &entries, kind)))
        .collect()
}

pub fn size_of(fam: &CoefficientFamily, kind: SizeKind) -> f64 {
    quantities(fam, kind).iter().map(|(_, q)| *q).fold(0.0, f64::max)
}

pub fn size(fam: &CoefficientFamily, params: &SizeEnergyParams) -> f64 {
    size_of(fam, params.kind())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub value: f64,
    /// Optimal threshold exponent, absent for an all-zero family.
    pub n: Option<i32>,
    /// Optimal disjoint subcollection.
    pub antichain: Vec<DyadicInterval>,
}

/// Disjoint maximal elements of a set of dyadic intervals.
fn maximal(set: &BTreeSet<DyadicInterval>) -> Vec<DyadicInterval> {
    set.iter()
        .filter(|j| (j.k + 1..=0).all(|k| !set.contains(&j.ancestor(k))))
        .copied()
        .collect()
}

/// sup_n 2^n·(total length of a disjoint subcollection with quantity ≥ 2^n).
/// For a fixed n the maximal candidates are disjoint and cover every other
/// candidate, so they are the optimal subcollection; n runs over the
/// attained dyadic levels with two levels of slack on either side.
fn energy_of(q: &[(DyadicInterval, f64)]) -> EnergyReport {
    let levels: Vec<i32> = q
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(_, v)| floor_log2(*v))
        .collect();
    let (Some(&lo), Some(&hi)) = (levels.iter().min(), levels.iter().max()) else {
        return EnergyReport {
            value: 0.0,
            n: None,
            antichain: Vec::new(),
        };
    };
    let mut best = EnergyReport {
        value: 0.0,
        n: None,
        antichain: Vec::new(),
    };
    for n in lo - 2..=hi + 2 {
        let t = 2f64.powi(n);
        let cand: BTreeSet<DyadicInterval> = q.iter().filter(|(_, v)| *v >= t).map(|(j, _)| *j).collect();
        let top = maximal(&cand);
        let total: f64 = top.iter().map(|j| j.length()).sum();
        let value = t * total;
        if value > best.value {
            best = EnergyReport {
                value,
                n: Some(n),
                antichain: top,
            };
        }
    }
    best
}

pub fn energy_with(fam: &CoefficientFamily, kind: SizeKind) -> EnergyReport {
    energy_of(&quantities(fam, kind))
}

pub fn energy(fam: &CoefficientFamily, params: &SizeEnergyParams) -> EnergyReport {
    energy_with(fam, params.kind())
}

/// Energy by enumerating every disjoint subcollection D and taking for each
/// the largest n with min_D quantity ≥ 2^n.
pub fn energy_exhaustive(fam: &CoefficientFamily, kind: SizeKind) -> Result<f64> {
    if fam.len() > EXHAUSTIVE_LIMIT {
        return Err(FppError::InvalidConfig(format!(
            "exhaustive energy limited to {EXHAUSTIVE_LIMIT} intervals, got {}",
            fam.len()
        )));
    }
    let q = quantities(fam, kind);
    let m = q.len();
    let mut best = 0.0_f64;
    'subsets: for mask in 1u32..(1u32 << m) {
        let members: Vec<usize> = (0..m).filter(|b| mask >> b & 1 == 1).collect();
        for (x, &a) in members.iter().enumerate() {
            if q[a].1 <= 0.0 {
                continue 'subsets;
            }
            for &b in &members[x + 1..] {
                if !q[a].0.disjoint(&q[b].0) {
                    continue 'subsets;
                }
            }
        }
        let floor = members.iter().map(|&a| q[a].1).fold(f64::INFINITY, f64::min);
        let total: f64 = members.iter().map(|&a| q[a].0.length()).sum();
        best = best.max(2f64.powi(floor_log2(floor)) * total);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohnNirenberg {
    /// Weak-L¹ square-function size.
    pub weak_size: f64,
    /// sup_J |J|^{-1/2}(Σ_{J′⊆J}|a_{J′}|²)^{1/2}.
    pub l2_size: f64,
    /// weak_size / l2_size (1 when both vanish).
    pub ratio: f64,
}

pub fn l2_size(fam: &CoefficientFamily) -> f64 {
    let entries = squared(fam);
    fam.iter()
        .map(|(j, _)| {
            let s: f64 = entries.iter().filter(|(i, _)| j.contains(i)).map(|(_, a2)| a2).sum();
            s.sqrt() * inv_sqrt_len(j)
        })
        .fold(0.0, f64::max)
}

pub fn john_nirenberg_compare(fam: &CoefficientFamily, params: &SizeEnergyParams) -> Result<JohnNirenberg> {
    if params.kind() != SizeKind::SquareFunction {
        return Err(FppError::Precondition(
            "the comparison concerns square-function slots (i != j)".into(),
        ));
    }
    let weak_size = size_of(fam, SizeKind::SquareFunction);
    let l2 = l2_size(fam);
    Ok(JohnNirenberg {
        weak_size,
        l2_size: l2,
        ratio: ratio(weak_size, l2, 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// lhs / rhs; 0 when lhs = 0, infinite when only rhs vanishes.
    pub ratio: f64,
}

impl InequalityReport {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            ratio: ratio(lhs, rhs, 0.0),
        }
    }
}

fn ratio(a: f64, b: f64, both_zero: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        both_zero
    } else if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// (1/|J|)·∫_E χ̃_J^N.
fn cutoff_average(e: &MeasurableSet, j: &DyadicInterval, decay: u32) -> Result<f64> {
    let c = approx_cutoff(j, e.grid(), 10 * decay)?;
    let vals: Vec<f64> = c.values().iter().map(|v| v.re).collect();
    Ok(e.integrate(&vals) / j.length())
}

fn cutoff_sup(e: &MeasurableSet, ivs: &[DyadicInterval], decay: u32) -> Result<f64> {
    ivs.iter()
        .try_fold(0.0_f64, |m, j| Ok(m.max(cutoff_average(e, j, decay)?)))
}

/// ‖(Σ_{J′⊆J} |⟨f,Φ_{J′}⟩|²/|J′| χ_{J′})^{1/2}‖_{1,∞} against ‖f·χ̃_J^N‖₁.
pub fn local_embedding_check(
    f: &SampledFunction,
    fam: &BumpFamily,
    j: &DyadicInterval,
    decay: u32,
) -> Result<InequalityReport> {
    if fam.flavor() != Flavor::Lacunary {
        return Err(FppError::Precondition(
            "the local embedding needs a lacunary family".into(),
        ));
    }
    f.grid().check_same(&fam.grid())?;
    let fh = dft(f);
    let sub: Vec<(DyadicInterval, f64)> = fam
        .intervals()
        .iter()
        .filter(|i| j.contains(i))
        .map(|i| (*i, fam.analyze(&fh, i).norm_sqr()))
        .collect();
    let lhs = square_average(j, &sub) * j.length();
    let c = approx_cutoff(j, f.grid(), 10 * decay)?;
    let n = f.grid().n() as f64;
    let rhs: f64 = f
        .values()
        .iter()
        .zip(c.values())
        .map(|(a, b)| a.norm() * b.re)
        .sum::<f64>()
        / n;
    Ok(InequalityReport::new(lhs, rhs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub top: DyadicInterval,
    pub members: Vec<DyadicInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    pub kind: SizeKind,
    pub n0: i32,
    /// Energy of the ambient collection.
    pub energy: f64,
    /// 2^{-n₀-1}·energy.
    pub threshold: f64,
    pub trees: Vec<Tree>,
    pub residual: Vec<DyadicInterval>,
    pub residual_size: f64,
    /// Σ_T |J_T|.
    pub top_measure: f64,
    /// top_measure / 2^{n₀}.
    pub top_constant: f64,
}

fn restrict(fam: &CoefficientFamily, keep: &BTreeSet<DyadicInterval>) -> CoefficientFamily {
    fam.iter()
        .filter(|(j, _)| keep.contains(j))
        .map(|(j, a)| (*j, *a))
        .collect()
}

/// Greedy selection on a subcollection whose ambient energy is given: repeatedly
/// take the longest (then leftmost) interval whose quantity within the
/// remaining collection exceeds 2^{-n₀-1}·energy, and remove everything it
/// contains as one tree.
pub fn stopping_decomposition_within(
    sub: &CoefficientFamily,
    energy: f64,
    kind: SizeKind,
    n0: i32,
) -> Result<TreeDecomposition> {
    let bound = energy * 2f64.powi(-n0);
    let s = size_of(sub, kind);
    if s > bound {
        return Err(FppError::Precondition(format!(
            "size {s} exceeds 2^(-n0)·energy = {bound} at n0 = {n0}"
        )));
    }
    let threshold = energy * 2f64.powi(-n0 - 1);
    let mut rem: BTreeMap<DyadicInterval, Complex64> = sub.iter().map(|(j, a)| (*j, *a)).collect();
    let mut trees = Vec::new();
    loop {
        let fam: CoefficientFamily = rem.iter().map(|(j, a)| (*j, *a)).collect();
        let entries = squared(&fam);
        let pick = rem
            .iter()
            .filter(|(j, a)| quantity_in(j, **a, &entries, kind) > threshold)
            .map(|(j, _)| *j)
            .min_by_key(|j| (-j.k, j.n));
        let Some(top) = pick else { break };
        let members: Vec<DyadicInterval> = rem.keys().filter(|j| top.contains(j)).copied().collect();
        for j in &members {
            rem.remove(j);
        }
        trees.push(Tree { top, members });
    }
    let residual: Vec<DyadicInterval> = rem.keys().copied().collect();
    let residual_size = size_of(&rem.into_iter().collect(), kind);
    let top_measure: f64 = trees.iter().map(|t| t.top.length()).sum();
    let dec = TreeDecomposition {
        kind,
        n0,
        energy,
        threshold,
        trees,
        residual,
        residual_size,
        top_measure,
        top_constant: top_measure * 2f64.powi(-n0),
    };
    verify_decomposition(sub, &dec)?;
    Ok(dec)
}

pub fn stopping_decomposition(
    fam: &CoefficientFamily,
    params: &SizeEnergyParams,
    n0: i32,
) -> Result<TreeDecomposition> {
    let kind = params.kind();
    let e = energy_with(fam, kind).value;
    stopping_decomposition_within(fam, e, kind, n0)
}

/// Independent re-evaluation of the decomposition postconditions: exact
/// partition of the input, containment in the tops, disjoint tops, residual
/// size at most the threshold and Σ|J_T| ≤ TOP_CONSTANT·2^{n₀}.
pub fn verify_decomposition(input: &CoefficientFamily, dec: &TreeDecomposition) -> Result<()> {
    let fail = |m: String| Err(FppError::Postcondition(m));
    let mut seen = BTreeSet::new();
    for j in dec
        .trees
        .iter()
        .flat_map(|t| t.members.iter())
        .chain(dec.residual.iter())
    {
        if !seen.insert(*j) {
            return fail(format!("{j} appears twice"));
        }
    }
    let input_set: BTreeSet<DyadicInterval> = input.iter().map(|(j, _)| *j).collect();
    if seen != input_set {
        return fail("trees and residual do not reproduce the input".into());
    }
    for t in &dec.trees {
        if !t.members.contains(&t.top) {
            return fail(format!("top {} missing from its tree", t.top));
        }
        if let Some(j) = t.members.iter().find(|j| !t.top.contains(j)) {
            return fail(format!("{j} is not inside the top {}", t.top));
        }
    }
    for (x, a) in dec.trees.iter().enumerate() {
        for b in &dec.trees[x + 1..] {
            if !a.top.disjoint(&b.top) {
                return fail(format!("tops {} and {} overlap", a.top, b.top));
            }
        }
    }
    let keep: BTreeSet<DyadicInterval> = dec.residual.iter().copied().collect();
    let rs = size_of(&restrict(input, &keep), dec.kind);
    if rs > dec.threshold {
        return fail(format!("residual size {rs} above {}", dec.threshold));
    }
    let tm: f64 = dec.trees.iter().map(|t| t.top.length()).sum();
    if tm > TOP_CONSTANT * 2f64.powi(dec.n0) {
        return fail(format!("top measure {tm} above {TOP_CONSTANT}·2^{}", dec.n0));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionLevel {
    pub n: i32,
    pub trees: Vec<Tree>,
    pub size: f64,
    pub top_measure: f64,
}

impl PartitionLevel {
    pub fn intervals(&self) -> impl Iterator<Item = &DyadicInterval> {
        self.trees.iter().flat_map(|t| t.members.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullPartition {
    pub kind: SizeKind,
    pub size: f64,
    pub energy: f64,
    /// Nonempty levels in increasing n.
    pub levels: Vec<PartitionLevel>,
    /// max over levels of top_measure / 2^n.
    pub constant: f64,
}

const MAX_LEVELS: usize = 4096;

/// Iterated stopping decomposition starting from the smallest n₀ allowed by
/// the precondition. Intervals whose quantity stays zero are never selected;
/// they close the partition as one last level at n ≥ 0, grouped under their
/// maximal elements (total top length ≤ 1 ≤ 2^n).
pub fn full_partition(fam: &CoefficientFamily, params: &SizeEnergyParams) -> Result<FullPartition> {
    full_partition_with(fam, params.kind())
}

pub fn full_partition_with(fam: &CoefficientFamily, kind: SizeKind) -> Result<FullPartition> {
    let s = size_of(fam, kind);
    let e = energy_with(fam, kind).value;
    let mut levels = Vec::new();
    let mut rem = fam.clone();
    let mut n = if s > 0.0 {
        let mut n = floor_log2(e / s);
        while s > e * 2f64.powi(-n) {
            n -= 1;
        }
        n
    } else {
        0
    };
    for _ in 0..MAX_LEVELS {
        if rem.is_empty() || size_of(&rem, kind) == 0.0 {
            break;
        }
        let dec = stopping_decomposition_within(&rem, e, kind, n)?;
        if !dec.trees.is_empty() {
            let taken: BTreeSet<DyadicInterval> = dec.trees.iter().flat_map(|t| t.members.iter().copied()).collect();
            levels.push(PartitionLevel {
                n,
                size: size_of(&restrict(&rem, &taken), kind),
                top_measure: dec.top_measure,
                trees: dec.trees,
            });
        }
        let keep: BTreeSet<DyadicInterval> = dec.residual.iter().copied().collect();
        rem = restrict(&rem, &keep);
        n += 1;
    }
    if !rem.is_empty() {
        if size_of(&rem, kind) > 0.0 {
            return Err(FppError::Degenerate(format!(
                "partition did not close in {MAX_LEVELS} levels"
            )));
        }
        let set: BTreeSet<DyadicInterval> = rem.iter().map(|(j, _)| *j).collect();
        let trees: Vec<Tree> = maximal(&set)
            .into_iter()
            .map(|top| Tree {
                top,
                members: set.iter().filter(|j| top.contains(j)).copied().collect(),
            })
            .collect();
        levels.push(PartitionLevel {
            n: n.max(0),
            top_measure: trees.iter().map(|t| t.top.length()).sum(),
            size: 0.0,
            trees,
        });
    }
    let constant = levels
        .iter()
        .map(|l| l.top_measure * 2f64.powi(-l.n))
        .fold(0.0, f64::max);
    let part = FullPartition {
        kind,
        size: s,
        energy: e,
        levels,
        constant,
    };
    verify_partition(fam, &part)?;
    Ok(part)
}

/// Levels are disjoint and exhaustive, each level's size is at most
/// min(2^{-n}·energy, size) and its tops are disjoint with total length at
/// most TOP_CONSTANT·2^n.
pub fn verify_partition(fam: &CoefficientFamily, part: &FullPartition) -> Result<()> {
    let fail = |m: String| Err(FppError::Postcondition(m));
    let mut seen = BTreeSet::new();
    for l in &part.levels {
        for j in l.intervals() {
            if !seen.insert(*j) {
                return fail(format!("{j} lies in two levels"));
            }
        }
        let set: BTreeSet<DyadicInterval> = l.intervals().copied().collect();
        let s = size_of(&restrict(fam, &set), part.kind);
        if s > (part.energy * 2f64.powi(-l.n)).min(part.size) {
            return fail(format!("level {} has size {s}", l.n));
        }
        for (x, a) in l.trees.iter().enumerate() {
            for b in &l.trees[x + 1..] {
                if !a.top.disjoint(&b.top) {
                    return fail(format!("level {} tops overlap", l.n));
                }
            }
        }
        let tm: f64 = l.trees.iter().map(|t| t.top.length()).sum();
        if tm > TOP_CONSTANT * 2f64.powi(l.n) {
            return fail(format!("level {} top measure {tm}", l.n));
        }
    }
    let all: BTreeSet<DyadicInterval> = fam.iter().map(|(j, _)| *j).collect();
    if seen != all {
        return fail("levels do not cover the family".into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractEstimate {
    /// |Σ_J |J|^{-1/2} a¹_J a²_J a³_J|.
    pub lhs: f64,
    pub sizes: [f64; 3],
    pub energies: [f64; 3],
    pub theta: [f64; 3],
    /// Π size_i^{1-θ_i}·energy_i^{θ_i}.
    pub rhs: f64,
    pub ratio: f64,
}

pub fn abstract_estimate_check(a: [&CoefficientFamily; 3], params: &SizeEnergyParams) -> Result<AbstractEstimate> {
    params.validate()?;
    let keys = |f: &CoefficientFamily| f.iter().map(|(j, _)| *j).collect::<Vec<_>>();
    if keys(a[1]) != keys(a[0]) || keys(a[2]) != keys(a[0]) {
        return Err(FppError::InvalidConfig(
            "the three families must share their intervals".into(),
        ));
    }
    let lhs = a[0]
        .iter()
        .map(|(j, x)| inv_sqrt_len(j) * x * a[1].get(j) * a[2].get(j))
        .sum::<Complex64>()
        .norm();
    let theta = params.theta_f64();
    let mut sizes = [0.0; 3];
    let mut energies = [0.0; 3];
    let mut rhs = 1.0;
    for s in 0..3 {
        let kind = params.kind_for(s + 1);
        sizes[s] = size_of(a[s], kind);
        energies[s] = energy_with(a[s], kind).value;
        rhs *= sizes[s].powf(1.0 - theta[s]) * energies[s].powf(theta[s]);
    }
    Ok(AbstractEstimate {
        lhs,
        sizes,
        energies,
        theta,
        rhs,
        ratio: ratio(lhs, rhs, 0.0),
    })
}

/// `count` distinct intervals drawn uniformly from all scales 2^{-depth}..1.
pub fn random_collection(count: usize, depth: u32, rng: &mut impl Rng) -> Result<Vec<DyadicInterval>> {
    let all = ladder(-(depth as i32), 0);
    if count > all.len() {
        return Err(FppError::InvalidConfig(format!(
            "{count} intervals requested from a ladder of {}",
            all.len()
        )));
    }
    let mut out: Vec<DyadicInterval> = sample(rng, all.len(), count).into_iter().map(|x| all[x]).collect();
    out.sort();
    Ok(out)
}

/// a_J = |J|^{1/2}·u with u uniform in [0, 1): nonnegative, so the form has
/// no cancellation to hide behind.
pub fn random_coefficients(ivs: &[DyadicInterval], rng: &mut impl Rng) -> CoefficientFamily {
    ivs.iter()
        .map(|j| (*j, Complex64::new(j.length().sqrt() * rng.gen::<f64>(), 0.0)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusLevel {
    pub intervals: usize,
    pub depth: u32,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateCorpus {
    pub seed: u64,
    pub j: usize,
    pub levels: Vec<CorpusLevel>,
    pub max_ratio: f64,
}

/// Ladder depth holding a collection of `count` intervals at density about
/// one half: ⌈log₂ count⌉ (the ladder 2^{-d}..1 has 2^{d+1} − 1 intervals).
pub fn corpus_depth(count: usize) -> u32 {
    count.max(2).next_power_of_two().trailing_zeros()
}

/// Abstract-estimate ratios over random collections of each requested size,
/// drawn from a ladder of the given depth or, by default, of
/// [`corpus_depth`]. Instance t of size c uses substream (seed, c·2^20 + t).
pub fn estimate_corpus(
    seed: u64,
    counts: &[usize],
    instances: usize,
    depth: Option<u32>,
    params: &SizeEnergyParams,
) -> Result<EstimateCorpus> {
    let mut levels = Vec::new();
    for &c in counts {
        let depth = depth.unwrap_or_else(|| corpus_depth(c));
        let ratios = (0..instances)
            .into_par_iter()
            .map(|t| {
                let mut r = substream(seed, ((c as u64) << 20) + t as u64);
                let ivs = random_collection(c, depth, &mut r)?;
                let fams: Vec<CoefficientFamily> = (0..3).map(|_| random_coefficients(&ivs, &mut r)).collect();
                Ok(abstract_estimate_check([&fams[0], &fams[1], &fams[2]], params)?.ratio)
            })
            .collect::<Result<Vec<f64>>>()?;
        let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
        levels.push(CorpusLevel {
            intervals: c,
            depth,
            ratios,
            max_ratio,
        });
    }
    let max_ratio = levels.iter().map(|l| l.max_ratio).fold(0.0, f64::max);
    Ok(EstimateCorpus {
        seed,
        j: params.j,
        levels,
        max_ratio,
    })
}

fn check_x(e: &MeasurableSet, f: &SampledFunction) -> Result<()> {
    if !e.admits(f) {
        return Err(FppError::Precondition(
            "function is not bounded by the indicator of its set".into(),
        ));
    }
    Ok(())
}

fn slot_family(cfg: &ModelConfig, slot: usize, f: &SampledFunction) -> Result<CoefficientFamily> {
    let fam = &cfg.j_families[slot - 1];
    f.grid().check_same(&fam.grid())?;
    let fh = dft(f);
    Ok(fam.intervals().iter().map(|j| (*j, fam.analyze(&fh, j))).collect())
}

fn kind_in(cfg: &ModelConfig, slot: usize) -> SizeKind {
    if slot == cfg.j_nonlac {
        SizeKind::Sup
    } else {
        SizeKind::SquareFunction
    }
}

fn check_input_slot(slot: usize) -> Result<()> {
    if slot != 1 && slot != 2 {
        return Err(FppError::InvalidConfig(format!("input slot {slot} must be 1 or 2")));
    }
    Ok(())
}

/// Size of a_J = ⟨f, Φ^i_J⟩ (i = 1, 2) for f ∈ X(E), against
/// sup_J (1/|J|)∫_E χ̃_J^N.
pub fn coefficient_size_bound(
    cfg: &ModelConfig,
    slot: usize,
    f: &SampledFunction,
    e: &MeasurableSet,
    decay: u32,
) -> Result<InequalityReport> {
    check_input_slot(slot)?;
    check_x(e, f)?;
    let a = slot_family(cfg, slot, f)?;
    let lhs = size_of(&a, kind_in(cfg, slot));
    let rhs = cutoff_sup(e, cfg.j_families[0].intervals(), decay)?;
    Ok(InequalityReport::new(lhs, rhs))
}

/// Energy of the same family against |E|.
pub fn coefficient_energy_bound(
    cfg: &ModelConfig,
    slot: usize,
    f: &SampledFunction,
    e: &MeasurableSet,
) -> Result<InequalityReport> {
    check_input_slot(slot)?;
    check_x(e, f)?;
    let a = slot_family(cfg, slot, f)?;
    Ok(InequalityReport::new(
        energy_with(&a, kind_in(cfg, slot)).value,
        e.measure(),
    ))
}

fn paraproduct_family(cfg: &ModelConfig, f1: &SampledFunction, f4: &SampledFunction) -> Result<CoefficientFamily> {
    if cfg.kind != ModelKind::T1 {
        return Err(FppError::InvalidConfig(
            "coefficient bounds are stated for T1 configurations".into(),
        ));
    }
    let zero = SampledFunction::zeros(cfg.grid());
    Ok(lambda1_coefficients(cfg, [f1, &zero, &zero, f4])?.a3)
}

/// Size of a³_J (a³_{J,k₀} when cfg.k0 is set) for f₁ ∈ X(E₁), f₄ ∈ X(E₄),
/// against (sup_J avg_{E₁})^{1-θ}(sup_J avg_{E₄})^θ.
pub fn paraproduct_size_bound(
    cfg: &ModelConfig,
    f1: &SampledFunction,
    e1: &MeasurableSet,
    f4: &SampledFunction,
    e4: &MeasurableSet,
    theta: f64,
    decay: u32,
) -> Result<InequalityReport> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(FppError::InvalidConfig(format!("theta {theta} outside (0, 1)")));
    }
    check_x(e1, f1)?;
    check_x(e4, f4)?;
    let a3 = paraproduct_family(cfg, f1, f4)?;
    let lhs = size_of(&a3, kind_in(cfg, 3));
    let js = cfg.j_families[0].intervals();
    let rhs = cutoff_sup(e1, js, decay)?.powf(1.0 - theta) * cutoff_sup(e4, js, decay)?.powf(theta);
    Ok(InequalityReport::new(lhs, rhs))
}

/// Energy of a³ against (sup_I avg_{E₁})^{1-θ₁}(sup_I avg_{E₄})^{1-θ₂}|E₁|^{θ₁}|E₄|^{θ₂},
/// θ₂ = 1 − θ₁, the sups over the 𝓘-collection.
pub fn paraproduct_energy_bound(
    cfg: &ModelConfig,
    f1: &SampledFunction,
    e1: &MeasurableSet,
    f4: &SampledFunction,
    e4: &MeasurableSet,
    theta1: f64,
    decay: u32,
) -> Result<InequalityReport> {
    // θ₁, θ₂ ∈ [0, 1) with θ₁ + θ₂ = 1 leaves θ₁ ∈ (0, 1).
    if !(theta1 > 0.0 && theta1 < 1.0) {
        return Err(FppError::InvalidConfig(format!("theta {theta1} outside (0, 1)")));
    }
    let theta2 = 1.0 - theta1;
    check_x(e1, f1)?;
    check_x(e4, f4)?;
    let a3 = paraproduct_family(cfg, f1, f4)?;
    let lhs = energy_with(&a3, kind_in(cfg, 3)).value;
    let is = cfg.i_families[0].intervals();
    let rhs = cutoff_sup(e1, is, decay)?.powf(1.0 - theta1)
        * cutoff_sup(e4, is, decay)?.powf(1.0 - theta2)
        * e1.measure().powf(theta1)
        * e4.measure().powf(theta2);
    Ok(InequalityReport::new(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{make_family, MotherShape};
    use crate::grid::TorusGrid;
    use crate::sampling::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn iv(k: i32, n: i64) -> DyadicInterval {
        DyadicInterval::new(k, n)
    }

    fn fam(entries: &[(i32, i64, f64)]) -> CoefficientFamily {
        entries
            .iter()
            .map(|&(k, n, a)| (iv(k, n), Complex64::new(a, 0.0)))
            .collect()
    }

    fn sup() -> SizeEnergyParams {
        SizeEnergyParams::uniform(1, 1).unwrap()
    }

    fn square() -> SizeEnergyParams {
        SizeEnergyParams::uniform(1, 2).unwrap()
    }

    #[test]
    fn params_validate_the_simplex() {
        let t = |a, b| Rational64::new(a, b);
        assert!(SizeEnergyParams::new(1, 2, None, [t(1, 2), t(1, 4), t(1, 4)]).is_ok());
        assert!(SizeEnergyParams::new(1, 2, None, [t(1, 2), t(1, 4), t(1, 3)]).is_err());
        assert!(SizeEnergyParams::new(1, 2, None, [t(1, 1), t(0, 1), t(0, 1)]).is_err());
        assert!(SizeEnergyParams::new(1, 2, Some(3), [t(1, 3); 3]).is_err());
        assert!(SizeEnergyParams::new(1, 3, Some(3), [t(1, 3); 3]).is_ok());
        assert_eq!(parse_theta("1/3, 1/3,1/3").unwrap(), [t(1, 3); 3]);
        assert_eq!(parse_theta("0.5,0.25,0.25").unwrap(), [t(1, 2), t(1, 4), t(1, 4)]);
        assert!(parse_theta("1/3,1/3").is_err());
    }

    #[test]
    fn single_interval_sizes_and_energy() {
        let f = fam(&[(0, 0, 1.0)]);
        assert_eq!(size(&f, &sup()), 1.0);
        assert_eq!(size(&f, &square()), 1.0);
        assert_eq!(energy(&f, &sup()).value, 1.0);
        assert_eq!(energy(&f, &sup()).n, Some(0));
        // i ≠ j with one J: the weak-L¹ norm of a constant on J.
        let g = fam(&[(-3, 5, 0.75)]);
        let expect = 0.75 / 2f64.powf(-1.5);
        assert!((size(&g, &square()) - expect).abs() <= 1e-15 * expect);
        assert!((size(&g, &sup()) - expect).abs() <= 1e-15 * expect);
    }

    #[test]
    fn two_halves_have_unit_energy() {
        let h = 0.5f64.sqrt();
        let f = fam(&[(-1, 0, h), (-1, 1, h)]);
        assert_eq!(energy(&f, &sup()).value, 1.0);
        assert_eq!(energy(&f, &sup()).antichain.len(), 2);
    }

    #[test]
    fn nested_family_matches_direct_evaluation() {
        // J = [0,1) with a = 0.5, [0,1/2) with 1, [0,1/4) with 0.25.
        let f = fam(&[(0, 0, 0.5), (-1, 0, 1.0), (-2, 0, 0.25)]);
        // Squared square function on quarters of [0,1): 2.5, 2.25, 0.25, 0.25.
        let v = [2.5f64.sqrt(), 2.25f64.sqrt(), 0.5, 0.5];
        // Weak-L¹ over [0,1): max_m v_(m)·m/4.
        let top = (0..4).map(|m| v[m] * (m + 1) as f64 / 4.0).fold(0.0, f64::max);
        // [0,1/2) sees only itself and [0,1/4): 2.25 and 2 on its quarters.
        let half = [(2.0f64 + 0.25).sqrt(), 2f64.sqrt()];
        let half_q = (0..2).map(|m| half[m] * (m + 1) as f64 / 2.0).fold(0.0, f64::max);
        let quarter_q = 0.25 * 2.0;
        let expect = top.max(half_q).max(quarter_q);
        assert!((size(&f, &square()) - expect).abs() <= 1e-14);
        assert!((local_size(&f, &iv(-1, 0), SizeKind::SquareFunction) - half_q).abs() <= 1e-14);
    }

    fn random_family(r: &mut impl Rng, count: usize, depth: u32) -> CoefficientFamily {
        let ivs = random_collection(count, depth, r).unwrap();
        ivs.iter()
            .map(|j| {
                let scale = j.length().sqrt() * 2f64.powi(r.gen_range(-3..=3));
                (*j, Complex64::new(scale * r.gen::<f64>(), scale * r.gen::<f64>()))
            })
            .collect()
    }

    #[test]
    fn greedy_energy_matches_exhaustive_enumeration() {
        let mut r = rng(11);
        for t in 0..60 {
            let f = random_family(&mut r, 1 + t % 12, 4);
            for kind in [SizeKind::Sup, SizeKind::SquareFunction] {
                assert_eq!(energy_with(&f, kind).value, energy_exhaustive(&f, kind).unwrap());
            }
        }
    }

    #[test]
    fn john_nirenberg_single_and_flat() {
        let f = fam(&[(-2, 1, 0.3)]);
        let jn = john_nirenberg_compare(&f, &square()).unwrap();
        assert_eq!(jn.ratio, 1.0);
        // Flat level −m below an empty top: both sides equal |c|·2^{m/2}.
        let m = 5;
        let c = 0.2;
        let mut g: CoefficientFamily = DyadicInterval::level(-m).map(|j| (j, Complex64::new(c, 0.0))).collect();
        g.insert(DyadicInterval::unit(), Complex64::new(0.0, 0.0));
        let jn = john_nirenberg_compare(&g, &square()).unwrap();
        let closed = c * 2f64.powf(m as f64 / 2.0);
        assert!((jn.l2_size - closed).abs() <= 1e-14 * closed);
        assert!((jn.weak_size - closed).abs() <= 1e-14 * closed);
        assert!(john_nirenberg_compare(&g, &sup()).is_err());
    }

    #[test]
    fn john_nirenberg_corpus_is_comparable() {
        let mut r = rng(3);
        for _ in 0..40 {
            let f = random_family(&mut r, 40, 6);
            let jn = john_nirenberg_compare(&f, &square()).unwrap();
            assert!(jn.ratio <= 1.0 + 1e-12 && jn.ratio >= 1.0 / 64.0, "{jn:?}");
        }
    }

    #[test]
    fn stopping_decomposition_trivial_cases() {
        let f = fam(&[(0, 0, 0.5), (-1, 0, 0.25), (-1, 1, 0.1)]);
        let e = energy(&f, &sup()).value;
        let s = size(&f, &sup());
        // Below half the threshold: nothing is selected.
        let n0 = floor_log2(e / s) - 1;
        let dec = stopping_decomposition(&f, &sup(), n0).unwrap();
        assert!(dec.trees.is_empty());
        assert_eq!(dec.residual.len(), 3);
        // Precondition violated for large n0.
        assert!(stopping_decomposition(&f, &sup(), n0 + 10).is_err());
        // One violator on top takes its whole subtree.
        let g = fam(&[(0, 0, 4.0), (-1, 0, 0.1), (-2, 3, 0.1)]);
        let e = energy(&g, &sup()).value;
        let dec = stopping_decomposition(&g, &sup(), floor_log2(e / 4.0)).unwrap();
        assert_eq!(dec.trees.len(), 1);
        assert_eq!(dec.trees[0].top, DyadicInterval::unit());
        assert_eq!(dec.trees[0].members.len(), 3);
    }

    #[test]
    fn stopping_decomposition_on_random_families() {
        let mut r = rng(21);
        for t in 0..30 {
            let f = random_family(&mut r, 50, 6);
            let p = if t % 2 == 0 { sup() } else { square() };
            let e = energy(&f, &p).value;
            let s = size(&f, &p);
            let n0 = floor_log2(e / s) - 1;
            for n in n0..n0 + 3 {
                if s <= e * 2f64.powi(-n) {
                    let dec = stopping_decomposition(&f, &p, n).unwrap();
                    verify_decomposition(&f, &dec).unwrap();
                    assert!(dec.top_constant <= TOP_CONSTANT);
                }
            }
        }
    }

    #[test]
    fn tampered_decompositions_are_rejected() {
        let g = fam(&[(0, 0, 4.0), (-1, 0, 0.1), (-2, 3, 3.0), (-1, 1, 1.0)]);
        let e = energy(&g, &sup()).value;
        let n0 = floor_log2(e / size(&g, &sup()));
        let mut dec = stopping_decomposition(&g, &sup(), n0).unwrap();
        assert!(!dec.trees.is_empty());
        dec.trees[0].members.pop();
        assert!(verify_decomposition(&g, &dec).is_err());
    }

    #[test]
    fn four_interval_partition_by_hand() {
        // Quantities 1, 4, 0.5, 2 on [0,1), [0,1/2), [1/2,1), [0,1/4).
        let h = 0.5f64.sqrt();
        let f = fam(&[(0, 0, 1.0), (-1, 0, 4.0 * h), (-1, 1, 0.5 * h), (-2, 0, 1.0)]);
        let p = full_partition(&f, &sup()).unwrap();
        assert_eq!(p.energy, 2.0);
        assert_eq!(p.size, 4.0);
        let levels: Vec<(i32, Vec<DyadicInterval>)> = p
            .levels
            .iter()
            .map(|l| (l.n, l.intervals().copied().collect()))
            .collect();
        assert_eq!(
            levels,
            vec![(-1, vec![iv(-2, 0), iv(-1, 0)]), (1, vec![iv(-1, 1), iv(0, 0)])]
        );
    }

    #[test]
    fn single_interval_partition_and_zero_tail() {
        let f = fam(&[(-1, 1, 0.3)]);
        assert_eq!(full_partition(&f, &sup()).unwrap().levels.len(), 1);
        let g = fam(&[(-1, 1, 0.3), (-2, 0, 0.0), (-3, 0, 0.0)]);
        let p = full_partition(&g, &sup()).unwrap();
        let total: usize = p.levels.iter().map(|l| l.intervals().count()).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn abstract_estimate_single_interval_closed_form() {
        let j = iv(-2, 1);
        let vals = [0.3, 0.7, 1.9];
        let fs: Vec<CoefficientFamily> = vals
            .iter()
            .map(|&v| [(j, Complex64::new(v, 0.0))].into_iter().collect())
            .collect();
        let rep = abstract_estimate_check([&fs[0], &fs[1], &fs[2]], &SizeEnergyParams::uniform(2, 1).unwrap()).unwrap();
        let s: Vec<f64> = vals.iter().map(|v| v / 0.5).collect();
        let expect: f64 = s
            .iter()
            .map(|&x| (x / 2f64.powi(floor_log2(x))).powf(1.0 / 3.0))
            .product();
        assert!((rep.ratio - expect).abs() <= 1e-14 * expect);
        assert!((rep.lhs - s.iter().product::<f64>() * 0.25).abs() <= 1e-15);
        let zero: CoefficientFamily = [(j, Complex64::new(0.0, 0.0))].into_iter().collect();
        let rep = abstract_estimate_check([&fs[0], &zero, &fs[2]], &sup()).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.ratio, 0.0);
    }

    #[test]
    fn corpus_depth_keeps_density() {
        assert_eq!(corpus_depth(64), 6);
        assert_eq!(corpus_depth(256), 8);
        assert_eq!(corpus_depth(100), 7);
        let p = SizeEnergyParams::uniform(1, 2).unwrap();
        let a = estimate_corpus(1, &[16], 4, None, &p).unwrap();
        let b = estimate_corpus(1, &[16], 4, None, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.levels[0].ratios.len(), 4);
    }

    #[test]
    fn abstract_estimate_rejects_mismatched_collections() {
        let a = fam(&[(0, 0, 1.0)]);
        let b = fam(&[(-1, 0, 1.0)]);
        assert!(abstract_estimate_check([&a, &b, &a], &sup()).is_err());
    }

    #[test]
    fn local_embedding_vanishes_for_zero_and_decays_with_distance() {
        let g = TorusGrid::new(256).unwrap();
        let j = iv(-5, 0);
        let below: Vec<DyadicInterval> = (-8..=-5)
            .flat_map(|k| DyadicInterval::level(k).filter(move |i| j.contains(i)))
            .collect();
        let lac = make_family(g, &below, Flavor::Lacunary, MotherShape::lacunary()).unwrap();
        let z = local_embedding_check(&SampledFunction::zeros(g), &lac, &j, 1).unwrap();
        assert_eq!((z.lhs, z.rhs, z.ratio), (0.0, 0.0, 0.0));
        let mut lhs = Vec::new();
        for d in [2, 4, 8] {
            let e = MeasurableSet::from_intervals(g, &[iv(-5, d)]).unwrap();
            let rep = local_embedding_check(&e.indicator(), &lac, &j, 1).unwrap();
            lhs.push(rep.lhs);
            assert!(rep.rhs > 0.0);
        }
        assert!(lhs[1] < lhs[0] && lhs[2] < lhs[1], "{lhs:?}");
        let non = make_family(g, &below, Flavor::NonLacunary, MotherShape::non_lacunary()).unwrap();
        assert!(local_embedding_check(&SampledFunction::zeros(g), &non, &j, 1).is_err());
    }

    #[test]
    fn lemma_bounds_vanish_on_empty_sets() {
        let g = TorusGrid::new(128).unwrap();
        let cfg = ModelConfig::standard(g, ModelKind::T1, -5, -2, 1, None).unwrap();
        let e = MeasurableSet::empty(g);
        let z = SampledFunction::zeros(g);
        for slot in [1, 2] {
            let s = coefficient_size_bound(&cfg, slot, &z, &e, 1).unwrap();
            let en = coefficient_energy_bound(&cfg, slot, &z, &e).unwrap();
            assert_eq!((s.lhs, s.rhs, en.lhs, en.rhs), (0.0, 0.0, 0.0, 0.0));
        }
        let s = paraproduct_size_bound(&cfg, &z, &e, &z, &e, 0.5, 1).unwrap();
        let en = paraproduct_energy_bound(&cfg, &z, &e, &z, &e, 0.5, 1).unwrap();
        assert_eq!((s.lhs, s.rhs, en.lhs, en.rhs), (0.0, 0.0, 0.0, 0.0));
        let full = MeasurableSet::full(g);
        let one = SampledFunction::constant(g, Complex64::new(1.0, 0.0));
        assert!(coefficient_size_bound(&cfg, 1, &one, &e, 1).is_err());
        assert!(coefficient_size_bound(&cfg, 3, &one, &full, 1).is_err());
    }

    #[test]
    fn energy_of_the_constant_on_the_torus() {
        // Measured: 2.0 in the non-lacunary slot, 0 in the lacunary one.
        let g = TorusGrid::new(256).unwrap();
        let cfg = ModelConfig::standard(g, ModelKind::T1, -7, -2, 1, None).unwrap();
        let full = MeasurableSet::full(g);
        let one = SampledFunction::constant(g, Complex64::new(1.0, 0.0));
        let non = coefficient_energy_bound(&cfg, 1, &one, &full).unwrap();
        assert_eq!(non.rhs, 1.0);
        assert!(non.lhs <= 2.0);
        assert_eq!(coefficient_energy_bound(&cfg, 2, &one, &full).unwrap().lhs, 0.0);
    }

    #[test]
    fn paraproduct_size_is_stable_under_dilation_of_e1() {
        // Measured ratios 0.75, 1.46, 0.43 with the non-lacunary slot third.
        let g = TorusGrid::new(256).unwrap();
        let cfg = ModelConfig::standard(g, ModelKind::T1, -7, -2, 3, None).unwrap();
        let mut r = rng(3);
        let e4 = MeasurableSet::from_intervals(g, &[iv(-2, 1)]).unwrap();
        let f4 = e4.sample_x(&mut r);
        let mut ratios = Vec::new();
        for s in 0..3 {
            let e1 = MeasurableSet::from_intervals(g, &[iv(-3 - s, 2 << s)]).unwrap();
            let f1 = e1.sample_x(&mut r);
            ratios.push(paraproduct_size_bound(&cfg, &f1, &e1, &f4, &e4, 0.5, 1).unwrap().ratio);
        }
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(lo > 0.0 && hi / lo <= 8.0, "{ratios:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn size_is_monotone_under_restriction(seed in 0u64..10_000, keep in 0u64..u64::MAX) {
            let mut r = rng(seed);
            let f = random_family(&mut r, 24, 5);
            let sub: CoefficientFamily = f.iter().enumerate().filter(|(x, _)| keep >> (x % 64) & 1 == 1).map(|(_, (j, a))| (*j, *a)).collect();
            for kind in [SizeKind::Sup, SizeKind::SquareFunction] {
                prop_assert!(size_of(&sub, kind) <= size_of(&f, kind));
            }
        }

        #[test]
        fn dyadic_scaling_is_covariant(seed in 0u64..10_000, m in -6i32..6, phase in 0usize..4) {
            let mut r = rng(seed);
            let ivs = random_collection(30, 5, &mut r).unwrap();
            let fs: Vec<CoefficientFamily> = (0..3).map(|_| random_coefficients(&ivs, &mut r)).collect();
            let unit = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)][phase];
            let lam = unit * 2f64.powi(m);
            let scaled: CoefficientFamily = fs[0].iter().map(|(j, a)| (*j, a * lam)).collect();
            let p = SizeEnergyParams::uniform(1 + (seed % 3) as usize, 1).unwrap();
            let a = abstract_estimate_check([&fs[0], &fs[1], &fs[2]], &p).unwrap();
            let b = abstract_estimate_check([&scaled, &fs[1], &fs[2]], &p).unwrap();
            let l = 2f64.powi(m);
            prop_assert_eq!(b.lhs, a.lhs * l);
            prop_assert_eq!(b.sizes[0], a.sizes[0] * l);
            prop_assert_eq!(b.energies[0], a.energies[0] * l);
            prop_assert!((b.ratio - a.ratio).abs() <= 1e-14 * a.ratio);
        }

        #[test]
        fn full_partition_is_exhaustive(seed in 0u64..10_000, sq in any::<bool>()) {
            let mut r = rng(seed);
            let f = random_family(&mut r, 40, 6);
            let kind = if sq { SizeKind::SquareFunction } else { SizeKind::Sup };
            let p = full_partition_with(&f, kind).unwrap();
            let total: usize = p.levels.iter().map(|l| l.intervals().count()).sum();
            prop_assert_eq!(total, f.len());
            prop_assert!(p.constant <= TOP_CONSTANT);
        }
    }
}
