//! Discrete model operators T₁, T₁,k₀, T₂, T₂,k₀, the reordered form Λ₁ and
//! the inner paraproducts B(f₁,f₄), B̃_k₀(f₁,f₄).

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{ladder, make_family, BumpFamily, Flavor, MotherShape};
use super::interval::{DyadicInterval, RatInterval};
use crate::decomposition::windows::smoothstep;
use crate::error::{FppError, Result};
use crate::grid::{dft, idft, SampledFunction, Spectrum, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    T1,
    T2,
}

/// Reading of 2^{k₀}|ω³_J| ~ |ω_I|: the ratio |ω_I| / (2^{k₀}|ω³_J|) lies in
/// [1, 2) (Factor2) or [1/2, 2) (Factor4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum SimRule {
    #[default]
    Factor2,
    Factor4,
}

impl SimRule {
    pub fn holds(&self, ratio: Rational64) -> bool {
        let two = Rational64::from_integer(2);
        match self {
            SimRule::Factor2 => ratio >= Rational64::from_integer(1) && ratio < two,
            SimRule::Factor4 => ratio >= Rational64::new(1, 2) && ratio < two,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelOp {
    T1,
    T1k0,
    T2,
    T2k0,
}

impl std::str::FromStr for ModelOp {
    type Err = FppError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T1" => Ok(ModelOp::T1),
            "T1k0" => Ok(ModelOp::T1k0),
            "T2" => Ok(ModelOp::T2),
            "T2k0" => Ok(ModelOp::T2k0),
            _ => Err(FppError::Parse(format!("unknown model operator {s}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub i_families: [BumpFamily; 3],
    pub j_families: [BumpFamily; 3],
    /// Position (1..=3) of the non-lacunary 𝓙-family.
    pub j_nonlac: usize,
    pub k0: Option<u32>,
    pub separation: u32,
    #[serde(default)]
    pub sim: SimRule,
}

impl ModelConfig {
    /// Full ladders 2^{k_min}..2^{k_max} on both sides with the default shapes.
    pub fn standard(
        grid: TorusGrid,
        kind: ModelKind,
        k_min: i32,
        k_max: i32,
        j_nonlac: usize,
        k0: Option<u32>,
    ) -> Result<Self> {
        let ivs = ladder(k_min, k_max);
        Self::from_intervals(grid, kind, &ivs, &ivs, j_nonlac, k0)
    }

    pub fn from_intervals(
        grid: TorusGrid,
        kind: ModelKind,
        i_ivs: &[DyadicInterval],
        j_ivs: &[DyadicInterval],
        j_nonlac: usize,
        k0: Option<u32>,
    ) -> Result<Self> {
        let i_nonlac = match kind {
            ModelKind::T1 => 2,
            ModelKind::T2 => 1,
        };
        let non = || (Flavor::NonLacunary, MotherShape::non_lacunary());
        let i_shape = |slot: usize| {
            if slot == i_nonlac {
                non()
            } else if slot == 3 {
                (Flavor::Lacunary, MotherShape::lacunary_output())
            } else {
                (Flavor::Lacunary, MotherShape::lacunary_input())
            }
        };
        // Φ¹_J, Φ²_J bands must add up to ω³_J modulo 1/|J|
        let j_shape = |slot: usize| {
            if slot == j_nonlac {
                non()
            } else if j_nonlac == 3 && slot == 2 {
                (Flavor::Lacunary, MotherShape::lacunary().negated())
            } else {
                (Flavor::Lacunary, MotherShape::lacunary())
            }
        };
        let fam =
            |ivs: &[DyadicInterval], (flavor, shape): (Flavor, MotherShape)| make_family(grid, ivs, flavor, shape);
        let i_families = [
            fam(i_ivs, i_shape(1))?,
            fam(i_ivs, i_shape(2))?,
            fam(i_ivs, i_shape(3))?,
        ];
        let j_families = [
            fam(j_ivs, j_shape(1))?,
            fam(j_ivs, j_shape(2))?,
            fam(j_ivs, j_shape(3))?,
        ];
        let cfg = ModelConfig {
            kind,
            i_families,
            j_families,
            j_nonlac,
            k0,
            separation: 2,
            sim: SimRule::Factor2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_k0(&self, k0: Option<u32>) -> Self {
        ModelConfig { k0, ..self.clone() }
    }

    pub fn grid(&self) -> TorusGrid {
        self.i_families[0].grid()
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid();
        for f in self.i_families.iter().chain(self.j_families.iter()) {
            grid.check_same(&f.grid())?;
        }
        for side in [&self.i_families, &self.j_families] {
            if side[1].intervals() != side[0].intervals() || side[2].intervals() != side[0].intervals() {
                return Err(FppError::InvalidConfig(
                    "the three families of a side must share their intervals".into(),
                ));
            }
        }
        let inner = self.inner_slot();
        for (idx, f) in self.i_families.iter().enumerate() {
            let want = if idx == inner {
                Flavor::NonLacunary
            } else {
                Flavor::Lacunary
            };
            if f.flavor() != want {
                return Err(FppError::InvalidConfig(format!(
                    "𝓘-family {} must be {:?} for {:?}",
                    idx + 1,
                    want,
                    self.kind
                )));
            }
        }
        if !(1..=3).contains(&self.j_nonlac) {
            return Err(FppError::InvalidConfig(format!(
                "non-lacunary 𝓙 position {} not in 1..=3",
                self.j_nonlac
            )));
        }
        for (idx, f) in self.j_families.iter().enumerate() {
            let want = if idx + 1 == self.j_nonlac {
                Flavor::NonLacunary
            } else {
                Flavor::Lacunary
            };
            if f.flavor() != want {
                return Err(FppError::InvalidConfig(format!(
                    "𝓙-family {} must be {:?}",
                    idx + 1,
                    want
                )));
            }
        }
        if self.k0 == Some(0) {
            return Err(FppError::InvalidConfig("k0 must be strictly positive".into()));
        }
        Ok(())
    }

    /// 0-based 𝓘-family paired with the inner paraproduct.
    pub fn inner_slot(&self) -> usize {
        match self.kind {
            ModelKind::T1 => 1,
            ModelKind::T2 => 0,
        }
    }

    fn omega_i(&self, k: i32) -> RatInterval {
        self.i_families[self.inner_slot()].omega(k).expect("scale present")
    }

    fn omega_j(&self, k: i32) -> RatInterval {
        self.j_families[2].omega(k).expect("scale present")
    }

    /// Scale-level selection rule of B_I (k₀ = None) or B_{I,k₀}.
    pub fn admissible(&self, k_i: i32, k_j: i32, k0: Option<u32>) -> bool {
        let wi = self.omega_i(k_i);
        let wj = self.omega_j(k_j);
        if !wi.intersects(&wj) {
            return false;
        }
        match k0 {
            None => wj.length() <= wi.length(),
            Some(k0) => {
                let ratio = wi.length() / (wj.length() * Rational64::from_integer(1i64 << k0));
                self.sim.holds(ratio)
            }
        }
    }

    fn i_scales(&self) -> Vec<i32> {
        self.i_families[0].scales().collect()
    }

    fn j_scales(&self) -> Vec<i32> {
        self.j_families[0].scales().collect()
    }
}

/// Map J ↦ a_J with finite support.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientFamily {
    entries: BTreeMap<DyadicInterval, Complex64>,
}

impl CoefficientFamily {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, j: DyadicInterval, a: Complex64) {
        self.entries.insert(j, a);
    }

    pub fn get(&self, j: &DyadicInterval) -> Complex64 {
        self.entries.get(j).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DyadicInterval, &Complex64)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl FromIterator<(DyadicInterval, Complex64)> for CoefficientFamily {
    fn from_iter<T: IntoIterator<Item = (DyadicInterval, Complex64)>>(iter: T) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CoefficientRecord {
    k: i32,
    n: i64,
    re: f64,
    im: f64,
}

impl Serialize for CoefficientFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<_> = self
            .entries
            .iter()
            .map(|(j, c)| CoefficientRecord {
                k: j.k,
                n: j.n,
                re: c.re,
                im: c.im,
            })
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoefficientFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<CoefficientRecord>::deserialize(d)?;
        Ok(v.into_iter()
            .map(|r| (DyadicInterval::new(r.k, r.n), Complex64::new(r.re, r.im)))
            .collect())
    }
}

fn inv_sqrt_len(i: &DyadicInterval) -> f64 {
    i.length().powf(-0.5)
}

fn spectra(grid: TorusGrid, fs: &[&SampledFunction]) -> Result<Vec<Spectrum>> {
    fs.iter()
        .map(|f| {
            grid.check_same(&f.grid())?;
            Ok(dft(f))
        })
        .collect()
}

/// Sum over I of |I|^{−1/2}⟨f_outer,Φ^outer_I⟩⟨B_I,Φ^inner_I⟩Φ³_I.
fn apply_generic(cfg: &ModelConfig, f: [&SampledFunction; 3], k0: Option<u32>) -> Result<SampledFunction> {
    cfg.validate()?;
    let grid = cfg.grid();
    let fh = spectra(grid, &f)?;
    // (function analyzed by the outer I-family, the two J inputs, outer slot)
    let (outer_fn, ja, jb, outer) = match cfg.kind {
        ModelKind::T1 => (0, 1, 2, 0),
        ModelKind::T2 => (2, 0, 1, 1),
    };
    let inner = cfg.inner_slot();
    let [j1, j2, j3] = &cfg.j_families;
    let js = j1.intervals();
    let cj: Vec<Complex64> = js
        .par_iter()
        .map(|j| inv_sqrt_len(j) * j1.analyze(&fh[ja], j) * j2.analyze(&fh[jb], j))
        .collect();

    let mut b_by_scale = BTreeMap::new();
    for ki in cfg.i_scales() {
        let mut b = Spectrum::zeros(grid);
        for (j, c) in js.iter().zip(&cj) {
            if cfg.admissible(ki, j.k, k0) {
                for (xi, phi) in j3.coeffs(j) {
                    let slot = b.get(xi) + c * phi;
                    b.set(xi, slot);
                }
            }
        }
        b_by_scale.insert(ki, b);
    }

    let ifam = &cfg.i_families;
    let is = ifam[0].intervals();
    let ci: Vec<Complex64> = is
        .par_iter()
        .map(|i| {
            let a = inv_sqrt_len(i) * ifam[outer].analyze(&fh[outer_fn], i);
            a * ifam[inner].analyze(&b_by_scale[&i.k], i)
        })
        .collect();
    let mut out = Spectrum::zeros(grid);
    for (i, c) in is.iter().zip(&ci) {
        for (xi, phi) in ifam[2].coeffs(i) {
            let slot = out.get(xi) + c * phi;
            out.set(xi, slot);
        }
    }
    Ok(idft(&out))
}

fn require_kind(cfg: &ModelConfig, kind: ModelKind) -> Result<()> {
    if cfg.kind != kind {
        return Err(FppError::InvalidConfig(format!(
            "configuration is for {:?}, not {:?}",
            cfg.kind, kind
        )));
    }
    Ok(())
}

fn require_k0(cfg: &ModelConfig) -> Result<u32> {
    cfg.k0.ok_or_else(|| FppError::InvalidConfig("k0 required".into()))
}

pub fn apply_t1(
    cfg: &ModelConfig,
    f1: &SampledFunction,
    f2: &SampledFunction,
    f3: &SampledFunction,
) -> Result<SampledFunction> {
    require_kind(cfg, ModelKind::T1)?;
    apply_generic(cfg, [f1, f2, f3], None)
}

pub fn apply_t1_k0(
    cfg: &ModelConfig,
    f1: &SampledFunction,
    f2: &SampledFunction,
    f3: &SampledFunction,
) -> Result<SampledFunction> {
    require_kind(cfg, ModelKind::T1)?;
    let k0 = require_k0(cfg)?;
    apply_generic(cfg, [f1, f2, f3], Some(k0))
}

pub fn apply_t2(
    cfg: &ModelConfig,
    f1: &SampledFunction,
    f2: &SampledFunction,
    f3: &SampledFunction,
) -> Result<SampledFunction> {
    require_kind(cfg, ModelKind::T2)?;
    apply_generic(cfg, [f1, f2, f3], None)
}

pub fn apply_t2_k0(
    cfg: &ModelConfig,
    f1: &SampledFunction,
    f2: &SampledFunction,
    f3: &SampledFunction,
) -> Result<SampledFunction> {
    require_kind(cfg, ModelKind::T2)?;
    let k0 = require_k0(cfg)?;
    apply_generic(cfg, [f1, f2, f3], Some(k0))
}

/// Dispatch on the configuration: kind selects T₁/T₂, k₀ the truncated variant.
pub fn apply_model(
    cfg: &ModelConfig,
    f1: &SampledFunction,
    f2: &SampledFunction,
    f3: &SampledFunction,
) -> Result<SampledFunction> {
    apply_generic(cfg, [f1, f2, f3], cfg.k0)
}

/// Λ = ∫ T(f₁,f₂,f₃)·f₄.
pub fn model_form(cfg: &ModelConfig, f: [&SampledFunction; 4]) -> Result<Complex64> {
    let t = apply_model(cfg, f[0], f[1], f[2])?;
    t.integrate_product(f[3])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lambda1Coefficients {
    pub a1: CoefficientFamily,
    pub a2: CoefficientFamily,
    pub a3: CoefficientFamily,
    /// Σ_J |J|^{−1/2} a¹_J a²_J a³_J.
    pub lambda: Complex64,
    pub k0: Option<u32>,
}

/// ⟨Φ³_J, Φ²_I⟩ from the two sparse spectra.
fn overlap(a: &[(i64, Complex64)], b: &[(i64, Complex64)]) -> Complex64 {
    let (mut x, mut y) = (0, 0);
    let mut acc = Complex64::new(0.0, 0.0);
    while x < a.len() && y < b.len() {
        match a[x].0.cmp(&b[y].0) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                acc += a[x].1 * b[y].1.conj();
                x += 1;
                y += 1;
            }
        }
    }
    acc
}

/// α_I = |I|^{−1/2}⟨f₁,Φ¹_I⟩ and β_I = ∫f₄Φ³_I.
fn alpha_beta(cfg: &ModelConfig, f1: &Spectrum, f4: &Spectrum) -> Vec<(DyadicInterval, Complex64)> {
    let ifam = &cfg.i_families;
    ifam[0]
        .intervals()
        .par_iter()
        .map(|i| (*i, inv_sqrt_len(i) * ifam[0].analyze(f1, i) * ifam[2].pair(f4, i)))
        .collect()
}

/// a³_J = Σ_{I admissible} α_I β_I ⟨Φ³_J, Φ²_I⟩, summed pair by pair.
fn a3_by_pairs(cfg: &ModelConfig, ab: &[(DyadicInterval, Complex64)], k0: Option<u32>) -> CoefficientFamily {
    let j3 = &cfg.j_families[2];
    let i2 = &cfg.i_families[1];
    let i_spec: Vec<Vec<(i64, Complex64)>> = ab.iter().map(|(i, _)| i2.coeffs(i).collect()).collect();
    let js = j3.intervals();
    let vals: Vec<Complex64> = js
        .par_iter()
        .map(|j| {
            let phi_j: Vec<_> = j3.coeffs(j).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for ((i, w), si) in ab.iter().zip(&i_spec) {
                if cfg.admissible(i.k, j.k, k0) {
                    acc += w * overlap(&phi_j, si);
                }
            }
            acc
        })
        .collect();
    js.iter().copied().zip(vals).collect()
}

/// The coefficients of the reordered form Λ₁ (T₁ configurations; cfg.k0
/// selects a^{(3)}_{J,k₀}).
pub fn lambda1_coefficients(cfg: &ModelConfig, f: [&SampledFunction; 4]) -> Result<Lambda1Coefficients> {
    require_kind(cfg, ModelKind::T1)?;
    cfg.validate()?;
    let fh = spectra(cfg.grid(), &f)?;
    let [j1, j2, _] = &cfg.j_families;
    let js = j1.intervals();
    let a1: CoefficientFamily = js.iter().map(|j| (*j, j1.analyze(&fh[1], j))).collect();
    let a2: CoefficientFamily = js.iter().map(|j| (*j, j2.analyze(&fh[2], j))).collect();
    let ab = alpha_beta(cfg, &fh[0], &fh[3]);
    let a3 = a3_by_pairs(cfg, &ab, cfg.k0);
    let lambda = js
        .iter()
        .map(|j| inv_sqrt_len(j) * a1.get(j) * a2.get(j) * a3.get(j))
        .sum();
    Ok(Lambda1Coefficients {
        a1,
        a2,
        a3,
        lambda,
        k0: cfg.k0,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnerParaproductReport {
    pub k0: Option<u32>,
    /// Number of I in the collection 𝓘̃ (𝓘̃_k₀).
    pub collection_size: usize,
    /// max_J |a³_J − ∫B·Φ³_J|.
    pub max_deviation: f64,
    pub max_coefficient: f64,
    /// Range of ‖Φ̃²_I‖₂ (k₀ variant only).
    pub tilde_norm_range: Option<(f64, f64)>,
    pub pass: bool,
}

pub const INNER_IDENTITY_TOL: f64 = 1e-9;

/// Ψ̂: 1 on ω³ of every matched 𝓙-scale, tapering to 0 inside 2ω³.
fn psi_hat(omegas: &[RatInterval], xi: i64) -> f64 {
    let x = xi as f64;
    omegas
        .iter()
        .map(|w| {
            let (lo, hi) = (w.lo_f64(), w.hi_f64());
            let pad = 0.5 * (hi - lo);
            if x >= lo && x <= hi {
                1.0
            } else if x < lo {
                smoothstep((x - (lo - pad)) / pad)
            } else {
                smoothstep(((hi + pad) - x) / pad)
            }
        })
        .fold(0.0, f64::max)
}

/// B(f₁,f₄) (or B̃_k₀ when cfg.k0 is set) and the check a³_J = ∫B·Φ³_J.
///
/// The bumps are complex, so the nested sum carries conj(Φ²_I) and pairs
/// bilinearly; this is the arrangement in which the identity is exact.
pub fn inner_paraproduct(
    cfg: &ModelConfig,
    f1: &SampledFunction,
    f4: &SampledFunction,
) -> Result<(SampledFunction, InnerParaproductReport)> {
    require_kind(cfg, ModelKind::T1)?;
    cfg.validate()?;
    let grid = cfg.grid();
    let fh = spectra(grid, &[f1, f4])?;
    let ab = alpha_beta(cfg, &fh[0], &fh[1]);
    let j_scales = cfg.j_scales();
    let i2 = &cfg.i_families[1];
    let k0 = cfg.k0;
    // The identity uses 0 ∉ 5ω³_J.
    if cfg.j_nonlac == 3 {
        return Err(FppError::InvalidConfig(
            "the inner paraproduct needs a lacunary Φ³_J family".into(),
        ));
    }

    let mut b = Spectrum::zeros(grid);
    let mut count = 0;
    let mut norm_range: Option<(f64, f64)> = None;
    for (i, w) in &ab {
        let matched: Vec<i32> = j_scales
            .iter()
            .copied()
            .filter(|&kj| cfg.admissible(i.k, kj, k0))
            .collect();
        if matched.is_empty() {
            continue;
        }
        count += 1;
        match k0 {
            None => {
                // spectrum of conj(Φ²_I) at −ξ
                for (xi, c) in i2.coeffs(i) {
                    let slot = b.get(-xi) + w * c.conj();
                    b.set(-xi, slot);
                }
            }
            Some(k0) => {
                let omegas: Vec<RatInterval> = matched.iter().map(|&kj| cfg.omega_j(kj)).collect();
                let amp = 2f64.powf(k0 as f64 / 2.0);
                let mut nrm = 0.0;
                for (xi, c) in i2.coeffs(i) {
                    let tilde = c * (amp * psi_hat(&omegas, xi));
                    nrm += tilde.norm_sqr();
                    // 2^{−k₀/2}·conj(Φ̃²_I)
                    let slot = b.get(-xi) + w * tilde.conj() / amp;
                    b.set(-xi, slot);
                }
                let nrm = nrm.sqrt();
                norm_range = Some(match norm_range {
                    None => (nrm, nrm),
                    Some((lo, hi)) => (lo.min(nrm), hi.max(nrm)),
                });
            }
        }
    }

    let a3 = a3_by_pairs(cfg, &ab, k0);
    let j3 = &cfg.j_families[2];
    let mut max_dev: f64 = 0.0;
    for (j, a) in a3.iter() {
        let paired: Complex64 = j3.coeffs(j).map(|(xi, c)| b.get(-xi) * c).sum();
        max_dev = max_dev.max((paired - a).norm());
    }
    let max_coefficient = a3.max_abs();
    let report = InnerParaproductReport {
        k0,
        collection_size: count,
        max_deviation: max_dev,
        max_coefficient,
        tilde_norm_range: norm_range,
        pass: max_dev <= INNER_IDENTITY_TOL * max_coefficient.max(1.0),
    };
    Ok((idft(&b), report))
}

/// The (I, J) index set of B_I (k₀ = None) or B_{I,k₀}.
pub fn index_pairs(cfg: &ModelConfig, k0: Option<u32>) -> BTreeSet<(DyadicInterval, DyadicInterval)> {
    let mut out = BTreeSet::new();
    for i in cfg.i_families[0].intervals() {
        for j in cfg.j_families[0].intervals() {
            if cfg.admissible(i.k, j.k, k0) {
                out.insert((*i, *j));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionCheck {
    pub t1_pairs: usize,
    pub band_pairs: usize,
    /// Pair counts for k₀ = separation..=k_max.
    pub k0_pairs: Vec<(u32, usize)>,
    pub pairwise_disjoint: bool,
    pub union_equals: bool,
}

/// Checks that the k₀-index sets for k₀ ≥ # together with the near-diagonal
/// band (ratio below 2^#) partition the index set of T₁.
pub fn check_k0_partition(cfg: &ModelConfig, k_max: u32) -> PartitionCheck {
    let full = index_pairs(cfg, None);
    let sep = cfg.separation.max(1);
    let two_sep = Rational64::from_integer(1i64 << sep);
    let band: BTreeSet<_> = full
        .iter()
        .filter(|(i, j)| cfg.omega_i(i.k).length() / cfg.omega_j(j.k).length() < two_sep)
        .copied()
        .collect();
    let mut union = band.clone();
    let mut disjoint = true;
    let mut k0_pairs = Vec::new();
    for k0 in sep..=k_max {
        let s = index_pairs(cfg, Some(k0));
        k0_pairs.push((k0, s.len()));
        for p in &s {
            if !union.insert(*p) {
                disjoint = false;
            }
        }
    }
    PartitionCheck {
        t1_pairs: full.len(),
        band_pairs: band.len(),
        k0_pairs,
        pairwise_disjoint: disjoint,
        union_equals: union == full,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::family::{make_family_unchecked, MotherShape};
    use crate::sampling::{random_bandlimited, rng};

    fn inputs(grid: TorusGrid, seed: u64) -> Vec<SampledFunction> {
        let mut r = rng(seed);
        (0..4)
            .map(|_| random_bandlimited(grid, grid.max_freq() - 1, &mut r))
            .collect()
    }

    #[test]
    fn zero_input_gives_zero() {
        let g = TorusGrid::new(64).unwrap();
        let cfg = ModelConfig::standard(g, ModelKind::T1, -5, -2, 1, None).unwrap();
        let f = inputs(g, 1);
        let z = SampledFunction::zeros(g);
        assert_eq!(apply_t1(&cfg, &z, &f[1], &f[2]).unwrap().sup_norm(), 0.0);
        let cfg2 = ModelConfig::standard(g, ModelKind::T2, -5, -2, 1, Some(2)).unwrap();
        assert_eq!(apply_t2_k0(&cfg2, &f[0], &f[1], &z).unwrap().sup_norm(), 0.0);
        assert!(apply_t1(&cfg2, &f[0], &f[1], &f[2]).is_err());
    }

    #[test]
    fn single_pair_matches_hand_expansion() {
        let g = TorusGrid::new(64).unwrap();
        let i = DyadicInterval::new(-4, 5);
        let j = DyadicInterval::new(-3, 2);
        let cfg = ModelConfig::from_intervals(g, ModelKind::T1, &[i], &[j], 1, None).unwrap();
        assert!(cfg.admissible(i.k, j.k, None));
        let f = inputs(g, 2);
        let [pi1, pi2, pi3] = [0, 1, 2].map(|s| cfg.i_families[s].bump(&i));
        let [pj1, pj2, pj3] = [0, 1, 2].map(|s| cfg.j_families[s].bump(&j));
        let bj = pj3.scale(f[1].inner(&pj1).unwrap() * f[2].inner(&pj2).unwrap() / j.length().sqrt());
        let coef = f[0].inner(&pi1).unwrap() * bj.inner(&pi2).unwrap() / i.length().sqrt();
        let want = pi3.scale(coef);
        let got = apply_t1(&cfg, &f[0], &f[1], &f[2]).unwrap();
        assert!(got.sub(&want).unwrap().sup_norm() < 1e-12 * (1.0 + want.sup_norm()));
        assert!(want.sup_norm() > 1e-6);

        // the same pair through the k₀ rule: ratio 10/3·2 lies in [4, 8)
        let k = cfg.with_k0(Some(2));
        let got = apply_t1_k0(&k, &f[0], &f[1], &f[2]).unwrap();
        assert!(got.sub(&want).unwrap().sup_norm() < 1e-12 * (1.0 + want.sup_norm()));
        assert_eq!(
            apply_t1_k0(&cfg.with_k0(Some(3)), &f[0], &f[1], &f[2])
                .unwrap()
                .sup_norm(),
            0.0
        );
    }

    #[test]
    fn single_pair_t2_hand_expansion() {
        let g = TorusGrid::new(64).unwrap();
        let i = DyadicInterval::new(-4, 11);
        let j = DyadicInterval::new(-3, 5);
        let cfg = ModelConfig::from_intervals(g, ModelKind::T2, &[i], &[j], 2, None).unwrap();
        let f = inputs(g, 3);
        let [pi1, pi2, pi3] = [0, 1, 2].map(|s| cfg.i_families[s].bump(&i));
        let [pj1, pj2, pj3] = [0, 1, 2].map(|s| cfg.j_families[s].bump(&j));
        let bj = pj3.scale(f[0].inner(&pj1).unwrap() * f[1].inner(&pj2).unwrap() / j.length().sqrt());
        let coef = bj.inner(&pi1).unwrap() * f[2].inner(&pi2).unwrap() / i.length().sqrt();
        let want = pi3.scale(coef);
        let got = apply_t2(&cfg, &f[0], &f[1], &f[2]).unwrap();
        assert!(got.sub(&want).unwrap().sup_norm() < 1e-12 * (1.0 + want.sup_norm()));
        assert!(want.sup_norm() > 1e-6);
    }

    #[test]
    fn disjoint_supports_give_empty_sum() {
        let g = TorusGrid::new(64).unwrap();
        // J much finer than I: ω³_J lies beyond ω²_I
        let cfg = ModelConfig::from_intervals(g, ModelKind::T1, &ladder(-2, -2), &ladder(-5, -5), 1, None).unwrap();
        assert!(index_pairs(&cfg, None).is_empty());
        let f = inputs(g, 4);
        assert_eq!(apply_t1(&cfg, &f[0], &f[1], &f[2]).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn linear_in_each_slot() {
        let g = TorusGrid::new(64).unwrap();
        let f = inputs(g, 5);
        let h = inputs(g, 6);
        let c = Complex64::new(0.3, -1.7);
        for (kind, k0) in [
            (ModelKind::T1, None),
            (ModelKind::T1, Some(2)),
            (ModelKind::T2, None),
            (ModelKind::T2, Some(3)),
        ] {
            let cfg = ModelConfig::standard(g, kind, -5, -2, 1, k0).unwrap();
            for slot in 0..3 {
                let mut a = [f[0].clone(), f[1].clone(), f[2].clone()];
                let mut b = a.clone();
                let mut s = a.clone();
                a[slot] = f[slot].clone();
                b[slot] = h[slot].clone();
                s[slot] = f[slot].add(&h[slot].scale(c)).unwrap();
                let ta = apply_model(&cfg, &a[0], &a[1], &a[2]).unwrap();
                let tb = apply_model(&cfg, &b[0], &b[1], &b[2]).unwrap();
                let ts = apply_model(&cfg, &s[0], &s[1], &s[2]).unwrap();
                let lin = ta.add(&tb.scale(c)).unwrap();
                assert!(ts.sub(&lin).unwrap().sup_norm() <= 1e-12 * (1.0 + lin.sup_norm()));
            }
        }
    }

    #[test]
    fn t2_relabels_t1() {
        // T₂(f₂,f₃,f₁) with 𝓘-families (Φ²_T1, Φ¹_T1, Φ³) equals T₁(f₁,f₂,f₃)
        let g = TorusGrid::new(64).unwrap();
        let t1 = ModelConfig::standard(g, ModelKind::T1, -5, -2, 3, None).unwrap();
        assert_eq!(t1.j_families[1].omega(-2).unwrap().hi, Rational64::new(-7, 8));
        let mut t2 = t1.clone();
        t2.kind = ModelKind::T2;
        t2.i_families = [
            t1.i_families[1].clone(),
            t1.i_families[0].clone(),
            t1.i_families[2].clone(),
        ];
        t2.validate().unwrap();
        let f = inputs(g, 7);
        let a = apply_t1(&t1, &f[0], &f[1], &f[2]).unwrap();
        let b = apply_t2(&t2, &f[1], &f[2], &f[0]).unwrap();
        assert!(a.sub(&b).unwrap().sup_norm() <= 1e-12 * (1.0 + a.sup_norm()));
        assert!(a.sup_norm() > 1e-8);
    }

    #[test]
    fn lambda1_reordering() {
        let g = TorusGrid::new(128).unwrap();
        let f = inputs(g, 8);
        for k0 in [None, Some(2), Some(3), Some(4), Some(5)] {
            let cfg = ModelConfig::standard(g, ModelKind::T1, -7, -2, 1, k0).unwrap();
            let l = lambda1_coefficients(&cfg, [&f[0], &f[1], &f[2], &f[3]]).unwrap();
            let direct = model_form(&cfg, [&f[0], &f[1], &f[2], &f[3]]).unwrap();
            assert!(direct.norm() > 1e-6, "{k0:?}: degenerate form {direct}");
            assert!(
                (l.lambda - direct).norm() <= 1e-10 * direct.norm(),
                "{k0:?}: {} vs {}",
                l.lambda,
                direct
            );
        }
        let cfg = ModelConfig::standard(g, ModelKind::T1, -5, -2, 1, None).unwrap();
        let z = SampledFunction::zeros(g);
        let l = lambda1_coefficients(&cfg, [&f[0], &z, &f[2], &f[3]]).unwrap();
        assert_eq!(l.a1.max_abs(), 0.0);
        assert_eq!(l.lambda, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn inner_paraproduct_identities() {
        let g = TorusGrid::new(128).unwrap();
        let f = inputs(g, 9);
        for k0 in [None, Some(2), Some(3), Some(4)] {
            let cfg = ModelConfig::standard(g, ModelKind::T1, -7, -2, 1, k0).unwrap();
            let (_, rep) = inner_paraproduct(&cfg, &f[0], &f[3]).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert!(rep.max_coefficient > 0.0);
        }
        let cfg = ModelConfig::standard(g, ModelKind::T1, -7, -2, 3, None).unwrap();
        assert!(inner_paraproduct(&cfg, &f[0], &f[3]).is_err());
    }

    #[test]
    fn broken_family_breaks_identity() {
        let g = TorusGrid::new(128).unwrap();
        let f = inputs(g, 10);
        let mut cfg = ModelConfig::standard(g, ModelKind::T1, -6, -2, 1, None).unwrap();
        let broken = MotherShape::new(Rational64::new(1, 32), Rational64::new(5, 16));
        cfg.j_families[2] = make_family_unchecked(g, cfg.j_families[2].intervals(), Flavor::Lacunary, broken).unwrap();
        let (_, rep) = inner_paraproduct(&cfg, &f[0], &f[3]).unwrap();
        assert!(!rep.pass, "{rep:?}");
    }

    #[test]
    fn k0_sets_partition_t1() {
        let g = TorusGrid::new(256).unwrap();
        let cfg = ModelConfig::standard(g, ModelKind::T1, -8, -2, 1, None).unwrap();
        let p = check_k0_partition(&cfg, 12);
        assert!(p.pairwise_disjoint && p.union_equals, "{p:?}");
        assert!(p.t1_pairs > 0);
        // k₀ beyond the scale span selects nothing
        assert!(index_pairs(&cfg, Some(20)).is_empty());
    }

    #[test]
    fn coefficient_family_json() {
        let c: CoefficientFamily = [(DyadicInterval::new(-2, 1), Complex64::new(1.0, -2.0))]
            .into_iter()
            .collect();
        let s = serde_json::to_string(&c).unwrap();
        let back: CoefficientFamily = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
