//! L²-normalized bump families with hard-truncated frequency supports.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::interval::{inv_length, DyadicInterval, RatInterval};
use crate::error::{FppError, Result};
use crate::grid::{idft, SampledFunction, Spectrum, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Lacunary,
    NonLacunary,
}

/// Mother frequency window in units of |I|^{−1}: ω_{|I|} = [lo, hi]/|I|,
/// weights cos²(π(ξ−c)/|ω|) truncated to the integers of ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotherShape {
    pub omega: RatInterval,
}

impl MotherShape {
    pub fn new(lo: Rational64, hi: Rational64) -> Self {
        Self {
            omega: RatInterval::new(lo, hi),
        }
    }

    /// Band-pass default, [7/32, 5/16]: every scale from |I| = 1/4 down to
    /// |I| = 4/N keeps at least one in-range frequency.
    pub fn lacunary() -> Self {
        Self::new(Rational64::new(7, 32), Rational64::new(5, 16))
    }

    /// Band-pass profile for the 𝓘-side input family, [3/16, 17/64].
    pub fn lacunary_input() -> Self {
        Self::new(Rational64::new(3, 16), Rational64::new(17, 64))
    }

    /// Band-pass profile for Φ³_I, [15/64, 11/32]. Together with
    /// `lacunary_input` the difference band covers [−1/32, 5/32], so the sum
    /// over translates of I does not cancel the coarse-J terms.
    pub fn lacunary_output() -> Self {
        Self::new(Rational64::new(15, 64), Rational64::new(11, 32))
    }

    /// Low-pass default, [−5/32, 5/32].
    pub fn non_lacunary() -> Self {
        Self::new(Rational64::new(-5, 32), Rational64::new(5, 32))
    }

    /// Mirror image −ω.
    pub fn negated(&self) -> Self {
        Self::new(-self.omega.hi, -self.omega.lo)
    }

    pub fn default_for(flavor: Flavor) -> Self {
        match flavor {
            Flavor::Lacunary => Self::lacunary(),
            Flavor::NonLacunary => Self::non_lacunary(),
        }
    }

    pub fn at_scale(&self, k: i32) -> RatInterval {
        self.omega.scale(inv_length(k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScaleTemplate {
    omega: RatInterval,
    /// (ξ, weight), L²-normalized, only nonzero weights.
    weights: Vec<(i64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BumpFamily {
    grid: TorusGrid,
    flavor: Flavor,
    shape: MotherShape,
    intervals: Vec<DyadicInterval>,
    scales: BTreeMap<i32, ScaleTemplate>,
}

impl BumpFamily {
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn shape(&self) -> MotherShape {
        self.shape
    }

    pub fn intervals(&self) -> &[DyadicInterval] {
        &self.intervals
    }

    pub fn scales(&self) -> impl Iterator<Item = i32> + '_ {
        self.scales.keys().copied()
    }

    pub fn omega(&self, k: i32) -> Option<RatInterval> {
        self.scales.get(&k).map(|s| s.omega)
    }

    pub fn contains(&self, i: &DyadicInterval) -> bool {
        self.intervals.binary_search(i).is_ok()
    }

    /// Frequency support of Φ̂_I: ξ ↦ w(ξ)·e^{−2πiξc_I}, c_I the center of I.
    /// The phase is reduced exactly: ξ·c_I = ξ(2n+1)/2^{1−k}.
    pub fn coeffs(&self, i: &DyadicInterval) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let t = &self.scales[&i.k];
        let den = 1i64 << (1 - i.k);
        let odd = 2 * i.n + 1;
        t.weights.iter().map(move |&(xi, w)| {
            let num = (xi.rem_euclid(den) * odd.rem_euclid(den)).rem_euclid(den);
            let ang = -2.0 * PI * num as f64 / den as f64;
            (xi, Complex64::from_polar(w, ang))
        })
    }

    pub fn spectrum(&self, i: &DyadicInterval) -> Spectrum {
        let mut s = Spectrum::zeros(self.grid);
        for (xi, c) in self.coeffs(i) {
            s.set(xi, c);
        }
        s
    }

    pub fn bump(&self, i: &DyadicInterval) -> SampledFunction {
        idft(&self.spectrum(i))
    }

    /// ⟨f, Φ_I⟩ = Σ_ξ f̂(ξ)·conj(Φ̂_I(ξ)).
    pub fn analyze(&self, fhat: &Spectrum, i: &DyadicInterval) -> Complex64 {
        self.coeffs(i).map(|(xi, c)| fhat.get(xi) * c.conj()).sum()
    }

    /// ∫ f·Φ_I = Σ_ξ f̂(ξ)·Φ̂_I(−ξ).
    pub fn pair(&self, fhat: &Spectrum, i: &DyadicInterval) -> Complex64 {
        self.coeffs(i).map(|(xi, c)| fhat.get(-xi) * c).sum()
    }

    /// Restriction to a sub-collection of intervals.
    pub fn restrict(&self, keep: impl Fn(&DyadicInterval) -> bool) -> BumpFamily {
        let intervals: Vec<_> = self.intervals.iter().copied().filter(|i| keep(i)).collect();
        let scales = self
            .scales
            .iter()
            .filter(|(k, _)| intervals.iter().any(|i| i.k == **k))
            .map(|(k, t)| (*k, t.clone()))
            .collect();
        BumpFamily {
            grid: self.grid,
            flavor: self.flavor,
            shape: self.shape,
            intervals,
            scales,
        }
    }

    /// Flavor and normalization invariants; support containment holds by
    /// construction and is re-checked on the stored templates.
    pub fn verify(&self) -> Result<()> {
        for (&k, t) in &self.scales {
            let norm: f64 = t.weights.iter().map(|(_, w)| w * w).sum();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(FppError::Degenerate(format!("scale 2^{k}: squared norm {norm}")));
            }
            for &(xi, _) in &t.weights {
                if !t.omega.contains(Rational64::from_integer(xi)) {
                    return Err(FppError::Degenerate(format!("frequency {xi} outside ω at scale 2^{k}")));
                }
            }
            check_flavor(self.flavor, &t.omega, k)?;
        }
        Ok(())
    }
}

fn check_flavor(flavor: Flavor, omega: &RatInterval, k: i32) -> Result<()> {
    let inv = inv_length(k);
    let within = |x: Rational64, f: i64| x >= inv / f && x <= inv * f;
    match flavor {
        Flavor::NonLacunary => {
            if !omega.is_symmetric() {
                return Err(FppError::InvalidConfig(format!(
                    "non-lacunary ω at 2^{k} is not symmetric"
                )));
            }
            if !within(omega.length(), 4) {
                return Err(FppError::InvalidConfig(format!(
                    "non-lacunary |ω| at 2^{k} not within 4 of 1/|I|"
                )));
            }
        }
        Flavor::Lacunary => {
            if omega.enlarge(Rational64::from_integer(5)).contains(Rational64::zero()) {
                return Err(FppError::InvalidConfig(format!("lacunary 5ω at 2^{k} contains 0")));
            }
            if !within(omega.length(), 16) || !within(omega.dist_to_zero(), 16) {
                return Err(FppError::InvalidConfig(format!(
                    "lacunary ω at 2^{k} not comparable to 1/|I|"
                )));
            }
        }
    }
    Ok(())
}

fn template(grid: TorusGrid, shape: &MotherShape, k: i32) -> Result<ScaleTemplate> {
    let omega = shape.at_scale(k);
    let (lo, hi) = (omega.lo_f64(), omega.hi_f64());
    let c = 0.5 * (lo + hi);
    let len = hi - lo;
    let first = omega.lo.ceil().to_integer();
    let last = omega.hi.floor().to_integer();
    let mut weights = Vec::new();
    for xi in first..=last {
        let w = (PI * (xi as f64 - c) / len).cos().powi(2);
        if w <= 1e-14 {
            continue;
        }
        if !grid.contains_freq(xi) {
            return Err(FppError::FrequencyOutOfRange { xi });
        }
        weights.push((xi, w));
    }
    if weights.is_empty() {
        return Err(FppError::Degenerate(format!(
            "no grid frequency inside ω at scale 2^{k}"
        )));
    }
    let norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    for (_, w) in &mut weights {
        *w /= norm;
    }
    Ok(ScaleTemplate { omega, weights })
}

fn build(grid: TorusGrid, intervals: &[DyadicInterval], flavor: Flavor, shape: MotherShape) -> Result<BumpFamily> {
    let mut ivs: Vec<_> = intervals.to_vec();
    ivs.sort();
    ivs.dedup();
    let mut scales = BTreeMap::new();
    for i in &ivs {
        if !i.fits_torus() {
            return Err(FppError::InvalidConfig(format!("interval {i} not inside the torus")));
        }
        i.cells(grid)?;
        if let std::collections::btree_map::Entry::Vacant(e) = scales.entry(i.k) {
            e.insert(template(grid, &shape, i.k)?);
        }
    }
    Ok(BumpFamily {
        grid,
        flavor,
        shape,
        intervals: ivs,
        scales,
    })
}

/// Family with all flavor invariants verified.
pub fn make_family(
    grid: TorusGrid,
    intervals: &[DyadicInterval],
    flavor: Flavor,
    shape: MotherShape,
) -> Result<BumpFamily> {
    let fam = build(grid, intervals, flavor, shape)?;
    fam.verify()?;
    Ok(fam)
}

/// Family without the flavor checks, for probing what breaks when the
/// support hypotheses fail.
pub fn make_family_unchecked(
    grid: TorusGrid,
    intervals: &[DyadicInterval],
    flavor: Flavor,
    shape: MotherShape,
) -> Result<BumpFamily> {
    build(grid, intervals, flavor, shape)
}

/// Every dyadic interval with scale in [k_min, k_max].
pub fn ladder(k_min: i32, k_max: i32) -> Vec<DyadicInterval> {
    (k_min..=k_max).flat_map(DyadicInterval::level).collect()
}

/// Measured constants C_{l,α} = sup_x |I|^{1/2+l}|Φ_I^{(l)}(x)|(1 + dist(x,I)/|I|)^α.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adaptedness {
    /// constants[l][α]
    pub constants: Vec<Vec<f64>>,
    pub max: f64,
}

pub fn adaptedness(fam: &BumpFamily, max_l: usize, max_alpha: usize) -> Adaptedness {
    let grid = fam.grid();
    let n = grid.n();
    let mut constants = vec![vec![0.0f64; max_alpha + 1]; max_l + 1];
    // one representative per scale suffices: translates are exact shifts
    for k in fam.scales() {
        let i = *fam
            .intervals()
            .iter()
            .find(|i| i.k == k)
            .expect("scale has an interval");
        let spec = fam.spectrum(&i);
        let len = i.length();
        for (l, row) in constants.iter_mut().enumerate() {
            let mut d = Spectrum::zeros(grid);
            for (xi, c) in spec.iter() {
                d.set(xi, c * Complex64::new(0.0, 2.0 * PI * xi as f64).powi(l as i32));
            }
            let vals = idft(&d);
            for (x, v) in vals.values().iter().enumerate() {
                let pos = x as f64 / n as f64;
                let dist = torus_dist_to(pos, &i);
                let base = len.powf(0.5 + l as f64) * v.norm();
                for (a, c) in row.iter_mut().enumerate() {
                    *c = c.max(base * (1.0 + dist / len).powi(a as i32));
                }
            }
        }
    }
    let max = constants.iter().flatten().cloned().fold(0.0, f64::max);
    Adaptedness { constants, max }
}

fn torus_dist_to(x: f64, i: &DyadicInterval) -> f64 {
    let (l, r) = (i.left(), i.right());
    if x >= l && x < r {
        return 0.0;
    }
    let d1 = (l - x).rem_euclid(1.0);
    let d2 = (x - r).rem_euclid(1.0);
    d1.min(d2)
}

#[derive(Serialize, Deserialize)]
struct IntervalRecord {
    k: i32,
    n: i64,
    omega: RatInterval,
}

#[derive(Serialize, Deserialize)]
struct FamilyRecord {
    n: usize,
    flavor: Flavor,
    shape: MotherShape,
    intervals: Vec<IntervalRecord>,
}

impl Serialize for BumpFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FamilyRecord {
            n: self.grid.n(),
            flavor: self.flavor,
            shape: self.shape,
            intervals: self
                .intervals
                .iter()
                .map(|i| IntervalRecord {
                    k: i.k,
                    n: i.n,
                    omega: self.scales[&i.k].omega,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BumpFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let rec = FamilyRecord::deserialize(d)?;
        let grid = TorusGrid::new(rec.n).map_err(D::Error::custom)?;
        let ivs: Vec<_> = rec.intervals.iter().map(|r| DyadicInterval::new(r.k, r.n)).collect();
        let fam = make_family(grid, &ivs, rec.flavor, rec.shape).map_err(D::Error::custom)?;
        for r in &rec.intervals {
            if fam.omega(r.k) != Some(r.omega) {
                return Err(D::Error::custom(format!(
                    "recorded ω for scale 2^{} disagrees with the shape",
                    r.k
                )));
            }
        }
        Ok(fam)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::dft;

    fn g256() -> TorusGrid {
        TorusGrid::new(256).unwrap()
    }

    #[test]
    fn default_families_cover_the_ladder() {
        let ivs = ladder(-8, -2);
        for flavor in [Flavor::Lacunary, Flavor::NonLacunary] {
            let fam = make_family(g256(), &ivs, flavor, MotherShape::default_for(flavor)).unwrap();
            assert_eq!(fam.intervals().len(), 4 + 8 + 16 + 32 + 64 + 128 + 256);
            for i in [DyadicInterval::new(-8, 17), DyadicInterval::new(-2, 3)] {
                let b = fam.bump(&i);
                assert!((b.inner(&b).unwrap().re - 1.0).abs() < 1e-10);
                // support check on the actual DFT
                let om = fam.omega(i.k).unwrap();
                for (xi, c) in dft(&b).iter() {
                    if c.norm() > 1e-12 {
                        assert!(om.contains(Rational64::from_integer(xi)), "{xi} outside {om:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn bump_is_centered_on_interval() {
        let g = g256();
        let i = DyadicInterval::new(-5, 9);
        let fam = make_family(g, &[i], Flavor::NonLacunary, MotherShape::non_lacunary()).unwrap();
        let b = fam.bump(&i);
        let (arg, _) = b
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap();
        let x = arg as f64 / 256.0;
        assert!(
            (x - i.center()).abs() <= 1.0 / 256.0,
            "peak at {x}, center {}",
            i.center()
        );
    }

    #[test]
    fn analyze_matches_spatial_inner_product() {
        let g = TorusGrid::new(64).unwrap();
        let ivs = ladder(-5, -2);
        let fam = make_family(g, &ivs, Flavor::Lacunary, MotherShape::lacunary()).unwrap();
        let f = crate::sampling::random_bandlimited(g, 31, &mut crate::sampling::rng(4));
        let fh = dft(&f);
        for i in ivs.iter().step_by(5) {
            let b = fam.bump(i);
            let h = f.inner(&b).unwrap();
            let p = f.integrate_product(&b).unwrap();
            assert!((fam.analyze(&fh, i) - h).norm() < 1e-12);
            assert!((fam.pair(&fh, i) - p).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_configurations() {
        let g = TorusGrid::new(64).unwrap();
        // too fine for the grid
        assert!(make_family(
            g,
            &[DyadicInterval::new(-7, 0)],
            Flavor::Lacunary,
            MotherShape::lacunary()
        )
        .is_err());
        // lacunary band leaving the grid
        assert!(make_family(
            g,
            &ladder(-6, -6),
            Flavor::Lacunary,
            MotherShape::new(Rational64::new(3, 8), Rational64::new(5, 8))
        )
        .is_err());
        // 0 in 5ω
        let broken = MotherShape::new(Rational64::new(1, 32), Rational64::new(5, 16));
        assert!(make_family(g, &ladder(-4, -2), Flavor::Lacunary, broken).is_err());
        assert!(make_family_unchecked(g, &ladder(-4, -2), Flavor::Lacunary, broken).is_ok());
        // asymmetric low-pass
        let skew = MotherShape::new(Rational64::new(-1, 4), Rational64::new(1, 2));
        assert!(make_family(g, &ladder(-4, -2), Flavor::NonLacunary, skew).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let g = TorusGrid::new(32).unwrap();
        let fam = make_family(g, &ladder(-3, -2), Flavor::Lacunary, MotherShape::lacunary()).unwrap();
        let s = serde_json::to_string(&fam).unwrap();
        assert!(s.contains("\"7/8\""));
        let back: BumpFamily = serde_json::from_str(&s).unwrap();
        assert_eq!(back, fam);
    }

    #[test]
    fn adaptedness_is_measured() {
        let g = TorusGrid::new(128).unwrap();
        let fam = make_family(g, &ladder(-7, -2), Flavor::NonLacunary, MotherShape::non_lacunary()).unwrap();
        let a = adaptedness(&fam, 2, 5);
        assert_eq!(a.constants.len(), 3);
        assert!(a.max.is_finite() && a.max > 0.0);
        // constants grow with α
        assert!(a.constants[0][5] >= a.constants[0][0]);
    }
}
