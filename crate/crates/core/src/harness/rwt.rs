//! Restricted-weak-type experiments: random sets E₁..E₄, the exceptional set
//! and major subset of the designated index, unimodular f_i ∈ X(E_i), and the
//! ratio |Λ(f₁,f₂,f₃,f₄)| / ∏|E_i|^{α_i}.
//!
//! Sets, phases and Ω live on a coarse base grid (cells of length 2^base_level)
//! and are realized on the fine grid after a dyadic dilation by 2^{-s}: base
//! cell b covers fine cells [b·r, (b+1)·r), r = N·2^{base_level − s}, and the
//! model ladder is shifted by −s. With s = 0 this is just a refinement.

use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Rational64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exceptional::{exceptional_set, major_subset};
use super::polytope::{near_vertex, polytope_membership, ExponentTuple, Membership, Polytope, Vertex};
use super::sets::MeasurableSet;
use crate::dyadic::{apply_model, ladder, ModelConfig, ModelKind, ModelOp};
use crate::error::{FppError, Result};
use crate::grid::{SampledFunction, TorusGrid};
use crate::sampling::substream;

const MAX_RESAMPLES: usize = 64;
/// Relative tolerance of the |Λ| check under f₄ ↦ e^{iφ}f₄.
pub const PHASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormKind {
    /// Λ = ∫ f₁f₂f₃f₄ (constant symbol).
    Trivial,
    Model(ModelOp),
}

impl FromStr for FormKind {
    type Err = FppError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("trivial") {
            Ok(FormKind::Trivial)
        } else {
            Ok(FormKind::Model(s.parse()?))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwtConfig {
    pub form: FormKind,
    pub vertex: Vertex,
    /// Exponent point = vertex + offset·(centroid − vertex).
    pub offset: Rational64,
    pub n: usize,
    pub k_min: i32,
    pub k_max: i32,
    /// The 𝓙-ladder is the 𝓘-ladder shifted by this many levels.
    #[serde(default)]
    pub j_shift: i32,
    pub j_nonlac: usize,
    pub k0: Option<u32>,
    pub trials: usize,
    pub seed: u64,
    pub c_start: f64,
    /// E_i are unions of base dyadic intervals of length 2^set_level.
    pub set_level: i32,
    /// Phases are constant on base cells of length 2^base_level.
    pub base_level: i32,
    pub density: f64,
    /// Dilation exponent s: everything is compressed by 2^{-s}.
    pub dilation: u32,
}

impl RwtConfig {
    /// T₁ near A₄, N = 256, ladder 2^-6..2^-2, 50 trials.
    pub fn near_a4(form: FormKind) -> Self {
        let k0 = match form {
            FormKind::Model(ModelOp::T1k0 | ModelOp::T2k0) => Some(3),
            _ => None,
        };
        Self {
            form,
            vertex: Vertex::A4,
            offset: Rational64::new(1, 20),
            n: 256,
            k_min: -6,
            k_max: -2,
            j_shift: 0,
            j_nonlac: 1,
            k0,
            trials: 50,
            seed: 7,
            c_start: 1.0,
            set_level: -4,
            base_level: -6,
            density: 0.5,
            dilation: 0,
        }
    }

    /// Base cells 2^-5 and ladder 2^-5..2^-1 before dilation, meant for s ≥ 1:
    /// every realization is then compressed into [0, 1/2) and none wraps
    /// around the whole torus.
    pub fn dilation_probe(form: FormKind) -> Self {
        Self {
            k_min: -5,
            k_max: -1,
            base_level: -5,
            dilation: 1,
            ..Self::near_a4(form)
        }
    }

    pub fn exponents(&self) -> Result<ExponentTuple> {
        near_vertex(self.vertex, self.offset)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = TorusGrid::new(self.n)?;
        let bad = |m: String| Err(FppError::InvalidConfig(m));
        if self.trials == 0 {
            return bad("at least one trial".into());
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad(format!("density {} outside (0,1]", self.density));
        }
        if !(self.c_start > 0.0) {
            return bad(format!("C must be positive, got {}", self.c_start));
        }
        if self.set_level > 0 || self.set_level < self.base_level {
            return bad(format!(
                "set level {} must lie in [base level {}, 0]",
                self.set_level, self.base_level
            ));
        }
        if self.base_level - (self.dilation as i32) < -(grid.log2_n() as i32) {
            return bad(format!(
                "dilation 2^-{} of base cells 2^{} is finer than the grid N={}",
                self.dilation, self.base_level, self.n
            ));
        }
        if let FormKind::Model(op) = self.form {
            let needs = matches!(op, ModelOp::T1k0 | ModelOp::T2k0);
            if needs != self.k0.is_some() {
                return bad(format!(
                    "{op:?} {} k0",
                    if needs { "requires" } else { "does not take" }
                ));
            }
        }
        let alpha = self.exponents()?;
        if polytope_membership(&alpha, Polytope::D) != Membership::Interior {
            return Err(FppError::Precondition(format!(
                "exponent point {alpha} is not interior to D"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// |E₁|..|E₄| on the fine grid.
    pub measures: [f64; 4],
    /// |E′_d| for the designated index d.
    pub major_measure: f64,
    pub lambda: Complex64,
    pub ratio: f64,
    pub calibrated_c: f64,
    /// |Ω| on the fine grid.
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: RwtConfig,
    pub exponents: [f64; 4],
    /// 1-based index of the set carrying the major subset.
    pub designated: usize,
    pub trials: Vec<TrialRecord>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    #[serde(rename = "calibrated_C")]
    pub calibrated_c: f64,
}

/// A validated configuration with its grids and model operator built once.
pub struct Experiment {
    cfg: RwtConfig,
    alpha: [f64; 4],
    designated: usize,
    base: TorusGrid,
    fine: TorusGrid,
    refine: usize,
    model: Option<ModelConfig>,
}

impl Experiment {
    pub fn new(cfg: &RwtConfig) -> Result<Self> {
        cfg.validate()?;
        let fine = TorusGrid::new(cfg.n)?;
        let base = TorusGrid::new(1usize << (-cfg.base_level) as u32)?;
        let refine = cfg.n >> ((-cfg.base_level) as u32 + cfg.dilation);
        let s = cfg.dilation as i32;
        let model = match cfg.form {
            FormKind::Trivial => None,
            FormKind::Model(op) => {
                let kind = match op {
                    ModelOp::T1 | ModelOp::T1k0 => ModelKind::T1,
                    ModelOp::T2 | ModelOp::T2k0 => ModelKind::T2,
                };
                let i_ivs = ladder(cfg.k_min - s, cfg.k_max - s);
                let j_ivs = ladder(cfg.k_min + cfg.j_shift - s, cfg.k_max + cfg.j_shift - s);
                Some(ModelConfig::from_intervals(
                    fine,
                    kind,
                    &i_ivs,
                    &j_ivs,
                    cfg.j_nonlac,
                    cfg.k0,
                )?)
            }
        };
        Ok(Self {
            cfg: cfg.clone(),
            alpha: cfg.exponents()?.to_f64(),
            designated: cfg.vertex.designated(),
            base,
            fine,
            refine,
            model,
        })
    }

    pub fn fine_grid(&self) -> TorusGrid {
        self.fine
    }

    /// Λ(f₁,f₂,f₃,f₄) for the configured form.
    pub fn form(&self, f: [&SampledFunction; 4]) -> Result<Complex64> {
        match &self.model {
            None => {
                let t = f[0].mul(f[1])?.mul(f[2])?;
                t.integrate_product(f[3])
            }
            Some(m) => apply_model(m, f[0], f[1], f[2])?.integrate_product(f[3]),
        }
    }

    /// |Λ| / ∏ |E_i|^{α_i}.
    pub fn ratio(&self, lambda: Complex64, measures: [f64; 4]) -> f64 {
        let denom: f64 = measures.iter().zip(&self.alpha).map(|(m, a)| m.powf(*a)).product();
        lambda.norm() / denom
    }

    fn realize(&self, base: &SampledFunction) -> SampledFunction {
        let vals = base.values();
        let span = vals.len() * self.refine;
        SampledFunction::from_fn_index(self.fine, |k| {
            if k < span {
                vals[k / self.refine]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    fn sample_set(&self, rng: &mut impl Rng) -> Result<MeasurableSet> {
        for _ in 0..MAX_RESAMPLES {
            let e = MeasurableSet::random_dyadic_union(self.base, self.cfg.set_level, self.cfg.density, rng)?;
            if !e.is_empty() {
                return Ok(e);
            }
        }
        Err(FppError::Degenerate(format!(
            "{MAX_RESAMPLES} empty samples at density {}",
            self.cfg.density
        )))
    }

    pub fn trial(&self, t: usize) -> Result<TrialRecord> {
        let mut rng = substream(self.cfg.seed, t as u64);
        let sets: Vec<MeasurableSet> = (0..4).map(|_| self.sample_set(&mut rng)).collect::<Result<_>>()?;
        let d = self.designated - 1;
        let ex = exceptional_set(&sets, d, self.cfg.c_start)?;
        let major = major_subset(&sets[d], &ex.omega)?;
        let f: Vec<SampledFunction> = (0..4)
            .map(|i| {
                let support = if i == d { &major } else { &sets[i] };
                let fi = support.sample_x(&mut rng);
                debug_assert!(support.admits(&fi));
                self.realize(&fi)
            })
            .collect();
        let shrink = 0.5f64.powi(self.cfg.dilation as i32);
        let measures = [0, 1, 2, 3].map(|i| sets[i].measure() * shrink);
        let lambda = match &self.model {
            None => self.form([&f[0], &f[1], &f[2], &f[3]])?,
            Some(m) => {
                let t = apply_model(m, &f[0], &f[1], &f[2])?;
                let lambda = t.integrate_product(&f[3])?;
                let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
                let rotated = t.integrate_product(&f[3].scale(phase))?;
                let scale = lambda.norm().max(f64::MIN_POSITIVE);
                if (rotated.norm() - lambda.norm()).abs() > PHASE_TOL * scale {
                    return Err(FppError::Postcondition(format!(
                        "|Λ| changed under a unimodular factor: {} vs {}",
                        lambda.norm(),
                        rotated.norm()
                    )));
                }
                lambda
            }
        };
        Ok(TrialRecord {
            measures,
            major_measure: major.measure() * shrink,
            lambda,
            ratio: self.ratio(lambda, measures),
            calibrated_c: ex.calibrated_c,
            omega: ex.omega.measure() * shrink,
        })
    }

    pub fn run(&self) -> Result<ExperimentReport> {
        let trials: Vec<TrialRecord> = with_thread_cap(|| {
            (0..self.cfg.trials)
                .into_par_iter()
                .map(|t| self.trial(t))
                .collect::<Result<_>>()
        })?;
        let mut ratios: Vec<f64> = trials.iter().map(|t| t.ratio).collect();
        ratios.sort_by(f64::total_cmp);
        Ok(ExperimentReport {
            config: self.cfg.clone(),
            exponents: self.alpha,
            designated: self.designated,
            max_ratio: *ratios.last().expect("at least one trial"),
            median_ratio: ratios[ratios.len() / 2],
            calibrated_c: trials.iter().map(|t| t.calibrated_c).fold(0.0, f64::max),
            trials,
        })
    }
}

pub fn rwt_experiment(cfg: &RwtConfig) -> Result<ExperimentReport> {
    Experiment::new(cfg)?.run()
}

/// Runs `f` on a pool of at most FPP_THREADS threads when the variable is set.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var("FPP_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    match cap {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub label: String,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub calibrated_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// max/min of the per-point maximal ratios.
    pub spread: f64,
}

impl SweepReport {
    fn from_reports(reports: Vec<(String, ExperimentReport)>) -> Self {
        let points: Vec<SweepPoint> = reports
            .into_iter()
            .map(|(label, r)| SweepPoint {
                label,
                max_ratio: r.max_ratio,
                median_ratio: r.median_ratio,
                calibrated_c: r.calibrated_c,
            })
            .collect();
        let hi = points.iter().map(|p| p.max_ratio).fold(f64::NEG_INFINITY, f64::max);
        let lo = points.iter().map(|p| p.max_ratio).fold(f64::INFINITY, f64::min);
        SweepReport {
            points,
            spread: hi / lo,
        }
    }
}

/// Same seed and base data at each dilation 2^{-s}, s ∈ `scales`.
pub fn dilation_sweep(cfg: &RwtConfig, scales: &[u32]) -> Result<SweepReport> {
    if scales.is_empty() {
        return Err(FppError::InvalidConfig("no scales given".into()));
    }
    let reports = scales
        .iter()
        .map(|&s| {
            let c = RwtConfig {
                dilation: s,
                ..cfg.clone()
            };
            Ok((format!("s={s}"), rwt_experiment(&c)?))
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport::from_reports(reports))
}

/// Same seed and data for each k₀; the form must be a k₀ variant.
pub fn k0_sweep(cfg: &RwtConfig, k0s: &[u32]) -> Result<SweepReport> {
    if k0s.is_empty() {
        return Err(FppError::InvalidConfig("no k0 values given".into()));
    }
    let reports = k0s
        .iter()
        .map(|&k| {
            let c = RwtConfig {
                k0: Some(k),
                ..cfg.clone()
            };
            Ok((format!("k0={k}"), rwt_experiment(&c)?))
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport::from_reports(reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilation_probe_is_valid_at_three_scales() {
        let c = RwtConfig {
            trials: 2,
            ..RwtConfig::dilation_probe(FormKind::Model(ModelOp::T1))
        };
        let sweep = dilation_sweep(&c, &[1, 2, 3]).unwrap();
        assert_eq!(sweep.points.len(), 3);
        assert!(dilation_sweep(&c, &[4]).is_err());
        assert!(
            dilation_sweep(&c, &[0]).is_err(),
            "scale 2^-1 has no grid frequency at s = 0"
        );
    }

    fn small(form: FormKind) -> RwtConfig {
        RwtConfig {
            n: 64,
            k_min: -4,
            k_max: -2,
            trials: 6,
            set_level: -3,
            base_level: -4,
            ..RwtConfig::near_a4(form)
        }
    }

    #[test]
    fn validation() {
        let mut c = small(FormKind::Model(ModelOp::T1k0));
        assert!(c.validate().is_ok());
        c.k0 = None;
        assert!(c.validate().is_err());
        let mut c = small(FormKind::Trivial);
        c.dilation = 3;
        assert!(
            c.validate().is_err(),
            "base cells 2^-4 dilated by 2^-3 are finer than N=64"
        );
        let mut c = small(FormKind::Trivial);
        c.offset = Rational64::new(0, 1);
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_input_gives_zero_ratio() {
        let e = Experiment::new(&small(FormKind::Model(ModelOp::T1))).unwrap();
        let g = e.fine_grid();
        let one = SampledFunction::constant(g, Complex64::new(1.0, 0.0));
        let zero = SampledFunction::zeros(g);
        let l = e.form([&one, &zero, &one, &one]).unwrap();
        assert_eq!(e.ratio(l, [0.5; 4]), 0.0);
    }

    #[test]
    fn full_sets_trivial_form_is_lambda() {
        let e = Experiment::new(&small(FormKind::Trivial)).unwrap();
        let g = e.fine_grid();
        let f = SampledFunction::from_fn_index(g, |k| Complex64::from_polar(1.0, 0.1 * k as f64));
        let one = SampledFunction::constant(g, Complex64::new(1.0, 0.0));
        let l = e.form([&f, &one, &one, &one]).unwrap();
        assert_eq!(e.ratio(l, [1.0; 4]), l.norm());
    }

    #[test]
    fn trials_respect_the_exceptional_set() {
        for form in [
            FormKind::Trivial,
            FormKind::Model(ModelOp::T1),
            FormKind::Model(ModelOp::T2k0),
        ] {
            let r = rwt_experiment(&small(form)).unwrap();
            assert_eq!(r.designated, 4);
            for t in &r.trials {
                assert!(t.omega < t.measures[3] / 2.0);
                assert!(t.major_measure > t.measures[3] / 2.0);
                assert!(t.ratio.is_finite());
            }
            assert!(r.max_ratio >= r.median_ratio);
        }
    }

    #[test]
    fn reruns_are_bitwise_identical() {
        let c = small(FormKind::Model(ModelOp::T1));
        let a = serde_json::to_string(&rwt_experiment(&c).unwrap()).unwrap();
        let b = serde_json::to_string(&rwt_experiment(&c).unwrap()).unwrap();
        assert_eq!(a, b);
        let back: ExperimentReport = serde_json::from_str(&a).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), a);
        assert!(a.contains("\"calibrated_C\""));
    }

    #[test]
    fn trivial_ratio_is_dilation_invariant() {
        let sweep = dilation_sweep(&small(FormKind::Trivial), &[0, 1, 2]).unwrap();
        let first = sweep.points[0].max_ratio;
        for p in &sweep.points {
            assert!((p.max_ratio - first).abs() <= 1e-9 * first, "{sweep:?}");
        }
    }

    #[test]
    fn constant_phases_on_full_sets() {
        // E_i = torus, f_i = e^{iφ_i}: Λ = 2^{-s}e^{iΣφ}, measures 2^{-s}, ratio 1.
        for s in 0..3u32 {
            let c = RwtConfig {
                density: 1.0,
                set_level: 0,
                dilation: s,
                ..small(FormKind::Trivial)
            };
            let e = Experiment::new(&c).unwrap();
            let g = e.fine_grid();
            let phases = [0.3, -1.1, 2.0, 0.7];
            let span = 64 >> s;
            let f: Vec<SampledFunction> = phases
                .iter()
                .map(|&p| {
                    SampledFunction::from_fn_index(g, |k| {
                        if k < span {
                            Complex64::from_polar(1.0, p)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                })
                .collect();
            let l = e.form([&f[0], &f[1], &f[2], &f[3]]).unwrap();
            let want = Complex64::from_polar(0.5f64.powi(s as i32), phases.iter().sum());
            assert!((l - want).norm() < 1e-15);
            let m = 0.5f64.powi(s as i32);
            assert!((e.ratio(l, [m; 4]) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn adjoint_vertices_use_their_own_index() {
        let c = RwtConfig {
            vertex: Vertex::A31,
            ..small(FormKind::Model(ModelOp::T1))
        };
        let r = rwt_experiment(&c).unwrap();
        assert_eq!(r.designated, 3);
        for t in &r.trials {
            assert!(t.omega < t.measures[2] / 2.0);
        }
    }
}
