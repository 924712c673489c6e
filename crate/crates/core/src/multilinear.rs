//! Trilinear multiplier operators T_m, the four-linear form Λ and its adjoint
//! routes.
//!
//! Frequency sums are exact integer sums: the inputs' combined bandwidth must
//! stay below N/2 so that no output frequency wraps around the torus.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::grid::{bilinear, dft, fft_in_place, idft, SampledFunction, Spectrum, TorusGrid, BANDWIDTH_TOL};
use crate::symbols::SymbolSpec;

/// Flop weights used by the instrumented counters.
pub const CMUL_FLOPS: u64 = 6;
pub const CADD_FLOPS: u64 = 2;

/// 5·N·log₂N, the usual radix-2 estimate.
pub fn fft_flops(n: usize) -> u64 {
    5 * n as u64 * n.trailing_zeros() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Naive,
    Separable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrilinearResult {
    pub output: SampledFunction,
    pub method: Method,
    pub flops: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormRoute {
    Lambda,
    Adjoint1,
    Adjoint2,
    Adjoint3,
    Adjoint4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormValue {
    pub value: Complex64,
    pub which: FormRoute,
}

struct Banded {
    spec: Spectrum,
    band: i64,
}

fn banded(fs: &[&SampledFunction]) -> Result<(TorusGrid, Vec<Banded>)> {
    let grid = fs[0].grid();
    for f in fs {
        grid.check_same(&f.grid())?;
    }
    let out: Vec<Banded> = fs
        .iter()
        .map(|f| {
            let spec = dft(f);
            let band = spec.bandwidth(BANDWIDTH_TOL);
            Banded { spec, band }
        })
        .collect();
    let total: i64 = out.iter().map(|b| b.band).sum();
    let limit = grid.n() as i64 / 2;
    if total >= limit {
        return Err(FppError::Bandwidth { total, limit });
    }
    Ok((grid, out))
}

fn coeffs_in_band(b: &Banded) -> Vec<Complex64> {
    (-b.band..=b.band).map(|xi| b.spec.get(xi)).collect()
}

/// Generic exact sum Ĝ(η) = Σ_{ξ₁+ξ₂+ξ₃=η} s(ξ₁,ξ₂,ξ₃)·ĝ₁ĝ₂ĝ₃, returned as a
/// spectrum, with a flop count.
fn triple_sum(
    grid: TorusGrid,
    g: [&Banded; 3],
    sym: impl Fn(i64, i64, i64) -> Result<Complex64>,
    sym_flops: u64,
) -> Result<(Spectrum, u64)> {
    let c: Vec<Vec<Complex64>> = g.iter().map(|b| coeffs_in_band(b)).collect();
    let (b1, b2, b3) = (g[0].band, g[1].band, g[2].band);
    let mut out = Spectrum::zeros(grid);
    let mut flops = 0u64;
    for x1 in -b1..=b1 {
        let c1 = c[0][(x1 + b1) as usize];
        for x2 in -b2..=b2 {
            let c12 = c1 * c[1][(x2 + b2) as usize];
            flops += CMUL_FLOPS;
            for x3 in -b3..=b3 {
                let m = sym(x1, x2, x3)?;
                let eta = x1 + x2 + x3;
                let slot = grid.freq_slot(eta);
                out.coeffs_mut()[slot] += m * c12 * c[2][(x3 + b3) as usize];
            }
            flops += (2 * b3 + 1) as u64 * (2 * CMUL_FLOPS + CADD_FLOPS + sym_flops);
        }
    }
    Ok((out, flops))
}

/// Symbol access for the naive path: flag factors are tabulated once over the
/// input bands, anything else is evaluated per term.
enum SymbolCache<'a> {
    Flag {
        a: Vec<Complex64>,
        b: Vec<Complex64>,
        b1: i64,
        b2: i64,
        b3: i64,
    },
    Direct(&'a SymbolSpec),
}

impl<'a> SymbolCache<'a> {
    fn new(m: &'a SymbolSpec, b1: i64, b2: i64, b3: i64) -> Result<Self> {
        if let Some((fa, fb)) = m.flag_factors() {
            let (w1, w2, w3) = (2 * b1 + 1, 2 * b2 + 1, 2 * b3 + 1);
            let mut a = Vec::with_capacity((w1 * w2) as usize);
            for x1 in -b1..=b1 {
                for x2 in -b2..=b2 {
                    a.push(fa.eval(&[x1, x2])?);
                }
            }
            let mut b = Vec::with_capacity((w2 * w3) as usize);
            for x2 in -b2..=b2 {
                for x3 in -b3..=b3 {
                    b.push(fb.eval(&[x2, x3])?);
                }
            }
            Ok(SymbolCache::Flag { a, b, b1, b2, b3 })
        } else {
            if m.arity() != 3 {
                return Err(FppError::ArityMismatch {
                    expected: 3,
                    got: m.arity(),
                });
            }
            Ok(SymbolCache::Direct(m))
        }
    }

    fn eval(&self, x1: i64, x2: i64, x3: i64) -> Result<Complex64> {
        match self {
            SymbolCache::Flag { a, b, b1, b2, b3 } => {
                let ia = ((x1 + b1) * (2 * b2 + 1) + (x2 + b2)) as usize;
                let ib = ((x2 + b2) * (2 * b3 + 1) + (x3 + b3)) as usize;
                Ok(a[ia] * b[ib])
            }
            SymbolCache::Direct(m) => m.eval(&[x1, x2, x3]),
        }
    }

    fn flops(&self) -> u64 {
        match self {
            SymbolCache::Flag { .. } => CMUL_FLOPS,
            SymbolCache::Direct(_) => 0,
        }
    }
}

/// Reference O(B³) evaluation of T_m(f₁,f₂,f₃).
pub fn apply_trilinear_naive(
    m: &SymbolSpec,
    f1: &SampledFunction,
    f2: &SampledFunction,
    f3: &SampledFunction,
) -> Result<TrilinearResult> {
    let (grid, b) = banded(&[f1, f2, f3])?;
    let cache = SymbolCache::new(m, b[0].band, b[1].band, b[2].band)?;
    let (spec, flops) = triple_sum(
        grid,
        [&b[0], &b[1], &b[2]],
        |x1, x2, x3| cache.eval(x1, x2, x3),
        cache.flops(),
    )?;
    Ok(TrilinearResult {
        output: idft(&spec),
        method: Method::Naive,
        flops: flops + fft_flops(grid.n()),
    })
}

/// T_ab via the flag factorization: for each ξ₂ the sums over ξ₁ and ξ₃ are
/// two inverse transforms whose pointwise product is that slice's
/// contribution. Slices are reduced in ξ₂ order, so the result does not
/// depend on the thread count.
pub fn apply_flag_separable(
    a: &SymbolSpec,
    b: &SymbolSpec,
    f1: &SampledFunction,
    f2: &SampledFunction,
    f3: &SampledFunction,
) -> Result<TrilinearResult> {
    if a.arity() != 2 || b.arity() != 2 {
        return Err(FppError::ArityMismatch {
            expected: 2,
            got: a.arity().max(b.arity()),
        });
    }
    let (grid, bd) = banded(&[f1, f2, f3])?;
    let n = grid.n();
    let (b1, b2, b3) = (bd[0].band, bd[1].band, bd[2].band);
    let c1 = coeffs_in_band(&bd[0]);
    let c2 = coeffs_in_band(&bd[1]);
    let c3 = coeffs_in_band(&bd[2]);
    let slices: Vec<Result<Vec<Complex64>>> = (-b2..=b2)
        .into_par_iter()
        .map(|x2| {
            let s2 = c2[(x2 + b2) as usize];
            let mut u = vec![Complex64::new(0.0, 0.0); n];
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for x1 in -b1..=b1 {
                let w = a.eval(&[x1, x2])? * c1[(x1 + b1) as usize] * s2;
                u[(x1 + x2).rem_euclid(n as i64) as usize] = w;
            }
            for x3 in -b3..=b3 {
                v[x3.rem_euclid(n as i64) as usize] = b.eval(&[x2, x3])? * c3[(x3 + b3) as usize];
            }
            fft_in_place(&mut u, false);
            fft_in_place(&mut v, false);
            for (x, y) in u.iter_mut().zip(&v) {
                *x *= y;
            }
            Ok(u)
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for s in slices {
        for (o, v) in out.iter_mut().zip(s?) {
            *o += v;
        }
    }
    let per_slice = (2 * b1 + 1) as u64 * 2 * CMUL_FLOPS
        + (2 * b3 + 1) as u64 * CMUL_FLOPS
        + 2 * fft_flops(n)
        + n as u64 * (CMUL_FLOPS + CADD_FLOPS);
    let flops = (2 * b2 + 1) as u64 * per_slice + 3 * fft_flops(n);
    Ok(TrilinearResult {
        output: SampledFunction::new(grid, out)?,
        method: Method::Separable,
        flops,
    })
}

pub fn apply_trilinear(
    m: &SymbolSpec,
    f1: &SampledFunction,
    f2: &SampledFunction,
    f3: &SampledFunction,
    method: Method,
) -> Result<TrilinearResult> {
    match method {
        Method::Naive => apply_trilinear_naive(m, f1, f2, f3),
        Method::Separable => match m.flag_factors() {
            Some((a, b)) => apply_flag_separable(a, b, f1, f2, f3),
            None if matches!(m, SymbolSpec::Trivial { .. }) => {
                let one = SymbolSpec::trivial(2);
                apply_flag_separable(&one, &one, f1, f2, f3)
            }
            None => Err(FppError::InvalidConfig(
                "separable path needs a flag or trivial symbol".into(),
            )),
        },
    }
}

/// Λ = (1/N) Σ_k T_m(f₁,f₂,f₃)(x_k)·f₄(x_k), bilinear in f₄.
pub fn four_form(
    m: &SymbolSpec,
    f1: &SampledFunction,
    f2: &SampledFunction,
    f3: &SampledFunction,
    f4: &SampledFunction,
) -> Result<FormValue> {
    banded(&[f1, f2, f3, f4])?;
    let t = apply_trilinear_naive(m, f1, f2, f3)?;
    Ok(FormValue {
        value: bilinear(t.output.values(), f4.values()),
        which: FormRoute::Lambda,
    })
}

/// Λ through the j-th adjoint: T^{*j} applied to the other three functions
/// and integrated against f_j. T^{*j} is itself a trilinear multiplier whose
/// symbol places −(sum of its three frequencies) in slot j.
pub fn adjoint_form(
    m: &SymbolSpec,
    j: usize,
    f1: &SampledFunction,
    f2: &SampledFunction,
    f3: &SampledFunction,
    f4: &SampledFunction,
) -> Result<FormValue> {
    if m.arity() != 3 {
        return Err(FppError::ArityMismatch {
            expected: 3,
            got: m.arity(),
        });
    }
    let (grid, b) = banded(&[f1, f2, f3, f4])?;
    let ev = |x: [i64; 3]| m.eval(&x);
    let (spec, dual, which) = match j {
        1 => {
            let (s, _) = triple_sum(
                grid,
                [&b[1], &b[2], &b[3]],
                |x2, x3, x4| ev([-(x2 + x3 + x4), x2, x3]),
                0,
            )?;
            (s, f1, FormRoute::Adjoint1)
        }
        2 => {
            let (s, _) = triple_sum(
                grid,
                [&b[0], &b[2], &b[3]],
                |x1, x3, x4| ev([x1, -(x1 + x3 + x4), x3]),
                0,
            )?;
            (s, f2, FormRoute::Adjoint2)
        }
        3 => {
            let (s, _) = triple_sum(
                grid,
                [&b[0], &b[1], &b[3]],
                |x1, x2, x4| ev([x1, x2, -(x1 + x2 + x4)]),
                0,
            )?;
            (s, f3, FormRoute::Adjoint3)
        }
        4 => {
            let v = four_form(m, f1, f2, f3, f4)?;
            return Ok(FormValue {
                value: v.value,
                which: FormRoute::Adjoint4,
            });
        }
        _ => return Err(FppError::InvalidConfig(format!("adjoint index {j} not in 1..=4"))),
    };
    let g = idft(&spec);
    Ok(FormValue {
        value: bilinear(g.values(), dual.values()),
        which,
    })
}

/// Σ_{ξ₁+ξ₂+ξ₃+ξ₄=0} m(ξ₁,ξ₂,ξ₃)·f̂₁f̂₂f̂₃f̂₄, summed directly in frequency.
pub fn four_form_frequency_side(
    m: &SymbolSpec,
    f1: &SampledFunction,
    f2: &SampledFunction,
    f3: &SampledFunction,
    f4: &SampledFunction,
) -> Result<Complex64> {
    let (_, b) = banded(&[f1, f2, f3, f4])?;
    let mut acc = Complex64::new(0.0, 0.0);
    for x1 in -b[0].band..=b[0].band {
        for x2 in -b[1].band..=b[1].band {
            for x3 in -b[2].band..=b[2].band {
                let x4 = -(x1 + x2 + x3);
                if x4.abs() > b[3].band {
                    continue;
                }
                acc += m.eval(&[x1, x2, x3])?
                    * b[0].spec.get(x1)
                    * b[1].spec.get(x2)
                    * b[2].spec.get(x3)
                    * b[3].spec.get(x4);
            }
        }
    }
    Ok(acc)
}

/// Exploratory stub for the L^∞×L^∞×L^s failure: evaluates ‖T(f₁,1,f₃)‖_s /
/// (‖f₁‖_∞‖f₃‖_s) for a caller-supplied family. No growth family is known to
/// be convincing on the torus; this only reports the ratios.
pub fn linfty_probe(m: &SymbolSpec, family: &[(SampledFunction, SampledFunction)], s: f64) -> Result<Vec<f64>> {
    family
        .iter()
        .map(|(f1, f3)| {
            let one = SampledFunction::constant(f1.grid(), Complex64::new(1.0, 0.0));
            let t = apply_trilinear_naive(m, f1, &one, f3)?;
            let num = crate::grid::lp_norm(&t.output, s)?;
            let den = f1.sup_norm() * crate::grid::lp_norm(f3, s)?;
            Ok(if den == 0.0 { 0.0 } else { num / den })
        })
        .collect()
}
