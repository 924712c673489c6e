use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::partition::C0_EXPECTED;
use super::windows::WindowSystem;
use crate::error::{FppError, Result};
use crate::grid::fft_in_place;
use crate::symbols::SymbolSpec;

/// What is expanded on the period cell of window pair (j₁, j₂) at scale 2^λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientMode {
    /// a/ã restricted to the cell. The periodic extension jumps at the cell
    /// edges, so coefficients decay like 1/|n|.
    #[default]
    Restriction,
    /// (a/ã₂)·Ψ̂_{j₁}Ψ̂_{j₂}, ã₂ the squared-window partition. Smooth and
    /// periodic; summing C·Ψ̂Ψ̂ over all cells still reproduces a.
    Windowed,
}

/// Quadrature points per axis on a period cell.
pub const DEFAULT_SAMPLES: usize = 128;

/// Coefficients C(n₁,n₂), |n_i| ≤ n_range, of
/// h(ξ) = Σ C(n) e^{2πi(n₁ξ₁+n₂ξ₂)/L} on the cell, L = enlargement·2^λ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientSlice {
    pub j1: i64,
    pub j2: i64,
    pub lambda: f64,
    pub mode: CoefficientMode,
    pub n_range: usize,
    pub period: f64,
    /// Lower-left corner of the cell.
    pub origin: (f64, f64),
    /// Smallest partition value divided by on the cell.
    pub min_denominator: f64,
    values: Vec<Complex64>,
}

impl CoefficientSlice {
    fn side(&self) -> usize {
        2 * self.n_range + 1
    }

    pub fn get(&self, n1: i64, n2: i64) -> Complex64 {
        let r = self.n_range as i64;
        if n1.abs() > r || n2.abs() > r {
            return Complex64::new(0.0, 0.0);
        }
        self.values[(n1 + r) as usize * self.side() + (n2 + r) as usize]
    }

    /// Row-major over n₁ then n₂, each from −n_range to n_range.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn truncated(&self, r: usize) -> CoefficientSlice {
        let r = r.min(self.n_range);
        let side = 2 * r + 1;
        let mut values = Vec::with_capacity(side * side);
        for n1 in -(r as i64)..=r as i64 {
            for n2 in -(r as i64)..=r as i64 {
                values.push(self.get(n1, n2));
            }
        }
        CoefficientSlice {
            n_range: r,
            values,
            ..self.clone()
        }
    }

    /// Partial sum of the series at a real point.
    pub fn eval(&self, x1: f64, x2: f64) -> Complex64 {
        let r = self.n_range as i64;
        let e1 = modes(x1 / self.period, r);
        let e2 = modes(x2 / self.period, r);
        let side = self.side();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in e1.iter().enumerate() {
            let row = &self.values[i * side..(i + 1) * side];
            let inner: Complex64 = row.iter().zip(&e2).map(|(c, b)| c * b).sum();
            acc += a * inner;
        }
        acc
    }

    pub fn decay(&self) -> DecayFit {
        decay_fit(self)
    }
}

/// e^{2πi n t} for n = −r..=r.
pub(crate) fn modes(t: f64, r: i64) -> Vec<Complex64> {
    (-r..=r)
        .map(|n| Complex64::from_polar(1.0, 2.0 * PI * n as f64 * t))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    /// s in max_{|n|_∞ = m} |C(n)| ≈ c·(1+m)^{−s}, least squares in log-log.
    /// Infinite when fewer than three shells rise above roundoff.
    pub exponent: f64,
    /// K = max |C(n)|·(1+|n₁|)^5·(1+|n₂|)^5.
    pub constant: f64,
    pub shells: Vec<f64>,
    pub fitted_points: usize,
}

const DECAY_FLOOR: f64 = 1e-13;

fn decay_fit(s: &CoefficientSlice) -> DecayFit {
    let r = s.n_range as i64;
    let mut shells = vec![0.0_f64; s.n_range + 1];
    let mut constant = 0.0_f64;
    for n1 in -r..=r {
        for n2 in -r..=r {
            let v = s.get(n1, n2).norm();
            let m = n1.abs().max(n2.abs()) as usize;
            shells[m] = shells[m].max(v);
            constant = constant.max(v * ((1 + n1.abs()) as f64).powi(5) * ((1 + n2.abs()) as f64).powi(5));
        }
    }
    let floor = DECAY_FLOOR * s.max_abs().max(f64::MIN_POSITIVE);
    let pts: Vec<(f64, f64)> = shells
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &v)| v > floor)
        .map(|(m, &v)| (((1 + m) as f64).ln(), v.ln()))
        .collect();
    let exponent = if pts.len() < 3 { f64::INFINITY } else { -slope(&pts) };
    DecayFit {
        exponent,
        constant,
        shells,
        fitted_points: pts.len(),
    }
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Coefficients of a/ã on the cell of (j₁, j₂) at scale 2^λ, restriction mode.
pub fn fourier_coefficients(
    a: &SymbolSpec,
    ws: &WindowSystem,
    j1: i64,
    j2: i64,
    lambda: f64,
    n_range: usize,
) -> Result<CoefficientSlice> {
    fourier_coefficients_with(
        a,
        ws,
        j1,
        j2,
        lambda,
        n_range,
        CoefficientMode::Restriction,
        DEFAULT_SAMPLES,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn fourier_coefficients_with(
    a: &SymbolSpec,
    ws: &WindowSystem,
    j1: i64,
    j2: i64,
    lambda: f64,
    n_range: usize,
    mode: CoefficientMode,
    samples: usize,
) -> Result<CoefficientSlice> {
    coefficients_at_scale(a, ws, j1, j2, lambda, lambda.exp2(), n_range, mode, samples)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn coefficients_at_scale(
    a: &SymbolSpec,
    ws: &WindowSystem,
    j1: i64,
    j2: i64,
    lambda: f64,
    scale: f64,
    n_range: usize,
    mode: CoefficientMode,
    samples: usize,
) -> Result<CoefficientSlice> {
    if a.arity() != 2 || !a.is_real_evaluable() {
        return Err(FppError::InvalidConfig(
            "coefficients need an arity-2 symbol with off-lattice values".into(),
        ));
    }
    let m = ws.m() as i64;
    for j in [j1, j2] {
        if j == 0 || j.abs() > m {
            return Err(FppError::InvalidConfig(format!("window index {j} not in ±1..±{m}")));
        }
    }
    if j1.abs().max(j2.abs()) != m {
        return Err(FppError::InvalidConfig(format!(
            "pair ({j1},{j2}) is not a partition member"
        )));
    }
    if !samples.is_power_of_two() || samples < 2 * n_range + 1 {
        return Err(FppError::InvalidConfig(format!(
            "{samples} samples cannot resolve |n| <= {n_range}"
        )));
    }
    let period = ws.enlargement() * scale;
    let origin = (ws.cell(j1).0 * scale, ws.cell(j2).0 * scale);
    let step = period / samples as f64;
    let xs1: Vec<f64> = (0..samples).map(|i| origin.0 + (i as f64 + 0.5) * step).collect();
    let xs2: Vec<f64> = (0..samples).map(|i| origin.1 + (i as f64 + 0.5) * step).collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); samples * samples];
    let mut min_den = f64::INFINITY;
    for (i, &x1) in xs1.iter().enumerate() {
        let w1 = ws.window(j1, x1 / scale);
        for (k, &x2) in xs2.iter().enumerate() {
            let v = match mode {
                CoefficientMode::Restriction => {
                    let den = ws.atilde(x1, x2);
                    min_den = min_den.min(den);
                    a.eval_real(&[x1, x2])? / den
                }
                CoefficientMode::Windowed => {
                    let w = w1 * ws.window(j2, x2 / scale);
                    if w == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        let den = ws.atilde_squared(x1, x2);
                        min_den = min_den.min(den);
                        a.eval_real(&[x1, x2])? * (w / den)
                    }
                }
            };
            buf[i * samples + k] = v;
        }
    }
    let bound = C0_EXPECTED / 2.0;
    if !(min_den >= bound) {
        return Err(FppError::PartitionTooCoarse { value: min_den, bound });
    }
    fft2(&mut buf, samples);
    let r = n_range as i64;
    let norm = 1.0 / (samples * samples) as f64;
    // C(n) = e^{−2πi n (o/L + 1/(2S))} · DFT[n mod S] / S² per axis.
    let phase = |n: i64, o: f64| Complex64::from_polar(1.0, -2.0 * PI * n as f64 * (o / period + 0.5 / samples as f64));
    let mut values = Vec::with_capacity((2 * n_range + 1).pow(2));
    for n1 in -r..=r {
        let p1 = phase(n1, origin.0);
        let row = n1.rem_euclid(samples as i64) as usize;
        for n2 in -r..=r {
            let col = n2.rem_euclid(samples as i64) as usize;
            values.push(buf[row * samples + col] * p1 * phase(n2, origin.1) * norm);
        }
    }
    Ok(CoefficientSlice {
        j1,
        j2,
        lambda,
        mode,
        n_range,
        period,
        origin,
        min_denominator: min_den,
        values,
    })
}

fn fft2(buf: &mut [Complex64], s: usize) {
    for row in buf.chunks_mut(s) {
        fft_in_place(row, true);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); s];
    for c in 0..s {
        for r in 0..s {
            col[r] = buf[r * s + c];
        }
        fft_in_place(&mut col, true);
        for r in 0..s {
            buf[r * s + c] = col[r];
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoreReconstruction {
    pub n_range: usize,
    pub max_error: f64,
    pub max_target: f64,
    pub relative: f64,
}

/// Resum the series on interior points of the window core (where Ψ̂_{j₁}Ψ̂_{j₂} = 1)
/// and compare with the expanded function there.
pub fn core_reconstruction(
    a: &SymbolSpec,
    ws: &WindowSystem,
    slice: &CoefficientSlice,
    probes: usize,
) -> Result<CoreReconstruction> {
    let scale = slice.lambda.exp2();
    let (c1, d1) = ws.core(slice.j1);
    let (c2, d2) = ws.core(slice.j2);
    let mut max_error = 0.0_f64;
    let mut max_target = 0.0_f64;
    for i in 0..probes {
        let x1 = (c1 + (d1 - c1) * (i as f64 + 0.5) / probes as f64) * scale;
        for k in 0..probes {
            let x2 = (c2 + (d2 - c2) * (k as f64 + 0.5) / probes as f64) * scale;
            let den = match slice.mode {
                CoefficientMode::Restriction => ws.atilde(x1, x2),
                CoefficientMode::Windowed => ws.atilde_squared(x1, x2),
            };
            let target = a.eval_real(&[x1, x2])? / den;
            max_target = max_target.max(target.norm());
            max_error = max_error.max((slice.eval(x1, x2) - target).norm());
        }
    }
    Ok(CoreReconstruction {
        n_range: slice.n_range,
        max_error,
        max_target,
        relative: max_error / max_target.max(1e-300),
    })
}

/// Window pairs and scales used to summarize coefficient decay of a symbol.
pub fn representative_cells(ws: &WindowSystem) -> Vec<(i64, i64, f64)> {
    let m = ws.m() as i64;
    let mut out = Vec::new();
    for (j1, j2) in [(m, 1), (m, m), (-(m / 2) + 1, m), (m, -m / 2), (-m, -1)] {
        for lambda in [0.0, 0.375] {
            out.push((j1, j2, lambda));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecaySurvey {
    pub mode: CoefficientMode,
    pub enlargement: f64,
    pub n_range: usize,
    /// (j₁, j₂, λ, exponent).
    pub cells: Vec<(i64, i64, f64, f64)>,
    pub min_exponent: f64,
    pub max_constant: f64,
}

/// Decay exponents over `representative_cells`.
pub fn decay_survey(a: &SymbolSpec, ws: &WindowSystem, n_range: usize, mode: CoefficientMode) -> Result<DecaySurvey> {
    let samples = (4 * n_range + 4).next_power_of_two().max(DEFAULT_SAMPLES);
    let mut cells = Vec::new();
    let mut min_exponent = f64::INFINITY;
    let mut max_constant = 0.0_f64;
    for (j1, j2, lambda) in representative_cells(ws) {
        let s = fourier_coefficients_with(a, ws, j1, j2, lambda, n_range, mode, samples)?;
        let fit = s.decay();
        min_exponent = min_exponent.min(fit.exponent);
        max_constant = max_constant.max(fit.constant);
        cells.push((j1, j2, lambda, fit.exponent));
    }
    Ok(DecaySurvey {
        mode,
        enlargement: ws.enlargement(),
        n_range,
        cells,
        min_exponent,
        max_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{catalog_windows, lookup, Formula};

    #[test]
    fn atilde_over_itself_is_a_delta() {
        let ws = catalog_windows();
        let a = SymbolSpec::formula(Formula::Atilde(ws));
        for (j1, j2, lambda) in [(8, 3, 0.0), (-8, 8, 1.25), (2, -8, -0.5)] {
            let s = fourier_coefficients(&a, &ws, j1, j2, lambda, 10).unwrap();
            for n1 in -10..=10 {
                for n2 in -10..=10 {
                    let want = if n1 == 0 && n2 == 0 { 1.0 } else { 0.0 };
                    assert!((s.get(n1, n2) - want).norm() < 1e-10, "({n1},{n2}): {}", s.get(n1, n2));
                }
            }
            assert!(s.decay().exponent.is_infinite());
        }
    }

    #[test]
    fn delta_series_evaluates_to_one() {
        let ws = catalog_windows();
        let a = SymbolSpec::formula(Formula::Atilde(ws));
        let s = fourier_coefficients(&a, &ws, 8, 1, 0.5, 4).unwrap();
        let x = (7.3 * 2f64.sqrt(), 0.4 * 2f64.sqrt());
        assert!((s.eval(x.0, x.1) - 1.0).norm() < 1e-10);
    }

    #[test]
    fn steep_tapers_decay_slowly_in_both_modes() {
        let ws = catalog_windows();
        let a = lookup("homog0").unwrap();
        for mode in [CoefficientMode::Restriction, CoefficientMode::Windowed] {
            let s = fourier_coefficients_with(&a, &ws, 8, 3, 0.0, 20, mode, 128).unwrap();
            assert!(s.decay().exponent < 3.0, "{mode:?}: {}", s.decay().exponent);
        }
    }

    #[test]
    fn wide_windows_decay_fast() {
        let ws = WindowSystem::with_enlargement(8, 8, 2.0).unwrap();
        let a = lookup("homog0").unwrap();
        let w = fourier_coefficients_with(&a, &ws, 8, 3, 0.0, 30, CoefficientMode::Windowed, 256).unwrap();
        let r = fourier_coefficients_with(&a, &ws, 8, 3, 0.0, 30, CoefficientMode::Restriction, 256).unwrap();
        assert!(w.decay().exponent >= 3.5, "{:?}", w.decay());
        assert!(r.decay().exponent < 2.0, "{:?}", r.decay());
        let rec = core_reconstruction(&a, &ws, &w, 8).unwrap();
        assert!(rec.relative < 1e-4, "{rec:?}");
    }

    #[test]
    fn rejects_bad_requests() {
        let ws = catalog_windows();
        let a = lookup("homog0").unwrap();
        assert!(fourier_coefficients(&a, &ws, 3, 3, 0.0, 5).is_err());
        assert!(fourier_coefficients(&a, &ws, 9, 1, 0.0, 5).is_err());
        assert!(fourier_coefficients_with(&a, &ws, 8, 1, 0.0, 40, CoefficientMode::Restriction, 64).is_err());
        assert!(fourier_coefficients(&SymbolSpec::trivial(3), &ws, 8, 1, 0.0, 5).is_err());
    }

    #[test]
    fn coarse_partition_is_reported() {
        let ws = WindowSystem::new(4, 1).unwrap();
        let a = lookup("homog0").unwrap();
        // The cell of (4, 1) at λ = 0 reaches radii where no node is active.
        let err = fourier_coefficients(&a, &ws, 4, 4, 0.0, 4).unwrap_err();
        assert!(matches!(err, FppError::PartitionTooCoarse { .. }), "{err}");
    }
}
