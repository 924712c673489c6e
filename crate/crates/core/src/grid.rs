//! Sampled unit torus: points x_k = k/N, centered integer frequencies, DFT with
//! a 1/N forward factor, L^p and weak-L^1 norms, the grid maximal function.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicInterval;
use crate::error::{FppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(FppError::BadGridSize(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log2_n(&self) -> u32 {
        self.n.trailing_zeros()
    }

    pub fn point(&self, k: usize) -> f64 {
        k as f64 / self.n as f64
    }

    /// Smallest representable frequency, -N/2.
    pub fn min_freq(&self) -> i64 {
        -(self.n as i64 / 2)
    }

    /// Largest representable frequency, N/2 - 1.
    pub fn max_freq(&self) -> i64 {
        self.n as i64 / 2 - 1
    }

    pub fn contains_freq(&self, xi: i64) -> bool {
        xi >= self.min_freq() && xi <= self.max_freq()
    }

    /// Index of frequency `xi` in a centered coefficient array.
    pub fn freq_slot(&self, xi: i64) -> usize {
        (xi - self.min_freq()) as usize
    }

    pub fn slot_freq(&self, slot: usize) -> i64 {
        slot as i64 + self.min_freq()
    }

    pub fn freqs(&self) -> impl Iterator<Item = i64> {
        self.min_freq()..=self.max_freq()
    }

    pub(crate) fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self.n != other.n {
            return Err(FppError::GridMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }
}

impl TryFrom<usize> for TorusGrid {
    type Error = FppError;
    fn try_from(n: usize) -> Result<Self> {
        TorusGrid::new(n)
    }
}

impl From<TorusGrid> for usize {
    fn from(g: TorusGrid) -> usize {
        g.n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: TorusGrid,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(FppError::GridMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn constant(grid: TorusGrid, c: Complex64) -> Self {
        Self {
            grid,
            values: vec![c; grid.n()],
        }
    }

    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut(f64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|k| f(grid.point(k))).collect();
        Self { grid, values }
    }

    /// Values from the cell index k = 0..N-1.
    pub fn from_fn_index(grid: TorusGrid, f: impl FnMut(usize) -> Complex64) -> Self {
        let values = (0..grid.n()).map(f).collect();
        Self { grid, values }
    }

    /// e^{2πi k x}.
    pub fn pure_mode(grid: TorusGrid, k: i64) -> Self {
        let n = grid.n() as i64;
        let values = (0..n)
            .map(|j| {
                let phase = (k * j).rem_euclid(n) as f64 / n as f64;
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// Hermitian pairing (1/N) Σ f·conj(g).
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        Ok(hermitian(&self.values, &other.values))
    }

    /// Bilinear pairing (1/N) Σ f·g, the discrete ∫ f g.
    pub fn integrate_product(&self, other: &Self) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        Ok(bilinear(&self.values, &other.values))
    }

    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.grid.n() as f64
    }

    /// Cyclic convolution (1/N) Σ_y f(y) g(x - y).
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let a = dft(self);
        let b = dft(other);
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).collect();
        Ok(idft(&Spectrum {
            grid: self.grid,
            coeffs,
        }))
    }

    /// g(x) = f(-x).
    pub fn reflect(&self) -> Self {
        let n = self.grid.n();
        let values = (0..n).map(|k| self.values[(n - k) % n]).collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// g(x) = f(x - s/N).
    pub fn shift(&self, s: i64) -> Self {
        let n = self.grid.n() as i64;
        let values = (0..n).map(|k| self.values[(k - s).rem_euclid(n) as usize]).collect();
        Self {
            grid: self.grid,
            values,
        }
    }
}

pub(crate) fn hermitian(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let s: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
    s / a.len() as f64
}

pub(crate) fn bilinear(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let s: Complex64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    s / a.len() as f64
}

#[derive(Serialize, Deserialize)]
struct SampledJson {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for SampledFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SampledJson {
            n: self.grid.n(),
            re: self.values.iter().map(|z| z.re).collect(),
            im: self.values.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SampledFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = SampledJson::deserialize(d)?;
        if j.re.len() != j.im.len() {
            return Err(D::Error::custom("re/im length mismatch"));
        }
        let grid = TorusGrid::new(j.n).map_err(D::Error::custom)?;
        let values = j.re.iter().zip(&j.im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        SampledFunction::new(grid, values).map_err(D::Error::custom)
    }
}

/// Fourier coefficients on the centered frequencies -N/2..N/2-1.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(FppError::GridMismatch {
                expected: grid.n(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_fn(grid: TorusGrid, f: impl FnMut(i64) -> Complex64) -> Self {
        Self {
            grid,
            coeffs: grid.freqs().map(f).collect(),
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// Coefficient at ξ; zero outside the representable range.
    pub fn get(&self, xi: i64) -> Complex64 {
        if self.grid.contains_freq(xi) {
            self.coeffs[self.grid.freq_slot(xi)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn set(&mut self, xi: i64, c: Complex64) {
        let slot = self.grid.freq_slot(xi);
        self.coeffs[slot] = c;
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.grid.freqs().zip(self.coeffs.iter().copied())
    }

    /// Largest |ξ| whose coefficient exceeds `rel_tol` times the largest
    /// coefficient. Roundoff from a transform round trip sits far below the
    /// default tolerance used by the operators.
    pub fn bandwidth(&self, rel_tol: f64) -> i64 {
        let peak = self.coeffs.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        if peak == 0.0 {
            return 0;
        }
        self.iter()
            .filter(|(_, c)| c.norm() > rel_tol * peak)
            .map(|(xi, _)| xi.abs())
            .max()
            .unwrap_or(0)
    }
}

/// Coefficients below this fraction of the peak are treated as roundoff when
/// measuring bandwidth.
pub const BANDWIDTH_TOL: f64 = 1e-13;

type PlanKey = (usize, bool);

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().expect("fft plan cache poisoned");
    guard
        .entry((n, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

/// Unnormalized in-place FFT of any length (e^{-2πi} kernel when `forward`).
pub(crate) fn fft_in_place(buf: &mut [Complex64], forward: bool) {
    plan(buf.len(), forward).process(buf);
}

/// coeffs[ξ] = (1/N) Σ_k f(x_k) e^{-2πi ξ x_k}.
pub fn dft(f: &SampledFunction) -> Spectrum {
    let n = f.grid.n();
    let mut buf = f.values.clone();
    fft_in_place(&mut buf, true);
    let scale = 1.0 / n as f64;
    let coeffs = f
        .grid
        .freqs()
        .map(|xi| buf[xi.rem_euclid(n as i64) as usize] * scale)
        .collect();
    Spectrum { grid: f.grid, coeffs }
}

/// f(x_k) = Σ_ξ coeffs[ξ] e^{2πi ξ x_k}.
pub fn idft(s: &Spectrum) -> SampledFunction {
    let n = s.grid.n();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (xi, c) in s.iter() {
        buf[xi.rem_euclid(n as i64) as usize] = c;
    }
    fft_in_place(&mut buf, false);
    SampledFunction {
        grid: s.grid,
        values: buf,
    }
}

/// Exponent for [`lp_norm`]; `f64::INFINITY` selects the sup norm.
pub fn lp_norm(f: &SampledFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(FppError::BadExponent(p));
    }
    if p.is_infinite() {
        return Ok(f.sup_norm());
    }
    let n = f.grid.n() as f64;
    let s: f64 = f.values.iter().map(|z| z.norm().powf(p)).sum();
    Ok((s / n).powf(1.0 / p))
}

/// sup_λ λ·|{|g| > λ}|, attained at a value of |g|.
pub fn weak_l1_norm(g: &SampledFunction) -> f64 {
    weak_l1_of(&g.abs())
}

pub(crate) fn weak_l1_of(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted
        .iter()
        .enumerate()
        .fold(0.0, |m, (i, &v)| m.max(v * (i + 1) as f64 / n))
}

/// Uncentered maximal function over grid-aligned arcs (lengths 1..N cells).
///
/// Arc averages are accumulated left to right from the arc's start, which is
/// also the order a direct scan uses, so the result is reproducible exactly.
pub fn maximal_function(f: &SampledFunction) -> SampledFunction {
    let vals = f.abs();
    let out = maximal_of(&vals);
    SampledFunction {
        grid: f.grid,
        values: out.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    }
}

pub(crate) fn maximal_of(vals: &[f64]) -> Vec<f64> {
    let n = vals.len();
    let mut running = vec![0.0_f64; n];
    let mut best = vec![0.0_f64; n];
    let mut avg = vec![0.0_f64; n];
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::with_capacity(2 * n);
    for len in 1..=n {
        for s in 0..n {
            running[s] += vals[(s + len - 1) % n];
            avg[s] = running[s] / len as f64;
        }
        // x is covered by arcs starting at x-len+1..=x; sliding max over the
        // doubled start sequence.
        deque.clear();
        for t in 0..(n + len - 1) {
            let s = (t + n - (len - 1)) % n;
            while let Some(&back) = deque.back() {
                if avg[(back + n - (len - 1)) % n] <= avg[s] {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(t);
            if t >= len - 1 {
                while let Some(&front) = deque.front() {
                    if front + len <= t {
                        deque.pop_front();
                    } else {
                        break;
                    }
                }
                let x = t - (len - 1);
                let front = *deque.front().expect("nonempty window");
                let v = avg[(front + n - (len - 1)) % n];
                if v > best[x] {
                    best[x] = v;
                }
            }
        }
    }
    best
}

/// Torus distance from x to the half-open arc [a, b).
pub(crate) fn torus_dist(x: f64, a: f64, b: f64) -> f64 {
    if x >= a && x < b {
        return 0.0;
    }
    let d1 = (a - x).rem_euclid(1.0);
    let d2 = (x - b).rem_euclid(1.0);
    d1.min(d2)
}

/// (1 + dist(x, J)/|J|)^{-exponent}.
pub fn approx_cutoff(j: &DyadicInterval, grid: TorusGrid, exponent: u32) -> Result<SampledFunction> {
    if !j.fits_torus() {
        return Err(FppError::Precondition(format!("{j:?} does not fit inside [0,1)")));
    }
    let (a, b) = (j.left(), j.right());
    let len = j.length();
    Ok(SampledFunction::from_fn(grid, |x| {
        let d = torus_dist(x, a, b);
        Complex64::new((1.0 + d / len).powi(-(exponent as i32)), 0.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{ToPrimitive, Zero};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn g(n: usize) -> TorusGrid {
        TorusGrid::new(n).unwrap()
    }

    fn random_fn(n: usize, seed: u64) -> SampledFunction {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        SampledFunction::from_fn(g(n), |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn grid_sizes() {
        assert!(TorusGrid::new(4).is_err());
        assert!(TorusGrid::new(24).is_err());
        let t = g(16);
        assert_eq!((t.min_freq(), t.max_freq()), (-8, 7));
        assert_eq!(t.slot_freq(t.freq_slot(-3)), -3);
    }

    #[test]
    fn dft_of_constant_and_mode() {
        let t = g(32);
        let s = dft(&SampledFunction::constant(t, Complex64::new(1.0, 0.0)));
        for (xi, c) in s.iter() {
            let want = if xi == 0 { 1.0 } else { 0.0 };
            assert!((c - want).norm() < 1e-14);
        }
        let s = dft(&SampledFunction::pure_mode(t, 3));
        for (xi, c) in s.iter() {
            let want = if xi == 3 { 1.0 } else { 0.0 };
            assert!((c - want).norm() < 1e-14);
        }
    }

    #[test]
    fn dft_matches_direct_sum() {
        let f = random_fn(16, 3);
        let s = dft(&f);
        for xi in g(16).freqs() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, v) in f.values().iter().enumerate() {
                let ph = -2.0 * std::f64::consts::PI * xi as f64 * k as f64 / 16.0;
                acc += v * Complex64::from_polar(1.0, ph);
            }
            assert!((acc / 16.0 - s.get(xi)).norm() < 1e-13);
        }
    }

    #[test]
    fn parseval_direct() {
        let f = random_fn(64, 11);
        let lhs: f64 = f.values().iter().map(|z| z.norm_sqr()).sum::<f64>() / 64.0;
        let rhs: f64 = dft(&f).coeffs().iter().map(|z| z.norm_sqr()).sum();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn lp_examples() {
        let t = g(16);
        let one = SampledFunction::constant(t, Complex64::new(1.0, 0.0));
        for p in [0.5, 1.0, 2.0, 7.0, f64::INFINITY] {
            assert!((lp_norm(&one, p).unwrap() - 1.0).abs() < 1e-15);
        }
        let half = SampledFunction::from_fn(t, |x| Complex64::new(if x < 0.5 { 1.0 } else { 0.0 }, 0.0));
        assert!((lp_norm(&half, 2.0).unwrap() - 0.5_f64.sqrt()).abs() < 1e-15);
        assert!(lp_norm(&one, 0.0).is_err());
        assert!(lp_norm(&one, -1.0).is_err());
    }

    #[test]
    fn l3_norm_against_rationals() {
        // Values chosen as small dyadic rationals so Σ|f|^3 is exact in Q.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<i64> = (0..16).map(|_| rng.gen_range(-64..=64)).collect();
        let f = SampledFunction::new(
            g(16),
            vals.iter().map(|&v| Complex64::new(v as f64 / 32.0, 0.0)).collect(),
        )
        .unwrap();
        let mut s = BigRational::zero();
        for &v in &vals {
            let r = BigRational::new(v.abs().into(), 32.into());
            s += &r * &r * &r;
        }
        s /= BigRational::from_integer(16.into());
        let want = s.to_f64().unwrap().cbrt();
        assert!((lp_norm(&f, 3.0).unwrap() - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn weak_l1_examples() {
        let t = g(16);
        let c = SampledFunction::constant(t, Complex64::new(2.5, 0.0));
        assert_eq!(weak_l1_norm(&c), 2.5);
        let quarter = SampledFunction::from_fn(t, |x| Complex64::new(if x < 0.25 { 1.0 } else { 0.0 }, 0.0));
        assert_eq!(weak_l1_norm(&quarter), 0.25);
        assert_eq!(weak_l1_of(&[4.0, 2.0, 1.0, 1.0]), 1.0);
    }

    fn brute_weak_l1(v: &[f64]) -> f64 {
        let n = v.len() as f64;
        let mut best = 0.0_f64;
        for &lam in v {
            // λ slightly below an attained value: count values ≥ λ.
            let count = v.iter().filter(|&&u| u >= lam).count() as f64;
            best = best.max(lam * count / n);
        }
        best
    }

    fn brute_maximal(v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut out = vec![0.0_f64; n];
        for x in 0..n {
            for s in 0..n {
                for len in 1..=n {
                    let covers = (x + n - s) % n < len;
                    if !covers {
                        continue;
                    }
                    let mut acc = 0.0;
                    for i in 0..len {
                        acc += v[(s + i) % n];
                    }
                    out[x] = out[x].max(acc / len as f64);
                }
            }
        }
        out
    }

    #[test]
    fn maximal_half_indicator_matches_scan() {
        let v: Vec<f64> = (0..16).map(|k| if k < 8 { 1.0 } else { 0.0 }).collect();
        assert_eq!(maximal_of(&v), brute_maximal(&v));
    }

    #[test]
    fn maximal_examples() {
        let t = g(16);
        let c = SampledFunction::constant(t, Complex64::new(0.0, -3.0));
        assert!(maximal_function(&c).values().iter().all(|z| (z.re - 3.0).abs() < 1e-14));
        let e = SampledFunction::from_fn(t, |x| {
            Complex64::new(if (0.3..0.4).contains(&x) { 1.0 } else { 0.0 }, 0.0)
        });
        let m = maximal_function(&e);
        for k in 0..16 {
            if e.values()[k].re == 1.0 {
                assert_eq!(m.values()[k].re, 1.0);
            }
        }
    }

    #[test]
    fn cutoff_examples() {
        let t = g(64);
        let j = DyadicInterval::new(-3, 2);
        let c = approx_cutoff(&j, t, 10).unwrap();
        for k in 0..64 {
            let x = t.point(k);
            if (0.25..0.375).contains(&x) {
                assert_eq!(c.values()[k].re, 1.0);
            }
        }
        // x = 0.5 is at distance |J| from J.
        assert!((c.values()[32].re - 2f64.powi(-10)).abs() < 1e-15);
    }

    #[test]
    fn cutoff_integral_scales_with_length() {
        let t = g(1024);
        let mut ratios = Vec::new();
        for k in 1..=5 {
            let j = DyadicInterval::new(-k, 0);
            let c = approx_cutoff(&j, t, 2).unwrap();
            ratios.push(c.integral().re / j.length());
        }
        // ∫(1+|x|)^{-2} over the line is 3 per unit length; the torus only loses mass.
        for r in &ratios {
            assert!(*r >= 1.0 && *r <= 3.0 + 1e-9, "{ratios:?}");
        }
    }

    #[test]
    fn json_round_trip() {
        let f = random_fn(8, 1);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.starts_with("{\"n\":8"));
        let back: SampledFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_round_trip(seed in any::<u64>(), logn in 3u32..9) {
            let f = random_fn(1 << logn, seed);
            let back = idft(&dft(&f));
            let scale = f.sup_norm();
            for (a, b) in back.values().iter().zip(f.values()) {
                prop_assert!((a - b).norm() <= 1e-12 * scale.max(1.0));
            }
        }

        #[test]
        fn prop_parseval(seed in any::<u64>(), logn in 3u32..9) {
            let f = random_fn(1 << logn, seed);
            let l2 = lp_norm(&f, 2.0).unwrap();
            let s: f64 = dft(&f).coeffs().iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((l2 * l2 - s).abs() <= 1e-12 * l2 * l2);
        }

        #[test]
        fn prop_weak_below_strong(seed in any::<u64>(), logn in 3u32..8) {
            let f = random_fn(1 << logn, seed);
            prop_assert!(weak_l1_norm(&f) <= lp_norm(&f, 1.0).unwrap() + 1e-15);
            prop_assert_eq!(weak_l1_norm(&f), brute_weak_l1(&f.abs()));
        }

        #[test]
        fn prop_maximal_exact(seed in any::<u64>(), logn in 3u32..7) {
            let f = random_fn(1 << logn, seed);
            let v = f.abs();
            let m = maximal_of(&v);
            prop_assert_eq!(&m, &brute_maximal(&v));
            for (a, b) in m.iter().zip(&v) {
                prop_assert!(a >= b);
            }
        }
    }
}
