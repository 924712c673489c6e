use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::grid::{dft, SampledFunction, Spectrum, TorusGrid, BANDWIDTH_TOL};
use crate::sampling::{random_bandlimited, random_smooth, substream};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub deviation: f64,
    /// Integral of the absolute integrand on the physical side.
    pub scale: f64,
    pub relative: f64,
}

impl IdentityReport {
    fn new(lhs: Complex64, rhs: Complex64, scale: f64) -> Self {
        let deviation = (lhs - rhs).norm();
        let relative = if scale > 0.0 { deviation / scale } else { deviation };
        Self {
            lhs,
            rhs,
            deviation,
            scale,
            relative,
        }
    }
}

/// Σ over ξ₁+ξ₂+ξ₃+ξ₄ = 0 (as integers, no wraparound) of
/// η̂₁(ξ₁)η̂₂(ξ₂)η̂₃(ξ₃)η̂₄(ξ₄)η̂₁₄(ξ₁+ξ₄)η̂₂₃(ξ₂+ξ₃)·f̂₁(ξ₁)f̂₂(ξ₂)f̂₃(ξ₃)f̂₄(ξ₄).
fn constrained_sum(eta: &[Spectrum; 6], f: &[Spectrum; 4], bands: [i64; 4]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let [b1, b2, b3, b4] = bands;
    for x1 in -b1..=b1 {
        let c1 = f[0].get(x1) * eta[0].get(x1);
        if c1 == Complex64::new(0.0, 0.0) {
            continue;
        }
        for x2 in -b2..=b2 {
            let c2 = c1 * f[1].get(x2) * eta[1].get(x2);
            if c2 == Complex64::new(0.0, 0.0) {
                continue;
            }
            for x3 in -b3..=b3 {
                let x4 = -(x1 + x2 + x3);
                if x4.abs() > b4 {
                    continue;
                }
                acc += c2
                    * f[2].get(x3)
                    * eta[2].get(x3)
                    * f[3].get(x4)
                    * eta[3].get(x4)
                    * eta[4].get(x1 + x4)
                    * eta[5].get(x2 + x3);
            }
        }
    }
    acc
}

fn bands_for(f: &[Spectrum; 4], grid: TorusGrid) -> Result<[i64; 4]> {
    let b = [0, 1, 2, 3].map(|i| f[i].bandwidth(BANDWIDTH_TOL));
    let limit = grid.max_freq();
    for (p, q) in [(0, 3), (1, 2)] {
        if b[p] + b[q] > limit {
            return Err(FppError::Bandwidth {
                total: b[p] + b[q],
                limit,
            });
        }
    }
    Ok(b)
}

fn same_grid(fs: &[&SampledFunction]) -> Result<TorusGrid> {
    let g = fs[0].grid();
    for f in fs {
        if f.grid() != g {
            return Err(FppError::GridMismatch {
                expected: g.n(),
                got: f.grid().n(),
            });
        }
    }
    Ok(g)
}

fn abs_integral(a: &SampledFunction, b: &SampledFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x.norm() * y.norm())
        .sum::<f64>()
        / a.grid().n() as f64
}

/// Frequency-side constrained sum against ∫ [(f₁*η₁)(f₄*η₄)]*η₁₄ · [(f₂*η₂)(f₃*η₃)]*η₂₃.
/// η = [η₁, η₂, η₃, η₄, η₁₄, η₂₃].
pub fn verify_calc1(eta: &[SampledFunction; 6], f: &[SampledFunction; 4]) -> Result<IdentityReport> {
    let all: Vec<&SampledFunction> = eta.iter().chain(f.iter()).collect();
    let grid = same_grid(&all)?;
    let fh = [0, 1, 2, 3].map(|i| dft(&f[i]));
    let bands = bands_for(&fh, grid)?;
    let eh = [0, 1, 2, 3, 4, 5].map(|i| dft(&eta[i]));
    let lhs = constrained_sum(&eh, &fh, bands);
    let g14 = f[0]
        .convolve(&eta[0])?
        .mul(&f[3].convolve(&eta[3])?)?
        .convolve(&eta[4])?;
    let g23 = f[1]
        .convolve(&eta[1])?
        .mul(&f[2].convolve(&eta[2])?)?
        .convolve(&eta[5])?;
    let rhs = g14.integrate_product(&g23)?;
    Ok(IdentityReport::new(lhs, rhs, abs_integral(&g14, &g23)))
}

/// (1/N) Σ_y F(y)·Φ(x−y) at grid point x, by direct summation.
fn direct_conv_at(f: &SampledFunction, phi: &SampledFunction, x: usize) -> Complex64 {
    let n = f.grid().n();
    let (fv, pv) = (f.values(), phi.values());
    let mut acc = Complex64::new(0.0, 0.0);
    for y in 0..n {
        acc += fv[y] * pv[(x + n - y) % n];
    }
    acc / n as f64
}

fn tiles_per_interval(grid: TorusGrid, k: i32) -> Result<usize> {
    let log_n = grid.log2_n() as i32;
    if k > 0 || k + log_n < 0 {
        return Err(FppError::Precondition(format!(
            "scale 2^{k} not representable on N={}",
            grid.n()
        )));
    }
    Ok(1usize << (k + log_n))
}

/// ⟨F, Φ_{x}⟩ with Φ_x(y) = |I|^{1/2}·conj(Φ(x − y)).
fn tile_coefficient(f: &SampledFunction, phi: &SampledFunction, x: usize, len: f64) -> Complex64 {
    direct_conv_at(f, phi, x) * len.sqrt()
}

/// ∫ (F₁*Φ₁)(F₂*Φ₂)(F₃*Φ₃) against the tile sum
/// Σ_{|I|=2^k} |I|^{−1/2} avg_t Π_j ⟨F_j, Φ_{I,t,j}⟩,
/// Φ_{I,t,j}(y) = |I|^{1/2}conj(Φ_j(x_I + t|I| − y)), t over the 2^k·N grid offsets in I.
pub fn verify_calc2(big_f: &[SampledFunction; 3], phi: &[SampledFunction; 3], k: i32) -> Result<IdentityReport> {
    let all: Vec<&SampledFunction> = big_f.iter().chain(phi.iter()).collect();
    let grid = same_grid(&all)?;
    let per = tiles_per_interval(grid, k)?;
    let n = grid.n();
    let len = 2f64.powi(k);
    let conv: Vec<SampledFunction> = (0..3).map(|j| big_f[j].convolve(&phi[j])).collect::<Result<_>>()?;
    let mut lhs = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for x in 0..n {
        let p = conv[0].values()[x] * conv[1].values()[x] * conv[2].values()[x];
        lhs += p;
        scale += p.norm();
    }
    lhs /= n as f64;
    scale /= n as f64;
    // Each grid point is x_I + t|I| for exactly one (I, t).
    let mut rhs = Complex64::new(0.0, 0.0);
    for x in 0..n {
        let mut prod = Complex64::new(1.0, 0.0);
        for j in 0..3 {
            prod *= tile_coefficient(&big_f[j], &phi[j], x, len);
        }
        rhs += prod / len.sqrt();
    }
    rhs /= per as f64;
    Ok(IdentityReport::new(lhs, rhs, scale))
}

/// Ψ's = [Ψ₁, Ψ₂, Ψ₃, Ψ₄, Ψ₁₄, Ψ₂₃]; Ψ₁, Ψ₄, Ψ₁₄ adapted to |I| = 2^{−k′},
/// Ψ₂, Ψ₃, Ψ₂₃ to |J| = 2^{−k″}. The constrained frequency sum is compared
/// with the double tile sum
/// Σ_{|I|} |I|^{−1/2} avg_{t′} ⟨f₁,Ψ_{I,t′,1}⟩⟨B_{k″}(f₂,f₃), Ψ̃_{I,t′,14}⟩⟨f₄,Ψ_{I,t′,4}⟩,
/// B_{k″} = Σ_{|J|} |J|^{−1/2} avg_{t″} ⟨f₂,Ψ_{J,t″,2}⟩⟨f₃,Ψ_{J,t″,3}⟩·conj(Ψ̃_{J,t″,23}).
pub fn verify_calc3(
    psi: &[SampledFunction; 6],
    f: &[SampledFunction; 4],
    k_a: i32,
    k_b: i32,
    sep: i32,
) -> Result<IdentityReport> {
    if k_a < k_b + sep {
        return Err(FppError::Precondition(format!("k' = {k_a} needs k' >= k'' + {sep}")));
    }
    let all: Vec<&SampledFunction> = psi.iter().chain(f.iter()).collect();
    let grid = same_grid(&all)?;
    let n = grid.n();
    let per_i = tiles_per_interval(grid, -k_a)?;
    let per_j = tiles_per_interval(grid, -k_b)?;
    let (len_i, len_j) = (2f64.powi(-k_a), 2f64.powi(-k_b));

    let fh = [0, 1, 2, 3].map(|i| dft(&f[i]));
    let bands = bands_for(&fh, grid)?;
    let ph = [0, 1, 2, 3, 4, 5].map(|i| dft(&psi[i]));
    let lhs = constrained_sum(&ph, &fh, bands);

    // B(x) = Σ_z |J|^{−1/2}/P_J · c₂(z)c₃(z)·|J|^{1/2}Ψ₂₃(x − z)
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    let psi23 = psi[5].values();
    for z in 0..n {
        let c = tile_coefficient(&f[1], &psi[1], z, len_j) * tile_coefficient(&f[2], &psi[2], z, len_j)
            / (len_j.sqrt() * per_j as f64)
            * len_j.sqrt();
        for (x, bx) in b.iter_mut().enumerate() {
            *bx += c * psi23[(x + n - z) % n];
        }
    }
    let psi14 = psi[4].values();
    let mut rhs = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for w in 0..n {
        // ⟨B, Ψ̃_{w,14}⟩ = (1/N) Σ_y B(y)·|I|^{1/2}Ψ₁₄(y − w)
        let mut pair = Complex64::new(0.0, 0.0);
        for (y, by) in b.iter().enumerate() {
            pair += by * psi14[(y + n - w) % n];
        }
        pair *= len_i.sqrt() / n as f64;
        let term = tile_coefficient(&f[0], &psi[0], w, len_i) * pair * tile_coefficient(&f[3], &psi[3], w, len_i)
            / (len_i.sqrt() * per_i as f64);
        rhs += term;
        scale += term.norm();
    }
    Ok(IdentityReport::new(lhs, rhs, scale))
}

/// L¹-normalized bump adapted to [0, 2^k]: 2^{−k}·φ(x/2^k) with φ a Gaussian
/// centered at 1/2, periodized, times e^{2πi·modulation·x}.
pub fn l1_bump(grid: TorusGrid, k: i32, width: f64, modulation: i64) -> SampledFunction {
    let len = 2f64.powi(k);
    SampledFunction::from_fn(grid, |x| {
        let mut v = 0.0;
        for m in -3..=3 {
            let u = (x + m as f64) / len - 0.5;
            v += (-(u / width).powi(2)).exp();
        }
        Complex64::from_polar(v / len, 2.0 * std::f64::consts::PI * modulation as f64 * x)
    })
}

/// 2^{−k}·1_{[0, 2^k)} on the grid.
pub fn indicator_bump(grid: TorusGrid, k: i32) -> SampledFunction {
    let len = 2f64.powi(k);
    SampledFunction::from_fn(grid, |x| {
        Complex64::new(if x < len - 1e-12 { 1.0 / len } else { 0.0 }, 0.0)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentitySuite {
    pub n: usize,
    pub seed: u64,
    pub calc1: Vec<IdentityReport>,
    pub calc2: Vec<IdentityReport>,
    pub calc3: Vec<IdentityReport>,
}

impl IdentitySuite {
    pub fn worst(&self) -> (f64, f64, f64) {
        let w = |v: &[IdentityReport]| v.iter().map(|r| r.relative).fold(0.0, f64::max);
        (w(&self.calc1), w(&self.calc2), w(&self.calc3))
    }
}

/// `count` random instances of each identity on an N-point grid:
/// bandlimited f's with band N/8 − 1, smooth random η's, Gaussian bumps at
/// |I| = 2^{−3} for calc2 and (k′, k″) = (5, 2) for calc3.
pub fn identity_suite(grid: TorusGrid, seed: u64, count: usize) -> Result<IdentitySuite> {
    let n = grid.n() as i64;
    let band = (n / 8 - 1).max(1);
    let mut calc1 = Vec::new();
    let mut calc2 = Vec::new();
    let mut calc3 = Vec::new();
    for i in 0..count as u64 {
        let mut r = substream(seed, i);
        let f = [0; 4].map(|_| random_bandlimited(grid, band, &mut r));
        let eta = [0; 6].map(|_| random_smooth(grid, n / 4, &mut r));
        calc1.push(verify_calc1(&eta, &f)?);
        let fs = [0; 3].map(|_| random_bandlimited(grid, band, &mut r));
        let phi = [0, 1, 2].map(|j| l1_bump(grid, -3, 0.2, j as i64 - 1));
        calc2.push(verify_calc2(&fs, &phi, -3)?);
        let (ka, kb) = (5.min(grid.log2_n() as i32), 2);
        let psi = [(ka, 1), (kb, 2), (kb, -1), (ka, -2), (ka, 0), (kb, 0)]
            .map(|(k, m)| l1_bump(grid, -k, 0.15, m * (1 << k.max(0)) / 2));
        calc3.push(verify_calc3(&psi, &f, ka, kb, 2)?);
    }
    Ok(IdentitySuite {
        n: grid.n(),
        seed,
        calc1,
        calc2,
        calc3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng;

    fn g(n: usize) -> TorusGrid {
        TorusGrid::new(n).unwrap()
    }

    #[test]
    fn calc1_pure_modes_single_term() {
        let grid = g(32);
        let m = [3i64, -5, 4, -2];
        let f = m.map(|k| SampledFunction::pure_mode(grid, k));
        let mut r = rng(1);
        let eta = [0; 6].map(|_| random_smooth(grid, 12, &mut r));
        let rep = verify_calc1(&eta, &f).unwrap();
        let eh = [0, 1, 2, 3, 4, 5].map(|i| dft(&eta[i]));
        let want = eh[0].get(3) * eh[1].get(-5) * eh[2].get(4) * eh[3].get(-2) * eh[4].get(1) * eh[5].get(-1);
        assert!((rep.lhs - want).norm() < 1e-14);
        assert!(rep.deviation < 1e-14, "{rep:?}");
    }

    #[test]
    fn calc1_empty_constraint_set() {
        let grid = g(64);
        let mut r = rng(2);
        let f = [0; 4].map(|_| random_bandlimited(grid, 3, &mut r));
        let mut eta = [0; 6].map(|_| random_smooth(grid, 10, &mut r));
        // η₁₄ lives on |ξ| ≥ 10 while |ξ₁+ξ₄| ≤ 6.
        let mut s = Spectrum::zeros(grid);
        for xi in 10..20 {
            s.set(xi, Complex64::new(1.0, 0.5));
            s.set(-xi, Complex64::new(0.3, -1.0));
        }
        eta[4] = crate::grid::idft(&s);
        let rep = verify_calc1(&eta, &f).unwrap();
        assert!(rep.lhs.norm() < 1e-15 && rep.rhs.norm() < 1e-13, "{rep:?}");
    }

    #[test]
    fn calc1_rejects_wraparound() {
        let grid = g(32);
        let mut r = rng(3);
        let f = [0; 4].map(|_| random_bandlimited(grid, 9, &mut r));
        let eta = [0; 6].map(|_| random_smooth(grid, 4, &mut r));
        assert!(matches!(verify_calc1(&eta, &f), Err(FppError::Bandwidth { .. })));
    }

    #[test]
    fn calc2_constants_and_indicators() {
        let grid = g(64);
        let c = [
            Complex64::new(2.0, 1.0),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, 3.0),
        ];
        let fs = c.map(|v| SampledFunction::constant(grid, v));
        let phi = [0; 3].map(|_| indicator_bump(grid, -2));
        let rep = verify_calc2(&fs, &phi, -2).unwrap();
        let want = c[0] * c[1] * c[2];
        assert!(
            (rep.lhs - want).norm() < 1e-12 && (rep.rhs - want).norm() < 1e-12,
            "{rep:?}"
        );
    }

    #[test]
    fn calc2_unit_interval_and_random() {
        let grid = g(128);
        let mut r = rng(4);
        for k in [0, -3] {
            let fs = [0; 3].map(|_| random_bandlimited(grid, 15, &mut r));
            let phi = [0, 1, 2].map(|j| l1_bump(grid, k, 0.2, j as i64));
            let rep = verify_calc2(&fs, &phi, k).unwrap();
            assert!(rep.relative < 1e-10, "k={k}: {rep:?}");
        }
        assert!(verify_calc2(
            &[0; 3].map(|_| random_bandlimited(grid, 3, &mut r)),
            &[0; 3].map(|_| indicator_bump(grid, 0)),
            -8
        )
        .is_err());
    }

    #[test]
    fn calc3_zero_and_random() {
        let grid = g(128);
        let mut r = rng(5);
        let mut f = [0; 4].map(|_| random_bandlimited(grid, 10, &mut r));
        let psi = [(5, 1), (2, 2), (2, -1), (5, -2), (5, 0), (2, 0)].map(|(k, m)| l1_bump(grid, -k, 0.15, m));
        let rep = verify_calc3(&psi, &f, 5, 2, 2).unwrap();
        assert!(rep.relative < 1e-9, "{rep:?}");
        assert!(rep.lhs.norm() > 1e-8);
        f[2] = SampledFunction::zeros(grid);
        let rep = verify_calc3(&psi, &f, 5, 2, 2).unwrap();
        assert!(rep.lhs.norm() == 0.0 && rep.rhs.norm() < 1e-15);
        assert!(verify_calc3(&psi, &f, 3, 2, 2).is_err());
    }

    #[test]
    fn calc3_pure_modes() {
        let grid = g(64);
        let m = [6i64, -2, 1, -5];
        let f = m.map(|k| SampledFunction::pure_mode(grid, k));
        let psi = [(4, 1), (1, 0), (1, 1), (4, -1), (4, 0), (1, 0)].map(|(k, mm)| l1_bump(grid, -k, 0.2, mm));
        let rep = verify_calc3(&psi, &f, 4, 1, 2).unwrap();
        let ph = [0, 1, 2, 3, 4, 5].map(|i| dft(&psi[i]));
        let want = ph[0].get(6) * ph[1].get(-2) * ph[2].get(1) * ph[3].get(-5) * ph[4].get(1) * ph[5].get(-1);
        assert!((rep.lhs - want).norm() < 1e-15);
        assert!(rep.deviation < 1e-12 * want.norm().max(1e-3), "{rep:?}");
    }

    #[test]
    fn small_suite_is_exact() {
        let s = identity_suite(g(64), 9, 2).unwrap();
        let (a, b, c) = s.worst();
        assert!(a < 1e-10 && b < 1e-10 && c < 1e-9, "{a} {b} {c}");
    }
}
