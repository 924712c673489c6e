use serde::{Deserialize, Serialize};

use super::windows::WindowSystem;
use crate::error::{FppError, Result};
use crate::jet::JET_ORDER;

/// Where (ξ₂, ξ₃) ranges when measuring the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaylorRegion {
    /// Both variables over the whole b-support, |ξ_i| ≤ (M+δ)·2^{k″}.
    #[default]
    FullSupport,
    /// ξ₃ restricted to the support of the window j″₂ = 1.
    UnitWindow,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaylorSplit {
    pub m_tilde: usize,
    pub k_a: i32,
    pub k_b: i32,
    pub region: TaylorRegion,
    /// sup |l-th term| / (2^{k″−k′})^l for l = 0..M̃−1.
    pub main_normalized: Vec<f64>,
    pub remainder_sup: f64,
    /// remainder_sup / (2^{k″−k′})^{M̃}.
    pub constant: f64,
    /// max |Σ main + remainder − product| over the samples, product being
    /// Ψ̂_{j′₂}(2^{−k′}ξ₂)·Ψ̂_{j″₁}(2^{−k″}ξ₂)·Ψ̂_{j″₂}(2^{−k″}ξ₃).
    pub identity_deviation: f64,
    /// max |l=0 term − Ψ̂_{j′₂}(2^{−k′}ξ₂)| over samples with ξ₃ = 0.
    pub expansion_point_deviation: f64,
}

/// Expand ξ₂ ↦ Ψ̂_{1}(2^{−k′}ξ₂) about ξ₂+ξ₃:
/// Ψ̂(2^{−k′}ξ₂) = Σ_{l<M̃} (−ξ₃)^l/l!·∂^l[Ψ̂(2^{−k′}·)](ξ₂+ξ₃) + R.
/// The a-window index in the shared variable is j′₂ = 1, the only sign that
/// can meet the b-windows once k′ ≥ k″ + #.
pub fn taylor_split(
    ws: &WindowSystem,
    m_tilde: usize,
    k_a: i32,
    k_b: i32,
    region: TaylorRegion,
    samples: usize,
) -> Result<TaylorSplit> {
    if !(1..JET_ORDER).contains(&m_tilde) {
        return Err(FppError::InvalidConfig(format!(
            "Taylor order {m_tilde} outside 1..{JET_ORDER}"
        )));
    }
    if k_a < k_b + 2 {
        return Err(FppError::Precondition(format!(
            "k' = {k_a} needs k' >= k'' + 2 = {}",
            k_b + 2
        )));
    }
    if samples < 2 {
        return Err(FppError::InvalidConfig("need at least two samples per axis".into()));
    }
    let m = ws.m() as f64;
    let d = ws.margin();
    let sb = 2f64.powi(k_b);
    let sa = 2f64.powi(k_a);
    let ratio = 2f64.powi(k_b - k_a);
    let full = ((-(m + d)) * sb, (m + d) * sb);
    let x3_range = match region {
        TaylorRegion::FullSupport => full,
        TaylorRegion::UnitWindow => {
            let (lo, hi) = ws.support(1);
            (lo * sb, hi * sb)
        }
    };
    let grid = |(lo, hi): (f64, f64), include_zero: bool| -> Vec<f64> {
        let mut v: Vec<f64> = (0..samples)
            .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
            .collect();
        if include_zero {
            v.push(0.0);
        }
        v
    };
    let xs2 = grid(full, false);
    let xs3 = grid(x3_range, true);
    let mut main_sup = vec![0.0_f64; m_tilde];
    let mut remainder_sup = 0.0_f64;
    let mut identity_deviation = 0.0_f64;
    let mut expansion_point_deviation = 0.0_f64;
    // Any b-window pair covering the point serves for the identity check.
    let b_window = |x: f64| ws.active(x / sb).iter().map(|(_, w)| w).fold(0.0, f64::max);
    for &x2 in &xs2 {
        let f = ws.window(1, x2 / sa);
        let w2 = b_window(x2);
        for &x3 in &xs3 {
            let jet = ws.window_jet(1, (x2 + x3) / sa);
            let mut sum = 0.0;
            let mut pow = 1.0;
            for (l, sup) in main_sup.iter_mut().enumerate() {
                // c_l = Ψ̂^{(l)}/l! at 2^{−k′}(ξ₂+ξ₃); the chain rule brings 2^{−lk′}.
                let term = pow * jet.c[l] / sa.powi(l as i32);
                *sup = sup.max(term.abs());
                sum += term;
                pow *= -x3;
            }
            if x3 == 0.0 {
                let l0 = jet.c[0];
                expansion_point_deviation = expansion_point_deviation.max((l0 - f).abs());
            }
            let rem = f - sum;
            remainder_sup = remainder_sup.max(rem.abs());
            let others = w2 * b_window(x3);
            identity_deviation = identity_deviation.max(((sum + rem) * others - f * others).abs());
        }
    }
    let main_normalized = main_sup
        .iter()
        .enumerate()
        .map(|(l, s)| s / ratio.powi(l as i32))
        .collect();
    Ok(TaylorSplit {
        m_tilde,
        k_a,
        k_b,
        region,
        main_normalized,
        remainder_sup,
        constant: remainder_sup / ratio.powi(m_tilde as i32),
        identity_deviation,
        expansion_point_deviation,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoScale {
    pub m_tilde: usize,
    pub region: TaylorRegion,
    pub gaps: (i32, i32),
    pub remainders: (f64, f64),
    pub ratio: f64,
    pub expected: f64,
    /// |ratio/expected − 1|.
    pub relative_deviation: f64,
}

/// Remainder ratio between gaps k′−k″ = g₁ and g₀, expected 2^{−M̃(g₁−g₀)}.
pub fn taylor_two_scale(
    ws: &WindowSystem,
    m_tilde: usize,
    gaps: (i32, i32),
    region: TaylorRegion,
    samples: usize,
) -> Result<TwoScale> {
    let r0 = taylor_split(ws, m_tilde, gaps.0, 0, region, samples)?.remainder_sup;
    let r1 = taylor_split(ws, m_tilde, gaps.1, 0, region, samples)?.remainder_sup;
    let ratio = r1 / r0;
    let expected = 2f64.powi(-(m_tilde as i32) * (gaps.1 - gaps.0));
    Ok(TwoScale {
        m_tilde,
        region,
        gaps,
        remainders: (r0, r1),
        ratio,
        expected,
        relative_deviation: (ratio / expected - 1.0).abs(),
    })
}
