//! Symbols on integer frequency tuples: the constant symbol, tabulated or
//! closed-form Mihlin symbols, and flag products a(ξ₁,ξ₂)·b(ξ₂,ξ₃).

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomposition::WindowSystem;
use crate::error::{FppError, Result};

/// Values on the centered box Π_i {−shape_i/2, …, shape_i/2 − 1}, row-major
/// with the last coordinate fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    shape: Vec<usize>,
    values: Vec<Complex64>,
}

impl SymbolTable {
    pub fn new(shape: Vec<usize>, values: Vec<Complex64>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 3 {
            return Err(FppError::InvalidConfig(format!(
                "table arity {} not in 1..=3",
                shape.len()
            )));
        }
        if shape.iter().any(|&s| s == 0 || s % 2 != 0) {
            return Err(FppError::InvalidConfig(format!(
                "table shape {shape:?} must be even and nonzero"
            )));
        }
        let len: usize = shape.iter().product();
        if values.len() != len {
            return Err(FppError::InvalidConfig(format!(
                "table has {} values, shape needs {len}",
                values.len()
            )));
        }
        Ok(Self { shape, values })
    }

    /// Tabulate `f` on the box {−h, …, h−1}^d.
    pub fn tabulate(d: usize, half: usize, mut f: impl FnMut(&[i64]) -> Complex64) -> Result<Self> {
        let shape = vec![2 * half; d];
        let len: usize = shape.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut xi = vec![0i64; d];
        for flat in 0..len {
            let mut rem = flat;
            for axis in (0..d).rev() {
                xi[axis] = (rem % shape[axis]) as i64 - half as i64;
                rem /= shape[axis];
            }
            values.push(f(&xi));
        }
        Self::new(shape, values)
    }

    pub fn arity(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn contains(&self, xi: &[i64]) -> bool {
        xi.iter().zip(&self.shape).all(|(&x, &s)| {
            let h = (s / 2) as i64;
            x >= -h && x < h
        })
    }

    /// Largest r with {−r..r}^d inside the table.
    pub fn radius(&self) -> i64 {
        self.shape.iter().map(|&s| (s / 2) as i64 - 1).min().unwrap_or(0)
    }

    pub fn get(&self, xi: &[i64]) -> Result<Complex64> {
        if xi.len() != self.shape.len() {
            return Err(FppError::ArityMismatch {
                expected: self.shape.len(),
                got: xi.len(),
            });
        }
        let mut flat = 0usize;
        for (&x, &s) in xi.iter().zip(&self.shape) {
            let h = (s / 2) as i64;
            if x < -h || x >= h {
                return Err(FppError::FrequencyOutOfRange { xi: x });
            }
            flat = flat * s + (x + h) as usize;
        }
        Ok(self.values[flat])
    }
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    d: usize,
    shape: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for SymbolTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableJson {
            d: self.arity(),
            shape: self.shape.clone(),
            re: self.values.iter().map(|z| z.re).collect(),
            im: self.values.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymbolTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = TableJson::deserialize(d)?;
        if j.d != j.shape.len() || j.re.len() != j.im.len() {
            return Err(D::Error::custom("inconsistent symbol table"));
        }
        let values = j.re.iter().zip(&j.im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        SymbolTable::new(j.shape, values).map_err(D::Error::custom)
    }
}

/// Closed-form symbols, evaluable at real arguments.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    /// exp(cos(θ − θ₀) − 1), θ the polar angle of (ξ₁,ξ₂).
    AngularBump { theta0: f64 },
    /// exp(i·sin θ).
    AngularPhase,
    /// ξ₁²/(ξ₁²+ξ₂²), zero at the origin.
    Ratio,
    /// ξ₁², unbounded.
    Square,
    /// The partition symbol ã of the window system.
    Atilde(WindowSystem),
    /// One partition member (1/Q)Σ_q Ψ̂_{j₁}Ψ̂_{j₂}.
    Member(WindowSystem, i64, i64),
    /// Constant value.
    Constant(Complex64),
}

impl Formula {
    pub fn arity(&self) -> usize {
        2
    }

    pub fn eval_real(&self, x: &[f64]) -> Complex64 {
        let (x1, x2) = (x[0], x[1]);
        match self {
            Formula::AngularBump { theta0 } => {
                if x1 == 0.0 && x2 == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let th = x2.atan2(x1);
                Complex64::new(((th - theta0).cos() - 1.0).exp(), 0.0)
            }
            Formula::AngularPhase => {
                if x1 == 0.0 && x2 == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let s = x2 / x1.hypot(x2);
                Complex64::from_polar(1.0, s)
            }
            Formula::Ratio => {
                let den = x1 * x1 + x2 * x2;
                if den == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(x1 * x1 / den, 0.0)
                }
            }
            Formula::Square => Complex64::new(x1 * x1, 0.0),
            Formula::Atilde(w) => Complex64::new(w.atilde(x1, x2), 0.0),
            Formula::Member(w, j1, j2) => Complex64::new(w.member(*j1, *j2, x1, x2), 0.0),
            Formula::Constant(c) => *c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Trivial,
    Tabulated,
    Flag,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymbolSpec {
    Trivial {
        arity: usize,
    },
    Table(Arc<SymbolTable>),
    Formula(Arc<Formula>),
    /// m(c·ξ) for an integer factor c.
    Dilated {
        inner: Arc<SymbolSpec>,
        factor: i64,
    },
    Flag {
        a: Arc<SymbolSpec>,
        b: Arc<SymbolSpec>,
    },
}

impl SymbolSpec {
    pub fn trivial(arity: usize) -> Self {
        SymbolSpec::Trivial { arity }
    }

    pub fn table(t: SymbolTable) -> Self {
        SymbolSpec::Table(Arc::new(t))
    }

    pub fn formula(f: Formula) -> Self {
        SymbolSpec::Formula(Arc::new(f))
    }

    pub fn flag(a: SymbolSpec, b: SymbolSpec) -> Result<Self> {
        if a.arity() != 2 || b.arity() != 2 {
            return Err(FppError::InvalidConfig("flag factors must both have arity 2".into()));
        }
        Ok(SymbolSpec::Flag {
            a: Arc::new(a),
            b: Arc::new(b),
        })
    }

    pub fn dilated(&self, factor: i64) -> Self {
        SymbolSpec::Dilated {
            inner: Arc::new(self.clone()),
            factor,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            SymbolSpec::Trivial { arity } => *arity,
            SymbolSpec::Table(t) => t.arity(),
            SymbolSpec::Formula(f) => f.arity(),
            SymbolSpec::Dilated { inner, .. } => inner.arity(),
            SymbolSpec::Flag { .. } => 3,
        }
    }

    pub fn kind(&self) -> SymbolKind {
        match self {
            SymbolSpec::Trivial { .. } => SymbolKind::Trivial,
            SymbolSpec::Flag { .. } => SymbolKind::Flag,
            _ => SymbolKind::Tabulated,
        }
    }

    pub fn flag_factors(&self) -> Option<(&SymbolSpec, &SymbolSpec)> {
        match self {
            SymbolSpec::Flag { a, b } => Some((a, b)),
            _ => None,
        }
    }

    /// Whether the symbol can be evaluated off the integer lattice.
    pub fn is_real_evaluable(&self) -> bool {
        match self {
            SymbolSpec::Trivial { .. } | SymbolSpec::Formula(_) => true,
            SymbolSpec::Table(_) => false,
            SymbolSpec::Dilated { inner, .. } => inner.is_real_evaluable(),
            SymbolSpec::Flag { a, b } => a.is_real_evaluable() && b.is_real_evaluable(),
        }
    }

    /// m(2ξ) = m(ξ) holds exactly (all closed forms here except `Square`).
    pub fn is_dilation_invariant(&self) -> bool {
        match self {
            SymbolSpec::Trivial { .. } => true,
            SymbolSpec::Table(_) => false,
            SymbolSpec::Formula(f) => !matches!(**f, Formula::Square),
            SymbolSpec::Dilated { inner, .. } => inner.is_dilation_invariant(),
            SymbolSpec::Flag { a, b } => a.is_dilation_invariant() && b.is_dilation_invariant(),
        }
    }

    pub fn eval(&self, xi: &[i64]) -> Result<Complex64> {
        if xi.len() != self.arity() {
            return Err(FppError::ArityMismatch {
                expected: self.arity(),
                got: xi.len(),
            });
        }
        Ok(match self {
            SymbolSpec::Trivial { .. } => Complex64::new(1.0, 0.0),
            SymbolSpec::Table(t) => t.get(xi)?,
            SymbolSpec::Formula(f) => {
                let x: Vec<f64> = xi.iter().map(|&v| v as f64).collect();
                f.eval_real(&x)
            }
            SymbolSpec::Dilated { inner, factor } => {
                let y: Vec<i64> = xi.iter().map(|&v| v * factor).collect();
                inner.eval(&y)?
            }
            SymbolSpec::Flag { a, b } => a.eval(&xi[0..2])? * b.eval(&xi[1..3])?,
        })
    }

    pub fn eval_real(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.arity() {
            return Err(FppError::ArityMismatch {
                expected: self.arity(),
                got: x.len(),
            });
        }
        Ok(match self {
            SymbolSpec::Trivial { .. } => Complex64::new(1.0, 0.0),
            SymbolSpec::Table(_) => {
                return Err(FppError::InvalidConfig(
                    "tabulated symbols have no off-lattice values".into(),
                ))
            }
            SymbolSpec::Formula(f) => f.eval_real(x),
            SymbolSpec::Dilated { inner, factor } => {
                let y: Vec<f64> = x.iter().map(|&v| v * *factor as f64).collect();
                inner.eval_real(&y)?
            }
            SymbolSpec::Flag { a, b } => a.eval_real(&x[0..2])? * b.eval_real(&x[1..3])?,
        })
    }

    /// Tabulate on {−half, …, half−1}^d.
    pub fn tabulate(&self, half: usize) -> Result<SymbolTable> {
        let d = self.arity();
        let mut err = None;
        let t = SymbolTable::tabulate(d, half, |xi| match self.eval(xi) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        });
        match err {
            Some(e) => Err(e),
            None => t,
        }
    }
}

/// evaluate m(ξ); flag symbols return a(ξ₁,ξ₂)·b(ξ₂,ξ₃).
pub fn eval_symbol(m: &SymbolSpec, xi: &[i64]) -> Result<Complex64> {
    m.eval(xi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaConstant {
    pub alpha: Vec<usize>,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MihlinReport {
    pub max_order: usize,
    pub budget: f64,
    /// Box {−radius..radius}^d that was scanned.
    pub radius: i64,
    /// Stencils stay outside {|ξ|_∞ < min_radius}.
    pub min_radius: i64,
    pub constants: Vec<AlphaConstant>,
    pub pass: bool,
}

impl MihlinReport {
    pub fn max_constant(&self) -> f64 {
        self.constants.iter().fold(0.0, |m, c| m.max(c.constant))
    }

    pub fn constant_for(&self, alpha: &[usize]) -> Option<f64> {
        self.constants.iter().find(|c| c.alpha == alpha).map(|c| c.constant)
    }
}

/// Default scan radius for symbols that are not tables.
pub const DEFAULT_MIHLIN_RADIUS: i64 = 64;
pub const MIHLIN_EXCLUDED: i64 = 4;
/// Budget used for the catalog and for derived symbols unless overridden.
pub const DEFAULT_MIHLIN_BUDGET: f64 = 50.0;

/// Mihlin check on the symbol's natural box: the table box for tables,
/// otherwise {−64..64}^d (reduced for d = 3).
pub fn mihlin_check(m: &SymbolSpec, max_order: usize, budget: f64) -> Result<MihlinReport> {
    let radius = match m {
        SymbolSpec::Table(t) => t.radius(),
        _ if m.arity() == 3 => 16,
        _ => DEFAULT_MIHLIN_RADIUS,
    };
    mihlin_check_on(m, max_order, budget, radius, MIHLIN_EXCLUDED)
}

/// sup_ξ |ξ|^{|α|}·|Δ^α m(ξ)| for all |α| ≤ max_order, Δ the unit central
/// difference (f(x+1) − f(x−1))/2 applied α_i times along axis i. Points whose
/// stencil leaves the box or enters {|ξ|_∞ < min_radius} are skipped.
pub fn mihlin_check_on(
    m: &SymbolSpec,
    max_order: usize,
    budget: f64,
    radius: i64,
    min_radius: i64,
) -> Result<MihlinReport> {
    if max_order > 4 {
        return Err(FppError::InvalidConfig(format!("max_order {max_order} > 4")));
    }
    let d = m.arity();
    let side = (2 * radius + 1) as usize;
    let len = side.pow(d as u32);
    let mut vals = Vec::with_capacity(len);
    let mut xi = vec![0i64; d];
    for flat in 0..len {
        unflatten(flat, side, radius, &mut xi);
        vals.push(m.eval(&xi)?);
    }
    let mut constants = Vec::new();
    for alpha in multi_indices(d, max_order) {
        let order: usize = alpha.iter().sum();
        let stencil = stencil(&alpha);
        let reach: Vec<i64> = alpha.iter().map(|&a| a as i64).collect();
        let mut sup = 0.0_f64;
        for flat in 0..len {
            unflatten(flat, side, radius, &mut xi);
            if xi.iter().zip(&reach).any(|(&x, &r)| x - r < -radius || x + r > radius) {
                continue;
            }
            if !stencil_clear(&xi, &reach, min_radius) {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (offs, w) in &stencil {
                let mut f = 0usize;
                for (axis, &x) in xi.iter().enumerate() {
                    f = f * side + (x + offs[axis] + radius) as usize;
                }
                acc += vals[f] * *w;
            }
            let norm = xi.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
            sup = sup.max(norm.powi(order as i32) * acc.norm());
        }
        constants.push(AlphaConstant { alpha, constant: sup });
    }
    let pass = constants.iter().all(|c| c.constant.is_finite() && c.constant <= budget);
    Ok(MihlinReport {
        max_order,
        budget,
        radius,
        min_radius,
        constants,
        pass,
    })
}

fn unflatten(mut flat: usize, side: usize, radius: i64, xi: &mut [i64]) {
    for axis in (0..xi.len()).rev() {
        xi[axis] = (flat % side) as i64 - radius;
        flat /= side;
    }
}

/// True when every point of the stencil box around xi has |·|_∞ ≥ min_radius.
fn stencil_clear(xi: &[i64], reach: &[i64], min_radius: i64) -> bool {
    // The stencil box misses the excluded cube iff some axis separates them.
    xi.iter()
        .zip(reach)
        .any(|(&x, &r)| x - r >= min_radius || x + r <= -min_radius)
}

fn multi_indices(d: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; d];
    fn rec(axis: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if axis == cur.len() {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur[axis] = a;
            rec(axis + 1, left - a, cur, out);
        }
        cur[axis] = 0;
    }
    rec(0, max_order, &mut cur, &mut out);
    out.sort_by_key(|a| (a.iter().sum::<usize>(), a.clone()));
    out
}

/// Tensor stencil of Π_i δ_i^{α_i}, δ f(x) = (f(x+1) − f(x−1))/2.
fn stencil(alpha: &[usize]) -> Vec<(Vec<i64>, f64)> {
    let one_d: Vec<Vec<(i64, f64)>> = alpha
        .iter()
        .map(|&a| {
            (0..=a)
                .map(|k| {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let w = sign * binomial(a, k) / 2f64.powi(a as i32);
                    (a as i64 - 2 * k as i64, w)
                })
                .collect()
        })
        .collect();
    let mut out = vec![(Vec::new(), 1.0)];
    for axis in one_d {
        let mut next = Vec::new();
        for (offs, w) in &out {
            for &(o, v) in &axis {
                let mut o2 = offs.clone();
                o2.push(o);
                next.push((o2, w * v));
            }
        }
        out = next;
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Default window system behind the partition symbols of the catalog.
pub fn catalog_windows() -> WindowSystem {
    WindowSystem::new(8, 8).expect("static window parameters")
}

/// Named symbols. Names are stable CLI identifiers; `lookup` also parses
/// `flag(x,y)` and `part(j1,j2)`.
pub fn standard_symbols() -> Vec<(String, SymbolSpec)> {
    let w = catalog_windows();
    let mut out = vec![
        ("trivial".to_string(), SymbolSpec::trivial(3)),
        ("trivial2".to_string(), SymbolSpec::trivial(2)),
        (
            "homog0".to_string(),
            SymbolSpec::formula(Formula::AngularBump { theta0: 0.7 }),
        ),
        ("homog1".to_string(), SymbolSpec::formula(Formula::AngularPhase)),
        ("ratio".to_string(), SymbolSpec::formula(Formula::Ratio)),
        ("atilde".to_string(), SymbolSpec::formula(Formula::Atilde(w))),
        ("part(8,1)".to_string(), SymbolSpec::formula(Formula::Member(w, 8, 1))),
        ("part(-3,8)".to_string(), SymbolSpec::formula(Formula::Member(w, -3, 8))),
    ];
    for (a, b) in [
        ("homog0", "homog0"),
        ("homog0", "homog1"),
        ("ratio", "homog1"),
        ("trivial2", "trivial2"),
    ] {
        let name = format!("flag({a},{b})");
        let spec = lookup(&name).expect("catalog flag");
        out.push((name, spec));
    }
    out
}

/// Names of the catalog entries that are genuine arity-2 Mihlin symbols.
pub fn mihlin_catalog_names() -> Vec<&'static str> {
    vec!["homog0", "homog1", "ratio", "part(8,1)", "part(-3,8)"]
}

pub fn lookup(name: &str) -> Result<SymbolSpec> {
    let name = name.trim();
    if let Some(inner) = name.strip_prefix("flag(").and_then(|s| s.strip_suffix(')')) {
        let (a, b) =
            split_top_comma(inner).ok_or_else(|| FppError::Parse(format!("flag needs two arguments: {name}")))?;
        let a = lookup_arity2(a)?;
        let b = lookup_arity2(b)?;
        return SymbolSpec::flag(a, b);
    }
    if let Some(inner) = name.strip_prefix("part(").and_then(|s| s.strip_suffix(')')) {
        let (a, b) =
            split_top_comma(inner).ok_or_else(|| FppError::Parse(format!("part needs two indices: {name}")))?;
        let j1: i64 = a.trim().parse().map_err(|_| FppError::Parse(a.to_string()))?;
        let j2: i64 = b.trim().parse().map_err(|_| FppError::Parse(b.to_string()))?;
        let w = catalog_windows();
        let m = w.m() as i64;
        if j1 == 0 || j2 == 0 || j1.abs() > m || j2.abs() > m || j1.abs().max(j2.abs()) != m {
            return Err(FppError::Parse(format!("part({j1},{j2}) needs max(|j1|,|j2|) = {m}")));
        }
        return Ok(SymbolSpec::formula(Formula::Member(w, j1, j2)));
    }
    match name {
        "trivial" => Ok(SymbolSpec::trivial(3)),
        "trivial2" => Ok(SymbolSpec::trivial(2)),
        "homog0" => Ok(SymbolSpec::formula(Formula::AngularBump { theta0: 0.7 })),
        "homog1" => Ok(SymbolSpec::formula(Formula::AngularPhase)),
        "ratio" => Ok(SymbolSpec::formula(Formula::Ratio)),
        "square" => Ok(SymbolSpec::formula(Formula::Square)),
        "atilde" => Ok(SymbolSpec::formula(Formula::Atilde(catalog_windows()))),
        _ => Err(FppError::Parse(format!("unknown symbol {name}"))),
    }
}

fn lookup_arity2(name: &str) -> Result<SymbolSpec> {
    let name = name.trim();
    if name == "trivial" {
        return Ok(SymbolSpec::trivial(2));
    }
    let s = lookup(name)?;
    if s.arity() != 2 {
        return Err(FppError::ArityMismatch {
            expected: 2,
            got: s.arity(),
        });
    }
    Ok(s)
}

fn split_top_comma(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
    }
    None
}
