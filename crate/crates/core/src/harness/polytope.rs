//! The polytopes D and D̃ in the hyperplane S = {α₁+α₂+α₃+α₄ = 1}.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio, Rational64};
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lp::{maximize, LpOutcome};
use crate::error::{FppError, Result};
use crate::size_energy::parse_rational;

/// Point α of S, stored exactly. α_i = 1/p_i for i ≤ 3 and α₄ = 1/p₄′, the
/// exponents of |E_i| in the restricted weak type bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentTuple([Rational64; 4]);

impl ExponentTuple {
    pub fn new(alpha: [Rational64; 4]) -> Result<Self> {
        let s: Rational64 = alpha.iter().sum();
        if s != Rational64::one() {
            return Err(FppError::OffHyperplane(s.to_string()));
        }
        Ok(Self(alpha))
    }

    pub fn from_ints(v: [i64; 4], den: i64) -> Result<Self> {
        Self::new(v.map(|x| Rational64::new(x, den)))
    }

    pub fn coords(&self) -> [Rational64; 4] {
        self.0
    }

    pub fn to_f64(&self) -> [f64; 4] {
        self.0.map(|r| *r.numer() as f64 / *r.denom() as f64)
    }
}

impl FromStr for ExponentTuple {
    type Err = FppError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<Rational64> = s.split(',').map(|p| parse_rational(p.trim())).collect::<Result<_>>()?;
        let arr: [Rational64; 4] = parts
            .try_into()
            .map_err(|_| FppError::Parse(format!("expected four coordinates in {s:?}")))?;
        Self::new(arr)
    }
}

impl fmt::Display for ExponentTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "({a}, {b}, {c}, {d})")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vertex {
    A11,
    A12,
    A21,
    A22,
    A31,
    A32,
    A4,
}

impl Vertex {
    pub const ALL: [Vertex; 7] = [
        Vertex::A11,
        Vertex::A12,
        Vertex::A21,
        Vertex::A22,
        Vertex::A31,
        Vertex::A32,
        Vertex::A4,
    ];

    pub fn coords(self) -> [i64; 4] {
        match self {
            Vertex::A11 => [-1, 1, 1, 0],
            Vertex::A12 => [-1, 1, 0, 1],
            Vertex::A21 => [1, -1, 1, 0],
            Vertex::A22 => [0, 0, 0, 1],
            Vertex::A31 => [1, 1, -1, 0],
            Vertex::A32 => [0, 1, -1, 1],
            Vertex::A4 => [1, 1, 1, -2],
        }
    }

    pub fn point(self) -> ExponentTuple {
        ExponentTuple::from_ints(self.coords(), 1).expect("vertices lie on S")
    }

    /// Index (1-based) of the set that carries the major subset: 4 for A₄,
    /// i for A_{ij} (the adjoint T^{*i} swaps slots i and 4).
    pub fn designated(self) -> usize {
        match self {
            Vertex::A11 | Vertex::A12 => 1,
            Vertex::A21 | Vertex::A22 => 2,
            Vertex::A31 | Vertex::A32 => 3,
            Vertex::A4 => 4,
        }
    }
}

impl FromStr for Vertex {
    type Err = FppError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "A11" => Vertex::A11,
            "A12" => Vertex::A12,
            "A21" => Vertex::A21,
            "A22" => Vertex::A22,
            "A31" => Vertex::A31,
            "A32" => Vertex::A32,
            "A4" => Vertex::A4,
            _ => return Err(FppError::Parse(format!("unknown vertex {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polytope {
    D,
    DTilde,
}

impl Polytope {
    pub fn vertices(self) -> Vec<[i64; 4]> {
        match self {
            Polytope::D => Vertex::ALL.iter().map(|v| v.coords()).collect(),
            Polytope::DTilde => vec![[0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [1, 1, 1, -2]],
        }
    }

    /// Average of the vertices (interior: both hulls are full-dimensional in S).
    pub fn centroid(self) -> ExponentTuple {
        let vs = self.vertices();
        let k = vs.len() as i64;
        let mut s = [0i64; 4];
        for v in &vs {
            for i in 0..4 {
                s[i] += v[i];
            }
        }
        ExponentTuple::from_ints(s, k).expect("centroid lies on S")
    }
}

impl FromStr for Polytope {
    type Err = FppError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" | "d" => Ok(Polytope::D),
            "DTilde" | "Dtilde" | "dtilde" | "D~" | "D̃" => Ok(Polytope::DTilde),
            _ => Err(FppError::Parse(format!("unknown polytope {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Interior,
    Boundary,
    Outside,
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Membership::Interior => "interior",
            Membership::Boundary => "boundary",
            Membership::Outside => "outside",
        })
    }
}

fn big(r: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn bigi(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact classification. The relative interior of a hull is the set of strictly
/// positive convex combinations of all its vertices, so with λ_i = t + μ_i,
/// μ ≥ 0, t ≥ 0 we maximize t: infeasible ⇒ outside, t* > 0 ⇒ interior,
/// t* = 0 ⇒ boundary. The fourth coordinate follows from Σ = 1 and is dropped.
pub fn polytope_membership(q: &ExponentTuple, which: Polytope) -> Membership {
    let vs = which.vertices();
    let k = vs.len();
    // Columns: μ_1..μ_k, t.
    let mut a = Vec::with_capacity(4);
    let mut b = Vec::with_capacity(4);
    let mut row: Vec<BigRational> = vec![BigRational::one(); k];
    row.push(bigi(k as i64));
    a.push(row);
    b.push(BigRational::one());
    let qc = q.coords();
    for c in 0..3 {
        let mut row: Vec<BigRational> = vs.iter().map(|v| bigi(v[c])).collect();
        row.push(bigi(vs.iter().map(|v| v[c]).sum()));
        a.push(row);
        b.push(big(qc[c]));
    }
    let mut obj = vec![BigRational::zero(); k];
    obj.push(BigRational::one());
    match maximize(&a, &b, &obj) {
        LpOutcome::Infeasible => Membership::Outside,
        LpOutcome::Optimal { value, .. } if value.is_positive() => Membership::Interior,
        LpOutcome::Optimal { .. } => Membership::Boundary,
        LpOutcome::Unbounded => unreachable!("t is bounded by 1/k"),
    }
}

/// vertex + offset·(centroid of D − vertex).
pub fn near_vertex(v: Vertex, offset: Rational64) -> Result<ExponentTuple> {
    if offset <= Rational64::zero() || offset >= Rational64::one() {
        return Err(FppError::InvalidConfig(format!("offset {offset} must lie in (0,1)")));
    }
    let c = Polytope::D.centroid().coords();
    let p = v.point().coords();
    let mut out = [Rational64::zero(); 4];
    for i in 0..4 {
        out[i] = p[i] + offset * (c[i] - p[i]);
    }
    ExponentTuple::new(out)
}

/// Barycentric classification through simplices: every 4 affinely independent
/// vertices give a simplex, and the simplices cover the hull. Along the ray
/// c + s(q − c) from the centroid c, each simplex contains an interval of s on
/// which its barycentric coordinates are nonnegative; with s* the largest
/// endpoint, q is interior iff s* > 1, on the boundary iff s* = 1.
pub fn barycentric_membership(q: &ExponentTuple, which: Polytope) -> Membership {
    type Q = Ratio<i128>;
    let vs: Vec<[Q; 3]> = which
        .vertices()
        .iter()
        .map(|v| [Q::from(v[0] as i128), Q::from(v[1] as i128), Q::from(v[2] as i128)])
        .collect();
    let cast = |t: &ExponentTuple| {
        let c = t.coords();
        [0, 1, 2].map(|i| Q::new(*c[i].numer() as i128, *c[i].denom() as i128))
    };
    let c = cast(&which.centroid());
    let q = cast(q);
    if q == c {
        return Membership::Interior;
    }
    let det3 = |m: [[Q; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    // Barycentric coordinates of x in the simplex (v0, v1, v2, v3) by Cramer's rule.
    let bary = |s: &[usize; 4], x: &[Q; 3]| -> Option<[Q; 4]> {
        let v0 = vs[s[0]];
        let cols: [[Q; 3]; 3] = [1, 2, 3].map(|k| [0, 1, 2].map(|r| vs[s[k]][r] - v0[r]));
        let rhs = [0, 1, 2].map(|r| x[r] - v0[r]);
        let m = |cs: [[Q; 3]; 3]| [0, 1, 2].map(|r| [cs[0][r], cs[1][r], cs[2][r]]);
        let d = det3(m(cols));
        if d.is_zero() {
            return None;
        }
        let mut out = [Q::zero(); 4];
        for k in 0..3 {
            let mut cs = cols;
            cs[k] = rhs;
            out[k + 1] = det3(m(cs)) / d;
        }
        out[0] = Q::one() - out[1] - out[2] - out[3];
        Some(out)
    };
    let n = vs.len();
    let mut best: Option<Q> = None;
    for a in 0..n {
        for b in a + 1..n {
            for cc in b + 1..n {
                for d in cc + 1..n {
                    let s = [a, b, cc, d];
                    let (Some(bc), Some(bq)) = (bary(&s, &c), bary(&s, &q)) else {
                        continue;
                    };
                    // β(s) = bc + s(bq − bc) ≥ 0 componentwise.
                    let (mut lo, mut hi): (Option<Q>, Option<Q>) = (None, None);
                    let mut empty = false;
                    for i in 0..4 {
                        let slope = bq[i] - bc[i];
                        if slope.is_zero() {
                            empty |= bc[i].is_negative();
                        } else {
                            let root = -bc[i] / slope;
                            if slope.is_positive() {
                                lo = Some(lo.map_or(root, |l: Q| l.max(root)));
                            } else {
                                hi = Some(hi.map_or(root, |h: Q| h.min(root)));
                            }
                        }
                    }
                    let hi = hi.expect("a bounded simplex meets the ray in a bounded interval");
                    if empty || lo.is_some_and(|l| l > hi) {
                        continue;
                    }
                    best = Some(best.map_or(hi, |b: Q| b.max(hi)));
                }
            }
        }
    }
    let one = Q::one();
    match best {
        Some(s) if s > one => Membership::Interior,
        Some(s) if s == one => Membership::Boundary,
        _ => Membership::Outside,
    }
}

/// Exhaustive table over the weight grid: every composition of `den` into one
/// part per vertex, keyed by the integer point Σ n_i v_i (first three
/// coordinates), with whether some composition reaching it has all parts
/// positive. A hit is a certificate (nonnegative weights: in the closed hull;
/// positive weights: interior), a miss proves nothing about interiority, since
/// interior points close to a face may need finer weights.
pub struct GridOracle {
    den: i64,
    table: HashMap<[i64; 3], bool>,
}

impl GridOracle {
    pub fn new(which: Polytope, den: u32) -> Self {
        let vs = which.vertices();
        let mut table = HashMap::new();
        let mut parts = vec![0i64; vs.len()];
        fn rec(idx: usize, left: i64, parts: &mut Vec<i64>, vs: &[[i64; 4]], table: &mut HashMap<[i64; 3], bool>) {
            if idx + 1 == parts.len() {
                parts[idx] = left;
                let mut key = [0i64; 3];
                for (n, v) in parts.iter().zip(vs) {
                    for c in 0..3 {
                        key[c] += n * v[c];
                    }
                }
                let pos = parts.iter().all(|&n| n > 0);
                let e = table.entry(key).or_insert(false);
                *e |= pos;
                return;
            }
            for n in 0..=left {
                parts[idx] = n;
                rec(idx + 1, left - n, parts, vs, table);
            }
        }
        rec(0, den as i64, &mut parts, &vs, &mut table);
        Self { den: den as i64, table }
    }

    /// Strongest membership certified by the grid: Interior, Boundary (closed
    /// hull only) or Outside when no composition reaches q.
    pub fn classify(&self, q: &ExponentTuple) -> Result<Membership> {
        let mut key = [0i64; 3];
        for (c, r) in q.coords().iter().take(3).enumerate() {
            let scaled = *r * Rational64::from_integer(self.den);
            if !scaled.is_integer() {
                return Err(FppError::Precondition(format!(
                    "{q} is not on the 1/{} lattice",
                    self.den
                )));
            }
            key[c] = scaled.to_integer();
        }
        Ok(match self.table.get(&key) {
            None => Membership::Outside,
            Some(true) => Membership::Interior,
            Some(false) => Membership::Boundary,
        })
    }

    /// Whether `m` is consistent with what the grid certifies about q.
    pub fn consistent(&self, q: &ExponentTuple, m: Membership) -> Result<bool> {
        Ok(match self.classify(q)? {
            Membership::Interior => m == Membership::Interior,
            Membership::Boundary => m != Membership::Outside,
            Membership::Outside => true,
        })
    }
}

/// Random point of S of the form (1/den)·Σ w_i v_i with Σ w_i = den. Weights
/// start as a random composition over a random subset of the vertices (so faces
/// are hit); `perturb` then moves integer mass between random vertices,
/// possibly making weights negative.
pub fn random_lattice_point(which: Polytope, den: i64, perturb: i64, rng: &mut impl Rng) -> ExponentTuple {
    let vs = which.vertices();
    let k = vs.len();
    let support: Vec<usize> = (0..rng.gen_range(1..=k)).map(|_| rng.gen_range(0..k)).collect();
    let mut w = vec![0i64; k];
    for _ in 0..den {
        w[support[rng.gen_range(0..support.len())]] += 1;
    }
    if perturb > 0 {
        let m = rng.gen_range(0..=perturb);
        let (i, j) = (rng.gen_range(0..k), rng.gen_range(0..k));
        w[i] -= m;
        w[j] += m;
    }
    let mut s = [0i64; 4];
    for (n, v) in w.iter().zip(&vs) {
        for c in 0..4 {
            s[c] += n * v[c];
        }
    }
    ExponentTuple::from_ints(s, den).expect("affine combination stays on S")
}

/// Strictly positive rational combination of the vertices of `which`.
pub fn random_interior_point(which: Polytope, den: i64, rng: &mut impl Rng) -> ExponentTuple {
    let vs = which.vertices();
    let k = vs.len() as i64;
    assert!(den >= k, "need at least one unit of weight per vertex");
    let mut w = vec![1i64; vs.len()];
    for _ in 0..den - k {
        w[rng.gen_range(0..vs.len())] += 1;
    }
    let mut s = [0i64; 4];
    for (n, v) in w.iter().zip(&vs) {
        for c in 0..4 {
            s[c] += n * v[c];
        }
    }
    ExponentTuple::from_ints(s, den).expect("convex combination stays on S")
}
