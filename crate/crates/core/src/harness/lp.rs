//! Exact linear programming over the rationals: maximize c·x subject to
//! A x = b, x ≥ 0, two-phase tableau simplex with Bland's rule (no cycling).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: BigRational, x: Vec<BigRational> },
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

struct Tableau {
    /// rows × (cols + 1); the last column is the right-hand side.
    t: Vec<Vec<BigRational>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        for v in self.t[r].iter_mut() {
            *v = &*v / &p;
        }
        let row = self.t[r].clone();
        for (i, other) in self.t.iter_mut().enumerate() {
            if i == r || other[c].is_zero() {
                continue;
            }
            let f = other[c].clone();
            for (v, w) in other.iter_mut().zip(&row) {
                *v = &*v - &f * w;
            }
        }
        self.basis[r] = c;
    }

    /// Reduced costs of objective `obj` (maximization) over allowed columns.
    fn reduced(&self, obj: &[BigRational], c: usize) -> BigRational {
        let mut z = BigRational::zero();
        for (r, &b) in self.basis.iter().enumerate() {
            if !obj[b].is_zero() && !self.t[r][c].is_zero() {
                z += &obj[b] * &self.t[r][c];
            }
        }
        &obj[c] - z
    }

    /// Bland: lowest-index improving column, ratio ties to the lowest basic index.
    fn optimize(&mut self, obj: &[BigRational], allowed: usize) -> bool {
        loop {
            let Some(c) = (0..allowed).find(|&c| !self.basis.contains(&c) && self.reduced(obj, c).is_positive()) else {
                return true;
            };
            let mut best: Option<(usize, BigRational)> = None;
            for r in 0..self.t.len() {
                if self.t[r][c].is_positive() {
                    let ratio = &self.t[r][self.cols] / &self.t[r][c];
                    let better = match &best {
                        None => true,
                        Some((br, bv)) => ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br]),
                    };
                    if better {
                        best = Some((r, ratio));
                    }
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

pub fn maximize(a: &[Vec<BigRational>], b: &[BigRational], c: &[BigRational]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    let cols = n + m;
    let mut t = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        let flip = b[i].is_negative();
        let sgn = |v: &BigRational| if flip { -v.clone() } else { v.clone() };
        let mut r: Vec<BigRational> = row.iter().map(sgn).collect();
        r.extend((0..m).map(|k| {
            if k == i {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        }));
        r.push(sgn(&b[i]));
        t.push(r);
    }
    let mut tab = Tableau {
        t,
        basis: (n..n + m).collect(),
        cols,
    };
    // Phase I: maximize −Σ artificials.
    let mut phase1 = vec![BigRational::zero(); cols];
    for v in &mut phase1[n..] {
        *v = -BigRational::one();
    }
    tab.optimize(&phase1, cols);
    let infeas: BigRational = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bv)| bv >= n)
        .map(|(r, _)| tab.t[r][cols].clone())
        .sum();
    if infeas.is_positive() {
        return LpOutcome::Infeasible;
    }
    // Drive zero-level artificials out of the basis; rows with no structural
    // entry are redundant and dropped.
    let mut r = 0;
    while r < tab.t.len() {
        if tab.basis[r] >= n {
            match (0..n).find(|&c| !tab.t[r][c].is_zero()) {
                Some(c) => tab.pivot(r, c),
                None => {
                    tab.t.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }
    let mut obj = c.to_vec();
    obj.extend((0..m).map(|_| BigRational::zero()));
    if !tab.optimize(&obj, n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![BigRational::zero(); n];
    for (r, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab.t[r][cols].clone();
        }
    }
    let value = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal { value, x }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> BigRational {
        rat(n, 1)
    }

    #[test]
    fn small_program() {
        // max x + y, x + 2y + s = 4, 3x + y + u = 6.
        let a = vec![vec![r(1), r(2), r(1), r(0)], vec![r(3), r(1), r(0), r(1)]];
        let out = maximize(&a, &[r(4), r(6)], &[r(1), r(1), r(0), r(0)]);
        match out {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, rat(14, 5));
                assert_eq!(x[0], rat(8, 5));
                assert_eq!(x[1], rat(6, 5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![vec![r(1), r(1)]];
        assert_eq!(maximize(&a, &[r(-1)], &[r(0), r(0)]), LpOutcome::Infeasible);
        let a = vec![vec![r(1), r(-1)]];
        assert_eq!(maximize(&a, &[r(1)], &[r(1), r(0)]), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let a = vec![vec![r(1), r(1)], vec![r(2), r(2)]];
        match maximize(&a, &[r(1), r(2)], &[r(1), r(0)]) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, r(1)),
            other => panic!("{other:?}"),
        }
    }
}
