//! Dense two-phase simplex for the tiny LPs of the dual node solves.
//!
//! Problems have the form
//! `min c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x_j >= 0 unless free`.
//! Pivoting uses Bland's rule, so termination does not depend on
//! degeneracy. Multipliers follow the Lagrangian
//! `c'x - y_eq'(A_eq x - b_eq) + mu'(A_ub x - b_ub)` with `mu >= 0`, so the
//! dual objective is `b_eq'y_eq - b_ub'mu`.

use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<T: Real> {
    pub c: Vector<T>,
    pub a_eq: Mat<T>,
    pub b_eq: Vector<T>,
    pub a_ub: Mat<T>,
    pub b_ub: Vector<T>,
    /// Variables without a sign constraint.
    pub free: Vec<bool>,
}

impl<T: Real> LpProblem<T> {
    /// Nonnegative variables, no constraints yet.
    pub fn new(c: Vector<T>) -> Self {
        let n = c.len();
        Self {
            c,
            a_eq: Mat::zeros(0, n),
            b_eq: Vector::zeros(0),
            a_ub: Mat::zeros(0, n),
            b_ub: Vector::zeros(0),
            free: vec![false; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.num_vars();
        if self.a_eq.ncols() != n || self.a_ub.ncols() != n || self.free.len() != n {
            return Err(Error::Dimension(format!(
                "LP constraint matrices must have {n} columns"
            )));
        }
        if self.a_eq.nrows() != self.b_eq.len() || self.a_ub.nrows() != self.b_ub.len() {
            return Err(Error::Dimension(
                "LP right-hand sides do not match constraint rows".into(),
            ));
        }
        let finite = |v: &T| v.as_f64().is_finite();
        if !(self.c.iter().all(finite)
            && self.a_eq.iter().all(finite)
            && self.b_eq.iter().all(finite)
            && self.a_ub.iter().all(finite)
            && self.b_ub.iter().all(finite))
        {
            return Err(Error::Domain("LP data must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T: Real> {
    pub x: Vector<T>,
    pub objective: T,
    pub y_eq: Vector<T>,
    pub mu_ub: Vector<T>,
    pub pivots: usize,
}

impl<T: Real> LpSolution<T> {
    pub fn dual_objective(&self, p: &LpProblem<T>) -> T {
        p.b_eq.dot(&self.y_eq) - p.b_ub.dot(&self.mu_ub)
    }
}

const MAX_PIVOTS: usize = 10_000;

struct Tableau<T: Real> {
    /// `m x (cols + 1)`; the last column is the right-hand side.
    t: Mat<T>,
    basis: Vec<usize>,
    pivots: usize,
}

impl<T: Real> Tableau<T> {
    fn cols(&self) -> usize {
        self.t.ncols() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let m = self.t.nrows();
        let width = self.t.ncols();
        let p = self.t[(row, col)];
        for j in 0..width {
            self.t[(row, j)] /= p;
        }
        for i in 0..m {
            if i == row {
                continue;
            }
            let f = self.t[(i, col)];
            if f == T::zero() {
                continue;
            }
            for j in 0..width {
                let v = self.t[(row, j)];
                self.t[(i, j)] -= f * v;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Minimizes `cost' z` over columns `allowed`, starting from the current
    /// feasible basis.
    fn run(&mut self, cost: &[T], allowed: impl Fn(usize) -> bool, tol: T) -> Result<()> {
        let m = self.t.nrows();
        let rhs = self.cols();
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::LpNumerical(format!(
                    "no convergence after {MAX_PIVOTS} pivots"
                )));
            }
            // Bland: lowest-index column with negative reduced cost.
            let mut entering = None;
            for j in 0..self.cols() {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut reduced = cost[j];
                for i in 0..m {
                    reduced -= cost[self.basis[i]] * self.t[(i, j)];
                }
                if reduced < -tol {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return Ok(()) };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..m {
                let a = self.t[(i, col)];
                if a > tol {
                    let ratio = self.t[(i, rhs)] / a;
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best || (ratio == best && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Err(Error::LpUnbounded);
            };
            self.pivot(row, col);
        }
    }
}

pub fn small_lp_solve<T: Real>(p: &LpProblem<T>) -> Result<LpSolution<T>> {
    p.check()?;
    let n = p.num_vars();
    let (me, mu) = (p.a_eq.nrows(), p.a_ub.nrows());
    let m = me + mu;
    let tol = T::tol(1e-11);

    // Columns: split variables (x+ for every variable, x- for free ones),
    // then one slack per inequality, then one artificial per row.
    let mut col_of_var = Vec::with_capacity(n);
    let mut next = 0;
    for j in 0..n {
        let neg = if p.free[j] { Some(next + 1) } else { None };
        col_of_var.push((next, neg));
        next += if p.free[j] { 2 } else { 1 };
    }
    let n_struct = next;
    let slack0 = n_struct;
    let art0 = slack0 + mu;
    let cols = art0 + m;

    let mut t = Mat::zeros(m, cols + 1);
    let mut flipped = vec![false; m];
    for r in 0..m {
        let (row, b) = if r < me {
            (p.a_eq.row(r), p.b_eq[r])
        } else {
            (p.a_ub.row(r - me), p.b_ub[r - me])
        };
        let sign = if b < T::zero() { -T::one() } else { T::one() };
        flipped[r] = b < T::zero();
        for j in 0..n {
            let (pos, neg) = col_of_var[j];
            t[(r, pos)] = sign * row[j];
            if let Some(neg) = neg {
                t[(r, neg)] = -sign * row[j];
            }
        }
        if r >= me {
            t[(r, slack0 + r - me)] = sign;
        }
        t[(r, art0 + r)] = T::one();
        t[(r, cols)] = sign * b;
    }
    let mut tab = Tableau {
        t,
        basis: (art0..art0 + m).collect(),
        pivots: 0,
    };
    // Rows whose slack enters with +1 start with the slack basic instead.
    for r in me..m {
        if !flipped[r] {
            tab.basis[r] = slack0 + r - me;
        }
    }

    let mut phase1 = vec![T::zero(); cols];
    for c in phase1.iter_mut().skip(art0) {
        *c = T::one();
    }
    tab.run(&phase1, |_| true, tol)?;
    let infeas = (0..m).fold(T::zero(), |acc, i| {
        acc + phase1[tab.basis[i]] * tab.t[(i, cols)]
    });
    let scale = p.b_eq.iter().chain(p.b_ub.iter()).fold(T::one(), |acc, b| {
        if b.abs() > acc {
            b.abs()
        } else {
            acc
        }
    });
    if infeas > T::tol(1e-9) * scale {
        return Err(Error::LpInfeasible);
    }
    // Drive zero-level artificials out of the basis; rows that cannot be
    // cleared are redundant.
    let mut redundant = vec![false; m];
    for r in 0..m {
        if tab.basis[r] < art0 {
            continue;
        }
        let col = (0..art0).find(|&j| tab.t[(r, j)].abs() > tol && !tab.basis.contains(&j));
        match col {
            Some(j) => tab.pivot(r, j),
            None => redundant[r] = true,
        }
    }

    let mut cost = vec![T::zero(); cols];
    for j in 0..n {
        let (pos, neg) = col_of_var[j];
        cost[pos] = p.c[j];
        if let Some(neg) = neg {
            cost[neg] = -p.c[j];
        }
    }
    tab.run(&cost, |j| j < art0, tol)?;

    let mut z = vec![T::zero(); cols];
    for r in 0..m {
        z[tab.basis[r]] = tab.t[(r, cols)];
    }
    let x = Vector::from_fn(n, |j, _| {
        let (pos, neg) = col_of_var[j];
        z[pos] - neg.map(|c| z[c]).unwrap_or(T::zero())
    });
    let objective = p.c.dot(&x);

    // Row duals y with B' y = c_B on the (sign-adjusted) original rows; the
    // artificial columns of the final tableau hold B^{-1}.
    let mut y = vec![T::zero(); m];
    for (r, yr) in y.iter_mut().enumerate() {
        if redundant[r] {
            continue;
        }
        let mut acc = T::zero();
        for i in 0..m {
            acc += cost[tab.basis[i]] * tab.t[(i, art0 + r)];
        }
        *yr = acc;
    }
    for r in 0..m {
        if flipped[r] {
            y[r] = -y[r];
        }
    }
    let y_eq = Vector::from_fn(me, |r, _| y[r]);
    let mu_ub = Vector::from_fn(mu, |r, _| -y[me + r]);
    Ok(LpSolution {
        x,
        objective,
        y_eq,
        mu_ub,
        pivots: tab.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_lower_bound() {
        let mut lp = LpProblem::<f64>::new(Vector::from_vec(vec![1.0]));
        lp.a_ub = Mat::from_element(1, 1, -1.0);
        lp.b_ub = Vector::from_vec(vec![-1.0]);
        let sol = small_lp_solve(&lp).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-14);
        assert!((sol.mu_ub[0] - 1.0).abs() < 1e-14);
        assert!((sol.dual_objective(&lp) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn infeasible_and_unbounded_are_distinct() {
        let mut lp = LpProblem::<f64>::new(Vector::from_vec(vec![1.0]));
        lp.a_ub = Mat::from_element(1, 1, 1.0);
        lp.b_ub = Vector::from_vec(vec![-1.0]);
        assert_eq!(small_lp_solve(&lp).unwrap_err(), Error::LpInfeasible);
        let mut lp = LpProblem::new(Vector::from_vec(vec![-1.0]));
        lp.a_ub = Mat::from_element(1, 1, -1.0);
        lp.b_ub = Vector::from_vec(vec![0.0]);
        assert_eq!(small_lp_solve(&lp).unwrap_err(), Error::LpUnbounded);
    }

    #[test]
    fn free_variable_goes_negative() {
        // min x s.t. x >= -3, x free.
        let mut lp = LpProblem::<f64>::new(Vector::from_vec(vec![1.0]));
        lp.free = vec![true];
        lp.a_ub = Mat::from_element(1, 1, -1.0);
        lp.b_ub = Vector::from_vec(vec![3.0]);
        let sol = small_lp_solve(&lp).unwrap();
        assert!((sol.x[0] + 3.0).abs() < 1e-14);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LpProblem::<f64>::new(Vector::from_vec(vec![1.0, 2.0]));
        lp.a_eq = Mat::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        lp.b_eq = Vector::from_vec(vec![1.0, 2.0]);
        let sol = small_lp_solve(&lp).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-14);
        assert!((sol.dual_objective(&lp) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_instances_close_the_duality_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(2..6);
            let me = rng.random_range(0..3);
            let mu = rng.random_range(1..4);
            // Feasible by construction around a random nonnegative point,
            // bounded because the cost is positive on the nonnegative orthant.
            let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let a_eq = Mat::from_fn(me, n, |_, _| rng.random_range(-1.0..1.0));
            let a_ub = Mat::from_fn(mu, n, |_, _| rng.random_range(-1.0..1.0));
            let xv = Vector::from_vec(x0);
            let mut lp = LpProblem::new(Vector::from_fn(n, |_, _| rng.random_range(0.1..2.0)));
            lp.b_eq = &a_eq * &xv;
            lp.b_ub = &a_ub * &xv + Vector::from_fn(mu, |_, _| rng.random_range(0.0..1.0));
            lp.a_eq = a_eq;
            lp.a_ub = a_ub;
            let sol = small_lp_solve(&lp).unwrap();
            assert!((sol.objective - sol.dual_objective(&lp)).abs() < 1e-10);
            assert!(sol.mu_ub.iter().all(|m| *m >= -1e-12));
            let slack = &lp.b_ub - &lp.a_ub * &sol.x;
            assert!(slack.iter().all(|s| *s >= -1e-10));
            assert!(slack.dot(&sol.mu_ub).abs() < 1e-10);
            assert!((&lp.a_eq * &sol.x - &lp.b_eq).amax() < 1e-10);
        }
    }
}
