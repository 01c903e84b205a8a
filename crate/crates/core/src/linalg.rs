//! Small dense helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::Real;

pub type Mat<T> = DMatrix<T>;
pub type Vector<T> = DVector<T>;

/// `m <- (m + m^T) / 2`.
pub fn symmetrize<T: Real>(m: &mut Mat<T>) {
    let n = m.nrows();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn symmetrized<T: Real>(mut m: Mat<T>) -> Mat<T> {
    symmetrize(&mut m);
    m
}

/// `c <- beta c + alpha a b`, skipping zero entries of `b`; the dynamics
/// matrices of typical games are mostly zeros.
pub fn gemm_nn<T: Real>(c: &mut Mat<T>, alpha: T, a: &Mat<T>, b: &Mat<T>, beta: T) {
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    debug_assert_eq!((b.nrows(), c.nrows(), c.ncols()), (k, m, n));
    let (a, b) = (a.as_slice(), b.as_slice());
    let cs = c.as_mut_slice();
    for j in 0..n {
        let col = &mut cs[j * m..(j + 1) * m];
        if beta != T::one() {
            col.iter_mut().for_each(|x| *x *= beta);
        }
        for p in 0..k {
            let s = alpha * b[j * k + p];
            if s == T::zero() {
                continue;
            }
            let acol = &a[p * m..(p + 1) * m];
            for (ci, ai) in col.iter_mut().zip(acol) {
                *ci += s * *ai;
            }
        }
    }
}

/// `c <- beta c + alpha a^T b`. Zero entries of `b` are skipped, so pass the
/// sparser factor as `b`.
pub fn gemm_tn<T: Real>(c: &mut Mat<T>, alpha: T, a: &Mat<T>, b: &Mat<T>, beta: T) {
    let (k, m, n) = (a.nrows(), a.ncols(), b.ncols());
    debug_assert_eq!((b.nrows(), c.nrows(), c.ncols()), (k, m, n));
    let (a, b) = (a.as_slice(), b.as_slice());
    let cs = c.as_mut_slice();
    for j in 0..n {
        let col = &mut cs[j * m..(j + 1) * m];
        if beta != T::one() {
            col.iter_mut().for_each(|x| *x *= beta);
        }
        for p in 0..k {
            let s = alpha * b[j * k + p];
            if s == T::zero() {
                continue;
            }
            for (i, ci) in col.iter_mut().enumerate() {
                *ci += s * a[i * k + p];
            }
        }
    }
}

/// `c <- beta c + alpha a b^T`.
pub fn gemm_nt<T: Real>(c: &mut Mat<T>, alpha: T, a: &Mat<T>, b: &Mat<T>, beta: T) {
    let (m, k, n) = (a.nrows(), a.ncols(), b.nrows());
    debug_assert_eq!((b.ncols(), c.nrows(), c.ncols()), (k, m, n));
    let (a, b) = (a.as_slice(), b.as_slice());
    let cs = c.as_mut_slice();
    if beta != T::one() {
        cs.iter_mut().for_each(|x| *x *= beta);
    }
    for p in 0..k {
        let acol = &a[p * m..(p + 1) * m];
        let bcol = &b[p * n..(p + 1) * n];
        for j in 0..n {
            let s = alpha * bcol[j];
            if s == T::zero() {
                continue;
            }
            let col = &mut cs[j * m..(j + 1) * m];
            for (ci, ai) in col.iter_mut().zip(acol) {
                *ci += s * *ai;
            }
        }
    }
}

/// `y <- beta y + alpha a^T x`.
pub fn gemv_tn<T: Real>(y: &mut Vector<T>, alpha: T, a: &Mat<T>, x: &Vector<T>, beta: T) {
    let (k, m) = (a.nrows(), a.ncols());
    debug_assert_eq!((x.len(), y.len()), (k, m));
    let (a, x) = (a.as_slice(), x.as_slice());
    for i in 0..m {
        let dot = a[i * k..(i + 1) * k]
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (p, q)| acc + *p * *q);
        y[i] = if beta == T::zero() {
            alpha * dot
        } else {
            beta * y[i] + alpha * dot
        };
    }
}

/// `y <- beta y + alpha a x`.
pub fn gemv_nn<T: Real>(y: &mut Vector<T>, alpha: T, a: &Mat<T>, x: &Vector<T>, beta: T) {
    let (m, k) = (a.nrows(), a.ncols());
    debug_assert_eq!((x.len(), y.len()), (k, m));
    if beta != T::one() {
        y.iter_mut().for_each(|v| *v *= beta);
    }
    let a = a.as_slice();
    for p in 0..k {
        let s = alpha * x[p];
        if s == T::zero() {
            continue;
        }
        for (yi, ai) in y.iter_mut().zip(&a[p * m..(p + 1) * m]) {
            *yi += s * *ai;
        }
    }
}

/// `y <- y + a x`, entrywise.
pub fn mat_axpy<T: Real>(y: &mut Mat<T>, a: T, x: &Mat<T>) {
    debug_assert_eq!(y.shape(), x.shape());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += a * *xi;
    }
}

/// Frobenius inner product `tr(a^T b)`.
pub fn frob_dot<T: Real>(a: &Mat<T>, b: &Mat<T>) -> T {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

pub fn max_abs_asymmetry<T: Real>(m: &Mat<T>) -> T {
    let mut worst = T::zero();
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Cholesky succeeds (zero tolerance: semidefinite input fails).
pub fn is_positive_definite<T: Real>(m: &Mat<T>) -> bool {
    m.is_square() && m.nrows() > 0 && Cholesky::new(m.clone()).is_some()
}

pub fn min_eigenvalue<T: Real>(sym: &Mat<T>) -> T {
    if sym.nrows() == 0 {
        return T::zero();
    }
    SymmetricEigen::new(sym.clone()).eigenvalues.min()
}

pub fn max_eigenvalue<T: Real>(sym: &Mat<T>) -> T {
    if sym.nrows() == 0 {
        return T::zero();
    }
    SymmetricEigen::new(sym.clone()).eigenvalues.max()
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(m: &Mat<T>) -> T {
    if m.nrows() == 0 || m.ncols() == 0 {
        return T::zero();
    }
    m.clone().singular_values().max()
}

pub fn max_abs<T: Real>(m: &Mat<T>) -> T {
    m.iter().fold(
        T::zero(),
        |acc, x| if x.abs() > acc { x.abs() } else { acc },
    )
}

pub fn block_is_zero<T: Real>(
    m: &Mat<T>,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
    tol: T,
) -> bool {
    rows.clone()
        .all(|i| cols.clone().all(|j| m[(i, j)].abs() <= tol))
}

/// Which half of the saddle Hessian failed its definiteness check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SaddleDefect<T> {
    /// `H_uu` is not positive definite; carries its smallest eigenvalue.
    MinimizerBlock(T),
    /// `H_vv` is not negative definite; carries its largest eigenvalue.
    MaximizerBlock(T),
}

/// Factorization of a symmetric quasi-definite saddle matrix
/// `H = [[Huu, Huv], [Huv^T, Hvv]]` with `Huu > 0` and `Hvv < 0`.
///
/// Keeps a Cholesky factor `L` of `Huu`, `W = L^{-1} Huv` and a Cholesky
/// factor of the negated Schur complement `W^T W - Hvv`. Refactoring reuses
/// the same storage.
#[derive(Debug, Clone)]
pub struct SaddleFactor<T: Real> {
    m1: usize,
    m2: usize,
    lu: Mat<T>,
    w: Mat<T>,
    ls: Mat<T>,
}

/// In-place lower Cholesky factor of the column-major `n x n` block `a`; the
/// strict upper triangle is left as is.
fn cholesky_in_place<T: Real>(a: &mut [T], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[k * n + j] * a[k * n + j];
        }
        if !(d > T::zero()) {
            return false;
        }
        let l = d.sqrt();
        a[j * n + j] = l;
        for i in (j + 1)..n {
            let mut s = a[j * n + i];
            for k in 0..j {
                s -= a[k * n + i] * a[k * n + j];
            }
            a[j * n + i] = s / l;
        }
    }
    true
}

/// `x <- L^{-1} x` for the column-major lower factor `l`.
fn forward_subst<T: Real>(l: &[T], x: &mut [T]) {
    let n = x.len();
    for j in 0..n {
        let xj = x[j] / l[j * n + j];
        x[j] = xj;
        let col = &l[j * n + j + 1..(j + 1) * n];
        for (xi, li) in x[j + 1..].iter_mut().zip(col) {
            *xi -= *li * xj;
        }
    }
}

/// `x <- L^{-T} x` for the column-major lower factor `l`.
fn backward_subst<T: Real>(l: &[T], x: &mut [T]) {
    let n = x.len();
    for i in (0..n).rev() {
        let col = &l[i * n + i + 1..(i + 1) * n];
        let s = col
            .iter()
            .zip(&x[i + 1..])
            .fold(x[i], |acc, (li, xk)| acc - *li * *xk);
        x[i] = s / l[i * n + i];
    }
}

impl<T: Real> SaddleFactor<T> {
    /// Empty storage for an `(m1 + m2)`-square saddle matrix.
    pub fn with_dims(m1: usize, m2: usize) -> Self {
        Self {
            m1,
            m2,
            lu: Mat::zeros(m1, m1),
            w: Mat::zeros(m1, m2),
            ls: Mat::zeros(m2, m2),
        }
    }

    pub fn new(h: &Mat<T>, m1: usize) -> Result<Self, SaddleDefect<T>> {
        let mut f = Self::with_dims(m1, h.nrows() - m1);
        f.refactor(h)?;
        Ok(f)
    }

    pub fn refactor(&mut self, h: &Mat<T>) -> Result<(), SaddleDefect<T>> {
        let (m1, m2) = (self.m1, self.m2);
        debug_assert_eq!(h.shape(), (m1 + m2, m1 + m2));
        self.lu.copy_from(&h.view((0, 0), (m1, m1)));
        if !cholesky_in_place(self.lu.as_mut_slice(), m1) {
            return Err(SaddleDefect::MinimizerBlock(min_eigenvalue(
                &h.view((0, 0), (m1, m1)).into_owned(),
            )));
        }
        if m2 == 0 {
            return Ok(());
        }
        for i in 0..m2 {
            for j in 0..m2 {
                self.ls[(i, j)] = -h[(m1 + i, m1 + j)];
            }
        }
        if !cholesky_in_place(self.ls.as_mut_slice(), m2) {
            return Err(SaddleDefect::MaximizerBlock(max_eigenvalue(
                &h.view((m1, m1), (m2, m2)).into_owned(),
            )));
        }
        self.w.copy_from(&h.view((0, m1), (m1, m2)));
        for j in 0..m2 {
            forward_subst(
                self.lu.as_slice(),
                &mut self.w.as_mut_slice()[j * m1..(j + 1) * m1],
            );
        }
        let w = self.w.as_slice();
        for i in 0..m2 {
            for j in 0..=i {
                let wi = &w[i * m1..(i + 1) * m1];
                let wj = &w[j * m1..(j + 1) * m1];
                let s = wi
                    .iter()
                    .zip(wj)
                    .fold(-h[(m1 + i, m1 + j)], |acc, (a, b)| acc + *a * *b);
                self.ls[(i, j)] = s;
                self.ls[(j, i)] = s;
            }
        }
        if !cholesky_in_place(self.ls.as_mut_slice(), m2) {
            let mut neg_schur = self.w.tr_mul(&self.w) - h.view((m1, m1), (m2, m2));
            symmetrize(&mut neg_schur);
            return Err(SaddleDefect::MaximizerBlock(-min_eigenvalue(&neg_schur)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m1 + self.m2
    }

    /// Solves `H z = b` for one column stored contiguously, in place.
    pub fn solve_slice(&self, b: &mut [T]) {
        let (m1, m2) = (self.m1, self.m2);
        let (bu, bv) = b.split_at_mut(m1);
        forward_subst(self.lu.as_slice(), bu);
        if m2 > 0 {
            let w = self.w.as_slice();
            for (j, v) in bv.iter_mut().enumerate() {
                *v = w[j * m1..(j + 1) * m1]
                    .iter()
                    .zip(bu.iter())
                    .fold(*v, |acc, (a, b)| acc - *a * *b);
            }
            forward_subst(self.ls.as_slice(), bv);
            backward_subst(self.ls.as_slice(), bv);
            for (j, v) in bv.iter_mut().enumerate() {
                *v = -*v;
                let zv = *v;
                for (u, wk) in bu.iter_mut().zip(&w[j * m1..(j + 1) * m1]) {
                    *u -= *wk * zv;
                }
            }
        }
        backward_subst(self.lu.as_slice(), bu);
    }

    /// `H^{-1}`, symmetrized.
    pub fn inverse_into(&self, out: &mut Mat<T>) {
        let m = self.dim();
        out.fill(T::zero());
        for j in 0..m {
            out[(j, j)] = T::one();
            self.solve_slice(&mut out.as_mut_slice()[j * m..(j + 1) * m]);
        }
        symmetrize(out);
    }

    /// Solves `H Z = rhs` column-wise, overwriting `rhs`.
    pub fn solve_mut(&self, rhs: &mut Mat<T>) {
        let m = self.dim();
        debug_assert_eq!(rhs.nrows(), m);
        for col in rhs.as_mut_slice().chunks_mut(m) {
            self.solve_slice(col);
        }
    }

    pub fn solve(&self, rhs: &Mat<T>) -> Mat<T> {
        let mut out = rhs.clone();
        self.solve_mut(&mut out);
        out
    }

    pub fn solve_vec(&self, rhs: &Vector<T>) -> Vector<T> {
        let mut out = rhs.clone();
        self.solve_slice(out.as_mut_slice());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddle_factor_solves_quasi_definite_system() {
        let h = Mat::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, -2.0]);
        let f = SaddleFactor::new(&h, 2).unwrap();
        let b = Vector::from_vec(vec![1.0, -2.0, 0.3]);
        let z = f.solve_vec(&b);
        let lu = h.clone().lu().solve(&b).unwrap();
        assert!((z - lu).amax() < 1e-14);
    }

    #[test]
    fn saddle_factor_rejects_wrong_inertia() {
        let h = Mat::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            SaddleFactor::new(&h, 1),
            Err(SaddleDefect::MinimizerBlock(_))
        ));
        let h = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            SaddleFactor::new(&h, 1),
            Err(SaddleDefect::MaximizerBlock(_))
        ));
    }

    #[test]
    fn symmetrize_averages_off_diagonal() {
        let mut m = Mat::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]);
        symmetrize(&mut m);
        assert_eq!(m, Mat::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 3.0]));
    }
}
