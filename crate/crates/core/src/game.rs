//! Game instances: dynamics, per-type costs, prior, and their checks.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::Real;

pub const MAX_TYPES: usize = 8;
pub const MAX_HORIZON: usize = 16;

const SYMMETRY_TOL: f64 = 1e-12;
const SIMPLEX_TOL: f64 = 1e-12;
const SIGN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDynamics<T: Real> {
    pub a_c: Mat<T>,
    pub b1_c: Mat<T>,
    pub b2_c: Mat<T>,
}

impl<T: Real> ContinuousDynamics<T> {
    pub fn new(a_c: Mat<T>, b1_c: Mat<T>, b2_c: Mat<T>) -> Result<Self> {
        let cd = Self { a_c, b1_c, b2_c };
        cd.check()?;
        Ok(cd)
    }

    pub fn n(&self) -> usize {
        self.a_c.nrows()
    }

    pub fn m1(&self) -> usize {
        self.b1_c.ncols()
    }

    pub fn m2(&self) -> usize {
        self.b2_c.ncols()
    }

    fn check(&self) -> Result<()> {
        let n = self.a_c.nrows();
        if !self.a_c.is_square() {
            return Err(Error::Dimension(format!(
                "A_c is {}x{}, expected square",
                n,
                self.a_c.ncols()
            )));
        }
        if self.b1_c.nrows() != n {
            return Err(Error::Dimension(format!(
                "B1_c has {} rows, expected {n}",
                self.b1_c.nrows()
            )));
        }
        if self.b2_c.nrows() != n {
            return Err(Error::Dimension(format!(
                "B2_c has {} rows, expected {n}",
                self.b2_c.nrows()
            )));
        }
        Ok(())
    }
}

/// `x+ = A x + B1 u + B2 v`; `b` is `[B1 B2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDynamics<T: Real> {
    pub a: Mat<T>,
    pub b1: Mat<T>,
    pub b2: Mat<T>,
    pub b: Mat<T>,
    pub tau: T,
}

impl<T: Real> DiscreteDynamics<T> {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m1(&self) -> usize {
        self.b1.ncols()
    }

    pub fn m2(&self) -> usize {
        self.b2.ncols()
    }

    pub fn step(&self, x: &Vector<T>, u: &Vector<T>, v: &Vector<T>) -> Vector<T> {
        &self.a * x + &self.b1 * u + &self.b2 * v
    }
}

/// `A = I + tau A_c`, `B_j = tau B_jc + A_c B_jc tau^2 / 2`.
pub fn discretize_dynamics<T: Real>(
    cd: &ContinuousDynamics<T>,
    tau: T,
) -> Result<DiscreteDynamics<T>> {
    cd.check()?;
    if !(tau > T::zero()) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let n = cd.n();
    let half_tau2 = tau * tau * T::lit(0.5);
    let a = Mat::identity(n, n) + &cd.a_c * tau;
    let b1 = &cd.b1_c * tau + &cd.a_c * &cd.b1_c * half_tau2;
    let b2 = &cd.b2_c * tau + &cd.a_c * &cd.b2_c * half_tau2;
    let mut b = Mat::zeros(n, cd.m1() + cd.m2());
    b.columns_mut(0, cd.m1()).copy_from(&b1);
    b.columns_mut(cd.m1(), cd.m2()).copy_from(&b2);
    Ok(DiscreteDynamics { a, b1, b2, b, tau })
}

/// Cost data of one payoff type. Running cost `u'Ru/2 - v'Sv/2`, terminal
/// cost `x'Qx/2 + q'x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeData<T: Real> {
    pub r: Mat<T>,
    pub s: Mat<T>,
    pub q: Mat<T>,
    pub q_lin: Vector<T>,
    pub c: T,
}

impl<T: Real> TypeData<T> {
    pub fn running_cost(&self, u: &Vector<T>, v: &Vector<T>) -> T {
        let half = T::lit(0.5);
        half * u.dot(&(&self.r * u)) - half * v.dot(&(&self.s * v))
    }

    pub fn terminal_cost(&self, x: &Vector<T>) -> T {
        T::lit(0.5) * x.dot(&(&self.q * x)) + self.q_lin.dot(x) + self.c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec<T: Real> {
    pub continuous: ContinuousDynamics<T>,
    pub dynamics: DiscreteDynamics<T>,
    pub types: Vec<TypeData<T>>,
    pub horizon: usize,
    pub prior: Vector<T>,
}

impl<T: Real> GameSpec<T> {
    /// Discretizes the dynamics and checks shapes and size caps. Cost-matrix
    /// definiteness and the prior are left to [`validate_game`].
    pub fn new(
        continuous: ContinuousDynamics<T>,
        tau: T,
        types: Vec<TypeData<T>>,
        horizon: usize,
        prior: Vector<T>,
    ) -> Result<Self> {
        let dynamics = discretize_dynamics(&continuous, tau)?;
        let spec = Self {
            continuous,
            dynamics,
            types,
            horizon,
            prior,
        };
        let report = spec.structural_violations();
        if let Some(first) = report.first() {
            return Err(Error::Dimension(first.to_string()));
        }
        if spec.types.len() > MAX_TYPES {
            return Err(Error::TreeTooLarge(format!(
                "{} types exceeds the cap of {MAX_TYPES}",
                spec.types.len()
            )));
        }
        if spec.horizon > MAX_HORIZON {
            return Err(Error::TreeTooLarge(format!(
                "horizon {} exceeds the cap of {MAX_HORIZON}",
                spec.horizon
            )));
        }
        crate::tree::TreeLayout::new(spec.num_types(), spec.horizon)?;
        Ok(spec)
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn n(&self) -> usize {
        self.dynamics.n()
    }

    pub fn m1(&self) -> usize {
        self.dynamics.m1()
    }

    pub fn m2(&self) -> usize {
        self.dynamics.m2()
    }

    pub fn tau(&self) -> T {
        self.dynamics.tau
    }

    pub fn layout(&self) -> crate::tree::TreeLayout {
        crate::tree::TreeLayout::new(self.num_types(), self.horizon)
            .expect("layout size was checked at construction")
    }

    /// Same game restarted at depth `k` with belief `prior`.
    pub fn subgame(&self, k: usize, prior: Vector<T>) -> Result<Self> {
        if k > self.horizon {
            return Err(Error::Domain(format!(
                "subgame depth {k} beyond horizon {}",
                self.horizon
            )));
        }
        if prior.len() != self.num_types() {
            return Err(Error::Dimension(format!(
                "prior has {} entries, expected {}",
                prior.len(),
                self.num_types()
            )));
        }
        Ok(Self {
            continuous: self.continuous.clone(),
            dynamics: self.dynamics.clone(),
            types: self.types.clone(),
            horizon: self.horizon - k,
            prior,
        })
    }

    /// Single-type game keeping only type `i`.
    pub fn restrict_to_type(&self, i: usize) -> Result<Self> {
        let data = self.types.get(i).ok_or_else(|| {
            Error::Domain(format!(
                "type index {i} out of range (I = {})",
                self.num_types()
            ))
        })?;
        Ok(Self {
            continuous: self.continuous.clone(),
            dynamics: self.dynamics.clone(),
            types: vec![data.clone()],
            horizon: self.horizon,
            prior: Vector::from_element(1, T::one()),
        })
    }

    fn structural_violations(&self) -> Vec<Violation> {
        let (n, m1, m2) = (self.n(), self.m1(), self.m2());
        let mut out = Vec::new();
        if self.types.is_empty() {
            out.push(Violation::NoTypes);
        }
        if self.horizon == 0 {
            out.push(Violation::ZeroHorizon);
        }
        if self.prior.len() != self.types.len() {
            out.push(Violation::Dimension(format!(
                "prior has {} entries for {} types",
                self.prior.len(),
                self.types.len()
            )));
        }
        for (i, t) in self.types.iter().enumerate() {
            let mut check = |name: &str, shape: (usize, usize), want: (usize, usize)| {
                if shape != want {
                    out.push(Violation::Dimension(format!(
                        "type {}: {name} is {}x{}, expected {}x{}",
                        i + 1,
                        shape.0,
                        shape.1,
                        want.0,
                        want.1
                    )));
                }
            };
            check("R", t.r.shape(), (m1, m1));
            check("S", t.s.shape(), (m2, m2));
            check("Q", t.q.shape(), (n, n));
            check("q", (t.q_lin.len(), 1), (n, 1));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Dimension(String),
    NoTypes,
    ZeroHorizon,
    RNotPositiveDefinite { type_index: usize },
    SNotPositiveDefinite { type_index: usize },
    QAsymmetric { type_index: usize, deviation: f64 },
    PriorNegative { index: usize, value: f64 },
    PriorSum(f64),
    NonFinite(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Violation::NoTypes => write!(f, "no payoff types"),
            Violation::ZeroHorizon => write!(f, "horizon must be at least 1"),
            Violation::RNotPositiveDefinite { type_index } => {
                write!(f, "R not positive definite (type {})", type_index + 1)
            }
            Violation::SNotPositiveDefinite { type_index } => {
                write!(f, "S not positive definite (type {})", type_index + 1)
            }
            Violation::QAsymmetric {
                type_index,
                deviation,
            } => {
                write!(
                    f,
                    "Q not symmetric (type {}, max deviation {deviation:e})",
                    type_index + 1
                )
            }
            Violation::PriorNegative { index, value } => {
                write!(f, "prior entry {} is negative ({value})", index + 1)
            }
            Violation::PriorSum(sum) => write!(f, "prior sums to {sum}"),
            Violation::NonFinite(what) => write!(f, "non-finite entries in {what}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msgs: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
            Err(Error::InvalidGame(msgs.join("; ")))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        for (idx, v) in self.violations.iter().enumerate() {
            if idx > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every violated invariant of `spec`; an empty report means valid.
pub fn validate_game<T: Real>(spec: &GameSpec<T>) -> ValidationReport {
    let mut violations = spec.structural_violations();
    let dims_ok = violations.is_empty();
    let finite = |m: &Mat<T>| m.iter().all(|x| x.is_finite());
    for (name, m) in [
        ("A", &spec.dynamics.a),
        ("B1", &spec.dynamics.b1),
        ("B2", &spec.dynamics.b2),
    ] {
        if !finite(m) {
            violations.push(Violation::NonFinite(name.into()));
        }
    }
    if dims_ok {
        for (i, t) in spec.types.iter().enumerate() {
            if !linalg::is_positive_definite(&t.r)
                || linalg::max_abs_asymmetry(&t.r) > T::lit(SYMMETRY_TOL)
            {
                violations.push(Violation::RNotPositiveDefinite { type_index: i });
            }
            if !linalg::is_positive_definite(&t.s)
                || linalg::max_abs_asymmetry(&t.s) > T::lit(SYMMETRY_TOL)
            {
                violations.push(Violation::SNotPositiveDefinite { type_index: i });
            }
            let dev = linalg::max_abs_asymmetry(&t.q);
            if !(dev < T::lit(SYMMETRY_TOL)) {
                violations.push(Violation::QAsymmetric {
                    type_index: i,
                    deviation: dev.as_f64(),
                });
            }
            if !finite(&t.q) || !t.q_lin.iter().all(|x| x.is_finite()) || !t.c.is_finite() {
                violations.push(Violation::NonFinite(format!(
                    "terminal cost of type {}",
                    i + 1
                )));
            }
        }
    }
    let mut sum = T::zero();
    for (i, &p) in spec.prior.iter().enumerate() {
        if p < T::zero() || !p.is_finite() {
            violations.push(Violation::PriorNegative {
                index: i,
                value: p.as_f64(),
            });
        }
        sum += p;
    }
    if !((sum - T::one()).abs() <= T::tol(SIMPLEX_TOL)) {
        violations.push(Violation::PriorSum(sum.as_f64()));
    }
    ValidationReport { violations }
}

/// Step-size bound under which every edge saddle is well posed, given a
/// bound `p_bar` on the spectral norm of all value matrices:
/// `min{ r/(p_bar b1^2), s/(p_bar b2^2), tau0 }` with
/// `b_j = |B_jc| + |A_c B_jc| tau0 / 2`.
pub fn tau_star<T: Real>(spec: &GameSpec<T>, p_bar: T, tau0: T) -> Result<T> {
    if !(p_bar > T::zero()) {
        return Err(Error::Domain(format!(
            "p_bar must be positive, got {p_bar}"
        )));
    }
    if !(tau0 > T::zero()) {
        return Err(Error::Domain(format!("tau0 must be positive, got {tau0}")));
    }
    let cd = &spec.continuous;
    let beta = |b: &Mat<T>| {
        linalg::spectral_norm(b) + linalg::spectral_norm(&(&cd.a_c * b)) * tau0 * T::lit(0.5)
    };
    let r_min = min_over_types(spec, |t| &t.r);
    let s_min = min_over_types(spec, |t| &t.s);
    let mut best = tau0;
    for (lo, b) in [(r_min, beta(&cd.b1_c)), (s_min, beta(&cd.b2_c))] {
        let denom = p_bar * b * b;
        if denom > T::zero() {
            let bound = lo / denom;
            if bound < best {
                best = bound;
            }
        }
    }
    Ok(best)
}

fn min_over_types<T: Real>(spec: &GameSpec<T>, pick: impl Fn(&TypeData<T>) -> &Mat<T>) -> T {
    spec.types
        .iter()
        .map(|t| linalg::min_eigenvalue(pick(t)))
        .fold(None, |acc: Option<T>, x| {
            Some(acc.map_or(x, |a| if x < a { x } else { a }))
        })
        .unwrap_or_else(T::zero)
}

/// Player-separable structure: returns the size `n1` of P1's state block if
/// `A = diag(A1, A2)`, `B1 = [B~1; 0]`, `B2 = [0; B~2]` and every
/// `Q_i = diag(Q1, -Q2)` with `Q1, Q2 >= 0`.
pub fn separable_split<T: Real>(spec: &GameSpec<T>) -> Option<usize> {
    let n = spec.n();
    let dy = &spec.dynamics;
    let zero = T::zero();
    let sign_tol = T::lit(SIGN_TOL);
    (1..n).find(|&n1| {
        let n2 = n - n1;
        linalg::block_is_zero(&dy.a, 0..n1, n1..n, zero)
            && linalg::block_is_zero(&dy.a, n1..n, 0..n1, zero)
            && linalg::block_is_zero(&dy.b1, n1..n, 0..dy.m1(), zero)
            && linalg::block_is_zero(&dy.b2, 0..n1, 0..dy.m2(), zero)
            && spec.types.iter().all(|t| {
                linalg::block_is_zero(&t.q, 0..n1, n1..n, zero)
                    && linalg::block_is_zero(&t.q, n1..n, 0..n1, zero)
                    && linalg::min_eigenvalue(&t.q.view((0, 0), (n1, n1)).into_owned()) >= -sign_tol
                    && linalg::min_eigenvalue(&(-t.q.view((n1, n1), (n2, n2)).into_owned()))
                        >= -sign_tol
            })
    })
}

pub fn separable_structure_check<T: Real>(spec: &GameSpec<T>) -> bool {
    separable_split(spec).is_some()
}
