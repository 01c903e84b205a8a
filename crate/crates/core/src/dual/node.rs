//! One-node dual solves over the set of achievable type-cost vectors.
//!
//! For a deterministic P2 action `v`, type `i` pays
//! `C_i(x; v) = a_i(x) + b_i(x)'v + v'M_i v/2` against the continuation
//! `J_i+`. The node value is `max_{q in simplex} { q'p - sigma(q) }` with
//! `sigma(q) = sup_v q'C(x; v)`.

use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::linalg::{symmetrize, Mat, Vector};
use crate::lp::{small_lp_solve, LpProblem};
use crate::riccati::QuadraticValue;
use crate::tree::NodeId;
use crate::Real;

/// Stop column generation once pricing improves on the incumbent support
/// value by less than this.
pub const PRICING_TOL: f64 = 1e-8;

/// `(M_i, b_i(x), a_i(x))` for every type at a fixed state.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeQuadratics<T: Real> {
    pub m: Vec<Mat<T>>,
    pub b: Vec<Vector<T>>,
    pub a: Vec<T>,
}

impl<T: Real> NodeQuadratics<T> {
    pub fn new(
        x: &Vector<T>,
        continuations: &[QuadraticValue<T>],
        spec: &GameSpec<T>,
    ) -> Result<Self> {
        let ni = spec.num_types();
        if continuations.len() != ni {
            return Err(Error::Dimension(format!(
                "{} continuations for {ni} types",
                continuations.len()
            )));
        }
        if x.len() != spec.n() || continuations.iter().any(|c| c.dim() != spec.n()) {
            return Err(Error::Dimension(format!(
                "state and continuations must have dimension {}",
                spec.n()
            )));
        }
        let dynm = &spec.dynamics;
        let (a_mat, b1, b2, tau) = (&dynm.a, &dynm.b1, &dynm.b2, dynm.tau);
        let half = T::lit(0.5);
        let mut out = Self {
            m: Vec::with_capacity(ni),
            b: Vec::with_capacity(ni),
            a: Vec::with_capacity(ni),
        };
        for (i, (cont, data)) in continuations.iter().zip(&spec.types).enumerate() {
            let pb1 = &cont.p * b1;
            let mut h = &data.r * tau + b1.transpose() * &pb1;
            symmetrize(&mut h);
            let chol = Cholesky::new(h).ok_or_else(|| Error::TypewiseIllPosed {
                type_index: i,
                node: NodeId::root(),
            })?;
            let b2p_b1 = b2.transpose() * &pb1;
            let mut m = -&data.s * tau + b2.transpose() * &cont.p * b2
                - &b2p_b1 * chol.solve(&b2p_b1.transpose());
            symmetrize(&mut m);
            let ax = a_mat * x;
            let z = &cont.p * &ax + &cont.r;
            let d = b1.transpose() * &z;
            let hd = chol.solve(&d);
            out.b.push(b2.transpose() * &z - &b2p_b1 * &hd);
            out.a.push(
                half * ax.dot(&(&cont.p * &ax)) + cont.r.dot(&ax) + cont.c - half * d.dot(&hd),
            );
            out.m.push(m);
        }
        Ok(out)
    }

    pub fn num_types(&self) -> usize {
        self.a.len()
    }

    pub fn cost_vector(&self, v: &Vector<T>) -> Vector<T> {
        let half = T::lit(0.5);
        Vector::from_fn(self.num_types(), |i, _| {
            self.a[i] + self.b[i].dot(v) + half * v.dot(&(&self.m[i] * v))
        })
    }

    /// `(M(q), b(q), a(q))`.
    pub fn weighted(&self, q: &Vector<T>) -> (Mat<T>, Vector<T>, T) {
        let m2 = self.b[0].len();
        let mut m = Mat::zeros(m2, m2);
        let mut b = Vector::zeros(m2);
        let mut a = T::zero();
        for i in 0..self.num_types() {
            m += &self.m[i] * q[i];
            b += &self.b[i] * q[i];
            a += self.a[i] * q[i];
        }
        (m, b, a)
    }

    /// `(sigma(q), v*(q))` when `M(q)` is negative definite.
    pub fn support(&self, q: &Vector<T>) -> Result<(T, Vector<T>)> {
        let (m, b, a) = self.weighted(q);
        let chol = Cholesky::new(-m)
            .ok_or_else(|| Error::SupportUnbounded(q.iter().map(|x| x.as_f64()).collect()))?;
        // -M v* = b.
        let v = chol.solve(&b);
        let sigma = a + T::lit(0.5) * b.dot(&v);
        Ok((sigma, v))
    }
}

pub fn deterministic_cost_vector<T: Real>(
    x: &Vector<T>,
    v: &Vector<T>,
    continuations: &[QuadraticValue<T>],
    spec: &GameSpec<T>,
) -> Result<Vector<T>> {
    if v.len() != spec.m2() {
        return Err(Error::Dimension(format!(
            "action has {} entries, expected m2 = {}",
            v.len(),
            spec.m2()
        )));
    }
    Ok(NodeQuadratics::new(x, continuations, spec)?.cost_vector(v))
}

pub fn support_function<T: Real>(
    q: &Vector<T>,
    x: &Vector<T>,
    continuations: &[QuadraticValue<T>],
    spec: &GameSpec<T>,
) -> Result<(T, Vector<T>)> {
    check_simplex(q)?;
    NodeQuadratics::new(x, continuations, spec)?.support(q)
}

fn check_simplex<T: Real>(q: &Vector<T>) -> Result<()> {
    let sum = q.iter().fold(T::zero(), |acc, x| acc + *x);
    if q.iter().any(|x| *x < -T::tol(1e-12)) || (sum - T::one()).abs() > T::tol(1e-9) {
        return Err(Error::Domain(format!("q = {q:?} is not on the simplex")));
    }
    Ok(())
}

/// Candidate P2 actions with their type-cost vectors at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T: Real> {
    pub v: Vector<T>,
    pub c: Vector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostVectorSet<T: Real> {
    pub candidates: Vec<Candidate<T>>,
}

impl<T: Real> CostVectorSet<T> {
    pub fn from_actions(
        quads: &NodeQuadratics<T>,
        actions: impl IntoIterator<Item = Vector<T>>,
    ) -> Self {
        let candidates = actions
            .into_iter()
            .map(|v| Candidate {
                c: quads.cost_vector(&v),
                v,
            })
            .collect();
        Self { candidates }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Columns `c^s` side by side, `I x S`.
    pub fn cost_matrix(&self) -> Mat<T> {
        let ni = self.candidates.first().map_or(0, |c| c.c.len());
        Mat::from_fn(ni, self.len(), |i, s| self.candidates[s].c[i])
    }

    /// `max_s q'c^s`.
    pub fn support(&self, q: &Vector<T>) -> T {
        finite_support(q, &self.cost_matrix())
    }
}

fn finite_support<T: Real>(q: &Vector<T>, costs: &Mat<T>) -> T {
    let mut best = -T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    for col in costs.column_iter() {
        let s = q.dot(&col);
        if s > best {
            best = s;
        }
    }
    best
}

/// Optimal branch weights for fixed branch costs.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaLp<T: Real> {
    pub lambda: Vector<T>,
    pub value: T,
    /// Multipliers of the `I` epigraph rows; a point of the simplex.
    pub q: Vector<T>,
}

/// `min_{lambda in simplex} max_i { p_i - sum_a lambda_a C_ia }` as the
/// epigraph LP in `(lambda, s)`. `branch_costs` is `I x A`.
pub fn lambda_lp<T: Real>(p_hat: &Vector<T>, branch_costs: &Mat<T>) -> Result<LambdaLp<T>> {
    let (ni, na) = branch_costs.shape();
    if p_hat.len() != ni || na == 0 {
        return Err(Error::Dimension(format!(
            "branch costs are {ni} x {na}; need {} rows and at least one column",
            p_hat.len()
        )));
    }
    let mut c = Vector::zeros(na + 1);
    c[na] = T::one();
    let mut lp = LpProblem::new(c);
    lp.free[na] = true;
    lp.a_eq = Mat::from_fn(1, na + 1, |_, j| if j < na { T::one() } else { T::zero() });
    lp.b_eq = Vector::from_element(1, T::one());
    lp.a_ub = Mat::from_fn(ni, na + 1, |i, j| {
        if j < na {
            -branch_costs[(i, j)]
        } else {
            -T::one()
        }
    });
    lp.b_ub = -p_hat;
    let sol = small_lp_solve(&lp).map_err(|e| lp_diagnostics(e, branch_costs))?;
    Ok(LambdaLp {
        lambda: sol.x.rows(0, na).into_owned(),
        value: sol.objective,
        q: sol.mu_ub,
    })
}

fn lp_diagnostics<T: Real>(e: Error, costs: &Mat<T>) -> Error {
    match e {
        Error::LpNumerical(msg) => {
            let scale = costs.amax().as_f64();
            Error::LpNumerical(format!("{msg}; branch cost magnitude {scale:e}"))
        }
        other => other,
    }
}

/// `max_{q in simplex} { q'p - max_s q'c^s }`, solved as its own LP in
/// `(q, t)`.
pub fn finite_set_dual_value<T: Real>(p_hat: &Vector<T>, costs: &Mat<T>) -> Result<T> {
    let (ni, ns) = costs.shape();
    if p_hat.len() != ni || ns == 0 {
        return Err(Error::Dimension(
            "cost matrix does not match the dual label".into(),
        ));
    }
    let mut c = Vector::zeros(ni + 1);
    for i in 0..ni {
        c[i] = -p_hat[i];
    }
    c[ni] = T::one();
    let mut lp = LpProblem::new(c);
    lp.free[ni] = true;
    lp.a_eq = Mat::from_fn(1, ni + 1, |_, j| if j < ni { T::one() } else { T::zero() });
    lp.b_eq = Vector::from_element(1, T::one());
    lp.a_ub = Mat::from_fn(
        ns,
        ni + 1,
        |s, j| if j < ni { costs[(j, s)] } else { -T::one() },
    );
    lp.b_ub = Vector::zeros(ns);
    Ok(-small_lp_solve(&lp)?.objective)
}

/// Search settings for `max_{q in simplex} { q'p - sigma(q) }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexSearch {
    /// Evenly spaced points scanned before golden section (`I = 2`).
    pub prescan: usize,
    /// Golden-section bracket width at which to stop.
    pub tol: f64,
    /// Projected-gradient restarts (`I > 2`).
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SimplexSearch {
    fn default() -> Self {
        Self {
            prescan: 101,
            tol: 1e-10,
            restarts: 20,
            max_iters: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeMethod {
    /// Single type; nothing to search.
    Vertex,
    GoldenSection,
    ProjectedGradient,
    /// The closed form failed everywhere sampled; value from column
    /// generation over finite candidates.
    ColumnGeneration,
}

impl NodeMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeMethod::Vertex => "vertex",
            NodeMethod::GoldenSection => "golden_section",
            NodeMethod::ProjectedGradient => "projected_gradient",
            NodeMethod::ColumnGeneration => "column_generation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDualValue<T: Real> {
    pub value: T,
    pub q: Vector<T>,
    /// Pricing action at the optimal `q`.
    pub v_star: Vector<T>,
    pub method: NodeMethod,
    /// Set when the result is best-effort: the general-`I` search, or a
    /// fallback whose pricing failed.
    pub flagged: bool,
}

/// Maximizes `q'p - sigma(q)` over the simplex. `sigma` returns `None` where
/// it is unbounded, otherwise its value and a supergradient of `-sigma`
/// negated, i.e. the cost vector at the maximizing action.
pub(crate) fn maximize_on_simplex<T: Real>(
    p_hat: &Vector<T>,
    sigma: impl Fn(&Vector<T>) -> Option<(T, Vector<T>)>,
    cfg: &SimplexSearch,
) -> Option<(T, Vector<T>, NodeMethod)> {
    let ni = p_hat.len();
    let phi = |q: &Vector<T>| sigma(q).map(|(s, c)| (p_hat.dot(q) - s, c));
    match ni {
        1 => {
            let q = Vector::from_element(1, T::one());
            phi(&q).map(|(v, _)| (v, q, NodeMethod::Vertex))
        }
        2 => golden_section(&phi, cfg).map(|(v, q)| (v, q, NodeMethod::GoldenSection)),
        _ => {
            projected_gradient(p_hat, &phi, cfg).map(|(v, q)| (v, q, NodeMethod::ProjectedGradient))
        }
    }
}

fn golden_section<T: Real>(
    phi: &impl Fn(&Vector<T>) -> Option<(T, Vector<T>)>,
    cfg: &SimplexSearch,
) -> Option<(T, Vector<T>)> {
    let at = |t: f64| Vector::from_vec(vec![T::lit(t), T::lit(1.0 - t)]);
    let f = |t: f64| {
        phi(&at(t))
            .map(|(v, _)| v.as_f64())
            .unwrap_or(f64::NEG_INFINITY)
    };
    let steps = cfg.prescan.max(3) - 1;
    let grid: Vec<f64> = (0..=steps).map(|j| j as f64 / steps as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let (best, &best_val) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if best_val == f64::NEG_INFINITY {
        return None;
    }
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(steps)];
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > cfg.tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    // Keep the best of the bracket ends, the interior probes and the scan.
    let mut t_best = grid[best];
    let mut v_best = best_val;
    for t in [lo, hi, x1, x2] {
        let v = f(t);
        if v > v_best {
            v_best = v;
            t_best = t;
        }
    }
    let q = at(t_best);
    phi(&q).map(|(v, _)| (v, q))
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex<T: Real>(y: &Vector<T>) -> Vector<T> {
    let mut u: Vec<T> = y.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (j, uj) in u.iter().enumerate() {
        cum += *uj;
        let t = (cum - T::one()) / T::lit((j + 1) as f64);
        if *uj - t > T::zero() {
            theta = t;
        }
    }
    y.map(|v| {
        if v - theta > T::zero() {
            v - theta
        } else {
            T::zero()
        }
    })
}

fn projected_gradient<T: Real>(
    p_hat: &Vector<T>,
    phi: &impl Fn(&Vector<T>) -> Option<(T, Vector<T>)>,
    cfg: &SimplexSearch,
) -> Option<(T, Vector<T>)> {
    let ni = p_hat.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(T, Vector<T>)> = None;
    for restart in 0..cfg.restarts.max(1) {
        let q0 = if restart == 0 {
            Vector::from_element(ni, T::one() / T::lit(ni as f64))
        } else {
            let e: Vec<f64> = (0..ni).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = e.iter().sum();
            Vector::from_iterator(ni, e.iter().map(|x| T::lit(x / total)))
        };
        let Some((mut val, mut cost)) = phi(&q0) else {
            continue;
        };
        let mut q = q0;
        let mut step = T::one();
        for _ in 0..cfg.max_iters {
            // d phi / dq = p - C(x; v*(q)).
            let grad = p_hat - &cost;
            let mut moved = false;
            while step > T::tol(1e-14) {
                let cand = project_simplex(&(&q + &grad * step));
                match phi(&cand) {
                    Some((v, c)) if v > val => {
                        let gain = v - val;
                        q = cand;
                        val = v;
                        cost = c;
                        step *= T::lit(1.5);
                        moved = gain > T::tol(1e-15) * (T::one() + val.abs());
                        break;
                    }
                    _ => step *= T::lit(0.5),
                }
            }
            if !moved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, q));
        }
    }
    best
}

/// `Psi(x, p) = max_q { q'p - sigma(q) }` via the closed-form support
/// function, falling back to column generation from `v = 0` when no sampled
/// `q` admits the closed form.
pub fn dual_node_value<T: Real>(
    x: &Vector<T>,
    p_hat: &Vector<T>,
    continuations: &[QuadraticValue<T>],
    spec: &GameSpec<T>,
    search: &SimplexSearch,
) -> Result<NodeDualValue<T>> {
    if p_hat.len() != spec.num_types() {
        return Err(Error::Dimension(format!(
            "dual label has {} entries",
            p_hat.len()
        )));
    }
    let quads = NodeQuadratics::new(x, continuations, spec)?;
    let sigma = |q: &Vector<T>| {
        quads
            .support(q)
            .ok()
            .map(|(s, v)| (s, quads.cost_vector(&v)))
    };
    if let Some((value, q, method)) = maximize_on_simplex(p_hat, sigma, search) {
        let (_, v_star) = quads.support(&q)?;
        let flagged = method == NodeMethod::ProjectedGradient;
        return Ok(NodeDualValue {
            value,
            q,
            v_star,
            method,
            flagged,
        });
    }
    let start = CostVectorSet::from_actions(&quads, [Vector::zeros(spec.m2())]);
    let cg = column_generation_with(&quads, p_hat, start, 16)?;
    let s = cg.lambda.argmax().0;
    Ok(NodeDualValue {
        value: cg.value,
        q: cg.q,
        v_star: cg.candidates.candidates[s].v.clone(),
        method: NodeMethod::ColumnGeneration,
        flagged: cg.pricing_failed,
    })
}

/// Value over a finite candidate set through the same simplex search as
/// [`dual_node_value`].
pub fn finite_set_node_value<T: Real>(
    p_hat: &Vector<T>,
    set: &CostVectorSet<T>,
    search: &SimplexSearch,
) -> Option<T> {
    let costs = set.cost_matrix();
    let sigma = |q: &Vector<T>| {
        let mut best = 0;
        let mut best_val = q.dot(&costs.column(0));
        for s in 1..costs.ncols() {
            let v = q.dot(&costs.column(s));
            if v > best_val {
                best = s;
                best_val = v;
            }
        }
        Some((best_val, costs.column(best).into_owned()))
    };
    maximize_on_simplex(p_hat, sigma, search).map(|(v, _, _)| v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnGeneration<T: Real> {
    /// Final master value.
    pub value: T,
    /// Weights over the final candidates.
    pub lambda: Vector<T>,
    /// Master dual at the last iteration.
    pub q: Vector<T>,
    pub candidates: CostVectorSet<T>,
    /// Master value after each master solve.
    pub trace: Vec<T>,
    pub converged: bool,
    pub pricing_failed: bool,
}

impl<T: Real> ColumnGeneration<T> {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Alternates the master λ LP over the candidates with closed-form pricing
/// at the master's dual `q`, adding `v*(q)` while it raises the support value
/// by at least [`PRICING_TOL`].
pub fn column_generation<T: Real>(
    x: &Vector<T>,
    p_hat: &Vector<T>,
    initial: CostVectorSet<T>,
    continuations: &[QuadraticValue<T>],
    spec: &GameSpec<T>,
    max_cols: usize,
) -> Result<ColumnGeneration<T>> {
    let quads = NodeQuadratics::new(x, continuations, spec)?;
    column_generation_with(&quads, p_hat, initial, max_cols)
}

pub fn column_generation_with<T: Real>(
    quads: &NodeQuadratics<T>,
    p_hat: &Vector<T>,
    mut set: CostVectorSet<T>,
    max_cols: usize,
) -> Result<ColumnGeneration<T>> {
    if set.is_empty() {
        return Err(Error::Domain(
            "column generation needs at least one initial candidate".into(),
        ));
    }
    if set
        .candidates
        .iter()
        .any(|c| c.c.len() != quads.num_types())
    {
        return Err(Error::Dimension(
            "candidate cost vectors do not match the number of types".into(),
        ));
    }
    let tol = T::tol(PRICING_TOL);
    let mut trace = Vec::new();
    loop {
        let master = lambda_lp(p_hat, &set.cost_matrix())?;
        trace.push(master.value);
        let incumbent = set.support(&master.q);
        let done = |converged, pricing_failed, set| ColumnGeneration {
            value: master.value,
            lambda: master.lambda.clone(),
            q: master.q.clone(),
            candidates: set,
            trace: trace.clone(),
            converged,
            pricing_failed,
        };
        let Ok((sigma, v)) = quads.support(&master.q) else {
            return Ok(done(false, true, set));
        };
        if sigma - incumbent < tol {
            return Ok(done(true, false, set));
        }
        if set.len() >= max_cols {
            return Ok(done(false, false, set));
        }
        let c = quads.cost_vector(&v);
        set.candidates.push(Candidate { v, c });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_quads(m: f64, b: f64, a: f64) -> NodeQuadratics<f64> {
        NodeQuadratics {
            m: vec![Mat::from_element(1, 1, m)],
            b: vec![Vector::from_element(1, b)],
            a: vec![a],
        }
    }

    #[test]
    fn scalar_quadratic_form() {
        let q = scalar_quads(-1.0, 1.0, 0.0);
        for v in [-2.0, 0.0, 0.5, 3.0] {
            let c = q.cost_vector(&Vector::from_element(1, v))[0];
            assert!((c - (-v * v / 2.0 + v)).abs() < 1e-15);
        }
        let (sigma, v) = q.support(&Vector::from_element(1, 1.0)).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);
        assert!((sigma - 0.5).abs() < 1e-15);
    }

    #[test]
    fn convex_direction_is_unbounded() {
        let q = scalar_quads(0.5, 1.0, 0.0);
        assert!(matches!(
            q.support(&Vector::from_element(1, 1.0)),
            Err(Error::SupportUnbounded(_))
        ));
    }

    #[test]
    fn lambda_lp_hand_example() {
        let costs = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let sol = lambda_lp(&Vector::<f64>::zeros(2), &costs).unwrap();
        assert!((sol.value + 0.5).abs() < 1e-14);
        assert!((sol.lambda[0] - 0.5).abs() < 1e-14 && (sol.lambda[1] - 0.5).abs() < 1e-14);
        let dual = finite_set_dual_value(&Vector::zeros(2), &costs).unwrap();
        assert!((dual - sol.value).abs() < 1e-14);
    }

    #[test]
    fn dominating_column_takes_all_mass() {
        let costs = Mat::<f64>::from_row_slice(2, 3, &[0.0, 2.0, 1.0, 0.5, 3.0, -1.0]);
        let sol = lambda_lp(&Vector::from_vec(vec![0.2, -0.1]), &costs).unwrap();
        assert!((sol.lambda[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projection_lands_on_simplex() {
        let p = project_simplex(&Vector::<f64>::from_vec(vec![0.9, 0.8, -3.0]));
        assert!((p.sum() - 1.0).abs() < 1e-15);
        assert!((p[0] - 0.55).abs() < 1e-15 && (p[1] - 0.45).abs() < 1e-15 && p[2] == 0.0);
    }
}
