//! Independent reference evaluators used by the test suites and `verify`.
//!
//! None of these go through the Riccati recursions: each assembles the whole
//! multi-stage problem over a small tree as one stacked quadratic in all
//! controls and solves its stationarity system densely.

use crate::belief::BeliefTree;
use crate::dual::DualTree;
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::linalg::{Mat, Vector};
use crate::lp::{small_lp_solve, LpProblem};
use crate::riccati::QuadraticValue;
use crate::tree::TreeLayout;

/// Largest stacked system the oracles will assemble.
pub const MAX_STACKED_EDGES: usize = 128;

/// `f(z) = z'Hz/2 + g'z + c` over stacked controls `z`.
struct Stacked {
    h: Mat<f64>,
    g: Vector<f64>,
    c: f64,
}

/// Affine state `s0 + S z`.
#[derive(Clone)]
struct AffineState {
    s0: Vector<f64>,
    s: Mat<f64>,
}

impl Stacked {
    fn new(nz: usize) -> Self {
        Self {
            h: Mat::zeros(nz, nz),
            g: Vector::zeros(nz),
            c: 0.0,
        }
    }

    /// `weight * w' M w / 2` on the block starting at `at`.
    fn add_block(&mut self, weight: f64, at: usize, m: &Mat<f64>) {
        let d = m.nrows();
        let mut blk = self.h.view_mut((at, at), (d, d));
        blk += m * weight;
    }

    /// `weight * V(s0 + S z)`.
    fn add_value(&mut self, weight: f64, x: &AffineState, v: &QuadraticValue<f64>) {
        let ps = &v.p * &x.s;
        self.h += x.s.transpose() * &ps * weight;
        self.g += (x.s.transpose() * (&v.p * &x.s0 + &v.r)) * weight;
        self.c += weight * (0.5 * x.s0.dot(&(&v.p * &x.s0)) + v.r.dot(&x.s0) + v.c);
    }

    /// Stationary point and value.
    fn stationary(&self) -> Result<(Vector<f64>, f64)> {
        let z = self
            .h
            .clone()
            .lu()
            .solve(&(-&self.g))
            .ok_or_else(|| Error::Domain("stacked stationarity system is singular".into()))?;
        Ok((z.clone(), self.c + 0.5 * self.g.dot(&z)))
    }
}

fn step(
    x: &AffineState,
    a: &Mat<f64>,
    b: &Mat<f64>,
    at: usize,
    v_const: Option<&Vector<f64>>,
    b2: &Mat<f64>,
) -> AffineState {
    let mut s0 = a * &x.s0;
    if let Some(v) = v_const {
        s0 += b2 * v;
    }
    let mut s = a * &x.s;
    let mut blk = s.view_mut((0, at), (b.nrows(), b.ncols()));
    blk += b;
    AffineState { s0, s }
}

/// Edges of the subtree below `root` (inclusive of its out-edges) whose path
/// weight from `root` is positive, in pre-order, with those weights.
fn live_edges(layout: &TreeLayout, weights: &[f64], root: usize) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    let mut stack = vec![(root, 1.0)];
    while let Some((node, w)) = stack.pop() {
        if layout.is_leaf(node) {
            continue;
        }
        for a in 0..layout.branching() {
            let e = layout.edge(node, a);
            let we = w * weights[e];
            if we > 0.0 {
                out.push((node, a, we));
                stack.push((layout.child(node, a), we));
            }
        }
    }
    out
}

/// Root value of the primal game on a fixed belief tree by one joint
/// stationary-point solve over every edge's `(u, v)`.
///
/// The nested min-max over a tree of quadratic stages has the same
/// stationary point as the path-weighted sum of all stage and leaf costs,
/// so this is the nested saddle value whenever every edge saddle is well
/// posed. Running-cost weights are recomputed from the child beliefs.
pub fn nested_saddle_root_value(
    spec: &GameSpec<f64>,
    tree: &BeliefTree<f64>,
    x0: &Vector<f64>,
) -> Result<f64> {
    let l = &tree.layout;
    let edges = live_edges(l, &tree.weights, 0);
    if edges.len() > MAX_STACKED_EDGES {
        return Err(Error::Domain(format!(
            "{} live edges exceed the oracle limit",
            edges.len()
        )));
    }
    let (n, m1, m2) = (spec.n(), spec.m1(), spec.m2());
    let m = m1 + m2;
    let tau = spec.tau();
    let mut prob = Stacked::new(edges.len() * m);
    let mut states = vec![None; l.node_count()];
    states[0] = Some(AffineState {
        s0: x0.clone(),
        s: Mat::zeros(n, edges.len() * m),
    });
    let b = &spec.dynamics.b;
    for (slot, &(node, a, w)) in edges.iter().enumerate() {
        let child = l.child(node, a);
        let p = &tree.beliefs[child];
        let mut rw = Mat::zeros(m, m);
        for (pi, t) in p.iter().zip(&spec.types) {
            let mut blk = rw.view_mut((0, 0), (m1, m1));
            blk += &t.r * (tau * pi);
            let mut blk = rw.view_mut((m1, m1), (m2, m2));
            blk -= &t.s * (tau * pi);
        }
        prob.add_block(w, slot * m, &rw);
        let parent = states[node]
            .clone()
            .expect("pre-order visits parents first");
        let x = step(&parent, &spec.dynamics.a, b, slot * m, None, b);
        if l.is_leaf(child) {
            let mut leaf = QuadraticValue::zeros(n);
            for (pi, t) in p.iter().zip(&spec.types) {
                leaf.p += &t.q * *pi;
                leaf.r += &t.q_lin * *pi;
                leaf.c += t.c * pi;
            }
            prob.add_value(w, &x, &leaf);
        }
        states[child] = Some(x);
    }
    if l.horizon() == 0 {
        let leaf = crate::riccati::leaf_value(&tree.beliefs[0], spec);
        return Ok(leaf.evaluate(x0));
    }
    Ok(prob.stationary()?.1)
}

/// `C_{i,a}(x)` on edge `(node, a)` of a dual tree: type `i`'s cost of the
/// whole subtree below that edge against the fixed prototypes, minimized
/// jointly over P1's controls on every descendant edge.
pub fn joint_branch_cost(
    spec: &GameSpec<f64>,
    tree: &DualTree<f64>,
    i: usize,
    node: usize,
    a: usize,
    x: &Vector<f64>,
) -> Result<f64> {
    let l = tree.layout();
    let (n, m1) = (spec.n(), spec.m1());
    let data = spec
        .types
        .get(i)
        .ok_or_else(|| Error::Domain(format!("type index {i} out of range")))?;
    let child = l.child(node, a);
    let mut edges = vec![(node, a, 1.0)];
    edges.extend(live_edges(l, &tree.weights, child));
    if edges.len() > MAX_STACKED_EDGES {
        return Err(Error::Domain(format!(
            "{} live edges exceed the oracle limit",
            edges.len()
        )));
    }
    let tau = spec.tau();
    let dynm = &spec.dynamics;
    let mut prob = Stacked::new(edges.len() * m1);
    let mut states = std::collections::HashMap::new();
    states.insert(
        node,
        AffineState {
            s0: x.clone(),
            s: Mat::zeros(n, edges.len() * m1),
        },
    );
    let terminal = QuadraticValue {
        p: data.q.clone(),
        r: data.q_lin.clone(),
        c: data.c,
    };
    for (slot, &(from, b, w)) in edges.iter().enumerate() {
        let e = l.edge(from, b);
        let v = &tree.prototypes[e];
        prob.add_block(w, slot * m1, &(&data.r * tau));
        prob.c -= w * 0.5 * tau * v.dot(&(&data.s * v));
        let x_next = step(
            &states[&from],
            &dynm.a,
            &dynm.b1,
            slot * m1,
            Some(v),
            &dynm.b2,
        );
        let to = l.child(from, b);
        if l.is_leaf(to) {
            prob.add_value(w, &x_next, &terminal);
        }
        states.insert(to, x_next);
    }
    if nalgebra::Cholesky::new(prob.h.clone()).is_none() {
        return Err(Error::TypewiseIllPosed {
            type_index: i,
            node: l.node_id(node),
        });
    }
    Ok(prob.stationary()?.1)
}

/// Dual value at `node` computed with explicit child labels:
/// `inf { sum_a lambda_a max_i (p^a_i - C_ia(x)) : sum_a lambda_a p^a = p }`
/// as an LP in `(p^a, s_a)`, with `C_ia` from [`joint_branch_cost`].
pub fn child_label_lp_value(
    spec: &GameSpec<f64>,
    tree: &DualTree<f64>,
    node: usize,
    x: &Vector<f64>,
    p_hat: &Vector<f64>,
) -> Result<f64> {
    let l = tree.layout();
    if l.is_leaf(node) {
        return Ok((0..spec.num_types())
            .map(|i| p_hat[i] - spec.types[i].terminal_cost(x))
            .fold(f64::NEG_INFINITY, f64::max));
    }
    let (ni, na) = (spec.num_types(), l.branching());
    let mut cost = Mat::zeros(ni, na);
    for a in 0..na {
        for i in 0..ni {
            cost[(i, a)] = joint_branch_cost(spec, tree, i, node, a, x)?;
        }
    }
    // Variables: p^a_i at a * ni + i, then s_a at na * ni + a.
    let nv = na * ni + na;
    let mut c = Vector::zeros(nv);
    for a in 0..na {
        c[na * ni + a] = tree.weight(node, a);
    }
    let mut lp = LpProblem::new(c);
    lp.free = vec![true; nv];
    lp.a_ub = Mat::zeros(na * ni, nv);
    lp.b_ub = Vector::zeros(na * ni);
    for a in 0..na {
        for i in 0..ni {
            let row = a * ni + i;
            lp.a_ub[(row, a * ni + i)] = 1.0;
            lp.a_ub[(row, na * ni + a)] = -1.0;
            lp.b_ub[row] = cost[(i, a)];
        }
    }
    lp.a_eq = Mat::zeros(ni, nv);
    for i in 0..ni {
        for a in 0..na {
            lp.a_eq[(i, a * ni + i)] = tree.weight(node, a);
        }
    }
    lp.b_eq = p_hat.clone();
    Ok(small_lp_solve(&lp)?.objective)
}

/// Type costs `C_i(x; v)` by minimizing over `u` directly for each type.
pub fn direct_cost_vector(
    x: &Vector<f64>,
    v: &Vector<f64>,
    continuations: &[QuadraticValue<f64>],
    spec: &GameSpec<f64>,
) -> Result<Vector<f64>> {
    let dynm = &spec.dynamics;
    let tau = spec.tau();
    let mut out = Vector::zeros(spec.num_types());
    for (i, (cont, data)) in continuations.iter().zip(&spec.types).enumerate() {
        let base = &dynm.a * x + &dynm.b2 * v;
        // Gradient in u: tau R u + B1'(P (base + B1 u) + r) = 0.
        let h = &data.r * tau + dynm.b1.transpose() * &cont.p * &dynm.b1;
        let rhs = -(dynm.b1.transpose() * (&cont.p * &base + &cont.r));
        let u = h.lu().solve(&rhs).ok_or_else(|| Error::TypewiseIllPosed {
            type_index: i,
            node: crate::tree::NodeId::root(),
        })?;
        let next = &base + &dynm.b1 * &u;
        out[i] = data.running_cost(&u, v) * tau + cont.evaluate(&next);
    }
    Ok(out)
}

/// Type-cost vectors of a one-dimensional grid of P2 actions.
pub struct ActionGrid {
    pub actions: Vec<f64>,
    pub costs: Vec<Vector<f64>>,
}

impl ActionGrid {
    /// `v` from `lo` to `hi` in steps of `step`; requires `m2 = 1`.
    pub fn new(
        lo: f64,
        hi: f64,
        step: f64,
        x: &Vector<f64>,
        continuations: &[QuadraticValue<f64>],
        spec: &GameSpec<f64>,
    ) -> Result<Self> {
        if spec.m2() != 1 {
            return Err(Error::Domain("action grid needs a scalar P2 action".into()));
        }
        let count = ((hi - lo) / step).round() as usize + 1;
        let actions: Vec<f64> = (0..count).map(|j| lo + j as f64 * step).collect();
        let costs = actions
            .iter()
            .map(|&v| direct_cost_vector(x, &Vector::from_element(1, v), continuations, spec))
            .collect::<Result<_>>()?;
        Ok(Self { actions, costs })
    }

    /// `max_v q'C(x; v)` over the grid, with the maximizing action.
    pub fn support(&self, q: &Vector<f64>) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for (v, c) in self.actions.iter().zip(&self.costs) {
            let s = q.dot(c);
            if s > best.0 {
                best = (s, *v);
            }
        }
        best
    }

    /// `max_t { t p1 + (1-t) p2 - sigma(t, 1-t) }` for two types by ternary
    /// search on the concave objective.
    pub fn node_value_two_types(&self, p_hat: &Vector<f64>) -> f64 {
        let f = |t: f64| {
            let q = Vector::from_vec(vec![t, 1.0 - t]);
            q.dot(p_hat) - self.support(&q).0
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-12 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(m1) < f(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        f(0.5 * (lo + hi)).max(f(0.0)).max(f(1.0))
    }
}
