//! Backward pass: edge saddle solves and node aggregation.

use crate::belief::BeliefTree;
use crate::error::{EdgeLabel, Error, Result};
use crate::game::{DiscreteDynamics, GameSpec};
use crate::linalg::{
    gemm_nn, gemm_tn, gemv_nn, gemv_tn, mat_axpy, symmetrize, Mat, SaddleDefect, SaddleFactor,
    Vector,
};
use crate::tree::TreeLayout;
use crate::Real;

/// `V(x) = x'Px/2 + r'x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticValue<T: Real> {
    pub p: Mat<T>,
    pub r: Vector<T>,
    pub c: T,
}

impl<T: Real> QuadraticValue<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            p: Mat::zeros(n, n),
            r: Vector::zeros(n),
            c: T::zero(),
        }
    }

    pub fn evaluate(&self, x: &Vector<T>) -> T {
        evaluate_value(self, x)
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }
}

pub fn evaluate_value<T: Real>(v: &QuadraticValue<T>, x: &Vector<T>) -> T {
    T::lit(0.5) * x.dot(&(&v.p * x)) + v.r.dot(x) + v.c
}

/// Saddle solution of one edge: `[u; v] = gain * x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSolution<T: Real> {
    pub h: Mat<T>,
    pub gain: Mat<T>,
    pub offset: Vector<T>,
    pub value: QuadraticValue<T>,
    m1: usize,
}

impl<T: Real> EdgeSolution<T> {
    pub fn ku(&self) -> Mat<T> {
        self.gain.rows(0, self.m1).into_owned()
    }

    pub fn kv(&self) -> Mat<T> {
        self.gain
            .rows(self.m1, self.gain.nrows() - self.m1)
            .into_owned()
    }

    pub fn kappa_u(&self) -> Vector<T> {
        self.offset.rows(0, self.m1).into_owned()
    }

    pub fn kappa_v(&self) -> Vector<T> {
        self.offset
            .rows(self.m1, self.offset.len() - self.m1)
            .into_owned()
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    /// Feedback actions `(u*, v*)` at state `x`.
    pub fn controls(&self, x: &Vector<T>) -> (Vector<T>, Vector<T>) {
        let w = &self.gain * x + &self.offset;
        let m = w.len();
        (
            w.rows(0, self.m1).into_owned(),
            w.rows(self.m1, m - self.m1).into_owned(),
        )
    }
}

/// Belief-weighted terminal data `sum_i p_i (Q_i, q_i, c_i)`.
pub fn leaf_value<T: Real>(p_leaf: &Vector<T>, spec: &GameSpec<T>) -> QuadraticValue<T> {
    let mut v = QuadraticValue::zeros(spec.n());
    leaf_value_into(p_leaf, spec, &mut v);
    v
}

/// Solves `min_u max_v` of
/// `tau(u'R u - v'S v)/2 + V+(A x + B1 u + B2 v)` for every `x`.
pub fn solve_edge<T: Real>(
    child: &QuadraticValue<T>,
    avg_r: &Mat<T>,
    avg_s: &Mat<T>,
    dynamics: &DiscreteDynamics<T>,
) -> Result<EdgeSolution<T>> {
    solve_edge_at(child, avg_r, avg_s, dynamics, None, EdgeLabel::Unplaced)
}

pub(crate) fn solve_edge_at<T: Real>(
    child: &QuadraticValue<T>,
    avg_r: &Mat<T>,
    avg_s: &Mat<T>,
    dynamics: &DiscreteDynamics<T>,
    noise: Option<&Mat<T>>,
    label: EdgeLabel,
) -> Result<EdgeSolution<T>> {
    let n = dynamics.a.nrows();
    let (m1, m2) = (dynamics.m1(), dynamics.m2());
    let mut work = EdgeWork::new(n, m1, m2);
    let mut out = EdgeSolution::zeros(n, m1, m2);
    solve_edge_into(child, avg_r, avg_s, dynamics, noise, &mut work, &mut out)
        .map_err(|d| defect_error(d, label))?;
    Ok(out)
}

pub(crate) fn defect_error<T: Real>(defect: SaddleDefect<T>, edge: EdgeLabel) -> Error {
    match defect {
        SaddleDefect::MinimizerBlock(e) => Error::IllPosedSaddle {
            edge,
            block: "H_uu",
            eigenvalue: e.as_f64(),
        },
        SaddleDefect::MaximizerBlock(e) => Error::IllPosedSaddle {
            edge,
            block: "H_vv",
            eigenvalue: e.as_f64(),
        },
    }
}

/// Scratch buffers for [`solve_edge_into`].
#[derive(Debug, Clone)]
pub struct EdgeWork<T: Real> {
    pb: Mat<T>,
    pa: Mat<T>,
    g: Mat<T>,
    gv: Vector<T>,
    hinv: Mat<T>,
    factor: SaddleFactor<T>,
}

impl<T: Real> EdgeWork<T> {
    pub fn new(n: usize, m1: usize, m2: usize) -> Self {
        let m = m1 + m2;
        Self {
            pb: Mat::zeros(n, m),
            pa: Mat::zeros(n, n),
            g: Mat::zeros(m, n),
            gv: Vector::zeros(m),
            hinv: Mat::zeros(m, m),
            factor: SaddleFactor::with_dims(m1, m2),
        }
    }
}

impl<T: Real> EdgeSolution<T> {
    pub fn zeros(n: usize, m1: usize, m2: usize) -> Self {
        let m = m1 + m2;
        Self {
            h: Mat::zeros(m, m),
            gain: Mat::zeros(m, n),
            offset: Vector::zeros(m),
            value: QuadraticValue::zeros(n),
            m1,
        }
    }
}

/// Allocation-free edge solve into preallocated `out`.
pub fn solve_edge_into<T: Real>(
    child: &QuadraticValue<T>,
    avg_r: &Mat<T>,
    avg_s: &Mat<T>,
    dynamics: &DiscreteDynamics<T>,
    noise: Option<&Mat<T>>,
    work: &mut EdgeWork<T>,
    out: &mut EdgeSolution<T>,
) -> std::result::Result<(), SaddleDefect<T>> {
    let tau = dynamics.tau;
    let m1 = dynamics.m1();
    let m2 = dynamics.m2();
    let (one, zero, half) = (T::one(), T::zero(), T::lit(0.5));
    gemm_nn(&mut work.pb, one, &child.p, &dynamics.b, zero);
    gemm_tn(&mut out.h, one, &work.pb, &dynamics.b, zero);
    for i in 0..m1 {
        for j in 0..m1 {
            out.h[(i, j)] += tau * avg_r[(i, j)];
        }
    }
    for i in 0..m2 {
        for j in 0..m2 {
            out.h[(m1 + i, m1 + j)] -= tau * avg_s[(i, j)];
        }
    }
    symmetrize(&mut out.h);
    work.factor.refactor(&out.h)?;
    // G = B'P+A, g = B'r+.
    gemm_tn(&mut work.g, one, &work.pb, &dynamics.a, zero);
    gemv_tn(&mut work.gv, one, &dynamics.b, &child.r, zero);
    work.factor.inverse_into(&mut work.hinv);
    gemm_nn(&mut out.gain, -one, &work.hinv, &work.g, zero);
    gemv_nn(&mut out.offset, -one, &work.hinv, &work.gv, zero);

    gemm_nn(&mut work.pa, one, &child.p, &dynamics.a, zero);
    gemm_tn(&mut out.value.p, one, &work.pa, &dynamics.a, zero);
    gemm_tn(&mut out.value.p, one, &work.g, &out.gain, one);
    symmetrize(&mut out.value.p);
    gemv_tn(&mut out.value.r, one, &dynamics.a, &child.r, zero);
    gemv_tn(&mut out.value.r, one, &work.g, &out.offset, one);
    let mut c = child.c + half * work.gv.dot(&out.offset);
    if let Some(sigma) = noise {
        c += half * crate::linalg::frob_dot(&child.p, sigma);
    }
    out.value.c = c;
    out.m1 = m1;
    Ok(())
}

/// Coefficient-wise convex combination of edge values.
pub fn aggregate_node<'a, T: Real>(
    edges: impl IntoIterator<Item = (T, &'a QuadraticValue<T>)>,
) -> QuadraticValue<T> {
    let mut iter = edges.into_iter().peekable();
    let n = iter.peek().map(|(_, v)| v.dim()).unwrap_or(0);
    let mut out = QuadraticValue::zeros(n);
    aggregate_into(iter, &mut out);
    out
}

fn aggregate_into<'a, T: Real>(
    edges: impl IntoIterator<Item = (T, &'a QuadraticValue<T>)>,
    out: &mut QuadraticValue<T>,
) {
    out.p.fill(T::zero());
    out.r.fill(T::zero());
    out.c = T::zero();
    for (w, v) in edges {
        if w == T::zero() {
            continue;
        }
        mat_axpy(&mut out.p, w, &v.p);
        out.r.axpy(w, &v.r, T::one());
        out.c += w * v.c;
    }
    symmetrize(&mut out.p);
}

/// Node values and edge saddle solutions over the whole public tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTree<T: Real> {
    pub layout: TreeLayout,
    pub nodes: Vec<QuadraticValue<T>>,
    /// Indexed by edge; pruned edges are solved too but carry zero weight.
    pub edges: Vec<EdgeSolution<T>>,
}

impl<T: Real> ValueTree<T> {
    pub fn root(&self) -> &QuadraticValue<T> {
        &self.nodes[0]
    }

    pub fn edge(&self, node: usize, a: usize) -> &EdgeSolution<T> {
        &self.edges[self.layout.edge(node, a)]
    }
}

pub fn backward_pass<T: Real>(tree: &BeliefTree<T>, spec: &GameSpec<T>) -> Result<ValueTree<T>> {
    backward_pass_with_noise(tree, spec, None)
}

/// Backward pass in which every step additionally pays `tr(P+ Sigma)/2`, the
/// expected cost of an additive zero-mean disturbance with covariance `Sigma`.
/// Gains are unaffected.
pub fn backward_pass_with_noise<T: Real>(
    tree: &BeliefTree<T>,
    spec: &GameSpec<T>,
    noise: Option<&Mat<T>>,
) -> Result<ValueTree<T>> {
    let mut out = ValueTree::zeros(&tree.layout, spec);
    backward_pass_into(tree, spec, noise, &mut out)?;
    Ok(out)
}

impl<T: Real> ValueTree<T> {
    pub(crate) fn zeros(layout: &TreeLayout, spec: &GameSpec<T>) -> Self {
        let (n, m1, m2) = (spec.n(), spec.m1(), spec.m2());
        Self {
            layout: layout.clone(),
            nodes: vec![QuadraticValue::zeros(n); layout.node_count()],
            edges: vec![EdgeSolution::zeros(n, m1, m2); layout.edge_count()],
        }
    }
}

/// [`backward_pass_with_noise`] into storage shaped by [`ValueTree::zeros`].
pub(crate) fn backward_pass_into<T: Real>(
    tree: &BeliefTree<T>,
    spec: &GameSpec<T>,
    noise: Option<&Mat<T>>,
    out: &mut ValueTree<T>,
) -> Result<()> {
    let layout = &tree.layout;
    let b = layout.branching();
    let mut work = EdgeWork::new(spec.n(), spec.m1(), spec.m2());
    for leaf in layout.level(layout.horizon()) {
        leaf_value_into(&tree.beliefs[leaf], spec, &mut out.nodes[leaf]);
    }
    for k in (0..layout.horizon()).rev() {
        for node in layout.level(k) {
            let (head, tail) = out.nodes.split_at_mut(node + 1);
            for a in 0..b {
                let e = layout.edge(node, a);
                let child = &tail[layout.child(node, a) - node - 1];
                solve_edge_into(
                    child,
                    &tree.avg_r[e],
                    &tree.avg_s[e],
                    &spec.dynamics,
                    noise,
                    &mut work,
                    &mut out.edges[e],
                )
                .map_err(|d| {
                    defect_error(
                        d,
                        EdgeLabel::At {
                            node: layout.node_id(node),
                            branch: a,
                        },
                    )
                })?;
            }
            let edges = &out.edges;
            aggregate_into(
                (0..b).map(|a| {
                    let e = layout.edge(node, a);
                    (tree.weights[e], &edges[e].value)
                }),
                &mut head[node],
            );
        }
    }
    Ok(())
}

fn leaf_value_into<T: Real>(p_leaf: &Vector<T>, spec: &GameSpec<T>, v: &mut QuadraticValue<T>) {
    v.p.fill(T::zero());
    v.r.fill(T::zero());
    v.c = T::zero();
    for (pi, t) in p_leaf.iter().zip(&spec.types) {
        mat_axpy(&mut v.p, *pi, &t.q);
        v.r.axpy(*pi, &t.q_lin, T::one());
        v.c += *pi * t.c;
    }
}

/// Complete-information saddle solution for a single type.
#[derive(Debug, Clone, PartialEq)]
pub struct CompleteInfoSolution<T: Real> {
    /// `values[k]` for `k = 0..=K`.
    pub values: Vec<QuadraticValue<T>>,
    /// `stages[k]` for `k = 0..K`.
    pub stages: Vec<EdgeSolution<T>>,
}

pub fn complete_info_solve<T: Real>(
    spec: &GameSpec<T>,
    type_index: usize,
) -> Result<CompleteInfoSolution<T>> {
    let data = spec.types.get(type_index).ok_or_else(|| {
        Error::Domain(format!(
            "type index {type_index} out of range (I = {})",
            spec.num_types()
        ))
    })?;
    let k_max = spec.horizon;
    let mut values = vec![QuadraticValue::zeros(spec.n()); k_max + 1];
    values[k_max] = QuadraticValue {
        p: data.q.clone(),
        r: data.q_lin.clone(),
        c: data.c,
    };
    let mut stages = Vec::with_capacity(k_max);
    for k in (0..k_max).rev() {
        let label = EdgeLabel::At {
            node: crate::tree::NodeId {
                k,
                omega: vec![0; k],
            },
            branch: 0,
        };
        let sol = solve_edge_at(
            &values[k + 1],
            &data.r,
            &data.s,
            &spec.dynamics,
            None,
            label,
        )?;
        values[k] = sol.value.clone();
        stages.push(sol);
    }
    stages.reverse();
    Ok(CompleteInfoSolution { values, stages })
}
