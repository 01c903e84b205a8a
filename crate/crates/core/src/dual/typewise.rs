//! Fixed reduced dual trees and the `I` independent typewise recursions.

use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{DiscreteDynamics, GameSpec, TypeData};
use crate::linalg::{min_eigenvalue, symmetrize, Mat, Vector};
use crate::riccati::{evaluate_value, QuadraticValue};
use crate::tree::{NodeId, TreeLayout};
use crate::Real;

/// Reduced dual tree: an `(I + 1)`-ary tree of depth `K` carrying a P2
/// prototype action and a branch weight on every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTree<T: Real> {
    layout: TreeLayout,
    num_types: usize,
    /// `v[edge]`.
    pub prototypes: Vec<Vector<T>>,
    /// `lambda[edge]`; each node's weights lie on the simplex.
    pub weights: Vec<T>,
}

impl<T: Real> DualTree<T> {
    pub fn new(
        num_types: usize,
        horizon: usize,
        prototypes: Vec<Vector<T>>,
        weights: Vec<T>,
    ) -> Result<Self> {
        if num_types == 0 {
            return Err(Error::Domain("dual tree needs at least one type".into()));
        }
        let layout = TreeLayout::new(num_types + 1, horizon)?;
        let edges = layout.edge_count();
        if prototypes.len() != edges || weights.len() != edges {
            return Err(Error::Dimension(format!(
                "dual tree of depth {horizon} with {} branches has {edges} edges; got {} prototypes and {} weights",
                num_types + 1,
                prototypes.len(),
                weights.len()
            )));
        }
        let tree = Self {
            layout,
            num_types,
            prototypes,
            weights,
        };
        tree.check_weights()?;
        Ok(tree)
    }

    /// Every prototype equal to `v`, uniform weights.
    pub fn constant(num_types: usize, horizon: usize, v: Vector<T>) -> Result<Self> {
        let layout = TreeLayout::new(num_types + 1, horizon)?;
        let edges = layout.edge_count();
        let w = T::one() / T::lit((num_types + 1) as f64);
        Self::new(num_types, horizon, vec![v; edges], vec![w; edges])
    }

    /// Seeded prototypes with entries in `[-scale, scale]` and weights drawn
    /// uniformly then normalized per node.
    pub fn random(
        num_types: usize,
        horizon: usize,
        m2: usize,
        scale: f64,
        seed: u64,
    ) -> Result<Self> {
        let layout = TreeLayout::new(num_types + 1, horizon)?;
        let b = layout.branching();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut prototypes = Vec::with_capacity(layout.edge_count());
        let mut weights = Vec::with_capacity(layout.edge_count());
        for _ in 0..layout.internal_count() {
            let raw: Vec<f64> = (0..b).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            for w in raw {
                prototypes.push(Vector::from_fn(m2, |_, _| {
                    T::lit(scale * rng.random_range(-1.0..1.0))
                }));
                weights.push(T::lit(w / total));
            }
        }
        Self::new(num_types, horizon, prototypes, weights)
    }

    fn check_weights(&self) -> Result<()> {
        let b = self.layout.branching();
        for node in 0..self.layout.internal_count() {
            let w = &self.weights[node * b..(node + 1) * b];
            if w.iter()
                .any(|x| !(x.as_f64() >= 0.0) || !x.as_f64().is_finite())
            {
                return Err(Error::Domain(format!(
                    "negative or non-finite branch weight at {}",
                    self.layout.node_id(node)
                )));
            }
            let sum = w.iter().fold(T::zero(), |acc, x| acc + *x);
            if (sum - T::one()).abs() > T::tol(1e-12) {
                return Err(Error::Domain(format!(
                    "branch weights at {} sum to {sum}",
                    self.layout.node_id(node)
                )));
            }
        }
        if self
            .prototypes
            .iter()
            .any(|v| v.iter().any(|x| !x.as_f64().is_finite()))
        {
            return Err(Error::Domain("prototype actions must be finite".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> &TreeLayout {
        &self.layout
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn horizon(&self) -> usize {
        self.layout.horizon()
    }

    pub fn prototype(&self, node: usize, a: usize) -> &Vector<T> {
        &self.prototypes[self.layout.edge(node, a)]
    }

    pub fn weight(&self, node: usize, a: usize) -> T {
        self.weights[self.layout.edge(node, a)]
    }

    pub fn node_weights(&self, node: usize) -> &[T] {
        let b = self.layout.branching();
        &self.weights[node * b..(node + 1) * b]
    }
}

/// Branch cost of one type on one edge and P1's minimizing feedback
/// `u = gain x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypewiseEdge<T: Real> {
    pub cost: QuadraticValue<T>,
    pub gain: Mat<T>,
    pub offset: Vector<T>,
}

/// One type's recursion: `J_i` per node, `C_i` per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct TypewiseTree<T: Real> {
    pub nodes: Vec<QuadraticValue<T>>,
    pub edges: Vec<TypewiseEdge<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypewiseCostTree<T: Real> {
    pub layout: TreeLayout,
    pub types: Vec<TypewiseTree<T>>,
}

impl<T: Real> TypewiseCostTree<T> {
    pub fn node_cost(&self, i: usize, node: usize) -> &QuadraticValue<T> {
        &self.types[i].nodes[node]
    }

    pub fn branch_cost(&self, i: usize, node: usize, a: usize) -> &TypewiseEdge<T> {
        &self.types[i].edges[self.layout.edge(node, a)]
    }

    /// Largest coefficient gap between each `J_i` and the weighted sum of its
    /// branch costs.
    pub fn closure_residual(&self, tree: &DualTree<T>) -> T {
        let l = &self.layout;
        let mut worst = T::zero();
        for t in &self.types {
            for node in 0..l.internal_count() {
                let mut acc = QuadraticValue::zeros(t.nodes[node].dim());
                for a in 0..l.branching() {
                    let w = tree.weight(node, a);
                    let c = &t.edges[l.edge(node, a)].cost;
                    acc.p += &c.p * w;
                    acc.r += &c.r * w;
                    acc.c += c.c * w;
                }
                let j = &t.nodes[node];
                for d in [
                    (&acc.p - &j.p).amax(),
                    (&acc.r - &j.r).amax(),
                    (acc.c - j.c).abs(),
                ] {
                    if d > worst {
                        worst = d;
                    }
                }
            }
        }
        worst
    }
}

/// `C(x) = min_u { tau(u'Ru - v'Sv)/2 + J+(Ax + B1 u + B2 v) }` in closed form,
/// or the smallest eigenvalue of `H = tau R + B1'P+B1` when it is not
/// positive definite.
pub(crate) fn typewise_branch<T: Real>(
    child: &QuadraticValue<T>,
    data: &TypeData<T>,
    v: &Vector<T>,
    dynamics: &DiscreteDynamics<T>,
) -> std::result::Result<TypewiseEdge<T>, T> {
    let DiscreteDynamics { a, b1, b2, tau, .. } = dynamics;
    let half = T::lit(0.5);
    let pb1 = &child.p * b1;
    let mut h = &data.r * *tau + b1.transpose() * &pb1;
    symmetrize(&mut h);
    let chol = Cholesky::new(h.clone()).ok_or_else(|| min_eigenvalue(&h))?;
    let g = pb1.transpose() * a;
    let b2v = b2 * v;
    let w = &child.p * &b2v + &child.r;
    let d0 = b1.transpose() * &w;
    let gain = -chol.solve(&g);
    let offset = -chol.solve(&d0);
    let mut p = a.transpose() * &child.p * a + g.transpose() * &gain;
    symmetrize(&mut p);
    let r = a.transpose() * &w + g.transpose() * &offset;
    let c = -half * *tau * v.dot(&(&data.s * v))
        + half * b2v.dot(&(&child.p * &b2v))
        + child.r.dot(&b2v)
        + child.c
        + half * d0.dot(&offset);
    Ok(TypewiseEdge {
        cost: QuadraticValue { p, r, c },
        gain,
        offset,
    })
}

fn check_compatible<T: Real>(tree: &DualTree<T>, spec: &GameSpec<T>) -> Result<()> {
    if tree.num_types() != spec.num_types() || tree.horizon() != spec.horizon {
        return Err(Error::Dimension(format!(
            "dual tree ({} types, depth {}) does not match game ({} types, horizon {})",
            tree.num_types(),
            tree.horizon(),
            spec.num_types(),
            spec.horizon
        )));
    }
    if let Some(v) = tree.prototypes.iter().find(|v| v.len() != spec.m2()) {
        return Err(Error::Dimension(format!(
            "prototype of length {}, expected m2 = {}",
            v.len(),
            spec.m2()
        )));
    }
    Ok(())
}

/// Recursion of type `i` alone: terminal `J_i = g_i`, then branch costs and
/// weighted averages up to the root.
pub fn typewise_recursion<T: Real>(
    tree: &DualTree<T>,
    spec: &GameSpec<T>,
    i: usize,
) -> Result<TypewiseTree<T>> {
    check_compatible(tree, spec)?;
    if i >= spec.num_types() {
        return Err(Error::Domain(format!("type index {i} out of range")));
    }
    let l = tree.layout();
    let data = &spec.types[i];
    let n = spec.n();
    let placeholder = TypewiseEdge {
        cost: QuadraticValue::zeros(n),
        gain: Mat::zeros(0, 0),
        offset: Vector::zeros(0),
    };
    let mut nodes = vec![QuadraticValue::zeros(n); l.node_count()];
    let mut edges = vec![placeholder; l.edge_count()];
    let terminal = QuadraticValue {
        p: data.q.clone(),
        r: data.q_lin.clone(),
        c: data.c,
    };
    for leaf in l.level(l.horizon()) {
        nodes[leaf] = terminal.clone();
    }
    for k in (0..l.horizon()).rev() {
        for node in l.level(k) {
            let mut acc = QuadraticValue::zeros(n);
            for a in 0..l.branching() {
                let e = l.edge(node, a);
                let edge = typewise_branch(
                    &nodes[l.child(node, a)],
                    data,
                    &tree.prototypes[e],
                    &spec.dynamics,
                )
                .map_err(|_| Error::TypewiseIllPosed {
                    type_index: i,
                    node: l.node_id(node),
                })?;
                let w = tree.weights[e];
                acc.p += &edge.cost.p * w;
                acc.r += &edge.cost.r * w;
                acc.c += edge.cost.c * w;
                edges[e] = edge;
            }
            symmetrize(&mut acc.p);
            nodes[node] = acc;
        }
    }
    Ok(TypewiseTree { nodes, edges })
}

/// All `I` recursions, run concurrently.
pub fn typewise_backward_pass<T: Real>(
    tree: &DualTree<T>,
    spec: &GameSpec<T>,
) -> Result<TypewiseCostTree<T>> {
    let types = (0..spec.num_types())
        .into_par_iter()
        .map(|i| typewise_recursion(tree, spec, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(TypewiseCostTree {
        layout: tree.layout().clone(),
        types,
    })
}

pub fn typewise_backward_pass_sequential<T: Real>(
    tree: &DualTree<T>,
    spec: &GameSpec<T>,
) -> Result<TypewiseCostTree<T>> {
    let types = (0..spec.num_types())
        .map(|i| typewise_recursion(tree, spec, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(TypewiseCostTree {
        layout: tree.layout().clone(),
        types,
    })
}

/// `W = max_i {p_i - J_i(x)}` with the maximizing types.
#[derive(Debug, Clone, PartialEq)]
pub struct DualValue<T: Real> {
    pub value: T,
    /// Smallest maximizing index.
    pub argmax: usize,
    /// Every index within rounding of the maximum.
    pub active: Vec<usize>,
    /// `J_i(x)` per type.
    pub costs: Vector<T>,
}

pub fn fixed_tree_dual_value<T: Real>(
    costs: &TypewiseCostTree<T>,
    node: &NodeId,
    x: &Vector<T>,
    p_hat: &Vector<T>,
) -> Result<DualValue<T>> {
    let idx = costs.layout.index_of(node)?;
    let ni = costs.types.len();
    if p_hat.len() != ni {
        return Err(Error::Dimension(format!(
            "dual label has {} entries, expected {ni}",
            p_hat.len()
        )));
    }
    if x.len() != costs.types[0].nodes[idx].dim() {
        return Err(Error::Dimension(format!("state has {} entries", x.len())));
    }
    let j = Vector::from_fn(ni, |i, _| evaluate_value(&costs.types[i].nodes[idx], x));
    Ok(max_form(p_hat, j))
}

pub(crate) fn max_form<T: Real>(p_hat: &Vector<T>, costs: Vector<T>) -> DualValue<T> {
    let scores: Vec<T> = (0..costs.len()).map(|i| p_hat[i] - costs[i]).collect();
    let mut argmax = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[argmax] {
            argmax = i;
        }
    }
    let value = scores[argmax];
    let slack = T::tol(1e-12) * (T::one() + value.abs());
    let active = (0..scores.len())
        .filter(|&i| value - scores[i] <= slack)
        .collect();
    DualValue {
        value,
        argmax,
        active,
        costs,
    }
}
