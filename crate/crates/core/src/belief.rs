//! Signaling policies and the forward Bayes pass over the public tree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::linalg::{mat_axpy, Mat, Vector};
use crate::tree::TreeLayout;
use crate::Real;

/// Branches whose probability falls below this are pruned from aggregation.
pub const LAMBDA_FLOOR: f64 = 1e-9;

/// Row-wise softmax with max-subtraction.
pub fn softmax_rows<T: Real>(phi: &Mat<T>) -> Result<Mat<T>> {
    let mut out = phi.clone();
    softmax_rows_into(phi, &mut out)?;
    Ok(out)
}

pub(crate) fn softmax_rows_into<T: Real>(phi: &Mat<T>, out: &mut Mat<T>) -> Result<()> {
    if phi.iter().any(|x| x.as_f64().is_nan()) {
        return Err(Error::Domain("NaN in signaling logits".into()));
    }
    for i in 0..phi.nrows() {
        let row = phi.row(i);
        let top = row.max();
        let mut total = T::zero();
        for a in 0..phi.ncols() {
            let e = (phi[(i, a)] - top).exp();
            out[(i, a)] = e;
            total += e;
        }
        for a in 0..phi.ncols() {
            out[(i, a)] /= total;
        }
    }
    Ok(())
}

/// Logits `phi[node]` (row = type, column = prototype) for every internal node.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalingPolicy<T: Real> {
    layout: TreeLayout,
    logits: Vec<Mat<T>>,
}

impl<T: Real> SignalingPolicy<T> {
    pub fn zeros(num_types: usize, horizon: usize) -> Result<Self> {
        let layout = TreeLayout::new(num_types, horizon)?;
        let logits = vec![Mat::zeros(num_types, num_types); layout.internal_count()];
        Ok(Self { layout, logits })
    }

    /// Independent `N(0, scale^2)` logits from a seeded generator.
    pub fn random(num_types: usize, horizon: usize, scale: f64, seed: u64) -> Result<Self> {
        let mut policy = Self::zeros(num_types, horizon)?;
        if scale > 0.0 {
            let normal = Normal::new(0.0, scale).map_err(|e| Error::Domain(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for m in &mut policy.logits {
                for x in m.iter_mut() {
                    *x = T::lit(normal.sample(&mut rng));
                }
            }
        }
        Ok(policy)
    }

    pub fn from_logits(num_types: usize, horizon: usize, logits: Vec<Mat<T>>) -> Result<Self> {
        let layout = TreeLayout::new(num_types, horizon)?;
        if logits.len() != layout.internal_count() {
            return Err(Error::Dimension(format!(
                "{} logit blocks for {} internal nodes",
                logits.len(),
                layout.internal_count()
            )));
        }
        if let Some(m) = logits.iter().find(|m| m.shape() != (num_types, num_types)) {
            return Err(Error::Dimension(format!(
                "logit block is {}x{}, expected {num_types}x{num_types}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self { layout, logits })
    }

    pub fn layout(&self) -> &TreeLayout {
        &self.layout
    }

    pub fn num_types(&self) -> usize {
        self.layout.branching()
    }

    pub fn horizon(&self) -> usize {
        self.layout.horizon()
    }

    pub fn logits(&self) -> &[Mat<T>] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [Mat<T>] {
        &mut self.logits
    }

    pub fn alpha(&self, node: usize) -> Result<Mat<T>> {
        softmax_rows(&self.logits[node])
    }

    pub fn alphas(&self) -> Result<Vec<Mat<T>>> {
        self.logits.iter().map(softmax_rows).collect()
    }

    /// Policy of the subtree rooted at flat index `root`, with each logit row
    /// shifted to zero mean.
    pub fn subtree(&self, root: usize) -> Result<Self> {
        let depth = self.layout.depth_of(root);
        let sub = TreeLayout::new(self.num_types(), self.horizon() - depth)?;
        let logits = (0..sub.internal_count())
            .map(|local| {
                let mut m = self.logits[self.layout.embed(root, &sub, local)].clone();
                center_rows(&mut m);
                m
            })
            .collect();
        Ok(Self {
            layout: sub,
            logits,
        })
    }

    /// `self + step * direction`, blockwise.
    pub fn axpy(&self, step: T, direction: &[Mat<T>]) -> Self {
        let logits = self
            .logits
            .iter()
            .zip(direction)
            .map(|(p, d)| p + d * step)
            .collect();
        Self {
            layout: self.layout.clone(),
            logits,
        }
    }
}

pub(crate) fn center_rows<T: Real>(m: &mut Mat<T>) {
    let cols = T::lit(m.ncols() as f64);
    for i in 0..m.nrows() {
        let mean = m.row(i).sum() / cols;
        for a in 0..m.ncols() {
            m[(i, a)] -= mean;
        }
    }
}

/// Beliefs and branch probabilities on the public tree for a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefTree<T: Real> {
    pub layout: TreeLayout,
    /// `p[node]`.
    pub beliefs: Vec<Vector<T>>,
    /// `alpha[node]`, copied from the policy.
    pub alphas: Vec<Mat<T>>,
    /// Raw branch probabilities `lambda[edge]`.
    pub lambda: Vec<T>,
    /// Probabilities renormalized over unpruned siblings; zero when pruned.
    pub weights: Vec<T>,
    pub pruned: Vec<bool>,
    /// Belief-averaged running-cost matrices per edge, from the child belief.
    pub avg_r: Vec<Mat<T>>,
    pub avg_s: Vec<Mat<T>>,
}

pub fn forward_bayes_pass<T: Real>(
    policy: &SignalingPolicy<T>,
    spec: &GameSpec<T>,
) -> Result<BeliefTree<T>> {
    let mut tree = BeliefTree::zeros(policy.layout(), spec);
    forward_bayes_into(policy, spec, &mut tree)?;
    Ok(tree)
}

impl<T: Real> BeliefTree<T> {
    pub(crate) fn zeros(layout: &TreeLayout, spec: &GameSpec<T>) -> Self {
        let ni = layout.branching();
        let edges = layout.edge_count();
        Self {
            layout: layout.clone(),
            beliefs: vec![Vector::zeros(ni); layout.node_count()],
            alphas: vec![Mat::zeros(ni, ni); layout.internal_count()],
            lambda: vec![T::zero(); edges],
            weights: vec![T::zero(); edges],
            pruned: vec![false; edges],
            avg_r: vec![Mat::zeros(spec.m1(), spec.m1()); edges],
            avg_s: vec![Mat::zeros(spec.m2(), spec.m2()); edges],
        }
    }
}

/// [`forward_bayes_pass`] into storage shaped by [`BeliefTree::zeros`].
pub(crate) fn forward_bayes_into<T: Real>(
    policy: &SignalingPolicy<T>,
    spec: &GameSpec<T>,
    tree: &mut BeliefTree<T>,
) -> Result<()> {
    let layout = policy.layout();
    let ni = spec.num_types();
    if layout.branching() != ni || layout.horizon() != spec.horizon {
        return Err(Error::Dimension(format!(
            "policy tree ({} types, depth {}) does not match game ({} types, horizon {})",
            layout.branching(),
            layout.horizon(),
            ni,
            spec.horizon
        )));
    }
    for (phi, alpha) in policy.logits.iter().zip(tree.alphas.iter_mut()) {
        softmax_rows_into(phi, alpha)?;
    }
    let floor = T::lit(LAMBDA_FLOOR);
    tree.beliefs[0].copy_from(&spec.prior);
    for node in 0..layout.internal_count() {
        let (head, tail) = tree.beliefs.split_at_mut(node + 1);
        let p = &head[node];
        let alpha = &tree.alphas[node];
        let mut kept = T::zero();
        for a in 0..ni {
            let e = layout.edge(node, a);
            let mut lam = T::zero();
            for i in 0..ni {
                lam += p[i] * alpha[(i, a)];
            }
            tree.lambda[e] = lam;
            let post = &mut tail[layout.child(node, a) - node - 1];
            tree.pruned[e] = lam < floor;
            if tree.pruned[e] {
                post.copy_from(p);
            } else {
                kept += lam;
                for i in 0..ni {
                    post[i] = alpha[(i, a)] * p[i] / lam;
                }
            }
        }
        for a in 0..ni {
            let e = layout.edge(node, a);
            tree.weights[e] = if tree.pruned[e] {
                T::zero()
            } else {
                tree.lambda[e] / kept
            };
            let post = &tail[layout.child(node, a) - node - 1];
            belief_average_into(post, spec, &mut tree.avg_r[e], &mut tree.avg_s[e]);
        }
    }
    Ok(())
}

fn belief_average_into<T: Real>(p: &Vector<T>, spec: &GameSpec<T>, r: &mut Mat<T>, s: &mut Mat<T>) {
    r.fill(T::zero());
    s.fill(T::zero());
    for (pi, t) in p.iter().zip(&spec.types) {
        mat_axpy(r, *pi, &t.r);
        mat_axpy(s, *pi, &t.s);
    }
}

/// `(sum_i p_i R_i, sum_i p_i S_i)`.
pub fn belief_average<T: Real>(p: &Vector<T>, spec: &GameSpec<T>) -> (Mat<T>, Mat<T>) {
    let mut r = Mat::zeros(spec.m1(), spec.m1());
    let mut s = Mat::zeros(spec.m2(), spec.m2());
    belief_average_into(p, spec, &mut r, &mut s);
    (r, s)
}

impl<T: Real> BeliefTree<T> {
    /// Worst entrywise residual of `sum_a lambda_a p_child - p` over internal
    /// nodes. Pruned edges contribute their exact Bayes mass `alpha_a * p`.
    pub fn martingale_residual(&self) -> T {
        let l = &self.layout;
        let ni = l.branching();
        let mut worst = T::zero();
        for node in 0..l.internal_count() {
            let p = &self.beliefs[node];
            let mut acc = Vector::zeros(ni);
            for a in 0..ni {
                let e = l.edge(node, a);
                if self.pruned[e] {
                    for i in 0..ni {
                        acc[i] += self.alphas[node][(i, a)] * p[i];
                    }
                } else {
                    acc += &self.beliefs[l.child(node, a)] * self.lambda[e];
                }
            }
            let d = (acc - p).amax();
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    pub fn edge_lambdas(&self, node: usize) -> &[T] {
        let b = self.layout.branching();
        &self.lambda[node * b..(node + 1) * b]
    }
}
