//! Outer problem: the root value as a function of the signaling logits, its
//! exact gradient, and gradient descent on the logits.

use crate::belief::{forward_bayes_into, BeliefTree, SignalingPolicy};
use crate::error::{Error, Result};
use crate::game::{GameSpec, MAX_TYPES};
use crate::linalg::{frob_dot, gemm_nn, gemm_nt, gemv_nn, mat_axpy, Mat, Vector};
use crate::riccati::{backward_pass_into, evaluate_value, ValueTree};
use crate::tree::TreeLayout;
use crate::Real;

/// Root value `V_0(x0)` for a fixed game, optionally charging each step the
/// expected cost of additive noise with covariance `noise`.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a, T: Real> {
    pub spec: &'a GameSpec<T>,
    pub x0: &'a Vector<T>,
    pub noise: Option<&'a Mat<T>>,
}

/// Forward quantities kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct Evaluation<T: Real> {
    pub loss: T,
    pub beliefs: BeliefTree<T>,
    pub values: ValueTree<T>,
}

impl<'a, T: Real> Objective<'a, T> {
    pub fn new(spec: &'a GameSpec<T>, x0: &'a Vector<T>) -> Result<Self> {
        if x0.len() != spec.n() {
            return Err(Error::Dimension(format!(
                "x0 has {} entries, expected {}",
                x0.len(),
                spec.n()
            )));
        }
        Ok(Self {
            spec,
            x0,
            noise: None,
        })
    }

    pub fn with_noise(mut self, noise: Option<&'a Mat<T>>) -> Self {
        self.noise = noise;
        self
    }

    /// Zeroed storage for [`Objective::evaluate_into`].
    pub fn blank_evaluation(&self) -> Result<Evaluation<T>> {
        let layout = TreeLayout::new(self.spec.num_types(), self.spec.horizon)?;
        Ok(Evaluation {
            loss: T::zero(),
            beliefs: BeliefTree::zeros(&layout, self.spec),
            values: ValueTree::zeros(&layout, self.spec),
        })
    }

    pub fn evaluate(&self, policy: &SignalingPolicy<T>) -> Result<Evaluation<T>> {
        let mut eval = self.blank_evaluation()?;
        self.evaluate_into(policy, &mut eval)?;
        Ok(eval)
    }

    /// Overwrites `eval`; its contents are unspecified after an error.
    pub fn evaluate_into(
        &self,
        policy: &SignalingPolicy<T>,
        eval: &mut Evaluation<T>,
    ) -> Result<()> {
        forward_bayes_into(policy, self.spec, &mut eval.beliefs)?;
        backward_pass_into(&eval.beliefs, self.spec, self.noise, &mut eval.values)?;
        eval.loss = evaluate_value(eval.values.root(), self.x0);
        Ok(())
    }

    pub fn loss(&self, policy: &SignalingPolicy<T>) -> Result<T> {
        Ok(self.evaluate(policy)?.loss)
    }

    /// Reverse-mode gradient of the loss with respect to every logit.
    pub fn gradient(&self, eval: &Evaluation<T>) -> Vec<Mat<T>> {
        let mut ws = GradientWorkspace::new(self.spec);
        let mut grads = zero_blocks(&eval.beliefs.layout);
        self.gradient_into(eval, &mut ws, &mut grads);
        grads
    }

    /// [`Objective::gradient`] reusing `ws` and the blocks of `grads`.
    pub fn gradient_into(
        &self,
        eval: &Evaluation<T>,
        ws: &mut GradientWorkspace<T>,
        grads: &mut [Mat<T>],
    ) {
        reverse_pass(self, eval, ws, grads)
    }

    pub fn loss_and_gradient(&self, policy: &SignalingPolicy<T>) -> Result<(T, Vec<Mat<T>>)> {
        let eval = self.evaluate(policy)?;
        let grad = self.gradient(&eval);
        Ok((eval.loss, grad))
    }
}

fn zero_blocks<T: Real>(layout: &TreeLayout) -> Vec<Mat<T>> {
    let ni = layout.branching();
    vec![Mat::zeros(ni, ni); layout.internal_count()]
}

pub fn loss<T: Real>(policy: &SignalingPolicy<T>, x0: &Vector<T>, spec: &GameSpec<T>) -> Result<T> {
    Objective::new(spec, x0)?.loss(policy)
}

pub fn grad_loss<T: Real>(
    policy: &SignalingPolicy<T>,
    x0: &Vector<T>,
    spec: &GameSpec<T>,
) -> Result<Vec<Mat<T>>> {
    Ok(Objective::new(spec, x0)?.loss_and_gradient(policy)?.1)
}

/// Central differences of `f` in every logit coordinate.
pub fn grad_fd_with<T: Real>(
    policy: &SignalingPolicy<T>,
    h: T,
    mut f: impl FnMut(&SignalingPolicy<T>) -> Result<T>,
) -> Result<Vec<Mat<T>>> {
    if !(h > T::zero()) {
        return Err(Error::Domain(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let mut probe = policy.clone();
    let mut grad: Vec<Mat<T>> = policy
        .logits()
        .iter()
        .map(|m| Mat::zeros(m.nrows(), m.ncols()))
        .collect();
    let two_h = h + h;
    for node in 0..grad.len() {
        for idx in 0..grad[node].len() {
            let base = policy.logits()[node][idx];
            probe.logits_mut()[node][idx] = base + h;
            let up = f(&probe)?;
            probe.logits_mut()[node][idx] = base - h;
            let down = f(&probe)?;
            probe.logits_mut()[node][idx] = base;
            grad[node][idx] = (up - down) / two_h;
        }
    }
    Ok(grad)
}

pub fn grad_fd<T: Real>(
    policy: &SignalingPolicy<T>,
    x0: &Vector<T>,
    spec: &GameSpec<T>,
    h: T,
) -> Result<Vec<Mat<T>>> {
    let obj = Objective::new(spec, x0)?;
    grad_fd_with(policy, h, |p| obj.loss(p))
}

pub fn grad_norm<T: Real>(grad: &[Mat<T>]) -> T {
    grad.iter()
        .fold(T::zero(), |acc, m| acc + m.norm_squared())
        .sqrt()
}

/// Adjoint storage and scratch for the reverse pass.
#[derive(Debug, Clone)]
pub struct GradientWorkspace<T: Real> {
    adj_p: Vec<Mat<T>>,
    adj_r: Vec<Vector<T>>,
    adj_c: Vec<T>,
    p_bar: Vec<Vector<T>>,
    lambda_bar: Vec<T>,
    f: Mat<T>,
    fp: Mat<T>,
    fv: Vector<T>,
    fr: Vector<T>,
    kp: Mat<T>,
    rw: Mat<T>,
    kr: Vector<T>,
}

impl<T: Real> GradientWorkspace<T> {
    pub fn new(spec: &GameSpec<T>) -> Self {
        let (n, m) = (spec.n(), spec.m1() + spec.m2());
        Self {
            adj_p: Vec::new(),
            adj_r: Vec::new(),
            adj_c: Vec::new(),
            p_bar: Vec::new(),
            lambda_bar: Vec::new(),
            f: Mat::zeros(n, n),
            fp: Mat::zeros(n, n),
            fv: Vector::zeros(n),
            fr: Vector::zeros(n),
            kp: Mat::zeros(m, n),
            rw: Mat::zeros(m, m),
            kr: Vector::zeros(m),
        }
    }

    fn reset(&mut self, layout: &TreeLayout, n: usize) {
        let (nodes, ni) = (layout.node_count(), layout.branching());
        if self.adj_p.len() != nodes || self.adj_p.first().is_some_and(|m| m.nrows() != n) {
            self.adj_p = vec![Mat::zeros(n, n); nodes];
            self.adj_r = vec![Vector::zeros(n); nodes];
            self.adj_c = vec![T::zero(); nodes];
            self.p_bar = vec![Vector::zeros(ni); nodes];
            self.lambda_bar = vec![T::zero(); layout.edge_count()];
        } else {
            self.adj_p.iter_mut().for_each(|m| m.fill(T::zero()));
            self.adj_r.iter_mut().for_each(|v| v.fill(T::zero()));
            self.adj_c.fill(T::zero());
            self.p_bar.iter_mut().for_each(|v| v.fill(T::zero()));
            self.lambda_bar.fill(T::zero());
        }
    }
}

/// `m += s (x y' + y x')`.
fn add_sym_outer<T: Real>(m: &mut Mat<T>, s: T, x: &Vector<T>, y: &Vector<T>) {
    let n = x.len();
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] += s * (x[i] * y[j] + y[i] * x[j]);
        }
    }
}

fn reverse_pass<T: Real>(
    obj: &Objective<'_, T>,
    eval: &Evaluation<T>,
    ws: &mut GradientWorkspace<T>,
    grads: &mut [Mat<T>],
) {
    let spec = obj.spec;
    let bt = &eval.beliefs;
    let vt = &eval.values;
    let layout = &bt.layout;
    let ni = layout.branching();
    let n = spec.n();
    let m1 = spec.m1();
    let m2 = spec.m2();
    let dy = &spec.dynamics;
    let tau = dy.tau;
    let (zero, one, half) = (T::zero(), T::one(), T::lit(0.5));

    ws.reset(layout, n);
    for j in 0..n {
        for i in 0..n {
            ws.adj_p[0][(i, j)] = half * obj.x0[i] * obj.x0[j];
        }
    }
    ws.adj_r[0].copy_from(obj.x0);
    ws.adj_c[0] = one;

    // Top-down: value adjoints, plus belief adjoints from running costs.
    let mut w_bar = [zero; MAX_TYPES];
    for node in 0..layout.internal_count() {
        let (head_p, tail_p) = ws.adj_p.split_at_mut(node + 1);
        let (head_r, tail_r) = ws.adj_r.split_at_mut(node + 1);
        let (head_c, tail_c) = ws.adj_c.split_at_mut(node + 1);
        let (np, nr, nc) = (&head_p[node], &head_r[node], head_c[node]);
        for (a, wb) in w_bar.iter_mut().enumerate().take(ni) {
            let v = &vt.edges[layout.edge(node, a)].value;
            *wb = frob_dot(np, &v.p) + nr.dot(&v.r) + nc * v.c;
        }
        let mut weighted = zero;
        let mut kept = zero;
        for a in 0..ni {
            let e = layout.edge(node, a);
            weighted += bt.weights[e] * w_bar[a];
            if !bt.pruned[e] {
                kept += bt.lambda[e];
            }
        }
        for a in 0..ni {
            let e = layout.edge(node, a);
            if !bt.pruned[e] {
                ws.lambda_bar[e] = (w_bar[a] - weighted) / kept;
            }
        }
        for a in 0..ni {
            let e = layout.edge(node, a);
            let w = bt.weights[e];
            if w == zero {
                continue;
            }
            let sol = &vt.edges[e];
            let slot = layout.child(node, a) - node - 1;
            ws.f.copy_from(&dy.a);
            gemm_nn(&mut ws.f, one, &dy.b, &sol.gain, one);
            gemv_nn(&mut ws.fv, one, &dy.b, &sol.offset, zero);
            gemv_nn(&mut ws.fr, one, &ws.f, nr, zero);

            let cp = &mut tail_p[slot];
            gemm_nn(&mut ws.fp, one, &ws.f, np, zero);
            gemm_nt(cp, w, &ws.fp, &ws.f, one);
            add_sym_outer(cp, half * w, &ws.fr, &ws.fv);
            add_sym_outer(cp, T::lit(0.25) * w * nc, &ws.fv, &ws.fv);
            if let Some(sigma) = obj.noise {
                mat_axpy(cp, half * w * nc, sigma);
            }
            let cr = &mut tail_r[slot];
            cr.axpy(w, &ws.fr, one);
            cr.axpy(w * nc, &ws.fv, one);
            tail_c[slot] += w * nc;

            gemm_nn(&mut ws.kp, one, &sol.gain, np, zero);
            gemm_nt(&mut ws.rw, w, &ws.kp, &sol.gain, zero);
            gemv_nn(&mut ws.kr, one, &sol.gain, nr, zero);
            add_sym_outer(&mut ws.rw, half * w, &ws.kr, &sol.offset);
            add_sym_outer(&mut ws.rw, T::lit(0.25) * w * nc, &sol.offset, &sol.offset);
            let pc = &mut ws.p_bar[node + 1 + slot];
            for (i, t) in spec.types.iter().enumerate() {
                let mut acc = zero;
                for c in 0..m1 {
                    for r in 0..m1 {
                        acc += ws.rw[(r, c)] * t.r[(r, c)];
                    }
                }
                for c in 0..m2 {
                    for r in 0..m2 {
                        acc -= ws.rw[(m1 + r, m1 + c)] * t.s[(r, c)];
                    }
                }
                pc[i] += tau * acc;
            }
        }
    }
    for leaf in layout.level(layout.horizon()) {
        for (i, t) in spec.types.iter().enumerate() {
            ws.p_bar[leaf][i] += frob_dot(&ws.adj_p[leaf], &t.q)
                + ws.adj_r[leaf].dot(&t.q_lin)
                + ws.adj_c[leaf] * t.c;
        }
    }

    // Bottom-up: Bayes updates and softmax.
    let mut alpha_bar = [[zero; MAX_TYPES]; MAX_TYPES];
    let mut parent_bar = [zero; MAX_TYPES];
    for k in (0..layout.horizon()).rev() {
        for node in layout.level(k) {
            let alpha = &bt.alphas[node];
            let p = &bt.beliefs[node];
            alpha_bar.iter_mut().for_each(|row| row.fill(zero));
            parent_bar.fill(zero);
            for a in 0..ni {
                let e = layout.edge(node, a);
                let pcb = &ws.p_bar[layout.child(node, a)];
                if bt.pruned[e] {
                    for i in 0..ni {
                        parent_bar[i] += pcb[i];
                    }
                    continue;
                }
                let lam = bt.lambda[e];
                let total = ws.lambda_bar[e] - pcb.dot(&bt.beliefs[layout.child(node, a)]) / lam;
                for i in 0..ni {
                    alpha_bar[i][a] += pcb[i] * p[i] / lam + total * p[i];
                    parent_bar[i] += pcb[i] * alpha[(i, a)] / lam + total * alpha[(i, a)];
                }
            }
            for i in 0..ni {
                ws.p_bar[node][i] += parent_bar[i];
            }
            let g = &mut grads[node];
            for i in 0..ni {
                let mean = (0..ni).fold(zero, |acc, a| acc + alpha[(i, a)] * alpha_bar[i][a]);
                for a in 0..ni {
                    g[(i, a)] = alpha[(i, a)] * (alpha_bar[i][a] - mean);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub step_size: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub loss_tol: f64,
    pub seed: u64,
    /// Standard deviation of the random initial logits; `0` starts from the
    /// uniform policy.
    pub init_scale: f64,
    pub max_backtracks: usize,
    /// Each line search starts from the last accepted step times this factor,
    /// capped at `max_step_size`; `1` keeps every search at `step_size`.
    pub step_growth: f64,
    pub max_step_size: f64,
    /// Divide each node's gradient block by the probability of reaching the
    /// node (floored at [`REACH_FLOOR`]), so deep nodes move as fast as the
    /// root.
    pub reach_scaling: bool,
}

/// Lower clamp on reach probabilities used by [`OptimizerConfig::reach_scaling`].
pub const REACH_FLOOR: f64 = 1e-3;

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            max_iters: 2000,
            grad_tol: 1e-6,
            loss_tol: 1e-10,
            seed: 0,
            init_scale: 0.1,
            max_backtracks: 30,
            step_growth: 2.0,
            max_step_size: 100.0,
            reach_scaling: true,
        }
    }
}

impl OptimizerConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !(self.grad_tol > 0.0) || !(self.loss_tol > 0.0) {
            return Err(Error::Domain(
                "step size and tolerances must be positive".into(),
            ));
        }
        if !(self.step_growth >= 1.0) || !(self.max_step_size >= self.step_size) {
            return Err(Error::Domain(
                "step growth must be at least 1 and the step cap at least the step size".into(),
            ));
        }
        if !(self.init_scale >= 0.0) {
            return Err(Error::Domain("init scale must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradTol,
    LossTol,
    MaxIters,
    /// No backtracked step decreased the loss.
    LineSearch,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::GradTol => "grad_tol",
            StopReason::LossTol => "loss_tol",
            StopReason::MaxIters => "max_iters",
            StopReason::LineSearch => "line_search",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            StopReason::GradTol,
            StopReason::LossTol,
            StopReason::MaxIters,
            StopReason::LineSearch,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub step_size_used: f64,
}

#[derive(Debug, Clone)]
pub struct SolvedPolicy<T: Real> {
    pub signaling: SignalingPolicy<T>,
    pub beliefs: BeliefTree<T>,
    pub value_tree: ValueTree<T>,
    pub x0: Vector<T>,
    pub root_value: T,
    pub iterations: usize,
    pub grad_norm_final: T,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub trace: Vec<TraceRow>,
}

pub fn optimize<T: Real>(
    spec: &GameSpec<T>,
    x0: &Vector<T>,
    config: &OptimizerConfig,
) -> Result<SolvedPolicy<T>> {
    config.check()?;
    let init = SignalingPolicy::random(
        spec.num_types(),
        spec.horizon,
        config.init_scale,
        config.seed,
    )?;
    optimize_from(&Objective::new(spec, x0)?, init, config)
}

/// Wraps a fixed policy as a [`SolvedPolicy`] without optimizing it.
pub fn evaluate_policy<T: Real>(
    spec: &GameSpec<T>,
    x0: &Vector<T>,
    signaling: SignalingPolicy<T>,
) -> Result<SolvedPolicy<T>> {
    let obj = Objective::new(spec, x0)?;
    let eval = obj.evaluate(&signaling)?;
    let gnorm = grad_norm(&obj.gradient(&eval));
    Ok(SolvedPolicy {
        signaling,
        root_value: eval.loss,
        beliefs: eval.beliefs,
        value_tree: eval.values,
        x0: x0.clone(),
        iterations: 0,
        grad_norm_final: gnorm,
        converged: false,
        stop_reason: StopReason::MaxIters,
        trace: vec![TraceRow {
            iter: 0,
            loss: eval.loss.as_f64(),
            grad_norm: gnorm.as_f64(),
            step_size_used: 0.0,
        }],
    })
}

/// Probability of reaching each node under the evaluated policy.
pub fn reach_probabilities<T: Real>(beliefs: &BeliefTree<T>) -> Vec<T> {
    let layout = &beliefs.layout;
    let mut reach = vec![T::zero(); layout.node_count()];
    reach[0] = T::one();
    for node in 0..layout.internal_count() {
        for a in 0..layout.branching() {
            reach[layout.child(node, a)] = reach[node] * beliefs.weights[layout.edge(node, a)];
        }
    }
    reach
}

fn descent_direction<T: Real>(
    grad: &[Mat<T>],
    eval: &Evaluation<T>,
    reach_scaling: bool,
    dir: &mut [Mat<T>],
) {
    if !reach_scaling {
        for (d, g) in dir.iter_mut().zip(grad) {
            d.copy_from(g);
        }
        return;
    }
    let floor = T::lit(REACH_FLOOR);
    let reach = reach_probabilities(&eval.beliefs);
    for ((d, g), r) in dir.iter_mut().zip(grad).zip(reach) {
        let scale = T::one() / if r > floor { r } else { floor };
        for (di, gi) in d.iter_mut().zip(g.iter()) {
            *di = *gi * scale;
        }
    }
}

fn dot_blocks<T: Real>(a: &[Mat<T>], b: &[Mat<T>]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.dot(y))
}

/// Gradient descent with Armijo backtracking from `init`. The returned
/// iterate has the lowest loss seen, since only decreasing steps are taken.
pub fn optimize_from<T: Real>(
    obj: &Objective<'_, T>,
    init: SignalingPolicy<T>,
    config: &OptimizerConfig,
) -> Result<SolvedPolicy<T>> {
    config.check()?;
    let layout = init.layout().clone();
    if layout.branching() != obj.spec.num_types() || layout.horizon() != obj.spec.horizon {
        return Err(Error::Dimension(
            "initial policy does not match the game tree".into(),
        ));
    }
    let armijo = T::lit(1e-4);
    let grad_tol = T::tol(config.grad_tol);
    let loss_tol = T::tol(config.loss_tol);
    let mut policy = init;
    let mut trial = policy.clone();
    let mut eval = obj.evaluate(&policy)?;
    let mut trial_eval = eval.clone();
    let mut ws = GradientWorkspace::new(obj.spec);
    let mut grad = zero_blocks(&layout);
    let mut dir = zero_blocks(&layout);
    obj.gradient_into(&eval, &mut ws, &mut grad);
    let mut gnorm = grad_norm(&grad);
    let mut trace = vec![TraceRow {
        iter: 0,
        loss: eval.loss.as_f64(),
        grad_norm: gnorm.as_f64(),
        step_size_used: 0.0,
    }];
    let mut iterations = 0;
    let mut stop = StopReason::MaxIters;
    let mut next_step = T::lit(config.step_size);

    while iterations < config.max_iters {
        if gnorm < grad_tol {
            stop = StopReason::GradTol;
            break;
        }
        descent_direction(&grad, &eval, config.reach_scaling, &mut dir);
        let slope = dot_blocks(&grad, &dir);
        let mut step = next_step;
        let mut accepted = false;
        for _ in 0..=config.max_backtracks {
            for ((t, p), d) in trial.logits_mut().iter_mut().zip(policy.logits()).zip(&dir) {
                t.copy_from(p);
                mat_axpy(t, -step, d);
            }
            obj.evaluate_into(&trial, &mut trial_eval)?;
            if trial_eval.loss <= eval.loss - armijo * step * slope && trial_eval.loss < eval.loss {
                accepted = true;
                break;
            }
            step *= T::lit(0.5);
        }
        if !accepted {
            stop = StopReason::LineSearch;
            break;
        }
        iterations += 1;
        next_step = (step * T::lit(config.step_growth)).min(T::lit(config.max_step_size));
        let decrease = eval.loss - trial_eval.loss;
        std::mem::swap(&mut policy, &mut trial);
        std::mem::swap(&mut eval, &mut trial_eval);
        obj.gradient_into(&eval, &mut ws, &mut grad);
        gnorm = grad_norm(&grad);
        trace.push(TraceRow {
            iter: iterations,
            loss: eval.loss.as_f64(),
            grad_norm: gnorm.as_f64(),
            step_size_used: step.as_f64(),
        });
        if decrease < loss_tol {
            stop = StopReason::LossTol;
            break;
        }
    }
    if stop == StopReason::MaxIters && gnorm < grad_tol {
        stop = StopReason::GradTol;
    }
    Ok(SolvedPolicy {
        signaling: policy,
        root_value: eval.loss,
        beliefs: eval.beliefs,
        value_tree: eval.values,
        x0: obj.x0.clone(),
        iterations,
        grad_norm_final: gnorm,
        converged: matches!(stop, StopReason::GradTol | StopReason::LossTol),
        stop_reason: stop,
        trace,
    })
}

/// Largest total-variation distance between two type rows of `alpha`.
pub fn max_type_separation<T: Real>(alpha: &Mat<T>) -> T {
    let ni = alpha.nrows();
    let mut worst = T::zero();
    for i in 0..ni {
        for j in (i + 1)..ni {
            let tv = (0..alpha.ncols()).fold(T::zero(), |acc, a| {
                acc + (alpha[(i, a)] - alpha[(j, a)]).abs()
            }) * T::lit(0.5);
            if tv > worst {
                worst = tv;
            }
        }
    }
    worst
}

/// First depth at which some node's type rows differ by more than
/// `threshold` in total variation.
pub fn revelation_step<T: Real>(
    policy: &SignalingPolicy<T>,
    threshold: f64,
) -> Result<Option<usize>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Domain(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let layout = policy.layout();
    let thr = T::lit(threshold);
    for k in 0..layout.horizon() {
        for node in layout.level(k) {
            if max_type_separation(&policy.alpha(node)?) > thr {
                return Ok(Some(k));
            }
        }
    }
    Ok(None)
}

/// [`revelation_step`] converted to time `k * tau`.
pub fn revelation_time<T: Real>(
    policy: &SignalingPolicy<T>,
    threshold: f64,
    tau: T,
) -> Result<Option<T>> {
    Ok(revelation_step(policy, threshold)?.map(|k| T::lit(k as f64) * tau))
}
