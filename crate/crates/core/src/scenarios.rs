//! Ready-made games: the two planar pursuit case studies and seeded random
//! instances for property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::game::{ContinuousDynamics, GameSpec, TypeData};
use crate::linalg::{symmetrize, Mat, Vector};
use crate::Real;

pub const CASE_STUDY_HORIZON: usize = 10;
pub const CASE_STUDY_TAU: f64 = 0.1;
/// Target offsets of the two types.
pub const THETAS: [f64; 2] = [-1.0, 1.0];

/// Two independent planar double integrators; each player's state is
/// `[px, py, vx, vy]`, P1's block first.
pub fn double_integrator_pair<T: Real>() -> ContinuousDynamics<T> {
    let mut a_c = Mat::zeros(8, 8);
    let mut b1_c = Mat::zeros(8, 2);
    let mut b2_c = Mat::zeros(8, 2);
    for (block, b) in [(0, &mut b1_c), (4, &mut b2_c)] {
        a_c[(block, block + 2)] = T::one();
        a_c[(block + 1, block + 3)] = T::one();
        b[(block + 2, 0)] = T::one();
        b[(block + 3, 1)] = T::one();
    }
    ContinuousDynamics { a_c, b1_c, b2_c }
}

/// Terminal data of `(x1 - z th)' Qt (x1 - z th) - (x2 - z th)' Qt (x2 - z th)`
/// written as `x'Qx/2 + q'x + c`.
pub fn pursuit_terminal<T: Real>(
    q_tilde: &Mat<T>,
    z: &Vector<T>,
    theta: T,
) -> (Mat<T>, Vector<T>, T) {
    let d = q_tilde.nrows();
    let two = T::lit(2.0);
    let mut q = Mat::zeros(2 * d, 2 * d);
    q.view_mut((0, 0), (d, d)).copy_from(&(q_tilde * two));
    q.view_mut((d, d), (d, d)).copy_from(&(q_tilde * -two));
    let qz = q_tilde.transpose() * z;
    let mut q_lin = Vector::zeros(2 * d);
    q_lin.rows_mut(0, d).copy_from(&(&qz * (-two * theta)));
    q_lin.rows_mut(d, d).copy_from(&(&qz * (two * theta)));
    // The two players' constant terms theta^2 z'Qz cancel.
    let c = T::zero();
    // Adding zero turns the -0.0 produced by negation into 0.0.
    (q.map(|x| x + T::zero()), q_lin.map(|x| x + T::zero()), c)
}

fn diag<T: Real>(entries: &[f64]) -> Mat<T> {
    Mat::from_diagonal(&Vector::from_iterator(
        entries.len(),
        entries.iter().map(|x| T::lit(*x)),
    ))
}

fn pursuit_game<T: Real>(
    q_tildes: [Mat<T>; 2],
    z: &[f64],
    r: &[f64],
    s: &[f64],
) -> Result<GameSpec<T>> {
    let z = Vector::from_iterator(4, z.iter().map(|x| T::lit(*x)));
    let types = q_tildes
        .iter()
        .zip(THETAS)
        .map(|(qt, th)| {
            let (q, q_lin, c) = pursuit_terminal(qt, &z, T::lit(th));
            TypeData {
                r: diag(r),
                s: diag(s),
                q,
                q_lin,
                c,
            }
        })
        .collect();
    GameSpec::new(
        double_integrator_pair(),
        T::lit(CASE_STUDY_TAU),
        types,
        CASE_STUDY_HORIZON,
        Vector::from_element(2, T::lit(0.5)),
    )
}

/// Targets at `(0, theta)`, shared terminal weights `diag(1, 1, 0, 0)`.
pub fn hexner_scenario<T: Real>() -> GameSpec<T> {
    let qt = diag(&[1.0, 1.0, 0.0, 0.0]);
    pursuit_game(
        [qt.clone(), qt],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.05, 0.025],
        &[0.05, 0.1],
    )
    .expect("case-study dimensions are consistent")
}

/// Landing zones `(-1, -1)` and `(1, 1)`; type 1 weights the y error, type 2
/// the x error.
pub fn drone_scenario<T: Real>() -> GameSpec<T> {
    pursuit_game(
        [diag(&[1.0, 20.0, 0.0, 0.0]), diag(&[20.0, 1.0, 0.0, 0.0])],
        &[1.0, 1.0, 0.0, 0.0],
        &[0.05, 0.025],
        &[0.02, 0.04],
    )
    .expect("case-study dimensions are consistent")
}

/// Default initial state for both case studies: everyone at rest at the origin.
pub fn case_study_x0<T: Real>() -> Vector<T> {
    Vector::zeros(8)
}

/// Per-step disturbance covariance on P2's velocity, `0.25` on each axis.
pub fn drone_noise_covariance<T: Real>() -> Mat<T> {
    diag(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25, 0.25])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomGameShape {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    pub num_types: usize,
    pub horizon: usize,
    pub tau: f64,
    /// Draw a player-separable game (`n` split evenly).
    pub separable: bool,
}

impl Default for RandomGameShape {
    fn default() -> Self {
        Self {
            n: 4,
            m1: 2,
            m2: 2,
            num_types: 2,
            horizon: 3,
            tau: 0.1,
            separable: false,
        }
    }
}

/// Seeded random game scaled so that every edge saddle is well posed:
/// entries of `A_c`, `B_c` in `[-1/2, 1/2]`, `R, S >= I`, `Q` entries in `[-1/2, 1/2]`.
pub fn random_game<T: Real>(shape: RandomGameShape, seed: u64) -> Result<GameSpec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.n;
    let uni = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| {
        Mat::from_fn(rows, cols, |_, _| T::lit(rng.random_range(-1.0..1.0)))
    };
    let mut a_c = uni(n, n, &mut rng) * T::lit(0.5);
    let mut b1_c = uni(n, shape.m1, &mut rng) * T::lit(0.5);
    let mut b2_c = uni(n, shape.m2, &mut rng) * T::lit(0.5);
    let n1 = n / 2;
    if shape.separable {
        for i in 0..n {
            for j in 0..n {
                if (i < n1) != (j < n1) {
                    a_c[(i, j)] = T::zero();
                }
            }
            if i >= n1 {
                b1_c.row_mut(i).fill(T::zero());
            } else {
                b2_c.row_mut(i).fill(T::zero());
            }
        }
    }
    let spd = |m: usize, rng: &mut ChaCha8Rng| {
        let g = uni(m, m, rng) * T::lit(0.5);
        let mut s = &g * g.transpose() + Mat::identity(m, m);
        symmetrize(&mut s);
        s
    };
    let mut types = Vec::with_capacity(shape.num_types);
    for _ in 0..shape.num_types {
        let r = spd(shape.m1, &mut rng);
        let s = spd(shape.m2, &mut rng);
        let q = if shape.separable {
            let mut q = Mat::zeros(n, n);
            let p1 = spd(n1, &mut rng);
            let p2 = spd(n - n1, &mut rng);
            q.view_mut((0, 0), (n1, n1)).copy_from(&p1);
            q.view_mut((n1, n1), (n - n1, n - n1)).copy_from(&(-p2));
            q
        } else {
            let g = uni(n, n, &mut rng);
            let mut q = (&g + g.transpose()) * T::lit(0.25);
            symmetrize(&mut q);
            q
        };
        let q_lin = Vector::from_fn(n, |_, _| T::lit(rng.random_range(-1.0..1.0)));
        let c = T::lit(rng.random_range(-1.0..1.0));
        types.push(TypeData { r, s, q, q_lin, c });
    }
    let raw: Vec<f64> = (0..shape.num_types)
        .map(|_| rng.random_range(0.2..1.0))
        .collect();
    let total: f64 = raw.iter().sum();
    let prior = Vector::from_iterator(shape.num_types, raw.iter().map(|x| T::lit(x / total)));
    GameSpec::new(
        ContinuousDynamics::new(a_c, b1_c, b2_c)?,
        T::lit(shape.tau),
        types,
        shape.horizon,
        prior,
    )
}

/// Seeded random state with entries in `[-1, 1]`.
pub fn random_state<T: Real>(n: usize, seed: u64) -> Vector<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_57a7e);
    Vector::from_fn(n, |_, _| T::lit(rng.random_range(-1.0..1.0)))
}
