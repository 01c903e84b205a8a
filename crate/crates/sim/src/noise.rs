use lqig_core::belief::BeliefTree;
use lqig_core::io::{matrix_from_rows, rows_of, to_json_text, SCHEMA_VERSION};
use lqig_core::linalg::{frob_dot, max_abs_asymmetry, Mat, Vector};
use lqig_core::riccati::ValueTree;
use lqig_core::{Error, Result};
use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const PSD_TOL: f64 = 1e-12;

/// Additive i.i.d. Gaussian disturbance `w ~ N(0, sigma)` on the state update.
/// `sigma` is a covariance; `seed` selects the noise stream within a run.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub sigma: Mat<f64>,
    pub seed: u64,
    factor: Mat<f64>,
}

impl NoiseModel {
    pub fn new(sigma: Mat<f64>, seed: u64) -> Result<Self> {
        if !sigma.is_square() {
            return Err(Error::Dimension(format!(
                "noise covariance is {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if sigma.iter().any(|x| !x.is_finite()) || max_abs_asymmetry(&sigma) > PSD_TOL {
            return Err(Error::Domain(
                "noise covariance must be finite and symmetric".into(),
            ));
        }
        let eig = SymmetricEigen::new(sigma.clone());
        let scale = 1.0 + sigma.amax();
        if eig.eigenvalues.iter().any(|&l| l < -PSD_TOL * scale) {
            return Err(Error::Domain(
                "noise covariance is not positive semidefinite".into(),
            ));
        }
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let factor = &eig.eigenvectors * Mat::from_diagonal(&roots);
        Ok(Self {
            sigma,
            seed,
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn is_zero(&self) -> bool {
        self.sigma.iter().all(|&x| x == 0.0)
    }

    /// One draw `L z` with `L L' = sigma`, `z` standard normal.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vector<f64> {
        let z = Vector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.factor * z
    }
}

/// Expected extra cost of the disturbance at every node: each step adds
/// `tr(P+ sigma)/2` with `P+` the value matrix of the node reached, averaged
/// over branches. Gains are untouched, so this is the whole effect of the noise
/// on the value tree.
pub fn stochastic_value_correction(
    beliefs: &BeliefTree<f64>,
    values: &ValueTree<f64>,
    sigma: &Mat<f64>,
) -> Result<Vec<f64>> {
    let layout = &values.layout;
    if beliefs.layout != *layout {
        return Err(Error::Dimension(
            "belief and value trees differ in shape".into(),
        ));
    }
    let n = values.root().dim();
    if sigma.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "noise covariance is {}x{}, expected {n}x{n}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let mut offsets = vec![0.0; layout.node_count()];
    for node in (0..layout.internal_count()).rev() {
        offsets[node] = (0..layout.branching())
            .map(|a| {
                let child = layout.child(node, a);
                beliefs.weights[layout.edge(node, a)]
                    * (0.5 * frob_dot(&values.nodes[child].p, sigma) + offsets[child])
            })
            .sum();
    }
    Ok(offsets)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseDoc {
    version: u64,
    #[serde(rename = "Sigma")]
    sigma: Vec<Vec<f64>>,
    #[serde(default)]
    seed: u64,
}

/// Noise document: `{"version": 1, "Sigma": [[...]], "seed": 0}`, `Sigma`
/// row-major.
pub fn load_noise(text: &str) -> Result<NoiseModel> {
    let doc: NoiseDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("noise: {e}")))?;
    if doc.version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: doc.version,
            expected: SCHEMA_VERSION,
        });
    }
    let n = doc.sigma.len();
    NoiseModel::new(matrix_from_rows("Sigma", &doc.sigma, n, n)?, doc.seed)
}

pub fn save_noise(noise: &NoiseModel) -> String {
    let doc = NoiseDoc {
        version: SCHEMA_VERSION,
        sigma: rows_of(&noise.sigma),
        seed: noise.seed,
    };
    to_json_text(&doc)
}
