//! JSON documents: game specs (schema version 1), solved policies, dual trees,
//! and diagnostic exports of belief and value trees. Everything here is `f64`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::belief::{BeliefTree, SignalingPolicy};
use crate::dual::DualTree;
use crate::error::{Error, Result};
use crate::game::{ContinuousDynamics, GameSpec, TypeData};
use crate::linalg::{Mat, Vector};
use crate::riccati::ValueTree;
use crate::signaling::{evaluate_policy, SolvedPolicy, StopReason, TraceRow};
use crate::tree::NodeId;

pub const SCHEMA_VERSION: u64 = 1;

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    version: u64,
    n: usize,
    m1: usize,
    m2: usize,
    #[serde(rename = "K")]
    k: usize,
    tau: f64,
    #[serde(rename = "A_c")]
    a_c: Rows,
    #[serde(rename = "B1_c")]
    b1_c: Rows,
    #[serde(rename = "B2_c")]
    b2_c: Rows,
    prior: Vec<f64>,
    types: Vec<TypeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TypeDoc {
    #[serde(rename = "R")]
    r: Rows,
    #[serde(rename = "S")]
    s: Rows,
    #[serde(rename = "Q")]
    q_mat: Rows,
    q: Vec<f64>,
    c: f64,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<u64>,
}

fn parse_error(what: &str, e: serde_json::Error) -> Error {
    Error::Parse(format!("{what}: {e}"))
}

/// Reads only the `version` field, so that a future schema is reported as a
/// version mismatch rather than as unknown fields.
fn check_version(text: &str, what: &str) -> Result<()> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| parse_error(what, e))?;
    match probe.version {
        Some(SCHEMA_VERSION) => Ok(()),
        Some(found) => Err(Error::SchemaVersion {
            found,
            expected: SCHEMA_VERSION,
        }),
        None => Err(Error::Parse(format!("{what}: missing field `version`"))),
    }
}

/// Indented JSON with arrays of scalars kept on one line, so matrices read
/// row by row.
pub fn to_json_text<S: Serialize>(doc: &S) -> String {
    let value = serde_json::to_value(doc).expect("documents serialize to JSON values");
    let mut out = String::new();
    write_value(&value, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            let parts: Vec<String> = items.iter().map(|x| x.to_string()).collect();
            out.push('[');
            out.push_str(&parts.join(", "));
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

pub fn rows_of(m: &Mat<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn matrix_from_rows(
    field: &str,
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
) -> Result<Mat<f64>> {
    if rows.len() != nrows {
        return Err(Error::Dimension(format!(
            "{field}: expected {nrows} rows, found {}",
            rows.len()
        )));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(Error::Dimension(format!(
                "{field}: row {i} has {} entries, expected {ncols}",
                r.len()
            )));
        }
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn vector_of(field: &str, v: &[f64], len: usize) -> Result<Vector<f64>> {
    if v.len() != len {
        return Err(Error::Dimension(format!(
            "{field}: expected {len} entries, found {}",
            v.len()
        )));
    }
    Ok(Vector::from_column_slice(v))
}

/// Parses a spec document and discretizes its dynamics.
pub fn load_spec(text: &str) -> Result<GameSpec<f64>> {
    check_version(text, "game spec")?;
    let doc: SpecDoc = serde_json::from_str(text).map_err(|e| parse_error("game spec", e))?;
    let (n, m1, m2) = (doc.n, doc.m1, doc.m2);
    let continuous = ContinuousDynamics::new(
        matrix_from_rows("A_c", &doc.a_c, n, n)?,
        matrix_from_rows("B1_c", &doc.b1_c, n, m1)?,
        matrix_from_rows("B2_c", &doc.b2_c, n, m2)?,
    )?;
    let types = doc
        .types
        .iter()
        .enumerate()
        .map(|(i, t)| {
            Ok(TypeData {
                r: matrix_from_rows(&format!("types[{i}].R"), &t.r, m1, m1)?,
                s: matrix_from_rows(&format!("types[{i}].S"), &t.s, m2, m2)?,
                q: matrix_from_rows(&format!("types[{i}].Q"), &t.q_mat, n, n)?,
                q_lin: vector_of(&format!("types[{i}].q"), &t.q, n)?,
                c: t.c,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let prior = vector_of("prior", &doc.prior, types.len())?;
    if !(doc.tau > 0.0) || !doc.tau.is_finite() {
        return Err(Error::Domain(format!(
            "tau must be positive, got {}",
            doc.tau
        )));
    }
    GameSpec::new(continuous, doc.tau, types, doc.k, prior)
}

fn spec_doc(spec: &GameSpec<f64>) -> SpecDoc {
    let c = &spec.continuous;
    SpecDoc {
        version: SCHEMA_VERSION,
        n: spec.n(),
        m1: spec.m1(),
        m2: spec.m2(),
        k: spec.horizon,
        tau: spec.tau(),
        a_c: rows_of(&c.a_c),
        b1_c: rows_of(&c.b1_c),
        b2_c: rows_of(&c.b2_c),
        prior: spec.prior.iter().copied().collect(),
        types: spec
            .types
            .iter()
            .map(|t| TypeDoc {
                r: rows_of(&t.r),
                s: rows_of(&t.s),
                q_mat: rows_of(&t.q),
                q: t.q_lin.iter().copied().collect(),
                c: t.c,
            })
            .collect(),
    }
}

pub fn save_spec(spec: &GameSpec<f64>) -> String {
    to_json_text(&spec_doc(spec))
}

/// SHA-256 of the compact serialization, hex encoded.
pub fn spec_hash(spec: &GameSpec<f64>) -> String {
    let compact = serde_json::to_vec(&spec_doc(spec)).expect("spec documents serialize");
    hex::encode(Sha256::digest(compact))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PolicyDoc {
    version: u64,
    spec_hash: String,
    num_types: usize,
    horizon: usize,
    x0: Vec<f64>,
    root_value: f64,
    iterations: usize,
    converged: bool,
    stop_reason: String,
    grad_norm_final: f64,
    /// `logits[node]`, level order, row `i` for type `i`.
    logits: Vec<Rows>,
}

pub fn save_policy(solved: &SolvedPolicy<f64>, spec: &GameSpec<f64>) -> String {
    let doc = PolicyDoc {
        version: SCHEMA_VERSION,
        spec_hash: spec_hash(spec),
        num_types: solved.signaling.num_types(),
        horizon: solved.signaling.horizon(),
        x0: solved.x0.iter().copied().collect(),
        root_value: solved.root_value,
        iterations: solved.iterations,
        converged: solved.converged,
        stop_reason: solved.stop_reason.as_str().into(),
        grad_norm_final: solved.grad_norm_final,
        logits: solved.signaling.logits().iter().map(rows_of).collect(),
    };
    to_json_text(&doc)
}

/// Rebuilds the belief and value trees of a saved policy. The document must
/// carry the hash of `spec`. The trace is not stored.
pub fn load_policy(text: &str, spec: &GameSpec<f64>) -> Result<SolvedPolicy<f64>> {
    check_version(text, "policy")?;
    let doc: PolicyDoc = serde_json::from_str(text).map_err(|e| parse_error("policy", e))?;
    if doc.spec_hash != spec_hash(spec) {
        return Err(Error::Mismatch(
            "policy/spec mismatch: the policy was solved for a different game".into(),
        ));
    }
    let ni = doc.num_types;
    let logits = doc
        .logits
        .iter()
        .enumerate()
        .map(|(node, rows)| matrix_from_rows(&format!("logits[{node}]"), rows, ni, ni))
        .collect::<Result<Vec<_>>>()?;
    let signaling = SignalingPolicy::from_logits(ni, doc.horizon, logits)?;
    let x0 = vector_of("x0", &doc.x0, spec.n())?;
    let mut solved = evaluate_policy(spec, &x0, signaling)?;
    solved.iterations = doc.iterations;
    solved.converged = doc.converged;
    solved.stop_reason = StopReason::parse(&doc.stop_reason).ok_or_else(|| {
        Error::Parse(format!("policy: unknown stop reason {:?}", doc.stop_reason))
    })?;
    solved.trace.clear();
    Ok(solved)
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut s = String::from("iter,loss,grad_norm,step_size_used\n");
    for r in trace {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.iter, r.loss, r.grad_norm, r.step_size_used
        ));
    }
    s
}

pub fn belief_tree_json(tree: &BeliefTree<f64>) -> Value {
    let l = &tree.layout;
    let nodes: Vec<Value> = (0..l.node_count())
        .map(|idx| {
            let id = l.node_id(idx);
            json!({ "k": id.k, "omega": id.omega_string(), "p": tree.beliefs[idx].as_slice() })
        })
        .collect();
    let edges: Vec<Value> = (0..l.internal_count())
        .flat_map(|node| (0..l.branching()).map(move |a| (node, a)))
        .map(|(node, a)| {
            let id = l.node_id(node);
            let e = l.edge(node, a);
            json!({
                "k": id.k,
                "omega": id.omega_string(),
                "branch": a + 1,
                "lambda": tree.lambda[e],
                "weight": tree.weights[e],
                "pruned": tree.pruned[e],
            })
        })
        .collect();
    json!({ "num_types": l.branching(), "horizon": l.horizon(), "nodes": nodes, "edges": edges })
}

pub fn value_tree_json(values: &ValueTree<f64>) -> Value {
    let l = &values.layout;
    let nodes: Vec<Value> = (0..l.node_count())
        .map(|idx| {
            let id = l.node_id(idx);
            let v = &values.nodes[idx];
            json!({ "k": id.k, "omega": id.omega_string(), "P": rows_of(&v.p), "r": v.r.as_slice(), "c": v.c })
        })
        .collect();
    let edges: Vec<Value> = (0..l.internal_count())
        .flat_map(|node| (0..l.branching()).map(move |a| (node, a)))
        .map(|(node, a)| {
            let id = l.node_id(node);
            let sol = values.edge(node, a);
            json!({
                "k": id.k,
                "omega": id.omega_string(),
                "branch": a + 1,
                "K_u": rows_of(&sol.ku()),
                "K_v": rows_of(&sol.kv()),
                "kappa_u": sol.kappa_u().as_slice(),
                "kappa_v": sol.kappa_v().as_slice(),
            })
        })
        .collect();
    json!({ "nodes": nodes, "edges": edges })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DualTreeDoc {
    version: u64,
    num_types: usize,
    horizon: usize,
    nodes: Vec<DualNodeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DualNodeDoc {
    k: usize,
    omega: String,
    /// One P2 action per branch.
    prototypes: Rows,
    weights: Vec<f64>,
}

pub fn save_dual_tree(tree: &DualTree<f64>) -> String {
    let l = tree.layout();
    let nodes = (0..l.internal_count())
        .map(|node| {
            let id = l.node_id(node);
            DualNodeDoc {
                k: id.k,
                omega: id.omega_string(),
                prototypes: (0..l.branching())
                    .map(|a| tree.prototype(node, a).iter().copied().collect())
                    .collect(),
                weights: (0..l.branching()).map(|a| tree.weight(node, a)).collect(),
            }
        })
        .collect();
    let doc = DualTreeDoc {
        version: SCHEMA_VERSION,
        num_types: tree.num_types(),
        horizon: l.horizon(),
        nodes,
    };
    to_json_text(&doc)
}

/// Nodes may be listed in any order; each internal node must appear once.
pub fn load_dual_tree(text: &str) -> Result<DualTree<f64>> {
    check_version(text, "dual tree")?;
    let doc: DualTreeDoc = serde_json::from_str(text).map_err(|e| parse_error("dual tree", e))?;
    let layout = crate::tree::TreeLayout::new(doc.num_types + 1, doc.horizon)?;
    let b = layout.branching();
    let mut prototypes = vec![None; layout.edge_count()];
    let mut weights = vec![0.0; layout.edge_count()];
    let mut m2 = None;
    for (i, nd) in doc.nodes.iter().enumerate() {
        let id = NodeId::parse_omega(nd.k, &nd.omega)?;
        if id.k >= doc.horizon || id.omega.iter().any(|&a| a >= b) {
            return Err(Error::Dimension(format!(
                "nodes[{i}]: ({}, {:?}) is not an internal node",
                nd.k, nd.omega
            )));
        }
        let node = layout.index_of(&id)?;
        if nd.prototypes.len() != b || nd.weights.len() != b {
            return Err(Error::Dimension(format!(
                "nodes[{i}]: expected {b} prototypes and weights"
            )));
        }
        for a in 0..b {
            let v = &nd.prototypes[a];
            let dim = *m2.get_or_insert(v.len());
            let e = layout.edge(node, a);
            if prototypes[e].is_some() {
                return Err(Error::Parse(format!("nodes[{i}]: node listed twice")));
            }
            prototypes[e] = Some(vector_of(&format!("nodes[{i}].prototypes[{a}]"), v, dim)?);
            weights[e] = nd.weights[a];
        }
    }
    let prototypes = prototypes
        .into_iter()
        .map(|p| p.ok_or_else(|| Error::Parse("dual tree: some internal nodes are missing".into())))
        .collect::<Result<Vec<_>>>()?;
    DualTree::new(doc.num_types, doc.horizon, prototypes, weights)
}
