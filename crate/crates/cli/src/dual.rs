//! `lqig dual`: evaluate a fixed reduced dual tree at user-supplied
//! `(node, x, p_hat)` probes.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use lqig_core::dual::{
    column_generation, dual_node_value, finite_set_dual_value, fixed_tree_dual_value, lambda_lp,
    typewise_backward_pass, CostVectorSet, DualTree, NodeQuadratics, SimplexSearch,
    TypewiseCostTree,
};
use lqig_core::game::GameSpec;
use lqig_core::io::{load_dual_tree, rows_of, save_dual_tree, to_json_text, SCHEMA_VERSION};
use lqig_core::linalg::{Mat, Vector};
use lqig_core::riccati::QuadraticValue;
use lqig_core::NodeId;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::manifest::{Invocation, OutDir};
use crate::{read_spec, read_text, Status};

/// Column budget for the per-probe column generation.
const MAX_COLUMNS: usize = 16;

#[derive(Debug, Clone, Args)]
pub struct DualArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Dual tree document; a seeded random tree is drawn when omitted.
    #[arg(long)]
    pub dual_tree: Option<PathBuf>,
    /// Probe list: `{"version": 1, "probes": [{"k", "omega", "x", "p_hat"}]}`.
    #[arg(long)]
    pub probes: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Prototype magnitude of the random tree.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probe {
    pub k: usize,
    /// Branch digits from the root, `"1"`-based as in the tree exports.
    #[serde(default)]
    pub omega: String,
    pub x: Vec<f64>,
    pub p_hat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeDoc {
    pub version: u64,
    pub probes: Vec<Probe>,
}

fn quad_json(q: &QuadraticValue<f64>) -> Value {
    json!({ "P": rows_of(&q.p), "r": q.r.as_slice(), "c": q.c })
}

fn vec_json(v: &Vector<f64>) -> Value {
    json!(v.as_slice())
}

fn or_error<T>(r: lqig_core::Result<T>, f: impl FnOnce(T) -> Value) -> Value {
    match r {
        Ok(v) => f(v),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Per-type continuation `sum_a lambda_a J_i(child a)` seen from `node`.
fn averaged_continuation(
    costs: &TypewiseCostTree<f64>,
    tree: &DualTree<f64>,
    node: usize,
) -> Vec<QuadraticValue<f64>> {
    let l = tree.layout();
    (0..tree.num_types())
        .map(|i| {
            let mut acc = QuadraticValue::zeros(costs.node_cost(i, node).dim());
            for a in 0..l.branching() {
                let w = tree.weight(node, a);
                let j = costs.node_cost(i, l.child(node, a));
                acc.p += &j.p * w;
                acc.r += &j.r * w;
                acc.c += j.c * w;
            }
            acc
        })
        .collect()
}

pub fn evaluate_probe(
    spec: &GameSpec<f64>,
    tree: &DualTree<f64>,
    costs: &TypewiseCostTree<f64>,
    probe: &Probe,
) -> anyhow::Result<Value> {
    let ni = spec.num_types();
    let id = NodeId::parse_omega(probe.k, &probe.omega)?;
    let l = tree.layout();
    let node = l.index_of(&id)?;
    if probe.x.len() != spec.n() || probe.p_hat.len() != ni {
        bail!(
            "probe at {id}: x has {} entries and p_hat {}, expected {} and {ni}",
            probe.x.len(),
            probe.p_hat.len(),
            spec.n()
        );
    }
    let x = Vector::from_column_slice(&probe.x);
    let p_hat = Vector::from_column_slice(&probe.p_hat);
    let w = fixed_tree_dual_value(costs, &id, &x, &p_hat)?;
    let terminal = l.is_leaf(node);

    // Branch costs C_ia(x); a terminal node has the single column g_i(x).
    let branch = if terminal {
        Mat::from_fn(ni, 1, |i, _| spec.types[i].terminal_cost(&x))
    } else {
        Mat::from_fn(ni, l.branching(), |i, a| {
            costs.branch_cost(i, node, a).cost.evaluate(&x)
        })
    };
    let lp = lambda_lp(&p_hat, &branch)?;
    let dual = finite_set_dual_value(&p_hat, &branch)?;

    let (cg, node_value) = if terminal {
        (Value::Null, Value::Null)
    } else {
        let cont = averaged_continuation(costs, tree, node);
        let cg = NodeQuadratics::new(&x, &cont, spec).and_then(|quads| {
            let start = CostVectorSet::from_actions(
                &quads,
                (0..l.branching()).map(|a| tree.prototype(node, a).clone()),
            );
            column_generation(&x, &p_hat, start, &cont, spec, MAX_COLUMNS)
        });
        let cg = or_error(cg, |cg| {
            json!({
                "value": cg.value,
                "lambda": vec_json(&cg.lambda),
                "q": vec_json(&cg.q),
                "columns": cg.candidates.candidates.iter().map(|c| vec_json(&c.v)).collect::<Vec<_>>(),
                "trace": cg.trace,
                "converged": cg.converged,
                "pricing_failed": cg.pricing_failed,
            })
        });
        let nv = or_error(
            dual_node_value(&x, &p_hat, &cont, spec, &SimplexSearch::default()),
            |v| {
                json!({
                    "value": v.value,
                    "q": vec_json(&v.q),
                    "v_star": vec_json(&v.v_star),
                    "method": v.method.as_str(),
                    "flagged": v.flagged,
                })
            },
        );
        (cg, nv)
    };

    Ok(json!({
        "k": probe.k,
        "omega": id.omega_string(),
        "terminal": terminal,
        "x": probe.x,
        "p_hat": probe.p_hat,
        "W": w.value,
        "argmax": w.argmax,
        "active": w.active,
        "J_at_x": vec_json(&w.costs),
        "J": (0..ni).map(|i| quad_json(costs.node_cost(i, node))).collect::<Vec<_>>(),
        "branch_costs": rows_of(&branch),
        "lambda_lp": { "lambda": vec_json(&lp.lambda), "value": lp.value, "q": vec_json(&lp.q) },
        "finite_set_dual_value": dual,
        "duality_gap": (lp.value - dual).abs(),
        "column_generation": cg,
        "node_value": node_value,
    }))
}

pub fn run(args: &DualArgs, inv: &Invocation) -> anyhow::Result<Status> {
    let spec = read_spec(&args.spec)?;
    let probes: ProbeDoc = serde_json::from_str(&read_text(&args.probes)?)
        .with_context(|| format!("invalid probe list {}", args.probes.display()))?;
    if probes.version != SCHEMA_VERSION {
        bail!(
            "probe list has schema version {}, expected {SCHEMA_VERSION}",
            probes.version
        );
    }
    let mut out = OutDir::create(&args.out)?;
    let tree = match &args.dual_tree {
        Some(path) => load_dual_tree(&read_text(path)?)
            .with_context(|| format!("invalid dual tree {}", path.display()))?,
        None => {
            let tree = DualTree::random(
                spec.num_types(),
                spec.horizon,
                spec.m2(),
                args.scale,
                args.seed,
            )?;
            out.write("dual_tree.json", save_dual_tree(&tree))?;
            tree
        }
    };
    let costs = typewise_backward_pass(&tree, &spec)?;
    let reports = probes
        .probes
        .iter()
        .map(|p| evaluate_probe(&spec, &tree, &costs, p))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let worst_gap = reports
        .iter()
        .filter_map(|r| r["duality_gap"].as_f64())
        .fold(0.0, f64::max);
    let report = json!({
        "version": SCHEMA_VERSION,
        "num_types": spec.num_types(),
        "horizon": spec.horizon,
        "closure_residual": costs.closure_residual(&tree),
        "probes": reports,
    });
    out.write("dual_report.json", to_json_text(&report))?;
    let echo = json!({
        "dual_tree": args.dual_tree.as_ref().map(|p| p.display().to_string()),
        "probes": args.probes.display().to_string(),
        "scale": args.scale,
        "max_columns": MAX_COLUMNS,
    });
    out.finish("dual", inv, Some(&args.spec), echo, Some(args.seed))?;
    println!("probes          {}", probes.probes.len());
    println!("max duality gap {worst_gap:.3e}");
    Ok(Status::Success)
}
