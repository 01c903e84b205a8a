//! The uninformed player's dual problem.
//!
//! Two routes are implemented. For a fixed reduced dual tree (prototype
//! actions `v^a` and branch weights `lambda^a` at every node, `I + 1`
//! branches), the child dual labels eliminate exactly and the value is
//! `max_i {p_i - J_i(x)}`, where each `J_i` comes from its own one-player
//! Riccati recursion ([`typewise`]). Per node, the same problem is a convex
//! program over the hull of achievable type-cost vectors, solved through its
//! support function, the small λ LP, or column generation ([`node`]).

pub mod node;
pub mod typewise;

pub use node::{
    column_generation, column_generation_with, deterministic_cost_vector, dual_node_value,
    finite_set_dual_value, finite_set_node_value, lambda_lp, support_function, Candidate,
    ColumnGeneration, CostVectorSet, LambdaLp, NodeDualValue, NodeMethod, NodeQuadratics,
    SimplexSearch,
};
pub use typewise::{
    fixed_tree_dual_value, typewise_backward_pass, typewise_backward_pass_sequential,
    typewise_recursion, DualTree, DualValue, TypewiseCostTree, TypewiseEdge, TypewiseTree,
};
