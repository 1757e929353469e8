//! Markov transportation distances: discrete admissible paths, their action,
//! the action minimizer and one-dimensional reference computations.

mod cost;
pub mod exact;
pub mod path;
pub mod reparam;
pub mod solver;

pub use exact::{
    displacement_interpolation_1d, t2_two_point_exact, two_point_density, two_point_geodesic,
    w2_quantile_1d, Interpolant,
};
pub use path::{
    action, action_xi, constant_path, initial_path, midpoint_action, path_from_curve,
    path_from_nodes, phi_entropy_increment, push_forward, DiscretePath, RESIDUAL_TOL,
};
pub use reparam::{reparametrize_eps_geodesic, reparametrize_eps_geodesic_xi};
pub use solver::{
    minimize_action, minimize_action_xi, Diagnostics, SolverOptions, TransportResult,
};
