//! Cat and mouse on the integer lattices.

pub mod dirichlet;
pub mod exit;
pub mod line;
pub mod plane;

pub use dirichlet::{solve_dirichlet, DirichletSolution, ReturnKernel};
pub use line::{meeting_counter, passage_gf_exact, passage_gf_samples, sample_passage, scaling_1d, LineRun};
pub use plane::{build_relative_chain, plane_run, PlaneRun, relative_visits, return_counts, scaling_2d_marginal, RelativeChain};

/// The unit vectors `e1, e-1, e2, e-2`.
pub use crate::chain::UNIT_VECTORS as E;
