//! Dynamic-programming solvers for 501 darts: board geometry, Gaussian skill
//! models, non-strategic and game-theoretic policies, evaluation and storage.

// `!(x > 0.0)` is used on purpose to reject NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod board;
pub mod error;
pub mod eval;
pub mod hits;
pub mod leg;
pub mod ns;
pub mod par;
pub mod rules;
pub mod sim;
pub mod skill;
pub mod store;
pub mod turn;
pub mod zsg;

pub use board::{ActionGrid, BoardGeometry, OutcomeLabel, Target};
pub use error::{Error, Result};
pub use hits::HitTable;
pub use leg::{LegValues, Player};
pub use ns::{solve_ns, solve_ns_dartcount, NsSolution, SolveConfig};
pub use par::Exec;
pub use skill::{Covariance, SkillModel};
pub use zsg::{solve_equilibrium, ZsgSolution};
