//! Causal discovery for linear non-Gaussian structural equation models
//! `X = Lambda^T X + eps` whose directed cycles are pairwise disjoint.
//!
//! The pipeline peels the graph layer by layer: root vertices and root cycles
//! are found from vanishing second- and third-order moment determinants, cycle
//! weights come from closed-form moment expressions, and the remaining edges
//! from regressions on the already-recovered layers. Results are identified up
//! to cycle reversal; [`equivalence`] enumerates the class and picks the
//! stable member.
//!
//! * [`graph`]: directed graphs, strong components, ancestor sets and the
//!   graphical criteria for vanishing determinants.
//! * [`sem`]: model parameters, exact and trek-expanded moments, simulation.
//! * [`moments`]: sample moments, determinant statistics, regression and
//!   closed-form edge weights.
//! * [`stats`]: delta-method and empirical-likelihood tests, corrections.
//! * [`discovery`]: the layered search, in population or sample mode.
//! * [`bench`]: simulation study harness.
pub mod bench;
pub mod cliques;
pub mod data;
pub mod discovery;
pub mod equivalence;
pub mod error;
pub mod graph;
pub mod moments;
pub mod sem;
pub mod stats;
pub mod tensor;
