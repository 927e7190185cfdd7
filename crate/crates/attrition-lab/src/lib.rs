//! Equilibrium construction and verification for continuous-time
//! reputational bargaining games in which players may issue ultimatums.

pub mod analysis;
pub mod bernoulli;
pub mod equilibrium;
pub mod model;
pub mod montecarlo;
pub mod multidemand;
pub mod onesided;
pub mod path;
pub mod quadrature;
pub mod sampling;
pub mod twosided;
