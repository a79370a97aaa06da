//! Quantitative checks on computed profiles.

pub mod annulus;
pub mod bounds;
pub mod decay;
pub mod energy;
pub mod pohozaev;
pub mod quadrature;
pub mod sobolev;

pub use annulus::{annulus_gradient_scaling, AnnulusFit};
pub use bounds::{uniform_bound_ratios, BoundRatios};
pub use decay::{decay_exponent, default_tail_window, fit_tail_decay};
pub use energy::{energy_g, energy_j, sphere_area, EnergyTerms};
pub use pohozaev::{pohozaev_check, PohozaevReport};
pub use sobolev::{euclidean_sobolev_constant, fem_quotient, minimize_quotient, sobolev_quotient, MinimizeControls, SobolevEstimate};
