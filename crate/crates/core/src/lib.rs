//! Full counting statistics of work for a Landau–Zener two-level system strongly
//! coupled to a super-Ohmic bosonic bath.
//!
//! The work characteristic operator is propagated with the polaron-frame adiabatic
//! master equation (or the weak-coupling one for comparison), its trace sampled over
//! a counting-field grid and inverted into a work distribution.
//!
//! Units: ħ = k_B = 1; energies in units of the tunnelling Δ, times in 1/Δ.

pub mod analytics;
pub mod bath;
pub mod dynamics;
pub mod error;
pub mod evolve;
pub mod generator;
pub mod mat2;
pub mod ode;
pub mod quad;
pub mod specfun;
pub mod spline;
pub mod system;
pub mod workdist;

pub use bath::{build_rate_table, BathParams, Channel, GridSpec, RateTable};
pub use analytics::{closed_lz_unitary, lz_asymptotic, ClosedLZResult, LzAsymptotic};
pub use dynamics::{import_reference, run_comparison, Comparison, Source, Trajectory};
pub use error::{Error, Result};
pub use evolve::{characteristic_function, integrate_wco, sample_cf, CFGrid, CfMetadata};
pub use generator::GeneratorContext;
pub use mat2::Mat2C;
pub use num_complex::Complex64;
pub use ode::{Method, SolverOptions};
pub use system::{DriveProtocol, EigenFrame, Frame};
pub use workdist::{
    bin_distribution, invert_cf, jarzynski_check, work_distribution, DistOptions, JarzynskiResult, Moments,
    Window, WorkDistribution,
};
