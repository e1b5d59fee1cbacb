//! Winding theory, quadrature, and the experiment drivers that compare
//! simulations against it.

pub mod checks;
pub mod experiments;
pub mod fit;
pub mod focussing;
pub mod quad;
pub mod winding;

pub use checks::{eigen_check, oracle_check, EigenCheckReport, EigenRow, OracleRow};
pub use experiments::{
    geometric_radii, momentum_drift, momentum_drift_experiment, trichotomy_experiment, trichotomy_runs, winding_angle,
    winding_experiment, DriftCell, RemainderFit, TrichotomyConfig, WindingCell, WindingConfig, WindingConstantValue,
    WindingReport,
};
pub use fit::{fit_line, fit_power_law, LineFit};
pub use focussing::{
    basin_symmetry_violations, equidistributed_seeds, focussing_experiment, front_face_limit_check, poincare_map,
    theta_decay_rate, wrapped_difference, AttractorCount, CrossSectionSymmetry, EpsilonSummary, FocussingConfig,
    FocussingReport, FocussingRow, FrontFaceLimitReport, PoincareEndpoint, SectionPoint,
};
pub use quad::Quadrature;
pub use winding::{
    clairaut_classify, cv_asymptote, warped_angular_length, winding_constant, winding_constant_1mv,
    winding_constant_phi, LengthForm, Trichotomy, TrichotomyReport, WarpProfile,
};
