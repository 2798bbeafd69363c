//! Constructions of geodesic rays and geodesics avoiding a neighbourhood of
//! the unit tangents of a declared support: obstacle screens, off-support
//! distortions, the constants ledger, the waiting/deformation iteration and
//! the ray-pairing step.

pub mod closing;
pub mod constants;
pub mod distortion;
pub mod iterate;
pub mod screens;
pub mod support;

pub use closing::{close_ray_pair, replay_schedule, ClosedGeodesic};
pub use constants::{
    calibrate_beta, choose_constants, plan_constants, BetaCertificate, ConstantsLedger, LedgerPlan,
};
pub use distortion::{
    calibrate_psi, deform_on_sphere, deform_on_sphere_with, pi_epsilon, psi_r_epsilon,
    DeformedSample, PsiConstants,
};
pub use iterate::{
    dense_ray_clearance, iterate_avoidance, AvoidanceTrace, CheckOutcome, IterateOptions,
    StepRecord,
};
pub use screens::{
    construct_avoiding_ray, dense_clearance_check, hit_test, verify_radial_separation, HitClass,
    ObstacleSet, ScreenGeometry, ScreensParams, ScreensStep, ScreensTrace, SeparationCertificate,
};
pub use support::{
    base_distance, dist_ur, dist_ur_lower_bound, distance_gradient, nearest_base, Stratum,
    StratifiedSupport, UrDistance,
};
