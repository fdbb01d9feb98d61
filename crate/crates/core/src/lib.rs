//! Post-hoc probability calibration.
//!
//! The main calibrator bins calibration predictions, bootstraps each bin
//! into (mean prediction, empirical rate) pairs and fits a monotone,
//! range-preserving random forest on them ([`forecal`]). Platt scaling,
//! temperature scaling, isotonic regression, histogram binning and a
//! simplified Bayesian binning ensemble are provided for comparison
//! ([`baselines`]), together with the usual calibration metrics
//! ([`metrics`]) and a synthetic miscalibration generator with a known
//! ground-truth map ([`synthetic`]).

pub mod baselines;
pub mod data;
pub mod error;
pub mod forecal;
pub mod forest;
pub mod metrics;
pub mod rng;
pub mod synthetic;

pub use baselines::{Calibrator, Method};
pub use data::{load_csv, partition, save_csv, CalibrationDataset, SplitSpec};
pub use error::{CalibrationError, Result};
pub use forecal::{ForecalCalibrator, ForecalConfig, RegressionSample};
pub use forest::{
    check_monotone, fit_forest, ConstraintVector, FeatureMatrix, ForestParams, Monotonicity,
    MonotonicForest,
};
pub use metrics::{auc, bin_reliability, ece, log_loss, EvalRecord, EvalReport, ReliabilityBin};
pub use synthetic::{generate, oracle_calibration, Distortion, DistortionSpec};
