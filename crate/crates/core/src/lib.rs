//! Existence checks and conditional maximum likelihood estimation for the
//! binary logit model with individual fixed effects.
//!
//! ```
//! use binlogit::{detector, fixtures};
//!
//! let data = fixtures::threshold_panel();
//! let report = detector::detect_panel_separation(&data, &Default::default()).unwrap();
//! assert_eq!(report.status, detector::Status::Separated);
//! ```

pub mod altsets;
pub mod cli;
pub mod detector;
pub mod error;
pub mod estimator;
pub mod fixtures;
pub mod linalg;
pub mod panel;
pub mod qp;
pub mod report;
pub mod simulate;

pub use detector::{
    detect_panel_separation, detect_pooled_separation, rank_check, DetectOptions, ExistenceReport,
    Status,
};
pub use error::{Error, Result};
pub use estimator::{conditional_loglik, conditional_score_and_hessian, fit, CmleFit, FitOptions};
pub use panel::{load_csv, IndividualSlice, PanelDataset};
pub use simulate::{existence_rate, generate_panel, FrequencyReport, SimConfig};
