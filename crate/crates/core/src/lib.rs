//! Wearable fall-risk pipeline: torso sway covariance, perturbation
//! detection, egocentric depth panoramas, a synthetic gait simulator, the
//! training-window dataset format, and prediction scoring.

pub mod error;
pub mod eval;
pub mod frame;
pub mod state;
pub mod dataset;
pub mod detector;
pub mod panorama;
pub mod simgait;
pub mod sway;

pub use error::{Error, ErrorKind, Result};
pub use frame::{rotate_vector, transform_to_frame, PointCloud, Pose, UnitQuaternion};
pub use state::{StateVector, Timestamp, CHANNEL_NAMES, STATE_DIM, TICK_SECONDS};
