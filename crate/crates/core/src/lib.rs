//! Short-term cloud motion prediction from ground-based sky images.
//!
//! Frames are reduced to the red/blue ratio channel `(B - R) / (B + R)`,
//! dense optical flow between two consecutive frames is estimated
//! coarse-to-fine, and future frames are synthesized by warping the latest
//! frame along that flow, repeatedly for longer lead times. Forecasts are
//! scored by segmenting predicted and observed frames into sky and cloud and
//! counting agreeing pixels.

pub mod error;
pub mod flow;
pub mod io;
pub mod prediction;
pub mod pyramid;
pub mod raster;
pub mod segmentation;
pub mod synthetic;

pub use error::{Error, Result};
pub use flow::{FlowField, FlowParams, Method, VelocityField};
pub use prediction::{cascade_predict, predict_next, warp_image, Forecast};
pub use pyramid::{build_pyramid, Pyramid};
pub use raster::{
    bilinear_sample, gaussian_blur, ratio_channel, spatial_gradients, temporal_gradient, Image,
    ScalarField,
};
pub use segmentation::{accuracy, evaluate_sequence, segment, AccuracyReport, BinaryMask};
pub use synthetic::{endpoint_error, generate, SceneSpec, SyntheticSequence};
