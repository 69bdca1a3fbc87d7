//! Constant-velocity Kalman filter over `(cx, cy, aspect, height)` box state.
//!
//! Noise standard deviations scale with the object height, following the
//! SORT/BYTE family of trackers. All scale constants live in [`KalmanConfig`].

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BBox;

pub type StateVector = SVector<f64, 8>;
pub type StateMatrix = SMatrix<f64, 8, 8>;
type MeasVector = SVector<f64, 4>;
type MeasMatrix = SMatrix<f64, 4, 4>;
type ObsMatrix = SMatrix<f64, 4, 8>;

pub const MIN_ASPECT: f64 = 1e-3;
pub const MAX_ASPECT: f64 = 1e3;
pub const MIN_HEIGHT: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum MotionError {
    #[error("cannot initialise a track from degenerate box {0:?}")]
    DegenerateBox(BBox),
    #[error("non-finite measurement {0:?}")]
    NonFiniteMeasurement(BBox),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KalmanConfig {
    /// Position/height std per pixel of height.
    pub std_weight_position: f64,
    /// Velocity std per pixel of height.
    pub std_weight_velocity: f64,
    /// Initial position std multiplier (relative to `std_weight_position`).
    pub init_position_factor: f64,
    /// Initial velocity std multiplier (relative to `std_weight_velocity`).
    pub init_velocity_factor: f64,
    /// Absolute aspect std, used for the initial and process noise.
    pub aspect_std: f64,
    pub aspect_velocity_std: f64,
    pub measurement_aspect_std: f64,
    /// Measurement position std multiplier (relative to `std_weight_position`).
    pub measurement_position_factor: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self {
            std_weight_position: 1.0 / 20.0,
            std_weight_velocity: 1.0 / 160.0,
            init_position_factor: 2.0,
            init_velocity_factor: 10.0,
            aspect_std: 1e-2,
            aspect_velocity_std: 1e-5,
            measurement_aspect_std: 1e-1,
            measurement_position_factor: 1.0,
        }
    }
}

/// Gaussian belief over `(cx, cy, aspect, height, vcx, vcy, vaspect, vheight)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateMatrix,
}

impl KalmanState {
    /// The box described by the position part of the mean.
    pub fn to_box(&self) -> BBox {
        let h = self.mean[3];
        let w = self.mean[2] * h;
        BBox::from_center(self.mean[0], self.mean[1], w, h)
    }

    pub fn height(&self) -> f64 {
        self.mean[3]
    }
}

fn measurement(b: &BBox) -> MeasVector {
    let c = b.center();
    MeasVector::new(c.x, c.y, b.width() / b.height(), b.height())
}

fn symmetrize(m: &StateMatrix) -> StateMatrix {
    (m + m.transpose()) * 0.5
}

fn observation() -> ObsMatrix {
    let mut h = ObsMatrix::zeros();
    for i in 0..4 {
        h[(i, i)] = 1.0;
    }
    h
}

pub fn kf_init(measurement_box: &BBox, cfg: &KalmanConfig) -> Result<KalmanState, MotionError> {
    if !measurement_box.is_proper() {
        return Err(MotionError::DegenerateBox(*measurement_box));
    }
    let z = measurement(measurement_box);
    let mut mean = StateVector::zeros();
    mean.fixed_rows_mut::<4>(0).copy_from(&z);
    let h = z[3];
    let pos = cfg.init_position_factor * cfg.std_weight_position * h;
    let vel = cfg.init_velocity_factor * cfg.std_weight_velocity * h;
    let std = [
        pos,
        pos,
        cfg.aspect_std,
        pos,
        vel,
        vel,
        cfg.aspect_velocity_std,
        vel,
    ];
    let covariance = StateMatrix::from_diagonal(&StateVector::from_iterator(std.iter().map(|s| s * s)));
    Ok(KalmanState { mean, covariance })
}

fn predict_once(state: &KalmanState, cfg: &KalmanConfig) -> KalmanState {
    let mut f = StateMatrix::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    let h = state.mean[3];
    let pos = cfg.std_weight_position * h;
    let vel = cfg.std_weight_velocity * h;
    let std = [
        pos,
        pos,
        cfg.aspect_std,
        pos,
        vel,
        vel,
        cfg.aspect_velocity_std,
        vel,
    ];
    let q = StateMatrix::from_diagonal(&StateVector::from_iterator(std.iter().map(|s| s * s)));
    let mean = f * state.mean;
    let covariance = symmetrize(&(f * state.covariance * f.transpose() + q));
    KalmanState { mean, covariance }
}

/// Advance the state by `dt` frames. A multi-frame step is exactly `dt`
/// single-frame steps, so process noise follows the height along the way.
pub fn kf_predict(state: &KalmanState, dt: u32, cfg: &KalmanConfig) -> KalmanState {
    let mut s = state.clone();
    for _ in 0..dt {
        s = predict_once(&s, cfg);
    }
    s
}

pub fn kf_update(
    state: &KalmanState,
    measurement_box: &BBox,
    cfg: &KalmanConfig,
) -> Result<KalmanState, MotionError> {
    if !measurement_box.is_valid() {
        return Err(MotionError::NonFiniteMeasurement(*measurement_box));
    }
    let mut z = measurement(measurement_box);
    if !z.iter().all(|v| v.is_finite()) {
        // zero-height boxes give an infinite aspect; fall back to the prior
        z[2] = state.mean[2];
        if !z[2].is_finite() {
            return Err(MotionError::NonFiniteMeasurement(*measurement_box));
        }
    }
    z[3] = z[3].max(MIN_HEIGHT);

    let h_obs = observation();
    let h = state.mean[3];
    let pos = cfg.measurement_position_factor * cfg.std_weight_position * h;
    let r = MeasMatrix::from_diagonal(&MeasVector::new(
        pos * pos,
        pos * pos,
        cfg.measurement_aspect_std * cfg.measurement_aspect_std,
        pos * pos,
    ));
    let projected_cov = h_obs * state.covariance * h_obs.transpose() + r;
    let innovation = z - h_obs * state.mean;
    let chol = projected_cov
        .cholesky()
        .expect("innovation covariance is positive definite");
    // K = P H^T S^-1
    let gain = chol.solve(&(h_obs * state.covariance)).transpose();
    let mut mean = state.mean + gain * innovation;
    let covariance = symmetrize(&(state.covariance - gain * projected_cov * gain.transpose()));
    mean[2] = mean[2].clamp(MIN_ASPECT, MAX_ASPECT);
    mean[3] = mean[3].max(MIN_HEIGHT);
    Ok(KalmanState { mean, covariance })
}
