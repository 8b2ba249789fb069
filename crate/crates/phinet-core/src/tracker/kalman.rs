//! Constant-velocity Kalman filter over box center, area, and aspect ratio.
//!
//! State is [u, v, s, r, u̇, v̇, ṡ]: center coordinates, scale (area), aspect
//! ratio, and the velocities of the first three. Aspect ratio is modeled as
//! constant. Updates use the Joseph form so the covariance stays symmetric
//! positive semidefinite even with a large initial velocity uncertainty.

use nalgebra::{SMatrix, SVector};

use super::Bbox;

type State = SVector<f64, 7>;
type Cov = SMatrix<f64, 7, 7>;
type Meas = SVector<f64, 4>;
type MeasCov = SMatrix<f64, 4, 4>;
type Obs = SMatrix<f64, 4, 7>;

fn transition() -> Cov {
    let mut f = Cov::identity();
    f[(0, 4)] = 1.0;
    f[(1, 5)] = 1.0;
    f[(2, 6)] = 1.0;
    f
}

fn observation() -> Obs {
    let mut h = Obs::zeros();
    for i in 0..4 {
        h[(i, i)] = 1.0;
    }
    h
}

fn measurement_noise() -> MeasCov {
    MeasCov::from_diagonal(&Meas::from([1.0, 1.0, 10.0, 10.0]))
}

fn process_noise() -> Cov {
    Cov::from_diagonal(&State::from([1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4]))
}

fn initial_covariance() -> Cov {
    Cov::from_diagonal(&State::from([10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4]))
}

fn to_measurement(bbox: &Bbox) -> Meas {
    Meas::from([
        bbox.left + bbox.width / 2.0,
        bbox.top + bbox.height / 2.0,
        bbox.width * bbox.height,
        bbox.width / bbox.height,
    ])
}

fn to_bbox(state: &State) -> Bbox {
    let (s, r) = (state[2], state[3]);
    if s <= 0.0 || r <= 0.0 {
        // Degenerate scale: report a zero box at the predicted center.
        return Bbox::new(state[0], state[1], 0.0, 0.0);
    }
    let w = (s * r).sqrt();
    let h = s / w;
    Bbox::new(state[0] - w / 2.0, state[1] - h / 2.0, w, h)
}

#[derive(Debug, Clone)]
pub struct KalmanBoxFilter {
    x: State,
    p: Cov,
    /// Set when a predicted scale would have gone non-positive and was
    /// clamped; the track is suspect from then on.
    pub scale_clamped: bool,
}

impl KalmanBoxFilter {
    pub fn new(bbox: &Bbox) -> Self {
        let z = to_measurement(bbox);
        let mut x = State::zeros();
        for i in 0..4 {
            x[i] = z[i];
        }
        KalmanBoxFilter {
            x,
            p: initial_covariance(),
            scale_clamped: false,
        }
    }

    /// Advance one frame and return the predicted box.
    pub fn predict(&mut self) -> Bbox {
        // A scale heading non-positive would make box extraction meaningless;
        // zero the scale velocity first and remember that it happened.
        if self.x[2] + self.x[6] <= 0.0 {
            self.x[6] = 0.0;
            self.scale_clamped = true;
        }
        let f = transition();
        self.x = f * self.x;
        self.p = f * self.p * f.transpose() + process_noise();
        if self.x[2] < 0.0 {
            self.x[2] = 0.0;
            self.scale_clamped = true;
        }
        to_bbox(&self.x)
    }

    /// Fold in an observed box.
    pub fn update(&mut self, bbox: &Bbox) {
        let h = observation();
        let r = measurement_noise();
        let innovation = to_measurement(bbox) - h * self.x;
        let s = h * self.p * h.transpose() + r;
        let s_inv = s.try_inverse().expect("innovation covariance is invertible");
        let k = self.p * h.transpose() * s_inv;
        self.x += k * innovation;
        let ikh = Cov::identity() - k * h;
        self.p = ikh * self.p * ikh.transpose() + k * r * k.transpose();
    }

    /// Current state as a box (posterior after `update`, prior after `predict`).
    pub fn bbox(&self) -> Bbox {
        to_bbox(&self.x)
    }

    pub fn covariance(&self) -> Cov {
        self.p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moving_box(t: f64) -> Bbox {
        Bbox::new(10.0 + 3.0 * t, 20.0 + 2.0 * t, 30.0, 60.0)
    }

    #[test]
    fn initial_state_reproduces_the_box() {
        let b = Bbox::new(10.0, 20.0, 30.0, 60.0);
        let kf = KalmanBoxFilter::new(&b);
        let back = kf.bbox();
        assert!((back.left - b.left).abs() < 1e-9);
        assert!((back.top - b.top).abs() < 1e-9);
        assert!((back.width - b.width).abs() < 1e-9);
        assert!((back.height - b.height).abs() < 1e-9);
    }

    #[test]
    fn converges_onto_constant_velocity_motion() {
        let mut kf = KalmanBoxFilter::new(&moving_box(0.0));
        for t in 1..=20 {
            kf.predict();
            kf.update(&moving_box(t as f64));
        }
        let predicted = kf.predict();
        let truth = moving_box(21.0);
        assert!((predicted.left - truth.left).abs() < 0.5);
        assert!((predicted.top - truth.top).abs() < 0.5);
        assert!((predicted.width - truth.width).abs() < 1.0);
    }

    #[test]
    fn covariance_contracts_with_updates() {
        let b = Bbox::new(0.0, 0.0, 20.0, 40.0);
        let mut kf = KalmanBoxFilter::new(&b);
        let before = kf.covariance()[(0, 0)];
        for _ in 0..5 {
            kf.predict();
            kf.update(&b);
        }
        assert!(kf.covariance()[(0, 0)] < before);
    }

    #[test]
    fn covariance_stays_positive_semidefinite() {
        let mut kf = KalmanBoxFilter::new(&moving_box(0.0));
        for t in 1..=50 {
            kf.predict();
            if t % 3 != 0 {
                kf.update(&moving_box(t as f64));
            }
            let eigs = kf.covariance().symmetric_eigenvalues();
            let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-9, "min eigenvalue {min} at step {t}");
        }
    }

    #[test]
    fn shrinking_boxes_trip_the_scale_clamp() {
        // Area collapsing fast teaches the filter a large negative ṡ; coasting
        // without updates then drives the predicted scale to the clamp.
        let mut kf = KalmanBoxFilter::new(&Bbox::new(0.0, 0.0, 40.0, 40.0));
        for t in 1..=6 {
            kf.predict();
            let side = 40.0 - 6.0 * t as f64;
            kf.update(&Bbox::new(0.0, 0.0, side, side));
        }
        for _ in 0..30 {
            kf.predict();
            if kf.scale_clamped {
                break;
            }
        }
        assert!(kf.scale_clamped);
        let b = kf.bbox();
        assert!(b.width >= 0.0 && b.height >= 0.0);
    }
}
