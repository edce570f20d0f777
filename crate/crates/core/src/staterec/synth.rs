//! Synthetic step-change series for tests and the evaluation harness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{AnnotatedSeries, FeatureSeries, StaterecError, FRAME_RATE_HZ};

/// Frames `0..change_frame` ~ N(0, I), the rest ~ N(mu1, I) with
/// `|mu1| = separation` along the all-ones diagonal. Frames are 10 Hz from
/// t = 0 and the annotation sits on `change_frame`.
pub fn synthesize_series(
    dim: usize,
    n_frames: usize,
    change_frame: usize,
    separation: f64,
    seed: u64,
) -> Result<AnnotatedSeries, StaterecError> {
    if dim == 0 || n_frames < 2 || change_frame == 0 || change_frame >= n_frames {
        return Err(StaterecError::InvalidParameter(format!(
            "need dim > 0 and 0 < change-frame < n-frames, got dim {dim}, \
             {n_frames} frames, change at {change_frame}"
        )));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(StaterecError::InvalidParameter(format!(
            "separation {separation}"
        )));
    }
    let shift = separation / (dim as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let timestamps: Vec<f64> = (0..n_frames).map(frame_time).collect();
    let features = (0..n_frames)
        .map(|i| {
            let mu = if i < change_frame { 0.0 } else { shift };
            (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mu + z
                })
                .collect::<Vec<f64>>()
        })
        .collect();
    let series = FeatureSeries::new(timestamps, features)?;
    AnnotatedSeries::new(series, frame_time(change_frame))
}

pub fn frame_time(i: usize) -> f64 {
    i as f64 / FRAME_RATE_HZ
}
