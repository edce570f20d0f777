//! Ingredient state-change detection from per-frame feature vectors.
//!
//! A linear probe is trained from series annotated with a single change time;
//! online, the change is declared at the first frame the probe labels as
//! post-change.

mod io;
mod probe;
mod synth;

pub use io::*;
pub use probe::*;
pub use synth::*;

/// Nominal frame rate of feature series.
pub const FRAME_RATE_HZ: f64 = 10.0;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum StaterecError {
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("a series needs at least 2 frames, got {0}")]
    TooShort(usize),
    #[error("timestamps must be strictly increasing (frame {0})")]
    NonIncreasing(usize),
    #[error("non-finite value at frame {0}")]
    NonFinite(usize),
    #[error("annotation time {time} outside [{first}, {last}]")]
    AnnotationOutOfRange { time: f64, first: f64, last: f64 },
    #[error("training data contains only label {0}")]
    OneClass(u8),
    #[error("no training series")]
    NoData,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("feature file: {0}")]
    Format(String),
}

/// Frames of one recording. `features[i]` belongs to `timestamps[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    timestamps: Vec<f64>,
    features: Vec<Vec<f64>>,
}

impl FeatureSeries {
    pub fn new(timestamps: Vec<f64>, features: Vec<Vec<f64>>) -> Result<Self, StaterecError> {
        if timestamps.len() != features.len() {
            return Err(StaterecError::Format(format!(
                "{} timestamps for {} feature rows",
                timestamps.len(),
                features.len()
            )));
        }
        if timestamps.len() < 2 {
            return Err(StaterecError::TooShort(timestamps.len()));
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(StaterecError::InvalidParameter("dimension 0".into()));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != dim {
                return Err(StaterecError::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if !timestamps[i].is_finite() || row.iter().any(|x| !x.is_finite()) {
                return Err(StaterecError::NonFinite(i));
            }
            if i > 0 && timestamps[i] <= timestamps[i - 1] {
                return Err(StaterecError::NonIncreasing(i));
            }
        }
        Ok(Self {
            timestamps,
            features,
        })
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn first_time(&self) -> f64 {
        self.timestamps[0]
    }

    pub fn last_time(&self) -> f64 {
        *self.timestamps.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSeries {
    pub series: FeatureSeries,
    /// Seconds; frames at or after this time are post-change.
    pub annotation: f64,
}

impl AnnotatedSeries {
    pub fn new(series: FeatureSeries, annotation: f64) -> Result<Self, StaterecError> {
        let (first, last) = (series.first_time(), series.last_time());
        if !(first..=last).contains(&annotation) {
            return Err(StaterecError::AnnotationOutOfRange {
                time: annotation,
                first,
                last,
            });
        }
        Ok(Self { series, annotation })
    }
}

/// 0 before the annotation time, 1 from it on.
pub fn label_series(a: &AnnotatedSeries) -> Vec<u8> {
    a.series
        .timestamps
        .iter()
        .map(|&t| u8::from(t >= a.annotation))
        .collect()
}
