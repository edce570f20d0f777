//! L2-regularised logistic regression trained by full-batch gradient descent.

use std::fmt::Write;

use super::{label_series, AnnotatedSeries, FeatureSeries, StaterecError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub l2: f64,
    pub max_epochs: usize,
    /// Stop once an epoch lowers the loss by less than this.
    pub tol: f64,
    /// Recorded with the probe; training itself draws no random numbers.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2: 1.0,
            max_epochs: 1000,
            tol: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn check(&self) -> Result<(), StaterecError> {
        if !(self.l2 > 0.0 && self.tol > 0.0 && self.max_epochs > 0) {
            return Err(StaterecError::InvalidParameter(format!(
                "l2, tol and max-epochs must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: TrainConfig,
    /// Gradient steps actually taken.
    pub epochs: usize,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss `(1/N) sum(log(1+e^z) - y z) + (l2 / 2N) |w|^2` with `z = w.x + b`,
/// and its gradient with respect to `w` and `b`. The bias is not penalised.
pub fn loss_and_gradient(
    xs: &[Vec<f64>],
    ys: &[u8],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z = dot(w, x) + b;
        let y = f64::from(y);
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        for (g, xi) in gw.iter_mut().zip(x) {
            *g += r * xi;
        }
        gb += r;
    }
    let reg: f64 = w.iter().map(|v| v * v).sum();
    loss = loss / n + l2 / (2.0 * n) * reg;
    for (g, wi) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 / n * wi;
    }
    (loss, gw, gb / n)
}

fn loss_only(xs: &[Vec<f64>], ys: &[u8], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = xs.len() as f64;
    let data: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let z = dot(w, x) + b;
            softplus(z) - f64::from(y) * z
        })
        .sum();
    data / n + l2 / (2.0 * n) * w.iter().map(|v| v * v).sum::<f64>()
}

pub fn train_probe(
    data: &[AnnotatedSeries],
    cfg: &TrainConfig,
) -> Result<LinearProbe, StaterecError> {
    train_probe_traced(data, cfg).map(|(p, _)| p)
}

/// Like [`train_probe`], also returning the loss before the first step and
/// after every accepted step.
pub fn train_probe_traced(
    data: &[AnnotatedSeries],
    cfg: &TrainConfig,
) -> Result<(LinearProbe, Vec<f64>), StaterecError> {
    cfg.check()?;
    let first = data.first().ok_or(StaterecError::NoData)?;
    let dim = first.series.dim();
    let mut raw: Vec<&[f64]> = Vec::new();
    let mut ys: Vec<u8> = Vec::new();
    for a in data {
        if a.series.dim() != dim {
            return Err(StaterecError::DimensionMismatch {
                expected: dim,
                got: a.series.dim(),
            });
        }
        raw.extend(a.series.features().iter().map(Vec::as_slice));
        ys.extend(label_series(a));
    }
    if let Some(&only) = ys.first().filter(|&&l| ys.iter().all(|&y| y == l)) {
        return Err(StaterecError::OneClass(only));
    }

    let n = raw.len() as f64;
    let mut mean = vec![0.0; dim];
    for x in &raw {
        for (m, v) in mean.iter_mut().zip(x.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut scale = vec![0.0; dim];
    for x in &raw {
        for j in 0..dim {
            scale[j] += (x[j] - mean[j]).powi(2);
        }
    }
    for s in scale.iter_mut() {
        *s = (*s / n).sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    }
    let xs: Vec<Vec<f64>> = raw
        .iter()
        .map(|x| (0..dim).map(|j| (x[j] - mean[j]) / scale[j]).collect())
        .collect();

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut eta = 1.0;
    let (mut loss, _, _) = loss_and_gradient(&xs, &ys, &w, b, cfg.l2);
    let mut history = vec![loss];
    let mut epochs = 0;
    'outer: while epochs < cfg.max_epochs {
        let (_, gw, gb) = loss_and_gradient(&xs, &ys, &w, b, cfg.l2);
        let g2: f64 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if g2 == 0.0 {
            break;
        }
        // Armijo backtracking keeps every accepted step non-increasing.
        let (w_next, b_next, next) = loop {
            let w_try: Vec<f64> = w.iter().zip(&gw).map(|(wi, g)| wi - eta * g).collect();
            let b_try = b - eta * gb;
            let l = loss_only(&xs, &ys, &w_try, b_try, cfg.l2);
            if l <= loss - 1e-4 * eta * g2 {
                break (w_try, b_try, l);
            }
            eta *= 0.5;
            if eta < 1e-30 {
                break 'outer;
            }
        };
        let delta = loss - next;
        w = w_next;
        b = b_next;
        loss = next;
        history.push(loss);
        epochs += 1;
        eta *= 2.0;
        if delta < cfg.tol {
            break;
        }
    }
    Ok((
        LinearProbe {
            mean,
            scale,
            weights: w,
            bias: b,
            config: *cfg,
            epochs,
        },
        history,
    ))
}

impl LinearProbe {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Probability that `frame` is post-change.
    pub fn score(&self, frame: &[f64]) -> f64 {
        let z: f64 = frame
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .zip(&self.weights)
            .map(|(((x, m), s), w)| w * (x - m) / s)
            .sum::<f64>()
            + self.bias;
        sigmoid(z)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::from("linear-probe 1\n");
        let _ = writeln!(out, "dim {}", self.dim());
        let _ = writeln!(out, "l2 {}", self.config.l2);
        let _ = writeln!(out, "max-epochs {}", self.config.max_epochs);
        let _ = writeln!(out, "tol {}", self.config.tol);
        let _ = writeln!(out, "seed {}", self.config.seed);
        let _ = writeln!(out, "epochs {}", self.epochs);
        let _ = writeln!(out, "mean {}", join(&self.mean));
        let _ = writeln!(out, "scale {}", join(&self.scale));
        let _ = writeln!(out, "weights {}", join(&self.weights));
        let _ = writeln!(out, "bias {}", self.bias);
        out
    }

    pub fn parse(text: &str) -> Result<Self, StaterecError> {
        let bad = |m: &str| StaterecError::Format(format!("probe file: {m}"));
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("linear-probe 1") {
            return Err(bad("missing `linear-probe 1` header"));
        }
        let mut fields = std::collections::HashMap::new();
        for l in lines {
            if let Some((k, v)) = l.trim().split_once(' ') {
                fields.insert(k.to_string(), v.trim().to_string());
            }
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| bad(&format!("missing `{k}`")));
        let num = |k: &str| -> Result<f64, StaterecError> {
            get(k)?.parse().map_err(|_| bad(&format!("bad `{k}`")))
        };
        let int = |k: &str| -> Result<u64, StaterecError> {
            get(k)?.parse().map_err(|_| bad(&format!("bad `{k}`")))
        };
        let vec = |k: &str| -> Result<Vec<f64>, StaterecError> {
            get(k)?
                .split_whitespace()
                .map(|v| v.parse().map_err(|_| bad(&format!("bad `{k}`"))))
                .collect()
        };
        let dim = int("dim")? as usize;
        let p = LinearProbe {
            mean: vec("mean")?,
            scale: vec("scale")?,
            weights: vec("weights")?,
            bias: num("bias")?,
            config: TrainConfig {
                l2: num("l2")?,
                max_epochs: int("max-epochs")? as usize,
                tol: num("tol")?,
                seed: int("seed")?,
            },
            epochs: int("epochs")? as usize,
        };
        for v in [&p.mean, &p.scale, &p.weights] {
            if v.len() != dim {
                return Err(StaterecError::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        let all = p.mean.iter().chain(&p.scale).chain(&p.weights);
        if !p.bias.is_finite() || all.clone().any(|v| !v.is_finite()) {
            return Err(bad("non-finite parameter"));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub detected_time: Option<f64>,
    pub detected_frame: Option<usize>,
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
}

/// Score every frame; the change is the first frame scoring above 0.5.
pub fn detect_change(p: &LinearProbe, s: &FeatureSeries) -> Result<DetectionResult, StaterecError> {
    if s.dim() != p.dim() {
        return Err(StaterecError::DimensionMismatch {
            expected: p.dim(),
            got: s.dim(),
        });
    }
    let scores: Vec<f64> = s.features().iter().map(|f| p.score(f)).collect();
    let labels: Vec<u8> = scores.iter().map(|&v| u8::from(v > 0.5)).collect();
    let detected_frame = labels.iter().position(|&l| l == 1);
    Ok(DetectionResult {
        detected_time: detected_frame.map(|i| s.timestamps()[i]),
        detected_frame,
        scores,
        labels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    /// Detected minus annotated time, seconds.
    Difference(f64),
    Miss,
}

impl Evaluation {
    pub fn abs_error(&self) -> f64 {
        match self {
            Evaluation::Difference(d) => d.abs(),
            Evaluation::Miss => f64::INFINITY,
        }
    }
}

pub fn evaluate(p: &LinearProbe, a: &AnnotatedSeries) -> Result<Evaluation, StaterecError> {
    let r = detect_change(p, &a.series)?;
    Ok(match r.detected_time {
        Some(t) => Evaluation::Difference(t - a.annotation),
        None => Evaluation::Miss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::staterec::synthesize_series;

    #[test]
    fn one_class_rejected() {
        let s = FeatureSeries::new(vec![0.0, 0.1, 0.2], vec![vec![1.0]; 3]).unwrap();
        let a = AnnotatedSeries::new(s, 0.0).unwrap();
        assert_eq!(
            train_probe(&[a], &TrainConfig::default()),
            Err(StaterecError::OneClass(1))
        );
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = synthesize_series(4, 20, 10, 3.0, 1).unwrap();
        let b = synthesize_series(5, 20, 10, 3.0, 1).unwrap();
        assert!(matches!(
            train_probe(&[a.clone(), b.clone()], &TrainConfig::default()),
            Err(StaterecError::DimensionMismatch { .. })
        ));
        let p = train_probe(&[a], &TrainConfig::default()).unwrap();
        assert!(detect_change(&p, &b.series).is_err());
    }

    #[test]
    fn probe_text_round_trip() {
        let a = synthesize_series(3, 40, 20, 4.0, 9).unwrap();
        let p = train_probe(&[a], &TrainConfig::default()).unwrap();
        assert_eq!(LinearProbe::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn all_pre_series_has_no_detection() {
        let a = synthesize_series(8, 200, 100, 6.0, 3).unwrap();
        let p = train_probe(&[a], &TrainConfig::default()).unwrap();
        // a probe that never fires on a constant pre-change mean frame
        let pre = FeatureSeries::new(vec![0.0, 0.1, 0.2], vec![vec![0.0; 8]; 3]).unwrap();
        let r = detect_change(&p, &pre).unwrap();
        assert_eq!(r.detected_time, None);
        assert_eq!(r.labels, [0, 0, 0]);
    }

    #[test]
    fn first_positive_frame_is_the_detection() {
        let p = LinearProbe {
            mean: vec![0.0],
            scale: vec![1.0],
            weights: vec![1.0],
            bias: 0.0,
            config: TrainConfig::default(),
            epochs: 0,
        };
        let s = FeatureSeries::new(
            vec![0.0, 0.1, 0.2, 0.3],
            vec![vec![-1.0], vec![2.0], vec![-3.0], vec![4.0]],
        )
        .unwrap();
        let r = detect_change(&p, &s).unwrap();
        assert_eq!(r.detected_frame, Some(1));
        assert_eq!(r.detected_time, Some(0.1));
        let a = AnnotatedSeries::new(s, 0.1).unwrap();
        assert_eq!(evaluate(&p, &a).unwrap(), Evaluation::Difference(0.0));
    }
}
