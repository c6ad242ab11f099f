use serde::Serialize;

use crate::error::{Error, Result};

/// Points with a smaller effective sample size are not fitted.
pub const MIN_FIT_ESS: f64 = 200.0;
const MIN_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayPoint {
    pub distance: f64,
    pub value: f64,
    pub std_error: f64,
    pub ess: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    Exponential,
    Power,
}

/// `log c ≈ intercept − param·x` with `x = r` (exponential) or `x = log r` (power).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModelFit {
    pub model: DecayModel,
    /// Decay rate for the exponential model, exponent for the power model.
    pub param: f64,
    pub intercept: f64,
    /// Weighted root-mean-square residual on the log scale.
    pub residual: f64,
}

/// `c(r) ≥ 1/(8r)` at one fitted distance; reported only.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FloorCheck {
    pub distance: f64,
    pub value: f64,
    pub floor: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub points: Vec<DecayPoint>,
    /// Distances left out: nonpositive values or too few effective samples.
    pub excluded: Vec<f64>,
    pub exponential: ModelFit,
    pub power: ModelFit,
    pub selected: DecayModel,
    pub floor: Vec<FloorCheck>,
}

impl DecayFit {
    pub fn selected_fit(&self) -> &ModelFit {
        match self.selected {
            DecayModel::Exponential => &self.exponential,
            DecayModel::Power => &self.power,
        }
    }
}

fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64, f64) {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| b * (a - mx) * (c - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (c - intercept - slope * a).powi(2))
        .sum();
    (slope, intercept, (ssr / sw).sqrt())
}

/// Least-squares fits of `log c` against `r` and against `log r`, weighted by
/// `(c/σ)²`; exact inputs (zero error) get equal weights.
pub fn decay_fit(points: &[DecayPoint]) -> Result<DecayFit> {
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    for p in points {
        if p.value > 0.0 && p.distance > 0.0 && p.ess >= MIN_FIT_ESS && p.value.is_finite() {
            used.push(*p);
        } else {
            excluded.push(p.distance);
        }
    }
    if used.len() < MIN_POINTS {
        return Err(Error::Validation(format!(
            "decay fit needs {MIN_POINTS} usable distances, got {}",
            used.len()
        )));
    }
    let exact = used.iter().all(|p| p.std_error == 0.0);
    let w: Vec<f64> = used
        .iter()
        .map(|p| if exact { 1.0 } else { (p.value / p.std_error.max(1e-300)).powi(2) })
        .collect();
    let y: Vec<f64> = used.iter().map(|p| p.value.ln()).collect();
    let r: Vec<f64> = used.iter().map(|p| p.distance).collect();
    let lr: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let (s1, i1, e1) = weighted_line(&r, &y, &w);
    let (s2, i2, e2) = weighted_line(&lr, &y, &w);
    let exponential = ModelFit {
        model: DecayModel::Exponential,
        param: -s1,
        intercept: i1,
        residual: e1,
    };
    let power = ModelFit {
        model: DecayModel::Power,
        param: -s2,
        intercept: i2,
        residual: e2,
    };
    let selected = if e2 < e1 { DecayModel::Power } else { DecayModel::Exponential };
    let floor = if selected == DecayModel::Power {
        used.iter()
            .map(|p| {
                let floor = 1.0 / (8.0 * p.distance);
                FloorCheck {
                    distance: p.distance,
                    value: p.value,
                    floor,
                    holds: p.value >= floor,
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(DecayFit {
        points: used,
        excluded,
        exponential,
        power,
        selected,
        floor,
    })
}
