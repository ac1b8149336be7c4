use serde::{Deserialize, Serialize};

use super::report::{ResultRow, ValueKind};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fraction of points dropped from each end of a curve before fitting, so a
/// regime switch at the edge of the grid does not bend the slope.
pub const TRIM_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveAxis {
    Distance,
    CatalogSize,
    NodeCount,
}

/// Delay as a function of one growing parameter.
#[derive(Clone, Debug, Serialize)]
pub struct DelayCurve<F> {
    axis: CurveAxis,
    points: Vec<(F, F)>,
}

impl<F: Real> DelayCurve<F> {
    /// Requires strictly increasing positive `x` and `delay >= 1`.
    pub fn new(axis: CurveAxis, points: Vec<(F, F)>) -> Result<Self> {
        if points.iter().any(|&(x, _)| !(x > F::zero())) {
            return Err(Error::invalid("curve abscissae must be positive"));
        }
        if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::invalid(
                "curve abscissae must be strictly increasing",
            ));
        }
        if let Some(&(x, y)) = points.iter().find(|&&(_, y)| !(y >= F::one())) {
            return Err(Error::invalid(format!(
                "delay {y} at x={x} is below one hop"
            )));
        }
        Ok(DelayCurve { axis, points })
    }

    pub fn axis(&self) -> CurveAxis {
        self.axis
    }

    pub fn points(&self) -> &[(F, F)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// One CSV row per point; distance curves fill the `d` column.
    pub fn rows(&self, template: &ResultRow, kind: ValueKind) -> Vec<ResultRow> {
        self.points
            .iter()
            .map(|&(x, y)| {
                let mut row = template.clone();
                match self.axis {
                    CurveAxis::Distance => row.d = Some(x.as_f64()),
                    CurveAxis::CatalogSize => row.content_count = x.as_f64() as usize,
                    CurveAxis::NodeCount => row.n = Some(x.as_f64() as usize),
                }
                row.value = y.as_f64();
                row.kind = kind;
                row
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Least-squares slope of `log(delay)` against `log(x)` over the middle of
/// the curve: `round(0.1 * len)` points are dropped at each end.
pub fn fit_scaling_exponent<F: Real>(curve: &DelayCurve<F>) -> Result<ScalingFit> {
    let n = curve.len();
    if n < 4 {
        return Err(Error::invalid(format!(
            "scaling fit needs at least 4 points, got {n}"
        )));
    }
    let trim = (TRIM_FRACTION * n as f64).round() as usize;
    let kept = &curve.points()[trim..n - trim];
    let (xs, ys): (Vec<f64>, Vec<f64>) = kept
        .iter()
        .map(|&(x, y)| (x.as_f64().ln(), y.as_f64().ln()))
        .unzip();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        points_used: xs.len(),
    })
}
