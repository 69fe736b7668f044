//! Nonparametric conditional mean and quantile estimators evaluated on a grid.
//!
//! Local methods (box-kernel and local linear) fit at every evaluation node
//! using the observations within one bandwidth of it. Series methods
//! (cubic B-splines and a trigonometric basis) fit one global coefficient
//! vector. Mean fits are (weighted) least squares; quantile fits minimize the
//! check loss, exactly for the kernel method and through the smoothed solver
//! in [`check_loss`] otherwise.

pub mod basis;
pub mod bootstrap;
pub mod check_loss;
pub mod linalg;

pub use bootstrap::{bootstrap, BootstrapResult};

use crate::error::{Error, Result};
use crate::grid::{Axis, GriddedFunction};
use basis::{BSplineBasis, FourierBasis};
use check_loss::{default_kappa, fit_check_loss};
use linalg::{least_squares, weighted_least_squares};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Paired observations `(x_i, y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyInput);
        }
        if x.len() != y.len() {
            return Err(Error::ShapeMismatch {
                expected: x.len(),
                actual: y.len(),
            });
        }
        if let Some(index) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x_range(&self) -> (f64, f64) {
        let lo = self.x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Resample by index.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            x: idx.iter().map(|&i| self.x[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "tau")]
pub enum Loss {
    /// Square loss: conditional mean.
    Mean,
    /// Check loss at quantile index `tau` in `(0, 1)`.
    Quantile(f64),
}

impl Loss {
    pub fn quantile(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau < 1.0 {
            Ok(Loss::Quantile(tau))
        } else {
            Err(Error::OutOfRange { what: "tau", value: tau })
        }
    }
}

fn default_true() -> bool {
    true
}

/// Estimation method with its tuning parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    /// Box kernel `K(u) = 1{|u| <= 1}`; bandwidth in the units of `x`.
    Kernel { bandwidth: f64 },
    /// Local linear with the box kernel.
    #[serde(rename = "loclinear")]
    LocalLinear { bandwidth: f64 },
    /// Cubic regression splines with the given interior knots.
    #[serde(rename = "bspline")]
    BSpline { knots: Vec<f64> },
    /// `n_terms` sine/cosine pairs, plus an intercept and optionally a linear term.
    Fourier {
        n_terms: usize,
        #[serde(default = "default_true")]
        linear_term: bool,
    },
}

impl Method {
    /// Short name: `kernel`, `loclinear`, `bspline` or `fourier`.
    pub fn name(&self) -> &'static str {
        match self {
            Method::Kernel { .. } => "kernel",
            Method::LocalLinear { .. } => "loclinear",
            Method::BSpline { .. } => "bspline",
            Method::Fourier { .. } => "fourier",
        }
    }

    /// Defaults matching the growth-chart configuration, with ages in years.
    pub fn growth_chart_defaults() -> Vec<Method> {
        vec![
            Method::Kernel { bandwidth: 1.0 },
            Method::LocalLinear { bandwidth: 1.0 },
            Method::BSpline {
                knots: vec![3.0, 5.0, 8.0, 10.0, 11.5, 13.0, 14.5, 16.0, 18.0],
            },
            Method::Fourier {
                n_terms: 4,
                linear_term: true,
            },
        ]
    }
}

/// Everything needed to produce a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    pub method: Method,
    pub loss: Loss,
    pub eval_axis: Axis<f64>,
}

impl EstimatorSpec {
    pub fn new(method: Method, loss: Loss, eval_axis: Axis<f64>) -> Result<Self> {
        let spec = Self {
            method,
            loss,
            eval_axis,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if let Loss::Quantile(tau) = self.loss {
            Loss::quantile(tau)?;
        }
        match &self.method {
            Method::Kernel { bandwidth } | Method::LocalLinear { bandwidth } => {
                if !(*bandwidth > 0.0 && bandwidth.is_finite()) {
                    return Err(Error::InvalidSpec(format!("bandwidth {bandwidth} must be positive")));
                }
            }
            Method::BSpline { knots } => {
                self.bspline(knots)?;
            }
            Method::Fourier { .. } => {}
        }
        Ok(())
    }

    pub fn with_loss(&self, loss: Loss) -> Self {
        Self {
            loss,
            ..self.clone()
        }
    }

    fn domain(&self) -> (f64, f64) {
        (self.eval_axis.lo(), self.eval_axis.hi())
    }

    fn bspline(&self, knots: &[f64]) -> Result<BSplineBasis> {
        let (lo, hi) = self.domain();
        BSplineBasis::new(knots, lo, hi)
    }
}

/// Fitted values on the evaluation axis, plus the coefficients of series fits.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub estimate: GriddedFunction<f64>,
    pub coefficients: Vec<f64>,
}

/// Series basis vector at `x`. The basis lives on the span of the
/// evaluation axis.
pub fn basis_eval(spec: &EstimatorSpec, x: f64) -> Result<Vec<f64>> {
    let (lo, hi) = spec.domain();
    match &spec.method {
        Method::BSpline { knots } => spec.bspline(knots)?.eval(x),
        Method::Fourier {
            n_terms,
            linear_term,
        } => FourierBasis::new(*n_terms, *linear_term, lo, hi)?.eval(x),
        m => Err(Error::InvalidSpec(format!("{} has no series basis", m.name()))),
    }
}

pub fn fit(data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
    spec.validate()?;
    match &spec.method {
        Method::Kernel { bandwidth } => fit_local(data, spec, *bandwidth, false),
        Method::LocalLinear { bandwidth } => fit_local(data, spec, *bandwidth, true),
        Method::BSpline { .. } | Method::Fourier { .. } => fit_series(data, spec),
    }
}

fn fit_series(data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
    let (lo, hi) = spec.domain();
    let eval = |x: f64| -> Result<Vec<f64>> {
        match &spec.method {
            Method::BSpline { knots } => spec.bspline(knots)?.eval(x),
            Method::Fourier {
                n_terms,
                linear_term,
            } => FourierBasis::new(*n_terms, *linear_term, lo, hi)?.eval(x),
            _ => unreachable!("series methods only"),
        }
    };
    let rows = data.x.iter().map(|&x| eval(x)).collect::<Result<Vec<_>>>()?;
    let k = rows[0].len();
    let design = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
    let coef = match spec.loss {
        Loss::Mean => least_squares(&design, &data.y)?,
        Loss::Quantile(tau) => {
            let w = vec![1.0; data.len()];
            fit_check_loss(&design, &data.y, &w, tau, default_kappa(&data.y))?.coefficients
        }
    };
    let values = spec
        .eval_axis
        .coords()
        .iter()
        .map(|&x| {
            let z = eval(x)?;
            Ok(z.iter().zip(coef.iter()).map(|(a, b)| a * b).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FitResult {
        estimate: GriddedFunction::new(vec![spec.eval_axis.clone()], values)?,
        coefficients: coef.iter().copied().collect(),
    })
}

/// Observations sorted by `x`, for window lookups.
struct SortedData {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SortedData {
    fn new(data: &Dataset) -> Self {
        let mut idx: Vec<usize> = (0..data.len()).collect();
        idx.sort_by(|&a, &b| data.x[a].partial_cmp(&data.x[b]).expect("finite"));
        Self {
            x: idx.iter().map(|&i| data.x[i]).collect(),
            y: idx.iter().map(|&i| data.y[i]).collect(),
        }
    }

    /// Index range of observations with `|x_i - x0| <= h`.
    fn window(&self, x0: f64, h: f64) -> std::ops::Range<usize> {
        let start = self.x.partition_point(|&x| x < x0 - h);
        let end = self.x.partition_point(|&x| x <= x0 + h);
        start..end.max(start)
    }
}

fn fit_local(data: &Dataset, spec: &EstimatorSpec, h: f64, linear: bool) -> Result<FitResult> {
    let sorted = SortedData::new(data);
    let kappa = default_kappa(&data.y);
    let values = spec
        .eval_axis
        .coords()
        .iter()
        .map(|&x0| {
            let win = sorted.window(x0, h);
            let xs = &sorted.x[win.clone()];
            let ys = &sorted.y[win];
            if xs.is_empty() {
                return Err(Error::EmptyWindow { x: x0 });
            }
            if linear {
                if xs[0] == xs[xs.len() - 1] {
                    return Err(Error::EmptyWindow { x: x0 });
                }
                local_linear_at(xs, ys, x0, spec.loss, kappa)
            } else {
                Ok(match spec.loss {
                    Loss::Mean => ys.iter().sum::<f64>() / ys.len() as f64,
                    Loss::Quantile(tau) => weighted_quantile(ys, &vec![1.0; ys.len()], tau),
                })
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FitResult {
        estimate: GriddedFunction::new(vec![spec.eval_axis.clone()], values)?,
        coefficients: Vec::new(),
    })
}

fn local_linear_at(xs: &[f64], ys: &[f64], x0: f64, loss: Loss, kappa: f64) -> Result<f64> {
    let design = DMatrix::from_fn(xs.len(), 2, |i, j| if j == 0 { 1.0 } else { xs[i] - x0 });
    let w = vec![1.0; xs.len()];
    let coef = match loss {
        Loss::Mean => weighted_least_squares(&design, ys, &w)?,
        Loss::Quantile(tau) => fit_check_loss(&design, ys, &w, tau, kappa)?.coefficients,
    };
    // the slope coef[1] is not used
    Ok(coef[0])
}

/// Smallest `y` whose cumulative weight reaches `tau` of the total; this
/// minimizes the weighted check loss.
pub fn weighted_quantile(y: &[f64], w: &[f64], tau: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = y.iter().copied().zip(w.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    let total: f64 = w.iter().sum();
    let target = tau * total;
    let mut acc = 0.0;
    for &(v, wi) in &pairs {
        acc += wi;
        if acc >= target * (1.0 - 1e-12) {
            return v;
        }
    }
    pairs[pairs.len() - 1].0
}

/// Fits every quantile index in `taus` and stacks the curves into a
/// two-dimensional function with the quantile index on the first axis.
pub fn fit_quantile_process(
    data: &Dataset,
    spec: &EstimatorSpec,
    taus: &[f64],
) -> Result<GriddedFunction<f64>> {
    let tau_axis = Axis::new(taus.to_vec())?;
    for &t in taus {
        Loss::quantile(t)?;
    }
    let curves = taus
        .par_iter()
        .map(|&tau| fit(data, &spec.with_loss(Loss::Quantile(tau))).map(|r| r.estimate.into_values()))
        .collect::<Result<Vec<_>>>()?;
    GriddedFunction::new(
        vec![tau_axis, spec.eval_axis.clone()],
        curves.into_iter().flatten().collect(),
    )
}

/// Equidistant quantile indices `lo, lo + step, ..., hi`.
pub fn tau_net(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(lo <= hi) {
        return Err(Error::InvalidSpec(format!("bad quantile net {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    // snap to 12 decimals so that 0.05 + 2 * 0.05 is 0.15
    Ok((0..n)
        .map(|i| ((lo + step * i as f64) * 1e12).round() / 1e12)
        .collect())
}
