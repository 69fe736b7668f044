//! Simultaneous confidence bands and their monotonization.
//!
//! A band `[lower, upper]` built as `center -/+ critical * stderr` is
//! monotonized by applying the same operator to each end-point function
//! separately. Rearrangement, isotonization and their convex blends are all
//! order preserving, so the result is a valid band, and all of them are
//! distance reducing, so it is no longer in any `L^p` length.

use crate::error::{Error, Result};
use crate::grid::{lp_distance, GriddedFunction, LpIndex};
use crate::isotonic::{blend, isotonize_average};
use crate::rearrange::{rearrange_average, OrderingSet};
use crate::scalar::{le_tol, Scalar};
use std::fmt;
use std::str::FromStr;

/// Standard errors below this are treated as zero by the max-t statistic.
pub const DEGENERATE_STDERR: f64 = 1e-12;

/// A monotonization operator on gridded functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Monotonizer {
    Rearrange,
    Isotonize,
    /// `lambda * rearranged + (1 - lambda) * isotonized`.
    Blend(f64),
}

impl Monotonizer {
    pub fn apply<T: Scalar>(
        &self,
        f: &GriddedFunction<T>,
        orderings: &OrderingSet,
    ) -> Result<GriddedFunction<T>> {
        match *self {
            Monotonizer::Rearrange => rearrange_average(f, orderings),
            Monotonizer::Isotonize => isotonize_average(f, orderings),
            Monotonizer::Blend(lambda) => {
                let l = T::of(lambda);
                if !(0.0..=1.0).contains(&lambda) {
                    return Err(Error::LambdaOutOfRange(lambda));
                }
                let r = rearrange_average(f, orderings)?;
                let i = isotonize_average(f, orderings)?;
                blend(&r, &i, l)
            }
        }
    }

    /// Short label used in reports: `R`, `I` or `blend(0.5)`.
    pub fn label(&self) -> String {
        match self {
            Monotonizer::Rearrange => "R".into(),
            Monotonizer::Isotonize => "I".into(),
            Monotonizer::Blend(l) => format!("blend({l})"),
        }
    }
}

impl fmt::Display for Monotonizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Monotonizer::Rearrange => f.write_str("rearrange"),
            Monotonizer::Isotonize => f.write_str("isotonize"),
            Monotonizer::Blend(l) => write!(f, "blend:{l}"),
        }
    }
}

impl FromStr for Monotonizer {
    type Err = Error;

    /// `rearrange`, `isotonize`, `blend` (lambda 0.5) or `blend:<lambda>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rearrange" => Ok(Monotonizer::Rearrange),
            "isotonize" => Ok(Monotonizer::Isotonize),
            "blend" => Ok(Monotonizer::Blend(0.5)),
            other => {
                let lambda = other
                    .strip_prefix("blend:")
                    .and_then(|l| l.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown method {other:?}")))?;
                if !(0.0..=1.0).contains(&lambda) {
                    return Err(Error::LambdaOutOfRange(lambda));
                }
                Ok(Monotonizer::Blend(lambda))
            }
        }
    }
}

/// Lower and upper end-point functions on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Band<T> {
    lower: GriddedFunction<T>,
    upper: GriddedFunction<T>,
}

fn diameter<T: Scalar>(fs: &[&GriddedFunction<T>]) -> T {
    let lo = fs.iter().map(|f| f.min_value()).fold(T::infinity(), T::min);
    let hi = fs.iter().map(|f| f.max_value()).fold(T::neg_infinity(), T::max);
    hi - lo
}

impl<T: Scalar> Band<T> {
    pub fn new(lower: GriddedFunction<T>, upper: GriddedFunction<T>) -> Result<Self> {
        lower.check_grid(&upper)?;
        let scale = diameter(&[&lower, &upper]);
        if let Some(index) = lower
            .values()
            .iter()
            .zip(upper.values())
            .position(|(&l, &u)| !le_tol(l, u, scale))
        {
            return Err(Error::CrossedBand { index });
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &GriddedFunction<T> {
        &self.lower
    }

    pub fn upper(&self) -> &GriddedFunction<T> {
        &self.upper
    }

    pub fn into_parts(self) -> (GriddedFunction<T>, GriddedFunction<T>) {
        (self.lower, self.upper)
    }
}

/// Point estimate, standard errors and critical value of a band
/// `center -/+ critical * stderr`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRecipe<T> {
    pub center: GriddedFunction<T>,
    pub stderr: GriddedFunction<T>,
    pub critical: T,
    pub alpha: T,
}

pub fn assemble_band<T: Scalar>(r: &BandRecipe<T>) -> Result<Band<T>> {
    r.center.check_grid(&r.stderr)?;
    if let Some(index) = r.stderr.values().iter().position(|&s| s < T::zero()) {
        return Err(Error::NegativeStderr { index });
    }
    if !(r.critical >= T::zero()) || !r.critical.is_finite() {
        return Err(Error::OutOfRange {
            what: "critical",
            value: r.critical.to_f64().unwrap_or(f64::NAN),
        });
    }
    let c = r.critical;
    let lower = r.center.zip_with(&r.stderr, |f, s| f - c * s)?;
    let upper = r.center.zip_with(&r.stderr, |f, s| f + c * s)?;
    Band::new(lower, upper)
}

/// Bootstrap max-t critical value together with the nodes left out of the
/// maximum because their standard error is numerically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValue<T> {
    pub value: T,
    pub degenerate_nodes: Vec<usize>,
}

/// Zero-based position of the empirical `level` quantile among `n` sorted
/// statistics: the order statistic `ceil(level * n)`, clamped to `1..=n`.
pub fn order_statistic_index(level: f64, n: usize) -> usize {
    let k = (level * n as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(n) - 1
}

/// `(1 - alpha)` empirical quantile over draws of
/// `max_x |draw(x) - center(x)| / stderr(x)`.
pub fn critical_value_max_t<T: Scalar>(
    center: &GriddedFunction<T>,
    draws: &[GriddedFunction<T>],
    stderr: &GriddedFunction<T>,
    alpha: T,
) -> Result<CriticalValue<T>> {
    if draws.len() < 2 {
        return Err(Error::TooFewDraws {
            min: 2,
            got: draws.len(),
        });
    }
    let a = alpha.to_f64().unwrap_or(f64::NAN);
    if !(0.0..1.0).contains(&a) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: a,
        });
    }
    center.check_grid(stderr)?;
    for d in draws {
        center.check_grid(d)?;
    }
    let tiny = T::of(DEGENERATE_STDERR);
    let degenerate_nodes: Vec<usize> = stderr
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < tiny)
        .map(|(i, _)| i)
        .collect();
    if degenerate_nodes.len() == stderr.len() {
        return Err(Error::AllNodesDegenerate);
    }
    let mut stats: Vec<T> = draws
        .iter()
        .map(|d| max_t(d.values(), center.values(), stderr.values()))
        .collect();
    stats.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    let value = stats[order_statistic_index(1.0 - a, stats.len())];
    Ok(CriticalValue {
        value,
        degenerate_nodes,
    })
}

/// `max_x |f(x) - g(x)| / s(x)` over nodes with non-degenerate `s`.
pub fn max_t<T: Scalar>(f: &[T], g: &[T], s: &[T]) -> T {
    let tiny = T::of(DEGENERATE_STDERR);
    f.iter()
        .zip(g)
        .zip(s)
        .filter(|(_, &s)| s >= tiny)
        .map(|((&a, &b), &s)| (a - b).abs() / s)
        .fold(T::zero(), T::max)
}

/// Applies `method` to both end-point functions.
pub fn monotonize_band<T: Scalar>(
    b: &Band<T>,
    method: Monotonizer,
    orderings: &OrderingSet,
) -> Result<Band<T>> {
    let lower = method.apply(&b.lower, orderings)?;
    let upper = method.apply(&b.upper, orderings)?;
    Band::new(lower, upper)
}

/// Whether `lower <= f <= upper` at every node.
pub fn covers<T: Scalar>(b: &Band<T>, f: &GriddedFunction<T>) -> Result<bool> {
    b.lower.check_grid(f)?;
    let scale = diameter(&[&b.lower, &b.upper, f]);
    Ok(b
        .lower
        .values()
        .iter()
        .zip(b.upper.values())
        .zip(f.values())
        .all(|((&l, &u), &v)| le_tol(l, v, scale) && le_tol(v, u, scale)))
}

/// `L^p` length of a band: the distance between its end-points.
pub fn lp_length<T: Scalar>(b: &Band<T>, p: LpIndex) -> Result<T> {
    lp_distance(&b.lower, &b.upper, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(v: &[f64]) -> GriddedFunction<f64> {
        GriddedFunction::on_unit_interval(v.to_vec()).unwrap()
    }

    fn crossing_band() -> Band<f64> {
        Band::new(g(&[1.0, 0.0]), g(&[2.0, 3.0])).unwrap()
    }

    #[test]
    fn assemble_examples() {
        let r = BandRecipe {
            center: g(&[0.0, 0.0]),
            stderr: g(&[1.0, 1.0]),
            critical: 1.64,
            alpha: 0.1,
        };
        let b = assemble_band(&r).unwrap();
        assert_eq!(b.lower().values(), &[-1.64, -1.64]);
        assert_eq!(b.upper().values(), &[1.64, 1.64]);

        let b0 = assemble_band(&BandRecipe { critical: 0.0, ..r.clone() }).unwrap();
        assert_eq!(b0.lower(), &r.center);
        assert_eq!(b0.upper(), &r.center);

        let bad = BandRecipe {
            stderr: g(&[1.0, -0.1]),
            ..r
        };
        assert!(matches!(assemble_band(&bad), Err(Error::NegativeStderr { index: 1 })));
    }

    #[test]
    fn band_rejects_crossing() {
        assert!(matches!(
            Band::new(g(&[1.0, 2.0]), g(&[0.0, 3.0])),
            Err(Error::CrossedBand { index: 0 })
        ));
    }

    #[test]
    fn lengths() {
        let b = crossing_band();
        assert!((lp_length(&b, LpIndex::Finite(2.0)).unwrap() - 5f64.sqrt()).abs() < 1e-12);
        assert!((lp_length(&b, LpIndex::Finite(1.0)).unwrap() - 2.0).abs() < 1e-12);
        let flat = Band::new(g(&[1.0, 2.0]), g(&[1.0, 2.0])).unwrap();
        assert_eq!(lp_length(&flat, LpIndex::Finite(3.0)).unwrap(), 0.0);
    }

    #[test]
    fn critical_value_examples() {
        let center = GriddedFunction::from_coords(vec![vec![0.0]], vec![0.0]).unwrap();
        let s = center.with_values(vec![1.0]).unwrap();
        let draws: Vec<_> = [1.0, -2.0, 3.0, -4.0]
            .iter()
            .map(|&d| center.with_values(vec![d]).unwrap())
            .collect();
        assert_eq!(critical_value_max_t(&center, &draws, &s, 0.25).unwrap().value, 3.0);
        assert_eq!(critical_value_max_t(&center, &draws, &s, 0.0).unwrap().value, 4.0);
        let same = vec![center.clone(); 3];
        assert_eq!(critical_value_max_t(&center, &same, &s, 0.1).unwrap().value, 0.0);
        assert!(matches!(
            critical_value_max_t(&center, &draws[..1], &s, 0.1),
            Err(Error::TooFewDraws { .. })
        ));
        let zero = center.with_values(vec![0.0]).unwrap();
        assert!(matches!(
            critical_value_max_t(&center, &draws, &zero, 0.1),
            Err(Error::AllNodesDegenerate)
        ));
    }

    #[test]
    fn degenerate_nodes_are_skipped() {
        let center = g(&[0.0, 0.0]);
        let s = g(&[1.0, 0.0]);
        let draws = vec![g(&[1.0, 5.0]), g(&[2.0, 7.0])];
        let cv = critical_value_max_t(&center, &draws, &s, 0.0).unwrap();
        assert_eq!(cv.value, 2.0);
        assert_eq!(cv.degenerate_nodes, vec![1]);
    }

    #[test]
    fn rearranged_band_fixture() {
        let b = crossing_band();
        let one = OrderingSet::all(1);
        let r = monotonize_band(&b, Monotonizer::Rearrange, &one).unwrap();
        assert_eq!(r.lower().values(), &[0.0, 1.0]);
        assert_eq!(r.upper().values(), &[2.0, 3.0]);
        assert!((lp_length(&r, LpIndex::Finite(2.0)).unwrap() - 2.0).abs() < 1e-12);
        assert!((lp_length(&r, LpIndex::Finite(1.0)).unwrap() - 2.0).abs() < 1e-12);

        let truth = g(&[0.5, 2.5]);
        assert!(!covers(&b, &truth).unwrap());
        assert!(covers(&r, &truth).unwrap());
    }

    #[test]
    fn monotone_band_unchanged() {
        let b = Band::new(g(&[0.0, 1.0]), g(&[2.0, 3.0])).unwrap();
        for m in [Monotonizer::Rearrange, Monotonizer::Isotonize, Monotonizer::Blend(0.3)] {
            assert_eq!(monotonize_band(&b, m, &OrderingSet::all(1)).unwrap(), b);
        }
    }

    #[test]
    fn covers_examples() {
        let r = BandRecipe {
            center: g(&[1.0, 2.0, 3.0]),
            stderr: g(&[0.5, 0.5, 0.5]),
            critical: 2.0,
            alpha: 0.1,
        };
        let b = assemble_band(&r).unwrap();
        assert!(covers(&b, &r.center).unwrap());
        let out = g(&[1.0, 4.0, 3.0]);
        assert!(!covers(&b, &out).unwrap());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("rearrange".parse::<Monotonizer>().unwrap(), Monotonizer::Rearrange);
        assert_eq!("blend".parse::<Monotonizer>().unwrap(), Monotonizer::Blend(0.5));
        assert_eq!("blend:0.25".parse::<Monotonizer>().unwrap(), Monotonizer::Blend(0.25));
        assert!("blend:2".parse::<Monotonizer>().is_err());
        assert!("sort".parse::<Monotonizer>().is_err());
    }

    #[test]
    fn order_statistic_rule() {
        assert_eq!(order_statistic_index(0.75, 4), 2);
        assert_eq!(order_statistic_index(1.0, 4), 3);
        assert_eq!(order_statistic_index(0.9, 100), 89);
        assert_eq!(order_statistic_index(0.0, 5), 0);
    }
}
