//! Increasing rearrangement of gridded functions.
//!
//! On an equal-measure grid the increasing rearrangement of a univariate
//! function is its sorted vector of values. The multivariate version applies
//! the univariate operator fiber by fiber along each axis in the order given by
//! an [`Ordering`], and the average rearrangement takes the pointwise mean over
//! a set of orderings.

use crate::error::{Error, Result};
use crate::grid::{for_each_fiber, GriddedFunction};
use crate::scalar::{Scalar, VALUE_TOL};
use std::cmp::Ordering as CmpOrdering;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Increasing,
    Decreasing,
}

fn total_cmp<T: Scalar>(a: &T, b: &T) -> CmpOrdering {
    a.partial_cmp(b).unwrap_or(CmpOrdering::Equal)
}

/// Sorts a fiber in place (stable).
pub(crate) fn sort_fiber<T: Scalar>(values: &mut [T]) {
    values.sort_by(total_cmp);
}

/// Rearrangement of a univariate step function with equal steps.
pub fn rearrange_1d<T: Scalar>(values: &[T], direction: Direction) -> Result<Vec<T>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    let mut out = values.to_vec();
    match direction {
        Direction::Increasing => out.sort_by(total_cmp),
        Direction::Decreasing => out.sort_by(|a, b| total_cmp(b, a)),
    }
    Ok(out)
}

/// Evaluates `f*(x) = inf { y : |{u : f(u) <= y}| >= x }` literally for a
/// step function with equal steps, scanning the distinct levels of `f`.
///
/// This never sorts the values as a whole; it exists to check
/// [`rearrange_1d`] against the quantile definition.
pub fn rearrange_quantile_oracle<T: Scalar>(values: &[T], x: T) -> Result<T> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(x > T::zero() && x <= T::one()) {
        return Err(Error::OutOfRange {
            what: "x",
            value: x.to_f64().unwrap_or(f64::NAN),
        });
    }
    let n = values.len();
    let mut best: Option<T> = None;
    for &y in values {
        // measure of the sublevel set {f <= y}, counted in steps of 1/n
        let count = values.iter().filter(|&&v| v <= y).count();
        // count / n >= x, compared without dividing
        if T::of_usize(count) >= x * T::of_usize(n) - T::of(VALUE_TOL) {
            best = Some(match best {
                Some(b) if b <= y => b,
                _ => y,
            });
        }
    }
    best.ok_or(Error::EmptyInput)
}

/// A permutation of the axes `0..d`. The first entry is the outermost
/// operator, so the last axis listed is processed first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ordering(Vec<usize>);

impl Ordering {
    /// From zero-based axis indices.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let d = perm.len();
        if d == 0 {
            return Err(Error::InvalidOrdering("empty permutation".into()));
        }
        let mut seen = vec![false; d];
        for &j in &perm {
            if j >= d || seen[j] {
                return Err(Error::InvalidOrdering(format!(
                    "{perm:?} is not a permutation of 0..{d}"
                )));
            }
            seen[j] = true;
        }
        Ok(Self(perm))
    }

    /// From one-based axis numbers, as written on the command line.
    pub fn from_one_based(perm: &[usize]) -> Result<Self> {
        if perm.contains(&0) {
            return Err(Error::InvalidOrdering("axis numbers start at 1".into()));
        }
        Self::new(perm.iter().map(|j| j - 1).collect())
    }

    pub fn identity(d: usize) -> Self {
        Self((0..d).collect())
    }

    pub fn axes(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Axes in the order the fiber operators are applied.
    pub fn application_order(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().rev().copied()
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|j| (j + 1).to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Non-empty set of distinct orderings of the same dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderingSet(Vec<Ordering>);

impl OrderingSet {
    pub fn new(orderings: Vec<Ordering>) -> Result<Self> {
        if orderings.is_empty() {
            return Err(Error::EmptyOrderingSet);
        }
        let d = orderings[0].dim();
        for (i, o) in orderings.iter().enumerate() {
            if o.dim() != d {
                return Err(Error::InvalidOrdering("orderings of mixed dimension".into()));
            }
            if orderings[..i].contains(o) {
                return Err(Error::InvalidOrdering(format!("duplicate ordering {o}")));
            }
        }
        Ok(Self(orderings))
    }

    pub fn single(o: Ordering) -> Self {
        Self(vec![o])
    }

    /// All `d!` orderings, lexicographic.
    pub fn all(d: usize) -> Self {
        let mut out = Vec::new();
        let mut perm: Vec<usize> = (0..d).collect();
        permutations(&mut perm, 0, &mut out);
        out.sort();
        Self(out.into_iter().map(Ordering).collect())
    }

    /// All orderings for `d <= 3`; larger dimensions need an explicit set.
    pub fn default_for(d: usize) -> Result<Self> {
        if d > 3 {
            return Err(Error::InvalidOrdering(format!(
                "{d} axes: pass the orderings explicitly"
            )));
        }
        Ok(Self::all(d))
    }

    pub fn orderings(&self) -> &[Ordering] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0[0].dim()
    }
}

fn permutations(perm: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == perm.len() {
        out.push(perm.clone());
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permutations(perm, k + 1, out);
        perm.swap(k, i);
    }
}

impl FromStr for OrderingSet {
    type Err = Error;

    /// Parses `1,2;2,1` (one-based axes, `;` between orderings).
    fn from_str(s: &str) -> Result<Self> {
        let orderings = s
            .split(';')
            .map(|part| {
                let axes = part
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::InvalidOrdering(format!("bad axis {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ordering::from_one_based(&axes)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(orderings)
    }
}

pub(crate) fn check_axis<T: Scalar>(f: &GriddedFunction<T>, axis: usize) -> Result<()> {
    if axis >= f.dim() {
        return Err(Error::AxisOutOfRange {
            axis,
            dim: f.dim(),
        });
    }
    if !f.axes()[axis].is_equidistant() {
        return Err(Error::NonEquidistantAxis { axis });
    }
    Ok(())
}

pub(crate) fn check_ordering<T: Scalar>(f: &GriddedFunction<T>, pi: &Ordering) -> Result<()> {
    if pi.dim() != f.dim() {
        return Err(Error::InvalidOrdering(format!(
            "ordering {pi} does not match a {}-dimensional grid",
            f.dim()
        )));
    }
    (0..f.dim()).try_for_each(|j| check_axis(f, j))
}

/// Applies a fiber operator along every axis in the application order of `pi`.
pub(crate) fn apply_sequential<T: Scalar>(
    f: &GriddedFunction<T>,
    pi: &Ordering,
    mut op: impl FnMut(&mut [T]),
) -> Result<GriddedFunction<T>> {
    check_ordering(f, pi)?;
    let shape = f.shape();
    let mut values = f.values().to_vec();
    for axis in pi.application_order() {
        for_each_fiber(&mut values, &shape, axis, &mut op);
    }
    Ok(f.replace_values(values))
}

/// Pointwise mean of per-ordering results.
pub(crate) fn average_over<T: Scalar>(
    f: &GriddedFunction<T>,
    orderings: &OrderingSet,
    mut per_ordering: impl FnMut(&Ordering) -> Result<GriddedFunction<T>>,
) -> Result<GriddedFunction<T>> {
    if orderings.dim() != f.dim() {
        return Err(Error::InvalidOrdering(format!(
            "orderings of dimension {} for a {}-dimensional grid",
            orderings.dim(),
            f.dim()
        )));
    }
    // mean as first + average deviation from it, exact when all results agree
    let mut iter = orderings.orderings().iter();
    let first = per_ordering(iter.next().expect("non-empty set"))?.into_values();
    let mut dev = vec![T::zero(); f.len()];
    for pi in iter {
        let g = per_ordering(pi)?;
        dev.iter_mut()
            .zip(g.values())
            .zip(&first)
            .for_each(|((d, &v), &a)| *d = *d + (v - a));
    }
    let k = T::of_usize(orderings.len());
    Ok(f.replace_values(first.iter().zip(dev).map(|(&a, d)| a + d / k).collect()))
}

/// Sorts every fiber along `axis` ascending, leaving the grid unchanged.
pub fn rearrange_axis<T: Scalar>(f: &GriddedFunction<T>, axis: usize) -> Result<GriddedFunction<T>> {
    check_axis(f, axis)?;
    let mut values = f.values().to_vec();
    for_each_fiber(&mut values, &f.shape(), axis, sort_fiber);
    Ok(f.replace_values(values))
}

/// The `pi`-rearrangement: the last axis of `pi` is sorted first, the first
/// axis last.
pub fn rearrange_pi<T: Scalar>(f: &GriddedFunction<T>, pi: &Ordering) -> Result<GriddedFunction<T>> {
    apply_sequential(f, pi, sort_fiber)
}

/// Average of the `pi`-rearrangements over `orderings`.
pub fn rearrange_average<T: Scalar>(
    f: &GriddedFunction<T>,
    orderings: &OrderingSet,
) -> Result<GriddedFunction<T>> {
    if orderings.len() == 1 {
        return rearrange_pi(f, &orderings.orderings()[0]);
    }
    average_over(f, orderings, |pi| rearrange_pi(f, pi))
}

/// Brute-force value of
/// `inf { |v - t'|^p + |v' - t|^p - |v - t|^p - |v' - t'|^p }`
/// over `v, v', t, t'` on a `resolution`-point lattice of `[lo, hi]` subject
/// to `v' >= v + epsilon` and `t' >= t + epsilon`.
///
/// This is the minimal strict gain per unit of mixed-up measure that the
/// rearrangement achieves for finite `p > 1`.
pub fn eta_p<T: Scalar>(lo: T, hi: T, epsilon: T, p: f64, resolution: usize) -> Result<T> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::OutOfRange { what: "p", value: p });
    }
    if resolution < 2 {
        return Err(Error::OutOfRange {
            what: "resolution",
            value: resolution as f64,
        });
    }
    if !(epsilon > T::zero()) {
        return Err(Error::OutOfRange {
            what: "epsilon",
            value: epsilon.to_f64().unwrap_or(f64::NAN),
        });
    }
    let width = hi - lo;
    let tol = T::of(VALUE_TOL) * width.abs().max(T::one());
    if width + tol < epsilon {
        return Err(Error::InfeasibleConstraint {
            width: width.to_f64().unwrap_or(f64::NAN),
            epsilon: epsilon.to_f64().unwrap_or(f64::NAN),
        });
    }
    let last = T::of_usize(resolution - 1);
    let lattice: Vec<T> = (0..resolution)
        .map(|i| lo + width * T::of_usize(i) / last)
        .collect();
    let pt = T::of(p);
    let pow = |a: T| a.abs().powf(pt);
    let mut best = T::infinity();
    for &v in &lattice {
        for &v2 in lattice.iter().filter(|&&v2| v2 - v + tol >= epsilon) {
            for &t in &lattice {
                for &t2 in lattice.iter().filter(|&&t2| t2 - t + tol >= epsilon) {
                    let gain = pow(v - t2) + pow(v2 - t) - pow(v - t) - pow(v2 - t2);
                    if gain < best {
                        best = gain;
                    }
                }
            }
        }
    }
    if best.is_infinite() {
        // the lattice is too coarse to realize a gap of epsilon
        return Err(Error::InfeasibleConstraint {
            width: width.to_f64().unwrap_or(f64::NAN),
            epsilon: epsilon.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(best)
}
