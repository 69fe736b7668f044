//! Gridded functions on rectangular grids and the `L^p` functionals over them.
//!
//! A [`GriddedFunction`] stores one value per node of a tensor-product grid,
//! row-major with the first axis slowest. Each node owns a cell: the interval
//! between the midpoints to its neighbours, with boundary nodes extending half
//! a gap outwards. On an equidistant axis every node therefore carries the
//! same measure, so a gridded function is a step function with equal steps and
//! sorting its values is exactly its increasing rearrangement.

use crate::error::{Error, Result};
use crate::scalar::{Scalar, EQUIDISTANT_RTOL};
use std::fmt;

/// Strictly increasing coordinates of one grid axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis<T> {
    coords: Vec<T>,
    equidistant: bool,
}

impl<T: Scalar> Axis<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        Self::with_index(coords, 0)
    }

    pub(crate) fn with_index(coords: Vec<T>, axis: usize) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyAxis);
        }
        for (i, c) in coords.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::NonFiniteValue { index: i });
            }
        }
        for i in 1..coords.len() {
            if coords[i] <= coords[i - 1] {
                return Err(Error::NonIncreasingAxis { axis, position: i });
            }
        }
        let equidistant = is_equidistant(&coords);
        Ok(Self { coords, equidistant })
    }

    /// `n` equidistant nodes from `lo` to `hi` inclusive.
    pub fn linspace(lo: T, hi: T, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyAxis);
        }
        if n == 1 {
            return Self::new(vec![lo]);
        }
        let span = hi - lo;
        let last = T::of_usize(n - 1);
        let coords = (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + span * T::of_usize(i) / last
                }
            })
            .collect();
        Self::new(coords)
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_equidistant(&self) -> bool {
        self.equidistant
    }

    pub fn lo(&self) -> T {
        self.coords[0]
    }

    pub fn hi(&self) -> T {
        self.coords[self.coords.len() - 1]
    }

    /// Normalized cell measures of the nodes; they sum to one.
    pub fn cell_weights(&self) -> Vec<T> {
        let c = &self.coords;
        let n = c.len();
        if n == 1 {
            return vec![T::one()];
        }
        if self.equidistant {
            return vec![T::one() / T::of_usize(n); n];
        }
        let half = T::of(0.5);
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            let left = if i == 0 { c[1] - c[0] } else { c[i] - c[i - 1] };
            let right = if i == n - 1 {
                c[n - 1] - c[n - 2]
            } else {
                c[i + 1] - c[i]
            };
            w.push(half * (left + right));
        }
        let total = w.iter().fold(T::zero(), |a, &b| a + b);
        w.iter_mut().for_each(|x| *x = *x / total);
        w
    }
}

fn is_equidistant<T: Scalar>(coords: &[T]) -> bool {
    if coords.len() <= 2 {
        return true;
    }
    let n = coords.len();
    let mean_gap = (coords[n - 1] - coords[0]) / T::of_usize(n - 1);
    let tol = T::of(EQUIDISTANT_RTOL) * mean_gap.abs();
    coords
        .windows(2)
        .all(|w| ((w[1] - w[0]) - mean_gap).abs() <= tol)
}

/// Exponent of an `L^p` functional: finite `p >= 1` or the sup norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpIndex {
    Finite(f64),
    Inf,
}

impl LpIndex {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(LpIndex::Finite(p))
        } else if p == f64::INFINITY {
            Ok(LpIndex::Inf)
        } else {
            Err(Error::OutOfRange { what: "p", value: p })
        }
    }

    /// The three exponents reported throughout: 1, 2 and infinity.
    pub fn standard() -> [LpIndex; 3] {
        [LpIndex::Finite(1.0), LpIndex::Finite(2.0), LpIndex::Inf]
    }

    pub fn label(&self) -> String {
        match self {
            LpIndex::Finite(p) => format!("{p}"),
            LpIndex::Inf => "inf".to_string(),
        }
    }
}

impl fmt::Display for LpIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl std::str::FromStr for LpIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" => Ok(LpIndex::Inf),
            t => {
                let p: f64 = t
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent {s:?}")))?;
                LpIndex::finite(p)
            }
        }
    }
}

/// Values of a scalar function on a rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedFunction<T> {
    axes: Vec<Axis<T>>,
    values: Vec<T>,
}

impl<T: Scalar> GriddedFunction<T> {
    pub fn new(axes: Vec<Axis<T>>, values: Vec<T>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::EmptyAxis);
        }
        let expected: usize = axes.iter().map(Axis::len).product();
        if expected != values.len() {
            return Err(Error::ShapeMismatch {
                expected,
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self { axes, values })
    }

    /// Validating constructor from raw coordinate lists.
    pub fn from_coords(coords: Vec<Vec<T>>, values: Vec<T>) -> Result<Self> {
        let axes = coords
            .into_iter()
            .enumerate()
            .map(|(j, c)| Axis::with_index(c, j))
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes, values)
    }

    /// One-dimensional function on an equidistant grid over `[0, 1]`.
    pub fn on_unit_interval(values: Vec<T>) -> Result<Self> {
        let axis = Axis::linspace(T::zero(), T::one(), values.len())?;
        Self::new(vec![axis], values)
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a multi-index.
    pub fn get(&self, index: &[usize]) -> T {
        self.values[self.flat_index(index)]
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dim());
        index
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, a)| acc * a.len() + i)
    }

    /// Multi-index of a flat position.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (j, a) in self.axes.iter().enumerate().rev() {
            idx[j] = flat % a.len();
            flat /= a.len();
        }
        idx
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.axes == other.axes
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(self.axes.clone(), values)
    }

    pub(crate) fn replace_values(&self, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            axes: self.axes.clone(),
            values,
        }
    }

    /// Cell measure of every node, in storage order; sums to one.
    pub fn cell_weights(&self) -> Vec<T> {
        let per_axis: Vec<Vec<T>> = self.axes.iter().map(Axis::cell_weights).collect();
        let mut out = vec![T::one(); self.values.len()];
        for (flat, w) in out.iter_mut().enumerate() {
            let idx = self.multi_index(flat);
            for (j, &i) in idx.iter().enumerate() {
                *w = *w * per_axis[j][i];
            }
        }
        out
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Whether the function is weakly increasing along every axis.
    pub fn is_monotone(&self) -> bool {
        (0..self.dim()).all(|j| self.is_monotone_along(j))
    }

    pub fn is_monotone_along(&self, axis: usize) -> bool {
        let mut ok = true;
        let mut values = self.values.clone();
        for_each_fiber(&mut values, &self.shape(), axis, |fiber| {
            ok &= fiber.windows(2).all(|w| w[0] <= w[1]);
        });
        ok
    }

    /// Pointwise map preserving the grid.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_grid(other)?;
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }
}

/// Calls `f` on every one-dimensional fiber along `axis`, writing back any
/// modification. Fibers are visited in storage order.
pub(crate) fn for_each_fiber<T: Copy + Default>(
    values: &mut [T],
    shape: &[usize],
    axis: usize,
    mut f: impl FnMut(&mut [T]),
) {
    let len = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut buf = vec![T::default(); len];
    for o in 0..outer {
        for i in 0..stride {
            let base = o * len * stride + i;
            for (k, b) in buf.iter_mut().enumerate() {
                *b = values[base + k * stride];
            }
            f(&mut buf);
            for (k, b) in buf.iter().enumerate() {
                values[base + k * stride] = *b;
            }
        }
    }
}

/// `L^p` distance between two functions on a shared grid, integrating with
/// the normalized cell measure. The sup norm is taken over grid nodes.
pub fn lp_distance<T: Scalar>(
    f: &GriddedFunction<T>,
    g: &GriddedFunction<T>,
    p: LpIndex,
) -> Result<T> {
    f.check_grid(g)?;
    let diffs = f.values.iter().zip(&g.values).map(|(&a, &b)| (a - b).abs());
    Ok(match p {
        LpIndex::Inf => diffs.fold(T::zero(), T::max),
        LpIndex::Finite(p) => {
            let weights = f.cell_weights();
            weighted_lp(diffs, &weights, p)
        }
    })
}

/// `(sum w_i d_i^p)^(1/p)` with the differences rescaled by their maximum so
/// large exponents neither overflow nor underflow.
pub(crate) fn weighted_lp<T: Scalar>(diffs: impl Iterator<Item = T>, weights: &[T], p: f64) -> T {
    let d: Vec<T> = diffs.collect();
    let scale = d.iter().copied().fold(T::zero(), T::max);
    if scale == T::zero() {
        return T::zero();
    }
    let pt = T::of(p);
    if p == 1.0 {
        return d
            .iter()
            .zip(weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * x);
    }
    let sum = d
        .iter()
        .zip(weights)
        .fold(T::zero(), |acc, (&x, &w)| acc + w * (x / scale).powf(pt));
    scale * sum.powf(T::one() / pt)
}

/// `p`-th power of the `L^p` distance (finite `p` only).
pub fn lp_distance_pow<T: Scalar>(
    f: &GriddedFunction<T>,
    g: &GriddedFunction<T>,
    p: f64,
) -> Result<T> {
    f.check_grid(g)?;
    let weights = f.cell_weights();
    let pt = T::of(p);
    Ok(f.values
        .iter()
        .zip(&g.values)
        .zip(&weights)
        .fold(T::zero(), |acc, ((&a, &b), &w)| acc + w * (a - b).abs().powf(pt)))
}
