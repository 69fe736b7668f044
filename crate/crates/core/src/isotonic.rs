//! Isotonization by pool-adjacent-violators and convex blends with the
//! rearrangement.

use crate::error::{Error, Result};
use crate::grid::GriddedFunction;
use crate::rearrange::{apply_sequential, average_over, Ordering, OrderingSet};
use crate::scalar::Scalar;

/// Values with positive weights, the input of a weighted isotonic fit.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSeq<T> {
    values: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> WeightedSeq<T> {
    pub fn new(values: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if values.len() != weights.len() {
            return Err(Error::ShapeMismatch {
                expected: values.len(),
                actual: weights.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        if let Some(index) = weights.iter().position(|w| !(*w > T::zero() && w.is_finite())) {
            return Err(Error::NonPositiveWeight { index });
        }
        Ok(Self { values, weights })
    }

    pub fn unweighted(values: Vec<T>) -> Result<Self> {
        let n = values.len();
        Self::new(values, vec![T::one(); n])
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Weighted least-squares projection onto weakly increasing sequences.
pub fn pava<T: Scalar>(s: &WeightedSeq<T>) -> Vec<T> {
    pava_weighted(&s.values, &s.weights)
}

struct Block<T> {
    /// Original value while the block is a singleton, so unpooled entries pass through exactly.
    value: T,
    weighted_sum: T,
    weight: T,
    len: usize,
}

impl<T: Scalar> Block<T> {
    fn mean(&self) -> T {
        if self.len == 1 {
            self.value
        } else {
            self.weighted_sum / self.weight
        }
    }
}

fn pava_weighted<T: Scalar>(values: &[T], weights: &[T]) -> Vec<T> {
    let mut blocks: Vec<Block<T>> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push(Block {
            value: v,
            weighted_sum: v * w,
            weight: w,
            len: 1,
        });
        // only strict violations pool
        while blocks.len() > 1 {
            let n = blocks.len();
            if blocks[n - 2].mean() <= blocks[n - 1].mean() {
                break;
            }
            let top = blocks.pop().expect("two blocks");
            let prev = blocks.last_mut().expect("two blocks");
            prev.weighted_sum = prev.weighted_sum + top.weighted_sum;
            prev.weight = prev.weight + top.weight;
            prev.len += top.len;
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for b in &blocks {
        let m = b.mean();
        out.extend(std::iter::repeat_n(m, b.len));
    }
    out
}

/// Unweighted PAVA applied in place to a fiber.
pub(crate) fn pava_fiber<T: Scalar>(fiber: &mut [T]) {
    let w = vec![T::one(); fiber.len()];
    let fitted = pava_weighted(fiber, &w);
    fiber.copy_from_slice(&fitted);
}

/// `max_{j <= i} min_{k >= i}` of the weighted average of `values[j..=k]`,
/// evaluated by a direct double loop.
pub fn isotonic_maxmin_oracle<T: Scalar>(s: &WeightedSeq<T>, i: usize) -> Result<T> {
    let n = s.len();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    let mut best = T::neg_infinity();
    for j in 0..=i {
        let mut sum = T::zero();
        let mut weight = T::zero();
        for k in j..i {
            sum = sum + s.values[k] * s.weights[k];
            weight = weight + s.weights[k];
        }
        let mut inner = T::infinity();
        for k in i..n {
            sum = sum + s.values[k] * s.weights[k];
            weight = weight + s.weights[k];
            inner = inner.min(sum / weight);
        }
        best = best.max(inner);
    }
    Ok(best)
}

/// Sequential fiber-wise isotonization, axes processed in the same order as
/// [`crate::rearrange::rearrange_pi`].
pub fn isotonize_pi<T: Scalar>(f: &GriddedFunction<T>, pi: &Ordering) -> Result<GriddedFunction<T>> {
    apply_sequential(f, pi, pava_fiber)
}

/// Average of the sequential isotonizations over `orderings`.
pub fn isotonize_average<T: Scalar>(
    f: &GriddedFunction<T>,
    orderings: &OrderingSet,
) -> Result<GriddedFunction<T>> {
    if orderings.len() == 1 {
        return isotonize_pi(f, &orderings.orderings()[0]);
    }
    average_over(f, orderings, |pi| isotonize_pi(f, pi))
}

/// `lambda * a + (1 - lambda) * b`.
pub fn blend<T: Scalar>(
    a: &GriddedFunction<T>,
    b: &GriddedFunction<T>,
    lambda: T,
) -> Result<GriddedFunction<T>> {
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(Error::LambdaOutOfRange(lambda.to_f64().unwrap_or(f64::NAN)));
    }
    a.check_grid(b)?;
    if lambda == T::one() {
        return Ok(a.clone());
    }
    if lambda == T::zero() {
        return Ok(b.clone());
    }
    // exact where the inputs agree
    a.zip_with(b, |x, y| y + lambda * (x - y))
}
