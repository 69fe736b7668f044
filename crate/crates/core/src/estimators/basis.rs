//! Series bases: clamped cubic B-splines and a trigonometric basis.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const ORDER: usize = 4;

/// Cubic B-spline basis on `[lo, hi]` with the given interior knots and
/// fourfold boundary knots.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    knots: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl BSplineBasis {
    pub fn new(interior: &[f64], lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidSpec(format!("empty basis domain [{lo}, {hi}]")));
        }
        if interior.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("knots must be strictly increasing".into()));
        }
        if let Some(k) = interior.iter().find(|&&k| k <= lo || k >= hi) {
            return Err(Error::InvalidSpec(format!(
                "knot {k} outside the open domain ({lo}, {hi})"
            )));
        }
        let mut knots = vec![lo; ORDER];
        knots.extend_from_slice(interior);
        knots.extend(std::iter::repeat_n(hi, ORDER));
        Ok(Self { knots, lo, hi })
    }

    pub fn len(&self) -> usize {
        self.knots.len() - ORDER
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(Error::OutOfDomain {
                x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let t = &self.knots;
        let p = ORDER - 1;
        let m = self.len();
        // knot span with t[span] <= x < t[span + 1]; the right end uses the last span
        let span = if x >= self.hi {
            m - 1
        } else {
            t.partition_point(|&k| k <= x) - 1
        };
        // Cox-de Boor, nonzero functions only
        let mut n = vec![0.0; ORDER];
        let mut left = [0.0; ORDER];
        let mut right = [0.0; ORDER];
        n[0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == 0.0 { 0.0 } else { n[r] / denom };
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        let mut out = vec![0.0; m];
        for (r, v) in n.into_iter().enumerate() {
            out[span - p + r] = v;
        }
        Ok(out)
    }
}

/// `(1, [x_s], sin(2 pi k x_s), cos(2 pi k x_s))` for `k = 1..=n_terms`,
/// where `x_s` maps `[lo, hi]` affinely onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierBasis {
    n_terms: usize,
    linear_term: bool,
    lo: f64,
    hi: f64,
}

impl FourierBasis {
    pub fn new(n_terms: usize, linear_term: bool, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidSpec(format!("empty basis domain [{lo}, {hi}]")));
        }
        Ok(Self {
            n_terms,
            linear_term,
            lo,
            hi,
        })
    }

    pub fn len(&self) -> usize {
        1 + usize::from(self.linear_term) + 2 * self.n_terms
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(Error::OutOfDomain {
                x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let xs = (x - self.lo) / (self.hi - self.lo);
        let mut out = Vec::with_capacity(self.len());
        out.push(1.0);
        if self.linear_term {
            out.push(xs);
        }
        for k in 1..=self.n_terms {
            let a = 2.0 * PI * k as f64 * xs;
            out.push(a.sin());
            out.push(a.cos());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bspline_partition_of_unity() {
        let b = BSplineBasis::new(&[3.0, 5.0, 8.0, 10.0, 11.5, 13.0, 14.5, 16.0, 18.0], 2.0, 20.0)
            .unwrap();
        assert_eq!(b.len(), 13);
        for i in 0..=180 {
            let x = 2.0 + 0.1 * i as f64;
            let v = b.eval(x.min(20.0)).unwrap();
            let s: f64 = v.iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "x={x} sum={s}");
            assert!(v.iter().all(|&c| c >= -1e-15));
        }
        let end = b.eval(20.0).unwrap();
        assert!((end[12] - 1.0).abs() < 1e-12);
        assert!((b.eval(2.0).unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bspline_without_interior_knots_is_bernstein() {
        let b = BSplineBasis::new(&[], 0.0, 1.0).unwrap();
        let x: f64 = 0.3;
        let v = b.eval(x).unwrap();
        let bern = [
            (1.0 - x).powi(3),
            3.0 * x * (1.0 - x).powi(2),
            3.0 * x * x * (1.0 - x),
            x.powi(3),
        ];
        for (a, e) in v.iter().zip(bern) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn bspline_continuity_at_knots() {
        let b = BSplineBasis::new(&[0.3, 0.6], 0.0, 1.0).unwrap();
        for &k in &[0.3, 0.6] {
            let l = b.eval(k - 1e-9).unwrap();
            let r = b.eval(k + 1e-9).unwrap();
            for (a, c) in l.iter().zip(&r) {
                assert!((a - c).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn bspline_domain_checks() {
        let b = BSplineBasis::new(&[0.5], 0.0, 1.0).unwrap();
        assert!(matches!(b.eval(1.5), Err(Error::OutOfDomain { .. })));
        assert!(BSplineBasis::new(&[1.0], 0.0, 1.0).is_err());
        assert!(BSplineBasis::new(&[0.5, 0.4], 0.0, 1.0).is_err());
    }

    #[test]
    fn fourier_at_origin() {
        let f = FourierBasis::new(4, true, 2.0, 20.0).unwrap();
        let v = f.eval(2.0).unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 0.0);
        for k in 0..4 {
            assert_eq!(v[2 + 2 * k], 0.0);
            assert_eq!(v[3 + 2 * k], 1.0);
        }
        assert_eq!(FourierBasis::new(4, false, 0.0, 1.0).unwrap().len(), 9);
    }
}
