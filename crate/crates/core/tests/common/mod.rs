#![allow(dead_code)]

use monotone::{eta_p, Axis, GriddedFunction};
use proptest::prelude::*;
use std::sync::LazyLock;

pub fn line(v: Vec<f64>) -> GriddedFunction<f64> {
    GriddedFunction::on_unit_interval(v).unwrap()
}

pub fn grid2(rows: usize, cols: usize, v: Vec<f64>) -> GriddedFunction<f64> {
    GriddedFunction::new(
        vec![
            Axis::linspace(0.0, 1.0, rows).unwrap(),
            Axis::linspace(0.0, 1.0, cols).unwrap(),
        ],
        v,
    )
    .unwrap()
}

pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// `a <= b` up to `rtol` relative to the larger magnitude.
pub fn le_rel(a: f64, b: f64, rtol: f64) -> bool {
    a <= b + rtol * a.abs().max(b.abs()).max(1e-300)
}

pub fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

/// Random increasing axis coordinates, not necessarily equidistant.
pub fn uneven_axis(n: usize) -> impl Strategy<Value = Axis<f64>> {
    prop::collection::vec(0.05..1.0f64, n).prop_map(|gaps| {
        let mut acc = 0.0;
        let c = gaps
            .into_iter()
            .map(|g| {
                acc += g;
                acc
            })
            .collect();
        Axis::new(c).unwrap()
    })
}

/// A 2-d function increasing in both arguments: row and column trends plus
/// cumulative sums of nonnegative increments.
pub fn monotone2(rows: usize, cols: usize) -> impl Strategy<Value = GriddedFunction<f64>> {
    (
        prop::collection::vec(0.0..3.0f64, rows),
        prop::collection::vec(0.0..3.0f64, cols),
        prop::collection::vec(0.0..1.0f64, rows * cols),
    )
        .prop_map(move |(a, b, inc)| {
            let a = sorted(a);
            let b = sorted(b);
            let mut cum = vec![0.0; rows * cols];
            for i in 0..rows {
                for j in 0..cols {
                    let up = if i > 0 { cum[(i - 1) * cols + j] } else { 0.0 };
                    let left = if j > 0 { cum[i * cols + j - 1] } else { 0.0 };
                    let diag = if i > 0 && j > 0 { cum[(i - 1) * cols + j - 1] } else { 0.0 };
                    cum[i * cols + j] = up + left - diag + inc[i * cols + j];
                }
            }
            let v = (0..rows * cols)
                .map(|k| a[k / cols] + b[k % cols] + cum[k])
                .collect();
            grid2(rows, cols, v)
        })
}

/// A random 2-d function and a monotone target of the same shape.
pub fn pair2() -> impl Strategy<Value = (GriddedFunction<f64>, GriddedFunction<f64>)> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
        (values(r * c).prop_map(move |v| grid2(r, c, v)), monotone2(r, c))
    })
}

pub const EPSILONS: [f64; 3] = [0.1, 0.25, 0.5];
pub const GAIN_PS: [f64; 3] = [1.5, 2.0, 3.0];

/// Strict-gain constants for values in `[0, 2.5]`; the lattice step 0.05
/// places points exactly `eps` apart.
static ETA: LazyLock<Vec<[f64; 3]>> = LazyLock::new(|| {
    EPSILONS
        .iter()
        .map(|&eps| GAIN_PS.map(|p| eta_p(0.0, 2.5, eps, p, 51).unwrap()))
        .collect()
});

/// `eta_p` for each of [`GAIN_PS`] at one of [`EPSILONS`].
pub fn eta_table(eps: f64) -> [f64; 3] {
    ETA[EPSILONS.iter().position(|&e| e == eps).expect("tabulated epsilon")]
}
