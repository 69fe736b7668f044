mod common;

use common::*;
use monotone::{
    eta_p, lp_distance, rearrange_1d, rearrange_average, rearrange_axis, rearrange_pi,
    rearrange_quantile_oracle, Axis, Direction, GriddedFunction, LpIndex, Ordering, OrderingSet,
};
use proptest::prelude::*;

fn standard_ps() -> [LpIndex; 4] {
    [
        LpIndex::Finite(1.0),
        LpIndex::Finite(2.0),
        LpIndex::Finite(5.0),
        LpIndex::Inf,
    ]
}

fn fiber_multisets(f: &GriddedFunction<f64>, axis: usize) -> Vec<Vec<f64>> {
    let shape = f.shape();
    let mut out = Vec::new();
    for flat in 0..f.len() {
        let idx = f.multi_index(flat);
        if idx[axis] != 0 {
            continue;
        }
        let fiber = (0..shape[axis])
            .map(|k| {
                let mut i = idx.clone();
                i[axis] = k;
                f.get(&i)
            })
            .collect();
        out.push(sorted(fiber));
    }
    out
}

fn random_grid() -> impl Strategy<Value = GriddedFunction<f64>> {
    prop::collection::vec(1usize..5, 1..4).prop_flat_map(|shape| {
        let len = shape.iter().product();
        values(len).prop_map(move |v| {
            GriddedFunction::new(
                shape
                    .iter()
                    .map(|&n| Axis::linspace(0.0, 1.0, n).unwrap())
                    .collect(),
                v,
            )
            .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sorting_matches_quantile_definition(v in (1usize..=50).prop_flat_map(values)) {
        let r = rearrange_1d(&v, Direction::Increasing).unwrap();
        let n = v.len();
        for (i, &ri) in r.iter().enumerate() {
            let u = (i + 1) as f64 / n as f64;
            prop_assert_eq!(ri, rearrange_quantile_oracle(&v, u).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn axis_rearrangement_keeps_fiber_multisets(f in random_grid(), pick in 0usize..3) {
        let axis = pick % f.dim();
        let g = rearrange_axis(&f, axis).unwrap();
        prop_assert!(g.is_monotone_along(axis));
        prop_assert_eq!(fiber_multisets(&f, axis), fiber_multisets(&g, axis));
    }

    #[test]
    fn rearrangement_reduces_error_in_one_dimension(
        (fhat, f0) in (1usize..40).prop_flat_map(|n| (values(n), values(n)))
    ) {
        let f0 = line(sorted(f0));
        let fhat = line(fhat);
        let r = line(rearrange_1d(fhat.values(), Direction::Increasing).unwrap());
        for p in standard_ps() {
            let before = lp_distance(&fhat, &f0, p).unwrap();
            let after = lp_distance(&r, &f0, p).unwrap();
            prop_assert!(le_rel(after, before, 1e-12), "p={} {} > {}", p, after, before);
        }
    }

    #[test]
    fn every_ordering_reduces_error_in_two_dimensions((fhat, f0) in pair2()) {
        for pi in OrderingSet::all(2).orderings() {
            let r = rearrange_pi(&fhat, pi).unwrap();
            prop_assert!(r.is_monotone());
            for p in standard_ps() {
                let before = lp_distance(&fhat, &f0, p).unwrap();
                let after = lp_distance(&r, &f0, p).unwrap();
                prop_assert!(le_rel(after, before, 1e-12), "pi={} p={} {} > {}", pi, p, after, before);
            }
        }
    }

    #[test]
    fn average_no_worse_than_mean_over_orderings((fhat, f0) in pair2()) {
        let set = OrderingSet::all(2);
        let avg = rearrange_average(&fhat, &set).unwrap();
        prop_assert!(avg.is_monotone());
        for p in standard_ps() {
            let mean = set
                .orderings()
                .iter()
                .map(|pi| lp_distance(&rearrange_pi(&fhat, pi).unwrap(), &f0, p).unwrap())
                .sum::<f64>()
                / set.len() as f64;
            let e = lp_distance(&avg, &f0, p).unwrap();
            prop_assert!(le_rel(e, mean, 1e-12), "p={} {} > {}", p, e, mean);
        }
    }

    #[test]
    fn rearrangement_preserves_order(
        (g, noise) in pair2().prop_flat_map(|(g, _)| {
            let n = g.len();
            (Just(g), prop::collection::vec(0.0..5.0f64, n))
        })
    ) {
        let m = g.zip_with(&g.with_values(noise).unwrap(), |a, b| a + b).unwrap();
        for pi in OrderingSet::all(2).orderings() {
            let rg = rearrange_pi(&g, pi).unwrap();
            let rm = rearrange_pi(&m, pi).unwrap();
            prop_assert!(rg.values().iter().zip(rm.values()).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn rearrangement_is_idempotent(f in random_grid()) {
        let set = OrderingSet::all(f.dim());
        for pi in set.orderings() {
            let once = rearrange_pi(&f, pi).unwrap();
            prop_assert_eq!(rearrange_pi(&once, pi).unwrap(), once.clone());
            prop_assert!(once.is_monotone());
        }
        let avg = rearrange_average(&f, &set).unwrap();
        let again = rearrange_average(&avg, &set).unwrap();
        prop_assert_eq!(again.values(), avg.values());
    }
}

/// `fhat` decreases by more than `eps` from the first block of `m` nodes to
/// the last block while `f0` increases by more than `eps` there.
fn mixed_up_fixture() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize, f64)> {
    (1usize..6, 0usize..6, prop::sample::select(EPSILONS.to_vec())).prop_flat_map(|(m, gap, eps)| {
        let n = 2 * m + gap;
        (
            prop::collection::vec(0.0..1.0f64, m),
            prop::collection::vec(0.0..1.0f64, m),
            prop::collection::vec(0.0..1.0f64, gap),
            prop::collection::vec(0.0..1.0f64, n),
            Just((m, gap, eps)),
        )
            .prop_map(|(high, low, middle, f0, (m, _gap, eps))| {
                let mut fhat: Vec<f64> = high.iter().map(|v| 1.0 + eps + v).collect();
                fhat.extend(middle.iter().map(|v| 2.0 * v));
                fhat.extend(low.iter().copied());
                let n = fhat.len();
                let mut f0 = sorted(f0);
                for v in &mut f0[n - m..] {
                    *v += 1.0 + eps;
                }
                (fhat, f0, m, eps)
            })
    })
}

fn strict_gain_holds(
    fhat: &GriddedFunction<f64>,
    f0: &GriddedFunction<f64>,
    r: &GriddedFunction<f64>,
    delta: f64,
    eps: f64,
) -> Result<(), TestCaseError> {
    prop_assert!(fhat.min_value() >= 0.0 && fhat.max_value() <= 2.5);
    prop_assert!(f0.min_value() >= 0.0 && f0.max_value() <= 2.5);
    let etas = eta_table(eps);
    for (p, eta) in GAIN_PS.into_iter().zip(etas) {
        prop_assert!(eta > 0.0);
        let before = lp_distance(fhat, f0, LpIndex::Finite(p)).unwrap().powf(p);
        let after = lp_distance(r, f0, LpIndex::Finite(p)).unwrap().powf(p);
        prop_assert!(
            le_rel(after, before - delta * eta, 1e-10),
            "p={} {} > {} - {} * {}", p, after, before, delta, eta
        );
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn strict_gain_when_estimate_and_target_disagree((fhat, f0, m, eps) in mixed_up_fixture()) {
        let n = fhat.len();
        let delta = m as f64 / n as f64;
        let r = line(rearrange_1d(&fhat, Direction::Increasing).unwrap());
        strict_gain_holds(&line(fhat), &line(f0), &r, delta, eps)?;
    }

    #[test]
    fn strict_gain_in_two_dimensions((fhat, f0, m, eps) in mixed_up_fixture(), cols in 1usize..4) {
        // constant along the second axis, so the mixed-up region has measure m / n
        let n = fhat.len();
        let spread = |v: &[f64]| v.iter().flat_map(|&x| std::iter::repeat_n(x, cols)).collect::<Vec<_>>();
        let fhat2 = grid2(n, cols, spread(&fhat));
        let f02 = grid2(n, cols, spread(&f0));
        let r = rearrange_pi(&fhat2, &Ordering::from_one_based(&[1, 2]).unwrap()).unwrap();
        strict_gain_holds(&fhat2, &f02, &r, m as f64 / n as f64, eps)?;
    }
}

#[test]
fn two_by_two_orderings() {
    let f = grid2(2, 2, vec![0.0, 2.0, 1.0, 3.0]);
    let g = grid2(2, 2, vec![0.0, 1.0, 2.0, 3.0]);
    for pi in OrderingSet::all(2).orderings() {
        assert_eq!(rearrange_pi(&f, pi).unwrap(), f);
        assert_eq!(rearrange_pi(&g, pi).unwrap(), g);
    }
    let h = grid2(2, 2, vec![1.0, 3.0, 2.0, 0.0]);
    let a = rearrange_pi(&h, &Ordering::from_one_based(&[1, 2]).unwrap()).unwrap();
    let b = rearrange_pi(&h, &Ordering::from_one_based(&[2, 1]).unwrap()).unwrap();
    assert_eq!(a.values(), &[0.0, 2.0, 1.0, 3.0]);
    assert_eq!(b.values(), &[0.0, 1.0, 2.0, 3.0]);
    let avg = rearrange_average(&h, &OrderingSet::all(2)).unwrap();
    assert_eq!(avg.values(), &[0.0, 1.5, 1.5, 3.0]);
}

#[test]
fn eta_two_is_twice_epsilon_squared() {
    let e: f64 = eta_p(0.0, 1.0, 0.5, 2.0, 101).unwrap();
    assert!((e - 0.5).abs() < 1e-9);
    let e: f64 = eta_p(0.0, 1.0, 1.0, 2.0, 2).unwrap();
    assert!((e - 2.0).abs() < 1e-9);
    assert!(eta_p(0.0, 1.0, 1.5, 2.0, 11).is_err());
}

#[test]
fn decreasing_direction_reverses() {
    let v = [3.0, 1.0, 2.0];
    assert_eq!(rearrange_1d(&v, Direction::Decreasing).unwrap(), vec![3.0, 2.0, 1.0]);
}
