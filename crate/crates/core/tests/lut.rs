//! Lookup-table properties over random tables.

use proptest::prelude::*;
use prslack_core::liberty::Lut;

const CASES: u32 = 10_000;

fn axis(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    (0.0..1.0f64, prop::collection::vec(0.01..1.0f64, 1..=max_len)).prop_map(|(start, steps)| {
        let mut x = start;
        steps
            .into_iter()
            .map(|s| {
                let v = x;
                x += s;
                v
            })
            .collect()
    })
}

fn table() -> impl Strategy<Value = Lut> {
    (axis(8), axis(8)).prop_flat_map(|(a, b)| {
        let n = a.len() * b.len();
        prop::collection::vec(-5.0..5.0f64, n).prop_map(move |v| Lut::from_flat(a.clone(), b.clone(), v).unwrap())
    })
}

/// `(table, c0, c1, c2)` with values `c0 + c1*x1 + c2*x2`.
fn affine_table() -> impl Strategy<Value = (Lut, f64, f64, f64)> {
    (axis(8), axis(8), -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c0, c1, c2)| {
        let mut v = Vec::new();
        for x in &a {
            for y in &b {
                v.push(c0 + c1 * x + c2 * y);
            }
        }
        (Lut::from_flat(a, b, v).unwrap(), c0, c1, c2)
    })
}

/// Bilinear weights written out per corner, for points inside the grid.
fn bilinear_oracle(t: &Lut, x1: f64, x2: f64) -> f64 {
    let seg = |axis: &[f64], x: f64| -> (usize, usize, f64) {
        if axis.len() == 1 {
            return (0, 0, 0.0);
        }
        let mut i = 0;
        while i + 2 < axis.len() && x >= axis[i + 1] {
            i += 1;
        }
        (i, i + 1, (x - axis[i]) / (axis[i + 1] - axis[i]))
    };
    let (i0, i1, t1) = seg(t.index1(), x1);
    let (j0, j1, t2) = seg(t.index2(), x2);
    (1.0 - t1) * (1.0 - t2) * t.value(i0, j0)
        + (1.0 - t1) * t2 * t.value(i0, j1)
        + t1 * (1.0 - t2) * t.value(i1, j0)
        + t1 * t2 * t.value(i1, j1)
}

fn span(axis: &[f64]) -> (f64, f64) {
    (axis[0], axis[axis.len() - 1])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: CASES, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn grid_points_are_exact(t in table()) {
        for (i, &x1) in t.index1().iter().enumerate() {
            for (j, &x2) in t.index2().iter().enumerate() {
                prop_assert_eq!(t.lookup(x1, x2).unwrap(), t.value(i, j));
            }
        }
    }

    #[test]
    fn affine_tables_are_reproduced((t, c0, c1, c2) in affine_table(), u in 0.0..1.0f64, v in 0.0..1.0f64, rows in 1usize..9, cols in 1usize..9) {
        let (a0, a1) = span(t.index1());
        let (b0, b1) = span(t.index2());
        // single-breakpoint axes are constant, so the affine term drops out
        let f = |x: f64, y: f64| {
            c0 + if t.rows() > 1 { c1 * x } else { c1 * a0 } + if t.cols() > 1 { c2 * y } else { c2 * b0 }
        };
        let (x, y) = (a0 + u * (a1 - a0), b0 + v * (b1 - b0));
        prop_assert!((t.lookup(x, y).unwrap() - f(x, y)).abs() <= 1e-12);
        // one edge segment past the grid is still linear
        let edge = |a: &[f64], k: usize| if a.len() > 1 { a[k + 1] - a[k] } else { 1.0 };
        let (x, y) = (a1 + u * edge(t.index1(), t.rows().saturating_sub(2)), b0 - v * edge(t.index2(), 0));
        prop_assert!((t.lookup(x, y).unwrap() - f(x, y)).abs() <= 1e-12);
        let r = t.interpolate(rows, cols).unwrap();
        prop_assert_eq!(r.shape(), (rows, cols));
        for (i, &x) in r.index1().iter().enumerate() {
            for (j, &y) in r.index2().iter().enumerate() {
                prop_assert!((r.value(i, j) - f(x, y)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn lookup_matches_bilinear_oracle(t in table(), u in 0.0..=1.0f64, v in 0.0..=1.0f64) {
        let (a0, a1) = span(t.index1());
        let (b0, b1) = span(t.index2());
        let (x, y) = (a0 + u * (a1 - a0), b0 + v * (b1 - b0));
        let got = t.lookup(x, y).unwrap();
        prop_assert!((got - bilinear_oracle(&t, x, y)).abs() <= 1e-12, "{} vs {}", got, bilinear_oracle(&t, x, y));
    }

    #[test]
    fn interpolation_is_idempotent(t in table(), rows in 1usize..9, cols in 1usize..9) {
        let once = t.interpolate(rows, cols).unwrap();
        let twice = once.interpolate(rows, cols).unwrap();
        prop_assert_eq!(&once, &twice);
    }

    #[test]
    fn same_shape_resample_of_uniform_grid_is_identity(start in 0.0..1.0f64, step in 0.01..1.0f64, n in 2usize..8, m in 2usize..8, seed in any::<u64>()) {
        let a: Vec<f64> = (0..n).map(|k| start + step * k as f64).collect();
        let b: Vec<f64> = (0..m).map(|k| start + step * k as f64).collect();
        let v: Vec<f64> = (0..n * m).map(|k| ((seed >> (k % 60)) & 0xff) as f64 / 64.0).collect();
        let t = Lut::from_flat(a, b, v).unwrap();
        let r = t.interpolate(n, m).unwrap();
        prop_assert_eq!(r.values(), t.values());
    }
}

#[test]
fn constant_table_is_constant_everywhere() {
    let t = Lut::constant(0.37);
    for (x, y) in [(0.0, 0.0), (-4.0, 1e3), (17.0, 0.002)] {
        assert_eq!(t.lookup(x, y).unwrap(), 0.37);
    }
    let r = t.interpolate(7, 7).unwrap();
    assert!(r.values().iter().all(|v| *v == 0.37));
}
