//! NLDM lookup tables: bilinear lookup with bounded linear extrapolation,
//! and resampling onto a fixed grid shape.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How far past the outermost breakpoint a lookup may extrapolate, in units
/// of the edge segment width.
pub const EXTRAPOLATION_SPANS: f64 = 10.0;

/// A two-dimensional lookup table indexed by input slew (`index1`) and
/// output load (`index2`). Values are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lut {
    index1: Vec<f64>,
    index2: Vec<f64>,
    values: Vec<f64>,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::Argument(format!("{name} is empty")));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument(format!("{name} has a non-finite breakpoint")));
    }
    if axis.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument(format!("{name} is not strictly increasing")));
    }
    Ok(())
}

impl Lut {
    pub fn new(index1: Vec<f64>, index2: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != index1.len() || rows.iter().any(|r| r.len() != index2.len()) {
            return Err(Error::Argument(format!(
                "table values do not match a {}x{} grid",
                index1.len(),
                index2.len()
            )));
        }
        Self::from_flat(index1, index2, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(index1: Vec<f64>, index2: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_axis("index_1", &index1)?;
        check_axis("index_2", &index2)?;
        if values.len() != index1.len() * index2.len() {
            return Err(Error::Argument(format!(
                "{} values for a {}x{} grid",
                values.len(),
                index1.len(),
                index2.len()
            )));
        }
        Ok(Lut { index1, index2, values })
    }

    /// A 1×1 table: the same value everywhere.
    pub fn constant(value: f64) -> Self {
        Lut {
            index1: vec![0.0],
            index2: vec![0.0],
            values: vec![value],
        }
    }

    pub fn index1(&self) -> &[f64] {
        &self.index1
    }

    pub fn index2(&self) -> &[f64] {
        &self.index2
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> usize {
        self.index1.len()
    }

    pub fn cols(&self) -> usize {
        self.index2.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols() + col]
    }

    /// Bilinear interpolation inside the grid, linear extrapolation from the
    /// edge segment outside it (clamped to [`EXTRAPOLATION_SPANS`] segment
    /// widths). A single-breakpoint axis is constant.
    pub fn lookup(&self, x1: f64, x2: f64) -> Result<f64> {
        if !x1.is_finite() || !x2.is_finite() {
            return Err(Error::Argument(format!("non-finite lookup point ({x1}, {x2})")));
        }
        Ok(self.lookup_unchecked(x1, x2))
    }

    pub(crate) fn lookup_unchecked(&self, x1: f64, x2: f64) -> f64 {
        let (i, t) = locate(&self.index1, x1);
        let (j, u) = locate(&self.index2, x2);
        let cols = self.cols();
        let at = |r: usize, c: usize| self.values[r * cols + c];
        let row = |r: usize| {
            if cols == 1 {
                at(r, 0)
            } else {
                lerp(at(r, j), at(r, j + 1), u)
            }
        };
        if self.rows() == 1 {
            row(0)
        } else {
            lerp(row(i), row(i + 1), t)
        }
    }

    /// Resample onto a `rows × cols` grid. New breakpoints are uniformly
    /// spaced over each source axis (endpoints kept); a new breakpoint that
    /// coincides with a source breakpoint takes that breakpoint exactly, so
    /// resampling a uniform table onto its own shape is the identity.
    pub fn interpolate(&self, rows: usize, cols: usize) -> Result<Lut> {
        if rows == 0 || cols == 0 {
            return Err(Error::Argument(format!("target shape {rows}x{cols} must be positive")));
        }
        let index1 = resample_axis(&self.index1, rows);
        let index2 = resample_axis(&self.index2, cols);
        let mut values = Vec::with_capacity(rows * cols);
        for &a in &index1 {
            for &b in &index2 {
                values.push(self.lookup_unchecked(a, b));
            }
        }
        Ok(Lut { index1, index2, values })
    }
}

/// Equal endpoints return that value exactly, so flat regions (and
/// resampled constant tables) look up without rounding drift.
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if a == b {
        a
    } else {
        (1.0 - t) * a + t * b
    }
}

/// Segment start and fractional position of `x` along `axis`. For a
/// one-breakpoint axis the segment is unused.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    if n == 1 {
        return (0, 0.0);
    }
    let lo_span = axis[1] - axis[0];
    let hi_span = axis[n - 1] - axis[n - 2];
    let x = x.clamp(
        axis[0] - EXTRAPOLATION_SPANS * lo_span,
        axis[n - 1] + EXTRAPOLATION_SPANS * hi_span,
    );
    // first breakpoint strictly greater than x, minus one
    let i = axis.partition_point(|&a| a <= x).saturating_sub(1).min(n - 2);
    let t = (x - axis[i]) / (axis[i + 1] - axis[i]);
    (i, t)
}

fn resample_axis(axis: &[f64], n: usize) -> Vec<f64> {
    let lo = axis[0];
    let hi = axis[axis.len() - 1];
    if n == 1 {
        return vec![lo];
    }
    if axis.len() == 1 {
        // constant axis: any breakpoints give the same values
        let step = if lo != 0.0 { lo.abs() } else { 1.0 };
        return (0..n).map(|k| lo + step * k as f64).collect();
    }
    (0..n)
        .map(|k| {
            let b = if k == n - 1 {
                hi
            } else {
                lo + (hi - lo) * (k as f64) / ((n - 1) as f64)
            };
            snap(axis, b)
        })
        .collect()
}

fn snap(axis: &[f64], b: f64) -> f64 {
    let tol = |a: f64| 1e-12 * a.abs().max(1.0);
    let k = axis.partition_point(|&a| a < b);
    for cand in [k.saturating_sub(1), k] {
        if let Some(&a) = axis.get(cand) {
            if (a - b).abs() <= tol(a) {
                return a;
            }
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(i1: &[f64], i2: &[f64]) -> Lut {
        let rows = i1
            .iter()
            .map(|a| i2.iter().map(|b| 2.0 * a + 3.0 * b).collect())
            .collect();
        Lut::new(i1.to_vec(), i2.to_vec(), rows).unwrap()
    }

    #[test]
    fn literal_table() {
        let l = Lut::new(vec![0.01, 0.02], vec![0.1, 0.2], vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(l.shape(), (2, 2));
        assert_eq!(l.value(1, 0), 3.0);
        assert_eq!(l.lookup(0.02, 0.2).unwrap(), 4.0);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Lut::from_flat(vec![1.0, 1.0], vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(Lut::from_flat(vec![], vec![0.0], vec![]).is_err());
        assert!(Lut::from_flat(vec![0.0, 1.0], vec![0.0], vec![1.0]).is_err());
        assert!(Lut::constant(1.0).interpolate(0, 3).is_err());
        assert!(Lut::constant(1.0).lookup(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn constant_table_everywhere() {
        let l = Lut::constant(5.0);
        for (a, b) in [(0.0, 0.0), (-3.0, 1e6), (42.0, -1.0)] {
            assert_eq!(l.lookup(a, b).unwrap(), 5.0);
        }
        let big = l.interpolate(7, 7).unwrap();
        assert!(big.values().iter().all(|&v| v == 5.0));
        assert!(big.index1().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn two_by_two_to_three_by_three_center() {
        let l = Lut::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let r = l.interpolate(3, 3).unwrap();
        assert_eq!(r.index1(), &[0.0, 0.5, 1.0]);
        assert_eq!(r.value(1, 1), 1.0);
    }

    #[test]
    fn extrapolation_is_linear_then_clamped() {
        let l = affine(&[1.0, 2.0], &[1.0, 3.0]);
        // one span past the edge: still affine
        assert!((l.lookup(3.0, 3.0).unwrap() - 15.0).abs() < 1e-12);
        // far past: clamped at 10 spans (x1 <= 12)
        let far = l.lookup(1000.0, 1.0).unwrap();
        assert!((far - (2.0 * 12.0 + 3.0)).abs() < 1e-12);
        let low = l.lookup(-1000.0, 1.0).unwrap();
        assert!((low - (2.0 * -9.0 + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn identity_resample_is_bitwise() {
        let l = affine(&[0.1, 0.2, 0.3, 0.4], &[0.5, 1.0, 1.5]);
        assert_eq!(l.interpolate(4, 3).unwrap(), l);
    }

    #[test]
    fn single_axis_is_replicated() {
        let l = Lut::new(vec![0.5], vec![1.0, 2.0], vec![vec![3.0, 4.0]]).unwrap();
        let r = l.interpolate(3, 2).unwrap();
        assert_eq!(r.values(), &[3.0, 4.0, 3.0, 4.0, 3.0, 4.0]);
    }
}
