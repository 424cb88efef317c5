//! Dense sample grids over the unit cube, analytic test functions, ROI windows
//! and the discrete distances used by the convergence checks.
//!
//! A [`Volume`] is the discrete stand-in for an image or signal `f` on
//! `[0,1]^d`, `d` in 1..=3. Each sample is the value of a step function on its
//! cell; the [`GridKind`] says where the sample sits inside that cell.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placement of samples on the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// `x_i = i / (dim - 1)`: both end points of `[0,1]` are samples.
    #[default]
    #[serde(rename = "node")]
    NodeCentered,
    /// `x_i = (i + 0.5) / dim`: one sample at the center of each cell.
    #[serde(rename = "cell")]
    CellCentered,
}

impl GridKind {
    /// Coordinate of sample `i` on an axis of length `len`.
    pub fn coord(self, i: usize, len: usize) -> f64 {
        match self {
            GridKind::NodeCentered => {
                if len <= 1 {
                    0.0
                } else {
                    i as f64 / (len - 1) as f64
                }
            }
            GridKind::CellCentered => (i as f64 + 0.5) / len as f64,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GridKind::NodeCentered => "node",
            GridKind::CellCentered => "cell",
        }
    }
}

/// Dense real-valued grid with 1 to 3 axes, stored row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: Vec<usize>,
    data: Vec<f64>,
    grid: GridKind,
}

impl Volume {
    /// Node-centered volume from raw samples.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::with_grid(dims, data, GridKind::NodeCentered)
    }

    pub fn with_grid(dims: Vec<usize>, data: Vec<f64>, grid: GridKind) -> Result<Self> {
        check_dims(&dims)?;
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::InvalidDims(format!(
                "dims {:?} hold {} samples but {} were given",
                dims,
                expected,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Volume { dims, data, grid })
    }

    pub fn filled(dims: Vec<usize>, value: f64) -> Result<Self> {
        check_dims(&dims)?;
        let n = dims.iter().product();
        Self::new(dims, vec![value; n])
    }

    /// Builds a volume by evaluating `f` at every multi-index.
    pub fn from_index_fn(
        dims: Vec<usize>,
        grid: GridKind,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        check_dims(&dims)?;
        let n: usize = dims.iter().product();
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(n);
        for flat in 0..n {
            unravel_into(flat, &dims, &mut idx);
            data.push(f(&idx));
        }
        Self::with_grid(dims, data, grid)
    }

    /// Same shape and grid, new samples. Callers guarantee the length.
    pub(crate) fn like(&self, data: Vec<f64>) -> Result<Self> {
        Self::with_grid(self.dims.clone(), data, self.grid)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn grid(&self) -> GridKind {
        self.grid
    }

    pub fn set_grid(&mut self, grid: GridKind) {
        self.grid = grid;
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.dims)
    }

    pub fn get(&self, idx: &[usize]) -> Option<f64> {
        if idx.len() != self.dims.len() || idx.iter().zip(&self.dims).any(|(i, d)| i >= d) {
            return None;
        }
        Some(self.data[ravel(idx, &self.dims)])
    }

    /// Coordinate of index `i` along `axis` under this volume's grid kind.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.grid.coord(i, self.dims[axis])
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Elementwise `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Volume, b: f64) -> Result<Volume> {
        same_dims(self, other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        self.like(data)
    }

    pub fn scaled(&self, c: f64) -> Result<Volume> {
        self.like(self.data.iter().map(|v| v * c).collect())
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.len() > 3 {
        return Err(Error::InvalidDims(format!(
            "expected 1 to 3 axes, got {}",
            dims.len()
        )));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidDims(format!("zero-length axis in {dims:?}")));
    }
    Ok(())
}

pub(crate) fn same_dims(a: &Volume, b: &Volume) -> Result<()> {
    if a.dims != b.dims {
        return Err(Error::DimMismatch {
            expected: a.dims.clone(),
            found: b.dims.clone(),
        });
    }
    Ok(())
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * dims[a + 1];
    }
    s
}

pub(crate) fn ravel(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (i, d)| acc * d + i)
}

pub(crate) fn unravel_into(mut flat: usize, dims: &[usize], idx: &mut [usize]) {
    for a in (0..dims.len()).rev() {
        idx[a] = flat % dims[a];
        flat /= dims[a];
    }
}

/// Flat offsets of the first element of every 1-D line along `axis`.
pub(crate) fn line_starts(dims: &[usize], axis: usize) -> impl Iterator<Item = usize> {
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let len = dims[axis];
    (0..outer).flat_map(move |o| (0..inner).map(move |i| o * len * inner + i))
}

/// A deterministic function on `[0,1]^arity` (evaluable anywhere on R^arity).
type SharedFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct AnalyticFn {
    arity: usize,
    name: String,
    f: SharedFn,
}

impl AnalyticFn {
    pub fn new(
        arity: usize,
        name: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(1..=3).contains(&arity) {
            return Err(Error::InvalidParameter(format!(
                "function arity must be 1..=3, got {arity}"
            )));
        }
        Ok(AnalyticFn {
            arity,
            name: name.into(),
            f: Arc::new(f),
        })
    }

    /// `prod_a sin(pi x_a)` in `arity` dimensions.
    pub fn sine_product(arity: usize) -> Result<Self> {
        Self::new(arity, format!("sin_product_{arity}d"), |x: &[f64]| {
            x.iter()
                .map(|&t| (std::f64::consts::PI * t).sin())
                .product()
        })
    }

    pub fn constant(arity: usize, c: f64) -> Result<Self> {
        Self::new(arity, format!("const_{c}"), move |_: &[f64]| c)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for AnalyticFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticFn")
            .field("arity", &self.arity)
            .field("name", &self.name)
            .finish()
    }
}

/// Samples `f` on a grid of shape `dims` over `[0,1]^d`.
pub fn sample_function(f: &AnalyticFn, dims: &[usize], grid: GridKind) -> Result<Volume> {
    if f.arity() != dims.len() {
        return Err(Error::ArityMismatch {
            arity: f.arity(),
            ndim: dims.len(),
        });
    }
    if grid == GridKind::NodeCentered && dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidDims(format!(
            "node-centered sampling needs at least 2 nodes per axis, got {dims:?}"
        )));
    }
    let mut x = vec![0.0; dims.len()];
    Volume::from_index_fn(dims.to_vec(), grid, |idx| {
        for (a, &i) in idx.iter().enumerate() {
            x[a] = grid.coord(i, dims[a]);
        }
        f.eval(&x)
    })
}

/// Named half-open rectangular window `[r0,r1) x [c0,c1)` on a 2-D slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub name: String,
    pub rows: (usize, usize),
    pub cols: (usize, usize),
}

impl Roi {
    pub fn new(name: impl Into<String>, rows: (usize, usize), cols: (usize, usize)) -> Self {
        Roi {
            name: name.into(),
            rows,
            cols,
        }
    }

    pub fn height(&self) -> usize {
        self.rows.1.saturating_sub(self.rows.0)
    }

    pub fn width(&self) -> usize {
        self.cols.1.saturating_sub(self.cols.0)
    }

    pub fn fits(&self, height: usize, width: usize) -> bool {
        self.rows.0 < self.rows.1
            && self.rows.1 <= height
            && self.cols.0 < self.cols.1
            && self.cols.1 <= width
    }
}

/// Copies the ROI window out of a 2-D slice.
pub fn extract_roi(slice: &Volume, roi: &Roi) -> Result<Volume> {
    if slice.ndim() != 2 {
        return Err(Error::InvalidDims(format!(
            "ROI extraction needs a 2-D slice, got {:?}",
            slice.dims()
        )));
    }
    let (h, w) = (slice.dims[0], slice.dims[1]);
    if !roi.fits(h, w) {
        return Err(Error::RoiOutOfBounds {
            name: roi.name.clone(),
            r0: roi.rows.0,
            r1: roi.rows.1,
            c0: roi.cols.0,
            c1: roi.cols.1,
            height: h,
            width: w,
        });
    }
    let mut data = Vec::with_capacity(roi.height() * roi.width());
    for r in roi.rows.0..roi.rows.1 {
        data.extend_from_slice(&slice.data[r * w + roi.cols.0..r * w + roi.cols.1]);
    }
    Volume::with_grid(vec![roi.height(), roi.width()], data, slice.grid)
}

/// The 2-D slice `volume[index, :, :]` of a 3-D volume.
pub fn mid_slice(volume: &Volume, index: usize) -> Result<Volume> {
    if volume.ndim() != 3 {
        return Err(Error::InvalidDims(format!(
            "slicing needs a 3-D volume, got {:?}",
            volume.dims()
        )));
    }
    let depth = volume.dims[0];
    if index >= depth {
        return Err(Error::IndexOutOfRange { index, len: depth });
    }
    let plane = volume.dims[1] * volume.dims[2];
    let data = volume.data[index * plane..(index + 1) * plane].to_vec();
    Volume::with_grid(volume.dims[1..].to_vec(), data, volume.grid)
}

/// Discrete norm selector for [`lp_distance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

/// Grid-measure-normalized `L^p` distance: `((1/N) sum |a-b|^p)^(1/p)`, or the
/// maximum absolute difference for `Norm::Inf`.
pub fn lp_distance(a: &Volume, b: &Volume, p: Norm) -> Result<f64> {
    same_dims(a, b)?;
    let diffs = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs());
    let n = a.len() as f64;
    Ok(match p {
        Norm::L1 => diffs.sum::<f64>() / n,
        Norm::L2 => (diffs.map(|d| d * d).sum::<f64>() / n).sqrt(),
        Norm::Inf => diffs.fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp4() -> Volume {
        Volume::from_index_fn(vec![4, 4], GridKind::NodeCentered, |i| {
            (i[0] * 4 + i[1]) as f64
        })
        .unwrap()
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(Volume::new(vec![2, 2], vec![0.0; 3]).is_err());
        assert!(Volume::new(vec![], vec![]).is_err());
        assert!(Volume::new(vec![1, 1, 1, 1], vec![0.0]).is_err());
        assert!(matches!(
            Volume::new(vec![2], vec![0.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
    }

    #[test]
    fn sample_constant_and_sine() {
        let one = AnalyticFn::constant(3, 1.0).unwrap();
        let v = sample_function(&one, &[4, 4, 4], GridKind::NodeCentered).unwrap();
        assert!(v.data().iter().all(|&x| x == 1.0));

        let f = AnalyticFn::sine_product(3).unwrap();
        let v = sample_function(&f, &[5, 5, 5], GridKind::NodeCentered).unwrap();
        for j in 0..5 {
            for k in 0..5 {
                assert_eq!(v.get(&[0, j, k]).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn sample_identity_on_nodes() {
        let f = AnalyticFn::new(1, "x", |x: &[f64]| x[0]).unwrap();
        let v = sample_function(&f, &[5], GridKind::NodeCentered).unwrap();
        assert_eq!(v.data(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let c = sample_function(&f, &[4], GridKind::CellCentered).unwrap();
        assert_eq!(c.data(), &[0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn sample_arity_mismatch() {
        let f = AnalyticFn::sine_product(2).unwrap();
        assert!(matches!(
            sample_function(&f, &[4, 4, 4], GridKind::NodeCentered),
            Err(Error::ArityMismatch { arity: 2, ndim: 3 })
        ));
        assert!(sample_function(&f, &[1, 4], GridKind::NodeCentered).is_err());
    }

    #[test]
    fn roi_extraction() {
        let s = ramp4();
        let full = extract_roi(&s, &Roi::new("all", (0, 4), (0, 4))).unwrap();
        assert_eq!(full, s);
        let inner = extract_roi(&s, &Roi::new("inner", (1, 3), (1, 3))).unwrap();
        assert_eq!(inner.dims(), &[2, 2]);
        assert_eq!(inner.data(), &[5.0, 6.0, 9.0, 10.0]);
        assert!(matches!(
            extract_roi(&s, &Roi::new("oob", (3, 5), (0, 2))),
            Err(Error::RoiOutOfBounds { .. })
        ));
        assert!(extract_roi(&s, &Roi::new("empty", (2, 2), (0, 2))).is_err());
    }

    #[test]
    fn slicing() {
        let v =
            Volume::from_index_fn(vec![64, 8, 8], GridKind::NodeCentered, |i| i[0] as f64).unwrap();
        let s = mid_slice(&v, 32).unwrap();
        assert_eq!(s.dims(), &[8, 8]);
        assert!(s.data().iter().all(|&x| x == 32.0));
        assert!(matches!(
            mid_slice(&v, 64),
            Err(Error::IndexOutOfRange { index: 64, len: 64 })
        ));
        let single = Volume::filled(vec![1, 3, 2], 7.0).unwrap();
        assert_eq!(mid_slice(&single, 0).unwrap().dims(), &[3, 2]);
    }

    #[test]
    fn distances() {
        let a = Volume::new(vec![2], vec![0.0, 0.0]).unwrap();
        let b = Volume::new(vec![2], vec![1.0, 1.0]).unwrap();
        assert_eq!(lp_distance(&a, &b, Norm::L2).unwrap(), 1.0);
        assert_eq!(lp_distance(&a, &a, Norm::L1).unwrap(), 0.0);
        let c = Volume::new(vec![2], vec![0.0, 2.0]).unwrap();
        assert_eq!(lp_distance(&c, &a, Norm::Inf).unwrap(), 2.0);
        let d = Volume::new(vec![3], vec![0.0; 3]).unwrap();
        assert!(matches!(
            lp_distance(&a, &d, Norm::L2),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn line_starts_cover_all_lines() {
        let dims = [3, 4, 5];
        let st = strides(&dims);
        for axis in 0..3 {
            let starts: Vec<_> = line_starts(&dims, axis).collect();
            assert_eq!(starts.len(), 60 / dims[axis]);
            let mut seen = vec![false; 60];
            for s in starts {
                for k in 0..dims[axis] {
                    let f = s + k * st[axis];
                    assert!(!seen[f]);
                    seen[f] = true;
                }
            }
            assert!(seen.into_iter().all(|b| b));
        }
    }
}
