//! Discrete approximation operators on volumes: separable Gaussian, bilateral,
//! the sampling-Kantorovich operator in its cell-average and point-sample
//! forms, and repeated Gaussian smoothing.
//!
//! Gaussian and bilateral widths are in grid-index units. The Kantorovich
//! operators work in domain units on `[0,1]^d` with resolution `n`, so one
//! cell is `1/n` wide.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{discrete_gaussian_stencil, stencil_half_width, DiscreteStencil, Kernel};
use crate::volume::{line_starts, same_dims, unravel_into, AnalyticFn, GridKind, Volume};

/// How samples beyond the grid are synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    /// Half-sample symmetric: `... c b a | a b c ... x y z | z y x ...`.
    #[default]
    Reflect,
    /// Repeat the edge sample.
    Clamp,
    /// Wrap around.
    Periodic,
}

impl BoundaryPolicy {
    /// Maps a possibly out-of-range index onto `0..n`.
    pub fn index(self, i: isize, n: usize) -> usize {
        let n_i = n as isize;
        match self {
            BoundaryPolicy::Clamp => i.clamp(0, n_i - 1) as usize,
            BoundaryPolicy::Periodic => i.rem_euclid(n_i) as usize,
            BoundaryPolicy::Reflect => {
                let m = i.rem_euclid(2 * n_i);
                (if m < n_i { m } else { 2 * n_i - 1 - m }) as usize
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryPolicy::Reflect => "reflect",
            BoundaryPolicy::Clamp => "clamp",
            BoundaryPolicy::Periodic => "periodic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilateralParams {
    pub sigma_spatial: f64,
    pub sigma_range: f64,
}

impl BilateralParams {
    pub fn new(sigma_spatial: f64, sigma_range: f64) -> Result<Self> {
        for (name, s) in [
            ("sigma_spatial", sigma_spatial),
            ("sigma_range", sigma_range),
        ] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {s}"
                )));
            }
        }
        Ok(BilateralParams {
            sigma_spatial,
            sigma_range,
        })
    }
}

fn convolve_axis(
    v: &Volume,
    axis: usize,
    stencil: &DiscreteStencil,
    bp: BoundaryPolicy,
) -> Vec<f64> {
    let dims = v.dims();
    let n = dims[axis];
    let stride = v.strides()[axis];
    let k = stencil.half_width() as isize;
    let w = stencil.weights();
    let src = v.data();
    let mut out = vec![0.0; src.len()];
    let mut line = vec![0.0; n];
    for start in line_starts(dims, axis) {
        for (j, slot) in line.iter_mut().enumerate() {
            *slot = src[start + j * stride];
        }
        for j in 0..n as isize {
            let mut acc = 0.0;
            for (t, wt) in (-k..=k).zip(w) {
                acc += wt * line[bp.index(j - t, n)];
            }
            out[start + j as usize * stride] = acc;
        }
    }
    out
}

/// Separable discrete Gaussian smoothing, `sigma` in grid units.
pub fn gaussian_filter(v: &Volume, sigma: f64, bp: BoundaryPolicy) -> Result<Volume> {
    let stencil = discrete_gaussian_stencil(sigma)?;
    let mut cur = v.clone();
    for axis in 0..v.ndim() {
        let data = convolve_axis(&cur, axis, &stencil, bp);
        cur = cur.like(data)?;
    }
    Ok(cur)
}

/// `gaussian_filter` applied `iterations` times.
pub fn iterated_gaussian(
    v: &Volume,
    sigma: f64,
    iterations: usize,
    bp: BoundaryPolicy,
) -> Result<Volume> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be >= 1".into()));
    }
    let mut cur = gaussian_filter(v, sigma, bp)?;
    for _ in 1..iterations {
        cur = gaussian_filter(&cur, sigma, bp)?;
    }
    Ok(cur)
}

/// Bilateral filter over the full `(2K+1)^d` window, `K = max(floor(3 sigma_s), 1)`.
///
/// `out[x] = sum_k v[x+k] w_s(k) w_r(v[x] - v[x+k]) / sum_k w_s(k) w_r(..)` with
/// Gaussian spatial weight on the squared Euclidean offset and Gaussian range
/// weight on the intensity difference.
pub fn bilateral_filter(v: &Volume, p: BilateralParams, bp: BoundaryPolicy) -> Result<Volume> {
    let p = BilateralParams::new(p.sigma_spatial, p.sigma_range)?;
    let dims = v.dims().to_vec();
    let nd = dims.len();
    let k = stencil_half_width(p.sigma_spatial) as isize;
    let width = (2 * k + 1) as usize;
    let strides = v.strides();

    // Window offsets (per axis, shifted by +K) and their spatial weights.
    let mut offsets: Vec<([usize; 3], f64)> = Vec::with_capacity(width.pow(nd as u32));
    let mut o = [0usize; 3];
    let count = width.pow(nd as u32);
    for flat in 0..count {
        let mut r = flat;
        let mut d2 = 0.0;
        for a in (0..nd).rev() {
            o[a] = r % width;
            r /= width;
            let off = o[a] as f64 - k as f64;
            d2 += off * off;
        }
        let ws = (-d2 / (2.0 * p.sigma_spatial * p.sigma_spatial)).exp();
        offsets.push((o, ws));
    }

    // ext[a][i + K] = in-range index for position i in -K..n+K.
    let ext: Vec<Vec<usize>> = dims
        .iter()
        .map(|&n| {
            (-k..n as isize + k)
                .map(|i| bp.index(i, n))
                .collect::<Vec<_>>()
        })
        .collect();

    let inv_2r2 = 1.0 / (2.0 * p.sigma_range * p.sigma_range);
    let src = v.data();
    let out: Vec<f64> = (0..src.len())
        .into_par_iter()
        .map(|flat| {
            let mut idx = [0usize; 3];
            unravel_into(flat, &dims, &mut idx[..nd]);
            let center = src[flat];
            let mut num = 0.0;
            let mut den = 0.0;
            for (off, ws) in &offsets {
                let mut nb = 0;
                for a in 0..nd {
                    nb += ext[a][idx[a] + off[a]] * strides[a];
                }
                let val = src[nb];
                let d = center - val;
                let w = ws * (-d * d * inv_2r2).exp();
                num += w * val;
                den += w;
            }
            num / den
        })
        .collect();
    v.like(out)
}

/// Where an operator is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalPoints {
    /// Every node of a grid over `[0,1]^d`; the result has that shape.
    Grid { dims: Vec<usize>, grid: GridKind },
    /// Arbitrary points; the result is a 1-D volume in the given order.
    Scattered(Vec<Vec<f64>>),
}

impl EvalPoints {
    fn ndim(&self) -> Option<usize> {
        match self {
            EvalPoints::Grid { dims, .. } => Some(dims.len()),
            EvalPoints::Scattered(pts) => pts.first().map(Vec::len),
        }
    }

    fn points(&self) -> Vec<Vec<f64>> {
        match self {
            EvalPoints::Scattered(pts) => pts.clone(),
            EvalPoints::Grid { dims, grid } => {
                let n: usize = dims.iter().product();
                let mut idx = vec![0; dims.len()];
                (0..n)
                    .map(|flat| {
                        unravel_into(flat, dims, &mut idx);
                        idx.iter()
                            .zip(dims)
                            .map(|(&i, &d)| grid.coord(i, d))
                            .collect()
                    })
                    .collect()
            }
        }
    }

    fn wrap(&self, values: Vec<f64>) -> Result<Volume> {
        match self {
            EvalPoints::Grid { dims, grid } => Volume::with_grid(dims.clone(), values, *grid),
            EvalPoints::Scattered(_) => Volume::new(vec![values.len()], values),
        }
    }

    fn validate(&self, nd: usize) -> Result<()> {
        match self.ndim() {
            None => Err(Error::InvalidParameter("no evaluation points".into())),
            Some(d) if d != nd => Err(Error::ArityMismatch { arity: nd, ndim: d }),
            Some(_) => match self {
                EvalPoints::Scattered(pts) if pts.iter().any(|p| p.len() != nd) => Err(
                    Error::InvalidParameter("scattered points of mixed dimension".into()),
                ),
                _ => Ok(()),
            },
        }
    }
}

/// Input of the cell-average operator.
#[derive(Debug, Clone, Copy)]
pub enum SkSource<'a> {
    /// Cell means on an `n^d` cell-centered grid (midpoint rule); cells past
    /// the edge are filled by half-sample reflection.
    Samples(&'a Volume),
    /// An analytic function, integrated over each cell with a 4-point
    /// Gauss-Legendre rule per axis.
    Function(&'a AnalyticFn),
}

const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Mean of `f` over the cell `prod [k_a/n, (k_a+1)/n)`.
fn gl4_cell_mean(f: &AnalyticFn, cell: &[i64], n: usize) -> f64 {
    gl4_mean(cell, n, |x| f.eval(x))
}

/// Mean of `g` over the cell `prod [k_a/n, (k_a+1)/n)` by a tensor 4-point
/// Gauss-Legendre rule.
pub(crate) fn gl4_mean(cell: &[i64], n: usize, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
    let d = cell.len();
    let h = 1.0 / n as f64;
    let mut x = vec![0.0; d];
    let mut acc = 0.0;
    for q in 0..4usize.pow(d as u32) {
        let mut r = q;
        let mut w = 1.0;
        for a in (0..d).rev() {
            let k = r % 4;
            r /= 4;
            x[a] = (cell[a] as f64 + 0.5) * h + 0.5 * h * GL4_NODES[k];
            w *= 0.5 * GL4_WEIGHTS[k];
        }
        acc += w * g(&x);
    }
    acc
}

/// Weights of each axis for one evaluation point.
type AxisTerms = Vec<Vec<(i64, f64)>>;

/// Sums `prod_a w_a * table(idx)` over the tensor product of per-axis terms.
fn tensor_sum(terms: &AxisTerms, mut value: impl FnMut(&[i64]) -> f64) -> f64 {
    let d = terms.len();
    if terms.iter().any(Vec::is_empty) {
        return 0.0;
    }
    let mut pos = vec![0usize; d];
    let mut idx = vec![0i64; d];
    let mut acc = 0.0;
    loop {
        let mut w = 1.0;
        for a in 0..d {
            let (i, wa) = terms[a][pos[a]];
            idx[a] = i;
            w *= wa;
        }
        acc += w * value(&idx);
        let mut a = d;
        loop {
            if a == 0 {
                return acc;
            }
            a -= 1;
            pos[a] += 1;
            if pos[a] < terms[a].len() {
                break;
            }
            pos[a] = 0;
        }
    }
}

/// Sampling-Kantorovich operator with cell averages:
/// `S_n f(x) = sum_k xi(n x - k) * n^d * integral of f over prod [k/n, (k+1)/n)`.
pub fn sk_cell_average(
    source: SkSource<'_>,
    n: usize,
    kernel: &Kernel,
    points: &EvalPoints,
) -> Result<Volume> {
    if n < 1 {
        return Err(Error::InvalidParameter("resolution n must be >= 1".into()));
    }
    let nd = match source {
        SkSource::Samples(v) => {
            if v.dims().iter().any(|&d| d != n) {
                return Err(Error::DimMismatch {
                    expected: vec![n; v.ndim()],
                    found: v.dims().to_vec(),
                });
            }
            if v.grid() != GridKind::CellCentered {
                return Err(Error::InvalidParameter(
                    "cell-average operator needs cell-centered samples".into(),
                ));
            }
            v.ndim()
        }
        SkSource::Function(f) => f.arity(),
    };
    points.validate(nd)?;
    let pts = points.points();
    let nf = n as f64;
    let terms: Vec<AxisTerms> = pts
        .iter()
        .map(|p| p.iter().map(|&x| kernel.shifts(nf * x).collect()).collect())
        .collect();

    // Dense table of cell means over the bounding box of referenced cells.
    let mut lo = vec![i64::MAX; nd];
    let mut hi = vec![i64::MIN; nd];
    for t in &terms {
        for a in 0..nd {
            for &(k, _) in &t[a] {
                lo[a] = lo[a].min(k);
                hi[a] = hi[a].max(k);
            }
        }
    }
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return points.wrap(vec![0.0; pts.len()]);
    }
    let tdims: Vec<usize> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| (h - l + 1) as usize)
        .collect();
    let total: usize = tdims.iter().product();
    let table: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rel = vec![0usize; nd];
            unravel_into(flat, &tdims, &mut rel);
            let cell: Vec<i64> = rel.iter().zip(&lo).map(|(&r, &l)| l + r as i64).collect();
            match source {
                SkSource::Samples(v) => {
                    let dims = v.dims();
                    let flat_src = cell.iter().zip(dims).fold(0usize, |acc, (&c, &d)| {
                        acc * d + BoundaryPolicy::Reflect.index(c as isize, d)
                    });
                    v.data()[flat_src]
                }
                SkSource::Function(f) => gl4_cell_mean(f, &cell, n),
            }
        })
        .collect();

    let values: Vec<f64> = terms
        .par_iter()
        .map(|t| {
            tensor_sum(t, |idx| {
                let flat = idx
                    .iter()
                    .zip(&lo)
                    .zip(&tdims)
                    .fold(0usize, |acc, ((&i, &l), &d)| acc * d + (i - l) as usize);
                table[flat]
            })
        })
        .collect();
    points.wrap(values)
}

/// Point-sample tensor quasi-interpolant
/// `K_n f(x) = sum_{i in 0..=n}^d f(i/n) prod_a phi(n x_a - i_a)`
/// from samples on the `(n+1)^d` node lattice.
pub fn sk_point_sample(
    samples: &Volume,
    n: usize,
    kernel: &Kernel,
    points: &EvalPoints,
) -> Result<Volume> {
    if n < 1 {
        return Err(Error::InvalidParameter("resolution n must be >= 1".into()));
    }
    if samples.dims().iter().any(|&d| d != n + 1) {
        return Err(Error::DimMismatch {
            expected: vec![n + 1; samples.ndim()],
            found: samples.dims().to_vec(),
        });
    }
    if samples.grid() != GridKind::NodeCentered {
        return Err(Error::InvalidParameter(
            "point-sample operator needs node-centered samples".into(),
        ));
    }
    let nd = samples.ndim();
    points.validate(nd)?;
    let nf = n as f64;
    let dims = samples.dims();
    let data = samples.data();
    let values: Vec<f64> = points
        .points()
        .par_iter()
        .map(|p| {
            let terms: AxisTerms = p
                .iter()
                .map(|&x| {
                    kernel
                        .shifts(nf * x)
                        .filter(|&(i, _)| (0..=n as i64).contains(&i))
                        .collect()
                })
                .collect();
            tensor_sum(&terms, |idx| {
                let flat = idx
                    .iter()
                    .zip(dims)
                    .fold(0usize, |acc, (&i, &d)| acc * d + i as usize);
                data[flat]
            })
        })
        .collect();
    points.wrap(values)
}

/// `|approx - reference|` elementwise.
pub fn pointwise_error(approx: &Volume, reference: &Volume) -> Result<Volume> {
    same_dims(approx, reference)?;
    approx.like(
        approx
            .data()
            .iter()
            .zip(reference.data())
            .map(|(a, b)| (a - b).abs())
            .collect(),
    )
}
