//! Analytic 2-D Shepp-Logan phantom, Catmull-Rom resizing, slice stacking
//! and the six named ROI windows of the speckle study.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{GridKind, Roi, Volume};

/// One additive ellipse in phantom coordinates `[-1,1]^2` (y pointing up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub intensity: f64,
    pub semi_a: f64,
    pub semi_b: f64,
    pub x0: f64,
    pub y0: f64,
    /// Counter-clockwise rotation in radians.
    pub theta: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.x0, y - self.y0);
        let (s, c) = self.theta.sin_cos();
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.semi_a).powi(2) + (v / self.semi_b).powi(2) <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Contrast {
    /// Toft's low-contrast intensities (1, -0.8, -0.2, -0.2, 0.1 x 6).
    #[default]
    Modified,
    /// The original table (2, -0.98, -0.02, -0.02, 0.01 x 6).
    Original,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub ellipses: Vec<Ellipse>,
    pub clip: bool,
}

// (a, b, x0, y0, phi in degrees)
const GEOMETRY: [(f64, f64, f64, f64, f64); 10] = [
    (0.69, 0.92, 0.0, 0.0, 0.0),
    (0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (0.1100, 0.3100, 0.22, 0.0, -18.0),
    (0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.0230, 0.0460, 0.06, -0.605, 0.0),
];

const MODIFIED: [f64; 10] = [1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];
const ORIGINAL: [f64; 10] = [2.0, -0.98, -0.02, -0.02, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01];

impl PhantomSpec {
    pub fn shepp_logan(contrast: Contrast) -> Self {
        let intensities = match contrast {
            Contrast::Modified => MODIFIED,
            Contrast::Original => ORIGINAL,
        };
        let ellipses = GEOMETRY
            .iter()
            .zip(intensities)
            .map(|(&(a, b, x0, y0, phi), intensity)| Ellipse {
                intensity,
                semi_a: a,
                semi_b: b,
                x0,
                y0,
                theta: phi.to_radians(),
            })
            .collect();
        PhantomSpec {
            ellipses,
            clip: true,
        }
    }

    /// Sum of the intensities of every ellipse containing `(x, y)`.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        let v: f64 = self
            .ellipses
            .iter()
            .filter(|e| e.contains(x, y))
            .map(|e| e.intensity)
            .sum();
        if self.clip {
            v.clamp(0.0, 1.0)
        } else {
            v
        }
    }

    /// Rasterizes on a `size x size` grid. Pixel `(r, c)` samples the point
    /// `x = (2c + 1 - size) / size`, `y = -(2r + 1 - size) / size`, so row 0 is
    /// the top of the image and columns mirror exactly about the vertical axis.
    pub fn render(&self, size: usize) -> Result<Volume> {
        if size < 8 {
            return Err(Error::InvalidParameter(format!(
                "phantom size must be >= 8, got {size}"
            )));
        }
        let s = size as f64;
        Volume::from_index_fn(vec![size, size], GridKind::CellCentered, |i| {
            let x = (2.0 * i[1] as f64 + 1.0 - s) / s;
            let y = -(2.0 * i[0] as f64 + 1.0 - s) / s;
            self.value_at(x, y)
        })
    }
}

/// Modified Shepp-Logan phantom clipped to `[0, 1]`.
pub fn shepp_logan_2d(size: usize) -> Result<Volume> {
    PhantomSpec::shepp_logan(Contrast::Modified).render(size)
}

fn catmull_rom_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Taps and weights for every destination index, half-pixel aligned.
fn resample_plan(src: usize, dst: usize) -> Vec<([usize; 4], [f64; 4])> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let s = (d as f64 + 0.5) * scale - 0.5;
            let base = s.floor();
            let w = catmull_rom_weights(s - base);
            let mut taps = [0usize; 4];
            for (k, tap) in taps.iter_mut().enumerate() {
                *tap = (base as isize - 1 + k as isize).clamp(0, src as isize - 1) as usize;
            }
            (taps, w)
        })
        .collect()
}

/// Catmull-Rom bicubic resampling with clamp-to-edge, rows then columns.
pub fn resize_bicubic(img: &Volume, new_h: usize, new_w: usize) -> Result<Volume> {
    if img.ndim() != 2 {
        return Err(Error::InvalidDims(format!(
            "resize needs a 2-D image, got {:?}",
            img.dims()
        )));
    }
    let (h, w) = (img.dims()[0], img.dims()[1]);
    if h < 4 || w < 4 {
        return Err(Error::InvalidDims(format!(
            "source {h}x{w} smaller than 4x4"
        )));
    }
    if new_h < 2 || new_w < 2 {
        return Err(Error::InvalidParameter(format!(
            "target {new_h}x{new_w} smaller than 2x2"
        )));
    }
    let src = img.data();
    let cols = resample_plan(w, new_w);
    let mut tmp = vec![0.0; h * new_w];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        for (c, (taps, wt)) in cols.iter().enumerate() {
            tmp[r * new_w + c] = (0..4).map(|k| wt[k] * row[taps[k]]).sum();
        }
    }
    let rows = resample_plan(h, new_h);
    let mut out = vec![0.0; new_h * new_w];
    for (r, (taps, wt)) in rows.iter().enumerate() {
        for c in 0..new_w {
            out[r * new_w + c] = (0..4).map(|k| wt[k] * tmp[taps[k] * new_w + c]).sum();
        }
    }
    Volume::with_grid(vec![new_h, new_w], out, img.grid())
}

/// `depth` copies of a 2-D slice stacked along a new leading axis.
pub fn stack_volume(slice: &Volume, depth: usize) -> Result<Volume> {
    if slice.ndim() != 2 {
        return Err(Error::InvalidDims(format!(
            "stacking needs a 2-D slice, got {:?}",
            slice.dims()
        )));
    }
    if depth < 1 {
        return Err(Error::InvalidParameter("depth must be >= 1".into()));
    }
    let mut data = Vec::with_capacity(slice.len() * depth);
    for _ in 0..depth {
        data.extend_from_slice(slice.data());
    }
    let dims = vec![depth, slice.dims()[0], slice.dims()[1]];
    Volume::with_grid(dims, data, slice.grid())
}

/// Parameters of the synthetic phantom volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomVolumeConfig {
    /// Raster size before resizing (the common library phantom is 400x400).
    pub source_size: usize,
    pub size: usize,
    pub depth: usize,
    pub contrast: Contrast,
}

impl Default for PhantomVolumeConfig {
    fn default() -> Self {
        PhantomVolumeConfig {
            source_size: 400,
            size: 128,
            depth: 64,
            contrast: Contrast::Modified,
        }
    }
}

/// Render at `source_size`, resize to `size x size`, stack `depth` copies.
pub fn phantom_volume(cfg: &PhantomVolumeConfig) -> Result<Volume> {
    let base = PhantomSpec::shepp_logan(cfg.contrast).render(cfg.source_size)?;
    let slice = if cfg.source_size == cfg.size {
        base
    } else {
        resize_bicubic(&base, cfg.size, cfg.size)?
    };
    stack_volume(&slice, cfg.depth)
}

/// The six ROI windows of the speckle study, rows first.
pub fn roi_catalog() -> Vec<Roi> {
    vec![
        Roi::new("White Matter (WM)", (50, 70), (50, 70)),
        Roi::new("Tumor ROI", (30, 50), (80, 100)),
        Roi::new("CSF", (10, 30), (10, 30)),
        Roi::new("Liver Parenchyma", (70, 90), (30, 50)),
        Roi::new("Kidney Edge", (80, 100), (90, 110)),
        Roi::new("Aorta", (40, 60), (10, 30)),
    ]
}
