//! Orthonormal periodic discrete wavelet transform in 1 to 3 dimensions,
//! hard/soft coefficient thresholding and the threshold-and-reconstruct
//! denoiser.
//!
//! Each level filters and downsamples every axis of the current approximation
//! band, producing `2^d` subbands. Subbands are labelled per axis with `L`
//! (lowpass) or `H` (highpass), axis 0 first; the all-`L` band is recursed on.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::gl4_mean;
use crate::volume::{line_starts, unravel_into, AnalyticFn, GridKind, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WaveletFamily {
    #[default]
    #[serde(rename = "haar")]
    Haar,
    /// Four-tap Daubechies filter (two vanishing moments).
    #[serde(rename = "db4")]
    Daubechies4,
}

impl WaveletFamily {
    pub fn lowpass(self) -> Vec<f64> {
        match self {
            WaveletFamily::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            WaveletFamily::Daubechies4 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * 2f64.sqrt();
                vec![
                    (1.0 + s3) / d,
                    (3.0 + s3) / d,
                    (3.0 - s3) / d,
                    (1.0 - s3) / d,
                ]
            }
        }
    }

    /// Quadrature mirror of the lowpass: `g[i] = (-1)^i h[L-1-i]`.
    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l)
            .map(|i| {
                if i % 2 == 0 {
                    h[l - 1 - i]
                } else {
                    -h[l - 1 - i]
                }
            })
            .collect()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WaveletFamily::Haar => "haar",
            WaveletFamily::Daubechies4 => "db4",
        }
    }
}

impl FromStr for WaveletFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(WaveletFamily::Haar),
            "db4" => Ok(WaveletFamily::Daubechies4),
            _ => Err(Error::Config(format!("unknown wavelet family {s:?}"))),
        }
    }
}

/// Subband orientation: bit `a` set means highpass along axis `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Orientation {
    ndim: u8,
    mask: u8,
}

impl Orientation {
    pub fn new(ndim: usize, mask: u8) -> Self {
        Orientation {
            ndim: ndim as u8,
            mask,
        }
    }

    pub fn is_approx(&self) -> bool {
        self.mask == 0
    }

    pub fn is_high(&self, axis: usize) -> bool {
        self.mask & (1 << axis) != 0
    }

    /// All `2^d - 1` detail orientations for `ndim` axes.
    pub fn details(ndim: usize) -> impl Iterator<Item = Orientation> {
        (1..(1u8 << ndim)).map(move |m| Orientation::new(ndim, m))
    }

    /// The all-highpass band (`H`, `HH`, `HHH`).
    pub fn finest_diagonal(ndim: usize) -> Orientation {
        Orientation::new(ndim, (1u8 << ndim) - 1)
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in 0..self.ndim as usize {
            f.write_str(if self.is_high(a) { "H" } else { "L" })?;
        }
        Ok(())
    }
}

/// `J`-level pyramid: the coarsest approximation band plus detail bands keyed
/// by `(level, orientation)`, level 1 being the finest.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    levels: usize,
    approx: Volume,
    details: BTreeMap<(usize, Orientation), Volume>,
    input_dims: Vec<usize>,
}

impl WaveletDecomposition {
    pub fn new(
        levels: usize,
        approx: Volume,
        details: BTreeMap<(usize, Orientation), Volume>,
        input_dims: Vec<usize>,
    ) -> Self {
        WaveletDecomposition {
            levels,
            approx,
            details,
            input_dims,
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn approx(&self) -> &Volume {
        &self.approx
    }

    pub fn details(&self) -> &BTreeMap<(usize, Orientation), Volume> {
        &self.details
    }

    pub fn detail(&self, level: usize, o: Orientation) -> Option<&Volume> {
        self.details.get(&(level, o))
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn coefficient_count(&self) -> usize {
        self.approx.len() + self.details.values().map(Volume::len).sum::<usize>()
    }

    pub fn energy(&self) -> f64 {
        let sq = |v: &Volume| v.data().iter().map(|x| x * x).sum::<f64>();
        sq(&self.approx) + self.details.values().map(sq).sum::<f64>()
    }

    /// Applies `f` to every detail coefficient.
    pub fn map_details(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let details = self
            .details
            .iter()
            .map(|(k, v)| Ok((*k, v.like(v.data().iter().map(|&x| f(x)).collect())?)))
            .collect::<Result<_>>()?;
        Ok(WaveletDecomposition {
            details,
            ..self.clone()
        })
    }

    pub fn zero_details(&self) -> Result<Self> {
        self.map_details(|_| 0.0)
    }
}

fn analyze_axis(data: &mut [f64], dims: &[usize], axis: usize, h: &[f64], g: &[f64]) {
    let n = dims[axis];
    let half = n / 2;
    let stride: usize = dims[axis + 1..].iter().product();
    let mut line = vec![0.0; n];
    for start in line_starts(dims, axis) {
        for (j, slot) in line.iter_mut().enumerate() {
            *slot = data[start + j * stride];
        }
        for k in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for (t, (hv, gv)) in h.iter().zip(g).enumerate() {
                let x = line[(2 * k + t) % n];
                a += hv * x;
                d += gv * x;
            }
            data[start + k * stride] = a;
            data[start + (half + k) * stride] = d;
        }
    }
}

fn synthesize_axis(data: &mut [f64], dims: &[usize], axis: usize, h: &[f64], g: &[f64]) {
    let n = dims[axis];
    let half = n / 2;
    let stride: usize = dims[axis + 1..].iter().product();
    let mut line = vec![0.0; n];
    for start in line_starts(dims, axis) {
        line.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..half {
            let a = data[start + k * stride];
            let d = data[start + (half + k) * stride];
            for (t, (hv, gv)) in h.iter().zip(g).enumerate() {
                line[(2 * k + t) % n] += hv * a + gv * d;
            }
        }
        for (j, x) in line.iter().enumerate() {
            data[start + j * stride] = *x;
        }
    }
}

/// Copies the orthant `o` (half-size block) out of a level array.
fn take_band(data: &[f64], dims: &[usize], o: Orientation) -> Vec<f64> {
    let half: Vec<usize> = dims.iter().map(|d| d / 2).collect();
    let n: usize = half.iter().product();
    let mut out = Vec::with_capacity(n);
    let mut idx = vec![0usize; dims.len()];
    for flat in 0..n {
        crate::volume::unravel_into(flat, &half, &mut idx);
        let src = idx.iter().enumerate().fold(0usize, |acc, (a, &i)| {
            acc * dims[a] + i + if o.is_high(a) { half[a] } else { 0 }
        });
        out.push(data[src]);
    }
    out
}

fn put_band(data: &mut [f64], dims: &[usize], o: Orientation, band: &[f64]) {
    let half: Vec<usize> = dims.iter().map(|d| d / 2).collect();
    let mut idx = vec![0usize; dims.len()];
    for (flat, &x) in band.iter().enumerate() {
        crate::volume::unravel_into(flat, &half, &mut idx);
        let dst = idx.iter().enumerate().fold(0usize, |acc, (a, &i)| {
            acc * dims[a] + i + if o.is_high(a) { half[a] } else { 0 }
        });
        data[dst] = x;
    }
}

/// Multilevel forward transform with periodic extension.
pub fn dwt(v: &Volume, fam: WaveletFamily, levels: usize) -> Result<WaveletDecomposition> {
    if levels < 1 {
        return Err(Error::InvalidParameter(
            "wavelet levels must be >= 1".into(),
        ));
    }
    let block = 1usize << levels;
    if let Some(&len) = v.dims().iter().find(|&&d| d % block != 0) {
        return Err(Error::NonDyadic { len, levels });
    }
    let (h, g) = (fam.lowpass(), fam.highpass());
    let nd = v.ndim();
    let mut details = BTreeMap::new();
    let mut cur = v.clone();
    for level in 1..=levels {
        let dims = cur.dims().to_vec();
        let mut data = cur.data().to_vec();
        for axis in 0..nd {
            analyze_axis(&mut data, &dims, axis, &h, &g);
        }
        let half: Vec<usize> = dims.iter().map(|d| d / 2).collect();
        for o in Orientation::details(nd) {
            let band = Volume::with_grid(half.clone(), take_band(&data, &dims, o), v.grid())?;
            details.insert((level, o), band);
        }
        cur = Volume::with_grid(
            half,
            take_band(&data, &dims, Orientation::new(nd, 0)),
            v.grid(),
        )?;
    }
    Ok(WaveletDecomposition {
        levels,
        approx: cur,
        details,
        input_dims: v.dims().to_vec(),
    })
}

/// Inverse of [`dwt`].
pub fn idwt(dec: &WaveletDecomposition, fam: WaveletFamily) -> Result<Volume> {
    let nd = dec.approx.ndim();
    if dec.input_dims.len() != nd || dec.levels == 0 {
        return Err(Error::InconsistentDecomposition(format!(
            "approximation rank {} vs input rank {}",
            nd,
            dec.input_dims.len()
        )));
    }
    let (h, g) = (fam.lowpass(), fam.highpass());
    let mut cur = dec.approx.clone();
    for level in (1..=dec.levels).rev() {
        let half = cur.dims().to_vec();
        let expected: Vec<usize> = dec.input_dims.iter().map(|d| d >> level).collect();
        if half != expected {
            return Err(Error::InconsistentDecomposition(format!(
                "level {level} approximation has dims {half:?}, expected {expected:?}"
            )));
        }
        let dims: Vec<usize> = half.iter().map(|d| d * 2).collect();
        let mut data = vec![0.0; dims.iter().product()];
        put_band(&mut data, &dims, Orientation::new(nd, 0), cur.data());
        for o in Orientation::details(nd) {
            let band = dec.details.get(&(level, o)).ok_or_else(|| {
                Error::InconsistentDecomposition(format!("missing band {o} at level {level}"))
            })?;
            if band.dims() != half.as_slice() {
                return Err(Error::InconsistentDecomposition(format!(
                    "band {o} at level {level} has dims {:?}, expected {half:?}",
                    band.dims()
                )));
            }
            put_band(&mut data, &dims, o, band.data());
        }
        for axis in (0..nd).rev() {
            synthesize_axis(&mut data, &dims, axis, &h, &g);
        }
        cur = Volume::with_grid(dims, data, dec.approx.grid())?;
    }
    Ok(cur)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    #[default]
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub mode: ThresholdMode,
    pub lambda: f64,
}

impl ThresholdRule {
    pub fn new(mode: ThresholdMode, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "threshold must be a finite non-negative number, got {lambda}"
            )));
        }
        Ok(ThresholdRule { mode, lambda })
    }

    pub fn hard(lambda: f64) -> Result<Self> {
        Self::new(ThresholdMode::Hard, lambda)
    }

    pub fn soft(lambda: f64) -> Result<Self> {
        Self::new(ThresholdMode::Soft, lambda)
    }
}

/// Hard: keep `w` when `|w| > lambda`. Soft: shrink towards zero by `lambda`.
/// Both return 0 for `|w| <= lambda`.
pub fn threshold(w: f64, rule: ThresholdRule) -> f64 {
    if w.abs() <= rule.lambda {
        return 0.0;
    }
    match rule.mode {
        ThresholdMode::Hard => w,
        ThresholdMode::Soft => w.signum() * (w.abs() - rule.lambda),
    }
}

/// Noise level from the finest all-highpass band, `median(|d|) / 0.6745`,
/// times `sqrt(2 ln N)` with `N` the input sample count.
pub fn universal_threshold(dec: &WaveletDecomposition) -> f64 {
    let nd = dec.approx.ndim();
    let band = match dec.detail(1, Orientation::finest_diagonal(nd)) {
        Some(b) => b,
        None => return 0.0,
    };
    let mut mags: Vec<f64> = band.data().iter().map(|x| x.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let m = mags.len();
    let median = if m % 2 == 1 {
        mags[m / 2]
    } else {
        0.5 * (mags[m / 2 - 1] + mags[m / 2])
    };
    let n: usize = dec.input_dims.iter().product();
    median / 0.6745 * (2.0 * (n as f64).ln()).sqrt()
}

/// Threshold every detail coefficient, keep the approximation band, invert.
///
/// When the rule leaves every coefficient unchanged the operator is the
/// identity and the input is returned as is, so that a no-op threshold does
/// not add transform round-off.
pub fn wavelet_denoise(
    v: &Volume,
    fam: WaveletFamily,
    levels: usize,
    rule: ThresholdRule,
) -> Result<Volume> {
    let dec = dwt(v, fam, levels)?;
    denoise_decomposition(v, &dec, fam, rule)
}

/// [`wavelet_denoise`] for a decomposition of `v` that is already computed.
pub(crate) fn denoise_decomposition(
    v: &Volume,
    dec: &WaveletDecomposition,
    fam: WaveletFamily,
    rule: ThresholdRule,
) -> Result<Volume> {
    let unchanged = dec
        .details()
        .values()
        .all(|d| d.data().iter().all(|&w| threshold(w, rule) == w));
    if unchanged {
        return Ok(v.clone());
    }
    idwt(&dec.map_details(|w| threshold(w, rule))?, fam)
}

/// `||f - P_J f||_2` on `[0,1]^d` for each `J`, where `P_J` keeps only the
/// level-`J` approximation band.
///
/// `f` is represented by its exact cell means on `samples` cells per axis,
/// so `P_J f` is the mean of `f` over blocks of `2^J` cells. The distance is
/// taken against `f` itself (not its samples) by quadrature inside every
/// cell, which keeps the fine-grid residual in the error as the continuous
/// estimate has it.
pub fn jackson_decay_check(
    f: &AnalyticFn,
    fam: WaveletFamily,
    levels: &[usize],
    samples: usize,
) -> Result<Vec<f64>> {
    let d = f.arity();
    let dims = vec![samples; d];
    let mut cell = vec![0i64; d];
    let v = Volume::from_index_fn(dims, GridKind::CellCentered, |i| {
        for (c, &k) in cell.iter_mut().zip(i) {
            *c = k as i64;
        }
        gl4_mean(&cell, samples, |x| f.eval(x))
    })?;
    let mut idx = vec![0usize; d];
    levels
        .iter()
        .map(|&j| {
            let dec = dwt(&v, fam, j)?;
            let proj = idwt(&dec.zero_details()?, fam)?;
            let sq: f64 = proj
                .data()
                .iter()
                .enumerate()
                .map(|(flat, &p)| {
                    unravel_into(flat, v.dims(), &mut idx);
                    let c: Vec<i64> = idx.iter().map(|&k| k as i64).collect();
                    gl4_mean(&c, samples, |x| (f.eval(x) - p).powi(2))
                })
                .sum();
            Ok((sq / v.len() as f64).sqrt())
        })
        .collect()
}

/// Largest `J <= cap` for which every axis is divisible by `2^J` (0 if none).
pub fn max_levels(dims: &[usize], cap: usize) -> usize {
    (1..=cap)
        .take_while(|&j| dims.iter().all(|d| d % (1 << j) == 0))
        .last()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{lp_distance, Norm};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const R2: f64 = std::f64::consts::SQRT_2;

    fn random_volume(dims: Vec<usize>, seed: u64) -> Volume {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dims.iter().product();
        Volume::new(dims, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn max_diff(a: &Volume, b: &Volume) -> f64 {
        lp_distance(a, b, Norm::Inf).unwrap()
    }

    #[test]
    fn filters_are_orthonormal() {
        for fam in [WaveletFamily::Haar, WaveletFamily::Daubechies4] {
            let h = fam.lowpass();
            let g = fam.highpass();
            let dot = |a: &[f64], b: &[f64], shift: usize| -> f64 {
                (0..a.len())
                    .filter(|i| i + shift < b.len())
                    .map(|i| a[i + shift] * b[i])
                    .sum()
            };
            assert!((dot(&h, &h, 0) - 1.0).abs() < 1e-15);
            assert!((dot(&g, &g, 0) - 1.0).abs() < 1e-15);
            assert!(dot(&h, &g, 0).abs() < 1e-15);
            for m in (2..h.len()).step_by(2) {
                assert!(dot(&h, &h, m).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn haar_hand_examples() {
        let v = Volume::new(vec![4], vec![1.0; 4]).unwrap();
        let d = dwt(&v, WaveletFamily::Haar, 1).unwrap();
        let a = d.approx().data();
        assert!((a[0] - R2).abs() < 1e-15 && (a[1] - R2).abs() < 1e-15);
        let h = Orientation::new(1, 1);
        assert_eq!(d.detail(1, h).unwrap().data(), &[0.0, 0.0]);

        let v = Volume::new(vec![2], vec![1.0, -1.0]).unwrap();
        let d = dwt(&v, WaveletFamily::Haar, 1).unwrap();
        assert!(d.approx().data()[0].abs() < 1e-15);
        assert!((d.detail(1, h).unwrap().data()[0] - R2).abs() < 1e-15);

        let mut details = BTreeMap::new();
        details.insert((1, h), Volume::new(vec![2], vec![0.0, 0.0]).unwrap());
        let dec = WaveletDecomposition::new(
            1,
            Volume::new(vec![2], vec![R2, R2]).unwrap(),
            details,
            vec![4],
        );
        let back = idwt(&dec, WaveletFamily::Haar).unwrap();
        for x in back.data() {
            assert!((x - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_dyadic() {
        let v = Volume::new(vec![12], vec![0.0; 12]).unwrap();
        assert!(dwt(&v, WaveletFamily::Haar, 2).is_ok());
        assert!(matches!(
            dwt(&v, WaveletFamily::Haar, 3),
            Err(Error::NonDyadic { len: 12, levels: 3 })
        ));
        assert!(dwt(&v, WaveletFamily::Haar, 0).is_err());
    }

    #[test]
    fn idwt_detects_inconsistency() {
        let v = random_volume(vec![8, 8], 1);
        let mut dec = dwt(&v, WaveletFamily::Haar, 2).unwrap();
        let key = *dec.details.keys().next().unwrap();
        dec.details.remove(&key);
        assert!(matches!(
            idwt(&dec, WaveletFamily::Haar),
            Err(Error::InconsistentDecomposition(_))
        ));
        let mut dec = dwt(&v, WaveletFamily::Haar, 2).unwrap();
        dec.approx = Volume::new(vec![3, 3], vec![0.0; 9]).unwrap();
        assert!(idwt(&dec, WaveletFamily::Haar).is_err());
    }

    #[test]
    fn three_d_orientation_labels() {
        let v = random_volume(vec![4, 4, 4], 2);
        let d = dwt(&v, WaveletFamily::Haar, 1).unwrap();
        let labels: std::collections::BTreeSet<String> =
            d.details().keys().map(|(_, o)| o.to_string()).collect();
        let expected: std::collections::BTreeSet<String> =
            ["HHH", "HHL", "HLH", "LHH", "LLH", "LHL", "HLL"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        assert_eq!(labels, expected);
        assert_eq!(d.approx().dims(), &[2, 2, 2]);
        let two: Vec<String> = Orientation::details(2).map(|o| o.to_string()).collect();
        assert_eq!(two.len(), 3);
        for l in ["HL", "LH", "HH"] {
            assert!(two.iter().any(|x| x == l));
        }
        assert_eq!(
            Orientation::details(1)
                .map(|o| o.to_string())
                .collect::<Vec<_>>(),
            vec!["H"]
        );
    }

    #[test]
    fn perfect_reconstruction_and_parseval() {
        for fam in [WaveletFamily::Haar, WaveletFamily::Daubechies4] {
            for (dims, j) in [
                (vec![8], 3),
                (vec![16], 2),
                (vec![8, 16], 3),
                (vec![16, 16, 16], 2),
            ] {
                let v = random_volume(dims, 9);
                let dec = dwt(&v, fam, j).unwrap();
                assert_eq!(dec.coefficient_count(), v.len());
                let e_in: f64 = v.data().iter().map(|x| x * x).sum();
                assert!((dec.energy() - e_in).abs() < 1e-9);
                let back = idwt(&dec, fam).unwrap();
                assert!(max_diff(&back, &v) < 1e-10);
            }
        }
    }

    #[test]
    fn constant_reconstructs_from_approx_alone() {
        let v = Volume::filled(vec![8, 8], 0.3).unwrap();
        for fam in [WaveletFamily::Haar, WaveletFamily::Daubechies4] {
            let dec = dwt(&v, fam, 2).unwrap();
            for band in dec.details().values() {
                assert!(band.data().iter().all(|x| x.abs() < 1e-15));
            }
            let back = idwt(&dec.zero_details().unwrap(), fam).unwrap();
            assert!(back.data().iter().all(|x| (x - 0.3).abs() < 1e-14));
        }
    }

    #[test]
    fn threshold_examples() {
        let h = ThresholdRule::hard(0.5).unwrap();
        assert_eq!(threshold(0.7, h), 0.7);
        assert_eq!(threshold(0.3, h), 0.0);
        assert_eq!(threshold(-0.6, h), -0.6);
        let s = ThresholdRule::soft(0.5).unwrap();
        assert!((threshold(0.7, s) - 0.2).abs() < 1e-15);
        assert!((threshold(-0.7, s) + 0.2).abs() < 1e-15);
        assert_eq!(threshold(0.5, s), 0.0);
        for w in [-3.0, -0.1, 0.0, 2.5] {
            assert_eq!(threshold(w, ThresholdRule::hard(0.0).unwrap()), w);
            assert_eq!(threshold(w, ThresholdRule::soft(0.0).unwrap()), w);
        }
        assert!(ThresholdRule::hard(-1.0).is_err());
    }

    #[test]
    fn denoise_identity_and_constants() {
        let v = random_volume(vec![16, 8], 4);
        for fam in [WaveletFamily::Haar, WaveletFamily::Daubechies4] {
            // A zero threshold changes no coefficient, so the input comes back bit for bit.
            let out = wavelet_denoise(&v, fam, 2, ThresholdRule::soft(0.0).unwrap()).unwrap();
            assert_eq!(out, v);
            let out = wavelet_denoise(&v, fam, 2, ThresholdRule::soft(1e-3).unwrap()).unwrap();
            assert_ne!(out, v);
        }
        let c = Volume::filled(vec![8, 8, 8], 0.6).unwrap();
        let out = wavelet_denoise(
            &c,
            WaveletFamily::Haar,
            2,
            ThresholdRule::hard(5.0).unwrap(),
        )
        .unwrap();
        assert!(out.data().iter().all(|x| (x - 0.6).abs() < 1e-14));
    }

    #[test]
    fn haar_large_threshold_gives_block_means() {
        let v = random_volume(vec![6, 4], 8);
        let out = wavelet_denoise(
            &v,
            WaveletFamily::Haar,
            1,
            ThresholdRule::hard(1e9).unwrap(),
        )
        .unwrap();
        let (h, w) = (6, 4);
        for r in 0..h {
            for c in 0..w {
                let (br, bc) = (r / 2 * 2, c / 2 * 2);
                let m = (v.data()[br * w + bc]
                    + v.data()[br * w + bc + 1]
                    + v.data()[(br + 1) * w + bc]
                    + v.data()[(br + 1) * w + bc + 1])
                    / 4.0;
                assert!((out.data()[r * w + c] - m).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn jackson_decay_for_haar() {
        let f = AnalyticFn::sine_product(1).unwrap();
        let errs = jackson_decay_check(&f, WaveletFamily::Haar, &[1, 2, 3, 4], 512).unwrap();
        // Each extra level doubles the cell width and so the error.
        for w in errs.windows(2) {
            let r = w[1] / w[0];
            assert!((1.8..=2.2).contains(&r), "ratio {r}");
        }
        let c = AnalyticFn::constant(1, 0.4).unwrap();
        let errs = jackson_decay_check(&c, WaveletFamily::Haar, &[1, 2, 3], 64).unwrap();
        assert!(errs.iter().all(|&e| e < 1e-14));
    }

    #[test]
    fn level_selection() {
        assert_eq!(max_levels(&[128, 128], 2), 2);
        assert_eq!(max_levels(&[20, 20], 2), 2);
        assert_eq!(max_levels(&[10, 20], 2), 1);
        assert_eq!(max_levels(&[15], 2), 0);
    }

    #[test]
    fn universal_threshold_scales_with_noise() {
        let v = random_volume(vec![64, 64], 12);
        let dec = dwt(&v, WaveletFamily::Haar, 1).unwrap();
        let lam = universal_threshold(&dec);
        // Uniform(-1,1) noise has sigma = 1/sqrt(3).
        let sigma = 1.0 / 3f64.sqrt();
        let ideal = sigma * (2.0 * (4096f64).ln()).sqrt();
        assert!((lam / ideal - 1.0).abs() < 0.2, "lambda {lam} vs {ideal}");
        let c = Volume::filled(vec![8, 8], 1.0).unwrap();
        assert_eq!(
            universal_threshold(&dwt(&c, WaveletFamily::Haar, 1).unwrap()),
            0.0
        );
    }

    proptest! {
        #[test]
        fn threshold_properties(w in -10.0f64..10.0, lam in 0.0f64..5.0) {
            let h = ThresholdRule::hard(lam).unwrap();
            let s = ThresholdRule::soft(lam).unwrap();
            prop_assert_eq!(threshold(threshold(w, h), h), threshold(w, h));
            prop_assert!(threshold(w, h).abs() <= w.abs());
            prop_assert!(threshold(w, s).abs() <= w.abs());
            let twice = threshold(threshold(w, s), s);
            let once = threshold(w, ThresholdRule::soft(2.0 * lam).unwrap());
            prop_assert!((twice - once).abs() < 1e-12);
        }
    }
}
