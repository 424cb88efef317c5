//! Image quality and speckle metrics: MSE, PSNR, speckle index (SI), speckle
//! suppression index (SSI), speckle mean preservation index (SMPI) and
//! equivalent number of looks (ENL).
//!
//! Standard deviations are population (divide by N), which makes
//! `ENL = 1 / SI^2` an exact identity.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::volume::{extract_roi, same_dims, Roi, Volume};

/// Means below this magnitude make the ratio metrics undefined.
pub const ZERO_MEAN_CUTOFF: f64 = 1e-12;

/// A standard deviation at or below `REL_ZERO_SD * |mean|` is rounding noise
/// of a constant region and is reported as exactly zero.
pub const REL_ZERO_SD: f64 = 1e-12;

/// A metric value that may be `+inf` (perfect PSNR, ENL of a flat region).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    PosInfinity,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::PosInfinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::PosInfinity)
    }

    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(x) => f.write_str(&sig6(*x)),
            Extended::PosInfinity => f.write_str("inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(x) => s.serialize_f64(*x),
            Extended::PosInfinity => s.serialize_str("inf"),
        }
    }
}

/// Formats with 6 significant digits in the style of C's `%g`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x > 0.0 {
            "inf".into()
        } else if x < 0.0 {
            "-inf".into()
        } else {
            "nan".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let mant = trim_zeros(mant.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Mean and population standard deviation, with rounding-level deviations of
/// constant data snapped to zero.
pub fn mean_sd(v: &Volume) -> (f64, f64) {
    let n = v.len() as f64;
    let mu = v.mean();
    let var = v.data().iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd <= REL_ZERO_SD * mu.abs() {
        (mu, 0.0)
    } else {
        (mu, sd)
    }
}

pub fn mse(f: &Volume, g: &Volume) -> Result<f64> {
    same_dims(f, g)?;
    Ok(f.data()
        .iter()
        .zip(g.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / f.len() as f64)
}

/// `10 log10(L^2 / mse)`; `+inf` for identical inputs.
pub fn psnr(f: &Volume, g: &Volume, peak: f64) -> Result<Extended> {
    if peak.is_nan() || peak <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "PSNR peak must be positive, got {peak}"
        )));
    }
    Ok(psnr_from_mse(mse(f, g)?, peak))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> Extended {
    if mse == 0.0 {
        Extended::PosInfinity
    } else {
        Extended::Finite(10.0 * (peak * peak / mse).log10())
    }
}

/// Speckle index `sigma / mu`.
pub fn si(v: &Volume) -> Result<f64> {
    let (mu, sd) = mean_sd(v);
    if mu.abs() < ZERO_MEAN_CUTOFF {
        return Err(Error::ZeroMeanRegion);
    }
    Ok(sd / mu)
}

/// `si(filtered) / si(original)`.
pub fn ssi(original: &Volume, filtered: &Volume) -> Result<f64> {
    let so = si(original)?;
    if so == 0.0 {
        return Err(Error::ZeroSIOriginal);
    }
    Ok(si(filtered)? / so)
}

/// `mean(filtered) / mean(original)`.
pub fn smpi(original: &Volume, filtered: &Volume) -> Result<f64> {
    let mo = original.mean();
    if mo.abs() < ZERO_MEAN_CUTOFF {
        return Err(Error::ZeroMeanRegion);
    }
    Ok(filtered.mean() / mo)
}

/// `mu^2 / sigma^2`; `+inf` for a flat nonzero region.
pub fn enl(v: &Volume) -> Result<Extended> {
    let (mu, sd) = mean_sd(v);
    if sd == 0.0 {
        if mu.abs() < ZERO_MEAN_CUTOFF {
            return Err(Error::UndefinedEnl);
        }
        return Ok(Extended::PosInfinity);
    }
    Ok(Extended::Finite(mu * mu / (sd * sd)))
}

/// All six metrics for one (original, filtered, ROI) triple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub roi: String,
    pub operator: String,
    /// Speckle index of the filtered ROI.
    pub si: f64,
    pub ssi: f64,
    pub smpi: f64,
    pub enl: Extended,
    pub mse: f64,
    pub psnr: Extended,
    /// JSON of the operator configuration that produced `filtered`.
    pub operator_config: String,
}

/// Computes every metric on the ROI windows of both slices. SI and ENL
/// describe the filtered ROI.
pub fn report(
    original_slice: &Volume,
    filtered_slice: &Volume,
    roi: &Roi,
    peak: f64,
    operator: &str,
    operator_config: &str,
) -> Result<MetricsReport> {
    same_dims(original_slice, filtered_slice)?;
    let o = extract_roi(original_slice, roi)?;
    let f = extract_roi(filtered_slice, roi)?;
    report_windows(&o, &f, &roi.name, peak, operator, operator_config)
}

/// As [`report`], for already-extracted ROI windows.
pub fn report_windows(
    original: &Volume,
    filtered: &Volume,
    roi_name: &str,
    peak: f64,
    operator: &str,
    operator_config: &str,
) -> Result<MetricsReport> {
    let m = mse(original, filtered)?;
    Ok(MetricsReport {
        roi: roi_name.to_string(),
        operator: operator.to_string(),
        si: si(filtered)?,
        ssi: ssi(original, filtered)?,
        smpi: smpi(original, filtered)?,
        enl: enl(filtered)?,
        mse: m,
        psnr: if peak > 0.0 {
            psnr_from_mse(m, peak)
        } else {
            return Err(Error::InvalidParameter(format!(
                "PSNR peak must be positive, got {peak}"
            )));
        },
        operator_config: operator_config.to_string(),
    })
}
