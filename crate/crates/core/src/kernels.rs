//! Kernels for the sampling-Kantorovich operators and the truncated discrete
//! Gaussian stencil, with numerical checks of the classical kernel conditions:
//! unit summation over integer shifts, boundedness, and polynomial decay.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Kernel {
    /// Normalized Gaussian `exp(-x^2 / 2 s^2) / (sqrt(2 pi) s)`.
    GaussianMollifier { sigma: f64 },
    /// Characteristic function of `[-1/2, 1/2)`.
    Box,
    /// Centered cubic B-spline, support `(-2, 2)`.
    CubicBSpline,
}

impl Kernel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gaussian kernel sigma must be positive, got {sigma}"
            )));
        }
        Ok(Kernel::GaussianMollifier { sigma })
    }

    /// Half-width of the support; infinite for the Gaussian.
    pub fn support_radius(&self) -> f64 {
        match self {
            Kernel::GaussianMollifier { .. } => f64::INFINITY,
            Kernel::Box => 0.5,
            Kernel::CubicBSpline => 2.0,
        }
    }

    /// Radius beyond which the kernel is treated as zero when summing shifts.
    /// Equal to the support for compact kernels; `10 sigma` for the Gaussian,
    /// where the tail is below `1e-22` relative to the peak.
    pub fn effective_radius(&self) -> f64 {
        match *self {
            Kernel::GaussianMollifier { sigma } => 10.0 * sigma,
            k => k.support_radius(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Kernel::GaussianMollifier { sigma } => {
                (-(x * x) / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
            }
            Kernel::Box => {
                if (-0.5..0.5).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::CubicBSpline => {
                let t = x.abs();
                if t < 1.0 {
                    2.0 / 3.0 - t * t + 0.5 * t * t * t
                } else if t < 2.0 {
                    let u = 2.0 - t;
                    u * u * u / 6.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Integer shifts `j` with `|x - j| <= effective_radius`, paired with `xi(x - j)`.
    /// Zero weights of compact kernels are dropped.
    pub fn shifts(&self, x: f64) -> impl Iterator<Item = (i64, f64)> + '_ {
        let r = self.effective_radius();
        let lo = (x - r).ceil() as i64;
        let hi = (x + r).floor() as i64;
        (lo..=hi).filter_map(move |j| {
            let w = self.eval(x - j as f64);
            (w != 0.0).then_some((j, w))
        })
    }
}

pub fn eval_kernel(k: &Kernel, x: f64) -> f64 {
    k.eval(x)
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::GaussianMollifier { sigma } => write!(f, "gaussian:{sigma}"),
            Kernel::Box => f.write_str("box"),
            Kernel::CubicBSpline => f.write_str("bspline3"),
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(Kernel::Box),
            "bspline3" => Ok(Kernel::CubicBSpline),
            _ => match s.strip_prefix("gaussian:") {
                Some(sigma) => {
                    let sigma: f64 = sigma.parse().map_err(|_| {
                        Error::Config(format!("bad gaussian kernel sigma in {s:?}"))
                    })?;
                    Kernel::gaussian(sigma).map_err(|e| Error::Config(e.to_string()))
                }
                None => Err(Error::Config(format!(
                    "unknown kernel {s:?} (expected gaussian:<sigma>, box or bspline3)"
                ))),
            },
        }
    }
}

impl TryFrom<String> for Kernel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Kernel> for String {
    fn from(k: Kernel) -> String {
        k.to_string()
    }
}

/// Largest `|sum_j xi(x - j) - 1|` over the probe points.
pub fn check_partition_of_unity(k: &Kernel, xs: &[f64]) -> f64 {
    xs.iter()
        .map(|&x| (k.shifts(x).map(|(_, w)| w).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Whether `|xi(x)| <= l * (1 + |x|)^(-q - delta)` at every probe point.
pub fn check_decay(k: &Kernel, q: u32, delta: f64, l: f64, xs: &[f64]) -> bool {
    xs.iter()
        .all(|&x| k.eval(x).abs() <= l * (1.0 + x.abs()).powf(-(q as f64) - delta))
}

/// Symmetric convolution weights on `-K..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStencil {
    half_width: usize,
    weights: Vec<f64>,
}

impl DiscreteStencil {
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `k`, zero outside `-K..=K`.
    pub fn at(&self, k: isize) -> f64 {
        let i = k + self.half_width as isize;
        if i < 0 {
            return 0.0;
        }
        self.weights.get(i as usize).copied().unwrap_or(0.0)
    }
}

/// Sampled Gaussian on `K = max(floor(3 sigma), 1)` taps each side, renormalized
/// to unit sum. `sigma` is in grid-index units.
pub fn discrete_gaussian_stencil(sigma: f64) -> Result<DiscreteStencil> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "stencil sigma must be positive, got {sigma}"
        )));
    }
    let half_width = stencil_half_width(sigma);
    let k = half_width as isize;
    let raw: Vec<f64> = (-k..=k)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    // mirror so the stencil is bit-symmetric regardless of summation order
    for i in 0..half_width {
        weights[2 * half_width - i] = weights[i];
    }
    Ok(DiscreteStencil {
        half_width,
        weights,
    })
}

/// `max(floor(3 sigma), 1)`.
pub(crate) fn stencil_half_width(sigma: f64) -> usize {
    ((3.0 * sigma).floor() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    /// Composite Simpson over `[-r, r]`.
    fn integrate(k: &Kernel, r: f64, n: usize) -> f64 {
        let h = 2.0 * r / n as f64;
        let mut s = k.eval(-r) + k.eval(r);
        for i in 1..n {
            let x = -r + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * k.eval(x);
        }
        s * h / 3.0
    }

    #[test]
    fn point_values() {
        assert_eq!(Kernel::Box.eval(0.0), 1.0);
        assert_eq!(Kernel::Box.eval(0.6), 0.0);
        assert_eq!(Kernel::Box.eval(-0.5), 1.0);
        assert_eq!(Kernel::Box.eval(0.5), 0.0);
        assert!((Kernel::CubicBSpline.eval(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((Kernel::CubicBSpline.eval(1.0) - 1.0 / 6.0).abs() < 1e-15);
        let g = Kernel::gaussian(1.0).unwrap();
        assert!((g.eval(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn compact_kernels_vanish_outside_support() {
        for x in [2.0, 2.5, -2.0, 7.0, -3.1] {
            assert_eq!(Kernel::CubicBSpline.eval(x), 0.0);
        }
        for x in [0.5, 0.51, -0.51, 3.0] {
            assert_eq!(Kernel::Box.eval(x), 0.0);
        }
    }

    #[test]
    fn unit_integral() {
        // Piecewise-polynomial kernels integrate exactly with Simpson on
        // a grid aligned to their knots; the Gaussian tail past 12 sigma is negligible.
        assert!((integrate(&Kernel::CubicBSpline, 2.0, 4000) - 1.0).abs() < 1e-10);
        let g = Kernel::gaussian(0.7).unwrap();
        assert!((integrate(&g, 12.0 * 0.7, 20000) - 1.0).abs() < 1e-10);
        // Box: mass 1 on [-0.5, 0.5), checked by a midpoint rule.
        let n = 100_000;
        let m: f64 = (0..n)
            .map(|i| Kernel::Box.eval(-1.0 + (i as f64 + 0.5) * 2.0 / n as f64))
            .sum::<f64>()
            * 2.0
            / n as f64;
        assert!((m - 1.0).abs() < 1e-10);
    }

    #[test]
    fn partition_of_unity() {
        let xs = uniform(1000);
        assert_eq!(check_partition_of_unity(&Kernel::Box, &xs), 0.0);
        assert!(check_partition_of_unity(&Kernel::CubicBSpline, &xs) < 1e-12);
        let dev = check_partition_of_unity(&Kernel::gaussian(0.4).unwrap(), &xs);
        // Poisson summation: the deviation is about 2 exp(-2 pi^2 sigma^2).
        assert!(dev > 0.05 && dev < 0.1, "gaussian deviation {dev}");
    }

    #[test]
    fn decay_condition() {
        let g = Kernel::gaussian(1.0).unwrap();
        let dense: Vec<f64> = (0..=1000).map(|i| -5.0 + i as f64 * 0.01).collect();
        assert!(check_decay(&g, 1, 1.0, 1.0, &dense));
        assert!(!check_decay(&g, 1, 1.0, 1e-6, &dense));

        // The box equals 1 up to |x| -> 1/2, where (1 + |x|)^-2 -> 4/9, so the
        // bound needs L >= 2.25 on a dense probe set. On the integer lattice
        // only x = 0 is inside the support and L = 1 suffices.
        let lattice: Vec<f64> = (-2..=2).map(f64::from).collect();
        assert!(check_decay(&Kernel::Box, 1, 1.0, 1.0, &lattice));
        let dense_box: Vec<f64> = (0..=400).map(|i| -2.0 + i as f64 * 0.01).collect();
        assert!(!check_decay(&Kernel::Box, 1, 1.0, 1.0, &dense_box));
        assert!(check_decay(&Kernel::Box, 1, 1.0, 2.25, &dense_box));
    }

    #[test]
    fn stencil_shapes() {
        let s = discrete_gaussian_stencil(1.0).unwrap();
        assert_eq!(s.half_width(), 3);
        assert_eq!(s.weights().len(), 7);
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let center = s.weights()[3];
        assert!(s.weights().iter().all(|&w| w <= center));
        for i in 0..3 {
            assert_eq!(s.weights()[3 + i], s.weights()[3 - i]);
        }

        let small = discrete_gaussian_stencil(0.2).unwrap();
        assert_eq!(small.half_width(), 1);
        assert_eq!(small.weights().len(), 3);

        assert!(discrete_gaussian_stencil(0.0).is_err());
        assert!(discrete_gaussian_stencil(-1.0).is_err());
    }

    #[test]
    fn kernel_strings() {
        assert_eq!("box".parse::<Kernel>().unwrap(), Kernel::Box);
        assert_eq!("bspline3".parse::<Kernel>().unwrap(), Kernel::CubicBSpline);
        assert_eq!(
            "gaussian:0.5".parse::<Kernel>().unwrap(),
            Kernel::GaussianMollifier { sigma: 0.5 }
        );
        assert!("gaussian:-1".parse::<Kernel>().is_err());
        assert!("lanczos".parse::<Kernel>().is_err());
        let k: Kernel = serde_json::from_str("\"gaussian:2\"").unwrap();
        assert_eq!(serde_json::to_string(&k).unwrap(), "\"gaussian:2\"");
    }
}
