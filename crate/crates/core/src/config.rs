//! JSON operator configurations, e.g.
//! `{"op":"gaussian","sigma":1.0,"boundary":"reflect"}` or
//! `{"op":"wavelet","family":"haar","levels":2,"mode":"hard","lambda":"universal"}`.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::operators::{
    bilateral_filter, gaussian_filter, iterated_gaussian, sk_cell_average, sk_point_sample,
    BilateralParams, BoundaryPolicy, EvalPoints, SkSource,
};
use crate::volume::{GridKind, Volume};
use crate::wavelet::{
    denoise_decomposition, dwt, universal_threshold, ThresholdMode, ThresholdRule, WaveletFamily,
};

/// Which Kantorovich form to apply to a sample array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkForm {
    /// Samples are cell means on an `n^d` grid, evaluated at cell centers.
    Cell,
    /// Samples sit on the `(n+1)^d` node lattice, evaluated at the nodes.
    #[default]
    Point,
}

/// Threshold selection for the wavelet denoiser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Universal,
    Value(f64),
}

impl Serialize for LambdaSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LambdaSpec::Universal => s.serialize_str("universal"),
            LambdaSpec::Value(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for LambdaSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = LambdaSpec;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"universal\" or a non-negative number")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<LambdaSpec, E> {
                match s {
                    "universal" => Ok(LambdaSpec::Universal),
                    _ => Err(E::invalid_value(de::Unexpected::Str(s), &self)),
                }
            }
            fn visit_f64<E: de::Error>(self, x: f64) -> std::result::Result<LambdaSpec, E> {
                if x >= 0.0 && x.is_finite() {
                    Ok(LambdaSpec::Value(x))
                } else {
                    Err(E::invalid_value(de::Unexpected::Float(x), &self))
                }
            }
            fn visit_u64<E: de::Error>(self, x: u64) -> std::result::Result<LambdaSpec, E> {
                Ok(LambdaSpec::Value(x as f64))
            }
            fn visit_i64<E: de::Error>(self, x: i64) -> std::result::Result<LambdaSpec, E> {
                self.visit_f64(x as f64)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OperatorConfig {
    Identity,
    Gaussian {
        sigma: f64,
        #[serde(default)]
        boundary: BoundaryPolicy,
    },
    Bilateral {
        sigma_spatial: f64,
        sigma_range: f64,
        #[serde(default)]
        boundary: BoundaryPolicy,
    },
    Kantorovich {
        /// Resolution; derived from the input shape when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        kernel: Kernel,
        #[serde(default)]
        form: SkForm,
    },
    IteratedGaussian {
        sigma: f64,
        iterations: usize,
        #[serde(default)]
        boundary: BoundaryPolicy,
    },
    Wavelet {
        #[serde(default)]
        family: WaveletFamily,
        levels: usize,
        #[serde(default)]
        mode: ThresholdMode,
        lambda: LambdaSpec,
        /// Threshold actually used; filled in when the config is applied.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda_value: Option<f64>,
    },
}

impl OperatorConfig {
    pub fn parse(json: &str) -> Result<Self> {
        let cfg: OperatorConfig =
            serde_json::from_str(json).map_err(|e| Error::Config(format!("operator JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("operator config serializes")
    }

    pub fn name(&self) -> &'static str {
        match self {
            OperatorConfig::Identity => "identity",
            OperatorConfig::Gaussian { .. } => "gaussian",
            OperatorConfig::Bilateral { .. } => "bilateral",
            OperatorConfig::Kantorovich { .. } => "kantorovich",
            OperatorConfig::IteratedGaussian { .. } => "iterated_gaussian",
            OperatorConfig::Wavelet { .. } => "wavelet",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
        };
        match self {
            OperatorConfig::Identity => Ok(()),
            OperatorConfig::Gaussian { sigma, .. } => positive("sigma", *sigma),
            OperatorConfig::Bilateral {
                sigma_spatial,
                sigma_range,
                ..
            } => {
                positive("sigma_spatial", *sigma_spatial)?;
                positive("sigma_range", *sigma_range)
            }
            OperatorConfig::Kantorovich { n, .. } => match n {
                Some(0) => Err(Error::Config("kantorovich n must be >= 1".into())),
                _ => Ok(()),
            },
            OperatorConfig::IteratedGaussian {
                sigma, iterations, ..
            } => {
                positive("sigma", *sigma)?;
                if *iterations == 0 {
                    return Err(Error::Config("iterations must be >= 1".into()));
                }
                Ok(())
            }
            OperatorConfig::Wavelet { levels, .. } => {
                if *levels == 0 {
                    return Err(Error::Config("wavelet levels must be >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Applies the operator; output has the input's shape. Also returns the
    /// config with every derived quantity (resolution, threshold) filled in.
    pub fn apply(&self, v: &Volume) -> Result<(Volume, OperatorConfig)> {
        self.validate()?;
        match self {
            OperatorConfig::Identity => Ok((v.clone(), self.clone())),
            OperatorConfig::Gaussian { sigma, boundary } => {
                Ok((gaussian_filter(v, *sigma, *boundary)?, self.clone()))
            }
            OperatorConfig::Bilateral {
                sigma_spatial,
                sigma_range,
                boundary,
            } => {
                let p = BilateralParams::new(*sigma_spatial, *sigma_range)?;
                Ok((bilateral_filter(v, p, *boundary)?, self.clone()))
            }
            OperatorConfig::IteratedGaussian {
                sigma,
                iterations,
                boundary,
            } => Ok((
                iterated_gaussian(v, *sigma, *iterations, *boundary)?,
                self.clone(),
            )),
            OperatorConfig::Kantorovich { n, kernel, form } => {
                let len = v.dims()[0];
                if v.dims().iter().any(|&d| d != len) {
                    return Err(Error::Config(format!(
                        "kantorovich operator needs equal axis lengths, got {:?}",
                        v.dims()
                    )));
                }
                let (grid, derived) = match form {
                    SkForm::Point => (GridKind::NodeCentered, len.saturating_sub(1)),
                    SkForm::Cell => (GridKind::CellCentered, len),
                };
                if derived == 0 {
                    return Err(Error::Config("kantorovich input too small".into()));
                }
                if let Some(n) = n {
                    if *n != derived {
                        return Err(Error::Config(format!(
                            "kantorovich n = {n} does not match input shape {:?} ({form:?} form needs n = {derived})",
                            v.dims()
                        )));
                    }
                }
                let mut samples = v.clone();
                samples.set_grid(grid);
                let points = EvalPoints::Grid {
                    dims: v.dims().to_vec(),
                    grid,
                };
                let mut out = match form {
                    SkForm::Point => sk_point_sample(&samples, derived, kernel, &points)?,
                    SkForm::Cell => {
                        sk_cell_average(SkSource::Samples(&samples), derived, kernel, &points)?
                    }
                };
                out.set_grid(v.grid());
                Ok((
                    out,
                    OperatorConfig::Kantorovich {
                        n: Some(derived),
                        kernel: *kernel,
                        form: *form,
                    },
                ))
            }
            OperatorConfig::Wavelet {
                family,
                levels,
                mode,
                lambda,
                ..
            } => {
                let dec = dwt(v, *family, *levels)?;
                let lam = match lambda {
                    LambdaSpec::Universal => universal_threshold(&dec),
                    LambdaSpec::Value(x) => *x,
                };
                let rule = ThresholdRule::new(*mode, lam)?;
                let out = denoise_decomposition(v, &dec, *family, rule)?;
                Ok((
                    out,
                    OperatorConfig::Wavelet {
                        family: *family,
                        levels: *levels,
                        mode: *mode,
                        lambda: *lambda,
                        lambda_value: Some(lam),
                    },
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_forms() {
        let g =
            OperatorConfig::parse(r#"{"op":"gaussian","sigma":1.0,"boundary":"reflect"}"#).unwrap();
        assert_eq!(
            g,
            OperatorConfig::Gaussian {
                sigma: 1.0,
                boundary: BoundaryPolicy::Reflect
            }
        );
        let b =
            OperatorConfig::parse(r#"{"op":"bilateral","sigma_spatial":1.0,"sigma_range":0.05}"#)
                .unwrap();
        assert_eq!(b.name(), "bilateral");
        let k = OperatorConfig::parse(
            r#"{"op":"kantorovich","n":32,"kernel":"bspline3","form":"cell"}"#,
        )
        .unwrap();
        assert_eq!(
            k,
            OperatorConfig::Kantorovich {
                n: Some(32),
                kernel: Kernel::CubicBSpline,
                form: SkForm::Cell
            }
        );
        let i = OperatorConfig::parse(r#"{"op":"iterated_gaussian","sigma":1.0,"iterations":3}"#)
            .unwrap();
        assert_eq!(i.name(), "iterated_gaussian");
        let w = OperatorConfig::parse(
            r#"{"op":"wavelet","family":"db4","levels":2,"mode":"soft","lambda":0.1}"#,
        )
        .unwrap();
        assert!(matches!(
            w,
            OperatorConfig::Wavelet {
                family: WaveletFamily::Daubechies4,
                lambda: LambdaSpec::Value(x),
                ..
            } if x == 0.1
        ));
        let u = OperatorConfig::parse(
            r#"{"op":"wavelet","family":"haar","levels":2,"mode":"hard","lambda":"universal"}"#,
        )
        .unwrap();
        assert_eq!(
            u.to_json(),
            r#"{"op":"wavelet","family":"haar","levels":2,"mode":"hard","lambda":"universal"}"#
        );
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            r#"{"op":"gaussian","sigma":-1}"#,
            r#"{"op":"median"}"#,
            r#"{"op":"wavelet","levels":0,"lambda":1}"#,
            r#"{"op":"wavelet","levels":1,"lambda":"minimax"}"#,
            r#"{"op":"wavelet","levels":1,"lambda":-2}"#,
            r#"{"op":"iterated_gaussian","sigma":1,"iterations":0}"#,
            r#"{"op":"kantorovich","kernel":"lanczos"}"#,
            "not json",
        ] {
            assert!(
                matches!(OperatorConfig::parse(bad), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn kantorovich_apply_checks_shape() {
        let v = Volume::filled(vec![9, 9], 0.5).unwrap();
        let k = OperatorConfig::parse(r#"{"op":"kantorovich","n":8,"kernel":"box"}"#).unwrap();
        let (out, resolved) = k.apply(&v).unwrap();
        assert_eq!(out.data(), v.data());
        assert_eq!(resolved, k);
        let wrong = OperatorConfig::parse(r#"{"op":"kantorovich","n":7,"kernel":"box"}"#).unwrap();
        assert!(matches!(wrong.apply(&v), Err(Error::Config(_))));
        let rect = Volume::filled(vec![9, 8], 0.5).unwrap();
        assert!(k.apply(&rect).is_err());
    }

    #[test]
    fn wavelet_apply_records_threshold() {
        let v = Volume::filled(vec![8, 8], 0.5).unwrap();
        let w =
            OperatorConfig::parse(r#"{"op":"wavelet","levels":1,"lambda":"universal"}"#).unwrap();
        let (out, resolved) = w.apply(&v).unwrap();
        assert!(out.data().iter().all(|x| (x - 0.5).abs() < 1e-14));
        assert!(resolved
            .to_json()
            .contains(r#""lambda":"universal","lambda_value":0.0"#));
    }
}
