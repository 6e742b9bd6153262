//! Boundary pressure signals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A named boundary pressure `p_D(t, x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    /// `10 sin(mu_f pi (x + y - 10 t))` where `t > x + y` and `x < 3/5`.
    CornerPlane {
        mu_f: f64,
    },
    /// `10 exp(-(1 + sin(20 pi (x^2 + (y - 1)^2 - 10 t))))` where `y - 1 < 0.1`.
    LeftGaussian,
    Zero,
    Constant {
        value: f64,
    },
}

impl Source {
    /// Builds a source from its name and numeric parameters.
    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str| {
            params
                .get(key)
                .copied()
                .ok_or_else(|| Error::Config(format!("source '{name}' needs parameter '{key}'")))
        };
        let allowed: &[&str] = match name {
            "corner_plane" => &["mu_f"],
            "constant" | "custom-constant" | "custom_constant" => &["value"],
            "left_gaussian" | "zero" => &[],
            _ => return Err(Error::UnknownSource(name.to_string())),
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!(
                "source '{name}' has no parameter '{k}'"
            )));
        }
        Ok(match name {
            "corner_plane" => Source::CornerPlane { mu_f: get("mu_f")? },
            "left_gaussian" => Source::LeftGaussian,
            "zero" => Source::Zero,
            _ => Source::Constant {
                value: get("value")?,
            },
        })
    }

    pub fn eval<T: Scalar>(&self, t: T, x: [T; 2]) -> T {
        let ten = T::lit(10.0);
        let pi = T::lit(std::f64::consts::PI);
        match *self {
            Source::CornerPlane { mu_f } => {
                if t > x[0] + x[1] && x[0] < T::lit(0.6) {
                    ten * (T::lit(mu_f) * pi * (x[0] + x[1] - ten * t)).sin()
                } else {
                    T::zero()
                }
            }
            Source::LeftGaussian => {
                let dy = x[1] - T::one();
                if dy < T::lit(0.1) {
                    let arg = T::lit(20.0) * pi * (x[0] * x[0] + dy * dy - ten * t);
                    ten * (-(T::one() + arg.sin())).exp()
                } else {
                    T::zero()
                }
            }
            Source::Zero => T::zero(),
            Source::Constant { value } => T::lit(value),
        }
    }

    /// Temporal angular frequency of the signal, if it has one.
    pub fn angular_frequency(&self) -> Option<f64> {
        match *self {
            Source::CornerPlane { mu_f } => Some(10.0 * mu_f * std::f64::consts::PI),
            Source::LeftGaussian => Some(200.0 * std::f64::consts::PI),
            _ => None,
        }
    }
}

/// `p_D(t, x, y)` for the source `name` with `params`.
pub fn source_pd(
    name: &str,
    params: &BTreeMap<String, f64>,
    t: f64,
    x: f64,
    y: f64,
) -> Result<f64> {
    Ok(Source::from_name(name, params)?.eval(t, [x, y]))
}
