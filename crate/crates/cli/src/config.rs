use serde::{Deserialize, Serialize};
use zoll_core::setup::defaults;
use zoll_core::sphere::{HarmonicField, Parity, SphereGrid};
use zoll_core::vec4::V4;

use crate::error::{CliError, CliResult};
use crate::formats::{parse, read, FieldFile, CONFIG_SCHEMA, FIELD_SCHEMA};

/// Flat JSON config of a deformation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub n: usize,
    #[serde(rename = "L")]
    pub lmax: usize,
    #[serde(rename = "L_g")]
    pub lg: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    pub t: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Named direction preset, see [`seed_preset`].
    #[serde(default)]
    pub seed: Option<String>,
    /// Path of a `zoll.field/1` file with the direction.
    #[serde(default)]
    pub seed_file: Option<String>,
    /// Chart nodes for re-verification; default `2Q`.
    #[serde(default)]
    pub verify_q: Option<usize>,
    #[serde(default = "default_verify_tol")]
    pub verify_tol: f64,
    #[serde(default)]
    pub out_dir: Option<String>,
}

fn default_verify_tol() -> f64 {
    1e-6
}

pub const CONFIG_PRESETS: &[&str] = &["guillemin-xyz"];
pub const SEED_PRESETS: &[&str] = &["xyz", "x1", "x1-cubed"];

pub fn config_preset(name: &str) -> CliResult<RunConfig> {
    match name {
        "guillemin-xyz" => Ok(RunConfig {
            schema: CONFIG_SCHEMA.into(),
            n: 2,
            lmax: 8,
            lg: 12,
            q: 64,
            t: 0.05,
            tol: 1e-8,
            max_iter: 6,
            seed: Some("xyz".into()),
            seed_file: None,
            verify_q: None,
            verify_tol: default_verify_tol(),
            out_dir: None,
        }),
        _ => Err(CliError::usage(format!(
            "unknown preset `{name}` (known: {})",
            CONFIG_PRESETS.join(", ")
        ))),
    }
}

impl RunConfig {
    pub fn load(path: &str) -> CliResult<Self> {
        parse(path, &read(path)?, CONFIG_SCHEMA)
    }

    /// Checks every field against the solver's preconditions.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |field: &str, msg: &str| Err(CliError::usage(format!("config field `{field}`: {msg}")));
        if self.schema != CONFIG_SCHEMA {
            return bad("schema", &format!("expected \"{CONFIG_SCHEMA}\""));
        }
        if defaults(self.n).is_err() {
            return bad("n", "must be 2 or 3");
        }
        if self.lmax < 1 {
            return bad("L", "must be at least 1");
        }
        if self.lg < self.lmax {
            return bad("L_g", "must be at least L");
        }
        if self.q < 4 * self.lmax + 2 {
            return bad("Q", "must be at least 4L+2");
        }
        if !self.t.is_finite() || self.t.abs() > 1.0 {
            return bad("t", "must be finite with |t| ≤ 1");
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad("tol", "must be positive");
        }
        if !(1..=1000).contains(&self.max_iter) {
            return bad("max_iter", "must be in 1..=1000");
        }
        if !(self.verify_tol.is_finite() && self.verify_tol > 0.0) {
            return bad("verify_tol", "must be positive");
        }
        if let Some(vq) = self.verify_q {
            if vq < self.q {
                return bad("verify_q", "must be at least Q");
            }
        }
        match (&self.seed, &self.seed_file) {
            (Some(_), Some(_)) => bad("seed", "give either `seed` or `seed_file`, not both"),
            (None, None) => bad("seed", "one of `seed` or `seed_file` is required"),
            (Some(s), None) if !SEED_PRESETS.contains(&s.as_str()) => {
                bad("seed", &format!("unknown preset (known: {})", SEED_PRESETS.join(", ")))
            }
            _ => Ok(()),
        }
    }

    /// The deformation direction ρ̇, odd and within the band limit.
    pub fn direction(&self) -> CliResult<HarmonicField> {
        let f = match (&self.seed, &self.seed_file) {
            (Some(s), _) => seed_preset(self.n, s)?,
            (None, Some(path)) => {
                let file: FieldFile = parse(path, &read(path)?, FIELD_SCHEMA)?;
                let f = file.to_field(path)?;
                if f.n() != self.n {
                    return Err(CliError::format(path, "field `n`: does not match the config"));
                }
                f
            }
            (None, None) => return Err(CliError::usage("no deformation direction")),
        };
        if f.parity() != Parity::Odd && f.max_abs_coeff() > 0.0 {
            return Err(CliError::usage("deformation direction must be odd"));
        }
        let top = f
            .coeffs()
            .iter()
            .zip(f.basis().degrees())
            .filter(|(c, _)| **c != 0.0)
            .map(|(_, &l)| l)
            .max()
            .unwrap_or(0);
        if top > self.lmax {
            return Err(CliError::usage(format!("direction has degree {top} above L={}", self.lmax)));
        }
        Ok(f.resized(self.lmax))
    }
}

fn project(n: usize, l: usize, f: impl Fn(&V4) -> f64) -> CliResult<HarmonicField> {
    let g = SphereGrid::new(n, l + 4)?;
    let vals: Vec<f64> = g.points.iter().map(f).collect();
    Ok(HarmonicField::project(&g, &vals, l)?.detect_parity())
}

/// Named odd directions: `xyz` = x₁x₂x₃, `x1` = x₁, `x1-cubed` = x₁³.
pub fn seed_preset(n: usize, name: &str) -> CliResult<HarmonicField> {
    match name {
        "xyz" => project(n, 3, |p| p[0] * p[1] * p[2]),
        "x1" => project(n, 1, |p| p[0]),
        "x1-cubed" => project(n, 3, |p| p[0] * p[0] * p[0]),
        _ => Err(CliError::usage(format!(
            "unknown seed `{name}` (known: {})",
            SEED_PRESETS.join(", ")
        ))),
    }
}
